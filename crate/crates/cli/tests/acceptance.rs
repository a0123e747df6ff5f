//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always reach stdout. Exits nonzero when a
//! criterion fails that is not listed in `KNOWN_FAILURES`.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use contivae::datagen::{
    optimal_dose_grid, CurveFamily, CurveStyle, Dataset, DoseSource, GenerateConfig, Matrix,
    Observations,
};
use contivae::distributions::{
    expected_norm, solve_optimal_norm, standard_normal, tilted_density, tilted_kl,
    TiltedGaussianPrior,
};
use contivae::eval::{aggregate, dpe, mise, EvalRow};
use contivae::model::{uniform_grid, ContiVaeConfig, ContiVaeModel, PriorKind};
use contivae::rng::rng_from_seed;
use contivae_cli::commands::{run_dir, run_repeats, CHECKPOINT_FILE, REPORT_FILE};
use contivae_cli::{
    cmd_evaluate, cmd_generate, cmd_train, EvalTarget, ExperimentConfig, ModelKind, Overrides,
};
use rand::Rng;

/// Criteria expected to fail, with the reason recorded in the project notes.
const KNOWN_FAILURES: &[(u32, &str)] = &[(
    2,
    "r*(3, 20) of the stated objective is 0, outside the stated interval [3.0, 3.3]",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- 1

fn gradient_check() -> Outcome {
    const STEP: f64 = 1e-5;
    let mut worst = String::new();
    let mut bad = 0;
    let mut total = 0;
    for (prior, lambda, seed) in [(PriorKind::Tilted, 1.0, 1u64), (PriorKind::Normal, 0.3, 2)] {
        let cfg = ContiVaeConfig {
            covariate_dim: 4,
            latent_dim: 3,
            hidden_units: 5,
            prior,
            seed,
            ..Default::default()
        };
        let mut m = ContiVaeModel::<f64>::new(cfg).unwrap();
        let mut rng = rng_from_seed(seed + 50);
        let x: Vec<f64> = (0..8).map(|_| rng.random()).collect();
        let obs = Observations::new(
            Matrix::new(2, 4, x).unwrap(),
            vec![rng.random(), rng.random()],
            vec![rng.random::<f64>() - 0.5, rng.random::<f64>() + 0.5],
        )
        .unwrap();
        let eps: Vec<f64> = (0..6).map(|_| standard_normal(&mut rng)).collect();
        let idx = [0, 1];
        m.compute_gradients(&obs, &idx, lambda, &eps).unwrap();
        let analytic: Vec<Vec<f64>> = m
            .params()
            .tensors()
            .iter()
            .map(|t| t.grad().unwrap().to_vec())
            .collect();
        for p in 0..m.params().len() {
            for j in 0..analytic[p].len() {
                let orig = m.params().tensors()[p].values()[j];
                let mut at = |v: f64| {
                    m.params_mut().tensors_mut()[p].values_mut()[j] = v;
                    m.loss_with_noise(&obs, &idx, lambda, &eps).unwrap().total
                };
                let fd = (at(orig + STEP) - at(orig - STEP)) / (2.0 * STEP);
                at(orig);
                let a = analytic[p][j];
                let diff = (a - fd).abs();
                total += 1;
                if diff > 1e-6 && diff > 1e-3 * a.abs().max(fd.abs()) {
                    bad += 1;
                    worst = format!("{}[{j}] {a} vs {fd}", m.params().names()[p]);
                }
            }
        }
    }
    outcome(bad == 0, format!("{total} gradients, {bad} mismatched {worst}"))
}

// ---------------------------------------------------------------- 2

fn tilted_numerics() -> Outcome {
    let mut rng = rng_from_seed(2024);
    let mut point_rng = rng_from_seed(7);
    let draws = 1_000_000;
    let mut worst_z: f64 = 0.0;
    for _ in 0..20 {
        let r: f64 = point_rng.random::<f64>() * 8.0;
        let d = [1, 2, 5, 20][point_rng.random_range(0..4)];
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let mut sq = 0.0;
            for k in 0..d {
                let z = standard_normal::<f64, _>(&mut rng) + if k == 0 { r } else { 0.0 };
                sq += z * z;
            }
            let n = sq.sqrt();
            s1 += n;
            s2 += n * n;
        }
        let mean = s1 / draws as f64;
        let se = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
        worst_z = worst_z.max((expected_norm(r, d).unwrap() - mean).abs() / se);
    }
    let mc_ok = worst_z < 3.0;

    let phi = |r: f64| -3.0 * expected_norm(r, 20).unwrap() + 0.5 * r * r;
    let r_star = solve_optimal_norm(3.0, 20).unwrap();
    let grid_min = (0..=12_000).map(|i| phi(i as f64 * 1e-3)).fold(f64::INFINITY, f64::min);
    let min_ok = phi(r_star) <= grid_min + 1e-9;
    let range_ok = (3.0..=3.3).contains(&r_star);

    let prior = TiltedGaussianPrior::new(3.0, 20).unwrap();
    let mut mu = vec![0.0; 20];
    mu[0] = prior.optimal_norm();
    let kl_ok = tilted_kl(&mu, &prior).unwrap() == 0.0;

    outcome(
        mc_ok && min_ok && range_ok && kl_ok,
        format!(
            "MC worst {worst_z:.2} SE [{}]; r*(3,20) = {r_star} in [3.0, 3.3] [{}]; \
             grid-scan minimal [{}]; KL(μ*) = 0 [{}]",
            ok(mc_ok),
            ok(range_ok),
            ok(min_ok),
            ok(kl_ok)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

// ---------------------------------------------------------------- 3

fn distribution_sanity() -> Outcome {
    let mut rng = rng_from_seed(3);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let d = rng.random_range(1..=6usize);
        let prior = TiltedGaussianPrior::new(0.0, d).unwrap();
        let z: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect();
        let sq: f64 = z.iter().map(|v| v * v).sum();
        let normal = (-0.5 * sq).exp() / (2.0 * PI).powf(d as f64 / 2.0);
        worst = worst.max((tilted_density(&z, &prior).unwrap() - normal).abs());
    }
    let prior = TiltedGaussianPrior::new(3.0, 2).unwrap();
    let (nr, na, rmax) = (4000, 64, 14.0);
    let (dr, da) = (rmax / nr as f64, 2.0 * PI / na as f64);
    let mut mass = 0.0;
    for i in 0..nr {
        let r = (i as f64 + 0.5) * dr;
        for j in 0..na {
            let a = (j as f64 + 0.5) * da;
            mass += tilted_density(&[r * a.cos(), r * a.sin()], &prior).unwrap() * r * dr * da;
        }
    }
    outcome(
        worst <= 1e-12 && (mass - 1.0).abs() <= 1e-3,
        format!("τ=0 max |Δρ| = {worst:.1e}; τ=3, d=2 mass = {mass:.6}"),
    )
}

// ---------------------------------------------------------------- 4

fn generated(style: CurveStyle, family: CurveFamily, alpha: f64, n: usize, seed: u64) -> Dataset {
    GenerateConfig {
        style,
        family,
        n,
        d_x: 10,
        d_u: 4,
        alpha,
        seed,
        ..GenerateConfig::default()
    }
    .generate()
    .unwrap()
}

fn datagen_fidelity() -> Outcome {
    let n = 100_000;
    let ds = generated(CurveStyle::Tcga, CurveFamily::Quadratic, 1.0, n, 4);
    let mut t = ds.obs.t.clone();
    t.sort_by(f64::total_cmp);
    let ks = t
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 / n as f64 - v).max(v - i as f64 / n as f64))
        .fold(0.0, f64::max);
    // asymptotic Kolmogorov critical value at the 0.01 level
    let ks_crit = 1.6276 / (n as f64).sqrt();

    let ds = generated(CurveStyle::News, CurveFamily::Sine, 2.0, 10_000, 5);
    let r: Vec<f64> = (0..ds.len())
        .map(|i| ds.obs.y[i] - ds.truth.response(i, ds.obs.x.row(i), ds.obs.t[i]).unwrap())
        .collect();
    let m = r.iter().sum::<f64>() / r.len() as f64;
    let var = r.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (r.len() - 1) as f64;

    let mut worst_rate: f64 = 1.0;
    let mut grid_ok = true;
    for style in [CurveStyle::Tcga, CurveStyle::News] {
        for family in [
            CurveFamily::Cubic,
            CurveFamily::Sine,
            CurveFamily::Quadratic,
            CurveFamily::Cosine,
        ] {
            let ds = generated(style, family, 1.0, 2000, 6);
            let spec = &ds.truth.curve;
            let mut agree = 0;
            for i in 0..ds.len() {
                let c = ds.truth.coefficients(i, ds.obs.x.row(i)).unwrap();
                let chosen = spec.optimal_dose(&c);
                let grid = optimal_dose_grid(spec, &c);
                if chosen.source == DoseSource::Analytic && (chosen.t - grid).abs() <= 2.0 / 1024.0 {
                    agree += 1;
                } else if chosen.t != grid {
                    grid_ok = false;
                }
            }
            worst_rate = worst_rate.min(agree as f64 / ds.len() as f64);
        }
    }
    let pass = ks < ks_crit && (var / 0.02 - 1.0).abs() <= 0.2 && worst_rate >= 0.95 && grid_ok;
    outcome(
        pass,
        format!(
            "KS D = {ks:.5} (crit {ks_crit:.5}); residual var = {var:.5}; \
             worst analytic agreement {:.1}%",
            100.0 * worst_rate
        ),
    )
}

// ---------------------------------------------------------------- 5

fn metric_oracles() -> Outcome {
    let g = uniform_grid(1025);
    let truth = vec![g.iter().map(|t| (3.0 * t).sin()).collect::<Vec<_>>()];
    let offset: Vec<Vec<f64>> = vec![truth[0].iter().map(|v| v + 0.75).collect()];
    let r_off = mise(&offset, &truth, &g).unwrap().sqrt();
    let gap = vec![truth[0].iter().zip(&g).map(|(v, t)| v + t).collect::<Vec<_>>()];
    let m_gap = mise(&gap, &truth, &g).unwrap();
    let r_dpe = dpe(&[1.0, 2.0], &[1.0, 2.0]).unwrap().sqrt();
    outcome(
        r_off == 0.75 && (m_gap - 1.0 / 3.0).abs() <= 1e-4 && r_dpe == 0.0,
        format!("offset √MISE = {r_off}; linear gap MISE = {m_gap:.6}; perfect √DPE = {r_dpe}"),
    )
}

// ---------------------------------------------------------------- 6-9, 11

/// Settings shared by the scaled reproductions: equal budgets for every
/// model, repeats vary model seeds on one fixed dataset.
fn desk(family: CurveFamily, n: usize, d_x: usize, alpha: f64, seed: u64) -> ExperimentConfig {
    let text = format!(
        r#"
        seed = {seed}
        [dataset]
        style = "news"
        family = {}
        n = {n}
        d_x = {d_x}
        d_u = 10
        alpha = {alpha:?}
        scale = 10.0
        [model]
        hidden_units = 64
        hidden_layers = 2
        latent_dim = 20
        learning_rate = 0.001
        epochs = 100
        batch_size = 64
        [eval]
        grid_size = 65
        mc_samples = 100
        repeats = 3
        "#,
        family as u8 + 1
    );
    ExperimentConfig::from_toml(&text)
        .unwrap()
        .resolve(&Overrides::default(), false)
        .unwrap()
}

struct Scores {
    mean: f64,
    ci: f64,
    runs: Vec<f64>,
}

fn scores(cfg: &ExperimentConfig, kind: ModelKind, ds: &Dataset) -> Scores {
    let rows: Vec<EvalRow> = run_repeats(cfg, kind, ds).unwrap();
    let a = aggregate(&rows).unwrap();
    Scores {
        mean: a.rmise_mean,
        ci: a.rmise_ci95,
        runs: rows.iter().map(|r| r.rmise).collect(),
    }
}

fn fmt(s: &Scores) -> String {
    let runs: Vec<String> = s.runs.iter().map(|r| format!("{r:.4}")).collect();
    format!("{:.4}±{:.4} [{}]", s.mean, s.ci, runs.join(", "))
}

fn beats_baseline_under_bias() -> Outcome {
    let cfg = desk(CurveFamily::Cubic, 3000, 50, 3.0, 6);
    let ds = cfg.dataset.generate().unwrap();
    let vae = scores(&cfg, ModelKind::Contivae, &ds);
    let mlp = scores(&cfg, ModelKind::Mlp, &ds);
    outcome(vae.mean < mlp.mean, format!("ContiVAE {} vs MLP {}", fmt(&vae), fmt(&mlp)))
}

fn tilted_prior_helps() -> Outcome {
    let cfg = desk(CurveFamily::Cosine, 3000, 50, 3.0, 7);
    let ds = cfg.dataset.generate().unwrap();
    let t = scores(&cfg, ModelKind::Contivae, &ds);
    let n = scores(&cfg, ModelKind::ContivaeN, &ds);
    let overlap = (t.mean - n.mean).abs() <= t.ci + n.ci;
    let pass = t.mean <= n.mean || (overlap && t.mean <= 1.1 * n.mean);
    outcome(pass, format!("tilted {} vs normal {}", fmt(&t), fmt(&n)))
}

fn robustness_to_bias() -> Outcome {
    let mut vae = Vec::new();
    let mut mlp = Vec::new();
    for alpha in [1.0, 2.0, 3.0, 4.0] {
        let cfg = desk(CurveFamily::Sine, 1000, 50, alpha, 8);
        let ds = cfg.dataset.generate().unwrap();
        vae.push(scores(&cfg, ModelKind::Contivae, &ds).mean);
        mlp.push(scores(&cfg, ModelKind::Mlp, &ds).mean);
    }
    let rel = |v: &[f64]| (v[3] - v[0]) / v[0];
    let show = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" → ");
    outcome(
        rel(&vae) < rel(&mlp),
        format!(
            "ContiVAE {} ({:+.1}%), MLP {} ({:+.1}%)",
            show(&vae),
            100.0 * rel(&vae),
            show(&mlp),
            100.0 * rel(&mlp)
        ),
    )
}

fn lambda_direction() -> Outcome {
    let mut cfg = desk(CurveFamily::Sine, 1000, 200, 2.0, 9);
    let ds = cfg.dataset.generate().unwrap();
    cfg.model.recon_scale = 0.1;
    let low = scores(&cfg, ModelKind::Contivae, &ds);
    cfg.model.recon_scale = 1.0;
    let high = scores(&cfg, ModelKind::Contivae, &ds);
    outcome(low.mean <= high.mean, format!("λ=0.1 {} vs λ=1.0 {}", fmt(&low), fmt(&high)))
}

fn small_sample_advantage() -> Outcome {
    // 1000 samples with a 20% test split leaves 800 for training
    let cfg = desk(CurveFamily::Sine, 1000, 50, 2.0, 11);
    let ds = cfg.dataset.generate().unwrap();
    assert_eq!(ds.meta.train_idx.len(), 800);
    let vae = scores(&cfg, ModelKind::Contivae, &ds);
    let mlp = scores(&cfg, ModelKind::Mlp, &ds);
    outcome(vae.mean < mlp.mean, format!("ContiVAE {} vs MLP {}", fmt(&vae), fmt(&mlp)))
}

// ---------------------------------------------------------------- 10

fn pipeline(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let text = r#"
        seed = 10
        out = "unused"
        [dataset]
        n = 300
        d_x = 12
        d_u = 4
        alpha = 2.0
        family = 2
        [model]
        hidden_units = 16
        latent_dim = 6
        epochs = 5
        learning_rate = 0.001
        [eval]
        mc_samples = 10
        repeats = 2
    "#;
    let o = Overrides {
        out: Some(dir.to_path_buf()),
        ..Overrides::default()
    };
    let cfg = ExperimentConfig::from_toml(text).unwrap().resolve(&o, false).unwrap();
    let p = cmd_generate(&cfg).unwrap();
    cmd_train(&cfg, None, false).unwrap();
    cmd_evaluate(&cfg, None, &EvalTarget::Trained).unwrap();
    let mut files = vec![p.data, p.meta, p.truth];
    files.extend((0..2).map(|r| run_dir(&cfg, r).join(CHECKPOINT_FILE)));
    files.push(dir.join("eval").join(REPORT_FILE));
    files.push(dir.join("eval").join("curves_run1.csv"));
    files
        .into_iter()
        .map(|f| {
            let rel = f.strip_prefix(dir).unwrap().display().to_string();
            (rel, fs::read(&f).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = pipeline(a.path());
    let fb = pipeline(b.path());
    let differing: Vec<&str> = fa
        .iter()
        .zip(&fb)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    outcome(
        differing.is_empty(),
        format!("{} files compared, differing: {:?}", fa.len(), differing),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "gradient correctness", gradient_check),
        (2, "tilted-prior numerics", tilted_numerics),
        (3, "distribution sanity", distribution_sanity),
        (4, "data-generation fidelity", datagen_fidelity),
        (5, "metric oracles", metric_oracles),
        (6, "ContiVAE beats MLP under bias (family 1, α=3)", beats_baseline_under_bias),
        (7, "tilted prior vs normal prior (family 4)", tilted_prior_helps),
        (8, "robustness to selection bias α 1→4", robustness_to_bias),
        (9, "λ=0.1 vs λ=1.0 with d_x=200", lambda_direction),
        (10, "end-to-end determinism", determinism),
        (11, "small-sample advantage (N=800 train)", small_sample_advantage),
    ];
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == id);
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status} {name}: {} ({secs:.1}s)", o.detail);
        match (o.pass, known) {
            (false, Some((_, why))) => println!("             known failure: {why}"),
            (false, None) => unexpected += 1,
            (true, Some(_)) => println!("             listed as a known failure but passed"),
            (true, None) => {}
        }
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
