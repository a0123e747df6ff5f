use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::standard_normal;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

use super::Matrix;

/// Resolution of the grid oracle used to validate analytic optimal doses.
pub const ORACLE_GRID: usize = 1025;

const MAX_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum CurveFamily {
    /// `C(c₁ + 12t(t − k)²)`, `k = 0.75·c₂/c₃`.
    Cubic,
    /// `C(c₁ + sin(π(c₂/c₃)t))`.
    Sine,
    /// `C(c₁ + 12c₂t − 12c₃t²)`.
    Quadratic,
    /// `C(cos((2 + c₁)πt + c₂π) + c₃)`.
    Cosine,
}

impl CurveFamily {
    pub fn index(self) -> u8 {
        match self {
            CurveFamily::Cubic => 1,
            CurveFamily::Sine => 2,
            CurveFamily::Quadratic => 3,
            CurveFamily::Cosine => 4,
        }
    }

    fn has_ratio(self) -> bool {
        matches!(self, CurveFamily::Cubic | CurveFamily::Sine)
    }
}

impl TryFrom<u8> for CurveFamily {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(CurveFamily::Cubic),
            2 => Ok(CurveFamily::Sine),
            3 => Ok(CurveFamily::Quadratic),
            4 => Ok(CurveFamily::Cosine),
            _ => Err(Error::config(format!("curve family {v} is not in 1..=4"))),
        }
    }
}

impl From<CurveFamily> for u8 {
    fn from(f: CurveFamily) -> u8 {
        f.index()
    }
}

impl std::fmt::Display for CurveFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveStyle {
    /// Coefficients `v_kᵀx` with unit-norm `v_k`.
    Tcga,
    /// Coefficients `uᵀV_k x` through hidden confounders `u`.
    News,
}

impl std::str::FromStr for CurveStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tcga" => Ok(CurveStyle::Tcga),
            "news" => Ok(CurveStyle::News),
            _ => Err(Error::config(format!("unknown curve style {s:?}"))),
        }
    }
}

impl std::fmt::Display for CurveStyle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CurveStyle::Tcga => "tcga",
            CurveStyle::News => "news",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "style", rename_all = "lowercase")]
pub enum CurveParams {
    Tcga { v: [Vec<f64>; 3] },
    News { v: [Matrix; 3] },
}

/// A dose-response family with its sampled parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub family: CurveFamily,
    pub scale: f64,
    pub seed: u64,
    pub params: CurveParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DoseSource {
    Analytic,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalDose {
    pub t: f64,
    pub source: DoseSource,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sample_params<R: Rng + ?Sized>(
    style: CurveStyle,
    d_x: usize,
    d_u: usize,
    rng: &mut R,
) -> CurveParams {
    match style {
        CurveStyle::Tcga => {
            let mut unit = || {
                let mut v: Vec<f64> = (0..d_x).map(|_| standard_normal(rng)).collect();
                let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.iter_mut().for_each(|a| *a /= n);
                v
            };
            CurveParams::Tcga {
                v: [unit(), unit(), unit()],
            }
        }
        CurveStyle::News => {
            let mut mat = || {
                let data = (0..d_u * d_x).map(|_| standard_normal(rng)).collect();
                Matrix::new(d_u, d_x, data).expect("sized to d_u × d_x")
            };
            CurveParams::News {
                v: [mat(), mat(), mat()],
            }
        }
    }
}

impl CurveSpec {
    /// Draws parameters from `seed`. For the two ratio families, parameter
    /// sets whose denominator `c₃` comes within `min_denominator` of zero on
    /// any supplied sample are rejected and redrawn.
    #[allow(clippy::too_many_arguments)]
    pub fn sample(
        family: CurveFamily,
        style: CurveStyle,
        scale: f64,
        seed: u64,
        x: &Matrix,
        hidden: Option<&Matrix>,
        min_denominator: f64,
    ) -> Result<Self> {
        let d_u = match (style, hidden) {
            (CurveStyle::News, Some(u)) => u.cols(),
            (CurveStyle::News, None) => {
                return Err(Error::config("news-style curves need hidden confounders"))
            }
            (CurveStyle::Tcga, _) => 0,
        };
        let mut rng = rng_from_seed(seed);
        for _ in 0..MAX_RESAMPLES {
            let spec = CurveSpec {
                family,
                scale,
                seed,
                params: sample_params(style, x.cols(), d_u, &mut rng),
            };
            if !family.has_ratio() {
                return Ok(spec);
            }
            let mut ok = true;
            for i in 0..x.rows() {
                let c = spec.coefficients(x.row(i), hidden.map(|u| u.row(i)))?;
                if !(c[2].abs() >= min_denominator) {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(spec);
            }
        }
        Err(Error::Numeric {
            component: "curve denominator".into(),
            context: format!(" after {MAX_RESAMPLES} parameter draws"),
        })
    }

    pub fn style(&self) -> CurveStyle {
        match self.params {
            CurveParams::Tcga { .. } => CurveStyle::Tcga,
            CurveParams::News { .. } => CurveStyle::News,
        }
    }

    /// The three inner products `(c₁, c₂, c₃)` that parameterise a sample's
    /// curve.
    pub fn coefficients(&self, x: &[f64], u: Option<&[f64]>) -> Result<[f64; 3]> {
        match &self.params {
            CurveParams::Tcga { v } => {
                if x.len() != v[0].len() {
                    return Err(Error::Dimension {
                        op: "curve coefficients",
                        left: vec![x.len()],
                        right: vec![v[0].len()],
                    });
                }
                Ok([dot(&v[0], x), dot(&v[1], x), dot(&v[2], x)])
            }
            CurveParams::News { v } => {
                let Some(u) = u else {
                    return Err(Error::contract("news-style curve evaluated without u"));
                };
                if x.len() != v[0].cols() || u.len() != v[0].rows() {
                    return Err(Error::Dimension {
                        op: "curve coefficients",
                        left: vec![u.len(), x.len()],
                        right: vec![v[0].rows(), v[0].cols()],
                    });
                }
                let c = |m: &Matrix| dot(u, &m.mul_vec(x));
                Ok([c(&v[0]), c(&v[1]), c(&v[2])])
            }
        }
    }

    /// Curve value from precomputed coefficients.
    pub fn eval_coeffs(&self, c: &[f64; 3], t: f64) -> f64 {
        let s = self.scale;
        match self.family {
            CurveFamily::Cubic => {
                let k = 0.75 * c[1] / c[2];
                s * (c[0] + 12.0 * t * (t - k) * (t - k))
            }
            CurveFamily::Sine => s * (c[0] + (PI * (c[1] / c[2]) * t).sin()),
            CurveFamily::Quadratic => s * (c[0] + 12.0 * c[1] * t - 12.0 * c[2] * t * t),
            CurveFamily::Cosine => s * (((2.0 + c[0]) * PI * t + c[1] * PI).cos() + c[2]),
        }
    }

    pub fn eval(&self, x: &[f64], u: Option<&[f64]>, t: f64) -> Result<f64> {
        Ok(self.eval_coeffs(&self.coefficients(x, u)?, t))
    }

    /// Optimal dose: the analytic answer, unless the grid oracle disagrees
    /// by more than two grid cells, in which case the grid wins.
    pub fn optimal_dose(&self, c: &[f64; 3]) -> OptimalDose {
        let a = optimal_dose_analytic(self, c);
        let g = optimal_dose_grid(self, c);
        if (a - g).abs() <= 2.0 / (ORACLE_GRID - 1) as f64 {
            OptimalDose {
                t: a,
                source: DoseSource::Analytic,
            }
        } else {
            OptimalDose {
                t: g,
                source: DoseSource::Grid,
            }
        }
    }
}

/// Picks the best candidate; near-ties go to the smallest dose.
fn best_of(spec: &CurveSpec, c: &[f64; 3], mut cands: Vec<f64>) -> f64 {
    cands.retain(|t| t.is_finite());
    cands.iter_mut().for_each(|t| *t = t.clamp(0.0, 1.0));
    cands.sort_by(f64::total_cmp);
    let vals: Vec<f64> = cands.iter().map(|&t| spec.eval_coeffs(c, t)).collect();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * (1.0 + max.abs());
    cands
        .iter()
        .zip(&vals)
        .find(|(_, &v)| v >= max - tol)
        .map_or(0.0, |(&t, _)| t)
}

/// Closed-form stationary points of each family (the tabulated rules plus
/// the cases they leave out), evaluated together with both endpoints.
pub fn optimal_dose_analytic(spec: &CurveSpec, c: &[f64; 3]) -> f64 {
    let mut cands = vec![0.0, 1.0];
    match spec.family {
        CurveFamily::Cubic => {
            // d/dt 12t(t−k)² = 12(t−k)(3t−k)
            let k = 0.75 * c[1] / c[2];
            cands.extend([k / 3.0, k]);
        }
        CurveFamily::Sine => {
            // sin(πwt) = 1 at wt = ½ + 2m
            let w = c[1] / c[2];
            if w != 0.0 && w.is_finite() {
                let (lo, hi) = if w > 0.0 { (0.0, w) } else { (w, 0.0) };
                let m_lo = ((lo - 0.5) / 2.0).floor() as i64;
                let m_hi = ((hi - 0.5) / 2.0).ceil() as i64;
                for m in m_lo..=m_hi {
                    let t = (0.5 + 2.0 * m as f64) / w;
                    if (0.0..=1.0).contains(&t) {
                        cands.push(t);
                    }
                }
            }
        }
        CurveFamily::Quadratic => {
            if c[2] != 0.0 {
                cands.push(c[1] / (2.0 * c[2]));
            }
        }
        CurveFamily::Cosine => {
            // cos(ωt + c₂π) = 1 at t = (2m − c₂)/(2 + c₁)
            let omega = 2.0 + c[0];
            if omega != 0.0 {
                let (p0, p1) = (c[1], omega + c[1]);
                let (lo, hi) = if p0 <= p1 { (p0, p1) } else { (p1, p0) };
                for m in (lo / 2.0).floor() as i64..=(hi / 2.0).ceil() as i64 {
                    let t = (2.0 * m as f64 - c[1]) / omega;
                    if (0.0..=1.0).contains(&t) {
                        cands.push(t);
                    }
                }
            }
        }
    }
    best_of(spec, c, cands)
}

/// Grid oracle: scans [`ORACLE_GRID`] points, refines every near-maximal
/// local peak by golden-section search, and returns the best refined peak
/// (smallest dose among ties).
pub fn optimal_dose_grid(spec: &CurveSpec, c: &[f64; 3]) -> f64 {
    let n = ORACLE_GRID;
    let h = 1.0 / (n - 1) as f64;
    let vals: Vec<f64> = (0..n).map(|i| spec.eval_coeffs(c, i as f64 * h)).collect();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = 1e-3 * (max - min) + 1e-12 * (1.0 + max.abs());

    let mut peaks = Vec::new();
    for i in 0..n {
        let left = if i > 0 { vals[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < n { vals[i + 1] } else { f64::NEG_INFINITY };
        if vals[i] >= left && vals[i] >= right && vals[i] >= max - slack {
            let lo = i.saturating_sub(1) as f64 * h;
            let hi = ((i + 1).min(n - 1)) as f64 * h;
            let t = golden_max(|t| spec.eval_coeffs(c, t), lo, hi);
            let (t, v) = [(t, spec.eval_coeffs(c, t)), (i as f64 * h, vals[i])]
                .into_iter()
                .fold((t, f64::NEG_INFINITY), |acc, (tt, vv)| if vv > acc.1 { (tt, vv) } else { acc });
            peaks.push((t, v));
        }
    }
    let best = peaks.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * (1.0 + best.abs());
    peaks
        .iter()
        .filter(|p| p.1 >= best - tol)
        .map(|p| p.0)
        .fold(f64::INFINITY, f64::min)
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > 1e-12 {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    let mid = 0.5 * (lo + hi);
    [lo, mid, hi]
        .into_iter()
        .fold((mid, f(mid)), |acc, t| {
            let v = f(t);
            if v > acc.1 {
                (t, v)
            } else {
                acc
            }
        })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tcga(family: CurveFamily, scale: f64) -> CurveSpec {
        CurveSpec {
            family,
            scale,
            seed: 0,
            params: CurveParams::Tcga {
                v: [vec![1.0], vec![1.0], vec![1.0]],
            },
        }
    }

    #[test]
    fn values_at_zero_dose() {
        let c = [0.4, 0.2, 0.3];
        for fam in [CurveFamily::Quadratic, CurveFamily::Sine] {
            let s = tcga(fam, 10.0);
            assert_eq!(s.eval_coeffs(&c, 0.0), 10.0 * 0.4);
        }
    }

    #[test]
    fn cubic_at_a_third_of_k() {
        // k = 0.75 when c₂ = c₃
        let s = tcga(CurveFamily::Cubic, 10.0);
        let c = [0.2, 0.5, 0.5];
        let v = s.eval_coeffs(&c, 0.25);
        assert!((v - 10.0 * (0.2 + 0.75)).abs() < 1e-12);
    }

    #[test]
    fn tabulated_optimal_doses() {
        let s = tcga(CurveFamily::Cubic, 10.0);
        // k = 0.75·c₂/c₃ = 0.9
        let c = [0.0, 1.2, 1.0];
        assert!((optimal_dose_analytic(&s, &c) - 0.3).abs() < 1e-12);
        // k < 0.75 → 1
        assert_eq!(optimal_dose_analytic(&s, &[0.0, 0.5, 1.0]), 1.0);

        let q = tcga(CurveFamily::Quadratic, 10.0);
        assert!((optimal_dose_analytic(&q, &[0.1, 0.3, 0.3]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn analytic_matches_grid_on_mixed_cases() {
        let cases: [[f64; 3]; 6] = [
            [0.1, 0.9, 0.2],
            [-0.3, -1.7, 0.4],
            [0.5, 3.3, -0.6],
            [1.2, -0.4, 0.05],
            [-1.9, 0.7, 0.9],
            [0.0, 0.2, -2.0],
        ];
        for fam in [
            CurveFamily::Cubic,
            CurveFamily::Sine,
            CurveFamily::Quadratic,
            CurveFamily::Cosine,
        ] {
            let s = tcga(fam, 10.0);
            for c in &cases {
                let a = optimal_dose_analytic(&s, c);
                let g = optimal_dose_grid(&s, c);
                assert!((a - g).abs() <= 2.0 / 1024.0, "family {fam}: {c:?} analytic {a} grid {g}");
            }
        }
    }

    #[test]
    fn family_round_trips_through_integers() {
        for i in 1..=4u8 {
            assert_eq!(u8::from(CurveFamily::try_from(i).unwrap()), i);
        }
        assert!(CurveFamily::try_from(5).is_err());
    }
}
