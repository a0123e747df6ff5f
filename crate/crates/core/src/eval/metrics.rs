use crate::error::{Error, Result};

/// Trapezoidal `∫ f dt` over a sorted grid.
pub fn trapezoid(values: &[f64], grid: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Mean over samples of the integrated squared curve error.
pub fn mise(pred: &[Vec<f64>], truth: &[Vec<f64>], grid: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::Dimension {
            op: "mise",
            left: vec![pred.len()],
            right: vec![truth.len()],
        });
    }
    let mut acc = 0.0;
    for (p, y) in pred.iter().zip(truth) {
        if p.len() != grid.len() || y.len() != grid.len() {
            return Err(Error::Dimension {
                op: "mise",
                left: vec![p.len(), y.len()],
                right: vec![grid.len()],
            });
        }
        let sq: Vec<f64> = p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).collect();
        acc += trapezoid(&sq, grid);
    }
    Ok(acc / pred.len() as f64)
}

pub fn rmise(pred: &[Vec<f64>], truth: &[Vec<f64>], grid: &[f64]) -> Result<f64> {
    mise(pred, truth, grid).map(f64::sqrt)
}

/// Mean squared outcome gap between true and recommended doses, both
/// evaluated on the noiseless true curves `y_at_true` and `y_at_pred`.
pub fn dpe(y_at_true: &[f64], y_at_pred: &[f64]) -> Result<f64> {
    if y_at_true.len() != y_at_pred.len() || y_at_true.is_empty() {
        return Err(Error::Dimension {
            op: "dpe",
            left: vec![y_at_true.len()],
            right: vec![y_at_pred.len()],
        });
    }
    let s: f64 = y_at_true
        .iter()
        .zip(y_at_pred)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(s / y_at_true.len() as f64)
}

/// Mean, 95% CI half-width `1.96·s/√n` (sample sd), and whether only one
/// value was available (half-width then 0).
pub fn mean_ci(values: &[f64]) -> (f64, f64, bool) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0, false);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0, true);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * var.sqrt() / (n as f64).sqrt(), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::uniform_grid;

    #[test]
    fn trapezoid_exact_for_linear() {
        let g = uniform_grid(5);
        assert!((trapezoid(&g, &g) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dpe_hand_example() {
        // y(t) = t, t* = 1, t̂* = 0.5
        assert_eq!(dpe(&[1.0], &[0.5]).unwrap(), 0.25);
        assert_eq!(dpe(&[1.0], &[0.5]).unwrap().sqrt(), 0.5);
    }

    #[test]
    fn ci_examples() {
        assert_eq!(mean_ci(&[1.0; 5]), (1.0, 0.0, false));
        let (m, h, single) = mean_ci(&[0.0, 2.0]);
        assert_eq!(m, 1.0);
        assert!((h - 1.96).abs() < 1e-12);
        assert!(!single);
        assert_eq!(mean_ci(&[3.0]), (3.0, 0.0, true));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let g = uniform_grid(3);
        assert!(mise(&[vec![0.0; 3]], &[vec![0.0; 2]], &g).is_err());
        assert!(mise(&[vec![0.0; 3]], &[], &g).is_err());
    }
}
