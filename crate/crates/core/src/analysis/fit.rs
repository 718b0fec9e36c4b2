use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Power-law fit `value ~ amplitude * t^exponent` over a time window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: (f64, f64),
    pub exponent: f64,
    pub amplitude: f64,
    pub stderr: f64,
    pub r_squared: f64,
    /// Weight `w` used in `weighted_sup`.
    pub weight: f64,
    /// `max t^w value` over the window samples.
    pub weighted_sup: f64,
    pub samples: usize,
}

/// Least-squares line through `(ln t, ln value)` for samples with `t` in `window`.
pub fn decay_fit(times: &[f64], values: &[f64], window: (f64, f64), weight: f64) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(LabError::Usage("times and values differ in length".into()));
    }
    let (t0, t1) = window;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= t0 && **t <= t1)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 5 {
        return Err(LabError::Usage(format!(
            "decay fit needs at least 5 samples in [{t0}, {t1}], found {}",
            pts.len()
        )));
    }
    if let Some((t, v)) = pts.iter().find(|(t, v)| !(*v > 0.0) || !(*t > 0.0)) {
        return Err(LabError::Usage(format!(
            "decay fit needs positive samples, got {v} at t = {t}"
        )));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::Usage("decay fit needs distinct sample times".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (sse / (n - 2.0) / sxx).sqrt();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let weighted_sup = pts
        .iter()
        .map(|(t, v)| t.powf(weight) * v)
        .fold(0.0, f64::max);
    Ok(DecayFit {
        window,
        exponent: slope,
        amplitude: intercept.exp(),
        stderr,
        r_squared,
        weight,
        weighted_sup,
        samples: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(n: usize) -> Vec<f64> {
        (0..n).map(|i| 1.0 * 1.1f64.powi(i as i32)).collect()
    }

    #[test]
    fn exact_cube_root_law() {
        let t = geometric(30);
        let v: Vec<f64> = t.iter().map(|t| t.powf(-1.0 / 3.0)).collect();
        let f = decay_fit(&t, &v, (0.0, 100.0), 1.0 / 3.0).unwrap();
        assert!((f.exponent + 1.0 / 3.0).abs() < 1e-12);
        assert!((f.amplitude - 1.0).abs() < 1e-12);
        assert!(f.stderr < 1e-12);
        assert!((f.weighted_sup - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_law_amplitude() {
        let t = geometric(25);
        let v: Vec<f64> = t.iter().map(|t| 3.0 / t).collect();
        let f = decay_fit(&t, &v, (1.0, 20.0), 1.0).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12);
        assert!((f.amplitude - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_and_short() {
        let t = geometric(10);
        let mut v = vec![1.0; 10];
        v[3] = 0.0;
        assert!(matches!(decay_fit(&t, &v, (0.0, 10.0), 0.0), Err(LabError::Usage(_))));
        let v = vec![1.0; 10];
        assert!(decay_fit(&t, &v, (1.0, 1.3), 0.0).is_err());
    }
}
