use super::norm::{norm, weighted_lebesgue, weighted_lorentz, MixedOrder, NormSpec};
use crate::dynamics::Trajectory;
use crate::error::{LabError, Result};
use crate::spectral::Field;

/// Trapezoid weights for possibly non-uniform sample times.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let left = if i > 0 { times[i] - times[i - 1] } else { 0.0 };
            let right = if i + 1 < n { times[i + 1] - times[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

fn temporal(values: &[f64], weights: &[f64], q: f64, q_lorentz: Option<f64>) -> Result<f64> {
    match q_lorentz {
        Some(ql) => weighted_lorentz(values, weights, q, ql),
        None => Ok(weighted_lebesgue(values, weights, q)),
    }
}

/// Space-time norm of the sampled fields `fields[i]` at `times[i]`.
pub fn mixed_norm_samples(times: &[f64], fields: &[&Field], spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    let NormSpec::MixedXT {
        p_x,
        q_t,
        order,
        q_lorentz,
    } = *spec
    else {
        return Err(LabError::Usage("mixed_norm needs a MixedXT norm".into()));
    };
    if times.len() != fields.len() {
        return Err(LabError::Usage("times and fields differ in length".into()));
    }
    if times.len() < 2 {
        return Err(LabError::Usage(
            "space-time norm needs at least two stored snapshots in the window".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Usage("snapshot times must increase".into()));
    }
    let w = trapezoid_weights(times);
    match order {
        MixedOrder::TOuter => {
            let inner = fields
                .iter()
                .map(|f| norm(f, &NormSpec::lebesgue(p_x)))
                .collect::<Result<Vec<_>>>()?;
            temporal(&inner, &w, q_t, q_lorentz)
        }
        MixedOrder::XOuter => {
            let grid = fields[0].grid();
            let phys: Vec<Field> = fields.iter().map(|f| f.to_physical()).collect();
            let mut column = vec![0.0; phys.len()];
            let mut inner = Vec::with_capacity(grid.size());
            for j in 0..grid.size() {
                for (c, f) in column.iter_mut().zip(&phys) {
                    *c = f.data()[j].norm();
                }
                inner.push(temporal(&column, &w, q_t, q_lorentz)?);
            }
            let cells = vec![grid.cell_measure(); inner.len()];
            Ok(weighted_lebesgue(&inner, &cells, p_x))
        }
    }
}

/// Space-time norm over the stored snapshots of `traj` in `[t0, t1]`.
pub fn mixed_norm(traj: &Trajectory, spec: &NormSpec, window: (f64, f64)) -> Result<f64> {
    let (t0, t1) = window;
    if !(t0 < t1) {
        return Err(LabError::Usage(format!("empty window [{t0}, {t1}]")));
    }
    let valid = traj.valid_until();
    if t1 > valid * (1.0 + 1e-12) {
        return Err(LabError::Usage(format!(
            "window end {t1} exceeds the valid range of the trajectory ({valid})"
        )));
    }
    let samples = traj.stored_in(t0, t1);
    let times: Vec<f64> = samples.iter().map(|(t, _)| *t).collect();
    let fields: Vec<&Field> = samples.iter().map(|(_, f)| *f).collect();
    mixed_norm_samples(&times, &fields, spec)
}
