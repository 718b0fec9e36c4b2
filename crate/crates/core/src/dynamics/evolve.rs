use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::diagnostics::{buffer_weights, gradient_energy, potential_coefficient};
use super::equation::EquationSpec;
use super::stepper::Stepper;
use crate::analysis::{norm, NormSpec};
use crate::error::{LabError, Result};
use crate::spectral::{
    dispersion, fft_inverse, for_each_mode, sum_over_modes, DerivativeKind, Field, Grid,
    Multiplier, Rep,
};

/// When snapshots are taken. `t = 0` is always included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// `start * ratio^j`.
    Geometric { start: f64, ratio: f64 },
    /// `j * interval`.
    Uniform { interval: f64 },
    Times { times: Vec<f64> },
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Geometric {
            start: 1.0,
            ratio: 1.1,
        }
    }
}

impl Schedule {
    /// Snapshot times in `[0, horizon]`, strictly increasing, ending at `horizon`.
    pub fn times(&self, horizon: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0];
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * horizon.max(1.0);
        match self {
            Schedule::Geometric { start, ratio } => {
                if !(*start > 0.0 && *ratio > 1.0) {
                    return Err(LabError::Config(
                        "schedule: geometric start must be > 0 and ratio > 1".into(),
                    ));
                }
                let mut t = *start;
                while t < horizon && !close(t, horizon) {
                    out.push(t);
                    t *= ratio;
                }
            }
            Schedule::Uniform { interval } => {
                if !(*interval > 0.0) {
                    return Err(LabError::Config("schedule: interval must be > 0".into()));
                }
                let mut j = 1u64;
                loop {
                    let t = j as f64 * interval;
                    if t >= horizon || close(t, horizon) {
                        break;
                    }
                    out.push(t);
                    j += 1;
                }
            }
            Schedule::Times { times } => {
                for &t in times {
                    if t > 0.0 && t < horizon && !close(t, horizon) {
                        out.push(t);
                    }
                }
                out.sort_by(f64::total_cmp);
                out.dedup();
            }
        }
        if horizon > 0.0 {
            out.push(horizon);
        }
        Ok(out)
    }
}

/// Operator applied before a probe norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeOperator {
    Identity,
    /// `d_x`
    PartialX,
    Derivative { order: f64, derivative: DerivativeKindTag },
}

/// Serializable mirror of [`DerivativeKind`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeKindTag {
    Homogeneous,
    Inhomogeneous,
    XOnly,
    Laplacian,
}

impl From<DerivativeKindTag> for DerivativeKind {
    fn from(t: DerivativeKindTag) -> Self {
        match t {
            DerivativeKindTag::Homogeneous => DerivativeKind::Homogeneous,
            DerivativeKindTag::Inhomogeneous => DerivativeKind::Inhomogeneous,
            DerivativeKindTag::XOnly => DerivativeKind::XOnly,
            DerivativeKindTag::Laplacian => DerivativeKind::Laplacian,
        }
    }
}

/// Extra norm recorded at every snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub label: String,
    pub operator: ProbeOperator,
    pub norm: NormSpec,
}

impl Probe {
    pub fn new(label: impl Into<String>, operator: ProbeOperator, norm: NormSpec) -> Self {
        Probe {
            label: label.into(),
            operator,
            norm,
        }
    }

    fn multiplier(&self) -> Option<Multiplier> {
        match self.operator {
            ProbeOperator::Identity => None,
            ProbeOperator::PartialX => Some(Multiplier::partial(0)),
            ProbeOperator::Derivative { order, derivative } => Some(
                crate::spectral::derivative_multiplier(order, derivative.into()),
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuardOptions {
    pub buffer_fraction: f64,
    /// Halt when the buffer carries more than this fraction of the mass.
    pub threshold: f64,
}

impl Default for GuardOptions {
    fn default() -> Self {
        GuardOptions {
            buffer_fraction: 0.05,
            threshold: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    pub horizon: f64,
    /// Fixed step; `None` uses [`default_dt`].
    pub dt: Option<f64>,
    pub schedule: Schedule,
    pub guard: GuardOptions,
    /// Upper bound on snapshots whose full field is kept.
    pub max_stored: usize,
    /// Exponent of the `Lr_target` column.
    pub target_r: f64,
    pub probes: Vec<Probe>,
    pub mass_tolerance: f64,
    pub energy_tolerance: f64,
    pub max_halvings: u32,
}

impl EvolveOptions {
    pub fn new(horizon: f64) -> Self {
        EvolveOptions {
            horizon,
            dt: None,
            schedule: Schedule::default(),
            guard: GuardOptions::default(),
            max_stored: 64,
            target_r: f64::INFINITY,
            probes: Vec::new(),
            mass_tolerance: 1e-10,
            energy_tolerance: 1e-8,
            max_halvings: 4,
        }
    }
}

/// Mass and energy history with running maxima of the relative drifts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConservedLedger {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub max_mass_drift: f64,
    pub max_energy_drift: f64,
}

fn drift(q: f64, q0: f64) -> f64 {
    if q0 == 0.0 {
        (q - q0).abs()
    } else {
        ((q - q0) / q0).abs()
    }
}

impl ConservedLedger {
    pub fn push(&mut self, t: f64, mass: f64, energy: f64) {
        if let (Some(&m0), Some(&e0)) = (self.mass.first(), self.energy.first()) {
            self.max_mass_drift = self.max_mass_drift.max(drift(mass, m0));
            self.max_energy_drift = self.max_energy_drift.max(drift(energy, e0));
        }
        self.times.push(t);
        self.mass.push(mass);
        self.energy.push(energy);
    }
}

/// Norms recorded at one snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
    pub lr_target: f64,
    pub hhalf: f64,
    pub mass: f64,
    pub energy: f64,
    pub boundary_mass_fraction: f64,
    pub probes: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub spec: EquationSpec,
    pub grid: Arc<Grid>,
    pub records: Vec<NormRecord>,
    /// `(snapshot index, physical field)` for the kept snapshots.
    pub stored: Vec<(usize, Field)>,
    pub ledger: ConservedLedger,
    pub wrap_time: Option<f64>,
    /// `(time, sup)` if the run stopped on a non-finite state.
    pub blow_up: Option<(f64, f64)>,
    pub dt: f64,
    pub steps: u64,
    pub halvings: u32,
    pub probe_labels: Vec<String>,
    pub target_r: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Last time at which the run is trusted: the end of the record, capped
    /// by the guard trigger.
    pub fn valid_until(&self) -> f64 {
        let end = self.records.last().map_or(0.0, |r| r.t);
        self.wrap_time.map_or(end, |w| w.min(end))
    }

    /// Stored snapshots with `t` in `[t0, t1]`.
    pub fn stored_in(&self, t0: f64, t1: f64) -> Vec<(f64, &Field)> {
        self.stored
            .iter()
            .map(|(i, f)| (self.records[*i].t, f))
            .filter(|(t, _)| *t >= t0 && *t <= t1)
            .collect()
    }

    pub fn probe_series(&self, idx: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.probes[idx]).collect()
    }
}

/// `0.5 dx / (max(1, sup|u|)^k (k + 1))`.
pub fn default_dt(u0: &Field, spec: &EquationSpec) -> f64 {
    let sup = u0.to_physical().sup_abs().max(1.0);
    0.5 * u0.grid().dx(0) / (sup.powi(spec.k as i32) * (spec.k as f64 + 1.0))
}

fn stored_indices(count: usize, max_stored: usize) -> Vec<bool> {
    let mut keep = vec![false; count];
    if max_stored == 0 || count == 0 {
        return keep;
    }
    if count <= max_stored {
        return vec![true; count];
    }
    if max_stored == 1 {
        keep[0] = true;
        return keep;
    }
    for j in 0..max_stored {
        let i = (j as f64 * (count - 1) as f64 / (max_stored - 1) as f64).round() as usize;
        keep[i] = true;
    }
    keep
}

struct Recorder<'a> {
    grid: &'a Arc<Grid>,
    spec: &'a EquationSpec,
    opts: &'a EvolveOptions,
    weights: Vec<f64>,
    probe_ops: Vec<Option<Vec<Complex64>>>,
    scratch: Vec<Complex64>,
}

/// Quantities computed from one state.
struct StateSummary {
    mass: f64,
    energy: f64,
    boundary: f64,
    sup: f64,
}

impl<'a> Recorder<'a> {
    fn new(grid: &'a Arc<Grid>, spec: &'a EquationSpec, opts: &'a EvolveOptions) -> Result<Self> {
        let probe_ops = opts
            .probes
            .iter()
            .map(|p| p.multiplier().map(|m| m.sample(grid)).transpose())
            .collect::<Result<Vec<_>>>()?;
        Ok(Recorder {
            grid,
            spec,
            opts,
            weights: buffer_weights(grid, opts.guard.buffer_fraction),
            probe_ops,
            scratch: Vec::new(),
        })
    }

    /// Summary from the spectral state and its physical image.
    fn summarize(&self, spectral: &[Complex64], physical: &[Complex64]) -> StateSummary {
        let nx = self.weights.len();
        let row = physical.len() / nx;
        let e = self.spec.k as i32 + 2;
        let (mut mass, mut pot, mut edge, mut sup) = (0.0, 0.0, 0.0, 0.0f64);
        for (i, w) in self.weights.iter().enumerate() {
            let mut m = 0.0;
            for v in &physical[i * row..(i + 1) * row] {
                let x = v.re;
                m += x * x;
                pot += x.powi(e);
                sup = sup.max(x.abs());
            }
            mass += m;
            edge += w * m;
        }
        let cell = self.grid.cell_measure();
        let energy = gradient_energy(self.grid, spectral)
            + potential_coefficient(self.spec) * pot * cell;
        StateSummary {
            mass: mass * cell,
            energy,
            boundary: if mass == 0.0 { 0.0 } else { edge / mass },
            sup,
        }
    }

    fn record(
        &mut self,
        t: f64,
        spectral: &[Complex64],
        physical: &Field,
        summary: &StateSummary,
    ) -> Result<NormRecord> {
        let cell = self.grid.spectral_cell_measure();
        let l2_sq = sum_over_modes(self.grid, spectral, |_, v| v.norm_sqr());
        let hhalf_sq = sum_over_modes(self.grid, spectral, |m, v| {
            (1.0 + m.norm_sq()).sqrt() * v.norm_sqr()
        });
        let lr = if self.opts.target_r.is_infinite() {
            summary.sup
        } else {
            norm(physical, &NormSpec::lebesgue(self.opts.target_r))?
        };
        let mut probes = Vec::with_capacity(self.opts.probes.len());
        for (p, op) in self.opts.probes.iter().zip(&self.probe_ops) {
            let v = match op {
                None => norm(physical, &p.norm)?,
                Some(sym) => {
                    self.scratch.clear();
                    self.scratch
                        .extend(spectral.iter().zip(sym).map(|(a, b)| a * b));
                    fft_inverse(self.grid, &mut self.scratch);
                    self.scratch.iter_mut().for_each(|v| v.im = 0.0);
                    let data = std::mem::take(&mut self.scratch);
                    let f = Field::from_data(self.grid, Rep::Physical, data, true)?;
                    let v = norm(&f, &p.norm)?;
                    self.scratch = f.into_data();
                    v
                }
            };
            probes.push(v);
        }
        Ok(NormRecord {
            t,
            l2: (l2_sq * cell).sqrt(),
            linf: summary.sup,
            lr_target: lr,
            hhalf: (hhalf_sq * cell).sqrt(),
            mass: summary.mass,
            energy: summary.energy,
            boundary_mass_fraction: summary.boundary,
            probes,
        })
    }
}

fn validate(u0: &Field, spec: &EquationSpec, opts: &EvolveOptions) -> Result<()> {
    spec.validate()?;
    if spec.dim != u0.grid().dim() {
        return Err(LabError::Usage(format!(
            "equation is {}-dimensional but the data has {} axes",
            spec.dim,
            u0.grid().dim()
        )));
    }
    if !u0.is_real() {
        return Err(LabError::Usage("initial data must be real".into()));
    }
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(LabError::Usage(format!("horizon {} must be positive", opts.horizon)));
    }
    if let Some(dt) = opts.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LabError::Usage(format!("dt {dt} must be positive")));
        }
    }
    let b = opts.guard.buffer_fraction;
    if !(b > 0.0 && b < 0.5) {
        return Err(LabError::Config(format!(
            "guard.buffer_fraction {b} outside (0, 1/2)"
        )));
    }
    for p in &opts.probes {
        p.norm.validate()?;
    }
    let sup = u0.to_physical().sup_abs();
    if !sup.is_finite() {
        return Err(LabError::Numeric("initial data is not finite".into()));
    }
    Ok(())
}

/// Evolves `u0` up to `opts.horizon`, recording snapshots per the schedule.
///
/// With zero coupling the exact propagator is evaluated at each snapshot
/// time. Otherwise the data is projected onto the dealiasing band and
/// integrating-factor RK4 runs with the given or default
/// step; if the conservation drifts exceed the tolerances the attempt stops
/// at once and restarts with half the step, up to `max_halvings` times (the
/// last attempt runs to the end whatever its drift). The guard and a
/// non-finite state both end the run early without raising an error.
pub fn evolve(u0: &Field, spec: &EquationSpec, opts: &EvolveOptions) -> Result<Trajectory> {
    validate(u0, spec, opts)?;
    let times = opts.schedule.times(opts.horizon)?;
    if spec.is_linear() {
        return evolve_linear(u0, spec, opts, &times);
    }
    let mut dt = opts.dt.unwrap_or_else(|| default_dt(u0, spec));
    let mut halvings = 0;
    loop {
        let last = halvings >= opts.max_halvings;
        let mut traj = evolve_nonlinear(u0, spec, opts, &times, dt, !last)?;
        traj.halvings = halvings;
        if !drift_violated(&traj.ledger, opts) || last || traj.blow_up.is_some() {
            return Ok(traj);
        }
        dt *= 0.5;
        halvings += 1;
    }
}

fn drift_violated(ledger: &ConservedLedger, opts: &EvolveOptions) -> bool {
    ledger.max_mass_drift > opts.mass_tolerance || ledger.max_energy_drift > opts.energy_tolerance
}

fn new_trajectory(grid: &Arc<Grid>, spec: &EquationSpec, opts: &EvolveOptions, dt: f64) -> Trajectory {
    Trajectory {
        spec: *spec,
        grid: Arc::clone(grid),
        records: Vec::new(),
        stored: Vec::new(),
        ledger: ConservedLedger::default(),
        wrap_time: None,
        blow_up: None,
        dt,
        steps: 0,
        halvings: 0,
        probe_labels: opts.probes.iter().map(|p| p.label.clone()).collect(),
        target_r: opts.target_r,
    }
}

fn evolve_linear(
    u0: &Field,
    spec: &EquationSpec,
    opts: &EvolveOptions,
    times: &[f64],
) -> Result<Trajectory> {
    let grid = u0.grid();
    let base = u0.to_spectral().into_data();
    let mut rec = Recorder::new(grid, spec, opts)?;
    let keep = stored_indices(times.len(), opts.max_stored);
    let mut traj = new_trajectory(grid, spec, opts, 0.0);
    let mut spectral = vec![Complex64::new(0.0, 0.0); base.len()];
    for (i, &t) in times.iter().enumerate() {
        let family = spec.family;
        for_each_mode(grid, &mut spectral, |flat, m, v| {
            *v = base[flat] * Complex64::from_polar(1.0, t * dispersion(m, family));
        });
        let mut phys = spectral.clone();
        fft_inverse(grid, &mut phys);
        phys.iter_mut().for_each(|v| v.im = 0.0);
        let summary = rec.summarize(&spectral, &phys);
        let field = Field::from_data(grid, Rep::Physical, phys, true)?;
        let r = rec.record(t, &spectral, &field, &summary)?;
        traj.ledger.push(t, summary.mass, summary.energy);
        traj.records.push(r);
        if keep[i] {
            traj.stored.push((i, field));
        }
        traj.steps = i as u64;
        if summary.boundary > opts.guard.threshold {
            traj.wrap_time = Some(t);
            break;
        }
    }
    Ok(traj)
}

fn evolve_nonlinear(
    u0: &Field,
    spec: &EquationSpec,
    opts: &EvolveOptions,
    times: &[f64],
    dt: f64,
    stop_on_drift: bool,
) -> Result<Trajectory> {
    let grid = u0.grid();
    let mut stepper = Stepper::new(grid, spec)?;
    let mut rec = Recorder::new(grid, spec, opts)?;
    let keep = stored_indices(times.len(), opts.max_stored);
    let mut traj = new_trajectory(grid, spec, opts, dt);

    let mut state = u0.to_spectral().into_data();
    stepper.project(&mut state);
    let mut phys = state.clone();
    fft_inverse(grid, &mut phys);
    phys.iter_mut().for_each(|v| v.im = 0.0);
    let mut summary = rec.summarize(&state, &phys);
    traj.ledger.push(0.0, summary.mass, summary.energy);

    let mut t = 0.0;
    'outer: for (i, &ts) in times.iter().enumerate() {
        while t < ts {
            let remaining = ts - t;
            let (h, lands) = if remaining <= dt * (1.0 + 1e-9) {
                (remaining, true)
            } else {
                (dt, false)
            };
            match stepper.step(&mut state, t, h) {
                Ok(()) => {}
                Err(LabError::BlowUp { time, sup }) => {
                    traj.blow_up = Some((time, sup));
                    break 'outer;
                }
                Err(e) => return Err(e),
            }
            t = if lands { ts } else { t + h };
            traj.steps += 1;
            phys.copy_from_slice(&state);
            fft_inverse(grid, &mut phys);
            phys.iter_mut().for_each(|v| v.im = 0.0);
            summary = rec.summarize(&state, &phys);
            if !(summary.sup.is_finite() && summary.energy.is_finite()) {
                traj.blow_up = Some((t, summary.sup));
                break 'outer;
            }
            traj.ledger.push(t, summary.mass, summary.energy);
            if stop_on_drift && drift_violated(&traj.ledger, opts) {
                return Ok(traj);
            }
            if summary.boundary > opts.guard.threshold {
                traj.wrap_time = Some(t);
                break 'outer;
            }
        }
        let field = Field::from_data(grid, Rep::Physical, phys.clone(), true)?;
        let r = rec.record(ts, &state, &field, &summary)?;
        traj.records.push(r);
        if keep[i] {
            traj.stored.push((i, field));
        }
    }
    Ok(traj)
}
