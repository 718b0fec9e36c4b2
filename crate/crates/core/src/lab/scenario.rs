use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{
    CorpusConfig, DataConfig, DataProfile, EquationConfig, ExperimentConfig, Exponent, GridConfig,
    KatoConfig, Normalization, ScenarioKind, StrichartzConfig, TargetConfig, TimeConfig,
};
use super::emit::{BlowUpRecord, Check, Emitter, FitReport, RunManifest};
use crate::analysis::{
    calibrated_check, corpus_sample, decay_fit, kato_smoothing_ratio, mixed_norm, norm,
    random_phase, sample_rng, sobolev, strichartz_ratio, weighted_lorentz, InequalityEntry,
    InequalityForm, MixedOrder, NormSpec, StrichartzPair, TimeGrid,
};
use crate::dynamics::{
    evolve, EquationSpec, EvolveOptions, GuardOptions, Probe, ProbeOperator, Schedule, Sign,
    Trajectory,
};
use crate::error::{LabError, Result};
use crate::spectral::{make_grid, Family, Field, Grid};

const INF: f64 = f64::INFINITY;

fn base() -> ExperimentConfig {
    ExperimentConfig {
        scenario: ScenarioKind::Simulate,
        seed: 0,
        out: None,
        long_running: false,
        equation: EquationConfig {
            family: Family::Airy,
            dim: 1,
            k: 4,
            sign: Sign::Defocusing,
            coupling: 1.0,
            linear: false,
        },
        grid: GridConfig {
            n: vec![8192],
            lengths: vec![400.0 * PI],
        },
        data: DataConfig {
            profile: DataProfile::Gaussian {
                width: 1.0,
                carrier: 0.0,
            },
            amplitude: 0.1,
            normalization: Normalization::Hhalf,
        },
        time: TimeConfig {
            horizon: 50.0,
            dt: None,
            schedule: Schedule::Geometric {
                start: 0.5,
                ratio: 1.05,
            },
            guard: GuardOptions::default(),
            max_stored: 0,
            max_halvings: 4,
            mass_tolerance: 1e-10,
            energy_tolerance: 1e-8,
        },
        targets: TargetConfig {
            window: [5.0, 50.0],
            r: vec![Exponent(INF)],
            tolerance: 0.05,
        },
        kato: KatoConfig {
            x_star: vec![0.0, 5.0],
            t_max: 20.0,
            dt: 0.01,
            tolerance: 0.01,
            invariance: 1e-3,
        },
        strichartz: StrichartzConfig {
            theta: vec![0.0, 0.2, 0.4, 0.6, 0.8],
            alpha: vec![0.0, 0.125, 0.25, 0.375, 0.5],
            corpus_size: 50,
            corpus_pair: [0.4, 0.5],
            lambda: 2.0,
            invariance: 0.02,
            snapshot_interval: 0.05,
        },
        corpus: CorpusConfig {
            size: 200,
            calibration_size: 2000,
            slack: 0.05,
            verification_seed: 1,
        },
    }
}

fn geometric(start: f64, end: f64, intervals: u32) -> Schedule {
    Schedule::Geometric {
        start,
        ratio: (end / start).powf(1.0 / intervals as f64),
    }
}

/// Preset configuration of each catalog entry.
pub fn preset(kind: ScenarioKind) -> ExperimentConfig {
    let mut c = base();
    c.scenario = kind;
    let linear_sup = DataConfig {
        profile: DataProfile::Gaussian {
            width: 1.0,
            carrier: 0.0,
        },
        amplitude: 1.0,
        normalization: Normalization::Sup,
    };
    let gaussian = |width: f64| DataProfile::Gaussian { width, carrier: 0.0 };
    match kind {
        ScenarioKind::Simulate => {
            c.targets.r.clear();
        }
        ScenarioKind::LinearDecayKdv => {
            c.equation.linear = true;
            c.data = linear_sup;
            c.time.schedule = geometric(5.0, 50.0, 24);
            c.time.guard.threshold = 1e-2;
            c.targets.r = vec![Exponent(INF), Exponent(4.0), Exponent(8.0)];
            c.targets.tolerance = 0.03;
        }
        ScenarioKind::NonlinearDecayGkdv => {}
        ScenarioKind::LinearDecayZk2d | ScenarioKind::NonlinearDecayZk2d => {
            c.equation.family = Family::Zk;
            c.equation.dim = 2;
            c.grid = GridConfig {
                n: vec![1024, 1024],
                lengths: vec![128.0 * PI, 128.0 * PI],
            };
            c.time.horizon = 30.0;
            c.targets.window = [5.0, 30.0];
            if kind == ScenarioKind::LinearDecayZk2d {
                c.equation.linear = true;
                c.data = linear_sup;
                c.data.profile = gaussian(0.6);
                c.time.schedule = geometric(5.0, 30.0, 20);
                c.time.guard.threshold = 0.2;
                c.targets.r = vec![Exponent(INF), Exponent(8.0)];
            } else {
                c.equation.k = 3;
                c.equation.sign = Sign::Focusing;
                c.data.profile = gaussian(0.6);
                c.time.schedule = Schedule::Geometric {
                    start: 1.0,
                    ratio: 1.1,
                };
                c.time.guard.threshold = 0.1;
                c.targets.tolerance = 0.08;
            }
        }
        ScenarioKind::LinearDecayZk3d => {
            c.equation.family = Family::Zk;
            c.equation.dim = 3;
            c.equation.linear = true;
            c.grid = GridConfig {
                n: vec![2048, 128, 128],
                lengths: vec![2048.0 * 0.3, 128.0 * 0.3, 128.0 * 0.3],
            };
            c.data = linear_sup;
            c.data.profile = gaussian(0.5);
            c.time.horizon = 12.0;
            c.time.schedule = geometric(2.0, 12.0, 10);
            c.time.guard.threshold = 1.0;
            c.targets.window = [2.0, 12.0];
            c.targets.tolerance = 0.1;
        }
        ScenarioKind::NonlinearDecayZk3d => {
            c.equation.family = Family::Zk;
            c.equation.dim = 3;
            c.grid = GridConfig {
                n: vec![512, 64, 64],
                lengths: vec![512.0 * 0.3, 64.0 * 0.3, 64.0 * 0.3],
            };
            c.data.profile = gaussian(0.5);
            c.time.horizon = 12.0;
            c.time.schedule = geometric(1.0, 12.0, 16);
            c.time.guard.threshold = 0.5;
            c.targets.window = [2.0, 12.0];
            c.targets.tolerance = 0.1;
        }
        ScenarioKind::AnisotropicZk4d => {
            c.equation.family = Family::Zk;
            c.equation.dim = 4;
            c.equation.k = 3;
            c.equation.linear = true;
            c.grid = GridConfig {
                n: vec![16, 128, 128, 128],
                lengths: vec![16.0 * 0.4, 128.0 * 0.8, 128.0 * 0.8, 128.0 * 0.8],
            };
            c.data = linear_sup;
            c.time.horizon = 12.0;
            c.time.schedule = geometric(2.0, 12.0, 10);
            c.time.guard.threshold = 1.0;
            c.targets.window = [2.0, 12.0];
            c.targets.r.clear();
            c.targets.tolerance = 0.15;
        }
        ScenarioKind::KatoIdentity => {
            c.equation.linear = true;
            c.data = DataConfig {
                profile: DataProfile::Gaussian {
                    width: 3.0,
                    carrier: 2.0,
                },
                amplitude: 1.0,
                normalization: Normalization::Sup,
            };
        }
        ScenarioKind::StrichartzScan => {
            c.equation.linear = true;
            c.data = linear_sup;
            c.time.horizon = 15.0;
        }
        ScenarioKind::CommutatorCorpus | ScenarioKind::LorentzUnit => {
            c.grid = GridConfig {
                n: vec![512],
                lengths: vec![40.0],
            };
        }
    }
    c
}

/// Decay rate of `||U(t) u0||_{L^r}` in dimension `d`: `(d/3)(1 - 2/r)` for
/// `d <= 2`, `1 - 2/r` from three dimensions on.
pub fn decay_rate(dim: usize, r: f64) -> f64 {
    let theta = if r.is_infinite() { 1.0 } else { 1.0 - 2.0 / r };
    match dim {
        1 => theta / 3.0,
        2 => 2.0 * theta / 3.0,
        _ => theta,
    }
}

fn profile_field(grid: &Arc<Grid>, profile: &DataProfile, seed: u64, lambda: f64) -> Result<Field> {
    let d = grid.dim();
    Ok(match *profile {
        DataProfile::Gaussian { width, carrier } => {
            let w = width / lambda;
            let c = carrier * lambda;
            Field::from_fn(grid, move |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (-0.5 * r2 / (w * w)).exp() * (c * x[0]).cos()
            })
        }
        DataProfile::Spectral { decay, cutoff } => {
            let scale = lambda.powi(-(d as i32));
            Field::from_spectrum(grid, true, move |m| {
                let r2 = m.norm_sq() / (lambda * lambda);
                let v = (1.0 + r2).powf(-0.5 * decay) * (-r2 / (cutoff * cutoff)).exp();
                num_complex::Complex64::new(scale * v, 0.0)
            })
            .into_physical()
        }
        DataProfile::RandomSobolev { sigma } => {
            if lambda != 1.0 {
                return Err(LabError::Usage("random data cannot be rescaled".into()));
            }
            random_phase(grid, sigma, &mut sample_rng(seed, 0))
        }
    })
}

fn measure(f: &Field, n: Normalization) -> f64 {
    match n {
        Normalization::Sup => f.sup_abs(),
        Normalization::L2 => f.l2_norm(),
        Normalization::Hhalf => sobolev(f, 0.5, false),
    }
}

/// Initial state of `cfg`, scaled to `data.amplitude` in the chosen norm.
pub fn initial_data(cfg: &ExperimentConfig) -> Result<Field> {
    initial_data_scaled(cfg, 1.0)
}

/// `lambda^{d/2} u0(lambda x)` on the grid of `cfg`, where `u0` is the
/// normalized initial state.
pub fn initial_data_scaled(cfg: &ExperimentConfig, lambda: f64) -> Result<Field> {
    let grid = make_grid(&cfg.grid.n, &cfg.grid.lengths)?;
    let raw = profile_field(&grid, &cfg.data.profile, cfg.seed, 1.0)?;
    let size = measure(&raw, cfg.data.normalization);
    if !(size > 0.0 && size.is_finite()) {
        return Err(LabError::Config(
            "data.profile vanishes on the grid: degenerate data".into(),
        ));
    }
    let c = cfg.data.amplitude / size;
    if lambda == 1.0 {
        return Ok(raw.scale(c));
    }
    let scaled = profile_field(&grid, &cfg.data.profile, cfg.seed, lambda)?;
    Ok(scaled.scale(c * lambda.powf(0.5 * grid.dim() as f64)))
}

fn options(cfg: &ExperimentConfig) -> EvolveOptions {
    let t = &cfg.time;
    let finite: Vec<f64> = cfg.targets.r.iter().map(|r| r.0).filter(|r| r.is_finite()).collect();
    let mut probes: Vec<Probe> = finite
        .iter()
        .map(|&r| Probe::new(format!("L{r}"), ProbeOperator::Identity, NormSpec::lebesgue(r)))
        .collect();
    if cfg.scenario == ScenarioKind::AnisotropicZk4d {
        probes.push(Probe::new(
            "dx_L6y_L2x",
            ProbeOperator::PartialX,
            NormSpec::AnisotropicYX { p_y: 6.0, p_x: 2.0 },
        ));
    }
    EvolveOptions {
        horizon: t.horizon,
        dt: t.dt,
        schedule: t.schedule.clone(),
        guard: t.guard,
        max_stored: t.max_stored,
        target_r: finite.first().copied().unwrap_or(INF),
        probes,
        mass_tolerance: t.mass_tolerance,
        energy_tolerance: t.energy_tolerance,
        max_halvings: t.max_halvings,
    }
}

fn fit_report(
    label: &str,
    traj: &Trajectory,
    series: &[f64],
    window: [f64; 2],
    target: Option<f64>,
    tolerance: f64,
) -> FitReport {
    let times = traj.times();
    let end = window[1].min(traj.valid_until());
    let weight = target.map_or(0.0, |t| -t);
    match decay_fit(&times, series, (window[0], end), weight) {
        Ok(f) => FitReport {
            label: label.to_string(),
            window: [f.window.0, f.window.1],
            exponent: f.exponent,
            stderr: f.stderr,
            amplitude: f.amplitude,
            r_squared: f.r_squared,
            weight,
            weighted_sup: f.weighted_sup,
            samples: f.samples,
            target,
            tolerance: target.map(|_| tolerance),
            pass: target.is_none_or(|t| (f.exponent - t).abs() <= tolerance),
            note: None,
        },
        Err(e) => FitReport {
            label: label.to_string(),
            window: [window[0], end],
            exponent: f64::NAN,
            stderr: f64::NAN,
            amplitude: f64::NAN,
            r_squared: f64::NAN,
            weight,
            weighted_sup: f64::NAN,
            samples: 0,
            target,
            tolerance: target.map(|_| tolerance),
            pass: false,
            note: Some(e.to_string()),
        },
    }
}

fn run_decay(cfg: &ExperimentConfig, em: &mut Emitter, m: &mut RunManifest) -> Result<()> {
    let spec = cfg.equation.spec();
    let u0 = initial_data(cfg)?;
    let opts = options(cfg);
    let traj = evolve(&u0, &spec, &opts)?;
    em.norms(&traj)?;
    em.probes(&traj)?;

    m.snapshots = traj.records.len();
    m.steps = traj.steps;
    m.dt = (!spec.is_linear()).then_some(traj.dt);
    m.halvings = traj.halvings;
    m.wrap_time = traj.wrap_time;
    m.blow_up = traj.blow_up.map(|(time, sup)| BlowUpRecord { time, sup });
    m.mass_drift = Some(traj.ledger.max_mass_drift);
    m.energy_drift = Some(traj.ledger.max_energy_drift);

    let dim = spec.dim;
    let tol = cfg.targets.tolerance;
    let window = cfg.targets.window;
    let linf: Vec<f64> = traj.records.iter().map(|r| r.linf).collect();
    let mut probe = 0;
    for r in &cfg.targets.r {
        let r = r.0;
        let target = Some(-decay_rate(dim, r));
        let label = if r.is_infinite() { "Linf".to_string() } else { format!("L{r}") };
        let fit = if r.is_infinite() {
            fit_report(&label, &traj, &linf, window, target, tol)
        } else {
            let s = traj.probe_series(probe);
            probe += 1;
            fit_report(&label, &traj, &s, window, target, tol)
        };
        m.fits.push(fit);
    }
    if cfg.scenario == ScenarioKind::AnisotropicZk4d {
        let s = traj.probe_series(probe);
        m.fits.push(fit_report("dx_L6y_L2x", &traj, &s, window, Some(-1.0), tol));
        let mut info = fit_report("Linf", &traj, &linf, window, None, tol);
        info.note = Some("informational: the x-period is far shorter than the spread".into());
        m.fits.push(info);
    }
    for f in &m.fits {
        let mut c = Check::new(format!("fit_{}", f.label), f.exponent, f.pass);
        c.target = f.target;
        c.tolerance = f.tolerance;
        c.note = f.note.clone();
        m.checks.push(c);
    }

    if !spec.is_linear() {
        let rate = decay_rate(dim, INF);
        let end = traj.valid_until();
        let (x_t, samples) = traj
            .records
            .iter()
            .filter(|r| r.t > 0.0 && r.t <= end)
            .fold((0.0f64, 0usize), |(s, n), r| (s.max(r.t.powf(rate) * r.linf), n + 1));
        let l1 = norm(&u0, &NormSpec::lebesgue(1.0))?;
        let ratio = x_t / l1;
        m.checks.push(
            Check::new("weighted_sup_over_L1", ratio, ratio.is_finite() && samples > 0).with_note(format!(
                "sup over {samples} snapshots in (0, {end}] of t^{rate} ||u||_inf, divided by ||u0||_L1 = {l1}"
            )),
        );
        m.checks.push(Check::at_most("mass_drift", traj.ledger.max_mass_drift, cfg.time.mass_tolerance));
        m.checks.push(Check::at_most(
            "energy_drift",
            traj.ledger.max_energy_drift,
            cfg.time.energy_tolerance,
        ));
    }
    let blow = traj.blow_up.map_or(0.0, |b| b.0);
    m.checks.push(Check::new("no_blow_up", blow, traj.blow_up.is_none()));
    let fit_json: Vec<&FitReport> = m.fits.iter().collect();
    em.json("fit.json", &fit_json)?;
    Ok(())
}

fn run_kato(cfg: &ExperimentConfig, em: &mut Emitter, m: &mut RunManifest) -> Result<()> {
    let u0 = initial_data(cfg)?;
    let grid_t = TimeGrid {
        t_max: cfg.kato.t_max,
        dt: cfg.kato.dt,
    };
    let want = 1.0 / 3f64.sqrt();
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    for &x in &cfg.kato.x_star {
        let k = kato_smoothing_ratio(&u0, x, &grid_t)?;
        let mut c = Check::near(format!("kato_ratio_x{x}"), k.ratio, want, cfg.kato.tolerance * want);
        c.note = k.warning.clone();
        m.checks.push(c);
        rows.push(vec![
            super::emit::fmt_num(x),
            super::emit::fmt_num(k.ratio),
            super::emit::fmt_num(k.endpoint_level),
        ]);
        ratios.push(k.ratio);
    }
    if ratios.len() > 1 {
        let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        m.checks.push(Check::at_most("kato_x_star_spread", (hi - lo) / want, cfg.kato.invariance));
    }
    m.snapshots = grid_t.samples()?.len();
    em.table("kato.csv", &["x_star", "ratio", "endpoint_level"], &rows)
}

fn strichartz_opts(horizon: f64, interval: f64, guard: GuardOptions) -> EvolveOptions {
    let mut o = EvolveOptions::new(horizon);
    o.schedule = Schedule::Uniform { interval };
    o.max_stored = usize::MAX;
    o.guard = guard;
    o
}

fn critical_norm() -> NormSpec {
    NormSpec::MixedXT {
        p_x: 5.0,
        q_t: 10.0,
        order: MixedOrder::XOuter,
        q_lorentz: None,
    }
}

fn run_strichartz(cfg: &ExperimentConfig, em: &mut Emitter, m: &mut RunManifest) -> Result<()> {
    let s = &cfg.strichartz;
    let spec = EquationSpec::gkdv(1, Sign::Defocusing).linear();
    let u0 = initial_data(cfg)?;
    let traj = evolve(&u0, &spec, &strichartz_opts(cfg.time.horizon, s.snapshot_interval, cfg.time.guard))?;
    let end = traj.valid_until();
    m.snapshots = traj.records.len();
    m.wrap_time = traj.wrap_time;
    let window = (0.0, end);

    let mut rows = Vec::new();
    let mut all_finite = true;
    for &theta in &s.theta {
        for &alpha in &s.alpha {
            let pair = StrichartzPair::new(theta, alpha)?;
            let ratio = strichartz_ratio(&traj, &pair, window)?;
            all_finite &= ratio.is_finite() && ratio > 0.0;
            if theta == 0.0 {
                m.checks.push(Check::near(format!("isometry_alpha{alpha}"), ratio, 1.0, 1e-10));
            }
            rows.push(
                [theta, alpha, pair.q(), pair.p(), pair.gain(), ratio]
                    .iter()
                    .map(|&v| super::emit::fmt_num(v))
                    .collect(),
            );
        }
    }
    em.table("strichartz.csv", &["theta", "alpha", "q", "p", "gain", "ratio"], &rows)?;
    m.checks.push(Check::new("pair_grid_finite", rows.len() as f64, all_finite));

    let crit = mixed_norm(&traj, &critical_norm(), window)? / u0.l2_norm();
    let lambda = s.lambda;
    let l3 = lambda.powi(3);
    let u_lam = initial_data_scaled(cfg, lambda)?;
    let traj_lam = evolve(
        &u_lam,
        &spec,
        &strichartz_opts(cfg.time.horizon / l3, s.snapshot_interval / l3, cfg.time.guard),
    )?;
    let crit_lam = mixed_norm(&traj_lam, &critical_norm(), (0.0, end / l3))? / u_lam.l2_norm();
    drop(traj_lam);
    m.checks.push(
        Check::near("critical_L5x_L10t_scaling", crit_lam / crit, 1.0, s.invariance)
            .with_note(format!("ratio {crit} at lambda = 1, {crit_lam} at lambda = {lambda}")),
    );
    drop(traj);

    let grid = u0.grid().clone();
    let pair = StrichartzPair::new(s.corpus_pair[0], s.corpus_pair[1])?;
    let guard = GuardOptions {
        buffer_fraction: cfg.time.guard.buffer_fraction,
        threshold: 1.0,
    };
    let horizon = cfg.time.horizon;
    let ratios = (0..s.corpus_size as u64)
        .into_par_iter()
        .map(|i| {
            let (_, f) = corpus_sample(&grid, cfg.seed, i);
            let l2 = f.l2_norm();
            let f = f.scale(1.0 / l2);
            let t = evolve(&f, &spec, &strichartz_opts(horizon, s.snapshot_interval, guard))?;
            strichartz_ratio(&t, &pair, (0.0, horizon))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = ratios
        .iter()
        .enumerate()
        .map(|(i, r)| vec![i.to_string(), super::emit::fmt_num(*r)])
        .collect();
    em.table("strichartz_corpus.csv", &["sample_id", "ratio"], &rows)?;
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let finite = ratios.iter().all(|r| r.is_finite());
    m.checks.push(
        Check::new("corpus_max_ratio", max, finite)
            .with_note(format!("{} samples, pair theta = {}, alpha = {}", ratios.len(), pair.theta, pair.alpha)),
    );
    Ok(())
}

fn corpus_checks(
    cfg: &ExperimentConfig,
    forms: &[InequalityForm],
    m: &mut RunManifest,
) -> Result<(Vec<InequalityEntry>, Vec<InequalityEntry>)> {
    let grid = make_grid(&cfg.grid.n, &cfg.grid.lengths)?;
    let mut calib_rows = Vec::new();
    let mut verify_rows = Vec::new();
    for &form in forms {
        let (calib, verify) = calibrated_check(
            &grid,
            form,
            cfg.seed,
            cfg.corpus.verification_seed,
            cfg.corpus.calibration_size,
            cfg.corpus.size,
            cfg.corpus.slack,
        )?;
        let finite = verify.entries.iter().all(|e| e.ratio.is_finite());
        m.checks.push(
            Check::at_most(format!("{}_violations", form.name()), verify.violations as f64, 0.0).with_note(
                format!(
                    "calibration max {} (seed {}), verification max {} median {} (seed {}), cap {}",
                    calib.max_ratio,
                    calib.seed,
                    verify.max_ratio,
                    verify.median_ratio,
                    verify.seed,
                    verify.cap.unwrap_or(f64::NAN)
                ),
            ),
        );
        m.checks.push(Check::new(format!("{}_finite", form.name()), verify.max_ratio, finite));
        calib_rows.extend(calib.entries);
        verify_rows.extend(verify.entries);
    }
    Ok((calib_rows, verify_rows))
}

fn run_commutators(cfg: &ExperimentConfig, em: &mut Emitter, m: &mut RunManifest) -> Result<()> {
    let (calib, verify) = corpus_checks(cfg, &InequalityForm::COMMUTATORS, m)?;
    em.inequalities("inequality.csv", &verify)?;
    em.inequalities("inequality_calibration.csv", &calib)
}

/// `(p/q)^{1/q} [ (a^q - b^q) m1^{q/p} + b^q (m1 + m2)^{q/p} ]^{1/q}` for the
/// function equal to `a` on a set of measure `m1` and `b < a` on `m2`.
fn two_step_lorentz(a: f64, m1: f64, b: f64, m2: f64, p: f64, q: f64) -> f64 {
    let inner = (a.powf(q) - b.powf(q)) * m1.powf(q / p) + b.powf(q) * (m1 + m2).powf(q / p);
    (p / q).powf(1.0 / q) * inner.powf(1.0 / q)
}

fn run_lorentz(cfg: &ExperimentConfig, em: &mut Emitter, m: &mut RunManifest) -> Result<()> {
    let grid = make_grid(&cfg.grid.n, &cfg.grid.lengths)?;
    let cell = grid.cell_measure();
    let n = grid.size();
    let pairs = [(2.0, 1.0), (3.0, 2.0), (1.5, 4.0), (4.0, INF), (2.0, 2.0)];

    let mut worst: f64 = 0.0;
    for (j, &(p, q)) in pairs.iter().enumerate() {
        let cells = 7 + 31 * j;
        let vals: Vec<f64> = (0..n).map(|i| if i < cells { 1.0 } else { 0.0 }).collect();
        let f = Field::from_real(&grid, &vals)?;
        let a = cells as f64 * cell;
        let want = if q.is_infinite() { a.powf(1.0 / p) } else { (p / q).powf(1.0 / q) * a.powf(1.0 / p) };
        let got = norm(&f, &NormSpec::lorentz(p, q))?;
        worst = worst.max((got - want).abs() / want);
    }
    m.checks.push(Check::at_most("indicator_closed_form", worst, 1e-9));

    let mut worst: f64 = 0.0;
    for &(p, q) in pairs.iter().filter(|(_, q)| q.is_finite()) {
        let (a, b, m1, m2) = (2.5, 0.7, 13.0 * cell, 40.0 * cell);
        let mut vals = vec![0.0; n];
        vals[..13].iter_mut().for_each(|v| *v = a);
        vals[100..140].iter_mut().for_each(|v| *v = -b);
        let got = weighted_lorentz(&vals, &vec![cell; n], p, q)?;
        let want = two_step_lorentz(a, m1, b, m2, p, q);
        worst = worst.max((got - want).abs() / want);
    }
    m.checks.push(Check::at_most("two_step_closed_form", worst, 1e-9));

    let ps = [1.0, 1.5, 2.0, 3.0, 6.0];
    let worst = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let (_, f) = corpus_sample(&grid, cfg.seed, i);
            let p = ps[i as usize % ps.len()];
            let a = norm(&f, &NormSpec::lorentz(p, p))?;
            let b = norm(&f, &NormSpec::lebesgue(p))?;
            Ok((a - b).abs() / b)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    m.checks.push(Check::at_most("lorentz_pp_equals_lebesgue", worst, 1e-9));

    let (calib, verify) = corpus_checks(
        cfg,
        &[InequalityForm::LorentzHolder, InequalityForm::LorentzEmbedding],
        m,
    )?;
    em.inequalities("inequality.csv", &verify)?;
    em.inequalities("inequality_calibration.csv", &calib)
}

/// Runs one scenario, writes its files under the output directory and
/// returns the manifest. Blow-up in an evolving scenario is recorded as a
/// failed check rather than an error.
pub fn run_scenario(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    if cfg.scenario.is_long_running() && !cfg.long_running {
        return Err(LabError::Config(format!(
            "scenario {} is long-running; set long_running = true to run it",
            cfg.scenario
        )));
    }
    let start = Instant::now();
    let mut em = Emitter::new(&cfg.out_dir())?;
    let mut m = RunManifest::new(cfg);
    match cfg.scenario {
        k if k.evolves() => run_decay(cfg, &mut em, &mut m)?,
        ScenarioKind::KatoIdentity => run_kato(cfg, &mut em, &mut m)?,
        ScenarioKind::StrichartzScan => run_strichartz(cfg, &mut em, &mut m)?,
        ScenarioKind::CommutatorCorpus => run_commutators(cfg, &mut em, &mut m)?,
        ScenarioKind::LorentzUnit => run_lorentz(cfg, &mut em, &mut m)?,
        _ => unreachable!("every scenario is dispatched"),
    }
    m.pass = m.checks.iter().all(|c| c.pass);
    m.wall_clock_seconds = start.elapsed().as_secs_f64();
    em.finish(&mut m)?;
    Ok(m)
}

/// Runs independent scenarios concurrently on the current thread pool.
pub fn run_scenarios(cfgs: &[ExperimentConfig]) -> Vec<Result<RunManifest>> {
    cfgs.par_iter().map(run_scenario).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for k in ScenarioKind::ALL {
            let c = preset(k);
            c.validate().unwrap_or_else(|e| panic!("{k}: {e}"));
            assert_eq!(c.scenario, k);
        }
    }

    #[test]
    fn rates() {
        assert!((decay_rate(1, INF) - 1.0 / 3.0).abs() < 1e-15);
        assert!((decay_rate(1, 4.0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((decay_rate(2, 8.0) - 0.5).abs() < 1e-15);
        assert_eq!(decay_rate(3, INF), 1.0);
    }

    #[test]
    fn amplitude_normalization() {
        let mut c = preset(ScenarioKind::NonlinearDecayGkdv);
        c.grid = GridConfig {
            n: vec![1024],
            lengths: vec![80.0],
        };
        let u = initial_data(&c).unwrap();
        assert!((sobolev(&u, 0.5, false) - 0.1).abs() < 1e-12);
        c.data.normalization = Normalization::L2;
        let v = initial_data_scaled(&c, 2.0).unwrap();
        assert!((v.l2_norm() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn long_running_needs_opt_in() {
        let c = preset(ScenarioKind::AnisotropicZk4d);
        assert!(matches!(run_scenario(&c), Err(LabError::Config(_))));
    }
}
