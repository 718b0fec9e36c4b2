use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::{corpus_sample, sample_rng};
use super::norm::{norm, NormSpec};
use crate::error::{LabError, Result};
use crate::spectral::{apply_multiplier, Field, Grid, Multiplier};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityForm {
    /// `||J^s(fg) - f J^s g||_p` against `||g||_inf ||J^s f||_p + ||grad f||_inf ||J^{s-1} g||_p`.
    KatoPonce,
    /// `||D^s(fg) - f D^s g - g D^s f||_p` against `||g||_inf ||D^s f||_p`.
    LeibnizFrac,
    /// `||D^s(fg)||_1` against `||g D^s f||_1 + ||f||_2 ||D^s g||_2`.
    LeibnizEndpoint,
    /// `||fg||_{L^{p,q}}` against `||f||_{L^{p1,q1}} ||g||_{L^{p2,q2}}`.
    LorentzHolder,
    /// `||f||_{L^{p,r}}` against `||f||_{L^{p,q}}` for `q < r`.
    LorentzEmbedding,
}

impl InequalityForm {
    pub fn name(self) -> &'static str {
        match self {
            InequalityForm::KatoPonce => "kato_ponce",
            InequalityForm::LeibnizFrac => "leibniz_frac",
            InequalityForm::LeibnizEndpoint => "leibniz_endpoint",
            InequalityForm::LorentzHolder => "lorentz_holder",
            InequalityForm::LorentzEmbedding => "lorentz_embedding",
        }
    }

    pub const COMMUTATORS: [InequalityForm; 3] = [
        InequalityForm::KatoPonce,
        InequalityForm::LeibnizFrac,
        InequalityForm::LeibnizEndpoint,
    ];
}

/// One row of `inequality.csv`. For the Lorentz forms `s` holds the second
/// Lorentz index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityEntry {
    pub sample_id: u64,
    pub form: InequalityForm,
    pub s: f64,
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

fn entry(form: InequalityForm, s: f64, p: f64, lhs: f64, rhs: f64) -> Result<InequalityEntry> {
    if !(lhs.is_finite() && rhs.is_finite()) {
        return Err(LabError::Numeric(format!(
            "{}: non-finite sides lhs = {lhs}, rhs = {rhs}",
            form.name()
        )));
    }
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        return Err(LabError::Numeric(format!(
            "{}: right side vanishes with lhs = {lhs}",
            form.name()
        )));
    };
    Ok(InequalityEntry {
        sample_id: 0,
        form,
        s,
        p,
        lhs,
        rhs,
        ratio,
    })
}

fn check_commutator_range(form: InequalityForm, s: f64, p: f64) -> Result<()> {
    let bad = |m: &str| Err(LabError::Usage(format!("{}: {m} (s = {s}, p = {p})", form.name())));
    match form {
        InequalityForm::KatoPonce => {
            if !(s > 0.0 && s.is_finite()) || !(p > 1.0 && p.is_finite()) {
                return bad("needs s > 0 and 1 < p < inf");
            }
        }
        InequalityForm::LeibnizFrac => {
            if !(s > 0.0 && s < 1.0) || !(p > 1.0 && p.is_finite()) {
                return bad("needs 0 < s < 1 and 1 < p < inf");
            }
        }
        InequalityForm::LeibnizEndpoint => {
            if !(s > 0.0 && s < 1.0) || p != 1.0 {
                return bad("needs 0 < s < 1 and p = 1");
            }
        }
        _ => return bad("not a commutator form"),
    }
    Ok(())
}

fn lp(f: &Field, p: f64) -> Result<f64> {
    norm(f, &NormSpec::lebesgue(p))
}

fn gradient_sup(f: &Field) -> Result<f64> {
    let d = f.grid().dim();
    let parts = (0..d)
        .map(|a| apply_multiplier(f, &Multiplier::partial(a)))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0.0f64;
    for j in 0..f.grid().size() {
        let s: f64 = parts.iter().map(|g| g.data()[j].re.powi(2)).sum();
        best = best.max(s.sqrt());
    }
    Ok(best)
}

/// Evaluates both sides of a commutator or Leibniz inequality for `f, g`.
pub fn commutator_check(f: &Field, g: &Field, s: f64, p: f64, form: InequalityForm) -> Result<InequalityEntry> {
    check_commutator_range(form, s, p)?;
    let f = f.to_physical();
    let g = g.to_physical();
    let fg = f.mul(&g)?;
    match form {
        InequalityForm::KatoPonce => {
            let js = Multiplier::inhomogeneous(s);
            let comm = apply_multiplier(&fg, &js)?.axpy(-1.0, &f.mul(&apply_multiplier(&g, &js)?)?)?;
            let lhs = lp(&comm, p)?;
            let rhs = lp(&g, f64::INFINITY)? * lp(&apply_multiplier(&f, &js)?, p)?
                + gradient_sup(&f)? * lp(&apply_multiplier(&g, &Multiplier::inhomogeneous(s - 1.0))?, p)?;
            entry(form, s, p, lhs, rhs)
        }
        InequalityForm::LeibnizFrac => {
            let ds = Multiplier::homogeneous(s);
            let dsf = apply_multiplier(&f, &ds)?;
            let dsg = apply_multiplier(&g, &ds)?;
            let rem = apply_multiplier(&fg, &ds)?
                .axpy(-1.0, &f.mul(&dsg)?)?
                .axpy(-1.0, &g.mul(&dsf)?)?;
            let lhs = lp(&rem, p)?;
            let rhs = lp(&g, f64::INFINITY)? * lp(&dsf, p)?;
            entry(form, s, p, lhs, rhs)
        }
        InequalityForm::LeibnizEndpoint => {
            let ds = Multiplier::homogeneous(s);
            let dsf = apply_multiplier(&f, &ds)?;
            let dsg = apply_multiplier(&g, &ds)?;
            let lhs = lp(&apply_multiplier(&fg, &ds)?, 1.0)?;
            let rhs = lp(&g.mul(&dsf)?, 1.0)? + lp(&f, 2.0)? * lp(&dsg, 2.0)?;
            entry(form, s, p, lhs, rhs)
        }
        _ => unreachable!("range check rejects non-commutator forms"),
    }
}

/// `||fg||_{L^{p,q}} / (||f||_{L^{p1,q1}} ||g||_{L^{p2,q2}})` with
/// `1/p = 1/p1 + 1/p2` and `1/q = 1/q1 + 1/q2`.
pub fn lorentz_holder_check(f: &Field, g: &Field, first: (f64, f64), second: (f64, f64)) -> Result<InequalityEntry> {
    let p = 1.0 / (1.0 / first.0 + 1.0 / second.0);
    let q = 1.0 / (1.0 / first.1 + 1.0 / second.1);
    let fg = f.to_physical().mul(&g.to_physical())?;
    let lhs = norm(&fg, &NormSpec::lorentz(p, q))?;
    let rhs = norm(f, &NormSpec::lorentz(first.0, first.1))? * norm(g, &NormSpec::lorentz(second.0, second.1))?;
    entry(InequalityForm::LorentzHolder, q, p, lhs, rhs)
}

/// `||f||_{L^{p,r}} / ||f||_{L^{p,q}}` for `q < r`.
pub fn lorentz_embedding_check(f: &Field, p: f64, q: f64, r: f64) -> Result<InequalityEntry> {
    if !(q < r) {
        return Err(LabError::Usage(format!("embedding needs q < r, got {q}, {r}")));
    }
    let lhs = norm(f, &NormSpec::lorentz(p, r))?;
    let rhs = norm(f, &NormSpec::lorentz(p, q))?;
    entry(InequalityForm::LorentzEmbedding, r, p, lhs, rhs)
}

/// Corpus statistics for one inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub form: InequalityForm,
    pub corpus_size: usize,
    pub seed: u64,
    pub entries: Vec<InequalityEntry>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    /// Ratios above this count as violations.
    pub cap: Option<f64>,
    pub violations: usize,
}

impl InequalityReport {
    fn from_entries(form: InequalityForm, seed: u64, entries: Vec<InequalityEntry>, cap: Option<f64>) -> Self {
        let mut r: Vec<f64> = entries.iter().map(|e| e.ratio).collect();
        r.sort_by(f64::total_cmp);
        let median = match r.len() {
            0 => 0.0,
            n if n % 2 == 1 => r[n / 2],
            n => 0.5 * (r[n / 2 - 1] + r[n / 2]),
        };
        let violations = cap.map_or(0, |c| r.iter().filter(|&&x| x > c).count());
        InequalityReport {
            form,
            corpus_size: entries.len(),
            seed,
            max_ratio: r.last().copied().unwrap_or(0.0),
            median_ratio: median,
            cap,
            violations,
            entries,
        }
    }
}

fn sample_parameters(form: InequalityForm, seed: u64, index: u64) -> (f64, f64, f64, f64) {
    let mut rng = sample_rng(seed ^ 0x9e37_79b9_7f4a_7c15, index);
    match form {
        InequalityForm::KatoPonce => (rng.random_range(0.25..2.0), rng.random_range(1.5..4.0), 0.0, 0.0),
        InequalityForm::LeibnizFrac => (rng.random_range(0.1..0.9), rng.random_range(1.5..4.0), 0.0, 0.0),
        InequalityForm::LeibnizEndpoint => (rng.random_range(0.1..0.9), 1.0, 0.0, 0.0),
        InequalityForm::LorentzHolder => (
            rng.random_range(2.0..8.0),
            rng.random_range(2.0..8.0),
            rng.random_range(2.0..8.0),
            rng.random_range(2.0..8.0),
        ),
        InequalityForm::LorentzEmbedding => {
            let q = rng.random_range(1.0..4.0);
            (rng.random_range(1.0..6.0), q, q + rng.random_range(0.5..4.0), 0.0)
        }
    }
}

/// Evaluates `size` samples of `form`; sample `i` uses corpus fields `2i`
/// and `2i + 1` and its own parameter stream.
pub fn inequality_corpus(
    grid: &Arc<Grid>,
    form: InequalityForm,
    seed: u64,
    size: usize,
    cap: Option<f64>,
) -> Result<InequalityReport> {
    let entries = (0..size as u64)
        .into_par_iter()
        .map(|i| {
            let (_, f) = corpus_sample(grid, seed, 2 * i);
            let (_, g) = corpus_sample(grid, seed, 2 * i + 1);
            let (a, b, c, d) = sample_parameters(form, seed, i);
            let mut e = match form {
                InequalityForm::LorentzHolder => lorentz_holder_check(&f, &g, (a, b), (c, d))?,
                InequalityForm::LorentzEmbedding => lorentz_embedding_check(&f, a, b, c)?,
                _ => commutator_check(&f, &g, a, b, form)?,
            };
            e.sample_id = i;
            Ok(e)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InequalityReport::from_entries(form, seed, entries, cap))
}

/// Calibrates the corpus maximum on `calibration_seed`, then counts
/// verification ratios exceeding it by more than `slack` (e.g. 0.05).
pub fn calibrated_check(
    grid: &Arc<Grid>,
    form: InequalityForm,
    calibration_seed: u64,
    verification_seed: u64,
    calibration_size: usize,
    size: usize,
    slack: f64,
) -> Result<(InequalityReport, InequalityReport)> {
    let calib = inequality_corpus(grid, form, calibration_seed, calibration_size, None)?;
    let cap = calib.max_ratio * (1.0 + slack);
    let verify = inequality_corpus(grid, form, verification_seed, size, Some(cap))?;
    Ok((calib, verify))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn constant_multiplier_commutes() {
        let g = make_grid(&[128], &[30.0]).unwrap();
        let c = Field::from_fn(&g, |_| 2.5);
        let h = Field::from_fn(&g, |x| (-0.5 * x[0] * x[0]).exp() * (1.0 + x[0]));
        let e = commutator_check(&c, &h, 1.5, 2.0, InequalityForm::KatoPonce).unwrap();
        assert!(e.lhs < 1e-12, "{}", e.lhs);
    }

    #[test]
    fn range_violations() {
        let g = make_grid(&[32], &[10.0]).unwrap();
        let f = Field::from_fn(&g, |x| (-x[0] * x[0]).exp());
        assert!(commutator_check(&f, &f, 1.2, 2.0, InequalityForm::LeibnizFrac).is_err());
        assert!(commutator_check(&f, &f, 0.5, 2.0, InequalityForm::LeibnizEndpoint).is_err());
        assert!(commutator_check(&f, &f, 0.5, 1.0, InequalityForm::KatoPonce).is_err());
    }

    #[test]
    fn report_is_deterministic() {
        let g = make_grid(&[128], &[40.0]).unwrap();
        let a = inequality_corpus(&g, InequalityForm::LeibnizFrac, 3, 6, None).unwrap();
        let b = inequality_corpus(&g, InequalityForm::LeibnizFrac, 3, 6, None).unwrap();
        assert_eq!(a, b);
        assert!(a.entries.iter().all(|e| e.ratio >= 0.0 && e.ratio.is_finite()));
    }
}
