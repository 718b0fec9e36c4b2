use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use super::scenario::preset;
use crate::dynamics::{EquationSpec, GuardOptions, Schedule, Sign};
use crate::error::{LabError, Result};
use crate::spectral::Family;

/// An exponent in `[1, inf]`; written as a number or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent(pub f64);

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Exponent;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                match v {
                    "inf" | "infinity" | "Inf" => Ok(Exponent(f64::INFINITY)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Simulate,
    LinearDecayKdv,
    NonlinearDecayGkdv,
    LinearDecayZk2d,
    NonlinearDecayZk2d,
    LinearDecayZk3d,
    NonlinearDecayZk3d,
    AnisotropicZk4d,
    KatoIdentity,
    StrichartzScan,
    CommutatorCorpus,
    LorentzUnit,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 12] = [
        ScenarioKind::Simulate,
        ScenarioKind::LinearDecayKdv,
        ScenarioKind::NonlinearDecayGkdv,
        ScenarioKind::LinearDecayZk2d,
        ScenarioKind::NonlinearDecayZk2d,
        ScenarioKind::LinearDecayZk3d,
        ScenarioKind::NonlinearDecayZk3d,
        ScenarioKind::AnisotropicZk4d,
        ScenarioKind::KatoIdentity,
        ScenarioKind::StrichartzScan,
        ScenarioKind::CommutatorCorpus,
        ScenarioKind::LorentzUnit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Simulate => "simulate",
            ScenarioKind::LinearDecayKdv => "linear_decay_kdv",
            ScenarioKind::NonlinearDecayGkdv => "nonlinear_decay_gkdv",
            ScenarioKind::LinearDecayZk2d => "linear_decay_zk2d",
            ScenarioKind::NonlinearDecayZk2d => "nonlinear_decay_zk2d",
            ScenarioKind::LinearDecayZk3d => "linear_decay_zk3d",
            ScenarioKind::NonlinearDecayZk3d => "nonlinear_decay_zk3d",
            ScenarioKind::AnisotropicZk4d => "anisotropic_zk4d",
            ScenarioKind::KatoIdentity => "kato_identity",
            ScenarioKind::StrichartzScan => "strichartz_scan",
            ScenarioKind::CommutatorCorpus => "commutator_corpus",
            ScenarioKind::LorentzUnit => "lorentz_unit",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| LabError::Config(format!("unknown scenario `{s}`")))
    }

    /// Scenarios that only run with `long_running = true`.
    pub fn is_long_running(self) -> bool {
        matches!(
            self,
            ScenarioKind::AnisotropicZk4d | ScenarioKind::NonlinearDecayZk3d
        )
    }

    /// Scenarios that evolve a single initial state.
    pub fn evolves(self) -> bool {
        matches!(
            self,
            ScenarioKind::Simulate
                | ScenarioKind::LinearDecayKdv
                | ScenarioKind::NonlinearDecayGkdv
                | ScenarioKind::LinearDecayZk2d
                | ScenarioKind::NonlinearDecayZk2d
                | ScenarioKind::LinearDecayZk3d
                | ScenarioKind::NonlinearDecayZk3d
                | ScenarioKind::AnisotropicZk4d
        )
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationConfig {
    pub family: Family,
    pub dim: usize,
    pub k: u32,
    pub sign: Sign,
    pub coupling: f64,
    /// Drops the nonlinearity.
    pub linear: bool,
}

impl EquationConfig {
    pub fn spec(&self) -> EquationSpec {
        EquationSpec {
            family: self.family,
            dim: self.dim,
            k: self.k,
            sign: self.sign,
            coupling: if self.linear { 0.0 } else { self.coupling },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: Vec<usize>,
    pub lengths: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataProfile {
    /// `exp(-|x|^2 / (2 width^2)) cos(carrier x_1)`
    Gaussian { width: f64, carrier: f64 },
    /// Random phases with `|u^(xi)| = (1 + |xi|)^{-sigma}`, drawn from the run seed.
    RandomSobolev { sigma: f64 },
    /// `u^(xi) = (1 + |xi|^2)^{-decay/2} exp(-|xi|^2 / cutoff^2)`
    Spectral { decay: f64, cutoff: f64 },
}

/// Norm in which `amplitude` is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Sup,
    L2,
    /// Inhomogeneous `H^{1/2}`.
    Hhalf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub profile: DataProfile,
    /// The size `epsilon` of the data.
    pub amplitude: f64,
    pub normalization: Normalization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: f64,
    /// Fixed step; unset means the default CFL-type rule.
    pub dt: Option<f64>,
    pub schedule: Schedule,
    pub guard: GuardOptions,
    pub max_stored: usize,
    pub max_halvings: u32,
    pub mass_tolerance: f64,
    pub energy_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// Fit window; the end is clipped to the guard-limited valid range.
    pub window: [f64; 2],
    /// Lebesgue exponents whose decay is fitted.
    pub r: Vec<Exponent>,
    /// Allowed deviation of each fitted exponent from its target.
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KatoConfig {
    pub x_star: Vec<f64>,
    pub t_max: f64,
    pub dt: f64,
    /// Relative tolerance against `1/sqrt(3)`.
    pub tolerance: f64,
    /// Largest allowed spread between the `x_star` values.
    pub invariance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrichartzConfig {
    pub theta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub corpus_size: usize,
    /// Pair `(theta, alpha)` evaluated on the corpus.
    pub corpus_pair: [f64; 2],
    pub lambda: f64,
    /// Relative tolerance of the scaling check.
    pub invariance: f64,
    pub snapshot_interval: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    /// Samples in the verification corpus.
    pub size: usize,
    /// Samples drawn to estimate the constant; larger than `size` so the
    /// maximum tracks the supremum rather than one draw of the tail.
    pub calibration_size: usize,
    /// Allowed excess over the calibration maximum, as a fraction.
    pub slack: f64,
    /// Seed of the verification corpus; the calibration corpus uses `seed`.
    pub verification_seed: u64,
}

/// A fully resolved experiment. Files only need to name the scenario; every
/// other key falls back to the scenario preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub long_running: bool,
    pub equation: EquationConfig,
    pub grid: GridConfig,
    pub data: DataConfig,
    pub time: TimeConfig,
    pub targets: TargetConfig,
    pub kato: KatoConfig,
    pub strichartz: StrichartzConfig,
    pub corpus: CorpusConfig,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LabError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// Output directory, defaulting to `runs/<scenario>`.
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| Path::new("runs").join(self.scenario.name()))
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.equation;
        if e.k < 1 {
            return Err(LabError::Config(format!(
                "equation.k must be >= 1 (power of the nonlinearity), got {}",
                e.k
            )));
        }
        if !e.coupling.is_finite() || e.coupling < 0.0 {
            return Err(LabError::Config(format!(
                "equation.coupling must be finite and >= 0, got {}",
                e.coupling
            )));
        }
        e.spec()
            .validate()
            .map_err(|err| LabError::Config(format!("equation: {err}")))?;
        if self.grid.n.len() != e.dim || self.grid.lengths.len() != e.dim {
            return Err(LabError::Config(format!(
                "grid.n and grid.lengths need {} entries for a {}-dimensional equation",
                e.dim, e.dim
            )));
        }
        for (a, &n) in self.grid.n.iter().enumerate() {
            if n < 4 || !n.is_power_of_two() {
                return Err(LabError::Config(format!(
                    "grid.n[{a}] must be a power of two >= 4, got {n}"
                )));
            }
        }
        for (a, &l) in self.grid.lengths.iter().enumerate() {
            positive(&format!("grid.lengths[{a}]"), l)?;
        }
        let amp = self.data.amplitude;
        if amp == 0.0 {
            return Err(LabError::Config(
                "data.amplitude is 0: degenerate data, epsilon must be > 0".into(),
            ));
        }
        positive("data.amplitude", amp)?;
        match self.data.profile {
            DataProfile::Gaussian { width, carrier } => {
                positive("data.profile.width", width)?;
                if !carrier.is_finite() {
                    return Err(LabError::Config("data.profile.carrier must be finite".into()));
                }
            }
            DataProfile::RandomSobolev { sigma } => positive("data.profile.sigma", sigma)?,
            DataProfile::Spectral { decay, cutoff } => {
                if !decay.is_finite() {
                    return Err(LabError::Config("data.profile.decay must be finite".into()));
                }
                positive("data.profile.cutoff", cutoff)?;
            }
        }
        let t = &self.time;
        positive("time.horizon", t.horizon)?;
        if let Some(dt) = t.dt {
            positive("time.dt", dt)?;
        }
        t.schedule
            .times(t.horizon)
            .map_err(|err| LabError::Config(format!("time.schedule: {err}")))?;
        let b = t.guard.buffer_fraction;
        if !(b > 0.0 && b < 0.5) {
            return Err(LabError::Config(format!(
                "time.guard.buffer_fraction must be in (0, 1/2), got {b}"
            )));
        }
        positive("time.guard.threshold", t.guard.threshold)?;
        positive("time.mass_tolerance", t.mass_tolerance)?;
        positive("time.energy_tolerance", t.energy_tolerance)?;
        let [t0, t1] = self.targets.window;
        if !(t0 > 0.0 && t1 > t0) {
            return Err(LabError::Config(format!(
                "targets.window must satisfy 0 < start < end, got [{t0}, {t1}]"
            )));
        }
        for (i, r) in self.targets.r.iter().enumerate() {
            if r.0.is_nan() || r.0 < 2.0 {
                return Err(LabError::Config(format!(
                    "targets.r[{i}] must be >= 2 (or \"inf\"), got {}",
                    r.0
                )));
            }
        }
        positive("targets.tolerance", self.targets.tolerance)?;
        let k = &self.kato;
        positive("kato.t_max", k.t_max)?;
        positive("kato.dt", k.dt)?;
        positive("kato.tolerance", k.tolerance)?;
        positive("kato.invariance", k.invariance)?;
        let s = &self.strichartz;
        for (i, &th) in s.theta.iter().enumerate() {
            if !(0.0..=1.0).contains(&th) {
                return Err(LabError::Config(format!("strichartz.theta[{i}] must be in [0, 1], got {th}")));
            }
        }
        for (i, &al) in s.alpha.iter().enumerate() {
            if !(0.0..=0.5).contains(&al) {
                return Err(LabError::Config(format!(
                    "strichartz.alpha[{i}] must be in [0, 1/2], got {al}"
                )));
            }
        }
        let [pt, pa] = s.corpus_pair;
        if !(0.0..=1.0).contains(&pt) || !(0.0..=0.5).contains(&pa) {
            return Err(LabError::Config(format!(
                "strichartz.corpus_pair [{pt}, {pa}] is not admissible"
            )));
        }
        positive("strichartz.lambda", s.lambda)?;
        positive("strichartz.invariance", s.invariance)?;
        positive("strichartz.snapshot_interval", s.snapshot_interval)?;
        if self.corpus.size == 0 {
            return Err(LabError::Config("corpus.size must be >= 1".into()));
        }
        if self.corpus.calibration_size == 0 {
            return Err(LabError::Config("corpus.calibration_size must be >= 1".into()));
        }
        if !(self.corpus.slack >= 0.0) {
            return Err(LabError::Config(format!(
                "corpus.slack must be >= 0, got {}",
                self.corpus.slack
            )));
        }
        Ok(())
    }
}

/// Recursive merge of `over` into `base`. Tagged tables whose `kind`
/// changes are replaced rather than merged.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            let retag = matches!((b.get("kind"), o.get("kind")), (Some(x), Some(y)) if x != y);
            if retag {
                *b = o;
                return;
            }
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Raw key/value document parsed from TOML (default) or JSON (`.json`).
pub fn parse_document(text: &str, json: bool) -> Result<Value> {
    if json {
        serde_json::from_str::<Value>(text).map_err(|e| {
            LabError::Config(format!("JSON parse error at line {}, column {}: {e}", e.line(), e.column()))
        })
    } else {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let at = e
                .span()
                .map(|s| {
                    let line = text[..s.start].matches('\n').count() + 1;
                    format!(" at line {line}")
                })
                .unwrap_or_default();
            LabError::Config(format!("TOML parse error{at}: {}", e.message()))
        })?;
        serde_json::to_value(table).map_err(|e| LabError::Config(e.to_string()))
    }
}

/// Resolves a raw document against its scenario preset. `fallback` names the
/// scenario when the document does not.
pub fn resolve(doc: Value, fallback: Option<ScenarioKind>) -> Result<ExperimentConfig> {
    let Value::Object(map) = &doc else {
        return Err(LabError::Config("configuration must be a table".into()));
    };
    let scenario = match map.get("scenario") {
        Some(Value::String(s)) => ScenarioKind::parse(s)?,
        Some(other) => {
            return Err(LabError::Config(format!("scenario must be a string, got {other}")))
        }
        None => fallback.ok_or_else(|| LabError::Config("missing key `scenario`".into()))?,
    };
    let mut base = serde_json::to_value(preset(scenario)).expect("presets serialize");
    merge(&mut base, doc);
    let cfg: ExperimentConfig =
        serde_json::from_value(base).map_err(|e| LabError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, merges with the scenario preset and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let json = path.extension().is_some_and(|e| e == "json");
    resolve(parse_document(&text, json)?, None)
        .map_err(|e| LabError::Config(format!("{}: {}", path.display(), strip(e))))
}

fn strip(e: LabError) -> String {
    match e {
        LabError::Config(m) => m,
        other => other.to_string(),
    }
}

/// Applies `section.key=value` overrides, where the value is TOML syntax
/// (bare words are taken as strings).
pub fn apply_overrides(cfg: &ExperimentConfig, sets: &[String]) -> Result<ExperimentConfig> {
    if sets.is_empty() {
        return Ok(cfg.clone());
    }
    let mut doc = serde_json::to_value(cfg).expect("configs serialize");
    for s in sets {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| LabError::Config(format!("override `{s}` is not key=value")))?;
        let value = match format!("v = {raw}").parse::<toml::Table>() {
            Ok(mut t) => serde_json::to_value(t.remove("v").expect("key present"))
                .map_err(|e| LabError::Config(e.to_string()))?,
            Err(_) => Value::String(raw.to_string()),
        };
        let mut patch = value;
        for part in key.trim().split('.').rev() {
            let mut m = serde_json::Map::new();
            m.insert(part.to_string(), patch);
            patch = Value::Object(m);
        }
        merge(&mut doc, patch);
    }
    let out: ExperimentConfig =
        serde_json::from_value(doc).map_err(|e| LabError::Config(e.to_string()))?;
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_takes_preset() {
        let doc = parse_document("scenario = \"linear_decay_kdv\"\n", false).unwrap();
        let cfg = resolve(doc, None).unwrap();
        assert_eq!(cfg, preset(ScenarioKind::LinearDecayKdv));
    }

    #[test]
    fn unknown_key_is_named() {
        let doc = parse_document("scenario = \"simulate\"\n[time]\ndt_rulee = 1\n", false).unwrap();
        let err = resolve(doc, None).unwrap_err().to_string();
        assert!(err.contains("dt_rulee"), "{err}");
    }

    #[test]
    fn zero_power_rejected() {
        let doc = parse_document("scenario = \"simulate\"\n[equation]\nk = 0\n", false).unwrap();
        let err = resolve(doc, None).unwrap_err().to_string();
        assert!(err.contains("equation.k"), "{err}");
    }

    #[test]
    fn parse_error_has_line() {
        let err = parse_document("scenario = \"simulate\"\n[time\n", false).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn retagging_replaces_profile() {
        let doc = parse_document(
            "scenario = \"simulate\"\n[data.profile]\nkind = \"random_sobolev\"\nsigma = 2.0\n",
            false,
        )
        .unwrap();
        let cfg = resolve(doc, None).unwrap();
        assert_eq!(cfg.data.profile, DataProfile::RandomSobolev { sigma: 2.0 });
    }

    #[test]
    fn overrides_and_exponents() {
        let cfg = preset(ScenarioKind::LinearDecayKdv);
        let out = apply_overrides(&cfg, &["targets.r=[\"inf\", 6]".into(), "seed=9".into()]).unwrap();
        assert_eq!(out.targets.r, vec![Exponent(f64::INFINITY), Exponent(6.0)]);
        assert_eq!(out.seed, 9);
        assert!(apply_overrides(&cfg, &["data.amplitude=0".into()]).is_err());
    }
}
