use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::analysis::InequalityEntry;
use crate::dynamics::Trajectory;
use crate::error::{LabError, Result};

/// Columns of `norms.csv`.
pub const NORM_COLUMNS: [&str; 8] = [
    "t",
    "L2",
    "Linf",
    "Lr_target",
    "Hhalf",
    "mass",
    "energy",
    "boundary_mass_fraction",
];

/// Columns of `inequality.csv`.
pub const INEQUALITY_COLUMNS: [&str; 7] = ["sample_id", "form", "s", "p", "lhs", "rhs", "ratio"];

/// 17 significant digits, enough to reproduce every `f64` exactly.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub label: String,
    pub window: [f64; 2],
    pub exponent: f64,
    pub stderr: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    pub weight: f64,
    pub weighted_sup: f64,
    pub samples: usize,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub note: Option<String>,
}

/// One pass/fail line of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, pass: bool) -> Self {
        Check {
            name: name.into(),
            value,
            target: None,
            tolerance: None,
            pass,
            note: None,
        }
    }

    /// `|value - target| <= tolerance`.
    pub fn near(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: Some(target),
            tolerance: Some(tolerance),
            pass: (value - target).abs() <= tolerance,
            note: None,
        }
    }

    /// `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target: None,
            tolerance: Some(bound),
            pass: value <= bound,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowUpRecord {
    pub time: f64,
    pub sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub grid_shape: Vec<usize>,
    pub grid_points: usize,
    pub snapshots: usize,
    pub steps: u64,
    pub dt: Option<f64>,
    pub halvings: u32,
    pub wrap_time: Option<f64>,
    pub blow_up: Option<BlowUpRecord>,
    pub mass_drift: Option<f64>,
    pub energy_drift: Option<f64>,
    pub fits: Vec<FitReport>,
    pub checks: Vec<Check>,
    pub files: Vec<FileRecord>,
    pub pass: bool,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        RunManifest {
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: 0.0,
            grid_shape: config.grid.n.clone(),
            grid_points: config.grid.n.iter().product(),
            snapshots: 0,
            steps: 0,
            dt: None,
            halvings: 0,
            wrap_time: None,
            blow_up: None,
            mass_drift: None,
            energy_drift: None,
            fits: Vec::new(),
            checks: Vec::new(),
            files: Vec::new(),
            pass: false,
        }
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| LabError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn csv_error(path: &Path, e: csv::Error) -> LabError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => LabError::io(path, io),
        other => LabError::Numeric(format!("{}: {other:?}", path.display())),
    }
}

/// Writes the files of one run and records their hashes.
#[derive(Debug)]
pub struct Emitter {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn register(&mut self, name: &str) -> Result<()> {
        let path = self.dir.join(name);
        let bytes = fs::metadata(&path).map_err(|e| LabError::io(&path, e))?.len();
        let sha256 = sha256_file(&path)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileRecord {
            path: name.to_string(),
            sha256,
            bytes,
        });
        Ok(())
    }

    /// Writes a numeric table; `rows` hold preformatted cells.
    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        w.write_record(header).map_err(|e| csv_error(&path, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| csv_error(&path, e))?;
        }
        w.flush().map_err(|e| LabError::io(&path, e))?;
        drop(w);
        self.register(name)
    }

    pub fn norms(&mut self, traj: &Trajectory) -> Result<()> {
        let rows: Vec<Vec<String>> = traj
            .records
            .iter()
            .map(|r| {
                [r.t, r.l2, r.linf, r.lr_target, r.hhalf, r.mass, r.energy, r.boundary_mass_fraction]
                    .iter()
                    .map(|&v| fmt_num(v))
                    .collect()
            })
            .collect();
        self.table("norms.csv", &NORM_COLUMNS, &rows)
    }

    /// `probes.csv` with one column per probe; skipped when there are none.
    pub fn probes(&mut self, traj: &Trajectory) -> Result<()> {
        if traj.probe_labels.is_empty() {
            return Ok(());
        }
        let mut header = vec!["t"];
        header.extend(traj.probe_labels.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = traj
            .records
            .iter()
            .map(|r| {
                std::iter::once(r.t)
                    .chain(r.probes.iter().copied())
                    .map(fmt_num)
                    .collect()
            })
            .collect();
        self.table("probes.csv", &header, &rows)
    }

    pub fn inequalities(&mut self, name: &str, entries: &[InequalityEntry]) -> Result<()> {
        let rows: Vec<Vec<String>> = entries
            .iter()
            .map(|e| {
                vec![
                    e.sample_id.to_string(),
                    e.form.name().to_string(),
                    fmt_num(e.s),
                    fmt_num(e.p),
                    fmt_num(e.lhs),
                    fmt_num(e.rhs),
                    fmt_num(e.ratio),
                ]
            })
            .collect();
        self.table(name, &INEQUALITY_COLUMNS, &rows)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| LabError::Numeric(format!("{}: {e}", path.display())))?;
        let mut f = fs::File::create(&path).map_err(|e| LabError::io(&path, e))?;
        f.write_all(text.as_bytes())
            .and_then(|_| f.write_all(b"\n"))
            .map_err(|e| LabError::io(&path, e))?;
        self.register(name)
    }

    /// Lists every emitted file in the manifest and writes `manifest.json`.
    pub fn finish(self, manifest: &mut RunManifest) -> Result<PathBuf> {
        manifest.files = self.files;
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(manifest)
            .map_err(|e| LabError::Numeric(format!("{}: {e}", path.display())))?;
        fs::write(&path, text + "\n").map_err(|e| LabError::io(&path, e))?;
        Ok(path)
    }
}

/// Reads a numeric CSV written by [`Emitter::table`]: header and rows.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .map_err(|_| LabError::Numeric(format!("{}: bad number `{c}`", path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
}

/// Files of a manifest whose current hash differs from the recorded one.
pub fn verify_hashes(dir: &Path, manifest: &RunManifest) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for f in &manifest.files {
        let path = dir.join(&f.path);
        if !path.exists() || sha256_file(&path)? != f.sha256 {
            bad.push(f.path.clone());
        }
    }
    Ok(bad)
}
