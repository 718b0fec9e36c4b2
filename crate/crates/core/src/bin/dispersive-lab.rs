use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;

use dispersive_core::error::{LabError, Result};
use dispersive_core::lab::{
    apply_overrides, parse_document, read_manifest, resolve, run_scenario, verify_hashes,
    ExperimentConfig, RunManifest, ScenarioKind,
};

/// Pseudospectral decay experiments for gKdV and gZK.
#[derive(Parser, Debug)]
#[command(name = "dispersive-lab", version)]
struct Cli {
    /// TOML (or .json) configuration; keys not given fall back to the scenario preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the parallel kernels and corpora.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Resolve and print the configuration without running.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Allow scenarios flagged as long-running.
    #[arg(long, global = true)]
    long_running: bool,
    /// Override a configuration key, e.g. `--set time.horizon=20`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve the configured equation and record norms.
    Simulate,
    /// Linear decay rates in one to four dimensions.
    LinearDecay {
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Small-data nonlinear decay.
    NonlinearDecay {
        #[arg(long)]
        dim: Option<usize>,
        /// Power of the nonlinearity.
        #[arg(long)]
        k: Option<u32>,
    },
    /// Local smoothing identity.
    Kato,
    /// Strichartz pair scan, corpus and scaling check.
    Strichartz,
    /// Kato-Ponce and fractional Leibniz corpora.
    Commutators,
    /// Lorentz norm closed forms, Hoelder and embedding corpora.
    Lorentz,
    /// Summarize manifests under the given directories and re-check hashes.
    Report { dirs: Vec<PathBuf> },
}

fn choices(cmd: &Command) -> Result<(ScenarioKind, Vec<ScenarioKind>)> {
    use ScenarioKind::*;
    let bad_dim = |d: usize| LabError::Config(format!("no scenario for dimension {d}"));
    Ok(match cmd {
        Command::Simulate => (Simulate, vec![Simulate]),
        Command::LinearDecay { dim } => {
            let all = vec![LinearDecayKdv, LinearDecayZk2d, LinearDecayZk3d, AnisotropicZk4d];
            let pick = match dim.unwrap_or(1) {
                d @ 1..=4 => all[d - 1],
                d => return Err(bad_dim(d)),
            };
            (pick, if dim.is_some() { vec![pick] } else { all })
        }
        Command::NonlinearDecay { dim, .. } => {
            let all = vec![NonlinearDecayGkdv, NonlinearDecayZk2d, NonlinearDecayZk3d];
            let pick = match dim.unwrap_or(1) {
                d @ 1..=3 => all[d - 1],
                d => return Err(bad_dim(d)),
            };
            (pick, if dim.is_some() { vec![pick] } else { all })
        }
        Command::Kato => (KatoIdentity, vec![KatoIdentity]),
        Command::Strichartz => (StrichartzScan, vec![StrichartzScan]),
        Command::Commutators => (CommutatorCorpus, vec![CommutatorCorpus]),
        Command::Lorentz => (LorentzUnit, vec![LorentzUnit]),
        Command::Report { .. } => unreachable!("report does not run a scenario"),
    })
}

fn configure(cli: &Cli) -> Result<ExperimentConfig> {
    let (default, allowed) = choices(&cli.command)?;
    let doc = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| LabError::Io {
                path: path.clone(),
                source: e,
            })?;
            let json = path.extension().is_some_and(|e| e == "json");
            parse_document(&text, json)
                .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?
        }
        None => Value::Object(Default::default()),
    };
    if let Some(Value::String(s)) = doc.get("scenario") {
        let named = ScenarioKind::parse(s)?;
        if !allowed.contains(&named) {
            return Err(LabError::Config(format!(
                "configuration names scenario {named}, which this subcommand does not run"
            )));
        }
    }
    let mut cfg = resolve(doc, Some(default))?;
    let mut sets = Vec::new();
    if let Command::NonlinearDecay { k: Some(k), .. } = cli.command {
        sets.push(format!("equation.k={k}"));
    }
    sets.extend(cli.sets.iter().cloned());
    cfg = apply_overrides(&cfg, &sets)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if cli.long_running {
        cfg.long_running = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_manifest(m: &RunManifest) {
    println!(
        "{} {} ({:.1} s, {} snapshots, {} steps)",
        if m.pass { "PASS" } else { "FAIL" },
        m.config.scenario,
        m.wall_clock_seconds,
        m.snapshots,
        m.steps
    );
    for c in &m.checks {
        let target = match (c.target, c.tolerance) {
            (Some(t), Some(tol)) => format!(" target {t} +- {tol}"),
            (None, Some(b)) => format!(" bound {b}"),
            _ => String::new(),
        };
        println!("  {} {} = {}{}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.value, target);
        if let Some(n) = &c.note {
            println!("       {n}");
        }
    }
}

fn manifests_under(dir: &Path) -> Vec<PathBuf> {
    let own = dir.join("manifest.json");
    if own.exists() {
        return vec![own];
    }
    let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .map(|e| e.path().join("manifest.json"))
        .filter(|p| p.exists())
        .collect();
    found.sort();
    found
}

fn report(cli: &Cli, dirs: &[PathBuf]) -> Result<ExitCode> {
    let roots: Vec<PathBuf> = if dirs.is_empty() {
        vec![cli.out.clone().unwrap_or_else(|| PathBuf::from("runs"))]
    } else {
        dirs.to_vec()
    };
    let paths: Vec<PathBuf> = roots.iter().flat_map(|d| manifests_under(d)).collect();
    if paths.is_empty() {
        return Err(LabError::Config("no manifest.json found".into()));
    }
    let mut all_ok = true;
    for p in &paths {
        let m = read_manifest(p)?;
        let dir = p.parent().unwrap_or(Path::new("."));
        let bad = verify_hashes(dir, &m)?;
        print_manifest(&m);
        if bad.is_empty() {
            println!("  hashes ok ({} files)", m.files.len());
        } else {
            println!("  hash mismatch: {}", bad.join(", "));
        }
        all_ok &= m.pass && bad.is_empty();
    }
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| LabError::Config(format!("--threads: {e}")))?;
    }
    if let Command::Report { dirs } = &cli.command {
        return report(cli, dirs);
    }
    let cfg = configure(cli)?;
    if cli.dry_run {
        let text = serde_json::to_string_pretty(&cfg).expect("configs serialize");
        println!("{text}");
        println!("# would write to {}", cfg.out_dir().display());
        return Ok(ExitCode::SUCCESS);
    }
    let m = run_scenario(&cfg)?;
    print_manifest(&m);
    println!("  wrote {}", cfg.out_dir().join("manifest.json").display());
    Ok(if m.pass {
        ExitCode::SUCCESS
    } else if m.blow_up.is_some() {
        ExitCode::from(3)
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
