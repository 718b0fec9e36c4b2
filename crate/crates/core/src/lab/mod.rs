//! Scenario catalog, configuration, emitted files and run manifests.

mod config;
mod emit;
mod scenario;

pub use config::{
    apply_overrides, load_config, parse_document, resolve, CorpusConfig, DataConfig, DataProfile,
    EquationConfig, ExperimentConfig, Exponent, GridConfig, KatoConfig, Normalization,
    ScenarioKind, StrichartzConfig, TargetConfig, TimeConfig,
};
pub use emit::{
    fmt_num, read_manifest, read_table, sha256_file, verify_hashes, BlowUpRecord, Check, Emitter,
    FileRecord, FitReport, RunManifest, INEQUALITY_COLUMNS, NORM_COLUMNS,
};
pub use scenario::{
    decay_rate, initial_data, initial_data_scaled, preset, run_scenario, run_scenarios,
};
