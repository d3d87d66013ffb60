//! Command-line front end of the `jde` binary.
//!
//! Settings are layered: command-line flags override a TOML file given with
//! `--config`, which overrides built-in defaults. `JDE_SEED` replaces the
//! default master seed.

pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use thiserror::Error;

use crate::error::JdeError;
use crate::harness::{
    db_to_linear, run_campaign_with, snr_sweep_with, verify_cascaded_theorem_with, verify_joint_theorem_with,
};
use crate::jdeer::Rule;
use crate::signal::SystemConfig;

pub use output::{Format, ResultRow, RunManifest, CSV_HEADER};

pub const SEED_ENV: &str = "JDE_SEED";
const DEFAULT_SNAPSHOTS: usize = 10_000;
const DEFAULT_CHECKPOINTS: [usize; 3] = [100, 1_000, 10_000];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("verification failed")]
    Verification,
    #[error(transparent)]
    Compute(#[from] JdeError),
    /// `--help` / `--version` output; not a failure.
    #[error("{0}")]
    Display(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Display(_) => 0,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Verification => 4,
            CliError::Compute(JdeError::Config(_) | JdeError::Precondition(_)) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "jde", version, about = "Joint radar detection/estimation information limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Theoretical information report
    Info,
    /// Single Monte Carlo campaign
    Run,
    /// SNR sweep
    Sweep,
    /// Check that SAP reaches the joint information (exit 4 on FAIL)
    VerifyJoint,
    /// Check cascaded additivity (exit 4 on FAIL)
    VerifyCascaded,
}

/// Flags and TOML keys share names (`snr-db` on the command line is `snr_db`
/// in the file).
#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(deny_unknown_fields)]
struct Flags {
    /// TOML file with default settings
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Time-bandwidth product N (samples per snapshot)
    #[arg(long = "n", global = true)]
    n: Option<usize>,
    /// SNR in dB (rho^2 = 10^(dB/10))
    #[arg(long, global = true, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Linear SNR rho^2
    #[arg(long, global = true)]
    snr: Option<f64>,
    /// Prior probability of target presence
    #[arg(long, global = true)]
    prior: Option<f64>,
    /// Number of snapshots M
    #[arg(long, global = true)]
    snapshots: Option<usize>,
    /// Comma-separated checkpoint sizes
    #[arg(long, global = true, value_delimiter = ',')]
    checkpoints: Option<Vec<usize>>,
    /// Grid points per unit delay
    #[arg(long, global = true)]
    oversample: Option<usize>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated rules: sap, map, cascaded
    #[arg(long, global = true, value_delimiter = ',')]
    rules: Option<Vec<Rule>>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Comma-separated SNR list in dB for `sweep` (`-inf` for linear zero)
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    sweep_db: Option<Vec<f64>>,
    /// Keep true delays this far from the window edges
    #[arg(long, global = true)]
    edge_margin: Option<f64>,
    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long, global = true)]
    workers: Option<usize>,
}

/// A fully resolved command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub command: Command,
    pub config: SystemConfig,
    pub snapshots: usize,
    pub checkpoints: Vec<usize>,
    pub rules: Vec<Rule>,
    pub sweep_db: Vec<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub workers: Option<usize>,
    pub command_line: String,
}

fn default_sweep() -> Vec<f64> {
    (0..=8).map(|i| f64::from(2 * i)).collect()
}

fn resolve_snr(layer: &Flags, which: &str) -> Result<Option<f64>, CliError> {
    match (layer.snr, layer.snr_db) {
        (Some(_), Some(_)) => Err(CliError::Usage(format!("{which}: --snr and --snr-db are mutually exclusive"))),
        (Some(s), None) => Ok(Some(s)),
        (None, Some(db)) => Ok(Some(db_to_linear(db))),
        (None, None) => Ok(None),
    }
}

fn default_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}='{s}' is not a u64 seed"))),
        Err(_) => Ok(SystemConfig::default().seed),
    }
}

fn read_file_layer(path: &Path) -> Result<Flags, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Parses `args` (including the program name) into an [`Invocation`].
pub fn parse_config<I, T>(args: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let command_line = args.iter().map(|a| a.to_string_lossy()).collect::<Vec<_>>().join(" ");
    let cli = Cli::try_parse_from(&args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Display(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    })?;
    let flags = cli.flags;
    let file = match &flags.config {
        Some(p) => read_file_layer(p)?,
        None => Flags::default(),
    };
    let defaults = SystemConfig::default();

    let snr = match resolve_snr(&flags, "command line")? {
        Some(s) => s,
        None => resolve_snr(&file, "config file")?.unwrap_or(defaults.snr),
    };
    let seed = match flags.seed.or(file.seed) {
        Some(s) => s,
        None => default_seed()?,
    };
    let config = SystemConfig {
        n_samples: flags.n.or(file.n).unwrap_or(defaults.n_samples),
        snr,
        prior_present: flags.prior.or(file.prior).unwrap_or(defaults.prior_present),
        oversample: flags.oversample.or(file.oversample).unwrap_or(defaults.oversample),
        seed,
        edge_margin: flags.edge_margin.or(file.edge_margin).unwrap_or(defaults.edge_margin),
        noiseless: false,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let snapshots = flags.snapshots.or(file.snapshots).unwrap_or(DEFAULT_SNAPSHOTS);
    if snapshots == 0 {
        return Err(CliError::Usage("--snapshots must be positive".into()));
    }
    let checkpoints = match flags.checkpoints.or(file.checkpoints) {
        Some(c) => {
            if c.iter().any(|&m| m == 0 || m > snapshots) {
                return Err(CliError::Usage(format!("checkpoints must lie in 1..={snapshots}")));
            }
            c
        }
        None => {
            let mut c: Vec<usize> = DEFAULT_CHECKPOINTS.iter().copied().filter(|&m| m < snapshots).collect();
            c.push(snapshots);
            c
        }
    };
    let rules = flags.rules.or(file.rules).unwrap_or_else(|| Rule::ALL.to_vec());
    if rules.is_empty() {
        return Err(CliError::Usage("--rules must name at least one rule".into()));
    }
    let sweep_db = flags.sweep_db.or(file.sweep_db).unwrap_or_else(default_sweep);
    Ok(Invocation {
        command: cli.command,
        config,
        snapshots,
        checkpoints,
        rules,
        sweep_db,
        out: flags.out.or(file.out),
        format: flags.format.or(file.format).unwrap_or(Format::Csv),
        workers: flags.workers.or(file.workers),
        command_line,
    })
}

/// Command-line flags that reproduce `config` exactly.
pub fn config_to_args(config: &SystemConfig) -> Vec<String> {
    vec![
        "--n".into(),
        config.n_samples.to_string(),
        "--snr".into(),
        config.snr.to_string(),
        "--prior".into(),
        config.prior_present.to_string(),
        "--oversample".into(),
        config.oversample.to_string(),
        "--seed".into(),
        config.seed.to_string(),
        "--edge-margin".into(),
        config.edge_margin.to_string(),
    ]
}

fn write_payload(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit_campaigns(inv: &Invocation, results: &[crate::harness::CampaignResult]) -> Result<(), CliError> {
    let rendered = output::render(results, inv.format, &inv.config, &inv.command_line);
    write_payload(inv.out.as_deref(), &rendered.main)?;
    if let (Format::Csv, Some(path)) = (inv.format, inv.out.as_deref()) {
        let mut manifest = serde_json::to_vec_pretty(&rendered.manifest).expect("manifest serializes");
        manifest.push(b'\n');
        write_payload(Some(&output::manifest_path(path)), &manifest)?;
    }
    Ok(())
}

fn emit_json<T: serde::Serialize>(inv: &Invocation, key: &str, value: &T) -> Result<(), CliError> {
    let body = serde_json::to_vec(value).expect("result serializes");
    let manifest = RunManifest::new(&inv.config, &inv.command_line, &body);
    let doc = serde_json::json!({ "manifest": manifest, key: value });
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("document serializes");
    bytes.push(b'\n');
    write_payload(inv.out.as_deref(), &bytes)
}

/// Executes a parsed invocation. A failed theorem check yields
/// [`CliError::Verification`] after the verdict has been written.
pub fn execute(inv: &Invocation) -> Result<(), CliError> {
    match inv.command {
        Command::Info => {
            let report = crate::harness::theoretical_report(&inv.config, inv.snapshots, inv.workers)?;
            match inv.format {
                Format::Json => emit_json(inv, "report", &report),
                Format::Csv => {
                    let value = serde_json::to_value(report).expect("report serializes");
                    let mut text = String::from("quantity,value\n");
                    for (k, v) in value.as_object().expect("struct") {
                        let n = v.as_f64().map(output::format_number).unwrap_or_default();
                        text.push_str(&format!("{k},{n}\n"));
                    }
                    write_payload(inv.out.as_deref(), text.as_bytes())
                }
            }
        }
        Command::Run => {
            let r = run_campaign_with(&inv.config, inv.snapshots, &inv.rules, &inv.checkpoints, inv.workers)?;
            emit_campaigns(inv, &[r])
        }
        Command::Sweep => {
            let rs =
                snr_sweep_with(&inv.config, &inv.sweep_db, inv.snapshots, &inv.rules, &inv.checkpoints, inv.workers)?;
            emit_campaigns(inv, &rs)
        }
        Command::VerifyJoint => {
            let v = verify_joint_theorem_with(&inv.config, inv.snapshots, inv.workers)?;
            emit_json(inv, "verdict", &v)?;
            if v.pass {
                Ok(())
            } else {
                Err(CliError::Verification)
            }
        }
        Command::VerifyCascaded => {
            let v = verify_cascaded_theorem_with(&inv.config, inv.snapshots, inv.workers)?;
            emit_json(inv, "verdict", &v)?;
            if v.pass {
                Ok(())
            } else {
                Err(CliError::Verification)
            }
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_config(args).and_then(|inv| execute(&inv));
    match result {
        Ok(()) => 0,
        Err(CliError::Display(text)) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("jde: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(args: &[&str]) -> Result<Invocation, CliError> {
        parse_config(std::iter::once("jde").chain(args.iter().copied()))
    }

    #[test]
    fn db_flag_sets_linear_snr() {
        let inv = parse(&["run", "--n", "128", "--snr-db", "6", "--snapshots", "10000", "--seed", "7"]).unwrap();
        assert_eq!(inv.command, Command::Run);
        assert_eq!(inv.config.n_samples, 128);
        assert_eq!(inv.config.snr, 10f64.powf(0.6));
        assert_eq!(inv.config.seed, 7);
        assert_eq!(inv.snapshots, 10_000);
    }

    #[test]
    fn negative_db_is_accepted() {
        let inv = parse(&["run", "--snr-db", "-10"]).unwrap();
        assert!((inv.config.snr - 0.1).abs() < 1e-15);
        let inv = parse(&["sweep", "--sweep-db", "-inf,-10,0"]).unwrap();
        assert_eq!(inv.sweep_db, vec![f64::NEG_INFINITY, -10.0, 0.0]);
    }

    #[test]
    fn usage_errors() {
        for args in [
            &["run", "--prior", "1.5"][..],
            &["run", "--snr", "4", "--snr-db", "6"],
            &["run", "--bogus", "1"],
            &["run", "--n", "127"],
            &["run", "--snapshots", "10", "--checkpoints", "20"],
            &["run", "--rules", "glrt"],
            &["frobnicate"],
        ] {
            let err = parse(args).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{args:?}: {err}");
        }
    }

    #[test]
    fn defaults_are_the_paper_preset() {
        let inv = parse(&["run", "--seed", "3"]).unwrap();
        assert_eq!(inv.config.n_samples, 128);
        assert_eq!(inv.config.prior_present, 0.5);
        assert_eq!(inv.snapshots, 10_000);
        assert_eq!(inv.checkpoints, vec![100, 1_000, 10_000]);
        assert_eq!(inv.rules, Rule::ALL.to_vec());
        assert_eq!(inv.sweep_db.len(), 9);
        assert_eq!(inv.format, Format::Csv);
    }

    #[test]
    fn small_runs_get_clipped_checkpoints() {
        let inv = parse(&["run", "--snapshots", "500"]).unwrap();
        assert_eq!(inv.checkpoints, vec![100, 500]);
    }

    #[test]
    fn file_layer_sits_between_flags_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "n = 64\nsnr_db = 3.0\nprior = 0.25\nseed = 99\nrules = [\"sap\"]\n").unwrap();
        let p = path.to_str().unwrap();
        let inv = parse(&["run", "--config", p, "--prior", "0.75"]).unwrap();
        assert_eq!(inv.config.n_samples, 64);
        assert_eq!(inv.config.snr, db_to_linear(3.0));
        assert_eq!(inv.config.prior_present, 0.75);
        assert_eq!(inv.config.seed, 99);
        assert_eq!(inv.rules, vec![Rule::Sap]);
        let inv = parse(&["run", "--config", p, "--snr", "2"]).unwrap();
        assert_eq!(inv.config.snr, 2.0);

        std::fs::write(&path, "bogus = 1\n").unwrap();
        assert_eq!(parse(&["run", "--config", p]).unwrap_err().exit_code(), 2);
        let missing = dir.path().join("nope.toml");
        assert_eq!(parse(&["run", "--config", missing.to_str().unwrap()]).unwrap_err().exit_code(), 3);
    }

    proptest! {
        #[test]
        fn config_round_trips_through_flags(
            half in 1usize..200,
            snr in 0.0f64..1e4,
            prior in 0.0f64..=1.0,
            oversample in 4usize..64,
            seed in any::<u64>(),
            margin_frac in 0.0f64..0.99,
        ) {
            let n = 2 * half;
            let config = SystemConfig {
                n_samples: n,
                snr,
                prior_present: prior,
                oversample,
                seed,
                edge_margin: margin_frac * n as f64 / 2.0,
                noiseless: false,
            };
            let mut args = vec!["jde".to_string(), "info".to_string()];
            args.extend(config_to_args(&config));
            let inv = parse_config(args).unwrap();
            prop_assert_eq!(inv.config, config);
        }
    }
}
