//! The `sfs` command line: attractors, trajectories, subdivision and
//! diagnostics over the `sfs-core` catalog.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numerical
//! non-convergence (partial artifacts are still written).

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::output::Format;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Cap on points per set unless overridden.
pub const DEFAULT_MAX_POINTS: usize = 4_000_000;

#[derive(Debug, Parser)]
#[command(name = "sfs", version, about = "Attractors and trajectories of (sequences of) function systems")]
pub struct Cli {
    /// JSON file whose keys mirror the flags; explicit flags win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Attractor of a single function system.
    Attractor(AttractorArgs),
    /// Forward or backward trajectory of a schedule.
    Trajectory(TrajectoryArgs),
    /// Refines a control polygon.
    Subdivide(SubdivideArgs),
    /// Convergence report for a schedule.
    Diagnose(DiagnoseArgs),
    /// Named schemes.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum CatalogAction {
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct AttractorArgs {
    /// Catalog reference (`koch`, `cubic-fs:n=6`) or function-system JSON
    /// (inline or a `.json` path).
    #[arg(long)]
    pub scheme: String,
    /// Fixed number of iterations instead of the tolerance rule.
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 64)]
    pub max_iter: usize,
    /// Decimation cell size; 0 keeps every distinct point.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
    pub max_points: usize,
    /// Overrides the `seed` parameter of the reference.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Defaults to the output extension.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write an SVG scatter here.
    #[arg(long, value_name = "PATH")]
    pub svg: Option<PathBuf>,
    /// Keep lifted coordinates instead of projecting.
    #[arg(long)]
    pub full_dim: bool,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct TrajectoryArgs {
    /// Catalog reference or schedule JSON (inline or a `.json` path).
    #[arg(long)]
    pub schedule: String,
    #[arg(long, value_enum)]
    pub direction: Direction,
    /// Strictly increasing, comma separated.
    #[arg(long, value_delimiter = ',', required = true, action = ArgAction::Set)]
    pub depths: Vec<usize>,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    /// Start set as CSV; defaults to the scheme's own start set.
    #[arg(long)]
    pub start: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
    pub max_points: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Horizon of the factor diagnostic; defaults to the largest depth.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also write an SVG per depth.
    #[arg(long)]
    pub svg: bool,
    #[arg(long)]
    pub full_dim: bool,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SubdivideArgs {
    /// Catalog mask reference (`cubic`, `expspline:lambda=3`, `random4pt`).
    #[arg(long, conflicts_with = "mask")]
    pub scheme: Option<String>,
    /// Mask as JSON or Laurent polynomial text, or a file holding either.
    #[arg(long)]
    pub mask: Option<String>,
    /// Control polygon CSV; defaults to the scheme's polygon.
    #[arg(long)]
    pub polygon: Option<PathBuf>,
    #[arg(long)]
    pub levels: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub schedule: String,
    #[arg(long, default_value_t = 200)]
    pub levels: usize,
    #[arg(long, default_value_t = 10)]
    pub max_ell: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Outcome of a command that did not fail outright.
#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Done,
    NotConverged(String),
}

const SUBCOMMANDS: &[&str] = &["attractor", "trajectory", "subdivide", "diagnose", "catalog"];

/// Pulls `--config` out of the arguments and splices the file's flags in
/// right after the subcommand name.
fn expand_config(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(it.next().ok_or_else(|| anyhow::anyhow!("--config needs a path"))?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(OsString::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| anyhow::anyhow!("reading config {}: {e}", PathBuf::from(&path).display()))?;
    let cfg = RunConfig::parse(&text)?;
    let pos = rest
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()));
    let pos = match (pos, &cfg.command) {
        (Some(p), _) => {
            cfg.check_command(&rest[p].to_string_lossy())?;
            p
        }
        (None, Some(cmd)) => {
            let at = 1.min(rest.len());
            rest.insert(at, OsString::from(cmd));
            at
        }
        (None, None) => anyhow::bail!("no subcommand given on the command line or in the config"),
    };
    let extra = cfg.to_args()?;
    let tail = rest.split_off(pos + 1);
    rest.extend(extra.into_iter().map(OsString::from));
    rest.extend(tail);
    Ok(rest)
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SFS_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| anyhow::anyhow!("SFS_THREADS must be a positive integer, got `{v}`"))?;
        // fails harmlessly if the pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_INPUT;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return EXIT_INPUT;
    }
    match commands::dispatch(cli.command) {
        Ok(Status::Done) => EXIT_OK,
        Ok(Status::NotConverged(msg)) => {
            eprintln!("not converged: {msg}");
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_INPUT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_flags_precede_explicit_ones() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"command":"diagnose","schedule":"halves","levels":12}"#).unwrap();
        let p = path.to_str().unwrap();
        let out = expand_config(os(&["sfs", "--config", p, "--levels", "30"])).unwrap();
        assert_eq!(out, os(&["sfs", "diagnose", "--levels", "12", "--schedule", "halves", "--levels", "30"]));
        let cli = Cli::try_parse_from(out).unwrap();
        let Command::Diagnose(d) = cli.command else { panic!() };
        assert_eq!(d.levels, 30);
        assert_eq!(d.schedule, "halves");

        let out = expand_config(os(&["sfs", "diagnose", "--config", p])).unwrap();
        assert_eq!(out[1], "diagnose");
        assert!(expand_config(os(&["sfs", "attractor", "--config", p])).is_err());
    }
}
