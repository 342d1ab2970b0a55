//! Command-line and config-file parsing.
//!
//! Every option can also be given in a flat `key = value` file passed with
//! `--config`; `#` starts a comment. Flags override file values. The seed
//! falls back to the `RANDFEM_SEED` environment variable, then to 0.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use randfem_core::mesh::MAX_LEVEL;
use randfem_core::{Estimator, ForcingTerm, Sigma};

use crate::error::{CliError, Result};

pub const SEED_ENV: &str = "RANDFEM_SEED";

#[derive(Debug, Parser)]
#[command(name = "randfem", version, about = "Randomized-quadrature P1 finite elements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandLine,
}

#[derive(Debug, Subcommand)]
pub enum CommandLine {
    /// Build (or load) a mesh, report its size, optionally validate and export it.
    Mesh(Options),
    /// Compute one realization and write its coefficient vector.
    Solve(Options),
    /// Replicated convergence study; writes one CSV row per level.
    Study(Options),
    /// Barycentric-rule errors for the eps-shifted singular forcing.
    Table1(Options),
}

#[derive(Debug, Default, Args)]
pub struct Options {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// mc | is | barycentric
    #[arg(long)]
    pub estimator: Option<String>,
    /// f1 | f1eps | f2 | const | const:<value>
    #[arg(long)]
    pub forcing: Option<String>,
    /// unit | sine | const:<positive value>
    #[arg(long)]
    pub sigma: Option<String>,
    /// Mesh level `A` or level range `A..B`.
    #[arg(long)]
    pub n: Option<String>,
    /// Replications (for table1: Monte Carlo loads in the reference).
    #[arg(long = "M")]
    pub m: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// CG relative residual tolerance.
    #[arg(long)]
    pub tol: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism). Output does not depend on it.
    #[arg(long)]
    pub threads: Option<String>,
    /// Defaults of M = 10000 and levels up to 8.
    #[arg(long)]
    pub full_scale: bool,
    /// Run the mesh admissibility checks.
    #[arg(long)]
    pub validate: bool,
    /// Record median load-assembly times (makes the CSV machine dependent).
    #[arg(long)]
    pub timing: bool,
    /// Read the mesh from a file instead of building a structured one.
    #[arg(long)]
    pub mesh_file: Option<PathBuf>,
    /// Write the unit-coefficient stiffness matrix in coordinate format.
    #[arg(long)]
    pub export_stiffness: Option<PathBuf>,
    /// Directory caching the table1 reference loads.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Mesh,
    Solve,
    Study,
    Table1,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Mesh => "mesh",
            Command::Solve => "solve",
            Command::Study => "study",
            Command::Table1 => "table1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForcingChoice {
    F1,
    F1Eps,
    F2,
    Const(f64),
}

impl ForcingChoice {
    pub fn term(self) -> ForcingTerm {
        match self {
            ForcingChoice::F1 => ForcingTerm::F1,
            ForcingChoice::F1Eps => ForcingTerm::F1Eps,
            ForcingChoice::F2 => ForcingTerm::F2,
            ForcingChoice::Const(c) => ForcingTerm::Const(c),
        }
    }

    pub fn label(self) -> String {
        match self {
            ForcingChoice::Const(c) if c == 1.0 => "const".into(),
            ForcingChoice::Const(c) => format!("const:{c}"),
            other => other.term().id().name().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub estimator: Estimator,
    pub forcing: ForcingChoice,
    pub sigma: Sigma,
    pub levels: (u32, u32),
    pub replications: usize,
    pub seed: u64,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub full_scale: bool,
    pub validate: bool,
    pub timing: bool,
    pub mesh_file: Option<PathBuf>,
    pub export_stiffness: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "estimator",
    "forcing",
    "sigma",
    "n",
    "M",
    "seed",
    "tol",
    "out",
    "threads",
    "full_scale",
    "validate",
    "timing",
    "mesh_file",
    "export_stiffness",
    "cache_dir",
];

/// Parses a flat `key = value` file. Keys may use `-` or `_`.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected 'key = value'", k + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::usage(format!("config line {}: unknown key '{key}'", k + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::usage(format!("config line {}: duplicate key '{key}'", k + 1)));
        }
    }
    Ok(map)
}

fn bad(key: &str, msg: impl fmt::Display) -> CliError {
    CliError::usage(format!("{key}: {msg}"))
}

fn parse_level(key: &str, s: &str) -> Result<u32> {
    let n: u32 = s.trim().parse().map_err(|_| bad(key, format!("'{s}' is not a level")))?;
    if !(1..=MAX_LEVEL).contains(&n) {
        return Err(bad(key, format!("level {n} outside 1..={MAX_LEVEL}")));
    }
    Ok(n)
}

/// `A` or `A..B`.
pub fn parse_levels(s: &str) -> Result<(u32, u32)> {
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (parse_level("n", a)?, parse_level("n", b)?);
            if a > b {
                return Err(bad("n", format!("empty range {a}..{b}")));
            }
            Ok((a, b))
        }
        None => parse_level("n", s).map(|n| (n, n)),
    }
}

pub fn parse_forcing(s: &str) -> Result<ForcingChoice> {
    match s {
        "f1" => Ok(ForcingChoice::F1),
        "f1eps" => Ok(ForcingChoice::F1Eps),
        "f2" => Ok(ForcingChoice::F2),
        "const" => Ok(ForcingChoice::Const(1.0)),
        other => match other.strip_prefix("const:").map(str::parse::<f64>) {
            Some(Ok(c)) if c.is_finite() => Ok(ForcingChoice::Const(c)),
            _ => Err(bad("forcing", format!("unknown forcing '{other}' (f1|f1eps|f2|const|const:<value>)"))),
        },
    }
}

pub fn parse_sigma(s: &str) -> Result<Sigma> {
    match s {
        "unit" => Ok(Sigma::Unit),
        "sine" => Ok(Sigma::Sine),
        other => match other.strip_prefix("const:").map(str::parse::<f64>) {
            Some(Ok(c)) if c == 1.0 => Ok(Sigma::Unit),
            Some(Ok(c)) if c.is_finite() && c > 0.0 => Ok(Sigma::Constant(c)),
            _ => Err(bad("sigma", format!("unknown coefficient '{other}' (unit|sine|const:<positive value>)"))),
        },
    }
}

fn parse_flag(key: &str, s: &str) -> Result<bool> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(bad(key, format!("'{other}' is not a boolean"))),
    }
}

/// Merges flags, config file and environment into a validated configuration.
pub fn resolve(command: Command, opts: Options, env_seed: Option<String>) -> Result<RunConfig> {
    let mut file = match &opts.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| bad("config", format!("{}: {e}", path.display())))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    let mut pick = |key: &str, flag: Option<String>| flag.or_else(|| file.remove(key));
    let estimator = pick("estimator", opts.estimator);
    let forcing = pick("forcing", opts.forcing);
    let sigma = pick("sigma", opts.sigma);
    let n = pick("n", opts.n);
    let m = pick("M", opts.m);
    let seed = pick("seed", opts.seed);
    let tol = pick("tol", opts.tol);
    let threads = pick("threads", opts.threads);
    let out = pick("out", None).map(PathBuf::from);
    let mesh_file = pick("mesh_file", None).map(PathBuf::from);
    let export_stiffness = pick("export_stiffness", None).map(PathBuf::from);
    let cache_dir = pick("cache_dir", None).map(PathBuf::from);
    let mut switch = |key: &str, flag: bool| -> Result<bool> {
        match file.remove(key) {
            _ if flag => Ok(true),
            Some(v) => parse_flag(key, &v),
            None => Ok(false),
        }
    };
    let full_scale = switch("full_scale", opts.full_scale)?;
    let validate = switch("validate", opts.validate)?;
    let timing = switch("timing", opts.timing)?;

    let estimator = match (&estimator, command) {
        (Some(e), _) => e.parse::<Estimator>().map_err(|_| bad("estimator", format!("unknown estimator '{e}' (mc|is|barycentric)")))?,
        (None, Command::Table1) => Estimator::Barycentric,
        (None, _) => Estimator::Mc,
    };
    let forcing = match (&forcing, command) {
        (Some(f), _) => parse_forcing(f)?,
        (None, Command::Table1) => ForcingChoice::F1Eps,
        (None, _) => ForcingChoice::F2,
    };
    let sigma = sigma.as_deref().map(parse_sigma).transpose()?.unwrap_or(Sigma::Unit);
    if estimator != Estimator::Mc && sigma != Sigma::Unit {
        return Err(bad("sigma", format!("{} requires sigma=unit", estimator.name().to_uppercase())));
    }
    let levels = match (&n, command) {
        (Some(s), _) => parse_levels(s)?,
        (None, Command::Study) if full_scale => (2, 8),
        (None, Command::Study) => (2, 6),
        (None, Command::Table1) => (3, 8),
        (None, _) => (3, 3),
    };
    let replications = match &m {
        Some(s) => s.parse::<usize>().map_err(|_| bad("M", format!("'{s}' is not a count")))?,
        None if full_scale || command == Command::Table1 => 10_000,
        None => 200,
    };
    if replications < 1 {
        return Err(bad("M", "must be at least 1"));
    }
    let seed = match (seed, env_seed) {
        (Some(s), _) => s.parse::<u64>().map_err(|_| bad("seed", format!("'{s}' is not a 64-bit unsigned integer")))?,
        (None, Some(s)) => s.parse::<u64>().map_err(|_| bad(SEED_ENV, format!("'{s}' is not a 64-bit unsigned integer")))?,
        (None, None) => 0,
    };
    let tol = match &tol {
        Some(s) => s.parse::<f64>().map_err(|_| bad("tol", format!("'{s}' is not a number")))?,
        None => randfem_core::solver::DEFAULT_TOL,
    };
    if !(tol > 0.0 && tol < 1.0) {
        return Err(bad("tol", format!("{tol} outside (0, 1)")));
    }
    let threads = match &threads {
        Some(s) => match s.parse::<usize>() {
            Ok(t) if t >= 1 => Some(t),
            _ => return Err(bad("threads", format!("'{s}' is not a positive count"))),
        },
        None => None,
    };

    match command {
        Command::Mesh | Command::Solve if levels.0 != levels.1 => {
            return Err(bad("n", format!("{command} takes a single level")));
        }
        Command::Study if replications < 2 => return Err(bad("M", "a study needs at least 2 replications")),
        Command::Study | Command::Table1 if mesh_file.is_some() || opts.mesh_file.is_some() => {
            return Err(bad("mesh_file", format!("{command} runs on structured meshes only")));
        }
        Command::Table1 if estimator != Estimator::Barycentric => {
            return Err(bad("estimator", "table1 uses the barycentric rule"));
        }
        Command::Table1 if forcing != ForcingChoice::F1Eps => return Err(bad("forcing", "table1 uses f1eps")),
        _ => {}
    }

    Ok(RunConfig {
        command,
        estimator,
        forcing,
        sigma,
        levels,
        replications,
        seed,
        tol,
        out: opts.out.or(out),
        threads,
        full_scale,
        validate,
        timing,
        mesh_file: opts.mesh_file.or(mesh_file),
        export_stiffness: opts.export_stiffness.or(export_stiffness),
        cache_dir: opts.cache_dir.or(cache_dir),
    })
}

/// Parses a full argument vector (program name first).
pub fn parse_config<I, T>(args: I, env_seed: Option<String>) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::usage(e.render().to_string()))?;
    from_cli(cli, env_seed)
}

pub fn from_cli(cli: Cli, env_seed: Option<String>) -> Result<RunConfig> {
    let (command, opts) = match cli.command {
        CommandLine::Mesh(o) => (Command::Mesh, o),
        CommandLine::Solve(o) => (Command::Solve, o),
        CommandLine::Study(o) => (Command::Study, o),
        CommandLine::Table1(o) => (Command::Table1, o),
    };
    resolve(command, opts, env_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &str) -> Result<RunConfig> {
        parse_config(std::iter::once("randfem").chain(args.split_whitespace()), None)
    }

    #[test]
    fn study_example() {
        let c = parse("study --estimator mc --forcing f2 --n 2..6 --M 200 --seed 42").unwrap();
        assert_eq!(c.command, Command::Study);
        assert_eq!(c.estimator, Estimator::Mc);
        assert_eq!(c.forcing, ForcingChoice::F2);
        assert_eq!(c.levels, (2, 6));
        assert_eq!(c.replications, 200);
        assert_eq!(c.seed, 42);
        assert_eq!(c.tol, 1e-10);
    }

    #[test]
    fn is_with_sine_is_rejected() {
        let e = parse("solve --estimator is --sigma sine --n 3").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("IS requires sigma=unit"), "{e}");
    }

    #[test]
    fn invariant_violations_name_the_key() {
        for (args, key) in [
            ("study --n 0..3", "n:"),
            ("study --n 5..3", "n:"),
            ("study --n 2..13", "n:"),
            ("study --M 1", "M:"),
            ("study --M x", "M:"),
            ("study --tol 1.5", "tol:"),
            ("study --threads 0", "threads:"),
            ("solve --n 2..4", "n:"),
            ("study --forcing f3", "forcing:"),
            ("study --estimator qmc", "estimator:"),
            ("study --seed=-1", "seed:"),
            ("table1 --forcing f2", "forcing:"),
        ] {
            let e = parse(args).unwrap_err();
            assert!(e.to_string().starts_with(key), "{args}: {e}");
            assert_eq!(e.exit_code(), 2);
        }
    }

    #[test]
    fn defaults() {
        let c = parse("study").unwrap();
        assert_eq!((c.levels, c.replications, c.seed), ((2, 6), 200, 0));
        let c = parse("study --full-scale").unwrap();
        assert_eq!((c.levels, c.replications), ((2, 8), 10_000));
        let c = parse("table1").unwrap();
        assert_eq!((c.levels, c.estimator, c.forcing), ((3, 8), Estimator::Barycentric, ForcingChoice::F1Eps));
        assert_eq!(parse("mesh --n 2").unwrap().levels, (2, 2));
    }

    #[test]
    fn env_seed_is_a_fallback() {
        let args = ["randfem", "study"];
        assert_eq!(parse_config(args, Some("7".into())).unwrap().seed, 7);
        let args = ["randfem", "study", "--seed", "9"];
        assert_eq!(parse_config(args, Some("7".into())).unwrap().seed, 9);
        assert!(parse_config(["randfem", "study"], Some("x".into())).is_err());
    }

    #[test]
    fn config_file_parsing() {
        let m = parse_config_file("# comment\nM = 100\nfull-scale = true  # trailing\n\nseed=3\n").unwrap();
        assert_eq!(m["M"], "100");
        assert_eq!(m["full_scale"], "true");
        assert_eq!(m["seed"], "3");
        assert!(parse_config_file("bogus = 1").unwrap_err().to_string().contains("unknown key 'bogus'"));
        assert!(parse_config_file("M 100").is_err());
        assert!(parse_config_file("M = 1\nM = 2").is_err());
    }

    #[test]
    fn forcing_labels() {
        assert_eq!(parse_forcing("const:2.5").unwrap(), ForcingChoice::Const(2.5));
        assert_eq!(ForcingChoice::Const(2.5).label(), "const:2.5");
        assert_eq!(ForcingChoice::Const(1.0).label(), "const");
        assert_eq!(parse_sigma("const:2").unwrap(), Sigma::Constant(2.0));
        assert_eq!(parse_sigma("const:1").unwrap(), Sigma::Unit);
        assert!(parse_sigma("const:-1").is_err());
        assert!(parse_sigma("const:nan").is_err());
        assert_eq!(ForcingChoice::F1Eps.label(), "f1eps");
        assert!(parse_forcing("const:nan").is_err());
    }
}
