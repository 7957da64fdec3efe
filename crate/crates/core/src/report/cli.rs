//! Argument handling for the `frio` binary.

use super::config;
use super::format::{render, Format};
use super::{
    run_angles, run_sweep, run_verify, QMode, SimulationSpec, SweepSpec, VerifyOptions, VerifyReport,
    DEFAULT_S_VALUES, DEFAULT_VERIFY_ETAS,
};
use crate::error::{FrioError, Result};
use crate::montecarlo::{DEFAULT_BASE_TIME, DEFAULT_RATE};
use crate::noise::Visibility;
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "frio", version, about = "Optimal two-state discrimination with a fixed rate of inconclusive results")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate optimal probabilities and waveplate angles over an overlap grid.
    Sweep(Flags),
    /// Certify the closed-form error rates against the brute-force oracle.
    Verify(Flags),
    /// Print waveplate settings for one ensemble.
    Angles(Flags),
    /// Sweep with a simulated counting experiment at every point.
    Simulate(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Flat `key = value` file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overlap values, comma separated.
    #[arg(long)]
    pub s: Option<String>,
    /// Prior of the first state (a comma-separated list for `verify`).
    #[arg(long)]
    pub eta1: Option<String>,
    /// med, half, ud or absolute:<value>.
    #[arg(long = "q-mode")]
    pub q_mode: Option<String>,
    #[arg(long)]
    pub visibility: Option<f64>,
    /// Coincidence rate per second.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Base integration time in seconds; state i is measured for 2·eta_i·time.
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Oracle evaluations per grid point.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Omit the generation-time header line.
    #[arg(long)]
    pub no_timestamp: bool,
    /// Add simulated counts to a sweep.
    #[arg(long)]
    pub simulate: bool,
}

/// Flags merged over the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
    pub no_timestamp: bool,
    pub simulate: bool,
}

fn usage(msg: impl Into<String>) -> FrioError {
    FrioError::Usage(msg.into())
}

impl Settings {
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let mut values = match &flags.config {
            Some(path) => config::load(path)?,
            None => BTreeMap::new(),
        };
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        };
        set("s", flags.s.clone());
        set("eta1", flags.eta1.clone());
        set("q-mode", flags.q_mode.clone());
        set("visibility", flags.visibility.map(|v| v.to_string()));
        set("rate", flags.rate.map(|v| v.to_string()));
        set("time", flags.time.map(|v| v.to_string()));
        set("seed", flags.seed.map(|v| v.to_string()));
        set("out", flags.out.as_ref().map(|p| p.display().to_string()));
        set("format", flags.format.clone());
        set("budget", flags.budget.map(|v| v.to_string()));
        let file_bool = |values: &BTreeMap<String, String>, k: &str| -> Result<bool> {
            values.get(k).map_or(Ok(false), |v| config::parse_bool(k, v))
        };
        let no_timestamp = flags.no_timestamp || file_bool(&values, "no-timestamp")?;
        // acquisition settings given explicitly imply a simulated run
        let simulate = flags.simulate
            || file_bool(&values, "simulate")?
            || ["seed", "rate", "time"].iter().any(|k| values.contains_key(*k));
        Ok(Self {
            values,
            no_timestamp,
            simulate,
        })
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| usage(format!("invalid value `{v}` for `{key}`"))),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.values.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| usage(format!("invalid number `{x}` in `{key}`")))
                })
                .collect(),
        }
    }

    pub fn s_values(&self) -> Result<Vec<f64>> {
        self.list("s", &DEFAULT_S_VALUES)
    }

    pub fn eta1(&self) -> Result<f64> {
        self.get("eta1", 0.5)
    }

    pub fn q_mode(&self) -> Result<QMode> {
        self.values
            .get("q-mode")
            .map_or(Ok(QMode::Med), |v| v.parse())
    }

    pub fn format(&self) -> Result<Format> {
        self.values.get("format").map_or(Ok(Format::Csv), |v| v.parse())
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.values.get("out").map(PathBuf::from)
    }

    pub fn seed(&self) -> Result<u64> {
        self.get("seed", 0)
    }

    pub fn budget(&self) -> Result<usize> {
        self.get("budget", 100_000)
    }

    pub fn sweep_spec(&self, simulate: bool) -> Result<SweepSpec> {
        let montecarlo = if simulate || self.simulate {
            Some(SimulationSpec {
                rate: self.get("rate", DEFAULT_RATE)?,
                base_time: self.get("time", DEFAULT_BASE_TIME)?,
                seed: self.seed()?,
            })
        } else {
            None
        };
        Ok(SweepSpec {
            s_values: self.s_values()?,
            eta1: self.eta1()?,
            q_mode: self.q_mode()?,
            visibility: self.get("visibility", Visibility::MEASURED.epsilon())?,
            montecarlo,
        })
    }

    pub fn verify_options(&self) -> Result<VerifyOptions> {
        Ok(VerifyOptions {
            s_values: self.s_values()?,
            eta_values: self.list("eta1", &DEFAULT_VERIFY_ETAS)?,
            budget: self.budget()?,
            seed: self.seed()?,
        })
    }

    fn generated(&self) -> Option<u64> {
        if self.no_timestamp {
            None
        } else {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs())
        }
    }
}

/// Exit status for an error: 2 for invalid input, 1 otherwise.
pub fn exit_code(err: &FrioError) -> i32 {
    match err {
        FrioError::Usage(_) | FrioError::Domain { .. } | FrioError::QAboveMax { .. } => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Exit status and diagnostics for a certification run.
pub fn verify_outcome(report: &VerifyReport) -> (i32, Vec<String>) {
    let mut lines: Vec<String> = report.warnings.iter().map(|w| format!("warning: {w}")).collect();
    for p in report.failures() {
        lines.push(format!("FAIL {p}"));
    }
    let code = if report.passed { EXIT_OK } else { EXIT_FAILURE };
    (code, lines)
}

fn emit(text: &str, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(&path, text).map_err(FrioError::from),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn sweep(settings: &Settings, simulate: bool) -> Result<i32> {
    let spec = settings.sweep_spec(simulate)?;
    let report = match run_sweep(&spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit_code(&e.error));
        }
    };
    let text = render(&report, settings.format()?, settings.generated())?;
    emit(&text, settings.out())?;
    Ok(EXIT_OK)
}

fn verify(settings: &Settings) -> Result<i32> {
    let report = run_verify(&settings.verify_options()?)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| FrioError::Io(e.to_string()))? + "\n";
    emit(&text, settings.out())?;
    let (code, lines) = verify_outcome(&report);
    for l in lines {
        eprintln!("{l}");
    }
    Ok(code)
}

fn angles(settings: &Settings) -> Result<i32> {
    let s_values = settings.s_values()?;
    let [s] = s_values.as_slice() else {
        return Err(usage("`angles` takes a single --s value"));
    };
    let table = run_angles(*s, settings.eta1()?, settings.q_mode()?)?;
    let text = match settings.format()? {
        Format::Json => serde_json::to_string_pretty(&table).map_err(|e| FrioError::Io(e.to_string()))? + "\n",
        Format::Csv => format!("{table}\n"),
    };
    emit(&text, settings.out())?;
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Sweep(flags) => sweep(&Settings::resolve(flags)?, false),
        Command::Simulate(flags) => sweep(&Settings::resolve(flags)?, true),
        Command::Verify(flags) => verify(&Settings::resolve(flags)?),
        Command::Angles(flags) => angles(&Settings::resolve(flags)?),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(args: &[&str]) -> Flags {
        let mut full = vec!["frio", "sweep"];
        full.extend_from_slice(args);
        match Cli::try_parse_from(full).unwrap().command {
            Command::Sweep(f) => f,
            _ => unreachable!(),
        }
    }

    #[test]
    fn defaults() {
        let s = Settings::resolve(&flags(&[])).unwrap();
        let spec = s.sweep_spec(false).unwrap();
        assert_eq!(spec, SweepSpec::default());
        assert_eq!(s.format().unwrap(), Format::Csv);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "eta1 = 0.3\nq-mode = half\nseed = 5\nsimulate = true\n").unwrap();
        let cfg = path.to_str().unwrap();
        let s = Settings::resolve(&flags(&["--config", cfg, "--eta1", "0.2"])).unwrap();
        let spec = s.sweep_spec(false).unwrap();
        assert_eq!(spec.eta1, 0.2);
        assert_eq!(spec.q_mode, QMode::Half);
        assert_eq!(spec.montecarlo.unwrap().seed, 5);
    }

    #[test]
    fn bad_values_are_usage_errors() {
        let s = Settings::resolve(&flags(&["--s", "0.1,x"])).unwrap();
        assert_eq!(exit_code(&s.s_values().unwrap_err()), EXIT_USAGE);
        let s = Settings::resolve(&flags(&["--q-mode", "sometimes"])).unwrap();
        assert_eq!(exit_code(&s.q_mode().unwrap_err()), EXIT_USAGE);
    }

    #[test]
    fn explicit_seed_implies_simulation() {
        let plain = Settings::resolve(&flags(&[])).unwrap();
        assert!(plain.sweep_spec(false).unwrap().montecarlo.is_none());
        let seeded = Settings::resolve(&flags(&["--seed", "42"])).unwrap();
        assert_eq!(seeded.sweep_spec(false).unwrap().montecarlo.unwrap().seed, 42);
        let timed = Settings::resolve(&flags(&["--time", "5"])).unwrap();
        assert_eq!(timed.sweep_spec(false).unwrap().montecarlo.unwrap().base_time, 5.0);
    }
}
