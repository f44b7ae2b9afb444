//! `noma-mec` command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid input or I/O failure, 2 when the
//! verification campaign finds a violated invariant.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::experiments::{
    deadline_sweep, format_value, surface_export, verification_campaign_with_tol,
    write_surface_csv, write_sweep_csv, CampaignSummary, ScenarioBase,
};
use crate::model::{EnergyReport, OffloadScenario};
use crate::oracle::{default_surface_ranges, DEFAULT_RESOLUTION, DEFAULT_TOL};
use crate::strategy::{select_strategy, ComparisonTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

const DEFAULT_SEED: u64 = 42;
const DEFAULT_COUNT: usize = 200;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    FileUnreadable { path: PathBuf, source: io::Error },
    #[error("config file {path} is not valid TOML: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("key `{key}` must be {expected}")]
    TypeMismatch { key: String, expected: &'static str },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
}

/// Parameters merged from a config file and command-line flags. Flags win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CliConfig {
    pub n: Option<f64>,
    pub dm: Option<f64>,
    pub dn: Option<f64>,
    pub hm2: Option<f64>,
    pub hn2: Option<f64>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
    pub tn: Option<f64>,
    pub p1max: Option<f64>,
    pub p2max: Option<f64>,
    pub resolution: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub count: Option<usize>,
}

impl CliConfig {
    /// Fills every field set in `other`, leaving the rest untouched.
    pub fn override_with(&mut self, other: &CliConfig) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(n, dm, dn, hm2, hn2, from, to, steps, tn, p1max, p2max, resolution, tol, seed, count);
    }

    fn require<T: Copy>(value: Option<T>, key: &str) -> Result<T, ConfigError> {
        value.ok_or_else(|| ConfigError::MissingKey(key.to_owned()))
    }

    pub fn base(&self) -> Result<ScenarioBase, ConfigError> {
        Ok(ScenarioBase {
            nats: Self::require(self.n, "n")?,
            d_m: Self::require(self.dm, "dm")?,
            h_m_sq: self.hm2.unwrap_or(1.0),
            h_n_sq: self.hn2.unwrap_or(1.0),
        })
    }

    pub fn scenario(&self) -> Result<OffloadScenario, CliError> {
        let base = self.base()?;
        let d_n = Self::require(self.dn, "dn")?;
        Ok(base.with_d_n(d_n)?)
    }
}

fn number(key: &str, v: &toml::Value) -> Result<f64, ConfigError> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(ConfigError::TypeMismatch {
            key: key.to_owned(),
            expected: "a number",
        }),
    }
}

fn count(key: &str, v: &toml::Value) -> Result<u64, ConfigError> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(ConfigError::TypeMismatch {
            key: key.to_owned(),
            expected: "a non-negative integer",
        }),
    }
}

fn apply_key(cfg: &mut CliConfig, key: &str, v: &toml::Value) -> Result<(), ConfigError> {
    match key {
        "n" => cfg.n = Some(number(key, v)?),
        "dm" => cfg.dm = Some(number(key, v)?),
        "dn" => cfg.dn = Some(number(key, v)?),
        "hm2" => cfg.hm2 = Some(number(key, v)?),
        "hn2" => cfg.hn2 = Some(number(key, v)?),
        "sweep.from" => cfg.from = Some(number(key, v)?),
        "sweep.to" => cfg.to = Some(number(key, v)?),
        "sweep.steps" => cfg.steps = Some(count(key, v)? as usize),
        "surface.tn" => cfg.tn = Some(number(key, v)?),
        "surface.p1max" => cfg.p1max = Some(number(key, v)?),
        "surface.p2max" => cfg.p2max = Some(number(key, v)?),
        "surface.resolution" => cfg.resolution = Some(count(key, v)? as usize),
        "verify.tol" => cfg.tol = Some(number(key, v)?),
        "verify.seed" => cfg.seed = Some(count(key, v)?),
        "verify.count" => cfg.count = Some(count(key, v)? as usize),
        _ => return Err(ConfigError::UnknownKey(key.to_owned())),
    }
    Ok(())
}

/// Parses a TOML scenario document.
///
/// ```toml
/// n = 15
/// dm = 20
/// dn = 25
/// hn2 = 1.0
///
/// [sweep]
/// from = 20
/// to = 40
/// steps = 21
/// ```
///
/// Optional `[surface]` (`tn`, `p1max`, `p2max`, `resolution`) and `[verify]`
/// (`seed`, `count`, `tol`) tables are accepted as well.
pub fn parse_scenario_document(path: &Path, text: &str) -> Result<CliConfig, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Malformed {
            path: path.to_owned(),
            message: e.message().to_owned(),
        })?;
    let mut cfg = CliConfig::default();
    for (key, value) in &table {
        match value {
            toml::Value::Table(inner) if matches!(key.as_str(), "sweep" | "surface" | "verify") => {
                for (k, v) in inner {
                    apply_key(&mut cfg, &format!("{key}.{k}"), v)?;
                }
            }
            _ => apply_key(&mut cfg, key, value)?,
        }
    }
    Ok(cfg)
}

pub fn load_scenario_file(path: &Path) -> Result<CliConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::FileUnreadable {
        path: path.to_owned(),
        source,
    })?;
    parse_scenario_document(path, &text)
}

#[derive(Debug, Parser)]
#[command(
    name = "noma-mec",
    version,
    about = "Energy-optimal power and time allocation for two-user NOMA-MEC offloading"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare hybrid NOMA, pure NOMA and OMA for one scenario
    Solve(SolveArgs),
    /// Sweep user n's deadline and write a CSV table
    Sweep(SweepArgs),
    /// Sample the energy over a (P_n1, P_n2) grid and write a CSV table
    Surface(SurfaceArgs),
    /// Check closed forms against the numerical oracle on random scenarios
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct BaseArgs {
    /// Task size N of both users [nats]
    #[arg(long)]
    n: Option<f64>,
    /// Deadline D_m of user m [normalized time units]
    #[arg(long)]
    dm: Option<f64>,
    /// Channel power gain |h_m|^2 of user m [linear, unit noise power; default 1]
    #[arg(long)]
    hm2: Option<f64>,
    /// Channel power gain |h_n|^2 of user n [linear, unit noise power; default 1]
    #[arg(long)]
    hn2: Option<f64>,
    /// TOML scenario file [path]; flags override its values
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write output to this file instead of standard output [path]
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    base: BaseArgs,
    /// Deadline D_n of user n, D_n >= D_m [normalized time units]
    #[arg(long)]
    dn: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    base: BaseArgs,
    /// First deadline D_n of the sweep [normalized time units; default D_m]
    #[arg(long)]
    from: Option<f64>,
    /// Last deadline D_n of the sweep [normalized time units; default 2 D_m]
    #[arg(long)]
    to: Option<f64>,
    /// Number of evenly spaced deadlines [count, >= 2; default 21]
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Debug, Args)]
struct SurfaceArgs {
    #[command(flatten)]
    base: BaseArgs,
    /// Deadline D_n of user n [normalized time units]
    #[arg(long)]
    dn: Option<f64>,
    /// Extension length T_n, 0 < T_n <= D_m [normalized time units; default min(D_n - D_m, D_m)]
    #[arg(long)]
    tn: Option<f64>,
    /// Upper end of the P_n1 axis [power units; default 2 P_n1*]
    #[arg(long)]
    p1max: Option<f64>,
    /// Upper end of the P_n2 axis [power units; default 2 P_n2*]
    #[arg(long)]
    p2max: Option<f64>,
    /// Grid points per axis [count, >= 2; default 200]
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Seed of the scenario generator [integer; default 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Scenarios per regime [count, >= 1; default 200]
    #[arg(long)]
    count: Option<usize>,
    /// Bracket width of the oracle's golden-section search [split fraction; default 1e-10]
    #[arg(long)]
    tol: Option<f64>,
    /// TOML file with a [verify] table [path]
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the summary to this file instead of standard output [path]
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn merged(config: &Option<PathBuf>, flags: CliConfig) -> Result<CliConfig, ConfigError> {
    let mut cfg = match config {
        Some(path) => load_scenario_file(path)?,
        None => CliConfig::default(),
    };
    cfg.override_with(&flags);
    Ok(cfg)
}

fn base_flags(b: &BaseArgs) -> CliConfig {
    CliConfig {
        n: b.n,
        dm: b.dm,
        hm2: b.hm2,
        hn2: b.hn2,
        ..CliConfig::default()
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> CliError {
    CliError::Model(crate::Error::InvalidArgument {
        name,
        reason: reason.into(),
    })
}

fn report_line(r: &EnergyReport) -> String {
    let (p1, p2, t) = match r.schedule {
        Some(p) => (
            format_value(p.p_n1),
            format_value(p.p_n2),
            format_value(p.t_n),
        ),
        None => ("-".into(), "-".into(), "-".into()),
    };
    format!(
        "{:<12} {:>22} {:>22} {:>22} {:>22} {:>22} {:>9}{}",
        r.strategy.as_str(),
        format_value(r.energy),
        format_value(r.normalized_energy),
        p1,
        p2,
        t,
        r.feasible,
        if r.overflow {
            format!("  (ln E = {})", format_value(r.log_energy))
        } else {
            String::new()
        }
    )
}

fn render_table(s: &OffloadScenario, t: &ComparisonTable) -> String {
    let sel = t.selected_report();
    let mut out = String::new();
    out.push_str(&format!(
        "scenario: n={} dm={} dn={} hm2={} hn2={}\n",
        format_value(s.nats()),
        format_value(s.d_m()),
        format_value(s.d_n()),
        format_value(s.h_m_sq()),
        format_value(s.h_n_sq()),
    ));
    out.push_str(&format!("regime: {}\n", t.regime));
    out.push_str(&format!("selected={}\n", t.selected));
    out.push_str(&format!("energy={}\n", format_value(sel.energy)));
    out.push_str(&format!(
        "normalized_energy={}\n",
        format_value(sel.normalized_energy)
    ));
    out.push('\n');
    out.push_str(&format!(
        "{:<12} {:>22} {:>22} {:>22} {:>22} {:>22} {:>9}\n",
        "strategy", "energy", "normalized", "p_n1", "p_n2", "t_n", "feasible"
    ));
    for r in [&t.hybrid, &t.pure_noma, &t.oma] {
        out.push_str(&report_line(r));
        out.push('\n');
    }
    out
}

fn render_summary(s: &CampaignSummary) -> String {
    format!(
        "seed: {}\ncount: {}\nmax_rel_err: {}\nmax_dominance_violation: {}\n\
         max_oma_violation: {}\nmax_oma_margin_violation: {}\nmax_kkt_residual: {}\npass: {}\n",
        s.seed,
        s.count,
        format_value(s.max_rel_err),
        format_value(s.max_dominance_violation),
        format_value(s.max_oma_violation),
        format_value(s.max_oma_margin_violation),
        format_value(s.max_kkt_residual),
        s.pass
    )
}

fn emit(out_path: &Option<PathBuf>, stdout: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    match out_path {
        Some(path) => fs::write(path, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn run_command(command: Command, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Solve(args) => {
            let mut flags = base_flags(&args.base);
            flags.dn = args.dn;
            let cfg = merged(&args.base.config, flags)?;
            let s = cfg.scenario()?;
            let table = select_strategy(&s);
            emit(&args.base.out, stdout, render_table(&s, &table).as_bytes())?;
        }
        Command::Sweep(args) => {
            let mut flags = base_flags(&args.base);
            flags.from = args.from;
            flags.to = args.to;
            flags.steps = args.steps;
            let cfg = merged(&args.base.config, flags)?;
            let base = cfg.base()?;
            let from = cfg.from.unwrap_or(base.d_m);
            let to = cfg.to.unwrap_or(2.0 * base.d_m);
            let rows = deadline_sweep(&base, from, to, cfg.steps.unwrap_or(21))?;
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &base, &rows)?;
            emit(&args.base.out, stdout, &buf)?;
        }
        Command::Surface(args) => {
            let mut flags = base_flags(&args.base);
            flags.dn = args.dn;
            flags.tn = args.tn;
            flags.p1max = args.p1max;
            flags.p2max = args.p2max;
            flags.resolution = args.resolution;
            let cfg = merged(&args.base.config, flags)?;
            let s = cfg.scenario()?;
            let t_n = cfg.tn.unwrap_or_else(|| s.own_slot().min(s.d_m()));
            if !(t_n > 0.0 && t_n <= s.d_m()) {
                return Err(invalid("tn", format!("must lie in (0, D_m], got {t_n}")));
            }
            let (d1, d2) = default_surface_ranges(&s, t_n)?;
            let records = surface_export(
                &s,
                t_n,
                cfg.p1max.unwrap_or(d1),
                cfg.p2max.unwrap_or(d2),
                cfg.resolution.unwrap_or(DEFAULT_RESOLUTION),
            )?;
            let mut buf = Vec::new();
            write_surface_csv(&mut buf, &s, t_n, &records)?;
            emit(&args.base.out, stdout, &buf)?;
        }
        Command::Verify(args) => {
            let flags = CliConfig {
                seed: args.seed,
                count: args.count,
                tol: args.tol,
                ..CliConfig::default()
            };
            let cfg = merged(&args.config, flags)?;
            let summary = verification_campaign_with_tol(
                cfg.seed.unwrap_or(DEFAULT_SEED),
                cfg.count.unwrap_or(DEFAULT_COUNT),
                cfg.tol.unwrap_or(DEFAULT_TOL),
            )?;
            emit(&args.out, stdout, render_summary(&summary).as_bytes())?;
            if !summary.pass {
                return Ok(EXIT_VERIFY_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(rendered.as_bytes());
                    EXIT_INVALID
                }
            };
        }
    };
    match run_command(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INVALID
        }
    }
}
