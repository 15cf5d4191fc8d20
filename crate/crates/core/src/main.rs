use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use horoflow::config::{parse_grid, RunConfig};
use horoflow::report::{exit_code, CheckReport};
use horoflow::suites::{example_poincare, run_suite, run_sweep, sweep_csv, Suite};
use horoflow::Error;

/// Numerical verification of horosphere geometry in Hⁿ and Eⁿ.
///
/// Exit status: 0 when every check passes (paper-discrepancy counts as passing),
/// 1 when a numerical check fails, 2 on usage or configuration errors.
/// HOROFLOW_THREADS caps the worker pool.
#[derive(Parser, Debug)]
#[command(name = "horoflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a verification suite and write a JSON array of check reports.
    Verify {
        /// busemann, map-f, flows, intersections, coarea or all.
        suite: String,
        #[command(flatten)]
        common: Common,
        /// Also run the out-of-image integral check for F (reported as paper-discrepancy).
        #[arg(long)]
        probe_outside_image: bool,
    },
    /// Reproduce a worked example.
    Example {
        #[command(subcommand)]
        which: Example,
    },
    /// Tabulate vol, V, W, the volume bound and max β over an (s, t) grid as CSV.
    Sweep {
        /// s grid as a:b:k [default: the config s_grid, 0.5, ln 2, 2].
        #[arg(long = "s", allow_hyphen_values = true)]
        s: Option<String>,
        /// t grid as a:b:k [default: the config t_grid, -3, -1, 0, 1, 3].
        #[arg(long = "t", allow_hyphen_values = true)]
        t: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand, Debug)]
enum Example {
    /// Two horospheres in the upper half-space meeting in a circle through (0, 0, 2).
    Poincare {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Model space: h2, h3, hN, eN or "e N" [default: h3].
    #[arg(long)]
    model: Option<String>,
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed [default: 24301].
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo samples per estimate [default: 200000].
    #[arg(long)]
    samples: Option<u64>,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> horoflow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = &self.model {
            cfg.model = m.clone();
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.samples {
            cfg.samples = n;
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        Ok(cfg)
    }
}

fn emit(text: &str, out: Option<&Path>) -> horoflow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_reports(reports: &[CheckReport], out: Option<&Path>) -> horoflow::Result<i32> {
    let json = serde_json::to_string_pretty(reports).map_err(|e| Error::Io(e.to_string()))?;
    emit(&json, out)?;
    for r in reports {
        let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        eprintln!("{status:<18} {}", r.name);
    }
    Ok(exit_code(reports))
}

fn configure_threads() -> horoflow::Result<()> {
    let Ok(v) = std::env::var("HOROFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("HOROFLOW_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn run(cli: Cli) -> horoflow::Result<i32> {
    configure_threads()?;
    match cli.command {
        Command::Verify { suite, common, probe_outside_image } => {
            let suite: Suite = suite.parse()?;
            let mut cfg = common.resolve()?;
            cfg.probe_outside_image |= probe_outside_image;
            let reports = run_suite(suite, &cfg)?;
            emit_reports(&reports, cfg.out.as_deref())
        }
        Command::Example { which: Example::Poincare { out } } => emit_reports(&example_poincare()?, out.as_deref()),
        Command::Sweep { s, t, common } => {
            let cfg = common.resolve()?;
            let s_grid = s.as_deref().map(parse_grid).transpose()?.unwrap_or_else(|| cfg.s_grid.clone());
            let t_grid = t.as_deref().map(parse_grid).transpose()?.unwrap_or_else(|| cfg.t_grid.clone());
            let grids = RunConfig { s_grid: s_grid.clone(), t_grid: t_grid.clone(), ..cfg.clone() };
            grids.validate()?;
            let rows = run_sweep(&cfg, &s_grid, &t_grid)?;
            emit(sweep_csv(&rows).trim_end(), cfg.out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e @ (Error::Config(_) | Error::ModelMismatch(..) | Error::DimensionMismatch { .. } | Error::UnsupportedDimension(_) | Error::InvalidIdeal(_) | Error::NotVisibility(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Error::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
