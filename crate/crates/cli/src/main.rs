use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wellposed_cli::pipeline::{GaugeRequest, Session, Settings};
use wellposed_cli::simulate::{parse_time, simulate, SimulateRequest};
use wellposed_cli::{exit_code, to_json, SCHEMA_VERSION};
use wellposed_core::chart::Violation;
use wellposed_core::error::{Error, Result};

#[derive(Parser)]
#[command(name = "wellposed", version, about = "Well-posed boundary data for degenerate Lagrangians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Constraint structure, classes and degrees of freedom.
    Analyze(Common),
    /// Analysis plus the canonical constraint chart.
    Chart(Common),
    /// Full report: chart, embedding, pullback and boundary conditions.
    Report(Common),
    /// Solve the two-point problem and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Check S^T J S = J for a chart; exits 1 when it fails.
    VerifyChart(Common),
}

#[derive(Args)]
struct Common {
    /// System file (`.sys`).
    file: PathBuf,
    /// Reduction path: legendre, ssok, pons or counter-term.
    #[arg(long)]
    path: Option<String>,
    /// Fix the gauge; optionally `zeta1=<expr>,...` in chart symbols.
    #[arg(long = "gauge-fixing", num_args = 0..=1, require_equals = true, default_missing_value = "")]
    gauge_fixing: Option<String>,
    /// Endpoint at which initial-only gauge coordinates are fixed.
    #[arg(long = "fix-endpoint", value_parser = ["t1", "t2"])]
    fix_endpoint: Option<String>,
    /// Constant for a fixed chart coordinate, `<coord>=<rational>`.
    #[arg(long, value_name = "COORD=VALUE")]
    epsilon: Vec<String>,
    /// Chart JSON file overriding the file's `[chart]`.
    #[arg(long)]
    chart: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    t1: String,
    #[arg(long, allow_hyphen_values = true)]
    t2: String,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    /// Boundary values `Q1=<Q(t1)>,<Q(t2)>`, one per physical position.
    #[arg(long, value_name = "Q=A,B", allow_hyphen_values = true)]
    bc: Vec<String>,
    /// Initial value of a gauge coordinate fixed at t1 only, `Xi2=<value>`.
    #[arg(long, value_name = "XI=VALUE", allow_hyphen_values = true)]
    xi: Vec<String>,
}

fn split_pair(s: &str, what: &str) -> Result<(String, String)> {
    s.split_once('=')
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .ok_or_else(|| Error::Input(format!("{what} `{s}` is not of the form name=value")))
}

fn number(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Input(format!("`{s}` is not a number")))
}

fn settings(c: &Common) -> Result<Settings> {
    let gauge_fixing = match c.gauge_fixing.as_deref() {
        None => None,
        Some("") => Some(GaugeRequest::Default),
        Some(conds) => Some(GaugeRequest::Conditions(
            conds
                .split(',')
                .map(|s| split_pair(s, "gauge condition"))
                .collect::<Result<_>>()?,
        )),
    };
    Ok(Settings {
        path: c.path.clone(),
        gauge_fixing,
        endpoint: c.fix_endpoint.clone(),
        epsilon: c
            .epsilon
            .iter()
            .map(|s| split_pair(s, "epsilon"))
            .collect::<Result<_>>()?,
        chart: c.chart.clone(),
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(serde::Serialize)]
struct VerifyReport {
    schema_version: u32,
    system: String,
    symplectic: bool,
    violations: Vec<Violation>,
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Analyze(c) => {
            let s = Session::load(&c.file, settings(&c)?)?;
            emit(&c.out, &to_json(&s.analysis_report()?))?;
        }
        Command::Chart(c) => {
            let mut s = Session::load(&c.file, settings(&c)?)?;
            emit(&c.out, &to_json(&s.chart_report()?))?;
        }
        Command::Report(c) => {
            let mut s = Session::load(&c.file, settings(&c)?)?;
            emit(&c.out, &to_json(&s.full_report()?))?;
        }
        Command::VerifyChart(c) => {
            let mut s = Session::load(&c.file, settings(&c)?)?;
            let (chart, _) = s.chart()?;
            let check = chart.verify();
            let ok = check.symplectic;
            let report = VerifyReport {
                schema_version: SCHEMA_VERSION,
                system: s.file.name.clone(),
                symplectic: check.symplectic,
                violations: check.violations,
            };
            emit(&c.out, &to_json(&report))?;
            return Ok(if ok { 0 } else { 1 });
        }
        Command::Simulate(a) => {
            let mut s = Session::load(&a.common.file, settings(&a.common)?)?;
            let (chart, _) = s.chart()?;
            let plan = s.plan(&chart)?;
            let mut boundary = Vec::new();
            for b in &a.bc {
                let (name, vals) = split_pair(b, "boundary condition")?;
                let (x, y) = vals
                    .split_once(',')
                    .ok_or_else(|| Error::Input(format!("boundary condition `{b}` needs two values")))?;
                boundary.push((name, number(x)?, number(y)?));
            }
            let initial_only = a
                .xi
                .iter()
                .map(|x| {
                    let (n, v) = split_pair(x, "initial value")?;
                    Ok((n, number(&v)?))
                })
                .collect::<Result<_>>()?;
            let req = SimulateRequest {
                t1: parse_time(&a.t1)?,
                t2: parse_time(&a.t2)?,
                step: a.step,
                boundary,
                initial_only,
            };
            let sim = simulate(&s, &chart, &plan, &req)?;
            let mut csv = Vec::new();
            sim.trajectory.write_csv(&mut csv, &sim.field, &s.table)?;
            match &a.common.out {
                Some(p) => {
                    std::fs::write(p, &csv).map_err(|e| Error::Input(format!("cannot write {}: {e}", p.display())))?;
                    print!("{}", to_json(&sim.summary));
                }
                None => {
                    eprint!("{}", to_json(&sim.summary));
                    print!("{}", String::from_utf8(csv).expect("CSV is UTF-8"));
                }
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
