//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_rational::Rational64;
use paraproduct_core::ledger::{format_rational, ledger_report, parse_rational, SupBranch};

use crate::config::{Experiment, SweepConfig};
use crate::emit::{write_csv, write_csv_file, write_json_file, Report};
use crate::error::{HarnessError, Result};
use crate::experiments::primary_name;
use crate::fit::fit_exponent;
use crate::record::ExperimentRecord;
use crate::suites::{run_criterion, run_suites, SuiteMode};
use crate::sweep::{run_sweep, series, worker_count};

#[derive(Debug, Parser)]
#[command(name = "paraproduct", version, about = "Measure and audit the diagonal paraproduct estimates")]
pub struct Cli {
    /// Write the artifact (CSV, or JSON with --json) to this path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,
    /// Abort on the first failed cell and treat invariant breaches as errors.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Record per-cell wall times.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, default_value = "1/2")]
    pub delta: String,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, alias = "lambda", value_delimiter = ',', required = true)]
    pub lambdas: Vec<u64>,
    #[command(flatten)]
    pub common: Common,
    /// Multiplier `m` in `n ≥ m·λ`.
    #[arg(long)]
    pub grid_rule: Option<f64>,
    /// Fixed grid edge overriding the grid rule.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Memory cap in MiB.
    #[arg(long)]
    pub memory_cap_mib: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exponent ledger and branch report at δ.
    Ledger {
        #[arg(long, default_value = "1/2")]
        delta: String,
    },
    /// Transverse Hessian determinant and finite-difference agreement.
    Hessian {
        #[arg(long, alias = "lambda", value_delimiter = ',', default_values_t = [64u64, 256, 1024, 4096, 16384])]
        lambdas: Vec<u64>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Angle identities, null symbol and heat phase over resonant samples.
    Angles {
        #[arg(long, alias = "lambda", value_delimiter = ',', default_values_t = [64u64, 256, 1024, 4096, 16384])]
        lambdas: Vec<u64>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Sup of the k-th window derivative against its scaling bound.
    Window {
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long = "n", value_delimiter = ',', default_values_t = [64u64])]
        n: Vec<u64>,
        #[arg(long, default_value = "1/2")]
        delta: String,
    },
    /// Heat/Schrödinger kernel difference in L² over the window.
    Kernel {
        #[arg(long = "n", value_delimiter = ',', default_values_t = [64u64, 256, 1024, 4096])]
        n: Vec<u64>,
        #[arg(long, default_value = "1/2")]
        delta: String,
    },
    /// Averaged-sup inequality on random trigonometric polynomials.
    TileMax {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Local L⁴ norm of propagated band fields on a tile.
    LocalL4(GridArgs),
    /// Ḣ⁻¹ size of the diagonal paraproduct.
    Scaling(GridArgs),
    /// Cap decoupling ratio of the resonant block.
    Decoupling(GridArgs),
    /// Localized low-pass commutator norm, or the chained bound.
    Commutator {
        #[arg(long, alias = "lambdas", value_delimiter = ',', required = true)]
        mus: Vec<u64>,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid_rule: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 300)]
        iters: usize,
        /// Memory cap in MiB.
        #[arg(long)]
        memory_cap_mib: Option<u64>,
        /// Chained commutator bound at frequencies `N = mus`.
        #[arg(long)]
        chained: bool,
    },
    /// Run the acceptance criteria.
    VerifyAll {
        #[arg(long, conflicts_with = "full")]
        quick: bool,
        #[arg(long)]
        full: bool,
        /// Run only these criteria (comma separated ids).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
}

fn delta_arg(text: &str) -> Result<Rational64> {
    let d = parse_rational(text).map_err(|e| HarnessError::Config(format!("δ = {text}: {e}")))?;
    if text.contains('.') {
        eprintln!("δ = {text} read as {}", format_rational(d));
    }
    Ok(d)
}

/// Parses `argv`, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let cfg = match &cli.command {
        Command::Ledger { delta } => return ledger(cli, delta_arg(delta)?),
        Command::VerifyAll { full, only, .. } => {
            return verify(cli, if *full { SuiteMode::Full } else { SuiteMode::Quick }, only);
        }
        Command::Hessian { lambdas, samples, common } | Command::Angles { lambdas, samples, common } => {
            let exp = if matches!(cli.command, Command::Hessian { .. }) {
                Experiment::Hessian
            } else {
                Experiment::Angles
            };
            let mut cfg = from_common(exp, lambdas.clone(), common)?;
            cfg.samples = *samples;
            cfg
        }
        Command::Window { k, n, delta } => {
            let mut cfg = SweepConfig::new(Experiment::Window, n.clone(), delta_arg(delta)?);
            cfg.k = *k;
            cfg
        }
        Command::Kernel { n, delta } => SweepConfig::new(Experiment::Kernel, n.clone(), delta_arg(delta)?),
        Command::TileMax { trials, seed } => {
            let mut cfg = SweepConfig::new(Experiment::TileMax, vec![1], Rational64::new(1, 2));
            cfg.trials = *trials;
            cfg.seed = *seed;
            cfg
        }
        Command::LocalL4(g) => from_grid(Experiment::LocalL4, g)?,
        Command::Scaling(g) => from_grid(Experiment::Scaling, g)?,
        Command::Decoupling(g) => from_grid(Experiment::Decoupling, g)?,
        Command::Commutator {
            mus,
            common,
            grid_rule,
            grid,
            iters,
            memory_cap_mib,
            chained,
        } => {
            let mut cfg = from_common(Experiment::Commutator, mus.clone(), common)?;
            if let Some(m) = grid_rule {
                cfg.grid_rule = *m;
            }
            cfg.grid = *grid;
            cfg.iters = *iters;
            cfg.chained = *chained;
            if let Some(mib) = memory_cap_mib {
                cfg.memory_cap = mib << 20;
            }
            cfg
        }
    };
    sweep(cli, cfg)
}

fn from_common(exp: Experiment, lambdas: Vec<u64>, c: &Common) -> Result<SweepConfig> {
    let mut cfg = SweepConfig::new(exp, lambdas, delta_arg(&c.delta)?);
    cfg.trials = c.trials;
    cfg.seed = c.seed;
    Ok(cfg)
}

fn from_grid(exp: Experiment, g: &GridArgs) -> Result<SweepConfig> {
    let mut cfg = from_common(exp, g.lambdas.clone(), &g.common)?;
    if let Some(m) = g.grid_rule {
        cfg.grid_rule = m;
    }
    cfg.grid = g.grid;
    if let Some(mib) = g.memory_cap_mib {
        cfg.memory_cap = mib << 20;
    }
    Ok(cfg)
}

/// Experiments whose purpose is an exponent fit and so need two scales.
fn needs_fit(exp: Experiment) -> bool {
    matches!(
        exp,
        Experiment::Scaling | Experiment::LocalL4 | Experiment::Decoupling | Experiment::Commutator
    )
}

fn sweep(cli: &Cli, mut cfg: SweepConfig) -> Result<i32> {
    cfg.strict = cli.strict;
    cfg.timing = cli.timing;
    cfg.validate()?;
    let mut distinct = cfg.lambdas.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if needs_fit(cfg.experiment) && distinct.len() < 2 {
        return Err(HarnessError::Fit(format!(
            "{} needs at least two distinct scales for an exponent fit, got {}",
            cfg.experiment.id(),
            distinct.len()
        )));
    }
    let records = run_sweep(&cfg, worker_count())?;
    emit(cli, &cfg, &records)?;
    let mut stdout = std::io::stdout().lock();
    if !(cli.json && cli.out.is_none()) {
        summarize(&mut stdout, &cfg, &records)?;
    }
    let breaches = invariant_breaches(&cfg, &records);
    for b in &breaches {
        writeln!(stdout, "invariant: {b}")?;
    }
    if cli.strict && !breaches.is_empty() {
        return Err(HarnessError::Violation(format!("{} invariant breaches", breaches.len())));
    }
    Ok(0)
}

fn emit(cli: &Cli, cfg: &SweepConfig, records: &[ExperimentRecord]) -> Result<()> {
    match (&cli.out, cli.json) {
        (Some(path), true) => write_json_file(&Report::new(cfg, records.to_vec())?, path),
        (Some(path), false) => write_csv_file(records, path),
        (None, true) => {
            let report = Report::new(cfg, records.to_vec())?;
            let text = serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Io(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
        (None, false) => Ok(()),
    }
}

fn summarize<W: Write>(w: &mut W, cfg: &SweepConfig, records: &[ExperimentRecord]) -> Result<()> {
    let primary = primary_name(cfg);
    let predicted = records.first().map(|r| r.predicted_text.clone()).unwrap_or_default();
    writeln!(
        w,
        "{} δ={} primary={} predicted exponent {}",
        cfg.experiment.id(),
        format_rational(cfg.delta),
        primary,
        predicted
    )?;
    writeln!(w, "{:>8} {:>6} {:>14} {:>14}", "lambda", "trial", primary, "normalized")?;
    for r in records {
        match &r.error {
            Some(e) => writeln!(w, "{:>8} {:>6} error: {e}", r.lambda, r.trial)?,
            None => writeln!(
                w,
                "{:>8} {:>6} {:>14.6e} {:>14.6e}",
                r.lambda,
                r.trial,
                r.value(primary).unwrap_or(f64::NAN),
                r.normalized.unwrap_or(f64::NAN)
            )?,
        }
    }
    let pts = series(records, primary);
    match fit_exponent(&pts) {
        Ok(f) => writeln!(
            w,
            "fit: slope {:.4} (predicted {:.4}), intercept {:.4}, rms residual {:.2e}, {} points",
            f.slope,
            records.first().map(|r| r.predicted_exponent).unwrap_or(f64::NAN),
            f.intercept,
            f.residual,
            f.points
        )?,
        Err(e) if needs_fit(cfg.experiment) => return Err(e),
        Err(_) => {}
    }
    Ok(())
}

/// Per-cell invariants whose breach is a bug rather than a measurement.
pub fn invariant_breaches(cfg: &SweepConfig, records: &[ExperimentRecord]) -> Vec<String> {
    let mut out = Vec::new();
    let checks: &[(&str, fn(f64) -> bool)] = match cfg.experiment {
        Experiment::Scaling => &[("chain_ok", |v| v == 1.0), ("support_ok", |v| v == 1.0)],
        Experiment::Decoupling => &[("cauchy_schwarz_ok", |v| v == 1.0)],
        Experiment::Angles => &[("null_symbol_violations", |v| v == 0.0)],
        Experiment::TileMax => &[("violations", |v| v == 0.0), ("oracle_violations", |v| v == 0.0)],
        Experiment::Kernel => &[("relative_gap", |v| v < 1e-8)],
        _ => &[],
    };
    for r in records.iter().filter(|r| r.error.is_none()) {
        for (name, ok) in checks {
            if let Some(v) = r.value(name) {
                if !ok(v) {
                    out.push(format!("{name} = {v} at λ = {}, trial {}", r.lambda, r.trial));
                }
            }
        }
    }
    out
}

fn ledger(cli: &Cli, delta: Rational64) -> Result<i32> {
    let report = ledger_report(delta)?;
    if cli.json {
        let text = serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Io(e.to_string()))?;
        match &cli.out {
            Some(p) => std::fs::write(p, text).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?,
            None => println!("{text}"),
        }
        return Ok(0);
    }
    let mut s = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(s, "δ = {}", format_rational(delta));
    let _ = writeln!(s, "\nTable rows");
    for row in &report.table.rows {
        let _ = writeln!(s, "  {:<40} {:>22}   {}", row.name, row.exponent.to_string(), format_rational(row.exponent.eval(delta)));
    }
    let _ = writeln!(
        s,
        "  {:<40} {:>22}   {}",
        "total",
        report.table.total.to_string(),
        format_rational(report.table.total.eval(delta))
    );
    let _ = writeln!(
        s,
        "  {:<40} {:>22}   {}",
        "minimal total",
        report.table.minimal_total.to_string(),
        format_rational(report.table.minimal_total.eval(delta))
    );
    let _ = writeln!(s, "\nSharp rows");
    for row in &report.sharp {
        let _ = writeln!(s, "  {:<40} {:>22}   {}", row.name, row.exponent.to_string(), format_rational(row.value));
    }
    let _ = writeln!(s, "\nCounting");
    for row in &report.counting {
        let _ = writeln!(s, "  {:<40} {:>22}   {}", row.name, row.exponent.to_string(), format_rational(row.value));
    }
    let _ = writeln!(s, "\nArithmetic audits");
    for a in &report.audits {
        let _ = writeln!(
            s,
            "  {:<40} stated {} recomputed {} {}",
            a.name,
            a.stated,
            a.recomputed,
            if a.consistent { "ok" } else { "MISMATCH" }
        );
    }
    let b = &report.branch;
    let _ = writeln!(s, "\nWindow and global exponents");
    for e in &b.exponents {
        let _ = writeln!(s, "  {:<40} {:>22}   {}", e.name, e.exponent.to_string(), format_rational(e.value));
    }
    let _ = writeln!(s, "\nSummability");
    for m in &b.summability {
        let _ = writeln!(
            s,
            "  {:<40} {:>22}   {} < {}: {}",
            m.name,
            m.exponent.to_string(),
            format_rational(m.value),
            format_rational(m.target),
            if m.converges { "yes" } else { "no" }
        );
    }
    let _ = writeln!(s, "\nBranch (threshold {})", format_rational(b.threshold));
    let _ = writeln!(
        s,
        "  {}",
        match b.branch {
            SupBranch::Endpoint => "endpoint branch",
            SupBranch::EpsilonLoss => "ε-loss branch",
        }
    );
    let _ = writeln!(s, "  gap {}", format_rational(b.gap));
    if b.out_of_domain {
        let _ = writeln!(s, "  warning: δ lies outside the admissible range");
    }
    let _ = writeln!(s, "  {}", b.conclusion);
    match &cli.out {
        Some(p) => std::fs::write(p, &s).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?,
        None => print!("{s}"),
    }
    Ok(0)
}

fn verify(cli: &Cli, mode: SuiteMode, only: &[u32]) -> Result<i32> {
    let results = if only.is_empty() {
        run_suites(mode)
    } else {
        only.iter()
            .map(|&id| {
                run_criterion(id, mode)
                    .ok_or_else(|| HarnessError::Config(format!("no criterion {id}")))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let mut text = String::new();
    for r in &results {
        text.push_str(&r.line());
        text.push('\n');
    }
    print!("{text}");
    if let Some(p) = &cli.out {
        std::fs::write(p, &text).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
    }
    let failed = results.iter().filter(|r| r.status == crate::suites::Status::Fail).count();
    if failed > 0 {
        eprintln!("{failed} of {} criteria failed", results.len());
        return Ok(1);
    }
    Ok(0)
}

/// Writes `records` as CSV into a byte buffer.
pub fn csv_bytes(records: &[ExperimentRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(buf)
}
