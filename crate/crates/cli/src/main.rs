//! `rassoc`: exact values, asymptotic approximations, error grids and
//! verification reports for r-associated Stirling numbers.

mod config;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use rassoc_core::analysis::{error_grid, export, max_interior_q, ExportFormat, GridOptions};
use rassoc_core::approx::{evaluate, relative_error, Formula};
use rassoc_core::bigcomb::{
    stirling, stirling_alekseyev_r2, stirling_contour, stirling_partition_sum, ContourOptions,
};
use rassoc_core::prec::fmt_sci17;
use rassoc_core::verify::{self, ConjectureReport};
use rassoc_core::{Error, Result};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "rassoc",
    version,
    about = "r-associated Stirling numbers S_r(p, q)"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// key = value settings file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Working precision in bits (≥ 64)
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    max_p: Option<u64>,
    #[arg(long, global = true)]
    max_a: Option<u64>,
    #[arg(long = "max-N", global = true)]
    max_n: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print S_r(p, q) exactly (or its log, for the contour method)
    Exact {
        #[arg(long)]
        r: u32,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        #[arg(long, value_enum, default_value_t = Method::Recurrence)]
        method: Method,
    },
    /// Print the log of an asymptotic approximation and its relative error
    Approx {
        #[arg(long)]
        r: u32,
        #[arg(long)]
        p: Option<u64>,
        #[arg(long)]
        q: u64,
        /// p − rq, an alternative to --p
        #[arg(long)]
        a: Option<u64>,
        #[arg(long, value_enum)]
        formula: FormulaArg,
    },
    /// Write the relative-error grid over q for fixed (r, p)
    Grid {
        #[arg(long)]
        r: u32,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q_from: Option<u64>,
        #[arg(long)]
        q_to: Option<u64>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run one verification check and print its JSON report
    Verify {
        #[command(subcommand)]
        check: Check,
        #[arg(long, global = true)]
        output: Option<PathBuf>,
    },
    /// Run the built-in invariant suite
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Recurrence,
    Alekseyev,
    #[value(name = "partition_sum", alias = "partition-sum")]
    PartitionSum,
    Contour,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormulaArg {
    Hennecart,
    Cd,
    Largeq,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Check {
    /// Non-negative coefficients of e^{-x/(r+1)} B_r(x)
    NonnegCoeffs {
        #[arg(long)]
        r: u32,
        #[arg(long = "N", default_value_t = verify::DEFAULT_SERIES_ORDER)]
        n: usize,
    },
    /// p·|F_r/S_r − 1| ≤ bound over full q ranges
    ScaledError {
        #[arg(long)]
        r: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<u64>,
        #[arg(long, default_value_t = 0.16)]
        bound: f64,
    },
    /// Minimum of |B_r(x+iy)|e^{-x} over a sampled cone |y| ≤ βx
    Cone {
        #[arg(long)]
        r: u32,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0.01)]
        x_min: f64,
        #[arg(long, default_value_t = 50.0)]
        x_max: f64,
        #[arg(long, default_value_t = 200)]
        x_points: usize,
        #[arg(long, default_value_t = verify::DEFAULT_CONE_Y_STEPS)]
        y_steps: usize,
    },
    /// 1/(r+1) ≤ Q_r'(z) ≤ 1 and monotonicity of Q_r on a log grid
    QDerivative {
        #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 3, 4, 5, 6])]
        r: Vec<u32>,
        #[arg(long, default_value_t = 1e-6)]
        z_min: f64,
        #[arg(long, default_value_t = 1e3)]
        z_max: f64,
        #[arg(long, default_value_t = 200)]
        z_points: usize,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Parse(_) => 2,
        Error::Capacity { .. } => 3,
        Error::Io { .. } => 4,
        Error::Consistency(_) | Error::Quadrature { .. } | Error::Solver { .. } => 5,
    }
}

fn run_config(g: &GlobalOpts) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(p) = g.precision {
        cfg.precision_bits = p;
    }
    if let Some(t) = g.threads {
        cfg.parallelism = t;
    }
    if let Some(v) = g.max_p {
        cfg.caps.max_p = v;
    }
    if let Some(v) = g.max_a {
        cfg.caps.max_a = v;
    }
    if let Some(v) = g.max_n {
        cfg.caps.max_n = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn check_exact_domain(r: u32, p: u64, q: u64) -> Result<()> {
    if r < 1 || p < 1 || q < 1 {
        return Err(Error::Domain(format!(
            "need r ≥ 1, p ≥ 1, q ≥ 1 (r = {r}, p = {p}, q = {q})"
        )));
    }
    if u64::from(r) * q > p {
        return Err(Error::Domain(format!("q > p/r: q = {q}, p = {p}, r = {r}")));
    }
    Ok(())
}

fn cmd_exact(cfg: &RunConfig, r: u32, p: u64, q: u64, method: Method) -> Result<String> {
    check_exact_domain(r, p, q)?;
    let caps = &cfg.caps;
    Ok(match method {
        Method::Recurrence => stirling(r, p, q, caps)?.to_string(),
        Method::Alekseyev => {
            if r != 2 {
                return Err(Error::Domain(format!(
                    "the Alekseyev sum needs r = 2, got r = {r}"
                )));
            }
            stirling_alekseyev_r2(p, q, caps)?.to_string()
        }
        Method::PartitionSum => {
            stirling_partition_sum(r, q, p - u64::from(r) * q, caps)?.to_string()
        }
        Method::Contour => {
            let est = stirling_contour(r, p, q, &ContourOptions::new(cfg.precision_bits))?;
            format!("log_value = {}", fmt_sci17(&est.log_value))
        }
    })
}

fn cmd_approx(
    cfg: &RunConfig,
    r: u32,
    p: Option<u64>,
    q: u64,
    a: Option<u64>,
    formula: FormulaArg,
) -> Result<String> {
    let rq = u64::from(r) * q;
    let p = match (p, a) {
        (Some(p), None) => p,
        (None, Some(a)) => rq + a,
        (Some(p), Some(a)) if p == rq + a => p,
        (Some(_), Some(_)) => {
            return Err(Error::Domain(
                "--p and --a disagree: need p = rq + a".into(),
            ))
        }
        (None, None) => return Err(Error::Domain("give --p or --a".into())),
    };
    let formula = match formula {
        FormulaArg::Hennecart => Formula::Hennecart,
        FormulaArg::Cd => Formula::Cd,
        FormulaArg::Largeq => Formula::LargeQ,
    };
    let prec = cfg.precision_bits;
    let approx = evaluate(formula, r, p, q, prec)?;
    let mut out = format!("log_value = {}", fmt_sci17(&approx.log_value));
    // exact value when one of the exact routes fits the caps
    let exact = if p <= cfg.caps.max_p {
        Some(stirling(r, p, q, &cfg.caps)?)
    } else if p - rq <= cfg.caps.max_a {
        Some(stirling_partition_sum(r, q, p - rq, &cfg.caps)?)
    } else {
        None
    };
    if let Some(exact) = exact {
        let rel = relative_error(&approx.log_value, &exact.ln(prec)?);
        out.push_str(&format!("\nrel_err = {}", fmt_sci17(&rel)));
        let scaled = rug::Float::with_val(prec, &rel * p);
        out.push_str(&format!("\nscaled_rel_err = {}", fmt_sci17(&scaled)));
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_grid(
    cfg: &RunConfig,
    r: u32,
    p: u64,
    q_from: Option<u64>,
    q_to: Option<u64>,
    format: Option<FormatArg>,
    output: Option<PathBuf>,
) -> Result<String> {
    let format = match format {
        Some(FormatArg::Csv) => ExportFormat::Csv,
        Some(FormatArg::Json) => ExportFormat::Json,
        None => cfg.format,
    };
    let path = output.or_else(|| cfg.output.clone()).ok_or_else(|| {
        Error::Domain("grid needs --output (or output in the config file)".into())
    })?;
    let range = q_from.unwrap_or(1)..=q_to.unwrap_or_else(|| max_interior_q(r, p));
    let opts = GridOptions {
        precision_bits: cfg.precision_bits,
        caps: cfg.caps,
        large_q: true,
    };
    let records = error_grid(r, p, range, &opts)?;
    export(&records, format, &path)?;
    let flagged = records.iter().filter(|r| r.is_flagged()).count();
    Ok(format!(
        "wrote {} rows ({flagged} flagged) to {}",
        records.len(),
        path.display()
    ))
}

fn cmd_verify(cfg: &RunConfig, check: Check) -> Result<ConjectureReport> {
    let prec = cfg.precision_bits;
    match check {
        Check::NonnegCoeffs { r, n } => verify::check_nonneg_coeffs(r, n, cfg.caps.max_n),
        Check::ScaledError { r, p, bound } => {
            let opts = GridOptions {
                precision_bits: prec,
                caps: cfg.caps,
                large_q: false,
            };
            verify::check_scaled_error_bound(r, &p, bound, &opts)
        }
        Check::Cone {
            r,
            beta,
            x_min,
            x_max,
            x_points,
            y_steps,
        } => {
            if !(x_min > 0.0 && x_max >= x_min) {
                return Err(Error::Domain(format!(
                    "need 0 < x-min ≤ x-max, got [{x_min}, {x_max}]"
                )));
            }
            verify::scan_zero_free_cone(
                r,
                beta,
                &verify::log_grid(x_min, x_max, x_points),
                y_steps,
                prec,
            )
        }
        Check::QDerivative {
            r,
            z_min,
            z_max,
            z_points,
        } => {
            if !(z_min > 0.0 && z_max >= z_min) {
                return Err(Error::Domain(format!(
                    "need 0 < z-min ≤ z-max, got [{z_min}, {z_max}]"
                )));
            }
            verify::check_q_derivative_bounds(&r, &verify::log_grid(z_min, z_max, z_points), prec)
        }
    }
}

fn write_json(value: &Value, output: Option<PathBuf>) -> Result<String> {
    let text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    match output {
        Some(path) => {
            std::fs::write(&path, format!("{text}\n")).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            Ok(format!("wrote report to {}", path.display()))
        }
        None => Ok(text),
    }
}

fn run(cli: Cli) -> Result<String> {
    let cfg = run_config(&cli.global)?;
    if cfg.parallelism > 0 {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.parallelism)
            .build_global();
    }
    match cli.command {
        Command::Exact { r, p, q, method } => cmd_exact(&cfg, r, p, q, method),
        Command::Approx {
            r,
            p,
            q,
            a,
            formula,
        } => cmd_approx(&cfg, r, p, q, a, formula),
        Command::Grid {
            r,
            p,
            q_from,
            q_to,
            format,
            output,
        } => cmd_grid(&cfg, r, p, q_from, q_to, format, output),
        Command::Verify { check, output } => {
            write_json(&cmd_verify(&cfg, check)?.to_json(), output)
        }
        Command::Selftest => selftest::run(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
