use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use thetafem::error::{Error, Result};
use thetafem::report::{emit, Format, VariantFilter};
use thetafem::solver::SolverConfig;
use thetafem::study::{make_case, parse_levels, run_study, study_checks, CheckPolicy, RunConfig, RunReport};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Md,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Two,
    Three,
    Both,
}

/// Convergence study of the fractional-step theta scheme for the heat
/// equation on the unit square, with a posteriori error estimators.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Manufactured solution: 1 smooth, 2 fast in time, 3 fast in space.
    #[arg(long, default_value_t = 1)]
    case: u32,

    /// Mesh levels A:B; level L uses h = k = 2^-L.
    #[arg(long, default_value = "3:7")]
    levels: String,

    #[arg(long)]
    alpha1: Option<f64>,

    #[arg(long)]
    alpha2: Option<f64>,

    /// `auto` for 1 - sqrt(2)/2, or a value in (0, 1/3).
    #[arg(long, default_value = "auto")]
    theta: String,

    /// Estimator constant NAME=V with NAME one of c1, c11, C11, C12, C22.
    #[arg(long = "const", value_name = "NAME=V")]
    constants: Vec<String>,

    /// Relative residual tolerance of the linear solver.
    #[arg(long, default_value_t = 1e-12)]
    solver_tol: f64,

    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,

    #[arg(long, default_value = "out")]
    out: PathBuf,

    #[arg(long, value_enum, default_value = "both")]
    variant: VariantArg,

    /// Exit nonzero if any convergence or reliability check fails.
    #[arg(long)]
    check: bool,
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if cli.theta != "auto" {
        cfg.theta = cli
            .theta
            .parse()
            .map_err(|_| Error::Config(format!("theta must be `auto` or a number, got {:?}", cli.theta)))?;
        let a = thetafem::scheme::glowinski_alpha(cfg.theta);
        cfg.alpha1 = a;
        cfg.alpha2 = a;
    }
    cfg.alpha1 = cli.alpha1.unwrap_or(cfg.alpha1);
    cfg.alpha2 = cli.alpha2.unwrap_or(cfg.alpha2);
    for c in &cli.constants {
        let (name, v) = c
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--const expects NAME=V, got {c:?}")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| Error::Config(format!("--const {name}: {v:?} is not a number")))?;
        cfg.constants.set(name, v)?;
    }
    cfg.solver = SolverConfig::with_tolerance(cli.solver_tol)?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = config(cli)?;
    let case = make_case(cli.case)?;
    let levels = parse_levels(&cli.levels)?;
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Md => Format::Markdown,
    };
    let variants = match cli.variant {
        VariantArg::Two => VariantFilter::Two,
        VariantArg::Three => VariantFilter::Three,
        VariantArg::Both => VariantFilter::Both,
    };

    let mut done: Vec<RunReport> = Vec::new();
    let result = run_study(&case, levels, &cfg, |r| {
        eprintln!(
            "case {} level {}: max error {:.4e}, e_total {:.4e}, bound {:.4e} / {:.4e}",
            r.case_id,
            r.level,
            r.max_error,
            r.e_total,
            r.final_row().bound_two,
            r.final_row().bound_three
        );
        done.push(r.clone());
        emit(&done, format, variants, &cli.out)?;
        Ok(())
    });
    let runs = match result {
        Ok(runs) => runs,
        Err(e) => {
            if !done.is_empty() {
                eprintln!("partial results for {} level(s) written to {}", done.len(), cli.out.display());
            }
            return Err(e);
        }
    };
    emit(&runs, format, variants, &cli.out)?;

    if !cli.check {
        return Ok(true);
    }
    let checks = study_checks(&runs, &CheckPolicy::for_case(case.id));
    for c in &checks {
        println!("{c}");
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
