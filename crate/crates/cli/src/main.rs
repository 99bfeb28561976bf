use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fwkit::experiment::{self, Case, CheckResult, ExperimentReport, Overrides, OUT_DIR_ENV};
use fwkit::{validate_open_loop, Problem, StepsizeRule};

#[derive(Parser)]
#[command(name = "fwkit", version, about = "Frank-Wolfe experiment runner")]
struct Cli {
    /// Output directory for traces, bound curves and summaries.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "out")]
    out: PathBuf,
    /// Override the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override `stop.max_iter`.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a spec file and evaluate its checks.
    Solve { spec: PathBuf },
    /// Run a canned reproduction case, or `all`.
    Reproduce { case: String },
    /// Curvature estimate and upper bounds for the problems in a spec file.
    EstimateCurvature {
        spec: PathBuf,
        /// Order σ when the spec has no `curvature` table.
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
    },
    /// Run several specs on one problem and write a wide CSV.
    Compare {
        #[arg(required = true)]
        specs: Vec<PathBuf>,
        #[arg(long, default_value = "compare")]
        label: String,
    },
    /// Check the open-loop conditions of a rule such as `harmonic:2`,
    /// `power:1,0.5` or `dh:0.7`.
    ValidateSchedule {
        rule: String,
        #[arg(long)]
        horizon: usize,
    },
}

fn print_check(name: &str, c: &CheckResult) {
    let tag = if c.passed { "PASS" } else { "FAIL" };
    println!("{tag} {name} {}: measured {:e}, required {:e} ({})", c.kind, c.measured, c.required, c.detail);
}

fn print_report(r: &ExperimentReport) {
    for c in &r.checks {
        print_check(&r.name, c);
    }
    println!(
        "{} {}: {:?} at k = {}, final obj {:e}",
        if r.passed { "ok" } else { "failed" },
        r.name,
        r.trace.termination,
        r.trace.terminal_k,
        r.trace.final_obj
    );
}

fn run(cli: Cli) -> Result<bool> {
    let overrides = Overrides { seed: cli.seed, max_iter: cli.max_iter };
    let load = |path: &PathBuf| -> Result<Vec<experiment::ExperimentSpec>> {
        let specs = experiment::load_specs(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(specs.into_iter().map(|s| s.with_overrides(&overrides)).collect())
    };
    match cli.command {
        Command::Solve { spec } => {
            let mut ok = true;
            for s in load(&spec)? {
                let r = experiment::run_experiment(&s, &cli.out).with_context(|| format!("experiment `{}`", s.name))?;
                print_report(&r);
                ok &= r.passed;
            }
            Ok(ok)
        }
        Command::Reproduce { case } => {
            let cases = if case == "all" { Case::ALL.to_vec() } else { vec![Case::parse(&case)?] };
            let mut ok = true;
            for c in cases {
                let r = experiment::reproduce(c, &cli.out, &overrides)?;
                r.experiments.iter().for_each(print_report);
                println!("{} {}", if r.passed { "PASS" } else { "FAIL" }, c.name());
                ok &= r.passed;
            }
            Ok(ok)
        }
        Command::EstimateCurvature { spec, sigma } => {
            for s in load(&spec)? {
                let problem = Problem::from_spec(&s.problem)?;
                let settings = s.curvature.clone().unwrap_or(experiment::CurvatureSettings {
                    sigma,
                    n_samples: 2000,
                    gamma_grid: None,
                    safety_factor: fwkit::analysis::DEFAULT_SAFETY_FACTOR,
                    value: None,
                });
                let est = experiment::curvature_for(&problem, &settings, s.seed)?;
                println!("{}", serde_json::json!({ "name": s.name, "estimate": est }));
            }
            Ok(true)
        }
        Command::Compare { specs, label } => {
            let mut all = Vec::new();
            for p in &specs {
                all.extend(load(p)?);
            }
            let r = experiment::compare(&all, &cli.out, &label)?;
            r.experiments.iter().for_each(print_report);
            println!("wrote {}", r.csv.display());
            Ok(r.experiments.iter().all(|e| e.passed))
        }
        Command::ValidateSchedule { rule, horizon } => {
            let parsed: StepsizeRule<f64> = rule.parse()?;
            if !parsed.is_open_loop() {
                bail!("`{rule}` is not an open-loop rule");
            }
            let rep = validate_open_loop(&parsed, horizon)?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
            Ok(rep.c1_ok && rep.dh_bounds_ok != Some(false))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
