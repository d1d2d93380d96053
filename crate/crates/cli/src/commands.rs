use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use gradgp::bayesopt::{bo_run, BoTrace};
use gradgp::conditioning::{bound_draw, BoundReport, Method};
use gradgp::gp::{argmax_cell, fit, sweep_cell, FitReport, SweepCell, SweepSetup};
use gradgp::kernels::{KernelSpec, LengthScales};
use gradgp::problems::{reference_design_2d, read_dataset_csv, sin_demo_points, EvaluationSet, Problem};

use crate::args::{BoArgs, BoundsArgs, Command, FitArgs, SweepArgs};
use crate::config::Demo;
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::output::{csv_bytes, sci, to_json_bytes};

pub fn run(command: &Command) -> CliResult<()> {
    match command {
        Command::Sweep(a) => sweep(a),
        Command::ValidateBounds(a) => validate_bounds(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Bo(a) => bo(a),
    }
}

fn read_data(path: &Path) -> CliResult<EvaluationSet> {
    if !path.exists() {
        return Err(CliError::Usage(format!("{}: no such file", path.display())));
    }
    Ok(read_dataset_csv(path)?)
}

fn sidecar(out: &Path, suffix: &str) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    s.into()
}

pub const SWEEP_COLUMNS: [&str; 8] = [
    "gamma1",
    "gamma2",
    "log10_kappa_baseline_gradfree",
    "log10_kappa_baseline_grad",
    "log10_kappa_precon",
    "log10_kappa_rescale",
    "lnl_gradfree",
    "lnl_grad",
];

#[derive(Serialize)]
struct Star<'a> {
    gamma: &'a [f64],
    lnl: f64,
    log10_kappa: f64,
}

#[derive(Serialize)]
struct GradStar<'a> {
    gamma: &'a [f64],
    lnl: f64,
    log10_kappa_baseline_grad: f64,
    log10_kappa_precon: f64,
    log10_kappa_rescale: Option<f64>,
}

/// lnL-maximizing grid cells, i.e. the star markers of the sweep plots.
#[derive(Serialize)]
struct Stars<'a> {
    eta: f64,
    cond_max: f64,
    /// `(τ, η)` of the rescaled column, if any.
    rescale: Option<(f64, f64)>,
    gradfree: Option<Star<'a>>,
    grad: Option<GradStar<'a>>,
}

pub fn sweep_cells(es: &EvaluationSet, setup: &SweepSetup, g1: &[f64], g2: &[f64]) -> CliResult<Vec<SweepCell>> {
    if es.dim() != 2 {
        return Err(CliError::Usage(format!("a 2-D sweep needs 2-D data, got d = {}", es.dim())));
    }
    let pairs: Vec<(f64, f64)> = g1.iter().flat_map(|&a| g2.iter().map(move |&b| (a, b))).collect();
    let cells = pairs
        .par_iter()
        .map(|&(a, b)| sweep_cell(es, setup, &LengthScales::new(vec![a, b])?))
        .collect::<gradgp::Result<Vec<_>>>()?;
    Ok(cells)
}

fn sweep(args: &SweepArgs) -> CliResult<()> {
    let cfg = args.resolve()?;
    let es = match &cfg.data {
        Some(p) => read_data(p)?,
        None => EvaluationSet::from_problem(Problem::Rosenbrock, reference_design_2d())?,
    };
    if es.dim() != 2 {
        return Err(CliError::Usage(format!("a 2-D sweep needs 2-D data, got d = {}", es.dim())));
    }
    let eta = match cfg.eta {
        Some(e) => e,
        None => cfg.policy()?.rule_nugget(es.n_points(), es.dim())?,
    };
    let mut setup = SweepSetup { spec: cfg.kernel, eta, rescale: None };
    if cfg.rescale {
        setup = setup.with_rescale(&es, cfg.cond_max)?;
    }
    let cells = sweep_cells(&es, &setup, &cfg.gamma1.values()?, &cfg.gamma2.values()?)?;

    let rows = cells.iter().map(|c| {
        vec![
            sci(c.gamma[0]),
            sci(c.gamma[1]),
            sci(c.log10_kappa_baseline_gradfree),
            sci(c.log10_kappa_baseline_grad),
            sci(c.log10_kappa_precon),
            c.log10_kappa_rescale.map(sci).unwrap_or_default(),
            sci(c.lnl_gradfree),
            sci(c.lnl_grad),
        ]
    });
    let csv = csv_bytes(&SWEEP_COLUMNS, rows);
    let free = argmax_cell(&cells, |c| c.lnl_gradfree);
    let grad = argmax_cell(&cells, |c| c.lnl_grad);
    let stars = Stars {
        eta,
        cond_max: cfg.cond_max,
        rescale: setup.rescale,
        gradfree: free.map(|c| Star { gamma: &c.gamma, lnl: c.lnl_gradfree, log10_kappa: c.log10_kappa_baseline_gradfree }),
        grad: grad.map(|c| GradStar {
            gamma: &c.gamma,
            lnl: c.lnl_grad,
            log10_kappa_baseline_grad: c.log10_kappa_baseline_grad,
            log10_kappa_precon: c.log10_kappa_precon,
            log10_kappa_rescale: c.log10_kappa_rescale,
        }),
    };

    let mut manifest = RunManifest::new("sweep", &cfg, None);
    manifest.emit(&args.out, &csv)?;
    manifest.emit(&sidecar(&args.out, ".stars.json"), &to_json_bytes(&stars))?;
    manifest.write(&args.out)?;
    let max = |f: fn(&SweepCell) -> f64| cells.iter().map(f).fold(f64::MIN, f64::max);
    println!(
        "{} cells, eta {eta:e}; max log10 kappa: gradfree {:.2}, grad {:.2}, precon {:.2}",
        cells.len(),
        max(|c| c.log10_kappa_baseline_gradfree),
        max(|c| c.log10_kappa_baseline_grad),
        max(|c| c.log10_kappa_precon)
    );
    Ok(())
}

pub fn bound_report(draws: usize, seed: u64, cond_max: f64) -> CliResult<BoundReport> {
    let outcomes = (0..draws as u64)
        .into_par_iter()
        .map(|i| bound_draw(seed, i, cond_max))
        .collect::<gradgp::Result<Vec<_>>>()?;
    Ok(BoundReport::from_outcomes(&outcomes, seed, cond_max))
}

fn validate_bounds(args: &BoundsArgs) -> CliResult<()> {
    let cfg = args.resolve()?;
    let report = bound_report(cfg.draws, cfg.seed, cfg.cond_max)?;
    let bytes = to_json_bytes(&report);
    match &args.out {
        Some(out) => {
            let mut manifest = RunManifest::new("validate-bounds", &cfg, Some(cfg.seed));
            manifest.emit(out, &bytes)?;
            manifest.write(out)?;
            println!("{} draws, {} violations", report.draws, report.violations);
        }
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    if report.violations > 0 {
        return Err(CliError::Failed(format!("{} of {} draws violate the bound", report.violations, report.draws)));
    }
    Ok(())
}

#[derive(Serialize)]
struct FitOutput {
    method: Method,
    kernel: KernelSpec,
    /// Length scales in the coordinates of the input data.
    gamma: Vec<f64>,
    beta: f64,
    sigma2: f64,
    eta: f64,
    #[serde(rename = "lnL")]
    lnl: f64,
    kappa: f64,
    report: FitReport,
}

fn fit_cmd(args: &FitArgs) -> CliResult<()> {
    let cfg = args.resolve()?;
    let es = match (&cfg.data, cfg.demo) {
        (Some(p), _) => read_data(p)?,
        (None, Some(Demo::Sin1d)) => EvaluationSet::from_problem(Problem::Sin1d, sin_demo_points())?,
        (None, Some(Demo::Dataset2d)) => EvaluationSet::from_problem(Problem::Rosenbrock, reference_design_2d())?,
        (None, None) => unreachable!("validated"),
    };
    let (model, report) = fit(&es, &cfg.kernel, &cfg.policy()?, &cfg.opt)?;
    let h = model.hyperparameters();
    let out = FitOutput {
        method: cfg.method,
        kernel: cfg.kernel,
        gamma: model.gamma_original(),
        beta: h.beta,
        sigma2: h.sigma2,
        eta: h.eta,
        lnl: model.lnl(),
        kappa: model.kappa(),
        report,
    };
    let bytes = to_json_bytes(&out);
    match &args.out {
        Some(path) => {
            let mut manifest = RunManifest::new("fit", &cfg, Some(cfg.opt.seed));
            manifest.emit(path, &bytes)?;
            manifest.write(path)?;
            println!("gamma {:?}, lnL {:e}", out.gamma, out.lnl);
        }
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    Ok(())
}

pub const TRACE_COLUMNS: [&str; 6] = ["iter", "f", "opt_norm", "best_opt", "lnl", "kappa"];

pub fn trace_csv(trace: &BoTrace) -> Vec<u8> {
    let rows = trace.records.iter().map(|r| {
        vec![r.iter.to_string(), sci(r.f), sci(r.opt_norm), sci(r.best_opt), sci(r.lnl), sci(r.kappa)]
    });
    csv_bytes(&TRACE_COLUMNS, rows)
}

fn bo(args: &BoArgs) -> CliResult<()> {
    let cfg = args.resolve()?;
    let trace = bo_run(&cfg)?;
    let mut manifest = RunManifest::new("bo", &cfg, Some(cfg.seed));
    manifest.emit(&args.out, &trace_csv(&trace))?;
    manifest.write(&args.out)?;
    let fit_errors = trace.records.iter().filter(|r| r.fit_error.is_some()).count();
    println!(
        "{} evaluations, best optimality {:e}, fit errors {fit_errors}",
        trace.records.len(),
        trace.best_optimality()
    );
    Ok(())
}
