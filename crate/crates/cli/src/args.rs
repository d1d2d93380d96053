//! Command-line flags. Each `resolve` layers flags over the config file
//! over the defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use gradgp::bayesopt::BoConfig;
use gradgp::conditioning::{Method, NuggetRule};
use gradgp::kernels::{KernelFamily, KernelSpec};
use gradgp::problems::Problem;

use crate::config::{self, BoundsConfig, Demo, FitConfig, SweepConfig};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "gradgp", version, about = "Gradient-enhanced Gaussian processes with bounded condition numbers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Condition numbers and log-likelihoods over a 2-D length-scale grid.
    Sweep(SweepArgs),
    /// Randomized check of the preconditioned condition-number bound.
    ValidateBounds(BoundsArgs),
    /// Fit hyperparameters to a dataset.
    Fit(FitArgs),
    /// Run Bayesian optimization on a test problem.
    Bo(BoArgs),
}

#[derive(Debug, Args, Default)]
pub struct KernelArgs {
    /// gaussian, matern52 or ratquad.
    #[arg(long)]
    pub kernel: Option<KernelFamily>,
    /// Rational-quadratic shape parameter.
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl KernelArgs {
    fn apply(&self, spec: &mut KernelSpec) {
        if let Some(f) = self.kernel {
            spec.family = f;
        }
        if let Some(a) = self.alpha {
            spec.alpha = a;
        }
    }
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset CSV with header x1,x2,f,g1,g2.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub cond_max: Option<f64>,
    /// trace or gershgorin.
    #[arg(long)]
    pub nugget_rule: Option<NuggetRule>,
    /// Explicit nugget instead of the rule value.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Smallest γ on both axes.
    #[arg(long)]
    pub grid_min: Option<f64>,
    /// Largest γ on both axes.
    #[arg(long)]
    pub grid_max: Option<f64>,
    /// Points per axis.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Skip the rescaled-matrix column.
    #[arg(long)]
    pub no_rescale: bool,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

impl SweepArgs {
    pub fn resolve(&self) -> CliResult<SweepConfig> {
        let mut c = config::load(self.config.as_deref(), config::parse_sweep_config)?;
        if self.data.is_some() {
            c.data = self.data.clone();
        }
        self.kernel.apply(&mut c.kernel);
        set(&mut c.cond_max, self.cond_max);
        if self.nugget_rule.is_some() {
            c.nugget_rule = self.nugget_rule;
        }
        if self.eta.is_some() {
            c.eta = self.eta;
        }
        for axis in [&mut c.gamma1, &mut c.gamma2] {
            set(&mut axis.min, self.grid_min);
            set(&mut axis.max, self.grid_max);
            set(&mut axis.count, self.grid_n);
        }
        if self.no_rescale {
            c.rescale = false;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cond_max: Option<f64>,
    /// Report JSON; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl BoundsArgs {
    pub fn resolve(&self) -> CliResult<BoundsConfig> {
        let mut c = config::load(self.config.as_deref(), config::parse_bounds_config)?;
        set(&mut c.draws, self.draws);
        set(&mut c.seed, self.seed);
        set(&mut c.cond_max, self.cond_max);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset CSV with header x1,..,xd,f,g1,..,gd.
    #[arg(long, conflicts_with = "demo")]
    pub data: Option<PathBuf>,
    /// Built-in dataset.
    #[arg(long, value_enum)]
    pub demo: Option<Demo>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// baseline, rescale or precondition.
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub cond_max: Option<f64>,
    #[arg(long)]
    pub nugget_rule: Option<NuggetRule>,
    /// Fixed nugget replacing the rule value.
    #[arg(long)]
    pub nugget: Option<f64>,
    /// Seed of the multi-start design.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of Latin-hypercube starts.
    #[arg(long)]
    pub lhs_starts: Option<usize>,
    /// Result JSON; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl FitArgs {
    pub fn resolve(&self) -> CliResult<FitConfig> {
        let mut c = config::load(self.config.as_deref(), config::parse_fit_config)?;
        if self.data.is_some() {
            c.data = self.data.clone();
            c.demo = None;
        }
        if self.demo.is_some() {
            c.demo = self.demo;
            c.data = None;
        }
        self.kernel.apply(&mut c.kernel);
        set(&mut c.method, self.method);
        set(&mut c.cond_max, self.cond_max);
        if self.nugget_rule.is_some() {
            c.nugget_rule = self.nugget_rule;
        }
        if self.nugget.is_some() {
            c.nugget = self.nugget;
        }
        set(&mut c.opt.seed, self.seed);
        set(&mut c.opt.lhs_starts, self.lhs_starts);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct BoArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// rosenbrock or sin1d.
    #[arg(long)]
    pub problem: Option<Problem>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub method: Option<Method>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Total number of objective evaluations.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cond_max: Option<f64>,
    #[arg(long)]
    pub nugget_rule: Option<NuggetRule>,
    /// Lower bound applied to every coordinate.
    #[arg(long, allow_hyphen_values = true)]
    pub lower: Option<f64>,
    /// Upper bound applied to every coordinate.
    #[arg(long, allow_hyphen_values = true)]
    pub upper: Option<f64>,
    /// Exploration weight of the acquisition.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Size of the initial design.
    #[arg(long)]
    pub initial_points: Option<usize>,
    /// Trace CSV.
    #[arg(long)]
    pub out: PathBuf,
}

impl BoArgs {
    pub fn resolve(&self) -> CliResult<BoConfig> {
        let mut c = config::load(self.config.as_deref(), config::parse_bo_config)?;
        set(&mut c.problem, self.problem);
        if let Some(d) = self.dim {
            // per-coordinate bounds that are all equal follow the new dimension
            for b in [&mut c.lower, &mut c.upper] {
                if b.len() != d && !b.is_empty() && b.iter().all(|v| *v == b[0]) {
                    *b = vec![b[0]; d];
                }
            }
            c.dim = d;
        }
        set(&mut c.method, self.method);
        self.kernel.apply(&mut c.kernel);
        set(&mut c.budget, self.budget);
        set(&mut c.seed, self.seed);
        set(&mut c.cond_max, self.cond_max);
        if self.nugget_rule.is_some() {
            c.nugget_rule = self.nugget_rule;
        }
        if let Some(l) = self.lower {
            c.lower = vec![l; c.dim];
        }
        if let Some(u) = self.upper {
            c.upper = vec![u; c.dim];
        }
        set(&mut c.omega, self.omega);
        if self.initial_points.is_some() {
            c.initial_points = self.initial_points;
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("gradgp").chain(args.iter().copied())).unwrap().command
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bo.json");
        std::fs::write(&path, r#"{"budget": 30, "seed": 4, "method": "baseline", "lower": [-3, -3], "upper": [3, 3]}"#)
            .unwrap();
        let Command::Bo(a) = parse(&["bo", "--config", path.to_str().unwrap(), "--budget", "12", "--dim", "3", "--out", "t.csv"])
        else {
            panic!()
        };
        let c = a.resolve().unwrap();
        assert_eq!(c.budget, 12);
        assert_eq!(c.seed, 4);
        assert_eq!(c.method, Method::Baseline);
        assert_eq!(c.lower, vec![-3.0; 3]);
        assert_eq!(c.dim, 3);
    }

    #[test]
    fn sweep_grid_flags_apply_to_both_axes() {
        let Command::Sweep(a) = parse(&["sweep", "--grid-n", "5", "--grid-max", "10", "--kernel", "matern52", "--out", "s.csv"])
        else {
            panic!()
        };
        let c = a.resolve().unwrap();
        assert_eq!((c.gamma1.count, c.gamma2.count), (5, 5));
        assert_eq!((c.gamma1.max, c.gamma2.max), (10.0, 10.0));
        assert_eq!(c.kernel, KernelSpec::matern52());
    }

    #[test]
    fn fit_demo_flag_replaces_config_data() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fit.json");
        std::fs::write(&path, r#"{"data": "missing.csv"}"#).unwrap();
        let Command::Fit(a) = parse(&["fit", "--config", path.to_str().unwrap(), "--demo", "sin1d"]) else { panic!() };
        let c = a.resolve().unwrap();
        assert_eq!((c.demo, c.data), (Some(Demo::Sin1d), None));
    }

    #[test]
    fn bad_values_rejected() {
        assert!(Cli::try_parse_from(["gradgp", "fit", "--method", "magic"]).is_err());
        assert!(Cli::try_parse_from(["gradgp", "sweep", "--kernel", "cubic", "--out", "x"]).is_err());
        let Command::ValidateBounds(a) = parse(&["validate-bounds", "--cond-max", "1"]) else { panic!() };
        assert_eq!(a.resolve().unwrap_err().exit_code(), 2);
    }
}
