//! Configuration files. Every field is optional in JSON and falls back to
//! the defaults below; command-line flags are applied on top afterwards.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use gradgp::bayesopt::BoConfig;
use gradgp::conditioning::{ConditioningPolicy, Method, NuggetRule};
use gradgp::gp::OptConfig;
use gradgp::kernels::KernelSpec;

use crate::error::{io_error, CliError, CliResult};

fn check_cond_max(cond_max: f64) -> CliResult<()> {
    if cond_max > 1.0 && cond_max.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("cond_max must be finite and exceed 1, got {cond_max}")))
    }
}

fn check_kernel(kernel: &KernelSpec) -> CliResult<()> {
    KernelSpec::new(kernel.family, kernel.alpha)?;
    Ok(())
}

/// A log-spaced axis of the length-scale grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for GridAxis {
    fn default() -> Self {
        Self { min: 1e-2, max: 1e2, count: 50 }
    }
}

impl GridAxis {
    pub fn values(&self) -> CliResult<Vec<f64>> {
        Ok(gradgp::gp::log_grid(self.min, self.max, self.count)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Dataset CSV; the bundled 10-point Rosenbrock set when absent.
    pub data: Option<PathBuf>,
    pub kernel: KernelSpec,
    pub cond_max: f64,
    /// Rule for the default nugget; the kernel's default rule when absent.
    pub nugget_rule: Option<NuggetRule>,
    /// Explicit nugget for the value-only, gradient-enhanced and preconditioned matrices.
    pub eta: Option<f64>,
    pub gamma1: GridAxis,
    pub gamma2: GridAxis,
    /// Also report κ of the isotropically rescaled matrix.
    pub rescale: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            data: None,
            kernel: KernelSpec::gaussian(),
            cond_max: 1e10,
            nugget_rule: None,
            eta: None,
            gamma1: GridAxis::default(),
            gamma2: GridAxis::default(),
            rescale: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_cond_max(self.cond_max)?;
        check_kernel(&self.kernel)?;
        self.gamma1.values()?;
        self.gamma2.values()?;
        if let Some(eta) = self.eta {
            if !(eta >= 0.0 && eta.is_finite()) {
                return Err(CliError::Usage(format!("eta must be finite and non-negative, got {eta}")));
            }
        }
        Ok(())
    }

    pub fn policy(&self) -> CliResult<ConditioningPolicy> {
        let rule = self.nugget_rule.unwrap_or_else(|| NuggetRule::default_for(&self.kernel));
        Ok(ConditioningPolicy::new(Method::Precondition, self.cond_max, rule)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub draws: usize,
    pub seed: u64,
    pub cond_max: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self { draws: 200, seed: 0, cond_max: 1e10 }
    }
}

impl BoundsConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_cond_max(self.cond_max)?;
        if self.draws == 0 {
            return Err(CliError::Usage("draws must be at least 1".into()));
        }
        Ok(())
    }
}

/// Built-in datasets for `fit`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Demo {
    /// `sin(x) + sin(10x/3)` at x = 3.5, 4.5, 5.5, 6.5.
    Sin1d,
    /// Rosenbrock on the 10-point set clustered around (1, 1).
    Dataset2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub data: Option<PathBuf>,
    pub demo: Option<Demo>,
    pub kernel: KernelSpec,
    pub method: Method,
    pub cond_max: f64,
    pub nugget_rule: Option<NuggetRule>,
    /// Replaces the rule nugget, e.g. a tiny value for interpolation checks.
    pub nugget: Option<f64>,
    pub opt: OptConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            data: None,
            demo: None,
            kernel: KernelSpec::gaussian(),
            method: Method::Precondition,
            cond_max: 1e10,
            nugget_rule: None,
            nugget: None,
            opt: OptConfig::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> CliResult<()> {
        check_cond_max(self.cond_max)?;
        check_kernel(&self.kernel)?;
        match (&self.data, &self.demo) {
            (Some(_), Some(_)) => Err(CliError::Usage("give either data or demo, not both".into())),
            (None, None) => Err(CliError::Usage("no dataset: pass --data <csv> or --demo <name>".into())),
            _ => {
                self.policy()?;
                Ok(())
            }
        }
    }

    pub fn policy(&self) -> CliResult<ConditioningPolicy> {
        let rule = self.nugget_rule.unwrap_or_else(|| NuggetRule::default_for(&self.kernel));
        let policy = ConditioningPolicy::new(self.method, self.cond_max, rule)?;
        Ok(match self.nugget {
            Some(eta) => policy.with_nugget_override(eta)?,
            None => policy,
        })
    }
}

fn parse_json<T: DeserializeOwned>(text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
}

pub fn parse_sweep_config(text: &str) -> CliResult<SweepConfig> {
    let c: SweepConfig = parse_json(text)?;
    c.validate()?;
    Ok(c)
}

pub fn parse_bounds_config(text: &str) -> CliResult<BoundsConfig> {
    let c: BoundsConfig = parse_json(text)?;
    c.validate()?;
    Ok(c)
}

pub fn parse_fit_config(text: &str) -> CliResult<FitConfig> {
    let c: FitConfig = parse_json(text)?;
    check_cond_max(c.cond_max)?;
    check_kernel(&c.kernel)?;
    Ok(c)
}

pub fn parse_bo_config(text: &str) -> CliResult<BoConfig> {
    let c: BoConfig = parse_json(text)?;
    c.validate()?;
    Ok(c)
}

/// Reads a config file, or returns the defaults when no path is given.
pub fn load<T: Default>(path: Option<&Path>, parse: fn(&str) -> CliResult<T>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            parse(&text).map_err(|e| match e {
                CliError::Usage(m) => CliError::Usage(format!("{}: {m}", p.display())),
                other => other,
            })
        }
    }
}
