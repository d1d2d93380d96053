use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rosenbrock variant with coupling coefficient 10:
/// `Σ 10(x_{i+1} − x_i²)² + (1 − x_i)²`.
pub fn rosenbrock(x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let d = x.len();
    if d < 2 {
        return Err(Error::InvalidDimension(format!("rosenbrock needs d >= 2, got {d}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("rosenbrock argument must be finite".into()));
    }
    let mut value = 0.0;
    let mut grad = vec![0.0; d];
    for i in 0..d - 1 {
        let t = x[i + 1] - x[i] * x[i];
        let u = 1.0 - x[i];
        value += 10.0 * t * t + u * u;
        grad[i] += -40.0 * x[i] * t - 2.0 * u;
        grad[i + 1] += 20.0 * t;
    }
    Ok((value, grad))
}

/// `sin(x) + sin(10x/3)` and its derivative.
pub fn sin_demo_1d(x: f64) -> (f64, f64) {
    let w = 10.0 / 3.0;
    (x.sin() + (w * x).sin(), x.cos() + w * (w * x).cos())
}

/// Named test problems addressable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Rosenbrock,
    Sin1d,
}

impl Problem {
    pub fn evaluate(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        match self {
            Problem::Rosenbrock => rosenbrock(x),
            Problem::Sin1d => {
                if x.len() != 1 {
                    return Err(Error::InvalidDimension(format!("sin1d is one-dimensional, got d = {}", x.len())));
                }
                let (f, g) = sin_demo_1d(x[0]);
                Ok((f, vec![g]))
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::Rosenbrock => "rosenbrock",
            Problem::Sin1d => "sin1d",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rosenbrock" => Ok(Problem::Rosenbrock),
            "sin1d" => Ok(Problem::Sin1d),
            other => Err(Error::InvalidInput(format!("unknown problem '{other}'"))),
        }
    }
}
