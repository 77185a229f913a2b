//! JSON problem configuration for the solve and monitor commands.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::exact::{manufacture_exact, CosineProduct, ExactSolution, ExpCosine};
use super::grid::{TorusField, TorusGrid};
use super::model::{ChiModel, RhsModel};
use super::newton::NewtonOptions;
use crate::error::{Error, Result};
use crate::harness::EstimateParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsMode {
    /// `psi` built so that a known `u*` is the solution.
    Manufactured,
    /// `psi = p + beta |Du|^2 + gamma u` with constant `p`.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `a cos(2 pi f x_1) cos(2 pi f y_n)`.
    #[default]
    Cosine,
    /// `a exp(cos(2 pi x_1))`.
    ExpCosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    #[default]
    Zero,
    /// The exact solution of a manufactured problem.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsConfig {
    pub mode: RhsMode,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default = "one")]
    pub frequency: usize,
    /// Constant `P` of the explicit mode; defaults to `sigma_k(c0 I)`.
    #[serde(default)]
    pub p: Option<f64>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    #[serde(default = "default_m")]
    pub m: u32,
    #[serde(rename = "M", default = "unit")]
    pub big_m: f64,
    #[serde(rename = "Ncoef", default = "unit")]
    pub ncoef: f64,
}

fn default_m() -> u32 {
    7
}

fn unit() -> f64 {
    1.0
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self { m: 7, big_m: 1.0, ncoef: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "N")]
    pub points_per_axis: usize,
    pub chi: ChiModel,
    pub rhs: RhsConfig,
    #[serde(default)]
    pub newton: NewtonOptions,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub initial: InitialGuess,
    #[serde(default)]
    pub seed: u64,
}

/// A configured problem ready for [`super::newton_solve`].
pub struct Problem {
    pub grid: TorusGrid,
    pub k: usize,
    pub chi: ChiModel,
    pub rhs: RhsModel,
    pub u0: TorusField,
    pub exact: Option<Box<dyn ExactSolution>>,
    pub options: NewtonOptions,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.n, self.points_per_axis)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        super::state::check_order(self.n, self.k)?;
        self.chi.validate()?;
        let rhs = &self.rhs;
        if !(rhs.gamma >= 0.0 && rhs.beta.is_finite() && rhs.amplitude.is_finite()) {
            return Err(Error::Config("rhs needs finite beta, amplitude and gamma >= 0".into()));
        }
        if rhs.gamma == 0.0 && !self.newton.mean_zero_gauge {
            return Err(Error::Config("gamma = 0 needs newton.mean_zero_gauge".into()));
        }
        if rhs.mode == RhsMode::Explicit && rhs.p.is_some_and(|p| p <= 0.0) {
            return Err(Error::Config("explicit rhs needs p > 0".into()));
        }
        if rhs.mode == RhsMode::Explicit && self.initial == InitialGuess::Exact {
            return Err(Error::Config("an explicit rhs has no exact solution".into()));
        }
        if rhs.frequency == 0 {
            return Err(Error::Config("frequency must be positive".into()));
        }
        if !(self.newton.tol > 0.0 && self.newton.max_iter > 0) {
            return Err(Error::Config("newton needs tol > 0 and max_iter > 0".into()));
        }
        if self.monitor.m < 1 {
            return Err(Error::Config("monitor needs m >= 1".into()));
        }
        Ok(())
    }

    pub fn exact_solution(&self) -> Option<Box<dyn ExactSolution>> {
        if self.rhs.mode != RhsMode::Manufactured {
            return None;
        }
        Some(match self.rhs.profile {
            Profile::Cosine => Box::new(CosineProduct {
                n: self.n,
                amplitude: self.rhs.amplitude,
                frequency: self.rhs.frequency,
            }),
            Profile::ExpCosine => Box::new(ExpCosine { n: self.n, amplitude: self.rhs.amplitude }),
        })
    }

    pub fn monitor_params(&self) -> EstimateParams {
        EstimateParams {
            m: self.monitor.m,
            big_m: self.monitor.big_m,
            big_n: self.monitor.ncoef,
            epsilon: self.chi.epsilon,
            ..EstimateParams::default()
        }
    }

    /// Builds the right-hand side and initial guess. Manufactured data outside
    /// the cone fails with [`Error::ConeViolation`].
    pub fn build(&self) -> Result<Problem> {
        self.validate()?;
        let grid = self.grid()?;
        let exact = self.exact_solution();
        let rhs = match &exact {
            Some(e) => manufacture_exact(e.as_ref(), grid, &self.chi, self.k, self.rhs.beta, self.rhs.gamma)?,
            None => {
                let p = self.rhs.p.unwrap_or(binomial(self.n, self.k) * self.chi.c0.powi(self.k as i32));
                RhsModel {
                    beta: self.rhs.beta,
                    gamma: self.rhs.gamma,
                    ..RhsModel::constant(grid, p)
                }
            }
        };
        let u0 = match (&exact, self.initial) {
            (Some(e), InitialGuess::Exact) => e.sample(grid)?,
            _ => TorusField::zeros(grid),
        };
        let options = NewtonOptions {
            monitor: self.monitor_params(),
            ..self.newton.clone()
        };
        Ok(Problem {
            grid,
            k: self.k,
            chi: self.chi,
            rhs,
            u0,
            exact,
            options,
        })
    }
}
