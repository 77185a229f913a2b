//! Data of the equation `sigma_k(chi(z, u) I + u_{z zbar}) = psi(z, Du, u)`.

use serde::{Deserialize, Serialize};

use super::grid::TorusField;
use super::state::GridState;
use super::spectral::Spectral;
use crate::error::{Error, Result};

/// `chi = max(c0 + c1 u, epsilon)` times the flat metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiModel {
    pub c0: f64,
    #[serde(default)]
    pub c1: f64,
    pub epsilon: f64,
}

impl ChiModel {
    pub fn constant(c0: f64, epsilon: f64) -> Self {
        Self { c0, c1: 0.0, epsilon }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.c0.is_finite() && self.c1.is_finite()) {
            return Err(Error::Config(format!("chi needs epsilon > 0, got {}", self.epsilon)));
        }
        if self.c0 < self.epsilon {
            return Err(Error::Config(format!(
                "chi needs c0 >= epsilon, got c0 = {}, epsilon = {}",
                self.c0, self.epsilon
            )));
        }
        Ok(())
    }

    pub fn value(&self, u: f64) -> f64 {
        (self.c0 + self.c1 * u).max(self.epsilon)
    }

    /// `d chi / d u`, zero where the clamp is active.
    pub fn slope(&self, u: f64) -> f64 {
        if self.c0 + self.c1 * u > self.epsilon {
            self.c1
        } else {
            0.0
        }
    }
}

/// `psi(z, v, x) = P(z) + beta (|v|^2 - q(z)) + gamma (x - r(z))`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsModel {
    pub p: TorusField,
    pub beta: f64,
    pub gamma: f64,
    pub q: TorusField,
    pub r: TorusField,
}

impl RhsModel {
    /// `psi = p` with no dependence on `Du` or `u`.
    pub fn constant(grid: super::grid::TorusGrid, p: f64) -> Self {
        Self {
            p: TorusField::constant(grid, p),
            beta: 0.0,
            gamma: 0.0,
            q: TorusField::zeros(grid),
            r: TorusField::zeros(grid),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.p.grid();
        if self.q.grid() != g || self.r.grid() != g {
            return Err(Error::Config("rhs fields live on different grids".into()));
        }
        if !(self.gamma >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("rhs needs gamma >= 0, got {}", self.gamma)));
        }
        Ok(())
    }

    pub fn psi_at(&self, p: usize, du_sq: f64, u: f64) -> f64 {
        self.p.values()[p] + self.beta * (du_sq - self.q.values()[p]) + self.gamma * (u - self.r.values()[p])
    }
}

/// Right-hand side for which `u_star` is an exact solution of the discrete
/// equation: `P = sigma_k(g*)`, `q = |Du*|^2`, `r = u*`.
pub fn manufacture(u_star: &TorusField, chi: &ChiModel, k: usize, beta: f64, gamma: f64) -> Result<RhsModel> {
    chi.validate()?;
    let spectral = Spectral::new(*u_star.grid());
    let state = GridState::compute(&spectral, u_star, chi, k, super::DEFAULT_CONE_MARGIN)?;
    let grid = *u_star.grid();
    let rhs = RhsModel {
        p: TorusField::new(grid, state.sigma_k.clone())?,
        beta,
        gamma,
        q: TorusField::new(grid, state.du_sq.clone())?,
        r: u_star.clone(),
    };
    rhs.validate()?;
    Ok(rhs)
}
