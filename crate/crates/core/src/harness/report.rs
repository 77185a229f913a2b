use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::data::{EstimateParams, ThirdOrderData};
use crate::error::Result;

/// Per-sample tolerance for randomized sweeps, in units of [`tolerance_scale`].
pub const SAMPLE_TOL: f64 = 1e-9;
/// Tolerance for adversarial searches and the pinched-gap lemma.
pub const SEARCH_TOL: f64 = 1e-8;

/// `(1 + |lambda|_inf)^{2k} (1 + |t|_inf)^2`. Every slack is a polynomial
/// that is quadratic in `t`, so absolute tolerances are measured in this unit.
pub fn tolerance_scale(lambda_max_abs: f64, k: usize, t_max_abs: f64) -> f64 {
    (1.0 + lambda_max_abs).powi(2 * k as i32) * (1.0 + t_max_abs).powi(2)
}

/// One evaluated inequality `lhs >= rhs`, with everything needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub params: EstimateParams,
    pub k: usize,
    /// Derivative index `i` (0-based) for per-index inequalities.
    pub index: Option<usize>,
    pub lambda: Vec<f64>,
    pub t_real: Vec<Vec<Vec<f64>>>,
    pub t_imag: Vec<Vec<Vec<f64>>>,
    pub seed: u64,
    pub sample_id: u64,
    pub scale: f64,
    pub worst: bool,
}

impl SlackReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        lhs: f64,
        rhs: f64,
        params: EstimateParams,
        k: usize,
        index: Option<usize>,
        lambda: &[f64],
        data: &ThirdOrderData,
    ) -> Self {
        let lmax = lambda.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            slack: lhs - rhs,
            params,
            k,
            index,
            lambda: lambda.to_vec(),
            t_real: data.real_part(),
            t_imag: data.imag_part(),
            seed: 0,
            sample_id: 0,
            scale: tolerance_scale(lmax, k, data.max_abs()),
            worst: false,
        }
    }

    pub fn with_sample(mut self, seed: u64, sample_id: u64) -> Self {
        self.seed = seed;
        self.sample_id = sample_id;
        self
    }

    /// `slack / scale`.
    pub fn normalized(&self) -> f64 {
        self.slack / self.scale
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.slack >= -tol * self.scale
    }

    pub fn data(&self) -> Result<ThirdOrderData> {
        ThirdOrderData::from_parts(&self.t_real, &self.t_imag)
    }
}

pub fn write_jsonl<W: Write>(mut out: W, reports: &[SlackReport]) -> Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<SlackReport>> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in file.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
