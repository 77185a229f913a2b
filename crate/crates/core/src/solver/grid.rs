//! Uniform periodic grids on the unit flat torus `C^n / (Z + iZ)^n`.
//!
//! Real axes are ordered `(x_1, y_1, ..., x_n, y_n)` and stored row-major,
//! so `x_1` varies slowest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS_PER_AXIS: usize = 8;
pub const MAX_COMPLEX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    n: usize,
    #[serde(rename = "N")]
    points_per_axis: usize,
}

impl TorusGrid {
    pub fn new(n: usize, points_per_axis: usize) -> Result<Self> {
        if n == 0 || n > MAX_COMPLEX_DIM {
            return Err(Error::Config(format!("complex dimension must be in 1..={MAX_COMPLEX_DIM}, got {n}")));
        }
        if points_per_axis < MIN_POINTS_PER_AXIS || !points_per_axis.is_power_of_two() {
            return Err(Error::Config(format!(
                "N must be a power of two >= {MIN_POINTS_PER_AXIS}, got {points_per_axis}"
            )));
        }
        Ok(Self { n, points_per_axis })
    }

    /// Complex dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Points per real axis.
    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points_per_axis as f64
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.real_dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Distance in the flat index between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.real_dim() - 1 - axis) as u32)
    }

    pub fn axis_index(&self, point: usize, axis: usize) -> usize {
        (point / self.stride(axis)) % self.points_per_axis
    }

    pub fn multi_index(&self, point: usize) -> Vec<usize> {
        (0..self.real_dim()).map(|a| self.axis_index(point, a)).collect()
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.points_per_axis + i % self.points_per_axis)
    }

    pub fn coords(&self, point: usize) -> Vec<f64> {
        let h = self.spacing();
        self.multi_index(point).into_iter().map(|i| i as f64 * h).collect()
    }

    /// Periodic neighbour of `point` shifted by `offset` along `axis`.
    pub fn neighbour(&self, point: usize, axis: usize, offset: isize) -> usize {
        let n = self.points_per_axis as isize;
        let i = self.axis_index(point, axis) as isize;
        let j = (i + offset).rem_euclid(n) as usize;
        point - i as usize * self.stride(axis) + j * self.stride(axis)
    }
}

/// Real scalar field sampled on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    grid: TorusGrid,
    values: Vec<f64>,
    /// Set when the field has been projected to zero mean.
    pub mean_zero: bool,
}

impl TorusField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::domain(format!(
                "field has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite field value at point {p}")));
        }
        Ok(Self {
            grid,
            values,
            mean_zero: false,
        })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
            mean_zero: c == 0.0,
        }
    }

    /// Samples `f` at the grid coordinates.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Self> {
        use rayon::prelude::*;
        let values = (0..grid.len()).into_par_iter().map(|p| f(&grid.coords(p))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &TorusField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::domain("fields live on different grids"));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// `self + t * dir`.
    pub fn axpy(&self, t: f64, dir: &[f64]) -> Result<TorusField> {
        if dir.len() != self.values.len() {
            return Err(Error::domain("direction length does not match the grid"));
        }
        let values = self.values.iter().zip(dir).map(|(u, v)| u + t * v).collect();
        TorusField::new(self.grid, values)
    }

    pub fn add_constant(&self, c: f64) -> TorusField {
        TorusField {
            grid: self.grid,
            values: self.values.iter().map(|v| v + c).collect(),
            mean_zero: false,
        }
    }

    pub fn project_mean_zero(&mut self) {
        // The second pass removes the rounding error of the first sum, which
        // grows with the number of points.
        for _ in 0..2 {
            let m = self.mean();
            self.values.iter_mut().for_each(|v| *v -= m);
        }
        self.mean_zero = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::new(1, 8).is_ok());
        assert!(TorusGrid::new(1, 4).is_err());
        assert!(TorusGrid::new(2, 24).is_err());
        assert!(TorusGrid::new(0, 8).is_err());
        assert_eq!(TorusGrid::new(2, 8).unwrap().len(), 4096);
    }

    #[test]
    fn indexing_round_trips() {
        let g = TorusGrid::new(2, 8).unwrap();
        for p in [0, 1, 77, 4095] {
            assert_eq!(g.flat_index(&g.multi_index(p)), p);
        }
        assert_eq!(g.stride(0), 512);
        assert_eq!(g.stride(3), 1);
        let p = g.flat_index(&[7, 0, 3, 0]);
        assert_eq!(g.neighbour(p, 0, 1), g.flat_index(&[0, 0, 3, 0]));
        assert_eq!(g.neighbour(p, 3, -1), g.flat_index(&[7, 0, 3, 7]));
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = TorusGrid::new(1, 8).unwrap();
        let mut v = vec![0.0; 64];
        v[5] = f64::NAN;
        assert!(TorusField::new(g, v).is_err());
    }
}
