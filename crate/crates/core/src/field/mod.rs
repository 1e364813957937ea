//! Cell-centered scalar fields on the cube `[-L, L]^N`, `N` in `{2, 3}`.
//!
//! Node `j` along an axis sits at `x_j = -L + (j + 1/2) h` with `h = 2L / M`, so
//! no node lies on a coordinate hyperplane through the origin and axis
//! reflections map nodes onto nodes. Fields are implicitly zero outside the
//! cube (homogeneous Dirichlet truncation).

mod action;
mod io;
mod rotate;
mod spectral;

pub use action::GroupAction;
pub use io::{read_field, radial_profile, write_field, write_field_csv, write_radial_csv, RadialRow};
pub use spectral::{grad_sq_integral, helmholtz_inverse, l2_sq_integral, laplacian, neg_laplacian};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("incompatible grids")]
    IncompatibleGrid,
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("bad field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Uniform cell-centered grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub dim: usize,
    pub points_per_axis: usize,
    pub half_width: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points_per_axis: usize, half_width: f64) -> Result<Self, FieldError> {
        if !(2..=3).contains(&dim) {
            return Err(FieldError::InvalidGrid(format!("dimension {dim} not in {{2, 3}}")));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(FieldError::InvalidGrid(format!(
                "points per axis {points_per_axis} must be a power of two >= 8"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(FieldError::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        Ok(Self { dim, points_per_axis, half_width })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// `h^N`, the volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `j` along any axis.
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + (j as f64 + 0.5) * self.spacing()
    }

    /// Multi-index of the flat index `idx` (axis 0 slowest).
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let m = self.points_per_axis;
        let mut out = [0; 3];
        for a in (0..self.dim).rev() {
            out[a] = idx % m;
            idx /= m;
        }
        out
    }

    pub fn ravel(&self, ix: &[usize]) -> usize {
        ix[..self.dim].iter().fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    /// Cell-center position of the flat index.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let ix = self.unravel(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.coord(ix[a]);
        }
        x
    }

    /// True on cells touching the cube boundary.
    pub fn is_boundary_cell(&self, idx: usize) -> bool {
        let ix = self.unravel(idx);
        ix[..self.dim].iter().any(|&i| i == 0 || i + 1 == self.points_per_axis)
    }
}

/// Real scalar field sampled on a [`GridSpec`], row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, data: vec![0.0; grid.len()] }
    }

    pub fn from_vec(grid: GridSpec, data: Vec<f64>) -> Result<Self, FieldError> {
        if data.len() != grid.len() {
            return Err(FieldError::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite);
        }
        Ok(Self { grid, data })
    }

    /// Samples `f` at every cell center.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let data = (0..grid.len())
            .map(|i| {
                let x = grid.position(i);
                f(&x[..grid.dim])
            })
            .collect();
        Self { grid, data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn check_compatible(&self, other: &Field) -> Result<(), FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::IncompatibleGrid);
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Field) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect();
        Field { grid: self.grid, data }
    }

    pub fn add_assign_scaled(&mut self, s: f64, other: &Field) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn mul(&self, other: &Field) -> Field {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect();
        Field { grid: self.grid, data }
    }

    /// `h^N * sum(u v)`.
    pub fn dot(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        self.grid.cell_volume() * sum_products(&self.data, &other.data)
    }

    /// Discrete `L^2` norm `sqrt(h^N sum u^2)`.
    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|u|` on boundary cells relative to `max |u|`.
    pub fn boundary_amplitude(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let edge = (0..self.data.len())
            .filter(|&i| self.grid.is_boundary_cell(i))
            .fold(0.0f64, |m, i| m.max(self.data[i].abs()));
        edge / peak
    }

    /// Multilinear interpolation at a physical point; zero outside the cube.
    ///
    /// Ghost nodes beyond the outermost cells carry the odd reflection of the
    /// adjacent value, so the interpolant vanishes on the cube faces.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let g = &self.grid;
        let m = g.points_per_axis as isize;
        let h = g.spacing();
        let mut base = [0isize; 3];
        let mut frac = [0.0; 3];
        for a in 0..g.dim {
            if x[a].abs() > g.half_width {
                return 0.0;
            }
            let s = (x[a] + g.half_width) / h - 0.5;
            let f = s.floor();
            base[a] = f as isize;
            frac[a] = s - f;
        }
        let fetch = |ix: &[isize; 3]| -> f64 {
            let mut flat = 0usize;
            let mut sign = 1.0;
            for a in 0..g.dim {
                let mut i = ix[a];
                if i < 0 {
                    i = -1 - i;
                    sign = -sign;
                } else if i >= m {
                    i = 2 * m - 1 - i;
                    sign = -sign;
                }
                flat = flat * m as usize + i as usize;
            }
            sign * self.data[flat]
        };
        let corners = 1usize << g.dim;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut ix = [0isize; 3];
            let mut w = 1.0;
            for a in 0..g.dim {
                let bit = (c >> a) & 1;
                ix[a] = base[a] + bit as isize;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                acc += w * fetch(&ix);
            }
        }
        acc
    }

    /// Dilation `u(x / t)` with zero extension outside the cube.
    pub fn dilate(&self, t: f64, method: Resample) -> Field {
        match method {
            Resample::Multilinear => {
                let g = self.grid;
                let data = (0..g.len())
                    .map(|i| {
                        let x = g.position(i);
                        let mut y = [0.0; 3];
                        for a in 0..g.dim {
                            y[a] = x[a] / t;
                        }
                        self.interpolate(&y[..g.dim])
                    })
                    .collect();
                Field { grid: g, data }
            }
            Resample::Spectral => spectral::dilate_spectral(self, t),
        }
    }

    /// Translation `u(x - shift)`.
    pub fn translate(&self, shift: &[f64], resample: Resample) -> Field {
        if resample == Resample::Spectral {
            return rotate::translate_spectral(self, shift);
        }
        let g = self.grid;
        let data = (0..g.len())
            .map(|i| {
                let x = g.position(i);
                let mut y = [0.0; 3];
                for a in 0..g.dim {
                    y[a] = x[a] - shift.get(a).copied().unwrap_or(0.0);
                }
                self.interpolate(&y[..g.dim])
            })
            .collect();
        Field { grid: g, data }
    }
}

/// Resampling scheme for dilations, translations and group actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resample {
    /// Multilinear interpolation of the cell values.
    Multilinear,
    /// Evaluation of the sine-series interpolant (consistent with the spectral Laplacian).
    Spectral,
}

/// Deterministic chunked sum of products.
pub(crate) fn sum_products(a: &[f64], b: &[f64]) -> f64 {
    a.chunks(4096).zip(b.chunks(4096)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>()).sum()
}
