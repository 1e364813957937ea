use nalgebra::{DMatrix, DVector};

use super::rotate::rotate_spectral;
use super::{Field, FieldError, GridSpec, Resample};
use crate::coxeter::{is_signed_permutation, CoxeterGroup};

/// A Coxeter group of rank `k <= N` acting on fields over `R^N`.
///
/// Group matrices act on the first `group.dim()` coordinates and as the
/// identity on the rest; `(g . u)(x) = u(g^{-1} x)`. Elements that are not
/// signed permutations resample the field, spectrally by default.
#[derive(Debug, Clone)]
pub struct GroupAction {
    group: CoxeterGroup,
    dim: usize,
    embedded: Vec<DMatrix<f64>>,
    resample: Resample,
}

impl GroupAction {
    pub fn new(group: CoxeterGroup, dim: usize) -> Result<Self, FieldError> {
        Self::with_resample(group, dim, Resample::Spectral)
    }

    pub fn with_resample(group: CoxeterGroup, dim: usize, resample: Resample) -> Result<Self, FieldError> {
        if group.dim() > dim {
            return Err(FieldError::InvalidGrid(format!(
                "group acts on R^{} but the grid is {dim}-dimensional",
                group.dim()
            )));
        }
        let embedded = group.elements().iter().map(|e| embed(&e.matrix, dim)).collect();
        Ok(Self { group, dim, embedded, resample })
    }

    pub fn group(&self) -> &CoxeterGroup {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    /// Element `index` as an `N x N` matrix.
    pub fn matrix(&self, index: usize) -> &DMatrix<f64> {
        &self.embedded[index]
    }

    pub fn resample(&self) -> Resample {
        self.resample
    }

    pub fn is_grid_exact(&self) -> bool {
        self.group.is_grid_exact()
    }

    /// Embeds a point of the group's space into `R^N`.
    pub fn embed_point(&self, q: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim);
        for i in 0..q.len().min(self.dim) {
            x[i] = q[i];
        }
        x
    }

    /// True when `x` lies strictly inside the fundamental chamber.
    pub fn in_open_chamber(&self, x: &[f64]) -> bool {
        self.group.chamber_normals().iter().all(|n| n.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() > 0.0)
    }

    /// True when `x` lies in the closed chamber, with tolerance `tol`.
    pub fn in_closed_chamber(&self, x: &[f64], tol: f64) -> bool {
        self.group.chamber_normals().iter().all(|n| n.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() >= -tol)
    }

    /// `g . u` for the element at `index`.
    pub fn act(&self, index: usize, u: &Field) -> Result<Field, FieldError> {
        self.check(u)?;
        Ok(act_matrix(&self.embedded[index], u, self.resample))
    }

    /// Signed average `(1/|G|) sum_g psi(g) (g . u)`, the projector onto `H_G`.
    pub fn symmetrize(&self, u: &Field) -> Result<Field, FieldError> {
        self.check(u)?;
        let mut acc = Field::zeros(*u.grid());
        for (i, m) in self.embedded.iter().enumerate() {
            acc.add_assign_scaled(self.group.sign(i) as f64, &act_matrix(m, u, self.resample));
        }
        Ok(acc.scaled(1.0 / self.order() as f64))
    }

    /// `max_g ||g . u - psi(g) u|| / ||u||`.
    pub fn symmetry_residual(&self, u: &Field) -> Result<f64, FieldError> {
        self.check(u)?;
        let norm = u.norm_l2();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let mut worst: f64 = 0.0;
        for (i, m) in self.embedded.iter().enumerate() {
            let r = act_matrix(m, u, self.resample).axpy(-(self.group.sign(i) as f64), u).norm_l2();
            worst = worst.max(r / norm);
        }
        Ok(worst)
    }

    fn check(&self, u: &Field) -> Result<(), FieldError> {
        if u.grid().dim != self.dim {
            return Err(FieldError::IncompatibleGrid);
        }
        Ok(())
    }
}

pub(crate) fn embed(m: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(dim, dim);
    let k = m.nrows();
    for i in 0..k {
        for j in 0..k {
            out[(i, j)] = m[(i, j)];
        }
    }
    out
}

/// `u(g^{-1} x)` for an orthogonal `N x N` matrix `g`.
///
/// Signed permutations are applied by index remapping (bit-exact); other
/// matrices resample.
pub(crate) fn act_matrix(g: &DMatrix<f64>, u: &Field, resample: Resample) -> Field {
    let grid = *u.grid();
    let ginv = g.transpose();
    if is_signed_permutation(&ginv) {
        return permute(&grid, &ginv, u);
    }
    if resample == Resample::Spectral {
        return rotate_spectral(g, u);
    }
    let data = (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            let mut y = [0.0; 3];
            for a in 0..grid.dim {
                y[a] = (0..grid.dim).map(|b| ginv[(a, b)] * x[b]).sum();
            }
            u.interpolate(&y[..grid.dim])
        })
        .collect();
    Field { grid, data }
}

fn permute(grid: &GridSpec, ginv: &DMatrix<f64>, u: &Field) -> Field {
    let m = grid.points_per_axis;
    // y_a = sign_a * x_{src_a}
    let mut src = [0usize; 3];
    let mut flip = [false; 3];
    for a in 0..grid.dim {
        for b in 0..grid.dim {
            if ginv[(a, b)].abs() > 0.5 {
                src[a] = b;
                flip[a] = ginv[(a, b)] < 0.0;
            }
        }
    }
    let data = (0..grid.len())
        .map(|i| {
            let ix = grid.unravel(i);
            let mut jx = [0usize; 3];
            for a in 0..grid.dim {
                let j = ix[src[a]];
                jx[a] = if flip[a] { m - 1 - j } else { j };
            }
            u.data[grid.ravel(&jx)]
        })
        .collect();
    Field { grid: *grid, data }
}
