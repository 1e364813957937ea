//! Dirichlet sine-series machinery on the cell-centered grid.
//!
//! Along one axis the basis functions are `sin((k + 1) pi (x + L) / 2L)`,
//! `k = 0..M`, sampled at the cell centers; the forward map is a DST-II and
//! its adjoint a DST-III, both evaluated with a length-`2M` complex FFT. The
//! basis diagonalizes `-d^2/dx^2` with eigenvalues `((k + 1) pi / 2L)^2`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Field, GridSpec};

pub(crate) struct SineTransform {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    // e^{-i pi k / 2M} for the forward pass, e^{+i pi k / 2M} for the adjoint.
    tw_fwd: Vec<Complex64>,
    tw_adj: Vec<Complex64>,
}

impl SineTransform {
    fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(2 * m);
        let inv = planner.plan_fft_inverse(2 * m);
        let tw_fwd = (0..=m).map(|k| Complex64::from_polar(1.0, -PI * k as f64 / (2.0 * m as f64))).collect();
        let tw_adj = (0..=m).map(|k| Complex64::from_polar(1.0, PI * k as f64 / (2.0 * m as f64))).collect();
        Self { m, fwd, inv, tw_fwd, tw_adj }
    }

    pub(crate) fn get(m: usize) -> Arc<SineTransform> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<SineTransform>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("sine transform cache poisoned");
        map.entry(m).or_insert_with(|| Arc::new(SineTransform::new(m))).clone()
    }

    /// `X_k = sum_n x_n sin(pi (n + 1/2)(k + 1) / M)`.
    fn forward_line(&self, line: &mut [f64], buf: &mut [Complex64]) {
        let m = self.m;
        for n in 0..m {
            buf[n] = Complex64::new(line[n], 0.0);
            buf[2 * m - 1 - n] = Complex64::new(-line[n], 0.0);
        }
        self.fwd.process(buf);
        for k in 1..=m {
            let z = buf[k] * self.tw_fwd[k] * Complex64::new(0.0, 0.5);
            line[k - 1] = z.re;
        }
    }

    /// `y_n = sum_k c_k sin(pi (n + 1/2)(k + 1) / M)`.
    fn adjoint_line(&self, line: &mut [f64], buf: &mut [Complex64]) {
        let m = self.m;
        buf[0] = Complex64::new(0.0, 0.0);
        for k in 1..=m {
            buf[k] = self.tw_adj[k] * line[k - 1];
        }
        for b in buf.iter_mut().skip(m + 1) {
            *b = Complex64::new(0.0, 0.0);
        }
        self.inv.process(buf);
        for n in 0..m {
            line[n] = buf[n].im;
        }
    }

    /// Inverse of [`Self::forward_line`].
    fn inverse_line(&self, line: &mut [f64], buf: &mut [Complex64]) {
        let m = self.m;
        line[m - 1] *= 0.5;
        self.adjoint_line(line, buf);
        let s = 2.0 / m as f64;
        line.iter_mut().for_each(|v| *v *= s);
    }
}

/// Calls `f` on every line of `data` parallel to `axis`.
pub(crate) fn for_each_line(grid: &GridSpec, data: &mut [f64], axis: usize, mut f: impl FnMut(&mut [f64])) {
    let m = grid.points_per_axis;
    let stride = m.pow((grid.dim - 1 - axis) as u32);
    let outer = data.len() / (m * stride);
    let mut line = vec![0.0; m];
    for o in 0..outer {
        let base = o * m * stride;
        for i in 0..stride {
            for j in 0..m {
                line[j] = data[base + i + j * stride];
            }
            f(&mut line);
            for j in 0..m {
                data[base + i + j * stride] = line[j];
            }
        }
    }
}

fn forward_nd(grid: &GridSpec, data: &mut [f64]) {
    let st = SineTransform::get(grid.points_per_axis);
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * grid.points_per_axis];
    for a in 0..grid.dim {
        for_each_line(grid, data, a, |l| st.forward_line(l, &mut buf));
    }
}

fn inverse_nd(grid: &GridSpec, data: &mut [f64]) {
    let st = SineTransform::get(grid.points_per_axis);
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * grid.points_per_axis];
    for a in 0..grid.dim {
        for_each_line(grid, data, a, |l| st.inverse_line(l, &mut buf));
    }
}

/// Per-axis eigenvalues `((k + 1) pi / 2L)^2` of `-d^2/dx^2`.
pub(crate) fn eigenvalues(grid: &GridSpec) -> Vec<f64> {
    let c = PI / (2.0 * grid.half_width);
    (0..grid.points_per_axis).map(|k| ((k + 1) as f64 * c).powi(2)).collect()
}

// Multiplies spectral coefficients by `symbol(sum of per-axis eigenvalues)`.
fn apply_symbol(grid: &GridSpec, coeffs: &mut [f64], symbol: impl Fn(f64) -> f64) {
    let lam = eigenvalues(grid);
    for (i, c) in coeffs.iter_mut().enumerate() {
        let ix = grid.unravel(i);
        let s: f64 = ix[..grid.dim].iter().map(|&k| lam[k]).sum();
        *c *= symbol(s);
    }
}

/// `-Delta u` with homogeneous Dirichlet conditions on the cube.
pub fn neg_laplacian(u: &Field) -> Field {
    let grid = *u.grid();
    let mut d = u.data().to_vec();
    forward_nd(&grid, &mut d);
    apply_symbol(&grid, &mut d, |s| s);
    inverse_nd(&grid, &mut d);
    Field { grid, data: d }
}

/// `Delta u` with homogeneous Dirichlet conditions on the cube.
pub fn laplacian(u: &Field) -> Field {
    neg_laplacian(u).scaled(-1.0)
}

/// `(-Delta + 1)^{-1} g`, the `H^1` Riesz map used as a preconditioner.
pub fn helmholtz_inverse(g: &Field) -> Field {
    let grid = *g.grid();
    let mut d = g.data().to_vec();
    forward_nd(&grid, &mut d);
    apply_symbol(&grid, &mut d, |s| 1.0 / (1.0 + s));
    inverse_nd(&grid, &mut d);
    Field { grid, data: d }
}

/// `A(u) = int |grad u|^2`, evaluated in sine space.
pub fn grad_sq_integral(u: &Field) -> f64 {
    let grid = *u.grid();
    let m = grid.points_per_axis;
    let mut d = u.data().to_vec();
    forward_nd(&grid, &mut d);
    let lam = eigenvalues(&grid);
    // Row k = M-1 of the DST-II matrix has squared norm M instead of M/2.
    let weight = |k: usize| if k + 1 == m { 0.5 } else { 1.0 };
    let norm = (2.0 / m as f64).powi(grid.dim as i32);
    let total: f64 = d
        .chunks(4096)
        .enumerate()
        .map(|(c, chunk)| {
            chunk
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    let ix = grid.unravel(c * 4096 + j);
                    let mut w = 1.0;
                    let mut s = 0.0;
                    for &k in &ix[..grid.dim] {
                        w *= weight(k);
                        s += lam[k];
                    }
                    w * s * v * v
                })
                .sum::<f64>()
        })
        .sum();
    grid.cell_volume() * norm * total
}

/// `B(u) = int |u|^2` as the cell sum `h^N sum u^2`.
pub fn l2_sq_integral(u: &Field) -> f64 {
    u.dot(u)
}

/// Per-axis resampling matrix for `u(x / t)` built from the sine interpolant.
fn dilation_matrix(grid: &GridSpec, t: f64) -> Vec<f64> {
    let m = grid.points_per_axis;
    let l = grid.half_width;
    let mf = m as f64;
    // S^{-1} = (2/M) S^T D^{-1}; T = E S^{-1}.
    let s = |k: usize, n: usize| (PI * (n as f64 + 0.5) * (k + 1) as f64 / mf).sin();
    let dinv = |k: usize| if k + 1 == m { 0.5 } else { 1.0 };
    let mut t_mat = vec![0.0; m * m];
    let mut e_row = vec![0.0; m];
    for i in 0..m {
        let y = grid.coord(i) / t;
        if y.abs() > l {
            continue;
        }
        for (k, e) in e_row.iter_mut().enumerate() {
            *e = ((k + 1) as f64 * PI * (y + l) / (2.0 * l)).sin() * dinv(k) * 2.0 / mf;
        }
        for j in 0..m {
            t_mat[i * m + j] = (0..m).map(|k| e_row[k] * s(k, j)).sum();
        }
    }
    t_mat
}

pub(crate) fn dilate_spectral(u: &Field, t: f64) -> Field {
    let grid = *u.grid();
    let m = grid.points_per_axis;
    let t_mat = dilation_matrix(&grid, t);
    let mut d = u.data().to_vec();
    let mut out = vec![0.0; m];
    for a in 0..grid.dim {
        for_each_line(&grid, &mut d, a, |line| {
            for i in 0..m {
                let row = &t_mat[i * m..(i + 1) * m];
                out[i] = row.iter().zip(line.iter()).map(|(p, q)| p * q).sum();
            }
            line.copy_from_slice(&out);
        });
    }
    Field { grid, data: d }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dst2_direct(x: &[f64]) -> Vec<f64> {
        let m = x.len();
        (0..m)
            .map(|k| {
                (0..m).map(|n| x[n] * (PI * (n as f64 + 0.5) * (k + 1) as f64 / m as f64).sin()).sum()
            })
            .collect()
    }

    #[test]
    fn forward_matches_direct_sum() {
        let m = 16;
        let st = SineTransform::new(m);
        let x: Vec<f64> = (0..m).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        let mut line = x.clone();
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * m];
        st.forward_line(&mut line, &mut buf);
        for (a, b) in line.iter().zip(dst2_direct(&x)) {
            assert!((a - b).abs() < 1e-12);
        }
        st.inverse_line(&mut line, &mut buf);
        for (a, b) in line.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sine_mode_rayleigh_quotient() {
        // sin(pi x / L) along axis 0 is basis index k = 1; the other axis carries the lowest mode.
        let l = 5.0;
        let g = GridSpec::new(2, 32, l).unwrap();
        let u = Field::from_fn(g, |x| (PI * x[0] / l).sin() * (PI * (x[1] + l) / (2.0 * l)).sin());
        let ratio = grad_sq_integral(&u) / l2_sq_integral(&u);
        let expected = (PI / l).powi(2) + (PI / (2.0 * l)).powi(2);
        assert!((ratio - expected).abs() < 1e-12 * expected, "{ratio} vs {expected}");
        let lap = neg_laplacian(&u);
        let a2 = u.dot(&lap);
        assert!((a2 - grad_sq_integral(&u)).abs() < 1e-10);
    }

    #[test]
    fn zero_field_has_zero_integrals() {
        let g = GridSpec::new(3, 8, 2.0).unwrap();
        let u = Field::zeros(g);
        assert_eq!(grad_sq_integral(&u), 0.0);
        assert_eq!(l2_sq_integral(&u), 0.0);
    }

    #[test]
    fn helmholtz_inverse_inverts() {
        let g = GridSpec::new(2, 16, 3.0).unwrap();
        let u = Field::from_fn(g, |x| (-(x[0] - 0.3).powi(2) - x[1] * x[1]).exp());
        let hu = neg_laplacian(&u).axpy(1.0, &u);
        let back = helmholtz_inverse(&hu);
        assert!(back.axpy(-1.0, &u).max_abs() < 1e-12);
    }
}
