//! Band-limited rotation of grid fields.
//!
//! An orthogonal matrix is factored into Givens plane rotations and a
//! diagonal of signs. Each plane rotation by `|theta| <= pi/2` is three
//! shears, and each shear is a per-line translation applied as a Fourier
//! phase on a grid zero padded to `2M` points per axis. Sign flips and
//! half turns map cell centers to cell centers and are exact.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Field, GridSpec};

/// Rotation by `theta` in the plane of axes `(a, b)`.
#[derive(Debug, Clone, Copy)]
struct Givens {
    a: usize,
    b: usize,
    theta: f64,
}

/// `g = G_1 ... G_k D` with plane rotations `G_i` and diagonal `D`.
fn factor(g: &DMatrix<f64>) -> (Vec<Givens>, Vec<f64>) {
    let n = g.nrows();
    let mut q = g.clone();
    let mut rots = Vec::new();
    for j in 0..n {
        for i in j + 1..n {
            let (x, y) = (q[(j, j)], q[(i, j)]);
            if y.abs() < 1e-15 {
                continue;
            }
            let theta = y.atan2(x);
            let (c, s) = (theta.cos(), theta.sin());
            for k in 0..n {
                let (qj, qi) = (q[(j, k)], q[(i, k)]);
                q[(j, k)] = c * qj + s * qi;
                q[(i, k)] = -s * qj + c * qi;
            }
            rots.push(Givens { a: j, b: i, theta });
        }
    }
    let signs = (0..n).map(|i| q[(i, i)].signum()).collect();
    (rots, signs)
}

/// Zero-padded copy with `2M` points per axis; cell `j` goes to `j + M/2`.
struct Padded {
    dim: usize,
    n: usize,
    h: f64,
    data: Vec<f64>,
}

impl Padded {
    fn new(u: &Field) -> Self {
        let g = u.grid();
        let m = g.points_per_axis;
        let n = 2 * m;
        let mut data = vec![0.0; n.pow(g.dim as u32)];
        for (i, &v) in u.data().iter().enumerate() {
            let ix = g.unravel(i);
            data[Self::index(g.dim, n, |a| ix[a] + m / 2)] = v;
        }
        Self { dim: g.dim, n, h: g.spacing(), data }
    }

    fn index(dim: usize, n: usize, ix: impl Fn(usize) -> usize) -> usize {
        (0..dim).fold(0, |acc, a| acc * n + ix(a))
    }

    fn crop(&self, grid: GridSpec) -> Field {
        let m = grid.points_per_axis;
        let data = (0..grid.len())
            .map(|i| {
                let ix = grid.unravel(i);
                self.data[Self::index(self.dim, self.n, |a| ix[a] + m / 2)]
            })
            .collect();
        Field::from_vec(grid, data).expect("rotation of finite data is finite")
    }

    /// `w(x) = w(-x_a, -x_b)` restricted to axes `a`, `b`.
    fn half_turn(&mut self, a: usize, b: usize) {
        let (dim, n) = (self.dim, self.n);
        let old = self.data.clone();
        for (i, v) in self.data.iter_mut().enumerate() {
            let mut ix = [0usize; 3];
            let mut rest = i;
            for k in (0..dim).rev() {
                ix[k] = rest % n;
                rest /= n;
            }
            ix[a] = n - 1 - ix[a];
            ix[b] = n - 1 - ix[b];
            *v = old[Self::index(dim, n, |k| ix[k])];
        }
    }

    /// `w(x) <- w(x + c x_b e_a)`.
    fn shear(&mut self, a: usize, b: usize, c: f64, fwd: &Arc<dyn Fft<f64>>, inv: &Arc<dyn Fft<f64>>) {
        let (n, h) = (self.n, self.h);
        let b_stride = n.pow((self.dim - 1 - b) as u32);
        let coord = move |p: usize| (p as f64 - (n / 2) as f64 + 0.5) * h;
        self.translate_lines(a, |start| c * coord((start / b_stride) % n), fwd, inv);
    }

    /// `w(x) <- w(x + s e_a)`.
    fn shift(&mut self, a: usize, s: f64, fwd: &Arc<dyn Fft<f64>>, inv: &Arc<dyn Fft<f64>>) {
        self.translate_lines(a, |_| s, fwd, inv);
    }

    /// Translates each line along axis `a` by `offset(start index)`.
    fn translate_lines(
        &mut self,
        a: usize,
        offset: impl Fn(usize) -> f64,
        fwd: &Arc<dyn Fft<f64>>,
        inv: &Arc<dyn Fft<f64>>,
    ) {
        let (dim, n) = (self.dim, self.n);
        let stride = n.pow((dim - 1 - a) as u32);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let wave = 2.0 * PI / (n as f64 * self.h);
        let outer = self.data.len() / (n * stride);
        for o in 0..outer {
            let base = o * n * stride;
            for i in 0..stride {
                let start = base + i;
                let delta = offset(start);
                let mut any = false;
                for (j, z) in line.iter_mut().enumerate() {
                    let v = self.data[start + j * stride];
                    any |= v != 0.0;
                    *z = Complex64::new(v, 0.0);
                }
                if !any || delta == 0.0 {
                    continue;
                }
                fwd.process(&mut line);
                for (k, z) in line.iter_mut().enumerate() {
                    let freq = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
                    *z = if k == n / 2 { Complex64::new(0.0, 0.0) } else { *z * Complex64::from_polar(1.0, freq * wave * delta) };
                }
                inv.process(&mut line);
                let scale = 1.0 / n as f64;
                for (j, z) in line.iter().enumerate() {
                    self.data[start + j * stride] = z.re * scale;
                }
            }
        }
    }
}

/// `u(x - shift)` by band-limited interpolation.
pub(crate) fn translate_spectral(u: &Field, shift: &[f64]) -> Field {
    let grid = *u.grid();
    let mut p = Padded::new(u);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(p.n);
    let inv = planner.plan_fft_inverse(p.n);
    for a in 0..grid.dim {
        let s = shift.get(a).copied().unwrap_or(0.0);
        if s != 0.0 {
            p.shift(a, -s, &fwd, &inv);
        }
    }
    p.crop(grid)
}

/// `u(g^{-1} x)` for an orthogonal `N x N` matrix `g`, by band-limited
/// interpolation.
pub(crate) fn rotate_spectral(g: &DMatrix<f64>, u: &Field) -> Field {
    let grid = *u.grid();
    let (rots, signs) = factor(g);
    let mut p = Padded::new(u);
    // act(D) first, then G_k, ..., G_1.
    for (a, &s) in signs.iter().enumerate() {
        if s < 0.0 {
            let (dim, n) = (p.dim, p.n);
            let old = p.data.clone();
            for (i, v) in p.data.iter_mut().enumerate() {
                let mut ix = [0usize; 3];
                let mut rest = i;
                for k in (0..dim).rev() {
                    ix[k] = rest % n;
                    rest /= n;
                }
                ix[a] = n - 1 - ix[a];
                *v = old[Padded::index(dim, n, |k| ix[k])];
            }
        }
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(p.n);
    let inv = planner.plan_fft_inverse(p.n);
    for r in rots.iter().rev() {
        let mut theta = r.theta;
        if theta.abs() > PI / 2.0 {
            p.half_turn(r.a, r.b);
            theta -= PI * theta.signum();
        }
        // u o R(-theta) = u o S_a(c) S_b(d) S_a(c).
        let c = (theta / 2.0).tan();
        let d = -theta.sin();
        p.shear(r.a, r.b, c, &fwd, &inv);
        p.shear(r.b, r.a, d, &fwd, &inv);
        p.shear(r.a, r.b, c, &fwd, &inv);
    }
    p.crop(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coxeter::NamedGroup;
    use crate::field::action::embed;

    fn bump(g: GridSpec, c: [f64; 3], w: f64) -> Field {
        Field::from_fn(g, move |x| {
            let r2: f64 = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
            (-r2 / (w * w)).exp()
        })
    }

    fn rotated_bump(g: GridSpec, m: &DMatrix<f64>, c: [f64; 3], w: f64) -> Field {
        let mut gc = [0.0; 3];
        for a in 0..g.dim {
            gc[a] = (0..g.dim).map(|b| m[(a, b)] * c[b]).sum();
        }
        bump(g, gc, w)
    }

    #[test]
    fn factorization_reproduces_matrix() {
        for tag in ["H3", "A3", "I2:5"] {
            let grp: NamedGroup = tag.parse().unwrap();
            let grp = grp.build().unwrap();
            for e in grp.elements() {
                let g = embed(&e.matrix, 3);
                let (rots, signs) = factor(&g);
                let mut prod = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(signs));
                for r in rots.iter().rev() {
                    let mut gr = DMatrix::identity(3, 3);
                    gr[(r.a, r.a)] = r.theta.cos();
                    gr[(r.a, r.b)] = -r.theta.sin();
                    gr[(r.b, r.a)] = r.theta.sin();
                    gr[(r.b, r.b)] = r.theta.cos();
                    prod = gr * prod;
                }
                assert!((prod - &g).abs().max() < 1e-12, "{tag}");
            }
        }
    }

    #[test]
    fn rotates_gaussian_to_spectral_accuracy() {
        let g = GridSpec::new(2, 64, 8.0).unwrap();
        let c = [2.0, 0.5, 0.0];
        let u = bump(g, c, 1.0);
        let grp = NamedGroup::I2(3).build().unwrap();
        for e in grp.elements() {
            let v = rotate_spectral(&e.matrix, &u);
            let exact = rotated_bump(g, &e.matrix, c, 1.0);
            assert!(v.axpy(-1.0, &exact).max_abs() < 1e-9, "{}", v.axpy(-1.0, &exact).max_abs());
        }
    }

    #[test]
    fn translation_of_compact_bump() {
        let g = GridSpec::new(2, 64, 8.0).unwrap();
        let u = bump(g, [0.0; 3], 0.8);
        let v = translate_spectral(&u, &[1.37, -2.21]);
        let exact = bump(g, [1.37, -2.21, 0.0], 0.8);
        assert!(v.axpy(-1.0, &exact).max_abs() < 1e-10);
    }

    #[test]
    fn three_dimensional_rotation() {
        let g = GridSpec::new(3, 32, 6.0).unwrap();
        let c = [1.5, -0.5, 0.8];
        let u = bump(g, c, 1.0);
        let grp = NamedGroup::H3.build().unwrap();
        for e in grp.elements().iter().take(20) {
            let v = rotate_spectral(&e.matrix, &u);
            let exact = rotated_bump(g, &e.matrix, c, 1.0);
            assert!(v.axpy(-1.0, &exact).max_abs() < 1e-5, "{}", v.axpy(-1.0, &exact).max_abs());
        }
    }
}
