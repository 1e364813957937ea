//! Free-space Riesz potential `I_alpha * v` on a cell-centered grid.
//!
//! The discrete kernel is `K(d) = A_alpha |h d|^(alpha - N)` for nonzero
//! integer offsets `d`. The zero-offset weight is chosen by [`SingularCell`].
//! Convolution is linear (not circular): data are zero padded to `2M`
//! points per axis.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use statrs::function::gamma::{gamma_ur, ln_gamma};
use thiserror::Error;

use crate::field::{Field, GridSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RieszError {
    #[error("alpha = {alpha} outside (0, {dim})")]
    AlphaOutOfRange { dim: usize, alpha: f64 },
    #[error("field grid does not match the kernel grid")]
    GridMismatch,
}

/// `A_alpha = Gamma((N - alpha)/2) / (2^alpha pi^(N/2) Gamma(alpha/2))`.
pub fn riesz_constant(dim: usize, alpha: f64) -> Result<f64, RieszError> {
    let n = dim as f64;
    if !(alpha > 0.0 && alpha < n) {
        return Err(RieszError::AlphaOutOfRange { dim, alpha });
    }
    let log = ln_gamma((n - alpha) / 2.0) - alpha * 2f64.ln() - 0.5 * n * PI.ln() - ln_gamma(alpha / 2.0);
    Ok(log.exp())
}

/// Mean of `|y|^(alpha - N)` over the unit cube `[-1/2, 1/2]^N`.
///
/// The cube splits into `2N` pyramids with apex at the origin; the radial
/// integral is elementary and leaves a smooth integral over one face.
pub fn unit_cell_average(dim: usize, alpha: f64) -> f64 {
    let s = alpha - dim as f64;
    let (nodes, weights) = gauss_legendre(32);
    // Face [-1/2, 1/2]^(N-1) at height 1/2.
    let face: f64 = match dim {
        2 => nodes.iter().zip(&weights).map(|(x, w)| 0.5 * w * (0.25 + 0.25 * x * x).powf(s / 2.0)).sum(),
        3 => {
            let mut acc = 0.0;
            for (x, wx) in nodes.iter().zip(&weights) {
                for (y, wy) in nodes.iter().zip(&weights) {
                    acc += 0.25 * wx * wy * (0.25 + 0.25 * (x * x + y * y)).powf(s / 2.0);
                }
            }
            acc
        }
        _ => panic!("unsupported dimension {dim}"),
    };
    2.0 * dim as f64 * face / (2.0 * alpha)
}

/// Epstein zeta function `sum' |k|^(-s)` of the lattice `Z^N`, analytically
/// continued to all `s != N`.
///
/// Theta-function splitting at `t = 1`; both tails are upper incomplete
/// gamma functions decaying like `exp(-pi |k|^2)`.
pub fn epstein_zeta(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    let (a, b) = (s / 2.0, (n - s) / 2.0);
    let upper = |c: f64, x: f64| {
        if c == 0.0 {
            return 0.0;
        }
        gamma_ur(c, x) * ln_gamma(c).exp() / x.powf(c)
    };
    let kmax = 5i64;
    let mut acc = 0.0;
    let count = (2 * kmax + 1).pow(dim as u32);
    for idx in 0..count {
        let mut rest = idx;
        let mut r2 = 0i64;
        for _ in 0..dim {
            let k = (rest % (2 * kmax + 1) as i64) - kmax;
            rest /= (2 * kmax + 1) as i64;
            r2 += k * k;
        }
        if r2 == 0 {
            continue;
        }
        let x = PI * r2 as f64;
        acc += upper(a, x) + upper(b, x);
    }
    let lambda = acc - 1.0 / a - 1.0 / b;
    lambda * PI.powf(a) / ln_gamma(a).exp()
}

/// Zero-offset weight of the discrete kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SingularCell {
    /// `-A_alpha Z_N(N - alpha) h^(alpha - N)`, with `Z_N` the lattice
    /// Epstein zeta function. Removes the `h^alpha` term of the punctured
    /// lattice sum, leaving `O(h^(alpha + 2))` for smooth data.
    #[default]
    LatticeZeta,
    /// Mean of `A_alpha |x|^(alpha - N)` over one cell. First order in
    /// `h^alpha`.
    CellAverage,
}

impl SingularCell {
    /// Weight for unit spacing and unit constant.
    pub fn unit_weight(self, dim: usize, alpha: f64) -> f64 {
        match self {
            SingularCell::LatticeZeta => -epstein_zeta(dim, dim as f64 - alpha),
            SingularCell::CellAverage => unit_cell_average(dim, alpha),
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Sampled Riesz kernel for one `(grid, alpha)` pair.
pub struct RieszKernel {
    grid: GridSpec,
    alpha: f64,
    constant: f64,
    center: f64,
    // Real transform of the kernel on the doubled grid, including h^N and the
    // inverse FFT normalization.
    hat: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RieszKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RieszKernel").field("grid", &self.grid).field("alpha", &self.alpha).finish()
    }
}

impl RieszKernel {
    pub fn new(grid: GridSpec, alpha: f64) -> Result<Self, RieszError> {
        Self::with_singular_cell(grid, alpha, SingularCell::default())
    }

    pub fn with_singular_cell(grid: GridSpec, alpha: f64, cell: SingularCell) -> Result<Self, RieszError> {
        let constant = riesz_constant(grid.dim, alpha)?;
        let h = grid.spacing();
        let center = constant * h.powf(alpha - grid.dim as f64) * cell.unit_weight(grid.dim, alpha);
        let n2 = 2 * grid.points_per_axis;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n2);
        let inv = planner.plan_fft_inverse(n2);
        let mut kernel = Self { grid, alpha, constant, center, hat: Vec::new(), fwd, inv };

        let total = n2.pow(grid.dim as u32);
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        for (i, z) in buf.iter_mut().enumerate() {
            let mut d = [0isize; 3];
            let mut rest = i;
            let mut wrap = false;
            for a in (0..grid.dim).rev() {
                let k = rest % n2;
                rest /= n2;
                if k == grid.points_per_axis {
                    wrap = true;
                }
                d[a] = if k < grid.points_per_axis { k as isize } else { k as isize - n2 as isize };
            }
            if !wrap {
                z.re = kernel.sample(&d[..grid.dim]);
            }
        }
        kernel.transform(&mut buf, kernel.fwd.clone(), &vec![false; grid.dim]);
        let scale = grid.cell_volume() / total as f64;
        kernel.hat = buf.iter().map(|z| z.re * scale).collect();
        Ok(kernel)
    }

    /// Shared kernel from a process-wide cache keyed by `(N, M, L, alpha)`.
    pub fn cached(grid: GridSpec, alpha: f64) -> Result<Arc<Self>, RieszError> {
        Self::cached_with(grid, alpha, SingularCell::default())
    }

    pub fn cached_with(grid: GridSpec, alpha: f64, cell: SingularCell) -> Result<Arc<Self>, RieszError> {
        type Key = (usize, usize, u64, u64, SingularCell);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<RieszKernel>>>> = OnceLock::new();
        let key = (grid.dim, grid.points_per_axis, grid.half_width.to_bits(), alpha.to_bits(), cell);
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(k) = cache.lock().expect("kernel cache poisoned").get(&key) {
            return Ok(k.clone());
        }
        let k = Arc::new(Self::with_singular_cell(grid, alpha, cell)?);
        Ok(cache.lock().expect("kernel cache poisoned").entry(key).or_insert(k).clone())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    /// Kernel value at integer cell offset `d`.
    pub fn sample(&self, d: &[isize]) -> f64 {
        let r2: isize = d.iter().map(|x| x * x).sum();
        if r2 == 0 {
            return self.center;
        }
        let r = (r2 as f64).sqrt() * self.grid.spacing();
        self.constant * r.powf(self.alpha - self.grid.dim as f64)
    }

    /// `w_j = h^N sum_i K(j - i) v_i` by zero-padded FFT.
    pub fn convolve(&self, v: &Field) -> Result<Field, RieszError> {
        if v.grid() != &self.grid {
            return Err(RieszError::GridMismatch);
        }
        let (w, _) = self.convolve_raw(v.data(), None);
        Ok(Field::from_vec(self.grid, w).expect("convolution of finite data is finite"))
    }

    /// Two convolutions for the price of one complex transform.
    pub fn convolve_pair(&self, a: &Field, b: &Field) -> Result<(Field, Field), RieszError> {
        if a.grid() != &self.grid || b.grid() != &self.grid {
            return Err(RieszError::GridMismatch);
        }
        let (wa, wb) = self.convolve_raw(a.data(), Some(b.data()));
        let wb = wb.expect("pair requested");
        Ok((Field::from_vec(self.grid, wa).expect("finite"), Field::from_vec(self.grid, wb).expect("finite")))
    }

    /// Direct `O(M^(2N))` summation with the same discrete kernel.
    pub fn convolve_direct(&self, v: &Field) -> Result<Field, RieszError> {
        if v.grid() != &self.grid {
            return Err(RieszError::GridMismatch);
        }
        let g = self.grid;
        let hn = g.cell_volume();
        let data = (0..g.len())
            .map(|j| {
                let xj = g.unravel(j);
                let mut acc = 0.0;
                for (i, &vi) in v.data().iter().enumerate() {
                    if vi == 0.0 {
                        continue;
                    }
                    let xi = g.unravel(i);
                    let mut d = [0isize; 3];
                    for a in 0..g.dim {
                        d[a] = xj[a] as isize - xi[a] as isize;
                    }
                    acc += self.sample(&d[..g.dim]) * vi;
                }
                hn * acc
            })
            .collect();
        Ok(Field::from_vec(g, data).expect("finite"))
    }

    fn convolve_raw(&self, re: &[f64], im: Option<&[f64]>) -> (Vec<f64>, Option<Vec<f64>>) {
        let g = self.grid;
        let m = g.points_per_axis;
        let n2 = 2 * m;
        let mut buf = vec![Complex64::new(0.0, 0.0); n2.pow(g.dim as u32)];
        for i in 0..g.len() {
            buf[self.padded_index(i)] = Complex64::new(re[i], im.map_or(0.0, |x| x[i]));
        }
        self.transform(&mut buf, self.fwd.clone(), &vec![true; g.dim]);
        for (z, k) in buf.iter_mut().zip(&self.hat) {
            *z *= *k;
        }
        self.inverse_pruned(&mut buf);
        let mut a = vec![0.0; g.len()];
        let mut b = im.map(|_| vec![0.0; g.len()]);
        for i in 0..g.len() {
            let z = buf[self.padded_index(i)];
            a[i] = z.re;
            if let Some(b) = b.as_mut() {
                b[i] = z.im;
            }
        }
        (a, b)
    }

    fn padded_index(&self, i: usize) -> usize {
        let ix = self.grid.unravel(i);
        let n2 = 2 * self.grid.points_per_axis;
        ix[..self.grid.dim].iter().fold(0, |acc, &k| acc * n2 + k)
    }

    /// Forward transform, axes last to first. Where `sparse[a]` is set, axis
    /// `a` has not been transformed yet and only its first `M` entries can be
    /// nonzero, so lines with a larger index there are skipped.
    fn transform(&self, buf: &mut [Complex64], fft: Arc<dyn Fft<f64>>, sparse: &[bool]) {
        let mut sparse = sparse.to_vec();
        for axis in (0..self.grid.dim).rev() {
            sparse[axis] = false;
            self.lines(buf, &*fft, axis, &sparse);
        }
    }

    /// Inverse transform, axes first to last, computing only lines whose
    /// already-transformed indices lie in the output block `[0, M)`.
    fn inverse_pruned(&self, buf: &mut [Complex64]) {
        let dim = self.grid.dim;
        let mut keep = vec![false; dim];
        for axis in 0..dim {
            self.lines(buf, &*self.inv, axis, &keep);
            keep[axis] = true;
        }
    }

    fn lines(&self, buf: &mut [Complex64], fft: &dyn Fft<f64>, axis: usize, restricted: &[bool]) {
        let dim = self.grid.dim;
        let m = self.grid.points_per_axis;
        let n2 = 2 * m;
        let stride = n2.pow((dim - 1 - axis) as u32);
        let bounds: Vec<usize> = (0..dim).map(|a| if a == axis { 1 } else if restricted[a] { m } else { n2 }).collect();
        let count: usize = bounds.iter().product();
        let mut line = vec![Complex64::new(0.0, 0.0); n2];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for c in 0..count {
            let mut rest = c;
            let mut base = 0;
            let mut mult = 1;
            for a in (0..dim).rev() {
                let i = rest % bounds[a];
                rest /= bounds[a];
                base += i * mult;
                mult *= n2;
            }
            for (k, z) in line.iter_mut().enumerate() {
                *z = buf[base + k * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (k, z) in line.iter().enumerate() {
                buf[base + k * stride] = *z;
            }
        }
    }
}
