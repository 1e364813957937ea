//! Nonlinearities, the energy and Pohozaev functionals, the `L^2` gradient,
//! and the dilation that projects a field onto the Pohozaev manifold.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::field::{self, Field, Resample};
use crate::riesz::RieszKernel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("Q(u) = {0} is not positive; no Pohozaev scaling exists")]
    NonpositiveQ(f64),
    #[error("bad nonlinearity '{0}'")]
    Parse(String),
    #[error("field grid does not match the kernel grid")]
    GridMismatch,
}

/// Monotone piecewise-cubic (Fritsch-Carlson) interpolant of tabulated `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    even: bool,
    s: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Table {
    /// With `even` set the nodes must start at 0 and `F(s) = T(|s|)`;
    /// otherwise they must bracket 0. `F(0)` is forced to vanish.
    pub fn new(even: bool, s: Vec<f64>, values: Vec<f64>) -> Result<Self, FunctionalError> {
        let bad = |why: &str| Err(FunctionalError::Parse(format!("table: {why}")));
        if s.len() < 2 || s.len() != values.len() {
            return bad("need at least two nodes and matching F values");
        }
        if s.windows(2).any(|w| w[1] <= w[0]) || s.iter().chain(&values).any(|v| !v.is_finite()) {
            return bad("nodes must be finite and strictly increasing");
        }
        let zero = s.iter().position(|&x| x == 0.0);
        match zero {
            Some(i) if values[i] == 0.0 && (!even || i == 0) => {}
            _ if even => return bad("even table must start at s=0 with F=0"),
            _ => return bad("table must contain s=0 with F=0"),
        }
        let n = s.len();
        let delta: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / (s[i + 1] - s[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = delta[0];
        slopes[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let h0 = s[i] - s[i - 1];
                let h1 = s[i + 1] - s[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        if even {
            // f = F' is odd and continuous, so f(0) = 0.
            slopes[0] = 0.0;
        }
        Ok(Self { even, s, values, slopes })
    }

    /// `(F(x), F'(x))`, extended linearly outside the nodes.
    fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.s.len();
        if x <= self.s[0] {
            return (self.values[0] + self.slopes[0] * (x - self.s[0]), self.slopes[0]);
        }
        if x >= self.s[n - 1] {
            return (self.values[n - 1] + self.slopes[n - 1] * (x - self.s[n - 1]), self.slopes[n - 1]);
        }
        let i = self.s.partition_point(|&v| v <= x) - 1;
        let h = self.s[i + 1] - self.s[i];
        let t = (x - self.s[i]) / h;
        let (y0, y1, m0, m1) = (self.values[i], self.values[i + 1], self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1;
        let d = ((6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * m1) / h;
        (v, d)
    }
}

/// The pair `(F, f = F')`.
#[derive(Debug, Clone, PartialEq)]
pub enum Nonlinearity {
    /// `F(s) = |s|^p`.
    Power { p: f64 },
    /// `F(s) = sum_i c_i |s|^(p_i)`.
    Sum(Vec<(f64, f64)>),
    Table(Table),
}

fn abs_pow(s: f64, p: f64) -> f64 {
    let a = s.abs();
    if p == 2.0 {
        a * a
    } else if p.fract() == 0.0 && p.abs() < 64.0 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

impl Nonlinearity {
    pub fn power(p: f64) -> Self {
        Self::Power { p }
    }

    /// `F(s)`.
    pub fn value(&self, s: f64) -> f64 {
        match self {
            Self::Power { p } => abs_pow(s, *p),
            Self::Sum(terms) => terms.iter().map(|&(c, p)| c * abs_pow(s, p)).sum(),
            Self::Table(t) if t.even => t.eval(s.abs()).0,
            Self::Table(t) => t.eval(s).0,
        }
    }

    /// `f(s) = F'(s)`.
    pub fn derivative(&self, s: f64) -> f64 {
        if s == 0.0 {
            return match self {
                Self::Table(t) if !t.even => t.eval(0.0).1,
                _ => 0.0,
            };
        }
        match self {
            Self::Power { p } => p * abs_pow(s, p - 1.0) * s.signum(),
            Self::Sum(terms) => terms.iter().map(|&(c, p)| c * p * abs_pow(s, p - 1.0)).sum::<f64>() * s.signum(),
            Self::Table(t) if t.even => t.eval(s.abs()).1 * s.signum(),
            Self::Table(t) => t.eval(s).1,
        }
    }

    pub fn is_even(&self) -> bool {
        match self {
            Self::Table(t) => t.even,
            _ => true,
        }
    }

    /// Nonzero `(c, p)` pairs with equal exponents merged, sorted by `p`.
    pub(crate) fn terms(&self) -> Option<Vec<(f64, f64)>> {
        let raw = match self {
            Self::Power { p } => vec![(1.0, *p)],
            Self::Sum(t) => t.clone(),
            Self::Table(_) => return None,
        };
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (c, p) in raw {
            match merged.iter_mut().find(|t| t.1 == p) {
                Some(t) => t.0 += c,
                None => merged.push((c, p)),
            }
        }
        merged.retain(|t| t.0 != 0.0);
        merged.sort_by(|a, b| a.1.total_cmp(&b.1));
        Some(merged)
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power { p } => write!(f, "power:p={p}"),
            Self::Sum(terms) => {
                write!(f, "sum:")?;
                for (i, (c, p)) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "c{n}={c},p{n}={p}", n = i + 1)?;
                }
                Ok(())
            }
            Self::Table(t) => {
                let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
                write!(f, "table:even={};s={};F={}", t.even as u8, join(&t.s), join(&t.values))
            }
        }
    }
}

impl FromStr for Nonlinearity {
    type Err = FunctionalError;

    /// `power:p=2`, `sum:c1=1,p1=2;c2=0.5,p2=3`, or
    /// `table:even=1;s=0,1,2;F=0,1,4`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = || FunctionalError::Parse(text.to_string());
        let num = |v: &str| v.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(err);
        let (kind, body) = text.trim().split_once(':').ok_or_else(err)?;
        match kind.trim() {
            "power" => {
                let (k, v) = body.split_once('=').ok_or_else(err)?;
                if k.trim() != "p" {
                    return Err(err());
                }
                Ok(Self::Power { p: num(v)? })
            }
            "sum" => {
                let mut terms = Vec::new();
                for (i, term) in body.split(';').enumerate() {
                    let n = i + 1;
                    let (mut c, mut p) = (None, None);
                    for kv in term.split(',') {
                        let (k, v) = kv.split_once('=').ok_or_else(err)?;
                        let k = k.trim();
                        if k == format!("c{n}") {
                            c = Some(num(v)?);
                        } else if k == format!("p{n}") {
                            p = Some(num(v)?);
                        } else {
                            return Err(err());
                        }
                    }
                    terms.push((c.ok_or_else(err)?, p.ok_or_else(err)?));
                }
                Ok(Self::Sum(terms))
            }
            "table" => {
                let (mut even, mut s, mut vals) = (false, None, None);
                for part in body.split(';') {
                    let (k, v) = part.split_once('=').ok_or_else(err)?;
                    let list = || v.split(',').map(num).collect::<Result<Vec<_>, _>>();
                    match k.trim() {
                        "even" => even = num(v)? != 0.0,
                        "s" => s = Some(list()?),
                        "F" => vals = Some(list()?),
                        _ => return Err(err()),
                    }
                }
                Ok(Self::Table(Table::new(even, s.ok_or_else(err)?, vals.ok_or_else(err)?)?))
            }
            _ => Err(err()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Unverified,
}

/// Outcome of the symbolic hypothesis checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub f0: Status,
    pub f1: Status,
    pub f2: Status,
    /// `lim f(s)/s` at 0 when (F1) holds.
    pub mu: Option<f64>,
    pub f1_prime: Status,
    pub f2_prime: Status,
    /// `f` odd with constant sign on `(0, inf)`.
    pub odd_constant_sign: Status,
    pub violations: Vec<String>,
}

impl HypothesisReport {
    /// (F0), (F1), (F2) all pass.
    pub fn existence_ok(&self) -> bool {
        [self.f0, self.f1, self.f2].iter().all(|&s| s == Status::Pass)
    }

    pub fn is_unverified(&self) -> bool {
        self.f0 == Status::Unverified
    }
}

/// Checks (F0)-(F2) and the stronger (F'1), (F'2) from the declared exponents.
pub fn validate_hypotheses(nl: &Nonlinearity, dim: usize, alpha: f64) -> HypothesisReport {
    let Some(terms) = nl.terms() else {
        return HypothesisReport {
            f0: Status::Unverified,
            f1: Status::Unverified,
            f2: Status::Unverified,
            mu: None,
            f1_prime: Status::Unverified,
            f2_prime: Status::Unverified,
            odd_constant_sign: Status::Unverified,
            violations: vec!["tabulated nonlinearity: hypotheses not checked".into()],
        };
    };
    let status = |ok: bool| if ok { Status::Pass } else { Status::Fail };
    let mut violations = Vec::new();
    let critical = if dim > 2 { (dim as f64 + alpha) / (dim as f64 - 2.0) } else { f64::INFINITY };

    let f0 = status(!terms.is_empty());
    if f0 == Status::Fail {
        violations.push("(F0): F vanishes identically".into());
    }

    let pmin = terms.first().map_or(f64::INFINITY, |t| t.1);
    let pmax = terms.last().map_or(0.0, |t| t.1);
    let mu = terms.iter().filter(|t| t.1 == 2.0).map(|t| 2.0 * t.0).sum::<f64>();
    let f1_ok = pmin >= 2.0 && mu >= 0.0;
    if pmin < 2.0 {
        violations.push(format!("(F1): exponent {pmin} < 2 makes f(s)/s unbounded at 0"));
    } else if mu < 0.0 {
        violations.push(format!("(F1): mu = {mu} is negative"));
    }
    let f1 = status(f1_ok);

    let f2 = status(pmax < critical);
    if f2 == Status::Fail {
        violations.push(format!("(F2): exponent {pmax} >= (N+alpha)/(N-2) = {critical}"));
    }

    let positive = terms.iter().all(|t| t.0 > 0.0);
    let f1_prime = status(!terms.is_empty() && pmin > 2.0 && positive);
    let f2_prime = status(!terms.is_empty() && pmax < critical);
    let same_sign = terms.iter().all(|t| t.0 > 0.0) || terms.iter().all(|t| t.0 < 0.0);
    let odd_constant_sign = status(!terms.is_empty() && same_sign);

    HypothesisReport {
        f0,
        f1,
        f2,
        mu: f1_ok.then_some(mu),
        f1_prime,
        f2_prime,
        odd_constant_sign,
        violations,
    }
}

/// Cached functional values of one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalState {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "P")]
    pub p: f64,
}

impl FunctionalState {
    pub fn new(dim: usize, alpha: f64, a: f64, b: f64, q: f64) -> Self {
        let n = dim as f64;
        Self {
            a,
            b,
            q,
            e: 0.5 * (a + b) - 0.5 * q,
            p: 0.5 * (n - 2.0) * a + 0.5 * n * b - 0.5 * (n + alpha) * q,
        }
    }

    /// `|P| / (A + B)`.
    pub fn pohozaev_residual(&self) -> f64 {
        let s = self.a + self.b;
        if s == 0.0 {
            0.0
        } else {
            self.p.abs() / s
        }
    }
}

/// Energy along the dilation path, `E(u(. / t))` from the values at `t = 1`.
pub fn path_energy(s: &FunctionalState, dim: usize, alpha: f64, t: f64) -> f64 {
    let n = dim as f64;
    0.5 * t.powf(n - 2.0) * s.a + 0.5 * t.powf(n) * s.b - 0.5 * t.powf(n + alpha) * s.q
}

/// `beta(t) = P(u(. / t))`.
pub fn path_pohozaev(s: &FunctionalState, dim: usize, alpha: f64, t: f64) -> f64 {
    let n = dim as f64;
    0.5 * (n - 2.0) * t.powf(n - 2.0) * s.a + 0.5 * n * t.powf(n) * s.b - 0.5 * (n + alpha) * t.powf(n + alpha) * s.q
}

/// The unique `t_u > 0` with `beta(t_u) = 0`.
pub fn pohozaev_root(s: &FunctionalState, dim: usize, alpha: f64) -> Result<f64, FunctionalError> {
    if !(s.q > 0.0) {
        return Err(FunctionalError::NonpositiveQ(s.q));
    }
    if dim == 2 {
        return Ok((2.0 * s.b / ((2.0 + alpha) * s.q)).powf(1.0 / alpha));
    }
    Ok(numeric_root(s, dim, alpha))
}

/// Bisection and Newton on `beta(t) / t^(N-2)`, which is strictly
/// decreasing in `t`.
pub fn numeric_root(s: &FunctionalState, dim: usize, alpha: f64) -> f64 {
    let n = dim as f64;
    let g = |t: f64| 0.5 * (n - 2.0) * s.a + 0.5 * n * t * t * s.b - 0.5 * (n + alpha) * t.powf(2.0 + alpha) * s.q;
    let dg = |t: f64| n * t * s.b - 0.5 * (n + alpha) * (2.0 + alpha) * t.powf(1.0 + alpha) * s.q;
    let mut lo = 1e-3;
    while g(lo) <= 0.0 && lo > 1e-300 {
        lo *= 0.5;
    }
    let mut hi = 1.0f64.max(2.0 * lo);
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-8 * hi {
            break;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..8 {
        let d = dg(t);
        if d == 0.0 {
            break;
        }
        let next = t - g(t) / d;
        if !(next > lo && next < hi) {
            break;
        }
        let done = (next - t).abs() <= 4.0 * f64::EPSILON * t;
        t = next;
        if done {
            break;
        }
    }
    t
}

/// Maximum of the energy along the dilation path through `u`.
pub fn path_maximum(s: &FunctionalState, dim: usize, alpha: f64) -> Result<(f64, f64), FunctionalError> {
    let t = pohozaev_root(s, dim, alpha)?;
    Ok((t, path_energy(s, dim, alpha, t)))
}

/// A nonlinearity paired with a Riesz kernel: the Choquard energy on one grid.
#[derive(Debug, Clone)]
pub struct Choquard {
    nl: Nonlinearity,
    kernel: Arc<RieszKernel>,
}

/// Functional values together with the potential `I_alpha * F(u)`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub state: FunctionalState,
    pub potential: Field,
}

impl Choquard {
    pub fn new(nl: Nonlinearity, kernel: Arc<RieszKernel>) -> Self {
        Self { nl, kernel }
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn kernel(&self) -> &RieszKernel {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.kernel.grid().dim
    }

    pub fn alpha(&self) -> f64 {
        self.kernel.alpha()
    }

    fn check(&self, u: &Field) -> Result<(), FunctionalError> {
        if u.grid() != self.kernel.grid() {
            return Err(FunctionalError::GridMismatch);
        }
        Ok(())
    }

    pub fn evaluate_full(&self, u: &Field) -> Result<Evaluation, FunctionalError> {
        self.check(u)?;
        let fu = u.map(|s| self.nl.value(s));
        let potential = self.kernel.convolve(&fu).expect("grid checked");
        let q = potential.dot(&fu);
        let a = field::grad_sq_integral(u);
        let b = field::l2_sq_integral(u);
        Ok(Evaluation { state: FunctionalState::new(self.dim(), self.alpha(), a, b, q), potential })
    }

    pub fn evaluate(&self, u: &Field) -> Result<FunctionalState, FunctionalError> {
        Ok(self.evaluate_full(u)?.state)
    }

    /// `-Delta u + u - (I_alpha * F(u)) f(u)` given the potential of `u`.
    pub fn gradient_with(&self, u: &Field, potential: &Field) -> Field {
        let mut g = field::neg_laplacian(u);
        let d = g.data_mut();
        for ((gi, &ui), &vi) in d.iter_mut().zip(u.data()).zip(potential.data()) {
            *gi += ui - vi * self.nl.derivative(ui);
        }
        g
    }

    pub fn gradient(&self, u: &Field) -> Result<Field, FunctionalError> {
        let ev = self.evaluate_full(u)?;
        Ok(self.gradient_with(u, &ev.potential))
    }

    /// `(t_u, u(. / t_u))`.
    pub fn pohozaev_scale(&self, u: &Field, method: Resample) -> Result<(f64, Field), FunctionalError> {
        let s = self.evaluate(u)?;
        let t = pohozaev_root(&s, self.dim(), self.alpha())?;
        Ok((t, u.dilate(t, method)))
    }
}
