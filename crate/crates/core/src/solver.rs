//! Ground states and `G`-saddle solutions by preconditioned descent on the
//! energy maximized along a scaling path.
//!
//! Each iterate is retracted onto a manifold that every nontrivial critical
//! point lies on. The first stage uses the dilation `u(x / t)` onto the
//! Pohozaev manifold, with the path maximum of `E` as merit. When `F` is a
//! sum of powers with positive coefficients a second stage switches to the
//! amplitude retraction `s u`, which acts exactly on grid functions, so its
//! fixed points are exact critical points of the discrete energy.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::{self, DEFAULT_NODAL_THRESHOLD};
use crate::coxeter::CoxeterError;
use crate::field::{self, Field, FieldError, GridSpec, GroupAction, Resample};
use crate::functionals::{
    path_maximum, validate_hypotheses, Choquard, FunctionalError, FunctionalState,
    HypothesisReport,
};

#[derive(Debug, Error, Clone)]
pub enum SolverError {
    #[error(
        "no descent after {iters} iterations: energy {energy:.10}, gradient residual {grad_residual:.3e}, \
         Pohozaev residual {pohozaev_residual:.3e}"
    )]
    NoDescent { iters: usize, energy: f64, grad_residual: f64, pohozaev_residual: f64 },
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error("symmetry residual {0:.3e} exceeds the drift tolerance")]
    SymmetryDrift(f64),
    #[error("hypotheses violated: {}", .0.violations.join("; "))]
    Hypotheses(HypothesisReport),
    #[error("saddle solutions need an even F")]
    NotEven,
    #[error("orbit bumps overlap: separation {separation} times minimal orbit distance {min_distance} is below 4")]
    SeparationViolation { separation: f64, min_distance: f64 },
    #[error("bumps of radius {radius} at distance {center} leave the cube of half width {half_width}")]
    BumpLeavesDomain { radius: f64, center: f64, half_width: f64 },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Field(String),
    #[error(transparent)]
    Coxeter(#[from] CoxeterError),
}

impl From<FieldError> for SolverError {
    fn from(e: FieldError) -> Self {
        Self::Field(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Initial step `eta` of the preconditioned descent.
    pub step: f64,
    /// Target for `||g|| / ||u||`.
    pub grad_tol: f64,
    /// Target for `|P| / (A + B)`.
    pub pohozaev_tol: f64,
    /// Apply the Pohozaev dilation after every `rescale_every` accepted steps.
    pub rescale_every: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_halvings: usize,
    /// Gradient residual below which the amplitude retraction takes over.
    pub polish_below: f64,
    /// Largest symmetry residual accepted for interpolated actions.
    pub symmetry_drift_tol: f64,
    /// Initializer separation `l`; defaults to `max(3, 4 / K1)`.
    pub separation: Option<f64>,
    /// Initializer cut-off radius `R`.
    pub radius: Option<f64>,
    pub override_hypotheses: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 3000,
            step: 1.0,
            grad_tol: 1e-4,
            pohozaev_tol: 1e-3,
            rescale_every: 1,
            seed: 0,
            restarts: 3,
            max_halvings: 30,
            polish_below: 1e-2,
            symmetry_drift_tol: 1e-2,
            separation: None,
            radius: None,
            override_hypotheses: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            ("step", self.step),
            ("grad_tol", self.grad_tol),
            ("pohozaev_tol", self.pohozaev_tol),
            ("polish_below", self.polish_below),
            ("symmetry_drift_tol", self.symmetry_drift_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::Config(format!("{name} must be positive")));
            }
        }
        if self.rescale_every == 0 {
            return Err(SolverError::Config("rescale_every must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(SolverError::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// A converged critical point with its diagnostics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub field: Field,
    pub state: FunctionalState,
    pub iters: usize,
    pub grad_residual: f64,
    pub pohozaev_residual: f64,
    pub symmetry_residual: f64,
    pub converged: bool,
    pub group_tag: String,
    pub group_order: usize,
    /// Merit value after each accepted step. The merit changes definition
    /// at `polish_start`, so monotonicity holds on each segment.
    pub history: Vec<f64>,
    pub polish_start: Option<usize>,
    /// Final energies of all restarts, in restart order.
    pub restart_energies: Vec<f64>,
    pub wall_clock: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub group: String,
    pub grid: GridSpec,
    pub alpha: f64,
    pub nonlinearity: String,
    pub iters: usize,
    pub energy: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "P_residual")]
    pub p_residual: f64,
    pub grad_residual: f64,
    pub symmetry_residual: f64,
    pub nodal_count: usize,
    pub decay_rate: Option<f64>,
    pub boundary_amplitude: f64,
    pub wall_clock: f64,
}

impl SolveReport {
    pub fn new(sol: &Solution, problem: &Choquard) -> Self {
        let u = &sol.field;
        Self {
            group: sol.group_tag.clone(),
            grid: *u.grid(),
            alpha: problem.alpha(),
            nonlinearity: problem.nonlinearity().to_string(),
            iters: sol.iters,
            energy: sol.state.e,
            a: sol.state.a,
            b: sol.state.b,
            q: sol.state.q,
            p_residual: sol.pohozaev_residual,
            grad_residual: sol.grad_residual,
            symmetry_residual: sol.symmetry_residual,
            nodal_count: analysis::nodal_domains(u, DEFAULT_NODAL_THRESHOLD, None).count,
            decay_rate: analysis::decay_fit_default(u).ok().map(|f| f.rate),
            boundary_amplitude: u.boundary_amplitude(),
            wall_clock: sol.wall_clock,
        }
    }
}

/// Admissible set for the iterates.
#[derive(Clone, Copy)]
pub enum Constraint<'a> {
    /// No constraint.
    Free,
    /// Nonnegative fields, enforced by `u -> |u|`.
    Positive,
    /// `H_G`, enforced by the signed projector.
    Symmetric(&'a GroupAction),
}

impl Constraint<'_> {
    /// Projection applied to each iterate. A multilinear action is not an
    /// exact projector, so there only the search direction is projected.
    /// Spectral actions are applied to data tapered to the inscribed ball.
    fn retract(&self, v: Field) -> Field {
        match self {
            Constraint::Symmetric(a) if !a.is_grid_exact() => match a.resample() {
                Resample::Spectral => self.apply(taper(v)),
                Resample::Multilinear => v,
            },
            _ => self.apply(v),
        }
    }

    fn project_direction(&self, d: Field) -> Field {
        if self.interpolates() {
            self.apply(taper(d))
        } else {
            d
        }
    }

    fn apply(&self, v: Field) -> Field {
        match self {
            Constraint::Free => v,
            Constraint::Positive => v.map(f64::abs),
            Constraint::Symmetric(a) => a.symmetrize(&v).expect("grid checked at entry"),
        }
    }

    fn interpolates(&self) -> bool {
        matches!(self, Constraint::Symmetric(a) if !a.is_grid_exact())
    }
}

/// Trust region for the Pohozaev retraction: trials whose dilation factor
/// leaves `[1 - d, 1 + d]` are treated as failed steps. Large dilations move
/// off-center mass across the cube boundary.
const MAX_DILATION_STEP: f64 = 0.2;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Stage {
    Pohozaev,
    Amplitude,
}

/// One iterate with everything needed for the next step.
struct Point {
    u: Field,
    state: FunctionalState,
    potential: Field,
    merit: f64,
    /// Path parameter at which the merit is attained (dilation or amplitude).
    t: f64,
}

/// Multiplies by a radial cut-off that vanishes in the last cells before the
/// ball inscribed in the cube. Rotating data that does not vanish at the cube
/// faces would spread ringing over whole grid lines; the taper commutes with
/// every orthogonal map.
fn taper(mut v: Field) -> Field {
    let g = *v.grid();
    let width = 4.0 * g.spacing();
    let inner = g.half_width - 2.0 * width;
    for (i, x) in v.data_mut().iter_mut().enumerate() {
        let p = g.position(i);
        let r = p[..g.dim].iter().map(|c| c * c).sum::<f64>().sqrt();
        *x *= cutoff(r - inner + width, width);
    }
    v
}

/// `F = sum c_i |s|^(p_i)` with all `c_i > 0`, `p_i > 1`: the fibering map
/// `s -> E(s u)` then has a single maximum.
fn amplitude_terms(problem: &Choquard) -> Option<Vec<(f64, f64)>> {
    let terms = problem.nonlinearity().terms()?;
    (!terms.is_empty() && terms.iter().all(|&(c, p)| c > 0.0 && p > 1.0)).then_some(terms)
}

struct Descent<'a> {
    problem: &'a Choquard,
    constraint: Constraint<'a>,
    cfg: &'a SolverConfig,
    terms: Option<Vec<(f64, f64)>>,
    grad_tol: f64,
}

impl<'a> Descent<'a> {
    fn new(problem: &'a Choquard, constraint: Constraint<'a>, cfg: &'a SolverConfig) -> Self {
        Self { problem, constraint, cfg, terms: amplitude_terms(problem), grad_tol: cfg.grad_tol }
    }

    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn alpha(&self) -> f64 {
        self.problem.alpha()
    }

    fn pohozaev_point(&self, u: Field) -> Result<Point, FunctionalError> {
        let ev = self.problem.evaluate_full(&u)?;
        let (t, merit) = path_maximum(&ev.state, self.dim(), self.alpha())?;
        Ok(Point { u, state: ev.state, potential: ev.potential, merit, t })
    }

    /// Retracts `v` to the maximum of `s -> E(s v)`.
    fn amplitude_point(&self, v: Field, terms: &[(f64, f64)]) -> Result<Point, FunctionalError> {
        let kernel = self.problem.kernel();
        let powers: Vec<Field> = terms.iter().map(|&(_, p)| v.map(|x| x.abs().powf(p))).collect();
        let mut conv: Vec<Field> = Vec::with_capacity(powers.len());
        let mut i = 0;
        while i < powers.len() {
            if i + 1 < powers.len() {
                let (a, b) = kernel.convolve_pair(&powers[i], &powers[i + 1]).expect("grid checked");
                conv.push(a);
                conv.push(b);
                i += 2;
            } else {
                conv.push(kernel.convolve(&powers[i]).expect("grid checked"));
                i += 1;
            }
        }
        // Q(s v) = sum_ij w_ij s^(e_ij).
        let mut qterms = Vec::new();
        for (i, &(ci, pi)) in terms.iter().enumerate() {
            for (j, &(cj, pj)) in terms.iter().enumerate() {
                qterms.push((ci * cj * conv[i].dot(&powers[j]), pi + pj));
            }
        }
        let a = field::grad_sq_integral(&v);
        let b = field::l2_sq_integral(&v);
        let q1: f64 = qterms.iter().map(|t| t.0).sum();
        if !(q1 > 0.0) {
            return Err(FunctionalError::NonpositiveQ(q1));
        }
        let s = fibering_root(a + b, &qterms);
        let q: f64 = qterms.iter().map(|&(w, e)| w * s.powf(e)).sum();
        let mut potential = conv[0].scaled(terms[0].0 * s.powf(terms[0].1));
        for (k, &(c, p)) in terms.iter().enumerate().skip(1) {
            potential.add_assign_scaled(c * s.powf(p), &conv[k]);
        }
        let state = FunctionalState::new(self.dim(), self.alpha(), s * s * a, s * s * b, q);
        Ok(Point { u: v.scaled(s), state, potential, merit: state.e, t: s })
    }

    fn point(&self, u: Field, stage: Stage) -> Result<Point, FunctionalError> {
        match (stage, &self.terms) {
            (Stage::Amplitude, Some(terms)) => self.amplitude_point(u, terms),
            _ => self.pohozaev_point(u),
        }
    }

    /// Gradient of the merit at `p`: the energy gradient with the Pohozaev
    /// dilation factors applied.
    fn merit_gradient(&self, p: &Point, stage: Stage) -> Field {
        let n = self.dim() as f64;
        let t = if stage == Stage::Pohozaev { p.t } else { 1.0 };
        let c_lap = t.powf(n - 2.0);
        let c_mass = t.powf(n);
        let c_nl = t.powf(n + self.alpha());
        let nl = self.problem.nonlinearity();
        let mut g = field::neg_laplacian(&p.u).scaled(c_lap);
        for ((gi, &ui), &vi) in g.data_mut().iter_mut().zip(p.u.data()).zip(p.potential.data()) {
            *gi += c_mass * ui - c_nl * vi * nl.derivative(ui);
        }
        g
    }

    fn residuals(&self, p: &Point) -> (Field, f64, f64) {
        let g = self.problem.gradient_with(&p.u, &p.potential);
        let norm = p.u.norm_l2();
        let gr = if norm > 0.0 { g.norm_l2() / norm } else { f64::INFINITY };
        (g, gr, p.state.pohozaev_residual())
    }

    fn dilate(&self, p: Point) -> Result<Point, FunctionalError> {
        if (p.t - 1.0).abs() <= 1e-14 {
            return Ok(p);
        }
        let v = self.constraint.retract(p.u.dilate(p.t, Resample::Spectral));
        self.pohozaev_point(v)
    }

    fn run(&self, init: Field) -> Result<Solution, SolverError> {
        let start = Instant::now();
        let cfg = self.cfg;
        let init = self.constraint.retract(self.constraint.apply(init));
        let mut stage = Stage::Pohozaev;
        let mut cur = self.dilate(self.pohozaev_point(init)?)?;
        if self.terms.is_some() {
            // A first amplitude retraction keeps the initial dilation moderate.
            cur = self.dilate(self.pohozaev_point(self.amplitude_point(cur.u, self.terms.as_ref().unwrap())?.u)?)?;
        }
        let mut eta = cfg.step;
        let mut history = vec![cur.merit];
        let mut iters = 0;
        let mut accepted_since_rescale = 0;
        let mut polish_start = None;
        loop {
            let (_, gr, pr) = self.residuals(&cur);
            if gr <= self.grad_tol && pr <= cfg.pohozaev_tol {
                return Ok(self.finish(cur, iters, gr, pr, (history, polish_start), start));
            }
            if stage == Stage::Pohozaev && self.terms.is_some() && gr <= cfg.polish_below {
                stage = Stage::Amplitude;
                cur = self.point(cur.u, stage)?;
                polish_start = Some(history.len());
                history.push(cur.merit);
                continue;
            }
            if iters >= cfg.max_iters {
                return Err(self.no_descent(&cur, iters, gr, pr));
            }
            iters += 1;

            let grad = self.merit_gradient(&cur, stage);
            let dir = self.constraint.project_direction(field::helmholtz_inverse(&grad));
            let slope = grad.dot(&dir);
            if !(slope > 0.0) {
                return Err(self.no_descent(&cur, iters, gr, pr));
            }
            let mut accepted = None;
            for k in 0..=cfg.max_halvings {
                let v = self.constraint.retract(cur.u.axpy(-eta, &dir));
                if let Ok(trial) = self.point(v, stage) {
                    let bound = cur.merit - 1e-4 * eta * slope + 1e-12 * cur.merit.abs();
                    let moderate = stage == Stage::Amplitude || (trial.t - 1.0).abs() <= MAX_DILATION_STEP;
                    if trial.merit.is_finite() && trial.merit <= bound && moderate {
                        accepted = Some((trial, k));
                        break;
                    }
                }
                eta *= 0.5;
            }
            let Some((trial, halvings)) = accepted else {
                if stage == Stage::Pohozaev && self.terms.is_some() {
                    stage = Stage::Amplitude;
                    eta = cfg.step;
                    cur = self.point(cur.u, stage)?;
                    polish_start = Some(history.len());
                    history.push(cur.merit);
                    continue;
                }
                return Err(self.no_descent(&cur, iters, gr, pr));
            };
            if halvings == 0 {
                eta = (eta * 1.25).min(8.0 * cfg.step);
            }
            cur = trial;
            history.push(cur.merit);
            if stage == Stage::Pohozaev {
                accepted_since_rescale += 1;
                if accepted_since_rescale >= cfg.rescale_every {
                    accepted_since_rescale = 0;
                    cur = self.dilate(cur)?;
                }
            }
        }
    }

    fn no_descent(&self, p: &Point, iters: usize, gr: f64, pr: f64) -> SolverError {
        SolverError::NoDescent { iters, energy: p.state.e, grad_residual: gr, pohozaev_residual: pr }
    }

    fn finish(
        &self,
        p: Point,
        iters: usize,
        gr: f64,
        pr: f64,
        (history, polish_start): (Vec<f64>, Option<usize>),
        start: Instant,
    ) -> Solution {
        let (tag, order, sym) = match self.constraint {
            Constraint::Symmetric(a) => {
                (a.group().tag().to_string(), a.order(), a.symmetry_residual(&p.u).expect("grid checked"))
            }
            _ => ("trivial".to_string(), 1, 0.0),
        };
        Solution {
            state: p.state,
            field: p.u,
            iters,
            grad_residual: gr,
            pohozaev_residual: pr,
            symmetry_residual: sym,
            converged: true,
            group_tag: tag,
            group_order: order,
            restart_energies: Vec::new(),
            history,
            polish_start,
            wall_clock: start.elapsed().as_secs_f64(),
        }
    }
}

/// Largest root of `(A + B) = 1/2 sum w e s^(e - 2)`, the maximizer of
/// `s^2 (A + B)/2 - 1/2 sum w s^e` for `w > 0`, `e > 2`.
fn fibering_root(ab: f64, q: &[(f64, f64)]) -> f64 {
    if q.len() == 1 {
        let (w, e) = q[0];
        return (2.0 * ab / (e * w)).powf(1.0 / (e - 2.0));
    }
    let h = |s: f64| ab - 0.5 * q.iter().map(|&(w, e)| w * e * s.powf(e - 2.0)).sum::<f64>();
    let (mut lo, mut hi) = (1.0, 1.0);
    while h(lo) <= 0.0 {
        lo *= 0.5;
    }
    while h(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Runs one descent from `init`.
pub fn descend(
    problem: &Choquard,
    init: Field,
    constraint: Constraint<'_>,
    cfg: &SolverConfig,
) -> Result<Solution, SolverError> {
    cfg.validate()?;
    if init.grid() != problem.kernel().grid() {
        return Err(FunctionalError::GridMismatch.into());
    }
    if let Constraint::Symmetric(a) = constraint {
        if a.dim() != init.grid().dim {
            return Err(FieldError::IncompatibleGrid.into());
        }
    }
    let mut sol = Descent::new(problem, constraint, cfg).run(init)?;
    if constraint.interpolates() && sol.symmetry_residual > cfg.symmetry_drift_tol {
        return Err(SolverError::SymmetryDrift(sol.symmetry_residual));
    }
    sol.restart_energies = vec![sol.state.e];
    Ok(sol)
}

fn check_hypotheses(problem: &Choquard, cfg: &SolverConfig) -> Result<(), SolverError> {
    let report = validate_hypotheses(problem.nonlinearity(), problem.dim(), problem.alpha());
    if !cfg.override_hypotheses && !report.is_unverified() && !report.existence_ok() {
        return Err(SolverError::Hypotheses(report));
    }
    Ok(())
}

/// Number of worker threads, capped by `CHOQUARD_THREADS`.
pub fn thread_count() -> usize {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("CHOQUARD_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0).unwrap_or(avail)
}

fn run_restarts<F>(restarts: usize, job: F) -> Result<Solution, SolverError>
where
    F: Fn(usize) -> Result<Solution, SolverError> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(thread_count().min(restarts)).build();
    let results: Vec<Result<Solution, SolverError>> = match pool {
        Ok(pool) => pool.install(|| (0..restarts).into_par_iter().map(&job).collect()),
        Err(_) => (0..restarts).map(&job).collect(),
    };
    let energies: Vec<f64> = results.iter().map(|r| r.as_ref().map_or(f64::NAN, |s| s.state.e)).collect();
    let mut best: Option<Solution> = None;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(s) => {
                if best.as_ref().is_none_or(|b| s.state.e < b.state.e) {
                    best = Some(s);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(mut s) => {
            s.restart_energies = energies;
            Ok(s)
        }
        None => Err(first_err.expect("at least one restart")),
    }
}

/// Even Gaussian `exp(-sum x_a^2 / (2 sigma_a^2))`.
pub fn gaussian(grid: GridSpec, widths: &[f64]) -> Field {
    Field::from_fn(grid, |x| {
        let e: f64 = x.iter().zip(widths.iter().cycle()).map(|(xa, s)| xa * xa / (2.0 * s * s)).sum();
        (-e).exp()
    })
}

/// Starting field of restart `k`: a centered Gaussian, perturbed for `k > 0`
/// without breaking evenness in each coordinate.
pub fn ground_initial(grid: GridSpec, seed: u64, k: usize) -> Field {
    let sigma = grid.half_width / 8.0;
    if k == 0 {
        return gaussian(grid, &[sigma]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64));
    let widths: Vec<f64> = (0..grid.dim).map(|_| sigma * (1.0 + rng.gen_range(-0.25..0.25))).collect();
    let c = rng.gen_range(0.0..0.5);
    let base = gaussian(grid, &widths);
    let tail = Field::from_fn(grid, |x| (-x.iter().map(|v| v * v).sum::<f64>().sqrt() / sigma).exp());
    base.axpy(c, &tail)
}

/// Positive ground state: the least-energy nontrivial critical point.
pub fn solve_ground(problem: &Choquard, cfg: &SolverConfig) -> Result<Solution, SolverError> {
    cfg.validate()?;
    check_hypotheses(problem, cfg)?;
    let grid = *problem.kernel().grid();
    run_restarts(cfg.restarts, |k| descend(problem, ground_initial(grid, cfg.seed, k), Constraint::Positive, cfg))
}

/// `C^2` cut-off equal to 1 on `|x| <= R` and 0 on `|x| >= 2R`.
pub fn cutoff(r: f64, radius: f64) -> f64 {
    let s = (r - radius) / radius;
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Default separation `l = max(3, 4 / K1)`: balls of radius `2R` around
/// the points of `l R Gq` are disjoint.
pub fn default_separation(min_distance: Option<f64>) -> f64 {
    min_distance.map_or(3.0, |k1| (4.0 / k1).max(3.0))
}

/// Radius at which a centered profile falls to half its peak.
fn half_radius(base: &Field) -> f64 {
    let peak = base.max_abs();
    let g = base.grid();
    (0..g.len())
        .filter(|&i| base.data()[i].abs() >= 0.5 * peak)
        .map(|i| g.position(i)[..g.dim].iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
        .max(g.spacing())
}

/// Default cut-off radius: as large as the cube allows, but at most 1.5
/// half-radii of the base profile.
pub fn default_radius(base: &Field, separation: f64) -> f64 {
    let fit = 0.95 * base.grid().half_width / (separation + 2.0);
    fit.min(1.5 * half_radius(base))
}

/// `sum_g psi(g) g . (zeta_R base)(x - l R q) / |S_q|`.
///
/// `base` must be symmetric under the isotropy group of `q` for the bumps
/// at one orbit point to add coherently.
pub fn build_initializer(
    action: &GroupAction,
    base: &Field,
    radius: f64,
    separation: f64,
    q: &DVector<f64>,
) -> Result<Field, SolverError> {
    let group = action.group();
    let norm = q.norm();
    if !(norm > 0.0) {
        return Err(SolverError::Config("orbit point must be nonzero".into()));
    }
    let q = q / norm;
    group.walls_containing(&q)?;
    let orbit = group.orbit(&q)?;
    if let Some(k1) = orbit.min_distance {
        if separation * k1 < 4.0 - 1e-12 {
            return Err(SolverError::SeparationViolation { separation, min_distance: k1 });
        }
    }
    let g = *base.grid();
    let center = separation * radius;
    if center + 2.0 * radius > g.half_width {
        return Err(SolverError::BumpLeavesDomain { radius: 2.0 * radius, center, half_width: g.half_width });
    }
    let stab = group.isotropy(&q)?.order();
    let mut bump = base.clone();
    for (i, v) in bump.data_mut().iter_mut().enumerate() {
        let x = g.position(i);
        let r = x[..g.dim].iter().map(|c| c * c).sum::<f64>().sqrt();
        *v *= cutoff(r, radius);
    }
    let shift = action.embed_point(&q) * center;
    let bump = bump.translate(shift.as_slice(), action.resample());
    let mut out = Field::zeros(g);
    for i in 0..action.order() {
        out.add_assign_scaled(group.sign(i) as f64, &action.act(i, &bump)?);
    }
    Ok(out.scaled(1.0 / stab as f64))
}

/// Least-energy critical point in `H_G`.
///
/// The initializer places `base` (the ground state when supplied, else a
/// Gaussian) on the orbit of a chamber-interior point.
pub fn solve_saddle(
    action: &GroupAction,
    problem: &Choquard,
    cfg: &SolverConfig,
    base: Option<&Field>,
) -> Result<Solution, SolverError> {
    cfg.validate()?;
    check_hypotheses(problem, cfg)?;
    if !problem.nonlinearity().is_even() && !cfg.override_hypotheses {
        return Err(SolverError::NotEven);
    }
    let grid = *problem.kernel().grid();
    if action.dim() != grid.dim {
        return Err(FieldError::IncompatibleGrid.into());
    }
    if action.order() == 1 {
        let mut sol = solve_ground(problem, cfg)?;
        sol.group_tag = action.group().tag().to_string();
        return Ok(sol);
    }
    let base = base.cloned().unwrap_or_else(|| gaussian(grid, &[grid.half_width / 8.0]));
    let q = action.group().chamber_interior_point();
    let k1 = action.group().orbit(&q)?.min_distance;
    let ell0 = cfg.separation.unwrap_or_else(|| default_separation(k1));
    let r0 = cfg.radius.unwrap_or_else(|| default_radius(&base, ell0));
    run_restarts(cfg.restarts, |k| {
        let (ell, r) = if k == 0 {
            (ell0, r0)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64));
            let ell = ell0 * rng.gen_range(1.0..1.15);
            let r = (r0 * rng.gen_range(0.8..1.0)).min(0.95 * grid.half_width / (ell + 2.0));
            (ell, r)
        };
        let init = build_initializer(action, &base, r, ell, &q)?;
        descend(problem, init, Constraint::Symmetric(action), cfg)
    })
}
