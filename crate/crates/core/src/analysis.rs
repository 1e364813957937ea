//! Diagnostics on computed fields: nodal domains, chamber signs, decay
//! fits, the energy hierarchy and the nodal energy bound.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::coxeter::{CoxeterError, CoxeterGroup, CoxeterMatrix};
use crate::field::{radial_profile, Field, GroupAction, Resample};
use crate::functionals::Choquard;
use crate::solver::{self, Solution, SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("field underflows 1e-300 throughout the fit window")]
    AllBelowFloor,
    #[error("fit window [{0}, {1}] must lie inside (0, L) and hold at least 10 shells")]
    BadWindow(f64, f64),
    #[error("no sign-changing candidates")]
    NoNodalCandidates,
    #[error("field is nonzero outside the closed chamber")]
    SupportViolation,
    #[error(transparent)]
    Coxeter(#[from] CoxeterError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Sign of a field on the open fundamental chamber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChamberSign {
    Positive,
    Negative,
    Mixed,
    /// No chamber cell is above the threshold.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalReport {
    pub count: usize,
    /// Cell counts of the domains, largest first.
    pub domain_sizes: Vec<usize>,
    pub zero_threshold: f64,
    pub sign_on_chamber: Option<ChamberSign>,
}

impl NodalReport {
    pub fn assigned_cells(&self) -> usize {
        self.domain_sizes.iter().sum()
    }
}

/// Default relative threshold below which cells count as zero.
pub const DEFAULT_NODAL_THRESHOLD: f64 = 1e-3;

/// Face-connected components of `{u > theta}` and `{u < -theta}` with
/// `theta = threshold * max|u|`.
pub fn nodal_domains(u: &Field, threshold: f64, action: Option<&GroupAction>) -> NodalReport {
    let g = u.grid();
    let theta = threshold * u.max_abs();
    let data = u.data();
    let m = g.points_per_axis;
    let sign = |v: f64| -> i8 {
        if v > theta {
            1
        } else if v < -theta {
            -1
        } else {
            0
        }
    };
    let mut label = vec![usize::MAX; data.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..data.len() {
        let s = sign(data[start]);
        if s == 0 || label[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        label[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            let ix = g.unravel(i);
            let mut stride = 1;
            for a in (0..g.dim).rev() {
                if ix[a] > 0 {
                    visit(i - stride, s, &sign, data, &mut label, id, &mut stack);
                }
                if ix[a] + 1 < m {
                    visit(i + stride, s, &sign, data, &mut label, id, &mut stack);
                }
                stride *= m;
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));

    let sign_on_chamber = action.map(|act| {
        let (mut pos, mut neg) = (false, false);
        for (i, &v) in data.iter().enumerate() {
            let x = g.position(i);
            if !act.in_open_chamber(&x[..g.dim]) {
                continue;
            }
            match sign(v) {
                1 => pos = true,
                -1 => neg = true,
                _ => {}
            }
        }
        match (pos, neg) {
            (true, false) => ChamberSign::Positive,
            (false, true) => ChamberSign::Negative,
            (true, true) => ChamberSign::Mixed,
            (false, false) => ChamberSign::Empty,
        }
    });

    NodalReport { count: sizes.len(), domain_sizes: sizes, zero_threshold: theta, sign_on_chamber }
}

fn visit(
    j: usize,
    s: i8,
    sign: &impl Fn(f64) -> i8,
    data: &[f64],
    label: &mut [usize],
    id: usize,
    stack: &mut Vec<usize>,
) {
    if label[j] == usize::MAX && sign(data[j]) == s {
        label[j] = id;
        stack.push(j);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Fitted exponential rate (per unit length).
    pub rate: f64,
    pub amplitude: f64,
    pub fit_window: [f64; 2],
    /// RMS of the log-linear fit.
    pub residual: f64,
    pub shells: usize,
}

/// Default window as fractions of `L`.
pub const DEFAULT_DECAY_WINDOW: [f64; 2] = [0.4, 0.7];

/// Least-squares fit of `log max_shell |u|` against `r` over shells of width
/// `h / 2` centered at the origin.
pub fn decay_fit(u: &Field, window: [f64; 2]) -> Result<DecayFit, AnalysisError> {
    let g = u.grid();
    let [lo, hi] = window;
    if !(lo > 0.0 && hi > lo && hi < g.half_width) {
        return Err(AnalysisError::BadWindow(lo, hi));
    }
    let rows: Vec<_> = radial_profile(u, g.spacing() / 2.0).into_iter().filter(|r| r.r >= lo && r.r <= hi).collect();
    if rows.len() < 10 {
        return Err(AnalysisError::BadWindow(lo, hi));
    }
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.abs > 1e-300).map(|r| (r.r, r.abs.ln())).collect();
    if pts.is_empty() {
        return Err(AnalysisError::AllBelowFloor);
    }
    if pts.len() < 2 {
        return Err(AnalysisError::BadWindow(lo, hi));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit { rate: -slope, amplitude: intercept.exp(), fit_window: window, residual, shells: pts.len() })
}

/// Decay fit over the default window `[0.4 L, 0.7 L]`.
pub fn decay_fit_default(u: &Field) -> Result<DecayFit, AnalysisError> {
    let l = u.grid().half_width;
    decay_fit(u, [DEFAULT_DECAY_WINDOW[0] * l, DEFAULT_DECAY_WINDOW[1] * l])
}

/// `u` times the indicator of the closed chamber.
pub fn chamber_restrict(action: &GroupAction, u: &Field) -> Field {
    let g = *u.grid();
    let mut out = u.clone();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let x = g.position(i);
        if !action.in_closed_chamber(&x[..g.dim], 1e-12) {
            *v = 0.0;
        }
    }
    out
}

/// `U(v)(x) = sum_g psi(g) (chi_F v)(g x)`, the antisymmetric extension of
/// chamber data.
pub fn chamber_reconstruct(action: &GroupAction, v: &Field) -> Result<Field, AnalysisError> {
    let g = *v.grid();
    for (i, &val) in v.data().iter().enumerate() {
        let x = g.position(i);
        if val != 0.0 && !action.in_closed_chamber(&x[..g.dim], 1e-12) {
            return Err(AnalysisError::SupportViolation);
        }
    }
    // Restricted data jump across the walls; a local resampling avoids ringing.
    let local = GroupAction::with_resample(action.group().clone(), action.dim(), Resample::Multilinear)
        .map_err(|_| AnalysisError::SupportViolation)?;
    let mut out = Field::zeros(g);
    for i in 0..local.order() {
        let gv = local.act(i, v).map_err(|_| AnalysisError::SupportViolation)?;
        out.add_assign_scaled(action.group().sign(i) as f64, &gv);
    }
    Ok(out)
}

/// Upper bound for the least energy of a sign-changing solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodalBound {
    pub bound: f64,
    pub candidates: usize,
    pub twice_c0: Option<f64>,
    pub holds: Option<bool>,
}

/// Least energy among the supplied solutions that take both signs.
pub fn nodal_min_bound(candidates: &[(f64, &Field)], c0: Option<f64>) -> Result<NodalBound, AnalysisError> {
    let nodal: Vec<f64> = candidates
        .iter()
        .filter(|(_, u)| {
            let theta = DEFAULT_NODAL_THRESHOLD * u.max_abs();
            u.data().iter().any(|&x| x > theta) && u.data().iter().any(|&x| x < -theta)
        })
        .map(|(e, _)| *e)
        .collect();
    let bound = nodal.iter().copied().fold(f64::INFINITY, f64::min);
    if nodal.is_empty() {
        return Err(AnalysisError::NoNodalCandidates);
    }
    let twice_c0 = c0.map(|c| 2.0 * c);
    Ok(NodalBound { bound, candidates: nodal.len(), twice_c0, holds: twice_c0.map(|t| bound < t) })
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyRow {
    pub group: String,
    pub order: usize,
    pub energy: f64,
    pub converged: bool,
    pub nodal_count: usize,
    pub grad_residual: f64,
    pub pohozaev_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Inequality {
    pub lhs_label: String,
    pub rhs_label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; the inequality holds when positive.
    pub margin: f64,
}

impl Inequality {
    fn new(lhs_label: String, rhs_label: String, lhs: f64, rhs: f64) -> Self {
        Self { lhs_label, rhs_label, lhs, rhs, margin: rhs - lhs }
    }

    pub fn label(&self) -> String {
        format!("{} < {}", self.lhs_label, self.rhs_label)
    }

    pub fn holds(&self) -> bool {
        self.margin > 0.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyReport {
    pub rows: Vec<HierarchyRow>,
    pub inequalities: Vec<Inequality>,
    /// Solutions in the order of `rows`.
    #[serde(skip)]
    pub solutions: Vec<Solution>,
}

impl HierarchyReport {
    pub fn all_hold(&self) -> bool {
        self.inequalities.iter().all(Inequality::holds)
    }
}

impl fmt::Display for HierarchyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            writeln!(f, "{:<12} |G| = {:<4} c = {:.10}  nodal = {}", r.group, r.order, r.energy, r.nodal_count)?;
        }
        for q in &self.inequalities {
            let mark = if q.holds() { '✓' } else { '✗' };
            writeln!(
                f,
                "{mark} {} = {:.10} < {} = {:.10} (margin {:.3e})",
                q.lhs_label, q.lhs, q.rhs_label, q.rhs, q.margin
            )?;
        }
        Ok(())
    }
}

fn level_name(tag: &str, rank: usize) -> String {
    if rank == 0 {
        "c0".to_string()
    } else {
        format!("c_{tag}")
    }
}

/// Solves every listed group and checks, among the listed groups only,
/// `c_0 < c_G`, `c_G < |Gq| c_{S_q}` for each chamber ray `q`, and
/// `c_G* < |G| c_0` for rank at least two.
///
/// Inequalities that need the level of an unlisted group are skipped, so a
/// single group yields none. The ground state is always computed, since it
/// seeds the saddle initializers.
pub fn hierarchy_report(
    groups: &[CoxeterGroup],
    problem: &Choquard,
    cfg: &SolverConfig,
) -> Result<HierarchyReport, AnalysisError> {
    let mut memo: HashMap<Vec<Vec<u32>>, Solution> = HashMap::new();
    let ground = solve_group(&CoxeterGroup::trivial(), problem, cfg, None, &mut memo)?;

    let mut rows = Vec::new();
    let mut solutions = Vec::new();
    // Canonical Coxeter matrix of each listed group -> level name and energy.
    let mut listed: HashMap<Vec<Vec<u32>>, (String, f64)> = HashMap::new();
    for group in groups {
        let sol = solve_group(group, problem, cfg, Some(&ground.field), &mut memo)?;
        let tag = group.tag().to_string();
        let key = group.coxeter_matrix().canonical().0.rows();
        listed.entry(key).or_insert((level_name(&tag, group.rank()), sol.state.e));
        rows.push(row(&tag, group.order(), &sol));
        solutions.push(sol);
    }

    let c0 = listed.get(&CoxeterMatrix::empty().rows()).map(|(_, e)| *e);
    let mut inequalities: Vec<Inequality> = Vec::new();
    for (group, sol) in groups.iter().zip(&solutions) {
        if group.rank() == 0 {
            continue;
        }
        let c = sol.state.e;
        let name = level_name(group.tag(), group.rank());
        if let Some(c0) = c0 {
            inequalities.push(Inequality::new("c0".into(), name.clone(), c0, c));
        }
        let mut star = Some(f64::INFINITY);
        for q in group.chamber_rays() {
            let walls = group.walls_containing(&q)?;
            let orbit = group.orbit(&q)?.len();
            let key = group.parabolic(&walls)?.coxeter_matrix().canonical().0.rows();
            let Some((sub_name, sub_e)) = listed.get(&key) else {
                star = None;
                continue;
            };
            let rhs = orbit as f64 * sub_e;
            star = star.map(|s| s.min(rhs));
            let q = Inequality::new(name.clone(), format!("{orbit} {sub_name}"), c, rhs);
            if !inequalities.iter().any(|p| p.label() == q.label()) {
                inequalities.push(q);
            }
        }
        if let (Some(star), Some(c0), true) = (star, c0, group.rank() >= 2) {
            let tag = group.tag();
            inequalities.push(Inequality::new(
                format!("c*_{tag}"),
                format!("{} c0", group.order()),
                star,
                group.order() as f64 * c0,
            ));
        }
    }
    Ok(HierarchyReport { rows, inequalities, solutions })
}

fn row(tag: &str, order: usize, sol: &Solution) -> HierarchyRow {
    HierarchyRow {
        group: tag.to_string(),
        order,
        energy: sol.state.e,
        converged: sol.converged,
        nodal_count: nodal_domains(&sol.field, DEFAULT_NODAL_THRESHOLD, None).count,
        grad_residual: sol.grad_residual,
        pohozaev_residual: sol.pohozaev_residual,
    }
}

fn solve_group(
    group: &CoxeterGroup,
    problem: &Choquard,
    cfg: &SolverConfig,
    base: Option<&Field>,
    memo: &mut HashMap<Vec<Vec<u32>>, Solution>,
) -> Result<Solution, AnalysisError> {
    let canon = group.coxeter_matrix().canonical().0;
    let key = canon.rows();
    if let Some(sol) = memo.get(&key) {
        let mut sol = sol.clone();
        sol.group_tag = group.tag().to_string();
        return Ok(sol);
    }
    let sol = if group.rank() == 0 {
        solver::solve_ground(problem, cfg)?
    } else {
        // Conjugate subgroups share one solve on the canonical realization.
        let canonical = canonical_group(group, &canon)?;
        let action = GroupAction::new(canonical, problem.dim()).map_err(SolverError::from)?;
        solver::solve_saddle(&action, problem, cfg, base)?
    };
    memo.insert(key, sol.clone());
    Ok(sol)
}

fn canonical_group(group: &CoxeterGroup, canon: &CoxeterMatrix) -> Result<CoxeterGroup, CoxeterError> {
    if group.coxeter_matrix() == canon && group.dim() == group.rank() {
        return Ok(group.clone());
    }
    let mut g = CoxeterGroup::from_matrix(canon)?;
    g.set_tag(group.tag());
    Ok(g)
}
