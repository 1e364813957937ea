//! Finite Coxeter groups of rank at most three.
//!
//! A group is built from its Coxeter matrix through the Tits reflection
//! representation. The bilinear form `B(e_i, e_j) = -cos(pi / m_ij)` is
//! factored as `B = L L^T`; the rows of `L` are then unit simple roots in
//! ordinary Euclidean coordinates and every simple reflection becomes the
//! orthogonal matrix `I - 2 r r^T`. Elements are enumerated by breadth-first
//! closure over the generators.
//!
//! The fundamental chamber is the cone `{x : <x, r_i> >= 0 for all i}`.
//! Because the simple roots pairwise meet at obtuse angles this cone is the
//! closure of a strict fundamental domain.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

/// Hard cap on the number of enumerated elements.
pub const DEFAULT_ORDER_CAP: usize = 1024;

/// Largest supported rank.
pub const MAX_RANK: usize = 3;

/// Matrix comparison tolerance used during closure.
pub const ELEMENT_TOL: f64 = 1e-9;

/// Pivot tolerance for the positive-definiteness test.
pub const PIVOT_TOL: f64 = 1e-12;

/// Point comparison tolerance for orbits, stabilizers and chamber walls.
pub const POINT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoxeterError {
    #[error("invalid Coxeter matrix: {0}")]
    InvalidMatrix(String),
    #[error("bilinear form is not positive definite (the group is infinite)")]
    NonPositiveDefinite,
    #[error("rank or order beyond support: {0}")]
    CapExceeded(String),
    #[error("point lies outside the closed fundamental chamber")]
    PointOutsideChamber,
    #[error("cannot parse group tag `{0}`")]
    Parse(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Symmetric Coxeter matrix with unit diagonal and off-diagonal entries `>= 2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoxeterMatrix {
    rank: usize,
    entries: Vec<u32>,
}

impl CoxeterMatrix {
    pub fn new(rows: Vec<Vec<u32>>) -> Result<Self, CoxeterError> {
        let rank = rows.len();
        let mut entries = Vec::with_capacity(rank * rank);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != rank {
                return Err(CoxeterError::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {rank}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        let m = Self { rank, entries };
        m.check()?;
        Ok(m)
    }

    /// The rank-zero matrix of the trivial group.
    pub fn empty() -> Self {
        Self { rank: 0, entries: Vec::new() }
    }

    fn check(&self) -> Result<(), CoxeterError> {
        for i in 0..self.rank {
            if self.get(i, i) != 1 {
                return Err(CoxeterError::InvalidMatrix(format!("diagonal entry ({i},{i}) must be 1")));
            }
            for j in 0..self.rank {
                if i == j {
                    continue;
                }
                if self.get(i, j) != self.get(j, i) {
                    return Err(CoxeterError::InvalidMatrix("matrix is not symmetric".into()));
                }
                if self.get(i, j) < 2 {
                    return Err(CoxeterError::InvalidMatrix(format!(
                        "off-diagonal entry ({i},{j}) = {} must be >= 2",
                        self.get(i, j)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.rank + j]
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.entries.chunks(self.rank.max(1)).take(self.rank).map(|r| r.to_vec()).collect()
    }

    /// Gram matrix `B_ij = -cos(pi / m_ij)` of the simple roots.
    pub fn bilinear_form(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rank, self.rank, |i, j| {
            -(std::f64::consts::PI / self.get(i, j) as f64).cos()
        })
    }

    /// Sub-matrix on the given generator indices.
    pub fn restrict(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut entries = Vec::with_capacity(k * k);
        for &i in idx {
            for &j in idx {
                entries.push(self.get(i, j));
            }
        }
        Self { rank: k, entries }
    }

    /// Isomorphism type read off the Coxeter diagram, e.g. `A1xI2:5`.
    /// Irreducible factors of rank 3 are named `A3`, `B3`, `H3`.
    pub fn type_name(&self) -> String {
        let k = self.rank();
        if k == 0 {
            return "trivial".into();
        }
        let mut seen = vec![false; k];
        let mut factors = Vec::new();
        for start in 0..k {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                for j in 0..k {
                    if !seen[j] && self.get(comp[i], j) >= 3 {
                        seen[j] = true;
                        comp.push(j);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            let labels: Vec<u32> =
                comp.iter().enumerate().flat_map(|(a, &x)| comp[a + 1..].iter().map(move |&y| (x, y))).map(|(x, y)| self.get(x, y)).filter(|&m| m >= 3).collect();
            let name = match comp.len() {
                1 => "A1".to_string(),
                2 => format!("I2:{}", labels[0]),
                _ => match labels.iter().copied().max() {
                    Some(4) => "B3".into(),
                    Some(5) => "H3".into(),
                    _ => "A3".into(),
                },
            };
            factors.push((comp.len(), name));
        }
        factors.sort();
        factors.into_iter().map(|(_, n)| n).collect::<Vec<_>>().join("x")
    }

    /// Lexicographically smallest relabelling, used to recognise isomorphic groups.
    pub fn canonical(&self) -> (Self, Vec<usize>) {
        let mut best: Option<(Self, Vec<usize>)> = None;
        for perm in permutations(self.rank) {
            let cand = self.restrict(&perm);
            let better = match &best {
                None => true,
                Some((b, _)) => cand.entries < b.entries,
            };
            if better {
                best = Some((cand, perm));
            }
        }
        best.unwrap_or_else(|| (Self::empty(), Vec::new()))
    }
}

/// Lower-triangular Cholesky factor with an explicit pivot tolerance.
fn cholesky(b: &DMatrix<f64>) -> Result<DMatrix<f64>, CoxeterError> {
    let n = b.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = b[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= PIVOT_TOL {
            return Err(CoxeterError::NonPositiveDefinite);
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = b[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// A group element: orthogonal matrix together with its sign `psi(g)`.
#[derive(Debug, Clone)]
pub struct Element {
    pub matrix: DMatrix<f64>,
    pub sign: i8,
    /// Length of the shortest generator word found by the closure.
    pub word_length: usize,
}

impl Element {
    pub fn is_identity(&self) -> bool {
        let d = self.matrix.nrows();
        max_abs_diff(&self.matrix, &DMatrix::identity(d, d)) <= ELEMENT_TOL
    }

    /// True when the matrix is a signed permutation.
    pub fn is_signed_permutation(&self) -> bool {
        is_signed_permutation(&self.matrix)
    }
}

pub(crate) fn is_signed_permutation(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| {
        let mut ones = 0;
        for j in 0..m.ncols() {
            let v = m[(i, j)].abs();
            if (v - 1.0).abs() <= 1e-12 {
                ones += 1;
            } else if v > 1e-12 {
                return false;
            }
        }
        ones == 1
    })
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Named groups accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedGroup {
    Trivial,
    A1,
    I2(u32),
    A1xA1,
    A1xI2(u32),
    A3,
    B3,
    H3,
    A1xA1xA1,
}

impl NamedGroup {
    pub fn matrix(&self) -> CoxeterMatrix {
        let rows = match *self {
            NamedGroup::Trivial => return CoxeterMatrix::empty(),
            NamedGroup::A1 => vec![vec![1]],
            NamedGroup::I2(m) => vec![vec![1, m], vec![m, 1]],
            NamedGroup::A1xA1 => vec![vec![1, 2], vec![2, 1]],
            NamedGroup::A1xI2(m) => vec![vec![1, 2, 2], vec![2, 1, m], vec![2, m, 1]],
            NamedGroup::A3 => vec![vec![1, 3, 2], vec![3, 1, 3], vec![2, 3, 1]],
            // The 4-edge comes first so the realization is a signed-permutation group.
            NamedGroup::B3 => vec![vec![1, 4, 2], vec![4, 1, 3], vec![2, 3, 1]],
            NamedGroup::H3 => vec![vec![1, 5, 2], vec![5, 1, 3], vec![2, 3, 1]],
            NamedGroup::A1xA1xA1 => vec![vec![1, 2, 2], vec![2, 1, 2], vec![2, 2, 1]],
        };
        CoxeterMatrix::new(rows).expect("named groups have valid matrices")
    }

    pub fn rank(&self) -> usize {
        self.matrix().rank()
    }

    pub fn build(&self) -> Result<CoxeterGroup, CoxeterError> {
        let mut g = CoxeterGroup::from_matrix(&self.matrix())?;
        g.tag = self.to_string();
        Ok(g)
    }
}

impl fmt::Display for NamedGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedGroup::Trivial => write!(f, "trivial"),
            NamedGroup::A1 => write!(f, "A1"),
            NamedGroup::I2(m) => write!(f, "I2:{m}"),
            NamedGroup::A1xA1 => write!(f, "A1xA1"),
            NamedGroup::A1xI2(m) => write!(f, "A1xI2:{m}"),
            NamedGroup::A3 => write!(f, "A3"),
            NamedGroup::B3 => write!(f, "B3"),
            NamedGroup::H3 => write!(f, "H3"),
            NamedGroup::A1xA1xA1 => write!(f, "A1xA1xA1"),
        }
    }
}

impl FromStr for NamedGroup {
    type Err = CoxeterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse_m = |m: &str| -> Result<u32, CoxeterError> {
            let m: u32 = m.parse().map_err(|_| CoxeterError::Parse(s.to_string()))?;
            if m < 2 {
                return Err(CoxeterError::Parse(format!("{s} (dihedral order m must be >= 2)")));
            }
            Ok(m)
        };
        Ok(match s {
            "trivial" | "1" => NamedGroup::Trivial,
            "A1" => NamedGroup::A1,
            "A1xA1" => NamedGroup::A1xA1,
            "A3" => NamedGroup::A3,
            "B3" => NamedGroup::B3,
            "H3" => NamedGroup::H3,
            "A1xA1xA1" => NamedGroup::A1xA1xA1,
            _ => {
                if let Some(m) = s.strip_prefix("A1xI2:") {
                    NamedGroup::A1xI2(parse_m(m)?)
                } else if let Some(m) = s.strip_prefix("I2:") {
                    NamedGroup::I2(parse_m(m)?)
                } else {
                    return Err(CoxeterError::Parse(s.to_string()));
                }
            }
        })
    }
}

/// Result of an orbit computation.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub points: Vec<DVector<f64>>,
    /// Smallest distance between two distinct orbit points (`None` for a fixed point).
    pub min_distance: Option<f64>,
    /// Largest distance between two orbit points.
    pub max_distance: Option<f64>,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Stabilizer of a point, as a list of element indices of the parent group.
#[derive(Debug, Clone)]
pub struct Stabilizer {
    pub indices: Vec<usize>,
    pub elements: Vec<Element>,
}

impl Stabilizer {
    pub fn order(&self) -> usize {
        self.indices.len()
    }
}

/// A finite reflection group realized by orthogonal matrices on `R^dim`.
#[derive(Debug, Clone)]
pub struct CoxeterGroup {
    tag: String,
    matrix: CoxeterMatrix,
    dim: usize,
    generators: Vec<DMatrix<f64>>,
    normals: Vec<DVector<f64>>,
    elements: Vec<Element>,
}

impl CoxeterGroup {
    /// Builds the group with the default element cap.
    pub fn from_matrix(m: &CoxeterMatrix) -> Result<Self, CoxeterError> {
        Self::from_matrix_capped(m, DEFAULT_ORDER_CAP)
    }

    pub fn from_matrix_capped(m: &CoxeterMatrix, cap: usize) -> Result<Self, CoxeterError> {
        if m.rank() > MAX_RANK {
            return Err(CoxeterError::CapExceeded(format!("rank {} > {MAX_RANK}", m.rank())));
        }
        let k = m.rank();
        let l = cholesky(&m.bilinear_form())?;
        let normals: Vec<DVector<f64>> =
            (0..k).map(|i| DVector::from_iterator(k, l.row(i).iter().copied())).collect();
        Self::from_normals(format!("{}", describe(m)), m.clone(), k, normals, cap)
    }

    fn from_normals(
        tag: String,
        matrix: CoxeterMatrix,
        dim: usize,
        normals: Vec<DVector<f64>>,
        cap: usize,
    ) -> Result<Self, CoxeterError> {
        let generators: Vec<DMatrix<f64>> = normals
            .iter()
            .map(|n| DMatrix::identity(dim, dim) - 2.0 * n * n.transpose())
            .collect();
        let elements = closure(&generators, dim, cap)?;
        Ok(Self { tag, matrix, dim, generators, normals, elements })
    }

    /// The trivial group acting on `R^0`.
    pub fn trivial() -> Self {
        Self {
            tag: "trivial".into(),
            matrix: CoxeterMatrix::empty(),
            dim: 0,
            generators: Vec::new(),
            normals: Vec::new(),
            elements: vec![Element { matrix: DMatrix::identity(0, 0), sign: 1, word_length: 0 }],
        }
    }

    /// Standard parabolic subgroup generated by the listed simple reflections,
    /// realized in the same ambient space.
    pub fn parabolic(&self, generators: &[usize]) -> Result<Self, CoxeterError> {
        let matrix = self.matrix.restrict(generators);
        let normals: Vec<_> = generators.iter().map(|&i| self.normals[i].clone()).collect();
        let tag = matrix.type_name();
        Self::from_normals(tag, matrix, self.dim, normals, DEFAULT_ORDER_CAP)
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn set_tag(&mut self, tag: impl Into<String>) {
        self.tag = tag.into();
    }

    pub fn coxeter_matrix(&self) -> &CoxeterMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.matrix.rank()
    }

    /// Dimension of the space the matrices act on.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn generators(&self) -> &[DMatrix<f64>] {
        &self.generators
    }

    pub fn chamber_normals(&self) -> &[DVector<f64>] {
        &self.normals
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    /// `psi(g)` for the element at `index`.
    pub fn sign(&self, index: usize) -> i8 {
        self.elements[index].sign
    }

    /// Index of the element equal to `m`, if any.
    pub fn find(&self, m: &DMatrix<f64>) -> Option<usize> {
        self.elements.iter().position(|e| max_abs_diff(&e.matrix, m) <= ELEMENT_TOL)
    }

    /// Index of the inverse of element `index`.
    pub fn inverse(&self, index: usize) -> usize {
        self.find(&self.elements[index].matrix.transpose()).expect("closed under inverse")
    }

    /// Index of the product `elements[a] * elements[b]`.
    pub fn product(&self, a: usize, b: usize) -> usize {
        self.find(&(&self.elements[a].matrix * &self.elements[b].matrix)).expect("closed under products")
    }

    /// True when every element is a signed permutation of the coordinate axes.
    pub fn is_grid_exact(&self) -> bool {
        self.elements.iter().all(Element::is_signed_permutation)
    }

    fn check_point(&self, q: &DVector<f64>) -> Result<(), CoxeterError> {
        if q.len() != self.dim {
            return Err(CoxeterError::DimensionMismatch { expected: self.dim, got: q.len() });
        }
        Ok(())
    }

    pub fn orbit(&self, q: &DVector<f64>) -> Result<Orbit, CoxeterError> {
        self.check_point(q)?;
        let mut points: Vec<DVector<f64>> = Vec::new();
        for e in &self.elements {
            let p = &e.matrix * q;
            if !points.iter().any(|x| (x - &p).amax() <= POINT_TOL) {
                points.push(p);
            }
        }
        let mut min_d: Option<f64> = None;
        let mut max_d: Option<f64> = None;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let d = (&points[i] - &points[j]).norm();
                min_d = Some(min_d.map_or(d, |m| m.min(d)));
                max_d = Some(max_d.map_or(d, |m| m.max(d)));
            }
        }
        Ok(Orbit { points, min_distance: min_d, max_distance: max_d })
    }

    pub fn isotropy(&self, q: &DVector<f64>) -> Result<Stabilizer, CoxeterError> {
        self.check_point(q)?;
        let indices: Vec<usize> = self
            .elements
            .iter()
            .enumerate()
            .filter(|(_, e)| (&e.matrix * q - q).amax() <= POINT_TOL)
            .map(|(i, _)| i)
            .collect();
        let elements = indices.iter().map(|&i| self.elements[i].clone()).collect();
        Ok(Stabilizer { indices, elements })
    }

    /// Indices of the chamber walls containing `q`; errors when `q` is outside the closed chamber.
    pub fn walls_containing(&self, q: &DVector<f64>) -> Result<Vec<usize>, CoxeterError> {
        self.check_point(q)?;
        let tol = POINT_TOL * q.norm().max(1.0);
        let mut walls = Vec::new();
        for (i, n) in self.normals.iter().enumerate() {
            let d = n.dot(q);
            if d < -tol {
                return Err(CoxeterError::PointOutsideChamber);
            }
            if d.abs() <= tol {
                walls.push(i);
            }
        }
        Ok(walls)
    }

    /// Number of chamber walls containing `q`; zero means the open chamber.
    pub fn chamber_stratum(&self, q: &DVector<f64>) -> Result<usize, CoxeterError> {
        self.walls_containing(q).map(|w| w.len())
    }

    /// Unit vector in the open chamber with equal inner products against every wall normal.
    pub fn chamber_interior_point(&self) -> DVector<f64> {
        let ones = DVector::from_element(self.rank(), 1.0);
        self.solve_in_root_span(&ones)
    }

    /// Unit vectors spanning the extremal rays of the chamber inside the root span.
    ///
    /// Ray `i` lies on every wall except wall `i`. For rank one the single ray is the wall
    /// normal itself, which is an interior point.
    pub fn chamber_rays(&self) -> Vec<DVector<f64>> {
        (0..self.rank())
            .map(|i| {
                let mut rhs = DVector::zeros(self.rank());
                rhs[i] = 1.0;
                self.solve_in_root_span(&rhs)
            })
            .collect()
    }

    // Solves <q, n_i> = rhs_i with q in the span of the normals, then normalizes.
    fn solve_in_root_span(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let k = self.rank();
        if k == 0 {
            return DVector::zeros(self.dim);
        }
        let n = DMatrix::from_fn(k, self.dim, |i, j| self.normals[i][j]);
        let gram = &n * n.transpose();
        let c = gram.lu().solve(rhs).expect("simple roots are independent");
        let q = n.transpose() * c;
        let norm = q.norm();
        q / norm
    }

    /// Serializable summary.
    pub fn info(&self) -> GroupInfo {
        GroupInfo {
            tag: self.tag.clone(),
            rank: self.rank(),
            order: self.order(),
            generators: self.generators.iter().map(mat_rows).collect(),
            chamber_normals: self.normals.iter().map(|n| n.iter().copied().collect()).collect(),
            signs: self.elements.iter().map(|e| e.sign).collect(),
            grid_exact: self.is_grid_exact(),
        }
    }
}

fn describe(m: &CoxeterMatrix) -> String {
    format!("coxeter{:?}", m.rows())
}

fn mat_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn closure(gens: &[DMatrix<f64>], dim: usize, cap: usize) -> Result<Vec<Element>, CoxeterError> {
    let mut elements = vec![Element { matrix: DMatrix::identity(dim, dim), sign: 1, word_length: 0 }];
    let mut queue = VecDeque::from([0usize]);
    while let Some(idx) = queue.pop_front() {
        for g in gens {
            let m = g * &elements[idx].matrix;
            if elements.iter().any(|e| max_abs_diff(&e.matrix, &m) <= ELEMENT_TOL) {
                continue;
            }
            if elements.len() >= cap {
                return Err(CoxeterError::CapExceeded(format!("more than {cap} elements")));
            }
            let det = m.determinant();
            let sign = if det > 0.0 { 1 } else { -1 };
            let word_length = elements[idx].word_length + 1;
            elements.push(Element { matrix: m, sign, word_length });
            queue.push_back(elements.len() - 1);
        }
    }
    Ok(elements)
}

/// JSON view of a group.
#[derive(Debug, Clone, Serialize)]
pub struct GroupInfo {
    pub tag: String,
    pub rank: usize,
    pub order: usize,
    pub generators: Vec<Vec<Vec<f64>>>,
    pub chamber_normals: Vec<Vec<f64>>,
    pub signs: Vec<i8>,
    pub grid_exact: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a1_has_two_elements() {
        let g = NamedGroup::A1.build().unwrap();
        assert_eq!(g.order(), 2);
        assert_eq!(g.elements()[0].sign, 1);
        assert_eq!(g.elements()[1].sign, -1);
        assert!((g.elements()[1].matrix[(0, 0)] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn generators_have_sign_minus_one() {
        for tag in ["A1", "I2:5", "A3", "B3", "H3", "A1xI2:3"] {
            let g: NamedGroup = tag.parse().unwrap();
            let g = g.build().unwrap();
            for s in g.generators() {
                let i = g.find(s).unwrap();
                assert_eq!(g.sign(i), -1, "{tag}");
            }
        }
    }

    #[test]
    fn products_of_two_generators_are_even() {
        let g = NamedGroup::H3.build().unwrap();
        let gens = g.generators();
        let i = g.find(&(&gens[0] * &gens[1])).unwrap();
        assert_eq!(g.sign(i), 1);
    }

    #[test]
    fn coxeter_relations_hold() {
        let g = NamedGroup::H3.build().unwrap();
        let m = g.coxeter_matrix().clone();
        for i in 0..3 {
            for j in 0..3 {
                let p = &g.generators()[i] * &g.generators()[j];
                let mut acc = DMatrix::identity(3, 3);
                for _ in 0..m.get(i, j) {
                    acc = &acc * &p;
                }
                assert!(max_abs_diff(&acc, &DMatrix::identity(3, 3)) < 1e-9);
            }
        }
    }

    #[test]
    fn affine_matrix_is_rejected() {
        // The affine group \tilde A_2: a triangle of 3-edges.
        let m = CoxeterMatrix::new(vec![vec![1, 3, 3], vec![3, 1, 3], vec![3, 3, 1]]).unwrap();
        assert_eq!(CoxeterGroup::from_matrix(&m).unwrap_err(), CoxeterError::NonPositiveDefinite);
    }

    #[test]
    fn invalid_matrices() {
        assert!(CoxeterMatrix::new(vec![vec![1, 1], vec![1, 1]]).is_err());
        assert!(CoxeterMatrix::new(vec![vec![1, 3], vec![4, 1]]).is_err());
        assert!(CoxeterMatrix::new(vec![vec![2]]).is_err());
    }

    #[test]
    fn order_cap_is_enforced() {
        let m = NamedGroup::H3.matrix();
        assert!(matches!(CoxeterGroup::from_matrix_capped(&m, 100), Err(CoxeterError::CapExceeded(_))));
    }

    #[test]
    fn parse_tags() {
        assert_eq!("I2:4".parse::<NamedGroup>().unwrap(), NamedGroup::I2(4));
        assert_eq!("A1xI2:3".parse::<NamedGroup>().unwrap(), NamedGroup::A1xI2(3));
        assert!("I2:1".parse::<NamedGroup>().is_err());
        assert!("E8".parse::<NamedGroup>().is_err());
        for tag in ["trivial", "A1", "I2:7", "A1xA1", "A1xI2:4", "A3", "B3", "H3", "A1xA1xA1"] {
            assert_eq!(tag.parse::<NamedGroup>().unwrap().to_string(), tag);
        }
    }

    #[test]
    fn orbit_of_origin_is_a_point() {
        let g = NamedGroup::B3.build().unwrap();
        let o = g.orbit(&DVector::zeros(3)).unwrap();
        assert_eq!(o.len(), 1);
        assert!(o.min_distance.is_none());
    }

    #[test]
    fn orbit_a1() {
        let g = NamedGroup::A1.build().unwrap();
        let o = g.orbit(&DVector::from_element(1, 1.0)).unwrap();
        let mut xs: Vec<f64> = o.points.iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![-1.0, 1.0]);
        assert_eq!(o.min_distance, Some(2.0));
    }

    #[test]
    fn orbit_i2_3_interior() {
        let g = NamedGroup::I2(3).build().unwrap();
        let q = g.chamber_interior_point();
        assert_eq!(g.chamber_stratum(&q).unwrap(), 0);
        assert_eq!(g.orbit(&q).unwrap().len(), 6);
    }

    #[test]
    fn isotropy_examples() {
        let g = NamedGroup::I2(2).build().unwrap();
        let q = g.chamber_interior_point();
        assert_eq!(g.isotropy(&q).unwrap().order(), 1);
        let on_mirror = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(g.isotropy(&on_mirror).unwrap().order(), 2);
        assert_eq!(g.isotropy(&DVector::zeros(2)).unwrap().order(), 4);
    }

    #[test]
    fn stratum_examples() {
        let g = NamedGroup::I2(4).build().unwrap();
        assert_eq!(g.chamber_stratum(&DVector::zeros(2)).unwrap(), 2);
        for ray in g.chamber_rays() {
            assert_eq!(g.chamber_stratum(&ray).unwrap(), 1);
        }
        let q = g.chamber_interior_point();
        assert!(matches!(g.chamber_stratum(&(-q)), Err(CoxeterError::PointOutsideChamber)));
    }

    #[test]
    fn b3_is_signed_permutations() {
        let g = NamedGroup::B3.build().unwrap();
        assert!(g.is_grid_exact());
        assert!(NamedGroup::I2(4).build().unwrap().is_grid_exact());
        assert!(!NamedGroup::I2(3).build().unwrap().is_grid_exact());
        assert!(!NamedGroup::A3.build().unwrap().is_grid_exact());
    }

    #[test]
    fn canonical_relabelling() {
        let a = CoxeterMatrix::new(vec![vec![1, 2], vec![2, 1]]).unwrap();
        let b = NamedGroup::B3.matrix();
        let c = CoxeterMatrix::new(vec![vec![1, 3, 2], vec![3, 1, 4], vec![2, 4, 1]]).unwrap();
        assert_eq!(b.canonical().0, c.canonical().0);
        assert_ne!(a.canonical().0, b.canonical().0);
    }

    #[test]
    fn type_names() {
        for (tag, name) in [("A1", "A1"), ("I2:2", "A1xA1"), ("I2:7", "I2:7"), ("A1xI2:3", "A1xI2:3"), ("B3", "B3"), ("H3", "H3"), ("A3", "A3"), ("A1xA1xA1", "A1xA1xA1")] {
            let g: NamedGroup = tag.parse().unwrap();
            assert_eq!(g.matrix().type_name(), name);
        }
        let b3 = NamedGroup::B3.build().unwrap();
        let mut tags: Vec<String> = [[0, 1], [1, 2]].iter().map(|p| b3.parabolic(p).unwrap().tag().to_string()).collect();
        tags.sort();
        assert_eq!(tags, ["I2:3", "I2:4"]);
        assert_eq!(b3.parabolic(&[0, 2]).unwrap().tag(), "A1xA1");
    }

    #[test]
    fn parabolic_subgroup_shares_realization() {
        let g = NamedGroup::B3.build().unwrap();
        let p = g.parabolic(&[1, 2]).unwrap();
        assert_eq!(p.order(), 6);
        assert_eq!(p.dim(), 3);
        for e in p.elements() {
            assert!(g.find(&e.matrix).is_some());
        }
    }
}
