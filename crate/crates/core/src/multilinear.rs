//! Dense linear and exterior algebra on small ambient dimensions.
//!
//! Wedge products are only ever needed as norms and vanishing tests, so no
//! exterior-algebra coefficients are materialized. Rank decisions go through
//! singular values with a relative cutoff.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// A point or vector of the ambient Euclidean space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AmbientVector(Vec<f64>);

impl AmbientVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(GeomError::Input("ambient vector needs at least one coordinate".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(GeomError::Input(format!("coordinate {i} is not finite")));
        }
        Ok(AmbientVector(coords))
    }

    /// Builds a vector without the finiteness check; for internal arithmetic results.
    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        AmbientVector(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        AmbientVector(vec![0.0; dim])
    }

    /// The `i`-th standard basis vector (zero-based).
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        AmbientVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &AmbientVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: f64, x: &AmbientVector) {
        debug_assert_eq!(self.dim(), x.dim());
        for (a, b) in self.0.iter_mut().zip(&x.0) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, alpha: f64) -> AmbientVector {
        AmbientVector(self.0.iter().map(|a| alpha * a).collect())
    }

    /// Embeds into a larger ambient space by appending zero coordinates.
    pub fn padded(&self, dim: usize) -> AmbientVector {
        let mut v = self.0.clone();
        v.resize(dim.max(self.dim()), 0.0);
        AmbientVector(v)
    }

    pub fn distance(&self, other: &AmbientVector) -> f64 {
        (self - other).norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl Index<usize> for AmbientVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add<&AmbientVector> for &AmbientVector {
    type Output = AmbientVector;
    fn add(self, rhs: &AmbientVector) -> AmbientVector {
        AmbientVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Add for AmbientVector {
    type Output = AmbientVector;
    fn add(mut self, rhs: AmbientVector) -> AmbientVector {
        self += &rhs;
        self
    }
}

impl Sub<&AmbientVector> for &AmbientVector {
    type Output = AmbientVector;
    fn sub(self, rhs: &AmbientVector) -> AmbientVector {
        AmbientVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Sub for AmbientVector {
    type Output = AmbientVector;
    fn sub(mut self, rhs: AmbientVector) -> AmbientVector {
        self -= &rhs;
        self
    }
}

impl AddAssign<&AmbientVector> for AmbientVector {
    fn add_assign(&mut self, rhs: &AmbientVector) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&AmbientVector> for AmbientVector {
    fn sub_assign(&mut self, rhs: &AmbientVector) {
        self.axpy(-1.0, rhs);
    }
}

impl Mul<f64> for &AmbientVector {
    type Output = AmbientVector;
    fn mul(self, rhs: f64) -> AmbientVector {
        self.scaled(rhs)
    }
}

impl Mul<f64> for AmbientVector {
    type Output = AmbientVector;
    fn mul(mut self, rhs: f64) -> AmbientVector {
        self.0.iter_mut().for_each(|a| *a *= rhs);
        self
    }
}

impl Neg for AmbientVector {
    type Output = AmbientVector;
    fn neg(self) -> AmbientVector {
        self * -1.0
    }
}

/// An ordered list of vectors sharing one ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorList {
    dim: usize,
    vectors: Vec<AmbientVector>,
}

impl VectorList {
    pub fn new(dim: usize, vectors: Vec<AmbientVector>) -> Result<Self> {
        if dim == 0 {
            return Err(GeomError::Input("vector list dimension must be positive".into()));
        }
        if let Some((i, v)) = vectors.iter().enumerate().find(|(_, v)| v.dim() != dim) {
            return Err(GeomError::Input(format!(
                "vector {i} has dimension {} but the list expects {dim}",
                v.dim()
            )));
        }
        Ok(VectorList { dim, vectors })
    }

    /// Infers the dimension from the first member; fails on an empty list.
    pub fn from_vectors(vectors: Vec<AmbientVector>) -> Result<Self> {
        let dim = vectors
            .first()
            .map(AmbientVector::dim)
            .ok_or_else(|| GeomError::Input("cannot infer dimension of an empty list".into()))?;
        Self::new(dim, vectors)
    }

    pub fn empty(dim: usize) -> Self {
        VectorList { dim, vectors: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[AmbientVector] {
        &self.vectors
    }

    pub fn iter(&self) -> std::slice::Iter<'_, AmbientVector> {
        self.vectors.iter()
    }

    pub fn push(&mut self, v: AmbientVector) -> Result<()> {
        if v.dim() != self.dim {
            return Err(GeomError::Input(format!(
                "pushed vector has dimension {} but the list expects {}",
                v.dim(),
                self.dim
            )));
        }
        self.vectors.push(v);
        Ok(())
    }

    /// Column matrix (`dim` rows, one column per member).
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.vectors.len(), |r, c| self.vectors[c][r])
    }
}

impl std::ops::Index<usize> for VectorList {
    type Output = AmbientVector;
    fn index(&self, i: usize) -> &AmbientVector {
        &self.vectors[i]
    }
}

/// Numerical tolerances used throughout the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancePolicy {
    /// Singular values at or below this fraction of the largest are treated as zero.
    #[serde(default = "default_rank_rel_tol")]
    pub rank_rel_tol: f64,
    /// Absolute cutoff for wedge norms, residuals and vanishing vectors.
    #[serde(default = "default_zero_abs_tol")]
    pub zero_abs_tol: f64,
    /// Allowed disagreement between analytic derivatives and finite differences,
    /// and allowed deviation from unit speed / orthonormality.
    #[serde(default = "default_derivative_check_tol")]
    pub derivative_check_tol: f64,
}

fn default_rank_rel_tol() -> f64 {
    1e-8
}
fn default_zero_abs_tol() -> f64 {
    1e-8
}
fn default_derivative_check_tol() -> f64 {
    1e-7
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            rank_rel_tol: default_rank_rel_tol(),
            zero_abs_tol: default_zero_abs_tol(),
            derivative_check_tol: default_derivative_check_tol(),
        }
    }
}

impl TolerancePolicy {
    pub fn validate(&self) -> Result<()> {
        let all = [self.rank_rel_tol, self.zero_abs_tol, self.derivative_check_tol];
        if all.iter().any(|x| !x.is_finite() || *x <= 0.0) {
            return Err(GeomError::Config(format!("tolerances must be positive and finite: {self:?}")));
        }
        if self.rank_rel_tol >= 1.0 {
            return Err(GeomError::Config(format!(
                "rank_rel_tol must be below 1, got {}",
                self.rank_rel_tol
            )));
        }
        Ok(())
    }
}

/// Symmetric matrix of pairwise inner products.
pub fn gram_matrix(vs: &VectorList) -> Result<DMatrix<f64>> {
    if vs.is_empty() {
        return Err(GeomError::Input("gram matrix of an empty list".into()));
    }
    let k = vs.len();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let d = vs[i].dot(&vs[j]);
            g[(i, j)] = d;
            g[(j, i)] = d;
        }
    }
    Ok(g)
}

/// Norm of the wedge product `v_1 ∧ … ∧ v_k`, i.e. `sqrt(det G)`.
///
/// Evaluated as `|det R|` from a Householder QR of the vector matrix, which
/// equals the square root of the Gram determinant but does not lose half the
/// significant digits on nearly dependent tuples.
pub fn wedge_norm(vs: &VectorList) -> Result<f64> {
    if vs.len() > vs.dim() {
        return Err(GeomError::Input(format!(
            "wedge of {} vectors in dimension {} is identically zero",
            vs.len(),
            vs.dim()
        )));
    }
    if vs.is_empty() {
        return Ok(1.0);
    }
    let r = vs.to_matrix().qr().r();
    Ok((0..vs.len()).map(|i| r[(i, i)].abs()).product())
}

/// Singular values of the vector matrix, descending.
pub fn singular_values(vs: &VectorList) -> Vec<f64> {
    if vs.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = vs.to_matrix().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Outcome of a tolerance-based rank decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankInfo {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Effective cutoff a singular value had to exceed.
    pub cutoff: f64,
    /// Set when the smallest retained singular value lies within a factor 10
    /// of the cutoff; such decisions are fragile under tolerance changes.
    pub borderline: bool,
}

pub fn rank_info(vs: &VectorList, tol: &TolerancePolicy) -> RankInfo {
    let sv = singular_values(vs);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax < tol.zero_abs_tol {
        return RankInfo {
            rank: 0,
            borderline: smax > tol.zero_abs_tol / 10.0,
            cutoff: tol.zero_abs_tol,
            singular_values: sv,
        };
    }
    let cutoff = (tol.rank_rel_tol * smax).max(f64::MIN_POSITIVE);
    let rank = sv.iter().filter(|&&s| s > cutoff).count();
    let smallest_kept = sv[rank - 1];
    let borderline = smallest_kept < 10.0 * cutoff || smax < 10.0 * tol.zero_abs_tol;
    RankInfo { rank, singular_values: sv, cutoff, borderline }
}

/// Number of singular values above `rank_rel_tol * s_max`; zero when
/// `s_max < zero_abs_tol`.
pub fn numerical_rank(vs: &VectorList, tol: &TolerancePolicy) -> usize {
    rank_info(vs, tol).rank
}

/// Orthonormal basis of `span(vs)` by modified Gram-Schmidt with one
/// reorthogonalization pass. Members whose residual falls below
/// `rel_cut` times their own norm are dropped.
pub fn orthonormal_basis(vs: &VectorList, rel_cut: f64) -> Vec<AmbientVector> {
    let mut basis: Vec<AmbientVector> = Vec::with_capacity(vs.len());
    for v in vs.iter() {
        let scale = v.norm();
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = w.dot(q);
                w.axpy(-c, q);
            }
        }
        let n = w.norm();
        if n > rel_cut * scale {
            basis.push(w * (1.0 / n));
        }
    }
    basis
}

/// `v` minus its orthogonal projection onto `span(basis)`.
pub fn project_orthogonal(v: &AmbientVector, basis: &VectorList) -> Result<AmbientVector> {
    if v.dim() != basis.dim() {
        return Err(GeomError::Input(format!(
            "vector dimension {} does not match basis dimension {}",
            v.dim(),
            basis.dim()
        )));
    }
    let q = orthonormal_basis(basis, 1e-12);
    Ok(remove_components(v, &q))
}

/// Removes the components of `v` along an orthonormal set `q` (two passes).
pub(crate) fn remove_components(v: &AmbientVector, q: &[AmbientVector]) -> AmbientVector {
    let mut w = v.clone();
    for _ in 0..2 {
        for e in q {
            let c = w.dot(e);
            w.axpy(-c, e);
        }
    }
    w
}

/// Largest entry of `|G - I|` for the Gram matrix of `vs`.
pub fn orthonormality_defect(vs: &VectorList) -> f64 {
    match gram_matrix(vs) {
        Ok(g) => {
            let k = g.nrows();
            (g - DMatrix::<f64>::identity(k, k)).iter().fold(0.0, |m, x| m.max(x.abs()))
        }
        Err(_) => 0.0,
    }
}

/// Largest principal-angle residual between two subspaces: the largest norm
/// of a unit vector of either basis after removing its projection onto the
/// other. Zero iff the spans coincide.
pub fn subspace_distance(a: &VectorList, b: &VectorList) -> f64 {
    let qa = orthonormal_basis(a, 1e-12);
    let qb = orthonormal_basis(b, 1e-12);
    if qa.len() != qb.len() {
        return 1.0;
    }
    let one_way = |from: &[AmbientVector], onto: &[AmbientVector]| {
        from.iter().map(|v| remove_components(v, onto).norm()).fold(0.0, f64::max)
    };
    one_way(&qa, &qb).max(one_way(&qb, &qa))
}
