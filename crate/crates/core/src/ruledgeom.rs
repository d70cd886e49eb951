//! The ruled submanifold `σ(t, u) = γ(t) + Σ u^j X_j(t)` and its extrinsic
//! geometry: Jacobian, second fundamental form along coordinate curves,
//! planar points, flatness and the rank-one test.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::multilinear::{
    numerical_rank, orthonormal_basis, remove_components, singular_values, subspace_distance, wedge_norm,
    AmbientVector, TolerancePolicy, VectorList,
};
use crate::parametric::{FramedCurve, SampleGrid};

#[derive(Debug, Clone)]
pub struct RuledPatch {
    fc: FramedCurve,
    grid: SampleGrid,
    tol: TolerancePolicy,
}

impl RuledPatch {
    pub fn new(fc: FramedCurve, grid: SampleGrid, tol: TolerancePolicy) -> Result<Self> {
        tol.validate()?;
        fc.validate_on(&grid, &tol)?;
        Ok(RuledPatch { fc, grid, tol })
    }

    pub fn curve(&self) -> &FramedCurve {
        &self.fc
    }

    pub fn grid(&self) -> &SampleGrid {
        &self.grid
    }

    pub fn tol(&self) -> &TolerancePolicy {
        &self.tol
    }

    pub fn m(&self) -> usize {
        self.fc.m()
    }

    pub fn dim(&self) -> usize {
        self.fc.dim()
    }

    /// Same grid and tolerances over a different framed curve.
    pub fn with_curve(&self, fc: FramedCurve) -> Result<Self> {
        RuledPatch::new(fc, self.grid.clone(), self.tol.clone())
    }

    /// Every `(t, u)` of the sampling plan, `t`-major.
    pub fn sample_points(&self) -> Vec<(f64, Vec<f64>)> {
        let us = self.grid.u_points(self.m() - 1);
        self.grid.t_samples().iter().flat_map(|&t| us.iter().map(move |u| (t, u.clone()))).collect()
    }

    fn check_u(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.m() - 1 {
            return Err(GeomError::Input(format!("expected {} ruling coordinates, got {}", self.m() - 1, u.len())));
        }
        Ok(())
    }
}

fn combine(base: AmbientVector, u: &[f64], vs: &VectorList) -> AmbientVector {
    let mut out = base;
    for (c, v) in u.iter().zip(vs.iter()) {
        out.axpy(*c, v);
    }
    out
}

pub fn eval_sigma(p: &RuledPatch, t: f64, u: &[f64]) -> Result<AmbientVector> {
    p.check_u(u)?;
    Ok(combine(p.fc.directrix_at(t, 0)?, u, &p.fc.frame_at(t)?))
}

/// `∂σ/∂t, ∂σ/∂u¹, …, ∂σ/∂u^{m-1}`.
pub fn jacobian_sigma(p: &RuledPatch, t: f64, u: &[f64]) -> Result<VectorList> {
    p.check_u(u)?;
    let frame = p.fc.frame_at(t)?;
    let dt = combine(p.fc.directrix_at(t, 1)?, u, &p.fc.frame_derivs_at(t, 1)?);
    let mut vs = Vec::with_capacity(p.m());
    vs.push(dt);
    vs.extend(frame.iter().cloned());
    VectorList::new(p.dim(), vs)
}

pub fn jacobian_rank(p: &RuledPatch, t: f64, u: &[f64]) -> Result<usize> {
    Ok(numerical_rank(&jacobian_sigma(p, t, u)?, &p.tol))
}

pub fn is_regular(p: &RuledPatch, t: f64, u: &[f64]) -> Result<bool> {
    Ok(jacobian_rank(p, t, u)? == p.m())
}

fn regular_jacobian(p: &RuledPatch, t: f64, u: &[f64]) -> Result<VectorList> {
    let j = jacobian_sigma(p, t, u)?;
    let rank = numerical_rank(&j, &p.tol);
    if rank < p.m() {
        return Err(GeomError::Singular { t, detail: format!("Jacobian rank {rank} < {} at u = {u:?}", p.m()) });
    }
    Ok(j)
}

#[derive(Debug, Clone, Serialize)]
pub struct PointwiseSecondForm {
    pub t: f64,
    pub u: Vec<f64>,
    /// `II(x_0, x_0), II(x_0, x_1), …, II(x_0, x_{m-1})`.
    pub ii_vectors: Vec<AmbientVector>,
    pub first_normal_dim: usize,
    /// Largest tangential component left in any II vector.
    pub tangential_residual: f64,
}

struct SecondFormData {
    form: PointwiseSecondForm,
    /// Orthonormal tangent basis and the matrix `C` with `e = J C`.
    coord_to_ortho: DMatrix<f64>,
}

fn second_form_data(p: &RuledPatch, t: f64, u: &[f64]) -> Result<SecondFormData> {
    let j = regular_jacobian(p, t, u)?;
    let q = orthonormal_basis(&j, 1e-14);
    let dtt = combine(p.fc.directrix_at(t, 2)?, u, &p.fc.frame_derivs_at(t, 2)?);
    let mut ii = vec![remove_components(&dtt, &q)];
    ii.extend(p.fc.frame_derivs_at(t, 1)?.iter().map(|v| remove_components(v, &q)));
    let tangential_residual =
        ii.iter().flat_map(|v| q.iter().map(move |e| v.dot(e).abs())).fold(0.0, f64::max);
    let first_normal_dim = numerical_rank(&VectorList::new(p.dim(), ii.clone())?, &p.tol);

    let qr = j.to_matrix().qr();
    let r = qr.r();
    let c = r
        .try_inverse()
        .ok_or_else(|| GeomError::Singular { t, detail: "triangular factor of the Jacobian not invertible".into() })?;
    Ok(SecondFormData {
        form: PointwiseSecondForm { t, u: u.to_vec(), ii_vectors: ii, first_normal_dim, tangential_residual },
        coord_to_ortho: c,
    })
}

pub fn second_form_along_directrix(p: &RuledPatch, t: f64, u: &[f64]) -> Result<PointwiseSecondForm> {
    Ok(second_form_data(p, t, u)?.form)
}

/// Sectional curvatures of all coordinate 2-planes after orthonormalizing the
/// coordinate frame, by the Gauss equation. Ordered `(0,1), (0,2), …, (1,2), …`.
pub fn coordinate_sectional_curvatures(p: &RuledPatch, t: f64, u: &[f64]) -> Result<Vec<f64>> {
    let data = second_form_data(p, t, u)?;
    let m = p.m();
    let dim = p.dim();
    // II in coordinates: only the first row and column are nonzero
    let coord = |a: usize, b: usize| -> Option<&AmbientVector> {
        match (a, b) {
            (0, k) | (k, 0) => Some(&data.form.ii_vectors[k]),
            _ => None,
        }
    };
    let c = &data.coord_to_ortho;
    let ortho = |a: usize, b: usize| -> AmbientVector {
        let mut out = AmbientVector::zeros(dim);
        for x in 0..m {
            for y in 0..m {
                if let Some(v) = coord(x, y) {
                    let w = c[(x, a)] * c[(y, b)];
                    if w != 0.0 {
                        out.axpy(w, v);
                    }
                }
            }
        }
        out
    };
    let mut out = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            let ab = ortho(a, b);
            out.push(ortho(a, a).dot(&ortho(b, b)) - ab.dot(&ab));
        }
    }
    Ok(out)
}

fn par_over_samples<T: Send>(
    p: &RuledPatch,
    f: impl Fn(f64, &[f64]) -> Result<T> + Sync,
) -> Vec<(f64, Vec<f64>, Result<T>)> {
    p.sample_points()
        .into_par_iter()
        .map(|(t, u)| {
            let r = f(t, &u);
            (t, u, r)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FirstNormalEntry {
    pub t: f64,
    pub u: Vec<f64>,
    pub first_normal_dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FirstNormalReport {
    pub degree: usize,
    pub checked: usize,
    pub skipped_singular: usize,
    /// Observed dimension → number of regular samples.
    pub observed: BTreeMap<usize, usize>,
    pub violations: Vec<FirstNormalEntry>,
}

impl FirstNormalReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `d - 1 ≤ dim N¹ ≤ d + 1` at every regular grid point.
pub fn first_normal_bounds_check(p: &RuledPatch, d: usize) -> Result<FirstNormalReport> {
    let mut report =
        FirstNormalReport { degree: d, checked: 0, skipped_singular: 0, observed: BTreeMap::new(), violations: vec![] };
    for (t, u, r) in par_over_samples(p, |t, u| second_form_along_directrix(p, t, u)) {
        match r {
            Ok(form) => {
                report.checked += 1;
                let k = form.first_normal_dim;
                *report.observed.entry(k).or_default() += 1;
                if k + 1 < d || k > d + 1 {
                    report.violations.push(FirstNormalEntry { t, u, first_normal_dim: k });
                }
            }
            Err(GeomError::Singular { .. }) => report.skipped_singular += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// Regular grid points where the second fundamental form vanishes.
pub fn planar_points(p: &RuledPatch) -> Result<Vec<(f64, Vec<f64>)>> {
    let mut out = Vec::new();
    for (t, u, r) in par_over_samples(p, |t, u| second_form_along_directrix(p, t, u)) {
        match r {
            Ok(form) if form.first_normal_dim == 0 => out.push((t, u)),
            Ok(_) | Err(GeomError::Singular { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// `max_j |Ẋ_j ∧ γ̇ ∧ X_1 ∧ … ∧ X_{m-1}|` at `t`.
pub fn rank_one_residual(fc: &FramedCurve, t: f64) -> Result<f64> {
    let frame = fc.frame_at(t)?;
    let dframe = fc.frame_derivs_at(t, 1)?;
    if fc.m() + 1 > fc.dim() {
        // m + 1 vectors in R^m are always dependent
        return Ok(0.0);
    }
    let gdot = fc.directrix_at(t, 1)?;
    let mut worst = 0.0f64;
    for dx in dframe.iter() {
        let mut vs = vec![dx.clone(), gdot.clone()];
        vs.extend(frame.iter().cloned());
        worst = worst.max(wedge_norm(&VectorList::new(fc.dim(), vs)?)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct RankOneReport {
    pub is_rank_one: bool,
    pub planar_count: usize,
    pub max_residual: f64,
    /// `(t, max_j wedge residual)` per grid sample.
    pub residuals: Vec<(f64, f64)>,
}

pub fn rank_one_check(p: &RuledPatch) -> Result<RankOneReport> {
    let planar_count = planar_points(p)?.len();
    let residuals = p
        .grid
        .t_samples()
        .par_iter()
        .map(|&t| Ok((t, rank_one_residual(&p.fc, t)?)))
        .collect::<Result<Vec<_>>>()?;
    let max_residual = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(RankOneReport {
        is_rank_one: planar_count == 0 && max_residual < p.tol.zero_abs_tol,
        planar_count,
        max_residual,
        residuals,
    })
}

/// Whether the tangent spaces at `(t, u)` for each pair of ruling points agree.
pub fn tangent_space_stability(p: &RuledPatch, t: f64, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<bool> {
    for (a, b) in pairs {
        if tangent_space_distance(p, t, a, b)? >= p.tol.zero_abs_tol {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn tangent_space_distance(p: &RuledPatch, t: f64, a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(subspace_distance(&regular_jacobian(p, t, a)?, &regular_jacobian(p, t, b)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub max_distance: f64,
    pub compared: usize,
    pub skipped_singular: usize,
}

fn sample_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Compares tangent spaces at `pairs_per_t` random pairs of ruling points per
/// grid sample. Deterministic for a fixed seed.
pub fn stability_sweep(p: &RuledPatch, pairs_per_t: usize, seed: u64) -> Result<StabilityReport> {
    let e = p.grid.u_extent();
    let k = p.m() - 1;
    let per_t = p
        .grid
        .t_samples()
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, i));
            let mut worst = 0.0f64;
            let (mut compared, mut skipped) = (0, 0);
            for _ in 0..pairs_per_t {
                let a: Vec<f64> = (0..k).map(|_| rng.gen_range(-e..=e)).collect();
                let b: Vec<f64> = (0..k).map(|_| rng.gen_range(-e..=e)).collect();
                match tangent_space_distance(p, t, &a, &b) {
                    Ok(dist) => {
                        worst = worst.max(dist);
                        compared += 1;
                    }
                    Err(GeomError::Singular { .. }) => skipped += 1,
                    Err(err) => return Err(err),
                }
            }
            Ok((worst, compared, skipped))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_distance = per_t.iter().map(|r| r.0).fold(0.0, f64::max);
    Ok(StabilityReport {
        stable: max_distance < p.tol.zero_abs_tol,
        max_distance,
        compared: per_t.iter().map(|r| r.1).sum(),
        skipped_singular: per_t.iter().map(|r| r.2).sum(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatnessReport {
    pub max_abs_curvature: f64,
    /// `(t, u)` where the maximum was attained.
    pub location: Option<(f64, Vec<f64>)>,
    pub checked: usize,
    pub skipped_singular: usize,
}

impl FlatnessReport {
    pub fn is_flat(&self, threshold: f64) -> bool {
        self.max_abs_curvature < threshold
    }
}

pub const FLATNESS_TOL: f64 = 1e-6;

pub fn flatness_check(p: &RuledPatch) -> Result<FlatnessReport> {
    let mut report = FlatnessReport { max_abs_curvature: 0.0, location: None, checked: 0, skipped_singular: 0 };
    for (t, u, r) in par_over_samples(p, |t, u| coordinate_sectional_curvatures(p, t, u)) {
        match r {
            Ok(ks) => {
                report.checked += 1;
                let k = ks.iter().fold(0.0f64, |a, k| a.max(k.abs()));
                if report.location.is_none() || k > report.max_abs_curvature {
                    report.max_abs_curvature = k;
                    report.location = Some((t, u));
                }
            }
            Err(GeomError::Singular { .. }) => report.skipped_singular += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// Smallest singular value of the Jacobian relative to its largest.
pub fn jacobian_conditioning(p: &RuledPatch, t: f64, u: &[f64]) -> Result<f64> {
    let s = singular_values(&jacobian_sigma(p, t, u)?);
    Ok(match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    })
}
