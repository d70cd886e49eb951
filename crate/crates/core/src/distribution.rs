//! The ρ-map of the ruling distribution and its degree.
//!
//! For a frame `X_1, …, X_{m-1}` spanning the distribution `D_t`, the map
//! `ρ_t X_j = π^⊥ Ẋ_j` sends each frame field to the part of its derivative
//! orthogonal to `D_t`. Its rank is the degree at `t`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::multilinear::{
    orthonormal_basis, orthonormality_defect, rank_info, remove_components, singular_values, TolerancePolicy,
    VectorList,
};
use crate::parametric::frames::{polar, rotate_frame};
use crate::parametric::{FramedCurve, SampleGrid};

#[derive(Debug, Clone, Serialize)]
pub struct RhoSample {
    pub t: f64,
    #[serde(skip)]
    pub rho_vectors: VectorList,
    pub degree: usize,
    pub singular_values: Vec<f64>,
    /// Rank decision within a factor 10 of its cutoff.
    pub borderline: bool,
}

/// A maximal run of consecutive samples with equal degree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeSegment {
    pub degree: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub first_index: usize,
    pub last_index: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeProfile {
    pub samples: Vec<RhoSample>,
    pub constant_degree: Option<usize>,
    pub cylindrical: bool,
    pub noncylindrical: bool,
    pub segments: Vec<DegreeSegment>,
    pub borderline_t: Vec<f64>,
    /// `min(m - 1, n + 1)`, the largest degree a ruling distribution can have.
    pub degree_bound: usize,
}

impl DegreeProfile {
    pub fn degrees(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.degree).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.samples.iter().map(|s| s.degree).max().unwrap_or(0)
    }
}

/// `min(m - 1, n + 1)`
pub fn degree_bound(fc: &FramedCurve) -> usize {
    (fc.m() - 1).min(fc.codim() + 1)
}

/// ρ-images of the frame at `t`, given the frame and its derivative.
pub(crate) fn rho_vectors(frame: &VectorList, dframe: &VectorList) -> VectorList {
    let q = orthonormal_basis(frame, 1e-12);
    let out = dframe.iter().map(|v| remove_components(v, &q)).collect();
    VectorList::new(frame.dim(), out).expect("rho images share the frame dimension")
}

pub fn rho_at(fc: &FramedCurve, t: f64, tol: &TolerancePolicy) -> Result<RhoSample> {
    let frame = fc.frame_at(t)?;
    let defect = orthonormality_defect(&frame);
    if defect > tol.derivative_check_tol {
        return Err(GeomError::Frame { t, deviation: defect });
    }
    let rho = rho_vectors(&frame, &fc.frame_derivs_at(t, 1)?);
    let info = rank_info(&rho, tol);
    Ok(RhoSample {
        t,
        degree: info.rank,
        singular_values: info.singular_values,
        borderline: info.borderline,
        rho_vectors: rho,
    })
}

/// Splits per-sample degrees into maximal constant runs.
pub fn segment_degrees(ts: &[f64], degrees: &[usize]) -> Vec<DegreeSegment> {
    let mut out: Vec<DegreeSegment> = Vec::new();
    for (i, (&t, &d)) in ts.iter().zip(degrees).enumerate() {
        match out.last_mut() {
            Some(seg) if seg.degree == d => {
                seg.t_end = t;
                seg.last_index = i;
            }
            _ => out.push(DegreeSegment { degree: d, t_start: t, t_end: t, first_index: i, last_index: i }),
        }
    }
    out
}

pub fn degree_profile(fc: &FramedCurve, grid: &SampleGrid, tol: &TolerancePolicy) -> Result<DegreeProfile> {
    let samples = grid
        .t_samples()
        .par_iter()
        .map(|&t| rho_at(fc, t, tol))
        .collect::<Result<Vec<_>>>()?;
    let bound = degree_bound(fc);
    if let Some(s) = samples.iter().find(|s| s.degree > bound) {
        return Err(GeomError::Numeric(format!(
            "degree {} at t = {} exceeds the bound min(m-1, n+1) = {bound}",
            s.degree, s.t
        )));
    }
    let degrees: Vec<usize> = samples.iter().map(|s| s.degree).collect();
    let constant_degree = match degrees.split_first() {
        Some((&d0, rest)) if rest.iter().all(|&d| d == d0) => Some(d0),
        _ => None,
    };
    let nonempty = !degrees.is_empty();
    Ok(DegreeProfile {
        constant_degree,
        cylindrical: nonempty && degrees.iter().all(|&d| d == 0),
        noncylindrical: nonempty && degrees.iter().all(|&d| d > 0),
        segments: segment_degrees(grid.t_samples(), &degrees),
        borderline_t: samples.iter().filter(|s| s.borderline).map(|s| s.t).collect(),
        degree_bound: bound,
        samples,
    })
}

/// How a frame was rearranged to put the degree into its last fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PivotKind {
    Unchanged,
    /// `new[k] = old[permutation[k]]`
    Permuted(Vec<usize>),
    /// Frame rotated pointwise within its span (sampled on the grid).
    Rotated,
}

#[derive(Debug, Clone)]
pub struct PivotOutcome {
    pub curve: FramedCurve,
    pub kind: PivotKind,
    /// Minimum over the grid of the smallest singular value of the last `d` ρ-images.
    pub min_singular: f64,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn smallest_sv(rho: &VectorList, subset: &[usize]) -> f64 {
    let vs = subset.iter().map(|&i| rho[i].clone()).collect();
    let sub = VectorList::new(rho.dim(), vs).expect("subset of a consistent list");
    singular_values(&sub).last().copied().unwrap_or(0.0)
}

/// Reorders or rotates the frame so that the last `d` fields have ρ-images
/// of rank `d` at every grid sample.
///
/// The identity order is kept whenever its last `d` fields clear the cutoff
/// by a factor 10 everywhere. Otherwise the constant permutation maximizing
/// the worst-case smallest singular value is used. If no permutation works,
/// the frame is rotated by the eigenvectors of the Gram matrix of its
/// ρ-images, dominant directions last, kept continuous along the grid.
pub fn pivot_frame(fc: &FramedCurve, grid: &SampleGrid, d: usize, tol: &TolerancePolicy) -> Result<PivotOutcome> {
    let r = fc.frame().len();
    if d == 0 || d > r {
        return Err(GeomError::Input(format!("pivot degree must lie in 1..={r}, got {d}")));
    }
    let ts = grid.t_samples();
    let rhos: Vec<VectorList> = ts
        .par_iter()
        .map(|&t| Ok(rho_vectors(&fc.frame_at(t)?, &fc.frame_derivs_at(t, 1)?)))
        .collect::<Result<_>>()?;

    let score = |subset: &[usize]| rhos.iter().map(|rho| smallest_sv(rho, subset)).fold(f64::INFINITY, f64::min);
    let identity: Vec<usize> = (r - d..r).collect();
    let identity_score = score(&identity);
    if identity_score > 10.0 * tol.zero_abs_tol {
        return Ok(PivotOutcome { curve: fc.clone(), kind: PivotKind::Unchanged, min_singular: identity_score });
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    for subset in combinations(r, d) {
        let s = score(&subset);
        // later subsets win ties, keeping the frame closest to its given order
        if best.as_ref().is_none_or(|(b, _)| s >= *b) {
            best = Some((s, subset));
        }
    }
    let (best_score, subset) = best.expect("at least one subset");
    if best_score > tol.zero_abs_tol {
        let mut perm: Vec<usize> = (0..r).filter(|i| !subset.contains(i)).collect();
        perm.extend(&subset);
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(PivotOutcome { curve: fc.clone(), kind: PivotKind::Unchanged, min_singular: best_score });
        }
        let frame = perm.iter().map(|&i| fc.frame()[i].clone()).collect();
        return Ok(PivotOutcome {
            curve: fc.with_frame(frame)?,
            kind: PivotKind::Permuted(perm),
            min_singular: best_score,
        });
    }

    let qs = continuous_eigenframes(&rhos, d)?;
    let trimmed = fc.with_interval((ts[0], ts[ts.len() - 1]))?;
    let frame = rotate_frame(&trimmed, ts, &qs)?;
    let curve = trimmed.with_frame(frame)?;
    let last: Vec<usize> = (r - d..r).collect();
    let mut failing = Vec::new();
    let mut min_sv = f64::INFINITY;
    for &t in ts {
        let rho = rho_vectors(&curve.frame_at(t)?, &curve.frame_derivs_at(t, 1)?);
        let s = smallest_sv(&rho, &last);
        min_sv = min_sv.min(s);
        if s <= tol.zero_abs_tol {
            failing.push(t);
        }
    }
    if !failing.is_empty() {
        return Err(GeomError::Pivot { d, failing });
    }
    Ok(PivotOutcome { curve, kind: PivotKind::Rotated, min_singular: min_sv })
}

/// Orthogonal matrices whose columns are eigenvectors of `PᵀP` (ascending),
/// with each of the two blocks (kernel-side and dominant) aligned to the
/// previous sample by a Procrustes rotation.
fn continuous_eigenframes(rhos: &[VectorList], d: usize) -> Result<Vec<DMatrix<f64>>> {
    let mut out: Vec<DMatrix<f64>> = Vec::with_capacity(rhos.len());
    for rho in rhos {
        let p = rho.to_matrix();
        let r = p.ncols();
        let eig = (p.transpose() * &p).symmetric_eigen();
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let sorted = DMatrix::from_fn(r, r, |i, j| eig.eigenvectors[(i, order[j])]);
        let prev = out.last().cloned().unwrap_or_else(|| DMatrix::identity(r, r));
        let mut q = sorted.clone();
        for (start, width) in [(0, r - d), (r - d, d)] {
            if width == 0 {
                continue;
            }
            let block = sorted.columns(start, width).into_owned();
            let prev_block = prev.columns(start, width).into_owned();
            let w = polar(&(block.transpose() * prev_block))?;
            q.columns_mut(start, width).copy_from(&(block * w));
        }
        out.push(q);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parametric::build_builtin;
    use std::collections::BTreeMap;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn builtin(name: &str) -> FramedCurve {
        build_builtin(name, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn cylinder_has_degree_zero() {
        let fc = builtin("helix_cylinder");
        let s = rho_at(&fc, 1.3, &TolerancePolicy::default()).unwrap();
        assert_eq!(s.degree, 0);
        assert!(s.rho_vectors.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn helicoid_rho_closed_form() {
        let fc = builtin("helicoid");
        for t in [0.0, 0.9, 4.0f64] {
            let s = rho_at(&fc, t, &TolerancePolicy::default()).unwrap();
            assert_eq!(s.degree, 1);
            let v = &s.rho_vectors[0];
            assert!((v[0] + t.sin()).abs() < 1e-15 && (v[1] - t.cos()).abs() < 1e-15 && v[2].abs() < 1e-15);
        }
    }

    #[test]
    fn two_rotation_family_has_degree_two() {
        let fc = builtin("two_rotation_r5");
        let s = rho_at(&fc, 0.4, &TolerancePolicy::default()).unwrap();
        assert_eq!(s.degree, 2);
        assert!(s.degree <= degree_bound(&fc));
    }

    #[test]
    fn profiles_of_builtins() {
        let tol = TolerancePolicy::default();
        let p = |name: &str| {
            let fc = builtin(name);
            let grid = SampleGrid::uniform(fc.interval(), 50, 1.0, 3).unwrap();
            degree_profile(&fc, &grid, &tol).unwrap()
        };
        let cyl = p("helix_cylinder");
        assert_eq!(cyl.constant_degree, Some(0));
        assert!(cyl.cylindrical && !cyl.noncylindrical);
        let td = p("tangent_developable_helix");
        assert_eq!(td.constant_degree, Some(1));
        assert!(td.noncylindrical);
        // |ρ γ̇| = |γ̈| = 1/√2 for the a = b helix
        assert!((td.samples[7].singular_values[0] - FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn spliced_profile_splits_in_two() {
        let fc = builtin("bump_twist");
        let grid = SampleGrid::uniform(fc.interval(), 201, 1.0, 3).unwrap();
        let prof = degree_profile(&fc, &grid, &TolerancePolicy::default()).unwrap();
        assert_eq!(prof.constant_degree, None);
        assert!(!prof.cylindrical && !prof.noncylindrical);
        assert_eq!(prof.segments.len(), 2);
        assert_eq!(prof.segments[0].degree, 0);
        assert_eq!(prof.segments[1].degree, 1);
        assert!(prof.segments[0].t_end > 0.0 && prof.segments[0].t_end < 0.1);
    }

    #[test]
    fn pivot_swaps_when_last_field_is_inert() {
        let fc = builtin("helix_tangent_product_r4");
        let grid = SampleGrid::uniform(fc.interval(), 40, 1.0, 3).unwrap();
        let out = pivot_frame(&fc, &grid, 1, &TolerancePolicy::default()).unwrap();
        assert_eq!(out.kind, PivotKind::Permuted(vec![1, 0]));
        let t = 0.5;
        assert_eq!(out.curve.frame_at(t).unwrap()[0], fc.frame_at(t).unwrap()[1]);
    }

    #[test]
    fn pivot_keeps_good_frames() {
        let tol = TolerancePolicy::default();
        let fc = builtin("two_rotation_r5");
        let grid = SampleGrid::uniform(fc.interval(), 40, 1.0, 3).unwrap();
        let out = pivot_frame(&fc, &grid, 2, &tol).unwrap();
        assert_eq!(out.kind, PivotKind::Unchanged);
        assert!((out.min_singular - 1.0).abs() < 1e-12);
        let fc = builtin("helicoid");
        let grid = SampleGrid::uniform(fc.interval(), 40, 1.0, 3).unwrap();
        assert_eq!(pivot_frame(&fc, &grid, 1, &tol).unwrap().kind, PivotKind::Unchanged);
    }

    #[test]
    fn pivot_rotates_when_no_permutation_works() {
        let tol = TolerancePolicy::default();
        let fc = builtin("twisted_pair_r4");
        // t = 0 and t = π/2 are where ρX_1 and ρX_2 vanish
        let mut ts: Vec<f64> = (0..=50).map(|i| -0.5 + 2.5 * i as f64 / 50.0).collect();
        ts.push(0.0);
        ts.push(std::f64::consts::FRAC_PI_2);
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let grid = SampleGrid::new(ts, 1.0, 3).unwrap();
        let prof = degree_profile(&fc, &grid, &tol).unwrap();
        assert_eq!(prof.constant_degree, Some(1));
        let out = pivot_frame(&fc, &grid, 1, &tol).unwrap();
        assert_eq!(out.kind, PivotKind::Rotated);
        assert!(out.min_singular > 0.5);
        // same pointwise span
        for &t in grid.t_samples() {
            let a = fc.frame_at(t).unwrap();
            let b = out.curve.frame_at(t).unwrap();
            assert!(crate::multilinear::subspace_distance(&a, &b) < 1e-12);
            assert!(orthonormality_defect(&b) < 1e-12);
        }
    }

    #[test]
    fn pivot_rejects_impossible_degree() {
        let fc = builtin("helix_cylinder");
        let grid = SampleGrid::uniform(fc.interval(), 20, 1.0, 3).unwrap();
        match pivot_frame(&fc, &grid, 1, &TolerancePolicy::default()) {
            Err(GeomError::Pivot { failing, .. }) => assert_eq!(failing.len(), 20),
            other => panic!("expected pivot error, got {other:?}"),
        }
    }
}
