//! The striction sheet `β` of a ruled patch of degree `d ≥ 1`.
//!
//! With the frame pivoted so that `ρX_{m-d}, …, ρX_{m-1}` are independent,
//! the solved coordinates `u^{m-d}, …, u^{m-1}` satisfy `A u = b` where `A` is
//! the Gram matrix of those ρ-images and `b` is affine in the free
//! coordinates. Both are assembled together with their `t`-derivatives, so
//! `β̇` is exact up to the accuracy of the field representations.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{pivot_frame, PivotKind};
use crate::error::{GeomError, Result};
use crate::multilinear::{
    gram_matrix, numerical_rank, orthonormal_basis, remove_components, wedge_norm, AmbientVector, TolerancePolicy,
    VectorList,
};
use crate::parametric::{arclength_reparametrize, FramedCurve, ParamVectorField, VecJet};
use crate::ruledgeom::{jacobian_rank, RuledPatch};

/// Directrix and frame jets at one `t`, with the ρ-images and their derivatives.
#[derive(Debug, Clone)]
struct LocalFrame {
    gamma: VecJet,
    x: Vec<VecJet>,
    rho: Vec<AmbientVector>,
    rho_dot: Vec<AmbientVector>,
}

impl LocalFrame {
    fn at(fc: &FramedCurve, t: f64) -> Result<Self> {
        let gamma = fc.directrix_jet(t)?;
        let x = fc.frame_jets(t)?;
        let values = VectorList::new(fc.dim(), x.iter().map(|j| j.v.clone()).collect())?;
        let q = orthonormal_basis(&values, 1e-12);
        let rho = x.iter().map(|j| remove_components(&j.d1, &q)).collect();
        // d/dt (Ẋ_j - Σ_k ⟨Ẋ_j, X_k⟩ X_k) for an orthonormal frame
        let rho_dot = x
            .iter()
            .map(|xj| {
                let mut out = xj.d2.clone();
                for xk in &x {
                    out.axpy(-(xj.d2.dot(&xk.v) + xj.d1.dot(&xk.d1)), &xk.v);
                    out.axpy(-xj.d1.dot(&xk.v), &xk.d1);
                }
                out
            })
            .collect();
        Ok(LocalFrame { gamma, x, rho, rho_dot })
    }

    fn frame_values(&self) -> Vec<AmbientVector> {
        self.x.iter().map(|j| j.v.clone()).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StrictionSystem {
    pub t: f64,
    pub d: usize,
    /// `A_{hk} = ⟨Ẋ_k, ρX_h⟩` over the last `d` fields.
    #[serde(serialize_with = "ser_matrix")]
    pub a: DMatrix<f64>,
    /// Column 0 is the constant part of `b`, column `1 + i` the coefficient of free `u^i`.
    #[serde(serialize_with = "ser_matrix")]
    pub b_affine: DMatrix<f64>,
    #[serde(skip)]
    pub a_dot: DMatrix<f64>,
    #[serde(skip)]
    pub b_affine_dot: DMatrix<f64>,
    /// The last `d` ρ-images.
    #[serde(skip)]
    pub rho_last: VectorList,
    pub min_eigenvalue: f64,
}

fn ser_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
    serde::Serialize::serialize(&rows, s)
}

impl StrictionSystem {
    /// `max |A - Aᵀ|`
    pub fn asymmetry(&self) -> f64 {
        (&self.a - self.a.transpose()).amax()
    }

    /// `max |A - Gram(ρX_{m-d}, …, ρX_{m-1})|`
    pub fn gram_defect(&self) -> f64 {
        gram_matrix(&self.rho_last).map(|g| (&self.a - g).amax()).unwrap_or(f64::INFINITY)
    }
}

fn check_degree(fc: &FramedCurve, d: usize) -> Result<()> {
    let r = fc.frame().len();
    if d == 0 || d > r {
        return Err(GeomError::Input(format!("striction needs degree in 1..={r}, got {d}")));
    }
    Ok(())
}

fn system_from(lf: &LocalFrame, t: f64, d: usize, tol: &TolerancePolicy) -> Result<StrictionSystem> {
    let r = lf.x.len();
    let solved: Vec<usize> = (r - d..r).collect();
    let nfree = r - d;
    let a = DMatrix::from_fn(d, d, |h, k| lf.x[solved[k]].d1.dot(&lf.rho[solved[h]]));
    let a_dot = DMatrix::from_fn(d, d, |h, k| {
        let (xk, h) = (&lf.x[solved[k]], solved[h]);
        xk.d2.dot(&lf.rho[h]) + xk.d1.dot(&lf.rho_dot[h])
    });
    let mut b = DMatrix::zeros(d, nfree + 1);
    let mut b_dot = DMatrix::zeros(d, nfree + 1);
    for (row, &h) in solved.iter().enumerate() {
        let (rho, rho_dot) = (&lf.rho[h], &lf.rho_dot[h]);
        b[(row, 0)] = -lf.gamma.d1.dot(rho);
        b_dot[(row, 0)] = -(lf.gamma.d2.dot(rho) + lf.gamma.d1.dot(rho_dot));
        for i in 0..nfree {
            b[(row, 1 + i)] = -lf.x[i].d1.dot(rho);
            b_dot[(row, 1 + i)] = -(lf.x[i].d2.dot(rho) + lf.x[i].d1.dot(rho_dot));
        }
    }
    let sym = (&a + a.transpose()) * 0.5;
    let min_eigenvalue = sym.symmetric_eigenvalues().min();
    if min_eigenvalue < tol.zero_abs_tol {
        return Err(GeomError::Degeneracy {
            t,
            detail: format!("striction matrix not positive definite (smallest eigenvalue {min_eigenvalue:e})"),
        });
    }
    let dim = lf.gamma.dim();
    let rho_last = VectorList::new(dim, solved.iter().map(|&h| lf.rho[h].clone()).collect())?;
    Ok(StrictionSystem { t, d, a, b_affine: b, a_dot, b_affine_dot: b_dot, rho_last, min_eigenvalue })
}

/// Assembles `A` and the affine `b` at `t` for a pivoted frame.
pub fn assemble_system(fc: &FramedCurve, t: f64, d: usize, tol: &TolerancePolicy) -> Result<StrictionSystem> {
    check_degree(fc, d)?;
    system_from(&LocalFrame::at(fc, t)?, t, d, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Cholesky,
    PivotedQr,
}

/// Solves for the coefficient matrix `U` (solved coordinates = `U · (1, u_free)`)
/// and its derivative `U̇ = A⁻¹ (ḃ - Ȧ U)`.
fn solve_system(sys: &StrictionSystem, tol: &TolerancePolicy) -> Result<(DMatrix<f64>, DMatrix<f64>, SolveMethod)> {
    if sys.min_eigenvalue >= 10.0 * tol.zero_abs_tol {
        if let Some(ch) = sys.a.clone().cholesky() {
            let u = ch.solve(&sys.b_affine);
            let u_dot = ch.solve(&(&sys.b_affine_dot - &sys.a_dot * &u));
            return Ok((u, u_dot, SolveMethod::Cholesky));
        }
    }
    let qr = sys.a.clone().col_piv_qr();
    let fail = || GeomError::Degeneracy { t: sys.t, detail: "pivoted QR solve of the striction system failed".into() };
    let u = qr.solve(&sys.b_affine).ok_or_else(fail)?;
    let u_dot = qr.solve(&(&sys.b_affine_dot - &sys.a_dot * &u)).ok_or_else(fail)?;
    Ok((u, u_dot, SolveMethod::PivotedQr))
}

/// `β` and its partials at one argument.
#[derive(Debug, Clone, Serialize)]
pub struct SheetPoint {
    pub t: f64,
    pub u_free: Vec<f64>,
    pub solved: Vec<f64>,
    pub beta: AmbientVector,
    pub beta_dot: AmbientVector,
    /// `∂β/∂u^i` for the free coordinates.
    pub beta_u: Vec<AmbientVector>,
}

impl SheetPoint {
    /// `β̇, ∂β/∂u¹, …` as a list.
    pub fn partials(&self) -> VectorList {
        let mut vs = vec![self.beta_dot.clone()];
        vs.extend(self.beta_u.iter().cloned());
        VectorList::from_vectors(vs).expect("partials share one dimension")
    }

    /// Full ruling coordinates `(u_free, solved)` in the pivoted frame.
    pub fn ruling_coords(&self) -> Vec<f64> {
        self.u_free.iter().chain(&self.solved).copied().collect()
    }
}

fn sheet_point(lf: &LocalFrame, t: f64, u: &DMatrix<f64>, u_dot: &DMatrix<f64>, u_free: &[f64]) -> SheetPoint {
    let d = u.nrows();
    let r = lf.x.len();
    let w = DVector::from_iterator(u_free.len() + 1, std::iter::once(1.0).chain(u_free.iter().copied()));
    let s = u * &w;
    let s_dot = u_dot * &w;
    let mut beta = lf.gamma.v.clone();
    let mut beta_dot = lf.gamma.d1.clone();
    for (i, &c) in u_free.iter().enumerate() {
        beta.axpy(c, &lf.x[i].v);
        beta_dot.axpy(c, &lf.x[i].d1);
    }
    for k in 0..d {
        let xh = &lf.x[r - d + k];
        beta.axpy(s[k], &xh.v);
        beta_dot.axpy(s[k], &xh.d1);
        beta_dot.axpy(s_dot[k], &xh.v);
    }
    let beta_u = (0..u_free.len())
        .map(|i| {
            let mut v = lf.x[i].v.clone();
            for k in 0..d {
                v.axpy(u[(k, 1 + i)], &lf.x[r - d + k].v);
            }
            v
        })
        .collect();
    SheetPoint { t, u_free: u_free.to_vec(), solved: s.iter().copied().collect(), beta, beta_dot, beta_u }
}

#[derive(Debug, Clone)]
pub struct SheetSample {
    pub t: f64,
    pub system: StrictionSystem,
    pub coeffs: DMatrix<f64>,
    pub coeffs_dot: DMatrix<f64>,
    pub method: SolveMethod,
    frame: LocalFrame,
}

impl SheetSample {
    pub fn point(&self, u_free: &[f64]) -> SheetPoint {
        sheet_point(&self.frame, self.t, &self.coeffs, &self.coeffs_dot, u_free)
    }

    pub fn frame_values(&self) -> Vec<AmbientVector> {
        self.frame.frame_values()
    }

    pub fn rho(&self) -> &[AmbientVector] {
        &self.frame.rho
    }

    pub fn frame_derivs(&self) -> Vec<AmbientVector> {
        self.frame.x.iter().map(|j| j.d1.clone()).collect()
    }
}

/// Solved striction sheet over the grid of a (pivoted) patch.
#[derive(Debug, Clone)]
pub struct StrictionSheet {
    d: usize,
    patch: RuledPatch,
    pivot: PivotKind,
    samples: Vec<SheetSample>,
    free_points: Vec<Vec<f64>>,
    max_defining_residual: f64,
}

impl StrictionSheet {
    pub fn degree(&self) -> usize {
        self.d
    }

    /// The patch in the pivoted frame the sheet coordinates refer to.
    pub fn patch(&self) -> &RuledPatch {
        &self.patch
    }

    pub fn pivot(&self) -> &PivotKind {
        &self.pivot
    }

    pub fn samples(&self) -> &[SheetSample] {
        &self.samples
    }

    /// Grid values of the `m - d - 1` free coordinates.
    pub fn free_points(&self) -> &[Vec<f64>] {
        &self.free_points
    }

    /// Largest `|⟨β̇, ρX_h⟩|` over the grid.
    pub fn max_defining_residual(&self) -> f64 {
        self.max_defining_residual
    }

    /// `t` values where the fallback solver was used.
    pub fn fallback_ts(&self) -> Vec<f64> {
        self.samples.iter().filter(|s| s.method == SolveMethod::PivotedQr).map(|s| s.t).collect()
    }

    /// Every grid point of the sheet, `t`-major.
    pub fn grid_points(&self) -> Vec<SheetPoint> {
        self.samples.iter().flat_map(|s| self.free_points.iter().map(move |u| s.point(u))).collect()
    }

    /// Evaluates the sheet at any `t` of the patch interval by solving the
    /// system there.
    pub fn evaluate(&self, t: f64, u_free: &[f64]) -> Result<SheetPoint> {
        if u_free.len() + self.d + 1 != self.patch.m() {
            return Err(GeomError::Input(format!("expected {} free coordinates", self.patch.m() - self.d - 1)));
        }
        let lf = LocalFrame::at(self.patch.curve(), t)?;
        let sys = system_from(&lf, t, self.d, self.patch.tol())?;
        let (u, u_dot, _) = solve_system(&sys, self.patch.tol())?;
        Ok(sheet_point(&lf, t, &u, &u_dot, u_free))
    }
}

/// Pivots the frame, solves the striction system at every grid sample and
/// verifies `⟨β̇, ρX_h⟩ = 0` on the whole grid.
pub fn solve_striction(p: &RuledPatch, d: usize) -> Result<StrictionSheet> {
    check_degree(p.curve(), d)?;
    let pivot = pivot_frame(p.curve(), p.grid(), d, p.tol())?;
    let patch = match pivot.kind {
        PivotKind::Unchanged => p.clone(),
        _ => p.with_curve(pivot.curve)?,
    };
    let tol = patch.tol().clone();
    let samples = patch
        .grid()
        .t_samples()
        .par_iter()
        .map(|&t| {
            let frame = LocalFrame::at(patch.curve(), t)?;
            let system = system_from(&frame, t, d, &tol)?;
            let (coeffs, coeffs_dot, method) = solve_system(&system, &tol)?;
            Ok(SheetSample { t, system, coeffs, coeffs_dot, method, frame })
        })
        .collect::<Result<Vec<_>>>()?;
    let free_points = patch.grid().u_points(patch.m() - d - 1);
    let r = patch.m() - 1;
    let mut worst = 0.0f64;
    let mut worst_t = f64::NAN;
    for s in &samples {
        for u in &free_points {
            let pt = s.point(u);
            for h in r - d..r {
                let v = pt.beta_dot.dot(&s.frame.rho[h]).abs();
                if v > worst || worst_t.is_nan() {
                    worst = v;
                    worst_t = s.t;
                }
            }
        }
    }
    if worst >= tol.zero_abs_tol {
        return Err(GeomError::Numeric(format!(
            "striction condition violated at t = {worst_t}: |<beta_dot, rho X>| = {worst:e}"
        )));
    }
    Ok(StrictionSheet { d, patch, pivot: pivot.kind, samples, free_points, max_defining_residual: worst })
}

/// Numerical rank of `(β̇, ∂β/∂u^i)`; at least `m - d - 1` on a valid sheet.
pub fn striction_jacobian_rank(sheet: &StrictionSheet, point: &SheetPoint) -> usize {
    numerical_rank(&point.partials(), sheet.patch.tol())
}

/// Smallest striction Jacobian rank over the free grid at each sample.
pub fn striction_rank_profile(sheet: &StrictionSheet) -> Vec<usize> {
    sheet
        .samples
        .iter()
        .map(|s| sheet.free_points.iter().map(|u| striction_jacobian_rank(sheet, &s.point(u))).min().unwrap_or(0))
        .collect()
}

fn wedge_with_frame(first: &[&AmbientVector], frame: &[AmbientVector]) -> Result<f64> {
    let dim = frame[0].dim();
    if first.len() + frame.len() > dim {
        return Ok(0.0);
    }
    let vs = first.iter().map(|v| (*v).clone()).chain(frame.iter().cloned()).collect();
    wedge_norm(&VectorList::new(dim, vs)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularEntry {
    pub t: f64,
    pub u_free: Vec<f64>,
    pub wedge_residual: f64,
    pub singular: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OffSheetSample {
    pub t: f64,
    pub u: Vec<f64>,
    pub regular: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularLocus {
    pub entries: Vec<SingularEntry>,
    pub singular_fraction: f64,
    pub off_sheet_delta: f64,
    pub off_sheet: Vec<OffSheetSample>,
}

impl SingularLocus {
    pub fn singular_count(&self) -> usize {
        self.entries.iter().filter(|e| e.singular).count()
    }

    pub fn off_sheet_all_regular(&self) -> bool {
        self.off_sheet.iter().all(|s| s.regular)
    }

    /// Per-sample flag: every free point at that `t` is singular.
    pub fn singular_by_t(&self) -> Vec<(f64, bool)> {
        let mut out: Vec<(f64, bool)> = Vec::new();
        for e in &self.entries {
            match out.last_mut() {
                Some((t, s)) if *t == e.t => *s &= e.singular,
                _ => out.push((e.t, e.singular)),
            }
        }
        out
    }
}

pub const OFF_SHEET_SAMPLES: usize = 32;

/// Flags singular points of `σ` along the sheet and spot-checks random
/// points pushed off the sheet by `δ = 10 ×` the ruling grid spacing.
pub fn singular_locus(sheet: &StrictionSheet, off_sheet_samples: usize, seed: u64) -> Result<SingularLocus> {
    let tol = sheet.patch.tol();
    let mut entries = Vec::new();
    for s in &sheet.samples {
        let frame = s.frame_values();
        for u in &sheet.free_points {
            let pt = s.point(u);
            let w = wedge_with_frame(&[&pt.beta_dot], &frame)?;
            entries.push(SingularEntry { t: s.t, u_free: u.clone(), wedge_residual: w, singular: w < tol.zero_abs_tol });
        }
    }
    let singular_fraction = entries.iter().filter(|e| e.singular).count() as f64 / entries.len().max(1) as f64;

    let grid = sheet.patch.grid();
    let delta = 10.0 * grid.u_spacing();
    let e = grid.u_extent();
    let nfree = sheet.patch.m() - sheet.d - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut off_sheet = Vec::with_capacity(off_sheet_samples);
    for _ in 0..off_sheet_samples {
        let i = rng.gen_range(0..sheet.samples.len());
        let u_free: Vec<f64> = (0..nfree).map(|_| rng.gen_range(-e..=e)).collect();
        let mut dir: Vec<f64> = (0..sheet.d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n < 1e-3 {
            dir = vec![0.0; sheet.d];
            dir[0] = 1.0;
        } else {
            dir.iter_mut().for_each(|x| *x /= n);
        }
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let s = &sheet.samples[i];
        let pt = s.point(&u_free);
        let mut u = pt.u_free.clone();
        u.extend(pt.solved.iter().zip(&dir).map(|(x, d)| x + sign * delta * d));
        let regular = jacobian_rank(&sheet.patch, s.t, &u)? == sheet.patch.m();
        off_sheet.push(OffSheetSample { t: s.t, u, regular });
    }
    Ok(SingularLocus { entries, singular_fraction, off_sheet_delta: delta, off_sheet })
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceRow {
    pub t: f64,
    pub u_free: Vec<f64>,
    /// Frame index (0-based) in the pivoted frame.
    pub j: usize,
    /// `|β̇ ∧ X_1 ∧ … ∧ X_{m-1}|`
    pub without: f64,
    /// `|Ẋ_j ∧ β̇ ∧ X_1 ∧ … ∧ X_{m-1}| / |ρX_j|`
    pub with: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceTable {
    pub rows: Vec<EquivalenceRow>,
    /// `(t, j)` skipped because `ρX_j` vanishes there.
    pub skipped: Vec<(f64, usize)>,
    pub all_agree: bool,
}

/// Compares the two forms of the singularity condition, with and without
/// the extra factor `Ẋ_j`, at every sheet grid point and every `j` with
/// `ρX_j ≠ 0`.
pub fn equivalent_condition_check(sheet: &StrictionSheet) -> Result<EquivalenceTable> {
    let tol = sheet.patch.tol().zero_abs_tol;
    let dim = sheet.patch.dim();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    if sheet.patch.m() + 1 > dim {
        return Err(GeomError::Input("extended wedge needs m + 1 <= ambient dimension".into()));
    }
    for s in &sheet.samples {
        let frame = s.frame_values();
        let dframe = s.frame_derivs();
        for (j, rho) in s.rho().iter().enumerate() {
            let rn = rho.norm();
            if rn < tol {
                skipped.push((s.t, j));
                continue;
            }
            for u in &sheet.free_points {
                let pt = s.point(u);
                let without = wedge_with_frame(&[&pt.beta_dot], &frame)?;
                let with = wedge_with_frame(&[&dframe[j], &pt.beta_dot], &frame)? / rn;
                rows.push(EquivalenceRow {
                    t: s.t,
                    u_free: u.clone(),
                    j,
                    without,
                    with,
                    agree: (without < tol) == (with < tol),
                });
            }
        }
    }
    let all_agree = rows.iter().all(|r| r.agree);
    Ok(EquivalenceTable { rows, skipped, all_agree })
}

#[derive(Debug, Clone, Serialize)]
pub struct OffsetResult {
    pub offset: Vec<f64>,
    pub deviation: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub offsets: Vec<OffsetResult>,
    pub max_deviation: f64,
}

/// `c · (1, …, 1)` for `c ∈ {1, 1/2, -1/2}`.
pub fn default_offsets(m: usize) -> Vec<Vec<f64>> {
    [1.0, 0.5, -0.5].iter().map(|&c| vec![c; m - 1]).collect()
}

/// Distance from `x` to the affine set `{β(t_i, v)}` of the sheet on one ruling.
fn distance_to_ruling_sheet(sample: &SheetSample, nfree: usize, x: &AmbientVector) -> f64 {
    let base = sample.point(&vec![0.0; nfree]);
    let diff = x - &base.beta;
    if nfree == 0 {
        return diff.norm();
    }
    let q = orthonormal_basis(&VectorList::from_vectors(base.beta_u.clone()).expect("nonempty"), 1e-12);
    remove_components(&diff, &q).norm()
}

/// Recomputes the sheet from shifted directrices `γ_c = σ(·, c)` (made
/// unit-speed) and measures how far the new sheet points lie from the
/// original sheet on the same ruling.
pub fn directrix_invariance(sheet: &StrictionSheet, offsets: &[Vec<f64>]) -> Result<InvarianceReport> {
    let p = sheet.patch();
    let fc = p.curve();
    let ts = p.grid().t_samples();
    let interval = (ts[0], ts[ts.len() - 1]);
    let nfree = p.m() - sheet.d - 1;
    let mut results = Vec::with_capacity(offsets.len());
    for c in offsets {
        if c.len() != p.m() - 1 {
            return Err(GeomError::Input(format!("offset needs {} coordinates", p.m() - 1)));
        }
        let mut terms = vec![(1.0, fc.directrix().clone())];
        terms.extend(c.iter().zip(fc.frame()).map(|(&cj, x)| (cj, x.clone())));
        let shifted = ParamVectorField::combination(terms)?;
        let reparam = match arclength_reparametrize(&shifted, interval, p.tol().zero_abs_tol) {
            Ok(r) => r,
            Err(GeomError::Regularity { t, speed }) => {
                results.push(OffsetResult {
                    offset: c.clone(),
                    deviation: None,
                    note: Some(format!("shifted directrix not regular at t = {t} (speed {speed:e})")),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let frame = fc.frame().iter().map(|x| reparam.along(x.clone())).collect();
        let len = reparam.length();
        let new_fc = FramedCurve::new(fc.dim(), fc.m(), reparam.curve.clone(), frame, (0.0, len))?;
        let mut ss: Vec<f64> = ts.iter().map(|&t| reparam.map.s_of_t(t)).collect();
        ss[0] = 0.0;
        *ss.last_mut().unwrap() = len;
        let new_patch = RuledPatch::new(new_fc, p.grid().with_t_samples(ss)?, p.tol().clone())?;
        let new_sheet = solve_striction(&new_patch, sheet.d)?;
        let mut worst = 0.0f64;
        for (old, new) in sheet.samples.iter().zip(new_sheet.samples()) {
            for u in new_sheet.free_points() {
                worst = worst.max(distance_to_ruling_sheet(old, nfree, &new.point(u).beta));
            }
        }
        results.push(OffsetResult { offset: c.clone(), deviation: Some(worst), note: None });
    }
    let max_deviation = results.iter().filter_map(|r| r.deviation).fold(0.0, f64::max);
    Ok(InvarianceReport { offsets: results, max_deviation })
}

/// Sheet export: one row per grid point, columns `t, u1.., s{m-d}.., b1.., wedge_residual, singular`.
pub fn sheet_csv(sheet: &StrictionSheet, locus: &SingularLocus) -> String {
    let m = sheet.patch.m();
    let d = sheet.d;
    let mut cols = vec!["t".to_string()];
    cols.extend((1..m - d).map(|i| format!("u{i}")));
    cols.extend((m - d..m).map(|h| format!("s{h}")));
    cols.extend((1..=sheet.patch.dim()).map(|i| format!("b{i}")));
    cols.push("wedge_residual".into());
    cols.push("singular".into());
    let mut out = cols.join(",");
    out.push('\n');
    for (pt, e) in sheet.grid_points().iter().zip(&locus.entries) {
        let num = |x: &f64| format!("{x:?}");
        let mut fields: Vec<String> = vec![num(&pt.t)];
        fields.extend(pt.u_free.iter().map(num));
        fields.extend(pt.solved.iter().map(num));
        fields.extend(pt.beta.coords().iter().map(num));
        fields.push(num(&e.wedge_residual));
        fields.push(u8::from(e.singular).to_string());
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parametric::{build_builtin, SampleGrid};
    use std::collections::BTreeMap;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn patch(name: &str, n: usize) -> RuledPatch {
        let fc = build_builtin(name, &BTreeMap::new()).unwrap();
        let grid = SampleGrid::uniform(fc.interval(), n, 1.0, 5).unwrap();
        RuledPatch::new(fc, grid, TolerancePolicy::default()).unwrap()
    }

    #[test]
    fn system_examples() {
        let tol = TolerancePolicy::default();
        let fc = build_builtin("tangent_developable_helix", &BTreeMap::new()).unwrap();
        let s = assemble_system(&fc, 1.2, 1, &tol).unwrap();
        assert!((s.a[(0, 0)] - 0.5).abs() < 1e-15 && s.b_affine[(0, 0)].abs() < 1e-15);
        let fc = build_builtin("helicoid", &BTreeMap::new()).unwrap();
        let s = assemble_system(&fc, 0.3, 1, &tol).unwrap();
        assert!((s.a[(0, 0)] - 1.0).abs() < 1e-15 && s.b_affine[(0, 0)].abs() < 1e-15);
        let fc = build_builtin("circular_cone", &BTreeMap::new()).unwrap();
        let s = assemble_system(&fc, 2.0, 1, &tol).unwrap();
        assert!((s.a[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((s.b_affine[(0, 0)] + FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(s.gram_defect() < 1e-15 && s.asymmetry() == 0.0);
        let fc = build_builtin("helix_cylinder", &BTreeMap::new()).unwrap();
        assert!(matches!(assemble_system(&fc, 0.0, 1, &tol), Err(GeomError::Degeneracy { .. })));
    }

    #[test]
    fn sheets_of_surfaces() {
        let cone = solve_striction(&patch("circular_cone", 40), 1).unwrap();
        for pt in cone.grid_points() {
            assert!((pt.solved[0] + SQRT_2).abs() < 1e-14);
            assert!(pt.beta.norm() < 1e-14 && pt.beta_dot.norm() < 1e-14);
            assert_eq!(striction_jacobian_rank(&cone, &pt), 0);
        }
        let td = solve_striction(&patch("tangent_developable_helix", 40), 1).unwrap();
        for (pt, s) in td.grid_points().iter().zip(td.samples()) {
            assert!(pt.solved[0].abs() < 1e-15);
            let g = td.patch().curve().directrix_at(s.t, 0).unwrap();
            assert!(pt.beta.distance(&g) < 1e-15);
            assert_eq!(striction_jacobian_rank(&td, pt), 1);
        }
        assert!(td.fallback_ts().is_empty());
    }

    #[test]
    fn product_sheet_is_regular_and_two_dimensional() {
        let sheet = solve_striction(&patch("helix_tangent_product_r4", 30), 1).unwrap();
        assert_eq!(sheet.pivot(), &PivotKind::Permuted(vec![1, 0]));
        assert_eq!(sheet.free_points().len(), 5);
        for pt in sheet.grid_points() {
            assert!(pt.solved[0].abs() < 1e-15);
            let g = sheet.patch().curve().directrix_at(pt.t, 0).unwrap();
            let want = g + AmbientVector::unit(4, 3) * pt.u_free[0];
            assert!(pt.beta.distance(&want) < 1e-15);
            assert_eq!(striction_jacobian_rank(&sheet, &pt), 2);
        }
    }

    #[test]
    fn off_grid_evaluation_matches_grid() {
        let sheet = solve_striction(&patch("circular_cone", 20), 1).unwrap();
        let pt = sheet.evaluate(0.123, &[]).unwrap();
        assert!(pt.beta.norm() < 1e-14);
        assert!(sheet.evaluate(0.1, &[1.0]).is_err());
    }

    #[test]
    fn singular_locus_examples() {
        let td = solve_striction(&patch("tangent_developable_helix", 40), 1).unwrap();
        let loc = singular_locus(&td, 32, 1).unwrap();
        assert_eq!(loc.singular_count(), 40);
        assert!(loc.entries.iter().all(|e| e.wedge_residual < 1e-10));
        assert!(loc.off_sheet_all_regular() && loc.off_sheet.len() == 32);
        let h = solve_striction(&patch("helicoid", 40), 1).unwrap();
        let loc = singular_locus(&h, 32, 1).unwrap();
        assert_eq!(loc.singular_count(), 0);
        assert!(loc.entries.iter().all(|e| (e.wedge_residual - 1.0).abs() < 1e-12));
        let cone = solve_striction(&patch("circular_cone", 40), 1).unwrap();
        assert_eq!(singular_locus(&cone, 32, 1).unwrap().singular_fraction, 1.0);
    }

    #[test]
    fn equivalent_condition_examples() {
        for (name, vanish) in [("tangent_developable_helix", true), ("helicoid", false), ("circular_cone", true)] {
            let sheet = solve_striction(&patch(name, 30), 1).unwrap();
            let tab = equivalent_condition_check(&sheet).unwrap();
            assert!(tab.all_agree, "{name}");
            assert!(tab.skipped.is_empty());
            assert!(tab.rows.iter().all(|r| (r.without < 1e-8) == vanish), "{name}");
        }
    }

    #[test]
    fn invariance_examples() {
        for name in ["tangent_developable_helix", "circular_cone"] {
            let sheet = solve_striction(&patch(name, 40), 1).unwrap();
            let rep = directrix_invariance(&sheet, &default_offsets(2)).unwrap();
            assert_eq!(rep.offsets.len(), 3);
            assert!(rep.max_deviation < 1e-6, "{name}: {rep:?}");
        }
        assert!(solve_striction(&patch("helix_cylinder", 10), 0).is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let sheet = solve_striction(&patch("helix_tangent_product_r4", 10), 1).unwrap();
        let loc = singular_locus(&sheet, 4, 0).unwrap();
        let csv = sheet_csv(&sheet, &loc);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,u1,s2,b1,b2,b3,b4,wedge_residual,singular");
        assert_eq!(lines.count(), 50);
    }
}
