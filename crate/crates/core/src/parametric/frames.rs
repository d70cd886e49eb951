//! Frame construction: orthonormalization and parallel transport.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::multilinear::{numerical_rank, TolerancePolicy, VectorList};

use super::jet::VecJet;
use super::spline::SampledField;
use super::{FramedCurve, ParamVectorField, SampleGrid};

/// Gram–Schmidt on knot jets. Field `k` of the output lies in the span of
/// inputs `1..=k`.
fn orthonormalize_jets(fields: &[VecJet]) -> Vec<VecJet> {
    let mut out: Vec<VecJet> = Vec::with_capacity(fields.len());
    for f in fields {
        let mut v = f.clone();
        for e in &out {
            let c = f.dot(e);
            let neg = super::jet::ScalarJet { v: -c.v, d1: -c.d1, d2: -c.d2 };
            v.add_scaled(neg, e);
        }
        let inv_norm = v.dot(&v).sqrt().recip();
        out.push(v.scale(inv_norm));
    }
    out
}

fn sampled(knots: &[f64], jets: Vec<VecJet>) -> Result<ParamVectorField> {
    Ok(ParamVectorField::Sampled(Arc::new(SampledField::new(knots.to_vec(), jets)?)))
}

/// Orthonormalizes `fields` pointwise on the grid and interpolates the
/// result. Exact first and second derivatives are carried to the knots.
pub fn gram_schmidt_frame(
    fields: &[ParamVectorField],
    grid: &SampleGrid,
    tol: &TolerancePolicy,
) -> Result<Vec<ParamVectorField>> {
    let dim = fields
        .first()
        .map(ParamVectorField::dim)
        .ok_or_else(|| GeomError::Input("no fields to orthonormalize".into()))?;
    let knots = grid.t_samples();
    let mut per_field: Vec<Vec<VecJet>> = vec![Vec::with_capacity(knots.len()); fields.len()];
    for &t in knots {
        let jets = fields.iter().map(|f| f.jet(t)).collect::<Result<Vec<_>>>()?;
        let values = VectorList::new(dim, jets.iter().map(|j| j.v.clone()).collect())?;
        let rank = numerical_rank(&values, tol);
        if rank < fields.len() {
            return Err(GeomError::Degeneracy {
                t,
                detail: format!("frame fields have rank {rank} < {}", fields.len()),
            });
        }
        for (k, e) in orthonormalize_jets(&jets).into_iter().enumerate() {
            per_field[k].push(e);
        }
    }
    per_field.into_iter().map(|jets| sampled(knots, jets)).collect()
}

/// `Ω_ij = ⟨X_i, Ẋ_j⟩` and its derivative.
fn connection(x: &[VecJet]) -> (DMatrix<f64>, DMatrix<f64>) {
    let r = x.len();
    let omega = DMatrix::from_fn(r, r, |i, j| x[i].v.dot(&x[j].d1));
    let omega_dot = DMatrix::from_fn(r, r, |i, j| x[i].d1.dot(&x[j].d1) + x[i].v.dot(&x[j].d2));
    (omega, omega_dot)
}

fn omega_at(fc: &FramedCurve, t: f64) -> Result<DMatrix<f64>> {
    let x = fc.frame_at(t)?;
    let dx = fc.frame_derivs_at(t, 1)?;
    let r = x.len();
    Ok(DMatrix::from_fn(r, r, |i, j| x[i].dot(&dx[j])))
}

/// Nearest orthogonal matrix (polar factor).
pub(crate) fn polar(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = m.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => Ok(u * vt),
        _ => Err(GeomError::Numeric("SVD failed in polar decomposition".into())),
    }
}

const RK4_SUBSTEPS: usize = 8;

/// Rotates the frame within its own span so that the tangential part of
/// each derivative vanishes: `E = X R` with `Ṙ = -Ω R`, `R(t_0) = I`.
///
/// The rotation is integrated with classical RK4 between grid samples and
/// re-orthonormalized after each sample. The returned fields interpolate the
/// exact knot jets of `E`.
pub fn parallel_transport_frame(fc: &FramedCurve, grid: &SampleGrid) -> Result<Vec<ParamVectorField>> {
    let knots = grid.t_samples();
    let r = fc.frame().len();
    let mut rot = DMatrix::<f64>::identity(r, r);
    let mut rotations = Vec::with_capacity(knots.len());
    rotations.push(rot.clone());
    for w in knots.windows(2) {
        let h = (w[1] - w[0]) / RK4_SUBSTEPS as f64;
        for k in 0..RK4_SUBSTEPS {
            let t = w[0] + h * k as f64;
            let f = |t: f64, m: &DMatrix<f64>| -> Result<DMatrix<f64>> { Ok(-(omega_at(fc, t)? * m)) };
            let k1 = f(t, &rot)?;
            let k2 = f(t + h / 2.0, &(&rot + &k1 * (h / 2.0)))?;
            let k3 = f(t + h / 2.0, &(&rot + &k2 * (h / 2.0)))?;
            let k4 = f(t + h, &(&rot + &k3 * h))?;
            rot += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        rot = polar(&rot)?;
        if rot.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::Numeric(format!("transport diverged near t = {}", w[1])));
        }
        rotations.push(rot.clone());
    }

    let mut per_field: Vec<Vec<VecJet>> = vec![Vec::with_capacity(knots.len()); r];
    for (&t, rot) in knots.iter().zip(&rotations) {
        let x = fc.frame_jets(t)?;
        let (omega, omega_dot) = connection(&x);
        let rdot = -(&omega * rot);
        let rddot = (&omega * &omega - omega_dot) * rot;
        for j in 0..r {
            let mut e = VecJet::zeros(fc.dim());
            for k in 0..r {
                e.v.axpy(rot[(k, j)], &x[k].v);
                e.d1.axpy(rot[(k, j)], &x[k].d1);
                e.d1.axpy(rdot[(k, j)], &x[k].v);
                e.d2.axpy(rot[(k, j)], &x[k].d2);
                e.d2.axpy(2.0 * rdot[(k, j)], &x[k].d1);
                e.d2.axpy(rddot[(k, j)], &x[k].v);
            }
            per_field[j].push(e);
        }
    }
    per_field.into_iter().map(|jets| sampled(knots, jets)).collect()
}

/// Re-expresses the frame as `E = X Q(t)` for orthogonal matrices sampled on
/// the grid. `Q` is interpolated entrywise by natural cubic splines and the
/// knot jets of `E` follow by the product rule.
pub(crate) fn rotate_frame(fc: &FramedCurve, knots: &[f64], qs: &[DMatrix<f64>]) -> Result<Vec<ParamVectorField>> {
    let r = fc.frame().len();
    let n = knots.len();
    let mut q1 = vec![DMatrix::<f64>::zeros(r, r); n];
    let mut q2 = vec![DMatrix::<f64>::zeros(r, r); n];
    for a in 0..r {
        for b in 0..r {
            let ys: Vec<f64> = qs.iter().map(|q| q[(a, b)]).collect();
            let (s1, s2) = super::spline::natural_cubic_jets(knots, &ys);
            for i in 0..n {
                q1[i][(a, b)] = s1[i];
                q2[i][(a, b)] = s2[i];
            }
        }
    }
    let mut per_field: Vec<Vec<VecJet>> = vec![Vec::with_capacity(n); r];
    for i in 0..n {
        let x = fc.frame_jets(knots[i])?;
        for j in 0..r {
            let mut e = VecJet::zeros(fc.dim());
            for k in 0..r {
                e.v.axpy(qs[i][(k, j)], &x[k].v);
                e.d1.axpy(qs[i][(k, j)], &x[k].d1);
                e.d1.axpy(q1[i][(k, j)], &x[k].v);
                e.d2.axpy(qs[i][(k, j)], &x[k].d2);
                e.d2.axpy(2.0 * q1[i][(k, j)], &x[k].d1);
                e.d2.axpy(q2[i][(k, j)], &x[k].v);
            }
            per_field[j].push(e);
        }
    }
    per_field.into_iter().map(|jets| sampled(knots, jets)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multilinear::{gram_matrix, AmbientVector};
    use crate::parametric::build_builtin;
    use std::collections::BTreeMap;

    fn values_at(fields: &[ParamVectorField], t: f64, order: usize) -> Result<Vec<AmbientVector>> {
        fields.iter().map(|f| f.eval(t, order)).collect()
    }

    fn constant(c: &[f64]) -> ParamVectorField {
        ParamVectorField::constant(AmbientVector::new(c.to_vec()).unwrap())
    }

    #[test]
    fn gram_schmidt_constant_pair() {
        let grid = SampleGrid::uniform((0.0, 1.0), 5, 1.0, 3).unwrap();
        let out = gram_schmidt_frame(
            &[constant(&[1., 0., 0.]), constant(&[1., 1., 0.])],
            &grid,
            &TolerancePolicy::default(),
        )
        .unwrap();
        let at = values_at(&out, 0.37, 0).unwrap();
        assert!(at[0].distance(&AmbientVector::unit(3, 0)) < 1e-15);
        assert!(at[1].distance(&AmbientVector::unit(3, 1)) < 1e-15);
    }

    #[test]
    fn gram_schmidt_reports_dependence() {
        let grid = SampleGrid::uniform((0.0, 1.0), 5, 1.0, 3).unwrap();
        // (1, t, 0) and (1, 0, 0) coincide at t = 0.
        let a = ParamVectorField::polynomial(vec![vec![1.0], vec![0.0, 1.0], vec![0.0]]).unwrap();
        let err = gram_schmidt_frame(&[a, constant(&[1., 0., 0.])], &grid, &TolerancePolicy::default())
            .unwrap_err();
        assert!(matches!(err, GeomError::Degeneracy { t, .. } if t == 0.0));
    }

    #[test]
    fn transport_of_constant_frame_is_identity() {
        let fc = build_builtin("helix_cylinder", &BTreeMap::new()).unwrap();
        let grid = SampleGrid::uniform(fc.interval(), 41, 1.0, 3).unwrap();
        let e = parallel_transport_frame(&fc, &grid).unwrap();
        for &t in grid.t_samples() {
            assert!(e[0].eval(t, 0).unwrap().distance(&AmbientVector::unit(4, 3)) < 1e-14);
        }
    }

    #[test]
    fn transport_of_rotating_frame_is_constant() {
        let fc = build_builtin("rotating_frame_cylinder", &BTreeMap::new()).unwrap();
        let grid = SampleGrid::uniform(fc.interval(), 101, 1.0, 3).unwrap();
        let e = parallel_transport_frame(&fc, &grid).unwrap();
        let e0 = values_at(&e, 0.0, 0).unwrap();
        for &t in grid.t_samples() {
            let et = values_at(&e, t, 0).unwrap();
            let de = values_at(&e, t, 1).unwrap();
            for j in 0..2 {
                assert!(et[j].distance(&e0[j]) < 1e-9, "t={t}");
                assert!(de[j].norm() < 1e-12);
            }
            let g = gram_matrix(&VectorList::from_vectors(et).unwrap()).unwrap();
            assert!((g - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-12);
        }
    }

    #[test]
    fn polar_of_rotation_is_itself() {
        let (s, c) = 0.3f64.sin_cos();
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        assert!((polar(&q).unwrap() - &q).abs().max() < 1e-15);
    }
}
