use std::collections::BTreeMap;

use nalgebra::DMatrix;
use proptest::prelude::*;

use ruled_core::distribution::{degree_bound, degree_profile, pivot_frame, rho_at};
use ruled_core::multilinear::{
    gram_matrix, numerical_rank, orthonormality_defect, project_orthogonal, subspace_distance, wedge_norm,
    AmbientVector, TolerancePolicy, VectorList,
};
use ruled_core::parametric::{
    build_builtin, builtin_families, gram_schmidt_frame, FourierSeries, FramedCurve, ParamVectorField, SampleGrid,
};
use ruled_core::ruledgeom::{jacobian_rank, jacobian_sigma, second_form_along_directrix, RuledPatch};
use ruled_core::striction::assemble_system;

fn tol() -> TolerancePolicy {
    TolerancePolicy::default()
}

fn vlist(rows: &[Vec<f64>]) -> VectorList {
    VectorList::from_vectors(rows.iter().map(|r| AmbientVector::new(r.clone()).unwrap()).collect()).unwrap()
}

fn vectors(dim: usize, k: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0f64..3.0, dim), k)
}

fn builtin(name: &str) -> FramedCurve {
    build_builtin(name, &BTreeMap::new()).unwrap()
}

fn patch(name: &str, n: usize) -> RuledPatch {
    let fc = builtin(name);
    let grid = SampleGrid::uniform(fc.interval(), n, 1.0, 5).unwrap();
    RuledPatch::new(fc, grid, tol()).unwrap()
}

/// Richardson-extrapolated central difference of `f` at `t`.
fn fd(f: impl Fn(f64) -> AmbientVector, t: f64, h: f64) -> AmbientVector {
    let c = |h: f64| (f(t + h) - f(t - h)) * (0.5 / h);
    (c(h / 2.0) * 4.0 - c(h)) * (1.0 / 3.0)
}

fn fd_gap(field: &ParamVectorField, t: f64) -> f64 {
    (1..=2)
        .map(|order| {
            let approx = fd(|s| field.eval(s, order - 1).unwrap(), t, 1e-3);
            (field.eval(t, order).unwrap() - approx).max_abs()
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_is_symmetric_psd(rows in vectors(4, 1..=4)) {
        let g = gram_matrix(&vlist(&rows)).unwrap();
        prop_assert!((&g - g.transpose()).amax() == 0.0);
        let eig = g.clone().symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10 * (1.0 + g.amax())));
    }

    #[test]
    fn wedge_squared_is_gram_determinant(rows in vectors(5, 1..=5)) {
        let vs = vlist(&rows);
        let w = wedge_norm(&vs).unwrap();
        let det = gram_matrix(&vs).unwrap().determinant();
        prop_assert!((w * w - det).abs() <= 1e-9 * (1.0 + det.abs()));
    }

    #[test]
    fn rank_is_scale_invariant(rows in vectors(4, 1..=4), scale in 0.1f64..10.0) {
        let vs = vlist(&rows);
        let scaled = vlist(&rows.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect::<Vec<_>>());
        let r = numerical_rank(&vs, &tol());
        prop_assert_eq!(r, numerical_rank(&scaled, &tol()));
        prop_assert!(r <= rows.len().min(4));
    }

    #[test]
    fn rank_of_repeated_vector_is_one(row in prop::collection::vec(0.5f64..3.0, 4), c in -4.0f64..4.0) {
        prop_assume!(c.abs() > 0.1);
        let other: Vec<f64> = row.iter().map(|x| x * c).collect();
        prop_assert_eq!(numerical_rank(&vlist(&[row, other]), &tol()), 1);
    }

    #[test]
    fn projection_is_orthogonal(v in prop::collection::vec(-3.0f64..3.0, 5), basis in vectors(5, 1..=3)) {
        let b = vlist(&basis);
        let w = project_orthogonal(&AmbientVector::new(v).unwrap(), &b).unwrap();
        for x in b.iter() {
            prop_assert!(w.dot(x).abs() < 1e-9 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn subspace_distance_ignores_basis_choice(rows in vectors(5, 2..=3), mix in prop::collection::vec(-2.0f64..2.0, 9)) {
        let a = vlist(&rows);
        prop_assume!(numerical_rank(&a, &tol()) == rows.len());
        let k = rows.len();
        let m = DMatrix::from_fn(k, k, |i, j| mix[i * 3 + j] + if i == j { 3.0 } else { 0.0 });
        prop_assume!(m.determinant().abs() > 0.5);
        let mixed: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..5).map(|c| (0..k).map(|j| m[(i, j)] * rows[j][c]).sum()).collect())
            .collect();
        let b = vlist(&mixed);
        prop_assert!(subspace_distance(&a, &b) < 1e-8);
        prop_assert!((subspace_distance(&a, &b) - subspace_distance(&b, &a)).abs() < 1e-15);
    }

    #[test]
    fn polynomial_derivatives_match_differences(
        coeffs in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 1..6), 3),
        t in -1.5f64..1.5,
    ) {
        let f = ParamVectorField::polynomial(coeffs).unwrap();
        prop_assert!(fd_gap(&f, t) < 1e-7);
    }

    #[test]
    fn fourier_derivatives_match_differences(
        terms in prop::collection::vec(
            (-1.0f64..1.0, prop::collection::vec(-1.0f64..1.0, 0..4), prop::collection::vec(-1.0f64..1.0, 0..4), 0.5f64..2.0),
            4,
        ),
        t in -3.0f64..3.0,
    ) {
        let series = terms
            .into_iter()
            .map(|(constant, cos, sin, frequency)| FourierSeries { constant, cos, sin, frequency })
            .collect();
        let f = ParamVectorField::fourier(series).unwrap();
        prop_assert!(fd_gap(&f, t) < 1e-7);
    }

    #[test]
    fn gram_schmidt_output_is_orthonormal(a in prop::collection::vec(-1.0f64..1.0, 8), b in prop::collection::vec(-1.0f64..1.0, 8)) {
        // two smooth fields in R^4 that stay independent: dominant constant parts plus small oscillation
        let field = |c: &[f64], base: usize| {
            ParamVectorField::fourier(
                (0..4)
                    .map(|i| FourierSeries {
                        constant: if i == base { 2.0 } else { 0.0 },
                        cos: vec![0.3 * c[2 * i]],
                        sin: vec![0.3 * c[2 * i + 1]],
                        frequency: 1.0,
                    })
                    .collect(),
            )
            .unwrap()
        };
        let fields = vec![field(&a, 0), field(&b, 1)];
        let grid = SampleGrid::uniform((0.0, 3.0), 25, 1.0, 3).unwrap();
        let out = gram_schmidt_frame(&fields, &grid, &tol()).unwrap();
        for &t in grid.t_samples() {
            let vs = VectorList::from_vectors(out.iter().map(|f| f.eval(t, 0).unwrap()).collect()).unwrap();
            prop_assert!(orthonormality_defect(&vs) < 1e-9);
            let input = VectorList::from_vectors(fields.iter().map(|f| f.eval(t, 0).unwrap()).collect()).unwrap();
            prop_assert!(subspace_distance(&vs, &input) < 1e-9);
        }
    }
}

fn corpus() -> Vec<&'static str> {
    builtin_families().iter().map(|i| i.name).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn builtin_fields_match_differences(frac in 0.02f64..0.98) {
        for name in corpus() {
            let fc = builtin(name);
            let (a, b) = fc.interval();
            let t = a + frac * (b - a);
            prop_assert!(fd_gap(fc.directrix(), t) < 1e-7, "{} directrix at {}", name, t);
            for (j, x) in fc.frame().iter().enumerate() {
                prop_assert!(fd_gap(x, t) < 1e-7, "{} frame {} at {}", name, j, t);
            }
        }
    }

    #[test]
    fn rho_images_are_normal_and_degree_bounded(frac in 0.0f64..1.0) {
        for name in corpus() {
            let fc = builtin(name);
            let (a, b) = fc.interval();
            let t = a + frac * (b - a);
            let s = rho_at(&fc, t, &tol()).unwrap();
            prop_assert!(s.degree <= degree_bound(&fc));
            let frame = fc.frame_at(t).unwrap();
            for r in s.rho_vectors.iter() {
                for x in frame.iter() {
                    prop_assert!(r.dot(x).abs() < 1e-8, "{} at {}", name, t);
                }
            }
        }
    }

    #[test]
    fn jacobian_never_drops_below_m_minus_one(frac in 0.0f64..1.0, u in prop::collection::vec(-1.0f64..1.0, 2)) {
        for name in corpus() {
            let p = patch(name, 5);
            let (a, b) = p.curve().interval();
            let t = a + frac * (b - a);
            let uu = &u[..p.m() - 1];
            let r = jacobian_rank(&p, t, uu).unwrap();
            prop_assert!(r + 1 >= p.m(), "{} rank {} at {}", name, r, t);
        }
    }

    #[test]
    fn second_form_is_normal(frac in 0.0f64..1.0, u in prop::collection::vec(-1.0f64..1.0, 2)) {
        for name in corpus() {
            let p = patch(name, 5);
            let (a, b) = p.curve().interval();
            let t = a + frac * (b - a);
            let uu = &u[..p.m() - 1];
            let Ok(ii) = second_form_along_directrix(&p, t, uu) else { continue };
            let tangent = jacobian_sigma(&p, t, uu).unwrap();
            let q: Vec<AmbientVector> = ruled_core::multilinear::orthonormal_basis(&tangent, 1e-12);
            for v in &ii.ii_vectors {
                for e in &q {
                    prop_assert!(v.dot(e).abs() < 1e-9, "{} at ({}, {:?})", name, t, uu);
                }
            }
        }
    }

    #[test]
    fn striction_matrix_is_gram_of_rho_images(frac in 0.0f64..1.0) {
        for name in ["circular_cone", "helicoid", "tangent_developable_helix", "two_rotation_r5"] {
            let p = patch(name, 40);
            let d = degree_profile(p.curve(), p.grid(), p.tol()).unwrap().constant_degree.unwrap();
            let fc = pivot_frame(p.curve(), p.grid(), d, p.tol()).unwrap().curve;
            let (a, b) = fc.interval();
            let t = a + frac * (b - a);
            let sys = assemble_system(&fc, t, d, p.tol()).unwrap();
            prop_assert!(sys.asymmetry() < 1e-10);
            prop_assert!(sys.gram_defect() < 1e-10);
            prop_assert!(sys.min_eigenvalue > 0.0);
        }
    }
}

#[test]
fn pivoting_preserves_span_and_degree() {
    for name in ["helix_tangent_product_r4", "twisted_pair_r4", "two_rotation_r5"] {
        let p = patch(name, 60);
        let prof = degree_profile(p.curve(), p.grid(), p.tol()).unwrap();
        let d = prof.constant_degree.unwrap();
        let piv = pivot_frame(p.curve(), p.grid(), d, p.tol()).unwrap();
        let after = degree_profile(&piv.curve, p.grid(), p.tol()).unwrap();
        assert_eq!(prof.degrees(), after.degrees(), "{name}");
        for &t in p.grid().t_samples() {
            let gap = subspace_distance(&p.curve().frame_at(t).unwrap(), &piv.curve.frame_at(t).unwrap());
            assert!(gap < 1e-8, "{name} at {t}: {gap}");
            assert!(orthonormality_defect(&piv.curve.frame_at(t).unwrap()) < 1e-8);
        }
        assert!(piv.min_singular > p.tol().zero_abs_tol, "{name}");
    }
}
