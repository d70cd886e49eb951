//! End-to-end acceptance checks on the builtin corpus at default grids.
//! Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::process::ExitCode;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ruled_core::classify::{classify_patch, converse_check, RegionKind};
use ruled_core::distribution::{degree_bound, degree_profile};
use ruled_core::multilinear::{AmbientVector, TolerancePolicy};
use ruled_core::parametric::{build_builtin, builtin_families, FramedCurve, ParamVectorField, SampleGrid};
use ruled_core::ruledgeom::{
    coordinate_sectional_curvatures, first_normal_bounds_check, flatness_check, rank_one_check, stability_sweep,
    RuledPatch, FLATNESS_TOL,
};
use ruled_core::striction::{
    default_offsets, directrix_invariance, singular_locus, solve_striction, striction_rank_profile, StrictionSheet,
    OFF_SHEET_SAMPLES,
};

const T_SAMPLES: usize = 200;
const SEED: u64 = 7;

fn patch(name: &str) -> RuledPatch {
    let fc = build_builtin(name, &BTreeMap::new()).unwrap();
    let grid = SampleGrid::uniform(fc.interval(), T_SAMPLES, 1.0, 5).unwrap();
    RuledPatch::new(fc, grid, TolerancePolicy::default()).unwrap()
}

fn sheet(name: &str) -> StrictionSheet {
    let p = patch(name);
    let d = degree_profile(p.curve(), p.grid(), p.tol()).unwrap().constant_degree.unwrap();
    solve_striction(&p, d).unwrap()
}

fn vec_of(fc: &FramedCurve, t: f64, order: usize) -> (AmbientVector, Vec<AmbientVector>) {
    let g = fc.directrix_at(t, order).unwrap();
    let x = fc.frame_derivs_at(t, order).unwrap().vectors().to_vec();
    (g, x)
}

/// Foot on the ruling at `t` of the common perpendicular to the rulings at
/// `t ± h`, averaged over both sides. Tends to the striction point as `h → 0`.
/// Zero gap at samples too close to an end of the interval.
fn perpendicular_gap(fc: &FramedCurve, t: f64, h: f64, solved: f64) -> f64 {
    let (a, b) = fc.interval();
    if t - h < a || t + h > b {
        return 0.0;
    }
    let (g0, x0) = vec_of(fc, t, 0);
    let foot = |s: f64| {
        let (g1, x1) = vec_of(fc, s, 0);
        let (a, b) = (&x0[0], &x1[0]);
        let w = &g0 - &g1;
        // minimize |w + u a - v b|
        let (aa, ab, bb) = (a.dot(a), a.dot(b), b.dot(b));
        let (wa, wb) = (w.dot(a), w.dot(b));
        let det = aa * bb - ab * ab;
        (ab * wb - bb * wa) / det
    };
    (0.5 * (foot(t + h) + foot(t - h)) - solved).abs()
}

struct Line {
    ok: bool,
    text: String,
}

fn check(n: usize, title: &str, failures: Vec<String>, detail: String) -> Line {
    let ok = failures.is_empty();
    let mut text = format!("criterion {n} {:4} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
    for f in failures {
        text.push_str(&format!("\n    - {f}"));
    }
    Line { ok, text }
}

fn degrees() -> Line {
    let want = [
        ("helix_cylinder", 0),
        ("helicoid", 1),
        ("circular_cone", 1),
        ("tangent_developable_helix", 1),
        ("two_rotation_r5", 2),
    ];
    let mut bad = Vec::new();
    for (name, d) in want {
        let p = patch(name);
        let prof = degree_profile(p.curve(), p.grid(), p.tol()).unwrap();
        if prof.constant_degree != Some(d) {
            bad.push(format!("{name}: {:?} != {d}", prof.constant_degree));
        }
    }
    for info in builtin_families() {
        let p = patch(info.name);
        let prof = degree_profile(p.curve(), p.grid(), p.tol()).unwrap();
        let bound = (info.m - 1).min(info.ambient_dim - info.m + 1);
        if degree_bound(p.curve()) != bound || prof.max_degree() > bound {
            bad.push(format!("{}: max degree {} above bound {bound}", info.name, prof.max_degree()));
        }
    }
    check(1, "degree profiles", bad, "cylinder 0, helicoid/cone/tangent 1, R^5 pair 2, all within bound".into())
}

fn striction_recovery() -> Line {
    let mut bad = Vec::new();
    let mut worst = [0.0f64; 4];

    let s = sheet("circular_cone");
    let fc = s.patch().curve().clone();
    for pt in s.grid_points() {
        // the apex is the origin, so the apex ruling coordinate is -<γ, X>
        let (g, x) = vec_of(&fc, pt.t, 0);
        let oracle = -g.dot(&x[0]);
        worst[0] = worst[0].max(pt.beta.norm());
        worst[1] = worst[1].max((pt.solved[0] + SQRT_2).abs().max((oracle + SQRT_2).abs()));
        worst[3] = worst[3].max(perpendicular_gap(&fc, pt.t, 1e-4, pt.solved[0]));
    }
    if worst[0] >= 1e-6 {
        bad.push(format!("cone |beta| {:.2e}", worst[0]));
    }
    if worst[1] >= 1e-8 {
        bad.push(format!("cone solved u off -sqrt 2 by {:.2e}", worst[1]));
    }

    let s = sheet("helicoid");
    let fc = s.patch().curve().clone();
    let mut axis = 0.0f64;
    for pt in s.grid_points() {
        let c = pt.beta.coords();
        axis = axis.max(c[0].hypot(c[1]));
        worst[3] = worst[3].max(perpendicular_gap(&fc, pt.t, 1e-4, pt.solved[0]));
    }
    if axis >= 1e-8 {
        bad.push(format!("helicoid striction off the z-axis by {axis:.2e}"));
    }

    let s = sheet("tangent_developable_helix");
    let fc = s.patch().curve().clone();
    for pt in s.grid_points() {
        let (g, _) = vec_of(&fc, pt.t, 0);
        worst[2] = worst[2].max(pt.solved[0].abs()).max(pt.beta.distance(&g));
        worst[3] = worst[3].max(perpendicular_gap(&fc, pt.t, 1e-4, pt.solved[0]));
    }
    if worst[2] >= 1e-8 {
        bad.push(format!("tangent developable sheet off the directrix by {:.2e}", worst[2]));
    }
    if worst[3] >= 1e-6 {
        bad.push(format!("common-perpendicular oracle disagrees by {:.2e}", worst[3]));
    }
    check(
        2,
        "striction recovery",
        bad,
        format!(
            "cone |beta| {:.1e}, u+sqrt2 {:.1e}; helicoid axis {axis:.1e}; tangent {:.1e}; perpendicular oracle {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn a_matrix() -> Line {
    let mut bad = Vec::new();
    let (mut asym, mut gram, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    for name in ["helicoid", "circular_cone", "tangent_developable_helix", "helix_tangent_product_r4", "two_rotation_r5"] {
        let s = sheet(name);
        let fc = s.patch().curve();
        let d = s.degree();
        let r = fc.frame().len();
        for sample in s.samples() {
            let a = &sample.system.a;
            let (_, x) = vec_of(fc, sample.t, 0);
            let (_, dx) = vec_of(fc, sample.t, 1);
            // ρX_j = Ẋ_j - Σ_k <Ẋ_j, X_k> X_k for an orthonormal frame
            let rho: Vec<AmbientVector> = dx[r - d..]
                .iter()
                .map(|v| {
                    let mut w = v.clone();
                    for xk in &x {
                        w.axpy(-v.dot(xk), xk);
                    }
                    w
                })
                .collect();
            let g = DMatrix::from_fn(d, d, |i, j| rho[i].dot(&rho[j]));
            asym = asym.max((a - a.transpose()).amax());
            gram = gram.max((a - &g).amax());
            min_eig = min_eig.min(a.clone().symmetric_eigen().eigenvalues.min());
        }
        if !(asym <= 1e-10 && gram <= 1e-10 && min_eig > 0.0) {
            bad.push(format!("{name}: asym {asym:.2e}, gram {gram:.2e}, min eig {min_eig:.2e}"));
        }
    }
    check(3, "A-matrix structure", bad, format!("asym {asym:.1e}, |A - Gram| {gram:.1e}, min eig {min_eig:.3}"))
}

fn singularity() -> Line {
    let mut bad = Vec::new();
    let mut parts = Vec::new();
    for name in ["circular_cone", "tangent_developable_helix", "helix_tangent_product_r4"] {
        let s = sheet(name);
        let loc = singular_locus(&s, OFF_SHEET_SAMPLES, SEED).unwrap();
        let regular = loc.off_sheet.iter().filter(|x| x.regular).count();
        if loc.singular_fraction < 0.99 || regular != OFF_SHEET_SAMPLES || loc.off_sheet.len() != OFF_SHEET_SAMPLES {
            bad.push(format!("{name}: fraction {:.4}, off-sheet regular {regular}/{}", loc.singular_fraction, loc.off_sheet.len()));
        }
        // independent look at the Jacobian at each sheet point
        let fc = s.patch().curve();
        let mut max_sv = 0.0f64;
        for pt in s.grid_points() {
            let u = pt.ruling_coords();
            let (g1, dx) = vec_of(fc, pt.t, 1);
            let (_, x) = vec_of(fc, pt.t, 0);
            let mut st = g1;
            for (uj, dxj) in u.iter().zip(&dx) {
                st.axpy(*uj, dxj);
            }
            let cols: Vec<&AmbientVector> = std::iter::once(&st).chain(&x).collect();
            let j = DMatrix::from_fn(fc.dim(), cols.len(), |i, k| cols[k][i]);
            max_sv = max_sv.max(j.singular_values().min());
        }
        if max_sv >= 1e-8 {
            bad.push(format!("{name}: Jacobian smallest singular value {max_sv:.2e} on the sheet"));
        }
        parts.push(format!("{name} {:.3}/{regular}", loc.singular_fraction));
    }
    let loc = singular_locus(&sheet("helicoid"), OFF_SHEET_SAMPLES, SEED).unwrap();
    if loc.singular_count() != 0 {
        bad.push(format!("helicoid: {} singular sheet samples", loc.singular_count()));
    }
    parts.push(format!("helicoid {} singular", loc.singular_count()));
    check(4, "singularity localization", bad, parts.join(", "))
}

/// Gauss curvature of the helicoid `(u cos t, u sin t, t)` from its fundamental forms.
fn helicoid_k(t: f64, u: f64) -> f64 {
    let (s, c) = t.sin_cos();
    let st = [-u * s, u * c, 1.0];
    let su = [c, s, 0.0];
    let stt = [-u * c, -u * s, 0.0];
    let stu = [-s, c, 0.0];
    let n = [st[1] * su[2] - st[2] * su[1], st[2] * su[0] - st[0] * su[2], st[0] * su[1] - st[1] * su[0]];
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let nn = dot(&n, &n).sqrt();
    let (e, f, g) = (dot(&st, &st), dot(&st, &su), dot(&su, &su));
    let (l, m) = (dot(&stt, &n) / nn, dot(&stu, &n) / nn);
    (l * 0.0 - m * m) / (e * g - f * f)
}

fn equivalences() -> Line {
    let mut bad = Vec::new();
    let mut parts = Vec::new();
    // corpus patches without planar points
    for name in ["helix_cylinder", "helicoid", "circular_cone", "tangent_developable_helix", "helix_tangent_product_r4", "two_rotation_r5"] {
        let p = patch(name);
        let r1 = rank_one_check(&p).unwrap();
        let st = stability_sweep(&p, 10, SEED).unwrap();
        let fl = flatness_check(&p).unwrap();
        let verdicts = (r1.is_rank_one, st.stable, fl.is_flat(FLATNESS_TOL));
        if r1.planar_count != 0 || verdicts.0 != verdicts.1 || verdicts.1 != verdicts.2 {
            bad.push(format!("{name}: planar {}, verdicts {verdicts:?}", r1.planar_count));
        }
        parts.push(format!("{name} {}", verdicts.0));
    }
    let p = patch("helicoid");
    let k = coordinate_sectional_curvatures(&p, 0.0, &[0.0]).unwrap()[0];
    let oracle = helicoid_k(0.0, 0.0);
    if (k + 1.0).abs() >= 1e-6 || (oracle + 1.0).abs() >= 1e-12 {
        bad.push(format!("helicoid K(0,0) = {k}, oracle {oracle}"));
    }
    for (t, u) in [(0.7, 0.5), (2.0, -0.9)] {
        let k = coordinate_sectional_curvatures(&p, t, &[u]).unwrap()[0];
        if (k - helicoid_k(t, u)).abs() >= 1e-6 {
            bad.push(format!("helicoid K({t},{u}) = {k}, oracle {}", helicoid_k(t, u)));
        }
    }
    check(5, "rank-one equivalences", bad, format!("{}; helicoid K(0,0) {k:.9}", parts.join(", ")))
}

fn first_normal() -> Line {
    let mut bad = Vec::new();
    let mut checked = 0;
    for info in builtin_families() {
        let p = patch(info.name);
        let prof = degree_profile(p.curve(), p.grid(), p.tol()).unwrap();
        let Some(d) = prof.constant_degree else { continue };
        let rep = first_normal_bounds_check(&p, d).unwrap();
        checked += rep.checked;
        if !rep.pass() {
            bad.push(format!("{}: {} violations", info.name, rep.violations.len()));
        }
    }
    check(6, "first normal bounds", bad, format!("{checked} regular points checked"))
}

fn invariance() -> Line {
    let mut bad = Vec::new();
    let mut parts = Vec::new();
    for name in ["circular_cone", "tangent_developable_helix"] {
        let s = sheet(name);
        let rep = directrix_invariance(&s, &default_offsets(s.patch().m())).unwrap();
        let done = rep.offsets.iter().filter(|o| o.deviation.is_some()).count();
        if done != 3 || rep.max_deviation >= 1e-6 {
            bad.push(format!("{name}: {done}/3 offsets, deviation {:.2e}", rep.max_deviation));
        }
        parts.push(format!("{name} {:.1e}", rep.max_deviation));
    }
    check(7, "directrix invariance", bad, parts.join(", "))
}

fn classification() -> Line {
    let mut bad = Vec::new();
    let want = [
        ("helix_cylinder", RegionKind::Cylindrical),
        ("circular_cone", RegionKind::Conical),
        ("tangent_developable_helix", RegionKind::Tangent),
        ("helicoid", RegionKind::NonRankOne),
        ("helix_tangent_product_r4", RegionKind::Tangent),
    ];
    for (name, kind) in want {
        let got = classify_patch(&patch(name), SEED).unwrap().single_kind();
        if got != Some(kind) {
            bad.push(format!("{name}: {got:?} != {kind:?}"));
        }
    }
    let s = sheet("helix_tangent_product_r4");
    let free = s.patch().m() - s.degree() - 1;
    let ranks = striction_rank_profile(&s);
    if free + 1 != 2 || ranks.iter().any(|&r| r != 2) {
        bad.push(format!("R^4 product sheet: {} parameters, ranks {:?}", free + 1, ranks.iter().min()));
    }
    for name in ["helicoid", "circular_cone", "tangent_developable_helix", "helix_tangent_product_r4"] {
        let c = converse_check(&patch(name), SEED).unwrap();
        if !c.applicable || !c.agree {
            bad.push(format!("{name}: converse {c:?}"));
        }
    }
    check(8, "classification", bad, "labels match, R^4 sheet 2-dimensional, converse agrees".into())
}

/// Richardson-extrapolated central difference.
fn fd(f: &ParamVectorField, order: usize, t: f64, h: f64) -> AmbientVector {
    let c = |h: f64| (f.eval(t + h, order - 1).unwrap() - f.eval(t - h, order - 1).unwrap()) * (0.5 / h);
    (c(h / 2.0) * 4.0 - c(h)) * (1.0 / 3.0)
}

fn hygiene() -> Line {
    let mut bad = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut fields = 0;
    for info in builtin_families() {
        let fc = build_builtin(info.name, &BTreeMap::new()).unwrap();
        let (a, b) = fc.interval();
        for f in std::iter::once(fc.directrix()).chain(fc.frame()) {
            fields += 1;
            for _ in 0..50 {
                let t = rng.gen_range(a + 2e-3..b - 2e-3);
                for order in 1..=2 {
                    let gap = (f.eval(t, order).unwrap() - fd(f, order, t, 1e-3)).max_abs();
                    worst = worst.max(gap);
                    if gap >= 1e-7 {
                        bad.push(format!("{} order {order} at t = {t}: {gap:.2e}", info.name));
                    }
                }
            }
        }
    }
    let got = classify_patch(&patch("rotating_frame_cylinder"), SEED).unwrap().single_kind();
    if got != Some(RegionKind::Cylindrical) {
        bad.push(format!("rotating_frame_cylinder: {got:?}"));
    }
    bad.truncate(10);
    check(9, "numerical hygiene", bad, format!("{fields} fields, max derivative gap {worst:.1e}; rotating frame {got:?}"))
}

fn main() -> ExitCode {
    let lines = [
        degrees(),
        striction_recovery(),
        a_matrix(),
        singularity(),
        equivalences(),
        first_normal(),
        invariance(),
        classification(),
        hygiene(),
    ];
    for l in &lines {
        println!("{}", l.text);
    }
    let failed = lines.iter().filter(|l| !l.ok).count();
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
