//! Release gate: runs the builtin corpus through every check and tabulates
//! observed values against their limits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ruled_core::classify::{classify_with_profile, converse_check, RegionKind};
use ruled_core::distribution::{degree_bound, degree_profile};
use ruled_core::multilinear::{AmbientVector, TolerancePolicy};
use ruled_core::parametric::ParamVectorField;
use ruled_core::ruledgeom::{
    coordinate_sectional_curvatures, first_normal_bounds_check, flatness_check, planar_points, rank_one_check,
    stability_sweep, RuledPatch, FLATNESS_TOL,
};
use ruled_core::striction::{
    default_offsets, directrix_invariance, singular_locus, solve_striction, StrictionSheet, OFF_SHEET_SAMPLES,
};

use crate::analyze::STABILITY_PAIRS;
use crate::error::CliError;
use crate::scene::{ingest_spec, Overrides, SceneSpec};

#[derive(Debug, Clone)]
pub struct CheckRow {
    pub patch: String,
    pub check: String,
    pub value: String,
    pub limit: String,
    pub pass: bool,
}

#[derive(Debug, Default)]
pub struct SelftestSummary {
    pub rows: Vec<CheckRow>,
}

impl SelftestSummary {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    fn push(&mut self, patch: &str, check: &str, value: String, limit: &str, pass: bool) {
        self.rows.push(CheckRow { patch: patch.into(), check: check.into(), value, limit: limit.into(), pass });
    }

    fn fail(&mut self, patch: &str, check: &str, err: impl std::fmt::Display) {
        self.push(patch, check, format!("error: {err}"), "-", false);
    }

    pub fn table(&self) -> String {
        let w = |f: &dyn Fn(&CheckRow) -> usize, h: usize| self.rows.iter().map(f).max().unwrap_or(0).max(h);
        let (wp, wc, wv) = (w(&|r| r.patch.len(), 5), w(&|r| r.check.len(), 5), w(&|r| r.value.len(), 5));
        let mut out = format!("{:wp$}  {:wc$}  {:wv$}  {:12}  result\n", "patch", "check", "value", "limit");
        for r in &self.rows {
            let verdict = if r.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{:wp$}  {:wc$}  {:wv$}  {:12}  {verdict}\n", r.patch, r.check, r.value, r.limit));
        }
        out.push_str(&format!("{} checks, {} failed\n", self.rows.len(), self.failures()));
        out
    }
}

struct CorpusEntry {
    name: &'static str,
    degree: usize,
    kind: RegionKind,
}

const CORPUS: &[CorpusEntry] = &[
    CorpusEntry { name: "helix_cylinder", degree: 0, kind: RegionKind::Cylindrical },
    CorpusEntry { name: "rotating_frame_cylinder", degree: 0, kind: RegionKind::Cylindrical },
    CorpusEntry { name: "helicoid", degree: 1, kind: RegionKind::NonRankOne },
    CorpusEntry { name: "circular_cone", degree: 1, kind: RegionKind::Conical },
    CorpusEntry { name: "tangent_developable_helix", degree: 1, kind: RegionKind::Tangent },
    CorpusEntry { name: "helix_tangent_product_r4", degree: 1, kind: RegionKind::Tangent },
    CorpusEntry { name: "two_rotation_r5", degree: 2, kind: RegionKind::NonRankOne },
];

const FD_SAMPLES: usize = 50;
const FD_STEP: f64 = 1e-3;

/// Central difference at step `h` and `h/2`, Richardson-extrapolated.
fn richardson(f: &dyn Fn(f64) -> ruled_core::Result<AmbientVector>, t: f64, h: f64) -> ruled_core::Result<AmbientVector> {
    let central = |h: f64| -> ruled_core::Result<AmbientVector> { Ok((f(t + h)? - f(t - h)?) * (0.5 / h)) };
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    Ok((fine * 4.0 - coarse) * (1.0 / 3.0))
}

/// Largest gap between analytic first/second derivatives and finite differences.
fn fd_gap(field: &ParamVectorField, interval: (f64, f64), rng: &mut ChaCha8Rng) -> ruled_core::Result<f64> {
    let (a, b) = interval;
    let mut worst = 0.0f64;
    for _ in 0..FD_SAMPLES {
        let t = rng.gen_range(a + 2.0 * FD_STEP..b - 2.0 * FD_STEP);
        for order in 1..=2 {
            let fd = richardson(&|s| field.eval(s, order - 1), t, FD_STEP)?;
            worst = worst.max((field.eval(t, order)? - fd).max_abs());
        }
    }
    Ok(worst)
}

fn sci(x: f64) -> String {
    format!("{x:.2e}")
}

fn check_sheet(s: &mut SelftestSummary, name: &str, p: &RuledPatch, sheet: &StrictionSheet, rank_one: bool, seed: u64) {
    let systems: Vec<_> = sheet.samples().iter().map(|x| &x.system).collect();
    let asym = systems.iter().map(|x| x.asymmetry()).fold(0.0, f64::max);
    let gram = systems.iter().map(|x| x.gram_defect()).fold(0.0, f64::max);
    let min_eig = systems.iter().map(|x| x.min_eigenvalue).fold(f64::INFINITY, f64::min);
    s.push(name, "A symmetric", sci(asym), "<= 1e-10", asym <= 1e-10);
    s.push(name, "A = Gram(rho X)", sci(gram), "<= 1e-10", gram <= 1e-10);
    s.push(name, "A positive definite", sci(min_eig), "> 0", min_eig > 0.0);

    match singular_locus(sheet, OFF_SHEET_SAMPLES, seed) {
        Ok(loc) => {
            if rank_one {
                let f = loc.singular_fraction;
                s.push(name, "sheet singular fraction", format!("{f:.4}"), ">= 0.99", f >= 0.99);
                let reg = loc.off_sheet.iter().filter(|x| x.regular).count();
                s.push(name, "off-sheet regular", format!("{reg}/{}", loc.off_sheet.len()), "all", loc.off_sheet_all_regular());
            } else {
                let n = loc.singular_count();
                s.push(name, "sheet singular points", n.to_string(), "0", n == 0);
            }
        }
        Err(e) => s.fail(name, "singular locus", e),
    }

    let pts = sheet.grid_points();
    let max_by = |f: &dyn Fn(&ruled_core::striction::SheetPoint) -> f64| pts.iter().map(f).fold(0.0, f64::max);
    match name {
        "circular_cone" => {
            let du = max_by(&|q| (q.solved[0] + std::f64::consts::SQRT_2).abs());
            s.push(name, "solved u = -sqrt 2", sci(du), "<= 1e-8", du <= 1e-8);
            let apex = max_by(&|q| q.beta.norm());
            s.push(name, "apex |beta|", sci(apex), "< 1e-6", apex < 1e-6);
        }
        "helicoid" => {
            let off_axis = max_by(&|q| q.beta[0].hypot(q.beta[1]));
            s.push(name, "striction line on z-axis", sci(off_axis), "<= 1e-8", off_axis <= 1e-8);
        }
        "tangent_developable_helix" => {
            let du = max_by(&|q| q.solved[0].abs());
            s.push(name, "solved u = 0", sci(du), "<= 1e-8", du <= 1e-8);
        }
        _ => {}
    }
    if matches!(name, "circular_cone" | "tangent_developable_helix") {
        match directrix_invariance(sheet, &default_offsets(p.m())) {
            Ok(r) => s.push(name, "directrix invariance", sci(r.max_deviation), "< 1e-6", r.max_deviation < 1e-6),
            Err(e) => s.fail(name, "directrix invariance", e),
        }
    }
}

fn run_entry(s: &mut SelftestSummary, e: &CorpusEntry, tol: &TolerancePolicy, t_samples: usize, seed: u64) {
    let name = e.name;
    let mut spec = SceneSpec::builtin(name);
    spec.tolerances = *tol;
    spec.grid.t_samples = t_samples;
    let p = match ingest_spec(&spec) {
        Ok(ing) => ing.patch,
        Err(err) => return s.fail(name, "ingest", err),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = std::iter::once(p.curve().directrix()).chain(p.curve().frame());
    let gap = fields.map(|f| fd_gap(f, p.curve().interval(), &mut rng)).try_fold(0.0f64, |m, g| g.map(|g| m.max(g)));
    match gap {
        Ok(g) => s.push(name, "derivatives vs finite differences", sci(g), "<= 1e-7", g <= 1e-7),
        Err(err) => s.fail(name, "derivatives vs finite differences", err),
    }

    let profile = match degree_profile(p.curve(), p.grid(), p.tol()) {
        Ok(pr) => pr,
        Err(err) => return s.fail(name, "degree profile", err),
    };
    let observed = match profile.constant_degree {
        Some(d) => d.to_string(),
        None => format!("varies {:?}", profile.segments.iter().map(|x| x.degree).collect::<Vec<_>>()),
    };
    s.push(name, "degree", observed, &e.degree.to_string(), profile.constant_degree == Some(e.degree));
    let nb = profile.borderline_t.len();
    s.push(name, "borderline rank decisions", nb.to_string(), "0", nb == 0);
    let bound = degree_bound(p.curve());
    s.push(name, "degree <= min(m-1, n+1)", format!("{} <= {bound}", profile.max_degree()), "-", profile.max_degree() <= bound);

    match classify_with_profile(&p, &profile, seed) {
        Ok(c) => {
            let got = c.single_kind().map(|k| format!("{k:?}")).unwrap_or_else(|| format!("{} regions", c.regions.len()));
            s.push(name, "classification", got, &format!("{:?}", e.kind), c.single_kind() == Some(e.kind));
        }
        Err(err) => s.fail(name, "classification", err),
    }

    if let Some(d) = profile.constant_degree {
        match first_normal_bounds_check(&p, d) {
            Ok(r) => s.push(name, "first normal bounds", format!("{} violations", r.violations.len()), "0", r.pass()),
            Err(err) => s.fail(name, "first normal bounds", err),
        }
    }

    let rank_one = match rank_one_check(&p) {
        Ok(r) => r.is_rank_one,
        Err(err) => return s.fail(name, "rank-one test", err),
    };
    match planar_points(&p) {
        Ok(pl) if pl.is_empty() => {
            let stable = stability_sweep(&p, STABILITY_PAIRS, seed).map(|r| r.stable);
            let flat = flatness_check(&p).map(|r| r.is_flat(FLATNESS_TOL));
            match (stable, flat) {
                (Ok(st), Ok(fl)) => s.push(
                    name,
                    "rank-one = stable tangents = flat",
                    format!("{rank_one}/{st}/{fl}"),
                    "all equal",
                    rank_one == st && st == fl,
                ),
                (Err(err), _) | (_, Err(err)) => s.fail(name, "rank-one equivalences", err),
            }
        }
        Ok(_) => {}
        Err(err) => s.fail(name, "planar points", err),
    }

    if name == "helicoid" {
        match coordinate_sectional_curvatures(&p, 0.0, &[0.0]) {
            Ok(k) => s.push(name, "K(0,0)", format!("{:.9}", k[0]), "-1 +- 1e-6", (k[0] + 1.0).abs() <= 1e-6),
            Err(err) => s.fail(name, "K(0,0)", err),
        }
    }

    if profile.constant_degree == Some(1) {
        match solve_striction(&p, 1) {
            Ok(sheet) => check_sheet(s, name, &p, &sheet, rank_one, seed),
            Err(err) => s.fail(name, "striction", err),
        }
        match converse_check(&p, seed) {
            Ok(c) => s.push(
                name,
                "singular along sheet <=> rank-one",
                format!("{}/{}", c.singular_along_sheet, c.rank_one),
                "equal",
                c.agree,
            ),
            Err(err) => s.fail(name, "converse", err),
        }
    }
}

/// Runs the corpus. Tolerance overrides are applied to every patch.
pub fn run_selftest(overrides: &Overrides, seed: u64) -> SelftestSummary {
    let mut tol = TolerancePolicy::default();
    if let Some(r) = overrides.rank_rel_tol {
        tol.rank_rel_tol = r;
    }
    if let Some(z) = overrides.zero_abs_tol {
        tol.zero_abs_tol = z;
    }
    let t_samples = overrides.t_samples.unwrap_or(200);
    let mut s = SelftestSummary::default();
    for e in CORPUS {
        run_entry(&mut s, e, &tol, t_samples, seed);
    }
    s
}

pub fn selftest_result(summary: &SelftestSummary) -> Result<(), CliError> {
    match summary.failures() {
        0 => Ok(()),
        n => Err(CliError::Selftest(n)),
    }
}
