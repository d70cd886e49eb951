//! Segmentation of a patch into cylindrical, conical and tangent regions.

use serde::Serialize;

use crate::distribution::{degree_profile, DegreeProfile, PivotKind};
use crate::error::{GeomError, Result};
use crate::multilinear::AmbientVector;
use crate::ruledgeom::{planar_points, rank_one_check, RuledPatch};
use crate::striction::{singular_locus, solve_striction, striction_rank_profile, StrictionSheet, OFF_SHEET_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Cylindrical,
    Conical,
    Tangent,
    NonRankOne,
    Undetermined,
}

/// Fraction of sheet samples that must be singular for the sheet to count as singular.
pub const SINGULAR_COVERAGE: f64 = 0.99;
/// Shortest run, in grid steps, that a striction-rank split may produce.
pub const MIN_SPLIT_STEPS: usize = 4;
/// Shortest degree run that is analyzed at all.
pub const MIN_RUN_SAMPLES: usize = 3;

#[derive(Debug, Clone, Default, Serialize)]
pub struct RegionEvidence {
    pub rank_one_residual_max: Option<f64>,
    pub planar: bool,
    /// Smallest striction Jacobian rank per sample of the region.
    pub striction_ranks: Vec<usize>,
    pub singular_fraction: Option<f64>,
    pub non_singular_ts: Vec<f64>,
    pub off_sheet_regular: Option<bool>,
    pub pivot: Option<PivotKind>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Region {
    pub t_range: (f64, f64),
    pub first_index: usize,
    pub last_index: usize,
    pub kind: RegionKind,
    pub degree: Option<usize>,
    pub evidence: RegionEvidence,
    /// The common point of all rulings, for conical regions of surfaces.
    pub apex: Option<AmbientVector>,
}

impl Region {
    /// Checks that the label is backed by its evidence.
    fn validate(&self, m: usize, tol: f64) -> Result<()> {
        let ev = &self.evidence;
        let bad = |why: &str| Err(GeomError::Numeric(format!("region {:?} labeled {:?}: {why}", self.t_range, self.kind)));
        match self.kind {
            RegionKind::Cylindrical if self.degree != Some(0) => bad("degree is not 0"),
            RegionKind::Conical | RegionKind::Tangent => {
                if self.degree != Some(1) {
                    return bad("degree is not 1");
                }
                if ev.rank_one_residual_max.is_none_or(|r| r >= tol) {
                    return bad("rank-one residual not below tolerance");
                }
                if ev.singular_fraction.is_none_or(|f| f < SINGULAR_COVERAGE) {
                    return bad("singular locus does not cover the sheet");
                }
                let want = if self.kind == RegionKind::Conical { m - 2 } else { m - 1 };
                if ev.striction_ranks.iter().any(|&r| r != want) {
                    return bad("striction Jacobian rank not constant at the expected value");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub regions: Vec<Region>,
    pub boundary_points: Vec<f64>,
    pub is_rank_one: bool,
    pub is_cylinder: bool,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    /// The label of the patch when a single region covers it.
    pub fn single_kind(&self) -> Option<RegionKind> {
        match self.regions.as_slice() {
            [r] => Some(r.kind),
            _ => None,
        }
    }
}

struct Run {
    first: usize,
    last: usize,
    degree: usize,
}

/// Maximal runs of equal degree over non-borderline samples, plus the
/// excluded boundary parameters.
fn degree_runs(profile: &DegreeProfile) -> (Vec<Run>, Vec<f64>) {
    let mut runs: Vec<Run> = Vec::new();
    let mut boundary = Vec::new();
    let s = &profile.samples;
    for (i, smp) in s.iter().enumerate() {
        if smp.borderline {
            boundary.push(smp.t);
            continue;
        }
        match runs.last_mut() {
            Some(run) if run.degree == smp.degree && run.last + 1 == i => run.last = i,
            Some(run) => {
                if run.last + 1 == i {
                    boundary.push(0.5 * (s[run.last].t + smp.t));
                }
                runs.push(Run { first: i, last: i, degree: smp.degree });
            }
            None => runs.push(Run { first: i, last: i, degree: smp.degree }),
        }
    }
    (runs, boundary)
}

fn sub_patch(p: &RuledPatch, first: usize, last: usize) -> Result<RuledPatch> {
    let ts = p.grid().t_samples()[first..=last].to_vec();
    RuledPatch::new(p.curve().clone(), p.grid().with_t_samples(ts)?, p.tol().clone())
}

fn region(p: &RuledPatch, first: usize, last: usize, kind: RegionKind, degree: Option<usize>, evidence: RegionEvidence) -> Region {
    let ts = p.grid().t_samples();
    Region { t_range: (ts[first], ts[last]), first_index: first, last_index: last, kind, degree, evidence, apex: None }
}

fn split_by_striction_rank(
    p: &RuledPatch,
    run: &Run,
    sheet: &StrictionSheet,
    evidence: RegionEvidence,
    boundary: &mut Vec<f64>,
) -> Vec<Region> {
    let m = p.m();
    let ranks = striction_rank_profile(sheet);
    let ts = p.grid().t_samples();
    let mut out = Vec::new();
    let mut start = 0;
    while start < ranks.len() {
        let mut end = start;
        while end + 1 < ranks.len() && ranks[end + 1] == ranks[start] {
            end += 1;
        }
        let (first, last) = (run.first + start, run.first + end);
        let mut ev = evidence.clone();
        ev.striction_ranks = ranks[start..=end].to_vec();
        let whole = start == 0 && end + 1 == ranks.len();
        let kind = if !whole && end - start < MIN_SPLIT_STEPS {
            ev.notes.push(format!("striction-rank run shorter than {MIN_SPLIT_STEPS} grid steps"));
            RegionKind::Undetermined
        } else if ranks[start] == m - 1 {
            RegionKind::Tangent
        } else if ranks[start] == m - 2 {
            RegionKind::Conical
        } else {
            ev.notes.push(format!("striction Jacobian rank {} below m - 2", ranks[start]));
            RegionKind::Undetermined
        };
        let mut r = region(p, first, last, kind, Some(1), ev);
        if kind == RegionKind::Conical && m == 2 {
            let pts: Vec<AmbientVector> = sheet.samples()[start..=end].iter().map(|s| s.point(&[]).beta).collect();
            let mut mean = AmbientVector::zeros(p.dim());
            for q in &pts {
                mean.axpy(1.0 / pts.len() as f64, q);
            }
            r.apex = Some(mean);
        }
        out.push(r);
        if end + 1 < ranks.len() {
            boundary.push(0.5 * (ts[last] + ts[last + 1]));
        }
        start = end + 1;
    }
    out
}

fn classify_run(p: &RuledPatch, run: &Run, seed: u64, boundary: &mut Vec<f64>) -> Result<Vec<Region>> {
    let mut ev = RegionEvidence::default();
    if run.last - run.first + 1 < MIN_RUN_SAMPLES {
        ev.notes.push(format!("degree run shorter than {MIN_RUN_SAMPLES} samples"));
        return Ok(vec![region(p, run.first, run.last, RegionKind::Undetermined, Some(run.degree), ev)]);
    }
    let sub = sub_patch(p, run.first, run.last)?;
    let r1 = rank_one_check(&sub)?;
    ev.rank_one_residual_max = Some(r1.max_residual);
    let single = |kind, ev| Ok(vec![region(p, run.first, run.last, kind, Some(run.degree), ev)]);
    match run.degree {
        0 => {
            let planar = planar_points(&sub)?.len();
            let total = sub.sample_points().len();
            if planar == total {
                ev.planar = true;
                ev.notes.push("second fundamental form vanishes on the whole region (planar)".into());
            }
            single(RegionKind::Cylindrical, ev)
        }
        1 => {
            let sheet = match solve_striction(&sub, 1) {
                Ok(s) => s,
                Err(e @ (GeomError::Degeneracy { .. } | GeomError::Pivot { .. } | GeomError::Numeric(_))) => {
                    ev.notes.push(format!("striction sheet unavailable: {e}"));
                    let kind = if r1.is_rank_one { RegionKind::Undetermined } else { RegionKind::NonRankOne };
                    return single(kind, ev);
                }
                Err(e) => return Err(e),
            };
            ev.pivot = Some(sheet.pivot().clone());
            let locus = singular_locus(&sheet, OFF_SHEET_SAMPLES, seed)?;
            ev.singular_fraction = Some(locus.singular_fraction);
            ev.off_sheet_regular = Some(locus.off_sheet_all_regular());
            ev.non_singular_ts = locus.singular_by_t().into_iter().filter(|(_, s)| !s).map(|(t, _)| t).collect();
            if !r1.is_rank_one {
                if r1.planar_count > 0 {
                    ev.notes.push(format!("{} planar sample points", r1.planar_count));
                }
                return single(RegionKind::NonRankOne, ev);
            }
            if locus.singular_fraction < SINGULAR_COVERAGE {
                ev.notes.push("rank-one but the striction sheet is not singular".into());
                return single(RegionKind::Undetermined, ev);
            }
            Ok(split_by_striction_rank(p, run, &sheet, ev, boundary))
        }
        _ => {
            if r1.is_rank_one {
                ev.notes.push("rank-one test passed with degree >= 2".into());
            }
            single(RegionKind::NonRankOne, ev)
        }
    }
}

pub fn classify_patch(p: &RuledPatch, seed: u64) -> Result<ClassificationReport> {
    let profile = degree_profile(p.curve(), p.grid(), p.tol())?;
    classify_with_profile(p, &profile, seed)
}

pub fn classify_with_profile(p: &RuledPatch, profile: &DegreeProfile, seed: u64) -> Result<ClassificationReport> {
    let (runs, mut boundary_points) = degree_runs(profile);
    let mut regions = Vec::new();
    for run in &runs {
        regions.extend(classify_run(p, run, seed, &mut boundary_points)?);
    }
    let tol = p.tol().zero_abs_tol;
    for r in &regions {
        r.validate(p.m(), tol)?;
    }
    boundary_points.sort_by(f64::total_cmp);
    let mut notes = Vec::new();
    if !profile.borderline_t.is_empty() {
        notes.push(format!("{} samples with borderline rank decisions excluded", profile.borderline_t.len()));
    }
    let is_rank_one = rank_one_check(p)?.is_rank_one;
    Ok(ClassificationReport { regions, boundary_points, is_rank_one, is_cylinder: profile.cylindrical, notes })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConverseCheck {
    pub applicable: bool,
    pub singular_along_sheet: bool,
    pub singular_somewhere: bool,
    pub rank_one: bool,
    pub agree: bool,
    pub note: Option<String>,
}

/// For degree-one patches: the sheet is singular at every sample exactly
/// when the patch is rank-one.
pub fn converse_check(p: &RuledPatch, seed: u64) -> Result<ConverseCheck> {
    let profile = degree_profile(p.curve(), p.grid(), p.tol())?;
    let rank_one = rank_one_check(p)?.is_rank_one;
    if profile.constant_degree != Some(1) {
        return Ok(ConverseCheck {
            applicable: false,
            singular_along_sheet: false,
            singular_somewhere: false,
            rank_one,
            agree: true,
            note: Some("degree is not identically 1".into()),
        });
    }
    let sheet = solve_striction(p, 1)?;
    let locus = singular_locus(&sheet, 0, seed)?;
    let singular_along_sheet = locus.singular_fraction >= SINGULAR_COVERAGE;
    let singular_somewhere = locus.singular_count() > 0;
    let note = (singular_somewhere && !singular_along_sheet)
        .then(|| "singular on part of the sheet only; the converse hypothesis needs every t".to_string());
    Ok(ConverseCheck {
        applicable: true,
        singular_along_sheet,
        singular_somewhere,
        rank_one,
        agree: singular_along_sheet == rank_one,
        note,
    })
}
