//! The full analysis pipeline and its on-disk outputs.

use std::path::{Path, PathBuf};

use serde::Serialize;

use ruled_core::classify::{classify_with_profile, converse_check, ClassificationReport, ConverseCheck};
use ruled_core::distribution::{degree_profile, DegreeProfile, PivotKind};
use ruled_core::multilinear::AmbientVector;
use ruled_core::ruledgeom::{
    first_normal_bounds_check, flatness_check, rank_one_check, stability_sweep, FirstNormalReport, FlatnessReport,
    RankOneReport, RuledPatch, StabilityReport,
};
use ruled_core::striction::{
    default_offsets, directrix_invariance, equivalent_condition_check, sheet_csv, singular_locus, solve_striction,
    striction_rank_profile, InvarianceReport, OFF_SHEET_SAMPLES,
};

use crate::error::CliError;
use crate::mesh::mesh_obj;
use crate::scene::{Ingested, SceneSpec};

pub const REPORT_VERSION: u32 = 1;
/// Random tangent-space comparisons per `t` sample.
pub const STABILITY_PAIRS: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceSummary {
    pub rows: usize,
    pub disagreements: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrictionSummary {
    pub degree: usize,
    pub pivot: PivotKind,
    pub fallback_ts: Vec<f64>,
    pub max_defining_residual: f64,
    pub max_asymmetry: f64,
    pub max_gram_defect: f64,
    pub min_eigenvalue: f64,
    /// Range of each solved coordinate over the grid.
    pub solved_ranges: Vec<[f64; 2]>,
    pub jacobian_rank_min: usize,
    pub jacobian_rank_max: usize,
    pub sheet_points: usize,
    pub singular_points: usize,
    pub singular_fraction: f64,
    pub off_sheet_delta: f64,
    pub off_sheet_checked: usize,
    pub off_sheet_regular: usize,
    pub equivalence: Option<EquivalenceSummary>,
    pub invariance: InvarianceReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: u32,
    pub scene: SceneSpec,
    pub seed: u64,
    /// Label of the single region, or `mixed`.
    pub kind: String,
    pub classification: ClassificationReport,
    pub degree_profile: DegreeProfile,
    pub rank_one: RankOneReport,
    pub tangent_space_stability: StabilityReport,
    pub flatness: FlatnessReport,
    pub first_normal: Option<FirstNormalReport>,
    pub striction: Option<StrictionSummary>,
    pub converse: ConverseCheck,
}

/// Results of a run, kept in memory alongside the report.
pub struct Analysis {
    pub report: Report,
    pub striction_csv: Option<String>,
    pub striction_curve: Option<Vec<AmbientVector>>,
}

fn kind_label(c: &ClassificationReport) -> String {
    match c.single_kind() {
        Some(k) => serde_json::to_value(k).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
        None => "mixed".into(),
    }
}

fn summarize_striction(p: &RuledPatch, d: usize, seed: u64) -> Result<(StrictionSummary, String, Vec<AmbientVector>), CliError> {
    let sheet = solve_striction(p, d)?;
    let locus = singular_locus(&sheet, OFF_SHEET_SAMPLES, seed)?;
    let ranks = striction_rank_profile(&sheet);
    let equivalence = if p.m() < p.dim() {
        let tab = equivalent_condition_check(&sheet)?;
        Some(EquivalenceSummary {
            rows: tab.rows.len(),
            disagreements: tab.rows.iter().filter(|r| !r.agree).count(),
            skipped: tab.skipped.len(),
        })
    } else {
        None
    };
    let invariance = directrix_invariance(&sheet, &default_offsets(p.m()))?;
    let points = sheet.grid_points();
    let mut solved_ranges = vec![[f64::INFINITY, f64::NEG_INFINITY]; d];
    for pt in &points {
        for (r, &s) in solved_ranges.iter_mut().zip(&pt.solved) {
            r[0] = r[0].min(s);
            r[1] = r[1].max(s);
        }
    }
    let systems = sheet.samples().iter().map(|s| &s.system);
    let curve = if p.m() - d - 1 == 0 { points.iter().map(|pt| pt.beta.clone()).collect() } else { Vec::new() };
    let summary = StrictionSummary {
        degree: d,
        pivot: sheet.pivot().clone(),
        fallback_ts: sheet.fallback_ts(),
        max_defining_residual: sheet.max_defining_residual(),
        max_asymmetry: systems.clone().map(|s| s.asymmetry()).fold(0.0, f64::max),
        max_gram_defect: systems.clone().map(|s| s.gram_defect()).fold(0.0, f64::max),
        min_eigenvalue: systems.map(|s| s.min_eigenvalue).fold(f64::INFINITY, f64::min),
        solved_ranges,
        jacobian_rank_min: ranks.iter().copied().min().unwrap_or(0),
        jacobian_rank_max: ranks.iter().copied().max().unwrap_or(0),
        sheet_points: locus.entries.len(),
        singular_points: locus.singular_count(),
        singular_fraction: locus.singular_fraction,
        off_sheet_delta: locus.off_sheet_delta,
        off_sheet_checked: locus.off_sheet.len(),
        off_sheet_regular: locus.off_sheet.iter().filter(|s| s.regular).count(),
        equivalence,
        invariance,
    };
    Ok((summary, sheet_csv(&sheet, &locus), curve))
}

pub fn analyze(ing: &Ingested, seed: u64) -> Result<Analysis, CliError> {
    let p = &ing.patch;
    let profile = degree_profile(p.curve(), p.grid(), p.tol())?;
    let classification = classify_with_profile(p, &profile, seed)?;
    let rank_one = rank_one_check(p)?;
    let stability = stability_sweep(p, STABILITY_PAIRS, seed)?;
    let flatness = flatness_check(p)?;
    let first_normal = profile.constant_degree.map(|d| first_normal_bounds_check(p, d)).transpose()?;
    let (striction, striction_csv, striction_curve) = match profile.constant_degree {
        Some(d) if d >= 1 => {
            let (s, csv, curve) = summarize_striction(p, d, seed)?;
            (Some(s), Some(csv), Some(curve))
        }
        _ => (None, None, None),
    };
    let converse = converse_check(p, seed)?;
    let report = Report {
        version: REPORT_VERSION,
        scene: ing.normalized.clone(),
        seed,
        kind: kind_label(&classification),
        classification,
        degree_profile: profile,
        rank_one,
        tangent_space_stability: stability,
        flatness,
        first_normal,
        striction,
        converse,
    };
    Ok(Analysis { report, striction_csv, striction_curve })
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Runs the pipeline and writes `report.json`, `striction.csv` (degree ≥ 1)
/// and `mesh.obj` (surfaces in R^3) into `out_dir`.
pub fn run_analyze(ing: &Ingested, out_dir: &Path, seed: u64) -> Result<(Analysis, Vec<PathBuf>), CliError> {
    let analysis = analyze(ing, seed)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut json = serde_json::to_string_pretty(&analysis.report).expect("report serializes");
    json.push('\n');
    let mut written = vec![write(out_dir.join("report.json"), &json)?];
    if let Some(csv) = &analysis.striction_csv {
        written.push(write(out_dir.join("striction.csv"), csv)?);
    }
    let p = &ing.patch;
    if p.dim() == 3 && p.m() == 2 {
        let obj = mesh_obj(p, analysis.striction_curve.as_deref())?;
        written.push(write(out_dir.join("mesh.obj"), &obj)?);
    }
    Ok((analysis, written))
}
