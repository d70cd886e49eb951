//! Scene files: parsing, ingestion into a validated patch, normalization.
//!
//! A scene either names a builtin family or lists a directrix and frame
//! fields. Ingestion reparametrizes a non-unit-speed directrix by arclength
//! and orthonormalizes a non-orthonormal frame on the sample grid; both steps
//! are recorded under `provenance` in the normalized scene.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use ruled_core::multilinear::{orthonormality_defect, AmbientVector, TolerancePolicy};
use ruled_core::parametric::{
    arclength_reparametrize, build_builtin, builtin_families, gram_schmidt_frame, BuiltinCurve, FourierSeries,
    FramedCurve, ParamVectorField, SampleGrid,
};
use ruled_core::ruledgeom::RuledPatch;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// Per coordinate, coefficients in ascending powers of `t`.
    Polynomial { coeffs: Vec<Vec<f64>> },
    Fourier { series: Vec<FourierSeries> },
    /// A closed-form curve, optionally differentiated.
    Curve {
        curve: BuiltinCurve,
        #[serde(default, skip_serializing_if = "is_zero")]
        derivative: usize,
    },
    Constant { value: Vec<f64> },
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl FieldSpec {
    fn build(&self, dim: usize) -> Result<ParamVectorField, CliError> {
        let f = match self {
            FieldSpec::Polynomial { coeffs } => ParamVectorField::polynomial(coeffs.clone())?,
            FieldSpec::Fourier { series } => ParamVectorField::fourier(series.clone())?,
            FieldSpec::Curve { curve, derivative } => {
                let mut f = ParamVectorField::builtin(*curve, dim)?;
                for _ in 0..*derivative {
                    f = ParamVectorField::derivative(f);
                }
                f
            }
            FieldSpec::Constant { value } => ParamVectorField::constant(AmbientVector::new(value.clone())?),
        };
        if f.dim() != dim {
            return Err(CliError::Scene(format!("{} field has dimension {} but ambient_dim is {dim}", f.kind_name(), f.dim())));
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinRef {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_t_samples")]
    pub t_samples: usize,
    #[serde(default = "default_u_extent")]
    pub u_extent: f64,
    #[serde(default = "default_u_samples")]
    pub u_samples_per_axis: usize,
}

fn default_t_samples() -> usize {
    200
}
fn default_u_extent() -> f64 {
    1.0
}
fn default_u_samples() -> usize {
    5
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { t_samples: default_t_samples(), u_extent: default_u_extent(), u_samples_per_axis: default_u_samples() }
    }
}

/// What ingestion did to the input. Recomputed on every ingestion; ignored on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub reparametrized: bool,
    pub orthonormalized: bool,
    /// Length of the directrix over `interval`.
    pub arclength: f64,
    /// Parameter interval of the analyzed patch (`[0, arclength]` after reparametrization).
    pub analysis_interval: [f64; 2],
    pub max_speed_deviation: f64,
    pub max_frame_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<BuiltinRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directrix: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frame: Vec<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: TolerancePolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Command-line overrides applied on top of a scene file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub t_samples: Option<usize>,
    pub u_extent: Option<f64>,
    pub rank_rel_tol: Option<f64>,
    pub zero_abs_tol: Option<f64>,
}

impl SceneSpec {
    pub fn builtin(name: &str) -> Self {
        SceneSpec {
            ambient_dim: None,
            m: None,
            builtin: Some(BuiltinRef { name: name.to_string(), params: BTreeMap::new() }),
            directrix: None,
            frame: Vec::new(),
            interval: None,
            grid: GridSpec::default(),
            tolerances: TolerancePolicy::default(),
            provenance: None,
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.t_samples {
            self.grid.t_samples = n;
        }
        if let Some(e) = o.u_extent {
            self.grid.u_extent = e;
        }
        if let Some(r) = o.rank_rel_tol {
            self.tolerances.rank_rel_tol = r;
        }
        if let Some(z) = o.zero_abs_tol {
            self.tolerances.zero_abs_tol = z;
        }
    }
}

pub fn parse_scene(text: &str) -> Result<SceneSpec, CliError> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_scene(path: &Path) -> Result<SceneSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scene(&text)
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub patch: RuledPatch,
    /// The input with every default filled in, plus provenance.
    pub normalized: SceneSpec,
}

impl Ingested {
    /// Pretty JSON of the normalized scene, newline-terminated.
    pub fn normalized_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.normalized).expect("scene serializes");
        s.push('\n');
        s
    }
}

fn check_count(label: &str, given: Option<usize>, actual: usize) -> Result<(), CliError> {
    match given {
        Some(g) if g != actual => Err(CliError::Scene(format!("{label} is {g} but the scene defines {actual}"))),
        _ => Ok(()),
    }
}

fn uniform(interval: (f64, f64), g: &GridSpec) -> Result<SampleGrid, CliError> {
    Ok(SampleGrid::uniform(interval, g.t_samples, g.u_extent, g.u_samples_per_axis)?)
}

fn interval_of(spec: &SceneSpec) -> Option<(f64, f64)> {
    spec.interval.map(|[a, b]| (a, b))
}

pub fn ingest_spec(spec: &SceneSpec) -> Result<Ingested, CliError> {
    spec.tolerances.validate()?;
    let tol = spec.tolerances;
    let mut normalized = spec.clone();
    match (&spec.builtin, &spec.directrix) {
        (Some(_), Some(_)) => return Err(CliError::Scene("give either `builtin` or `directrix`, not both".into())),
        (None, None) => return Err(CliError::Scene("scene needs `builtin` or `directrix` with `frame`".into())),
        _ => {}
    }

    if let Some(b) = &spec.builtin {
        if !spec.frame.is_empty() {
            return Err(CliError::Scene("`frame` cannot be combined with `builtin`".into()));
        }
        let mut fc = build_builtin(&b.name, &b.params)?;
        if let Some(iv) = interval_of(spec) {
            fc = fc.with_interval(iv)?;
        }
        check_count("ambient_dim", spec.ambient_dim, fc.dim())?;
        check_count("m", spec.m, fc.m())?;
        let info = builtin_families().iter().find(|i| i.name == b.name).expect("build_builtin accepted the name");
        let mut params = b.params.clone();
        for (k, v) in info.params {
            params.entry((*k).to_string()).or_insert(*v);
        }
        let grid = uniform(fc.interval(), &spec.grid)?;
        let (a, z) = fc.interval();
        normalized.builtin = Some(BuiltinRef { name: b.name.clone(), params });
        normalized.ambient_dim = Some(fc.dim());
        normalized.m = Some(fc.m());
        normalized.interval = Some([a, z]);
        let (speed_dev, defect) = deviations(&fc, &grid)?;
        normalized.provenance = Some(Provenance {
            source: "builtin".into(),
            reparametrized: false,
            orthonormalized: false,
            arclength: z - a,
            analysis_interval: [a, z],
            max_speed_deviation: speed_dev,
            max_frame_defect: defect,
        });
        let patch = RuledPatch::new(fc, grid, tol)?;
        return Ok(Ingested { patch, normalized });
    }

    let directrix_spec = spec.directrix.as_ref().expect("checked above");
    let dim = spec.ambient_dim.ok_or_else(|| CliError::Scene("`ambient_dim` is required with `directrix`".into()))?;
    let m = spec.frame.len() + 1;
    check_count("m", spec.m, m)?;
    let interval = interval_of(spec).ok_or_else(|| CliError::Scene("`interval` is required with `directrix`".into()))?;
    let directrix = directrix_spec.build(dim)?;
    let mut frame = spec.frame.iter().map(|f| f.build(dim)).collect::<Result<Vec<_>, _>>()?;
    let mut fc = FramedCurve::new(dim, m, directrix.clone(), frame.clone(), interval)?;
    let grid = uniform(interval, &spec.grid)?;
    let (speed_dev, defect) = deviations(&fc, &grid)?;

    let orthonormalized = defect > tol.derivative_check_tol;
    if orthonormalized {
        frame = gram_schmidt_frame(&frame, &grid, &tol)?;
        fc = fc.with_frame(frame.clone())?;
    }
    let reparametrized = speed_dev > tol.derivative_check_tol;
    let (fc, grid, arclength) = if reparametrized {
        let r = arclength_reparametrize(&directrix, interval, tol.zero_abs_tol)?;
        let len = r.length();
        let new_frame = frame.into_iter().map(|x| r.along(x)).collect();
        let fc = FramedCurve::new(dim, m, r.curve.clone(), new_frame, (0.0, len))?;
        let mut ss: Vec<f64> = grid.t_samples().iter().map(|&t| r.map.s_of_t(t)).collect();
        ss[0] = 0.0;
        *ss.last_mut().expect("grid is nonempty") = len;
        (fc, grid.with_t_samples(ss)?, len)
    } else {
        (fc, grid, interval.1 - interval.0)
    };
    let (a, z) = fc.interval();
    normalized.ambient_dim = Some(dim);
    normalized.m = Some(m);
    normalized.provenance = Some(Provenance {
        source: "fields".into(),
        reparametrized,
        orthonormalized,
        arclength,
        analysis_interval: [a, z],
        max_speed_deviation: speed_dev,
        max_frame_defect: defect,
    });
    let patch = RuledPatch::new(fc, grid, tol)?;
    Ok(Ingested { patch, normalized })
}

/// Largest deviation from unit speed and from frame orthonormality on the grid.
fn deviations(fc: &FramedCurve, grid: &SampleGrid) -> Result<(f64, f64), CliError> {
    let mut speed = 0.0f64;
    let mut defect = 0.0f64;
    for &t in grid.t_samples() {
        speed = speed.max((fc.directrix_at(t, 1)?.norm() - 1.0).abs());
        defect = defect.max(orthonormality_defect(&fc.frame_at(t)?));
    }
    Ok((speed, defect))
}

pub fn ingest(path: &Path, overrides: &Overrides) -> Result<Ingested, CliError> {
    let mut spec = load_scene(path)?;
    spec.apply(overrides);
    ingest_spec(&spec)
}
