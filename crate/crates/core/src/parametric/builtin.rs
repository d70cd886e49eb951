//! Named ruled patches with closed-form directrix and frame.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::multilinear::AmbientVector;

use super::field::{BuiltinCurve, FourierSeries, ParamVectorField};
use super::FramedCurve;

#[derive(Debug, Clone, Serialize)]
pub struct BuiltinPatchInfo {
    pub name: &'static str,
    pub description: &'static str,
    /// Parameter names with their defaults.
    pub params: &'static [(&'static str, f64)],
    pub ambient_dim: usize,
    pub m: usize,
}

const HELIX_PARAMS: &[(&str, f64)] = &[("a", FRAC_1_SQRT_2), ("b", FRAC_1_SQRT_2)];

static REGISTRY: &[BuiltinPatchInfo] = &[
    BuiltinPatchInfo {
        name: "helix_cylinder",
        description: "cylinder over a unit-speed helix in R^4, rulings along e4",
        params: HELIX_PARAMS,
        ambient_dim: 4,
        m: 2,
    },
    BuiltinPatchInfo {
        name: "plane",
        description: "the plane x3 = 0 swept by e2 along the x1-axis",
        params: &[],
        ambient_dim: 3,
        m: 2,
    },
    BuiltinPatchInfo {
        name: "circular_cone",
        description: "cone with apex at the origin over the circle of radius r at height h",
        params: &[("r", 1.0), ("h", 1.0)],
        ambient_dim: 3,
        m: 2,
    },
    BuiltinPatchInfo {
        name: "helicoid",
        description: "classical helicoid: directrix (0,0,t), ruling (cos t, sin t, 0)",
        params: &[],
        ambient_dim: 3,
        m: 2,
    },
    BuiltinPatchInfo {
        name: "tangent_developable_helix",
        description: "tangent developable of a unit-speed helix",
        params: HELIX_PARAMS,
        ambient_dim: 3,
        m: 2,
    },
    BuiltinPatchInfo {
        name: "helix_tangent_product_r4",
        description: "tangent developable of a helix times the e4-line (m = 3 in R^4)",
        params: HELIX_PARAMS,
        ambient_dim: 4,
        m: 3,
    },
    BuiltinPatchInfo {
        name: "two_rotation_r5",
        description: "two independently rotating rulings in R^5, degree 2",
        params: &[],
        ambient_dim: 5,
        m: 3,
    },
    BuiltinPatchInfo {
        name: "rotating_frame_cylinder",
        description: "rotating frame spanning a fixed plane along a line in R^4, degree 0",
        params: &[],
        ambient_dim: 4,
        m: 3,
    },
    BuiltinPatchInfo {
        name: "bump_twist",
        description: "ruling frozen for t <= 0 and turning for t > 0 (degree jumps 0 -> 1)",
        params: &[("kappa", 1.0)],
        ambient_dim: 3,
        m: 2,
    },
    BuiltinPatchInfo {
        name: "twisted_pair_r4",
        description: "degree-1 frame in R^4 where neither field alone carries the degree on the whole interval",
        params: &[],
        ambient_dim: 4,
        m: 3,
    },
];

pub fn builtin_families() -> &'static [BuiltinPatchInfo] {
    REGISTRY
}

fn fourier(terms: &[(f64, &[f64], &[f64])], frequency: f64) -> Result<ParamVectorField> {
    ParamVectorField::fourier(
        terms
            .iter()
            .map(|(c, cos, sin)| FourierSeries {
                constant: *c,
                cos: cos.to_vec(),
                sin: sin.to_vec(),
                frequency,
            })
            .collect(),
    )
}

fn axis_line(dim: usize, axis: usize) -> Result<ParamVectorField> {
    let mut coeffs = vec![vec![0.0]; dim];
    coeffs[axis] = vec![0.0, 1.0];
    ParamVectorField::polynomial(coeffs)
}

fn unit(dim: usize, i: usize) -> ParamVectorField {
    ParamVectorField::constant(AmbientVector::unit(dim, i))
}

/// Tangent developable of a unit-speed curve: the ruling is the curve's velocity.
pub fn tangent_developable(curve: ParamVectorField, interval: (f64, f64)) -> Result<FramedCurve> {
    let dim = curve.dim();
    let frame = ParamVectorField::derivative(curve.clone());
    FramedCurve::new(dim, 2, curve, vec![frame], interval)
}

/// Appends `k` constant directions `e_{dim+1}, …, e_{dim+k}` to the frame,
/// embedding everything into `R^{dim+k}`.
pub fn product_with_constant_directions(fc: &FramedCurve, k: usize) -> Result<FramedCurve> {
    let dim = fc.dim() + k;
    let directrix = ParamVectorField::embedded(fc.directrix().clone(), dim)?;
    let mut frame = fc
        .frame()
        .iter()
        .map(|f| ParamVectorField::embedded(f.clone(), dim))
        .collect::<Result<Vec<_>>>()?;
    frame.extend((fc.dim()..dim).map(|i| unit(dim, i)));
    FramedCurve::new(dim, fc.m() + k, directrix, frame, fc.interval())
}

/// Looks up a builtin by name, filling unspecified parameters with defaults.
pub fn build_builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<FramedCurve> {
    let info = REGISTRY
        .iter()
        .find(|i| i.name == name)
        .ok_or_else(|| GeomError::Config(format!("unknown builtin family '{name}'")))?;
    if let Some(k) = params.keys().find(|k| !info.params.iter().any(|(p, _)| p == k)) {
        return Err(GeomError::Config(format!("builtin '{name}' has no parameter '{k}'")));
    }
    let p = |key: &str| -> f64 {
        params
            .get(key)
            .copied()
            .unwrap_or_else(|| info.params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).unwrap())
    };
    let helix = |dim: usize| ParamVectorField::builtin(BuiltinCurve::Helix { a: p("a"), b: p("b") }, dim);
    let two_pi = (0.0, 2.0 * PI);
    match name {
        "helix_cylinder" => FramedCurve::new(4, 2, helix(4)?, vec![unit(4, 3)], two_pi),
        "plane" => FramedCurve::new(3, 2, axis_line(3, 0)?, vec![unit(3, 1)], (0.0, 2.0)),
        "circular_cone" => {
            let (r, h) = (p("r"), p("h"));
            if !(r > 0.0 && h.is_finite()) {
                return Err(GeomError::Config(format!("circular_cone needs r > 0, got r = {r}")));
            }
            let w = 1.0 / r;
            let l = (r * r + h * h).sqrt();
            let directrix = fourier(&[(0.0, &[r], &[]), (0.0, &[], &[r]), (h, &[], &[])], w)?;
            let ruling = fourier(&[(0.0, &[r / l], &[]), (0.0, &[], &[r / l]), (h / l, &[], &[])], w)?;
            FramedCurve::new(3, 2, directrix, vec![ruling], (0.0, 2.0 * PI * r))
        }
        "helicoid" => {
            let ruling = fourier(&[(0.0, &[1.0], &[]), (0.0, &[], &[1.0]), (0.0, &[], &[])], 1.0)?;
            FramedCurve::new(3, 2, axis_line(3, 2)?, vec![ruling], two_pi)
        }
        "tangent_developable_helix" => tangent_developable(helix(3)?, two_pi),
        "helix_tangent_product_r4" => {
            product_with_constant_directions(&tangent_developable(helix(3)?, two_pi)?, 1)
        }
        "two_rotation_r5" => {
            let z: &[f64] = &[];
            let x1 = fourier(&[(0.0, z, z), (0.0, &[1.0], z), (0.0, z, &[1.0]), (0.0, z, z), (0.0, z, z)], 1.0)?;
            let x2 = fourier(&[(0.0, z, z), (0.0, z, z), (0.0, z, z), (0.0, &[1.0], z), (0.0, z, &[1.0])], 1.0)?;
            FramedCurve::new(5, 3, axis_line(5, 0)?, vec![x1, x2], two_pi)
        }
        "rotating_frame_cylinder" => {
            let z: &[f64] = &[];
            let x1 = fourier(&[(0.0, z, z), (0.0, &[1.0], z), (0.0, z, &[1.0]), (0.0, z, z)], 1.0)?;
            let x2 = fourier(&[(0.0, z, z), (0.0, z, &[-1.0]), (0.0, &[1.0], z), (0.0, z, z)], 1.0)?;
            FramedCurve::new(4, 3, axis_line(4, 0)?, vec![x1, x2], two_pi)
        }
        "bump_twist" => {
            let ruling = ParamVectorField::builtin(BuiltinCurve::BumpTwist { kappa: p("kappa") }, 3)?;
            FramedCurve::new(3, 2, axis_line(3, 2)?, vec![ruling], (-1.0, 1.0))
        }
        "twisted_pair_r4" => {
            // Y = (0, cos t, 0, sin t); X1 = cos t e3 + sin t Y, X2 = -sin t e3 + cos t Y
            let z: &[f64] = &[];
            let x1 = fourier(
                &[(0.0, z, z), (0.0, z, &[0.0, 0.5]), (0.0, &[1.0], z), (0.5, &[0.0, -0.5], z)],
                1.0,
            )?;
            let x2 = fourier(
                &[(0.0, z, z), (0.5, &[0.0, 0.5], z), (0.0, z, &[-1.0]), (0.0, z, &[0.0, 0.5])],
                1.0,
            )?;
            FramedCurve::new(4, 3, axis_line(4, 0)?, vec![x1, x2], (-0.5, 2.0))
        }
        _ => unreachable!("registry and constructor table out of sync"),
    }
}
