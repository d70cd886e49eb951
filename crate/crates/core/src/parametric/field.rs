use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::multilinear::AmbientVector;

use super::arclength::ArclengthMap;
use super::jet::VecJet;
use super::spline::SampledField;

/// One coordinate of a Fourier-series field:
/// `constant + Σ_k cos[k-1]·cos(kωt) + sin[k-1]·sin(kωt)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierSeries {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
    #[serde(default = "unit_frequency")]
    pub frequency: f64,
}

fn unit_frequency() -> f64 {
    1.0
}

impl FourierSeries {
    fn eval(&self, t: f64, order: usize) -> f64 {
        let mut acc = if order == 0 { self.constant } else { 0.0 };
        let n = self.cos.len().max(self.sin.len());
        for k in 1..=n {
            let w = k as f64 * self.frequency;
            let a = self.cos.get(k - 1).copied().unwrap_or(0.0);
            let b = self.sin.get(k - 1).copied().unwrap_or(0.0);
            acc += a * cos_deriv(w, t, order) + b * sin_deriv(w, t, order);
        }
        acc
    }
}

/// `d^k/dt^k cos(ωt)`
pub(crate) fn cos_deriv(w: f64, t: f64, k: usize) -> f64 {
    let (s, c) = (w * t).sin_cos();
    let base = match k % 4 {
        0 => c,
        1 => -s,
        2 => -c,
        _ => s,
    };
    base * w.powi(k as i32)
}

/// `d^k/dt^k sin(ωt)`
pub(crate) fn sin_deriv(w: f64, t: f64, k: usize) -> f64 {
    let (s, c) = (w * t).sin_cos();
    let base = match k % 4 {
        0 => s,
        1 => c,
        2 => -s,
        _ => -c,
    };
    base * w.powi(k as i32)
}

fn poly_deriv(coeffs: &[f64], t: f64, order: usize) -> f64 {
    // Horner on the differentiated coefficients.
    let mut acc = 0.0;
    for (p, &c) in coeffs.iter().enumerate().skip(order).rev() {
        let falling: f64 = ((p - order + 1)..=p).map(|x| x as f64).product();
        acc = acc * t + c * falling;
    }
    acc
}

/// Closed-form curve families with derivatives of every order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinCurve {
    /// Unit-speed circular helix of radius `a` and pitch parameter `b`.
    Helix { a: f64, b: f64 },
    /// Unit-speed circle of radius `r` in the first coordinate plane.
    Circle { r: f64 },
    /// The first coordinate axis, `t ↦ t e_1`.
    Line,
    /// `(cos φ, sin φ, 0)` with `φ(t) = κ exp(-1/t)` for `t > 0` and `φ = 0` otherwise.
    /// Constant on `t ≤ 0`, turning on `t > 0`.
    BumpTwist { kappa: f64 },
}

impl BuiltinCurve {
    pub fn natural_dim(&self) -> usize {
        3
    }

    pub fn max_order(&self) -> usize {
        match self {
            BuiltinCurve::BumpTwist { .. } => 2,
            _ => usize::MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            BuiltinCurve::Helix { a, b } => a.is_finite() && b.is_finite() && a > 0.0 && (a * a + b * b) > 0.0,
            BuiltinCurve::Circle { r } => r.is_finite() && r > 0.0,
            BuiltinCurve::Line => true,
            BuiltinCurve::BumpTwist { kappa } => kappa.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(GeomError::Config(format!("invalid builtin curve parameters: {self:?}")))
        }
    }

    fn eval(&self, t: f64, order: usize) -> [f64; 3] {
        match *self {
            BuiltinCurve::Helix { a, b } => {
                let w = 1.0 / (a * a + b * b).sqrt();
                let z = match order {
                    0 => b * w * t,
                    1 => b * w,
                    _ => 0.0,
                };
                [a * cos_deriv(w, t, order), a * sin_deriv(w, t, order), z]
            }
            BuiltinCurve::Circle { r } => {
                let w = 1.0 / r;
                [r * cos_deriv(w, t, order), r * sin_deriv(w, t, order), 0.0]
            }
            BuiltinCurve::Line => match order {
                0 => [t, 0.0, 0.0],
                1 => [1.0, 0.0, 0.0],
                _ => [0.0; 3],
            },
            BuiltinCurve::BumpTwist { kappa } => {
                let (phi, d1, d2) = if t > 0.0 {
                    let e = (-1.0 / t).exp();
                    let t2 = t * t;
                    (kappa * e, kappa * e / t2, kappa * e * (1.0 - 2.0 * t) / (t2 * t2))
                } else {
                    (0.0, 0.0, 0.0)
                };
                let (s, c) = phi.sin_cos();
                match order {
                    0 => [c, s, 0.0],
                    1 => [-s * d1, c * d1, 0.0],
                    _ => [-c * d1 * d1 - s * d2, -s * d1 * d1 + c * d2, 0.0],
                }
            }
        }
    }
}

/// A smooth vector field along a parameter interval, with exact derivatives.
///
/// The first four kinds are user-facing (they appear in scene files); the
/// remaining ones are produced internally by reparametrization, sampling and
/// frame manipulation.
#[derive(Debug, Clone)]
pub enum ParamVectorField {
    /// Per-coordinate coefficient lists in ascending powers of `t`.
    Polynomial { coeffs: Vec<Vec<f64>> },
    Fourier { series: Vec<FourierSeries> },
    /// A closed-form family embedded into `dim` coordinates (zero padded).
    Builtin { curve: BuiltinCurve, dim: usize },
    Constant(AmbientVector),
    Sampled(Arc<SampledField>),
    /// `f(t(s))` where `t(s)` inverts the arclength of a curve.
    Reparametrized { inner: Arc<ParamVectorField>, map: Arc<ArclengthMap> },
    /// `Σ c_i f_i` with constant coefficients.
    Combination { terms: Vec<(f64, ParamVectorField)> },
    /// `f'`
    Derivative(Arc<ParamVectorField>),
    /// `f` with zero coordinates appended up to `dim`.
    Embedded { inner: Arc<ParamVectorField>, dim: usize },
}

impl ParamVectorField {
    pub fn polynomial(coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(GeomError::Input("polynomial field needs at least one coordinate".into()));
        }
        if coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(GeomError::Input("polynomial coefficients must be finite".into()));
        }
        Ok(ParamVectorField::Polynomial { coeffs })
    }

    pub fn fourier(series: Vec<FourierSeries>) -> Result<Self> {
        if series.is_empty() {
            return Err(GeomError::Input("fourier field needs at least one coordinate".into()));
        }
        for s in &series {
            let finite = s.constant.is_finite()
                && s.frequency.is_finite()
                && s.cos.iter().chain(&s.sin).all(|c| c.is_finite());
            if !finite {
                return Err(GeomError::Input("fourier coefficients must be finite".into()));
            }
        }
        Ok(ParamVectorField::Fourier { series })
    }

    pub fn builtin(curve: BuiltinCurve, dim: usize) -> Result<Self> {
        curve.validate()?;
        if dim < curve.natural_dim() {
            return Err(GeomError::Config(format!(
                "builtin curve needs ambient dimension at least {}, got {dim}",
                curve.natural_dim()
            )));
        }
        Ok(ParamVectorField::Builtin { curve, dim })
    }

    pub fn constant(v: AmbientVector) -> Self {
        ParamVectorField::Constant(v)
    }

    pub fn derivative(f: ParamVectorField) -> Self {
        ParamVectorField::Derivative(Arc::new(f))
    }

    pub fn embedded(f: ParamVectorField, dim: usize) -> Result<Self> {
        if dim < f.dim() {
            return Err(GeomError::Input(format!("cannot embed dimension {} into {dim}", f.dim())));
        }
        if dim == f.dim() {
            return Ok(f);
        }
        Ok(ParamVectorField::Embedded { inner: Arc::new(f), dim })
    }

    pub fn combination(terms: Vec<(f64, ParamVectorField)>) -> Result<Self> {
        let dim = terms
            .first()
            .map(|(_, f)| f.dim())
            .ok_or_else(|| GeomError::Input("empty combination".into()))?;
        if terms.iter().any(|(c, f)| f.dim() != dim || !c.is_finite()) {
            return Err(GeomError::Input("combination terms disagree in dimension".into()));
        }
        Ok(ParamVectorField::Combination { terms })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ParamVectorField::Polynomial { .. } => "polynomial",
            ParamVectorField::Fourier { .. } => "fourier",
            ParamVectorField::Builtin { .. } => "builtin",
            ParamVectorField::Constant(_) => "constant",
            ParamVectorField::Sampled(_) => "sampled",
            ParamVectorField::Reparametrized { .. } => "reparametrized",
            ParamVectorField::Combination { .. } => "combination",
            ParamVectorField::Derivative(_) => "derivative",
            ParamVectorField::Embedded { .. } => "embedded",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ParamVectorField::Polynomial { coeffs } => coeffs.len(),
            ParamVectorField::Fourier { series } => series.len(),
            ParamVectorField::Builtin { dim, .. } => *dim,
            ParamVectorField::Constant(v) => v.dim(),
            ParamVectorField::Sampled(s) => s.dim(),
            ParamVectorField::Reparametrized { inner, .. } => inner.dim(),
            ParamVectorField::Combination { terms } => terms[0].1.dim(),
            ParamVectorField::Derivative(f) => f.dim(),
            ParamVectorField::Embedded { dim, .. } => *dim,
        }
    }

    /// Closed parameter interval on which the field is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            ParamVectorField::Sampled(s) => s.domain(),
            ParamVectorField::Reparametrized { map, .. } => (0.0, map.length()),
            ParamVectorField::Combination { terms } => terms.iter().fold(
                (f64::NEG_INFINITY, f64::INFINITY),
                |(lo, hi), (_, f)| {
                    let (a, b) = f.domain();
                    (lo.max(a), hi.min(b))
                },
            ),
            ParamVectorField::Derivative(f) => f.domain(),
            ParamVectorField::Embedded { inner, .. } => inner.domain(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Highest derivative order available in closed form.
    pub fn max_order(&self) -> usize {
        match self {
            ParamVectorField::Builtin { curve, .. } => curve.max_order(),
            ParamVectorField::Sampled(_) | ParamVectorField::Reparametrized { .. } => 2,
            ParamVectorField::Combination { terms } => {
                terms.iter().map(|(_, f)| f.max_order()).min().unwrap_or(0)
            }
            ParamVectorField::Derivative(f) => f.max_order().saturating_sub(1),
            ParamVectorField::Embedded { inner, .. } => inner.max_order(),
            _ => usize::MAX,
        }
    }

    /// The `order`-th derivative at `t`.
    pub fn eval(&self, t: f64, order: usize) -> Result<AmbientVector> {
        if order > self.max_order() {
            return Err(GeomError::Order { order, kind: self.kind_name() });
        }
        let (lo, hi) = self.domain();
        let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()).min(1e12));
        if !t.is_finite() || t < lo - slack || t > hi + slack {
            return Err(GeomError::Domain { t, lo, hi });
        }
        Ok(self.eval_unchecked(t.clamp(lo, hi), order))
    }

    fn eval_unchecked(&self, t: f64, order: usize) -> AmbientVector {
        match self {
            ParamVectorField::Polynomial { coeffs } => {
                AmbientVector::from_vec(coeffs.iter().map(|c| poly_deriv(c, t, order)).collect())
            }
            ParamVectorField::Fourier { series } => {
                AmbientVector::from_vec(series.iter().map(|s| s.eval(t, order)).collect())
            }
            ParamVectorField::Builtin { curve, dim } => {
                AmbientVector::from_vec(curve.eval(t, order).to_vec()).padded(*dim)
            }
            ParamVectorField::Constant(v) => {
                if order == 0 {
                    v.clone()
                } else {
                    AmbientVector::zeros(v.dim())
                }
            }
            ParamVectorField::Sampled(s) => s.eval(t, order),
            ParamVectorField::Reparametrized { inner, map } => {
                let (tt, d1, d2) = map.inverse_jet(t);
                match order {
                    0 => inner.eval_unchecked(tt, 0),
                    1 => inner.eval_unchecked(tt, 1).scaled(d1),
                    _ => {
                        let mut out = inner.eval_unchecked(tt, 2).scaled(d1 * d1);
                        out.axpy(d2, &inner.eval_unchecked(tt, 1));
                        out
                    }
                }
            }
            ParamVectorField::Combination { terms } => {
                let mut out = AmbientVector::zeros(self.dim());
                for (c, f) in terms {
                    out.axpy(*c, &f.eval_unchecked(t, order));
                }
                out
            }
            ParamVectorField::Derivative(f) => f.eval_unchecked(t, order + 1),
            ParamVectorField::Embedded { inner, dim } => inner.eval_unchecked(t, order).padded(*dim),
        }
    }

    /// Value, first and second derivative at `t`.
    pub fn jet(&self, t: f64) -> Result<VecJet> {
        Ok(VecJet { v: self.eval(t, 0)?, d1: self.eval(t, 1)?, d2: self.eval(t, 2)? })
    }
}
