//! Curves, vector fields along curves, and framed curves.

pub mod arclength;
pub mod builtin;
pub mod field;
pub mod frames;
pub mod jet;
pub mod spline;

pub use arclength::{arclength_reparametrize, ArclengthMap, Reparametrization};
pub use builtin::{builtin_families, build_builtin, product_with_constant_directions, BuiltinPatchInfo};
pub use field::{BuiltinCurve, FourierSeries, ParamVectorField};
pub use frames::{gram_schmidt_frame, parallel_transport_frame};
pub use jet::{ScalarJet, VecJet};
pub use spline::SampledField;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::multilinear::{orthonormality_defect, AmbientVector, TolerancePolicy, VectorList};

/// A unit-speed directrix with an orthonormal ruling frame of `m - 1` fields.
#[derive(Debug, Clone)]
pub struct FramedCurve {
    dim: usize,
    m: usize,
    directrix: ParamVectorField,
    frame: Vec<ParamVectorField>,
    interval: (f64, f64),
}

impl FramedCurve {
    /// Checks counts and dimensions. Unit speed and orthonormality are
    /// sampled properties; see [`FramedCurve::validate_on`].
    pub fn new(
        dim: usize,
        m: usize,
        directrix: ParamVectorField,
        frame: Vec<ParamVectorField>,
        interval: (f64, f64),
    ) -> Result<Self> {
        if m < 2 || m > dim {
            return Err(GeomError::Input(format!("need 2 <= m <= dim, got m = {m}, dim = {dim}")));
        }
        if frame.len() != m - 1 {
            return Err(GeomError::Input(format!(
                "frame has {} fields but m - 1 = {}",
                frame.len(),
                m - 1
            )));
        }
        if directrix.dim() != dim {
            return Err(GeomError::Input(format!(
                "directrix has dimension {} but ambient dimension is {dim}",
                directrix.dim()
            )));
        }
        if let Some(j) = frame.iter().position(|f| f.dim() != dim) {
            return Err(GeomError::Input(format!("frame field {} has the wrong dimension", j + 1)));
        }
        let (t0, t1) = interval;
        if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
            return Err(GeomError::Input(format!("invalid interval [{t0}, {t1}]")));
        }
        let all_fields = std::iter::once(&directrix).chain(frame.iter());
        for f in all_fields {
            let (lo, hi) = f.domain();
            if t0 < lo - 1e-9 || t1 > hi + 1e-9 {
                return Err(GeomError::Domain { t: if t0 < lo { t0 } else { t1 }, lo, hi });
            }
            if f.max_order() < 2 {
                return Err(GeomError::Input(format!(
                    "{} field lacks second derivatives",
                    f.kind_name()
                )));
            }
        }
        Ok(FramedCurve { dim, m, directrix, frame, interval })
    }

    /// Ambient dimension `m + n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the ruled submanifold.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Codimension `n`.
    pub fn codim(&self) -> usize {
        self.dim - self.m
    }

    pub fn directrix(&self) -> &ParamVectorField {
        &self.directrix
    }

    pub fn frame(&self) -> &[ParamVectorField] {
        &self.frame
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn with_frame(&self, frame: Vec<ParamVectorField>) -> Result<Self> {
        FramedCurve::new(self.dim, self.m, self.directrix.clone(), frame, self.interval)
    }

    pub fn with_interval(&self, interval: (f64, f64)) -> Result<Self> {
        FramedCurve::new(self.dim, self.m, self.directrix.clone(), self.frame.clone(), interval)
    }

    fn check_t(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.interval;
        let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        if !t.is_finite() || t < lo - slack || t > hi + slack {
            return Err(GeomError::Domain { t, lo, hi });
        }
        Ok(())
    }

    /// The frame vectors `X_1(t), …, X_{m-1}(t)`.
    pub fn frame_at(&self, t: f64) -> Result<VectorList> {
        self.frame_derivs_at(t, 0)
    }

    /// The `order`-th derivatives of all frame fields at `t`.
    pub fn frame_derivs_at(&self, t: f64, order: usize) -> Result<VectorList> {
        self.check_t(t)?;
        let vs = self.frame.iter().map(|f| f.eval(t, order)).collect::<Result<Vec<_>>>()?;
        VectorList::new(self.dim, vs)
    }

    pub fn directrix_at(&self, t: f64, order: usize) -> Result<AmbientVector> {
        self.check_t(t)?;
        self.directrix.eval(t, order)
    }

    pub fn frame_jets(&self, t: f64) -> Result<Vec<VecJet>> {
        self.check_t(t)?;
        self.frame.iter().map(|f| f.jet(t)).collect()
    }

    pub fn directrix_jet(&self, t: f64) -> Result<VecJet> {
        self.check_t(t)?;
        self.directrix.jet(t)
    }

    /// Verifies unit speed and frame orthonormality at every grid sample.
    pub fn validate_on(&self, grid: &SampleGrid, tol: &TolerancePolicy) -> Result<()> {
        for &t in grid.t_samples() {
            let speed = self.directrix_at(t, 1)?.norm();
            if (speed - 1.0).abs() > tol.derivative_check_tol {
                return Err(GeomError::Regularity { t, speed });
            }
            let defect = orthonormality_defect(&self.frame_at(t)?);
            if defect > tol.derivative_check_tol {
                return Err(GeomError::Frame { t, deviation: defect });
            }
        }
        Ok(())
    }
}

/// Sampling plan over the parameter interval and a truncated ruling box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    t_samples: Vec<f64>,
    u_extent: f64,
    u_samples_per_axis: usize,
}

impl SampleGrid {
    pub fn new(t_samples: Vec<f64>, u_extent: f64, u_samples_per_axis: usize) -> Result<Self> {
        if t_samples.len() < 3 {
            return Err(GeomError::Input(format!(
                "grid needs at least 3 t-samples, got {}",
                t_samples.len()
            )));
        }
        if t_samples.iter().any(|t| !t.is_finite()) || t_samples.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeomError::Input("t-samples must be finite and strictly increasing".into()));
        }
        if !(u_extent.is_finite() && u_extent > 0.0) {
            return Err(GeomError::Input(format!("u_extent must be positive, got {u_extent}")));
        }
        if u_samples_per_axis == 0 {
            return Err(GeomError::Input("u_samples_per_axis must be positive".into()));
        }
        Ok(SampleGrid { t_samples, u_extent, u_samples_per_axis })
    }

    /// `n` equally spaced samples spanning `interval`, endpoints included.
    pub fn uniform(interval: (f64, f64), n: usize, u_extent: f64, u_samples_per_axis: usize) -> Result<Self> {
        let (a, b) = interval;
        let denom = n.saturating_sub(1).max(1) as f64;
        let ts = (0..n).map(|i| a + (b - a) * i as f64 / denom).collect();
        Self::new(ts, u_extent, u_samples_per_axis)
    }

    pub fn t_samples(&self) -> &[f64] {
        &self.t_samples
    }

    pub fn u_extent(&self) -> f64 {
        self.u_extent
    }

    pub fn u_samples_per_axis(&self) -> usize {
        self.u_samples_per_axis
    }

    /// Same ruling box, different parameter samples.
    pub fn with_t_samples(&self, t_samples: Vec<f64>) -> Result<Self> {
        Self::new(t_samples, self.u_extent, self.u_samples_per_axis)
    }

    /// Sample values along one ruling axis, symmetric about zero.
    pub fn u_values(&self) -> Vec<f64> {
        let n = self.u_samples_per_axis;
        if n == 1 {
            return vec![0.0];
        }
        (0..n).map(|i| -self.u_extent + 2.0 * self.u_extent * i as f64 / (n - 1) as f64).collect()
    }

    /// Spacing of [`SampleGrid::u_values`] (the full extent when there is one sample).
    pub fn u_spacing(&self) -> f64 {
        let n = self.u_samples_per_axis;
        if n == 1 {
            self.u_extent
        } else {
            2.0 * self.u_extent / (n - 1) as f64
        }
    }

    /// Cartesian product of [`SampleGrid::u_values`] in `k` coordinates,
    /// in lexicographic order. `k = 0` yields one empty point.
    pub fn u_points(&self, k: usize) -> Vec<Vec<f64>> {
        let vals = self.u_values();
        let mut out = vec![Vec::new()];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |&u| {
                        let mut q = p.clone();
                        q.push(u);
                        q
                    })
                })
                .collect();
        }
        out
    }
}
