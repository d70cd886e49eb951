//! Piecewise quintic Hermite interpolation of knot jets.
//!
//! Each piece matches value, first and second derivative at both of its
//! knots, so the interpolant is C² and exact at the grid. Data known only
//! by value is first fitted with a natural cubic spline, whose jets the
//! quintic then reproduces exactly.

use crate::error::{GeomError, Result};
use crate::multilinear::AmbientVector;

use super::jet::VecJet;

/// Values of the six quintic Hermite basis functions (and their first two
/// derivatives in the local coordinate `s ∈ [0, 1]`).
fn basis(s: f64, order: usize) -> [f64; 6] {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    match order {
        0 => [
            1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
            s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
            0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5,
            0.5 * s3 - s4 + 0.5 * s5,
            -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
            10.0 * s3 - 15.0 * s4 + 6.0 * s5,
        ],
        1 => [
            -30.0 * s2 + 60.0 * s3 - 30.0 * s4,
            1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4,
            s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4,
            1.5 * s2 - 4.0 * s3 + 2.5 * s4,
            -12.0 * s2 + 28.0 * s3 - 15.0 * s4,
            30.0 * s2 - 60.0 * s3 + 30.0 * s4,
        ],
        _ => [
            -60.0 * s + 180.0 * s2 - 120.0 * s3,
            -36.0 * s + 96.0 * s2 - 60.0 * s3,
            1.0 - 9.0 * s + 18.0 * s2 - 10.0 * s3,
            3.0 * s - 12.0 * s2 + 10.0 * s3,
            -24.0 * s + 84.0 * s2 - 60.0 * s3,
            60.0 * s - 180.0 * s2 + 120.0 * s3,
        ],
    }
}

/// A vector-valued C² spline through prescribed knot jets.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    knots: Vec<f64>,
    jets: Vec<VecJet>,
}

impl SampledField {
    pub fn new(knots: Vec<f64>, jets: Vec<VecJet>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != jets.len() {
            return Err(GeomError::Input(format!(
                "sampled field needs matching knots and jets (got {} and {})",
                knots.len(),
                jets.len()
            )));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeomError::Input("sampled field knots must be strictly increasing".into()));
        }
        let dim = jets[0].dim();
        if jets.iter().any(|j| j.dim() != dim) {
            return Err(GeomError::Input("sampled field jets disagree in dimension".into()));
        }
        Ok(SampledField { knots, jets })
    }

    /// Fits a natural cubic spline through the values and stores its jets.
    pub fn from_values(knots: Vec<f64>, values: Vec<AmbientVector>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(GeomError::Input("sampled field needs at least two knots".into()));
        }
        let dim = values[0].dim();
        let n = knots.len();
        let mut jets: Vec<VecJet> = (0..n).map(|_| VecJet::zeros(dim)).collect();
        for c in 0..dim {
            let ys: Vec<f64> = values.iter().map(|v| v[c]).collect();
            let (slopes, curv) = natural_cubic_jets(&knots, &ys);
            for i in 0..n {
                set_coord(&mut jets[i], c, ys[i], slopes[i], curv[i]);
            }
        }
        Self::new(knots, jets)
    }

    pub fn dim(&self) -> usize {
        self.jets[0].dim()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Derivative of the given order (0..=2). `t` is clamped to the knot range.
    pub fn eval(&self, t: f64, order: usize) -> AmbientVector {
        let (lo, hi) = self.domain();
        let t = t.clamp(lo, hi);
        let k = self.knots.partition_point(|&x| x <= t).clamp(1, self.knots.len() - 1) - 1;
        let (x0, x1) = (self.knots[k], self.knots[k + 1]);
        let h = x1 - x0;
        let s = (t - x0) / h;
        let b = basis(s, order);
        let scale = h.powi(-(order as i32));
        let (a, z) = (&self.jets[k], &self.jets[k + 1]);
        let w = [b[0], b[1] * h, b[2] * h * h, b[3] * h * h, b[4] * h, b[5]];
        let mut out = a.v.scaled(w[0] * scale);
        out.axpy(w[1] * scale, &a.d1);
        out.axpy(w[2] * scale, &a.d2);
        out.axpy(w[3] * scale, &z.d2);
        out.axpy(w[4] * scale, &z.d1);
        out.axpy(w[5] * scale, &z.v);
        out
    }
}

fn set_coord(j: &mut VecJet, c: usize, v: f64, d1: f64, d2: f64) {
    let mut vv = j.v.clone().into_coords();
    let mut v1 = j.d1.clone().into_coords();
    let mut v2 = j.d2.clone().into_coords();
    vv[c] = v;
    v1[c] = d1;
    v2[c] = d2;
    j.v = AmbientVector::from_vec(vv);
    j.d1 = AmbientVector::from_vec(v1);
    j.d2 = AmbientVector::from_vec(v2);
}

/// Knot slopes and second derivatives of the natural cubic spline through `ys`.
pub fn natural_cubic_jets(xs: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let mut m = vec![0.0; n];
    if n > 2 {
        // Thomas algorithm on the interior second derivatives.
        let k = n - 2;
        let mut diag = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        let mut upper = vec![0.0; k];
        for i in 0..k {
            diag[i] = 2.0 * (h[i] + h[i + 1]);
            upper[i] = h[i + 1];
            rhs[i] = 6.0 * ((ys[i + 2] - ys[i + 1]) / h[i + 1] - (ys[i + 1] - ys[i]) / h[i]);
        }
        for i in 1..k {
            let w = h[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        m[k] = rhs[k - 1] / diag[k - 1];
        for i in (0..k - 1).rev() {
            m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
        }
    }
    let mut slopes = vec![0.0; n];
    for i in 0..n - 1 {
        slopes[i] = (ys[i + 1] - ys[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
    }
    let last = n - 2;
    slopes[n - 1] = (ys[n - 1] - ys[last]) / h[last] + h[last] * (m[last] + 2.0 * m[n - 1]) / 6.0;
    (slopes, m)
}
