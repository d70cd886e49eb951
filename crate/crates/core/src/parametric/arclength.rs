//! Arclength reparametrization.
//!
//! The cumulative arclength `s(t)` is tabulated by adaptive Gauss–Legendre
//! quadrature. Its inverse is seeded by a monotone cubic interpolant of the
//! table and polished with Newton steps, so `t(s)` is accurate to roughly
//! machine precision. Derivatives of `t(s)` come from the speed itself
//! (`t' = 1/|γ'|`), which makes the reparametrized curve unit-speed at every
//! `s` regardless of how `t(s)` was found.

use std::sync::{Arc, OnceLock};

use crate::error::{GeomError, Result};

use super::field::ParamVectorField;

const TABLE_INTERVALS: usize = 512;
const GL_POINTS: usize = 10;

fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

fn gl_integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gauss_legendre();
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    half * nodes.iter().zip(weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
}

fn adaptive_integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let whole = gl_integrate(f, a, b);
    let m = (a + b) / 2.0;
    let halves = gl_integrate(f, a, m) + gl_integrate(f, m, b);
    if depth == 0 || (whole - halves).abs() <= tol {
        halves
    } else {
        adaptive_integrate(f, a, m, tol / 2.0, depth - 1) + adaptive_integrate(f, m, b, tol / 2.0, depth - 1)
    }
}

/// Cumulative arclength of a regular curve and its inverse.
#[derive(Debug)]
pub struct ArclengthMap {
    curve: Arc<ParamVectorField>,
    ts: Vec<f64>,
    ss: Vec<f64>,
    // slopes dt/ds at the table nodes after monotonicity limiting
    slopes: Vec<f64>,
}

impl ArclengthMap {
    /// Tabulates `s(t)` over `[t0, t1]`; fails if the speed drops to `min_speed`.
    pub fn build(curve: Arc<ParamVectorField>, t0: f64, t1: f64, min_speed: f64) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(GeomError::Input(format!("invalid interval [{t0}, {t1}]")));
        }
        let speed = |t: f64| curve.eval(t, 1).map(|v| v.norm());
        let n = TABLE_INTERVALS;
        let ts: Vec<f64> = (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect();
        let mut speeds = Vec::with_capacity(n + 1);
        for &t in &ts {
            let v = speed(t)?;
            if !(v > min_speed) {
                return Err(GeomError::Regularity { t, speed: v });
            }
            speeds.push(v);
        }
        let f = |t: f64| curve.eval(t, 1).map(|v| v.norm()).unwrap_or(0.0);
        let mut ss = vec![0.0; n + 1];
        for i in 0..n {
            let piece = adaptive_integrate(&f, ts[i], ts[i + 1], 1e-15 * (ts[i + 1] - ts[i]), 12);
            ss[i + 1] = ss[i] + piece;
        }
        let mut slopes: Vec<f64> = speeds.iter().map(|v| 1.0 / v).collect();
        // Fritsch–Carlson limiter on t(s).
        for i in 0..n {
            let secant = (ts[i + 1] - ts[i]) / (ss[i + 1] - ss[i]);
            let (a, b) = (slopes[i] / secant, slopes[i + 1] / secant);
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                slopes[i] = tau * a * secant;
                slopes[i + 1] = tau * b * secant;
            }
        }
        Ok(ArclengthMap { curve, ts, ss, slopes })
    }

    pub fn length(&self) -> f64 {
        *self.ss.last().unwrap()
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().unwrap())
    }

    fn speed(&self, t: f64) -> f64 {
        self.curve.eval(t, 1).map(|v| v.norm()).unwrap_or(f64::NAN)
    }

    /// Arclength from the start of the interval to `t`.
    pub fn s_of_t(&self, t: f64) -> f64 {
        let (lo, hi) = self.t_range();
        let t = t.clamp(lo, hi);
        let k = self.ts.partition_point(|&x| x <= t).clamp(1, self.ts.len() - 1) - 1;
        self.ss[k] + gl_integrate(&|x| self.speed(x), self.ts[k], t)
    }

    /// Original parameter at arclength `s`.
    pub fn t_of_s(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length());
        let k = self.ss.partition_point(|&x| x <= s).clamp(1, self.ss.len() - 1) - 1;
        let h = self.ss[k + 1] - self.ss[k];
        let x = (s - self.ss[k]) / h;
        let (t0, t1) = (self.ts[k], self.ts[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let x2 = x * x;
        let x3 = x2 * x;
        let mut t = (2.0 * x3 - 3.0 * x2 + 1.0) * t0
            + (x3 - 2.0 * x2 + x) * m0
            + (-2.0 * x3 + 3.0 * x2) * t1
            + (x3 - x2) * m1;
        let (lo, hi) = self.t_range();
        for _ in 0..6 {
            let resid = self.s_of_t(t) - s;
            let step = resid / self.speed(t);
            t = (t - step).clamp(lo, hi);
            if step.abs() <= 1e-16 * (1.0 + t.abs()) {
                break;
            }
        }
        t
    }

    /// `t(s)` with its first two derivatives in `s`.
    pub fn inverse_jet(&self, s: f64) -> (f64, f64, f64) {
        let t = self.t_of_s(s);
        let d1 = self.curve.eval(t, 1).expect("curve evaluates inside its table range");
        let d2 = self.curve.eval(t, 2).expect("curve evaluates inside its table range");
        let v = d1.norm();
        (t, 1.0 / v, -d1.dot(&d2) / v.powi(4))
    }
}

/// A curve reparametrized by arclength, with the map that produced it.
#[derive(Debug, Clone)]
pub struct Reparametrization {
    pub curve: ParamVectorField,
    pub map: Arc<ArclengthMap>,
}

impl Reparametrization {
    /// Applies the same change of parameter to another field along the curve.
    pub fn along(&self, f: ParamVectorField) -> ParamVectorField {
        ParamVectorField::Reparametrized { inner: Arc::new(f), map: self.map.clone() }
    }

    pub fn length(&self) -> f64 {
        self.map.length()
    }
}

/// Reparametrizes `f` over `[t0, t1]` by arclength. The result is defined on
/// `[0, L]` and has unit speed there.
pub fn arclength_reparametrize(
    f: &ParamVectorField,
    interval: (f64, f64),
    min_speed: f64,
) -> Result<Reparametrization> {
    let inner = Arc::new(f.clone());
    let map = Arc::new(ArclengthMap::build(inner.clone(), interval.0, interval.1, min_speed)?);
    Ok(Reparametrization {
        curve: ParamVectorField::Reparametrized { inner, map: map.clone() },
        map,
    })
}
