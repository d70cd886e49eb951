//! Second-order jets: a value together with its first two `t`-derivatives.
//!
//! Frames built from sampled data (orthonormalization, transport, pivot
//! rotations) propagate exact derivatives at the grid through these types,
//! so the interpolating splines reproduce them at the knots.

use crate::multilinear::AmbientVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarJet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl ScalarJet {
    pub fn constant(v: f64) -> Self {
        ScalarJet { v, d1: 0.0, d2: 0.0 }
    }

    pub fn mul(self, o: ScalarJet) -> ScalarJet {
        ScalarJet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }

    pub fn sqrt(self) -> ScalarJet {
        let n = self.v.sqrt();
        let n1 = self.d1 / (2.0 * n);
        let n2 = (self.d2 - 2.0 * n1 * n1) / (2.0 * n);
        ScalarJet { v: n, d1: n1, d2: n2 }
    }

    pub fn recip(self) -> ScalarJet {
        let r = 1.0 / self.v;
        ScalarJet {
            v: r,
            d1: -self.d1 * r * r,
            d2: -self.d2 * r * r + 2.0 * self.d1 * self.d1 * r * r * r,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VecJet {
    pub v: AmbientVector,
    pub d1: AmbientVector,
    pub d2: AmbientVector,
}

impl VecJet {
    pub fn zeros(dim: usize) -> Self {
        VecJet {
            v: AmbientVector::zeros(dim),
            d1: AmbientVector::zeros(dim),
            d2: AmbientVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    pub fn dot(&self, o: &VecJet) -> ScalarJet {
        ScalarJet {
            v: self.v.dot(&o.v),
            d1: self.d1.dot(&o.v) + self.v.dot(&o.d1),
            d2: self.d2.dot(&o.v) + 2.0 * self.d1.dot(&o.d1) + self.v.dot(&o.d2),
        }
    }

    pub fn scale(&self, c: ScalarJet) -> VecJet {
        let mut d1 = self.d1.scaled(c.v);
        d1.axpy(c.d1, &self.v);
        let mut d2 = self.d2.scaled(c.v);
        d2.axpy(2.0 * c.d1, &self.d1);
        d2.axpy(c.d2, &self.v);
        VecJet { v: self.v.scaled(c.v), d1, d2 }
    }

    /// `self += c * x`
    pub fn add_scaled(&mut self, c: ScalarJet, x: &VecJet) {
        let p = x.scale(c);
        self.v += &p.v;
        self.d1 += &p.d1;
        self.d2 += &p.d2;
    }

    /// `self += c * x` for a constant scalar `c`.
    pub fn axpy(&mut self, c: f64, x: &VecJet) {
        self.v.axpy(c, &x.v);
        self.d1.axpy(c, &x.d1);
        self.d2.axpy(c, &x.d2);
    }
}
