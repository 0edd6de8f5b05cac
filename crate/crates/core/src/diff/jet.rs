use core::ops::{Add, Div, Mul, Neg, Sub};

use super::Scalar;

/// Second-order Taylor jet along a single tagged input.
///
/// Propagation follows the univariate chain rule to second order:
/// for `g(f)`, `d1 = g'·f.d1` and `d2 = g''·f.d1² + g'·f.d2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualJet2<T> {
    pub value: T,
    pub d1: T,
    pub d2: T,
}

impl<T: Scalar> DualJet2<T> {
    pub fn new(value: T, d1: T, d2: T) -> Self {
        DualJet2 { value, d1, d2 }
    }

    /// Constant: zero derivatives.
    pub fn constant(value: T) -> Self {
        let zero = value.constant_like(0.0);
        DualJet2 { value, d1: zero, d2: zero }
    }

    /// The tagged input itself: unit first derivative.
    pub fn variable(value: T) -> Self {
        DualJet2 { value, d1: value.constant_like(1.0), d2: value.constant_like(0.0) }
    }

    /// Applies a univariate function given `(g, g', g'')` at `self.value`.
    #[inline]
    fn chain(self, g: T, g1: T, g2: T) -> Self {
        DualJet2 { value: g, d1: g1 * self.d1, d2: g2 * self.d1 * self.d1 + g1 * self.d2 }
    }
}

impl<T: Scalar> Add for DualJet2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        DualJet2 { value: self.value + o.value, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl<T: Scalar> Sub for DualJet2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        DualJet2 { value: self.value - o.value, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl<T: Scalar> Mul for DualJet2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let two_cross = (self.d1 * o.d1).scale(2.0);
        DualJet2 {
            value: self.value * o.value,
            d1: self.d1 * o.value + self.value * o.d1,
            d2: self.d2 * o.value + two_cross + self.value * o.d2,
        }
    }
}

/// Product with an underlying scalar that carries no derivative along the tag.
impl<T: Scalar> Mul<T> for DualJet2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, c: T) -> Self {
        DualJet2 { value: self.value * c, d1: self.d1 * c, d2: self.d2 * c }
    }
}

impl<T: Scalar> Add<T> for DualJet2<T> {
    type Output = Self;
    #[inline]
    fn add(self, c: T) -> Self {
        DualJet2 { value: self.value + c, d1: self.d1, d2: self.d2 }
    }
}

impl<T: Scalar> Div for DualJet2<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = o.value.powi(-1);
        let inv2 = inv * inv;
        let inv3 = inv2 * inv;
        // 1/o as a jet, then multiply
        let recip = o.chain(inv, -inv2, inv3.scale(2.0));
        self * recip
    }
}

impl<T: Scalar> Neg for DualJet2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        DualJet2 { value: -self.value, d1: -self.d1, d2: -self.d2 }
    }
}

impl<T: Scalar> Scalar for DualJet2<T> {
    fn constant_like(&self, c: f64) -> Self {
        DualJet2::constant(self.value.constant_like(c))
    }

    fn primal(&self) -> f64 {
        self.value.primal()
    }

    #[inline]
    fn scale(self, c: f64) -> Self {
        DualJet2 { value: self.value.scale(c), d1: self.d1.scale(c), d2: self.d2.scale(c) }
    }

    #[inline]
    fn add_const(self, c: f64) -> Self {
        DualJet2 { value: self.value.add_const(c), d1: self.d1, d2: self.d2 }
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    #[inline]
    fn tanh(self) -> Self {
        let s = self.value.tanh();
        // σ' = 1 − s², σ'' = −2 s σ'
        let ds = (-(s * s)).add_const(1.0);
        let dds = (s * ds).scale(-2.0);
        self.chain(s, ds, dds)
    }

    fn powi(self, n: i32) -> Self {
        match n {
            0 => self.constant_like(1.0),
            1 => self,
            _ => {
                let nf = n as f64;
                let g2 = self.value.powi(n - 2);
                let g1 = g2 * self.value;
                let g = g1 * self.value;
                self.chain(g, g1.scale(nf), g2.scale(nf * (nf - 1.0)))
            }
        }
    }

    fn powf(self, p: f64) -> Self {
        let g = self.value.powf(p);
        let g1 = self.value.powf(p - 1.0).scale(p);
        let g2 = self.value.powf(p - 2.0).scale(p * (p - 1.0));
        self.chain(g, g1, g2)
    }
}
