//! Truncated power series arithmetic.
//!
//! Coefficient functions of the mode operators are written once against the
//! [`Analytic`] trait and evaluated either pointwise or as Taylor expansions
//! about an anchor.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Numeric type supporting the operations used by coefficient formulas.
pub trait Analytic:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<Complex64, Output = Self>
    + Sub<Complex64, Output = Self>
    + Mul<Complex64, Output = Self>
{
    /// A constant of the same shape as `self`.
    fn cst(&self, c: Complex64) -> Self;
    fn exp(&self) -> Self;

    fn cst_re(&self, c: f64) -> Self {
        self.cst(Complex64::new(c, 0.0))
    }
}

impl Analytic for Complex64 {
    fn cst(&self, c: Complex64) -> Self {
        c
    }
    fn exp(&self) -> Self {
        Complex64::exp(*self)
    }
}

/// Taylor coefficients c₀ + c₁t + … + c_{N−1}t^{N−1}; products truncate at N.
#[derive(Debug, Clone, PartialEq)]
pub struct Series(pub Vec<Complex64>);

impl Series {
    pub fn zeros(len: usize) -> Self {
        Series(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn constant(c: Complex64, len: usize) -> Self {
        let mut s = Self::zeros(len);
        s.0[0] = c;
        s
    }

    /// The affine series x0 + slope·t.
    pub fn affine(x0: f64, slope: f64, len: usize) -> Self {
        let mut s = Self::constant(Complex64::new(x0, 0.0), len);
        if len > 1 {
            s.0[1] = Complex64::new(slope, 0.0);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeff(&self, k: usize) -> Complex64 {
        self.0.get(k).copied().unwrap_or_default()
    }

    pub fn eval(&self, t: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * t + c)
    }

    /// Value and first derivative at t.
    pub fn eval_d(&self, t: Complex64) -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for c in self.0.iter().rev() {
            d = d * t + v;
            v = v * t + c;
        }
        (v, d)
    }

    /// Divides by t^k; the dropped leading coefficients must be zero.
    pub fn shift_down(&self, k: usize) -> Self {
        let mut out = Self::zeros(self.len());
        for i in k..self.len() {
            out.0[i - k] = self.0[i];
        }
        out
    }

    /// Multiplies by t^k (truncating).
    pub fn shift_up(&self, k: usize) -> Self {
        let mut out = Self::zeros(self.len());
        for i in 0..self.len().saturating_sub(k) {
            out.0[i + k] = self.0[i];
        }
        out
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self::zeros(self.len());
        for i in 1..self.len() {
            out.0[i - 1] = self.0[i] * i as f64;
        }
        out
    }

    pub fn recip(&self) -> Self {
        let n = self.len();
        let mut out = Self::zeros(n);
        let inv0 = 1.0 / self.0[0];
        out.0[0] = inv0;
        for k in 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.0[j] * out.0[k - j];
            }
            out.0[k] = -acc * inv0;
        }
        out
    }

    /// Principal log of the constant term plus the log of the normalized rest.
    pub fn ln(&self) -> Self {
        let n = self.len();
        let c0 = self.0[0];
        let d = self.derivative() / self.clone();
        let mut out = Self::zeros(n);
        out.0[0] = c0.ln();
        for k in 1..n {
            out.0[k] = d.0[k - 1] / k as f64;
        }
        out
    }

    pub fn powc(&self, p: Complex64) -> Self {
        (self.ln() * p).exp()
    }
}

impl Analytic for Series {
    fn cst(&self, c: Complex64) -> Self {
        Series::constant(c, self.len())
    }

    fn exp(&self) -> Self {
        let n = self.len();
        let mut out = Self::zeros(n);
        out.0[0] = self.0[0].exp();
        // out' = self' · out
        for k in 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.0[j] * j as f64 * out.0[k - j];
            }
            out.0[k] = acc / k as f64;
        }
        out
    }
}

impl Add for Series {
    type Output = Series;
    fn add(mut self, rhs: Series) -> Series {
        for (a, b) in self.0.iter_mut().zip(rhs.0.iter()) {
            *a += b;
        }
        self
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(mut self, rhs: Series) -> Series {
        for (a, b) in self.0.iter_mut().zip(rhs.0.iter()) {
            *a -= b;
        }
        self
    }
}

impl Mul for Series {
    type Output = Series;
    fn mul(self, rhs: Series) -> Series {
        let n = self.len();
        let mut out = Series::zeros(n);
        for (i, a) in self.0.iter().enumerate() {
            if *a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n - i {
                out.0[i + j] += a * rhs.0[j];
            }
        }
        out
    }
}

impl Div for Series {
    type Output = Series;
    fn div(self, rhs: Series) -> Series {
        self * rhs.recip()
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(mut self) -> Series {
        for a in self.0.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl Add<Complex64> for Series {
    type Output = Series;
    fn add(mut self, rhs: Complex64) -> Series {
        self.0[0] += rhs;
        self
    }
}

impl Sub<Complex64> for Series {
    type Output = Series;
    fn sub(mut self, rhs: Complex64) -> Series {
        self.0[0] -= rhs;
        self
    }
}

impl Mul<Complex64> for Series {
    type Output = Series;
    fn mul(mut self, rhs: Complex64) -> Series {
        for a in self.0.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn exp_of_variable_is_factorial_series() {
        let t = Series::affine(0.0, 1.0, 12);
        let e = t.exp();
        let mut fact = 1.0;
        for k in 0..12 {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((e.0[k] - re(1.0 / fact)).norm() < 1e-15);
        }
    }

    #[test]
    fn recip_of_one_minus_t_is_geometric() {
        let s = Series::affine(1.0, -1.0, 10).recip();
        for k in 0..10 {
            assert!((s.0[k] - re(1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn powc_matches_binomial_series() {
        let p = Complex64::new(0.5, 0.3);
        let s = Series::affine(1.0, -1.0, 8).powc(p);
        let t = re(0.2);
        let exact = (re(1.0) - t).powc(p);
        assert!((s.eval(t) - exact).norm() < 1e-7);
    }

    #[test]
    fn eval_d_matches_derivative() {
        let s = Series(vec![re(1.0), re(2.0), re(3.0)]);
        let (v, d) = s.eval_d(re(2.0));
        assert_eq!(v, re(17.0));
        assert_eq!(d, re(14.0));
    }
}
