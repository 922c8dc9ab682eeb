//! Truncated Taylor series ("jets") with composition rules.
//!
//! A jet stores c_i = h^{(i)}(x0)/i!. Exponential and reciprocal use the
//! standard recurrences, which are the Bell-polynomial (Faà di Bruno)
//! expansion written in coefficient form.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

/// Scalars a jet can carry.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + Send
    + Sync
{
    fn from_f64(x: f64) -> Self;
    fn exp(self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
}

impl Scalar for Complex64 {
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T> {
    pub coeffs: Vec<T>,
}

impl<T: Scalar> Jet<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty());
        Jet { coeffs }
    }

    pub fn constant(c: T, order: usize) -> Self {
        let mut v = vec![T::from_f64(0.0); order + 1];
        v[0] = c;
        Jet { coeffs: v }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn scale(&self, a: T) -> Self {
        Jet {
            coeffs: self.coeffs.iter().map(|&c| c * a).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Jet {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn add_constant(&self, a: T) -> Self {
        let mut c = self.coeffs.clone();
        c[0] = c[0] + a;
        Jet { coeffs: c }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let mut out = vec![T::from_f64(0.0); n + 1];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = T::from_f64(0.0);
            for k in 0..=i {
                acc = acc + self.coeffs[k] * other.coeffs[i - k];
            }
            *o = acc;
        }
        Jet { coeffs: out }
    }

    /// exp(h): b_0 = e^{a_0}, b_n = (1/n) Σ_{k=1}^{n} k a_k b_{n-k}.
    pub fn exp(&self) -> Self {
        let n = self.order();
        let a = &self.coeffs;
        let mut b = vec![T::from_f64(0.0); n + 1];
        b[0] = a[0].exp();
        for m in 1..=n {
            let mut acc = T::from_f64(0.0);
            for k in 1..=m {
                acc = acc + a[k] * b[m - k] * (k as f64);
            }
            b[m] = acc * (1.0 / m as f64);
        }
        Jet { coeffs: b }
    }

    /// 1/h: b_0 = 1/a_0, b_n = -(1/a_0) Σ_{k=1}^{n} a_k b_{n-k}.
    pub fn recip(&self) -> Self {
        let n = self.order();
        let a = &self.coeffs;
        let mut b = vec![T::from_f64(0.0); n + 1];
        let inv = T::from_f64(1.0) / a[0];
        b[0] = inv;
        for m in 1..=n {
            let mut acc = T::from_f64(0.0);
            for k in 1..=m {
                acc = acc + a[k] * b[m - k];
            }
            b[m] = -(acc * inv);
        }
        Jet { coeffs: b }
    }
}
