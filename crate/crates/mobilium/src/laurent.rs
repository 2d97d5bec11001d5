//! Laurent polynomials over a generic coefficient ring, plus the [`Coeff`]
//! trait shared with the band windows.
//!
//! The same code path serves two purposes: Laurent polynomials with
//! [`TruncatedSeries`] coefficients drive the exact limit-system solve, and
//! Laurent polynomials over `Complex64` carry all the numeric spectral-curve
//! geometry (curve evaluation, residues, wave functions). A double-double
//! instantiation backs the wave-function algebra, whose scalar products
//! cancel catastrophically at `f64` precision.

use num_complex::Complex64;

use crate::precision::DdComplex;
use crate::series::{rat_int, TruncatedSeries};

/// Ring operations needed by the generic band-window and Laurent code.
///
/// `zero_like`/`one_like` derive context (variable universe, truncation
/// order) from an existing element, so no separate ring handle is threaded
/// through.
pub trait Coeff: Clone + PartialEq + std::fmt::Debug {
    /// Zero with the same context as `self`.
    fn zero_like(&self) -> Self;
    /// One with the same context as `self`.
    fn one_like(&self) -> Self;
    /// Sum.
    fn add_ref(&self, rhs: &Self) -> Self;
    /// Difference.
    fn sub_ref(&self, rhs: &Self) -> Self;
    /// Product.
    fn mul_ref(&self, rhs: &Self) -> Self;
    /// Product with a small integer.
    fn mul_int(&self, n: i64) -> Self;
    /// Exact zero test (structural for series, bitwise for floats).
    fn is_zero(&self) -> bool;
}

impl Coeff for TruncatedSeries {
    fn zero_like(&self) -> Self {
        TruncatedSeries::zero(self.vars(), self.order())
    }
    fn one_like(&self) -> Self {
        TruncatedSeries::one(self.vars(), self.order())
    }
    fn add_ref(&self, rhs: &Self) -> Self {
        self.try_add(rhs).expect("incompatible series")
    }
    fn sub_ref(&self, rhs: &Self) -> Self {
        self.try_sub(rhs).expect("incompatible series")
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        self.try_mul(rhs).expect("incompatible series")
    }
    fn mul_int(&self, n: i64) -> Self {
        self.scale(&rat_int(n))
    }
    fn is_zero(&self) -> bool {
        TruncatedSeries::is_zero(self)
    }
}

impl Coeff for DdComplex {
    fn zero_like(&self) -> Self {
        DdComplex::zero()
    }
    fn one_like(&self) -> Self {
        DdComplex::one()
    }
    fn add_ref(&self, rhs: &Self) -> Self {
        DdComplex::add(*self, *rhs)
    }
    fn sub_ref(&self, rhs: &Self) -> Self {
        DdComplex::sub(*self, *rhs)
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        DdComplex::mul(*self, *rhs)
    }
    fn mul_int(&self, n: i64) -> Self {
        DdComplex::mul(*self, DdComplex::from_c64(Complex64::new(n as f64, 0.0)))
    }
    fn is_zero(&self) -> bool {
        DdComplex::is_zero(*self)
    }
}

impl Coeff for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one_like(&self) -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn add_ref(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub_ref(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul_ref(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn mul_int(&self, n: i64) -> Self {
        self * n as f64
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

/// A Laurent polynomial `sum_k c_k z^k` with `k` ranging over a finite
/// interval of integers.
///
/// The representation keeps the lowest stored exponent `lo` and a dense
/// coefficient vector; leading and trailing zeros are trimmed (exactly for
/// series coefficients, bitwise for floats).
#[derive(Debug, Clone, PartialEq)]
pub struct Laurent<T: Coeff> {
    lo: i64,
    coeffs: Vec<T>,
    zero: T,
}

impl<T: Coeff> Laurent<T> {
    /// The zero polynomial; `proto` supplies the coefficient context.
    pub fn zero(proto: &T) -> Laurent<T> {
        Laurent { lo: 0, coeffs: Vec::new(), zero: proto.zero_like() }
    }

    /// The monomial `c z^k`.
    pub fn monomial(k: i64, c: T) -> Laurent<T> {
        let zero = c.zero_like();
        let mut l = Laurent { lo: k, coeffs: vec![c], zero };
        l.trim();
        l
    }

    /// Builds from a lowest exponent and dense coefficients.
    pub fn from_coeffs(lo: i64, coeffs: Vec<T>, proto: &T) -> Laurent<T> {
        let mut l = Laurent { lo, coeffs, zero: proto.zero_like() };
        l.trim();
        l
    }

    fn trim(&mut self) {
        while self.coeffs.last().map(Coeff::is_zero).unwrap_or(false) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.lo += lead as i64;
        }
        if self.coeffs.is_empty() {
            self.lo = 0;
        }
    }

    /// True if no nonzero coefficients remain.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest exponent with a (possibly) nonzero coefficient.
    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Highest exponent with a (possibly) nonzero coefficient.
    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    /// Coefficient of `z^k`.
    pub fn coeff(&self, k: i64) -> T {
        if k < self.lo || k > self.hi() {
            self.zero.zero_like()
        } else {
            self.coeffs[(k - self.lo) as usize].clone()
        }
    }

    /// Sum.
    pub fn add(&self, rhs: &Laurent<T>) -> Laurent<T> {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let lo = self.lo.min(rhs.lo);
        let hi = self.hi().max(rhs.hi());
        let mut coeffs = Vec::with_capacity((hi - lo + 1) as usize);
        for k in lo..=hi {
            coeffs.push(self.coeff(k).add_ref(&rhs.coeff(k)));
        }
        Laurent::from_coeffs(lo, coeffs, &self.zero)
    }

    /// Difference.
    pub fn sub(&self, rhs: &Laurent<T>) -> Laurent<T> {
        let lo = self.lo.min(rhs.lo);
        let hi = self.hi().max(rhs.hi());
        if self.is_zero() && rhs.is_zero() {
            return self.clone();
        }
        let mut coeffs = Vec::with_capacity((hi - lo + 1).max(1) as usize);
        for k in lo..=hi {
            coeffs.push(self.coeff(k).sub_ref(&rhs.coeff(k)));
        }
        Laurent::from_coeffs(lo, coeffs, &self.zero)
    }

    /// Product.
    pub fn mul(&self, rhs: &Laurent<T>) -> Laurent<T> {
        if self.is_zero() || rhs.is_zero() {
            return Laurent::zero(&self.zero);
        }
        let lo = self.lo + rhs.lo;
        let len = self.coeffs.len() + rhs.coeffs.len() - 1;
        let mut coeffs = vec![self.zero.zero_like(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                coeffs[i + j] = coeffs[i + j].add_ref(&a.mul_ref(b));
            }
        }
        Laurent::from_coeffs(lo, coeffs, &self.zero)
    }

    /// Nonnegative power by repeated multiplication.
    pub fn pow(&self, k: u32) -> Laurent<T> {
        let mut out = Laurent::monomial(0, self.zero.one_like());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Scales every coefficient.
    pub fn scale(&self, c: &T) -> Laurent<T> {
        let coeffs = self.coeffs.iter().map(|a| a.mul_ref(c)).collect();
        Laurent::from_coeffs(self.lo, coeffs, &self.zero)
    }

    /// Shifts exponents by `k` (multiplies by `z^k`).
    pub fn shift(&self, k: i64) -> Laurent<T> {
        let mut out = self.clone();
        if !out.is_zero() {
            out.lo += k;
        }
        out
    }

    /// Formal derivative.
    pub fn derivative(&self) -> Laurent<T> {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.lo + i as i64;
            coeffs.push(c.mul_int(k));
        }
        Laurent::from_coeffs(self.lo - 1, coeffs, &self.zero)
    }

    /// Iterates over `(exponent, coefficient)` with nonzero coefficient.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &T)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (self.lo + i as i64, c))
    }
}

impl Laurent<Complex64> {
    /// Numeric evaluation by Horner on the polynomial part, times `z^lo`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(self.lo as i32)
    }

    /// Largest coefficient magnitude.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()))
    }

    /// Monic polynomial with prescribed roots.
    pub fn from_roots(roots: &[Complex64]) -> Laurent<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let mut out = Laurent::monomial(0, one);
        for &r in roots {
            let factor = Laurent::from_coeffs(0, vec![-r, one], &one);
            out = out.mul(&factor);
        }
        out
    }
}

impl Laurent<DdComplex> {
    /// Numeric evaluation by Horner on the polynomial part, times `z^lo`.
    pub fn eval(&self, z: DdComplex) -> DdComplex {
        if self.is_zero() {
            return DdComplex::zero();
        }
        let mut acc = DdComplex::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(z).add(*c);
        }
        acc.mul(z.powi(self.lo))
    }

    /// Monic polynomial with prescribed roots.
    pub fn from_roots_dd(roots: &[DdComplex]) -> Laurent<DdComplex> {
        let one = DdComplex::one();
        let mut out = Laurent::monomial(0, one);
        for &r in roots {
            let factor = Laurent::from_coeffs(0, vec![r.neg(), one], &DdComplex::zero());
            out = out.mul(&factor);
        }
        out
    }

    /// Rounds every coefficient to `Complex64`.
    pub fn round(&self) -> Laurent<Complex64> {
        let coeffs = self.coeffs.iter().map(|c| c.to_c64()).collect();
        Laurent::from_coeffs(self.lo, coeffs, &Complex64::new(0.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn mul_and_shift() {
        // (z + 1/z)^2 = z^2 + 2 + 1/z^2
        let f = Laurent::from_coeffs(-1, vec![c(1.0), c(0.0), c(1.0)], &c(0.0));
        let sq = f.mul(&f);
        assert_eq!(sq.coeff(2), c(1.0));
        assert_eq!(sq.coeff(0), c(2.0));
        assert_eq!(sq.coeff(-2), c(1.0));
        assert_eq!(sq.coeff(1), c(0.0));
        assert_eq!(sq.lo(), -2);
        assert_eq!(sq.hi(), 2);
    }

    #[test]
    fn derivative_and_eval() {
        // d/dz (z^2 + 3/z) = 2z - 3/z^2
        let f = Laurent::from_coeffs(-1, vec![c(3.0), c(0.0), c(0.0), c(1.0)], &c(0.0));
        let d = f.derivative();
        assert_eq!(d.coeff(1), c(2.0));
        assert_eq!(d.coeff(-2), c(-3.0));
        let z = Complex64::new(2.0, 0.0);
        assert!((f.eval(z) - c(5.5)).norm() < 1e-14);
    }

    #[test]
    fn from_roots_expands() {
        let r = [c(1.0), c(2.0)];
        let p = Laurent::from_roots(&r);
        // (z-1)(z-2) = z^2 - 3z + 2
        assert_eq!(p.coeff(2), c(1.0));
        assert_eq!(p.coeff(1), c(-3.0));
        assert_eq!(p.coeff(0), c(2.0));
    }

    #[test]
    fn trim_normalizes() {
        let f = Laurent::from_coeffs(-2, vec![c(0.0), c(1.0), c(0.0)], &c(0.0));
        assert_eq!(f.lo(), -1);
        assert_eq!(f.hi(), -1);
    }
}
