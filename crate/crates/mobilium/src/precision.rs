//! Numeric kernels for the spectral-curve side: pivoted determinants with an
//! optional extended-precision path, and polynomial root finding for real
//! coefficient lists.
//!
//! Extended precision is double-double arithmetic (an unevaluated sum of two
//! `f64`), selected per call through [`det`] when the `MOBILIUM_PRECISION`
//! environment variable equals `extended`. Root finding combines companion
//! matrix eigenvalues with Newton polishing and enforces a residual bound, so
//! callers always receive roots accurate to near machine precision or an
//! error.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Environment variable selecting the determinant precision.
pub const PRECISION_ENV: &str = "MOBILIUM_PRECISION";

/// Whether `MOBILIUM_PRECISION=extended` is set in the environment.
pub fn extended_precision() -> bool {
    std::env::var(PRECISION_ENV).map(|v| v == "extended").unwrap_or(false)
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = f64::mul_add(a, b, -p);
    (p, err)
}

/// A double-double real number: the unevaluated sum `hi + lo` with
/// `|lo| <= ulp(hi)/2`, giving roughly 32 significant digits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    /// Embeds an `f64` exactly.
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Rounds to the nearest `f64`.
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn renorm(hi: f64, lo: f64) -> Dd {
        let (s, e) = quick_two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    /// Sum.
    pub fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        Dd::renorm(s, e + self.lo + rhs.lo)
    }

    /// Difference.
    pub fn sub(self, rhs: Dd) -> Dd {
        self.add(rhs.neg())
    }

    /// Negation.
    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    /// Product.
    pub fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        Dd::renorm(p, e + self.hi * rhs.lo + self.lo * rhs.hi)
    }

    /// Quotient, accurate to roughly a unit in the last double-double place.
    pub fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self.sub(rhs.mul(Dd::from_f64(q1)));
        let q2 = r.hi / rhs.hi;
        let r2 = r.sub(rhs.mul(Dd::from_f64(q2)));
        let q3 = r2.hi / rhs.hi;
        Dd::renorm(q1, q2).add(Dd::from_f64(q3))
    }
}

/// A complex number with double-double real and imaginary parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DdComplex {
    re: Dd,
    im: Dd,
}

impl DdComplex {
    /// Embeds a `Complex64` exactly.
    pub fn from_c64(z: Complex64) -> DdComplex {
        DdComplex { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }

    /// Rounds both parts to `f64`.
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    /// Zero.
    pub fn zero() -> DdComplex {
        DdComplex::from_c64(Complex64::new(0.0, 0.0))
    }

    /// One.
    pub fn one() -> DdComplex {
        DdComplex::from_c64(Complex64::new(1.0, 0.0))
    }

    /// Sum.
    pub fn add(self, rhs: DdComplex) -> DdComplex {
        DdComplex { re: self.re.add(rhs.re), im: self.im.add(rhs.im) }
    }

    /// Difference.
    pub fn sub(self, rhs: DdComplex) -> DdComplex {
        DdComplex { re: self.re.sub(rhs.re), im: self.im.sub(rhs.im) }
    }

    /// Negation.
    pub fn neg(self) -> DdComplex {
        DdComplex { re: self.re.neg(), im: self.im.neg() }
    }

    /// Product.
    pub fn mul(self, rhs: DdComplex) -> DdComplex {
        DdComplex {
            re: self.re.mul(rhs.re).sub(self.im.mul(rhs.im)),
            im: self.re.mul(rhs.im).add(self.im.mul(rhs.re)),
        }
    }

    /// Quotient.
    pub fn div(self, rhs: DdComplex) -> DdComplex {
        let den = rhs.re.mul(rhs.re).add(rhs.im.mul(rhs.im));
        let num = self.mul(DdComplex { re: rhs.re, im: rhs.im.neg() });
        DdComplex { re: num.re.div(den), im: num.im.div(den) }
    }

    /// Magnitude of the leading parts, for convergence tests and pivoting.
    pub fn norm_hi(self) -> f64 {
        (self.re.hi * self.re.hi + self.im.hi * self.im.hi).sqrt()
    }

    /// Bitwise zero test on all four components.
    pub fn is_zero(self) -> bool {
        self.re.hi == 0.0 && self.re.lo == 0.0 && self.im.hi == 0.0 && self.im.lo == 0.0
    }

    /// Integer power, negative exponents through one reciprocal.
    pub fn powi(self, e: i64) -> DdComplex {
        let base = if e < 0 { DdComplex::one().div(self) } else { self };
        let mut out = DdComplex::one();
        for _ in 0..e.unsigned_abs() {
            out = out.mul(base);
        }
        out
    }
}

trait DetScalar: Clone {
    fn zero() -> Self;
    fn sub_assign_prod(&mut self, a: &Self, b: &Self);
    fn div(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn pivot_rank(&self) -> f64;
}

impl DetScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn sub_assign_prod(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn pivot_rank(&self) -> f64 {
        self.norm_sqr()
    }
}

impl DetScalar for DdComplex {
    fn zero() -> Self {
        DdComplex::zero()
    }
    fn sub_assign_prod(&mut self, a: &Self, b: &Self) {
        *self = self.sub(DdComplex::mul(*a, *b));
    }
    fn div(&self, rhs: &Self) -> Self {
        DdComplex::div(*self, *rhs)
    }
    fn mul(&self, rhs: &Self) -> Self {
        DdComplex::mul(*self, *rhs)
    }
    fn neg(&self) -> Self {
        DdComplex::neg(*self)
    }
    fn pivot_rank(&self) -> f64 {
        let re = self.re.hi;
        let im = self.im.hi;
        re * re + im * im
    }
}

fn det_generic<T: DetScalar>(mut m: Vec<Vec<T>>) -> T {
    let n = m.len();
    let mut sign_flip = false;
    for k in 0..n {
        let mut pivot = k;
        for (i, row) in m.iter().enumerate().skip(k) {
            if row[k].pivot_rank() > m[pivot][k].pivot_rank() {
                pivot = i;
            }
        }
        if m[pivot][k].pivot_rank() == 0.0 {
            return T::zero();
        }
        if pivot != k {
            m.swap(pivot, k);
            sign_flip = !sign_flip;
        }
        for i in k + 1..n {
            let factor = m[i][k].div(&m[k][k]);
            for j in k..n {
                let above = m[k][j].clone();
                m[i][j].sub_assign_prod(&factor, &above);
            }
        }
    }
    let mut out = m[0][0].clone();
    for (k, row) in m.iter().enumerate().skip(1) {
        out = out.mul(&row[k]);
    }
    if sign_flip {
        out.neg()
    } else {
        out
    }
}

/// Determinant by partial-pivoted elimination at `f64` precision.
pub fn det_double(m: &[Vec<Complex64>]) -> Complex64 {
    if m.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    det_generic(m.to_vec())
}

/// Determinant by partial-pivoted elimination in double-double arithmetic,
/// rounded back to `Complex64`.
pub fn det_extended(m: &[Vec<Complex64>]) -> Complex64 {
    if m.is_empty() {
        return Complex64::new(1.0, 0.0);
    }
    let lifted: Vec<Vec<DdComplex>> =
        m.iter().map(|row| row.iter().map(|z| DdComplex::from_c64(*z)).collect()).collect();
    det_generic(lifted).to_c64()
}

/// Determinant at the precision selected by `MOBILIUM_PRECISION`.
///
/// The empty matrix has determinant one.
pub fn det(m: &[Vec<Complex64>]) -> Complex64 {
    if extended_precision() {
        det_extended(m)
    } else {
        det_double(m)
    }
}

/// Determinant of a double-double matrix, kept at double-double precision.
pub fn det_dd(m: &[Vec<DdComplex>]) -> DdComplex {
    if m.is_empty() {
        return DdComplex::one();
    }
    det_generic(m.to_vec())
}

/// Evaluates `sum_k coeffs[k] z^k` by Horner's rule.
pub fn poly_eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn poly_eval_deriv(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut val = Complex64::new(0.0, 0.0);
    let mut der = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        der = der * z + val;
        val = val * z + c;
    }
    (val, der)
}

/// Newton-polishes `z` toward a root of the polynomial, returning the best
/// iterate encountered.
pub fn polish_root(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut best = z;
    let mut best_res = poly_eval(coeffs, z).norm();
    let mut cur = z;
    for _ in 0..40 {
        let (val, der) = poly_eval_deriv(coeffs, cur);
        if der.norm() == 0.0 {
            break;
        }
        cur -= val / der;
        let res = poly_eval(coeffs, cur).norm();
        if res < best_res {
            best = cur;
            best_res = res;
        } else {
            break;
        }
    }
    best
}

/// All complex roots of a real-coefficient polynomial `sum_k coeffs[k] z^k`.
///
/// Roots come from the eigenvalues of the Frobenius companion matrix and are
/// Newton-polished until the relative residual drops below `1e-13`; a root
/// that cannot reach that bound is an error. The result is sorted by real
/// part, then imaginary part, so the output is deterministic.
pub fn poly_roots_real(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let mut deg = coeffs.len();
    while deg > 0 && coeffs[deg - 1] == 0.0 {
        deg -= 1;
    }
    if deg == 0 {
        return Err(Error::RootCount("identically zero polynomial has no root list".into()));
    }
    let n = deg - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        companion[(i, n - 1)] = -coeffs[i] / lead;
    }
    let eigen = companion.complex_eigenvalues();
    let poly: Vec<Complex64> =
        coeffs[..deg].iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let scale: f64 = coeffs[..deg].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut roots = Vec::with_capacity(n);
    for z in eigen.iter() {
        let polished = polish_root(&poly, *z);
        let allowed = 1e-13 * scale * polished.norm().max(1.0).powi(n as i32);
        let residual = poly_eval(&poly, polished).norm();
        if residual > allowed {
            return Err(Error::NonConvergence(format!(
                "root polish stalled at residual {residual:.3e} (allowed {allowed:.3e})"
            )));
        }
        roots.push(polished);
    }
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_double_keeps_tiny_addends() {
        let one = Dd::from_f64(1.0);
        let tiny = Dd::from_f64(1e-17);
        let diff = one.add(tiny).sub(one).to_f64();
        assert_eq!(diff, 1e-17);
        assert_eq!((1.0f64 + 1e-17) - 1.0, 0.0);
    }

    #[test]
    fn double_double_product_carries_low_bits() {
        let h = 2f64.powi(-30);
        let x = Dd::from_f64(1.0).add(Dd::from_f64(h));
        let sq = x.mul(x);
        let err = sq.sub(Dd::from_f64(1.0)).sub(Dd::from_f64(2.0 * h)).to_f64();
        assert_eq!(err, h * h);
    }

    #[test]
    fn double_double_division_inverts_multiplication() {
        let a = Dd::from_f64(3.0).add(Dd::from_f64(4e-17));
        let b = Dd::from_f64(7.0).sub(Dd::from_f64(5e-17));
        let q = a.div(b);
        let back = q.mul(b).sub(a).to_f64();
        assert!(back.abs() < 1e-31, "residual {back:e}");
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn determinant_matches_hand_values() {
        let m = vec![
            vec![c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(1.0, 0.0), c(3.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0), c(4.0, 0.0)],
        ];
        let d = det_double(&m);
        assert!((d - c(18.0, 0.0)).norm() < 1e-12);
        let e = det_extended(&m);
        assert!((e - c(18.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn determinant_of_empty_matrix_is_one() {
        assert_eq!(det_double(&[]), c(1.0, 0.0));
        assert_eq!(det_extended(&[]), c(1.0, 0.0));
    }

    #[test]
    fn determinant_detects_singularity() {
        let m = vec![
            vec![c(1.0, 2.0), c(2.0, 4.0)],
            vec![c(0.5, 1.0), c(1.0, 2.0)],
        ];
        assert!(det_double(&m).norm() < 1e-12);
    }

    #[test]
    fn extended_determinant_agrees_on_well_conditioned_input() {
        let m = vec![
            vec![c(1.5, 0.25), c(-0.5, 1.0), c(2.0, -1.0)],
            vec![c(0.75, -0.5), c(1.25, 0.5), c(-1.0, 0.25)],
            vec![c(-0.25, 1.5), c(0.5, -0.75), c(1.0, 1.0)],
        ];
        let d = det_double(&m);
        let e = det_extended(&m);
        assert!((d - e).norm() < 1e-13 * d.norm().max(1.0));
    }

    #[test]
    fn roots_of_small_polynomials_are_exact() {
        let roots = poly_roots_real(&[2.0, -3.0, 1.0]).unwrap();
        assert!((roots[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((roots[1] - c(2.0, 0.0)).norm() < 1e-12);

        let pair = poly_roots_real(&[1.0, 0.0, 1.0]).unwrap();
        assert!((pair[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((pair[1] - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn roots_of_factored_quintic_match_the_factors() {
        let targets = [-2.0, -0.5, 0.5, 2.0, 3.0];
        let mut coeffs = vec![1.0];
        for r in targets {
            let mut next = vec![0.0; coeffs.len() + 1];
            for (k, ck) in coeffs.iter().enumerate() {
                next[k] -= r * ck;
                next[k + 1] += ck;
            }
            coeffs = next;
        }
        let roots = poly_roots_real(&coeffs).unwrap();
        for (root, target) in roots.iter().zip(targets) {
            assert!((root - c(target, 0.0)).norm() < 1e-11, "{root} vs {target}");
        }
    }

    #[test]
    fn constant_polynomial_has_no_roots_and_zero_errors() {
        assert!(poly_roots_real(&[5.0]).unwrap().is_empty());
        assert!(poly_roots_real(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn precision_env_defaults_to_double() {
        if std::env::var(PRECISION_ENV).is_err() {
            assert!(!extended_precision());
        }
    }
}
