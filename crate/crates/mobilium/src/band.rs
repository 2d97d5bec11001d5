//! Finite windows of semi-infinite band matrices.
//!
//! The matrices of interest act on indices `0, 1, 2, ...` and have a fixed
//! band profile: `a_minus` bands strictly below the diagonal and `a_plus`
//! strictly above.  A [`BandWindow`] holds the top-left `size x size` corner.
//! The index-0 edge is genuine (the matrix really starts there); the
//! `size`-edge is an artifact of windowing, so every product tracks how far
//! down the window its entries are still exact:
//!
//! * a fresh window is valid up to `size - 1`;
//! * a product `A * B` is valid up to `min(valid(A), valid(B), size-1) -
//!   min(a_plus(A), a_minus(B))`, because entry `(i,j)` of the product only
//!   reads intermediate indices `m <= min(i + a_plus(A), j + a_minus(B))`.
//!
//! Reading a power entry beyond the valid limit is an error, never a silent
//! wrong value.

use crate::error::{Error, Result};
use crate::laurent::Coeff;

/// Which triangular part of a window an operation keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// Entries with `j >= i`.
    Upper,
    /// Entries with `j <= i`.
    Lower,
    /// All entries.
    Full,
}

/// A `size x size` window of a band matrix with entries in `T`.
#[derive(Debug, Clone)]
pub struct BandWindow<T: Coeff> {
    size: usize,
    a_minus: usize,
    a_plus: usize,
    valid_limit: i64,
    zero: T,
    entries: Vec<T>,
}

impl<T: Coeff> BandWindow<T> {
    /// A zero window; `proto` supplies coefficient context.
    pub fn new(size: usize, a_minus: usize, a_plus: usize, proto: &T) -> BandWindow<T> {
        assert!(size > 0);
        let width = a_minus + a_plus + 1;
        BandWindow {
            size,
            a_minus,
            a_plus,
            valid_limit: size as i64 - 1,
            zero: proto.zero_like(),
            entries: vec![proto.zero_like(); size * width],
        }
    }

    /// The identity window.
    pub fn identity(size: usize, proto: &T) -> BandWindow<T> {
        let mut w = BandWindow::new(size, 0, 0, proto);
        let one = proto.one_like();
        for i in 0..size {
            w.entries[i] = one.clone();
        }
        w
    }

    /// Window size.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Number of bands strictly below the diagonal.
    pub fn a_minus(&self) -> usize {
        self.a_minus
    }

    /// Number of bands strictly above the diagonal.
    pub fn a_plus(&self) -> usize {
        self.a_plus
    }

    /// Largest index `L` such that all entries `(i,j)` with
    /// `max(i,j) <= L` are exact values of the underlying infinite product.
    /// Negative when no entry is trustworthy.
    pub fn valid_limit(&self) -> i64 {
        self.valid_limit
    }

    /// Lowers the trusted limit, for windows assembled from entries whose
    /// own trust region is smaller.  Never raises it.
    pub fn restrict_valid(&mut self, limit: i64) {
        self.valid_limit = self.valid_limit.min(limit);
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as i64 - i as i64;
        if off < -(self.a_minus as i64) || off > self.a_plus as i64 {
            return None;
        }
        Some(i * (self.a_minus + self.a_plus + 1) + (off + self.a_minus as i64) as usize)
    }

    /// Entry `(i,j)`; structurally zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> &T {
        assert!(i < self.size && j < self.size, "index outside window");
        match self.slot(i, j) {
            Some(s) => &self.entries[s],
            None => &self.zero,
        }
    }

    /// Writes entry `(i,j)`.  Writing outside the declared bands is an
    /// error unless the value is zero.
    pub fn set(&mut self, i: usize, j: usize, v: T) -> Result<()> {
        assert!(i < self.size && j < self.size, "index outside window");
        match self.slot(i, j) {
            Some(s) => {
                self.entries[s] = v;
                Ok(())
            }
            None if v.is_zero() => Ok(()),
            None => Err(Error::BandViolation {
                i,
                j,
                detail: format!(
                    "band profile is -{}..+{}, offset {}",
                    self.a_minus,
                    self.a_plus,
                    j as i64 - i as i64
                ),
            }),
        }
    }

    /// Product of two windows, with the validity limit propagated.
    pub fn mul(&self, rhs: &BandWindow<T>) -> BandWindow<T> {
        assert_eq!(self.size, rhs.size, "window sizes differ");
        let n = self.size;
        let a_minus = (self.a_minus + rhs.a_minus).min(n - 1);
        let a_plus = (self.a_plus + rhs.a_plus).min(n - 1);
        let mut out = BandWindow::new(n, a_minus, a_plus, &self.zero);
        out.valid_limit =
            self.valid_limit.min(rhs.valid_limit) - self.a_plus.min(rhs.a_minus) as i64;
        for i in 0..n {
            let m_lo = i.saturating_sub(self.a_minus);
            let m_hi = (i + self.a_plus).min(n - 1);
            for m in m_lo..=m_hi {
                let a = self.get(i, m);
                if a.is_zero() {
                    continue;
                }
                let j_lo = m.saturating_sub(rhs.a_minus);
                let j_hi = (m + rhs.a_plus).min(n - 1);
                for j in j_lo..=j_hi {
                    let b = rhs.get(m, j);
                    if b.is_zero() {
                        continue;
                    }
                    let s = out.slot(i, j).expect("product stays in widened band");
                    out.entries[s] = out.entries[s].add_ref(&a.mul_ref(b));
                }
            }
        }
        out
    }

    /// Sum of two windows (band union, validity minimum).
    pub fn add(&self, rhs: &BandWindow<T>) -> BandWindow<T> {
        self.combine(rhs, false)
    }

    /// Difference of two windows.
    pub fn sub(&self, rhs: &BandWindow<T>) -> BandWindow<T> {
        self.combine(rhs, true)
    }

    fn combine(&self, rhs: &BandWindow<T>, negate: bool) -> BandWindow<T> {
        assert_eq!(self.size, rhs.size, "window sizes differ");
        let n = self.size;
        let a_minus = self.a_minus.max(rhs.a_minus);
        let a_plus = self.a_plus.max(rhs.a_plus);
        let mut out = BandWindow::new(n, a_minus, a_plus, &self.zero);
        out.valid_limit = self.valid_limit.min(rhs.valid_limit);
        for i in 0..n {
            let j_lo = i.saturating_sub(a_minus);
            let j_hi = (i + a_plus).min(n - 1);
            for j in j_lo..=j_hi {
                let a = self.get(i, j);
                let b = rhs.get(i, j);
                let v = if negate { a.sub_ref(b) } else { a.add_ref(b) };
                let s = out.slot(i, j).expect("union band");
                out.entries[s] = v;
            }
        }
        out
    }

    /// Scales every entry.
    pub fn scale(&self, c: &T) -> BandWindow<T> {
        let mut out = self.clone();
        for e in out.entries.iter_mut() {
            *e = e.mul_ref(c);
        }
        out
    }

    /// The `k`-th power as a window, validity tracked through the chain.
    ///
    /// Putting the base factor on its narrow side keeps the charge per extra
    /// factor at `min(a_plus, a_minus)`, so the chain stays valid down to
    /// `size - 1 - (k-1) * min(a_plus, a_minus)`.
    pub fn power(&self, k: usize) -> BandWindow<T> {
        if k == 0 {
            return BandWindow::identity(self.size, &self.zero);
        }
        let mut out = self.clone();
        for _ in 1..k {
            out = self.mul_base(out);
        }
        out
    }

    fn mul_base(&self, acc: BandWindow<T>) -> BandWindow<T> {
        if self.a_plus <= self.a_minus {
            self.mul(&acc)
        } else {
            acc.mul(self)
        }
    }

    /// Entry `(i,j)` of the `k`-th power.  Errors if the entry lies beyond
    /// the region the window can compute exactly.
    pub fn power_entry(&self, k: usize, i: usize, j: usize) -> Result<T> {
        let powers = self.power(k);
        self.read_power_entry(&powers, k, i, j)
    }

    /// Reads entry `(i,j)` from a precomputed `k`-th power with the same
    /// guard as [`BandWindow::power_entry`].
    pub fn read_power_entry(&self, powers: &BandWindow<T>, k: usize, i: usize, j: usize) -> Result<T> {
        if i.max(j) as i64 > powers.valid_limit() {
            return Err(Error::GuardViolation { i, j, k, size: self.size });
        }
        Ok(powers.get(i, j).clone())
    }

    /// `sum_k weights[k-1] * A^(k-1)` restricted to a triangular part.
    ///
    /// The returned window keeps the full band profile of the highest power;
    /// entries outside the requested part are zeroed.
    pub fn apply_potential(&self, weights: &[T], part: Part) -> BandWindow<T> {
        let n = self.size;
        let kmax = weights.len();
        let a_minus = if kmax == 0 { 0 } else { (self.a_minus * (kmax - 1)).min(n - 1) };
        let a_plus = if kmax == 0 { 0 } else { (self.a_plus * (kmax - 1)).min(n - 1) };
        let mut acc = BandWindow::new(n, a_minus, a_plus, &self.zero);
        let mut pw = BandWindow::identity(n, &self.zero);
        for (idx, w) in weights.iter().enumerate() {
            if idx == 1 {
                pw = self.clone();
            } else if idx > 1 {
                pw = self.mul_base(pw);
            }
            if w.is_zero() {
                continue;
            }
            acc.valid_limit = acc.valid_limit.min(pw.valid_limit);
            for i in 0..n {
                let j_lo = i.saturating_sub(pw.a_minus);
                let j_hi = (i + pw.a_plus).min(n - 1);
                for j in j_lo..=j_hi {
                    let keep = match part {
                        Part::Upper => j >= i,
                        Part::Lower => j <= i,
                        Part::Full => true,
                    };
                    if !keep {
                        continue;
                    }
                    let v = pw.get(i, j);
                    if v.is_zero() {
                        continue;
                    }
                    let s = acc.slot(i, j).expect("power band inside widened band");
                    acc.entries[s] = acc.entries[s].add_ref(&w.mul_ref(v));
                }
            }
        }
        acc
    }

    /// The commutator `self * rhs - rhs * self`.
    pub fn commutator(&self, rhs: &BandWindow<T>) -> BandWindow<T> {
        self.mul(rhs).sub(&rhs.mul(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Dense reference product over the same window, truncated the naive way
    /// (no validity tracking): used to confirm banded arithmetic.
    fn dense_mul(a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        let n = a.len();
        let mut out = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                for m in 0..n {
                    out[i][j] += a[i][m] * b[m][j];
                }
            }
        }
        out
    }

    fn to_dense(w: &BandWindow<Complex64>) -> Vec<Vec<f64>> {
        let n = w.size();
        (0..n)
            .map(|i| (0..n).map(|j| w.get(i, j).re).collect())
            .collect()
    }

    fn sample_window(n: usize, a_minus: usize, a_plus: usize, seed: f64) -> BandWindow<Complex64> {
        let mut w = BandWindow::new(n, a_minus, a_plus, &c(0.0));
        for i in 0..n {
            for j in i.saturating_sub(a_minus)..=(i + a_plus).min(n - 1) {
                let v = ((i * 7 + j * 3) as f64 * seed).sin();
                w.set(i, j, c(v)).unwrap();
            }
        }
        w
    }

    #[test]
    fn product_matches_dense_reference() {
        let a = sample_window(12, 1, 2, 0.37);
        let b = sample_window(12, 2, 1, 0.61);
        let ab = a.mul(&b);
        let dense = dense_mul(&to_dense(&a), &to_dense(&b));
        for i in 0..12 {
            for j in 0..12 {
                assert!((ab.get(i, j).re - dense[i][j]).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn validity_shrinks_by_narrow_band_per_factor() {
        // a_minus = 1 caps the charge per factor at 1 even though a_plus = 2
        let a = sample_window(10, 1, 2, 0.5);
        assert_eq!(a.valid_limit(), 9);
        assert_eq!(a.mul(&a).valid_limit(), 8);
        assert_eq!(a.power(3).valid_limit(), 7);
        assert!(a.power_entry(2, 8, 7).is_ok());
        assert!(matches!(
            a.power_entry(2, 9, 7),
            Err(Error::GuardViolation { .. })
        ));
    }

    #[test]
    fn window_extension_preserves_trusted_entries() {
        // the same band matrix computed in a larger window must agree on all
        // entries the smaller window declares valid
        let small = sample_window(10, 1, 2, 0.42);
        let large = sample_window(15, 1, 2, 0.42);
        let ps = small.power(3);
        let pl = large.power(3);
        for i in 0..=ps.valid_limit() as usize {
            for j in 0..=ps.valid_limit() as usize {
                assert!((ps.get(i, j) - pl.get(i, j)).norm() < 1e-13, "({i},{j})");
            }
        }
    }

    #[test]
    fn set_outside_band_errors() {
        let mut w: BandWindow<Complex64> = BandWindow::new(5, 1, 1, &c(0.0));
        assert!(w.set(0, 3, c(1.0)).is_err());
        assert!(w.set(0, 3, c(0.0)).is_ok());
        assert!(w.set(2, 1, c(4.0)).is_ok());
    }

    #[test]
    fn apply_potential_identity_term() {
        // weights = (w1 only) gives w1 * identity
        let a = sample_window(6, 1, 1, 0.9);
        let out = a.apply_potential(&[c(2.5)], Part::Full);
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { 2.5 } else { 0.0 };
                assert!((out.get(i, j).re - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn apply_potential_triangular_restriction() {
        let a = sample_window(8, 2, 1, 0.7);
        let up = a.apply_potential(&[c(0.0), c(1.0)], Part::Upper);
        for i in 0..8 {
            for j in 0..8 {
                if j < i {
                    assert!(up.get(i, j).is_zero());
                } else {
                    assert!((up.get(i, j) - a.get(i, j)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn commutator_of_commuting_matrices_vanishes() {
        let a = sample_window(9, 1, 1, 0.3);
        let comm = a.commutator(&a);
        for i in 0..=comm.valid_limit() as usize {
            for j in 0..=comm.valid_limit() as usize {
                assert!(comm.get(i, j).norm() < 1e-13);
            }
        }
    }
}
