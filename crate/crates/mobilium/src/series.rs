//! Truncated multivariate formal power series with exact rational
//! coefficients.
//!
//! A [`TruncatedSeries`] lives over a fixed, ordered [`VarSet`] and a fixed
//! truncation order `D`: every monomial of total degree `> D` is identically
//! dropped, so arithmetic is exact in the quotient ring.  Terms are stored in
//! a `BTreeMap` keyed by graded-lexicographic [`Monomial`] order, which makes
//! iteration deterministic and lets multiplication stop early once the degree
//! budget is exhausted.
//!
//! Invariants maintained by every constructor and operation:
//! * no stored coefficient is zero;
//! * no stored monomial has total degree above the truncation order;
//! * binary operations require both operands to share the variable universe
//!   and the truncation order, and fail otherwise.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Exact rational coefficient.
pub type Rat = BigRational;

/// Convenience constructor for small rationals.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Convenience constructor for small integers as rationals.
pub fn rat_int(n: i64) -> Rat {
    Rat::from(BigInt::from(n))
}

/// An ordered universe of variable names.
///
/// Variable identity is positional; names are only used for display and
/// serialization.  Series over distinct `VarSet`s cannot be mixed.
#[derive(Debug, PartialEq, Eq)]
pub struct VarSet {
    names: Vec<String>,
}

impl VarSet {
    /// Builds a variable universe from ordered names.  Names must be unique.
    pub fn new<S: Into<String>>(names: Vec<S>) -> Arc<VarSet> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        for (i, a) in names.iter().enumerate() {
            for b in names.iter().skip(i + 1) {
                assert_ne!(a, b, "duplicate variable name {a:?}");
            }
        }
        Arc::new(VarSet { names })
    }

    /// Number of variables.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    /// True if the universe has no variables.
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Name of variable `i`.
    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    /// Index of a variable by name.
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// All names in order.
    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// A monomial over a fixed number of variables, ordered graded-lex.
///
/// The total degree is cached so the `Ord` implementation compares degree
/// first and exponent vectors lexicographically second.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    degree: u32,
    exps: Vec<u8>,
}

impl Monomial {
    /// The empty monomial `1`.
    pub fn one(nvars: usize) -> Monomial {
        Monomial { degree: 0, exps: vec![0; nvars] }
    }

    /// The single variable `x_i`.
    pub fn var(nvars: usize, i: usize) -> Monomial {
        let mut exps = vec![0u8; nvars];
        exps[i] = 1;
        Monomial { degree: 1, exps }
    }

    /// Builds a monomial from `(variable, exponent)` pairs; zero exponents
    /// are dropped and repeated variables accumulate.
    pub fn from_pairs(nvars: usize, pairs: &[(usize, u32)]) -> Monomial {
        let mut exps = vec![0u8; nvars];
        for &(i, e) in pairs {
            let new = exps[i] as u32 + e;
            assert!(new <= u8::MAX as u32, "exponent overflow");
            exps[i] = new as u8;
        }
        let degree = exps.iter().map(|&e| e as u32).sum();
        Monomial { degree, exps }
    }

    /// Total degree.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Exponent of variable `i`.
    pub fn exp(&self, i: usize) -> u32 {
        self.exps[i] as u32
    }

    /// Dense exponent vector.
    pub fn exps(&self) -> &[u8] {
        &self.exps
    }

    /// Iterator over `(variable, exponent)` pairs with nonzero exponent.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.exps
            .iter()
            .enumerate()
            .filter(|(_, &e)| e != 0)
            .map(|(i, &e)| (i, e as u32))
    }

    /// Product of two monomials.
    fn mul(&self, rhs: &Monomial) -> Monomial {
        let exps: Vec<u8> = self
            .exps
            .iter()
            .zip(&rhs.exps)
            .map(|(&a, &b)| {
                let s = a as u32 + b as u32;
                assert!(s <= u8::MAX as u32, "exponent overflow");
                s as u8
            })
            .collect();
        Monomial { degree: self.degree + rhs.degree, exps }
    }
}

/// A formal power series truncated at a fixed total degree.
#[derive(Debug, Clone)]
pub struct TruncatedSeries {
    vars: Arc<VarSet>,
    order: u32,
    terms: BTreeMap<Monomial, Rat>,
}

impl TruncatedSeries {
    /// The zero series.
    pub fn zero(vars: &Arc<VarSet>, order: u32) -> TruncatedSeries {
        TruncatedSeries { vars: Arc::clone(vars), order, terms: BTreeMap::new() }
    }

    /// The constant series `c`.
    pub fn constant(vars: &Arc<VarSet>, order: u32, c: Rat) -> TruncatedSeries {
        let mut s = TruncatedSeries::zero(vars, order);
        if !c.is_zero() {
            s.terms.insert(Monomial::one(vars.len()), c);
        }
        s
    }

    /// The constant series `1`.
    pub fn one(vars: &Arc<VarSet>, order: u32) -> TruncatedSeries {
        TruncatedSeries::constant(vars, order, Rat::one())
    }

    /// The series consisting of the single variable `x_i`.
    pub fn variable(vars: &Arc<VarSet>, order: u32, i: usize) -> TruncatedSeries {
        assert!(i < vars.len(), "variable index out of range");
        let mut s = TruncatedSeries::zero(vars, order);
        if order >= 1 {
            s.terms.insert(Monomial::var(vars.len(), i), Rat::one());
        }
        s
    }

    /// A single-term series `c * m`.
    pub fn monomial(vars: &Arc<VarSet>, order: u32, m: Monomial, c: Rat) -> TruncatedSeries {
        let mut s = TruncatedSeries::zero(vars, order);
        if !c.is_zero() && m.degree() <= order {
            s.terms.insert(m, c);
        }
        s
    }

    /// Variable universe.
    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    /// Truncation order.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Deterministic iteration over terms in graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    /// Number of stored terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// True if the series is identically zero in the truncated ring.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of a monomial.  Requesting a coefficient beyond the
    /// truncation order is an error: that information was discarded.
    pub fn coeff(&self, m: &Monomial) -> Result<Rat> {
        if m.degree() > self.order {
            return Err(Error::OutOfTruncation { degree: m.degree(), order: self.order });
        }
        Ok(self.terms.get(m).cloned().unwrap_or_else(Rat::zero))
    }

    /// Constant term.
    pub fn constant_term(&self) -> Rat {
        self.terms
            .get(&Monomial::one(self.vars.len()))
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    fn check_compatible(&self, rhs: &TruncatedSeries) -> Result<()> {
        if !Arc::ptr_eq(&self.vars, &rhs.vars) && self.vars != rhs.vars {
            return Err(Error::VariableMismatch(format!(
                "{:?} vs {:?}",
                self.vars.names(),
                rhs.vars.names()
            )));
        }
        if self.order != rhs.order {
            return Err(Error::VariableMismatch(format!(
                "truncation orders differ: {} vs {}",
                self.order, rhs.order
            )));
        }
        Ok(())
    }

    fn insert_add(terms: &mut BTreeMap<Monomial, Rat>, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        match terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Sum.
    pub fn try_add(&self, rhs: &TruncatedSeries) -> Result<TruncatedSeries> {
        self.check_compatible(rhs)?;
        let mut out = self.clone();
        for (m, c) in rhs.terms.iter() {
            Self::insert_add(&mut out.terms, m.clone(), c.clone());
        }
        Ok(out)
    }

    /// Difference.
    pub fn try_sub(&self, rhs: &TruncatedSeries) -> Result<TruncatedSeries> {
        self.check_compatible(rhs)?;
        let mut out = self.clone();
        for (m, c) in rhs.terms.iter() {
            Self::insert_add(&mut out.terms, m.clone(), -c.clone());
        }
        Ok(out)
    }

    /// Truncated product.  Term pairs whose degrees sum beyond the truncation
    /// order are skipped; the graded storage order allows an early break in
    /// the inner loop.
    pub fn try_mul(&self, rhs: &TruncatedSeries) -> Result<TruncatedSeries> {
        self.check_compatible(rhs)?;
        let mut out = TruncatedSeries::zero(&self.vars, self.order);
        if self.terms.is_empty() || rhs.terms.is_empty() {
            return Ok(out);
        }
        let (small, large) = if self.terms.len() <= rhs.terms.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        for (ma, ca) in small.terms.iter() {
            let budget = self.order - ma.degree();
            for (mb, cb) in large.terms.iter() {
                if mb.degree() > budget {
                    break;
                }
                Self::insert_add(&mut out.terms, ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    /// Product with a scalar.
    pub fn scale(&self, c: &Rat) -> TruncatedSeries {
        if c.is_zero() {
            return TruncatedSeries::zero(&self.vars, self.order);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out
    }

    /// Negation.
    pub fn neg(&self) -> TruncatedSeries {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = -v.clone();
        }
        out
    }

    /// Multiplicative inverse, by Newton iteration `x <- x(2 - a x)`.
    /// Requires a nonzero constant term.
    pub fn invert(&self) -> Result<TruncatedSeries> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(Error::NonInvertible);
        }
        let mut x = TruncatedSeries::constant(&self.vars, self.order, c0.recip());
        let two = TruncatedSeries::constant(&self.vars, self.order, rat_int(2));
        // each iteration doubles the number of correct orders
        let mut correct: u32 = 0;
        while correct < self.order {
            let ax = self.try_mul(&x)?;
            let t = two.try_sub(&ax)?;
            x = x.try_mul(&t)?;
            correct = (correct * 2).max(1);
        }
        Ok(x)
    }

    /// Integer power by repeated multiplication.
    pub fn pow(&self, k: u32) -> Result<TruncatedSeries> {
        let mut out = TruncatedSeries::one(&self.vars, self.order);
        for _ in 0..k {
            out = out.try_mul(self)?;
        }
        Ok(out)
    }

    /// Re-truncation to a lower order.  Lowering the order then operating is
    /// the same as operating then lowering: truncation is a ring map.
    pub fn truncate_to(&self, order: u32) -> TruncatedSeries {
        assert!(order <= self.order, "cannot extend a truncated series");
        let mut out = TruncatedSeries::zero(&self.vars, order);
        for (m, c) in self.terms.iter() {
            if m.degree() <= order {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    /// Numeric evaluation at a point, one value per variable.
    pub fn eval_numeric(&self, values: &[Complex64]) -> Result<Complex64> {
        if values.len() != self.vars.len() {
            return Err(Error::Evaluation(format!(
                "expected {} values, got {}",
                self.vars.len(),
                values.len()
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in self.terms.iter() {
            let mut t = rat_to_f64(c);
            for (i, e) in m.pairs() {
                t *= values[i].powu(e);
            }
            acc += t;
        }
        Ok(acc)
    }

    /// True when every coefficient is a nonnegative integer.
    pub fn is_nonneg_integer(&self) -> bool {
        self.terms
            .values()
            .all(|c| c.denom().is_one() && !c.is_negative())
    }

    /// Maximal absolute difference of coefficients against another series,
    /// as `f64`; both series must be compatible.
    pub fn coeff_distance(&self, rhs: &TruncatedSeries) -> Result<f64> {
        let diff = self.try_sub(rhs)?;
        Ok(diff
            .terms
            .values()
            .map(|c| c.to_f64().map(f64::abs).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max))
    }

    /// Renders the monomial for a term using the variable names.
    pub fn monomial_string(&self, m: &Monomial) -> String {
        monomial_string(&self.vars, m)
    }
}

/// Renders a monomial as `g2^2*gt4`, or `1` when empty.
pub fn monomial_string(vars: &VarSet, m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (i, e) in m.pairs() {
        if e == 1 {
            parts.push(vars.name(i).to_string());
        } else {
            parts.push(format!("{}^{}", vars.name(i), e));
        }
    }
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join("*")
    }
}

/// Converts a rational coefficient to `f64` through a complex-free path.
pub fn rat_to_f64(c: &Rat) -> Complex64 {
    let v = c
        .to_f64()
        .unwrap_or_else(|| c.numer().to_f64().unwrap_or(f64::NAN) / c.denom().to_f64().unwrap_or(f64::NAN));
    Complex64::new(v, 0.0)
}

impl PartialEq for TruncatedSeries {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.vars == other.vars && self.terms == other.terms
    }
}

impl fmt::Display for TruncatedSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if m.degree() == 0 {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{}", monomial_string(&self.vars, m))?;
            } else {
                write!(f, "{c}*{}", monomial_string(&self.vars, m))?;
            }
        }
        Ok(())
    }
}

impl std::ops::Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn add(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.try_add(rhs).expect("incompatible series")
    }
}

impl std::ops::Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.try_sub(rhs).expect("incompatible series")
    }
}

impl std::ops::Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: &TruncatedSeries) -> TruncatedSeries {
        self.try_mul(rhs).expect("incompatible series")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Arc<VarSet> {
        VarSet::new(vec!["x", "y"])
    }

    #[test]
    fn monomial_order_is_graded_lex() {
        let a = Monomial::from_pairs(2, &[(0, 1)]); // x
        let b = Monomial::from_pairs(2, &[(1, 2)]); // y^2
        let c = Monomial::from_pairs(2, &[(0, 1), (1, 1)]); // x y
        assert!(a < b, "degree decides first");
        assert!(b < c, "inside a degree, ascending lex on exponent vectors");
    }

    #[test]
    fn add_mul_basics() {
        let vars = xy();
        let x = TruncatedSeries::variable(&vars, 4, 0);
        let y = TruncatedSeries::variable(&vars, 4, 1);
        let s = &(&x + &y) * &(&x + &y);
        let xx = Monomial::from_pairs(2, &[(0, 2)]);
        let xy_m = Monomial::from_pairs(2, &[(0, 1), (1, 1)]);
        assert_eq!(s.coeff(&xx).unwrap(), rat_int(1));
        assert_eq!(s.coeff(&xy_m).unwrap(), rat_int(2));
    }

    #[test]
    fn truncation_drops_high_degree() {
        let vars = xy();
        let x = TruncatedSeries::variable(&vars, 2, 0);
        let s = x.pow(3).unwrap();
        assert!(s.is_zero());
    }

    #[test]
    fn invert_geometric() {
        // 1/(1-x) = 1 + x + x^2 + ... up to the truncation order
        let vars = xy();
        let one = TruncatedSeries::one(&vars, 5);
        let x = TruncatedSeries::variable(&vars, 5, 0);
        let inv = (&one - &x).invert().unwrap();
        for k in 0..=5 {
            let m = Monomial::from_pairs(2, &[(0, k)]);
            assert_eq!(inv.coeff(&m).unwrap(), rat_int(1), "coefficient of x^{k}");
        }
        let back = &inv * &(&one - &x);
        assert_eq!(back, one);
    }

    #[test]
    fn invert_two_plus_x() {
        // 1/(2+x) = 1/2 - x/4 + x^2/8 - ...
        let vars = xy();
        let two = TruncatedSeries::constant(&vars, 2, rat_int(2));
        let x = TruncatedSeries::variable(&vars, 2, 0);
        let s = &two + &x;
        let inv = s.invert().unwrap();
        let m0 = Monomial::one(2);
        let m1 = Monomial::from_pairs(2, &[(0, 1)]);
        let m2 = Monomial::from_pairs(2, &[(0, 2)]);
        assert_eq!(inv.coeff(&m0).unwrap(), rat(1, 2));
        assert_eq!(inv.coeff(&m1).unwrap(), rat(-1, 4));
        assert_eq!(inv.coeff(&m2).unwrap(), rat(1, 8));
        // multiply-back check
        assert_eq!(&inv * &s, TruncatedSeries::one(&vars, 2));
    }

    #[test]
    fn invert_fails_without_constant_term() {
        let vars = xy();
        let x = TruncatedSeries::variable(&vars, 3, 0);
        assert!(matches!(x.invert(), Err(Error::NonInvertible)));
    }

    #[test]
    fn coeff_beyond_order_errors() {
        let vars = xy();
        let x = TruncatedSeries::variable(&vars, 2, 0);
        let m = Monomial::from_pairs(2, &[(0, 3)]);
        assert!(matches!(
            x.coeff(&m),
            Err(Error::OutOfTruncation { degree: 3, order: 2 })
        ));
    }

    #[test]
    fn universe_mismatch_errors() {
        let a = TruncatedSeries::one(&xy(), 3);
        let b = TruncatedSeries::one(&VarSet::new(vec!["z"]), 3);
        assert!(matches!(a.try_add(&b), Err(Error::VariableMismatch(_))));
        let c = TruncatedSeries::one(&xy(), 4);
        assert!(matches!(a.try_add(&c), Err(Error::VariableMismatch(_))));
    }

    #[test]
    fn truncation_is_a_ring_map() {
        let vars = xy();
        let x = TruncatedSeries::variable(&vars, 6, 0);
        let y = TruncatedSeries::variable(&vars, 6, 1);
        let a = &(&x + &y) * &(&x + &TruncatedSeries::one(&vars, 6));
        let b = &(&y + &TruncatedSeries::one(&vars, 6)) * &(&x + &y);
        let prod_then_trunc = (&a * &b).truncate_to(3);
        let trunc_then_prod = &a.truncate_to(3) * &b.truncate_to(3);
        assert_eq!(prod_then_trunc, trunc_then_prod);
    }

    #[test]
    fn eval_numeric_matches_hand_value() {
        let vars = xy();
        let x = TruncatedSeries::variable(&vars, 3, 0);
        let y = TruncatedSeries::variable(&vars, 3, 1);
        let s = &(&x * &y) + &TruncatedSeries::one(&vars, 3);
        let v = s
            .eval_numeric(&[Complex64::new(0.5, 0.0), Complex64::new(2.0, 0.0)])
            .unwrap();
        assert!((v - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!(s.eval_numeric(&[Complex64::new(1.0, 0.0)]).is_err());
    }
}
