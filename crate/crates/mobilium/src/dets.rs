//! Determinant formulas for the one-point functions `R_n`, built from the
//! double-point pairs, with the two lattice-path specializations: general
//! maps (black degrees squeezed to two) and `p`-constellations.
//!
//! The plain determinant `h_n = det(wbar_a^{n+b} - w_a^{n+b})` grows like
//! `|wbar_max|^{n+N}`, so ratios of large-`n` values overflow long before
//! the answers do.  The normalized determinant `hbar_n` has entries
//! `delta_ab - rho_a X_a^{n+1}/(w_a - wbar_b)` with `|X_a| < 1`, tends to
//! one as `n` grows, and differs from `h_n` by a prefactor independent of
//! the column structure; the prefactor cancels in the ratio
//! `R_n = R h_{n-1} h_{n+1} / h_n^2`, which is therefore evaluated on the
//! normalized form at every `n`.
//!
//! Lattice-path generating functions are kept as exact polynomials in the
//! down-step weight and the level-step weight with rational coefficients,
//! so the convolution and reflection identities they satisfy are checked as
//! polynomial equalities, not to a tolerance.
//!
//! Invariants maintained throughout:
//!
//! * `h_{-1} = 0` (the first column vanishes) and the empty pair set gives
//!   `h_n = 1`;
//! * the rotation-orbit factorizations reproduce the two normalized
//!   determinants exactly, for any rotation-closed pair set;
//! * the two normalized-determinant forms (exponent `n+1` against the
//!   `wbar`-differences, exponent `n+N` against the `w`-differences) agree
//!   on genuine double points of a curve, and on nothing else: their
//!   equality certifies the pairing;
//! * walk counts vanish for unreachable end heights, and reversing heights
//!   trades the end height for an inverse weight power;
//! * constellation double points close under rotation by `exp(2 pi i/p)`,
//!   and every reduced quantity is invariant under the choice of orbit
//!   representative.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::ba::XiVectors;
use crate::curve::DoublePoints;
use crate::error::{Error, Result};
use crate::precision::{self, DdComplex};
use crate::report::Report;
use crate::series::{rat_to_f64, Rat};

fn rat_int(k: i64) -> Rat {
    Rat::from_integer(BigInt::from(k))
}

/// Exact polynomial in the down-step weight and the level-step weight.
///
/// The first exponent may be negative (height reversal trades an end height
/// for an inverse down-step weight), so the type is a Laurent polynomial in
/// the down-step weight and an ordinary polynomial in the level-step weight.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PathPoly {
    terms: BTreeMap<(i64, u32), Rat>,
}

impl PathPoly {
    /// The zero polynomial.
    pub fn zero() -> PathPoly {
        PathPoly { terms: BTreeMap::new() }
    }

    /// The constant one.
    pub fn one() -> PathPoly {
        PathPoly::monomial(0, 0, rat_int(1))
    }

    /// A single term `c * R^r S^s` (down-step weight `R`, level weight `S`).
    pub fn monomial(r: i64, s: u32, c: Rat) -> PathPoly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((r, s), c);
        }
        PathPoly { terms }
    }

    /// Whether every coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn accumulate(&mut self, key: (i64, u32), c: &Rat) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(key).or_insert_with(Rat::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    /// Sum of two polynomials.
    pub fn add(&self, rhs: &PathPoly) -> PathPoly {
        let mut out = self.clone();
        for (key, c) in &rhs.terms {
            out.accumulate(*key, c);
        }
        out
    }

    /// Product of two polynomials.
    pub fn mul(&self, rhs: &PathPoly) -> PathPoly {
        let mut out = PathPoly::zero();
        for ((r1, s1), c1) in &self.terms {
            for ((r2, s2), c2) in &rhs.terms {
                out.accumulate((r1 + r2, s1 + s2), &(c1 * c2));
            }
        }
        out
    }

    /// Multiplies by `R^dr S^ds`.
    pub fn mul_weight(&self, dr: i64, ds: u32) -> PathPoly {
        let terms =
            self.terms.iter().map(|(&(r, s), c)| ((r + dr, s + ds), c.clone())).collect();
        PathPoly { terms }
    }

    /// Derivative in the down-step weight.
    pub fn deriv_down(&self) -> PathPoly {
        let mut out = PathPoly::zero();
        for (&(r, s), c) in &self.terms {
            out.accumulate((r - 1, s), &(c * rat_int(r)));
        }
        out
    }

    /// Derivative in the level-step weight.
    pub fn deriv_level(&self) -> PathPoly {
        let mut out = PathPoly::zero();
        for (&(r, s), c) in &self.terms {
            if s > 0 {
                out.accumulate((r, s - 1), &(c * rat_int(s as i64)));
            }
        }
        out
    }

    /// Numeric value at down-step weight `r` and level weight `s`.
    pub fn eval(&self, r: f64, s: f64) -> f64 {
        let mut out = 0.0;
        for (&(er, es), c) in &self.terms {
            out += rat_to_f64(c).re * r.powi(er as i32) * s.powi(es as i32);
        }
        out
    }

    /// The terms, sorted by exponent pair.
    pub fn terms(&self) -> impl Iterator<Item = (&(i64, u32), &Rat)> {
        self.terms.iter()
    }
}

fn first_difference(a: &PathPoly, b: &PathPoly) -> String {
    let keys: std::collections::BTreeSet<(i64, u32)> =
        a.terms.keys().chain(b.terms.keys()).copied().collect();
    for key in keys {
        let zero = Rat::zero();
        let ca = a.terms.get(&key).unwrap_or(&zero);
        let cb = b.terms.get(&key).unwrap_or(&zero);
        if ca != cb {
            return format!(
                "coefficient of R^{} S^{} differs: {} vs {}",
                key.0, key.1, ca, cb
            );
        }
    }
    "polynomials agree".to_string()
}

/// Memoized lattice-path generating functions.
///
/// Three families share one table set: walks with unit up-steps, weighted
/// level steps and weighted down-steps; the same walks restricted to
/// non-negative heights; and two-step walks whose up-step rises by `p - 1`
/// with a weight per unit down-step.  Row `n` of each table maps the end
/// height to the exact weight polynomial over all walks of length `n` from
/// height zero.
#[derive(Debug, Clone)]
pub struct PathGF {
    p: usize,
    three: Vec<BTreeMap<i64, PathPoly>>,
    plus: Vec<BTreeMap<i64, PathPoly>>,
    rising: Vec<BTreeMap<i64, PathPoly>>,
}

impl PathGF {
    /// Builds all tables for walk lengths up to `n_max`.
    pub fn new(p: usize, n_max: usize) -> Result<PathGF> {
        if p < 2 {
            return Err(Error::InvalidConfig(format!("rising step needs p >= 2, got {p}")));
        }
        let seed = || {
            let mut row = BTreeMap::new();
            row.insert(0_i64, PathPoly::one());
            vec![row]
        };
        let mut three = seed();
        let mut plus = seed();
        let mut rising = seed();
        for n in 1..=n_max {
            let mut row: BTreeMap<i64, PathPoly> = BTreeMap::new();
            for (&m, poly) in &three[n - 1] {
                add_to(&mut row, m + 1, poly.clone());
                add_to(&mut row, m, poly.mul_weight(0, 1));
                add_to(&mut row, m - 1, poly.mul_weight(1, 0));
            }
            three.push(row);

            let mut row: BTreeMap<i64, PathPoly> = BTreeMap::new();
            for (&m, poly) in &plus[n - 1] {
                add_to(&mut row, m + 1, poly.clone());
                add_to(&mut row, m, poly.mul_weight(0, 1));
                if m > 0 {
                    add_to(&mut row, m - 1, poly.mul_weight(1, 0));
                }
            }
            plus.push(row);

            let mut row: BTreeMap<i64, PathPoly> = BTreeMap::new();
            for (&m, poly) in &rising[n - 1] {
                add_to(&mut row, m + p as i64 - 1, poly.clone());
                add_to(&mut row, m - 1, poly.mul_weight(1, 0));
            }
            rising.push(row);
        }
        Ok(PathGF { p, three, plus, rising })
    }

    /// The rise of the two-step family's up-step, plus one.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Largest tabulated walk length.
    pub fn max_length(&self) -> usize {
        self.three.len() - 1
    }

    /// Weight polynomial of three-step walks of length `n` ending at `m`.
    pub fn pi(&self, n: usize, m: i64) -> PathPoly {
        self.three[n].get(&m).cloned().unwrap_or_else(PathPoly::zero)
    }

    /// Weight polynomial of three-step walks staying at non-negative height.
    pub fn pi_plus(&self, n: usize, m: i64) -> PathPoly {
        self.plus[n].get(&m).cloned().unwrap_or_else(PathPoly::zero)
    }

    /// Weight polynomial of two-step walks with up-steps of rise `p - 1`.
    pub fn pi_p(&self, n: usize, m: i64) -> PathPoly {
        self.rising[n].get(&m).cloned().unwrap_or_else(PathPoly::zero)
    }
}

fn add_to(row: &mut BTreeMap<i64, PathPoly>, m: i64, poly: PathPoly) {
    let slot = row.entry(m).or_insert_with(PathPoly::zero);
    let sum = slot.add(&poly);
    *slot = sum;
}

/// Exact convolution identity: splitting a walk to depth `-2m - n - 1` at
/// its last passage through height `n` factors it into a return walk and a
/// walk to height `n`, summed over the split point.
///
/// Checked as polynomial equalities for all lengths `k <= k_max` and end
/// heights `0 <= n <= n_max`.
pub fn check_path_convolution(paths: &PathGF, k_max: usize, n_max: i64) -> Report {
    let mut report = Report::new("path convolution identity");
    for k in 2..=k_max {
        for n in 0..=n_max {
            let mut lhs = PathPoly::zero();
            let mut s = n;
            while s + 2 <= k as i64 {
                let term = paths.pi(k - 2 - s as usize, 0).mul(&paths.pi(s as usize, n));
                lhs = lhs.add(&term);
                s += 1;
            }
            let mut rhs = PathPoly::zero();
            let mut m = 0_i64;
            while 2 * m <= k as i64 - 2 - n {
                let term =
                    paths.pi(k - 1, -(2 * m + n + 1)).mul_weight(-m - n - 1, 0);
                rhs = rhs.add(&term);
                m += 1;
            }
            if lhs != rhs {
                report.violation(k, n as usize, first_difference(&lhs, &rhs));
            }
        }
    }
    report
}

/// Exact reflection identity: a walk returning to height zero maps, by
/// flipping the first descents below each record minimum, onto a
/// non-negative walk ending at twice the depth, with one down-weight per
/// flipped step.
///
/// Checked as polynomial equalities for all lengths `r <= r_max`.
pub fn check_path_reflection(paths: &PathGF, r_max: usize) -> Report {
    let mut report = Report::new("path reflection identity");
    for r in 0..=r_max {
        let lhs = paths.pi(r, 0);
        let mut rhs = PathPoly::zero();
        let mut m = 0_i64;
        while 2 * m <= r as i64 {
            rhs = rhs.add(&paths.pi_plus(r, 2 * m).mul_weight(m, 0));
            m += 1;
        }
        if lhs != rhs {
            report.violation(r, 0, first_difference(&lhs, &rhs));
        }
    }
    report
}

/// The sliding determinant `det(wbar_a^{n+b} - w_a^{n+b})`, `b = 1..=N`.
///
/// The empty pair set gives one; `n = -1` gives zero because the first
/// column vanishes identically.
pub fn h_det(dps: &DoublePoints, n: i64) -> Complex64 {
    XiVectors::new(dps).h(n)
}

const COINCIDENT_GUARD: f64 = 1e-12;

fn guard_distinct(u: DdComplex, v: DdComplex, what: &str) -> Result<DdComplex> {
    let diff = u.sub(v);
    if diff.norm_hi() <= COINCIDENT_GUARD * (u.norm_hi() + v.norm_hi()).max(1e-300) {
        return Err(Error::Degenerate(format!("coincident {what}")));
    }
    Ok(diff)
}

fn hbar_dd(pairs: &[(DdComplex, DdComplex)], n: i64) -> Result<DdComplex> {
    let nn = pairs.len();
    if nn == 0 {
        return Ok(DdComplex::one());
    }
    let mut rho = Vec::with_capacity(nn);
    for (a, &(wa, _)) in pairs.iter().enumerate() {
        let mut num = DdComplex::one();
        for &(_, wbc) in pairs {
            num = num.mul(guard_distinct(wa, wbc, "pair coordinates w_a = wbar_c")?);
        }
        let mut den = DdComplex::one();
        let wba = pairs[a].1;
        for (c, &(_, wbc)) in pairs.iter().enumerate() {
            if c != a {
                den = den.mul(guard_distinct(wba, wbc, "outer coordinates")?);
            }
        }
        rho.push(num.div(den));
    }
    let mut m = vec![vec![DdComplex::zero(); nn]; nn];
    for (a, &(wa, wba)) in pairs.iter().enumerate() {
        let xpow = wa.div(wba).powi(n + 1);
        for (b, &(_, wbb)) in pairs.iter().enumerate() {
            let entry = rho[a].mul(xpow).div(wa.sub(wbb));
            m[a][b] = if a == b { DdComplex::one().sub(entry) } else { entry.neg() };
        }
    }
    Ok(precision::det_dd(&m))
}

fn hbar_alt_dd(pairs: &[(DdComplex, DdComplex)], n: i64) -> Result<DdComplex> {
    let nn = pairs.len();
    if nn == 0 {
        return Ok(DdComplex::one());
    }
    let mut m = vec![vec![DdComplex::zero(); nn]; nn];
    for (a, &(wa, wba)) in pairs.iter().enumerate() {
        let xpow = wa.div(wba).powi(n + nn as i64);
        let mut den = DdComplex::one();
        for (c, &(wc, _)) in pairs.iter().enumerate() {
            if c != a {
                den = den.mul(guard_distinct(wa, wc, "inner coordinates")?);
            }
        }
        for b in 0..nn {
            let mut num = DdComplex::one();
            for (c, &(wc, _)) in pairs.iter().enumerate() {
                if c != b {
                    num = num.mul(guard_distinct(wba, wc, "pair coordinates wbar_a = w_c")?);
                }
            }
            let entry = num.div(den).mul(xpow);
            m[a][b] = if a == b { DdComplex::one().sub(entry) } else { entry.neg() };
        }
    }
    Ok(precision::det_dd(&m))
}

/// The normalized determinant with unit large-`n` limit: entries
/// `delta_ab - rho_a X_a^{n+1}/(w_a - wbar_b)` where `rho_a` is the ratio
/// of the pair-polynomial values at the pair coordinates and
/// `X_a = w_a/wbar_a`.
pub fn h_normalized(dps: &DoublePoints, n: i64) -> Result<Complex64> {
    Ok(hbar_dd(dps.pairs_dd(), n)?.to_c64())
}

/// The normalized determinant built from the `w`-differences with exponent
/// `n + N`.
///
/// For genuine double points of a parametrized curve this agrees with
/// [`h_normalized`]; for arbitrary pairs the two differ, so the agreement
/// certifies the pairing.
pub fn h_normalized_alt(dps: &DoublePoints, n: i64) -> Result<Complex64> {
    Ok(hbar_alt_dd(dps.pairs_dd(), n)?.to_c64())
}

/// The one-point function `R_n = R h_{n-1} h_{n+1} / h_n^2`, evaluated on
/// the normalized determinants so the entries stay bounded at every `n`.
pub fn r_n_det(dps: &DoublePoints, r: Complex64, n: i64) -> Result<Complex64> {
    if n < 1 {
        return Err(Error::InvalidConfig(format!("one-point index must be >= 1, got {n}")));
    }
    let pairs = dps.pairs_dd();
    let below = hbar_dd(pairs, n - 1)?;
    let center = hbar_dd(pairs, n)?;
    let above = hbar_dd(pairs, n + 1)?;
    if center.norm_hi() == 0.0 {
        return Err(Error::Degenerate(format!("vanishing determinant h_{n}")));
    }
    let ratio = below.mul(above).div(center.mul(center));
    Ok(DdComplex::from_c64(r).mul(ratio).to_c64())
}

/// Checks the prefactor identity linking the plain and normalized
/// determinants: `h_n` equals the `wbar` Vandermonde times
/// `prod_a wbar_a^{n+1}` times the normalized determinant, for every
/// `0 <= n <= n_max`.
pub fn check_h_prefactor(dps: &DoublePoints, n_max: i64, tol: f64) -> Report {
    let mut report = Report::new("plain vs normalized determinant prefactor");
    let pairs = dps.pairs_dd();
    let xi = XiVectors::new(dps);
    let mut vandermonde = DdComplex::one();
    for a in 0..pairs.len() {
        for b in (a + 1)..pairs.len() {
            vandermonde = vandermonde.mul(pairs[b].1.sub(pairs[a].1));
        }
    }
    for n in 0..=n_max {
        let lhs = xi.h_dd(n);
        let mut prefactor = vandermonde;
        for &(_, wb) in pairs {
            prefactor = prefactor.mul(wb.powi(n + 1));
        }
        let rhs = match hbar_dd(pairs, n) {
            Ok(h) => prefactor.mul(h),
            Err(e) => {
                report.violation(n as usize, 0, format!("normalized form failed: {e}"));
                continue;
            }
        };
        let scale = lhs.norm_hi().max(rhs.norm_hi()).max(1e-300);
        let diff = lhs.sub(rhs).norm_hi();
        if diff > tol * scale {
            report.violation(
                n as usize,
                0,
                format!("relative mismatch {:.3e} at n = {n}", diff / scale),
            );
        }
    }
    report
}

/// Checks that the two normalized-determinant forms agree for
/// `0 <= n <= n_max`; this holds exactly when the pairs are double points
/// of a curve, so a pass certifies the spectral data.
pub fn check_h_normalized_forms(dps: &DoublePoints, n_max: i64, tol: f64) -> Report {
    let mut report = Report::new("normalized determinant forms");
    let pairs = dps.pairs_dd();
    for n in 0..=n_max {
        let (a, b) = match (hbar_dd(pairs, n), hbar_alt_dd(pairs, n)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                report.violation(n as usize, 0, format!("form failed: {e}"));
                continue;
            }
        };
        let scale = a.norm_hi().max(b.norm_hi()).max(1e-300);
        let diff = a.sub(b).norm_hi();
        if diff > tol * scale {
            report.violation(
                n as usize,
                0,
                format!("relative mismatch {:.3e} at n = {n}", diff / scale),
            );
        }
    }
    report
}

/// Checks that `R_n` values are real and positive, as generating-function
/// values at real positive weights must be.
pub fn check_r_values_real(dps: &DoublePoints, r: Complex64, n_max: i64, tol: f64) -> Report {
    let mut report = Report::new("one-point values real and positive");
    for n in 1..=n_max {
        match r_n_det(dps, r, n) {
            Ok(v) => {
                if v.im.abs() > tol * v.norm().max(1e-300) {
                    report.violation(n as usize, 0, format!("imaginary part {:.3e}", v.im));
                }
                if v.re <= 0.0 {
                    report.violation(n as usize, 0, format!("non-positive value {:.3e}", v.re));
                }
            }
            Err(e) => report.violation(n as usize, 0, format!("evaluation failed: {e}")),
        }
    }
    report
}

/// One row of the determinant-versus-series comparison.
#[derive(Debug, Clone, Copy)]
pub struct RComparison {
    /// Row index of the one-point function.
    pub n: usize,
    /// Value from the double-point determinant ratio.
    pub det_value: f64,
    /// Value from evaluating the truncated-series solution.
    pub series_value: f64,
}

/// Renders comparison rows as CSV with columns
/// `n,r_n_det,r_n_series_eval,abs_diff`.
pub fn r_comparison_csv(rows: &[RComparison]) -> String {
    let mut out = String::from("n,r_n_det,r_n_series_eval,abs_diff\n");
    for row in rows {
        let diff = (row.det_value - row.series_value).abs();
        let _ = writeln!(out, "{},{},{},{}", row.n, row.det_value, row.series_value, diff);
    }
    out
}

/// Numeric data of the general-map specialization: white faces keep their
/// weights, black faces are squeezed to plain edges.
#[derive(Debug, Clone)]
pub struct GeneralMap {
    /// Largest allowed white degree.
    pub q: usize,
    /// White weights, `g[k-1]` for degree `k`.
    pub g: Vec<f64>,
    /// Limit of the one-point functions.
    pub r: f64,
    /// Limit of the diagonal functions.
    pub s: f64,
    /// Characteristic coefficients `B_n`, `n = 0..=q-2`, from the curve
    /// difference quotient.
    pub b_curve: Vec<f64>,
    /// The same coefficients from the walk convolution route.
    pub b_walk: Vec<f64>,
    /// Characteristic roots inside the unit disk, one per double-point
    /// orbit of the squeezed model.
    pub roots: Vec<Complex64>,
}

fn weighted_eval(g: &[f64], polys: &[PathPoly], r: f64, s: f64) -> f64 {
    g.iter().zip(polys).map(|(gk, p)| gk * p.eval(r, s)).sum()
}

/// Solves the limit fixed point and the characteristic equation of the
/// general-map specialization.
///
/// `g[k-1]` is the weight of white degree `k`; the fixed point
/// `R = 1/(1 - sum_k g_k pi_1(k-1))`, `S = sum_k g_k pi_0(k-1)` is solved
/// by Newton from a damped fixed-point seed.  The characteristic Laurent
/// polynomial `sum_n B_n x^n` is symmetric with support `|n| <= q-2`; its
/// `2(q-2)` roots split into `q-2` inside the unit disk and their
/// inverses, and a count mismatch or a root on the circle is an error.
pub fn general_map_char(g: &[f64]) -> Result<GeneralMap> {
    let q = g.len();
    if q < 3 {
        return Err(Error::InvalidConfig(format!("need white degrees up to q >= 3, got {q}")));
    }
    if g[q - 1] == 0.0 {
        return Err(Error::InvalidConfig("top white weight must not vanish".into()));
    }
    let paths = PathGF::new(2, q)?;
    let pi1: Vec<PathPoly> = (1..=q).map(|k| paths.pi(k - 1, 1)).collect();
    let pi0: Vec<PathPoly> = (1..=q).map(|k| paths.pi(k - 1, 0)).collect();
    let d1r: Vec<PathPoly> = pi1.iter().map(PathPoly::deriv_down).collect();
    let d1s: Vec<PathPoly> = pi1.iter().map(PathPoly::deriv_level).collect();
    let d0r: Vec<PathPoly> = pi0.iter().map(PathPoly::deriv_down).collect();
    let d0s: Vec<PathPoly> = pi0.iter().map(PathPoly::deriv_level).collect();

    let mut r = 1.0;
    let mut s = 0.0;
    for _ in 0..40 {
        let up = weighted_eval(g, &pi1, r, s);
        if up >= 1.0 {
            return Err(Error::NonConvergence(
                "fixed-point seed left the convergent regime".into(),
            ));
        }
        r = 1.0 / (1.0 - up);
        s = weighted_eval(g, &pi0, r, s);
    }
    let mut converged = false;
    for _ in 0..50 {
        let f1 = r * (1.0 - weighted_eval(g, &pi1, r, s)) - 1.0;
        let f2 = s - weighted_eval(g, &pi0, r, s);
        if f1.abs() + f2.abs() < 1e-14 * (1.0 + r.abs() + s.abs()) {
            converged = true;
            break;
        }
        let j11 = 1.0 - weighted_eval(g, &pi1, r, s) - r * weighted_eval(g, &d1r, r, s);
        let j12 = -r * weighted_eval(g, &d1s, r, s);
        let j21 = -weighted_eval(g, &d0r, r, s);
        let j22 = 1.0 - weighted_eval(g, &d0s, r, s);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 {
            return Err(Error::NonConvergence("singular Jacobian in limit fixed point".into()));
        }
        r -= (f1 * j22 - f2 * j12) / det;
        s -= (f2 * j11 - f1 * j21) / det;
    }
    if !converged {
        return Err(Error::NonConvergence("limit fixed point did not converge".into()));
    }
    if r <= 0.0 {
        return Err(Error::Degenerate(format!("non-positive limit value {r}")));
    }

    let mut b_curve = Vec::with_capacity(q - 1);
    let mut b_walk = Vec::with_capacity(q - 1);
    for n in 0..=(q as i64 - 2) {
        let mut curve = if n == 0 { r } else { 0.0 };
        let mut walk = curve;
        for k in (n as usize + 2)..=q {
            if g[k - 1] == 0.0 {
                continue;
            }
            let mut m = 0_i64;
            while 2 * m <= k as i64 - 2 - n {
                curve -= g[k - 1]
                    * paths.pi(k - 1, -(2 * m + n + 1)).eval(r, s)
                    * r.powf(-(m as f64) - n as f64 / 2.0);
                m += 1;
            }
            for t in n..=(k as i64 - 2) {
                walk -= g[k - 1]
                    * paths.pi(k - 2 - t as usize, 0).eval(r, s)
                    * paths.pi(t as usize, n).eval(r, s)
                    * r.powf(1.0 + n as f64 / 2.0);
            }
        }
        b_curve.push(curve);
        b_walk.push(walk);
    }

    let deg = 2 * (q - 2);
    let mut coeffs = vec![0.0; deg + 1];
    for (j, c) in coeffs.iter_mut().enumerate() {
        *c = b_curve[(j as i64 - (q as i64 - 2)).unsigned_abs() as usize];
    }
    let all_roots = precision::poly_roots_real(&coeffs)?;
    let mut roots = Vec::new();
    for z in all_roots {
        let modulus = z.norm();
        if (modulus - 1.0).abs() < 1e-6 {
            return Err(Error::Degenerate(format!(
                "characteristic root on the unit circle: |x| = {modulus}"
            )));
        }
        if modulus < 1.0 {
            roots.push(z);
        }
    }
    if roots.len() != q - 2 {
        return Err(Error::RootCount(format!(
            "expected {} characteristic roots inside the unit disk, found {}",
            q - 2,
            roots.len()
        )));
    }
    Ok(GeneralMap { q, g: g.to_vec(), r, s, b_curve, b_walk, roots })
}

/// Checks that the two characteristic-coefficient routes agree.
pub fn check_b_forms(gm: &GeneralMap, tol: f64) -> Report {
    let mut report = Report::new("characteristic coefficient routes");
    let scale = gm
        .b_curve
        .iter()
        .chain(gm.b_walk.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    for (n, (a, b)) in gm.b_curve.iter().zip(&gm.b_walk).enumerate() {
        if (a - b).abs() > tol * scale {
            report.violation(n, 0, format!("B_{n} routes differ: {a} vs {b}"));
        }
    }
    report
}

/// `R_i` from the characteristic roots: the ratio
/// `R t_{i-1} t_{i+1} / t_i^2` of determinants
/// `t_i = det(x_a^{-(i+b)} - x_a^{i+b})`, with the shared row factor
/// `x_a^{-i}` extracted so entries stay bounded as `i` grows.
pub fn r_i_general(gm: &GeneralMap, i: i64) -> Result<Complex64> {
    if i < 1 {
        return Err(Error::InvalidConfig(format!("one-point index must be >= 1, got {i}")));
    }
    let t = |j: i64| -> Complex64 {
        let nn = gm.roots.len();
        let m: Vec<Vec<Complex64>> = (0..nn)
            .map(|a| {
                (1..=nn as i64)
                    .map(|b| {
                        gm.roots[a].powi(-(b as i32)) - gm.roots[a].powi((2 * j + b) as i32)
                    })
                    .collect()
            })
            .collect();
        precision::det(&m)
    };
    let center = t(i);
    if center.norm() == 0.0 {
        return Err(Error::Degenerate(format!("vanishing root determinant at i = {i}")));
    }
    Ok(Complex64::new(gm.r, 0.0) * t(i - 1) * t(i + 1) / (center * center))
}

/// Checks `w wbar = R` for every double point of the squeezed encoding.
pub fn check_pair_product(dps: &DoublePoints, r: Complex64, tol: f64) -> Report {
    let mut report = Report::new("pair products equal the limit value");
    for (a, &(w, wb)) in dps.pairs.iter().enumerate() {
        let diff = (w * wb - r).norm();
        if diff > tol * r.norm().max(1e-300) {
            report.violation(a, 0, format!("w wbar = {} vs {r}", w * wb));
        }
    }
    report
}

/// Checks that the characteristic-root route and the double-point
/// determinant route give the same limit and the same `R_i`.
pub fn check_general_vs_eulerian(
    gm: &GeneralMap,
    dps: &DoublePoints,
    r_curve: Complex64,
    n_max: i64,
    tol: f64,
) -> Report {
    let mut report = Report::new("general-map routes");
    if (Complex64::new(gm.r, 0.0) - r_curve).norm() > tol * r_curve.norm().max(1e-300) {
        report.violation(0, 0, format!("limit values differ: {} vs {r_curve}", gm.r));
    }
    if gm.roots.len() != dps.n() {
        report.violation(
            0,
            0,
            format!(
                "orbit counts differ: {} characteristic roots vs {} double points",
                gm.roots.len(),
                dps.n()
            ),
        );
        return report;
    }
    for n in 1..=n_max {
        let lhs = match r_i_general(gm, n) {
            Ok(v) => v,
            Err(e) => {
                report.violation(n as usize, 0, format!("root route failed: {e}"));
                continue;
            }
        };
        let rhs = match r_n_det(dps, r_curve, n) {
            Ok(v) => v,
            Err(e) => {
                report.violation(n as usize, 0, format!("determinant route failed: {e}"));
                continue;
            }
        };
        let scale = lhs.norm().max(rhs.norm()).max(1e-300);
        if (lhs - rhs).norm() > tol * scale {
            report.violation(
                n as usize,
                0,
                format!("R_{n} routes differ: {lhs} vs {rhs}"),
            );
        }
    }
    report
}

/// Orbit-reduced double-point data of a `p`-constellation.
///
/// The full pair set is the orbit of the representatives under rotation by
/// `exp(2 pi i/p)`; every derived quantity depends only on the rotation
/// invariants `X_a`, the limit value and the `p`-th powers of the pair
/// coordinates.
#[derive(Debug, Clone)]
pub struct ConstellationData {
    /// Black face degree.
    pub p: usize,
    /// Bound on white degrees in units of `p`.
    pub ell: usize,
    /// Number of rotation orbits.
    pub n0: usize,
    /// Limit of the one-point functions, from the curve data.
    pub r: Complex64,
    /// Representative pair of each orbit.
    pub reps: Vec<(Complex64, Complex64)>,
    /// Ratios `X_a = w_a/wbar_a`, constant along each orbit.
    pub x: Vec<Complex64>,
    /// Power sums `xi_a = X_a + ... + X_a^{p-1}`.
    pub xi: Vec<Complex64>,
    /// Power sums `chi_a = X_a^{-1} + ... + X_a^{-(p-1)}`.
    pub chi: Vec<Complex64>,
}

fn pair_distance(a: (Complex64, Complex64), b: (Complex64, Complex64)) -> f64 {
    (a.0 - b.0).norm() / a.0.norm().max(1e-9) + (a.1 - b.1).norm() / a.1.norm().max(1e-9)
}

fn rotation_map(
    pairs: &[(Complex64, Complex64)],
    omega: Complex64,
    tol: f64,
) -> Result<Vec<usize>> {
    let mut map = Vec::with_capacity(pairs.len());
    for &(w, wb) in pairs {
        let target = (w * omega, wb * omega);
        let (best, dist) = pairs
            .iter()
            .enumerate()
            .map(|(j, &other)| (j, pair_distance(target, other)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .ok_or_else(|| Error::Pairing("empty double-point set".into()))?;
        if dist > tol {
            return Err(Error::Pairing(format!(
                "rotated pair misses the set by relative distance {dist:.3e}"
            )));
        }
        map.push(best);
    }
    let mut seen = vec![false; pairs.len()];
    for &j in &map {
        if seen[j] {
            return Err(Error::Pairing("rotation map is not a permutation".into()));
        }
        seen[j] = true;
    }
    Ok(map)
}

fn normalized_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

fn reduce_orbits(
    p: usize,
    ell: usize,
    dps: &DoublePoints,
    r: Complex64,
    sector: usize,
    tol: f64,
) -> Result<ConstellationData> {
    let n0 = p * ell - ell - 1;
    if n0 == 0 {
        return Err(Error::InvalidConfig(format!(
            "constellation (p, ell) = ({p}, {ell}) has no double points"
        )));
    }
    if dps.n() != p * n0 {
        return Err(Error::RootCount(format!(
            "expected {} double points for (p, ell) = ({p}, {ell}), found {}",
            p * n0,
            dps.n()
        )));
    }
    let omega = Complex64::from_polar(1.0, 2.0 * PI / p as f64);
    let map = rotation_map(&dps.pairs, omega, tol)?;
    let mut assigned = vec![false; dps.pairs.len()];
    let mut reps = Vec::with_capacity(n0);
    let lo = 2.0 * PI * sector as f64 / p as f64;
    let hi = 2.0 * PI * (sector as f64 + 1.0) / p as f64;
    for start in 0..dps.pairs.len() {
        if assigned[start] {
            continue;
        }
        let mut orbit = vec![start];
        assigned[start] = true;
        let mut cur = map[start];
        while cur != start {
            if assigned[cur] {
                return Err(Error::Pairing("rotation orbits overlap".into()));
            }
            assigned[cur] = true;
            orbit.push(cur);
            cur = map[cur];
        }
        if orbit.len() != p {
            return Err(Error::Pairing(format!(
                "rotation orbit of size {} instead of {p}",
                orbit.len()
            )));
        }
        let in_sector: Vec<usize> = orbit
            .iter()
            .copied()
            .filter(|&i| {
                let a = normalized_arg(dps.pairs[i].0);
                a >= lo && a < hi
            })
            .collect();
        if in_sector.len() != 1 {
            return Err(Error::Degenerate(format!(
                "{} orbit members in the representative sector",
                in_sector.len()
            )));
        }
        reps.push(dps.pairs[in_sector[0]]);
    }
    reps.sort_by(|a, b| {
        a.0.re.partial_cmp(&b.0.re).unwrap().then(a.0.im.partial_cmp(&b.0.im).unwrap())
    });
    let x: Vec<Complex64> = reps.iter().map(|&(w, wb)| w / wb).collect();
    let xi = x
        .iter()
        .map(|&xa| (1..p as i32).map(|k| xa.powi(k)).sum::<Complex64>())
        .collect();
    let chi = x
        .iter()
        .map(|&xa| (1..p as i32).map(|k| xa.powi(-k)).sum::<Complex64>())
        .collect();
    Ok(ConstellationData { p, ell, n0, r, reps, x, xi, chi })
}

/// Reduces the double points of a `p`-constellation to one representative
/// per rotation orbit, taking the pair whose inner coordinate has argument
/// in the first sector `[0, 2 pi/p)`.
pub fn constellation_factor(
    p: usize,
    ell: usize,
    dps: &DoublePoints,
    r: Complex64,
    tol: f64,
) -> Result<ConstellationData> {
    reduce_orbits(p, ell, dps, r, 0, tol)
}

/// Checks that rotating any double point by `exp(2 pi i/p)` lands on
/// another double point.
pub fn check_orbit_closure(dps: &DoublePoints, p: usize, tol: f64) -> Report {
    let mut report = Report::new("orbit closure under rotation");
    let omega = Complex64::from_polar(1.0, 2.0 * PI / p as f64);
    for (i, &(w, wb)) in dps.pairs.iter().enumerate() {
        let target = (w * omega, wb * omega);
        let dist = dps
            .pairs
            .iter()
            .map(|&other| pair_distance(target, other))
            .fold(f64::INFINITY, f64::min);
        if dist > tol {
            report.violation(i, 0, format!("rotated pair misses by {dist:.3e}"));
        }
    }
    report
}

/// Checks that the principal `p`-th roots of `R/chi_a` and `R/xi_a`
/// reproduce the representative coordinates up to a rotation power.
pub fn check_pair_reconstruction(cd: &ConstellationData, tol: f64) -> Report {
    let mut report = Report::new("pair coordinates from rotation invariants");
    let omega = Complex64::from_polar(1.0, 2.0 * PI / cd.p as f64);
    let inv_p = 1.0 / cd.p as f64;
    for a in 0..cd.n0 {
        let w_principal = (cd.r / cd.chi[a]).powf(inv_p);
        let wb_principal = (cd.r / cd.xi[a]).powf(inv_p);
        for (coord, principal, which) in [
            (cd.reps[a].0, w_principal, "inner"),
            (cd.reps[a].1, wb_principal, "outer"),
        ] {
            let best = (0..cd.p)
                .map(|s| (coord - principal * omega.powi(s as i32)).norm())
                .fold(f64::INFINITY, f64::min);
            if best > tol * coord.norm().max(1e-300) {
                report.violation(
                    a,
                    0,
                    format!("{which} coordinate off by {best:.3e} after rotation"),
                );
            }
        }
    }
    report
}

/// The four independent evaluations of one factor determinant.
#[derive(Debug, Clone, Copy)]
pub struct FactorRoutes {
    /// Determinant over the rotation invariants alone.
    pub det_x: Complex64,
    /// Determinant over the `p`-th powers of the pair coordinates.
    pub det_pairs: Complex64,
    /// Subset expansion with full-product weights and Cauchy-type minors.
    pub sigma: Complex64,
    /// Subset expansion with punctured-product weights and cross-ratio
    /// factors.
    pub tau: Complex64,
}

impl FactorRoutes {
    /// Largest pairwise disagreement, relative to the largest value or to
    /// the unit large-index limit, whichever is bigger.
    pub fn spread(&self) -> f64 {
        let vals = [self.det_x, self.det_pairs, self.sigma, self.tau];
        let scale = vals.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let mut worst = 0.0_f64;
        for i in 0..vals.len() {
            for j in (i + 1)..vals.len() {
                worst = worst.max((vals[i] - vals[j]).norm() / scale);
            }
        }
        worst
    }
}

fn prod_excluding(points: &[Complex64], skip: Option<usize>, z: Complex64) -> Complex64 {
    points
        .iter()
        .enumerate()
        .filter(|&(c, _)| Some(c) != skip)
        .map(|(_, &v)| z - v)
        .product()
}

fn factor_det(left: &[Complex64], right: &[Complex64], x: &[Complex64], e: i64) -> Complex64 {
    let nn = left.len();
    let m: Vec<Vec<Complex64>> = (0..nn)
        .map(|a| {
            let den = prod_excluding(right, Some(a), right[a]);
            let xpow = x[a].powi(e as i32);
            (0..nn)
                .map(|b| {
                    let entry = prod_excluding(right, Some(b), left[a]) / den * xpow;
                    if a == b {
                        Complex64::new(1.0, 0.0) - entry
                    } else {
                        -entry
                    }
                })
                .collect()
        })
        .collect();
    precision::det(&m)
}

fn factor_expansion(
    left: &[Complex64],
    right: &[Complex64],
    x: &[Complex64],
    e: i64,
    punctured: bool,
) -> Complex64 {
    let nn = left.len();
    let mut total = Complex64::new(0.0, 0.0);
    for mask in 0..(1_u32 << nn) {
        let subset: Vec<usize> = (0..nn).filter(|&a| mask & (1 << a) != 0).collect();
        let mut term = Complex64::new(1.0, 0.0);
        for &a in &subset {
            let num = prod_excluding(right, punctured.then_some(a), left[a]);
            let den = prod_excluding(right, Some(a), right[a]);
            term *= -(num / den) * x[a].powi(e as i32);
        }
        if punctured {
            for (i, &a) in subset.iter().enumerate() {
                for &b in &subset[i + 1..] {
                    term *= (left[a] - left[b]) * (right[a] - right[b])
                        / ((left[a] - right[b]) * (right[a] - left[b]));
                }
            }
        } else {
            let minor: Vec<Vec<Complex64>> = subset
                .iter()
                .map(|&a| subset.iter().map(|&b| 1.0 / (left[a] - right[b])).collect())
                .collect();
            term *= precision::det(&minor);
        }
        total += term;
    }
    total
}

fn pair_powers(cd: &ConstellationData) -> (Vec<Complex64>, Vec<Complex64>) {
    let wp = cd.reps.iter().map(|&(w, _)| w.powi(cd.p as i32)).collect();
    let wbp = cd.reps.iter().map(|&(_, wb)| wb.powi(cd.p as i32)).collect();
    (wp, wbp)
}

/// All evaluations of the first factor determinant `u_i`.
pub fn u_routes(cd: &ConstellationData, i: i64) -> FactorRoutes {
    let shift = (cd.p * (cd.n0 - 1)) as i64;
    let (wp, wbp) = pair_powers(cd);
    FactorRoutes {
        det_x: factor_det(&cd.xi, &cd.chi, &cd.x, i),
        det_pairs: factor_det(&wbp, &wp, &cd.x, i + shift),
        sigma: factor_expansion(&cd.xi, &cd.chi, &cd.x, i, false),
        tau: factor_expansion(&cd.xi, &cd.chi, &cd.x, i, true),
    }
}

/// All evaluations of the second factor determinant `v_i`.
pub fn v_routes(cd: &ConstellationData, i: i64) -> FactorRoutes {
    let shift = (cd.p * (cd.n0 - 1)) as i64;
    let (wp, wbp) = pair_powers(cd);
    FactorRoutes {
        det_x: factor_det(&cd.chi, &cd.xi, &cd.x, i + shift),
        det_pairs: factor_det(&wp, &wbp, &cd.x, i),
        sigma: factor_expansion(&cd.chi, &cd.xi, &cd.x, i + shift, false),
        tau: factor_expansion(&cd.chi, &cd.xi, &cd.x, i + shift, true),
    }
}

/// The first factor determinant, from the rotation invariants.
pub fn u_i(cd: &ConstellationData, i: i64) -> Complex64 {
    factor_det(&cd.xi, &cd.chi, &cd.x, i)
}

/// The second factor determinant, from the rotation invariants.
pub fn v_i(cd: &ConstellationData, i: i64) -> Complex64 {
    let shift = (cd.p * (cd.n0 - 1)) as i64;
    factor_det(&cd.chi, &cd.xi, &cd.x, i + shift)
}

fn r_i_from(r: Complex64, f: impl Fn(i64) -> Complex64, p: usize, i: i64) -> Result<Complex64> {
    if i < 1 {
        return Err(Error::InvalidConfig(format!("one-point index must be >= 1, got {i}")));
    }
    let den = f(i + 1) * f(i + p as i64);
    if den.norm() == 0.0 {
        return Err(Error::Degenerate(format!("vanishing factor determinant near i = {i}")));
    }
    Ok(r * f(i) * f(i + p as i64 + 1) / den)
}

/// `R_i` from the first factor family:
/// `R u_i u_{i+p+1} / (u_{i+1} u_{i+p})`.
pub fn r_i_constellation(cd: &ConstellationData, i: i64) -> Result<Complex64> {
    r_i_from(cd.r, |j| u_i(cd, j), cd.p, i)
}

/// `R_i` from the second factor family.
pub fn r_i_constellation_v(cd: &ConstellationData, i: i64) -> Result<Complex64> {
    r_i_from(cd.r, |j| v_i(cd, j), cd.p, i)
}

/// `R_i` from the punctured subset expansion of the first family.
pub fn r_i_constellation_expansion(cd: &ConstellationData, i: i64) -> Result<Complex64> {
    r_i_from(cd.r, |j| factor_expansion(&cd.xi, &cd.chi, &cd.x, j, true), cd.p, i)
}

/// Checks that all four evaluations of `u_i` and of `v_i` agree for
/// `0 <= i <= i_max`.
pub fn check_factor_routes(cd: &ConstellationData, i_max: i64, tol: f64) -> Report {
    let mut report = Report::new("factor determinant routes");
    for i in 0..=i_max {
        let spread_u = u_routes(cd, i).spread();
        if spread_u > tol {
            report.violation(i as usize, 0, format!("u routes spread {spread_u:.3e}"));
        }
        let spread_v = v_routes(cd, i).spread();
        if spread_v > tol {
            report.violation(i as usize, 1, format!("v routes spread {spread_v:.3e}"));
        }
    }
    report
}

/// Checks the factorization of the normalized determinants of the full
/// pair set into `p` consecutive factor values: the second family
/// reproduces [`h_normalized`] and the first family reproduces
/// [`h_normalized_alt`], exactly, for any rotation-closed pair set.
pub fn check_factorization(
    cd: &ConstellationData,
    dps: &DoublePoints,
    i_max: i64,
    tol: f64,
) -> Report {
    let mut report = Report::new("factorized normalized determinants");
    for i in 0..=i_max {
        for (col, (full, factor)) in [
            (h_normalized(dps, i), v_i as fn(&ConstellationData, i64) -> Complex64),
            (h_normalized_alt(dps, i), u_i),
        ]
        .into_iter()
        .enumerate()
        {
            let lhs = match full {
                Ok(v) => v,
                Err(e) => {
                    report.violation(i as usize, col, format!("normalized form failed: {e}"));
                    continue;
                }
            };
            let mut rhs = Complex64::new(1.0, 0.0);
            for s in 1..=cd.p as i64 {
                rhs *= factor(cd, i + s);
            }
            let scale = lhs.norm().max(rhs.norm()).max(1.0);
            if (lhs - rhs).norm() > tol * scale {
                report.violation(
                    i as usize,
                    col,
                    format!(
                        "factorization off by {:.3e} at i = {i}",
                        (lhs - rhs).norm() / scale
                    ),
                );
            }
        }
    }
    report
}

/// Checks that every reduced quantity is invariant under taking the orbit
/// representatives from the second sector instead of the first.
pub fn check_representative_invariance(
    cd: &ConstellationData,
    dps: &DoublePoints,
    i_max: i64,
    tol: f64,
) -> Report {
    let mut report = Report::new("representative choice invariance");
    let rotated = match reduce_orbits(cd.p, cd.ell, dps, cd.r, 1, tol.max(1e-8)) {
        Ok(c) => c,
        Err(e) => {
            report.violation(0, 0, format!("second-sector reduction failed: {e}"));
            return report;
        }
    };
    for i in 0..=i_max {
        for (col, (a, b)) in [
            (u_i(cd, i), u_i(&rotated, i)),
            (v_i(cd, i), v_i(&rotated, i)),
        ]
        .into_iter()
        .enumerate()
        {
            let scale = a.norm().max(b.norm()).max(1.0);
            if (a - b).norm() > tol * scale {
                report.violation(
                    i as usize,
                    col,
                    format!("sector choice changes the factor: {a} vs {b}"),
                );
            }
        }
    }
    report
}

/// Checks the characteristic equation of the constellation at every
/// rotation invariant: the difference quotient of the curve parametrization
/// vanishes at the double points, which pins
/// `1 = sum_j R^{-j} xi_a^j (sum_{n=1..pj-1} X_a^{-n}) c_j` with walk-sum
/// coefficients `c_j`.  For `ell = 1` the closed forms
/// `sum_{n=1..p-2} (p-1-n)(X_a^n + X_a^{-n}) = 1/(g R^{p-1})` and
/// `R (1 - g (p-1) R^{p-2}) = 1` are checked as well.
pub fn check_constellation_char(cd: &ConstellationData, ghat: &[f64], tol: f64) -> Report {
    let mut report = Report::new("constellation characteristic equation");
    if ghat.len() != cd.ell {
        report.violation(0, 0, format!("expected {} weights, got {}", cd.ell, ghat.len()));
        return report;
    }
    if cd.r.im.abs() > tol * cd.r.norm() {
        report.violation(0, 0, format!("limit value has imaginary part {:.3e}", cd.r.im));
        return report;
    }
    let r = cd.r.re;
    let paths = match PathGF::new(cd.p, cd.p * cd.ell) {
        Ok(p) => p,
        Err(e) => {
            report.violation(0, 0, format!("walk table failed: {e}"));
            return report;
        }
    };
    let coeff: Vec<f64> = (1..=cd.ell)
        .map(|j| {
            (j..=cd.ell)
                .map(|m| {
                    ghat[m - 1]
                        * paths.pi_p(cd.p * m - 1, -(cd.p as i64 * j as i64) + 1).eval(r, 0.0)
                })
                .sum()
        })
        .collect();
    for a in 0..cd.n0 {
        let mut total = Complex64::new(1.0, 0.0);
        for j in 1..=cd.ell {
            let down_sum: Complex64 =
                (1..=(cd.p * j - 1) as i32).map(|n| cd.x[a].powi(-n)).sum();
            total -= Complex64::new(r, 0.0).powi(-(j as i32))
                * cd.xi[a].powi(j as i32)
                * down_sum
                * coeff[j - 1];
        }
        if total.norm() > tol {
            report.violation(a, 0, format!("characteristic residual {:.3e}", total.norm()));
        }
    }
    if cd.ell == 1 {
        let g = ghat[0];
        let fixed = r * (1.0 - g * (cd.p as f64 - 1.0) * r.powi(cd.p as i32 - 2)) - 1.0;
        if fixed.abs() > tol {
            report.violation(0, 1, format!("limit fixed point residual {fixed:.3e}"));
        }
        let rhs = 1.0 / (g * r.powi(cd.p as i32 - 1));
        for a in 0..cd.n0 {
            let lhs: Complex64 = (1..=(cd.p as i32 - 2))
                .map(|n| {
                    Complex64::new((cd.p as i32 - 1 - n) as f64, 0.0)
                        * (cd.x[a].powi(n) + cd.x[a].powi(-n))
                })
                .sum();
            let diff = (lhs - Complex64::new(rhs, 0.0)).norm();
            if diff > tol * rhs.abs().max(1.0) {
                report.violation(a, 1, format!("closed form off by {diff:.3e}"));
            }
        }
    }
    report
}

/// Solves the constellation limit fixed point
/// `R = 1/(1 - sum_m ghat_m pi^{(p)}_1(p m - 1))` by Newton from a damped
/// fixed-point seed.
pub fn constellation_r(p: usize, ell: usize, ghat: &[f64]) -> Result<f64> {
    if ghat.len() != ell {
        return Err(Error::InvalidConfig(format!(
            "expected {ell} weights, got {}",
            ghat.len()
        )));
    }
    let paths = PathGF::new(p, p * ell)?;
    let pis: Vec<PathPoly> = (1..=ell).map(|m| paths.pi_p(p * m - 1, 1)).collect();
    let ders: Vec<PathPoly> = pis.iter().map(PathPoly::deriv_down).collect();
    let mut r = 1.0_f64;
    for _ in 0..40 {
        let up = weighted_eval(ghat, &pis, r, 0.0);
        if up >= 1.0 {
            return Err(Error::NonConvergence(
                "fixed-point seed left the convergent regime".into(),
            ));
        }
        r = 1.0 / (1.0 - up);
    }
    for _ in 0..50 {
        let f = r * (1.0 - weighted_eval(ghat, &pis, r, 0.0)) - 1.0;
        if f.abs() < 1e-14 * (1.0 + r.abs()) {
            return Ok(r);
        }
        let fp = 1.0 - weighted_eval(ghat, &pis, r, 0.0) - r * weighted_eval(ghat, &ders, r, 0.0);
        if fp == 0.0 {
            return Err(Error::NonConvergence("stationary limit fixed point".into()));
        }
        r -= f / fp;
    }
    Err(Error::NonConvergence("constellation limit fixed point did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::DoublePoints;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn pp(terms: &[(i64, u32, i64)]) -> PathPoly {
        let mut out = PathPoly::zero();
        for &(r, s, coeff) in terms {
            out = out.add(&PathPoly::monomial(r, s, rat_int(coeff)));
        }
        out
    }

    fn synthetic_single() -> DoublePoints {
        DoublePoints::from_pairs(vec![(c(0.5), c(2.0))], Vec::new())
    }

    fn synthetic_triple() -> DoublePoints {
        DoublePoints::from_pairs(
            vec![
                (c(0.5), c(2.0)),
                (Complex64::new(0.2, 0.1), Complex64::new(-1.5, 0.4)),
                (Complex64::new(-0.3, 0.05), Complex64::new(3.0, 1.0)),
            ],
            Vec::new(),
        )
    }

    #[test]
    fn three_step_closed_forms() {
        let paths = PathGF::new(2, 4).unwrap();
        assert_eq!(paths.pi(1, 1), pp(&[(0, 0, 1)]));
        assert_eq!(paths.pi(1, 0), pp(&[(0, 1, 1)]));
        assert_eq!(paths.pi(1, -1), pp(&[(1, 0, 1)]));
        assert_eq!(paths.pi(2, 0), pp(&[(0, 2, 1), (1, 0, 2)]));
    }

    #[test]
    fn height_reversal_and_support() {
        let paths = PathGF::new(2, 8).unwrap();
        for n in 0..=8_usize {
            for m in -(n as i64 + 2)..=(n as i64 + 2) {
                let direct = paths.pi(n, m);
                if m.unsigned_abs() as usize > n {
                    assert!(direct.is_zero(), "pi_{m}({n}) should vanish");
                }
                assert_eq!(direct, paths.pi(n, -m).mul_weight(-m, 0));
            }
        }
    }

    #[test]
    fn rising_walks_respect_reachability() {
        for p in [3_usize, 4] {
            let paths = PathGF::new(p, 7).unwrap();
            assert_eq!(
                paths.pi_p(p - 1, -(p as i64) + 1),
                pp(&[(p as i64 - 1, 0, 1)])
            );
            for n in 0..=7_usize {
                for (m, poly) in paths.rising[n].iter() {
                    let spread = n as i64 * (p as i64 - 1) - m;
                    assert_eq!(spread.rem_euclid(p as i64), 0, "end height {m} at length {n}");
                    assert!(!poly.is_zero());
                }
            }
        }
        let paths = PathGF::new(3, 3).unwrap();
        assert_eq!(paths.pi_p(2, 1), pp(&[(1, 0, 2)]));
    }

    #[test]
    fn convolution_and_reflection_identities_are_exact() {
        let paths = PathGF::new(2, 8).unwrap();
        check_path_convolution(&paths, 8, 3).assert_pass();
        check_path_reflection(&paths, 8).assert_pass();
    }

    #[test]
    fn reflection_detects_a_wrong_table() {
        let paths = PathGF::new(2, 4).unwrap();
        let mut broken = paths.clone();
        let poly = broken.plus[4].get_mut(&0).unwrap();
        *poly = poly.add(&PathPoly::one());
        let report = check_path_reflection(&broken, 4);
        assert!(!report.is_pass());
    }

    #[test]
    fn single_pair_determinant_values() {
        let dps = synthetic_single();
        assert!((h_det(&dps, 0) - c(1.5)).norm() < 1e-14);
        assert!((h_det(&dps, 1) - c(3.75)).norm() < 1e-14);
        assert!(h_det(&dps, -1).norm() < 1e-14);
        let r1 = r_n_det(&dps, c(1.0), 1).unwrap();
        assert!((r1 - c(0.84)).norm() < 1e-13, "got {r1}");
    }

    #[test]
    fn single_pair_normalized_form_is_geometric() {
        let dps = synthetic_single();
        for n in 0..12_i64 {
            let expected = 1.0 - 0.25_f64.powi(n as i32 + 1);
            let got = h_normalized(&dps, n).unwrap();
            assert!((got - c(expected)).norm() < 1e-14, "n = {n}: {got} vs {expected}");
        }
    }

    #[test]
    fn one_point_values_decay_at_the_ratio_rate() {
        let dps = synthetic_single();
        let mut gaps = Vec::new();
        for n in 4..=12_i64 {
            let v = r_n_det(&dps, c(1.0), n).unwrap();
            gaps.push((v - c(1.0)).norm());
        }
        for w in gaps.windows(2) {
            let ratio = w[1] / w[0];
            assert!((ratio - 0.25).abs() < 2e-2, "decay ratio {ratio}");
        }
    }

    #[test]
    fn prefactor_identity_holds_on_arbitrary_pairs() {
        let dps = synthetic_triple();
        check_h_prefactor(&dps, 10, 1e-10).assert_pass();
        for n in 1..=4_i64 {
            let via_h = h_det(&dps, n - 1) * h_det(&dps, n + 1)
                / (h_det(&dps, n) * h_det(&dps, n));
            let via_normalized = r_n_det(&dps, c(1.0), n).unwrap();
            assert!((via_h - via_normalized).norm() < 1e-10 * via_h.norm());
        }
    }

    #[test]
    fn form_agreement_fails_on_arbitrary_pairs() {
        let report = check_h_normalized_forms(&synthetic_triple(), 4, 1e-8);
        assert!(!report.is_pass(), "arbitrary pairs must not pass the double-point certificate");
    }

    #[test]
    fn coincident_coordinates_are_rejected() {
        let dps = DoublePoints::from_pairs(vec![(c(0.5), c(2.0)), (c(2.0), c(3.0))], Vec::new());
        assert!(matches!(h_normalized(&dps, 0), Err(Error::Degenerate(_))));
        assert!(matches!(r_n_det(&dps, c(1.0), 0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn general_map_instance_solves_and_routes_agree() {
        let mut g = vec![0.0; 4];
        g[2] = 0.04;
        g[3] = 0.02;
        let gm = general_map_char(&g).unwrap();
        let paths = PathGF::new(2, 4).unwrap();
        let up: f64 =
            (1..=4).map(|k| g[k - 1] * paths.pi(k - 1, 1).eval(gm.r, gm.s)).sum();
        let level: f64 =
            (1..=4).map(|k| g[k - 1] * paths.pi(k - 1, 0).eval(gm.r, gm.s)).sum();
        assert!((gm.r * (1.0 - up) - 1.0).abs() < 1e-12);
        assert!((gm.s - level).abs() < 1e-12);
        check_b_forms(&gm, 1e-12).assert_pass();
        assert_eq!(gm.roots.len(), 2);
        for z in &gm.roots {
            assert!(z.norm() < 1.0);
        }
        let far = r_i_general(&gm, 20).unwrap();
        assert!((far - c(gm.r)).norm() < 1e-8);
        let near = r_i_general(&gm, 1).unwrap();
        assert!(near.im.abs() < 1e-12 && near.re > 0.0 && near.re < gm.r);
    }

    fn synthetic_constellation(p: usize, ell: usize, r: f64, x: &[f64]) -> DoublePoints {
        let inv_p = 1.0 / p as f64;
        let omega = Complex64::from_polar(1.0, 2.0 * PI / p as f64);
        let mut pairs = Vec::new();
        for &xa in x {
            let xi: f64 = (1..p as i32).map(|k| xa.powi(k)).sum();
            let chi: f64 = (1..p as i32).map(|k| xa.powi(-k)).sum();
            let w = c((r / chi).powf(inv_p));
            let wb = c((r / xi).powf(inv_p));
            for s in 0..p as i32 {
                pairs.push((w * omega.powi(s), wb * omega.powi(s)));
            }
        }
        DoublePoints::from_pairs(pairs, Vec::new())
    }

    #[test]
    fn synthetic_constellation_routes_and_factorization() {
        let r = c(1.05);
        let dps = synthetic_constellation(4, 1, 1.05, &[0.3, 0.1]);
        check_orbit_closure(&dps, 4, 1e-12).assert_pass();
        let cd = constellation_factor(4, 1, &dps, r, 1e-10).unwrap();
        assert_eq!(cd.n0, 2);
        assert!(u_i(&cd, 0).norm() < 1e-12, "u_0 vanishes identically");
        check_pair_reconstruction(&cd, 1e-12).assert_pass();
        check_factor_routes(&cd, 6, 1e-11).assert_pass();
        check_factorization(&cd, &dps, 6, 1e-10).assert_pass();
        check_representative_invariance(&cd, &dps, 6, 1e-10).assert_pass();
        for i in 1..=4_i64 {
            let u_route = r_i_constellation(&cd, i).unwrap();
            let v_route = r_i_constellation_v(&cd, i).unwrap();
            let e_route = r_i_constellation_expansion(&cd, i).unwrap();
            let full_route = r_n_det(&dps, r, i).unwrap();
            assert!((v_route - full_route).norm() < 1e-10 * full_route.norm());
            assert!((u_route - e_route).norm() < 1e-10 * u_route.norm());
        }
    }

    #[test]
    fn orbit_identification_rejects_a_broken_set() {
        let mut dps = synthetic_constellation(4, 1, 1.05, &[0.3, 0.1]);
        dps.pairs[3].0 *= 1.001;
        assert!(matches!(
            constellation_factor(4, 1, &dps, c(1.05), 1e-10),
            Err(Error::Pairing(_))
        ));
    }

    #[test]
    fn constellation_limit_fixed_point_solves() {
        let r = constellation_r(4, 1, &[0.03]).unwrap();
        assert!((r * (1.0 - 3.0 * 0.03 * r * r) - 1.0).abs() < 1e-12);
        let r32 = constellation_r(3, 2, &[0.04, 0.002]).unwrap();
        let residual = r32 * (1.0 - 2.0 * 0.04 * r32 - 10.0 * 0.002 * r32.powi(3)) - 1.0;
        assert!(residual.abs() < 1e-12, "residual {residual}");
    }

    #[test]
    fn csv_table_is_deterministic() {
        let rows = vec![
            RComparison { n: 1, det_value: 0.84, series_value: 0.8400000001 },
            RComparison { n: 2, det_value: 0.96, series_value: 0.96 },
        ];
        let a = r_comparison_csv(&rows);
        let b = r_comparison_csv(&rows);
        assert_eq!(a, b);
        assert!(a.starts_with("n,r_n_det,r_n_series_eval,abs_diff\n"));
        assert_eq!(a.lines().count(), 3);
    }
}
