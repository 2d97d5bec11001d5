//! The spectral curve attached to the mobile recursions: the limit system
//! for the band coefficients, its numeric refinement, the bivariate curve
//! polynomial, and the double points feeding the determinant formulas.
//!
//! Invariants maintained here:
//! - the series solution of the limit system equals the stabilized band
//!   limits of the full recursion solver, coefficient by coefficient;
//! - numeric curve data always carries a residual below `1e-12`, refined by
//!   Newton from a series-evaluated seed, never from an arbitrary guess;
//! - double points come in pairs `(w_a, wbar_a)` with `|w_a| < |wbar_a|`,
//!   ordered deterministically, and every pair is verified against the
//!   parametrization, not just against the polynomial that produced it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Zero;

use crate::coupling::{CouplingSpec, NumericCouplings, ScalingMode, WeightValue};
use crate::error::{Error, Result};
use crate::laurent::{Coeff, Laurent};
use crate::precision;
use crate::precision::DdComplex;
use crate::report::Report;
use crate::series::{rat, rat_int, TruncatedSeries};

/// Truncated-series solution of the limit system: the stabilized deep-band
/// coefficients `alpha_j`, `beta_j` and the row limit `R` of the recursion.
#[derive(Debug, Clone)]
pub struct CurveSeries {
    /// `alphas[j]` multiplies `z^{-j}` in `X(z)`, `j = 0..q-1`.
    pub alphas: Vec<TruncatedSeries>,
    /// `betas[j]` multiplies `z^j` in `Y(z)`, `j = 0..p-1`.
    pub betas: Vec<TruncatedSeries>,
    /// Common limit of the diagonal recursion coefficients.
    pub r: TruncatedSeries,
}

fn limit_sweep(
    g: &[TruncatedSeries],
    gt: &[TruncatedSeries],
    one: &TruncatedSeries,
    alphas: &mut [TruncatedSeries],
    betas: &mut [TruncatedSeries],
    r: &mut TruncatedSeries,
) -> Result<()> {
    let q = g.len();
    let p = gt.len();
    let zero = one.zero_like();

    let mut y_coeffs = Vec::with_capacity(p + 1);
    y_coeffs.push(r.clone());
    y_coeffs.extend(betas.iter().cloned());
    let y = Laurent::from_coeffs(-1, y_coeffs, &zero);
    let mut ypow = Vec::with_capacity(q);
    ypow.push(Laurent::monomial(0, one.clone()));
    for k in 1..q {
        ypow.push(ypow[k - 1].mul(&y));
    }
    for j in 0..q {
        let mut acc = zero.clone();
        for (k, gk) in g.iter().enumerate().skip(j) {
            if !gk.is_zero() {
                acc = acc.add_ref(&gk.mul_ref(&ypow[k].coeff(-(j as i64))));
            }
        }
        alphas[j] = acc;
    }

    let mut x_coeffs: Vec<TruncatedSeries> = alphas.iter().rev().cloned().collect();
    x_coeffs.push(one.clone());
    let x = Laurent::from_coeffs(-(q as i64 - 1), x_coeffs, &zero);
    let mut xpow = Vec::with_capacity(p);
    xpow.push(Laurent::monomial(0, one.clone()));
    for k in 1..p {
        xpow.push(xpow[k - 1].mul(&x));
    }
    for j in 0..p {
        let mut acc = zero.clone();
        for (k, gtk) in gt.iter().enumerate().skip(j) {
            if !gtk.is_zero() {
                acc = acc.add_ref(&gtk.mul_ref(&xpow[k].coeff(j as i64)));
            }
        }
        betas[j] = acc;
    }

    let mut new_r = one.clone();
    for j in 1..p.min(q) {
        new_r = new_r.add_ref(&alphas[j].mul_ref(&betas[j]).mul_int(j as i64));
    }
    *r = new_r;
    Ok(())
}

/// Solves the limit system order by order as exact truncated series.
///
/// The unique formal-series branch is selected by the seed `R = 1`,
/// `alpha = beta = 0`; each sweep fixes at least one further total degree, so
/// two identical consecutive sweeps certify the fixed point at the requested
/// order.
pub fn solve_limit_system(spec: &CouplingSpec, order: u32) -> Result<CurveSeries> {
    if spec.mode() != ScalingMode::Plain {
        return Err(Error::InvalidConfig(
            "the limit system is solved in plain scaling mode".into(),
        ));
    }
    for w in spec.white_values().iter().chain(spec.black_values()) {
        if let WeightValue::Num(c) = w {
            if !c.is_zero() {
                return Err(Error::InvalidConfig(
                    "the limit system needs formal weights; substitute numbers afterwards".into(),
                ));
            }
        }
    }
    let q = spec.q();
    let p = spec.p();
    let one = TruncatedSeries::one(spec.vars(), order);
    let g: Vec<TruncatedSeries> = (1..=q).map(|k| spec.white_series(k, order)).collect();
    let gt: Vec<TruncatedSeries> = (1..=p).map(|k| spec.black_series(k, order)).collect();

    let mut alphas = vec![one.zero_like(); q];
    let mut betas = vec![one.zero_like(); p];
    let mut r = one.clone();
    for _ in 0..=order + 2 {
        let prev = (alphas.clone(), betas.to_vec(), r.clone());
        limit_sweep(&g, &gt, &one, &mut alphas, &mut betas, &mut r)?;
        if prev.0 == alphas && prev.1 == betas && prev.2 == r {
            return Ok(CurveSeries { alphas, betas, r });
        }
    }
    Err(Error::NonConvergence(format!(
        "limit system did not stabilize within {} sweeps",
        order + 3
    )))
}

/// Numeric curve data at a concrete weight assignment.
#[derive(Debug, Clone)]
pub struct CurveNumeric {
    couplings: NumericCouplings,
    /// Numeric values of the `alpha_j`.
    pub alphas: Vec<Complex64>,
    /// Numeric values of the `beta_j`.
    pub betas: Vec<Complex64>,
    /// Numeric value of the limit `R`.
    pub r: Complex64,
}

impl CurveNumeric {
    /// The weights this data was solved at.
    pub fn couplings(&self) -> &NumericCouplings {
        &self.couplings
    }

    /// Maximal white degree.
    pub fn q(&self) -> usize {
        self.couplings.q()
    }

    /// Maximal black degree.
    pub fn p(&self) -> usize {
        self.couplings.p()
    }

    /// The Laurent polynomial `X(z) = z + sum_j alphas[j] z^-j`.
    pub fn x_poly(&self) -> Laurent<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        let mut coeffs: Vec<Complex64> = self.alphas.iter().rev().copied().collect();
        coeffs.push(Complex64::new(1.0, 0.0));
        Laurent::from_coeffs(-(self.q() as i64 - 1), coeffs, &zero)
    }

    /// The Laurent polynomial `Y(z) = R/z + sum_j betas[j] z^j`.
    pub fn y_poly(&self) -> Laurent<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        let mut coeffs = vec![self.r];
        coeffs.extend(self.betas.iter().copied());
        Laurent::from_coeffs(-1, coeffs, &zero)
    }

    /// Maximum norm of the limit-system equations at this data; any
    /// non-finite entry counts as infinite, never as small.
    pub fn residual(&self) -> f64 {
        inf_norm(&system_residual(&self.couplings, &self.alphas, &self.betas, self.r))
    }
}

fn inf_norm(values: &[Complex64]) -> f64 {
    let mut worst = 0.0f64;
    for z in values {
        let n = z.norm();
        if !n.is_finite() {
            return f64::INFINITY;
        }
        worst = worst.max(n);
    }
    worst
}

fn system_residual(
    couplings: &NumericCouplings,
    alphas: &[Complex64],
    betas: &[Complex64],
    r: Complex64,
) -> Vec<Complex64> {
    let q = couplings.q();
    let p = couplings.p();
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);

    let mut y_coeffs = vec![r];
    y_coeffs.extend(betas.iter().copied());
    let y = Laurent::from_coeffs(-1, y_coeffs, &zero);
    let mut x_coeffs: Vec<Complex64> = alphas.iter().rev().copied().collect();
    x_coeffs.push(one);
    let x = Laurent::from_coeffs(-(q as i64 - 1), x_coeffs, &zero);

    let mut ypow = vec![Laurent::monomial(0, one)];
    for k in 1..q {
        ypow.push(ypow[k - 1].mul(&y));
    }
    let mut xpow = vec![Laurent::monomial(0, one)];
    for k in 1..p {
        xpow.push(xpow[k - 1].mul(&x));
    }

    let mut res = Vec::with_capacity(q + p + 1);
    for (j, alpha) in alphas.iter().enumerate() {
        let mut acc = -alpha;
        for k in j..q {
            acc += couplings.g[k] * ypow[k].coeff(-(j as i64));
        }
        res.push(acc);
    }
    for (j, beta) in betas.iter().enumerate() {
        let mut acc = -beta;
        for k in j..p {
            acc += couplings.gt[k] * xpow[k].coeff(j as i64);
        }
        res.push(acc);
    }
    let mut ring = one - r;
    for j in 1..p.min(q) {
        ring += alphas[j] * betas[j] * (j as f64);
    }
    res.push(ring);
    res
}

/// Evaluates a series solution at numeric weights, giving a seed for
/// [`refine_numeric`].
pub fn eval_series(
    series: &CurveSeries,
    spec: &CouplingSpec,
    values: &[f64],
) -> Result<CurveNumeric> {
    let assign: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let alphas: Vec<Complex64> =
        series.alphas.iter().map(|s| s.eval_numeric(&assign)).collect::<Result<_>>()?;
    let betas: Vec<Complex64> =
        series.betas.iter().map(|s| s.eval_numeric(&assign)).collect::<Result<_>>()?;
    let r = series.r.eval_numeric(&assign)?;
    let couplings = NumericCouplings::from_spec(spec, values)?;
    Ok(CurveNumeric { couplings, alphas, betas, r })
}

/// Newton-refines numeric curve data until the limit-system residual drops
/// below `1e-13` (hard failure above `1e-12`).
///
/// The seed must lie in the Newton basin of the series branch; seeds far from
/// it are rejected by non-convergence rather than silently converging to a
/// different branch.
pub fn refine_numeric(seed: CurveNumeric) -> Result<CurveNumeric> {
    let q = seed.q();
    let p = seed.p();
    let dim = q + p + 1;
    let mut alphas = seed.alphas.clone();
    let mut betas = seed.betas.clone();
    let mut r = seed.r;
    let couplings = seed.couplings.clone();

    let pack = |alphas: &[Complex64], betas: &[Complex64], r: Complex64| {
        let mut v = Vec::with_capacity(dim);
        v.extend_from_slice(alphas);
        v.extend_from_slice(betas);
        v.push(r);
        v
    };

    for _ in 0..60 {
        let f = system_residual(&couplings, &alphas, &betas, r);
        let res = inf_norm(&f);
        if res < 1e-13 {
            return Ok(CurveNumeric { couplings, alphas, betas, r });
        }
        let u = pack(&alphas, &betas, r);
        let mut jac = DMatrix::<Complex64>::zeros(dim, dim);
        for col in 0..dim {
            let h = 1e-7 * u[col].norm().max(1.0);
            let mut shifted = u.clone();
            shifted[col] += Complex64::new(h, 0.0);
            let fs = system_residual(
                &couplings,
                &shifted[..q],
                &shifted[q..q + p],
                shifted[dim - 1],
            );
            for row in 0..dim {
                jac[(row, col)] = (fs[row] - f[row]) / h;
            }
        }
        let rhs = DVector::from_iterator(dim, f.iter().map(|z| -z));
        let step = jac.lu().solve(&rhs).ok_or_else(|| {
            Error::NonConvergence("singular Jacobian in curve refinement".into())
        })?;
        for j in 0..q {
            alphas[j] += step[j];
        }
        for j in 0..p {
            betas[j] += step[q + j];
        }
        r += step[dim - 1];
    }
    let out = CurveNumeric { couplings, alphas, betas, r };
    let res = out.residual();
    if res < 1e-12 {
        Ok(out)
    } else {
        Err(Error::NonConvergence(format!(
            "curve refinement stalled at residual {res:.3e}"
        )))
    }
}

/// Curve data sharpened to double-double precision for the wave-function
/// algebra, whose scalar products cancel catastrophically at `f64`.
#[derive(Debug, Clone)]
pub(crate) struct CurveDd {
    pub alphas: Vec<DdComplex>,
    pub betas: Vec<DdComplex>,
    pub r: DdComplex,
}

impl CurveDd {
    /// The Laurent polynomial `X(z)` at double-double precision.
    pub fn x_poly(&self) -> Laurent<DdComplex> {
        let mut coeffs: Vec<DdComplex> = self.alphas.iter().rev().copied().collect();
        coeffs.push(DdComplex::one());
        Laurent::from_coeffs(-(self.alphas.len() as i64 - 1), coeffs, &DdComplex::zero())
    }

    /// The Laurent polynomial `Y(z)` at double-double precision.
    pub fn y_poly(&self) -> Laurent<DdComplex> {
        let mut coeffs = vec![self.r];
        coeffs.extend(self.betas.iter().copied());
        Laurent::from_coeffs(-1, coeffs, &DdComplex::zero())
    }
}

fn system_residual_dd(
    couplings: &NumericCouplings,
    alphas: &[DdComplex],
    betas: &[DdComplex],
    r: DdComplex,
) -> Vec<DdComplex> {
    let q = couplings.q();
    let p = couplings.p();
    let zero = DdComplex::zero();
    let one = DdComplex::one();
    let lift = |v: f64| DdComplex::from_c64(Complex64::new(v, 0.0));

    let mut y_coeffs = vec![r];
    y_coeffs.extend(betas.iter().copied());
    let y = Laurent::from_coeffs(-1, y_coeffs, &zero);
    let mut x_coeffs: Vec<DdComplex> = alphas.iter().rev().copied().collect();
    x_coeffs.push(one);
    let x = Laurent::from_coeffs(-(q as i64 - 1), x_coeffs, &zero);

    let mut ypow = vec![Laurent::monomial(0, one)];
    for k in 1..q {
        ypow.push(ypow[k - 1].mul(&y));
    }
    let mut xpow = vec![Laurent::monomial(0, one)];
    for k in 1..p {
        xpow.push(xpow[k - 1].mul(&x));
    }

    let mut res = Vec::with_capacity(q + p + 1);
    for (j, alpha) in alphas.iter().enumerate() {
        let mut acc = alpha.neg();
        for k in j..q {
            acc = acc.add(lift(couplings.g[k]).mul(ypow[k].coeff(-(j as i64))));
        }
        res.push(acc);
    }
    for (j, beta) in betas.iter().enumerate() {
        let mut acc = beta.neg();
        for k in j..p {
            acc = acc.add(lift(couplings.gt[k]).mul(xpow[k].coeff(j as i64)));
        }
        res.push(acc);
    }
    let mut ring = one.sub(r);
    for j in 1..p.min(q) {
        ring = ring.add(alphas[j].mul(betas[j]).mul(lift(j as f64)));
    }
    res.push(ring);
    res
}

/// Sharpens refined curve data to double-double accuracy by iterative
/// refinement: residuals in double-double, correction steps through an `f64`
/// Jacobian.
pub(crate) fn refine_dd(data: &CurveNumeric) -> Result<CurveDd> {
    let q = data.q();
    let p = data.p();
    let dim = q + p + 1;
    let couplings = data.couplings().clone();
    let mut alphas: Vec<DdComplex> =
        data.alphas.iter().map(|z| DdComplex::from_c64(*z)).collect();
    let mut betas: Vec<DdComplex> = data.betas.iter().map(|z| DdComplex::from_c64(*z)).collect();
    let mut r = DdComplex::from_c64(data.r);

    for _ in 0..8 {
        let f = system_residual_dd(&couplings, &alphas, &betas, r);
        let res = f.iter().map(|z| z.norm_hi()).fold(0.0f64, f64::max);
        if res < 1e-27 {
            return Ok(CurveDd { alphas, betas, r });
        }
        let a64: Vec<Complex64> = alphas.iter().map(|z| z.to_c64()).collect();
        let b64: Vec<Complex64> = betas.iter().map(|z| z.to_c64()).collect();
        let r64 = r.to_c64();
        let f_low = system_residual(&couplings, &a64, &b64, r64);
        let mut u = Vec::with_capacity(dim);
        u.extend_from_slice(&a64);
        u.extend_from_slice(&b64);
        u.push(r64);
        let mut jac = DMatrix::<Complex64>::zeros(dim, dim);
        for col in 0..dim {
            let h = 1e-7 * u[col].norm().max(1.0);
            let mut shifted = u.clone();
            shifted[col] += Complex64::new(h, 0.0);
            let fs = system_residual(
                &couplings,
                &shifted[..q],
                &shifted[q..q + p],
                shifted[dim - 1],
            );
            for row in 0..dim {
                jac[(row, col)] = (fs[row] - f_low[row]) / h;
            }
        }
        let rhs = DVector::from_iterator(dim, f.iter().map(|z| -z.to_c64()));
        let step = jac.lu().solve(&rhs).ok_or_else(|| {
            Error::NonConvergence("singular Jacobian in double-double refinement".into())
        })?;
        for j in 0..q {
            alphas[j] = alphas[j].add(DdComplex::from_c64(step[j]));
        }
        for j in 0..p {
            betas[j] = betas[j].add(DdComplex::from_c64(step[q + j]));
        }
        r = r.add(DdComplex::from_c64(step[dim - 1]));
    }
    let f = system_residual_dd(&couplings, &alphas, &betas, r);
    let res = f.iter().map(|z| z.norm_hi()).fold(0.0f64, f64::max);
    if res < 1e-24 {
        Ok(CurveDd { alphas, betas, r })
    } else {
        Err(Error::NonConvergence(format!(
            "double-double refinement stalled at residual {res:.3e}"
        )))
    }
}

/// Newton-polishes a verified double-point pair to double-double accuracy.
pub(crate) fn polish_pair_dd(
    curve: &CurveDd,
    w0: Complex64,
    wb0: Complex64,
) -> (DdComplex, DdComplex) {
    let x = curve.x_poly();
    let y = curve.y_poly();
    let xp = x.derivative();
    let yp = y.derivative();
    let mut w = DdComplex::from_c64(w0);
    let mut wb = DdComplex::from_c64(wb0);
    for _ in 0..10 {
        let f1 = x.eval(w).sub(x.eval(wb));
        let f2 = y.eval(w).sub(y.eval(wb));
        let scale = x.eval(w).norm_hi().max(y.eval(w).norm_hi()).max(1.0);
        if f1.norm_hi().max(f2.norm_hi()) < 1e-30 * scale {
            break;
        }
        let a = xp.eval(w);
        let b = xp.eval(wb).neg();
        let c = yp.eval(w);
        let d = yp.eval(wb).neg();
        let det = a.mul(d).sub(b.mul(c));
        if det.norm_hi() < 1e-300 {
            break;
        }
        let dw = f1.mul(d).sub(b.mul(f2)).div(det);
        let dwb = a.mul(f2).sub(f1.mul(c)).div(det);
        w = w.sub(dw);
        wb = wb.sub(dwb);
    }
    (w, wb)
}

fn resultant_matrix<T: Coeff>(alphas: &[T], betas: &[T], r: &T, x: &T, y: &T) -> Vec<Vec<T>> {
    let q = alphas.len();
    let p = betas.len();
    let n = p + q;
    let zero = r.zero_like();
    let mut upper = Vec::with_capacity(q + 1);
    upper.push(r.one_like());
    upper.push(alphas[0].sub_ref(x));
    upper.extend(alphas.iter().skip(1).cloned());
    let mut lower = Vec::with_capacity(p + 1);
    lower.extend(betas.iter().skip(1).rev().cloned());
    lower.push(betas[0].sub_ref(y));
    lower.push(r.clone());
    let mut m = vec![vec![zero; n]; n];
    for i in 0..p {
        for (k, c) in upper.iter().enumerate() {
            m[i][i + k] = c.clone();
        }
    }
    for i in 0..q {
        for (k, c) in lower.iter().enumerate() {
            m[p + i][i + k] = c.clone();
        }
    }
    m
}

fn det_ring<T: Coeff>(m: &[Vec<T>], proto: &T) -> T {
    let n = m.len();
    if n == 0 {
        return proto.one_like();
    }
    let full: u32 = (1u32 << n) - 1;
    let mut table: Vec<Option<T>> = vec![None; 1 << n];
    table[0] = Some(proto.one_like());
    for mask in 1..=full {
        let row = (mask.count_ones() - 1) as usize;
        let mut acc = proto.zero_like();
        let mut sign = if row % 2 == 0 { 1i64 } else { -1i64 };
        for col in 0..n {
            if mask & (1 << col) != 0 {
                let sub = table[(mask ^ (1 << col)) as usize]
                    .as_ref()
                    .expect("smaller masks filled first")
                    .clone();
                if !m[row][col].is_zero() {
                    let term = m[row][col].mul_ref(&sub);
                    acc = if sign > 0 { acc.add_ref(&term) } else { acc.sub_ref(&term) };
                }
                sign = -sign;
            }
        }
        table[mask as usize] = Some(acc);
    }
    table[full as usize].take().expect("full mask filled")
}

pub(crate) fn newton_interp<T: Coeff>(values: &[T], div_int: &dyn Fn(&T, i64) -> T) -> Vec<T> {
    let n = values.len();
    let mut dd: Vec<T> = values.to_vec();
    for k in 1..n {
        for i in (k..n).rev() {
            let num = dd[i].sub_ref(&dd[i - 1]);
            dd[i] = div_int(&num, k as i64);
        }
    }
    let zero = values[0].zero_like();
    let mut poly = vec![dd[n - 1].clone()];
    for i in (0..n - 1).rev() {
        let mut next = vec![zero.clone(); poly.len() + 1];
        for (k, c) in poly.iter().enumerate() {
            next[k + 1] = next[k + 1].add_ref(c);
            next[k] = next[k].sub_ref(&c.mul_int(i as i64));
        }
        next[0] = next[0].add_ref(&dd[i]);
        poly = next;
    }
    poly
}

fn interp_grid<T: Coeff>(vals: &[Vec<T>], div_int: &dyn Fn(&T, i64) -> T) -> Vec<Vec<T>> {
    let nx = vals.len();
    let ny = vals[0].len();
    let mut by_t: Vec<Vec<T>> = Vec::with_capacity(ny);
    for t in 0..ny {
        let column: Vec<T> = (0..nx).map(|s| vals[s][t].clone()).collect();
        by_t.push(newton_interp(&column, div_int));
    }
    let mut out = Vec::with_capacity(nx);
    for i in 0..nx {
        let row: Vec<T> = (0..ny).map(|t| by_t[t][i].clone()).collect();
        out.push(newton_interp(&row, div_int));
    }
    out
}

/// The unnormalized curve determinant as exact series: entry `[i][j]` is the
/// coefficient of `x^i y^j` and equals `alpha_{q-1}` times the normalized
/// curve coefficient.
///
/// The normalized leading coefficients are ratios of weights, not power
/// series, so the series route keeps the overall `alpha_{q-1}` factor and
/// checks divide it out termwise where needed.
pub fn curve_determinant_series(data: &CurveSeries) -> Result<Vec<Vec<TruncatedSeries>>> {
    let p = data.betas.len();
    let q = data.alphas.len();
    let proto = data.r.clone();
    let mut vals: Vec<Vec<TruncatedSeries>> = Vec::with_capacity(p + 1);
    for s in 0..=p as i64 {
        let mut row = Vec::with_capacity(q + 1);
        for t in 0..=q as i64 {
            let x = TruncatedSeries::constant(proto.vars(), proto.order(), rat_int(s));
            let y = TruncatedSeries::constant(proto.vars(), proto.order(), rat_int(t));
            let m = resultant_matrix(&data.alphas, &data.betas, &data.r, &x, &y);
            row.push(det_ring(&m, &proto));
        }
        vals.push(row);
    }
    Ok(interp_grid(&vals, &|c, k| c.scale(&rat(1, k))))
}

/// The normalized curve polynomial at numeric data: entry `[i][j]` is the
/// coefficient of `x^i y^j`, scaled so the `y^q` coefficient is one.
pub fn curve_polynomial(data: &CurveNumeric) -> Result<Vec<Vec<Complex64>>> {
    let p = data.p();
    let q = data.q();
    let lead = data.alphas[q - 1];
    if lead.norm() < 1e-100 {
        return Err(Error::Degenerate(
            "alpha_{q-1} vanishes; the curve polynomial is not defined".into(),
        ));
    }
    let mut vals: Vec<Vec<Complex64>> = Vec::with_capacity(p + 1);
    for s in 0..=p {
        let mut row = Vec::with_capacity(q + 1);
        for t in 0..=q {
            let x = Complex64::new(s as f64, 0.0);
            let y = Complex64::new(t as f64, 0.0);
            let m = resultant_matrix(&data.alphas, &data.betas, &data.r, &x, &y);
            row.push(precision::det(&m));
        }
        vals.push(row);
    }
    let grid = interp_grid(&vals, &|c, k| c / k as f64);
    Ok(grid.into_iter().map(|row| row.into_iter().map(|c| c / lead).collect()).collect())
}

/// Evaluates `sum_ij e[i][j] x^i y^j`.
pub fn curve_eval(e: &[Vec<Complex64>], x: Complex64, y: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for row in e.iter().rev() {
        let mut inner = Complex64::new(0.0, 0.0);
        for c in row.iter().rev() {
            inner = inner * y + c;
        }
        acc = acc * x + inner;
    }
    acc
}

fn curve_eval_dy(e: &[Vec<Complex64>], x: Complex64, y: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for row in e.iter().rev() {
        let mut inner = Complex64::new(0.0, 0.0);
        for (j, c) in row.iter().enumerate().skip(1).rev() {
            inner = inner * y + c * (j as f64);
        }
        acc = acc * x + inner;
    }
    acc
}

/// Tolerances for double-point extraction.
#[derive(Debug, Clone, Copy)]
pub struct PairingTolerances {
    /// Greedy matching acceptance on `|X| + |Y|` value distance.
    pub accept: f64,
    /// Post-polish verification of pair value agreement.
    pub verify: f64,
    /// Relative separation below which `|w| = |wbar|` is declared degenerate.
    pub genericity: f64,
}

impl Default for PairingTolerances {
    fn default() -> PairingTolerances {
        PairingTolerances { accept: 1e-6, verify: 1e-10, genericity: 1e-6 }
    }
}

/// Double points of the parametrized curve, as verified ordered pairs.
#[derive(Debug, Clone)]
pub struct DoublePoints {
    /// `(w_a, wbar_a)` with `|w_a| < |wbar_a|`.
    pub pairs: Vec<(Complex64, Complex64)>,
    /// `X_a = w_a / wbar_a`, all inside the unit disk.
    pub ratios: Vec<Complex64>,
    /// The `q` zeros of `z^q X'(z)`.
    pub branch_points: Vec<Complex64>,
    pairs_dd: Vec<(DdComplex, DdComplex)>,
    delta: Laurent<Complex64>,
    delta_bar: Laurent<Complex64>,
}

impl DoublePoints {
    /// Builds the derived quantities from explicit pairs.
    pub fn from_pairs(
        pairs: Vec<(Complex64, Complex64)>,
        branch_points: Vec<Complex64>,
    ) -> DoublePoints {
        let ratios = pairs.iter().map(|(w, wb)| w / wb).collect();
        let small: Vec<Complex64> = pairs.iter().map(|p| p.0).collect();
        let large: Vec<Complex64> = pairs.iter().map(|p| p.1).collect();
        let pairs_dd = pairs
            .iter()
            .map(|&(w, wb)| (DdComplex::from_c64(w), DdComplex::from_c64(wb)))
            .collect();
        DoublePoints {
            pairs,
            ratios,
            branch_points,
            pairs_dd,
            delta: Laurent::from_roots(&small),
            delta_bar: Laurent::from_roots(&large),
        }
    }

    /// Builds from double-double pairs, rounding for the `f64` views.
    pub(crate) fn from_pairs_dd(
        pairs_dd: Vec<(DdComplex, DdComplex)>,
        branch_points: Vec<Complex64>,
    ) -> DoublePoints {
        let pairs: Vec<(Complex64, Complex64)> =
            pairs_dd.iter().map(|&(w, wb)| (w.to_c64(), wb.to_c64())).collect();
        let mut out = DoublePoints::from_pairs(pairs, branch_points);
        out.pairs_dd = pairs_dd;
        out
    }

    /// The pairs sharpened to double-double precision.
    pub(crate) fn pairs_dd(&self) -> &[(DdComplex, DdComplex)] {
        &self.pairs_dd
    }

    /// Number of double points.
    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    /// `Delta(z) = prod_a (z - w_a)`.
    pub fn delta_eval(&self, z: Complex64) -> Complex64 {
        self.delta.eval(z)
    }

    /// `DeltaBar(z) = prod_a (z - wbar_a)`.
    pub fn delta_bar_eval(&self, z: Complex64) -> Complex64 {
        self.delta_bar.eval(z)
    }

    /// Derivative of `Delta` at `z`.
    pub fn delta_prime_eval(&self, z: Complex64) -> Complex64 {
        self.delta.derivative().eval(z)
    }

    /// Derivative of `DeltaBar` at `z`.
    pub fn delta_bar_prime_eval(&self, z: Complex64) -> Complex64 {
        self.delta_bar.derivative().eval(z)
    }
}

fn real_coeffs_in_range(
    f: &Laurent<Complex64>,
    lo: i64,
    hi: i64,
    label: &str,
) -> Result<Vec<f64>> {
    let max = f.max_coeff().max(1e-300);
    let mut out = vec![0.0; (hi - lo + 1) as usize];
    for (k, c) in f.iter() {
        if k < lo || k > hi {
            if c.norm() > 1e-7 * max {
                return Err(Error::RootCount(format!(
                    "{label}: unexpected coefficient {c:.3e} at exponent {k}"
                )));
            }
            continue;
        }
        if c.im.abs() > 1e-7 * max {
            return Err(Error::RootCount(format!(
                "{label}: non-real coefficient {c:.3e} at exponent {k}"
            )));
        }
        out[(k - lo) as usize] = c.re;
    }
    Ok(out)
}

fn polish_pair(
    x: &Laurent<Complex64>,
    y: &Laurent<Complex64>,
    mut w: Complex64,
    mut wb: Complex64,
) -> (Complex64, Complex64) {
    let xp = x.derivative();
    let yp = y.derivative();
    for _ in 0..40 {
        let f1 = x.eval(w) - x.eval(wb);
        let f2 = y.eval(w) - y.eval(wb);
        let scale = x.eval(w).norm().max(y.eval(w).norm()).max(1.0);
        if f1.norm().max(f2.norm()) < 1e-14 * scale {
            break;
        }
        let a = xp.eval(w);
        let b = -xp.eval(wb);
        let c = yp.eval(w);
        let d = -yp.eval(wb);
        let det = a * d - b * c;
        if det.norm() < 1e-300 {
            break;
        }
        let dw = (f1 * d - b * f2) / det;
        let dwb = (a * f2 - f1 * c) / det;
        w -= dw;
        wb -= dwb;
    }
    (w, wb)
}

/// Extracts the double points of the curve.
///
/// Candidate locations are the roots of `z^{N+q-1} E_y(X(z), Y(z))` with the
/// `q` zeros of `z^q X'(z)` removed; survivors are greedily paired by value
/// agreement of `(X, Y)`, jointly Newton-polished, verified, ordered inside
/// out, and checked for genericity.
pub fn double_points(
    data: &CurveNumeric,
    e: &[Vec<Complex64>],
    tol: &PairingTolerances,
) -> Result<DoublePoints> {
    let p = data.p();
    let q = data.q();
    let n_expected = (p - 1) * (q - 1) - 1;
    let x = data.x_poly();
    let y = data.y_poly();

    let xprime_poly = {
        let shifted = x.derivative().shift(q as i64);
        real_coeffs_in_range(&shifted, 0, q as i64, "branch point polynomial")?
    };
    let branch_points = precision::poly_roots_real(&xprime_poly)?;
    if branch_points.len() != q {
        return Err(Error::RootCount(format!(
            "expected {q} branch points, found {}",
            branch_points.len()
        )));
    }
    if n_expected == 0 {
        return Ok(DoublePoints::from_pairs(Vec::new(), branch_points));
    }

    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut xpow = vec![Laurent::monomial(0, one)];
    for i in 1..=p {
        xpow.push(xpow[i - 1].mul(&x));
    }
    let mut ypow = vec![Laurent::monomial(0, one)];
    for j in 1..q {
        ypow.push(ypow[j - 1].mul(&y));
    }
    let mut ey_on_curve = Laurent::zero(&zero);
    for (i, row) in e.iter().enumerate() {
        for (j, c) in row.iter().enumerate().skip(1) {
            let coeff = c * (j as f64);
            if coeff.norm() == 0.0 {
                continue;
            }
            ey_on_curve = ey_on_curve.add(&xpow[i].mul(&ypow[j - 1]).scale(&coeff));
        }
    }
    let shifted = ey_on_curve.shift((n_expected + q) as i64 - 1);
    let degree = 2 * n_expected + q;
    let coeffs = real_coeffs_in_range(&shifted, 0, degree as i64, "double point polynomial")?;
    if coeffs[degree].abs() < 1e-8 * coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs())) {
        return Err(Error::RootCount(
            "double point polynomial has deficient degree".into(),
        ));
    }
    let all_roots = precision::poly_roots_real(&coeffs)?;

    let mut remaining: Vec<Complex64> = all_roots;
    for b in &branch_points {
        let (idx, dist) = remaining
            .iter()
            .enumerate()
            .map(|(i, z)| (i, (z - b).norm()))
            .min_by(|l, r| l.1.partial_cmp(&r.1).unwrap())
            .ok_or_else(|| Error::RootCount("ran out of candidate roots".into()))?;
        if dist > tol.accept * b.norm().max(1.0) {
            return Err(Error::RootCount(format!(
                "branch point {b} not found among curve roots (closest at distance {dist:.3e})"
            )));
        }
        remaining.swap_remove(idx);
    }
    if remaining.len() != 2 * n_expected {
        return Err(Error::RootCount(format!(
            "expected {} double point preimages, found {}",
            2 * n_expected,
            remaining.len()
        )));
    }

    let values: Vec<(Complex64, Complex64)> =
        remaining.iter().map(|&z| (x.eval(z), y.eval(z))).collect();
    let mut used = vec![false; remaining.len()];
    let mut pairs = Vec::with_capacity(n_expected);
    for _ in 0..n_expected {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..remaining.len() {
            if used[i] {
                continue;
            }
            for j in i + 1..remaining.len() {
                if used[j] {
                    continue;
                }
                let scale = values[i].0.norm().max(values[i].1.norm()).max(1.0);
                let d = ((values[i].0 - values[j].0).norm()
                    + (values[i].1 - values[j].1).norm())
                    / scale;
                if best.map_or(true, |(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        let (i, j, d) = best.ok_or_else(|| Error::Pairing("no unpaired roots left".into()))?;
        if d > tol.accept {
            return Err(Error::Pairing(format!(
                "closest remaining value distance {d:.3e} exceeds acceptance {:.3e}",
                tol.accept
            )));
        }
        used[i] = true;
        used[j] = true;
        let (w, wb) = polish_pair(&x, &y, remaining[i], remaining[j]);
        if (w - wb).norm() < 1e-9 * (w.norm() + wb.norm()) {
            return Err(Error::Pairing("pair collapsed to a coincident point".into()));
        }
        let scale = x.eval(w).norm().max(y.eval(w).norm()).max(1.0);
        let err = (x.eval(w) - x.eval(wb)).norm().max((y.eval(w) - y.eval(wb)).norm());
        if err > tol.verify * scale {
            return Err(Error::Pairing(format!(
                "pair verification failed: value agreement {err:.3e} (allowed {:.3e})",
                tol.verify * scale
            )));
        }
        let (inner, outer) = if w.norm() <= wb.norm() { (w, wb) } else { (wb, w) };
        if (outer.norm() - inner.norm()).abs() < tol.genericity * outer.norm() {
            return Err(Error::Degenerate(format!(
                "double point pair with |w| = |wbar| within {:.1e}: {inner} vs {outer}",
                tol.genericity
            )));
        }
        pairs.push((inner, outer));
    }
    pairs.sort_by(|a, b| {
        a.0.re.partial_cmp(&b.0.re).unwrap().then(a.0.im.partial_cmp(&b.0.im).unwrap())
    });
    let curve_dd = refine_dd(data)?;
    let pairs_dd: Vec<(DdComplex, DdComplex)> =
        pairs.iter().map(|&(w, wb)| polish_pair_dd(&curve_dd, w, wb)).collect();
    Ok(DoublePoints::from_pairs_dd(pairs_dd, branch_points))
}

/// Runs the whole numeric pipeline at explicit weights: exact limit-system
/// solve to `order`, series evaluation, Newton refinement, curve polynomial,
/// and double-point extraction.
pub fn spectral_data(
    spec: &CouplingSpec,
    values: &[f64],
    order: u32,
    tol: &PairingTolerances,
) -> Result<(CurveNumeric, Vec<Vec<Complex64>>, DoublePoints)> {
    let series = solve_limit_system(spec, order)?;
    let seed = eval_series(&series, spec, values)?;
    let data = refine_numeric(seed)?;
    let e = curve_polynomial(&data)?;
    let dps = double_points(&data, &e, tol)?;
    Ok((data, e, dps))
}

/// Checks that the curve polynomial vanishes along the parametrization at
/// sample points off the coefficient grid.
pub fn check_on_curve(data: &CurveNumeric, e: &[Vec<Complex64>], tol: f64) -> Report {
    let mut report = Report::new("curve-vanishes-on-parametrization");
    let x = data.x_poly();
    let y = data.y_poly();
    let samples = data.p() + data.q() + 3;
    for s in 0..samples {
        let angle = 2.0 * std::f64::consts::PI * (s as f64 + 0.31) / samples as f64;
        let z = Complex64::from_polar(1.17, angle);
        let val = curve_eval(e, x.eval(z), y.eval(z));
        let scale = e
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max)
            .max(1.0)
            * x.eval(z).norm().max(1.0).powi(data.p() as i32);
        if val.norm() > tol * scale {
            report.violation(s, 0, format!("|E(X(z),Y(z))| = {:.3e} at sample {s}", val.norm()));
        }
    }
    report
}

/// Checks the boundary coefficients of the normalized curve polynomial
/// against their closed forms in the weights.
///
/// The closed forms come from expanding the resultant near its two poles;
/// every coefficient with `i = p-1, p` or `j = q-1, q`, plus the corner at
/// `(p-2, q-2)`, is an explicit rational function of the weights alone.
pub fn check_curve_boundary(data: &CurveNumeric, e: &[Vec<Complex64>], tol: f64) -> Report {
    let mut report = Report::new("curve-boundary-coefficients");
    let p = data.p();
    let q = data.q();
    let g = &data.couplings().g;
    let gt = &data.couplings().gt;
    let gq = g[q - 1];
    let gw = |k: usize| if (1..=q).contains(&k) { g[k - 1] } else { 0.0 };
    let gb = |k: usize| if (1..=p).contains(&k) { gt[k - 1] } else { 0.0 };
    let kron = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut expect = |i: usize, j: usize, want: f64, label: &str| {
        let got = e[i][j];
        if (got - Complex64::new(want, 0.0)).norm() > tol * want.abs().max(1.0) {
            report.violation(i, j, format!("{label}: got {got}, want {want}"));
        }
    };
    for i in 0..=p {
        expect(i, q, kron(i, 0), "top y row");
    }
    for j in 0..=q {
        if j != q {
            expect(p, j, gb(p) / gq * kron(j, 0), "top x column");
        }
    }
    for i in 0..=p {
        let want = (gw(q - 1) * kron(i, 0) - kron(i, 1) * kron(q, 2)) / gq - gb(i + 1);
        expect(i, q - 1, want, "subleading y row");
    }
    for j in 0..q {
        let want = (gb(p - 1) * kron(j, 0) - kron(j, 1) * kron(p, 2) - gb(p) * gw(j + 1)) / gq;
        expect(p - 1, j, want, "subleading x column");
    }
    if p > 2 || q > 2 {
        let corner = -gb(p)
            - (gb(p - 1) * gw(q - 1) + kron(p, 3) * kron(q, 3)
                - kron(q, 2) * gb(p - 2)
                - kron(p, 2) * gw(q - 2))
                / gq;
        expect(p - 2, q - 2, corner, "interior corner coefficient");
    }
    report
}

/// Checks value agreement of `(X, Y)` across every double point pair.
pub fn check_pair_values(data: &CurveNumeric, dps: &DoublePoints, tol: f64) -> Report {
    let mut report = Report::new("double-point-value-agreement");
    let x = data.x_poly();
    let y = data.y_poly();
    for (a, (w, wb)) in dps.pairs.iter().enumerate() {
        let scale = x.eval(*w).norm().max(y.eval(*w).norm()).max(1.0);
        let dx = (x.eval(*w) - x.eval(*wb)).norm();
        let dy = (y.eval(*w) - y.eval(*wb)).norm();
        if dx > tol * scale || dy > tol * scale {
            report.violation(a, 0, format!("pair {a}: |dX| = {dx:.3e}, |dY| = {dy:.3e}"));
        }
        if dps.ratios[a].norm() >= 1.0 {
            report.violation(a, 1, format!("pair {a}: |X_a| = {} not inside unit disk", dps.ratios[a].norm()));
        }
    }
    report
}

/// Checks the cross-ratio residue identity relating the two members of each
/// pair through the node polynomials.
pub fn check_residue_identity(dps: &DoublePoints, tol: f64) -> Report {
    let mut report = Report::new("residue-identity");
    let n = dps.n() as i32;
    for (a, (w, wb)) in dps.pairs.iter().enumerate() {
        let lhs = w.powi(n - 1) / (dps.delta_prime_eval(*w) * dps.delta_bar_eval(*w));
        let rhs = -wb.powi(n - 1) / (dps.delta_eval(*wb) * dps.delta_bar_prime_eval(*wb));
        let rel = (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-300);
        if rel > tol {
            report.violation(a, 0, format!("pair {a}: relative mismatch {rel:.3e}"));
        }
    }
    report
}

/// Checks the factorization of `z^{N-1} E_y(X(z), Y(z))` into the node
/// polynomials times `X'(z)` at sample points.
pub fn check_ey_factorization(
    data: &CurveNumeric,
    e: &[Vec<Complex64>],
    dps: &DoublePoints,
    tol: f64,
) -> Report {
    let mut report = Report::new("ey-factorization");
    let x = data.x_poly();
    let y = data.y_poly();
    let xp = x.derivative();
    let n = dps.n();
    let q = data.q();
    let gt_p = data.couplings().gt[data.p() - 1];
    let prefactor = Complex64::new(gt_p, 0.0).powi(q as i32 - 1);
    let samples = 2 * n + q + 2;
    for s in 0..samples {
        let angle = 2.0 * std::f64::consts::PI * (s as f64 + 0.17) / samples as f64;
        let z = Complex64::from_polar(1.23, angle);
        let lhs = z.powi(n as i32 - 1) * curve_eval_dy(e, x.eval(z), y.eval(z));
        let rhs = prefactor * dps.delta_eval(z) * dps.delta_bar_eval(z) * xp.eval(z);
        let rel = (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-300);
        if rel > tol {
            report.violation(s, 0, format!("sample {s}: relative mismatch {rel:.3e}"));
        }
    }
    report
}

/// Small-weight asymptotics of the double points in the one-parameter
/// scaling family `g_k = lambda_k s^{k-2}`, `gt_k = lambdatilde_k s^{k-2}`
/// with `s = sqrt(g)`.
#[derive(Debug, Clone)]
pub struct LeadingOrder {
    /// Leading pairs `(w_a, wbar_a)`.
    pub pairs: Vec<(Complex64, Complex64)>,
    /// Leading ratios `X_a`.
    pub ratios: Vec<Complex64>,
    /// Leading value of `R`.
    pub r: f64,
}

/// Numeric weights of the scaling family at parameter `g`.
pub fn couplings_from_lambdas(
    lambdas: &[f64],
    lambda_tildes: &[f64],
    g: f64,
) -> NumericCouplings {
    let s = g.sqrt();
    let gv = lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| l * s.powi(i as i32 + 1 - 2))
        .collect();
    let gtv = lambda_tildes
        .iter()
        .enumerate()
        .map(|(i, &l)| l * s.powi(i as i32 + 1 - 2))
        .collect();
    NumericCouplings::new(gv, gtv)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Solves the leading-order double point system of the scaling family.
///
/// The auxiliary unknowns satisfy a pair of polynomial relations whose
/// composition has `(p-1)(q-1)` roots; removing the trivial root at the
/// origin leaves exactly the expected number of pairs.
pub fn leading_order_seeds(
    lambdas: &[f64],
    lambda_tildes: &[f64],
    g: f64,
) -> Result<LeadingOrder> {
    let q = lambdas.len();
    let p = lambda_tildes.len();
    if q < 2 || p < 2 {
        return Err(Error::InvalidConfig("scaling family needs p, q >= 2".into()));
    }
    let l2 = lambdas[1];
    let lt2 = lambda_tildes[1];
    if (l2 * lt2).abs() >= 1.0 {
        return Err(Error::InvalidConfig(
            "scaling family needs |lambda_2 lambdatilde_2| < 1".into(),
        ));
    }
    let r0 = 1.0 / (1.0 - l2 * lt2);

    let mut xi_of_eta = vec![0.0; q];
    for j in 1..q {
        xi_of_eta[j] = lambdas[j];
    }
    let mut composed = vec![0.0; 1];
    let mut xi_pow = vec![1.0];
    let mut degree_cap = (p - 1) * (q - 1) + 1;
    for j in 1..p {
        xi_pow = poly_mul(&xi_pow, &xi_of_eta);
        xi_pow.truncate(degree_cap);
        if lambda_tildes[j] != 0.0 {
            if composed.len() < xi_pow.len() {
                composed.resize(xi_pow.len(), 0.0);
            }
            for (k, c) in xi_pow.iter().enumerate() {
                composed[k] += lambda_tildes[j] * c;
            }
        }
    }
    degree_cap = (p - 1) * (q - 1);
    composed.truncate(degree_cap + 1);
    if composed.len() < 2 {
        composed.resize(2, 0.0);
    }
    composed[1] -= 1.0;
    if composed[0].abs() > 1e-300 {
        return Err(Error::RootCount(
            "leading-order system lost its root at the origin".into(),
        ));
    }
    let reduced: Vec<f64> = composed[1..].to_vec();
    let etas = precision::poly_roots_real(&reduced)?;
    let n_expected = (p - 1) * (q - 1) - 1;
    if etas.len() != n_expected {
        return Err(Error::RootCount(format!(
            "leading-order system has {} roots, expected {n_expected}",
            etas.len()
        )));
    }
    let s = g.sqrt();
    let mut pairs = Vec::with_capacity(etas.len());
    let mut ratios = Vec::with_capacity(etas.len());
    for eta in &etas {
        if eta.norm() < 1e-8 {
            return Err(Error::Degenerate("leading-order root at the origin".into()));
        }
        let mut xi = Complex64::new(0.0, 0.0);
        for j in (1..q).rev() {
            xi = (xi + lambdas[j]) * eta;
        }
        let w = s * r0 / eta;
        let wb = xi / s;
        pairs.push((w, wb));
        ratios.push(g * r0 / (eta * xi));
    }
    Ok(LeadingOrder { pairs, ratios, r: r0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve;

    fn quad_spec() -> CouplingSpec {
        CouplingSpec::all_vars(4, 2, &[1], &[1, 3]).unwrap()
    }

    fn quad_values() -> Vec<f64> {
        vec![0.1, 0.1, 0.05]
    }

    fn quad_numeric() -> CurveNumeric {
        let spec = quad_spec();
        let series = solve_limit_system(&spec, 8).unwrap();
        let seed = eval_series(&series, &spec, &quad_values()).unwrap();
        refine_numeric(seed).unwrap()
    }

    #[test]
    fn limit_system_matches_solver_band_limits() {
        let spec = quad_spec();
        let order = 4;
        let curve = solve_limit_system(&spec, order).unwrap();
        let sol = solve(&spec, order, 4).unwrap();
        let limits = sol.limits().unwrap();
        assert_eq!(curve.r, limits.r_infinity);
        assert_eq!(curve.alphas, limits.alphas);
        assert_eq!(curve.betas, limits.betas);
    }

    #[test]
    fn quadrangulation_limit_relations_hold_exactly() {
        let spec = quad_spec();
        let curve = solve_limit_system(&spec, 5).unwrap();
        let vars = spec.vars();
        let order = 5;
        let g2 = spec.white_series(2, order);
        let gt2 = spec.black_series(2, order);
        let gt4 = spec.black_series(4, order);
        let one = TruncatedSeries::one(vars, order);

        assert!(curve.alphas[0].is_zero());
        assert!(curve.betas[0].is_zero());
        assert!(curve.betas[2].is_zero());
        assert_eq!(curve.betas[3], gt4);
        assert_eq!(curve.alphas[1], curve.r.try_mul(&g2).unwrap());
        let want_b1 = gt4
            .try_mul(&curve.alphas[1])
            .unwrap()
            .scale(&rat_int(3))
            .try_add(&gt2)
            .unwrap();
        assert_eq!(curve.betas[1], want_b1);
        let lhs = curve.alphas[1].try_mul(&curve.betas[1]).unwrap();
        let rhs = curve.r.try_sub(&one).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn numeric_refinement_matches_quadrangulation_closed_form() {
        let data = quad_numeric();
        assert!(data.residual() < 1e-13);
        let (g2, gt2, gt4) = (0.1_f64, 0.1_f64, 0.05_f64);
        let u = 1.0 - g2 * gt2;
        let disc = (u * u - 12.0 * g2 * g2 * gt4).sqrt();
        let r_exact = (u - disc) / (6.0 * gt4 * g2 * g2);
        assert!((data.r.re - r_exact).abs() < 1e-12, "{} vs {r_exact}", data.r.re);
        assert!(data.r.im.abs() < 1e-13);
        assert!((data.alphas[1] - data.r * g2).norm() < 1e-12);
    }

    #[test]
    fn series_determinant_reproduces_boundary_products() {
        let spec = quad_spec();
        let curve = solve_limit_system(&spec, 3).unwrap();
        let det = curve_determinant_series(&curve).unwrap();
        let order = 3;
        let g2 = spec.white_series(2, order);
        let gt2 = spec.black_series(2, order);
        let gt4 = spec.black_series(4, order);
        let a1 = &curve.alphas[1];
        let a1_gt4 = a1.try_mul(&gt4).unwrap();

        assert_eq!(det[0][2], a1.clone());
        assert!(det[1][2].is_zero());
        assert!(det[4][1].is_zero());
        assert_eq!(det[4][0].try_mul(&g2).unwrap(), a1_gt4);
        assert_eq!(det[3][1], a1_gt4.neg());
        let want_11 = a1.try_mul(&gt2).unwrap().try_add(&curve.r).unwrap().neg();
        assert_eq!(det[1][1], want_11);
        let want_20 = curve.r.try_mul(&gt2).unwrap().try_sub(&a1_gt4).unwrap();
        assert_eq!(det[2][0], want_20);
    }

    #[test]
    fn series_determinant_vanishes_on_parametrization() {
        let spec = quad_spec();
        let curve = solve_limit_system(&spec, 3).unwrap();
        let det = curve_determinant_series(&curve).unwrap();
        let zero = curve.r.zero_like();
        let one = curve.r.one_like();

        let mut y_coeffs = vec![curve.r.clone()];
        y_coeffs.extend(curve.betas.iter().cloned());
        let y = Laurent::from_coeffs(-1, y_coeffs, &zero);
        let mut x_coeffs: Vec<TruncatedSeries> = curve.alphas.iter().rev().cloned().collect();
        x_coeffs.push(one.clone());
        let x = Laurent::from_coeffs(-1, x_coeffs, &zero);

        let mut total = Laurent::zero(&zero);
        for (i, row) in det.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    let term = x.pow(i as u32).mul(&y.pow(j as u32)).scale(c);
                    total = total.add(&term);
                }
            }
        }
        assert!(total.is_zero(), "parametrization residual {total:?}");
    }

    #[test]
    fn numeric_curve_polynomial_has_the_stated_boundary() {
        let data = quad_numeric();
        let e = curve_polynomial(&data).unwrap();
        let report = check_curve_boundary(&data, &e, 1e-10);
        report.assert_pass();
        let on_curve = check_on_curve(&data, &e, 1e-10);
        on_curve.assert_pass();
    }

    #[test]
    fn quadrangulation_double_points_verify() {
        let data = quad_numeric();
        let e = curve_polynomial(&data).unwrap();
        let dps = double_points(&data, &e, &PairingTolerances::default()).unwrap();
        assert_eq!(dps.n(), 2);
        assert_eq!(dps.branch_points.len(), 2);
        for x_a in &dps.ratios {
            assert!(x_a.norm() < 1.0);
        }
        check_pair_values(&data, &dps, 1e-10).assert_pass();
        check_residue_identity(&dps, 1e-8).assert_pass();
        check_ey_factorization(&data, &e, &dps, 1e-8).assert_pass();
    }

    #[test]
    fn cubic_shape_boundary_and_double_points_verify() {
        let spec = CouplingSpec::all_vars(3, 3, &[1], &[1]).unwrap();
        let series = solve_limit_system(&spec, 8).unwrap();
        let seed = eval_series(&series, &spec, &[0.08, 0.05, 0.07, 0.04]).unwrap();
        let data = refine_numeric(seed).unwrap();
        let e = curve_polynomial(&data).unwrap();
        check_curve_boundary(&data, &e, 1e-10).assert_pass();
        check_on_curve(&data, &e, 1e-10).assert_pass();
        let dps = double_points(&data, &e, &PairingTolerances::default()).unwrap();
        assert_eq!(dps.n(), 3);
        check_pair_values(&data, &dps, 1e-10).assert_pass();
        check_residue_identity(&dps, 1e-8).assert_pass();
        check_ey_factorization(&data, &e, &dps, 1e-8).assert_pass();
    }

    #[test]
    fn perturbed_pairs_fail_the_residue_identity() {
        let data = quad_numeric();
        let e = curve_polynomial(&data).unwrap();
        let dps = double_points(&data, &e, &PairingTolerances::default()).unwrap();
        let mut pairs = dps.pairs.clone();
        pairs[0].0 *= Complex64::new(1.001, 0.0);
        let broken = DoublePoints::from_pairs(pairs, dps.branch_points.clone());
        assert!(!check_residue_identity(&broken, 1e-8).is_pass());
    }

    #[test]
    fn refinement_rejects_seeds_far_outside_any_basin() {
        let data = quad_numeric();
        let mut bad = data.clone();
        bad.r = Complex64::new(1e300, 0.0);
        bad.alphas[1] = Complex64::new(-4e300, 3e200);
        assert!(refine_numeric(bad).is_err());
    }

    #[test]
    fn monomial_scaling_family_has_closed_form_roots() {
        let l2 = 0.6;
        let lt4 = 0.5;
        let lead = leading_order_seeds(&[0.0, l2], &[0.0, 0.0, 0.0, lt4], 1e-4).unwrap();
        assert_eq!(lead.pairs.len(), 2);
        let eta_sq = 1.0 / ((1.0 - 0.0) * lt4 * l2 * l2 * l2);
        for (w, _) in &lead.pairs {
            let eta = 1e-2 * lead.r / w;
            assert!((eta * eta - Complex64::new(eta_sq, 0.0)).norm() < 1e-8 * eta_sq);
        }
    }

    fn leading_order_worst_error(
        spec: &CouplingSpec,
        series: &CurveSeries,
        lambdas: &[f64],
        tildes: &[f64],
        g: f64,
    ) -> f64 {
        let c = couplings_from_lambdas(lambdas, tildes, g);
        let values: Vec<f64> = spec
            .vars()
            .names()
            .iter()
            .map(|name| {
                let (list, k) = if let Some(rest) = name.strip_prefix("gt") {
                    (&c.gt, rest.parse::<usize>().unwrap())
                } else {
                    (&c.g, name[1..].parse::<usize>().unwrap())
                };
                list[k - 1]
            })
            .collect();
        let seed = eval_series(series, spec, &values).unwrap();
        let data = refine_numeric(seed).unwrap();
        let e = curve_polynomial(&data).unwrap();
        let dps = double_points(&data, &e, &PairingTolerances::default()).unwrap();
        let lead = leading_order_seeds(lambdas, tildes, g).unwrap();
        assert_eq!(lead.pairs.len(), dps.n());
        let mut worst = 0.0f64;
        for x_a in &dps.ratios {
            let best = lead
                .ratios
                .iter()
                .map(|l| (l - x_a).norm() / x_a.norm())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        worst
    }

    #[test]
    fn leading_order_error_obeys_the_sqrt_g_bound() {
        let lambdas = vec![0.0, 0.3];
        let tildes = vec![0.0, 0.3, 0.25, 0.5];
        let spec = CouplingSpec::all_vars(4, 2, &[1], &[1]).unwrap();
        let series = solve_limit_system(&spec, 8).unwrap();
        let errs: Vec<f64> = [1e-4, 1e-6]
            .iter()
            .map(|&g| leading_order_worst_error(&spec, &series, &lambdas, &tildes, g))
            .collect();
        assert!(errs[0] < 5.0 * 1e-4f64.sqrt(), "error at g=1e-4: {}", errs[0]);
        assert!(errs[1] < 5.0 * 1e-6f64.sqrt(), "error at g=1e-6: {}", errs[1]);
        let ratio = errs[0] / errs[1];
        assert!(
            ratio > 5.0,
            "error should shrink at least at the sqrt(g) rate, ratio {ratio}: {errs:?}"
        );
    }
}
