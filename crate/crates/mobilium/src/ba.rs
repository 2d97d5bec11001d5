//! Wave functions built from double points, the residue scalar product, and
//! reconstruction of the band operators.
//!
//! From the ordered double-point pairs `(w_a, wbar_a)` this module builds the
//! difference vectors `xi_n`, the Hankel-type determinants `h_n`, and the
//! wave functions `psi_n` (polynomials, one per row index) and `phi_n`
//! (polynomials in `1/z`, one per column index).  The residue scalar product
//! makes `(phi_m, psi_n)` orthonormal, so the operator entries come back as
//! `Q_{n,m} = <phi_m, X psi_n>` and `P_{n,m} = <phi_m, Y psi_n>`.
//!
//! Everything from the pair coordinates to the scalar products runs in
//! double-double arithmetic.  The reciprocal expansions of `Delta DeltaBar`
//! have coefficients growing geometrically in the largest `|wbar_a|` (or the
//! smallest `|w_a|` for the residue at zero), so the scalar sums cancel
//! masses far above their results and plain `f64` loses the band structure
//! of the reconstructed operators; the public surface still speaks
//! `Complex64`, rounded at the end.
//!
//! Invariants maintained throughout:
//!
//! * `psi[n]` has exponent support `n+1 ..= n+N+1` and is monic;
//! * `phi[n]` has exponent support `-n-N-1 ..= -n-1` with coefficient one at
//!   `z^{-n-1}`;
//! * determinants with one `z`-linear column per slot are never expanded
//!   symbolically: they are evaluated at the `N + 2` integer points
//!   `z = 0..=N+1` (exact in double-double) and recovered by Newton
//!   interpolation, and the spurious top coefficient is checked against
//!   zero;
//! * the scalar product is the residue at infinity by definition, and the
//!   residue at zero is exposed separately so agreement of the two routes is
//!   an executable check, not an assumption.

use num_complex::Complex64;

use crate::curve::{newton_interp, refine_dd, CurveNumeric, DoublePoints};
use crate::error::{Error, Result};
use crate::laurent::Laurent;
use crate::precision::{self, DdComplex};
use crate::report::Report;

fn lift_int(k: i64) -> DdComplex {
    DdComplex::from_c64(Complex64::new(k as f64, 0.0))
}

fn lift_laurent(f: &Laurent<Complex64>) -> Laurent<DdComplex> {
    if f.is_zero() {
        return Laurent::zero(&DdComplex::zero());
    }
    let coeffs = (f.lo()..=f.hi()).map(|k| DdComplex::from_c64(f.coeff(k))).collect();
    Laurent::from_coeffs(f.lo(), coeffs, &DdComplex::zero())
}

/// The difference vectors `xi_n` and their sliding determinants `h_n`.
///
/// Entry `a` of `xi_n` is `wbar_a^n - w_a^n`; `h_n` is the `N x N`
/// determinant with entry `(a, b) = wbar_a^{n+b} - w_a^{n+b}`, `b = 1..=N`.
/// Both are defined for negative indices too, and `h_{-1} = ... = h_{-N} = 0`
/// because `xi_0` is the zero vector.
#[derive(Debug, Clone)]
pub struct XiVectors {
    pairs: Vec<(DdComplex, DdComplex)>,
}

impl XiVectors {
    /// Captures the double-point pairs.
    pub fn new(dps: &DoublePoints) -> XiVectors {
        XiVectors { pairs: dps.pairs_dd().to_vec() }
    }

    /// Number of double points `N`.
    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    /// The vector `xi_n`, rounded to `Complex64`.
    pub fn xi(&self, n: i64) -> Vec<Complex64> {
        self.xi_dd(n).iter().map(|v| v.to_c64()).collect()
    }

    pub(crate) fn xi_dd(&self, n: i64) -> Vec<DdComplex> {
        self.pairs.iter().map(|&(w, wb)| wb.powi(n).sub(w.powi(n))).collect()
    }

    fn h_matrix(&self, n: i64) -> Vec<Vec<DdComplex>> {
        let nn = self.pairs.len();
        (0..nn)
            .map(|a| {
                let (w, wb) = self.pairs[a];
                (1..=nn as i64).map(|b| wb.powi(n + b).sub(w.powi(n + b))).collect()
            })
            .collect()
    }

    /// The determinant `h_n`, rounded to `Complex64`.
    pub fn h(&self, n: i64) -> Complex64 {
        self.h_dd(n).to_c64()
    }

    pub(crate) fn h_dd(&self, n: i64) -> DdComplex {
        precision::det_dd(&self.h_matrix(n))
    }

    /// Ratio of the Hadamard bound of the `h_n` matrix to `|h_n|`; large
    /// values flag cancellation-dominated determinants whose relative
    /// precision is poor.
    pub fn h_condition(&self, n: i64) -> f64 {
        let m = self.h_matrix(n);
        let nn = m.len();
        let mut bound = 1.0;
        for b in 0..nn {
            let col: f64 = (0..nn).map(|a| m[a][b].norm_hi().powi(2)).sum();
            bound *= col.sqrt();
        }
        bound / self.h_dd(n).norm_hi().max(1e-300)
    }
}

/// Wave functions for `n = 0..=n_max`, plus the interpolation weights
/// `rho_a = DeltaBar(w_a) / DeltaBar'(wbar_a)`.
#[derive(Debug, Clone)]
pub struct BaFunctions {
    /// `psi[n]`, monic with exponent support `n+1 ..= n+N+1`.
    pub psi: Vec<Laurent<Complex64>>,
    /// `phi[n]`, exponent support `-n-N-1 ..= -n-1`, coefficient one at
    /// `z^{-n-1}`.
    pub phi: Vec<Laurent<Complex64>>,
    /// `rho_a = DeltaBar(w_a) / DeltaBar'(wbar_a)`.
    pub rho: Vec<Complex64>,
    /// The sliding determinants behind the construction.
    pub xi: XiVectors,
    psi_dd: Vec<Laurent<DdComplex>>,
    phi_dd: Vec<Laurent<DdComplex>>,
}

/// Worst determinant condition ratio tolerated before a build is refused;
/// double-double elimination keeps at least twelve digits up to this point.
const H_CONDITION_LIMIT: f64 = 1e20;

/// Absolute evaluation slack per unit of Horner mass in double-double
/// arithmetic.
const EVAL_SLACK: f64 = 1e-28;

fn wave_function(xi: &XiVectors, n: i64) -> Result<Laurent<DdComplex>> {
    let nn = xi.n();
    let hn = xi.h_dd(n);
    let cond = xi.h_condition(n);
    if !hn.norm_hi().is_finite() || hn.norm_hi() == 0.0 || cond > H_CONDITION_LIMIT {
        return Err(Error::Degenerate(format!(
            "h_{n} is zero or cancellation-dominated (condition ratio {cond:.1e})"
        )));
    }

    let m = nn + 2;
    let columns: Vec<(Vec<DdComplex>, Vec<DdComplex>)> =
        (0..nn as i64).map(|k| (xi.xi_dd(n + 1 + k), xi.xi_dd(n + 2 + k))).collect();
    let values: Vec<DdComplex> = (0..m)
        .map(|j| {
            let z = lift_int(j as i64);
            let matrix: Vec<Vec<DdComplex>> = (0..nn)
                .map(|a| columns.iter().map(|(lin, con)| z.mul(lin[a]).sub(con[a])).collect())
                .collect();
            precision::det_dd(&matrix)
        })
        .collect();

    let mut coeffs = newton_interp(&values, &|num, k| num.div(lift_int(k)));
    let max = coeffs.iter().map(|c| c.norm_hi()).fold(0.0f64, f64::max);
    let spurious = coeffs[nn + 1].norm_hi();
    if spurious > 1e-7 * max.max(1e-300) {
        return Err(Error::Degenerate(format!(
            "wave function interpolation at n = {n} left a degree-{} term of size {spurious:.3e}",
            nn + 1
        )));
    }
    coeffs.truncate(nn + 1);
    for c in &mut coeffs {
        *c = c.div(hn);
    }
    Ok(Laurent::from_coeffs(n + 1, coeffs, &DdComplex::zero()))
}

/// Builds `psi_n` and `phi_n = psi_{-2-n-N}` for `n = 0..=n_max`.
///
/// Fails with [`Error::InvalidConfig`] when there are no double points and
/// with [`Error::Degenerate`] when some required `h_n` vanishes or is
/// cancellation-dominated beyond recovery.
pub fn build_psi_phi(dps: &DoublePoints, n_max: usize) -> Result<BaFunctions> {
    let nn = dps.n();
    if nn == 0 {
        return Err(Error::InvalidConfig(
            "wave-function construction needs at least one double point".to_string(),
        ));
    }
    let xi = XiVectors::new(dps);
    let psi_dd: Vec<Laurent<DdComplex>> =
        (0..=n_max as i64).map(|n| wave_function(&xi, n)).collect::<Result<_>>()?;
    let phi_dd: Vec<Laurent<DdComplex>> = (0..=n_max as i64)
        .map(|n| wave_function(&xi, -2 - n - nn as i64))
        .collect::<Result<_>>()?;
    let psi = psi_dd.iter().map(Laurent::round).collect();
    let phi = phi_dd.iter().map(Laurent::round).collect();
    let rho = dps
        .pairs
        .iter()
        .map(|&(w, wb)| dps.delta_bar_eval(w) / dps.delta_bar_prime_eval(wb))
        .collect();
    Ok(BaFunctions { psi, phi, rho, xi, psi_dd, phi_dd })
}

impl BaFunctions {
    /// Coefficient lists of `psi_n` and `phi_n` as deterministic JSON.
    pub fn coefficients_json(&self) -> serde_json::Value {
        let dump = |fns: &[Laurent<Complex64>]| -> serde_json::Value {
            fns.iter()
                .map(|f| {
                    serde_json::json!({
                        "lo": f.lo(),
                        "re": f.iter().map(|(_, c)| c.re).collect::<Vec<f64>>(),
                        "im": f.iter().map(|(_, c)| c.im).collect::<Vec<f64>>(),
                    })
                })
                .collect()
        };
        serde_json::json!({
            "schema": 1,
            "psi": dump(&self.psi),
            "phi": dump(&self.phi),
        })
    }
}

/// Coefficients of the monic degree-`2N` polynomial `Delta(z) DeltaBar(z)`.
fn delta_product(pairs: &[(DdComplex, DdComplex)]) -> Vec<DdComplex> {
    let mut roots = Vec::with_capacity(2 * pairs.len());
    for &(w, wb) in pairs {
        roots.push(w);
        roots.push(wb);
    }
    let prod = Laurent::from_roots_dd(&roots);
    (0..=2 * pairs.len() as i64).map(|k| prod.coeff(k)).collect()
}

fn scalar_product_core(fg: &Laurent<DdComplex>, s: &[DdComplex], nn: i64) -> DdComplex {
    if fg.is_zero() || fg.hi() < nn {
        return DdComplex::zero();
    }
    let deg = s.len() - 1;
    let need = (fg.hi() - nn) as usize;
    let mut recip = vec![DdComplex::one().div(s[deg])];
    for m in 1..=need {
        let mut acc = DdComplex::zero();
        for j in 1..=m.min(deg) {
            acc = acc.add(s[deg - j].mul(recip[m - j]));
        }
        recip.push(acc.neg().div(s[deg]));
    }
    let mut out = DdComplex::zero();
    for k in nn..=fg.hi() {
        out = out.add(fg.coeff(k).mul(recip[(k - nn) as usize]));
    }
    out
}

fn scalar_product_zero_core(fg: &Laurent<DdComplex>, s: &[DdComplex], nn: i64) -> DdComplex {
    if fg.is_zero() || fg.lo() > -nn {
        return DdComplex::zero();
    }
    let deg = s.len() - 1;
    let need = (-fg.lo() - nn) as usize;
    let mut recip = vec![DdComplex::one().div(s[0])];
    for m in 1..=need {
        let mut acc = DdComplex::zero();
        for j in 1..=m.min(deg) {
            acc = acc.add(s[j].mul(recip[m - j]));
        }
        recip.push(acc.neg().div(s[0]));
    }
    let mut out = DdComplex::zero();
    for k in fg.lo()..=-nn {
        out = out.add(fg.coeff(k).mul(recip[(-k - nn) as usize]));
    }
    out
}

/// The scalar product `<f, g> = -Res_{z->infinity} f g z^{N-1} / (Delta
/// DeltaBar) dz`, computed from the `1/z`-expansion of the reciprocal.
pub fn scalar_product(
    f: &Laurent<Complex64>,
    g: &Laurent<Complex64>,
    dps: &DoublePoints,
) -> Complex64 {
    let fg = lift_laurent(f).mul(&lift_laurent(g));
    scalar_product_core(&fg, &delta_product(dps.pairs_dd()), dps.n() as i64).to_c64()
}

/// The same integrand's residue at `z = 0`; equals [`scalar_product`] when
/// the residues at the double points cancel pairwise, which holds for
/// products `phi_m P(X, Y) psi_n`.
pub fn scalar_product_at_zero(
    f: &Laurent<Complex64>,
    g: &Laurent<Complex64>,
    dps: &DoublePoints,
) -> Complex64 {
    let fg = lift_laurent(f).mul(&lift_laurent(g));
    scalar_product_zero_core(&fg, &delta_product(dps.pairs_dd()), dps.n() as i64).to_c64()
}

/// Dense windows of the reconstructed operators, entry `(n, m)` in row `n`.
#[derive(Debug, Clone)]
pub struct OperatorWindows {
    /// `Q_{n,m} = <phi_m, X psi_n>`.
    pub q: Vec<Vec<Complex64>>,
    /// `P_{n,m} = <phi_m, Y psi_n>`.
    pub p: Vec<Vec<Complex64>>,
}

impl OperatorWindows {
    /// Window size (rows and columns).
    pub fn size(&self) -> usize {
        self.q.len()
    }

    /// `R_n = P_{n,n-1}`.
    pub fn r_n(&self, n: usize) -> Complex64 {
        self.p[n][n - 1]
    }
}

/// Reconstructs `Q` and `P` as scalar products against `X psi_n`, `Y psi_n`.
///
/// The curve data is re-sharpened to double-double internally so that the
/// multiplication by `X` and `Y` does not reintroduce `f64` rounding.
pub fn reconstruct_operators(
    ba: &BaFunctions,
    dps: &DoublePoints,
    data: &CurveNumeric,
    size: usize,
) -> Result<OperatorWindows> {
    if ba.psi.len() < size || ba.phi.len() < size {
        return Err(Error::InvalidConfig(format!(
            "operator window of size {size} needs wave functions up to n = {}",
            size - 1
        )));
    }
    let curve = refine_dd(data)?;
    let x = curve.x_poly();
    let y = curve.y_poly();
    let s = delta_product(dps.pairs_dd());
    let nn = dps.n() as i64;
    let build = |mult: &Laurent<DdComplex>| -> Vec<Vec<Complex64>> {
        (0..size)
            .map(|n| {
                let lifted = mult.mul(&ba.psi_dd[n]);
                (0..size)
                    .map(|m| scalar_product_core(&ba.phi_dd[m].mul(&lifted), &s, nn).to_c64())
                    .collect()
            })
            .collect()
    };
    Ok(OperatorWindows { q: build(&x), p: build(&y) })
}

fn mat_mul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn mat_poly(coeffs: &[f64], m: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = m.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut power: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..n).map(|j| Complex64::new(f64::from(i == j), 0.0)).collect())
        .collect();
    for (k, &c) in coeffs.iter().enumerate() {
        if k > 0 {
            power = mat_mul(&power, m);
        }
        if c == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out[i][j] += c * power[i][j];
            }
        }
    }
    out
}

fn window_max(m: &[Vec<Complex64>], limit: usize) -> f64 {
    let mut max = 0.0f64;
    for row in m.iter().take(limit) {
        for c in row.iter().take(limit) {
            max = max.max(c.norm());
        }
    }
    max
}

/// Checks that `T = Q - V'(P)` is strictly upper triangular of width `N+1`
/// with `T_{n,n+1} R_{n+1} = 1`, and that `Ttilde = P - Vtilde'(Q)` is
/// strictly lower triangular of width `N+1` with `Ttilde_{n,n-1} = 1`.
///
/// `V'(y) = sum_k g_k y^{k-1}` collects the white weights and `Vtilde'(x) =
/// sum_k gtilde_k x^{k-1}` the black ones.  The widths come from the
/// multipliers: `X - V'(Y)` is a polynomial in `z` of degree exactly
/// `(p-1)(q-1) = N+1` vanishing at zero (top coefficient
/// `-g_q gtilde_p^{q-1}`), and `Y - Vtilde'(X)` mirrors it in `1/z`.
/// Matrix powers of a truncated window are only exact away from the
/// truncation edge, so all assertions stay on the interior square of side
/// `size - N - 2`.
pub fn check_t_bands(ops: &OperatorWindows, data: &CurveNumeric, tol: f64) -> Report {
    let mut report = Report::new("t-bands");
    let size = ops.size();
    let nn = (data.p() - 1) * (data.q() - 1) - 1;
    let trusted = size.saturating_sub(nn + 2);

    let v_prime = mat_poly(&data.couplings().g, &ops.p);
    let vt_prime = mat_poly(&data.couplings().gt, &ops.q);
    let scale_t = window_max(&ops.q, trusted).max(window_max(&v_prime, trusted)).max(1.0);
    let scale_tt = window_max(&ops.p, trusted).max(window_max(&vt_prime, trusted)).max(1.0);
    let g = &data.couplings().g;
    let gt = &data.couplings().gt;
    let top = -g[g.len() - 1] * gt[gt.len() - 1].powi(g.len() as i32 - 1);

    for n in 0..trusted {
        for m in 0..trusted {
            let t = ops.q[n][m] - v_prime[n][m];
            let tt = ops.p[n][m] - vt_prime[n][m];
            let in_upper = m > n && m <= n + nn + 1;
            let in_lower = m < n && m + nn + 1 >= n;
            if !in_upper && t.norm() > tol * scale_t {
                report.violation(n, m, format!("T should vanish here, found {t:.3e}"));
            }
            if !in_lower && tt.norm() > tol * scale_tt {
                report.violation(n, m, format!("Ttilde should vanish here, found {tt:.3e}"));
            }
            if m == n + nn + 1 && (t - top).norm() > tol * top.abs().max(1.0) {
                report.violation(
                    n,
                    m,
                    format!("T at the outer band edge should be {top}, found {t:.12}"),
                );
            }
            if m == n + 1 {
                let product = t * ops.r_n(n + 1);
                if (product - 1.0).norm() > tol {
                    report.violation(
                        n,
                        m,
                        format!("T_(n,n+1) R_(n+1) should be 1, found {product:.12}"),
                    );
                }
            }
            if m + 1 == n && (tt - 1.0).norm() > tol {
                report.violation(n, m, format!("Ttilde_(n,n-1) should be 1, found {tt:.12}"));
            }
        }
    }
    report
}

/// Checks `[P, Q] = -e_0 e_0^T` on the interior square untouched by
/// truncation.
pub fn check_commutator(ops: &OperatorWindows, data: &CurveNumeric, tol: f64) -> Report {
    let mut report = Report::new("operator-commutator");
    let size = ops.size();
    let trusted = size.saturating_sub(data.p().max(data.q()));
    let pq = mat_mul(&ops.p, &ops.q);
    let qp = mat_mul(&ops.q, &ops.p);
    let scale = window_max(&pq, trusted).max(window_max(&qp, trusted)).max(1.0);
    for n in 0..trusted {
        for m in 0..trusted {
            let want = if n == 0 && m == 0 { -1.0 } else { 0.0 };
            let got = pq[n][m] - qp[n][m];
            if (got - want).norm() > tol * scale {
                report.violation(n, m, format!("[P,Q] entry should be {want}, found {got:.3e}"));
            }
        }
    }
    report
}

/// Checks orthonormality `<phi_m, psi_n> = delta_(n,m)`, agreement of the
/// residue-at-zero route with the defining residue at infinity, and the
/// constant-term orthogonality `<phi_m, 1> = <1, psi_n> = 0`.
pub fn check_orthonormality(
    ba: &BaFunctions,
    dps: &DoublePoints,
    size: usize,
    tol: f64,
) -> Report {
    let mut report = Report::new("orthonormality");
    let s = delta_product(dps.pairs_dd());
    let nn = dps.n() as i64;
    let one = Laurent::monomial(0, DdComplex::one());
    for n in 0..size {
        for m in 0..size {
            let fg = ba.phi_dd[m].mul(&ba.psi_dd[n]);
            let inf = scalar_product_core(&fg, &s, nn).to_c64();
            let zero = scalar_product_zero_core(&fg, &s, nn).to_c64();
            let want = f64::from(n == m);
            if (inf - want).norm() > tol {
                report.violation(n, m, format!("<phi_m, psi_n> should be {want}, found {inf:.12}"));
            }
            if (inf - zero).norm() > tol {
                report.violation(
                    n,
                    m,
                    format!("residue routes disagree: {inf:.12} at infinity, {zero:.12} at zero"),
                );
            }
        }
        let against_one = scalar_product_core(&ba.phi_dd[n].mul(&one), &s, nn).to_c64();
        if against_one.norm() > tol {
            report.violation(n, 0, format!("<phi_n, 1> should vanish, found {against_one:.3e}"));
        }
        let one_against = scalar_product_core(&one.mul(&ba.psi_dd[n]), &s, nn).to_c64();
        if one_against.norm() > tol {
            report.violation(n, 0, format!("<1, psi_n> should vanish, found {one_against:.3e}"));
        }
    }
    report
}

fn horner_mass(f: &Laurent<DdComplex>, radius: f64) -> f64 {
    f.iter().map(|(k, c)| c.norm_hi() * radius.powi(k as i32)).sum()
}

/// Checks `psi_n(wbar_a) = psi_n(w_a)` and `phi_n(wbar_a) = phi_n(w_a)` for
/// every built index.
///
/// The allowance is `tol` relative to the larger of the two values, plus an
/// absolute floor of the Horner mass (sum of term magnitudes at that radius)
/// times the double-double evaluation slack.  Deep in the index range the
/// values decay geometrically in `w_a / wbar_a` while the masses grow in
/// `wbar_a`, so a bare relative comparison would demand more digits than any
/// fixed working precision holds; the floor pins the check to the digits the
/// evaluation actually carries.
pub fn check_doublepoint_values(ba: &BaFunctions, dps: &DoublePoints, tol: f64) -> Report {
    let mut report = Report::new("wave-function-pair-values");
    let run = |label: &str, fns: &[Laurent<DdComplex>], report: &mut Report| {
        for (n, f) in fns.iter().enumerate() {
            for (a, &(w, wb)) in dps.pairs_dd().iter().enumerate() {
                let inner = f.eval(w);
                let outer = f.eval(wb);
                let mass = horner_mass(f, w.norm_hi()).max(horner_mass(f, wb.norm_hi()));
                let allowed = tol * inner.norm_hi().max(outer.norm_hi()) + mass * EVAL_SLACK;
                let diff = inner.sub(outer).norm_hi();
                if diff > allowed {
                    report.violation(
                        n,
                        a,
                        format!(
                            "{label}_{n} at pair {a}: difference {diff:.3e} exceeds {allowed:.3e}"
                        ),
                    );
                }
            }
        }
    };
    run("psi", &ba.psi_dd, &mut report);
    run("phi", &ba.phi_dd, &mut report);
    report
}

/// Checks `Delta(0) DeltaBar(0) = h_{n+1} h_{-n-N-1} / (h_n h_{-n-N-2})` for
/// `n = 0..=max_n`.
pub fn check_delta_zero_identity(
    xi: &XiVectors,
    dps: &DoublePoints,
    max_n: usize,
    tol: f64,
) -> Report {
    let mut report = Report::new("delta-zero-h-ratio");
    let zero = Complex64::new(0.0, 0.0);
    let lhs = dps.delta_eval(zero) * dps.delta_bar_eval(zero);
    let nn = xi.n() as i64;
    for n in 0..=max_n as i64 {
        let rhs = xi.h(n + 1) * xi.h(-n - nn - 1) / (xi.h(n) * xi.h(-n - nn - 2));
        if (lhs - rhs).norm() > tol * lhs.norm().max(1.0) {
            report.violation(
                n as usize,
                0,
                format!("Delta(0) DeltaBar(0) = {lhs:.12}, h-ratio gives {rhs:.12}"),
            );
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingSpec;
    use crate::curve::{spectral_data, PairingTolerances};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn synthetic_single() -> DoublePoints {
        DoublePoints::from_pairs(vec![(c(0.5), c(2.0))], vec![])
    }

    fn quad_setup() -> (CurveNumeric, DoublePoints) {
        let spec = CouplingSpec::all_vars(4, 2, &[1], &[1, 3]).unwrap();
        let (data, _, dps) =
            spectral_data(&spec, &[0.1, 0.1, 0.05], 8, &PairingTolerances::default()).unwrap();
        (data, dps)
    }

    #[test]
    fn xi_zero_vanishes_and_h_vanishes_on_the_excluded_range() {
        let dps = DoublePoints::from_pairs(vec![(c(0.5), c(2.0)), (c(0.3), c(3.0))], vec![]);
        let xi = XiVectors::new(&dps);
        assert!(xi.xi(0).iter().all(|v| v.norm() == 0.0));
        assert_eq!(xi.h(-1).norm(), 0.0);
        assert_eq!(xi.h(-2).norm(), 0.0);
        assert!(xi.h(0).norm() > 0.0);
    }

    #[test]
    fn single_pair_closed_forms() {
        let dps = synthetic_single();
        let xi = XiVectors::new(&dps);
        assert!((xi.h(0) - c(1.5)).norm() < 1e-15);
        assert!((xi.h(1) - c(3.75)).norm() < 1e-15);
        assert!((xi.h(2) - c(7.875)).norm() < 1e-15);

        let ba = build_psi_phi(&dps, 4).unwrap();
        let psi0 = &ba.psi[0];
        assert!((psi0.coeff(2) - c(1.0)).norm() < 1e-12);
        assert!((psi0.coeff(1) - c(-2.5)).norm() < 1e-12);
        assert_eq!(psi0.lo(), 1);
        assert_eq!(psi0.hi(), 2);

        let phi0 = &ba.phi[0];
        assert!((phi0.coeff(-1) - c(1.0)).norm() < 1e-12);
        assert!((phi0.coeff(-2) - c(-0.4)).norm() < 1e-12);

        for n in 0..=4i64 {
            let want = (c(0.5) * c(2.0)).powi((n + 1) as i32) * (c(0.5) - c(2.0)) / xi.h(n);
            let at_w = ba.psi[n as usize].eval(c(0.5));
            let at_wb = ba.psi[n as usize].eval(c(2.0));
            assert!((at_w - want).norm() < 1e-10 * want.norm());
            assert!((at_wb - want).norm() < 1e-10 * want.norm());
        }
    }

    #[test]
    fn single_pair_orthonormality_and_subdiagonal_ratio() {
        let dps = synthetic_single();
        let ba = build_psi_phi(&dps, 6).unwrap();
        check_orthonormality(&ba, &dps, 5, 1e-11).assert_pass();
        check_delta_zero_identity(&ba.xi, &dps, 5, 1e-11).assert_pass();
        let r1 = ba.xi.h(0) * ba.xi.h(2) / (ba.xi.h(1) * ba.xi.h(1));
        assert!((r1 - c(0.84)).norm() < 1e-13);
    }

    #[test]
    fn asymptotic_coefficients_match_h_ratios() {
        let (_, dps) = quad_setup();
        let ba = build_psi_phi(&dps, 7).unwrap();
        let nn = dps.n() as i64;
        let sign = c(if nn % 2 == 0 { 1.0 } else { -1.0 });
        for n in 0..=7i64 {
            let psi = &ba.psi[n as usize];
            assert_eq!(psi.lo(), n + 1);
            assert_eq!(psi.hi(), n + nn + 1);
            assert!((psi.coeff(n + nn + 1) - c(1.0)).norm() < 1e-12);
            let low = sign * ba.xi.h(n + 1) / ba.xi.h(n);
            assert!((psi.coeff(n + 1) - low).norm() < 1e-10 * low.norm().max(1.0));

            let phi = &ba.phi[n as usize];
            assert_eq!(phi.lo(), -n - nn - 1);
            assert_eq!(phi.hi(), -n - 1);
            assert!((phi.coeff(-n - 1) - c(1.0)).norm() < 1e-12);
            let low = sign * ba.xi.h(-n - nn - 1) / ba.xi.h(-n - nn - 2);
            assert!((phi.coeff(-n - nn - 1) - low).norm() < 1e-10 * low.norm().max(1.0));
        }
    }

    #[test]
    fn quadrangulation_orthonormality_both_routes() {
        let (_, dps) = quad_setup();
        let ba = build_psi_phi(&dps, 10).unwrap();
        check_orthonormality(&ba, &dps, 9, 1e-10).assert_pass();
        check_delta_zero_identity(&ba.xi, &dps, 8, 1e-10).assert_pass();
    }

    #[test]
    fn quadrangulation_wave_functions_agree_at_pairs() {
        let (_, dps) = quad_setup();
        let ba = build_psi_phi(&dps, 10).unwrap();
        check_doublepoint_values(&ba, &dps, 1e-8).assert_pass();

        let mut perturbed = dps.pairs.clone();
        perturbed[0].1 *= 1.001;
        let broken = DoublePoints::from_pairs(perturbed, dps.branch_points.clone());
        assert!(!check_doublepoint_values(&ba, &broken, 1e-8).is_pass());
    }

    #[test]
    fn reconstructed_operators_have_the_stated_bands() {
        let (data, dps) = quad_setup();
        let size = 14;
        let ba = build_psi_phi(&dps, size - 1).unwrap();
        let ops = reconstruct_operators(&ba, &dps, &data, size).unwrap();
        let q = data.q() as i64;
        let p = data.p() as i64;

        let scale = window_max(&ops.q, size).max(window_max(&ops.p, size)).max(1.0);
        for n in 0..size {
            for m in 0..size {
                let (ni, mi) = (n as i64, m as i64);
                if mi > ni + 1 || mi < ni - q + 1 {
                    assert!(
                        ops.q[n][m].norm() < 1e-8 * scale,
                        "Q out of band at ({n},{m}): {:.3e}",
                        ops.q[n][m]
                    );
                }
                if mi > ni + p - 1 || mi < ni - 1 {
                    assert!(
                        ops.p[n][m].norm() < 1e-10 * scale,
                        "P out of band at ({n},{m}): {:.3e}",
                        ops.p[n][m]
                    );
                }
            }
            if n + 1 < size {
                assert!(
                    (ops.q[n][n + 1] - c(1.0)).norm() < 1e-10,
                    "Q_(n,n+1) at n = {n}: {:.12}",
                    ops.q[n][n + 1]
                );
                let want = data.r * ba.xi.h(n as i64) * ba.xi.h(n as i64 + 2)
                    / (ba.xi.h(n as i64 + 1) * ba.xi.h(n as i64 + 1));
                let got = ops.p[n + 1][n];
                assert!(
                    (got - want).norm() < 1e-10 * want.norm(),
                    "P subdiagonal at n = {}: {got:.12} vs {want:.12}",
                    n + 1
                );
            }
        }
    }

    #[test]
    fn t_matrices_are_triangular_with_stated_entries() {
        let (data, dps) = quad_setup();
        let size = 14;
        let ba = build_psi_phi(&dps, size - 1).unwrap();
        let ops = reconstruct_operators(&ba, &dps, &data, size).unwrap();
        check_t_bands(&ops, &data, 1e-8).assert_pass();
        check_commutator(&ops, &data, 1e-8).assert_pass();
    }

    #[test]
    fn empty_double_point_set_is_rejected() {
        let dps = DoublePoints::from_pairs(vec![], vec![]);
        assert!(matches!(build_psi_phi(&dps, 3), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn json_dump_is_deterministic_and_carries_schema() {
        let dps = synthetic_single();
        let ba = build_psi_phi(&dps, 2).unwrap();
        let v = ba.coefficients_json();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["psi"].as_array().unwrap().len(), 3);
        assert_eq!(serde_json::to_string(&v).unwrap(), serde_json::to_string(&v).unwrap());
    }
}
