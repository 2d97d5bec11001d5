//! Fixed-point solution of the mobile recursion system.
//!
//! Three families of generating functions are solved for simultaneously:
//! `R_i` counts mobiles rooted at a corner with label `i`, `W_{i,j}` counts
//! white half-mobiles and `B_{i,j}` black half-mobiles cut at a flagged edge
//! with labels `i`, `j`.  They are stored as two band windows
//!
//! * `P`: `P_{i,i-1} = R_i`, `P_{i,j} = B_{i,j}` for `i <= j <= i+p-1`,
//! * `Q`: `Q_{i,i+1} = 1`, `Q_{i,j} = W_{i,j}` for `i-q+1 <= j <= i`,
//!
//! subject to the closed system
//!
//! * `B_{i,j} = sum_k black_k (Q^{k-1})_{i,j}` on the upper part,
//! * `W_{i,j} = sum_k white_k (P^{k-1})_{i,j}` on the lower part,
//! * `R_i = 1 / (1 - sum_k white_k (P^{k-1})_{i-1,i})` for `i >= 1`.
//!
//! Every right-hand side term carries at least one coupling factor, so
//! sweeping from the exact order-zero seed (`R = 1`, `B = W = 0`) settles at
//! least one more total-degree order per sweep; the solver detects the fixed
//! point by comparing successive sweeps instead of assuming an iteration
//! count.  All window reads stay inside the tracked validity region, so an
//! undersized window surfaces as an error, never as silently wrong series.

use crate::band::{BandWindow, Part};
use crate::coupling::{CouplingSpec, ScalingMode, WeightValue};
use crate::error::{Error, Result};
use crate::report::Report;
use crate::series::TruncatedSeries;

/// Large-index limits of the solved series.
#[derive(Debug, Clone)]
pub struct SeriesLimits {
    /// `alphas[k]` is the limit of `W_{i,i-k}` for `k = 0..=q-1`.
    pub alphas: Vec<TruncatedSeries>,
    /// `betas[k]` is the limit of `B_{i,i+k}` for `k = 0..=p-1`.
    pub betas: Vec<TruncatedSeries>,
    /// The limit of `R_i`.
    pub r_infinity: TruncatedSeries,
}

/// A solved mobile system: both band windows, the list of `R_i`, and the
/// bookkeeping needed to read entries safely.
#[derive(Debug, Clone)]
pub struct MobileSolution {
    spec: CouplingSpec,
    order: u32,
    n_max: usize,
    window: usize,
    sweeps: usize,
    p: BandWindow<TruncatedSeries>,
    q: BandWindow<TruncatedSeries>,
    r: Vec<TruncatedSeries>,
    r_limit: usize,
}

/// Solves the system from the standard seed `R_i = 1`, `B = W = 0`.
pub fn solve(spec: &CouplingSpec, order: u32, n_max: usize) -> Result<MobileSolution> {
    solve_seeded(spec, order, n_max, None)
}

/// Solves the system from a caller-supplied seed for the `R_i`.
///
/// The seed must have constant term 1 and may otherwise contain arbitrary
/// junk of positive degree; the junk gains one degree per sweep and is gone
/// from a degree-`D` truncation after at most `D+2` sweeps, which makes this
/// entry point a uniqueness test as much as an escape hatch.
pub fn solve_seeded(
    spec: &CouplingSpec,
    order: u32,
    n_max: usize,
    seed: Option<&dyn Fn(usize) -> TruncatedSeries>,
) -> Result<MobileSolution> {
    if n_max < 1 {
        return Err(Error::InvalidConfig("n_max must be at least 1".into()));
    }
    for value in spec.white_values().iter().chain(spec.black_values()) {
        if let WeightValue::Num(c) = value {
            if *c != crate::series::rat_int(0) {
                return Err(Error::InvalidConfig(
                    "series solving needs formal or zero weights; nonzero numerics do not \
                     raise the total degree, so the sweep count bound fails"
                        .into(),
                ));
            }
        }
    }
    let p_deg = spec.p();
    let q_deg = spec.q();
    let sweeps_cap = order as usize + 3;
    let band_max = (p_deg - 1).max(q_deg - 1);
    let default_window = n_max + (order as usize + 2) * band_max + p_deg.max(q_deg);
    // per sweep the trusted region loses (p-2)+(q-2) rows and the limits
    // read B up to p-1 columns above n_max
    let needed = n_max + sweeps_cap * (p_deg + q_deg - 4) + p_deg;
    let window = default_window.max(needed);

    let one = TruncatedSeries::one(spec.vars(), order);
    let zero = TruncatedSeries::zero(spec.vars(), order);
    let white: Vec<TruncatedSeries> = (1..=q_deg).map(|k| spec.white_series(k, order)).collect();
    let black: Vec<TruncatedSeries> = (1..=p_deg).map(|k| spec.black_series(k, order)).collect();

    let mut r: Vec<TruncatedSeries> = (0..window)
        .map(|i| match (&seed, i) {
            (Some(f), i) if i >= 1 => f(i),
            _ => one.clone(),
        })
        .collect();
    let mut r_limit: i64 = window as i64 - 1;
    let mut q_win = assemble_q(None, window, q_deg, &zero, &one);
    let mut p_win;

    let mut sweeps = 0;
    let mut converged = false;
    loop {
        sweeps += 1;
        let b_pot = q_win.apply_potential(&black, Part::Upper);
        p_win = assemble_p(&b_pot, &r, r_limit, window, p_deg, &zero);
        let w_pot = p_win.apply_potential(&white, Part::Full);
        let q_new = assemble_q(Some(&w_pot), window, q_deg, &zero, &one);
        let new_r_limit = w_pot.valid_limit();
        let mut r_new = vec![one.clone(); window];
        for (i, slot) in r_new.iter_mut().enumerate().skip(1) {
            if i as i64 <= new_r_limit {
                *slot = (&one - w_pot.get(i - 1, i)).invert()?;
            }
        }
        let agree = windows_agree(&q_win, &q_new) && lists_agree(&r, &r_new, r_limit.min(new_r_limit));
        q_win = q_new;
        r = r_new;
        r_limit = new_r_limit;
        if agree {
            converged = true;
            break;
        }
        if sweeps >= sweeps_cap {
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "no fixed point after {sweeps_cap} sweeps at order {order}; \
             window {window} or validity tracking is inconsistent"
        )));
    }
    if r_limit < n_max as i64 || p_win.valid_limit() < (n_max + p_deg - 1) as i64 {
        return Err(Error::GuardViolation { i: n_max, j: n_max + p_deg - 1, k: 0, size: window });
    }
    Ok(MobileSolution {
        spec: spec.clone(),
        order,
        n_max,
        window,
        sweeps,
        p: p_win,
        q: q_win,
        r,
        r_limit: r_limit as usize,
    })
}

fn assemble_p(
    b_pot: &BandWindow<TruncatedSeries>,
    r: &[TruncatedSeries],
    r_limit: i64,
    window: usize,
    p_deg: usize,
    zero: &TruncatedSeries,
) -> BandWindow<TruncatedSeries> {
    let mut p = BandWindow::new(window, 1, p_deg - 1, zero);
    for i in 0..window {
        if i >= 1 {
            p.set(i, i - 1, r[i].clone()).expect("subdiagonal is in band");
        }
        for j in i..=(i + p_deg - 1).min(window - 1) {
            p.set(i, j, b_pot.get(i, j).clone()).expect("upper part is in band");
        }
    }
    p.restrict_valid(b_pot.valid_limit().min(r_limit));
    p
}

fn assemble_q(
    w_pot: Option<&BandWindow<TruncatedSeries>>,
    window: usize,
    q_deg: usize,
    zero: &TruncatedSeries,
    one: &TruncatedSeries,
) -> BandWindow<TruncatedSeries> {
    let mut q = BandWindow::new(window, q_deg - 1, 1, zero);
    for i in 0..window {
        if i + 1 < window {
            q.set(i, i + 1, one.clone()).expect("superdiagonal is in band");
        }
        if let Some(pot) = w_pot {
            for j in i.saturating_sub(q_deg - 1)..=i {
                q.set(i, j, pot.get(i, j).clone()).expect("lower part is in band");
            }
        }
    }
    if let Some(pot) = w_pot {
        q.restrict_valid(pot.valid_limit());
    }
    q
}

fn windows_agree(a: &BandWindow<TruncatedSeries>, b: &BandWindow<TruncatedSeries>) -> bool {
    let lim = a.valid_limit().min(b.valid_limit());
    if lim < 0 {
        return false;
    }
    let width = a.a_minus().max(b.a_minus());
    for i in 0..=lim as usize {
        for j in i.saturating_sub(width)..=(i + 1).min(lim as usize) {
            if a.get(i, j) != b.get(i, j) {
                return false;
            }
        }
    }
    true
}

fn lists_agree(a: &[TruncatedSeries], b: &[TruncatedSeries], limit: i64) -> bool {
    if limit < 1 {
        return false;
    }
    (1..=limit as usize).all(|i| a[i] == b[i])
}

impl MobileSolution {
    /// The coupling specification that was solved.
    pub fn spec(&self) -> &CouplingSpec {
        &self.spec
    }

    /// Truncation order of every stored series.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// The index the limits are read at.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Size of the matrix windows.
    pub fn window_size(&self) -> usize {
        self.window
    }

    /// Number of sweeps until two successive iterates agreed.
    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// The window holding `R_i` (subdiagonal) and `B_{i,j}` (upper part).
    pub fn p_window(&self) -> &BandWindow<TruncatedSeries> {
        &self.p
    }

    /// The window holding `W_{i,j}` (lower part) with unit superdiagonal.
    pub fn q_window(&self) -> &BandWindow<TruncatedSeries> {
        &self.q
    }

    /// `R_i` for `i >= 1`, guarded against untrusted window rows.
    pub fn r_series(&self, i: usize) -> Result<&TruncatedSeries> {
        if i < 1 || i > self.r_limit {
            return Err(Error::GuardViolation { i, j: i, k: 0, size: self.window });
        }
        Ok(&self.r[i])
    }

    /// `W_{i,j}` for `j <= i`, guarded against untrusted window rows.
    pub fn w_series(&self, i: usize, j: usize) -> Result<&TruncatedSeries> {
        assert!(j <= i, "white half-mobiles need j <= i");
        if i as i64 > self.q.valid_limit() {
            return Err(Error::GuardViolation { i, j, k: 0, size: self.window });
        }
        Ok(self.q.get(i, j))
    }

    /// `B_{i,j}` for `i <= j`, guarded against untrusted window rows.
    pub fn b_series(&self, i: usize, j: usize) -> Result<&TruncatedSeries> {
        assert!(i <= j, "black half-mobiles need i <= j");
        if j as i64 > self.p.valid_limit() {
            return Err(Error::GuardViolation { i, j, k: 0, size: self.window });
        }
        Ok(self.p.get(i, j))
    }

    fn white_weights(&self) -> Vec<TruncatedSeries> {
        (1..=self.spec.q()).map(|k| self.spec.white_series(k, self.order)).collect()
    }

    fn black_weights(&self) -> Vec<TruncatedSeries> {
        (1..=self.spec.p()).map(|k| self.spec.black_series(k, self.order)).collect()
    }

    /// Reads the stabilized limits at `i = n_max`, comparing against
    /// `i = n_max - 1`; any coefficient still moving is an error, not an
    /// extrapolation.
    pub fn limits(&self) -> Result<SeriesLimits> {
        let hi = self.n_max;
        if hi < 2 || hi < self.spec.q() {
            return Err(Error::InvalidConfig(format!(
                "limits need n_max >= max(2, q); got n_max={hi}, q={}",
                self.spec.q()
            )));
        }
        let lo = hi - 1;
        let r_hi = self.r_series(hi)?;
        if r_hi != self.r_series(lo)? {
            return Err(Error::NotStabilized(format!(
                "R_{lo} and R_{hi} still differ; raise n_max"
            )));
        }
        let mut alphas = Vec::with_capacity(self.spec.q());
        for k in 0..self.spec.q() {
            let a_hi = self.w_series(hi, hi - k)?;
            if a_hi != self.w_series(lo, lo - k)? {
                return Err(Error::NotStabilized(format!(
                    "W at offset -{k} still differs between rows {lo} and {hi}; raise n_max"
                )));
            }
            alphas.push(a_hi.clone());
        }
        let mut betas = Vec::with_capacity(self.spec.p());
        for k in 0..self.spec.p() {
            let b_hi = self.b_series(hi, hi + k)?;
            if b_hi != self.b_series(lo, lo + k)? {
                return Err(Error::NotStabilized(format!(
                    "B at offset +{k} still differs between rows {lo} and {hi}; raise n_max"
                )));
            }
            betas.push(b_hi.clone());
        }
        Ok(SeriesLimits { alphas, betas, r_infinity: r_hi.clone() })
    }

    /// Asserts `[P,Q] = -e_0 e_0^t` entrywise on the trusted interior.
    pub fn check_commutator(&self) -> Report {
        let mut report = Report::new("commutator");
        let comm = self.p.commutator(&self.q);
        let lim = comm.valid_limit();
        if lim < 0 {
            report.violation(0, 0, "no trusted interior");
            return report;
        }
        let one = TruncatedSeries::one(self.spec.vars(), self.order);
        for i in 0..=lim as usize {
            for j in i.saturating_sub(comm.a_minus())..=(i + comm.a_plus()).min(lim as usize) {
                let got = comm.get(i, j);
                let ok = if i == 0 && j == 0 { *got == one.neg() } else { got.is_zero() };
                if !ok {
                    report.violation(i, j, format!("[P,Q] entry is {got}"));
                }
            }
        }
        report
    }

    /// Asserts the dual recursion `R_i = 1 + sum_k black_k (Q^{k-1})_{i,i-1}`
    /// on the trusted interior.
    pub fn check_dual_r(&self) -> Report {
        let mut report = Report::new("dual_r");
        let pot = self.q.apply_potential(&self.black_weights(), Part::Lower);
        let lim = pot.valid_limit().min(self.r_limit as i64);
        let one = TruncatedSeries::one(self.spec.vars(), self.order);
        for i in 1..=lim.max(0) as usize {
            let rhs = &one + pot.get(i, i - 1);
            if rhs != self.r[i] {
                report.violation(
                    i,
                    i - 1,
                    format!("dual form gives {rhs}, recursion gave {}", self.r[i]),
                );
            }
        }
        report
    }

    /// Asserts equality of the two pointed-map edge counts: the diagonal
    /// differences of `QP` and `PQ` agree for `i >= 2` and the `i = 0, 1`
    /// boundary forms hold.
    pub fn check_hk(&self) -> Report {
        let mut report = Report::new("hk_edge_counts");
        let qp = self.q.mul(&self.p);
        let pq = self.p.mul(&self.q);
        let lim = qp.valid_limit().min(pq.valid_limit());
        if lim < 1 {
            report.violation(0, 0, "no trusted interior");
            return report;
        }
        let one = TruncatedSeries::one(self.spec.vars(), self.order);
        let h0 = qp.get(0, 0) - &one;
        let k0 = pq.get(0, 0).clone();
        if h0 != k0 {
            report.violation(0, 0, format!("H_0 = {h0} but K_0 = {k0}"));
        }
        let h1 = qp.get(1, 1) - qp.get(0, 0);
        let k1 = &(pq.get(1, 1) - pq.get(0, 0)) - &one;
        if h1 != k1 {
            report.violation(1, 1, format!("H_1 = {h1} but K_1 = {k1}"));
        }
        for i in 2..=lim as usize {
            let h = qp.get(i, i) - qp.get(i - 1, i - 1);
            let k = pq.get(i, i) - pq.get(i - 1, i - 1);
            if h != k {
                report.violation(i, i, format!("H_{i} = {h} but K_{i} = {k}"));
            }
        }
        report
    }

    /// Asserts the residual band structure of the converged solution:
    /// `P - sum_k black_k Q^{k-1}` vanishes on the upper part and has unit
    /// subdiagonal; `Q - sum_k white_k P^{k-1}` vanishes on the lower part
    /// and has superdiagonal `1/R_{i+1}`.
    pub fn check_residual_bands(&self) -> Report {
        let mut report = Report::new("residual_bands");
        let one = TruncatedSeries::one(self.spec.vars(), self.order);

        let b_pot = self.q.apply_potential(&self.black_weights(), Part::Full);
        let lim = b_pot.valid_limit().min(self.p.valid_limit());
        for i in 0..=lim.max(0) as usize {
            for j in i..=(i + self.spec.p() - 1).min(lim.max(0) as usize) {
                let res = self.p.get(i, j) - b_pot.get(i, j);
                if !res.is_zero() {
                    report.violation(i, j, format!("upper residual of P is {res}"));
                }
            }
            if i >= 1 {
                let res = self.p.get(i, i - 1) - b_pot.get(i, i - 1);
                if res != one {
                    report.violation(i, i - 1, format!("subdiagonal residual of P is {res}"));
                }
            }
        }

        let w_pot = self.p.apply_potential(&self.white_weights(), Part::Full);
        let lim = w_pot.valid_limit().min(self.q.valid_limit()).min(self.r_limit as i64 - 1);
        for i in 0..=lim.max(0) as usize {
            for j in i.saturating_sub(self.spec.q() - 1)..=i {
                let res = self.q.get(i, j) - w_pot.get(i, j);
                if !res.is_zero() {
                    report.violation(i, j, format!("lower residual of Q is {res}"));
                }
            }
            let res = self.q.get(i, i + 1) - w_pot.get(i, i + 1);
            let expect = self.r[i + 1].invert().expect("R_i has constant term 1");
            if res != expect {
                report.violation(i, i + 1, format!("superdiagonal residual of Q is {res}"));
            }
        }
        report
    }

    /// Asserts the square-root-scale parity classes: `R_i` carries only even
    /// powers of the scale variable, `W_{i,j}` and `B_{i,j}` only powers
    /// congruent to `j - i - 1` modulo 2.
    ///
    /// Callable only on solutions in [`ScalingMode::SqrtG`].
    pub fn check_parity(&self) -> Report {
        assert!(
            self.spec.mode() == ScalingMode::SqrtG,
            "parity classes exist only in the square-root scaling"
        );
        let s = self.spec.scale_var().expect("sqrt mode has a scale variable");
        let mut report = Report::new("sqrt_scale_parity");
        for i in 1..=self.r_limit {
            for (m, _) in self.r[i].terms() {
                if m.exp(s) % 2 != 0 {
                    report.violation(i, i, format!("R_{i} has odd scale power in {}", self.r[i].monomial_string(m)));
                    break;
                }
            }
        }
        let q_lim = self.q.valid_limit().max(0) as usize;
        for i in 0..=q_lim {
            for j in i.saturating_sub(self.spec.q() - 1)..=i {
                let want = (j as i64 - i as i64 - 1).rem_euclid(2) as u32;
                for (m, _) in self.q.get(i, j).terms() {
                    if m.exp(s) % 2 != want {
                        report.violation(i, j, format!("W_{{{i},{j}}} breaks parity {want}"));
                        break;
                    }
                }
            }
        }
        let p_lim = self.p.valid_limit().max(0) as usize;
        for i in 0..=p_lim {
            for j in i..=(i + self.spec.p() - 1).min(p_lim) {
                let want = (j as i64 - i as i64 - 1).rem_euclid(2) as u32;
                for (m, _) in self.p.get(i, j).terms() {
                    if m.exp(s) % 2 != want {
                        report.violation(i, j, format!("B_{{{i},{j}}} breaks parity {want}"));
                        break;
                    }
                }
            }
        }
        report
    }

    /// Asserts that every stored coefficient is a nonnegative integer, the
    /// generating-function positivity of the plain-variable expansion.
    ///
    /// Callable only on solutions in [`ScalingMode::Plain`].
    pub fn check_positivity(&self) -> Report {
        assert!(
            self.spec.mode() == ScalingMode::Plain,
            "coefficient positivity is stated for the plain-variable expansion"
        );
        let mut report = Report::new("coefficient_positivity");
        for i in 1..=self.r_limit {
            if !self.r[i].is_nonneg_integer() {
                report.violation(i, i, format!("R_{i} = {} has a bad coefficient", self.r[i]));
            }
        }
        let q_lim = self.q.valid_limit().max(0) as usize;
        for i in 0..=q_lim {
            for j in i.saturating_sub(self.spec.q() - 1)..=i {
                if !self.q.get(i, j).is_nonneg_integer() {
                    report.violation(i, j, format!("W_{{{i},{j}}} has a bad coefficient"));
                }
            }
        }
        let p_lim = self.p.valid_limit().max(0) as usize;
        for i in 0..=p_lim {
            for j in i..=(i + self.spec.p() - 1).min(p_lim) {
                if !self.p.get(i, j).is_nonneg_integer() {
                    report.violation(i, j, format!("B_{{{i},{j}}} has a bad coefficient"));
                }
            }
        }
        report
    }

    /// Asserts the limit identity `sum_k k alpha_k beta_k = R - 1` over
    /// `k = 1..=min(p-1, q-1)`.
    pub fn check_limit_identity(&self, limits: &SeriesLimits) -> Report {
        let mut report = Report::new("limit_sum_identity");
        let mut sum = TruncatedSeries::zero(self.spec.vars(), self.order);
        for k in 1..=(self.spec.p() - 1).min(self.spec.q() - 1) {
            let prod = &limits.alphas[k] * &limits.betas[k];
            sum = &sum + &prod.scale(&crate::series::rat_int(k as i64));
        }
        let one = TruncatedSeries::one(self.spec.vars(), self.order);
        let rhs = &limits.r_infinity - &one;
        if sum != rhs {
            report.violation(0, 0, format!("sum k a_k b_k = {sum} but R - 1 = {rhs}"));
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{rat, rat_int, Monomial};

    fn quad_spec() -> CouplingSpec {
        CouplingSpec::all_vars(4, 2, &[1], &[1, 3]).unwrap()
    }

    /// Builds a series from (coefficient, sparse exponent list) pairs.
    fn series_from(
        spec: &CouplingSpec,
        order: u32,
        terms: &[(i64, &[(&str, u32)])],
    ) -> TruncatedSeries {
        let vars = spec.vars();
        let mut acc = TruncatedSeries::zero(vars, order);
        for (c, pows) in terms {
            let pairs: Vec<(usize, u32)> =
                pows.iter().map(|(n, e)| (vars.index(n).unwrap(), *e)).collect();
            let m = Monomial::from_pairs(vars.len(), &pairs);
            acc = &acc + &TruncatedSeries::monomial(vars, order, m, rat_int(*c));
        }
        acc
    }

    #[test]
    fn zero_couplings_solve_to_unit_r() {
        let white = vec![WeightValue::Zero, WeightValue::Num(rat_int(0))];
        let black = vec![
            WeightValue::Zero,
            WeightValue::Num(rat_int(0)),
            WeightValue::Zero,
            WeightValue::Num(rat_int(0)),
        ];
        let spec = CouplingSpec::new(4, 2, white, black, ScalingMode::Plain).unwrap();
        let sol = solve(&spec, 3, 2).unwrap();
        assert_eq!(sol.sweeps(), 1);
        let one = TruncatedSeries::one(spec.vars(), 3);
        assert_eq!(sol.r_series(1).unwrap(), &one);
        assert_eq!(sol.r_series(2).unwrap(), &one);
        assert!(sol.w_series(3, 2).unwrap().is_zero());
        assert!(sol.b_series(3, 4).unwrap().is_zero());
        let lim = sol.limits().unwrap();
        assert_eq!(lim.r_infinity, one);
        assert!(lim.alphas.iter().all(|a| a.is_zero()));
        assert!(lim.betas.iter().all(|b| b.is_zero()));
    }

    #[test]
    fn solve_rejects_nonzero_numeric_weights() {
        let white = vec![WeightValue::Zero, WeightValue::Num(rat(1, 10))];
        let black = vec![WeightValue::Zero, WeightValue::Var, WeightValue::Zero, WeightValue::Var];
        let spec = CouplingSpec::new(4, 2, white, black, ScalingMode::Plain).unwrap();
        assert!(matches!(solve(&spec, 3, 2), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn quadrangulation_frozen_series() {
        let spec = quad_spec();
        let sol = solve(&spec, 4, 4).unwrap();
        assert!(sol.sweeps() <= 6, "needed {} sweeps", sol.sweeps());

        // boundary row: the depth-3 environment of the label-1 root sees
        // only two of the three stabilized configurations
        let r1 = series_from(
            &spec,
            4,
            &[
                (1, &[]),
                (1, &[("g2", 1), ("gt2", 1)]),
                (2, &[("g2", 2), ("gt4", 1)]),
                (1, &[("g2", 2), ("gt2", 2)]),
            ],
        );
        assert_eq!(sol.r_series(1).unwrap(), &r1);

        let r_stable = series_from(
            &spec,
            4,
            &[
                (1, &[]),
                (1, &[("g2", 1), ("gt2", 1)]),
                (3, &[("g2", 2), ("gt4", 1)]),
                (1, &[("g2", 2), ("gt2", 2)]),
            ],
        );
        for i in 2..=4 {
            assert_eq!(sol.r_series(i).unwrap(), &r_stable, "R_{i}");
        }

        // the only length-3 monotone path gives B_{i,i+3} = gt4 exactly
        let gt4 = spec.black_series(4, 4);
        for i in 0..=3 {
            assert_eq!(sol.b_series(i, i + 3).unwrap(), &gt4);
        }

        // beyond the trusted rows reads refuse instead of lying
        assert!(matches!(
            sol.r_series(sol.window_size()),
            Err(Error::GuardViolation { .. })
        ));
    }

    #[test]
    fn quadrangulation_limit_relations() {
        let spec = quad_spec();
        let sol = solve(&spec, 4, 4).unwrap();
        let lim = sol.limits().unwrap();

        let g2 = spec.white_series(2, 4);
        let gt2 = spec.black_series(2, 4);
        let gt4 = spec.black_series(4, 4);

        assert!(lim.alphas[0].is_zero());
        assert_eq!(lim.alphas[1], &g2 * &lim.r_infinity);
        assert!(lim.betas[0].is_zero());
        assert!(lim.betas[2].is_zero());
        assert_eq!(lim.betas[1], &gt2 + &(&gt4 * &lim.alphas[1]).scale(&rat_int(3)));
        assert_eq!(lim.betas[3], gt4);
        sol.check_limit_identity(&lim).assert_pass();
    }

    #[test]
    fn degree_one_weight_shows_up_directly() {
        // with degree-1 white vertices allowed, W_{i,i} starts at g1
        let spec = CouplingSpec::all_vars(3, 2, &[], &[]).unwrap();
        let sol = solve(&spec, 2, 2).unwrap();
        let w = sol.w_series(2, 2).unwrap();
        let g1 = spec.white_series(1, 2);
        let m = Monomial::var(spec.vars().len(), spec.vars().index("g1").unwrap());
        assert_eq!(w.coeff(&m).unwrap(), rat_int(1));
        let deg1: Vec<_> = w.terms().filter(|(m, _)| m.degree() == 1).collect();
        assert_eq!(deg1.len(), 1, "only g1 at degree 1, got {w}");
        assert_eq!(g1.terms().count(), 1);
    }

    #[test]
    fn window_growth_preserves_trusted_series() {
        let spec = quad_spec();
        let small = solve(&spec, 3, 3).unwrap();
        let large = solve(&spec, 3, 8).unwrap();
        assert!(large.window_size() >= small.window_size() + 5);
        for i in 1..=3 {
            assert_eq!(small.r_series(i).unwrap(), large.r_series(i).unwrap());
        }
        assert_eq!(small.w_series(3, 2).unwrap(), large.w_series(3, 2).unwrap());
        assert_eq!(small.b_series(2, 3).unwrap(), large.b_series(2, 3).unwrap());
    }

    #[test]
    fn junk_seed_converges_to_the_same_solution() {
        let spec = quad_spec();
        let reference = solve(&spec, 3, 3).unwrap();
        let vars = spec.vars().clone();
        let junk = move |i: usize| {
            let mut s = TruncatedSeries::one(&vars, 3);
            let m = Monomial::var(vars.len(), 0);
            s = &s + &TruncatedSeries::monomial(&vars, 3, m, rat(7 * i as i64 + 2, 3));
            s
        };
        let seeded = solve_seeded(&spec, 3, 3, Some(&junk)).unwrap();
        for i in 1..=3 {
            assert_eq!(reference.r_series(i).unwrap(), seeded.r_series(i).unwrap());
        }
        assert_eq!(reference.w_series(3, 2).unwrap(), seeded.w_series(3, 2).unwrap());
        assert_eq!(reference.b_series(1, 2).unwrap(), seeded.b_series(1, 2).unwrap());
    }

    #[test]
    fn structural_checks_pass_on_quadrangulation() {
        let spec = quad_spec();
        let sol = solve(&spec, 3, 3).unwrap();
        sol.check_commutator().assert_pass();
        sol.check_dual_r().assert_pass();
        sol.check_hk().assert_pass();
        sol.check_residual_bands().assert_pass();
        sol.check_positivity().assert_pass();
    }

    #[test]
    fn perturbed_solution_fails_the_checks() {
        let spec = quad_spec();
        let mut sol = solve(&spec, 3, 3).unwrap();
        let bump = sol.p.get(2, 2) + &spec.white_series(2, 3);
        sol.p.set(2, 2, bump).unwrap();
        let report = sol.check_commutator();
        assert!(!report.is_pass());
        assert!(report.violations.iter().any(|v| v.i == 2 || v.j == 2));
    }

    #[test]
    fn limits_error_when_not_stabilized() {
        // R_1 and R_2 differ in the degree-3 coefficient, so n_max = 2 must
        // refuse rather than report either value
        let spec = quad_spec();
        let sol = solve(&spec, 4, 2).unwrap();
        assert!(matches!(sol.limits(), Err(Error::NotStabilized(_))));
    }

    #[test]
    fn sqrt_mode_parity_and_leading_terms() {
        let white = vec![WeightValue::Zero, WeightValue::Var];
        let black = vec![
            WeightValue::Zero,
            WeightValue::Var,
            WeightValue::Zero,
            WeightValue::Var,
        ];
        let spec = CouplingSpec::new(4, 2, white, black, ScalingMode::SqrtG).unwrap();
        let sol = solve(&spec, 5, 3).unwrap();
        sol.check_parity().assert_pass();

        // same count as the plain-mode frozen value, now at s^2 l2^2 lt4
        let vars = spec.vars();
        let m = Monomial::from_pairs(
            vars.len(),
            &[
                (vars.index("s").unwrap(), 2),
                (vars.index("l2").unwrap(), 2),
                (vars.index("lt4").unwrap(), 1),
            ],
        );
        assert_eq!(sol.r_series(3).unwrap().coeff(&m).unwrap(), rat_int(3));

        // black bivalent vertices appear in B_{i,i+1} without scale factors
        let b = sol.b_series(2, 3).unwrap();
        let lt2 = Monomial::var(vars.len(), vars.index("lt2").unwrap());
        assert_eq!(b.coeff(&lt2).unwrap(), rat_int(1));
        for (m, _) in b.terms() {
            assert_eq!(m.exp(vars.index("s").unwrap()) % 2, 0);
        }
    }
}
