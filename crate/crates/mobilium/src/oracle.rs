//! Brute-force mobile enumeration, the oracle for low-order coefficients.
//!
//! Mobiles are generated as explicit decorated plane trees directly from the
//! local label rules, never through the band-matrix recursion, then
//! flattened and re-validated against those rules before being counted.
//! Counts are keyed by the weight monomial (one `g_k` per white vertex of
//! degree `k`, one `gt_k` per black vertex of degree `k`, buds included in
//! black degrees), so a count map compares directly with solver series.
//!
//! Cut-edge conventions: a flagged edge carries one label per side; `W_{i,j}`
//! keeps the white side of an edge whose label on the left, walking toward
//! the white vertex, is `i` (so `j <= i`); `B_{i,j}` keeps the black side of
//! an edge whose label on the left, walking toward the black vertex, is `i`
//! (so `i <= j`).  Read clockwise around a vertex, an edge shows its
//! toward-that-vertex right label first; crossings are therefore
//! non-decreasing around white vertices and non-increasing around black
//! ones, matching the local rules.
//!
//! Every label is capped by a window; a run is conclusive only if no
//! generated mobile attains the cap, since a larger window could otherwise
//! admit more mobiles for the same monomials.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::coupling::{CouplingSpec, ScalingMode, WeightValue};
use crate::error::{Error, Result};
use crate::report::Report;
use crate::series::{Monomial, VarSet};
use crate::solver::MobileSolution;

/// A white vertex planted on a labeled vertex with label `ell`: the cyclic
/// environment is the regular edge back to the labeled vertex followed by
/// `elems`, a label path from `ell - 1` back up to `ell`.
#[derive(Debug, Clone)]
struct PlantedWhite {
    elems: Vec<WhiteElem>,
}

/// One step of the label path around a white vertex.
#[derive(Debug, Clone)]
enum WhiteElem {
    /// A labeled vertex at the current height `label` (height drops by 1);
    /// it carries its own fan of planted white subtrees.
    Down { label: usize, planted: Vec<PlantedWhite> },
    /// A flagged edge to a black half-mobile `B_{h,h'}`, raising the height
    /// weakly from `h` to `h'`.
    Flag(BlackHalf),
}

/// The black side of a cut flagged edge with labels `i <= j`: the black
/// vertex plus everything hanging from it, its environment being a label
/// path from `i` to `j`.
#[derive(Debug, Clone)]
struct BlackHalf {
    i: usize,
    j: usize,
    elems: Vec<BlackElem>,
}

/// One step of the label path around a black vertex.
#[derive(Debug, Clone)]
enum BlackElem {
    /// An unweighted bud, raising the height by 1.
    Bud,
    /// A flagged edge to a white half-mobile `W_{h,h'}`, lowering the height
    /// weakly from `h` to `h'`.
    Flag(WhiteHalf),
}

/// The white side of a cut flagged edge with labels `j <= i`.
#[derive(Debug, Clone)]
struct WhiteHalf {
    i: usize,
    j: usize,
    elems: Vec<WhiteElem>,
}

/// A mobile rooted at a marked corner of a labeled vertex: the fan of
/// planted white subtrees clockwise from the mark.
#[derive(Debug, Clone)]
struct RootedMobile {
    label: usize,
    planted: Vec<PlantedWhite>,
}

struct Ctx {
    white_ok: Vec<bool>,
    black_ok: Vec<bool>,
    hi: usize,
}

impl Ctx {
    fn from_spec(spec: &CouplingSpec, hi: usize) -> Result<Ctx> {
        if spec.mode() != ScalingMode::Plain {
            return Err(Error::InvalidConfig("the oracle counts in plain variables".into()));
        }
        let flag = |w: &WeightValue| -> Result<bool> {
            match w {
                WeightValue::Var => Ok(true),
                WeightValue::Zero => Ok(false),
                WeightValue::Num(_) => Err(Error::InvalidConfig(
                    "the oracle needs formal weights to key counts by monomial".into(),
                )),
            }
        };
        let mut white_ok = vec![false];
        for w in spec.white_values() {
            white_ok.push(flag(w)?);
        }
        let mut black_ok = vec![false];
        for w in spec.black_values() {
            black_ok.push(flag(w)?);
        }
        Ok(Ctx { white_ok, black_ok, hi })
    }
}

fn planted_one(ctx: &Ctx, label: usize, budget: usize) -> Vec<(PlantedWhite, usize)> {
    let mut out = Vec::new();
    if budget == 0 || label < 1 {
        return out;
    }
    for k in 1..ctx.white_ok.len() {
        if !ctx.white_ok[k] {
            continue;
        }
        for (elems, used) in white_path(ctx, label - 1, label, k - 1, budget - 1) {
            out.push((PlantedWhite { elems }, used + 1));
        }
    }
    out
}

fn planted_fans(ctx: &Ctx, label: usize, budget: usize) -> Vec<(Vec<PlantedWhite>, usize)> {
    let mut out = vec![(Vec::new(), 0)];
    for (first, u1) in planted_one(ctx, label, budget) {
        for (rest, u2) in planted_fans(ctx, label, budget - u1) {
            let mut fan = vec![first.clone()];
            fan.extend(rest);
            out.push((fan, u1 + u2));
        }
    }
    out
}

fn white_path(
    ctx: &Ctx,
    h: usize,
    target: usize,
    steps: usize,
    budget: usize,
) -> Vec<(Vec<WhiteElem>, usize)> {
    if steps == 0 {
        return if h == target { vec![(Vec::new(), 0)] } else { Vec::new() };
    }
    // height falls by at most 1 per step
    if target + steps < h {
        return Vec::new();
    }
    let mut out = Vec::new();
    if h >= 1 {
        for (planted, u1) in planted_fans(ctx, h, budget) {
            for (rest, u2) in white_path(ctx, h - 1, target, steps - 1, budget - u1) {
                let mut elems = vec![WhiteElem::Down { label: h, planted: planted.clone() }];
                elems.extend(rest);
                out.push((elems, u1 + u2));
            }
        }
    }
    for h2 in h..=ctx.hi {
        for (bh, u1) in black_halves(ctx, h, h2, budget) {
            for (rest, u2) in white_path(ctx, h2, target, steps - 1, budget - u1) {
                let mut elems = vec![WhiteElem::Flag(bh.clone())];
                elems.extend(rest);
                out.push((elems, u1 + u2));
            }
        }
    }
    out
}

fn black_halves(ctx: &Ctx, i: usize, j: usize, budget: usize) -> Vec<(BlackHalf, usize)> {
    let mut out = Vec::new();
    if budget == 0 || i > j {
        return out;
    }
    for k in 1..ctx.black_ok.len() {
        if !ctx.black_ok[k] {
            continue;
        }
        for (elems, used) in black_path(ctx, i, j, k - 1, budget - 1) {
            out.push((BlackHalf { i, j, elems }, used + 1));
        }
    }
    out
}

fn black_path(
    ctx: &Ctx,
    h: usize,
    target: usize,
    steps: usize,
    budget: usize,
) -> Vec<(Vec<BlackElem>, usize)> {
    if steps == 0 {
        return if h == target { vec![(Vec::new(), 0)] } else { Vec::new() };
    }
    // height rises by at most 1 per step
    if target > h + steps {
        return Vec::new();
    }
    let mut out = Vec::new();
    if h + 1 <= ctx.hi {
        for (rest, used) in black_path(ctx, h + 1, target, steps - 1, budget) {
            let mut elems = vec![BlackElem::Bud];
            elems.extend(rest);
            out.push((elems, used));
        }
    }
    for h2 in 0..=h {
        for (wh, u1) in white_halves(ctx, h, h2, budget) {
            for (rest, u2) in black_path(ctx, h2, target, steps - 1, budget - u1) {
                let mut elems = vec![BlackElem::Flag(wh.clone())];
                elems.extend(rest);
                out.push((elems, u1 + u2));
            }
        }
    }
    out
}

fn white_halves(ctx: &Ctx, i: usize, j: usize, budget: usize) -> Vec<(WhiteHalf, usize)> {
    let mut out = Vec::new();
    if budget == 0 || j > i {
        return out;
    }
    for k in 1..ctx.white_ok.len() {
        if !ctx.white_ok[k] {
            continue;
        }
        for (elems, used) in white_path(ctx, i, j, k - 1, budget - 1) {
            out.push((WhiteHalf { i, j, elems }, used + 1));
        }
    }
    out
}

/// Flattened view of a generated tree: the clockwise label sequence around
/// every black and white vertex, ready for rule checking.
#[derive(Debug, Default)]
struct Flat {
    whites: Vec<Vec<FlatWhite>>,
    blacks: Vec<Vec<FlatBlack>>,
    labeled: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
enum FlatWhite {
    Flag { first: usize, second: usize },
    Lab { label: usize },
}

#[derive(Debug, Clone, Copy)]
enum FlatBlack {
    Bud,
    Flag { first: usize, second: usize },
}

fn flatten_planted(parent_label: usize, pw: &PlantedWhite, flat: &mut Flat) {
    let mut cyc = vec![FlatWhite::Lab { label: parent_label }];
    for e in &pw.elems {
        cyc.push(flatten_white_elem(e, flat));
    }
    flat.whites.push(cyc);
}

fn flatten_white_elem(e: &WhiteElem, flat: &mut Flat) -> FlatWhite {
    match e {
        WhiteElem::Down { label, planted } => {
            flat.labeled.push(*label);
            for pw in planted {
                flatten_planted(*label, pw, flat);
            }
            FlatWhite::Lab { label: *label }
        }
        WhiteElem::Flag(bh) => {
            flatten_black_half(bh, flat);
            FlatWhite::Flag { first: bh.i, second: bh.j }
        }
    }
}

fn flatten_black_half(bh: &BlackHalf, flat: &mut Flat) {
    let mut cyc = vec![FlatBlack::Flag { first: bh.j, second: bh.i }];
    for e in &bh.elems {
        match e {
            BlackElem::Bud => cyc.push(FlatBlack::Bud),
            BlackElem::Flag(wh) => {
                flatten_white_half(wh, flat);
                cyc.push(FlatBlack::Flag { first: wh.i, second: wh.j });
            }
        }
    }
    flat.blacks.push(cyc);
}

fn flatten_white_half(wh: &WhiteHalf, flat: &mut Flat) {
    let mut cyc = vec![FlatWhite::Flag { first: wh.j, second: wh.i }];
    for e in &wh.elems {
        cyc.push(flatten_white_elem(e, flat));
    }
    flat.whites.push(cyc);
}

/// Checks the clockwise rule around one white vertex: crossings
/// non-decreasing, constant after a flag, one less after a labeled vertex.
fn check_white_cycle(cyc: &[FlatWhite]) -> Result<()> {
    if cyc.is_empty() {
        return Err(Error::Evaluation("white vertex with no incident edge".into()));
    }
    for (idx, cur) in cyc.iter().enumerate() {
        let next = &cyc[(idx + 1) % cyc.len()];
        let exit = match cur {
            FlatWhite::Flag { first, second } => {
                if second < first {
                    return Err(Error::Evaluation(format!(
                        "white crossing decreases: ({first},{second})"
                    )));
                }
                *second
            }
            FlatWhite::Lab { label } => {
                if *label < 1 {
                    return Err(Error::Evaluation("labeled vertex with label 0".into()));
                }
                label - 1
            }
        };
        let entry = match next {
            FlatWhite::Flag { first, .. } => *first,
            FlatWhite::Lab { label } => *label,
        };
        if entry != exit {
            return Err(Error::Evaluation(format!(
                "white sequence jumps from {exit} to {entry}"
            )));
        }
    }
    Ok(())
}

/// Checks the clockwise rule around one black vertex: crossings
/// non-increasing, buds filling each rise between consecutive flags exactly.
fn check_black_cycle(cyc: &[FlatBlack]) -> Result<()> {
    let start = cyc
        .iter()
        .position(|e| matches!(e, FlatBlack::Flag { .. }))
        .ok_or_else(|| Error::Evaluation("black vertex without a flagged edge".into()))?;
    let mut h = match cyc[start] {
        FlatBlack::Flag { first, second } => {
            if second > first {
                return Err(Error::Evaluation(format!(
                    "black crossing increases: ({first},{second})"
                )));
            }
            second
        }
        FlatBlack::Bud => unreachable!(),
    };
    for step in 1..=cyc.len() {
        match cyc[(start + step) % cyc.len()] {
            FlatBlack::Bud => h += 1,
            FlatBlack::Flag { first, second } => {
                if first != h {
                    return Err(Error::Evaluation(format!(
                        "buds reach {h} but the next black flag starts at {first}"
                    )));
                }
                if second > first {
                    return Err(Error::Evaluation(format!(
                        "black crossing increases: ({first},{second})"
                    )));
                }
                h = second;
            }
        }
    }
    Ok(())
}

fn check_flat(flat: &Flat, dangling_cut: bool) -> Result<()> {
    for cyc in &flat.whites {
        check_white_cycle(cyc)?;
    }
    for cyc in &flat.blacks {
        check_black_cycle(cyc)?;
    }
    for &l in &flat.labeled {
        if l < 1 {
            return Err(Error::Evaluation("labeled vertex with label 0".into()));
        }
    }
    // every edge has exactly one white endpoint, so white degrees count all
    // edges; a cut flag dangles and is not an edge of the tree
    let edges: usize =
        flat.whites.iter().map(|c| c.len()).sum::<usize>() - usize::from(dangling_cut);
    let vertices = flat.whites.len() + flat.blacks.len() + flat.labeled.len();
    if vertices == 0 || edges != vertices - 1 {
        return Err(Error::Evaluation(format!(
            "not a tree: {vertices} vertices, {edges} edges"
        )));
    }
    Ok(())
}

/// Exhaustive counts of mobiles by weight monomial for one root choice.
#[derive(Debug, Clone)]
pub struct OracleCounts {
    vars: Arc<VarSet>,
    budget: usize,
    label_cap: usize,
    /// Whether the label window was wide enough: false as soon as any
    /// generated mobile attains the cap.
    pub conclusive: bool,
    counts: BTreeMap<Monomial, u64>,
    min_zero: BTreeMap<Monomial, u64>,
}

impl OracleCounts {
    /// Count for one monomial (0 when absent).
    pub fn count(&self, m: &Monomial) -> u64 {
        self.counts.get(m).copied().unwrap_or(0)
    }

    /// Count of mobiles whose minimum flag label is 0, per monomial.
    pub fn min_zero_count(&self, m: &Monomial) -> u64 {
        self.min_zero.get(m).copied().unwrap_or(0)
    }

    /// All (monomial, count) pairs in graded-lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, u64)> {
        self.counts.iter().map(|(m, c)| (m, *c))
    }

    /// Largest total degree the run covers exhaustively.
    pub fn budget(&self) -> usize {
        self.budget
    }

    /// The monomial universe the counts are keyed in.
    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    /// CSV rows `monomial,root,count` in graded-lexicographic order.
    pub fn to_csv(&self, root: &str) -> String {
        let mut out = String::from("monomial,root,count\n");
        for (m, c) in &self.counts {
            out.push_str(&format!("{},{root},{c}\n", crate::series::monomial_string(&self.vars, m)));
        }
        out
    }

    fn tally(&mut self, flat: &Flat) {
        let nvars = self.vars.len();
        let mut pairs: BTreeMap<usize, u32> = BTreeMap::new();
        for cyc in &flat.whites {
            let idx = self.vars.index(&format!("g{}", cyc.len())).expect("allowed degree");
            *pairs.entry(idx).or_insert(0) += 1;
        }
        for cyc in &flat.blacks {
            let idx = self.vars.index(&format!("gt{}", cyc.len())).expect("allowed degree");
            *pairs.entry(idx).or_insert(0) += 1;
        }
        let entries: Vec<(usize, u32)> = pairs.into_iter().collect();
        let monomial = Monomial::from_pairs(nvars, &entries);

        let mut min_flag = usize::MAX;
        let mut max_label = 0usize;
        for cyc in &flat.whites {
            for e in cyc {
                if let FlatWhite::Flag { first, second } = e {
                    min_flag = min_flag.min(*first).min(*second);
                    max_label = max_label.max(*first).max(*second);
                }
            }
        }
        for &l in &flat.labeled {
            max_label = max_label.max(l);
        }
        for cyc in &flat.blacks {
            for e in cyc {
                if let FlatBlack::Flag { first, second } = e {
                    min_flag = min_flag.min(*first).min(*second);
                    max_label = max_label.max(*first).max(*second);
                }
            }
        }
        if max_label >= self.label_cap {
            self.conclusive = false;
        }
        *self.counts.entry(monomial.clone()).or_insert(0) += 1;
        if min_flag == 0 {
            *self.min_zero.entry(monomial).or_insert(0) += 1;
        }
    }
}

/// Mobiles with a marked corner at a labeled vertex with label `root`.
///
/// The returned counts exclude the conventional bare-vertex term, so the
/// solver coefficient of the constant monomial exceeds the oracle count
/// by exactly 1.
pub fn enumerate_r(
    spec: &CouplingSpec,
    root: usize,
    max_weighted: usize,
    label_cap: usize,
) -> Result<OracleCounts> {
    if root < 1 || root > label_cap {
        return Err(Error::InvalidConfig(format!(
            "root label {root} outside the window 1..={label_cap}"
        )));
    }
    let ctx = Ctx::from_spec(spec, label_cap)?;
    let mut counts = new_counts(spec, max_weighted, label_cap);
    for (planted, used) in planted_fans(&ctx, root, max_weighted) {
        if used == 0 {
            continue;
        }
        let mobile = RootedMobile { label: root, planted };
        let mut flat = Flat::default();
        flat.labeled.push(mobile.label);
        for pw in &mobile.planted {
            flatten_planted(mobile.label, pw, &mut flat);
        }
        check_flat(&flat, false)?;
        counts.tally(&flat);
    }
    Ok(counts)
}

/// White half-mobiles cut at a flagged edge with labels `i`, `j` (`j <= i`).
pub fn enumerate_w(
    spec: &CouplingSpec,
    i: usize,
    j: usize,
    max_weighted: usize,
    label_cap: usize,
) -> Result<OracleCounts> {
    if j > i || i > label_cap {
        return Err(Error::InvalidConfig(format!(
            "white half-mobile labels need j <= i <= {label_cap}, got ({i},{j})"
        )));
    }
    let ctx = Ctx::from_spec(spec, label_cap)?;
    let mut counts = new_counts(spec, max_weighted, label_cap);
    for (wh, _) in white_halves(&ctx, i, j, max_weighted) {
        let mut flat = Flat::default();
        flatten_white_half(&wh, &mut flat);
        check_flat(&flat, true)?;
        counts.tally(&flat);
    }
    Ok(counts)
}

/// Black half-mobiles cut at a flagged edge with labels `i`, `j` (`i <= j`).
pub fn enumerate_b(
    spec: &CouplingSpec,
    i: usize,
    j: usize,
    max_weighted: usize,
    label_cap: usize,
) -> Result<OracleCounts> {
    if i > j || j > label_cap {
        return Err(Error::InvalidConfig(format!(
            "black half-mobile labels need i <= j <= {label_cap}, got ({i},{j})"
        )));
    }
    let ctx = Ctx::from_spec(spec, label_cap)?;
    let mut counts = new_counts(spec, max_weighted, label_cap);
    for (bh, _) in black_halves(&ctx, i, j, max_weighted) {
        let mut flat = Flat::default();
        flatten_black_half(&bh, &mut flat);
        // the cut flag sits in the black cycle, so every white-cycle element
        // is a real edge
        check_flat(&flat, false)?;
        counts.tally(&flat);
    }
    Ok(counts)
}

fn new_counts(spec: &CouplingSpec, budget: usize, label_cap: usize) -> OracleCounts {
    OracleCounts {
        vars: spec.vars().clone(),
        budget,
        label_cap,
        conclusive: true,
        counts: BTreeMap::new(),
        min_zero: BTreeMap::new(),
    }
}

/// Which solved series an oracle run is compared against.
#[derive(Debug, Clone, Copy)]
pub enum SeriesTarget {
    /// `R_i`.
    R(usize),
    /// `W_{i,j}`.
    W(usize, usize),
    /// `B_{i,j}`.
    B(usize, usize),
}

/// Compares solver coefficients against oracle counts monomial by monomial
/// up to the oracle's exhaustive degree.
pub fn cross_check(
    sol: &MobileSolution,
    target: SeriesTarget,
    counts: &OracleCounts,
) -> Result<Report> {
    if !counts.conclusive {
        return Err(Error::Inconclusive);
    }
    if sol.spec().vars().names() != counts.vars.names() {
        return Err(Error::VariableMismatch(
            "oracle and solver use different variable universes".into(),
        ));
    }
    let (series, name) = match target {
        SeriesTarget::R(i) => (sol.r_series(i)?, format!("R_{i}")),
        SeriesTarget::W(i, j) => (sol.w_series(i, j)?, format!("W_{{{i},{j}}}")),
        SeriesTarget::B(i, j) => (sol.b_series(i, j)?, format!("B_{{{i},{j}}}")),
    };
    let depth = counts.budget.min(sol.order() as usize) as u32;
    let mut report = Report::new(&format!("oracle_{name}"));
    let conventional = |m: &Monomial| -> u64 {
        u64::from(matches!(target, SeriesTarget::R(_)) && m.degree() == 0)
    };
    for (m, c) in series.terms() {
        if m.degree() > depth {
            continue;
        }
        let expect = crate::series::rat_int((counts.count(m) + conventional(m)) as i64);
        if *c != expect {
            report.violation(
                m.degree() as usize,
                0,
                format!(
                    "{name} coefficient of {} is {c}, oracle counted {expect}",
                    crate::series::monomial_string(&counts.vars, m)
                ),
            );
        }
    }
    for (m, count) in counts.iter() {
        if m.degree() > depth {
            continue;
        }
        let got = series.coeff(m)?;
        if got == crate::series::rat_int(0) && count + conventional(m) != 0 {
            report.violation(
                m.degree() as usize,
                0,
                format!(
                    "{name} lacks {} entirely, oracle counted {count}",
                    crate::series::monomial_string(&counts.vars, m)
                ),
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve;

    fn quad_spec() -> CouplingSpec {
        CouplingSpec::all_vars(4, 2, &[1], &[1, 3]).unwrap()
    }

    fn mono(spec: &CouplingSpec, pows: &[(&str, u32)]) -> Monomial {
        let vars = spec.vars();
        let pairs: Vec<(usize, u32)> =
            pows.iter().map(|(n, e)| (vars.index(n).unwrap(), *e)).collect();
        Monomial::from_pairs(vars.len(), &pairs)
    }

    #[test]
    fn zero_budget_counts_nothing() {
        let spec = quad_spec();
        let counts = enumerate_r(&spec, 1, 0, 10).unwrap();
        assert!(counts.conclusive);
        assert_eq!(counts.iter().count(), 0);
    }

    #[test]
    fn quadrangulation_root_counts_frozen() {
        let spec = quad_spec();
        let r1 = enumerate_r(&spec, 1, 3, 12).unwrap();
        assert!(r1.conclusive);
        let u = mono(&spec, &[("g2", 1), ("gt2", 1)]);
        let v = mono(&spec, &[("g2", 2), ("gt4", 1)]);
        assert_eq!(r1.count(&u), 1);
        assert_eq!(r1.count(&v), 2);
        assert_eq!(r1.iter().count(), 2, "exactly two monomials through degree 3");

        // a fan rooted at label 1 starts its path at height 0, so its first
        // flag is labeled 0: every rooted mobile already has minimum 0
        assert_eq!(r1.min_zero_count(&u), 1);
        assert_eq!(r1.min_zero_count(&v), 2);

        let r2 = enumerate_r(&spec, 2, 3, 12).unwrap();
        assert_eq!(r2.count(&u), 1);
        assert_eq!(r2.count(&v), 3);
    }

    #[test]
    fn shift_invariance_relates_adjacent_roots() {
        // mobiles rooted at i with minimum flag 0 account exactly for the
        // difference of counts between roots i and i-1
        let spec = quad_spec();
        let r1 = enumerate_r(&spec, 1, 3, 12).unwrap();
        let r2 = enumerate_r(&spec, 2, 3, 12).unwrap();
        for (m, c2) in r2.iter() {
            assert_eq!(r2.min_zero_count(m), c2 - r1.count(m), "at {m:?}");
        }
    }

    #[test]
    fn half_mobile_counts_frozen() {
        let spec = quad_spec();
        let w10 = enumerate_w(&spec, 1, 0, 3, 12).unwrap();
        assert_eq!(w10.count(&mono(&spec, &[("g2", 1)])), 1);
        assert_eq!(w10.count(&mono(&spec, &[("g2", 2), ("gt2", 1)])), 1);
        assert_eq!(w10.iter().count(), 2);

        let b12 = enumerate_b(&spec, 1, 2, 3, 12).unwrap();
        assert_eq!(b12.count(&mono(&spec, &[("gt2", 1)])), 1);
        assert_eq!(b12.count(&mono(&spec, &[("g2", 1), ("gt4", 1)])), 3);
        assert_eq!(b12.iter().count(), 2);
    }

    #[test]
    fn window_independence_once_conclusive() {
        let spec = quad_spec();
        let narrow = enumerate_r(&spec, 2, 3, 8).unwrap();
        let wide = enumerate_r(&spec, 2, 3, 13).unwrap();
        assert!(narrow.conclusive && wide.conclusive);
        let a: Vec<_> = narrow.iter().map(|(m, c)| (m.clone(), c)).collect();
        let b: Vec<_> = wide.iter().map(|(m, c)| (m.clone(), c)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn tight_window_flags_inconclusive() {
        // one depth-3 environment of root 2 climbs to label 3 == cap
        let spec = quad_spec();
        let counts = enumerate_r(&spec, 2, 3, 3).unwrap();
        assert!(!counts.conclusive);
    }

    #[test]
    fn oracle_agrees_with_solver_on_quadrangulations() {
        let spec = quad_spec();
        let sol = solve(&spec, 3, 3).unwrap();
        for (target, counts) in [
            (SeriesTarget::R(1), enumerate_r(&spec, 1, 3, 12).unwrap()),
            (SeriesTarget::R(2), enumerate_r(&spec, 2, 3, 12).unwrap()),
            (SeriesTarget::W(1, 0), enumerate_w(&spec, 1, 0, 3, 12).unwrap()),
            (SeriesTarget::W(2, 1), enumerate_w(&spec, 2, 1, 3, 12).unwrap()),
            (SeriesTarget::B(1, 2), enumerate_b(&spec, 1, 2, 3, 12).unwrap()),
        ] {
            cross_check(&sol, target, &counts).unwrap().assert_pass();
        }
    }

    #[test]
    fn mismatched_target_is_reported() {
        // R_1 and R_2 differ in the degree-3 coefficient, so checking one
        // against the other's counts must fail with the located monomial
        let spec = quad_spec();
        let sol = solve(&spec, 3, 3).unwrap();
        let r2 = enumerate_r(&spec, 2, 3, 12).unwrap();
        let report = cross_check(&sol, SeriesTarget::R(1), &r2).unwrap();
        assert!(!report.is_pass());
        assert!(report.violations.iter().all(|v| v.i == 3));
    }

    #[test]
    fn inconclusive_counts_refuse_cross_check() {
        let spec = quad_spec();
        let sol = solve(&spec, 3, 3).unwrap();
        let counts = enumerate_r(&spec, 2, 3, 3).unwrap();
        assert!(matches!(
            cross_check(&sol, SeriesTarget::R(2), &counts),
            Err(Error::Inconclusive)
        ));
    }

    #[test]
    fn generation_never_duplicates_structures() {
        let spec = quad_spec();
        let ctx = Ctx::from_spec(&spec, 12).unwrap();
        let all = planted_fans(&ctx, 2, 3);
        let forms: std::collections::HashSet<String> =
            all.iter().map(|(fan, _)| format!("{fan:?}")).collect();
        assert_eq!(forms.len(), all.len());
        assert!(all.len() > 4);
    }

    #[test]
    fn checker_rejects_rule_violations() {
        // white crossing must not decrease
        assert!(check_white_cycle(&[FlatWhite::Flag { first: 2, second: 1 }]).is_err());
        // after a labeled vertex the next entry drops by exactly 1
        assert!(check_white_cycle(&[
            FlatWhite::Lab { label: 2 },
            FlatWhite::Flag { first: 2, second: 2 },
        ])
        .is_err());
        assert!(check_white_cycle(&[
            FlatWhite::Lab { label: 2 },
            FlatWhite::Flag { first: 1, second: 2 },
        ])
        .is_ok());
        // black vertices need a flag, and buds must fill rises exactly
        assert!(check_black_cycle(&[FlatBlack::Bud]).is_err());
        assert!(check_black_cycle(&[
            FlatBlack::Flag { first: 1, second: 0 },
            FlatBlack::Bud,
        ])
        .is_ok());
        assert!(check_black_cycle(&[
            FlatBlack::Flag { first: 1, second: 0 },
            FlatBlack::Bud,
            FlatBlack::Bud,
        ])
        .is_err());
    }
}
