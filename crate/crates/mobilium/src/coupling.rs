//! Coupling specifications: which vertex weights exist and how they enter
//! the series ring.
//!
//! A white vertex of degree `k` carries the weight `g_k` (`k = 1..=q`), a
//! black vertex of degree `k` carries `gt_k` (`k = 1..=p`).  Each weight is
//! declared [`WeightValue::Zero`], a formal [`WeightValue::Var`], or an exact
//! numeric [`WeightValue::Num`].
//!
//! Two scaling modes exist.  In [`ScalingMode::Plain`] the weights are the
//! series variables themselves.  In [`ScalingMode::SqrtG`] the weights are
//! `g_k = s^(k-2) l_k` and `gt_k = s^(k-2) lt_k` where `s` tracks the square
//! root of a global scale; degree-1 weights must then vanish so that every
//! stored exponent of `s` stays nonnegative.

use num_complex::Complex64;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::series::{rat_to_f64, Monomial, Rat, TruncatedSeries, VarSet};

/// Declared value of one coupling.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightValue {
    /// The weight is identically zero.
    Zero,
    /// The weight is a formal series variable.
    Var,
    /// The weight is a fixed exact number.
    Num(Rat),
}

/// How weights embed into the series ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingMode {
    /// Weights are the variables.
    Plain,
    /// Weights are `s^(k-2)` times a variable, `s` being a square-root scale.
    SqrtG,
}

/// Full description of a weight family: maximal degrees, per-degree values,
/// scaling mode.
#[derive(Debug, Clone)]
pub struct CouplingSpec {
    p: usize,
    q: usize,
    white: Vec<WeightValue>,
    black: Vec<WeightValue>,
    mode: ScalingMode,
    vars: Arc<VarSet>,
}

impl CouplingSpec {
    /// Builds and validates a coupling specification.
    ///
    /// `white[k-1]` is the weight of white degree `k` (length `q`),
    /// `black[k-1]` the weight of black degree `k` (length `p`).
    pub fn new(
        p: usize,
        q: usize,
        white: Vec<WeightValue>,
        black: Vec<WeightValue>,
        mode: ScalingMode,
    ) -> Result<CouplingSpec> {
        if p < 2 || q < 2 {
            return Err(Error::InvalidConfig(format!("need p,q >= 2, got p={p}, q={q}")));
        }
        if (p - 1) * (q - 1) <= 1 {
            return Err(Error::InvalidConfig(
                "need (p-1)(q-1) > 1 for a nondegenerate weight family".into(),
            ));
        }
        if white.len() != q || black.len() != p {
            return Err(Error::InvalidConfig(format!(
                "weight list lengths must be q={q} and p={p}, got {} and {}",
                white.len(),
                black.len()
            )));
        }
        if white[q - 1] == WeightValue::Zero || black[p - 1] == WeightValue::Zero {
            return Err(Error::InvalidConfig(
                "top-degree weights must not vanish; lower q or p instead".into(),
            ));
        }
        if mode == ScalingMode::SqrtG
            && (white[0] != WeightValue::Zero || black[0] != WeightValue::Zero)
        {
            return Err(Error::InvalidConfig(
                "square-root scaling requires vanishing degree-1 weights".into(),
            ));
        }
        let mut names: Vec<String> = Vec::new();
        match mode {
            ScalingMode::Plain => {
                for (k, w) in white.iter().enumerate() {
                    if *w == WeightValue::Var {
                        names.push(format!("g{}", k + 1));
                    }
                }
                for (k, w) in black.iter().enumerate() {
                    if *w == WeightValue::Var {
                        names.push(format!("gt{}", k + 1));
                    }
                }
            }
            ScalingMode::SqrtG => {
                names.push("s".to_string());
                for (k, w) in white.iter().enumerate() {
                    if *w == WeightValue::Var {
                        names.push(format!("l{}", k + 1));
                    }
                }
                for (k, w) in black.iter().enumerate() {
                    if *w == WeightValue::Var {
                        names.push(format!("lt{}", k + 1));
                    }
                }
            }
        }
        let vars = VarSet::new(names);
        Ok(CouplingSpec { p, q, white, black, mode, vars })
    }

    /// Shorthand: all weights formal variables except an explicit zero list.
    pub fn all_vars(p: usize, q: usize, zero_white: &[usize], zero_black: &[usize]) -> Result<CouplingSpec> {
        let white = (1..=q)
            .map(|k| if zero_white.contains(&k) { WeightValue::Zero } else { WeightValue::Var })
            .collect();
        let black = (1..=p)
            .map(|k| if zero_black.contains(&k) { WeightValue::Zero } else { WeightValue::Var })
            .collect();
        CouplingSpec::new(p, q, white, black, ScalingMode::Plain)
    }

    /// Maximal black degree.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Maximal white degree.
    pub fn q(&self) -> usize {
        self.q
    }

    /// Scaling mode.
    pub fn mode(&self) -> ScalingMode {
        self.mode
    }

    /// The variable universe induced by the declared weights.
    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    /// Declared white weight values, indexed by `k-1`.
    pub fn white_values(&self) -> &[WeightValue] {
        &self.white
    }

    /// Declared black weight values, indexed by `k-1`.
    pub fn black_values(&self) -> &[WeightValue] {
        &self.black
    }

    fn weight_series(&self, value: &WeightValue, k: usize, name: &str, order: u32) -> TruncatedSeries {
        let nv = self.vars.len();
        match (self.mode, value) {
            (_, WeightValue::Zero) => TruncatedSeries::zero(&self.vars, order),
            (ScalingMode::Plain, WeightValue::Var) => {
                let i = self.vars.index(name).expect("declared variable");
                TruncatedSeries::variable(&self.vars, order, i)
            }
            (ScalingMode::Plain, WeightValue::Num(c)) => {
                TruncatedSeries::constant(&self.vars, order, c.clone())
            }
            (ScalingMode::SqrtG, WeightValue::Var) => {
                let s = self.vars.index("s").expect("scale variable");
                let i = self.vars.index(name).expect("declared variable");
                let m = Monomial::from_pairs(nv, &[(s, (k - 2) as u32), (i, 1)]);
                TruncatedSeries::monomial(&self.vars, order, m, Rat::from_integer(1.into()))
            }
            (ScalingMode::SqrtG, WeightValue::Num(c)) => {
                let s = self.vars.index("s").expect("scale variable");
                let m = Monomial::from_pairs(nv, &[(s, (k - 2) as u32)]);
                TruncatedSeries::monomial(&self.vars, order, m, c.clone())
            }
        }
    }

    /// White weight `g_k` as a series, `k = 1..=q`.
    pub fn white_series(&self, k: usize, order: u32) -> TruncatedSeries {
        assert!((1..=self.q).contains(&k));
        let name = match self.mode {
            ScalingMode::Plain => format!("g{k}"),
            ScalingMode::SqrtG => format!("l{k}"),
        };
        self.weight_series(&self.white[k - 1], k, &name, order)
    }

    /// Black weight `gt_k` as a series, `k = 1..=p`.
    pub fn black_series(&self, k: usize, order: u32) -> TruncatedSeries {
        assert!((1..=self.p).contains(&k));
        let name = match self.mode {
            ScalingMode::Plain => format!("gt{k}"),
            ScalingMode::SqrtG => format!("lt{k}"),
        };
        self.weight_series(&self.black[k - 1], k, &name, order)
    }

    /// Index of the square-root scale variable, in `SqrtG` mode.
    pub fn scale_var(&self) -> Option<usize> {
        match self.mode {
            ScalingMode::SqrtG => self.vars.index("s"),
            ScalingMode::Plain => None,
        }
    }
}

/// A fully numeric weight assignment, for the floating-point pipelines.
#[derive(Debug, Clone)]
pub struct NumericCouplings {
    /// `g[k-1]` is the white weight of degree `k`, `k = 1..=q`.
    pub g: Vec<f64>,
    /// `gt[k-1]` is the black weight of degree `k`, `k = 1..=p`.
    pub gt: Vec<f64>,
}

impl NumericCouplings {
    /// Builds from explicit lists.
    pub fn new(g: Vec<f64>, gt: Vec<f64>) -> NumericCouplings {
        NumericCouplings { g, gt }
    }

    /// Maximal white degree.
    pub fn q(&self) -> usize {
        self.g.len()
    }

    /// Maximal black degree.
    pub fn p(&self) -> usize {
        self.gt.len()
    }

    /// Largest absolute weight, used for tolerance scaling.
    pub fn max_abs(&self) -> f64 {
        self.g
            .iter()
            .chain(self.gt.iter())
            .fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// Extracts numeric weights from a spec whose values are all numeric,
    /// substituting `values` for the formal variables in declaration order.
    pub fn from_spec(spec: &CouplingSpec, values: &[f64]) -> Result<NumericCouplings> {
        let assign: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        if assign.len() != spec.vars().len() {
            return Err(Error::Evaluation(format!(
                "expected {} variable values, got {}",
                spec.vars().len(),
                assign.len()
            )));
        }
        let order = 8; // weights are single monomials; any order works
        let mut g = Vec::with_capacity(spec.q());
        for k in 1..=spec.q() {
            g.push(spec.white_series(k, order).eval_numeric(&assign)?.re);
        }
        let mut gt = Vec::with_capacity(spec.p());
        for k in 1..=spec.p() {
            gt.push(spec.black_series(k, order).eval_numeric(&assign)?.re);
        }
        Ok(NumericCouplings { g, gt })
    }
}

/// Converts an exact rational to `f64`.
pub fn weight_to_f64(c: &Rat) -> f64 {
    rat_to_f64(c).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::rat;

    #[test]
    fn quadrangulation_universe() {
        // white degrees up to 2 with g1 = 0; black degrees 2 and 4
        let spec = CouplingSpec::all_vars(4, 2, &[1], &[1, 3]).unwrap();
        assert_eq!(spec.vars().names(), &["g2", "gt2", "gt4"]);
        let g2 = spec.white_series(2, 4);
        assert_eq!(format!("{g2}"), "g2");
        assert!(spec.white_series(1, 4).is_zero());
        assert!(spec.black_series(3, 4).is_zero());
    }

    #[test]
    fn sqrt_mode_embeds_scale_powers() {
        let white = vec![WeightValue::Zero, WeightValue::Var];
        let black = vec![
            WeightValue::Zero,
            WeightValue::Var,
            WeightValue::Zero,
            WeightValue::Var,
        ];
        let spec = CouplingSpec::new(4, 2, white, black, ScalingMode::SqrtG).unwrap();
        assert_eq!(spec.vars().names(), &["s", "l2", "lt2", "lt4"]);
        // gt4 = s^2 lt4
        let gt4 = spec.black_series(4, 6);
        assert_eq!(format!("{gt4}"), "s^2*lt4");
        // gt2 = lt2 with no scale factor
        assert_eq!(format!("{}", spec.black_series(2, 6)), "lt2");
    }

    #[test]
    fn sqrt_mode_rejects_degree_one() {
        let white = vec![WeightValue::Var, WeightValue::Var];
        let black = vec![WeightValue::Zero, WeightValue::Var, WeightValue::Var];
        assert!(CouplingSpec::new(3, 2, white, black, ScalingMode::SqrtG).is_err());
    }

    #[test]
    fn numeric_extraction() {
        let white = vec![WeightValue::Zero, WeightValue::Num(rat(1, 10))];
        let black = vec![
            WeightValue::Zero,
            WeightValue::Var,
            WeightValue::Zero,
            WeightValue::Num(rat(1, 20)),
        ];
        let spec = CouplingSpec::new(4, 2, white, black, ScalingMode::Plain).unwrap();
        let nc = NumericCouplings::from_spec(&spec, &[0.1]).unwrap();
        assert_eq!(nc.g, vec![0.0, 0.1]);
        assert_eq!(nc.gt, vec![0.0, 0.1, 0.0, 0.05]);
    }

    #[test]
    fn degenerate_family_rejected() {
        assert!(CouplingSpec::all_vars(2, 2, &[], &[]).is_err());
        assert!(CouplingSpec::all_vars(1, 5, &[], &[]).is_err());
    }
}
