//! Symmetric martingale merging functions.
//!
//! A merging function here is a convex mixture of normalized elementary
//! symmetric polynomials (NESPs) `U_n = e_n / C(m, n)`, where `e_n` is the
//! `n`th elementary symmetric polynomial of the `m` arguments and `U_0 = 1`.
//!
//! The production path ([`nesp_log`], [`mixture_merge`]) runs the forward
//! recurrence `e_j <- e_j + s * e_{j-1}` entirely in the log domain. Every term
//! is nonnegative, so there is no cancellation however skewed the inputs are.
//! The power-sum formulas in [`powersum`] are kept as cross-checks only.
//!
//! Arity rule: `U_n` applied to `m < n` arguments evaluates `U_m`. With a
//! single argument `U_2` is therefore `U_1`, which is the case the discovery
//! subdiagonal needs.

mod poly;
mod powersum;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logvalue::{ln_add, LogValue};

pub use poly::{
    decompose_symmetric, validate_merging_polynomial, Asymmetry, MultiaffinePoly, Term, Verdict,
    Violation, MAX_POLY_VARS,
};
pub use powersum::{nesp_bell, nesp_powersum};

/// Tolerance on the sum of mixture weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Wire form of a [`MergeSpec`]: `{"kind":"nesp","n":2}` or
/// `{"kind":"mixture","weights":[0,0.5,0.5]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MergeKind {
    Nesp { n: usize },
    /// `weights[n]` is the weight of `U_n`, starting from `U_0 = 1`.
    Mixture { weights: Vec<f64> },
}

/// A family of symmetric merging functions, one per arity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MergeKind", into = "MergeKind")]
pub struct MergeSpec {
    kind: MergeKind,
    /// `(n, ln weight)` for every strictly positive weight.
    terms: Vec<(usize, f64)>,
}

impl MergeSpec {
    pub fn nesp(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("NESP order must be at least 1".into()));
        }
        Ok(MergeSpec {
            kind: MergeKind::Nesp { n },
            terms: vec![(n, 0.0)],
        })
    }

    pub fn mixture(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpec("mixture needs at least one weight".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidSpec(format!("weight {w} is not a nonnegative real")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidSpec(format!("weights sum to {sum}, not 1")));
        }
        let terms = weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(n, w)| (n, libm::log(*w)))
            .collect();
        Ok(MergeSpec {
            kind: MergeKind::Mixture { weights },
            terms,
        })
    }

    /// The mean, `U_1`.
    pub fn mean() -> Self {
        Self::nesp(1).expect("order 1 is valid")
    }

    /// `(U_1 + U_2) / 2`.
    pub fn mean_and_pairs() -> Self {
        Self::mixture(vec![0.0, 0.5, 0.5]).expect("weights are convex")
    }

    pub fn kind(&self) -> &MergeKind {
        &self.kind
    }

    /// Weight vector indexed by order, `weights()[n]` for `U_n`.
    pub fn weights(&self) -> Vec<f64> {
        match &self.kind {
            MergeKind::Nesp { n } => {
                let mut w = vec![0.0; n + 1];
                w[*n] = 1.0;
                w
            }
            MergeKind::Mixture { weights } => weights.clone(),
        }
    }

    /// Highest order with a positive weight.
    pub fn max_order(&self) -> usize {
        self.terms.iter().map(|(n, _)| *n).max().unwrap_or(0)
    }

    /// Whether an infinite argument forces an infinite result, i.e. some
    /// `U_n` with `n >= 1` carries positive weight.
    pub fn propagates_infinity(&self) -> bool {
        self.max_order() >= 1
    }

    /// Evaluates the mixture from precomputed elementary symmetric sums.
    pub(crate) fn eval_esp(&self, esp: EspView<'_>, binom: &LnBinomial) -> LogValue {
        let m = esp.len;
        if m == 0 {
            return LogValue::ONE;
        }
        if esp.infinite > 0 && self.propagates_infinity() {
            return LogValue::INFINITY;
        }
        let mut acc = f64::NEG_INFINITY;
        for &(n, ln_w) in &self.terms {
            let q = n.min(m);
            let ln_u = if q == 0 {
                0.0
            } else {
                esp.ln_e[q] - binom.get(m, q)
            };
            acc = ln_add(acc, ln_w + ln_u);
        }
        LogValue::from_ln_unchecked(acc)
    }
}

impl TryFrom<MergeKind> for MergeSpec {
    type Error = Error;
    fn try_from(kind: MergeKind) -> Result<Self> {
        match kind {
            MergeKind::Nesp { n } => MergeSpec::nesp(n),
            MergeKind::Mixture { weights } => MergeSpec::mixture(weights),
        }
    }
}

impl From<MergeSpec> for MergeKind {
    fn from(spec: MergeSpec) -> Self {
        spec.kind
    }
}

/// CLI form: `u1`, `u2`, ... or `mix:w0,w1,...` with `w0` the weight of `U_0`.
impl FromStr for MergeSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("mix:") {
            let weights = rest
                .split(',')
                .map(|w| {
                    w.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidSpec(format!("bad weight {w:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            return MergeSpec::mixture(weights);
        }
        let n = s
            .strip_prefix('u')
            .or_else(|| s.strip_prefix('U'))
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| Error::InvalidSpec(format!("expected uN or mix:w0,w1,..., got {s:?}")))?;
        MergeSpec::nesp(n)
    }
}

impl fmt::Display for MergeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            MergeKind::Nesp { n } => write!(f, "u{n}"),
            MergeKind::Mixture { weights } => {
                f.write_str("mix:")?;
                for (i, w) in weights.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{w}")?;
                }
                Ok(())
            }
        }
    }
}

/// `ln C(m, q)`.
pub(crate) fn ln_binomial(m: usize, q: usize) -> f64 {
    if q > m {
        return f64::NEG_INFINITY;
    }
    let q = q.min(m - q);
    let mut c = 1.0f64;
    for i in 1..=q {
        c = c * (m - q + i) as f64 / i as f64;
        if !c.is_finite() {
            return (1..=q)
                .map(|i| libm::log((m - q + i) as f64) - libm::log(i as f64))
                .sum();
        }
    }
    libm::log(c)
}

/// Table of `ln C(m, q)` for `m <= max_m`, `q <= max_q`.
#[derive(Clone, Debug)]
pub(crate) struct LnBinomial {
    stride: usize,
    table: Vec<f64>,
}

impl LnBinomial {
    pub(crate) fn new(max_m: usize, max_q: usize) -> Self {
        let stride = max_q + 1;
        let mut table = Vec::with_capacity((max_m + 1) * stride);
        for m in 0..=max_m {
            for q in 0..=max_q {
                table.push(ln_binomial(m, q));
            }
        }
        LnBinomial { stride, table }
    }

    #[inline]
    pub(crate) fn get(&self, m: usize, q: usize) -> f64 {
        self.table[m * self.stride + q]
    }
}

/// Elementary symmetric sums `e_0..e_degree` of a multiset, in the log
/// domain. Infinite members are only counted; `ln_e` covers the finite ones.
#[derive(Clone, Debug)]
pub(crate) struct Esp {
    pub(crate) ln_e: Vec<f64>,
    pub(crate) len: usize,
    pub(crate) infinite: usize,
}

impl Esp {
    pub(crate) fn new(degree: usize) -> Self {
        let mut ln_e = vec![f64::NEG_INFINITY; degree + 1];
        ln_e[0] = 0.0;
        Esp {
            ln_e,
            len: 0,
            infinite: 0,
        }
    }

    pub(crate) fn push(&mut self, v: LogValue) {
        self.len += 1;
        if v.is_infinite() {
            self.infinite += 1;
            return;
        }
        let s = v.ln();
        for j in (1..self.ln_e.len()).rev() {
            self.ln_e[j] = ln_add(self.ln_e[j], s + self.ln_e[j - 1]);
        }
    }

    pub(crate) fn view(&self) -> EspView<'_> {
        EspView {
            ln_e: &self.ln_e,
            len: self.len,
            infinite: self.infinite,
        }
    }

    /// `self <- a ∪ b` via `e_m(A ∪ B) = Σ_i e_i(A) e_{m-i}(B)`, for the
    /// orders this buffer holds.
    pub(crate) fn set_union(&mut self, a: EspView<'_>, b: EspView<'_>) {
        for m in 0..self.ln_e.len() {
            let mut acc = f64::NEG_INFINITY;
            for i in 0..=m {
                acc = ln_add(acc, a.ln_e[i] + b.ln_e[m - i]);
            }
            self.ln_e[m] = acc;
        }
        self.len = a.len + b.len;
        self.infinite = a.infinite + b.infinite;
    }
}

/// Borrowed elementary symmetric sums of one multiset.
#[derive(Clone, Copy, Debug)]
pub(crate) struct EspView<'a> {
    pub(crate) ln_e: &'a [f64],
    pub(crate) len: usize,
    pub(crate) infinite: usize,
}

fn esp_of(values: &[LogValue], degree: usize) -> Esp {
    let mut esp = Esp::new(degree.min(values.len()));
    for &v in values {
        esp.push(v);
    }
    esp
}

/// `U_n(values)`, with `U_{min(n, m)}` used when there are only `m < n`
/// arguments. Any infinite argument makes the result infinite.
pub fn nesp_log(values: &[LogValue], n: usize) -> Result<LogValue> {
    let spec = MergeSpec::nesp(n)?;
    mixture_merge(&spec, values)
}

/// `Σ_n λ_n U_n(values)` for the weights of `spec`.
pub fn mixture_merge(spec: &MergeSpec, values: &[LogValue]) -> Result<LogValue> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let degree = spec.max_order().min(values.len());
    let esp = esp_of(values, degree);
    let binom = LnBinomial::new(values.len(), degree);
    Ok(spec.eval_esp(esp.view(), &binom))
}

/// The two-argument symmetric ie-merging function
/// `½ (e1/(1+e1) + e2/(1+e2)) (1 + e1 e2)`.
///
/// It maps independent e-values to an e-value but is not a mixture of NESPs.
pub fn ie_example_f(e1: LogValue, e2: LogValue) -> LogValue {
    if e1.is_infinite() || e2.is_infinite() {
        return LogValue::INFINITY;
    }
    let odds = |e: LogValue| e.ln() - ln_add(0.0, e.ln());
    let ln_mean_odds = ln_add(odds(e1), odds(e2)) - std::f64::consts::LN_2;
    let ln_prod = if e1.is_zero() || e2.is_zero() {
        f64::NEG_INFINITY
    } else {
        e1.ln() + e2.ln()
    };
    let ln = ln_mean_odds + ln_add(0.0, ln_prod);
    if ln.is_nan() {
        return LogValue::ZERO;
    }
    LogValue::from_ln_unchecked(ln)
}
