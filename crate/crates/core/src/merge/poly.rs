//! Explicit multiaffine polynomials: a desk tool for checking whether a
//! candidate merging function is positive and normalized, and for recovering
//! NESP mixture weights from a symmetric one.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{MergeSpec, WEIGHT_SUM_TOLERANCE};
use crate::error::{Error, Result};

/// Variables are tracked as bits of a `u32`.
pub const MAX_POLY_VARS: usize = 20;

/// Coefficients of equal-size subsets must agree within this to count as
/// symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// One monomial; `vars` are 1-based variable indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub vars: Vec<usize>,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct PolyRepr {
    k: usize,
    terms: Vec<Term>,
}

/// A polynomial in `k <= 20` variables where no variable has degree above 1.
/// Keys are subsets of variables as bitmasks; missing keys are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct MultiaffinePoly {
    k: usize,
    coeffs: BTreeMap<u32, f64>,
}

fn mask_to_vars(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect()
}

impl MultiaffinePoly {
    pub fn new(k: usize) -> Result<Self> {
        if k > MAX_POLY_VARS {
            return Err(Error::TooLarge {
                what: "polynomial",
                size: k,
                max: MAX_POLY_VARS,
            });
        }
        Ok(MultiaffinePoly {
            k,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn from_terms<I>(k: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let mut p = Self::new(k)?;
        for (vars, c) in terms {
            p.set(&vars, c)?;
        }
        Ok(p)
    }

    /// The explicit polynomial of `spec` in `k` variables. Weights of orders
    /// above `k` fold into `U_k`.
    pub fn from_merge_spec(spec: &MergeSpec, k: usize) -> Result<Self> {
        let mut p = Self::new(k)?;
        let mut lambda = vec![0.0; k + 1];
        for (n, w) in spec.weights().into_iter().enumerate() {
            lambda[n.min(k)] += w;
        }
        for mask in 0u32..(1u32 << k) {
            let n = mask.count_ones() as usize;
            if lambda[n] > 0.0 {
                p.coeffs.insert(mask, lambda[n] * unit_coefficient(k, n));
            }
        }
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Sets the coefficient of the monomial over `vars` (1-based). A zero
    /// coefficient removes the term.
    pub fn set(&mut self, vars: &[usize], coeff: f64) -> Result<()> {
        let mut mask = 0u32;
        for &v in vars {
            if v == 0 || v > self.k {
                return Err(Error::IndexOutOfRange {
                    index: v,
                    len: self.k,
                });
            }
            let bit = 1u32 << (v - 1);
            if mask & bit != 0 {
                return Err(Error::Domain(format!(
                    "variable {v} repeated; the polynomial must be multiaffine"
                )));
            }
            mask |= bit;
        }
        if !coeff.is_finite() {
            return Err(Error::Domain(format!("coefficient {coeff} is not finite")));
        }
        if coeff == 0.0 {
            self.coeffs.remove(&mask);
        } else {
            self.coeffs.insert(mask, coeff);
        }
        Ok(())
    }

    pub fn coefficient(&self, vars: &[usize]) -> f64 {
        if vars.iter().any(|&v| v == 0 || v > self.k) {
            return 0.0;
        }
        let mask = vars.iter().fold(0u32, |m, v| m | (1 << (v - 1)));
        self.coeffs.get(&mask).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.coeffs.iter().map(|(&m, &c)| Term {
            vars: mask_to_vars(m),
            coeff: c,
        })
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.k {
            return Err(Error::Domain(format!(
                "expected {} coordinates, got {}",
                self.k,
                point.len()
            )));
        }
        Ok(self
            .coeffs
            .iter()
            .map(|(&mask, &c)| {
                (0..self.k)
                    .filter(|i| mask & (1 << i) != 0)
                    .fold(c, |acc, i| acc * point[i])
            })
            .sum())
    }
}

impl TryFrom<PolyRepr> for MultiaffinePoly {
    type Error = Error;
    fn try_from(r: PolyRepr) -> Result<Self> {
        let mut p = MultiaffinePoly::new(r.k)?;
        let mut seen = BTreeSet::new();
        for t in r.terms {
            let mut key = t.vars.clone();
            key.sort_unstable();
            if !seen.insert(key) {
                return Err(Error::Parse(format!("monomial {:?} listed twice", t.vars)));
            }
            p.set(&t.vars, t.coeff)?;
        }
        Ok(p)
    }
}

impl From<MultiaffinePoly> for PolyRepr {
    fn from(p: MultiaffinePoly) -> Self {
        PolyRepr {
            k: p.k,
            terms: p.terms().collect(),
        }
    }
}

/// Coefficient of each monomial of `U_n` in `k` variables, `1 / C(k, n)`.
fn unit_coefficient(k: usize, n: usize) -> f64 {
    1.0 / binomial(k, n)
}

fn binomial(k: usize, n: usize) -> f64 {
    (1..=n).fold(1.0, |c, i| c * (k - n + i) as f64 / i as f64)
}

/// Why a polynomial is not a merging function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    NonPositiveCoefficient { vars: Vec<usize>, coeff: f64 },
    NotNormalized { sum: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    Invalid { violations: Vec<Violation> },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// A multiaffine polynomial is a martingale merging function iff every
/// coefficient is positive and the value at all-ones is 1.
pub fn validate_merging_polynomial(p: &MultiaffinePoly) -> Verdict {
    let mut violations: Vec<Violation> = p
        .terms()
        .filter(|t| t.coeff <= 0.0)
        .map(|t| Violation::NonPositiveCoefficient {
            vars: t.vars,
            coeff: t.coeff,
        })
        .collect();
    let sum = compensated_sum(p.coeffs.values().copied());
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        violations.push(Violation::NotNormalized { sum });
    }
    if violations.is_empty() {
        Verdict::Valid
    } else {
        Verdict::Invalid { violations }
    }
}

/// Neumaier summation; a 20-variable mixture has up to 2^20 terms.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Two same-degree monomials with different coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Asymmetry {
    pub first: Vec<usize>,
    pub first_coeff: f64,
    pub second: Vec<usize>,
    pub second_coeff: f64,
}

impl std::fmt::Display for Asymmetry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "not symmetric: coefficient of {:?} is {} but of {:?} is {}",
            self.first, self.first_coeff, self.second, self.second_coeff
        )
    }
}

impl std::error::Error for Asymmetry {}

/// Writes a symmetric polynomial as `Σ_n λ_n U_n` and returns `λ_0..λ_k`.
///
/// The weights are convex exactly when the polynomial is a valid merging
/// function; check them with [`MergeSpec::mixture`].
pub fn decompose_symmetric(p: &MultiaffinePoly) -> Result<Vec<f64>, Asymmetry> {
    let k = p.k;
    let mut reference: Vec<Option<(u32, f64)>> = vec![None; k + 1];
    for mask in 0u32..(1u32 << k) {
        let n = mask.count_ones() as usize;
        let c = p.coeffs.get(&mask).copied().unwrap_or(0.0);
        match reference[n] {
            None => reference[n] = Some((mask, c)),
            Some((first, c0)) => {
                if (c - c0).abs() > SYMMETRY_TOLERANCE {
                    return Err(Asymmetry {
                        first: mask_to_vars(first),
                        first_coeff: c0,
                        second: mask_to_vars(mask),
                        second_coeff: c,
                    });
                }
            }
        }
    }
    Ok(reference
        .iter()
        .enumerate()
        .map(|(n, r)| r.map_or(0.0, |(_, c)| c / unit_coefficient(k, n)))
        .collect())
}
