//! Uncorrelated test martingales: `K` trajectories of which exactly one, the
//! one picked by the scheduler, moves at each step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logvalue::LogValue;

/// A normal distribution `N(mean, sd^2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub sd: f64,
}

impl Gaussian {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Gaussian { mean, sd }
    }

    pub const fn standard() -> Self {
        Gaussian { mean: 0.0, sd: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() || !(self.sd.is_finite() && self.sd > 0.0) {
            return Err(Error::Domain(format!(
                "N({}, {}^2) needs a finite mean and positive sd",
                self.mean, self.sd
            )));
        }
        Ok(())
    }

    /// `ln` of the density at `x`, dropping the shared `-ln sqrt(2 pi)`.
    fn ln_density_unnormalized(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        -0.5 * z * z - libm::log(self.sd)
    }
}

/// The likelihood ratio `bet(x) / null(x)`, a unit-mean betting factor
/// under the null.
pub fn lr_increment(x: f64, null: Gaussian, bet: Gaussian) -> Result<LogValue> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("observation {x} is not finite")));
    }
    null.validate()?;
    bet.validate()?;
    if null == bet {
        return Ok(LogValue::ONE);
    }
    LogValue::from_ln(bet.ln_density_unnormalized(x) - null.ln_density_unnormalized(x))
}

/// Current values `S^(k)_n` of `K` uncorrelated test martingales.
///
/// Indices are 0-based in this API.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleTable {
    current: Vec<LogValue>,
    step: u64,
}

impl MartingaleTable {
    /// `K` martingales, all at their initial value 1.
    pub fn new(k: usize) -> Self {
        MartingaleTable {
            current: vec![LogValue::ONE; k],
            step: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.current.len()
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn values(&self) -> &[LogValue] {
        &self.current
    }

    /// Multiplies martingale `index` by `multiplier` and leaves the rest alone.
    pub fn step(&mut self, index: usize, multiplier: LogValue) -> Result<()> {
        let len = self.current.len();
        let slot = self
            .current
            .get_mut(index)
            .ok_or(Error::IndexOutOfRange { index, len })?;
        *slot = *slot * multiplier;
        self.step += 1;
        Ok(())
    }

    pub fn rank(&self) -> RankedValues {
        RankedValues::from_values(&self.current)
    }
}

/// Martingale values sorted in decreasing order, with ties broken in favour
/// of the smaller original index.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedValues {
    sorted: Vec<LogValue>,
    perm: Vec<usize>,
}

impl RankedValues {
    pub fn from_values(values: &[LogValue]) -> Self {
        let mut perm: Vec<usize> = (0..values.len()).collect();
        // Stable, so equal values keep ascending index order.
        perm.sort_by(|&a, &b| values[b].cmp(&values[a]));
        let sorted = perm.iter().map(|&i| values[i]).collect();
        RankedValues { sorted, perm }
    }

    /// Wraps values that are already in decreasing order.
    pub fn from_sorted(sorted: Vec<LogValue>) -> Result<Self> {
        if let Some(w) = sorted.windows(2).position(|w| w[0] < w[1]) {
            return Err(Error::Domain(format!(
                "values are not in decreasing order at position {}",
                w + 1
            )));
        }
        let perm = (0..sorted.len()).collect();
        Ok(RankedValues { sorted, perm })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `sorted()[i]` is the `(i+1)`th largest value.
    pub fn sorted(&self) -> &[LogValue] {
        &self.sorted
    }

    /// `perm()[i]` is the original index of `sorted()[i]`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Original indices of the `r` largest values, i.e. the rejection set.
    pub fn top(&self, r: usize) -> &[usize] {
        &self.perm[..r.min(self.perm.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lvs(xs: &[f64]) -> Vec<LogValue> {
        xs.iter().map(|&x| LogValue::from_linear(x).unwrap()).collect()
    }

    fn table(xs: &[f64]) -> MartingaleTable {
        MartingaleTable {
            current: lvs(xs),
            step: 0,
        }
    }

    #[test]
    fn lr_examples() {
        let null = Gaussian::standard();
        let bet = Gaussian::new(-1.0, 1.0);
        let at0 = lr_increment(0.0, null, bet).unwrap();
        assert!((at0.ln() - (-0.5)).abs() < 1e-15);
        let at_m1 = lr_increment(-1.0, null, bet).unwrap();
        assert!((at_m1.ln() - 0.5).abs() < 1e-15);
        assert_eq!(lr_increment(3.7, null, null).unwrap(), LogValue::ONE);
        assert!(lr_increment(f64::NAN, null, bet).is_err());
        assert!(lr_increment(0.0, Gaussian::new(0.0, 0.0), bet).is_err());
    }

    #[test]
    fn lr_matches_closed_form_with_unequal_sd() {
        let null = Gaussian::new(1.0, 2.0);
        let bet = Gaussian::new(-0.5, 0.5);
        let x = 0.3;
        let pdf = |g: Gaussian| {
            (-0.5 * ((x - g.mean) / g.sd).powi(2)).exp() / (g.sd * (2.0 * std::f64::consts::PI).sqrt())
        };
        let want = pdf(bet) / pdf(null);
        let got = lr_increment(x, null, bet).unwrap().to_linear();
        assert!((got - want).abs() < 1e-13 * want);
    }

    #[test]
    fn step_examples() {
        let mut t = MartingaleTable::new(3);
        t.step(1, LogValue::from_linear(3.0).unwrap()).unwrap();
        assert_eq!(t.values(), lvs(&[1.0, 3.0, 1.0]).as_slice());
        assert_eq!(t.step_count(), 1);

        let before = t.values().to_vec();
        t.step(0, LogValue::ONE).unwrap();
        assert_eq!(t.values(), before.as_slice());
        assert_eq!(t.step_count(), 2);

        let mut t = table(&[2.0, 5.0]);
        t.step(0, LogValue::ZERO).unwrap();
        assert_eq!(t.values(), lvs(&[0.0, 5.0]).as_slice());
        // Bankruptcy is absorbing.
        t.step(0, LogValue::INFINITY).unwrap();
        assert_eq!(t.values()[0], LogValue::ZERO);

        assert!(matches!(
            t.step(2, LogValue::ONE),
            Err(Error::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn rank_examples() {
        let r = table(&[4.0, 8.0, 1.0]).rank();
        assert_eq!(r.sorted(), lvs(&[8.0, 4.0, 1.0]).as_slice());
        assert_eq!(r.perm(), &[1, 0, 2]);

        let r = table(&[5.0, 5.0]).rank();
        assert_eq!(r.perm(), &[0, 1]);

        let r = table(&[2.0; 4]).rank();
        assert_eq!(r.perm(), &[0, 1, 2, 3]);
        assert_eq!(r.top(2), &[0, 1]);
    }

    #[test]
    fn from_sorted_checks_order() {
        assert!(RankedValues::from_sorted(lvs(&[1.0, 2.0])).is_err());
        assert!(RankedValues::from_sorted(lvs(&[2.0, 2.0, 1.0])).is_ok());
    }
}
