//! NESPs through the power sums `p_i = Σ s^i`, evaluated on the linear scale.
//!
//! These mix signs and cancel badly when one argument dominates, so they are
//! cross-checks for [`super::nesp_log`] on well-conditioned inputs, not a
//! production path.

use crate::error::{Error, Result};
use crate::logvalue::LogValue;

fn linear_args(values: &[LogValue]) -> Result<Option<Vec<f64>>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.iter().any(|v| v.is_infinite()) {
        return Ok(None);
    }
    values
        .iter()
        .map(|v| {
            let x = v.to_linear();
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::Overflow("argument"))
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn power_sums(xs: &[f64], upto: usize) -> Result<Vec<f64>> {
    // p[0] unused so that p[i] is the ith power sum.
    let mut p = vec![0.0; upto + 1];
    for &x in xs {
        let mut pow = 1.0;
        for pi in p.iter_mut().skip(1) {
            pow *= x;
            *pi += pow;
        }
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("power sums"));
    }
    Ok(p)
}

fn finish(u: f64, what: &'static str) -> Result<LogValue> {
    if !u.is_finite() {
        return Err(Error::Overflow(what));
    }
    if u < -1e-9 {
        return Err(Error::Cancellation(u));
    }
    LogValue::from_linear(u.max(0.0))
}

/// `K (K-1) ... (K-q+1)`.
fn falling(k: usize, q: usize) -> f64 {
    (0..q).map(|i| (k - i) as f64).product()
}

/// `U_n` for `n` in `1..=4` from the explicit power-sum expressions.
pub fn nesp_powersum(values: &[LogValue], n: usize) -> Result<LogValue> {
    if !(1..=4).contains(&n) {
        return Err(Error::UnsupportedOrder(n));
    }
    let Some(xs) = linear_args(values)? else {
        return Ok(LogValue::INFINITY);
    };
    let k = xs.len();
    let q = n.min(k);
    let p = power_sums(&xs, q)?;
    let numerator = match q {
        1 => p[1],
        2 => p[1] * p[1] - p[2],
        3 => p[1].powi(3) - 3.0 * p[2] * p[1] + 2.0 * p[3],
        4 => {
            p[1].powi(4) - 6.0 * p[2] * p[1] * p[1] + 8.0 * p[3] * p[1] + 3.0 * p[2] * p[2]
                - 6.0 * p[4]
        }
        _ => unreachable!(),
    };
    finish(numerator / falling(k, q), "power-sum NESP")
}

/// `U_n = (K-n)!/K! · B_n(p_1, -p_2, 2! p_3, ..., (-1)^{n-1} (n-1)! p_n)`
/// with `B_n` the complete Bell polynomial, built by
/// `B_{m+1} = Σ_i C(m, i) B_{m-i} x_{i+1}`.
pub fn nesp_bell(values: &[LogValue], n: usize) -> Result<LogValue> {
    if n == 0 {
        return Err(Error::InvalidSpec("NESP order must be at least 1".into()));
    }
    let Some(xs) = linear_args(values)? else {
        return Ok(LogValue::INFINITY);
    };
    let k = xs.len();
    let q = n.min(k);
    let p = power_sums(&xs, q)?;

    // x[i] for i in 1..=q; x[0] unused.
    let mut x = vec![0.0; q + 1];
    let mut factorial = 1.0;
    for i in 1..=q {
        let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
        x[i] = sign * factorial * p[i];
        factorial *= i as f64;
    }

    let mut bell = vec![0.0; q + 1];
    bell[0] = 1.0;
    for m in 0..q {
        let mut binom = 1.0;
        let mut acc = 0.0;
        for i in 0..=m {
            acc += binom * bell[m - i] * x[i + 1];
            binom = binom * (m - i) as f64 / (i + 1) as f64;
        }
        if !acc.is_finite() {
            return Err(Error::Overflow("Bell polynomial"));
        }
        bell[m + 1] = acc;
    }
    finish(bell[q] / falling(k, q), "Bell-polynomial NESP")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lvs(xs: &[f64]) -> Vec<LogValue> {
        xs.iter().map(|&x| LogValue::from_linear(x).unwrap()).collect()
    }

    fn assert_close(v: LogValue, want: f64) {
        let got = v.to_linear();
        assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{got} vs {want}");
    }

    #[test]
    fn powersum_examples() {
        assert_close(nesp_powersum(&lvs(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap(), 35.0 / 6.0);
        assert_close(nesp_powersum(&lvs(&[2.5; 7]), 3).unwrap(), 2.5f64.powi(3));
        assert_close(nesp_powersum(&lvs(&[1.0; 50]), 4).unwrap(), 1.0);
        assert!(matches!(
            nesp_powersum(&lvs(&[1.0]), 5),
            Err(Error::UnsupportedOrder(5))
        ));
        assert!(matches!(nesp_powersum(&lvs(&[1.0]), 0), Err(Error::UnsupportedOrder(0))));
    }

    #[test]
    fn bell_examples() {
        let v = lvs(&[1.0, 2.0, 3.0, 4.0]);
        assert_close(nesp_bell(&v, 1).unwrap(), 2.5);
        assert_close(nesp_bell(&v, 3).unwrap(), 12.5);
        assert_close(nesp_bell(&v, 4).unwrap(), 24.0);
        assert_close(nesp_bell(&lvs(&[2.0, 2.0]), 2).unwrap(), 4.0);
    }

    #[test]
    fn overflow_is_reported() {
        let v = lvs(&[1e200, 1.0]);
        assert!(matches!(nesp_powersum(&v, 2), Err(Error::Overflow(_))));
        let huge = vec![LogValue::from_ln(1000.0).unwrap()];
        assert!(matches!(nesp_bell(&huge, 1), Err(Error::Overflow(_))));
    }

    #[test]
    fn dominated_input_cancels() {
        // p_1^2 - p_2 loses the small cross terms entirely.
        let v = lvs(&[1e10, 1e-10, 1e-10]);
        let exact = (1e10 * 1e-10 * 2.0 + 1e-20) / 3.0;
        match nesp_powersum(&v, 2) {
            Ok(ps) => assert!((ps.to_linear() - exact).abs() / exact > 1e-3),
            Err(e) => assert!(matches!(e, Error::Cancellation(_))),
        }
    }

    #[test]
    fn infinite_argument() {
        let mut v = lvs(&[1.0, 2.0]);
        v.push(LogValue::INFINITY);
        assert_eq!(nesp_bell(&v, 2).unwrap(), LogValue::INFINITY);
        assert_eq!(nesp_powersum(&v, 2).unwrap(), LogValue::INFINITY);
    }
}
