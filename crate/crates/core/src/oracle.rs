//! Brute-force reference values used to certify the fast paths.
//!
//! Everything here enumerates subsets explicitly and shares no code with the
//! elementary-symmetric recurrences in [`crate::merge`] or the suffix scans in
//! [`crate::discovery`]. Exponential cost; keep inputs small.

use crate::error::{Error, Result};
use crate::logvalue::{ln_sum, LogValue};

/// Largest argument count accepted by [`nesp_by_enumeration`].
pub const MAX_ENUMERATION: usize = 20;

/// `U_n(values)` as the average of the products over all `n`-subsets.
pub fn nesp_by_enumeration(values: &[LogValue], n: usize) -> Result<LogValue> {
    let m = values.len();
    if m == 0 {
        return Err(Error::EmptyInput);
    }
    if m > MAX_ENUMERATION {
        return Err(Error::TooLarge {
            what: "enumeration",
            size: m,
            max: MAX_ENUMERATION,
        });
    }
    if n == 0 {
        return Err(Error::InvalidSpec("NESP order must be at least 1".into()));
    }
    if values.iter().any(|v| v.is_infinite()) {
        return Ok(LogValue::INFINITY);
    }
    let n = n.min(m);
    let mut products = Vec::new();
    for mask in 0u32..(1u32 << m) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let ln: f64 = (0..m)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| values[i].ln())
            .sum();
        products.push(ln);
    }
    // The average of the products; the count is C(m, n).
    let count = products.len() as f64;
    LogValue::from_ln(ln_sum(&products) - count.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let v: Vec<LogValue> = [1.0, 2.0, 3.0, 4.0]
            .iter()
            .map(|&x| LogValue::from_linear(x).unwrap())
            .collect();
        assert!((nesp_by_enumeration(&v, 2).unwrap().to_linear() - 35.0 / 6.0).abs() < 1e-12);
        assert!((nesp_by_enumeration(&v, 3).unwrap().to_linear() - 12.5).abs() < 1e-12);
        assert!(nesp_by_enumeration(&[], 1).is_err());
    }
}
