use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logvalue::LogValue;
use crate::martingales::RankedValues;
use crate::merge::{mixture_merge, MergeSpec};

/// Largest `K` accepted by [`brute_force_bound`].
pub const MAX_BRUTE_FORCE: usize = 16;

/// Which index sets `I` enter the infimum, relative to the rejection set `R`
/// of the `r` largest values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `I ∩ R ≠ ∅` (the diagonal).
    IntersectsTop,
    /// `|I ∩ R| >= 2` (the subdiagonal). For `r = 1` this is read as
    /// `|I ∩ R| >= 1`, matching the single-element base block the subdiagonal
    /// scan starts from.
    AtLeastTwoInTop,
    /// `|R \ I| = j` (matrix entry `D_{r,j}`).
    ExactlyMissingFromTop(usize),
}

/// Exact minimum of `F` over every index set satisfying `constraint`, found by
/// enumerating all `2^K` subsets. The empty set contributes `F(∅) = 1` when it
/// qualifies; no qualifying set at all gives `+inf`.
pub fn brute_force_bound(
    values: &[LogValue],
    constraint: Constraint,
    r: usize,
    spec: &MergeSpec,
) -> Result<LogValue> {
    let k = values.len();
    if k > MAX_BRUTE_FORCE {
        return Err(Error::TooLarge {
            what: "brute-force search",
            size: k,
            max: MAX_BRUTE_FORCE,
        });
    }
    if r == 0 || r > k {
        return Err(Error::IndexOutOfRange { index: r, len: k });
    }
    let ranked = RankedValues::from_values(values);
    let top_mask: u32 = ranked.top(r).iter().fold(0, |m, &i| m | (1 << i));
    let qualifies = |mask: u32| {
        let inside = (mask & top_mask).count_ones() as usize;
        match constraint {
            Constraint::IntersectsTop => inside >= 1,
            Constraint::AtLeastTwoInTop => inside >= 2.min(r),
            Constraint::ExactlyMissingFromTop(j) => r.checked_sub(inside) == Some(j),
        }
    };

    let mut best = LogValue::INFINITY;
    let mut subset = Vec::with_capacity(k);
    for mask in 0u32..(1u32 << k) {
        if !qualifies(mask) {
            continue;
        }
        subset.clear();
        subset.extend((0..k).filter(|i| mask & (1 << i) != 0).map(|i| values[i]));
        let v = if subset.is_empty() {
            LogValue::ONE
        } else {
            mixture_merge(spec, &subset)?
        };
        best = best.min(v);
    }
    Ok(best)
}
