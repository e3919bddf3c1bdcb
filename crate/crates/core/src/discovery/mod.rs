//! Discovery diagonals, subdiagonals and discovery matrices.
//!
//! With martingale values sorted as `S^1 >= ... >= S^K`, every bound here is a
//! minimum of the merging function `F` over candidate index sets of the form
//! `B ∪ {k, ..., K}` for a fixed base block `B` (plus `B` alone):
//!
//! * diagonal `d_r`: `B = {r}`;
//! * subdiagonal `d'_r`: `B = {r-1, r}` (or `{1}` when `r = 1`);
//! * matrix entry `D_{r,j}`: `B = {j+1, ..., r}`, empty when `j = r`, and
//!   `F(∅) = 1`.
//!
//! The suffix `{k, ..., K}` ranges over `k = r+1, ..., K`. Instead of
//! re-merging each candidate from scratch, the elementary symmetric sums of
//! all suffixes are built once and combined with the block's sums by
//! convolution, so each candidate costs `O(n^2)` for a mixture of order `n`
//! and a full `K x K` matrix costs `O(K^3 n^2)`.
//!
//! The diagonal and subdiagonal allow *at least* one (two) of the top `r` in
//! the set, so they equal the regularized `D_{r,r-1}` and `D_{r,r-2}`. For
//! mixtures of `U_0` and `U_1` only the base block can attain the minimum and
//! `diagonal_row(r)` is bit-identical to the raw `D_{r,r-1}`; with higher
//! orders the tails `{i, ..., K}`, `i < r`, are scanned as well.

mod brute;
mod color;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logvalue::LogValue;
use crate::martingales::RankedValues;
use crate::merge::{Esp, LnBinomial, MergeSpec};

pub use brute::{brute_force_bound, Constraint, MAX_BRUTE_FORCE};
pub use color::{colorize, Bucket, BUCKET_THRESHOLDS};

/// Which scan produced a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Diagonal,
    Subdiagonal,
}

impl SeriesKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesKind::Diagonal => "diagonal",
            SeriesKind::Subdiagonal => "subdiagonal",
        }
    }
}

/// `n -> d_{r,n}` (or `d'_{r,n}`) for one tracked row, one value per step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalSeries {
    pub r: usize,
    pub kind: SeriesKind,
    pub values: Vec<LogValue>,
}

/// Elementary symmetric sums of every suffix of the ranked values, shared by
/// all scans over one snapshot.
pub(crate) struct SuffixScanner<'a> {
    sorted: &'a [LogValue],
    degree: usize,
    /// `suffix[k]` covers `sorted[k..]`; `suffix[K]` is the empty set.
    suffix: Vec<Esp>,
    binom: LnBinomial,
}

impl<'a> SuffixScanner<'a> {
    pub(crate) fn new(sorted: &'a [LogValue], max_order: usize) -> Self {
        let k = sorted.len();
        let degree = max_order.min(k);
        let mut suffix = vec![Esp::new(degree); k + 1];
        for i in (0..k).rev() {
            let mut e = suffix[i + 1].clone();
            e.push(sorted[i]);
            suffix[i] = e;
        }
        SuffixScanner {
            sorted,
            degree,
            suffix,
            binom: LnBinomial::new(k, degree),
        }
    }

    fn new_block(&self) -> Esp {
        Esp::new(self.degree)
    }

    /// `min(F(B), min_{k > r} F(B ∪ {k..K}))` for a block inside the top `r`.
    fn scan(&self, spec: &MergeSpec, block: &Esp, r: usize, scratch: &mut Esp) -> LogValue {
        let mut best = spec.eval_esp(block.view(), &self.binom);
        for start in r..self.sorted.len() {
            scratch.set_union(block.view(), self.suffix[start].view());
            let v = spec.eval_esp(scratch.view(), &self.binom);
            if v < best {
                best = v;
            }
        }
        best
    }

    /// Minimum of `F` over the tails `sorted[start..]`, `start < end`.
    ///
    /// Once the whole complement of the top `r` is included, taking more of
    /// the top `r` can still lower `F` when it has terms of order 2 or more
    /// (a second small value shrinks every pairwise product). Without such
    /// terms adding a value above the current ones never helps.
    fn tails(&self, spec: &MergeSpec, end: usize) -> LogValue {
        if spec.max_order() < 2 {
            return LogValue::INFINITY;
        }
        (0..end)
            .map(|start| spec.eval_esp(self.suffix[start].view(), &self.binom))
            .min()
            .unwrap_or(LogValue::INFINITY)
    }

    /// `d_r`: `D_{r,r-1}`, lowered by the tails holding two or more of the
    /// top `r`.
    pub(crate) fn diagonal(&self, spec: &MergeSpec, r: usize) -> LogValue {
        let mut block = self.new_block();
        block.push(self.sorted[r - 1]);
        let mut scratch = self.new_block();
        self.scan(spec, &block, r, &mut scratch)
            .min(self.tails(spec, r - 1))
    }

    /// `d'_r`: `D_{r,r-2}` (`D_{1,0}` for `r = 1`), lowered by the tails
    /// holding three or more of the top `r`.
    pub(crate) fn subdiagonal(&self, spec: &MergeSpec, r: usize) -> LogValue {
        let mut block = self.new_block();
        block.push(self.sorted[r - 1]);
        if r >= 2 {
            block.push(self.sorted[r - 2]);
        }
        let mut scratch = self.new_block();
        self.scan(spec, &block, r, &mut scratch)
            .min(self.tails(spec, r.saturating_sub(2)))
    }

    /// Row `r` of the unregularized matrix, `D_{r,0..=r}`.
    fn matrix_row(&self, spec: &MergeSpec, r: usize) -> Vec<LogValue> {
        let mut row = vec![LogValue::ONE; r + 1];
        let mut block = self.new_block();
        let mut scratch = self.new_block();
        for j in (0..=r).rev() {
            if j < r {
                block.push(self.sorted[j]);
            }
            row[j] = self.scan(spec, &block, r, &mut scratch);
        }
        row
    }
}

fn check_row(ranked: &RankedValues, r: usize) -> Result<()> {
    if r == 0 || r > ranked.len() {
        return Err(Error::IndexOutOfRange {
            index: r,
            len: ranked.len(),
        });
    }
    Ok(())
}

/// The chronological discovery diagonal `d_r`: a lower bound on the evidence
/// that all of the top `r` discoveries are justified.
pub fn diagonal_row(ranked: &RankedValues, r: usize, spec: &MergeSpec) -> Result<LogValue> {
    check_row(ranked, r)?;
    Ok(SuffixScanner::new(ranked.sorted(), spec.max_order()).diagonal(spec, r))
}

/// The chronological discovery subdiagonal `d'_r`, allowing one unjustified
/// discovery among the top `r`.
pub fn subdiagonal_row(ranked: &RankedValues, r: usize, spec: &MergeSpec) -> Result<LogValue> {
    check_row(ranked, r)?;
    Ok(SuffixScanner::new(ranked.sorted(), spec.max_order()).subdiagonal(spec, r))
}

/// Lower-triangular matrix `D_{r,j}`, `1 <= r <= K`, `0 <= j <= r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryMatrix {
    k: usize,
    /// `rows[r-1][j]` is `D_{r,j}`.
    rows: Vec<Vec<LogValue>>,
    regularized: bool,
}

impl DiscoveryMatrix {
    /// Builds a matrix from explicit rows; row `r` must hold `r + 1` entries.
    pub fn from_rows(rows: Vec<Vec<LogValue>>, regularized: bool) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != i + 2 {
                return Err(Error::Domain(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    i + 2
                )));
            }
        }
        let m = DiscoveryMatrix {
            k: rows.len(),
            rows,
            regularized: false,
        };
        if regularized && !m.rows_non_increasing() {
            return Err(Error::Domain("rows marked regularized are not non-increasing".into()));
        }
        Ok(DiscoveryMatrix { regularized, ..m })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_regularized(&self) -> bool {
        self.regularized
    }

    /// `D_{r,j}`, or `None` outside `0 <= j <= r <= K`, `r >= 1`.
    pub fn get(&self, r: usize, j: usize) -> Option<LogValue> {
        if r == 0 {
            return None;
        }
        self.rows.get(r - 1).and_then(|row| row.get(j)).copied()
    }

    /// `D_{r,0..=r}`.
    pub fn row(&self, r: usize) -> Option<&[LogValue]> {
        if r == 0 {
            return None;
        }
        self.rows.get(r - 1).map(Vec::as_slice)
    }

    /// `(r, j, D_{r,j})` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, LogValue)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &v)| (i + 1, j, v)))
    }

    fn rows_non_increasing(&self) -> bool {
        self.rows.iter().all(|row| row.windows(2).all(|w| w[1] <= w[0]))
    }
}

/// The full discovery matrix for the ranked values. Rows are computed in
/// parallel.
pub fn discovery_matrix(ranked: &RankedValues, spec: &MergeSpec) -> DiscoveryMatrix {
    let scanner = SuffixScanner::new(ranked.sorted(), spec.max_order());
    let rows = (1..=ranked.len())
        .into_par_iter()
        .map(|r| scanner.matrix_row(spec, r))
        .collect();
    DiscoveryMatrix {
        k: ranked.len(),
        rows,
        regularized: false,
    }
}

/// Replaces each row by its running minimum in `j`, so that confidence
/// regions become intervals. Idempotent.
pub fn regularize(m: &DiscoveryMatrix) -> DiscoveryMatrix {
    let rows = m
        .rows
        .iter()
        .map(|row| {
            let mut acc = LogValue::INFINITY;
            row.iter()
                .map(|&v| {
                    acc = acc.min(v);
                    acc
                })
                .collect()
        })
        .collect();
    DiscoveryMatrix {
        k: m.k,
        rows,
        regularized: true,
    }
}

/// Confidence region `{ j : D_{r,j} < alpha }` for the number of justified
/// discoveries among the top `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRegion {
    pub r: usize,
    pub alpha: f64,
    pub members: Vec<usize>,
    /// Smallest member; `None` when the region is empty (possible only for
    /// `alpha <= 1`).
    pub lower_bound: Option<usize>,
}

pub fn confidence_region(m: &DiscoveryMatrix, r: usize, alpha: f64) -> Result<ConfidenceRegion> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidAlpha(alpha));
    }
    if !m.regularized {
        return Err(Error::Domain("confidence regions need a regularized matrix".into()));
    }
    let row = m.row(r).ok_or(Error::IndexOutOfRange { index: r, len: m.k })?;
    let ln_alpha = if alpha == f64::INFINITY {
        f64::INFINITY
    } else {
        libm::log(alpha)
    };
    let members: Vec<usize> = row
        .iter()
        .enumerate()
        .filter(|(_, v)| v.ln() < ln_alpha)
        .map(|(j, _)| j)
        .collect();
    Ok(ConfidenceRegion {
        r,
        alpha,
        lower_bound: members.first().copied(),
        members,
    })
}

/// Cells where a matrix breaks the monotonicity seen in practice: non-increasing
/// eastward (in `j`), non-decreasing southward (in `r`), non-increasing
/// south-eastward. Each entry is the `(r, j)` of the first cell of the
/// offending pair.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub east: Vec<(usize, usize)>,
    pub south: Vec<(usize, usize)>,
    pub south_east: Vec<(usize, usize)>,
}

impl MonotonicityReport {
    pub fn is_clean(&self) -> bool {
        self.east.is_empty() && self.south.is_empty() && self.south_east.is_empty()
    }
}

/// Checks the three monotonicity directions with slack `tol_ln` on the log
/// scale.
pub fn check_monotonicity(m: &DiscoveryMatrix, tol_ln: f64) -> MonotonicityReport {
    let mut report = MonotonicityReport::default();
    let exceeds = |a: LogValue, b: LogValue| a.ln() > b.ln() + tol_ln && !(a == b);
    for r in 1..=m.k {
        let row = m.row(r).expect("row in range");
        for j in 0..r {
            if exceeds(row[j + 1], row[j]) {
                report.east.push((r, j));
            }
        }
        if let Some(next) = m.row(r + 1) {
            for j in 0..=r {
                if exceeds(row[j], next[j]) {
                    report.south.push((r, j));
                }
                if exceeds(next[j + 1], row[j]) {
                    report.south_east.push((r, j));
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranked(xs: &[f64]) -> RankedValues {
        let v: Vec<LogValue> = xs.iter().map(|&x| LogValue::from_linear(x).unwrap()).collect();
        RankedValues::from_values(&v)
    }

    fn close(v: LogValue, want: f64) -> bool {
        (v.ln() - want.ln()).abs() < 1e-12
    }

    #[test]
    fn diagonal_examples() {
        let rv = ranked(&[8.0, 4.0, 1.0]);
        let u1 = MergeSpec::mean();
        assert!(close(diagonal_row(&rv, 2, &u1).unwrap(), 2.5));
        assert!(close(diagonal_row(&rv, 1, &u1).unwrap(), 13.0 / 3.0));
        assert!(close(diagonal_row(&rv, 3, &u1).unwrap(), 1.0));
        let ones = ranked(&[1.0; 5]);
        for r in 1..=5 {
            assert!(diagonal_row(&ones, r, &MergeSpec::mean_and_pairs()).unwrap().ln().abs() < 1e-12);
        }
        assert!(diagonal_row(&rv, 0, &u1).is_err());
        assert!(diagonal_row(&rv, 4, &u1).is_err());
    }

    #[test]
    fn subdiagonal_examples() {
        let rv = ranked(&[8.0, 4.0, 1.0]);
        let u2 = MergeSpec::nesp(2).unwrap();
        assert!(close(subdiagonal_row(&rv, 2, &u2).unwrap(), 44.0 / 3.0));
        assert!(close(subdiagonal_row(&rv, 1, &u2).unwrap(), 8.0));
        let ones = ranked(&[1.0; 4]);
        assert!(subdiagonal_row(&ones, 3, &u2).unwrap().ln().abs() < 1e-12);
    }

    #[test]
    fn matrix_example() {
        let m = discovery_matrix(&ranked(&[8.0, 4.0, 1.0]), &MergeSpec::mean());
        let want = [
            vec![13.0 / 3.0, 1.0],
            vec![13.0 / 3.0, 2.5, 1.0],
            vec![13.0 / 3.0, 2.5, 1.0, 1.0],
        ];
        for (r, row) in want.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                assert!(close(m.get(r + 1, j).unwrap(), w), "D[{},{}]", r + 1, j);
            }
        }
        assert_eq!(m.get(1, 2), None);
        assert_eq!(m.get(0, 0), None);
    }

    #[test]
    fn matrix_trivial_cases() {
        let m = discovery_matrix(&ranked(&[1.0; 4]), &MergeSpec::mean_and_pairs());
        assert!(m.entries().all(|(_, _, v)| v.ln().abs() < 1e-12));

        let m = discovery_matrix(&ranked(&[7.0]), &MergeSpec::nesp(2).unwrap());
        assert_eq!(m.row(1).unwrap().len(), 2);
        assert!(close(m.get(1, 0).unwrap(), 7.0));
        assert_eq!(m.get(1, 1).unwrap(), LogValue::ONE);
    }

    #[test]
    fn diagonal_is_matrix_diagonal() {
        let rv = ranked(&[40.0, 3.0, 17.0, 0.2, 5.5, 1.0, 0.01, 9.0]);
        let m = discovery_matrix(&rv, &MergeSpec::mean());
        for r in 1..=rv.len() {
            assert_eq!(diagonal_row(&rv, r, &MergeSpec::mean()).unwrap(), m.get(r, r - 1).unwrap());
            if r >= 2 {
                assert_eq!(
                    subdiagonal_row(&rv, r, &MergeSpec::mean()).unwrap(),
                    m.get(r, r - 2).unwrap()
                );
            }
        }
        for spec in [MergeSpec::nesp(2).unwrap(), MergeSpec::mean_and_pairs()] {
            let reg = regularize(&discovery_matrix(&rv, &spec));
            for r in 1..=rv.len() {
                let d = diagonal_row(&rv, r, &spec).unwrap();
                assert!((d.ln() - reg.get(r, r - 1).unwrap().ln()).abs() < 1e-12);
                if r >= 2 {
                    let d2 = subdiagonal_row(&rv, r, &spec).unwrap();
                    assert!((d2.ln() - reg.get(r, r - 2).unwrap().ln()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn two_small_values_beat_one() {
        // r = K: U_2 of the two smallest is below the smallest alone.
        let rv = ranked(&[2.0, 0.5, 0.1]);
        let u2 = MergeSpec::nesp(2).unwrap();
        assert!(close(diagonal_row(&rv, 3, &u2).unwrap(), 0.05));
        assert!(close(subdiagonal_row(&rv, 3, &u2).unwrap(), 0.05));
        assert!(close(diagonal_row(&rv, 3, &MergeSpec::mean()).unwrap(), 0.1));
    }

    #[test]
    fn regularize_examples() {
        let lv = |xs: &[f64]| -> Vec<LogValue> {
            xs.iter().map(|&x| LogValue::from_linear(x).unwrap()).collect()
        };
        let m = DiscoveryMatrix::from_rows(vec![lv(&[3.0, 4.0]), lv(&[5.0, 7.0, 2.0])], false).unwrap();
        let reg = regularize(&m);
        assert!(reg.is_regularized());
        assert_eq!(reg.row(2).unwrap(), lv(&[5.0, 5.0, 2.0]).as_slice());
        assert_eq!(reg.row(1).unwrap(), lv(&[3.0, 3.0]).as_slice());
        assert_eq!(regularize(&reg), reg);

        let flat = DiscoveryMatrix::from_rows(vec![lv(&[2.0, 2.0])], false).unwrap();
        assert_eq!(regularize(&flat).row(1), flat.row(1));
        assert!(DiscoveryMatrix::from_rows(vec![lv(&[1.0])], false).is_err());
        assert!(DiscoveryMatrix::from_rows(vec![lv(&[1.0, 2.0])], true).is_err());
    }

    #[test]
    fn region_examples() {
        let m = regularize(&discovery_matrix(&ranked(&[8.0, 4.0, 1.0]), &MergeSpec::mean()));
        let reg = confidence_region(&m, 2, 3.0).unwrap();
        assert_eq!(reg.members, vec![1, 2]);
        assert_eq!(reg.lower_bound, Some(1));
        assert_eq!(confidence_region(&m, 2, 10.0).unwrap().members, vec![0, 1, 2]);
        assert_eq!(
            confidence_region(&m, 3, f64::INFINITY).unwrap().members,
            vec![0, 1, 2, 3]
        );
        let empty = confidence_region(&m, 3, 0.5).unwrap();
        assert!(empty.members.is_empty() && empty.lower_bound.is_none());
        assert!(matches!(confidence_region(&m, 2, 0.0), Err(Error::InvalidAlpha(_))));
        assert!(confidence_region(&m, 2, -1.0).is_err());
        assert!(confidence_region(&m, 4, 2.0).is_err());
        let raw = discovery_matrix(&ranked(&[8.0, 4.0, 1.0]), &MergeSpec::mean());
        assert!(confidence_region(&raw, 2, 3.0).is_err());
    }

    #[test]
    fn monotonicity_of_small_example() {
        let m = regularize(&discovery_matrix(&ranked(&[8.0, 4.0, 1.0]), &MergeSpec::mean()));
        assert!(check_monotonicity(&m, 1e-12).is_clean());
    }

    #[test]
    fn infinite_values() {
        let mut v: Vec<LogValue> = [3.0, 0.0].iter().map(|&x| LogValue::from_linear(x).unwrap()).collect();
        v.push(LogValue::INFINITY);
        let rv = RankedValues::from_values(&v);
        let m = discovery_matrix(&rv, &MergeSpec::mean());
        // Row 1 (the infinite value): alone or with any suffix stays infinite.
        assert_eq!(m.get(1, 0).unwrap(), LogValue::INFINITY);
        // D_{1,1}: the empty set (1), {0} alone (0) or {3,0}.
        assert_eq!(m.get(1, 1).unwrap(), LogValue::ZERO);
    }
}
