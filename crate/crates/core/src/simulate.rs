//! Seeded Gaussian simulations of uncorrelated test martingales.
//!
//! Hypotheses `1..=n_false` are false: their observations come from
//! `true_dist_false_nulls`, the others from `null_dist`. At each step one
//! hypothesis is picked uniformly, one observation is drawn for it, and its
//! martingale is multiplied by the likelihood ratio `bet_dist / null_dist`.
//!
//! Random numbers come from ChaCha8 seeded with `seed_from_u64`. Normal
//! variates use the Box–Muller cosine branch on two 53-bit uniforms, with
//! `libm` for the transcendental functions, so a `(config, seed)` pair
//! reproduces the same bits on every platform. Each step consumes one
//! scheduler draw (`u32` range) followed by two `u64` words.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discovery::{
    discovery_matrix, regularize, DiagonalSeries, DiscoveryMatrix, SeriesKind, SuffixScanner,
};
use crate::error::{Error, Result};
use crate::logvalue::LogValue;
use crate::martingales::{lr_increment, Gaussian, MartingaleTable};
use crate::merge::MergeSpec;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "EVALANCHE_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheduler {
    /// Every hypothesis is tested with probability `1/K` at each step.
    Uniform,
}

/// Full description of one simulated experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k: usize,
    pub n_false: usize,
    pub null_dist: Gaussian,
    pub true_dist_false_nulls: Gaussian,
    pub bet_dist: Gaussian,
    pub steps: u64,
    pub scheduler: Scheduler,
    pub seed: u64,
    /// Rows `r` whose diagonal and subdiagonal are recorded at every step.
    pub tracked_rows: BTreeSet<usize>,
    pub merge_diagonal: MergeSpec,
    pub merge_subdiagonal: MergeSpec,
    pub merge_matrix: MergeSpec,
    /// Steps after which the full discovery matrix is emitted (`0` is the
    /// initial state).
    pub checkpoints: BTreeSet<u64>,
}

impl ExperimentConfig {
    /// 200 hypotheses, the first 100 false (`N(-1,1)` instead of `N(0,1)`),
    /// 10 000 steps, seed 42, rows 98 to 101 tracked, mean for the diagonal
    /// and the matrix, `U_2` for the subdiagonal.
    pub fn paper() -> Self {
        ExperimentConfig {
            k: 200,
            n_false: 100,
            null_dist: Gaussian::standard(),
            true_dist_false_nulls: Gaussian::new(-1.0, 1.0),
            bet_dist: Gaussian::new(-1.0, 1.0),
            steps: 10_000,
            scheduler: Scheduler::Uniform,
            seed: 42,
            tracked_rows: [98, 99, 100, 101].into(),
            merge_diagonal: MergeSpec::mean(),
            merge_subdiagonal: MergeSpec::nesp(2).expect("valid order"),
            merge_matrix: MergeSpec::mean(),
            checkpoints: [10_000].into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.n_false > self.k {
            return bad(format!("n_false = {} exceeds k = {}", self.n_false, self.k));
        }
        for (name, g) in [
            ("null_dist", self.null_dist),
            ("true_dist_false_nulls", self.true_dist_false_nulls),
            ("bet_dist", self.bet_dist),
        ] {
            g.validate()
                .map_err(|e| Error::InvalidConfig(format!("{name}: {e}")))?;
        }
        if let Some(r) = self.tracked_rows.iter().find(|&&r| r == 0 || r > self.k) {
            return bad(format!("tracked row {r} is outside 1..={}", self.k));
        }
        if let Some(c) = self.checkpoints.iter().find(|&&c| c > self.steps) {
            return bad(format!("checkpoint {c} is past the last step {}", self.steps));
        }
        if u32::try_from(self.k).is_err() {
            return bad(format!("k = {} is too large", self.k));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ExperimentConfig {
            seed,
            ..self.clone()
        }
    }
}

/// Full state captured at a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: u64,
    pub table: MartingaleTable,
    pub raw: DiscoveryMatrix,
    pub regularized: DiscoveryMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub final_table: MartingaleTable,
    /// One series per tracked row, ascending in `r`.
    pub diagonal_series: Vec<DiagonalSeries>,
    pub subdiagonal_series: Vec<DiagonalSeries>,
    pub checkpoints: Vec<Checkpoint>,
    /// 0-based indices of the false nulls; evaluation only.
    pub false_nulls: Vec<usize>,
}

impl RunResult {
    pub fn diagonal(&self, r: usize) -> Option<&DiagonalSeries> {
        self.diagonal_series.iter().find(|s| s.r == r)
    }

    pub fn subdiagonal(&self, r: usize) -> Option<&DiagonalSeries> {
        self.subdiagonal_series.iter().find(|s| s.r == r)
    }

    pub fn last_checkpoint(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }
}

/// One standard normal variate (Box–Muller, cosine branch).
fn standard_normal<R: RngCore>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * SCALE; // (0, 1]
    let u2 = (rng.next_u64() >> 11) as f64 * SCALE; // [0, 1)
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * std::f64::consts::PI * u2)
}

fn sample<R: RngCore>(rng: &mut R, g: Gaussian) -> f64 {
    g.mean + g.sd * standard_normal(rng)
}

fn checkpoint(table: &MartingaleTable, spec: &MergeSpec) -> Checkpoint {
    let raw = discovery_matrix(&table.rank(), spec);
    Checkpoint {
        step: table.step_count(),
        table: table.clone(),
        regularized: regularize(&raw),
        raw,
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = MartingaleTable::new(cfg.k);
    let rows: Vec<usize> = cfg.tracked_rows.iter().copied().collect();
    let capacity = usize::try_from(cfg.steps).unwrap_or(0);
    let mut diag: Vec<Vec<LogValue>> = rows.iter().map(|_| Vec::with_capacity(capacity)).collect();
    let mut sub: Vec<Vec<LogValue>> = rows.iter().map(|_| Vec::with_capacity(capacity)).collect();
    let order = cfg
        .merge_diagonal
        .max_order()
        .max(cfg.merge_subdiagonal.max_order());

    let mut checkpoints = Vec::with_capacity(cfg.checkpoints.len());
    if cfg.checkpoints.contains(&0) {
        checkpoints.push(checkpoint(&table, &cfg.merge_matrix));
    }

    for n in 1..=cfg.steps {
        let index = rng.random_range(0..cfg.k as u32) as usize;
        let dist = if index < cfg.n_false {
            cfg.true_dist_false_nulls
        } else {
            cfg.null_dist
        };
        let x = sample(&mut rng, dist);
        table.step(index, lr_increment(x, cfg.null_dist, cfg.bet_dist)?)?;

        if !rows.is_empty() {
            let ranked = table.rank();
            let scanner = SuffixScanner::new(ranked.sorted(), order);
            for (i, &r) in rows.iter().enumerate() {
                diag[i].push(scanner.diagonal(&cfg.merge_diagonal, r));
                sub[i].push(scanner.subdiagonal(&cfg.merge_subdiagonal, r));
            }
        }
        if cfg.checkpoints.contains(&n) {
            checkpoints.push(checkpoint(&table, &cfg.merge_matrix));
        }
    }

    let series = |kind: SeriesKind, data: Vec<Vec<LogValue>>| -> Vec<DiagonalSeries> {
        rows.iter()
            .zip(data)
            .map(|(&r, values)| DiagonalSeries { r, kind, values })
            .collect()
    };
    Ok(RunResult {
        seed: cfg.seed,
        final_table: table,
        diagonal_series: series(SeriesKind::Diagonal, diag),
        subdiagonal_series: series(SeriesKind::Subdiagonal, sub),
        checkpoints,
        false_nulls: (0..cfg.n_false).collect(),
    })
}

/// Order statistics of one quantity across replications, on the log scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub min: LogValue,
    pub q1: LogValue,
    pub median: LogValue,
    pub q3: LogValue,
    pub max: LogValue,
}

impl Summary {
    /// Quartiles interpolate linearly between order statistics of `ln`
    /// values, i.e. geometrically on the linear scale.
    pub fn from_values(values: &[LogValue]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort();
        let q = |p: f64| -> LogValue {
            let h = p * (v.len() - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            let (a, b) = (v[lo], v[hi]);
            let frac = h - lo as f64;
            if a == b || frac == 0.0 {
                a
            } else if !a.ln().is_finite() || !b.ln().is_finite() {
                if frac < 0.5 {
                    a
                } else {
                    b
                }
            } else {
                LogValue::from_ln_unchecked(a.ln() + frac * (b.ln() - a.ln()))
            }
        };
        Some(Summary {
            n: v.len(),
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

/// Per-statistic summaries across seeds, keyed by statistic name:
///
/// * `d[r]`, `d'[r]`: final diagonal and subdiagonal of tracked row `r`;
/// * `D[r,j]`: matrix entries of the last checkpoint on the diagonal,
///   subdiagonal and superdiagonal of each tracked row;
/// * `max_s`: the largest final martingale value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub seeds: Vec<u64>,
    pub statistics: BTreeMap<String, Summary>,
}

impl ReplicationSummary {
    pub fn get(&self, name: &str) -> Option<&Summary> {
        self.statistics.get(name)
    }
}

/// Named scalar statistics of one run, as collected by [`replicate`].
pub fn run_statistics(cfg: &ExperimentConfig, run: &RunResult) -> BTreeMap<String, LogValue> {
    let mut out = BTreeMap::new();
    for s in &run.diagonal_series {
        if let Some(&v) = s.values.last() {
            out.insert(format!("d[{}]", s.r), v);
        }
    }
    for s in &run.subdiagonal_series {
        if let Some(&v) = s.values.last() {
            out.insert(format!("d'[{}]", s.r), v);
        }
    }
    if let Some(cp) = run.last_checkpoint() {
        for &r in &cfg.tracked_rows {
            for j in [r.checked_sub(2), r.checked_sub(1), Some(r)].into_iter().flatten() {
                if let Some(v) = cp.raw.get(r, j) {
                    out.insert(format!("D[{r},{j}]"), v);
                }
            }
        }
    }
    let max_s = run
        .final_table
        .values()
        .iter()
        .copied()
        .max()
        .unwrap_or(LogValue::ONE);
    out.insert("max_s".into(), max_s);
    out
}

/// A rayon pool honouring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(s) = std::env::var(THREADS_ENV) {
        let n: usize = s
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Usage(format!("{THREADS_ENV} must be a positive integer, got {s:?}")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker threads: {e}")))
}

/// Runs every seed (in parallel) and returns the runs in seed order.
pub fn run_many(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<RunResult>> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("no seeds given".into()));
    }
    cfg.validate()?;
    let pool = thread_pool()?;
    pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| run_experiment(&cfg.with_seed(s)))
            .collect()
    })
}

/// Summaries of the statistics of [`run_statistics`] over `seeds`.
pub fn replicate(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<ReplicationSummary> {
    let runs = run_many(cfg, seeds)?;
    Ok(summarize(cfg, &runs))
}

pub fn summarize(cfg: &ExperimentConfig, runs: &[RunResult]) -> ReplicationSummary {
    let mut columns: BTreeMap<String, Vec<LogValue>> = BTreeMap::new();
    for run in runs {
        for (name, v) in run_statistics(cfg, run) {
            columns.entry(name).or_default().push(v);
        }
    }
    ReplicationSummary {
        seeds: runs.iter().map(|r| r.seed).collect(),
        statistics: columns
            .into_iter()
            .filter_map(|(name, vals)| Summary::from_values(&vals).map(|s| (name, s)))
            .collect(),
    }
}
