//! Monte Carlo checks of the simulation harness.

use evalanche::martingales::{lr_increment, Gaussian};
use evalanche::simulate::{replicate, run_experiment, run_many, ExperimentConfig};
use evalanche::{LogValue, MartingaleTable, MergeSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn small_null(k: usize, steps: u64) -> ExperimentConfig {
    ExperimentConfig {
        k,
        n_false: 0,
        steps,
        tracked_rows: [1].into(),
        checkpoints: Default::default(),
        ..ExperimentConfig::paper()
    }
}

#[test]
fn product_of_uncorrelated_martingales_is_a_martingale() {
    // Three streams, 6 steps each run, all under the null.
    let (k, steps, runs) = (3, 6, 10_000);
    let bet = Gaussian::new(-1.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut products = Vec::with_capacity(runs);
    let mut first = Vec::with_capacity(runs);
    for _ in 0..runs {
        let mut t = MartingaleTable::new(k);
        for _ in 0..steps {
            let i = rng.random_range(0..k);
            let before = t.values().to_vec();
            t.step(i, lr_increment(standard_normal(&mut rng), Gaussian::standard(), bet).unwrap())
                .unwrap();
            let changed = before.iter().zip(t.values()).filter(|(a, b)| a != b).count();
            assert!(changed <= 1);
        }
        products.push(t.values().iter().copied().product::<LogValue>().to_linear());
        first.push(t.values()[0].to_linear());
    }
    for xs in [&products, &first] {
        let (mean, se) = mean_and_se(xs);
        assert!(mean <= 1.0 + 3.0 * se, "mean {mean} se {se}");
    }
}

#[test]
fn global_null_streams_have_unit_mean() {
    let cfg = small_null(4, 40);
    let seeds: Vec<u64> = (0..2_000).collect();
    let runs = run_many(&cfg, &seeds).unwrap();
    for i in 0..cfg.k {
        let xs: Vec<f64> = runs.iter().map(|r| r.final_table.values()[i].to_linear()).collect();
        let (mean, se) = mean_and_se(&xs);
        assert!(mean <= 1.0 + 3.0 * se, "stream {i}: mean {mean} se {se}");
    }
}

#[test]
fn global_null_has_no_discoveries() {
    let cfg = small_null(200, 10_000);
    let seeds: Vec<u64> = (1..=20).collect();
    let summary = replicate(&cfg, &seeds).unwrap();
    assert!(summary.get("max_s").unwrap().median < LogValue::from_linear(100.0).unwrap());
    assert!(summary.get("d[1]").unwrap().median < LogValue::from_linear(10.0).unwrap());
}

#[test]
fn scheduler_is_uniform() {
    let k = 20u32;
    let draws = 100_000u32;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = vec![0u32; k as usize];
    for _ in 0..draws {
        counts[rng.random_range(0..k) as usize] += 1;
    }
    let p = 1.0 / k as f64;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - draws as f64 * p).abs() <= 5.0 * sd);
    }

    // Through the harness: how often each stream moved, over one long run.
    let cfg = ExperimentConfig {
        bet_dist: Gaussian::new(0.5, 1.0),
        ..small_null(k as usize, draws as u64)
    };
    let run = run_experiment(&cfg).unwrap();
    let touched = run.final_table.values().iter().filter(|v| **v != LogValue::ONE).count();
    assert_eq!(touched, k as usize);
    assert_eq!(run.final_table.step_count(), draws as u64);
}

#[test]
fn runs_are_deterministic() {
    let cfg = ExperimentConfig {
        k: 30,
        n_false: 10,
        steps: 500,
        tracked_rows: [9, 10, 11].into(),
        checkpoints: [0, 250, 500].into(),
        merge_matrix: MergeSpec::mean_and_pairs(),
        ..ExperimentConfig::paper()
    };
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, run_experiment(&cfg.with_seed(43)).unwrap());
    assert_eq!(a.diagonal(10).unwrap().values.len(), 500);
    assert_eq!(a.checkpoints.len(), 3);
    assert!(a.checkpoints[0].raw.entries().all(|(_, _, v)| v.ln().abs() < 1e-12));

    let same = replicate(&cfg, &[7, 7, 7]).unwrap();
    for s in same.statistics.values() {
        assert_eq!(s.min, s.max);
    }
}

#[test]
fn zero_steps_leave_everything_at_one() {
    let cfg = ExperimentConfig {
        k: 5,
        n_false: 2,
        steps: 0,
        tracked_rows: [2].into(),
        checkpoints: [0].into(),
        ..ExperimentConfig::paper()
    };
    let run = run_experiment(&cfg).unwrap();
    assert!(run.final_table.values().iter().all(|v| *v == LogValue::ONE));
    assert!(run.diagonal(2).unwrap().values.is_empty());
    assert!(run.checkpoints[0].raw.entries().all(|(_, _, v)| v == LogValue::ONE));
}
