//! Batch-means error estimates pooled over independent chains.

use serde::{Deserialize, Serialize};

/// Batches cut from each chain's series.
pub const BATCHES_PER_CHAIN: usize = 32;

/// Smallest pooled batch count for a reportable estimate.
pub const MIN_BATCHES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub batches: usize,
    pub effective_samples: f64,
    pub samples: usize,
    pub chain_means: Vec<f64>,
}

impl Estimate {
    /// A value known without sampling error.
    pub fn exact(value: f64, samples: usize, chains: usize) -> Estimate {
        Estimate {
            mean: value,
            stderr: 0.0,
            batches: BATCHES_PER_CHAIN * chains,
            effective_samples: samples as f64,
            samples,
            chain_means: vec![value; chains],
        }
    }

    pub fn is_reportable(&self) -> bool {
        self.batches >= MIN_BATCHES
    }

    /// `|mean - target|` in units of the standard error; agreement to
    /// rounding with zero error gives 0.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d <= 1e-12 * target.abs().max(1.0) {
            0.0
        } else {
            d / self.stderr
        }
    }

    pub fn shifted(mut self, by: f64) -> Estimate {
        self.mean += by;
        for m in &mut self.chain_means {
            *m += by;
        }
        self
    }
}

/// Pool equal-size batches from every chain. A tail shorter than one batch
/// is dropped.
pub fn batch_means(chains: &[Vec<f64>]) -> Estimate {
    let mut means = Vec::new();
    let mut used = Vec::new();
    let mut chain_means = Vec::new();
    for series in chains {
        let b = BATCHES_PER_CHAIN.min(series.len());
        if b == 0 {
            chain_means.push(f64::NAN);
            continue;
        }
        let size = series.len() / b;
        let kept = &series[..b * size];
        for chunk in kept.chunks(size) {
            means.push(chunk.iter().sum::<f64>() / size as f64);
        }
        chain_means.push(kept.iter().sum::<f64>() / kept.len() as f64);
        used.extend_from_slice(kept);
    }
    let k = means.len();
    let n = used.len();
    if k == 0 {
        return Estimate {
            mean: f64::NAN,
            stderr: f64::NAN,
            batches: 0,
            effective_samples: 0.0,
            samples: 0,
            chain_means,
        };
    }
    // all batches have the same size within a chain; weight by samples
    let mean = used.iter().sum::<f64>() / n as f64;
    let bm = means.iter().sum::<f64>() / k as f64;
    let var_b = if k > 1 {
        means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (k - 1) as f64
    } else {
        0.0
    };
    let stderr = (var_b / k as f64).sqrt();
    let var = if n > 1 {
        used.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let effective_samples = if stderr > 0.0 {
        (var / (stderr * stderr)).min(n as f64)
    } else {
        n as f64
    };
    Estimate {
        mean,
        stderr,
        batches: k,
        effective_samples,
        samples: n,
        chain_means,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_series_has_zero_error() {
        let e = batch_means(&[vec![1.0; 100], vec![1.0; 64]]);
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.batches, 64);
        assert_eq!(e.samples, 96 + 64);
        assert_eq!(e.z_score(1.0), 0.0);
    }

    #[test]
    fn iid_error_matches_sample_error() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..64_000).map(|_| rng.gen::<f64>()).collect();
        let e = batch_means(&[xs]);
        let naive = (1.0f64 / 12.0 / 64_000.0).sqrt();
        assert!((e.stderr / naive - 1.0).abs() < 0.35, "{} {}", e.stderr, naive);
        assert!((e.mean - 0.5).abs() < 4.0 * naive);
    }

    #[test]
    fn short_chains_give_few_batches() {
        let e = batch_means(&[vec![0.0, 1.0, 0.0]]);
        assert_eq!(e.batches, 3);
        assert!(!e.is_reportable());
    }

    proptest! {
        #[test]
        fn stderr_is_nonnegative(xs in proptest::collection::vec(-10.0f64..10.0, 1..300)) {
            let e = batch_means(std::slice::from_ref(&xs));
            prop_assert!(e.stderr >= 0.0);
            prop_assert!(e.mean >= -10.0 && e.mean <= 10.0);
            prop_assert!(e.batches <= BATCHES_PER_CHAIN);
        }
    }
}
