//! Independent cross-checks for the layered synthesis: direct enumeration
//! of every histogram, and a seeded Monte Carlo sampler.

use crate::engine::{binomial_coefficient, SynthesisSpec};
use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Enumeration refuses above this many histograms.
pub const ORACLE_CONFIGURATION_LIMIT: u128 = 10_000_000;

/// Identifies the sampling scheme; bump the suffix if the stream layout
/// ever changes.
pub const MC_GENERATOR_ID: &str = "chacha8/64-shard/v1";

const MC_SHARDS: u64 = 64;
const MC_SHARD_SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Exact statistic counts by walking all C(N+n-1, n-1) histograms of N
/// samples over n bins and weighting each by its multinomial coefficient.
/// Independent of the layered recurrence: no subsample decomposition, no
/// shared code path past the binomial helper.
pub fn brute_force_counts(sample_size: u64, bins: u64) -> Result<BTreeMap<u64, BigUint>> {
    brute_force_counts_with(&SynthesisSpec::new(sample_size, bins))
}

/// Enumeration oracle for an arbitrary per-bin contribution.
pub fn brute_force_counts_with(spec: &SynthesisSpec) -> Result<BTreeMap<u64, BigUint>> {
    spec.validate()?;
    if spec.s_cap.is_some() {
        return Err(Error::CappedTable);
    }
    let (sample_size, bins) = (spec.sample_size, spec.bins);
    // binom(N+n-1, n-1) >= binom(48, 24) >> limit once both N and n-1 reach
    // 24, and below that the exact coefficient is cheap
    let configurations = if sample_size.min(bins - 1) >= 24 {
        u128::MAX
    } else {
        match sample_size.checked_add(bins - 1) {
            Some(a) => binomial_coefficient(a, bins - 1)?.to_u128().unwrap_or(u128::MAX),
            None => u128::MAX,
        }
    };
    if configurations > ORACLE_CONFIGURATION_LIMIT {
        return Err(Error::OracleGuard {
            configurations,
            limit: ORACLE_CONFIGURATION_LIMIT,
        });
    }

    let factorials = factorial_table(sample_size);
    let mut counts: BTreeMap<u64, BigUint> = BTreeMap::new();
    // colex odometer over compositions of N into n parts, starting from
    // everything in the first bin
    let mut histogram = vec![0u64; bins as usize];
    histogram[0] = sample_size;
    loop {
        let s: u64 = histogram.iter().map(|&m| spec.contribution_value(m)).sum();
        let weight = multinomial(&factorials, &histogram);
        *counts.entry(s).or_default() += weight;

        if histogram[bins as usize - 1] == sample_size {
            break;
        }
        let pivot = histogram.iter().position(|&m| m > 0).expect("parts sum to N");
        let moved = histogram[pivot];
        histogram[pivot] = 0;
        histogram[0] = moved - 1;
        histogram[pivot + 1] += 1;
    }
    Ok(counts)
}

fn factorial_table(up_to: u64) -> Vec<BigUint> {
    let mut table = Vec::with_capacity(up_to as usize + 1);
    table.push(BigUint::one());
    for k in 1..=up_to {
        let next = table.last().unwrap() * k;
        table.push(next);
    }
    table
}

fn multinomial(factorials: &[BigUint], histogram: &[u64]) -> BigUint {
    let mut denominator = BigUint::one();
    for &m in histogram {
        if m > 1 {
            denominator *= &factorials[m as usize];
        }
    }
    factorials.last().unwrap() / denominator
}

/// Seeded Monte Carlo tallies of the statistic under the uniform null.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McEstimate {
    pub sample_size: u64,
    pub bins: u64,
    pub trials: u64,
    pub seed: u64,
    /// Name of the sampling scheme the tallies came from.
    pub generator: &'static str,
    pub tallies: BTreeMap<u64, u64>,
}

impl McEstimate {
    /// Estimated probability of statistic value `s`.
    pub fn pmf_estimate(&self, s: u64) -> f64 {
        *self.tallies.get(&s).unwrap_or(&0) as f64 / self.trials as f64
    }
}

/// Samples `trials` histograms of N uniform draws over n bins and tallies
/// the default statistic. Work is split over 64 fixed shards with seeds
/// derived from `seed`, so the tallies depend only on (N, n, trials, seed),
/// not on thread count or scheduling.
pub fn monte_carlo_pmf(
    sample_size: u64,
    bins: u64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    SynthesisSpec::new(sample_size, bins).validate()?;
    if trials < 1 {
        return Err(Error::BadParameter {
            name: "trials",
            value: trials,
            requirement: "must be at least 1",
        });
    }
    let tallies = (0..MC_SHARDS)
        .into_par_iter()
        .map(|shard| {
            let shard_trials = trials / MC_SHARDS + u64::from(shard < trials % MC_SHARDS);
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed.wrapping_add(shard.wrapping_mul(MC_SHARD_SEED_STRIDE)),
            );
            let mut histogram = vec![0u64; bins as usize];
            let mut local: BTreeMap<u64, u64> = BTreeMap::new();
            for _ in 0..shard_trials {
                histogram.fill(0);
                for _ in 0..sample_size {
                    histogram[rng.gen_range(0..bins) as usize] += 1;
                }
                let s: u64 = histogram.iter().map(|&m| m * m).sum();
                *local.entry(s).or_default() += 1;
            }
            local
        })
        .reduce(BTreeMap::new, |mut merged, local| {
            for (s, t) in local {
                *merged.entry(s).or_default() += t;
            }
            merged
        });
    Ok(McEstimate {
        sample_size,
        bins,
        trials,
        seed,
        generator: MC_GENERATOR_ID,
        tallies,
    })
}
