//! Layer-by-layer synthesis of exact statistic counts.
//!
//! The table cell `C(i, M, s)` counts the bin-assignment sequences in which
//! some `M`-element subsample of the `N` samples fills the first `i` bins and
//! those bins contribute `s` to the statistic, `s = Σ g(xⱼ)`. Layer `i + 1`
//! follows from layer `i` by choosing how many of the remaining `N - M`
//! samples land in the next bin. The final layer at `M = N`, `i = n` holds
//! the exact count of every achievable statistic value, summing to `nᴺ`.
//!
//! Counts are arbitrary-precision integers throughout; the probabilities
//! formed downstream have tails far below anything a double can hold.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Default ceiling on `(N + 1) * |distinct reachable s|` before a synthesis
/// is refused; roughly a few GiB of sparse cells.
pub const DEFAULT_CELL_BUDGET: u128 = 100_000_000;

/// Cell count below which a layer advance stays single-threaded.
const PARALLEL_THRESHOLD: usize = 4096;

/// Per-bin statistic contribution `g(m)`, `m` being the bin's sample count.
///
/// The statistic tracked by the synthesis is `s = Σᵢ g(xᵢ)` over all bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Contribution {
    /// `g(m) = m²`; `s` is then an integer carrier of the chi-squared
    /// statistic via `χ² = (n/N)s − N`.
    Squared,
    /// `g(m) = |n·m − N|`, the scaled absolute deviation from uniformity;
    /// stays integral without dividing by `n`.
    AbsDeviation,
    /// Arbitrary integer-valued table, indexed by `m ∈ {0..N}`.
    Custom { name: String, table: Vec<u64> },
}

impl Contribution {
    /// Short identifier used in file names and reports.
    pub fn tag(&self) -> &str {
        match self {
            Contribution::Squared => "chi2",
            Contribution::AbsDeviation => "absdev",
            Contribution::Custom { name, .. } => name,
        }
    }
}

/// Parameters of one synthesis run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisSpec {
    /// Sample size `N`.
    pub sample_size: u64,
    /// Bin count `n`.
    pub bins: u64,
    /// Statistic contribution; [`Contribution::Squared`] unless overridden.
    pub contribution: Contribution,
    /// Optional cap: cells with `s` above it are dropped, trading a complete
    /// distribution for a smaller table. Capped tables cannot be normalized.
    pub s_cap: Option<u64>,
    /// Keep every intermediate layer for sub-distribution reuse.
    pub retain_layers: bool,
}

impl SynthesisSpec {
    pub fn new(sample_size: u64, bins: u64) -> Self {
        SynthesisSpec {
            sample_size,
            bins,
            contribution: Contribution::Squared,
            s_cap: None,
            retain_layers: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_size < 1 {
            return Err(Error::InvalidSpec("sample size must be at least 1".into()));
        }
        if self.bins < 1 {
            return Err(Error::InvalidSpec("bin count must be at least 1".into()));
        }
        if let Contribution::Custom { table, .. } = &self.contribution {
            if table.len() != self.sample_size as usize + 1 {
                return Err(Error::InvalidSpec(format!(
                    "contribution table must define g(m) for every m in 0..={} \
                     (got {} entries)",
                    self.sample_size,
                    table.len()
                )));
            }
        }
        let reachable_max = self.statistic_max()?;
        if let Some(cap) = self.s_cap {
            if cap > reachable_max {
                return Err(Error::InvalidSpec(format!(
                    "s_cap = {cap} exceeds the reachable maximum {reachable_max}"
                )));
            }
        }
        Ok(())
    }

    /// `g(m)`. Callers must stay within `m ≤ N` on a validated spec.
    pub fn contribution_value(&self, m: u64) -> u64 {
        match &self.contribution {
            Contribution::Squared => m * m,
            Contribution::AbsDeviation => (self.bins * m).abs_diff(self.sample_size),
            Contribution::Custom { table, .. } => table[m as usize],
        }
    }

    /// Upper bound on `Σ g(xᵢ)` over complete histograms, used for cap
    /// validation and the resource estimate. Exact for the built-in convex
    /// contributions (maximum at a one-bin corner); a sound overestimate for
    /// custom tables. Errors if the bound itself overflows u64.
    fn statistic_max(&self) -> Result<u64> {
        let overflow =
            || Error::InvalidSpec("statistic range overflows 64-bit arithmetic".into());
        let (n_total, bins) = (self.sample_size, self.bins);
        match &self.contribution {
            Contribution::Squared => n_total.checked_mul(n_total).ok_or_else(overflow),
            Contribution::AbsDeviation => {
                // one full bin: g(N) + (n−1)·g(0) = N(n−1) + (n−1)N
                n_total
                    .checked_mul(bins - 1)
                    .and_then(|x| x.checked_mul(2))
                    .ok_or_else(overflow)
            }
            Contribution::Custom { table, .. } => {
                let max_g = table.iter().copied().max().unwrap_or(0);
                max_g.checked_mul(bins).ok_or_else(overflow)
            }
        }
    }

    /// Smallest achievable `s` for the built-in contributions: both are
    /// convex in the bin value, so the balanced histogram minimizes the sum.
    /// For custom tables this is only the balanced-histogram value, still a
    /// valid member of the reachable range for the resource estimate.
    fn balanced_statistic(&self) -> u64 {
        let q = self.sample_size / self.bins;
        let r = self.sample_size % self.bins;
        r * self.contribution_value(q + 1) + (self.bins - r) * self.contribution_value(q)
    }
}

/// One layer of the table: all cells with bin index `i`, organized as a
/// sparse ascending `s -> count` map per subsample size `M`.
///
/// Stored counts are strictly positive; absent keys mean zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountLayer {
    bin_index: u64,
    cells: Vec<BTreeMap<u64, BigUint>>,
}

impl CountLayer {
    pub fn bin_index(&self) -> u64 {
        self.bin_index
    }

    /// Cells for subsample size `M`, keyed by `s`, ascending.
    pub fn subsample(&self, m_subsample: u64) -> &BTreeMap<u64, BigUint> {
        &self.cells[m_subsample as usize]
    }

    /// Largest subsample size (always `N`).
    pub fn max_subsample(&self) -> u64 {
        self.cells.len() as u64 - 1
    }

    /// Exact sum of all counts for subsample size `M`.
    pub fn subsample_total(&self, m_subsample: u64) -> BigUint {
        self.subsample(m_subsample).values().sum()
    }
}

/// The finished synthesis: the final layer plus, optionally, every layer.
#[derive(Debug, Clone)]
pub struct CountTable {
    spec: SynthesisSpec,
    final_layer: CountLayer,
    retained_layers: Option<Vec<CountLayer>>,
}

impl CountTable {
    pub fn spec(&self) -> &SynthesisSpec {
        &self.spec
    }

    pub fn final_layer(&self) -> &CountLayer {
        &self.final_layer
    }

    /// All layers `1..=n` when `SynthesisSpec::retain_layers` asked for them.
    pub fn retained_layers(&self) -> Option<&[CountLayer]> {
        self.retained_layers.as_deref()
    }
}

/// Exact `a`-choose-`k`. Exact at any size that fits in memory; the
/// multiply-then-divide loop keeps every intermediate integral.
pub fn binomial_coefficient(a: u64, k: u64) -> Result<BigUint> {
    if k > a {
        return Err(Error::BinomialDomain { a, k });
    }
    let k = k.min(a - k);
    let mut result = BigUint::one();
    for i in 0..k {
        result = result * BigUint::from(a - i) / BigUint::from(i + 1);
    }
    Ok(result)
}

/// Layer 1: a single bin holding the whole subsample. For each `M ∈ {0..N}`
/// there are `binom(N, M)` ways to choose the subsample and one bin to put it
/// in, at `s = g(M)`. The `M = 0` cell (one empty prefix) is included: later
/// layers draw on it for histograms whose leading bins are empty.
pub fn init_first_layer(spec: &SynthesisSpec) -> Result<CountLayer> {
    spec.validate()?;
    let n_total = spec.sample_size;
    let mut cells: Vec<BTreeMap<u64, BigUint>> = vec![BTreeMap::new(); n_total as usize + 1];
    let mut count = BigUint::one(); // binom(N, 0)
    for m_subsample in 0..=n_total {
        if m_subsample > 0 {
            // binom(N, M) from binom(N, M−1)
            count = count * BigUint::from(n_total - m_subsample + 1)
                / BigUint::from(m_subsample);
        }
        let s = spec.contribution_value(m_subsample);
        if spec.s_cap.map_or(true, |cap| s <= cap) {
            cells[m_subsample as usize].insert(s, count.clone());
        }
    }
    Ok(CountLayer { bin_index: 1, cells })
}

/// One step of the recurrence, in scatter form: every nonzero source cell
/// `(M, s)` sends `count · binom(N−M, m)` to `(M+m, s+g(m))` for each fill
/// level `m` of the new bin. Zero cells are never stored, so the zero-skip
/// is structural rather than tested per cell.
///
/// Large layers are partitioned across worker threads; partial layers merge
/// by exact addition per `(M, s)`, so the result is bit-identical for any
/// worker count.
pub fn advance_layer(prev: &CountLayer, spec: &SynthesisSpec) -> Result<CountLayer> {
    spec.validate()?;
    if prev.bin_index >= spec.bins {
        return Err(Error::BadParameter {
            name: "bin_index",
            value: prev.bin_index,
            requirement: "advance_layer requires bin_index < n",
        });
    }
    let sources: Vec<(u64, u64, &BigUint)> = prev
        .cells
        .iter()
        .enumerate()
        .flat_map(|(m, cells)| {
            cells.iter().map(move |(&s, count)| (m as u64, s, count))
        })
        .collect();

    let cells = if sources.len() < PARALLEL_THRESHOLD || rayon::current_num_threads() == 1 {
        scatter(&sources, spec)
    } else {
        let chunk = sources.len().div_ceil(rayon::current_num_threads() * 4);
        sources
            .par_chunks(chunk)
            .map(|part| scatter(part, spec))
            .reduce(
                || vec![BTreeMap::new(); spec.sample_size as usize + 1],
                merge_cells,
            )
    };
    Ok(CountLayer { bin_index: prev.bin_index + 1, cells })
}

fn scatter(
    sources: &[(u64, u64, &BigUint)],
    spec: &SynthesisSpec,
) -> Vec<BTreeMap<u64, BigUint>> {
    let n_total = spec.sample_size;
    let mut cells: Vec<BTreeMap<u64, BigUint>> = vec![BTreeMap::new(); n_total as usize + 1];
    for &(m_prev, s_prev, count) in sources {
        let remaining = n_total - m_prev;
        let mut ways = BigUint::one(); // binom(remaining, fill)
        for fill in 0..=remaining {
            if fill > 0 {
                ways = ways * BigUint::from(remaining - fill + 1) / BigUint::from(fill);
            }
            let s = s_prev + spec.contribution_value(fill);
            if spec.s_cap.map_or(false, |cap| s > cap) {
                continue;
            }
            let added = count * &ways;
            cells[(m_prev + fill) as usize]
                .entry(s)
                .and_modify(|c| *c += &added)
                .or_insert(added);
        }
    }
    cells
}

fn merge_cells(
    mut acc: Vec<BTreeMap<u64, BigUint>>,
    other: Vec<BTreeMap<u64, BigUint>>,
) -> Vec<BTreeMap<u64, BigUint>> {
    for (into, from) in acc.iter_mut().zip(other) {
        for (s, count) in from {
            into.entry(s).and_modify(|c| *c += &count).or_insert(count);
        }
    }
    acc
}

/// Runs the full synthesis for a spec under the default resource budget.
pub fn synthesize(spec: &SynthesisSpec) -> Result<CountTable> {
    synthesize_with_budget(spec, DEFAULT_CELL_BUDGET)
}

/// Runs the full synthesis, refusing specs whose estimated peak cell count
/// `(N + 1) * |distinct reachable s|` exceeds `budget`.
pub fn synthesize_with_budget(spec: &SynthesisSpec, budget: u128) -> Result<CountTable> {
    spec.validate()?;
    let estimated_cells = estimate_cells(spec)?;
    if estimated_cells > budget {
        return Err(Error::ResourceGuard { estimated_cells, budget });
    }
    let mut layer = init_first_layer(spec)?;
    let mut retained = spec.retain_layers.then(|| vec![layer.clone()]);
    for _ in 1..spec.bins {
        layer = advance_layer(&layer, spec)?;
        if let Some(layers) = retained.as_mut() {
            layers.push(layer.clone());
        }
    }
    Ok(CountTable { spec: spec.clone(), final_layer: layer, retained_layers: retained })
}

/// Peak-memory proxy: `(N + 1)` subsample rows times a bound on the distinct
/// statistic values one row can hold. The bound is the tighter of the value
/// range and the number of bin-value multisets (partitions), whichever is
/// smaller; two-bin cases are partition-limited, many-bin cases range-limited.
pub fn estimate_cells(spec: &SynthesisSpec) -> Result<u128> {
    spec.validate()?;
    let n_total = spec.sample_size;
    let range_bound = match spec.contribution {
        // s ≡ N (mod 2) since m² ≡ m: only every other value is reachable.
        Contribution::Squared => {
            ((spec.statistic_max()? - spec.balanced_statistic()) / 2 + 1) as u128
        }
        _ => spec.statistic_max()? as u128 + 1,
    };
    let partition_bound = partitions_at_most(n_total, n_total.min(spec.bins));
    Ok((n_total as u128 + 1).saturating_mul(range_bound.min(partition_bound)))
}

/// Number of partitions of `total` into at most `parts` parts, saturating.
fn partitions_at_most(total: u64, parts: u64) -> u128 {
    let total = total as usize;
    let parts = parts as usize;
    // p[k][t] = partitions of t into parts ≤ k, rolled over k.
    let mut p = vec![0u128; total + 1];
    p[0] = 1;
    for k in 1..=parts {
        for t in k..=total {
            p[t] = p[t].saturating_add(p[t - k]);
        }
    }
    p[total]
}
