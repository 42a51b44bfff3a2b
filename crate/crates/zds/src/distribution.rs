//! Exact distributions of the integer statistic and conversions between `s`
//! and the chi-squared form.

use crate::engine::CountTable;
use crate::error::{Error, Result};
use crate::rational::{rational_to_f64, ratio_to_f64};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;

/// Relative tolerance under which a real-valued implied `s` is taken as the
/// integer it is nearly equal to.
pub const S_RESOLUTION_TOLERANCE: f64 = 1e-9;

/// The exact distribution of `s` over its achievable set: strictly positive
/// big-integer counts over a big-integer total, with running cumulative sums.
///
/// `total` is `nᴺ` for a full synthesis, or `mᴹ·binom(N, M)` for a reused
/// sub-distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDistribution {
    sample_size: u64,
    bins: u64,
    support: Vec<u64>,
    counts: Vec<BigUint>,
    cumulative: Vec<BigUint>,
    total: BigUint,
}

impl ExactDistribution {
    /// Distribution of the final layer at `M = N`, total `nᴺ`.
    pub fn from_counts(table: &CountTable) -> Result<Self> {
        if table.spec().s_cap.is_some() {
            return Err(Error::CappedTable);
        }
        let spec = table.spec();
        let cells = table.final_layer().subsample(spec.sample_size);
        let total = BigUint::from(spec.bins).pow(
            u32::try_from(spec.sample_size).expect("sample size fits u32"),
        );
        Self::assemble(spec.sample_size, spec.bins, cells, total)
    }

    /// Distribution of `s` for an `M`-subsample over the first `m` bins,
    /// read from a retained layer. Total is `mᴹ · binom(N, M)`: the layer
    /// counts include the choice of the subsample.
    pub fn reuse_subdistribution(
        table: &CountTable,
        m_subsample: u64,
        bins_used: u64,
    ) -> Result<Self> {
        if table.spec().s_cap.is_some() {
            return Err(Error::CappedTable);
        }
        let spec = table.spec();
        if bins_used < 1 || bins_used > spec.bins {
            return Err(Error::BadParameter {
                name: "bins_used",
                value: bins_used,
                requirement: "must satisfy 1 <= bins_used <= n",
            });
        }
        if m_subsample > spec.sample_size {
            return Err(Error::BadParameter {
                name: "m_subsample",
                value: m_subsample,
                requirement: "must satisfy m_subsample <= N",
            });
        }
        let layers = table.retained_layers().ok_or(Error::LayersNotRetained)?;
        let layer = &layers[bins_used as usize - 1];
        let cells = layer.subsample(m_subsample);
        let total = BigUint::from(bins_used)
            .pow(u32::try_from(m_subsample).expect("subsample fits u32"))
            * crate::engine::binomial_coefficient(spec.sample_size, m_subsample)?;
        Self::assemble(m_subsample, bins_used, cells, total)
    }

    /// Rebuilds a full distribution from externally stored counts (for
    /// example a deserialized table). The counts must be the complete
    /// support: they are checked against the independently known total
    /// `nᴺ`, so a dropped, duplicated, or altered entry is rejected.
    pub fn from_cells(
        sample_size: u64,
        bins: u64,
        cells: &std::collections::BTreeMap<u64, BigUint>,
    ) -> Result<Self> {
        crate::engine::SynthesisSpec::new(sample_size, bins).validate()?;
        let exponent = u32::try_from(sample_size).map_err(|_| Error::BadParameter {
            name: "sample_size",
            value: sample_size,
            requirement: "must fit in u32",
        })?;
        let total = BigUint::from(bins).pow(exponent);
        let sum: BigUint = cells.values().sum();
        if sum != total {
            return Err(Error::InvalidSpec(format!(
                "stored counts sum to {sum}, expected n^N = {total}"
            )));
        }
        Self::assemble(sample_size, bins, cells, total)
    }

    fn assemble(
        sample_size: u64,
        bins: u64,
        cells: &std::collections::BTreeMap<u64, BigUint>,
        total: BigUint,
    ) -> Result<Self> {
        let mut support = Vec::with_capacity(cells.len());
        let mut counts = Vec::with_capacity(cells.len());
        let mut cumulative = Vec::with_capacity(cells.len());
        let mut running = BigUint::zero();
        for (&s, count) in cells {
            support.push(s);
            running += count;
            counts.push(count.clone());
            cumulative.push(running.clone());
        }
        assert_eq!(running, total, "counts must sum to the distribution total");
        Ok(ExactDistribution { sample_size, bins, support, counts, cumulative, total })
    }

    pub fn sample_size(&self) -> u64 {
        self.sample_size
    }

    pub fn bins(&self) -> u64 {
        self.bins
    }

    /// Achievable statistic values, strictly ascending.
    pub fn support(&self) -> &[u64] {
        &self.support
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    pub fn total(&self) -> &BigUint {
        &self.total
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn index_of(&self, s: u64) -> Option<usize> {
        self.support.binary_search(&s).ok()
    }

    /// Exact pmf at support index `idx`.
    pub fn pmf_rational(&self, idx: usize) -> BigRational {
        ratio(&self.counts[idx], &self.total)
    }

    /// Float view of the pmf; within 1 ulp of the exact rational.
    pub fn pmf_f64(&self, idx: usize) -> f64 {
        ratio_to_f64(&self.counts[idx], &self.total)
    }

    /// Right-continuous step CDF at any integer `s` (achievable or not).
    pub fn exact_cdf(&self, s: u64) -> BigRational {
        let below_or_at = self.support.partition_point(|&t| t <= s);
        if below_or_at == 0 {
            return BigRational::zero();
        }
        ratio(&self.cumulative[below_or_at - 1], &self.total)
    }

    /// Float view of [`ExactDistribution::exact_cdf`].
    pub fn exact_cdf_f64(&self, s: u64) -> f64 {
        let below_or_at = self.support.partition_point(|&t| t <= s);
        if below_or_at == 0 {
            return 0.0;
        }
        ratio_to_f64(&self.cumulative[below_or_at - 1], &self.total)
    }

    /// CDF value at each support point, as floats, ascending.
    pub fn cumulative_f64(&self) -> Vec<f64> {
        self.cumulative
            .iter()
            .map(|c| ratio_to_f64(c, &self.total))
            .collect()
    }

    /// Exact discrete p-value: the tail mass at and above an achievable `s`,
    /// `1 − CDF(s⁻)`. Equals 1 at the smallest achievable value.
    pub fn exact_p_value(&self, s: u64) -> Result<BigRational> {
        let idx = self.require_support(s)?;
        let below = if idx == 0 {
            BigUint::zero()
        } else {
            self.cumulative[idx - 1].clone()
        };
        Ok(ratio(&(&self.total - below), &self.total))
    }

    /// Float view of [`ExactDistribution::exact_p_value`].
    pub fn exact_p_value_f64(&self, s: u64) -> Result<f64> {
        let idx = self.require_support(s)?;
        let below = if idx == 0 {
            BigUint::zero()
        } else {
            self.cumulative[idx - 1].clone()
        };
        Ok(ratio_to_f64(&(&self.total - below), &self.total))
    }

    /// Smallest achievable `s` at or above `implied − tolerance`, the rule
    /// for mapping an observed real-valued statistic onto the support before
    /// taking its p-value. Errors when the observation lies above the whole
    /// support.
    pub fn snap_observed(&self, implied_s: f64) -> Result<u64> {
        let tol = S_RESOLUTION_TOLERANCE * implied_s.abs().max(1.0);
        let threshold = implied_s - tol;
        match self.support.iter().find(|&&t| (t as f64) >= threshold) {
            Some(&t) => Ok(t),
            None => Err(Error::NotInSupport {
                s: implied_s.ceil() as u64,
                below: self.support.last().copied(),
                above: None,
            }),
        }
    }

    fn require_support(&self, s: u64) -> Result<usize> {
        match self.support.binary_search(&s) {
            Ok(idx) => Ok(idx),
            Err(ins) => Err(Error::NotInSupport {
                s,
                below: ins.checked_sub(1).map(|i| self.support[i]),
                above: self.support.get(ins).copied(),
            }),
        }
    }
}

fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(
        BigInt::from_biguint(num_bigint::Sign::Plus, num.clone()),
        BigInt::from_biguint(num_bigint::Sign::Plus, den.clone()),
    )
}

/// `χ² = (n·s − N²)/N` as an exact rational.
pub fn chi2_from_s(sample_size: u64, bins: u64, s: u64) -> BigRational {
    let numer = BigInt::from(bins) * BigInt::from(s)
        - BigInt::from(sample_size) * BigInt::from(sample_size);
    BigRational::new(numer, BigInt::from(sample_size))
}

/// Float view of [`chi2_from_s`]; exact to 1 ulp.
pub fn chi2_from_s_f64(sample_size: u64, bins: u64, s: u64) -> f64 {
    rational_to_f64(&chi2_from_s(sample_size, bins, s))
}

/// Result of inverting the statistic transform at a real-valued chi-squared
/// observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SResolution {
    /// The implied `s` is an integer (within relative tolerance 1e-9).
    Exact(u64),
    /// The implied `s` falls strictly between two integers.
    Bracket(u64, u64),
}

/// Inverts `χ² = (n/N)s − N`: `s* = (χ² + N)·N/n`, resolved to an integer
/// when it is one up to [`S_RESOLUTION_TOLERANCE`].
pub fn s_from_chi2(sample_size: u64, bins: u64, chi2: f64) -> SResolution {
    let implied = (chi2 + sample_size as f64) * sample_size as f64 / bins as f64;
    let nearest = implied.round();
    let tol = S_RESOLUTION_TOLERANCE * implied.abs().max(1.0);
    if (implied - nearest).abs() <= tol && nearest >= 0.0 {
        SResolution::Exact(nearest as u64)
    } else {
        SResolution::Bracket(implied.floor().max(0.0) as u64, implied.ceil().max(0.0) as u64)
    }
}

/// Implied real-valued `s` for an observed chi-squared statistic, before
/// snapping to the support.
pub fn implied_s(sample_size: u64, bins: u64, chi2: f64) -> f64 {
    (chi2 + sample_size as f64) * sample_size as f64 / bins as f64
}

/// Reachable statistic range for the squared contribution: the balanced
/// histogram minimizes `Σ xᵢ²` (convexity), a single full bin maximizes it.
pub fn support_bounds(sample_size: u64, bins: u64) -> (u64, u64) {
    let q = sample_size / bins;
    let r = sample_size % bins;
    let s_min = r * (q + 1) * (q + 1) + (bins - r) * q * q;
    (s_min, sample_size * sample_size)
}
