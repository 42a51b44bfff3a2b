//! Exact distributions of the chi-squared uniformity statistic.
//!
//! For N samples spread over n equally likely bins, the statistic
//! s = sum of squared bin counts determines the chi-squared value
//! (n*s - N^2)/N. This crate synthesizes the exact distribution of s by
//! counting bin-assignment sequences layer by layer, then compares the
//! exact law against the (n-1)-degree chi-squared approximation: p-values,
//! K-S distances, sample-size thresholds, and true type-I error rates.
//!
//! Counts are exact big integers throughout; floats appear only at the
//! reporting boundary.

pub mod analysis;
pub mod approx;
pub mod distribution;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod rational;

pub use analysis::{
    binomial_normal_ks, binomial_normal_ks_with, ks_statistic, ks_statistic_with,
    nist_report, ratio_sweep, threshold_scan, threshold_scan_with,
    threshold_scan_with_budget, type1_error,
    BaselineReport, KsConvention, KsReport, NistReport, NistRow, PValueMethod, Side,
    ThresholdScanResult, Type1Report, THRESHOLD_CROSSING_RESOLUTION,
};
pub use approx::{
    approx_p_value, binomial_cdf, chi2_cdf, chi2_survival, normal_cdf, ApproxModel,
};
pub use distribution::{
    chi2_from_s, chi2_from_s_f64, implied_s, s_from_chi2, support_bounds,
    ExactDistribution, SResolution,
};
pub use engine::{
    binomial_coefficient, estimate_cells, synthesize, synthesize_with_budget,
    Contribution, CountLayer, CountTable, SynthesisSpec, DEFAULT_CELL_BUDGET,
};
pub use error::{Error, Result};
pub use oracle::{
    brute_force_counts, brute_force_counts_with, monte_carlo_pmf, McEstimate,
    MC_GENERATOR_ID, ORACLE_CONFIGURATION_LIMIT,
};
