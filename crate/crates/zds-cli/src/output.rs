//! Serialized distribution tables: the JSON schema and its CSV projection.

use serde::{Deserialize, Serialize};
use zds::rational::exact_decimal_string;
use zds::{chi2_from_s, chi2_from_s_f64, chi2_survival, ExactDistribution};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "s,chi2,count,pmf,cdf,pvalue_exact,pvalue_approx";

/// On-disk form of an exact distribution. Counts and the total are decimal
/// strings so no precision is lost in transit; floats are derived values.
#[derive(Debug, Serialize, Deserialize)]
pub struct DistributionFile {
    pub schema_version: u32,
    #[serde(rename = "N")]
    pub sample_size: u64,
    #[serde(rename = "n")]
    pub bins: u64,
    pub stat: String,
    pub total: String,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Entry {
    pub s: u64,
    /// Exact chi-squared value as a decimal string, or a `num/den` fraction
    /// when the decimal does not terminate; absent for the alternate
    /// statistic, where s is not a chi-squared form.
    pub chi2: Option<String>,
    pub count: String,
    pub pmf: f64,
    pub cdf: f64,
    pub pvalue_exact: f64,
    /// Continuous-approximation p-value; absent when the approximation has
    /// no degrees of freedom (n = 1) or the statistic is not chi-squared.
    pub pvalue_approx: Option<f64>,
}

/// Derives the full table from exact counts. `chi2_stat` says whether the
/// default squared-counts statistic produced the distribution.
pub fn build_file(dist: &ExactDistribution, stat_tag: &str, chi2_stat: bool) -> DistributionFile {
    let sample_size = dist.sample_size();
    let bins = dist.bins();
    let cumulative = dist.cumulative_f64();
    let entries = dist
        .support()
        .iter()
        .enumerate()
        .map(|(idx, &s)| {
            let chi2 = chi2_stat.then(|| exact_decimal_string(&chi2_from_s(sample_size, bins, s)));
            let pvalue_approx = (chi2_stat && bins >= 2).then(|| {
                chi2_survival(bins - 1, chi2_from_s_f64(sample_size, bins, s))
                    .expect("support chi2 is finite and nonnegative")
            });
            Entry {
                s,
                chi2,
                count: dist.counts()[idx].to_string(),
                pmf: dist.pmf_f64(idx),
                cdf: cumulative[idx],
                pvalue_exact: dist.exact_p_value_f64(s).expect("s is in support"),
                pvalue_approx,
            }
        })
        .collect();
    DistributionFile {
        schema_version: SCHEMA_VERSION,
        sample_size,
        bins,
        stat: stat_tag.to_string(),
        total: dist.total().to_string(),
        entries,
    }
}

pub fn to_json(file: &DistributionFile) -> String {
    let mut out = serde_json::to_string_pretty(file).expect("schema serializes");
    out.push('\n');
    out
}

pub fn to_csv(file: &DistributionFile) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for entry in &file.entries {
        let chi2 = entry.chi2.as_deref().unwrap_or("");
        let approx = entry
            .pvalue_approx
            .map(|p| p.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            entry.s, chi2, entry.count, entry.pmf, entry.cdf, entry.pvalue_exact, approx
        ));
    }
    out
}
