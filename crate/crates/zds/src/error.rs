//! Error type shared across the crate.

use std::fmt;

/// Everything that can go wrong outside of programmer error.
///
/// Domain violations (bad parameters, values outside a support set) and
/// resource refusals are reported here; internal arithmetic is exact and
/// cannot fail.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A synthesis spec failed validation (zero sample size, cap above the
    /// reachable maximum, contribution table of the wrong length, ...).
    InvalidSpec(String),
    /// `binomial_coefficient(a, k)` with `k > a`.
    BinomialDomain { a: u64, k: u64 },
    /// A synthesis was refused because its estimated cell count exceeds the
    /// memory budget. The estimate is `(N + 1) * |distinct reachable s|`.
    ResourceGuard { estimated_cells: u128, budget: u128 },
    /// A sub-distribution was requested from a table built without
    /// `retain_layers`.
    LayersNotRetained,
    /// A distribution was requested from a table built with an `s_cap`;
    /// capped tables are incomplete and have no normalizable total.
    CappedTable,
    /// A p-value was requested at an `s` that no histogram achieves. The
    /// nearest achievable neighbours are reported when they exist.
    NotInSupport {
        s: u64,
        below: Option<u64>,
        above: Option<u64>,
    },
    /// An operation requiring at least one degree of freedom was called
    /// with a single bin (`n = 1`).
    ZeroDof,
    /// Chi-squared CDF evaluated at a negative statistic.
    NegativeChi2(f64),
    /// A real-valued parameter (probability, threshold, scale) was outside
    /// its legal range.
    BadValue { name: &'static str, value: f64 },
    /// An integer parameter was outside its legal range.
    BadParameter { name: &'static str, value: u64, requirement: &'static str },
    /// Brute-force enumeration refused: too many histogram configurations.
    OracleGuard { configurations: u128, limit: u128 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(reason) => write!(f, "invalid synthesis spec: {reason}"),
            Error::BinomialDomain { a, k } => {
                write!(f, "binomial coefficient domain error: k = {k} exceeds a = {a}")
            }
            Error::ResourceGuard { estimated_cells, budget } => write!(
                f,
                "synthesis refused: estimated {estimated_cells} DP cells exceed the budget \
                 of {budget}; raise the budget (synthesize_with_budget / --cell-budget) to force"
            ),
            Error::LayersNotRetained => write!(
                f,
                "sub-distribution reuse requires a table built with retain_layers"
            ),
            Error::CappedTable => write!(
                f,
                "cannot normalize a distribution from a capped table (counts above s_cap \
                 were discarded)"
            ),
            Error::NotInSupport { s, below, above } => {
                write!(f, "s = {s} is not an achievable statistic value")?;
                match (below, above) {
                    (Some(b), Some(a)) => write!(f, "; nearest achievable are {b} and {a}"),
                    (Some(b), None) => write!(f, "; nearest achievable is {b}"),
                    (None, Some(a)) => write!(f, "; nearest achievable is {a}"),
                    (None, None) => Ok(()),
                }
            }
            Error::ZeroDof => write!(
                f,
                "n = 1 leaves zero degrees of freedom; no continuous reference exists"
            ),
            Error::NegativeChi2(x) => {
                write!(f, "chi-squared CDF is undefined for negative argument {x}")
            }
            Error::BadValue { name, value } => {
                write!(f, "{name} = {value} is outside its legal range")
            }
            Error::BadParameter { name, value, requirement } => {
                write!(f, "{name} = {value} violates: {requirement}")
            }
            Error::OracleGuard { configurations, limit } => write!(
                f,
                "brute-force enumeration refused: {configurations} histogram configurations \
                 exceed the limit of {limit}; use the synthesis engine instead"
            ),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
