use core::fmt;

/// Non-fatal conditions attached to results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// An eigenvalue ratio had a numerically zero denominator at `index`
    /// (1-based), i.e. the panel's numerical rank is `index`.
    RankBoundary { index: usize },
    /// Tied quantile knots were merged for a covariate.
    KnotsCollapsed {
        covariate: usize,
        requested: usize,
        effective: usize,
    },
    /// A covariate is constant; a single constant basis column was used.
    DegenerateCovariate { covariate: usize },
    /// The sieve Gram matrix was rank deficient; the pseudo-inverse was used.
    PseudoInverse { rank: usize, columns: usize },
    /// The eigenvalue gap after the `index`-th direction is below tolerance.
    DegenerateSubspace { index: usize, gap: f64 },
    /// A direction's eigenvalue is not strictly positive.
    NonPositiveEigenvalue { index: usize, value: f64 },
    /// The factor form and the loading form of the sliced covariance differ.
    FormsDisagree { max_abs_diff: f64 },
    /// The local linear smoother had negligible kernel mass at the query point.
    GlobalFallback,
    /// The sequential test for `L` ran out of degrees of freedom at `at`.
    IndexScanStopped { at: usize },
    /// Fewer non-empty slices than requested.
    SlicesReduced { requested: usize, effective: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::RankBoundary { index } => {
                write!(f, "eigenvalue {} of X'X is numerically zero", index + 1)
            }
            Warning::KnotsCollapsed {
                covariate,
                requested,
                effective,
            } => write!(
                f,
                "covariate {covariate}: tied knots collapsed, basis size {requested} -> {effective}"
            ),
            Warning::DegenerateCovariate { covariate } => {
                write!(f, "covariate {covariate} is constant; single-basis fallback")
            }
            Warning::PseudoInverse { rank, columns } => write!(
                f,
                "sieve design has rank {rank} < {columns} columns; using pseudo-inverse"
            ),
            Warning::DegenerateSubspace { index, gap } => write!(
                f,
                "eigenvalue gap after direction {index} is {gap:e}; subspace is not identified"
            ),
            Warning::NonPositiveEigenvalue { index, value } => {
                write!(f, "direction {index} has non-positive eigenvalue {value:e}")
            }
            Warning::FormsDisagree { max_abs_diff } => write!(
                f,
                "factor and loading forms of the sliced covariance differ by {max_abs_diff:e}"
            ),
            Warning::GlobalFallback => {
                write!(f, "negligible kernel weight; fell back to a global linear fit")
            }
            Warning::IndexScanStopped { at } => {
                write!(f, "index-count test stopped at L = {at}: no degrees of freedom left")
            }
            Warning::SlicesReduced {
                requested,
                effective,
            } => write!(f, "{requested} slices requested, {effective} non-empty"),
        }
    }
}
