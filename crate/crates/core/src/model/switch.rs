use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{c, CMatrix};

/// The two switching patterns used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// Stations exchange data in pairs (`P` symmetric with zero diagonal).
    PairwiseSymmetric,
    /// A single cycle through all stations (no pairs).
    NonPairwiseAsymmetric,
}

impl std::str::FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairwise" | "pairwise_symmetric" => Ok(Pattern::PairwiseSymmetric),
            "nonpairwise" | "non_pairwise" | "non_pairwise_asymmetric" => {
                Ok(Pattern::NonPairwiseAsymmetric)
            }
            other => Err(Error::Config(format!(
                "unknown pattern {other:?} (expected pairwise or nonpairwise)"
            ))),
        }
    }
}

/// A permutation switch matrix `P`, stored as `source[i] = j` where
/// `P[i][j] = 1`: station `i` receives the signal of station `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchSpec {
    source: Vec<usize>,
    pub pnc: bool,
    pairs: Option<Vec<(usize, usize)>>,
}

impl SwitchSpec {
    pub fn from_permutation(source: Vec<usize>, pnc: bool) -> Result<Self> {
        let n = source.len();
        let mut seen = vec![false; n];
        for &j in &source {
            if j >= n || seen[j] {
                return Err(Error::Config(format!(
                    "{source:?} is not a permutation of 0..{n}"
                )));
            }
            seen[j] = true;
        }
        let pairs = detect_pairs(&source);
        Ok(Self { source, pnc, pairs })
    }

    /// Pairs `(i, n-1-i)`; for `n = 4` this is stations {1,4} and {2,3}.
    pub fn pairwise(n: usize, pnc: bool) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Config(format!(
                "pairwise pattern needs an even number of stations, got {n}"
            )));
        }
        Self::from_permutation((0..n).map(|i| n - 1 - i).collect(), pnc)
    }

    /// For `n = 4` the asymmetric derangement `1→2→4→3→1`; otherwise a
    /// cyclic shift.
    pub fn non_pairwise(n: usize, pnc: bool) -> Result<Self> {
        if n < 3 {
            return Err(Error::Config(format!(
                "non-pairwise pattern needs at least 3 stations, got {n}"
            )));
        }
        let source = if n == 4 {
            vec![2, 0, 3, 1]
        } else {
            (0..n).map(|i| (i + 1) % n).collect()
        };
        Self::from_permutation(source, pnc)
    }

    pub fn from_pattern(pattern: Pattern, n: usize, pnc: bool) -> Result<Self> {
        match pattern {
            Pattern::PairwiseSymmetric => Self::pairwise(n, pnc),
            Pattern::NonPairwiseAsymmetric => Self::non_pairwise(n, pnc),
        }
    }

    pub fn with_pnc(&self, pnc: bool) -> Self {
        Self {
            pnc,
            ..self.clone()
        }
    }

    pub fn n(&self) -> usize {
        self.source.len()
    }

    /// Index of the station whose signal station `i` receives.
    pub fn source(&self, i: usize) -> usize {
        self.source[i]
    }

    pub fn sources(&self) -> &[usize] {
        &self.source
    }

    /// `(π(ℓ), κ(ℓ))` with `π(ℓ) < κ(ℓ)` when the permutation is an
    /// involutive derangement.
    pub fn pairs(&self) -> Option<&[(usize, usize)]> {
        self.pairs.as_deref()
    }

    pub fn require_pairs(&self) -> Result<&[(usize, usize)]> {
        self.pairs().ok_or(Error::PairingRequired)
    }

    pub fn is_derangement(&self) -> bool {
        self.source.iter().enumerate().all(|(i, &j)| i != j)
    }

    pub fn matrix(&self) -> CMatrix {
        let n = self.n();
        CMatrix::from_fn(n, n, |i, j| {
            if self.source[i] == j {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }
}

fn detect_pairs(source: &[usize]) -> Option<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (i, &j) in source.iter().enumerate() {
        if i == j || source[j] != i {
            return None;
        }
        if i < j {
            pairs.push((i, j));
        }
    }
    Some(pairs)
}
