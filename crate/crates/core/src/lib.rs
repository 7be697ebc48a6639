//! Exact combinatorics of zero-sum problems over `Z_m^n`.
//!
//! The crate has three layers:
//!
//! * [`group`] — arithmetic over `Z_m^n`, sumsets, and the exact
//!   dynamic-programming oracles for zero-sum witnesses. Everything else
//!   is validated against these oracles.
//! * [`search`] and [`construct`] — exhaustive computation of
//!   Erdős–Ginzburg–Ziv constants and maximum distinct-zero-sum-free
//!   sets, plus certified lower-bound constructions.
//! * [`bounds`] and [`repair`] — numeric evaluation of the slice-rank
//!   bound constants, and the constructive repair pipeline that turns a
//!   zero-sum solution with repeats into one with pairwise-distinct
//!   vectors (badness via cover numbers, rainbow partitions, greedy
//!   replacement).
//!
//! All operations are pure functions of their inputs; randomness only
//! enters through explicit seeds carried by [`repair::SamplingPlan`].

pub mod bounds;
pub mod construct;
pub mod group;
pub mod io;
pub mod repair;
pub mod search;

/// Resource caps for searches and table-based oracles.
///
/// `nodes` caps branchy searches (exceeding it yields an explicit
/// indeterminate result, never a silent wrong answer); `table_cells`
/// caps flat presence/DP tables, whose size is driven by `m^n`.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub nodes: u64,
    pub table_cells: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            nodes: 100_000_000,
            table_cells: 1 << 24,
        }
    }
}

impl Budget {
    pub fn with_nodes(nodes: u64) -> Self {
        Budget {
            nodes,
            ..Budget::default()
        }
    }

    pub(crate) fn check_table(&self, cells: u128) -> Result<usize> {
        if cells > self.table_cells as u128 {
            Err(Error::TableBudget {
                cells,
                cap: self.table_cells,
            })
        } else {
            Ok(cells as usize)
        }
    }

    pub(crate) fn counter(&self) -> NodeCounter {
        NodeCounter { left: self.nodes }
    }
}

/// Decrementing node counter handed to searches.
#[derive(Clone, Copy, Debug)]
pub(crate) struct NodeCounter {
    left: u64,
}

impl NodeCounter {
    /// Spends one node. Returns false once the budget is gone.
    pub(crate) fn tick(&mut self) -> bool {
        if self.left == 0 {
            false
        } else {
            self.left -= 1;
            true
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("group mismatch: Z_{m1}^{n1} vs Z_{m2}^{n2}")]
    GroupMismatch {
        m1: u32,
        n1: usize,
        m2: u32,
        n2: usize,
    },
    #[error("invalid group parameters: m={modulus}, n={dim}")]
    BadGroup { modulus: u32, dim: usize },
    #[error("coordinate {value} out of range for modulus {modulus}")]
    BadCoordinate { value: u32, modulus: u32 },
    #[error("{0}")]
    Precondition(String),
    #[error("table of {cells} cells exceeds budget of {cap}")]
    TableBudget { cells: u128, cap: u64 },
    #[error("node budget exhausted")]
    NodeBudget,
    #[error("set family contains an empty member")]
    EmptyFamilyMember,
    #[error("lambda must lie in (0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("no bound supplied for prime factor {0}")]
    MissingPrime(u32),
    #[error("block {0} has a bad sum")]
    BadBlock(usize),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("verification failed: {0}")]
    Verification(String),
}

impl Error {
    /// True for budget-exhaustion errors (mapped to a dedicated exit code
    /// by the command-line front end).
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::TableBudget { .. } | Error::NodeBudget)
    }
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}
