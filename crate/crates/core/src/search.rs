//! Exact desk-scale computation of Erdős–Ginzburg–Ziv constants and of
//! maximum distinct-zero-sum-free set sizes, with certificates.
//!
//! Both searches are deterministic backtrackers with a node-count budget
//! and an explicit tri-state outcome: a result is either proved,
//! disproved, or reported indeterminate — a blown budget is never a
//! silent negative.

use crate::construct::harborth_sequence;
use crate::group::{
    add_code, group_order, has_zero_sum_len_m, neg_code, VecSet, WitnessKind, ZSequence,
};
use crate::{Budget, Error, NodeCounter, Result};

/// Symmetry reduction applied by the free-sequence search.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Symmetry {
    /// No reduction; every nondecreasing multiset is visited.
    Off,
    /// Translation (first element fixed to zero) plus coordinate
    /// permutations. Sound for existence: any orbit keeps at least its
    /// lexicographically least representative.
    #[default]
    Standard,
    /// Translation plus the full group of invertible linear maps.
    /// Exhaustive enumeration of the matrix group; only viable for tiny
    /// `m^(n^2)`.
    Affine,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub budget: Budget,
    pub symmetry: Symmetry,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: Budget::default(),
            symmetry: Symmetry::Standard,
        }
    }
}

/// Outcome of a free-sequence search at a fixed length.
#[derive(Clone, Debug)]
pub enum FreeSearch {
    /// A zero-sum-free sequence of the requested length.
    Found(ZSequence),
    /// Proven: no free sequence of that length exists.
    Exhausted,
    /// Node budget ran out before either answer.
    Indeterminate,
}

/// Exact EGZ constant with its extremal certificate.
#[derive(Clone, Debug)]
pub struct EgzResult {
    pub m: u32,
    pub n: usize,
    /// The least s such that no zero-sum-free sequence of length s exists
    /// (exact when `exhaustive`, otherwise a certified lower bound).
    pub value: u64,
    /// A zero-sum-free sequence of length `value - 1`.
    pub extremal: ZSequence,
    pub exhaustive: bool,
}

/// Maximum size of a subset of `F_p^n` with no `p` distinct members
/// summing to zero.
#[derive(Clone, Debug)]
pub struct MaxFreeResult {
    pub p: u32,
    pub n: usize,
    pub value: usize,
    pub witness: VecSet,
    pub exhaustive: bool,
}

/// Code-permutation tables induced by coordinate permutations (identity
/// excluded).
fn permutation_tables(modulus: u32, dim: usize) -> Vec<Vec<u64>> {
    let order = group_order(modulus, dim).unwrap() as usize;
    let mut perms: Vec<Vec<usize>> = Vec::new();
    let mut idx: Vec<usize> = (0..dim).collect();
    permute_into(&mut idx, 0, &mut perms);
    perms.retain(|p| p.iter().enumerate().any(|(i, &j)| i != j));

    let m = modulus as u64;
    perms
        .iter()
        .map(|perm| {
            (0..order as u64)
                .map(|code| {
                    let mut digits = vec![0u64; dim];
                    let mut rest = code;
                    for d in digits.iter_mut() {
                        *d = rest % m;
                        rest /= m;
                    }
                    let mut out = 0u64;
                    for j in (0..dim).rev() {
                        out = out * m + digits[perm[j]];
                    }
                    out
                })
                .collect()
        })
        .collect()
}

fn permute_into(idx: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == idx.len() {
        out.push(idx.clone());
        return;
    }
    for i in k..idx.len() {
        idx.swap(k, i);
        permute_into(idx, k + 1, out);
        idx.swap(k, i);
    }
}

/// Code tables for every invertible linear map on `Z_m^n` (identity
/// excluded). Exhaustive over all `m^(n^2)` matrices, so guarded.
fn linear_tables(modulus: u32, dim: usize) -> Result<Vec<Vec<u64>>> {
    let m = modulus as u64;
    let entries = dim * dim;
    let matrices = m.checked_pow(entries as u32).filter(|&c| c <= 1 << 20);
    let Some(matrices) = matrices else {
        return Err(Error::Precondition(format!(
            "affine symmetry needs m^(n^2) <= 2^20, got m={modulus}, n={dim}"
        )));
    };
    let order = group_order(modulus, dim).unwrap();
    let mut tables: Vec<Vec<u64>> = Vec::new();
    let mut mat = vec![0u64; entries];
    for id in 0..matrices {
        let mut rest = id;
        for e in mat.iter_mut() {
            *e = rest % m;
            rest /= m;
        }
        if !det_is_unit(&mat, dim, m) {
            continue;
        }
        let table: Vec<u64> = (0..order)
            .map(|code| {
                let mut digits = vec![0u64; dim];
                let mut rest = code;
                for d in digits.iter_mut() {
                    *d = rest % m;
                    rest /= m;
                }
                let mut out = 0u64;
                for row in (0..dim).rev() {
                    let mut acc = 0u64;
                    for (col, &dg) in digits.iter().enumerate() {
                        acc += mat[row * dim + col] * dg;
                    }
                    out = out * m + acc % m;
                }
                out
            })
            .collect();
        let identity = table.iter().enumerate().all(|(i, &t)| i as u64 == t);
        if !identity {
            tables.push(table);
        }
    }
    tables.sort();
    tables.dedup();
    Ok(tables)
}

fn det_is_unit(mat: &[u64], dim: usize, m: u64) -> bool {
    fn det(mat: &[i128], dim: usize) -> i128 {
        if dim == 1 {
            return mat[0];
        }
        let mut acc = 0i128;
        for col in 0..dim {
            let mut minor = Vec::with_capacity((dim - 1) * (dim - 1));
            for r in 1..dim {
                for c in 0..dim {
                    if c != col {
                        minor.push(mat[r * dim + c]);
                    }
                }
            }
            let term = mat[col] * det(&minor, dim - 1);
            if col % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }
    let as_i: Vec<i128> = mat.iter().map(|&e| e as i128).collect();
    let d = det(&as_i, dim).rem_euclid(m as i128) as u64;
    gcd(d, m) == 1
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn symmetry_tables(symmetry: Symmetry, modulus: u32, dim: usize) -> Result<Vec<Vec<u64>>> {
    match symmetry {
        Symmetry::Off => Ok(Vec::new()),
        Symmetry::Standard => Ok(permutation_tables(modulus, dim)),
        Symmetry::Affine => linear_tables(modulus, dim),
    }
}

/// True when `prefix` (sorted) is lexicographically minimal among its
/// images under the given code maps. Pruning non-minimal prefixes is
/// sound: any image of a full multiset extending a non-minimal prefix is
/// strictly smaller, so the orbit's least representative survives in
/// another branch.
fn prefix_is_canonical(prefix: &[u64], tables: &[Vec<u64>], scratch: &mut Vec<u64>) -> bool {
    for table in tables {
        scratch.clear();
        scratch.extend(prefix.iter().map(|&c| table[c as usize]));
        scratch.sort_unstable();
        if scratch.as_slice() < prefix {
            return false;
        }
    }
    true
}

struct FreeDfs {
    modulus: u32,
    dim: usize,
    order: u64,
    target_len: usize,
    tables: Vec<Vec<u64>>,
    fix_first_zero: bool,
    counter: NodeCounter,
    /// reach[depth]: bitmap over (count 0..m-1, sum) pairs reachable by
    /// sub-multisets of the current prefix.
    reach: Vec<Vec<bool>>,
    chosen: Vec<u64>,
    counts: Vec<u32>,
    scratch: Vec<u64>,
}

impl FreeDfs {
    fn state(&self, count: u32, sum: u64) -> usize {
        count as usize * self.order as usize + sum as usize
    }

    fn run(&mut self) -> Result<Option<Vec<u64>>> {
        self.dfs(0, 0)
    }

    fn dfs(&mut self, depth: usize, min_code: u64) -> Result<Option<Vec<u64>>> {
        if depth == self.target_len {
            return Ok(Some(self.chosen.clone()));
        }
        let m = self.modulus;
        let start = if depth == 0 && self.fix_first_zero {
            0
        } else {
            min_code
        };
        let end = if depth == 0 && self.fix_first_zero {
            1
        } else {
            self.order
        };
        for code in start..end {
            if !self.counter.tick() {
                return Err(Error::NodeBudget);
            }
            if self.counts[code as usize] >= m - 1 {
                continue;
            }
            // Adding `code` completes a zero-sum of length m iff some
            // (m-1)-sub-multiset of the prefix sums to -code.
            if self.reach[depth][self.state(m - 1, neg_code(code, m, self.dim))] {
                continue;
            }
            self.chosen.push(code);
            if !self.tables.is_empty()
                && !prefix_is_canonical(&self.chosen, &self.tables, &mut self.scratch)
            {
                self.chosen.pop();
                continue;
            }
            self.counts[code as usize] += 1;
            self.push_reach(depth, code);
            let found = self.dfs(depth + 1, code)?;
            self.reach.pop();
            self.counts[code as usize] -= 1;
            self.chosen.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }

    fn push_reach(&mut self, depth: usize, code: u64) {
        let m = self.modulus;
        let mut next = self.reach[depth].clone();
        for count in (0..m - 1).rev() {
            for sum in 0..self.order {
                if self.reach[depth][self.state(count, sum)] {
                    let t = add_code(sum, code, m, self.dim);
                    next[self.state(count + 1, t)] = true;
                }
            }
        }
        self.reach.push(next);
    }
}

/// Searches for a length-`len` sequence over `Z_m^n` with no zero-sum
/// subsequence of length m.
///
/// Backtracks over multisets in nondecreasing encoded order with
/// per-element multiplicity at most m-1 (m equal elements already sum to
/// zero) and incremental DP pruning. Symmetry reduction is optional and
/// sound for existence.
pub fn exists_free_sequence(
    m: u32,
    n: usize,
    len: u64,
    opts: &SearchOptions,
) -> Result<FreeSearch> {
    if len == 0 {
        return Err(Error::Precondition("length must be >= 1".into()));
    }
    let order = group_order(m, n).ok_or(Error::BadGroup { modulus: m, dim: n })?;
    if m < 2 || n == 0 {
        return Err(Error::BadGroup { modulus: m, dim: n });
    }
    if len > (m as u64 - 1) * order {
        // Pigeonhole: some element would appear m times.
        return Ok(FreeSearch::Exhausted);
    }
    let states = m as u128 * order as u128;
    opts.budget.check_table(states * (len as u128 + 1))?;

    let mut base = vec![false; (m as u64 * order) as usize];
    base[0] = true; // empty sub-multiset: count 0, sum 0
    let mut dfs = FreeDfs {
        modulus: m,
        dim: n,
        order,
        target_len: len as usize,
        tables: symmetry_tables(opts.symmetry, m, n)?,
        fix_first_zero: opts.symmetry != Symmetry::Off,
        counter: opts.budget.counter(),
        reach: vec![base],
        chosen: Vec::with_capacity(len as usize),
        counts: vec![0; order as usize],
        scratch: Vec::new(),
    };
    match dfs.run() {
        Ok(Some(codes)) => {
            let mut s = ZSequence::new(m, n)?;
            for c in codes {
                s.push_code(c, 1)?;
            }
            Ok(FreeSearch::Found(s))
        }
        Ok(None) => Ok(FreeSearch::Exhausted),
        Err(Error::NodeBudget) => Ok(FreeSearch::Indeterminate),
        Err(e) => Err(e),
    }
}

/// Computes the EGZ constant of `Z_m^n` by incremental search over the
/// sequence length, seeded with the Harborth certificate at length
/// `(m-1) * 2^n`. The returned extremal sequence is re-verified against
/// the zero-sum oracle.
pub fn egz_constant(m: u32, n: usize, opts: &SearchOptions) -> Result<EgzResult> {
    let mut cert = harborth_sequence(m, n, &opts.budget)?;
    let mut len = cert.len() + 1;
    let exhaustive = loop {
        match exists_free_sequence(m, n, len, opts)? {
            FreeSearch::Found(seq) => {
                cert = seq;
                len += 1;
            }
            FreeSearch::Exhausted => break true,
            FreeSearch::Indeterminate => break false,
        }
    };
    let check = has_zero_sum_len_m(&cert, &opts.budget)?;
    if check.kind() != WitnessKind::None {
        return Err(Error::Verification(
            "extremal certificate failed the zero-sum-free re-check".into(),
        ));
    }
    Ok(EgzResult {
        m,
        n,
        value: len,
        extremal: cert,
        exhaustive,
    })
}

struct MaxFreeDfs {
    modulus: u32,
    dim: usize,
    order: u64,
    counter: NodeCounter,
    /// reach[level]: (count 0..p-1, sum) pairs reachable by distinct
    /// subsets of the current set; one level per included element.
    reach: Vec<Vec<bool>>,
    current: Vec<u64>,
    best: Vec<u64>,
}

impl MaxFreeDfs {
    fn state(&self, count: u32, sum: u64) -> usize {
        count as usize * self.order as usize + sum as usize
    }

    fn dfs(&mut self, code: u64) -> Result<()> {
        if !self.counter.tick() {
            return Err(Error::NodeBudget);
        }
        if code == self.order {
            if self.current.len() > self.best.len() {
                self.best = self.current.clone();
            }
            return Ok(());
        }
        if self.current.len() + (self.order - code) as usize <= self.best.len() {
            return Ok(());
        }
        let p = self.modulus;
        // Include branch first: the first maximum found is then the
        // lexicographically least one, and it is never replaced on ties.
        let top = self.reach.last().unwrap();
        if !top[self.state(p - 1, neg_code(code, p, self.dim))] {
            let mut next = top.clone();
            for count in (0..p - 1).rev() {
                for sum in 0..self.order {
                    if self.reach.last().unwrap()[self.state(count, sum)] {
                        let t = add_code(sum, code, p, self.dim);
                        next[self.state(count + 1, t)] = true;
                    }
                }
            }
            self.reach.push(next);
            self.current.push(code);
            self.dfs(code + 1)?;
            self.current.pop();
            self.reach.pop();
        }
        self.dfs(code + 1)
    }
}

/// Maximum subset of `F_p^n` containing no `p` distinct vectors with zero
/// sum, by include-first branch and bound with the distinct-subset DP as
/// the feasibility oracle.
pub fn max_distinct_free_set(p: u32, n: usize, opts: &SearchOptions) -> Result<MaxFreeResult> {
    if !crate::is_prime(p as u64) {
        return Err(Error::Precondition(format!("p must be prime, got {p}")));
    }
    let order = group_order(p, n).ok_or(Error::BadGroup { modulus: p, dim: n })?;
    let states = p as u128 * order as u128;
    opts.budget.check_table(states * (order as u128 + 1))?;

    let mut base = vec![false; (p as u64 * order) as usize];
    base[0] = true;
    let mut dfs = MaxFreeDfs {
        modulus: p,
        dim: n,
        order,
        counter: opts.budget.counter(),
        reach: vec![base],
        current: Vec::new(),
        best: Vec::new(),
    };
    let exhaustive = match dfs.dfs(0) {
        Ok(()) => true,
        Err(Error::NodeBudget) => false,
        Err(e) => return Err(e),
    };
    let witness = VecSet::from_codes(p, n, dfs.best.iter().copied())?;
    let check = crate::group::find_distinct_zero_sum(&witness, p as usize, &opts.budget)?;
    if check.kind() != WitnessKind::None {
        return Err(Error::Verification(
            "max-free witness failed the distinct-zero-sum re-check".into(),
        ));
    }
    Ok(MaxFreeResult {
        p,
        n,
        value: witness.len(),
        witness,
        exhaustive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::find_distinct_zero_sum;

    fn opts() -> SearchOptions {
        SearchOptions::default()
    }

    #[test]
    fn free_sequence_exists_below_egz_constant() {
        let r = exists_free_sequence(3, 1, 4, &opts()).unwrap();
        let FreeSearch::Found(seq) = r else {
            panic!("expected a free sequence of length 4 over Z_3");
        };
        assert_eq!(seq.len(), 4);
        let w = has_zero_sum_len_m(&seq, &Budget::default()).unwrap();
        assert_eq!(w.kind(), WitnessKind::None);
    }

    #[test]
    fn no_free_sequence_at_egz_constant() {
        assert!(matches!(
            exists_free_sequence(3, 1, 5, &opts()).unwrap(),
            FreeSearch::Exhausted
        ));
        assert!(matches!(
            exists_free_sequence(2, 2, 5, &opts()).unwrap(),
            FreeSearch::Exhausted
        ));
    }

    #[test]
    fn symmetry_levels_agree() {
        for symmetry in [Symmetry::Off, Symmetry::Standard, Symmetry::Affine] {
            let o = SearchOptions {
                symmetry,
                ..opts()
            };
            assert!(matches!(
                exists_free_sequence(3, 2, 8, &o).unwrap(),
                FreeSearch::Found(_)
            ));
            assert!(matches!(
                exists_free_sequence(3, 2, 9, &o).unwrap(),
                FreeSearch::Exhausted
            ));
        }
    }

    #[test]
    fn egz_small_values() {
        let cases = [(3u32, 1usize, 5u64), (3, 2, 9), (2, 3, 9)];
        for (m, n, expect) in cases {
            let r = egz_constant(m, n, &opts()).unwrap();
            assert_eq!(r.value, expect, "s(Z_{m}^{n})");
            assert!(r.exhaustive);
            assert_eq!(r.extremal.len(), expect - 1);
        }
    }

    #[test]
    fn egz_budget_yields_partial_result() {
        let o = SearchOptions {
            budget: Budget::with_nodes(50),
            ..opts()
        };
        let r = egz_constant(3, 2, &o).unwrap();
        assert!(!r.exhaustive);
        assert!(r.value >= 9); // seeded by the verified Harborth certificate
    }

    #[test]
    fn exists_free_indeterminate_on_tiny_budget() {
        let o = SearchOptions {
            budget: Budget::with_nodes(3),
            ..opts()
        };
        assert!(matches!(
            exists_free_sequence(3, 2, 8, &o).unwrap(),
            FreeSearch::Indeterminate
        ));
    }

    #[test]
    fn maxfree_small_values() {
        let cases = [(3u32, 1usize, 2usize), (3, 2, 4), (5, 1, 4)];
        for (p, n, expect) in cases {
            let r = max_distinct_free_set(p, n, &opts()).unwrap();
            assert_eq!(r.value, expect, "maxfree({p},{n})");
            assert!(r.exhaustive);
            let w = find_distinct_zero_sum(&r.witness, p as usize, &Budget::default()).unwrap();
            assert_eq!(w.kind(), WitnessKind::None);
        }
    }

    #[test]
    fn maxfree_char_two_takes_everything() {
        for n in 1..=4usize {
            let r = max_distinct_free_set(2, n, &opts()).unwrap();
            assert_eq!(r.value, 1 << n);
            assert!(r.exhaustive);
        }
    }

    #[test]
    fn maxfree_rejects_composite_p() {
        assert!(max_distinct_free_set(4, 1, &opts()).is_err());
    }

    #[test]
    fn searches_are_repeatable() {
        let a = egz_constant(3, 2, &opts()).unwrap();
        let b = egz_constant(3, 2, &opts()).unwrap();
        assert_eq!(a.extremal, b.extremal);
        let x = max_distinct_free_set(3, 2, &opts()).unwrap();
        let y = max_distinct_free_set(3, 2, &opts()).unwrap();
        assert_eq!(x.witness.codes(), y.witness.codes());
    }

    #[test]
    fn linear_symmetry_group_size_guard() {
        assert!(linear_tables(5, 3).is_err()); // 5^9 matrices
        let tables = linear_tables(3, 2).unwrap();
        // |GL_2(F_3)| = 48, identity excluded.
        assert_eq!(tables.len(), 47);
    }
}
