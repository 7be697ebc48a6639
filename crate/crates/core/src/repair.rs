//! Constructive repair of zero-sum solutions: badness via cover numbers,
//! N/M accounting, greedy independent sets, rainbow partitions,
//! probabilistic bad-subset elimination, and the greedy replacement
//! pipeline that turns a zero-sum p-tuple with repeats into one with
//! pairwise-distinct vectors.
//!
//! Badness of a sum `w` is always relative to an enumerable family: the
//! distinct-element ell-subsets of `A` summing to `w`. `w` is bad when
//! that family admits a cover of size at most p. Enumeration is budgeted
//! and the outcome tri-state — never a silent guess.
//!
//! Deterministic tie-breaking throughout: scans run in ascending encoded
//! order and every choice takes the lexicographically least admissible
//! option, so pipelines replay bit-identically for a fixed seed.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::bounds::cprime_lambda;
use crate::group::{
    add_code, find_distinct_zero_sum, group_order, pick_k_sum, sub_code, GroupVec, TieBreak,
    VecSet, Witness,
};
use crate::{is_prime, Budget, Error, NodeCounter, Result};

/// An ordered p-tuple of vectors in `F_p^n` with zero sum (repeats
/// allowed). The tuple length always equals the modulus.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SolutionTuple {
    vectors: Vec<GroupVec>,
}

impl SolutionTuple {
    pub fn new(vectors: Vec<GroupVec>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::Precondition("empty solution tuple".into()));
        };
        let (m, n) = (first.modulus(), first.dim());
        if vectors.len() != m as usize {
            return Err(Error::Precondition(format!(
                "solution tuple over Z_{m}^{n} must have length {m}, got {}",
                vectors.len()
            )));
        }
        let mut acc = GroupVec::zero(m, n)?;
        for v in &vectors {
            acc = acc.try_add(v)?;
        }
        if !acc.is_zero() {
            return Err(Error::Precondition(
                "solution tuple does not sum to zero".into(),
            ));
        }
        Ok(SolutionTuple { vectors })
    }

    pub fn vectors(&self) -> &[GroupVec] {
        &self.vectors
    }

    pub fn modulus(&self) -> u32 {
        self.vectors[0].modulus()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn codes(&self) -> Vec<u64> {
        self.vectors.iter().map(|v| v.code()).collect()
    }

    pub fn distinct_count(&self) -> usize {
        self.codes().into_iter().collect::<BTreeSet<_>>().len()
    }

    pub fn is_distinct(&self) -> bool {
        self.distinct_count() == self.vectors.len()
    }

    /// Multiplicity of the most repeated vector.
    pub fn max_multiplicity(&self) -> usize {
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for c in self.codes() {
            *counts.entry(c).or_insert(0) += 1;
        }
        counts.values().copied().max().unwrap_or(0)
    }
}

/// A partition of the index set `{0, ..., k-1}` into equal-size blocks
/// plus a short remainder.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct TuplePartition {
    blocks: Vec<Vec<usize>>,
    remainder: Vec<usize>,
    k: usize,
}

impl TuplePartition {
    pub fn new(blocks: Vec<Vec<usize>>, remainder: Vec<usize>, k: usize) -> Result<Self> {
        let mut seen = vec![false; k];
        let mut mark = |i: usize| -> Result<()> {
            if i >= k || seen[i] {
                return Err(Error::Precondition(format!(
                    "index {i} repeated or out of range in partition of {k}"
                )));
            }
            seen[i] = true;
            Ok(())
        };
        let block_size = blocks.first().map(|b| b.len()).unwrap_or(0);
        for b in &blocks {
            if b.len() != block_size || b.is_empty() {
                return Err(Error::Precondition(
                    "partition blocks must share a positive size".into(),
                ));
            }
            for &i in b {
                mark(i)?;
            }
        }
        if !blocks.is_empty() && remainder.len() >= block_size {
            return Err(Error::Precondition(
                "partition remainder must be shorter than a block".into(),
            ));
        }
        for &i in &remainder {
            mark(i)?;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Precondition("partition does not cover the index set".into()));
        }
        Ok(TuplePartition {
            blocks,
            remainder,
            k,
        })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn remainder(&self) -> &[usize] {
        &self.remainder
    }

    pub fn index_count(&self) -> usize {
        self.k
    }
}

/// Splits `{0, ..., k-1}` into `floor(k/ell)` blocks of size `ell` plus a
/// remainder, such that no block (or the remainder) sees a colour twice.
///
/// Requires every colour to occur at most `k/ell` times. Construction:
/// relabel so colour classes are consecutive, put the remainder at the
/// multiples of `floor(k/ell) + 1`, and fill block j with the positions
/// congruent to j modulo `floor(k/ell)`. Any two positions sharing a
/// block are then at distance at least `floor(k/ell)`, which a colour
/// class obeying the occurrence cap cannot span.
pub fn rainbow_partition<C: Ord>(colors: &[C], ell: usize) -> Result<TuplePartition> {
    let k = colors.len();
    if ell < 1 || ell > k {
        return Err(Error::Precondition(format!(
            "rainbow partition needs 1 <= ell <= k, got ell={ell}, k={k}"
        )));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| colors[i].cmp(&colors[j]).then(i.cmp(&j)));
    // Occurrence cap: count <= k/ell, i.e. count*ell <= k.
    let mut run = 1usize;
    for w in order.windows(2) {
        if colors[w[0]] == colors[w[1]] {
            run += 1;
            if run * ell > k {
                return Err(Error::Precondition(format!(
                    "a colour occurs {run} times, more than k/ell = {k}/{ell}"
                )));
            }
        } else {
            run = 1;
        }
    }

    let m = k / ell;
    let r = k - m * ell;
    let remainder_pos: BTreeSet<usize> = (1..=r).map(|j| j * (m + 1)).collect();
    let mut blocks = vec![Vec::with_capacity(ell); m];
    for pos in 1..=k {
        if remainder_pos.contains(&pos) {
            continue;
        }
        let j = if pos % m == 0 { m } else { pos % m };
        blocks[j - 1].push(order[pos - 1]);
    }
    let remainder: Vec<usize> = remainder_pos.iter().map(|&pos| order[pos - 1]).collect();
    debug_assert!(blocks.iter().all(|b| b.len() == ell));
    TuplePartition::new(blocks, remainder, k)
}

/// Outcome of an exact minimum-cover computation capped at `cap`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CoverOutcome {
    /// The exact minimum and one optimal cover achieving it.
    Exact { size: usize, cover: Vec<u64> },
    /// The minimum provably exceeds `cap`.
    ExceedsCap,
}

/// Exact minimum cover of a family of non-empty element sets, by branch
/// and bound: greedy upper bound, pairwise-disjoint-subfamily lower
/// bound, branching on the elements of a smallest uncovered set. Exits
/// early once the minimum provably exceeds `cap`.
pub fn cover_number(family: &[Vec<u64>], cap: usize) -> Result<CoverOutcome> {
    for member in family {
        if member.is_empty() {
            return Err(Error::EmptyFamilyMember);
        }
    }
    Ok(match min_cover(family, cap) {
        Some(cover) => CoverOutcome::Exact {
            size: cover.len(),
            cover,
        },
        None => CoverOutcome::ExceedsCap,
    })
}

/// `Some(optimal cover)` when the minimum is at most `cap`, else `None`.
/// Members must be non-empty; elements within a member need not be
/// sorted.
fn min_cover(family: &[Vec<u64>], cap: usize) -> Option<Vec<u64>> {
    if family.is_empty() {
        return Some(Vec::new());
    }
    let sets: Vec<Vec<u64>> = family
        .iter()
        .map(|s| {
            let mut v = s.clone();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();

    let greedy = greedy_cover(&sets);
    let mut best_size = greedy.len().min(cap + 1);
    let mut best: Option<Vec<u64>> = if greedy.len() <= cap {
        Some(greedy)
    } else {
        None
    };

    let all: Vec<usize> = (0..sets.len()).collect();
    let mut chosen = Vec::new();
    cover_bb(&sets, &all, &mut chosen, &mut best_size, &mut best);
    best.filter(|b| b.len() <= cap)
}

fn greedy_cover(sets: &[Vec<u64>]) -> Vec<u64> {
    let mut uncovered: Vec<usize> = (0..sets.len()).collect();
    let mut cover = Vec::new();
    while !uncovered.is_empty() {
        let mut tally: BTreeMap<u64, usize> = BTreeMap::new();
        for &i in &uncovered {
            for &e in &sets[i] {
                *tally.entry(e).or_insert(0) += 1;
            }
        }
        let (&elem, _) = tally.iter().max_by_key(|(&e, &c)| (c, std::cmp::Reverse(e))).unwrap();
        cover.push(elem);
        uncovered.retain(|&i| sets[i].binary_search(&elem).is_err());
    }
    cover
}

fn disjoint_lower_bound(sets: &[Vec<u64>], uncovered: &[usize]) -> usize {
    let mut used: BTreeSet<u64> = BTreeSet::new();
    let mut count = 0;
    for &i in uncovered {
        if sets[i].iter().all(|e| !used.contains(e)) {
            used.extend(sets[i].iter().copied());
            count += 1;
        }
    }
    count
}

fn cover_bb(
    sets: &[Vec<u64>],
    uncovered: &[usize],
    chosen: &mut Vec<u64>,
    best_size: &mut usize,
    best: &mut Option<Vec<u64>>,
) {
    if uncovered.is_empty() {
        if chosen.len() < *best_size {
            *best_size = chosen.len();
            *best = Some(chosen.clone());
        }
        return;
    }
    if chosen.len() + disjoint_lower_bound(sets, uncovered) >= *best_size {
        return;
    }
    let &branch = uncovered
        .iter()
        .min_by_key(|&&i| (sets[i].len(), i))
        .unwrap();
    for &e in &sets[branch] {
        let rest: Vec<usize> = uncovered
            .iter()
            .copied()
            .filter(|&i| sets[i].binary_search(&e).is_err())
            .collect();
        chosen.push(e);
        cover_bb(sets, &rest, chosen, best_size, best);
        chosen.pop();
    }
}

/// Tri-state badness verdict for a target sum.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Badness {
    /// The representation family has a cover of size at most p.
    Bad { cover: Vec<GroupVec> },
    NotBad,
    /// Enumeration budget ran out.
    Indeterminate,
}

/// Enumerates the distinct-element ell-subsets of `codes` summing to
/// `target`, aborting with `None` (definitely not bad) as soon as more
/// than `cap` pairwise-disjoint members have been seen. On completion,
/// returns the full family.
fn representation_family(
    codes: &[u64],
    ell: usize,
    target: u64,
    modulus: u32,
    dim: usize,
    cap: usize,
    counter: &mut NodeCounter,
) -> Result<Option<Vec<Vec<u64>>>> {
    struct Enumerator<'a> {
        codes: &'a [u64],
        ell: usize,
        target: u64,
        modulus: u32,
        dim: usize,
        cap: usize,
        family: Vec<Vec<u64>>,
        stack: Vec<u64>,
        first_fit_used: BTreeSet<u64>,
        disjoint: usize,
    }
    impl Enumerator<'_> {
        /// Returns true when the disjoint bound tripped.
        fn dfs(&mut self, start: usize, sum: u64, counter: &mut NodeCounter) -> Result<bool> {
            if self.stack.len() == self.ell {
                if sum == self.target {
                    if self.stack.iter().all(|e| !self.first_fit_used.contains(e)) {
                        self.first_fit_used.extend(self.stack.iter().copied());
                        self.disjoint += 1;
                        if self.disjoint > self.cap {
                            return Ok(true);
                        }
                    }
                    self.family.push(self.stack.clone());
                }
                return Ok(false);
            }
            let need = self.ell - self.stack.len();
            for i in start..self.codes.len() {
                if self.codes.len() - i < need {
                    break;
                }
                if !counter.tick() {
                    return Err(Error::NodeBudget);
                }
                self.stack.push(self.codes[i]);
                let tripped = self.dfs(
                    i + 1,
                    add_code(sum, self.codes[i], self.modulus, self.dim),
                    counter,
                )?;
                self.stack.pop();
                if tripped {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }

    let mut e = Enumerator {
        codes,
        ell,
        target,
        modulus,
        dim,
        cap,
        family: Vec::new(),
        stack: Vec::new(),
        first_fit_used: BTreeSet::new(),
        disjoint: 0,
    };
    if e.dfs(0, 0, counter)? {
        Ok(None)
    } else {
        Ok(Some(e.family))
    }
}

/// `Some(cover)` when bad, `None` when not bad; budget errors bubble up.
fn bad_vector_code(
    w: u64,
    codes: &[u64],
    ell: usize,
    p: usize,
    modulus: u32,
    dim: usize,
    counter: &mut NodeCounter,
) -> Result<Option<Vec<u64>>> {
    match representation_family(codes, ell, w, modulus, dim, p, counter)? {
        None => Ok(None),
        Some(family) => Ok(min_cover(&family, p)),
    }
}

/// Decides whether `w` is bad for `a`: whether the family of
/// distinct-element ell-subsets of `a` summing to `w` has a cover of size
/// at most `p`. Returns the cover when bad. An empty family is bad with
/// the empty cover; a blown enumeration budget yields
/// [`Badness::Indeterminate`].
pub fn is_bad_vector(
    w: &GroupVec,
    a: &VecSet,
    ell: usize,
    p: usize,
    budget: &Budget,
) -> Result<Badness> {
    if ell < 2 {
        return Err(Error::Precondition("badness needs ell >= 2".into()));
    }
    if w.modulus() != a.modulus() || w.dim() != a.dim() {
        return Err(Error::GroupMismatch {
            m1: a.modulus(),
            n1: a.dim(),
            m2: w.modulus(),
            n2: w.dim(),
        });
    }
    let mut counter = budget.counter();
    match bad_vector_code(
        w.code(),
        &a.codes(),
        ell,
        p,
        a.modulus(),
        a.dim(),
        &mut counter,
    ) {
        Ok(Some(cover)) => Ok(Badness::Bad {
            cover: cover
                .into_iter()
                .map(|c| GroupVec::from_code(c, a.modulus(), a.dim()).unwrap())
                .collect(),
        }),
        Ok(None) => Ok(Badness::NotBad),
        Err(Error::NodeBudget) => Ok(Badness::Indeterminate),
        Err(e) => Err(e),
    }
}

/// Whether the pair `{x, y}` is bad: at most `p` unordered pairs of
/// distinct elements of `a` share the sum `x + y`. For pairs, the
/// representations of a fixed sum are automatically pairwise disjoint, so
/// the representation count is the cover number.
pub fn is_bad_pair(x: &GroupVec, y: &GroupVec, a: &VecSet, p: usize) -> Result<bool> {
    if x == y {
        return Err(Error::Precondition("is_bad_pair needs x != y".into()));
    }
    if !a.contains(x) || !a.contains(y) {
        return Err(Error::Precondition(
            "is_bad_pair arguments must lie in the set".into(),
        ));
    }
    let w = x.try_add(y)?.code();
    let (m, n) = (a.modulus(), a.dim());
    let mut count = 0usize;
    for u in a.codes() {
        let v = sub_code(w, u, m, n);
        if v > u && a.contains_code(v) {
            count += 1;
        }
    }
    Ok(count <= p)
}

/// The N/M accounting of bad sums over `a`.
///
/// `n_counts[y]` counts the (ell-1)-tuples over `a` (ordered, repeats
/// allowed) summing to `y`; `m_counts[y]` counts the `z in a` such that
/// `y + z` is bad and `z` lies in the computed cover of `y + z`. Both
/// accounting identities are re-checked exactly before returning:
/// `sum_y N_y = |a|^(ell-1)` and `sum_y M_y <= p * |ell A|`.
#[derive(Clone, Debug)]
pub struct BadnessProfile {
    pub ell: usize,
    pub p: usize,
    pub set_size: usize,
    pub sumset_size: usize,
    pub n_counts: BTreeMap<u64, u64>,
    pub m_counts: BTreeMap<u64, u64>,
    pub heavy: BTreeSet<u64>,
    pub heavy_threshold: f64,
    pub bad_sum_count: usize,
    /// The bound `sum_y M_y * N_y` on the number of bad ell-subsets.
    pub bad_subset_upper: u64,
}

impl BadnessProfile {
    pub fn sum_n(&self) -> u64 {
        self.n_counts.values().sum()
    }

    pub fn sum_m(&self) -> u64 {
        self.m_counts.values().sum()
    }
}

pub fn badness_profile(a: &VecSet, ell: usize, p: usize, budget: &Budget) -> Result<BadnessProfile> {
    if ell < 2 {
        return Err(Error::Precondition("badness profile needs ell >= 2".into()));
    }
    if a.is_empty() {
        return Err(Error::Precondition("badness profile needs a nonempty set".into()));
    }
    let (m, n) = (a.modulus(), a.dim());
    let order = budget.check_table(group_order(m, n).unwrap() as u128)?;
    let codes = a.codes();

    // (ell-1)-fold convolution of the indicator with itself.
    let mut conv = vec![0u64; order];
    for &c in &codes {
        conv[c as usize] += 1;
    }
    for _ in 2..ell {
        let mut next = vec![0u64; order];
        for (s, &count) in conv.iter().enumerate() {
            if count > 0 {
                for &c in &codes {
                    next[add_code(s as u64, c, m, n) as usize] += count;
                }
            }
        }
        conv = next;
    }
    let n_counts: BTreeMap<u64, u64> = conv
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| (s as u64, c))
        .collect();

    let ell_sumset = crate::group::sumset(a, ell as u32, budget)?;
    let mut counter = budget.counter();
    let mut m_counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut bad_sum_count = 0usize;
    for w in ell_sumset.codes() {
        if let Some(cover) = bad_vector_code(w, &codes, ell, p, m, n, &mut counter)? {
            bad_sum_count += 1;
            for z in cover {
                *m_counts.entry(sub_code(w, z, m, n)).or_insert(0) += 1;
            }
        }
    }

    // Exact re-check of the accounting identities.
    let sum_n: u64 = n_counts.values().sum();
    let expected = (codes.len() as u64)
        .checked_pow(ell as u32 - 1)
        .ok_or_else(|| Error::Numeric("|A|^(ell-1) overflows".into()))?;
    if sum_n != expected {
        return Err(Error::Verification(format!(
            "sum of N-counts is {sum_n}, expected |A|^(ell-1) = {expected}"
        )));
    }
    let sum_m: u64 = m_counts.values().sum();
    let m_cap = p as u64 * ell_sumset.len() as u64;
    if sum_m > m_cap {
        return Err(Error::Verification(format!(
            "sum of M-counts is {sum_m}, exceeding p * |ell A| = {m_cap}"
        )));
    }

    let cprime = cprime_lambda(1.0 / ell as f64)?.value;
    let heavy_threshold = codes.len() as f64
        / (2f64.powi(ell as i32 + 1)
            * (p as f64).powi(2 * ell as i32)
            * cprime.powi((ell * n) as i32));
    let heavy: BTreeSet<u64> = m_counts
        .iter()
        .filter(|(_, &c)| c as f64 >= heavy_threshold)
        .map(|(&y, _)| y)
        .collect();

    let bad_subset_upper = n_counts
        .iter()
        .map(|(y, &nc)| nc * m_counts.get(y).copied().unwrap_or(0))
        .sum();

    Ok(BadnessProfile {
        ell,
        p,
        set_size: codes.len(),
        sumset_size: ell_sumset.len(),
        n_counts,
        m_counts,
        heavy,
        heavy_threshold,
        bad_sum_count,
        bad_subset_upper,
    })
}

/// Greedy minimum-degree-first independent set. The result always has
/// size at least `sum_v 1/(deg(v) + 1)`.
pub fn caro_wei_independent_set(vertices: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>> {
    let mut adj = vec![BTreeSet::new(); vertices];
    for &(u, v) in edges {
        if u >= vertices || v >= vertices {
            return Err(Error::Precondition(format!(
                "edge ({u},{v}) out of range for {vertices} vertices"
            )));
        }
        if u == v {
            return Err(Error::Precondition(format!("self-loop at vertex {u}")));
        }
        adj[u].insert(v);
        adj[v].insert(u);
    }
    let mut alive = vec![true; vertices];
    let mut deg: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut out = Vec::new();
    loop {
        let Some(v) = (0..vertices)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (deg[v], v))
        else {
            break;
        };
        out.push(v);
        let mut dead = vec![v];
        dead.extend(adj[v].iter().copied().filter(|&u| alive[u]));
        for &d in &dead {
            alive[d] = false;
        }
        for &d in &dead {
            for &u in &adj[d] {
                if alive[u] {
                    deg[u] -= 1;
                }
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

pub const GENERATOR_CHACHA12: &str = "chacha12";

/// A reproducible inclusion-sampling plan: identical `(seed,
/// generator_id)` always reproduce identical subsets.
#[derive(Clone, Debug, Serialize)]
pub struct SamplingPlan {
    pub q: f64,
    pub seed: u64,
    pub generator_id: String,
}

impl SamplingPlan {
    pub fn chacha12(q: f64, seed: u64) -> Self {
        SamplingPlan {
            q,
            seed,
            generator_id: GENERATOR_CHACHA12.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::Precondition(format!(
                "sampling probability must lie in [0,1], got {}",
                self.q
            )));
        }
        if self.generator_id != GENERATOR_CHACHA12 {
            return Err(Error::Precondition(format!(
                "unknown generator `{}` (expected `{GENERATOR_CHACHA12}`)",
                self.generator_id
            )));
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(self.seed)
    }
}

/// A seeded uniform random subset of `Z_m^n`, for demos and tests.
pub fn sample_uniform_set(
    modulus: u32,
    dim: usize,
    density: f64,
    seed: u64,
    budget: &Budget,
) -> Result<VecSet> {
    let order = group_order(modulus, dim).ok_or(Error::BadGroup { modulus, dim })?;
    budget.check_table(order as u128)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut set = VecSet::new(modulus, dim)?;
    for code in 0..order {
        if rng.random::<f64>() < density {
            set.insert_code(code)?;
        }
    }
    Ok(set)
}

fn sample_delete_bad_inner(
    a: &VecSet,
    ell: usize,
    p: usize,
    plan: &SamplingPlan,
    budget: &Budget,
) -> Result<(VecSet, usize, usize)> {
    plan.validate()?;
    if ell < 2 {
        return Err(Error::Precondition("bad-subset elimination needs ell >= 2".into()));
    }
    let (m, n) = (a.modulus(), a.dim());
    let mut rng = plan.rng();
    let sampled: Vec<u64> = a
        .codes()
        .into_iter()
        .filter(|_| rng.random::<f64>() < plan.q)
        .collect();
    let sampled_size = sampled.len();

    let full_codes = a.codes();
    let mut alive: BTreeSet<u64> = sampled.iter().copied().collect();
    let mut bad_memo: HashMap<u64, bool> = HashMap::new();
    let mut counter = budget.counter();
    let mut deleted = 0usize;

    // The deletion rule always removes the subset minimum, which in a
    // lex-ordered enumeration is the subtree root. Elements above the
    // current root are therefore still alive, so each root's subtree is
    // enumerated intact and abandoned as soon as the root dies. A subset
    // fully alive at the end was thus examined and found not bad.
    for (i, &root) in sampled.iter().enumerate() {
        let mut stack = vec![root];
        if find_bad_rooted(
            &sampled,
            i + 1,
            &mut stack,
            root,
            ell,
            p,
            m,
            n,
            &full_codes,
            &mut bad_memo,
            &mut counter,
        )? {
            alive.remove(&root);
            deleted += 1;
        }
    }

    let kept = VecSet::from_codes(m, n, alive.into_iter())?;
    Ok((kept, sampled_size, deleted))
}

/// Extends `stack` (rooted at its first element) to ell-subsets of
/// `sampled[start..]` in lex order; true as soon as one has a bad sum.
#[allow(clippy::too_many_arguments)]
fn find_bad_rooted(
    sampled: &[u64],
    start: usize,
    stack: &mut Vec<u64>,
    sum: u64,
    ell: usize,
    p: usize,
    modulus: u32,
    dim: usize,
    full_codes: &[u64],
    memo: &mut HashMap<u64, bool>,
    counter: &mut NodeCounter,
) -> Result<bool> {
    if stack.len() == ell {
        let bad = match memo.get(&sum) {
            Some(&b) => b,
            None => {
                let b =
                    bad_vector_code(sum, full_codes, ell, p, modulus, dim, counter)?.is_some();
                memo.insert(sum, b);
                b
            }
        };
        return Ok(bad);
    }
    let need = ell - stack.len();
    for i in start..sampled.len() {
        if sampled.len() - i < need {
            break;
        }
        if !counter.tick() {
            return Err(Error::NodeBudget);
        }
        stack.push(sampled[i]);
        let r = find_bad_rooted(
            sampled,
            i + 1,
            stack,
            add_code(sum, sampled[i], modulus, dim),
            ell,
            p,
            modulus,
            dim,
            full_codes,
            memo,
            counter,
        )?;
        stack.pop();
        if r {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Samples each member of `a` with probability `plan.q`, then deletes the
/// lowest-encoded element of every bad ell-subset found inside the
/// sample (badness measured against the full set `a`). The result
/// contains no bad ell-subset, and its size is at least the sample size
/// minus the number of bad subsets found.
pub fn sample_delete_bad(
    a: &VecSet,
    ell: usize,
    p: usize,
    plan: &SamplingPlan,
    budget: &Budget,
) -> Result<VecSet> {
    sample_delete_bad_inner(a, ell, p, plan, budget).map(|(kept, _, _)| kept)
}

/// Searches `a` for a zero-sum tuple of length `p = |modulus|` whose
/// every vector repeats at most `lambda * p` times. Realized by the
/// exact subset DP with a per-element multiplicity cap, scanning in
/// ascending encoded order and returning the lexicographically least
/// admissible multiset. `None` when no such tuple exists.
pub fn find_low_multiplicity_solution(
    a: &VecSet,
    p: usize,
    lambda: f64,
    budget: &Budget,
) -> Result<Option<SolutionTuple>> {
    if p as u32 != a.modulus() {
        return Err(Error::Precondition(format!(
            "tuple length {p} must equal the modulus {}",
            a.modulus()
        )));
    }
    if !is_prime(p as u64) {
        return Err(Error::Precondition(format!("p must be prime, got {p}")));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidLambda(lambda));
    }
    if p as f64 * lambda <= 1.0 + 1e-12 {
        return Err(Error::Precondition(format!(
            "needs p > 1/lambda, got p={p}, lambda={lambda}"
        )));
    }
    if a.is_empty() {
        return Ok(None);
    }
    let cap = ((lambda * p as f64) + 1e-9).floor() as u32;
    let mut items = Vec::new();
    for c in a.codes() {
        for _ in 0..cap.min(p as u32) {
            items.push(c);
        }
    }
    let found = pick_k_sum(
        &items,
        p,
        0,
        a.modulus(),
        a.dim(),
        TieBreak::PreferTake,
        budget,
    )?;
    match found {
        Some(codes) => {
            let vectors = codes
                .into_iter()
                .map(|c| GroupVec::from_code(c, a.modulus(), a.dim()).unwrap())
                .collect();
            Ok(Some(SolutionTuple::new(vectors)?))
        }
        None => Ok(None),
    }
}

/// Result of the disjoint-solution filtration: the level at which a
/// collection larger than the threshold appeared, the surviving subset at
/// that level, and the collection itself.
#[derive(Clone, Debug)]
pub struct Filtration {
    pub level: usize,
    pub survivors: VecSet,
    pub collection: Vec<SolutionTuple>,
}

/// Runs the descending filtration: for j = p down to 1, greedily build a
/// maximal collection of pairwise vector-disjoint zero-sum tuples with
/// exactly j distinct values; stop and report as soon as a collection
/// exceeds `threshold`, otherwise delete every vector the collection used
/// and descend. Returns `None` when the process exhausts the set.
pub fn disjoint_solution_filtration(
    a: &VecSet,
    p: usize,
    threshold: u64,
    budget: &Budget,
) -> Result<Option<Filtration>> {
    if p as u32 != a.modulus() {
        return Err(Error::Precondition(format!(
            "tuple length {p} must equal the modulus {}",
            a.modulus()
        )));
    }
    if a.is_empty() {
        return Err(Error::Precondition("filtration needs a nonempty set".into()));
    }
    let (m, n) = (a.modulus(), a.dim());
    let mut counter = budget.counter();
    let mut current: BTreeSet<u64> = a.codes().into_iter().collect();

    for level in (1..=p).rev() {
        if current.is_empty() {
            return Ok(None);
        }
        let survivors = VecSet::from_codes(m, n, current.iter().copied())?;
        let mut collection = Vec::new();
        let mut avail: Vec<u64> = current.iter().copied().collect();
        while let Some(codes) =
            exact_distinct_solution(&avail, p, level, m, n, &mut counter)?
        {
            let used: BTreeSet<u64> = codes.iter().copied().collect();
            let vectors = codes
                .iter()
                .map(|&c| GroupVec::from_code(c, m, n).unwrap())
                .collect();
            collection.push(SolutionTuple::new(vectors)?);
            avail.retain(|c| !used.contains(c));
        }
        if collection.len() as u64 > threshold {
            return Ok(Some(Filtration {
                level,
                survivors,
                collection,
            }));
        }
        for sol in &collection {
            for c in sol.codes() {
                current.remove(&c);
            }
        }
    }
    Ok(None)
}

/// Lexicographically least zero-sum p-multiset over `avail` (sorted
/// codes) with exactly `distinct` distinct values.
fn exact_distinct_solution(
    avail: &[u64],
    p: usize,
    distinct: usize,
    modulus: u32,
    dim: usize,
    counter: &mut NodeCounter,
) -> Result<Option<Vec<u64>>> {
    fn dfs(
        avail: &[u64],
        p: usize,
        distinct: usize,
        modulus: u32,
        dim: usize,
        from: usize,
        used_distinct: usize,
        sum: u64,
        stack: &mut Vec<u64>,
        counter: &mut NodeCounter,
    ) -> Result<Option<Vec<u64>>> {
        if stack.len() == p {
            if used_distinct == distinct && sum == 0 {
                return Ok(Some(stack.clone()));
            }
            return Ok(None);
        }
        // Each remaining position introduces at most one new value.
        if used_distinct + (p - stack.len()) < distinct {
            return Ok(None);
        }
        for i in from..avail.len() {
            let is_repeat = !stack.is_empty() && avail[i] == *stack.last().unwrap();
            let next_distinct = if is_repeat {
                used_distinct
            } else {
                used_distinct + 1
            };
            if next_distinct > distinct {
                break;
            }
            if !counter.tick() {
                return Err(Error::NodeBudget);
            }
            stack.push(avail[i]);
            let r = dfs(
                avail,
                p,
                distinct,
                modulus,
                dim,
                i,
                next_distinct,
                add_code(sum, avail[i], modulus, dim),
                stack,
                counter,
            )?;
            stack.pop();
            if r.is_some() {
                return Ok(r);
            }
        }
        Ok(None)
    }
    let mut stack = Vec::with_capacity(p);
    dfs(avail, p, distinct, modulus, dim, 0, 0, 0, &mut stack, counter)
}

/// Replaces the vectors of each partition block with a distinct-element
/// subset of `a` preserving the block sum, avoiding all vectors already
/// fixed, until the whole tuple is pairwise distinct. Remainder vectors
/// stay as they are. An already-distinct solution is returned unchanged.
///
/// Caller establishes that no block sum is bad; when a block nevertheless
/// admits no admissible replacement, `Error::BadBlock(j)` identifies it
/// so the caller can re-run badness elimination.
pub fn repair_solution(
    a: &VecSet,
    sol: &SolutionTuple,
    part: &TuplePartition,
    budget: &Budget,
) -> Result<SolutionTuple> {
    if sol.modulus() != a.modulus() || sol.dim() != a.dim() {
        return Err(Error::GroupMismatch {
            m1: a.modulus(),
            n1: a.dim(),
            m2: sol.modulus(),
            n2: sol.dim(),
        });
    }
    let p = sol.vectors().len();
    if part.index_count() != p {
        return Err(Error::Precondition(format!(
            "partition covers {} indices, solution has {p}",
            part.index_count()
        )));
    }
    let codes = sol.codes();
    let rainbow = |idx: &[usize]| {
        let set: BTreeSet<u64> = idx.iter().map(|&i| codes[i]).collect();
        set.len() == idx.len()
    };
    for (j, block) in part.blocks().iter().enumerate() {
        if !rainbow(block) {
            return Err(Error::Precondition(format!("block {j} is not rainbow")));
        }
    }
    if !rainbow(part.remainder()) {
        return Err(Error::Precondition("remainder is not rainbow".into()));
    }

    if sol.is_distinct() {
        return Ok(sol.clone());
    }

    let (m, n) = (a.modulus(), a.dim());
    let pool = a.codes();
    let mut counter = budget.counter();
    let mut fixed: BTreeSet<u64> = BTreeSet::new();
    let mut result: Vec<Option<u64>> = vec![None; p];
    for &i in part.remainder() {
        result[i] = Some(codes[i]);
        fixed.insert(codes[i]);
    }
    for (j, block) in part.blocks().iter().enumerate() {
        let target = block
            .iter()
            .fold(0u64, |acc, &i| add_code(acc, codes[i], m, n));
        let replacement =
            lex_least_avoiding_subset(&pool, block.len(), target, m, n, &fixed, &mut counter)?
                .ok_or(Error::BadBlock(j))?;
        let mut idx: Vec<usize> = block.clone();
        idx.sort_unstable();
        for (&i, &c) in idx.iter().zip(&replacement) {
            result[i] = Some(c);
            fixed.insert(c);
        }
    }
    let vectors: Vec<GroupVec> = result
        .into_iter()
        .map(|c| GroupVec::from_code(c.unwrap(), m, n).unwrap())
        .collect();
    let out = SolutionTuple::new(vectors)?;
    if !out.is_distinct() {
        return Err(Error::Verification("repair produced repeated vectors".into()));
    }
    Ok(out)
}

/// Lexicographically least `ell`-subset of `pool` (sorted, distinct
/// elements) summing to `target` and avoiding `forbid`.
fn lex_least_avoiding_subset(
    pool: &[u64],
    ell: usize,
    target: u64,
    modulus: u32,
    dim: usize,
    forbid: &BTreeSet<u64>,
    counter: &mut NodeCounter,
) -> Result<Option<Vec<u64>>> {
    fn dfs(
        pool: &[u64],
        ell: usize,
        target: u64,
        modulus: u32,
        dim: usize,
        forbid: &BTreeSet<u64>,
        start: usize,
        sum: u64,
        stack: &mut Vec<u64>,
        counter: &mut NodeCounter,
    ) -> Result<Option<Vec<u64>>> {
        if stack.len() == ell {
            return Ok(if sum == target {
                Some(stack.clone())
            } else {
                None
            });
        }
        let need = ell - stack.len();
        for i in start..pool.len() {
            if pool.len() - i < need {
                break;
            }
            if forbid.contains(&pool[i]) {
                continue;
            }
            if !counter.tick() {
                return Err(Error::NodeBudget);
            }
            stack.push(pool[i]);
            let r = dfs(
                pool,
                ell,
                target,
                modulus,
                dim,
                forbid,
                i + 1,
                add_code(sum, pool[i], modulus, dim),
                stack,
                counter,
            )?;
            stack.pop();
            if r.is_some() {
                return Ok(r);
            }
        }
        Ok(None)
    }
    let mut stack = Vec::with_capacity(ell);
    dfs(
        pool, ell, target, modulus, dim, forbid, 0, 0, &mut stack, counter,
    )
}

/// Independent checker for [`repair_solution`] outputs: pairwise
/// distinct, zero total sum, membership in `a`, and per-block (and
/// remainder) sums preserved.
pub fn verify_repair(
    a: &VecSet,
    original: &SolutionTuple,
    part: &TuplePartition,
    repaired: &SolutionTuple,
) -> bool {
    let p = original.vectors().len();
    if repaired.vectors().len() != p || part.index_count() != p {
        return false;
    }
    if !repaired.is_distinct() {
        return false;
    }
    if !repaired.vectors().iter().all(|v| a.contains(v)) {
        return false;
    }
    let (m, n) = (a.modulus(), a.dim());
    let sum_of = |tuple: &SolutionTuple, idx: &[usize]| {
        idx.iter()
            .fold(0u64, |acc, &i| add_code(acc, tuple.codes()[i], m, n))
    };
    for block in part.blocks() {
        if sum_of(original, block) != sum_of(repaired, block) {
            return false;
        }
    }
    sum_of(original, part.remainder()) == sum_of(repaired, part.remainder())
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockReplacement {
    pub block: usize,
    pub from: Vec<u64>,
    pub to: Vec<u64>,
}

/// Full trace of one pipeline invocation.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    /// Size of the random sample before bad-subset elimination.
    pub sampled_size: usize,
    /// Elements deleted by bad-subset elimination.
    pub eliminated: usize,
    /// The cleaned subset the base solution is drawn from.
    pub kept: VecSet,
    pub base_solution: Option<SolutionTuple>,
    pub partition: Option<TuplePartition>,
    pub repaired: Option<SolutionTuple>,
    pub replacements: Vec<BlockReplacement>,
    /// True when the distinct-subset DP oracle supplied the verdict
    /// instead of the constructive path.
    pub fallback: bool,
    pub witness: Witness,
}

/// Runs the constructive pipeline on `a`: sample and eliminate bad
/// ell-subsets, find a low-multiplicity zero-sum tuple, split it by a
/// rainbow partition, and greedily repair it into `p` pairwise-distinct
/// vectors. Falls back to the exact DP oracle whenever the constructive
/// path is inapplicable or finds nothing, so the existence verdict always
/// matches the oracle.
pub fn run_pipeline(
    a: &VecSet,
    p: usize,
    ell: usize,
    plan: &SamplingPlan,
    budget: &Budget,
) -> Result<PipelineRun> {
    if !is_prime(p as u64) {
        return Err(Error::Precondition(format!("p must be prime, got {p}")));
    }
    if p as u32 != a.modulus() {
        return Err(Error::Precondition(format!(
            "p = {p} must equal the modulus {}",
            a.modulus()
        )));
    }
    let oracle = |a: &VecSet| find_distinct_zero_sum(a, p, budget);

    // The low-multiplicity step needs p > ell and a cap of at least 1.
    if ell < 2 || ell >= p {
        return Ok(PipelineRun {
            sampled_size: 0,
            eliminated: 0,
            kept: VecSet::new(a.modulus(), a.dim())?,
            base_solution: None,
            partition: None,
            repaired: None,
            replacements: Vec::new(),
            fallback: true,
            witness: oracle(a)?,
        });
    }

    let (kept, sampled_size, eliminated) = sample_delete_bad_inner(a, ell, p, plan, budget)?;
    let base = if kept.is_empty() {
        None
    } else {
        find_low_multiplicity_solution(&kept, p, 1.0 / ell as f64, budget)?
    };
    let Some(base) = base else {
        return Ok(PipelineRun {
            sampled_size,
            eliminated,
            kept,
            base_solution: None,
            partition: None,
            repaired: None,
            replacements: Vec::new(),
            fallback: true,
            witness: oracle(a)?,
        });
    };

    let part = rainbow_partition(&base.codes(), ell)?;
    match repair_solution(a, &base, &part, budget) {
        Ok(repaired) => {
            if !verify_repair(a, &base, &part, &repaired) {
                return Err(Error::Verification(
                    "repair output failed the independent checker".into(),
                ));
            }
            let mut sorted = repaired.vectors().to_vec();
            sorted.sort();
            let witness = Witness::distinct_subset(sorted);
            debug_assert!(witness.verifies_for_set(a, p));
            let replacements = part
                .blocks()
                .iter()
                .enumerate()
                .map(|(j, block)| {
                    let mut idx = block.clone();
                    idx.sort_unstable();
                    BlockReplacement {
                        block: j,
                        from: idx.iter().map(|&i| base.codes()[i]).collect(),
                        to: idx.iter().map(|&i| repaired.codes()[i]).collect(),
                    }
                })
                .collect();
            Ok(PipelineRun {
                sampled_size,
                eliminated,
                kept,
                base_solution: Some(base),
                partition: Some(part),
                repaired: Some(repaired),
                replacements,
                fallback: false,
                witness,
            })
        }
        Err(Error::BadBlock(_)) => Ok(PipelineRun {
            sampled_size,
            eliminated,
            kept,
            base_solution: Some(base),
            partition: Some(part),
            repaired: None,
            replacements: Vec::new(),
            fallback: true,
            witness: oracle(a)?,
        }),
        Err(e) => Err(e),
    }
}

/// Witness-level entry point: a verified distinct zero-sum p-subset of
/// `a`, or none. Existence always agrees with the DP oracle.
pub fn end_to_end_distinct(
    a: &VecSet,
    p: usize,
    ell: usize,
    plan: &SamplingPlan,
    budget: &Budget,
) -> Result<Witness> {
    run_pipeline(a, p, ell, plan, budget).map(|run| run.witness)
}

/// Measurement utility: `|ell A| / |A|^c`, the concentration of the
/// ell-fold sumset relative to the power-law exponent `c`.
pub fn concentration_ratio(a: &VecSet, ell: u32, c: f64, budget: &Budget) -> Result<f64> {
    let s = crate::group::sumset(a, ell, budget)?;
    Ok(s.len() as f64 / (a.len() as f64).powf(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget() -> Budget {
        Budget::default()
    }

    fn set(m: u32, n: usize, codes: &[u64]) -> VecSet {
        VecSet::from_codes(m, n, codes.iter().copied()).unwrap()
    }

    fn full(m: u32, n: usize) -> VecSet {
        VecSet::full(m, n, &budget()).unwrap()
    }

    mod cover {
        use super::*;

        #[test]
        fn empty_family_costs_nothing() {
            let out = cover_number(&[], 3).unwrap();
            assert_eq!(
                out,
                CoverOutcome::Exact {
                    size: 0,
                    cover: vec![]
                }
            );
        }

        #[test]
        fn disjoint_sets_need_one_each() {
            let family = vec![vec![1, 2], vec![3, 4], vec![5, 6], vec![7]];
            let CoverOutcome::Exact { size, cover } = cover_number(&family, 10).unwrap() else {
                panic!("expected exact cover");
            };
            assert_eq!(size, 4);
            for s in &family {
                assert!(s.iter().any(|e| cover.contains(e)));
            }
        }

        #[test]
        fn triangle_needs_two() {
            let family = vec![vec![1, 2], vec![2, 3], vec![3, 1]];
            let CoverOutcome::Exact { size, .. } = cover_number(&family, 3).unwrap() else {
                panic!("expected exact cover");
            };
            assert_eq!(size, 2);
        }

        #[test]
        fn cap_exceeded_is_reported() {
            let family = vec![vec![1], vec![2], vec![3], vec![4]];
            assert_eq!(cover_number(&family, 3).unwrap(), CoverOutcome::ExceedsCap);
        }

        #[test]
        fn empty_member_rejected() {
            assert!(matches!(
                cover_number(&[vec![1], vec![]], 3),
                Err(Error::EmptyFamilyMember)
            ));
        }

        #[test]
        fn shared_element_covers_all() {
            let family = vec![vec![1, 9], vec![2, 9], vec![3, 9], vec![4, 9], vec![5, 9]];
            let CoverOutcome::Exact { size, cover } = cover_number(&family, 1).unwrap() else {
                panic!("expected exact cover");
            };
            assert_eq!((size, cover), (1, vec![9]));
        }
    }

    mod badness {
        use super::*;

        #[test]
        fn missing_sum_is_bad_with_empty_cover() {
            // {0,1} in Z_5: no 2-subset sums to 4 (0+1=1 only).
            let a = set(5, 1, &[0, 1]);
            let w = GroupVec::from_code(4, 5, 1).unwrap();
            let Badness::Bad { cover } = is_bad_vector(&w, &a, 2, 5, &budget()).unwrap() else {
                panic!("expected bad");
            };
            assert!(cover.is_empty());
        }

        #[test]
        fn full_plane_pairs_are_not_bad() {
            // In F_3^2 every sum has 4 disjoint distinct-pair
            // representations, and 4 > 3.
            let a = full(3, 2);
            for w in 0..9u64 {
                let w = GroupVec::from_code(w, 3, 2).unwrap();
                assert_eq!(
                    is_bad_vector(&w, &a, 2, 3, &budget()).unwrap(),
                    Badness::NotBad
                );
            }
        }

        #[test]
        fn single_representation_is_bad() {
            let a = set(7, 1, &[1, 2]);
            let w = GroupVec::from_code(3, 7, 1).unwrap();
            let Badness::Bad { cover } = is_bad_vector(&w, &a, 2, 7, &budget()).unwrap() else {
                panic!("expected bad");
            };
            assert_eq!(cover.len(), 1);
        }

        #[test]
        fn tiny_budget_is_indeterminate() {
            let a = full(3, 2);
            let w = GroupVec::from_code(0, 3, 2).unwrap();
            let tight = Budget::with_nodes(2);
            assert_eq!(
                is_bad_vector(&w, &a, 2, 3, &tight).unwrap(),
                Badness::Indeterminate
            );
        }

        #[test]
        fn bad_pair_examples() {
            let a = set(5, 1, &[1, 4]);
            let x = GroupVec::from_code(1, 5, 1).unwrap();
            let y = GroupVec::from_code(4, 5, 1).unwrap();
            assert!(is_bad_pair(&x, &y, &a, 5).unwrap());

            let z5 = full(5, 1);
            // w = 0 has representations {1,4} and {2,3}: 2 <= 5.
            assert!(is_bad_pair(&x, &y, &z5, 5).unwrap());

            let f9 = full(3, 2);
            let u = GroupVec::from_code(1, 3, 2).unwrap();
            let v = GroupVec::from_code(2, 3, 2).unwrap();
            // 4 representations > 3.
            assert!(!is_bad_pair(&u, &v, &f9, 3).unwrap());
        }

        #[test]
        fn bad_pair_rejects_equal_arguments() {
            let a = full(3, 1);
            let x = GroupVec::from_code(1, 3, 1).unwrap();
            assert!(is_bad_pair(&x, &x, &a, 3).is_err());
        }

        #[test]
        fn profile_identities_small() {
            let a = full(3, 2);
            let prof = badness_profile(&a, 2, 3, &budget()).unwrap();
            assert_eq!(prof.sum_n(), 9); // |A|^(ell-1) = |A|
            assert!(prof.sum_m() <= 3 * prof.sumset_size as u64);
            assert_eq!(prof.bad_sum_count, 0);
            assert_eq!(prof.bad_subset_upper, 0);
        }

        #[test]
        fn profile_counts_triple_convolution() {
            let a = set(3, 1, &[0, 1]);
            let prof = badness_profile(&a, 3, 3, &budget()).unwrap();
            // Ordered pairs over {0,1}: sums 0,1,1,2.
            assert_eq!(prof.sum_n(), 4);
            assert_eq!(prof.n_counts.get(&1).copied(), Some(2));
        }
    }

    mod caro_wei {
        use super::*;

        #[test]
        fn edgeless_takes_all() {
            assert_eq!(caro_wei_independent_set(4, &[]).unwrap(), vec![0, 1, 2, 3]);
        }

        #[test]
        fn complete_graph_takes_one() {
            let mut edges = Vec::new();
            for u in 0..5 {
                for v in u + 1..5 {
                    edges.push((u, v));
                }
            }
            assert_eq!(caro_wei_independent_set(5, &edges).unwrap().len(), 1);
        }

        #[test]
        fn path_p3_takes_endpoints() {
            let is = caro_wei_independent_set(3, &[(0, 1), (1, 2)]).unwrap();
            assert_eq!(is, vec![0, 2]);
            // 1/2 + 1/3 + 1/2 = 4/3 <= 2.
        }

        #[test]
        fn self_loop_rejected() {
            assert!(caro_wei_independent_set(2, &[(0, 0)]).is_err());
        }

        #[test]
        fn bound_holds_on_random_graphs() {
            let mut rng = ChaCha12Rng::seed_from_u64(7);
            for _ in 0..200 {
                let n = rng.random_range(1..=12usize);
                let mut edges = Vec::new();
                for u in 0..n {
                    for v in u + 1..n {
                        if rng.random::<f64>() < 0.3 {
                            edges.push((u, v));
                        }
                    }
                }
                let is = caro_wei_independent_set(n, &edges).unwrap();
                let mut deg = vec![0usize; n];
                for &(u, v) in &edges {
                    deg[u] += 1;
                    deg[v] += 1;
                }
                let cw: f64 = deg.iter().map(|&d| 1.0 / (d as f64 + 1.0)).sum();
                assert!(is.len() as f64 >= cw - 1e-9);
                // Independence.
                for &(u, v) in &edges {
                    assert!(!(is.contains(&u) && is.contains(&v)));
                }
            }
        }
    }

    mod rainbow {
        use super::*;

        #[test]
        fn five_elements_two_blocks() {
            let part = rainbow_partition(&['a', 'a', 'b', 'b', 'c'], 2).unwrap();
            assert_eq!(part.blocks(), &[vec![0, 4], vec![1, 3]]);
            assert_eq!(part.remainder(), &[2]);
        }

        #[test]
        fn all_distinct_single_block() {
            let part = rainbow_partition(&[10, 20, 30], 3).unwrap();
            assert_eq!(part.blocks(), &[vec![0, 1, 2]]);
            assert!(part.remainder().is_empty());
        }

        #[test]
        fn over_occurring_colour_rejected() {
            // 'a' occurs 3 > 5/2 times.
            assert!(rainbow_partition(&['a', 'a', 'a', 'b', 'c'], 2).is_err());
        }

        #[test]
        fn ell_one_gives_singletons() {
            let part = rainbow_partition(&['x', 'x', 'x'], 1).unwrap();
            assert_eq!(part.blocks().len(), 3);
            assert!(part.remainder().is_empty());
        }
    }

    mod low_multiplicity {
        use super::*;

        #[test]
        fn z5_has_low_multiplicity_solution() {
            let a = full(5, 1);
            let sol = find_low_multiplicity_solution(&a, 5, 0.5, &budget())
                .unwrap()
                .unwrap();
            assert!(sol.max_multiplicity() <= 2);
            // Lexicographically least admissible multiset: 0+0+1+1+3 = 5.
            assert_eq!(sol.codes(), vec![0, 0, 1, 1, 3]);
        }

        #[test]
        fn singleton_set_has_none() {
            let a = set(3, 1, &[1]);
            // Only (1,1,1) sums to zero, but multiplicity 3 > 1.5.
            let sol = find_low_multiplicity_solution(&a, 3, 0.5, &budget()).unwrap();
            assert!(sol.is_none());
        }

        #[test]
        fn full_cube_has_solution() {
            let a = full(3, 3);
            let sol = find_low_multiplicity_solution(&a, 3, 0.5, &budget())
                .unwrap()
                .unwrap();
            assert!(sol.is_distinct()); // cap is 1 for lambda = 1/2, p = 3
            assert!(sol.vectors().iter().all(|v| a.contains(v)));
        }

        #[test]
        fn preconditions_enforced() {
            let a = full(3, 1);
            assert!(find_low_multiplicity_solution(&a, 3, 1.0 / 3.0, &budget()).is_err());
            assert!(find_low_multiplicity_solution(&a, 3, 0.0, &budget()).is_err());
            let b = full(4, 1);
            assert!(find_low_multiplicity_solution(&b, 4, 0.5, &budget()).is_err());
        }
    }

    mod filtration {
        use super::*;

        #[test]
        fn singleton_zero_stops_at_level_one() {
            let a = set(3, 1, &[0]);
            let f = disjoint_solution_filtration(&a, 3, 0, &budget())
                .unwrap()
                .unwrap();
            assert_eq!(f.level, 1);
            assert_eq!(f.collection.len(), 1);
            assert_eq!(f.collection[0].codes(), vec![0, 0, 0]);
        }

        #[test]
        fn char_two_only_constant_solutions() {
            let a = full(2, 3);
            let f = disjoint_solution_filtration(&a, 2, 0, &budget())
                .unwrap()
                .unwrap();
            assert_eq!(f.level, 1);
            // (v, v) for every v: 8 disjoint singleton-value solutions.
            assert_eq!(f.collection.len(), 8);
        }

        #[test]
        fn high_threshold_exhausts() {
            let a = set(3, 1, &[0]);
            let f = disjoint_solution_filtration(&a, 3, 10, &budget()).unwrap();
            assert!(f.is_none());
        }

        #[test]
        fn collections_are_disjoint_and_exact() {
            let mut rng = ChaCha12Rng::seed_from_u64(11);
            for _ in 0..30 {
                let density = rng.random_range(0.3..1.0);
                let seed = rng.random::<u64>();
                let a = sample_uniform_set(3, 2, density, seed, &budget()).unwrap();
                if a.is_empty() {
                    continue;
                }
                let Some(f) = disjoint_solution_filtration(&a, 3, 1, &budget()).unwrap() else {
                    continue;
                };
                let mut seen = BTreeSet::new();
                for sol in &f.collection {
                    assert_eq!(sol.distinct_count(), f.level);
                    for c in sol.codes() {
                        assert!(f.survivors.contains_code(c));
                        seen.insert((sol.codes(), c));
                    }
                }
                // Pairwise vector-disjointness.
                let mut used = BTreeSet::new();
                for sol in &f.collection {
                    for c in sol.codes().into_iter().collect::<BTreeSet<_>>() {
                        assert!(used.insert(c), "vector {c} shared between solutions");
                    }
                }
            }
        }
    }

    mod sampling {
        use super::*;

        #[test]
        fn q_zero_empties() {
            let a = full(3, 2);
            let out = sample_delete_bad(&a, 2, 3, &SamplingPlan::chacha12(0.0, 1), &budget())
                .unwrap();
            assert!(out.is_empty());
        }

        #[test]
        fn q_one_without_bad_subsets_is_identity() {
            let a = full(3, 2); // no bad pair sums in the full plane
            let out = sample_delete_bad(&a, 2, 3, &SamplingPlan::chacha12(1.0, 1), &budget())
                .unwrap();
            assert_eq!(out.codes(), a.codes());
        }

        #[test]
        fn fixed_seed_reproduces() {
            let a = full(5, 1);
            let plan = SamplingPlan::chacha12(0.7, 42);
            let x = sample_delete_bad(&a, 2, 5, &plan, &budget()).unwrap();
            let y = sample_delete_bad(&a, 2, 5, &plan, &budget()).unwrap();
            assert_eq!(x.codes(), y.codes());
        }

        #[test]
        fn output_has_no_bad_subset() {
            let mut rng = ChaCha12Rng::seed_from_u64(5);
            for _ in 0..25 {
                let a = sample_uniform_set(5, 1, 0.9, rng.random(), &budget()).unwrap();
                if a.len() < 2 {
                    continue;
                }
                let plan = SamplingPlan::chacha12(1.0, rng.random());
                let out = sample_delete_bad(&a, 2, 5, &plan, &budget()).unwrap();
                // Re-enumerate: no surviving 2-subset may have a bad sum.
                let codes = out.codes();
                for i in 0..codes.len() {
                    for j in i + 1..codes.len() {
                        let w = add_code(codes[i], codes[j], 5, 1);
                        let bad = bad_vector_code(
                            w,
                            &a.codes(),
                            2,
                            5,
                            5,
                            1,
                            &mut budget().counter(),
                        )
                        .unwrap()
                        .is_some();
                        assert!(!bad, "surviving pair with bad sum {w}");
                    }
                }
            }
        }

        #[test]
        fn unknown_generator_rejected() {
            let plan = SamplingPlan {
                q: 0.5,
                seed: 1,
                generator_id: "mt19937".into(),
            };
            let a = full(3, 1);
            assert!(sample_delete_bad(&a, 2, 3, &plan, &budget()).is_err());
        }
    }

    mod repair {
        use super::*;

        fn tuple(m: u32, n: usize, codes: &[u64]) -> SolutionTuple {
            SolutionTuple::new(
                codes
                    .iter()
                    .map(|&c| GroupVec::from_code(c, m, n).unwrap())
                    .collect(),
            )
            .unwrap()
        }

        #[test]
        fn distinct_solution_short_circuits() {
            let a = full(3, 2);
            // (0,0), (0,1), (0,2) encoded: 0, 3, 6.
            let sol = tuple(3, 2, &[0, 3, 6]);
            let part = rainbow_partition(&sol.codes(), 2).unwrap();
            let out = repair_solution(&a, &sol, &part, &budget()).unwrap();
            assert_eq!(out, sol);
            assert!(verify_repair(&a, &sol, &part, &out));
        }

        #[test]
        fn repeated_solution_is_repaired() {
            let a = full(5, 2);
            // 2a + 2b + c = 0 with a=(1,0)=1, b=(2,0)=2, c=(4,0)=4.
            let sol = tuple(5, 2, &[1, 1, 2, 2, 4]);
            let part = rainbow_partition(&sol.codes(), 2).unwrap();
            let out = repair_solution(&a, &sol, &part, &budget()).unwrap();
            assert!(out.is_distinct());
            assert!(verify_repair(&a, &sol, &part, &out));
        }

        #[test]
        fn bad_block_is_signalled() {
            // In the thin set {0,1,4} of Z_5 every pair sum has very few
            // representations, so no disjoint replacement exists.
            let a = set(5, 1, &[0, 1, 4]);
            let sol = tuple(5, 1, &[1, 1, 4, 4, 0]);
            let part = rainbow_partition(&sol.codes(), 2).unwrap();
            match repair_solution(&a, &sol, &part, &budget()) {
                Err(Error::BadBlock(_)) => {}
                other => panic!("expected BadBlock, got {other:?}"),
            }
        }
    }

    mod pipeline {
        use super::*;
        use crate::group::WitnessKind;

        #[test]
        fn full_plane_yields_witness() {
            let a = full(3, 2);
            let run = run_pipeline(&a, 3, 2, &SamplingPlan::chacha12(1.0, 3), &budget()).unwrap();
            assert!(run.witness.verifies_for_set(&a, 3));
            assert!(!run.fallback);
        }

        #[test]
        fn cap_set_yields_none() {
            let a = set(3, 2, &[0, 3, 1, 4]);
            let w = end_to_end_distinct(&a, 3, 2, &SamplingPlan::chacha12(1.0, 3), &budget())
                .unwrap();
            assert_eq!(w.kind(), WitnessKind::None);
        }

        #[test]
        fn char_two_yields_none() {
            for n in 1..=3usize {
                let a = full(2, n);
                let w =
                    end_to_end_distinct(&a, 2, 2, &SamplingPlan::chacha12(1.0, 3), &budget())
                        .unwrap();
                assert_eq!(w.kind(), WitnessKind::None);
            }
        }

        #[test]
        fn existence_agrees_with_oracle_on_small_sets() {
            let mut rng = ChaCha12Rng::seed_from_u64(23);
            for _ in 0..60 {
                let (p, n) = [(3u32, 2usize), (3, 3), (5, 1), (5, 2)]
                    [rng.random_range(0..4usize)];
                let a = sample_uniform_set(p, n, rng.random_range(0.1..0.9), rng.random(), &budget())
                    .unwrap();
                if a.is_empty() {
                    continue;
                }
                let plan = SamplingPlan::chacha12(1.0, rng.random());
                let got = end_to_end_distinct(&a, p as usize, 2, &plan, &budget()).unwrap();
                let expect = find_distinct_zero_sum(&a, p as usize, &budget()).unwrap();
                assert_eq!(got.is_witness(), expect.is_witness());
                if got.is_witness() {
                    assert!(got.verifies_for_set(&a, p as usize));
                }
            }
        }
    }

    #[test]
    fn concentration_of_full_group_is_flat() {
        let a = full(3, 2);
        let r = concentration_ratio(&a, 2, 1.0, &budget()).unwrap();
        assert!((r - 1.0).abs() < 1e-12); // 2A = F_3^2 and |A|^1 = 9
    }
}
