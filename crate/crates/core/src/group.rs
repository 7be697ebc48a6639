//! Arithmetic over `Z_m^n`, sumsets, and exact zero-sum oracles.
//!
//! Vectors are encoded as mixed-radix integers with coordinate 0 least
//! significant, so a presence table over the whole group is a flat
//! vector of `m^n` cells and the group operation is a digit-wise add.
//! The two oracles ([`has_zero_sum_len_m`], [`find_distinct_zero_sum`])
//! run an exact subset-sum DP over states `(count chosen, partial sum)`
//! and reconstruct a deterministic witness: elements are scanned in
//! ascending encoded order and an element is skipped whenever a
//! completion without it still exists.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::{Budget, Error, Result};

/// `m^n` as a `u64`, or `None` on overflow.
pub fn group_order(modulus: u32, dim: usize) -> Option<u64> {
    let mut acc = 1u64;
    for _ in 0..dim {
        acc = acc.checked_mul(modulus as u64)?;
    }
    Some(acc)
}

fn check_group(modulus: u32, dim: usize) -> Result<u64> {
    if modulus < 2 || dim == 0 {
        return Err(Error::BadGroup { modulus, dim });
    }
    group_order(modulus, dim).ok_or(Error::BadGroup { modulus, dim })
}

/// Digit-wise `a + b` on encoded vectors.
pub(crate) fn add_code(a: u64, b: u64, modulus: u32, dim: usize) -> u64 {
    let m = modulus as u64;
    let (mut a, mut b) = (a, b);
    let mut out = 0u64;
    let mut place = 1u64;
    for _ in 0..dim {
        out += ((a % m + b % m) % m) * place;
        a /= m;
        b /= m;
        place *= m;
    }
    out
}

/// Digit-wise `a - b` on encoded vectors.
pub(crate) fn sub_code(a: u64, b: u64, modulus: u32, dim: usize) -> u64 {
    let m = modulus as u64;
    let (mut a, mut b) = (a, b);
    let mut out = 0u64;
    let mut place = 1u64;
    for _ in 0..dim {
        out += ((a % m + m - b % m) % m) * place;
        a /= m;
        b /= m;
        place *= m;
    }
    out
}

pub(crate) fn neg_code(a: u64, modulus: u32, dim: usize) -> u64 {
    sub_code(0, a, modulus, dim)
}

/// An element of `Z_m^n`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GroupVec {
    coords: Vec<u32>,
    modulus: u32,
}

impl GroupVec {
    pub fn new(coords: Vec<u32>, modulus: u32) -> Result<Self> {
        check_group(modulus, coords.len())?;
        for &c in &coords {
            if c >= modulus {
                return Err(Error::BadCoordinate { value: c, modulus });
            }
        }
        Ok(GroupVec { coords, modulus })
    }

    pub fn zero(modulus: u32, dim: usize) -> Result<Self> {
        GroupVec::new(vec![0; dim], modulus)
    }

    /// Decodes a mixed-radix integer in `[0, m^n)`.
    pub fn from_code(code: u64, modulus: u32, dim: usize) -> Result<Self> {
        let order = check_group(modulus, dim)?;
        if code >= order {
            return Err(Error::Precondition(format!(
                "code {code} out of range for Z_{modulus}^{dim}"
            )));
        }
        let m = modulus as u64;
        let mut rest = code;
        let mut coords = Vec::with_capacity(dim);
        for _ in 0..dim {
            coords.push((rest % m) as u32);
            rest /= m;
        }
        Ok(GroupVec { coords, modulus })
    }

    /// Mixed-radix encoding; inverse of [`GroupVec::from_code`].
    pub fn code(&self) -> u64 {
        let m = self.modulus as u64;
        let mut out = 0u64;
        for &c in self.coords.iter().rev() {
            out = out * m + c as u64;
        }
        out
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    fn same_group(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus || self.coords.len() != other.coords.len() {
            Err(Error::GroupMismatch {
                m1: self.modulus,
                n1: self.coords.len(),
                m2: other.modulus,
                n2: other.coords.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Componentwise sum mod m. Fails on modulus/dimension mismatch.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_group(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(&a, &b)| (a + b) % self.modulus)
            .collect();
        Ok(GroupVec {
            coords,
            modulus: self.modulus,
        })
    }

    pub fn neg(&self) -> Self {
        let coords = self
            .coords
            .iter()
            .map(|&a| (self.modulus - a) % self.modulus)
            .collect();
        GroupVec {
            coords,
            modulus: self.modulus,
        }
    }
}

impl Ord for GroupVec {
    /// Within a common group, agrees with ascending encoded order.
    fn cmp(&self, other: &Self) -> Ordering {
        (self.modulus, self.coords.len(), self.code()).cmp(&(
            other.modulus,
            other.coords.len(),
            other.code(),
        ))
    }
}

impl PartialOrd for GroupVec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GroupVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A finite multiset over `Z_m^n` (element -> multiplicity).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ZSequence {
    modulus: u32,
    dim: usize,
    entries: BTreeMap<u64, u32>,
    len: u64,
}

impl ZSequence {
    pub fn new(modulus: u32, dim: usize) -> Result<Self> {
        check_group(modulus, dim)?;
        Ok(ZSequence {
            modulus,
            dim,
            entries: BTreeMap::new(),
            len: 0,
        })
    }

    pub fn from_vectors<'a, I: IntoIterator<Item = &'a GroupVec>>(
        modulus: u32,
        dim: usize,
        vectors: I,
    ) -> Result<Self> {
        let mut s = ZSequence::new(modulus, dim)?;
        for v in vectors {
            s.push(v, 1)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, v: &GroupVec, mult: u32) -> Result<()> {
        if v.modulus() != self.modulus || v.dim() != self.dim {
            return Err(Error::GroupMismatch {
                m1: self.modulus,
                n1: self.dim,
                m2: v.modulus(),
                n2: v.dim(),
            });
        }
        self.push_code(v.code(), mult)
    }

    pub fn push_code(&mut self, code: u64, mult: u32) -> Result<()> {
        let order = group_order(self.modulus, self.dim).unwrap();
        if code >= order {
            return Err(Error::Precondition(format!(
                "code {code} out of range for Z_{}^{}",
                self.modulus, self.dim
            )));
        }
        if mult == 0 {
            return Err(Error::Precondition("multiplicity must be >= 1".into()));
        }
        *self.entries.entry(code).or_insert(0) += mult;
        self.len += mult as u64;
        Ok(())
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total length, counting multiplicity.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn multiplicity(&self, v: &GroupVec) -> u32 {
        if v.modulus() != self.modulus || v.dim() != self.dim {
            return 0;
        }
        self.entries.get(&v.code()).copied().unwrap_or(0)
    }

    /// Distinct entries in ascending encoded order.
    pub fn entry_codes(&self) -> impl Iterator<Item = (u64, u32)> + '_ {
        self.entries.iter().map(|(&c, &m)| (c, m))
    }

    pub fn entries(&self) -> impl Iterator<Item = (GroupVec, u32)> + '_ {
        self.entries
            .iter()
            .map(|(&c, &m)| (GroupVec::from_code(c, self.modulus, self.dim).unwrap(), m))
    }

    /// Ascending encoded order with repeats, multiplicity capped at `cap`.
    pub(crate) fn expanded_codes_capped(&self, cap: u32) -> Vec<u64> {
        let mut out = Vec::new();
        for (&c, &m) in &self.entries {
            for _ in 0..m.min(cap) {
                out.push(c);
            }
        }
        out
    }

    pub fn expanded_codes(&self) -> Vec<u64> {
        self.expanded_codes_capped(u32::MAX)
    }
}

/// A set of distinct vectors in `Z_m^n`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VecSet {
    modulus: u32,
    dim: usize,
    members: BTreeSet<u64>,
}

impl VecSet {
    pub fn new(modulus: u32, dim: usize) -> Result<Self> {
        check_group(modulus, dim)?;
        Ok(VecSet {
            modulus,
            dim,
            members: BTreeSet::new(),
        })
    }

    pub fn from_codes<I: IntoIterator<Item = u64>>(
        modulus: u32,
        dim: usize,
        codes: I,
    ) -> Result<Self> {
        let mut s = VecSet::new(modulus, dim)?;
        for c in codes {
            s.insert_code(c)?;
        }
        Ok(s)
    }

    /// The whole group `Z_m^n` as a set.
    pub fn full(modulus: u32, dim: usize, budget: &Budget) -> Result<Self> {
        let order = check_group(modulus, dim)?;
        budget.check_table(order as u128)?;
        VecSet::from_codes(modulus, dim, 0..order)
    }

    /// Returns whether the vector was newly inserted.
    pub fn insert(&mut self, v: &GroupVec) -> Result<bool> {
        if v.modulus() != self.modulus || v.dim() != self.dim {
            return Err(Error::GroupMismatch {
                m1: self.modulus,
                n1: self.dim,
                m2: v.modulus(),
                n2: v.dim(),
            });
        }
        self.insert_code(v.code())
    }

    pub fn insert_code(&mut self, code: u64) -> Result<bool> {
        let order = group_order(self.modulus, self.dim).unwrap();
        if code >= order {
            return Err(Error::Precondition(format!(
                "code {code} out of range for Z_{}^{}",
                self.modulus, self.dim
            )));
        }
        Ok(self.members.insert(code))
    }

    pub fn remove_code(&mut self, code: u64) -> bool {
        self.members.remove(&code)
    }

    pub fn contains(&self, v: &GroupVec) -> bool {
        v.modulus() == self.modulus && v.dim() == self.dim && self.members.contains(&v.code())
    }

    pub fn contains_code(&self, code: u64) -> bool {
        self.members.contains(&code)
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member codes in ascending order.
    pub fn codes(&self) -> Vec<u64> {
        self.members.iter().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = GroupVec> + '_ {
        self.members
            .iter()
            .map(|&c| GroupVec::from_code(c, self.modulus, self.dim).unwrap())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WitnessKind {
    /// A length-m subsequence (of a `ZSequence`) summing to zero.
    Subsequence,
    /// Pairwise-distinct set members summing to zero.
    DistinctSubset,
    /// No witness exists.
    None,
}

/// An explicit zero-sum witness, re-verifiable against its source.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Witness {
    kind: WitnessKind,
    vectors: Vec<GroupVec>,
}

impl Witness {
    pub fn none() -> Self {
        Witness {
            kind: WitnessKind::None,
            vectors: Vec::new(),
        }
    }

    pub(crate) fn subsequence(vectors: Vec<GroupVec>) -> Self {
        Witness {
            kind: WitnessKind::Subsequence,
            vectors,
        }
    }

    pub(crate) fn distinct_subset(vectors: Vec<GroupVec>) -> Self {
        Witness {
            kind: WitnessKind::DistinctSubset,
            vectors,
        }
    }

    pub fn kind(&self) -> WitnessKind {
        self.kind
    }

    pub fn is_witness(&self) -> bool {
        self.kind != WitnessKind::None
    }

    pub fn vectors(&self) -> &[GroupVec] {
        &self.vectors
    }

    pub fn sums_to_zero(&self) -> bool {
        let Some(first) = self.vectors.first() else {
            return true;
        };
        let mut acc = GroupVec::zero(first.modulus(), first.dim()).unwrap();
        for v in &self.vectors {
            acc = match acc.try_add(v) {
                Ok(a) => a,
                Err(_) => return false,
            };
        }
        acc.is_zero()
    }

    /// Checks a subsequence witness: length `m`, multiplicities available
    /// in `s`, zero sum.
    pub fn verifies_for_sequence(&self, s: &ZSequence) -> bool {
        if self.kind != WitnessKind::Subsequence {
            return false;
        }
        if self.vectors.len() as u64 != s.modulus() as u64 {
            return false;
        }
        let mut used: BTreeMap<u64, u32> = BTreeMap::new();
        for v in &self.vectors {
            if v.modulus() != s.modulus() || v.dim() != s.dim() {
                return false;
            }
            *used.entry(v.code()).or_insert(0) += 1;
        }
        for (code, count) in used {
            if count > s.entries.get(&code).copied().unwrap_or(0) {
                return false;
            }
        }
        self.sums_to_zero()
    }

    /// Checks a distinct-subset witness: `count` pairwise-distinct members
    /// of `a`, zero sum.
    pub fn verifies_for_set(&self, a: &VecSet, count: usize) -> bool {
        if self.kind != WitnessKind::DistinctSubset {
            return false;
        }
        if self.vectors.len() != count {
            return false;
        }
        let codes: BTreeSet<u64> = self.vectors.iter().map(|v| v.code()).collect();
        if codes.len() != count {
            return false;
        }
        if !self.vectors.iter().all(|v| a.contains(v)) {
            return false;
        }
        self.sums_to_zero()
    }
}

/// The `fold`-fold sumset `{x_1 + ... + x_fold : x_i in A}`, computed by
/// iterated folding against a presence table of `m^n` cells.
pub fn sumset(a: &VecSet, fold: u32, budget: &Budget) -> Result<VecSet> {
    if fold == 0 {
        return Err(Error::Precondition("fold count must be >= 1".into()));
    }
    if a.is_empty() {
        return Err(Error::Precondition("sumset of an empty set".into()));
    }
    let (m, n) = (a.modulus(), a.dim());
    let order = group_order(m, n).unwrap();
    budget.check_table(order as u128)?;
    let codes = a.codes();
    let mut cur = vec![false; order as usize];
    for &c in &codes {
        cur[c as usize] = true;
    }
    for _ in 1..fold {
        let mut next = vec![false; order as usize];
        for (s, &present) in cur.iter().enumerate() {
            if present {
                for &c in &codes {
                    next[add_code(s as u64, c, m, n) as usize] = true;
                }
            }
        }
        cur = next;
    }
    VecSet::from_codes(
        m,
        n,
        cur.iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(|(s, _)| s as u64),
    )
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum TieBreak {
    /// Skip an element whenever a completion without it exists.
    PreferSkip,
    /// Take an element whenever a completion with it exists; yields the
    /// lexicographically least multiset when `items` is sorted.
    PreferTake,
}

/// Exact subset-sum DP: picks exactly `k` items (by position, each usable
/// once) with encoded sum `target`. Items must be in ascending order for
/// the deterministic-witness contract. Returns the chosen codes in scan
/// order, or `None` if no selection exists.
pub(crate) fn pick_k_sum(
    items: &[u64],
    k: usize,
    target: u64,
    modulus: u32,
    dim: usize,
    tie: TieBreak,
    budget: &Budget,
) -> Result<Option<Vec<u64>>> {
    if k == 0 {
        return Ok(if target == 0 { Some(Vec::new()) } else { None });
    }
    if items.len() < k {
        return Ok(None);
    }
    let order = group_order(modulus, dim).unwrap() as usize;
    let states = (k + 1) * order;
    budget.check_table((items.len() as u128 + 1) * states as u128)?;

    let idx = |count: usize, sum: usize| count * order + sum;
    // feas[i][(c, s)]: items[i..] can supply exactly c items summing to s.
    let mut feas = vec![vec![false; states]; items.len() + 1];
    feas[items.len()][idx(0, 0)] = true;
    for i in (0..items.len()).rev() {
        let (head, tail) = feas.split_at_mut(i + 1);
        let cur = &mut head[i];
        let next = &tail[0];
        for c in 0..=k {
            for s in 0..order {
                let mut ok = next[idx(c, s)];
                if !ok && c > 0 {
                    let need = sub_code(s as u64, items[i], modulus, dim) as usize;
                    ok = next[idx(c - 1, need)];
                }
                cur[idx(c, s)] = ok;
            }
        }
    }
    if !feas[0][idx(k, target as usize)] {
        return Ok(None);
    }

    let mut chosen = Vec::with_capacity(k);
    let (mut need_count, mut need_sum) = (k, target as usize);
    for (i, &item) in items.iter().enumerate() {
        if need_count == 0 {
            break;
        }
        let take_state = sub_code(need_sum as u64, item, modulus, dim) as usize;
        let can_take = feas[i + 1][idx(need_count - 1, take_state)];
        let can_skip = feas[i + 1][idx(need_count, need_sum)];
        let take = match tie {
            TieBreak::PreferSkip => !can_skip,
            TieBreak::PreferTake => can_take,
        };
        if take {
            debug_assert!(can_take);
            chosen.push(item);
            need_count -= 1;
            need_sum = take_state;
        }
    }
    debug_assert_eq!(need_count, 0);
    debug_assert_eq!(need_sum, 0);
    Ok(Some(chosen))
}

/// Searches `s` for a zero-sum subsequence of length `m` (the modulus).
///
/// Returns a subsequence witness if one exists, `Witness::none()`
/// otherwise. Multiplicities beyond `m` never help, so each element is
/// fed to the DP at most `m` times. Deterministic: scan in ascending
/// encoded order, prefer not taking.
pub fn has_zero_sum_len_m(s: &ZSequence, budget: &Budget) -> Result<Witness> {
    let m = s.modulus();
    let items = s.expanded_codes_capped(m);
    match pick_k_sum(
        &items,
        m as usize,
        0,
        s.modulus(),
        s.dim(),
        TieBreak::PreferSkip,
        budget,
    )? {
        Some(codes) => {
            let vectors = codes
                .into_iter()
                .map(|c| GroupVec::from_code(c, s.modulus(), s.dim()).unwrap())
                .collect();
            Ok(Witness::subsequence(vectors))
        }
        None => Ok(Witness::none()),
    }
}

/// Searches `a` for `count` pairwise-distinct members summing to zero.
///
/// `|a| < count` simply yields no witness. Deterministic witness as in
/// [`has_zero_sum_len_m`].
pub fn find_distinct_zero_sum(a: &VecSet, count: usize, budget: &Budget) -> Result<Witness> {
    if count < 2 {
        return Err(Error::Precondition(
            "distinct zero-sum search needs count >= 2".into(),
        ));
    }
    let items = a.codes();
    match pick_k_sum(
        &items,
        count,
        0,
        a.modulus(),
        a.dim(),
        TieBreak::PreferSkip,
        budget,
    )? {
        Some(codes) => {
            let vectors = codes
                .into_iter()
                .map(|c| GroupVec::from_code(c, a.modulus(), a.dim()).unwrap())
                .collect();
            Ok(Witness::distinct_subset(vectors))
        }
        None => Ok(Witness::none()),
    }
}
