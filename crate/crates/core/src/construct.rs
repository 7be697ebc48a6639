//! Certified lower-bound constructions. Nothing here is trusted: every
//! emitted sequence is re-verified zero-sum-free by the exact oracle
//! before it leaves the module.

use crate::group::{group_order, has_zero_sum_len_m, GroupVec, Witness, WitnessKind, ZSequence};
use crate::{Budget, Error, Result};

/// The Harborth construction: every vector with coordinates in {0,1},
/// each with multiplicity m-1, for a total length of `(m-1) * 2^n`.
///
/// Any m chosen vectors must agree per coordinate (each coordinate sum
/// lands in [0,m] and must be 0 or m), which the multiplicity cap
/// forbids — so the sequence is zero-sum-free and certifies
/// `s(Z_m^n) >= (m-1) * 2^n + 1`. The oracle re-check runs whenever the
/// DP fits the table budget.
pub fn harborth_sequence(m: u32, n: usize, budget: &Budget) -> Result<ZSequence> {
    let order = group_order(m, n).ok_or(Error::BadGroup { modulus: m, dim: n })?;
    let hypercube = 1u64
        .checked_shl(n as u32)
        .filter(|&h| h <= order)
        .ok_or(Error::BadGroup { modulus: m, dim: n })?;
    let mut seq = ZSequence::new(m, n)?;
    for mask in 0..hypercube {
        let coords: Vec<u32> = (0..n).map(|i| ((mask >> i) & 1) as u32).collect();
        seq.push(&GroupVec::new(coords, m)?, m - 1)?;
    }

    let items = (m as u128 - 1) * hypercube as u128;
    let dp_cells = (items + 1) * (m as u128 + 1) * order as u128;
    if dp_cells <= budget.table_cells as u128 {
        let w = has_zero_sum_len_m(&seq, budget)?;
        if w.kind() != WitnessKind::None {
            return Err(Error::Verification(
                "Harborth sequence failed the zero-sum-free check".into(),
            ));
        }
    }
    Ok(seq)
}

/// Pairing rules for combining two sequences into one over the
/// concatenated coordinate space.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PairingRule {
    /// Pair the i-th elements of both expansions (canonical order) and
    /// concatenate their coordinates; requires equal lengths. An empty
    /// side acts as zero-padding for the other.
    Concat,
    /// All pairs (x, y), multiplicities multiplying. Experimental.
    Cross,
}

impl PairingRule {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "concat" => Ok(PairingRule::Concat),
            "cross" => Ok(PairingRule::Cross),
            other => Err(Error::Precondition(format!(
                "unknown pairing rule `{other}` (expected `concat` or `cross`)"
            ))),
        }
    }
}

/// Result of a candidate construction: a candidate is only ever returned
/// verified; otherwise the violating witness is attached.
#[derive(Clone, Debug)]
pub enum CandidateOutcome {
    Verified(ZSequence),
    Refuted {
        candidate: ZSequence,
        witness: Witness,
    },
    /// The verification oracle ran out of budget; the candidate is not
    /// certified.
    Indeterminate,
}

fn concat_coords(a: &[u32], b: &[u32], m: u32) -> Result<GroupVec> {
    let mut coords = Vec::with_capacity(a.len() + b.len());
    coords.extend_from_slice(a);
    coords.extend_from_slice(b);
    GroupVec::new(coords, m)
}

/// Combines `s1` over `Z_m^{n1}` and `s2` over `Z_m^{n2}` into a
/// candidate over `Z_m^{n1+n2}` under `rule`, then verifies freeness with
/// the oracle. The candidate is returned only if verified.
pub fn product_candidate(
    s1: &ZSequence,
    s2: &ZSequence,
    rule: PairingRule,
    budget: &Budget,
) -> Result<CandidateOutcome> {
    if s1.modulus() != s2.modulus() {
        return Err(Error::GroupMismatch {
            m1: s1.modulus(),
            n1: s1.dim(),
            m2: s2.modulus(),
            n2: s2.dim(),
        });
    }
    let m = s1.modulus();
    let (n1, n2) = (s1.dim(), s2.dim());
    let mut candidate = ZSequence::new(m, n1 + n2)?;

    match rule {
        PairingRule::Concat => {
            let zeros1 = vec![0u32; n1];
            let zeros2 = vec![0u32; n2];
            if s2.is_empty() {
                for (v, mult) in s1.entries() {
                    candidate.push(&concat_coords(v.coords(), &zeros2, m)?, mult)?;
                }
            } else if s1.is_empty() {
                for (v, mult) in s2.entries() {
                    candidate.push(&concat_coords(&zeros1, v.coords(), m)?, mult)?;
                }
            } else {
                if s1.len() != s2.len() {
                    return Err(Error::Precondition(format!(
                        "concat rule needs equal lengths, got {} and {}",
                        s1.len(),
                        s2.len()
                    )));
                }
                let left = s1.expanded_codes();
                let right = s2.expanded_codes();
                for (&c1, &c2) in left.iter().zip(&right) {
                    let v1 = GroupVec::from_code(c1, m, n1)?;
                    let v2 = GroupVec::from_code(c2, m, n2)?;
                    candidate.push(&concat_coords(v1.coords(), v2.coords(), m)?, 1)?;
                }
            }
        }
        PairingRule::Cross => {
            if s1.is_empty() || s2.is_empty() {
                return Err(Error::Precondition(
                    "cross rule needs both sequences nonempty".into(),
                ));
            }
            for (v1, m1) in s1.entries() {
                for (v2, m2) in s2.entries() {
                    let mult = m1.checked_mul(m2).ok_or_else(|| {
                        Error::Precondition("cross rule multiplicity overflow".into())
                    })?;
                    candidate.push(&concat_coords(v1.coords(), v2.coords(), m)?, mult)?;
                }
            }
        }
    }

    match has_zero_sum_len_m(&candidate, budget) {
        Ok(w) if w.kind() == WitnessKind::None => Ok(CandidateOutcome::Verified(candidate)),
        Ok(witness) => Ok(CandidateOutcome::Refuted { candidate, witness }),
        Err(e) if e.is_budget() => Ok(CandidateOutcome::Indeterminate),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::VecSet;

    fn budget() -> Budget {
        Budget::default()
    }

    #[test]
    fn harborth_length_and_freeness() {
        for m in 2..=6u32 {
            for n in 1..=3usize {
                let s = harborth_sequence(m, n, &budget()).unwrap();
                assert_eq!(s.len(), (m as u64 - 1) << n);
                let w = has_zero_sum_len_m(&s, &budget()).unwrap();
                assert_eq!(w.kind(), WitnessKind::None, "m={m}, n={n}");
            }
        }
    }

    #[test]
    fn harborth_m2_n1_is_zero_one() {
        let s = harborth_sequence(2, 1, &budget()).unwrap();
        let codes: Vec<(u64, u32)> = s.entry_codes().collect();
        assert_eq!(codes, vec![(0, 1), (1, 1)]);
    }

    #[test]
    fn concat_of_harborth_lines_lands_in_harborth_square() {
        let h1 = harborth_sequence(3, 1, &budget()).unwrap();
        let out = product_candidate(&h1, &h1, PairingRule::Concat, &budget()).unwrap();
        let CandidateOutcome::Verified(seq) = out else {
            panic!("expected a verified candidate");
        };
        assert_eq!(seq.len(), 4);
        // Every entry is a {0,1}-vector with multiplicity <= 2, i.e. a
        // sub-multiset of harborth(3, 2).
        let h2 = harborth_sequence(3, 2, &budget()).unwrap();
        for (v, mult) in seq.entries() {
            assert!(mult <= h2.multiplicity(&v));
        }
    }

    #[test]
    fn refuted_candidate_carries_witness() {
        // Three copies of 0 on each side zip to three copies of (0,0).
        let mut s = ZSequence::new(3, 1).unwrap();
        s.push_code(0, 3).unwrap();
        let out = product_candidate(&s, &s, PairingRule::Concat, &budget()).unwrap();
        let CandidateOutcome::Refuted { candidate, witness } = out else {
            panic!("expected refutation");
        };
        assert!(witness.verifies_for_sequence(&candidate));
    }

    #[test]
    fn empty_side_zero_pads() {
        let h = harborth_sequence(3, 1, &budget()).unwrap();
        let empty = ZSequence::new(3, 2).unwrap();
        let out = product_candidate(&h, &empty, PairingRule::Concat, &budget()).unwrap();
        let CandidateOutcome::Verified(seq) = out else {
            panic!("expected a verified candidate");
        };
        assert_eq!(seq.dim(), 3);
        assert_eq!(seq.len(), h.len());
        for (v, _) in seq.entries() {
            assert_eq!(&v.coords()[1..], &[0, 0]);
        }
    }

    #[test]
    fn cross_rule_verifies_or_refutes() {
        let h = harborth_sequence(2, 1, &budget()).unwrap();
        match product_candidate(&h, &h, PairingRule::Cross, &budget()).unwrap() {
            CandidateOutcome::Verified(seq) => {
                let w = has_zero_sum_len_m(&seq, &budget()).unwrap();
                assert_eq!(w.kind(), WitnessKind::None);
            }
            CandidateOutcome::Refuted { candidate, witness } => {
                assert!(witness.verifies_for_sequence(&candidate));
            }
            CandidateOutcome::Indeterminate => panic!("budget cannot be exceeded here"),
        }
    }

    #[test]
    fn harborth_certifies_against_maxfree_space() {
        // The support of harborth(3,2) is the 4-point hypercube, which is
        // also distinct-zero-sum-free.
        let s = harborth_sequence(3, 2, &budget()).unwrap();
        let a = VecSet::from_codes(3, 2, s.entry_codes().map(|(c, _)| c)).unwrap();
        let w = crate::group::find_distinct_zero_sum(&a, 3, &budget()).unwrap();
        assert_eq!(w.kind(), WitnessKind::None);
    }
}
