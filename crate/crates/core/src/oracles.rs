//! Brute-force deciders. Every reduction verdict is checked against these.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{BitVector, ProblemKind, VectorPairInstance};

/// Ground-truth answer for one instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub has_pair: bool,
    /// Lexicographically first pair realizing the answer.
    pub witness: Option<(usize, usize)>,
    /// OVP: number of orthogonal pairs. BHCP: minimum Hamming distance.
    pub extremal_value: u64,
}

/// Number of coordinates in which `a` and `b` differ.
pub fn hamming(a: &BitVector, b: &BitVector) -> Result<usize> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(a.xor_count(b))
}

/// Exhaustive orthogonal-pair scan.
pub fn solve_ovp(inst: &VectorPairInstance) -> Result<OracleVerdict> {
    if inst.kind != ProblemKind::Ovp {
        return Err(Error::Validation("solve_ovp expects an OVP instance".into()));
    }
    let mut count = 0u64;
    let mut witness = None;
    for (i, a) in inst.a.iter().enumerate() {
        for (j, b) in inst.b.iter().enumerate() {
            if a.and_count(b) == 0 {
                count += 1;
                witness.get_or_insert((i, j));
            }
        }
    }
    Ok(OracleVerdict { has_pair: count > 0, witness, extremal_value: count })
}

/// Number of orthogonal pairs, ignoring the instance kind.
pub fn count_orthogonal_pairs(inst: &VectorPairInstance) -> u64 {
    inst.a.iter().map(|a| inst.b.iter().filter(|b| a.and_count(b) == 0).count() as u64).sum()
}

/// Exhaustive close-pair scan; `has_pair` iff the minimum distance is below `t`.
pub fn solve_bhcp(inst: &VectorPairInstance) -> Result<OracleVerdict> {
    if inst.kind != ProblemKind::Bhcp {
        return Err(Error::Validation("solve_bhcp expects a BHCP instance".into()));
    }
    let t = inst.threshold()?;
    let mut best: Option<(usize, (usize, usize))> = None;
    for (i, a) in inst.a.iter().enumerate() {
        for (j, b) in inst.b.iter().enumerate() {
            let h = a.xor_count(b);
            if best.is_none_or(|(m, _)| h < m) {
                best = Some((h, (i, j)));
            }
        }
    }
    Ok(match best {
        Some((min, pair)) => OracleVerdict {
            has_pair: min < t,
            witness: (min < t).then_some(pair),
            extremal_value: min as u64,
        },
        None => OracleVerdict { has_pair: false, witness: None, extremal_value: inst.d as u64 + 1 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{generate, GenerateParams, Planted};

    fn bv(s: &str) -> BitVector {
        BitVector::parse(s).unwrap()
    }

    fn ovp(a: &[&str], b: &[&str]) -> VectorPairInstance {
        let d = a[0].len();
        VectorPairInstance::new(
            ProblemKind::Ovp,
            a.iter().map(|s| bv(s)).collect(),
            b.iter().map(|s| bv(s)).collect(),
            d,
            None,
            false,
            None,
        )
        .unwrap()
    }

    fn bhcp(a: &[&str], b: &[&str], t: usize) -> VectorPairInstance {
        let mut inst = ovp(a, b);
        inst.kind = ProblemKind::Bhcp;
        inst.t = Some(t);
        inst.validate().unwrap();
        inst
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming(&bv("0110"), &bv("1100")).unwrap(), 2);
        assert_eq!(hamming(&bv("0110"), &bv("0110")).unwrap(), 0);
        assert_eq!(hamming(&bv("10110"), &bv("01001")).unwrap(), 5);
        assert!(hamming(&bv("01"), &bv("011")).is_err());
    }

    #[test]
    fn ovp_examples() {
        let v = solve_ovp(&ovp(&["10"], &["01"])).unwrap();
        assert!(v.has_pair);
        assert_eq!(v.extremal_value, 1);
        assert_eq!(v.witness, Some((0, 0)));
        let v = solve_ovp(&ovp(&["11"], &["10"])).unwrap();
        assert!(!v.has_pair);
        assert_eq!(v.witness, None);
    }

    #[test]
    fn ovp_count_matches_transposed_scan() {
        for seed in 0..10 {
            let inst = generate(&GenerateParams {
                kind: ProblemKind::Ovp,
                n: 8,
                d: 6,
                t: None,
                planted: Planted::Random,
                seed,
            })
            .unwrap()
            .instance;
            let mut transposed = 0;
            for b in &inst.b {
                for a in &inst.a {
                    if (0..inst.d).all(|k| !(a.get(k) && b.get(k))) {
                        transposed += 1;
                    }
                }
            }
            assert_eq!(solve_ovp(&inst).unwrap().extremal_value, transposed);
        }
    }

    #[test]
    fn bhcp_examples() {
        let yes = bhcp(&["0000", "1111"], &["0001", "1100"], 2);
        let v = solve_bhcp(&yes).unwrap();
        assert!(v.has_pair);
        assert_eq!(v.extremal_value, 1);
        assert_eq!(v.witness, Some((0, 0)));

        let no = bhcp(&["0000", "1111"], &["0011", "1001"], 2);
        let v = solve_bhcp(&no).unwrap();
        assert!(!v.has_pair);
        assert_eq!(v.extremal_value, 2);
    }

    #[test]
    fn planted_bhcp_witness_at_t_minus_one() {
        for seed in 0..10 {
            let g = generate(&GenerateParams {
                kind: ProblemKind::Bhcp,
                n: 6,
                d: 12,
                t: Some(4),
                planted: Planted::Yes,
                seed,
            })
            .unwrap();
            let (i, j) = g.planted_witness.unwrap();
            let inst = &g.instance;
            assert_eq!(hamming(&inst.a[i], &inst.b[j]).unwrap(), 3);
            let v = solve_bhcp(inst).unwrap();
            assert!(v.has_pair && v.extremal_value <= 3);
        }
    }

    #[test]
    fn wrong_kind_rejected() {
        assert!(solve_bhcp(&ovp(&["10"], &["01"])).is_err());
        assert!(solve_ovp(&bhcp(&["10"], &["01"], 2)).is_err());
    }
}
