//! Ranked integer mass partitions and their combinatorial multiplicities.
//!
//! A [`MassPartition`] is a finite non-increasing sequence of positive
//! integer masses; the infinite zero tail of the ambient sequence space is
//! implicit. Chains started from unit atoms keep integer masses throughout,
//! so all laws stay exact; floats enter only through [`MassPartition::rescale`].

use crate::error::{Error, Result};
use crate::numeric::factorial;
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

/// Non-increasing sequence of positive integer masses.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MassPartition {
    masses: Vec<u64>,
}

impl MassPartition {
    /// Rank arbitrary positive values into a partition (the map `rk`).
    ///
    /// Uses a stable descending sort, so ties keep their input order and
    /// trajectories are reproducible under a fixed seed.
    pub fn rank(values: &[u64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyPartition);
        }
        if values.iter().any(|&v| v == 0) {
            return Err(Error::NonPositiveMass);
        }
        let mut masses = values.to_vec();
        masses.sort_by(|a, b| b.cmp(a));
        Ok(Self { masses })
    }

    /// The monodisperse configuration of `n` unit atoms.
    pub fn units(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyPartition);
        }
        Ok(Self { masses: vec![1; n] })
    }

    pub fn masses(&self) -> &[u64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn total_mass(&self) -> u64 {
        self.masses.iter().sum()
    }

    /// Merge the entries at `indices` into their sum and re-rank.
    ///
    /// Total mass is conserved; the length drops by `indices.len() - 1`.
    pub fn merge_indices(&self, indices: &[usize]) -> Result<Self> {
        if indices.len() < 2 {
            return Err(Error::InvalidIndices(format!(
                "need at least 2 indices, got {}",
                indices.len()
            )));
        }
        let mut seen = vec![false; self.masses.len()];
        let mut sum = 0u64;
        for &i in indices {
            if i >= self.masses.len() {
                return Err(Error::InvalidIndices(format!(
                    "index {i} out of range for length {}",
                    self.masses.len()
                )));
            }
            if seen[i] {
                return Err(Error::InvalidIndices(format!("duplicate index {i}")));
            }
            seen[i] = true;
            sum += self.masses[i];
        }
        let mut rest: Vec<u64> = (0..self.masses.len())
            .filter(|i| !seen[*i])
            .map(|i| self.masses[i])
            .collect();
        // Insert the merged mass keeping the descending order.
        let pos = rest.partition_point(|&m| m > sum);
        rest.insert(pos, sum);
        Ok(Self { masses: rest })
    }

    /// Number of distinct tuples with the same ranked form: the multinomial
    /// `m! / (k_1! ... k_p!)` over the multiplicities of distinct values.
    pub fn multiplicity_gamma(&self) -> BigUint {
        let mut gamma = factorial(self.masses.len() as u64);
        let mut run = 1u64;
        for w in self.masses.windows(2) {
            if w[0] == w[1] {
                run += 1;
            } else {
                gamma /= factorial(run);
                run = 1;
            }
        }
        gamma / factorial(run)
    }

    /// Element-wise division by `n`, keeping the ordering.
    pub fn rescale(&self, n: u64) -> Result<RescaledPartition> {
        if n == 0 {
            return Err(Error::InvalidParameter("rescale by zero".into()));
        }
        if self.total_mass() > n {
            return Err(Error::InvalidParameter(format!(
                "total mass {} exceeds rescale denominator {n}",
                self.total_mass()
            )));
        }
        Ok(RescaledPartition {
            values: self.masses.iter().map(|&m| m as f64 / n as f64).collect(),
        })
    }
}

impl std::fmt::Display for MassPartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, m) in self.masses.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, ")")
    }
}

/// Mass partition rescaled into `(0, 1]`, total mass at most one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RescaledPartition {
    values: Vec<f64>,
}

impl RescaledPartition {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Largest value, zero for the empty tail.
    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn nth_largest(&self, i: usize) -> f64 {
        self.values.get(i).copied().unwrap_or(0.0)
    }

    pub fn top_sum(&self, k: usize) -> f64 {
        self.values.iter().take(k).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_sorts_descending() {
        let p = MassPartition::rank(&[1, 3, 1]).unwrap();
        assert_eq!(p.masses(), &[3, 1, 1]);
        let q = MassPartition::rank(&[7]).unwrap();
        assert_eq!(q.masses(), &[7]);
        // Figure-style arc lengths.
        let r = MassPartition::rank(&[13, 3, 1]).unwrap();
        assert_eq!(r.masses(), &[13, 3, 1]);
    }

    #[test]
    fn rank_rejects_bad_input() {
        assert_eq!(MassPartition::rank(&[]), Err(Error::EmptyPartition));
        assert_eq!(MassPartition::rank(&[2, 0]), Err(Error::NonPositiveMass));
    }

    #[test]
    fn merge_examples() {
        let p = MassPartition::units(5).unwrap();
        assert_eq!(p.merge_indices(&[0, 1, 2]).unwrap().masses(), &[3, 1, 1]);
        let q = MassPartition::rank(&[3, 1, 1]).unwrap();
        assert_eq!(q.merge_indices(&[0, 1, 2]).unwrap().masses(), &[5]);
        let r = MassPartition::rank(&[5, 3, 3, 1, 1]).unwrap();
        assert_eq!(r.merge_indices(&[1, 3, 4]).unwrap().masses(), &[5, 5, 3]);
    }

    #[test]
    fn merge_rejects_bad_indices() {
        let p = MassPartition::units(3).unwrap();
        assert!(p.merge_indices(&[0]).is_err());
        assert!(p.merge_indices(&[0, 0]).is_err());
        assert!(p.merge_indices(&[0, 3]).is_err());
    }

    #[test]
    fn gamma_examples() {
        let g = |v: &[u64]| MassPartition::rank(v).unwrap().multiplicity_gamma();
        assert_eq!(g(&[3, 1, 1]), BigUint::from(3u32));
        assert_eq!(g(&[1, 1, 1, 1, 1]), BigUint::from(1u32));
        assert_eq!(g(&[5, 3, 1]), BigUint::from(6u32));
    }

    #[test]
    fn gamma_counts_distinct_permutations_exhaustively() {
        // For every partition of up to 7 into at most 5 parts, gamma equals the
        // number of distinct orderings of its entries.
        use std::collections::BTreeSet;
        fn partitions(total: u64, max: u64, len: usize) -> Vec<Vec<u64>> {
            if total == 0 {
                return vec![vec![]];
            }
            if len == 0 {
                return vec![];
            }
            let mut out = Vec::new();
            for first in (1..=max.min(total)).rev() {
                for mut tail in partitions(total - first, first, len - 1) {
                    let mut v = vec![first];
                    v.append(&mut tail);
                    out.push(v);
                }
            }
            out
        }
        fn distinct_perms(v: &[u64]) -> u64 {
            let mut set = BTreeSet::new();
            let mut idx: Vec<usize> = (0..v.len()).collect();
            // Heap's algorithm over index orderings, collecting value tuples.
            fn heap(k: usize, idx: &mut Vec<usize>, v: &[u64], set: &mut BTreeSet<Vec<u64>>) {
                if k == 1 {
                    set.insert(idx.iter().map(|&i| v[i]).collect());
                    return;
                }
                for i in 0..k {
                    heap(k - 1, idx, v, set);
                    if k % 2 == 0 {
                        idx.swap(i, k - 1);
                    } else {
                        idx.swap(0, k - 1);
                    }
                }
            }
            heap(v.len(), &mut idx, v, &mut set);
            set.len() as u64
        }
        for total in 1..=7 {
            for p in partitions(total, total, 5) {
                let mp = MassPartition::rank(&p).unwrap();
                assert_eq!(
                    mp.multiplicity_gamma(),
                    BigUint::from(distinct_perms(&p)),
                    "partition {p:?}"
                );
            }
        }
    }

    #[test]
    fn rescale_examples() {
        let p = MassPartition::rank(&[3, 1, 1]).unwrap();
        assert_eq!(p.rescale(5).unwrap().values(), &[0.6, 0.2, 0.2]);
        let q = MassPartition::rank(&[7]).unwrap();
        assert_eq!(q.rescale(7).unwrap().values(), &[1.0]);
        let r = MassPartition::rank(&[13, 3, 1]).unwrap();
        let got = r.rescale(17).unwrap();
        assert_eq!(got.values(), &[13.0 / 17.0, 3.0 / 17.0, 1.0 / 17.0]);
        assert!((got.sum() - 1.0).abs() < 1e-12);
        assert!(p.rescale(0).is_err());
    }

    #[test]
    fn json_is_descending_integer_array() {
        let p = MassPartition::rank(&[1, 5, 3]).unwrap();
        assert_eq!(serde_json::to_string(&p).unwrap(), "[5,3,1]");
        let back: MassPartition = serde_json::from_str("[5,3,1]").unwrap();
        assert_eq!(back, p);
    }
}
