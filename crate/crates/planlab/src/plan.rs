//! A districting plan: one district label per unit, possibly partial
//! while a plan is under construction.

use thiserror::Error;

use crate::hash::Fnv1a;

/// District labels are dense `0..k`. `UNASSIGNED` is the hole value used
/// while plans are being built.
pub type District = u16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("district label {label} out of range for k={k}")]
    LabelOutOfRange { label: District, k: District },
    #[error("plan has {got} units, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("k must be at least 1")]
    ZeroDistricts,
}

/// Assignment of units to `k` districts. Complete iff no unit is
/// [`Plan::UNASSIGNED`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plan {
    labels: Vec<District>,
    k: District,
}

impl Plan {
    pub const UNASSIGNED: District = District::MAX;

    /// An empty plan: every unit unassigned.
    pub fn new_unassigned(num_units: usize, k: District) -> Result<Self, PlanError> {
        if k == 0 {
            return Err(PlanError::ZeroDistricts);
        }
        Ok(Plan {
            labels: vec![Self::UNASSIGNED; num_units],
            k,
        })
    }

    /// Build from raw labels; every label must be `< k` or `UNASSIGNED`.
    pub fn from_labels(labels: Vec<District>, k: District) -> Result<Self, PlanError> {
        if k == 0 {
            return Err(PlanError::ZeroDistricts);
        }
        for &l in &labels {
            if l != Self::UNASSIGNED && l >= k {
                return Err(PlanError::LabelOutOfRange { label: l, k });
            }
        }
        Ok(Plan { labels, k })
    }

    /// All units in district 0: the trivial single-district plan.
    pub fn single_district(num_units: usize) -> Self {
        Plan {
            labels: vec![0; num_units],
            k: 1,
        }
    }

    pub fn k(&self) -> District {
        self.k
    }

    pub fn num_units(&self) -> usize {
        self.labels.len()
    }

    pub fn district_of(&self, unit: u32) -> Option<District> {
        let l = self.labels[unit as usize];
        (l != Self::UNASSIGNED).then_some(l)
    }

    /// Raw labels with `UNASSIGNED` holes; the fast path for scoring loops.
    pub fn labels(&self) -> &[District] {
        &self.labels
    }

    pub fn assign(&mut self, unit: u32, district: District) -> Result<(), PlanError> {
        if district >= self.k {
            return Err(PlanError::LabelOutOfRange {
                label: district,
                k: self.k,
            });
        }
        self.labels[unit as usize] = district;
        Ok(())
    }

    pub fn clear(&mut self, unit: u32) {
        self.labels[unit as usize] = Self::UNASSIGNED;
    }

    pub fn is_complete(&self) -> bool {
        self.labels.iter().all(|&l| l != Self::UNASSIGNED)
    }

    pub fn num_assigned(&self) -> usize {
        self.labels.iter().filter(|&&l| l != Self::UNASSIGNED).count()
    }

    /// Units carrying `district`, in id order.
    pub fn district_units(&self, district: District) -> Vec<u32> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == district)
            .map(|(i, _)| i as u32)
            .collect()
    }

    /// Relabel districts by order of first appearance in unit-id order.
    /// Two plans are the same unlabeled partition iff their canonical
    /// labels are equal. Unassigned holes are preserved.
    pub fn canonical_labels(&self) -> Vec<District> {
        let mut remap = vec![Self::UNASSIGNED; self.k as usize];
        let mut next: District = 0;
        let mut out = Vec::with_capacity(self.labels.len());
        for &l in &self.labels {
            if l == Self::UNASSIGNED {
                out.push(Self::UNASSIGNED);
                continue;
            }
            if remap[l as usize] == Self::UNASSIGNED {
                remap[l as usize] = next;
                next += 1;
            }
            out.push(remap[l as usize]);
        }
        out
    }

    /// Stable hash of the canonical form: label-permutation invariant.
    pub fn partition_hash(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_u64(self.k as u64);
        for l in self.canonical_labels() {
            h.write_u64(l as u64);
        }
        h.finish()
    }

    /// Number of units whose labels differ (plans must be same size).
    pub fn hamming_distance(&self, other: &Plan) -> usize {
        assert_eq!(self.labels.len(), other.labels.len());
        self.labels
            .iter()
            .zip(&other.labels)
            .filter(|(a, b)| a != b)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_range_enforced() {
        assert!(Plan::from_labels(vec![0, 1, 2], 3).is_ok());
        let err = Plan::from_labels(vec![0, 3], 3).unwrap_err();
        assert_eq!(err, PlanError::LabelOutOfRange { label: 3, k: 3 });
        let mut p = Plan::new_unassigned(2, 2).unwrap();
        assert!(p.assign(0, 2).is_err());
    }

    #[test]
    fn completeness() {
        let mut p = Plan::new_unassigned(2, 2).unwrap();
        assert!(!p.is_complete());
        p.assign(0, 0).unwrap();
        p.assign(1, 1).unwrap();
        assert!(p.is_complete());
        p.clear(1);
        assert!(!p.is_complete());
        assert_eq!(p.num_assigned(), 1);
    }

    #[test]
    fn canonical_form_is_permutation_invariant() {
        let a = Plan::from_labels(vec![2, 2, 0, 1], 3).unwrap();
        let b = Plan::from_labels(vec![0, 0, 1, 2], 3).unwrap();
        assert_eq!(a.canonical_labels(), b.canonical_labels());
        assert_eq!(a.partition_hash(), b.partition_hash());
        let c = Plan::from_labels(vec![0, 1, 1, 2], 3).unwrap();
        assert_ne!(a.partition_hash(), c.partition_hash());
    }

    #[test]
    fn hamming() {
        let a = Plan::from_labels(vec![0, 0, 1, 1], 2).unwrap();
        let b = Plan::from_labels(vec![0, 1, 1, 1], 2).unwrap();
        assert_eq!(a.hamming_distance(&b), 1);
        assert_eq!(a.hamming_distance(&a), 0);
    }
}
