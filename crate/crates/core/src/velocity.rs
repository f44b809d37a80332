//! Discrete velocity sets for two-dimensional lattices.
//!
//! A velocity set is enumerated from a list of "shells": the squared norms
//! of the integer displacement vectors it contains. D2Q9 uses shells
//! {0,1,2} and carries the standard second-order weights; D2Q37 uses shells
//! {0,1,2,4,5,8,9,10} and carries no weights (its physics-mode collision
//! constants live outside this suite, so only propagate and the surrogate
//! collision apply to it).

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Supported lattice models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatticeModel {
    D2Q9,
    D2Q37,
    /// Any set of squared norms representable as sums of two integer squares.
    CustomShells(Vec<u32>),
}

/// A DdQq discrete velocity set.
///
/// Vectors are enumerated in a canonical order: shells by ascending squared
/// norm, vectors within a shell in lexicographic `(cx, cy)` order. All code
/// that iterates populations relies on this order being stable.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySet {
    /// Spatial dimension; always 2 here.
    pub d: usize,
    /// Number of populations.
    pub q: usize,
    /// Integer displacement vectors, lattice units per time step.
    pub vectors: Vec<[i32; 2]>,
    /// Quadrature weights; present only for physics-mode sets.
    pub weights: Option<Vec<f64>>,
    /// Squared lattice speed of sound; present only for physics-mode sets.
    pub speed_of_sound_sq: Option<f64>,
}

impl VelocitySet {
    /// Build the velocity set for `model`.
    pub fn build(model: &LatticeModel) -> Result<Self, CoreError> {
        match model {
            LatticeModel::D2Q9 => {
                let vectors = enumerate_shells(&[0, 1, 2]);
                debug_assert_eq!(vectors.len(), 9);
                let weights = vectors
                    .iter()
                    .map(|c| match c[0] * c[0] + c[1] * c[1] {
                        0 => 4.0 / 9.0,
                        1 => 1.0 / 9.0,
                        2 => 1.0 / 36.0,
                        _ => unreachable!(),
                    })
                    .collect();
                Ok(Self {
                    d: 2,
                    q: 9,
                    vectors,
                    weights: Some(weights),
                    speed_of_sound_sq: Some(1.0 / 3.0),
                })
            }
            LatticeModel::D2Q37 => {
                let vectors = enumerate_shells(&[0, 1, 2, 4, 5, 8, 9, 10]);
                debug_assert_eq!(vectors.len(), 37);
                Ok(Self {
                    d: 2,
                    q: 37,
                    vectors,
                    weights: None,
                    speed_of_sound_sq: None,
                })
            }
            LatticeModel::CustomShells(shells) => {
                let vectors = enumerate_shells(shells);
                if vectors.is_empty() {
                    return Err(CoreError::EmptyVelocitySet(shells.clone()));
                }
                Ok(Self {
                    d: 2,
                    q: vectors.len(),
                    vectors,
                    weights: None,
                    speed_of_sound_sq: None,
                })
            }
        }
    }

    /// Largest absolute vector component; the minimum halo width a field
    /// needs before this set can propagate over it.
    pub fn max_component(&self) -> usize {
        self.vectors
            .iter()
            .map(|c| c[0].unsigned_abs().max(c[1].unsigned_abs()) as usize)
            .max()
            .unwrap_or(0)
    }

    /// True when for every vector its negation is also a member.
    pub fn closed_under_negation(&self) -> bool {
        self.vectors
            .iter()
            .all(|c| self.vectors.contains(&[-c[0], -c[1]]))
    }
}

/// Enumerate all integer 2D vectors whose squared norm is in `shells`,
/// in canonical order (shell ascending, then lexicographic).
fn enumerate_shells(shells: &[u32]) -> Vec<[i32; 2]> {
    let mut sorted: Vec<u32> = shells.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let mut vectors = Vec::new();
    for &shell in &sorted {
        let reach = (shell as f64).sqrt().ceil() as i32;
        let mut members = Vec::new();
        for cx in -reach..=reach {
            for cy in -reach..=reach {
                if (cx * cx + cy * cy) as u32 == shell {
                    members.push([cx, cy]);
                }
            }
        }
        // The scan above is already lexicographic in (cx, cy).
        vectors.extend(members);
    }
    vectors
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: count vectors per shell by scanning a box wide
    /// enough to contain every candidate.
    fn brute_force_count(shells: &[u32]) -> usize {
        let reach = shells
            .iter()
            .map(|&s| (s as f64).sqrt().ceil() as i32)
            .max()
            .unwrap_or(0);
        let mut n = 0;
        for cx in -reach - 1..=reach + 1 {
            for cy in -reach - 1..=reach + 1 {
                if shells.contains(&((cx * cx + cy * cy) as u32)) {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn d2q37_has_37_populations() {
        let set = VelocitySet::build(&LatticeModel::D2Q37).unwrap();
        assert_eq!(set.q, 37);
        assert_eq!(set.vectors.len(), 37);
        assert_eq!(brute_force_count(&[0, 1, 2, 4, 5, 8, 9, 10]), 37);
    }

    #[test]
    fn d2q37_shell_counts() {
        // 1+4+4+4+8+4+4+8 = 37
        let expected = [(0u32, 1usize), (1, 4), (2, 4), (4, 4), (5, 8), (8, 4), (9, 4), (10, 8)];
        let set = VelocitySet::build(&LatticeModel::D2Q37).unwrap();
        for (shell, count) in expected {
            let got = set
                .vectors
                .iter()
                .filter(|c| (c[0] * c[0] + c[1] * c[1]) as u32 == shell)
                .count();
            assert_eq!(got, count, "shell {shell}");
            assert_eq!(brute_force_count(&[shell]), count, "oracle shell {shell}");
        }
    }

    #[test]
    fn d2q9_weights_sum_to_one() {
        let set = VelocitySet::build(&LatticeModel::D2Q9).unwrap();
        assert_eq!(set.q, 9);
        let sum: f64 = set.weights.as_ref().unwrap().iter().sum();
        assert!((sum - 1.0).abs() < 1e-14, "weight sum {sum}");
        assert!(set.weights.as_ref().unwrap().iter().all(|&w| w > 0.0));
        assert_eq!(set.speed_of_sound_sq, Some(1.0 / 3.0));
    }

    #[test]
    fn sets_are_negation_closed_and_distinct() {
        for model in [LatticeModel::D2Q9, LatticeModel::D2Q37] {
            let set = VelocitySet::build(&model).unwrap();
            assert!(set.closed_under_negation());
            let mut sorted = set.vectors.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), set.q, "vectors must be pairwise distinct");
            // Exactly one zero vector, since 0 is in both shell sets.
            assert_eq!(set.vectors.iter().filter(|c| **c == [0, 0]).count(), 1);
            // Negation closure makes the component sums vanish exactly.
            let sum = set
                .vectors
                .iter()
                .fold([0i32, 0], |acc, c| [acc[0] + c[0], acc[1] + c[1]]);
            assert_eq!(sum, [0, 0]);
        }
    }

    #[test]
    fn max_component_matches_stencil_reach() {
        assert_eq!(VelocitySet::build(&LatticeModel::D2Q9).unwrap().max_component(), 1);
        assert_eq!(VelocitySet::build(&LatticeModel::D2Q37).unwrap().max_component(), 3);
    }

    #[test]
    fn custom_shells() {
        let set = VelocitySet::build(&LatticeModel::CustomShells(vec![0, 1])).unwrap();
        assert_eq!(set.q, 5);
        assert!(set.weights.is_none());

        // 3 is not a sum of two squares: the set comes out empty.
        let err = VelocitySet::build(&LatticeModel::CustomShells(vec![3])).unwrap_err();
        assert!(matches!(err, CoreError::EmptyVelocitySet(_)));
    }

    #[test]
    fn enumeration_order_is_canonical() {
        let set = VelocitySet::build(&LatticeModel::D2Q9).unwrap();
        assert_eq!(set.vectors[0], [0, 0]);
        // Shell 1 in lexicographic order.
        assert_eq!(&set.vectors[1..5], &[[-1, 0], [0, -1], [0, 1], [1, 0]]);
        // Rebuilding produces the same set in the same order.
        let again = VelocitySet::build(&LatticeModel::D2Q9).unwrap();
        assert_eq!(set.vectors, again.vectors);
    }
}
