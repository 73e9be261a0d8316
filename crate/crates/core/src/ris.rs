//! Discrete RIS phase-shift configurations and their enumeration.
//!
//! Each of the `L` passive elements applies a unit-modulus reflection
//! coefficient `exp(j * 2 pi * idx / 2^mu)` chosen from a `mu`-bit codebook.
//! A [`PhaseConfig`] is the index vector; [`ReducedActionSpace`] restricts
//! each element to a short candidate list produced by greedy frequency
//! analysis (see [`crate::baselines::build_reduced`]).

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on exhaustive enumeration: full sweeps beyond `2^24`
/// configurations are refused rather than attempted.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

#[derive(Debug, Error)]
pub enum RisError {
    #[error("mu must lie in 1..=16, got {0}")]
    InvalidResolution(u8),
    #[error("phase index {index} out of range: mu = {mu} allows 0..{limit}")]
    IndexOutOfRange { index: u16, mu: u8, limit: u32 },
    #[error("element {element} out of range for L = {l}")]
    ElementOutOfRange { element: usize, l: usize },
    #[error("cardinality {cardinality} exceeds enumeration cap {cap}")]
    CardinalityExceedsCap { cardinality: String, cap: u64 },
    #[error("empty phase configuration")]
    Empty,
    #[error("malformed phase list {text:?}: {reason}")]
    Parse { text: String, reason: String },
    #[error("reduced space is invalid: {0}")]
    InvalidReducedSpace(String),
}

fn check_mu(mu: u8) -> Result<(), RisError> {
    if (1..=16).contains(&mu) {
        Ok(())
    } else {
        Err(RisError::InvalidResolution(mu))
    }
}

/// Discrete phase assignment for every RIS element.
///
/// Serializes as the comma-separated index list (e.g. `0,3,1,2`); the
/// resolution `mu` travels separately because the text form does not pin it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhaseConfig {
    indices: Vec<u16>,
    mu: u8,
}

impl PhaseConfig {
    /// The all-zero configuration: every element reflects with phase 0.
    pub fn zeros(l: usize, mu: u8) -> Result<Self, RisError> {
        check_mu(mu)?;
        if l == 0 {
            return Err(RisError::Empty);
        }
        Ok(Self {
            indices: vec![0; l],
            mu,
        })
    }

    pub fn new(indices: Vec<u16>, mu: u8) -> Result<Self, RisError> {
        check_mu(mu)?;
        if indices.is_empty() {
            return Err(RisError::Empty);
        }
        let limit = 1u32 << mu;
        for &index in &indices {
            if u32::from(index) >= limit {
                return Err(RisError::IndexOutOfRange { index, mu, limit });
            }
        }
        Ok(Self { indices, mu })
    }

    /// Parses the comma-separated text form against a known resolution.
    pub fn parse(text: &str, mu: u8) -> Result<Self, RisError> {
        let indices = text
            .split(',')
            .map(|part| {
                part.trim().parse::<u16>().map_err(|e| RisError::Parse {
                    text: text.to_owned(),
                    reason: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(indices, mu)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn mu(&self) -> u8 {
        self.mu
    }

    /// Codebook size `2^mu`.
    pub fn levels(&self) -> u32 {
        1u32 << self.mu
    }

    pub fn indices(&self) -> &[u16] {
        &self.indices
    }

    pub fn get(&self, element: usize) -> u16 {
        self.indices[element]
    }

    pub fn set(&mut self, element: usize, index: u16) -> Result<(), RisError> {
        if element >= self.indices.len() {
            return Err(RisError::ElementOutOfRange {
                element,
                l: self.indices.len(),
            });
        }
        if u32::from(index) >= self.levels() {
            return Err(RisError::IndexOutOfRange {
                index,
                mu: self.mu,
                limit: self.levels(),
            });
        }
        self.indices[element] = index;
        Ok(())
    }

    /// Phase angle of one element, `2 pi idx / 2^mu`.
    pub fn phase(&self, element: usize) -> f64 {
        phase_of(self.indices[element], self.mu)
    }

    /// Unit-modulus reflection coefficient of one element.
    pub fn factor(&self, element: usize) -> Complex64 {
        factor_of(self.indices[element], self.mu)
    }

    /// All `L` reflection coefficients.
    pub fn factors(&self) -> Vec<Complex64> {
        self.indices
            .iter()
            .map(|&i| factor_of(i, self.mu))
            .collect()
    }
}

impl fmt::Display for PhaseConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, idx) in self.indices.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{idx}")?;
        }
        Ok(())
    }
}

/// Phase angle for a raw codebook index.
pub fn phase_of(index: u16, mu: u8) -> f64 {
    TAU * f64::from(index) / f64::from(1u32 << mu)
}

/// Reflection coefficient for a raw codebook index.
pub fn factor_of(index: u16, mu: u8) -> Complex64 {
    Complex64::from_polar(1.0, phase_of(index, mu))
}

/// The diagonal reflection matrix `Phi = diag(e^(j theta_1) .. e^(j theta_L))`.
pub fn phase_matrix(p: &PhaseConfig) -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(p.factors()))
}

/// Iterator over every configuration of `l` elements at resolution `mu`, in
/// lexicographic index order (last element varies fastest).
pub fn enumerate_all(l: usize, mu: u8) -> Result<PhaseIter, RisError> {
    enumerate_all_capped(l, mu, DEFAULT_ENUMERATION_CAP)
}

/// [`enumerate_all`] with an explicit cardinality cap.
pub fn enumerate_all_capped(l: usize, mu: u8, cap: u64) -> Result<PhaseIter, RisError> {
    check_mu(mu)?;
    if l == 0 {
        return Err(RisError::Empty);
    }
    if !full_enumeration_fits(l, mu, cap) {
        return Err(RisError::CardinalityExceedsCap {
            cardinality: format!("2^{}", mu as u64 * l as u64),
            cap,
        });
    }
    Ok(PhaseIter {
        next: Some(vec![0; l]),
        radices: vec![1u16 << mu; l],
        mu,
    })
}

/// Whether `2^(mu L)` configurations fit under `cap`.
pub fn full_enumeration_fits(l: usize, mu: u8, cap: u64) -> bool {
    let bits = mu as u64 * l as u64;
    bits < 64 && (1u64 << bits) <= cap
}

/// Mixed-radix odometer over per-element index lists.
#[derive(Debug)]
pub struct PhaseIter {
    next: Option<Vec<u16>>,
    radices: Vec<u16>,
    mu: u8,
}

impl Iterator for PhaseIter {
    type Item = PhaseConfig;

    fn next(&mut self) -> Option<PhaseConfig> {
        let current = self.next.take()?;
        let item = PhaseConfig {
            indices: current.clone(),
            mu: self.mu,
        };
        let mut digits = current;
        for i in (0..digits.len()).rev() {
            digits[i] += 1;
            if digits[i] < self.radices[i] {
                self.next = Some(digits);
                return Some(item);
            }
            digits[i] = 0;
        }
        Some(item)
    }
}

/// Per-element candidate phase lists from greedy frequency analysis, plus the
/// selection counts that produced them. Serializes as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedActionSpace {
    /// Candidate codebook indices per element, sorted ascending.
    pub candidates: Vec<Vec<u16>>,
    /// Selection count per candidate, aligned with `candidates`.
    pub counts: Vec<Vec<u64>>,
    /// Codebook resolution the candidates index into.
    pub mu: u8,
}

impl ReducedActionSpace {
    /// The trivial reduction: every element keeps its full codebook.
    pub fn full(l: usize, mu: u8) -> Result<Self, RisError> {
        check_mu(mu)?;
        if l == 0 {
            return Err(RisError::Empty);
        }
        let all: Vec<u16> = (0..1u16 << mu).collect();
        Ok(Self {
            candidates: vec![all.clone(); l],
            counts: vec![vec![0; all.len()]; l],
            mu,
        })
    }

    /// Builds a space from explicit candidate lists with zeroed counts.
    pub fn from_parts(candidates: Vec<Vec<u16>>, mu: u8) -> Result<Self, RisError> {
        let counts = candidates.iter().map(|c| vec![0; c.len()]).collect();
        let space = Self {
            candidates,
            counts,
            mu,
        };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<(), RisError> {
        check_mu(self.mu)?;
        if self.candidates.is_empty() {
            return Err(RisError::Empty);
        }
        if self.counts.len() != self.candidates.len() {
            return Err(RisError::InvalidReducedSpace(format!(
                "{} candidate lists but {} count lists",
                self.candidates.len(),
                self.counts.len()
            )));
        }
        let limit = 1u32 << self.mu;
        for (l, (cands, counts)) in self.candidates.iter().zip(&self.counts).enumerate() {
            if cands.is_empty() {
                return Err(RisError::InvalidReducedSpace(format!(
                    "element {l} has no candidates"
                )));
            }
            if cands.len() != counts.len() {
                return Err(RisError::InvalidReducedSpace(format!(
                    "element {l}: {} candidates but {} counts",
                    cands.len(),
                    counts.len()
                )));
            }
            if u32::from(cands.len() as u16) > limit {
                return Err(RisError::InvalidReducedSpace(format!(
                    "element {l} lists {} candidates but the codebook has {limit}",
                    cands.len()
                )));
            }
            for pair in cands.windows(2) {
                if pair[0] >= pair[1] {
                    return Err(RisError::InvalidReducedSpace(format!(
                        "element {l} candidates must be strictly ascending"
                    )));
                }
            }
            if let Some(&max) = cands.last() {
                if u32::from(max) >= limit {
                    return Err(RisError::IndexOutOfRange {
                        index: max,
                        mu: self.mu,
                        limit,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn l(&self) -> usize {
        self.candidates.len()
    }

    pub fn mu(&self) -> u8 {
        self.mu
    }

    /// Number of reachable configurations, `prod n_l`.
    pub fn cardinality(&self) -> u128 {
        self.candidates
            .iter()
            .map(|c| c.len() as u128)
            .product()
    }

    /// Number of one-element actions, `sum n_l`.
    pub fn action_count(&self) -> usize {
        self.candidates.iter().map(Vec::len).sum()
    }

    /// Whether every element's index appears in that element's candidate list.
    pub fn contains(&self, p: &PhaseConfig) -> bool {
        p.len() == self.l()
            && p.mu() == self.mu
            && p.indices()
                .iter()
                .zip(&self.candidates)
                .all(|(idx, cands)| cands.contains(idx))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reduced space serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RisError> {
        let space: Self = serde_json::from_str(text)
            .map_err(|e| RisError::InvalidReducedSpace(e.to_string()))?;
        space.validate()?;
        Ok(space)
    }
}

/// Iterator over every configuration reachable inside a reduced space, in
/// lexicographic candidate order.
pub fn enumerate_reduced(
    space: &ReducedActionSpace,
    cap: u64,
) -> Result<ReducedIter, RisError> {
    space.validate()?;
    let cardinality = space.cardinality();
    if cardinality > u128::from(cap) {
        return Err(RisError::CardinalityExceedsCap {
            cardinality: cardinality.to_string(),
            cap,
        });
    }
    Ok(ReducedIter {
        next: Some(vec![0; space.l()]),
        space: space.clone(),
    })
}

pub struct ReducedIter {
    /// Candidate-slot odometer, one digit per element.
    next: Option<Vec<usize>>,
    space: ReducedActionSpace,
}

impl Iterator for ReducedIter {
    type Item = PhaseConfig;

    fn next(&mut self) -> Option<PhaseConfig> {
        let slots = self.next.take()?;
        let indices: Vec<u16> = slots
            .iter()
            .zip(&self.space.candidates)
            .map(|(&s, cands)| cands[s])
            .collect();
        let item = PhaseConfig {
            indices,
            mu: self.space.mu,
        };
        let mut digits = slots;
        for i in (0..digits.len()).rev() {
            digits[i] += 1;
            if digits[i] < self.space.candidates[i].len() {
                self.next = Some(digits);
                return Some(item);
            }
            digits[i] = 0;
        }
        Some(item)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_indices_give_identity_factors() {
        let p = PhaseConfig::zeros(3, 2).unwrap();
        for l in 0..3 {
            assert_eq!(p.factor(l), Complex64::new(1.0, 0.0));
        }
        let m = phase_matrix(&p);
        assert_eq!(m, DMatrix::identity(3, 3));
    }

    #[test]
    fn half_turn_is_minus_one() {
        // mu = 1, index 1 → phase pi.
        let p = PhaseConfig::new(vec![1], 1).unwrap();
        let z = p.factor(0);
        assert!((z.re + 1.0).abs() < 1e-15 && z.im.abs() < 1e-15, "{z}");
    }

    #[test]
    fn quarter_turn_is_imaginary_unit() {
        // mu = 2, index 1 → phase pi/2.
        let p = PhaseConfig::new(vec![1], 2).unwrap();
        let z = p.factor(0);
        assert!(z.re.abs() < 1e-15 && (z.im - 1.0).abs() < 1e-15, "{z}");
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let err = PhaseConfig::new(vec![4], 2).unwrap_err();
        assert!(err.to_string().contains("index 4"), "{err}");
        let mut p = PhaseConfig::zeros(2, 2).unwrap();
        assert!(p.set(0, 4).is_err());
        assert!(p.set(5, 0).is_err());
    }

    #[test]
    fn text_form_round_trips() {
        let p = PhaseConfig::new(vec![0, 3, 1, 2], 2).unwrap();
        let text = p.to_string();
        assert_eq!(text, "0,3,1,2");
        assert_eq!(PhaseConfig::parse(&text, 2).unwrap(), p);
        assert!(PhaseConfig::parse("0,x", 2).is_err());
        assert!(PhaseConfig::parse("0,7", 2).is_err());
    }

    #[test]
    fn phase_matrix_is_unitary_and_diagonal() {
        let p = PhaseConfig::new(vec![0, 1, 2, 3, 2], 2).unwrap();
        let m = phase_matrix(&p);
        let eye = &m * m.adjoint();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((eye[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-12);
                if i != j {
                    assert_eq!(m[(i, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn enumerate_binary_single_element() {
        let all: Vec<PhaseConfig> = enumerate_all(1, 1).unwrap().collect();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].indices(), &[0]);
        assert_eq!(all[1].indices(), &[1]);
    }

    #[test]
    fn enumerate_visits_each_configuration_once_in_order() {
        let all: Vec<PhaseConfig> = enumerate_all(2, 2).unwrap().collect();
        assert_eq!(all.len(), 16);
        let mut seen: Vec<Vec<u16>> = all.iter().map(|p| p.indices().to_vec()).collect();
        assert_eq!(seen[0], vec![0, 0]);
        assert_eq!(seen[1], vec![0, 1]);
        assert_eq!(seen[4], vec![1, 0]);
        assert_eq!(seen[15], vec![3, 3]);
        let ordered = seen.clone();
        seen.dedup();
        assert_eq!(seen.len(), 16);
        let mut sorted = ordered.clone();
        sorted.sort();
        assert_eq!(sorted, ordered, "lexicographic order");
    }

    #[test]
    fn oversized_enumeration_names_its_cardinality() {
        let err = enumerate_all(60, 2).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2^120"), "{msg}");
        assert!(msg.contains("exceeds enumeration cap"), "{msg}");
    }

    #[test]
    fn cap_boundary_is_inclusive() {
        assert!(full_enumeration_fits(12, 2, DEFAULT_ENUMERATION_CAP));
        assert!(!full_enumeration_fits(13, 2, DEFAULT_ENUMERATION_CAP));
        assert!(enumerate_all_capped(2, 2, 16).is_ok());
        assert!(enumerate_all_capped(2, 2, 15).is_err());
    }

    #[test]
    fn reduced_space_enumerates_its_product() {
        let space = ReducedActionSpace {
            candidates: vec![vec![0, 2], vec![1], vec![0, 1, 3]],
            counts: vec![vec![5, 3], vec![9], vec![2, 2, 1]],
            mu: 2,
        };
        space.validate().unwrap();
        assert_eq!(space.cardinality(), 6);
        assert_eq!(space.action_count(), 6);
        let all: Vec<PhaseConfig> = enumerate_reduced(&space, 1 << 24).unwrap().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0].indices(), &[0, 1, 0]);
        assert_eq!(all[5].indices(), &[2, 1, 3]);
        for p in &all {
            assert!(space.contains(p));
        }
    }

    #[test]
    fn reduced_space_is_subset_of_full_enumeration() {
        let space = ReducedActionSpace {
            candidates: vec![vec![1, 3], vec![0, 2]],
            counts: vec![vec![1, 1], vec![1, 1]],
            mu: 2,
        };
        let full: Vec<Vec<u16>> = enumerate_all(2, 2)
            .unwrap()
            .map(|p| p.indices().to_vec())
            .collect();
        for p in enumerate_reduced(&space, 1 << 24).unwrap() {
            assert!(full.contains(&p.indices().to_vec()));
        }
    }

    #[test]
    fn full_reduction_matches_codebook() {
        let space = ReducedActionSpace::full(3, 2).unwrap();
        assert_eq!(space.cardinality(), 64);
        assert_eq!(space.action_count(), 12);
        for p in enumerate_all(3, 2).unwrap() {
            assert!(space.contains(&p));
        }
    }

    #[test]
    fn malformed_reduced_spaces_are_rejected() {
        let mut space = ReducedActionSpace::full(2, 2).unwrap();
        space.candidates[0] = vec![];
        assert!(space.validate().is_err());
        let mut space = ReducedActionSpace::full(2, 2).unwrap();
        space.candidates[1] = vec![2, 1];
        assert!(space.validate().is_err());
        let mut space = ReducedActionSpace::full(2, 2).unwrap();
        space.counts[0] = vec![1];
        assert!(space.validate().is_err());
    }

    #[test]
    fn reduced_space_json_round_trips() {
        let space = ReducedActionSpace {
            candidates: vec![vec![0, 2], vec![1, 3]],
            counts: vec![vec![17, 3], vec![11, 9]],
            mu: 2,
        };
        let json = space.to_json();
        assert!(json.contains("candidates"));
        assert_eq!(ReducedActionSpace::from_json(&json).unwrap(), space);
    }

    proptest! {
        #[test]
        fn factors_are_unit_modulus(idx in 0u16..4, mu in 1u8..=4) {
            let idx = idx % (1 << mu);
            prop_assert!((factor_of(idx, mu).norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn display_parse_round_trip(
            indices in proptest::collection::vec(0u16..4, 1..8)
        ) {
            let p = PhaseConfig::new(indices, 2).unwrap();
            prop_assert_eq!(PhaseConfig::parse(&p.to_string(), 2).unwrap(), p);
        }
    }
}
