//! Finite discrete probability distributions and exact Earth Mover's
//! Distance between them.
//!
//! Supports are small ordered sets of byte-coded category values. The three
//! ground distances below all admit closed-form transport costs, so no
//! general flow solver is needed here; the test suite checks these formulas
//! against one anyway.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed when checking that masses sum to 1.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("probability masses must sum to 1 (got {0})")]
    BadMassSum(f64),
    #[error("probability mass for value {value} is negative ({mass})")]
    NegativeMass { value: u8, mass: f64 },
    #[error("support values must be strictly increasing")]
    UnsortedSupport,
    #[error("support and mass vectors have different lengths")]
    LengthMismatch,
    #[error("support must not be empty")]
    EmptySupport,
    #[error("distributions are defined over different supports")]
    SupportMismatch,
    #[error("binary ground distance requires support {{0, 1}}")]
    NotBinarySupport,
}

/// A probability distribution over a finite, strictly increasing support of
/// byte-coded values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    support: Vec<u8>,
    masses: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<u8>, masses: Vec<f64>) -> Result<Self, DistError> {
        if support.is_empty() {
            return Err(DistError::EmptySupport);
        }
        if support.len() != masses.len() {
            return Err(DistError::LengthMismatch);
        }
        if !support.windows(2).all(|w| w[0] < w[1]) {
            return Err(DistError::UnsortedSupport);
        }
        for (&value, &mass) in support.iter().zip(&masses) {
            if mass < 0.0 || mass.is_nan() {
                return Err(DistError::NegativeMass { value, mass });
            }
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(DistError::BadMassSum(total));
        }
        Ok(DiscreteDistribution { support, masses })
    }

    /// Distribution over `{0, 1}` with mass `p_one` on 1.
    pub fn bernoulli(p_one: f64) -> Result<Self, DistError> {
        DiscreteDistribution::new(vec![0, 1], vec![1.0 - p_one, p_one])
    }

    /// Point mass at `value` on the two-point support `{0, 1}`.
    pub fn binary_point(value: u8) -> Self {
        let p_one = if value > 0 { 1.0 } else { 0.0 };
        DiscreteDistribution::bernoulli(p_one).expect("point mass is a valid distribution")
    }

    /// Empirical distribution of byte values over the support `0..arity`.
    pub fn from_counts(counts: &[usize]) -> Result<Self, DistError> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(DistError::BadMassSum(0.0));
        }
        let support = (0..counts.len() as u8).collect();
        let masses = counts.iter().map(|&c| c as f64 / total as f64).collect();
        DiscreteDistribution::new(support, masses)
    }

    pub fn support(&self) -> &[u8] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Mass assigned to `value`; 0 when the value is outside the support.
    pub fn mass_of(&self, value: u8) -> f64 {
        match self.support.binary_search(&value) {
            Ok(i) => self.masses[i],
            Err(_) => 0.0,
        }
    }
}

/// Ground distance between support points, which determines how expensive it
/// is to move probability mass between categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroundDistance {
    /// `|a - b|` over the support `{0, 1}`; the natural choice for binary
    /// attributes.
    Binary,
    /// 0 for the same category and 1 for any pair of different ones
    /// (categories are unrelated).
    Uniform,
    /// `|i - j|` between support positions (categories form a unit-spaced
    /// ordinal scale).
    Ordinal,
}

impl GroundDistance {
    /// Transport cost between support positions `i` and `j`.
    pub fn cost(&self, support: &[u8], i: usize, j: usize) -> f64 {
        match self {
            GroundDistance::Binary => (f64::from(support[i]) - f64::from(support[j])).abs(),
            GroundDistance::Uniform => {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }
            GroundDistance::Ordinal => (i as f64 - j as f64).abs(),
        }
    }
}

/// Exact Earth Mover's Distance between two distributions on the same
/// support.
///
/// Closed forms per ground distance: `Binary` is `|p(1) - q(1)|`, `Uniform`
/// is the total variation distance `0.5 * sum |p_i - q_i|`, and `Ordinal` is
/// the L1 distance between the cumulative distribution functions.
pub fn emd(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    ground: GroundDistance,
) -> Result<f64, DistError> {
    if p.support != q.support {
        return Err(DistError::SupportMismatch);
    }
    match ground {
        GroundDistance::Binary => {
            if p.support != [0, 1] {
                return Err(DistError::NotBinarySupport);
            }
            Ok((p.masses[1] - q.masses[1]).abs())
        }
        GroundDistance::Uniform => {
            let l1: f64 = p
                .masses
                .iter()
                .zip(&q.masses)
                .map(|(a, b)| (a - b).abs())
                .sum();
            Ok(0.5 * l1)
        }
        GroundDistance::Ordinal => {
            // The last CDF gap is omitted: both CDFs end at 1, so it is pure
            // rounding noise.
            let n = p.masses.len();
            let mut cdf_gap = 0.0;
            let mut total = 0.0;
            for (a, b) in p.masses.iter().zip(&q.masses).take(n - 1) {
                cdf_gap += a - b;
                total += cdf_gap.abs();
            }
            Ok(total)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(support: Vec<u8>, masses: Vec<f64>) -> DiscreteDistribution {
        DiscreteDistribution::new(support, masses).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            DiscreteDistribution::new(vec![], vec![]),
            Err(DistError::EmptySupport)
        );
        assert_eq!(
            DiscreteDistribution::new(vec![0, 1], vec![1.0]),
            Err(DistError::LengthMismatch)
        );
        assert_eq!(
            DiscreteDistribution::new(vec![1, 0], vec![0.5, 0.5]),
            Err(DistError::UnsortedSupport)
        );
        assert_eq!(
            DiscreteDistribution::new(vec![0, 0], vec![0.5, 0.5]),
            Err(DistError::UnsortedSupport)
        );
        assert!(matches!(
            DiscreteDistribution::new(vec![0, 1], vec![-0.1, 1.1]),
            Err(DistError::NegativeMass { value: 0, .. })
        ));
        assert!(matches!(
            DiscreteDistribution::new(vec![0, 1], vec![0.5, 0.6]),
            Err(DistError::BadMassSum(_))
        ));
    }

    #[test]
    fn mass_lookup() {
        let d = dist(vec![0, 2, 5], vec![0.2, 0.3, 0.5]);
        assert_eq!(d.mass_of(2), 0.3);
        assert_eq!(d.mass_of(1), 0.0);
    }

    #[test]
    fn binary_distance_is_gap_between_one_masses() {
        let p = dist(vec![0, 1], vec![0.25, 0.75]);
        let q = DiscreteDistribution::binary_point(1);
        assert!((emd(&p, &q, GroundDistance::Binary).unwrap() - 0.25).abs() < 1e-15);
        let r = DiscreteDistribution::binary_point(0);
        assert!((emd(&p, &r, GroundDistance::Binary).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn binary_distance_needs_zero_one_support() {
        let p = dist(vec![0, 2], vec![0.5, 0.5]);
        assert_eq!(
            emd(&p, &p, GroundDistance::Binary),
            Err(DistError::NotBinarySupport)
        );
    }

    #[test]
    fn uniform_distance_is_total_variation() {
        let p = dist(vec![0, 1, 2], vec![0.7, 0.1, 0.2]);
        let q = dist(vec![0, 1, 2], vec![0.2, 0.5, 0.3]);
        assert!((emd(&p, &q, GroundDistance::Uniform).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ordinal_distance_counts_cdf_gaps() {
        let p = dist(vec![0, 1, 2], vec![0.5, 0.5, 0.0]);
        let q = dist(vec![0, 1, 2], vec![0.0, 0.5, 0.5]);
        assert!((emd(&p, &q, GroundDistance::Ordinal).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mismatched_supports_are_rejected() {
        let p = dist(vec![0, 1], vec![0.5, 0.5]);
        let q = dist(vec![0, 2], vec![0.5, 0.5]);
        assert_eq!(
            emd(&p, &q, GroundDistance::Uniform),
            Err(DistError::SupportMismatch)
        );
    }
}
