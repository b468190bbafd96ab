//! Randomization mechanisms: binary randomized response, partial Gaussian
//! feature noise, and inverted-pixel sample synthesis.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("epsilon must be positive (got {0})")]
    BadEpsilon(f64),
    #[error("gamma must lie in [0, 1] (got {0})")]
    BadGamma(f64),
    #[error("sigma must be nonnegative (got {0})")]
    BadSigma(f64),
}

/// A per-attribute privacy budget. Finite positive values randomize;
/// [`Epsilon::INF`] switches randomization off entirely.
///
/// Serializes as a JSON number, or the string `"inf"` for the infinite case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epsilon(f64);

impl Epsilon {
    pub const INF: Epsilon = Epsilon(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self, NoiseError> {
        if value > 0.0 {
            Ok(Epsilon(value))
        } else {
            Err(NoiseError::BadEpsilon(value))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_infinite(&self) -> bool {
        self.0.is_infinite()
    }

    /// Probability that randomized response reports a bit truthfully:
    /// `e^eps / (1 + e^eps)`, computed as `1 / (1 + e^-eps)` so the infinite
    /// case yields exactly 1.
    pub fn keep_probability(&self) -> f64 {
        1.0 / (1.0 + (-self.0).exp())
    }

    /// Complement of [`Epsilon::keep_probability`].
    pub fn flip_probability(&self) -> f64 {
        1.0 - self.keep_probability()
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Epsilon {
    type Err = NoiseError;

    fn from_str(s: &str) -> Result<Self, NoiseError> {
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Epsilon::INF);
        }
        let value: f64 = s.parse().map_err(|_| NoiseError::BadEpsilon(f64::NAN))?;
        Epsilon::new(value)
    }
}

impl Serialize for Epsilon {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(x) => Epsilon::new(x).map_err(D::Error::custom),
            Raw::Text(s) => Epsilon::from_str(&s).map_err(D::Error::custom),
        }
    }
}

/// Randomized response over a vector of bits: each bit is reported truthfully
/// with probability `e^eps / (1 + e^eps)` and flipped otherwise,
/// independently. This gives eps-differential privacy per bit. An infinite
/// epsilon returns the input unchanged without consuming randomness.
pub fn randomized_response<R: Rng>(values: &[u8], epsilon: Epsilon, rng: &mut R) -> Vec<u8> {
    debug_assert!(values.iter().all(|&v| v <= 1), "values must be bits");
    if epsilon.is_infinite() {
        return values.to_vec();
    }
    let keep = epsilon.keep_probability();
    values
        .iter()
        .map(|&v| {
            if rng.random::<f64>() < keep {
                v
            } else {
                1 - v
            }
        })
        .collect()
}

/// Adds `N(0, sigma^2)` noise to a random subset of `floor(gamma * d)`
/// feature coordinates, chosen uniformly without replacement. `gamma` is the
/// fraction of coordinates to perturb.
pub fn gaussian_feature_randomize<R: Rng>(
    features: &[f64],
    gamma: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>, NoiseError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(NoiseError::BadGamma(gamma));
    }
    if sigma < 0.0 || sigma.is_nan() {
        return Err(NoiseError::BadSigma(sigma));
    }
    let mut out = features.to_vec();
    let count = (gamma * features.len() as f64).floor() as usize;
    if count == 0 || sigma == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    for i in rand::seq::index::sample(rng, features.len(), count) {
        out[i] += normal.sample(rng);
    }
    Ok(out)
}

/// Synthesizes a decoy sample from pixel bytes: each byte becomes
/// `255 - x + N(0, sigma^2)`, rounded and clamped back to `0..=255`.
pub fn synthesize_noisy_sample<R: Rng>(
    pixels: &[u8],
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<u8>, NoiseError> {
    if sigma < 0.0 || sigma.is_nan() {
        return Err(NoiseError::BadSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(pixels.iter().map(|&x| 255 - x).collect());
    }
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    Ok(pixels
        .iter()
        .map(|&x| {
            let v = 255.0 - f64::from(x) + normal.sample(rng);
            v.round().clamp(0.0, 255.0) as u8
        })
        .collect())
}
