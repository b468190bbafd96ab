//! Minimal adversarial perturbations against affine classifiers.
//!
//! For an affine (linear-score) classifier the smallest perturbation moving a
//! point across a decision boundary has a closed form, computed here exactly.
//! On top of that sits an iterative search for a single *universal*
//! perturbation vector that fools the classifier on a whole point set at once
//! while staying inside an Lp ball of radius `xi`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RandomSource;

#[derive(Debug, Error, PartialEq)]
pub enum AdversarialError {
    #[error("classifier needs at least two classes (got {0})")]
    TooFewClasses(usize),
    #[error("labels, weights and biases must have matching shapes")]
    ShapeMismatch,
    #[error("point has dimension {got}, classifier expects {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("all decision boundaries are degenerate; no perturbation can change the label")]
    DegenerateBoundaries,
    #[error("radius xi must be positive (got {0})")]
    BadRadius(f64),
    #[error("delta must lie in [0, 1] (got {0})")]
    BadDelta(f64),
    #[error("overshoot must be nonnegative (got {0})")]
    BadOvershoot(f64),
    #[error("no points supplied")]
    NoPoints,
    #[error("invalid classifier document: {0}")]
    Document(String),
}

/// A K-class linear-score classifier: class scores are `W x + b` and the
/// prediction is the argmax (ties go to the lowest class index).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineClassifier {
    labels: Vec<String>,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

#[derive(Deserialize)]
struct ClassifierDocument {
    labels: Vec<String>,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

impl AffineClassifier {
    pub fn new(
        labels: Vec<String>,
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
    ) -> Result<Self, AdversarialError> {
        if labels.len() < 2 {
            return Err(AdversarialError::TooFewClasses(labels.len()));
        }
        if weights.len() != labels.len() || biases.len() != labels.len() {
            return Err(AdversarialError::ShapeMismatch);
        }
        let dim = weights[0].len();
        if dim == 0 || weights.iter().any(|w| w.len() != dim) {
            return Err(AdversarialError::ShapeMismatch);
        }
        Ok(AffineClassifier {
            labels,
            weights,
            biases,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, AdversarialError> {
        let doc: ClassifierDocument =
            serde_json::from_str(text).map_err(|e| AdversarialError::Document(e.to_string()))?;
        AffineClassifier::new(doc.labels, doc.weights, doc.biases)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("classifier serialization cannot fail")
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_of(&self, class: usize) -> &str {
        &self.labels[class]
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>, AdversarialError> {
        if x.len() != self.dim() {
            return Err(AdversarialError::DimensionMismatch {
                got: x.len(),
                want: self.dim(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + b)
            .collect())
    }

    /// Predicted class index; ties resolve to the lowest index.
    pub fn classify(&self, x: &[f64]) -> Result<usize, AdversarialError> {
        let scores = self.scores(x)?;
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        Ok(best)
    }
}

/// The smallest perturbation (in L2) that pushes `x` across the nearest
/// decision boundary of `clf`.
///
/// For affine classifiers the first step lands exactly on the nearest
/// boundary, so the returned vector's L2 norm equals the point's margin.
/// The flip check applies `1 + overshoot` to nudge strictly past the
/// boundary; points starting exactly on a boundary have margin 0 and come
/// back with the zero vector (there is nothing to cross).
pub fn minimal_perturbation(
    clf: &AffineClassifier,
    x: &[f64],
    overshoot: f64,
    max_iters: usize,
) -> Result<Vec<f64>, AdversarialError> {
    if overshoot < 0.0 || overshoot.is_nan() {
        return Err(AdversarialError::BadOvershoot(overshoot));
    }
    let original = clf.classify(x)?;
    let mut r = vec![0.0; x.len()];
    for _ in 0..max_iters {
        let x_overshot: Vec<f64> = x
            .iter()
            .zip(&r)
            .map(|(xi, ri)| xi + (1.0 + overshoot) * ri)
            .collect();
        if clf.classify(&x_overshot)? != original {
            break;
        }
        let x_current: Vec<f64> = x.iter().zip(&r).map(|(xi, ri)| xi + ri).collect();
        let scores = clf.scores(&x_current)?;
        // Distance to the boundary against class l is |s_l - s_orig| over
        // the norm of the weight-row difference; take the nearest.
        let mut nearest: Option<(f64, usize)> = None;
        for l in 0..clf.n_classes() {
            if l == original {
                continue;
            }
            let norm_sq: f64 = clf.weights[l]
                .iter()
                .zip(&clf.weights[original])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if norm_sq == 0.0 {
                continue; // parallel scores; this boundary cannot be crossed
            }
            let distance = (scores[l] - scores[original]).abs() / norm_sq.sqrt();
            if nearest.is_none_or(|(best, _)| distance < best) {
                nearest = Some((distance, l));
            }
        }
        let (_, l) = nearest.ok_or(AdversarialError::DegenerateBoundaries)?;
        let w_diff: Vec<f64> = clf.weights[l]
            .iter()
            .zip(&clf.weights[original])
            .map(|(a, b)| a - b)
            .collect();
        let norm_sq: f64 = w_diff.iter().map(|v| v * v).sum();
        let scale = (scores[l] - scores[original]).abs() / norm_sq;
        for (ri, wi) in r.iter_mut().zip(&w_diff) {
            *ri += scale * wi;
        }
        if scale == 0.0 {
            break; // on the boundary already; further iterations cannot move
        }
    }
    Ok(r)
}

/// Which Lp ball constrains perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PNorm {
    L2,
    LInf,
}

/// `||v||_p`.
pub fn lp_norm(v: &[f64], p: PNorm) -> f64 {
    match p {
        PNorm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        PNorm::LInf => v.iter().fold(0.0, |acc, &x| acc.max(x.abs())),
    }
}

/// Projects `v` onto the Lp ball of radius `xi`: identity inside the ball,
/// radial rescaling (L2) or per-coordinate clamping (Linf) outside.
pub fn project_lp_ball(v: &[f64], xi: f64, p: PNorm) -> Vec<f64> {
    debug_assert!(xi > 0.0, "ball radius must be positive");
    match p {
        PNorm::L2 => {
            let norm = lp_norm(v, PNorm::L2);
            if norm <= xi {
                v.to_vec()
            } else {
                v.iter().map(|x| x * xi / norm).collect()
            }
        }
        PNorm::LInf => v.iter().map(|x| x.clamp(-xi, xi)).collect(),
    }
}

/// Search parameters for [`universal_perturbation`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniversalConfig {
    /// Radius of the Lp ball the perturbation must stay inside.
    pub xi: f64,
    /// Target miss share: the search stops once at least `1 - delta` of the
    /// points are fooled.
    pub delta: f64,
    pub norm: PNorm,
    /// Boundary-crossing nudge applied to every per-point step.
    pub overshoot: f64,
    /// Full passes over the data before giving up.
    pub max_outer_iters: usize,
    /// Optional cap on each per-point update's Lp norm before projection.
    pub step_cap: Option<f64>,
}

impl UniversalConfig {
    pub fn new(xi: f64, delta: f64) -> Result<Self, AdversarialError> {
        if xi <= 0.0 || xi.is_nan() {
            return Err(AdversarialError::BadRadius(xi));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(AdversarialError::BadDelta(delta));
        }
        Ok(UniversalConfig {
            xi,
            delta,
            norm: PNorm::L2,
            overshoot: 0.02,
            max_outer_iters: 20,
            step_cap: None,
        })
    }
}

/// Result of the universal-perturbation search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalPerturbation {
    pub v: Vec<f64>,
    /// Share of points whose label changed under `x + v`.
    pub fooling_rate: f64,
    /// Full passes actually executed.
    pub iterations: usize,
}

/// Fraction of points on which adding `v` changes the classifier's output.
pub fn fooling_rate(
    points: &[Vec<f64>],
    clf: &AffineClassifier,
    v: &[f64],
) -> Result<f64, AdversarialError> {
    if points.is_empty() {
        return Err(AdversarialError::NoPoints);
    }
    let mut fooled = 0;
    for x in points {
        let shifted: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + b).collect();
        if clf.classify(&shifted)? != clf.classify(x)? {
            fooled += 1;
        }
    }
    Ok(fooled as f64 / points.len() as f64)
}

/// Finds a single vector `v` with `||v||_p <= xi` that changes the
/// classifier's prediction on at least `1 - delta` of `points`, or stops
/// after `max_outer_iters` passes.
///
/// Each pass shuffles the points (deterministically from `source`), takes a
/// minimal boundary-crossing step for every point `v` does not yet fool, and
/// re-projects `v` onto the ball; `||v||_p <= xi` therefore holds at every
/// moment, including early exits.
pub fn universal_perturbation(
    points: &[Vec<f64>],
    clf: &AffineClassifier,
    config: &UniversalConfig,
    source: &RandomSource,
) -> Result<UniversalPerturbation, AdversarialError> {
    if config.xi <= 0.0 || config.xi.is_nan() {
        return Err(AdversarialError::BadRadius(config.xi));
    }
    if !(0.0..=1.0).contains(&config.delta) {
        return Err(AdversarialError::BadDelta(config.delta));
    }
    if points.is_empty() {
        return Err(AdversarialError::NoPoints);
    }
    let original: Vec<usize> = points
        .iter()
        .map(|x| clf.classify(x))
        .collect::<Result<_, _>>()?;
    let mut rng = source.rng();
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut v = vec![0.0; clf.dim()];
    let mut iterations = 0;
    let mut rate = 0.0; // v = 0 fools nothing
    while rate < 1.0 - config.delta && iterations < config.max_outer_iters {
        order.shuffle(&mut rng);
        for &i in &order {
            let shifted: Vec<f64> = points[i].iter().zip(&v).map(|(a, b)| a + b).collect();
            if clf.classify(&shifted)? != original[i] {
                continue;
            }
            let step = minimal_perturbation(clf, &shifted, config.overshoot, 50)?;
            let mut update: Vec<f64> = step
                .iter()
                .map(|s| s * (1.0 + config.overshoot))
                .collect();
            if let Some(cap) = config.step_cap {
                update = project_lp_ball(&update, cap, config.norm);
            }
            let moved: Vec<f64> = v.iter().zip(&update).map(|(a, b)| a + b).collect();
            v = project_lp_ball(&moved, config.xi, config.norm);
        }
        iterations += 1;
        let mut fooled = 0;
        for (x, &orig) in points.iter().zip(&original) {
            let shifted: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + b).collect();
            if clf.classify(&shifted)? != orig {
                fooled += 1;
            }
        }
        rate = fooled as f64 / points.len() as f64;
    }
    Ok(UniversalPerturbation {
        v,
        fooling_rate: rate,
        iterations,
    })
}
