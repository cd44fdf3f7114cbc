//! Gaussian beliefs over linear-model weights and their success predictives.
//!
//! The belief over weights is a diagonal Gaussian: independent coordinates
//! w_j ~ N(m_j, 1/q_j), stored as mean m and precision q. The margin a = w'x
//! of an alternative x is then one-dimensional Gaussian with
//!
//! ```text
//! mu_a = m'x,    var_a = sum_j x_j^2 / q_j
//! ```
//!
//! and the success probability marginalized over the belief is
//!
//! ```text
//! probit:    Phi(mu_a / sqrt(1 + var_a))                          (exact)
//! logistic:  sigma(kappa(var_a) mu_a),  kappa(s2) = (1 + pi s2 / 8)^(-1/2)
//! ```
//!
//! The probit form is exact; the logistic form is the usual probit-surrogate
//! approximation, accurate to a few parts in a thousand over moderate
//! moments. The complementary-log links have no closed-form predictive and
//! are rejected here, although their posterior updates are supported.
//!
//! Beliefs are plain values: updates elsewhere in the crate return new
//! states rather than mutating in place.

use crate::error::{ensure_finite, Error, Result};
use crate::links::{sigma, Link};
use serde::{Deserialize, Serialize};

/// Diagonal Gaussian over weights; coordinate j has mean `mean[j]` and
/// variance `1/precision[j]`.
///
/// Serializes as `{"mean": [...], "precision": [...]}`; deserialization
/// re-validates the invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BeliefWire", into = "BeliefWire")]
pub struct GaussianBelief {
    mean: Vec<f64>,
    precision: Vec<f64>,
}

#[derive(Serialize, Deserialize, Clone)]
struct BeliefWire {
    mean: Vec<f64>,
    precision: Vec<f64>,
}

impl TryFrom<BeliefWire> for GaussianBelief {
    type Error = Error;
    fn try_from(wire: BeliefWire) -> Result<Self> {
        GaussianBelief::new(wire.mean, wire.precision)
    }
}

impl From<GaussianBelief> for BeliefWire {
    fn from(belief: GaussianBelief) -> Self {
        BeliefWire {
            mean: belief.mean,
            precision: belief.precision,
        }
    }
}

impl GaussianBelief {
    /// Builds a belief, validating finite means and strictly positive,
    /// finite precisions of matching length.
    pub fn new(mean: Vec<f64>, precision: Vec<f64>) -> Result<Self> {
        if mean.len() != precision.len() {
            return Err(Error::DimMismatch {
                context: "belief mean vs precision",
                expected: mean.len(),
                got: precision.len(),
            });
        }
        if mean.is_empty() {
            return Err(Error::Config("belief must have at least one weight".into()));
        }
        for &m in &mean {
            ensure_finite(m, "belief mean")?;
        }
        for (index, &value) in precision.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositivePrecision { index, value });
            }
        }
        Ok(Self { mean, precision })
    }

    /// Zero-mean prior with uniform precision lambda on d weights.
    pub fn uniform_prior(d: usize, lambda: f64) -> Result<Self> {
        Self::new(vec![0.0; d], vec![lambda; d])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn precision(&self) -> &[f64] {
        &self.precision
    }
}

/// Feature vector of a single measurable alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Alternative {
    x: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Alternative {
    type Error = Error;
    fn try_from(x: Vec<f64>) -> Result<Self> {
        Alternative::new(x)
    }
}

impl From<Alternative> for Vec<f64> {
    fn from(alt: Alternative) -> Vec<f64> {
        alt.x
    }
}

impl Alternative {
    /// Builds a feature vector; every entry must be finite.
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Config(
                "alternative must have at least one feature".into(),
            ));
        }
        for &v in &x {
            ensure_finite(v, "alternative feature")?;
        }
        Ok(Self { x })
    }

    pub fn features(&self) -> &[f64] {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Euclidean norm of the feature vector.
    pub fn norm(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Finite menu of alternatives sharing one feature dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Alternative>", into = "Vec<Alternative>")]
pub struct AlternativeSet {
    alternatives: Vec<Alternative>,
}

impl TryFrom<Vec<Alternative>> for AlternativeSet {
    type Error = Error;
    fn try_from(alternatives: Vec<Alternative>) -> Result<Self> {
        AlternativeSet::new(alternatives)
    }
}

impl From<AlternativeSet> for Vec<Alternative> {
    fn from(set: AlternativeSet) -> Vec<Alternative> {
        set.alternatives
    }
}

impl AlternativeSet {
    /// Builds a nonempty set with uniform dimension.
    pub fn new(alternatives: Vec<Alternative>) -> Result<Self> {
        let first_dim = alternatives
            .first()
            .ok_or(Error::EmptyAlternativeSet)?
            .dim();
        for alt in &alternatives {
            if alt.dim() != first_dim {
                return Err(Error::DimMismatch {
                    context: "alternative set",
                    expected: first_dim,
                    got: alt.dim(),
                });
            }
        }
        Ok(Self { alternatives })
    }

    pub fn len(&self) -> usize {
        self.alternatives.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.alternatives[0].dim()
    }

    pub fn get(&self, index: usize) -> &Alternative {
        &self.alternatives[index]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Alternative> {
        self.alternatives.iter()
    }

    pub fn alternatives(&self) -> &[Alternative] {
        &self.alternatives
    }

    /// Verifies the unit-norm feature condition some analyses assume.
    /// Off by default; callers opt in where the guarantee matters.
    pub fn check_unit_norms(&self) -> Result<()> {
        for (i, alt) in self.alternatives.iter().enumerate() {
            let norm = alt.norm();
            if norm > 1.0 + 1e-12 {
                return Err(Error::Config(format!(
                    "alternative {i} has feature norm {norm:.6} > 1"
                )));
            }
        }
        Ok(())
    }
}

/// Mean and variance of the latent margin a = w'x under a belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentMoments {
    pub mu_a: f64,
    pub var_a: f64,
}

/// Marginal Gaussian moments of the margin of x.
pub fn marginal_moments(belief: &GaussianBelief, x: &Alternative) -> Result<LatentMoments> {
    if belief.dim() != x.dim() {
        return Err(Error::DimMismatch {
            context: "marginal_moments",
            expected: belief.dim(),
            got: x.dim(),
        });
    }
    let mut mu_a = 0.0;
    let mut var_a = 0.0;
    for j in 0..belief.dim() {
        let xj = x.features()[j];
        mu_a += belief.mean()[j] * xj;
        var_a += xj * xj / belief.precision()[j];
    }
    Ok(LatentMoments { mu_a, var_a })
}

/// Success probability of x marginalized over the belief.
///
/// # Errors
/// Unsupported-link error for cloglog and loglog, which have no closed-form
/// Gaussian predictive.
pub fn predict_success(belief: &GaussianBelief, x: &Alternative, link: Link) -> Result<f64> {
    let LatentMoments { mu_a, var_a } = marginal_moments(belief, x)?;
    match link {
        Link::Probit => sigma(Link::Probit, mu_a / (1.0 + var_a).sqrt()),
        Link::Logistic => {
            let kappa = (1.0 + std::f64::consts::PI * var_a / 8.0).sqrt().recip();
            sigma(Link::Logistic, kappa * mu_a)
        }
        other => Err(Error::UnsupportedLink {
            operation: "predict_success",
            link: other,
        }),
    }
}

/// Index of the alternative with the highest predictive success probability;
/// ties break to the lowest index so replications stay reproducible.
pub fn implementation_decision(
    belief: &GaussianBelief,
    alts: &AlternativeSet,
    link: Link,
) -> Result<usize> {
    let mut best_index = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, alt) in alts.iter().enumerate() {
        let p = predict_success(belief, alt, link)?;
        if p > best_value {
            best_value = p;
            best_index = i;
        }
    }
    Ok(best_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn alt(x: &[f64]) -> Alternative {
        Alternative::new(x.to_vec()).unwrap()
    }

    #[test]
    fn moments_follow_from_direct_arithmetic() {
        let belief = GaussianBelief::new(vec![1.0, 2.0], vec![4.0, 1.0]).unwrap();
        let m = marginal_moments(&belief, &alt(&[0.5, 0.5])).unwrap();
        assert_eq!(m.mu_a, 1.5);
        assert_eq!(m.var_a, 0.3125);

        let z = marginal_moments(&belief, &alt(&[0.0, 0.0])).unwrap();
        assert_eq!((z.mu_a, z.var_a), (0.0, 0.0));

        let unit = GaussianBelief::new(vec![0.0], vec![1.0]).unwrap();
        let u = marginal_moments(&unit, &alt(&[1.0])).unwrap();
        assert_eq!((u.mu_a, u.var_a), (0.0, 1.0));
    }

    #[test]
    fn probit_predictive_is_half_at_zero_mean() {
        let belief = GaussianBelief::new(vec![0.0, 0.0], vec![0.2, 1.3]).unwrap();
        let p = predict_success(&belief, &alt(&[1.7, -0.4]), Link::Probit).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn logistic_predictive_collapses_to_sigma_at_zero_variance() {
        let belief = GaussianBelief::new(vec![2.0], vec![1e300]).unwrap();
        let p = predict_success(&belief, &alt(&[1.0]), Link::Logistic).unwrap();
        assert_relative_eq!(p, 0.8807970779778824, max_relative = 1e-12);
    }

    #[test]
    fn probit_predictive_matches_posterior_integral_reference() {
        // Moments of the unit prior tilted by one success; the predictive of
        // the same arm is then Phi(mu / sqrt(1 + var)).
        let belief =
            GaussianBelief::new(vec![0.5641895835477563], vec![1.0 / 0.6816901138162093]).unwrap();
        let p = predict_success(&belief, &alt(&[1.0]), Link::Probit).unwrap();
        assert_relative_eq!(p, 0.6682416242080791, max_relative = 1e-12);
    }

    #[test]
    fn logistic_predictive_matches_frozen_surrogate_values() {
        let belief = GaussianBelief::new(vec![1.0], vec![0.5]).unwrap();
        let p = predict_success(&belief, &alt(&[1.0]), Link::Logistic).unwrap();
        assert_relative_eq!(p, 0.6788294711023907, max_relative = 1e-12);
        // quadrature truth is 0.6750567; the surrogate stays within 0.02
        assert_abs_diff_eq!(p, 0.6750567023375654, epsilon = 0.02);

        let belief2 = GaussianBelief::new(vec![-2.0], vec![2.0]).unwrap();
        let p2 = predict_success(&belief2, &alt(&[1.0]), Link::Logistic).unwrap();
        assert_relative_eq!(p2, 0.13841405653792774, max_relative = 1e-12);
        assert_abs_diff_eq!(p2, 0.1383468014942232, epsilon = 0.02);
    }

    #[test]
    fn predictive_rejects_links_without_closed_form() {
        let belief = GaussianBelief::new(vec![0.0], vec![1.0]).unwrap();
        for link in [Link::Cloglog, Link::Loglog] {
            let err = predict_success(&belief, &alt(&[1.0]), link).unwrap_err();
            assert!(matches!(err, Error::UnsupportedLink { .. }));
        }
    }

    #[test]
    fn predictive_is_monotone_in_the_latent_mean() {
        for link in [Link::Logistic, Link::Probit] {
            let mut prev = 0.0;
            let mut mu = -3.0;
            while mu <= 3.0 {
                let belief = GaussianBelief::new(vec![mu], vec![0.7]).unwrap();
                let p = predict_success(&belief, &alt(&[1.0]), link).unwrap();
                assert!(p > prev);
                prev = p;
                mu += 0.1;
            }
        }
    }

    #[test]
    fn decision_picks_the_highest_predictive_with_low_index_ties() {
        let sharp = GaussianBelief::new(vec![1.0], vec![100.0]).unwrap();
        let alts = AlternativeSet::new(vec![alt(&[1.0]), alt(&[-1.0]), alt(&[0.5])]).unwrap();
        assert_eq!(
            implementation_decision(&sharp, &alts, Link::Logistic).unwrap(),
            0
        );

        let symmetric = GaussianBelief::new(vec![0.0], vec![1.0]).unwrap();
        let pair = AlternativeSet::new(vec![alt(&[1.0]), alt(&[-1.0])]).unwrap();
        assert_eq!(
            implementation_decision(&symmetric, &pair, Link::Probit).unwrap(),
            0
        );

        let posterior = GaussianBelief::new(vec![0.40106], vec![1.24021]).unwrap();
        let trio = AlternativeSet::new(vec![alt(&[1.0]), alt(&[0.0]), alt(&[-1.0])]).unwrap();
        assert_eq!(
            implementation_decision(&posterior, &trio, Link::Logistic).unwrap(),
            0
        );
    }

    #[test]
    fn belief_serde_roundtrips_and_validates() {
        let belief = GaussianBelief::new(vec![0.25, -1.0], vec![2.0, 0.5]).unwrap();
        let json = serde_json::to_string(&belief).unwrap();
        assert!(json.contains("\"mean\""));
        assert!(json.contains("\"precision\""));
        let back: GaussianBelief = serde_json::from_str(&json).unwrap();
        assert_eq!(back, belief);

        let bad: std::result::Result<GaussianBelief, _> =
            serde_json::from_str(r#"{"mean":[0.0],"precision":[0.0]}"#);
        assert!(bad.is_err());
        let mismatched: std::result::Result<GaussianBelief, _> =
            serde_json::from_str(r#"{"mean":[0.0,1.0],"precision":[1.0]}"#);
        assert!(mismatched.is_err());
    }

    #[test]
    fn constructors_enforce_invariants() {
        assert!(GaussianBelief::new(vec![0.0], vec![-1.0]).is_err());
        assert!(GaussianBelief::new(vec![0.0], vec![f64::INFINITY]).is_err());
        assert!(GaussianBelief::new(vec![f64::NAN], vec![1.0]).is_err());
        assert!(Alternative::new(vec![1.0, f64::NAN]).is_err());
        assert!(AlternativeSet::new(vec![]).is_err());
        assert!(AlternativeSet::new(vec![alt(&[1.0]), alt(&[1.0, 2.0])]).is_err());

        let prior = GaussianBelief::uniform_prior(3, 2.0).unwrap();
        assert_eq!(prior.mean(), &[0.0, 0.0, 0.0]);
        assert_eq!(prior.precision(), &[2.0, 2.0, 2.0]);
    }

    #[test]
    fn unit_norm_check_is_opt_in() {
        let ok = AlternativeSet::new(vec![alt(&[0.6, 0.8])]).unwrap();
        assert!(ok.check_unit_norms().is_ok());
        let too_big = AlternativeSet::new(vec![alt(&[3.0, 0.0])]).unwrap();
        assert!(too_big.check_unit_norms().is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let belief = GaussianBelief::new(vec![0.0], vec![1.0]).unwrap();
        let err = marginal_moments(&belief, &alt(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, Error::DimMismatch { .. }));
    }
}
