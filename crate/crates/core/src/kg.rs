//! Knowledge-gradient scoring and selection.
//!
//! The value of a belief state s is the best predictive success probability
//! it offers, V(s) = max_x p(+1 | x, s). Measuring an alternative x yields a
//! binary outcome, so the one-step look-ahead value of x averages the two
//! hypothetical posteriors under the current predictive:
//!
//! ```text
//! nu_tilde_x = p_+ max_x' p(+1 | x', s_+)  +  (1 - p_+) max_x' p(+1 | x', s_-)
//! kg_x       = nu_tilde_x - V(s)
//! ```
//!
//! where p_+ = p(+1 | x, s) and s_+/s_- are the posteriors after observing
//! (x, +1)/(x, -1) with the configured updater. Exact Bayes transitions make
//! nu_tilde a martingale in the outcome, so kg_x >= 0; the Laplace and
//! moment-matching transitions keep that up to small approximation slack.
//!
//! Offline selection takes argmax kg with ties broken uniformly at random
//! within tie_epsilon. Online selection trades exploitation against
//! exploration with a planning horizon tau:
//!
//! ```text
//! argmax_x  p(+1 | x, s) + tau kg_x
//! ```
//!
//! Contextual problems score a decision a under context c by treating the
//! concatenation 1 || phi_c || psi_a as the alternative; the look-ahead's
//! inner max ranges over the same constructed set, the only decisions
//! reachable this round.

use crate::adf::adf_step;
use crate::belief::{predict_success, Alternative, AlternativeSet, GaussianBelief};
use crate::error::{Error, Result};
use crate::laplace::{laplace_step, BisectionConfig, Observation};
use crate::links::{Label, Link};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Posterior update rule applied after each observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Updater {
    Laplace,
    Adf,
}

impl fmt::Display for Updater {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Updater::Laplace => "laplace",
            Updater::Adf => "adf",
        })
    }
}

pub(crate) fn default_tie_epsilon() -> f64 {
    1e-9
}

/// Policy configuration shared by the scoring and selection operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KgConfig {
    pub link: Link,
    pub updater: Updater,
    /// Scores within this distance of the maximum count as tied.
    #[serde(default = "default_tie_epsilon")]
    pub tie_epsilon: f64,
    /// Online planning horizon; weighs kg against immediate success.
    #[serde(default)]
    pub tau: f64,
    #[serde(default)]
    pub bisection: BisectionConfig,
}

impl KgConfig {
    /// Config with the default tie tolerance and bisection settings.
    pub fn new(link: Link, updater: Updater, tau: f64) -> Self {
        Self {
            link,
            updater,
            tie_epsilon: default_tie_epsilon(),
            tau,
            bisection: BisectionConfig::default(),
        }
    }

    /// Checks the link/updater pairing and numeric fields.
    ///
    /// Moment matching is probit-only, and the logistic link has no
    /// moment-matching form, so logistic demands the Laplace updater.
    pub fn validate(&self) -> Result<()> {
        if self.updater == Updater::Adf && self.link != Link::Probit {
            return Err(Error::Config(format!(
                "the adf updater requires the probit link, got {}",
                self.link
            )));
        }
        if !(self.tie_epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "tie_epsilon must be nonnegative, got {}",
                self.tie_epsilon
            )));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!(
                "tau must be a nonnegative finite number, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Knowledge-gradient scores for one belief state over an alternative set.
#[derive(Debug, Clone, PartialEq)]
pub struct KgScores {
    /// One-step look-ahead values, one per alternative.
    pub nu_tilde: Vec<f64>,
    /// Current state value V(s) = max_x p(+1 | x, s).
    pub baseline_value: f64,
    /// nu_tilde - baseline_value, elementwise.
    pub kg: Vec<f64>,
}

/// Context/action feature pair for contextual selection; the model sees the
/// concatenation 1 || phi_c || psi_a, so the belief dimension must equal
/// 1 + |phi_c| + |psi_a|.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextActionFeatures {
    pub phi_c: Vec<f64>,
    pub psi_a: Vec<f64>,
}

impl ContextActionFeatures {
    pub fn dim(&self) -> usize {
        1 + self.phi_c.len() + self.psi_a.len()
    }

    /// Builds the concatenated feature vector 1 || phi_c || psi_a.
    pub fn to_alternative(&self) -> Result<Alternative> {
        let mut x = Vec::with_capacity(self.dim());
        x.push(1.0);
        x.extend_from_slice(&self.phi_c);
        x.extend_from_slice(&self.psi_a);
        Alternative::new(x)
    }
}

/// Applies the configured one-observation posterior update.
pub fn transition(
    belief: &GaussianBelief,
    x: &Alternative,
    y: Label,
    cfg: &KgConfig,
) -> Result<GaussianBelief> {
    let obs = Observation { x: x.clone(), y };
    match cfg.updater {
        Updater::Laplace => laplace_step(belief, &obs, cfg.link, &cfg.bisection),
        Updater::Adf => adf_step(belief, &obs, cfg.link),
    }
}

fn max_predict(belief: &GaussianBelief, alts: &AlternativeSet, link: Link) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for alt in alts.iter() {
        best = best.max(predict_success(belief, alt, link)?);
    }
    Ok(best)
}

/// Scores every alternative by its knowledge gradient.
///
/// Runs 2M posterior updates and O(M^2) predictive evaluations; this
/// quadratic pass is the scaling hotspot of the whole crate and is kept
/// deliberate (menus of a few hundred alternatives stay cheap).
///
/// An identity transition (for example a zero feature vector) is detected by
/// state equality and scored as exactly zero, bypassing the blend that would
/// otherwise round at the last bit.
pub fn kg_scores(
    belief: &GaussianBelief,
    alts: &AlternativeSet,
    cfg: &KgConfig,
) -> Result<KgScores> {
    cfg.validate()?;
    let baseline_value = max_predict(belief, alts, cfg.link)?;
    let mut nu_tilde = Vec::with_capacity(alts.len());
    let mut kg = Vec::with_capacity(alts.len());
    for x in alts.iter() {
        let p_plus = predict_success(belief, x, cfg.link)?;
        let s_plus = transition(belief, x, Label::Success, cfg)?;
        let s_minus = transition(belief, x, Label::Failure, cfg)?;
        let nu = if s_plus == *belief && s_minus == *belief {
            baseline_value
        } else {
            let best_plus = max_predict(&s_plus, alts, cfg.link)?;
            let best_minus = max_predict(&s_minus, alts, cfg.link)?;
            p_plus * best_plus + (1.0 - p_plus) * best_minus
        };
        nu_tilde.push(nu);
        kg.push(nu - baseline_value);
    }
    Ok(KgScores {
        nu_tilde,
        baseline_value,
        kg,
    })
}

/// Uniform draw among the indices whose value sits within epsilon of the max.
fn argmax_with_ties(values: &[f64], epsilon: f64, rng: &mut impl Rng) -> usize {
    assert!(!values.is_empty(), "selection over empty score vector");
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= max - epsilon)
        .map(|(i, _)| i)
        .collect();
    tied[rng.gen_range(0..tied.len())]
}

/// Picks the alternative with the highest kg; ties within tie_epsilon break
/// uniformly at random from the supplied rng.
pub fn select_offline(scores: &KgScores, cfg: &KgConfig, rng: &mut impl Rng) -> usize {
    argmax_with_ties(&scores.kg, cfg.tie_epsilon, rng)
}

/// Picks argmax of p(+1 | x, s) + tau * kg_x with the same tie handling.
pub fn select_online(
    belief: &GaussianBelief,
    alts: &AlternativeSet,
    cfg: &KgConfig,
    rng: &mut impl Rng,
) -> Result<usize> {
    let scores = kg_scores(belief, alts, cfg)?;
    let mut combined = Vec::with_capacity(alts.len());
    for (i, x) in alts.iter().enumerate() {
        combined.push(predict_success(belief, x, cfg.link)? + cfg.tau * scores.kg[i]);
    }
    Ok(argmax_with_ties(&combined, cfg.tie_epsilon, rng))
}

/// Online selection over actions under a fixed context.
///
/// Each action a becomes the alternative 1 || phi_c || psi_a; the look-ahead
/// considers exactly this constructed menu.
pub fn contextual_select(
    belief: &GaussianBelief,
    phi_c: &[f64],
    actions: &[Vec<f64>],
    cfg: &KgConfig,
    rng: &mut impl Rng,
) -> Result<usize> {
    if actions.is_empty() {
        return Err(Error::EmptyAlternativeSet);
    }
    let expected = 1 + phi_c.len() + actions[0].len();
    if belief.dim() != expected {
        return Err(Error::DimMismatch {
            context: "contextual features",
            expected: belief.dim(),
            got: expected,
        });
    }
    let mut alternatives = Vec::with_capacity(actions.len());
    for psi_a in actions {
        let features = ContextActionFeatures {
            phi_c: phi_c.to_vec(),
            psi_a: psi_a.clone(),
        };
        alternatives.push(features.to_alternative()?);
    }
    let alts = AlternativeSet::new(alternatives)?;
    select_online(belief, &alts, cfg, rng)
}
