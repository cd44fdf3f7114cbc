//! Competing measurement policies: random, most-uncertain, Thompson
//! sampling, expected improvement, and a latent-scale UCB.
//!
//! Baselines choose which alternative to measure next; the posterior update
//! afterwards is shared with the knowledge-gradient policy, so policies
//! differ only in the selection rule:
//!
//! ```text
//! random          uniform over the menu
//! most_uncertain  argmin |p(+1 | x, s) - 1/2|
//! thompson        sample w_j ~ N(m_j, 1/q_j), argmax w'x
//! ucb             argmax mu_a + alpha sqrt(var_a)
//! ei              argmax E[max(sigma(a) - p*, 0)], a ~ N(mu_a, var_a)
//! ```
//!
//! EI measures improvement on the success-probability scale against the
//! current best posterior predictive p* = max_x p(+1 | x, s), integrated by
//! Gauss-Hermite quadrature, and spends its first `ei_init` steps sampling
//! uniformly as a warm start. It ignores how the posterior itself would
//! move, which is exactly the myopia the knowledge gradient removes.

use crate::belief::{marginal_moments, predict_success, AlternativeSet, GaussianBelief};
use crate::error::{Error, Result};
use crate::links::{sigma, Link};
use crate::quad::GaussHermite;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Selection rule identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Random,
    MostUncertain,
    Thompson,
    Ei,
    Ucb,
}

impl BaselineKind {
    /// Stable name matching the serialized form.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::MostUncertain => "most_uncertain",
            Self::Thompson => "thompson",
            Self::Ei => "ei",
            Self::Ucb => "ucb",
        }
    }
}

fn default_alpha() -> f64 {
    1.0
}

fn default_ei_init() -> usize {
    5
}

fn default_quad_nodes() -> usize {
    32
}

/// A baseline policy with its tuning knobs; unused knobs are ignored by the
/// other kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselinePolicy {
    pub kind: BaselineKind,
    /// UCB exploration width.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Steps of uniform warm start before EI scoring begins.
    #[serde(default = "default_ei_init")]
    pub ei_init: usize,
    /// Gauss-Hermite node count for the EI integral.
    #[serde(default = "default_quad_nodes")]
    pub quad_nodes: usize,
}

impl BaselinePolicy {
    /// Policy of the given kind with default knobs.
    pub fn new(kind: BaselineKind) -> Self {
        Self {
            kind,
            alpha: default_alpha(),
            ei_init: default_ei_init(),
            quad_nodes: default_quad_nodes(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!(
                "ucb alpha must be nonnegative and finite, got {}",
                self.alpha
            )));
        }
        if self.quad_nodes < 2 {
            return Err(Error::Config(format!(
                "ei quadrature needs at least 2 nodes, got {}",
                self.quad_nodes
            )));
        }
        Ok(())
    }
}

fn argmax_lowest_index(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn ei_scores(
    policy: &BaselinePolicy,
    belief: &GaussianBelief,
    alts: &AlternativeSet,
    link: Link,
) -> Result<Vec<f64>> {
    let gh = GaussHermite::new(policy.quad_nodes)?;
    let mut p_star = f64::NEG_INFINITY;
    for alt in alts.iter() {
        p_star = p_star.max(predict_success(belief, alt, link)?);
    }
    let mut scores = Vec::with_capacity(alts.len());
    for alt in alts.iter() {
        let moments = marginal_moments(belief, alt)?;
        let scale = (2.0 * moments.var_a).sqrt();
        let mut total = 0.0;
        for (&t, &w) in gh.nodes().iter().zip(gh.weights()) {
            let a = moments.mu_a + scale * t;
            total += w * (sigma(link, a)? - p_star).max(0.0);
        }
        scores.push(total / std::f64::consts::PI.sqrt());
    }
    Ok(scores)
}

/// Chooses the next alternative under the given baseline.
///
/// `step` is the number of measurements already taken; EI uses it for its
/// warm start, the other kinds ignore it.
///
/// # Errors
/// Links without a closed-form predictive (cloglog, loglog) are rejected for
/// every kind, keeping baselines comparable to the predictive-based policies.
pub fn baseline_select(
    policy: &BaselinePolicy,
    belief: &GaussianBelief,
    alts: &AlternativeSet,
    link: Link,
    step: usize,
    rng: &mut impl Rng,
) -> Result<usize> {
    policy.validate()?;
    if !matches!(link, Link::Logistic | Link::Probit) {
        return Err(Error::UnsupportedLink {
            operation: "baseline_select",
            link,
        });
    }
    match policy.kind {
        BaselineKind::Random => Ok(rng.gen_range(0..alts.len())),
        BaselineKind::MostUncertain => {
            let mut distances = Vec::with_capacity(alts.len());
            for alt in alts.iter() {
                let p = predict_success(belief, alt, link)?;
                distances.push(-(p - 0.5).abs());
            }
            Ok(argmax_lowest_index(&distances))
        }
        BaselineKind::Thompson => {
            let draw: Vec<f64> = belief
                .mean()
                .iter()
                .zip(belief.precision())
                .map(|(&m, &q)| {
                    let z: f64 = rng.sample(StandardNormal);
                    m + z / q.sqrt()
                })
                .collect();
            let scores: Vec<f64> = alts
                .iter()
                .map(|alt| alt.features().iter().zip(&draw).map(|(x, w)| x * w).sum())
                .collect();
            Ok(argmax_lowest_index(&scores))
        }
        BaselineKind::Ucb => {
            let mut scores = Vec::with_capacity(alts.len());
            for alt in alts.iter() {
                let m = marginal_moments(belief, alt)?;
                scores.push(m.mu_a + policy.alpha * m.var_a.sqrt());
            }
            Ok(argmax_lowest_index(&scores))
        }
        BaselineKind::Ei => {
            if step < policy.ei_init {
                return Ok(rng.gen_range(0..alts.len()));
            }
            let scores = ei_scores(policy, belief, alts, link)?;
            Ok(argmax_lowest_index(&scores))
        }
    }
}
