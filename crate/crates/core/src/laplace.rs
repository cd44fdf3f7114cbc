//! Posterior update by Laplace approximation with a one-dimensional
//! fixed-point reduction.
//!
//! After observing (x, y) the log posterior over weights is
//!
//! ```text
//! Psi(w) = -1/2 sum_j q_j (w_j - m_j)^2 + log f(y w'x)
//! ```
//!
//! Its mode satisfies w_j = m_j + y p x_j / q_j with the scalar
//! p = (f'/f)(y w'x); substituting the first relation into the second
//! collapses the d-dimensional optimization to one equation in p:
//!
//! ```text
//! p = r(p S + b),    S = sum_j x_j^2 / q_j,    b = y m'x,    r = f'/f
//! ```
//!
//! r is positive and strictly decreasing, so g(p) = r(p S + b) - p is
//! strictly decreasing with g(0) >= 0 and g(r(b)) <= 0: bisection on
//! [0, r(b)] always holds a root. The updated precision adds the
//! observation's curvature at the mode:
//!
//! ```text
//! q_j' = q_j + h(y w'x) x_j^2,    h = -(log f)''
//! ```
//!
//! h >= 0 for every supported link, so information never decreases. No
//! previously observed data are consulted; the belief is the whole state.

use crate::belief::{Alternative, GaussianBelief};
use crate::error::{Error, Result};
use crate::links::{deriv_ratio, neg_curvature, Label, Link};
use serde::{Deserialize, Serialize};

/// Single binary observation on an alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: Alternative,
    pub y: Label,
}

/// Bisection control for the scalar fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionConfig {
    /// Tolerance on both bracket width and fixed-point residual.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BisectionConfig {
    /// 200 halvings shrink any f64 bracket below resolution, so the
    /// iteration cap never binds before the width test does.
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

fn validate(belief: &GaussianBelief, obs: &Observation, cfg: &BisectionConfig) -> Result<()> {
    if belief.dim() != obs.x.dim() {
        return Err(Error::DimMismatch {
            context: "laplace update",
            expected: belief.dim(),
            got: obs.x.dim(),
        });
    }
    if !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return Err(Error::Config(format!(
            "bisection config needs tol > 0 and max_iter >= 1, got tol={}, max_iter={}",
            cfg.tol, cfg.max_iter
        )));
    }
    Ok(())
}

/// Solves the scalar fixed point p = r(p S + b) by bisection on [0, r(b)].
///
/// The returned p satisfies |r(p S + b) - p| <= cfg.tol, or sits at the
/// f64 resolution limit of the bracket when the tolerance is finer than
/// the representable gap.
pub fn solve_p_star(
    belief: &GaussianBelief,
    obs: &Observation,
    link: Link,
    cfg: &BisectionConfig,
) -> Result<f64> {
    validate(belief, obs, cfg)?;
    let y = obs.y.signum();
    let mut b = 0.0;
    let mut s = 0.0;
    for j in 0..belief.dim() {
        let xj = obs.x.features()[j];
        b += belief.mean()[j] * xj;
        s += xj * xj / belief.precision()[j];
    }
    b *= y;

    let hi0 = deriv_ratio(link, b)?;
    if !hi0.is_finite() {
        return Err(Error::NonFinite {
            context: "bisection bracket endpoint",
            value: hi0,
        });
    }
    if hi0 == 0.0 {
        return Ok(0.0);
    }

    let mut lo = 0.0_f64;
    let mut hi = hi0;
    let mut last_residual = hi0;
    for _ in 0..cfg.max_iter {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            return Ok(mid);
        }
        let residual = deriv_ratio(link, mid * s + b)? - mid;
        last_residual = residual;
        if residual.abs() <= cfg.tol && (hi - lo) <= cfg.tol {
            return Ok(mid);
        }
        if residual > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence {
        max_iter: cfg.max_iter,
        residual: last_residual,
    })
}

/// One-observation posterior update; returns the new belief.
///
/// A zero feature vector short-circuits to the unchanged belief: the mode
/// reconstruction w_j = m_j + y p x_j / q_j leaves every coordinate at m_j
/// and the curvature term carries x_j^2 = 0.
pub fn laplace_step(
    belief: &GaussianBelief,
    obs: &Observation,
    link: Link,
    cfg: &BisectionConfig,
) -> Result<GaussianBelief> {
    validate(belief, obs, cfg)?;
    if obs.x.features().iter().all(|&v| v == 0.0) {
        return Ok(belief.clone());
    }
    let p_star = solve_p_star(belief, obs, link, cfg)?;
    let y = obs.y.signum();

    let mut new_mean = Vec::with_capacity(belief.dim());
    let mut f_hat = 0.0;
    for j in 0..belief.dim() {
        let xj = obs.x.features()[j];
        let mj = belief.mean()[j] + y * p_star * xj / belief.precision()[j];
        f_hat += mj * xj;
        new_mean.push(mj);
    }

    let h = neg_curvature(link, f_hat, obs.y)?;
    let new_precision = belief
        .precision()
        .iter()
        .zip(obs.x.features())
        .map(|(&qj, &xj)| qj + h * xj * xj)
        .collect();

    GaussianBelief::new(new_mean, new_precision)
}
