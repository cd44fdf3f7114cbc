//! Gauss-Hermite quadrature for Gaussian expectations.
//!
//! Nodes t_i and weights w_i satisfy the physicists' convention
//!
//! ```text
//! integral e^{-t^2} g(t) dt  ~=  sum_i w_i g(t_i)
//! ```
//!
//! exactly for polynomials of degree 2n - 1, and the weights sum to sqrt(pi).
//! An expectation under N(mu, s2) follows by the substitution a = mu + sqrt(2 s2) t:
//!
//! ```text
//! E[g(a)] ~= (1/sqrt(pi)) sum_i w_i g(mu + sqrt(2 s2) t_i)
//! ```
//!
//! Nodes are found by Newton iteration on the orthonormal Hermite recurrence;
//! each root seeds the next, symmetric pairs are filled together.

use crate::error::{Error, Result};

/// 1 / pi^(1/4); value of the zeroth orthonormal Hermite polynomial.
const PIM4: f64 = 0.7511255444649425;

/// Newton tolerance on node position.
const NODE_EPS: f64 = 3e-14;

const MAX_NEWTON: usize = 24;

/// Nodes and weights of an n-point Gauss-Hermite rule, nodes ascending.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds the n-point rule.
    ///
    /// # Errors
    /// Rejects n = 0 and n for which Newton iteration fails to settle
    /// (does not occur for practical n; guarded rather than asserted).
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config(
                "quadrature rule needs at least one node".into(),
            ));
        }
        // Roots are found largest-first; seeds reference earlier roots in
        // that order, so collect descending and mirror at the end.
        let mut desc = vec![0.0; n];
        let mut desc_w = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..(n + 1) / 2 {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * desc[0],
                3 => 1.91 * z - 0.91 * desc[1],
                _ => 2.0 * z - desc[i - 2],
            };
            let mut pp = 0.0;
            let mut converged = false;
            for _ in 0..MAX_NEWTON {
                let mut p1 = PIM4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = (j + 1) as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= NODE_EPS {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Convergence {
                    max_iter: MAX_NEWTON,
                    residual: f64::NAN,
                });
            }
            desc[i] = z;
            desc[n - 1 - i] = -z;
            let w = 2.0 / (pp * pp);
            desc_w[i] = w;
            desc_w[n - 1 - i] = w;
        }
        desc.reverse();
        desc_w.reverse();
        Ok(Self {
            nodes: desc,
            weights: desc_w,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Expectation of g under N(mu, var).
    pub fn expect(&self, mu: f64, var: f64, g: impl Fn(f64) -> f64) -> f64 {
        let scale = (2.0 * var).sqrt();
        let mut total = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            total += w * g(mu + scale * t);
        }
        total / std::f64::consts::PI.sqrt()
    }
}
