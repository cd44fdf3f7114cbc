//! Independent numerical oracles and self-check suites.
//!
//! Everything here recomputes quantities the library produces in closed
//! form, using only quadrature or generic optimization, so the two
//! codepaths share no formulas:
//!
//! ```text
//! tilted_moments_1d   mean/variance of f(yxw) N(w | m, 1/q) by quadrature
//! map_oracle          posterior mode by plain gradient ascent
//! exact_blend_gap     law-of-total-expectation residual for the exact
//!                     one-observation posterior (probit), by reducing
//!                     E[Phi(ya) Phi(b)] over a correlated Gaussian pair
//!                     to a single integral
//! adf_blend_gap       the same residual under the Gaussian-projected
//!                     update, measuring the approximation gap
//! ```
//!
//! The `check_*` functions sweep randomized states and report the worst
//! deviation against a pinned tolerance; `check_adf_moments` takes the
//! update as a parameter so a deliberately broken update is detectable.

use crate::adf::adf_step;
use crate::belief::{marginal_moments, predict_success, Alternative, GaussianBelief};
use crate::error::{Error, Result};
use crate::laplace::{laplace_step, solve_p_star, BisectionConfig, Observation};
use crate::links::{deriv_ratio, normal_cdf, normal_pdf, sigma, Label, Link};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

const NEWTON_EPS: f64 = 1e-15;
const MAX_NEWTON: usize = 100;

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Config(
            "quadrature rule needs at least one node".to_string(),
        ));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = (n + 1) / 2;
    for i in 0..half {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..MAX_NEWTON {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= NEWTON_EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence {
                max_iter: MAX_NEWTON,
                residual: z,
            });
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Ok((nodes, weights))
}

/// Integrates `g` over [a, b] with an n-node Gauss-Legendre rule.
pub fn integrate(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(n)?;
    let mid = 0.5 * (a + b);
    let scale = 0.5 * (b - a);
    let mut total = 0.0;
    for (&t, &w) in nodes.iter().zip(&weights) {
        total += w * g(mid + scale * t);
    }
    Ok(total * scale)
}

/// Quadrature moments of the one-observation tilted density
/// f(y x w) N(w | m, 1/q) on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltedMoments {
    pub normalizer: f64,
    pub mean: f64,
    pub variance: f64,
}

const TILT_NODES: usize = 200;
const TILT_SPAN: f64 = 12.0;

/// Computes tilted moments for a scalar weight by direct integration.
pub fn tilted_moments_1d(m: f64, q: f64, x: f64, y: Label, link: Link) -> Result<TiltedMoments> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::NonPositivePrecision { index: 0, value: q });
    }
    let sd = (1.0 / q).sqrt();
    let dens = |w: f64| {
        let tilt = sigma(link, y.signum() * x * w).unwrap_or(0.0);
        tilt * (-0.5 * q * (w - m) * (w - m)).exp()
    };
    let lo = m - TILT_SPAN * sd;
    let hi = m + TILT_SPAN * sd;
    let z = integrate(&dens, lo, hi, TILT_NODES)?;
    if !(z > 0.0) {
        return Err(Error::NonFinite {
            context: "tilted normalizer",
            value: z,
        });
    }
    let mean = integrate(|w| w * dens(w), lo, hi, TILT_NODES)? / z;
    let second = integrate(|w| w * w * dens(w), lo, hi, TILT_NODES)? / z;
    Ok(TiltedMoments {
        normalizer: z * q.sqrt() / (2.0 * std::f64::consts::PI).sqrt(),
        mean,
        variance: second - mean * mean,
    })
}

const MAP_TOL: f64 = 1e-10;
const MAP_MAX_ITER: usize = 2_000_000;

/// Posterior mode by fixed-step gradient ascent on the one-observation
/// objective log f(y w'x) - sum_j q_j (w_j - m_j)^2 / 2.
///
/// The step is 1/L with L bounding the Hessian; only links with a
/// bounded likelihood curvature are supported.
pub fn map_oracle(belief: &GaussianBelief, obs: &Observation, link: Link) -> Result<Vec<f64>> {
    let h_max = match link {
        Link::Logistic => 0.25,
        Link::Probit => 1.0,
        other => {
            return Err(Error::UnsupportedLink {
                operation: "map_oracle",
                link: other,
            })
        }
    };
    let m = belief.mean();
    let q = belief.precision();
    let x = obs.x.features();
    if x.len() != m.len() {
        return Err(Error::DimMismatch {
            context: "map oracle",
            expected: m.len(),
            got: x.len(),
        });
    }
    let y = obs.y.signum();
    let q_max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let x_sq: f64 = x.iter().map(|v| v * v).sum();
    let step = 1.0 / (q_max + h_max * x_sq);
    let mut w = m.to_vec();
    for _ in 0..MAP_MAX_ITER {
        let t = y * w.iter().zip(x).map(|(wj, xj)| wj * xj).sum::<f64>();
        let r = deriv_ratio(link, t)?;
        let mut worst = 0.0f64;
        for j in 0..w.len() {
            let g = y * x[j] * r - q[j] * (w[j] - m[j]);
            worst = worst.max(g.abs());
            w[j] += step * g;
        }
        if worst <= MAP_TOL {
            return Ok(w);
        }
    }
    Err(Error::Convergence {
        max_iter: MAP_MAX_ITER,
        residual: f64::NAN,
    })
}

const BLEND_NODES: usize = 240;
const BLEND_SPAN: f64 = 12.0;

fn latent_pair(
    belief: &GaussianBelief,
    x: &Alternative,
    x_prime: &Alternative,
) -> Result<(f64, f64, f64, f64, f64)> {
    let a = marginal_moments(belief, x)?;
    let b = marginal_moments(belief, x_prime)?;
    let cov: f64 = x
        .features()
        .iter()
        .zip(x_prime.features())
        .zip(belief.precision())
        .map(|((xi, xpi), qi)| xi * xpi / qi)
        .sum();
    Ok((a.mu_a, a.var_a, b.mu_a, b.var_a, cov))
}

/// Law-of-total-expectation residual for the exact probit posterior:
/// sum_y p(y) p(+1 | x', exact posterior after y) - p(+1 | x', prior),
/// computed by quadrature. Analytically zero; the return measures only
/// quadrature error.
pub fn exact_blend_gap(
    belief: &GaussianBelief,
    x: &Alternative,
    x_prime: &Alternative,
) -> Result<f64> {
    let (mu_a, var_a, mu_b, var_b, cov) = latent_pair(belief, x, x_prime)?;
    let sigma_a = var_a.sqrt();
    let sigma_b = var_b.sqrt();
    let rho = if sigma_a > 0.0 && sigma_b > 0.0 {
        (cov / (sigma_a * sigma_b)).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let resid_sd = (1.0 + var_b * (1.0 - rho * rho)).sqrt();
    let mut blend = 0.0;
    for y in [1.0, -1.0] {
        // E[Phi(y a) Phi(b)] with (a, b) jointly Gaussian reduces to a
        // single integral over the shared standardized component
        blend += integrate(
            |z| {
                normal_pdf(z)
                    * normal_cdf(y * (mu_a + sigma_a * z))
                    * normal_cdf((mu_b + sigma_b * rho * z) / resid_sd)
            },
            -BLEND_SPAN,
            BLEND_SPAN,
            BLEND_NODES,
        )?;
    }
    let current = normal_cdf(mu_b / (1.0 + var_b).sqrt());
    Ok(blend - current)
}

/// The same residual with the Gaussian-projected update in place of the
/// exact posterior; nonzero away from symmetric states.
pub fn adf_blend_gap(
    belief: &GaussianBelief,
    x: &Alternative,
    x_prime: &Alternative,
) -> Result<f64> {
    let p_plus = predict_success(belief, x, Link::Probit)?;
    let up = adf_step(
        belief,
        &Observation {
            x: x.clone(),
            y: Label::Success,
        },
        Link::Probit,
    )?;
    let down = adf_step(
        belief,
        &Observation {
            x: x.clone(),
            y: Label::Failure,
        },
        Link::Probit,
    )?;
    let blend = p_plus * predict_success(&up, x_prime, Link::Probit)?
        + (1.0 - p_plus) * predict_success(&down, x_prime, Link::Probit)?;
    let current = predict_success(belief, x_prime, Link::Probit)?;
    Ok(blend - current)
}

/// Outcome of one randomized oracle sweep.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub cases: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckReport {
    fn new(name: &str, cases: usize, max_deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            cases,
            max_deviation,
            tolerance,
            pass: max_deviation <= tolerance,
        }
    }
}

fn random_scalar_state(rng: &mut impl Rng) -> (f64, f64, f64, Label) {
    let m = rng.gen_range(-3.0..3.0);
    let q = rng.gen_range(0.2..5.0);
    let x = rng.gen_range(-2.0..2.0);
    let y = if rng.gen_bool(0.5) {
        Label::Success
    } else {
        Label::Failure
    };
    (m, q, x, y)
}

fn random_belief(rng: &mut impl Rng, dim: usize) -> GaussianBelief {
    let m: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.3..4.0)).collect();
    GaussianBelief::new(m, q).expect("ranges are valid")
}

fn random_features(rng: &mut impl Rng, dim: usize) -> Alternative {
    let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
    Alternative::new(x).expect("ranges are valid")
}

/// Compares a one-observation update's scalar posterior moments against
/// the quadrature oracle on random states.
pub fn check_adf_moments(
    step: impl Fn(&GaussianBelief, &Observation) -> Result<GaussianBelief>,
    cases: usize,
    seed: u64,
) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let (m, q, x, y) = random_scalar_state(&mut rng);
        let belief = GaussianBelief::new(vec![m], vec![q])?;
        let obs = Observation {
            x: Alternative::new(vec![x])?,
            y,
        };
        let posterior = step(&belief, &obs)?;
        let oracle = tilted_moments_1d(m, q, x, y, Link::Probit)?;
        worst = worst.max((posterior.mean()[0] - oracle.mean).abs());
        worst = worst.max((1.0 / posterior.precision()[0] - oracle.variance).abs());
    }
    Ok(CheckReport::new(
        "moment matching vs quadrature",
        cases,
        worst,
        1e-8,
    ))
}

/// Compares the Laplace update's posterior mode against gradient ascent
/// on random one- and two-dimensional states, both supported links.
pub fn check_laplace_map(cases: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bisection = BisectionConfig::default();
    let mut worst = 0.0f64;
    for i in 0..cases {
        let dim = 1 + (i % 2);
        let link = if i % 4 < 2 {
            Link::Logistic
        } else {
            Link::Probit
        };
        let belief = random_belief(&mut rng, dim);
        let obs = Observation {
            x: random_features(&mut rng, dim),
            y: if rng.gen_bool(0.5) {
                Label::Success
            } else {
                Label::Failure
            },
        };
        let updated = laplace_step(&belief, &obs, link, &bisection)?;
        let oracle = map_oracle(&belief, &obs, link)?;
        for (a, b) in updated.mean().iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(CheckReport::new(
        "posterior mode vs gradient ascent",
        cases,
        worst,
        1e-5,
    ))
}

/// Verifies the fixed-point residual of the scalarized mode solve.
pub fn check_bisection_residuals(cases: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bisection = BisectionConfig::default();
    let mut worst = 0.0f64;
    for i in 0..cases {
        let dim = 1 + (i % 2);
        let link = match i % 4 {
            0 => Link::Logistic,
            1 => Link::Probit,
            2 => Link::Cloglog,
            _ => Link::Loglog,
        };
        let belief = random_belief(&mut rng, dim);
        let obs = Observation {
            x: random_features(&mut rng, dim),
            y: if rng.gen_bool(0.5) {
                Label::Success
            } else {
                Label::Failure
            },
        };
        let p_star = solve_p_star(&belief, &obs, link, &bisection)?;
        let y = obs.y.signum();
        let b: f64 = belief
            .mean()
            .iter()
            .zip(obs.x.features())
            .map(|(mj, xj)| mj * xj)
            .sum::<f64>()
            * y;
        let s: f64 = obs
            .x
            .features()
            .iter()
            .zip(belief.precision())
            .map(|(xj, qj)| xj * xj / qj)
            .sum();
        let residual = (deriv_ratio(link, p_star * s + b)? - p_star).abs();
        worst = worst.max(residual);
    }
    Ok(CheckReport::new(
        "bisection fixed-point residual",
        cases,
        worst,
        1e-10,
    ))
}

/// Verifies the exact-posterior martingale identity by quadrature on
/// random probit states.
pub fn check_exact_martingale(cases: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..cases {
        let dim = 1 + (i % 2);
        let belief = random_belief(&mut rng, dim);
        let x = random_features(&mut rng, dim);
        let x_prime = random_features(&mut rng, dim);
        worst = worst.max(exact_blend_gap(&belief, &x, &x_prime)?.abs());
    }
    Ok(CheckReport::new(
        "exact-posterior martingale",
        cases,
        worst,
        1e-6,
    ))
}

/// Measures how far the Gaussian-projected update drifts from the
/// martingale identity; this gap is a property of the approximation, so
/// the tolerance documents its expected size (up to a few times 1e-2 on
/// the sampled state envelope) rather than asserting exactness.
pub fn check_adf_martingale_gap(cases: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..cases {
        let dim = 1 + (i % 2);
        let belief = random_belief(&mut rng, dim);
        let x = random_features(&mut rng, dim);
        let x_prime = random_features(&mut rng, dim);
        worst = worst.max(adf_blend_gap(&belief, &x, &x_prime)?.abs());
    }
    Ok(CheckReport::new(
        "projected-update martingale gap",
        cases,
        worst,
        2.5e-2,
    ))
}

/// Compares the closed-form probit predictive against direct quadrature
/// on a mean/variance grid.
pub fn check_probit_predictive(grid: usize) -> Result<CheckReport> {
    predictive_grid("probit predictive vs quadrature", Link::Probit, grid, 1e-10)
}

/// Compares the variance-corrected logistic surrogate against direct
/// quadrature on the same grid.
pub fn check_logistic_predictive(grid: usize) -> Result<CheckReport> {
    predictive_grid(
        "logistic predictive vs quadrature",
        Link::Logistic,
        grid,
        0.02,
    )
}

fn predictive_grid(name: &str, link: Link, grid: usize, tolerance: f64) -> Result<CheckReport> {
    let mut worst = 0.0f64;
    for i in 0..grid {
        for j in 0..grid {
            let mu = -3.0 + 6.0 * (i as f64 + 0.5) / grid as f64;
            let var = 4.0 * (j as f64 + 0.5) / grid as f64;
            let belief = GaussianBelief::new(vec![mu], vec![1.0 / var])?;
            let alt = Alternative::new(vec![1.0])?;
            let closed = predict_success(&belief, &alt, link)?;
            let sd = var.sqrt();
            let numeric = integrate(
                |a| sigma(link, a).unwrap_or(0.0) * normal_pdf((a - mu) / sd) / sd,
                mu - 12.0 * sd,
                mu + 12.0 * sd,
                TILT_NODES,
            )?;
            worst = worst.max((closed - numeric).abs());
        }
    }
    Ok(CheckReport::new(name, grid * grid, worst, tolerance))
}

/// Runs the full oracle suite at validation scale.
pub fn run_all_checks(seed: u64) -> Result<Vec<CheckReport>> {
    Ok(vec![
        check_adf_moments(|b, o| adf_step(b, o, Link::Probit), 500, seed ^ 0x01)?,
        check_laplace_map(200, seed ^ 0x02)?,
        check_bisection_residuals(200, seed ^ 0x03)?,
        check_exact_martingale(100, seed ^ 0x04)?,
        check_adf_martingale_gap(100, seed ^ 0x05)?,
        check_probit_predictive(50)?,
        check_logistic_predictive(50)?,
    ])
}
