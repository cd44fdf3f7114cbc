//! Probit posterior update by moment matching.
//!
//! The exact one-observation posterior is proportional to
//! Phi(y w'x) N(w | m, diag(1/q)). Its first and second moments have closed
//! forms through the normal ratio pair
//!
//! ```text
//! v(z) = phi(z)/Phi(z),    w(z) = v(z)(v(z) + z)
//! ```
//!
//! evaluated at z = y m'x / sigma_tilde with sigma_tilde^2 = 1 + sum_j x_j^2/q_j:
//!
//! ```text
//! m_j'       = m_j + y x_j v(z) / (q_j sigma_tilde)
//! sigma_j'^2 = (1/q_j) (1 - x_j^2 w(z) / (q_j sigma_tilde^2))
//! ```
//!
//! The matched diagonal moments are exact; the belief then drops the
//! off-diagonal correlations the tilt introduced. Storage stays in precision
//! form, so the variance line becomes q_j' = q_j / (1 - x_j^2 w / (q_j sigma_tilde^2)).
//! The shrink factor is strictly positive: w < 1 and
//! x_j^2 / (q_j sigma_tilde^2) < 1 by construction, so the guard on it is a
//! numerical safety net rather than a reachable branch.
//!
//! Only the probit link is supported; moment matching for the other links has
//! no closed form and is rejected.

use crate::belief::GaussianBelief;
use crate::error::{Error, Result};
use crate::laplace::Observation;
use crate::links::{mills_vw, Link};

/// Intermediate quantities of one moment-matching step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdfAux {
    pub v_val: f64,
    pub w_val: f64,
    pub sigma_tilde_sq: f64,
}

fn validate(
    belief: &GaussianBelief,
    obs: &Observation,
    link: Link,
    op: &'static str,
) -> Result<()> {
    if link != Link::Probit {
        return Err(Error::UnsupportedLink {
            operation: op,
            link,
        });
    }
    if belief.dim() != obs.x.dim() {
        return Err(Error::DimMismatch {
            context: "moment-matching update",
            expected: belief.dim(),
            got: obs.x.dim(),
        });
    }
    Ok(())
}

/// Computes (v, w, sigma_tilde^2) for one observation under the probit link.
pub fn adf_aux(belief: &GaussianBelief, obs: &Observation, link: Link) -> Result<AdfAux> {
    validate(belief, obs, link, "adf_aux")?;
    let y = obs.y.signum();
    let mut mu = 0.0;
    let mut sigma_tilde_sq = 1.0;
    for j in 0..belief.dim() {
        let xj = obs.x.features()[j];
        mu += belief.mean()[j] * xj;
        sigma_tilde_sq += xj * xj / belief.precision()[j];
    }
    let z = y * mu / sigma_tilde_sq.sqrt();
    let (v_val, w_val) = mills_vw(z);
    Ok(AdfAux {
        v_val,
        w_val,
        sigma_tilde_sq,
    })
}

/// One-observation moment-matched posterior; returns the new belief.
pub fn adf_step(belief: &GaussianBelief, obs: &Observation, link: Link) -> Result<GaussianBelief> {
    let aux = adf_aux(belief, obs, link)?;
    let y = obs.y.signum();
    let sigma_tilde = aux.sigma_tilde_sq.sqrt();

    let mut new_mean = Vec::with_capacity(belief.dim());
    let mut new_precision = Vec::with_capacity(belief.dim());
    for j in 0..belief.dim() {
        let xj = obs.x.features()[j];
        let qj = belief.precision()[j];
        new_mean.push(belief.mean()[j] + y * xj * aux.v_val / (qj * sigma_tilde));
        let factor = 1.0 - xj * xj * aux.w_val / (qj * aux.sigma_tilde_sq);
        if factor <= 0.0 {
            return Err(Error::VarianceFloor { index: j, factor });
        }
        new_precision.push(qj / factor);
    }
    GaussianBelief::new(new_mean, new_precision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::{predict_success, Alternative};
    use crate::links::Label;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn obs(x: &[f64], y: Label) -> Observation {
        Observation {
            x: Alternative::new(x.to_vec()).unwrap(),
            y,
        }
    }

    fn unit_prior() -> GaussianBelief {
        GaussianBelief::new(vec![0.0], vec![1.0]).unwrap()
    }

    #[test]
    fn aux_values_at_the_symmetric_unit_state() {
        let aux = adf_aux(&unit_prior(), &obs(&[1.0], Label::Success), Link::Probit).unwrap();
        assert_eq!(aux.sigma_tilde_sq, 2.0);
        assert_relative_eq!(aux.v_val, 0.7978845608028654, max_relative = 1e-14);
        assert_relative_eq!(aux.w_val, 0.6366197723675814, max_relative = 1e-14);
    }

    #[test]
    fn zero_feature_gives_unit_sigma_tilde_and_central_ratio() {
        let belief = GaussianBelief::new(vec![4.2, -1.0], vec![0.3, 2.0]).unwrap();
        for y in [Label::Success, Label::Failure] {
            let aux = adf_aux(&belief, &obs(&[0.0, 0.0], y), Link::Probit).unwrap();
            assert_eq!(aux.sigma_tilde_sq, 1.0);
            assert_relative_eq!(aux.v_val, 0.7978845608028654, max_relative = 1e-14);
        }
    }

    #[test]
    fn deep_failure_tail_ratio_is_pinned() {
        // z = -10/sqrt(2); w is large but still well below 1.
        let belief = GaussianBelief::new(vec![10.0], vec![1.0]).unwrap();
        let aux = adf_aux(&belief, &obs(&[1.0], Label::Failure), Link::Probit).unwrap();
        assert_relative_eq!(aux.w_val, 0.9820669298906405, max_relative = 1e-12);
        assert!(aux.w_val < 1.0);
    }

    #[test]
    fn moment_update_matches_tilted_posterior_reference() {
        let updated = adf_step(&unit_prior(), &obs(&[1.0], Label::Success), Link::Probit).unwrap();
        assert_relative_eq!(updated.mean()[0], 0.5641895835477563, max_relative = 1e-13);
        assert_relative_eq!(
            1.0 / updated.precision()[0],
            0.6816901138162093,
            max_relative = 1e-13
        );
    }

    #[test]
    fn untouched_coordinates_stay_bitwise_identical() {
        let belief = GaussianBelief::new(vec![0.0, 0.0], vec![1.0, 4.0]).unwrap();
        let updated = adf_step(&belief, &obs(&[1.0, 0.0], Label::Success), Link::Probit).unwrap();
        assert_relative_eq!(updated.mean()[0], 0.5641895835477563, max_relative = 1e-13);
        assert_relative_eq!(
            1.0 / updated.precision()[0],
            0.6816901138162093,
            max_relative = 1e-13
        );
        assert_eq!(updated.mean()[1], 0.0);
        assert_eq!(updated.precision()[1], 4.0);
    }

    #[test]
    fn zero_feature_vector_is_an_identity_update() {
        let belief = GaussianBelief::new(vec![1.0, -2.0], vec![0.5, 8.0]).unwrap();
        for y in [Label::Success, Label::Failure] {
            let updated = adf_step(&belief, &obs(&[0.0, 0.0], y), Link::Probit).unwrap();
            assert_eq!(updated, belief);
        }
    }

    #[test]
    fn non_probit_links_are_rejected() {
        for link in [Link::Logistic, Link::Cloglog, Link::Loglog] {
            let err = adf_step(&unit_prior(), &obs(&[1.0], Label::Success), link).unwrap_err();
            assert!(matches!(err, Error::UnsupportedLink { .. }));
            assert!(adf_aux(&unit_prior(), &obs(&[1.0], Label::Success), link).is_err());
        }
    }

    #[test]
    fn labels_mirror_from_a_symmetric_prior() {
        let prior = GaussianBelief::new(vec![0.0, 0.0], vec![1.0, 3.0]).unwrap();
        let up = adf_step(&prior, &obs(&[0.3, -0.7], Label::Success), Link::Probit).unwrap();
        let down = adf_step(&prior, &obs(&[0.3, -0.7], Label::Failure), Link::Probit).unwrap();
        for j in 0..2 {
            assert_abs_diff_eq!(up.mean()[j], -down.mean()[j], epsilon = 1e-14);
            assert_abs_diff_eq!(up.precision()[j], down.precision()[j], epsilon = 1e-10);
        }
    }

    #[test]
    fn variance_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xadf);
        for _ in 0..200 {
            let d = rng.gen_range(1..=4);
            let mean: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let precision: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..10.0)).collect();
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y = if rng.gen_bool(0.5) {
                Label::Success
            } else {
                Label::Failure
            };
            let belief = GaussianBelief::new(mean, precision.clone()).unwrap();
            let updated = adf_step(&belief, &obs(&x, y), Link::Probit).unwrap();
            for j in 0..d {
                assert!(updated.precision()[j] >= precision[j]);
            }
        }
    }

    #[test]
    fn predictive_martingale_holds_exactly_at_mean_zero_states() {
        // At m = 0 the two branches mirror, so the predictive average over
        // outcomes reproduces the current predictive without approximation.
        let belief = GaussianBelief::new(vec![0.0, 0.0], vec![1.0, 2.5]).unwrap();
        let x = Alternative::new(vec![1.0, -0.4]).unwrap();
        let x_prime = Alternative::new(vec![0.3, 0.9]).unwrap();
        let p_plus = predict_success(&belief, &x, Link::Probit).unwrap();
        let up = adf_step(
            &belief,
            &Observation {
                x: x.clone(),
                y: Label::Success,
            },
            Link::Probit,
        )
        .unwrap();
        let down = adf_step(
            &belief,
            &Observation {
                x,
                y: Label::Failure,
            },
            Link::Probit,
        )
        .unwrap();
        let blended = p_plus * predict_success(&up, &x_prime, Link::Probit).unwrap()
            + (1.0 - p_plus) * predict_success(&down, &x_prime, Link::Probit).unwrap();
        let current = predict_success(&belief, &x_prime, Link::Probit).unwrap();
        assert_abs_diff_eq!(blended, current, epsilon = 1e-12);
    }

    #[test]
    fn predictive_martingale_deviation_at_an_asymmetric_state_is_pinned() {
        // Moment matching is not an exact Bayes transition; at m = 2 the
        // predictive blend undershoots by about 1.06e-3. Pinning the value
        // guards the moment formulas against silent drift.
        let belief = GaussianBelief::new(vec![2.0], vec![1.0]).unwrap();
        let x = Alternative::new(vec![1.0]).unwrap();
        let p_plus = predict_success(&belief, &x, Link::Probit).unwrap();
        let up = adf_step(&belief, &obs(&[1.0], Label::Success), Link::Probit).unwrap();
        let down = adf_step(&belief, &obs(&[1.0], Label::Failure), Link::Probit).unwrap();
        let blended = p_plus * predict_success(&up, &x, Link::Probit).unwrap()
            + (1.0 - p_plus) * predict_success(&down, &x, Link::Probit).unwrap();
        let current = predict_success(&belief, &x, Link::Probit).unwrap();
        assert_abs_diff_eq!(blended - current, -1.0624896652539e-3, epsilon = 1e-9);
    }
}
