//! Binary-response link functions and their stable scalar kernels.
//!
//! A linear model scores an alternative x through its margin a = w'x and maps
//! the margin to a success probability with a link f. Observations carry a
//! label y in {-1, +1} and contribute the likelihood term f(y a), so both
//! labels share one set of scalar kernels evaluated at the signed margin
//! t = y a:
//!
//! ```text
//! link       f(t)              f'(t)/f(t)              -(log f)''(t)
//! logistic   1/(1 + e^-t)      sigma(-t)               sigma(t) sigma(-t)
//! probit     Phi(t)            v(t) = phi(t)/Phi(t)    w(t) = v(t)(v(t) + t)
//! cloglog    1 - exp(-e^t)     u/(e^u - 1),  u = e^t   closed form in u
//! loglog     exp(-e^-t)        e^-t                    e^-t
//! ```
//!
//! All four links are log-concave: the curvature column is nonnegative, so a
//! posterior update can only add precision. Every derivative ratio is positive
//! and strictly decreasing in t, which is what makes the one-dimensional
//! posterior-mode reduction bracketable.
//!
//! The probit pair (v, w) switches from the direct ratio phi/Phi to a Laplace
//! continued fraction below t = -8, where forming v(t) + t directly would
//! cancel away most of the significand.

use crate::error::{ensure_finite, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Largest f64 strictly below 1; upper clamp for probabilities.
pub(crate) const ONE_MINUS: f64 = 1.0 - f64::EPSILON / 2.0;

/// Switch point between direct and continued-fraction Mills evaluation.
const Z_TAIL: f64 = -8.0;

/// Continued-fraction depth used below `Z_TAIL`.
const CF_DEPTH: usize = 64;

/// Response model linking a real margin to a success probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    Logistic,
    Probit,
    Cloglog,
    Loglog,
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Link::Logistic => "logistic",
            Link::Probit => "probit",
            Link::Cloglog => "cloglog",
            Link::Loglog => "loglog",
        };
        f.write_str(name)
    }
}

/// Binary observation label with the signed coding used in likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Success,
    Failure,
}

impl Label {
    /// +1 for success, -1 for failure.
    pub fn signum(self) -> f64 {
        match self {
            Label::Success => 1.0,
            Label::Failure => -1.0,
        }
    }

    /// Parses the +-1 coding used in label tables; 0 is also accepted as
    /// failure so {0, 1}-coded data files load unchanged.
    pub fn from_signum(value: f64) -> Result<Self> {
        if value == 1.0 {
            Ok(Label::Success)
        } else if value == -1.0 || value == 0.0 {
            Ok(Label::Failure)
        } else {
            Err(crate::Error::Config(format!(
                "label must be +1, -1 or 0, got {value}"
            )))
        }
    }
}

/// Numerically stable logistic function, exact in both tails.
pub(crate) fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Standard normal density.
pub(crate) fn normal_pdf(z: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.3989422804014327;
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF via the complementary error function.
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

/// Ratio v(z) = phi(z)/Phi(z) and product w(z) = v(z)(v(z) + z).
///
/// w lies in [0, 1) for all finite z and tends to 1 as z -> -inf. For
/// z >= -8 both values come from the direct ratio. Below that the Laplace
/// continued fraction at t = -z,
///
/// ```text
/// v = t + 1/(t + 2/(t + 3/(t + ...)))
/// ```
///
/// yields v and v + z = 1/(t + 2/(t + ...)) as separate positive quantities,
/// so the product w never suffers cancellation.
pub(crate) fn mills_vw(z: f64) -> (f64, f64) {
    if z >= Z_TAIL {
        let v = normal_pdf(z) / normal_cdf(z);
        (v, v * (v + z))
    } else {
        let t = -z;
        let mut d = t;
        for j in (1..CF_DEPTH).rev() {
            d = t + (j + 1) as f64 / d;
        }
        let tail = 1.0 / d;
        let v = t + tail;
        (v, v * tail)
    }
}

/// Success probability f(a), clamped to the open unit interval.
///
/// Saturating links hit exactly 1.0 in double precision (probit near a = 8.3,
/// cloglog near a = 3.7) and 0.0 in the opposite tail; the clamp pins the
/// result to the nearest representable value inside (0, 1).
pub fn sigma(link: Link, a: f64) -> Result<f64> {
    ensure_finite(a, "sigma margin")?;
    let raw = match link {
        Link::Logistic => sigmoid(a),
        Link::Probit => normal_cdf(a),
        Link::Cloglog => -(-a.exp()).exp_m1(),
        Link::Loglog => (-(-a).exp()).exp(),
    };
    Ok(raw.clamp(f64::MIN_POSITIVE, ONE_MINUS))
}

/// Score kernel f'(t)/f(t) at a signed margin t = y a.
///
/// Positive and strictly decreasing for every link. For loglog the value
/// e^-t overflows to infinity once t < -709; callers that use the ratio as a
/// bracket endpoint must check finiteness.
pub fn deriv_ratio(link: Link, t: f64) -> Result<f64> {
    ensure_finite(t, "deriv_ratio margin")?;
    Ok(match link {
        Link::Logistic => sigmoid(-t),
        Link::Probit => mills_vw(t).0,
        Link::Cloglog => {
            let u = t.exp();
            if u == 0.0 {
                1.0
            } else if u.is_infinite() {
                0.0
            } else {
                u / u.exp_m1()
            }
        }
        Link::Loglog => (-t).exp(),
    })
}

/// Curvature kernel -(d^2/da^2) log p(y | a) at the margin a = f_hat.
///
/// Nonnegative for all four links; independent of the label for logistic.
pub fn neg_curvature(link: Link, f_hat: f64, y: Label) -> Result<f64> {
    ensure_finite(f_hat, "neg_curvature margin")?;
    let t = y.signum() * f_hat;
    Ok(match link {
        Link::Logistic => sigmoid(t) * sigmoid(-t),
        Link::Probit => mills_vw(t).1,
        Link::Cloglog => cloglog_curvature(t.exp()),
        Link::Loglog => (-t).exp(),
    })
}

/// Cloglog curvature as a function of u = e^t, split by regime so that
/// exp(u) terms neither overflow nor cancel:
///
/// ```text
/// u < 1e-4:  series   u (1/2 - u/6 + u^3/180)
/// u <= 30:   direct   u (u em1 - (em1 - u)) / em1^2,  em1 = e^u - 1
/// u > 30:    tail     u e^-u (u - 1 + e^-u) / (1 - e^-u)^2
/// ```
fn cloglog_curvature(u: f64) -> f64 {
    if u.is_infinite() {
        0.0
    } else if u < 1e-4 {
        u * (0.5 - u / 6.0 + u * u * u / 180.0)
    } else if u <= 30.0 {
        let em1 = u.exp_m1();
        u * (u * em1 - (em1 - u)) / (em1 * em1)
    } else {
        let eneg = (-u).exp();
        u * eneg * (u - 1.0 + eneg) / ((1.0 - eneg) * (1.0 - eneg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const LINKS: [Link; 4] = [Link::Logistic, Link::Probit, Link::Cloglog, Link::Loglog];

    #[test]
    fn sigma_matches_reference_values() {
        assert_relative_eq!(
            sigma(Link::Logistic, 1.0).unwrap(),
            0.7310585786300049,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            sigma(Link::Logistic, 0.5).unwrap(),
            0.6224593312018546,
            max_relative = 1e-15
        );
        assert_eq!(sigma(Link::Probit, 0.0).unwrap(), 0.5);
        assert_relative_eq!(
            sigma(Link::Probit, -1.0).unwrap(),
            0.15865525393145707,
            max_relative = 1e-14
        );
        // cloglog(0) = 1 - 1/e, loglog(0) = 1/e
        assert_relative_eq!(
            sigma(Link::Cloglog, 0.0).unwrap(),
            1.0 - (-1.0f64).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            sigma(Link::Loglog, 0.0).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn sigma_stays_inside_open_unit_interval_at_extreme_margins() {
        for link in LINKS {
            for a in [-1e8, -800.0, -40.0, -8.5, 0.0, 8.5, 40.0, 800.0, 1e8] {
                let p = sigma(link, a).unwrap();
                assert!(p > 0.0 && p < 1.0, "{link} at {a} gave {p}");
            }
        }
    }

    #[test]
    fn sigma_is_monotone_nondecreasing() {
        for link in LINKS {
            let mut prev = 0.0;
            let mut a = -40.0;
            while a <= 40.0 {
                let p = sigma(link, a).unwrap();
                assert!(p >= prev, "{link} decreased at {a}");
                prev = p;
                a += 0.125;
            }
        }
    }

    #[test]
    fn sigma_is_strictly_increasing_away_from_saturation() {
        for link in LINKS {
            let mut a = -3.0;
            while a < 3.0 {
                let lo = sigma(link, a).unwrap();
                let hi = sigma(link, a + 0.01).unwrap();
                assert!(hi > lo, "{link} not strict at {a}");
                a += 0.01;
            }
        }
    }

    #[test]
    fn non_finite_margins_are_rejected() {
        for bad in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
            assert!(sigma(Link::Logistic, bad).is_err());
            assert!(deriv_ratio(Link::Probit, bad).is_err());
            assert!(neg_curvature(Link::Cloglog, bad, Label::Success).is_err());
        }
    }

    #[test]
    fn mills_values_at_zero() {
        let (v, w) = mills_vw(0.0);
        assert_relative_eq!(v, std::f64::consts::FRAC_2_PI.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(w, std::f64::consts::FRAC_2_PI, max_relative = 1e-15);
    }

    #[test]
    fn mills_tail_matches_high_precision_references() {
        for (z, v_ref) in [
            (-10.0, 10.098093233962512),
            (-20.0, 20.04975306852785),
            (-30.0, 30.033259667433677),
            (-50.0, 50.01998403190564),
        ] {
            let (v, w) = mills_vw(z);
            assert_relative_eq!(v, v_ref, max_relative = 1e-13);
            assert!(w > 0.9 && w < 1.0, "w({z}) = {w}");
        }
        // w ~ 1 - 1/z^2 crosses 0.999 only near z = -31.6; covers the asymptote.
        assert!(mills_vw(-31.0).1 < 0.999);
        assert!(mills_vw(-50.0).1 > 0.999);
    }

    #[test]
    fn mills_branches_agree_at_the_switch_point() {
        let (v_direct, w_direct) = mills_vw(-8.0);
        assert_relative_eq!(v_direct, 8.121368112236113, max_relative = 1e-12);
        let (v_cf, w_cf) = mills_vw(-8.0000001);
        assert_relative_eq!(v_cf, 8.121368210803624, max_relative = 1e-12);
        assert_abs_diff_eq!(w_direct, w_cf, epsilon = 1e-9);
    }

    #[test]
    fn mills_w_stays_in_unit_interval() {
        for z in [-200.0, -50.0, -30.0, -8.5, -8.0, -3.0, 0.0, 3.0, 10.0, 50.0] {
            let (_, w) = mills_vw(z);
            assert!((0.0..1.0).contains(&w), "w({z}) = {w}");
        }
    }

    #[test]
    fn deriv_ratio_matches_log_derivative_by_finite_differences() {
        let h = 1e-6;
        for link in LINKS {
            let mut t = -5.0;
            while t <= 5.0 {
                let fd = ((sigma(link, t + h).unwrap()).ln() - (sigma(link, t - h).unwrap()).ln())
                    / (2.0 * h);
                let r = deriv_ratio(link, t).unwrap();
                assert_relative_eq!(r, fd, max_relative = 1e-5, epsilon = 1e-8);
                t += 0.25;
            }
        }
    }

    #[test]
    fn neg_curvature_matches_second_difference_of_log_likelihood() {
        let h = 1e-4;
        for link in LINKS {
            for y in [Label::Success, Label::Failure] {
                let mut f_hat = -4.0;
                while f_hat <= 4.0 {
                    let log_lik = |a: f64| sigma(link, y.signum() * a).unwrap().ln();
                    let second =
                        (log_lik(f_hat + h) - 2.0 * log_lik(f_hat) + log_lik(f_hat - h)) / (h * h);
                    let curv = neg_curvature(link, f_hat, y).unwrap();
                    assert_abs_diff_eq!(curv, -second, epsilon = 1e-4);
                    f_hat += 0.5;
                }
            }
        }
    }

    #[test]
    fn neg_curvature_is_nonnegative_and_finite_over_wide_margins() {
        for link in LINKS {
            for y in [Label::Success, Label::Failure] {
                for f_hat in [-700.0, -30.0, -3.0, 0.0, 3.0, 30.0, 700.0] {
                    let curv = neg_curvature(link, f_hat, y).unwrap();
                    assert!(curv >= 0.0, "{link} curvature {curv} at {f_hat}");
                    assert!(curv.is_finite());
                }
            }
        }
    }

    #[test]
    fn logistic_curvature_is_label_independent() {
        let mut f_hat = -6.0;
        while f_hat <= 6.0 {
            let plus = neg_curvature(Link::Logistic, f_hat, Label::Success).unwrap();
            let minus = neg_curvature(Link::Logistic, f_hat, Label::Failure).unwrap();
            assert_relative_eq!(plus, minus, max_relative = 1e-14);
            f_hat += 0.37;
        }
    }

    #[test]
    fn cloglog_curvature_regimes_join_smoothly() {
        // Around u = 1e-4 (series vs direct) and u = 30 (direct vs tail).
        let t_lo = (1e-4f64).ln();
        let a = neg_curvature(Link::Cloglog, t_lo - 1e-9, Label::Success).unwrap();
        let b = neg_curvature(Link::Cloglog, t_lo + 1e-9, Label::Success).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-8);

        let t_hi = 30.0f64.ln();
        let c = neg_curvature(Link::Cloglog, t_hi - 1e-12, Label::Success).unwrap();
        let d = neg_curvature(Link::Cloglog, t_hi + 1e-12, Label::Success).unwrap();
        assert_relative_eq!(c, d, max_relative = 1e-10);
    }

    #[test]
    fn deriv_ratio_is_strictly_decreasing() {
        for link in LINKS {
            let mut t = -20.0;
            let mut prev = deriv_ratio(link, t).unwrap();
            while t < 20.0 {
                t += 0.5;
                let r = deriv_ratio(link, t).unwrap();
                assert!(r < prev || (r == 0.0 && prev == 0.0), "{link} at {t}");
                assert!(r >= 0.0);
                prev = r;
            }
        }
    }

    #[test]
    fn label_coding_roundtrips() {
        assert_eq!(Label::from_signum(1.0).unwrap(), Label::Success);
        assert_eq!(Label::from_signum(-1.0).unwrap(), Label::Failure);
        assert_eq!(Label::from_signum(0.0).unwrap(), Label::Failure);
        assert!(Label::from_signum(0.5).is_err());
        assert_eq!(Label::Success.signum(), 1.0);
        assert_eq!(Label::Failure.signum(), -1.0);
    }

    #[test]
    fn link_serde_uses_lowercase_names() {
        assert_eq!(
            serde_json::to_string(&Link::Cloglog).unwrap(),
            "\"cloglog\""
        );
        let parsed: Link = serde_json::from_str("\"probit\"").unwrap();
        assert_eq!(parsed, Link::Probit);
        assert_eq!(Link::Loglog.to_string(), "loglog");
    }
}
