//! Bregman divergences over the action simplex and the per-state mirror
//! descent step. Two distance-generating functions are built in: negative
//! entropy (KL steps in log space) and the squared l2 norm `w(p) = |p|_2^2`.
//!
//! The Euclidean convention deliberately uses `|p|_2^2` rather than
//! `|p|_2^2 / 2`: the induced divergence is the full squared distance and the
//! effective gradient step is `eta / 2`.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Argument clamp for exponentials in the KL step; keeps relative weights
/// inside f64 range for arbitrarily large stepsizes.
const EXP_CLAMP: f64 = 700.0;

/// Distance-generating function choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MirrorMap {
    Kl,
    Euclidean,
}

impl std::str::FromStr for MirrorMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kl" => Ok(MirrorMap::Kl),
            "euclidean" => Ok(MirrorMap::Euclidean),
            other => Err(Error::Invalid(format!("unknown mirror map {other:?}"))),
        }
    }
}

/// Bregman divergence between action distributions `p` and `q`.
///
/// KL requires `q` strictly positive and `p` absolutely continuous with
/// respect to `q`; `0 log 0` is read as zero.
pub fn bregman(map: MirrorMap, p: &Array1<f64>, q: &Array1<f64>) -> Result<f64> {
    match map {
        MirrorMap::Euclidean => {
            Ok(p.iter().zip(q.iter()).map(|(a, b)| (a - b) * (a - b)).sum())
        }
        MirrorMap::Kl => {
            let mut acc = 0.0;
            for (&pi, &qi) in p.iter().zip(q.iter()) {
                if qi <= 0.0 {
                    if pi > 0.0 {
                        return Err(Error::Domain(format!(
                            "KL divergence undefined: p = {pi} where q = {qi}"
                        )));
                    }
                    continue;
                }
                if pi < 0.0 {
                    return Err(Error::Domain(format!("negative probability {pi}")));
                }
                if pi > 0.0 {
                    acc += pi * (pi / qi).ln();
                }
            }
            Ok(acc)
        }
    }
}

/// Exact minimizer of `eta <q, p> + D(p, pi)` over the action simplex.
///
/// KL: `p(a)` proportional to `pi(a) exp(-eta q(a))`, computed with
/// max-subtraction and exponent clamping, so iterated steps with huge
/// stepsizes stay strictly positive and approach the greedy distribution.
/// Euclidean: projection of `pi - (eta / 2) q` onto the simplex.
pub fn mirror_step(
    map: MirrorMap,
    pi_s: &Array1<f64>,
    q_s: &Array1<f64>,
    eta: f64,
) -> Result<Array1<f64>> {
    if eta <= 0.0 {
        return Err(Error::Invalid(format!("stepsize {eta} must be positive")));
    }
    match map {
        MirrorMap::Euclidean => {
            let target = pi_s - &q_s.mapv(|q| eta / 2.0 * q);
            Ok(simplex_project(&target))
        }
        MirrorMap::Kl => {
            if pi_s.iter().any(|&p| p <= 0.0) {
                return Err(Error::Domain(
                    "KL mirror step requires a strictly positive base distribution".into(),
                ));
            }
            let logits: Array1<f64> =
                pi_s.iter().zip(q_s.iter()).map(|(&p, &q)| p.ln() - eta * q).collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let weights = logits.mapv(|l| ((l - max).max(-EXP_CLAMP)).exp());
            let total: f64 = weights.sum();
            Ok(weights.mapv(|w| w / total))
        }
    }
}

/// Euclidean projection onto the probability simplex by sort-and-threshold.
pub fn simplex_project(x: &Array1<f64>) -> Array1<f64> {
    let n = x.len();
    let mut sorted: Vec<f64> = x.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &xi) in sorted.iter().enumerate() {
        cumsum += xi;
        let candidate = (cumsum - 1.0) / (k as f64 + 1.0);
        if xi - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    let p = x.mapv(|xi| (xi - theta).max(0.0));
    debug_assert!({
        // KKT certificate: feasibility plus complementary slackness.
        let sum: f64 = p.sum();
        let ok_sum = (sum - 1.0).abs() < 1e-9;
        let ok_slack = (0..n).all(|i| p[i] > 0.0 || x[i] - theta <= 1e-12);
        ok_sum && ok_slack
    });
    p
}

/// Outcome of a single three-point inequality check for the mirror step.
#[derive(Debug, Clone, Copy)]
pub struct ThreePointCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// With `pi_plus` the mirror step output, verifies
/// `eta <q, pi_plus - p> + D(pi_plus, pi) <= D(p, pi) - D(p, pi_plus)`
/// for an arbitrary comparison point `p` on the simplex.
pub fn three_point_check(
    map: MirrorMap,
    pi_s: &Array1<f64>,
    q_s: &Array1<f64>,
    eta: f64,
    p: &Array1<f64>,
) -> Result<ThreePointCheck> {
    let pi_plus = mirror_step(map, pi_s, q_s, eta)?;
    let diff = &pi_plus - p;
    let lhs = eta * q_s.dot(&diff) + bregman(map, &pi_plus, pi_s)?;
    let rhs = bregman(map, p, pi_s)? - bregman(map, p, &pi_plus)?;
    Ok(ThreePointCheck { lhs, rhs, holds: lhs <= rhs + 1e-8 })
}

/// Divergence radius `D_w` from the uniform initial policy: `log |A|` for KL
/// and 2 (the squared l2 diameter bound of the simplex) for Euclidean.
pub fn divergence_bound(map: MirrorMap, n_actions: usize) -> f64 {
    match map {
        MirrorMap::Kl => (n_actions as f64).ln(),
        MirrorMap::Euclidean => 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_simplex(n: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
        let mut w: Vec<f64> = (0..n).map(|_| -(rng.gen::<f64>()).ln()).collect();
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= sum);
        Array1::from_vec(w)
    }

    #[test]
    fn bregman_identical_is_zero() {
        let p = arr1(&[0.25, 0.75]);
        assert_eq!(bregman(MirrorMap::Kl, &p, &p).unwrap(), 0.0);
        assert_eq!(bregman(MirrorMap::Euclidean, &p, &p).unwrap(), 0.0);
    }

    #[test]
    fn bregman_closed_forms() {
        let kl = bregman(MirrorMap::Kl, &arr1(&[1.0, 0.0]), &arr1(&[0.5, 0.5])).unwrap();
        assert!((kl - 2.0_f64.ln()).abs() < 1e-12);
        let eu = bregman(MirrorMap::Euclidean, &arr1(&[1.0, 0.0]), &arr1(&[0.0, 1.0])).unwrap();
        assert!((eu - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kl_domain_error() {
        let err = bregman(MirrorMap::Kl, &arr1(&[0.5, 0.5]), &arr1(&[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        let err =
            mirror_step(MirrorMap::Kl, &arr1(&[1.0, 0.0]), &arr1(&[0.0, 0.0]), 1.0).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn constant_q_is_fixed_point() {
        let pi = arr1(&[0.3, 0.7]);
        let q = arr1(&[1.5, 1.5]);
        for map in [MirrorMap::Kl, MirrorMap::Euclidean] {
            let out = mirror_step(map, &pi, &q, 0.7).unwrap();
            for (a, b) in out.iter().zip(pi.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kl_step_closed_form() {
        // Weights (1/2 e^{-ln 2}, 1/2) = (1/4, 1/2), normalized (1/3, 2/3).
        let out = mirror_step(
            MirrorMap::Kl,
            &arr1(&[0.5, 0.5]),
            &arr1(&[1.0, 0.0]),
            2.0_f64.ln(),
        )
        .unwrap();
        assert!((out[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((out[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn euclidean_step_closed_form() {
        // Project (0.5, 0.5) - 0.2 (1, 0) = (0.3, 0.5): shift by 0.1.
        let out = mirror_step(
            MirrorMap::Euclidean,
            &arr1(&[0.5, 0.5]),
            &arr1(&[1.0, 0.0]),
            0.4,
        )
        .unwrap();
        assert!((out[0] - 0.4).abs() < 1e-12);
        assert!((out[1] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn projection_known_cases() {
        let p = simplex_project(&arr1(&[0.6, 0.6]));
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        let p = simplex_project(&arr1(&[2.0, 0.0]));
        assert_eq!(p, arr1(&[1.0, 0.0]));
        let p = simplex_project(&arr1(&[0.3, -0.1, 0.2]));
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.1).abs() < 1e-12);
        assert!((p[2] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn three_point_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..500 {
            let n = rng.gen_range(2..=5);
            let map = if rng.gen_bool(0.5) { MirrorMap::Kl } else { MirrorMap::Euclidean };
            let pi = random_simplex(n, &mut rng);
            let q = Array1::from_shape_fn(n, |_| rng.gen_range(-3.0..3.0));
            let eta = rng.gen_range(1e-3..20.0);
            let p = random_simplex(n, &mut rng);
            let check = three_point_check(map, &pi, &q, eta, &p).unwrap();
            assert!(check.holds, "trial {trial}: lhs {} rhs {}", check.lhs, check.rhs);
        }
    }

    #[test]
    fn monotone_progress() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..200 {
            let n = rng.gen_range(2..=5);
            let map = if rng.gen_bool(0.5) { MirrorMap::Kl } else { MirrorMap::Euclidean };
            let pi = random_simplex(n, &mut rng);
            let q = Array1::from_shape_fn(n, |_| rng.gen_range(-3.0..3.0));
            let eta = rng.gen_range(1e-3..50.0);
            let out = mirror_step(map, &pi, &q, eta).unwrap();
            let progress = q.dot(&(&out - &pi));
            assert!(progress <= 1e-10, "progress {progress}");
        }
    }

    #[test]
    fn first_order_optimality() {
        // eta <q, p - pi_plus> + <grad D(pi_plus, pi), p - pi_plus> >= 0.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(2..=4);
            let map = if rng.gen_bool(0.5) { MirrorMap::Kl } else { MirrorMap::Euclidean };
            let pi = random_simplex(n, &mut rng);
            let q = Array1::from_shape_fn(n, |_| rng.gen_range(-2.0..2.0));
            let eta = rng.gen_range(0.01..5.0);
            let plus = mirror_step(map, &pi, &q, eta).unwrap();
            let p = random_simplex(n, &mut rng);
            let grad_d: Array1<f64> = match map {
                // d/dp D(p, pi) at p = pi_plus.
                MirrorMap::Kl => plus
                    .iter()
                    .zip(pi.iter())
                    .map(|(&a, &b)| (a.max(1e-300) / b).ln() + 1.0)
                    .collect(),
                MirrorMap::Euclidean => {
                    plus.iter().zip(pi.iter()).map(|(&a, &b)| 2.0 * (a - b)).collect()
                }
            };
            let dir = &p - &plus;
            let value = eta * q.dot(&dir) + grad_d.dot(&dir);
            assert!(value >= -1e-8, "optimality violated: {value}");
        }
    }

    #[test]
    fn huge_stepsize_approaches_greedy() {
        let pi = arr1(&[0.25, 0.25, 0.5]);
        let q = arr1(&[0.3, -1.2, 0.8]);
        let out = mirror_step(MirrorMap::Kl, &pi, &q, 1e6).unwrap();
        assert!(out[1] >= 1.0 - 1e-6);
        // Remains strictly positive thanks to the exponent clamp.
        assert!(out.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn repeated_huge_steps_stay_positive() {
        let mut pi = arr1(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        let q = arr1(&[1.0, 0.0, 2.0]);
        for _ in 0..100 {
            pi = mirror_step(MirrorMap::Kl, &pi, &q, 1e12).unwrap();
            assert!(pi.iter().all(|&p| p > 0.0));
        }
        assert!(pi[1] >= 1.0 - 1e-9);
    }

    #[test]
    fn divergence_bounds() {
        assert!((divergence_bound(MirrorMap::Kl, 2) - 2.0_f64.ln()).abs() < 1e-15);
        assert!((divergence_bound(MirrorMap::Kl, 4) - 4.0_f64.ln()).abs() < 1e-15);
        assert_eq!(divergence_bound(MirrorMap::Euclidean, 7), 2.0);
    }

    mod properties {
        use super::super::*;
        use ndarray::Array1;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn projection_idempotent_and_nonexpansive(
                xs in proptest::collection::vec(-5.0_f64..5.0, 2..6),
                ys in proptest::collection::vec(-5.0_f64..5.0, 2..6),
            ) {
                let n = xs.len().min(ys.len());
                let x = Array1::from_vec(xs[..n].to_vec());
                let y = Array1::from_vec(ys[..n].to_vec());
                let px = simplex_project(&x);
                let py = simplex_project(&y);
                // Idempotence.
                let ppx = simplex_project(&px);
                prop_assert!(px.iter().zip(ppx.iter()).all(|(a, b)| (a - b).abs() < 1e-9));
                // 1-Lipschitz in l2.
                let d_in: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                let d_out: f64 = px.iter().zip(py.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                prop_assert!(d_out <= d_in + 1e-9);
            }

            #[test]
            fn bregman_nonnegative(
                ps in proptest::collection::vec(0.01_f64..1.0, 3),
                qs in proptest::collection::vec(0.01_f64..1.0, 3),
            ) {
                let norm = |v: &[f64]| {
                    let s: f64 = v.iter().sum();
                    Array1::from_iter(v.iter().map(|x| x / s))
                };
                let p = norm(&ps);
                let q = norm(&qs);
                prop_assert!(bregman(MirrorMap::Kl, &p, &q).unwrap() >= -1e-12);
                prop_assert!(bregman(MirrorMap::Euclidean, &p, &q).unwrap() >= 0.0);
            }
        }
    }
}
