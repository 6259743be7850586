//! Numerical verification sweeps for the structural inequalities the
//! optimization methods rest on: performance-difference and q-signal bounds,
//! the three-point property of the mirror step, contraction factors of the
//! robust operators, gradient consistency against finite differences, and
//! the hand-built instance where the aggregated gradient signal vanishes.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::eval::{
    evaluate_robust, f_rho, perf_diff_check, policy_gradient, q_signal_check, robust_bellman_apply,
    weighted_q_inner,
};
use crate::instances::{build_counterexample, build_garnet, GarnetAmbiguity};
use crate::mdp::{occupancy, stationary_state_action_dist_under, Policy, StateDist};
use crate::mirror::{mirror_step, three_point_check, MirrorMap};
use crate::rtd::{
    fixed_point_operator, mean_operator_enumerated, operator_contraction_check, OperatorMode,
};
use crate::solvers::rvi_solve;

/// Outcome of one named check, for pass/fail tables.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self { name: name.to_string(), pass, detail }
    }
}

/// Aggregate of a randomized sweep: the worst slack observed (nonnegative
/// means every trial satisfied its inequality with room to spare).
#[derive(Debug, Clone, Copy)]
pub struct SweepResult {
    pub trials: usize,
    pub min_slack: f64,
    pub pass: bool,
}

fn random_instance(rng: &mut ChaCha8Rng) -> crate::instances::InstanceBundle {
    let gamma = rng.gen_range(0.6..0.9);
    let kind = match rng.gen_range(0..3) {
        0 => GarnetAmbiguity::Singleton,
        1 => GarnetAmbiguity::Contamination(rng.gen_range(0.05..0.6)),
        _ => GarnetAmbiguity::L1Ball(rng.gen_range(0.05..0.9)),
    };
    build_garnet(3, 2, 3, gamma, kind, rng.gen()).expect("garnet parameters are valid")
}

fn random_policy(ns: usize, na: usize, rng: &mut ChaCha8Rng) -> Policy {
    let mut probs = Array2::zeros((ns, na));
    for s in 0..ns {
        let row: Vec<f64> = (0..na).map(|_| -(rng.gen::<f64>()).ln()).collect();
        let total: f64 = row.iter().sum();
        for (a, w) in row.iter().enumerate() {
            probs[[s, a]] = w / total;
        }
    }
    Policy::new(probs).expect("sampled rows are stochastic")
}

/// Interior policy bounded away from the boundary (mixed with uniform).
fn interior_policy(ns: usize, na: usize, rng: &mut ChaCha8Rng) -> Policy {
    let sampled = random_policy(ns, na, rng);
    let uniform = 1.0 / na as f64;
    let probs = sampled.probs.mapv(|p| 0.5 * p + 0.5 * uniform);
    Policy::new(probs).expect("mixture stays stochastic")
}

/// Performance-difference inequality on random (instance, policy, policy)
/// triples; slack is `rhs - lhs`.
pub fn perf_diff_sweep(trials: usize, seed: u64) -> Result<SweepResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let bundle = random_instance(&mut rng);
        let pi = random_policy(3, 2, &mut rng);
        let pi2 = random_policy(3, 2, &mut rng);
        let s = rng.gen_range(0..3);
        let check = perf_diff_check(&bundle.mdp, &bundle.spec, &pi, &pi2, s, 1e-10)?;
        min_slack = min_slack.min(check.rhs - check.lhs);
    }
    Ok(SweepResult { trials, min_slack, pass: min_slack >= -1e-8 })
}

/// Q-signal inequality with the comparator taken from the value-iteration
/// reference; slack is `lhs - rhs`.
pub fn q_signal_sweep(trials: usize, seed: u64) -> Result<SweepResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let bundle = random_instance(&mut rng);
        let pi = random_policy(3, 2, &mut rng);
        let reference = rvi_solve(&bundle.mdp, &bundle.spec, 1e-12)?;
        let s = rng.gen_range(0..3);
        let check =
            q_signal_check(&bundle.mdp, &bundle.spec, &pi, &reference.pi_star, s, 1e-10)?;
        min_slack = min_slack.min(check.lhs - check.rhs);
    }
    Ok(SweepResult { trials, min_slack, pass: min_slack >= -1e-8 })
}

/// Three-point property of the mirror step on random rows; slack `rhs - lhs`.
pub fn three_point_sweep(trials: usize, seed: u64) -> Result<SweepResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let n = rng.gen_range(2..=5);
        let map = if rng.gen_bool(0.5) { MirrorMap::Kl } else { MirrorMap::Euclidean };
        let pi = random_policy(1, n, &mut rng).probs.row(0).to_owned();
        let q = Array1::from_shape_fn(n, |_| rng.gen_range(-3.0..3.0));
        let eta = rng.gen_range(1e-3..20.0);
        let p = random_policy(1, n, &mut rng).probs.row(0).to_owned();
        let check = three_point_check(map, &pi, &q, eta, &p)?;
        min_slack = min_slack.min(check.rhs - check.lhs);
    }
    Ok(SweepResult { trials, min_slack, pass: min_slack >= -1e-8 })
}

/// Monotone progress of the mirror step `<q, step - pi> <= 0`; slack is the
/// negated inner product.
pub fn mirror_monotone_sweep(trials: usize, seed: u64) -> Result<SweepResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let n = rng.gen_range(2..=5);
        let map = if rng.gen_bool(0.5) { MirrorMap::Kl } else { MirrorMap::Euclidean };
        let pi = random_policy(1, n, &mut rng).probs.row(0).to_owned();
        let q = Array1::from_shape_fn(n, |_| rng.gen_range(-3.0..3.0));
        let eta = rng.gen_range(1e-3..50.0);
        let step = mirror_step(map, &pi, &q, eta)?;
        let progress = q.dot(&(&step - &pi));
        min_slack = min_slack.min(-progress);
    }
    Ok(SweepResult { trials, min_slack, pass: min_slack >= -1e-8 })
}

/// Result of the gradient / finite-difference comparison.
#[derive(Debug, Clone, Copy)]
pub struct GradientSweepResult {
    pub trials: usize,
    pub max_rel_err: f64,
    pub pass: bool,
}

/// Central finite differences of the aggregated objective along random
/// tangent directions at interior policies, against the inner product with
/// the analytic gradient.
pub fn gradient_fd_sweep(trials: usize, seed: u64) -> Result<GradientSweepResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel_err: f64 = 0.0;
    let t = 1e-6;
    for _ in 0..trials {
        let gamma = rng.gen_range(0.6..0.85);
        let kind = if rng.gen_bool(0.5) {
            GarnetAmbiguity::Contamination(rng.gen_range(0.1..0.5))
        } else {
            GarnetAmbiguity::L1Ball(rng.gen_range(0.1..0.7))
        };
        let bundle = build_garnet(3, 2, 3, gamma, kind, rng.gen())?;
        let pi = interior_policy(3, 2, &mut rng);
        let rho = StateDist::uniform(3);
        let g = policy_gradient(&bundle.mdp, &bundle.spec, &pi, &rho, 1e-12)?;
        let mut delta = Array2::zeros((3, 2));
        for s in 0..3 {
            let d: f64 = rng.gen_range(-1.0..1.0);
            delta[[s, 0]] = d;
            delta[[s, 1]] = -d;
        }
        let shifted = |sign: f64| {
            Policy::new(&pi.probs + &delta.mapv(|x| sign * t * x)).expect("interior shift")
        };
        let fp = f_rho(&bundle.mdp, &bundle.spec, &shifted(1.0), &rho, 1e-12)?;
        let fm = f_rho(&bundle.mdp, &bundle.spec, &shifted(-1.0), &rho, 1e-12)?;
        let fd = (fp - fm) / (2.0 * t);
        let inner: f64 = (&g.grad * &delta).sum();
        let rel = (fd - inner).abs() / inner.abs().max(1.0);
        max_rel_err = max_rel_err.max(rel);
    }
    Ok(GradientSweepResult { trials, max_rel_err, pass: max_rel_err <= 1e-3 })
}

/// Contraction of the robust Bellman operator on value pairs; slack is
/// `gamma |v - w| - |Tv - Tw|`.
pub fn bellman_contraction_sweep(trials: usize, seed: u64) -> Result<SweepResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let bundle = random_instance(&mut rng);
        let pi = random_policy(3, 2, &mut rng);
        let v = Array1::from_shape_fn(3, |_| rng.gen_range(-5.0..5.0));
        let w = Array1::from_shape_fn(3, |_| rng.gen_range(-5.0..5.0));
        let tv = robust_bellman_apply(&bundle.mdp, &bundle.spec, &pi, &v)?;
        let tw = robust_bellman_apply(&bundle.mdp, &bundle.spec, &pi, &w)?;
        let num = tv.iter().zip(tw.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let den = v.iter().zip(w.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        min_slack = min_slack.min(bundle.mdp.gamma * den - num);
    }
    Ok(SweepResult { trials, min_slack, pass: min_slack >= -1e-10 })
}

/// Agreement between the enumerated mean of the stochastic operator and the
/// direct fixed-point operator on random full-support instances; slack is
/// the negated sup-norm disagreement.
pub fn rtd_unbiasedness_sweep(instances: usize, seed: u64) -> Result<SweepResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_diff: f64 = 0.0;
    for _ in 0..instances {
        let gamma = rng.gen_range(0.6..0.9);
        let epsilon = rng.gen_range(0.05..0.5);
        let bundle = build_garnet(3, 2, 3, gamma, GarnetAmbiguity::Contamination(epsilon), rng.gen())?;
        let policy = interior_policy(3, 2, &mut rng);
        let x = Array2::from_shape_fn((3, 2), |_| rng.gen_range(-3.0..3.0));
        for mode in [OperatorMode::KnownU, OperatorMode::Contamination] {
            let mean = mean_operator_enumerated(mode, &bundle.mdp, &bundle.spec, &policy, &x)?;
            let direct = fixed_point_operator(&bundle.mdp, &bundle.spec, &policy, &x)?;
            let diff =
                mean.iter().zip(direct.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            max_diff = max_diff.max(diff);
        }
    }
    Ok(SweepResult { trials: instances, min_slack: -max_diff, pass: max_diff <= 1e-10 })
}

/// Contraction factor of the mean operator on random instances.
pub fn rtd_contraction_sweep(instances: usize, pairs: usize, seed: u64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let gamma = rng.gen_range(0.6..0.9);
        let bundle =
            build_garnet(3, 2, 3, gamma, GarnetAmbiguity::Contamination(0.2), rng.gen())?;
        let policy = interior_policy(3, 2, &mut rng);
        let check =
            operator_contraction_check(&bundle.mdp, &bundle.spec, &policy, pairs, rng.gen())?;
        if !check.holds {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All assertions about the weak-gradient-signal instance: closed-form
/// robust values, the policy-dependent worst-case kernels, the vanishing
/// aggregated signal next to a genuine value gap, and the q-signal bound
/// that survives the aggregation.
pub fn counterexample_checks(c: f64, gamma: f64) -> Result<Vec<CheckOutcome>> {
    let (bundle, pi, pi_star) = build_counterexample(c, gamma);
    let mdp = &bundle.mdp;
    let spec = &bundle.spec;
    let mut out = Vec::new();

    let eval = evaluate_robust(mdp, spec, &pi, 1e-12)?;
    let g2 = gamma * gamma;
    let expect =
        [c / (1.0 - g2), 1.0 + g2 * c / (1.0 - g2), gamma * c / (1.0 - g2)];
    let value_err = (0..3).map(|s| (eval.v_r[s] - expect[s]).abs()).fold(0.0, f64::max);
    out.push(CheckOutcome::new(
        "robust-values-closed-form",
        value_err <= 1e-9,
        format!("max deviation {value_err:.2e}"),
    ));

    let kernel_pi_ok = (0..2).all(|a| (eval.worst_kernel[[2, a, 0]] - 1.0).abs() <= 1e-12);
    let eval_star = evaluate_robust(mdp, spec, &pi_star, 1e-12)?;
    let kernel_star_ok = (0..2).all(|a| (eval_star.worst_kernel[[2, a, 1]] - 1.0).abs() <= 1e-12);
    out.push(CheckOutcome::new(
        "worst-kernels-track-policy",
        kernel_pi_ok && kernel_star_ok,
        "adversary reroutes the cycle state per policy".into(),
    ));

    let check = perf_diff_check(mdp, spec, &pi, &pi_star, 2, 1e-12)?;
    out.push(CheckOutcome::new(
        "aggregated-signal-vanishes",
        check.holds && check.lhs < -1e-3 && check.rhs.abs() <= 1e-10,
        format!("lhs {:.6} rhs {:.2e}", check.lhs, check.rhs),
    ));

    let q_check = q_signal_check(mdp, spec, &pi, &pi_star, 2, 1e-12)?;
    out.push(CheckOutcome::new(
        "q-signal-survives",
        q_check.holds && q_check.lhs > q_check.rhs + 1e-3,
        format!("lhs {:.6} rhs {:.6}", q_check.lhs, q_check.rhs),
    ));

    // Stationary aggregation under the reference policy's worst-case chain:
    // the averaged signal is exactly zero while the value gap is positive.
    let (nu, _) = stationary_state_action_dist_under(&eval_star.worst_kernel, &pi_star)?;
    let nu_states =
        Array1::from_shape_fn(3, |s| nu[s * 2] + nu[s * 2 + 1]);
    let mut aggregated = 0.0;
    let mut gap = 0.0;
    for s in 0..3 {
        if nu_states[s] == 0.0 {
            continue;
        }
        let d = occupancy(
            mdp,
            &eval_star.worst_kernel,
            &pi_star,
            &StateDist::point_mass(3, s),
        );
        aggregated +=
            nu_states[s] * weighted_q_inner(mdp, &eval.q_r, &d, &pi, &pi_star);
        gap += nu_states[s] * (eval.v_r[s] - eval_star.v_r[s]);
    }
    out.push(CheckOutcome::new(
        "stationary-aggregation-blind",
        aggregated.abs() <= 1e-10 && gap > 1e-3,
        format!("aggregated {aggregated:.2e}, value gap {gap:.6}"),
    ));
    Ok(out)
}

/// Named suites for the command-line front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Counterexample,
    Lemmas,
    Contraction,
    Gradient,
}

/// Runs a suite and collects its pass/fail table.
pub fn run_suite(
    suite: Suite,
    c: f64,
    gamma: f64,
    seed: u64,
    trials: usize,
) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::All | Suite::Counterexample) {
        out.extend(counterexample_checks(c, gamma)?);
    }
    if matches!(suite, Suite::All | Suite::Lemmas) {
        let sweep = perf_diff_sweep(trials, seed)?;
        out.push(CheckOutcome::new(
            "perf-diff-sweep",
            sweep.pass,
            format!("{} trials, min slack {:.2e}", sweep.trials, sweep.min_slack),
        ));
        let sweep = q_signal_sweep(trials, seed ^ 1)?;
        out.push(CheckOutcome::new(
            "q-signal-sweep",
            sweep.pass,
            format!("{} trials, min slack {:.2e}", sweep.trials, sweep.min_slack),
        ));
        let sweep = three_point_sweep(trials, seed ^ 2)?;
        out.push(CheckOutcome::new(
            "three-point-sweep",
            sweep.pass,
            format!("{} trials, min slack {:.2e}", sweep.trials, sweep.min_slack),
        ));
        let sweep = mirror_monotone_sweep(trials, seed ^ 3)?;
        out.push(CheckOutcome::new(
            "mirror-monotone-sweep",
            sweep.pass,
            format!("{} trials, min slack {:.2e}", sweep.trials, sweep.min_slack),
        ));
    }
    if matches!(suite, Suite::All | Suite::Contraction) {
        let sweep = bellman_contraction_sweep(trials, seed ^ 4)?;
        out.push(CheckOutcome::new(
            "bellman-contraction-sweep",
            sweep.pass,
            format!("{} trials, min slack {:.2e}", sweep.trials, sweep.min_slack),
        ));
        let sweep = rtd_unbiasedness_sweep(trials.min(50).max(1), seed ^ 5)?;
        out.push(CheckOutcome::new(
            "td-mean-operator-agreement",
            sweep.pass,
            format!("{} instances, max deviation {:.2e}", sweep.trials, -sweep.min_slack),
        ));
        let holds = rtd_contraction_sweep(5, 20, seed ^ 6)?;
        out.push(CheckOutcome::new(
            "td-operator-contraction",
            holds,
            "sampled pairs within the contraction factor".into(),
        ));
    }
    if matches!(suite, Suite::All | Suite::Gradient) {
        let sweep = gradient_fd_sweep(trials.min(50).max(1), seed ^ 7)?;
        out.push(CheckOutcome::new(
            "gradient-finite-difference",
            sweep.pass,
            format!("{} trials, max rel err {:.2e}", sweep.trials, sweep.max_rel_err),
        ));
    }
    Ok(out)
}
