//! Online robust policy evaluation from a single trajectory of the nominal
//! environment. The iterate follows a stochastic-approximation step whose
//! mean operator `F(x) = diag(nu) (T(x) - x) + x` has the robust Q-table as
//! its unique fixed point, where `nu` is the stationary state-action
//! distribution of the sampled chain and `T` the robust Bellman operator on
//! Q-shaped tables.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::ambiguity::{support_value_of_u, AmbiguitySpec, QSet};
use crate::error::{Error, Result};
use crate::eval::evaluate_robust;
use crate::mdp::{assumption_check, stationary_state_action_dist, Policy, TabularMdp};

/// Which stochastic update the learner applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorMode {
    /// The ambiguity set is known and queried through its support function.
    KnownU,
    /// Contamination models only: the update touches the nominal sample and
    /// the reference set, never the mixture itself.
    Contamination,
}

/// Configuration of an online evaluation run.
#[derive(Debug, Clone, Copy)]
pub struct RtdConfig {
    /// Constant stepsize in (0, 1].
    pub alpha: f64,
    pub steps: usize,
    pub seed: u64,
    pub start_state: usize,
    pub mode: OperatorMode,
    /// Record the sup-norm error to the exact robust Q every this many steps
    /// (0 disables the trace).
    pub trace_every: usize,
}

impl Default for RtdConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            steps: 10_000,
            seed: 0,
            start_state: 0,
            mode: OperatorMode::KnownU,
            trace_every: 1000,
        }
    }
}

/// One overlapping transition sample `(s, a, s', a')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quadruple {
    pub s: usize,
    pub a: usize,
    pub s_next: usize,
    pub a_next: usize,
}

fn sample_index(row: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

fn sample_action(policy: &Policy, s: usize, rng: &mut ChaCha8Rng) -> usize {
    let row: Vec<f64> = (0..policy.n_actions()).map(|a| policy.probs[[s, a]]).collect();
    sample_index(&row, rng)
}

fn sample_next_state(mdp: &TabularMdp, s: usize, a: usize, rng: &mut ChaCha8Rng) -> usize {
    let row: Vec<f64> = (0..mdp.n_states).map(|s2| mdp.nominal[[s, a, s2]]).collect();
    sample_index(&row, rng)
}

/// Simulates `steps` overlapping quadruples of the nominal chain under
/// `policy`, deterministically in the seed. Consecutive quadruples share
/// their boundary: each one ends where the next begins.
pub fn sample_trajectory(
    mdp: &TabularMdp,
    policy: &Policy,
    steps: usize,
    seed: u64,
    start_state: usize,
) -> Vec<Quadruple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(steps);
    let mut s = start_state;
    let mut a = sample_action(policy, s, &mut rng);
    for _ in 0..steps {
        let s_next = sample_next_state(mdp, s, a, &mut rng);
        let a_next = sample_action(policy, s_next, &mut rng);
        out.push(Quadruple { s, a, s_next, a_next });
        s = s_next;
        a = a_next;
    }
    out
}

/// Policy-averaged table `M(pi, x)(s) = sum_a pi(a|s) x(s, a)`, used as the
/// argument of every support query on Q-shaped tables.
pub fn policy_average(policy: &Policy, x: &Array2<f64>) -> Array1<f64> {
    let (ns, na) = x.dim();
    let mut m = Array1::zeros(ns);
    for s in 0..ns {
        for a in 0..na {
            m[s] += policy.probs[[s, a]] * x[[s, a]];
        }
    }
    m
}

fn sigma_q_set(epsilon: f64, q_set: &QSet, m: &Array1<f64>) -> f64 {
    let _ = epsilon;
    match q_set {
        QSet::Full => m.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        QSet::FiniteList(qs) => {
            qs.iter().map(|q| q.dot(m)).fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

/// One application of the stochastic operator at sample `zeta`: only the
/// `(s, a)` entry of `x` changes.
///
/// Known-set mode sets it to
/// `c(s,a) + gamma x(s',a') + gamma sigma_U(M(pi,x))`; contamination mode to
/// `c(s,a) + gamma (1-eps) x(s',a') + gamma eps sigma_Q(M(pi,x))`, which
/// needs no access to the mixture set itself.
pub fn stochastic_operator(
    mode: OperatorMode,
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    policy: &Policy,
    x: &Array2<f64>,
    zeta: &Quadruple,
) -> Result<Array2<f64>> {
    let m = policy_average(policy, x);
    let mut out = x.clone();
    out[[zeta.s, zeta.a]] = stochastic_target(mode, mdp, spec, &m, x, zeta)?;
    Ok(out)
}

fn stochastic_target(
    mode: OperatorMode,
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    m: &Array1<f64>,
    x: &Array2<f64>,
    zeta: &Quadruple,
) -> Result<f64> {
    let c = mdp.cost[[zeta.s, zeta.a]];
    match mode {
        OperatorMode::KnownU => {
            let sigma = support_value_of_u(spec, mdp, zeta.s, zeta.a, m)?;
            Ok(c + mdp.gamma * x[[zeta.s_next, zeta.a_next]] + mdp.gamma * sigma)
        }
        OperatorMode::Contamination => {
            let (epsilon, q_set) = spec.contamination().ok_or_else(|| {
                Error::ModeMismatch(
                    "contamination operator requires a uniform contamination spec".into(),
                )
            })?;
            let sigma = sigma_q_set(epsilon, q_set, m);
            Ok(c
                + mdp.gamma * (1.0 - epsilon) * x[[zeta.s_next, zeta.a_next]]
                + mdp.gamma * epsilon * sigma)
        }
    }
}

/// The mean operator `F(x) = diag(nu) (T(x) - x) + x` computed directly from
/// its definition, with `nu` the stationary state-action distribution of the
/// nominal chain under `policy`.
pub fn fixed_point_operator(
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    policy: &Policy,
    x: &Array2<f64>,
) -> Result<Array2<f64>> {
    let (nu, _) = stationary_state_action_dist(mdp, policy)?;
    let m = policy_average(policy, x);
    let mut out = x.clone();
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let mut nominal_part = 0.0;
            for s2 in 0..mdp.n_states {
                nominal_part += mdp.nominal[[s, a, s2]] * m[s2];
            }
            let sigma = support_value_of_u(spec, mdp, s, a, &m)?;
            let t = mdp.cost[[s, a]] + mdp.gamma * (nominal_part + sigma);
            out[[s, a]] = x[[s, a]] + nu[s * mdp.n_actions + a] * (t - x[[s, a]]);
        }
    }
    Ok(out)
}

/// Independent route to the mean operator: enumerate every quadruple,
/// weight it by its stationary probability, and average the stochastic
/// operator. Agrees with [`fixed_point_operator`] at stationarity.
pub fn mean_operator_enumerated(
    mode: OperatorMode,
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    policy: &Policy,
    x: &Array2<f64>,
) -> Result<Array2<f64>> {
    let (nu, _) = stationary_state_action_dist(mdp, policy)?;
    let m = policy_average(policy, x);
    let mut out = Array2::zeros(x.dim());
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let weight_sa = nu[s * mdp.n_actions + a];
            for s_next in 0..mdp.n_states {
                let p_next = mdp.nominal[[s, a, s_next]];
                if p_next == 0.0 {
                    continue;
                }
                for a_next in 0..mdp.n_actions {
                    let weight = weight_sa * p_next * policy.probs[[s_next, a_next]];
                    if weight == 0.0 {
                        continue;
                    }
                    let zeta = Quadruple { s, a, s_next, a_next };
                    let target = stochastic_target(mode, mdp, spec, &m, x, &zeta)?;
                    // f(x; zeta) = x + (target - x(s,a)) e(s,a); accumulate
                    // the weighted average without materializing each table.
                    for s2 in 0..mdp.n_states {
                        for a2 in 0..mdp.n_actions {
                            let f_entry = if (s2, a2) == (s, a) { target } else { x[[s2, a2]] };
                            out[[s2, a2]] += weight * f_entry;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Result of an online evaluation run.
#[derive(Debug, Clone)]
pub struct RtdOutput {
    pub theta: Array2<f64>,
    /// `(step, sup-norm error to the exact robust Q)` samples, present when
    /// tracing is enabled and the instance admits exact evaluation.
    pub trace: Option<Vec<(usize, f64)>>,
}

/// Runs the stochastic-approximation loop
/// `theta <- theta + alpha (f(theta; zeta) - theta)` for `steps` transitions
/// of the nominal chain, from a zero initial table. Deterministic in the
/// seed. Requires a strictly positive policy and an ergodic nominal chain.
pub fn rtd_evaluate(
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    policy: &Policy,
    config: &RtdConfig,
) -> Result<RtdOutput> {
    if !(config.alpha > 0.0 && config.alpha <= 1.0) {
        return Err(Error::Invalid(format!("alpha {} must lie in (0, 1]", config.alpha)));
    }
    let report = assumption_check(mdp, policy);
    if !report.satisfied() {
        return Err(Error::AssumptionViolated(format!(
            "irreducible={}, aperiodic={}, pi_positive={}",
            report.irreducible, report.aperiodic, report.pi_positive
        )));
    }

    let q_exact = if config.trace_every > 0 {
        Some(evaluate_robust(mdp, spec, policy, 1e-10)?.q_r)
    } else {
        None
    };
    let mut trace = q_exact.as_ref().map(|_| Vec::new());

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut theta = Array2::zeros((mdp.n_states, mdp.n_actions));
    let mut s = config.start_state;
    let mut a = sample_action(policy, s, &mut rng);
    for t in 0..config.steps {
        let s_next = sample_next_state(mdp, s, a, &mut rng);
        let a_next = sample_action(policy, s_next, &mut rng);
        let zeta = Quadruple { s, a, s_next, a_next };
        let m = policy_average(policy, &theta);
        let target = stochastic_target(config.mode, mdp, spec, &m, &theta, &zeta)?;
        // The update only moves the sampled entry: f differs from theta there.
        theta[[zeta.s, zeta.a]] += config.alpha * (target - theta[[zeta.s, zeta.a]]);
        s = s_next;
        a = a_next;
        if let (Some(trace), Some(q)) = (trace.as_mut(), q_exact.as_ref()) {
            if (t + 1) % config.trace_every == 0 {
                let err = theta
                    .iter()
                    .zip(q.iter())
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                trace.push((t + 1, err));
            }
        }
    }
    Ok(RtdOutput { theta, trace })
}

/// Sup-norm contraction check of the mean operator on sampled table pairs:
/// `|F(x) - F(y)| <= (1 - nu_min (1-gamma)) |x - y|`, with `F` evaluated by
/// quadruple enumeration.
#[derive(Debug, Clone, Copy)]
pub struct ContractionCheck {
    pub factor_bound: f64,
    pub holds: bool,
}

pub fn operator_contraction_check(
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    policy: &Policy,
    pairs: usize,
    seed: u64,
) -> Result<ContractionCheck> {
    let (_, nu_min) = stationary_state_action_dist(mdp, policy)?;
    let factor = 1.0 - nu_min * (1.0 - mdp.gamma);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut holds = true;
    for _ in 0..pairs {
        let x = Array2::from_shape_fn((mdp.n_states, mdp.n_actions), |_| rng.gen_range(-5.0..5.0));
        let y = Array2::from_shape_fn((mdp.n_states, mdp.n_actions), |_| rng.gen_range(-5.0..5.0));
        let fx = mean_operator_enumerated(OperatorMode::KnownU, mdp, spec, policy, &x)?;
        let fy = mean_operator_enumerated(OperatorMode::KnownU, mdp, spec, policy, &y)?;
        let num = fx.iter().zip(fy.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let den = x.iter().zip(y.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if num > factor * den + 1e-10 {
            holds = false;
        }
    }
    Ok(ContractionCheck { factor_bound: factor, holds })
}
