//! Exact robust policy evaluation: the nonlinear Bellman operator for a
//! fixed policy, its fixed point (robust V and Q), extraction of a
//! worst-case kernel, the policy (sub)gradient of the aggregated objective,
//! and the two structural inequalities relating values of policy pairs.

use ndarray::{Array1, Array2, Array3};
use rayon::prelude::*;

use crate::ambiguity::{support_argmax, AmbiguitySpec};
use crate::error::{Error, Result};
use crate::mdp::{occupancy, standard_q, Policy, StateDist, TabularMdp};

/// States are swept in parallel above this size; the sweep is Jacobi-style
/// (each state reads the previous iterate only), so the result is identical
/// either way.
const PARALLEL_STATE_THRESHOLD: usize = 64;

/// Result of robust evaluation at a fixed policy: the robust value vector,
/// the robust Q-table, one worst-case transition kernel attaining the values,
/// the final fixed-point step size, and the iteration count.
#[derive(Debug, Clone)]
pub struct RobustEvaluation {
    pub v_r: Array1<f64>,
    pub q_r: Array2<f64>,
    pub worst_kernel: Array3<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// One application of the robust Bellman operator for `policy`:
/// `v'(s) = sum_a pi(a|s) [c(s,a) + gamma max_{p} p . v]`.
/// The operator is a gamma-contraction in the sup norm.
pub fn robust_bellman_apply(
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    policy: &Policy,
    v: &Array1<f64>,
) -> Result<Array1<f64>> {
    let one_state = |s: usize| -> Result<f64> {
        let mut acc = 0.0;
        for a in 0..mdp.n_actions {
            let w = policy.probs[[s, a]];
            if w == 0.0 {
                continue;
            }
            let support = support_argmax(spec, mdp, s, a, v)?.value;
            acc += w * (mdp.cost[[s, a]] + mdp.gamma * support);
        }
        Ok(acc)
    };
    let values: Vec<f64> = if mdp.n_states >= PARALLEL_STATE_THRESHOLD {
        (0..mdp.n_states).into_par_iter().map(one_state).collect::<Result<_>>()?
    } else {
        (0..mdp.n_states).map(one_state).collect::<Result<_>>()?
    };
    Ok(Array1::from_vec(values))
}

/// Iteration cap certifying convergence of the fixed-point loop: enough
/// gamma-contractions to shrink the worst-case initial error below the
/// stopping threshold, plus slack.
fn iteration_cap(mdp: &TabularMdp, tol: f64) -> usize {
    let cost_bound = mdp.cost.iter().fold(0.0_f64, |m, &c| m.max(c.abs())).max(1.0);
    let initial = cost_bound / (1.0 - mdp.gamma);
    let target = tol * (1.0 - mdp.gamma) / initial;
    (target.ln() / mdp.gamma.ln()).ceil() as usize + 10
}

/// Computes the robust value and Q functions of `policy` to accuracy `tol`
/// in the sup norm, by fixed-point iteration of the robust Bellman operator
/// from zero. The stopping rule converts the observed step size into a true
/// error bound through the contraction factor. A worst-case kernel is
/// extracted once, at the converged values, with the ambiguity module's
/// deterministic tie-breaking.
pub fn evaluate_robust(
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    policy: &Policy,
    tol: f64,
) -> Result<RobustEvaluation> {
    if tol <= 0.0 {
        return Err(Error::Invalid(format!("tolerance {tol} must be positive")));
    }
    let threshold = tol * (1.0 - mdp.gamma) / mdp.gamma;
    let cap = iteration_cap(mdp, tol);
    let mut v = Array1::zeros(mdp.n_states);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for k in 1..=cap {
        let next = robust_bellman_apply(mdp, spec, policy, &v)?;
        residual =
            v.iter().zip(next.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        iterations = k;
        if residual <= threshold {
            break;
        }
    }
    if residual > threshold {
        return Err(Error::NonConvergence(cap));
    }

    let mut q_r = Array2::zeros((mdp.n_states, mdp.n_actions));
    let mut worst_kernel = Array3::zeros((mdp.n_states, mdp.n_actions, mdp.n_states));
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let point = support_argmax(spec, mdp, s, a, &v)?;
            q_r[[s, a]] = mdp.cost[[s, a]] + mdp.gamma * point.value;
            for s2 in 0..mdp.n_states {
                worst_kernel[[s, a, s2]] = point.p_star[s2];
            }
        }
    }
    Ok(RobustEvaluation { v_r: v, q_r, worst_kernel, residual, iterations })
}

/// Aggregated robust objective `f_rho(pi) = E_{s ~ rho} V_r(s)`.
pub fn f_rho(
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    policy: &Policy,
    rho: &StateDist,
    tol: f64,
) -> Result<f64> {
    let eval = evaluate_robust(mdp, spec, policy, tol)?;
    Ok(rho.weights.dot(&eval.v_r))
}

/// Policy gradient of the aggregated objective with respect to the direct
/// parameterization, evaluated through the worst-case kernel of `policy`:
/// `grad[s, a] = d_rho(s) Q(s, a) / (1 - gamma)` with both the visitation
/// measure and the Q-table taken in the worst-case MDP.
#[derive(Debug, Clone)]
pub struct PolicyGradient {
    pub grad: Array2<f64>,
    /// Set when some action has zero probability; the formula is returned
    /// anyway but only certifies a subgradient on the interior.
    pub boundary: bool,
}

pub fn policy_gradient(
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    policy: &Policy,
    rho: &StateDist,
    tol: f64,
) -> Result<PolicyGradient> {
    let eval = evaluate_robust(mdp, spec, policy, tol)?;
    let d = occupancy(mdp, &eval.worst_kernel, policy, rho);
    let q = standard_q(mdp, &eval.worst_kernel, policy);
    let mut grad = Array2::zeros((mdp.n_states, mdp.n_actions));
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            grad[[s, a]] = d.weights[s] * q[[s, a]] / (1.0 - mdp.gamma);
        }
    }
    Ok(PolicyGradient { grad, boundary: policy.min_prob() == 0.0 })
}

/// Outcome of one structural inequality check.
#[derive(Debug, Clone, Copy)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Performance-difference bound between two policies at state `s`:
/// `V'(s) - V(s) <= E_{s' ~ d} <Q, pi' - pi>_{s'} / (1 - gamma)`,
/// where the visitation measure pairs the *new* policy with its own
/// worst-case kernel. The bound can be loose: the aggregated right side may
/// vanish at strictly suboptimal policies.
pub fn perf_diff_check(
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    pi: &Policy,
    pi_prime: &Policy,
    s: usize,
    tol: f64,
) -> Result<InequalityCheck> {
    let eval = evaluate_robust(mdp, spec, pi, tol)?;
    let eval_prime = evaluate_robust(mdp, spec, pi_prime, tol)?;
    let lhs = eval_prime.v_r[s] - eval.v_r[s];
    let d = occupancy(mdp, &eval_prime.worst_kernel, pi_prime, &StateDist::point_mass(mdp.n_states, s));
    let rhs = weighted_q_inner(mdp, &eval.q_r, &d, pi_prime, pi) / (1.0 - mdp.gamma);
    Ok(InequalityCheck { lhs, rhs, holds: lhs <= rhs + 1e-8 })
}

/// Q-signal bound at state `s`:
/// `E_{s' ~ d} <Q, pi - pi*>_{s'} >= (1 - gamma) (V(s) - V*(s))`,
/// where the visitation measure pairs the *comparator* policy with the
/// worst-case kernel of the current policy. This is the aggregation that
/// keeps the improvement signal visible.
pub fn q_signal_check(
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    pi: &Policy,
    pi_star: &Policy,
    s: usize,
    tol: f64,
) -> Result<InequalityCheck> {
    let eval = evaluate_robust(mdp, spec, pi, tol)?;
    let eval_star = evaluate_robust(mdp, spec, pi_star, tol)?;
    let d = occupancy(mdp, &eval.worst_kernel, pi_star, &StateDist::point_mass(mdp.n_states, s));
    let lhs = weighted_q_inner(mdp, &eval.q_r, &d, pi, pi_star);
    let rhs = (1.0 - mdp.gamma) * (eval.v_r[s] - eval_star.v_r[s]);
    Ok(InequalityCheck { lhs, rhs, holds: lhs >= rhs - 1e-8 })
}

/// `E_{s' ~ d} <q(s', .), a(.|s') - b(.|s')>`.
pub fn weighted_q_inner(
    mdp: &TabularMdp,
    q: &Array2<f64>,
    d: &StateDist,
    a: &Policy,
    b: &Policy,
) -> f64 {
    let mut acc = 0.0;
    for s in 0..mdp.n_states {
        if d.weights[s] == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for act in 0..mdp.n_actions {
            inner += q[[s, act]] * (a.probs[[s, act]] - b.probs[[s, act]]);
        }
        acc += d.weights[s] * inner;
    }
    acc
}
