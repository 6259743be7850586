//! Outer optimization loops over the robust objective: mirror descent with
//! exact or noisy robust Q-tables, greedy policy iteration, and worst-case
//! value iteration (which doubles as the reference optimum for all reported
//! optimality gaps), plus estimation of the mismatch constants that govern
//! the linear rate and the geometric stepsize rule.

use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::ambiguity::{support_argmax, AmbiguitySpec};
use crate::error::{Error, Result};
use crate::eval::evaluate_robust;
use crate::mdp::{assumption_check, occupancy, Policy, StateDist, TabularMdp};
use crate::mirror::{bregman, mirror_step, MirrorMap};
use crate::rtd::{rtd_evaluate, OperatorMode, RtdConfig};

/// Accuracy of the value-iteration reference optimum behind gap reporting.
pub const REFERENCE_TOL: f64 = 1e-12;

/// Cap applied to geometric stepsize schedules; far past the point where the
/// KL step is numerically greedy.
pub const DEFAULT_ETA_CAP: f64 = 1e12;

/// Stepsize schedule for the mirror-descent solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepsizeSchedule {
    Constant { eta: f64 },
    Geometric { eta0: f64, ratio: f64, eta_cap: f64 },
}

impl StepsizeSchedule {
    pub fn eta(&self, k: usize) -> f64 {
        match *self {
            StepsizeSchedule::Constant { eta } => eta,
            StepsizeSchedule::Geometric { eta0, ratio, eta_cap } => {
                (eta0 * ratio.powi(k as i32)).min(eta_cap)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepsizeSchedule::Constant { eta } if eta > 0.0 => Ok(()),
            StepsizeSchedule::Geometric { eta0, ratio, eta_cap }
                if eta0 > 0.0 && ratio >= 1.0 && eta_cap > 0.0 =>
            {
                Ok(())
            }
            _ => Err(Error::Invalid(format!("invalid stepsize schedule {self:?}"))),
        }
    }
}

/// How SRPMD obtains its noisy Q-tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QEstimator {
    /// Exact robust Q plus entrywise uniform noise in `[-e, e]`. The draws
    /// are scale-free (e multiplies a seeded uniform in [-1, 1]), so runs at
    /// different noise levels share randomness.
    SyntheticNoise { e: f64 },
    /// Online temporal-difference evaluation against the nominal kernel.
    Rtd { alpha: f64, steps: usize, mode: OperatorMode },
}

/// Configuration shared by the iterative solvers.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub schedule: StepsizeSchedule,
    pub map: MirrorMap,
    /// Aggregation distribution; uniform when absent.
    pub rho: Option<StateDist>,
    pub max_iters: usize,
    pub gap_tol: f64,
    pub eval_tol: f64,
    /// Drives all randomness (SRPMD noise, trajectories, iterate selection).
    pub seed: u64,
    /// SRPMD only; `rpmd_solve` ignores it.
    pub estimator: Option<QEstimator>,
    /// Keep the policy iterates in the log (used by diagnostic sweeps).
    pub record_policies: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            schedule: StepsizeSchedule::Constant { eta: 1.0 },
            map: MirrorMap::Kl,
            rho: None,
            max_iters: 1000,
            gap_tol: 1e-10,
            eval_tol: 1e-10,
            seed: 0,
            estimator: None,
            record_policies: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.max_iters < 1 {
            return Err(Error::Invalid("max_iters must be at least 1".into()));
        }
        if self.gap_tol <= 0.0 || self.eval_tol <= 0.0 {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        Ok(())
    }

    fn rho_or_uniform(&self, n_states: usize) -> StateDist {
        self.rho.clone().unwrap_or_else(|| StateDist::uniform(n_states))
    }
}

/// One logged iteration. `divergence_to_opt` and its successor are the
/// divergence to the reference policy averaged under the visitation measure
/// of the reference policy in the current iterate's worst-case kernel;
/// `m_hat` is the corresponding visitation-to-rho ratio bound. Together they
/// reproduce the per-iteration contraction inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub eta: Option<f64>,
    pub f_rho: f64,
    pub gap: f64,
    pub max_value_decrease: Option<f64>,
    pub divergence_to_opt: Option<f64>,
    pub divergence_to_opt_next: Option<f64>,
    pub m_hat: Option<f64>,
    pub rtd_error: Option<f64>,
    pub wall_ms: f64,
}

/// Full run record of a solver invocation.
#[derive(Debug, Clone)]
pub struct RunLog {
    pub algorithm: String,
    pub gamma: f64,
    pub records: Vec<IterationRecord>,
    pub final_policy: Policy,
    /// Reference optimal value of the aggregated objective.
    pub f_star: f64,
    /// Uniformly sampled iterate index (constant-step Euclidean SRPMD).
    pub selected_iterate: Option<usize>,
    pub policies: Option<Vec<Policy>>,
}

impl RunLog {
    pub fn final_gap(&self) -> f64 {
        self.records.last().map(|r| r.gap).unwrap_or(f64::NAN)
    }

    /// Per-iteration slacks of the contraction recursion
    /// `gap_{k+1} <= (1 - (1-gamma)/M) gap_k + (div_k - div_next_k)/(M eta_k)`
    /// evaluated with `M` the largest visitation ratio observed along the
    /// run. Nonnegative slack means the inequality held at that step.
    pub fn recursion_slacks(&self) -> Option<Vec<f64>> {
        let m_hat = self
            .records
            .iter()
            .filter_map(|r| r.m_hat)
            .fold(f64::NEG_INFINITY, f64::max);
        if !m_hat.is_finite() {
            return None;
        }
        let factor = 1.0 - (1.0 - self.gamma) / m_hat;
        let mut slacks = Vec::new();
        for pair in self.records.windows(2) {
            let (cur, next) = (&pair[0], &pair[1]);
            let (eta, div, div_next) = (cur.eta?, cur.divergence_to_opt?, cur.divergence_to_opt_next?);
            let rhs = factor * cur.gap + (div - div_next) / (m_hat * eta);
            slacks.push(rhs - next.gap);
        }
        Some(slacks)
    }
}

/// Solution of worst-case value iteration.
#[derive(Debug, Clone)]
pub struct RviSolution {
    pub v_star: Array1<f64>,
    pub pi_star: Policy,
    pub iterations: usize,
    pub residual: f64,
}

/// Worst-case value iteration to sup-norm accuracy `tol`:
/// `v(s) <- min_a [c(s,a) + gamma max_p p.v]`, greedy policy extracted at
/// the fixed point with lowest-index tie-breaking. Serves as the reference
/// optimum for every reported optimality gap.
pub fn rvi_solve(mdp: &TabularMdp, spec: &AmbiguitySpec, tol: f64) -> Result<RviSolution> {
    if tol <= 0.0 {
        return Err(Error::Invalid(format!("tolerance {tol} must be positive")));
    }
    let threshold = tol * (1.0 - mdp.gamma) / mdp.gamma;
    let cost_bound = mdp.cost.iter().fold(0.0_f64, |m, &c| m.max(c.abs())).max(1.0);
    let initial = cost_bound / (1.0 - mdp.gamma);
    let cap = ((tol * (1.0 - mdp.gamma) / initial).ln() / mdp.gamma.ln()).ceil() as usize + 10;
    let mut v = Array1::zeros(mdp.n_states);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for k in 1..=cap {
        let mut next = Array1::zeros(mdp.n_states);
        for s in 0..mdp.n_states {
            let mut best = f64::INFINITY;
            for a in 0..mdp.n_actions {
                let support = support_argmax(spec, mdp, s, a, &v)?.value;
                let q = mdp.cost[[s, a]] + mdp.gamma * support;
                if q < best {
                    best = q;
                }
            }
            next[s] = best;
        }
        residual = v.iter().zip(next.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        iterations = k;
        if residual <= threshold {
            break;
        }
    }
    if residual > threshold {
        return Err(Error::NonConvergence(cap));
    }
    let mut actions = vec![0usize; mdp.n_states];
    for s in 0..mdp.n_states {
        let mut best = f64::INFINITY;
        for a in 0..mdp.n_actions {
            let support = support_argmax(spec, mdp, s, a, &v)?.value;
            let q = mdp.cost[[s, a]] + mdp.gamma * support;
            if q < best {
                best = q;
                actions[s] = a;
            }
        }
    }
    Ok(RviSolution {
        v_star: v,
        pi_star: Policy::deterministic(mdp.n_actions, &actions),
        iterations,
        residual,
    })
}

/// Mismatch constants of the aggregated objective. `m` bounds the ratio of
/// the reference policy's worst-case visitation measure to `rho`; `m_prime`
/// bounds the ratio between visitation measures across worst-case kernels;
/// `ratio` is the geometric stepsize growth `(1 - (1-gamma)/m)^{-1} m_prime`.
#[derive(Debug, Clone, Copy)]
pub struct MismatchConstants {
    pub m: f64,
    pub m_prime: f64,
    pub ratio: f64,
    /// True when obtained by sampling worst-case kernels (a lower estimate
    /// of the true suprema); false for the closed-form pessimistic bound.
    pub estimated: bool,
}

/// Estimates the mismatch constants. With a reference policy the suprema
/// over the uncertainty set are approximated from below by the worst-case
/// kernels of a deterministic sample of policies (plus the nominal kernel);
/// without one, the pessimistic bound `1 / ((1-gamma) min rho)` is returned
/// for both constants, which reduces to `|S| / (1-gamma)` under uniform rho.
pub fn pessimistic_constants(
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    rho: &StateDist,
    pi_star: Option<&Policy>,
) -> Result<MismatchConstants> {
    for (s, &w) in rho.weights.iter().enumerate() {
        if w <= 0.0 {
            return Err(Error::NoFullSupport(s));
        }
    }
    let gamma = mdp.gamma;
    let finish = |m: f64, m_prime: f64, estimated: bool| MismatchConstants {
        m,
        m_prime,
        ratio: m_prime / (1.0 - (1.0 - gamma) / m),
        estimated,
    };
    let Some(pi_star) = pi_star else {
        let bound = 1.0 / ((1.0 - gamma) * rho.min_weight());
        return Ok(finish(bound, bound, false));
    };

    let mut kernels = vec![mdp.nominal.clone()];
    let mut policies = vec![pi_star.clone(), Policy::uniform(mdp.n_states, mdp.n_actions)];
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d69736d61746368);
    for _ in 0..8 {
        let mut probs = Array2::zeros((mdp.n_states, mdp.n_actions));
        for s in 0..mdp.n_states {
            let row: Vec<f64> = (0..mdp.n_actions).map(|_| -(rng.gen::<f64>()).ln()).collect();
            let total: f64 = row.iter().sum();
            for (a, w) in row.iter().enumerate() {
                probs[[s, a]] = w / total;
            }
        }
        policies.push(Policy::new(probs).expect("sampled rows are stochastic"));
    }
    for policy in &policies {
        let eval = evaluate_robust(mdp, spec, policy, REFERENCE_TOL.max(1e-12))?;
        kernels.push(eval.worst_kernel);
    }
    let visits: Vec<Array1<f64>> = kernels
        .iter()
        .map(|kernel| occupancy(mdp, kernel, pi_star, rho).weights)
        .collect();
    let mut m = 1.0_f64;
    for d in &visits {
        for s in 0..mdp.n_states {
            m = m.max(d[s] / rho.weights[s]);
        }
    }
    let mut m_prime = 1.0_f64;
    for d in &visits {
        for d2 in &visits {
            for s in 0..mdp.n_states {
                // Visits are bounded below by (1-gamma) rho > 0.
                m_prime = m_prime.max(d[s] / d2[s]);
            }
        }
    }
    Ok(finish(m, m_prime, true))
}

/// Geometric schedule derived from the estimated mismatch constants.
pub fn auto_schedule(
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    rho: &StateDist,
    pi_star: Option<&Policy>,
) -> Result<(StepsizeSchedule, MismatchConstants)> {
    let constants = pessimistic_constants(mdp, spec, rho, pi_star)?;
    let schedule = StepsizeSchedule::Geometric {
        eta0: 1.0,
        ratio: constants.ratio.max(1.0),
        eta_cap: DEFAULT_ETA_CAP,
    };
    Ok((schedule, constants))
}

/// Deterministic robust policy mirror descent: per-state mirror steps against
/// the exact robust Q-table of the current iterate. Stops at `max_iters` or
/// when the gap against the value-iteration reference drops to `gap_tol`.
pub fn rpmd_solve(mdp: &TabularMdp, spec: &AmbiguitySpec, config: &SolverConfig) -> Result<RunLog> {
    mirror_loop(mdp, spec, config, Mode::Deterministic)
}

/// Stochastic robust policy mirror descent: identical to [`rpmd_solve`]
/// except the Q-table fed to every mirror step is an estimate (synthetic
/// bounded noise, or online temporal-difference evaluation). Runs for the
/// full iteration budget; with the Euclidean map and a constant stepsize the
/// log also reports a uniformly sampled iterate index.
pub fn srpmd_solve(
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    config: &SolverConfig,
) -> Result<RunLog> {
    let estimator = config
        .estimator
        .ok_or_else(|| Error::Invalid("SRPMD requires a Q estimator (noise or rtd)".into()))?;
    mirror_loop(mdp, spec, config, Mode::Stochastic(estimator))
}

/// Robust policy iteration: the new policy is the point mass on the
/// lowest-index minimizer of the current robust Q-table, state by state.
/// Stops when the policy repeats or the gap reaches `gap_tol`.
pub fn rpi_solve(mdp: &TabularMdp, spec: &AmbiguitySpec, config: &SolverConfig) -> Result<RunLog> {
    mirror_loop(mdp, spec, config, Mode::PolicyIteration)
}

#[derive(Clone, Copy)]
enum Mode {
    Deterministic,
    Stochastic(QEstimator),
    PolicyIteration,
}

fn greedy_policy(q: &Array2<f64>) -> Policy {
    let (ns, na) = q.dim();
    let mut actions = vec![0usize; ns];
    for s in 0..ns {
        let mut best = f64::INFINITY;
        for a in 0..na {
            if q[[s, a]] < best {
                best = q[[s, a]];
                actions[s] = a;
            }
        }
    }
    Policy::deterministic(na, &actions)
}

fn expected_bregman(
    map: MirrorMap,
    target: &Policy,
    base: &Policy,
    weights: &Array1<f64>,
) -> Result<f64> {
    let mut acc = 0.0;
    for s in 0..target.n_states() {
        if weights[s] == 0.0 {
            continue;
        }
        let t = target.probs.row(s).to_owned();
        let b = base.probs.row(s).to_owned();
        acc += weights[s] * bregman(map, &t, &b)?;
    }
    Ok(acc)
}

fn mirror_loop(
    mdp: &TabularMdp,
    spec: &AmbiguitySpec,
    config: &SolverConfig,
    mode: Mode,
) -> Result<RunLog> {
    config.validate()?;
    let rho = config.rho_or_uniform(mdp.n_states);
    let reference = rvi_solve(mdp, spec, REFERENCE_TOL)?;
    let f_star = rho.weights.dot(&reference.v_star);
    let pi_star = &reference.pi_star;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pi = Policy::uniform(mdp.n_states, mdp.n_actions);
    let mut prev_v: Option<Array1<f64>> = None;
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut policies: Vec<Policy> = Vec::new();
    let mut updates = 0usize;

    for k in 0..=config.max_iters {
        let iter_start = Instant::now();
        let eval = evaluate_robust(mdp, spec, &pi, config.eval_tol)?;
        let f = rho.weights.dot(&eval.v_r);
        let gap = (f - f_star).max(0.0);
        let max_value_decrease = prev_v
            .as_ref()
            .map(|pv| eval.v_r.iter().zip(pv.iter()).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max));

        // Visitation measure of the reference policy inside the current
        // iterate's worst-case kernel: the weights behind the contraction
        // recursion and its ratio bound.
        let d_star = occupancy(mdp, &eval.worst_kernel, pi_star, &rho);
        let m_hat = (0..mdp.n_states)
            .map(|s| d_star.weights[s] / rho.weights[s].max(f64::MIN_POSITIVE))
            .fold(1.0_f64, f64::max);
        let divergence_to_opt = expected_bregman(config.map, pi_star, &pi, &d_star.weights).ok();

        let stop = match mode {
            Mode::Stochastic(_) => k == config.max_iters,
            _ => k == config.max_iters || gap <= config.gap_tol,
        };

        if config.record_policies {
            policies.push(pi.clone());
        }

        let mut rtd_error = None;
        let (eta, next_pi, divergence_to_opt_next) = if stop {
            (Some(config.schedule.eta(k)), None, None)
        } else {
            let q_used = match mode {
                Mode::Deterministic | Mode::PolicyIteration => eval.q_r.clone(),
                Mode::Stochastic(QEstimator::SyntheticNoise { e }) => {
                    let mut q = eval.q_r.clone();
                    if e > 0.0 {
                        for value in q.iter_mut() {
                            *value += e * rng.gen_range(-1.0..=1.0);
                        }
                    } else {
                        // Keep the stream aligned with noisy runs.
                        for _ in 0..q.len() {
                            let _: f64 = rng.gen_range(-1.0..=1.0);
                        }
                    }
                    rtd_error = Some(max_abs_diff(&q, &eval.q_r));
                    q
                }
                Mode::Stochastic(QEstimator::Rtd { alpha, steps, mode: op_mode }) => {
                    let report = assumption_check(mdp, &pi);
                    if !report.satisfied() {
                        return Err(Error::AssumptionViolated(format!(
                            "iteration {k}: irreducible={}, aperiodic={}, pi_positive={}",
                            report.irreducible, report.aperiodic, report.pi_positive
                        )));
                    }
                    let rtd_config = RtdConfig {
                        alpha,
                        steps,
                        seed: rng.gen::<u64>(),
                        start_state: 0,
                        mode: op_mode,
                        trace_every: 0,
                    };
                    let out = rtd_evaluate(mdp, spec, &pi, &rtd_config)?;
                    rtd_error = Some(max_abs_diff(&out.theta, &eval.q_r));
                    out.theta
                }
            };
            let eta = config.schedule.eta(k);
            let next = match mode {
                Mode::PolicyIteration => greedy_policy(&q_used),
                _ => {
                    let mut probs = Array2::zeros((mdp.n_states, mdp.n_actions));
                    for s in 0..mdp.n_states {
                        let row = pi.probs.row(s).to_owned();
                        let q_row = q_used.row(s).to_owned();
                        let step = mirror_step(config.map, &row, &q_row, eta)?;
                        for a in 0..mdp.n_actions {
                            probs[[s, a]] = step[a];
                        }
                    }
                    Policy { probs }
                }
            };
            let div_next = expected_bregman(config.map, pi_star, &next, &d_star.weights).ok();
            updates += 1;
            (Some(eta), Some(next), div_next)
        };

        let policy_repeated = matches!(mode, Mode::PolicyIteration)
            && next_pi.as_ref().is_some_and(|n| n.probs == pi.probs);

        records.push(IterationRecord {
            k,
            eta: match mode {
                Mode::PolicyIteration => None,
                _ => eta,
            },
            f_rho: f,
            gap,
            max_value_decrease,
            divergence_to_opt,
            divergence_to_opt_next,
            m_hat: Some(m_hat),
            rtd_error,
            wall_ms: iter_start.elapsed().as_secs_f64() * 1e3,
        });

        match next_pi {
            Some(next) if !policy_repeated => {
                prev_v = Some(eval.v_r);
                pi = next;
            }
            _ => break,
        }
    }

    let selected_iterate = match (mode, config.map, config.schedule) {
        (
            Mode::Stochastic(_),
            MirrorMap::Euclidean,
            StepsizeSchedule::Constant { .. },
        ) if updates > 0 => Some(rng.gen_range(1..=updates)),
        _ => None,
    };

    Ok(RunLog {
        algorithm: match mode {
            Mode::Deterministic => "rpmd".into(),
            Mode::Stochastic(_) => "srpmd".into(),
            Mode::PolicyIteration => "rpi".into(),
        },
        gamma: mdp.gamma,
        records,
        final_policy: pi,
        f_star,
        selected_iterate,
        policies: config.record_policies.then_some(policies),
    })
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
