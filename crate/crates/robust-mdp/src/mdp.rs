//! Tabular MDP data model, standard (non-robust) evaluation, discounted
//! occupancy measures, and stationary analysis of the nominal chain.

use ndarray::{Array1, Array2, Array3};

use crate::error::{Error, Result};
use crate::linalg;

/// Row-sum tolerance for probability tables.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A finite MDP with cost table `cost[s, a]`, discount `gamma`, and nominal
/// transition kernel `nominal[s, a, s']`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub cost: Array2<f64>,
    pub gamma: f64,
    pub nominal: Array3<f64>,
}

impl TabularMdp {
    /// Builds an MDP and checks every structural invariant.
    pub fn new(cost: Array2<f64>, gamma: f64, nominal: Array3<f64>) -> Result<Self> {
        let (n_states, n_actions) = cost.dim();
        let mdp = Self { n_states, n_actions, cost, gamma, nominal };
        let report = validate_mdp(&mdp);
        if !report.is_valid() {
            return Err(Error::Invalid(report.violations.join("; ")));
        }
        Ok(mdp)
    }

    /// True iff every cost lies in (0, 1].
    pub fn normalized_costs(&self) -> bool {
        self.cost.iter().all(|&c| c > 0.0 && c <= 1.0)
    }

    pub fn nominal_row(&self, s: usize, a: usize) -> Array1<f64> {
        self.nominal.slice(ndarray::s![s, a, ..]).to_owned()
    }
}

/// A stationary randomized policy: `probs[s, a]` is the probability of
/// playing action `a` in state `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub probs: Array2<f64>,
}

impl Policy {
    pub fn new(probs: Array2<f64>) -> Result<Self> {
        for (s, row) in probs.outer_iter().enumerate() {
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Invalid(format!("policy row {s} sums to {sum}")));
            }
            if row.iter().any(|&p| p < 0.0) {
                return Err(Error::Invalid(format!("policy row {s} has a negative entry")));
            }
        }
        Ok(Self { probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self { probs: Array2::from_elem((n_states, n_actions), 1.0 / n_actions as f64) }
    }

    /// Deterministic policy playing `actions[s]` in state `s`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Self {
        let mut probs = Array2::zeros((actions.len(), n_actions));
        for (s, &a) in actions.iter().enumerate() {
            probs[[s, a]] = 1.0;
        }
        Self { probs }
    }

    pub fn n_states(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.probs.ncols()
    }

    pub fn min_prob(&self) -> f64 {
        self.probs.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// A probability distribution over states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDist {
    pub weights: Array1<f64>,
}

impl StateDist {
    pub fn new(weights: Array1<f64>) -> Result<Self> {
        let sum: f64 = weights.sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::Invalid(format!("state distribution sums to {sum}")));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Invalid("state distribution has a negative entry".into()));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n_states: usize) -> Self {
        Self { weights: Array1::from_elem(n_states, 1.0 / n_states as f64) }
    }

    pub fn point_mass(n_states: usize, s: usize) -> Self {
        let mut weights = Array1::zeros(n_states);
        weights[s] = 1.0;
        Self { weights }
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Outcome of [`validate_mdp`]: the list of violated invariants (empty when
/// the instance is well formed) and whether costs lie in (0, 1].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub normalized: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks shapes, row-stochasticity of the nominal kernel, the discount
/// range, and cost finiteness. Non-normalized costs are reported via the
/// `normalized` flag rather than as a violation.
pub fn validate_mdp(mdp: &TabularMdp) -> ValidationReport {
    let mut violations = Vec::new();
    let (ns, na) = (mdp.n_states, mdp.n_actions);
    if ns == 0 || na == 0 {
        violations.push("state and action spaces must be nonempty".to_string());
    }
    if mdp.cost.dim() != (ns, na) {
        violations.push(format!("cost table has shape {:?}, expected ({ns}, {na})", mdp.cost.dim()));
    }
    if mdp.nominal.dim() != (ns, na, ns) {
        violations.push(format!(
            "nominal kernel has shape {:?}, expected ({ns}, {na}, {ns})",
            mdp.nominal.dim()
        ));
    }
    if !(mdp.gamma > 0.0 && mdp.gamma < 1.0) {
        violations.push(format!("gamma = {} must lie strictly inside (0, 1)", mdp.gamma));
    }
    for ((s, a), &c) in mdp.cost.indexed_iter() {
        if !c.is_finite() {
            violations.push(format!("cost({s}, {a}) = {c} is not finite"));
        }
    }
    if mdp.nominal.dim() == (ns, na, ns) {
        for s in 0..ns {
            for a in 0..na {
                let row = mdp.nominal.slice(ndarray::s![s, a, ..]);
                let sum: f64 = row.sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    violations.push(format!("nominal row ({s}, {a}) sums to {sum}"));
                }
                if row.iter().any(|&p| p < 0.0) {
                    violations.push(format!("nominal row ({s}, {a}) has a negative entry"));
                }
            }
        }
    }
    ValidationReport { violations, normalized: mdp.normalized_costs() }
}

/// State-to-state transition matrix `P^pi(s, s') = sum_a pi(a|s) kernel[s,a,s']`.
pub fn policy_kernel(kernel: &Array3<f64>, policy: &Policy) -> Array2<f64> {
    let (ns, na, _) = kernel.dim();
    let mut p = Array2::zeros((ns, ns));
    for s in 0..ns {
        for a in 0..na {
            let w = policy.probs[[s, a]];
            if w == 0.0 {
                continue;
            }
            for s2 in 0..ns {
                p[[s, s2]] += w * kernel[[s, a, s2]];
            }
        }
    }
    p
}

/// Expected one-step cost `c^pi(s) = sum_a pi(a|s) c(s, a)`.
pub fn policy_cost(mdp: &TabularMdp, policy: &Policy) -> Array1<f64> {
    let mut c = Array1::zeros(mdp.n_states);
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            c[s] += policy.probs[[s, a]] * mdp.cost[[s, a]];
        }
    }
    c
}

/// Value of `policy` in the MDP with the given transition kernel, by solving
/// the linear Bellman system `V = c^pi + gamma P^pi V` with a dense LU
/// factorization. The system is nonsingular for any gamma < 1.
pub fn standard_value(mdp: &TabularMdp, kernel: &Array3<f64>, policy: &Policy) -> Array1<f64> {
    let p = policy_kernel(kernel, policy);
    let c = policy_cost(mdp, policy);
    // (I - gamma P) V = c
    let mut a = p.mapv(|x| -mdp.gamma * x);
    for s in 0..mdp.n_states {
        a[[s, s]] += 1.0;
    }
    linalg::solve(&a, &c).expect("Bellman system is nonsingular for gamma < 1")
}

/// State-action values under the given kernel:
/// `Q(s,a) = c(s,a) + gamma sum_{s'} kernel[s,a,s'] V(s')`.
pub fn standard_q(mdp: &TabularMdp, kernel: &Array3<f64>, policy: &Policy) -> Array2<f64> {
    let v = standard_value(mdp, kernel, policy);
    q_from_value(mdp, kernel, &v)
}

/// One-step lookahead Q-table from a state-value vector.
pub fn q_from_value(mdp: &TabularMdp, kernel: &Array3<f64>, v: &Array1<f64>) -> Array2<f64> {
    let mut q = Array2::zeros((mdp.n_states, mdp.n_actions));
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let mut exp = 0.0;
            for s2 in 0..mdp.n_states {
                exp += kernel[[s, a, s2]] * v[s2];
            }
            q[[s, a]] = mdp.cost[[s, a]] + mdp.gamma * exp;
        }
    }
    q
}

/// Discounted state visitation measure of `policy` under `kernel` started
/// from `rho`: `d = (1-gamma) (I - gamma (P^pi)^T)^{-1} rho`.
pub fn occupancy(
    mdp: &TabularMdp,
    kernel: &Array3<f64>,
    policy: &Policy,
    rho: &StateDist,
) -> StateDist {
    let p = policy_kernel(kernel, policy);
    let n = mdp.n_states;
    // (I - gamma P^T) x = rho, d = (1-gamma) x
    let mut a = Array2::zeros((n, n));
    for s in 0..n {
        for s2 in 0..n {
            a[[s, s2]] = -mdp.gamma * p[[s2, s]];
        }
        a[[s, s]] += 1.0;
    }
    let x = linalg::solve(&a, &rho.weights).expect("occupancy system is nonsingular for gamma < 1");
    StateDist { weights: x.mapv(|v| ((1.0 - mdp.gamma) * v).max(0.0)) }
}

/// Stationary state distribution of the state-to-state chain `p`, by direct
/// linear solve of the balance equations with a normalization row.
///
/// Fails with [`Error::NotIrreducible`] when the chain has more than one
/// closed communicating class (the stationary distribution is not unique).
pub fn stationary_state_dist(p: &Array2<f64>) -> Result<Array1<f64>> {
    let n = p.nrows();
    let closed = closed_communicating_classes(p);
    if closed != 1 {
        return Err(Error::NotIrreducible(closed));
    }
    // Solve (P^T - I) mu = 0 with the last balance row replaced by sum(mu) = 1.
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] = p[[j, i]];
        }
        a[[i, i]] -= 1.0;
    }
    for j in 0..n {
        a[[n - 1, j]] = 1.0;
    }
    let mut b = Array1::zeros(n);
    b[n - 1] = 1.0;
    let mu = linalg::solve(&a, &b)
        .ok_or_else(|| Error::Invalid("singular stationarity system".into()))?;
    Ok(mu.mapv(|x| x.max(0.0)))
}

/// Stationary distribution over state-action pairs of the chain induced by
/// `policy` in the nominal environment, flattened as `s * n_actions + a`,
/// together with its minimum entry.
pub fn stationary_state_action_dist(
    mdp: &TabularMdp,
    policy: &Policy,
) -> Result<(Array1<f64>, f64)> {
    stationary_state_action_dist_under(&mdp.nominal, policy)
}

/// Same as [`stationary_state_action_dist`] but for an arbitrary kernel.
pub fn stationary_state_action_dist_under(
    kernel: &Array3<f64>,
    policy: &Policy,
) -> Result<(Array1<f64>, f64)> {
    let (ns, na, _) = kernel.dim();
    let p = policy_kernel(kernel, policy);
    let mu = stationary_state_dist(&p)?;
    let mut nu = Array1::zeros(ns * na);
    for s in 0..ns {
        for a in 0..na {
            nu[s * na + a] = mu[s] * policy.probs[[s, a]];
        }
    }
    let total: f64 = nu.sum();
    nu.mapv_inplace(|x| x / total);
    let nu_min = nu.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((nu, nu_min))
}

/// Ergodicity report for the nominal chain under `policy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssumptionReport {
    pub irreducible: bool,
    pub aperiodic: bool,
    pub pi_positive: bool,
}

impl AssumptionReport {
    pub fn satisfied(&self) -> bool {
        self.irreducible && self.aperiodic && self.pi_positive
    }
}

/// Checks that `policy` is strictly positive and that the nominal state chain
/// it induces is irreducible (strong connectivity of the positive-transition
/// digraph) and aperiodic (some power m <= (n-1)^2 + 1 of the chain is
/// elementwise positive).
pub fn assumption_check(mdp: &TabularMdp, policy: &Policy) -> AssumptionReport {
    let p = policy_kernel(&mdp.nominal, policy);
    let pi_positive = policy.min_prob() > 0.0;
    let irreducible = strongly_connected(&p);
    let aperiodic = irreducible && primitive(&p);
    AssumptionReport { irreducible, aperiodic, pi_positive }
}

fn reachable_from(adj: &[Vec<usize>], start: usize, n: usize) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

fn adjacency(p: &Array2<f64>) -> Vec<Vec<usize>> {
    let n = p.nrows();
    (0..n)
        .map(|s| (0..n).filter(|&s2| p[[s, s2]] > 0.0).collect())
        .collect()
}

/// Strong connectivity of the positive-transition digraph.
pub fn strongly_connected(p: &Array2<f64>) -> bool {
    let n = p.nrows();
    if n == 0 {
        return false;
    }
    let adj = adjacency(p);
    if !reachable_from(&adj, 0, n).iter().all(|&r| r) {
        return false;
    }
    let mut radj = vec![Vec::new(); n];
    for (u, vs) in adj.iter().enumerate() {
        for &v in vs {
            radj[v].push(u);
        }
    }
    reachable_from(&radj, 0, n).iter().all(|&r| r)
}

/// Primitivity test: some boolean power m <= (n-1)^2 + 1 is all-positive.
fn primitive(p: &Array2<f64>) -> bool {
    let n = p.nrows();
    let cap = (n - 1) * (n - 1) + 1;
    let base: Vec<Vec<bool>> =
        (0..n).map(|i| (0..n).map(|j| p[[i, j]] > 0.0).collect()).collect();
    let mut power = base.clone();
    for _ in 0..cap {
        if power.iter().all(|row| row.iter().all(|&b| b)) {
            return true;
        }
        let mut next = vec![vec![false; n]; n];
        for i in 0..n {
            for k in 0..n {
                if power[i][k] {
                    for j in 0..n {
                        if base[k][j] {
                            next[i][j] = true;
                        }
                    }
                }
            }
        }
        if next == power {
            break;
        }
        power = next;
    }
    power.iter().all(|row| row.iter().all(|&b| b))
}

/// Number of closed communicating classes (SCCs with no outgoing edge) of the
/// positive-transition digraph.
pub fn closed_communicating_classes(p: &Array2<f64>) -> usize {
    let n = p.nrows();
    let adj = adjacency(p);
    // Tarjan-style SCC via two-pass Kosaraju on a matrix this small is fine.
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        // Iterative post-order DFS.
        let mut stack = vec![(s, 0usize)];
        seen[s] = true;
        while let Some(&mut (u, ref mut idx)) = stack.last_mut() {
            if *idx < adj[u].len() {
                let v = adj[u][*idx];
                *idx += 1;
                if !seen[v] {
                    seen[v] = true;
                    stack.push((v, 0));
                }
            } else {
                order.push(u);
                stack.pop();
            }
        }
    }
    let mut radj = vec![Vec::new(); n];
    for (u, vs) in adj.iter().enumerate() {
        for &v in vs {
            radj[v].push(u);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut n_comp = 0;
    for &s in order.iter().rev() {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = n_comp;
        while let Some(u) = stack.pop() {
            for &v in &radj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = n_comp;
                    stack.push(v);
                }
            }
        }
        n_comp += 1;
    }
    let mut closed = vec![true; n_comp];
    for (u, vs) in adj.iter().enumerate() {
        for &v in vs {
            if comp[u] != comp[v] {
                closed[comp[u]] = false;
            }
        }
    }
    closed.iter().filter(|&&c| c).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2, arr3};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn single_state_mdp(cost: f64, gamma: f64) -> TabularMdp {
        TabularMdp::new(arr2(&[[cost]]), gamma, arr3(&[[[1.0]]])).unwrap()
    }

    /// 2-state deterministic cycle, one action.
    fn two_state_cycle(gamma: f64) -> TabularMdp {
        TabularMdp::new(
            arr2(&[[0.0], [0.0]]),
            gamma,
            arr3(&[[[0.0, 1.0]], [[1.0, 0.0]]]),
        )
        .unwrap()
    }

    pub(crate) fn random_mdp(ns: usize, na: usize, gamma: f64, rng: &mut ChaCha8Rng) -> TabularMdp {
        let mut nominal = Array3::zeros((ns, na, ns));
        for s in 0..ns {
            for a in 0..na {
                let mut row: Vec<f64> = (0..ns).map(|_| -(rng.gen::<f64>()).ln()).collect();
                let sum: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x /= sum);
                for (s2, &w) in row.iter().enumerate() {
                    nominal[[s, a, s2]] = w;
                }
            }
        }
        let cost = Array2::from_shape_fn((ns, na), |_| 1.0 - rng.gen::<f64>());
        TabularMdp::new(cost, gamma, nominal).unwrap()
    }

    pub(crate) fn random_policy(ns: usize, na: usize, rng: &mut ChaCha8Rng) -> Policy {
        let mut probs = Array2::zeros((ns, na));
        for s in 0..ns {
            let row: Vec<f64> = (0..na).map(|_| -(rng.gen::<f64>()).ln()).collect();
            let sum: f64 = row.iter().sum();
            for (a, &w) in row.iter().enumerate() {
                probs[[s, a]] = w / sum;
            }
        }
        Policy::new(probs).unwrap()
    }

    #[test]
    fn validate_accepts_well_formed() {
        let mdp = two_state_cycle(0.5);
        let report = validate_mdp(&mdp);
        assert!(report.is_valid());
    }

    #[test]
    fn validate_names_bad_row() {
        let mut nominal = arr3(&[[[0.0, 1.0]], [[1.0, 0.0]]]);
        nominal[[1, 0, 0]] = 0.9;
        let mdp = TabularMdp {
            n_states: 2,
            n_actions: 1,
            cost: arr2(&[[0.0], [0.0]]),
            gamma: 0.5,
            nominal,
        };
        let report = validate_mdp(&mdp);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].contains("(1, 0)"));
    }

    #[test]
    fn negative_costs_flag_normalization_only() {
        let mut mdp = two_state_cycle(0.5);
        mdp.cost[[0, 0]] = -1.0;
        let report = validate_mdp(&mdp);
        assert!(report.is_valid());
        assert!(!report.normalized);
    }

    #[test]
    fn value_single_state_geometric_series() {
        let mdp = single_state_mdp(1.0, 0.5);
        let policy = Policy::uniform(1, 1);
        let v = standard_value(&mdp, &mdp.nominal.clone(), &policy);
        assert!((v[0] - 2.0).abs() < 1e-12);
        let q = standard_q(&mdp, &mdp.nominal.clone(), &policy);
        assert!((q[[0, 0]] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn value_zero_costs_is_zero() {
        let mdp = two_state_cycle(0.9);
        let policy = Policy::uniform(2, 1);
        let v = standard_value(&mdp, &mdp.nominal.clone(), &policy);
        assert!(v.iter().all(|&x| x.abs() < 1e-12));
        let q = standard_q(&mdp, &mdp.nominal.clone(), &policy);
        assert!(q.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn value_residual_small_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mdp = random_mdp(4, 3, 0.9, &mut rng);
            let policy = random_policy(4, 3, &mut rng);
            let v = standard_value(&mdp, &mdp.nominal.clone(), &policy);
            let p = policy_kernel(&mdp.nominal, &policy);
            let c = policy_cost(&mdp, &policy);
            let residual = (0..4)
                .map(|s| {
                    let pv: f64 = (0..4).map(|s2| p[[s, s2]] * v[s2]).sum();
                    (v[s] - c[s] - mdp.gamma * pv).abs()
                })
                .fold(0.0, f64::max);
            assert!(residual <= 1e-10, "residual {residual}");
        }
    }

    #[test]
    fn q_consistent_with_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mdp = random_mdp(4, 3, 0.85, &mut rng);
        let policy = random_policy(4, 3, &mut rng);
        let v = standard_value(&mdp, &mdp.nominal.clone(), &policy);
        let q = standard_q(&mdp, &mdp.nominal.clone(), &policy);
        for s in 0..4 {
            let qv: f64 = (0..3).map(|a| q[[s, a]] * policy.probs[[s, a]]).sum();
            assert!((qv - v[s]).abs() <= 1e-9);
        }
    }

    #[test]
    fn occupancy_self_loop_is_point_mass() {
        let mdp = single_state_mdp(1.0, 0.3);
        let policy = Policy::uniform(1, 1);
        let d = occupancy(&mdp, &mdp.nominal.clone(), &policy, &StateDist::point_mass(1, 0));
        assert!((d.weights[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn occupancy_two_state_cycle_closed_form() {
        // From state 0 with gamma = 0.5 the discounted visits are
        // (1-g)(1 + g^2 + ...) at state 0 and (1-g)(g + g^3 + ...) at state 1,
        // i.e. (2/3, 1/3). Cross-checked by a truncated-series oracle below.
        let mdp = two_state_cycle(0.5);
        let policy = Policy::uniform(2, 1);
        let rho = StateDist::point_mass(2, 0);
        let d = occupancy(&mdp, &mdp.nominal.clone(), &policy, &rho);
        assert!((d.weights[0] - 2.0 / 3.0).abs() < 1e-10);
        assert!((d.weights[1] - 1.0 / 3.0).abs() < 1e-10);
    }

    /// Truncated-series oracle: d ~= (1-g) sum_{t<=T} g^t (P^T)^t rho.
    fn occupancy_series(
        mdp: &TabularMdp,
        policy: &Policy,
        rho: &StateDist,
        horizon: usize,
    ) -> Array1<f64> {
        let p = policy_kernel(&mdp.nominal, policy);
        let n = mdp.n_states;
        let mut cur = rho.weights.clone();
        let mut acc = Array1::<f64>::zeros(n);
        let mut scale = 1.0;
        for _ in 0..=horizon {
            acc = acc + cur.mapv(|x| x * scale);
            scale *= mdp.gamma;
            let mut next = Array1::zeros(n);
            for s in 0..n {
                for s2 in 0..n {
                    next[s2] += cur[s] * p[[s, s2]];
                }
            }
            cur = next;
        }
        acc.mapv(|x| x * (1.0 - mdp.gamma))
    }

    #[test]
    fn occupancy_matches_truncated_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mdp = random_mdp(5, 2, 0.8, &mut rng);
            let policy = random_policy(5, 2, &mut rng);
            let rho = StateDist::uniform(5);
            let d = occupancy(&mdp, &mdp.nominal.clone(), &policy, &rho);
            let horizon = 60;
            let oracle = occupancy_series(&mdp, &policy, &rho, horizon);
            let bound = mdp.gamma.powi(horizon as i32 + 1) / (1.0 - mdp.gamma);
            for s in 0..5 {
                assert!((d.weights[s] - oracle[s]).abs() <= bound + 1e-12);
            }
            assert!((d.weights.sum() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn occupancy_start_state_lower_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let mdp = random_mdp(4, 2, 0.9, &mut rng);
            let policy = random_policy(4, 2, &mut rng);
            for s in 0..4 {
                let d = occupancy(&mdp, &mdp.nominal.clone(), &policy, &StateDist::point_mass(4, s));
                assert!(d.weights[s] >= 1.0 - mdp.gamma - 1e-12);
            }
        }
    }

    #[test]
    fn stationary_single_state() {
        let mdp = single_state_mdp(1.0, 0.5);
        let (nu, nu_min) = stationary_state_action_dist(&mdp, &Policy::uniform(1, 1)).unwrap();
        assert!((nu[0] - 1.0).abs() < 1e-12);
        assert!((nu_min - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_two_state_swap() {
        let mdp = two_state_cycle(0.5);
        let (nu, _) = stationary_state_action_dist(&mdp, &Policy::uniform(2, 1)).unwrap();
        assert!((nu[0] - 0.5).abs() < 1e-10);
        assert!((nu[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn stationary_matches_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mdp = random_mdp(3, 2, 0.9, &mut rng);
        let policy = random_policy(3, 2, &mut rng);
        let (nu, nu_min) = stationary_state_action_dist(&mdp, &policy).unwrap();
        // Power-iteration oracle on the state chain.
        let p = policy_kernel(&mdp.nominal, &policy);
        let mut mu = Array1::from_elem(3, 1.0 / 3.0);
        for _ in 0..10_000 {
            let mut next = Array1::zeros(3);
            for s in 0..3 {
                for s2 in 0..3 {
                    next[s2] += mu[s] * p[[s, s2]];
                }
            }
            let delta: f64 = (&next - &mu).iter().map(|x: &f64| x.abs()).sum();
            mu = next;
            if delta < 1e-13 {
                break;
            }
        }
        for s in 0..3 {
            for a in 0..2 {
                assert!((nu[s * 2 + a] - mu[s] * policy.probs[[s, a]]).abs() <= 1e-8);
            }
        }
        assert!(nu_min > 0.0);
        // Stationarity of the state-action chain itself.
        let mut next = Array1::<f64>::zeros(6);
        for s in 0..3 {
            for a in 0..2 {
                for s2 in 0..3 {
                    for a2 in 0..2 {
                        next[s2 * 2 + a2] +=
                            nu[s * 2 + a] * mdp.nominal[[s, a, s2]] * policy.probs[[s2, a2]];
                    }
                }
            }
        }
        for i in 0..6 {
            assert!((next[i] - nu[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn stationary_rejects_two_closed_classes() {
        // Two absorbing states.
        let mdp = TabularMdp::new(
            arr2(&[[0.0], [0.0]]),
            0.5,
            arr3(&[[[1.0, 0.0]], [[0.0, 1.0]]]),
        )
        .unwrap();
        let err = stationary_state_action_dist(&mdp, &Policy::uniform(2, 1)).unwrap_err();
        assert!(matches!(err, Error::NotIrreducible(2)));
    }

    #[test]
    fn assumption_check_single_state() {
        let mdp = single_state_mdp(1.0, 0.5);
        let rep = assumption_check(&mdp, &Policy::uniform(1, 1));
        assert!(rep.irreducible && rep.aperiodic && rep.pi_positive);
    }

    #[test]
    fn assumption_check_two_state_swap_periodic() {
        let mdp = two_state_cycle(0.5);
        let rep = assumption_check(&mdp, &Policy::uniform(2, 1));
        assert!(rep.irreducible);
        assert!(!rep.aperiodic);
    }

    #[test]
    fn assumption_check_absorbing_not_irreducible() {
        let mdp = TabularMdp::new(
            arr2(&[[0.0], [0.0]]),
            0.5,
            arr3(&[[[0.0, 1.0]], [[0.0, 1.0]]]),
        )
        .unwrap();
        let rep = assumption_check(&mdp, &Policy::uniform(2, 1));
        assert!(!rep.irreducible);
        // Reachability oracle: state 0 unreachable from state 1.
        let d = occupancy(
            &mdp,
            &mdp.nominal.clone(),
            &Policy::uniform(2, 1),
            &StateDist::point_mass(2, 1),
        );
        assert_eq!(d.weights[0], 0.0);
    }

    #[test]
    fn rejects_bad_gamma() {
        let err = TabularMdp::new(arr2(&[[1.0]]), 1.0, arr3(&[[[1.0]]])).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    #[test]
    fn policy_rows_must_sum_to_one() {
        assert!(Policy::new(arr2(&[[0.4, 0.5]])).is_err());
        assert!(StateDist::new(arr1(&[0.4, 0.5])).is_err());
    }
}
