//! Rectangular ambiguity sets over next-state distributions, and the support
//! queries every robust operator reduces to: the maximum of `p . v` over the
//! admissible rows at a state-action pair, together with a maximizing row.
//!
//! All tie-breaking is lowest-index-first so that runs are reproducible.

use ndarray::{Array1, Array3};

use crate::error::{Error, Result};
use crate::linalg;
use crate::mdp::TabularMdp;

/// Membership tolerance (l1) for rows returned by support queries.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Reference set of the contamination mixture.
#[derive(Debug, Clone, PartialEq)]
pub enum QSet {
    /// The full probability simplex over states.
    Full,
    /// A finite list of probability vectors, maximized over its members.
    FiniteList(Vec<Array1<f64>>),
}

/// Ambiguity description for a single state-action pair.
#[derive(Debug, Clone, PartialEq)]
pub enum PairAmbiguity {
    /// Only the nominal row.
    Singleton,
    /// A finite list of admissible rows for this pair.
    Rows(Vec<Array1<f64>>),
    /// Mixtures `(1-eps) * nominal + eps * q` with `q` in the reference set.
    Contamination { epsilon: f64, q_set: QSet },
    /// All rows within l1 distance `radius` of the nominal row.
    L1Ball { radius: f64 },
}

/// A rectangular ambiguity set: one set of admissible next-state rows per
/// state-action pair. Uniform variants share a description across all pairs;
/// `Scenarios` shares a list of full kernels whose `(s, a)` rows form each
/// pair's set; `PerPair` assigns an explicit description to every pair.
#[derive(Debug, Clone, PartialEq)]
pub enum AmbiguitySpec {
    Singleton,
    Scenarios { kernels: Vec<Array3<f64>> },
    Contamination { epsilon: f64, q_set: QSet },
    L1Ball { radius: f64 },
    PerPair { table: Vec<PairAmbiguity> },
}

impl AmbiguitySpec {
    /// Ambiguity description of pair `(s, a)` for an MDP with `na` actions.
    pub fn pair(&self, s: usize, a: usize, na: usize) -> PairAmbiguity {
        match self {
            AmbiguitySpec::Singleton => PairAmbiguity::Singleton,
            AmbiguitySpec::Scenarios { kernels } => PairAmbiguity::Rows(
                kernels.iter().map(|k| k.slice(ndarray::s![s, a, ..]).to_owned()).collect(),
            ),
            AmbiguitySpec::Contamination { epsilon, q_set } => {
                PairAmbiguity::Contamination { epsilon: *epsilon, q_set: q_set.clone() }
            }
            AmbiguitySpec::L1Ball { radius } => PairAmbiguity::L1Ball { radius: *radius },
            AmbiguitySpec::PerPair { table } => table[s * na + a].clone(),
        }
    }

    /// Contamination parameters shared by every pair, when the spec is a
    /// uniform contamination model.
    pub fn contamination(&self) -> Option<(f64, &QSet)> {
        match self {
            AmbiguitySpec::Contamination { epsilon, q_set } => Some((*epsilon, q_set)),
            _ => None,
        }
    }
}

/// A maximizing row and its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPoint {
    pub value: f64,
    pub p_star: Array1<f64>,
}

/// Maximizes `p . v` over the ambiguity set of pair `(s, a)`.
///
/// Scenario lists are scanned with first-maximum tie-breaking. Contamination
/// against the full simplex puts the contaminated mass on the lowest-index
/// argmax of `v`. The l1 ball moves up to `radius / 2` of probability mass
/// from the lowest-`v` states onto the single highest-`v` state.
pub fn support_argmax(
    spec: &AmbiguitySpec,
    mdp: &TabularMdp,
    s: usize,
    a: usize,
    v: &Array1<f64>,
) -> Result<SupportPoint> {
    let nominal = mdp.nominal_row(s, a);
    match spec.pair(s, a, mdp.n_actions) {
        PairAmbiguity::Singleton => Ok(SupportPoint { value: nominal.dot(v), p_star: nominal }),
        PairAmbiguity::Rows(rows) => {
            if rows.is_empty() {
                return Err(Error::EmptySet { state: s, action: a });
            }
            let mut best = 0usize;
            let mut best_value = rows[0].dot(v);
            for (i, row) in rows.iter().enumerate().skip(1) {
                let value = row.dot(v);
                if value > best_value {
                    best_value = value;
                    best = i;
                }
            }
            Ok(SupportPoint { value: best_value, p_star: rows[best].clone() })
        }
        PairAmbiguity::Contamination { epsilon, q_set } => match q_set {
            QSet::Full => {
                let s_star = argmax_lowest_index(v);
                let mut p_star = nominal.mapv(|p| (1.0 - epsilon) * p);
                p_star[s_star] += epsilon;
                Ok(SupportPoint { value: p_star.dot(v), p_star })
            }
            QSet::FiniteList(qs) => {
                if qs.is_empty() {
                    return Err(Error::EmptySet { state: s, action: a });
                }
                let mut best = 0usize;
                let mut best_qv = qs[0].dot(v);
                for (i, q) in qs.iter().enumerate().skip(1) {
                    let qv = q.dot(v);
                    if qv > best_qv {
                        best_qv = qv;
                        best = i;
                    }
                }
                let p_star = &nominal.mapv(|p| (1.0 - epsilon) * p) + &qs[best].mapv(|q| epsilon * q);
                Ok(SupportPoint { value: p_star.dot(v), p_star })
            }
        },
        PairAmbiguity::L1Ball { radius } => Ok(l1_greedy(&nominal, v, radius)),
    }
}

/// Support value of the perturbation set alone:
/// `sigma(v) = max_{p in P_{s,a}} p.v - nominal.v`. Nonnegative because the
/// nominal row always belongs to the ambiguity set, and zero for constant `v`
/// since perturbations sum to zero.
pub fn support_value_of_u(
    spec: &AmbiguitySpec,
    mdp: &TabularMdp,
    s: usize,
    a: usize,
    v: &Array1<f64>,
) -> Result<f64> {
    let point = support_argmax(spec, mdp, s, a, v)?;
    Ok(point.value - mdp.nominal_row(s, a).dot(v))
}

fn argmax_lowest_index(v: &Array1<f64>) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// Greedy mass transfer for the l1 ball: donate from strictly-lower-`v`
/// states in ascending `v` order (index order on ties) to the lowest-index
/// argmax of `v`, spending at most `radius / 2` of probability.
fn l1_greedy(nominal: &Array1<f64>, v: &Array1<f64>, radius: f64) -> SupportPoint {
    let n = nominal.len();
    let receiver = argmax_lowest_index(v);
    let mut p = nominal.clone();
    let mut budget = radius / 2.0;
    let mut donors: Vec<usize> = (0..n).filter(|&i| v[i] < v[receiver]).collect();
    donors.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap().then(i.cmp(&j)));
    for i in donors {
        if budget <= 0.0 {
            break;
        }
        let take = budget.min(p[i]);
        p[i] -= take;
        p[receiver] += take;
        budget -= take;
    }
    SupportPoint { value: p.dot(v), p_star: p }
}

/// l1 distance between a candidate row and the nominal row.
pub fn l1_distance(p: &Array1<f64>, q: &Array1<f64>) -> f64 {
    p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs()).sum()
}

/// Checks that `p` is a probability vector inside the pair's ambiguity set,
/// up to [`MEMBERSHIP_TOL`].
pub fn is_member(
    spec: &AmbiguitySpec,
    mdp: &TabularMdp,
    s: usize,
    a: usize,
    p: &Array1<f64>,
) -> bool {
    let sum: f64 = p.sum();
    if (sum - 1.0).abs() > MEMBERSHIP_TOL || p.iter().any(|&x| x < -MEMBERSHIP_TOL) {
        return false;
    }
    let nominal = mdp.nominal_row(s, a);
    match spec.pair(s, a, mdp.n_actions) {
        PairAmbiguity::Singleton => l1_distance(p, &nominal) <= MEMBERSHIP_TOL,
        PairAmbiguity::Rows(rows) => rows.iter().any(|row| l1_distance(p, row) <= MEMBERSHIP_TOL),
        PairAmbiguity::L1Ball { radius } => l1_distance(p, &nominal) <= radius + MEMBERSHIP_TOL,
        PairAmbiguity::Contamination { epsilon, q_set } => {
            if epsilon == 0.0 {
                return l1_distance(p, &nominal) <= MEMBERSHIP_TOL;
            }
            // Recover q = (p - (1-eps) nominal) / eps and check it.
            let q = p
                .iter()
                .zip(nominal.iter())
                .map(|(&pi, &ni)| (pi - (1.0 - epsilon) * ni) / epsilon)
                .collect::<Array1<f64>>();
            let q_sum: f64 = q.sum();
            if (q_sum - 1.0).abs() > MEMBERSHIP_TOL || q.iter().any(|&x| x < -MEMBERSHIP_TOL) {
                return false;
            }
            match q_set {
                QSet::Full => true,
                QSet::FiniteList(qs) => qs.iter().any(|c| l1_distance(&q, c) <= MEMBERSHIP_TOL),
            }
        }
    }
}

/// Maximum state-space size accepted by [`brute_force_support`].
pub const BRUTE_FORCE_MAX_STATES: usize = 5;

/// Independent support oracle for tiny instances: exhaustive vertex
/// enumeration for scenario and finite-contamination sets, analytic simplex
/// vertices for full contamination, and vertex enumeration of the
/// simplex-intersected l1 ball (active-constraint enumeration) for l1 sets.
/// Intended for tests; rejects instances with more than
/// [`BRUTE_FORCE_MAX_STATES`] states.
pub fn brute_force_support(
    spec: &AmbiguitySpec,
    mdp: &TabularMdp,
    s: usize,
    a: usize,
    v: &Array1<f64>,
) -> Result<f64> {
    if mdp.n_states > BRUTE_FORCE_MAX_STATES {
        return Err(Error::TooLarge { max: BRUTE_FORCE_MAX_STATES, got: mdp.n_states });
    }
    let nominal = mdp.nominal_row(s, a);
    match spec.pair(s, a, mdp.n_actions) {
        PairAmbiguity::Singleton => Ok(nominal.dot(v)),
        PairAmbiguity::Rows(rows) => {
            if rows.is_empty() {
                return Err(Error::EmptySet { state: s, action: a });
            }
            Ok(rows.iter().map(|r| r.dot(v)).fold(f64::NEG_INFINITY, f64::max))
        }
        PairAmbiguity::Contamination { epsilon, q_set } => {
            let base = (1.0 - epsilon) * nominal.dot(v);
            match q_set {
                QSet::Full => {
                    // Extreme points of the simplex are the unit vectors.
                    let best = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    Ok(base + epsilon * best)
                }
                QSet::FiniteList(qs) => {
                    if qs.is_empty() {
                        return Err(Error::EmptySet { state: s, action: a });
                    }
                    let best = qs.iter().map(|q| q.dot(v)).fold(f64::NEG_INFINITY, f64::max);
                    Ok(base + epsilon * best)
                }
            }
        }
        PairAmbiguity::L1Ball { radius } => Ok(l1_vertex_lp(&nominal, v, radius)),
    }
}

/// Exact LP value of `max p.v` over `{p in simplex : |p - nominal|_1 <= r}`
/// by enumerating basic feasible points. The polytope's facets are the
/// simplex faces `p_i = 0` and the l1 facets `sign . (p - nominal) = r` for
/// every sign vector; every vertex solves `n` active constraints including
/// the simplex equality.
fn l1_vertex_lp(nominal: &Array1<f64>, v: &Array1<f64>, radius: f64) -> f64 {
    let n = nominal.len();
    let feasible = |p: &Array1<f64>| -> bool {
        let sum: f64 = p.sum();
        (sum - 1.0).abs() <= 1e-9
            && p.iter().all(|&x| x >= -1e-9)
            && l1_distance(p, nominal) <= radius + 1e-9
    };
    let mut best = nominal.dot(v);

    // Constraint rows: index < n encodes p_i = 0; index >= n encodes the l1
    // facet with sign pattern (index - n) read as a bitmask.
    let n_constraints = n + (1 << n);
    let mut chosen: Vec<usize> = Vec::with_capacity(n.saturating_sub(1));
    enumerate_vertices(
        n,
        n_constraints,
        &mut chosen,
        0,
        &mut |active: &[usize]| {
            let mut mat = ndarray::Array2::<f64>::zeros((n, n));
            let mut rhs = Array1::<f64>::zeros(n);
            for j in 0..n {
                mat[[0, j]] = 1.0;
            }
            rhs[0] = 1.0;
            for (row, &c) in active.iter().enumerate() {
                let row = row + 1;
                if c < n {
                    mat[[row, c]] = 1.0;
                    rhs[row] = 0.0;
                } else {
                    let mask = c - n;
                    let mut dot_nominal = 0.0;
                    for j in 0..n {
                        let sign = if mask >> j & 1 == 1 { 1.0 } else { -1.0 };
                        mat[[row, j]] = sign;
                        dot_nominal += sign * nominal[j];
                    }
                    rhs[row] = radius + dot_nominal;
                }
            }
            if let Some(p) = linalg::solve(&mat, &rhs) {
                if feasible(&p) {
                    let value = p.dot(v);
                    if value > best {
                        best = value;
                    }
                }
            }
        },
    );
    best
}

fn enumerate_vertices(
    n: usize,
    n_constraints: usize,
    chosen: &mut Vec<usize>,
    start: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if chosen.len() == n - 1 {
        visit(chosen);
        return;
    }
    for c in start..n_constraints {
        chosen.push(c);
        enumerate_vertices(n, n_constraints, chosen, c + 1, visit);
        chosen.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr3, Array2};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// An MDP where every state-action pair shares the given nominal row.
    fn mdp_with_row(row: &[f64]) -> TabularMdp {
        let n = row.len();
        let mut nominal = ndarray::Array3::zeros((n, 1, n));
        for s in 0..n {
            for (s2, &p) in row.iter().enumerate() {
                nominal[[s, 0, s2]] = p;
            }
        }
        TabularMdp::new(Array2::from_elem((n, 1), 1.0), 0.9, nominal).unwrap()
    }

    fn random_row(n: usize, rng: &mut ChaCha8Rng) -> Array1<f64> {
        let mut row: Vec<f64> = (0..n).map(|_| -(rng.gen::<f64>()).ln()).collect();
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= sum);
        Array1::from_vec(row)
    }

    fn random_spec(n: usize, rng: &mut ChaCha8Rng) -> AmbiguitySpec {
        match rng.gen_range(0..4) {
            0 => AmbiguitySpec::Singleton,
            1 => AmbiguitySpec::Contamination {
                epsilon: rng.gen_range(0.0..1.0),
                q_set: if rng.gen_bool(0.5) {
                    QSet::Full
                } else {
                    QSet::FiniteList((0..3).map(|_| random_row(n, rng)).collect())
                },
            },
            2 => AmbiguitySpec::L1Ball { radius: rng.gen_range(0.0..1.5) },
            _ => {
                let mut kernels = Vec::new();
                for _ in 0..3 {
                    let mut k = ndarray::Array3::zeros((n, 1, n));
                    for s in 0..n {
                        let row = random_row(n, rng);
                        for s2 in 0..n {
                            k[[s, 0, s2]] = row[s2];
                        }
                    }
                    kernels.push(k);
                }
                AmbiguitySpec::Scenarios { kernels }
            }
        }
    }

    #[test]
    fn singleton_returns_nominal() {
        let mdp = mdp_with_row(&[0.3, 0.7]);
        let v = arr1(&[2.0, -1.0]);
        let point = support_argmax(&AmbiguitySpec::Singleton, &mdp, 0, 0, &v).unwrap();
        assert!((point.value - (0.3 * 2.0 - 0.7)).abs() < 1e-12);
        assert_eq!(point.p_star, arr1(&[0.3, 0.7]));
        assert_eq!(support_value_of_u(&AmbiguitySpec::Singleton, &mdp, 0, 0, &v).unwrap(), 0.0);
    }

    #[test]
    fn contamination_full_closed_form() {
        let mdp = mdp_with_row(&[0.5, 0.5]);
        let spec = AmbiguitySpec::Contamination { epsilon: 0.2, q_set: QSet::Full };
        let v = arr1(&[1.0, 0.0]);
        let point = support_argmax(&spec, &mdp, 0, 0, &v).unwrap();
        assert!((point.value - 0.6).abs() < 1e-12);
        assert!((point.p_star[0] - 0.7).abs() < 1e-12);
        assert!((point.p_star[1] - 0.3).abs() < 1e-12);
        let sigma = support_value_of_u(&spec, &mdp, 0, 0, &v).unwrap();
        assert!((sigma - 0.1).abs() < 1e-12);
        // Vertex-enumeration oracle agrees.
        let oracle = brute_force_support(&spec, &mdp, 0, 0, &v).unwrap();
        assert!((oracle - 0.6).abs() < 1e-12);
    }

    #[test]
    fn l1_ball_closed_form() {
        let mdp = mdp_with_row(&[0.5, 0.5]);
        let spec = AmbiguitySpec::L1Ball { radius: 0.4 };
        let v = arr1(&[1.0, 0.0]);
        let point = support_argmax(&spec, &mdp, 0, 0, &v).unwrap();
        assert!((point.value - 0.7).abs() < 1e-12);
        assert!((point.p_star[0] - 0.7).abs() < 1e-12);
        let oracle = brute_force_support(&spec, &mdp, 0, 0, &v).unwrap();
        assert!((oracle - 0.7).abs() < 1e-12);
    }

    #[test]
    fn constant_v_has_zero_support_of_u() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = rng.gen_range(2..=4);
            let mdp = mdp_with_row(random_row(n, &mut rng).as_slice().unwrap());
            let spec = random_spec(n, &mut rng);
            let v = Array1::from_elem(n, rng.gen_range(-3.0..3.0));
            let sigma = support_value_of_u(&spec, &mdp, 0, 0, &v).unwrap();
            assert!(sigma.abs() <= 1e-10, "sigma {sigma}");
        }
    }

    #[test]
    fn empty_scenarios_error() {
        let mdp = mdp_with_row(&[1.0, 0.0]);
        let spec = AmbiguitySpec::Scenarios { kernels: vec![] };
        let err = support_argmax(&spec, &mdp, 0, 0, &arr1(&[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::EmptySet { state: 0, action: 0 }));
    }

    #[test]
    fn single_scenario_is_that_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 3;
        let mdp = mdp_with_row(random_row(n, &mut rng).as_slice().unwrap());
        let mut k = ndarray::Array3::zeros((n, 1, n));
        let row = random_row(n, &mut rng);
        for s in 0..n {
            for s2 in 0..n {
                k[[s, 0, s2]] = row[s2];
            }
        }
        let spec = AmbiguitySpec::Scenarios { kernels: vec![k] };
        let v = arr1(&[0.4, -1.2, 2.0]);
        let point = support_argmax(&spec, &mdp, 0, 0, &v).unwrap();
        assert!((point.value - row.dot(&v)).abs() < 1e-12);
        let oracle = brute_force_support(&spec, &mdp, 0, 0, &v).unwrap();
        assert!((point.value - oracle).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..200 {
            let n = rng.gen_range(2..=5);
            let mdp = mdp_with_row(random_row(n, &mut rng).as_slice().unwrap());
            let spec = random_spec(n, &mut rng);
            let v = Array1::from_shape_fn(n, |_| rng.gen_range(-5.0..5.0));
            let point = support_argmax(&spec, &mdp, 0, 0, &v).unwrap();
            let oracle = brute_force_support(&spec, &mdp, 0, 0, &v).unwrap();
            assert!(
                (point.value - oracle).abs() <= 1e-8,
                "trial {trial}: value {} vs oracle {oracle}",
                point.value
            );
            assert!(is_member(&spec, &mdp, 0, 0, &point.p_star), "trial {trial}: p_star outside set");
            // Nominal membership lower bound.
            assert!(point.value >= mdp.nominal_row(0, 0).dot(&v) - 1e-12);
        }
    }

    #[test]
    fn support_function_properties() {
        // Positive homogeneity and subadditivity of sigma over the
        // perturbation set, plus shift invariance of the maximizer.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.gen_range(2..=5);
            let mdp = mdp_with_row(random_row(n, &mut rng).as_slice().unwrap());
            let spec = random_spec(n, &mut rng);
            let v = Array1::from_shape_fn(n, |_| rng.gen_range(-4.0..4.0));
            let w = Array1::from_shape_fn(n, |_| rng.gen_range(-4.0..4.0));
            let lambda: f64 = rng.gen_range(0.0..3.0);
            let sv = support_value_of_u(&spec, &mdp, 0, 0, &v).unwrap();
            let sw = support_value_of_u(&spec, &mdp, 0, 0, &w).unwrap();
            let svw = support_value_of_u(&spec, &mdp, 0, 0, &(&v + &w)).unwrap();
            let slv = support_value_of_u(&spec, &mdp, 0, 0, &v.mapv(|x| lambda * x)).unwrap();
            assert!(sv >= -1e-12);
            assert!((slv - lambda * sv).abs() <= 1e-8 * (1.0 + lambda * sv.abs()));
            assert!(svw <= sv + sw + 1e-8);

            let delta: f64 = rng.gen_range(-5.0..5.0);
            let shifted = v.mapv(|x| x + delta);
            let p1 = support_argmax(&spec, &mdp, 0, 0, &v).unwrap().p_star;
            let p2 = support_argmax(&spec, &mdp, 0, 0, &shifted).unwrap().p_star;
            assert!(l1_distance(&p1, &p2) <= 1e-12);
        }
    }

    #[test]
    fn l1_greedy_matches_lp_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..120 {
            let n = rng.gen_range(2..=5);
            let mdp = mdp_with_row(random_row(n, &mut rng).as_slice().unwrap());
            let spec = AmbiguitySpec::L1Ball { radius: rng.gen_range(0.0..2.5) };
            let v = Array1::from_shape_fn(n, |_| rng.gen_range(-5.0..5.0));
            let point = support_argmax(&spec, &mdp, 0, 0, &v).unwrap();
            let oracle = brute_force_support(&spec, &mdp, 0, 0, &v).unwrap();
            assert!((point.value - oracle).abs() <= 1e-8);
        }
    }

    #[test]
    fn brute_force_rejects_large_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mdp = mdp_with_row(random_row(6, &mut rng).as_slice().unwrap());
        let err = brute_force_support(
            &AmbiguitySpec::Singleton,
            &mdp,
            0,
            0,
            &Array1::zeros(6),
        )
        .unwrap_err();
        assert!(matches!(err, Error::TooLarge { max: 5, got: 6 }));
    }

    #[test]
    fn rows_scan_breaks_ties_first_maximum() {
        let mdp = mdp_with_row(&[0.5, 0.5]);
        let k1 = arr3(&[[[1.0, 0.0]], [[1.0, 0.0]]]);
        let k2 = arr3(&[[[0.0, 1.0]], [[0.0, 1.0]]]);
        let spec = AmbiguitySpec::Scenarios { kernels: vec![k1, k2] };
        // Constant v ties both scenarios; the first one wins.
        let point = support_argmax(&spec, &mdp, 0, 0, &arr1(&[2.0, 2.0])).unwrap();
        assert_eq!(point.p_star, arr1(&[1.0, 0.0]));
    }

    #[test]
    fn per_pair_table_dispatches() {
        let mdp = mdp_with_row(&[0.5, 0.5]);
        let table = vec![
            PairAmbiguity::L1Ball { radius: 0.4 },
            PairAmbiguity::Singleton,
        ];
        let spec = AmbiguitySpec::PerPair { table };
        let v = arr1(&[1.0, 0.0]);
        let p0 = support_argmax(&spec, &mdp, 0, 0, &v).unwrap();
        let p1 = support_argmax(&spec, &mdp, 1, 0, &v).unwrap();
        assert!((p0.value - 0.7).abs() < 1e-12);
        assert!((p1.value - 0.5).abs() < 1e-12);
    }

}
