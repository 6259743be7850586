//! Instance constructors: the sparse-cost chain illustrating the tradeoff
//! between nominal planning and robustness, the three-state instance with a
//! vanishing aggregated gradient signal, and a seeded Garnet family for
//! randomized sweeps.

use std::collections::BTreeMap;

use ndarray::{Array2, Array3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::ambiguity::{AmbiguitySpec, QSet};
use crate::error::Result;
use crate::mdp::{Policy, TabularMdp};

/// An MDP paired with its ambiguity set, plus generator provenance.
#[derive(Debug, Clone)]
pub struct InstanceBundle {
    pub mdp: TabularMdp,
    pub spec: AmbiguitySpec,
    pub metadata: InstanceMetadata,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InstanceMetadata {
    pub name: String,
    pub parameters: BTreeMap<String, String>,
    pub notes: String,
    /// Set by the Garnet generator when every nominal row has full support,
    /// which makes any positive policy satisfy the ergodicity assumptions of
    /// online evaluation.
    pub rtd_safe: bool,
}

/// Discount used by [`build_example1`]; the chain's values are invariant to
/// it because the terminal cost is rescaled by the discount horizon.
pub const EXAMPLE1_GAMMA: f64 = 0.9;

/// Output of [`build_example1`].
#[derive(Debug, Clone)]
pub struct ChainInstance {
    /// Bundle whose ambiguity is the two-member scenario set
    /// {nominal kernel, perturbed kernel}.
    pub nominal: InstanceBundle,
    pub perturbed_kernel: Array3<f64>,
    /// State indices: start, left chain, terminal-cost state, right-side
    /// absorbers, and the final absorber.
    pub start: usize,
    pub left: Vec<usize>,
    pub left_terminal: usize,
    pub right: Vec<usize>,
    pub absorber: usize,
}

/// Actions of the chain instance at the start state.
pub const CHAIN_LEFT: usize = 0;
pub const CHAIN_RIGHT: usize = 1;

/// Builds a (2k+1)-state chain where the nominal-optimal route earns a large
/// sparse payoff at the end of a long corridor, while a slightly perturbed
/// kernel leaks the corridor into absorbing states and destroys that payoff.
///
/// States: start `S0`; corridor `S_{1..k-1,L}`; terminal-cost state `S_{k,L}`;
/// absorbing `S_{1..k-1,R}`; absorbing `S_{k+1}`. At the start, going right
/// costs -1 and ends in the absorber; going left costs 0 and enters the
/// corridor. All other states have a single effective action (both action
/// columns identical). The payoff for completing the corridor is booked on
/// arrival at `S_{k,L}` as a cost of `-(1+eps) gamma^{-k}`, so its
/// discounted value from the start is exactly `-(1+eps)` under the nominal
/// kernel and `-(1+eps) p^{k-1}` under the perturbed one.
pub fn build_example1(k: usize, eps: f64, p: f64) -> ChainInstance {
    assert!(k >= 2, "chain length must be at least 2");
    assert!(eps > 0.0);
    assert!(p > 0.0 && p < 1.0);
    let gamma = EXAMPLE1_GAMMA;
    // Layout: 0 = S0; 1..=k-1 = S_{m,L}; k = S_{k,L};
    // k+1..=2k-1 = S_{m,R}; 2k = S_{k+1}.
    let n = 2 * k + 1;
    let start = 0;
    let left: Vec<usize> = (1..k).collect();
    let left_terminal = k;
    let right: Vec<usize> = (k + 1..2 * k).collect();
    let absorber = 2 * k;
    let na = 2;

    let mut cost = Array2::zeros((n, na));
    cost[[start, CHAIN_RIGHT]] = -1.0;
    let terminal_cost = -(1.0 + eps) * gamma.powi(-(k as i32));
    cost[[left_terminal, 0]] = terminal_cost;
    cost[[left_terminal, 1]] = terminal_cost;

    let mut nominal = Array3::zeros((n, na, n));
    let set_both = |kernel: &mut Array3<f64>, s: usize, to: usize| {
        for a in 0..na {
            kernel[[s, a, to]] = 1.0;
        }
    };
    // Start state: left enters the corridor, right ends in the absorber.
    nominal[[start, CHAIN_LEFT, left[0]]] = 1.0;
    nominal[[start, CHAIN_RIGHT, absorber]] = 1.0;
    // Corridor marches towards the terminal-cost state.
    for (i, &s) in left.iter().enumerate() {
        let next = if i + 1 < left.len() { left[i + 1] } else { left_terminal };
        set_both(&mut nominal, s, next);
    }
    set_both(&mut nominal, left_terminal, absorber);
    for &s in &right {
        set_both(&mut nominal, s, s);
    }
    set_both(&mut nominal, absorber, absorber);

    // Perturbed kernel: each corridor hop succeeds with probability p and
    // otherwise leaks into the matching absorbing right-side state.
    let mut perturbed = nominal.clone();
    for (i, &s) in left.iter().enumerate() {
        let next = if i + 1 < left.len() { left[i + 1] } else { left_terminal };
        let leak = right[i];
        for a in 0..na {
            perturbed[[s, a, next]] = p;
            perturbed[[s, a, leak]] = 1.0 - p;
        }
    }

    let mdp = TabularMdp::new(cost, gamma, nominal.clone())
        .expect("chain construction yields a valid MDP");
    let spec = AmbiguitySpec::Scenarios { kernels: vec![nominal, perturbed.clone()] };
    let mut parameters = BTreeMap::new();
    parameters.insert("k".into(), k.to_string());
    parameters.insert("eps".into(), eps.to_string());
    parameters.insert("p".into(), p.to_string());
    parameters.insert("gamma".into(), gamma.to_string());
    let nominal_bundle = InstanceBundle {
        mdp,
        spec,
        metadata: InstanceMetadata {
            name: "chain-tradeoff".into(),
            parameters,
            notes: "two-kernel scenario set: nominal corridor plus leaky corridor".into(),
            rtd_safe: false,
        },
    };
    ChainInstance {
        nominal: nominal_bundle,
        perturbed_kernel: perturbed,
        start,
        left,
        left_terminal,
        right,
        absorber,
    }
}

/// Builds the three-state instance whose aggregated policy-gradient signal
/// vanishes at a strictly suboptimal policy.
///
/// States `(S_a, S_b, S_c) = (0, 1, 2)`, actions `(L, R) = (0, 1)`.
/// Deterministic nominal arcs: at `S_a`, `L` costs `C` and moves to `S_c`
/// while `R` costs 0 and moves to `S_b`; both actions at `S_b` cost 1 and
/// move to `S_c`; both actions at `S_c` cost 0. The adversary controls `S_c`
/// completely over `{S_a, S_b}` (a two-vertex scenario set per action);
/// every other pair is a singleton. Returned policies: `pi` plays `L` at
/// `S_a` and uniform elsewhere; `pi_star` plays `R` at `S_a` and uniform
/// elsewhere.
pub fn build_counterexample(c: f64, gamma: f64) -> (InstanceBundle, Policy, Policy) {
    assert!(c > 1.0, "cost parameter must exceed 1");
    assert!(gamma > 0.0 && gamma < 1.0);
    let (sa, sb, sc) = (0, 1, 2);
    let na = 2;
    let mut cost = Array2::zeros((3, na));
    cost[[sa, 0]] = c;
    cost[[sa, 1]] = 0.0;
    cost[[sb, 0]] = 1.0;
    cost[[sb, 1]] = 1.0;

    let mut nominal = Array3::zeros((3, na, 3));
    nominal[[sa, 0, sc]] = 1.0;
    nominal[[sa, 1, sb]] = 1.0;
    for a in 0..na {
        nominal[[sb, a, sc]] = 1.0;
        nominal[[sc, a, sa]] = 1.0;
    }

    // The two vertex kernels differ only in where S_c leads.
    let to_sa = nominal.clone();
    let mut to_sb = nominal.clone();
    for a in 0..na {
        to_sb[[sc, a, sa]] = 0.0;
        to_sb[[sc, a, sb]] = 1.0;
    }

    let mdp = TabularMdp::new(cost, gamma, nominal).expect("valid three-state instance");
    let spec = AmbiguitySpec::Scenarios { kernels: vec![to_sa, to_sb] };

    let mut pi = Policy::uniform(3, na);
    pi.probs[[sa, 0]] = 1.0;
    pi.probs[[sa, 1]] = 0.0;
    let mut pi_star = Policy::uniform(3, na);
    pi_star.probs[[sa, 0]] = 0.0;
    pi_star.probs[[sa, 1]] = 1.0;

    let mut parameters = BTreeMap::new();
    parameters.insert("C".into(), c.to_string());
    parameters.insert("gamma".into(), gamma.to_string());
    let bundle = InstanceBundle {
        mdp,
        spec,
        metadata: InstanceMetadata {
            name: "weak-gradient-signal".into(),
            parameters,
            notes: "adversary fully controls the cycle state; aggregated signal vanishes".into(),
            rtd_safe: false,
        },
    };
    (bundle, pi, pi_star)
}

/// Ambiguity family attached uniformly across pairs by [`build_garnet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GarnetAmbiguity {
    Singleton,
    /// Contamination against the full simplex with the given weight.
    Contamination(f64),
    /// l1 ball of the given radius around each nominal row.
    L1Ball(f64),
}

/// Random benchmark instance: each state-action pair transitions to
/// `branching` distinct successors with flat-Dirichlet weights; costs are
/// uniform in (0, 1]. Deterministic for a fixed seed. With
/// `branching == n_states` every row has full support, so the bundle is
/// marked `rtd_safe` and any positive policy yields an ergodic nominal chain.
pub fn build_garnet(
    n_states: usize,
    n_actions: usize,
    branching: usize,
    gamma: f64,
    ambiguity: GarnetAmbiguity,
    seed: u64,
) -> Result<InstanceBundle> {
    assert!(branching >= 1 && branching <= n_states, "branching must lie in 1..=n_states");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nominal = Array3::zeros((n_states, n_actions, n_states));
    let mut successors: Vec<usize> = (0..n_states).collect();
    for s in 0..n_states {
        for a in 0..n_actions {
            successors.shuffle(&mut rng);
            let chosen = &mut successors[..branching];
            chosen.sort_unstable();
            // Flat Dirichlet weights via normalized exponentials.
            let mut weights: Vec<f64> = (0..branching).map(|_| -(rng.gen::<f64>()).ln()).collect();
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            for (&s2, &w) in chosen.iter().zip(weights.iter()) {
                nominal[[s, a, s2]] = w;
            }
        }
    }
    let cost = Array2::from_shape_fn((n_states, n_actions), |_| 1.0 - rng.gen::<f64>());
    let mdp = TabularMdp::new(cost, gamma, nominal)?;
    let spec = match ambiguity {
        GarnetAmbiguity::Singleton => AmbiguitySpec::Singleton,
        GarnetAmbiguity::Contamination(epsilon) => {
            AmbiguitySpec::Contamination { epsilon, q_set: QSet::Full }
        }
        GarnetAmbiguity::L1Ball(radius) => AmbiguitySpec::L1Ball { radius },
    };
    let mut parameters = BTreeMap::new();
    parameters.insert("n_states".into(), n_states.to_string());
    parameters.insert("n_actions".into(), n_actions.to_string());
    parameters.insert("branching".into(), branching.to_string());
    parameters.insert("gamma".into(), gamma.to_string());
    parameters.insert("seed".into(), seed.to_string());
    parameters.insert(
        "ambiguity".into(),
        match ambiguity {
            GarnetAmbiguity::Singleton => "singleton".to_string(),
            GarnetAmbiguity::Contamination(e) => format!("contamination:{e}"),
            GarnetAmbiguity::L1Ball(r) => format!("l1ball:{r}"),
        },
    );
    Ok(InstanceBundle {
        mdp,
        spec,
        metadata: InstanceMetadata {
            name: "garnet".into(),
            parameters,
            notes: String::new(),
            rtd_safe: branching == n_states,
        },
    })
}
