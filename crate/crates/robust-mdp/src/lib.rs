//! Tabular robust Markov decision processes with rectangular ambiguity sets.
//!
//! The crate provides exact robust policy evaluation against per-(s,a)
//! ambiguity sets (scenario lists, contamination mixtures, l1 balls around a
//! nominal kernel), first-order policy optimization by mirror descent in
//! deterministic and stochastic variants, online robust temporal-difference
//! evaluation driven by samples from the nominal environment, and value /
//! policy iteration baselines. A verification harness numerically checks the
//! structural inequalities the optimization methods rely on.
//!
//! Start with the runnable programs under `examples/`; the `robustmdp` binary
//! exposes the same functionality as a small command-line front end.

pub mod ambiguity;
pub mod cli;
pub mod error;
pub mod eval;
pub mod instances;
pub mod io;
mod linalg;
pub mod mdp;
pub mod mirror;
pub mod rtd;
pub mod solvers;
pub mod verify;

pub use crate::ambiguity::{brute_force_support, support_argmax, support_value_of_u, AmbiguitySpec};
pub use crate::error::{Error, Result};
pub use crate::eval::{evaluate_robust, f_rho, policy_gradient, RobustEvaluation};
pub use crate::instances::{build_counterexample, build_example1, build_garnet, InstanceBundle};
pub use crate::mdp::{Policy, StateDist, TabularMdp};
pub use crate::mirror::MirrorMap;
pub use crate::rtd::{rtd_evaluate, RtdConfig};
pub use crate::solvers::{rpi_solve, rpmd_solve, rvi_solve, srpmd_solve, RunLog, SolverConfig};
