//! On-disk formats: the JSON instance/bundle schema, policy files, robust
//! evaluation dumps, run logs (JSON plus a fixed-header CSV), and online
//! evaluation traces. Doubles round-trip bit-exactly through serde_json's
//! shortest-representation encoding.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::ambiguity::{AmbiguitySpec, PairAmbiguity, QSet};
use crate::error::{Error, Result};
use crate::eval::RobustEvaluation;
use crate::instances::{InstanceBundle, InstanceMetadata};
use crate::mdp::{Policy, StateDist, TabularMdp};
use crate::solvers::{RunLog, RviSolution};

/// Fixed header of every run-log CSV.
pub const RUN_CSV_HEADER: &str =
    "k,eta,f_rho,gap,value_decrease_max,divergence_to_opt,rtd_error,wall_ms";

fn table2(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|row| row.to_vec()).collect()
}

fn table3(a: &Array3<f64>) -> Vec<Vec<Vec<f64>>> {
    a.outer_iter().map(|plane| plane.outer_iter().map(|row| row.to_vec()).collect()).collect()
}

fn array2(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let nr = rows.len();
    let nc = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Invalid("ragged 2d table".into()));
    }
    Ok(Array2::from_shape_fn((nr, nc), |(i, j)| rows[i][j]))
}

fn array3(planes: &[Vec<Vec<f64>>]) -> Result<Array3<f64>> {
    let n0 = planes.len();
    let n1 = planes.first().map(|p| p.len()).unwrap_or(0);
    let n2 = planes.first().and_then(|p| p.first()).map(|r| r.len()).unwrap_or(0);
    for p in planes {
        if p.len() != n1 || p.iter().any(|r| r.len() != n2) {
            return Err(Error::Invalid("ragged 3d table".into()));
        }
    }
    Ok(Array3::from_shape_fn((n0, n1, n2), |(i, j, k)| planes[i][j][k]))
}

/// JSON instance schema.
#[derive(Debug, Serialize, Deserialize)]
pub struct InstanceJson {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub cost: Vec<Vec<f64>>,
    pub nominal: Vec<Vec<Vec<f64>>>,
}

impl InstanceJson {
    pub fn from_mdp(mdp: &TabularMdp) -> Self {
        Self {
            n_states: mdp.n_states,
            n_actions: mdp.n_actions,
            gamma: mdp.gamma,
            cost: table2(&mdp.cost),
            nominal: table3(&mdp.nominal),
        }
    }

    pub fn into_mdp(self) -> Result<TabularMdp> {
        let mdp = TabularMdp::new(array2(&self.cost)?, self.gamma, array3(&self.nominal)?)?;
        if mdp.n_states != self.n_states || mdp.n_actions != self.n_actions {
            return Err(Error::Invalid("declared dimensions disagree with tables".into()));
        }
        Ok(mdp)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QSetJson {
    Full,
    List { members: Vec<Vec<f64>> },
}

impl QSetJson {
    fn from_qset(q: &QSet) -> Self {
        match q {
            QSet::Full => QSetJson::Full,
            QSet::FiniteList(qs) => {
                QSetJson::List { members: qs.iter().map(|v| v.to_vec()).collect() }
            }
        }
    }

    fn into_qset(self) -> QSet {
        match self {
            QSetJson::Full => QSet::Full,
            QSetJson::List { members } => {
                QSet::FiniteList(members.into_iter().map(Array1::from_vec).collect())
            }
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PairAmbiguityJson {
    Singleton,
    Rows { rows: Vec<Vec<f64>> },
    Contamination { epsilon: f64, q_set: QSetJson },
    L1ball { radius: f64 },
}

impl PairAmbiguityJson {
    fn from_pair(p: &PairAmbiguity) -> Self {
        match p {
            PairAmbiguity::Singleton => PairAmbiguityJson::Singleton,
            PairAmbiguity::Rows(rows) => {
                PairAmbiguityJson::Rows { rows: rows.iter().map(|r| r.to_vec()).collect() }
            }
            PairAmbiguity::Contamination { epsilon, q_set } => PairAmbiguityJson::Contamination {
                epsilon: *epsilon,
                q_set: QSetJson::from_qset(q_set),
            },
            PairAmbiguity::L1Ball { radius } => PairAmbiguityJson::L1ball { radius: *radius },
        }
    }

    fn into_pair(self) -> PairAmbiguity {
        match self {
            PairAmbiguityJson::Singleton => PairAmbiguity::Singleton,
            PairAmbiguityJson::Rows { rows } => {
                PairAmbiguity::Rows(rows.into_iter().map(Array1::from_vec).collect())
            }
            PairAmbiguityJson::Contamination { epsilon, q_set } => {
                PairAmbiguity::Contamination { epsilon, q_set: q_set.into_qset() }
            }
            PairAmbiguityJson::L1ball { radius } => PairAmbiguity::L1Ball { radius },
        }
    }
}

/// JSON ambiguity block: a uniform description or a full per-pair table.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AmbiguityJson {
    Singleton,
    Scenarios { kernels: Vec<Vec<Vec<Vec<f64>>>> },
    Contamination { epsilon: f64, q_set: QSetJson },
    L1ball { radius: f64 },
    Perpair { table: Vec<PairAmbiguityJson> },
}

impl AmbiguityJson {
    pub fn from_spec(spec: &AmbiguitySpec) -> Self {
        match spec {
            AmbiguitySpec::Singleton => AmbiguityJson::Singleton,
            AmbiguitySpec::Scenarios { kernels } => {
                AmbiguityJson::Scenarios { kernels: kernels.iter().map(table3).collect() }
            }
            AmbiguitySpec::Contamination { epsilon, q_set } => AmbiguityJson::Contamination {
                epsilon: *epsilon,
                q_set: QSetJson::from_qset(q_set),
            },
            AmbiguitySpec::L1Ball { radius } => AmbiguityJson::L1ball { radius: *radius },
            AmbiguitySpec::PerPair { table } => AmbiguityJson::Perpair {
                table: table.iter().map(PairAmbiguityJson::from_pair).collect(),
            },
        }
    }

    pub fn into_spec(self) -> Result<AmbiguitySpec> {
        Ok(match self {
            AmbiguityJson::Singleton => AmbiguitySpec::Singleton,
            AmbiguityJson::Scenarios { kernels } => AmbiguitySpec::Scenarios {
                kernels: kernels.iter().map(|k| array3(k)).collect::<Result<_>>()?,
            },
            AmbiguityJson::Contamination { epsilon, q_set } => {
                AmbiguitySpec::Contamination { epsilon, q_set: q_set.into_qset() }
            }
            AmbiguityJson::L1ball { radius } => AmbiguitySpec::L1Ball { radius },
            AmbiguityJson::Perpair { table } => AmbiguitySpec::PerPair {
                table: table.into_iter().map(PairAmbiguityJson::into_pair).collect(),
            },
        })
    }
}

#[derive(Debug, Serialize, Deserialize, Default)]
pub struct MetadataJson {
    pub name: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, String>,
    #[serde(default)]
    pub notes: String,
    #[serde(default)]
    pub rtd_safe: bool,
}

/// JSON bundle schema: the instance fields plus an ambiguity block and
/// generator metadata.
#[derive(Debug, Serialize, Deserialize)]
pub struct BundleJson {
    #[serde(flatten)]
    pub instance: InstanceJson,
    pub ambiguity: AmbiguityJson,
    #[serde(default)]
    pub metadata: MetadataJson,
}

impl BundleJson {
    pub fn from_bundle(bundle: &InstanceBundle) -> Self {
        Self {
            instance: InstanceJson::from_mdp(&bundle.mdp),
            ambiguity: AmbiguityJson::from_spec(&bundle.spec),
            metadata: MetadataJson {
                name: bundle.metadata.name.clone(),
                parameters: bundle.metadata.parameters.clone(),
                notes: bundle.metadata.notes.clone(),
                rtd_safe: bundle.metadata.rtd_safe,
            },
        }
    }

    pub fn into_bundle(self) -> Result<InstanceBundle> {
        Ok(InstanceBundle {
            mdp: self.instance.into_mdp()?,
            spec: self.ambiguity.into_spec()?,
            metadata: InstanceMetadata {
                name: self.metadata.name,
                parameters: self.metadata.parameters,
                notes: self.metadata.notes,
                rtd_safe: self.metadata.rtd_safe,
            },
        })
    }
}

pub fn bundle_to_json_string(bundle: &InstanceBundle) -> Result<String> {
    Ok(serde_json::to_string_pretty(&BundleJson::from_bundle(bundle))?)
}

pub fn save_bundle(path: &Path, bundle: &InstanceBundle) -> Result<()> {
    std::fs::write(path, bundle_to_json_string(bundle)?)?;
    Ok(())
}

pub fn load_bundle(path: &Path) -> Result<InstanceBundle> {
    let text = std::fs::read_to_string(path)?;
    let json: BundleJson = serde_json::from_str(&text)?;
    json.into_bundle()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PolicyJson {
    pub probs: Vec<Vec<f64>>,
}

pub fn save_policy(path: &Path, policy: &Policy) -> Result<()> {
    let json = PolicyJson { probs: table2(&policy.probs) };
    std::fs::write(path, serde_json::to_string_pretty(&json)?)?;
    Ok(())
}

pub fn load_policy(path: &Path) -> Result<Policy> {
    let text = std::fs::read_to_string(path)?;
    let json: PolicyJson = serde_json::from_str(&text)?;
    Policy::new(array2(&json.probs)?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StateDistJson {
    pub weights: Vec<f64>,
}

pub fn load_state_dist(path: &Path) -> Result<StateDist> {
    let text = std::fs::read_to_string(path)?;
    let json: StateDistJson = serde_json::from_str(&text)?;
    StateDist::new(Array1::from_vec(json.weights))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluationJson {
    pub v_r: Vec<f64>,
    pub q_r: Vec<Vec<f64>>,
    pub worst_kernel: Vec<Vec<Vec<f64>>>,
    pub residual: f64,
    pub iterations: usize,
}

impl EvaluationJson {
    pub fn from_eval(eval: &RobustEvaluation) -> Self {
        Self {
            v_r: eval.v_r.to_vec(),
            q_r: table2(&eval.q_r),
            worst_kernel: table3(&eval.worst_kernel),
            residual: eval.residual,
            iterations: eval.iterations,
        }
    }
}

pub fn save_evaluation(path: &Path, eval: &RobustEvaluation) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&EvaluationJson::from_eval(eval))?)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IterationRecordJson {
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

#[derive(Debug, Serialize, Deserialize)]
pub struct RunLogJson {
    pub algorithm: String,
    pub gamma: f64,
    pub f_star: f64,
    pub selected_iterate: Option<usize>,
    pub records: Vec<IterationRecordJson>,
    pub final_policy: PolicyJson,
}

impl RunLogJson {
    pub fn from_log(log: &RunLog) -> Self {
        Self {
            algorithm: log.algorithm.clone(),
            gamma: log.gamma,
            f_star: log.f_star,
            selected_iterate: log.selected_iterate,
            records: log
                .records
                .iter()
                .map(|r| IterationRecordJson {
                    k: r.k,
                    eta: r.eta,
                    f_rho: r.f_rho,
                    gap: r.gap,
                    max_value_decrease: r.max_value_decrease,
                    divergence_to_opt: r.divergence_to_opt,
                    divergence_to_opt_next: r.divergence_to_opt_next,
                    m_hat: r.m_hat,
                    rtd_error: r.rtd_error,
                    wall_ms: r.wall_ms,
                })
                .collect(),
            final_policy: PolicyJson { probs: table2(&log.final_policy.probs) },
        }
    }
}

pub fn save_run_json(path: &Path, log: &RunLog) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&RunLogJson::from_log(log))?)?;
    Ok(())
}

fn csv_cell(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v}"),
        None => "nan".to_string(),
    }
}

/// Writes the run log as CSV with the fixed header [`RUN_CSV_HEADER`].
pub fn save_run_csv(path: &Path, log: &RunLog) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "{RUN_CSV_HEADER}")?;
    for r in &log.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k,
            csv_cell(r.eta),
            r.f_rho,
            r.gap,
            csv_cell(r.max_value_decrease),
            csv_cell(r.divergence_to_opt),
            csv_cell(r.rtd_error),
            r.wall_ms,
        )?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RviJson {
    pub v_star: Vec<f64>,
    pub pi_star: PolicyJson,
    pub iterations: usize,
    pub residual: f64,
}

pub fn save_rvi(path: &Path, sol: &RviSolution) -> Result<()> {
    let json = RviJson {
        v_star: sol.v_star.to_vec(),
        pi_star: PolicyJson { probs: table2(&sol.pi_star.probs) },
        iterations: sol.iterations,
        residual: sol.residual,
    };
    std::fs::write(path, serde_json::to_string_pretty(&json)?)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ThetaJson {
    pub theta: Vec<Vec<f64>>,
}

pub fn save_theta(path: &Path, theta: &Array2<f64>) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&ThetaJson { theta: table2(theta) })?)?;
    Ok(())
}

/// Writes an online-evaluation error trace as `step,error` rows.
pub fn save_trace_csv(path: &Path, trace: &[(usize, f64)]) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "step,error")?;
    for (step, error) in trace {
        writeln!(out, "{step},{error}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{build_counterexample, build_garnet, GarnetAmbiguity};

    #[test]
    fn bundle_round_trip_is_bit_exact() {
        let bundle = build_garnet(4, 3, 3, 0.91, GarnetAmbiguity::Contamination(0.17), 5).unwrap();
        let text = bundle_to_json_string(&bundle).unwrap();
        let parsed: BundleJson = serde_json::from_str(&text).unwrap();
        let back = parsed.into_bundle().unwrap();
        assert_eq!(bundle.mdp, back.mdp);
        assert_eq!(bundle.spec, back.spec);
        assert_eq!(bundle.metadata, back.metadata);
        // Serializing again reproduces the exact byte sequence.
        let text2 = bundle_to_json_string(&back).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn scenario_bundle_round_trip() {
        let (bundle, _, _) = build_counterexample(2.0, 0.5);
        let text = bundle_to_json_string(&bundle).unwrap();
        let back: BundleJson = serde_json::from_str(&text).unwrap();
        let back = back.into_bundle().unwrap();
        assert_eq!(bundle.spec, back.spec);
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let bundle = build_garnet(3, 2, 3, 0.9, GarnetAmbiguity::Singleton, 1).unwrap();
        let mut json = BundleJson::from_bundle(&bundle);
        json.instance.n_states = 4;
        assert!(json.into_bundle().is_err());
    }

    #[test]
    fn policy_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        let policy = Policy::uniform(3, 2);
        save_policy(&path, &policy).unwrap();
        let back = load_policy(&path).unwrap();
        assert_eq!(policy.probs, back.probs);
    }
}
