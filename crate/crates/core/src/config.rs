//! Experiment configuration: one JSON document embedding the prior,
//! mechanism, attack, and metric specs plus run parameters, resolved into
//! a runnable [`GameConfig`].

use crate::attacks::MaiConfig;
use crate::error::{Error, Result};
use crate::game::{
    check_metric_applicability, GameConfig, GameSpec, MarginalAttackKind, MarginalGame,
    RrAttackKind, RrGame,
};
use crate::mechanisms::MarginalWorkload;
use crate::metrics::LossMetricSpec;
use crate::priors::{PriorFile, PriorSpec, ProductPrior};
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_schema() -> String {
    "v1".into()
}

fn default_step() -> f64 {
    0.05
}

fn default_iters() -> usize {
    2000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSpec {
    pub name: String,
    pub size: usize,
    #[serde(default)]
    pub ordinal: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorkloadSpec {
    AllK { all_k: usize },
    Subsets(Vec<Vec<String>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MechanismSpec {
    RandomizedResponse {
        eps: f64,
        m: usize,
    },
    NoisyMarginals {
        sigma: f64,
        attributes: Vec<AttributeSpec>,
        workload: WorkloadSpec,
        known: Vec<String>,
        /// Known columns inline, one row per target record, in `known` order.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        known_values: Option<Vec<Vec<usize>>>,
        /// Or a CSV file with a header row naming the attributes.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dataset: Option<String>,
        /// Full rows given to the mechanism but never scored.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        fixed_records: Vec<Vec<usize>>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AttackSpec {
    RrBayes,
    PriorOnly,
    MaiGradient {
        #[serde(default = "default_step")]
        step: f64,
        #[serde(default = "default_iters")]
        iters: usize,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub prior: PriorFile,
    pub mechanism: MechanismSpec,
    pub attack: AttackSpec,
    pub metric: LossMetricSpec,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    #[serde(default)]
    pub replays: Option<usize>,
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
    /// Privacy parameters used by the one-run estimator. For randomized
    /// response they default to the mechanism's eps and delta = 0.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
}

/// A config resolved against the filesystem, ready to run.
pub struct ResolvedExperiment {
    pub game: GameConfig,
    pub replays: usize,
    pub alphas: Vec<f64>,
    pub eps: f64,
    pub delta: f64,
}

pub fn load_experiment(path: &Path) -> Result<ResolvedExperiment> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    resolve_experiment(&cfg, path.parent().unwrap_or_else(|| Path::new(".")))
}

pub fn resolve_experiment(cfg: &ExperimentConfig, base_dir: &Path) -> Result<ResolvedExperiment> {
    if cfg.schema != "v1" {
        return Err(Error::Config(format!(
            "unsupported schema {:?}; this build reads v1",
            cfg.schema
        )));
    }
    if cfg.n == 0 || cfg.k == 0 {
        return Err(Error::Config("n and k must be at least 1".into()));
    }
    let alphas = cfg.alphas.clone().unwrap_or_else(|| vec![0.05]);
    for &a in &alphas {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Config(format!("alpha = {a} outside (0, 1)")));
        }
    }
    let replays = cfg.replays.unwrap_or(1);
    if replays == 0 {
        return Err(Error::Config("replays must be at least 1".into()));
    }
    let delta = cfg.delta.unwrap_or(0.0);
    let prior = cfg.prior.parse()?;
    let spec = match &cfg.mechanism {
        MechanismSpec::RandomizedResponse { eps, m } => resolve_rr(cfg, prior, *eps, *m)?,
        MechanismSpec::NoisyMarginals {
            sigma,
            attributes,
            workload,
            known,
            known_values,
            dataset,
            fixed_records,
        } => resolve_marginal(
            cfg,
            prior,
            *sigma,
            attributes,
            workload,
            known,
            known_values.as_deref(),
            dataset.as_deref(),
            fixed_records,
            base_dir,
        )?,
    };
    let eps = match (&spec, cfg.eps) {
        (_, Some(e)) => e,
        (GameSpec::Rr(g), None) => g.eps,
        (GameSpec::Marginal(_), None) => {
            return Err(Error::Config(
                "noisy-marginals experiments must state eps for the estimator".into(),
            ))
        }
    };
    Ok(ResolvedExperiment {
        game: GameConfig {
            spec,
            seed: cfg.seed,
        },
        replays,
        alphas,
        eps,
        delta,
    })
}

fn resolve_rr(cfg: &ExperimentConfig, prior: PriorSpec, eps: f64, m: usize) -> Result<GameSpec> {
    let single = match prior {
        PriorSpec::Single(p) => p,
        PriorSpec::Conditional(_) => {
            return Err(Error::Config(
                "randomized response takes a single (non-conditional) prior".into(),
            ))
        }
    };
    if cfg.k != cfg.n {
        return Err(Error::Config(
            "randomized response games are aligned: k must equal n".into(),
        ));
    }
    let attack = match cfg.attack {
        AttackSpec::RrBayes => RrAttackKind::RrBayes,
        AttackSpec::PriorOnly => RrAttackKind::PriorOnly,
        AttackSpec::MaiGradient { .. } => {
            return Err(Error::Config(
                "mai-gradient attacks noisy marginals, not randomized response".into(),
            ))
        }
    };
    Ok(GameSpec::Rr(RrGame {
        prior: ProductPrior::replicated(single, cfg.n)?,
        eps,
        m,
        attack,
        metric: cfg.metric.clone(),
    }))
}

#[allow(clippy::too_many_arguments)]
fn resolve_marginal(
    cfg: &ExperimentConfig,
    prior: PriorSpec,
    sigma: f64,
    attributes: &[AttributeSpec],
    workload: &WorkloadSpec,
    known: &[String],
    known_values: Option<&[Vec<usize>]>,
    dataset: Option<&str>,
    fixed_records: &[Vec<usize>],
    base_dir: &Path,
) -> Result<GameSpec> {
    let cond_prior = match prior {
        PriorSpec::Conditional(t) => t,
        PriorSpec::Single(_) => {
            return Err(Error::Config(
                "noisy-marginals experiments need a conditional prior".into(),
            ))
        }
    };
    if attributes.is_empty() {
        return Err(Error::Config("declare at least one attribute".into()));
    }
    let attr_index = |name: &str| -> Result<usize> {
        attributes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::Config(format!("unknown attribute name {name:?}")))
    };
    let domain_sizes: Vec<usize> = attributes.iter().map(|a| a.size).collect();
    let workload = match workload {
        WorkloadSpec::AllK { all_k } => MarginalWorkload::all_k(domain_sizes.clone(), *all_k)?,
        WorkloadSpec::Subsets(subsets) => {
            let vsets: Vec<Vec<usize>> = subsets
                .iter()
                .map(|s| s.iter().map(|n| attr_index(n)).collect())
                .collect::<Result<_>>()?;
            MarginalWorkload::new(domain_sizes.clone(), vsets)?
        }
    };
    let mut known_attrs: Vec<usize> = known.iter().map(|n| attr_index(n)).collect::<Result<_>>()?;
    let known_order = known_attrs.clone();
    known_attrs.sort_unstable();
    known_attrs.dedup();
    if known_attrs.len() != known.len() {
        return Err(Error::Config("duplicate known attribute names".into()));
    }
    let unknown_attrs: Vec<usize> = (0..attributes.len())
        .filter(|a| !known_attrs.contains(a))
        .collect();
    if unknown_attrs.is_empty() {
        return Err(Error::Config("no unknown attributes to attack".into()));
    }
    let ordinal: Vec<bool> = attributes.iter().map(|a| a.ordinal).collect();
    check_metric_applicability(&cfg.metric, &ordinal, &unknown_attrs)?;

    // Known columns, reordered to ascending attribute index.
    let rows_in_known_order: Vec<Vec<usize>> = match (known_values, dataset) {
        (Some(vals), None) => vals.to_vec(),
        (None, Some(path)) => load_known_csv(&base_dir.join(path), known)?,
        (Some(_), Some(_)) => {
            return Err(Error::Config(
                "give either known_values or dataset, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::Config(
                "noisy-marginals experiments need known_values or a dataset file".into(),
            ))
        }
    };
    if rows_in_known_order.len() != cfg.n {
        return Err(Error::Config(format!(
            "n = {} but {} known rows were given",
            cfg.n,
            rows_in_known_order.len()
        )));
    }
    if cfg.k != cfg.n {
        return Err(Error::Config(
            "marginal games are aligned: k must equal n".into(),
        ));
    }
    let mut perm: Vec<usize> = (0..known_order.len()).collect();
    perm.sort_by_key(|&i| known_order[i]);
    let mut known_rows = Vec::with_capacity(rows_in_known_order.len());
    for (r, row) in rows_in_known_order.iter().enumerate() {
        if row.len() != known.len() {
            return Err(Error::Config(format!(
                "known row {r} has {} values, expected {}",
                row.len(),
                known.len()
            )));
        }
        let reordered: Vec<usize> = perm.iter().map(|&i| row[i]).collect();
        for (ki, &v) in reordered.iter().enumerate() {
            if v >= domain_sizes[known_attrs[ki]] {
                return Err(Error::Config(format!(
                    "known row {r} value {v} outside attribute domain"
                )));
            }
        }
        known_rows.push(reordered);
    }
    for (r, row) in fixed_records.iter().enumerate() {
        if row.len() != attributes.len() {
            return Err(Error::Config(format!(
                "fixed record {r} has {} values, expected {}",
                row.len(),
                attributes.len()
            )));
        }
        for (a, &v) in row.iter().enumerate() {
            if v >= domain_sizes[a] {
                return Err(Error::Config(format!(
                    "fixed record {r} value {v} outside attribute domain"
                )));
            }
        }
    }
    let attack = match cfg.attack {
        AttackSpec::MaiGradient { step, iters } => {
            let mai = MaiConfig { step, iters };
            mai.validate()?;
            MarginalAttackKind::MaiGradient(mai)
        }
        AttackSpec::PriorOnly => MarginalAttackKind::PriorOnly,
        AttackSpec::RrBayes => {
            return Err(Error::Config(
                "rr-bayes attacks randomized response, not noisy marginals".into(),
            ))
        }
    };
    Ok(GameSpec::Marginal(MarginalGame {
        workload,
        known_attrs,
        unknown_attrs,
        known_values: known_rows,
        cond_prior,
        sigma,
        attack,
        metric: cfg.metric.clone(),
        fixed_records: fixed_records.to_vec(),
    }))
}

fn load_known_csv(path: &Path, known: &[String]) -> Result<Vec<Vec<usize>>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        .clone();
    let cols: Vec<usize> = known
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Config(format!("dataset has no column {name:?}")))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let row: Vec<usize> = cols
            .iter()
            .map(|&c| {
                record
                    .get(c)
                    .ok_or_else(|| Error::Config(format!("dataset row {r} is short")))?
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Config(format!("dataset row {r}: {e}")))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::run_game;
    use std::io::Write;

    fn rr_json() -> String {
        r#"{
            "prior": {"kind": "uniform", "size": 10},
            "mechanism": {"kind": "randomized-response", "eps": 1.0, "m": 10},
            "attack": {"kind": "rr-bayes"},
            "metric": {"kind": "exact-match", "addressing": "aligned"},
            "n": 5, "k": 5, "seed": 7, "replays": 3, "alphas": [0.05, 0.2]
        }"#
        .into()
    }

    #[test]
    fn rr_config_round_trip() {
        let cfg: ExperimentConfig = serde_json::from_str(&rr_json()).unwrap();
        let resolved = resolve_experiment(&cfg, Path::new(".")).unwrap();
        assert_eq!(resolved.replays, 3);
        assert_eq!(resolved.alphas, vec![0.05, 0.2]);
        assert_eq!(resolved.eps, 1.0);
        assert_eq!(resolved.delta, 0.0);
        let t = run_game(&resolved.game).unwrap();
        assert_eq!(t.records.len(), 5);
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = rr_json().replace("\"seed\": 7", "\"seed\": 7, \"extra\": 1");
        assert!(serde_json::from_str::<ExperimentConfig>(&bad).is_err());
    }

    #[test]
    fn mismatched_attack_rejected() {
        let bad = rr_json().replace("rr-bayes", "mai-gradient");
        let cfg: ExperimentConfig = serde_json::from_str(&bad).unwrap();
        assert!(resolve_experiment(&cfg, Path::new(".")).is_err());
    }

    fn marginal_json(dataset: &str) -> String {
        format!(
            r#"{{
            "prior": {{"kind": "conditional",
                       "table": {{
                           "0,0": {{"domain": [0, 1], "probs": [0.7, 0.3]}},
                           "0,1": {{"domain": [0, 1], "probs": [0.4, 0.6]}},
                           "1,0": {{"domain": [0, 1], "probs": [0.5, 0.5]}},
                           "1,1": {{"domain": [0, 1], "probs": [0.2, 0.8]}}
                       }}}},
            "mechanism": {{"kind": "noisy-marginals", "sigma": 0.0,
                          "attributes": [
                              {{"name": "a", "size": 2}},
                              {{"name": "b", "size": 2}},
                              {{"name": "c", "size": 2, "ordinal": true}}],
                          "workload": {{"all_k": 2}},
                          "known": ["a", "b"],
                          "dataset": "{dataset}"}},
            "attack": {{"kind": "mai-gradient", "step": 1.0, "iters": 200}},
            "metric": {{"kind": "exact-match", "addressing": "aligned"}},
            "n": 4, "k": 4, "seed": 11, "eps": 1.0, "delta": 1e-5
        }}"#
        )
    }

    #[test]
    fn marginal_config_with_csv_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("known.csv");
        let mut f = std::fs::File::create(&csv_path).unwrap();
        writeln!(f, "b,a\n0,0\n1,0\n0,1\n1,1").unwrap();
        let cfg: ExperimentConfig = serde_json::from_str(&marginal_json("known.csv")).unwrap();
        let resolved = resolve_experiment(&cfg, dir.path()).unwrap();
        match &resolved.game.spec {
            GameSpec::Marginal(g) => {
                // CSV columns are named, so the (b, a) file order still
                // lands as ascending attribute index (a, b).
                assert_eq!(
                    g.known_values,
                    vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
                );
                assert_eq!(g.unknown_attrs, vec![2]);
            }
            _ => panic!("expected marginal game"),
        }
        assert_eq!(resolved.eps, 1.0);
        let t = run_game(&resolved.game).unwrap();
        assert_eq!(t.records.len(), 4);
    }

    #[test]
    fn l1_metric_requires_ordinal_unknowns() {
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("known.csv");
        std::fs::write(&csv_path, "b,a\n0,0\n1,0\n0,1\n1,1\n").unwrap();
        let json = marginal_json("known.csv").replace(
            r#"{"kind": "exact-match", "addressing": "aligned"}"#,
            r#"{"kind": "l1-ball", "E": 1, "addressing": "aligned"}"#,
        );
        // With c still ordinal this parses and resolves.
        let cfg: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert!(resolve_experiment(&cfg, dir.path()).is_ok());
        // Strip the ordinal flag: resolution must fail.
        let json = json.replace(r#""size": 2, "ordinal": true"#, r#""size": 2"#);
        let cfg: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert!(resolve_experiment(&cfg, dir.path()).is_err());
    }
}
