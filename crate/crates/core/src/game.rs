//! The generic attack game, end to end: sample targets from the prior, run
//! the mechanism, run the attack on the mechanism output alone, score the
//! decomposable metric, and derive the one-run statistical upper bound.

use crate::attacks::{
    mai_gradient_attack, prior_only_attack, rr_bayes_attack, MaiConfig, MaiProblem,
};
use crate::bounds::beta;
use crate::dist::{BernoulliProfile, TailTable};
use crate::error::{Error, Result};
use crate::mechanisms::{noisy_marginals, rr_mechanism, MarginalWorkload};
use crate::metrics::{metric_total, LossMetricSpec, MetricKind};
use crate::priors::{condition, prior_success, ConditionalPriorTable, Prior, ProductPrior};
use crate::seed::{derive_rng, derive_seed};
use crate::value::Value;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RrAttackKind {
    RrBayes,
    PriorOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MarginalAttackKind {
    MaiGradient(MaiConfig),
    PriorOnly,
}

/// Per-record randomized response game: n independent targets, one RR
/// output per target.
#[derive(Clone, Debug)]
pub struct RrGame {
    pub prior: ProductPrior,
    pub eps: f64,
    pub m: usize,
    pub attack: RrAttackKind,
    pub metric: LossMetricSpec,
}

/// Noisy k-way marginal game: records with fixed known columns, unknown
/// columns sampled from the conditional prior, one marginal release.
#[derive(Clone, Debug)]
pub struct MarginalGame {
    pub workload: MarginalWorkload,
    pub known_attrs: Vec<usize>,
    pub unknown_attrs: Vec<usize>,
    pub known_values: Vec<Vec<usize>>,
    pub cond_prior: ConditionalPriorTable,
    pub sigma: f64,
    pub attack: MarginalAttackKind,
    pub metric: LossMetricSpec,
    /// Passed to the mechanism, excluded from scoring.
    pub fixed_records: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub enum GameSpec {
    Rr(RrGame),
    Marginal(MarginalGame),
}

#[derive(Clone, Debug)]
pub struct GameConfig {
    pub spec: GameSpec,
    pub seed: u64,
}

impl GameConfig {
    pub fn n(&self) -> usize {
        match &self.spec {
            GameSpec::Rr(g) => g.prior.n(),
            GameSpec::Marginal(g) => g.known_values.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MechanismOutput {
    RrOutputs(Vec<usize>),
    MarginalVector(Vec<f64>),
}

/// One play of the game. `prior_successes` are computed from the prior and
/// the realized guesses, never from the sampled records.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttackTranscript {
    pub records: Vec<Value>,
    pub output: MechanismOutput,
    pub guesses: Vec<Value>,
    pub successes: Vec<bool>,
    pub total: usize,
    pub prior_successes: Vec<f64>,
    pub seed: u64,
}

fn rr_prior_probs(factor: &Prior, m: usize) -> Result<Vec<f64>> {
    match factor {
        Prior::Explicit(cat) => {
            if cat.len() != m {
                return Err(Error::invalid(format!(
                    "prior domain size {} does not match mechanism domain {m}",
                    cat.len()
                )));
            }
            for (i, v) in cat.domain().iter().enumerate() {
                if v.as_int() != Some(i as i64) {
                    return Err(Error::invalid(
                        "randomized response requires an integer domain 0..m-1 in order",
                    ));
                }
            }
            Ok(cat.probs().to_vec())
        }
        Prior::Uniform { size } => {
            if *size as usize != m {
                return Err(Error::invalid(format!(
                    "prior domain size {size} does not match mechanism domain {m}"
                )));
            }
            Ok(vec![1.0 / m as f64; m])
        }
        Prior::Zipf { .. } => Err(Error::invalid(
            "materialize zipf priors before running a randomized response game",
        )),
    }
}

fn run_rr_game(game: &RrGame, seed: u64) -> Result<AttackTranscript> {
    let n = game.prior.n();
    let mut sampled = Vec::with_capacity(n);
    let mut outputs = Vec::with_capacity(n);
    let probs_per_record: Vec<Vec<f64>> = game
        .prior
        .factors()
        .iter()
        .map(|f| rr_prior_probs(f, game.m))
        .collect::<Result<_>>()
        .map_err(|e| e.at_stage("sampling"))?;
    for i in 0..n {
        let mut rng = derive_rng(seed, "sample", i as u64);
        let x = game
            .prior
            .factor(i)
            .sample(&mut rng)
            .map_err(|e| e.at_stage("sampling"))?;
        let xi = x.as_int().unwrap() as usize;
        sampled.push(xi);
        let mut rng = derive_rng(seed, "mechanism", i as u64);
        let a =
            rr_mechanism(xi, game.eps, game.m, &mut rng).map_err(|e| e.at_stage("mechanism"))?;
        outputs.push(a);
    }
    // The attack sees only the mechanism outputs and the prior.
    let guesses: Vec<Value> = match game.attack {
        RrAttackKind::RrBayes => outputs
            .iter()
            .enumerate()
            .map(|(i, &a)| Value::Int(rr_bayes_attack(a, &probs_per_record[i], game.eps) as i64))
            .collect(),
        RrAttackKind::PriorOnly => {
            prior_only_attack(&game.prior, &game.metric, n).map_err(|e| e.at_stage("attack"))?
        }
    };
    let records: Vec<Value> = sampled.iter().map(|&x| Value::Int(x as i64)).collect();
    finish_transcript(
        records,
        MechanismOutput::RrOutputs(outputs),
        guesses,
        game.prior.factors(),
        &game.metric,
        seed,
    )
}

fn run_marginal_game(game: &MarginalGame, seed: u64) -> Result<AttackTranscript> {
    let n = game.known_values.len();
    if n == 0 {
        return Err(Error::invalid("marginal game needs at least one record"));
    }
    let d = game.workload.domain_sizes().len();
    let mut rows = Vec::with_capacity(n + game.fixed_records.len());
    let mut unknown_values: Vec<Value> = Vec::with_capacity(n);
    let mut factors: Vec<Prior> = Vec::with_capacity(n);
    for (i, known) in game.known_values.iter().enumerate() {
        let key: Vec<i64> = known.iter().map(|&v| v as i64).collect();
        let cond = condition(&game.cond_prior, &key).map_err(|e| e.at_stage("sampling"))?;
        let mut rng = derive_rng(seed, "sample", i as u64);
        let unknown = cond.sample(&mut rng);
        let tuple = value_to_tuple(&unknown, game.unknown_attrs.len())
            .map_err(|e| e.at_stage("sampling"))?;
        let mut row = vec![0usize; d];
        for (ki, &a) in game.known_attrs.iter().enumerate() {
            row[a] = known[ki];
        }
        for (ui, &a) in game.unknown_attrs.iter().enumerate() {
            row[a] = tuple[ui];
        }
        rows.push(row);
        unknown_values.push(unknown);
        factors.push(Prior::Explicit(cond.clone()));
    }
    rows.extend(game.fixed_records.iter().cloned());
    let released = noisy_marginals(
        &rows,
        &game.workload,
        game.sigma,
        derive_seed(seed, "mechanism", 0),
    )
    .map_err(|e| e.at_stage("mechanism"))?;

    // The attack sees the released vector, the known columns, and the
    // conditional prior; never the sampled unknowns.
    let problem = MaiProblem {
        workload: &game.workload,
        known_attrs: &game.known_attrs,
        unknown_attrs: &game.unknown_attrs,
        known_values: &game.known_values,
        cond_prior: &game.cond_prior,
    };
    let guesses: Vec<Value> = match &game.attack {
        MarginalAttackKind::MaiGradient(cfg) => mai_gradient_attack(&released, &problem, cfg)
            .map_err(|e| e.at_stage("attack"))?
            .into_iter()
            .map(|tuple| tuple_to_value(&tuple))
            .collect(),
        MarginalAttackKind::PriorOnly => {
            let prior = ProductPrior::new(factors.clone())?;
            prior_only_attack(&prior, &game.metric, n).map_err(|e| e.at_stage("attack"))?
        }
    };
    finish_transcript(
        unknown_values,
        MechanismOutput::MarginalVector(released),
        guesses,
        &factors,
        &game.metric,
        seed,
    )
}

fn value_to_tuple(v: &Value, arity: usize) -> Result<Vec<usize>> {
    let ints: Vec<i64> = match v {
        Value::Int(x) if arity == 1 => vec![*x],
        Value::Ints(xs) if xs.len() == arity => xs.clone(),
        other => {
            return Err(Error::invalid(format!(
                "value {other:?} does not encode a tuple of {arity} unknown attributes"
            )))
        }
    };
    ints.iter()
        .map(|&x| {
            usize::try_from(x).map_err(|_| Error::invalid(format!("negative attribute code {x}")))
        })
        .collect()
}

fn tuple_to_value(tuple: &[usize]) -> Value {
    if tuple.len() == 1 {
        Value::Int(tuple[0] as i64)
    } else {
        Value::Ints(tuple.iter().map(|&v| v as i64).collect())
    }
}

fn finish_transcript(
    records: Vec<Value>,
    output: MechanismOutput,
    guesses: Vec<Value>,
    factors: &[Prior],
    metric: &LossMetricSpec,
    seed: u64,
) -> Result<AttackTranscript> {
    let mut successes = Vec::with_capacity(records.len());
    let mut prior_successes = Vec::with_capacity(records.len());
    for (i, record) in records.iter().enumerate() {
        successes.push(
            crate::metrics::eval_loss(metric, record, &guesses, i)
                .map_err(|e| e.at_stage("scoring"))?,
        );
        prior_successes.push(
            prior_success(&factors[i], metric, &guesses, i).map_err(|e| e.at_stage("scoring"))?,
        );
    }
    let total = successes.iter().filter(|&&s| s).count();
    debug_assert_eq!(total, metric_total(metric, &records, &guesses)?);
    Ok(AttackTranscript {
        records,
        output,
        guesses,
        successes,
        total,
        prior_successes,
        seed,
    })
}

/// One full play of the generic attack game, deterministic given the seed.
pub fn run_game(cfg: &GameConfig) -> Result<AttackTranscript> {
    match &cfg.spec {
        GameSpec::Rr(g) => run_rr_game(g, cfg.seed),
        GameSpec::Marginal(g) => run_marginal_game(g, cfg.seed),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub alphas: Vec<f64>,
    pub v_ub: Vec<usize>,
    pub profile: BernoulliProfile,
}

/// One-run estimator: β_i = β(ε, p_i) from the transcript's prior success
/// probabilities; v_UB(α) is the smallest v whose inflated tail at v+1
/// drops to α. For δ = 0 the inflation vanishes and this is the plain
/// Poisson-binomial quantile.
pub fn estimate_vub(
    transcript: &AttackTranscript,
    eps: f64,
    delta: f64,
    alphas: &[f64],
) -> Result<EstimatorResult> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta = {delta} outside [0, 1]")));
    }
    let betas: Vec<f64> = transcript
        .prior_successes
        .iter()
        .map(|&p| beta(eps, p))
        .collect::<Result<_>>()?;
    let profile = BernoulliProfile::new(betas)?;
    let n = profile.len();
    let table = TailTable::from_profile(&profile);
    let mut v_ub = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha = {alpha} outside (0, 1)")));
        }
        let mut chosen = n;
        for v in 0..=n {
            let t = v as i64 + 1;
            let inflated =
                table.survival(t) + crate::bounds::lp_alpha(&profile, t) * n as f64 * delta;
            if inflated <= alpha {
                chosen = v;
                break;
            }
        }
        v_ub.push(chosen);
    }
    Ok(EstimatorResult {
        alphas: alphas.to_vec(),
        v_ub,
        profile,
    })
}

/// Aggregate view over many independent replays of the same game.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplaySummary {
    pub schema: String,
    pub n: usize,
    pub replays: usize,
    pub eps: f64,
    pub delta: f64,
    pub alphas: Vec<f64>,
    /// Fraction of replays with W <= v_UB(alpha), per alpha.
    pub coverage: Vec<f64>,
    /// Histogram of the attack success total W.
    pub w_histogram: Vec<usize>,
    /// Empirical Pr[W >= t] for t in 0..=n.
    pub empirical_tail: Vec<f64>,
    /// Mean per-replay dominating tail plus n·δ, per t.
    pub bound_tail: Vec<f64>,
    /// Binomial standard error of the empirical tail, per t.
    pub mc_se: Vec<f64>,
}

impl ReplaySummary {
    /// Rows (t, empirical_tail, bound_tail) for plotting.
    pub fn csv_rows(&self) -> Vec<(usize, f64, f64)> {
        (0..=self.n)
            .map(|t| (t, self.empirical_tail[t], self.bound_tail[t]))
            .collect()
    }
}

pub struct ReplayResult {
    pub summary: ReplaySummary,
    pub totals: Vec<usize>,
    pub profiles: Vec<BernoulliProfile>,
}

/// Run the game on `replays` independently derived seeds and aggregate:
/// the empirical distribution of W, the marginalized dominating tail
/// (mean of per-replay tails plus n·δ), and estimator coverage per alpha.
pub fn replay_experiment(
    cfg: &GameConfig,
    replays: usize,
    eps: f64,
    delta: f64,
    alphas: &[f64],
) -> Result<ReplayResult> {
    if replays == 0 {
        return Err(Error::invalid("replay_experiment needs replays >= 1"));
    }
    let n = cfg.n();
    let mut totals = Vec::with_capacity(replays);
    let mut profiles = Vec::with_capacity(replays);
    let mut covered = vec![0usize; alphas.len()];
    let mut tail_sum = vec![0.0; n + 1];
    for r in 0..replays {
        let replay_cfg = GameConfig {
            spec: cfg.spec.clone(),
            seed: derive_seed(cfg.seed, "replay", r as u64),
        };
        let transcript = run_game(&replay_cfg)?;
        let est = estimate_vub(&transcript, eps, delta, alphas)?;
        for (ai, &v) in est.v_ub.iter().enumerate() {
            if transcript.total <= v {
                covered[ai] += 1;
            }
        }
        let table = TailTable::from_profile(&est.profile);
        for (t, slot) in tail_sum.iter_mut().enumerate() {
            *slot += table.survival(t as i64);
        }
        totals.push(transcript.total);
        profiles.push(est.profile);
    }
    let r_f = replays as f64;
    let mut w_histogram = vec![0usize; n + 1];
    for &w in &totals {
        w_histogram[w] += 1;
    }
    let mut empirical_tail = vec![0.0; n + 1];
    let mut at_least = 0usize;
    for t in (0..=n).rev() {
        at_least += w_histogram[t];
        empirical_tail[t] = at_least as f64 / r_f;
    }
    let bound_tail: Vec<f64> = tail_sum
        .iter()
        .map(|&s| (s / r_f + n as f64 * delta).min(1.0))
        .collect();
    let mc_se: Vec<f64> = empirical_tail
        .iter()
        .map(|&p| (p * (1.0 - p) / r_f).sqrt())
        .collect();
    let coverage: Vec<f64> = covered.iter().map(|&c| c as f64 / r_f).collect();
    Ok(ReplayResult {
        summary: ReplaySummary {
            schema: "v1".into(),
            n,
            replays,
            eps,
            delta,
            alphas: alphas.to_vec(),
            coverage,
            w_histogram,
            empirical_tail,
            bound_tail,
            mc_se,
        },
        totals,
        profiles,
    })
}

/// Enforce the ordinal declaration: L1-ball metrics only apply to columns
/// declared ordinal in the experiment config.
pub fn check_metric_applicability(
    metric: &LossMetricSpec,
    attr_ordinal: &[bool],
    target_attrs: &[usize],
) -> Result<()> {
    if let MetricKind::L1Ball { .. } = metric.kind {
        for &a in target_attrs {
            if !attr_ordinal.get(a).copied().unwrap_or(false) {
                return Err(Error::invalid(format!(
                    "L1 metric applied to attribute {a} which is not declared ordinal"
                )));
            }
        }
    }
    Ok(())
}
