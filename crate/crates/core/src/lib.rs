//! High-probability upper bounds on the success of reconstruction and
//! inference attacks against differentially private mechanisms, together
//! with a simulation harness that validates the bounds end to end.
//!
//! The library is organized bottom-up:
//!
//! - [`dist`]: exact Poisson-binomial distributions (pmf, tails, quantiles)
//!   and Clopper-Pearson intervals;
//! - [`priors`]: categorical, uniform, Zipf, product, and conditional data
//!   priors, with analytic prior success probabilities;
//! - [`metrics`]: decomposable 0/1 loss metrics (exact match, L1 ball,
//!   L2 threshold, membership bit) under aligned or pooled addressing;
//! - [`bounds`]: the flipping probability β(ε, p), pure- and approximate-DP
//!   attack success bounds, bit leakage, advantage, and baselines;
//! - [`mechanisms`]: randomized response, Gaussian noisy k-way marginals,
//!   and μ-GDP noise calibration;
//! - [`attacks`]: the Bayes-optimal randomized-response attacker, the
//!   prior-only baseline, and gradient-based multi-attribute inference;
//! - [`game`]: the end-to-end attack game, one-run upper-bound estimator,
//!   and multi-replay validation experiments;
//! - [`config`]: the JSON experiment configuration surface.
//!
//! Everything is deterministic given a master seed: randomness flows
//! through keyed sub-streams (see [`seed`]) so results are independent of
//! scheduling and thread count.

pub mod attacks;
pub mod bounds;
pub mod config;
pub mod dist;
pub mod error;
pub mod game;
pub mod mechanisms;
pub mod metrics;
pub mod priors;
pub mod seed;
pub mod value;

pub use attacks::{mai_gradient_attack, prior_only_attack, rr_bayes_attack, MaiConfig, MaiProblem};
pub use bounds::{
    advantage, baseline_narcissus, baseline_rero, beta, bits_leaked, bound_approx_mc,
    bound_approx_onerun, bound_pure, eps_protect, lp_alpha, BoundKind, BoundResult, PrivacyParams,
};
pub use config::{
    load_experiment, resolve_experiment, AttackSpec, ExperimentConfig, MechanismSpec,
    ResolvedExperiment,
};
pub use dist::{
    binomial_ci, dominance_report, pb_pmf, pb_quantile, pb_tail, BernoulliProfile, TailTable,
};
pub use error::{Error, Result};
pub use game::{
    estimate_vub, replay_experiment, run_game, AttackTranscript, EstimatorResult, GameConfig,
    GameSpec, MarginalAttackKind, MarginalGame, MechanismOutput, ReplayResult, ReplaySummary,
    RrAttackKind, RrGame,
};
pub use mechanisms::{
    calibrate_sigma, composition_count, exact_marginals, gdp_delta, marginal_query,
    noisy_marginals, rr_keep_prob, rr_mechanism, std_normal_cdf, std_normal_quantile,
    CalibrationResult, MarginalWorkload,
};
pub use metrics::{eval_loss, metric_total, Addressing, LossMetricSpec, MetricKind};
pub use priors::{
    bayes_optimal_prior_guess, condition, prior_success, uniform_prior, zipf_norm, zipf_prior,
    Categorical, ConditionalPriorTable, Prior, PriorFile, PriorSpec, ProductPrior,
};
pub use value::Value;
