//! Command-line surface: compute attack-success bounds, calibrate Gaussian
//! noise, run simulation experiments, and emit comparison tables.

use clap::{Parser, Subcommand, ValueEnum};
use leakbound::{
    baseline_narcissus, baseline_rero, bayes_optimal_prior_guess, bound_approx_mc,
    bound_approx_onerun, bound_pure, calibrate_sigma, composition_count, eps_protect,
    load_experiment, prior_success, replay_experiment, zipf_prior, Addressing, Error,
    LossMetricSpec, Prior, PriorFile, PrivacyParams, ProductPrior, Result,
};
use std::path::{Path, PathBuf};

const OUT_DIR_ENV: &str = "LEAKBOUND_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "leakbound",
    version,
    about = "Upper bounds on attack success against differentially private mechanisms",
    after_help = "CSV columns:\n  \
        simulate tails.csv: t, empirical_tail, bound_tail\n  \
        compare: p, eps, ours, rero, narcissus\n\
        Environment: LEAKBOUND_OUT_DIR sets the default --out directory."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute an attack-success bound
    Bound(BoundArgs),
    /// Calibrate Gaussian noise for a marginal workload
    Calibrate(CalibrateArgs),
    /// Run a configured experiment and emit its summary
    Simulate(SimulateArgs),
    /// Emit a comparison table against baseline bounds
    Compare(CompareArgs),
    /// Largest eps keeping the advantage below a threshold
    Protect(ProtectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundKindArg {
    Pure,
    ApproxOnerun,
    ApproxMc,
}

#[derive(Parser)]
struct BoundArgs {
    /// Which bound to compute
    #[arg(long, value_enum)]
    kind: BoundKindArg,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Prior: a probability, `uniform:SIZE`, `zipf:SIZE:S`, or a JSON file
    #[arg(long, required_unless_present = "config")]
    prior: Option<String>,
    /// Success threshold v
    #[arg(long, default_value_t = 1)]
    v: i64,
    /// Number of target records
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Experiment config for the Monte Carlo (approx-mc) bound
    #[arg(long)]
    config: Option<PathBuf>,
    /// Confidence level of the Monte Carlo interval
    #[arg(long, default_value_t = 0.95)]
    conf: f64,
}

#[derive(Parser)]
struct CalibrateArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    /// Total number of attributes
    #[arg(long)]
    d: u64,
    /// Marginal order
    #[arg(long)]
    k: u64,
    /// Number of unknown attributes
    #[arg(long)]
    unknown: u64,
}

#[derive(Parser)]
struct SimulateArgs {
    /// Experiment config JSON
    #[arg(long)]
    config: PathBuf,
    /// Directory for summary.json and tails.csv (default: $LEAKBOUND_OUT_DIR)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Parser)]
struct CompareArgs {
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    /// Epsilon values, one row set per value
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 4.0])]
    eps: Vec<f64>,
    /// Number of log-spaced prior points
    #[arg(long, default_value_t = 50)]
    points: usize,
    #[arg(long, default_value_t = 1e-6)]
    p_min: f64,
    #[arg(long, default_value_t = 0.5)]
    p_max: f64,
}

#[derive(Parser)]
struct ProtectArgs {
    /// Prior: a probability, `uniform:SIZE`, `zipf:SIZE:S`, or a JSON file
    #[arg(long)]
    prior: String,
    #[arg(long)]
    threshold: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Bound(a) => cmd_bound(&a),
        Cmd::Calibrate(a) => cmd_calibrate(&a),
        Cmd::Simulate(a) => cmd_simulate(&a),
        Cmd::Compare(a) => cmd_compare(&a),
        Cmd::Protect(a) => cmd_protect(&a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

/// Round every number in a JSON tree to 9 significant digits.
fn round_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.as_i64().is_none() && n.as_u64().is_none() {
                    if let Some(rounded) = serde_json::Number::from_f64(sig9(f)) {
                        *value = serde_json::Value::Number(rounded);
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        x
    } else {
        format!("{x:.8e}").parse().unwrap_or(x)
    }
}

fn fmt9(x: f64) -> String {
    sig9(x).to_string()
}

fn print_report(command: &str, body: serde_json::Value) -> Result<()> {
    let mut doc = serde_json::json!({ "schema": "v1", "command": command });
    if let (Some(doc_map), serde_json::Value::Object(body_map)) = (doc.as_object_mut(), body) {
        doc_map.extend(body_map);
    }
    round_json(&mut doc);
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(e.to_string()))?
    );
    Ok(())
}

enum PriorArg {
    Scalar(f64),
    Structured(Prior),
}

fn parse_prior(s: &str) -> Result<PriorArg> {
    if let Some(rest) = s.strip_prefix("uniform:") {
        let size: u64 = rest
            .parse()
            .map_err(|e| Error::Config(format!("prior size in {s:?}: {e}")))?;
        return Ok(PriorArg::Structured(Prior::Uniform { size }));
    }
    if let Some(rest) = s.strip_prefix("zipf:") {
        let (size, exponent) = rest
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("expected zipf:SIZE:S, got {s:?}")))?;
        let size: u64 = size
            .parse()
            .map_err(|e| Error::Config(format!("prior size in {s:?}: {e}")))?;
        let exponent: f64 = exponent
            .parse()
            .map_err(|e| Error::Config(format!("zipf exponent in {s:?}: {e}")))?;
        if size <= 10_000_000 {
            return Ok(PriorArg::Structured(Prior::Explicit(zipf_prior(
                size, exponent,
            )?)));
        }
        let norm = leakbound::zipf_norm(size, exponent)?;
        return Ok(PriorArg::Structured(Prior::Zipf {
            size,
            s: exponent,
            norm,
        }));
    }
    if let Ok(p) = s.parse::<f64>() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!(
                "prior probability {p} outside [0, 1]"
            )));
        }
        return Ok(PriorArg::Scalar(p));
    }
    let text = std::fs::read_to_string(s).map_err(|e| Error::Config(format!("{s}: {e}")))?;
    let file: PriorFile =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{s}: {e}")))?;
    match file.parse()? {
        leakbound::PriorSpec::Single(p) => Ok(PriorArg::Structured(p)),
        leakbound::PriorSpec::Conditional(_) => Err(Error::Config(
            "conditional priors need a full experiment config; use simulate".into(),
        )),
    }
}

/// A-priori success probability of the Bayes-optimal exact-match attempt.
fn scalar_prior(arg: &PriorArg) -> Result<f64> {
    match arg {
        PriorArg::Scalar(p) => Ok(*p),
        PriorArg::Structured(prior) => {
            let metric = LossMetricSpec::exact(Addressing::Aligned);
            let guess = bayes_optimal_prior_guess(prior, &metric)?;
            prior_success(prior, &metric, &[guess], 0)
        }
    }
}

fn cmd_bound(args: &BoundArgs) -> Result<()> {
    let params = PrivacyParams::new(args.eps, args.delta)?;
    let result =
        match args.kind {
            BoundKindArg::Pure => {
                let prior =
                    parse_prior(args.prior.as_deref().ok_or_else(|| {
                        Error::Config("--prior is required for --kind pure".into())
                    })?)?;
                let p = scalar_prior(&prior)?;
                bound_pure(PrivacyParams::pure(args.eps)?, &vec![p; args.n], args.v)?
            }
            BoundKindArg::ApproxOnerun => {
                let prior =
                    match parse_prior(args.prior.as_deref().ok_or_else(|| {
                        Error::Config("--prior is required for --kind approx-onerun".into())
                    })?)? {
                        PriorArg::Structured(p) => p,
                        PriorArg::Scalar(_) => return Err(Error::Config(
                            "approx-onerun needs a structured prior (uniform:, zipf:, or a file)"
                                .into(),
                        )),
                    };
                let product = ProductPrior::replicated(prior, args.n)?;
                let metric = LossMetricSpec::exact(Addressing::Aligned);
                bound_approx_onerun(params, &product, &metric, args.v)?
            }
            BoundKindArg::ApproxMc => {
                let config = args.config.as_deref().ok_or_else(|| {
                    Error::Config("--config is required for --kind approx-mc".into())
                })?;
                let exp = load_experiment(config)?;
                let res =
                    replay_experiment(&exp.game, exp.replays, exp.eps, exp.delta, &exp.alphas)?;
                bound_approx_mc(params, &res.profiles, args.v, args.conf)?
            }
        };
    let body = serde_json::to_value(&result).map_err(|e| Error::Config(e.to_string()))?;
    print_report("bound", body)
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<()> {
    let m = composition_count(args.d, args.k, args.unknown)?;
    let cal = calibrate_sigma(args.eps, args.delta, m)?;
    print_report(
        "calibrate",
        serde_json::json!({
            "m": cal.m,
            "mu": cal.mu,
            "sigma": cal.sigma,
        }),
    )
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let exp = load_experiment(&args.config)?;
    let res = replay_experiment(&exp.game, exp.replays, exp.eps, exp.delta, &exp.alphas)?;
    let body = serde_json::to_value(&res.summary).map_err(|e| Error::Config(e.to_string()))?;

    let out_dir = args
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from));
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(&dir)
            .map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
        let mut doc = serde_json::json!({ "schema": "v1", "command": "simulate" });
        if let (Some(map), serde_json::Value::Object(b)) = (doc.as_object_mut(), body.clone()) {
            map.extend(b);
        }
        round_json(&mut doc);
        write_atomic(
            &dir.join("summary.json"),
            format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(e.to_string()))?
            )
            .as_bytes(),
        )?;
        let mut csv = String::from("t,empirical_tail,bound_tail\n");
        for (t, emp, bound) in res.summary.csv_rows() {
            csv.push_str(&format!("{t},{},{}\n", fmt9(emp), fmt9(bound)));
        }
        write_atomic(&dir.join("tails.csv"), csv.as_bytes())?;
    }
    print_report("simulate", body)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::Config(format!("{}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    if args.points < 2 {
        return Err(Error::Config("--points must be at least 2".into()));
    }
    if !(args.p_min > 0.0 && args.p_min < args.p_max && args.p_max <= 1.0) {
        return Err(Error::Config(
            "need 0 < p-min < p-max <= 1 for the prior grid".into(),
        ));
    }
    let mut out = String::from("p,eps,ours,rero,narcissus\n");
    for &eps in &args.eps {
        let params = PrivacyParams::pure(eps)?;
        let (lo, hi) = (args.p_min.log10(), args.p_max.log10());
        for i in 0..args.points {
            let p = 10f64.powf(lo + i as f64 * (hi - lo) / (args.points - 1) as f64);
            let ours = bound_pure(params, &[p], 1)?.value;
            let rero = baseline_rero(eps, p);
            let narcissus = baseline_narcissus(eps, args.delta, p);
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt9(p),
                fmt9(eps),
                fmt9(ours),
                fmt9(rero),
                fmt9(narcissus)
            ));
        }
    }
    print!("{out}");
    Ok(())
}

fn cmd_protect(args: &ProtectArgs) -> Result<()> {
    let prior = parse_prior(&args.prior)?;
    let p = scalar_prior(&prior)?;
    let eps = eps_protect(p, args.threshold, args.delta)?;
    print_report(
        "protect",
        serde_json::json!({
            "prior": p,
            "threshold": args.threshold,
            "delta": args.delta,
            "eps_protect": eps,
        }),
    )
}
