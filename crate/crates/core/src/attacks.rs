//! Concrete adversaries: the Bayes-optimal randomized-response attacker,
//! the prior-only baseline, and the gradient-based multi-attribute
//! inference attack on noisy marginal releases.

use crate::error::{Error, Result};
use crate::mechanisms::MarginalWorkload;
use crate::metrics::{Addressing, LossMetricSpec, MetricKind};
use crate::priors::{
    bayes_optimal_prior_guess, condition, prior_success, Categorical, ConditionalPriorTable, Prior,
    ProductPrior,
};
use crate::value::Value;
use serde::{Deserialize, Serialize};

/// Hyperparameters of the gradient M-AI attack.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaiConfig {
    pub step: f64,
    pub iters: usize,
}

impl Default for MaiConfig {
    fn default() -> Self {
        Self {
            step: 0.05,
            iters: 2000,
        }
    }
}

impl MaiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step <= 0.0 || !self.step.is_finite() {
            return Err(Error::invalid(format!("step = {} must be > 0", self.step)));
        }
        Ok(())
    }
}

/// Bayes-optimal single-record attack on randomized response: keep the
/// mechanism output a when prior(a)·e^ε dominates every other prior mass,
/// otherwise fall back to the prior mode. Ties to the lowest index.
pub fn rr_bayes_attack(output: usize, prior_probs: &[f64], eps: f64) -> usize {
    let pa = prior_probs[output] * eps.exp();
    if prior_probs
        .iter()
        .enumerate()
        .all(|(b, &pb)| b == output || pa >= pb)
    {
        return output;
    }
    let mut best = 0;
    for (i, &p) in prior_probs.iter().enumerate() {
        if p > prior_probs[best] {
            best = i;
        }
    }
    best
}

/// Candidate guesses for greedy pooled selection from one prior factor.
fn candidates(prior: &Prior, metric: &LossMetricSpec, k: usize) -> Result<Vec<Value>> {
    match prior {
        Prior::Explicit(cat) => Ok(cat.domain().to_vec()),
        Prior::Uniform { size } => {
            let window = match &metric.kind {
                MetricKind::L1Ball { e } => (k as u64 + 1) * (2 * e + 1) + 1,
                _ => k as u64,
            };
            Ok((0..(*size).min(window) as i64).map(Value::Int).collect())
        }
        Prior::Zipf { size, .. } => {
            let window = match &metric.kind {
                MetricKind::L1Ball { e } => (k as u64 + 1) * (2 * e + 1) + 1,
                _ => k as u64,
            };
            Ok((1..=(*size).min(window) as i64).map(Value::Int).collect())
        }
    }
}

/// Attack attempt built from the prior alone, without the mechanism output.
/// Aligned: the per-record Bayes-optimal guess (k must equal n). Pooled:
/// k guesses chosen greedily to maximize total prior success.
pub fn prior_only_attack(
    prior: &ProductPrior,
    metric: &LossMetricSpec,
    k: usize,
) -> Result<Vec<Value>> {
    if k == 0 {
        return Err(Error::invalid("prior_only_attack needs k >= 1"));
    }
    match metric.addressing {
        Addressing::Aligned => {
            if k != prior.n() {
                return Err(Error::invalid(format!(
                    "aligned addressing requires k = n = {}, got k = {k}",
                    prior.n()
                )));
            }
            prior
                .factors()
                .iter()
                .map(|f| bayes_optimal_prior_guess(f, metric))
                .collect()
        }
        Addressing::Pooled => {
            let mut cands: Vec<Value> = Vec::new();
            for factor in prior.factors() {
                for c in candidates(factor, metric, k)? {
                    if !cands.contains(&c) {
                        cands.push(c);
                    }
                }
            }
            let total = |guesses: &[Value]| -> Result<f64> {
                let mut sum = 0.0;
                for (i, factor) in prior.factors().iter().enumerate() {
                    sum += prior_success(factor, metric, guesses, i)?;
                }
                Ok(sum)
            };
            let mut selected: Vec<Value> = Vec::new();
            for _ in 0..k {
                let mut best: Option<(f64, usize)> = None;
                for (ci, cand) in cands.iter().enumerate() {
                    if selected.contains(cand) {
                        continue;
                    }
                    let mut trial = selected.clone();
                    trial.push(cand.clone());
                    let score = total(&trial)?;
                    if best.is_none_or(|(bs, _)| score > bs) {
                        best = Some((score, ci));
                    }
                }
                match best {
                    Some((_, ci)) => selected.push(cands[ci].clone()),
                    None => break, // fewer candidates than k
                }
            }
            Ok(selected)
        }
    }
}

/// The fixed data of one M-AI instance: workload, which attributes are
/// known vs unknown, the per-record known values, and the conditional
/// prior over unknown tuples given known tuples.
pub struct MaiProblem<'a> {
    pub workload: &'a MarginalWorkload,
    pub known_attrs: &'a [usize],
    pub unknown_attrs: &'a [usize],
    pub known_values: &'a [Vec<usize>],
    pub cond_prior: &'a ConditionalPriorTable,
}

impl<'a> MaiProblem<'a> {
    fn validate(&self) -> Result<()> {
        let d = self.workload.domain_sizes().len();
        let mut seen = vec![false; d];
        for &a in self.known_attrs.iter().chain(self.unknown_attrs) {
            if a >= d || seen[a] {
                return Err(Error::invalid(format!(
                    "attribute {a} repeated or out of range"
                )));
            }
            seen[a] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::invalid(
                "known and unknown attributes must partition the workload attributes",
            ));
        }
        if self.unknown_attrs.is_empty() {
            return Err(Error::invalid("at least one unknown attribute required"));
        }
        for (ri, row) in self.known_values.iter().enumerate() {
            if row.len() != self.known_attrs.len() {
                return Err(Error::invalid(format!(
                    "record {ri} has {} known values, expected {}",
                    row.len(),
                    self.known_attrs.len()
                )));
            }
        }
        Ok(())
    }

    fn n_records(&self) -> usize {
        self.known_values.len()
    }
}

/// Per-cell probability distribution of an unknown-tuple Categorical,
/// marginalized onto each unknown attribute.
fn marginalize_conditional(
    cond: &Categorical,
    unknown_attrs: &[usize],
    domain_sizes: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let mut cells: Vec<Vec<f64>> = unknown_attrs
        .iter()
        .map(|&a| vec![0.0; domain_sizes[a]])
        .collect();
    for (v, &p) in cond.domain().iter().zip(cond.probs()) {
        let tuple: Vec<i64> = match v {
            Value::Int(x) if unknown_attrs.len() == 1 => vec![*x],
            Value::Ints(xs) if xs.len() == unknown_attrs.len() => xs.clone(),
            other => {
                return Err(Error::invalid(format!(
                    "conditional prior value {other:?} does not match {} unknown attributes",
                    unknown_attrs.len()
                )))
            }
        };
        for (u, &x) in tuple.iter().enumerate() {
            let size = domain_sizes[unknown_attrs[u]];
            if x < 0 || x as usize >= size {
                return Err(Error::invalid(format!(
                    "conditional prior value {x} outside domain of size {size}"
                )));
            }
            cells[u][x as usize] += p;
        }
    }
    Ok(cells)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let n = v.len();
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        acc += u;
        let t = (acc - 1.0) / (i as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        for x in v.iter_mut() {
            *x /= sum;
        }
    } else {
        let p = 1.0 / n as f64;
        v.iter_mut().for_each(|x| *x = p);
    }
}

/// The relaxed dataset: per record, one probability vector per unknown
/// attribute. Known cells stay one-hot by construction and are never part
/// of the optimization state.
pub struct RelaxedDataset {
    /// cells[record][unknown_index][value]
    pub cells: Vec<Vec<Vec<f64>>>,
}

impl RelaxedDataset {
    pub fn init_from_prior(problem: &MaiProblem) -> Result<Self> {
        problem.validate()?;
        let mut cells = Vec::with_capacity(problem.n_records());
        for known in problem.known_values {
            let key: Vec<i64> = known.iter().map(|&v| v as i64).collect();
            let cond = condition(problem.cond_prior, &key)?;
            cells.push(marginalize_conditional(
                cond,
                problem.unknown_attrs,
                problem.workload.domain_sizes(),
            )?);
        }
        Ok(Self { cells })
    }

    /// Relaxed marginal vector in the same entry order as the mechanism's
    /// release. A relaxed entry is the mean over records of the product of
    /// per-attribute cell probabilities (known cells contribute an
    /// indicator).
    pub fn marginals(&self, problem: &MaiProblem) -> Vec<f64> {
        let workload = problem.workload;
        let offsets = workload.offsets();
        let mut out = vec![0.0; workload.total_len()];
        let inv_n = 1.0 / problem.n_records() as f64;
        for (vi, vset) in workload.vsets().iter().enumerate() {
            let roles = vset_roles(problem, vset);
            for (r, known) in problem.known_values.iter().enumerate() {
                accumulate_record(
                    &mut out,
                    offsets[vi],
                    workload,
                    vi,
                    &roles,
                    known,
                    &self.cells[r],
                    inv_n,
                );
            }
        }
        out
    }

    /// Squared L2 distance between relaxed marginals and the target vector.
    pub fn objective(&self, problem: &MaiProblem, target: &[f64]) -> f64 {
        self.marginals(problem)
            .iter()
            .zip(target)
            .map(|(q, y)| (q - y) * (q - y))
            .sum()
    }

    /// Gradient of the objective with respect to every unknown cell.
    pub fn gradient(&self, problem: &MaiProblem, target: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let workload = problem.workload;
        let offsets = workload.offsets();
        let q = self.marginals(problem);
        let residual: Vec<f64> = q.iter().zip(target).map(|(a, b)| a - b).collect();
        let inv_n = 1.0 / problem.n_records() as f64;
        let mut grad: Vec<Vec<Vec<f64>>> = self
            .cells
            .iter()
            .map(|row| row.iter().map(|c| vec![0.0; c.len()]).collect())
            .collect();
        for (vi, vset) in workload.vsets().iter().enumerate() {
            let roles = vset_roles(problem, vset);
            let unknown_slots: Vec<(usize, usize)> = roles
                .iter()
                .enumerate()
                .filter_map(|(slot, role)| match role {
                    Role::Unknown(ui) => Some((slot, *ui)),
                    Role::Known(_) => None,
                })
                .collect();
            if unknown_slots.is_empty() {
                continue;
            }
            let dims: Vec<usize> = unknown_slots
                .iter()
                .map(|&(_, ui)| workload.domain_sizes()[problem.unknown_attrs[ui]])
                .collect();
            for (r, known) in problem.known_values.iter().enumerate() {
                let mut assign = vec![0usize; unknown_slots.len()];
                loop {
                    let mut values = vec![0usize; roles.len()];
                    for (slot, role) in roles.iter().enumerate() {
                        if let Role::Known(ki) = role {
                            values[slot] = known[*ki];
                        }
                    }
                    for (ai, &(slot, _)) in unknown_slots.iter().enumerate() {
                        values[slot] = assign[ai];
                    }
                    let entry = offsets[vi] + workload.tuple_index(vi, &values);
                    let rho = residual[entry];
                    if rho != 0.0 {
                        for (ai, &(_, ui)) in unknown_slots.iter().enumerate() {
                            let mut others = 1.0;
                            for (aj, &(_, uj)) in unknown_slots.iter().enumerate() {
                                if aj != ai {
                                    others *= self.cells[r][uj][assign[aj]];
                                }
                            }
                            grad[r][ui][assign[ai]] += 2.0 * inv_n * rho * others;
                        }
                    }
                    if !advance(&mut assign, &dims) {
                        break;
                    }
                }
            }
        }
        grad
    }

    /// Round each unknown cell to its argmax, ties to the lowest index.
    pub fn round(&self) -> Vec<Vec<usize>> {
        self.cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|cell| {
                        let mut best = 0;
                        for i in 1..cell.len() {
                            if cell[i] > cell[best] {
                                best = i;
                            }
                        }
                        best
                    })
                    .collect()
            })
            .collect()
    }
}

enum Role {
    Known(usize),
    Unknown(usize),
}

fn vset_roles(problem: &MaiProblem, vset: &[usize]) -> Vec<Role> {
    vset.iter()
        .map(|&a| {
            if let Some(ki) = problem.known_attrs.iter().position(|&x| x == a) {
                Role::Known(ki)
            } else {
                let ui = problem.unknown_attrs.iter().position(|&x| x == a).unwrap();
                Role::Unknown(ui)
            }
        })
        .collect()
}

fn advance(assign: &mut [usize], dims: &[usize]) -> bool {
    for i in (0..assign.len()).rev() {
        assign[i] += 1;
        if assign[i] < dims[i] {
            return true;
        }
        assign[i] = 0;
    }
    false
}

#[allow(clippy::too_many_arguments)]
fn accumulate_record(
    out: &mut [f64],
    offset: usize,
    workload: &MarginalWorkload,
    vi: usize,
    roles: &[Role],
    known: &[usize],
    cells: &[Vec<f64>],
    inv_n: f64,
) {
    let unknown_slots: Vec<(usize, usize)> = roles
        .iter()
        .enumerate()
        .filter_map(|(slot, role)| match role {
            Role::Unknown(ui) => Some((slot, *ui)),
            Role::Known(_) => None,
        })
        .collect();
    let mut values = vec![0usize; roles.len()];
    for (slot, role) in roles.iter().enumerate() {
        if let Role::Known(ki) = role {
            values[slot] = known[*ki];
        }
    }
    if unknown_slots.is_empty() {
        out[offset + workload.tuple_index(vi, &values)] += inv_n;
        return;
    }
    let dims: Vec<usize> = unknown_slots
        .iter()
        .map(|&(_, ui)| cells[ui].len())
        .collect();
    let mut assign = vec![0usize; unknown_slots.len()];
    loop {
        let mut prod = inv_n;
        for (ai, &(slot, ui)) in unknown_slots.iter().enumerate() {
            values[slot] = assign[ai];
            prod *= cells[ui][assign[ai]];
        }
        if prod != 0.0 {
            out[offset + workload.tuple_index(vi, &values)] += prod;
        }
        if !advance(&mut assign, &dims) {
            break;
        }
    }
}

/// Gradient-based multi-attribute inference: projected gradient descent on
/// the squared distance between the released noisy marginal vector and the
/// relaxed marginals, with known cells frozen, followed by per-cell argmax
/// rounding. Guesses stay aligned to record rows by position.
pub fn mai_gradient_attack(
    noisy: &[f64],
    problem: &MaiProblem,
    cfg: &MaiConfig,
) -> Result<Vec<Vec<usize>>> {
    cfg.validate()?;
    if noisy.len() != problem.workload.total_len() {
        return Err(Error::invalid(format!(
            "released vector has {} entries, workload declares {}",
            noisy.len(),
            problem.workload.total_len()
        )));
    }
    let mut state = RelaxedDataset::init_from_prior(problem)?;
    for iter in 0..cfg.iters {
        let grad = state.gradient(problem, noisy);
        for (r, row) in state.cells.iter_mut().enumerate() {
            for (u, cell) in row.iter_mut().enumerate() {
                for (val, g) in cell.iter_mut().zip(&grad[r][u]) {
                    if !g.is_finite() {
                        return Err(Error::Numeric {
                            iteration: iter,
                            message: format!("non-finite gradient at record {r}"),
                        });
                    }
                    *val -= cfg.step * g;
                }
                project_simplex(cell);
            }
        }
    }
    let obj = state.objective(problem, noisy);
    if !obj.is_finite() {
        return Err(Error::Numeric {
            iteration: cfg.iters,
            message: "non-finite objective after final iteration".into(),
        });
    }
    Ok(state.round())
}
