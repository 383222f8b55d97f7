//! The active-learning loop for one round and the multi-round experiment.
//!
//! A round generates its pools, fits the initial model on the labeled seed
//! pool and then, for each query, scores the unlabeled pool, selects a batch
//! with the configured strategy, reveals the batch's labels, moves it into
//! the labeled pool and refits. Metrics are recorded after every refit.
//!
//! Rounds are independent: each owns its random streams, pools and model, so
//! the experiment runs them in parallel and aggregates by seed order.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{generate_dataset, split_pools, DataPool, DatasetConfig, Instance, InstanceId, Label, Pools};
use crate::error::{Error, Result};
use crate::glm::{self, GlmHyperparams, GlmModel};
use crate::metrics::{
    auc, compute_phi, cost_efficiency, f1, mean_ci, positive_ratio, CiSummary, CostModel, MetricSample,
    PerformanceMeasure, DEFAULT_CONFIDENCE,
};
use crate::strategies::{self, QueryStrategy, ScoredCandidate};

/// Suggested half-width of the uncertainty band for the φ diagnostic.
pub const DEFAULT_PHI_DELTA: f64 = 0.05;

/// Stream used for query-time randomness; stream 0 of the same seed
/// generates the data, so strategies sharing a seed see identical pools.
const QUERY_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub dataset: DatasetConfig,
    pub strategy: QueryStrategy,
    pub n_queries: usize,
    pub batch_size: usize,
    pub cost: CostModel,
    pub glm: GlmHyperparams,
    pub rounds: usize,
    pub base_seed: u64,
    /// Generate the dataset once from `base_seed` and reuse it in every
    /// round instead of regenerating it from each round seed.
    pub shared_dataset: bool,
    /// Band half-width for the φ diagnostic; `None` disables it.
    pub phi_delta: Option<f64>,
    pub performance: PerformanceMeasure,
    pub confidence: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            strategy: QueryStrategy::shifted_normal(),
            n_queries: 20,
            batch_size: 2,
            cost: CostModel::default(),
            glm: GlmHyperparams::default(),
            rounds: 30,
            base_seed: 0,
            shared_dataset: false,
            phi_delta: None,
            performance: PerformanceMeasure::Auc,
            confidence: DEFAULT_CONFIDENCE,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.strategy.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.glm.validate()?;
        CostModel::new(self.cost.c)?;
        if self.n_queries == 0 {
            return Err(Error::Config("number of queries must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        let budget = self.n_queries.checked_mul(self.batch_size);
        if budget.is_none_or(|b| b > self.dataset.unlabeled_size) {
            return Err(Error::Config(format!(
                "query budget {} x {} exceeds the unlabeled pool of {} instances",
                self.n_queries, self.batch_size, self.dataset.unlabeled_size
            )));
        }
        if self.rounds < 2 {
            return Err(Error::Config(format!(
                "at least 2 rounds are needed for a confidence interval, got {}",
                self.rounds
            )));
        }
        if let Some(delta) = self.phi_delta {
            if !(delta > 0.0 && delta < 0.5) {
                return Err(Error::Config(format!("phi delta must lie in (0, 0.5), got {delta}")));
            }
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Config(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        Ok(())
    }

    /// Seed of round `index`.
    pub fn round_seed(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }

    pub fn round_seeds(&self) -> Vec<u64> {
        (0..self.rounds).map(|i| self.round_seed(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySnapshot {
    pub q: usize,
    pub selected_ids: Vec<InstanceId>,
    pub metrics: MetricSample,
    pub labeled_size: usize,
}

/// Interim probabilities seen by the selector at one query, and the φ
/// values derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiQuery {
    pub q: usize,
    pub interim_probs: BTreeMap<InstanceId, f64>,
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiTrace {
    pub delta: f64,
    /// Final-model probabilities for every instance of the initial
    /// unlabeled pool.
    pub final_probs: BTreeMap<InstanceId, f64>,
    pub queries: Vec<PhiQuery>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    pub seed: u64,
    /// Metrics of the model fitted on the seed pool alone (q = 0).
    pub initial: MetricSample,
    pub snapshots: Vec<QuerySnapshot>,
    pub phi_trace: Option<PhiTrace>,
}

fn labels_of(instances: &[Instance]) -> Vec<Label> {
    instances.iter().map(|i| i.label).collect()
}

fn evaluate(model: &GlmModel, labeled: &DataPool, tests: &[DataPool], config: &SimulationConfig) -> Result<MetricSample> {
    let mut auc_per_test = Vec::with_capacity(tests.len());
    let mut f1_per_test = Vec::with_capacity(tests.len());
    for test in tests {
        let probs = model.predict_many(test.instances())?;
        let truth = labels_of(test.instances());
        auc_per_test.push(auc(&probs, &truth)?);
        f1_per_test.push(f1(&probs, &truth, 0.5)?);
    }
    let mean_auc = auc_per_test.iter().sum::<f64>() / auc_per_test.len() as f64;
    let mean_f1 = f1_per_test.iter().sum::<f64>() / f1_per_test.len() as f64;
    let lambda = config.performance.combine(mean_auc, mean_f1);
    let zeta = positive_ratio(labeled)?;
    let eta = match cost_efficiency(lambda, zeta, &config.cost) {
        Ok(eta) => Some(eta),
        Err(Error::UndefinedEfficiency) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricSample {
        lambda,
        zeta,
        eta,
        auc_per_test,
        f1_per_test,
    })
}

/// Scores the unlabeled pool. Only ids and probabilities leave this function.
fn score(model: &GlmModel, unlabeled: &DataPool) -> Result<Vec<ScoredCandidate>> {
    unlabeled
        .instances()
        .iter()
        .map(|inst| ScoredCandidate::new(inst.id, model.predict_proba(&inst.features)?))
        .collect()
}

/// Oracle step: the only place true labels of unlabeled instances are read.
fn reveal(unlabeled: &mut DataPool, ids: &[InstanceId]) -> Result<Vec<Instance>> {
    unlabeled
        .take(ids)
        .ok_or_else(|| Error::Selection(format!("selected ids {ids:?} are not all in the unlabeled pool")))
}

fn build_pools(config: &SimulationConfig, round_seed: u64) -> Result<Pools> {
    let data_seed = if config.shared_dataset {
        config.base_seed
    } else {
        round_seed
    };
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let dataset = generate_dataset(&config.dataset, &mut rng)?;
    split_pools(dataset, &config.dataset, &mut rng)
}

fn query_rng(round_seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(round_seed);
    rng.set_stream(QUERY_STREAM);
    rng
}

/// Runs one round of the active-learning loop.
pub fn run_round(config: &SimulationConfig, round_seed: u64) -> Result<RoundResult> {
    run_round_inner(config, round_seed).map_err(|e| e.in_round(round_seed))
}

fn run_round_inner(config: &SimulationConfig, round_seed: u64) -> Result<RoundResult> {
    config.validate()?;
    let Pools {
        mut labeled,
        mut unlabeled,
        tests,
    } = build_pools(config, round_seed)?;
    let mut rng = query_rng(round_seed);

    let initial_unlabeled = config.phi_delta.map(|_| unlabeled.instances().to_vec());
    let mut interim_trace: Vec<(usize, BTreeMap<InstanceId, f64>)> = Vec::new();

    let conserved = labeled.len() + unlabeled.len();
    let mut model = glm::fit(&labeled, &config.glm)?;
    let initial = evaluate(&model, &labeled, &tests, config)?;
    let mut snapshots = Vec::with_capacity(config.n_queries);

    for q in 1..=config.n_queries {
        let candidates = score(&model, &unlabeled)?;
        if config.phi_delta.is_some() {
            interim_trace.push((q, candidates.iter().map(|c| (c.instance_id, c.prob)).collect()));
        }
        let selected = strategies::select(&config.strategy, &candidates, config.batch_size, &mut rng)?;
        let revealed = reveal(&mut unlabeled, &selected)?;
        labeled.extend(revealed);
        debug_assert_eq!(labeled.len() + unlabeled.len(), conserved);

        model = glm::fit(&labeled, &config.glm)?;
        let metrics = evaluate(&model, &labeled, &tests, config)?;
        snapshots.push(QuerySnapshot {
            q,
            selected_ids: selected,
            metrics,
            labeled_size: labeled.len(),
        });
    }

    let phi_trace = match (config.phi_delta, initial_unlabeled) {
        (Some(delta), Some(pool)) => Some(phi_trace(&model, &pool, interim_trace, delta)?),
        _ => None,
    };

    Ok(RoundResult {
        seed: round_seed,
        initial,
        snapshots,
        phi_trace,
    })
}

fn phi_trace(
    final_model: &GlmModel,
    initial_unlabeled: &[Instance],
    interim: Vec<(usize, BTreeMap<InstanceId, f64>)>,
    delta: f64,
) -> Result<PhiTrace> {
    let final_probs: BTreeMap<InstanceId, f64> = initial_unlabeled
        .iter()
        .map(|inst| Ok((inst.id, final_model.predict_proba(&inst.features)?)))
        .collect::<Result<_>>()?;
    let queries = interim
        .into_iter()
        .map(|(q, interim_probs)| {
            let finals: BTreeMap<InstanceId, f64> = interim_probs.keys().map(|id| (*id, final_probs[id])).collect();
            let phi = compute_phi(&finals, &interim_probs, delta)?;
            Ok(PhiQuery { q, interim_probs, phi })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhiTrace {
        delta,
        final_probs,
        queries,
    })
}

/// Cross-round summary of one query index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryAggregate {
    pub q: usize,
    pub labeled_size: usize,
    pub lambda: CiSummary,
    pub zeta: CiSummary,
    /// `None` when fewer than two rounds had a defined efficiency.
    pub eta: Option<CiSummary>,
    pub auc: CiSummary,
    pub f1: CiSummary,
    pub n_missing_eta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub strategy: String,
    pub config: SimulationConfig,
    pub round_seeds: Vec<u64>,
    pub initial: QueryAggregate,
    pub per_query: Vec<QueryAggregate>,
}

impl ExperimentSummary {
    pub fn final_query(&self) -> &QueryAggregate {
        self.per_query.last().expect("at least one query")
    }
}

fn aggregate_samples(q: usize, labeled_size: usize, samples: &[&MetricSample], confidence: f64) -> Result<QueryAggregate> {
    let column = |f: &dyn Fn(&MetricSample) -> f64| samples.iter().map(|s| f(s)).collect::<Vec<f64>>();
    let etas: Vec<f64> = samples.iter().filter_map(|s| s.eta).collect();
    let n_missing_eta = samples.len() - etas.len();
    Ok(QueryAggregate {
        q,
        labeled_size,
        lambda: mean_ci(&column(&|s| s.lambda), confidence)?,
        zeta: mean_ci(&column(&|s| s.zeta), confidence)?,
        eta: if etas.len() >= 2 {
            Some(mean_ci(&etas, confidence)?)
        } else {
            None
        },
        auc: mean_ci(&column(&MetricSample::mean_auc), confidence)?,
        f1: mean_ci(&column(&MetricSample::mean_f1), confidence)?,
        n_missing_eta,
    })
}

/// Aggregates completed rounds per query index. The result does not depend
/// on the order of `rounds`.
pub fn aggregate(config: &SimulationConfig, rounds: &[RoundResult]) -> Result<ExperimentSummary> {
    if rounds.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "aggregation needs at least 2 rounds, got {}",
            rounds.len()
        )));
    }
    let mut ordered: Vec<&RoundResult> = rounds.iter().collect();
    ordered.sort_by_key(|r| r.seed);
    if let Some(bad) = ordered.iter().find(|r| r.snapshots.len() != config.n_queries) {
        return Err(Error::InsufficientData(format!(
            "round {} has {} snapshots, expected {}",
            bad.seed,
            bad.snapshots.len(),
            config.n_queries
        )));
    }

    let initial_samples: Vec<&MetricSample> = ordered.iter().map(|r| &r.initial).collect();
    let initial = aggregate_samples(0, config.dataset.labeled_size, &initial_samples, config.confidence)?;

    let per_query = (0..config.n_queries)
        .map(|i| {
            let samples: Vec<&MetricSample> = ordered.iter().map(|r| &r.snapshots[i].metrics).collect();
            let snap = &ordered[0].snapshots[i];
            aggregate_samples(snap.q, snap.labeled_size, &samples, config.confidence)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ExperimentSummary {
        strategy: config.strategy.name().to_string(),
        config: config.clone(),
        round_seeds: ordered.iter().map(|r| r.seed).collect(),
        initial,
        per_query,
    })
}

/// Runs every round of the experiment in parallel on the current rayon pool.
pub fn run_rounds(config: &SimulationConfig) -> Result<Vec<RoundResult>> {
    config.validate()?;
    config
        .round_seeds()
        .into_par_iter()
        .map(|seed| run_round(config, seed))
        .collect()
}

/// Runs all rounds and aggregates them.
pub fn run_experiment(config: &SimulationConfig) -> Result<ExperimentSummary> {
    let rounds = run_rounds(config)?;
    aggregate(config, &rounds)
}

/// Runs `base` once per strategy. Data generation depends only on the round
/// seed, so every strategy sees the same pools in a given round.
pub fn compare_strategies(base: &SimulationConfig, strategies: &[QueryStrategy]) -> Result<Vec<ExperimentSummary>> {
    strategies
        .iter()
        .map(|s| {
            let config = SimulationConfig {
                strategy: *s,
                ..base.clone()
            };
            run_experiment(&config)
        })
        .collect()
}
