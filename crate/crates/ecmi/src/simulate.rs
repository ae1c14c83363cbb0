//! Experiment generator for the supersample setting: finite data
//! distributions and toy learners whose population losses are exact sums,
//! not Monte Carlo estimates.
//!
//! Data model: features are uniform on a finite domain of size K; labels come
//! from a ground-truth labeling, flipped to a uniformly chosen *other* label
//! with probability `noise_rate`, then replaced by a uniform label (over all
//! N) with probability `corruption_rate`. Because the domain is finite, the
//! population loss of any hypothesis is a K-term sum.
//!
//! Learners are pure functions of the training vector and an integer
//! randomness seed, which keeps batch generation embarrassingly parallel
//! under the indexed stream contract and makes exact enumeration of the
//! loss-table law possible for the high-probability checks.

use crate::core::{
    rng_stream, CoreError, LossGranularity, LossTable, MembershipVector, TrialBatch, TrialDraw,
};
use crate::estimators::{EstimatorError, TableKey, TableLaw};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Default supersample draw count (k1) at toy scale.
pub const DEFAULT_SUPERSAMPLE_DRAWS: usize = 20;
/// Default (selection, randomness) draw count (k2) per supersample.
pub const DEFAULT_SELECTION_DRAWS: usize = 200;
/// Default Gibbs inverse temperature.
pub const DEFAULT_GIBBS_BETA: f64 = 4.0;

/// Stream index used to derive the Gibbs pick from the randomness seed alone,
/// keeping the learner a pure function of (training vector, r_seed).
const GIBBS_STREAM: u64 = 0x6762_7321;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config field `{field}`: {reason}")]
    BadConfig {
        field: &'static str,
        reason: String,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

fn bad(field: &'static str, reason: impl Into<String>) -> SimError {
    SimError::BadConfig {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    /// Lookup table of seen feature-label pairs, default label 0 elsewhere.
    Memorizer,
    /// Empirical risk minimizer over the finite threshold class, ties broken
    /// by lowest hypothesis index.
    ErmFiniteClass,
    /// Samples a hypothesis with probability proportional to
    /// `exp(-beta n loss)` using the randomness seed.
    Gibbs,
}

fn default_k1() -> usize {
    DEFAULT_SUPERSAMPLE_DRAWS
}
fn default_k2() -> usize {
    DEFAULT_SELECTION_DRAWS
}
fn default_r_count() -> u64 {
    1
}
fn default_beta() -> f64 {
    DEFAULT_GIBBS_BETA
}

/// Full description of one simulated experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    /// Feature domain size K; features are uniform over it.
    pub domain_size: usize,
    /// Label count N (at least 2).
    pub label_count: usize,
    /// Probability of flipping a clean label to a uniformly chosen other one.
    #[serde(default)]
    pub noise_rate: f64,
    /// Probability of replacing the (possibly flipped) label with a uniform
    /// label over all N, independent of the feature.
    #[serde(default)]
    pub corruption_rate: f64,
    pub learner: LearnerKind,
    /// Supersample rows n.
    pub rows: usize,
    /// Supersample draw count k1.
    #[serde(default = "default_k1", alias = "k1")]
    pub supersample_draws: usize,
    /// (Selection, randomness) draw count k2 per supersample.
    #[serde(default = "default_k2", alias = "k2")]
    pub selection_draws: usize,
    /// Histogram bins for continuous losses; binary losses default to 2.
    #[serde(default)]
    pub bins: Option<usize>,
    pub master_seed: u64,
    /// Number of distinct algorithm-randomness seeds cycled through the k2
    /// draws; 1 for deterministic learners.
    #[serde(default = "default_r_count")]
    pub r_count: u64,
    #[serde(default = "default_beta")]
    pub gibbs_beta: f64,
    /// Breakpoint budget of the threshold class; defaults to N - 1 so the
    /// ground-truth labeling lies in the class.
    #[serde(default)]
    pub breakpoints: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.domain_size == 0 {
            return Err(bad("domain_size", "must be at least 1"));
        }
        if self.label_count < 2 {
            return Err(bad("label_count", "must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return Err(bad("noise_rate", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.corruption_rate) {
            return Err(bad("corruption_rate", "must lie in [0, 1]"));
        }
        if self.rows == 0 {
            return Err(bad("rows", "must be at least 1"));
        }
        if self.supersample_draws == 0 {
            return Err(bad("supersample_draws", "must be at least 1"));
        }
        if self.selection_draws < 2 {
            return Err(bad(
                "selection_draws",
                "must be at least 2: the samplewise information estimators \
                 need two or more selection draws per supersample",
            ));
        }
        if self.r_count == 0 {
            return Err(bad("r_count", "must be at least 1"));
        }
        if let Some(bins) = self.bins {
            if bins < 2 {
                return Err(bad("bins", "must be at least 2"));
            }
        }
        if !(self.gibbs_beta >= 0.0) {
            return Err(bad("gibbs_beta", "must be nonnegative"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let config: SimConfig = serde_json::from_str(text)
            .map_err(|e| bad("<json>", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Histogram bin count used downstream: 2 for binary losses unless
    /// overridden.
    pub fn effective_bins(&self) -> usize {
        self.bins.unwrap_or(2)
    }

    pub fn breakpoint_budget(&self) -> usize {
        self.breakpoints.unwrap_or(self.label_count - 1)
    }

    /// Ground-truth labeling: the domain split into N near-equal contiguous
    /// segments labeled 0..N-1. Piecewise constant with N - 1 breakpoints, so
    /// it belongs to the default threshold class.
    pub fn true_labeling(&self) -> Vec<u16> {
        (0..self.domain_size)
            .map(|x| ((x * self.label_count) / self.domain_size).min(self.label_count - 1) as u16)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Example {
    pub feature: usize,
    pub label: u16,
}

/// An n x 2 matrix of examples drawn i.i.d. from the data distribution.
#[derive(Debug, Clone)]
pub struct Supersample {
    rows: Vec<[Example; 2]>,
}

impl Supersample {
    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn entry(&self, i: usize, column: usize) -> Example {
        self.rows[i][column]
    }

    /// Training vector selected by the membership bits.
    pub fn train_vector(&self, s: &MembershipVector) -> Vec<Example> {
        (0..self.rows())
            .map(|i| self.rows[i][s.bit(i) as usize])
            .collect()
    }
}

/// Enumerated class of piecewise-constant labelings of the ordered domain
/// with a bounded number of breakpoints.
///
/// With budget B the class Natarajan-shatters exactly B + 1 points: any
/// pattern on B + 1 points needs at most B label changes, while some pattern
/// on B + 2 points forces B + 1. The dimension is therefore known by
/// construction.
#[derive(Debug, Clone)]
pub struct FiniteClass {
    hypotheses: Vec<Vec<u16>>,
    natarajan_dim: usize,
}

impl FiniteClass {
    pub fn thresholds(domain_size: usize, label_count: usize, max_breakpoints: usize) -> Self {
        let mut hypotheses = Vec::new();
        let gaps: Vec<usize> = (1..domain_size).collect();
        for breaks in 0..=max_breakpoints.min(domain_size - 1) {
            let mut positions = Vec::new();
            enumerate_breakpoint_sets(&gaps, breaks, 0, &mut positions, &mut |cuts| {
                let mut labels = vec![0u16; breaks + 1];
                enumerate_segment_labels(label_count, cuts, &mut labels, 0, &mut |labels| {
                    hypotheses.push(expand_labeling(domain_size, cuts, labels));
                });
            });
        }
        FiniteClass {
            hypotheses,
            natarajan_dim: max_breakpoints.min(domain_size - 1) + 1,
        }
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn hypothesis(&self, index: usize) -> &[u16] {
        &self.hypotheses[index]
    }

    pub fn natarajan_dim(&self) -> usize {
        self.natarajan_dim
    }
}

fn enumerate_breakpoint_sets(
    gaps: &[usize],
    remaining: usize,
    start: usize,
    current: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if remaining == 0 {
        visit(current);
        return;
    }
    for idx in start..gaps.len() {
        current.push(gaps[idx]);
        enumerate_breakpoint_sets(gaps, remaining - 1, idx + 1, current, visit);
        current.pop();
    }
}

fn enumerate_segment_labels(
    label_count: usize,
    cuts: &[usize],
    labels: &mut Vec<u16>,
    segment: usize,
    visit: &mut impl FnMut(&[u16]),
) {
    if segment == cuts.len() + 1 {
        visit(labels);
        return;
    }
    for label in 0..label_count as u16 {
        // Adjacent segments must differ, otherwise the breakpoint is not real
        // and the hypothesis was already enumerated with fewer cuts.
        if segment > 0 && labels[segment - 1] == label {
            continue;
        }
        labels[segment] = label;
        enumerate_segment_labels(label_count, cuts, labels, segment + 1, visit);
    }
}

fn expand_labeling(domain_size: usize, cuts: &[usize], labels: &[u16]) -> Vec<u16> {
    let mut out = Vec::with_capacity(domain_size);
    let mut segment = 0;
    for x in 0..domain_size {
        while segment < cuts.len() && x >= cuts[segment] {
            segment += 1;
        }
        out.push(labels[segment]);
    }
    out
}

/// Probability that the observed label equals `label` given the clean label,
/// under flip-then-corrupt noise.
fn label_probability(config: &SimConfig, clean: u16, label: u16) -> f64 {
    let n = config.label_count as f64;
    let eta = config.noise_rate;
    let a = config.corruption_rate;
    let after_flip = if label == clean {
        1.0 - eta
    } else {
        eta / (n - 1.0)
    };
    (1.0 - a) * after_flip + a / n
}

fn draw_label(config: &SimConfig, clean: u16, rng: &mut impl Rng) -> u16 {
    let mut label = clean;
    if config.noise_rate > 0.0 && rng.gen::<f64>() < config.noise_rate {
        // Uniform over the other labels.
        let shift = rng.gen_range(1..config.label_count) as u16;
        label = (label + shift) % config.label_count as u16;
    }
    if config.corruption_rate > 0.0 && rng.gen::<f64>() < config.corruption_rate {
        label = rng.gen_range(0..config.label_count) as u16;
    }
    label
}

/// Draws an n x 2 supersample of i.i.d. examples.
pub fn draw_supersample(config: &SimConfig, rng: &mut impl Rng) -> Supersample {
    let truth = config.true_labeling();
    let mut rows = Vec::with_capacity(config.rows);
    for _ in 0..config.rows {
        let mut row = [Example { feature: 0, label: 0 }; 2];
        for entry in &mut row {
            let feature = rng.gen_range(0..config.domain_size);
            let label = draw_label(config, truth[feature], rng);
            *entry = Example { feature, label };
        }
        rows.push(row);
    }
    Supersample { rows }
}

/// A fitted model: a complete labeling of the domain, plus the class index
/// when the learner picked a member of the finite class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fitted {
    pub labeling: Vec<u16>,
    pub class_index: Option<usize>,
}

fn empirical_loss(labeling: &[u16], examples: &[Example]) -> f64 {
    let errors = examples
        .iter()
        .filter(|ex| labeling[ex.feature] != ex.label)
        .count();
    errors as f64 / examples.len() as f64
}

/// Gibbs weights over the class for one training vector, normalized.
fn gibbs_distribution(
    class: &FiniteClass,
    train: &[Example],
    beta: f64,
) -> Vec<f64> {
    let n = train.len() as f64;
    let losses: Vec<f64> = (0..class.len())
        .map(|h| empirical_loss(class.hypothesis(h), train))
        .collect();
    let min_loss = losses.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = losses
        .iter()
        .map(|&l| (-beta * n * (l - min_loss)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Runs the configured learner on one training vector.
///
/// Every learner is a pure function of (training vector, r_seed): the Gibbs
/// pick uses a single uniform derived from the seed through inverse-CDF
/// sampling over the class, so identical seeds reproduce identical picks.
pub fn run_learner(
    config: &SimConfig,
    class: &FiniteClass,
    train: &[Example],
    r_seed: u64,
) -> Fitted {
    match config.learner {
        LearnerKind::Memorizer => {
            // Later duplicates overwrite earlier ones; unseen features keep
            // the default label 0.
            let mut labeling = vec![0u16; config.domain_size];
            for ex in train {
                labeling[ex.feature] = ex.label;
            }
            Fitted {
                labeling,
                class_index: None,
            }
        }
        LearnerKind::ErmFiniteClass => {
            let mut best = 0usize;
            let mut best_loss = f64::INFINITY;
            for h in 0..class.len() {
                let loss = empirical_loss(class.hypothesis(h), train);
                if loss < best_loss {
                    best_loss = loss;
                    best = h;
                }
            }
            Fitted {
                labeling: class.hypothesis(best).to_vec(),
                class_index: Some(best),
            }
        }
        LearnerKind::Gibbs => {
            let distribution = gibbs_distribution(class, train, config.gibbs_beta);
            let u: f64 = rng_stream(r_seed, GIBBS_STREAM).gen();
            let mut cumulative = 0.0;
            let mut pick = class.len() - 1;
            for (h, &w) in distribution.iter().enumerate() {
                cumulative += w;
                if u < cumulative {
                    pick = h;
                    break;
                }
            }
            Fitted {
                labeling: class.hypothesis(pick).to_vec(),
                class_index: Some(pick),
            }
        }
    }
}

/// Exact population 0/1 loss of a labeling: a K-term sum over the feature
/// domain with the noise- and corruption-aware label law. No sampling.
pub fn population_loss(labeling: &[u16], config: &SimConfig) -> f64 {
    let truth = config.true_labeling();
    let k = config.domain_size as f64;
    (0..config.domain_size)
        .map(|x| 1.0 - label_probability(config, truth[x], labeling[x]))
        .sum::<f64>()
        / k
}

/// Summary of the exactly-known generalization gap over a batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrueGapStats {
    /// Mean over draws of population minus training loss.
    pub mean_gap: f64,
    /// Standard error of the mean gap, clustered by supersample draw since
    /// draws sharing a supersample are correlated. Zero when k1 = 1.
    pub se_gap: f64,
    pub mean_train: f64,
    pub mean_test: f64,
    pub mean_population: f64,
}

/// Everything one experiment produces: the loss-table batch, prediction
/// tables and interned hypothesis ids per draw, and the exact gap summary.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub batch: TrialBatch,
    pub gap: TrueGapStats,
    /// Per draw: n x 2 predicted labels, row-major.
    pub predictions: Vec<Vec<u16>>,
    /// Per draw: dense id of the fitted labeling (interned in draw order).
    pub hypothesis_ids: Vec<usize>,
}

struct RawDraw {
    draw: TrialDraw,
    predictions: Vec<u16>,
    labeling: Vec<u16>,
}

fn run_one_supersample(config: &SimConfig, class: &FiniteClass, t1: usize) -> Vec<RawDraw> {
    let k2 = config.selection_draws;
    let stream_base = t1 as u64 * (k2 as u64 + 1);
    let mut rng = rng_stream(config.master_seed, stream_base);
    let supersample = draw_supersample(config, &mut rng);
    let mut out = Vec::with_capacity(k2);
    for j in 0..k2 {
        let mut draw_rng = rng_stream(config.master_seed, stream_base + 1 + j as u64);
        let bits: Vec<u8> = (0..config.rows).map(|_| draw_rng.gen_range(0..2u8)).collect();
        let membership = MembershipVector::new(bits).expect("bits are 0/1");
        let r_seed = (j as u64) % config.r_count;
        let train = supersample.train_vector(&membership);
        let fitted = run_learner(config, class, &train, r_seed);
        let mut values = Vec::with_capacity(config.rows);
        let mut predictions = Vec::with_capacity(config.rows * 2);
        for i in 0..config.rows {
            let mut row = [0.0f64; 2];
            for column in 0..2 {
                let example = supersample.entry(i, column);
                let predicted = fitted.labeling[example.feature];
                predictions.push(predicted);
                row[column] = if predicted == example.label { 0.0 } else { 1.0 };
            }
            values.push(row);
        }
        let losses = LossTable::new(values).expect("0/1 losses are in range");
        let (train_loss, test_loss) =
            crate::core::split_losses(&losses, &membership).expect("dimensions match");
        out.push(RawDraw {
            draw: TrialDraw {
                k1_idx: t1,
                k2_idx: j,
                losses,
                membership,
                r_seed,
                train_loss,
                test_loss,
                population_loss: Some(population_loss(&fitted.labeling, config)),
            },
            predictions,
            labeling: fitted.labeling,
        });
    }
    out
}

/// Runs the full k1 x k2 sweep. Deterministic given the master seed:
/// supersamples are generated in parallel from indexed streams and gathered
/// in index order.
pub fn run_experiment_extended(config: &SimConfig) -> Result<ExperimentData, SimError> {
    config.validate()?;
    let class = FiniteClass::thresholds(
        config.domain_size,
        config.label_count,
        config.breakpoint_budget(),
    );
    let per_supersample: Vec<Vec<RawDraw>> = (0..config.supersample_draws)
        .into_par_iter()
        .map(|t1| run_one_supersample(config, &class, t1))
        .collect();

    let mut draws = Vec::with_capacity(config.supersample_draws * config.selection_draws);
    let mut predictions = Vec::with_capacity(draws.capacity());
    let mut hypothesis_ids = Vec::with_capacity(draws.capacity());
    let mut interned: HashMap<Vec<u16>, usize> = HashMap::new();
    let mut cluster_gaps: Vec<f64> = Vec::with_capacity(config.supersample_draws);
    let mut mean_train = 0.0;
    let mut mean_test = 0.0;
    let mut mean_population = 0.0;

    for raw_draws in per_supersample {
        let mut cluster_gap = 0.0;
        for raw in raw_draws {
            let gap = raw.draw.population_loss.expect("simulator fills it")
                - raw.draw.train_loss;
            cluster_gap += gap;
            mean_train += raw.draw.train_loss;
            mean_test += raw.draw.test_loss;
            mean_population += raw.draw.population_loss.unwrap();
            let next_id = interned.len();
            let id = *interned.entry(raw.labeling).or_insert(next_id);
            hypothesis_ids.push(id);
            predictions.push(raw.predictions);
            draws.push(raw.draw);
        }
        cluster_gaps.push(cluster_gap / config.selection_draws as f64);
    }

    let total = draws.len() as f64;
    let mean_gap = cluster_gaps.iter().sum::<f64>() / cluster_gaps.len() as f64;
    let se_gap = if cluster_gaps.len() >= 2 {
        let k1 = cluster_gaps.len() as f64;
        let var = cluster_gaps
            .iter()
            .map(|&g| (g - mean_gap) * (g - mean_gap))
            .sum::<f64>()
            / (k1 - 1.0);
        (var / k1).sqrt()
    } else {
        0.0
    };

    let batch = TrialBatch::new(
        config.supersample_draws,
        config.selection_draws,
        LossGranularity::Binary,
        draws,
    )?
    .with_config(serde_json::to_value(config).expect("config serializes"));
    Ok(ExperimentData {
        batch,
        gap: TrueGapStats {
            mean_gap,
            se_gap,
            mean_train: mean_train / total,
            mean_test: mean_test / total,
            mean_population: mean_population / total,
        },
        predictions,
        hypothesis_ids,
    })
}

/// Batch-and-gap view of [`run_experiment_extended`].
pub fn run_experiment(config: &SimConfig) -> Result<(TrialBatch, TrueGapStats), SimError> {
    let data = run_experiment_extended(config)?;
    Ok((data.batch, data.gap))
}

/// Per-(selection, randomness) outcome on a fixed supersample, used by the
/// coverage checks.
pub struct TrialOutcome {
    pub train: f64,
    pub test: f64,
    pub population: f64,
    pub key: TableKey,
}

/// Fits the learner for one (s, r) pair on a fixed supersample and reports
/// losses plus the discretized loss table.
pub fn outcome_for(
    config: &SimConfig,
    class: &FiniteClass,
    supersample: &Supersample,
    s: &MembershipVector,
    r_seed: u64,
) -> TrialOutcome {
    let train_vec = supersample.train_vector(s);
    let fitted = run_learner(config, class, &train_vec, r_seed);
    let mut key = Vec::with_capacity(supersample.rows() * 2);
    let mut train = 0.0;
    let mut test = 0.0;
    for i in 0..supersample.rows() {
        let mut row = [0u16; 2];
        for column in 0..2 {
            let example = supersample.entry(i, column);
            row[column] = if fitted.labeling[example.feature] == example.label {
                0
            } else {
                1
            };
            key.push(row[column]);
        }
        let si = s.bit(i) as usize;
        train += row[si] as f64;
        test += row[1 - si] as f64;
    }
    let n = supersample.rows() as f64;
    TrialOutcome {
        train: train / n,
        test: test / n,
        population: population_loss(&fitted.labeling, config),
        key,
    }
}

/// Exact law of the discretized loss table on a fixed supersample: all 2^n
/// membership vectors crossed with the uniform randomness seeds.
pub fn table_law_for(
    config: &SimConfig,
    class: &FiniteClass,
    supersample: &Supersample,
) -> Result<TableLaw, SimError> {
    let weight = 1.0 / config.r_count as f64;
    let law = TableLaw::enumerate(supersample.rows(), |s| {
        (0..config.r_count)
            .map(|r| (outcome_for(config, class, supersample, s, r).key, weight))
            .collect()
    })?;
    Ok(law)
}

/// The finite class induced by a config.
pub fn class_for(config: &SimConfig) -> FiniteClass {
    FiniteClass::thresholds(
        config.domain_size,
        config.label_count,
        config.breakpoint_budget(),
    )
}
