//! Plug-in estimators for the information quantities appearing in the bounds.
//!
//! The samplewise evaluated-CMI estimator builds, for one supersample draw
//! and one row index, the joint histogram of the (binned) loss pair against
//! the selection bit over all selection draws, then applies the maximum
//! likelihood mutual-information formula. No bias correction is applied by
//! default, matching the plug-in convention; an optional Miller-Madow
//! correction is available as a flag.
//!
//! Full-table quantities (conditional KL and pointwise information density)
//! come in an exact mode, which enumerates all 2^n membership vectors for a
//! learner exposed as a table oracle, and a sampled mode over the draws in a
//! batch, which is flagged as biased.

use crate::core::{LossTable, MembershipVector, TrialBatch};
use rayon::prelude::*;
use std::collections::HashMap;
use thiserror::Error;

/// Largest `n` for which exact 2^n enumeration is attempted.
pub const EXACT_ENUMERATION_MAX_ROWS: usize = 14;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("histogram has no observations")]
    EmptyHistogram,
    #[error("need at least {needed} draws, got {got}")]
    TooFewDraws { needed: usize, got: usize },
    #[error("loss value {value} lies outside [0, 1]")]
    LossOutOfRange { value: f64 },
    #[error("need at least 2 bins, got {bins}")]
    BinsTooSmall { bins: usize },
    #[error("row index {i} out of range for n={n}")]
    RowOutOfRange { i: usize, n: usize },
    #[error("supersample index {idx} out of range for k1={k1}")]
    SupersampleOutOfRange { idx: usize, k1: usize },
    #[error("exact mode supports n <= {max}, got n={n}")]
    TooManyRowsForExact { n: usize, max: usize },
    #[error("membership vector length {got} does not match law rows {expected}")]
    LawDimensionMismatch { got: usize, expected: usize },
    #[error("conditional law for a membership vector has zero total mass")]
    EmptyConditionalLaw,
    #[error(
        "realized table has zero modeled probability; the absolute-continuity \
         assumption behind the single-draw bound fails here"
    )]
    AbsoluteContinuity,
    #[error("fewer than 2 selection draws share r_seed {r_seed}")]
    RGroupTooSmall { r_seed: u64 },
}

/// Joint counts of two finite-support variables.
#[derive(Debug, Clone)]
pub struct DiscreteJointHistogram {
    counts: Vec<u64>,
    x_support: usize,
    y_support: usize,
    total: u64,
}

impl DiscreteJointHistogram {
    pub fn new(x_support: usize, y_support: usize) -> Self {
        Self {
            counts: vec![0; x_support * y_support],
            x_support,
            y_support,
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        let x_support = counts.len();
        let y_support = counts.first().map(|r| r.len()).unwrap_or(0);
        let mut hist = Self::new(x_support, y_support);
        for (x, row) in counts.iter().enumerate() {
            for (y, &c) in row.iter().enumerate() {
                hist.counts[x * y_support + y] = c;
                hist.total += c;
            }
        }
        hist
    }

    pub fn record(&mut self, x: usize, y: usize) {
        self.counts[x * self.y_support + y] += 1;
        self.total += 1;
    }

    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.counts[x * self.y_support + y]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn supports(&self) -> (usize, usize) {
        (self.x_support, self.y_support)
    }

    /// Number of cells with positive count.
    pub fn occupied_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Maximum-likelihood mutual information of the empirical joint, in nats.
///
/// Zero-count cells contribute nothing; the result is clamped at zero to
/// absorb rounding.
pub fn plugin_mi(hist: &DiscreteJointHistogram) -> Result<f64, EstimatorError> {
    if hist.total == 0 {
        return Err(EstimatorError::EmptyHistogram);
    }
    let (nx, ny) = hist.supports();
    let mut row_sums = vec![0u64; nx];
    let mut col_sums = vec![0u64; ny];
    for x in 0..nx {
        for y in 0..ny {
            let c = hist.count(x, y);
            row_sums[x] += c;
            col_sums[y] += c;
        }
    }
    let total = hist.total as f64;
    let mut mi = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let c = hist.count(x, y);
            if c > 0 {
                let joint = c as f64 / total;
                let marginal = (row_sums[x] as f64 / total) * (col_sums[y] as f64 / total);
                mi += joint * (joint / marginal).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Miller-Madow corrected variant: plug-in minus `(occupied - 1) / (2 T)` per
/// entropy term, collapsed to the standard MI correction. Off by default.
pub fn plugin_mi_miller_madow(hist: &DiscreteJointHistogram) -> Result<f64, EstimatorError> {
    let raw = plugin_mi(hist)?;
    let (nx, ny) = hist.supports();
    let mut row_occ = vec![false; nx];
    let mut col_occ = vec![false; ny];
    for x in 0..nx {
        for y in 0..ny {
            if hist.count(x, y) > 0 {
                row_occ[x] = true;
                col_occ[y] = true;
            }
        }
    }
    let kx = row_occ.iter().filter(|&&b| b).count() as f64;
    let ky = col_occ.iter().filter(|&&b| b).count() as f64;
    let kxy = hist.occupied_cells() as f64;
    let t = hist.total() as f64;
    // From the per-entropy corrections (K - 1)/(2T):
    // (kx - 1) + (ky - 1) - (kxy - 1) combined over H(X) + H(Y) - H(X,Y).
    let correction = (kx + ky - kxy - 1.0) / (2.0 * t);
    Ok((raw + correction).max(0.0))
}

/// Bin code for a loss value: `min(floor(value * bins), bins - 1)`.
///
/// Loss 1.0 maps to the last bin (right edge is inclusive); 0/1 losses with
/// two bins are preserved exactly.
pub fn discretize_loss(value: f64, bins: usize) -> Result<u16, EstimatorError> {
    if bins < 2 {
        return Err(EstimatorError::BinsTooSmall { bins });
    }
    if !(0.0..=1.0).contains(&value) || !value.is_finite() {
        return Err(EstimatorError::LossOutOfRange { value });
    }
    let code = ((value * bins as f64).floor() as usize).min(bins - 1);
    Ok(code as u16)
}

pub fn discretize_losses(values: &[f64], bins: usize) -> Result<Vec<u16>, EstimatorError> {
    values.iter().map(|&v| discretize_loss(v, bins)).collect()
}

fn check_supersample(batch: &TrialBatch, idx: usize) -> Result<(), EstimatorError> {
    if idx >= batch.k1 {
        return Err(EstimatorError::SupersampleOutOfRange { idx, k1: batch.k1 });
    }
    if batch.k2 < 2 {
        return Err(EstimatorError::TooFewDraws {
            needed: 2,
            got: batch.k2,
        });
    }
    Ok(())
}

/// Samplewise evaluated-CMI estimate for one supersample draw and row `i`:
/// plug-in MI between the binned loss pair `(code(l_{i,0}), code(l_{i,1}))`
/// and the selection bit, over the k2 selection draws.
pub fn ecmi_samplewise(
    batch: &TrialBatch,
    supersample_idx: usize,
    i: usize,
    bins: usize,
) -> Result<f64, EstimatorError> {
    check_supersample(batch, supersample_idx)?;
    if i >= batch.rows {
        return Err(EstimatorError::RowOutOfRange { i, n: batch.rows });
    }
    let mut hist = DiscreteJointHistogram::new(bins * bins, 2);
    for draw in batch.supersample_draws(supersample_idx) {
        let [l0, l1] = draw.losses.row(i);
        let x = discretize_loss(l0, bins)? as usize * bins + discretize_loss(l1, bins)? as usize;
        hist.record(x, draw.membership.bit(i) as usize);
    }
    plugin_mi(&hist)
}

/// All per-row estimates for one supersample draw, assembled in parallel and
/// returned in row order.
pub fn ecmi_all(
    batch: &TrialBatch,
    supersample_idx: usize,
    bins: usize,
) -> Result<Vec<f64>, EstimatorError> {
    check_supersample(batch, supersample_idx)?;
    (0..batch.rows)
        .into_par_iter()
        .map(|i| ecmi_samplewise(batch, supersample_idx, i, bins))
        .collect()
}

/// Mean over rows of the samplewise estimates for one supersample draw.
pub fn ecmi_average(
    batch: &TrialBatch,
    supersample_idx: usize,
    bins: usize,
) -> Result<f64, EstimatorError> {
    let values = ecmi_all(batch, supersample_idx, bins)?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Samplewise estimates conditioned on the algorithm randomness: the draws of
/// one supersample are grouped by `r_seed` and estimated per group.
///
/// Returned in ascending `r_seed` order; each group needs at least two draws.
pub fn ecmi_samplewise_by_r(
    batch: &TrialBatch,
    supersample_idx: usize,
    i: usize,
    bins: usize,
) -> Result<Vec<(u64, f64)>, EstimatorError> {
    check_supersample(batch, supersample_idx)?;
    if i >= batch.rows {
        return Err(EstimatorError::RowOutOfRange { i, n: batch.rows });
    }
    let mut groups: HashMap<u64, DiscreteJointHistogram> = HashMap::new();
    for draw in batch.supersample_draws(supersample_idx) {
        let [l0, l1] = draw.losses.row(i);
        let x = discretize_loss(l0, bins)? as usize * bins + discretize_loss(l1, bins)? as usize;
        groups
            .entry(draw.r_seed)
            .or_insert_with(|| DiscreteJointHistogram::new(bins * bins, 2))
            .record(x, draw.membership.bit(i) as usize);
    }
    let mut keys: Vec<u64> = groups.keys().copied().collect();
    keys.sort_unstable();
    keys.into_iter()
        .map(|r_seed| {
            let hist = &groups[&r_seed];
            if hist.total() < 2 {
                return Err(EstimatorError::RGroupTooSmall { r_seed });
            }
            Ok((r_seed, plugin_mi(hist)?))
        })
        .collect()
}

/// Plug-in MI between hypothesis identities and single-example identities in
/// the standard (non-supersample) setting.
pub fn samplewise_mi_standard(
    hypothesis_ids: &[usize],
    example_ids: &[usize],
) -> Result<f64, EstimatorError> {
    if hypothesis_ids.len() != example_ids.len() || hypothesis_ids.is_empty() {
        return Err(EstimatorError::TooFewDraws {
            needed: 1,
            got: hypothesis_ids.len().min(example_ids.len()),
        });
    }
    let nx = hypothesis_ids.iter().max().unwrap() + 1;
    let ny = example_ids.iter().max().unwrap() + 1;
    let mut hist = DiscreteJointHistogram::new(nx, ny);
    for (&h, &z) in hypothesis_ids.iter().zip(example_ids) {
        hist.record(h, z);
    }
    plugin_mi(&hist)
}

/// Generic samplewise MI against the selection bit, used for the
/// data-processing comparisons (losses vs predictions vs hypothesis).
pub fn mi_codes_vs_bits(codes: &[usize], bits: &[u8]) -> Result<f64, EstimatorError> {
    if codes.len() != bits.len() || codes.len() < 2 {
        return Err(EstimatorError::TooFewDraws {
            needed: 2,
            got: codes.len().min(bits.len()),
        });
    }
    let nx = codes.iter().max().unwrap() + 1;
    let mut hist = DiscreteJointHistogram::new(nx, 2);
    for (&x, &b) in codes.iter().zip(bits) {
        hist.record(x, b as usize);
    }
    plugin_mi(&hist)
}

/// Discretized loss table used as a point of the full-table law.
pub type TableKey = Vec<u16>;

/// Row-major discretization of a whole loss table.
pub fn table_key(table: &LossTable, bins: usize) -> Result<TableKey, EstimatorError> {
    let mut key = Vec::with_capacity(table.rows() * 2);
    for row in table.iter_rows() {
        key.push(discretize_loss(row[0], bins)?);
        key.push(discretize_loss(row[1], bins)?);
    }
    Ok(key)
}

/// Exact law of the discretized loss table under all 2^n membership vectors.
///
/// The conditional law given each membership vector comes from the supplied
/// oracle (a point mass for deterministic learners, a finite mixture over
/// randomness atoms otherwise); the marginal is their uniform mixture.
pub struct TableLaw {
    rows: usize,
    conditionals: Vec<Vec<(TableKey, f64)>>,
    marginal: HashMap<TableKey, f64>,
}

impl TableLaw {
    /// Enumerates the law for a learner given as `membership -> weighted
    /// tables`. Weights of each conditional must sum to one.
    pub fn enumerate<F>(rows: usize, mut oracle: F) -> Result<Self, EstimatorError>
    where
        F: FnMut(&MembershipVector) -> Vec<(TableKey, f64)>,
    {
        if rows > EXACT_ENUMERATION_MAX_ROWS {
            return Err(EstimatorError::TooManyRowsForExact {
                n: rows,
                max: EXACT_ENUMERATION_MAX_ROWS,
            });
        }
        let count = 1usize << rows;
        let uniform = 1.0 / count as f64;
        let mut conditionals = Vec::with_capacity(count);
        let mut marginal: HashMap<TableKey, f64> = HashMap::new();
        for mask in 0..count {
            let s = MembershipVector::from_mask(mask, rows);
            let atoms = oracle(&s);
            if atoms.is_empty() {
                return Err(EstimatorError::EmptyConditionalLaw);
            }
            for (key, weight) in &atoms {
                *marginal.entry(key.clone()).or_insert(0.0) += uniform * weight;
            }
            conditionals.push(atoms);
        }
        Ok(Self {
            rows,
            conditionals,
            marginal,
        })
    }

    /// Point-mass convenience constructor for deterministic learners.
    pub fn enumerate_deterministic<F>(rows: usize, mut oracle: F) -> Result<Self, EstimatorError>
    where
        F: FnMut(&MembershipVector) -> TableKey,
    {
        Self::enumerate(rows, |s| vec![(oracle(s), 1.0)])
    }

    fn mask_of(&self, s: &MembershipVector) -> Result<usize, EstimatorError> {
        if s.len() != self.rows {
            return Err(EstimatorError::LawDimensionMismatch {
                got: s.len(),
                expected: self.rows,
            });
        }
        let mut mask = 0usize;
        for i in 0..self.rows {
            mask |= (s.bit(i) as usize) << i;
        }
        Ok(mask)
    }

    pub fn marginal_probability(&self, key: &TableKey) -> f64 {
        self.marginal.get(key).copied().unwrap_or(0.0)
    }

    /// Conditional KL `D(P_table_given_s || P_table)` in nats, exact.
    ///
    /// For a point-mass conditional this reduces to `ln(1 / P_marginal(key))`.
    pub fn kl_given_s(&self, s: &MembershipVector) -> Result<f64, EstimatorError> {
        let mask = self.mask_of(s)?;
        let mut kl = 0.0;
        for (key, weight) in &self.conditionals[mask] {
            if *weight > 0.0 {
                let marginal = self.marginal_probability(key);
                kl += weight * (weight / marginal).ln();
            }
        }
        Ok(kl.max(0.0))
    }

    /// Pointwise information density `ln(P(key | s) / P(key))`; may be
    /// negative. Errors when the realized table has zero modeled probability.
    pub fn information_density(
        &self,
        s: &MembershipVector,
        observed: &TableKey,
    ) -> Result<f64, EstimatorError> {
        let mask = self.mask_of(s)?;
        let conditional = self.conditionals[mask]
            .iter()
            .filter(|(key, _)| key == observed)
            .map(|(_, w)| *w)
            .sum::<f64>();
        if conditional <= 0.0 {
            return Err(EstimatorError::AbsoluteContinuity);
        }
        let marginal = self.marginal_probability(observed);
        if marginal <= 0.0 {
            return Err(EstimatorError::AbsoluteContinuity);
        }
        Ok((conditional / marginal).ln())
    }

    /// Expectation of `kl_given_s` under uniform membership vectors: the
    /// full-table disintegrated mutual information for this supersample.
    pub fn mutual_information(&self) -> f64 {
        let count = self.conditionals.len() as f64;
        (0..self.conditionals.len())
            .map(|mask| {
                let s = MembershipVector::from_mask(mask, self.rows);
                self.kl_given_s(&s).expect("mask enumerated from own rows")
            })
            .sum::<f64>()
            / count
    }
}

/// Sampled-mode estimate of `E_S[D(P_table_given_s || P_table)]` over the k2
/// draws of one supersample. The marginal is the empirical mixture of the
/// drawn tables; no smoothing is added, which biases the estimate upward.
pub struct SampledTableKl {
    pub nats: f64,
    /// Always true: the add-nothing plug-in over finitely many draws
    /// overestimates the KL.
    pub biased: bool,
}

pub fn full_table_kl_sampled(
    batch: &TrialBatch,
    supersample_idx: usize,
    bins: usize,
) -> Result<SampledTableKl, EstimatorError> {
    check_supersample(batch, supersample_idx)?;
    let draws = batch.supersample_draws(supersample_idx);
    let mut empirical: HashMap<TableKey, f64> = HashMap::new();
    let mut keys = Vec::with_capacity(draws.len());
    let weight = 1.0 / draws.len() as f64;
    for draw in draws {
        let key = table_key(&draw.losses, bins)?;
        *empirical.entry(key.clone()).or_insert(0.0) += weight;
        keys.push(key);
    }
    // Each draw is treated as a point mass given its (s, r); the sampled KL
    // is then the average negative log marginal mass of the realized table.
    let nats = keys
        .iter()
        .map(|key| -(empirical[key]).ln())
        .sum::<f64>()
        / keys.len() as f64;
    Ok(SampledTableKl {
        nats: nats.max(0.0),
        biased: true,
    })
}
