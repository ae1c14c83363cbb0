//! Bound-comparison analytics: the interpolating-regime ordering, the
//! winner map over (information, training loss) space, and full experiment
//! reports pitting every applicable bound against the exactly known
//! generalization gap.

use crate::bounds::{self, BoundError};
use crate::core::{BoundKind, BoundReport, TrialBatch};
use crate::divergence;
use crate::estimators::{self, EstimatorError};
use crate::simulate::{ExperimentData, TrueGapStats};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyzeError {
    #[error("information constant must be positive, got {value}")]
    NonPositiveInformation { value: f64 },
    #[error("grid must be nonempty")]
    EmptyGrid,
    #[error("batch carries no population losses, so no gap comparison is possible")]
    MissingPopulationLosses,
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Divergence(#[from] divergence::DivergenceError),
}

/// One bound value in the interpolating-regime comparison.
#[derive(Debug, Clone, Serialize)]
pub struct OrderingEntry {
    pub name: BoundKind,
    pub value: f64,
}

/// Evaluates the four closed forms at zero training loss and uniform
/// samplewise information `B`, returned in ascending order:
/// interpolation `B / ln 2`, binary KL `2 - 2 e^{-B}`, linear
/// `min_Gamma B / gamma1`, square root `sqrt(2B)`.
pub fn ordering_check(b: f64) -> Result<Vec<OrderingEntry>, AnalyzeError> {
    if !(b > 0.0) {
        return Err(AnalyzeError::NonPositiveInformation { value: b });
    }
    let (_, linear) = divergence::optimize_linear_gamma(0.0, b)?;
    let mut entries = vec![
        OrderingEntry {
            name: BoundKind::Interpolation,
            value: b / std::f64::consts::LN_2,
        },
        OrderingEntry {
            name: BoundKind::BinaryKl,
            value: 2.0 - 2.0 * (-b).exp(),
        },
        OrderingEntry {
            name: BoundKind::Linear,
            value: linear,
        },
        OrderingEntry {
            name: BoundKind::SqrtIntegrated,
            value: (2.0 * b).sqrt(),
        },
    ];
    entries.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(entries)
}

/// Winner label of one cell in the comparison map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionWinner {
    BinaryKl,
    Linear,
    Sqrt,
    Trivial,
}

impl RegionWinner {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionWinner::BinaryKl => "binary_kl",
            RegionWinner::Linear => "linear",
            RegionWinner::Sqrt => "sqrt",
            RegionWinner::Trivial => "trivial",
        }
    }
}

/// Winner matrix over an information grid (rows) and training-loss grid
/// (columns), with the raw candidate values retained per cell.
#[derive(Debug, Clone, Serialize)]
pub struct RegionMap {
    pub ecmi_grid: Vec<f64>,
    pub train_grid: Vec<f64>,
    /// Row-major: index `i * train_grid.len() + j`.
    pub winners: Vec<RegionWinner>,
    pub binary_kl_values: Vec<f64>,
    pub linear_values: Vec<f64>,
    pub sqrt_values: Vec<f64>,
}

impl RegionMap {
    pub fn winner(&self, ecmi_idx: usize, train_idx: usize) -> RegionWinner {
        self.winners[ecmi_idx * self.train_grid.len() + train_idx]
    }
}

/// Compares, cell by cell, the binary KL bound `d^{-1}(L, B)`, the linear
/// bound `min_Gamma gamma2 L + B / gamma1`, and the square-root bound in its
/// uniform-information form `L + sqrt(2B)`. A cell is Trivial when no
/// candidate lies below 1.
pub fn region_map(ecmi_grid: &[f64], train_grid: &[f64]) -> Result<RegionMap, AnalyzeError> {
    if ecmi_grid.is_empty() || train_grid.is_empty() {
        return Err(AnalyzeError::EmptyGrid);
    }
    let cells: Vec<(RegionWinner, f64, f64, f64)> = ecmi_grid
        .par_iter()
        .flat_map_iter(|&b| {
            train_grid.iter().map(move |&train| {
                let kl = divergence::invert_kl_half(train, b).expect("grid values in range");
                let (_, linear) =
                    divergence::optimize_linear_gamma(train, b).expect("grid values in range");
                let sqrt = train + (2.0 * b).sqrt();
                let (winner, best) = [
                    (RegionWinner::BinaryKl, kl),
                    (RegionWinner::Linear, linear),
                    (RegionWinner::Sqrt, sqrt),
                ]
                .into_iter()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("three candidates");
                let label = if best < 1.0 { winner } else { RegionWinner::Trivial };
                (label, kl, linear, sqrt)
            })
        })
        .collect();
    Ok(RegionMap {
        ecmi_grid: ecmi_grid.to_vec(),
        train_grid: train_grid.to_vec(),
        winners: cells.iter().map(|c| c.0).collect(),
        binary_kl_values: cells.iter().map(|c| c.1).collect(),
        linear_values: cells.iter().map(|c| c.2).collect(),
        sqrt_values: cells.iter().map(|c| c.3).collect(),
    })
}

/// Default comparison grids: information log-spaced on [1e-3, 1] (60 points),
/// training loss linear on [0, 0.5] (51 points).
pub fn default_grids() -> (Vec<f64>, Vec<f64>) {
    (log_spaced(1e-3, 1.0, 60), linear_spaced(0.0, 0.5, 51))
}

pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| {
            let t = if points == 1 {
                0.0
            } else {
                k as f64 / (points - 1) as f64
            };
            (lo.ln() + t * (hi.ln() - lo.ln())).exp()
        })
        .collect()
}

pub fn linear_spaced(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| {
            let t = if points == 1 {
                0.0
            } else {
                k as f64 / (points - 1) as f64
            };
            lo + t * (hi - lo)
        })
        .collect()
}

/// One point of the interpolating-regime bound curves.
#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub ecmi: f64,
    pub interpolation: f64,
    pub binary_kl: f64,
    pub linear: f64,
    pub sqrt: f64,
}

/// Raw bound values at zero training loss over an information grid; the
/// curves behind the interpolating-regime comparison figure.
pub fn bound_curves(ecmi_grid: &[f64]) -> Result<Vec<CurvePoint>, AnalyzeError> {
    ecmi_grid
        .iter()
        .map(|&b| {
            let entries = ordering_check(b)?;
            let value = |kind: BoundKind| {
                entries
                    .iter()
                    .find(|e| e.name == kind)
                    .map(|e| e.value)
                    .expect("all four bounds present")
            };
            Ok(CurvePoint {
                ecmi: b,
                interpolation: value(BoundKind::Interpolation),
                binary_kl: value(BoundKind::BinaryKl),
                linear: value(BoundKind::Linear),
                sqrt: value(BoundKind::SqrtIntegrated),
            })
        })
        .collect()
}

/// Default information grid for the curves output: the interpolation bound
/// stays the lowest of the four on this range.
pub fn default_curve_grid() -> Vec<f64> {
    log_spaced(1e-3, 0.5, 120)
}

/// Per-bound validity verdict against the exact gap.
#[derive(Debug, Clone, Serialize)]
pub struct ValidityCheck {
    pub name: BoundKind,
    pub bound_value: f64,
    pub gap: f64,
    /// Combined standard error `sqrt(se_gap^2 + se_bound^2)`.
    pub combined_se: f64,
    /// `bound_value >= |gap| - 2 combined_se`.
    pub pass: bool,
}

/// Full per-batch report: every applicable average bound, the exact gap with
/// its Monte Carlo standard error, and per-bound validity checks.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub bins: usize,
    /// Echo of the batch's resolved generating config, when it carries one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<TrueGapStats>,
    pub bounds: Vec<BoundReport>,
    pub validity: Vec<ValidityCheck>,
}

/// Sufficient statistics per supersample draw, from which every average
/// bound can be recomputed on any subset (the jackknife resamples these).
struct SupersampleStats {
    /// Per-index samplewise information estimates.
    ecmi: Vec<f64>,
    /// Per-(randomness group) per-index estimates, when r varies.
    ecmi_by_r: Option<Vec<Vec<f64>>>,
    mean_train: f64,
}

fn jackknife<F>(k1: usize, eval: F) -> (f64, Option<f64>)
where
    F: Fn(&[usize]) -> f64,
{
    let full: Vec<usize> = (0..k1).collect();
    let value = eval(&full);
    if k1 < 2 {
        return (value, None);
    }
    let leave_one_out: Vec<f64> = (0..k1)
        .map(|drop| {
            let subset: Vec<usize> = (0..k1).filter(|&t| t != drop).collect();
            eval(&subset)
        })
        .collect();
    let mean = leave_one_out.iter().sum::<f64>() / k1 as f64;
    let factor = (k1 as f64 - 1.0) / k1 as f64;
    let variance = factor
        * leave_one_out
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<f64>();
    (value, Some(variance.sqrt()))
}

fn gap_stats_from_batch(batch: &TrialBatch) -> Option<TrueGapStats> {
    if batch.draws.iter().any(|d| d.population_loss.is_none()) {
        return None;
    }
    let k1 = batch.k1;
    let cluster_gaps: Vec<f64> = (0..k1)
        .map(|t| {
            batch
                .supersample_draws(t)
                .iter()
                .map(|d| d.population_loss.unwrap() - d.train_loss)
                .sum::<f64>()
                / batch.k2 as f64
        })
        .collect();
    let mean_gap = cluster_gaps.iter().sum::<f64>() / k1 as f64;
    let se_gap = if k1 >= 2 {
        let var = cluster_gaps
            .iter()
            .map(|&g| (g - mean_gap) * (g - mean_gap))
            .sum::<f64>()
            / (k1 as f64 - 1.0);
        (var / k1 as f64).sqrt()
    } else {
        0.0
    };
    let total = batch.draws.len() as f64;
    Some(TrueGapStats {
        mean_gap,
        se_gap,
        mean_train: batch.draws.iter().map(|d| d.train_loss).sum::<f64>() / total,
        mean_test: batch.draws.iter().map(|d| d.test_loss).sum::<f64>() / total,
        mean_population: batch
            .draws
            .iter()
            .map(|d| d.population_loss.unwrap())
            .sum::<f64>()
            / total,
    })
}

fn collect_stats(batch: &TrialBatch, bins: usize) -> Result<Vec<SupersampleStats>, AnalyzeError> {
    let has_multiple_r = batch
        .draws
        .iter()
        .map(|d| d.r_seed)
        .collect::<std::collections::BTreeSet<_>>()
        .len()
        > 1;
    (0..batch.k1)
        .map(|t| {
            let ecmi = estimators::ecmi_all(batch, t, bins)?;
            let ecmi_by_r = if has_multiple_r {
                let mut per_group: Vec<Vec<f64>> = Vec::new();
                for i in 0..batch.rows {
                    for (slot, (_, value)) in
                        estimators::ecmi_samplewise_by_r(batch, t, i, bins)?.into_iter().enumerate()
                    {
                        if per_group.len() <= slot {
                            per_group.push(vec![0.0; batch.rows]);
                        }
                        per_group[slot][i] = value;
                    }
                }
                Some(per_group)
            } else {
                None
            };
            let draws = batch.supersample_draws(t);
            let mean_train =
                draws.iter().map(|d| d.train_loss).sum::<f64>() / draws.len() as f64;
            Ok(SupersampleStats {
                ecmi,
                ecmi_by_r,
                mean_train,
            })
        })
        .collect()
}

/// Computes every applicable average bound from the batch.
///
/// The disintegrated family averages per-supersample quantities; pooled
/// variants plug supersample-averaged information into the same inversion.
/// Each bound's jackknife standard error over supersample draws is stored in
/// its intermediates.
pub fn experiment_report(batch: &TrialBatch, bins: usize) -> Result<ExperimentReport, AnalyzeError> {
    let stats = collect_stats(batch, bins)?;
    let k1 = stats.len();
    let n = batch.rows;
    let gap = gap_stats_from_batch(batch);
    let train_loss = stats.iter().map(|s| s.mean_train).sum::<f64>() / k1 as f64;

    let mean_ecmi_matrix = |subset: &[usize]| -> Vec<Vec<f64>> {
        subset.iter().map(|&t| stats[t].ecmi.clone()).collect()
    };
    let avg_ecmi_over = |subset: &[usize]| -> f64 {
        subset
            .iter()
            .map(|&t| stats[t].ecmi.iter().sum::<f64>() / n as f64)
            .sum::<f64>()
            / subset.len() as f64
    };
    let train_over = |subset: &[usize]| -> f64 {
        subset.iter().map(|&t| stats[t].mean_train).sum::<f64>() / subset.len() as f64
    };

    let mut reports: Vec<BoundReport> = Vec::new();
    let mut push = |report: BoundReport, se: Option<f64>| {
        let mut report = report;
        report.intermediates.value_se = se;
        if let Some(g) = &gap {
            report.intermediates.gap_se = Some(g.se_gap);
        }
        reports.push(report);
    };

    // Square-root family.
    {
        let (value, se) = jackknife(k1, |subset| {
            bounds::sqrt_bound_disintegrated(&mean_ecmi_matrix(subset))
                .expect("nonnegative estimates")
                .value
        });
        let mut report = bounds::sqrt_bound_disintegrated(&mean_ecmi_matrix(
            &(0..k1).collect::<Vec<_>>(),
        ))?;
        debug_assert_eq!(report.value, value);
        report.value = value;
        push(report, se);
    }
    {
        let eval = |subset: &[usize]| -> f64 {
            let mut mean = vec![0.0; n];
            for &t in subset {
                for (acc, &v) in mean.iter_mut().zip(&stats[t].ecmi) {
                    *acc += v / subset.len() as f64;
                }
            }
            bounds::sqrt_bound_integrated(&mean).expect("nonnegative").value
        };
        let (value, se) = jackknife(k1, eval);
        let mut mean = vec![0.0; n];
        for stat in &stats {
            for (acc, &v) in mean.iter_mut().zip(&stat.ecmi) {
                *acc += v / k1 as f64;
            }
        }
        let mut report = bounds::sqrt_bound_integrated(&mean)?;
        report.value = value;
        push(report, se);
    }

    // R-conditioned square-root bound, when the batch carries randomness.
    if stats.iter().all(|s| s.ecmi_by_r.is_some()) {
        let eval = |subset: &[usize]| -> f64 {
            let groups: Vec<Vec<f64>> = subset
                .iter()
                .flat_map(|&t| stats[t].ecmi_by_r.as_ref().unwrap().clone())
                .collect();
            bounds::r_conditioned_sqrt_bound(&groups).expect("nonnegative").value
        };
        let (value, se) = jackknife(k1, eval);
        let groups: Vec<Vec<f64>> = stats
            .iter()
            .flat_map(|s| s.ecmi_by_r.as_ref().unwrap().clone())
            .collect();
        let mut report = bounds::r_conditioned_sqrt_bound(&groups)?;
        report.value = value;
        push(report, se);
    }

    // Linear bound on pooled quantities.
    {
        let eval = |subset: &[usize]| -> f64 {
            bounds::linear_bound(train_over(subset), avg_ecmi_over(subset))
                .expect("valid losses")
                .value
        };
        let (_, se) = jackknife(k1, eval);
        let report = bounds::linear_bound(train_loss, avg_ecmi_over(&(0..k1).collect::<Vec<_>>()))?;
        push(report.with_train_loss(train_loss), se);
    }

    // Interpolation bound; inapplicable on non-interpolating batches.
    {
        let all = (0..k1).collect::<Vec<_>>();
        let report = bounds::interpolation_bound(train_loss, avg_ecmi_over(&all))?;
        let se = if report.applicable {
            jackknife(k1, |subset| {
                bounds::interpolation_bound(0.0, avg_ecmi_over(subset))
                    .expect("zero train loss")
                    .value
            })
            .1
        } else {
            None
        };
        push(report, se);
    }

    // Binary KL bound, pooled and disintegrated.
    {
        let eval = |subset: &[usize]| -> f64 {
            bounds::binary_kl_bound(train_over(subset), avg_ecmi_over(subset))
                .expect("valid losses")
                .value
        };
        let (_, se) = jackknife(k1, eval);
        let all = (0..k1).collect::<Vec<_>>();
        let report = bounds::binary_kl_bound(train_loss, avg_ecmi_over(&all))?;
        push(report, se);
    }
    {
        let eval = |subset: &[usize]| -> f64 {
            let trains: Vec<f64> = subset.iter().map(|&t| stats[t].mean_train).collect();
            let ecmis: Vec<f64> = subset
                .iter()
                .map(|&t| stats[t].ecmi.iter().sum::<f64>() / n as f64)
                .collect();
            bounds::binary_kl_bound_disintegrated(&trains, &ecmis)
                .expect("valid losses")
                .value
        };
        let (value, se) = jackknife(k1, eval);
        let trains: Vec<f64> = stats.iter().map(|s| s.mean_train).collect();
        let ecmis: Vec<f64> = stats
            .iter()
            .map(|s| s.ecmi.iter().sum::<f64>() / n as f64)
            .collect();
        let mut report = bounds::binary_kl_bound_disintegrated(&trains, &ecmis)?;
        report.value = value;
        push(report, se);
    }

    // Interpolation variant of the disintegrated KL bound.
    {
        let ecmis: Vec<f64> = stats
            .iter()
            .map(|s| s.ecmi.iter().sum::<f64>() / n as f64)
            .collect();
        let report = bounds::kl_interp_bound_disintegrated(train_loss, &ecmis)?;
        let se = if report.applicable {
            jackknife(k1, |subset| {
                let sub: Vec<f64> = subset
                    .iter()
                    .map(|&t| stats[t].ecmi.iter().sum::<f64>() / n as f64)
                    .collect();
                bounds::kl_interp_bound_disintegrated(0.0, &sub)
                    .expect("zero train loss")
                    .value
            })
            .1
        } else {
            None
        };
        push(report, se);
    }

    // Best affine variant over the small coefficient grid.
    {
        let eval = |subset: &[usize]| -> f64 {
            bounds::affine_kl_bound_grid(train_over(subset), avg_ecmi_over(subset))
                .expect("valid losses")
                .value
        };
        let (_, se) = jackknife(k1, eval);
        let all = (0..k1).collect::<Vec<_>>();
        let report = bounds::affine_kl_bound_grid(train_loss, avg_ecmi_over(&all))?;
        push(report, se);
    }

    let validity = match &gap {
        Some(g) => reports
            .iter()
            .filter(|r| r.applicable)
            .map(|r| {
                let bound_se = r.intermediates.value_se.unwrap_or(0.0);
                let combined_se = (g.se_gap * g.se_gap + bound_se * bound_se).sqrt();
                ValidityCheck {
                    name: r.name,
                    bound_value: r.value,
                    gap: g.mean_gap,
                    combined_se,
                    pass: r.value >= g.mean_gap.abs() - 2.0 * combined_se,
                }
            })
            .collect(),
        None => Vec::new(),
    };

    Ok(ExperimentReport {
        schema: crate::core::SCHEMA_VERSION,
        bins,
        config: batch.config.clone(),
        train_loss,
        gap,
        bounds: reports,
        validity,
    })
}

/// Per-index information of the three stages of the hypothesis-to-loss
/// data-processing chain, with chunked standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct ChainPoint {
    pub index: usize,
    pub loss_mi: f64,
    pub prediction_mi: f64,
    pub hypothesis_mi: f64,
    pub loss_se: f64,
    pub prediction_se: f64,
    pub hypothesis_se: f64,
}

/// Estimates, on the same draws, the information the selection bit shares
/// with the loss pair, the prediction pair, and the hypothesis identity, for
/// every row of one supersample draw. Losses are a function of predictions
/// given the supersample, and predictions a function of the hypothesis, so
/// the three plug-in estimates are ordered by data processing.
pub fn data_processing_chain(
    data: &ExperimentData,
    supersample_idx: usize,
    bins: usize,
    chunks: usize,
) -> Result<Vec<ChainPoint>, AnalyzeError> {
    let batch = &data.batch;
    let draws = batch.supersample_draws(supersample_idx);
    let offset = supersample_idx * batch.k2;
    let label_count = data
        .predictions
        .iter()
        .flat_map(|p| p.iter().copied())
        .max()
        .unwrap_or(0) as usize
        + 1;

    let mut points = Vec::with_capacity(batch.rows);
    for i in 0..batch.rows {
        let bits: Vec<u8> = draws.iter().map(|d| d.membership.bit(i)).collect();
        let loss_codes: Vec<usize> = draws
            .iter()
            .map(|d| {
                let [l0, l1] = d.losses.row(i);
                Ok::<usize, EstimatorError>(
                    estimators::discretize_loss(l0, bins)? as usize * bins
                        + estimators::discretize_loss(l1, bins)? as usize,
                )
            })
            .collect::<Result<_, _>>()?;
        let pred_codes: Vec<usize> = (0..draws.len())
            .map(|j| {
                let preds = &data.predictions[offset + j];
                preds[2 * i] as usize * label_count + preds[2 * i + 1] as usize
            })
            .collect();
        let hyp_codes: Vec<usize> = (0..draws.len())
            .map(|j| data.hypothesis_ids[offset + j])
            .collect();

        let estimate = |codes: &[usize]| -> Result<(f64, f64), AnalyzeError> {
            let full = estimators::mi_codes_vs_bits(codes, &bits)?;
            let chunk_len = codes.len() / chunks.max(1);
            if chunk_len < 2 || chunks < 2 {
                return Ok((full, 0.0));
            }
            let values: Vec<f64> = (0..chunks)
                .map(|c| {
                    let lo = c * chunk_len;
                    let hi = if c + 1 == chunks { codes.len() } else { lo + chunk_len };
                    estimators::mi_codes_vs_bits(&codes[lo..hi], &bits[lo..hi])
                })
                .collect::<Result<_, _>>()?;
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let var = values
                .iter()
                .map(|&v| (v - mean) * (v - mean))
                .sum::<f64>()
                / (values.len() as f64 - 1.0);
            Ok((full, (var / values.len() as f64).sqrt()))
        };

        let (loss_mi, loss_se) = estimate(&loss_codes)?;
        let (prediction_mi, prediction_se) = estimate(&pred_codes)?;
        let (hypothesis_mi, hypothesis_se) = estimate(&hyp_codes)?;
        points.push(ChainPoint {
            index: i,
            loss_mi,
            prediction_mi,
            hypothesis_mi,
            loss_se,
            prediction_se,
            hypothesis_se,
        });
    }
    Ok(points)
}

/// Sampled-mode high-probability reports for a batch: the full-table KL is
/// estimated from the drawn selection vectors (biased upward) and plugged
/// into the square-root and binary KL tail bounds.
pub fn sampled_highprob_reports(
    batch: &TrialBatch,
    bins: usize,
    delta: f64,
) -> Result<Vec<BoundReport>, AnalyzeError> {
    let kl = (0..batch.k1)
        .map(|t| Ok(estimators::full_table_kl_sampled(batch, t, bins)?.nats))
        .sum::<Result<f64, AnalyzeError>>()?
        / batch.k1 as f64;
    let train_loss =
        batch.draws.iter().map(|d| d.train_loss).sum::<f64>() / batch.draws.len() as f64;
    let n = batch.rows as u32;
    let sqrt_value = bounds::highprob_sqrt_bound(kl, n, delta)?;
    let kl_value = bounds::highprob_kl_bound(kl, n, delta, train_loss)?;
    let mut sqrt_report = BoundReport::loss_valued(BoundKind::HighProbSqrt, sqrt_value);
    sqrt_report.intermediates.biased_estimate = true;
    let mut kl_report = BoundReport::loss_valued(BoundKind::HighProbKl, kl_value)
        .with_train_loss(train_loss);
    kl_report.intermediates.biased_estimate = true;
    Ok(vec![sqrt_report, kl_report])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{run_experiment_extended, LearnerKind, SimConfig};

    fn config(learner: LearnerKind) -> SimConfig {
        SimConfig {
            domain_size: 8,
            label_count: 2,
            noise_rate: 0.0,
            corruption_rate: 0.0,
            learner,
            rows: 10,
            supersample_draws: 6,
            selection_draws: 64,
            bins: None,
            master_seed: 5,
            r_count: 1,
            gibbs_beta: crate::simulate::DEFAULT_GIBBS_BETA,
            breakpoints: None,
        }
    }

    #[test]
    fn ordering_anchor_at_b_01() {
        let entries = ordering_check(0.1).unwrap();
        let values: Vec<f64> = entries.iter().map(|e| e.value).collect();
        assert!((values[0] - 0.14426950408889636).abs() < 1e-5);
        assert!((values[1] - 0.19032516392808096).abs() < 1e-5);
        assert!((values[2] - 0.27371595042612457).abs() < 1e-3);
        assert!((values[3] - 0.4472135954999579).abs() < 1e-5);
        let names: Vec<BoundKind> = entries.iter().map(|e| e.name).collect();
        assert_eq!(
            names,
            vec![
                BoundKind::Interpolation,
                BoundKind::BinaryKl,
                BoundKind::Linear,
                BoundKind::SqrtIntegrated
            ]
        );
    }

    #[test]
    fn ordering_inverts_past_threshold() {
        let entries = ordering_check(0.5).unwrap();
        let sqrt = entries
            .iter()
            .find(|e| e.name == BoundKind::SqrtIntegrated)
            .unwrap()
            .value;
        let linear = entries
            .iter()
            .find(|e| e.name == BoundKind::Linear)
            .unwrap()
            .value;
        assert!((sqrt - 1.0).abs() < 1e-12);
        assert!(linear > sqrt, "linear {linear} should exceed sqrt {sqrt}");
    }

    #[test]
    fn ordering_limit_preserved_for_tiny_b() {
        let entries = ordering_check(1e-6).unwrap();
        let names: Vec<BoundKind> = entries.iter().map(|e| e.name).collect();
        assert_eq!(
            names,
            vec![
                BoundKind::Interpolation,
                BoundKind::BinaryKl,
                BoundKind::Linear,
                BoundKind::SqrtIntegrated
            ]
        );
        assert!(entries[3].value < 0.01);
        assert!(ordering_check(0.0).is_err());
    }

    #[test]
    fn region_map_known_cells() {
        // Low corner: at zero training loss the binary KL inversion beats
        // the linear bound for every positive information value.
        let map = region_map(&[1e-3], &[0.0]).unwrap();
        assert_eq!(map.winner(0, 0), RegionWinner::BinaryKl);

        // Small information with nonzero training loss is linear territory:
        // the inversion pays the curvature of the half mixture around q.
        let linear_cell = region_map(&[0.01], &[0.1]).unwrap();
        assert_eq!(linear_cell.winner(0, 0), RegionWinner::Linear);

        let high = region_map(&[1.0], &[0.5]).unwrap();
        assert_eq!(high.winner(0, 0), RegionWinner::Trivial);

        // Both candidates vacuous here, but the raw square-root value sits
        // below the raw linear value.
        let cell = region_map(&[0.4], &[0.4]).unwrap();
        assert!(cell.sqrt_values[0] < cell.linear_values[0]);
        assert_eq!(cell.winner(0, 0), RegionWinner::Trivial);
    }

    #[test]
    fn region_map_interior_labels_stable_under_refinement() {
        let coarse_b = log_spaced(1e-3, 1.0, 24);
        let coarse_l = linear_spaced(0.0, 0.5, 21);
        let coarse = region_map(&coarse_b, &coarse_l).unwrap();
        let fine_b = log_spaced(1e-3, 1.0, 47);
        let fine_l = linear_spaced(0.0, 0.5, 41);
        let fine = region_map(&fine_b, &fine_l).unwrap();
        for bi in 1..coarse_b.len() - 1 {
            for li in 1..coarse_l.len() - 1 {
                let label = coarse.winner(bi, li);
                let interior = (-1i32..=1).all(|db| {
                    (-1i32..=1).all(|dl| {
                        coarse.winner((bi as i32 + db) as usize, (li as i32 + dl) as usize)
                            == label
                    })
                });
                if interior {
                    // The fine grid doubles resolution: cell (2bi, 2li)
                    // lands on the same coordinates.
                    assert_eq!(
                        fine.winner(2 * bi, 2 * li),
                        label,
                        "refinement flipped interior cell ({bi}, {li})"
                    );
                }
            }
        }
    }

    #[test]
    fn curves_are_monotone_with_interpolation_lowest() {
        let curves = bound_curves(&default_curve_grid()).unwrap();
        for window in curves.windows(2) {
            assert!(window[1].interpolation >= window[0].interpolation);
            assert!(window[1].binary_kl >= window[0].binary_kl);
            assert!(window[1].linear >= window[0].linear);
            assert!(window[1].sqrt >= window[0].sqrt);
        }
        for point in &curves {
            assert!(point.interpolation <= point.binary_kl);
            assert!(point.interpolation <= point.linear);
            assert!(point.interpolation <= point.sqrt);
        }
    }

    #[test]
    fn report_on_constant_learner_is_all_zero() {
        let mut cfg = config(LearnerKind::ErmFiniteClass);
        cfg.domain_size = 1;
        cfg.breakpoints = Some(0);
        let data = run_experiment_extended(&cfg).unwrap();
        let report = experiment_report(&data.batch, 2).unwrap();
        assert_eq!(report.gap.as_ref().unwrap().mean_gap, 0.0);
        for bound in &report.bounds {
            if bound.applicable {
                assert!(bound.value >= 0.0);
            }
        }
        for check in &report.validity {
            assert!(check.pass);
        }
        // Zero information everywhere: the square-root bounds vanish.
        let sqrt = report
            .bounds
            .iter()
            .find(|b| b.name == BoundKind::SqrtDisintegrated)
            .unwrap();
        assert_eq!(sqrt.value, 0.0);
    }

    #[test]
    fn report_regenerates_deterministically() {
        let cfg = config(LearnerKind::Memorizer);
        let data_a = run_experiment_extended(&cfg).unwrap();
        let data_b = run_experiment_extended(&cfg).unwrap();
        let report_a = experiment_report(&data_a.batch, 2).unwrap();
        let report_b = experiment_report(&data_b.batch, 2).unwrap();
        assert_eq!(
            serde_json::to_string(&report_a).unwrap(),
            serde_json::to_string(&report_b).unwrap()
        );
    }

    #[test]
    fn interpolating_memorizer_orders_interp_below_disintegrated_kl() {
        let cfg = config(LearnerKind::Memorizer);
        let data = run_experiment_extended(&cfg).unwrap();
        let report = experiment_report(&data.batch, 2).unwrap();
        let value = |kind: BoundKind| {
            report
                .bounds
                .iter()
                .find(|b| b.name == kind)
                .expect("bound present")
                .clone()
        };
        let interp = value(BoundKind::Interpolation);
        let kl_disint = value(BoundKind::BinaryKlDisintegrated);
        assert!(interp.applicable, "clean memorizer interpolates");
        assert!(interp.value <= kl_disint.value + 1e-12);
    }

    #[test]
    fn chain_is_ordered_by_data_processing() {
        let mut cfg = config(LearnerKind::ErmFiniteClass);
        cfg.label_count = 3;
        cfg.domain_size = 9;
        cfg.noise_rate = 0.2;
        let data = run_experiment_extended(&cfg).unwrap();
        for t in 0..cfg.supersample_draws {
            for point in data_processing_chain(&data, t, 2, 8).unwrap() {
                assert!(
                    point.loss_mi <= point.prediction_mi + 1e-12,
                    "row {}: loss {} > prediction {}",
                    point.index,
                    point.loss_mi,
                    point.prediction_mi
                );
                assert!(
                    point.prediction_mi <= point.hypothesis_mi + 1e-12,
                    "row {}: prediction {} > hypothesis {}",
                    point.index,
                    point.prediction_mi,
                    point.hypothesis_mi
                );
            }
        }
    }

    #[test]
    fn conditioning_on_randomness_never_tightens_integrated_form() {
        // On a randomized learner, the integrated square-root bound computed
        // from randomness-pooled estimates stays below the variant whose
        // information is additionally conditioned on the randomness seed,
        // up to two jackknife standard errors.
        let mut cfg = config(LearnerKind::Gibbs);
        cfg.r_count = 4;
        cfg.gibbs_beta = 1.5;
        cfg.noise_rate = 0.1;
        cfg.supersample_draws = 12;
        cfg.selection_draws = 160;
        let data = run_experiment_extended(&cfg).unwrap();
        let batch = &data.batch;
        let n = batch.rows;

        let integrated_on = |subset: &[usize]| -> f64 {
            let mut mean = vec![0.0; n];
            for &t in subset {
                let per_i = crate::estimators::ecmi_all(batch, t, 2).unwrap();
                for (acc, v) in mean.iter_mut().zip(per_i) {
                    *acc += v / subset.len() as f64;
                }
            }
            crate::bounds::sqrt_bound_integrated(&mean).unwrap().value
        };
        let r_cond_integrated_on = |subset: &[usize]| -> f64 {
            // Mean over (supersample, seed) groups per index, root afterward.
            let mut mean = vec![0.0; n];
            let mut groups = 0usize;
            for &t in subset {
                let per_group: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        crate::estimators::ecmi_samplewise_by_r(batch, t, i, 2)
                            .unwrap()
                            .into_iter()
                            .map(|(_, v)| v)
                            .collect()
                    })
                    .collect();
                let group_count = per_group[0].len();
                groups += group_count;
                for i in 0..n {
                    for g in 0..group_count {
                        mean[i] += per_group[i][g];
                    }
                }
            }
            for value in &mut mean {
                *value /= groups as f64;
            }
            crate::bounds::sqrt_bound_integrated(&mean).unwrap().value
        };

        let k1 = batch.k1;
        let full: Vec<usize> = (0..k1).collect();
        let integrated = integrated_on(&full);
        let r_conditioned = r_cond_integrated_on(&full);
        let jack = |eval: &dyn Fn(&[usize]) -> f64| -> f64 {
            let loo: Vec<f64> = (0..k1)
                .map(|drop| {
                    let subset: Vec<usize> = (0..k1).filter(|&t| t != drop).collect();
                    eval(&subset)
                })
                .collect();
            let mean = loo.iter().sum::<f64>() / k1 as f64;
            ((k1 as f64 - 1.0) / k1 as f64
                * loo.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>())
            .sqrt()
        };
        let se = (jack(&integrated_on).powi(2) + jack(&r_cond_integrated_on).powi(2)).sqrt();
        assert!(
            integrated <= r_conditioned + 2.0 * se,
            "integrated {integrated} vs r-conditioned {r_conditioned} (se {se})"
        );
    }

    #[test]
    fn sampled_highprob_reports_are_flagged() {
        let cfg = config(LearnerKind::Memorizer);
        let data = run_experiment_extended(&cfg).unwrap();
        let reports = sampled_highprob_reports(&data.batch, 2, 0.05).unwrap();
        assert_eq!(reports.len(), 2);
        for report in reports {
            assert!(report.intermediates.biased_estimate);
            assert!(report.value >= 0.0);
        }
    }
}
