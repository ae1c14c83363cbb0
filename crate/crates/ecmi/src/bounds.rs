//! Generalization bounds as pure functions from information quantities to
//! [`BoundReport`]s.
//!
//! Conventions shared by every bound here:
//!
//! * information arguments are in nats;
//! * loss-valued bound values are clamped into [0, 1], with the raw value and
//!   a vacuity flag kept in the intermediates;
//! * average bounds take already-estimated evaluated-CMI quantities and do no
//!   estimation of their own.

use crate::core::{BoundKind, BoundReport, NatarajanSpec};
use crate::divergence::{self, DivergenceError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("information quantities must be nonnegative, got {value}")]
    NegativeInformation { value: f64 },
    #[error("empty information list")]
    EmptyInformationList,
    #[error("subset size m must be at least 1")]
    BadSubsetSize,
    #[error("sample size n must be at least 2, got {n}")]
    SampleSizeTooSmall { n: u32 },
    #[error("confidence level delta must lie in (0, 1), got {delta}")]
    BadDelta { delta: f64 },
    #[error("disintegrated inputs must pair one train loss with one information average per draw")]
    MismatchedDisintegration,
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}

fn check_nonneg(values: &[f64]) -> Result<(), BoundError> {
    if values.is_empty() {
        return Err(BoundError::EmptyInformationList);
    }
    for &v in values {
        if !(v >= 0.0) {
            return Err(BoundError::NegativeInformation { value: v });
        }
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<(), BoundError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(BoundError::BadDelta { delta });
    }
    Ok(())
}

/// Square-root bound on the absolute average generalization gap from
/// integrated samplewise information: `(1/n) sum_i sqrt(2 I_i)`.
pub fn sqrt_bound_integrated(per_index_ecmi: &[f64]) -> Result<BoundReport, BoundError> {
    check_nonneg(per_index_ecmi)?;
    let raw = per_index_ecmi
        .iter()
        .map(|&i| (2.0 * i).sqrt())
        .sum::<f64>()
        / per_index_ecmi.len() as f64;
    Ok(BoundReport::loss_valued(BoundKind::SqrtIntegrated, raw).with_ecmi(per_index_ecmi.to_vec()))
}

/// Disintegrated square-root bound: the expectation over supersamples stays
/// outside the square root, `(1/n) sum_i mean_z sqrt(2 I_i^z)`.
///
/// Input is one row of per-index estimates per supersample draw. By Jensen
/// this never exceeds the integrated form applied to the column means.
pub fn sqrt_bound_disintegrated(per_supersample_ecmi: &[Vec<f64>]) -> Result<BoundReport, BoundError> {
    if per_supersample_ecmi.is_empty() {
        return Err(BoundError::EmptyInformationList);
    }
    let n = per_supersample_ecmi[0].len();
    let mut mean_ecmi = vec![0.0; n];
    for row in per_supersample_ecmi {
        if row.len() != n {
            return Err(BoundError::MismatchedDisintegration);
        }
        check_nonneg(row)?;
        for (acc, &v) in mean_ecmi.iter_mut().zip(row) {
            *acc += v / per_supersample_ecmi.len() as f64;
        }
    }
    let k1 = per_supersample_ecmi.len() as f64;
    let raw = (0..n)
        .map(|i| {
            per_supersample_ecmi
                .iter()
                .map(|row| (2.0 * row[i]).sqrt())
                .sum::<f64>()
                / k1
        })
        .sum::<f64>()
        / n as f64;
    Ok(BoundReport::loss_valued(BoundKind::SqrtDisintegrated, raw).with_ecmi(mean_ecmi))
}

/// Squared bound on the mean squared gap: `(8/m)(I + 2)` for the full-subset
/// information of a random subset of size `m`. Not loss-valued, so the value
/// is reported unclamped; anything above 1 is flagged vacuous (the squared
/// gap can never exceed 1).
pub fn squared_bound(full_ecmi_m: f64, m: u32) -> Result<BoundReport, BoundError> {
    if m < 1 {
        return Err(BoundError::BadSubsetSize);
    }
    if !(full_ecmi_m >= 0.0) {
        return Err(BoundError::NegativeInformation { value: full_ecmi_m });
    }
    let value = (8.0 / m as f64) * (full_ecmi_m + 2.0);
    let mut report = BoundReport {
        name: BoundKind::Squared,
        value,
        applicable: true,
        intermediates: Default::default(),
    };
    report.intermediates.raw_value = value;
    report.intermediates.vacuous = value > 1.0;
    Ok(report)
}

/// Squared bound with the default subset size `m = n/2`, half the training
/// set. The subset size is otherwise a free caller choice.
pub fn squared_bound_default_m(full_ecmi_m: f64, n: u32) -> Result<BoundReport, BoundError> {
    squared_bound(full_ecmi_m, (n / 2).max(1))
}

/// Square-root bound conditioned on the algorithm randomness: per-index
/// estimates are grouped by `(supersample, r)` and the roots averaged over
/// all groups, `(1/n) sum_i mean_{z, r} sqrt(2 I_i^{z, r})`.
pub fn r_conditioned_sqrt_bound(per_group_ecmi: &[Vec<f64>]) -> Result<BoundReport, BoundError> {
    let report = sqrt_bound_disintegrated(per_group_ecmi)?;
    Ok(BoundReport {
        name: BoundKind::RConditionedSqrt,
        ..report
    })
}

/// Linear bound: `min_{gamma in Gamma} gamma2 L_hat + B_bar / gamma1` with the
/// feasible set from the two-parameter concentration constraint.
pub fn linear_bound(train_loss: f64, avg_ecmi: f64) -> Result<BoundReport, BoundError> {
    let (pair, value) = divergence::optimize_linear_gamma(train_loss, avg_ecmi)?;
    Ok(
        BoundReport::loss_valued(BoundKind::Linear, value)
            .with_train_loss(train_loss)
            .with_gamma(pair.gamma1, pair.gamma2),
    )
}

/// Tolerance below which a training loss counts as exactly zero for the
/// interpolation bounds.
pub const INTERPOLATION_TOL: f64 = 1e-9;

/// Interpolation bound `B_bar / ln 2`, valid only for interpolating learners
/// (zero training loss); reported inapplicable otherwise.
pub fn interpolation_bound(train_loss: f64, avg_ecmi: f64) -> Result<BoundReport, BoundError> {
    if !(avg_ecmi >= 0.0) {
        return Err(BoundError::NegativeInformation { value: avg_ecmi });
    }
    if train_loss.abs() > INTERPOLATION_TOL {
        let mut report = BoundReport::inapplicable(BoundKind::Interpolation);
        report.intermediates.train_loss = Some(train_loss);
        return Ok(report);
    }
    let raw = avg_ecmi / std::f64::consts::LN_2;
    Ok(BoundReport::loss_valued(BoundKind::Interpolation, raw).with_train_loss(train_loss))
}

/// Binary KL bound: inverts `d(L_hat || (L_hat + p)/2) <= B_bar` for the
/// largest admissible `p`.
pub fn binary_kl_bound(train_loss: f64, avg_ecmi: f64) -> Result<BoundReport, BoundError> {
    let raw = divergence::invert_kl_half(train_loss, avg_ecmi)?;
    Ok(BoundReport::loss_valued(BoundKind::BinaryKl, raw).with_train_loss(train_loss))
}

/// Disintegrated binary KL bound: the half-mixture inversion applied per
/// supersample draw, then averaged.
pub fn binary_kl_bound_disintegrated(
    per_supersample_train: &[f64],
    per_supersample_ecmi: &[f64],
) -> Result<BoundReport, BoundError> {
    if per_supersample_train.len() != per_supersample_ecmi.len()
        || per_supersample_train.is_empty()
    {
        return Err(BoundError::MismatchedDisintegration);
    }
    let mut total = 0.0;
    for (&train, &ecmi) in per_supersample_train.iter().zip(per_supersample_ecmi) {
        total += divergence::invert_kl_half(train, ecmi)?;
    }
    let raw = total / per_supersample_train.len() as f64;
    Ok(BoundReport::loss_valued(BoundKind::BinaryKlDisintegrated, raw)
        .with_ecmi(per_supersample_ecmi.to_vec()))
}

/// Disintegrated interpolation binary KL bound: closed form
/// `mean_z (2 - 2 e^{-B_bar_z})`, valid when the overall training loss is
/// zero. Coincides with the disintegrated inversion at zero train loss.
pub fn kl_interp_bound_disintegrated(
    train_loss: f64,
    per_supersample_ecmi: &[f64],
) -> Result<BoundReport, BoundError> {
    check_nonneg(per_supersample_ecmi)?;
    if train_loss.abs() > INTERPOLATION_TOL {
        let mut report = BoundReport::inapplicable(BoundKind::KlInterpDisintegrated);
        report.intermediates.train_loss = Some(train_loss);
        return Ok(report);
    }
    // The closed form of the half-mixture inversion at zero training loss is
    // min(2 - 2 e^{-c}, 1): past c = ln 2 the supremum saturates at 1.
    let raw = per_supersample_ecmi
        .iter()
        .map(|&b| (2.0 - 2.0 * (-b).exp()).min(1.0))
        .sum::<f64>()
        / per_supersample_ecmi.len() as f64;
    Ok(BoundReport::loss_valued(BoundKind::KlInterpDisintegrated, raw)
        .with_train_loss(train_loss)
        .with_ecmi(per_supersample_ecmi.to_vec()))
}

/// Candidate (a, b) pairs scanned by the affine bound convenience wrapper.
pub const AFFINE_GRID: [(f64, f64); 4] = [(1.0, 0.0), (0.0, 1.0), (1.0, -1.0), (2.0, -1.0)];

/// Affine binary KL bound for one coefficient pair.
pub fn affine_kl_bound(
    train_loss: f64,
    avg_ecmi: f64,
    a: f64,
    b: f64,
) -> Result<BoundReport, BoundError> {
    let raw = divergence::invert_kl_affine(train_loss, avg_ecmi, a, b)?;
    let mut report = BoundReport::loss_valued(BoundKind::AffineKl, raw).with_train_loss(train_loss);
    report.intermediates.affine_pair = Some((a, b));
    Ok(report)
}

/// Scans the small (a, b) grid and returns the tightest affine bound, with
/// the winning pair recorded.
pub fn affine_kl_bound_grid(train_loss: f64, avg_ecmi: f64) -> Result<BoundReport, BoundError> {
    let mut best: Option<BoundReport> = None;
    for (a, b) in AFFINE_GRID {
        let report = affine_kl_bound(train_loss, avg_ecmi, a, b)?;
        match &best {
            Some(current) if current.value <= report.value => {}
            _ => best = Some(report),
        }
    }
    Ok(best.expect("grid is nonempty"))
}

/// Seeger-style mutual-information bound in the standard setting: inverts
/// `d(L_hat || p) <= (1/n) sum_i I(A(Z,R); Z_i)` with the plain (not
/// half-mixture) inversion.
pub fn mi_seeger_bound(train_loss: f64, per_index_mi: &[f64]) -> Result<BoundReport, BoundError> {
    check_nonneg(per_index_mi)?;
    let budget = per_index_mi.iter().sum::<f64>() / per_index_mi.len() as f64;
    let raw = divergence::invert_kl_standard(train_loss, budget)?;
    Ok(BoundReport::loss_valued(BoundKind::MiSeeger, raw)
        .with_train_loss(train_loss)
        .with_ecmi(per_index_mi.to_vec()))
}

/// High-probability square-root bound on the R-averaged test-minus-train gap:
/// `sqrt((2/(n-1)) (KL + ln(sqrt(n)/delta)))`, holding with probability at
/// least `1 - delta` over the supersample and selection draw.
pub fn highprob_sqrt_bound(kl: f64, n: u32, delta: f64) -> Result<f64, BoundError> {
    if n < 2 {
        return Err(BoundError::SampleSizeTooSmall { n });
    }
    check_delta(delta)?;
    if !(kl >= 0.0) {
        return Err(BoundError::NegativeInformation { value: kl });
    }
    let nf = n as f64;
    Ok((2.0 / (nf - 1.0) * (kl + (nf.sqrt() / delta).ln())).sqrt())
}

/// High-probability binary KL bound: inverts
/// `d(L_hat_R || .) <= (KL + ln(2 sqrt(n)/delta)) / n` through the
/// half-mixture inversion to bound the R-averaged test loss.
pub fn highprob_kl_bound(
    kl: f64,
    n: u32,
    delta: f64,
    train_loss_r: f64,
) -> Result<f64, BoundError> {
    if n < 2 {
        return Err(BoundError::SampleSizeTooSmall { n });
    }
    check_delta(delta)?;
    if !(kl >= 0.0) {
        return Err(BoundError::NegativeInformation { value: kl });
    }
    let nf = n as f64;
    let budget = (kl + (2.0 * nf.sqrt() / delta).ln()) / nf;
    Ok(divergence::invert_kl_half(train_loss_r, budget)?)
}

/// Single-draw bounds from the pointwise information density, which may be
/// negative; negative bracketed sums are floored at zero and flagged.
pub struct SingleDrawBounds {
    pub sqrt_value: f64,
    pub kl_value: f64,
    pub floored: bool,
}

pub fn single_draw_bounds(
    density: f64,
    n: u32,
    delta: f64,
    train_loss: f64,
) -> Result<SingleDrawBounds, BoundError> {
    if n < 2 {
        return Err(BoundError::SampleSizeTooSmall { n });
    }
    check_delta(delta)?;
    let nf = n as f64;
    let sqrt_sum = density + (nf.sqrt() / delta).ln();
    let kl_sum = density + (2.0 * nf.sqrt() / delta).ln();
    let floored = sqrt_sum < 0.0 || kl_sum < 0.0;
    let sqrt_value = (2.0 / (nf - 1.0) * sqrt_sum.max(0.0)).sqrt();
    let kl_value = divergence::invert_kl_half(train_loss, kl_sum.max(0.0) / nf)?;
    Ok(SingleDrawBounds {
        sqrt_value,
        kl_value,
        floored,
    })
}

fn binom_choose_2(labels: u32) -> f64 {
    labels as f64 * (labels as f64 - 1.0) / 2.0
}

/// Cap on the full-sample evaluated CMI for classes of finite Natarajan
/// dimension: `d_N ln(C(N,2) 2 e n / d_N)`.
pub fn natarajan_cmi_cap(spec: &NatarajanSpec) -> f64 {
    let d = spec.dimension() as f64;
    let n = spec.train_size() as f64;
    d * (binom_choose_2(spec.labels()) * 2.0 * std::f64::consts::E * n / d).ln()
}

/// Square-root gap bound from the Natarajan cap: `sqrt(2 cap / n)`.
pub fn natarajan_sqrt_bound(spec: &NatarajanSpec) -> f64 {
    (2.0 * natarajan_cmi_cap(spec) / spec.train_size() as f64).sqrt()
}

/// High-probability binary KL bound instantiated with the Natarajan cap:
/// inverts `(cap + ln(2/delta) + ln(4 sqrt(n)/delta)) / n` through the
/// half-mixture inversion.
pub fn natarajan_highprob_kl_bound(
    spec: &NatarajanSpec,
    delta: f64,
    train_loss_r: f64,
) -> Result<f64, BoundError> {
    check_delta(delta)?;
    let n = spec.train_size() as f64;
    let budget =
        (natarajan_cmi_cap(spec) + (2.0 / delta).ln() + (4.0 * n.sqrt() / delta).ln()) / n;
    Ok(divergence::invert_kl_half(train_loss_r, budget)?)
}

fn choose(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result * (n - i) as u128 / (i + 1) as u128;
    }
    result
}

/// Growth-function cap for Natarajan classes: the exact sum
/// `sum_{i <= d_N} C(m, i) C(N,2)^i` and its `(C(N,2) e m / d_N)^{d_N}` upper
/// bound, the latter valid for `m >= d_N + 1`.
pub fn growth_function_cap(d_n: u32, labels: u32, m: u32) -> (u128, f64) {
    let pairs = binom_choose_2(labels);
    let mut exact: u128 = 0;
    let mut pair_power: u128 = 1;
    for i in 0..=d_n.min(m) {
        exact += choose(m as u64, i as u64) * pair_power;
        pair_power *= pairs as u128;
    }
    let upper = if d_n == 0 {
        1.0
    } else {
        (pairs * std::f64::consts::E * m as f64 / d_n as f64).powi(d_n as i32)
    };
    (exact, upper)
}
