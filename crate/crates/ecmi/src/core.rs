//! Shared domain types and deterministic randomness plumbing.
//!
//! Loss tables are `n x 2` matrices over the unit interval: column 0 and
//! column 1 correspond to the two supersample columns. A membership vector
//! selects, per row, which column was trained on; its complement indexes the
//! held-out column. All types are immutable after construction and safe to
//! share across threads.
//!
//! Accumulations (loss averages) always run in row-major order so results are
//! bit-reproducible across runs and thread counts.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

/// Schema version stamped on every serialized artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Absolute tolerance for recomputed-vs-stored loss consistency checks.
pub const LOSS_RECOMPUTE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("loss {value} at row {row}, column {column} lies outside [0, 1]")]
    LossOutOfRange {
        row: usize,
        column: usize,
        value: f64,
    },
    #[error("loss table must have at least one row")]
    EmptyTable,
    #[error("membership entry {value} at index {index} is not 0 or 1")]
    BadMembershipBit { index: usize, value: u8 },
    #[error("dimension mismatch: loss table has {table_rows} rows, membership vector has {membership_len} entries")]
    DimensionMismatch {
        table_rows: usize,
        membership_len: usize,
    },
    #[error("draw {draw} has {rows} rows but the batch was declared with {expected}")]
    InconsistentRows {
        draw: usize,
        rows: usize,
        expected: usize,
    },
    #[error("draw {draw}: stored training loss {stored} differs from recomputed {recomputed} by more than {tol}")]
    TrainingLossMismatch {
        draw: usize,
        stored: f64,
        recomputed: f64,
        tol: f64,
    },
    #[error("batch declares k1={k1}, k2={k2} but carries {actual} draws")]
    DrawCountMismatch { k1: usize, k2: usize, actual: usize },
    #[error("unsupported schema version {found}, expected {expected}")]
    SchemaMismatch { found: u32, expected: u32 },
    #[error("Natarajan precondition violated: need 2n >= d_N + 1, got n={n}, d_N={d_n}")]
    NatarajanPrecondition { d_n: u32, n: u32 },
    #[error("Natarajan dimension must be positive and label count at least 2, got d_N={d_n}, N={labels}")]
    BadNatarajanSpec { d_n: u32, labels: u32 },
    #[error("gamma parameters must be positive, got ({gamma1}, {gamma2})")]
    NonPositiveGamma { gamma1: f64, gamma2: f64 },
    #[error("batch JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Deterministic random stream for one indexed trial.
///
/// The same `(master_seed, trial_index)` pair always yields an identical
/// stream; distinct indices select statistically independent ChaCha streams.
/// Trials can therefore be generated in parallel and still reproduce bit-exact
/// results when reduced in index order.
pub fn rng_stream(master_seed: u64, trial_index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// An `n x 2` matrix of per-example losses on a supersample, entries in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct LossTable {
    values: Vec<[f64; 2]>,
}

impl LossTable {
    pub fn new(values: Vec<[f64; 2]>) -> Result<Self, CoreError> {
        if values.is_empty() {
            return Err(CoreError::EmptyTable);
        }
        for (row, pair) in values.iter().enumerate() {
            for (column, &value) in pair.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                    return Err(CoreError::LossOutOfRange { row, column, value });
                }
            }
        }
        Ok(Self { values })
    }

    /// Number of supersample rows `n`.
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    /// Loss of row `i` in supersample column `column` (0 or 1).
    pub fn value(&self, i: usize, column: usize) -> f64 {
        self.values[i][column]
    }

    pub fn row(&self, i: usize) -> [f64; 2] {
        self.values[i]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64; 2]> {
        self.values.iter()
    }

    /// True when every entry is exactly 0.0 or 1.0.
    pub fn is_binary(&self) -> bool {
        self.values
            .iter()
            .all(|pair| pair.iter().all(|&v| v == 0.0 || v == 1.0))
    }
}

impl TryFrom<Vec<[f64; 2]>> for LossTable {
    type Error = CoreError;
    fn try_from(values: Vec<[f64; 2]>) -> Result<Self, CoreError> {
        LossTable::new(values)
    }
}

impl From<LossTable> for Vec<[f64; 2]> {
    fn from(table: LossTable) -> Self {
        table.values
    }
}

/// A vector of n train/test selections, one bit per supersample row.
///
/// Bit `s_i = 0` trains on column 0 of row `i`; the complement is derived,
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct MembershipVector {
    bits: Vec<u8>,
}

impl MembershipVector {
    pub fn new(bits: Vec<u8>) -> Result<Self, CoreError> {
        for (index, &value) in bits.iter().enumerate() {
            if value > 1 {
                return Err(CoreError::BadMembershipBit { index, value });
            }
        }
        Ok(Self { bits })
    }

    /// Builds the vector whose bit `i` is bit `i` of `mask` (row 0 = LSB).
    pub fn from_mask(mask: usize, len: usize) -> Self {
        Self {
            bits: (0..len).map(|i| ((mask >> i) & 1) as u8).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// The modulo-2 complement, selecting the held-out column per row.
    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|&b| 1 - b).collect(),
        }
    }
}

impl TryFrom<Vec<u8>> for MembershipVector {
    type Error = CoreError;
    fn try_from(bits: Vec<u8>) -> Result<Self, CoreError> {
        MembershipVector::new(bits)
    }
}

impl From<MembershipVector> for Vec<u8> {
    fn from(s: MembershipVector) -> Self {
        s.bits
    }
}

/// Average loss on the trained column and on the held-out column.
///
/// `train = (1/n) sum_i values[i, s_i]`, `test = (1/n) sum_i values[i, 1-s_i]`,
/// accumulated in row order.
pub fn split_losses(
    table: &LossTable,
    s: &MembershipVector,
) -> Result<(f64, f64), CoreError> {
    if table.rows() != s.len() {
        return Err(CoreError::DimensionMismatch {
            table_rows: table.rows(),
            membership_len: s.len(),
        });
    }
    let mut train = 0.0;
    let mut test = 0.0;
    for i in 0..table.rows() {
        let si = s.bit(i) as usize;
        train += table.value(i, si);
        test += table.value(i, 1 - si);
    }
    let n = table.rows() as f64;
    Ok((train / n, test / n))
}

/// Whether the batch's losses are 0/1 or continuous values to be binned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossGranularity {
    Binary,
    Continuous,
}

/// One (supersample-draw, selection-draw) outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialDraw {
    pub k1_idx: usize,
    pub k2_idx: usize,
    pub losses: LossTable,
    pub membership: MembershipVector,
    /// Integer seed id standing in for the algorithm randomness R.
    pub r_seed: u64,
    pub train_loss: f64,
    pub test_loss: f64,
    /// Exact population loss, when the generating simulator can compute it.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub population_loss: Option<f64>,
}

/// All draws of one experiment: `k1` supersample draws crossed with `k2`
/// (selection, randomness) draws each, in k1-major order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialBatch {
    pub schema: u32,
    pub k1: usize,
    pub k2: usize,
    /// Supersample row count n, shared by every draw.
    pub rows: usize,
    pub granularity: LossGranularity,
    /// Echo of the fully resolved generating config, when one exists.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config: Option<serde_json::Value>,
    pub draws: Vec<TrialDraw>,
}

impl TrialBatch {
    /// Validates shared dimensions and the stored-vs-recomputed training loss
    /// before accepting the draws.
    pub fn new(
        k1: usize,
        k2: usize,
        granularity: LossGranularity,
        draws: Vec<TrialDraw>,
    ) -> Result<Self, CoreError> {
        if draws.len() != k1 * k2 {
            return Err(CoreError::DrawCountMismatch {
                k1,
                k2,
                actual: draws.len(),
            });
        }
        let rows = draws.first().map(|d| d.losses.rows()).unwrap_or(0);
        for (idx, draw) in draws.iter().enumerate() {
            if draw.losses.rows() != rows {
                return Err(CoreError::InconsistentRows {
                    draw: idx,
                    rows: draw.losses.rows(),
                    expected: rows,
                });
            }
            let (train, _) = split_losses(&draw.losses, &draw.membership)?;
            if (train - draw.train_loss).abs() > LOSS_RECOMPUTE_TOL {
                return Err(CoreError::TrainingLossMismatch {
                    draw: idx,
                    stored: draw.train_loss,
                    recomputed: train,
                    tol: LOSS_RECOMPUTE_TOL,
                });
            }
        }
        Ok(Self {
            schema: SCHEMA_VERSION,
            k1,
            k2,
            rows,
            granularity,
            config: None,
            draws,
        })
    }

    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = Some(config);
        self
    }

    pub fn draw(&self, k1_idx: usize, k2_idx: usize) -> &TrialDraw {
        &self.draws[k1_idx * self.k2 + k2_idx]
    }

    /// Draws belonging to one supersample, in k2 order.
    pub fn supersample_draws(&self, k1_idx: usize) -> &[TrialDraw] {
        &self.draws[k1_idx * self.k2..(k1_idx + 1) * self.k2]
    }

    pub fn to_json(&self) -> Result<String, CoreError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, CoreError> {
        let batch: TrialBatch = serde_json::from_str(text)?;
        if batch.schema != SCHEMA_VERSION {
            return Err(CoreError::SchemaMismatch {
                found: batch.schema,
                expected: SCHEMA_VERSION,
            });
        }
        // Re-run the construction checks on deserialized data.
        let mut checked = TrialBatch::new(batch.k1, batch.k2, batch.granularity, batch.draws)?;
        checked.config = batch.config;
        Ok(checked)
    }

    /// Compact CSV: one row per (draw, supersample index).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# ecmi trial batch, schema={}", self.schema)?;
        writeln!(w, "k1_idx,k2_idx,i,loss0,loss1,s_i,r_seed")?;
        for draw in &self.draws {
            for i in 0..self.rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    draw.k1_idx,
                    draw.k2_idx,
                    i,
                    draw.losses.value(i, 0),
                    draw.losses.value(i, 1),
                    draw.membership.bit(i),
                    draw.r_seed
                )?;
            }
        }
        Ok(())
    }
}

/// Names of the bound families the toolkit can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    SqrtIntegrated,
    SqrtDisintegrated,
    Squared,
    RConditionedSqrt,
    Linear,
    Interpolation,
    BinaryKl,
    BinaryKlDisintegrated,
    KlInterpDisintegrated,
    AffineKl,
    MiSeeger,
    HighProbSqrt,
    HighProbKl,
    SingleDrawSqrt,
    SingleDrawKl,
    NatarajanSqrt,
    NatarajanHighProbKl,
}

impl BoundKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundKind::SqrtIntegrated => "sqrt_integrated",
            BoundKind::SqrtDisintegrated => "sqrt_disintegrated",
            BoundKind::Squared => "squared",
            BoundKind::RConditionedSqrt => "r_conditioned_sqrt",
            BoundKind::Linear => "linear",
            BoundKind::Interpolation => "interpolation",
            BoundKind::BinaryKl => "binary_kl",
            BoundKind::BinaryKlDisintegrated => "binary_kl_disintegrated",
            BoundKind::KlInterpDisintegrated => "kl_interp_disintegrated",
            BoundKind::AffineKl => "affine_kl",
            BoundKind::MiSeeger => "mi_seeger",
            BoundKind::HighProbSqrt => "high_prob_sqrt",
            BoundKind::HighProbKl => "high_prob_kl",
            BoundKind::SingleDrawSqrt => "single_draw_sqrt",
            BoundKind::SingleDrawKl => "single_draw_kl",
            BoundKind::NatarajanSqrt => "natarajan_sqrt",
            BoundKind::NatarajanHighProbKl => "natarajan_high_prob_kl",
        }
    }
}

/// Intermediate quantities recorded alongside a bound value.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BoundIntermediates {
    /// Bound value before clamping loss-valued results into [0, 1].
    pub raw_value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_index_ecmi_nats: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub train_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub train_loss_se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gap_se: Option<f64>,
    /// Jackknife standard error of the bound value over supersample draws.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value_se: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub affine_pair: Option<(f64, f64)>,
    /// Set when the reported value cannot say anything (exceeds the trivial
    /// bound for its range).
    #[serde(default)]
    pub vacuous: bool,
    /// Set when a negative information density was floored at zero.
    #[serde(default)]
    pub floored_negative: bool,
    /// Set when the information quantity came from a biased sampled-mode
    /// estimator.
    #[serde(default)]
    pub biased_estimate: bool,
}

/// One bound's value with validity flags and supporting quantities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: BoundKind,
    /// Loss-valued bounds are clamped into [0, 1]; the raw value is kept in
    /// the intermediates.
    pub value: f64,
    /// False when a precondition fails (e.g. interpolation with nonzero
    /// training loss); `value` is meaningless in that case.
    pub applicable: bool,
    pub intermediates: BoundIntermediates,
}

impl BoundReport {
    /// A loss-valued report: value clamped to [0, 1], raw retained.
    pub fn loss_valued(name: BoundKind, raw: f64) -> Self {
        BoundReport {
            name,
            value: raw.clamp(0.0, 1.0),
            applicable: true,
            intermediates: BoundIntermediates {
                raw_value: raw,
                vacuous: raw >= 1.0,
                ..Default::default()
            },
        }
    }

    pub fn inapplicable(name: BoundKind) -> Self {
        BoundReport {
            name,
            value: f64::NAN,
            applicable: false,
            intermediates: BoundIntermediates::default(),
        }
    }

    pub fn with_ecmi(mut self, per_index: Vec<f64>) -> Self {
        self.intermediates.per_index_ecmi_nats = Some(per_index);
        self
    }

    pub fn with_train_loss(mut self, train_loss: f64) -> Self {
        self.intermediates.train_loss = Some(train_loss);
        self
    }

    pub fn with_gamma(mut self, gamma1: f64, gamma2: f64) -> Self {
        self.intermediates.gamma = Some((gamma1, gamma2));
        self
    }
}

/// Parameters of the complexity-based bound instantiations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NatarajanSpec {
    d_n: u32,
    labels: u32,
    n: u32,
}

impl NatarajanSpec {
    /// Requires `d_N >= 1`, `N >= 2`, and `2n >= d_N + 1`.
    pub fn new(d_n: u32, labels: u32, n: u32) -> Result<Self, CoreError> {
        if d_n == 0 || labels < 2 {
            return Err(CoreError::BadNatarajanSpec { d_n, labels });
        }
        if 2 * n < d_n + 1 {
            return Err(CoreError::NatarajanPrecondition { d_n, n });
        }
        Ok(Self { d_n, labels, n })
    }

    pub fn dimension(&self) -> u32 {
        self.d_n
    }

    pub fn labels(&self) -> u32 {
        self.labels
    }

    pub fn train_size(&self) -> u32 {
        self.n
    }
}

/// A candidate parameter pair for the linear bound, constrained to the
/// positive quadrant. Feasibility with respect to the concentration
/// constraint is checked separately by `divergence::gamma_feasible`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPair {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl GammaPair {
    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self, CoreError> {
        if !(gamma1 > 0.0 && gamma2 > 0.0) || !gamma1.is_finite() || !gamma2.is_finite() {
            return Err(CoreError::NonPositiveGamma { gamma1, gamma2 });
        }
        Ok(Self { gamma1, gamma2 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn rng_stream_is_deterministic() {
        let a: Vec<u64> = {
            let mut rng = rng_stream(42, 0);
            (0..100).map(|_| rng.gen()).collect()
        };
        let b: Vec<u64> = {
            let mut rng = rng_stream(42, 0);
            (0..100).map(|_| rng.gen()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn rng_streams_differ_across_indices() {
        let mut r0 = rng_stream(42, 0);
        let mut r1 = rng_stream(42, 1);
        let a: u64 = r0.gen();
        let b: u64 = r1.gen();
        assert_ne!(a, b);
    }

    #[test]
    fn rng_stream_golden_first_draw() {
        // Recorded once from ChaCha12 with seed_from_u64(7), stream 3.
        let mut rng = rng_stream(7, 3);
        let value: f64 = rng.gen();
        assert!(
            (value - 0.10377399441234325).abs() < 1e-15,
            "golden uniform changed: {value}"
        );
    }

    #[test]
    fn split_losses_picks_columns() {
        let table = LossTable::new(vec![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        // s = (0, 0) trains on column 0 of both rows: (0 + 1)/2 each way.
        let s = MembershipVector::new(vec![0, 0]).unwrap();
        assert_eq!(split_losses(&table, &s).unwrap(), (0.5, 0.5));
        // s = (0, 1) picks the zero entry of each row.
        let s = MembershipVector::new(vec![0, 1]).unwrap();
        assert_eq!(split_losses(&table, &s).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn split_losses_hand_sum() {
        let table = LossTable::new(vec![[0.2, 0.4], [0.6, 0.8]]).unwrap();
        let s = MembershipVector::new(vec![1, 0]).unwrap();
        let (train, test) = split_losses(&table, &s).unwrap();
        assert!((train - 0.5).abs() < 1e-15);
        assert!((test - 0.5).abs() < 1e-15);
    }

    #[test]
    fn split_losses_length_mismatch() {
        let table = LossTable::new(vec![[0.0, 1.0]]).unwrap();
        let s = MembershipVector::new(vec![0, 1]).unwrap();
        assert!(matches!(
            split_losses(&table, &s),
            Err(CoreError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn swap_symmetry_train_equals_complement_test() {
        let mut rng = rng_stream(11, 0);
        for _ in 0..50 {
            let n = rng.gen_range(1..12);
            let table = LossTable::new(
                (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect(),
            )
            .unwrap();
            let s = MembershipVector::new((0..n).map(|_| rng.gen_range(0..2u8)).collect())
                .unwrap();
            let (train, test) = split_losses(&table, &s).unwrap();
            let (train_c, test_c) = split_losses(&table, &s.complement()).unwrap();
            assert_eq!(train, test_c);
            assert_eq!(test, train_c);
        }
    }

    #[test]
    fn equal_columns_make_train_equal_test() {
        let table = LossTable::new(vec![[0.3, 0.3], [0.9, 0.9], [0.0, 0.0]]).unwrap();
        for mask in 0..8 {
            let s = MembershipVector::from_mask(mask, 3);
            let (train, test) = split_losses(&table, &s).unwrap();
            assert_eq!(train, test);
        }
    }

    #[test]
    fn loss_table_rejects_out_of_range() {
        assert!(matches!(
            LossTable::new(vec![[0.5, 1.2]]),
            Err(CoreError::LossOutOfRange { row: 0, column: 1, .. })
        ));
        assert!(matches!(
            LossTable::new(vec![[-0.1, 0.0]]),
            Err(CoreError::LossOutOfRange { .. })
        ));
    }

    #[test]
    fn membership_rejects_non_bits() {
        assert!(matches!(
            MembershipVector::new(vec![0, 2]),
            Err(CoreError::BadMembershipBit { index: 1, value: 2 })
        ));
    }

    fn tiny_batch() -> TrialBatch {
        let table = LossTable::new(vec![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let s = MembershipVector::new(vec![0, 1]).unwrap();
        let (train, test) = split_losses(&table, &s).unwrap();
        let draw = |k1, k2| TrialDraw {
            k1_idx: k1,
            k2_idx: k2,
            losses: table.clone(),
            membership: s.clone(),
            r_seed: 0,
            train_loss: train,
            test_loss: test,
            population_loss: Some(0.5),
        };
        TrialBatch::new(
            1,
            2,
            LossGranularity::Binary,
            vec![draw(0, 0), draw(0, 1)],
        )
        .unwrap()
    }

    #[test]
    fn batch_json_round_trip() {
        let batch = tiny_batch();
        let json = batch.to_json().unwrap();
        let back = TrialBatch::from_json(&json).unwrap();
        assert_eq!(back.rows, 2);
        assert_eq!(back.draws.len(), 2);
        assert_eq!(back.draw(0, 1).train_loss, batch.draw(0, 1).train_loss);
    }

    #[test]
    fn batch_rejects_inconsistent_train_loss() {
        let mut batch = tiny_batch();
        batch.draws[0].train_loss += 1e-6;
        let err = TrialBatch::new(1, 2, LossGranularity::Binary, batch.draws);
        assert!(matches!(err, Err(CoreError::TrainingLossMismatch { .. })));
    }

    #[test]
    fn batch_csv_layout() {
        let batch = tiny_batch();
        let mut buf = Vec::new();
        batch.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# ecmi trial batch, schema=1"));
        assert_eq!(lines.next().unwrap(), "k1_idx,k2_idx,i,loss0,loss1,s_i,r_seed");
        assert_eq!(lines.next().unwrap(), "0,0,0,0,1,0,0");
        assert_eq!(lines.next().unwrap(), "0,0,1,1,0,1,0");
    }

    #[test]
    fn natarajan_spec_precondition() {
        assert!(NatarajanSpec::new(1, 2, 1000).is_ok());
        // 2n < d_N + 1
        assert!(matches!(
            NatarajanSpec::new(5, 2, 2),
            Err(CoreError::NatarajanPrecondition { .. })
        ));
        assert!(NatarajanSpec::new(0, 2, 10).is_err());
        assert!(NatarajanSpec::new(1, 1, 10).is_err());
    }

    #[test]
    fn gamma_pair_requires_positive_entries() {
        assert!(GammaPair::new(0.1, 1.5).is_ok());
        assert!(GammaPair::new(0.0, 1.0).is_err());
        assert!(GammaPair::new(0.1, -1.0).is_err());
    }
}
