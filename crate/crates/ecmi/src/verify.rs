//! Independent numerical verification of the concentration inequalities the
//! bounds rest on: exact enumeration where the outcome space is small enough,
//! Monte Carlo with reported standard errors otherwise.
//!
//! Slack policy: exact checks allow 1e-12 absolute slack (the statements are
//! `<= 1` inequalities, so only upward violations matter); Monte Carlo checks
//! allow three standard errors.

use crate::bounds;
use crate::core::{rng_stream, GammaPair, MembershipVector};
use crate::divergence::{binary_kl, d_gamma, gamma_feasible};
use crate::simulate::{self, SimConfig};
use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// Absolute slack for exact-mode checks.
pub const EXACT_SLACK: f64 = 1e-12;

/// Stream-index offset separating coverage draws from experiment draws.
const COVERAGE_STREAM_OFFSET: u64 = 1 << 40;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("exact mode supports n <= {max}, got n={n}")]
    TooLargeForExact { n: usize, max: usize },
    #[error("means must lie in [0, 1], got {value}")]
    MeanOutOfRange { value: f64 },
    #[error("gamma must be positive, got {gamma}")]
    NonPositiveGamma { gamma: f64 },
    #[error("Monte Carlo mode needs at least {needed} draws, got {got}")]
    TooFewMcDraws { needed: usize, got: usize },
    #[error(transparent)]
    Sim(#[from] simulate::SimError),
    #[error(transparent)]
    Bound(#[from] bounds::BoundError),
}

/// One check's verdict, serializable into the verification report.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub inputs: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckOutcome {
    fn upper(name: impl Into<String>, inputs: String, statistic: f64, threshold: f64) -> Self {
        CheckOutcome {
            name: name.into(),
            inputs,
            statistic,
            threshold,
            pass: statistic <= threshold,
        }
    }
}

/// How a concentration expectation is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum CheckMode {
    /// Enumerate all outcomes with product weights; Bernoulli coordinates
    /// only, n at most 20.
    Exact,
    /// Average over at least this many random draws of bounded variables
    /// (Bernoulli and Beta coordinates alternate); pass allows 3 standard
    /// errors of slack.
    MonteCarlo { draws: usize },
}

/// Checks `E[exp(n d_gamma(mu_hat || mu_bar))] <= 1` for independent bounded
/// coordinates with the given means.
pub fn check_mcallester(
    means: &[f64],
    gamma: f64,
    mode: CheckMode,
) -> Result<CheckOutcome, VerifyError> {
    if !(gamma > 0.0) {
        return Err(VerifyError::NonPositiveGamma { gamma });
    }
    for &m in means {
        if !(0.0..=1.0).contains(&m) {
            return Err(VerifyError::MeanOutOfRange { value: m });
        }
    }
    let n = means.len();
    let mu_bar = means.iter().sum::<f64>() / n as f64;
    let inputs = format!("means={means:?}, gamma={gamma}");
    match mode {
        CheckMode::Exact => {
            if n > 20 {
                return Err(VerifyError::TooLargeForExact { n, max: 20 });
            }
            let mut expectation = 0.0;
            for outcome in 0u64..(1 << n) {
                let mut probability = 1.0;
                let mut sum = 0.0;
                for (i, &mean) in means.iter().enumerate() {
                    if (outcome >> i) & 1 == 1 {
                        probability *= mean;
                        sum += 1.0;
                    } else {
                        probability *= 1.0 - mean;
                    }
                }
                if probability == 0.0 {
                    continue;
                }
                let mu_hat = sum / n as f64;
                let exponent = n as f64 * d_gamma(mu_hat, mu_bar, gamma).expect("means in range");
                expectation += probability * exponent.exp();
            }
            Ok(CheckOutcome::upper(
                "mcallester_exact",
                inputs,
                expectation,
                1.0 + EXACT_SLACK,
            ))
        }
        CheckMode::MonteCarlo { draws } => {
            if draws < 1_000_000 {
                return Err(VerifyError::TooFewMcDraws {
                    needed: 1_000_000,
                    got: draws,
                });
            }
            // Alternate Bernoulli and Beta coordinates with the requested
            // means; Beta(2m, 2(1-m)) has mean m and support [0, 1].
            let chunks: Vec<(f64, f64)> = (0..rayon::current_num_threads().max(1))
                .into_par_iter()
                .map(|chunk| {
                    let mut rng = rng_stream(0x4d43_4d43, chunk as u64);
                    let per_chunk = draws / rayon::current_num_threads().max(1) + 1;
                    let mut sum = 0.0;
                    let mut sum_sq = 0.0;
                    for _ in 0..per_chunk {
                        let mut total = 0.0;
                        for (i, &mean) in means.iter().enumerate() {
                            let x = if i % 2 == 0 {
                                if rng.gen::<f64>() < mean {
                                    1.0
                                } else {
                                    0.0
                                }
                            } else if mean == 0.0 || mean == 1.0 {
                                mean
                            } else {
                                let beta = Beta::new(2.0 * mean, 2.0 * (1.0 - mean))
                                    .expect("parameters positive");
                                beta.sample(&mut rng)
                            };
                            total += x;
                        }
                        let mu_hat = total / n as f64;
                        let value = (n as f64
                            * d_gamma(mu_hat, mu_bar, gamma).expect("in range"))
                        .exp();
                        sum += value;
                        sum_sq += value * value;
                    }
                    (sum, sum_sq)
                })
                .collect();
            let per_chunk = draws / rayon::current_num_threads().max(1) + 1;
            let count = (chunks.len() * per_chunk) as f64;
            let sum: f64 = chunks.iter().map(|c| c.0).sum();
            let sum_sq: f64 = chunks.iter().map(|c| c.1).sum();
            let mean = sum / count;
            let variance = (sum_sq / count - mean * mean).max(0.0);
            let se = (variance / count).sqrt();
            Ok(CheckOutcome::upper(
                "mcallester_mc",
                inputs,
                mean,
                1.0 + 3.0 * se,
            ))
        }
    }
}

/// Exact lower-bound check `E[exp(n d(mu_hat || 1/2))] >= sqrt(n)` for a
/// Binomial(n, 1/2) coordinate sum: the reason the supremum over gamma must
/// stay outside the expectation.
pub fn check_maurer_lower(n: u32) -> Result<CheckOutcome, VerifyError> {
    if n > 30 {
        return Err(VerifyError::TooLargeForExact {
            n: n as usize,
            max: 30,
        });
    }
    let nf = n as f64;
    let mut expectation = 0.0;
    let mut binom: f64 = 1.0;
    for k in 0..=n {
        let mu_hat = k as f64 / nf;
        let weight = binom * 0.5f64.powi(n as i32);
        expectation += weight * (nf * binary_kl(mu_hat, 0.5).expect("in range")).exp();
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    let threshold = nf.sqrt();
    Ok(CheckOutcome {
        name: "maurer_lower".into(),
        inputs: format!("n={n}"),
        statistic: expectation,
        threshold,
        pass: expectation >= threshold,
    })
}

/// Exact two-outcome check `E[exp(gamma1 (X - gamma2 Xbar))] <= 1` for X
/// uniform on {a, b} with complement Xbar = a + b - X, for feasible gamma.
/// Infeasible pairs are reported with a vacuous pass, so sharpness searches
/// can inspect the raw statistic.
pub fn check_steinke_mgf(a: f64, b: f64, gamma: &GammaPair) -> Result<CheckOutcome, VerifyError> {
    for value in [a, b] {
        if !(0.0..=1.0).contains(&value) {
            return Err(VerifyError::MeanOutOfRange { value });
        }
    }
    let value = 0.5
        * ((gamma.gamma1 * (a - gamma.gamma2 * b)).exp()
            + (gamma.gamma1 * (b - gamma.gamma2 * a)).exp());
    let feasible = gamma_feasible(gamma);
    Ok(CheckOutcome {
        name: "steinke_mgf".into(),
        inputs: format!("a={a}, b={b}, gamma=({}, {})", gamma.gamma1, gamma.gamma2),
        statistic: value,
        threshold: 1.0 + EXACT_SLACK,
        pass: !feasible || value <= 1.0 + EXACT_SLACK,
    })
}

/// Limit form of the interpolation concentration:
/// `(e^{b ln 2} + e^{-b gamma ln 2}) / 2 <= 1` for large gamma when the
/// trained coordinate is zero.
pub fn check_interp_mgf(b: f64, gamma_large: f64) -> Result<CheckOutcome, VerifyError> {
    if !(0.0..=1.0).contains(&b) {
        return Err(VerifyError::MeanOutOfRange { value: b });
    }
    let ln2 = std::f64::consts::LN_2;
    let value = 0.5 * ((b * ln2).exp() + (-b * gamma_large * ln2).exp());
    Ok(CheckOutcome::upper(
        "interp_mgf",
        format!("b={b}, gamma={gamma_large}"),
        value,
        1.0 + 1e-9,
    ))
}

/// Exact sub-Gaussian MGF check for the signed mean of m bounded coordinate
/// differences: `E[exp(gamma Delta)] <= exp(gamma^2 / (2m))` with Delta the
/// mean of m independent uniformly-signed terms `(pair[1] - pair[0])`.
pub fn check_subgauss_mgf(pairs: &[[f64; 2]], gamma: f64) -> Result<CheckOutcome, VerifyError> {
    let m = pairs.len();
    if m == 0 || m > 16 {
        return Err(VerifyError::TooLargeForExact { n: m, max: 16 });
    }
    for pair in pairs {
        for &value in pair {
            if !(0.0..=1.0).contains(&value) {
                return Err(VerifyError::MeanOutOfRange { value });
            }
        }
    }
    let mut expectation = 0.0;
    for signs in 0u64..(1 << m) {
        let mut delta = 0.0;
        for (i, pair) in pairs.iter().enumerate() {
            let difference = pair[1] - pair[0];
            delta += if (signs >> i) & 1 == 1 {
                difference
            } else {
                -difference
            };
        }
        delta /= m as f64;
        expectation += (gamma * delta).exp();
    }
    expectation /= (1u64 << m) as f64;
    let threshold = (gamma * gamma / (2.0 * m as f64)).exp();
    Ok(CheckOutcome::upper(
        "subgauss_mgf",
        format!("m={m}, gamma={gamma}"),
        expectation,
        threshold + EXACT_SLACK,
    ))
}

/// Which high-probability bound a coverage test exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HighProbBound {
    /// R-averaged square-root bound on the test-minus-train gap.
    Sqrt,
    /// R-averaged binary KL inequality.
    Kl,
    /// Single-draw square-root bound from the information density.
    SingleDrawSqrt,
    /// Single-draw binary KL inequality from the information density.
    SingleDrawKl,
}

/// Result of an empirical coverage measurement.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageOutcome {
    pub bound: HighProbBound,
    pub delta: f64,
    pub trials: usize,
    pub violations: usize,
    pub rate: f64,
    /// Acceptance threshold `delta + 3 sqrt(delta (1-delta) / trials)`.
    pub threshold: f64,
    pub pass: bool,
}

/// Measures how often a high-probability bound is violated over fresh
/// (supersample, selection[, randomness]) draws with exact-mode information
/// quantities.
pub fn coverage_test(
    bound: HighProbBound,
    config: &SimConfig,
    delta: f64,
    trials: usize,
) -> Result<CoverageOutcome, VerifyError> {
    config.validate()?;
    let class = simulate::class_for(config);
    let n = config.rows as u32;
    let violations: usize = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_stream(
                config.master_seed,
                COVERAGE_STREAM_OFFSET + trial as u64,
            );
            let supersample = simulate::draw_supersample(config, &mut rng);
            let bits: Vec<u8> = (0..config.rows).map(|_| rng.gen_range(0..2u8)).collect();
            let s = MembershipVector::new(bits).expect("bits are 0/1");
            let law = simulate::table_law_for(config, &class, &supersample)
                .expect("row count validated");
            let violated = match bound {
                HighProbBound::Sqrt | HighProbBound::Kl => {
                    // Average the losses over the uniform randomness seeds.
                    let mut train = 0.0;
                    let mut test = 0.0;
                    for r in 0..config.r_count {
                        let outcome =
                            simulate::outcome_for(config, &class, &supersample, &s, r);
                        train += outcome.train;
                        test += outcome.test;
                    }
                    train /= config.r_count as f64;
                    test /= config.r_count as f64;
                    let kl = law.kl_given_s(&s).expect("dimensions match");
                    match bound {
                        HighProbBound::Sqrt => {
                            let rhs = bounds::highprob_sqrt_bound(kl, n, delta)
                                .expect("validated inputs");
                            test - train > rhs
                        }
                        HighProbBound::Kl => {
                            let lhs = binary_kl(train, (train + test) / 2.0)
                                .expect("losses in range");
                            let nf = n as f64;
                            lhs > (kl + (2.0 * nf.sqrt() / delta).ln()) / nf
                        }
                        _ => unreachable!(),
                    }
                }
                HighProbBound::SingleDrawSqrt | HighProbBound::SingleDrawKl => {
                    let r = rng.gen_range(0..config.r_count);
                    let outcome = simulate::outcome_for(config, &class, &supersample, &s, r);
                    let density = law
                        .information_density(&s, &outcome.key)
                        .expect("observed table has positive law mass");
                    let nf = n as f64;
                    match bound {
                        HighProbBound::SingleDrawSqrt => {
                            let sum = (density + (nf.sqrt() / delta).ln()).max(0.0);
                            let rhs = (2.0 / (nf - 1.0) * sum).sqrt();
                            outcome.test - outcome.train > rhs
                        }
                        HighProbBound::SingleDrawKl => {
                            let lhs = binary_kl(
                                outcome.train,
                                (outcome.train + outcome.test) / 2.0,
                            )
                            .expect("losses in range");
                            lhs > (density + (2.0 * nf.sqrt() / delta).ln()).max(0.0) / nf
                        }
                        _ => unreachable!(),
                    }
                }
            };
            usize::from(violated)
        })
        .sum();
    let rate = violations as f64 / trials as f64;
    let threshold = delta + 3.0 * (delta * (1.0 - delta) / trials as f64).sqrt();
    Ok(CoverageOutcome {
        bound,
        delta,
        trials,
        violations,
        rate,
        threshold,
        pass: rate <= threshold,
    })
}

/// Canonical feasible gamma pairs: for gamma1 on a grid up to the feasible
/// endpoint, the vertex of the constraint parabola in gamma2.
pub fn feasible_gamma_pairs(count: usize) -> Vec<GammaPair> {
    let top = crate::divergence::optimal_interp_gamma();
    (0..count)
        .map(|k| {
            let t = (k as f64 + 0.5) / count as f64;
            let gamma1 = (0.01f64.ln() + t * (top.ln() - 0.01f64.ln())).exp();
            let a = gamma1.exp() - 1.0 - gamma1;
            let gamma2 = gamma1 / (2.0 * a);
            GammaPair { gamma1, gamma2 }
        })
        .filter(gamma_feasible)
        .collect()
}

/// The default verification battery run by the `verify` subcommand.
pub fn default_suite(coverage_trials: usize) -> Result<Vec<CheckOutcome>, VerifyError> {
    let mut outcomes = Vec::new();

    for n in 2..=30 {
        outcomes.push(check_maurer_lower(n)?);
    }

    let mut rng = rng_stream(0x5645_5249, 0);
    for case in 0..20 {
        let n = rng.gen_range(2..=10);
        let means: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        for gamma in [0.5, 1.0, 2.0, 4.0] {
            let mut outcome = check_mcallester(&means, gamma, CheckMode::Exact)?;
            outcome.name = format!("mcallester_exact_{case}");
            outcomes.push(outcome);
        }
    }
    outcomes.push(check_mcallester(
        &[0.1, 0.35, 0.5, 0.62, 0.9, 0.05, 0.77, 0.41, 0.28, 0.66],
        2.0,
        CheckMode::MonteCarlo { draws: 1_000_000 },
    )?);

    for pair in feasible_gamma_pairs(5) {
        for grid in 0..10 {
            let a = grid as f64 / 9.0;
            let b = 1.0 - a;
            outcomes.push(check_steinke_mgf(a, b, &pair)?);
        }
    }

    for k in 0..=10 {
        outcomes.push(check_interp_mgf(k as f64 / 10.0, 1e6)?);
    }

    let mut rng = rng_stream(0x5645_5249, 1);
    for m in [1usize, 2, 4, 8] {
        let pairs: Vec<[f64; 2]> = (0..m).map(|_| [rng.gen(), rng.gen()]).collect();
        for gamma in [-4.0, -1.0, 1.0, 4.0] {
            outcomes.push(check_subgauss_mgf(&pairs, gamma)?);
        }
    }

    if coverage_trials > 0 {
        let config = SimConfig {
            domain_size: 8,
            label_count: 2,
            noise_rate: 0.0,
            corruption_rate: 0.0,
            learner: simulate::LearnerKind::Memorizer,
            rows: 10,
            supersample_draws: 1,
            selection_draws: 2,
            bins: None,
            master_seed: 7,
            r_count: 1,
            gibbs_beta: simulate::DEFAULT_GIBBS_BETA,
            breakpoints: None,
        };
        for bound in [HighProbBound::Sqrt, HighProbBound::Kl] {
            let coverage = coverage_test(bound, &config, 0.2, coverage_trials)?;
            outcomes.push(CheckOutcome {
                name: format!("coverage_{:?}", bound).to_lowercase(),
                inputs: format!("delta=0.2, trials={coverage_trials}"),
                statistic: coverage.rate,
                threshold: coverage.threshold,
                pass: coverage.pass,
            });
        }
    }

    Ok(outcomes)
}
