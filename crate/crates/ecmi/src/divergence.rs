//! Binary KL divergence, its parametric lower bound, and the non-standard
//! inversions used by the bounds.
//!
//! All divergences are in nats. Probabilities are clamped away from 0 and 1
//! only inside logarithms, never in returned arguments, so exact endpoint
//! conventions (`0 ln 0 = 0`, division by zero giving infinity) survive.

use crate::core::{CoreError, GammaPair};
use std::sync::OnceLock;
use thiserror::Error;

/// Absolute argument tolerance for every bisection in this module.
pub const BISECTION_TOL: f64 = 1e-10;

/// Slack allowed when testing the linear-bound feasibility constraint.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// Grid resolution for the affine inversion scan.
const AFFINE_SCAN_POINTS: usize = 4096;

/// Log-spaced gamma1 grid size for the linear-bound optimizer.
const LINEAR_GAMMA_POINTS: usize = 2048;

#[derive(Debug, Error)]
pub enum DivergenceError {
    #[error("probability argument {value} lies outside [0, 1]")]
    OutOfRange { value: f64 },
    #[error("divergence budget must be nonnegative, got {value}")]
    NegativeBudget { value: f64 },
    #[error("affine coefficients (a, b) must not both be zero")]
    DegenerateAffine,
    #[error(transparent)]
    Core(#[from] CoreError),
}

fn check_unit(value: f64) -> Result<(), DivergenceError> {
    if !(0.0..=1.0).contains(&value) || !value.is_finite() {
        return Err(DivergenceError::OutOfRange { value });
    }
    Ok(())
}

/// ln with the argument clamped away from zero; used only inside divergence
/// formulas where the 0 ln 0 convention has already been applied.
fn safe_ln(x: f64) -> f64 {
    x.max(1e-300).ln()
}

/// Binary KL divergence `d(q || p)` between Bernoulli(q) and Bernoulli(p).
///
/// Uses the `0 ln 0 = 0` convention; returns infinity when `p` is 0 or 1 while
/// `q` disagrees.
pub fn binary_kl(q: f64, p: f64) -> Result<f64, DivergenceError> {
    check_unit(q)?;
    check_unit(p)?;
    let mut total = 0.0;
    if q > 0.0 {
        if p == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += q * (q / p).ln();
    }
    if q < 1.0 {
        if p == 1.0 {
            return Ok(f64::INFINITY);
        }
        total += (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln();
    }
    Ok(total.max(0.0))
}

/// Parametric lower bound `d_gamma(q || p) = gamma q - ln(1 - p + p e^gamma)`.
///
/// Its supremum over gamma recovers `binary_kl(q, p)`.
pub fn d_gamma(q: f64, p: f64, gamma: f64) -> Result<f64, DivergenceError> {
    check_unit(q)?;
    check_unit(p)?;
    Ok(gamma * q - safe_ln(1.0 - p + p * gamma.exp()))
}

/// Supremum of `d_gamma(q, p, .)` over a bounded gamma range.
///
/// The map is concave in gamma, so golden-section search converges; the
/// search range [-50, 50] covers the maximizer for all q, p in (0, 1).
pub fn binary_kl_sup_gamma(q: f64, p: f64) -> Result<f64, DivergenceError> {
    check_unit(q)?;
    check_unit(p)?;
    let f = |g: f64| d_gamma(q, p, g).expect("arguments already validated");
    let (mut lo, mut hi) = (-50.0_f64, 50.0_f64);
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    Ok(f(0.5 * (lo + hi)))
}

/// Half-mixture inversion: the largest `p` in [0, 1] with
/// `d(q || (q + p)/2) <= c`.
///
/// The constraint map is zero at `p = q` and nondecreasing on [q, 1], so
/// bisection on that interval finds the boundary. Returns 1 when even `p = 1`
/// satisfies the constraint.
pub fn invert_kl_half(q: f64, c: f64) -> Result<f64, DivergenceError> {
    check_unit(q)?;
    if !(c >= 0.0) {
        return Err(DivergenceError::NegativeBudget { value: c });
    }
    if c == 0.0 {
        // A zero budget pins the mixture to q. Handled up front because the
        // divergence evaluation cancels catastrophically for p within ~1e-9
        // of q and can round to zero there.
        return Ok(q);
    }
    let constraint = |p: f64| binary_kl(q, (q + p) / 2.0).expect("validated");
    if constraint(1.0) <= c {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (q, 1.0);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if constraint(mid) <= c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Standard Seeger-style inversion: the largest `p` in [q, 1] with
/// `d(q || p) <= c`.
pub fn invert_kl_standard(q: f64, c: f64) -> Result<f64, DivergenceError> {
    check_unit(q)?;
    if !(c >= 0.0) {
        return Err(DivergenceError::NegativeBudget { value: c });
    }
    if c == 0.0 {
        return Ok(q);
    }
    let constraint = |p: f64| binary_kl(q, p).expect("validated");
    if constraint(1.0) <= c {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (q, 1.0);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if constraint(mid) <= c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Affine reparameterization
/// `g_ab(x, y) = (a x + b y - min(a, b, a + b, 0)) / (|a| + |b|)`,
/// mapping the unit square into [0, 1].
pub fn g_ab(x: f64, y: f64, a: f64, b: f64) -> Result<f64, DivergenceError> {
    check_unit(x)?;
    check_unit(y)?;
    if a == 0.0 && b == 0.0 {
        return Err(DivergenceError::DegenerateAffine);
    }
    let shift = a.min(b).min(a + b).min(0.0);
    Ok((a * x + b * y - shift) / (a.abs() + b.abs()))
}

/// Affine binary-KL inversion:
/// `sup { p in [0,1] : d(g_ab(q, p) || g_ab((q+p)/2, (q+p)/2)) <= c }`.
///
/// Monotonicity in `p` is not guaranteed for general (a, b), so the supremum
/// is located by a dense downward scan and then sharpened by bisection inside
/// the bracketing cell.
pub fn invert_kl_affine(q: f64, c: f64, a: f64, b: f64) -> Result<f64, DivergenceError> {
    check_unit(q)?;
    if !(c >= 0.0) {
        return Err(DivergenceError::NegativeBudget { value: c });
    }
    if a == 0.0 && b == 0.0 {
        return Err(DivergenceError::DegenerateAffine);
    }
    let constraint = |p: f64| -> f64 {
        let mid = (q + p) / 2.0;
        let lhs = g_ab(q, p, a, b).expect("validated");
        let rhs = g_ab(mid, mid, a, b).expect("validated");
        binary_kl(lhs, rhs).expect("g_ab output stays in [0, 1]")
    };
    if constraint(1.0) <= c {
        return Ok(1.0);
    }
    let step = 1.0 / AFFINE_SCAN_POINTS as f64;
    let mut inside = None;
    let mut k = AFFINE_SCAN_POINTS;
    while k > 0 {
        let p = k as f64 * step;
        if constraint(p) <= c {
            inside = Some(p);
            break;
        }
        k -= 1;
    }
    // p = q always satisfies the constraint (both divergence arguments
    // coincide there), so it brackets the boundary when no grid point does.
    let (mut lo, mut hi) = match inside {
        Some(p) => (p, (p + step).min(1.0)),
        None => (q, (q + step).min(1.0)),
    };
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if constraint(mid) <= c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Evaluates the linear-bound feasibility constraint
/// `gamma1 (1 - gamma2) + (e^gamma1 - 1 - gamma1)(1 + gamma2^2)`.
pub fn gamma_constraint(gamma1: f64, gamma2: f64) -> f64 {
    gamma1 * (1.0 - gamma2) + (gamma1.exp() - 1.0 - gamma1) * (1.0 + gamma2 * gamma2)
}

/// True when the pair lies in the feasible set, allowing 1e-12 slack.
pub fn gamma_feasible(pair: &GammaPair) -> bool {
    gamma_constraint(pair.gamma1, pair.gamma2) <= FEASIBILITY_SLACK
}

/// Checked variant taking raw parameters; rejects non-positive entries.
pub fn gamma_feasible_checked(gamma1: f64, gamma2: f64) -> Result<bool, DivergenceError> {
    let pair = GammaPair::new(gamma1, gamma2)?;
    Ok(gamma_feasible(&pair))
}

fn interp_gamma_polynomial(g: f64) -> f64 {
    let e = g.exp();
    g * g - 4.0 * (e - 1.0) * (e - 1.0 - g)
}

/// Largest `gamma1` with `gamma1^2 - 4(e^g - 1)(e^g - 1 - g) >= 0`, the
/// endpoint of the feasible gamma1 range for the linear bound.
///
/// Bisection on [0.3, 0.4]; the polynomial changes sign there.
pub fn optimal_interp_gamma() -> f64 {
    static CACHE: OnceLock<f64> = OnceLock::new();
    *CACHE.get_or_init(|| {
        let (mut lo, mut hi) = (0.3_f64, 0.4_f64);
        debug_assert!(interp_gamma_polynomial(lo) > 0.0);
        debug_assert!(interp_gamma_polynomial(hi) < 0.0);
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            if interp_gamma_polynomial(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // The lower endpoint keeps the polynomial nonnegative, so a feasible
        // gamma2 exists at the returned value and the optimizer grid can use
        // it as its top point.
        lo
    })
}

/// Smallest feasible `gamma2` for a fixed `gamma1`, or `None` when no
/// feasible gamma2 exists (gamma1 past the optimum).
///
/// The constraint is an upward parabola in gamma2; its vertex sits at
/// `gamma1 / (2A)` with `A = e^g - 1 - g`. Bisection between zero and the
/// vertex locates the left crossing.
pub fn smallest_feasible_gamma2(gamma1: f64) -> Option<f64> {
    let a = gamma1.exp() - 1.0 - gamma1;
    if a <= 0.0 {
        return None;
    }
    let vertex = gamma1 / (2.0 * a);
    if gamma_constraint(gamma1, vertex) > FEASIBILITY_SLACK {
        return None;
    }
    let (mut lo, mut hi) = (f64::MIN_POSITIVE, vertex);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if gamma_constraint(gamma1, mid) <= FEASIBILITY_SLACK {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Log-spaced gamma1 grid on [1e-4, gamma1_opt] paired with the smallest
/// feasible gamma2 per point. Infeasible grid points are dropped.
pub fn linear_gamma_grid(points: usize) -> Vec<GammaPair> {
    let top = optimal_interp_gamma();
    let lo_ln = 1e-4_f64.ln();
    let hi_ln = top.ln();
    let mut grid = Vec::with_capacity(points);
    for k in 0..points {
        let t = if points == 1 {
            1.0
        } else {
            k as f64 / (points - 1) as f64
        };
        let gamma1 = (lo_ln + t * (hi_ln - lo_ln)).exp();
        if let Some(gamma2) = smallest_feasible_gamma2(gamma1) {
            grid.push(GammaPair { gamma1, gamma2 });
        }
    }
    grid
}

fn default_gamma_grid() -> &'static [GammaPair] {
    static CACHE: OnceLock<Vec<GammaPair>> = OnceLock::new();
    CACHE.get_or_init(|| linear_gamma_grid(LINEAR_GAMMA_POINTS))
}

/// Minimizes `gamma2 * train_loss + avg_ecmi / gamma1` over the feasible set.
///
/// For each gamma1 on the default grid the objective is increasing in gamma2,
/// so the smallest feasible gamma2 is optimal; the grid minimum is returned
/// together with the winning pair. The value is clamped below at zero.
pub fn optimize_linear_gamma(
    train_loss: f64,
    avg_ecmi: f64,
) -> Result<(GammaPair, f64), DivergenceError> {
    optimize_linear_gamma_on(default_gamma_grid(), train_loss, avg_ecmi)
}

/// Grid-explicit variant used to cross-check grid sensitivity.
pub fn optimize_linear_gamma_on(
    grid: &[GammaPair],
    train_loss: f64,
    avg_ecmi: f64,
) -> Result<(GammaPair, f64), DivergenceError> {
    check_unit(train_loss)?;
    if !(avg_ecmi >= 0.0) {
        return Err(DivergenceError::NegativeBudget { value: avg_ecmi });
    }
    let mut best: Option<(GammaPair, f64)> = None;
    for pair in grid {
        let objective = pair.gamma2 * train_loss + avg_ecmi / pair.gamma1;
        match best {
            Some((_, value)) if value <= objective => {}
            _ => best = Some((*pair, objective)),
        }
    }
    let (pair, value) = best.expect("default gamma grid is never empty");
    Ok((pair, value.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn binary_kl_basics() {
        assert_eq!(binary_kl(0.3, 0.3).unwrap(), 0.0);
        assert!((binary_kl(0.0, 0.5).unwrap() - LN2).abs() < 1e-15);
        // Direct formula evaluation, cross-checked against an independent
        // high-precision computation of q ln(q/p) + (1-q) ln((1-q)/(1-p)).
        assert!((binary_kl(0.1, 0.3).unwrap() - 0.1163217565860046).abs() < 1e-12);
    }

    #[test]
    fn binary_kl_endpoints() {
        assert_eq!(binary_kl(0.5, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(binary_kl(0.5, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(binary_kl(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(binary_kl(1.0, 1.0).unwrap(), 0.0);
        assert!(binary_kl(-0.1, 0.5).is_err());
        assert!(binary_kl(0.5, 1.1).is_err());
    }

    #[test]
    fn d_gamma_zero_gamma_vanishes() {
        for q in [0.0, 0.2, 0.7, 1.0] {
            for p in [0.0, 0.4, 1.0] {
                assert_eq!(d_gamma(q, p, 0.0).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn d_gamma_direct_value() {
        // 0.2 - ln(0.5 + 0.5 e); independently evaluated.
        let expected = 0.2 - (0.5 + 0.5 * std::f64::consts::E).ln();
        let got = d_gamma(0.2, 0.5, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - (-0.4201145069582775)).abs() < 1e-12);
    }

    #[test]
    fn d_gamma_supremum_matches_binary_kl() {
        let sup = binary_kl_sup_gamma(0.1, 0.3).unwrap();
        assert!((sup - binary_kl(0.1, 0.3).unwrap()).abs() < 1e-6);
        // Full grid check of the variational identity.
        for i in 1..50 {
            for j in 1..50 {
                let q = i as f64 / 50.0;
                let p = j as f64 / 50.0;
                let sup = binary_kl_sup_gamma(q, p).unwrap();
                let d = binary_kl(q, p).unwrap();
                assert!(
                    (sup - d).abs() < 1e-6,
                    "sup_gamma mismatch at q={q}, p={p}: {sup} vs {d}"
                );
            }
        }
    }

    #[test]
    fn invert_kl_half_examples() {
        assert!((invert_kl_half(0.3, 0.0).unwrap() - 0.3).abs() < 1e-12);
        assert!((invert_kl_half(0.0, LN2).unwrap() - 1.0).abs() < 1e-12);
        // Closed form 2 - 2 e^{-c} at q = 0.
        assert!((invert_kl_half(0.0, 0.1).unwrap() - 0.19032516392808096).abs() < 1e-9);
    }

    #[test]
    fn invert_kl_half_closed_form_on_range() {
        for k in 0..=100 {
            let c = 5.0 * k as f64 / 100.0;
            let expected = (2.0 - 2.0 * (-c).exp()).min(1.0);
            let got = invert_kl_half(0.0, c).unwrap();
            assert!((got - expected).abs() < 1e-9, "c={c}: {got} vs {expected}");
        }
    }

    #[test]
    fn invert_kl_half_is_monotone_and_feasible() {
        let mut prev = 0.0;
        for k in 0..=60 {
            let c = k as f64 / 30.0;
            let p = invert_kl_half(0.2, c).unwrap();
            assert!(p + 1e-12 >= prev, "not monotone at c={c}");
            if p < 1.0 {
                let d = binary_kl(0.2, (0.2 + p) / 2.0).unwrap();
                assert!(d <= c + 1e-9, "constraint violated at c={c}: d={d}");
            }
            prev = p;
        }
    }

    #[test]
    fn invert_kl_half_rejects_negative_budget() {
        assert!(invert_kl_half(0.2, -1e-9).is_err());
    }

    #[test]
    fn g_ab_examples() {
        assert_eq!(g_ab(0.4, 0.9, 1.0, 0.0).unwrap(), 0.4);
        assert_eq!(g_ab(0.4, 0.9, 0.0, 1.0).unwrap(), 0.9);
        assert!((g_ab(0.7, 0.2, 1.0, -1.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(
            g_ab(0.5, 0.5, 0.0, 0.0),
            Err(DivergenceError::DegenerateAffine)
        ));
    }

    #[test]
    fn affine_inversion_reduces_to_half_mixture() {
        assert!((invert_kl_affine(0.37, 0.0, 1.0, 0.0).unwrap() - 0.37).abs() < 1e-8);
        assert!(
            (invert_kl_affine(0.0, 0.1, 1.0, 0.0).unwrap() - 0.19032516392808096).abs() < 1e-8
        );
        for (q, c) in [(0.0, 0.05), (0.1, 0.02), (0.3, 0.125), (0.5, 0.4), (0.8, 1.0)] {
            let affine = invert_kl_affine(q, c, 1.0, 0.0).unwrap();
            let half = invert_kl_half(q, c).unwrap();
            assert!(
                (affine - half).abs() < 1e-8,
                "disagreement at q={q}, c={c}: {affine} vs {half}"
            );
        }
    }

    #[test]
    fn affine_flip_is_sometimes_tighter() {
        let flipped = invert_kl_affine(0.3, 0.125, 0.0, 1.0).unwrap();
        let canonical = invert_kl_affine(0.3, 0.125, 1.0, 0.0).unwrap();
        assert!(
            flipped < canonical,
            "expected (0,1) below (1,0): {flipped} vs {canonical}"
        );
    }

    #[test]
    fn gamma_feasibility_examples() {
        assert!(gamma_feasible_checked(0.1, 1.5).unwrap());
        assert!(!gamma_feasible_checked(0.37, 1.0).unwrap());
        assert!(gamma_feasible_checked(1e-4, 1.001).unwrap());
        assert!(gamma_feasible_checked(-0.1, 1.0).is_err());
    }

    #[test]
    fn optimal_gamma_matches_sign_change() {
        assert!(interp_gamma_polynomial(0.36) > 0.0);
        assert!(interp_gamma_polynomial(0.37) < 0.0);
        let g = optimal_interp_gamma();
        assert!((g - 0.36534224565400264).abs() < 1e-8);
        let twice_sq = 2.0 * g * g;
        assert!((twice_sq - 0.27).abs() < 0.005, "2 gamma^2 = {twice_sq}");
        assert!(g < 0.37);
        assert!(LN2 > 0.69);
    }

    #[test]
    fn linear_gamma_interpolating_case() {
        let (pair, value) = optimize_linear_gamma(0.0, 0.1).unwrap();
        let expected = 0.1 / optimal_interp_gamma();
        assert!((value - expected).abs() < 1e-9, "{value} vs {expected}");
        assert!((pair.gamma1 - optimal_interp_gamma()).abs() < 1e-9);
        let (_, zero) = optimize_linear_gamma(0.0, 0.0).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn linear_gamma_beats_fixed_pairs() {
        let (_, value) = optimize_linear_gamma(0.05, 0.05).unwrap();
        let fixed = [(0.1, 1.5), (0.2, 1.3), (0.3, 1.2)];
        let mut best_fixed = f64::INFINITY;
        for (g1, g2) in fixed {
            if gamma_feasible_checked(g1, g2).unwrap() {
                best_fixed = best_fixed.min(g2 * 0.05 + 0.05 / g1);
            }
        }
        assert!(best_fixed.is_finite(), "at least one fixed pair is feasible");
        assert!(value <= best_fixed + 1e-12, "{value} vs {best_fixed}");
    }

    #[test]
    fn linear_gamma_grid_refinement_agrees() {
        let fine = linear_gamma_grid(20480);
        for (train, ecmi) in [(0.0, 0.1), (0.05, 0.05), (0.3, 0.02), (0.5, 0.2)] {
            let (_, coarse_value) = optimize_linear_gamma(train, ecmi).unwrap();
            let (_, fine_value) = optimize_linear_gamma_on(&fine, train, ecmi).unwrap();
            assert!(
                (coarse_value - fine_value).abs() < 1e-3,
                "grid sensitivity at ({train}, {ecmi}): {coarse_value} vs {fine_value}"
            );
        }
    }

    #[test]
    fn pinsker_on_grid() {
        for i in 1..40 {
            for j in 1..40 {
                let q = i as f64 / 40.0;
                let p = j as f64 / 40.0;
                let lhs = 2.0 * (q - p) * (q - p);
                assert!(lhs <= binary_kl(q, p).unwrap() + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip_half_mixture(q in 0.0..0.99f64, t in 0.0..1.0f64) {
            let p = q + t * (1.0 - q);
            let c = binary_kl(q, (q + p) / 2.0).unwrap();
            let back = invert_kl_half(q, c).unwrap();
            prop_assert!((back - p).abs() < 1e-7, "q={}, p={}, back={}", q, p, back);
        }

        #[test]
        fn g_ab_stays_in_unit_interval(
            x in 0.0..=1.0f64,
            y in 0.0..=1.0f64,
            a in -3.0..=3.0f64,
            b in -3.0..=3.0f64,
        ) {
            prop_assume!(a != 0.0 || b != 0.0);
            let g = g_ab(x, y, a, b).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&g), "g={}", g);
        }

        #[test]
        fn binary_kl_is_jointly_convex(
            q1 in 0.01..0.99f64, p1 in 0.01..0.99f64,
            q2 in 0.01..0.99f64, p2 in 0.01..0.99f64,
            t in 0.0..=1.0f64,
        ) {
            let mixed = binary_kl(t * q1 + (1.0 - t) * q2, t * p1 + (1.0 - t) * p2).unwrap();
            let convex = t * binary_kl(q1, p1).unwrap() + (1.0 - t) * binary_kl(q2, p2).unwrap();
            prop_assert!(mixed <= convex + 1e-12);
        }

        #[test]
        fn d_gamma_is_jointly_convex(
            q1 in 0.0..=1.0f64, p1 in 0.0..=1.0f64,
            q2 in 0.0..=1.0f64, p2 in 0.0..=1.0f64,
            t in 0.0..=1.0f64,
            gamma in -5.0..=5.0f64,
        ) {
            let mixed = d_gamma(t * q1 + (1.0 - t) * q2, t * p1 + (1.0 - t) * p2, gamma).unwrap();
            let convex = t * d_gamma(q1, p1, gamma).unwrap()
                + (1.0 - t) * d_gamma(q2, p2, gamma).unwrap();
            prop_assert!(mixed <= convex + 1e-9, "mixed={} convex={}", mixed, convex);
        }
    }
}
