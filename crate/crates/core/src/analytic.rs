//! Closed-form predictors: the gamma inactivation law, the 1D Robin-boundary
//! survival function, the exact 1D conditional moments and coefficient of
//! variation, the universal fast-inactivation asymptote (C/λ)^(m/2), the
//! algebraic-decay law for uniform starts, and the quasi-stationary
//! conditional CDF.
//!
//! The 1D survival function is
//!
//! ```text
//! S(L,t) = 1 − erfc(L/√(4Dt)) + exp(κ(κt+L)/D) · erfc((2κt+L)/√(4Dt))
//! ```
//!
//! whose last term overflows catastrophically when evaluated as written
//! (exp(κ²t/D) alone can exceed 1e308 at moderate κ²t). With y = L/√(4Dt) and
//! u = y + κ√(t/D) it is algebraically equal to
//!
//! ```text
//! S(L,t) = erf(y) + exp(−y²)·erfcx(u),
//! F(t) = 1 − S = exp(−y²)·[erfcx(y) − erfcx(u)],
//! ```
//!
//! which is finite everywhere and hands us log F for free — F itself drops
//! below f64 range already at t ≈ L²/(3000·D).

use crate::model::{InactivationLaw, Reactivity};
use crate::special;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("time must be positive, got {0}")]
    NonpositiveTime(f64),
    #[error("length must be positive, got {0}")]
    NonpositiveLength(f64),
    #[error("diffusivity must be positive, got {0}")]
    NonpositiveDiffusivity(f64),
    #[error("closed forms exist only for m in {{1, 2}}, got m = {0}")]
    UnsupportedOrder(u32),
    #[error("closed forms require an exponential clock (shape 1), got shape = {0}")]
    UnsupportedShape(f64),
    #[error("physical length {l_phys} is shorter than empty-space length {l_empty}; obstacles cannot shorten paths")]
    OrderingViolation { l_phys: f64, l_empty: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Dimensionless parameters of the 1D problem: λ̄ = λL²/D and κ̄ = κL/D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimensionless1DParams {
    lambda_bar: f64,
    kappa_bar: Reactivity,
}

impl Dimensionless1DParams {
    pub fn new(lambda_bar: f64, kappa_bar: Reactivity) -> Result<Self, AnalyticError> {
        if !(lambda_bar > 0.0) || !lambda_bar.is_finite() {
            return Err(AnalyticError::InvalidParameter(format!(
                "lambda_bar must be positive, got {lambda_bar}"
            )));
        }
        if !kappa_bar.is_valid() {
            return Err(AnalyticError::InvalidParameter(format!(
                "kappa_bar must be positive or perfect, got {kappa_bar}"
            )));
        }
        Ok(Self { lambda_bar, kappa_bar })
    }

    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    pub fn kappa_bar(&self) -> Reactivity {
        self.kappa_bar
    }
}

/// Survival probability P(σ > t) = Γ(β, λt)/Γ(β) of the gamma clock.
pub fn gamma_survival(law: &InactivationLaw, t: f64) -> Result<f64, AnalyticError> {
    if t < 0.0 || t.is_nan() {
        return Err(AnalyticError::NegativeTime(t));
    }
    Ok(special::reg_gamma_upper(law.shape(), law.rate() * t))
}

/// ln P(σ > t); finite far beyond the underflow point of the survival itself.
pub fn ln_gamma_survival(law: &InactivationLaw, t: f64) -> Result<f64, AnalyticError> {
    if t < 0.0 || t.is_nan() {
        return Err(AnalyticError::NegativeTime(t));
    }
    Ok(special::ln_reg_gamma_upper(law.shape(), law.rate() * t))
}

/// Density f_σ(t) = λ^β t^(β−1) e^(−λt) / Γ(β), t > 0.
pub fn gamma_density(law: &InactivationLaw, t: f64) -> Result<f64, AnalyticError> {
    if !(t > 0.0) {
        return Err(AnalyticError::NonpositiveTime(t));
    }
    let (lam, beta) = (law.rate(), law.shape());
    let ln = beta * lam.ln() + (beta - 1.0) * t.ln() - lam * t - special::ln_gamma(beta);
    Ok(ln.exp())
}

/// Scaled complementary error function, exp(x²)·erfc(x).
pub fn erfcx(x: f64) -> f64 {
    special::erfcx(x)
}

fn check_robin_args(l: f64, t: f64, d: f64) -> Result<(), AnalyticError> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(AnalyticError::NonpositiveLength(l));
    }
    if !(d > 0.0) || !d.is_finite() {
        return Err(AnalyticError::NonpositiveDiffusivity(d));
    }
    if t < 0.0 || t.is_nan() {
        return Err(AnalyticError::NegativeTime(t));
    }
    Ok(())
}

/// Survival probability S(L, t) of a searcher started a distance L from a
/// partially absorbing (Robin, reactivity κ) boundary on the half line.
pub fn survival_1d_robin(l: f64, t: f64, d: f64, kappa: Reactivity) -> Result<f64, AnalyticError> {
    check_robin_args(l, t, d)?;
    if t == 0.0 {
        return Ok(1.0);
    }
    let y = l / (4.0 * d * t).sqrt();
    match kappa {
        Reactivity::Perfect => Ok(special::erf(y)),
        Reactivity::Partial(k) => {
            let u = y + k * (t / d).sqrt();
            Ok((special::erf(y) + (-y * y).exp() * special::erfcx(u)).min(1.0))
        }
    }
}

/// Hitting CDF F(t) = 1 − S(L, t); stable form, no cancellation against 1.
pub fn cdf_1d_robin(l: f64, t: f64, d: f64, kappa: Reactivity) -> Result<f64, AnalyticError> {
    check_robin_args(l, t, d)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let y = l / (4.0 * d * t).sqrt();
    match kappa {
        Reactivity::Perfect => Ok(special::erfc(y)),
        Reactivity::Partial(k) => {
            let u = y + k * (t / d).sqrt();
            Ok((-y * y).exp() * special::erfcx_diff(y, u))
        }
    }
}

/// ln F(t) for the Robin CDF; usable down to t where F ~ e^(−C/t) is far
/// below f64 range.
pub fn ln_cdf_1d_robin(l: f64, t: f64, d: f64, kappa: Reactivity) -> Result<f64, AnalyticError> {
    check_robin_args(l, t, d)?;
    if t == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let y = l / (4.0 * d * t).sqrt();
    match kappa {
        Reactivity::Perfect => Ok(special::ln_erfc(y)),
        Reactivity::Partial(k) => {
            let u = y + k * (t / d).sqrt();
            Ok(-y * y + special::erfcx_diff(y, u).ln())
        }
    }
}

/// Exact conditional moment E[τ^m | τ < σ] of the 1D Robin problem with an
/// exponential clock, as the dimensionless factor multiplying (L²/D)^m.
///
/// Only m ∈ {1, 2} have closed forms and only shape = 1 is covered by them;
/// anything else routes to the quadrature engine.
pub fn conditional_moment_1d_exact(
    params: &Dimensionless1DParams,
    shape: f64,
    m: u32,
) -> Result<f64, AnalyticError> {
    if shape != 1.0 {
        return Err(AnalyticError::UnsupportedShape(shape));
    }
    let lb = params.lambda_bar;
    let sl = lb.sqrt();
    match (params.kappa_bar, m) {
        (Reactivity::Perfect, 1) => Ok(1.0 / (2.0 * sl)),
        (Reactivity::Perfect, 2) => Ok((sl + 1.0) / (4.0 * lb * sl)),
        (Reactivity::Partial(kb), 1) => Ok((kb + sl + 1.0) / (2.0 * (kb * sl + lb))),
        (Reactivity::Partial(kb), 2) => {
            let num = (2.0 * kb + 3.0) * lb
                + (kb + 1.0) * (kb + 3.0) * sl
                + kb * (kb + 1.0)
                + lb * sl;
            let den = 4.0 * lb * sl * (kb + sl) * (kb + sl);
            Ok(num / den)
        }
        (_, m) => Err(AnalyticError::UnsupportedOrder(m)),
    }
}

/// Exact conditional coefficient of variation of the 1D Robin problem with an
/// exponential clock (dimensionless, scale-free).
pub fn cv_1d_exact(params: &Dimensionless1DParams) -> f64 {
    let lb = params.lambda_bar;
    let sl = lb.sqrt();
    match params.kappa_bar {
        Reactivity::Perfect => lb.powf(-0.25),
        Reactivity::Partial(kb) => {
            let num = (2.0 * (kb + 1.0) * sl + kb * (kb + 1.0) + lb).sqrt();
            num / (lb.powf(0.25) * (kb + sl + 1.0))
        }
    }
}

/// Universal fast-inactivation asymptote (C/λ)^(m/2).
///
/// Independent of the clock's shape parameter by construction — it is not an
/// argument.
pub fn asymptotic_moment(c: f64, lambda: f64, m: f64) -> f64 {
    debug_assert!(c > 0.0 && lambda > 0.0 && m >= 1.0);
    (c / lambda).powf(0.5 * m)
}

/// Asymptote in geodesic form, (L/(2√(Dλ)))^m = asymptotic_moment(L²/(4D), λ, m).
pub fn asymptotic_moment_geodesic(l: f64, d: f64, lambda: f64, m: f64) -> f64 {
    debug_assert!(l > 0.0 && d > 0.0);
    asymptotic_moment(l * l / (4.0 * d), lambda, m)
}

/// Fast-inactivation conditional moment for algebraically decaying FPT
/// distributions P(τ ≤ t) ~ A·t^p: returns Γ(m+p)/Γ(p) · λ^(−m).
pub fn algebraic_conditional_moment(p: f64, m: f64, lambda: f64) -> f64 {
    debug_assert!(p > 0.0 && m > 0.0 && lambda > 0.0);
    (special::ln_gamma(m + p) - special::ln_gamma(p) - m * lambda.ln()).exp()
}

/// Exact conditional law for a quasi-stationary start with exponential clock:
/// P(τ ≤ t | τ < σ) = 1 − e^(−(λ+λ₀)t).
pub fn qsd_conditional_cdf(lambda0: f64, lambda: f64, t: f64) -> f64 {
    debug_assert!(lambda0 > 0.0 && lambda > 0.0 && t >= 0.0);
    -(-(lambda + lambda0) * t).exp_m1()
}

/// Predicted λ→∞ limit of the obstacle/no-obstacle conditional-mean ratio.
///
/// `OrderingViolation` flags L_phys < L_empty, which can only come from a bug
/// upstream: obstacles cannot shorten paths.
pub fn conjecture_ratio(l_phys: f64, l_empty: f64) -> Result<f64, AnalyticError> {
    if !(l_empty > 0.0) {
        return Err(AnalyticError::NonpositiveLength(l_empty));
    }
    if l_phys < l_empty {
        return Err(AnalyticError::OrderingViolation { l_phys, l_empty });
    }
    Ok(l_phys / l_empty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn law(rate: f64, shape: f64) -> InactivationLaw {
        InactivationLaw::new(rate, shape).unwrap()
    }

    #[test]
    fn gamma_survival_exponential_case() {
        // beta = 1 reduces to e^{-lambda t} exactly
        let l = law(2.0, 1.0);
        assert_relative_eq!(
            gamma_survival(&l, 1.0).unwrap(),
            (-2.0f64).exp(),
            max_relative = 1e-13
        );
        assert_eq!(gamma_survival(&law(3.7, 2.2), 0.0).unwrap(), 1.0);
        assert!(matches!(
            gamma_survival(&l, -0.1),
            Err(AnalyticError::NegativeTime(_))
        ));
    }

    #[test]
    fn gamma_survival_shape_two_identity() {
        // Gamma(2, x) = (1 + x) e^{-x}; cross-checked by integrating the
        // upper-tail integrand with composite Simpson
        let l = law(1.0, 2.0);
        let direct = gamma_survival(&l, 1.0).unwrap();
        assert_relative_eq!(direct, 2.0 * (-1.0f64).exp(), max_relative = 1e-13);

        let integrand = |x: f64| x * (-x).exp();
        let (a, b, n) = (1.0, 60.0, 200_000);
        let h = (b - a) / n as f64;
        let mut acc = integrand(a) + integrand(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(x);
        }
        let oracle = acc * h / 3.0; // Γ(2, 1), and Γ(2) = 1
        assert_relative_eq!(direct, oracle, max_relative = 1e-10);
    }

    #[test]
    fn gamma_density_examples() {
        assert_relative_eq!(
            gamma_density(&law(3.0, 1.0), 0.5).unwrap(),
            3.0 * (-1.5f64).exp(),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            gamma_density(&law(1.0, 2.0), 1.0).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-13
        );
        assert!(matches!(
            gamma_density(&law(1.0, 1.0), 0.0),
            Err(AnalyticError::NonpositiveTime(_))
        ));
    }

    #[test]
    fn gamma_density_is_negative_derivative_of_survival() {
        let l = law(1.0, 2.0);
        let h = 1e-6;
        for &t in &[0.3, 1.0, 2.5] {
            let fd = (gamma_survival(&l, t - h).unwrap() - gamma_survival(&l, t + h).unwrap())
                / (2.0 * h);
            assert_relative_eq!(gamma_density(&l, t).unwrap(), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn gamma_density_integrates_to_one() {
        // adaptive-step Simpson oracle on (0, 60/lambda] for beta = 2.5, lambda = 4
        let l = law(4.0, 2.5);
        let f = |t: f64| gamma_density(&l, t).unwrap();
        let (a, b, n) = (1e-12, 15.0, 400_000);
        let h: f64 = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let t = a + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
        }
        let integral = acc * h / 3.0;
        assert!((integral - 1.0).abs() < 1e-10, "integral = {integral}");
    }

    #[test]
    fn gamma_survival_monotone_and_continuous() {
        for &(rate, shape) in &[(1.0, 1.0), (2.0, 0.5), (0.7, 4.0)] {
            let l = law(rate, shape);
            let mut prev = 1.0;
            let mut t = 0.0;
            while t < 30.0 {
                let s = gamma_survival(&l, t).unwrap();
                assert!(s <= prev + 1e-14, "survival increased at t={t}");
                assert!((0.0..=1.0).contains(&s));
                prev = s;
                t += 0.05;
            }
        }
    }

    #[test]
    fn robin_survival_examples() {
        // perfectly absorbing: S = erf(L/sqrt(4Dt))
        assert_relative_eq!(
            survival_1d_robin(1.0, 0.25, 1.0, Reactivity::Perfect).unwrap(),
            0.842_700_792_949_714_9, // erf(1), series oracle
            max_relative = 1e-12
        );
        // t = 0 is certain survival for any kappa
        assert_eq!(
            survival_1d_robin(2.0, 0.0, 0.5, Reactivity::Partial(3.0)).unwrap(),
            1.0
        );
        // kappa -> 0 makes the boundary reflecting: the two erfc terms cancel
        let s = survival_1d_robin(1.0, 10.0, 1.0, Reactivity::Partial(1e-12)).unwrap();
        assert!((s - 1.0).abs() < 1e-9, "s = {s}");
        assert!(matches!(
            survival_1d_robin(0.0, 1.0, 1.0, Reactivity::Perfect),
            Err(AnalyticError::NonpositiveLength(_))
        ));
        assert!(matches!(
            survival_1d_robin(1.0, 1.0, 0.0, Reactivity::Perfect),
            Err(AnalyticError::NonpositiveDiffusivity(_))
        ));
    }

    #[test]
    fn robin_survival_monotonicities() {
        // nonincreasing in t, nondecreasing in L, nonincreasing in kappa
        let kappas = [0.1, 1.0, 10.0];
        for &k in &kappas {
            let mut prev = 1.0;
            for i in 1..60 {
                let t = 0.05 * i as f64;
                let s = survival_1d_robin(1.0, t, 1.0, Reactivity::Partial(k)).unwrap();
                assert!(s <= prev + 1e-12);
                prev = s;
            }
        }
        for i in 1..40 {
            let l0 = 0.1 * i as f64;
            let s0 = survival_1d_robin(l0, 1.0, 1.0, Reactivity::Partial(1.0)).unwrap();
            let s1 = survival_1d_robin(l0 + 0.1, 1.0, 1.0, Reactivity::Partial(1.0)).unwrap();
            assert!(s1 >= s0 - 1e-12);
        }
        for t in [0.1, 1.0, 5.0] {
            let mut prev = survival_1d_robin(1.0, t, 1.0, Reactivity::Partial(0.01)).unwrap();
            for &k in &[0.1, 1.0, 10.0, 100.0] {
                let s = survival_1d_robin(1.0, t, 1.0, Reactivity::Partial(k)).unwrap();
                assert!(s <= prev + 1e-12);
                prev = s;
            }
            let sp = survival_1d_robin(1.0, t, 1.0, Reactivity::Perfect).unwrap();
            assert!(sp <= prev + 1e-12);
        }
    }

    #[test]
    fn robin_cdf_short_time_log_limit() {
        // t·ln F(t) -> −L²/(4D); within 10% at t = 1e-3·L²/D for both kappas
        let c = 0.25;
        for kappa in [Reactivity::Partial(1.0), Reactivity::Perfect] {
            let t = 1e-3;
            let v = -t * ln_cdf_1d_robin(1.0, t, 1.0, kappa).unwrap();
            assert!(
                (v - c).abs() / c < 0.10,
                "kappa {kappa}: -t lnF = {v}, C = {c}"
            );
        }
    }

    #[test]
    fn ln_cdf_agrees_with_cdf_when_representable() {
        for kappa in [Reactivity::Partial(0.5), Reactivity::Perfect] {
            for &t in &[0.01, 0.1, 1.0, 10.0] {
                let f = cdf_1d_robin(1.0, t, 1.0, kappa).unwrap();
                let lf = ln_cdf_1d_robin(1.0, t, 1.0, kappa).unwrap();
                if f > 1e-290 {
                    assert_relative_eq!(lf, f.ln(), max_relative = 1e-9);
                }
            }
        }
        // deep tail stays finite
        let lf = ln_cdf_1d_robin(1.0, 1e-6, 1.0, Reactivity::Perfect).unwrap();
        assert!(lf.is_finite() && lf < -2e5);
    }

    #[test]
    fn exact_moment_examples() {
        let p11 = Dimensionless1DParams::new(1.0, Reactivity::Partial(1.0)).unwrap();
        assert_relative_eq!(
            conditional_moment_1d_exact(&p11, 1.0, 1).unwrap(),
            0.75,
            max_relative = 1e-15
        );
        // numerator 16, denominator 16
        assert_relative_eq!(
            conditional_moment_1d_exact(&p11, 1.0, 2).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        // perfectly absorbing mean is exactly 1/(2 sqrt(lambda_bar)) at EVERY
        // lambda_bar, and coincides with the geodesic asymptote
        for &lb in &[0.1, 1.0, 1e2, 1e6] {
            let p = Dimensionless1DParams::new(lb, Reactivity::Perfect).unwrap();
            let exact = conditional_moment_1d_exact(&p, 1.0, 1).unwrap();
            assert_relative_eq!(exact, 0.5 / lb.sqrt(), max_relative = 1e-15);
            // dimensionful: L = 2, D = 0.5 -> lambda = lb D / L²
            let (l, d) = (2.0, 0.5);
            let lambda = lb * d / (l * l);
            assert_relative_eq!(
                exact * (l * l / d),
                asymptotic_moment_geodesic(l, d, lambda, 1.0),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn exact_moment_rejects_unsupported_inputs() {
        let p = Dimensionless1DParams::new(1.0, Reactivity::Partial(1.0)).unwrap();
        assert!(matches!(
            conditional_moment_1d_exact(&p, 1.0, 3),
            Err(AnalyticError::UnsupportedOrder(3))
        ));
        assert!(matches!(
            conditional_moment_1d_exact(&p, 2.0, 1),
            Err(AnalyticError::UnsupportedShape(_))
        ));
    }

    #[test]
    fn theorem_one_convergence_of_closed_form() {
        // lambda_bar^(m/2) · moment -> (1/4)^(m/2); within 1% at lambda_bar = 1e6
        let lb = 1e6;
        let p = Dimensionless1DParams::new(lb, Reactivity::Perfect).unwrap();
        for m in [1u32, 2u32] {
            let scaled =
                lb.powf(m as f64 / 2.0) * conditional_moment_1d_exact(&p, 1.0, m).unwrap();
            let limit = 0.25f64.powf(m as f64 / 2.0);
            assert!(
                (scaled - limit).abs() / limit < 0.01,
                "m={m}: {scaled} vs {limit}"
            );
        }
    }

    #[test]
    fn jensen_inequality_on_grid() {
        for &lb in &[0.1, 1.0, 10.0, 1e3] {
            for kb in [
                Reactivity::Partial(0.1),
                Reactivity::Partial(1.0),
                Reactivity::Partial(10.0),
                Reactivity::Perfect,
            ] {
                let p = Dimensionless1DParams::new(lb, kb).unwrap();
                let m1 = conditional_moment_1d_exact(&p, 1.0, 1).unwrap();
                let m2 = conditional_moment_1d_exact(&p, 1.0, 2).unwrap();
                assert!(m2 >= m1 * m1, "Jensen violated at lb={lb} kb={kb}");
            }
        }
    }

    #[test]
    fn kappa_independence_in_the_limit() {
        // conditional means at kappa_bar 1 vs inf differ by <5% at lambda_bar 1e4,
        // and the ratio walks toward 1
        let mut prev_gap = f64::INFINITY;
        for &lb in &[1e2, 1e3, 1e4] {
            let p1 = Dimensionless1DParams::new(lb, Reactivity::Partial(1.0)).unwrap();
            let pi = Dimensionless1DParams::new(lb, Reactivity::Perfect).unwrap();
            let gap = (conditional_moment_1d_exact(&p1, 1.0, 1).unwrap()
                / conditional_moment_1d_exact(&pi, 1.0, 1).unwrap()
                - 1.0)
                .abs();
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
        assert!(prev_gap < 0.05, "gap at 1e4 = {prev_gap}");
    }

    #[test]
    fn cv_examples_and_consistency() {
        let p = Dimensionless1DParams::new(1.0, Reactivity::Partial(1.0)).unwrap();
        assert_relative_eq!(cv_1d_exact(&p), 7.0f64.sqrt() / 3.0, max_relative = 1e-14);

        let p = Dimensionless1DParams::new(1e8, Reactivity::Partial(1.0)).unwrap();
        assert!((cv_1d_exact(&p) - 0.01).abs() / 0.01 < 0.05);

        // cv matches sqrt(m2 - m1²)/m1 on a 5x5 grid to 1e-12
        for &lb in &[0.1, 1.0, 10.0, 100.0, 1e4] {
            for &kb in &[0.1, 0.5, 1.0, 10.0, 100.0] {
                let p = Dimensionless1DParams::new(lb, Reactivity::Partial(kb)).unwrap();
                let m1 = conditional_moment_1d_exact(&p, 1.0, 1).unwrap();
                let m2 = conditional_moment_1d_exact(&p, 1.0, 2).unwrap();
                let assembled = (m2 - m1 * m1).sqrt() / m1;
                assert_relative_eq!(cv_1d_exact(&p), assembled, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn asymptotic_moment_examples() {
        assert_relative_eq!(asymptotic_moment(1.0, 4.0, 2.0), 0.25);
        assert_relative_eq!(asymptotic_moment(1.0, 4.0, 1.0), 0.5);
        assert_relative_eq!(asymptotic_moment_geodesic(1.0, 1.0, 100.0, 1.0), 0.05);
        assert_relative_eq!(asymptotic_moment_geodesic(2.0, 1.0, 100.0, 2.0), 0.01);
        // definitional identity against C = L²/(4D) on randomized inputs
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let l = 0.1 + 5.0 * next();
            let d = 0.1 + 3.0 * next();
            let lambda = 0.5 + 100.0 * next();
            let m = 1.0 + 3.0 * next();
            assert_relative_eq!(
                asymptotic_moment_geodesic(l, d, lambda, m),
                asymptotic_moment(l * l / (4.0 * d), lambda, m),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn algebraic_moment_examples() {
        // half-integer gamma recurrence oracle: Γ(3/2) = ½Γ(1/2), Γ(5/2) = (3/2)(1/2)Γ(1/2)
        assert_relative_eq!(
            algebraic_conditional_moment(0.5, 1.0, 10.0),
            0.05,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            algebraic_conditional_moment(1.0, 1.0, 1.0),
            1.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            algebraic_conditional_moment(0.5, 2.0, 1.0),
            0.75,
            max_relative = 1e-13
        );
    }

    #[test]
    fn qsd_cdf_examples() {
        assert_eq!(qsd_conditional_cdf(1.0, 1.0, 0.0), 0.0);
        assert_relative_eq!(
            qsd_conditional_cdf(1.0, 1.0, 0.5 * 2.0f64.ln()),
            0.5,
            max_relative = 1e-14
        );
        // first moment of Exp(lambda + lambda0) by midpoint integration of t dF
        let (l0, l) = (1.0, 1.0);
        let n = 2_000_000;
        let h = 20.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) * h;
            let dens = (l + l0) * (-(l + l0) * t).exp();
            acc += t * dens * h;
        }
        assert!((acc - 0.5).abs() < 1e-6, "mean = {acc}");
    }

    #[test]
    fn conjecture_ratio_examples() {
        assert_relative_eq!(conjecture_ratio(4.0, 4.0).unwrap(), 1.0);
        assert_relative_eq!(
            conjecture_ratio(2.0 * 2.0f64.sqrt(), 2.0).unwrap(),
            2.0f64.sqrt(),
            max_relative = 1e-15
        );
        assert!(matches!(
            conjecture_ratio(3.0, 4.0),
            Err(AnalyticError::OrderingViolation { .. })
        ));
    }
}
