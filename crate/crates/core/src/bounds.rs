//! Closed-form risk bounds, concentration radii and dimension windows.
//!
//! Constants whose numerical value is never fixed by the theory (`A0`,
//! `A_{1,-}`, `L_nu`, `A_-`, `A_+`) live in [`UnspecifiedConstants`] and are
//! tagged [`UNSPECIFIED_LABEL`] wherever they are emitted.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::smallball::LambdaClass;

pub const UNSPECIFIED_LABEL: &str = "paper-unspecified";
/// `n >= 400^2 D / beta0^2`.
pub const SAMPLE_FACTOR: f64 = 160_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnspecifiedConstants {
    /// Scale of `eps_n = A0 max(sqrt(ln n / D), D / sqrt(n))`.
    #[serde(rename = "A0")]
    pub a0: f64,
    #[serde(rename = "A1_minus")]
    pub a1_minus: f64,
    /// Overrides the solved upper-window constant when set.
    #[serde(rename = "L_nu", default, skip_serializing_if = "Option::is_none")]
    pub l_nu: Option<f64>,
    #[serde(rename = "A_minus")]
    pub a_minus: f64,
    #[serde(rename = "A_plus")]
    pub a_plus: f64,
}

impl Default for UnspecifiedConstants {
    fn default() -> Self {
        UnspecifiedConstants { a0: 1.0, a1_minus: 1.0, l_nu: None, a_minus: 0.25, a_plus: 4.0 }
    }
}

impl UnspecifiedConstants {
    /// `A0 max(sqrt(ln n / D), D / sqrt(n))`.
    pub fn epsilon_n(&self, dim: usize, n: usize) -> f64 {
        let (d, n) = (dim as f64, n as f64);
        self.a0 * (n.ln() / d).sqrt().max(d / n.sqrt())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LabError::Parameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(LabError::Parameter(format!("{name} must be nonnegative and finite, got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub beta0: f64,
    pub kappa0: f64,
    pub sigma: f64,
    #[serde(rename = "D")]
    pub dim: usize,
    pub n: usize,
    pub x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0_fail: Option<f64>,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        positive("beta0", self.beta0)?;
        positive("kappa0", self.kappa0)?;
        nonnegative("sigma", self.sigma)?;
        positive("x", self.x)?;
        if self.beta0 > 1.0 || self.kappa0 > 1.0 {
            return Err(LabError::Parameter(format!(
                "beta0 and kappa0 must lie in (0, 1], got ({}, {})",
                self.beta0, self.kappa0
            )));
        }
        if self.dim == 0 || self.n == 0 {
            return Err(LabError::Parameter("D and n must be at least 1".into()));
        }
        if let Some(p) = self.omega0_fail {
            if !(0.0..=1.0).contains(&p) {
                return Err(LabError::Parameter(format!("omega0_fail must be a probability, got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremABound {
    pub risk_bound: f64,
    pub failure_prob: f64,
    pub n_min: f64,
    /// `n >= n_min`.
    pub valid: bool,
}

/// `(16 / (beta0 kappa0^2))^2`.
pub fn theorem_a_prefactor(beta0: f64, kappa0: f64) -> f64 {
    (16.0 / (beta0 * kappa0 * kappa0)).powi(2)
}

/// `(16/(beta0 kappa0^2))^2 sigma^2 D x / n` with failure probability
/// `exp(-beta0^2 n / 4) + 1/x (+ P(Omega0^c))`.
pub fn theorem_a_bound(b: &BoundInputs) -> Result<TheoremABound> {
    b.validate()?;
    let (d, n) = (b.dim as f64, b.n as f64);
    let n_min = SAMPLE_FACTOR * d / (b.beta0 * b.beta0);
    Ok(TheoremABound {
        risk_bound: theorem_a_prefactor(b.beta0, b.kappa0) * b.sigma * b.sigma * d * b.x / n,
        failure_prob: (-b.beta0 * b.beta0 * n / 4.0).exp() + 1.0 / b.x + b.omega0_fail.unwrap_or(0.0),
        n_min,
        valid: n >= n_min,
    })
}

/// Envelope when `beta0 kappa0^2` decays like `D^{-3/4}` (unit constant):
/// `256 sigma^2 D^{5/2} x / n`.
pub fn fejer_plugin_envelope(sigma: f64, dim: usize, n: usize, x: f64) -> f64 {
    256.0 * sigma * sigma * (dim as f64).powf(2.5) * x / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Interval {
    pub low: f64,
    pub high: f64,
    pub center: f64,
    /// `A_- (ln n)^2 <= D <= A_+ sqrt(n) / ln n`.
    pub in_dimension_window: bool,
}

pub fn theorem2_interval(cm_sq: f64, dim: usize, n: usize, epsilon: f64, constants: &UnspecifiedConstants) -> Result<Theorem2Interval> {
    nonnegative("Cm_sq", cm_sq)?;
    if !(0.0..1.0).contains(&epsilon) {
        return Err(LabError::Parameter(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    if dim == 0 || n == 0 {
        return Err(LabError::Parameter("D and n must be at least 1".into()));
    }
    let (d, nf) = (dim as f64, n as f64);
    let center = d * cm_sq / nf;
    let ln = nf.ln();
    let in_window = n > 1 && constants.a_minus * ln * ln <= d && d <= constants.a_plus * nf.sqrt() / ln;
    Ok(Theorem2Interval { low: (1.0 - epsilon) * center, high: (1.0 + epsilon) * center, center, in_dimension_window: in_window })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem4Bound {
    pub risk_bound: f64,
    pub kappa0: f64,
    pub beta0: f64,
    pub window_low: f64,
    pub window_high: f64,
    /// The window constant actually used, solved or overridden.
    #[serde(rename = "L_nu")]
    pub l_nu: f64,
    pub l_nu_label: String,
    pub failure_prob: f64,
    pub n_min: f64,
    pub valid: bool,
}

/// Risk bound over `Lambda_nu(L1, L2)` with the localized constants
/// `kappa0 = 2^{-1/2}`, `beta0 = C_nu^-2 L2^2 L1^-4 / 8`.
///
/// Without an override, `L_nu` is the value for which the upper window edge
/// `L_nu (n / ln n)^{1/(2(nu+1))}` equals `n beta0^2 / 400^2`, i.e. the
/// largest dimension meeting the sample-size condition.
pub fn theorem4_bound(
    cls: &LambdaClass,
    sigma: f64,
    dim: usize,
    n: usize,
    x: f64,
    constants: &UnspecifiedConstants,
) -> Result<Theorem4Bound> {
    nonnegative("sigma", sigma)?;
    positive("x", x)?;
    if dim == 0 || n < 2 {
        return Err(LabError::Parameter("need D >= 1 and n >= 2".into()));
    }
    let c = cls.c_nu()?;
    let kappa0 = 0.5f64.sqrt();
    let beta0 = cls.l2 * cls.l2 / (8.0 * c * c * cls.l1.powi(4));
    let (d, nf) = (dim as f64, n as f64);
    let growth = (nf / nf.ln()).powf(1.0 / (2.0 * (cls.nu + 1.0)));
    let d_max = nf * beta0 * beta0 / SAMPLE_FACTOR;
    let l_nu = constants.l_nu.unwrap_or(d_max / growth);
    let window_low = (2.0 * 2f64.sqrt() * cls.l1 / cls.l2).powf(1.0 / cls.nu);
    let window_high = l_nu * growth;
    let n_min = SAMPLE_FACTOR * d / (beta0 * beta0);
    Ok(Theorem4Bound {
        risk_bound: theorem_a_prefactor(beta0, kappa0) * sigma * sigma * d * x / nf,
        kappa0,
        beta0,
        window_low,
        window_high,
        l_nu,
        l_nu_label: if constants.l_nu.is_some() { UNSPECIFIED_LABEL.into() } else { "solved".into() },
        failure_prob: (-beta0 * beta0 * nf / 4.0).exp() + 1.0 / (nf * nf) + 2.0 / x,
        n_min,
        valid: window_low <= d && d <= window_high && nf >= n_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRadii {
    /// Upper deviation radius: `sqrt(2 s^2 x/n) + eps mean + (1/eps + 1/3) b x/n`.
    pub bousquet: f64,
    /// Lower deviation radius: `sqrt(2 s^2 x/n) + eps mean + (1/eps + 1) b x/n`.
    pub klein_rio: f64,
}

pub fn concentration_tail_bounds(sigma_f_sq: f64, b: f64, mean_sup: f64, n: usize, x: f64, epsilon: f64) -> Result<TailRadii> {
    nonnegative("sigma_F^2", sigma_f_sq)?;
    nonnegative("b", b)?;
    nonnegative("mean", mean_sup)?;
    nonnegative("x", x)?;
    positive("epsilon", epsilon)?;
    if n == 0 {
        return Err(LabError::Parameter("n must be at least 1".into()));
    }
    let nf = n as f64;
    let common = (2.0 * sigma_f_sq * x / nf).sqrt() + epsilon * mean_sup;
    Ok(TailRadii {
        bousquet: common + (1.0 / epsilon + 1.0 / 3.0) * b * x / nf,
        klein_rio: common + (1.0 / epsilon + 1.0) * b * x / nf,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RioLowerBound {
    pub bound: f64,
    pub valid: bool,
    #[serde(rename = "A1_minus")]
    pub a1_minus: f64,
    pub a1_minus_label: String,
}

/// `(1 - kappa_n A_{1,-}) sqrt(E ||.||^2)`, valid when `kappa_n in (0, 1)`,
/// `kappa_n^2 E||.||^2 >= sigma^2/n` and `kappa_n^2 sqrt(E||.||^2) >= b/n`.
pub fn rio_lower_mean_bound(mean_sq: f64, sigma_sq: f64, b: f64, n: usize, kappa_n: f64, a1_minus: f64) -> Result<RioLowerBound> {
    nonnegative("mean_sq", mean_sq)?;
    nonnegative("sigma^2", sigma_sq)?;
    nonnegative("b", b)?;
    nonnegative("kappa_n", kappa_n)?;
    positive("A1_minus", a1_minus)?;
    if n == 0 {
        return Err(LabError::Parameter("n must be at least 1".into()));
    }
    let nf = n as f64;
    let k2 = kappa_n * kappa_n;
    let valid = kappa_n > 0.0 && kappa_n < 1.0 && k2 * mean_sq >= sigma_sq / nf && k2 * mean_sq.sqrt() >= b / nf;
    Ok(RioLowerBound {
        bound: (1.0 - kappa_n * a1_minus) * mean_sq.sqrt(),
        valid,
        a1_minus,
        a1_minus_label: UNSPECIFIED_LABEL.into(),
    })
}

/// Smallest `kappa_n` meeting both conditions of [`rio_lower_mean_bound`].
pub fn rio_min_kappa(mean_sq: f64, sigma_sq: f64, b: f64, n: usize) -> f64 {
    let nf = n as f64;
    (sigma_sq / (nf * mean_sq)).sqrt().max((b / (nf * mean_sq.sqrt())).sqrt())
}

/// Deviation envelope for `||A||` at confidence `x = alpha ln n` when
/// `sup_s ||s||_inf^2 <= u^2 D` on the unit ball:
/// `u D / sqrt(n) + u sqrt(2 D x / n) + u^2 D x / (3 n)`; exceeded with
/// probability at most `n^-alpha`.
pub fn opnorm_envelope(u: f64, dim: usize, n: usize, alpha: f64) -> f64 {
    let (d, nf) = (dim as f64, n as f64);
    let x = alpha * nf.ln();
    u * d / nf.sqrt() + u * (2.0 * d * x / nf).sqrt() + u * u * d * x / (3.0 * nf)
}

/// `(4 (D+1)^{nu+1} / (nu+1)) sqrt(3 ln n / n)`, the weighted-l1 counterpart.
pub fn lambda_opnorm_envelope(nu: f64, dim: usize, n: usize) -> f64 {
    let (d, nf) = (dim as f64, n as f64);
    4.0 * (d + 1.0).powf(nu + 1.0) / (nu + 1.0) * (3.0 * nf.ln() / nf).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs(beta0: f64, kappa0: f64, sigma: f64, dim: usize, n: usize, x: f64) -> BoundInputs {
        BoundInputs { beta0, kappa0, sigma, dim, n, x, omega0_fail: None }
    }

    #[test]
    fn theorem_a_examples() {
        let b = theorem_a_bound(&inputs(1.0, 1.0, 1.5, 8, 1000, 3.0)).unwrap();
        assert!((b.risk_bound - 256.0 * 2.25 * 8.0 * 3.0 / 1000.0).abs() < 1e-12);
        assert_eq!(b.n_min, 160_000.0 * 8.0);
        assert!(!b.valid);

        // Histogram plug-in beta0 = 1/D, kappa0 = 1: cubic in D.
        let r = |d: usize| theorem_a_bound(&inputs(1.0 / d as f64, 1.0, 1.0, d, 10, 1.0)).unwrap().risk_bound;
        assert!((r(20) / r(10) - 8.0).abs() < 1e-12);

        let mut with_omega = inputs(0.5, 0.5, 1.0, 4, 100, 10.0);
        with_omega.omega0_fail = Some(0.01);
        let b = theorem_a_bound(&with_omega).unwrap();
        assert!((b.failure_prob - ((-0.25f64 * 100.0 / 4.0).exp() + 0.1 + 0.01)).abs() < 1e-15);
    }

    #[test]
    fn cli_example_arithmetic() {
        let b = theorem_a_bound(&inputs(0.125, 0.9, 1.0, 8, 10_000, 10.0)).unwrap();
        let pre = (16.0 / (0.125 * 0.81f64)).powi(2);
        assert!((b.risk_bound - pre * 8.0 * 10.0 / 10_000.0).abs() < 1e-9);
        assert_eq!(b.n_min, 160_000.0 * 8.0 / 0.015625);
    }

    #[test]
    fn fejer_plugin_slope() {
        let e = |d| fejer_plugin_envelope(1.0, d, 20_000, 1.0);
        assert!(((e(64) / e(16)).ln() / 4f64.ln() - 2.5).abs() < 1e-12);
        let via_a = theorem_a_bound(&inputs(16f64.powf(-0.75), 1.0, 1.0, 16, 20_000, 1.0)).unwrap().risk_bound;
        assert!((via_a - e(16)).abs() < 1e-9 * e(16));
    }

    #[test]
    fn theorem2_examples() {
        let c = UnspecifiedConstants::default();
        let i = theorem2_interval(1.0, 21, 2000, 0.3, &c).unwrap();
        assert!((i.low - 0.00735).abs() < 1e-15 && (i.high - 0.01365).abs() < 1e-15);
        let z = theorem2_interval(2.0, 5, 100, 0.0, &c).unwrap();
        assert_eq!((z.low, z.high), (0.1, 0.1));
        let tight = UnspecifiedConstants { a_minus: 1.0, a_plus: 1.0, ..c };
        assert!(!theorem2_interval(1.0, 21, 2000, 0.3, &tight).unwrap().in_dimension_window);
        assert!(theorem2_interval(1.0, 21, 2000, 0.3, &c).unwrap().in_dimension_window);
        assert!(theorem2_interval(1.0, 21, 2000, 1.0, &c).is_err());
    }

    #[test]
    fn theorem4_examples() {
        let cls = LambdaClass::new(1.0, 1.0, 1.0).unwrap();
        let t = theorem4_bound(&cls, 1.0, 3, 10_000, 5.0, &UnspecifiedConstants::default()).unwrap();
        assert!((t.kappa0.powi(-4) - 4.0).abs() < 1e-12);
        assert!((t.beta0 - 0.046197).abs() < 1e-6);
        let pre = theorem_a_prefactor(t.beta0, t.kappa0);
        assert!((pre / 4.80e5 - 1.0).abs() < 1e-3, "{pre}");
        assert!((t.window_low - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        // Below the lower window edge.
        let low = theorem4_bound(&cls, 1.0, 2, 10_000_000_000, 5.0, &UnspecifiedConstants::default()).unwrap();
        assert!(!low.valid);
        assert_eq!(t.l_nu_label, "solved");
        // The solved window edge reproduces the sample-size condition.
        let n = 1_000_000_000_000usize;
        let s = theorem4_bound(&cls, 1.0, 3, n, 5.0, &UnspecifiedConstants::default()).unwrap();
        assert!((s.window_high - n as f64 * s.beta0 * s.beta0 / SAMPLE_FACTOR).abs() < 1e-6 * s.window_high);
        assert!(s.valid);
        assert!(theorem4_bound(&LambdaClass::new(0.5, 1.0, 1.0).unwrap(), 1.0, 3, 100, 1.0, &UnspecifiedConstants::default()).is_err());
    }

    #[test]
    fn tail_examples() {
        let r = concentration_tail_bounds(1.0, 1.0, 0.0, 100, 1.0, 1.0).unwrap();
        assert!((r.bousquet - 0.154755).abs() < 1e-6);
        assert!((r.klein_rio - (0.02f64.sqrt() + 0.02)).abs() < 1e-15);
        let z = concentration_tail_bounds(3.0, 2.0, 0.7, 50, 0.0, 0.5).unwrap();
        assert_eq!((z.bousquet, z.klein_rio), (0.35, 0.35));
        // Bounded-problem plug-ins sigma^2 = 4A^2, b = 2 A u sqrt(D).
        let (a, u, d) = (1.0f64, 2f64.sqrt(), 21.0f64);
        let r = concentration_tail_bounds(4.0 * a * a, 2.0 * a * u * d.sqrt(), 0.1, 2000, 2.0, 1.0).unwrap();
        assert!(r.bousquet.is_finite() && r.klein_rio > r.bousquet);
    }

    #[test]
    fn rio_examples() {
        let r = rio_lower_mean_bound(0.04, 1.0, 1.0, 100, 0.0, 1.0).unwrap();
        assert_eq!(r.bound, 0.2);
        assert!(!r.valid);
        assert_eq!(r.a1_minus_label, UNSPECIFIED_LABEL);
        let (d, n, cm) = (21.0, 2000usize, 1.0);
        let mean_sq = d / n as f64 * cm;
        let k = rio_min_kappa(mean_sq, 4.0, 2.0 * 2f64.sqrt() * d.sqrt(), n);
        let ok = rio_lower_mean_bound(mean_sq, 4.0, 2.0 * 2f64.sqrt() * d.sqrt(), n, k * 1.0001, 1.0).unwrap();
        assert!(ok.valid);
        assert!((ok.bound - (1.0 - k * 1.0001) * (mean_sq).sqrt()).abs() < 1e-15);
        assert!(!rio_lower_mean_bound(mean_sq, 4.0, 1.0, n, k * 0.9, 1.0).unwrap().valid);
    }

    #[test]
    fn envelopes() {
        let e = opnorm_envelope(2f64.sqrt(), 17, 2000, 3.0);
        let x = 3.0 * 2000f64.ln();
        let expect = 2f64.sqrt() * 17.0 / 2000f64.sqrt() + 2f64.sqrt() * (34.0 * x / 2000.0).sqrt() + 2.0 * 17.0 * x / 6000.0;
        assert!((e - expect).abs() < 1e-14);
        assert!((lambda_opnorm_envelope(1.0, 3, 100) - 4.0 * 16.0 / 2.0 * (3.0 * 100f64.ln() / 100.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn no_panic_on_many_valid_inputs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let constants = UnspecifiedConstants::default();
        for _ in 0..100_000 {
            let dim = rng.random_range(1..1000usize);
            let n = rng.random_range(2..100_000_000usize);
            let b = inputs(rng.random_range(1e-4..=1.0), rng.random_range(1e-3..=1.0), rng.random_range(0.0..10.0), dim, n, rng.random_range(1e-3..100.0));
            let a = theorem_a_bound(&b).unwrap();
            assert!(a.risk_bound.is_finite() && a.failure_prob.is_finite());
            let i = theorem2_interval(rng.random_range(0.0..10.0), dim, n, rng.random_range(0.0..0.999), &constants).unwrap();
            assert!(i.low.is_finite() && i.high.is_finite());
            assert!(fejer_plugin_envelope(1.0, dim, n, 1.0).is_finite());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn theorem_a_is_monotone(
            beta0 in 0.01f64..1.0, kappa0 in 0.05f64..1.0, sigma in 0.1f64..5.0,
            dim in 1usize..200, n in 10usize..1_000_000, x in 1.0f64..50.0, bump in 1.01f64..2.0,
        ) {
            let base = inputs(beta0, kappa0, sigma, dim, n, x);
            let r = theorem_a_bound(&base).unwrap().risk_bound;
            let risk = |b: BoundInputs| theorem_a_bound(&b).unwrap().risk_bound;
            let more_x = risk(BoundInputs { x: x * bump, ..base });
            let more_d = risk(BoundInputs { dim: dim + 1, ..base });
            let more_sigma = risk(BoundInputs { sigma: sigma * bump, ..base });
            let more_n = risk(BoundInputs { n: n + 1, ..base });
            let more_beta = risk(BoundInputs { beta0: (beta0 * bump).min(1.0), ..base });
            let more_kappa = risk(BoundInputs { kappa0: (kappa0 * bump).min(1.0), ..base });
            prop_assert!(more_x > r && more_d > r && more_sigma > r);
            prop_assert!(more_n < r && more_beta <= r && more_kappa <= r);
        }

        #[test]
        fn theorem2_is_symmetric(cm in 0.0f64..10.0, dim in 1usize..500, n in 2usize..1_000_000, eps in 0.0f64..0.999) {
            let i = theorem2_interval(cm, dim, n, eps, &UnspecifiedConstants::default()).unwrap();
            prop_assert!(((i.high - i.center) - (i.center - i.low)).abs() <= 1e-12 * i.center.max(1e-300));
            prop_assert!(i.low <= i.center && i.center <= i.high);
        }

        #[test]
        fn calculators_are_total(
            a in 0.0f64..1e3, b in 0.0f64..1e3, c in 0.0f64..1e3, n in 1usize..10_000_000,
            x in 0.0f64..100.0, eps in 1e-6f64..10.0, kappa in 0.0f64..1.0,
            nu in 0.51f64..4.0, l1 in 1e-3f64..10.0, l2 in 1e-3f64..10.0, dim in 1usize..1000,
        ) {
            let t = concentration_tail_bounds(a, b, c, n, x, eps).unwrap();
            prop_assert!(t.bousquet.is_finite() && t.klein_rio >= t.bousquet);
            let r = rio_lower_mean_bound(a, b, c, n, kappa, 1.0).unwrap();
            prop_assert!(r.bound.is_finite());
            let cls = LambdaClass::new(nu, l1, l2).unwrap();
            let t4 = theorem4_bound(&cls, 1.0, dim, n.max(2), x.max(1e-3), &UnspecifiedConstants::default()).unwrap();
            prop_assert!(t4.risk_bound.is_finite() && t4.failure_prob.is_finite());
            prop_assert!(opnorm_envelope(1.0, dim, n.max(2), 3.0).is_finite());
        }
    }
}
