//! Small-ball probabilities and the constants `(kappa0, beta0)` of a model.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{Dictionary, DictionaryKind};
use crate::error::{LabError, Result};
use crate::model::{sup_ratio, ModelFunction};
use crate::quadrature;

pub const DEFAULT_RANDOM_DIRECTIONS: usize = 512;

/// `P(|f(X)| >= kappa ||f||_2)` under the uniform design.
pub fn smallball_probability(f: &ModelFunction, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(LabError::Parameter(format!("kappa must be positive, got {kappa}")));
    }
    if f.is_zero() {
        return Err(LabError::ZeroFunction);
    }
    Ok(f.superlevel_measure(kappa * f.l2()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallBallEstimate {
    pub kappa0: f64,
    /// Minimum small-ball probability over the probed directions.
    pub beta0_upper: f64,
    /// Paley-Zygmund: `(1 - kappa0^2) / R_m^2`.
    pub beta0_lower: f64,
    pub probed_directions: usize,
    pub worst_direction: ModelFunction,
    pub worst_tag: String,
}

impl SmallBallEstimate {
    /// `V0 = beta0^-2 kappa0^-4` at the upper and at the lower `beta0`.
    pub fn v0_bracket(&self) -> (f64, f64) {
        let k4 = self.kappa0.powi(4);
        (1.0 / (self.beta0_upper.powi(2) * k4), 1.0 / (self.beta0_lower.powi(2) * k4))
    }

    pub fn row(&self) -> SmallBallRow {
        let dict = self.worst_direction.dictionary();
        SmallBallRow {
            kappa0: self.kappa0,
            beta0_upper: self.beta0_upper,
            beta0_lower: self.beta0_lower,
            dim: dict.dim(),
            kind: dict.kind(),
            worst_direction_tag: self.worst_tag.clone(),
        }
    }
}

/// CSV record for one estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallBallRow {
    pub kappa0: f64,
    pub beta0_upper: f64,
    pub beta0_lower: f64,
    #[serde(rename = "D")]
    pub dim: usize,
    pub kind: DictionaryKind,
    pub worst_direction_tag: String,
}

pub fn write_smallball_csv<W: Write>(rows: &[SmallBallRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Uniform direction on the coefficient sphere.
fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Probes the basis functions, the family's adversarial directions and
/// `n_random` seeded random directions; the smallest probability is a
/// certified upper bound on `beta0(kappa0)`.
pub fn estimate_beta0(dictionary: &Dictionary, kappa0: f64, n_random: usize, seed: u64) -> Result<SmallBallEstimate> {
    if !(kappa0 > 0.0 && kappa0 < 1.0) {
        return Err(LabError::Parameter(format!("kappa0 must lie in (0, 1), got {kappa0}")));
    }
    let d = dictionary.dim();
    let basis = dictionary.basis();
    let mut probes: Vec<(String, Vec<f64>)> = (0..d)
        .map(|k| {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            (basis.label(k), e)
        })
        .collect();
    probes.extend(basis.adversarial_directions().into_iter().map(|dir| (dir.tag, dir.coeffs)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    probes.extend((0..n_random).map(|i| (format!("random-{i}"), random_direction(&mut rng, d))));

    let probabilities = probes
        .par_iter()
        .map(|(_, c)| smallball_probability(&ModelFunction::new(dictionary.clone(), c.clone())?, kappa0))
        .collect::<Result<Vec<f64>>>()?;
    // First index wins ties so the result does not depend on scheduling.
    let (worst, &beta0_upper) = probabilities
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("at least one probe");
    let r = sup_ratio(dictionary);
    let (tag, coeffs) = probes.swap_remove(worst);
    Ok(SmallBallEstimate {
        kappa0,
        beta0_upper,
        beta0_lower: (1.0 - kappa0 * kappa0) / (r * r),
        probed_directions: probabilities.len(),
        worst_direction: ModelFunction::new(dictionary.clone(), coeffs)?,
        worst_tag: tag,
    })
}

/// Infima over a probe set of the quantities that cap `(beta0, kappa0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop1Report {
    /// `inf P(f != 0)`, an upper bound on `beta0`.
    pub support_inf: f64,
    /// `inf ||f||_inf / ||f||_2`, an upper bound on `kappa0`.
    pub kappa0_cap: f64,
    /// `(q, inf (||f||_q / ||f||_2)^q)`, each an upper bound on `beta0 kappa0^q`.
    pub moment_caps: Vec<(f64, f64)>,
    pub constants_in_model: bool,
    pub probes_used: usize,
    pub probes_skipped: usize,
}

impl Prop1Report {
    /// Largest `beta0` compatible with the caps at a given `kappa0`.
    pub fn beta0_cap(&self, kappa0: f64) -> f64 {
        self.moment_caps
            .iter()
            .map(|&(q, cap)| cap / kappa0.powf(q))
            .fold(self.support_inf, f64::min)
    }

    /// `beta0 kappa0^2 <= 1`, and `kappa0 <= 1` when constants belong to the model.
    pub fn universal_checks(&self, beta0: f64, kappa0: f64) -> bool {
        beta0 * kappa0 * kappa0 <= 1.0 + 1e-12 && (!self.constants_in_model || kappa0 <= 1.0 + 1e-12)
    }
}

/// Uniform measure of `{f != 0}`: exact for piecewise-constant bases, and 1
/// for any nonzero analytic piece otherwise.
fn support_measure(f: &ModelFunction) -> f64 {
    let dict = f.dictionary();
    let basis = dict.basis();
    let width = dict.domain().width();
    let scale = f.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut buf = vec![0.0; dict.dim()];
    dict.cells()
        .into_iter()
        .enumerate()
        .filter(|&(i, (a, b))| {
            if basis.piecewise_constant() {
                basis.eval_in_cell(i, 0.5 * (a + b), &mut buf);
            }
            // A polynomial or trig piece is either identically zero or zero on
            // a null set; its coefficients decide which.
            let local = if basis.piecewise_constant() {
                buf.iter().zip(f.coeffs()).map(|(p, c)| p * c).sum::<f64>().abs()
            } else {
                let mut energy = 0.0;
                for x in [a, 0.5 * (a + b), b, a + 0.318 * (b - a), a + 0.771 * (b - a)] {
                    energy += basis.combine_in_cell(i, f.coeffs(), x).abs();
                }
                energy
            };
            local > 1e-12 * scale
        })
        .map(|(_, (a, b))| (b - a) / width)
        .sum()
}

/// True when the constant function belongs to the span (checked by projection).
pub fn contains_constants(dictionary: &Dictionary) -> bool {
    let d = dictionary.dim();
    let width = dictionary.domain().width();
    let basis = dictionary.basis();
    let mut means = vec![0.0; d];
    let mut buf = vec![0.0; d];
    for (i, (a, b)) in dictionary.cells().into_iter().enumerate() {
        let panels = ((16 * d) as f64 * (b - a) / width).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            quadrature::gauss_panel(lo, lo + h, |x, w| {
                basis.eval_in_cell(i, x, &mut buf);
                for (m, v) in means.iter_mut().zip(&buf) {
                    *m += w * v / width;
                }
            });
        }
    }
    (means.iter().map(|m| m * m).sum::<f64>() - 1.0).abs() < 1e-8
}

pub fn prop1_upper_bounds(dictionary: &Dictionary, probes: &[ModelFunction], q_list: &[f64]) -> Result<Prop1Report> {
    let mut support_inf: f64 = 1.0;
    let mut kappa0_cap = f64::INFINITY;
    let mut moment_caps: Vec<(f64, f64)> = q_list.iter().map(|&q| (q, f64::INFINITY)).collect();
    let mut used = 0;
    let mut skipped = 0;
    for f in probes {
        if f.dictionary() != dictionary {
            return Err(LabError::Parameter("probe does not belong to the dictionary".into()));
        }
        if f.is_zero() {
            log::warn!("zero probe skipped");
            skipped += 1;
            continue;
        }
        used += 1;
        let l2 = f.l2();
        support_inf = support_inf.min(support_measure(f));
        kappa0_cap = kappa0_cap.min(f.sup() / l2);
        for (q, cap) in moment_caps.iter_mut() {
            *cap = cap.min((f.lq_norm(*q)? / l2).powf(*q));
        }
    }
    if used == 0 {
        return Err(LabError::Parameter("probe set has no nonzero function".into()));
    }
    Ok(Prop1Report {
        support_inf,
        kappa0_cap,
        moment_caps,
        constants_in_model: contains_constants(dictionary),
        probes_used: used,
        probes_skipped: skipped,
    })
}

/// `sum_k k^nu |beta_k|` with 1-based `k`.
pub fn lambda_norm_coeffs(coeffs: &[f64], nu: f64) -> f64 {
    coeffs.iter().enumerate().map(|(i, c)| ((i + 1) as f64).powf(nu) * c.abs()).sum()
}

pub fn lambda_norm(f: &ModelFunction, nu: f64) -> Result<f64> {
    f.dictionary().require_fourier()?;
    Ok(lambda_norm_coeffs(f.coeffs(), nu))
}

/// Functions with `sum k^nu |beta_k| <= l1` and `||f||_inf >= l2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaClass {
    pub nu: f64,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
}

impl LambdaClass {
    pub fn new(nu: f64, l1: f64, l2: f64) -> Result<Self> {
        if !(nu > 0.0 && l1 > 0.0 && l2 > 0.0) {
            return Err(LabError::Parameter(format!("Lambda class needs nu, L1, L2 > 0, got ({nu}, {l1}, {l2})")));
        }
        Ok(LambdaClass { nu, l1, l2 })
    }

    pub fn c_nu(&self) -> Result<f64> {
        c_nu(self.nu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaMembership {
    pub member: bool,
    pub lambda_norm: f64,
    pub sup: f64,
    /// `L1 - lambda_norm`.
    pub norm_margin: f64,
    /// `sup - L2`.
    pub sup_margin: f64,
}

pub fn lambda_membership(f: &ModelFunction, cls: &LambdaClass) -> Result<LambdaMembership> {
    let norm = lambda_norm(f, cls.nu)?;
    let sup = f.sup();
    Ok(LambdaMembership {
        member: norm <= cls.l1 && sup >= cls.l2,
        lambda_norm: norm,
        sup,
        norm_margin: cls.l1 - norm,
        sup_margin: sup - cls.l2,
    })
}

/// `C_nu = sum_{k >= 1} k^{-2 nu}` for `nu > 1/2`, by Euler-Maclaurin
/// (remainder far below `1e-12`).
pub fn c_nu(nu: f64) -> Result<f64> {
    if !(nu > 0.5) {
        return Err(LabError::Divergent(nu));
    }
    zeta(2.0 * nu)
}

/// `sum_{k >= 1} k^{-s}` for `s > 1`.
fn zeta(s: f64) -> Result<f64> {
    const N: usize = 1000;
    let head: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    let n = N as f64;
    let tail = n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    let value = head + tail;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(LabError::Numeric(format!("series with exponent {s} overflowed")))
    }
}

/// Uniform small-ball level over the class: `C_nu^-2 L2^2 L1^-4 (1 - kappa0^2) / 4`.
pub fn prop4_smallball_lower(cls: &LambdaClass, kappa0: f64) -> Result<f64> {
    if !(kappa0 > 0.0 && kappa0 < 1.0) {
        return Err(LabError::Parameter(format!("kappa0 must lie in (0, 1), got {kappa0}")));
    }
    let c = cls.c_nu()?;
    Ok(cls.l2 * cls.l2 * (1.0 - kappa0 * kappa0) / (4.0 * c * c * cls.l1.powi(4)))
}

/// Largest `Q` such that `sum k^{2 gamma} beta_k^2 <= Q` forces
/// `sum k^nu |beta_k| <= L1`: `L1^2 / sum k^{2(nu - gamma)}`.
pub fn sobolev_threshold(gamma: f64, nu: f64, l1: f64) -> Result<f64> {
    if !(gamma > nu + 0.5) {
        return Err(LabError::Parameter(format!("need gamma > nu + 1/2, got gamma = {gamma}, nu = {nu}")));
    }
    Ok(l1 * l1 / zeta(2.0 * (gamma - nu))?)
}

pub fn sobolev_inclusion_check(gamma: f64, q: f64, nu: f64, l1: f64) -> Result<bool> {
    if q < 0.0 {
        return Err(LabError::Parameter(format!("Sobolev radius must be nonnegative, got {q}")));
    }
    Ok(q <= sobolev_threshold(gamma, nu, l1)?)
}
