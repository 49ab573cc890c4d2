//! Random-design regression problems and the least-squares estimator, solved
//! through the centered Gram system `(I + A) beta_hat = E`.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::basis::fourier_sum;
use crate::basis::{make_dictionary, Dictionary, DictionaryKind, DictionarySpec};
use crate::error::{LabError, Result};
use crate::model::ModelFunction;
use crate::quadrature;
use crate::smallball::{lambda_membership, lambda_norm_coeffs, LambdaClass, LambdaMembership};

/// Smallest eigenvalue of the empirical Gram matrix below which the fit is
/// reported unsolved.
pub const SINGULAR_EIGENVALUE: f64 = 1e-10;
pub const DEFAULT_STUDENT_DOF: f64 = 2.5;
/// `E[(1 + cos^2)^2]` under a uniform angle.
const HETERO_SECOND_MOMENT: f64 = 19.0 / 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Target {
    /// `s* = sum_k coeffs[k] phi_k`.
    InModel { coeffs: Vec<f64> },
    /// `s* = sum_{k <= truncation} amplitude k^-decay phi_k` in the Fourier
    /// basis of the angle.
    FourierSeries { decay: f64, amplitude: f64, truncation: usize },
    /// Piecewise linear through `(u, value)` knots, `u` relative in `[0, 1]`.
    /// A repeated `u` makes a jump.
    PiecewiseSmooth { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSigma {
    Constant { sigma: f64 },
    /// `sigma(x) = sigma0 (1 + cos^2 theta) / sqrt(19/8)`, so `E[sigma^2] = sigma0^2`.
    Heteroscedastic { sigma0: f64, tag: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseLaw {
    Gaussian,
    /// Uniform on `[-sqrt3, sqrt3]`.
    BoundedUniform,
    Rademacher,
    /// Student t rescaled to unit variance; `dof > 2`.
    StudentT { dof: f64 },
}

impl NoiseLaw {
    pub fn student_default() -> Self {
        NoiseLaw::StudentT { dof: DEFAULT_STUDENT_DOF }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, NoiseLaw::BoundedUniform | NoiseLaw::Rademacher)
    }
}

/// Serializable description of a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub dictionary: DictionarySpec,
    pub target: Target,
    pub noise_sigma: NoiseSigma,
    pub noise_law: NoiseLaw,
}

/// `Y = s*(X) + sigma(X) eps` with `X` uniform on the dictionary's domain.
#[derive(Debug, Clone)]
pub struct RegressionProblem {
    spec: ProblemSpec,
    dictionary: Dictionary,
    target_coeffs: Vec<f64>,
}

impl RegressionProblem {
    pub fn new(spec: ProblemSpec) -> Result<Self> {
        let dictionary = make_dictionary(&spec.dictionary)?;
        let target_coeffs = match &spec.target {
            Target::InModel { coeffs } => {
                if coeffs.len() != dictionary.dim() {
                    return Err(LabError::Parameter(format!(
                        "in-model target has {} coefficients, dictionary has D = {}",
                        coeffs.len(),
                        dictionary.dim()
                    )));
                }
                coeffs.clone()
            }
            Target::FourierSeries { decay, amplitude, truncation } => {
                if *truncation == 0 || !decay.is_finite() || !amplitude.is_finite() {
                    return Err(LabError::Parameter("Fourier-series target needs truncation >= 1 and finite decay".into()));
                }
                (1..=*truncation).map(|k| amplitude * (k as f64).powf(-decay)).collect()
            }
            Target::PiecewiseSmooth { knots } => {
                let ok = knots.len() >= 2
                    && knots.first().unwrap().0 == 0.0
                    && knots.last().unwrap().0 == 1.0
                    && knots.windows(2).all(|w| w[0].0 <= w[1].0)
                    && knots.iter().all(|(_, v)| v.is_finite());
                if !ok {
                    return Err(LabError::Parameter(
                        "piecewise target knots must be sorted in u, start at u = 0 and end at u = 1".into(),
                    ));
                }
                Vec::new()
            }
        };
        match spec.noise_sigma {
            NoiseSigma::Constant { sigma } if !(sigma >= 0.0) => {
                return Err(LabError::Parameter(format!("noise level must be nonnegative, got {sigma}")))
            }
            NoiseSigma::Heteroscedastic { sigma0, ref tag } => {
                if !(sigma0 >= 0.0) || tag != "cos2" {
                    return Err(LabError::Parameter(format!(
                        "heteroscedastic preset needs sigma0 >= 0 and tag \"cos2\", got ({sigma0}, {tag:?})"
                    )));
                }
            }
            _ => {}
        }
        if let NoiseLaw::StudentT { dof } = spec.noise_law {
            if !(dof > 2.0) {
                return Err(LabError::Parameter(format!("Student t needs dof > 2 for a finite variance, got {dof}")));
            }
        }
        Ok(RegressionProblem { spec, dictionary, target_coeffs })
    }

    /// Coefficients of `s*` in the problem's own basis order, when the target
    /// is a finite series (in-model or Fourier series).
    pub fn target_coefficients(&self) -> Option<&[f64]> {
        match self.spec.target {
            Target::PiecewiseSmooth { .. } => None,
            _ => Some(&self.target_coeffs),
        }
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }
    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    /// Same problem on a dictionary of another dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.dictionary = spec.dictionary.with_dim(dim);
        RegressionProblem::new(spec)
    }

    pub fn target_value(&self, x: f64) -> f64 {
        let domain = self.dictionary.domain();
        match &self.spec.target {
            Target::InModel { .. } => {
                let basis = self.dictionary.basis();
                basis.combine_in_cell(basis.cell_of(x), &self.target_coeffs, x)
            }
            Target::FourierSeries { .. } => fourier_sum(&self.target_coeffs, domain.angle(x)),
            Target::PiecewiseSmooth { knots } => piecewise_linear(knots, domain.relative(x)),
        }
    }

    pub fn sigma_at(&self, x: f64) -> f64 {
        match &self.spec.noise_sigma {
            NoiseSigma::Constant { sigma } => *sigma,
            NoiseSigma::Heteroscedastic { sigma0, .. } => {
                let c = self.dictionary.domain().angle(x).cos();
                sigma0 * (1.0 + c * c) / HETERO_SECOND_MOMENT.sqrt()
            }
        }
    }

    /// `E[sigma^2(X)]`.
    pub fn sigma_sq_mean(&self) -> f64 {
        match &self.spec.noise_sigma {
            NoiseSigma::Constant { sigma } => sigma * sigma,
            NoiseSigma::Heteroscedastic { sigma0, .. } => sigma0 * sigma0,
        }
    }

    /// Places where the target is not smooth, in absolute coordinates.
    fn target_breaks(&self) -> Vec<f64> {
        match &self.spec.target {
            Target::PiecewiseSmooth { knots } => {
                knots.iter().map(|&(u, _)| self.dictionary.domain().from_relative(u)).collect()
            }
            _ => Vec::new(),
        }
    }

    fn noise_draw(&self, rng: &mut ChaCha8Rng, student: Option<&StudentT<f64>>) -> f64 {
        match self.spec.noise_law {
            NoiseLaw::Gaussian => StandardNormal.sample(rng),
            NoiseLaw::BoundedUniform => rng.random_range(-3f64.sqrt()..3f64.sqrt()),
            NoiseLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseLaw::StudentT { dof } => student.expect("built with dof").sample(rng) * ((dof - 2.0) / dof).sqrt(),
        }
    }
}

fn piecewise_linear(knots: &[(f64, f64)], u: f64) -> f64 {
    // Right-continuous at jumps.
    let j = knots.partition_point(|&(k, _)| k <= u);
    if j == 0 {
        return knots[0].1;
    }
    if j == knots.len() {
        return knots[j - 1].1;
    }
    let (u0, v0) = knots[j - 1];
    let (u1, v1) = knots[j];
    v0 + (v1 - v0) * (u - u0) / (u1 - u0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y"])?;
        for (x, y) in self.x.iter().zip(&self.y) {
            w.write_record([format!("{x:e}"), format!("{y:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `n` i.i.d. pairs, reproducible from `seed`.
pub fn sample(problem: &RegressionProblem, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(LabError::Parameter("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let student = match problem.spec.noise_law {
        NoiseLaw::StudentT { dof } => Some(StudentT::new(dof).map_err(|e| LabError::Parameter(e.to_string()))?),
        _ => None,
    };
    let domain = problem.dictionary.domain();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = domain.from_relative(rng.random::<f64>());
        let eps = problem.noise_draw(&mut rng, student.as_ref());
        x.push(xi);
        y.push(problem.target_value(xi) + problem.sigma_at(xi) * eps);
    }
    Ok(Dataset { x, y })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    #[serde(rename = "Cm_sq")]
    pub cm_sq: f64,
    pub sigma_sq_mean: f64,
    pub approx_err_sq: f64,
    /// `(1/D) sum_k Var(psi_m phi_k)`.
    #[serde(rename = "Cm_sq_varform")]
    pub cm_sq_varform: f64,
}

/// Integration pieces: cell boundaries merged with target breakpoints.
fn pieces(problem: &RegressionProblem) -> Vec<(usize, f64, f64)> {
    let breaks = problem.target_breaks();
    let mut out = Vec::new();
    for (i, (a, b)) in problem.dictionary.cells().into_iter().enumerate() {
        let mut knots = vec![a, b];
        knots.extend(breaks.iter().copied().filter(|&t| t > a && t < b));
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        out.extend(knots.windows(2).map(|w| (i, w[0], w[1])));
    }
    out
}

fn panels_for(dim: usize, len: f64, width: f64) -> usize {
    ((16 * dim) as f64 * len / width).ceil().max(1.0) as usize
}

/// `beta_m = (<s*, phi_k>)_k` and the oracle constants.
pub fn project_target(problem: &RegressionProblem) -> Result<(Vec<f64>, OracleReport)> {
    let dict = &problem.dictionary;
    let d = dict.dim();
    let width = dict.domain().width();
    let basis = dict.basis();
    let sigma_sq_mean = problem.sigma_sq_mean();
    let exact_fourier = matches!(problem.spec.target, Target::FourierSeries { .. }) && dict.kind() == DictionaryKind::Fourier;

    let (beta_m, approx_err_sq) = match &problem.spec.target {
        Target::InModel { coeffs } => (coeffs.clone(), 0.0),
        _ if exact_fourier => {
            let t = &problem.target_coeffs;
            let mut beta = vec![0.0; d];
            let keep = t.len().min(d);
            beta[..keep].copy_from_slice(&t[..keep]);
            let tail: f64 = t.iter().skip(d).map(|c| c * c).sum();
            (beta, tail)
        }
        _ => {
            let mut beta = vec![0.0; d];
            for (cell, a, b) in pieces(problem) {
                let (part, ok) = quadrature::integrate_vec(
                    |x, out| {
                        basis.eval_in_cell(cell, x, out);
                        let s = problem.target_value(x);
                        out.iter_mut().for_each(|v| *v *= s);
                    },
                    a,
                    b,
                    panels_for(d, b - a, width),
                    d,
                );
                if !ok {
                    return Err(LabError::Numeric(format!("projection quadrature did not converge on [{a}, {b}]")));
                }
                for (acc, v) in beta.iter_mut().zip(part) {
                    *acc += v / width;
                }
            }
            let mut err = 0.0;
            for (cell, a, b) in pieces(problem) {
                let r = quadrature::integrate(
                    |x| (problem.target_value(x) - basis.combine_in_cell(cell, &beta, x)).powi(2),
                    a,
                    b,
                    panels_for(d, b - a, width),
                );
                if !r.converged {
                    return Err(LabError::Numeric(format!("approximation-error quadrature did not converge on [{a}, {b}]")));
                }
                err += r.value / width;
            }
            (beta, err)
        }
    };

    let mut varform = 0.0;
    let mut buf = vec![0.0; d];
    for (cell, a, b) in pieces(problem) {
        let r = quadrature::integrate(
            |x| {
                basis.eval_in_cell(cell, x, &mut buf);
                let energy: f64 = buf.iter().map(|v| v * v).sum();
                let resid = problem.target_value(x) - basis.combine_in_cell(cell, &beta_m, x);
                let s = problem.sigma_at(x);
                (resid * resid + s * s) * energy
            },
            a,
            b,
            panels_for(d, b - a, width),
        );
        if !r.converged {
            return Err(LabError::Numeric(format!("variance-form quadrature did not converge on [{a}, {b}]")));
        }
        varform += r.value / width;
    }

    let report = OracleReport {
        cm_sq: sigma_sq_mean + approx_err_sq,
        sigma_sq_mean,
        approx_err_sq,
        cm_sq_varform: varform / d as f64,
    };
    Ok((beta_m, report))
}

/// Sup of `g` over the domain, on the grid-plus-refinement policy, with a
/// grid fine enough for the target's own frequencies.
fn sup_over_pieces<G: Fn(usize, f64) -> f64>(problem: &RegressionProblem, g: G) -> f64 {
    let width = problem.dictionary.domain().width();
    let resolution = problem.dictionary.dim().max(problem.target_coeffs.len()).max(1);
    pieces(problem)
        .into_iter()
        .map(|(cell, a, b)| {
            let points = ((crate::model::GRID_PER_DIM * resolution) as f64 * (b - a) / width).ceil().max(16.0) as usize;
            crate::model::sup_on_cell(|x| g(cell, x), a, b, points)
        })
        .fold(0.0, f64::max)
}

impl RegressionProblem {
    /// `||s*||_inf`.
    pub fn target_sup(&self) -> f64 {
        sup_over_pieces(self, |_, x| self.target_value(x).abs())
    }

    /// Largest value of `|eps|`, when the noise law is bounded.
    pub fn noise_bound(&self) -> Option<f64> {
        match self.spec.noise_law {
            NoiseLaw::BoundedUniform => Some(3f64.sqrt()),
            NoiseLaw::Rademacher => Some(1.0),
            _ => None,
        }
    }

    /// `||psi_m||_inf` for `psi_m = y - s_m(x)`, when the noise is bounded.
    pub fn residual_sup(&self, beta_m: &[f64]) -> Option<f64> {
        let eps = self.noise_bound()?;
        let basis = self.dictionary.basis();
        let approx = sup_over_pieces(self, |cell, x| (self.target_value(x) - basis.combine_in_cell(cell, beta_m, x)).abs());
        let sigma = sup_over_pieces(self, |_, x| self.sigma_at(x).abs());
        Some(approx + sigma * eps)
    }
}

/// `E[psi_m^2 phi phi^T] = E[((s* - s_m)^2 + sigma^2) phi phi^T]`; its top
/// eigenvalue is `sup_{s in B1} Var(psi_m s)`.
pub fn residual_moment_matrix(problem: &RegressionProblem, beta_m: &[f64]) -> Result<DMatrix<f64>> {
    let dict = &problem.dictionary;
    let d = dict.dim();
    let width = dict.domain().width();
    let basis = dict.basis();
    let mut total = vec![0.0; d * d];
    let mut phi = vec![0.0; d];
    for (cell, a, b) in pieces(problem) {
        let (part, ok) = quadrature::integrate_vec(
            |x, out| {
                basis.eval_in_cell(cell, x, &mut phi);
                let r = problem.target_value(x) - basis.combine_in_cell(cell, beta_m, x);
                let s = problem.sigma_at(x);
                let w = r * r + s * s;
                for k in 0..d {
                    for l in 0..d {
                        out[k * d + l] = w * phi[k] * phi[l];
                    }
                }
            },
            a,
            b,
            panels_for(d, b - a, width),
            d * d,
        );
        if !ok {
            return Err(LabError::Numeric(format!("residual moment quadrature did not converge on [{a}, {b}]")));
        }
        for (t, v) in total.iter_mut().zip(part) {
            *t += v / width;
        }
    }
    Ok(DMatrix::from_row_slice(d, d, &total))
}

/// Centered empirical Gram matrix and empirical correlations of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    /// `A = (P_n - P)(phi_k phi_l)`.
    pub a: DMatrix<f64>,
    /// `E = P_n(y phi_k)`.
    pub e: DVector<f64>,
    pub n: usize,
}

pub fn design_matrix(dictionary: &Dictionary, x: &[f64]) -> DMatrix<f64> {
    let d = dictionary.dim();
    let mut rows = vec![0.0; x.len() * d];
    for (row, &xi) in rows.chunks_mut(d).zip(x) {
        dictionary.eval_into(xi, row);
    }
    DMatrix::from_row_slice(x.len(), d, &rows)
}

pub fn assemble(dictionary: &Dictionary, data: &Dataset) -> Result<Assembled> {
    let n = data.len();
    if n == 0 || data.y.len() != n {
        return Err(LabError::Parameter("dataset must be nonempty with matching x and y".into()));
    }
    for &x in &data.x {
        dictionary.domain().check(x)?;
    }
    let phi = design_matrix(dictionary, &data.x);
    let inv_n = 1.0 / n as f64;
    let mut a = phi.tr_mul(&phi) * inv_n;
    for k in 0..a.nrows() {
        a[(k, k)] -= 1.0;
    }
    let e = phi.tr_mul(&DVector::from_column_slice(&data.y)) * inv_n;
    Ok(Assembled { a, e, n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmFit {
    pub beta_hat: Vec<f64>,
    pub beta_m: Vec<f64>,
    /// `|beta_hat - beta_m|^2`; infinite when unsolved.
    pub excess_risk: f64,
    /// Spectral norm of `A`.
    pub gram_perturbation_opnorm: f64,
    #[serde(rename = "F_norm_sq")]
    pub f_norm_sq: f64,
    pub lambda_opnorm: Option<f64>,
    /// `|F|_{Lambda,nu}`, computed alongside `lambda_opnorm`.
    pub f_lambda_norm: Option<f64>,
    pub min_eigenvalue: f64,
    pub solved: bool,
    pub n: usize,
}

impl Assembled {
    /// Eigenvalues of `I + A`.
    pub fn gram_spectrum(&self) -> Vec<f64> {
        let mut g = self.a.clone();
        for k in 0..g.nrows() {
            g[(k, k)] += 1.0;
        }
        SymmetricEigen::new(g).eigenvalues.iter().copied().collect()
    }

    /// Solves `(I + A) beta_hat = E` and records the diagnostics; `nu` adds
    /// the weighted-l1 norms of `A` and `F`.
    pub fn solve(&self, beta_m: &[f64], nu: Option<f64>) -> ErmFit {
        let d = self.e.len();
        assert_eq!(beta_m.len(), d, "projection length");
        let spectrum = self.gram_spectrum();
        let min_eigenvalue = spectrum.iter().copied().fold(f64::INFINITY, f64::min);
        let opnorm = spectrum.iter().fold(0.0f64, |m, l| m.max((l - 1.0).abs()));
        let mut g = self.a.clone();
        for k in 0..d {
            g[(k, k)] += 1.0;
        }
        let bm = DVector::from_column_slice(beta_m);
        let f = &self.e - &g * &bm;
        let solved = min_eigenvalue >= SINGULAR_EIGENVALUE;
        let beta_hat = if solved {
            g.clone().cholesky().map(|c| c.solve(&self.e)).or_else(|| g.clone().lu().solve(&self.e))
        } else {
            None
        };
        let solved = beta_hat.is_some();
        let (beta_hat, excess_risk) = match beta_hat {
            Some(b) => {
                let excess = (&b - &bm).norm_squared();
                (b.iter().copied().collect(), excess)
            }
            None => (vec![f64::NAN; d], f64::INFINITY),
        };
        ErmFit {
            beta_hat,
            beta_m: beta_m.to_vec(),
            excess_risk,
            gram_perturbation_opnorm: opnorm,
            f_norm_sq: f.norm_squared(),
            lambda_opnorm: nu.map(|nu| lambda_opnorm(&self.a, nu)),
            f_lambda_norm: nu.map(|nu| lambda_norm_coeffs(f.as_slice(), nu)),
            min_eigenvalue,
            solved,
            n: self.n,
        }
    }
}

/// Least-squares fit; an ill-conditioned sample is an error carrying the
/// Gram diagnostics.
pub fn fit(problem: &RegressionProblem, data: &Dataset) -> Result<ErmFit> {
    let (beta_m, _) = project_target(problem)?;
    let fit = assemble(&problem.dictionary, data)?.solve(&beta_m, None);
    if fit.solved {
        Ok(fit)
    } else {
        Err(LabError::SingularGram { min_eigenvalue: fit.min_eigenvalue, opnorm: fit.gram_perturbation_opnorm })
    }
}

impl ErmFit {
    pub fn estimator(&self, dictionary: &Dictionary) -> Result<ModelFunction> {
        ModelFunction::new(dictionary.clone(), self.beta_hat.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpnormCheck {
    pub opnorm: f64,
    /// Largest `|s^T A t|` over the probed unit pairs.
    pub probe_sup: f64,
}

/// `s^T A t`, i.e. `(P_n - P)(s t)` for the model functions with these coefficients.
pub fn bilinear(a: &DMatrix<f64>, s: &[f64], t: &[f64]) -> f64 {
    (0..a.nrows()).map(|k| s[k] * (0..a.ncols()).map(|l| a[(k, l)] * t[l]).sum::<f64>()).sum()
}

/// Spectral norm of `A` against random probes of `sup_{s,t in B1} (P_n - P)(s t)`.
pub fn gram_opnorm_identity_check(data: &Dataset, dictionary: &Dictionary, n_probe: usize, seed: u64) -> Result<OpnormCheck> {
    let assembled = assemble(dictionary, data)?;
    let d = dictionary.dim();
    let opnorm = SymmetricEigen::new(assembled.a.clone()).eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |rng: &mut ChaCha8Rng| {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        v.into_iter().map(|c| c / norm).collect::<Vec<f64>>()
    };
    let mut probe_sup: f64 = 0.0;
    for _ in 0..n_probe {
        let s = unit(&mut rng);
        let t = unit(&mut rng);
        probe_sup = probe_sup.max(bilinear(&assembled.a, &s, &t).abs());
    }
    if probe_sup > opnorm + 1e-9 {
        return Err(LabError::Numeric(format!("probe {probe_sup} exceeds spectral norm {opnorm}")));
    }
    Ok(OpnormCheck { opnorm, probe_sup })
}

/// `sum_k k^nu max_l |A_kl| / l^nu` (1-based indices).
pub fn lambda_opnorm(a: &DMatrix<f64>, nu: f64) -> f64 {
    (0..a.nrows())
        .map(|k| {
            let row_max = (0..a.ncols()).map(|l| a[(k, l)].abs() / ((l + 1) as f64).powf(nu)).fold(0.0, f64::max);
            ((k + 1) as f64).powf(nu) * row_max
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// Membership of the estimator in `Lambda_nu(2 L1, L2 / 4)`.
    pub membership: LambdaMembership,
    pub a_lambda: f64,
    /// `4 (D+1)^{nu+1} / (nu+1) sqrt(3 ln n / n)`.
    pub a_threshold: f64,
    pub f_lambda: f64,
    /// `(D+1)^{nu+1} / (nu+1) sqrt(2 sigma^2 z / n)`, when `(sigma^2, z)` is given.
    pub f_threshold: Option<f64>,
}

impl RegularityReport {
    /// Both sample conditions of the event used in the regularity argument.
    pub fn event_holds(&self) -> Option<bool> {
        self.f_threshold
            .map(|ft| self.a_lambda <= self.a_threshold && self.a_threshold <= 0.5 && self.f_lambda <= ft)
    }
}

pub fn estimator_regularity(
    dictionary: &Dictionary,
    fit: &ErmFit,
    assembled: &Assembled,
    cls: &LambdaClass,
    sigma_sq_z: Option<(f64, f64)>,
) -> Result<RegularityReport> {
    dictionary.require_fourier()?;
    let estimator = fit.estimator(dictionary)?;
    let widened = LambdaClass::new(cls.nu, 2.0 * cls.l1, cls.l2 / 4.0)?;
    let membership = if fit.solved {
        lambda_membership(&estimator, &widened)?
    } else {
        LambdaMembership { member: false, lambda_norm: f64::INFINITY, sup: f64::NAN, norm_margin: f64::NEG_INFINITY, sup_margin: f64::NAN }
    };
    let d = dictionary.dim() as f64;
    let n = assembled.n as f64;
    let weight = (d + 1.0).powf(cls.nu + 1.0) / (cls.nu + 1.0);
    let bm = DVector::from_column_slice(&fit.beta_m);
    let mut g = assembled.a.clone();
    for k in 0..g.nrows() {
        g[(k, k)] += 1.0;
    }
    let f = &assembled.e - g * bm;
    Ok(RegularityReport {
        membership,
        a_lambda: lambda_opnorm(&assembled.a, cls.nu),
        a_threshold: 4.0 * weight * (3.0 * n.ln() / n).sqrt(),
        f_lambda: lambda_norm_coeffs(f.as_slice(), cls.nu),
        f_threshold: sigma_sq_z.map(|(s2, z)| weight * (2.0 * s2 * z / n).sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn problem(dictionary: DictionarySpec, target: Target, sigma: f64, law: NoiseLaw) -> RegressionProblem {
        RegressionProblem::new(ProblemSpec {
            dictionary,
            target,
            noise_sigma: NoiseSigma::Constant { sigma },
            noise_law: law,
        })
        .unwrap()
    }

    #[test]
    fn noiseless_in_model_sample_is_exact() {
        let c = vec![0.3, -1.0, 0.5, 0.0, 2.0];
        let p = problem(DictionarySpec::fourier(5), Target::InModel { coeffs: c.clone() }, 0.0, NoiseLaw::Gaussian);
        let data = sample(&p, 50, 4).unwrap();
        let f = ModelFunction::new(p.dictionary().clone(), c).unwrap();
        for (x, y) in data.x.iter().zip(&data.y) {
            assert_eq!(*y, f.evaluate(*x).unwrap());
        }
        let fit = fit(&p, &data).unwrap();
        assert!(fit.excess_risk < 1e-18, "{}", fit.excess_risk);
    }

    #[test]
    fn gaussian_noise_is_centered() {
        let p = problem(DictionarySpec::histogram(1), Target::InModel { coeffs: vec![0.0] }, 1.0, NoiseLaw::Gaussian);
        let n = 1_000_000;
        let data = sample(&p, n, 11).unwrap();
        let mean = data.y.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn standardized_laws_have_unit_variance() {
        for law in [NoiseLaw::BoundedUniform, NoiseLaw::Rademacher, NoiseLaw::Gaussian] {
            let p = problem(DictionarySpec::histogram(1), Target::InModel { coeffs: vec![0.0] }, 1.0, law);
            let data = sample(&p, 200_000, 5).unwrap();
            let var = data.y.iter().map(|y| y * y).sum::<f64>() / data.len() as f64;
            assert!((var - 1.0).abs() < 0.02, "{law:?}: {var}");
            if law.is_bounded() {
                assert!(data.y.iter().all(|y| y.abs() <= 3f64.sqrt() + 1e-12));
            }
        }
        // Heavy tails: only a median check.
        let p = problem(DictionarySpec::histogram(1), Target::InModel { coeffs: vec![0.0] }, 1.0, NoiseLaw::StudentT { dof: 2.01 });
        let mut y = sample(&p, 100_001, 8).unwrap().y;
        y.sort_by(f64::total_cmp);
        assert!(y[50_000].abs() < 0.02);
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = problem(DictionarySpec::haar(2), Target::InModel { coeffs: vec![1.0; 8] }, 0.5, NoiseLaw::student_default());
        assert_eq!(sample(&p, 100, 42).unwrap(), sample(&p, 100, 42).unwrap());
        assert_ne!(sample(&p, 100, 42).unwrap(), sample(&p, 100, 43).unwrap());
    }

    #[test]
    fn projection_of_fourier_series() {
        let p = problem(
            DictionarySpec::fourier(5),
            Target::FourierSeries { decay: 2.0, amplitude: 1.0, truncation: 4000 },
            1.0,
            NoiseLaw::Gaussian,
        );
        let (beta, report) = project_target(&p).unwrap();
        assert_eq!(beta, vec![1.0, 0.25, 1.0 / 9.0, 1.0 / 16.0, 1.0 / 25.0]);
        let tail: f64 = (6..=4000).map(|k| (k as f64).powi(-4)).sum();
        assert!((report.approx_err_sq - tail).abs() < 1e-15);
        assert_eq!(report.sigma_sq_mean, 1.0);
        assert_eq!(report.cm_sq, 1.0 + tail);
    }

    #[test]
    fn projection_by_quadrature_matches_exact_route() {
        // Same target on a Fourier dictionary: once exact, once via a piecewise
        // histogram whose projection is the bin average.
        let p = problem(
            DictionarySpec::histogram(4),
            Target::PiecewiseSmooth { knots: vec![(0.0, 0.0), (1.0, 1.0)] },
            0.0,
            NoiseLaw::Gaussian,
        );
        let (beta, report) = project_target(&p).unwrap();
        for (k, b) in beta.iter().enumerate() {
            // <x, 2 * 1_[k/4,(k+1)/4)> = 2 * (2k+1)/32
            assert!((b - (2 * k + 1) as f64 / 16.0).abs() < 1e-13);
        }
        // Within-bin variance of a uniform on width 1/4: 1/(12 * 16).
        assert!((report.approx_err_sq - 1.0 / 192.0).abs() < 1e-13);
    }

    #[test]
    fn in_model_projection_and_varform() {
        let c = vec![0.5, 0.1, -0.2];
        let p = RegressionProblem::new(ProblemSpec {
            dictionary: DictionarySpec::fourier(3),
            target: Target::InModel { coeffs: c.clone() },
            noise_sigma: NoiseSigma::Heteroscedastic { sigma0: 0.7, tag: "cos2".into() },
            noise_law: NoiseLaw::Rademacher,
        })
        .unwrap();
        let (beta, report) = project_target(&p).unwrap();
        assert_eq!(beta, c);
        assert_eq!(report.approx_err_sq, 0.0);
        assert!((report.cm_sq - 0.49).abs() < 1e-15);
        assert!((report.cm_sq_varform - report.cm_sq).abs() < 1e-10);
    }

    #[test]
    fn fourier_varform_matches_cm_with_approximation_error() {
        let p = problem(
            DictionarySpec::fourier(7),
            Target::FourierSeries { decay: 1.5, amplitude: 0.8, truncation: 30 },
            0.6,
            NoiseLaw::BoundedUniform,
        );
        let (_, r) = project_target(&p).unwrap();
        assert!((r.cm_sq - r.cm_sq_varform).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn population_surrogate_recovers_projection() {
        let beta_m = vec![0.2, -0.4, 1.1];
        let asm = Assembled { a: DMatrix::zeros(3, 3), e: DVector::from_column_slice(&beta_m), n: 1 };
        let fit = asm.solve(&beta_m, Some(1.0));
        assert_eq!(fit.beta_hat, beta_m);
        assert_eq!(fit.excess_risk, 0.0);
        assert_eq!(fit.lambda_opnorm, Some(0.0));
    }

    #[test]
    fn degenerate_sample_is_unsolved() {
        let p = problem(DictionarySpec::histogram(4), Target::InModel { coeffs: vec![0.0; 4] }, 1.0, NoiseLaw::Gaussian);
        let data = Dataset { x: vec![0.1, 0.2], y: vec![1.0, 2.0] };
        match fit(&p, &data) {
            Err(LabError::SingularGram { min_eigenvalue, .. }) => assert!(min_eigenvalue < 1e-10),
            other => panic!("{other:?}"),
        }
        let unsolved = assemble(p.dictionary(), &data).unwrap().solve(&[0.0; 4], None);
        assert!(!unsolved.solved && unsolved.excess_risk.is_infinite());
    }

    #[test]
    fn lambda_opnorm_examples() {
        assert_eq!(lambda_opnorm(&DMatrix::identity(3, 3), 1.0), 3.0);
        assert_eq!(lambda_opnorm(&DMatrix::zeros(4, 4), 1.5), 0.0);
        let mut a = DMatrix::zeros(3, 3);
        a[(1, 0)] = 1.0;
        assert_eq!(lambda_opnorm(&a, 1.0), 2.0);
    }

    /// Exact induced norm `max_l sum_k k^nu |A_kl| / l^nu` (extreme points of
    /// the weighted l1 ball are scaled unit vectors).
    fn induced_lambda_norm(a: &DMatrix<f64>, nu: f64) -> f64 {
        (0..a.ncols())
            .map(|l| (0..a.nrows()).map(|k| ((k + 1) as f64).powf(nu) * a[(k, l)].abs()).sum::<f64>() / ((l + 1) as f64).powf(nu))
            .fold(0.0, f64::max)
    }

    #[test]
    fn displayed_matrix_norm_dominates_induced_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let a = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
            assert!(lambda_opnorm(&a, 1.0) >= induced_lambda_norm(&a, 1.0) - 1e-12);
        }
    }

    #[test]
    fn opnorm_probe_examples() {
        let dict = make_dictionary(&DictionarySpec::fourier(9)).unwrap();
        let p = problem(DictionarySpec::fourier(9), Target::InModel { coeffs: vec![0.0; 9] }, 1.0, NoiseLaw::Gaussian);
        let data = sample(&p, 200, 1).unwrap();
        let check = gram_opnorm_identity_check(&data, &dict, 500, 2).unwrap();
        assert!(check.probe_sup <= check.opnorm + 1e-9 && check.probe_sup > 0.0);

        // The top eigenvector pair attains the spectral norm.
        let asm = assemble(&dict, &data).unwrap();
        let eig = SymmetricEigen::new(asm.a.clone());
        let (idx, _) = eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap();
        let v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        assert!((bilinear(&asm.a, &v, &v).abs() - check.opnorm).abs() < 1e-9);

        // Power iteration as an independent route to the spectral norm.
        let mut x = DVector::from_element(9, 1.0);
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let y = &asm.a * &asm.a * &x;
            lambda = (y.norm() / x.norm()).sqrt();
            x = y.normalize();
        }
        assert!((lambda - check.opnorm).abs() < 1e-9, "{lambda} vs {}", check.opnorm);
    }

    #[test]
    fn regularity_of_noiseless_fit() {
        let c = vec![0.5, 0.2, 0.0, 0.1, 0.0];
        let l1 = lambda_norm_coeffs(&c, 1.0);
        let p = problem(DictionarySpec::fourier(5), Target::InModel { coeffs: c }, 0.0, NoiseLaw::Gaussian);
        let data = sample(&p, 100, 3).unwrap();
        let asm = assemble(p.dictionary(), &data).unwrap();
        let (beta_m, _) = project_target(&p).unwrap();
        let fit = asm.solve(&beta_m, Some(1.0));
        let r = estimator_regularity(p.dictionary(), &fit, &asm, &LambdaClass::new(1.0, l1, 0.5).unwrap(), Some((0.0, 100.0)))
            .unwrap();
        assert!(r.membership.member);
        let h = problem(DictionarySpec::histogram(2), Target::InModel { coeffs: vec![0.0; 2] }, 0.0, NoiseLaw::Gaussian);
        let hd = sample(&h, 10, 1).unwrap();
        let ha = assemble(h.dictionary(), &hd).unwrap();
        let hf = ha.solve(&[0.0, 0.0], None);
        assert!(matches!(
            estimator_regularity(h.dictionary(), &hf, &ha, &LambdaClass::new(1.0, 1.0, 1.0).unwrap(), None),
            Err(LabError::Unsupported(_))
        ));
    }

    #[test]
    fn invalid_problems_are_rejected() {
        let base = ProblemSpec {
            dictionary: DictionarySpec::fourier(3),
            target: Target::InModel { coeffs: vec![1.0, 0.0] },
            noise_sigma: NoiseSigma::Constant { sigma: 1.0 },
            noise_law: NoiseLaw::Gaussian,
        };
        assert!(RegressionProblem::new(base.clone()).is_err());
        let mut s = base.clone();
        s.target = Target::InModel { coeffs: vec![1.0, 0.0, 0.0] };
        s.noise_law = NoiseLaw::StudentT { dof: 2.0 };
        assert!(RegressionProblem::new(s.clone()).is_err());
        s.noise_law = NoiseLaw::Gaussian;
        s.target = Target::PiecewiseSmooth { knots: vec![(0.2, 0.0), (1.0, 1.0)] };
        assert!(RegressionProblem::new(s).is_err());
    }

    #[test]
    fn fit_serializes_and_dataset_csv() {
        let p = problem(DictionarySpec::fourier(3), Target::InModel { coeffs: vec![1.0, 0.0, 0.0] }, 1.0, NoiseLaw::Gaussian);
        let data = sample(&p, 20, 1).unwrap();
        let f = fit(&p, &data).unwrap();
        let back: ErmFit = serde_json::from_str(&f.to_json().unwrap()).unwrap();
        assert_eq!(back, f);
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 21);
        assert!(text.starts_with("x,y\n"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn fit_matches_qr_oracle(seed in 0u64..10_000, which in 0usize..4, n in 40usize..300) {
            let spec = match which {
                0 => DictionarySpec::fourier(9),
                1 => DictionarySpec::histogram(6),
                2 => DictionarySpec::piecewise_poly(8, 1),
                _ => DictionarySpec::haar(2),
            };
            let d = make_dictionary(&spec).unwrap().dim();
            let p = problem(spec, Target::PiecewiseSmooth { knots: vec![(0.0, 1.0), (0.4, -1.0), (0.4, 0.5), (1.0, 2.0)] }, 0.3, NoiseLaw::Gaussian);
            let data = sample(&p, n, seed).unwrap();
            let asm = assemble(p.dictionary(), &data).unwrap();
            let fit = asm.solve(&vec![0.0; d], None);
            prop_assume!(fit.solved && fit.min_eigenvalue > 1e-3);
            let phi = design_matrix(p.dictionary(), &data.x);
            let qr = phi.qr();
            let qty = qr.q().transpose() * DVector::from_column_slice(&data.y);
            let oracle = qr.r().solve_upper_triangular(&qty).unwrap();
            for (a, b) in fit.beta_hat.iter().zip(oracle.iter()) {
                prop_assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }

        #[test]
        fn excess_risk_equals_l2_distance(seed in 0u64..10_000) {
            let p = problem(DictionarySpec::fourier(7), Target::FourierSeries { decay: 2.0, amplitude: 1.0, truncation: 20 }, 1.0, NoiseLaw::BoundedUniform);
            let data = sample(&p, 100, seed).unwrap();
            let fit = fit(&p, &data).unwrap();
            let diff = ModelFunction::new(p.dictionary().clone(), fit.beta_hat.iter().zip(&fit.beta_m).map(|(a, b)| a - b).collect()).unwrap();
            let quad = diff.lq_norm(2.0).unwrap().powi(2);
            prop_assert!((quad - fit.excess_risk).abs() <= 1e-8 * fit.excess_risk.max(1e-300));
        }
    }
}
