//! Orthonormal dictionaries under the uniform design.
//!
//! Every family implements [`Basis`] and is registered by name in
//! [`registry`]; [`make_dictionary`] resolves a [`DictionarySpec`] through it.
//! Each basis splits its domain into cells on which every basis function is
//! smooth (a single cell for Fourier), which the norm and level-set routines
//! exploit.

mod fejer;
mod fourier;
mod haar;
mod histogram;
mod piecewise_poly;
pub mod registry;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{LabError, Result};

pub use fejer::{fejer_as_model_function, fejer_tail_bound, FejerKernel};
pub use fourier::{fourier_phi, Fourier};
pub(crate) use fourier::fourier_sum;
pub use haar::Haar;
pub use histogram::Histogram;
pub use piecewise_poly::{legendre, PiecewisePoly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DictionaryKind {
    Fourier,
    Histogram,
    PiecewisePoly,
    HaarWavelet,
}

impl DictionaryKind {
    pub fn name(&self) -> &'static str {
        match self {
            DictionaryKind::Fourier => "fourier",
            DictionaryKind::Histogram => "histogram",
            DictionaryKind::PiecewisePoly => "piecewise-poly",
            DictionaryKind::HaarWavelet => "haar-wavelet",
        }
    }
}

impl fmt::Display for DictionaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A named coefficient vector used as a probe direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub tag: String,
    pub coeffs: Vec<f64>,
}

/// An orthonormal family `phi_1, ..., phi_D` on a domain.
pub trait Basis: Send + Sync + fmt::Debug {
    fn kind(&self) -> DictionaryKind;
    fn dim(&self) -> usize;
    fn domain(&self) -> Domain;

    fn cell_count(&self) -> usize;
    /// Closed interval of cell `i`.
    fn cell(&self, i: usize) -> (f64, f64);
    fn cell_of(&self, x: f64) -> usize;

    /// Writes `phi_k(x)` for all `k`, using the smooth extension of cell `cell`
    /// (so cell endpoints are evaluated from the inside).
    fn eval_in_cell(&self, cell: usize, x: f64, out: &mut [f64]);

    /// `sum_k coeffs[k] * phi_k(x)` on cell `cell`.
    fn combine_in_cell(&self, cell: usize, coeffs: &[f64], x: f64) -> f64 {
        let mut buf = vec![0.0; self.dim()];
        self.eval_in_cell(cell, x, &mut buf);
        buf.iter().zip(coeffs).map(|(p, c)| p * c).sum()
    }

    /// True when every basis function is constant on every cell.
    fn piecewise_constant(&self) -> bool {
        false
    }

    /// Family-specific "picky" directions for small-ball probing.
    fn adversarial_directions(&self) -> Vec<Direction>;

    fn label(&self, k: usize) -> String;

    /// Degree parameter and resolution level, where meaningful.
    fn degree(&self) -> Option<usize> {
        None
    }
    fn level(&self) -> Option<i32> {
        None
    }
}

/// User-facing dictionary descriptor; the config format of the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionarySpec {
    pub kind: DictionaryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
}

impl DictionarySpec {
    pub fn fourier(dim: usize) -> Self {
        DictionarySpec { kind: DictionaryKind::Fourier, dim: Some(dim), level: None, degree: None, domain: None }
    }
    pub fn histogram(dim: usize) -> Self {
        DictionarySpec { kind: DictionaryKind::Histogram, dim: Some(dim), level: None, degree: None, domain: None }
    }
    pub fn piecewise_poly(dim: usize, degree: usize) -> Self {
        DictionarySpec {
            kind: DictionaryKind::PiecewisePoly,
            dim: Some(dim),
            level: None,
            degree: Some(degree),
            domain: None,
        }
    }
    pub fn haar(level: i32) -> Self {
        DictionarySpec { kind: DictionaryKind::HaarWavelet, dim: None, level: Some(level), degree: None, domain: None }
    }

    /// Same family with a different dimension (used by campaign grids).
    pub fn with_dim(&self, dim: usize) -> Self {
        let mut s = self.clone();
        s.dim = Some(dim);
        if s.kind == DictionaryKind::HaarWavelet {
            s.level = None;
        }
        s
    }

    pub(crate) fn domain_or(&self, default: Domain) -> Result<Domain> {
        match &self.domain {
            Some(label) => Domain::parse(label),
            None => Ok(default),
        }
    }
}

/// A constructed dictionary: its descriptor plus the shared basis evaluator.
#[derive(Clone)]
pub struct Dictionary {
    spec: DictionarySpec,
    basis: Arc<dyn Basis>,
}

impl fmt::Debug for Dictionary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dictionary({} D={} on {})", self.kind(), self.dim(), self.domain().label())
    }
}

impl PartialEq for Dictionary {
    fn eq(&self, other: &Self) -> bool {
        self.kind() == other.kind()
            && self.dim() == other.dim()
            && self.domain() == other.domain()
            && self.basis.degree() == other.basis.degree()
    }
}

impl Dictionary {
    pub(crate) fn from_parts(spec: DictionarySpec, basis: Arc<dyn Basis>) -> Self {
        Dictionary { spec, basis }
    }

    pub fn spec(&self) -> &DictionarySpec {
        &self.spec
    }
    pub fn basis(&self) -> &dyn Basis {
        self.basis.as_ref()
    }
    pub fn kind(&self) -> DictionaryKind {
        self.basis.kind()
    }
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }
    pub fn domain(&self) -> Domain {
        self.basis.domain()
    }

    pub fn cells(&self) -> Vec<(f64, f64)> {
        (0..self.basis.cell_count()).map(|i| self.basis.cell(i)).collect()
    }

    /// All basis values at `x`.
    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        self.domain().check(x)?;
        let mut out = vec![0.0; self.dim()];
        self.basis.eval_in_cell(self.basis.cell_of(x), x, &mut out);
        Ok(out)
    }

    /// Like [`Dictionary::eval`] without the domain check, writing into `out`.
    #[inline]
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        self.basis.eval_in_cell(self.basis.cell_of(x), x, out);
    }

    pub fn require_fourier(&self) -> Result<()> {
        if self.kind() == DictionaryKind::Fourier {
            Ok(())
        } else {
            Err(LabError::Unsupported(self.kind().to_string()))
        }
    }

    /// Largest `|G - I|` entry of the Gram matrix under the uniform design.
    /// Piecewise-constant families are integrated exactly cell by cell; the
    /// others use the quadrature policy on every cell.
    pub fn gram_deviation(&self) -> f64 {
        let d = self.dim();
        let width = self.domain().width();
        let mut gram = vec![0.0; d * d];
        let mut buf = vec![0.0; d];
        for (i, (a, b)) in self.cells().into_iter().enumerate() {
            if self.basis.piecewise_constant() {
                self.basis.eval_in_cell(i, 0.5 * (a + b), &mut buf);
                let w = (b - a) / width;
                for k in 0..d {
                    for l in 0..d {
                        gram[k * d + l] += w * buf[k] * buf[l];
                    }
                }
            } else {
                // Polynomial/trig products: a 64-node rule per panel with 16*D
                // panels over the domain is exact, so a single pass suffices.
                let panels = ((16 * d) as f64 * (b - a) / width).ceil().max(1.0) as usize;
                let h = (b - a) / panels as f64;
                for p in 0..panels {
                    let lo = a + p as f64 * h;
                    let mut panel_gram = vec![0.0; d * d];
                    crate::quadrature::gauss_panel(lo, lo + h, |x, w| {
                        self.basis.eval_in_cell(i, x, &mut buf);
                        for k in 0..d {
                            for l in k..d {
                                panel_gram[k * d + l] += w * buf[k] * buf[l];
                            }
                        }
                    });
                    for k in 0..d {
                        for l in k..d {
                            let v = panel_gram[k * d + l] / width;
                            gram[k * d + l] += v;
                            if l != k {
                                gram[l * d + k] += v;
                            }
                        }
                    }
                }
            }
        }
        let mut worst: f64 = 0.0;
        for k in 0..d {
            for l in 0..d {
                let target = if k == l { 1.0 } else { 0.0 };
                worst = worst.max((gram[k * d + l] - target).abs());
            }
        }
        worst
    }
}

/// Builds a dictionary by looking its family up in the registry.
pub fn make_dictionary(spec: &DictionarySpec) -> Result<Dictionary> {
    let family = registry::family(spec.kind.name())
        .ok_or_else(|| LabError::Parameter(format!("no dictionary family named {}", spec.kind)))?;
    let basis = family.build(spec)?;
    Ok(Dictionary::from_parts(spec.clone(), basis))
}
