//! Registry of dictionary families, looked up by name.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock};

use crate::basis::{Basis, DictionarySpec, Fourier, Haar, Histogram, PiecewisePoly};
use crate::domain::Domain;
use crate::error::{LabError, Result};

/// A constructor for one family of orthonormal dictionaries.
pub trait DictionaryFamily: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn build(&self, spec: &DictionarySpec) -> Result<Arc<dyn Basis>>;
}

fn require_dim(spec: &DictionarySpec) -> Result<usize> {
    spec.dim
        .ok_or_else(|| LabError::Parameter(format!("{} dictionary needs `dim`", spec.kind)))
}

fn require_unit(domain: Domain, family: &str) -> Result<Domain> {
    if domain == Domain::UNIT {
        Ok(domain)
    } else {
        Err(LabError::Parameter(format!("{family} dictionary lives on [0,1], got {}", domain.label())))
    }
}

struct FourierFamily;
impl DictionaryFamily for FourierFamily {
    fn name(&self) -> &'static str {
        "fourier"
    }
    fn describe(&self) -> &'static str {
        "1, sqrt2 cos(kx), sqrt2 sin(kx) for k <= l; D = 2l + 1 (odd)"
    }
    fn build(&self, spec: &DictionarySpec) -> Result<Arc<dyn Basis>> {
        let domain = spec.domain_or(Domain::ZERO_TWO_PI)?;
        Ok(Arc::new(Fourier::new(require_dim(spec)?, domain)?))
    }
}

struct HistogramFamily;
impl DictionaryFamily for HistogramFamily {
    fn name(&self) -> &'static str {
        "histogram"
    }
    fn describe(&self) -> &'static str {
        "sqrt(D) 1_I on a regular partition of [0,1] into D bins"
    }
    fn build(&self, spec: &DictionarySpec) -> Result<Arc<dyn Basis>> {
        let domain = require_unit(spec.domain_or(Domain::UNIT)?, "histogram")?;
        Ok(Arc::new(Histogram::new(require_dim(spec)?, domain)?))
    }
}

struct PiecewisePolyFamily;
impl DictionaryFamily for PiecewisePolyFamily {
    fn name(&self) -> &'static str {
        "piecewise-poly"
    }
    fn describe(&self) -> &'static str {
        "normalized Legendre polynomials of degree <= r on p regular cells; D = p (r + 1)"
    }
    fn build(&self, spec: &DictionarySpec) -> Result<Arc<dyn Basis>> {
        let domain = require_unit(spec.domain_or(Domain::UNIT)?, "piecewise-poly")?;
        Ok(Arc::new(PiecewisePoly::new(require_dim(spec)?, spec.degree.unwrap_or(0), domain)?))
    }
}

struct HaarFamily;
impl DictionaryFamily for HaarFamily {
    fn name(&self) -> &'static str {
        "haar-wavelet"
    }
    fn describe(&self) -> &'static str {
        "periodized Haar system up to level l; D = 2^(l+1)"
    }
    fn build(&self, spec: &DictionarySpec) -> Result<Arc<dyn Basis>> {
        let domain = require_unit(spec.domain_or(Domain::UNIT)?, "haar-wavelet")?;
        let haar = match (spec.level, spec.dim) {
            (Some(level), dim) => {
                let h = Haar::new(level, domain)?;
                if let Some(d) = dim {
                    if d != h.dim() {
                        return Err(LabError::Parameter(format!(
                            "Haar level {level} gives D = {}, but dim = {d}",
                            h.dim()
                        )));
                    }
                }
                h
            }
            (None, Some(dim)) => Haar::from_dim(dim, domain)?,
            (None, None) => {
                return Err(LabError::Parameter("haar-wavelet dictionary needs `level` or `dim`".into()))
            }
        };
        Ok(Arc::new(haar))
    }
}

static FAMILIES: LazyLock<Vec<Box<dyn DictionaryFamily>>> = LazyLock::new(|| {
    vec![
        Box::new(FourierFamily),
        Box::new(HistogramFamily),
        Box::new(PiecewisePolyFamily),
        Box::new(HaarFamily),
    ]
});

static INDEX: LazyLock<HashMap<&'static str, usize>> =
    LazyLock::new(|| FAMILIES.iter().enumerate().map(|(i, f)| (f.name(), i)).collect());

pub fn families() -> &'static [Box<dyn DictionaryFamily>] {
    &FAMILIES
}

pub fn family(name: &str) -> Option<&'static dyn DictionaryFamily> {
    INDEX.get(name).map(|&i| FAMILIES[i].as_ref())
}
