use crate::basis::{Basis, DictionaryKind, Direction};
use crate::domain::Domain;
use crate::error::{LabError, Result};

/// Regular histogram: `sqrt(D) 1_I` over `D` equal bins.
#[derive(Debug, Clone)]
pub struct Histogram {
    dim: usize,
    domain: Domain,
    height: f64,
}

impl Histogram {
    pub fn new(dim: usize, domain: Domain) -> Result<Self> {
        if dim == 0 {
            return Err(LabError::Parameter("histogram needs at least one bin".into()));
        }
        Ok(Histogram { dim, domain, height: (dim as f64).sqrt() })
    }
}

impl Basis for Histogram {
    fn kind(&self) -> DictionaryKind {
        DictionaryKind::Histogram
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn cell_count(&self) -> usize {
        self.dim
    }
    fn cell(&self, i: usize) -> (f64, f64) {
        let w = self.domain.width() / self.dim as f64;
        (self.domain.lower + i as f64 * w, self.domain.lower + (i + 1) as f64 * w)
    }
    fn cell_of(&self, x: f64) -> usize {
        ((self.domain.relative(x) * self.dim as f64).floor().max(0.0) as usize).min(self.dim - 1)
    }
    fn eval_in_cell(&self, cell: usize, _x: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        out[cell] = self.height;
    }
    fn combine_in_cell(&self, cell: usize, coeffs: &[f64], _x: f64) -> f64 {
        coeffs[cell] * self.height
    }
    fn piecewise_constant(&self) -> bool {
        true
    }
    fn adversarial_directions(&self) -> Vec<Direction> {
        let mut coeffs = vec![0.0; self.dim];
        coeffs[0] = 1.0;
        vec![Direction { tag: "cell-0".into(), coeffs }]
    }
    fn label(&self, k: usize) -> String {
        format!("bin-{k}")
    }
}
