use crate::basis::{Basis, DictionaryKind, Direction};
use crate::domain::Domain;
use crate::error::{LabError, Result};

/// Legendre polynomial `P_j(t)` by the three-term recurrence.
pub fn legendre(j: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, t);
    if j == 0 {
        return prev;
    }
    for m in 1..j {
        let m = m as f64;
        let next = ((2.0 * m + 1.0) * t * cur - m * prev) / (m + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Piecewise polynomials of degree `<= r` on `p` equal cells, using shifted
/// Legendre polynomials normalized under the uniform design.
/// `D = p (r + 1)`, cell-major ordering.
#[derive(Debug, Clone)]
pub struct PiecewisePoly {
    pieces: usize,
    degree: usize,
    domain: Domain,
}

impl PiecewisePoly {
    pub fn new(dim: usize, degree: usize, domain: Domain) -> Result<Self> {
        let per_cell = degree + 1;
        if dim == 0 || dim % per_cell != 0 {
            return Err(LabError::Parameter(format!(
                "piecewise-polynomial dimension D = {dim} must be a positive multiple of degree + 1 = {per_cell}"
            )));
        }
        Ok(PiecewisePoly { pieces: dim / per_cell, degree, domain })
    }

    pub fn pieces(&self) -> usize {
        self.pieces
    }

    #[inline]
    fn local(&self, cell: usize, x: f64) -> f64 {
        2.0 * (self.domain.relative(x) * self.pieces as f64 - cell as f64) - 1.0
    }
}

impl Basis for PiecewisePoly {
    fn kind(&self) -> DictionaryKind {
        DictionaryKind::PiecewisePoly
    }
    fn dim(&self) -> usize {
        self.pieces * (self.degree + 1)
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn cell_count(&self) -> usize {
        self.pieces
    }
    fn cell(&self, i: usize) -> (f64, f64) {
        let w = self.domain.width() / self.pieces as f64;
        (self.domain.lower + i as f64 * w, self.domain.lower + (i + 1) as f64 * w)
    }
    fn cell_of(&self, x: f64) -> usize {
        ((self.domain.relative(x) * self.pieces as f64).floor().max(0.0) as usize).min(self.pieces - 1)
    }

    fn eval_in_cell(&self, cell: usize, x: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let t = self.local(cell, x);
        let scale = (self.pieces as f64).sqrt();
        let base = cell * (self.degree + 1);
        for j in 0..=self.degree {
            out[base + j] = scale * ((2 * j + 1) as f64).sqrt() * legendre(j, t);
        }
    }

    fn combine_in_cell(&self, cell: usize, coeffs: &[f64], x: f64) -> f64 {
        let t = self.local(cell, x);
        let scale = (self.pieces as f64).sqrt();
        let base = cell * (self.degree + 1);
        (0..=self.degree)
            .map(|j| coeffs[base + j] * ((2 * j + 1) as f64).sqrt() * legendre(j, t))
            .sum::<f64>()
            * scale
    }

    fn piecewise_constant(&self) -> bool {
        self.degree == 0
    }

    fn adversarial_directions(&self) -> Vec<Direction> {
        let mut coeffs = vec![0.0; self.dim()];
        coeffs[self.degree] = 1.0;
        vec![Direction { tag: format!("cell-0-deg-{}", self.degree), coeffs }]
    }

    fn label(&self, k: usize) -> String {
        format!("cell-{}-deg-{}", k / (self.degree + 1), k % (self.degree + 1))
    }

    fn degree(&self) -> Option<usize> {
        Some(self.degree)
    }
}
