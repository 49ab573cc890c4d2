use crate::basis::{Basis, DictionaryKind, Direction};
use crate::domain::Domain;
use crate::error::{LabError, Result};

/// Periodized Haar system at resolution `level`: the father function plus
/// `psi_{j,k}(x) = 2^{j/2} psi0(2^j x - k + 1)` for `j = 0..=level`,
/// `k = 1..=2^j`. `D = 2^{level+1}`; `level = -1` keeps only the father.
///
/// The span is the histogram on `D` dyadic cells, so every function is
/// constant on those cells. Basis index of `psi_{j,k}` is `2^j + k - 1`.
#[derive(Debug, Clone)]
pub struct Haar {
    level: i32,
    dim: usize,
    domain: Domain,
}

impl Haar {
    pub fn new(level: i32, domain: Domain) -> Result<Self> {
        if !(-1..=30).contains(&level) {
            return Err(LabError::Parameter(format!("Haar level must be in -1..=30, got {level}")));
        }
        Ok(Haar { level, dim: 1usize << (level + 1), domain })
    }

    pub fn from_dim(dim: usize, domain: Domain) -> Result<Self> {
        if dim == 0 || !dim.is_power_of_two() {
            return Err(LabError::Parameter(format!(
                "Haar dimension must be a power of two, got D = {dim}"
            )));
        }
        Haar::new(dim.trailing_zeros() as i32 - 1, domain)
    }

    /// `(index, value)` of the non-zero basis functions on finest cell `cell`.
    fn active(&self, cell: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let top = self.level;
        std::iter::once((0usize, 1.0)).chain((0..=top).map(move |j| {
            let shift_k = (top + 1 - j) as u32;
            let k = cell >> shift_k;
            let half = (cell >> (shift_k - 1)) & 1;
            let amp = 2f64.powf(j as f64 / 2.0);
            ((1usize << j) + k, if half == 0 { amp } else { -amp })
        }))
    }
}

impl Basis for Haar {
    fn kind(&self) -> DictionaryKind {
        DictionaryKind::HaarWavelet
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
        for (idx, v) in self.active(cell) {
            out[idx] = v;
        }
    }
    fn combine_in_cell(&self, cell: usize, coeffs: &[f64], _x: f64) -> f64 {
        self.active(cell).map(|(idx, v)| coeffs[idx] * v).sum()
    }
    fn piecewise_constant(&self) -> bool {
        true
    }

    /// Single finest wavelet and the indicator of the first finest cell
    /// (the latter expanded in the Haar basis).
    fn adversarial_directions(&self) -> Vec<Direction> {
        let mut out = Vec::new();
        if self.level >= 0 {
            let mut finest = vec![0.0; self.dim];
            finest[1usize << self.level] = 1.0;
            out.push(Direction { tag: format!("psi-{}-1", self.level), coeffs: finest });
        }
        // <1_cell0, phi_idx> = value of phi_idx on cell 0 times 1/D.
        let mut indicator = vec![0.0; self.dim];
        for (idx, v) in self.active(0) {
            indicator[idx] = v / self.dim as f64;
        }
        out.push(Direction { tag: "cell-0".into(), coeffs: indicator });
        out
    }

    fn label(&self, k: usize) -> String {
        if k == 0 {
            return "father".into();
        }
        let j = usize::BITS - 1 - k.leading_zeros();
        format!("psi-{}-{}", j, k - (1usize << j) + 1)
    }

    fn level(&self) -> Option<i32> {
        Some(self.level)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_one_has_four_functions() {
        let h = Haar::new(1, Domain::UNIT).unwrap();
        assert_eq!(h.dim(), 4);
        let labels: Vec<_> = (0..4).map(|k| h.label(k)).collect();
        assert_eq!(labels, ["father", "psi-0-1", "psi-1-1", "psi-1-2"]);
        // Exact table of values on the four quarter cells.
        let s = 2f64.sqrt();
        let expect = [
            [1.0, 1.0, s, 0.0],
            [1.0, 1.0, -s, 0.0],
            [1.0, -1.0, 0.0, s],
            [1.0, -1.0, 0.0, -s],
        ];
        let mut buf = [0.0; 4];
        for (cell, row) in expect.iter().enumerate() {
            h.eval_in_cell(cell, 0.0, &mut buf);
            for (a, b) in buf.iter().zip(row) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn wavelets_integrate_to_zero() {
        let h = Haar::new(3, Domain::UNIT).unwrap();
        let mut buf = vec![0.0; h.dim()];
        let mut sums = vec![0.0; h.dim()];
        for cell in 0..h.dim() {
            h.eval_in_cell(cell, 0.0, &mut buf);
            for (s, v) in sums.iter_mut().zip(&buf) {
                *s += v / h.dim() as f64;
            }
        }
        assert!((sums[0] - 1.0).abs() < 1e-15);
        assert!(sums[1..].iter().all(|s| s.abs() < 1e-15));
    }

    #[test]
    fn non_power_of_two_rejected() {
        assert!(Haar::from_dim(6, Domain::UNIT).is_err());
        assert_eq!(Haar::from_dim(1, Domain::UNIT).unwrap().dim(), 1);
    }
}
