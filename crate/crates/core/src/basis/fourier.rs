use std::f64::consts::SQRT_2;

use crate::basis::{Basis, DictionaryKind, Direction};
use crate::domain::Domain;
use crate::error::{LabError, Result};

use super::fejer::FejerKernel;

/// First `D = 2l + 1` trigonometric functions in interleaved order:
/// `1, sqrt2 cos x, sqrt2 sin x, sqrt2 cos 2x, ...`.
#[derive(Debug, Clone)]
pub struct Fourier {
    dim: usize,
    domain: Domain,
}

impl Fourier {
    pub fn new(dim: usize, domain: Domain) -> Result<Self> {
        if dim == 0 || dim % 2 == 0 {
            return Err(LabError::Parameter(format!(
                "Fourier dimension must be odd, got D = {dim}"
            )));
        }
        if !domain.is_trigonometric() {
            return Err(LabError::Parameter(format!(
                "Fourier dictionary lives on [0,2pi] or [-pi,pi], got {}",
                domain.label()
            )));
        }
        Ok(Fourier { dim, domain })
    }

    pub fn max_frequency(&self) -> usize {
        (self.dim - 1) / 2
    }
}

/// `phi_k(theta)` for a 1-based index `k` of the interleaved Fourier basis.
pub fn fourier_phi(k: usize, theta: f64) -> f64 {
    debug_assert!(k >= 1);
    if k == 1 {
        1.0
    } else if k % 2 == 0 {
        SQRT_2 * ((k / 2) as f64 * theta).cos()
    } else {
        SQRT_2 * (((k - 1) / 2) as f64 * theta).sin()
    }
}

/// Evaluates `sum_k coeffs[k] phi_k(theta)` with the angle-addition recurrence.
pub(crate) fn fourier_sum(coeffs: &[f64], theta: f64) -> f64 {
    let mut acc = coeffs.first().copied().unwrap_or(0.0);
    let (s1, c1) = theta.sin_cos();
    let (mut ck, mut sk) = (c1, s1);
    let mut idx = 1;
    while idx < coeffs.len() {
        let cos_term = coeffs[idx] * ck;
        let sin_term = coeffs.get(idx + 1).map_or(0.0, |c| c * sk);
        acc += SQRT_2 * (cos_term + sin_term);
        let next_c = ck * c1 - sk * s1;
        sk = sk * c1 + ck * s1;
        ck = next_c;
        idx += 2;
    }
    acc
}

impl Basis for Fourier {
    fn kind(&self) -> DictionaryKind {
        DictionaryKind::Fourier
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn domain(&self) -> Domain {
        self.domain
    }
    fn cell_count(&self) -> usize {
        1
    }
    fn cell(&self, _i: usize) -> (f64, f64) {
        (self.domain.lower, self.domain.upper)
    }
    fn cell_of(&self, _x: f64) -> usize {
        0
    }

    fn eval_in_cell(&self, _cell: usize, x: f64, out: &mut [f64]) {
        out[0] = 1.0;
        let (s1, c1) = x.sin_cos();
        let (mut ck, mut sk) = (c1, s1);
        for j in 1..=self.max_frequency() {
            out[2 * j - 1] = SQRT_2 * ck;
            out[2 * j] = SQRT_2 * sk;
            let next_c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = next_c;
        }
    }

    fn combine_in_cell(&self, _cell: usize, coeffs: &[f64], x: f64) -> f64 {
        // Sparse probes (single basis functions, low-order kernels) stop early.
        let end = coeffs.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1);
        fourier_sum(&coeffs[..end], x)
    }

    fn adversarial_directions(&self) -> Vec<Direction> {
        let l = self.max_frequency();
        if l == 0 {
            return Vec::new();
        }
        // F_l spans frequencies < l; F_{l+1} reaches frequency l and still
        // belongs to the model.
        [l, l + 1]
            .into_iter()
            .map(|order| Direction {
                tag: format!("fejer-{order}"),
                coeffs: FejerKernel::new(order).coefficients(self.dim),
            })
            .collect()
    }

    fn label(&self, k: usize) -> String {
        match k {
            0 => "1".into(),
            k if k % 2 == 1 => format!("cos({}x)", (k + 1) / 2),
            k => format!("sin({}x)", k / 2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_dimension_is_rejected() {
        let err = Fourier::new(4, Domain::ZERO_TWO_PI).unwrap_err();
        assert!(err.to_string().contains("must be odd"));
    }

    #[test]
    fn recurrence_matches_direct_evaluation() {
        let f = Fourier::new(41, Domain::ZERO_TWO_PI).unwrap();
        let mut buf = vec![0.0; 41];
        for &x in &[0.0, 0.3, 1.7, 3.1, 6.2] {
            f.eval_in_cell(0, x, &mut buf);
            for (k, v) in buf.iter().enumerate() {
                assert!((v - fourier_phi(k + 1, x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn d5_basis_values() {
        let f = Fourier::new(5, Domain::ZERO_TWO_PI).unwrap();
        let mut buf = vec![0.0; 5];
        let x = 0.4;
        f.eval_in_cell(0, x, &mut buf);
        let expect = [1.0, SQRT_2 * x.cos(), SQRT_2 * x.sin(), SQRT_2 * (2.0 * x).cos(), SQRT_2 * (2.0 * x).sin()];
        for (a, b) in buf.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(f.label(3), "cos(2x)");
    }
}
