use std::f64::consts::{PI, SQRT_2};

use crate::basis::{make_dictionary, DictionarySpec};
use crate::domain::Domain;
use crate::error::{LabError, Result};
use crate::model::ModelFunction;

/// Fejér kernel in coefficient form,
/// `F_l(t) = sum_{|k| <= l-1} (1 - |k|/l) e^{ikt}`.
///
/// With this normalization `F_l >= 0`, `||F_l||_1 = 1`, `F_l(0) = l` and
/// `||F_l||_2^2 = 1 + (2/l^2) sum_{j<l} j^2`. The closed form
/// `sin^2((l+1)t/2) / ((l+1) sin^2(t/2))`, with peak `l + 1`, is
/// `FejerKernel::new(l + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FejerKernel {
    l: usize,
}

impl FejerKernel {
    pub fn new(l: usize) -> Self {
        assert!(l >= 1, "Fejér kernel order must be >= 1");
        FejerKernel { l }
    }

    pub fn order(&self) -> usize {
        self.l
    }

    /// Smallest odd Fourier dimension containing the kernel.
    pub fn min_dim(&self) -> usize {
        2 * self.l - 1
    }

    pub fn peak(&self) -> f64 {
        self.l as f64
    }

    /// Closed form `sin^2(l t / 2) / (l sin^2(t / 2))`.
    pub fn eval(&self, t: f64) -> f64 {
        let l = self.l as f64;
        let s = (0.5 * t).sin();
        if s.abs() < 1e-8 {
            // Taylor: F(t) = l - (l^2-1) l t^2 / 12 + O(t^4) near t = 0 mod 2pi.
            let r = t - 2.0 * PI * (t / (2.0 * PI)).round();
            return l - (l * l - 1.0) * l * r * r / 12.0;
        }
        let num = (0.5 * l * t).sin();
        num * num / (l * s * s)
    }

    /// `||F_l||_2^2` from the sum-of-squares identity.
    pub fn l2_norm_sq(&self) -> f64 {
        let l = self.l as f64;
        let m = l - 1.0;
        1.0 + 2.0 / (l * l) * (m * (m + 1.0) * (2.0 * m + 1.0) / 6.0)
    }

    /// Coefficients in the interleaved Fourier basis of dimension `dim`.
    pub fn coefficients(&self, dim: usize) -> Vec<f64> {
        assert!(dim >= self.min_dim(), "dimension {dim} too small for F_{}", self.l);
        let mut c = vec![0.0; dim];
        c[0] = 1.0;
        for k in 1..self.l {
            c[2 * k - 1] = SQRT_2 * (1.0 - k as f64 / self.l as f64);
        }
        c
    }
}

/// `F_l` as a member of the Fourier model of dimension `2l + 1` on `[-pi, pi]`.
pub fn fejer_as_model_function(l: usize) -> Result<ModelFunction> {
    if l == 0 {
        return Err(LabError::Parameter("Fejér order must be >= 1".into()));
    }
    let dim = 2 * l + 1;
    let mut spec = DictionarySpec::fourier(dim);
    spec.domain = Some(Domain::SYMMETRIC_PI.label());
    let dict = make_dictionary(&spec)?;
    ModelFunction::new(dict, FejerKernel::new(l).coefficients(dim))
}

/// `(1/(l+1)) (pi/eps)^2`, the tail bound `sup_{eps <= |t| <= pi}` of the
/// closed-form kernel with peak `l + 1`.
pub fn fejer_tail_bound(l: usize, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= PI) {
        return Err(LabError::Parameter(format!("epsilon must lie in (0, pi], got {epsilon}")));
    }
    Ok((PI / epsilon).powi(2) / (l as f64 + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_is_constant() {
        let f = fejer_as_model_function(1).unwrap();
        assert_eq!(f.coeffs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn l2_norm_of_order_two() {
        assert!((FejerKernel::new(2).l2_norm_sq() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn peaks() {
        // Coefficient form peaks at l; the displayed closed form of index 10
        // (peak 11) is the coefficient-form kernel of order 11.
        assert!((FejerKernel::new(10).eval(0.0) - 10.0).abs() < 1e-12);
        assert!((FejerKernel::new(11).eval(0.0) - 11.0).abs() < 1e-12);
        let f = fejer_as_model_function(10).unwrap();
        assert!((f.evaluate(0.0).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_coefficients() {
        let l = 7;
        let f = fejer_as_model_function(l).unwrap();
        let k = FejerKernel::new(l);
        for i in 0..=50 {
            let t = -PI + 2.0 * PI * i as f64 / 50.0;
            assert!((f.evaluate(t).unwrap() - k.eval(t)).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn tail_bound_values() {
        assert!((fejer_tail_bound(9, PI).unwrap() - 0.1).abs() < 1e-15);
        assert!((fejer_tail_bound(1, PI / 2.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(fejer_tail_bound(3, 0.0).is_err());
        assert!(fejer_tail_bound(3, 4.0).is_err());
        // Monotone decrease toward 0 as l grows at eps = pi.
        let b: Vec<f64> = [1, 10, 100, 1000].iter().map(|&l| fejer_tail_bound(l, PI).unwrap()).collect();
        assert!(b.windows(2).all(|w| w[1] < w[0]) && b[3] < 1e-3);
    }

    #[test]
    fn tail_bound_dominates_closed_form_kernel() {
        for l in [1usize, 2, 5, 16, 63] {
            let kernel = FejerKernel::new(l + 1);
            for &eps in &[0.05, 0.3, 1.0, PI / 2.0, PI] {
                let bound = fejer_tail_bound(l, eps).unwrap();
                let sup = (0..=20_000)
                    .map(|i| eps + (PI - eps) * i as f64 / 20_000.0)
                    .map(|t| kernel.eval(t))
                    .fold(0.0, f64::max);
                assert!(sup <= bound * (1.0 + 1e-12), "l={l} eps={eps}: {sup} > {bound}");
            }
        }
    }
}
