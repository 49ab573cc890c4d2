//! Members of a finite-dimensional model and their norms under the uniform
//! design.

use serde::{Deserialize, Serialize};

use crate::basis::Dictionary;
use crate::error::{LabError, Result};
use crate::quadrature;

/// Grid points per dictionary dimension used for sup norms and root brackets.
pub const GRID_PER_DIM: usize = 64;
/// Bisection stops once the bracket is below this fraction of the domain width.
pub const ROOT_TOL: f64 = 1e-10;
/// Relative slack under which `|f| = t` counts as `|f| >= t`.
pub const TIE_TOL: f64 = 1e-12;
/// Local maxima of the sup grid that are refined by golden-section search.
const REFINED_PEAKS: usize = 8;

/// `sum_k coeffs[k] phi_k` for a given dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFunction {
    dictionary: Dictionary,
    coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub l2: f64,
    pub sup: f64,
    pub l1: f64,
    /// `(q, ||f||_q)` in the order requested.
    pub lq: Vec<(f64, f64)>,
}

impl NormReport {
    pub fn lq(&self, q: f64) -> Option<f64> {
        self.lq.iter().find(|(p, _)| *p == q).map(|&(_, v)| v)
    }
}

impl ModelFunction {
    pub fn new(dictionary: Dictionary, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(LabError::Parameter("coefficient vector is empty".into()));
        }
        if coeffs.len() != dictionary.dim() {
            return Err(LabError::Parameter(format!(
                "{} coefficients for a dictionary of dimension {}",
                coeffs.len(),
                dictionary.dim()
            )));
        }
        Ok(ModelFunction { dictionary, coeffs })
    }

    pub fn zero(dictionary: Dictionary) -> Self {
        let coeffs = vec![0.0; dictionary.dim()];
        ModelFunction { dictionary, coeffs }
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        self.dictionary.domain().check(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    #[inline]
    pub fn evaluate_unchecked(&self, x: f64) -> f64 {
        let basis = self.dictionary.basis();
        basis.combine_in_cell(basis.cell_of(x), &self.coeffs, x)
    }

    #[inline]
    fn eval_cell(&self, cell: usize, x: f64) -> f64 {
        self.dictionary.basis().combine_in_cell(cell, &self.coeffs, x)
    }

    /// Parseval: the Euclidean norm of the coefficients.
    pub fn l2(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        ModelFunction {
            dictionary: self.dictionary.clone(),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.l2();
        if norm == 0.0 {
            return Err(LabError::ZeroFunction);
        }
        Ok(self.scaled(1.0 / norm))
    }

    pub fn minus(&self, other: &ModelFunction) -> Result<Self> {
        if self.dictionary != other.dictionary {
            return Err(LabError::Parameter("functions live in different models".into()));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(ModelFunction { dictionary: self.dictionary.clone(), coeffs })
    }

    /// Constant value on each cell; only meaningful for piecewise-constant bases.
    fn cell_values(&self) -> Vec<(f64, f64)> {
        let width = self.dictionary.domain().width();
        self.dictionary
            .cells()
            .into_iter()
            .enumerate()
            .map(|(i, (a, b))| ((b - a) / width, self.eval_cell(i, 0.5 * (a + b))))
            .collect()
    }

    fn piecewise_constant(&self) -> bool {
        self.dictionary.basis().piecewise_constant()
    }

    fn grid_points(&self, a: f64, b: f64) -> usize {
        let d = self.dictionary.dim();
        let width = self.dictionary.domain().width();
        ((GRID_PER_DIM * d) as f64 * (b - a) / width).ceil().max(16.0) as usize
    }

    /// `||f||_inf`. Exact for piecewise-constant bases; otherwise a grid of
    /// `64 D` points (cell endpoints included) refined by golden-section search
    /// around the largest local maxima of `|f|`, hence a lower bound.
    pub fn sup(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if self.piecewise_constant() {
            return self.cell_values().iter().fold(0.0, |m, &(_, v)| m.max(v.abs()));
        }
        let mut best: f64 = 0.0;
        for (i, (a, b)) in self.dictionary.cells().into_iter().enumerate() {
            best = best.max(sup_on_cell(|x| self.eval_cell(i, x).abs(), a, b, self.grid_points(a, b)));
        }
        best
    }

    /// Roots of `f - level` on cell `cell`, bracketed on the grid and bisected.
    fn crossings(&self, cell: usize, level: f64, a: f64, b: f64) -> Vec<f64> {
        let tol = ROOT_TOL * self.dictionary.domain().width();
        crossings(|x| self.eval_cell(cell, x) - level, a, b, self.grid_points(a, b), tol)
    }

    /// `||f||_q` for `q > 0`. Piecewise-constant bases are exact; otherwise
    /// `|f|^q` is integrated on the root-free pieces of each cell.
    pub fn lq_norm(&self, q: f64) -> Result<f64> {
        if !(q > 0.0) {
            return Err(LabError::Parameter(format!("exponent q must be positive, got {q}")));
        }
        if self.is_zero() {
            return Ok(0.0);
        }
        if self.piecewise_constant() {
            let s: f64 = self.cell_values().iter().map(|&(w, v)| w * v.abs().powf(q)).sum();
            return Ok(s.powf(1.0 / q));
        }
        let d = self.dictionary.dim();
        let width = self.dictionary.domain().width();
        let mut total = 0.0;
        for (i, (a, b)) in self.dictionary.cells().into_iter().enumerate() {
            let mut knots = vec![a];
            knots.extend(self.crossings(i, 0.0, a, b));
            knots.push(b);
            for w in knots.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                if hi <= lo {
                    continue;
                }
                let panels = ((16 * d) as f64 * (hi - lo) / width).ceil().max(1.0) as usize;
                let r = quadrature::integrate(|x| self.eval_cell(i, x).abs().powf(q), lo, hi, panels);
                if !r.converged {
                    return Err(LabError::Numeric(format!(
                        "L{q} quadrature did not converge on [{lo}, {hi}] after {} nodes",
                        r.nodes_used
                    )));
                }
                total += r.value;
            }
        }
        Ok((total / width).powf(1.0 / q))
    }

    pub fn norms(&self, q_list: &[f64]) -> Result<NormReport> {
        let lq = q_list.iter().map(|&q| Ok((q, self.lq_norm(q)?))).collect::<Result<Vec<_>>>()?;
        Ok(NormReport { l2: self.l2(), sup: self.sup(), l1: self.lq_norm(1.0)?, lq })
    }

    /// Uniform measure of `{ |f| >= level }` (ties within `TIE_TOL` count).
    pub fn superlevel_measure(&self, level: f64) -> f64 {
        let floor = level * (1.0 - TIE_TOL);
        if self.piecewise_constant() {
            return self.cell_values().iter().filter(|(_, v)| v.abs() >= floor).map(|(w, _)| w).sum();
        }
        let width = self.dictionary.domain().width();
        let tol = ROOT_TOL * width;
        let mut measure = 0.0;
        for (i, (a, b)) in self.dictionary.cells().into_iter().enumerate() {
            let points = self.grid_points(a, b);
            let xs = grid(a, b, points);
            let values: Vec<f64> = xs.iter().map(|&x| self.eval_cell(i, x)).collect();
            let mut knots = vec![a, b];
            for level in [level, -level] {
                let shifted: Vec<f64> = values.iter().map(|v| v - level).collect();
                knots.extend(bracketed_roots(|x| self.eval_cell(i, x) - level, &xs, &shifted, tol));
            }
            knots.sort_by(f64::total_cmp);
            for w in knots.windows(2) {
                if w[1] > w[0] && self.eval_cell(i, 0.5 * (w[0] + w[1])).abs() >= floor {
                    measure += w[1] - w[0];
                }
            }
        }
        (measure / width).clamp(0.0, 1.0)
    }
}

/// Grid maximum of `g` on `[a, b]` with golden-section refinement of the
/// largest local maxima.
pub(crate) fn sup_on_cell<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, points: usize) -> f64 {
    let h = (b - a) / points as f64;
    let values: Vec<f64> = (0..=points).map(|j| g(if j == points { b } else { a + j as f64 * h })).collect();
    let mut peaks: Vec<usize> = (0..=points)
        .filter(|&j| {
            let left = if j == 0 { f64::NEG_INFINITY } else { values[j - 1] };
            let right = if j == points { f64::NEG_INFINITY } else { values[j + 1] };
            values[j] >= left && values[j] >= right
        })
        .collect();
    peaks.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let mut best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for &j in peaks.iter().take(REFINED_PEAKS) {
        let lo = a + j.saturating_sub(1) as f64 * h;
        let hi = (a + (j + 1) as f64 * h).min(b);
        best = best.max(golden_max(&g, lo, hi));
    }
    best
}

fn golden_max<G: Fn(f64) -> f64>(g: &G, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let tol = 1e-13 * (1.0 + lo.abs().max(hi.abs()));
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let (mut gc, mut gd) = (g(c), g(d));
    while hi - lo > tol {
        if gc > gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - INV_PHI * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + INV_PHI * (hi - lo);
            gd = g(d);
        }
    }
    gc.max(gd)
}

fn grid(a: f64, b: f64, points: usize) -> Vec<f64> {
    let step = (b - a) / points as f64;
    (0..=points).map(|j| if j == points { b } else { a + j as f64 * step }).collect()
}

/// Sign changes of `h` on a uniform grid of `[a, b]`, refined by bisection
/// to `tol`. Grid points where `h` vanishes exactly are returned as roots.
pub(crate) fn crossings<H: Fn(f64) -> f64>(h: H, a: f64, b: f64, points: usize, tol: f64) -> Vec<f64> {
    let xs = grid(a, b, points);
    let values: Vec<f64> = xs.iter().map(|&x| h(x)).collect();
    bracketed_roots(h, &xs, &values, tol)
}

fn bracketed_roots<H: Fn(f64) -> f64>(h: H, xs: &[f64], values: &[f64], tol: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    if values[0] == 0.0 {
        roots.push(xs[0]);
    }
    for j in 1..xs.len() {
        let (prev, cur) = (values[j - 1], values[j]);
        if cur == 0.0 {
            roots.push(xs[j]);
        } else if prev != 0.0 && (prev < 0.0) != (cur < 0.0) {
            let (mut lo, mut hi) = (xs[j - 1], xs[j]);
            let neg_at_lo = prev < 0.0;
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if (h(mid) < 0.0) == neg_at_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    roots
}

/// `R_m = sup_x sqrt(sum_k phi_k(x)^2)`, the largest ratio `||s||_inf / ||s||_2`.
pub fn sup_ratio(dictionary: &Dictionary) -> f64 {
    let basis = dictionary.basis();
    let d = dictionary.dim();
    let width = dictionary.domain().width();
    let mut best: f64 = 0.0;
    let mut buf = vec![0.0; d];
    for (i, (a, b)) in dictionary.cells().into_iter().enumerate() {
        if basis.piecewise_constant() {
            basis.eval_in_cell(i, 0.5 * (a + b), &mut buf);
            best = best.max(buf.iter().map(|v| v * v).sum::<f64>());
            continue;
        }
        let points = ((GRID_PER_DIM * d) as f64 * (b - a) / width).ceil().max(16.0) as usize;
        let energy = |x: f64| {
            let mut local = vec![0.0; d];
            basis.eval_in_cell(i, x, &mut local);
            local.iter().map(|v| v * v).sum::<f64>()
        };
        best = best.max(sup_on_cell(energy, a, b, points));
    }
    best.sqrt()
}
