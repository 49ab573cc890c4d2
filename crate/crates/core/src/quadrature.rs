//! Composite Gauss–Legendre quadrature with panel doubling.
//!
//! Each panel uses a 64-node rule. The initial panel count is supplied by the
//! caller (16·D over the whole domain for dictionary integrands) and is doubled
//! until two successive estimates agree to `REL_TOL` relative, or until the
//! total node count would exceed `MAX_NODES`.

use std::num::NonZeroUsize;
use std::sync::LazyLock;

use gauss_quad::legendre::GaussLegendre;

pub const NODES_PER_PANEL: usize = 64;
pub const REL_TOL: f64 = 1e-10;
/// Absolute floor on the convergence test so integrals that vanish exactly
/// (off-diagonal Gram entries) terminate.
pub const ABS_FLOOR: f64 = 1e-14;
pub const MAX_NODES: usize = 1 << 20;

static RULE: LazyLock<GaussLegendre> =
    LazyLock::new(|| GaussLegendre::new(NonZeroUsize::new(NODES_PER_PANEL).unwrap()));

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub converged: bool,
    pub nodes_used: usize,
}

fn composite<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * h;
            let hi = if p + 1 == panels { b } else { lo + h };
            RULE.integrate(lo, hi, &mut *f)
        })
        .sum()
}

/// Visits the 64 scaled nodes and weights of one panel `[a, b]`.
pub fn gauss_panel<F: FnMut(f64, f64)>(a: f64, b: f64, mut visit: F) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for &(x, w) in RULE.as_node_weight_pairs() {
        visit(mid + half * x, half * w);
    }
}

/// Integrates `f` over `[a, b]` starting from `initial_panels` panels.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, initial_panels: usize) -> Integral {
    if b <= a {
        return Integral { value: 0.0, converged: true, nodes_used: 0 };
    }
    let mut panels = initial_panels.max(1);
    let mut prev = composite(&mut f, a, b, panels);
    let mut used = panels * NODES_PER_PANEL;
    while 2 * panels * NODES_PER_PANEL <= MAX_NODES {
        panels *= 2;
        let next = composite(&mut f, a, b, panels);
        used += panels * NODES_PER_PANEL;
        if (next - prev).abs() <= REL_TOL * next.abs() + ABS_FLOOR {
            return Integral { value: next, converged: true, nodes_used: used };
        }
        prev = next;
    }
    Integral { value: prev, converged: false, nodes_used: used }
}

/// Integrates over consecutive closed cells, allotting panels in proportion to
/// cell length so that `total_panels` covers the union.
pub fn integrate_cells<F: FnMut(f64) -> f64>(
    mut f: F,
    cells: &[(f64, f64)],
    total_panels: usize,
) -> Integral {
    let span: f64 = cells.iter().map(|(a, b)| b - a).sum();
    let mut out = Integral { value: 0.0, converged: true, nodes_used: 0 };
    for &(a, b) in cells {
        let share = ((b - a) / span * total_panels as f64).ceil() as usize;
        let part = integrate(&mut f, a, b, share.max(1));
        out.value += part.value;
        out.converged &= part.converged;
        out.nodes_used += part.nodes_used;
    }
    out
}

/// Vector-valued version of [`integrate`]: `f(x, out)` writes `len` values.
/// Convergence is judged on the largest component change.
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    len: usize,
) -> (Vec<f64>, bool) {
    if b <= a {
        return (vec![0.0; len], true);
    }
    let mut buf = vec![0.0; len];
    let mut pass = |panels: usize| {
        let mut acc = vec![0.0; len];
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let hi = if p + 1 == panels { b } else { lo + h };
            gauss_panel(lo, hi, |x, w| {
                f(x, &mut buf);
                for (s, v) in acc.iter_mut().zip(&buf) {
                    *s += w * v;
                }
            });
        }
        acc
    };
    let mut panels = initial_panels.max(1);
    let mut prev = pass(panels);
    while 2 * panels * NODES_PER_PANEL <= MAX_NODES {
        panels *= 2;
        let next = pass(panels);
        let scale = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let change = next.iter().zip(&prev).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
        if change <= REL_TOL * scale + ABS_FLOOR {
            return (next, true);
        }
        prev = next;
    }
    (prev, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trig_polynomial_integrates_exactly() {
        let r = integrate(|x| (3.0 * x).cos().powi(2), 0.0, 2.0 * PI, 16);
        assert!(r.converged);
        assert!((r.value - PI).abs() < 1e-13);
    }

    #[test]
    fn vanishing_integral_terminates() {
        let r = integrate(|x| (2.0 * x).sin() * x.cos(), 0.0, 2.0 * PI, 16);
        assert!(r.converged);
        assert!(r.value.abs() < 1e-13);
    }

    #[test]
    fn cells_cover_union() {
        let r = integrate_cells(|x| x, &[(0.0, 0.5), (0.5, 1.0)], 4);
        assert!((r.value - 0.5).abs() < 1e-15);
    }
}
