//! Gauss–Legendre rules and composite panel quadrature.

use crate::error::{Error, Result};

/// Nodes per panel used by the composite rules in this crate.
pub const PANEL_ORDER: usize = 16;

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights of the composite rule with `panels` equal panels on `[a, b]`.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut xs = Vec::with_capacity(panels * self.len());
        let mut ws = Vec::with_capacity(panels * self.len());
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                xs.push(mid + 0.5 * h * x);
                ws.push(0.5 * h * w);
            }
        }
        (xs, ws)
    }

    /// `∫_a^b f` with the composite rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let (xs, ws) = self.composite(a, b, panels);
        xs.iter().zip(&ws).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
    }
    let dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
    (p1, dp)
}

/// Outcome of a panel-doubling run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Converged {
    pub value: f64,
    /// Difference between the last two estimates.
    pub est_abs_error: f64,
    pub panels: usize,
}

/// Evaluates `estimate(panels)` with the panel count doubled from `start`
/// until two successive estimates differ by at most
/// `max(rel_tol·|value|, abs_tol)`.
pub fn converge_by_doubling<F>(
    context: &'static str,
    start: usize,
    max_panels: usize,
    rel_tol: f64,
    abs_tol: f64,
    mut estimate: F,
) -> Result<Converged>
where
    F: FnMut(usize) -> f64,
{
    let mut panels = start.max(1);
    let mut prev = estimate(panels);
    loop {
        let next_panels = panels * 2;
        if next_panels > max_panels {
            return Err(Error::numeric(
                context,
                format!("no convergence with {panels} panels (last estimate {prev:e})"),
            ));
        }
        let next = estimate(next_panels);
        let diff = (next - prev).abs();
        if diff <= (rel_tol * next.abs()).max(abs_tol) {
            return Ok(Converged {
                value: next,
                est_abs_error: diff,
                panels: next_panels,
            });
        }
        prev = next;
        panels = next_panels;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_nodes_are_symmetric() {
        for n in [1, 2, 5, 16, 40] {
            let g = GaussLegendre::new(n);
            let s: f64 = g.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "n={n}: {s}");
            for i in 0..n {
                assert!((g.nodes()[i] + g.nodes()[n - 1 - i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let g = GaussLegendre::new(8);
        for k in 0..16 {
            let v = g.integrate(0.0, 1.0, 1, |x| x.powi(k));
            assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-15, "k={k}");
        }
    }

    #[test]
    fn doubling_converges_on_oscillatory_integrand() {
        let g = GaussLegendre::new(PANEL_ORDER);
        let c = converge_by_doubling("test", 1, 1 << 12, 1e-12, 1e-15, |p| {
            g.integrate(0.0, 10.0, p, |x| (20.0 * x).cos())
        })
        .unwrap();
        assert!((c.value - (200.0f64).sin() / 20.0).abs() < 1e-13);
    }

    #[test]
    fn doubling_reports_failure() {
        let r = converge_by_doubling("test", 1, 4, 1e-12, 0.0, |p| p as f64);
        assert!(matches!(r, Err(Error::Numeric { .. })));
    }
}
