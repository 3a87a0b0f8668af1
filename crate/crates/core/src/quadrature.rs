//! Gauss–Legendre rules and fixed composite panels.

use std::f64::consts::PI;

/// An n-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are roots of P_n found by Newton iteration from the Chebyshev
    /// guesses cos(π(i − ¼)/(n + ½)).
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be at least 1");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The same Gauss–Legendre rule applied on `panels` equal sub-intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeRule {
    rule: GaussLegendre,
    panels: usize,
}

impl CompositeRule {
    pub fn new(rule: GaussLegendre, panels: usize) -> Self {
        assert!(panels >= 1, "composite rule needs at least one panel");
        Self { rule, panels }
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn point_count(&self) -> usize {
        self.panels * self.rule.order()
    }

    /// Absolute nodes and weights on [a, b], in ascending node order.
    pub fn nodes_and_weights(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let h = (b - a) / self.panels as f64;
        let mut out = Vec::with_capacity(self.point_count());
        for p in 0..self.panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            for (x, w) in self.rule.nodes.iter().zip(&self.rule.weights) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }

    /// Panel sums are accumulated left to right, so results are reproducible.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        let h = (b - a) / self.panels as f64;
        (0..self.panels)
            .map(|p| {
                let lo = a + p as f64 * h;
                self.rule.integrate(&f, lo, lo + h)
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn known_two_and_three_point_rules() {
        let g2 = GaussLegendre::new(2);
        assert_relative_eq!(g2.nodes()[1], 1.0 / 3.0_f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(g2.weights()[0], 1.0, max_relative = 1e-15);
        let g3 = GaussLegendre::new(3);
        assert_eq!(g3.nodes()[1], 0.0);
        assert_relative_eq!(g3.nodes()[2], (0.6_f64).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(g3.weights()[1], 8.0 / 9.0, max_relative = 1e-15);
        assert_relative_eq!(g3.weights()[0], 5.0 / 9.0, max_relative = 1e-15);
    }

    #[test]
    fn weights_sum_to_two_and_nodes_sorted() {
        for n in 1..=40 {
            let g = GaussLegendre::new(n);
            let s: f64 = g.weights().iter().sum();
            assert_relative_eq!(s, 2.0, max_relative = 1e-14);
            assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let g = GaussLegendre::new(6);
        for k in 0..=11 {
            let got = g.integrate(|x| x.powi(k), 0.0, 1.0);
            assert_relative_eq!(got, 1.0 / (k as f64 + 1.0), max_relative = 1e-14);
        }
    }

    #[test]
    fn composite_oscillatory_integral() {
        // ∫_0^{20π} sin² x dx = 10π
        let c = CompositeRule::new(GaussLegendre::new(8), 40);
        let got = c.integrate(|x| x.sin().powi(2), 0.0, 20.0 * PI);
        assert_relative_eq!(got, 10.0 * PI, max_relative = 1e-13);
        let nw = c.nodes_and_weights(0.0, 20.0 * PI);
        assert_eq!(nw.len(), c.point_count());
        let again: f64 = nw.iter().map(|(x, w)| w * x.sin().powi(2)).sum();
        assert_relative_eq!(again, got, max_relative = 1e-14);
    }
}
