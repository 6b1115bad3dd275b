//! Composite Gauss–Legendre rules on intervals and tensor-product boxes.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

/// Nodes per panel.
pub const PANEL_ORDER: usize = 16;

/// A composite Gauss–Legendre rule on `[a, b]`.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CompositeRule {
    /// `panels` equal sub-intervals, each with an `order`-point rule.
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let panels = panels.max(1);
        let order = NonZeroUsize::new(order).unwrap_or(NonZeroUsize::MIN);
        let base = GaussLegendre::new(order);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order.get());
        let mut weights = Vec::with_capacity(panels * order.get());
        for p in 0..panels {
            let lo = a + p as f64 * width;
            for &(x, w) in base.as_node_weight_pairs() {
                nodes.push(lo + 0.5 * width * (x + 1.0));
                weights.push(0.5 * width * w);
            }
        }
        Self { nodes, weights }
    }

    /// A rule with at least `min_points` nodes and at least two panels per
    /// oscillation when the integrand completes `cycles` periods on `[a, b]`.
    pub fn for_oscillation(a: f64, b: f64, min_points: usize, cycles: f64) -> Self {
        let by_points = min_points.div_ceil(PANEL_ORDER);
        let by_cycles = (2.0 * cycles.max(0.0)).ceil() as usize;
        Self::new(a, b, by_points.max(by_cycles).max(1), PANEL_ORDER)
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

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Integrates `f` over the box `Π rules[d]` by full tensor product.
pub fn integrate_tensor<F: FnMut(&[f64]) -> f64>(rules: &[&CompositeRule], mut f: F) -> f64 {
    if rules.is_empty() {
        return f(&[]);
    }
    let dim = rules.len();
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0; dim];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for d in 0..dim {
            point[d] = rules[d].nodes[idx[d]];
            w *= rules[d].weights[idx[d]];
        }
        total += w * f(&point);
        let mut d = dim;
        loop {
            if d == 0 {
                return total;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < rules[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}
