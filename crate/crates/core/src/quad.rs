//! Composite Gauss-Legendre rules over grid windows.

use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

/// Points per axis per panel.
pub const ORDER: usize = 16;

/// Panels are at most this many density length scales wide.
const SCALES_PER_PANEL: f64 = 4.0;

/// Upper limit on panels per axis per window.
const MAX_PANELS: usize = 512;

fn reference_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        GaussLegendre::new(ORDER)
            .expect("order >= 2")
            .as_node_weight_pairs()
            .to_vec()
    })
}

/// Nodes and weights of a composite rule on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// `panels` equal panels of the 16-point rule.
    pub fn composite(lo: f64, hi: f64, panels: usize) -> Self {
        let panels = panels.max(1);
        let width = (hi - lo) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * ORDER);
        let mut weights = Vec::with_capacity(panels * ORDER);
        for p in 0..panels {
            let a = lo + p as f64 * width;
            let half = 0.5 * width;
            let mid = a + half;
            for &(x, w) in reference_rule() {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Self { nodes, weights }
    }

    /// Enough panels to resolve features of size `length_scale`.
    pub fn resolving(lo: f64, hi: f64, length_scale: f64) -> Self {
        Self::composite(lo, hi, panels_for(hi - lo, length_scale))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

pub(crate) fn panels_for(width: f64, length_scale: f64) -> usize {
    if !(length_scale > 0.0 && length_scale.is_finite()) {
        return 1;
    }
    ((width / (SCALES_PER_PANEL * length_scale)).ceil() as usize).clamp(1, MAX_PANELS)
}

/// `x ln x` with the `0 ln 0 = 0` convention.
pub(crate) fn x_ln_x(x: f64) -> f64 {
    if x < 1e-300 {
        0.0
    } else {
        x * x.ln()
    }
}
