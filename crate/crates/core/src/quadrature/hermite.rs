use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest supported quadrature order.
pub const MAX_ORDER: usize = 64;

/// Nodes and weights of a Gauss-Hermite rule for `∫ e^{-x²} f(x) dx`.
///
/// Nodes are sorted in increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermiteRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermiteRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Approximates `∫ e^{-x²} f(x) dx` over the real line.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Approximates `E[f(Z)]` for a standard normal `Z`.
    pub fn expect_standard_normal<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let scale = 2f64.sqrt();
        self.integrate(|x| f(scale * x)) / PI.sqrt()
    }
}

/// Gauss-Hermite rule of order `q` (exact for polynomials of degree `2q - 1`).
///
/// Roots of `H_q` are found by Newton iteration on the orthonormal Hermite
/// recurrence, which stays within floating-point range for every supported
/// order. The weight of node `ξ` is `2 / (ψ'_q(ξ))²` where `ψ_q` is the
/// orthonormal polynomial; this equals `2^{q-1} q! √π / (q² H_{q-1}(ξ)²)`.
pub fn gauss_hermite(q: usize) -> Result<GaussHermiteRule> {
    if !(1..=MAX_ORDER).contains(&q) {
        return Err(Error::QuadratureOrder(q));
    }
    let n = q as f64;
    let half = q.div_ceil(2);
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    let mut z = 0.0;
    for i in 0..half {
        // Initial guesses for the largest roots first
        z = match i {
            0 => (2.0 * n + 1.0).sqrt() - 1.85575 * (2.0 * n + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * n.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[q - 1],
            3 => 1.91 * z - 0.91 * nodes[q - 2],
            _ => 2.0 * z - nodes[q - i + 1],
        };
        let mut derivative = 0.0;
        for _ in 0..100 {
            let (value, d) = orthonormal_hermite(q, z);
            derivative = d;
            let step = value / d;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = orthonormal_hermite(q, z);
        if d.is_finite() {
            derivative = d;
        }
        nodes[q - 1 - i] = z;
        nodes[i] = -z;
        let w = 2.0 / (derivative * derivative);
        weights[q - 1 - i] = w;
        weights[i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    Ok(GaussHermiteRule { nodes, weights })
}

/// Value and derivative of the orthonormal Hermite function of degree `q`
/// (without the Gaussian factor).
fn orthonormal_hermite(q: usize, x: f64) -> (f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 1..=q {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = x * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * q as f64).sqrt() * p2)
}
