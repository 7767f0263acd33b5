//! Gauss–Hermite quadrature for expectations over a standard normal.

use crate::{Error, Result};

/// Nodes and weights for `E[g(Z)]`, `Z ~ N(0, 1)`: the expectation is
/// approximated by `sum_i weights[i] * g(nodes[i])` and the weights sum to 1.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// `m`-point rule, exact for polynomials of degree `< 2m`.
    pub fn new(m: usize) -> Result<GaussHermite> {
        if m == 0 || m > 150 {
            return Err(Error::invalid(format!("Gauss-Hermite order {m} not in 1..=150")));
        }
        // Roots of the physicists' Hermite polynomial H_m by Newton iteration
        // on the orthonormal recurrence, largest root first.
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let mut x = vec![0.0f64; m];
        let mut w = vec![0.0f64; m];
        let half = m.div_ceil(2);
        let mf = m as f64;
        let mut z = 0.0f64;
        for i in 0..half {
            z = match i {
                0 => (2.0 * mf + 1.0).sqrt() - 1.85575 * (2.0 * mf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * mf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            let mut converged = false;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=m {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * mf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NotConverged {
                    iterations: 100,
                    residual: f64::NAN,
                });
            }
            x[i] = z;
            x[m - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[m - 1 - i] = w[i];
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
        let mut nodes: Vec<f64> = x.iter().map(|v| v * sqrt2).collect();
        let mut weights: Vec<f64> = w.iter().map(|v| v * inv_sqrt_pi).collect();
        nodes.reverse();
        weights.reverse();
        Ok(GaussHermite { nodes, weights })
    }

    pub fn expect(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * g(z))
            .sum()
    }
}
