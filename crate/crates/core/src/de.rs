//! Density evolution for the BP detectors.
//!
//! In the large-degree limit the messages of the perfect-cue detector (and of
//! the imperfect-cue detector) become Gaussian with variance `mu^(t)` obeying
//! a scalar recursion; the finite-degree recursion is realized by population
//! dynamics. Both feed the predicted error rates and the closed-form bounds.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use libm::erfc;

use crate::bp::FUpdate;
use crate::model::{GroundTruth, ModelParams};
use crate::quadrature::GaussHermite;
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Standard normal tail `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `E[g(mu/2 + sqrt(mu) Z)]`, `Z ~ N(0, 1)`. Exactly `g(0)` at `mu = 0`.
pub fn gauss_expect(gh: &GaussHermite, mu: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
    if !(mu >= 0.0) {
        return Err(Error::invalid(format!("variance must be nonnegative, got {mu}")));
    }
    if mu == 0.0 {
        return Ok(g(0.0));
    }
    let s = mu.sqrt();
    Ok(gh.expect(|z| g(0.5 * mu + s * z)))
}

/// Parameters of the Gaussian (large-degree) recursions.
///
/// `snr` is `lambda_alpha` for the perfect recursion and `lambda` for the
/// imperfect one.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DeConfig {
    pub snr: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t_max: usize,
    pub quad_nodes: usize,
    pub tol: f64,
}

impl DeConfig {
    pub fn new(snr: f64, kappa: f64, alpha: f64, beta: f64) -> DeConfig {
        DeConfig {
            snr,
            kappa,
            alpha,
            beta,
            t_max: 200,
            quad_nodes: 80,
            tol: 1e-10,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.snr >= 0.0 && self.snr.is_finite()) {
            return Err(Error::invalid(format!("SNR must be finite and nonnegative, got {}", self.snr)));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::invalid(format!("kappa = {} not in (0, 1)", self.kappa)));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha = {} not in [0, 1)", self.alpha)));
        }
        if self.t_max == 0 {
            return Err(Error::invalid("t_max must be at least 1"));
        }
        if self.quad_nodes < 20 {
            return Err(Error::invalid(format!("need at least 20 quadrature nodes, got {}", self.quad_nodes)));
        }
        Ok(())
    }
}

/// `mu^(0), mu^(1), ...` up to the fixed point or `t_max` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct MuTrajectory {
    pub mu: Vec<f64>,
    pub converged: bool,
}

impl MuTrajectory {
    pub fn last(&self) -> f64 {
        *self.mu.last().unwrap()
    }

    /// First index at which `mu` decreases by more than `slack`.
    pub fn first_decrease(&self, slack: f64) -> Option<usize> {
        self.mu.windows(2).position(|w| w[1] < w[0] - slack).map(|i| i + 1)
    }
}

fn iterate(cfg: &DeConfig, step: impl Fn(f64) -> Result<f64>) -> Result<MuTrajectory> {
    let mut mu = vec![0.0];
    let mut converged = false;
    for _ in 0..cfg.t_max {
        let prev = *mu.last().unwrap();
        let next = step(prev)?;
        mu.push(next);
        if (next - prev).abs() < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(MuTrajectory { mu, converged })
}

/// Variance recursion of the perfect-cue detector.
pub fn mu_recursion_perfect(cfg: &DeConfig) -> Result<MuTrajectory> {
    cfg.validate()?;
    let gh = GaussHermite::new(cfg.quad_nodes)?;
    let (k, a, l) = (cfg.kappa, cfg.alpha, cfg.snr);
    let cue_term = l * a * (1.0 - k) / ((1.0 - a).powi(2) * k);
    iterate(cfg, |mu| {
        let e = gauss_expect(&gh, mu, |y| (1.0 - k) / (k * (1.0 - a) + (1.0 - k) * (-y).exp()))?;
        Ok(cue_term + l * e)
    })
}

/// Variance recursion of the imperfect-cue detector, `0 < beta < 1`.
pub fn mu_recursion_imperfect(cfg: &DeConfig) -> Result<MuTrajectory> {
    cfg.validate()?;
    if !(cfg.beta > 0.0 && cfg.beta < 1.0) {
        return Err(Error::invalid(format!(
            "imperfect recursion needs beta in (0, 1), got {}",
            cfg.beta
        )));
    }
    let gh = GaussHermite::new(cfg.quad_nodes)?;
    let (k, a, b, l) = (cfg.kappa, cfg.alpha, cfg.beta, cfg.snr);
    let w_cue = a * b * b * l;
    let w_rest = (1.0 - a * b).powi(2) * l;
    let odds = (1.0 - k) / k;
    let c0 = k * (1.0 - a * b);
    let c1 = 1.0 - k - a * k + a * k * b;
    iterate(cfg, |mu| {
        let e1 = gauss_expect(&gh, mu, |y| odds / (b + (1.0 - b) * (-y).exp()))?;
        let e2 = gauss_expect(&gh, mu, |y| (1.0 - k) / (c0 + c1 * (-y).exp()))?;
        Ok(w_cue * e1 + w_rest * e2)
    })
}

/// Closed-form bounds `[lo, hi]` on `mu^(t)`, `t >= 1`, perfect cues.
pub fn mu_bounds_perfect(lambda_alpha: f64, kappa: f64, alpha: f64) -> (f64, f64) {
    let hi = lambda_alpha * (1.0 - kappa) / (kappa * (1.0 - alpha).powi(2));
    (alpha * hi, hi)
}

/// Closed-form bounds `[lo, hi]` on `mu^(t)`, imperfect cues.
pub fn mu_bounds_imperfect(lambda: f64, kappa: f64, alpha: f64, beta: f64) -> (f64, f64) {
    let hi = lambda * (1.0 - kappa) / kappa;
    (alpha * beta * beta * hi, hi)
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0) {
        return Err(Error::invalid(format!("predicted error needs mu > 0, got {mu}")));
    }
    Ok(())
}

/// Twice the limiting misclassification fraction of the threshold estimator
/// (relative to `K (1 - alpha)`), perfect cues.
pub fn predicted_error_perfect(mu: f64, kappa: f64, alpha: f64) -> Result<f64> {
    check_mu(mu)?;
    let big_l = ((1.0 - kappa) / (kappa * (1.0 - alpha))).ln();
    let s = mu.sqrt();
    let fp = big_l.exp() * q_function((big_l + mu / 2.0) / s);
    let fneg = q_function((mu / 2.0 - big_l) / s);
    Ok(2.0 * (fp + fneg))
}

/// Twice the limiting misclassification fraction (relative to `K`) of the
/// threshold estimator, imperfect cues.
pub fn predicted_error_imperfect(mu: f64, kappa: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_mu(mu)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!("beta = {beta} not in (0, 1)")));
    }
    let (k, a, b) = (kappa, alpha, beta);
    let s = mu.sqrt();
    let half = mu / 2.0;
    let cue_llr = (b / (1.0 - b)).ln();
    let c1 = 1.0 - k - a * k + a * k * b;
    let noncue_member = ((1.0 - k - a * k * (1.0 - b)) / (k * (1.0 - a * b))).ln();
    let noncue_outsider = ((1.0 - a * b) * k / c1).ln();
    let terms = a * b * q_function((half + cue_llr) / s)
        + (1.0 - a * b) * q_function((half - noncue_member) / s)
        + a * (1.0 - b) * q_function((half - cue_llr) / s)
        + ((1.0 - k) / k - a * (1.0 - b)) * q_function((half - noncue_outsider) / s);
    Ok(2.0 * terms)
}

/// Asymptotic error bound for perfect cues, capped at the trivial value 2.
pub fn theorem_bound_perfect(lambda_alpha: f64, kappa: f64, alpha: f64) -> f64 {
    let odds = (1.0 - kappa) / (kappa * (1.0 - alpha));
    let exponent = alpha * lambda_alpha * (1.0 - kappa) / (8.0 * kappa * (1.0 - alpha).powi(2));
    (2.0 * odds.sqrt() * (-exponent).exp()).min(2.0)
}

/// Asymptotic error bound for imperfect cues, capped at 2.
pub fn theorem_bound_imperfect(lambda: f64, kappa: f64, alpha: f64, beta: f64) -> f64 {
    let pre = alpha * (beta * (1.0 - beta)).sqrt()
        + ((1.0 - alpha * beta) * ((1.0 - kappa) / kappa - alpha * (1.0 - beta))).sqrt();
    let exponent = lambda * alpha * beta * beta * (1.0 - kappa) / (8.0 * kappa);
    (2.0 * pre * (-exponent).exp()).min(2.0)
}

/// Finite-degree population dynamics for the perfect-cue messages.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PopulationConfig {
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub pop_size: usize,
    pub generations: usize,
    pub seed: u64,
}

impl PopulationConfig {
    fn validate(&self) -> Result<()> {
        if self.pop_size < 10_000 {
            return Err(Error::invalid(format!("pop_size must be at least 1e4, got {}", self.pop_size)));
        }
        if !(self.b > 0.0 && self.a >= self.b && self.a.is_finite()) {
            return Err(Error::invalid(format!("need a >= b > 0, got a = {}, b = {}", self.a, self.b)));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::invalid(format!("kappa = {} not in (0, 1)", self.kappa)));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha = {} not in [0, 1)", self.alpha)));
        }
        Ok(())
    }

    /// `log((1 - kappa) / (kappa (1 - alpha)))`
    pub fn upsilon(&self) -> f64 {
        ((1.0 - self.kappa) / (self.kappa * (1.0 - self.alpha))).ln()
    }

    /// Effective SNR `lambda_alpha` of these finite parameters.
    pub fn lambda_alpha(&self) -> f64 {
        let k = self.kappa;
        (k * (self.a - self.b) * (1.0 - self.alpha)).powi(2) / ((1.0 - k) * self.b)
    }
}

/// Empirical laws of the shifted messages given `sigma = 0` and `sigma = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSample {
    pub xi0: Vec<f64>,
    pub xi1: Vec<f64>,
    /// Common shift applied by [`symmetrize`] when this generation was made.
    pub shift: f64,
}

/// Shift both populations by the common `delta` that restores
/// `E0[s(y)] + E1[s(y)] = 1`, `s` the logistic function and `y = xi +
/// upsilon` the likelihood ratio. Exact laws satisfy this; finite
/// populations drift off it and the recursion amplifies a common offset by
/// roughly `b (rho - 1) kappa` per generation. Returns `delta`.
pub fn symmetrize(xi0: &mut [f64], xi1: &mut [f64], upsilon: f64) -> f64 {
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    let gap = |d: f64| {
        let m0 = xi0.iter().map(|&x| sig(x + upsilon + d)).sum::<f64>() / xi0.len() as f64;
        let m1 = xi1.iter().map(|&x| sig(x + upsilon + d)).sum::<f64>() / xi1.len() as f64;
        m0 + m1 - 1.0
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while gap(lo) > 0.0 {
        lo *= 2.0;
    }
    while gap(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = 0.5 * (lo + hi);
    xi0.iter_mut().chain(xi1.iter_mut()).for_each(|x| *x += d);
    d
}

/// Mean, variance and skewness of a sample.
pub fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= m;
    m3 /= m;
    // spread below rounding noise of the mean counts as a point mass
    if m2 <= (4.0 * f64::EPSILON * mean).powi(2) {
        return (mean, 0.0, 0.0);
    }
    let skew = m3 / m2.powf(1.5);
    (mean, m2, skew)
}

/// Generations `0..=cfg.generations` of the distributional recursion, each
/// new sample drawing its summands with replacement from the previous
/// generation, then re-centred with [`symmetrize`].
pub fn population_dynamics(cfg: &PopulationConfig) -> Result<Vec<PopulationSample>> {
    cfg.validate()?;
    let (k, a, b, al) = (cfg.kappa, cfg.a, cfg.b, cfg.alpha);
    let f = FUpdate::from_ab(a, b);
    let ln_rho = f.ln_rho();
    let h = -k * (a - b) - cfg.upsilon();
    let poi = |mean: f64| -> Result<Option<Poisson<f64>>> {
        if mean == 0.0 {
            return Ok(None);
        }
        Poisson::new(mean)
            .map(Some)
            .map_err(|e| Error::invalid(format!("Poisson mean {mean}: {e}")))
    };
    // (outsider-neighbour, member-neighbour, cue-neighbour) rates per label
    let rates = [
        [poi((1.0 - k) * b)?, poi(k * b * (1.0 - al))?, poi(k * b * al)?],
        [poi((1.0 - k) * b)?, poi(k * a * (1.0 - al))?, poi(k * a * al)?],
    ];
    let init = -cfg.upsilon();
    let n = cfg.pop_size;
    let mut out = vec![PopulationSample {
        xi0: vec![init; n],
        xi1: vec![init; n],
        shift: 0.0,
    }];
    for t in 1..=cfg.generations {
        let prev = out.last().unwrap();
        let f0: Vec<f64> = prev.xi0.iter().map(|&x| f.eval(x)).collect();
        let f1: Vec<f64> = prev.xi1.iter().map(|&x| f.eval(x)).collect();
        let draw = |label: usize, s: usize| -> f64 {
            let tag = if label == 0 { "pop0" } else { "pop1" };
            let mut rng = rng_from_seed(derive_seed(cfg.seed, (t * n + s) as u64, tag));
            let mut count = |d: &Option<Poisson<f64>>| d.as_ref().map_or(0, |d| d.sample(&mut rng) as usize);
            let [r0, r1, rc] = &rates[label];
            let (l0, l1, lc) = (count(r0), count(r1), count(rc));
            let mut acc = h + lc as f64 * ln_rho;
            for _ in 0..l0 {
                acc += f0[rng.random_range(0..n)];
            }
            for _ in 0..l1 {
                acc += f1[rng.random_range(0..n)];
            }
            acc
        };
        let mut xi0: Vec<f64> = (0..n).into_par_iter().with_min_len(256).map(|s| draw(0, s)).collect();
        let mut xi1: Vec<f64> = (0..n).into_par_iter().with_min_len(256).map(|s| draw(1, s)).collect();
        if a > b && xi1.iter().all(|&x| x == xi1[0]) {
            return Err(Error::DegeneratePopulation { generation: t });
        }
        let shift = symmetrize(&mut xi0, &mut xi1, cfg.upsilon());
        out.push(PopulationSample { xi0, xi1, shift });
    }
    Ok(out)
}

/// A sampled branching-process neighbourhood. Vertex 0 is the root; every
/// other vertex `v` has `parent[v] < v`.
#[derive(Debug, Clone, PartialEq)]
pub struct GwTree {
    pub parent: Vec<u32>,
    pub depth: Vec<u8>,
    pub sigma: Vec<bool>,
    pub cues: Vec<bool>,
}

impl GwTree {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn edges(&self) -> Vec<(u32, u32)> {
        (1..self.len() as u32).map(|v| (self.parent[v as usize], v)).collect()
    }

    pub fn truth(&self) -> Result<GroundTruth> {
        Ok(GroundTruth {
            sigma: self.sigma.clone(),
        })
    }
}

const GW_NODE_CAP: usize = 10_000_000;

/// Sample the depth-`depth` neighbourhood of a uniform vertex in the
/// Poisson branching limit of the planted model. Offspring means are
/// `d1 = K p + (n - K) q` and `d0 = n q`. Cues follow the perfect model when
/// `beta == 1` and the imperfect model otherwise.
pub fn sample_gw_tree(params: &ModelParams, depth: usize, seed: u64) -> Result<GwTree> {
    params.validate()?;
    if depth > 4 {
        return Err(Error::invalid(format!("tree depth {depth} exceeds 4")));
    }
    let (n, k) = (params.n as f64, params.k() as f64);
    let (p, q) = (params.p(), params.q());
    let d = [n * q, k * p + (n - k) * q];
    let member_child = [k * q / d[0], k * p / d[1]];
    let (al, be) = (params.alpha, params.beta);
    let cue_prob = [al * k * (1.0 - be) / (n - k), al * be];
    if cue_prob[0] > 1.0 {
        return Err(Error::invalid("cue rate among non-members exceeds 1"));
    }
    let offspring = [
        Poisson::new(d[0]).map_err(|e| Error::invalid(e.to_string()))?,
        Poisson::new(d[1]).map_err(|e| Error::invalid(e.to_string()))?,
    ];
    let mut rng = rng_from_seed(derive_seed(seed, 0, "gw-tree"));
    let root = rng.random_bool(k / n);
    let mut tree = GwTree {
        parent: vec![u32::MAX],
        depth: vec![0],
        sigma: vec![root],
        cues: vec![rng.random_bool(cue_prob[root as usize])],
    };
    let mut v = 0;
    while v < tree.len() {
        if (tree.depth[v] as usize) < depth {
            let label = tree.sigma[v] as usize;
            let children = offspring[label].sample(&mut rng) as usize;
            if tree.len() + children > GW_NODE_CAP {
                return Err(Error::TooLarge {
                    directed_edges: 2 * (tree.len() + children) as u64,
                    cap: 2 * GW_NODE_CAP as u64,
                });
            }
            for _ in 0..children {
                let s = rng.random_bool(member_child[label]);
                tree.parent.push(v as u32);
                tree.depth.push(tree.depth[v] + 1);
                tree.sigma.push(s);
                tree.cues.push(rng.random_bool(cue_prob[s as usize]));
            }
        }
        v += 1;
    }
    Ok(tree)
}
