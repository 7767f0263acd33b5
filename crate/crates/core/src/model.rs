//! The planted dense subgraph model `G(K, n, p, q)` and its cue models.
//!
//! A hidden community `S` of `K = round(kappa * n)` nodes is drawn uniformly.
//! Pairs inside `S` are linked with probability `p = a / n`, every other pair
//! with probability `q = b / n`. Cues are revealed either reliably (only
//! members of `S`, each with probability `alpha`) or unreliably, where a cue is
//! a true member with probability `beta`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::rng::{rng_from_seed, DetRng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub kappa: f64,
    /// `n * p`
    pub a: f64,
    /// `n * q`
    pub b: f64,
    pub alpha: f64,
    /// Cue reliability; `1.0` means perfect cues.
    pub beta: f64,
}

impl ModelParams {
    pub fn k(&self) -> usize {
        (self.kappa * self.n as f64).round() as usize
    }

    pub fn p(&self) -> f64 {
        self.a / self.n as f64
    }

    pub fn q(&self) -> f64 {
        self.b / self.n as f64
    }

    /// Community fraction actually realised, `K / n`.
    pub fn kappa_eff(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    /// Checks needed before sampling a graph.
    pub fn validate_graph(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::invalid(format!("kappa = {} not in (0, 1]", self.kappa)));
        }
        let k = self.k();
        if k == 0 || k > self.n {
            return Err(Error::invalid(format!("K = round(kappa n) = {k} not in [1, n]")));
        }
        if !(self.a.is_finite() && self.b.is_finite()) || self.a < 0.0 || self.b < 0.0 {
            return Err(Error::invalid("a and b must be finite and nonnegative"));
        }
        if self.p() > 1.0 {
            return Err(Error::invalid(format!("p = a/n = {} exceeds 1", self.p())));
        }
        if self.q() > 1.0 {
            return Err(Error::invalid(format!("q = b/n = {} exceeds 1", self.q())));
        }
        Ok(())
    }

    /// Full check for detection: additionally `0 < b < a`, `K < n`, `alpha` in
    /// `[0, 1)` and `beta` in `(0, 1]`.
    pub fn validate(&self) -> Result<()> {
        self.validate_graph()?;
        if self.k() >= self.n {
            return Err(Error::invalid("K must be smaller than n"));
        }
        if !(self.b > 0.0 && self.b < self.a) {
            return Err(Error::invalid(format!("need 0 < b < a, got a = {}, b = {}", self.a, self.b)));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha = {} not in [0, 1)", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid(format!("beta = {} not in (0, 1]", self.beta)));
        }
        Ok(())
    }
}

/// Effective SNR `kappa^2 (a - b)^2 / ((1 - kappa) b)`.
pub fn lambda_of(p: &ModelParams) -> f64 {
    snr(p.kappa, p.a, p.b)
}

/// SNR of the uncued part of the community, `lambda * (1 - alpha)^2`.
pub fn lambda_alpha_of(p: &ModelParams) -> f64 {
    snr(p.kappa, p.a, p.b) * (1.0 - p.alpha).powi(2)
}

pub fn snr(kappa: f64, a: f64, b: f64) -> f64 {
    kappa * kappa * (a - b) * (a - b) / ((1.0 - kappa) * b)
}

/// Inverse of [`lambda_of`] in `a`. With `alpha = Some(x)` the target is
/// interpreted as `lambda_alpha` and the extra `(1 - x)` factor is undone.
pub fn a_for_lambda(b: f64, kappa: f64, lambda_target: f64, alpha: Option<f64>) -> Result<f64> {
    if !(lambda_target >= 0.0) {
        return Err(Error::invalid(format!("lambda = {lambda_target} must be >= 0")));
    }
    if !(b > 0.0) || !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::invalid("need b > 0 and kappa in (0, 1)"));
    }
    let mut gap = (lambda_target * (1.0 - kappa) * b).sqrt() / kappa;
    if let Some(alpha) = alpha {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::invalid(format!("alpha = {alpha} not in [0, 1)")));
        }
        gap /= 1.0 - alpha;
    }
    Ok(b + gap)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub sigma: Vec<bool>,
}

impl GroundTruth {
    pub fn from_members(n: usize, members: &[u32]) -> Result<GroundTruth> {
        let mut sigma = vec![false; n];
        for &m in members {
            *sigma
                .get_mut(m as usize)
                .ok_or(Error::NodeOutOfRange { id: m as u64, n })? = true;
        }
        Ok(GroundTruth { sigma })
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn k(&self) -> usize {
        self.sigma.iter().filter(|&&s| s).count()
    }

    /// Sorted member ids.
    pub fn members(&self) -> Vec<u32> {
        indicator_ids(&self.sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CueModel {
    Perfect,
    Imperfect { beta: f64 },
    /// Read from a file; the generating model is unknown.
    Observed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CueAssignment {
    pub c: Vec<bool>,
    pub model: CueModel,
}

impl CueAssignment {
    pub fn none(n: usize) -> CueAssignment {
        CueAssignment {
            c: vec![false; n],
            model: CueModel::Perfect,
        }
    }

    pub fn from_ids(n: usize, ids: &[u32], model: CueModel) -> Result<CueAssignment> {
        let mut c = vec![false; n];
        for &m in ids {
            *c.get_mut(m as usize)
                .ok_or(Error::NodeOutOfRange { id: m as u64, n })? = true;
        }
        Ok(CueAssignment { c, model })
    }

    pub fn count(&self) -> usize {
        self.c.iter().filter(|&&x| x).count()
    }

    pub fn ids(&self) -> Vec<u32> {
        indicator_ids(&self.c)
    }
}

pub(crate) fn indicator_ids(v: &[bool]) -> Vec<u32> {
    v.iter()
        .enumerate()
        .filter(|(_, &x)| x)
        .map(|(i, _)| i as u32)
        .collect()
}

/// Sample a graph and its hidden community. Deterministic given `seed`.
///
/// `S` is the first `K` entries of a partial Fisher-Yates shuffle. Edges are
/// drawn with geometric skips over the lower triangle of the pair matrix,
/// first inside `S` with probability `p`, then over all remaining pairs with
/// probability `q`, so the cost is linear in the number of edges.
pub fn sample_graph(params: &ModelParams, seed: u64) -> Result<(Graph, GroundTruth)> {
    params.validate_graph()?;
    let n = params.n;
    if n > u32::MAX as usize {
        return Err(Error::invalid("n exceeds u32 range"));
    }
    let k = params.k();
    let mut rng = rng_from_seed(seed);

    let mut perm: Vec<u32> = (0..n as u32).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        perm.swap(i, j);
    }
    let mut sigma = vec![false; n];
    for &v in &perm[..k] {
        sigma[v as usize] = true;
    }

    let expected = 0.5 * (k as f64).powi(2) * params.p()
        + 0.5 * ((n as f64).powi(2) - (k as f64).powi(2)) * params.q();
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity((expected * 1.02) as usize + 16);
    // positions [0, k) are the community
    skip_sample(&mut rng, params.p(), 1, k, |v, w| {
        edges.push((perm[v], perm[w]));
    });
    skip_sample(&mut rng, params.q(), k.max(1), n, |v, w| {
        edges.push((perm[v], perm[w]));
    });
    let graph = Graph::from_simple_edges(n, edges)?;
    Ok((graph, GroundTruth { sigma }))
}

/// Visit every pair `(v, w)` with `first_row <= v < rows` and `w < v`
/// independently with probability `prob` (Batagelj-Brandes skipping).
fn skip_sample(rng: &mut DetRng, prob: f64, first_row: usize, rows: usize, mut emit: impl FnMut(usize, usize)) {
    if prob <= 0.0 || first_row >= rows {
        return;
    }
    if prob >= 1.0 {
        for v in first_row..rows {
            for w in 0..v {
                emit(v, w);
            }
        }
        return;
    }
    let log_q = (-prob).ln_1p();
    let mut v = first_row;
    let mut w: i64 = -1;
    loop {
        let r: f64 = rng.random();
        let skip = ((-r).ln_1p() / log_q).floor();
        w += 1 + skip.min(i64::MAX as f64 / 4.0) as i64;
        while v < rows && w >= v as i64 {
            w -= v as i64;
            v += 1;
        }
        if v >= rows {
            break;
        }
        emit(v, w as usize);
    }
}

/// Each community member independently becomes a cue with probability `alpha`.
pub fn sample_cues_perfect(truth: &GroundTruth, alpha: f64, seed: u64) -> Result<CueAssignment> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha = {alpha} not in [0, 1)")));
    }
    let mut rng = rng_from_seed(seed);
    let c = truth
        .sigma
        .iter()
        .map(|&s| s && rng.random_bool(alpha))
        .collect();
    Ok(CueAssignment {
        c,
        model: CueModel::Perfect,
    })
}

/// Members are cued with probability `alpha beta`, non-members with
/// probability `alpha K (1 - beta) / (n - K)`, so that on average there are
/// `alpha K` cues and a fraction `beta` of them are members.
pub fn sample_cues_imperfect(truth: &GroundTruth, alpha: f64, beta: f64, seed: u64) -> Result<CueAssignment> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha = {alpha} not in [0, 1]")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid(format!("beta = {beta} not in [0, 1]")));
    }
    let n = truth.n();
    let k = truth.k();
    let p_in = alpha * beta;
    let p_out = if k < n {
        alpha * k as f64 * (1.0 - beta) / (n - k) as f64
    } else {
        0.0
    };
    if p_out > 1.0 {
        return Err(Error::invalid(format!(
            "alpha K (1 - beta) / (n - K) = {p_out} exceeds 1"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let c = truth
        .sigma
        .iter()
        .map(|&s| rng.random_bool(if s { p_in } else { p_out }))
        .collect();
    Ok(CueAssignment {
        c,
        model: CueModel::Imperfect { beta },
    })
}
