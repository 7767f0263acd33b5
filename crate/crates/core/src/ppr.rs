//! Personalized PageRank restarted on the cue set.

use rayon::prelude::*;

use crate::bp::{select_estimate, BpMode};
use crate::graph::Graph;
use crate::model::CueAssignment;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PprConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PprConfig {
    fn default() -> Self {
        PprConfig {
            damping: 0.9,
            tol: 1e-10,
            max_iters: 1000,
        }
    }
}

impl PprConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::invalid(format!("damping {} not in (0, 1)", self.damping)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Power iteration for `pi = (1 - d) e_C + d pi W`, `e_C` uniform on the
/// cues. Mass at isolated nodes is sent back to `e_C`.
pub fn personalized_pagerank(graph: &Graph, cues: &CueAssignment, cfg: &PprConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = graph.node_count();
    if cues.c.len() != n {
        return Err(Error::SizeMismatch(format!("{} cue entries for {n} nodes", cues.c.len())));
    }
    let m = cues.count();
    if m == 0 {
        return Err(Error::EmptyCueSet);
    }
    let restart_w = 1.0 / m as f64;
    let restart: Vec<f64> = cues.c.iter().map(|&c| if c { restart_w } else { 0.0 }).collect();
    let d = cfg.damping;
    let mut pi = restart.clone();
    let mut share = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iters {
        share.par_iter_mut().enumerate().for_each(|(u, s)| {
            let deg = graph.degree(u);
            *s = if deg == 0 { 0.0 } else { pi[u] / deg as f64 };
        });
        let dangling: f64 = (0..n).filter(|&u| graph.degree(u) == 0).map(|u| pi[u]).sum();
        let restart_mass = (1.0 - d) + d * dangling;
        let mut next: Vec<f64> = (0..n)
            .into_par_iter()
            .with_min_len(4096)
            .map(|v| {
                let walk: f64 = graph.neighbors(v).iter().map(|&u| share[u as usize]).sum();
                restart_mass * restart[v] + d * walk
            })
            .collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        residual = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if residual < cfg.tol {
            return Ok(pi);
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iters,
        residual,
    })
}

/// Top-`K` selection on PPR scores, same rules as
/// [`select_estimate`](crate::bp::select_estimate).
pub fn ppr_estimate(scores: &[f64], cues: &CueAssignment, k: usize, mode: BpMode) -> Result<Vec<u32>> {
    select_estimate(scores, cues, k, mode)
}
