//! Belief propagation detectors for perfect and imperfect cues.
//!
//! Messages `R_{i->u}` live in a flat array indexed by directed-edge slot (see
//! [`Graph`]). A round is a synchronous (Jacobi) sweep: every round-`t+1`
//! message is computed from round-`t` values only, so the result does not
//! depend on the order or partitioning of the sweep.
//!
//! One round runs in two passes over the read bank:
//!
//! 1. every message `R` is replaced in place by its contribution
//!    `f(R - shift)` to the receiver;
//! 2. each sender `i` gathers the contributions addressed to it, sums them to
//!    `S_i`, and writes `c_i + S_i - contrib(u -> i)` for each neighbour `u`
//!    into the write bank.
//!
//! With perfect cues, cue nodes neither send nor receive messages; each cue
//! neighbour adds the constant `log(p/q)` instead.

use rayon::prelude::*;

use crate::graph::Graph;
use crate::model::{CueAssignment, ModelParams};
use crate::{Error, Result};

/// `log((e^x rho + 1) / (e^x + 1))`, precomputed for a fixed `rho`.
///
/// Evaluated as `ln_1p((rho - 1) * sigmoid(x))`, which keeps full relative
/// precision when `rho - 1` is small and saturates to exactly `0` and
/// [`FUpdate::ln_rho`] at the two ends.
#[derive(Debug, Clone, Copy)]
pub struct FUpdate {
    rho_m1: f64,
    ln_rho: f64,
}

impl FUpdate {
    pub fn new(rho: f64) -> FUpdate {
        FUpdate::from_excess(rho - 1.0)
    }

    /// From `a` and `b` directly, avoiding the rounding of `a / b - 1`.
    pub fn from_ab(a: f64, b: f64) -> FUpdate {
        FUpdate::from_excess((a - b) / b)
    }

    fn from_excess(rho_m1: f64) -> FUpdate {
        FUpdate {
            rho_m1,
            ln_rho: rho_m1.ln_1p(),
        }
    }

    #[inline]
    pub fn ln_rho(&self) -> f64 {
        self.ln_rho
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let s = 1.0 / (1.0 + (-x).exp());
        (self.rho_m1 * s).ln_1p()
    }
}

pub fn f_update(x: f64, rho: f64) -> f64 {
    FUpdate::new(rho).eval(x)
}

/// Largest integer strictly below `log(n) / log(np) + 1`, at least 1.
pub fn default_tf(n: usize, np: f64) -> Result<usize> {
    if !(np > 1.0) {
        return Err(Error::invalid(format!("default t_f needs np > 1, got {np}")));
    }
    let bound = (n as f64).ln() / np.ln() + 1.0;
    let nearest = bound.round();
    let t = if (bound - nearest).abs() <= 1e-9 * bound.max(1.0) {
        nearest - 1.0
    } else {
        bound.floor()
    };
    Ok((t as usize).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BpMode {
    Perfect,
    Imperfect,
}

impl std::str::FromStr for BpMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perfect" => Ok(BpMode::Perfect),
            "imperfect" => Ok(BpMode::Imperfect),
            other => Err(Error::invalid(format!("unknown BP mode {other:?}"))),
        }
    }
}

/// Everything the detector needs besides the graph and the cues.
///
/// Degree parameters are carried as `a = n p` and `b = n q`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BpConfig {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t_f: usize,
    pub mode: BpMode,
}

impl BpConfig {
    /// Config for a model instance; `t_f` defaults to [`default_tf`] at `np = a`.
    pub fn from_params(params: &ModelParams, mode: BpMode, t_f: Option<usize>) -> Result<BpConfig> {
        let t_f = match t_f {
            Some(t) => t,
            None => default_tf(params.n, params.a)?,
        };
        let cfg = BpConfig {
            n: params.n,
            k: params.k(),
            a: params.a,
            b: params.b,
            alpha: params.alpha,
            beta: params.beta,
            t_f,
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_f == 0 {
            return Err(Error::invalid("t_f must be at least 1"));
        }
        if !(self.k > 0 && self.k < self.n) {
            return Err(Error::invalid(format!("need 0 < K < n, got K = {}, n = {}", self.k, self.n)));
        }
        if !(self.b > 0.0 && self.a > self.b && self.a.is_finite()) {
            return Err(Error::invalid(format!("need 0 < b < a, got a = {}, b = {}", self.a, self.b)));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!("alpha = {} not in [0, 1)", self.alpha)));
        }
        if self.mode == BpMode::Imperfect && !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid(format!(
                "imperfect mode needs beta in (0, 1), got {}; use perfect mode for beta = 1",
                self.beta
            )));
        }
        let shift = match self.mode {
            BpMode::Perfect => self.upsilon(),
            BpMode::Imperfect => self.nu(),
        };
        if !shift.is_finite() {
            return Err(Error::invalid("prior log-odds threshold is not finite"));
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// `K (p - q)`, computed as `(K / n)(a - b)`.
    pub fn kpq(&self) -> f64 {
        self.kappa() * (self.a - self.b)
    }

    /// `log((n - K) / (K (1 - alpha)))`
    pub fn upsilon(&self) -> f64 {
        ((self.n - self.k) as f64 / (self.k as f64 * (1.0 - self.alpha))).ln()
    }

    /// `log((n - K) / K)`
    pub fn nu(&self) -> f64 {
        ((self.n - self.k) as f64 / self.k as f64).ln()
    }

    /// Cue log-likelihood ratio `log P(c|sigma=1)/P(c|sigma=0)` for a cue.
    pub fn h_cue(&self) -> f64 {
        let kappa = self.kappa();
        (self.beta * (1.0 - kappa) / ((1.0 - self.beta) * kappa)).ln()
    }

    /// Same for a node that is not a cue.
    pub fn h_noncue(&self) -> f64 {
        let (kappa, alpha, beta) = (self.kappa(), self.alpha, self.beta);
        ((1.0 - alpha * beta) * (1.0 - kappa) / (1.0 - kappa - alpha * kappa + alpha * kappa * beta)).ln()
    }
}

/// Final beliefs `R_u^{t_f}`. With perfect cues the entries of cue nodes are
/// not computed and hold `0.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefVector {
    pub values: Vec<f64>,
    pub t_final: usize,
}

/// Double-buffered message banks.
#[derive(Debug, Clone)]
pub struct MessageState {
    pub round: usize,
    banks: [Vec<f64>; 2],
    read: usize,
}

impl MessageState {
    pub fn zeros(slots: usize) -> MessageState {
        MessageState {
            round: 0,
            banks: [vec![0.0; slots], vec![0.0; slots]],
            read: 0,
        }
    }

    /// Messages of the current round.
    pub fn values(&self) -> &[f64] {
        &self.banks[self.read]
    }

    fn split(&mut self) -> (&mut Vec<f64>, &mut Vec<f64>) {
        let (lo, hi) = self.banks.split_at_mut(1);
        if self.read == 0 {
            (&mut lo[0], &mut hi[0])
        } else {
            (&mut hi[0], &mut lo[0])
        }
    }
}

/// Per-run constants of the update rule.
#[derive(Clone, Copy)]
struct Kernel<'a> {
    graph: &'a Graph,
    f: FUpdate,
    shift: f64,
    /// With perfect cues: cue indicator (cues are frozen).
    frozen: Option<&'a [bool]>,
    /// Per-node constant `-K(p-q) + h_i` is `base + h[c_i]`.
    base: f64,
    h: Option<(&'a [bool], f64, f64)>,
}

const CHUNK_NODES: usize = 2048;

impl Kernel<'_> {
    #[inline]
    fn is_frozen(&self, i: usize) -> bool {
        self.frozen.is_some_and(|c| c[i])
    }

    #[inline]
    fn node_const(&self, i: usize) -> f64 {
        match self.h {
            Some((cues, h_cue, h_non)) => self.base + if cues[i] { h_cue } else { h_non },
            None => self.base,
        }
    }

    /// Contribution of neighbour `l = target(e)` to node `i = owner(e)`.
    #[inline]
    fn gather(&self, contrib: &[f64], e: usize) -> f64 {
        let l = self.graph.target(e) as usize;
        if self.is_frozen(l) {
            self.f.ln_rho()
        } else {
            contrib[self.graph.reverse()[e] as usize]
        }
    }

    /// Pass 1 on the row of sender `i`: message -> contribution.
    fn transform_row(&self, i: usize, row: &mut [f64]) {
        if self.is_frozen(i) {
            return;
        }
        let start = self.graph.offsets()[i];
        for (k, m) in row.iter_mut().enumerate() {
            if self.is_frozen(self.graph.target(start + k) as usize) {
                continue;
            }
            *m = self.f.eval(*m - self.shift);
        }
    }

    /// Pass 2 on the row of sender `i`: new outgoing messages.
    fn update_row(&self, i: usize, contrib: &[f64], out: &mut [f64]) {
        if self.is_frozen(i) {
            return;
        }
        let start = self.graph.offsets()[i];
        let mut sum = 0.0;
        for (k, o) in out.iter_mut().enumerate() {
            let v = self.gather(contrib, start + k);
            *o = v;
            sum += v;
        }
        let c = self.node_const(i);
        for (k, o) in out.iter_mut().enumerate() {
            if self.is_frozen(self.graph.target(start + k) as usize) {
                *o = 0.0;
            } else {
                *o = c + (sum - *o);
            }
        }
    }

    fn belief(&self, i: usize, contrib: &[f64]) -> f64 {
        if self.is_frozen(i) {
            return 0.0;
        }
        let sum: f64 = self.graph.slots(i).map(|e| self.gather(contrib, e)).sum();
        self.node_const(i) + sum
    }

    fn chunks<'b>(&self, buf: &'b mut [f64]) -> Vec<(usize, usize, &'b mut [f64])> {
        let offsets = self.graph.offsets();
        let n = self.graph.node_count();
        let mut out = Vec::with_capacity(n / CHUNK_NODES + 1);
        let mut rest = buf;
        let mut lo = 0;
        while lo < n {
            let hi = (lo + CHUNK_NODES).min(n);
            let (head, tail) = rest.split_at_mut(offsets[hi] - offsets[lo]);
            out.push((lo, hi, head));
            rest = tail;
            lo = hi;
        }
        out
    }

    fn transform(&self, buf: &mut [f64]) {
        let offsets = self.graph.offsets();
        self.chunks(buf).into_par_iter().for_each(|(lo, hi, chunk)| {
            let base = offsets[lo];
            for i in lo..hi {
                let row = &mut chunk[offsets[i] - base..offsets[i + 1] - base];
                self.transform_row(i, row);
            }
        });
    }

    fn step(&self, state: &mut MessageState) {
        let offsets = self.graph.offsets();
        let (read, write) = state.split();
        self.transform(read);
        let contrib: &[f64] = read;
        self.chunks(write).into_par_iter().for_each(|(lo, hi, chunk)| {
            let base = offsets[lo];
            for i in lo..hi {
                let row = &mut chunk[offsets[i] - base..offsets[i + 1] - base];
                self.update_row(i, contrib, row);
            }
        });
        state.read ^= 1;
        state.round += 1;
    }

    fn finish(&self, mut state: MessageState) -> Vec<f64> {
        let (read, _) = state.split();
        self.transform(read);
        let contrib: &[f64] = read;
        (0..self.graph.node_count())
            .into_par_iter()
            .with_min_len(CHUNK_NODES)
            .map(|i| self.belief(i, contrib))
            .collect()
    }

    fn run(&self, t_f: usize) -> Vec<f64> {
        let mut state = MessageState::zeros(self.graph.directed_edge_count());
        for _ in 1..t_f {
            self.step(&mut state);
        }
        self.finish(state)
    }
}

fn check_sizes(graph: &Graph, cues: &CueAssignment, cfg: &BpConfig) -> Result<()> {
    if graph.node_count() != cfg.n || cues.c.len() != cfg.n {
        return Err(Error::SizeMismatch(format!(
            "graph has {} nodes, cue vector {}, config n = {}",
            graph.node_count(),
            cues.c.len(),
            cfg.n
        )));
    }
    Ok(())
}

/// Detector for perfect cues: `t_f - 1` message rounds, then beliefs for
/// every node that is not a cue.
pub fn run_bp_perfect(graph: &Graph, cues: &CueAssignment, cfg: &BpConfig) -> Result<BeliefVector> {
    let cfg = BpConfig {
        mode: BpMode::Perfect,
        ..*cfg
    };
    cfg.validate()?;
    check_sizes(graph, cues, &cfg)?;
    let kernel = Kernel {
        graph,
        f: FUpdate::from_ab(cfg.a, cfg.b),
        shift: cfg.upsilon(),
        frozen: Some(&cues.c),
        base: -cfg.kpq(),
        h: None,
    };
    Ok(BeliefVector {
        values: kernel.run(cfg.t_f),
        t_final: cfg.t_f,
    })
}

/// Detector for unreliable cues: every node takes part and carries the cue
/// prior `h_u`.
pub fn run_bp_imperfect(graph: &Graph, cues: &CueAssignment, cfg: &BpConfig) -> Result<BeliefVector> {
    let cfg = BpConfig {
        mode: BpMode::Imperfect,
        ..*cfg
    };
    cfg.validate()?;
    check_sizes(graph, cues, &cfg)?;
    run_bp_with_priors(graph, &cues.c, &cfg, cfg.h_cue(), cfg.h_noncue())
}

/// Cue-free BP (all priors zero), the `alpha = 0` case of the imperfect
/// detector.
pub fn run_bp_uncued(graph: &Graph, cfg: &BpConfig) -> Result<BeliefVector> {
    let cfg = BpConfig {
        alpha: 0.0,
        beta: 0.5,
        mode: BpMode::Imperfect,
        ..*cfg
    };
    cfg.validate()?;
    if graph.node_count() != cfg.n {
        return Err(Error::SizeMismatch(format!(
            "graph has {} nodes, config n = {}",
            graph.node_count(),
            cfg.n
        )));
    }
    let none = vec![false; cfg.n];
    run_bp_with_priors(graph, &none, &cfg, 0.0, 0.0)
}

fn run_bp_with_priors(graph: &Graph, cues: &[bool], cfg: &BpConfig, h_cue: f64, h_noncue: f64) -> Result<BeliefVector> {
    let kernel = Kernel {
        graph,
        f: FUpdate::from_ab(cfg.a, cfg.b),
        shift: cfg.nu(),
        frozen: None,
        base: -cfg.kpq(),
        h: Some((cues, h_cue, h_noncue)),
    };
    Ok(BeliefVector {
        values: kernel.run(cfg.t_f),
        t_final: cfg.t_f,
    })
}

/// Run the detector selected by `cfg.mode`.
pub fn run_bp(graph: &Graph, cues: &CueAssignment, cfg: &BpConfig) -> Result<BeliefVector> {
    match cfg.mode {
        BpMode::Perfect => run_bp_perfect(graph, cues, cfg),
        BpMode::Imperfect => run_bp_imperfect(graph, cues, cfg),
    }
}

/// Indices of the `count` largest scores among `candidates`, ties going to
/// the smaller id.
pub(crate) fn top_by_score(scores: &[f64], mut candidates: Vec<u32>, count: usize) -> Vec<u32> {
    let cmp = |x: &u32, y: &u32| {
        scores[*y as usize]
            .total_cmp(&scores[*x as usize])
            .then(x.cmp(y))
    };
    if count < candidates.len() {
        if count > 0 {
            candidates.select_nth_unstable_by(count - 1, cmp);
        }
        candidates.truncate(count);
    }
    candidates
}

/// Top-`K` estimate. Perfect mode keeps every cue and fills the remaining
/// `K - |C|` places with the best non-cue beliefs; imperfect mode ranks all
/// nodes. Returns sorted ids, exactly `K` of them.
pub fn select_estimate(scores: &[f64], cues: &CueAssignment, k: usize, mode: BpMode) -> Result<Vec<u32>> {
    let n = scores.len();
    if cues.c.len() != n {
        return Err(Error::SizeMismatch(format!(
            "{} scores but {} cue entries",
            n,
            cues.c.len()
        )));
    }
    if k > n {
        return Err(Error::invalid(format!("K = {k} exceeds node count {n}")));
    }
    let mut out = match mode {
        BpMode::Perfect => {
            let cue_ids = cues.ids();
            if cue_ids.len() > k {
                return Err(Error::invalid(format!(
                    "{} cues exceed community size K = {k}",
                    cue_ids.len()
                )));
            }
            let rest: Vec<u32> = (0..n as u32).filter(|&i| !cues.c[i as usize]).collect();
            let mut chosen = top_by_score(scores, rest, k - cue_ids.len());
            chosen.extend(cue_ids);
            chosen
        }
        BpMode::Imperfect => top_by_score(scores, (0..n as u32).collect(), k),
    };
    out.sort_unstable();
    Ok(out)
}

/// Threshold estimate `{i : R_i > threshold}`.
pub fn map_estimate(scores: &[f64], threshold: f64) -> Vec<u32> {
    scores
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > threshold)
        .map(|(i, _)| i as u32)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CueModel;
    use proptest::prelude::*;

    #[test]
    fn f_values() {
        assert_eq!(f_update(3.7, 1.0), 0.0);
        assert!((f_update(0.0, 2.0) - 1.5f64.ln()).abs() < 1e-15);
        let f = FUpdate::new(2.5);
        assert_eq!(f.eval(1e6), f.ln_rho());
        assert_eq!(f.eval(-1e6), 0.0);
        assert!((f.ln_rho() - 2.5f64.ln()).abs() < 1e-15);
        assert!(f.eval(f64::INFINITY).is_finite());
    }

    #[test]
    fn f_small_excess_keeps_precision() {
        // rho - 1 = 2^-30: f(0) = log(1 + 2^-31)
        let eps = 2f64.powi(-30);
        let f = FUpdate::from_ab(1.0 + eps, 1.0);
        let want = eps / 2.0 - eps * eps / 8.0;
        assert!((f.eval(0.0) - want).abs() < 1e-24);
    }

    proptest! {
        #[test]
        fn f_monotone_and_bounded(x in -800.0f64..800.0, dx in 0.0f64..50.0, rho in 1.0f64..1e4) {
            let f = FUpdate::new(rho);
            let (lo, hi) = (f.eval(x), f.eval(x + dx));
            prop_assert!(lo >= 0.0);
            prop_assert!(hi <= f.ln_rho());
            prop_assert!(lo <= hi);
        }
    }

    #[test]
    fn default_tf_values() {
        assert_eq!(default_tf(1_000_000, 100.0).unwrap(), 3);
        assert_eq!(default_tf(10_000, 10.0).unwrap(), 4);
        assert_eq!(default_tf(500, 500.0).unwrap(), 1);
        assert_eq!(default_tf(1_000_000, 10097.49).unwrap(), 2);
        assert!(default_tf(100, 1.0).is_err());
    }

    #[allow(clippy::too_many_arguments)]
    fn cfg(n: usize, k: usize, a: f64, b: f64, alpha: f64, beta: f64, t_f: usize, mode: BpMode) -> BpConfig {
        BpConfig { n, k, a, b, alpha, beta, t_f, mode }
    }

    #[test]
    fn isolated_noncue_belief_is_minus_kpq() {
        let g = Graph::empty(10);
        let cues = CueAssignment::none(10);
        let c = cfg(10, 2, 5.0, 1.0, 0.1, 1.0, 3, BpMode::Perfect);
        let b = run_bp_perfect(&g, &cues, &c).unwrap();
        for v in b.values {
            assert!((v + 0.2 * 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn isolated_cue_node_imperfect() {
        let g = Graph::empty(10);
        let cues = CueAssignment::from_ids(10, &[3], CueModel::Imperfect { beta: 0.8 }).unwrap();
        let c = cfg(10, 2, 5.0, 1.0, 0.1, 0.8, 2, BpMode::Imperfect);
        let b = run_bp_imperfect(&g, &cues, &c).unwrap();
        let want = -0.8 + (0.8f64 * 0.8 / (0.2 * 0.2)).ln();
        assert!((b.values[3] - want).abs() < 1e-12);
    }

    #[test]
    fn three_node_path_by_hand() {
        // cue c = 0, middle i = 1, end u = 2
        let (g, _) = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let cues = CueAssignment::from_ids(3, &[0], CueModel::Perfect).unwrap();
        let (n, k, a, b, alpha) = (3usize, 1usize, 2.5f64, 0.5f64, 0.3f64);
        let c = cfg(n, k, a, b, alpha, 1.0, 2, BpMode::Perfect);
        let kpq = (k as f64 / n as f64) * (a - b);
        let rho = a / b;
        let upsilon = (2.0 / (1.0 - alpha)).ln();
        let f = |x: f64| ((x.exp() * rho + 1.0) / (x.exp() + 1.0)).ln();
        let r1 = -kpq + rho.ln();
        let want_u = -kpq + f(r1 - upsilon);
        let got = run_bp_perfect(&g, &cues, &c).unwrap();
        assert!((got.values[2] - want_u).abs() < 1e-13);
        // i: cue neighbour plus R^1_{u->i} = -K(p-q)
        let want_i = -kpq + rho.ln() + f(-kpq - upsilon);
        assert!((got.values[1] - want_i).abs() < 1e-13);
    }

    #[test]
    fn alpha_zero_priors_vanish() {
        let c = cfg(1000, 50, 20.0, 5.0, 0.0, 0.7, 3, BpMode::Imperfect);
        assert_eq!(c.h_noncue(), 0.0);
    }

    #[test]
    fn imperfect_rejects_degenerate_beta() {
        let g = Graph::empty(10);
        let cues = CueAssignment::none(10);
        for beta in [0.0, 1.0] {
            let c = cfg(10, 2, 5.0, 1.0, 0.1, beta, 2, BpMode::Imperfect);
            assert!(run_bp_imperfect(&g, &cues, &c).is_err());
        }
    }

    #[test]
    fn rejects_size_mismatch() {
        let g = Graph::empty(9);
        let c = cfg(10, 2, 5.0, 1.0, 0.1, 1.0, 2, BpMode::Perfect);
        assert!(matches!(
            run_bp_perfect(&g, &CueAssignment::none(10), &c),
            Err(Error::SizeMismatch(_))
        ));
    }

    #[test]
    fn selection_rules() {
        let n = 8;
        let none = CueAssignment::none(n);
        let flat = vec![1.0; n];
        assert_eq!(select_estimate(&flat, &none, 3, BpMode::Imperfect).unwrap(), vec![0, 1, 2]);
        let ramp: Vec<f64> = (0..n).map(|i| i as f64).collect();
        assert_eq!(select_estimate(&ramp, &none, 3, BpMode::Imperfect).unwrap(), vec![5, 6, 7]);
        let cues = CueAssignment::from_ids(n, &[1, 4], CueModel::Perfect).unwrap();
        assert_eq!(select_estimate(&ramp, &cues, 2, BpMode::Perfect).unwrap(), vec![1, 4]);
        assert_eq!(select_estimate(&ramp, &cues, 3, BpMode::Perfect).unwrap(), vec![1, 4, 7]);
        assert!(select_estimate(&ramp, &cues, 1, BpMode::Perfect).is_err());
    }

    #[test]
    fn map_thresholds() {
        let s = [0.5, -1.0, 2.0];
        assert_eq!(map_estimate(&s, f64::NEG_INFINITY), vec![0, 1, 2]);
        assert!(map_estimate(&s, f64::INFINITY).is_empty());
        assert_eq!(map_estimate(&s, 0.5), vec![2]);
    }
}
