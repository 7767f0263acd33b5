//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use cuebp::bp::BpMode;

/// Model constants the brute-force likelihood needs.
#[derive(Debug, Clone, Copy)]
pub struct TreeModel {
    pub n: usize,
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
}

fn log_poisson(count: usize, mean: f64) -> f64 {
    let mut lf = 0.0;
    for j in 2..=count {
        lf += (j as f64).ln();
    }
    count as f64 * mean.ln() - mean - lf
}

fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Exact log-likelihood ratio `log P(obs | root in S) / P(obs | root not in S)`
/// for the depth-`depth` neighbourhood of `root` in the tree given by
/// `adj`, under the Poisson branching limit of the planted model.
///
/// Every vertex closer than `depth` to the root has its number of children
/// observed. Cue marks are observed on all non-root vertices (perfect) or on
/// all vertices closer than `depth`, root included (imperfect).
pub fn tree_llr(adj: &[Vec<usize>], cues: &[bool], m: &TreeModel, mode: BpMode, root: usize, depth: usize) -> f64 {
    let (n, k) = (m.n as f64, m.k as f64);
    let (p, q) = (m.a / n, m.b / n);
    let d1 = k * p + (n - k) * q;
    let d0 = n * q;
    // child label probabilities P(child | parent), indexed [parent][child]
    let trans = [[(n - k) * q / d0, k * q / d0], [(n - k) * q / d1, k * p / d1]];
    let cue_prob = match mode {
        BpMode::Perfect => [0.0, m.alpha],
        BpMode::Imperfect => [m.alpha * k * (1.0 - m.beta) / (n - k), m.alpha * m.beta],
    };
    let log_cue = |c: bool, tau: usize| -> f64 {
        let pc = cue_prob[tau];
        if c { pc.ln() } else { (1.0 - pc).ln() }
    };

    // breadth-first layout of the neighbourhood
    let mut order = vec![root];
    let mut parent = vec![usize::MAX];
    let mut dist = vec![0usize];
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        if dist[i] < depth {
            for &w in &adj[v] {
                if i > 0 && w == order[parent[i]] {
                    continue;
                }
                order.push(w);
                parent.push(i);
                dist.push(dist[i] + 1);
            }
        }
        i += 1;
    }
    let size = order.len();
    assert!(size <= 20, "neighbourhood too large to enumerate");
    let mut children = vec![0usize; size];
    for j in 1..size {
        children[parent[j]] += 1;
    }

    let mut per_root: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for mask in 0u32..(1 << size) {
        let tau = |j: usize| (mask >> j & 1) as usize;
        let mut ll = 0.0;
        for j in 0..size {
            let t = tau(j);
            if dist[j] < depth {
                ll += log_poisson(children[j], if t == 1 { d1 } else { d0 });
            }
            if j > 0 {
                ll += trans[tau(parent[j])][t].ln();
            }
            let observed = match mode {
                BpMode::Perfect => j > 0,
                BpMode::Imperfect => dist[j] < depth,
            };
            if observed {
                ll += log_cue(cues[order[j]], t);
            }
        }
        if ll.is_finite() {
            per_root[tau(0)].push(ll);
        }
    }
    logsumexp(&per_root[1]) - logsumexp(&per_root[0])
}

/// Random labelled tree on `size` vertices by uniform attachment.
pub fn random_tree(size: usize, rng: &mut impl rand::Rng) -> Vec<(u32, u32)> {
    (1..size as u32).map(|v| (rng.random_range(0..v), v)).collect()
}

pub fn adjacency(size: usize, edges: &[(u32, u32)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); size];
    for &(u, v) in edges {
        adj[u as usize].push(v as usize);
        adj[v as usize].push(u as usize);
    }
    adj
}

pub const TREE_MODEL: TreeModel = TreeModel {
    n: 100,
    k: 10,
    a: 30.0,
    b: 5.0,
    alpha: 0.3,
    beta: 0.7,
};

pub fn tree_bp_config(t_f: usize, mode: BpMode) -> cuebp::bp::BpConfig {
    let m = TREE_MODEL;
    cuebp::bp::BpConfig {
        n: m.n,
        k: m.k,
        a: m.a,
        b: m.b,
        alpha: m.alpha,
        beta: m.beta,
        t_f,
        mode,
    }
}

/// Largest `|BP belief - exact LLR|` over the roots of one random tree
/// (at most 15 nodes) embedded in a graph of `TREE_MODEL.n` nodes.
pub fn tree_max_gap(seed: u64, mode: BpMode) -> f64 {
    use cuebp::model::{CueAssignment, CueModel};
    use rand::Rng;
    let m = TREE_MODEL;
    let mut rng = cuebp::rng::rng_from_seed(seed);
    let size = rng.random_range(1..=15usize);
    let t_f = rng.random_range(1..=3usize);
    let edges = random_tree(size, &mut rng);
    let cue_ids: Vec<u32> = (0..size as u32).filter(|_| rng.random_bool(0.25)).collect();
    let (g, _) = cuebp::Graph::from_edges(m.n, &edges).unwrap();
    assert!(g.is_forest());
    let model = match mode {
        BpMode::Perfect => CueModel::Perfect,
        BpMode::Imperfect => CueModel::Imperfect { beta: m.beta },
    };
    let cues = CueAssignment::from_ids(m.n, &cue_ids, model).unwrap();
    let cfg = tree_bp_config(t_f, mode);
    let beliefs = match mode {
        BpMode::Perfect => cuebp::bp::run_bp_perfect(&g, &cues, &cfg).unwrap(),
        BpMode::Imperfect => cuebp::bp::run_bp_imperfect(&g, &cues, &cfg).unwrap(),
    };
    let adj = adjacency(size, &edges);
    let mut worst: f64 = 0.0;
    for root in 0..size {
        if mode == BpMode::Perfect && cues.c[root] {
            continue;
        }
        let want = tree_llr(&adj, &cues.c, &m, mode, root, t_f);
        worst = worst.max((beliefs.values[root] - want).abs());
    }
    worst
}

/// `E g(xi0) - c E[g(xi1) exp(-xi1)]` and its bootstrap standard deviation.
pub fn change_of_measure_gap(s: &cuebp::de::PopulationSample, c: f64, g: impl Fn(f64) -> f64, reps: usize, seed: u64) -> (f64, f64) {
    use rand::Rng;
    let lhs: Vec<f64> = s.xi0.iter().map(|&x| g(x)).collect();
    let rhs: Vec<f64> = s.xi1.iter().map(|&x| c * g(x) * (-x).exp()).collect();
    let gap = |l: &[f64], r: &[f64]| l.iter().sum::<f64>() / l.len() as f64 - r.iter().sum::<f64>() / r.len() as f64;
    let d = gap(&lhs, &rhs);
    let mut rng = cuebp::rng::rng_from_seed(seed);
    let mut ds = Vec::with_capacity(reps);
    let (mut bl, mut br) = (vec![0.0; lhs.len()], vec![0.0; rhs.len()]);
    for _ in 0..reps {
        for x in bl.iter_mut() {
            *x = lhs[rng.random_range(0..lhs.len())];
        }
        for x in br.iter_mut() {
            *x = rhs[rng.random_range(0..rhs.len())];
        }
        ds.push(gap(&bl, &br));
    }
    let mean = ds.iter().sum::<f64>() / reps as f64;
    let sd = (ds.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    (d, sd)
}
