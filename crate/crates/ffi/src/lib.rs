//! C interface to the `cuebp` detector.
//!
//! Graphs live behind the opaque [`CuebpGraph`] handle. Every fallible call
//! returns a [`CuebpStatus`]; on failure the message is available from
//! [`cuebp_last_error`] on the same thread until the next failing call.
//! Node sets cross the boundary as `n`-byte indicator arrays (0 or 1).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cuebp::bp::{run_bp, select_estimate, BpConfig, BpMode};
use cuebp::de::{mu_recursion_imperfect, mu_recursion_perfect, DeConfig};
use cuebp::metrics::error_fraction;
use cuebp::model::{sample_cues_imperfect, sample_cues_perfect, sample_graph};
use cuebp::ppr::{personalized_pagerank, PprConfig};
use cuebp::{CueAssignment, CueModel, Error, Graph, GroundTruth, ModelParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CuebpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    SizeMismatch = 3,
    Parse = 4,
    Io = 5,
    OutOfRange = 6,
    EmptyInput = 7,
    NotConverged = 8,
    TooLarge = 9,
    BufferTooSmall = 10,
    Internal = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CuebpMode {
    Perfect = 0,
    Imperfect = 1,
}

impl From<CuebpMode> for BpMode {
    fn from(m: CuebpMode) -> BpMode {
        match m {
            CuebpMode::Perfect => BpMode::Perfect,
            CuebpMode::Imperfect => BpMode::Imperfect,
        }
    }
}

/// Model parameters; `a = n p` and `b = n q`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuebpParams {
    pub n: usize,
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl From<CuebpParams> for ModelParams {
    fn from(p: CuebpParams) -> ModelParams {
        ModelParams {
            n: p.n,
            kappa: p.kappa,
            a: p.a,
            b: p.b,
            alpha: p.alpha,
            beta: p.beta,
        }
    }
}

/// Opaque undirected graph.
pub struct CuebpGraph(Graph);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(CuebpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        let status = match &e {
            Error::InvalidParameter(_) | Error::EmptyCueSet | Error::DegeneratePopulation { .. } => {
                CuebpStatus::InvalidParameter
            }
            Error::SizeMismatch(_) => CuebpStatus::SizeMismatch,
            Error::Parse { .. } => CuebpStatus::Parse,
            Error::EmptyInput(_) => CuebpStatus::EmptyInput,
            Error::NodeOutOfRange { .. } => CuebpStatus::OutOfRange,
            Error::NotConverged { .. } => CuebpStatus::NotConverged,
            Error::TooLarge { .. } => CuebpStatus::TooLarge,
            Error::Io { .. } => CuebpStatus::Io,
        };
        Fail(status, e.to_string())
    }
}

fn fail(status: CuebpStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CuebpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CuebpStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CuebpStatus::Internal
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(CuebpStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(fail(CuebpStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn graph_ref<'a>(g: *const CuebpGraph) -> Result<&'a Graph, Fail> {
    g.as_ref()
        .map(|g| &g.0)
        .ok_or_else(|| fail(CuebpStatus::NullPointer, "graph is null"))
}

unsafe fn params_ref(p: *const CuebpParams) -> Result<ModelParams, Fail> {
    p.as_ref()
        .map(|p| ModelParams::from(*p))
        .ok_or_else(|| fail(CuebpStatus::NullPointer, "params is null"))
}

fn indicator(bytes: &[u8]) -> Vec<bool> {
    bytes.iter().map(|&b| b != 0).collect()
}

/// Message of the last failed call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cuebp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cuebp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build a graph from `m` edges `(us[i], vs[i])`. Self-loops and
/// duplicates are dropped.
///
/// # Safety
/// `us` and `vs` must point to `m` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuebp_graph_from_edges(
    n: usize,
    us: *const u32,
    vs: *const u32,
    m: usize,
    out: *mut *mut CuebpGraph,
) -> CuebpStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(CuebpStatus::NullPointer, "out is null"));
        }
        let us = slice(us, m, "us")?;
        let vs = slice(vs, m, "vs")?;
        let edges: Vec<(u32, u32)> = us.iter().copied().zip(vs.iter().copied()).collect();
        let (g, _) = Graph::from_edges(n, &edges)?;
        *out = Box::into_raw(Box::new(CuebpGraph(g)));
        Ok(())
    })
}

/// Read a whitespace-separated edge list.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuebp_graph_load(path: *const c_char, out: *mut *mut CuebpGraph) -> CuebpStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return Err(fail(CuebpStatus::NullPointer, "path or out is null"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(CuebpStatus::InvalidParameter, "path is not UTF-8"))?;
        let (g, _) = cuebp::ingest::load_edge_list(path)?;
        *out = Box::into_raw(Box::new(CuebpGraph(g)));
        Ok(())
    })
}

/// Sample a planted instance. `truth_out` and `cues_out` receive `n`
/// indicator bytes each; cues follow the perfect model when `beta = 1`.
///
/// # Safety
/// `params` must be readable, `graph_out` writable, and both byte buffers
/// must hold `params->n` bytes.
#[no_mangle]
pub unsafe extern "C" fn cuebp_sample(
    params: *const CuebpParams,
    seed: u64,
    graph_out: *mut *mut CuebpGraph,
    truth_out: *mut u8,
    cues_out: *mut u8,
) -> CuebpStatus {
    guard(|| {
        let p = params_ref(params)?;
        if graph_out.is_null() {
            return Err(fail(CuebpStatus::NullPointer, "graph_out is null"));
        }
        p.validate()?;
        let truth_buf = slice_mut(truth_out, p.n, "truth_out")?;
        let cues_buf = slice_mut(cues_out, p.n, "cues_out")?;
        let (g, truth) = sample_graph(&p, cuebp::rng::derive_seed(seed, 0, "graph"))?;
        let cue_seed = cuebp::rng::derive_seed(seed, 0, "cues");
        let cues = if p.beta >= 1.0 {
            sample_cues_perfect(&truth, p.alpha, cue_seed)?
        } else {
            sample_cues_imperfect(&truth, p.alpha, p.beta, cue_seed)?
        };
        for i in 0..p.n {
            truth_buf[i] = truth.sigma[i] as u8;
            cues_buf[i] = cues.c[i] as u8;
        }
        *graph_out = Box::into_raw(Box::new(CuebpGraph(g)));
        Ok(())
    })
}

/// Node count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cuebp_graph_node_count(g: *const CuebpGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.node_count())
}

/// Undirected edge count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cuebp_graph_edge_count(g: *const CuebpGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.edge_count())
}

/// Release a graph. Null is ignored.
///
/// # Safety
/// `g` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cuebp_graph_free(g: *mut CuebpGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Run BP for `tf` steps (0 picks the default) and write `n` beliefs.
/// With perfect cues the entries of cue nodes are 0.
///
/// # Safety
/// `g` and `params` must be live; `cues` and `beliefs_out` must hold `n`
/// elements where `n` is the node count.
#[no_mangle]
pub unsafe extern "C" fn cuebp_bp_run(
    g: *const CuebpGraph,
    cues: *const u8,
    params: *const CuebpParams,
    mode: CuebpMode,
    tf: usize,
    beliefs_out: *mut f64,
) -> CuebpStatus {
    guard(|| {
        let graph = graph_ref(g)?;
        let p = params_ref(params)?;
        let n = graph.node_count();
        let mode = BpMode::from(mode);
        let cue_model = match mode {
            BpMode::Perfect => CueModel::Perfect,
            BpMode::Imperfect => CueModel::Imperfect { beta: p.beta },
        };
        let cues = CueAssignment {
            c: indicator(slice(cues, n, "cues")?),
            model: cue_model,
        };
        let out = slice_mut(beliefs_out, n, "beliefs_out")?;
        let cfg = BpConfig::from_params(&p, mode, (tf > 0).then_some(tf))?;
        let bel = run_bp(graph, &cues, &cfg)?;
        out.copy_from_slice(&bel.values);
        Ok(())
    })
}

/// Personalized PageRank restarting on the cues; writes `n` scores.
///
/// # Safety
/// `g` must be live; `cues` and `scores_out` must hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn cuebp_ppr_run(
    g: *const CuebpGraph,
    cues: *const u8,
    damping: f64,
    tol: f64,
    max_iters: usize,
    scores_out: *mut f64,
) -> CuebpStatus {
    guard(|| {
        let graph = graph_ref(g)?;
        let n = graph.node_count();
        let cues = CueAssignment {
            c: indicator(slice(cues, n, "cues")?),
            model: CueModel::Observed,
        };
        let out = slice_mut(scores_out, n, "scores_out")?;
        let cfg = PprConfig {
            damping,
            tol,
            max_iters,
        };
        let s = personalized_pagerank(graph, &cues, &cfg)?;
        out.copy_from_slice(&s);
        Ok(())
    })
}

/// Top-`k` estimate from scores, sorted ascending into `out` (`k` slots).
/// Perfect mode always includes the cues.
///
/// # Safety
/// `scores` and `cues` must hold `n` elements, `out` `k`.
#[no_mangle]
pub unsafe extern "C" fn cuebp_select_top_k(
    scores: *const f64,
    cues: *const u8,
    n: usize,
    k: usize,
    mode: CuebpMode,
    out: *mut u32,
) -> CuebpStatus {
    guard(|| {
        let scores = slice(scores, n, "scores")?;
        let cues = CueAssignment {
            c: indicator(slice(cues, n, "cues")?),
            model: CueModel::Observed,
        };
        let out = slice_mut(out, k, "out")?;
        let est = select_estimate(scores, &cues, k, mode.into())?;
        out.copy_from_slice(&est);
        Ok(())
    })
}

/// `|S delta S_hat| / K` for a truth indicator of length `n` and an
/// estimate of `k` ids.
///
/// # Safety
/// `truth` must hold `n` bytes and `estimate` `k` ids; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cuebp_error_fraction(
    truth: *const u8,
    n: usize,
    estimate: *const u32,
    k: usize,
    out: *mut f64,
) -> CuebpStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(CuebpStatus::NullPointer, "out is null"));
        }
        let sigma = indicator(slice(truth, n, "truth")?);
        let est = slice(estimate, k, "estimate")?;
        let members: Vec<u32> = (0..n as u32).filter(|&i| sigma[i as usize]).collect();
        let truth = GroundTruth::from_members(n, &members)?;
        *out = error_fraction(&truth, est)?;
        Ok(())
    })
}

/// Large-degree variance recursion. `snr` is `lambda_alpha` in perfect
/// mode and `lambda` in imperfect mode. Writes `mu^(0..)` into `mu_out`
/// (capacity `cap`) and the number of entries into `len_out`; returns
/// `BufferTooSmall` with `len_out` set if `cap` is insufficient.
///
/// # Safety
/// `mu_out` must hold `cap` values; `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cuebp_de_mu(
    mode: CuebpMode,
    snr: f64,
    kappa: f64,
    alpha: f64,
    beta: f64,
    t_max: usize,
    mu_out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> CuebpStatus {
    guard(|| {
        if len_out.is_null() {
            return Err(fail(CuebpStatus::NullPointer, "len_out is null"));
        }
        let mut cfg = DeConfig::new(snr, kappa, alpha, beta);
        cfg.t_max = t_max;
        let traj = match mode {
            CuebpMode::Perfect => mu_recursion_perfect(&cfg)?,
            CuebpMode::Imperfect => mu_recursion_imperfect(&cfg)?,
        };
        *len_out = traj.mu.len();
        if traj.mu.len() > cap {
            return Err(fail(
                CuebpStatus::BufferTooSmall,
                format!("need {} entries, buffer holds {cap}", traj.mu.len()),
            ));
        }
        slice_mut(mu_out, traj.mu.len(), "mu_out")?.copy_from_slice(&traj.mu);
        Ok(())
    })
}
