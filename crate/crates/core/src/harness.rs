//! Experiment orchestration: sample, cue, detect, score.
//!
//! Every random stage draws from its own stream, `derive_seed(master, trial,
//! tag)`, so BP and PPR on the same trial see the same graph and cues, and
//! grid points of a sweep share graphs wherever their model parameters agree.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::{run_bp, run_bp_uncued, select_estimate, BpConfig, BpMode};
use crate::de::{
    mu_bounds_imperfect, mu_bounds_perfect, mu_recursion_imperfect, mu_recursion_perfect, moments, population_dynamics,
    predicted_error_imperfect, predicted_error_perfect, theorem_bound_imperfect, theorem_bound_perfect, DeConfig,
    PopulationConfig,
};
use crate::metrics::{
    error_fraction, error_fraction_excluding_cues, mean_stderr, recall, recall_excluding_cues, RecallDenominator,
    SuccessTally,
};
use crate::model::{
    a_for_lambda, lambda_alpha_of, lambda_of, sample_cues_imperfect, sample_cues_perfect, CueAssignment, GroundTruth,
    ModelParams,
};
use crate::graph::Graph;
use crate::ppr::{personalized_pagerank, ppr_estimate, PprConfig};
use crate::rng::derive_seed;
use crate::{Error, Result};

pub const DEFAULT_EDGE_CAP: u64 = 200_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Bp,
    Ppr,
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algo::Bp => "bp",
            Algo::Ppr => "ppr",
        })
    }
}

impl std::str::FromStr for Algo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bp" => Ok(Algo::Bp),
            "ppr" => Ok(Algo::Ppr),
            other => Err(Error::invalid(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// How the dense-edge parameter `a` is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    A(f64),
    Lambda(f64),
    LambdaAlpha(f64),
}

/// Resolved settings of a synthetic experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub kappa: f64,
    pub b: f64,
    pub signal: Signal,
    pub alpha: f64,
    pub beta: f64,
    pub tf: Option<usize>,
    pub algos: Vec<Algo>,
    pub ppr: PprConfig,
    pub edge_cap: u64,
    /// Report `wall_time_ms = 0` so that output is byte-identical across runs.
    pub zero_timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 10_000,
            kappa: 0.01,
            b: 100.0,
            signal: Signal::Lambda(0.5),
            alpha: 0.1,
            beta: 1.0,
            tf: None,
            algos: vec![Algo::Bp],
            ppr: PprConfig::default(),
            edge_cap: DEFAULT_EDGE_CAP,
            zero_timings: false,
        }
    }
}

fn parse_val<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad value {v:?} for key {key:?}")))
}

/// Parse a flat `key = value` file; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: "config".into(),
                line: idx + 1,
                msg: format!("expected key = value, found {line:?}"),
            });
        };
        map.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(map)
}

pub fn load_kv(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kv(&text).map_err(|e| match e {
        Error::Parse { line, msg, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        },
        other => other,
    })
}

impl ExperimentConfig {
    /// Apply one setting. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.n = parse_val(key, value)?,
            "kappa" => self.kappa = parse_val(key, value)?,
            "b" => self.b = parse_val(key, value)?,
            "a" => self.signal = Signal::A(parse_val(key, value)?),
            "lambda" => self.signal = Signal::Lambda(parse_val(key, value)?),
            "lambda_alpha" => self.signal = Signal::LambdaAlpha(parse_val(key, value)?),
            "alpha" => self.alpha = parse_val(key, value)?,
            "beta" => self.beta = parse_val(key, value)?,
            "tf" => self.tf = Some(parse_val(key, value)?),
            "algos" | "algo" => {
                self.algos = value.split(',').map(|s| s.trim().parse()).collect::<Result<_>>()?;
            }
            "damping" => self.ppr.damping = parse_val(key, value)?,
            "tol" => self.ppr.tol = parse_val(key, value)?,
            "max_iters" => self.ppr.max_iters = parse_val(key, value)?,
            "edge_cap" => self.edge_cap = parse_val::<f64>(key, value)? as u64,
            "zero_timings" | "deterministic" => self.zero_timings = parse_val(key, value)?,
            _ => return Err(Error::invalid(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        map.iter().try_for_each(|(k, v)| self.set(k, v))
    }

    /// Model parameters with `a` resolved from the signal specification.
    pub fn params(&self) -> Result<ModelParams> {
        let a = match self.signal {
            Signal::A(a) => a,
            Signal::Lambda(l) => a_for_lambda(self.b, self.kappa, l, None)?,
            Signal::LambdaAlpha(l) => a_for_lambda(self.b, self.kappa, l, Some(self.alpha))?,
        };
        let p = ModelParams {
            n: self.n,
            kappa: self.kappa,
            a,
            b: self.b,
            alpha: self.alpha,
            beta: self.beta,
        };
        // beta = 0 is legal here: the detector then ignores the cues
        if p.beta == 0.0 {
            ModelParams { beta: 1.0, ..p }.validate()?;
        } else {
            p.validate()?;
        }
        Ok(p)
    }

    /// Detector mode implied by `beta`; `None` when cues carry no
    /// information about membership (`beta = 0`).
    pub fn mode(&self) -> Option<BpMode> {
        if self.beta >= 1.0 {
            Some(BpMode::Perfect)
        } else if self.beta > 0.0 {
            Some(BpMode::Imperfect)
        } else {
            None
        }
    }
}

/// Expected number of directed edge slots of a model instance.
pub fn expected_directed_edges(p: &ModelParams) -> f64 {
    let (n, k) = (p.n as f64, p.k() as f64);
    let inside = k * (k - 1.0) / 2.0;
    let total = n * (n - 1.0) / 2.0;
    2.0 * (inside * p.p() + (total - inside) * p.q())
}

fn check_cap(p: &ModelParams, cap: u64) -> Result<()> {
    let e = expected_directed_edges(p);
    if e > cap as f64 {
        return Err(Error::TooLarge {
            directed_edges: e as u64,
            cap,
        });
    }
    Ok(())
}

/// One line of the trial CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub seed: u64,
    pub n: usize,
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub lambda_alpha: f64,
    pub tf: usize,
    pub algo: Algo,
    #[serde(rename = "E")]
    pub e: f64,
    pub recall: f64,
    #[serde(rename = "P_succ_batch")]
    pub p_succ_batch: f64,
    pub wall_time_ms: u64,
    #[serde(rename = "E_excl_cues")]
    pub e_excl_cues: f64,
    pub recall_excl_cues_over_k: f64,
    pub recall_excl_cues_over_residual: f64,
    pub trial: u64,
}

/// Stage tags of the seed derivation.
pub const TAG_GRAPH: &str = "graph";
pub const TAG_CUES: &str = "cues";

/// Scores and top-`K` estimate of one detector run.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub algo: Algo,
    /// Mode used for selection; `Imperfect` when the cues were ignored.
    pub mode: BpMode,
    pub tf: usize,
    pub scores: Vec<f64>,
    pub estimate: Vec<u32>,
}

/// Run one detector. `mode = None` means the cues carry no information:
/// BP runs without priors and ranks every node.
pub fn detect(
    graph: &Graph,
    cues: &CueAssignment,
    params: &ModelParams,
    algo: Algo,
    mode: Option<BpMode>,
    tf: Option<usize>,
    ppr: &PprConfig,
) -> Result<Detection> {
    let tf = match tf {
        Some(t) => t,
        None => crate::bp::default_tf(params.n, params.a)?,
    };
    let k = params.k();
    let (scores, estimate, mode) = match (algo, mode) {
        (Algo::Bp, Some(mode)) => {
            let bc = BpConfig::from_params(params, mode, Some(tf))?;
            let s = run_bp(graph, cues, &bc)?.values;
            let est = select_estimate(&s, cues, k, mode)?;
            (s, est, mode)
        }
        (Algo::Bp, None) => {
            let bc = BpConfig::from_params(&ModelParams { beta: 0.5, ..*params }, BpMode::Imperfect, Some(tf))?;
            let s = run_bp_uncued(graph, &bc)?.values;
            let est = select_estimate(&s, &CueAssignment::none(params.n), k, BpMode::Imperfect)?;
            (s, est, BpMode::Imperfect)
        }
        (Algo::Ppr, mode) => {
            let mode = mode.unwrap_or(BpMode::Imperfect);
            let s = personalized_pagerank(graph, cues, ppr)?;
            let est = ppr_estimate(&s, cues, k, mode)?;
            (s, est, mode)
        }
    };
    Ok(Detection {
        algo,
        mode,
        tf,
        scores,
        estimate,
    })
}

/// Accuracy of one estimate against the truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub e: f64,
    pub recall: f64,
    pub p_succ: f64,
    pub e_excl_cues: f64,
    pub recall_excl_cues_over_k: f64,
    pub recall_excl_cues_over_residual: f64,
}

/// Score an estimate. Cue-excluded figures are NaN when undefined (every
/// member is a cue).
pub fn score(truth: &GroundTruth, cues: &CueAssignment, estimate: &[u32]) -> Result<Scores> {
    let mut tally = SuccessTally::default();
    tally.add(truth, estimate)?;
    let or_nan = |r: Result<f64>| r.unwrap_or(f64::NAN);
    Ok(Scores {
        e: error_fraction(truth, estimate)?,
        recall: recall(truth, estimate)?,
        p_succ: tally.success_prob()?,
        e_excl_cues: or_nan(error_fraction_excluding_cues(truth, &cues.c, estimate)),
        recall_excl_cues_over_k: or_nan(recall_excluding_cues(
            truth,
            &cues.c,
            estimate,
            RecallDenominator::Community,
        )),
        recall_excl_cues_over_residual: or_nan(recall_excluding_cues(
            truth,
            &cues.c,
            estimate,
            RecallDenominator::CommunityWithoutCues,
        )),
    })
}

impl MetricsRow {
    pub fn new(seed: u64, trial: u64, params: &ModelParams, det: &Detection, s: &Scores, wall_time_ms: u64) -> Self {
        MetricsRow {
            seed,
            n: params.n,
            kappa: params.kappa,
            a: params.a,
            b: params.b,
            alpha: params.alpha,
            beta: params.beta,
            lambda: lambda_of(params),
            lambda_alpha: lambda_alpha_of(params),
            tf: det.tf,
            algo: det.algo,
            e: s.e,
            recall: s.recall,
            p_succ_batch: s.p_succ,
            wall_time_ms,
            e_excl_cues: s.e_excl_cues,
            recall_excl_cues_over_k: s.recall_excl_cues_over_k,
            recall_excl_cues_over_residual: s.recall_excl_cues_over_residual,
            trial,
        }
    }
}

/// A sampled graph with its truth and cues.
#[derive(Debug, Clone)]
pub struct Instance {
    pub params: ModelParams,
    pub graph: Graph,
    pub truth: GroundTruth,
    pub cues: CueAssignment,
}

/// Sample the instance of `trial` under `master_seed`.
pub fn sample_instance(cfg: &ExperimentConfig, master_seed: u64, trial: u64) -> Result<Instance> {
    let params = cfg.params()?;
    check_cap(&params, cfg.edge_cap)?;
    let (graph, truth) = crate::model::sample_graph(&params, derive_seed(master_seed, trial, TAG_GRAPH))?;
    let cue_seed = derive_seed(master_seed, trial, TAG_CUES);
    let cues = match cfg.mode() {
        Some(BpMode::Perfect) => sample_cues_perfect(&truth, params.alpha, cue_seed)?,
        _ => sample_cues_imperfect(&truth, params.alpha, params.beta, cue_seed)?,
    };
    Ok(Instance {
        params,
        graph,
        truth,
        cues,
    })
}

/// Sample one instance and run every configured algorithm on it.
pub fn run_trial(cfg: &ExperimentConfig, master_seed: u64, trial: u64) -> Result<Vec<MetricsRow>> {
    let inst = sample_instance(cfg, master_seed, trial)?;
    let mut rows = Vec::with_capacity(cfg.algos.len());
    for &algo in &cfg.algos {
        let start = Instant::now();
        let det = detect(&inst.graph, &inst.cues, &inst.params, algo, cfg.mode(), cfg.tf, &cfg.ppr)?;
        let elapsed = if cfg.zero_timings {
            0
        } else {
            start.elapsed().as_millis() as u64
        };
        let s = score(&inst.truth, &inst.cues, &det.estimate)?;
        rows.push(MetricsRow::new(master_seed, trial, &inst.params, &det, &s, elapsed));
    }
    Ok(rows)
}

/// Parameter swept by [`run_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Alpha,
    Lambda,
    Beta,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepAxis::Alpha),
            "lambda" => Ok(SweepAxis::Lambda),
            "beta" => Ok(SweepAxis::Beta),
            other => Err(Error::invalid(format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// Mean and standard error of one algorithm at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub axis: SweepAxis,
    pub value: f64,
    pub algo: Algo,
    pub trials: usize,
    pub failures: usize,
    #[serde(rename = "E_mean")]
    pub e_mean: f64,
    #[serde(rename = "E_se")]
    pub e_se: f64,
    pub recall_mean: f64,
    #[serde(rename = "P_succ_batch")]
    pub p_succ_batch: f64,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<MetricsRow>,
    pub points: Vec<PointSummary>,
}

const PARALLEL_TRIAL_EDGES: f64 = 2e7;

/// Run `trials` trials at every grid value. A failing point is recorded
/// in its summary and the sweep moves on.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.values.is_empty() {
        return Err(Error::invalid("sweep grid is empty"));
    }
    if spec.trials == 0 {
        return Err(Error::invalid("need at least one trial per point"));
    }
    let mut out = SweepResult::default();
    for &value in &spec.values {
        let mut cfg = spec.base.clone();
        match spec.axis {
            SweepAxis::Alpha => cfg.alpha = value,
            SweepAxis::Beta => cfg.beta = value,
            SweepAxis::Lambda => cfg.signal = Signal::Lambda(value),
        }
        let small = cfg
            .params()
            .map(|p| expected_directed_edges(&p) < PARALLEL_TRIAL_EDGES)
            .unwrap_or(true);
        let run = |t: usize| run_trial(&cfg, spec.seed, t as u64);
        let results: Vec<Result<Vec<MetricsRow>>> = if small {
            (0..spec.trials).into_par_iter().map(run).collect()
        } else {
            (0..spec.trials).map(run).collect()
        };
        let mut first_error = String::new();
        let mut failures = 0;
        let mut point_rows = Vec::new();
        for r in results {
            match r {
                Ok(rows) => point_rows.extend(rows),
                Err(e) => {
                    failures += 1;
                    if first_error.is_empty() {
                        first_error = e.to_string();
                    }
                }
            }
        }
        for &algo in &cfg.algos {
            let mine: Vec<&MetricsRow> = point_rows.iter().filter(|r| r.algo == algo).collect();
            let es: Vec<f64> = mine.iter().map(|r| r.e).collect();
            let rs: Vec<f64> = mine.iter().map(|r| r.recall).collect();
            let (e_mean, e_se) = mean_stderr(&es);
            // pooled counts: every trial has the same n and K
            let p_succ = if mine.is_empty() {
                f64::NAN
            } else {
                mine.iter().map(|r| r.p_succ_batch).sum::<f64>() / mine.len() as f64
            };
            out.points.push(PointSummary {
                axis: spec.axis,
                value,
                algo,
                trials: mine.len(),
                failures,
                e_mean,
                e_se,
                recall_mean: mean_stderr(&rs).0,
                p_succ_batch: p_succ,
                error: first_error.clone(),
            });
        }
        out.rows.extend(point_rows);
    }
    Ok(out)
}

/// Which recursion [`run_de`] iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeMode {
    Perfect,
    Imperfect,
    Population,
}

impl std::str::FromStr for DeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perfect" => Ok(DeMode::Perfect),
            "imperfect" => Ok(DeMode::Imperfect),
            "population" => Ok(DeMode::Population),
            other => Err(Error::invalid(format!("unknown DE mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeRow {
    pub t: usize,
    pub mu: f64,
    pub predicted_error: Option<f64>,
    pub theorem_bound: f64,
    pub mu_lower: f64,
    pub mu_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationRow {
    pub t: usize,
    pub mean0: f64,
    pub var0: f64,
    pub mean1: f64,
    pub var1: f64,
    pub skew1: f64,
    /// Common shift applied by the re-centring step.
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeTable {
    Gaussian { rows: Vec<DeRow>, converged: bool },
    Population(Vec<PopulationRow>),
}

/// Iterate a density-evolution recursion and tabulate it. `cfg.snr` is
/// `lambda_alpha` in perfect mode and `lambda` in imperfect mode.
pub fn run_de(mode: DeMode, cfg: &DeConfig, pop: Option<&PopulationConfig>) -> Result<DeTable> {
    match mode {
        DeMode::Perfect | DeMode::Imperfect => {
            let (traj, bound, (lo, hi)) = if mode == DeMode::Perfect {
                (
                    mu_recursion_perfect(cfg)?,
                    theorem_bound_perfect(cfg.snr, cfg.kappa, cfg.alpha),
                    mu_bounds_perfect(cfg.snr, cfg.kappa, cfg.alpha),
                )
            } else {
                (
                    mu_recursion_imperfect(cfg)?,
                    theorem_bound_imperfect(cfg.snr, cfg.kappa, cfg.alpha, cfg.beta),
                    mu_bounds_imperfect(cfg.snr, cfg.kappa, cfg.alpha, cfg.beta),
                )
            };
            let rows = traj
                .mu
                .iter()
                .enumerate()
                .map(|(t, &mu)| {
                    let predicted = if mu > 0.0 {
                        Some(if mode == DeMode::Perfect {
                            predicted_error_perfect(mu, cfg.kappa, cfg.alpha)?
                        } else {
                            predicted_error_imperfect(mu, cfg.kappa, cfg.alpha, cfg.beta)?
                        })
                    } else {
                        None
                    };
                    Ok(DeRow {
                        t,
                        mu,
                        predicted_error: predicted,
                        theorem_bound: bound,
                        mu_lower: if t == 0 { 0.0 } else { lo },
                        mu_upper: if t == 0 { 0.0 } else { hi },
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DeTable::Gaussian {
                rows,
                converged: traj.converged,
            })
        }
        DeMode::Population => {
            let pop = pop.ok_or_else(|| Error::invalid("population mode needs finite-degree parameters"))?;
            let gens = population_dynamics(pop)?;
            Ok(DeTable::Population(
                gens.iter()
                    .enumerate()
                    .map(|(t, g)| {
                        let (mean0, var0, _) = moments(&g.xi0);
                        let (mean1, var1, skew1) = moments(&g.xi1);
                        PopulationRow {
                            t,
                            mean0,
                            var0,
                            mean1,
                            var1,
                            skew1,
                            shift: g.shift,
                        }
                    })
                    .collect(),
            ))
        }
    }
}

/// Serialize records as CSV with a header row.
pub fn write_csv<T: Serialize>(w: impl Write, records: &[T]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        wtr.serialize(r)
            .map_err(|e| Error::invalid(format!("csv serialization failed: {e}")))?;
    }
    wtr.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_csv_file<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(std::io::BufWriter::new(f), records)
}

/// Run metadata written next to every output as `<output>.meta.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub conventions: BTreeMap<&'static str, String>,
}

pub fn conventions() -> BTreeMap<&'static str, String> {
    let mut m = BTreeMap::new();
    m.insert("seed_derivation", "splitmix64(master ^ fnv1a(tag)) stream per (trial, tag)".into());
    m.insert("bp_schedule", "synchronous, t_f - 1 message rounds then beliefs".into());
    m.insert("top_k_ties", "smaller node id first".into());
    m.insert("ppr", "restart uniform on cues, dangling mass to restart, L1 stopping".into());
    m.insert("E", "|S delta S_hat| / K".into());
    m.insert("E_excl_cues", "|(S \\ C) delta (S_hat \\ C)| / |S \\ C|".into());
    m.insert("lambda", "kappa^2 (a - b)^2 / ((1 - kappa) b); lambda_alpha = lambda (1 - alpha)^2".into());
    m.insert("real_graph_pq", "p: density among cues and their neighbours, q: global density".into());
    m.insert("population", "common shift per generation so that E0 sigmoid + E1 sigmoid = 1".into());
    m.insert("beta_zero", "cues carry no membership information; BP runs without priors".into());
    m
}

pub fn write_metadata<C: Serialize>(output: impl AsRef<Path>, command: &str, config: &C) -> Result<()> {
    let mut path = output.as_ref().as_os_str().to_owned();
    path.push(".meta.json");
    let path = std::path::PathBuf::from(path);
    let meta = RunMetadata {
        tool: "cuebp",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        conventions: conventions(),
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::invalid(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}
