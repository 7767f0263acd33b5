use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cuebp::bp::BpMode;
use cuebp::de::{DeConfig, PopulationConfig};
use cuebp::harness::{
    detect, load_kv, run_de, run_sweep, sample_instance, score, write_csv, write_csv_file, write_metadata, Algo,
    DeMode, DeTable, Detection, ExperimentConfig, MetricsRow, SweepAxis, SweepSpec,
};
use cuebp::ingest::{
    estimate_pq, knn_graph, load_cue_file, load_edge_list, load_features, load_label_file, write_edge_list,
    write_id_list,
};
use cuebp::{CueModel, ModelParams};

/// Cue-seeded belief propagation for planted dense subgraphs.
#[derive(Parser)]
#[command(name = "cuebp", version)]
struct Cli {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a planted graph, its community and cues.
    Generate(GenerateArgs),
    /// Run belief propagation and write scores and the estimate.
    DetectBp(DetectArgs),
    /// Run personalized PageRank from the cues.
    DetectPpr(DetectArgs),
    /// Iterate density evolution.
    De(DeArgs),
    /// Monte Carlo sweep over alpha, lambda or beta.
    Sweep(SweepArgs),
    /// Symmetrized k-nearest-neighbour graph from a feature CSV.
    BuildKnn(KnnArgs),
}

/// Model and detector settings. Each one overrides the config file key of
/// the same name.
#[derive(Args, Default, Clone)]
struct ModelArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long, conflicts_with_all = ["a", "lambda_alpha"])]
    lambda: Option<f64>,
    #[arg(long, conflicts_with = "a")]
    lambda_alpha: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    tf: Option<usize>,
    /// Comma-separated subset of bp,ppr.
    #[arg(long)]
    algos: Option<String>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    edge_cap: Option<f64>,
    /// Write zero wall times so repeated runs are byte-identical.
    #[arg(long)]
    deterministic: bool,
}

impl ModelArgs {
    fn overrides(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("n", self.n.map(|v| v.to_string()));
        put("kappa", self.kappa.map(|v| v.to_string()));
        put("a", self.a.map(|v| v.to_string()));
        put("b", self.b.map(|v| v.to_string()));
        put("lambda", self.lambda.map(|v| v.to_string()));
        put("lambda_alpha", self.lambda_alpha.map(|v| v.to_string()));
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("beta", self.beta.map(|v| v.to_string()));
        put("tf", self.tf.map(|v| v.to_string()));
        put("algos", self.algos.clone());
        put("damping", self.damping.map(|v| v.to_string()));
        put("tol", self.tol.map(|v| v.to_string()));
        put("max_iters", self.max_iters.map(|v| v.to_string()));
        put("edge_cap", self.edge_cap.map(|v| v.to_string()));
        if self.deterministic {
            put("deterministic", Some("true".into()));
        }
        m
    }
}

/// Config file entries overlaid with flags. Signal keys from the file are
/// dropped when a flag picks a different one.
fn settings(config: Option<&Path>, model: &ModelArgs) -> Result<BTreeMap<String, String>> {
    let mut map = match config {
        Some(p) => load_kv(p)?,
        None => BTreeMap::new(),
    };
    let flags = model.overrides();
    if ["a", "lambda", "lambda_alpha"].iter().any(|k| flags.contains_key(*k)) {
        for k in ["a", "lambda", "lambda_alpha"] {
            map.remove(k);
        }
    }
    map.extend(flags);
    if ["a", "lambda", "lambda_alpha"].iter().filter(|k| map.contains_key(**k)).count() > 1 {
        bail!("give only one of a, lambda, lambda_alpha");
    }
    Ok(map)
}

fn experiment(map: &BTreeMap<String, String>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    for (k, v) in map {
        // keys owned by other subcommands are ignored here
        if matches!(k.as_str(), "seed" | "t_max" | "quad_nodes" | "pop_size" | "mode") {
            continue;
        }
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// Output prefix: writes PREFIX.edges, PREFIX.labels, PREFIX.cues.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Edge list; without it an instance is sampled from the model flags.
    #[arg(long, requires = "cues")]
    graph: Option<PathBuf>,
    #[arg(long)]
    cues: Option<PathBuf>,
    /// Ground-truth community, used for scoring.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Community size for file input; defaults to the label count.
    #[arg(long)]
    k: Option<usize>,
    /// Edge probabilities for file input; default to plug-in estimates.
    #[arg(long, requires = "q")]
    p: Option<f64>,
    #[arg(long, requires = "p")]
    q: Option<f64>,
    #[arg(long)]
    mode: Option<BpMode>,
    /// Required when sampling an instance.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// "node_id<TAB>score" output.
    #[arg(long)]
    scores: PathBuf,
    /// Estimated community, one id per line.
    #[arg(long)]
    membership: PathBuf,
    /// Metrics CSV, written when the truth is known.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct DeArgs {
    #[arg(long)]
    mode: Option<DeMode>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lambda_alpha: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    quad_nodes: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    pop_size: Option<usize>,
    /// Required in population mode.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    axis: SweepAxis,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Per-trial rows.
    #[arg(long)]
    out: PathBuf,
    /// Mean and standard error per point and algorithm.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct KnnArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn generate(config: Option<&Path>, args: &GenerateArgs) -> Result<()> {
    let map = settings(config, &args.model)?;
    let cfg = experiment(&map)?;
    let inst = sample_instance(&cfg, args.seed, args.trial)?;
    let edges = with_ext(&args.out, ".edges");
    write_edge_list(&edges, &inst.graph)?;
    write_id_list(with_ext(&args.out, ".labels"), &inst.truth.members())?;
    write_id_list(with_ext(&args.out, ".cues"), &inst.cues.ids())?;
    #[derive(Serialize)]
    struct Meta<'a> {
        experiment: &'a ExperimentConfig,
        params: ModelParams,
        seed: u64,
        trial: u64,
        edges: usize,
        cues: usize,
    }
    let meta = Meta {
        experiment: &cfg,
        params: inst.params,
        seed: args.seed,
        trial: args.trial,
        edges: inst.graph.edge_count(),
        cues: inst.cues.count(),
    };
    write_metadata(&edges, "generate", &meta)?;
    eprintln!(
        "n = {}, K = {}, edges = {}, cues = {}",
        inst.params.n,
        inst.truth.k(),
        inst.graph.edge_count(),
        inst.cues.count()
    );
    Ok(())
}

fn write_scores(path: &Path, det: &Detection, cues: &cuebp::CueAssignment) -> Result<()> {
    let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::new(f);
    for (i, s) in det.scores.iter().enumerate() {
        // perfect-cue BP leaves cue beliefs undefined
        if det.algo == Algo::Bp && det.mode == BpMode::Perfect && cues.c[i] {
            continue;
        }
        writeln!(w, "{i}\t{s}")?;
    }
    w.flush()?;
    Ok(())
}

fn detect_cmd(config: Option<&Path>, args: &DetectArgs, algo: Algo) -> Result<()> {
    let mut map = settings(config, &args.model)?;
    map.insert("algos".into(), algo.to_string());
    let cfg = experiment(&map)?;
    let start = Instant::now();

    let (graph, cues, truth, params, mode, seed, dropped) = if let Some(gpath) = &args.graph {
        let (graph, stats) = load_edge_list(gpath)?;
        let n = graph.node_count();
        let mode = args.mode.unwrap_or(if cfg.beta >= 1.0 { BpMode::Perfect } else { BpMode::Imperfect });
        let cue_model = match mode {
            BpMode::Perfect => CueModel::Perfect,
            BpMode::Imperfect => CueModel::Imperfect { beta: cfg.beta },
        };
        let cues = load_cue_file(args.cues.as_ref().unwrap(), n, cue_model)?;
        let truth = args.labels.as_ref().map(|p| load_label_file(p, n)).transpose()?;
        let k = match (args.k, &truth) {
            (Some(k), _) => k,
            (None, Some(t)) => t.k(),
            (None, None) => bail!("file input needs --k or --labels"),
        };
        let (p, q) = match (args.p, args.q) {
            (Some(p), Some(q)) => (p, q),
            _ => estimate_pq(&graph, &cues)?,
        };
        let params = ModelParams {
            n,
            kappa: k as f64 / n as f64,
            a: p * n as f64,
            b: q * n as f64,
            alpha: (cues.count() as f64 / k as f64).min(0.999),
            beta: if mode == BpMode::Perfect { 1.0 } else { cfg.beta },
        };
        if params.k() != k {
            bail!("K = {k} is not representable at n = {n}");
        }
        eprintln!(
            "loaded {}: n = {n}, edges = {}, dropped {} self-loops and {} duplicates; K = {k}, p = {p:.6}, q = {q:.6}",
            gpath.display(),
            graph.edge_count(),
            stats.self_loops,
            stats.duplicates
        );
        (graph, cues, truth, params, Some(mode), 0, Some(stats))
    } else {
        let Some(seed) = args.seed else {
            bail!("--seed is required when sampling an instance");
        };
        let inst = sample_instance(&cfg, seed, args.trial)?;
        let mode = args.mode.or(cfg.mode());
        (inst.graph, inst.cues, Some(inst.truth), inst.params, mode, seed, None)
    };

    let det = detect(&graph, &cues, &params, algo, mode, cfg.tf, &cfg.ppr)?;
    let elapsed = if cfg.zero_timings {
        0
    } else {
        start.elapsed().as_millis() as u64
    };
    write_scores(&args.scores, &det, &cues)?;
    write_id_list(&args.membership, &det.estimate)?;

    if let Some(truth) = &truth {
        let s = score(truth, &cues, &det.estimate)?;
        eprintln!("E = {:.4}, recall = {:.4}", s.e, s.recall);
        if let Some(mpath) = &args.metrics {
            let row = MetricsRow::new(seed, args.trial, &params, &det, &s, elapsed);
            write_csv_file(mpath, &[row])?;
        }
    } else if args.metrics.is_some() {
        bail!("--metrics needs the ground truth (--labels)");
    }

    #[derive(Serialize)]
    struct Meta<'a> {
        experiment: &'a ExperimentConfig,
        params: ModelParams,
        algo: Algo,
        mode: BpMode,
        tf: usize,
        seed: Option<u64>,
        graph: Option<&'a Path>,
        cues: Option<&'a Path>,
        self_loops_dropped: Option<usize>,
        duplicates_dropped: Option<usize>,
    }
    let meta = Meta {
        experiment: &cfg,
        params,
        algo,
        mode: det.mode,
        tf: det.tf,
        seed: args.seed,
        graph: args.graph.as_deref(),
        cues: args.cues.as_deref(),
        self_loops_dropped: dropped.map(|s| s.self_loops),
        duplicates_dropped: dropped.map(|s| s.duplicates),
    };
    let name = match algo {
        Algo::Bp => "detect-bp",
        Algo::Ppr => "detect-ppr",
    };
    write_metadata(&args.scores, name, &meta)?;
    Ok(())
}

fn de_cmd(config: Option<&Path>, args: &DeArgs) -> Result<()> {
    let mut map = match config {
        Some(p) => load_kv(p)?,
        None => BTreeMap::new(),
    };
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    };
    put("mode", args.mode.map(|m| format!("{m:?}").to_lowercase()));
    put("lambda", args.lambda.map(|v| v.to_string()));
    put("lambda_alpha", args.lambda_alpha.map(|v| v.to_string()));
    put("kappa", args.kappa.map(|v| v.to_string()));
    put("alpha", args.alpha.map(|v| v.to_string()));
    put("beta", args.beta.map(|v| v.to_string()));
    put("t_max", args.t_max.map(|v| v.to_string()));
    put("quad_nodes", args.quad_nodes.map(|v| v.to_string()));
    put("a", args.a.map(|v| v.to_string()));
    put("b", args.b.map(|v| v.to_string()));
    put("pop_size", args.pop_size.map(|v| v.to_string()));
    put("seed", args.seed.map(|v| v.to_string()));

    let get = |k: &str| -> Result<Option<f64>> {
        map.get(k)
            .map(|v| v.parse::<f64>().with_context(|| format!("bad value {v:?} for {k}")))
            .transpose()
    };
    let mode: DeMode = map.get("mode").map(|s| s.parse()).transpose()?.unwrap_or(DeMode::Perfect);
    let kappa = get("kappa")?.context("kappa is required")?;
    let alpha = get("alpha")?.context("alpha is required")?;
    let beta = get("beta")?.unwrap_or(1.0);
    let t_max = get("t_max")?.map(|v| v as usize);

    #[derive(Serialize)]
    struct Meta {
        mode: DeMode,
        de: Option<DeConfig>,
        population: Option<PopulationConfig>,
    }
    let (table, meta) = if mode == DeMode::Population {
        let a = get("a")?.context("population mode needs a")?;
        let b = get("b")?.context("population mode needs b")?;
        let seed: u64 = map
            .get("seed")
            .context("--seed is required in population mode")?
            .parse()
            .context("seed must be an unsigned integer")?;
        let pop = PopulationConfig {
            kappa,
            a,
            b,
            alpha,
            pop_size: get("pop_size")?.map(|v| v as usize).unwrap_or(100_000),
            generations: t_max.unwrap_or(5),
            seed,
        };
        let dummy = DeConfig::new(0.0, kappa, alpha, 1.0);
        (run_de(mode, &dummy, Some(&pop))?, Meta { mode, de: None, population: Some(pop) })
    } else {
        let snr = match mode {
            DeMode::Perfect => get("lambda_alpha")?.context("perfect mode needs lambda_alpha")?,
            _ => get("lambda")?.context("imperfect mode needs lambda")?,
        };
        let mut cfg = DeConfig::new(snr, kappa, alpha, beta);
        if let Some(t) = t_max {
            cfg.t_max = t;
        }
        if let Some(q) = get("quad_nodes")? {
            cfg.quad_nodes = q as usize;
        }
        (run_de(mode, &cfg, None)?, Meta { mode, de: Some(cfg), population: None })
    };

    let mut buf = Vec::new();
    match &table {
        DeTable::Gaussian { rows, converged } => {
            write_csv(&mut buf, rows)?;
            if !converged {
                eprintln!("warning: no fixed point within t_max iterations");
            }
        }
        DeTable::Population(rows) => write_csv(&mut buf, rows)?,
    }
    match &args.out {
        Some(p) => {
            std::fs::write(p, &buf).with_context(|| format!("writing {}", p.display()))?;
            write_metadata(p, "de", &meta)?;
        }
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn sweep_cmd(config: Option<&Path>, args: &SweepArgs) -> Result<()> {
    let map = settings(config, &args.model)?;
    let base = experiment(&map)?;
    let spec = SweepSpec {
        base,
        axis: args.axis,
        values: args.values.clone(),
        trials: args.trials,
        seed: args.seed,
    };
    let res = run_sweep(&spec)?;
    write_csv_file(&args.out, &res.rows)?;
    write_metadata(&args.out, "sweep", &spec)?;
    for p in &res.points {
        eprintln!(
            "{:?} = {:<8} {:<4} E = {:.4} +- {:.4} ({} trials, {} failed){}",
            p.axis,
            p.value,
            p.algo,
            p.e_mean,
            p.e_se,
            p.trials,
            p.failures,
            if p.error.is_empty() { String::new() } else { format!(": {}", p.error) }
        );
    }
    if let Some(s) = &args.summary {
        write_csv_file(s, &res.points)?;
    }
    Ok(())
}

fn knn_cmd(args: &KnnArgs) -> Result<()> {
    let features = load_features(&args.features)?;
    let graph = knn_graph(&features, args.k)?;
    write_edge_list(&args.out, &graph)?;
    #[derive(Serialize)]
    struct Meta<'a> {
        features: &'a Path,
        k: usize,
        n: usize,
        d: usize,
        edges: usize,
    }
    let meta = Meta {
        features: &args.features,
        k: args.k,
        n: features.n,
        d: features.d,
        edges: graph.edge_count(),
    };
    write_metadata(&args.out, "build-knn", &meta)?;
    Ok(())
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let config = cli.config.as_deref();
    let res = match &cli.cmd {
        Cmd::Generate(a) => generate(config, a),
        Cmd::DetectBp(a) => detect_cmd(config, a, Algo::Bp),
        Cmd::DetectPpr(a) => detect_cmd(config, a, Algo::Ppr),
        Cmd::De(a) => de_cmd(config, a),
        Cmd::Sweep(a) => sweep_cmd(config, a),
        Cmd::BuildKnn(a) => knn_cmd(a),
    };
    match res {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
