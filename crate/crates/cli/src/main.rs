//! Batch CLI: train embeddings, detect communities, evaluate them against
//! the graph and ground truth, and export artifacts.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O or input validation, 4 numerical
//! abort during training.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commembed::gmm::CovarianceMode;
use commembed::graph::{load_edge_list, GraphError, IdMap, LoadedGraph};
use commembed::io::{
    self, read_assignments, read_embeddings_text, read_labels, sha256_file, CommunityModel,
    ConfigPatch, FormatError, RunManifest,
};
use commembed::metrics::{
    conductance_with, nmi_with, ConductanceAggregation, LabelSet, NmiNormalization, Partition,
};
use commembed::trainer::{train, TrainConfig, TrainError};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "commembed", version, about = "Community-aware graph embedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train node and community embeddings on an edge list.
    Train(TrainArgs),
    /// Write top-N community assignments from a trained model.
    Detect(DetectArgs),
    /// Score an assignment against the graph and optional ground truth.
    Eval(EvalArgs),
    /// Re-export model artifacts.
    Export(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CovarianceArg {
    Full,
    Diagonal,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    /// 2-D demonstration settings: K=4, window 5, alpha=beta=1.
    Karate,
}

#[derive(Args)]
struct TrainArgs {
    /// Input edge list (whitespace-separated pairs, # comments).
    #[arg(long)]
    edges: PathBuf,
    /// Output directory for embeddings, model, trace and manifest.
    #[arg(long)]
    out: PathBuf,
    /// key=value config file; flags and environment override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter preset to start from.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,

    /// Number of communities K.
    #[arg(short = 'k', long = "communities", env = "COMMEMBED_K")]
    k: Option<usize>,
    /// Walks per node.
    #[arg(long, env = "COMMEMBED_GAMMA")]
    gamma: Option<usize>,
    /// Walk length.
    #[arg(long, env = "COMMEMBED_ELL")]
    ell: Option<usize>,
    /// Context window size in walk positions.
    #[arg(long, env = "COMMEMBED_ZETA")]
    zeta: Option<usize>,
    /// Embedding dimension.
    #[arg(long, env = "COMMEMBED_DIM")]
    dim: Option<usize>,
    /// Negative samples per context pair.
    #[arg(short = 'm', long, env = "COMMEMBED_NEGATIVES")]
    negatives: Option<usize>,
    /// Second-order trade-off.
    #[arg(long, env = "COMMEMBED_ALPHA")]
    alpha: Option<f64>,
    /// Community trade-off.
    #[arg(long, env = "COMMEMBED_BETA")]
    beta: Option<f64>,
    /// Outer iterations.
    #[arg(long, env = "COMMEMBED_T1")]
    t1: Option<usize>,
    /// EM alternations per outer iteration.
    #[arg(long, env = "COMMEMBED_T2")]
    t2: Option<usize>,
    /// Initial learning rate.
    #[arg(long, env = "COMMEMBED_LR0")]
    lr0: Option<f64>,
    #[arg(long, env = "COMMEMBED_SEED")]
    seed: Option<u64>,
    #[arg(long, value_enum, env = "COMMEMBED_COVARIANCE")]
    covariance: Option<CovarianceArg>,
    /// Covariance diagonal floor.
    #[arg(long, env = "COMMEMBED_FLOOR")]
    floor: Option<f64>,
    /// Resample the walk corpus every outer iteration.
    #[arg(long, env = "COMMEMBED_RESAMPLE_CORPUS")]
    resample_corpus: bool,
    /// Record per-iteration negative draws for the traced context loss.
    #[arg(long, env = "COMMEMBED_RECORD_LOSS_DRAWS")]
    record_loss_draws: Option<bool>,
    /// Worker threads; 1 guarantees bit-identical artifacts.
    #[arg(long, env = "COMMEMBED_THREADS")]
    threads: Option<usize>,
}

#[derive(Args)]
struct DetectArgs {
    /// Directory holding model.json from a training run.
    #[arg(long)]
    model: PathBuf,
    /// How many communities to list per node.
    #[arg(short = 'n', long, default_value_t = 1)]
    top: usize,
    /// Output assignments file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    edges: PathBuf,
    /// Assignments file from `detect`.
    #[arg(long)]
    assignments: PathBuf,
    /// Optional single-label ground truth ("node_id label_id" lines).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Optional CSV report destination.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AggArg::Mean)]
    conductance_aggregation: AggArg,
    #[arg(long, value_enum, default_value_t = NormArg::Mean)]
    nmi_normalization: NormArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggArg {
    Mean,
    Max,
    Sum,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    /// Arithmetic mean of the entropies.
    Mean,
    Max,
    Sqrt,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    /// Word2vec-style text embeddings.
    Text,
    /// Community model JSON.
    Community,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
}

enum AppError {
    Usage(String),
    Io(String),
    Numerical(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) => EXIT_USAGE,
            AppError::Io(_) => EXIT_IO,
            AppError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Io(m) | AppError::Numerical(m) => m,
        }
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e.to_string())
    }
}

impl From<GraphError> for AppError {
    fn from(e: GraphError) -> Self {
        AppError::Io(e.to_string())
    }
}

impl From<FormatError> for AppError {
    fn from(e: FormatError) -> Self {
        AppError::Io(e.to_string())
    }
}

impl From<TrainError> for AppError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFinite { .. } => AppError::Numerical(e.to_string()),
            other => AppError::Numerical(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Export(args) => cmd_export(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn open_input(path: &Path) -> Result<BufReader<File>, AppError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| AppError::Io(format!("cannot open {}: {e}", path.display())))
}

fn load_graph(path: &Path) -> Result<LoadedGraph, AppError> {
    let reader = open_input(path)?;
    load_edge_list(reader)
        .map_err(|e| AppError::Io(format!("{}: {e}", path.display())))
}

fn resolve_config(args: &TrainArgs) -> Result<TrainConfig, AppError> {
    let file_patch = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| AppError::Io(format!("cannot read {}: {e}", path.display())))?;
            io::parse_config(&text)
                .map_err(|e| AppError::Usage(format!("{}: {e}", path.display())))?
        }
        None => ConfigPatch::default(),
    };
    let cli_patch = ConfigPatch {
        k: args.k,
        gamma: args.gamma,
        ell: args.ell,
        zeta: args.zeta,
        dim: args.dim,
        negatives: args.negatives,
        alpha: args.alpha,
        beta: args.beta,
        t1: args.t1,
        t2: args.t2,
        lr0: args.lr0,
        seed: args.seed,
        covariance: args.covariance.map(|c| match c {
            CovarianceArg::Full => CovarianceMode::Full,
            CovarianceArg::Diagonal => CovarianceMode::Diagonal,
        }),
        floor: args.floor,
        resample_corpus: args.resample_corpus.then_some(true),
        record_loss_draws: args.record_loss_draws,
        threads: args.threads,
    };

    let base = match args.preset {
        Some(PresetArg::Karate) => TrainConfig::karate_preset(),
        None => {
            let k = cli_patch.k.or(file_patch.k).ok_or_else(|| {
                AppError::Usage(
                    "the number of communities is required: pass -k, set it in the config file, or pick a --preset"
                        .into(),
                )
            })?;
            TrainConfig::new(k)
        }
    };
    let config = cli_patch.apply(file_patch.apply(base));
    config.validate().map_err(AppError::Usage)?;
    Ok(config)
}

fn cmd_train(args: TrainArgs) -> Result<(), AppError> {
    let config = resolve_config(&args)?;
    let loaded = load_graph(&args.edges)?;
    if config.k > loaded.graph.node_count() {
        return Err(AppError::Usage(format!(
            "k = {} exceeds the graph's {} nodes",
            config.k,
            loaded.graph.node_count()
        )));
    }
    if loaded.report.self_loops_dropped > 0 || loaded.report.duplicate_edges_dropped > 0 {
        eprintln!(
            "note: dropped {} self-loops and {} duplicate edges while loading",
            loaded.report.self_loops_dropped, loaded.report.duplicate_edges_dropped
        );
    }

    std::fs::create_dir_all(&args.out)
        .map_err(|e| AppError::Io(format!("cannot create {}: {e}", args.out.display())))?;

    let started = std::time::Instant::now();
    let model = train(&loaded.graph, &config)?;
    let train_seconds = started.elapsed().as_secs_f64();
    if model.reseed_events > 0 {
        eprintln!(
            "note: {} empty mixture components were reseeded during training",
            model.reseed_events
        );
    }

    let embeddings_path = args.out.join("embeddings.txt");
    let model_path = args.out.join("model.json");
    let trace_path = args.out.join("loss_trace.csv");
    let manifest_path = args.out.join("manifest.json");

    let mut writer = BufWriter::new(File::create(&embeddings_path)?);
    io::write_embeddings_text(&mut writer, &model.tables.phi, &loaded.ids)?;
    writer.flush()?;

    let community = CommunityModel::from_state(&model.gmm, &model.resp, &loaded.ids);
    std::fs::write(&model_path, community.to_json().expect("model serializes"))?;

    let mut trace = BufWriter::new(File::create(&trace_path)?);
    io::write_loss_trace(&mut trace, &model.loss_trace)?;
    trace.flush()?;

    let mut timings = BTreeMap::new();
    timings.insert("train_total".to_string(), train_seconds);
    for row in &model.loss_trace {
        timings.insert(format!("iteration_{}", row.iteration), row.seconds);
    }
    let mut inputs = BTreeMap::new();
    inputs.insert(args.edges.display().to_string(), sha256_file(&args.edges)?);
    let mut artifacts = BTreeMap::new();
    for path in [&embeddings_path, &model_path, &trace_path] {
        artifacts.insert(
            path.file_name().unwrap().to_string_lossy().into_owned(),
            sha256_file(path)?,
        );
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config: config.clone(),
        inputs,
        artifacts,
        timings_seconds: timings,
    };
    std::fs::write(&manifest_path, manifest.to_json().expect("manifest serializes"))?;

    println!(
        "trained {} nodes, dim {}, {} communities in {:.2}s; artifacts in {}",
        loaded.graph.node_count(),
        config.dim,
        config.k,
        train_seconds,
        args.out.display()
    );
    Ok(())
}

fn read_model(dir: &Path) -> Result<CommunityModel, AppError> {
    let path = dir.join("model.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| AppError::Io(format!("cannot read {}: {e}", path.display())))?;
    Ok(CommunityModel::from_json(&text)?)
}

fn cmd_detect(args: DetectArgs) -> Result<(), AppError> {
    let model = read_model(&args.model)?;
    if args.top < 1 || args.top > model.k {
        return Err(AppError::Usage(format!(
            "top-N must be between 1 and K = {}, got {}",
            model.k, args.top
        )));
    }
    let assignments = model.assignments(args.top);
    let mut writer = BufWriter::new(File::create(&args.out)?);
    io::write_assignments(&mut writer, &assignments)?;
    writer.flush()?;
    println!(
        "wrote top-{} assignments for {} nodes to {}",
        args.top,
        assignments.len(),
        args.out.display()
    );
    Ok(())
}

fn build_partition(
    entries: &[(u64, Vec<u32>)],
    ids: &IdMap,
    what: &str,
) -> Result<Partition, AppError> {
    let mut per_node: Vec<Option<u32>> = vec![None; ids.len()];
    let mut unknown = Vec::new();
    for (original, communities) in entries {
        match ids.dense(*original) {
            Some(dense) => per_node[dense as usize] = communities.first().copied(),
            None => unknown.push(*original),
        }
    }
    if !unknown.is_empty() {
        unknown.truncate(10);
        return Err(AppError::Io(format!(
            "{what} mentions node ids absent from the graph: {unknown:?}"
        )));
    }
    let missing: Vec<u64> = per_node
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_none())
        .map(|(dense, _)| ids.original(dense as u32))
        .take(10)
        .collect();
    if !missing.is_empty() {
        return Err(AppError::Io(format!(
            "{what} does not cover every graph node; missing ids start with {missing:?}"
        )));
    }
    let raw: Vec<u32> = per_node.into_iter().map(Option::unwrap).collect();
    Ok(Partition::new(&raw))
}

fn cmd_eval(args: EvalArgs) -> Result<(), AppError> {
    let loaded = load_graph(&args.edges)?;
    let assignments = read_assignments(open_input(&args.assignments)?)
        .map_err(|e| AppError::Io(format!("{}: {e}", args.assignments.display())))?;
    let prediction = build_partition(&assignments, &loaded.ids, "assignments file")?;

    let aggregation = match args.conductance_aggregation {
        AggArg::Mean => ConductanceAggregation::Mean,
        AggArg::Max => ConductanceAggregation::Max,
        AggArg::Sum => ConductanceAggregation::Sum,
    };
    let mut rows: Vec<(String, f64)> = vec![(
        "conductance".to_string(),
        conductance_with(&loaded.graph, &prediction, aggregation),
    )];

    let mut nmi_note: Option<String> = None;
    if let Some(labels_path) = &args.labels {
        let raw = read_labels(open_input(labels_path)?)
            .map_err(|e| AppError::Io(format!("{}: {e}", labels_path.display())))?;
        let mut per_node: Vec<Vec<u32>> = vec![Vec::new(); loaded.ids.len()];
        for (original, label) in raw {
            match loaded.ids.dense(original) {
                Some(dense) => per_node[dense as usize].push(label),
                None => {
                    return Err(AppError::Io(format!(
                        "labels file mentions unknown node id {original}"
                    )))
                }
            }
        }
        if per_node.iter().any(Vec::is_empty) {
            return Err(AppError::Io(
                "labels file does not cover every graph node".into(),
            ));
        }
        let labels = LabelSet::new(per_node);
        if labels.is_single_label() {
            let truth = labels.to_partition().expect("single-label");
            let normalization = match args.nmi_normalization {
                NormArg::Mean => NmiNormalization::ArithmeticMean,
                NormArg::Max => NmiNormalization::Max,
                NormArg::Sqrt => NmiNormalization::Sqrt,
            };
            rows.push(("nmi".to_string(), nmi_with(&prediction, &truth, normalization)));
        } else {
            nmi_note =
                Some("ground truth is multi-label; NMI is not defined and was skipped".into());
        }
    }

    let mut csv = String::from("metric,value\n");
    for (metric, value) in &rows {
        csv.push_str(&format!("{metric},{value}\n"));
    }
    if let Some(out) = &args.out {
        std::fs::write(out, &csv)?;
    }

    println!(
        "evaluated {} nodes in {} communities",
        loaded.graph.node_count(),
        prediction.community_count()
    );
    for (metric, value) in &rows {
        println!("  {metric}: {value:.6}");
    }
    if let Some(note) = nmi_note {
        println!("  note: {note}");
    }
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<(), AppError> {
    match args.format {
        FormatArg::Text => {
            let path = args.model.join("embeddings.txt");
            let (ids, matrix) = read_embeddings_text(open_input(&path)?)
                .map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
            let sorted = ids.windows(2).all(|w| w[0] < w[1]);
            if !sorted {
                return Err(AppError::Io(format!(
                    "{}: node ids are not strictly increasing",
                    path.display()
                )));
            }
            let id_map = IdMap::from_sorted(ids);
            let mut writer = BufWriter::new(File::create(&args.out)?);
            io::write_embeddings_text(&mut writer, &matrix, &id_map)?;
            writer.flush()?;
        }
        FormatArg::Community => {
            let model = read_model(&args.model)?;
            std::fs::write(&args.out, model.to_json().expect("model serializes"))?;
        }
    }
    println!("exported {} to {}", args.model.display(), args.out.display());
    Ok(())
}
