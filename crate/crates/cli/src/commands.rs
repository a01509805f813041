//! One function per subcommand. Each reads its inputs, calls a single core
//! operation, stages its outputs and a manifest, and commits them together.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::Args;
use serde::Serialize;
use serde_json::json;

use flatsomatic::data::synth::{planted_response, synth_generate, SynthParams};
use flatsomatic::data::{
    build_matrix, build_vocabulary, kfold_split, parse_labels, parse_mutation_file, read_matrix, write_labels,
    write_matrix, write_mutation_file, OccurrenceMatrix, SomaticProfileSet, DEFAULT_MIN_FREQ,
};
use flatsomatic::eval::{
    classify_cv, cluster_nmi, cross_validate, evaluate_reconstruction, pca_project, read_embeddings,
    write_embeddings, ClassifierParams, Embeddings, FoldMetrics, MetricsReport,
};
use flatsomatic::kernel::Matrix;
use flatsomatic::vae::{embed, read_checkpoint, train_observed, write_checkpoint, write_history, VaeModel};

use crate::config::{thread_limit, Overrides, PipelineConfig, DEFAULT_FOLDS, DEFAULT_K, DEFAULT_SEED};
use crate::error::{CliError, CliResult, EXIT_FAILURE, EXIT_PARSE};
use crate::io::{read_input, InputDigest, Outputs};
use crate::manifest::{manifest_path, RunManifest};

/// Collects inputs and outputs of one run and writes them with a manifest.
struct Run {
    command: &'static str,
    started: DateTime<Utc>,
    inputs: Vec<InputDigest>,
    outputs: Outputs,
    threads: usize,
}

impl Run {
    fn start(command: &'static str) -> CliResult<Self> {
        Ok(Self {
            command,
            started: Utc::now(),
            inputs: Vec::new(),
            outputs: Outputs::new(),
            threads: thread_limit()?,
        })
    }

    fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let (bytes, digest) = read_input(path)?;
        self.inputs.push(digest);
        Ok(bytes)
    }

    fn write(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        self.outputs.stage(path, bytes)
    }

    /// Stages the manifest beside `primary` and commits everything.
    fn finish(mut self, primary: &Path, config: serde_json::Value) -> CliResult<()> {
        let manifest = RunManifest::new(
            self.command,
            config,
            std::mem::take(&mut self.inputs),
            self.started,
            self.outputs.paths(),
            self.threads,
        );
        let bytes = to_json(&manifest)?;
        self.outputs.stage(&manifest_path(primary), &bytes)?;
        self.outputs.commit()
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::new(EXIT_FAILURE, e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn with_file<T>(path: &Path, r: flatsomatic::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::from(e).in_file(path))
}

fn load_matrix(run: &mut Run, path: &Path) -> CliResult<OccurrenceMatrix> {
    let bytes = run.read(path)?;
    with_file(path, read_matrix(&bytes[..]))
}

fn load_model(run: &mut Run, path: &Path) -> CliResult<VaeModel> {
    let bytes = run.read(path)?;
    with_file(path, read_checkpoint(&bytes[..]))
}

fn load_embeddings(run: &mut Run, path: &Path) -> CliResult<Embeddings> {
    let bytes = run.read(path)?;
    with_file(path, read_embeddings(&bytes[..]))
}

fn load_labels(run: &mut Run, path: &Path) -> CliResult<BTreeMap<String, String>> {
    let bytes = run.read(path)?;
    with_file(path, parse_labels(&bytes[..]))
}

/// Labels in the order of `ids`; a sample without a label is a shape error.
fn aligned_labels<'a>(ids: &[String], labels: &'a BTreeMap<String, String>) -> CliResult<Vec<&'a str>> {
    ids.iter()
        .map(|id| {
            labels
                .get(id)
                .map(String::as_str)
                .ok_or_else(|| CliError::shape(format!("no label for sample {id:?}")))
        })
        .collect()
}

fn embeddings_bytes(e: &Embeddings) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_embeddings(e, &mut buf)?;
    Ok(buf)
}

fn io_bytes(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| CliError::new(EXIT_FAILURE, e.to_string()))?;
    Ok(buf)
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 5000)]
    pub n_features: usize,
    #[arg(long, default_value_t = 8)]
    pub n_clusters: usize,
    #[arg(long, default_value_t = 0.3)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.005)]
    pub p_out: f64,
    #[arg(long, default_value_t = 200)]
    pub signature_size: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Mutation TSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Cluster labels TSV to write.
    #[arg(long)]
    pub labels: PathBuf,
    /// Optional binary response labels planted on cluster membership.
    #[arg(long)]
    pub response: Option<PathBuf>,
    /// Probability of flipping each planted response label.
    #[arg(long, default_value_t = 0.1)]
    pub flip: f64,
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<String> {
    let mut run = Run::start("synth")?;
    let params = SynthParams {
        n_samples: args.n_samples,
        n_features: args.n_features,
        n_clusters: args.n_clusters,
        p_in: args.p_in,
        p_out: args.p_out,
        signature_size: args.signature_size,
        seed: args.seed,
    };
    let data = synth_generate(&params)?;
    run.write(&args.out, &io_bytes(|b| write_mutation_file(&data.profiles, b))?)?;
    let labels = data.profiles.labels().cloned().unwrap_or_default();
    let ordered: Vec<(&str, &str)> = data
        .profiles
        .sample_ids()
        .map(|id| (id, labels[id].as_str()))
        .collect();
    run.write(&args.labels, &io_bytes(|b| write_labels(ordered.iter().copied(), b))?)?;
    if let Some(path) = &args.response {
        if !(0.0..=1.0).contains(&args.flip) {
            return Err(CliError::config(vec![format!("flip must be in [0, 1], got {}", args.flip)]));
        }
        let y = planted_response(&data.clusters, args.flip, args.seed);
        let text: Vec<String> = y.iter().map(u8::to_string).collect();
        let pairs: Vec<(&str, &str)> = data.profiles.sample_ids().zip(text.iter().map(String::as_str)).collect();
        run.write(path, &io_bytes(|b| write_labels(pairs, b))?)?;
    }
    let config = json!({ "synth": params, "flip": args.flip });
    run.finish(&args.out, config)?;
    Ok(format!("samples\t{}\nclusters\t{}\n", args.n_samples, args.n_clusters))
}

#[derive(Debug, Clone, Args)]
pub struct BuildMatrixArgs {
    /// Mutation TSV; repeat to concatenate several files. Samples sharing an
    /// id are merged.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Optional labels TSV; only checked against the sample ids.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MIN_FREQ)]
    pub min_freq: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_build_matrix(args: &BuildMatrixArgs) -> CliResult<String> {
    let mut run = Run::start("build-matrix")?;
    let mut profiles = SomaticProfileSet::default();
    let mut duplicates = 0;
    for path in &args.input {
        let bytes = run.read(path)?;
        let (set, stats) = with_file(path, parse_mutation_file(&bytes[..]))?;
        with_file(path, profiles.merge(set))?;
        duplicates += stats.duplicates;
    }
    if let Some(path) = &args.labels {
        let labels = load_labels(&mut run, path)?;
        with_file(path, profiles.set_labels(labels))?;
    }
    let vocab = build_vocabulary(&profiles, args.min_freq)?;
    let matrix = build_matrix(&profiles, &vocab.keys)?;
    run.write(&args.out, &io_bytes(|b| write_matrix(&matrix, b))?)?;
    run.finish(&args.out, json!({ "min_freq": args.min_freq }))?;
    Ok(format!(
        "n\t{}\nm\t{}\nnnz\t{}\nremoved\t{}\nduplicates\t{}\n",
        matrix.n_samples(),
        matrix.n_features(),
        matrix.nnz(),
        vocab.removed,
        duplicates
    ))
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// JSON pipeline config; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON-lines training history to write.
    #[arg(long)]
    pub history: PathBuf,
}

pub fn cmd_train(args: &TrainArgs) -> CliResult<String> {
    let mut run = Run::start("train")?;
    let (mut config, digest) = PipelineConfig::load(args.config.as_deref(), &args.overrides)?;
    run.inputs.extend(digest);
    let matrix = load_matrix(&mut run, &args.matrix)?;
    if config.vae.input_dim == 0 {
        config.vae.input_dim = matrix.n_features();
    }
    let holdout = match config.holdout_fold {
        Some(f) => Some(kfold_split(matrix.n_samples(), config.folds, config.seed)?.folds[f].clone()),
        None => None,
    };
    let (model, history) = train_observed(&matrix, &config.vae, holdout.as_deref(), |_| {})?;
    let mut ckpt = Vec::new();
    write_checkpoint(&model, &mut ckpt)?;
    let mut hist = Vec::new();
    write_history(&history, &mut hist)?;
    run.write(&args.out, &ckpt)?;
    run.write(&args.history, &hist)?;
    run.finish(&args.out, serde_json::to_value(&config).expect("config serializes"))?;

    let mut out = format!("epochs\t{}\n", history.epochs.len());
    if let Some(last) = history.last() {
        out.push_str(&format!("train_recon\t{:.6}\ntrain_kl\t{:.6}\n", last.train_recon, last.train_kl));
        if let (Some(f1), Some(cos)) = (last.val_f1, last.val_cosine) {
            out.push_str(&format!("val_f1\t{f1:.6}\nval_cosine\t{cos:.6}\n"));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Args)]
pub struct CrossValidateArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Metrics JSON to write.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_cross_validate(args: &CrossValidateArgs) -> CliResult<String> {
    let mut run = Run::start("cross-validate")?;
    let (mut config, digest) = PipelineConfig::load(args.config.as_deref(), &args.overrides)?;
    run.inputs.extend(digest);
    let matrix = load_matrix(&mut run, &args.matrix)?;
    if config.vae.input_dim == 0 {
        config.vae.input_dim = matrix.n_features();
    }
    let report = cross_validate(&matrix, &config.vae, config.folds)?;
    run.write(&args.out, &to_json(&report)?)?;
    run.finish(&args.out, serde_json::to_value(&config).expect("config serializes"))?;
    Ok(summary(&report))
}

fn summary(report: &MetricsReport) -> String {
    let mut out = String::new();
    for (name, v) in [
        ("f1", report.f1),
        ("precision", report.precision),
        ("recall", report.recall),
        ("cosine", report.cosine),
        ("nmi_vae", report.nmi_vae),
        ("nmi_pca", report.nmi_pca),
    ] {
        if let Some(v) = v {
            out.push_str(&format!("{name}\t{v:.6}\n"));
        }
    }
    out
}

#[derive(Debug, Clone, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub matrix: PathBuf,
    /// Embeddings TSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_embed(args: &EmbedArgs) -> CliResult<String> {
    let mut run = Run::start("embed")?;
    let model = load_model(&mut run, &args.model)?;
    let matrix = load_matrix(&mut run, &args.matrix)?;
    check_input_dim(&model, &matrix)?;
    let z = embed(&model, &matrix)?;
    let e = Embeddings::new(matrix.sample_ids().to_vec(), z)?;
    run.write(&args.out, &embeddings_bytes(&e)?)?;
    run.finish(&args.out, json!({}))?;
    Ok(format!("samples\t{}\ndims\t{}\n", e.values.rows(), e.values.cols()))
}

fn check_input_dim(model: &VaeModel, matrix: &OccurrenceMatrix) -> CliResult<()> {
    let want = model.config().input_dim;
    if want != matrix.n_features() {
        return Err(CliError::shape(format!(
            "model expects {want} features, matrix has {} (shape {} x {})",
            matrix.n_features(),
            matrix.n_samples(),
            matrix.n_features()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct EvalReconArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub matrix: PathBuf,
    /// Score only this fold of a `--folds`-way split; all rows otherwise.
    #[arg(long)]
    pub holdout_fold: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Metrics JSON to write.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_eval_recon(args: &EvalReconArgs) -> CliResult<String> {
    let mut run = Run::start("eval-recon")?;
    let model = load_model(&mut run, &args.model)?;
    let matrix = load_matrix(&mut run, &args.matrix)?;
    check_input_dim(&model, &matrix)?;
    let rows: Vec<usize> = match args.holdout_fold {
        Some(f) => {
            let plan = kfold_split(matrix.n_samples(), args.folds, args.seed)?;
            plan.folds
                .get(f)
                .cloned()
                .ok_or_else(|| CliError::config(vec![format!("holdout_fold {f} must be < folds ({})", args.folds)]))?
        }
        None => (0..matrix.n_samples()).collect(),
    };
    let s = evaluate_reconstruction(&model, &matrix, &rows)?;
    let report = MetricsReport {
        f1: Some(s.f1),
        precision: Some(s.precision),
        recall: Some(s.recall),
        cosine: Some(s.cosine),
        ..Default::default()
    }
    .with_meta("rows", rows.len());
    run.write(&args.out, &to_json(&report)?)?;
    run.finish(
        &args.out,
        json!({ "holdout_fold": args.holdout_fold, "folds": args.folds, "seed": args.seed }),
    )?;
    Ok(summary(&report))
}

#[derive(Debug, Clone, Args)]
pub struct PcaArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    /// Projection TSV to write (same layout as embeddings).
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_pca(args: &PcaArgs) -> CliResult<String> {
    let mut run = Run::start("pca")?;
    let matrix = load_matrix(&mut run, &args.matrix)?;
    let limit = matrix.n_samples().min(matrix.n_features());
    if args.dims == 0 || args.dims > limit {
        return Err(CliError::shape(format!(
            "pca dims {} outside 1..={limit} for a {} x {} matrix",
            args.dims,
            matrix.n_samples(),
            matrix.n_features()
        )));
    }
    let (pca, z) = pca_project(&matrix.to_dense(), args.dims)?;
    let e = Embeddings::new(matrix.sample_ids().to_vec(), z)?;
    run.write(&args.out, &embeddings_bytes(&e)?)?;
    run.finish(
        &args.out,
        json!({ "dims": args.dims, "explained_variance_ratio": pca.explained_variance_ratio }),
    )?;
    let ratios: Vec<String> = pca.explained_variance_ratio.iter().map(|r| format!("{r:.6}")).collect();
    Ok(format!("explained_variance_ratio\t{}\n", ratios.join("\t")))
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    /// VAE embeddings TSV.
    #[arg(long, required_unless_present = "pca")]
    pub embeddings: Option<PathBuf>,
    /// PCA projection TSV.
    #[arg(long)]
    pub pca: Option<PathBuf>,
    /// Reference labels TSV.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Metrics JSON to write.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_cluster(args: &ClusterArgs) -> CliResult<String> {
    let mut run = Run::start("cluster")?;
    let labels = load_labels(&mut run, &args.labels)?;
    let mut report = MetricsReport::default();
    let mut ids: Option<Vec<String>> = None;
    for (path, slot) in [(&args.embeddings, &mut report.nmi_vae), (&args.pca, &mut report.nmi_pca)] {
        let Some(path) = path else { continue };
        let e = load_embeddings(&mut run, path)?;
        if let Some(prev) = &ids {
            if *prev != e.sample_ids {
                return Err(CliError::shape("embeddings and pca rows list different samples"));
            }
        }
        let n = e.values.rows();
        if args.k == 0 || args.k > n {
            return Err(CliError::shape(format!("k = {} needs 1 <= k <= n, but {} has n = {n}", args.k, path.display())));
        }
        let y = aligned_labels(&e.sample_ids, &labels)?;
        *slot = Some(cluster_nmi(&e.values, &y, args.k, args.seed)?);
        ids = Some(e.sample_ids);
    }
    let report = report.with_meta("k", args.k).with_meta("seed", args.seed);
    run.write(&args.out, &to_json(&report)?)?;
    run.finish(&args.out, json!({ "k": args.k, "seed": args.seed }))?;
    Ok(summary(&report))
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    /// Embeddings TSV used as features.
    #[arg(long, required_unless_present = "matrix", conflicts_with = "matrix")]
    pub features: Option<PathBuf>,
    /// Occurrence matrix whose raw rows are the features.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Binary labels TSV (label 0 or 1).
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = ClassifierParams::default().l2)]
    pub l2: f64,
    #[arg(long, default_value_t = ClassifierParams::default().iterations)]
    pub iterations: usize,
    /// Metrics JSON to write.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_classify(args: &ClassifyArgs) -> CliResult<String> {
    let mut run = Run::start("classify")?;
    let labels = load_labels(&mut run, &args.labels)?;
    let (ids, x): (Vec<String>, Matrix) = match (&args.features, &args.matrix) {
        (Some(path), _) => {
            let e = load_embeddings(&mut run, path)?;
            (e.sample_ids, e.values)
        }
        (None, Some(path)) => {
            let m = load_matrix(&mut run, path)?;
            (m.sample_ids().to_vec(), m.to_dense())
        }
        (None, None) => return Err(CliError::new(EXIT_PARSE, "one of --features or --matrix is required")),
    };
    let y = aligned_labels(&ids, &labels)?
        .into_iter()
        .map(|l| match l {
            "1" => Ok(true),
            "0" => Ok(false),
            other => Err(CliError::new(EXIT_PARSE, format!("label {other:?} is not 0 or 1"))),
        })
        .collect::<CliResult<Vec<bool>>>()?;
    let params = ClassifierParams {
        l2: args.l2,
        iterations: args.iterations,
        folds: args.folds,
        seed: args.seed,
    };
    let r = classify_cv(&x, &y, &params)?;
    let report = MetricsReport {
        f1: Some(r.f1),
        precision: Some(r.precision),
        recall: Some(r.recall),
        per_fold: r
            .per_fold
            .iter()
            .enumerate()
            .map(|(fold, c)| {
                let s = c.scores();
                FoldMetrics {
                    fold,
                    f1: s.f1,
                    precision: s.precision,
                    recall: s.recall,
                    cosine: None,
                }
            })
            .collect(),
        ..Default::default()
    }
    .with_meta("dims", x.cols());
    run.write(&args.out, &to_json(&report)?)?;
    run.finish(&args.out, serde_json::to_value(params).expect("params serialize"))?;
    Ok(summary(&report))
}
