//! The `awe` command-line surface. Every command writes a [`RunManifest`]
//! next to its outputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::awe::{self, AweConfig, AweModel, Mode};
use crate::corpus::{self, FeatureArchive, FeatureMatrix, WordSegment};
use crate::dtw::DtwConfig;
use crate::error::{Error, Result};
use crate::eval::{self, AbxMetric, KMeansConfig, Variant};
use crate::mfcc::{MfccConfig, MfccExtractor};
use crate::synth::{self, SynthConfig};
use crate::train::{self, Optimizer, TrainConfig, TrainSegment};

pub const EMBEDDING_KIND: &str = "awe-embedding";
pub const RUN_MANIFEST: &str = "run.json";
pub const THREADS_ENV: &str = "AWE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "awe", version, about = "Acoustic word embedding toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic toy corpus.
    Synth(SynthArgs),
    /// Extract 39-dimensional MFCC features for every manifest segment.
    Mfcc(MfccArgs),
    /// Build minimal-pair ABX tasks from a manifest.
    Pairs(PairsArgs),
    /// Train an embedding model.
    Train(TrainArgs),
    /// Embed every segment of a feature archive.
    Embed(EmbedArgs),
    /// Score ABX tasks against a feature or embedding archive.
    Abx(AbxArgs),
    /// K-means clustering accuracy of embeddings.
    Cluster(ClusterArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated word types (3 to 10).
    #[arg(long, value_delimiter = ',')]
    pub words: Option<Vec<String>>,
    #[arg(long)]
    pub speakers: Option<usize>,
    #[arg(long)]
    pub tokens: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct MfccArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub audio_root: PathBuf,
    #[arg(long)]
    pub out_archive: PathBuf,
    /// JSON file with MFCC settings; missing keys take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub allow_missing: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantArg {
    Within,
    Across,
    Both,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum triples per contrast pair; 0 keeps all.
    #[arg(long, default_value_t = eval::DEFAULT_CAP_PER_PAIR)]
    pub cap: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    #[value(name = "self")]
    SelfSupervised,
    #[value(name = "super")]
    Supervised,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TargetsArg {
    Chars,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub archive: PathBuf,
    /// Required for supervised training; supplies word labels.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "chars")]
    pub targets: TargetsArg,
    #[arg(long, default_value_t = 100)]
    pub hidden: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, value_enum, default_value = "adam")]
    pub optimizer: OptimizerArg,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Defaults to 1e-3 for Adam and 0.1 for SGD.
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.3)]
    pub dropout: f64,
    #[arg(long, default_value_t = 400)]
    pub max_frames: usize,
    #[arg(long)]
    pub out_model: PathBuf,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub archive: PathBuf,
    #[arg(long)]
    pub out_archive: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Dtw,
    Cosine,
}

#[derive(Debug, Args)]
pub struct AbxArgs {
    #[arg(long)]
    pub tasks: PathBuf,
    /// Feature or embedding archive directory.
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long, value_enum)]
    pub metric: MetricArg,
    #[arg(long)]
    pub out_report: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long)]
    pub out_report: PathBuf,
}

/// Replay record written beside every command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: BTreeMap<String, PathBuf>,
    pub version: String,
}

impl RunManifest {
    fn new(command: &str, config: impl Serialize, seed: Option<u64>) -> Result<Self> {
        Ok(Self {
            command: command.into(),
            config: serde_json::to_value(config).map_err(|e| Error::State(e.to_string()))?,
            seed,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").into(),
        })
    }

    fn input(mut self, name: &str, p: &Path) -> Self {
        self.inputs.insert(name.into(), p.to_path_buf());
        self
    }

    fn output(mut self, name: &str, p: &Path) -> Self {
        self.outputs.insert(name.into(), p.to_path_buf());
        self
    }

    /// Writes `run.json` into a directory output, or `<file>.run.json` next
    /// to a file output.
    pub fn write_for(&self, output: &Path) -> Result<PathBuf> {
        let path = manifest_path(output);
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::State(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    if output.is_dir() {
        output.join(RUN_MANIFEST)
    } else {
        sibling(output, ".run.json")
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p).map_err(|e| Error::io(p, e)),
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Applies the thread-count environment variable to the global pool.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| Error::Argument(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    if n == 0 {
        return Err(Error::Argument(format!("{THREADS_ENV} must be positive")));
    }
    // a second call in the same process (tests) finds the pool already built
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Mfcc(a) => cmd_mfcc(&a),
        Command::Pairs(a) => cmd_pairs(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Embed(a) => cmd_embed(&a),
        Command::Abx(a) => cmd_abx(&a),
        Command::Cluster(a) => cmd_cluster(&a),
    }
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig {
        seed: a.seed,
        ..Default::default()
    };
    if let Some(w) = &a.words {
        cfg.words = w.clone();
    }
    if let Some(s) = a.speakers {
        cfg.speakers = s;
    }
    if let Some(t) = a.tokens {
        cfg.tokens_per_word = t;
    }
    let segs = synth::synthesize(&cfg, &a.out)?;
    log::info!("wrote {} segments to {}", segs.len(), a.out.display());
    RunManifest::new("synth", &cfg, Some(a.seed))?
        .output("corpus", &a.out)
        .output("manifest", &a.out.join(synth::MANIFEST_NAME))
        .write_for(&a.out)?;
    Ok(())
}

fn resolve_audio(root: &Path, rel: &str) -> PathBuf {
    root.join(rel)
}

pub fn cmd_mfcc(a: &MfccArgs) -> Result<()> {
    let cfg: MfccConfig = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: p.clone(),
                line: e.line(),
                msg: e.to_string(),
            })?
        }
        None => MfccConfig::default(),
    };
    let extractor = MfccExtractor::new(cfg.clone())?;
    let segments = corpus::load_manifest(&a.manifest)?;
    let results: Vec<Option<(String, FeatureMatrix)>> = segments
        .par_iter()
        .map(|s| {
            let path = resolve_audio(&a.audio_root, &s.audio_path);
            if !path.is_file() {
                log::warn!("segment {:?}: audio {} not found, skipped", s.segment_id, path.display());
                return Ok(None);
            }
            let samples = corpus::read_wav_segment(&path, s.start_s, s.end_s)?;
            let m = extractor.extract(&samples).map_err(|e| match e {
                Error::TooShort(m) => Error::TooShort(format!("segment {:?}: {m}", s.segment_id)),
                other => other,
            })?;
            Ok(Some((s.segment_id.clone(), m)))
        })
        .collect::<Result<_>>()?;
    let skipped = results.iter().filter(|r| r.is_none()).count();
    let entries: BTreeMap<String, FeatureMatrix> = results.into_iter().flatten().collect();
    if entries.is_empty() {
        return Err(Error::Argument("no segment had readable audio".into()));
    }
    corpus::write_archive(&entries, &a.out_archive)?;
    RunManifest::new("mfcc", serde_json::json!({ "mfcc": cfg, "allow_missing": a.allow_missing }), None)?
        .input("manifest", &a.manifest)
        .input("audio_root", &a.audio_root)
        .output("archive", &a.out_archive)
        .write_for(&a.out_archive)?;
    if skipped > 0 && !a.allow_missing {
        return Err(Error::Argument(format!(
            "{skipped} segment(s) skipped for missing audio; pass --allow-missing to accept"
        )));
    }
    Ok(())
}

pub fn cmd_pairs(a: &PairsArgs) -> Result<()> {
    let segments = corpus::load_manifest(&a.manifest)?;
    let cap = (a.cap > 0).then_some(a.cap);
    let variants: &[Variant] = match a.variant {
        VariantArg::Within => &[Variant::WithinSpeaker],
        VariantArg::Across => &[Variant::AcrossSpeaker],
        VariantArg::Both => &[Variant::WithinSpeaker, Variant::AcrossSpeaker],
    };
    let mut triples = Vec::new();
    let mut summary = BTreeMap::new();
    for &v in variants {
        let t = eval::build_abx_tasks(&segments, v, a.seed, cap);
        log::info!(
            "{}: {} triples from {} contrast pairs ({} skipped)",
            v.as_str(),
            t.triples.len(),
            t.contrast_pairs,
            t.skipped_pairs
        );
        summary.insert(v.as_str(), (t.triples.len(), t.contrast_pairs, t.skipped_pairs));
        triples.extend(t.triples);
    }
    if triples.is_empty() {
        log::warn!("no ABX triples could be formed; writing an empty task file");
    }
    ensure_parent(&a.out)?;
    eval::write_tasks(&a.out, &triples)?;
    RunManifest::new(
        "pairs",
        serde_json::json!({ "variant": a.variant, "cap": a.cap, "counts": summary }),
        Some(a.seed),
    )?
    .input("manifest", &a.manifest)
    .output("tasks", &a.out)
    .write_for(&a.out)?;
    Ok(())
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let archive = corpus::read_archive(&a.archive)?;
    if archive.is_empty() {
        return Err(Error::Argument("feature archive is empty".into()));
    }
    if archive.feature_kind() == Some(EMBEDDING_KIND) {
        return Err(Error::Argument("training needs frame features, not embeddings".into()));
    }
    let words: Option<BTreeMap<String, String>> = match &a.manifest {
        Some(p) => Some(
            corpus::load_manifest(p)?
                .into_iter()
                .map(|s| (s.segment_id, s.word))
                .collect(),
        ),
        None => None,
    };
    let mode = match a.mode {
        ModeArg::SelfSupervised => Mode::SelfSupervised,
        ModeArg::Supervised => Mode::Supervised,
    };
    let ids: Vec<&String> = archive.ids().collect();
    let targets: Option<Vec<String>> = match mode {
        Mode::SelfSupervised => None,
        Mode::Supervised => {
            let TargetsArg::Chars = a.targets;
            let words = words.as_ref().ok_or_else(|| {
                Error::Argument("supervised training needs --manifest for word labels".into())
            })?;
            let labels = ids
                .iter()
                .map(|id| {
                    words.get(*id).cloned().ok_or_else(|| {
                        Error::Argument(format!("segment {id:?} has no word label in the manifest"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(labels)
        }
    };
    let mut config = match &targets {
        None => AweConfig::self_supervised(archive.dim()),
        Some(labels) => AweConfig::supervised(archive.dim(), awe::char_vocab(labels)),
    };
    config.hidden = a.hidden;
    config.encoder_layers = a.layers;
    config.dropout_p = a.dropout;
    config.max_frames = a.max_frames;

    let mut tc = match a.optimizer {
        OptimizerArg::Adam => TrainConfig::default(),
        OptimizerArg::Sgd => TrainConfig::sgd(),
    };
    tc.optimizer = match a.optimizer {
        OptimizerArg::Adam => Optimizer::Adam,
        OptimizerArg::Sgd => Optimizer::Sgd,
    };
    if let Some(lr) = a.lr {
        tc.lr = lr;
    }
    tc.epochs = a.epochs;
    tc.seed = a.seed;
    tc.batch_size = a.batch_size;

    let segments: Vec<TrainSegment> = ids
        .iter()
        .enumerate()
        .map(|(k, id)| {
            Ok(TrainSegment {
                features: archive.get(id)?.clone(),
                target: targets.as_ref().map(|t| awe::char_targets(&t[k])),
            })
        })
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let model = AweModel::new(config.clone(), &mut rng)?;
    let outcome = train::train(model, &segments, &tc)?;
    for &k in &outcome.skipped {
        log::warn!("segment {:?} skipped: longer than {} frames", ids[k], config.max_frames);
    }
    if let (Some(first), Some(last)) = (outcome.log.first(), outcome.log.last()) {
        log::info!(
            "loss {:.6} -> {:.6}; keeping epoch {}",
            first.mean_loss,
            last.mean_loss,
            outcome.best_epoch
        );
    }
    ensure_parent(&a.out_model)?;
    outcome.model.save_checkpoint(&a.out_model)?;
    let loss_log = sibling(&a.out_model, ".loss.tsv");
    train::write_loss_log(&loss_log, &outcome.log)?;
    let mut manifest = RunManifest::new(
        "train",
        serde_json::json!({ "model": config, "train": tc, "best_epoch": outcome.best_epoch }),
        Some(a.seed),
    )?
    .input("archive", &a.archive)
    .output("model", &a.out_model)
    .output("loss_log", &loss_log);
    if let Some(m) = &a.manifest {
        manifest = manifest.input("manifest", m);
    }
    manifest.write_for(&a.out_model)?;
    Ok(())
}

/// Embeds every archive entry with `model`.
pub fn embed_archive(model: &AweModel, archive: &FeatureArchive) -> Result<BTreeMap<String, FeatureMatrix>> {
    let ids: Vec<&String> = archive.ids().collect();
    let rows: Vec<(String, FeatureMatrix)> = ids
        .par_iter()
        .map(|id| {
            let v = model.embed(archive.get(id)?)?;
            let data: Vec<f32> = v.iter().map(|&x| x as f32).collect();
            Ok(((*id).clone(), FeatureMatrix::new(1, data.len(), data, 0.0, EMBEDDING_KIND)?))
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().collect())
}

pub fn cmd_embed(a: &EmbedArgs) -> Result<()> {
    let model = AweModel::load_checkpoint(&a.model)?;
    let archive = corpus::read_archive(&a.archive)?;
    if archive.feature_kind() == Some(EMBEDDING_KIND) {
        return Err(Error::Argument("input archive already holds embeddings".into()));
    }
    let entries = embed_archive(&model, &archive)?;
    corpus::write_archive(&entries, &a.out_archive)?;
    RunManifest::new("embed", &model.config, None)?
        .input("model", &a.model)
        .input("archive", &a.archive)
        .output("archive", &a.out_archive)
        .write_for(&a.out_archive)?;
    Ok(())
}

pub fn cmd_abx(a: &AbxArgs) -> Result<()> {
    let triples = eval::read_tasks(&a.tasks)?;
    let archive = corpus::read_archive(&a.source)?;
    let is_embedding = archive.feature_kind() == Some(EMBEDDING_KIND);
    let metric = match a.metric {
        MetricArg::Dtw if is_embedding => {
            return Err(Error::Argument("dtw needs frame features; the source holds embeddings".into()))
        }
        MetricArg::Dtw => AbxMetric::Dtw(DtwConfig::default()),
        MetricArg::Cosine => AbxMetric::Cosine,
    };
    let report = eval::score_abx_archive(&triples, &archive, metric)?;
    write_text(&a.out_report, &report.to_tsv())?;
    let label = format!("{} / {}", archive.feature_kind().unwrap_or("?"), metric_name(a.metric));
    let table = eval::render_abx_table(&[(&label, &report)]);
    let table_path = sibling(&a.out_report, ".txt");
    write_text(&table_path, &table)?;
    print!("{table}");
    RunManifest::new("abx", serde_json::json!({ "metric": metric_name(a.metric) }), None)?
        .input("tasks", &a.tasks)
        .input("source", &a.source)
        .output("report", &a.out_report)
        .output("table", &table_path)
        .write_for(&a.out_report)?;
    Ok(())
}

fn metric_name(m: MetricArg) -> &'static str {
    match m {
        MetricArg::Dtw => "dtw",
        MetricArg::Cosine => "cosine",
    }
}

pub fn cmd_cluster(a: &ClusterArgs) -> Result<()> {
    let archive = corpus::read_archive(&a.embeddings)?;
    if archive.iter().any(|(_, m)| m.rows() != 1) {
        return Err(Error::Argument("clustering needs one vector per segment".into()));
    }
    let words: BTreeMap<String, String> = corpus::load_manifest(&a.manifest)?
        .into_iter()
        .map(|s: WordSegment| (s.segment_id, s.word))
        .collect();
    let mut points = Vec::with_capacity(archive.len());
    let mut labels = Vec::with_capacity(archive.len());
    for (id, m) in archive.iter() {
        let w = words
            .get(id)
            .ok_or_else(|| Error::Argument(format!("segment {id:?} is missing from the manifest")))?;
        points.push(m.row(0).iter().map(|&x| x as f64).collect::<Vec<f64>>());
        labels.push(w.as_str());
    }
    let k = labels.iter().collect::<BTreeSet<_>>().len();
    log::info!("clustering {} embeddings into k = {k} word clusters", points.len());
    let cfg = KMeansConfig {
        restarts: a.restarts,
        ..Default::default()
    };
    let report = eval::cluster_words(&points, &labels, a.seed, &cfg)?;
    write_text(&a.out_report, &report.to_tsv())?;
    let table_path = sibling(&a.out_report, ".txt");
    let table = eval::ClusterReport::render_table(&[(EMBEDDING_KIND, &report)]);
    write_text(&table_path, &table)?;
    print!("{table}");
    RunManifest::new("cluster", cfg, Some(a.seed))?
        .input("embeddings", &a.embeddings)
        .input("manifest", &a.manifest)
        .output("report", &a.out_report)
        .output("table", &table_path)
        .write_for(&a.out_report)?;
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
