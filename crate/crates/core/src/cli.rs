//! Command-line pipeline. Every command reads and writes files, takes an
//! explicit seed (falling back to `FREQLENS_SEED`, then 0) and leaves a
//! `<artifact>.meta.json` sidecar describing how the artifact was made.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bias_audit::{
    bias_experiment, filter_targets, load_norms, AuditedCorpus, BootstrapConfig, ContextGroups,
};
use crate::corpus::{build_vocab, preprocess_reader, resample, shuffle_tokens, Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::freq_analysis::{
    assign_bins, pca_stratified, read_rmse_csv, regress_rmse, similarity_heatmap, write_rmse_csv,
    RmseResult, RmseRow,
};
use crate::store::{combine_w_plus_c, EmbeddingSet, Format, Metric};
use crate::train::{enumerate_grid_from, train, Hyperparams, Method, NoSnapshots, Snapshot};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A validated invocation.
#[derive(Debug, Clone, Parser)]
#[command(
    name = "freqlens",
    version,
    about = "Frequency effects in static word embeddings"
)]
pub struct RunPlan {
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "FREQLENS_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Training threads; more than 1 gives up bit-reproducibility.
    #[arg(long, global = true, default_value_t = 1, value_parser = parse_positive)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,

    #[arg(skip)]
    pub argv: Vec<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Normalize raw text (blank-line separated documents) into one
    /// sentence per line.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Drop documents with fewer tokens.
        #[arg(long, default_value_t = 0)]
        min_doc_tokens: usize,
        /// Also write the vocabulary TSV.
        #[arg(long)]
        vocab_out: Option<PathBuf>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        min_count: u64,
    },
    /// Shuffle all tokens across the corpus, keeping sentence lengths.
    Shuffle {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Under- or oversample the sentences containing a word.
    Resample {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        word: String,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        target: u64,
        #[arg(long)]
        out: PathBuf,
        /// JSON report path.
        #[arg(long)]
        report: PathBuf,
        /// Words whose count changes are reported.
        #[arg(long, value_delimiter = ',')]
        watch: Vec<String>,
    },
    /// Train one embedding set.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        hp: HyperArgs,
        #[arg(long)]
        out: PathBuf,
        /// Vocabulary TSV written alongside; defaults to `<out>.vocab.tsv`.
        #[arg(long)]
        vocab_out: Option<PathBuf>,
        #[arg(long, default_value = "binary", value_parser = parse_format)]
        format: Format,
        /// Directory receiving one embedding file per epoch.
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Train every grid setting of a method into `<out-dir>/<setting-id>/`.
    Grid {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        hp: HyperArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Frequency-binned similarity heatmap.
    Heatmap {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value = "cosine", value_parser = parse_metric)]
        metric: Metric,
        /// Pairs per bin combination.
        #[arg(long, default_value_t = 500, value_parser = parse_positive)]
        pairs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Heatmap RMSE against a permutation baseline, for one embedding set
    /// or every setting under a grid directory.
    Rmse {
        #[arg(long, conflicts_with = "grid_dir", requires = "vocab")]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Label for a single embedding set.
        #[arg(long, default_value = "embeddings")]
        setting_id: String,
        #[arg(long, required_unless_present = "embeddings")]
        grid_dir: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values = ["cosine", "neg_euclidean"], value_parser = parse_metric)]
        metrics: Vec<Metric>,
        #[arg(long, default_value_t = 500, value_parser = parse_positive)]
        pairs: usize,
        #[arg(long, default_value_t = 200, value_parser = parse_positive)]
        permutations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Frequency-stratified PCA of normalized vectors.
    Pca {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long, default_value_t = 100, value_parser = parse_positive)]
        words_per_bin: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bias scores of normed target words across corpora.
    Bias {
        /// One embedding file per corpus.
        #[arg(long, value_delimiter = ',', required = true)]
        embeddings: Vec<PathBuf>,
        /// One vocabulary per corpus, same order.
        #[arg(long, value_delimiter = ',', required = true)]
        vocabs: Vec<PathBuf>,
        /// Corpus labels; default to the embedding file stems.
        #[arg(long, value_delimiter = ',')]
        corpus_ids: Vec<String>,
        /// Norms CSV `word,gender_norm,is_homonym`.
        #[arg(long)]
        norms: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<String>,
        #[arg(long, default_value = "gender")]
        label: String,
        #[arg(long, default_value_t = 1000, value_parser = parse_positive)]
        resamples: usize,
        #[arg(long, default_value_t = 0.95, value_parser = parse_level)]
        level: f64,
        /// Per-word rows.
        #[arg(long)]
        out: PathBuf,
        /// Per-bin aggregates.
        #[arg(long)]
        aggregates_out: PathBuf,
    },
    /// Regress grid RMSE values on the hyperparameters.
    Regress {
        #[arg(long)]
        rmse: PathBuf,
        #[arg(long, default_value = "cosine", value_parser = parse_metric)]
        metric: Metric,
        #[arg(long)]
        out: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Preprocess { .. } => "preprocess",
            Command::Shuffle { .. } => "shuffle",
            Command::Resample { .. } => "resample",
            Command::Train { .. } => "train",
            Command::Grid { .. } => "grid",
            Command::Heatmap { .. } => "heatmap",
            Command::Rmse { .. } => "rmse",
            Command::Pca { .. } => "pca",
            Command::Bias { .. } => "bias",
            Command::Regress { .. } => "regress",
        }
    }
}

/// Training flags. Unset values take the desk-scale defaults of the method.
#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    #[arg(long, default_value = "sgns", value_parser = parse_method)]
    pub method: Method,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    /// Negative samples per positive pair.
    #[arg(long)]
    pub neg: Option<usize>,
    /// Context-distribution smoothing exponent.
    #[arg(long)]
    pub cds: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Analyze `W + C` instead of `W`.
    #[arg(long, value_parser = parse_yes_no)]
    pub wc: Option<bool>,
    #[arg(long)]
    pub min_count: Option<u64>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Subsampling threshold; 0 disables.
    #[arg(long)]
    pub subsample: Option<f64>,
    /// FastText hash buckets.
    #[arg(long)]
    pub buckets: Option<usize>,
    /// Start from the full-scale defaults instead of the desk-scale ones.
    #[arg(long)]
    pub full_scale: bool,
}

impl HyperArgs {
    pub fn to_hyperparams(&self, seed: u64, workers: usize) -> Result<Hyperparams> {
        let mut hp = if self.full_scale {
            Hyperparams::full_scale(self.method)
        } else {
            Hyperparams::desk(self.method)
        };
        hp.seed = seed;
        hp.workers = workers;
        if let Some(v) = self.dim {
            hp.dim = v;
        }
        if let Some(v) = self.window {
            hp.window = v;
        }
        if let Some(v) = self.neg {
            hp.negatives = v;
        }
        if let Some(v) = self.cds {
            hp.cds_exponent = v;
        }
        if let Some(v) = self.epochs {
            hp.epochs = v;
        }
        if let Some(v) = self.wc {
            hp.add_context = v;
        }
        if let Some(v) = self.min_count {
            hp.min_count = v;
        }
        if let Some(v) = self.lr {
            hp.learning_rate = v;
            hp.min_learning_rate = hp.min_learning_rate.min(v);
        }
        if let Some(v) = self.subsample {
            hp.subsample = (v != 0.0).then_some(v);
        }
        if let Some(v) = self.buckets {
            hp.buckets = v;
        }
        hp.validate()?;
        if hp.min_count == 0 {
            return Err(Error::OutOfRange {
                name: "min_count",
                value: "0".into(),
                expected: "min_count >= 1",
            });
        }
        Ok(hp)
    }
}

fn parse_positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_level(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s
        .parse()
        .map_err(|e: std::num::ParseFloatError| e.to_string())?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err("must lie strictly between 0 and 1".into())
    }
}

fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    s.parse::<Metric>()
        .map_err(|_| "expected one of {cosine, neg_euclidean}".into())
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse::<Method>()
        .map_err(|_| "expected one of {sgns, glove, fasttext}".into())
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    match s {
        "binary" => Ok(Format::Binary),
        "text" => Ok(Format::Text),
        _ => Err("expected one of {binary, text}".into()),
    }
}

fn parse_yes_no(s: &str) -> std::result::Result<bool, String> {
    match s {
        "yes" => Ok(true),
        "no" => Ok(false),
        _ => Err("expected yes or no".into()),
    }
}

/// Parses and validates `argv` (program name first). Out-of-range training
/// values are reported as usage errors.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunPlan, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let mut plan = RunPlan::try_parse_from(&argv)?;
    plan.argv = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    if let Command::Train { hp, .. } | Command::Grid { hp, .. } = &plan.command {
        if let Err(e) = hp.to_hyperparams(plan.seed, plan.workers) {
            let mut cmd = RunPlan::command();
            return Err(cmd.error(ErrorKind::ValueValidation, e.to_string()));
        }
    }
    Ok(plan)
}

/// Parses, runs and maps the outcome to a process exit status: 0 on
/// success, 2 for usage errors, 1 for failures while running.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv) {
        Ok(plan) => run(&plan),
        Err(e) => {
            let _ = e.print();
            e.exit_code()
        }
    }
}

/// Executes a plan; errors go to stderr.
pub fn run(plan: &RunPlan) -> i32 {
    match execute(plan) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    argv: &'a [String],
    seed: u64,
    workers: usize,
    /// sha256 of every input file, keyed by path.
    inputs: BTreeMap<String, String>,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    hyperparams: Option<&'a Hyperparams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    setting_id: Option<&'a str>,
}

struct Ctx<'a> {
    plan: &'a RunPlan,
    inputs: BTreeMap<String, String>,
}

impl<'a> Ctx<'a> {
    fn input(&mut self, path: &Path) -> Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    fn meta(
        &self,
        artifact: &Path,
        hp: Option<&Hyperparams>,
        setting_id: Option<&str>,
    ) -> Result<()> {
        let meta = Meta {
            command: self.plan.command.name(),
            argv: &self.plan.argv,
            seed: self.plan.seed,
            workers: self.plan.workers,
            inputs: self.inputs.clone(),
            version: VERSION,
            hyperparams: hp,
            setting_id,
        };
        let mut name = artifact.as_os_str().to_owned();
        name.push(".meta.json");
        let mut out = BufWriter::new(File::create(PathBuf::from(name))?);
        serde_json::to_writer_pretty(&mut out, &meta)?;
        writeln!(out)?;
        out.flush()?;
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = BufReader::new(File::open(path)?);
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    Corpus::read_from(BufReader::new(File::open(path)?))
}

fn read_vocab(path: &Path) -> Result<Vocabulary> {
    Vocabulary::read_tsv(File::open(path)?)
}

fn load_aligned(
    ctx: &mut Ctx<'_>,
    embeddings: &Path,
    vocab: &Path,
) -> Result<(EmbeddingSet, Vocabulary)> {
    ctx.input(embeddings)?;
    ctx.input(vocab)?;
    let set = EmbeddingSet::restore(embeddings)?;
    let vocab = read_vocab(vocab)?;
    set.check_aligned(&vocab)?;
    Ok((set, vocab))
}

fn execute(plan: &RunPlan) -> Result<()> {
    let mut ctx = Ctx {
        plan,
        inputs: BTreeMap::new(),
    };
    let seed = plan.seed;
    match &plan.command {
        Command::Preprocess {
            input,
            out,
            min_doc_tokens,
            vocab_out,
            min_count,
        } => {
            ctx.input(input)?;
            let corpus = preprocess_reader(BufReader::new(File::open(input)?), *min_doc_tokens)?;
            corpus.write_to(create(out)?)?;
            ctx.meta(out, None, None)?;
            if let Some(v) = vocab_out {
                build_vocab(&corpus, *min_count).write_tsv(create(v)?)?;
                ctx.meta(v, None, None)?;
            }
            log::info!(
                "{} sentences, {} tokens",
                corpus.num_sentences(),
                corpus.token_count()
            );
        }
        Command::Shuffle { corpus, out } => {
            ctx.input(corpus)?;
            let shuffled = shuffle_tokens(&read_corpus(corpus)?, seed)?;
            shuffled.write_to(create(out)?)?;
            ctx.meta(out, None, None)?;
        }
        Command::Resample {
            corpus,
            word,
            target,
            out,
            report,
            watch,
        } => {
            ctx.input(corpus)?;
            let watch: Vec<&str> = watch.iter().map(String::as_str).collect();
            let (resampled, rep) = resample(&read_corpus(corpus)?, word, *target, seed, &watch)?;
            resampled.write_to(create(out)?)?;
            ctx.meta(out, None, None)?;
            let mut w = create(report)?;
            serde_json::to_writer_pretty(&mut w, &rep)?;
            writeln!(w)?;
            w.flush()?;
            ctx.meta(report, None, None)?;
        }
        Command::Train {
            corpus,
            hp,
            out,
            vocab_out,
            format,
            snapshots,
        } => {
            ctx.input(corpus)?;
            let hp = hp.to_hyperparams(seed, plan.workers)?;
            let corpus = read_corpus(corpus)?;
            let vocab = build_vocab(&corpus, hp.min_count);
            if vocab.is_empty() {
                return Err(Error::Empty("vocabulary after min_count filtering"));
            }
            let vocab_path = vocab_out.clone().unwrap_or_else(|| {
                let mut p = out.as_os_str().to_owned();
                p.push(".vocab.tsv");
                PathBuf::from(p)
            });
            vocab.write_tsv(create(&vocab_path)?)?;
            ctx.meta(&vocab_path, Some(&hp), None)?;
            let set = match snapshots {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    let mut failure = None;
                    let mut sink = |s: &Snapshot<'_>| {
                        let path = dir.join(format!("epoch_{}.bin", s.epoch));
                        let r = s
                            .to_set(vocab.lexicon().clone(), &hp)
                            .and_then(|set| set.persist(&path, Format::Binary))
                            .and_then(|_| ctx.meta(&path, Some(&hp), None));
                        if let Err(e) = r {
                            failure.get_or_insert(e);
                        }
                    };
                    let set = train(&corpus, &vocab, &hp, &mut sink)?;
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    set
                }
                None => train(&corpus, &vocab, &hp, &mut NoSnapshots)?,
            };
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            set.persist(out, *format)?;
            ctx.meta(out, Some(&hp), None)?;
        }
        Command::Grid {
            corpus,
            hp,
            out_dir,
        } => {
            ctx.input(corpus)?;
            let base = hp.to_hyperparams(seed, plan.workers)?;
            let corpus = read_corpus(corpus)?;
            let vocab = build_vocab(&corpus, base.min_count);
            if vocab.is_empty() {
                return Err(Error::Empty("vocabulary after min_count filtering"));
            }
            // w+c variants reuse the model trained without it
            let mut trained: BTreeMap<String, EmbeddingSet> = BTreeMap::new();
            for setting in enumerate_grid_from(&base, base.method) {
                let plain = Hyperparams {
                    add_context: false,
                    ..setting.hyperparams.clone()
                };
                let key = plain.setting_id();
                if !trained.contains_key(&key) {
                    log::info!("training {key}");
                    trained.insert(
                        key.clone(),
                        train(&corpus, &vocab, &plain, &mut NoSnapshots)?,
                    );
                }
                let set = if setting.hyperparams.add_context {
                    combine_w_plus_c(&trained[&key])?
                } else {
                    trained[&key].clone()
                };
                let dir = out_dir.join(&setting.id);
                fs::create_dir_all(&dir)?;
                let (emb, voc) = (dir.join("embeddings.bin"), dir.join("vocab.tsv"));
                set.persist(&emb, Format::Binary)?;
                ctx.meta(&emb, Some(&setting.hyperparams), Some(&setting.id))?;
                vocab.write_tsv(create(&voc)?)?;
                ctx.meta(&voc, Some(&setting.hyperparams), Some(&setting.id))?;
            }
        }
        Command::Heatmap {
            embeddings,
            vocab,
            metric,
            pairs,
            out,
        } => {
            let (set, vocab) = load_aligned(&mut ctx, embeddings, vocab)?;
            let h = similarity_heatmap(&set, &vocab, *metric, *pairs, seed)?;
            h.write_csv(create(out)?)?;
            ctx.meta(out, None, None)?;
        }
        Command::Rmse {
            embeddings,
            vocab,
            setting_id,
            grid_dir,
            metrics,
            pairs,
            permutations,
            out,
        } => {
            let mut sources: Vec<(String, PathBuf, PathBuf)> = Vec::new();
            if let (Some(e), Some(v)) = (embeddings, vocab) {
                sources.push((setting_id.clone(), e.clone(), v.clone()));
            }
            if let Some(dir) = grid_dir {
                let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
                    .map(|e| e.map(|e| e.path()))
                    .collect::<std::io::Result<_>>()?;
                entries.sort();
                for d in entries
                    .into_iter()
                    .filter(|d| d.join("embeddings.bin").is_file())
                {
                    let id = d
                        .file_name()
                        .unwrap_or_default()
                        .to_string_lossy()
                        .into_owned();
                    sources.push((id, d.join("embeddings.bin"), d.join("vocab.tsv")));
                }
                if sources.is_empty() {
                    return Err(Error::Empty("grid directory has no embeddings"));
                }
            }
            let mut rows: Vec<RmseRow> = Vec::new();
            for (id, e, v) in &sources {
                let (set, vocab) = load_aligned(&mut ctx, e, v)?;
                for &m in metrics {
                    let h = similarity_heatmap(&set, &vocab, m, *pairs, seed)?;
                    rows.push(RmseResult::compute(id, &h, *permutations, seed)?.summary());
                }
            }
            write_rmse_csv(&rows, create(out)?)?;
            ctx.meta(out, None, None)?;
        }
        Command::Pca {
            embeddings,
            vocab,
            words_per_bin,
            out,
        } => {
            let (set, vocab) = load_aligned(&mut ctx, embeddings, vocab)?;
            let p = pca_stratified(&set, &assign_bins(&vocab)?, *words_per_bin, seed)?;
            p.write_csv(create(out)?)?;
            ctx.meta(out, None, None)?;
        }
        Command::Bias {
            embeddings,
            vocabs,
            corpus_ids,
            norms,
            a,
            b,
            label,
            resamples,
            level,
            out,
            aggregates_out,
        } => {
            if embeddings.len() != vocabs.len() {
                return Err(Error::Config(format!(
                    "{} embedding files but {} vocabularies",
                    embeddings.len(),
                    vocabs.len()
                )));
            }
            let ids: Vec<String> = if corpus_ids.is_empty() {
                embeddings
                    .iter()
                    .map(|p| {
                        p.file_stem()
                            .unwrap_or_default()
                            .to_string_lossy()
                            .into_owned()
                    })
                    .collect()
            } else if corpus_ids.len() == embeddings.len() {
                corpus_ids.clone()
            } else {
                return Err(Error::Config(
                    "--corpus-ids must name every embedding file".into(),
                ));
            };
            ctx.input(norms)?;
            let mut loaded = Vec::new();
            for (e, v) in embeddings.iter().zip(vocabs) {
                loaded.push(load_aligned(&mut ctx, e, v)?);
            }
            let binnings = loaded
                .iter()
                .map(|(_, v)| assign_bins(v))
                .collect::<Result<Vec<_>>>()?;
            let vocab_refs: Vec<&Vocabulary> = loaded.iter().map(|(_, v)| v).collect();
            let bin_refs: Vec<_> = binnings.iter().collect();
            let groups = ContextGroups::new(label.clone(), a.clone(), b.clone())?;
            let targets = filter_targets(&load_norms(norms)?, &vocab_refs, &bin_refs)?;
            let targets: Vec<_> = targets
                .into_iter()
                .filter(|t| !groups.a().contains(&t.word) && !groups.b().contains(&t.word))
                .collect();
            log::info!("{} target words pass the filter", targets.len());
            let audited: Vec<AuditedCorpus<'_>> = loaded
                .iter()
                .zip(&ids)
                .map(|((s, v), id)| AuditedCorpus {
                    id,
                    set: s,
                    vocab: v,
                })
                .collect();
            let cfg = BootstrapConfig {
                n_resamples: *resamples,
                level: *level,
                seed,
            };
            let report = bias_experiment(&audited, &targets, &groups, &cfg)?;
            report.write_rows_csv(create(out)?)?;
            ctx.meta(out, None, None)?;
            report.write_aggregates_csv(create(aggregates_out)?)?;
            ctx.meta(aggregates_out, None, None)?;
        }
        Command::Regress { rmse, metric, out } => {
            ctx.input(rmse)?;
            let rows = read_rmse_csv(File::open(rmse)?)?;
            let fit = regress_rmse(&rows, *metric)?;
            fit.write_csv(create(out)?)?;
            ctx.meta(out, None, None)?;
            log::info!("n = {}, r² = {:.4}", fit.n_observations, fit.r_squared);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &str) -> std::result::Result<RunPlan, clap::Error> {
        parse_args(std::iter::once("freqlens").chain(args.split_whitespace()))
    }

    #[test]
    fn heatmap_plan() {
        let p = parse("heatmap --embeddings e.bin --vocab v.tsv --metric cosine --pairs 500 --seed 7 --out h.csv").unwrap();
        assert_eq!(p.seed, 7);
        match p.command {
            Command::Heatmap { pairs, metric, .. } => {
                assert_eq!(pairs, 500);
                assert_eq!(metric, Metric::Cosine);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_metric_lists_choices() {
        let e = parse("heatmap --embeddings e --vocab v --metric manhattan --out h").unwrap_err();
        let msg = e.to_string();
        assert!(
            msg.contains("cosine") && msg.contains("neg_euclidean"),
            "{msg}"
        );
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn zero_negatives_is_range_error() {
        let e = parse("train --corpus c --method sgns --neg 0 --out e").unwrap_err();
        assert!(e.to_string().contains("neg"), "{e}");
        assert_ne!(e.exit_code(), 0);
    }

    #[test]
    fn unknown_flag_and_missing_path() {
        assert!(parse("shuffle --corpus c --out o --bogus 1").is_err());
        assert!(parse("shuffle --corpus c").is_err());
        assert!(parse("pca --embeddings e --vocab v --words-per-bin 0 --out p").is_err());
    }

    #[test]
    fn hyperparams_from_flags() {
        let p = parse("train --corpus c --method glove --window 5 --wc yes --subsample 0 --out e")
            .unwrap();
        let Command::Train { hp, .. } = p.command else {
            panic!()
        };
        let hp = hp.to_hyperparams(3, 1).unwrap();
        assert_eq!(hp.setting_id(), "glove_win5_wcyes");
        assert_eq!(hp.subsample, None);
        assert_eq!(hp.seed, 3);
    }
}
