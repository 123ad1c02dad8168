//! Embedding trainers: skip-gram with negative sampling, its subword
//! (FastText) variant, and GloVe.
//!
//! All trainers run in a deterministic single-worker mode by default. With
//! `workers > 1` the skip-gram trainers switch to lock-free asynchronous SGD
//! over shared parameters, which gives up bit-reproducibility.

mod glove;
mod params;
mod sgns;
mod subword;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Lexicon, Vocabulary};
use crate::error::{Error, Result};
use crate::store::{EmbeddingSet, Matrix};

pub use glove::{
    build_cooccurrence, glove_objective, glove_weight, train_glove, train_glove_params,
    CooccurrenceTable, GloveParams,
};
pub use sgns::{
    fasttext_pair_loss_grad, keep_probabilities, sgns_pair_loss_grad, train_fasttext, train_sgns,
    Label, NegativeSampler, PairGrad,
};
pub use subword::{char_ngrams, fnv1a_32, subword_rows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sgns,
    Glove,
    Fasttext,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Sgns, Method::Glove, Method::Fasttext];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sgns => "sgns",
            Method::Glove => "glove",
            Method::Fasttext => "fasttext",
        }
    }

    /// SGNS and FastText sample negatives; GloVe does not.
    pub fn uses_negatives(self) -> bool {
        !matches!(self, Method::Glove)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgns" => Ok(Method::Sgns),
            "glove" => Ok(Method::Glove),
            "fasttext" => Ok(Method::Fasttext),
            _ => Err(Error::Config(format!(
                "unknown method {s:?}; expected one of sgns, glove, fasttext"
            ))),
        }
    }
}

/// Training configuration shared by all methods. Fields a method does not
/// use are ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub method: Method,
    pub dim: usize,
    pub window: usize,
    /// `w+c`: analyze target plus context vectors.
    pub add_context: bool,
    pub negatives: usize,
    pub cds_exponent: f64,
    /// Passes over the corpus (SGNS, FastText) or over the co-occurrence
    /// table (GloVe).
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f64,
    /// Floor of the linearly decayed SGD learning rate.
    pub min_learning_rate: f64,
    pub min_count: u64,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub buckets: usize,
    /// Frequent-word subsampling threshold; `None` disables subsampling.
    pub subsample: Option<f64>,
    pub x_max: f64,
    pub alpha: f64,
    pub workers: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self::desk(Method::Sgns)
    }
}

impl Hyperparams {
    /// Laptop-sized defaults: 50 dimensions, min count 10, 100k buckets.
    pub fn desk(method: Method) -> Self {
        let glove = method == Method::Glove;
        Self {
            method,
            dim: 50,
            window: 10,
            add_context: false,
            negatives: 5,
            cds_exponent: 0.75,
            epochs: if glove { 15 } else { 5 },
            seed: 1,
            learning_rate: if glove { 0.05 } else { 0.025 },
            min_learning_rate: 0.0001,
            min_count: 10,
            ngram_min: 3,
            ngram_max: 6,
            buckets: 100_000,
            subsample: Some(1e-3),
            x_max: 100.0,
            alpha: 0.75,
            workers: 1,
        }
    }

    /// Full-scale defaults: 300 dimensions, min count 100, 2M buckets.
    pub fn full_scale(method: Method) -> Self {
        Self {
            dim: 300,
            min_count: 100,
            buckets: 2_000_000,
            ..Self::desk(method)
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn check(
            ok: bool,
            name: &'static str,
            value: impl ToString,
            expected: &'static str,
        ) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::OutOfRange {
                    name,
                    value: value.to_string(),
                    expected,
                })
            }
        }
        check(self.dim >= 1, "dim", self.dim, "dim >= 1")?;
        check(self.window >= 1, "window", self.window, "window >= 1")?;
        check(self.negatives >= 1, "neg", self.negatives, "neg >= 1")?;
        check(
            self.cds_exponent > 0.0 && self.cds_exponent <= 1.0,
            "cds",
            self.cds_exponent,
            "0 < cds <= 1",
        )?;
        check(self.epochs >= 1, "epochs", self.epochs, "epochs >= 1")?;
        check(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            "lr",
            self.learning_rate,
            "lr > 0",
        )?;
        check(
            self.min_learning_rate >= 0.0 && self.min_learning_rate <= self.learning_rate,
            "min_lr",
            self.min_learning_rate,
            "0 <= min_lr <= lr",
        )?;
        check(
            self.ngram_min >= 1,
            "ngram_min",
            self.ngram_min,
            "ngram_min >= 1",
        )?;
        check(
            self.ngram_max >= self.ngram_min,
            "ngram_max",
            self.ngram_max,
            "ngram_max >= ngram_min",
        )?;
        if let Some(t) = self.subsample {
            check(t > 0.0 && t.is_finite(), "subsample", t, "subsample > 0")?;
        }
        check(self.x_max > 0.0, "x_max", self.x_max, "x_max > 0")?;
        check(self.alpha > 0.0, "alpha", self.alpha, "alpha > 0")?;
        check(self.workers >= 1, "workers", self.workers, "workers >= 1")?;
        Ok(())
    }

    /// Identifier encoding every hyperparameter the grid varies.
    pub fn setting_id(&self) -> String {
        let wc = if self.add_context { "yes" } else { "no" };
        match self.method {
            Method::Glove => format!("glove_win{}_wc{}", self.window, wc),
            m => format!(
                "{}_win{}_wc{}_neg{}_cds{}",
                m, self.window, wc, self.negatives, self.cds_exponent
            ),
        }
    }
}

/// One point of the hyperparameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSetting {
    pub id: String,
    pub hyperparams: Hyperparams,
}

impl GridSetting {
    pub fn new(hyperparams: Hyperparams) -> Self {
        Self {
            id: hyperparams.setting_id(),
            hyperparams,
        }
    }

    /// Recovers `(method, window, add_context, negatives, cds)` from an id
    /// produced by [`Hyperparams::setting_id`].
    pub fn parse_id(id: &str) -> Result<Hyperparams> {
        let bad = || Error::parse(format!("setting id {id:?}"), "unrecognized layout");
        let mut parts = id.split('_');
        let method: Method = parts.next().ok_or_else(bad)?.parse()?;
        let mut hp = Hyperparams::desk(method);
        for p in parts {
            if let Some(v) = p.strip_prefix("win") {
                hp.window = v.parse().map_err(|_| bad())?;
            } else if let Some(v) = p.strip_prefix("wc") {
                hp.add_context = match v {
                    "yes" => true,
                    "no" => false,
                    _ => return Err(bad()),
                };
            } else if let Some(v) = p.strip_prefix("neg") {
                hp.negatives = v.parse().map_err(|_| bad())?;
            } else if let Some(v) = p.strip_prefix("cds") {
                hp.cds_exponent = v.parse().map_err(|_| bad())?;
            } else {
                return Err(bad());
            }
        }
        Ok(hp)
    }
}

pub const GRID_WINDOWS: [usize; 3] = [2, 5, 10];
pub const GRID_ADD_CONTEXT: [bool; 2] = [false, true];
pub const GRID_CDS: [f64; 2] = [0.75, 1.0];
pub const GRID_NEGATIVES: [usize; 3] = [1, 5, 15];

/// Cartesian product of the grid values applicable to `method`, in the
/// order window, w+c, cds, neg. Other fields come from `base`.
pub fn enumerate_grid_from(base: &Hyperparams, method: Method) -> Vec<GridSetting> {
    let mut out = Vec::new();
    for &window in &GRID_WINDOWS {
        for &add_context in &GRID_ADD_CONTEXT {
            let hp = Hyperparams {
                method,
                window,
                add_context,
                ..base.clone()
            };
            if method.uses_negatives() {
                for &cds in &GRID_CDS {
                    for &neg in &GRID_NEGATIVES {
                        out.push(GridSetting::new(Hyperparams {
                            cds_exponent: cds,
                            negatives: neg,
                            ..hp.clone()
                        }));
                    }
                }
            } else {
                out.push(GridSetting::new(hp));
            }
        }
    }
    out
}

pub fn enumerate_grid(method: Method) -> Vec<GridSetting> {
    enumerate_grid_from(&Hyperparams::desk(method), method)
}

/// Read-only view of the parameters at an epoch (or GloVe iteration) barrier.
#[derive(Debug)]
pub struct Snapshot<'a> {
    /// 1-based epoch number.
    pub epoch: u32,
    /// Target vectors as an analysis would see them (for FastText, the sum of
    /// word and n-gram vectors).
    pub target: &'a Matrix,
    pub context: &'a Matrix,
    /// Mean loss over the epoch (SGNS, FastText) or the full weighted
    /// objective after the iteration (GloVe).
    pub loss: f64,
}

impl Snapshot<'_> {
    pub fn to_set(&self, lexicon: Arc<Lexicon>, hp: &Hyperparams) -> Result<EmbeddingSet> {
        Ok(
            assemble(lexicon, self.target.clone(), self.context.clone(), hp)?
                .with_epoch_tag(Some(self.epoch)),
        )
    }
}

/// Builds the trained set; with `add_context` the target rows become `W + C`.
pub(crate) fn assemble(
    lexicon: Arc<Lexicon>,
    target: Matrix,
    context: Matrix,
    hp: &Hyperparams,
) -> Result<EmbeddingSet> {
    let raw = EmbeddingSet::new(lexicon, target, context)?.with_hyperparams(Hyperparams {
        add_context: false,
        ..hp.clone()
    });
    if hp.add_context {
        crate::store::combine_w_plus_c(&raw)
    } else {
        Ok(raw)
    }
}

pub trait SnapshotSink {
    fn on_epoch(&mut self, snapshot: &Snapshot<'_>);
}

impl<F: FnMut(&Snapshot<'_>)> SnapshotSink for F {
    fn on_epoch(&mut self, snapshot: &Snapshot<'_>) {
        self(snapshot)
    }
}

/// Sink that ignores every snapshot.
pub struct NoSnapshots;

impl SnapshotSink for NoSnapshots {
    fn on_epoch(&mut self, _: &Snapshot<'_>) {}
}

/// Dispatches on `hp.method`. GloVe builds its co-occurrence table first.
pub fn train(
    corpus: &Corpus,
    vocab: &Vocabulary,
    hp: &Hyperparams,
    sink: &mut dyn SnapshotSink,
) -> Result<EmbeddingSet> {
    match hp.method {
        Method::Sgns => train_sgns(corpus, vocab, hp, sink),
        Method::Fasttext => train_fasttext(corpus, vocab, hp, sink),
        Method::Glove => {
            let table = build_cooccurrence(corpus, vocab, hp.window);
            train_glove(&table, vocab, hp, sink)
        }
    }
}

/// Accepts a corpus either in vocabulary IDs already or in raw stage.
pub(crate) fn encoded_view<'a>(
    corpus: &'a Corpus,
    vocab: &Vocabulary,
) -> Result<std::borrow::Cow<'a, Corpus>> {
    if Arc::ptr_eq(corpus.lexicon(), vocab.lexicon()) || **corpus.lexicon() == **vocab.lexicon() {
        Ok(std::borrow::Cow::Borrowed(corpus))
    } else {
        Ok(std::borrow::Cow::Owned(corpus.encode(vocab)))
    }
}
