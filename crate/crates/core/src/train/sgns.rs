//! Skip-gram with negative sampling, plain and subword-composed.
//!
//! Both trainers share one kernel. A word's input vector is the sum of its
//! component rows in the input matrix: just its own row for SGNS, its own
//! row plus one hashed row per character n-gram for FastText. With zero
//! buckets the two trainers execute the same operations in the same order.

use std::time::Instant;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use super::params::{DenseRows, Rows, SharedStore};
use super::subword::subword_rows;
use super::{encoded_view, Hyperparams, Method, Snapshot, SnapshotSink};
use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::rng;
use crate::store::{EmbeddingSet, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Positive,
    Negative,
}

/// Loss of one (word, context) term and its exact gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGrad {
    pub loss: f64,
    pub grad_w: Vec<f64>,
    pub grad_c: Vec<f64>,
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-pair SGNS term: `-log σ(w·c)` for a positive pair, `-log σ(-w·c)`
/// for a negative sample, with gradients in `f64`.
pub fn sgns_pair_loss_grad(w: &[f64], c: &[f64], label: Label) -> Result<PairGrad> {
    if w.len() != c.len() {
        return Err(Error::DimensionMismatch {
            left: w.len(),
            right: c.len(),
        });
    }
    let x: f64 = w.iter().zip(c).map(|(a, b)| a * b).sum();
    // dL/dx
    let (loss, dx) = match label {
        Label::Positive => (softplus(-x), sigmoid(x) - 1.0),
        Label::Negative => (softplus(x), sigmoid(x)),
    };
    Ok(PairGrad {
        loss,
        grad_w: c.iter().map(|v| dx * v).collect(),
        grad_c: w.iter().map(|v| dx * v).collect(),
    })
}

/// The same term when the word vector is the sum of `components` (own
/// vector plus n-gram vectors). Each component receives the gradient of
/// the sum.
pub fn fasttext_pair_loss_grad(
    components: &[&[f64]],
    c: &[f64],
    label: Label,
) -> Result<(f64, Vec<Vec<f64>>, Vec<f64>)> {
    let mut w = vec![0.0; c.len()];
    for comp in components {
        if comp.len() != c.len() {
            return Err(Error::DimensionMismatch {
                left: comp.len(),
                right: c.len(),
            });
        }
        for (a, b) in w.iter_mut().zip(comp.iter()) {
            *a += b;
        }
    }
    let g = sgns_pair_loss_grad(&w, c, label)?;
    let grads = vec![g.grad_w.clone(); components.len()];
    Ok((g.loss, grads, g.grad_c))
}

/// Negative-sampling distribution: counts raised to `exponent`, normalized.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    probabilities: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[u64], exponent: f64) -> Result<Self> {
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(exponent)).collect();
        let total: f64 = weights.iter().sum();
        if counts.is_empty() || total <= 0.0 {
            return Err(Error::Config(
                "negative sampling needs a nonempty vocabulary".into(),
            ));
        }
        let probabilities = weights.iter().map(|w| w / total).collect();
        let alias = WeightedAliasIndex::new(weights)
            .map_err(|e| Error::Config(format!("negative sampling table: {e}")))?;
        Ok(Self {
            probabilities,
            alias,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.alias.sample(rng) as u32
    }
}

/// Probability of keeping each occurrence under frequent-word subsampling
/// with threshold `t`: `(sqrt(f / tN) + 1) * tN / f`, capped at one.
pub fn keep_probabilities(counts: &[u64], threshold: f64) -> Vec<f32> {
    let tn = threshold * counts.iter().sum::<u64>() as f64;
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                return 1.0;
            }
            let c = c as f64;
            (((c / tn).sqrt() + 1.0) * tn / c).min(1.0) as f32
        })
        .collect()
}

struct Kernel<'a> {
    hp: &'a Hyperparams,
    components: &'a [Vec<u32>],
    sampler: &'a NegativeSampler,
    keep: Option<&'a [f32]>,
    total_words: f64,
}

#[derive(Default, Clone, Copy)]
struct EpochStats {
    loss: f64,
    terms: u64,
    words: u64,
}

impl Kernel<'_> {
    fn learning_rate(&self, progress: f64) -> f32 {
        let (lr0, floor) = (self.hp.learning_rate, self.hp.min_learning_rate);
        (lr0 - (lr0 - floor) * (progress / self.total_words)).max(floor) as f32
    }

    /// Trains over `sentences`. `progress` maps local words seen onto the
    /// global count that drives the learning-rate decay.
    fn run<I: Rows, O: Rows, R: Rng>(
        &self,
        corpus: &Corpus,
        sentences: std::ops::Range<usize>,
        input: &mut I,
        output: &mut O,
        rng: &mut R,
        progress: impl Fn(u64) -> f64,
    ) -> EpochStats {
        let dim = self.hp.dim;
        let mut h = vec![0.0f32; dim];
        let mut grad = vec![0.0f32; dim];
        let mut kept: Vec<u32> = Vec::new();
        let mut stats = EpochStats::default();
        for k in sentences {
            let sentence = corpus.sentence(k);
            let lr = self.learning_rate(progress(stats.words));
            stats.words += sentence.len() as u64;
            kept.clear();
            match self.keep {
                Some(keep) => kept.extend(sentence.iter().copied().filter(|&t| {
                    let p = keep[t as usize];
                    p >= 1.0 || rng.random::<f32>() < p
                })),
                None => kept.extend_from_slice(sentence),
            }
            for i in 0..kept.len() {
                let reach = rng.random_range(1..=self.hp.window);
                let lo = i.saturating_sub(reach);
                let hi = (i + reach).min(kept.len() - 1);
                let center = &self.components[kept[i] as usize];
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let context = kept[j];
                    h.fill(0.0);
                    for &r in center {
                        input.add_scaled_into(r as usize, 1.0, &mut h);
                    }
                    grad.fill(0.0);
                    for n in 0..=self.hp.negatives {
                        let (target, positive) = if n == 0 {
                            (context, true)
                        } else {
                            let t = self.sampler.sample(rng);
                            if t == context {
                                continue;
                            }
                            (t, false)
                        };
                        let f = output.dot(target as usize, &h);
                        let s = 1.0 / (1.0 + (-f).exp());
                        let (g, p) = if positive {
                            (1.0 - s, s)
                        } else {
                            (-s, 1.0 - s)
                        };
                        stats.loss -= (p.max(1e-12) as f64).ln();
                        stats.terms += 1;
                        let g = g * lr;
                        output.add_scaled_into(target as usize, g, &mut grad);
                        output.axpy(target as usize, g, &h);
                    }
                    for &r in center {
                        input.axpy(r as usize, 1.0, &grad);
                    }
                }
            }
        }
        stats
    }
}

fn uniform_init(rows: usize, dim: usize, rng: &mut impl Rng) -> Vec<f32> {
    let half = 0.5 / dim as f32;
    (0..rows * dim)
        .map(|_| rng.random_range(-half..half))
        .collect()
}

fn compose(input: &[f32], components: &[Vec<u32>], dim: usize) -> Matrix {
    let mut m = Matrix::zeros(components.len(), dim);
    for (i, rows) in components.iter().enumerate() {
        let dst = m.row_mut(i);
        for &r in rows {
            let r = r as usize;
            for (d, x) in dst.iter_mut().zip(&input[r * dim..(r + 1) * dim]) {
                *d += x;
            }
        }
    }
    m
}

fn train_skipgram(
    corpus: &Corpus,
    vocab: &Vocabulary,
    hp: &Hyperparams,
    buckets: usize,
    sink: &mut dyn SnapshotSink,
) -> Result<EmbeddingSet> {
    hp.validate()?;
    if vocab.is_empty() {
        return Err(Error::Config("vocabulary is empty".into()));
    }
    let corpus = encoded_view(corpus, vocab)?;
    if corpus.is_empty() {
        return Err(Error::Config("corpus has no in-vocabulary tokens".into()));
    }
    let v = vocab.len();
    let dim = hp.dim;
    let components = subword_rows(vocab.words(), hp.ngram_min, hp.ngram_max, buckets);
    let sampler = NegativeSampler::new(vocab.counts(), hp.cds_exponent)?;
    let keep = hp.subsample.map(|t| keep_probabilities(vocab.counts(), t));

    let mut init_rng = rng::derive(hp.seed, 0);
    let mut input = uniform_init(v + buckets, dim, &mut init_rng);
    let mut output = vec![0.0f32; v * dim];

    let n_sentences = corpus.num_sentences();
    let epoch_words = corpus.token_count() as f64;
    let kernel = Kernel {
        hp,
        components: &components,
        sampler: &sampler,
        keep: keep.as_deref(),
        total_words: epoch_words * hp.epochs as f64,
    };

    let shared = (hp.workers > 1).then(|| {
        (
            SharedStore::from_slice(&input, dim),
            SharedStore::from_slice(&output, dim),
        )
    });

    for epoch in 0..hp.epochs {
        let started = Instant::now();
        let base = epoch as f64 * epoch_words;
        let stats = match &shared {
            None => {
                let mut rng = rng::derive(hp.seed, 1 + epoch as u64);
                let mut inp = DenseRows::new(&mut input, dim);
                let mut out = DenseRows::new(&mut output, dim);
                kernel.run(&corpus, 0..n_sentences, &mut inp, &mut out, &mut rng, |w| {
                    base + w as f64
                })
            }
            Some((sin, sout)) => {
                let workers = hp.workers;
                let chunk = n_sentences.div_ceil(workers);
                let parts: Vec<EpochStats> = std::thread::scope(|scope| {
                    let handles: Vec<_> = (0..workers)
                        .map(|w| {
                            let range =
                                (w * chunk).min(n_sentences)..((w + 1) * chunk).min(n_sentences);
                            let kernel = &kernel;
                            let corpus = &corpus;
                            let (mut inp, mut out) = (sin.handle(), sout.handle());
                            scope.spawn(move || {
                                let mut rng =
                                    rng::derive(hp.seed, 1 + (epoch * workers + w) as u64);
                                kernel.run(corpus, range, &mut inp, &mut out, &mut rng, |local| {
                                    base + (local * workers as u64) as f64
                                })
                            })
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("worker panicked"))
                        .collect()
                });
                input = sin.to_vec();
                output = sout.to_vec();
                parts
                    .into_iter()
                    .fold(EpochStats::default(), |a, b| EpochStats {
                        loss: a.loss + b.loss,
                        terms: a.terms + b.terms,
                        words: a.words + b.words,
                    })
            }
        };
        let secs = started.elapsed().as_secs_f64().max(1e-9);
        let loss = stats.loss / stats.terms.max(1) as f64;
        log::info!(
            "{} epoch {}/{}: loss {:.4}, {:.0} words/sec",
            hp.method,
            epoch + 1,
            hp.epochs,
            loss,
            stats.words as f64 / secs
        );
        let target = compose(&input, &components, dim);
        let context = Matrix::from_vec(v, dim, output.clone())?;
        sink.on_epoch(&Snapshot {
            epoch: epoch as u32 + 1,
            target: &target,
            context: &context,
            loss,
        });
    }

    let target = compose(&input, &components, dim);
    let context = Matrix::from_vec(v, dim, output)?;
    super::assemble(vocab.lexicon().clone(), target, context, hp)
}

/// Skip-gram with negative sampling trained by SGD with linear decay.
///
/// Accepts a raw-stage corpus (tokens are mapped through `vocab`, unknown
/// ones dropped) or one already encoded against `vocab`.
pub fn train_sgns(
    corpus: &Corpus,
    vocab: &Vocabulary,
    hp: &Hyperparams,
    sink: &mut dyn SnapshotSink,
) -> Result<EmbeddingSet> {
    if hp.method != Method::Sgns {
        return Err(Error::Config(format!(
            "train_sgns called with method {}",
            hp.method
        )));
    }
    train_skipgram(corpus, vocab, hp, 0, sink)
}

/// Skip-gram where each word's vector is the sum of its own vector and its
/// hashed character n-gram vectors. The returned target matrix holds those
/// sums.
pub fn train_fasttext(
    corpus: &Corpus,
    vocab: &Vocabulary,
    hp: &Hyperparams,
    sink: &mut dyn SnapshotSink,
) -> Result<EmbeddingSet> {
    if hp.method != Method::Fasttext {
        return Err(Error::Config(format!(
            "train_fasttext called with method {}",
            hp.method
        )));
    }
    train_skipgram(corpus, vocab, hp, hp.buckets, sink)
}
