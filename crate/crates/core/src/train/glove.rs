//! GloVe: distance-weighted co-occurrence counting and AdaGrad
//! factorization of the log counts.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rustc_hash::FxHashMap;

use super::{encoded_view, Hyperparams, Method, Snapshot, SnapshotSink};
use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::rng;
use crate::store::{EmbeddingSet, Matrix};

/// Symmetric sparse co-occurrence weights. Only the upper triangle
/// (`i <= j`) is stored, sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceTable {
    vocab_size: usize,
    upper: Vec<(u32, u32, f64)>,
}

impl CooccurrenceTable {
    /// Builds a table from `(i, j, x)` triples; `(i, j)` and `(j, i)` name
    /// the same cell and repeated cells accumulate.
    pub fn from_triples(
        vocab_size: usize,
        triples: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Self {
        let mut map: FxHashMap<u64, f64> = FxHashMap::default();
        for (i, j, x) in triples {
            *map.entry(key(i, j)).or_insert(0.0) += x;
        }
        Self::from_map(vocab_size, map)
    }

    fn from_map(vocab_size: usize, map: FxHashMap<u64, f64>) -> Self {
        let mut upper: Vec<(u32, u32, f64)> = map
            .into_iter()
            .filter(|&(_, x)| x > 0.0)
            .map(|(k, x)| ((k >> 32) as u32, k as u32, x))
            .collect();
        upper.sort_unstable_by_key(|&(i, j, _)| (i, j));
        Self { vocab_size, upper }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn get(&self, i: u32, j: u32) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.upper
            .binary_search_by_key(&(a, b), |&(x, y, _)| (x, y))
            .map(|k| self.upper[k].2)
            .unwrap_or(0.0)
    }

    /// Stored cells with `i <= j`.
    pub fn upper(&self) -> &[(u32, u32, f64)] {
        &self.upper
    }

    /// Number of nonzero cells of the full symmetric matrix.
    pub fn nnz(&self) -> usize {
        self.upper
            .iter()
            .map(|&(i, j, _)| if i == j { 1 } else { 2 })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.upper.is_empty()
    }

    /// Every nonzero cell of the full matrix, both orientations.
    pub fn entries(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.upper.iter().flat_map(|&(i, j, x)| {
            let mirror = (i != j).then_some((j, i, x));
            std::iter::once((i, j, x)).chain(mirror)
        })
    }
}

#[inline]
fn key(i: u32, j: u32) -> u64 {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    ((a as u64) << 32) | b as u64
}

/// Counts co-occurrences within `window` tokens of the same sentence, each
/// weighted `1/d` for token distance `d`. A word meeting itself adds to the
/// diagonal from both sides.
pub fn build_cooccurrence(corpus: &Corpus, vocab: &Vocabulary, window: usize) -> CooccurrenceTable {
    let corpus = encoded_view(corpus, vocab).expect("encoding cannot fail");
    let mut map: FxHashMap<u64, f64> = FxHashMap::default();
    for s in corpus.sentences() {
        for (p, &a) in s.iter().enumerate() {
            for d in 1..=window {
                let Some(&b) = s.get(p + d) else { break };
                let w = 1.0 / d as f64;
                let inc = if a == b { 2.0 * w } else { w };
                *map.entry(key(a, b)).or_insert(0.0) += inc;
            }
        }
    }
    CooccurrenceTable::from_map(vocab.len(), map)
}

/// GloVe weighting `min(1, (x / x_max)^alpha)`.
pub fn glove_weight(x: f64, x_max: f64, alpha: f64) -> f64 {
    if x >= x_max {
        1.0
    } else {
        (x / x_max).powf(alpha)
    }
}

/// Model state: word and context vectors with their biases.
#[derive(Debug, Clone, PartialEq)]
pub struct GloveParams {
    pub dim: usize,
    pub w: Vec<f64>,
    pub c: Vec<f64>,
    pub bw: Vec<f64>,
    pub bc: Vec<f64>,
}

impl GloveParams {
    fn init(v: usize, dim: usize, rng: &mut impl Rng) -> Self {
        let half = 0.5 / dim as f64;
        let mut draw =
            |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-half..half)).collect() };
        let w = draw(v * dim);
        let c = draw(v * dim);
        let bw = draw(v);
        let bc = draw(v);
        Self { dim, w, c, bw, bc }
    }

    fn residual_ln(&self, i: usize, j: usize, ln_x: f64) -> f64 {
        let d = self.dim;
        let dot: f64 = self.w[i * d..(i + 1) * d]
            .iter()
            .zip(&self.c[j * d..(j + 1) * d])
            .map(|(a, b)| a * b)
            .sum();
        dot + self.bw[i] + self.bc[j] - ln_x
    }
}

/// Total weighted loss `Σ f(X_ij) (w_i·c_j + b_i + b̃_j - ln X_ij)²` over
/// every nonzero cell.
pub fn glove_objective(
    table: &CooccurrenceTable,
    params: &GloveParams,
    x_max: f64,
    alpha: f64,
) -> f64 {
    table
        .entries()
        .map(|(i, j, x)| {
            let r = params.residual_ln(i as usize, j as usize, x.ln());
            glove_weight(x, x_max, alpha) * r * r
        })
        .sum()
}

/// A directed cell with its log count and weight precomputed.
struct Cell {
    i: u32,
    j: u32,
    ln_x: f64,
    weight: f64,
}

fn objective(cells: &[Cell], params: &GloveParams) -> f64 {
    cells
        .iter()
        .map(|c| {
            let r = params.residual_ln(c.i as usize, c.j as usize, c.ln_x);
            c.weight * r * r
        })
        .sum()
}

fn to_matrix(v: usize, dim: usize, data: &[f64]) -> Result<Matrix> {
    Matrix::from_vec(v, dim, data.iter().map(|&x| x as f32).collect())
}

#[inline]
fn adagrad_step(x: &mut [f64], gsq: &mut [f64], g: &[f64]) {
    for ((x, s), g) in x.iter_mut().zip(gsq.iter_mut()).zip(g) {
        *x -= g / s.sqrt();
        *s += g * g;
    }
}

/// Fits GloVe by AdaGrad over the nonzero cells, visiting them in a fresh
/// random order each iteration. Each iteration ends with a snapshot whose
/// loss is the full objective.
pub fn train_glove(
    table: &CooccurrenceTable,
    vocab: &Vocabulary,
    hp: &Hyperparams,
    sink: &mut dyn SnapshotSink,
) -> Result<EmbeddingSet> {
    train_glove_params(table, vocab, hp, sink).map(|(set, _)| set)
}

/// [`train_glove`] that also hands back the fitted biases.
pub fn train_glove_params(
    table: &CooccurrenceTable,
    vocab: &Vocabulary,
    hp: &Hyperparams,
    sink: &mut dyn SnapshotSink,
) -> Result<(EmbeddingSet, GloveParams)> {
    hp.validate()?;
    if hp.method != Method::Glove {
        return Err(Error::Config(format!(
            "train_glove called with method {}",
            hp.method
        )));
    }
    if table.is_empty() {
        return Err(Error::Config("co-occurrence table is empty".into()));
    }
    if table.vocab_size() != vocab.len() {
        return Err(Error::DimensionMismatch {
            left: table.vocab_size(),
            right: vocab.len(),
        });
    }
    let (v, dim) = (vocab.len(), hp.dim);
    let mut p = GloveParams::init(v, dim, &mut rng::derive(hp.seed, 0));
    let mut gsq_w = vec![1.0f64; v * dim];
    let mut gsq_c = vec![1.0f64; v * dim];
    let mut gsq_bw = vec![1.0f64; v];
    let mut gsq_bc = vec![1.0f64; v];
    let mut cells: Vec<Cell> = table
        .entries()
        .map(|(i, j, x)| Cell {
            i,
            j,
            ln_x: x.ln(),
            weight: glove_weight(x, hp.x_max, hp.alpha),
        })
        .collect();
    let eta = hp.learning_rate;
    let mut gw = vec![0.0f64; dim];
    let mut gc = vec![0.0f64; dim];

    log::debug!("glove initial objective {:.6}", objective(&cells, &p));
    for iter in 0..hp.epochs {
        let started = Instant::now();
        cells.shuffle(&mut rng::derive(hp.seed, 1 + iter as u64));
        for cell in &cells {
            let (i, j) = (cell.i as usize, cell.j as usize);
            let fdiff = cell.weight * p.residual_ln(i, j, cell.ln_x) * eta;
            let (wi, cj) = (i * dim..(i + 1) * dim, j * dim..(j + 1) * dim);
            for (((a, b), g), h) in p.w[wi.clone()]
                .iter()
                .zip(&p.c[cj.clone()])
                .zip(gw.iter_mut())
                .zip(gc.iter_mut())
            {
                *g = fdiff * b;
                *h = fdiff * a;
            }
            adagrad_step(&mut p.w[wi.clone()], &mut gsq_w[wi], &gw);
            adagrad_step(&mut p.c[cj.clone()], &mut gsq_c[cj], &gc);
            p.bw[i] -= fdiff / gsq_bw[i].sqrt();
            p.bc[j] -= fdiff / gsq_bc[j].sqrt();
            gsq_bw[i] += fdiff * fdiff;
            gsq_bc[j] += fdiff * fdiff;
        }
        let loss = objective(&cells, &p);
        if !loss.is_finite() {
            return Err(Error::Config(format!(
                "GloVe diverged at iteration {}; lower the learning rate",
                iter + 1
            )));
        }
        log::info!(
            "glove iteration {}/{}: objective {:.4}, {:.0} cells/sec",
            iter + 1,
            hp.epochs,
            loss,
            cells.len() as f64 / started.elapsed().as_secs_f64().max(1e-9)
        );
        let target = to_matrix(v, dim, &p.w)?;
        let context = to_matrix(v, dim, &p.c)?;
        sink.on_epoch(&Snapshot {
            epoch: iter as u32 + 1,
            target: &target,
            context: &context,
            loss,
        });
    }
    let set = super::assemble(
        vocab.lexicon().clone(),
        to_matrix(v, dim, &p.w)?,
        to_matrix(v, dim, &p.c)?,
        hp,
    )?;
    Ok((set, p))
}
