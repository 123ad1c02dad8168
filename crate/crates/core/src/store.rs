//! Embedding sets: storage, the `w+c` transform, similarity metrics and
//! on-disk formats.
//!
//! Two formats are supported. The text format holds target vectors only:
//!
//! ```text
//! V D
//! word v1 ... vD
//! ```
//!
//! The binary format is the format of record and keeps both matrices:
//! magic `FQL1`, then `V` and `D` as little-endian `u32`, then per word a
//! little-endian `u16` byte length, the UTF-8 bytes, `D` little-endian `f32`
//! target coordinates and `D` context coordinates.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{Lexicon, Vocabulary};
use crate::error::{Error, Result};
use crate::train::Hyperparams;

const MAGIC: &[u8; 4] = b"FQL1";

/// Dense row-major `f32` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                left: data.len(),
                right: rows * cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    left: r.len(),
                    right: cols,
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Cosine,
    NegEuclidean,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Cosine, Metric::NegEuclidean];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::NegEuclidean => "neg_euclidean",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "neg_euclidean" => Ok(Metric::NegEuclidean),
            _ => Err(Error::Config(format!(
                "unknown metric {s:?}; expected one of cosine, neg_euclidean"
            ))),
        }
    }
}

/// Dot product and squared norms accumulated in `f64`, in index order.
fn dot_norms(u: &[f32], v: &[f32]) -> (f64, f64, f64) {
    let (mut uv, mut uu, mut vv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a as f64, b as f64);
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    (uv, uu, vv)
}

/// Cosine or negative Euclidean similarity. Symmetric bit-for-bit.
pub fn similarity(u: &[f32], v: &[f32], metric: Metric) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    match metric {
        Metric::Cosine => {
            let (uv, uu, vv) = dot_norms(u, v);
            if uu == 0.0 || vv == 0.0 {
                return Err(Error::UndefinedSimilarity { word: None });
            }
            // uu * vv commutes exactly, so the result is symmetric
            Ok((uv / (uu * vv).sqrt()).clamp(-1.0, 1.0))
        }
        Metric::NegEuclidean => {
            // (a - b)^2 == (b - a)^2 exactly in IEEE arithmetic
            let d2: f64 = u
                .iter()
                .zip(v)
                .map(|(&a, &b)| {
                    let d = a as f64 - b as f64;
                    d * d
                })
                .sum();
            Ok(-d2.sqrt())
        }
    }
}

/// Target and context vectors over a word list. Row `i` belongs to word `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    lexicon: Arc<Lexicon>,
    target: Matrix,
    context: Matrix,
    hyperparams: Option<Hyperparams>,
    epoch_tag: Option<u32>,
}

impl EmbeddingSet {
    pub fn new(lexicon: Arc<Lexicon>, target: Matrix, context: Matrix) -> Result<Self> {
        if target.rows() != context.rows() || target.cols() != context.cols() {
            return Err(Error::DimensionMismatch {
                left: target.rows() * target.cols(),
                right: context.rows() * context.cols(),
            });
        }
        if target.rows() != lexicon.len() {
            return Err(Error::DimensionMismatch {
                left: target.rows(),
                right: lexicon.len(),
            });
        }
        if !target.is_finite() || !context.is_finite() {
            return Err(Error::Config(
                "embedding contains NaN or infinite values".into(),
            ));
        }
        Ok(Self {
            lexicon,
            target,
            context,
            hyperparams: None,
            epoch_tag: None,
        })
    }

    pub fn with_hyperparams(mut self, hp: Hyperparams) -> Self {
        self.hyperparams = Some(hp);
        self
    }

    pub fn with_epoch_tag(mut self, epoch: Option<u32>) -> Self {
        self.epoch_tag = epoch;
        self
    }

    pub fn lexicon(&self) -> &Arc<Lexicon> {
        &self.lexicon
    }

    pub fn words(&self) -> &[String] {
        self.lexicon.words()
    }

    pub fn len(&self) -> usize {
        self.target.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.target.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.target.cols()
    }

    pub fn target(&self) -> &Matrix {
        &self.target
    }

    pub fn context(&self) -> &Matrix {
        &self.context
    }

    pub fn hyperparams(&self) -> Option<&Hyperparams> {
        self.hyperparams.as_ref()
    }

    pub fn epoch_tag(&self) -> Option<u32> {
        self.epoch_tag
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.lexicon.id(word).map(|i| i as usize)
    }

    pub fn vector(&self, word: &str) -> Result<&[f32]> {
        self.id(word)
            .map(|i| self.target.row(i))
            .ok_or_else(|| Error::UnknownWord(word.to_owned()))
    }

    /// Similarity between the target vectors of rows `i` and `j`. A zero row
    /// under cosine is reported with its word.
    pub fn similarity_ids(&self, i: usize, j: usize, metric: Metric) -> Result<f64> {
        similarity(self.target.row(i), self.target.row(j), metric).map_err(|e| match e {
            Error::UndefinedSimilarity { .. } => {
                let zero = if self.target.row(i).iter().all(|&x| x == 0.0) {
                    i
                } else {
                    j
                };
                Error::UndefinedSimilarity {
                    word: Some(self.lexicon.word(zero as u32).to_owned()),
                }
            }
            other => other,
        })
    }

    /// Checks that rows line up with the vocabulary's IDs.
    pub fn check_aligned(&self, vocab: &Vocabulary) -> Result<()> {
        if self.words() != vocab.words() {
            let first = self
                .words()
                .iter()
                .zip(vocab.words())
                .position(|(a, b)| a != b)
                .unwrap_or(self.len().min(vocab.len()));
            return Err(Error::VocabMismatch(format!(
                "{} embedding rows vs {} vocabulary words, first difference at row {first}",
                self.len(),
                vocab.len()
            )));
        }
        Ok(())
    }

    pub fn persist(&self, path: impl AsRef<Path>, format: Format) -> Result<()> {
        let out = BufWriter::new(File::create(path)?);
        match format {
            Format::Binary => self.write_binary(out),
            Format::Text => self.write_text(out),
        }
    }

    /// Restores either format, sniffing the magic bytes.
    pub fn restore(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = BufReader::new(File::open(path)?);
        let head = reader.fill_buf()?;
        if head.starts_with(MAGIC) {
            Self::read_binary(reader)
        } else {
            Self::read_text(reader)
        }
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.len() as u32).to_le_bytes())?;
        out.write_all(&(self.dim() as u32).to_le_bytes())?;
        for (i, w) in self.words().iter().enumerate() {
            let len = u16::try_from(w.len())
                .map_err(|_| Error::Config(format!("word longer than 65535 bytes: {w:.32}...")))?;
            out.write_all(&len.to_le_bytes())?;
            out.write_all(w.as_bytes())?;
            for m in [&self.target, &self.context] {
                for x in m.row(i) {
                    out.write_all(&x.to_le_bytes())?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut src = Tracked {
            inner: &mut input,
            offset: 0,
        };
        let mut magic = [0u8; 4];
        src.read(&mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(Error::parse("byte offset 0", "missing FQL1 magic"));
        }
        let mut b4 = [0u8; 4];
        src.read(&mut b4, "header")?;
        let v = u32::from_le_bytes(b4) as usize;
        src.read(&mut b4, "header")?;
        let d = u32::from_le_bytes(b4) as usize;

        let mut words = Vec::with_capacity(v.min(1 << 24));
        let mut target = Vec::with_capacity((v * d).min(1 << 28));
        let mut context = Vec::with_capacity((v * d).min(1 << 28));
        let mut row = vec![0u8; 4 * d];
        for _ in 0..v {
            let at = src.offset;
            let mut b2 = [0u8; 2];
            src.read(&mut b2, "word length")?;
            let mut wb = vec![0u8; u16::from_le_bytes(b2) as usize];
            src.read(&mut wb, "word bytes")?;
            let w = String::from_utf8(wb)
                .map_err(|_| Error::parse(format!("byte offset {at}"), "word is not UTF-8"))?;
            words.push((w, at));
            for dst in [&mut target, &mut context] {
                src.read(&mut row, "vector")?;
                dst.extend(
                    row.chunks_exact(4)
                        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])),
                );
            }
        }
        let lexicon = lexicon_from(words, |at| format!("byte offset {at}"))?;
        Self::new(
            Arc::new(lexicon),
            Matrix::from_vec(v, d, target)?,
            Matrix::from_vec(v, d, context)?,
        )
    }

    /// Text format: target vectors with six decimals. Context is not stored.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim())?;
        let mut line = String::new();
        for (i, w) in self.words().iter().enumerate() {
            line.clear();
            line.push_str(w);
            for x in self.target.row(i) {
                line.push(' ');
                line.push_str(&format!("{x:.6}"));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the text format. Context vectors come back as zeros.
    pub fn read_text<R: Read>(input: R) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Truncated("missing header line".into()))??;
        let mut parts = header.split_whitespace();
        let parse_dim = |s: Option<&str>| -> Result<usize> {
            s.and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse("line 1", format!("malformed header {header:?}")))
        };
        let v = parse_dim(parts.next())?;
        let d = parse_dim(parts.next())?;
        if parts.next().is_some() {
            return Err(Error::parse(
                "line 1",
                format!("malformed header {header:?}"),
            ));
        }
        let mut words = Vec::with_capacity(v);
        let mut data = Vec::with_capacity(v * d);
        for k in 0..v {
            let lineno = k + 2;
            let line = match lines.next() {
                Some(l) => l?,
                None => {
                    return Err(Error::Truncated(format!(
                        "header declares {v} rows but only {k} present (line {lineno})"
                    )))
                }
            };
            let mut fields = line.split(' ');
            let w = fields.next().unwrap_or_default();
            if w.is_empty() {
                return Err(Error::parse(format!("line {lineno}"), "empty word"));
            }
            let before = data.len();
            for f in fields {
                let x: f32 = f.parse().map_err(|_| {
                    Error::parse(format!("line {lineno}"), format!("bad number {f:?}"))
                })?;
                data.push(x);
            }
            if data.len() - before != d {
                return Err(Error::parse(
                    format!("line {lineno}"),
                    format!("expected {d} values, found {}", data.len() - before),
                ));
            }
            words.push((w.to_owned(), lineno));
        }
        let lexicon = lexicon_from(words, |l| format!("line {l}"))?;
        Self::new(
            Arc::new(lexicon),
            Matrix::from_vec(v, d, data)?,
            Matrix::zeros(v, d),
        )
    }
}

fn lexicon_from(words: Vec<(String, usize)>, loc: impl Fn(usize) -> String) -> Result<Lexicon> {
    let mut lexicon = Lexicon::new();
    for (w, at) in words {
        let before = lexicon.len();
        lexicon.intern(&w);
        if lexicon.len() == before {
            return Err(Error::DuplicateWord {
                word: w,
                location: loc(at),
            });
        }
    }
    Ok(lexicon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Binary,
}

struct Tracked<R> {
    inner: R,
    offset: usize,
}

impl<R: Read> Tracked<R> {
    fn read(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => {
                Error::Truncated(format!("{what} at byte offset {}", self.offset))
            }
            _ => Error::Io(e),
        })?;
        self.offset += buf.len();
        Ok(())
    }
}

/// Returns a set whose target vectors are `W + C`. Context vectors and
/// hyperparameters are kept, with `add_context` switched on. A set whose
/// hyperparameters already record `add_context` is rejected.
pub fn combine_w_plus_c(set: &EmbeddingSet) -> Result<EmbeddingSet> {
    if set.hyperparams.as_ref().is_some_and(|hp| hp.add_context) {
        return Err(Error::Config(
            "target vectors already include the context vectors".into(),
        ));
    }
    let (w, c) = (&set.target, &set.context);
    if w.rows() != c.rows() || w.cols() != c.cols() {
        return Err(Error::DimensionMismatch {
            left: w.rows() * w.cols(),
            right: c.rows() * c.cols(),
        });
    }
    let data = w
        .as_slice()
        .iter()
        .zip(c.as_slice())
        .map(|(a, b)| a + b)
        .collect();
    let mut out = set.clone();
    out.target = Matrix::from_vec(w.rows(), w.cols(), data)?;
    if let Some(hp) = out.hyperparams.as_mut() {
        hp.add_context = true;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn set_from(words: &[&str], w: &[Vec<f32>], c: &[Vec<f32>]) -> EmbeddingSet {
        let lex = Lexicon::from_words(words.iter().map(|s| s.to_string()).collect()).unwrap();
        EmbeddingSet::new(
            Arc::new(lex),
            Matrix::from_rows(w).unwrap(),
            Matrix::from_rows(c).unwrap(),
        )
        .unwrap()
    }

    fn random_set(v: usize, d: usize, seed: u64) -> EmbeddingSet {
        let mut rng = crate::rng::seeded(seed);
        let words: Vec<String> = (0..v).map(|i| format!("w{i}")).collect();
        let mut gen = || -> Vec<f32> { (0..v * d).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let w = gen();
        let c = gen();
        EmbeddingSet::new(
            Arc::new(Lexicon::from_words(words).unwrap()),
            Matrix::from_vec(v, d, w).unwrap(),
            Matrix::from_vec(v, d, c).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn analytic_similarities() {
        assert_eq!(
            similarity(&[1.0, 0.0], &[0.0, 1.0], Metric::Cosine).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            similarity(&[1.0, 0.0], &[0.0, 1.0], Metric::NegEuclidean).unwrap(),
            -std::f64::consts::SQRT_2,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            similarity(&[1.0, 1.0], &[2.0, 2.0], Metric::Cosine).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            similarity(&[0.3, -2.0, 5.0], &[0.3, -2.0, 5.0], Metric::Cosine).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_vector_cosine_is_an_error() {
        assert!(matches!(
            similarity(&[0.0, 0.0], &[1.0, 0.0], Metric::Cosine),
            Err(Error::UndefinedSimilarity { .. })
        ));
        assert!(matches!(
            similarity(&[1.0], &[1.0, 0.0], Metric::Cosine),
            Err(Error::DimensionMismatch { .. })
        ));
        let s = set_from(
            &["a", "z"],
            &[vec![1.0, 0.0], vec![0.0, 0.0]],
            &[vec![0.0; 2], vec![0.0; 2]],
        );
        match s.similarity_ids(0, 1, Metric::Cosine) {
            Err(Error::UndefinedSimilarity { word: Some(w) }) => assert_eq!(w, "z"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn metric_parsing() {
        assert_eq!("cosine".parse::<Metric>().unwrap(), Metric::Cosine);
        let err = "manhattan".parse::<Metric>().unwrap_err().to_string();
        assert!(err.contains("cosine") && err.contains("neg_euclidean"));
    }

    #[test]
    fn w_plus_c_zero_context_is_identity() {
        let s = set_from(
            &["a", "b"],
            &[vec![1.0, 2.0], vec![3.0, -1.0]],
            &[vec![0.0; 2], vec![0.0; 2]],
        );
        let t = combine_w_plus_c(&s).unwrap();
        assert_eq!(t.target(), s.target());
    }

    #[test]
    fn w_plus_c_arithmetic() {
        let s = set_from(&["a"], &[vec![1.0, 0.0]], &[vec![0.0, 1.0]]);
        let t = combine_w_plus_c(&s).unwrap();
        assert_eq!(t.target().row(0), &[1.0, 1.0]);
        assert_eq!(t.context(), s.context());
    }

    #[test]
    fn w_plus_c_doubling_keeps_cosines() {
        let base = random_set(6, 4, 1);
        let s = EmbeddingSet::new(
            base.lexicon.clone(),
            base.target.clone(),
            base.target.clone(),
        )
        .unwrap();
        let t = combine_w_plus_c(&s).unwrap();
        for i in 0..6 {
            for (a, b) in t.target().row(i).iter().zip(s.target().row(i)) {
                assert_eq!(*a, 2.0 * b);
            }
            for j in 0..6 {
                if i != j {
                    assert_abs_diff_eq!(
                        t.similarity_ids(i, j, Metric::Cosine).unwrap(),
                        s.similarity_ids(i, j, Metric::Cosine).unwrap(),
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn w_plus_c_marks_hyperparams() {
        let s = random_set(2, 2, 0).with_hyperparams(Hyperparams::default());
        assert!(!s.hyperparams().unwrap().add_context);
        let t = combine_w_plus_c(&s).unwrap();
        assert!(t.hyperparams().unwrap().add_context);
        assert!(matches!(combine_w_plus_c(&t), Err(Error::Config(_))));
    }

    #[test]
    fn binary_round_trip_is_bitwise() {
        let s = random_set(100, 50, 7);
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        let back = EmbeddingSet::read_binary(&buf[..]).unwrap();
        assert_eq!(back.words(), s.words());
        let bits = |m: &Matrix| m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(back.target()), bits(s.target()));
        assert_eq!(bits(back.context()), bits(s.context()));
    }

    #[test]
    fn binary_layout() {
        let s = set_from(&["ab"], &[vec![1.0]], &[vec![2.0]]);
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        let mut expected = b"FQL1".to_vec();
        expected.extend(1u32.to_le_bytes());
        expected.extend(1u32.to_le_bytes());
        expected.extend(2u16.to_le_bytes());
        expected.extend(b"ab");
        expected.extend(1.0f32.to_le_bytes());
        expected.extend(2.0f32.to_le_bytes());
        assert_eq!(buf, expected);
    }

    #[test]
    fn binary_truncation_and_duplicates() {
        let s = random_set(3, 2, 1);
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        let cut = &buf[..buf.len() - 3];
        assert!(matches!(
            EmbeddingSet::read_binary(cut),
            Err(Error::Truncated(_))
        ));

        let d = set_from(
            &["a", "b"],
            &[vec![1.0], vec![2.0]],
            &[vec![0.0], vec![0.0]],
        );
        let mut buf = Vec::new();
        d.write_binary(&mut buf).unwrap();
        // rename "b" to "a"
        let pos = buf.len() - 8 - 1;
        buf[pos] = b'a';
        match EmbeddingSet::read_binary(&buf[..]) {
            Err(Error::DuplicateWord { word, location }) => {
                assert_eq!(word, "a");
                assert_eq!(location, "byte offset 23");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn text_header_and_rows() {
        let txt = "2 3\nx 1 2 3\ny 0.5 0 -1\n";
        let s = EmbeddingSet::read_text(txt.as_bytes()).unwrap();
        assert_eq!((s.len(), s.dim()), (2, 3));
        assert_eq!(s.vector("y").unwrap(), &[0.5, 0.0, -1.0]);
    }

    #[test]
    fn text_errors() {
        let r = EmbeddingSet::read_text("5 2\na 1 2\nb 1 2\nc 1 2\nd 1 2\n".as_bytes());
        assert!(matches!(r, Err(Error::Truncated(_))), "{r:?}");
        assert!(matches!(
            EmbeddingSet::read_text("2\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            EmbeddingSet::read_text("1 2\na 1\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
        match EmbeddingSet::read_text("2 1\na 1\na 2\n".as_bytes()) {
            Err(Error::DuplicateWord { location, .. }) => assert_eq!(location, "line 3"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn text_round_trip_within_1e6() {
        let s = random_set(20, 8, 3);
        let mut buf = Vec::new();
        s.write_text(&mut buf).unwrap();
        let back = EmbeddingSet::read_text(&buf[..]).unwrap();
        for (a, b) in back.target().as_slice().iter().zip(s.target().as_slice()) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn persist_restore_files() {
        let dir = tempfile::tempdir().unwrap();
        let s = random_set(5, 3, 11);
        let bin = dir.path().join("e.bin");
        let txt = dir.path().join("e.txt");
        s.persist(&bin, Format::Binary).unwrap();
        s.persist(&txt, Format::Text).unwrap();
        assert_eq!(EmbeddingSet::restore(&bin).unwrap(), s);
        assert_eq!(EmbeddingSet::restore(&txt).unwrap().words(), s.words());
    }

    proptest! {
        #[test]
        fn similarity_is_symmetric(
            u in proptest::collection::vec(-10.0f32..10.0, 1..16),
            seed in 0u64..100,
        ) {
            let mut rng = crate::rng::seeded(seed);
            let v: Vec<f32> = u.iter().map(|_| rng.random_range(-10.0..10.0)).collect();
            for m in Metric::ALL {
                let a = similarity(&u, &v, m);
                let b = similarity(&v, &u, m);
                match (a, b) {
                    (Ok(a), Ok(b)) => prop_assert_eq!(a.to_bits(), b.to_bits()),
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "asymmetric failure"),
                }
            }
        }

        #[test]
        fn cosine_scale_invariant(
            u in proptest::collection::vec(-10.0f32..10.0, 2..16),
            e in -20i32..20,
            k in 0.01f32..100.0,
        ) {
            prop_assume!(u.iter().any(|&x| x != 0.0));
            let v: Vec<f32> = u.iter().rev().map(|x| x + 0.5).collect();
            prop_assume!(v.iter().any(|&x| x != 0.0));
            let a = similarity(&u, &v, Metric::Cosine).unwrap();
            // power-of-two scales are exact in f32, so only the f64 path matters
            let exact: Vec<f32> = u.iter().map(|x| x * 2f32.powi(e)).collect();
            prop_assert!((a - similarity(&exact, &v, Metric::Cosine).unwrap()).abs() <= 1e-12);
            // arbitrary scales round each coordinate to f32 first
            let rounded: Vec<f32> = u.iter().map(|x| x * k).collect();
            prop_assert!((a - similarity(&rounded, &v, Metric::Cosine).unwrap()).abs() <= 1e-6);
        }
    }
}
