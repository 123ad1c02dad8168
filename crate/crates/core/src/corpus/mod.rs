//! Sentence corpora: ingestion, vocabularies, shuffled controls and
//! frequency-targeted resampling.
//!
//! A [`Corpus`] stores token IDs into a shared [`Lexicon`]. Freshly ingested
//! text lives in the "raw" stage, where the lexicon holds every distinct
//! token in order of first appearance. [`Corpus::encode`] maps a raw corpus
//! onto a pruned [`Vocabulary`], dropping out-of-vocabulary tokens.

mod preprocess;
mod resample;
mod vocab;

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use preprocess::{normalize_sentence, preprocess, preprocess_reader, split_documents};
pub use resample::{balance_frequencies, resample, ResampleReport};
pub use vocab::{build_vocab, Vocabulary};

/// Interned word list: token ID `i` is `words[i]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    words: Vec<String>,
    index: FxHashMap<String, u32>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a lexicon from unique words. Returns the first duplicate on failure.
    pub fn from_words(words: Vec<String>) -> std::result::Result<Self, String> {
        let mut index = FxHashMap::default();
        index.reserve(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(w.clone());
            }
        }
        Ok(Self { words, index })
    }

    pub fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(word.to_owned());
        self.index.insert(word.to_owned(), id);
        id
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// How a corpus came to be.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Shuffled {
        seed: u64,
    },
    Resampled {
        word: String,
        target: usize,
        seed: u64,
    },
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Original => f.write_str("original"),
            Provenance::Shuffled { seed } => write!(f, "shuffled(seed={seed})"),
            Provenance::Resampled { word, target, seed } => {
                write!(f, "resampled(word={word}, target={target}, seed={seed})")
            }
        }
    }
}

/// Ordered sentences of token IDs. Tokens are stored flat; `ends[k]` is the
/// exclusive end offset of sentence `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    lexicon: Arc<Lexicon>,
    tokens: Vec<u32>,
    ends: Vec<usize>,
    provenance: Provenance,
}

impl Corpus {
    pub fn empty(lexicon: Arc<Lexicon>) -> Self {
        Self {
            lexicon,
            tokens: Vec::new(),
            ends: Vec::new(),
            provenance: Provenance::Original,
        }
    }

    /// Builds a raw-stage corpus from tokenized sentences. Empty sentences are skipped.
    pub fn from_sentences<S, T>(sentences: impl IntoIterator<Item = S>) -> Self
    where
        S: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let mut builder = CorpusBuilder::new();
        for s in sentences {
            builder.push_sentence(s);
        }
        builder.finish()
    }

    /// Assembles a corpus from flat token IDs and sentence end offsets.
    pub fn from_parts(
        lexicon: Arc<Lexicon>,
        tokens: Vec<u32>,
        ends: Vec<usize>,
        provenance: Provenance,
    ) -> Result<Self> {
        let mut prev = 0;
        for &e in &ends {
            if e < prev || e > tokens.len() {
                return Err(Error::Config(
                    "sentence offsets must be ascending and in range".into(),
                ));
            }
            prev = e;
        }
        if prev != tokens.len() {
            return Err(Error::Config(
                "sentence offsets do not cover every token".into(),
            ));
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= lexicon.len()) {
            return Err(Error::Config(format!(
                "token id {bad} is outside the lexicon"
            )));
        }
        Ok(Self {
            lexicon,
            tokens,
            ends,
            provenance,
        })
    }

    pub fn lexicon(&self) -> &Arc<Lexicon> {
        &self.lexicon
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn num_sentences(&self) -> usize {
        self.ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn sentence(&self, k: usize) -> &[u32] {
        let start = if k == 0 { 0 } else { self.ends[k - 1] };
        &self.tokens[start..self.ends[k]]
    }

    pub fn sentences(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        (0..self.ends.len()).map(move |k| self.sentence(k))
    }

    pub fn sentence_lengths(&self) -> Vec<usize> {
        self.sentences().map(<[u32]>::len).collect()
    }

    /// Occurrence count per lexicon ID.
    pub fn counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.lexicon.len()];
        for &t in &self.tokens {
            counts[t as usize] += 1;
        }
        counts
    }

    /// Occurrences of `word`, zero when the word is not in the lexicon.
    pub fn count_of(&self, word: &str) -> u64 {
        match self.lexicon.id(word) {
            Some(id) => self.tokens.iter().filter(|&&t| t == id).count() as u64,
            None => 0,
        }
    }

    pub fn word_counts(&self) -> Vec<(String, u64)> {
        self.counts()
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(i, c)| (self.lexicon.word(i as u32).to_owned(), c))
            .collect()
    }

    /// Re-expresses the corpus in vocabulary IDs, dropping out-of-vocabulary
    /// tokens and any sentence left empty.
    pub fn encode(&self, vocab: &Vocabulary) -> Corpus {
        let map: Vec<Option<u32>> = self.lexicon.words().iter().map(|w| vocab.id(w)).collect();
        let mut tokens = Vec::with_capacity(self.tokens.len());
        let mut ends = Vec::with_capacity(self.ends.len());
        for s in self.sentences() {
            let before = tokens.len();
            tokens.extend(s.iter().filter_map(|&t| map[t as usize]));
            if tokens.len() > before {
                ends.push(tokens.len());
            }
        }
        Corpus {
            lexicon: vocab.lexicon().clone(),
            tokens,
            ends,
            provenance: self.provenance.clone(),
        }
    }

    /// Writes one sentence per line, tokens joined by a single space.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let mut line = String::new();
        for s in self.sentences() {
            line.clear();
            for (i, &t) in s.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(self.lexicon.word(t));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the one-sentence-per-line format into a raw-stage corpus.
    pub fn read_from<R: Read>(input: R) -> Result<Corpus> {
        let mut reader = BufReader::new(input);
        let mut builder = CorpusBuilder::new();
        let mut buf = Vec::new();
        let mut offset = 0usize;
        loop {
            buf.clear();
            let n = reader.read_until(b'\n', &mut buf)?;
            if n == 0 {
                break;
            }
            let line = std::str::from_utf8(&buf).map_err(|e| Error::Decode {
                offset: offset + e.valid_up_to(),
            })?;
            offset += n;
            builder.push_sentence(line.split_whitespace());
        }
        Ok(builder.finish())
    }
}

/// Incremental raw-stage corpus construction with interning.
#[derive(Debug, Default)]
pub struct CorpusBuilder {
    lexicon: Lexicon,
    tokens: Vec<u32>,
    ends: Vec<usize>,
}

impl CorpusBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_sentence<T: AsRef<str>>(&mut self, words: impl IntoIterator<Item = T>) {
        let before = self.tokens.len();
        for w in words {
            let id = self.lexicon.intern(w.as_ref());
            self.tokens.push(id);
        }
        if self.tokens.len() > before {
            self.ends.push(self.tokens.len());
        }
    }

    pub fn finish(self) -> Corpus {
        Corpus {
            lexicon: Arc::new(self.lexicon),
            tokens: self.tokens,
            ends: self.ends,
            provenance: Provenance::Original,
        }
    }
}

/// Globally permutes every token (Fisher–Yates) and re-cuts the stream into
/// the original sentence lengths. Word counts and sentence lengths are kept.
pub fn shuffle_tokens(corpus: &Corpus, seed: u64) -> Result<Corpus> {
    if corpus.is_empty() {
        return Err(Error::Empty("cannot shuffle an empty corpus"));
    }
    let mut tokens = corpus.tokens.clone();
    let mut rng = rng::seeded(seed);
    tokens.shuffle(&mut rng);
    Ok(Corpus {
        lexicon: corpus.lexicon.clone(),
        tokens,
        ends: corpus.ends.clone(),
        provenance: Provenance::Shuffled { seed },
    })
}
