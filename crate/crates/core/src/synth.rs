//! Seeded synthetic corpora for experiments without a text dump at hand.
//!
//! Tokens are drawn from a Zipf law over pronounceable pseudo-words. With no
//! topics the result is statistically a shuffled corpus: frequencies follow
//! the law and co-occurrences carry no information. Topics add sentence-level
//! structure, and planted words get controlled, single-occurrence counts in
//! sentences no other planted word touches.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;

use crate::corpus::{Corpus, Lexicon, Provenance};
use crate::rng;

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Deterministic pseudo-word for an index: at least two consonant-vowel
/// syllables, unique per index.
pub fn pseudo_word(index: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut n = index + base;
    let mut syllables = Vec::new();
    while n > 0 {
        let s = n % base;
        syllables.push([CONSONANTS[s / VOWELS.len()], VOWELS[s % VOWELS.len()]]);
        n /= base;
    }
    syllables
        .iter()
        .rev()
        .flatten()
        .map(|&b| b as char)
        .collect()
}

#[derive(Debug, Clone)]
pub struct ZipfCorpus {
    vocab_size: usize,
    n_tokens: usize,
    exponent: f64,
    sentence_len: (usize, usize),
    topics: usize,
    topic_strength: f64,
    planted: Vec<(String, usize)>,
    seed: u64,
}

impl ZipfCorpus {
    pub fn new(vocab_size: usize, n_tokens: usize) -> Self {
        Self {
            vocab_size,
            n_tokens,
            exponent: 1.0,
            sentence_len: (8, 24),
            topics: 0,
            topic_strength: 0.0,
            planted: Vec::new(),
            seed: 0,
        }
    }

    pub fn exponent(mut self, s: f64) -> Self {
        self.exponent = s;
        self
    }

    pub fn sentence_len(mut self, min: usize, max: usize) -> Self {
        assert!(min >= 1 && min <= max);
        self.sentence_len = (min, max);
        self
    }

    /// Each sentence draws a share `strength` of its tokens from one of
    /// `k` topic vocabularies.
    pub fn topics(mut self, k: usize, strength: f64) -> Self {
        self.topics = k;
        self.topic_strength = strength.clamp(0.0, 1.0);
        self
    }

    /// Places `word` once in each of `count` distinct sentences.
    pub fn plant(mut self, word: impl Into<String>, count: usize) -> Self {
        self.planted.push((word.into(), count));
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn generate(&self) -> Corpus {
        let mut rng = rng::seeded(self.seed);
        let mut lexicon = Lexicon::new();
        for i in 0..self.vocab_size {
            lexicon.intern(&pseudo_word(i));
        }
        let planted_ids: Vec<u32> = self
            .planted
            .iter()
            .map(|(w, _)| lexicon.intern(w))
            .collect();

        let weights: Vec<f64> = (1..=self.vocab_size)
            .map(|r| (r as f64).powf(-self.exponent))
            .collect();
        let global = WeightedIndex::new(&weights).expect("vocab_size must be positive");

        let topic_samplers: Vec<(Vec<u32>, WeightedIndex<f64>)> = (0..self.topics)
            .filter_map(|t| {
                let members: Vec<u32> = (0..self.vocab_size as u32)
                    .filter(|&i| (i as usize).wrapping_mul(2_654_435_761) % self.topics == t)
                    .collect();
                let w: Vec<f64> = members.iter().map(|&i| weights[i as usize]).collect();
                WeightedIndex::new(&w).ok().map(|d| (members, d))
            })
            .collect();

        let mut tokens = Vec::with_capacity(self.n_tokens);
        let mut ends = Vec::new();
        while tokens.len() < self.n_tokens {
            let len = rng
                .random_range(self.sentence_len.0..=self.sentence_len.1)
                .min(self.n_tokens - tokens.len());
            let topic = (!topic_samplers.is_empty())
                .then(|| &topic_samplers[rng.random_range(0..topic_samplers.len())]);
            for _ in 0..len {
                let id = match topic {
                    Some((members, dist)) if rng.random_bool(self.topic_strength) => {
                        members[dist.sample(&mut rng)]
                    }
                    _ => global.sample(&mut rng) as u32,
                };
                tokens.push(id);
            }
            ends.push(tokens.len());
        }

        let total_planted: usize = self.planted.iter().map(|p| p.1).sum();
        assert!(
            total_planted <= ends.len(),
            "{total_planted} planted occurrences need at least as many sentences ({})",
            ends.len()
        );
        let chosen = index::sample(&mut rng, ends.len(), total_planted).into_vec();
        let mut next = chosen.into_iter();
        for (&id, (_, count)) in planted_ids.iter().zip(&self.planted) {
            for k in next.by_ref().take(*count) {
                let start = if k == 0 { 0 } else { ends[k - 1] };
                let pos = rng.random_range(start..ends[k]);
                tokens[pos] = id;
            }
        }

        Corpus::from_parts(Arc::new(lexicon), tokens, ends, Provenance::Original)
            .expect("generated ids are in range")
    }
}
