use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use super::{Corpus, Lexicon};
use crate::error::{Error, Result};

/// Retained words with their corpus counts. IDs run `0..len()` in order of
/// descending count, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    lexicon: Arc<Lexicon>,
    counts: Vec<u64>,
    min_count: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from `(word, count)` pairs, ordering them by the
    /// canonical rule. Pairs under `min_count` are discarded.
    pub fn from_counts(
        mut pairs: Vec<(String, u64)>,
        min_count: u64,
    ) -> std::result::Result<Self, String> {
        pairs.retain(|(_, c)| *c >= min_count && *c > 0);
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let counts = pairs.iter().map(|p| p.1).collect();
        let lexicon = Lexicon::from_words(pairs.into_iter().map(|p| p.0).collect())?;
        Ok(Self {
            lexicon: Arc::new(lexicon),
            counts,
            min_count,
        })
    }

    pub fn lexicon(&self) -> &Arc<Lexicon> {
        &self.lexicon
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.lexicon.id(word)
    }

    pub fn word(&self, id: u32) -> &str {
        self.lexicon.word(id)
    }

    pub fn words(&self) -> &[String] {
        self.lexicon.words()
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count_of(&self, word: &str) -> Option<u64> {
        self.id(word).map(|id| self.count(id))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lexicon.id(word).is_some()
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// TSV with header `word<TAB>count`, one word per line in ID order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "word\tcount")?;
        for (w, c) in self.words().iter().zip(&self.counts) {
            writeln!(out, "{w}\t{c}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the TSV written by [`Vocabulary::write_tsv`]. The stored order
    /// must already be canonical; `min_count` is taken as the smallest count.
    pub fn read_tsv<R: Read>(input: R) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut lines = reader.lines();
        match lines.next().transpose()? {
            Some(h) if h.trim_end() == "word\tcount" => {}
            _ => return Err(Error::parse("line 1", "expected header `word\\tcount`")),
        }
        let mut pairs: Vec<(String, u64)> = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.is_empty() {
                continue;
            }
            let (w, c) = line.split_once('\t').ok_or_else(|| {
                Error::parse(
                    format!("line {lineno}"),
                    "expected two tab-separated fields",
                )
            })?;
            let c: u64 = c
                .trim()
                .parse()
                .map_err(|_| Error::parse(format!("line {lineno}"), format!("bad count {c:?}")))?;
            if let Some(prev) = pairs.last() {
                if prev.1 < c || (prev.1 == c && prev.0.as_str() >= w) {
                    return Err(Error::parse(
                        format!("line {lineno}"),
                        "entries must be sorted by descending count, then word",
                    ));
                }
            }
            pairs.push((w.to_owned(), c));
        }
        let min_count = pairs.last().map(|p| p.1).unwrap_or(0);
        Vocabulary::from_counts(pairs, min_count).map_err(|w| Error::DuplicateWord {
            word: w,
            location: "vocabulary file".into(),
        })
    }
}

/// Counts every token of a raw-stage corpus and keeps words seen at least
/// `min_count` times.
pub fn build_vocab(corpus: &Corpus, min_count: u64) -> Vocabulary {
    Vocabulary::from_counts(corpus.word_counts(), min_count).expect("lexicon words are unique")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus_with(counts: &[(&str, usize)]) -> Corpus {
        let mut sentence = Vec::new();
        for &(w, n) in counts {
            sentence.extend(std::iter::repeat_n(w, n));
        }
        Corpus::from_sentences([sentence])
    }

    #[test]
    fn threshold() {
        let v = build_vocab(&corpus_with(&[("a", 150), ("b", 99)]), 100);
        assert_eq!(v.words(), &["a".to_string()]);
        assert_eq!(v.count(0), 150);
        assert!(!v.contains("b"));
    }

    #[test]
    fn empty_corpus() {
        let c = Corpus::from_sentences(Vec::<Vec<&str>>::new());
        assert!(build_vocab(&c, 1).is_empty());
    }

    #[test]
    fn ties_are_lexicographic() {
        let v = build_vocab(&corpus_with(&[("b", 5), ("a", 5)]), 1);
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.id("b"), Some(1));
    }

    #[test]
    fn descending_count_order() {
        let v = build_vocab(&corpus_with(&[("x", 1), ("y", 7), ("z", 3)]), 1);
        assert_eq!(v.words(), &["y", "z", "x"]);
        assert_eq!(v.counts(), &[7, 3, 1]);
    }

    #[test]
    fn tsv_round_trip() {
        let v = build_vocab(&corpus_with(&[("b", 5), ("a", 5), ("c", 9)]), 1);
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "word\tcount\nc\t9\na\t5\nb\t5\n"
        );
        let back = Vocabulary::read_tsv(&buf[..]).unwrap();
        assert_eq!(back.words(), v.words());
        assert_eq!(back.counts(), v.counts());
    }

    #[test]
    fn tsv_errors() {
        assert!(Vocabulary::read_tsv(&b"w\tc\n"[..]).is_err());
        assert!(matches!(
            Vocabulary::read_tsv(&b"word\tcount\na\t1\nb\t2\n"[..]),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            Vocabulary::read_tsv(&b"word\tcount\na\tx\n"[..]),
            Err(Error::Parse { .. })
        ));
    }
}
