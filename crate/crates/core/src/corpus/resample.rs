use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Provenance};
use crate::error::{Error, Result};
use crate::rng;

/// What a resampling pass did to the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResampleReport {
    pub word: String,
    pub count_before: u64,
    pub count_after: u64,
    pub target: u64,
    pub sentences_dropped: usize,
    pub sentences_replicated: usize,
    /// Count change (after minus before) for each watched word.
    pub side_effect_counts: BTreeMap<String, i64>,
}

/// Moves the frequency of `word` towards `target_count`.
///
/// Above target, sentences containing the word are dropped in uniformly
/// random order until the count first falls to the target or below. Below
/// target, uniformly chosen containing sentences (with replacement) are
/// appended until the count first reaches the target or above. Sentences
/// without the word are never touched.
pub fn resample(
    corpus: &Corpus,
    word: &str,
    target_count: u64,
    seed: u64,
    watch: &[&str],
) -> Result<(Corpus, ResampleReport)> {
    if target_count == 0 {
        return Err(Error::InvalidTarget(0));
    }
    let id = corpus
        .lexicon()
        .id(word)
        .ok_or_else(|| Error::UnknownWord(word.to_owned()))?;

    // (sentence index, occurrences of the word in it)
    let containing: Vec<(usize, u64)> = corpus
        .sentences()
        .enumerate()
        .filter_map(|(k, s)| {
            let n = s.iter().filter(|&&t| t == id).count() as u64;
            (n > 0).then_some((k, n))
        })
        .collect();
    let before: u64 = containing.iter().map(|c| c.1).sum();
    if before == 0 {
        return Err(Error::UnknownWord(word.to_owned()));
    }

    let mut rng = rng::seeded(seed);
    let mut count = before;
    let mut dropped = vec![false; corpus.num_sentences()];
    let mut n_dropped = 0;
    let mut replicas: Vec<usize> = Vec::new();

    if count > target_count {
        let mut order: Vec<(usize, u64)> = containing.clone();
        order.shuffle(&mut rng);
        for (k, n) in order {
            if count <= target_count {
                break;
            }
            dropped[k] = true;
            n_dropped += 1;
            count -= n;
        }
    } else if count < target_count {
        while count < target_count {
            let (k, n) = containing[rng.random_range(0..containing.len())];
            replicas.push(k);
            count += n;
        }
    }

    let mut tokens = Vec::with_capacity(corpus.token_count());
    let mut ends = Vec::with_capacity(corpus.num_sentences() + replicas.len());
    for (k, s) in corpus.sentences().enumerate() {
        if !dropped[k] {
            tokens.extend_from_slice(s);
            ends.push(tokens.len());
        }
    }
    for &k in &replicas {
        tokens.extend_from_slice(corpus.sentence(k));
        ends.push(tokens.len());
    }
    let out = Corpus::from_parts(
        corpus.lexicon().clone(),
        tokens,
        ends,
        Provenance::Resampled {
            word: word.to_owned(),
            target: target_count as usize,
            seed,
        },
    )?;

    let side_effect_counts = watch
        .iter()
        .map(|&w| {
            let delta = out.count_of(w) as i64 - corpus.count_of(w) as i64;
            (w.to_owned(), delta)
        })
        .collect();

    let report = ResampleReport {
        word: word.to_owned(),
        count_before: before,
        count_after: count,
        target: target_count,
        sentences_dropped: n_dropped,
        sentences_replicated: replicas.len(),
        side_effect_counts,
    };
    debug_assert_eq!(out.count_of(word), count);
    Ok((out, report))
}

/// Oversamples sentences containing the rarer of two words until its count
/// first reaches the other's. Equal counts leave the corpus unchanged.
pub fn balance_frequencies(
    corpus: &Corpus,
    word_a: &str,
    word_b: &str,
    seed: u64,
) -> Result<(Corpus, ResampleReport)> {
    let count_a = corpus.count_of(word_a);
    let count_b = corpus.count_of(word_b);
    if count_a == 0 {
        return Err(Error::UnknownWord(word_a.to_owned()));
    }
    if count_b == 0 {
        return Err(Error::UnknownWord(word_b.to_owned()));
    }
    if count_a <= count_b {
        resample(corpus, word_a, count_b, seed, &[word_b])
    } else {
        resample(corpus, word_b, count_a, seed, &[word_a])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn with_word(n_with: usize, word: &str, n_without: usize) -> Corpus {
        let mut sentences: Vec<Vec<String>> = Vec::new();
        for i in 0..n_with {
            sentences.push(vec![word.into(), format!("f{}", i % 7)]);
        }
        for i in 0..n_without {
            sentences.push(vec![format!("g{}", i % 5), "z".into()]);
        }
        Corpus::from_sentences(sentences)
    }

    /// Independent simulation of the drop loop: sentences with one
    /// occurrence each always land exactly on the target.
    fn simulate_drop(counts: &[u64], target: u64) -> u64 {
        let mut total: u64 = counts.iter().sum();
        for &c in counts {
            if total <= target {
                break;
            }
            total -= c;
        }
        total
    }

    #[test]
    fn undersample_single_occurrence_lands_exactly() {
        let c = with_word(1000, "he", 50);
        assert_eq!(simulate_drop(&vec![1; 1000], 100), 100);
        let (out, report) = resample(&c, "he", 100, 5, &["z"]).unwrap();
        assert_eq!(out.count_of("he"), 100);
        assert_eq!(report.count_after, 100);
        assert_eq!(report.sentences_dropped, 900);
        assert_eq!(report.sentences_replicated, 0);
        assert_eq!(report.side_effect_counts["z"], 0);
        assert_eq!(out.count_of("z"), 50);
    }

    #[test]
    fn oversample_single_occurrence_lands_exactly() {
        let c = with_word(50, "b", 10);
        let (out, report) = resample(&c, "b", 200, 1, &[]).unwrap();
        assert_eq!(out.count_of("b"), 200);
        assert_eq!(report.sentences_replicated, 150);
        assert_eq!(report.sentences_dropped, 0);
        // replicas are appended after the untouched original sentences
        assert_eq!(out.num_sentences(), 60 + 150);
        for k in 0..60 {
            assert_eq!(out.sentence(k), c.sentence(k));
        }
    }

    #[test]
    fn equal_target_is_identity() {
        let c = with_word(30, "b", 10);
        let (out, report) = resample(&c, "b", 30, 1, &[]).unwrap();
        assert_eq!(out.tokens(), c.tokens());
        assert_eq!(out.sentence_lengths(), c.sentence_lengths());
        assert_eq!(
            (report.sentences_dropped, report.sentences_replicated),
            (0, 0)
        );
    }

    #[test]
    fn errors() {
        let c = with_word(3, "b", 1);
        assert!(matches!(
            resample(&c, "nope", 3, 0, &[]),
            Err(Error::UnknownWord(_))
        ));
        assert!(matches!(
            resample(&c, "b", 0, 0, &[]),
            Err(Error::InvalidTarget(0))
        ));
    }

    #[test]
    fn balance_picks_rarer_word() {
        let mut s: Vec<Vec<&str>> = Vec::new();
        s.extend(std::iter::repeat_n(vec!["a", "x"], 100));
        s.extend(std::iter::repeat_n(vec!["b", "y"], 10));
        let c = Corpus::from_sentences(s);
        let (out, report) = balance_frequencies(&c, "a", "b", 3).unwrap();
        assert_eq!(report.word, "b");
        assert_eq!(out.count_of("b"), 100);
        assert_eq!(out.count_of("a"), 100);

        let (out, report) = balance_frequencies(&c, "b", "a", 3).unwrap();
        assert_eq!(report.word, "b");
        assert_eq!(out.count_of("b"), 100);
    }

    #[test]
    fn balance_equal_is_identity() {
        let mut s: Vec<Vec<&str>> = Vec::new();
        s.extend(std::iter::repeat_n(vec!["a"], 100));
        s.extend(std::iter::repeat_n(vec!["b"], 100));
        let c = Corpus::from_sentences(s);
        let (out, report) = balance_frequencies(&c, "a", "b", 3).unwrap();
        assert_eq!(out.tokens(), c.tokens());
        assert_eq!(report.sentences_replicated, 0);
    }

    #[test]
    fn balance_rarer_first_argument() {
        let mut s: Vec<Vec<&str>> = Vec::new();
        s.extend(std::iter::repeat_n(vec!["a"], 10));
        s.extend(std::iter::repeat_n(vec!["b"], 100));
        let c = Corpus::from_sentences(s);
        let (out, report) = balance_frequencies(&c, "a", "b", 3).unwrap();
        assert_eq!(report.word, "a");
        assert_eq!(out.count_of("a"), 100);
    }

    proptest! {
        #[test]
        fn landing_bound_and_untouched_sentences(
            occ in proptest::collection::vec(0u64..4, 1..60),
            target in 1u64..200,
            seed in 0u64..1000,
        ) {
            prop_assume!(occ.iter().any(|&n| n > 0));
            let sentences: Vec<Vec<String>> = occ
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    let mut s = vec![format!("o{i}")];
                    s.extend(std::iter::repeat_n("w".to_string(), n as usize));
                    s
                })
                .collect();
            let c = Corpus::from_sentences(sentences);
            let max_per_sentence = *occ.iter().max().unwrap();
            let (out, report) = resample(&c, "w", target, seed, &[]).unwrap();
            let after = out.count_of("w");
            prop_assert_eq!(after, report.count_after);
            let gap = after.abs_diff(target);
            prop_assert!(gap < max_per_sentence, "gap {} max {}", gap, max_per_sentence);
            prop_assert!(report.sentences_dropped == 0 || report.sentences_replicated == 0);
            // every output sentence exists in the input; sentences without
            // the word all survive
            let wid = c.lexicon().id("w").unwrap();
            let originals: Vec<&[u32]> = c.sentences().collect();
            for s in out.sentences() {
                prop_assert!(originals.contains(&s));
            }
            let kept_without = out.sentences().take(out.num_sentences() - report.sentences_replicated)
                .filter(|s| !s.contains(&wid)).count();
            let had_without = c.sentences().filter(|s| !s.contains(&wid)).count();
            prop_assert_eq!(kept_without, had_without);
        }

        #[test]
        fn resample_is_reproducible(seed in 0u64..500, target in 1u64..40) {
            let c = with_word(20, "b", 5);
            let a = resample(&c, "b", target, seed, &[]).unwrap();
            let b = resample(&c, "b", target, seed, &[]).unwrap();
            prop_assert_eq!(a.0, b.0);
            prop_assert_eq!(a.1, b.1);
        }
    }
}
