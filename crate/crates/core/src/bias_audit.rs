//! Word-embedding bias: the difference between a target word's mean cosine
//! similarity to two context groups, gender-norm target lists and the
//! per-frequency-bin aggregation used to compare resampled corpora.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::freq_analysis::{frequency_bin, FrequencyBinning};
use crate::rng;
use crate::stats::{self, bootstrap_mean_ci};
use crate::store::EmbeddingSet;

pub use crate::stats::BootstrapCi;

/// The two context groups a bias score contrasts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextGroups {
    label: String,
    a: Vec<String>,
    b: Vec<String>,
}

impl ContextGroups {
    /// Nonempty, disjoint groups.
    pub fn new(label: impl Into<String>, a: Vec<String>, b: Vec<String>) -> Result<Self> {
        let g = Self::allow_overlap(label, a, b)?;
        if let Some(w) = g.a.iter().find(|w| g.b.contains(w)) {
            return Err(Error::Config(format!(
                "word {w:?} is in both context groups"
            )));
        }
        Ok(g)
    }

    /// Like [`ContextGroups::new`] but the groups may share words, as in a
    /// null audit with `A = B`.
    pub fn allow_overlap(label: impl Into<String>, a: Vec<String>, b: Vec<String>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::Empty("context group A"));
        }
        if b.is_empty() {
            return Err(Error::Empty("context group B"));
        }
        Ok(Self {
            label: label.into(),
            a,
            b,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn a(&self) -> &[String] {
        &self.a
    }

    pub fn b(&self) -> &[String] {
        &self.b
    }

    /// The same groups with `A` and `B` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            label: self.label.clone(),
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }
}

fn cosine64(u: &[f64], v: &[f64]) -> Option<f64> {
    let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    (uu > 0.0 && vv > 0.0).then(|| uv / (uu.sqrt() * vv.sqrt()))
}

/// Bias of vector `x`: mean cosine to the `a` vectors minus mean cosine to
/// the `b` vectors. `None` when any vector is zero.
pub fn bias_of_vectors(x: &[f64], a: &[&[f64]], b: &[&[f64]]) -> Option<f64> {
    let mean_cos = |group: &[&[f64]]| -> Option<f64> {
        let sims = group
            .iter()
            .map(|g| cosine64(x, g))
            .collect::<Option<Vec<f64>>>()?;
        Some(stats::mean(&sims))
    };
    Some(mean_cos(a)? - mean_cos(b)?)
}

fn row64(set: &EmbeddingSet, word: &str) -> Result<Vec<f64>> {
    let v = set.vector(word)?;
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::UndefinedSimilarity {
            word: Some(word.to_owned()),
        });
    }
    Ok(v.iter().map(|&x| x as f64).collect())
}

/// Bias of word `x` in `set` with respect to `groups`, on target rows.
pub fn bias_we(set: &EmbeddingSet, x: &str, groups: &ContextGroups) -> Result<f64> {
    let xv = row64(set, x)?;
    let a = groups
        .a
        .iter()
        .map(|w| row64(set, w))
        .collect::<Result<Vec<_>>>()?;
    let b = groups
        .b
        .iter()
        .map(|w| row64(set, w))
        .collect::<Result<Vec<_>>>()?;
    let a: Vec<&[f64]> = a.iter().map(Vec::as_slice).collect();
    let b: Vec<&[f64]> = b.iter().map(Vec::as_slice).collect();
    bias_of_vectors(&xv, &a, &b).ok_or(Error::UndefinedSimilarity {
        word: Some(x.to_owned()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenderClass {
    Male,
    Female,
    Neutral,
}

impl GenderClass {
    pub const ALL: [GenderClass; 3] =
        [GenderClass::Male, GenderClass::Female, GenderClass::Neutral];

    /// Male at femaleness ≤ 2, female at ≥ 6, neutral in between.
    pub fn classify(femaleness: f64) -> Self {
        if femaleness <= 2.0 {
            GenderClass::Male
        } else if femaleness >= 6.0 {
            GenderClass::Female
        } else {
            GenderClass::Neutral
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GenderClass::Male => "male",
            GenderClass::Female => "female",
            GenderClass::Neutral => "neutral",
        }
    }
}

impl fmt::Display for GenderClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A normed target word on the femaleness scale (7 = most feminine).
#[derive(Debug, Clone, PartialEq)]
pub struct NormEntry {
    pub word: String,
    pub femaleness: f64,
    pub class: GenderClass,
}

impl NormEntry {
    /// From a raw rating on the 1 (feminine) to 7 (masculine) scale.
    pub fn from_raw(word: impl Into<String>, raw: f64) -> Result<Self> {
        if !(1.0..=7.0).contains(&raw) {
            return Err(Error::OutOfRange {
                name: "gender_norm",
                value: raw.to_string(),
                expected: "1 <= gender_norm <= 7",
            });
        }
        let femaleness = 8.0 - raw;
        Ok(Self {
            word: word.into(),
            femaleness,
            class: GenderClass::classify(femaleness),
        })
    }
}

#[derive(Deserialize)]
struct RawNorm {
    word: String,
    gender_norm: f64,
    is_homonym: String,
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "y" | "t" => Some(true),
        "false" | "0" | "no" | "n" | "f" | "" => Some(false),
        _ => None,
    }
}

/// Reads a norms CSV with columns `word,gender_norm,is_homonym`. Homonyms
/// and words with uppercase characters are dropped.
pub fn read_norms<R: Read>(input: R) -> Result<Vec<NormEntry>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    for col in ["word", "gender_norm", "is_homonym"] {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::parse("line 1", format!("missing column {col:?}")));
        }
    }
    let mut out = Vec::new();
    for (i, rec) in r.deserialize::<RawNorm>().enumerate() {
        let line = i + 2;
        let raw = rec.map_err(|e| Error::parse(format!("line {line}"), e.to_string()))?;
        let homonym = parse_flag(&raw.is_homonym).ok_or_else(|| {
            Error::parse(
                format!("line {line}"),
                format!("is_homonym {:?} is not a boolean", raw.is_homonym),
            )
        })?;
        let entry = NormEntry::from_raw(raw.word, raw.gender_norm)?;
        if homonym || entry.word.chars().any(char::is_uppercase) {
            continue;
        }
        out.push(entry);
    }
    Ok(out)
}

pub fn load_norms(path: impl AsRef<Path>) -> Result<Vec<NormEntry>> {
    read_norms(std::fs::File::open(path)?)
}

/// Norm entries whose word is in every vocabulary and falls in the same
/// frequency bin in all of them. `binnings[k]` must bin `vocabularies[k]`.
pub fn filter_targets(
    norms: &[NormEntry],
    vocabularies: &[&Vocabulary],
    binnings: &[&FrequencyBinning],
) -> Result<Vec<NormEntry>> {
    if vocabularies.len() != binnings.len() {
        return Err(Error::DimensionMismatch {
            left: vocabularies.len(),
            right: binnings.len(),
        });
    }
    Ok(norms
        .iter()
        .filter(|n| {
            let bins: Option<BTreeSet<u32>> = vocabularies
                .iter()
                .zip(binnings)
                .map(|(v, b)| v.id(&n.word).map(|id| b.bin_of(id as usize)))
                .collect();
            bins.is_some_and(|b| b.len() == 1)
        })
        .cloned()
        .collect())
}

/// One embedding set under audit, with the vocabulary of its corpus.
#[derive(Debug, Clone, Copy)]
pub struct AuditedCorpus<'a> {
    pub id: &'a str,
    pub set: &'a EmbeddingSet,
    pub vocab: &'a Vocabulary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_resamples: 1000,
            level: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasRow {
    pub corpus_id: String,
    pub word: String,
    pub bin: u32,
    pub class: GenderClass,
    pub bias: f64,
}

/// Mean bias of one (corpus, bin, class) group; class `all` pools the
/// classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasAggregate {
    pub corpus_id: String,
    pub bin: u32,
    pub class: String,
    pub n: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    pub rows: Vec<BiasRow>,
    pub aggregates: Vec<BiasAggregate>,
}

impl BiasReport {
    pub fn aggregate(&self, corpus_id: &str, bin: u32, class: &str) -> Option<&BiasAggregate> {
        self.aggregates
            .iter()
            .find(|a| a.corpus_id == corpus_id && a.bin == bin && a.class == class)
    }

    /// Header `corpus_id,word,bin,class,bias`.
    pub fn write_rows_csv<W: Write>(&self, out: W) -> Result<()> {
        write_all(&self.rows, out)
    }

    /// Header `corpus_id,bin,class,n,mean,ci_low,ci_high`.
    pub fn write_aggregates_csv<W: Write>(&self, out: W) -> Result<()> {
        write_all(&self.aggregates, out)
    }
}

fn write_all<T: Serialize, W: Write>(items: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for it in items {
        w.serialize(it)?;
    }
    w.flush()?;
    Ok(())
}

/// Scores every target in every corpus and aggregates by frequency bin and
/// class, with percentile-bootstrap intervals. Rows are ordered by corpus
/// then target; aggregates by corpus, bin, then class.
pub fn bias_experiment(
    corpora: &[AuditedCorpus<'_>],
    targets: &[NormEntry],
    groups: &ContextGroups,
    bootstrap: &BootstrapConfig,
) -> Result<BiasReport> {
    let mut rows = Vec::with_capacity(corpora.len() * targets.len());
    for c in corpora {
        for t in targets {
            let count = c
                .vocab
                .count_of(&t.word)
                .ok_or_else(|| Error::UnknownWord(t.word.clone()))?;
            rows.push(BiasRow {
                corpus_id: c.id.to_owned(),
                word: t.word.clone(),
                bin: frequency_bin(count),
                class: t.class,
                bias: bias_we(c.set, &t.word, groups)?,
            });
        }
    }
    let mut aggregates = Vec::new();
    let mut seeds = rng::seeded(bootstrap.seed);
    for c in corpora {
        let mine: Vec<&BiasRow> = rows.iter().filter(|r| r.corpus_id == c.id).collect();
        let bins: BTreeSet<u32> = mine.iter().map(|r| r.bin).collect();
        for bin in bins {
            let in_bin: Vec<&BiasRow> = mine.iter().copied().filter(|r| r.bin == bin).collect();
            let mut groups: Vec<(String, Vec<f64>)> = GenderClass::ALL
                .iter()
                .map(|&cl| {
                    (
                        cl.to_string(),
                        in_bin
                            .iter()
                            .filter(|r| r.class == cl)
                            .map(|r| r.bias)
                            .collect(),
                    )
                })
                .collect();
            groups.push(("all".into(), in_bin.iter().map(|r| r.bias).collect()));
            for (class, values) in groups {
                let seed = seeds.next_u64();
                if values.is_empty() {
                    continue;
                }
                let ci = bootstrap_mean_ci(&values, bootstrap.n_resamples, bootstrap.level, seed)?;
                aggregates.push(BiasAggregate {
                    corpus_id: c.id.to_owned(),
                    bin,
                    class,
                    n: values.len(),
                    mean: ci.mean,
                    ci_low: ci.low,
                    ci_high: ci.high,
                });
            }
        }
    }
    Ok(BiasReport { rows, aggregates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Lexicon;
    use crate::freq_analysis::FrequencyBinning;
    use crate::store::Matrix;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn set(words: &[&str], rows: &[Vec<f32>]) -> EmbeddingSet {
        let lex =
            Arc::new(Lexicon::from_words(words.iter().map(|s| s.to_string()).collect()).unwrap());
        let m = Matrix::from_rows(rows).unwrap();
        let z = Matrix::zeros(m.rows(), m.cols());
        EmbeddingSet::new(lex, m, z).unwrap()
    }

    fn g(a: &[&str], b: &[&str]) -> ContextGroups {
        let v = |s: &[&str]| s.iter().map(|w| w.to_string()).collect();
        ContextGroups::allow_overlap("gender", v(a), v(b)).unwrap()
    }

    #[test]
    fn analytic_value() {
        let s = set(
            &["x", "a", "b"],
            &[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        assert_eq!(bias_we(&s, "x", &g(&["a"], &["b"])).unwrap(), 1.0);
        assert_eq!(bias_we(&s, "x", &g(&["b"], &["a"])).unwrap(), -1.0);
        assert_eq!(bias_we(&s, "x", &g(&["a"], &["a"])).unwrap(), 0.0);
    }

    #[test]
    fn unknown_and_zero_words() {
        let s = set(
            &["x", "a", "z"],
            &[vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 0.0]],
        );
        match bias_we(&s, "x", &g(&["a"], &["nope"])) {
            Err(Error::UnknownWord(w)) => assert_eq!(w, "nope"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            bias_we(&s, "x", &g(&["a"], &["z"])),
            Err(Error::UndefinedSimilarity { word: Some(w) }) if w == "z"
        ));
    }

    #[test]
    fn groups_validation() {
        let v = |s: &[&str]| s.iter().map(|w| w.to_string()).collect::<Vec<_>>();
        assert!(ContextGroups::new("g", v(&["she"]), v(&["he"])).is_ok());
        assert!(ContextGroups::new("g", v(&["she"]), v(&["she"])).is_err());
        assert!(ContextGroups::new("g", v(&[]), v(&["he"])).is_err());
        assert!(ContextGroups::allow_overlap("g", v(&["she"]), v(&["she"])).is_ok());
    }

    #[test]
    fn norm_flip_and_classes() {
        let e = NormEntry::from_raw("queen", 1.0).unwrap();
        assert_eq!((e.femaleness, e.class), (7.0, GenderClass::Female));
        assert_eq!(
            NormEntry::from_raw("chair", 4.0).unwrap().class,
            GenderClass::Neutral
        );
        assert_eq!(
            NormEntry::from_raw("beard", 6.0).unwrap().class,
            GenderClass::Male
        );
        assert_eq!(
            NormEntry::from_raw("dress", 2.0).unwrap().class,
            GenderClass::Female
        );
        assert!(matches!(
            NormEntry::from_raw("x", 7.5),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn norms_csv() {
        let text = "word,gender_norm,is_homonym\nqueen,1.2,false\nParis,4,false\nbank,4,true\nbeard,6.8,0\n";
        let n = read_norms(text.as_bytes()).unwrap();
        let words: Vec<&str> = n.iter().map(|e| e.word.as_str()).collect();
        assert_eq!(words, ["queen", "beard"]);
        assert_eq!(n[1].class, GenderClass::Male);

        let bad = "word,gender_norm,is_homonym\nqueen,1.2,false\nking,heavy,false\n";
        let err = read_norms(bad.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let range = "word,gender_norm,is_homonym\nqueen,0.5,false\n";
        assert!(matches!(
            read_norms(range.as_bytes()),
            Err(Error::OutOfRange { .. })
        ));
        assert!(read_norms("word,norm\nx,1\n".as_bytes()).is_err());
    }

    fn vocab(pairs: &[(&str, u64)]) -> Vocabulary {
        Vocabulary::from_counts(pairs.iter().map(|(w, c)| (w.to_string(), *c)).collect(), 1)
            .unwrap()
    }

    #[test]
    fn target_filter() {
        let norms: Vec<NormEntry> = ["stable", "moves", "missing"]
            .iter()
            .map(|w| NormEntry::from_raw(*w, 4.0).unwrap())
            .collect();
        let v1 = vocab(&[("stable", 150), ("moves", 1500), ("missing", 20)]);
        let v2 = vocab(&[("stable", 170), ("moves", 900)]);
        let v3 = vocab(&[("stable", 110), ("moves", 1100), ("missing", 30)]);
        let b: Vec<FrequencyBinning> = [&v1, &v2, &v3]
            .iter()
            .map(|v| crate::freq_analysis::assign_bins(v).unwrap())
            .collect();
        let kept = filter_targets(&norms, &[&v1, &v2, &v3], &[&b[0], &b[1], &b[2]]).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].word, "stable");
        let reversed = filter_targets(&norms, &[&v3, &v2, &v1], &[&b[2], &b[1], &b[0]]).unwrap();
        assert_eq!(kept, reversed);
    }

    #[test]
    fn degenerate_audit_is_all_zero() {
        let words = ["she", "w1", "w2", "w3", "w4"];
        let rows: Vec<Vec<f32>> = (0..5)
            .map(|i| vec![1.0 + i as f32, (i * i) as f32 - 2.0, 0.5])
            .collect();
        let s = set(&words, &rows);
        let v = vocab(&[
            ("she", 5000),
            ("w1", 200),
            ("w2", 300),
            ("w3", 40),
            ("w4", 70),
        ]);
        // align the set with the vocabulary order
        let ordered: Vec<Vec<f32>> = v
            .words()
            .iter()
            .map(|w| s.vector(w).unwrap().to_vec())
            .collect();
        let s = set(
            &v.words().iter().map(String::as_str).collect::<Vec<_>>(),
            &ordered,
        );
        let targets: Vec<NormEntry> = ["w1", "w2", "w3", "w4"]
            .iter()
            .zip([1.0, 4.0, 7.0, 3.0])
            .map(|(w, r)| NormEntry::from_raw(*w, r).unwrap())
            .collect();
        let audited = [
            AuditedCorpus {
                id: "c1",
                set: &s,
                vocab: &v,
            },
            AuditedCorpus {
                id: "c2",
                set: &s,
                vocab: &v,
            },
        ];
        let rep = bias_experiment(
            &audited,
            &targets,
            &g(&["she"], &["she"]),
            &BootstrapConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.rows.len(), 2 * 4);
        assert!(rep.rows.iter().all(|r| r.bias == 0.0));
        assert!(rep
            .aggregates
            .iter()
            .all(|a| (a.mean, a.ci_low, a.ci_high) == (0.0, 0.0, 0.0)));
        let all2 = rep.aggregate("c1", 2, "all").unwrap();
        assert_eq!(all2.n, 2);

        let mut buf = Vec::new();
        rep.write_rows_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("corpus_id,word,bin,class,bias\n"));
        let mut buf = Vec::new();
        rep.write_aggregates_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("corpus_id,bin,class,n,mean,ci_low,ci_high\n"));
    }

    fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, d)
            .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
    }

    proptest! {
        #[test]
        fn antisymmetric(x in vec_strategy(5), a in vec_strategy(5), b in vec_strategy(5), c in vec_strategy(5)) {
            let ab = bias_of_vectors(&x, &[&a, &c], &[&b]).unwrap();
            let ba = bias_of_vectors(&x, &[&b], &[&a, &c]).unwrap();
            prop_assert_eq!(ab, -ba);
            prop_assert!((-2.0..=2.0).contains(&ab));
        }

        #[test]
        fn row_scale_invariant(x in vec_strategy(6), a in vec_strategy(6), b in vec_strategy(6), s in 1e-3f64..1e3, which in 0usize..3) {
            let base = bias_of_vectors(&x, &[&a], &[&b]).unwrap();
            let scale = |v: &Vec<f64>| v.iter().map(|e| e * s).collect::<Vec<f64>>();
            let (mut x2, mut a2, mut b2) = (x.clone(), a.clone(), b.clone());
            match which {
                0 => x2 = scale(&x),
                1 => a2 = scale(&a),
                _ => b2 = scale(&b),
            }
            let scaled = bias_of_vectors(&x2, &[&a2], &[&b2]).unwrap();
            prop_assert!((base - scaled).abs() < 1e-12);
        }

        #[test]
        fn aggregates_recompute_from_rows(seed in 0u64..200) {
            use rand::Rng;
            let mut r = rng::seeded(seed);
            let n = 12;
            let words: Vec<String> = std::iter::once("she".to_string()).chain(std::iter::once("he".to_string())).chain((0..n).map(|i| format!("t{i}"))).collect();
            let counts: Vec<(String, u64)> = words.iter().enumerate().map(|(i, w)| (w.clone(), if i < 2 { 100_000 } else { 10u64.pow(r.random_range(1..4)) + i as u64 })).collect();
            let v = Vocabulary::from_counts(counts, 1).unwrap();
            let rows: Vec<Vec<f32>> = (0..v.len()).map(|_| (0..4).map(|_| r.random_range(-1.0f32..1.0)).collect()).collect();
            let s = set(&v.words().iter().map(String::as_str).collect::<Vec<_>>(), &rows);
            let targets: Vec<NormEntry> = (0..n).map(|i| NormEntry::from_raw(format!("t{i}"), r.random_range(1.0..7.0)).unwrap()).collect();
            let groups = ContextGroups::new("gender", vec!["she".into()], vec!["he".into()]).unwrap();
            let rep = bias_experiment(&[AuditedCorpus { id: "c", set: &s, vocab: &v }], &targets, &groups, &BootstrapConfig { n_resamples: 200, ..Default::default() }).unwrap();
            for agg in &rep.aggregates {
                let vals: Vec<f64> = rep.rows.iter().filter(|r| r.bin == agg.bin && (agg.class == "all" || r.class.as_str() == agg.class)).map(|r| r.bias).collect();
                prop_assert_eq!(vals.len(), agg.n);
                let direct = vals.iter().sum::<f64>() / vals.len() as f64;
                prop_assert!((direct - agg.mean).abs() < 1e-12);
            }
        }
    }
}
