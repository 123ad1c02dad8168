//! Resample the frequency of "he" and watch bias scores of gender-normed
//! words respond.

use freqlens::bias_audit::{
    bias_experiment, filter_targets, AuditedCorpus, BootstrapConfig, ContextGroups, NormEntry,
};
use freqlens::corpus::{build_vocab, resample};
use freqlens::freq_analysis::assign_bins;
use freqlens::synth::{pseudo_word, ZipfCorpus};
use freqlens::train::{train, Hyperparams, Method, NoSnapshots};

fn main() -> freqlens::Result<()> {
    let base = ZipfCorpus::new(2_000, 600_000)
        .sentence_len(4, 12)
        .plant("she", 3_000)
        .plant("he", 30_000)
        .seed(2)
        .generate();

    let mut runs = Vec::new();
    for (k, target) in [300u64, 3_000, 30_000].into_iter().enumerate() {
        let (corpus, report) = resample(&base, "he", target, 20 + k as u64, &["she"])?;
        println!(
            "he {} -> {} (dropped {} sentences, she {:+})",
            report.count_before,
            report.count_after,
            report.sentences_dropped,
            report.side_effect_counts["she"]
        );
        let vocab = build_vocab(&corpus, 10);
        let hp = Hyperparams {
            epochs: 10,
            ..Hyperparams::desk(Method::Glove)
        };
        let set = train(&corpus, &vocab, &hp, &mut NoSnapshots)?;
        runs.push((format!("he={target}"), vocab, set));
    }

    // made-up ratings on the 1..7 scale
    let norms: Vec<NormEntry> = (0..400)
        .map(|i| NormEntry::from_raw(pseudo_word(50 + i), 1.0 + (i * 37 % 61) as f64 / 10.0))
        .collect::<freqlens::Result<_>>()?;
    let binnings: Vec<_> = runs
        .iter()
        .map(|r| assign_bins(&r.1))
        .collect::<freqlens::Result<_>>()?;
    let vocabs: Vec<_> = runs.iter().map(|r| &r.1).collect();
    let targets = filter_targets(&norms, &vocabs, &binnings.iter().collect::<Vec<_>>())?;

    let groups = ContextGroups::new("she-he", vec!["she".into()], vec!["he".into()])?;
    let audited: Vec<_> = runs
        .iter()
        .map(|r| AuditedCorpus {
            id: &r.0,
            set: &r.2,
            vocab: &r.1,
        })
        .collect();
    let report = bias_experiment(&audited, &targets, &groups, &BootstrapConfig::default())?;

    println!("\n{} targets", targets.len());
    for a in report.aggregates.iter().filter(|a| a.class == "all") {
        println!(
            "{:<10} bin {}  n {:>3}  mean {:+.4}  [{:+.4}, {:+.4}]",
            a.corpus_id, a.bin, a.n, a.mean, a.ci_low, a.ci_high
        );
    }
    Ok(())
}
