//! Track the frequency heatmap RMSE across training epochs.

use freqlens::corpus::build_vocab;
use freqlens::freq_analysis::{rmse, similarity_heatmap};
use freqlens::store::Metric;
use freqlens::synth::ZipfCorpus;
use freqlens::train::{train, Hyperparams, Method, Snapshot};

fn main() -> freqlens::Result<()> {
    let corpus = ZipfCorpus::new(5_000, 200_000).seed(5).generate();
    let vocab = build_vocab(&corpus, 5);
    let hp = Hyperparams {
        min_count: 5,
        epochs: 5,
        ..Hyperparams::desk(Method::Sgns)
    };

    let mut per_epoch = Vec::new();
    train(&corpus, &vocab, &hp, &mut |s: &Snapshot<'_>| {
        let set = s.to_set(vocab.lexicon().clone(), &hp).unwrap();
        let h = similarity_heatmap(&set, &vocab, Metric::Cosine, 200, 3).unwrap();
        per_epoch.push((s.epoch, s.loss, rmse(&h).unwrap()));
    })?;

    println!("epoch  loss     rmse");
    for (e, loss, r) in per_epoch {
        println!("{e:>5}  {loss:.4}  {r:.4}");
    }
    Ok(())
}
