//! Build a distance-weighted co-occurrence table and fit GloVe to it.

use freqlens::corpus::build_vocab;
use freqlens::synth::ZipfCorpus;
use freqlens::train::{
    build_cooccurrence, glove_weight, train_glove, Hyperparams, Method, Snapshot,
};

fn main() -> freqlens::Result<()> {
    let corpus = ZipfCorpus::new(1_000, 50_000).seed(8).generate();
    let vocab = build_vocab(&corpus, 5);
    let table = build_cooccurrence(&corpus, &vocab, 5);
    println!("{} words, {} nonzero cells", vocab.len(), table.nnz());
    println!(
        "X(0,1) = {:.2}, weight {:.3}",
        table.get(0, 1),
        glove_weight(table.get(0, 1), 100.0, 0.75)
    );

    let hp = Hyperparams {
        min_count: 5,
        window: 5,
        dim: 20,
        epochs: 10,
        ..Hyperparams::desk(Method::Glove)
    };
    train_glove(&table, &vocab, &hp, &mut |s: &Snapshot<'_>| {
        println!("iter {:>2}  objective {:.2}", s.epoch, s.loss)
    })?;
    Ok(())
}
