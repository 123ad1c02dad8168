//! Character n-grams, their hashed rows, and a small FastText run.

use freqlens::corpus::build_vocab;
use freqlens::store::Metric;
use freqlens::synth::ZipfCorpus;
use freqlens::train::{
    char_ngrams, fnv1a_32, subword_rows, train, Hyperparams, Method, NoSnapshots,
};

fn main() -> freqlens::Result<()> {
    for g in char_ngrams("where", 3, 6) {
        println!("{g:<8} fnv1a {:>10}", fnv1a_32(&g));
    }
    let words = vec!["where".to_string(), "here".to_string()];
    for (w, rows) in words.iter().zip(subword_rows(&words, 3, 6, 1000)) {
        println!("{w}: rows {rows:?}");
    }

    let corpus = ZipfCorpus::new(2_000, 100_000).seed(7).generate();
    let vocab = build_vocab(&corpus, 5);
    let hp = Hyperparams {
        min_count: 5,
        epochs: 2,
        buckets: 20_000,
        ..Hyperparams::desk(Method::Fasttext)
    };
    let set = train(&corpus, &vocab, &hp, &mut NoSnapshots)?;
    println!("\n{} words x {} dims", set.len(), set.dim());
    for j in 1..4 {
        println!(
            "cos({}, {}) = {:.3}",
            set.words()[0],
            set.words()[j],
            set.similarity_ids(0, j, Metric::Cosine)?
        );
    }
    Ok(())
}
