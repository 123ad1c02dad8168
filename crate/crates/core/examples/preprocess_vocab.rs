//! Normalize a few raw documents, build a vocabulary and shuffle tokens.

use freqlens::corpus::{build_vocab, preprocess, shuffle_tokens, split_documents};

const TEXT: &str = "\
The cat sat on the mat. The dog didn't.
It rained all day!

A second document, with Numbers 42 and the cat again.
Is the dog here? The cat is.

tiny
";

fn main() -> freqlens::Result<()> {
    let corpus = preprocess(split_documents(TEXT), 3);
    println!(
        "{} sentences, {} tokens",
        corpus.num_sentences(),
        corpus.token_count()
    );
    for s in corpus.sentences() {
        let words: Vec<&str> = s.iter().map(|&t| corpus.lexicon().word(t)).collect();
        println!("  {}", words.join(" "));
    }

    let vocab = build_vocab(&corpus, 2);
    for (w, c) in vocab.words().iter().zip(vocab.counts()) {
        println!("{w}\t{c}");
    }

    // same counts, same sentence lengths, new order
    let shuffled = shuffle_tokens(&corpus, 7)?;
    assert_eq!(shuffled.sentence_lengths(), corpus.sentence_lengths());
    assert_eq!(build_vocab(&shuffled, 2).counts(), vocab.counts());
    println!("shuffled corpus keeps every count");
    Ok(())
}
