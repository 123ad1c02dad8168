use std::io::Read;

use super::{Corpus, CorpusBuilder};
use crate::error::{Error, Result};

fn is_sentence_break(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\n')
}

/// Lowercases a sentence and turns every non-alphanumeric character into a
/// token boundary. Lowercasing happens first so the output is a fixed point.
pub fn normalize_sentence(sentence: &str) -> Vec<String> {
    let mut cleaned = String::with_capacity(sentence.len());
    for c in sentence.chars().flat_map(char::to_lowercase) {
        cleaned.push(if c.is_alphanumeric() { c } else { ' ' });
    }
    cleaned.split_whitespace().map(str::to_owned).collect()
}

/// Normalizes documents into a raw-stage corpus.
///
/// Each document is split into sentences on `.`, `!`, `?` and newlines, then
/// normalized with [`normalize_sentence`]. Empty sentences vanish, and a
/// document contributing fewer than `min_doc_tokens` tokens is dropped.
pub fn preprocess<S: AsRef<str>>(
    documents: impl IntoIterator<Item = S>,
    min_doc_tokens: usize,
) -> Corpus {
    let mut builder = CorpusBuilder::new();
    for doc in documents {
        let sentences: Vec<Vec<String>> = doc
            .as_ref()
            .split(is_sentence_break)
            .map(normalize_sentence)
            .filter(|s| !s.is_empty())
            .collect();
        let n_tokens: usize = sentences.iter().map(Vec::len).sum();
        if n_tokens == 0 || n_tokens < min_doc_tokens {
            continue;
        }
        for s in sentences {
            builder.push_sentence(s);
        }
    }
    builder.finish()
}

/// Splits text into documents separated by one or more blank lines.
pub fn split_documents(text: &str) -> Vec<&str> {
    let mut docs = Vec::new();
    let mut start: Option<usize> = None;
    let mut end = 0;
    let mut pos = 0;
    for line in text.split_inclusive('\n') {
        let blank = line.trim().is_empty();
        if blank {
            if let Some(s) = start.take() {
                docs.push(&text[s..end]);
            }
        } else {
            if start.is_none() {
                start = Some(pos);
            }
            end = pos + line.len();
        }
        pos += line.len();
    }
    if let Some(s) = start {
        docs.push(&text[s..end]);
    }
    docs
}

/// Reads a blank-line-separated document stream and preprocesses it.
/// Invalid UTF-8 is reported with the byte offset of the first bad byte.
pub fn preprocess_reader<R: Read>(mut input: R, min_doc_tokens: usize) -> Result<Corpus> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::Decode {
        offset: e.valid_up_to(),
    })?;
    Ok(preprocess(split_documents(text), min_doc_tokens))
}
