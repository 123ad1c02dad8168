/// 32-bit FNV-1a over the UTF-8 bytes of `s`.
pub fn fnv1a_32(s: &str) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for &b in s.as_bytes() {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Character n-grams of `<word>` with lengths in `min..=max`, in order of
/// start position then length. Lengths count Unicode scalar values and the
/// boundary markers. Repeated n-grams are kept.
pub fn char_ngrams(word: &str, min: usize, max: usize) -> Vec<String> {
    let wrapped: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    for start in 0..wrapped.len() {
        for n in min..=max {
            let end = start + n;
            if end > wrapped.len() {
                break;
            }
            out.push(wrapped[start..end].iter().collect());
        }
    }
    out
}

/// Input-matrix rows composing each word: its own row first, then one row
/// per n-gram at `vocab_len + fnv1a_32(ngram) % buckets`. With zero buckets
/// a word is its own row only.
pub fn subword_rows(words: &[String], min: usize, max: usize, buckets: usize) -> Vec<Vec<u32>> {
    let v = words.len();
    words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut rows = vec![i as u32];
            if buckets > 0 {
                rows.extend(
                    char_ngrams(w, min, max)
                        .iter()
                        .map(|g| (v + (fnv1a_32(g) as usize % buckets)) as u32),
                );
            }
            rows
        })
        .collect()
}
