//! Text normalization, character-overlap similarity and fuzzy span alignment.

use std::collections::HashMap;

use crate::graph::Span;

/// Lower-cases and collapses whitespace runs into single spaces.
pub fn fold(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// [`fold`] with punctuation removed as well.
pub fn normalize_loose(text: &str) -> String {
    let stripped: String = text.chars().map(|c| if c.is_alphanumeric() { c } else { ' ' }).collect();
    fold(&stripped)
}

/// Length of the longest common subsequence, bit-parallel over `a`.
pub fn lcs_len(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    *PrefixLcs::new(a).scan(b).last().expect("b is not empty")
}

/// Bit-parallel LCS against a fixed `a`, reporting the LCS with every prefix
/// of `b` in one pass.
struct PrefixLcs {
    masks: HashMap<char, Vec<u64>>,
    words: usize,
    len: usize,
}

impl PrefixLcs {
    fn new(a: &[char]) -> Self {
        let words = a.len().div_ceil(64).max(1);
        let mut masks: HashMap<char, Vec<u64>> = HashMap::new();
        for (i, &c) in a.iter().enumerate() {
            masks.entry(c).or_insert_with(|| vec![0; words])[i / 64] |= 1 << (i % 64);
        }
        PrefixLcs { masks, words, len: a.len() }
    }

    /// Element `k` is the LCS of `a` and `b[..k]`.
    fn scan(&self, b: &[char]) -> Vec<usize> {
        let zero = vec![0u64; self.words];
        let tail = self.len % 64;
        let mut v = vec![u64::MAX; self.words];
        let mut out = Vec::with_capacity(b.len() + 1);
        out.push(0);
        for c in b {
            let pm = self.masks.get(c).unwrap_or(&zero);
            // v = (v + (v & pm)) | (v & !pm), with carries across words.
            let mut carry = 0u64;
            for w in 0..self.words {
                let u = v[w] & pm[w];
                let (sum, c1) = v[w].overflowing_add(u);
                let (sum, c2) = sum.overflowing_add(carry);
                carry = u64::from(c1 || c2);
                v[w] = sum | (v[w] & !pm[w]);
            }
            let lcs = v
                .iter()
                .enumerate()
                .map(|(w, &bits)| {
                    let live = if w + 1 == self.words && tail != 0 { (1u64 << tail) - 1 } else { u64::MAX };
                    (!bits & live).count_ones() as usize
                })
                .sum();
            out.push(lcs);
        }
        out
    }
}

/// Dice-style overlap `2 * LCS / (|a| + |b|)` on folded text. Two empty
/// strings are identical.
pub fn char_overlap_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = fold(a).chars().collect();
    let b: Vec<char> = fold(b).chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * lcs_len(&a, &b) as f64 / (a.len() + b.len()) as f64
}

/// Locates `needle` in `source` as the word-aligned window with the highest
/// character-overlap similarity. Returns `None` below `threshold`. Ties go to
/// the earliest, then shortest, window.
pub fn align_span(source: &str, needle: &str, threshold: f64) -> Option<(Span, f64)> {
    let chars: Vec<char> = source.chars().collect();
    let target: Vec<char> = fold(needle).chars().collect();
    if target.is_empty() || chars.is_empty() {
        return None;
    }

    let starts: Vec<usize> =
        (0..chars.len()).filter(|&i| !chars[i].is_whitespace() && (i == 0 || chars[i - 1].is_whitespace())).collect();
    let mut ends: Vec<usize> = Vec::new();
    for i in 1..=chars.len() {
        if !chars[i - 1].is_whitespace() && (i == chars.len() || chars[i].is_whitespace()) {
            ends.push(i);
            // Also offer the word end without trailing punctuation.
            let mut j = i;
            while j > 1 && is_trailing_punct(chars[j - 1]) {
                j -= 1;
            }
            if j < i && !chars[j - 1].is_whitespace() {
                ends.push(j);
            }
        }
    }
    ends.sort_unstable();
    ends.dedup();

    // Similarity >= threshold bounds the window length relative to the target.
    let n = target.len() as f64;
    let t = threshold.clamp(0.01, 1.0);
    let min_len = (n * t / (2.0 - t)).floor() as usize;
    let max_len = (n * (2.0 - t) / t).ceil() as usize;

    let scanner = PrefixLcs::new(&target);
    let mut best: Option<(Span, f64)> = None;
    for &s in &starts {
        // Folding a window that ends on a non-space is a prefix of folding any
        // longer window from the same start, so one pass covers every end.
        let limit = chars.len().min(s + max_len * 2 + 8);
        let mut folded: Vec<char> = Vec::new();
        let mut folded_at = vec![0; limit - s + 1];
        let mut gap = false;
        for (i, &c) in chars[s..limit].iter().enumerate() {
            if c.is_whitespace() {
                gap = !folded.is_empty();
            } else {
                if gap {
                    folded.push(' ');
                    gap = false;
                }
                folded.extend(c.to_lowercase());
            }
            folded_at[i + 1] = folded.len();
        }
        let lcs = scanner.scan(&folded);
        for &e in ends.iter().filter(|&&e| e > s && e <= limit) {
            let len = folded_at[e - s];
            if len < min_len || len > max_len {
                continue;
            }
            let sim = 2.0 * lcs[len] as f64 / (target.len() + len) as f64;
            if best.is_none_or(|(_, score)| sim > score) {
                best = Some((Span::new(s, e), sim));
            }
        }
    }
    best.filter(|&(_, sim)| sim >= threshold)
}

fn is_trailing_punct(c: char) -> bool {
    matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | '"' | '\'' | ')' | '”' | '’')
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lcs_dp(a: &[char], b: &[char]) -> usize {
        let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                table[i][j] =
                    if a[i - 1] == b[j - 1] { table[i - 1][j - 1] + 1 } else { table[i - 1][j].max(table[i][j - 1]) };
            }
        }
        table[a.len()][b.len()]
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(char_overlap_similarity("abc", "abc"), 1.0);
        assert!((char_overlap_similarity("abcd", "bc") - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(char_overlap_similarity("", "x"), 0.0);
        assert_eq!(char_overlap_similarity("", ""), 1.0);
        assert_eq!(char_overlap_similarity("Hello   World", "hello world"), 1.0);
    }

    #[test]
    fn normalization() {
        assert_eq!(fold("  A\tB \n c "), "a b c");
        assert_eq!(normalize_loose("It's, well... fine!"), "it s well fine");
    }

    #[test]
    fn exact_sentence_alignment() {
        let text = "Socrates is mortal.";
        let (span, sim) = align_span(text, "Socrates is mortal.", 0.8).unwrap();
        assert_eq!(span, Span::new(0, 19));
        assert_eq!(sim, 1.0);
    }

    #[test]
    fn alignment_inside_longer_text() {
        let text = "Clearly, the streets are wet, because it rained last night.";
        let (span, _) = align_span(text, "it rained last night", 0.8).unwrap();
        assert_eq!(span.slice(text), "it rained last night");
        let (span, sim) = align_span(text, "The streets are wet", 0.8).unwrap();
        assert_eq!(span.slice(text), "the streets are wet");
        assert_eq!(sim, 1.0);
    }

    #[test]
    fn unrelated_text_is_not_aligned() {
        assert!(align_span("The cat sat on the mat.", "Quantum chromodynamics", 0.8).is_none());
    }

    /// Every word-aligned window scored from scratch.
    fn align_naive(source: &str, needle: &str, threshold: f64) -> Option<(Span, f64)> {
        let chars: Vec<char> = source.chars().collect();
        let target: Vec<char> = fold(needle).chars().collect();
        if target.is_empty() {
            return None;
        }
        let word = |i: usize| !chars[i].is_whitespace();
        let mut ends: Vec<usize> = Vec::new();
        for i in 1..=chars.len() {
            if word(i - 1) && (i == chars.len() || !word(i)) {
                ends.push(i);
                let mut j = i;
                while j > 1 && is_trailing_punct(chars[j - 1]) {
                    j -= 1;
                }
                if j < i && word(j - 1) {
                    ends.push(j);
                }
            }
        }
        ends.sort_unstable();
        ends.dedup();
        let t = threshold.clamp(0.01, 1.0);
        let n = target.len() as f64;
        let (min_len, max_len) = ((n * t / (2.0 - t)).floor() as usize, (n * (2.0 - t) / t).ceil() as usize);
        let mut best: Option<(Span, f64)> = None;
        for s in (0..chars.len()).filter(|&i| word(i) && (i == 0 || !word(i - 1))) {
            for &e in ends.iter().filter(|&&e| e > s && e - s <= max_len * 2 + 8) {
                let window: Vec<char> = fold(&chars[s..e].iter().collect::<String>()).chars().collect();
                if window.len() < min_len || window.len() > max_len {
                    continue;
                }
                let sim = 2.0 * lcs_dp(&target, &window) as f64 / (target.len() + window.len()) as f64;
                if best.is_none_or(|(_, score)| sim > score) {
                    best = Some((Span::new(s, e), sim));
                }
            }
        }
        best.filter(|&(_, sim)| sim >= threshold)
    }

    proptest! {
        #[test]
        fn alignment_matches_naive_scan(
            source in "[aAbc.,]{1,4}( {1,2}[aAbcÉé.,]{1,4}){0,12}",
            needle in "[abcé.]{1,4}( [abc.]{1,4}){0,3}",
            threshold in 0.3f64..1.0,
        ) {
            prop_assert_eq!(align_span(&source, &needle, threshold), align_naive(&source, &needle, threshold));
        }

        #[test]
        fn bit_parallel_lcs_matches_dp(a in "[abc ]{0,150}", b in "[abcd]{0,90}") {
            let a: Vec<char> = a.chars().collect();
            let b: Vec<char> = b.chars().collect();
            prop_assert_eq!(lcs_len(&a, &b), lcs_dp(&a, &b));
        }

        #[test]
        fn similarity_is_symmetric_and_bounded(a in ".{0,40}", b in ".{0,40}") {
            let s = char_overlap_similarity(&a, &b);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s, char_overlap_similarity(&b, &a));
            prop_assert_eq!(char_overlap_similarity(&a, &a), 1.0);
        }
    }
}
