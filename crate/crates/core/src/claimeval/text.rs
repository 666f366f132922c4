use crate::error::{Error, Result};
use crate::records::ByteSpan;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub text: String,
    /// Byte range of `text` within the paragraph.
    pub char_range: ByteSpan,
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

/// Splits a paragraph into sentences.
///
/// A sentence ends at `.`, `?` or `!` when the next character is whitespace
/// or the end of the paragraph, and at every newline. Abbreviations are not
/// special-cased. Leading and trailing whitespace is excluded from each range,
/// so the ranges plus the whitespace between them reconstruct the paragraph.
/// A paragraph without terminators is a single sentence; a blank paragraph
/// yields none.
pub fn split_sentences(paragraph: &str) -> Vec<Sentence> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut last_non_ws = 0;
    let mut chars = paragraph.char_indices().peekable();
    let close = |s: usize, e: usize, out: &mut Vec<Sentence>| {
        out.push(Sentence {
            text: paragraph[s..e].to_string(),
            char_range: ByteSpan::new(s, e),
        })
    };
    while let Some((i, c)) = chars.next() {
        if c == '\n' {
            if let Some(s) = start.take() {
                close(s, last_non_ws, &mut out);
            }
            continue;
        }
        if c.is_whitespace() {
            continue;
        }
        if start.is_none() {
            start = Some(i);
        }
        last_non_ws = i + c.len_utf8();
        let at_boundary = chars.peek().is_none_or(|&(_, n)| n.is_whitespace());
        if is_terminator(c) && at_boundary {
            close(start.take().expect("open sentence"), last_non_ws, &mut out);
        }
    }
    if let Some(s) = start {
        close(s, last_non_ws, &mut out);
    }
    out
}

/// Longest contiguous byte sequence shared by `a` and `b`.
///
/// Returns its length and its range in `a`, choosing the leftmost occurrence
/// in `a` on ties. The range is in bytes and need not fall on character
/// boundaries. Empty inputs give `(0, 0..0)`.
pub fn longest_common_substring(a: &str, b: &str) -> (usize, ByteSpan) {
    let (a, b) = (a.as_bytes(), b.as_bytes());
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    let (mut best, mut best_end) = (0, 0);
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            cur[j] = if a[i - 1] == b[j - 1] { prev[j - 1] + 1 } else { 0 };
            // strict improvement keeps the earliest end, hence the leftmost start
            if cur[j] > best {
                best = cur[j];
                best_end = i;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (best, ByteSpan::new(best_end - best, best_end))
}

/// Index of the sentence sharing the longest common substring with `span`,
/// lowest index on ties.
pub fn map_span(sentences: &[Sentence], span: &str) -> Result<usize> {
    if span.is_empty() {
        return Err(Error::InvalidArgument("returned span is empty".into()));
    }
    if sentences.is_empty() {
        return Err(Error::InvalidArgument("no sentences to map onto".into()));
    }
    let mut best = (0, 0);
    for (i, s) in sentences.iter().enumerate() {
        let len = longest_common_substring(&s.text, span).0;
        if len > best.1 {
            best = (i, len);
        }
    }
    Ok(best.0)
}
