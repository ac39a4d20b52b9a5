//! Prompt tokenization and masked prompt variants.
//!
//! A word is a maximal run of letter/digit graphemes, optionally joined by
//! single internal apostrophes or hyphens (`don't`, `state-of-the-art`).
//! Punctuation and whitespace never form tokens, so they are never masked.
//! Classification works on extended grapheme clusters, so a letter followed
//! by combining marks stays inside its word.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::stopwords::Stopwords;

/// Mask glyph used when none is configured.
pub const DEFAULT_GLYPH: &str = "_";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextError {
    #[error("mask selection is empty")]
    EmptySelection,
    #[error("token index {index} out of range for {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("mask glyph must be non-empty and contain no whitespace")]
    InvalidGlyph,
    #[error("token span {start}..{end} does not fit the prompt")]
    SpanOutOfBounds { start: usize, end: usize },
}

/// One maskable word of a prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordToken {
    /// 0-based position among the prompt's words.
    pub index: usize,
    pub text: String,
    /// Half-open span in character (Unicode scalar) offsets.
    pub char_span: Range<usize>,
    /// Half-open span in UTF-8 byte offsets.
    pub byte_span: Range<usize>,
    pub is_stopword: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Word,
    Connector,
    Other,
}

fn classify(grapheme: &str) -> Class {
    let mut chars = grapheme.chars();
    match chars.next() {
        Some(c) if c.is_alphanumeric() => Class::Word,
        Some('\'' | '\u{2019}' | '-' | '\u{2010}' | '\u{2011}') if chars.next().is_none() => {
            Class::Connector
        }
        _ => Class::Other,
    }
}

struct Open {
    byte_start: usize,
    char_start: usize,
    byte_end: usize,
    char_end: usize,
    /// A connector was seen after the last word grapheme.
    pending_connector: bool,
}

/// Splits `prompt` into maskable words in order of appearance.
pub fn tokenize(prompt: &str, stopwords: &Stopwords) -> Vec<WordToken> {
    let mut tokens = Vec::new();
    let mut open: Option<Open> = None;
    let mut char_pos = 0usize;

    let close = |open: &mut Option<Open>, tokens: &mut Vec<WordToken>| {
        if let Some(o) = open.take() {
            let text = String::from(&prompt[o.byte_start..o.byte_end]);
            let is_stopword = stopwords.contains(&text);
            tokens.push(WordToken {
                index: tokens.len(),
                text,
                char_span: o.char_start..o.char_end,
                byte_span: o.byte_start..o.byte_end,
                is_stopword,
            });
        }
    };

    for (byte_idx, grapheme) in prompt.grapheme_indices(true) {
        let n_chars = grapheme.chars().count();
        let byte_end = byte_idx + grapheme.len();
        let char_end = char_pos + n_chars;
        match classify(grapheme) {
            Class::Word => match open.as_mut() {
                Some(o) => {
                    o.byte_end = byte_end;
                    o.char_end = char_end;
                    o.pending_connector = false;
                }
                None => {
                    open = Some(Open {
                        byte_start: byte_idx,
                        char_start: char_pos,
                        byte_end,
                        char_end,
                        pending_connector: false,
                    })
                }
            },
            Class::Connector => match open.as_mut() {
                Some(o) if !o.pending_connector => o.pending_connector = true,
                _ => close(&mut open, &mut tokens),
            },
            Class::Other => close(&mut open, &mut tokens),
        }
        char_pos = char_end;
    }
    close(&mut open, &mut tokens);
    tokens
}

/// Where a glyph was written into a rendered prompt, and what it replaced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    /// Byte range of the glyph inside `rendered`.
    pub rendered_range: Range<usize>,
    /// Original text covered by the glyph.
    pub original: String,
}

/// A prompt with one or more words replaced by the mask glyph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedVariant {
    pub source_prompt: String,
    /// Sorted, de-duplicated token indices.
    pub masked_indices: Vec<usize>,
    pub rendered: String,
    pub substitutions: Vec<Substitution>,
}

impl MaskedVariant {
    /// Puts the original text back at every glyph position.
    pub fn unmask(&self) -> String {
        let mut out = String::with_capacity(self.source_prompt.len());
        let mut cursor = 0;
        for sub in &self.substitutions {
            out.push_str(&self.rendered[cursor..sub.rendered_range.start]);
            out.push_str(&sub.original);
            cursor = sub.rendered_range.end;
        }
        out.push_str(&self.rendered[cursor..]);
        out
    }
}

fn check_glyph(glyph: &str) -> Result<(), TextError> {
    if glyph.is_empty() || glyph.chars().any(char::is_whitespace) {
        Err(TextError::InvalidGlyph)
    } else {
        Ok(())
    }
}

fn check_span(prompt: &str, token: &WordToken) -> Result<(), TextError> {
    let Range { start, end } = token.byte_span.clone();
    if start < end
        && end <= prompt.len()
        && prompt.is_char_boundary(start)
        && prompt.is_char_boundary(end)
    {
        Ok(())
    } else {
        Err(TextError::SpanOutOfBounds { start, end })
    }
}

/// Replaces byte regions of `prompt` with `glyph`. Regions must be sorted and
/// non-overlapping.
fn render(prompt: &str, regions: &[Range<usize>], glyph: &str) -> (String, Vec<Substitution>) {
    let mut rendered = String::with_capacity(prompt.len());
    let mut subs = Vec::with_capacity(regions.len());
    let mut cursor = 0;
    for region in regions {
        rendered.push_str(&prompt[cursor..region.start]);
        let start = rendered.len();
        rendered.push_str(glyph);
        subs.push(Substitution {
            rendered_range: start..rendered.len(),
            original: String::from(&prompt[region.clone()]),
        });
        cursor = region.end;
    }
    rendered.push_str(&prompt[cursor..]);
    (rendered, subs)
}

/// Replaces every selected word with `glyph`, leaving all other characters
/// untouched.
pub fn mask(
    prompt: &str,
    tokens: &[WordToken],
    indices: &[usize],
    glyph: &str,
) -> Result<MaskedVariant, TextError> {
    check_glyph(glyph)?;
    if indices.is_empty() {
        return Err(TextError::EmptySelection);
    }
    let mut selected: Vec<usize> = indices.to_vec();
    selected.sort_unstable();
    selected.dedup();
    let mut regions = Vec::with_capacity(selected.len());
    for &i in &selected {
        let token = tokens.get(i).ok_or(TextError::IndexOutOfRange {
            index: i,
            len: tokens.len(),
        })?;
        check_span(prompt, token)?;
        if let Some(prev) = regions.last() {
            let prev: &Range<usize> = prev;
            if token.byte_span.start < prev.end {
                return Err(TextError::SpanOutOfBounds {
                    start: token.byte_span.start,
                    end: token.byte_span.end,
                });
            }
        }
        regions.push(token.byte_span.clone());
    }
    let (rendered, substitutions) = render(prompt, &regions, glyph);
    Ok(MaskedVariant {
        source_prompt: String::from(prompt),
        masked_indices: selected,
        rendered,
        substitutions,
    })
}

/// Masks a contiguous run of words as a single unit: everything from the
/// first word's start to the last word's end, including the whitespace and
/// punctuation in between, collapses to one glyph.
pub fn mask_span(
    prompt: &str,
    tokens: &[WordToken],
    range: Range<usize>,
    glyph: &str,
) -> Result<MaskedVariant, TextError> {
    check_glyph(glyph)?;
    if range.start >= range.end {
        return Err(TextError::EmptySelection);
    }
    if range.end > tokens.len() {
        return Err(TextError::IndexOutOfRange {
            index: range.end - 1,
            len: tokens.len(),
        });
    }
    let first = &tokens[range.start];
    let last = &tokens[range.end - 1];
    check_span(prompt, first)?;
    check_span(prompt, last)?;
    let region = first.byte_span.start..last.byte_span.end;
    if region.start >= region.end {
        return Err(TextError::SpanOutOfBounds {
            start: region.start,
            end: region.end,
        });
    }
    let (rendered, substitutions) = render(prompt, &[region], glyph);
    Ok(MaskedVariant {
        source_prompt: String::from(prompt),
        masked_indices: range.collect(),
        rendered,
        substitutions,
    })
}
