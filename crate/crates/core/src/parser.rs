//! Answer extraction from free-text model responses.
//!
//! Three channels are tried in order: the `FINAL ANSWER:` sentinel, class
//! name mentions, then color name mentions mapped back through the class map.
//! Within a channel the last occurrence wins, and a match contained in a
//! longer match (`Class_1` inside `Class_10`, `cat` inside `wild cat`) is
//! discarded.

use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Label;
use crate::viz::ColorMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Sentinel,
    Classname,
    Colorname,
    /// Regression fallback: last standalone number in the text.
    Number,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub span: Range<usize>,
    pub matched: String,
    /// Class index the candidate resolves to, if any.
    pub class_index: Option<usize>,
}

/// Per-channel candidates, dumped when nothing usable is found.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseDiagnostics {
    pub sentinel_payloads: Vec<Candidate>,
    pub class_mentions: Vec<Candidate>,
    pub color_mentions: Vec<Candidate>,
    pub numbers: Vec<Candidate>,
}

impl ParseDiagnostics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParseError {
    #[error("unparseable: no channel produced an answer")]
    Unparseable(Box<ParseDiagnostics>),
    #[error("class map is empty")]
    EmptyClassMap,
    #[error("normalized key {0:?} appears twice in the class map")]
    DuplicateKey(String),
}

impl ParseError {
    pub fn diagnostics(&self) -> Option<&ParseDiagnostics> {
        match self {
            ParseError::Unparseable(d) => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: Label,
    pub channel: Channel,
    /// Byte range of the match in `raw`.
    pub span: Range<usize>,
    pub raw: String,
}

fn is_separator(c: char) -> bool {
    c.is_whitespace() || matches!(c, '_' | '-' | '\\' | '‐' | '‑' | '–' | '—')
}

fn is_wrapper(c: char) -> bool {
    matches!(
        c,
        '\'' | '"'
            | '`'
            | '.'
            | '‘'
            | '’'
            | '“'
            | '”'
            | '*'
            | '['
            | ']'
            | '<'
            | '>'
            | '('
            | ')'
            | ','
            | ';'
            | ':'
            | '!'
    )
}

/// Case-folds, collapses separator runs to one space and strips wrapping
/// quotes, periods and similar punctuation.
pub fn normalize_label(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for c in s.chars() {
        if is_separator(c) {
            pending_space = true;
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.extend(c.to_lowercase());
    }
    out.trim_matches(|c: char| is_wrapper(c) || c.is_whitespace())
        .to_string()
}

/// Text normalized like [`normalize_label`] (without the stripping), with
/// every normalized char tracking the raw byte range it came from.
struct NormText {
    chars: Vec<char>,
    spans: Vec<Range<usize>>,
}

impl NormText {
    fn new(raw: &str) -> Self {
        let mut chars = Vec::with_capacity(raw.len());
        let mut spans: Vec<Range<usize>> = Vec::with_capacity(raw.len());
        let mut in_sep = false;
        for (i, c) in raw.char_indices() {
            let end = i + c.len_utf8();
            if is_separator(c) {
                if in_sep {
                    if let Some(last) = spans.last_mut() {
                        last.end = end;
                    }
                } else {
                    chars.push(' ');
                    spans.push(i..end);
                }
                in_sep = true;
                continue;
            }
            in_sep = false;
            for lc in c.to_lowercase() {
                chars.push(lc);
                spans.push(i..end);
            }
        }
        Self { chars, spans }
    }

    fn boundary(&self, idx: Option<usize>) -> bool {
        idx.and_then(|i| self.chars.get(i))
            .is_none_or(|c| !c.is_alphanumeric())
    }

    /// Word-bounded occurrences of `key`, as normalized char ranges.
    fn find_all(&self, key: &[char]) -> Vec<Range<usize>> {
        let mut hits = Vec::new();
        if key.is_empty() || key.len() > self.chars.len() {
            return hits;
        }
        for start in 0..=(self.chars.len() - key.len()) {
            let end = start + key.len();
            if self.chars[start..end] == *key
                && self.boundary(start.checked_sub(1))
                && self.boundary(Some(end))
            {
                hits.push(start..end);
            }
        }
        hits
    }

    fn raw_span(&self, r: &Range<usize>) -> Range<usize> {
        self.spans[r.start].start..self.spans[r.end - 1].end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMapEntry {
    pub class_name: String,
    pub color_name: String,
    pub class_key: String,
    pub color_key: String,
}

/// Class-name and color-name lookup shared with the plot legend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMap {
    entries: Vec<ClassMapEntry>,
}

impl ClassMap {
    /// Entries are `(class name, color name)`, indexed by position.
    pub fn new<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<Self, ParseError> {
        if pairs.is_empty() {
            return Err(ParseError::EmptyClassMap);
        }
        let entries: Vec<ClassMapEntry> = pairs
            .iter()
            .map(|(class, color)| ClassMapEntry {
                class_name: class.as_ref().to_string(),
                color_name: color.as_ref().to_string(),
                class_key: normalize_label(class.as_ref()),
                color_key: normalize_label(color.as_ref()),
            })
            .collect();
        for (i, e) in entries.iter().enumerate() {
            for other in &entries[..i] {
                if other.class_key == e.class_key {
                    return Err(ParseError::DuplicateKey(e.class_key.clone()));
                }
                if other.color_key == e.color_key {
                    return Err(ParseError::DuplicateKey(e.color_key.clone()));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn from_color_map(cm: &ColorMap) -> Result<Self, ParseError> {
        Self::new(&cm.pairs())
    }

    pub fn entries(&self) -> &[ClassMapEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_by_key(&self, key: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.class_key == key)
    }
}

fn sentinel_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)final[\s_*]*answer[\s*]*[:：]").expect("static regex"))
}

fn number_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"[-+−]?(?:\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?")
            .expect("static regex")
    })
}

/// Raw payload ranges following each sentinel, up to end of line.
fn sentinel_payloads(text: &str) -> Vec<Range<usize>> {
    sentinel_regex()
        .find_iter(text)
        .map(|m| {
            let end = text[m.end()..]
                .find('\n')
                .map_or(text.len(), |off| m.end() + off);
            m.end()..end
        })
        .collect()
}

/// Word-bounded matches of every key, longest-match filtered, in text order.
fn keyed_matches(
    norm: &NormText,
    keys: impl Iterator<Item = (usize, String)>,
) -> Vec<(Range<usize>, usize)> {
    let mut hits: Vec<(Range<usize>, usize)> = Vec::new();
    for (idx, key) in keys {
        let key: Vec<char> = key.chars().collect();
        hits.extend(norm.find_all(&key).into_iter().map(|r| (r, idx)));
    }
    let kept: Vec<(Range<usize>, usize)> = hits
        .iter()
        .filter(|(r, _)| {
            !hits.iter().any(|(o, _)| {
                o.start <= r.start && r.end <= o.end && (o.end - o.start) > (r.end - r.start)
            })
        })
        .cloned()
        .collect();
    let mut kept = kept;
    kept.sort_by_key(|(r, _)| (r.start, r.end));
    kept
}

/// Resolves a sentinel payload to a class: exact normalized match first,
/// then the longest class key that starts the payload at a word boundary.
fn resolve_payload(payload: &str, cm: &ClassMap) -> Option<usize> {
    let key = normalize_label(payload);
    if let Some(c) = cm.class_by_key(&key) {
        return Some(c);
    }
    let chars: Vec<char> = key.chars().collect();
    cm.entries
        .iter()
        .enumerate()
        .filter(|(_, e)| {
            let k: Vec<char> = e.class_key.chars().collect();
            !k.is_empty()
                && chars.starts_with(&k)
                && chars.get(k.len()).is_none_or(|c| !c.is_alphanumeric())
        })
        .max_by_key(|(_, e)| e.class_key.chars().count())
        .map(|(i, _)| i)
}

pub fn parse_classification(text: &str, cm: &ClassMap) -> Result<Prediction, ParseError> {
    if cm.is_empty() {
        return Err(ParseError::EmptyClassMap);
    }
    let mut diag = ParseDiagnostics::default();
    let prediction = |value: usize, channel: Channel, span: Range<usize>| Prediction {
        value: Label::Class(value),
        channel,
        span,
        raw: text.to_string(),
    };

    let payloads = sentinel_payloads(text);
    for r in &payloads {
        diag.sentinel_payloads.push(Candidate {
            span: r.clone(),
            matched: text[r.clone()].to_string(),
            class_index: resolve_payload(&text[r.clone()], cm),
        });
    }
    if let Some(c) = diag
        .sentinel_payloads
        .iter()
        .rev()
        .find(|c| c.class_index.is_some())
    {
        return Ok(prediction(
            c.class_index.unwrap_or_default(),
            Channel::Sentinel,
            c.span.clone(),
        ));
    }

    let norm = NormText::new(text);
    let to_candidates = |hits: Vec<(Range<usize>, usize)>| -> Vec<Candidate> {
        hits.into_iter()
            .map(|(r, idx)| {
                let span = norm.raw_span(&r);
                Candidate {
                    matched: text[span.clone()].to_string(),
                    span,
                    class_index: Some(idx),
                }
            })
            .collect()
    };

    diag.class_mentions = to_candidates(keyed_matches(
        &norm,
        cm.entries
            .iter()
            .enumerate()
            .map(|(i, e)| (i, e.class_key.clone())),
    ));
    if let Some(c) = diag.class_mentions.last() {
        return Ok(prediction(
            c.class_index.unwrap_or_default(),
            Channel::Classname,
            c.span.clone(),
        ));
    }

    diag.color_mentions = to_candidates(keyed_matches(
        &norm,
        cm.entries
            .iter()
            .enumerate()
            .map(|(i, e)| (i, e.color_key.clone())),
    ));
    if let Some(c) = diag.color_mentions.last() {
        return Ok(prediction(
            c.class_index.unwrap_or_default(),
            Channel::Colorname,
            c.span.clone(),
        ));
    }
    Err(ParseError::Unparseable(Box::new(diag)))
}

/// Standalone numbers: not glued to letters, digits, `_` or `.` on either side.
fn standalone_numbers(text: &str, offset: usize) -> Vec<(Range<usize>, f64)> {
    let mut out = Vec::new();
    for m in number_regex().find_iter(text) {
        let mut start = m.start();
        let before = text[..start].chars().next_back();
        let mut s = m.as_str();
        if s.starts_with(['-', '+', '−']) && before.is_some_and(|c| c.is_alphanumeric()) {
            let sign_len = s.chars().next().map_or(1, char::len_utf8);
            start += sign_len;
            s = &s[sign_len..];
        }
        let before = text[..start].chars().next_back();
        let after = text[m.end()..].chars().next();
        let glued_before = before.is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '.');
        let glued_after = after.is_some_and(|c| c.is_alphanumeric() || c == '_');
        if glued_before || glued_after {
            continue;
        }
        let cleaned: String = s.replace(',', "").replace('−', "-");
        if let Ok(v) = cleaned.parse::<f64>() {
            if v.is_finite() {
                out.push((offset + start..offset + m.end(), v));
            }
        }
    }
    out
}

pub fn parse_regression(text: &str) -> Result<Prediction, ParseError> {
    let mut diag = ParseDiagnostics::default();
    for r in sentinel_payloads(text) {
        let first = standalone_numbers(&text[r.clone()], r.start)
            .into_iter()
            .next();
        diag.sentinel_payloads.push(Candidate {
            span: first.as_ref().map_or(r.clone(), |(s, _)| s.clone()),
            matched: text[r.clone()].to_string(),
            class_index: None,
        });
        if let Some((span, v)) = first {
            diag.numbers.push(Candidate {
                span,
                matched: v.to_string(),
                class_index: None,
            });
        }
    }
    let found = sentinel_payloads(text).into_iter().rev().find_map(|r| {
        standalone_numbers(&text[r.clone()], r.start)
            .into_iter()
            .next()
    });
    let (span, value, channel) = match found {
        Some((span, v)) => (span, v, Channel::Sentinel),
        None => match standalone_numbers(text, 0).pop() {
            Some((span, v)) => (span, v, Channel::Number),
            None => return Err(ParseError::Unparseable(Box::new(diag))),
        },
    };
    Ok(Prediction {
        value: Label::Value(value),
        channel,
        span,
        raw: text.to_string(),
    })
}
