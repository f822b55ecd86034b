use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::viz::CLASS_PALETTE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningRecord {
    pub text: String,
    pub correct: bool,
}

/// Per-response means over a group of responses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub n: usize,
    pub mean_chars: f64,
    pub mean_words: f64,
    pub color_mentions: f64,
    pub distance_rate: f64,
    pub closest_rate: f64,
    pub majority_rate: f64,
    pub cluster_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningStats {
    pub overall: TraceStats,
    pub correct: TraceStats,
    pub incorrect: TraceStats,
}

impl ReasoningStats {
    /// Correct minus incorrect mean response length, in characters.
    pub fn length_gap(&self) -> f64 {
        self.correct.mean_chars - self.incorrect.mean_chars
    }
}

struct Counters {
    colors: Regex,
    distance: Regex,
    closest: Regex,
    majority: Regex,
    cluster: Regex,
}

impl Counters {
    fn new<S: AsRef<str>>(color_names: &[S]) -> Self {
        let word = |w: &str| Regex::new(&format!(r"(?i)\b(?:{w})\b")).expect("escaped pattern");
        let alternation = color_names
            .iter()
            .map(|c| regex::escape(c.as_ref()))
            .collect::<Vec<_>>()
            .join("|");
        Self {
            // An empty alternation would match everywhere; use a never-matching class.
            colors: if alternation.is_empty() {
                Regex::new(r"[^\s\S]").expect("static pattern")
            } else {
                word(&alternation)
            },
            distance: word("distances?"),
            closest: word("closest"),
            majority: word("majority"),
            cluster: word("cluster"),
        }
    }

    fn stats<'a>(&self, texts: impl Iterator<Item = &'a str>) -> TraceStats {
        let mut s = TraceStats::default();
        for t in texts {
            s.n += 1;
            s.mean_chars += t.chars().count() as f64;
            s.mean_words += t.split_whitespace().count() as f64;
            s.color_mentions += self.colors.find_iter(t).count() as f64;
            s.distance_rate += self.distance.find_iter(t).count() as f64;
            s.closest_rate += self.closest.find_iter(t).count() as f64;
            s.majority_rate += self.majority.find_iter(t).count() as f64;
            s.cluster_rate += self.cluster.find_iter(t).count() as f64;
        }
        if s.n > 0 {
            let n = s.n as f64;
            for v in [
                &mut s.mean_chars,
                &mut s.mean_words,
                &mut s.color_mentions,
                &mut s.distance_rate,
                &mut s.closest_rate,
                &mut s.majority_rate,
                &mut s.cluster_rate,
            ] {
                *v /= n;
            }
        }
        s
    }
}

/// Response-level statistics, overall and split by correctness.
///
/// Counts are case-insensitive and word-bounded. `color_names` defaults to
/// the class palette when `None`.
pub fn analyze_reasoning(
    records: &[ReasoningRecord],
    color_names: Option<&[&str]>,
) -> ReasoningStats {
    let palette: Vec<&str> = CLASS_PALETTE.iter().map(|c| c.name).collect();
    let counters = Counters::new(color_names.unwrap_or(&palette));
    ReasoningStats {
        overall: counters.stats(records.iter().map(|r| r.text.as_str())),
        correct: counters.stats(
            records
                .iter()
                .filter(|r| r.correct)
                .map(|r| r.text.as_str()),
        ),
        incorrect: counters.stats(
            records
                .iter()
                .filter(|r| !r.correct)
                .map(|r| r.text.as_str()),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: &str, correct: bool) -> ReasoningRecord {
        ReasoningRecord {
            text: t.into(),
            correct,
        }
    }

    #[test]
    fn counting_rules() {
        let s = analyze_reasoning(&[rec("closest closest", true)], None);
        assert_eq!(s.overall.closest_rate, 2.0);

        let s = analyze_reasoning(&[rec("ab", true), rec("abcd", false)], None);
        assert_eq!(s.overall.mean_chars, 3.0);
        assert_eq!(s.length_gap(), -2.0);

        let s = analyze_reasoning(
            &[rec("blue points near the Blue cluster", true)],
            Some(&["blue", "green"]),
        );
        assert_eq!(s.overall.color_mentions, 2.0);
        assert_eq!(s.overall.cluster_rate, 1.0);
        assert_eq!(s.overall.mean_words, 6.0);
    }

    #[test]
    fn word_bounded() {
        let s = analyze_reasoning(&[rec("clusters bluest distance distances", false)], None);
        assert_eq!(s.overall.cluster_rate, 0.0);
        assert_eq!(s.overall.color_mentions, 0.0);
        assert_eq!(s.overall.distance_rate, 2.0);
        assert_eq!(s.correct.n, 0);
        assert_eq!(s.incorrect.n, 1);
    }
}
