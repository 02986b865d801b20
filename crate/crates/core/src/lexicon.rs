//! Synonym lexicon: head word → set of synonyms, one row per line.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use crate::embedding::EmbeddingSpace;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LexiconSummary {
    pub lines: usize,
    /// Lines with a head but no synonyms left after dropping self-pairs.
    pub skipped_lines: usize,
    pub self_pairs_dropped: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RestrictSummary {
    pub heads_dropped: usize,
    pub synonyms_dropped: usize,
}

/// Directed synonym relation. Heads never list themselves and every
/// synonym set is nonempty.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl SynonymLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `synonyms` to `head`'s set. Self-pairs are ignored; returns how
    /// many were dropped.
    pub fn insert<I, S>(&mut self, head: &str, synonyms: I) -> usize
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut dropped = 0;
        let mut kept = BTreeSet::new();
        for syn in synonyms {
            let syn = syn.as_ref();
            if syn == head {
                dropped += 1;
            } else {
                kept.insert(syn.to_string());
            }
        }
        if !kept.is_empty() {
            self.entries.entry(head.to_string()).or_default().extend(kept);
        }
        dropped
    }

    pub fn synonyms(&self, head: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(head)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.entries.iter().map(|(h, s)| (h.as_str(), s))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Drops synonyms missing from the vocabulary, then heads that are
    /// missing or left without synonyms.
    pub fn restrict_to_vocab(&self, space: &EmbeddingSpace) -> (SynonymLexicon, RestrictSummary) {
        let mut summary = RestrictSummary::default();
        let mut entries = BTreeMap::new();
        for (head, syns) in &self.entries {
            if space.index_of(head).is_none() {
                summary.heads_dropped += 1;
                continue;
            }
            let kept: BTreeSet<String> = syns
                .iter()
                .filter(|s| space.index_of(s).is_some())
                .cloned()
                .collect();
            summary.synonyms_dropped += syns.len() - kept.len();
            if kept.is_empty() {
                summary.heads_dropped += 1;
            } else {
                entries.insert(head.clone(), kept);
            }
        }
        (SynonymLexicon { entries }, summary)
    }

    /// Resolves the lexicon to `(head, synonyms)` row indices of `space`.
    /// Every token must be in the vocabulary.
    pub fn to_indices(&self, space: &EmbeddingSpace) -> Result<Vec<(usize, Vec<usize>)>> {
        let resolve = |w: &str| {
            space
                .index_of(w)
                .ok_or_else(|| Error::OutOfVocabulary(w.to_string()))
        };
        self.entries
            .iter()
            .map(|(head, syns)| {
                let syns = syns.iter().map(|s| resolve(s)).collect::<Result<Vec<_>>>()?;
                Ok((resolve(head)?, syns))
            })
            .collect()
    }
}

/// Reads whitespace-separated `head syn1 syn2 ...` rows. Repeated heads are
/// merged by union. Empty input yields an empty lexicon.
pub fn load_lexicon<R: BufRead>(reader: R) -> Result<(SynonymLexicon, LexiconSummary)> {
    let mut lexicon = SynonymLexicon::new();
    let mut summary = LexiconSummary::default();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(line_no + 1, e.to_string()))?;
        let mut tokens = line.split_whitespace();
        let Some(head) = tokens.next() else {
            continue;
        };
        summary.lines += 1;
        let tokens: Vec<&str> = tokens.collect();
        let dropped = lexicon.insert(head, &tokens);
        summary.self_pairs_dropped += dropped;
        if tokens.len() == dropped {
            summary.skipped_lines += 1;
        }
    }
    Ok((lexicon, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(words: &[&str]) -> BTreeSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn parses_row() {
        let (lex, summary) = load_lexicon("good nice fine\n".as_bytes()).unwrap();
        assert_eq!(lex.synonyms("good"), Some(&set(&["nice", "fine"])));
        assert_eq!(summary.lines, 1);
    }

    #[test]
    fn drops_self_pairs() {
        let (lex, summary) = load_lexicon("good good nice".as_bytes()).unwrap();
        assert_eq!(lex.synonyms("good"), Some(&set(&["nice"])));
        assert_eq!(summary.self_pairs_dropped, 1);
    }

    #[test]
    fn skips_heads_without_synonyms() {
        let (lex, summary) = load_lexicon("lonely\nself self\n\nok fine".as_bytes()).unwrap();
        assert_eq!(lex.len(), 1);
        assert_eq!(summary.skipped_lines, 2);
        assert_eq!(summary.lines, 3);
    }

    #[test]
    fn empty_input_is_empty_lexicon() {
        let (lex, _) = load_lexicon("".as_bytes()).unwrap();
        assert!(lex.is_empty());
    }

    #[test]
    fn repeated_heads_merge() {
        let (lex, _) = load_lexicon("a b c\na c d\r\n".as_bytes()).unwrap();
        assert_eq!(lex.synonyms("a"), Some(&set(&["b", "c", "d"])));
    }

    #[test]
    fn relation_is_directed() {
        let (lex, _) = load_lexicon("a b".as_bytes()).unwrap();
        assert!(lex.synonyms("b").is_none());
    }

    fn space(words: &[&str]) -> EmbeddingSpace {
        EmbeddingSpace::from_rows(words.iter().map(|w| (*w, vec![1.0]))).unwrap()
    }

    #[test]
    fn restrict_drops_missing_synonyms() {
        let (lex, _) = load_lexicon("good nice zzz".as_bytes()).unwrap();
        let (restricted, summary) = lex.restrict_to_vocab(&space(&["good", "nice"]));
        assert_eq!(restricted.synonyms("good"), Some(&set(&["nice"])));
        assert_eq!(summary.synonyms_dropped, 1);
        assert_eq!(summary.heads_dropped, 0);
    }

    #[test]
    fn restrict_drops_missing_heads() {
        let (lex, _) = load_lexicon("gone nice\nempty zzz".as_bytes()).unwrap();
        let (restricted, summary) = lex.restrict_to_vocab(&space(&["nice", "empty"]));
        assert!(restricted.is_empty());
        assert_eq!(summary.heads_dropped, 2);
    }

    #[test]
    fn restrict_is_identity_when_in_vocab() {
        let (lex, _) = load_lexicon("a b c\nb a".as_bytes()).unwrap();
        let (restricted, summary) = lex.restrict_to_vocab(&space(&["a", "b", "c"]));
        assert_eq!(restricted, lex);
        assert_eq!(summary, RestrictSummary::default());
    }
}
