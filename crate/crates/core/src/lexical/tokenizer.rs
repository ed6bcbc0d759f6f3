//! Text analysis: lowercasing, stopword removal, stemming.
//!
//! The default pipeline (lowercase, classic English stopwords, Porter
//! stemming) mirrors the conventional analyzer used by the lexical
//! baselines this crate reproduces.

use std::collections::BTreeSet;
use std::fmt;

/// The classic 33-word English stopword list.
pub const CLASSIC_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "if", "in", "into", "is", "it",
    "no", "not", "of", "on", "or", "such", "that", "the", "their", "then", "there", "these",
    "they", "this", "to", "was", "will", "with",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StemmerKind {
    None,
    Porter,
}

/// Deterministic tokenizer. Splitting is on non-alphanumeric characters;
/// stopwords are dropped after lowercasing and before stemming.
pub struct Tokenizer {
    lowercase: bool,
    stopwords: BTreeSet<String>,
    stemmer_kind: StemmerKind,
    stemmer: Option<rust_stemmers::Stemmer>,
}

impl Tokenizer {
    pub fn new(lowercase: bool, stopwords: BTreeSet<String>, stemmer_kind: StemmerKind) -> Self {
        let stemmer = match stemmer_kind {
            StemmerKind::None => None,
            StemmerKind::Porter => Some(rust_stemmers::Stemmer::create(
                rust_stemmers::Algorithm::English,
            )),
        };
        Tokenizer {
            lowercase,
            stopwords,
            stemmer_kind,
            stemmer,
        }
    }

    /// Lowercase + classic stopwords + Porter stemming.
    pub fn english() -> Self {
        Self::new(true, classic_stopwords(), StemmerKind::Porter)
    }

    /// Lowercase split only; useful for tests and synthetic corpora.
    pub fn plain() -> Self {
        Self::new(true, BTreeSet::new(), StemmerKind::None)
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn stemmer_kind(&self) -> StemmerKind {
        self.stemmer_kind
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for raw in text.split(|c: char| !c.is_alphanumeric()) {
            if raw.is_empty() {
                continue;
            }
            let token = if self.lowercase {
                raw.to_lowercase()
            } else {
                raw.to_string()
            };
            if self.stopwords.contains(&token) {
                continue;
            }
            let token = match &self.stemmer {
                Some(stemmer) => stemmer.stem(&token).into_owned(),
                None => token,
            };
            if !token.is_empty() {
                out.push(token);
            }
        }
        out
    }
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::english()
    }
}

impl Clone for Tokenizer {
    fn clone(&self) -> Self {
        Self::new(self.lowercase, self.stopwords.clone(), self.stemmer_kind)
    }
}

impl fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tokenizer")
            .field("lowercase", &self.lowercase)
            .field("stopwords", &self.stopwords.len())
            .field("stemmer", &self.stemmer_kind)
            .finish()
    }
}

impl PartialEq for Tokenizer {
    fn eq(&self, other: &Self) -> bool {
        self.lowercase == other.lowercase
            && self.stemmer_kind == other.stemmer_kind
            && self.stopwords == other.stopwords
    }
}

pub fn classic_stopwords() -> BTreeSet<String> {
    CLASSIC_STOPWORDS.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_lowercases_and_stems() {
        let tok = Tokenizer::english();
        assert_eq!(
            tok.tokenize("The Quick-Brown foxes, Running!"),
            vec!["quick", "brown", "fox", "run"]
        );
    }

    #[test]
    fn stopwords_removed_before_stemming() {
        let tok = Tokenizer::english();
        assert!(tok.tokenize("the and of").is_empty());
    }

    #[test]
    fn plain_keeps_stopwords() {
        let tok = Tokenizer::plain();
        assert_eq!(tok.tokenize("The cat"), vec!["the", "cat"]);
    }

    #[test]
    fn deterministic() {
        let tok = Tokenizer::english();
        let text = "Retrieval effectiveness of pseudo queries";
        assert_eq!(tok.tokenize(text), tok.tokenize(text));
    }

    #[test]
    fn empty_input_yields_no_tokens() {
        assert!(Tokenizer::english().tokenize("  \t\n ").is_empty());
    }
}
