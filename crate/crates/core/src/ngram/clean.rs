//! Token cleaning for context words.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use regex::Regex;

use crate::Error;

/// Default bundled stopword list (179 English words).
pub const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Universal POS tags used by the n-gram corpus annotations.
const POS_TAGS: &str = r"NOUN|VERB|ADJ|ADV|PRON|DET|ADP|NUM|CONJ|PRT|X|\.|START|END|ROOT";

/// Rules that turn a raw corpus token into a context word (or drop it).
#[derive(Debug, Clone)]
pub struct CleaningRules {
    stopwords: HashSet<String>,
    pos_placeholder: Regex,
    pos_suffix: Regex,
    number: Regex,
}

/// Outcome of cleaning one token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cleaned {
    Word(String),
    Drop,
}

impl Cleaned {
    pub fn word(&self) -> Option<&str> {
        match self {
            Cleaned::Word(w) => Some(w),
            Cleaned::Drop => None,
        }
    }
}

fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

impl CleaningRules {
    /// Rules with the bundled stopword list and the default tag patterns.
    pub fn bundled() -> Self {
        Self::with_stopwords(parse_word_list(BUNDLED_STOPWORDS))
            .expect("bundled stopword list is non-empty")
    }

    pub fn with_stopwords(stopwords: HashSet<String>) -> Result<Self, Error> {
        Self::new(
            stopwords,
            &format!(r"^_(?:{POS_TAGS})_$"),
            &format!(r"^(.+?)_(?:{POS_TAGS})$"),
            r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)$",
        )
    }

    /// Build rules from explicit patterns.
    ///
    /// `pos_suffix` must have one capture group holding the word part.
    pub fn new(
        stopwords: HashSet<String>,
        pos_placeholder: &str,
        pos_suffix: &str,
        number: &str,
    ) -> Result<Self, Error> {
        if stopwords.is_empty() {
            return Err(Error::Config("stopword set must not be empty".into()));
        }
        let compile = |p: &str| {
            Regex::new(p).map_err(|e| Error::Config(format!("invalid token pattern {p:?}: {e}")))
        };
        let pos_suffix = compile(pos_suffix)?;
        if pos_suffix.captures_len() < 2 {
            return Err(Error::Config(
                "pos suffix pattern needs a capture group for the word".into(),
            ));
        }
        Ok(CleaningRules {
            stopwords: stopwords.into_iter().map(|w| w.to_lowercase()).collect(),
            pos_placeholder: compile(pos_placeholder)?,
            pos_suffix,
            number: compile(number)?,
        })
    }

    /// Load a stopword file (one word per line, `#` comments) and use default patterns.
    pub fn from_stopword_file(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::with_stopwords(parse_word_list(&text))
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(&word.to_lowercase())
    }

    fn is_number(&self, token: &str) -> bool {
        let stripped: String = token.chars().filter(|&c| c != ',').collect();
        self.number.is_match(&stripped)
    }

    /// Clean a single raw token.
    pub fn clean_token(&self, token: &str) -> Cleaned {
        if self.pos_placeholder.is_match(token) {
            return Cleaned::Drop;
        }
        let word = match self.pos_suffix.captures(token) {
            Some(caps) => caps.get(1).map_or("", |m| m.as_str()),
            None => token,
        };
        if word.is_empty() || self.pos_placeholder.is_match(word) {
            return Cleaned::Drop;
        }
        // bare punctuation carries no lexical content
        if !word.chars().any(char::is_alphanumeric) {
            return Cleaned::Drop;
        }
        if self.is_number(word) {
            return Cleaned::Drop;
        }
        let lower = word.to_lowercase();
        if self.stopwords.contains(&lower) {
            return Cleaned::Drop;
        }
        Cleaned::Word(lower)
    }
}

impl Default for CleaningRules {
    fn default() -> Self {
        Self::bundled()
    }
}
