use std::collections::HashMap;

use crate::data::sequence::TokenSequence;
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Word ↔ id map. Ids are assigned by descending frequency, ties broken
/// lexicographically, after the two reserved entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    min_freq: usize,
}

impl Vocabulary {
    pub fn build(corpus: &[TokenSequence], min_freq: usize) -> Result<Self> {
        if corpus.iter().all(|s| s.is_empty()) {
            return Err(Error::EmptyCorpus("cannot build a vocabulary".into()));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for seq in corpus {
            for t in &seq.tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut entries: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(w, c)| c >= min_freq.max(1) && w != PAD_TOKEN && w != UNK_TOKEN)
            .collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let words = [PAD_TOKEN, UNK_TOKEN]
            .into_iter()
            .chain(entries.into_iter().map(|(w, _)| w))
            .map(String::from)
            .collect();
        Self::from_words(words, min_freq)
    }

    /// Rebuilds from an id-ordered word list (as stored in checkpoints).
    pub fn from_words(words: Vec<String>, min_freq: usize) -> Result<Self> {
        if words.len() < 2 || words[PAD] != PAD_TOKEN || words[UNK] != UNK_TOKEN {
            return Err(Error::Mismatch("vocabulary lacks reserved entries".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Mismatch(format!("duplicate vocabulary entry {w:?}")));
            }
        }
        Ok(Self {
            words,
            index,
            min_freq,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() <= 2
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn encode_seq(&self, seq: &TokenSequence) -> Vec<usize> {
        self.encode(&seq.tokens)
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<&str> {
        ids.iter().map(|&i| self.word(i).unwrap_or(UNK_TOKEN)).collect()
    }
}

pub fn build_vocab(corpus: &[TokenSequence], min_freq: usize) -> Result<Vocabulary> {
    Vocabulary::build(corpus, min_freq)
}
