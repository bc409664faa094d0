//! Subtoken vocabulary and query/code sequence encoding.
//!
//! Ids 0..=3 are reserved markers (pad, unknown, begin, separator). The
//! rest rank by descending corpus frequency with ties broken
//! lexicographically, so the same corpus always yields the same table.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Error;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const SEP: usize = 3;

const SPECIALS: [&str; 4] = ["<pad>", "<unk>", "<bos>", "<sep>"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary from token sequences, keeping subtokens that
    /// occur at least `min_frequency` times.
    pub fn build<'a, I>(docs: I, min_frequency: usize) -> Vocab
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            for tok in doc {
                *counts.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(tok, n)| n >= min_frequency.max(1) && !SPECIALS.contains(&tok))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| String::from(*s)).collect();
        tokens.extend(ranked.into_iter().map(|(tok, _)| String::from(tok)));
        Vocab::from_ordered(tokens).expect("constructed table is well formed")
    }

    /// Restores a vocabulary from an already-ordered token list (artifact
    /// load). The first four entries must be the reserved markers.
    pub fn from_ordered(tokens: Vec<String>) -> Result<Vocab, Error> {
        if tokens.len() < SPECIALS.len() {
            return Err(Error::contract("vocabulary is missing reserved markers"));
        }
        for (i, s) in SPECIALS.iter().enumerate() {
            if tokens[i] != *s {
                return Err(Error::contract(format!(
                    "vocabulary slot {i} must be '{s}', found '{}'",
                    tokens[i]
                )));
            }
        }
        let mut index = BTreeMap::new();
        for (i, tok) in tokens.iter().enumerate() {
            if index.insert(tok.clone(), i).is_some() {
                return Err(Error::contract(format!("duplicate vocabulary token '{tok}'")));
            }
        }
        Ok(Vocab { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Id for a subtoken; unknown words map to [`UNK`].
    pub fn id_of(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(|s| s.as_str())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Encodes a query/code pair as `[bos] query [sep] code`, at most
    /// `max_len` ids. Truncation drops code first: the query is what the
    /// user actually asked, so it survives as long as the budget allows.
    pub fn encode_pair(&self, query: &[String], code: &[String], max_len: usize) -> Vec<usize> {
        let max_len = max_len.max(2);
        let mut ids = Vec::with_capacity(max_len.min(2 + query.len() + code.len()));
        ids.push(BOS);
        for tok in query {
            if ids.len() + 1 >= max_len {
                break;
            }
            ids.push(self.id_of(tok));
        }
        ids.push(SEP);
        for tok in code {
            if ids.len() >= max_len {
                break;
            }
            ids.push(self.id_of(tok));
        }
        ids
    }
}
