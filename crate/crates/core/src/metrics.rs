//! Ranking evaluation: put the matching snippet among distractors, rank by
//! model score, and summarize how early the match lands.
//!
//! `frank` is the 1-based position of the correct snippet. Success@k is
//! the fraction of queries whose match lands in the top k; the mean
//! reciprocal rank averages `1/frank`. Candidate order under tied scores
//! is fixed (id ascending), so every report is reproducible.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::corpus::Corpus;
use crate::encoder::EncoderModel;
use crate::ensemble::EnsembleModel;
use crate::error::Error;
use crate::rng::stream;

/// Anything that can judge how well a query describes a code snippet.
pub trait PairScorer {
    fn score(&self, query: &str, code: &str) -> f64;
}

impl PairScorer for EncoderModel {
    fn score(&self, query: &str, code: &str) -> f64 {
        self.score_pair(query, code)
    }
}

impl PairScorer for EnsembleModel {
    fn score(&self, query: &str, code: &str) -> f64 {
        self.score_pair(query, code)
    }
}

impl<F: Fn(&str, &str) -> f64> PairScorer for F {
    fn score(&self, query: &str, code: &str) -> f64 {
        self(query, code)
    }
}

/// The outcome of ranking one query against its candidate set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingResult {
    pub query_id: String,
    /// 1-based rank of the correct snippet.
    pub frank: usize,
    /// Candidate ids, best first.
    pub ranked_ids: Vec<String>,
}

/// Scores `query` against every `(id, code)` candidate and ranks them.
/// Exactly one candidate must carry `correct_id`. Ties break by id so the
/// ordering never depends on input order.
pub fn rank<S: PairScorer>(
    scorer: &S,
    query: &str,
    correct_id: &str,
    candidates: &[(String, String)],
) -> Result<RankingResult, Error> {
    let matches = candidates.iter().filter(|(id, _)| id == correct_id).count();
    if matches != 1 {
        return Err(Error::contract(alloc::format!(
            "candidate set must contain the correct id exactly once (found {matches})"
        )));
    }
    let mut scored: Vec<(f64, &str)> = candidates
        .iter()
        .map(|(id, code)| (scorer.score(query, code), id.as_str()))
        .collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| a.1.cmp(b.1))
    });
    let frank = scored
        .iter()
        .position(|(_, id)| *id == correct_id)
        .expect("correct id survives scoring")
        + 1;
    Ok(RankingResult {
        query_id: String::from(correct_id),
        frank,
        ranked_ids: scored.into_iter().map(|(_, id)| String::from(id)).collect(),
    })
}

/// Fraction of queries whose match ranked within the top `k`.
pub fn success_rate_at_k(results: &[RankingResult], k: usize) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    let hits = results.iter().filter(|r| r.frank <= k).count();
    hits as f64 / results.len() as f64
}

/// Mean reciprocal rank over all queries.
pub fn mrr(results: &[RankingResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    let total: f64 = results.iter().map(|r| 1.0 / r.frank as f64).sum();
    total / results.len() as f64
}

/// A full evaluation summary.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub query_count: usize,
    pub distractors: usize,
    pub seed: u64,
    pub success_rate: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub results: Vec<RankingResult>,
}

/// Evaluates a scorer over a corpus. Each entry's query ranks its own code
/// against `distractors` other snippets sampled without replacement (a
/// fresh deterministic draw per query).
pub fn evaluate<S: PairScorer>(
    scorer: &S,
    corpus: &Corpus,
    distractors: usize,
    ks: &[usize],
    seed: u64,
) -> Result<MetricsReport, Error> {
    if corpus.is_empty() {
        return Err(Error::contract("cannot evaluate an empty corpus"));
    }
    if corpus.len() < distractors + 1 {
        return Err(Error::contract(alloc::format!(
            "need at least {} entries for {distractors} distractors, corpus has {}",
            distractors + 1,
            corpus.len()
        )));
    }
    let entries = corpus.entries();
    let mut results = Vec::with_capacity(entries.len());
    for (idx, entry) in entries.iter().enumerate() {
        let mut pool: Vec<usize> = (0..entries.len()).filter(|&j| j != idx).collect();
        let mut rng = stream(seed, "eval", &[idx as u64]);
        let mut candidates: Vec<(String, String)> = Vec::with_capacity(distractors + 1);
        candidates.push((entry.id.clone(), entry.code.clone()));
        for i in 0..distractors {
            let j = rng.gen_range(i..pool.len());
            pool.swap(i, j);
            let picked = &entries[pool[i]];
            candidates.push((picked.id.clone(), picked.code.clone()));
        }
        results.push(rank(scorer, &entry.query, &entry.id, &candidates)?);
    }
    let mut success_rate = BTreeMap::new();
    for &k in ks {
        success_rate.insert(k, success_rate_at_k(&results, k));
    }
    Ok(MetricsReport {
        query_count: results.len(),
        distractors,
        seed,
        success_rate,
        mrr: mrr(&results),
        results,
    })
}
