//! Safe statement permutation: swaps adjacent statements inside a basic
//! block when their def/use sets prove the order cannot matter.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::ast::{parse_method, MethodAst};
use crate::dataflow::{basic_blocks, def_use, independent};
use crate::error::Error;
use crate::rng::{hash64, stream};
use crate::token::{next_significant, prev_significant, Span, TokenKind};

/// An adjacent pair of statements that may be swapped safely.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapCandidate {
    /// Which basic block the pair sits in (source order).
    pub block: usize,
    /// Position of the first statement of the pair within its block.
    pub index: usize,
    pub first: Span,
    pub second: Span,
}

/// How many permuted variants one input yields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PermutePolicy {
    /// A single variant, chosen uniformly among the candidates (seeded).
    #[default]
    One,
    /// Every candidate, in source order.
    All,
    /// Up to `n` distinct candidates, sampled without replacement (seeded).
    UpTo(usize),
}

#[derive(Debug, Clone)]
pub struct PermutedVariant {
    pub source: String,
    pub candidate: SwapCandidate,
}

/// Finds every swappable adjacent pair. Two statements qualify when their
/// def/use sets are pairwise disjoint on writes. In `conservative` mode a
/// shared unresolved receiver (same field or type consulted with `.` by both
/// statements) also blocks the pair, since calls through it might interact.
pub fn swap_candidates(ast: &MethodAst, conservative: bool) -> Vec<SwapCandidate> {
    let mut out = Vec::new();
    for (bi, block) in basic_blocks(ast).iter().enumerate() {
        let du: Vec<_> = block.statements.iter().map(|s| def_use(ast, s)).collect();
        for k in 0..block.statements.len().saturating_sub(1) {
            if !independent(&du[k], &du[k + 1]) {
                continue;
            }
            if conservative {
                let a = unresolved_receivers(ast, block.statements[k].span);
                let b = unresolved_receivers(ast, block.statements[k + 1].span);
                if !a.is_disjoint(&b) {
                    continue;
                }
            }
            out.push(SwapCandidate {
                block: bi,
                index: k,
                first: block.statements[k].span,
                second: block.statements[k + 1].span,
            });
        }
    }
    out
}

/// Identifier texts inside `span` that start a `.` chain without resolving
/// to any binding: fields and types whose state calls could touch.
fn unresolved_receivers(ast: &MethodAst, span: Span) -> BTreeSet<String> {
    let bound = ast.occurrence_spans();
    let mut out = BTreeSet::new();
    for (i, t) in ast.tokens.iter().enumerate() {
        if t.kind != TokenKind::Identifier || !span.contains(t.span) || bound.contains(&t.span) {
            continue;
        }
        let heads_chain = next_significant(&ast.tokens, i + 1)
            .is_some_and(|n| ast.tokens[n].is("."));
        let mid_chain = prev_significant(&ast.tokens, i)
            .is_some_and(|p| ast.tokens[p].is("."));
        if heads_chain && !mid_chain {
            out.insert(t.text.clone());
        }
    }
    out
}

/// Swaps two non-overlapping spans, keeping the bytes between them in place.
pub fn apply_swap(source: &str, first: Span, second: Span) -> String {
    debug_assert!(first.end <= second.start);
    let mut out = String::with_capacity(source.len());
    out.push_str(&source[..first.start]);
    out.push_str(&source[second.start..second.end]);
    out.push_str(&source[first.end..second.start]);
    out.push_str(&source[first.start..first.end]);
    out.push_str(&source[second.end..]);
    out
}

/// Produces permuted variants of the method per `policy`. The seeded choices
/// mix in a hash of the source so each snippet draws an independent stream.
/// Methods with no safe pair yield no variants.
pub fn permute_statements(
    ast: &MethodAst,
    policy: PermutePolicy,
    seed: u64,
    conservative: bool,
) -> Result<Vec<PermutedVariant>, Error> {
    let candidates = swap_candidates(ast, conservative);
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let chosen: Vec<SwapCandidate> = match policy {
        PermutePolicy::All => candidates,
        PermutePolicy::One => {
            let mut rng = stream(seed, "permute", &[hash64(ast.source.as_bytes())]);
            let pick = rng.gen_range(0..candidates.len());
            alloc::vec![candidates[pick]]
        }
        PermutePolicy::UpTo(n) => {
            let mut rng = stream(seed, "permute", &[hash64(ast.source.as_bytes())]);
            let mut idx: Vec<usize> = (0..candidates.len()).collect();
            // Partial Fisher-Yates: the first `take` entries are the sample.
            let take = n.min(idx.len());
            for i in 0..take {
                let j = rng.gen_range(i..idx.len());
                idx.swap(i, j);
            }
            let mut picks: Vec<usize> = idx[..take].to_vec();
            picks.sort_unstable();
            picks.into_iter().map(|i| candidates[i]).collect()
        }
    };
    let mut out = Vec::with_capacity(chosen.len());
    for cand in chosen {
        let source = apply_swap(&ast.source, cand.first, cand.second);
        let reparsed = parse_method(&source)
            .map_err(|e| Error::contract(format!("swap produced an unparseable method: {e}")))?;
        if reparsed.bindings.len() != ast.bindings.len()
            || reparsed.all_statements().len() != ast.all_statements().len()
        {
            return Err(Error::contract(
                "swap changed the statement or binding profile",
            ));
        }
        out.push(PermutedVariant { source, candidate: cand });
    }
    Ok(out)
}
