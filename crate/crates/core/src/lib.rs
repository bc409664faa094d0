//! Multi-perspective semantic code search over function-level Java snippets.
//!
//! The crate models snippets as token streams plus a statement-level AST with
//! resolved local-variable bindings, applies semantics-preserving transforms
//! (variable renaming, safe adjacent-statement permutation, platform-API
//! detection), builds balanced query/code pair datasets from a corpus, trains
//! small cross-encoder models plus an ensemble that fuses their hidden states,
//! and scores rankings with FRank, SuccessRate@k and MRR.
//!
//! Everything here is pure computation over in-memory data: the crate is
//! `no_std` (with `alloc`) so it can be embedded anywhere. File formats, the
//! command-line tool and artifact IO live in the companion `mpcs` crate.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod api;
pub mod ast;
pub mod corpus;
pub mod dataflow;
pub mod encoder;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod permute;
pub mod rename;
pub mod rng;
pub mod subtoken;
pub mod synth;
pub mod token;
pub mod vocab;

pub use error::{Error, LexError, ParseError};
