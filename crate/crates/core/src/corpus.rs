//! Corpora of (id, code, query) entries and the balanced pair datasets the
//! models train on.
//!
//! Each search perspective gets its own dataset: `structure` keeps originals
//! plus variable-renamed copies (surface names hidden), `variable` keeps
//! originals plus safely permuted copies (statement order hidden), and `api`
//! keeps only entries that call into the platform API. Every entry then
//! yields one matched pair and one mismatched pair whose query is drawn from
//! a different entry, so labels stay balanced 1:1.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::api::{detect_api, detect_api_tokens, ApiCatalog};
use crate::ast::parse_method;
use crate::error::Error;
use crate::permute::{permute_statements, PermutePolicy};
use crate::rename::{rename_variables, RenameMap, RenameOrder};
use crate::rng::{hash64, stream};
use crate::token::tokenize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub id: String,
    pub code: String,
    /// Natural-language search query (the documentation summary).
    pub query: String,
}

/// A set of entries with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    entries: Vec<CorpusEntry>,
}

impl Corpus {
    pub fn from_entries(entries: Vec<CorpusEntry>) -> Result<Self, Error> {
        let mut seen = alloc::collections::BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::contract(format!("duplicate entry id '{}'", e.id)));
            }
        }
        Ok(Corpus { entries })
    }

    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Perspective {
    Structure,
    Variable,
    Api,
}

impl Perspective {
    pub const ALL: [Perspective; 3] = [Perspective::Structure, Perspective::Variable, Perspective::Api];

    pub fn as_str(self) -> &'static str {
        match self {
            Perspective::Structure => "structure",
            Perspective::Variable => "variable",
            Perspective::Api => "api",
        }
    }
}

impl core::str::FromStr for Perspective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "structure" => Ok(Perspective::Structure),
            "variable" => Ok(Perspective::Variable),
            "api" => Ok(Perspective::Api),
            other => Err(Error::contract(format!("unknown perspective '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Original,
    Renamed,
    Permuted,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Original => "original",
            Provenance::Renamed => "renamed",
            Provenance::Permuted => "permuted",
        }
    }
}

impl core::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "original" => Ok(Provenance::Original),
            "renamed" => Ok(Provenance::Renamed),
            "permuted" => Ok(Provenance::Permuted),
            other => Err(Error::contract(format!("unknown provenance '{other}'"))),
        }
    }
}

/// One training example: a query/code pair with its match label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairExample {
    pub query: String,
    pub code: String,
    /// 1 = the query describes the code, 0 = it does not.
    pub label: u8,
    /// How the code text came to be (originals vs. transform output).
    pub provenance: Provenance,
    /// Id of the corpus entry the code descends from.
    pub origin_id: String,
}

/// An entry of the augmented set a perspective dataset is built over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedEntry {
    pub entry: CorpusEntry,
    pub provenance: Provenance,
    pub origin_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Rename,
    Permute,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransformDetail {
    Rename(RenameMap),
    Permute { block: usize, index: usize },
}

/// Audit record for one applied transform.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformRecord {
    pub kind: TransformKind,
    /// Hash of the input source at transform time.
    pub input_hash: u64,
    pub output_source: String,
    pub detail: TransformDetail,
}

/// Knobs for augmentation.
#[derive(Debug, Clone)]
pub struct AugmentOptions {
    pub rename_order: RenameOrder,
    pub permute_policy: PermutePolicy,
    /// Treat shared unresolved receivers as permutation conflicts.
    pub conservative: bool,
    pub catalog: ApiCatalog,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions {
            rename_order: RenameOrder::default(),
            permute_policy: PermutePolicy::default(),
            conservative: false,
            catalog: ApiCatalog::default_jvm(),
        }
    }
}

/// Counters describing what augmentation did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AugmentStats {
    pub originals: usize,
    pub variants: usize,
    /// Entries whose code does not parse as a single method; they stay in
    /// the set untransformed (and still classify for the api perspective).
    pub unparseable: usize,
    /// Renames that changed nothing (no bindings, or already canonical).
    pub identity_renames: usize,
    /// Parseable entries with no safely swappable statement pair.
    pub no_swap_candidates: usize,
    pub api_selected: usize,
    pub api_rejected: usize,
}

/// Builds the augmented entry set for one perspective.
pub fn augment(
    corpus: &Corpus,
    perspective: Perspective,
    seed: u64,
    opts: &AugmentOptions,
) -> Result<(Vec<AugmentedEntry>, Vec<TransformRecord>, AugmentStats), Error> {
    let mut out = Vec::new();
    let mut records = Vec::new();
    let mut stats = AugmentStats::default();
    for entry in corpus.entries() {
        match perspective {
            Perspective::Structure => {
                stats.originals += 1;
                out.push(original(entry));
                let Ok(ast) = parse_method(&entry.code) else {
                    stats.unparseable += 1;
                    continue;
                };
                let renamed = rename_variables(&ast, opts.rename_order)?;
                if renamed.map.is_identity() {
                    stats.identity_renames += 1;
                    continue;
                }
                stats.variants += 1;
                records.push(TransformRecord {
                    kind: TransformKind::Rename,
                    input_hash: hash64(entry.code.as_bytes()),
                    output_source: renamed.ast.source.clone(),
                    detail: TransformDetail::Rename(renamed.map),
                });
                out.push(AugmentedEntry {
                    entry: CorpusEntry {
                        id: format!("{}#renamed", entry.id),
                        code: renamed.ast.source,
                        query: entry.query.clone(),
                    },
                    provenance: Provenance::Renamed,
                    origin_id: entry.id.clone(),
                });
            }
            Perspective::Variable => {
                stats.originals += 1;
                out.push(original(entry));
                let Ok(ast) = parse_method(&entry.code) else {
                    stats.unparseable += 1;
                    continue;
                };
                let variants =
                    permute_statements(&ast, opts.permute_policy, seed, opts.conservative)?;
                if variants.is_empty() {
                    stats.no_swap_candidates += 1;
                    continue;
                }
                for (k, v) in variants.into_iter().enumerate() {
                    stats.variants += 1;
                    records.push(TransformRecord {
                        kind: TransformKind::Permute,
                        input_hash: hash64(entry.code.as_bytes()),
                        output_source: v.source.clone(),
                        detail: TransformDetail::Permute {
                            block: v.candidate.block,
                            index: v.candidate.index,
                        },
                    });
                    out.push(AugmentedEntry {
                        entry: CorpusEntry {
                            id: format!("{}#permuted{}", entry.id, k + 1),
                            code: v.source,
                            query: entry.query.clone(),
                        },
                        provenance: Provenance::Permuted,
                        origin_id: entry.id.clone(),
                    });
                }
            }
            Perspective::Api => {
                let matched = match parse_method(&entry.code) {
                    Ok(ast) => detect_api(&ast, &opts.catalog).matched(),
                    Err(_) => {
                        stats.unparseable += 1;
                        match tokenize(&entry.code) {
                            Ok(toks) => detect_api_tokens(&toks, &opts.catalog).matched(),
                            Err(_) => false,
                        }
                    }
                };
                if matched {
                    stats.originals += 1;
                    stats.api_selected += 1;
                    out.push(original(entry));
                } else {
                    stats.api_rejected += 1;
                }
            }
        }
    }
    Ok((out, records, stats))
}

fn original(entry: &CorpusEntry) -> AugmentedEntry {
    AugmentedEntry {
        entry: entry.clone(),
        provenance: Provenance::Original,
        origin_id: entry.id.clone(),
    }
}

/// Builds one matched and one mismatched pair per entry. The mismatched
/// query is drawn uniformly from entries with a different origin and a
/// different query text, so labels are never lies.
pub fn make_pairs(entries: &[AugmentedEntry], seed: u64) -> Result<Vec<PairExample>, Error> {
    if entries.len() < 2 {
        return Err(Error::contract(
            "need at least two entries to draw mismatched queries",
        ));
    }
    let mut rng = stream(seed, "pairs", &[]);
    let mut out = Vec::with_capacity(entries.len() * 2);
    for (i, e) in entries.iter().enumerate() {
        out.push(PairExample {
            query: e.entry.query.clone(),
            code: e.entry.code.clone(),
            label: 1,
            provenance: e.provenance,
            origin_id: e.origin_id.clone(),
        });
        let mut attempts = 0;
        let other = loop {
            let j = rng.gen_range(0..entries.len());
            if j != i && entries[j].origin_id != e.origin_id && entries[j].entry.query != e.entry.query
            {
                break &entries[j];
            }
            attempts += 1;
            if attempts > 20 * entries.len() {
                return Err(Error::contract(
                    "cannot draw a mismatched query: too few distinct queries",
                ));
            }
        };
        out.push(PairExample {
            query: other.entry.query.clone(),
            code: e.entry.code.clone(),
            label: 0,
            provenance: e.provenance,
            origin_id: e.origin_id.clone(),
        });
    }
    Ok(out)
}

/// A balanced pair dataset for one perspective.
#[derive(Debug, Clone, PartialEq)]
pub struct PerspectiveDataset {
    pub perspective: Perspective,
    pub examples: Vec<PairExample>,
    pub seed: u64,
}

/// Augments the corpus for `perspective` and pairs the result.
pub fn build_perspective_dataset(
    corpus: &Corpus,
    perspective: Perspective,
    seed: u64,
    opts: &AugmentOptions,
) -> Result<(PerspectiveDataset, AugmentStats), Error> {
    let (entries, _records, stats) = augment(corpus, perspective, seed, opts)?;
    let examples = make_pairs(&entries, seed)?;
    Ok((
        PerspectiveDataset {
            perspective,
            examples,
            seed,
        },
        stats,
    ))
}

/// Pairs the corpus without augmentation (for baselines and the ensemble).
pub fn plain_pairs(corpus: &Corpus, seed: u64) -> Result<Vec<PairExample>, Error> {
    let entries: Vec<AugmentedEntry> = corpus.entries().iter().map(original).collect();
    make_pairs(&entries, seed)
}

/// Splits the corpus into train/valid/test by shuffling ids. The valid and
/// test sizes are floor-allocated; the remainder trains.
pub fn split(
    corpus: &Corpus,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(Corpus, Corpus, Corpus), Error> {
    let (tr, va, te) = ratios;
    for r in [tr, va, te] {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::contract("split ratios must be non-negative"));
        }
    }
    if libm::fabs(tr + va + te - 1.0) > 1e-9 {
        return Err(Error::contract("split ratios must sum to 1"));
    }
    let n = corpus.len();
    let n_valid = libm::floor(n as f64 * va + 1e-9) as usize;
    let n_test = libm::floor(n as f64 * te + 1e-9) as usize;
    let n_train = n - n_valid - n_test;

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = stream(seed, "split", &[]);
    // Fisher-Yates.
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let pick = |idx: &[usize]| {
        let mut sorted: Vec<usize> = idx.to_vec();
        sorted.sort_unstable();
        Corpus {
            entries: sorted.iter().map(|&i| corpus.entries[i].clone()).collect(),
        }
    };
    let train = pick(&order[..n_train]);
    let valid = pick(&order[n_train..n_train + n_valid]);
    let test = pick(&order[n_train + n_valid..]);
    Ok((train, valid, test))
}
