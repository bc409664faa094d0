//! Platform-API invocation detection.
//!
//! A snippet "uses the platform API" when it calls through a cataloged
//! package prefix (`java.util.Arrays.sort(..)`), calls a method on a value
//! whose type the catalog knows — statically (`Cipher.getInstance(..)`),
//! through a declared variable (`bundle.getString(..)` where `bundle` is a
//! `ResourceBundle`), or through an assignment-inferred one (`cipher.init(..)`
//! after `cipher = Cipher.getInstance(..)`) — or constructs a cataloged type
//! with `new`. Witnesses are reported exactly as written. Detection works on
//! bare token streams too, so unparseable snippets still classify; string
//! literals and comments are never scanned.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ast::MethodAst;
use crate::error::Error;
use crate::token::{next_significant, prev_significant, Token, TokenKind};

/// Package prefixes, known simple type names, and static entry points of the
/// platform API.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApiCatalog {
    /// Dotted package prefixes, each normalized to end with `.`.
    prefixes: Vec<String>,
    /// Simple type name -> canonical package.
    types: BTreeMap<String, String>,
    /// `Type.method` names that are API calls even without a type line.
    entry_points: BTreeSet<String>,
}

impl ApiCatalog {
    /// Parses catalog text: one `prefix <package.>` or
    /// `type <SimpleName> <package>` per line, `#` comments allowed.
    /// Loading is order-independent; conflicting `type` lines are an error.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut catalog = ApiCatalog::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["prefix", pkg] => {
                    let mut p = String::from(*pkg);
                    if !p.ends_with('.') {
                        p.push('.');
                    }
                    if !catalog.prefixes.contains(&p) {
                        catalog.prefixes.push(p);
                    }
                }
                ["type", name, pkg] => {
                    if !is_simple_name(name) {
                        return Err(Error::Catalog {
                            line: line_no,
                            message: format!("'{name}' is not a simple type name"),
                        });
                    }
                    if let Some(existing) = catalog.types.get(*name) {
                        if existing != pkg {
                            return Err(Error::Catalog {
                                line: line_no,
                                message: format!(
                                    "type '{name}' maps to both '{existing}' and '{pkg}'"
                                ),
                            });
                        }
                    } else {
                        catalog.types.insert(String::from(*name), String::from(*pkg));
                    }
                }
                _ => {
                    return Err(Error::Catalog {
                        line: line_no,
                        message: format!("expected 'prefix <pkg>' or 'type <Name> <pkg>', got '{line}'"),
                    });
                }
            }
        }
        catalog.prefixes.sort();
        Ok(catalog)
    }

    /// Adds `Type.method` pairs treated as API calls regardless of type lines.
    pub fn with_entry_points<I, S>(mut self, points: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.entry_points.extend(points.into_iter().map(Into::into));
        self
    }

    /// Source text of the built-in catalog, for provenance hashing.
    pub fn default_jvm_text() -> &'static str {
        include_str!("jvm_catalog.txt")
    }

    /// The built-in catalog of the Java runtime.
    pub fn default_jvm() -> Self {
        Self::parse(include_str!("jvm_catalog.txt"))
            .expect("built-in catalog is well-formed")
            .with_entry_points([
                "Cipher.getInstance",
                "MessageDigest.getInstance",
                "KeyGenerator.getInstance",
                "Mac.getInstance",
                "Charset.forName",
                "Pattern.compile",
                "DriverManager.getConnection",
                "ResourceBundle.getBundle",
            ])
    }

    pub fn known_type(&self, simple: &str) -> Option<&str> {
        self.types.get(simple).map(String::as_str)
    }

    /// True when a dotted name starts with a cataloged package prefix.
    pub fn matches_prefix(&self, qualified: &str) -> bool {
        self.prefixes.iter().any(|p| qualified.starts_with(p.as_str()))
    }

    pub fn is_entry_point(&self, type_and_method: &str) -> bool {
        self.entry_points.contains(type_and_method)
    }

    pub fn prefixes(&self) -> &[String] {
        &self.prefixes
    }

    pub fn type_count(&self) -> usize {
        self.types.len()
    }
}

fn is_simple_name(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c.is_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
}

/// Outcome of API detection: matched call sites, verbatim.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApiDetection {
    pub witnesses: Vec<String>,
}

impl ApiDetection {
    pub fn matched(&self) -> bool {
        !self.witnesses.is_empty()
    }
}

/// Detects API usage in a parsed method, using declared types of bindings
/// in addition to everything the token scan sees.
pub fn detect_api(ast: &MethodAst, catalog: &ApiCatalog) -> ApiDetection {
    let mut receivers: BTreeMap<String, String> = BTreeMap::new();
    for b in &ast.bindings {
        if let Some(ty) = &b.declared_type {
            if catalog.known_type(ty).is_some() {
                receivers.insert(b.original_name.clone(), ty.clone());
            }
        }
    }
    scan(&ast.tokens, catalog, receivers)
}

/// Detects API usage in a bare token stream (works for snippets that do not
/// parse as a single method).
pub fn detect_api_tokens(tokens: &[Token], catalog: &ApiCatalog) -> ApiDetection {
    scan(tokens, catalog, BTreeMap::new())
}

fn scan(
    tokens: &[Token],
    catalog: &ApiCatalog,
    mut receivers: BTreeMap<String, String>,
) -> ApiDetection {
    infer_receiver_types(tokens, catalog, &mut receivers);

    let mut witnesses: Vec<String> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut add = |w: String, witnesses: &mut Vec<String>| {
        if seen.insert(w.clone()) {
            witnesses.push(w);
        }
    };

    for i in 0..tokens.len() {
        let t = &tokens[i];
        if t.kind == TokenKind::Keyword && t.text == "new" {
            // Constructed type: `new Cipher(...)`, `new java.util.ArrayList<>()`.
            if let Some((chain, _)) = dotted_chain(tokens, i + 1) {
                let full = chain.join(".");
                let simple = chain.last().map(String::as_str).unwrap_or("");
                if catalog.known_type(simple).is_some()
                    || (chain.len() >= 2 && catalog.matches_prefix(&full))
                {
                    add(format!("new {full}"), &mut witnesses);
                }
            }
            continue;
        }
        if t.kind != TokenKind::Identifier || !is_chain_head(tokens, i) {
            continue;
        }
        let Some((chain, last_idx)) = dotted_chain(tokens, i) else { continue };
        let full = chain.join(".");
        if chain.len() >= 2 && catalog.matches_prefix(&full) {
            add(full, &mut witnesses);
            continue;
        }
        if chain.len() >= 2 {
            // First hop only: `x.m(...)` where the type of `x` is known.
            let hop_call = if chain.len() == 2 {
                next_significant(tokens, last_idx + 1).is_some_and(|n| tokens[n].is("("))
            } else {
                false
            };
            if hop_call {
                let pair = format!("{}.{}", chain[0], chain[1]);
                let typed = catalog.known_type(&chain[0]).is_some()
                    || receivers.contains_key(&chain[0]);
                if typed || catalog.is_entry_point(&pair) {
                    add(pair, &mut witnesses);
                }
            }
        }
    }
    ApiDetection { witnesses }
}

/// Records `name -> Type` for assignments `name = Type.method(...)` and
/// `name = new Type(...)` so later calls through fields resolve too.
fn infer_receiver_types(
    tokens: &[Token],
    catalog: &ApiCatalog,
    receivers: &mut BTreeMap<String, String>,
) {
    for i in 0..tokens.len() {
        let t = &tokens[i];
        if t.kind != TokenKind::Identifier || !is_chain_head(tokens, i) {
            continue;
        }
        let Some(eq) = next_significant(tokens, i + 1) else { continue };
        if !tokens[eq].is("=") {
            continue;
        }
        let Some(rhs) = next_significant(tokens, eq + 1) else { continue };
        let simple = if tokens[rhs].kind == TokenKind::Keyword && tokens[rhs].text == "new" {
            dotted_chain(tokens, rhs + 1).map(|(chain, _)| chain.last().cloned().unwrap_or_default())
        } else if tokens[rhs].kind == TokenKind::Identifier {
            // `x = Type.factory(...)`: take the receiver type itself.
            next_significant(tokens, rhs + 1)
                .filter(|&n| tokens[n].is("."))
                .map(|_| tokens[rhs].text.clone())
        } else {
            None
        };
        if let Some(simple) = simple {
            if catalog.known_type(&simple).is_some() {
                receivers.entry(t.text.clone()).or_insert(simple);
            }
        }
    }
}

/// True when the identifier at `i` is not preceded by `.`/`::`/`@`.
fn is_chain_head(tokens: &[Token], i: usize) -> bool {
    match prev_significant(tokens, i) {
        None => true,
        Some(p) => {
            let pt = &tokens[p];
            !(pt.is(".") || pt.is("::") || pt.is("@"))
        }
    }
}

/// Collects `ident(.ident)*` starting at or after raw index `from`,
/// returning the texts and the raw index of the last identifier.
fn dotted_chain(tokens: &[Token], from: usize) -> Option<(Vec<String>, usize)> {
    let first = next_significant(tokens, from)?;
    if tokens[first].kind != TokenKind::Identifier {
        return None;
    }
    let mut chain = alloc::vec![tokens[first].text.clone()];
    let mut last = first;
    loop {
        let Some(dot) = next_significant(tokens, last + 1) else { break };
        if !tokens[dot].is(".") {
            break;
        }
        let Some(next) = next_significant(tokens, dot + 1) else { break };
        if tokens[next].kind != TokenKind::Identifier {
            break;
        }
        chain.push(tokens[next].text.clone());
        last = next;
    }
    Some((chain, last))
}
