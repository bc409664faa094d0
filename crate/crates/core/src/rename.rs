//! Variable renaming: rewrites every binding to a fresh `varN` name while
//! preserving bytes outside the renamed occurrences.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::ast::{parse_method, BindingKind, MethodAst, StatementKind, StatementNode};
use crate::error::Error;
use crate::token::Span;

/// How fresh numbers are handed out across bindings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RenameOrder {
    /// Alphabetical by original name (digit runs compare numerically, so
    /// `var2` sorts before `var10` and canonical forms stay fixed points).
    #[default]
    Lexicographic,
    /// Source order of the declarations.
    Declaration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenameEntry {
    /// Index into `MethodAst::bindings`.
    pub binding: usize,
    pub from: String,
    pub to: String,
}

/// The per-binding name assignment a rename applied.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RenameMap {
    pub entries: Vec<RenameEntry>,
}

impl RenameMap {
    /// True when no name actually changed.
    pub fn is_identity(&self) -> bool {
        self.entries.iter().all(|e| e.from == e.to)
    }

    /// Assignment that maps the renamed bindings back to their originals.
    pub fn inverted(&self) -> Vec<(usize, String)> {
        self.entries
            .iter()
            .map(|e| (e.binding, e.from.clone()))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Renamed {
    pub ast: MethodAst,
    pub map: RenameMap,
}

/// Compares identifiers alphabetically with embedded digit runs compared by
/// numeric value (`var9` < `var10`).
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (ab, bb) = (a.as_bytes(), b.as_bytes());
    let (mut i, mut j) = (0, 0);
    while i < ab.len() && j < bb.len() {
        if ab[i].is_ascii_digit() && bb[j].is_ascii_digit() {
            let ei = run_end(ab, i);
            let ej = run_end(bb, j);
            let ra = trim_leading_zeros(&ab[i..ei]);
            let rb = trim_leading_zeros(&bb[j..ej]);
            let ord = ra.len().cmp(&rb.len()).then_with(|| ra.cmp(rb));
            if ord != Ordering::Equal {
                return ord;
            }
            i = ei;
            j = ej;
        } else {
            let ord = ab[i].cmp(&bb[j]);
            if ord != Ordering::Equal {
                return ord;
            }
            i += 1;
            j += 1;
        }
    }
    (ab.len() - i).cmp(&(bb.len() - j)).then_with(|| a.cmp(b))
}

fn run_end(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    i
}

fn trim_leading_zeros(run: &[u8]) -> &[u8] {
    let mut s = 0;
    while s + 1 < run.len() && run[s] == b'0' {
        s += 1;
    }
    &run[s..]
}

/// Renames every binding to `var0..varN-1`, skipping names already taken by
/// identifiers that are not bindings (fields, types, method names), so the
/// rewrite can never capture or collide. Running it on its own output is the
/// identity.
pub fn rename_variables(ast: &MethodAst, order: RenameOrder) -> Result<Renamed, Error> {
    let mut ordered: Vec<usize> = (0..ast.bindings.len()).collect();
    if order == RenameOrder::Lexicographic {
        ordered.sort_by(|&x, &y| {
            natural_cmp(&ast.bindings[x].original_name, &ast.bindings[y].original_name)
                .then(ast.bindings[x].declaration_site.start.cmp(&ast.bindings[y].declaration_site.start))
        });
    }
    let reserved = ast.unbound_identifier_texts();
    let mut assignments: Vec<(usize, String)> = Vec::with_capacity(ordered.len());
    let mut counter = 0usize;
    for &b in &ordered {
        let fresh = loop {
            let cand = format!("var{counter}");
            counter += 1;
            if !reserved.contains(&cand) {
                break cand;
            }
        };
        assignments.push((b, fresh));
    }
    apply_rename(ast, &assignments)
}

/// The scope interval of a binding, on the original source geometry. Block
/// locals are visible (and unshadowable) to the end of their statement
/// list; header declarations (catch parameters, resources, loop variables)
/// cover the block that follows them; parameters cover the whole body.
fn scope_interval(ast: &MethodAst, binding: usize) -> (usize, usize) {
    let b = &ast.bindings[binding];
    let start = b.declaration_site.start;
    if b.kind == BindingKind::Parameter {
        return (start, ast.source.len());
    }
    fn in_list(nodes: &[StatementNode], at: usize) -> Option<usize> {
        for n in nodes {
            if n.span.start <= at && at < n.span.end {
                if let Some(end) = in_list(&n.children, at) {
                    return Some(end);
                }
                let end = if n.kind == StatementKind::Declaration {
                    nodes.last().map_or(n.span.end, |l| l.span.end)
                } else {
                    n.children
                        .iter()
                        .find(|c| c.span.start >= at)
                        .map_or(n.span.end, |c| c.span.end)
                };
                return Some(end);
            }
        }
        None
    }
    (start, in_list(&ast.body, start).unwrap_or(ast.source.len()))
}

/// Rejects assignments that would end up declaring two same-named
/// variables in overlapping scopes (including names kept by untouched
/// bindings): the result would not be legal code.
fn check_scope_collisions(ast: &MethodAst, assignments: &[(usize, String)]) -> Result<(), Error> {
    let mut finals: Vec<&str> = ast.bindings.iter().map(|b| b.original_name.as_str()).collect();
    for (b, name) in assignments {
        finals[*b] = name.as_str();
    }
    let scopes: Vec<(usize, usize)> = (0..ast.bindings.len())
        .map(|b| scope_interval(ast, b))
        .collect();
    for i in 0..finals.len() {
        for j in i + 1..finals.len() {
            if finals[i] != finals[j] {
                continue;
            }
            let ((si, ei), (sj, ej)) = (scopes[i], scopes[j]);
            if (si <= sj && sj < ei) || (sj <= si && si < ej) {
                return Err(Error::contract(format!(
                    "renaming would put two variables named '{}' in overlapping scopes",
                    finals[i]
                )));
            }
        }
    }
    Ok(())
}

/// Rewrites the given bindings to the given names and re-parses the result,
/// checking that the statement structure and binding profile are unchanged.
pub fn apply_rename(ast: &MethodAst, assignments: &[(usize, String)]) -> Result<Renamed, Error> {
    for (b, name) in assignments {
        if *b >= ast.bindings.len() {
            return Err(Error::contract(format!("no binding with index {b}")));
        }
        if name.is_empty() || crate::token::tokenize(name).map_or(true, |t| t.len() != 1 || t[0].kind != crate::token::TokenKind::Identifier) {
            return Err(Error::contract(format!("'{name}' is not a usable identifier")));
        }
    }
    check_scope_collisions(ast, assignments)?;
    let mut edits: Vec<(Span, &str)> = Vec::new();
    for (b, name) in assignments {
        for &occ in &ast.bindings[*b].occurrences {
            edits.push((occ, name.as_str()));
        }
    }
    edits.sort_by_key(|(span, _)| span.start);
    debug_assert!(edits.windows(2).all(|w| w[0].0.end <= w[1].0.start));
    let mut out = String::with_capacity(ast.source.len());
    let mut at = 0;
    for (span, text) in &edits {
        out.push_str(&ast.source[at..span.start]);
        out.push_str(text);
        at = span.end;
    }
    out.push_str(&ast.source[at..]);

    let renamed = parse_method(&out)
        .map_err(|e| Error::contract(format!("rename produced an unparseable method: {e}")))?;
    if !renamed.structure_eq(ast) {
        return Err(Error::contract(
            "rename changed the method structure",
        ));
    }
    // Each occurrence swapped exactly one identifier token, so token
    // indices line up between the two parses. Every binding must keep its
    // exact occurrence positions: this is what rules out one variable
    // capturing another's uses (e.g. when two disjoint scopes legitimately
    // receive the same name).
    for (b, (old, new)) in ast.bindings.iter().zip(&renamed.bindings).enumerate() {
        let old_idx: Vec<Option<usize>> = old
            .occurrences
            .iter()
            .map(|s| ast.token_index_at(s.start))
            .collect();
        let new_idx: Vec<Option<usize>> = new
            .occurrences
            .iter()
            .map(|s| renamed.token_index_at(s.start))
            .collect();
        if old_idx != new_idx {
            return Err(Error::contract(format!(
                "rename moved the occurrences of binding {b}"
            )));
        }
    }
    let mut entries: Vec<RenameEntry> = assignments
        .iter()
        .map(|(b, name)| RenameEntry {
            binding: *b,
            from: ast.bindings[*b].original_name.clone(),
            to: name.clone(),
        })
        .collect();
    entries.sort_by_key(|e| e.binding);
    Ok(Renamed {
        ast: renamed,
        map: RenameMap { entries },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_order_places_var10_after_var9() {
        let mut names = ["var10", "var2", "var1", "var0", "var9"];
        names.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(names, ["var0", "var1", "var2", "var9", "var10"]);
        assert_eq!(natural_cmp("apple", "banana"), Ordering::Less);
        assert_eq!(natural_cmp("a2b", "a10b"), Ordering::Less);
        // Numerically equal runs fall back to byte order.
        assert_eq!(natural_cmp("x01", "x1"), Ordering::Less);
        assert_eq!(natural_cmp("x1", "x1"), Ordering::Equal);
    }

    #[test]
    fn renames_alphabetically_by_default() {
        let src = "int f(int beta, int alpha) { return beta + alpha; }";
        let ast = parse_method(src).unwrap();
        let r = rename_variables(&ast, RenameOrder::default()).unwrap();
        // alpha sorts first, so it becomes var0 even though beta declares first.
        assert_eq!(
            r.ast.source,
            "int f(int var1, int var0) { return var1 + var0; }"
        );
        assert!(!r.map.is_identity());
    }

    #[test]
    fn declaration_order_follows_source() {
        let src = "int f(int beta, int alpha) { return beta + alpha; }";
        let ast = parse_method(src).unwrap();
        let r = rename_variables(&ast, RenameOrder::Declaration).unwrap();
        assert_eq!(
            r.ast.source,
            "int f(int var0, int var1) { return var0 + var1; }"
        );
    }

    #[test]
    fn avoids_identifiers_already_present() {
        // `var0` is a field here, not a binding, so fresh names skip it.
        let src = "void f(int a) { var0 += a; }";
        let ast = parse_method(src).unwrap();
        let r = rename_variables(&ast, RenameOrder::default()).unwrap();
        assert_eq!(r.ast.source, "void f(int var1) { var0 += var1; }");
    }

    #[test]
    fn renaming_is_idempotent() {
        let srcs = [
            "int f(int beta, int alpha) { int gamma = beta; return gamma + alpha; }",
            "void g() { int a; int b; int c; int d; int e; int f0; int g0; int h; int i; int j; int k; int l; sink(a, b, c, d, e, f0, g0, h, i, j, k, l); }",
        ];
        for src in srcs {
            let once = rename_variables(&parse_method(src).unwrap(), RenameOrder::default()).unwrap();
            let twice = rename_variables(&once.ast, RenameOrder::default()).unwrap();
            assert_eq!(once.ast.source, twice.ast.source, "{src}");
            assert!(twice.map.is_identity(), "{src}");
        }
    }

    #[test]
    fn inverse_restores_original_bytes() {
        let src = "String join(String sep, List<String> parts) {\n  StringBuilder out = new StringBuilder(); // buffer\n  for (String p : parts) { out.append(sep).append(p); }\n  return out.toString();\n}";
        let ast = parse_method(src).unwrap();
        let r = rename_variables(&ast, RenameOrder::default()).unwrap();
        assert_ne!(r.ast.source, src);
        let back = apply_rename(&r.ast, &r.map.inverted()).unwrap();
        assert_eq!(back.ast.source, src);
    }

    #[test]
    fn comments_and_strings_are_untouched() {
        let src = "void f(int count) { log(\"count\"); /* count */ use(count); }";
        let ast = parse_method(src).unwrap();
        let r = rename_variables(&ast, RenameOrder::default()).unwrap();
        assert_eq!(
            r.ast.source,
            "void f(int var0) { log(\"count\"); /* count */ use(var0); }"
        );
    }

    #[test]
    fn rejects_bad_targets() {
        let ast = parse_method("void f(int a, int b) {}").unwrap();
        assert!(apply_rename(&ast, &[(0, "int".into())]).is_err());
        assert!(apply_rename(&ast, &[(0, "x y".into())]).is_err());
        assert!(apply_rename(&ast, &[(0, "x".into()), (1, "x".into())]).is_err());
        assert!(apply_rename(&ast, &[(9, "x".into())]).is_err());
    }

    #[test]
    fn duplicate_names_allowed_only_in_disjoint_scopes() {
        // Two catch clauses of separate statements may share a name...
        let src = "void f() { int a = 0; try { a = 1; } catch (Exception x) { a = 2; } try { a = 3; } catch (Exception y) { a = 4; } }";
        let ast = parse_method(src).unwrap();
        let x = ast.bindings.iter().position(|b| b.original_name == "x").unwrap();
        let y = ast.bindings.iter().position(|b| b.original_name == "y").unwrap();
        let ok = apply_rename(&ast, &[(x, "issue".into()), (y, "issue".into())]).unwrap();
        assert_eq!(ok.ast.source.matches("issue").count(), 2);

        // ...but a nested block cannot reuse an enclosing local's name,
        let nested = parse_method("void f() { int a = 0; if (a > 0) { int b = 1; a = b; } }").unwrap();
        assert!(apply_rename(&nested, &[(1, "a".into())]).is_err());
        // and siblings in one block cannot collide either.
        let flat = parse_method("void f() { int a = 0; int b = 1; use(a, b); }").unwrap();
        assert!(apply_rename(&flat, &[(0, "same".into()), (1, "same".into())]).is_err());
    }

    #[test]
    fn no_bindings_is_the_identity() {
        let src = "void ping() { helper(); }";
        let ast = parse_method(src).unwrap();
        let r = rename_variables(&ast, RenameOrder::default()).unwrap();
        assert_eq!(r.ast.source, src);
        assert!(r.map.is_identity());
    }
}
