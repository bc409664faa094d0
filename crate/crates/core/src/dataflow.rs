//! Per-statement def/use sets over resolved bindings, plus straight-line
//! basic blocks. These feed the safety check for statement permutation.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::ast::{is_assign_op, MethodAst, StatementKind, StatementNode};
use crate::token::{next_significant, prev_significant, TokenKind};

/// Binding ids written (`defs`) and read (`uses`) by one statement,
/// including everything nested inside it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DefUse {
    pub defs: BTreeSet<usize>,
    pub uses: BTreeSet<usize>,
}

/// Computes defs and uses for `stmt`. A declaration or plain assignment
/// target is a def; a compound assignment, increment/decrement, or an
/// assignment through a member/index chain both defines and uses the
/// variable; every other occurrence is a use.
pub fn def_use(ast: &MethodAst, stmt: &StatementNode) -> DefUse {
    let mut du = DefUse::default();
    for (id, binding) in ast.bindings.iter().enumerate() {
        for &occ in &binding.occurrences {
            if !stmt.span.contains(occ) {
                continue;
            }
            if occ == binding.declaration_site {
                du.defs.insert(id);
                continue;
            }
            let Some(ti) = ast.token_index_at(occ.start) else { continue };
            let (writes, reads) = classify_occurrence(ast, ti);
            if writes {
                du.defs.insert(id);
            }
            if reads {
                du.uses.insert(id);
            }
        }
    }
    du
}

/// (writes, reads) for the occurrence at token index `ti`.
fn classify_occurrence(ast: &MethodAst, ti: usize) -> (bool, bool) {
    let toks = &ast.tokens;
    if let Some(p) = prev_significant(toks, ti) {
        if toks[p].is("++") || toks[p].is("--") {
            return (true, true);
        }
    }
    // Walk the member/index chain rooted at this occurrence to find what
    // happens to the resulting lvalue.
    let mut at = ti;
    let mut chained = false;
    loop {
        let Some(n) = next_significant(toks, at + 1) else { return (false, true) };
        let t = &toks[n];
        if t.is(".") {
            match next_significant(toks, n + 1) {
                Some(m) if toks[m].kind == TokenKind::Identifier => {
                    at = m;
                    chained = true;
                    continue;
                }
                _ => return (false, true),
            }
        }
        if t.is("[") {
            // Find the matching bracket; parens inside index expressions
            // keep their own bracket balance.
            let mut depth = 1i32;
            let mut j = n + 1;
            let mut closed = None;
            while let Some(k) = next_significant(toks, j) {
                match toks[k].text.as_str() {
                    "[" => depth += 1,
                    "]" => {
                        depth -= 1;
                        if depth == 0 {
                            closed = Some(k);
                            break;
                        }
                    }
                    _ => {}
                }
                j = k + 1;
            }
            match closed {
                Some(k) => {
                    at = k;
                    chained = true;
                    continue;
                }
                None => return (false, true),
            }
        }
        if is_assign_op(&t.text) {
            if !chained && t.is("=") {
                return (true, false);
            }
            // Compound assignment reads the old value; writing through a
            // chain reads the base reference.
            return (true, true);
        }
        if t.is("++") || t.is("--") {
            return (true, true);
        }
        return (false, true);
    }
}

/// True when neither statement writes something the other touches.
pub fn independent(a: &DefUse, b: &DefUse) -> bool {
    a.defs.is_disjoint(&b.uses) && a.uses.is_disjoint(&b.defs) && a.defs.is_disjoint(&b.defs)
}

/// A maximal run of consecutive straight-line statements (expressions and
/// declarations) within one statement list.
#[derive(Debug, Clone)]
pub struct BasicBlock {
    pub statements: Vec<StatementNode>,
}

fn is_straight_line(kind: StatementKind) -> bool {
    matches!(kind, StatementKind::Expression | StatementKind::Declaration)
}

/// Collects basic blocks from every statement list in the method, in source
/// order. Control-flow statements end the current run; their nested bodies
/// are scanned as separate lists.
pub fn basic_blocks(ast: &MethodAst) -> Vec<BasicBlock> {
    let mut out = Vec::new();
    walk_list(&ast.body, &mut out);
    out
}

fn walk_list(stmts: &[StatementNode], out: &mut Vec<BasicBlock>) {
    let mut run: Vec<StatementNode> = Vec::new();
    for s in stmts {
        if is_straight_line(s.kind) {
            run.push(s.clone());
        } else {
            flush(&mut run, out);
            descend(s, out);
        }
    }
    flush(&mut run, out);
}

fn flush(run: &mut Vec<StatementNode>, out: &mut Vec<BasicBlock>) {
    if !run.is_empty() {
        out.push(BasicBlock {
            statements: core::mem::take(run),
        });
    }
}

fn descend(s: &StatementNode, out: &mut Vec<BasicBlock>) {
    match s.kind {
        StatementKind::Block => walk_list(&s.children, out),
        _ => {
            for c in &s.children {
                if c.kind == StatementKind::Block {
                    walk_list(&c.children, out);
                } else if is_straight_line(c.kind) {
                    out.push(BasicBlock {
                        statements: alloc::vec![c.clone()],
                    });
                } else {
                    descend(c, out);
                }
            }
        }
    }
}
