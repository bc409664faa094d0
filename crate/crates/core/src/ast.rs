//! Statement-level parsing of a single Java method and resolution of its
//! local variable bindings.
//!
//! The parser is a backtracking recursive-descent pass over the token stream.
//! It keeps statement granularity only: expressions, loop headers and switch
//! bodies are consumed as balanced token runs, which is enough for the
//! transforms built on top (renaming, safe permutation, API detection) while
//! staying robust on the long tail of real-world snippets.
//!
//! Binding resolution works in two steps. While parsing, every declaration
//! emits a scope event (frame pushed, frame popped, name defined) anchored to
//! a token index. Afterwards a single forward walk over all tokens replays
//! those events and attributes each identifier occurrence to the innermost
//! visible binding, skipping positions that cannot be a variable read or
//! write (member selects after `.`, call names before `(`, type positions,
//! labels, annotation names). Java forbids a local from shadowing another
//! local in the same method, so forward position-aware lookup is exact on
//! valid inputs.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, ParseError};
use crate::token::{next_significant, prev_significant, tokenize, Span, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatementKind {
    Expression,
    Declaration,
    If,
    For,
    While,
    Return,
    Try,
    Block,
    /// Everything else: do/switch/throw/break/continue/assert/labels/empty
    /// statements, synchronized blocks, local type declarations.
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementNode {
    pub kind: StatementKind,
    pub span: Span,
    pub children: Vec<StatementNode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BindingKind {
    Parameter,
    Local,
    LoopVariable,
}

/// A local variable (parameter, local or loop variable) with every place it
/// appears, in source order. The first occurrence is the declaration site.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableBinding {
    pub original_name: String,
    pub kind: BindingKind,
    pub declaration_site: Span,
    pub occurrences: Vec<Span>,
    /// Simple name of the declared type when one was written (`Map` for
    /// `Map<String, V>`), used for receiver-type inference.
    pub declared_type: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodAst {
    pub source: String,
    pub tokens: Vec<Token>,
    pub name: String,
    /// Indices into `bindings` for the method parameters, in signature order.
    pub parameters: Vec<usize>,
    /// Top-level statements of the method body (empty for bodiless methods).
    pub body: Vec<StatementNode>,
    pub bindings: Vec<VariableBinding>,
}

impl MethodAst {
    /// All statements in the body, depth first, source order.
    pub fn all_statements(&self) -> Vec<&StatementNode> {
        let mut out = Vec::new();
        fn visit<'a>(node: &'a StatementNode, out: &mut Vec<&'a StatementNode>) {
            out.push(node);
            for c in &node.children {
                visit(c, out);
            }
        }
        for s in &self.body {
            visit(s, &mut out);
        }
        out
    }

    /// Index of the token whose span starts at `start`.
    pub fn token_index_at(&self, start: usize) -> Option<usize> {
        self.tokens
            .binary_search_by_key(&start, |t| t.span.start)
            .ok()
    }

    /// Spans of every resolved binding occurrence.
    pub fn occurrence_spans(&self) -> BTreeSet<Span> {
        let mut set = BTreeSet::new();
        for b in &self.bindings {
            set.extend(b.occurrences.iter().copied());
        }
        set
    }

    /// Texts of identifier tokens that did not resolve to any binding
    /// (fields, type names, called methods, labels, ...).
    pub fn unbound_identifier_texts(&self) -> BTreeSet<String> {
        let bound = self.occurrence_spans();
        self.tokens
            .iter()
            .filter(|t| t.kind == TokenKind::Identifier && !bound.contains(&t.span))
            .map(|t| t.text.clone())
            .collect()
    }

    /// True when `other` has the same statement shape, method name, and
    /// binding profile (kinds and occurrence counts). Spans and variable
    /// names may differ, so this holds across renames.
    pub fn structure_eq(&self, other: &MethodAst) -> bool {
        fn shape_eq(a: &StatementNode, b: &StatementNode) -> bool {
            a.kind == b.kind
                && a.children.len() == b.children.len()
                && a.children.iter().zip(&b.children).all(|(x, y)| shape_eq(x, y))
        }
        self.name == other.name
            && self.parameters == other.parameters
            && self.bindings.len() == other.bindings.len()
            && self
                .bindings
                .iter()
                .zip(&other.bindings)
                .all(|(x, y)| x.kind == y.kind && x.occurrences.len() == y.occurrences.len())
            && self.body.len() == other.body.len()
            && self.body.iter().zip(&other.body).all(|(x, y)| shape_eq(x, y))
    }
}

/// Lexes and parses one method.
pub fn parse_method(source: &str) -> Result<MethodAst, Error> {
    let tokens = tokenize(source)?;
    parse_tokens(source, tokens).map_err(Error::from)
}

/// Parses one method from an existing token stream.
pub fn parse_tokens(source: &str, tokens: Vec<Token>) -> Result<MethodAst, ParseError> {
    let mut p = Parser {
        toks: &tokens,
        src_len: source.len(),
        i: 0,
        last: 0,
        events: Vec::new(),
        bindings: Vec::new(),
    };
    let name = p.parse_signature()?;
    let parameters: Vec<usize> = (0..p.bindings.len()).collect();
    let body = if p.at(";") {
        p.bump();
        Vec::new()
    } else if p.at("{") {
        p.parse_block()?.children
    } else {
        return Err(ParseError::new(p.offset(), "expected method body"));
    };
    if let Some(j) = p.peek_idx() {
        return Err(ParseError::new(
            p.toks[j].span.start,
            "unexpected trailing input after method",
        ));
    }
    let Parser { events, mut bindings, .. } = p;
    resolve_occurrences(&tokens, &events, &mut bindings);
    debug_assert!(bindings
        .iter()
        .all(|b| b.occurrences.first() == Some(&b.declaration_site)));
    Ok(MethodAst {
        source: String::from(source),
        tokens,
        name,
        parameters,
        body,
        bindings,
    })
}

const PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "double", "float", "int", "long", "short",
];

const MODIFIERS: &[&str] = &[
    "abstract",
    "default",
    "final",
    "native",
    "private",
    "protected",
    "public",
    "static",
    "strictfp",
    "synchronized",
    "transient",
    "volatile",
];

const ASSIGN_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=",
];

/// Scope bookkeeping emitted during parsing, replayed during resolution.
/// Every event applies just before the token at `index` is examined.
enum ScopeEvent {
    Push(usize),
    Pop(usize),
    Define { index: usize, binding: usize },
}

impl ScopeEvent {
    fn index(&self) -> usize {
        match *self {
            ScopeEvent::Push(i) | ScopeEvent::Pop(i) => i,
            ScopeEvent::Define { index, .. } => index,
        }
    }
}

struct Parser<'t> {
    toks: &'t [Token],
    src_len: usize,
    /// Raw scan position; significant tokens are found from here.
    i: usize,
    /// Raw index of the most recently consumed significant token.
    last: usize,
    events: Vec<ScopeEvent>,
    bindings: Vec<VariableBinding>,
}

#[derive(Clone, Copy)]
struct Checkpoint {
    i: usize,
    last: usize,
    events: usize,
    bindings: usize,
}

impl<'t> Parser<'t> {
    fn save(&self) -> Checkpoint {
        Checkpoint {
            i: self.i,
            last: self.last,
            events: self.events.len(),
            bindings: self.bindings.len(),
        }
    }

    fn restore(&mut self, c: Checkpoint) {
        self.i = c.i;
        self.last = c.last;
        self.events.truncate(c.events);
        self.bindings.truncate(c.bindings);
    }

    fn peek_idx(&self) -> Option<usize> {
        next_significant(self.toks, self.i)
    }

    fn peek(&self) -> Option<&'t Token> {
        self.peek_idx().map(|j| &self.toks[j])
    }

    /// Index of the significant token after the next one.
    fn peek2_idx(&self) -> Option<usize> {
        next_significant(self.toks, self.peek_idx()? + 1)
    }

    fn at(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(text))
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek()
            .is_some_and(|t| t.kind == TokenKind::Keyword && t.text == kw)
    }

    fn at_ident(&self) -> bool {
        self.peek().is_some_and(|t| t.kind == TokenKind::Identifier)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.src_len, |t| t.span.start)
    }

    fn bump(&mut self) -> Option<usize> {
        let j = self.peek_idx()?;
        self.last = j;
        self.i = j + 1;
        Some(j)
    }

    fn expect(&mut self, text: &str) -> Result<usize, ParseError> {
        if self.at(text) {
            Ok(self.bump().unwrap())
        } else {
            Err(ParseError::new(
                self.offset(),
                alloc::format!("expected '{text}'"),
            ))
        }
    }

    fn define(&mut self, name_idx: usize, kind: BindingKind, declared_type: Option<String>) {
        let tok = &self.toks[name_idx];
        let id = self.bindings.len();
        self.bindings.push(VariableBinding {
            original_name: tok.text.clone(),
            kind,
            declaration_site: tok.span,
            occurrences: Vec::new(),
            declared_type,
        });
        self.events.push(ScopeEvent::Define { index: name_idx, binding: id });
    }

    /// Finds the `)` matching the `(` at raw index `open`.
    fn match_paren(&self, open: usize) -> Result<usize, ParseError> {
        let mut depth = 1i32;
        let mut j = open + 1;
        while let Some(k) = next_significant(self.toks, j) {
            match self.toks[k].text.as_str() {
                "(" => depth += 1,
                ")" => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(k);
                    }
                }
                _ => {}
            }
            j = k + 1;
        }
        Err(ParseError::new(
            self.toks[open].span.start,
            "unbalanced parenthesis",
        ))
    }

    /// Consumes a balanced `( ... )` group, returning (open, close).
    fn skip_parens(&mut self) -> Result<(usize, usize), ParseError> {
        let open = self.expect("(")?;
        let close = self.match_paren(open)?;
        self.last = close;
        self.i = close + 1;
        Ok((open, close))
    }

    /// Consumes a balanced `{ ... }` group without parsing its contents.
    fn skip_braces(&mut self) -> Result<(), ParseError> {
        let open = self.expect("{")?;
        let mut depth = 1i32;
        while let Some(j) = self.peek_idx() {
            match self.toks[j].text.as_str() {
                "{" => depth += 1,
                "}" => {
                    depth -= 1;
                    if depth == 0 {
                        self.bump();
                        return Ok(());
                    }
                }
                _ => {}
            }
            self.bump();
        }
        Err(ParseError::new(
            self.toks[open].span.start,
            "unbalanced brace",
        ))
    }

    /// Consumes `@Name(.Name)*` with optional argument parens. False when the
    /// shape is not an annotation.
    fn skip_annotation(&mut self) -> bool {
        // caller saw '@'
        self.bump();
        if !self.at_ident() {
            return false;
        }
        self.bump();
        while self.at(".") {
            let dot = self.save();
            self.bump();
            if self.at_ident() {
                self.bump();
            } else {
                self.restore(dot);
                break;
            }
        }
        if self.at("(") {
            return self.skip_parens().is_ok();
        }
        true
    }

    /// Consumes a generic argument list starting at `<`, accepting only
    /// tokens that can appear in a type. Splits `>>`/`>>>` closers by depth.
    fn skip_generic_strict(&mut self) -> bool {
        let mut depth = 0i32;
        loop {
            let Some(t) = self.peek() else { return false };
            let ok = match t.text.as_str() {
                "<" => {
                    depth += 1;
                    true
                }
                ">" => {
                    depth -= 1;
                    true
                }
                ">>" => {
                    depth -= 2;
                    true
                }
                ">>>" => {
                    depth -= 3;
                    true
                }
                "," | "." | "?" | "[" | "]" | "&" | "@" => true,
                "extends" | "super" => true,
                other => t.kind == TokenKind::Identifier || PRIMITIVES.contains(&other),
            };
            if !ok {
                return false;
            }
            self.bump();
            if depth <= 0 {
                return true;
            }
        }
    }

    /// Consumes a generic section leniently (used in signatures).
    fn skip_generic_lenient(&mut self) -> Result<(), ParseError> {
        let start = self.offset();
        let mut depth = 0i32;
        loop {
            let Some(t) = self.peek() else {
                return Err(ParseError::new(start, "unbalanced generic bracket"));
            };
            match t.text.as_str() {
                "<" => depth += 1,
                ">" => depth -= 1,
                ">>" => depth -= 2,
                ">>>" => depth -= 3,
                _ => {}
            }
            self.bump();
            if depth <= 0 {
                return Ok(());
            }
        }
    }

    /// Tries to consume a type, returning its simple name (`Map` for
    /// `java.util.Map<K, V>[]`). Restores nothing: callers checkpoint.
    fn try_parse_type(&mut self) -> Option<String> {
        let t = self.peek()?;
        let mut simple;
        match t.kind {
            TokenKind::Keyword if PRIMITIVES.contains(&t.text.as_str()) => {
                simple = t.text.clone();
                self.bump();
            }
            TokenKind::Identifier => {
                simple = t.text.clone();
                self.bump();
                while self.at(".") {
                    let dot = self.save();
                    self.bump();
                    if self.at_ident() {
                        simple = self.peek().unwrap().text.clone();
                        self.bump();
                    } else {
                        self.restore(dot);
                        return None;
                    }
                }
            }
            _ => return None,
        }
        if self.at("<") && !self.skip_generic_strict() {
            return None;
        }
        while self.at("[") {
            let br = self.save();
            self.bump();
            if self.at("]") {
                self.bump();
            } else {
                self.restore(br);
                return None;
            }
        }
        Some(simple)
    }

    /// Consumes leading `final` keywords and annotations.
    fn skip_decl_prefix(&mut self) -> bool {
        loop {
            if self.at_kw("final") {
                self.bump();
            } else if self.at("@") {
                if !self.skip_annotation() {
                    return false;
                }
            } else {
                return true;
            }
        }
    }

    fn parse_signature(&mut self) -> Result<String, ParseError> {
        self.events.push(ScopeEvent::Push(0));
        loop {
            if self.at("@") {
                if !self.skip_annotation() {
                    return Err(ParseError::new(self.offset(), "malformed annotation"));
                }
            } else if self
                .peek()
                .is_some_and(|t| t.kind == TokenKind::Keyword && MODIFIERS.contains(&t.text.as_str()))
            {
                self.bump();
            } else {
                break;
            }
        }
        if self.at("<") {
            self.skip_generic_lenient()?;
        }
        let name;
        loop {
            let Some(j) = self.peek_idx() else {
                return Err(ParseError::new(self.src_len, "expected method signature"));
            };
            let t = &self.toks[j];
            if t.kind == TokenKind::Identifier
                && next_significant(self.toks, j + 1)
                    .is_some_and(|k| self.toks[k].is("("))
            {
                name = t.text.clone();
                self.bump();
                break;
            }
            if t.is("(") || t.is("{") || t.is(";") || t.is("}") {
                return Err(ParseError::new(
                    t.span.start,
                    "expected method name before parameter list",
                ));
            }
            self.bump();
        }
        self.parse_parameters()?;
        if self.at_kw("throws") {
            self.bump();
            while let Some(t) = self.peek() {
                if t.is("{") || t.is(";") {
                    break;
                }
                self.bump();
            }
        }
        Ok(name)
    }

    fn parse_parameters(&mut self) -> Result<(), ParseError> {
        self.expect("(")?;
        if self.at(")") {
            self.bump();
            return Ok(());
        }
        loop {
            if !self.skip_decl_prefix() {
                return Err(ParseError::new(self.offset(), "malformed parameter annotation"));
            }
            let Some(ty) = self.try_parse_type() else {
                return Err(ParseError::new(self.offset(), "expected parameter type"));
            };
            if self.at("...") {
                self.bump();
            }
            if self.at_kw("this") {
                // Receiver parameter: a type name, not a variable.
                self.bump();
            } else if self.at_ident() {
                let name_idx = self.bump().unwrap();
                while self.at("[") {
                    let br = self.save();
                    self.bump();
                    if self.at("]") {
                        self.bump();
                    } else {
                        self.restore(br);
                        return Err(ParseError::new(self.offset(), "malformed parameter brackets"));
                    }
                }
                self.define(name_idx, BindingKind::Parameter, Some(ty));
            } else {
                return Err(ParseError::new(self.offset(), "expected parameter name"));
            }
            if self.at(",") {
                self.bump();
                continue;
            }
            self.expect(")")?;
            return Ok(());
        }
    }

    fn parse_block(&mut self) -> Result<StatementNode, ParseError> {
        let open = self.expect("{")?;
        self.events.push(ScopeEvent::Push(open));
        let mut children = Vec::new();
        loop {
            if self.at("}") {
                let close = self.bump().unwrap();
                self.events.push(ScopeEvent::Pop(close));
                return Ok(StatementNode {
                    kind: StatementKind::Block,
                    span: Span::new(self.toks[open].span.start, self.toks[close].span.end),
                    children,
                });
            }
            if self.peek().is_none() {
                return Err(ParseError::new(
                    self.src_len,
                    "expected '}' before end of input",
                ));
            }
            children.push(self.parse_statement()?);
        }
    }

    fn parse_statement(&mut self) -> Result<StatementNode, ParseError> {
        let Some(first) = self.peek_idx() else {
            return Err(ParseError::new(self.src_len, "expected statement"));
        };
        let start = self.toks[first].span.start;
        let node = |p: &Parser, kind, children| StatementNode {
            kind,
            span: Span::new(start, p.toks[p.last].span.end),
            children,
        };
        let t = &self.toks[first];
        if t.is("{") {
            return self.parse_block();
        }
        if t.is(";") {
            self.bump();
            return Ok(node(self, StatementKind::Other, vec![]));
        }
        if t.kind == TokenKind::Keyword {
            match t.text.as_str() {
                "if" => {
                    self.bump();
                    self.skip_parens()?;
                    let then = self.parse_statement()?;
                    let mut children = vec![then];
                    if self.at_kw("else") {
                        self.bump();
                        children.push(self.parse_statement()?);
                    }
                    return Ok(node(self, StatementKind::If, children));
                }
                "while" => {
                    self.bump();
                    self.skip_parens()?;
                    let body = self.parse_statement()?;
                    return Ok(node(self, StatementKind::While, vec![body]));
                }
                "for" => return self.parse_for(start),
                "do" => {
                    self.bump();
                    let body = self.parse_statement()?;
                    if self.at_kw("while") {
                        self.bump();
                        self.skip_parens()?;
                        self.expect(";")?;
                    } else {
                        return Err(ParseError::new(self.offset(), "expected 'while' after do body"));
                    }
                    return Ok(node(self, StatementKind::Other, vec![body]));
                }
                "try" => return self.parse_try(start),
                "return" => {
                    self.bump();
                    self.consume_until_semicolon()?;
                    return Ok(node(self, StatementKind::Return, vec![]));
                }
                "throw" | "assert" => {
                    self.bump();
                    self.consume_until_semicolon()?;
                    return Ok(node(self, StatementKind::Other, vec![]));
                }
                "break" | "continue" => {
                    self.bump();
                    if self.at_ident() {
                        self.bump();
                    }
                    self.expect(";")?;
                    return Ok(node(self, StatementKind::Other, vec![]));
                }
                "switch" => {
                    self.bump();
                    self.skip_parens()?;
                    self.skip_braces()?;
                    return Ok(node(self, StatementKind::Other, vec![]));
                }
                "synchronized" => {
                    self.bump();
                    if self.at("(") {
                        self.skip_parens()?;
                    }
                    let body = self.parse_block()?;
                    return Ok(node(self, StatementKind::Other, vec![body]));
                }
                _ => {}
            }
        }
        // Local class/interface/enum declarations: consume opaquely.
        if self.looks_like_local_type_decl() {
            while let Some(t) = self.peek() {
                if t.is("{") {
                    break;
                }
                self.bump();
            }
            self.skip_braces()?;
            return Ok(node(self, StatementKind::Other, vec![]));
        }
        // Labeled statement.
        if t.kind == TokenKind::Identifier
            && self
                .peek2_idx()
                .is_some_and(|k| self.toks[k].is(":"))
        {
            self.bump();
            self.bump();
            let body = self.parse_statement()?;
            return Ok(node(self, StatementKind::Other, vec![body]));
        }
        if let Some(decl) = self.try_parse_declaration(BindingKind::Local) {
            let _ = decl;
            return Ok(node(self, StatementKind::Declaration, vec![]));
        }
        self.consume_until_semicolon()?;
        Ok(node(self, StatementKind::Expression, vec![]))
    }

    fn looks_like_local_type_decl(&self) -> bool {
        let mut j = self.i;
        while let Some(k) = next_significant(self.toks, j) {
            let t = &self.toks[k];
            if t.kind == TokenKind::Keyword
                && matches!(t.text.as_str(), "final" | "abstract" | "static" | "strictfp")
            {
                j = k + 1;
                continue;
            }
            return t.kind == TokenKind::Keyword
                && matches!(t.text.as_str(), "class" | "interface" | "enum");
        }
        false
    }

    /// Consumes tokens through the terminating `;` of an expression
    /// statement, balancing parens, brackets and braces.
    fn consume_until_semicolon(&mut self) -> Result<(), ParseError> {
        let mut depth = 0i32;
        loop {
            let Some(t) = self.peek() else {
                return Err(ParseError::new(self.src_len, "expected ';' before end of input"));
            };
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    if depth == 0 {
                        return Err(ParseError::new(t.span.start, "expected ';' in statement"));
                    }
                    depth -= 1;
                }
                ";" if depth == 0 => {
                    self.bump();
                    return Ok(());
                }
                _ => {}
            }
            self.bump();
        }
    }

    /// Attempts `[final] Type name [= init] (, name [= init])* ;`.
    /// On failure the cursor, events and bindings all roll back.
    fn try_parse_declaration(&mut self, kind: BindingKind) -> Option<()> {
        let snap = self.save();
        if !self.skip_decl_prefix() {
            self.restore(snap);
            return None;
        }
        let Some(ty) = self.try_parse_type() else {
            self.restore(snap);
            return None;
        };
        loop {
            if !self.at_ident() {
                self.restore(snap);
                return None;
            }
            let name_idx = self.bump().unwrap();
            let mut ok_brackets = true;
            while self.at("[") {
                let br = self.save();
                self.bump();
                if self.at("]") {
                    self.bump();
                } else {
                    self.restore(br);
                    ok_brackets = false;
                    break;
                }
            }
            if !ok_brackets {
                self.restore(snap);
                return None;
            }
            let next = match self.peek() {
                Some(t) => t.text.clone(),
                None => {
                    self.restore(snap);
                    return None;
                }
            };
            match next.as_str() {
                "=" => {
                    self.bump();
                    if !self.consume_initializer() {
                        self.restore(snap);
                        return None;
                    }
                    self.define(name_idx, kind, Some(ty.clone()));
                    if self.at(",") {
                        self.bump();
                        continue;
                    }
                    if self.at(";") {
                        self.bump();
                        return Some(());
                    }
                    self.restore(snap);
                    return None;
                }
                "," => {
                    self.define(name_idx, kind, Some(ty.clone()));
                    self.bump();
                    continue;
                }
                ";" => {
                    self.define(name_idx, kind, Some(ty.clone()));
                    self.bump();
                    return Some(());
                }
                _ => {
                    self.restore(snap);
                    return None;
                }
            }
        }
    }

    /// Consumes an initializer expression up to (not including) a `,` or `;`
    /// at depth zero. False when the input is not balanced.
    fn consume_initializer(&mut self) -> bool {
        let mut depth = 0i32;
        loop {
            let Some(t) = self.peek() else { return false };
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => {
                    if depth == 0 {
                        return false;
                    }
                    depth -= 1;
                }
                "," | ";" if depth == 0 => return true,
                _ => {}
            }
            self.bump();
        }
    }

    fn parse_for(&mut self, start: usize) -> Result<StatementNode, ParseError> {
        let for_idx = self.bump().unwrap();
        self.events.push(ScopeEvent::Push(for_idx));
        let open = self.expect("(")?;
        let close = self.match_paren(open)?;
        // Classic `for` headers have top-level semicolons; enhanced ones don't.
        let mut classic = false;
        {
            let mut depth = 0i32;
            let mut j = open + 1;
            while let Some(k) = next_significant(self.toks, j) {
                if k >= close {
                    break;
                }
                match self.toks[k].text.as_str() {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => depth -= 1,
                    ";" if depth == 0 => {
                        classic = true;
                        break;
                    }
                    _ => {}
                }
                j = k + 1;
            }
        }
        if classic {
            // The initializer may declare loop variables.
            let _ = self.try_parse_declaration(BindingKind::LoopVariable);
        } else {
            let snap = self.save();
            let mut bound = false;
            if self.skip_decl_prefix() {
                if let Some(ty) = self.try_parse_type() {
                    if self.at_ident() {
                        let name_idx = self.bump().unwrap();
                        if self.at(":") {
                            self.define(name_idx, BindingKind::LoopVariable, Some(ty));
                            bound = true;
                        }
                    }
                }
            }
            if !bound {
                self.restore(snap);
            }
        }
        // Skip whatever remains of the header; the condition and update
        // expressions are still visited by occurrence resolution.
        self.last = close;
        self.i = close + 1;
        let body = self.parse_statement()?;
        self.events.push(ScopeEvent::Pop(self.i));
        Ok(StatementNode {
            kind: StatementKind::For,
            span: Span::new(start, self.toks[self.last].span.end),
            children: vec![body],
        })
    }

    fn parse_try(&mut self, start: usize) -> Result<StatementNode, ParseError> {
        self.bump(); // 'try'
        let mut children = Vec::new();
        let mut resource_frame = false;
        if self.at("(") {
            let open = self.bump().unwrap();
            self.events.push(ScopeEvent::Push(open));
            resource_frame = true;
            let close = self.match_paren(open)?;
            loop {
                if self.peek_idx().map_or(true, |j| j >= close) {
                    break;
                }
                let snap = self.save();
                let mut declared = false;
                if self.skip_decl_prefix() {
                    if let Some(ty) = self.try_parse_type() {
                        if self.at_ident() {
                            let name_idx = self.bump().unwrap();
                            if self.at("=") {
                                self.define(name_idx, BindingKind::Local, Some(ty));
                                declared = true;
                            }
                        }
                    }
                }
                if !declared {
                    self.restore(snap);
                }
                // Skip to the next top-level ';' inside the resource list.
                let mut depth = 0i32;
                while let Some(j) = self.peek_idx() {
                    if j >= close {
                        break;
                    }
                    match self.toks[j].text.as_str() {
                        "(" | "[" | "{" => depth += 1,
                        ")" | "]" | "}" => depth -= 1,
                        ";" if depth == 0 => {
                            self.bump();
                            break;
                        }
                        _ => {}
                    }
                    self.bump();
                }
            }
            self.last = close;
            self.i = close + 1;
        }
        children.push(self.parse_block()?);
        if resource_frame {
            self.events.push(ScopeEvent::Pop(self.i));
        }
        while self.at_kw("catch") {
            self.bump();
            let open = self.expect("(")?;
            self.events.push(ScopeEvent::Push(open));
            let mut ty = self.try_parse_type();
            while self.at("|") {
                self.bump();
                if self.try_parse_type().is_none() {
                    return Err(ParseError::new(self.offset(), "expected exception type"));
                }
            }
            if ty.is_none() {
                return Err(ParseError::new(self.offset(), "expected exception type"));
            }
            if self.at_ident() {
                let name_idx = self.bump().unwrap();
                self.define(name_idx, BindingKind::Local, ty.take());
            } else {
                return Err(ParseError::new(self.offset(), "expected exception name"));
            }
            self.expect(")")?;
            children.push(self.parse_block()?);
            self.events.push(ScopeEvent::Pop(self.i));
        }
        if self.at_kw("finally") {
            self.bump();
            children.push(self.parse_block()?);
        }
        Ok(StatementNode {
            kind: StatementKind::Try,
            span: Span::new(start, self.toks[self.last].span.end),
            children,
        })
    }
}

/// Attributes identifier tokens to bindings by replaying scope events along
/// a forward walk of the whole token stream.
fn resolve_occurrences(tokens: &[Token], events: &[ScopeEvent], bindings: &mut [VariableBinding]) {
    let mut frames: Vec<Vec<usize>> = vec![Vec::new()];
    let mut ev = 0;
    for i in 0..tokens.len() {
        while ev < events.len() && events[ev].index() <= i {
            match events[ev] {
                ScopeEvent::Push(_) => frames.push(Vec::new()),
                ScopeEvent::Pop(_) => {
                    if frames.len() > 1 {
                        frames.pop();
                    }
                }
                ScopeEvent::Define { binding, .. } => {
                    if let Some(top) = frames.last_mut() {
                        top.push(binding);
                    }
                }
            }
            ev += 1;
        }
        let t = &tokens[i];
        if t.kind != TokenKind::Identifier || skip_occurrence(tokens, i) {
            continue;
        }
        'resolve: for frame in frames.iter().rev() {
            for &b in frame.iter().rev() {
                if bindings[b].original_name == t.text {
                    bindings[b].occurrences.push(t.span);
                    break 'resolve;
                }
            }
        }
    }
}

/// True when the identifier at `i` cannot be a variable occurrence.
fn skip_occurrence(tokens: &[Token], i: usize) -> bool {
    let prev = prev_significant(tokens, i);
    let next = next_significant(tokens, i + 1);
    if let Some(p) = prev {
        let pt = &tokens[p];
        // Member select, method reference, annotation name.
        if pt.is(".") || pt.is("::") || pt.is("@") {
            return true;
        }
        // Type after `new`/`instanceof`, label after `break`/`continue`,
        // constant after `case`.
        if pt.kind == TokenKind::Keyword
            && matches!(
                pt.text.as_str(),
                "new" | "instanceof" | "break" | "continue" | "case"
            )
        {
            return true;
        }
    }
    if let Some(n) = next {
        let nt = &tokens[n];
        // Method name in a call.
        if nt.is("(") {
            return true;
        }
        // Type position: an identifier directly followed by another
        // identifier can only be a type.
        if nt.kind == TokenKind::Identifier {
            return true;
        }
        // Label definition at the start of a statement.
        if nt.is(":") {
            let starts_statement = match prev {
                None => true,
                Some(p) => matches!(tokens[p].text.as_str(), ";" | "{" | "}"),
            };
            if starts_statement {
                return true;
            }
        }
    }
    false
}

/// Assignment operator texts, shared with the def/use analysis.
pub(crate) fn is_assign_op(text: &str) -> bool {
    ASSIGN_OPS.contains(&text)
}
