//! Lossless Java lexer.
//!
//! The token stream is the source of truth for every transform: token texts
//! concatenate back to the input byte-for-byte, and spans are byte offsets
//! (half-open, non-overlapping, sorted). Comments and whitespace are kept as
//! trivia tokens so rewrites can splice text positionally without losing
//! formatting.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::LexError;

/// Half-open byte range `[start, end)` into the original source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// True if `other` lies entirely within `self`.
    pub fn contains(&self, other: Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    Keyword,
    /// Numbers, strings, chars, and the word literals `true`/`false`/`null`.
    Literal,
    Operator,
    Punctuation,
    Comment,
    Whitespace,
}

impl TokenKind {
    /// Comments and whitespace carry no syntactic weight.
    pub fn is_trivia(self) -> bool {
        matches!(self, TokenKind::Comment | TokenKind::Whitespace)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is_trivia(&self) -> bool {
        self.kind.is_trivia()
    }

    /// True for a non-trivia token with exactly this text.
    pub fn is(&self, text: &str) -> bool {
        !self.is_trivia() && self.text == text
    }
}

/// Reserved words, sorted for binary search. `true`/`false`/`null` are
/// classified as literals instead, and `var` stays an identifier (it is only
/// contextually reserved).
const KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
];

pub fn is_keyword(text: &str) -> bool {
    KEYWORDS.binary_search(&text).is_ok()
}

/// Multi-character symbols first so maximal munch wins (`>>>=` before `>>`).
/// `>>` and `>>>` are lexed as single operators; the parser re-splits them
/// when they close nested generics.
const SYMBOLS: &[(&str, TokenKind)] = &[
    (">>>=", TokenKind::Operator),
    (">>>", TokenKind::Operator),
    ("<<=", TokenKind::Operator),
    (">>=", TokenKind::Operator),
    ("...", TokenKind::Punctuation),
    ("==", TokenKind::Operator),
    ("!=", TokenKind::Operator),
    ("<=", TokenKind::Operator),
    (">=", TokenKind::Operator),
    ("&&", TokenKind::Operator),
    ("||", TokenKind::Operator),
    ("++", TokenKind::Operator),
    ("--", TokenKind::Operator),
    ("+=", TokenKind::Operator),
    ("-=", TokenKind::Operator),
    ("*=", TokenKind::Operator),
    ("/=", TokenKind::Operator),
    ("%=", TokenKind::Operator),
    ("&=", TokenKind::Operator),
    ("|=", TokenKind::Operator),
    ("^=", TokenKind::Operator),
    ("<<", TokenKind::Operator),
    (">>", TokenKind::Operator),
    ("->", TokenKind::Operator),
    ("::", TokenKind::Punctuation),
    ("=", TokenKind::Operator),
    ("+", TokenKind::Operator),
    ("-", TokenKind::Operator),
    ("*", TokenKind::Operator),
    ("/", TokenKind::Operator),
    ("%", TokenKind::Operator),
    ("<", TokenKind::Operator),
    (">", TokenKind::Operator),
    ("!", TokenKind::Operator),
    ("~", TokenKind::Operator),
    ("&", TokenKind::Operator),
    ("|", TokenKind::Operator),
    ("^", TokenKind::Operator),
    ("?", TokenKind::Operator),
    (":", TokenKind::Operator),
    ("(", TokenKind::Punctuation),
    (")", TokenKind::Punctuation),
    ("{", TokenKind::Punctuation),
    ("}", TokenKind::Punctuation),
    ("[", TokenKind::Punctuation),
    ("]", TokenKind::Punctuation),
    (";", TokenKind::Punctuation),
    (",", TokenKind::Punctuation),
    (".", TokenKind::Punctuation),
    ("@", TokenKind::Punctuation),
];

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

struct Scanner<'s> {
    src: &'s str,
    pos: usize,
}

impl<'s> Scanner<'s> {
    fn rest(&self) -> &'s str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) {
        while let Some(c) = self.peek() {
            if pred(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }
}

/// Splits `source` into tokens. The only failures are literals or block
/// comments left open at end of input.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut sc = Scanner { src: source, pos: 0 };
    let mut out = Vec::new();
    while let Some(c) = sc.peek() {
        let start = sc.pos;
        let kind = if c.is_whitespace() {
            sc.eat_while(char::is_whitespace);
            TokenKind::Whitespace
        } else if sc.rest().starts_with("//") {
            sc.eat_while(|ch| ch != '\n');
            TokenKind::Comment
        } else if sc.rest().starts_with("/*") {
            sc.pos += 2;
            loop {
                if sc.rest().starts_with("*/") {
                    sc.pos += 2;
                    break;
                }
                if sc.bump().is_none() {
                    return Err(LexError::UnterminatedComment { offset: start });
                }
            }
            TokenKind::Comment
        } else if c == '"' {
            lex_quoted(&mut sc, '"').map_err(|_| LexError::UnterminatedString { offset: start })?;
            TokenKind::Literal
        } else if c == '\'' {
            lex_quoted(&mut sc, '\'').map_err(|_| LexError::UnterminatedChar { offset: start })?;
            TokenKind::Literal
        } else if c.is_ascii_digit()
            || (c == '.' && sc.peek_nth(1).is_some_and(|d| d.is_ascii_digit()))
        {
            lex_number(&mut sc);
            TokenKind::Literal
        } else if is_ident_start(c) {
            sc.eat_while(is_ident_continue);
            let word = &source[start..sc.pos];
            if is_keyword(word) {
                TokenKind::Keyword
            } else if word == "true" || word == "false" || word == "null" {
                TokenKind::Literal
            } else {
                TokenKind::Identifier
            }
        } else {
            match SYMBOLS.iter().find(|(sym, _)| sc.rest().starts_with(sym)) {
                Some((sym, kind)) => {
                    sc.pos += sym.len();
                    *kind
                }
                None => {
                    // Not valid Java; keep the byte so the stream stays lossless.
                    sc.bump();
                    TokenKind::Punctuation
                }
            }
        };
        out.push(Token {
            kind,
            text: String::from(&source[start..sc.pos]),
            span: Span::new(start, sc.pos),
        });
    }
    Ok(out)
}

fn lex_quoted(sc: &mut Scanner, close: char) -> Result<(), ()> {
    sc.bump(); // opening quote
    loop {
        match sc.bump() {
            None => return Err(()),
            Some('\\') => {
                if sc.bump().is_none() {
                    return Err(());
                }
            }
            Some(c) if c == close => return Ok(()),
            Some(_) => {}
        }
    }
}

fn lex_number(sc: &mut Scanner) {
    let first = sc.peek().unwrap_or('0');
    if first == '0' && matches!(sc.peek_nth(1), Some('x') | Some('X')) {
        sc.pos += 2;
        sc.eat_while(|ch| ch.is_ascii_hexdigit() || ch == '_');
        if matches!(sc.peek(), Some('l') | Some('L')) {
            sc.bump();
        }
        return;
    }
    if first == '0' && matches!(sc.peek_nth(1), Some('b') | Some('B')) {
        sc.pos += 2;
        sc.eat_while(|ch| ch == '0' || ch == '1' || ch == '_');
        if matches!(sc.peek(), Some('l') | Some('L')) {
            sc.bump();
        }
        return;
    }
    sc.eat_while(|ch| ch.is_ascii_digit() || ch == '_');
    if sc.peek() == Some('.') && sc.peek_nth(1).is_some_and(|d| d.is_ascii_digit()) {
        sc.bump();
        sc.eat_while(|ch| ch.is_ascii_digit() || ch == '_');
    }
    if matches!(sc.peek(), Some('e') | Some('E')) {
        let exponent_ok = match sc.peek_nth(1) {
            Some(d) if d.is_ascii_digit() => true,
            Some('+') | Some('-') => sc.peek_nth(2).is_some_and(|d| d.is_ascii_digit()),
            _ => false,
        };
        if exponent_ok {
            sc.bump();
            if matches!(sc.peek(), Some('+') | Some('-')) {
                sc.bump();
            }
            sc.eat_while(|ch| ch.is_ascii_digit() || ch == '_');
        }
    }
    if matches!(
        sc.peek(),
        Some('l') | Some('L') | Some('f') | Some('F') | Some('d') | Some('D')
    ) {
        sc.bump();
    }
}

/// Index of the first non-trivia token at or after `from`.
pub fn next_significant(tokens: &[Token], from: usize) -> Option<usize> {
    (from..tokens.len()).find(|&i| !tokens[i].is_trivia())
}

/// Index of the last non-trivia token strictly before `from`.
pub fn prev_significant(tokens: &[Token], from: usize) -> Option<usize> {
    (0..from.min(tokens.len())).rev().find(|&i| !tokens[i].is_trivia())
}

/// Concatenates token texts back into source text.
pub fn render(tokens: &[Token]) -> String {
    let mut s = String::new();
    for t in tokens {
        s.push_str(&t.text);
    }
    s
}
