//! ALC class expressions: abstract syntax, a concrete grammar in two token
//! styles, a minimal-parentheses printer, and the syntactic length measure.
//!
//! Expressions are built from atomic concept names via negation, conjunction,
//! disjunction, and existential/universal role restrictions, plus the top and
//! bottom concepts. Conjunction and disjunction operands are stored in a
//! canonical order (lexicographic by ASCII rendering), so `A and B` and
//! `B and A` are the same value.
//!
//! Grammar, loosest to tightest binding:
//!
//! ```text
//! union   := inter ("or" inter)*
//! inter   := unary ("and" unary)*
//! unary   := "not" unary
//!          | ("exists" | "forall") ROLE "." unary
//!          | primary
//! primary := "Top" | "Bottom" | NAME | "(" union ")"
//! ```
//!
//! The Unicode forms `⊤ ⊥ ¬ ⊓ ⊔ ∃ ∀` are accepted interchangeably with the
//! ASCII keywords. Binary operators are left-associative.

use std::fmt;
use thiserror::Error;

/// An ALC class expression.
///
/// Use the constructor methods ([`Concept::and`], [`Concept::or`], ...) rather
/// than the enum variants directly: they maintain the canonical operand order
/// that structural equality and deduplication rely on.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Concept {
    Top,
    Bottom,
    Atomic(String),
    Not(Box<Concept>),
    And(Box<Concept>, Box<Concept>),
    Or(Box<Concept>, Box<Concept>),
    Exists(String, Box<Concept>),
    Forall(String, Box<Concept>),
}

impl Concept {
    pub fn atomic(name: impl Into<String>) -> Self {
        Concept::Atomic(name.into())
    }

    // Named after the ASCII keyword, like `and` and `or` below.
    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Concept) -> Self {
        Concept::Not(Box::new(c))
    }

    /// Conjunction with operands in canonical order.
    pub fn and(l: Concept, r: Concept) -> Self {
        let (l, r) = Self::order_pair(l, r);
        Concept::And(Box::new(l), Box::new(r))
    }

    /// Disjunction with operands in canonical order.
    pub fn or(l: Concept, r: Concept) -> Self {
        let (l, r) = Self::order_pair(l, r);
        Concept::Or(Box::new(l), Box::new(r))
    }

    pub fn exists(role: impl Into<String>, filler: Concept) -> Self {
        Concept::Exists(role.into(), Box::new(filler))
    }

    pub fn forall(role: impl Into<String>, filler: Concept) -> Self {
        Concept::Forall(role.into(), Box::new(filler))
    }

    fn order_pair(l: Concept, r: Concept) -> (Concept, Concept) {
        if render_concept(&r, Style::Ascii) < render_concept(&l, Style::Ascii) {
            (r, l)
        } else {
            (l, r)
        }
    }

    /// Syntactic length: atoms, top and bottom count 1; negation adds 1;
    /// conjunction and disjunction add 1; a restriction adds 2 (role plus
    /// constructor).
    pub fn length(&self) -> usize {
        match self {
            Concept::Top | Concept::Bottom | Concept::Atomic(_) => 1,
            Concept::Not(c) => 1 + c.length(),
            Concept::And(l, r) | Concept::Or(l, r) => 1 + l.length() + r.length(),
            Concept::Exists(_, f) | Concept::Forall(_, f) => 2 + f.length(),
        }
    }

    /// ASCII rendering; shorthand for [`render_concept`].
    pub fn to_ascii(&self) -> String {
        render_concept(self, Style::Ascii)
    }

    /// Unicode rendering; shorthand for [`render_concept`].
    pub fn to_unicode(&self) -> String {
        render_concept(self, Style::Unicode)
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_ascii())
    }
}

impl std::str::FromStr for Concept {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_concept(s)
    }
}

/// Token style for rendering.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Style {
    Ascii,
    Unicode,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

// Binding strength: disjunction 0, conjunction 1, prefix operators 2,
// names and parenthesised groups 3.
fn level(c: &Concept) -> u8 {
    match c {
        Concept::Or(..) => 0,
        Concept::And(..) => 1,
        Concept::Not(_) | Concept::Exists(..) | Concept::Forall(..) => 2,
        Concept::Top | Concept::Bottom | Concept::Atomic(_) => 3,
    }
}

/// Renders a concept with minimal parentheses; `parse_concept` inverts it.
pub fn render_concept(c: &Concept, style: Style) -> String {
    let mut out = String::new();
    render_into(c, style, 0, &mut out);
    out
}

fn render_into(c: &Concept, style: Style, min_level: u8, out: &mut String) {
    if level(c) < min_level {
        out.push('(');
        render_into(c, style, 0, out);
        out.push(')');
        return;
    }
    let ascii = style == Style::Ascii;
    match c {
        Concept::Top => out.push_str(if ascii { "Top" } else { "⊤" }),
        Concept::Bottom => out.push_str(if ascii { "Bottom" } else { "⊥" }),
        Concept::Atomic(name) => out.push_str(name),
        Concept::Not(inner) => {
            out.push_str(if ascii { "not " } else { "¬" });
            render_into(inner, style, 2, out);
        }
        Concept::And(l, r) => {
            render_into(l, style, 1, out);
            out.push_str(if ascii { " and " } else { " ⊓ " });
            render_into(r, style, 2, out);
        }
        Concept::Or(l, r) => {
            render_into(l, style, 0, out);
            out.push_str(if ascii { " or " } else { " ⊔ " });
            render_into(r, style, 1, out);
        }
        Concept::Exists(role, filler) => {
            out.push_str(if ascii { "exists " } else { "∃ " });
            out.push_str(role);
            out.push('.');
            render_into(filler, style, 2, out);
        }
        Concept::Forall(role, filler) => {
            out.push_str(if ascii { "forall " } else { "∀ " });
            out.push_str(role);
            out.push('.');
            render_into(filler, style, 2, out);
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
enum Token {
    Top,
    Bottom,
    Not,
    And,
    Or,
    Exists,
    Forall,
    LParen,
    RParen,
    Dot,
    Name(String),
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

/// True when `s` can serve as a concept, role, or individual name: an
/// identifier that is not one of the grammar's reserved words.
pub fn is_valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    if !is_name_start(first) || !chars.all(is_name_continue) {
        return false;
    }
    !matches!(s, "Top" | "Bottom" | "not" | "and" | "or" | "exists" | "forall")
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<Option<(usize, Token)>, ParseError> {
        let rest = &self.src[self.pos..];
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
        let start = self.pos;
        let mut chars = trimmed.chars();
        let Some(first) = chars.next() else {
            return Ok(None);
        };
        let tok = match first {
            '(' => Token::LParen,
            ')' => Token::RParen,
            '.' => Token::Dot,
            '⊤' => Token::Top,
            '⊥' => Token::Bottom,
            '¬' => Token::Not,
            '⊓' => Token::And,
            '⊔' => Token::Or,
            '∃' => Token::Exists,
            '∀' => Token::Forall,
            c if is_name_start(c) => {
                let word: String = trimmed.chars().take_while(|&c| is_name_continue(c)).collect();
                self.pos += word.len();
                let tok = match word.as_str() {
                    "Top" => Token::Top,
                    "Bottom" => Token::Bottom,
                    "not" => Token::Not,
                    "and" => Token::And,
                    "or" => Token::Or,
                    "exists" => Token::Exists,
                    "forall" => Token::Forall,
                    _ => Token::Name(word),
                };
                return Ok(Some((start, tok)));
            }
            c => {
                return Err(ParseError {
                    position: start,
                    message: format!("unexpected character {c:?}"),
                })
            }
        };
        self.pos += first.len_utf8();
        Ok(Some((start, tok)))
    }
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    cursor: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.tokens.get(self.cursor).map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.cursor).map(|(_, t)| t.clone());
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.cursor += 1;
                Ok(())
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn error(&self, message: String) -> ParseError {
        ParseError {
            position: self.position(),
            message,
        }
    }

    fn union(&mut self) -> Result<Concept, ParseError> {
        let mut acc = self.inter()?;
        while self.peek() == Some(&Token::Or) {
            self.cursor += 1;
            let rhs = self.inter()?;
            acc = Concept::or(acc, rhs);
        }
        Ok(acc)
    }

    fn inter(&mut self) -> Result<Concept, ParseError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(&Token::And) {
            self.cursor += 1;
            let rhs = self.unary()?;
            acc = Concept::and(acc, rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Concept, ParseError> {
        match self.peek() {
            Some(Token::Not) => {
                self.cursor += 1;
                Ok(Concept::not(self.unary()?))
            }
            Some(Token::Exists) | Some(Token::Forall) => {
                let existential = self.bump() == Some(Token::Exists);
                let role = match self.bump() {
                    Some(Token::Name(name)) => name,
                    _ => {
                        self.cursor = self.cursor.saturating_sub(1);
                        return Err(self.error("expected role name after restriction".into()));
                    }
                };
                self.expect(Token::Dot, "'.' after role name")?;
                let filler = self.unary()?;
                Ok(if existential {
                    Concept::exists(role, filler)
                } else {
                    Concept::forall(role, filler)
                })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Concept, ParseError> {
        match self.peek().cloned() {
            Some(Token::Top) => {
                self.cursor += 1;
                Ok(Concept::Top)
            }
            Some(Token::Bottom) => {
                self.cursor += 1;
                Ok(Concept::Bottom)
            }
            Some(Token::Name(name)) => {
                self.cursor += 1;
                Ok(Concept::Atomic(name))
            }
            Some(Token::LParen) => {
                self.cursor += 1;
                let inner = self.union()?;
                self.expect(Token::RParen, "')'")?;
                Ok(inner)
            }
            Some(tok) => Err(self.error(format!("unexpected token {tok:?}"))),
            None => Err(self.error("unexpected end of input".into())),
        }
    }
}

/// Parses a class expression in either token style.
pub fn parse_concept(text: &str) -> Result<Concept, ParseError> {
    let mut lexer = Lexer { src: text, pos: 0 };
    let mut tokens = Vec::new();
    while let Some(tok) = lexer.next_token()? {
        tokens.push(tok);
    }
    if tokens.is_empty() {
        return Err(ParseError {
            position: 0,
            message: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        tokens,
        cursor: 0,
        end: text.len(),
    };
    let concept = parser.union()?;
    if parser.peek().is_some() {
        return Err(parser.error("trailing input after expression".into()));
    }
    Ok(concept)
}
