//! Surface syntax: lexing, parsing and printing of grammar units, queries,
//! aspects and metadata values.

mod aspect;
mod grammar;
pub mod lexer;
pub(crate) mod printer;

use std::fmt;

use thiserror::Error;

use crate::model::{SourceMap, Symbol};
use crate::span::SourceSpan;
use crate::template::{ImportDecl, TemplateDef};
use lexer::{Token, TokenKind};

pub use aspect::{parse_aspect, parse_query, parse_value};
pub use grammar::{parse_grammar, parse_production_list, parse_expression_text};
pub use printer::{print_expr, print_grammar, print_resolved, print_symbol, print_value};

#[derive(Clone, Debug, Error, PartialEq)]
pub struct SyntaxError {
    pub span: SourceSpan,
    pub message: String,
    /// Token descriptions that would have been accepted, when known.
    pub expected: Vec<String>,
}

impl SyntaxError {
    pub fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        SyntaxError { span, message: message.into(), expected: Vec::new() }
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

/// The result of parsing one grammar file. References are not resolved.
#[derive(Clone, Debug, Default)]
pub struct ParsedUnit {
    /// File the unit was read from; its stem is the unit name.
    pub file: String,
    pub imports: Vec<ImportDecl>,
    pub templates: Vec<TemplateDef>,
    pub rules: Vec<Symbol>,
    pub source_map: SourceMap,
}

impl ParsedUnit {
    /// The name other units use to import this one.
    pub fn unit_name(&self) -> String {
        unit_name_of(&self.file)
    }

    pub fn rule(&self, name: &str) -> Option<&Symbol> {
        self.rules.iter().find(|s| s.name == name)
    }

    pub fn template(&self, name: &str) -> Option<&TemplateDef> {
        self.templates.iter().find(|t| t.name == name)
    }
}

/// File stem without directories or extension.
pub fn unit_name_of(file: &str) -> String {
    let base = file.rsplit(['/', '\\']).next().unwrap_or(file);
    match base.rfind('.') {
        Some(i) if i > 0 => base[..i].to_string(),
        _ => base.to_string(),
    }
}

/// Structural equality of two parsed units, ignoring node ids and spans.
pub fn units_structurally_equal(a: &ParsedUnit, b: &ParsedUnit) -> bool {
    use crate::model::symbols_structurally_equal;
    a.rules.len() == b.rules.len()
        && a.rules.iter().zip(&b.rules).all(|(x, y)| symbols_structurally_equal(x, y))
        && a.imports.len() == b.imports.len()
        && a.imports.iter().zip(&b.imports).all(|(x, y)| x.structurally_equals(y))
        && a.templates.len() == b.templates.len()
        && a.templates.iter().zip(&b.templates).all(|(x, y)| x.structurally_equals(y))
}

/// Token cursor shared by the parsers.
pub(crate) struct Cursor<'s> {
    src: &'s str,
    toks: Vec<Token>,
    pos: usize,
}

impl<'s> Cursor<'s> {
    pub fn new(src: &'s str, toks: Vec<Token>) -> Self {
        Cursor { src, toks, pos: 0 }
    }

    pub fn peek(&self) -> &Token {
        self.peek_at(0)
    }

    pub fn peek_at(&self, n: usize) -> &Token {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i]
    }

    pub fn kind(&self) -> &TokenKind {
        &self.peek().kind
    }

    pub fn kind_at(&self, n: usize) -> &TokenKind {
        &self.peek_at(n).kind
    }

    pub fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    /// Span of the most recently consumed token.
    pub fn prev_span(&self) -> SourceSpan {
        self.toks[self.pos.saturating_sub(1)].span.clone()
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.kind(), TokenKind::Eof)
    }

    pub fn at_punct(&self, c: char) -> bool {
        self.kind() == &TokenKind::Punct(c)
    }

    pub fn at_ident(&self, word: &str) -> bool {
        matches!(self.kind(), TokenKind::Ident(s) if s == word)
    }

    /// Two copies of `c` with nothing in between, like `{{` or `]]`.
    pub fn at_double(&self, c: char) -> bool {
        let a = self.peek_at(0);
        let b = self.peek_at(1);
        a.kind == TokenKind::Punct(c) && b.kind == TokenKind::Punct(c) && a.end == b.start
    }

    pub fn eat_punct(&mut self, c: char) -> bool {
        if self.at_punct(c) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.kind() == kind {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, c: char) -> Result<Token, SyntaxError> {
        if self.at_punct(c) {
            Ok(self.next())
        } else {
            Err(self.unexpected(&[&format!("`{c}`")]))
        }
    }

    pub fn expect_double(&mut self, c: char) -> Result<(), SyntaxError> {
        if self.at_double(c) {
            self.next();
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{c}{c}`")]))
        }
    }

    pub fn expect_ident(&mut self) -> Result<(String, SourceSpan), SyntaxError> {
        match self.kind().clone() {
            TokenKind::Ident(s) => {
                let t = self.next();
                Ok((s, t.span))
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    pub fn unexpected(&self, expected: &[&str]) -> SyntaxError {
        let t = self.peek();
        SyntaxError {
            span: t.span.clone(),
            message: format!("unexpected {}", t.kind.describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn error_here(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError::new(self.peek().span.clone(), message)
    }

    /// Source text from the start of token `from` to the end of the last
    /// consumed token.
    pub fn text_since(&self, from: usize) -> &'s str {
        let start = self.toks[from].start;
        let end = self.toks[self.pos.saturating_sub(1).max(from)].end;
        if end <= start {
            return "";
        }
        &self.src[start..end]
    }

    pub fn index(&self) -> usize {
        self.pos
    }

    pub fn token(&self, i: usize) -> &Token {
        &self.toks[i]
    }
}
