use std::sync::Arc;

use crate::span::{Pos, SourceSpan};
use crate::syntax::SyntaxError;

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    /// `'...'`, unescaped.
    Quoted(String),
    /// `"..."`, unescaped.
    DoubleQuoted(String),
    /// `<<...>>`, verbatim with the framing lines trimmed.
    Verbatim(String),
    /// `-->`
    Arrow,
    /// `--`
    DashDash,
    /// `..`
    DotDot,
    /// `||`
    OrOr,
    Punct(char),
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Int(n) => format!("integer `{n}`"),
            TokenKind::Quoted(_) | TokenKind::DoubleQuoted(_) => "string literal".into(),
            TokenKind::Verbatim(_) => "verbatim string".into(),
            TokenKind::Arrow => "`-->`".into(),
            TokenKind::DashDash => "`--`".into(),
            TokenKind::DotDot => "`..`".into(),
            TokenKind::OrOr => "`||`".into(),
            TokenKind::Punct(c) => format!("`{c}`"),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
    /// Byte offsets into the lexed text, used for adjacency (`{{`, `[[`).
    pub start: usize,
    pub end: usize,
}

const PUNCT: &str = "()[]{}<>,;.:=#$!?*+|^/&@%-";

struct Lexer<'a> {
    src: &'a str,
    file: Arc<str>,
    pos: usize,
    line: u32,
    col: u32,
}

/// Splits `src` into tokens. `start` is the position of the first character,
/// which lets fragments of a larger file be lexed with correct positions.
pub fn tokenize(src: &str, file: &str, start: Pos) -> Result<Vec<Token>, SyntaxError> {
    let mut lx = Lexer { src, file: Arc::from(file), pos: 0, line: start.line, col: start.col };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia();
        let begin = lx.here();
        let begin_off = lx.pos;
        let Some(c) = lx.peek() else {
            out.push(Token {
                kind: TokenKind::Eof,
                span: SourceSpan::new(lx.file.clone(), begin, begin),
                start: lx.pos,
                end: lx.pos,
            });
            return Ok(out);
        };
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = lx.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                s.push(c);
                lx.bump();
            }
            TokenKind::Ident(s)
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(c) = lx.peek().filter(|c| c.is_ascii_digit()) {
                s.push(c);
                lx.bump();
            }
            match s.parse::<i64>() {
                Ok(n) => TokenKind::Int(n),
                Err(_) => return Err(lx.error_at(begin, format!("integer `{s}` does not fit in 64 bits"))),
            }
        } else if c == '\'' || c == '"' {
            let s = lx.quoted(c)?;
            if c == '\'' {
                TokenKind::Quoted(s)
            } else {
                TokenKind::DoubleQuoted(s)
            }
        } else if lx.rest().starts_with("<<") {
            TokenKind::Verbatim(lx.verbatim()?)
        } else if lx.rest().starts_with("-->") {
            lx.bump_n(3);
            TokenKind::Arrow
        } else if lx.rest().starts_with("--") {
            lx.bump_n(2);
            TokenKind::DashDash
        } else if lx.rest().starts_with("..") {
            lx.bump_n(2);
            TokenKind::DotDot
        } else if lx.rest().starts_with("||") {
            lx.bump_n(2);
            TokenKind::OrOr
        } else if PUNCT.contains(c) {
            lx.bump();
            TokenKind::Punct(c)
        } else {
            return Err(lx.error_at(begin, format!("unexpected character `{}`", c.escape_debug())));
        };
        out.push(Token {
            kind,
            span: SourceSpan::new(lx.file.clone(), begin, lx.here()),
            start: begin_off,
            end: lx.pos,
        });
    }
}

impl Lexer<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn here(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn error_at(&self, at: Pos, message: String) -> SyntaxError {
        let end = Pos::new(at.line, at.col + 1);
        SyntaxError::new(SourceSpan::new(self.file.clone(), at, end), message)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.rest().starts_with("//") => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn quoted(&mut self, quote: char) -> Result<String, SyntaxError> {
        let open = self.here();
        self.bump();
        let mut s = String::new();
        loop {
            let at = self.here();
            match self.bump() {
                None | Some('\n') => return Err(self.error_at(open, "unterminated literal".into())),
                Some(c) if c == quote => return Ok(s),
                Some('\\') => {
                    let esc = match self.bump() {
                        Some('r') => '\r',
                        Some('n') => '\n',
                        Some('t') => '\t',
                        Some('\\') => '\\',
                        Some('\'') => '\'',
                        Some('"') => '"',
                        Some(other) => {
                            return Err(self.error_at(at, format!("bad escape `\\{}`", other.escape_debug())))
                        }
                        None => return Err(self.error_at(open, "unterminated literal".into())),
                    };
                    s.push(esc);
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn verbatim(&mut self) -> Result<String, SyntaxError> {
        let open = self.here();
        self.bump_n(2);
        let Some(len) = self.rest().find(">>") else {
            return Err(self.error_at(open, "unterminated `<<` string".into()));
        };
        let body = self.rest()[..len].to_string();
        let chars = body.chars().count();
        self.bump_n(chars + 2);
        Ok(trim_verbatim(&body))
    }
}

/// Drops a blank first and last line and removes the indentation common to
/// the remaining lines. Single-line bodies are returned unchanged.
pub fn trim_verbatim(body: &str) -> String {
    if !body.contains('\n') {
        return body.to_string();
    }
    let mut lines: Vec<&str> = body.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
    if lines.first().is_some_and(|l| l.trim().is_empty()) {
        lines.remove(0);
    }
    if lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    let indent = lines
        .iter()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    lines
        .iter()
        .map(|l| if l.len() >= indent { &l[indent..] } else { l.trim_start() })
        .collect::<Vec<_>>()
        .join("\n")
}
