//! Parser for queries, aspect files and metadata values.

use std::collections::HashSet;

use crate::aspect::{Aspect, AspectRule, Assignment, Target};
use crate::metadata::{AttributeCondition, AttributeValue, SeqElement, ValueType, SEQ_PUNCTUATION};
use crate::model::{ClassItem, RepeatKind};
use crate::query::{PatternExpr, ProductionPattern, QueryPattern, SlotId, SymbolPart};
use crate::span::{Pos, SourceSpan};
use crate::syntax::lexer::{tokenize, TokenKind};
use crate::syntax::{Cursor, SyntaxError};

/// Parses a standalone query. A trailing `;` is optional.
pub fn parse_query(text: &str) -> Result<QueryPattern, SyntaxError> {
    let toks = tokenize(text, "<query>", Pos::START)?;
    let mut p = Parser::new(text, toks, false);
    let q = p.query()?;
    p.cur.eat_punct(';');
    if !p.cur.at_eof() {
        return Err(p.cur.unexpected(&["end of query"]));
    }
    Ok(q.pattern)
}

/// Parses one metadata value in concrete syntax.
pub fn parse_value(text: &str) -> Result<AttributeValue, SyntaxError> {
    let toks = tokenize(text, "<value>", Pos::START)?;
    let mut p = Parser::new(text, toks, false);
    let v = p.value()?;
    if !p.cur.at_eof() {
        return Err(p.cur.unexpected(&["end of value"]));
    }
    Ok(v)
}

/// Parses an aspect file: a list of `query ;` rules, each optionally followed
/// by a trailing `[[ ... ]] ;` block, plus `@grammar [[ ... ]] ;` entries.
pub fn parse_aspect(text: &str, file: &str) -> Result<Aspect, SyntaxError> {
    let toks = tokenize(text, file, Pos::START)?;
    let mut p = Parser::new(text, toks, true);
    let mut aspect = Aspect { origin: file.to_string(), grammar: Vec::new(), rules: Vec::new() };
    while !p.cur.at_eof() {
        if p.cur.at_punct('@') {
            p.cur.next();
            let (word, span) = p.cur.expect_ident()?;
            if word != "grammar" {
                return Err(SyntaxError { span, message: format!("unknown directive `@{word}`"), expected: vec!["`@grammar`".into()] });
            }
            let entries = p.block()?;
            p.cur.expect_punct(';')?;
            for e in entries {
                match e.kind {
                    EntryKind::Positional { attribute, value } => {
                        aspect.grammar.push(Assignment { target: Target::Grammar, attribute, value, span: e.span })
                    }
                    _ => return Err(SyntaxError::new(e.span, "`@grammar` blocks take plain `name = value;` entries")),
                }
            }
            continue;
        }
        let start = p.cur.index();
        let parsed = p.query()?;
        p.cur.expect_punct(';')?;
        let trailing = if p.cur.at_double('[') {
            let b = p.block()?;
            p.cur.expect_punct(';')?;
            b
        } else {
            Vec::new()
        };
        let span = p.span_from(start);
        let assignments = resolve_entries(&parsed, trailing)?;
        aspect.rules.push(AspectRule { pattern: parsed.pattern, assignments, span });
    }
    Ok(aspect)
}

struct Entry {
    kind: EntryKind,
    span: SourceSpan,
}

enum EntryKind {
    /// `name [= value];`
    Positional { attribute: String, value: AttributeValue },
    /// `#x.name [= value];`
    Dotted { var: String, attribute: String, value: AttributeValue },
    /// `X { name [= value]; ... };`
    Var { var: String, attrs: Vec<(String, AttributeValue, SourceSpan)> },
}

struct ParsedQuery {
    pattern: QueryPattern,
    blocks: Vec<(SlotId, Vec<Entry>)>,
}

fn resolve_entries(q: &ParsedQuery, trailing: Vec<Entry>) -> Result<Vec<Assignment>, SyntaxError> {
    let vars: HashSet<String> = q.pattern.variables().into_iter().collect();
    let mut out = Vec::new();
    let blocks = q.blocks.iter().map(|(s, e)| (Some(*s), e)).chain(std::iter::once((None, &trailing)));
    for (slot, entries) in blocks {
        for e in entries {
            match &e.kind {
                EntryKind::Positional { attribute, value } => {
                    let Some(slot) = slot else {
                        return Err(SyntaxError::new(
                            e.span.clone(),
                            format!("`{attribute}` has no position here; name a variable, as in `X {{ {attribute}; }}`"),
                        ));
                    };
                    out.push(Assignment {
                        target: Target::Slot(slot),
                        attribute: attribute.clone(),
                        value: value.clone(),
                        span: e.span.clone(),
                    });
                }
                EntryKind::Dotted { var, attribute, value } => {
                    let target = if vars.contains(var) {
                        Target::Var(var.clone())
                    } else if let Some(scope) = slot {
                        Target::Occurrences { name: var.clone(), scope }
                    } else {
                        return Err(SyntaxError::new(e.span.clone(), format!("unbound variable `{var}`")));
                    };
                    out.push(Assignment { target, attribute: attribute.clone(), value: value.clone(), span: e.span.clone() });
                }
                EntryKind::Var { var, attrs } => {
                    if !vars.contains(var) {
                        return Err(SyntaxError::new(e.span.clone(), format!("unbound variable `{var}`")));
                    }
                    for (attribute, value, span) in attrs {
                        out.push(Assignment {
                            target: Target::Var(var.clone()),
                            attribute: attribute.clone(),
                            value: value.clone(),
                            span: span.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

struct Parser<'s> {
    cur: Cursor<'s>,
    allow_blocks: bool,
    next_slot: u32,
    blocks: Vec<(SlotId, Vec<Entry>)>,
    depth: usize,
    /// Block found at the very end of the current production pattern.
    production_slot: Option<SlotId>,
    bound: HashSet<String>,
    hash_vars: HashSet<String>,
}

impl<'s> Parser<'s> {
    fn new(src: &'s str, toks: Vec<crate::syntax::lexer::Token>, allow_blocks: bool) -> Self {
        Parser {
            cur: Cursor::new(src, toks),
            allow_blocks,
            next_slot: 0,
            blocks: Vec::new(),
            depth: 0,
            production_slot: None,
            bound: HashSet::new(),
            hash_vars: HashSet::new(),
        }
    }

    fn span_from(&self, start: usize) -> SourceSpan {
        let first = self.cur.token(start).span.clone();
        if self.cur.index() == start {
            return SourceSpan::new(first.file.clone(), first.start, first.start);
        }
        first.to(&self.cur.prev_span())
    }

    // ---- queries ----

    fn query(&mut self) -> Result<ParsedQuery, SyntaxError> {
        self.blocks.clear();
        self.bound.clear();
        self.hash_vars.clear();
        let start = self.cur.index();
        let symbol = if self.cur.at_punct('#') {
            self.cur.next();
            let name = self.cur.expect_ident()?.0;
            self.hash_vars.insert(name.clone());
            SymbolPart::Var(name)
        } else if matches!(self.cur.kind(), TokenKind::Ident(_)) {
            SymbolPart::Name(self.cur.expect_ident()?.0)
        } else {
            SymbolPart::Any
        };
        let mut conditions = Vec::new();
        let mut symbol_slot = None;
        let mut saw_conditions = false;
        loop {
            if !saw_conditions && self.cur.at_punct('{') && !self.cur.at_double('{') {
                conditions = self.conditions()?;
                saw_conditions = true;
            } else if symbol_slot.is_none() && self.cur.at_double('[') {
                symbol_slot = Some(self.slot_block()?);
            } else {
                break;
            }
        }
        let mut productions = Vec::new();
        loop {
            let pstart = self.cur.index();
            let first = productions.is_empty();
            let binder = if self.at_binder() {
                self.cur.next();
                let name = match self.cur.kind().clone() {
                    TokenKind::Ident(n) => {
                        self.cur.next();
                        n
                    }
                    _ => String::new(),
                };
                self.cur.expect_punct(':')?;
                if !name.is_empty() {
                    self.declare(&name)?;
                }
                Some(name)
            } else {
                None
            };
            let sep_ok = match self.cur.kind() {
                TokenKind::Arrow => true,
                TokenKind::OrOr => !first,
                TokenKind::Punct(':') => first && binder.is_none(),
                _ => false,
            };
            if !sep_ok {
                if binder.is_some() {
                    return Err(self.cur.unexpected(&["`-->`"]));
                }
                break;
            }
            self.cur.next();
            self.production_slot = None;
            let body_start = self.cur.index();
            let body = self.alternative()?;
            if self.cur.index() == body_start {
                return Err(SyntaxError {
                    span: self.cur.peek().span.clone(),
                    message: "empty production pattern (write `()` to match an empty production)".into(),
                    expected: vec!["pattern".into()],
                });
            }
            productions.push(ProductionPattern {
                binder,
                body,
                slot: self.production_slot.take(),
                span: self.span_from(pstart),
            });
        }
        if symbol == SymbolPart::Any && !saw_conditions && symbol_slot.is_none() && productions.is_empty() {
            return Err(self.cur.unexpected(&["`#`", "symbol name", "`-->`"]));
        }
        let pattern = QueryPattern { symbol, conditions, symbol_slot, productions, span: self.span_from(start) };
        Ok(ParsedQuery { pattern, blocks: std::mem::take(&mut self.blocks) })
    }

    /// `$`-names may be declared once; `#`-names may repeat.
    fn declare(&mut self, name: &str) -> Result<(), SyntaxError> {
        if self.hash_vars.contains(name) || !self.bound.insert(name.to_string()) {
            return Err(SyntaxError::new(self.cur.prev_span(), format!("variable `{name}` is bound twice")));
        }
        Ok(())
    }

    /// `$name:` or `$:` followed by a production separator.
    fn at_binder(&self) -> bool {
        if !self.cur.at_punct('$') {
            return false;
        }
        let (colon, sep) = match self.cur.kind_at(1) {
            TokenKind::Ident(_) => (2, 3),
            _ => (1, 2),
        };
        self.cur.kind_at(colon) == &TokenKind::Punct(':')
            && matches!(self.cur.kind_at(sep), TokenKind::Arrow | TokenKind::OrOr)
    }

    fn at_production_end(&self) -> bool {
        matches!(self.cur.kind(), TokenKind::Eof | TokenKind::Arrow | TokenKind::OrOr | TokenKind::Punct(';'))
            || self.at_binder()
    }

    fn conditions(&mut self) -> Result<Vec<AttributeCondition>, SyntaxError> {
        self.cur.expect_punct('{')?;
        let mut out = Vec::new();
        while !self.cur.eat_punct('}') {
            if self.cur.eat_punct('!') {
                let (name, _) = self.cur.expect_ident()?;
                out.push(AttributeCondition::Absent(name));
            } else {
                let (name, _) = self.cur.expect_ident()?;
                if self.cur.eat_punct('=') {
                    out.push(AttributeCondition::Equals(name, self.value()?));
                } else if self.cur.eat_punct(':') {
                    let (ty, span) = self.cur.expect_ident()?;
                    let Some(t) = ValueType::from_name(&ty) else {
                        return Err(SyntaxError {
                            span,
                            message: format!("unknown value type `{ty}`"),
                            expected: ["ID", "STRING", "INTEGER", "TUPLE", "SEQUENCE"].map(String::from).to_vec(),
                        });
                    };
                    out.push(AttributeCondition::HasType(name, t));
                } else {
                    out.push(AttributeCondition::Present(name));
                }
            }
            self.cur.expect_punct(';')?;
        }
        Ok(out)
    }

    fn slot_block(&mut self) -> Result<SlotId, SyntaxError> {
        let at = self.cur.peek().span.clone();
        if !self.allow_blocks {
            return Err(SyntaxError::new(at, "annotation blocks are only allowed in aspect files"));
        }
        let entries = self.block()?;
        let id = SlotId(self.next_slot);
        self.next_slot += 1;
        self.blocks.push((id, entries));
        Ok(id)
    }

    fn alternative(&mut self) -> Result<PatternExpr, SyntaxError> {
        let mut branches = vec![self.sequence()?];
        while self.cur.eat_punct('|') {
            branches.push(self.sequence()?);
        }
        Ok(if branches.len() == 1 { branches.pop().unwrap() } else { PatternExpr::Alt(branches) })
    }

    fn at_atom(&self) -> bool {
        match self.cur.kind() {
            TokenKind::Ident(_) | TokenKind::Quoted(_) | TokenKind::DotDot => true,
            TokenKind::Punct('#' | '(') => true,
            TokenKind::Punct('[') => !self.cur.at_double('['),
            TokenKind::Punct('$') => !self.at_binder(),
            _ => false,
        }
    }

    fn sequence(&mut self) -> Result<PatternExpr, SyntaxError> {
        let mut items = Vec::new();
        while self.at_atom() {
            let item = self.postfix()?;
            if self.cur.at_double('[') {
                let at = self.cur.peek().span.clone();
                let slot = self.slot_block()?;
                if self.depth == 0 && self.at_production_end() {
                    self.production_slot = Some(slot);
                    items.push(item);
                    break;
                }
                if item == PatternExpr::Wildcard {
                    return Err(SyntaxError::new(at, "a block cannot follow `..` inside a pattern"));
                }
                items.push(PatternExpr::Slot(slot, Box::new(item)));
            } else {
                items.push(item);
            }
        }
        if items.is_empty() && self.cur.at_double('[') && self.depth == 0 {
            return Err(self.cur.error_here("a block needs a pattern before it"));
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { PatternExpr::Seq(items) })
    }

    fn postfix(&mut self) -> Result<PatternExpr, SyntaxError> {
        let mut e = self.atom()?;
        loop {
            let kind = match self.cur.kind() {
                TokenKind::Punct('*') => RepeatKind::Star,
                TokenKind::Punct('+') => RepeatKind::Plus,
                TokenKind::Punct('?') => RepeatKind::Optional,
                _ => return Ok(e),
            };
            if e == PatternExpr::Wildcard {
                return Err(self.cur.error_here("`..` cannot be repeated"));
            }
            self.cur.next();
            e = PatternExpr::Repeat(Box::new(e), kind);
        }
    }

    fn atom(&mut self) -> Result<PatternExpr, SyntaxError> {
        match self.cur.kind().clone() {
            TokenKind::Punct('#') => {
                self.cur.next();
                let (name, _) = self.cur.expect_ident()?;
                if self.bound.contains(&name) {
                    return Err(SyntaxError::new(self.cur.prev_span(), format!("variable `{name}` is bound twice")));
                }
                self.hash_vars.insert(name.clone());
                Ok(PatternExpr::Var(name))
            }
            TokenKind::Ident(name) => {
                self.cur.next();
                Ok(PatternExpr::Ref(name))
            }
            TokenKind::Quoted(text) => {
                if text.is_empty() {
                    return Err(self.cur.error_here("empty literal"));
                }
                self.cur.next();
                Ok(PatternExpr::Lit(text))
            }
            TokenKind::DotDot => {
                self.cur.next();
                Ok(PatternExpr::Wildcard)
            }
            TokenKind::Punct('[') => {
                self.cur.next();
                Ok(PatternExpr::Class(self.class_items()?))
            }
            TokenKind::Punct('(') => {
                self.cur.next();
                if self.cur.eat_punct(')') {
                    return Ok(PatternExpr::Seq(Vec::new()));
                }
                self.depth += 1;
                let inner = self.alternative()?;
                self.depth -= 1;
                self.cur.expect_punct(')')?;
                Ok(inner)
            }
            TokenKind::Punct('$') => {
                self.cur.next();
                let (name, _) = self.cur.expect_ident()?;
                self.declare(&name)?;
                self.cur.expect_punct(':')?;
                let inner = self.postfix()?;
                if inner == PatternExpr::Wildcard {
                    return Err(SyntaxError::new(self.cur.prev_span(), "`..` cannot be bound to a variable"));
                }
                Ok(PatternExpr::Bind(name, Box::new(inner)))
            }
            _ => Err(self.cur.unexpected(&["pattern"])),
        }
    }

    fn class_items(&mut self) -> Result<Vec<ClassItem>, SyntaxError> {
        let mut items = Vec::new();
        while !self.cur.eat_punct(']') {
            let lo = self.class_char()?;
            if self.cur.eat(&TokenKind::DashDash) {
                let hi = self.class_char()?;
                if lo > hi {
                    return Err(SyntaxError::new(self.cur.prev_span(), "empty character range"));
                }
                items.push(ClassItem::Range(lo, hi));
            } else {
                items.push(ClassItem::Char(lo));
            }
        }
        if items.is_empty() {
            return Err(SyntaxError::new(self.cur.prev_span(), "empty character class"));
        }
        Ok(items)
    }

    fn class_char(&mut self) -> Result<char, SyntaxError> {
        if let TokenKind::Quoted(s) = self.cur.kind().clone() {
            let mut chars = s.chars();
            if let (Some(c), None) = (chars.next(), chars.next()) {
                self.cur.next();
                return Ok(c);
            }
            return Err(self.cur.error_here("character class members must be single characters"));
        }
        Err(self.cur.unexpected(&["quoted character", "`]`"]))
    }

    // ---- blocks ----

    fn block(&mut self) -> Result<Vec<Entry>, SyntaxError> {
        self.cur.expect_double('[')?;
        let mut out = Vec::new();
        while !self.cur.at_double(']') {
            if self.cur.at_eof() {
                return Err(self.cur.unexpected(&["`]]`"]));
            }
            out.push(self.entry()?);
        }
        self.cur.expect_double(']')?;
        Ok(out)
    }

    fn entry(&mut self) -> Result<Entry, SyntaxError> {
        let start = self.cur.index();
        let kind = if self.cur.eat_punct('#') {
            let (var, _) = self.cur.expect_ident()?;
            self.cur.expect_punct('.')?;
            let (attribute, _) = self.cur.expect_ident()?;
            let value = self.optional_value()?;
            EntryKind::Dotted { var, attribute, value }
        } else {
            let (name, _) = self.cur.expect_ident()?;
            if self.cur.at_punct('{') && !self.cur.at_double('{') {
                self.cur.next();
                let mut attrs = Vec::new();
                while !self.cur.eat_punct('}') {
                    let astart = self.cur.index();
                    let (attribute, _) = self.cur.expect_ident()?;
                    let value = self.optional_value()?;
                    self.cur.expect_punct(';')?;
                    attrs.push((attribute, value, self.span_from(astart)));
                }
                EntryKind::Var { var: name, attrs }
            } else {
                let value = self.optional_value()?;
                EntryKind::Positional { attribute: name, value }
            }
        };
        self.cur.expect_punct(';')?;
        Ok(Entry { kind, span: self.span_from(start) })
    }

    fn optional_value(&mut self) -> Result<AttributeValue, SyntaxError> {
        if self.cur.eat_punct('=') {
            self.value()
        } else {
            Ok(AttributeValue::None)
        }
    }

    // ---- values ----

    fn value(&mut self) -> Result<AttributeValue, SyntaxError> {
        match self.cur.kind().clone() {
            TokenKind::Ident(s) => {
                self.cur.next();
                Ok(AttributeValue::Id(s))
            }
            TokenKind::Quoted(s) | TokenKind::DoubleQuoted(s) | TokenKind::Verbatim(s) => {
                self.cur.next();
                Ok(AttributeValue::Str(s))
            }
            TokenKind::Int(n) => {
                self.cur.next();
                Ok(AttributeValue::Int(n))
            }
            TokenKind::Punct('-') if matches!(self.cur.kind_at(1), TokenKind::Int(_)) => {
                self.cur.next();
                let TokenKind::Int(n) = self.cur.next().kind else { unreachable!() };
                Ok(AttributeValue::Int(-n))
            }
            TokenKind::Punct('{') if self.cur.at_double('{') => Ok(AttributeValue::Seq(self.sequence_value()?)),
            TokenKind::Punct('{') => Ok(AttributeValue::Tuple(self.tuple()?)),
            _ => Err(self.cur.unexpected(&["identifier", "string", "integer", "`{`", "`{{`"])),
        }
    }

    fn tuple(&mut self) -> Result<Vec<(String, AttributeValue)>, SyntaxError> {
        self.cur.expect_punct('{')?;
        let mut fields: Vec<(String, AttributeValue)> = Vec::new();
        while !self.cur.eat_punct('}') {
            let (name, span) = self.cur.expect_ident()?;
            if fields.iter().any(|(n, _)| *n == name) {
                return Err(SyntaxError::new(span, format!("field `{name}` appears twice")));
            }
            let value = self.optional_value()?;
            self.cur.expect_punct(';')?;
            fields.push((name, value));
        }
        Ok(fields)
    }

    fn sequence_value(&mut self) -> Result<Vec<SeqElement>, SyntaxError> {
        self.cur.expect_double('{')?;
        let mut out = Vec::new();
        loop {
            if self.cur.at_double('}') {
                self.cur.next();
                self.cur.next();
                return Ok(out);
            }
            let el = match self.cur.kind().clone() {
                TokenKind::Eof => return Err(self.cur.unexpected(&["`}}`"])),
                TokenKind::Ident(s) => {
                    self.cur.next();
                    SeqElement::Ident(s)
                }
                TokenKind::Quoted(s) | TokenKind::DoubleQuoted(s) | TokenKind::Verbatim(s) => {
                    self.cur.next();
                    SeqElement::Str(s)
                }
                TokenKind::Int(n) => {
                    self.cur.next();
                    SeqElement::Num(n)
                }
                TokenKind::Punct('{') if self.cur.at_double('{') => SeqElement::Seq(self.sequence_value()?),
                TokenKind::Punct('{') => SeqElement::Tuple(self.tuple()?),
                TokenKind::Punct(c) if SEQ_PUNCTUATION.contains(c) => {
                    self.cur.next();
                    SeqElement::Punct(c)
                }
                TokenKind::Arrow | TokenKind::DashDash | TokenKind::DotDot | TokenKind::OrOr => {
                    let text = match self.cur.next().kind {
                        TokenKind::Arrow => "-->",
                        TokenKind::DashDash => "--",
                        TokenKind::DotDot => "..",
                        _ => "||",
                    };
                    out.extend(text.chars().map(SeqElement::Punct));
                    continue;
                }
                _ => return Err(self.cur.unexpected(&["sequence element", "`}}`"])),
            };
            out.push(el);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_recursion_aspect() {
        let a = parse_aspect("#Rec --> #Rec ..;\n[[\n    Rec {\n        leftRecursive;\n    };\n]];\n", "lr.aspect").unwrap();
        assert_eq!(a.rules.len(), 1);
        let r = &a.rules[0];
        assert_eq!(r.assignments.len(), 1);
        assert_eq!(r.assignments[0].target, Target::Var("Rec".into()));
        assert_eq!(r.assignments[0].attribute, "leftRecursive");
        assert_eq!(r.assignments[0].value, AttributeValue::None);
    }

    #[test]
    fn positional_blocks() {
        let src = "
            sum [[returns = int;]]
                $:--> ..
                [[
                    before = '##result = 0;';
                    #mult.after = <<
                        ##result += #mult;
                    >>;
                ]];
        ";
        let a = parse_aspect(src, "sum.aspect").unwrap();
        let r = &a.rules[0];
        assert_eq!(r.pattern.symbol, SymbolPart::Name("sum".into()));
        let sym_slot = r.pattern.symbol_slot.unwrap();
        let prod_slot = r.pattern.productions[0].slot.unwrap();
        let targets: Vec<_> = r.assignments.iter().map(|a| (a.target.clone(), a.attribute.as_str())).collect();
        assert_eq!(
            targets,
            vec![
                (Target::Slot(sym_slot), "returns"),
                (Target::Slot(prod_slot), "before"),
                (Target::Occurrences { name: "mult".into(), scope: prod_slot }, "after"),
            ]
        );
        assert_eq!(r.assignments[2].value, AttributeValue::Str("##result += #mult;".into()));
    }

    #[test]
    fn block_before_next_production_belongs_to_the_production() {
        let src = "NEWLINE\n    $:--> ..\n    [[\n        predicate = <<'\\r'? '\\n'>>;\n    ]]\n    --> '\\r';";
        let a = parse_aspect(src, "nl.aspect").unwrap();
        let p = &a.rules[0].pattern;
        assert_eq!(p.productions.len(), 2);
        assert!(p.productions[0].slot.is_some());
        assert_eq!(p.productions[1].body, PatternExpr::Lit("\r".into()));
        assert_eq!(a.rules[0].assignments[0].value, AttributeValue::Str("'\\r'? '\\n'".into()));
    }

    #[test]
    fn element_blocks_inside_productions() {
        let a = parse_aspect("x --> a [[ p; ]] b ;", "e").unwrap();
        let PatternExpr::Seq(items) = &a.rules[0].pattern.productions[0].body else { panic!() };
        assert!(matches!(items[0], PatternExpr::Slot(..)));
        let a = parse_aspect("x --> a (b [[ p; ]]) ;", "e").unwrap();
        assert!(a.rules[0].pattern.productions[0].slot.is_none());
    }

    #[test]
    fn unbound_variable_in_trailing_block() {
        let err = parse_aspect("#A --> #A ..; [[ B { x; }; ]];", "u").unwrap_err();
        assert!(err.message.contains("unbound variable `B`"));
    }

    #[test]
    fn queries() {
        let q = parse_query("#Rec --> #Rec .. ;").unwrap();
        assert_eq!(q.symbol, SymbolPart::Var("Rec".into()));
        assert_eq!(
            q.productions[0].body,
            PatternExpr::Seq(vec![PatternExpr::Var("Rec".into()), PatternExpr::Wildcard])
        );
        let q = parse_query("#N {\n type = Nonterminal;\n operation;\n associativity : ID;\n !commutative;\n}").unwrap();
        assert_eq!(
            q.conditions,
            vec![
                AttributeCondition::Equals("type".into(), AttributeValue::Id("Nonterminal".into())),
                AttributeCondition::Present("operation".into()),
                AttributeCondition::HasType("associativity".into(), ValueType::Id),
                AttributeCondition::Absent("commutative".into()),
            ]
        );
        assert!(parse_query("#X --> ;").is_err());
        let q = parse_query("Symbol $production:--> $alt:(A | B) ;").unwrap();
        assert_eq!(q.productions[0].binder.as_deref(), Some("production"));
        assert!(matches!(q.productions[0].body, PatternExpr::Bind(..)));
        assert!(parse_query("x --> a [[ p; ]] ;").is_err());
        assert!(parse_query("x --> $a:b $a:c ;").is_err());
    }

    #[test]
    fn values() {
        let v = parse_value("{ name = MyClass; super = Object; }").unwrap();
        assert_eq!(v.field("super"), Some(&AttributeValue::Id("Object".into())));
        let v = parse_value("{{ ^('+' left ^('-' right 10)) }}").unwrap();
        assert_eq!(v.as_seq().unwrap().len(), 11);
        assert_eq!(parse_value("\"some string\"").unwrap(), AttributeValue::Str("some string".into()));
        assert_eq!(parse_value("-5").unwrap(), AttributeValue::Int(-5));
        assert_eq!(parse_value("{{ a --> b }}").unwrap().as_seq().unwrap().len(), 5);
        assert!(parse_value("{ a; a; }").is_err());
        assert!(parse_value("{{ b( }").is_err());
    }
}
