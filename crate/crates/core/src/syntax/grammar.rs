//! Parser for grammar units: rules, imports and template definitions.

use crate::model::{ClassItem, Expr, ExprKind, Production, RawArg, RepeatKind, SourceMap, Symbol, TemplateCall};
use crate::span::SourceSpan;
use crate::syntax::lexer::{tokenize, TokenKind};
use crate::syntax::{Cursor, ParsedUnit, SyntaxError};
use crate::template::{
    ImportDecl, ImportTarget, ParamKind, RuleName, TemplateBody, TemplateDef, TemplateKind, TemplateParam, TemplateRule,
};
use crate::span::Pos;

/// Parses a grammar unit. Both `:` and `-->` separate a rule name from its
/// productions; productions are separated by `||`.
pub fn parse_grammar(text: &str, file: &str) -> Result<ParsedUnit, SyntaxError> {
    let toks = tokenize(text, file, Pos::START)?;
    let mut p = GrammarParser { cur: Cursor::new(text, toks), map: SourceMap::default(), placeholders: false };
    let mut unit = ParsedUnit { file: file.to_string(), ..ParsedUnit::default() };
    while !p.cur.at_eof() {
        if p.cur.at_ident("import") && matches!(p.cur.kind_at(1), TokenKind::Ident(_)) {
            unit.imports.push(p.import()?);
        } else if p.at_template_def() {
            let t = p.template_def()?;
            if unit.template(&t.name).is_some() {
                return Err(SyntaxError::new(t.span, format!("template `{}` is defined twice", t.name)));
            }
            unit.templates.push(t);
        } else {
            let (name, sym) = p.rule()?;
            let RuleName::Fixed(name) = name else {
                unreachable!("placeholders are disabled outside templates")
            };
            if unit.rule(&name).is_some() {
                let span = p.map.get(sym.id).cloned().unwrap();
                return Err(SyntaxError::new(span, format!("duplicate rule for symbol `{name}`")));
            }
            unit.rules.push(sym);
        }
    }
    unit.source_map = p.map;
    Ok(unit)
}

/// Parses a single expression, as written in a template argument. `at` gives
/// the file and position of the first character.
pub fn parse_expression_text(text: &str, at: &SourceSpan) -> Result<(Expr, SourceMap), SyntaxError> {
    let toks = tokenize(text, &at.file, at.start)?;
    let mut p = GrammarParser { cur: Cursor::new(text, toks), map: SourceMap::default(), placeholders: false };
    let e = p.alternative()?;
    if !p.cur.at_eof() {
        return Err(p.cur.unexpected(&["end of argument"]));
    }
    Ok((e, p.map))
}

/// Parses `||`-separated productions, as written in a template argument.
pub fn parse_production_list(text: &str, at: &SourceSpan) -> Result<(Vec<Production>, SourceMap), SyntaxError> {
    let toks = tokenize(text, &at.file, at.start)?;
    let mut p = GrammarParser { cur: Cursor::new(text, toks), map: SourceMap::default(), placeholders: false };
    let prods = p.productions()?;
    if !p.cur.at_eof() {
        return Err(p.cur.unexpected(&["`||`", "end of argument"]));
    }
    Ok((prods, p.map))
}

struct GrammarParser<'s> {
    cur: Cursor<'s>,
    map: SourceMap,
    /// `$name` is accepted only inside template bodies.
    placeholders: bool,
}

impl GrammarParser<'_> {
    fn span_from(&self, start: usize) -> SourceSpan {
        let first = self.cur.token(start).span.clone();
        if self.cur.index() == start {
            // nothing consumed: zero-width span at the current token
            return SourceSpan::new(first.file.clone(), first.start, first.start);
        }
        first.to(&self.cur.prev_span())
    }

    fn at_template_def(&self) -> bool {
        matches!(self.cur.kind(), TokenKind::Ident(k) if TemplateKind::from_keyword(k).is_some())
            && matches!(self.cur.kind_at(1), TokenKind::Ident(_))
            && self.cur.kind_at(2) == &TokenKind::Punct('<')
    }

    fn import(&mut self) -> Result<ImportDecl, SyntaxError> {
        let start = self.cur.index();
        self.cur.next();
        let (name, name_span) = self.cur.expect_ident()?;
        let target = if self.cur.at_punct('<') {
            let args = self.raw_args()?;
            ImportTarget::Instance(TemplateCall { template: name, args })
        } else {
            let _ = name_span;
            ImportTarget::Unit(name)
        };
        self.cur.expect_punct(';')?;
        Ok(ImportDecl { target, span: self.span_from(start) })
    }

    /// `<` arg, ... `>` with each argument kept as source text.
    fn raw_args(&mut self) -> Result<Vec<RawArg>, SyntaxError> {
        let open = self.cur.expect_punct('<')?;
        let mut args = Vec::new();
        if self.cur.eat_punct('>') {
            return Ok(args);
        }
        loop {
            let start = self.cur.index();
            let mut depth = 0usize;
            loop {
                match self.cur.kind() {
                    TokenKind::Eof => {
                        return Err(SyntaxError::new(open.span.clone(), "unterminated template argument list"));
                    }
                    TokenKind::Punct('<' | '(' | '[') => depth += 1,
                    TokenKind::Punct('>' | ')' | ']') if depth > 0 => depth -= 1,
                    TokenKind::Punct('>') | TokenKind::Punct(',') => break,
                    TokenKind::Punct(')' | ']') => return Err(self.cur.unexpected(&["`,`", "`>`"])),
                    _ => {}
                }
                self.cur.next();
            }
            if self.cur.index() == start {
                return Err(self.cur.error_here("empty template argument"));
            }
            let text = self.cur.text_since(start).to_string();
            args.push(RawArg { text, span: self.span_from(start) });
            if self.cur.eat_punct(',') {
                continue;
            }
            self.cur.expect_punct('>')?;
            return Ok(args);
        }
    }

    fn template_def(&mut self) -> Result<TemplateDef, SyntaxError> {
        let start = self.cur.index();
        let (kw, _) = self.cur.expect_ident()?;
        let kind = TemplateKind::from_keyword(&kw).unwrap();
        let (name, _) = self.cur.expect_ident()?;
        self.cur.expect_punct('<')?;
        let mut params = Vec::new();
        if !self.cur.at_punct('>') {
            loop {
                params.push(self.template_param()?);
                if !self.cur.eat_punct(',') {
                    break;
                }
            }
        }
        self.cur.expect_punct('>')?;
        self.cur.expect_punct('{')?;

        let outer_map = std::mem::take(&mut self.map);
        self.placeholders = true;
        let body = match kind {
            TemplateKind::Symbol | TemplateKind::Grammar => {
                let mut rules = Vec::new();
                while !self.cur.at_punct('}') {
                    if self.cur.at_eof() {
                        return Err(self.cur.unexpected(&["`}`"]));
                    }
                    let (rule_name, sym) = self.rule()?;
                    rules.push(TemplateRule { id: sym.id, name: rule_name, productions: sym.productions });
                }
                TemplateBody::Rules(rules)
            }
            TemplateKind::Expression => {
                let e = self.alternative()?;
                self.cur.eat_punct(';');
                TemplateBody::Expr(e)
            }
            TemplateKind::Production => {
                let prods = self.productions()?;
                self.cur.eat_punct(';');
                TemplateBody::Productions(prods)
            }
        };
        self.placeholders = false;
        let body_map = std::mem::replace(&mut self.map, outer_map);
        self.cur.expect_punct('}')?;

        let def = TemplateDef { name, kind, params, body, span: self.span_from(start), source_map: body_map };
        def.validate().map_err(|e| SyntaxError::new(e.span().clone(), e.to_string()))?;
        Ok(def)
    }

    fn template_param(&mut self) -> Result<TemplateParam, SyntaxError> {
        let (kw, kw_span) = self.cur.expect_ident()?;
        let kind = match kw.as_str() {
            "ID" => ParamKind::Id,
            "Symbol" => ParamKind::Symbol,
            "Expression" => ParamKind::Expression,
            "Production" => ParamKind::Production { many: self.cur.eat_punct('*') },
            _ => {
                return Err(SyntaxError {
                    span: kw_span,
                    message: format!("unknown placeholder kind `{kw}`"),
                    expected: vec!["ID".into(), "Expression".into(), "Production".into(), "Symbol".into()],
                })
            }
        };
        self.cur.expect_punct('$')?;
        let (name, _) = self.cur.expect_ident()?;
        Ok(TemplateParam { kind, name })
    }

    fn rule(&mut self) -> Result<(RuleName, Symbol), SyntaxError> {
        let start = self.cur.index();
        let name = if self.placeholders && self.cur.at_punct('$') {
            self.cur.next();
            RuleName::Placeholder(self.cur.expect_ident()?.0)
        } else {
            match self.cur.kind() {
                TokenKind::Ident(_) => RuleName::Fixed(self.cur.expect_ident()?.0),
                _ => return Err(self.cur.unexpected(&["rule name", "`import`"])),
            }
        };
        if !self.cur.eat_punct(':') && !self.cur.eat(&TokenKind::Arrow) {
            return Err(self.cur.unexpected(&["`:`", "`-->`"]));
        }
        let productions = self.productions()?;
        self.cur.expect_punct(';')?;
        let label = match &name {
            RuleName::Fixed(n) => n.clone(),
            RuleName::Placeholder(n) => format!("${n}"),
        };
        let sym = Symbol::new(&label, productions);
        self.map.insert(sym.id, self.span_from(start));
        Ok((name, sym))
    }

    fn productions(&mut self) -> Result<Vec<Production>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            let start = self.cur.index();
            let body = self.alternative()?;
            let prod = Production::new(body);
            self.map.insert(prod.id, self.span_from(start));
            out.push(prod);
            if !self.cur.eat(&TokenKind::OrOr) {
                return Ok(out);
            }
        }
    }

    fn alternative(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.cur.index();
        let mut branches = vec![self.sequence()?];
        while self.cur.eat_punct('|') {
            branches.push(self.sequence()?);
        }
        if branches.len() == 1 {
            return Ok(branches.pop().unwrap());
        }
        let e = Expr::new(ExprKind::Alternative(branches));
        self.map.insert(e.id, self.span_from(start));
        Ok(e)
    }

    fn at_atom(&self) -> bool {
        match self.cur.kind() {
            TokenKind::Ident(_) | TokenKind::Quoted(_) => true,
            TokenKind::Punct('(' | '[') => true,
            TokenKind::Punct('$') => self.placeholders,
            _ => false,
        }
    }

    fn sequence(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.cur.index();
        let mut items = Vec::new();
        while self.at_atom() {
            items.push(self.postfix()?);
        }
        if items.is_empty() && !self.at_sequence_end() {
            return Err(self.cur.unexpected(&["expression", "`;`"]));
        }
        if items.len() == 1 {
            return Ok(items.pop().unwrap());
        }
        let e = Expr::new(ExprKind::Sequence(items));
        self.map.insert(e.id, self.span_from(start));
        Ok(e)
    }

    fn at_sequence_end(&self) -> bool {
        matches!(
            self.cur.kind(),
            TokenKind::Eof | TokenKind::OrOr | TokenKind::Punct(';' | '|' | ')' | '}')
        )
    }

    fn postfix(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.cur.index();
        let mut e = self.atom()?;
        loop {
            let kind = match self.cur.kind() {
                TokenKind::Punct('*') => RepeatKind::Star,
                TokenKind::Punct('+') => RepeatKind::Plus,
                TokenKind::Punct('?') => RepeatKind::Optional,
                _ => return Ok(e),
            };
            self.cur.next();
            e = Expr::repeat(e, kind);
            self.map.insert(e.id, self.span_from(start));
        }
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        let start = self.cur.index();
        let e = match self.cur.kind().clone() {
            TokenKind::Ident(name) => {
                self.cur.next();
                if self.cur.at_punct('<') {
                    let args = self.raw_args()?;
                    Expr::new(ExprKind::Instance(TemplateCall { template: name, args }))
                } else {
                    Expr::new(ExprKind::SymbolRef(name))
                }
            }
            TokenKind::Quoted(text) => {
                if text.is_empty() {
                    return Err(self.cur.error_here("empty literal"));
                }
                self.cur.next();
                Expr::new(ExprKind::Literal(text))
            }
            TokenKind::Punct('[') => {
                self.cur.next();
                let items = self.class_items()?;
                Expr::new(ExprKind::CharClass(items))
            }
            TokenKind::Punct('(') => {
                self.cur.next();
                if self.cur.eat_punct(')') {
                    Expr::empty()
                } else {
                    let inner = self.alternative()?;
                    self.cur.expect_punct(')')?;
                    // grouping does not create a node of its own
                    return Ok(inner);
                }
            }
            TokenKind::Punct('$') if self.placeholders => {
                self.cur.next();
                let (name, _) = self.cur.expect_ident()?;
                Expr::new(ExprKind::Placeholder(name))
            }
            _ => return Err(self.cur.unexpected(&["expression"])),
        };
        self.map.insert(e.id, self.span_from(start));
        Ok(e)
    }

    fn class_items(&mut self) -> Result<Vec<ClassItem>, SyntaxError> {
        let mut items = Vec::new();
        while !self.cur.eat_punct(']') {
            let lo = self.class_char()?;
            if self.cur.eat(&TokenKind::DashDash) {
                let hi_span = self.cur.peek().span.clone();
                let hi = self.class_char()?;
                if lo > hi {
                    return Err(SyntaxError::new(hi_span, format!("empty range `{}`--`{}`", lo.escape_debug(), hi.escape_debug())));
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
        match self.cur.kind().clone() {
            TokenKind::Quoted(s) => {
                let mut chars = s.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => {
                        self.cur.next();
                        Ok(c)
                    }
                    _ => Err(self.cur.error_here("character class members must be single characters")),
                }
            }
            _ => Err(self.cur.unexpected(&["quoted character", "`]`"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::structural_equals;

    pub(crate) const PAPER_GRAMMAR: &str = "
        const : ID '=' sum ';' ;
        varDecl : type ID ('=' sum)? ';' ;
        type : ID;
        sum : mult ('+' mult)* ;
        mult : factor ('*' factor)* ;
        factor : NUM || ID || '(' sum ')' ;
        ALPHA : ['a'--'z' 'A'--'Z' '_'] ;
        ID : ALPHA (ALPHA | ['0'--'9'])* ;
        NUM : ['0'--'9']+ ;
    ";

    #[test]
    fn parses_the_expression_grammar() {
        let unit = parse_grammar(PAPER_GRAMMAR, "expr.gr").unwrap();
        assert_eq!(unit.rules.len(), 9);
        assert!(unit.imports.is_empty() && unit.templates.is_empty());
        let counts: Vec<_> = unit.rules.iter().map(|s| s.productions.len()).collect();
        assert_eq!(counts, [1, 1, 1, 1, 1, 3, 1, 1, 1]);
    }

    #[test]
    fn both_rule_separators_are_equivalent() {
        let a = parse_grammar("sum : mult ('+' mult)* ;", "a").unwrap();
        let b = parse_grammar("sum --> mult ('+' mult)* ;", "b").unwrap();
        assert!(structural_equals(&a.rules[0].productions[0].body, &b.rules[0].productions[0].body));
    }

    #[test]
    fn empty_text_is_an_empty_unit() {
        let u = parse_grammar("", "e").unwrap();
        assert!(u.rules.is_empty() && u.imports.is_empty() && u.templates.is_empty());
    }

    #[test]
    fn duplicate_rules_are_rejected() {
        let err = parse_grammar("a : 'x' ;\na : 'y' ;", "d.gr").unwrap_err();
        assert_eq!(err.span.start.line, 2);
    }

    #[test]
    fn syntax_errors_carry_expected_tokens() {
        let err = parse_grammar("a 'x' ;", "e.gr").unwrap_err();
        assert!(err.expected.iter().any(|e| e.contains(':')));
        assert_eq!((err.span.start.line, err.span.start.col), (1, 3));
    }

    #[test]
    fn char_class_ranges_are_checked() {
        assert!(parse_grammar("a : ['z'--'a'] ;", "c").is_err());
        assert!(parse_grammar("a : ['ab'] ;", "c").is_err());
        assert!(parse_grammar("a : [] ;", "c").is_err());
    }

    #[test]
    fn empty_production_is_the_empty_sequence() {
        let u = parse_grammar("a : || 'x' ;", "e").unwrap();
        assert!(u.rules[0].productions[0].body.is_empty_sequence());
    }

    #[test]
    fn keywords_are_contextual() {
        let u = parse_grammar("import : Symbol Expression ID ; Symbol : 'x' ;", "k").unwrap();
        assert_eq!(u.rules[0].name, "import");
        assert_eq!(u.rules[1].name, "Symbol");
    }

    #[test]
    fn templates_and_imports() {
        let src = "
            Symbol binaryOperation<ID $name, Expression $sign, Expression $argument> {
                $name --> $argument ($sign $argument)*;
            }
            import binaryOperation<Product, '*' | '/', Factor>;
            import lib;
        ";
        let u = parse_grammar(src, "t.gr").unwrap();
        assert_eq!(u.templates.len(), 1);
        assert_eq!(u.templates[0].params.len(), 3);
        assert_eq!(u.imports.len(), 2);
        match &u.imports[0].target {
            ImportTarget::Instance(call) => {
                let texts: Vec<_> = call.args.iter().map(|a| a.text.as_str()).collect();
                assert_eq!(texts, ["Product", "'*' | '/'", "Factor"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn placeholders_outside_templates_are_errors() {
        assert!(parse_grammar("a : $x ;", "p").is_err());
    }
}
