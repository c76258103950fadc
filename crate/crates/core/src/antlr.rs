//! ANTLR 3 back end: one rule per symbol, with parameters, return values,
//! semantic actions and syntactic predicates taken from metadata.
//!
//! Recognized attributes:
//!
//! | node        | attribute   | value                                   |
//! |-------------|-------------|-----------------------------------------|
//! | grammar     | `antlrName` | ID or STRING                            |
//! | grammar     | `antlrHeader` | STRING, emitted as `@header`          |
//! | symbol      | `returns`   | ID or STRING: type of `result`          |
//! | symbol      | `params`    | SEQUENCE of `{ type = T; name = n; }`   |
//! | production  | `predicate` | STRING                                  |
//! | production  | `before`, `after` | STRING action                     |
//! | expression  | `after`     | STRING action                           |
//! | reference   | `arguments` | SEQUENCE of ID                          |
//!
//! In actions `##result` becomes the result variable and `#sym` the label of
//! an occurrence of `sym`: the annotated occurrence itself, or the only
//! occurrence of `sym` in the production.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write;

use thiserror::Error;

use crate::metadata::{AnnotationStore, AttributeValue, SeqElement};
use crate::model::{ClassItem, Expr, ExprKind, Grammar, NodeId, NodeRef, Production, Symbol};
use crate::span::SourceSpan;
use crate::syntax::printer::quote;

/// How occurrence labels are formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OccurrenceNaming {
    /// `<rule><k>`, with `k` counting occurrences of that rule in the
    /// production from 0.
    #[default]
    RuleOrdinal,
}

#[derive(Clone, Debug, Default)]
pub struct AntlrGenConfig {
    /// Overrides the `antlrName` attribute and the file name.
    pub grammar_name: Option<String>,
    /// Overrides the `antlrHeader` attribute.
    pub header_action: Option<String>,
    pub occurrence_naming: OccurrenceNaming,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenWarning {
    pub span: Option<SourceSpan>,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub text: String,
    pub warnings: Vec<GenWarning>,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GenError {
    #[error("attribute `{attribute}` on {node} must be {expected}, found {found}")]
    AttributeKind { attribute: String, node: String, expected: &'static str, found: String, span: Option<SourceSpan> },
    #[error("attribute `{attribute}` is not allowed on {node}")]
    Misplaced { attribute: String, node: String, span: Option<SourceSpan> },
    #[error("action on {node}: {message}")]
    Action { node: String, message: String, span: Option<SourceSpan> },
    #[error("{message}")]
    Naming { message: String, span: Option<SourceSpan> },
    #[error("{message}")]
    Builder { message: String, span: Option<SourceSpan> },
}

impl GenError {
    pub fn span(&self) -> Option<&SourceSpan> {
        match self {
            GenError::AttributeKind { span, .. }
            | GenError::Misplaced { span, .. }
            | GenError::Action { span, .. }
            | GenError::Naming { span, .. }
            | GenError::Builder { span, .. } => span.as_ref(),
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ActionError {
    #[error("`#{0}` does not name an occurrence in scope")]
    Unresolved(String),
    #[error("`##{0}` is not defined; only `##result` is")]
    UnknownSpecial(String),
}

fn ident_at(chars: &[char], i: usize) -> Option<String> {
    let first = *chars.get(i)?;
    if !(first.is_ascii_alphabetic() || first == '_') {
        return None;
    }
    Some(chars[i..].iter().take_while(|c| c.is_ascii_alphanumeric() || **c == '_').collect())
}

/// Names referenced as `#name` in an action, in order of appearance.
pub fn action_references(body: &str) -> Vec<String> {
    let chars: Vec<char> = body.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '#' {
            if chars.get(i + 1) == Some(&'#') {
                i += 2;
                continue;
            }
            if let Some(name) = ident_at(&chars, i + 1) {
                i += 1 + name.chars().count();
                out.push(name);
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Replaces `##result` with `result_var` and every `#name` with
/// `scope[name]`. Everything else is copied unchanged.
pub fn substitute_action(body: &str, scope: &BTreeMap<String, String>, result_var: &str) -> Result<String, ActionError> {
    let chars: Vec<char> = body.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '#' {
            if chars.get(i + 1) == Some(&'#') {
                if let Some(name) = ident_at(&chars, i + 2) {
                    if name != "result" {
                        return Err(ActionError::UnknownSpecial(name));
                    }
                    out.push_str(result_var);
                    i += 2 + name.chars().count();
                    continue;
                }
            } else if let Some(name) = ident_at(&chars, i + 1) {
                let Some(label) = scope.get(&name) else {
                    return Err(ActionError::Unresolved(name));
                };
                out.push_str(label);
                i += 1 + name.chars().count();
                continue;
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    Ok(out)
}

/// ANTLR rule names for every symbol: lexer rules start with an uppercase
/// letter, parser rules with a lowercase one.
pub(crate) fn rule_names(grammar: &Grammar, lexical: &HashSet<String>) -> Result<HashMap<String, String>, GenError> {
    let mut names = HashMap::new();
    let mut taken: HashMap<String, String> = HashMap::new();
    for sym in &grammar.symbols {
        let mut chars = sym.name.chars();
        let first = chars.next().unwrap_or('_');
        let span = grammar.span(sym.id).cloned();
        if !first.is_ascii_alphabetic() {
            return Err(GenError::Naming {
                message: format!("symbol `{}` must start with a letter to become an ANTLR rule", sym.name),
                span,
            });
        }
        let first = if lexical.contains(&sym.name) { first.to_ascii_uppercase() } else { first.to_ascii_lowercase() };
        let name: String = std::iter::once(first).chain(chars).collect();
        if let Some(other) = taken.insert(name.clone(), sym.name.clone()) {
            return Err(GenError::Naming {
                message: format!("symbols `{other}` and `{}` both become ANTLR rule `{name}`", sym.name),
                span,
            });
        }
        names.insert(sym.name.clone(), name);
    }
    Ok(names)
}

/// Lexical symbols referenced from lexical symbols only.
pub(crate) fn fragments(grammar: &Grammar, lexical: &HashSet<String>) -> HashSet<String> {
    let mut from_lexical = HashSet::new();
    let mut from_parser = HashSet::new();
    for sym in &grammar.symbols {
        let bucket = if lexical.contains(&sym.name) { &mut from_lexical } else { &mut from_parser };
        for p in &sym.productions {
            for r in p.body.referenced_symbols() {
                bucket.insert(r.to_string());
            }
        }
    }
    lexical
        .iter()
        .filter(|n| from_lexical.contains(*n) && !from_parser.contains(*n))
        .cloned()
        .collect()
}

fn class_item(i: &ClassItem) -> String {
    match i {
        ClassItem::Char(c) => quote(&c.to_string()),
        ClassItem::Range(a, b) => format!("{}..{}", quote(&a.to_string()), quote(&b.to_string())),
    }
}

/// Per-node decorations added while rendering an expression.
#[derive(Default)]
pub(crate) struct Decor {
    /// Rule to call instead of the referenced symbol's rule.
    pub callee: HashMap<NodeId, String>,
    pub labels: HashMap<NodeId, String>,
    pub args: HashMap<NodeId, String>,
    pub after: HashMap<NodeId, String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Ctx {
    Body,
    Branch,
    Item,
    Operand,
}

pub(crate) fn render(out: &mut String, e: &Expr, ctx: Ctx, names: &HashMap<String, String>, d: &Decor) {
    if let Some(act) = d.after.get(&e.id) {
        let paren = ctx == Ctx::Operand;
        if paren {
            out.push('(');
        }
        render_plain(out, e, if ctx == Ctx::Operand { Ctx::Item } else { ctx }, names, d);
        let _ = write!(out, " {{{act}}}");
        if paren {
            out.push(')');
        }
    } else {
        render_plain(out, e, ctx, names, d);
    }
}

fn render_plain(out: &mut String, e: &Expr, ctx: Ctx, names: &HashMap<String, String>, d: &Decor) {
    match &e.kind {
        ExprKind::Sequence(items) if items.is_empty() => {
            if ctx != Ctx::Body && ctx != Ctx::Branch {
                out.push_str("()");
            }
        }
        ExprKind::Sequence(items) => {
            let paren = matches!(ctx, Ctx::Item | Ctx::Operand);
            if paren {
                out.push('(');
            }
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                render(out, item, Ctx::Item, names, d);
            }
            if paren {
                out.push(')');
            }
        }
        ExprKind::Alternative(branches) => {
            out.push('(');
            for (i, b) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                render(out, b, Ctx::Branch, names, d);
            }
            out.push(')');
        }
        ExprKind::Iteration(inner, kind) => {
            let paren = ctx == Ctx::Operand;
            if paren {
                out.push('(');
            }
            render(out, inner, Ctx::Operand, names, d);
            out.push(kind.suffix());
            if paren {
                out.push(')');
            }
        }
        ExprKind::SymbolRef(name) => {
            if let Some(l) = d.labels.get(&e.id) {
                let _ = write!(out, "{l}=");
            }
            let callee = d.callee.get(&e.id).or_else(|| names.get(name)).map_or(name.as_str(), |s| s.as_str());
            out.push_str(callee);
            if let Some(a) = d.args.get(&e.id) {
                let _ = write!(out, "[{a}]");
            }
        }
        ExprKind::Literal(t) => out.push_str(&quote(t)),
        ExprKind::CharClass(items) => {
            if items.len() == 1 {
                out.push_str(&class_item(&items[0]));
            } else {
                let parts: Vec<String> = items.iter().map(class_item).collect();
                let _ = write!(out, "({})", parts.join(" | "));
            }
        }
        ExprKind::Placeholder(_) | ExprKind::Instance(_) => unreachable!("resolved grammars contain no template syntax"),
    }
}

/// Occurrences of each referenced symbol in a production, left to right.
pub(crate) fn occurrences(body: &Expr) -> Vec<(NodeId, String)> {
    let mut out = Vec::new();
    body.visit(&mut |e| {
        if let ExprKind::SymbolRef(n) = &e.kind {
            out.push((e.id, n.clone()));
        }
    });
    out
}

fn describe(grammar: &Grammar, id: NodeId) -> String {
    crate::aspect::describe_node(grammar, id)
}

fn expect_str<'a>(
    grammar: &Grammar,
    node: NodeId,
    attribute: &str,
    value: &'a AttributeValue,
) -> Result<&'a str, GenError> {
    value.as_str().ok_or_else(|| GenError::AttributeKind {
        attribute: attribute.to_string(),
        node: describe(grammar, node),
        expected: "a STRING",
        found: value.type_name().to_string(),
        span: grammar.span(node).cloned(),
    })
}

fn kind_error(grammar: &Grammar, node: NodeId, attribute: &str, expected: &'static str, found: String) -> GenError {
    GenError::AttributeKind {
        attribute: attribute.to_string(),
        node: describe(grammar, node),
        expected,
        found,
        span: grammar.span(node).cloned(),
    }
}

fn type_text(grammar: &Grammar, node: NodeId, attribute: &str, v: &AttributeValue) -> Result<String, GenError> {
    match v {
        AttributeValue::Id(s) | AttributeValue::Str(s) => Ok(s.clone()),
        other => Err(kind_error(grammar, node, attribute, "an ID", other.type_name().to_string())),
    }
}

fn params_text(grammar: &Grammar, node: NodeId, v: &AttributeValue) -> Result<String, GenError> {
    let bad = |found: String| kind_error(grammar, node, "params", "a SEQUENCE of { type = T; name = n; } tuples", found);
    let Some(items) = v.as_seq() else { return Err(bad(v.type_name().to_string())) };
    let mut parts = Vec::new();
    for item in items {
        match item {
            SeqElement::Tuple(fields) => {
                let t = AttributeValue::Tuple(fields.clone());
                let (Some(ty), Some(name)) = (t.field("type"), t.field("name")) else {
                    return Err(bad("a tuple without `type` and `name`".into()));
                };
                let ty = type_text(grammar, node, "params", ty)?;
                let name = type_text(grammar, node, "params", name)?;
                parts.push(format!("{ty} {name}"));
            }
            SeqElement::Punct(',' | ';') => {}
            other => return Err(bad(format!("`{other}`"))),
        }
    }
    Ok(parts.join(", "))
}

fn arguments_text(grammar: &Grammar, node: NodeId, v: &AttributeValue) -> Result<String, GenError> {
    let bad = |found: String| kind_error(grammar, node, "arguments", "a SEQUENCE of IDs", found);
    let Some(items) = v.as_seq() else { return Err(bad(v.type_name().to_string())) };
    let mut parts = Vec::new();
    for item in items {
        match item {
            SeqElement::Ident(s) => parts.push(s.clone()),
            SeqElement::Num(n) => parts.push(n.to_string()),
            SeqElement::Punct(',') => {}
            other => return Err(bad(format!("`{other}`"))),
        }
    }
    Ok(parts.join(", "))
}

const KNOWN: &[(&str, &[&str])] = &[
    ("grammar", &["antlrName", "antlrHeader"]),
    ("symbol", &["returns", "params"]),
    ("production", &["predicate", "before", "after"]),
    ("expr", &["after"]),
    ("ref", &["after", "arguments"]),
];

/// Checks every attribute in `store` against the schema above. Unknown
/// attributes become warnings; misplaced or mistyped known ones are errors.
fn validate(grammar: &Grammar, store: &AnnotationStore, warnings: &mut Vec<GenWarning>) -> Result<(), GenError> {
    let index = grammar.index();
    let all_known: HashSet<&str> = KNOWN.iter().flat_map(|(_, a)| a.iter().copied()).collect();
    for (id, ann) in store.iter() {
        let place = match index.get(&id) {
            Some(NodeRef::Grammar(_)) => "grammar",
            Some(NodeRef::Symbol(_)) => "symbol",
            Some(NodeRef::Production(..)) => "production",
            Some(NodeRef::Expr(e)) if matches!(e.kind, ExprKind::SymbolRef(_)) => "ref",
            Some(NodeRef::Expr(_)) => "expr",
            None => continue,
        };
        let allowed = KNOWN.iter().find(|(p, _)| *p == place).map(|(_, a)| *a).unwrap_or(&[]);
        for (name, value) in &ann.attributes {
            if allowed.contains(&name.as_str()) {
                match name.as_str() {
                    "antlrName" | "returns" => {
                        type_text(grammar, id, name, value)?;
                    }
                    "antlrHeader" | "predicate" | "before" | "after" => {
                        expect_str(grammar, id, name, value)?;
                    }
                    "params" => {
                        params_text(grammar, id, value)?;
                    }
                    "arguments" => {
                        arguments_text(grammar, id, value)?;
                    }
                    _ => {}
                }
            } else if all_known.contains(name.as_str()) {
                return Err(GenError::Misplaced {
                    attribute: name.clone(),
                    node: describe(grammar, id),
                    span: store.origin(id, name).map(|o| o.location.clone()).and(grammar.span(id).cloned()),
                });
            } else {
                warnings.push(GenWarning {
                    span: grammar.span(id).cloned(),
                    message: format!("attribute `{name}` on {} is ignored by the ANTLR back end", describe(grammar, id)),
                });
            }
        }
    }
    Ok(())
}

fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// `grammar` name: configuration, then the `antlrName` attribute, then the
/// capitalized file stem.
pub(crate) fn grammar_name(grammar: &Grammar, store: &AnnotationStore, configured: Option<&str>) -> Result<String, GenError> {
    let name = match configured {
        Some(n) => n.to_string(),
        None => match store.lookup(grammar.id, "antlrName") {
            Some(v) => type_text(grammar, grammar.id, "antlrName", v)?,
            None => {
                let stem = crate::syntax::unit_name_of(&grammar.origin);
                let clean: String = stem.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
                let mut chars = clean.chars();
                match chars.next() {
                    Some(c) if c.is_ascii_alphabetic() => c.to_ascii_uppercase().to_string() + chars.as_str(),
                    _ => format!("G{clean}"),
                }
            }
        },
    };
    if !valid_identifier(&name) {
        return Err(GenError::Naming { message: format!("`{name}` is not a valid ANTLR grammar name"), span: None });
    }
    Ok(name)
}

pub(crate) fn header(grammar: &Grammar, store: &AnnotationStore, configured: Option<&str>) -> Result<Option<String>, GenError> {
    if let Some(h) = configured {
        return Ok(Some(h.to_string()));
    }
    match store.lookup(grammar.id, "antlrHeader") {
        Some(v) => Ok(Some(expect_str(grammar, grammar.id, "antlrHeader", v)?.to_string())),
        None => Ok(None),
    }
}

pub(crate) fn write_prelude(out: &mut String, name: &str, header: Option<&str>) {
    let _ = writeln!(out, "grammar {name};");
    if let Some(h) = header {
        let _ = writeln!(out, "\n@header {{\n{}\n}}", h.trim_end());
    }
}

/// Writes `alts` as the alternatives of one rule whose header line is
/// `head` (which may span several lines).
pub(crate) fn write_rule(out: &mut String, head: &str, alts: &[String]) {
    let _ = writeln!(out, "\n{head}");
    for (i, a) in alts.iter().enumerate() {
        let sep = if i == 0 { ':' } else { '|' };
        if a.is_empty() {
            let _ = writeln!(out, "    {sep}");
        } else {
            let _ = writeln!(out, "    {sep} {a}");
        }
    }
    out.push_str("    ;\n");
}

/// Generates ANTLR grammar text for `grammar` decorated with `store`.
pub fn generate(grammar: &Grammar, store: &AnnotationStore, config: &AntlrGenConfig) -> Result<Generated, GenError> {
    let mut warnings = Vec::new();
    validate(grammar, store, &mut warnings)?;
    let lexical = grammar.lexical_symbols();
    let names = rule_names(grammar, &lexical)?;
    let fragments = fragments(grammar, &lexical);
    let name = grammar_name(grammar, store, config.grammar_name.as_deref())?;
    let header = header(grammar, store, config.header_action.as_deref())?;

    let mut out = String::new();
    write_prelude(&mut out, &name, header.as_deref());
    for sym in &grammar.symbols {
        let mut head = String::new();
        if fragments.contains(&sym.name) {
            head.push_str("fragment ");
        }
        head.push_str(&names[&sym.name]);
        let returns = match store.lookup(sym.id, "returns") {
            Some(v) => Some(type_text(grammar, sym.id, "returns", v)?),
            None => None,
        };
        if let Some(p) = store.lookup(sym.id, "params") {
            let _ = write!(head, " [{}]", params_text(grammar, sym.id, p)?);
        }
        if let Some(t) = &returns {
            let _ = write!(head, " returns [{t} result]");
        }
        let mut alts = Vec::new();
        for prod in &sym.productions {
            alts.push(production(grammar, store, &names, sym, prod, returns.is_some())?);
        }
        write_rule(&mut out, &head, &alts);
    }
    Ok(Generated { text: out, warnings })
}

fn production(
    grammar: &Grammar,
    store: &AnnotationStore,
    names: &HashMap<String, String>,
    sym: &Symbol,
    prod: &Production,
    has_result: bool,
) -> Result<String, GenError> {
    let occs = occurrences(&prod.body);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut label_of: HashMap<NodeId, String> = HashMap::new();
    for (id, n) in &occs {
        let k = counts.entry(n.as_str()).or_default();
        label_of.insert(*id, format!("{}{k}", names.get(n).map_or(n.as_str(), |s| s.as_str())));
        *k += 1;
    }
    let unique: BTreeMap<String, NodeId> = occs
        .iter()
        .filter(|(_, n)| counts[n.as_str()] == 1)
        .map(|(id, n)| (n.clone(), *id))
        .collect();

    // every action with the occurrence it is attached to, if any
    let mut actions: Vec<(NodeId, Option<(NodeId, &str)>, &str)> = Vec::new();
    for attr in ["before", "after"] {
        if let Some(v) = store.lookup(prod.id, attr) {
            actions.push((prod.id, None, expect_str(grammar, prod.id, attr, v)?));
        }
    }
    let mut expr_after: Vec<(NodeId, &str)> = Vec::new();
    prod.body.visit(&mut |e| {
        if let Some(AttributeValue::Str(s)) = store.lookup(e.id, "after") {
            expr_after.push((e.id, s.as_str()));
        }
    });
    let by_id: HashMap<NodeId, &str> = occs.iter().map(|(id, n)| (*id, n.as_str())).collect();
    for (id, body) in &expr_after {
        let own = by_id.get(id).map(|n| (*id, *n));
        actions.push((*id, own, body));
    }

    let mut used: HashSet<NodeId> = HashSet::new();
    let mut rendered: HashMap<NodeId, String> = HashMap::new();
    let mut before = None;
    let mut after = None;
    for (node, own, body) in &actions {
        let mut scope = BTreeMap::new();
        for name in action_references(body) {
            let target = match own {
                Some((id, n)) if *n == name => Some(*id),
                _ => unique.get(&name).copied(),
            };
            match target {
                Some(id) => {
                    used.insert(id);
                    scope.insert(name, label_of[&id].clone());
                }
                None => {
                    let why = if counts.contains_key(name.as_str()) {
                        format!("`#{name}` is ambiguous: `{name}` occurs {} times in this production", counts[name.as_str()])
                    } else {
                        format!("`#{name}` does not name a symbol of this production")
                    };
                    return Err(action_error(grammar, *node, why));
                }
            }
        }
        if !has_result && body.contains("##result") {
            return Err(action_error(grammar, *node, format!("`##result` used but `{}` has no `returns`", sym.name)));
        }
        let text = substitute_action(body, &scope, "result")
            .map_err(|e| action_error(grammar, *node, e.to_string()))?;
        if *node == prod.id {
            if before.is_none() && store.lookup(prod.id, "before").and_then(AttributeValue::as_str) == Some(*body) {
                before = Some(text);
            } else {
                after = Some(text);
            }
        } else {
            rendered.insert(*node, text);
        }
    }

    let mut decor = Decor { after: rendered, ..Decor::default() };
    for id in used {
        decor.labels.insert(id, label_of[&id].clone());
    }
    for (id, _) in &occs {
        if let Some(v) = store.lookup(*id, "arguments") {
            decor.args.insert(*id, arguments_text(grammar, *id, v)?);
        }
    }

    let mut parts: Vec<String> = Vec::new();
    if let Some(v) = store.lookup(prod.id, "predicate") {
        parts.push(format!("({})=>", expect_str(grammar, prod.id, "predicate", v)?));
    }
    if let Some(b) = before {
        parts.push(format!("{{{b}}}"));
    }
    let mut body = String::new();
    render(&mut body, &prod.body, Ctx::Body, names, &decor);
    if !body.is_empty() {
        parts.push(body);
    }
    if let Some(a) = after {
        parts.push(format!("{{{a}}}"));
    }
    Ok(parts.join(" "))
}

fn action_error(grammar: &Grammar, node: NodeId, message: String) -> GenError {
    GenError::Action { node: describe(grammar, node), message, span: grammar.span(node).cloned() }
}
