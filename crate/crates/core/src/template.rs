//! Grammar templates and import resolution.
//!
//! A template is a grammar fragment with typed placeholders. Importing an
//! instantiation inserts its rules into the importing unit; a plain import
//! inserts all rules of another unit. [`resolve`] flattens a unit and
//! everything it imports into one [`Grammar`].

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use crate::model::{
    structural_equals, Expr, ExprKind, Grammar, NodeId, Production, RawArg, SourceMap, Symbol, TemplateCall,
};
use crate::span::SourceSpan;
use crate::syntax::{self, ParsedUnit, SyntaxError};

/// What an instantiation produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TemplateKind {
    /// One or more rules, inserted by `import`.
    Symbol,
    /// Same as `Symbol`; accepted for fragments with several rules.
    Grammar,
    /// An expression, used inline where an expression may appear.
    Expression,
    /// One or more productions, used inline as a whole production.
    Production,
}

impl TemplateKind {
    pub fn keyword(self) -> &'static str {
        match self {
            TemplateKind::Symbol => "Symbol",
            TemplateKind::Grammar => "Grammar",
            TemplateKind::Expression => "Expression",
            TemplateKind::Production => "Production",
        }
    }

    pub fn from_keyword(word: &str) -> Option<TemplateKind> {
        Some(match word {
            "Symbol" => TemplateKind::Symbol,
            "Grammar" => TemplateKind::Grammar,
            "Expression" => TemplateKind::Expression,
            "Production" => TemplateKind::Production,
            _ => return None,
        })
    }
}

/// The role a placeholder plays.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    /// A fresh name: usable as a rule name or as a reference.
    Id,
    /// The name of a symbol that must exist after resolution.
    Symbol,
    Expression,
    /// Whole productions. `many` is the `Production*` form.
    Production { many: bool },
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamKind::Id => "ID",
            ParamKind::Symbol => "Symbol",
            ParamKind::Expression => "Expression",
            ParamKind::Production { many: false } => "Production",
            ParamKind::Production { many: true } => "Production*",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateParam {
    pub kind: ParamKind,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleName {
    Fixed(String),
    Placeholder(String),
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleName::Fixed(n) => f.write_str(n),
            RuleName::Placeholder(n) => write!(f, "${n}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TemplateRule {
    pub id: NodeId,
    pub name: RuleName,
    pub productions: Vec<Production>,
}

#[derive(Clone, Debug)]
pub enum TemplateBody {
    Rules(Vec<TemplateRule>),
    Expr(Expr),
    Productions(Vec<Production>),
}

#[derive(Clone, Debug)]
pub struct TemplateDef {
    pub name: String,
    pub kind: TemplateKind,
    pub params: Vec<TemplateParam>,
    pub body: TemplateBody,
    pub span: SourceSpan,
    /// Spans of the body nodes.
    pub source_map: SourceMap,
}

#[derive(Clone, Debug)]
pub enum ImportTarget {
    Unit(String),
    Instance(TemplateCall),
}

#[derive(Clone, Debug)]
pub struct ImportDecl {
    pub target: ImportTarget,
    pub span: SourceSpan,
}

impl ImportDecl {
    pub fn structurally_equals(&self, other: &ImportDecl) -> bool {
        match (&self.target, &other.target) {
            (ImportTarget::Unit(a), ImportTarget::Unit(b)) => a == b,
            (ImportTarget::Instance(a), ImportTarget::Instance(b)) => {
                structural_equals(&Expr::new(ExprKind::Instance(a.clone())), &Expr::new(ExprKind::Instance(b.clone())))
            }
            _ => false,
        }
    }
}

/// An argument after it has been parsed according to its parameter kind.
#[derive(Clone, Debug)]
pub enum TemplateArg {
    Id(String),
    Symbol(String),
    Expression(Expr),
    Productions(Vec<Production>),
}

impl TemplateArg {
    fn kind_name(&self) -> &'static str {
        match self {
            TemplateArg::Id(_) => "ID",
            TemplateArg::Symbol(_) => "Symbol",
            TemplateArg::Expression(_) => "Expression",
            TemplateArg::Productions(_) => "Production",
        }
    }

    fn fits(&self, kind: ParamKind) -> bool {
        match (self, kind) {
            (TemplateArg::Id(_), ParamKind::Id) | (TemplateArg::Symbol(_), ParamKind::Symbol) => true,
            (TemplateArg::Expression(_), ParamKind::Expression) => true,
            (TemplateArg::Productions(p), ParamKind::Production { many }) => many || p.len() == 1,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, Error)]
pub enum TemplateError {
    #[error("template `{template}` has no parameter `${name}`")]
    UnknownPlaceholder { template: String, name: String, span: SourceSpan },
    #[error("placeholder `${name}` is declared twice in template `{template}`")]
    DuplicateParam { template: String, name: String, span: SourceSpan },
    #[error("placeholder `${name}` of kind {kind} cannot be used {position}")]
    Misplaced { name: String, kind: ParamKind, position: &'static str, span: SourceSpan },
    #[error("template `{template}` expects {expected} argument(s), got {found}")]
    Arity { template: String, expected: usize, found: usize, span: SourceSpan },
    #[error("argument {index} of `{template}` must be {expected}, got {found}")]
    ArgKind { template: String, index: usize, expected: ParamKind, found: &'static str, span: SourceSpan },
    #[error("instantiating `{template}` defines `{name}` twice")]
    Collision { template: String, name: String, span: SourceSpan },
    #[error("template `{template}` of kind {kind} cannot be used {position}")]
    WrongUse { template: String, kind: &'static str, position: &'static str, span: SourceSpan },
    #[error("unknown template `{name}`")]
    UnknownTemplate { name: String, span: SourceSpan },
    #[error("template expansion is nested too deeply (through `{template}`)")]
    TooDeep { template: String, span: SourceSpan },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

impl TemplateError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            TemplateError::UnknownPlaceholder { span, .. }
            | TemplateError::DuplicateParam { span, .. }
            | TemplateError::Misplaced { span, .. }
            | TemplateError::Arity { span, .. }
            | TemplateError::ArgKind { span, .. }
            | TemplateError::Collision { span, .. }
            | TemplateError::WrongUse { span, .. }
            | TemplateError::UnknownTemplate { span, .. }
            | TemplateError::TooDeep { span, .. } => span,
            TemplateError::Syntax(e) => &e.span,
        }
    }
}

impl TemplateDef {
    pub fn param(&self, name: &str) -> Option<&TemplateParam> {
        self.params.iter().find(|p| p.name == name)
    }

    fn span_of(&self, id: NodeId) -> SourceSpan {
        self.source_map.get(id).cloned().unwrap_or_else(|| self.span.clone())
    }

    /// Checks that placeholders are declared once and only used where their
    /// kind allows.
    pub fn validate(&self) -> Result<(), TemplateError> {
        let mut seen = HashSet::new();
        for p in &self.params {
            if !seen.insert(p.name.as_str()) {
                return Err(TemplateError::DuplicateParam {
                    template: self.name.clone(),
                    name: p.name.clone(),
                    span: self.span.clone(),
                });
            }
        }
        match &self.body {
            TemplateBody::Rules(rules) => {
                for rule in rules {
                    if let RuleName::Placeholder(n) = &rule.name {
                        let kind = self.lookup_param(n, self.span_of(rule.id))?;
                        if !matches!(kind, ParamKind::Id | ParamKind::Symbol) {
                            return Err(TemplateError::Misplaced {
                                name: n.clone(),
                                kind,
                                position: "as a rule name",
                                span: self.span_of(rule.id),
                            });
                        }
                    }
                    self.validate_productions(&rule.productions)?;
                }
            }
            TemplateBody::Productions(prods) => self.validate_productions(prods)?,
            TemplateBody::Expr(e) => self.validate_expr(e)?,
        }
        Ok(())
    }

    fn lookup_param(&self, name: &str, span: SourceSpan) -> Result<ParamKind, TemplateError> {
        self.param(name).map(|p| p.kind).ok_or_else(|| TemplateError::UnknownPlaceholder {
            template: self.name.clone(),
            name: name.to_string(),
            span,
        })
    }

    fn validate_productions(&self, prods: &[Production]) -> Result<(), TemplateError> {
        for p in prods {
            if let ExprKind::Placeholder(n) = &p.body.kind {
                if let ParamKind::Production { .. } = self.lookup_param(n, self.span_of(p.body.id))? {
                    continue;
                }
            }
            self.validate_expr(&p.body)?;
        }
        Ok(())
    }

    fn validate_expr(&self, e: &Expr) -> Result<(), TemplateError> {
        let mut result = Ok(());
        e.visit(&mut |node| {
            if result.is_err() {
                return;
            }
            if let ExprKind::Placeholder(n) = &node.kind {
                result = self.lookup_param(n, self.span_of(node.id)).and_then(|kind| match kind {
                    ParamKind::Production { .. } => Err(TemplateError::Misplaced {
                        name: n.clone(),
                        kind,
                        position: "inside an expression; it must form a whole production",
                        span: self.span_of(node.id),
                    }),
                    _ => Ok(()),
                });
            }
        });
        result
    }

    pub fn structurally_equals(&self, other: &TemplateDef) -> bool {
        if self.name != other.name || self.kind != other.kind || self.params != other.params {
            return false;
        }
        let prods_eq = |a: &[Production], b: &[Production]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| structural_equals(&x.body, &y.body))
        };
        match (&self.body, &other.body) {
            (TemplateBody::Rules(a), TemplateBody::Rules(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| x.name == y.name && prods_eq(&x.productions, &y.productions))
            }
            (TemplateBody::Expr(a), TemplateBody::Expr(b)) => structural_equals(a, b),
            (TemplateBody::Productions(a), TemplateBody::Productions(b)) => prods_eq(a, b),
            _ => false,
        }
    }
}

/// Parses raw instantiation arguments according to the template signature.
pub fn parse_args(template: &TemplateDef, args: &[RawArg], site: &SourceSpan) -> Result<Vec<TemplateArg>, TemplateError> {
    if args.len() != template.params.len() {
        return Err(TemplateError::Arity {
            template: template.name.clone(),
            expected: template.params.len(),
            found: args.len(),
            span: site.clone(),
        });
    }
    let mut out = Vec::with_capacity(args.len());
    for (i, (param, raw)) in template.params.iter().zip(args).enumerate() {
        let arg = match param.kind {
            ParamKind::Id | ParamKind::Symbol => {
                let text = raw.text.trim();
                let is_ident = text.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                    && text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                if !is_ident {
                    return Err(TemplateError::ArgKind {
                        template: template.name.clone(),
                        index: i + 1,
                        expected: param.kind,
                        found: "a non-identifier",
                        span: raw.span.clone(),
                    });
                }
                if param.kind == ParamKind::Id {
                    TemplateArg::Id(text.to_string())
                } else {
                    TemplateArg::Symbol(text.to_string())
                }
            }
            ParamKind::Expression => {
                let (e, _) = syntax::parse_expression_text(&raw.text, &raw.span)?;
                TemplateArg::Expression(e)
            }
            ParamKind::Production { many } => {
                let (prods, _) = syntax::parse_production_list(&raw.text, &raw.span)?;
                if !many && prods.len() != 1 {
                    return Err(TemplateError::ArgKind {
                        template: template.name.clone(),
                        index: i + 1,
                        expected: param.kind,
                        found: "several productions",
                        span: raw.span.clone(),
                    });
                }
                TemplateArg::Productions(prods)
            }
        };
        out.push(arg);
    }
    Ok(out)
}

struct Substitution<'a> {
    template: &'a TemplateDef,
    args: HashMap<&'a str, &'a TemplateArg>,
    arg_spans: &'a SourceMap,
    site: SourceSpan,
    out_map: SourceMap,
}

impl Substitution<'_> {
    fn new<'a>(template: &'a TemplateDef, args: &'a [TemplateArg], arg_spans: &'a SourceMap, site: &SourceSpan) -> Result<Substitution<'a>, TemplateError> {
        if args.len() != template.params.len() {
            return Err(TemplateError::Arity {
                template: template.name.clone(),
                expected: template.params.len(),
                found: args.len(),
                span: site.clone(),
            });
        }
        let mut map = HashMap::new();
        for (i, (param, arg)) in template.params.iter().zip(args).enumerate() {
            if !arg.fits(param.kind) {
                return Err(TemplateError::ArgKind {
                    template: template.name.clone(),
                    index: i + 1,
                    expected: param.kind,
                    found: arg.kind_name(),
                    span: site.clone(),
                });
            }
            map.insert(param.name.as_str(), arg);
        }
        Ok(Substitution { template, args: map, arg_spans, site: site.clone(), out_map: SourceMap::default() })
    }

    fn note(&mut self, new: NodeId, old: NodeId, from_template: bool) {
        let span = if from_template { self.template.source_map.get(old) } else { self.arg_spans.get(old) };
        self.out_map.insert(new, span.cloned().unwrap_or_else(|| self.site.clone()));
    }

    /// Copies an argument subtree with fresh ids.
    fn copy_arg(&mut self, e: &Expr) -> Expr {
        let kind = match &e.kind {
            ExprKind::Sequence(c) => ExprKind::Sequence(c.iter().map(|c| self.copy_arg(c)).collect()),
            ExprKind::Alternative(c) => ExprKind::Alternative(c.iter().map(|c| self.copy_arg(c)).collect()),
            ExprKind::Iteration(c, k) => ExprKind::Iteration(Box::new(self.copy_arg(c)), *k),
            other => other.clone(),
        };
        let out = Expr::new(kind);
        self.note(out.id, e.id, false);
        out
    }

    fn expr(&mut self, e: &Expr) -> Expr {
        let kind = match &e.kind {
            ExprKind::Placeholder(name) => match self.args[name.as_str()] {
                TemplateArg::Id(s) | TemplateArg::Symbol(s) => ExprKind::SymbolRef(s.clone()),
                TemplateArg::Expression(x) => return self.copy_arg(x),
                // rejected by TemplateDef::validate
                TemplateArg::Productions(_) => unreachable!("production placeholder inside an expression"),
            },
            ExprKind::Sequence(c) => ExprKind::Sequence(c.iter().map(|c| self.expr(c)).collect()),
            ExprKind::Alternative(c) => ExprKind::Alternative(c.iter().map(|c| self.expr(c)).collect()),
            ExprKind::Iteration(c, k) => ExprKind::Iteration(Box::new(self.expr(c)), *k),
            other => other.clone(),
        };
        let out = Expr::new(kind);
        self.note(out.id, e.id, true);
        out
    }

    fn productions(&mut self, prods: &[Production]) -> Vec<Production> {
        let mut out = Vec::new();
        for p in prods {
            if let ExprKind::Placeholder(name) = &p.body.kind {
                if let TemplateArg::Productions(args) = self.args[name.as_str()] {
                    for arg in args {
                        let body = self.copy_arg(&arg.body);
                        let prod = Production::new(body);
                        let span = self.arg_spans.get(arg.id).cloned().unwrap_or_else(|| self.site.clone());
                        self.out_map.insert(prod.id, span);
                        out.push(prod);
                    }
                    continue;
                }
            }
            let body = self.expr(&p.body);
            let prod = Production::new(body);
            self.note(prod.id, p.id, true);
            out.push(prod);
        }
        out
    }

    fn rule_name(&self, name: &RuleName) -> String {
        match name {
            RuleName::Fixed(n) => n.clone(),
            RuleName::Placeholder(p) => match self.args[p.as_str()] {
                TemplateArg::Id(s) | TemplateArg::Symbol(s) => s.clone(),
                _ => unreachable!("rule-name placeholders are validated to be ID or Symbol"),
            },
        }
    }
}

/// Instantiates a rule-bodied template. Every node of the result is fresh.
pub fn instantiate(template: &TemplateDef, args: &[TemplateArg]) -> Result<Vec<Symbol>, TemplateError> {
    let site = template.span.clone();
    instantiate_at(template, args, &SourceMap::default(), &site).map(|(syms, _)| syms)
}

/// As [`instantiate`], also returning spans for the new nodes. Argument nodes
/// are looked up in `arg_spans`; anything else maps to `site`.
pub fn instantiate_at(
    template: &TemplateDef,
    args: &[TemplateArg],
    arg_spans: &SourceMap,
    site: &SourceSpan,
) -> Result<(Vec<Symbol>, SourceMap), TemplateError> {
    let TemplateBody::Rules(rules) = &template.body else {
        return Err(TemplateError::WrongUse {
            template: template.name.clone(),
            kind: template.kind.keyword(),
            position: "in an import",
            span: site.clone(),
        });
    };
    let mut sub = Substitution::new(template, args, arg_spans, site)?;
    let mut out: Vec<Symbol> = Vec::new();
    for rule in rules {
        let name = sub.rule_name(&rule.name);
        if out.iter().any(|s| s.name == name) {
            return Err(TemplateError::Collision { template: template.name.clone(), name, span: site.clone() });
        }
        let productions = sub.productions(&rule.productions);
        let sym = Symbol::new(&name, productions);
        sub.note(sym.id, rule.id, true);
        out.push(sym);
    }
    Ok((out, sub.out_map))
}

/// Instantiates an `Expression` template.
pub fn instantiate_expr(
    template: &TemplateDef,
    args: &[TemplateArg],
    arg_spans: &SourceMap,
    site: &SourceSpan,
) -> Result<(Expr, SourceMap), TemplateError> {
    let TemplateBody::Expr(body) = &template.body else {
        return Err(TemplateError::WrongUse {
            template: template.name.clone(),
            kind: template.kind.keyword(),
            position: "inside an expression",
            span: site.clone(),
        });
    };
    let mut sub = Substitution::new(template, args, arg_spans, site)?;
    let e = sub.expr(body);
    Ok((e, sub.out_map))
}

/// Instantiates a `Production` template.
pub fn instantiate_productions(
    template: &TemplateDef,
    args: &[TemplateArg],
    arg_spans: &SourceMap,
    site: &SourceSpan,
) -> Result<(Vec<Production>, SourceMap), TemplateError> {
    let TemplateBody::Productions(body) = &template.body else {
        return Err(TemplateError::WrongUse {
            template: template.name.clone(),
            kind: template.kind.keyword(),
            position: "as a production",
            span: site.clone(),
        });
    };
    let mut sub = Substitution::new(template, args, arg_spans, site)?;
    let prods = sub.productions(body);
    Ok((prods, sub.out_map))
}

#[derive(Clone, Debug, Error)]
pub enum LoadError {
    #[error("cannot find unit `{0}`")]
    NotFound(String),
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// Maps unit names to parsed units. Must be callable from several threads.
pub trait UnitLoader: Sync {
    /// Loads unit `name` as imported from the file `importer`.
    fn load(&self, name: &str, importer: &str) -> Result<ParsedUnit, LoadError>;
}

/// Looks for `<name>.gr` next to the importing file, then in each include
/// directory in order.
#[derive(Clone, Debug, Default)]
pub struct FsLoader {
    pub include: Vec<PathBuf>,
}

impl FsLoader {
    pub fn new(include: Vec<PathBuf>) -> Self {
        FsLoader { include }
    }
}

impl UnitLoader for FsLoader {
    fn load(&self, name: &str, importer: &str) -> Result<ParsedUnit, LoadError> {
        let file = format!("{name}.gr");
        let local = std::path::Path::new(importer).parent().map(|d| d.join(&file));
        let candidates = local.into_iter().chain(self.include.iter().map(|d| d.join(&file)));
        for path in candidates {
            if path.is_file() {
                let shown = path.display().to_string();
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| LoadError::Io { path: shown.clone(), message: e.to_string() })?;
                return Ok(syntax::parse_grammar(&text, &shown)?);
            }
        }
        Err(LoadError::NotFound(name.to_string()))
    }
}

/// Units held in memory, keyed by unit name. Handy for tests and embedding.
#[derive(Clone, Debug, Default)]
pub struct MemoryLoader {
    units: HashMap<String, String>,
}

impl MemoryLoader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, source: &str) -> Self {
        self.units.insert(name.to_string(), source.to_string());
        self
    }
}

impl UnitLoader for MemoryLoader {
    fn load(&self, name: &str, _importer: &str) -> Result<ParsedUnit, LoadError> {
        let src = self.units.get(name).ok_or_else(|| LoadError::NotFound(name.to_string()))?;
        Ok(syntax::parse_grammar(src, &format!("{name}.gr"))?)
    }
}

#[derive(Clone, Debug, Error)]
pub enum ResolveError {
    #[error("import cycle: {}", chain.join(" -> "))]
    Cycle { chain: Vec<String>, span: SourceSpan },
    #[error("unresolved symbol(s): {}", names.join(", "))]
    Unresolved { names: Vec<String>, span: SourceSpan },
    #[error("grammar defines no symbols")]
    NoSymbols { span: SourceSpan },
    #[error("symbol `{name}` is defined twice")]
    Duplicate { name: String, span: SourceSpan, first: Option<SourceSpan> },
    #[error("{source}")]
    Load { source: LoadError, span: SourceSpan },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

impl ResolveError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            ResolveError::Cycle { span, .. }
            | ResolveError::Unresolved { span, .. }
            | ResolveError::NoSymbols { span }
            | ResolveError::Duplicate { span, .. }
            | ResolveError::Load { span, .. } => span,
            ResolveError::Template(e) => e.span(),
        }
    }
}

impl From<SyntaxError> for ResolveError {
    fn from(e: SyntaxError) -> Self {
        ResolveError::Template(TemplateError::Syntax(e))
    }
}

const MAX_EXPANSION_DEPTH: usize = 32;

struct Entry {
    symbol: Symbol,
    from_template: bool,
}

struct Resolver<'l> {
    loader: &'l dyn UnitLoader,
    cache: HashMap<String, Arc<ParsedUnit>>,
    done: HashSet<String>,
    stack: Vec<String>,
    out: IndexMap<String, Entry>,
    source_map: SourceMap,
    required: Vec<(String, SourceSpan)>,
}

/// Flattens `root` and its imports into a single grammar.
///
/// Imports are processed in order before the unit's own rules. A symbol
/// defined twice has its productions merged (earlier first) when at least
/// one definition came from a template; otherwise it is an error.
pub fn resolve(root: &ParsedUnit, loader: &dyn UnitLoader) -> Result<Grammar, ResolveError> {
    let mut r = Resolver {
        loader,
        cache: HashMap::new(),
        done: HashSet::new(),
        stack: Vec::new(),
        out: IndexMap::new(),
        source_map: SourceMap::default(),
        required: Vec::new(),
    };
    let root = Arc::new(root.clone());
    r.process(root.clone())?;

    let file_span = SourceSpan::file_start(&root.file);
    if r.out.is_empty() {
        return Err(ResolveError::NoSymbols { span: file_span });
    }

    let mut missing: Vec<String> = Vec::new();
    let mut first_missing: Option<SourceSpan> = None;
    for entry in r.out.values() {
        for p in &entry.symbol.productions {
            p.body.visit(&mut |e| {
                if let ExprKind::SymbolRef(n) = &e.kind {
                    if !r.out.contains_key(n) && !missing.contains(n) {
                        missing.push(n.clone());
                        if first_missing.is_none() {
                            first_missing = r.source_map.get(e.id).cloned();
                        }
                    }
                }
            });
        }
    }
    for (name, span) in &r.required {
        if !r.out.contains_key(name) && !missing.contains(name) {
            missing.push(name.clone());
            first_missing.get_or_insert_with(|| span.clone());
        }
    }
    if !missing.is_empty() {
        return Err(ResolveError::Unresolved { names: missing, span: first_missing.unwrap_or(file_span) });
    }

    let mut grammar = Grammar::new(&root.file, r.out.into_values().map(|e| e.symbol).collect());
    grammar.source_map = r.source_map;
    Ok(grammar)
}

impl Resolver<'_> {
    fn load(&mut self, name: &str, importer: &str, span: &SourceSpan) -> Result<Arc<ParsedUnit>, ResolveError> {
        if let Some(u) = self.cache.get(name) {
            return Ok(u.clone());
        }
        let unit = self
            .loader
            .load(name, importer)
            .map_err(|source| ResolveError::Load { source, span: span.clone() })?;
        let unit = Arc::new(unit);
        self.cache.insert(name.to_string(), unit.clone());
        Ok(unit)
    }

    fn process(&mut self, unit: Arc<ParsedUnit>) -> Result<(), ResolveError> {
        let name = unit.unit_name();
        self.stack.push(name.clone());
        self.source_map.extend(&unit.source_map);

        // Templates of directly imported units are visible here.
        let mut visible: Vec<Arc<ParsedUnit>> = vec![unit.clone()];
        for imp in &unit.imports {
            if let ImportTarget::Unit(n) = &imp.target {
                if self.stack.contains(n) {
                    let mut chain = self.stack.clone();
                    chain.push(n.clone());
                    return Err(ResolveError::Cycle { chain, span: imp.span.clone() });
                }
                visible.push(self.load(n, &unit.file, &imp.span)?);
            }
        }

        for imp in &unit.imports {
            match &imp.target {
                ImportTarget::Unit(n) => {
                    if !self.done.contains(n) {
                        let u = self.load(n, &unit.file, &imp.span)?;
                        self.process(u)?;
                    }
                }
                ImportTarget::Instance(call) => {
                    let template = find_template(&visible, &call.template, &imp.span)?;
                    let (args, arg_map) = self.parse_call_args(template, &call.args, &imp.span)?;
                    let (symbols, map) = instantiate_at(template, &args, &arg_map, &imp.span)?;
                    self.source_map.extend(&map);
                    for sym in symbols {
                        let sym = self.expand_symbol(sym, &visible, 0)?;
                        self.insert(sym, true)?;
                    }
                }
            }
        }

        for rule in &unit.rules {
            let sym = self.expand_symbol(rule.clone(), &visible, 0)?;
            self.insert(sym, false)?;
        }

        self.stack.pop();
        self.done.insert(name);
        Ok(())
    }

    fn parse_call_args(
        &mut self,
        template: &TemplateDef,
        raw: &[RawArg],
        site: &SourceSpan,
    ) -> Result<(Vec<TemplateArg>, SourceMap), ResolveError> {
        let args = parse_args(template, raw, site)?;
        let mut map = SourceMap::default();
        for (arg, raw) in args.iter().zip(raw) {
            match arg {
                TemplateArg::Symbol(n) => self.required.push((n.clone(), raw.span.clone())),
                TemplateArg::Expression(e) => e.visit(&mut |n| map.insert(n.id, raw.span.clone())),
                TemplateArg::Productions(ps) => {
                    for p in ps {
                        map.insert(p.id, raw.span.clone());
                        p.body.visit(&mut |n| map.insert(n.id, raw.span.clone()));
                    }
                }
                TemplateArg::Id(_) => {}
            }
        }
        Ok((args, map))
    }

    fn insert(&mut self, sym: Symbol, from_template: bool) -> Result<(), ResolveError> {
        if let Some(existing) = self.out.get_mut(&sym.name) {
            if existing.from_template || from_template {
                existing.symbol.productions.extend(sym.productions);
                existing.from_template = true;
                return Ok(());
            }
            let first = self.source_map.get(existing.symbol.id).cloned();
            let span = self.source_map.get(sym.id).cloned().or_else(|| first.clone());
            return Err(ResolveError::Duplicate {
                name: sym.name,
                span: span.unwrap_or_else(|| SourceSpan::file_start("<unknown>")),
                first,
            });
        }
        self.out.insert(sym.name.clone(), Entry { symbol: sym, from_template });
        Ok(())
    }

    /// Replaces inline template uses inside a symbol.
    fn expand_symbol(&mut self, sym: Symbol, visible: &[Arc<ParsedUnit>], depth: usize) -> Result<Symbol, ResolveError> {
        let mut has_instance = false;
        for p in &sym.productions {
            p.body.visit(&mut |e| has_instance |= matches!(e.kind, ExprKind::Instance(_)));
        }
        if !has_instance {
            return Ok(sym);
        }
        let mut productions = Vec::new();
        for p in sym.productions {
            productions.extend(self.expand_production(p, visible, depth)?);
        }
        Ok(Symbol { id: sym.id, name: sym.name, productions })
    }

    fn expand_production(&mut self, p: Production, visible: &[Arc<ParsedUnit>], depth: usize) -> Result<Vec<Production>, ResolveError> {
        if let ExprKind::Instance(call) = &p.body.kind {
            let site = self.span_or_file(p.body.id);
            let template = find_template(visible, &call.template, &site)?;
            if template.kind == TemplateKind::Production {
                if depth >= MAX_EXPANSION_DEPTH {
                    return Err(TemplateError::TooDeep { template: template.name.clone(), span: site }.into());
                }
                let (args, arg_map) = self.parse_call_args(template, &call.args, &site)?;
                let (prods, map) = instantiate_productions(template, &args, &arg_map, &site)?;
                self.source_map.extend(&map);
                let mut out = Vec::new();
                for q in prods {
                    out.extend(self.expand_production(q, visible, depth + 1)?);
                }
                return Ok(out);
            }
        }
        let body = self.expand_expr(p.body, visible, depth)?;
        Ok(vec![Production { id: p.id, body }])
    }

    fn expand_expr(&mut self, e: Expr, visible: &[Arc<ParsedUnit>], depth: usize) -> Result<Expr, ResolveError> {
        let kind = match e.kind {
            ExprKind::Instance(call) => {
                let site = self.span_or_file(e.id);
                let template = find_template(visible, &call.template, &site)?;
                if template.kind != TemplateKind::Expression {
                    return Err(TemplateError::WrongUse {
                        template: template.name.clone(),
                        kind: template.kind.keyword(),
                        position: "inside an expression",
                        span: site,
                    }
                    .into());
                }
                if depth >= MAX_EXPANSION_DEPTH {
                    return Err(TemplateError::TooDeep { template: template.name.clone(), span: site }.into());
                }
                let (args, arg_map) = self.parse_call_args(template, &call.args, &site)?;
                let (x, map) = instantiate_expr(template, &args, &arg_map, &site)?;
                self.source_map.extend(&map);
                return self.expand_expr(x, visible, depth + 1);
            }
            ExprKind::Sequence(c) => ExprKind::Sequence(
                c.into_iter().map(|c| self.expand_expr(c, visible, depth)).collect::<Result<_, _>>()?,
            ),
            ExprKind::Alternative(c) => ExprKind::Alternative(
                c.into_iter().map(|c| self.expand_expr(c, visible, depth)).collect::<Result<_, _>>()?,
            ),
            ExprKind::Iteration(c, k) => ExprKind::Iteration(Box::new(self.expand_expr(*c, visible, depth)?), k),
            other => other,
        };
        Ok(Expr { id: e.id, kind })
    }

    fn span_or_file(&self, id: NodeId) -> SourceSpan {
        self.source_map
            .get(id)
            .cloned()
            .unwrap_or_else(|| SourceSpan::file_start(self.stack.last().map(String::as_str).unwrap_or("<unknown>")))
    }
}

fn find_template<'u>(visible: &'u [Arc<ParsedUnit>], name: &str, span: &SourceSpan) -> Result<&'u TemplateDef, TemplateError> {
    visible
        .iter()
        .find_map(|u| u.template(name))
        .ok_or_else(|| TemplateError::UnknownTemplate { name: name.to_string(), span: span.clone() })
}
