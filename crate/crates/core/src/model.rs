//! The grammar object model: symbols, productions and EBNF/regex expressions.
//!
//! Every node carries a [`NodeId`] so that metadata can be attached from the
//! outside without touching the tree. Trees are immutable once built; the only
//! way to get a changed grammar is to build a new one.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::span::SourceSpan;

static NEXT_NODE_ID: AtomicU64 = AtomicU64::new(1);

/// Opaque identity of a grammar node. Ids are never reused within a process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u64);

impl NodeId {
    pub fn fresh() -> NodeId {
        NodeId(NEXT_NODE_ID.fetch_add(1, Ordering::Relaxed))
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RepeatKind {
    /// `*`
    Star,
    /// `+`
    Plus,
    /// `?`
    Optional,
}

impl RepeatKind {
    pub fn suffix(self) -> char {
        match self {
            RepeatKind::Star => '*',
            RepeatKind::Plus => '+',
            RepeatKind::Optional => '?',
        }
    }
}

/// One member of a character class: a single character or an inclusive range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClassItem {
    Char(char),
    Range(char, char),
}

/// Unparsed text of one template argument. Arguments are parsed only once the
/// parameter kind is known, which happens when the template is resolved.
#[derive(Clone, Debug)]
pub struct RawArg {
    pub text: String,
    pub span: SourceSpan,
}

#[derive(Clone, Debug)]
pub struct TemplateCall {
    pub template: String,
    pub args: Vec<RawArg>,
}

#[derive(Clone, Debug)]
pub struct Expr {
    pub id: NodeId,
    pub kind: ExprKind,
}

#[derive(Clone, Debug)]
pub enum ExprKind {
    /// Concatenation. Zero children is the empty string.
    Sequence(Vec<Expr>),
    /// In-expression alternation (`|`), always two or more children.
    Alternative(Vec<Expr>),
    Iteration(Box<Expr>, RepeatKind),
    SymbolRef(String),
    /// A quoted literal, stored unescaped. Never empty.
    Literal(String),
    CharClass(Vec<ClassItem>),
    /// `$name` inside a template body. Never present in a resolved grammar.
    Placeholder(String),
    /// Inline use of an expression or production template. Never present in a
    /// resolved grammar.
    Instance(TemplateCall),
}

impl Expr {
    pub fn new(kind: ExprKind) -> Expr {
        Expr { id: NodeId::fresh(), kind }
    }

    pub fn empty() -> Expr {
        Expr::new(ExprKind::Sequence(Vec::new()))
    }

    /// A sequence; a single element is returned unwrapped.
    pub fn seq(mut children: Vec<Expr>) -> Expr {
        if children.len() == 1 {
            return children.pop().unwrap();
        }
        Expr::new(ExprKind::Sequence(children))
    }

    /// An alternative; a single element is returned unwrapped.
    pub fn alt(mut children: Vec<Expr>) -> Expr {
        assert!(!children.is_empty(), "alternative needs at least one branch");
        if children.len() == 1 {
            return children.pop().unwrap();
        }
        Expr::new(ExprKind::Alternative(children))
    }

    pub fn repeat(child: Expr, kind: RepeatKind) -> Expr {
        Expr::new(ExprKind::Iteration(Box::new(child), kind))
    }

    pub fn star(child: Expr) -> Expr {
        Expr::repeat(child, RepeatKind::Star)
    }

    pub fn plus(child: Expr) -> Expr {
        Expr::repeat(child, RepeatKind::Plus)
    }

    pub fn opt(child: Expr) -> Expr {
        Expr::repeat(child, RepeatKind::Optional)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::new(ExprKind::SymbolRef(name.to_string()))
    }

    pub fn lit(text: &str) -> Expr {
        assert!(!text.is_empty(), "literals are never empty");
        Expr::new(ExprKind::Literal(text.to_string()))
    }

    pub fn class(items: Vec<ClassItem>) -> Expr {
        Expr::new(ExprKind::CharClass(items))
    }

    pub fn is_empty_sequence(&self) -> bool {
        matches!(&self.kind, ExprKind::Sequence(c) if c.is_empty())
    }

    /// Symbol references, literals and character classes.
    pub fn is_atomic(&self) -> bool {
        matches!(
            self.kind,
            ExprKind::SymbolRef(_) | ExprKind::Literal(_) | ExprKind::CharClass(_)
        )
    }

    /// Direct children in order.
    pub fn children(&self) -> &[Expr] {
        match &self.kind {
            ExprKind::Sequence(c) | ExprKind::Alternative(c) => c,
            ExprKind::Iteration(c, _) => std::slice::from_ref(c.as_ref()),
            _ => &[],
        }
    }

    /// Calls `f` on this node and every descendant, parents first.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Names of all referenced symbols, in pre-order.
    pub fn referenced_symbols(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let ExprKind::SymbolRef(n) = &e.kind {
                out.push(n.as_str());
            }
        });
        out
    }
}

#[derive(Clone, Debug)]
pub struct Production {
    pub id: NodeId,
    pub body: Expr,
}

impl Production {
    pub fn new(body: Expr) -> Production {
        Production { id: NodeId::fresh(), body }
    }
}

#[derive(Clone, Debug)]
pub struct Symbol {
    pub id: NodeId,
    pub name: String,
    pub productions: Vec<Production>,
}

impl Symbol {
    pub fn new(name: &str, productions: Vec<Production>) -> Symbol {
        assert!(!productions.is_empty(), "a symbol has at least one production");
        Symbol { id: NodeId::fresh(), name: name.to_string(), productions }
    }

    /// Shorthand for a symbol whose productions are the given bodies.
    pub fn with_bodies(name: &str, bodies: Vec<Expr>) -> Symbol {
        Symbol::new(name, bodies.into_iter().map(Production::new).collect())
    }
}

/// Side table from nodes to where they were written.
#[derive(Clone, Debug, Default)]
pub struct SourceMap {
    spans: HashMap<NodeId, SourceSpan>,
}

impl SourceMap {
    pub fn insert(&mut self, id: NodeId, span: SourceSpan) {
        self.spans.insert(id, span);
    }

    pub fn get(&self, id: NodeId) -> Option<&SourceSpan> {
        self.spans.get(&id)
    }

    pub fn extend(&mut self, other: &SourceMap) {
        self.spans.extend(other.spans.iter().map(|(k, v)| (*k, v.clone())));
    }
}

#[derive(Clone, Debug)]
pub struct Grammar {
    pub id: NodeId,
    /// Name of the source file the grammar was resolved from.
    pub origin: String,
    pub symbols: Vec<Symbol>,
    pub source_map: SourceMap,
}

impl Grammar {
    pub fn new(origin: &str, symbols: Vec<Symbol>) -> Grammar {
        Grammar {
            id: NodeId::fresh(),
            origin: origin.to_string(),
            symbols,
            source_map: SourceMap::default(),
        }
    }

    pub fn production_count(&self) -> usize {
        self.symbols.iter().map(|s| s.productions.len()).sum()
    }

    /// The symbol with exactly this name. Names are case-sensitive.
    pub fn lookup(&self, name: &str) -> Option<&Symbol> {
        self.symbols.iter().find(|s| s.name == name)
    }

    pub fn span(&self, id: NodeId) -> Option<&SourceSpan> {
        self.source_map.get(id)
    }

    /// Every node in pre-order; symbols in declaration order.
    pub fn walk(&self) -> Vec<Visit> {
        let mut out = Vec::new();
        for sym in &self.symbols {
            out.push(Visit { id: sym.id, kind: NodeKind::Symbol, parent: None });
            for prod in &sym.productions {
                out.push(Visit { id: prod.id, kind: NodeKind::Production, parent: Some(sym.id) });
                walk_expr(&prod.body, prod.id, &mut out);
            }
        }
        out
    }

    /// Lookup table from ids to nodes, covering the grammar itself, symbols,
    /// productions and expressions.
    pub fn index(&self) -> HashMap<NodeId, NodeRef<'_>> {
        let mut map = HashMap::new();
        map.insert(self.id, NodeRef::Grammar(self));
        for sym in &self.symbols {
            map.insert(sym.id, NodeRef::Symbol(sym));
            for prod in &sym.productions {
                map.insert(prod.id, NodeRef::Production(sym, prod));
                prod.body.visit(&mut |e| {
                    map.insert(e.id, NodeRef::Expr(e));
                });
            }
        }
        map
    }

    /// Names of symbols that behave like lexical (token) definitions.
    ///
    /// A symbol is lexical when each of its productions is built only from
    /// literals, character classes, sequences, alternatives, iterations and
    /// references to other lexical symbols, and at least one production
    /// mentions a literal or character class directly. Computed as a least
    /// fixpoint, so recursive symbols are never lexical.
    pub fn lexical_symbols(&self) -> HashSet<String> {
        let mut lexical: HashSet<String> = HashSet::new();
        loop {
            let mut changed = false;
            for sym in &self.symbols {
                if lexical.contains(&sym.name) {
                    continue;
                }
                let all_lexical = sym
                    .productions
                    .iter()
                    .all(|p| is_lexical_expr(&p.body, &lexical));
                let has_terminal = sym.productions.iter().any(|p| {
                    let mut found = false;
                    p.body.visit(&mut |e| {
                        found |= matches!(e.kind, ExprKind::Literal(_) | ExprKind::CharClass(_))
                    });
                    found
                });
                if all_lexical && has_terminal {
                    lexical.insert(sym.name.clone());
                    changed = true;
                }
            }
            if !changed {
                return lexical;
            }
        }
    }
}

fn is_lexical_expr(e: &Expr, lexical: &HashSet<String>) -> bool {
    match &e.kind {
        ExprKind::Literal(_) | ExprKind::CharClass(_) => true,
        ExprKind::SymbolRef(n) => lexical.contains(n),
        ExprKind::Sequence(c) | ExprKind::Alternative(c) => c.iter().all(|c| is_lexical_expr(c, lexical)),
        ExprKind::Iteration(c, _) => is_lexical_expr(c, lexical),
        ExprKind::Placeholder(_) | ExprKind::Instance(_) => false,
    }
}

fn walk_expr(e: &Expr, parent: NodeId, out: &mut Vec<Visit>) {
    out.push(Visit { id: e.id, kind: NodeKind::of(e), parent: Some(parent) });
    for c in e.children() {
        walk_expr(c, e.id, out);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Symbol,
    Production,
    Sequence,
    Alternative,
    Iteration,
    SymbolRef,
    Literal,
    CharClass,
    Placeholder,
    Instance,
}

impl NodeKind {
    pub fn of(e: &Expr) -> NodeKind {
        match e.kind {
            ExprKind::Sequence(_) => NodeKind::Sequence,
            ExprKind::Alternative(_) => NodeKind::Alternative,
            ExprKind::Iteration(..) => NodeKind::Iteration,
            ExprKind::SymbolRef(_) => NodeKind::SymbolRef,
            ExprKind::Literal(_) => NodeKind::Literal,
            ExprKind::CharClass(_) => NodeKind::CharClass,
            ExprKind::Placeholder(_) => NodeKind::Placeholder,
            ExprKind::Instance(_) => NodeKind::Instance,
        }
    }
}

/// One step of [`Grammar::walk`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Visit {
    pub id: NodeId,
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
}

#[derive(Clone, Copy, Debug)]
pub enum NodeRef<'g> {
    Grammar(&'g Grammar),
    Symbol(&'g Symbol),
    Production(&'g Symbol, &'g Production),
    Expr(&'g Expr),
}

impl NodeRef<'_> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            NodeRef::Grammar(_) => "grammar",
            NodeRef::Symbol(_) => "symbol",
            NodeRef::Production(..) => "production",
            NodeRef::Expr(_) => "expr",
        }
    }
}

/// Tree equality ignoring node ids.
pub fn structural_equals(a: &Expr, b: &Expr) -> bool {
    match (&a.kind, &b.kind) {
        (ExprKind::Sequence(x), ExprKind::Sequence(y))
        | (ExprKind::Alternative(x), ExprKind::Alternative(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(l, r)| structural_equals(l, r))
        }
        (ExprKind::Iteration(x, k), ExprKind::Iteration(y, l)) => k == l && structural_equals(x, y),
        (ExprKind::SymbolRef(x), ExprKind::SymbolRef(y))
        | (ExprKind::Literal(x), ExprKind::Literal(y))
        | (ExprKind::Placeholder(x), ExprKind::Placeholder(y)) => x == y,
        (ExprKind::CharClass(x), ExprKind::CharClass(y)) => x == y,
        (ExprKind::Instance(x), ExprKind::Instance(y)) => {
            x.template == y.template
                && x.args.len() == y.args.len()
                && x.args.iter().zip(&y.args).all(|(l, r)| l.text.trim() == r.text.trim())
        }
        _ => false,
    }
}

pub fn symbols_structurally_equal(a: &Symbol, b: &Symbol) -> bool {
    a.name == b.name
        && a.productions.len() == b.productions.len()
        && a.productions
            .iter()
            .zip(&b.productions)
            .all(|(x, y)| structural_equals(&x.body, &y.body))
}

pub fn grammars_structurally_equal(a: &Grammar, b: &Grammar) -> bool {
    a.symbols.len() == b.symbols.len()
        && a.symbols.iter().zip(&b.symbols).all(|(x, y)| symbols_structurally_equal(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Grammar {
        // sum : mult ('+' mult)* ;  mult : factor ('*' factor)* ;  factor : NUM || ID ;
        Grammar::new(
            "t.gr",
            vec![
                Symbol::with_bodies(
                    "sum",
                    vec![Expr::seq(vec![
                        Expr::sym("mult"),
                        Expr::star(Expr::seq(vec![Expr::lit("+"), Expr::sym("mult")])),
                    ])],
                ),
                Symbol::with_bodies(
                    "mult",
                    vec![Expr::seq(vec![
                        Expr::sym("factor"),
                        Expr::star(Expr::seq(vec![Expr::lit("*"), Expr::sym("factor")])),
                    ])],
                ),
                Symbol::with_bodies("factor", vec![Expr::sym("NUM"), Expr::sym("ID")]),
            ],
        )
    }

    #[test]
    fn walk_visits_parents_first_and_every_node_once() {
        let g = sample();
        let visits = g.walk();
        let mut seen = HashSet::new();
        for v in &visits {
            if let Some(p) = v.parent {
                assert!(seen.contains(&p), "parent must precede child");
            }
            assert!(seen.insert(v.id), "node visited twice");
        }
        let syms: Vec<_> = visits.iter().filter(|v| v.kind == NodeKind::Symbol).collect();
        assert_eq!(syms.len(), 3);
    }

    #[test]
    fn single_rule_walk() {
        let g = Grammar::new("t.gr", vec![Symbol::with_bodies("type", vec![Expr::sym("ID")])]);
        let kinds: Vec<_> = g.walk().iter().map(|v| v.kind).collect();
        assert_eq!(kinds, vec![NodeKind::Symbol, NodeKind::Production, NodeKind::SymbolRef]);
    }

    #[test]
    fn lookup_is_case_sensitive() {
        let g = sample();
        assert_eq!(g.lookup("sum").unwrap().name, "sum");
        assert!(g.lookup("Sum").is_none());
        assert!(g.lookup("missing").is_none());
    }

    #[test]
    fn structural_equality_ignores_ids() {
        assert!(structural_equals(&Expr::lit("+"), &Expr::lit("+")));
        let g = sample();
        let sum = &g.symbols[0].productions[0].body;
        let mult = &g.symbols[1].productions[0].body;
        assert!(!structural_equals(sum, mult));
    }

    #[test]
    fn seq_of_one_is_unwrapped() {
        let e = Expr::seq(vec![Expr::sym("a")]);
        assert!(matches!(e.kind, ExprKind::SymbolRef(_)));
        assert!(Expr::seq(vec![]).is_empty_sequence());
    }

    #[test]
    fn lexical_classification() {
        let g = Grammar::new(
            "t.gr",
            vec![
                Symbol::with_bodies("type", vec![Expr::sym("ID")]),
                Symbol::with_bodies("ALPHA", vec![Expr::class(vec![ClassItem::Range('a', 'z')])]),
                Symbol::with_bodies(
                    "ID",
                    vec![Expr::seq(vec![
                        Expr::sym("ALPHA"),
                        Expr::star(Expr::alt(vec![Expr::sym("ALPHA"), Expr::class(vec![ClassItem::Range('0', '9')])])),
                    ])],
                ),
                Symbol::with_bodies("ALPHAS", vec![Expr::plus(Expr::sym("ALPHA"))]),
                Symbol::with_bodies("rec", vec![Expr::seq(vec![Expr::lit("a"), Expr::opt(Expr::sym("rec"))])]),
            ],
        );
        let lex = g.lexical_symbols();
        assert!(lex.contains("ALPHA"));
        assert!(lex.contains("ID"));
        assert!(!lex.contains("type"));
        assert!(!lex.contains("rec"));
        assert!(!lex.contains("ALPHAS"));
    }
}
