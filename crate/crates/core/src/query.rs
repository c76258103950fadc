//! Structural queries over a resolved grammar.
//!
//! A query names a symbol (or binds it to `#X`), optionally restricts its
//! attributes, and describes its productions with expression patterns. The
//! matcher returns every way the pattern fits, as [`Binding`]s.

use std::collections::BTreeMap;

use crate::metadata::{check_condition, AnnotationStore, AttributeCondition};
use crate::model::{ClassItem, Expr, ExprKind, Grammar, NodeId, Production, RepeatKind, Symbol};
use crate::span::SourceSpan;

/// Position of an inline `[[ ... ]]` block inside a pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotId(pub u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymbolPart {
    /// `#X`
    Var(String),
    /// A literal symbol name.
    Name(String),
    /// Nothing written: any symbol.
    Any,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryPattern {
    pub symbol: SymbolPart,
    pub conditions: Vec<AttributeCondition>,
    /// Block written right after the symbol part.
    pub symbol_slot: Option<SlotId>,
    pub productions: Vec<ProductionPattern>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductionPattern {
    /// `$name:` binds the production; `$:` is `Some("")`.
    pub binder: Option<String>,
    pub body: PatternExpr,
    /// Block closing the production.
    pub slot: Option<SlotId>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PatternExpr {
    /// `#X`: one atomic node. Repeats must match equal nodes.
    Var(String),
    /// A plain identifier: a reference to exactly this symbol.
    Ref(String),
    Lit(String),
    Class(Vec<ClassItem>),
    /// Matches the children of a sequence, or a lone non-sequence node.
    Seq(Vec<PatternExpr>),
    Alt(Vec<PatternExpr>),
    Repeat(Box<PatternExpr>, RepeatKind),
    /// `..`: any expression, or any run of siblings inside a list.
    Wildcard,
    /// `$v:p`
    Bind(String, Box<PatternExpr>),
    /// `p [[ ... ]]`
    Slot(SlotId, Box<PatternExpr>),
}

impl PatternExpr {
    pub fn visit(&self, f: &mut impl FnMut(&PatternExpr)) {
        f(self);
        match self {
            PatternExpr::Seq(items) | PatternExpr::Alt(items) => items.iter().for_each(|i| i.visit(f)),
            PatternExpr::Repeat(p, _) | PatternExpr::Bind(_, p) | PatternExpr::Slot(_, p) => p.visit(f),
            _ => {}
        }
    }
}

impl QueryPattern {
    /// Names of all variables the pattern binds, in first-appearance order.
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut add = |n: &str| {
            if !n.is_empty() && !out.iter().any(|o| o == n) {
                out.push(n.to_string());
            }
        };
        if let SymbolPart::Var(x) = &self.symbol {
            add(x);
        }
        for p in &self.productions {
            if let Some(b) = &p.binder {
                add(b);
            }
            p.body.visit(&mut |e| match e {
                PatternExpr::Var(x) | PatternExpr::Bind(x, _) => add(x),
                _ => {}
            });
        }
        out
    }

    pub fn slots(&self) -> Vec<SlotId> {
        let mut out: Vec<SlotId> = self.symbol_slot.into_iter().collect();
        for p in &self.productions {
            p.body.visit(&mut |e| {
                if let PatternExpr::Slot(s, _) = e {
                    out.push(*s);
                }
            });
            out.extend(p.slot);
        }
        out.sort();
        out
    }
}

/// What a variable is bound to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Bound {
    Symbol(NodeId),
    Production(NodeId),
    /// Every node the variable matched, in match order.
    Expr(Vec<NodeId>),
}

impl Bound {
    pub fn nodes(&self) -> Vec<NodeId> {
        match self {
            Bound::Symbol(id) | Bound::Production(id) => vec![*id],
            Bound::Expr(ids) => ids.clone(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Bound::Symbol(_) => "symbol",
            Bound::Production(_) => "production",
            Bound::Expr(_) => "expr",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Binding {
    /// The symbol the query matched.
    pub symbol: NodeId,
    pub vars: BTreeMap<String, Bound>,
    pub slots: BTreeMap<SlotId, NodeId>,
}

/// The value compared when a variable occurs more than once.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Referent {
    Ref(String),
    Lit(String),
    Class(Vec<ClassItem>),
}

fn referent(e: &Expr) -> Option<Referent> {
    match &e.kind {
        ExprKind::SymbolRef(n) => Some(Referent::Ref(n.clone())),
        ExprKind::Literal(t) => Some(Referent::Lit(t.clone())),
        ExprKind::CharClass(c) => Some(Referent::Class(c.clone())),
        _ => None,
    }
}

#[derive(Clone, Debug, Default)]
struct State {
    exprs: BTreeMap<String, (Referent, Vec<NodeId>)>,
    binds: BTreeMap<String, NodeId>,
    prods: BTreeMap<String, NodeId>,
    slots: BTreeMap<SlotId, NodeId>,
}

/// Matches one pattern against one expression. The `symbol` field of each
/// binding is the id of `expr` itself.
pub fn match_expr(pattern: &PatternExpr, expr: &Expr) -> Vec<Binding> {
    let mut out = Vec::new();
    for st in match_node(pattern, expr, State::default()) {
        push_unique(&mut out, finish(st, None, expr.id));
    }
    out
}

fn finish(st: State, symbol_var: Option<(&str, NodeId)>, symbol: NodeId) -> Binding {
    let mut vars = BTreeMap::new();
    for (name, (_, ids)) in st.exprs {
        vars.insert(name, Bound::Expr(ids));
    }
    for (name, id) in st.binds {
        vars.insert(name, Bound::Expr(vec![id]));
    }
    for (name, id) in st.prods {
        vars.insert(name, Bound::Production(id));
    }
    if let Some((name, id)) = symbol_var {
        vars.insert(name.to_string(), Bound::Symbol(id));
    }
    Binding { symbol, vars, slots: st.slots }
}

fn push_unique(out: &mut Vec<Binding>, b: Binding) {
    if !out.contains(&b) {
        out.push(b);
    }
}

/// All bindings of `pattern` in `grammar`, ordered by symbol, then production,
/// then match position. Duplicate bindings are reported once.
pub fn match_pattern(grammar: &Grammar, store: &AnnotationStore, pattern: &QueryPattern) -> Vec<Binding> {
    let mut out = Vec::new();
    for sym in &grammar.symbols {
        match &pattern.symbol {
            SymbolPart::Name(n) if *n != sym.name => continue,
            _ => {}
        }
        if !pattern
            .conditions
            .iter()
            .all(|c| check_condition(store.lookup(sym.id, c.attribute()), c))
        {
            continue;
        }
        let mut seed = State::default();
        let symbol_var = match &pattern.symbol {
            SymbolPart::Var(x) => {
                seed.exprs.insert(x.clone(), (Referent::Ref(sym.name.clone()), Vec::new()));
                Some((x.as_str(), sym.id))
            }
            _ => None,
        };
        if let Some(s) = pattern.symbol_slot {
            seed.slots.insert(s, sym.id);
        }
        for st in match_symbol(sym, &pattern.productions, seed) {
            let mut st = st;
            if let Some((x, _)) = symbol_var {
                st.exprs.remove(x);
            }
            push_unique(&mut out, finish(st, symbol_var, sym.id));
        }
    }
    out
}

fn match_symbol(sym: &Symbol, pats: &[ProductionPattern], seed: State) -> Vec<State> {
    match pats.len() {
        0 => vec![seed],
        1 => sym
            .productions
            .iter()
            .flat_map(|p| match_production(&pats[0], p, seed.clone()))
            .collect(),
        n if n == sym.productions.len() => {
            let mut states = vec![seed];
            for (pat, prod) in pats.iter().zip(&sym.productions) {
                states = states.into_iter().flat_map(|st| match_production(pat, prod, st)).collect();
            }
            states
        }
        _ => Vec::new(),
    }
}

fn match_production(pat: &ProductionPattern, prod: &Production, st: State) -> Vec<State> {
    let mut st = st;
    if let Some(b) = pat.binder.as_deref().filter(|b| !b.is_empty()) {
        st.prods.insert(b.to_string(), prod.id);
    }
    if let Some(s) = pat.slot {
        st.slots.insert(s, prod.id);
    }
    match_node(&pat.body, &prod.body, st)
}

fn match_node(p: &PatternExpr, e: &Expr, st: State) -> Vec<State> {
    match p {
        PatternExpr::Wildcard => vec![st],
        PatternExpr::Var(x) => {
            let Some(r) = referent(e) else { return Vec::new() };
            let mut st = st;
            match st.exprs.get_mut(x) {
                Some((prev, ids)) => {
                    if *prev != r {
                        return Vec::new();
                    }
                    ids.push(e.id);
                }
                None => {
                    st.exprs.insert(x.clone(), (r, vec![e.id]));
                }
            }
            vec![st]
        }
        PatternExpr::Ref(n) => match &e.kind {
            ExprKind::SymbolRef(m) if m == n => vec![st],
            _ => Vec::new(),
        },
        PatternExpr::Lit(t) => match &e.kind {
            ExprKind::Literal(u) if u == t => vec![st],
            _ => Vec::new(),
        },
        PatternExpr::Class(c) => match &e.kind {
            ExprKind::CharClass(d) if d == c => vec![st],
            _ => Vec::new(),
        },
        PatternExpr::Seq(items) => {
            let children: &[Expr] = match &e.kind {
                ExprKind::Sequence(c) => c,
                _ => std::slice::from_ref(e),
            };
            match_list(items, children, st)
        }
        PatternExpr::Alt(items) => match &e.kind {
            ExprKind::Alternative(c) => match_list(items, c, st),
            _ => Vec::new(),
        },
        PatternExpr::Repeat(inner, k) => match &e.kind {
            ExprKind::Iteration(child, l) if k == l => match_node(inner, child, st),
            _ => Vec::new(),
        },
        PatternExpr::Bind(v, inner) => {
            let mut out = match_node(inner, e, st);
            for s in &mut out {
                s.binds.insert(v.clone(), e.id);
            }
            out
        }
        PatternExpr::Slot(slot, inner) => {
            let mut out = match_node(inner, e, st);
            for s in &mut out {
                s.slots.insert(*slot, e.id);
            }
            out
        }
    }
}

fn match_list(ps: &[PatternExpr], es: &[Expr], st: State) -> Vec<State> {
    let Some((first, rest)) = ps.split_first() else {
        return if es.is_empty() { vec![st] } else { Vec::new() };
    };
    if *first == PatternExpr::Wildcard {
        return (0..=es.len()).flat_map(|k| match_list(rest, &es[k..], st.clone())).collect();
    }
    let Some((e, es_rest)) = es.split_first() else { return Vec::new() };
    match_node(first, e, st)
        .into_iter()
        .flat_map(|s| match_list(rest, es_rest, s))
        .collect()
}
