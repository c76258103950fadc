#![allow(dead_code)]

use std::collections::BTreeMap;

use gramweave::metadata::{check_condition, AnnotationStore, AttributeCondition, AttributeValue, ValueType};
use gramweave::model::{ClassItem, Expr, ExprKind, Grammar, NodeId, RepeatKind, Symbol};
use gramweave::query::{Binding, Bound, PatternExpr, ProductionPattern, QueryPattern, SlotId, SymbolPart};
use gramweave::span::SourceSpan;
use gramweave::syntax::parse_grammar;
use gramweave::template::{resolve, FsLoader, MemoryLoader};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const EXPR: &str = include_str!("../../examples/expr.gr");
pub const SUM_ASPECT: &str = include_str!("../../examples/sum.aspect");
pub const NEWLINE: &str = include_str!("../../examples/newline.gr");
pub const NEWLINE_ASPECT: &str = include_str!("../../examples/newline.aspect");
pub const LEFTREC_ASPECT: &str = include_str!("../../examples/leftrec.aspect");
pub const BUILDERS_ASPECT: &str = include_str!("../../examples/builders.aspect");
pub const BINOP: &str = include_str!("../../examples/binop.gr");
pub const ATTRVALUE: &str = include_str!("../../examples/attrvalue.gr");

/// Embedded-actions form of `sum`, reproduced verbatim.
pub const SUM_LISTING: &str = "  sum returns [int result]
    : {result = 0;} 
      left=mult {result += left;} 
      ('+' right=mult {result += right;})*
    ;";

pub const NEWLINE_LISTING: &str = "NEWLINE
  : ('\\r'? '\\n')=> '\\r'? '\\n'
  | '\\r'
  ;";

/// Builder form of `varSum`, reproduced verbatim.
pub const VARSUM_LISTING: &str = "    varSum [Scope scope] returns [Expression result]
    @init {
        IVarSumBuilder builder = myBuilders.getVarSumBuilder(scope);
    }
      : vm=varMult[scope] {builder.varMult(vm);} 
        ('+' vm1=varMult[scope] {builder.varMult(vm1)})* ;";

/// The two rules generated for `sum`, with builder calls left out.
pub const SPLIT_LISTING: &str = "    varSum [Scope scope] returns [Expression result]
      : varMult[scope] ('+' varMult[scope])* ;

    constSum [Context context] returns [int result]
      : constMult[context] ('+' constMult[context])* ;";

pub fn examples_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

pub fn grammar(src: &str, file: &str) -> Grammar {
    let unit = parse_grammar(src, file).unwrap_or_else(|e| panic!("{file}: {e}"));
    resolve(&unit, &FsLoader::default()).unwrap_or_else(|e| panic!("{file}: {e}"))
}

pub fn grammar_mem(src: &str) -> Grammar {
    resolve(&parse_grammar(src, "t.gr").unwrap(), &MemoryLoader::new()).unwrap()
}

/// Drops whitespace outside quotes and renames labels (`x=rule`) to `L0`,
/// `L1`, ... in order of definition.
pub fn normalize(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    // tokens: identifiers, quoted strings and single characters
    let mut toks: Vec<String> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_alphabetic() || c == '_' {
            let s: String = chars[i..].iter().take_while(|c| c.is_ascii_alphanumeric() || **c == '_').collect();
            i += s.len();
            toks.push(s);
        } else if c == '\'' {
            let mut j = i + 1;
            while j < chars.len() && chars[j] != '\'' {
                j += if chars[j] == '\\' { 2 } else { 1 };
            }
            let s: String = chars[i..=j.min(chars.len() - 1)].iter().collect();
            i = j + 1;
            toks.push(s);
        } else {
            toks.push(c.to_string());
            i += 1;
        }
    }
    let mut labels: BTreeMap<String, String> = BTreeMap::new();
    for w in toks.windows(3) {
        let is_ident = |s: &str| s.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_');
        if is_ident(&w[0]) && w[1] == "=" && is_ident(&w[2]) && !labels.contains_key(&w[0]) {
            let n = labels.len();
            labels.insert(w[0].clone(), format!("L{n}"));
        }
    }
    toks.iter()
        .filter(|t| !t.chars().all(char::is_whitespace))
        .map(|t| labels.get(t).cloned().unwrap_or_else(|| t.clone()))
        .collect()
}

/// Collapses whitespace runs to one space.
pub fn squash(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The rule starting with `head` in generated grammar text, up to its `;`.
pub fn rule_text<'a>(text: &'a str, head: &str) -> &'a str {
    let start = text.find(&format!("\n{head}")).unwrap_or_else(|| panic!("no rule {head} in\n{text}")) + 1;
    let end = text[start..].find("\n    ;\n").unwrap() + start + 6;
    &text[start..end]
}

// ---------------------------------------------------------------------------
// random grammars and patterns

const NAMES: &[&str] = &["a", "b", "c", "d", "e"];
const LITS: &[&str] = &["x", "y", "+"];

fn random_class(rng: &mut ChaCha8Rng) -> Vec<ClassItem> {
    if rng.gen_bool(0.5) {
        vec![ClassItem::Range('0', '9')]
    } else {
        vec![ClassItem::Char('_'), ClassItem::Range('a', 'z')]
    }
}

fn random_leaf(rng: &mut ChaCha8Rng, names: &[&str]) -> Expr {
    match rng.gen_range(0..10) {
        0..=5 => Expr::sym(names.choose(rng).unwrap()),
        6..=8 => Expr::lit(LITS.choose(rng).unwrap()),
        _ => Expr::class(random_class(rng)),
    }
}

pub fn random_expr(rng: &mut ChaCha8Rng, names: &[&str], depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.35) {
        return random_leaf(rng, names);
    }
    match rng.gen_range(0..10) {
        0..=4 => {
            let n = rng.gen_range(0..=3);
            Expr::seq((0..n).map(|_| random_expr(rng, names, depth - 1)).collect())
        }
        5..=6 => {
            let n = rng.gen_range(2..=3);
            Expr::alt((0..n).map(|_| random_expr(rng, names, depth - 1)).collect())
        }
        _ => {
            let kind = *[RepeatKind::Star, RepeatKind::Plus, RepeatKind::Optional].choose(rng).unwrap();
            Expr::repeat(random_expr(rng, names, depth - 1), kind)
        }
    }
}

/// At most 5 symbols, expression depth at most 4.
pub fn random_grammar(rng: &mut ChaCha8Rng) -> Grammar {
    let count = rng.gen_range(1..=5);
    let names = &NAMES[..count];
    let symbols = names
        .iter()
        .map(|n| {
            let prods = rng.gen_range(1..=3);
            Symbol::with_bodies(n, (0..prods).map(|_| random_expr(rng, names, 4)).collect())
        })
        .collect();
    Grammar::new("random.gr", symbols)
}

/// Attaches `k` with a small integer to some symbols.
pub fn random_store(rng: &mut ChaCha8Rng, g: &Grammar) -> AnnotationStore {
    let mut store = AnnotationStore::for_grammar(g);
    for s in &g.symbols {
        if rng.gen_bool(0.4) {
            store.attach(s.id, "k", AttributeValue::Int(rng.gen_range(0..2))).unwrap();
        }
    }
    store
}

struct PatGen<'r> {
    rng: &'r mut ChaCha8Rng,
    next_slot: u32,
    binders: Vec<String>,
}

impl PatGen<'_> {
    fn slot(&mut self) -> SlotId {
        self.next_slot += 1;
        SlotId(self.next_slot - 1)
    }

    fn binder(&mut self) -> String {
        let name = format!("p{}", self.binders.len());
        self.binders.push(name.clone());
        name
    }

    fn leaf(&mut self) -> PatternExpr {
        match self.rng.gen_range(0..12) {
            0..=3 => PatternExpr::Var(["A", "B", "S"].choose(self.rng).unwrap().to_string()),
            4..=5 => PatternExpr::Ref(NAMES.choose(self.rng).unwrap().to_string()),
            6 => PatternExpr::Lit(LITS.choose(self.rng).unwrap().to_string()),
            7 => PatternExpr::Class(random_class(self.rng)),
            _ => PatternExpr::Wildcard,
        }
    }

    fn list(&mut self, depth: u32, min: usize) -> Vec<PatternExpr> {
        let n = self.rng.gen_range(min..=3);
        (0..n).map(|_| self.expr(depth - 1)).collect()
    }

    fn expr(&mut self, depth: u32) -> PatternExpr {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return self.leaf();
        }
        match self.rng.gen_range(0..12) {
            0..=4 => PatternExpr::Seq(self.list(depth, 0)),
            5..=6 => PatternExpr::Alt(self.list(depth, 1)),
            7..=8 => {
                let kind = *[RepeatKind::Star, RepeatKind::Plus, RepeatKind::Optional].choose(self.rng).unwrap();
                PatternExpr::Repeat(Box::new(self.expr(depth - 1)), kind)
            }
            9..=10 => {
                let b = self.binder();
                PatternExpr::Bind(b, Box::new(self.expr(depth - 1)))
            }
            _ => {
                let s = self.slot();
                PatternExpr::Slot(s, Box::new(self.expr(depth - 1)))
            }
        }
    }
}

pub fn random_pattern(rng: &mut ChaCha8Rng) -> QueryPattern {
    let symbol = match rng.gen_range(0..4) {
        0..=1 => SymbolPart::Var("S".into()),
        2 => SymbolPart::Name(NAMES.choose(rng).unwrap().to_string()),
        _ => SymbolPart::Any,
    };
    let conditions = match rng.gen_range(0..6) {
        0 => vec![AttributeCondition::Present("k".into())],
        1 => vec![AttributeCondition::Absent("k".into())],
        2 => vec![AttributeCondition::Equals("k".into(), AttributeValue::Int(1))],
        3 => vec![AttributeCondition::HasType("k".into(), ValueType::Int)],
        _ => vec![],
    };
    let mut g = PatGen { rng, next_slot: 0, binders: Vec::new() };
    let symbol_slot = if g.rng.gen_bool(0.2) { Some(g.slot()) } else { None };
    let nprods = *[0usize, 1, 1, 1, 1, 2, 3].choose(g.rng).unwrap();
    let mut productions = Vec::new();
    for _ in 0..nprods {
        let binder = match g.rng.gen_range(0..4) {
            0 => Some(g.binder()),
            1 => Some(String::new()),
            _ => None,
        };
        let body = if g.rng.gen_bool(0.7) { PatternExpr::Seq(g.list(3, 0)) } else { g.expr(3) };
        let slot = if g.rng.gen_bool(0.2) { Some(g.slot()) } else { None };
        productions.push(ProductionPattern { binder, body, slot, span: SourceSpan::file_start("<random>") });
    }
    QueryPattern { symbol, conditions, symbol_slot, productions, span: SourceSpan::file_start("<random>") }
}

// ---------------------------------------------------------------------------
// brute-force matcher
//
// Enumerates every alignment of the pattern against the grammar without
// looking at variables, then keeps the alignments whose variable uses are
// consistent.

#[derive(Clone, Debug)]
enum Event {
    /// `#X` matched an atomic node; the string is its kind and content.
    Var(String, String, NodeId),
    Bind(String, NodeId),
    Prod(String, NodeId),
    Slot(SlotId, NodeId),
}

fn content(e: &Expr) -> Option<String> {
    match &e.kind {
        ExprKind::SymbolRef(n) => Some(format!("ref {n}")),
        ExprKind::Literal(t) => Some(format!("lit {t}")),
        ExprKind::CharClass(items) => Some(format!("class {items:?}")),
        _ => None,
    }
}

fn product(left: Vec<Vec<Event>>, right: impl Fn() -> Vec<Vec<Event>>) -> Vec<Vec<Event>> {
    let mut out = Vec::new();
    for l in left {
        for r in right() {
            let mut v = l.clone();
            v.extend(r);
            out.push(v);
        }
    }
    out
}

fn align(p: &PatternExpr, e: &Expr) -> Vec<Vec<Event>> {
    match p {
        PatternExpr::Wildcard => vec![vec![]],
        PatternExpr::Var(x) => match content(e) {
            Some(c) => vec![vec![Event::Var(x.clone(), c, e.id)]],
            None => vec![],
        },
        PatternExpr::Ref(n) => {
            if content(e) == Some(format!("ref {n}")) {
                vec![vec![]]
            } else {
                vec![]
            }
        }
        PatternExpr::Lit(t) => {
            if content(e) == Some(format!("lit {t}")) {
                vec![vec![]]
            } else {
                vec![]
            }
        }
        PatternExpr::Class(items) => {
            if content(e) == Some(format!("class {items:?}")) {
                vec![vec![]]
            } else {
                vec![]
            }
        }
        PatternExpr::Seq(ps) => match &e.kind {
            ExprKind::Sequence(children) => align_list(ps, children),
            _ => align_list(ps, std::slice::from_ref(e)),
        },
        PatternExpr::Alt(ps) => match &e.kind {
            ExprKind::Alternative(children) => align_list(ps, children),
            _ => vec![],
        },
        PatternExpr::Repeat(inner, k) => match &e.kind {
            ExprKind::Iteration(child, l) if k == l => align(inner, child),
            _ => vec![],
        },
        PatternExpr::Bind(name, inner) => {
            let mut out = align(inner, e);
            for a in &mut out {
                a.push(Event::Bind(name.clone(), e.id));
            }
            out
        }
        PatternExpr::Slot(s, inner) => {
            let mut out = align(inner, e);
            for a in &mut out {
                a.push(Event::Slot(*s, e.id));
            }
            out
        }
    }
}

/// Every split of `es` over `ps`: `..` takes any number of items, every
/// other element exactly one.
fn align_list(ps: &[PatternExpr], es: &[Expr]) -> Vec<Vec<Event>> {
    let Some((first, rest)) = ps.split_first() else {
        return if es.is_empty() { vec![vec![]] } else { vec![] };
    };
    if matches!(first, PatternExpr::Wildcard) {
        let mut out = Vec::new();
        for k in 0..=es.len() {
            out.extend(align_list(rest, &es[k..]));
        }
        return out;
    }
    if es.is_empty() {
        return vec![];
    }
    product(align(first, &es[0]), || align_list(rest, &es[1..]))
}

fn symbol_alignments(sym: &Symbol, pats: &[ProductionPattern]) -> Vec<Vec<Event>> {
    let one = |pat: &ProductionPattern, p: &gramweave::model::Production| {
        let mut out = align(&pat.body, &p.body);
        for a in &mut out {
            if let Some(b) = pat.binder.as_ref().filter(|b| !b.is_empty()) {
                a.push(Event::Prod(b.clone(), p.id));
            }
            if let Some(s) = pat.slot {
                a.push(Event::Slot(s, p.id));
            }
        }
        out
    };
    if pats.is_empty() {
        return vec![vec![]];
    }
    if pats.len() == 1 {
        return sym.productions.iter().flat_map(|p| one(&pats[0], p)).collect();
    }
    if pats.len() != sym.productions.len() {
        return vec![];
    }
    let mut acc = vec![vec![]];
    for (pat, p) in pats.iter().zip(&sym.productions) {
        acc = product(acc, || one(pat, p));
    }
    acc
}

pub fn brute_force(grammar: &Grammar, store: &AnnotationStore, pattern: &QueryPattern) -> Vec<Binding> {
    let mut out: Vec<Binding> = Vec::new();
    for sym in &grammar.symbols {
        if let SymbolPart::Name(n) = &pattern.symbol {
            if n != &sym.name {
                continue;
            }
        }
        if !pattern.conditions.iter().all(|c| check_condition(store.lookup(sym.id, c.attribute()), c)) {
            continue;
        }
        let symvar = match &pattern.symbol {
            SymbolPart::Var(x) => Some(x.clone()),
            _ => None,
        };
        'alignment: for events in symbol_alignments(sym, &pattern.productions) {
            let mut seen: BTreeMap<String, (String, Vec<NodeId>)> = BTreeMap::new();
            if let Some(x) = &symvar {
                seen.insert(x.clone(), (format!("ref {}", sym.name), Vec::new()));
            }
            let mut vars = BTreeMap::new();
            let mut slots = BTreeMap::new();
            if let Some(s) = pattern.symbol_slot {
                slots.insert(s, sym.id);
            }
            for ev in &events {
                match ev {
                    Event::Var(x, c, id) => {
                        let entry = seen.entry(x.clone()).or_insert_with(|| (c.clone(), Vec::new()));
                        if &entry.0 != c {
                            continue 'alignment;
                        }
                        entry.1.push(*id);
                    }
                    Event::Bind(x, id) => {
                        vars.insert(x.clone(), Bound::Expr(vec![*id]));
                    }
                    Event::Prod(x, id) => {
                        vars.insert(x.clone(), Bound::Production(*id));
                    }
                    Event::Slot(s, id) => {
                        slots.insert(*s, *id);
                    }
                }
            }
            for (x, (_, ids)) in seen {
                if symvar.as_deref() != Some(x.as_str()) {
                    vars.insert(x, Bound::Expr(ids));
                }
            }
            if let Some(x) = &symvar {
                vars.insert(x.clone(), Bound::Symbol(sym.id));
            }
            let b = Binding { symbol: sym.id, vars, slots };
            if !out.contains(&b) {
                out.push(b);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// golden helpers

/// The varSum listing has no `;` after the second call and leaves out the
/// result epilogue; both are restored here.
pub fn corrected_varsum() -> String {
    VARSUM_LISTING
        .replace("{builder.varMult(vm1)}", "{builder.varMult(vm1);}")
        .replace(")* ;", ")* {result = builder.getResult();} ;")
}

/// Drops actions, `@init` blocks and labels.
pub fn strip_actions(text: &str) -> String {
    let mut out = String::new();
    let mut depth = 0;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '{' => depth += 1,
            '}' => depth -= 1,
            '\'' if depth == 0 => {
                out.push(c);
                while let Some(d) = chars.next() {
                    out.push(d);
                    if d == '\\' {
                        out.extend(chars.next());
                    } else if d == '\'' {
                        break;
                    }
                }
            }
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    let out = out.replace("@init", "");
    // labels: `x=rule`
    let mut cleaned = String::new();
    for word in out.split(' ') {
        match word.split_once('=') {
            Some((l, r)) if !l.is_empty() && l.chars().all(|c| c.is_ascii_alphanumeric()) && !r.is_empty() => {
                cleaned.push_str(r)
            }
            _ => cleaned.push_str(word),
        }
        cleaned.push(' ');
    }
    squash(&cleaned)
}

pub fn strip_quoted(text: &str) -> String {
    let mut out = String::new();
    let mut inside = false;
    let mut escaped = false;
    for c in text.chars() {
        if inside {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '\'' {
                inside = false;
            }
        } else if c == '\'' {
            inside = true;
        } else {
            out.push(c);
        }
    }
    out
}

