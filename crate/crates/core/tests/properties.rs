mod common;

use std::collections::{BTreeMap, HashSet};

use common::*;
use gramweave::antlr::substitute_action;
use gramweave::aspect::apply;
use gramweave::metadata::{AnnotationStore, AttributeValue, SeqElement, SEQ_PUNCTUATION};
use gramweave::model::{grammars_structurally_equal, structural_equals, symbols_structurally_equal, Expr, ExprKind, Grammar};
use gramweave::query::match_pattern;
use gramweave::syntax::{parse_aspect, parse_grammar, parse_value, print_resolved, print_value};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn seeded_grammar(seed: u64) -> Grammar {
    random_grammar(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Same structure, fresh ids.
fn recreate(e: &Expr) -> Expr {
    let kind = match &e.kind {
        ExprKind::Sequence(c) => ExprKind::Sequence(c.iter().map(recreate).collect()),
        ExprKind::Alternative(c) => ExprKind::Alternative(c.iter().map(recreate).collect()),
        ExprKind::Iteration(c, k) => ExprKind::Iteration(Box::new(recreate(c)), *k),
        other => other.clone(),
    };
    Expr::new(kind)
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-zA-Z0-9_]{0,6}"
}

fn text() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![Just('a'), Just(' '), Just('\''), Just('\\'), Just('\n'), Just('#'), Just('é')], 0..8)
        .prop_map(|v| v.into_iter().collect())
}

fn seq_element() -> impl Strategy<Value = SeqElement> {
    let punct: Vec<char> = SEQ_PUNCTUATION.chars().collect();
    let leaf = prop_oneof![
        ident().prop_map(SeqElement::Ident),
        text().prop_map(SeqElement::Str),
        (0i64..100_000).prop_map(SeqElement::Num),
        proptest::sample::select(punct).prop_map(SeqElement::Punct),
    ];
    leaf.prop_recursive(2, 12, 4, |inner| {
        prop_oneof![
            proptest::collection::vec(inner, 0..4).prop_map(SeqElement::Seq),
        ]
    })
}

fn value() -> impl Strategy<Value = AttributeValue> {
    let leaf = prop_oneof![
        ident().prop_map(AttributeValue::Id),
        text().prop_map(AttributeValue::Str),
        (-100_000i64..100_000).prop_map(AttributeValue::Int),
        proptest::collection::vec(seq_element(), 0..6).prop_map(AttributeValue::Seq),
    ];
    leaf.prop_recursive(2, 16, 4, |inner| {
        proptest::collection::btree_map(ident(), inner, 0..4)
            .prop_map(|m| AttributeValue::Tuple(m.into_iter().collect()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printing_round_trips(seed in any::<u64>()) {
        let g = seeded_grammar(seed);
        let text = print_resolved(&g);
        let unit = parse_grammar(&text, "again.gr").unwrap();
        prop_assert_eq!(unit.rules.len(), g.symbols.len());
        for (a, b) in g.symbols.iter().zip(&unit.rules) {
            prop_assert!(symbols_structurally_equal(a, b), "{}", text);
        }
        // printing is a fixpoint after one round
        let again = Grammar::new("again.gr", unit.rules.clone());
        prop_assert_eq!(print_resolved(&again), text);
    }

    #[test]
    fn structural_equality_ignores_ids(seed in any::<u64>()) {
        let g = seeded_grammar(seed);
        for sym in &g.symbols {
            for p in &sym.productions {
                let copy = recreate(&p.body);
                prop_assert!(structural_equals(&p.body, &p.body));
                prop_assert!(structural_equals(&p.body, &copy));
                prop_assert!(structural_equals(&copy, &p.body));
                prop_assert_ne!(copy.id, p.body.id);
            }
        }
    }

    #[test]
    fn structural_equality_is_transitive(a in any::<u64>(), b in any::<u64>()) {
        let (ga, gb) = (seeded_grammar(a), seeded_grammar(b));
        let eq = grammars_structurally_equal(&ga, &gb);
        prop_assert_eq!(eq, grammars_structurally_equal(&gb, &ga));
        prop_assert_eq!(eq, print_resolved(&ga) == print_resolved(&gb));
    }

    #[test]
    fn node_ids_are_unique(seed in any::<u64>()) {
        let g = seeded_grammar(seed);
        let walk = g.walk();
        let ids: HashSet<_> = walk.iter().map(|v| v.id).collect();
        prop_assert_eq!(ids.len(), walk.len());
        prop_assert!(!ids.contains(&g.id));
    }

    #[test]
    fn values_round_trip(v in value()) {
        let text = print_value(&v);
        let back = parse_value(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        prop_assert_eq!(back, v, "{}", text);
    }

    #[test]
    fn actions_without_references_are_unchanged(body in "[a-z =;+(){}]{0,30}") {
        prop_assert_eq!(substitute_action(&body, &BTreeMap::new(), "r").unwrap(), body);
    }

    #[test]
    fn matching_is_deterministic_and_local(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_grammar(&mut rng);
        let store = random_store(&mut rng, &g);
        let q = random_pattern(&mut rng);
        let first = match_pattern(&g, &store, &q);
        prop_assert_eq!(&first, &match_pattern(&g, &store, &q));
        let index = g.index();
        for b in &first {
            let sym = g.symbols.iter().find(|s| s.id == b.symbol).unwrap();
            let own: HashSet<_> = sym.productions.iter().flat_map(|p| {
                let mut ids = vec![p.id];
                p.body.visit(&mut |e| ids.push(e.id));
                ids
            }).chain([sym.id]).collect();
            for bound in b.vars.values() {
                for id in bound.nodes() {
                    prop_assert!(own.contains(&id) && index.contains_key(&id));
                }
            }
        }
    }
}

fn disjoint_aspect(attr: &str, target: &str) -> String {
    format!("{target} [[ {attr} = 1; ]] $:--> .. [[ {attr}P; ]] ;")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn disjoint_aspects_commute(i in 0usize..6, j in 0usize..6) {
        let g = grammar(EXPR, "expr.gr");
        let names = ["const", "varDecl", "type", "sum", "mult", "factor"];
        let a = parse_aspect(&disjoint_aspect("x", names[i]), "a").unwrap();
        let b = parse_aspect(&disjoint_aspect("y", names[j]), "b").unwrap();
        let empty = AnnotationStore::for_grammar(&g);
        let (ab, _) = apply(&g, &a, &empty).unwrap();
        let (ab, _) = apply(&g, &b, &ab).unwrap();
        let (ba, _) = apply(&g, &b, &empty).unwrap();
        let (ba, _) = apply(&g, &a, &ba).unwrap();
        prop_assert!(ab == ba);
        let prods = |n: &str| g.lookup(n).unwrap().productions.len();
        prop_assert_eq!(ab.len(), 2 + prods(names[i]) + prods(names[j]));
    }
}

#[test]
fn weaving_leaves_the_input_store_alone() {
    let g = grammar(EXPR, "expr.gr");
    let a = parse_aspect(SUM_ASPECT, "sum.aspect").unwrap();
    let empty = AnnotationStore::for_grammar(&g);
    let (woven, _) = apply(&g, &a, &empty).unwrap();
    assert!(empty.is_empty());
    assert_eq!(woven.len(), 4);
}
