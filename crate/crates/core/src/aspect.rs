//! Aspects: queries paired with metadata assignments, woven onto a grammar.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::metadata::{AnnotationStore, AttributeValue, Origin};
use crate::model::{ExprKind, Grammar, NodeId, NodeRef};
use crate::query::{match_pattern, Binding, QueryPattern, SlotId};
use crate::span::SourceSpan;
use crate::syntax::print_expr;

#[derive(Clone, Debug)]
pub struct Aspect {
    /// File the aspect was read from.
    pub origin: String,
    /// `@grammar [[ ... ]]` entries.
    pub grammar: Vec<Assignment>,
    pub rules: Vec<AspectRule>,
}

#[derive(Clone, Debug)]
pub struct AspectRule {
    pub pattern: QueryPattern,
    pub assignments: Vec<Assignment>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub target: Target,
    pub attribute: String,
    pub value: AttributeValue,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    /// The grammar node itself.
    Grammar,
    /// Whatever a query variable is bound to.
    Var(String),
    /// The node matched at an inline block.
    Slot(SlotId),
    /// Every reference to a symbol inside the node matched at a block.
    Occurrences { name: String, scope: SlotId },
}

#[derive(Clone, Debug, Serialize)]
pub struct Attachment {
    pub node: String,
    #[serde(skip)]
    pub id: NodeId,
    pub attribute: String,
    pub value: String,
    pub origin: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Warning {
    pub location: String,
    pub message: String,
    #[serde(skip)]
    pub span: SourceSpan,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct WeaveReport {
    /// Number of bindings per rule, in rule order.
    pub matches: Vec<usize>,
    pub attachments: Vec<Attachment>,
    pub warnings: Vec<Warning>,
}

#[derive(Clone, Debug, Error)]
pub enum WeaveError {
    #[error("attribute `{attribute}` is already attached to {node} (first at {first})")]
    Conflict { attribute: String, node: String, first: String, span: SourceSpan },
    #[error("rule assigns different values of `{attribute}` to {node}")]
    Inconsistent { attribute: String, node: String, span: SourceSpan },
}

impl WeaveError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            WeaveError::Conflict { span, .. } | WeaveError::Inconsistent { span, .. } => span,
        }
    }
}

/// Human-readable name of a node, for reports and diagnostics.
pub fn describe_node(grammar: &Grammar, id: NodeId) -> String {
    let index = grammar.index();
    let place = grammar.span(id).map(|s| format!(" at {s}")).unwrap_or_default();
    match index.get(&id) {
        Some(NodeRef::Grammar(_)) => "the grammar".to_string(),
        Some(NodeRef::Symbol(s)) => format!("symbol `{}`", s.name),
        Some(NodeRef::Production(s, p)) => {
            let k = s.productions.iter().position(|q| q.id == p.id).unwrap_or(0) + 1;
            format!("production {k} of `{}`", s.name)
        }
        Some(NodeRef::Expr(e)) => format!("`{}`{place}", print_expr(e)),
        None => format!("node {id}"),
    }
}

fn targets(grammar: &Grammar, index: &HashMap<NodeId, NodeRef<'_>>, target: &Target, b: &Binding) -> Vec<NodeId> {
    match target {
        Target::Grammar => vec![grammar.id],
        Target::Var(v) => b.vars.get(v).map(|x| x.nodes()).unwrap_or_default(),
        Target::Slot(s) => b.slots.get(s).copied().into_iter().collect(),
        Target::Occurrences { name, scope } => {
            let Some(root) = b.slots.get(scope) else { return Vec::new() };
            let mut out = Vec::new();
            let mut collect = |e: &crate::model::Expr| {
                e.visit(&mut |n| {
                    if matches!(&n.kind, ExprKind::SymbolRef(r) if r == name) {
                        out.push(n.id);
                    }
                })
            };
            match index.get(root) {
                Some(NodeRef::Symbol(s)) => s.productions.iter().for_each(|p| collect(&p.body)),
                Some(NodeRef::Production(_, p)) => collect(&p.body),
                Some(NodeRef::Expr(e)) => collect(e),
                _ => {}
            }
            out
        }
    }
}

/// Weaves `aspect` onto `grammar`, starting from `store`. The input store is
/// left untouched; on success the extended copy is returned.
pub fn apply(grammar: &Grammar, aspect: &Aspect, store: &AnnotationStore) -> Result<(AnnotationStore, WeaveReport), WeaveError> {
    let index = grammar.index();
    let mut out = store.clone();
    let mut report = WeaveReport::default();

    let attach = |out: &mut AnnotationStore,
                      report: &mut WeaveReport,
                      node: NodeId,
                      a: &Assignment|
     -> Result<(), WeaveError> {
        let origin = Origin::at(&aspect.origin, &a.span);
        if out.lookup(node, &a.attribute).is_some() {
            let first = out
                .origin(node, &a.attribute)
                .map(|o| o.location.clone())
                .unwrap_or_else(|| "an earlier attachment".into());
            return Err(WeaveError::Conflict {
                attribute: a.attribute.clone(),
                node: describe_node(grammar, node),
                first,
                span: a.span.clone(),
            });
        }
        out.attach_from(node, &a.attribute, a.value.clone(), Some(origin.clone()))
            .expect("target nodes come from the grammar");
        report.attachments.push(Attachment {
            node: describe_node(grammar, node),
            id: node,
            attribute: a.attribute.clone(),
            value: a.value.to_string(),
            origin: origin.location,
        });
        Ok(())
    };

    for a in &aspect.grammar {
        attach(&mut out, &mut report, grammar.id, a)?;
    }

    for rule in &aspect.rules {
        let bindings = match_pattern(grammar, &out, &rule.pattern);
        report.matches.push(bindings.len());
        if bindings.is_empty() {
            report.warnings.push(Warning {
                location: rule.span.to_string(),
                message: "rule matches nothing in this grammar".into(),
                span: rule.span.clone(),
            });
            continue;
        }
        // (node, attribute) -> assignment, deduplicated within the rule
        let mut planned: Vec<(NodeId, &Assignment)> = Vec::new();
        for a in &rule.assignments {
            let mut hits = 0;
            for b in &bindings {
                for node in targets(grammar, &index, &a.target, b) {
                    hits += 1;
                    match planned.iter().find(|(n, p)| *n == node && p.attribute == a.attribute) {
                        Some((_, prev)) if prev.value == a.value => {}
                        Some(_) => {
                            return Err(WeaveError::Inconsistent {
                                attribute: a.attribute.clone(),
                                node: describe_node(grammar, node),
                                span: a.span.clone(),
                            })
                        }
                        None => planned.push((node, a)),
                    }
                }
            }
            if hits == 0 {
                if let Target::Occurrences { name, .. } = &a.target {
                    report.warnings.push(Warning {
                        location: a.span.to_string(),
                        message: format!("no occurrence of `{name}` to attach `{}` to", a.attribute),
                        span: a.span.clone(),
                    });
                }
            }
        }
        for (node, a) in planned {
            attach(&mut out, &mut report, node, a)?;
        }
    }
    Ok((out, report))
}
