//! Canonical printer for grammar units.

use std::fmt::Write;

use crate::metadata::AttributeValue;
use crate::model::{ClassItem, Expr, ExprKind, Grammar, Production, Symbol};
use crate::syntax::ParsedUnit;
use crate::template::{ImportTarget, TemplateBody, TemplateDef};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Ctx {
    /// Whole production body.
    Top,
    /// Branch of an alternative.
    Branch,
    /// Element of a sequence.
    Item,
    /// Operand of a postfix operator.
    Operand,
}

/// Prints one expression in grammar syntax.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e, Ctx::Top);
    out
}

pub(crate) fn quote(text: &str) -> String {
    let mut s = String::from("'");
    for c in text.chars() {
        match c {
            '\r' => s.push_str("\\r"),
            '\n' => s.push_str("\\n"),
            '\t' => s.push_str("\\t"),
            '\\' => s.push_str("\\\\"),
            '\'' => s.push_str("\\'"),
            c => s.push(c),
        }
    }
    s.push('\'');
    s
}

fn class(items: &[ClassItem]) -> String {
    let parts: Vec<String> = items
        .iter()
        .map(|i| match i {
            ClassItem::Char(c) => quote(&c.to_string()),
            ClassItem::Range(a, b) => format!("{}--{}", quote(&a.to_string()), quote(&b.to_string())),
        })
        .collect();
    format!("[{}]", parts.join(" "))
}

fn expr(out: &mut String, e: &Expr, ctx: Ctx) {
    match &e.kind {
        ExprKind::Sequence(items) if items.is_empty() => {
            if ctx != Ctx::Top {
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
                expr(out, item, Ctx::Item);
            }
            if paren {
                out.push(')');
            }
        }
        ExprKind::Alternative(branches) => {
            let paren = ctx != Ctx::Top;
            if paren {
                out.push('(');
            }
            for (i, b) in branches.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                expr(out, b, Ctx::Branch);
            }
            if paren {
                out.push(')');
            }
        }
        ExprKind::Iteration(inner, kind) => {
            let paren = ctx == Ctx::Operand;
            if paren {
                out.push('(');
            }
            expr(out, inner, Ctx::Operand);
            out.push(kind.suffix());
            if paren {
                out.push(')');
            }
        }
        ExprKind::SymbolRef(name) => out.push_str(name),
        ExprKind::Literal(text) => out.push_str(&quote(text)),
        ExprKind::CharClass(items) => out.push_str(&class(items)),
        ExprKind::Placeholder(name) => {
            out.push('$');
            out.push_str(name);
        }
        ExprKind::Instance(call) => {
            let args: Vec<&str> = call.args.iter().map(|a| a.text.trim()).collect();
            let _ = write!(out, "{}<{}>", call.template, args.join(", "));
        }
    }
}

fn rule(out: &mut String, name: &str, productions: &[Production], indent: &str) {
    if productions.len() == 1 {
        let body = print_expr(&productions[0].body);
        if body.is_empty() {
            let _ = writeln!(out, "{indent}{name} : ;");
        } else {
            let _ = writeln!(out, "{indent}{name} : {body} ;");
        }
        return;
    }
    let _ = writeln!(out, "{indent}{name}");
    for (i, p) in productions.iter().enumerate() {
        let sep = if i == 0 { ":" } else { "||" };
        let body = print_expr(&p.body);
        if body.is_empty() {
            let _ = writeln!(out, "{indent}    {sep}");
        } else {
            let _ = writeln!(out, "{indent}    {sep} {body}");
        }
    }
    let _ = writeln!(out, "{indent}    ;");
}

/// One rule, `:`-separated, ending in a newline.
pub fn print_symbol(sym: &Symbol) -> String {
    let mut out = String::new();
    rule(&mut out, &sym.name, &sym.productions, "");
    out
}

fn template(out: &mut String, t: &TemplateDef) {
    let params: Vec<String> = t.params.iter().map(|p| format!("{} ${}", p.kind, p.name)).collect();
    let _ = writeln!(out, "{} {}<{}> {{", t.kind.keyword(), t.name, params.join(", "));
    match &t.body {
        TemplateBody::Rules(rules) => {
            for r in rules {
                rule(out, &r.name.to_string(), &r.productions, "    ");
            }
        }
        TemplateBody::Expr(e) => {
            let _ = writeln!(out, "    {} ;", print_expr(e));
        }
        TemplateBody::Productions(prods) => {
            let bodies: Vec<String> = prods.iter().map(|p| print_expr(&p.body)).collect();
            let _ = writeln!(out, "    {} ;", bodies.join(" || "));
        }
    }
    out.push_str("}\n");
}

/// Canonical text of a unit: imports, then templates, then rules.
pub fn print_grammar(unit: &ParsedUnit) -> String {
    let mut out = String::new();
    for imp in &unit.imports {
        match &imp.target {
            ImportTarget::Unit(name) => {
                let _ = writeln!(out, "import {name};");
            }
            ImportTarget::Instance(call) => {
                let args: Vec<&str> = call.args.iter().map(|a| a.text.trim()).collect();
                let _ = writeln!(out, "import {}<{}>;", call.template, args.join(", "));
            }
        }
    }
    for t in &unit.templates {
        template(&mut out, t);
    }
    for sym in &unit.rules {
        rule(&mut out, &sym.name, &sym.productions, "");
    }
    out
}

/// Canonical text of a resolved grammar.
pub fn print_resolved(grammar: &Grammar) -> String {
    grammar.symbols.iter().map(print_symbol).collect()
}

/// Concrete syntax of a metadata value.
pub fn print_value(value: &AttributeValue) -> String {
    value.to_string()
}
