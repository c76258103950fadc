//! Builder-pattern back end.
//!
//! A symbol declares the rules generated for it with a `builders` sequence:
//!
//! ```text
//! builders = {{ Expression varSum(Scope scope); int constSum(Context context); }};
//! ```
//!
//! and each reference inside it names, per enclosing rule, the rule to call:
//!
//! ```text
//! #mult.call = { varSum = {{varMult(scope)}}; constSum = {{constMult(context)}}; };
//! ```
//!
//! Generated rules only call builder interfaces; nothing builds a tree.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write};

use thiserror::Error;

use crate::antlr::{self, Ctx, Decor, GenError, GenWarning};
use crate::metadata::{AnnotationStore, AttributeValue, SeqDsl, SeqElement};
use crate::model::{Grammar, Symbol};
use crate::span::SourceSpan;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuilderSignature {
    pub rule_name: String,
    pub return_type: String,
    /// `(type, name)` pairs.
    pub params: Vec<(String, String)>,
}

impl BuilderSignature {
    pub fn is_void(&self) -> bool {
        self.return_type == "void"
    }

    /// `I` + capitalized rule name + `Builder`.
    pub fn interface_name(&self) -> String {
        format!("I{}Builder", capitalize(&self.rule_name))
    }

    /// `get` + capitalized rule name + `Builder`.
    pub fn getter_name(&self) -> String {
        format!("get{}Builder", capitalize(&self.rule_name))
    }

    fn param_list(&self) -> String {
        self.params.iter().map(|(t, n)| format!("{t} {n}")).collect::<Vec<_>>().join(", ")
    }

    fn arg_list(&self) -> String {
        self.params.iter().map(|(_, n)| n.as_str()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for BuilderSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}({})", self.return_type, self.rule_name, self.param_list())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Call {
    pub callee: String,
    pub args: Vec<String>,
}

/// Rule to call at one occurrence, keyed by the enclosing rule.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CallSpec {
    pub calls: Vec<(String, Call)>,
}

impl CallSpec {
    pub fn get(&self, rule: &str) -> Option<&Call> {
        self.calls.iter().find(|(r, _)| r == rule).map(|(_, c)| c)
    }
}

/// Malformed `builders` or `call` value. `index` is the offending token.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{message} at token {index}")]
pub struct DslError {
    pub index: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BuildersDsl;

#[derive(Clone, Copy, Debug, Default)]
pub struct CallDsl;

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

struct Tokens<'a> {
    items: &'a [SeqElement],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn peek(&self) -> Option<&'a SeqElement> {
        self.items.get(self.pos)
    }

    fn at(&self, c: char) -> bool {
        self.peek() == Some(&SeqElement::Punct(c))
    }

    fn eat(&mut self, c: char) -> bool {
        let hit = self.at(c);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn error(&self, message: impl Into<String>) -> DslError {
        let found = match self.peek() {
            Some(t) => format!(", found `{t}`"),
            None => ", found end of sequence".to_string(),
        };
        DslError { index: self.pos, message: format!("{}{found}", message.into()) }
    }

    fn expect(&mut self, c: char) -> Result<(), DslError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, DslError> {
        match self.peek() {
            Some(SeqElement::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    /// `a.b.C<T, U>[]`
    fn type_text(&mut self) -> Result<String, DslError> {
        let mut t = self.ident("a type")?;
        while self.at('.') {
            self.pos += 1;
            t.push('.');
            t.push_str(&self.ident("a name after `.`")?);
        }
        if self.eat('<') {
            let mut args = vec![self.type_text()?];
            while self.eat(',') {
                args.push(self.type_text()?);
            }
            self.expect('>')?;
            let _ = write!(t, "<{}>", args.join(", "));
        }
        while self.eat('[') {
            self.expect(']')?;
            t.push_str("[]");
        }
        Ok(t)
    }
}

impl SeqDsl for BuildersDsl {
    type Output = Vec<BuilderSignature>;
    type Error = DslError;

    fn parse(&self, tokens: &[SeqElement]) -> Result<Vec<BuilderSignature>, DslError> {
        let mut t = Tokens { items: tokens, pos: 0 };
        let mut out: Vec<BuilderSignature> = Vec::new();
        while t.peek().is_some() {
            let start = t.pos;
            let return_type = t.type_text()?;
            if t.at('(') {
                t.pos = start;
                return Err(t.error("missing return type"));
            }
            let rule_name = t.ident("a rule name")?;
            t.expect('(')?;
            let mut params = Vec::new();
            if !t.at(')') {
                loop {
                    let ty = t.type_text()?;
                    let name = t.ident("a parameter name")?;
                    params.push((ty, name));
                    if !t.eat(',') {
                        break;
                    }
                }
            }
            t.expect(')')?;
            t.expect(';')?;
            if out.iter().any(|s| s.rule_name == rule_name) {
                return Err(DslError { index: start, message: format!("rule `{rule_name}` is declared twice") });
            }
            out.push(BuilderSignature { rule_name, return_type, params });
        }
        Ok(out)
    }
}

impl SeqDsl for CallDsl {
    type Output = Call;
    type Error = DslError;

    fn parse(&self, tokens: &[SeqElement]) -> Result<Call, DslError> {
        let mut t = Tokens { items: tokens, pos: 0 };
        let callee = t.ident("a rule name")?;
        if !t.eat('(') {
            return Err(t.error("expected `(` after the rule name"));
        }
        let mut args = Vec::new();
        if !t.at(')') {
            loop {
                match t.peek() {
                    Some(SeqElement::Ident(s)) => args.push(s.clone()),
                    Some(SeqElement::Num(n)) => args.push(n.to_string()),
                    Some(SeqElement::Str(s)) => args.push(format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))),
                    _ => return Err(t.error("unbalanced call: expected an argument")),
                }
                t.pos += 1;
                if !t.eat(',') {
                    break;
                }
            }
        }
        if !t.eat(')') {
            return Err(t.error("unbalanced call: expected `)`"));
        }
        if t.peek().is_some() {
            return Err(t.error("unexpected token after the call"));
        }
        Ok(Call { callee, args })
    }
}

/// Parses a `builders` sequence.
pub fn parse_builders(seq: &[SeqElement]) -> Result<Vec<BuilderSignature>, DslError> {
    BuildersDsl.parse(seq)
}

/// Parses a `call` tuple: one `rule = {{callee(args)}}` field per enclosing
/// rule.
pub fn parse_call(value: &AttributeValue) -> Result<CallSpec, DslError> {
    let Some(fields) = value.as_tuple() else {
        return Err(DslError { index: 0, message: format!("`call` must be a TUPLE, found {}", value.type_name()) });
    };
    let mut spec = CallSpec::default();
    for (i, (rule, v)) in fields.iter().enumerate() {
        let Some(seq) = v.as_seq() else {
            return Err(DslError { index: i, message: format!("call for `{rule}` must be a SEQUENCE") });
        };
        if spec.get(rule).is_some() {
            return Err(DslError { index: i, message: format!("duplicate call for `{rule}`") });
        }
        let call = CallDsl.parse(seq).map_err(|e| DslError { message: format!("call for `{rule}`: {}", e.message), ..e })?;
        spec.calls.push((rule.clone(), call));
    }
    Ok(spec)
}

#[derive(Clone, Debug, Default)]
pub struct BuilderGenConfig {
    pub grammar_name: Option<String>,
    pub header_action: Option<String>,
    /// Java package for the interfaces.
    pub package: Option<String>,
}

#[derive(Clone, Debug)]
pub struct BuilderOutput {
    pub grammar: String,
    /// `(interface name, Java source)`, one per signature, then `IBuilders`.
    pub interfaces: Vec<(String, String)>,
    pub warnings: Vec<GenWarning>,
}

fn err(message: String, span: Option<&SourceSpan>) -> GenError {
    GenError::Builder { message, span: span.cloned() }
}

/// Labels from the callee's camel-case initials: `varMult` gives `vm`,
/// then `vm1`, `vm2`.
struct Labels {
    used: HashSet<String>,
}

impl Labels {
    fn fresh(&mut self, callee: &str) -> String {
        let mut base: String = callee.chars().take(1).collect();
        base.extend(callee.chars().skip(1).filter(|c| c.is_ascii_uppercase()).map(|c| c.to_ascii_lowercase()));
        let mut k = 0;
        loop {
            let l = if k == 0 { base.clone() } else { format!("{base}{k}") };
            if self.used.insert(l.clone()) {
                return l;
            }
            k += 1;
        }
    }
}

const KNOWN: &[&str] = &["builders", "call", "predicate", "antlrName", "antlrHeader"];

/// Generates the ANTLR grammar with builder calls and the builder
/// interfaces.
pub fn generate_builders(grammar: &Grammar, store: &AnnotationStore, config: &BuilderGenConfig) -> Result<BuilderOutput, GenError> {
    let mut warnings = Vec::new();
    let lexical = grammar.lexical_symbols();
    let names = antlr::rule_names(grammar, &lexical)?;
    let fragments = antlr::fragments(grammar, &lexical);

    for (id, ann) in store.iter() {
        for (name, _) in &ann.attributes {
            if !KNOWN.contains(&name.as_str()) {
                warnings.push(GenWarning {
                    span: grammar.span(id).cloned(),
                    message: format!(
                        "attribute `{name}` on {} is ignored by the builder back end",
                        crate::aspect::describe_node(grammar, id)
                    ),
                });
            }
        }
    }

    // signatures per symbol, and every signature by rule name
    let mut sigs: HashMap<&str, Vec<BuilderSignature>> = HashMap::new();
    let mut by_rule: HashMap<String, (&str, BuilderSignature)> = HashMap::new();
    let lexer_names: HashSet<&str> = lexical.iter().map(|n| names[n].as_str()).collect();
    for sym in &grammar.symbols {
        let Some(v) = store.lookup(sym.id, "builders") else { continue };
        let span = grammar.span(sym.id);
        let Some(seq) = v.as_seq() else {
            return Err(err(format!("`builders` on `{}` must be a SEQUENCE, found {}", sym.name, v.type_name()), span));
        };
        if lexical.contains(&sym.name) {
            return Err(err(format!("lexical symbol `{}` cannot declare builders", sym.name), span));
        }
        let list = parse_builders(seq).map_err(|e| err(format!("`builders` on `{}`: {e}", sym.name), span))?;
        for s in &list {
            if !s.rule_name.starts_with(|c: char| c.is_ascii_lowercase()) {
                return Err(err(format!("builder rule `{}` must start with a lowercase letter", s.rule_name), span));
            }
            if lexer_names.contains(s.rule_name.as_str()) {
                return Err(err(format!("builder rule `{}` clashes with a lexer rule", s.rule_name), span));
            }
            if let Some((other, _)) = by_rule.insert(s.rule_name.clone(), (sym.name.as_str(), s.clone())) {
                return Err(err(format!("builder rule `{}` is declared by `{other}` and `{}`", s.rule_name, sym.name), span));
            }
        }
        sigs.insert(sym.name.as_str(), list);
    }

    let name = antlr::grammar_name(grammar, store, config.grammar_name.as_deref())?;
    let header = antlr::header(grammar, store, config.header_action.as_deref())?;
    let mut out = String::new();
    antlr::write_prelude(&mut out, &name, header.as_deref());
    out.push_str(
        "\n@members {\n    private IBuilders myBuilders;\n\n    public void setBuilders(IBuilders builders) {\n        myBuilders = builders;\n    }\n}\n",
    );

    let mut interfaces = Vec::new();
    for sym in &grammar.symbols {
        if lexical.contains(&sym.name) {
            let mut head = String::new();
            if fragments.contains(&sym.name) {
                head.push_str("fragment ");
            }
            head.push_str(&names[&sym.name]);
            let alts: Vec<String> = sym
                .productions
                .iter()
                .map(|p| {
                    let mut s = String::new();
                    antlr::render(&mut s, &p.body, Ctx::Body, &names, &Decor::default());
                    s
                })
                .collect();
            antlr::write_rule(&mut out, &head, &alts);
            continue;
        }
        let Some(list) = sigs.get(sym.name.as_str()) else { continue };
        for sig in list {
            let (rule, methods) = builder_rule(grammar, store, &names, &lexical, &sigs, &by_rule, sym, sig)?;
            out.push_str(&rule);
            interfaces.push((sig.interface_name(), interface_source(config, sig, &methods)));
        }
    }
    for sym in &grammar.symbols {
        if !lexical.contains(&sym.name) && !sigs.contains_key(sym.name.as_str()) {
            warnings.push(GenWarning {
                span: grammar.span(sym.id).cloned(),
                message: format!("symbol `{}` declares no builders and is not generated", sym.name),
            });
        }
    }
    let all: Vec<&BuilderSignature> = grammar
        .symbols
        .iter()
        .filter_map(|s| sigs.get(s.name.as_str()))
        .flatten()
        .collect();
    interfaces.push(("IBuilders".to_string(), factory_source(config, &all)));
    Ok(BuilderOutput { grammar: out, interfaces, warnings })
}

#[allow(clippy::too_many_arguments)]
fn builder_rule(
    grammar: &Grammar,
    store: &AnnotationStore,
    names: &HashMap<String, String>,
    lexical: &HashSet<String>,
    sigs: &HashMap<&str, Vec<BuilderSignature>>,
    by_rule: &HashMap<String, (&str, BuilderSignature)>,
    sym: &Symbol,
    sig: &BuilderSignature,
) -> Result<(String, Vec<(String, String)>), GenError> {
    let mut labels = Labels {
        used: sig.params.iter().map(|(_, n)| n.clone()).chain(["result".into(), "builder".into()]).collect(),
    };
    let mut methods: Vec<(String, String)> = Vec::new();
    let mut alts = Vec::new();
    for prod in &sym.productions {
        let mut decor = Decor::default();
        for (id, target) in antlr::occurrences(&prod.body) {
            let span = grammar.span(id);
            if lexical.contains(&target) {
                if store.lookup(id, "call").is_some() {
                    return Err(err(format!("`call` on lexical symbol `{target}` in `{}`", sym.name), span));
                }
                continue;
            }
            if !sigs.contains_key(target.as_str()) {
                return Err(err(
                    format!("`{target}` is reached from builder rule `{}` but declares no builders", sig.rule_name),
                    span,
                ));
            }
            let Some(v) = store.lookup(id, "call") else {
                return Err(err(format!("reference to `{target}` in `{}` has no `call`", sym.name), span));
            };
            let spec = parse_call(v).map_err(|e| err(format!("`call` on `{target}`: {e}"), span))?;
            for (rule, _) in &spec.calls {
                if !sigs[sym.name.as_str()].iter().any(|s| &s.rule_name == rule) {
                    return Err(err(format!("`call` names `{rule}`, which is not a builder rule of `{}`", sym.name), span));
                }
            }
            let Some(call) = spec.get(&sig.rule_name) else {
                return Err(err(format!("reference to `{target}` has no call for `{}`", sig.rule_name), span));
            };
            let Some((owner, callee)) = by_rule.get(&call.callee) else {
                return Err(err(format!("`{}` is not a builder rule", call.callee), span));
            };
            if *owner != target {
                return Err(err(format!("`{}` is a builder rule of `{owner}`, not of `{target}`", call.callee), span));
            }
            if callee.params.len() != call.args.len() {
                return Err(err(
                    format!("`{}` takes {} argument(s), {} given", callee.rule_name, callee.params.len(), call.args.len()),
                    span,
                ));
            }
            if callee.is_void() {
                return Err(err(format!("`{}` returns void and cannot be passed to a builder", callee.rule_name), span));
            }
            match methods.iter().find(|(m, _)| m == &callee.rule_name) {
                Some((_, ty)) if ty != &callee.return_type => {
                    return Err(err(format!("`{}` is used with return types `{ty}` and `{}`", callee.rule_name, callee.return_type), span));
                }
                Some(_) => {}
                None => methods.push((callee.rule_name.clone(), callee.return_type.clone())),
            }
            let label = labels.fresh(&callee.rule_name);
            decor.after.insert(id, format!("builder.{}({label});", callee.rule_name));
            decor.labels.insert(id, label);
            decor.callee.insert(id, callee.rule_name.clone());
            if !call.args.is_empty() {
                decor.args.insert(id, call.args.join(", "));
            }
        }
        let mut parts = Vec::new();
        if let Some(v) = store.lookup(prod.id, "predicate") {
            match v.as_str() {
                Some(p) => parts.push(format!("({p})=>")),
                None => return Err(err(format!("`predicate` must be a STRING, found {}", v.type_name()), grammar.span(prod.id))),
            }
        }
        let mut body = String::new();
        antlr::render(&mut body, &prod.body, Ctx::Body, names, &decor);
        if !body.is_empty() {
            parts.push(body);
        }
        alts.push(parts.join(" "));
    }

    let mut head = sig.rule_name.clone();
    if !sig.params.is_empty() {
        let _ = write!(head, " [{}]", sig.param_list());
    }
    if !sig.is_void() {
        let _ = write!(head, " returns [{} result]", sig.return_type);
    }
    let _ = write!(
        head,
        "\n@init {{\n    {} builder = myBuilders.{}({});\n}}",
        sig.interface_name(),
        sig.getter_name(),
        sig.arg_list()
    );
    if !sig.is_void() {
        let epilogue = "{result = builder.getResult();}";
        alts = if alts.len() == 1 {
            let a = &alts[0];
            vec![if a.is_empty() { epilogue.to_string() } else { format!("{a} {epilogue}") }]
        } else {
            vec![format!("({}) {epilogue}", alts.join(" | "))]
        };
    }
    let mut text = String::new();
    antlr::write_rule(&mut text, &head, &alts);
    Ok((text, methods))
}

fn package_line(config: &BuilderGenConfig) -> String {
    config.package.as_ref().map(|p| format!("package {p};\n\n")).unwrap_or_default()
}

fn interface_source(config: &BuilderGenConfig, sig: &BuilderSignature, methods: &[(String, String)]) -> String {
    let mut s = package_line(config);
    let _ = writeln!(s, "public interface {} {{", sig.interface_name());
    for (m, ty) in methods {
        let _ = writeln!(s, "    void {m}({ty} value);");
    }
    if !sig.is_void() {
        let _ = writeln!(s, "    {} getResult();", sig.return_type);
    }
    s.push_str("}\n");
    s
}

fn factory_source(config: &BuilderGenConfig, sigs: &[&BuilderSignature]) -> String {
    let mut s = package_line(config);
    s.push_str("public interface IBuilders {\n");
    for sig in sigs {
        let _ = writeln!(s, "    {} {}({});", sig.interface_name(), sig.getter_name(), sig.param_list());
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aspect::apply;
    use crate::syntax::{parse_aspect, parse_grammar, parse_value};
    use crate::template::{resolve, MemoryLoader};

    fn seq(text: &str) -> Vec<SeqElement> {
        parse_value(text).unwrap().as_seq().unwrap().to_vec()
    }

    #[test]
    fn signatures() {
        let s = parse_builders(&seq("{{ Expression varSum(Scope scope); int constSum(Context context); }}")).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].to_string(), "Expression varSum(Scope scope)");
        assert_eq!(s[1].params, [("Context".to_string(), "context".to_string())]);
        assert_eq!(s[0].interface_name(), "IVarSumBuilder");
        assert_eq!(s[0].getter_name(), "getVarSumBuilder");

        let v = parse_builders(&seq("{{ void f(); }}")).unwrap();
        assert_eq!(v[0].params.len(), 0);
        assert!(v[0].is_void());

        let e = parse_builders(&seq("{{ f(); }}")).unwrap_err();
        assert!(e.message.contains("missing return type"), "{e}");

        let g = parse_builders(&seq("{{ java.util.List<a.B, C> f(int[] xs, Map<K, V> m); }}")).unwrap();
        assert_eq!(g[0].return_type, "java.util.List<a.B, C>");
        assert_eq!(g[0].params[0].0, "int[]");
        assert!(parse_builders(&seq("{{ int f() }}")).is_err());
        assert!(parse_builders(&seq("{{ int f(); int f(); }}")).is_err());
    }

    #[test]
    fn calls() {
        let spec = parse_call(&parse_value("{ varSum = {{varMult(scope)}}; constSum = {{constMult(context)}}; }").unwrap()).unwrap();
        assert_eq!(spec.get("varSum"), Some(&Call { callee: "varMult".into(), args: vec!["scope".into()] }));
        assert_eq!(spec.get("constSum").unwrap().callee, "constMult");
        let spec = parse_call(&parse_value("{ a = {{b()}}; }").unwrap()).unwrap();
        assert_eq!(spec.get("a"), Some(&Call { callee: "b".into(), args: vec![] }));
        let e = parse_call(&parse_value("{ a = {{b(}}; }").unwrap()).unwrap_err();
        assert!(e.message.contains("unbalanced"), "{e}");
        assert!(parse_call(&parse_value("{{b()}}").unwrap()).is_err());
    }

    #[test]
    fn labels() {
        let mut l = Labels { used: HashSet::from(["scope".to_string()]) };
        assert_eq!(l.fresh("varMult"), "vm");
        assert_eq!(l.fresh("varMult"), "vm1");
        assert_eq!(l.fresh("value"), "v");
        assert_eq!(l.fresh("scope"), "s");
    }

    fn build(grammar: &str, aspect: &str) -> Result<BuilderOutput, GenError> {
        let g = resolve(&parse_grammar(grammar, "b.gr").unwrap(), &MemoryLoader::new()).unwrap();
        let a = parse_aspect(aspect, "b.aspect").unwrap();
        let (store, _) = apply(&g, &a, &AnnotationStore::for_grammar(&g)).unwrap();
        generate_builders(&g, &store, &BuilderGenConfig::default())
    }

    #[test]
    fn minimal_rule() {
        let out = build("name : ID ; ID : ['a'--'z']+ ;", "name [[ builders = {{ String name(); }}; ]];").unwrap();
        assert!(
            out.grammar.contains(
                "\nname returns [String result]\n@init {\n    INameBuilder builder = myBuilders.getNameBuilder();\n}\n    : ID {result = builder.getResult();}\n    ;\n"
            ),
            "{}",
            out.grammar
        );
        assert_eq!(out.interfaces[0].1, "public interface INameBuilder {\n    String getResult();\n}\n");
        assert_eq!(out.interfaces[1].1, "public interface IBuilders {\n    INameBuilder getNameBuilder();\n}\n");
    }

    #[test]
    fn chain_errors() {
        let g = "a : b ; b : c c ; c : 'y' ;";
        let e = build(g, "a [[ builders = {{ int a(); }}; ]];").unwrap_err();
        assert!(e.to_string().contains("declares no builders"), "{e}");
        let e = build(g, "a [[ builders = {{ int a(); }}; ]]; b [[ builders = {{ int b(); }}; ]];").unwrap_err();
        assert!(e.to_string().contains("no `call`"), "{e}");
        let e = build(
            "a : b ; b : c c ; c : 'y' ;",
            "a [[ builders = {{ int a(); }}; ]] --> b [[ #b.call = { a = {{b(x)}}; }; ]];
             b [[ builders = {{ int b(); }}; ]];",
        )
        .unwrap_err();
        assert!(e.to_string().contains("takes 0 argument"), "{e}");
        let e = build(
            "a : b ; b : c c ; c : 'y' ;",
            "a [[ builders = {{ int a(); }}; ]] --> b [[ #b.call = { a = {{b()}}; }; ]];
             b [[ builders = {{ void b(); }}; ]];",
        )
        .unwrap_err();
        assert!(e.to_string().contains("void"), "{e}");
    }
}
