mod common;

use std::path::Path;
use std::process::Command;

use common::examples_dir;

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gramweave")).args(args).current_dir(examples_dir()).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_counts() {
    let (code, out, err) = run(&["check", "expr.gr"]);
    assert_eq!((code, out.as_str(), err.as_str()), (0, "9 symbols, 11 productions\n", ""));
    let (code, out, _) = run(&["check", "binop.gr"]);
    assert_eq!((code, out.as_str()), (0, "5 symbols, 7 productions\n"));
}

#[test]
fn query_lines() {
    let (code, out, _) = run(&["query", "-e", "#Op --> #Arg (#Sign #Arg)* ;", "expr.gr"]);
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "Op=symbol:expr.gr:4:1 Arg=expr:expr.gr:4:7,expr.gr:4:17 Sign=expr:expr.gr:4:13\n\
         Op=symbol:expr.gr:5:1 Arg=expr:expr.gr:5:8,expr.gr:5:20 Sign=expr:expr.gr:5:16\n"
    );
    let (code, out, _) = run(&["query", "-e", "#Rec --> #Rec .. ;", "expr.gr"]);
    assert_eq!((code, out.as_str()), (0, ""));
}

#[test]
fn query_json() {
    let (code, out, _) = run(&["query", "--format", "json", "-e", "#Op --> #Arg (#Sign #Arg)* ;", "expr.gr"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let bindings = v["bindings"].as_array().unwrap();
    assert_eq!(bindings.len(), 2);
    assert_eq!(bindings[0]["symbol"], "sum");
    assert_eq!(bindings[1]["vars"]["Sign"]["kind"], "expr");
}

#[test]
fn query_conditions_see_aspects() {
    let (code, out, _) = run(&["query", "--aspect", "leftrec.aspect", "-e", "#N { leftRecursive; }", "expr.gr"]);
    assert_eq!((code, out.as_str()), (0, ""));
    let (code, out, _) = run(&["query", "--aspect", "sum.aspect", "-e", "#N { returns : ID; }", "expr.gr"]);
    assert_eq!((code, out.as_str()), (0, "N=symbol:expr.gr:4:1\n"));
}

#[test]
fn weave_report() {
    let (code, out, err) = run(&["weave", "expr.gr", "--aspect", "sum.aspect"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.ends_with("4 attribute(s) attached\n"), "{out}");
    let (code, out, _) = run(&["weave", "--format", "json", "expr.gr", "--aspect", "sum.aspect"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v[0]["report"]["attachments"].as_array().unwrap().len(), 4);
    assert_eq!(v[0]["report"]["matches"], serde_json::json!([1]));
}

#[test]
fn weaving_twice_conflicts() {
    let (code, out, err) = run(&["weave", "expr.gr", "--aspect", "sum.aspect", "--aspect", "sum.aspect"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.starts_with("sum.aspect:1:7: error: attribute `returns` is already attached"), "{err}");
}

#[test]
fn vacuous_rules_warn() {
    let (code, _, err) = run(&["check", "newline.gr", "--aspect", "leftrec.aspect"]);
    assert_eq!(code, 0);
    assert_eq!(err, "leftrec.aspect:1:1: warning: rule matches nothing in this grammar\n");
}

#[test]
fn gen_antlr_writes_grammar() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = run(&["gen-antlr", "expr.gr", "--aspect", "sum.aspect", "-o", path(dir.path())]);
    assert_eq!((code, out.as_str(), err.as_str()), (0, "", ""));
    let text = std::fs::read_to_string(dir.path().join("Expr.g")).unwrap();
    assert!(text.starts_with("grammar Expr;\n"));
    let (code, _, _) = run(&["gen-antlr", "expr.gr", "--grammar-name", "Calc", "-o", path(dir.path())]);
    assert_eq!(code, 0);
    assert!(dir.path().join("Calc.g").is_file());
}

#[test]
fn gen_builders_writes_interfaces() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["gen-builders", "expr.gr", "--aspect", "builders.aspect", "-o", path(dir.path())]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(
        err,
        "expr.gr:2:1: warning: symbol `varDecl` declares no builders and is not generated\n\
         expr.gr:3:1: warning: symbol `type` declares no builders and is not generated\n"
    );
    let mut files: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    assert_eq!(
        files,
        [
            "Expr.g",
            "IBuilders.java",
            "IConstFactorBuilder.java",
            "IConstMultBuilder.java",
            "IConstSumBuilder.java",
            "IConstantBuilder.java",
            "IVarFactorBuilder.java",
            "IVarMultBuilder.java",
            "IVarSumBuilder.java"
        ]
    );
}

#[test]
fn bad_aspect_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.aspect");
    std::fs::write(&bad, "sum [[ returns = ; ]];\n").unwrap();
    let out = dir.path().join("out");
    let (code, stdout, err) = run(&["gen-antlr", "expr.gr", "--aspect", path(&bad), "-o", path(&out)]);
    assert_eq!(code, 1);
    assert!(stdout.is_empty());
    let expected = format!("{}:1:18: error:", bad.display());
    assert!(err.starts_with(&expected), "{err}");
    assert!(!out.exists());
}

#[test]
fn generator_errors_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.aspect");
    std::fs::write(&bad, "sum --> .. [[ after = '#factor'; ]];\n").unwrap();
    let out = dir.path().join("out");
    let (code, _, err) = run(&["gen-antlr", "expr.gr", "--aspect", path(&bad), "-o", path(&out)]);
    assert_eq!(code, 1);
    assert!(err.contains("error: action on"), "{err}");
    assert!(!out.exists());
}

#[test]
fn input_errors() {
    let (code, _, err) = run(&["check", "missing.gr"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("missing.gr: error: cannot read file"), "{err}");
    let (code, _, err) = run(&["query", "-e", "#X -->", "expr.gr"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("<query>:1:"), "{err}");
    let (code, _, _) = run(&["gen-antlr", "expr.gr"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 1);
}

#[test]
fn help_succeeds() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    for sub in ["check", "resolve", "query", "weave", "gen-antlr", "gen-builders"] {
        assert!(out.contains(sub));
    }
}

#[test]
fn resolve_prints_flat_grammar() {
    let (code, out, _) = run(&["resolve", "binop.gr"]);
    assert_eq!(code, 0);
    assert!(out.contains("Sum : Product (('+' | '-') Product)* ;\n"), "{out}");
}

#[test]
fn library_entry_point() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let file = examples_dir().join("expr.gr");
    let code = gramweave::cli::run(["gramweave", "check", path(&file)], &mut out, &mut err);
    assert_eq!(code, 0);
    assert_eq!(String::from_utf8(out).unwrap(), "9 symbols, 11 productions\n");
}
