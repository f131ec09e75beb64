//! Exit codes and output formats of the `odnf` binary.

use std::process::{Command, Output};

fn odnf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odnf")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    odnf(args).status.code().unwrap()
}

fn error_json(args: &[&str]) -> serde_json::Value {
    let out = odnf(args);
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["eval", "d^2 + x"]), 0);
    assert_eq!(code(&["eval", "d^2 + ("]), 2);
    assert_eq!(code(&["eval", "xi"]), 2);
    assert_eq!(code(&["no-such-command"]), 2);
    assert_eq!(code(&["normal-form", "--p", "2*d^3", "--q", "d^2 + x"]), 3);
    assert_eq!(code(&["expand-power"]), 3);
    assert_eq!(code(&["eval", "d", "--k", "0"]), 3);
    assert_eq!(code(&["normal-form", "--p", "d^3 + x", "--q", "d^2 + x", "--input-window", "2"]), 4);
    assert_eq!(code(&["verify", "--suite", "powerform", "--cases", "20", "--seed", "4"]), 0);
}

#[test]
fn errors_are_json() {
    let v = error_json(&["eval", "d^2 + ("]);
    assert_eq!(v["error"], "parse");
    assert_eq!(v["line"], 1);
    assert_eq!(v["col"], 8);
    let v = error_json(&["verify", "--suite", "nope"]);
    assert_eq!(v["exitCode"], 3);
    let v = error_json(&["schur", "--q", "d^2", "--format", "svg"]);
    assert_eq!(v["error"], "precondition");
}

#[test]
fn every_command_has_json() {
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let nf = dir.join("cli-nf.json");
    let nfs = nf.to_str().unwrap();
    let cmds: Vec<Vec<&str>> = vec![
        vec!["eval", "d^2 + x"],
        vec!["eval", "G{r=3; f[2,0]=1}"],
        vec!["mul", "d", "x"],
        vec!["commutator", "d^2", "x^2"],
        vec!["schur", "--q", "d^2 + x", "--depth", "3"],
        vec!["normal-form", "--p", "d^3 + x", "--q", "d^2 + x", "--depth", "4", "--out", nfs],
        vec!["newton", "--input", nfs],
        vec!["classify", "--p", "d^3", "--q", "d^2", "--depth", "4", "--candidate", "X^2 - Y^3"],
        vec!["bc-find", "--p", "d^3", "--q", "d^2", "--wmax", "6"],
        vec!["expand-power", "--k", "2", "--oracle"],
        vec!["verify", "--suite", "appendix", "--cases", "5"],
    ];
    for c in cmds {
        let mut args = c.clone();
        args.extend(["--format", "json"]);
        let out = odnf(&args);
        assert!(out.status.success(), "{:?}: {}", c, String::from_utf8_lossy(&out.stderr));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(v.is_object(), "{:?}", c);
    }
}

#[test]
fn text_outputs() {
    let out = odnf(&["mul", "d", "x"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "x*d + 1\n");
    let out = odnf(&["bc-find", "--p", "d^3", "--q", "d^2", "--wmax", "6", "--format", "text"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "-Y^3 + X^2 = 0 at weight 6\n");
    let out = odnf(&["expand-power", "--k", "2"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "D^2 + 2*L(0)*D + L(1) + L(0,0)\n");
}
