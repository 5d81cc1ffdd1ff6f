use assert_cmd::Command;

fn cli() -> Command {
    Command::cargo_bin("bucket-trees").unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = cli().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn grow_is_seeded() {
    let args = ["grow", "--family", "recursive:b=2", "--n", "20", "--count", "3", "--seed", "7"];
    let a = stdout(&args);
    assert_eq!(a.lines().count(), 3);
    assert_eq!(a, stdout(&args));
    assert!(a.lines().all(|l| l.starts_with("{1,2}")));
}

#[test]
fn enumerate_lists_weighted_trees() {
    let out = stdout(&["enumerate", "--family", "port:b=2,alpha=1", "--n", "3"]);
    assert_eq!(out, "tree,weight\n\"{1,2}({3})\",3\n");
    let out = stdout(&["enumerate", "--family", "recursive:b=2", "--n", "4", "--pmf", "K"]);
    assert_eq!(out, "value,probability,exact\n1,0.6666666666666666,2/3\n2,0.3333333333333333,1/3\n");
}

#[test]
fn pmf_k_limit_and_exact() {
    let limit = stdout(&["pmf-k", "--family", "recursive:b=2", "--limit"]);
    assert!(limit.contains("1,0.6666666666666666,2/3") && limit.contains("2,0.3333333333333333,1/3"));
    let float = stdout(&["pmf-k", "--family", "port:b=3,alpha=1", "--n", "30"]);
    assert!(float.starts_with("value,probability\n"));
    assert_eq!(float.lines().count(), 4);
}

#[test]
fn descendant_degree_and_saturation_tables() {
    let y = stdout(&["descendants", "--family", "recursive:b=2", "--n", "6", "--j", "3", "--exact"]);
    assert!(y.contains("1,0.4,2/5") && y.contains("4,0.1,1/10"));
    let y1 = stdout(&["descendants", "--family", "recursive:b=2", "--n", "6", "--j", "3", "--conditional", "1"]);
    assert!(y1.starts_with("value,probability\n"));
    let x = stdout(&["degree", "--family", "recursive:b=1", "--n", "3", "--j", "1", "--exact"]);
    assert!(x.contains("1,0.5,1/2") && x.contains("2,0.5,1/2"));
    let tau = stdout(&["tau", "--family", "recursive:b=2", "--n", "2", "--j", "1"]);
    assert_eq!(tau, "value,probability\n2,1.0\n");
}

#[test]
fn convert_round_trips() {
    assert_eq!(stdout(&["convert", "--from", "diamond", "--to", "bucket", "<1,3>((2))"]), "{1,2}({3})\n");
    assert_eq!(stdout(&["convert", "--from", "bucket", "--b", "2", "--to", "diamond", "{1,2}({3})"]), "<1,3>((2))\n");
    let clustered = stdout(&["convert", "--from", "tree", "--to", "bucket", "--b", "2", "{1}({2}({5},{4}),{3}({6}))"]);
    assert_eq!(clustered, "{1,2}({3,6},{5},{4})\n");
    let chain = stdout(&["convert", "--from", "bucket", "--b", "2", "--to", "tree", "{1,2}({3})"]);
    assert_eq!(chain, "{1}({2}({3}))\n");
    let piped = cli()
        .args(["convert", "--from", "diamond", "--to", "bucket"])
        .write_stdin("(1)\n<1,2>()\n")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(piped.stdout).unwrap(), "{1}\n{1,2}\n");
}

#[test]
fn spectra() {
    let s = stdout(&["spectrum", "--family", "recursive:b=1", "--b-range", "2..3"]);
    assert_eq!(s.lines().count(), 1 + 2 + 3);
    assert!(s.lines().nth(1).unwrap().starts_with("2,1,1.0,0.0,"));
    let u = stdout(&["urn-spectrum", "--family", "recursive:b=2", "--b-range", "26..27"]);
    let phase: Vec<f64> = u.lines().skip(1).filter(|l| l.contains(",1,")).map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert!(phase[0] < 0.5 && phase[1] > 0.5, "{phase:?}");
}

#[test]
fn urn_means() {
    let out = stdout(&["urn", "--family", "port:b=2,alpha=1", "--steps", "3", "--replicates", "50", "--seed", "1"]);
    assert!(out.starts_with("step,kind,index,mean\n"));
    // One bucket with one label at step 0.
    assert!(out.contains("0,nodes,1,1.0\n") && out.contains("0,nodes,2,0.0\n"));
}

#[test]
fn doc_format_and_out_file() {
    let dir = std::env::temp_dir().join(format!("bucket-trees-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("k.json");
    stdout(&["pmf-k", "--family", "recursive:b=2", "--n", "4", "--exact", "--format", "doc", "--out", path.to_str().unwrap()]);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc[1]["exact"], "1/3");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn verify_quick_passes() {
    let out = cli().args(["verify", "--level", "quick", "--seed", "3", "--format", "doc"]).output().unwrap();
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["criteria"].as_array().unwrap().len(), 6);
    assert_eq!(report["passed"], true, "{report:#}");
    assert!(out.status.success());
}

#[test]
fn errors_exit_nonzero() {
    cli().args(["pmf-k", "--family", "nope:b=2", "--n", "3"]).assert().code(2);
    cli().args(["pmf-k", "--n", "3"]).assert().code(2);
    cli().args(["convert", "--from", "diamond", "--to", "bucket", "<2,3>((1))"]).assert().code(2);
    cli().args(["verify", "--level", "slow"]).assert().failure();
}
