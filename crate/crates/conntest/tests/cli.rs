use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn road() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/road1381.graph").display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conntest")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn triangle<'a>(cmd: &'a str, budget: &'a str, g: &'a str) -> Vec<&'a str> {
    vec![cmd, "--graph", g, "--source", "s", "--target", "t", "--budget", budget]
}

#[test]
fn exact_triangle() {
    let g = data("triangle.graph");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exact.json");
    let mut args = triangle("exact", "3", &g);
    args.extend(["--out", out.to_str().unwrap()]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert_eq!(
        stdout(&o),
        "status optimal\ncost 1.75\ntree Q:a(DONE,Q:b(Q:c(DONE,DONE),DONE))\n"
    );
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc["cost"], 1.75);
    assert_eq!(doc["status"], "optimal");
    assert_eq!(doc["instance"]["budget"], 3);

    // The generic backend is capped at 48 variables.
    let mut args = triangle("exact", "2", &g);
    args.extend(["--backend", "flat"]);
    assert!(stdout(&run(&args)).contains("cost 1.5"));
    let mut args = triangle("exact", "3", &g);
    args.extend(["--backend", "flat"]);
    assert_eq!(run(&args).status.code(), Some(3));
}

#[test]
fn lower_bound_log() {
    let g = data("triangle.graph");
    let o = run(&triangle("lower-bound", "3", &g));
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "iter,cost,paths,cuts,nodes,ms");
    assert_eq!(*lines.last().unwrap(), "bound 1.75 (optimal)");
    let costs: Vec<f64> = lines[1..lines.len() - 1].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(costs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn eval_hist_oracle() {
    let g = data("triangle.graph");
    let o = run(&["eval", "h1", "--graph", &g, "--source", "s", "--target", "t", "--budget", "3"]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert_eq!(
        stdout(&o),
        "name,method,vectors,expected_queries,path,cut,limit,stopped\nh1,exhaustive,4,1.75,0.5,0.25,0.25,0\n"
    );
    let tree = data("triangle_opt.tree");
    let o = run(&["eval", &tree, "--graph", &g, "--source", "s", "--target", "t", "--budget", "3"]);
    assert!(stdout(&o).contains(",exhaustive,4,1.75,"), "{o:?}");
    let o = run(&["hist", "h1", "--graph", &g, "--source", "s", "--target", "t", "--budget", "3"]);
    assert_eq!(stdout(&o), "count,frequency\n0,0\n1,0.5\n2,0.25\n3,0.25\n");
    let o = run(&triangle("oracle", "2", &g));
    assert_eq!(stdout(&o), "1.5\n");
}

#[test]
fn heuristic_transcript() {
    let g = data("triangle.graph");
    let mut args = vec!["heuristic", "h1"];
    args.extend(&triangle("", "3", &g)[1..]);
    assert_eq!(stdout(&run(&args)), "next a\n");
    args.extend(["--answers", "00"]);
    assert_eq!(stdout(&run(&args)), "1 a off\n2 b off\ncut_found {a,b}\n");
}

#[test]
fn endpoints() {
    let o = run(&["endpoints", "--graph", &road(), "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), stdout(&run(&["endpoints", "--graph", &road(), "--seed", "3"])));
    assert_eq!(stdout(&o).split_whitespace().count(), 2);
}

#[test]
fn exit_codes() {
    let g = data("triangle.graph");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.graph");
    std::fs::write(&bad, "undirected\na s t\na s x\n").unwrap();
    let o = run(&triangle("exact", "1", bad.to_str().unwrap()));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3: duplicate edge id `a`"));
    assert_eq!(run(&triangle("exact", "4", &g)).status.code(), Some(2));
    let o = run(&["exact", "--graph", &g, "--source", "s", "--target", "q", "--budget", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(run(&["eval", "nonsense", "--graph", &g, "--budget", "1"]).status.code(), Some(2));

    let road = road();
    assert_eq!(run(&["oracle", "--graph", &road, "--budget", "3"]).status.code(), Some(3));
    let o = run(&["exact", "--graph", &road, "--budget", "30", "--seed", "0", "--time-limit", "1"]);
    assert_eq!(o.status.code(), Some(4), "{o:?}");
    assert!(stdout(&o).starts_with("status lower_bound_only\n"));
}
