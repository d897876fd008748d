use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn subiso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subiso")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn enumerate_prints_occurrences_then_count() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.grf", "2 1\n0 1\n");
    let g = write(dir.path(), "g.grf", "# triangle\n3 3\n0 1\n1 2\n0 2\n");
    let out = subiso(&["enumerate", "--pattern", s(&p), "--target", s(&g), "--seed", "7", "--epsilon", "0.001"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[6], "count 6");
    let mut pairs: Vec<&str> = lines[..6].to_vec();
    pairs.sort();
    assert_eq!(pairs, ["0 1", "0 2", "1 0", "1 2", "2 0", "2 1"]);
    let report = String::from_utf8(out.stderr).unwrap();
    assert!(report.contains("occurrences=6"));
    assert!(report.contains("stop=completed"));
}

#[test]
fn fixed_seed_output_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.grf", "4 4\n0 1\n1 2\n2 3\n3 0\n");
    let mut text = String::from("12 30\n");
    let mut m = 0;
    'outer: for u in 0..12 {
        for v in (u + 1)..12 {
            if (u * 7 + v * 3) % 4 != 0 {
                text.push_str(&format!("{u} {v}\n"));
                m += 1;
                if m == 30 {
                    break 'outer;
                }
            }
        }
    }
    let g = write(dir.path(), "g.grf", &text);
    let args = ["enumerate", "--pattern", s(&p), "--target", s(&g), "--seed", "3", "--iterations", "12"];
    let a = subiso(&args);
    let b = subiso(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let count = subiso(&["count", "--pattern", s(&p), "--target", s(&g), "--seed", "3", "--iterations", "12"]);
    let last = String::from_utf8(a.stdout).unwrap().lines().last().unwrap().to_string();
    assert_eq!(String::from_utf8(count.stdout).unwrap().trim(), last);
}

#[test]
fn distinct_vertex_sets_and_masks() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.grf", "2 1\n0 1\n");
    let g = write(dir.path(), "g.grf", "3 3\n0 1\n1 2\n0 2\n");
    let out = subiso(&["count", "--pattern", s(&p), "--target", s(&g), "--distinct-vertex-sets", "--epsilon", "0.001"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "count 3\n");

    // only target vertex 2 may host pattern vertex 0
    let gm = write(dir.path(), "gm.grf", "3 3\n0 1\n1 2\n0 2\na 0 1 1\na 1 1 1\n");
    let out = subiso(&["enumerate", "--pattern", s(&p), "--target", s(&gm), "--masks", "--epsilon", "0.001"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.sort();
    assert_eq!(lines, ["2 0", "2 1", "count 2"]);
}

#[test]
fn treewidth_of_k4() {
    let dir = TempDir::new().unwrap();
    let k4 = write(dir.path(), "k4.grf", "4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
    let out = subiso(&["treewidth", "--graph", s(&k4)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("width 3"));
    assert!(text.lines().any(|l| l.contains("leaf")));
}

#[test]
fn usage_and_input_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "p.grf", "2 1\n0 1\n");
    assert_eq!(subiso(&["enumerate", "--pattern", s(&p)]).status.code(), Some(1));
    assert_eq!(subiso(&["enumerate", "--bogus"]).status.code(), Some(1));
    assert_eq!(subiso(&[]).status.code(), Some(1));
    let missing = dir.path().join("nope.grf");
    let out = subiso(&["count", "--pattern", s(&p), "--target", s(&missing)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("nope.grf"));
    let bad = write(dir.path(), "bad.grf", "2 1\n0 5\n");
    let out = subiso(&["count", "--pattern", s(&p), "--target", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 2"));
    assert_eq!(subiso(&["--help"]).status.code(), Some(0));
}

#[test]
fn timeout_exits_two_with_report() {
    let dir = TempDir::new().unwrap();
    let mut pattern = String::from("9 36\n");
    for u in 0..9 {
        for v in (u + 1)..9 {
            pattern.push_str(&format!("{u} {v}\n"));
        }
    }
    let p = write(dir.path(), "k9.grf", &pattern);
    let n = 90;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if (u + v) % 11 != 0 {
                edges.push(format!("{u} {v}"));
            }
        }
    }
    let g = write(dir.path(), "g.grf", &format!("{n} {}\n{}\n", edges.len(), edges.join("\n")));
    let out = subiso(&["count", "--pattern", s(&p), "--target", s(&g), "--timeout-secs", "1", "--iterations", "100000"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("count "));
    let report = String::from_utf8(out.stderr).unwrap();
    assert!(report.contains("stop=timeout") || report.contains("stop=memory"), "{report}");
}

#[test]
fn tw_curve_writes_csv() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("curve.csv");
    let out = subiso(&["bench", "tw-curve", "--pattern-n", "6", "--step", "0.5", "--samples", "3", "--output", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(&out_path).unwrap();
    assert_eq!(csv, "q,mean_treewidth\n0.00,0.0000\n0.50,".to_string() + csv.lines().nth(2).unwrap().split(',').nth(1).unwrap() + "\n1.00,5.0000\n");
}

#[test]
fn er_sweep_writes_csv() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = subiso(&[
        "bench", "er-sweep", "--target-n", "12", "--pattern-n", "4", "--step", "0.5", "--output", s(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("pattern_p,target_p,seconds,timeout,treewidth"));
    assert_eq!(lines.count(), 9);
    assert_eq!(String::from_utf8(out.stderr).unwrap().lines().count(), 9);
}
