//! End-to-end runs of the `sweepvol` binary on small synthetic splits.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn sweepvol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sweepvol"))
        .args(args)
        .env_remove("STEREOVOL_DATA")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = sweepvol(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    sweepvol(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A three-frame split at a third of KITTI resolution.
fn split(dir: &Path, seed: &str) -> PathBuf {
    let root = dir.join("split");
    ok(&[
        "--seed", seed, "synth", "--out", s(&root), "--frames", "3", "--width", "414", "--height", "125", "--focal",
        "240", "--ground-spacing", "1",
    ]);
    root
}

/// Every file below `root`, relative path to contents.
fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn label_lines(root: &Path) -> usize {
    snapshot(&root.join("label_2")).iter().map(|(_, b)| String::from_utf8_lossy(b).lines().count()).sum()
}

#[test]
fn synth_writes_the_kitti_layout() {
    let dir = TempDir::new().unwrap();
    let root = split(dir.path(), "0");
    for sub in ["calib", "label_2", "velodyne", "image_2", "image_3"] {
        assert_eq!(fs::read_dir(root.join(sub)).unwrap().count(), 3, "{sub}");
    }
    assert!(root.join("calib/000002.txt").is_file());
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let root = split(dir.path(), "0");
    let r = s(&root);
    assert_eq!(code(&["volgen", "--data", r, "--frame", "000000", "--cv", "128", "--cin", "96"]), 2);
    assert_eq!(code(&["volgen", "--data", r, "--frame", "000000", "--mode", "sideways"]), 2);
    assert_eq!(code(&["bench", "--repeats", "0"]), 2);
    assert_eq!(code(&["synth", "--out", s(&dir.path().join("x")), "--objects", "1,2"]), 2);
    assert_eq!(code(&["slcp", "--data", r, "--out", s(&dir.path().join("y")), "--prob", "1.5"]), 2);
    assert_eq!(code(&["no-such-command"]), 2);
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn io_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let root = split(dir.path(), "0");
    let r = s(&root);
    assert_eq!(code(&["occupancy", "--data", s(&dir.path().join("missing"))]), 3);
    fs::remove_file(root.join("calib/000001.txt")).unwrap();
    assert_eq!(code(&["volgen", "--data", r, "--frame", "000001"]), 3);
    fs::write(root.join("calib/000000.txt"), "P2: 1 2 3\n").unwrap();
    assert_eq!(code(&["volgen", "--data", r, "--frame", "000000"]), 3);
    assert_eq!(code(&["evalap", "--data", r, "--pred", s(&dir.path().join("nope"))]), 3);
}

#[test]
fn domain_errors_exit_4() {
    let dir = TempDir::new().unwrap();
    let root = split(dir.path(), "0");
    // A label with a score outside [0, 1] is well-formed but invalid.
    let pred = dir.path().join("pred");
    fs::create_dir_all(&pred).unwrap();
    let line = fs::read_to_string(root.join("label_2/000000.txt")).unwrap().lines().next().unwrap().to_string();
    fs::write(pred.join("000000.txt"), format!("{line} 7.5\n")).unwrap();
    assert_eq!(code(&["evalap", "--data", s(&root), "--pred", s(&pred)]), 4);
}

#[test]
fn volgen_writes_a_dvol_and_reports_its_shape() {
    let dir = TempDir::new().unwrap();
    let root = split(dir.path(), "0");
    let out = dir.path().join("v.dvol");
    let stdout = ok(&[
        "volgen", "--data", s(&root), "--frame", "000000", "--mode", "d-ps", "--cin", "96", "--cv", "32", "--alpha",
        "0.1", "--planes", "48", "--out", s(&out),
    ]);
    assert!(stdout.contains("dims: 31x103x48x64"), "{stdout}");
    let vol = sweepvol::kitti_io::read_dvol(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(vol.dims(), vec![31, 103, 48, 64]);
}

#[test]
fn occupancy_has_one_row_per_box() {
    let dir = TempDir::new().unwrap();
    let root = split(dir.path(), "0");
    let csv = ok(&["occupancy", "--data", s(&root)]);
    assert_eq!(csv.lines().next(), Some("class,depth_m,psv_count,tdgv_count"));
    assert_eq!(csv.lines().count() - 1, label_lines(&root));
}

#[test]
fn evalap_scores_ground_truth_as_perfect() {
    let dir = TempDir::new().unwrap();
    let root = split(dir.path(), "0");
    let csv = ok(&["evalap", "--data", s(&root), "--pred", s(&root.join("label_2"))]);
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    for row in rows {
        assert!(row.ends_with(",1.000000"), "{row}");
    }
}

#[test]
fn deptherr_of_ground_truth_is_zero() {
    let dir = TempDir::new().unwrap();
    let root = split(dir.path(), "0");
    let gt = dir.path().join("gt");
    ok(&["depthgt", "--data", s(&root), "--out", s(&gt)]);
    let csv = ok(&["deptherr", "--data", s(&root), "--pred", s(&gt), "--gt", s(&gt)]);
    let mut populated = 0;
    for row in csv.lines().skip(1) {
        let f: Vec<&str> = row.split(',').collect();
        if f[3] != "0" {
            populated += 1;
            assert_eq!(f[2].parse::<f64>().unwrap(), 0.0, "{row}");
        }
    }
    assert!(populated > 0, "{csv}");
}

#[test]
fn slcp_zero_probability_copies_the_split() {
    let dir = TempDir::new().unwrap();
    let root = split(dir.path(), "0");
    let out = dir.path().join("aug");
    ok(&["slcp", "--data", s(&root), "--out", s(&out), "--prob", "0"]);
    assert_eq!(snapshot(&out), snapshot(&root));
}

#[test]
fn slcp_without_samples_adds_no_boxes() {
    let dir = TempDir::new().unwrap();
    let root = split(dir.path(), "0");
    let out = dir.path().join("aug");
    ok(&["slcp", "--data", s(&root), "--out", s(&out), "--samples", "0,0,0", "--prob", "1"]);
    assert_eq!(label_lines(&out), label_lines(&root));
}

#[test]
fn slcp_pastes_new_boxes() {
    let dir = TempDir::new().unwrap();
    let root = split(dir.path(), "0");
    let bank = dir.path().join("bank");
    ok(&["--seed", "9", "synth", "--out", s(&bank), "--frames", "4", "--width", "414", "--height", "125", "--focal", "240"]);
    let out = dir.path().join("aug");
    ok(&["slcp", "--data", s(&root), "--bank", s(&bank), "--out", s(&out), "--prob", "1"]);
    assert!(label_lines(&out) > label_lines(&root));
}

#[test]
fn bench_reports_equal_sample_counts() {
    let out = ok(&["bench", "--repeats", "1", "--rows", "12", "--cols", "40", "--planes", "24"]);
    let rows: Vec<Vec<&str>> = out.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[3..] == rows[0][3..]), "{out}");
}

/// Runs the deterministic subcommands into `dir` and returns their outputs.
fn pipeline(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let root = split(dir, "42");
    let r = s(&root);
    let mut outputs = Vec::new();
    for mode in ["ps", "d-ps", "3dgv"] {
        let vol = dir.join(format!("{mode}.dvol"));
        let stdout = ok(&["--seed", "42", "volgen", "--data", r, "--frame", "000001", "--mode", mode, "--planes", "64", "--out", s(&vol)]);
        outputs.push((format!("volgen {mode} stdout"), stdout.into_bytes()));
        outputs.push((format!("volgen {mode}"), fs::read(&vol).unwrap()));
    }
    let aug = dir.join("aug");
    ok(&["--seed", "42", "slcp", "--data", r, "--out", s(&aug), "--prob", "1"]);
    for (path, bytes) in snapshot(&aug) {
        outputs.push((format!("slcp {}", path.display()), bytes));
    }
    let occ = ok(&["--seed", "42", "occupancy", "--data", s(&aug)]);
    outputs.push(("occupancy".into(), occ.into_bytes()));
    let ap = ok(&["--seed", "42", "evalap", "--data", s(&aug), "--pred", r]);
    outputs.push(("evalap".into(), ap.into_bytes()));
    outputs
}

#[test]
fn fixed_seed_runs_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let (first, second) = (pipeline(a.path()), pipeline(b.path()));
    assert_eq!(first.len(), second.len());
    for ((name, x), (_, y)) in first.iter().zip(&second) {
        assert!(x == y, "{name} differs between runs");
    }
}
