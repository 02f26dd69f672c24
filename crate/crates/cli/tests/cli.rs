use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use medusa_core::{Image, Pixel, Trace};

fn medusa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medusa"))
        .args(args)
        .output()
        .expect("failed to launch medusa")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn mate_exit_codes() {
    assert_eq!(medusa(&["mate", "0/1", "0/1"]).status.code(), Some(0));
    assert_eq!(medusa(&["mate", "1/3", "1/3"]).status.code(), Some(2));
    assert_eq!(medusa(&["mate", "1/7", "6/7"]).status.code(), Some(2));
    assert_eq!(medusa(&["mate", "1/2", "3/14"]).status.code(), Some(3));
    assert_eq!(
        medusa(&["mate", "1/7", "1/3", "--max-iter", "3"])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(medusa(&["mate", "1/4", "1/4"]).status.code(), Some(0));
    assert_eq!(
        medusa(&["mate", "1/4", "1/4", "--precision", "double"])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn mate_prints_golden_ratio() {
    let o = medusa(&["mate", "1/3", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("mating 1/3 with 0/1: converged"), "{out}");
    assert!(out.contains("a = 1.618033988"), "{out}");
}

#[test]
fn stagnated_run_reports_best_iterate() {
    let o = medusa(&["mate", "1/4", "1/4", "--precision", "double"]);
    let out = stdout(&o);
    assert!(out.contains(": stagnated"), "{out}");
    assert!(out.contains("best estimate at iteration"), "{out}");
}

#[test]
fn bad_arguments_are_usage_errors() {
    assert_eq!(medusa(&["mate", "1/0", "0"]).status.code(), Some(2));
    assert_eq!(medusa(&["mate", "x", "0"]).status.code(), Some(2));
    assert_eq!(
        medusa(&["mate", "0", "0", "--tol", "-1"]).status.code(),
        Some(2)
    );
    assert!(!medusa(&["render", "--out", "x.ppm"]).status.success());
    assert_eq!(
        medusa(&["mate", "0", "0", "--precision", "quad"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn trace_round_trips_into_render() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("golden.trace");
    let o = medusa(&["mate", "1/3", "0", "--trace-out", path_str(&trace)]);
    assert!(o.status.success());
    let parsed = Trace::parse(&fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(parsed.params.len(), 24);

    let img_path = dir.path().join("k.ppm");
    let o = medusa(&[
        "render",
        "--trace",
        path_str(&trace),
        "--bounds",
        "-2",
        "2",
        "-2",
        "2",
        "--res",
        "32",
        "24",
        "--m",
        "8",
        "--out",
        path_str(&img_path),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let img = Image::read_ppm(fs::File::open(&img_path).unwrap()).unwrap();
    assert_eq!((img.width(), img.height()), (32, 24));
    assert!(img.count(Pixel::Black) > 0 && img.count(Pixel::White) > 0);
}

#[test]
fn series_writes_one_file_per_m() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("quarter.ppm");
    let o = medusa(&[
        "render",
        "--mate",
        "1/4",
        "1/4",
        "--proj",
        "sphere",
        "--res",
        "48",
        "48",
        "--series",
        "6",
        "10",
        "14",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for m in [6, 10, 14] {
        let p = dir.path().join(format!("quarter_K{m}.ppm"));
        let img = Image::read_ppm(fs::File::open(&p).unwrap()).unwrap();
        assert_eq!(img.width(), 48);
        assert!(img.count(Pixel::Background) > 0);
    }
    assert!(!out.exists());
}

#[test]
fn render_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.trace");
    fs::write(&bad, "# medusa-trace v1\n1 1 0 1 0\n").unwrap();
    let out = dir.path().join("o.ppm");
    let o = medusa(&["render", "--trace", path_str(&bad), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));

    let o = medusa(&[
        "render",
        "--mate",
        "0",
        "0",
        "--m",
        "99",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = medusa(&[
        "render",
        "--mate",
        "0",
        "0",
        "--bounds",
        "1",
        "-1",
        "-1",
        "1",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn sweep_marks_refused_angles() {
    let o = medusa(&["sweep", "--denominator", "3", "--with", "1/3"]);
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 3, "{out}");
    assert!(rows[1].starts_with("1/3\tnot-mateable"), "{out}");
    assert!(rows[2].starts_with("2/3\tnot-mateable"), "{out}");
    // 0/3 = 0 mated with 1/3 converges.
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn sweep_writes_summary_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let o = medusa(&[
        "sweep",
        "--denominator",
        "8",
        "--with",
        "0",
        "--jobs",
        "2",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.tsv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("angle\tstatus\tre_a\tim_a\tre_b\tim_b\titerations\tdendrite")
    );
    assert_eq!(lines.count(), 8);
    let t = Trace::parse(&fs::read_to_string(dir.path().join("0_8.trace")).unwrap()).unwrap();
    assert!(!t.params.is_empty());
}
