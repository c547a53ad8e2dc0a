//! End-to-end checks of the binary: exit codes, determinism, and the
//! file-format round trip.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cechcorr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn classify_circle_four_lists_five_classes() {
    let output = run(&["classify-circle", "4"]);
    assert!(output.status.success());
    let text = stdout(&output);
    assert!(text.contains("5 coverings"), "{text}");
    assert!(text.contains("pairwise non-isomorphic: yes"), "{text}");
}

#[test]
fn chern_reports_rp2_torsion_generator() {
    let output = run(&["chern", "gallery:rp2-antipodal"]);
    assert!(output.status.success());
    let text = stdout(&output);
    assert!(text.contains("H^2 = Z/2"), "{text}");
    assert!(text.contains("class = 1 (mod 2)"), "{text}");
}

#[test]
fn roundtrip_passes_on_the_two_point_example() {
    let output = run(&["roundtrip", "gallery:example-5.1-circle"]);
    assert!(output.status.success());
    assert!(stdout(&output).contains("all legs commute"));
}

#[test]
fn compare_exit_codes_follow_the_verdict() {
    let isomorphic = run(&[
        "compare",
        "gallery:plateau-example(r1)",
        "gallery:plateau-example(r2)",
    ]);
    assert_eq!(isomorphic.status.code(), Some(0));
    assert!(stdout(&isomorphic).contains("topological correspondences isomorphic: no"));

    let distinct = run(&[
        "compare",
        "gallery:example-different-ranges(r1)",
        "gallery:example-different-ranges(r2)",
    ]);
    assert_eq!(distinct.status.code(), Some(1));

    let bad = run(&["compare", "gallery:no-such-thing", "gallery:no-such-thing"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let first = run(&["--structured", "reconstruct", "gallery:example-different-ranges(r1)"]);
    let second = run(&["--structured", "reconstruct", "gallery:example-different-ranges(r1)"]);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn parse_error_carries_position() {
    let dir = std::env::temp_dir().join(format!("cechcorr-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.model");
    std::fs::write(&path, "space s {\n  vertices: a\n  chart: a\n}\nnonsense here\n").unwrap();
    let output = run(&["check", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr).into_owned();
    assert!(err.contains("line 5"), "{err}");
    std::fs::remove_file(&path).ok();
}

#[test]
fn file_round_trip_through_check_and_compare() {
    let dir = std::env::temp_dir().join(format!("cechcorr-rt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("ex51.model");
    let text = cechcorr::textio::emit_correspondence(
        "ex51",
        &cechcorr::gallery::instances::example_51_circle(),
    );
    std::fs::write(&path, &text).unwrap();

    let check = run(&["check", path.to_str().unwrap()]);
    assert!(check.status.success(), "{}", String::from_utf8_lossy(&check.stderr));
    assert!(stdout(&check).contains("correspondence ex51: valid"));

    // The file and the gallery instance are the same correspondence.
    let compare = run(&["compare", path.to_str().unwrap(), "gallery:example-5.1-circle"]);
    assert_eq!(compare.status.code(), Some(0));
    assert!(stdout(&compare).contains("topological correspondences isomorphic: yes"));
    std::fs::remove_file(&path).ok();
}
