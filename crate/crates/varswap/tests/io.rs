use proptest::prelude::*;
use varswap::io::{parse_smile_str, read_model, smile_to_string, Table};
use varswap::Error;
use varswap_core::presets::figure_model;
use varswap_core::replication::synthetic_black_smile;
use varswap_core::solvers::{solve_model, SolutionKind};
use varswap_core::{Error as CoreError, ModelSpec};

#[test]
fn documented_model_example_parses_and_solves() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    std::fs::write(
        &path,
        r#"{"vol": {"kind": "const", "sigma": 0.2},
            "kernel": {"kind": "proportional", "gamma": {"kind": "const", "value": 1.0}, "atoms": [[-1.0, 0.5]]}}"#,
    )
    .unwrap();
    let m = read_model(&path).unwrap();
    let sol = solve_model(&m, 1e-6, 64).unwrap();
    let SolutionKind::Proportional { q } = sol.kind else {
        panic!("{:?}", sol.kind)
    };
    // e^z − 1 − z at z = −1
    let e0 = (-1f64).exp();
    let want = (0.04 + 0.5) / (0.02 + 0.5 * e0);
    assert!((q - want).abs() < 1e-12, "{q} vs {want}");
}

#[test]
fn models_round_trip_through_json() {
    for which in 1..=4 {
        let m = figure_model(which).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(m, back);
    }
}

#[test]
fn bad_model_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"vol": {"kind": "const", "sigma": -1.0}, "kernel": {"kind": "none"}}"#,
    )
    .unwrap();
    let err = read_model(&path).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn smile_round_trips() {
    let s = synthetic_black_smile(10.0, 0.25, 0.5, 2.0, 50.0, 40).unwrap();
    let back = parse_smile_str(&smile_to_string(&s)).unwrap();
    assert_eq!(s, back);
}

fn format_row(err: Error) -> usize {
    match err {
        Error::Core(CoreError::Format { row, .. }) => row,
        other => panic!("expected a format error, got {other}"),
    }
}

fn rows(n: usize) -> String {
    let mut out = String::from("strike,call,put\n");
    for i in 0..n {
        let k = 5.0 + i as f64;
        out.push_str(&format!(
            "{k},{},{}\n",
            (10.0 - k).max(0.0) + 0.1,
            (k - 10.0).max(0.0) + 0.1
        ));
    }
    out
}

#[test]
fn smile_errors_name_the_row() {
    assert!(parse_smile_str(&rows(10)).is_ok());

    let short = rows(7);
    assert!(format_row(parse_smile_str(&short).unwrap_err()) > 0);

    let bad_number = rows(10).replacen("8,", "8x,", 1);
    assert_eq!(format_row(parse_smile_str(&bad_number).unwrap_err()), 4);

    let mut lines: Vec<String> = rows(10).lines().map(String::from).collect();
    lines.swap(6, 7);
    assert_eq!(
        format_row(parse_smile_str(&lines.join("\n")).unwrap_err()),
        7
    );

    let header = rows(10).replacen("strike,call,put", "k,c,p", 1);
    assert_eq!(format_row(parse_smile_str(&header).unwrap_err()), 0);
}

#[test]
fn forward_is_inferred_from_parity() {
    let s = parse_smile_str(&rows(10)).unwrap();
    assert!((s.forward() - 10.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn tables_round_trip(values in prop::collection::vec(-1e12..1e12f64, 3..30), tag in "[a-z]{1,8}") {
        let mut t = Table::new(&["a", "b", "c"]).meta("tag", &tag).meta("n", values.len());
        for chunk in values.chunks_exact(3) {
            t.push(chunk.to_vec());
        }
        let back = Table::parse(&t.to_csv_string()).unwrap();
        prop_assert_eq!(back, t);
    }
}
