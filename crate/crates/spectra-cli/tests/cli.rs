//! End-to-end journeys against the built binary: exit codes, JSON shape,
//! and CSV side effects.

use std::process::Command;

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn spectra() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spectra"));
    cmd.env_remove("SOURCE_DATE_EPOCH");
    cmd
}

#[test]
fn selective_solve_handles_strong_interference_bands() {
    // One band sits above the strong-interference threshold (alpha = 0.6):
    // the solve must succeed, report no tangency for that band, and leave
    // the sharing-branch column empty in the curve CSV.
    let dir = tempfile::tempdir().expect("temp dir");
    let prefix = dir.path().join("sel");
    let output = spectra()
        .args([
            "sym2",
            "--spec",
            &fixture("three_band_selective.json"),
            "--power",
            "60",
            "--csv",
            prefix.to_str().expect("utf-8 path"),
        ])
        .output()
        .expect("runs");
    assert!(
        output.status.success(),
        "exit {:?}: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );

    let report: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("valid JSON report");
    let bands = report["solution"]["per_subchannel"]
        .as_array()
        .expect("per-band summaries");
    assert_eq!(bands.len(), 3);
    assert!(bands[0]["p_f"].is_f64(), "weak band reports its tangency");
    assert!(
        bands[2]["p_f"].is_null() && bands[2]["crossover"].is_null(),
        "strong band reports no tangency: {}",
        bands[2]
    );

    let csv = std::fs::read_to_string(dir.path().join("sel_curves.csv")).expect("curve CSV");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("subchannel,q,f_star,h_star,r_star"));
    let strong_row = lines
        .clone()
        .find(|l| l.starts_with("2,"))
        .expect("strong-band rows present");
    let fields: Vec<&str> = strong_row.split(',').collect();
    assert_eq!(fields[2], "", "no sharing value on the strong band");
    assert!(
        lines.any(|l| l.starts_with("0,") && !l.split(',').nth(2).unwrap().is_empty()),
        "weak band keeps its sharing column"
    );
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    let unknown = spectra()
        .args(["sym2", "--alpha", "0.1", "--power", "10", "--bogus"])
        .output()
        .expect("runs");
    assert_eq!(
        unknown.status.code(),
        Some(1),
        "unknown flag is a usage error"
    );

    let conflicting = spectra()
        .args([
            "sym2",
            "--alpha",
            "0.1",
            "--spec",
            &fixture("two_user_symmetric.json"),
            "--power",
            "10",
        ])
        .output()
        .expect("runs");
    assert_eq!(
        conflicting.status.code(),
        Some(1),
        "flat and selective modes are mutually exclusive"
    );

    let help = spectra().arg("--help").output().expect("runs");
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("Usage: spectra"));
}
