//! The fitted exponent of a simulated population is claimed to be 1/(1-B).
//! Renewal counts grow as t^B, so this is expected to fail for B != 1/2.

use std::process::Command;

use tempfile::TempDir;

#[test]
fn simulated_b_0_4_fits_p_of_five_thirds() {
    let d = TempDir::new().unwrap();
    let run = |args: &[&str]| {
        let o = Command::new(env!("CARGO_BIN_EXE_fracount"))
            .current_dir(d.path())
            .args(args)
            .output()
            .unwrap();
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
        String::from_utf8(o.stdout).unwrap()
    };
    run(&[
        "simulate",
        "--n",
        "10000",
        "--shape-b",
        "0.4",
        "--horizon",
        "100",
        "--seed",
        "0",
    ]);
    let fit: serde_json::Value = serde_json::from_str(run(&["fit", "counts.csv"]).trim()).unwrap();
    let p = fit["p"].as_f64().unwrap();
    assert!((p - 1.0 / 0.6).abs() <= 0.08, "fitted p {p}");
}
