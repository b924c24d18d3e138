//! End-to-end checks of the `osd` binary: exit codes, file round trips,
//! and output shapes.

use std::path::Path;
use std::process::{Command, Output};

fn osd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osd"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn gen_solve_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = osd(&["gen", "--family", "sigma", "--n", "2", "-o", "p.osd"], dir.path());
    assert!(out.status.success());

    // Baseline: decision + materialized unifier, verified back.
    let out = osd(&["solve", "--alg", "ta", "p.osd"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("unifiable\n"), "{text}");
    let subst = text.strip_prefix("unifiable\n").unwrap();
    std::fs::write(dir.path().join("mgu.subst"), subst).unwrap();
    let out = osd(&["verify", "p.osd", "mgu.subst"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).lines().all(|l| l.ends_with(": ok")));

    // Compressed: solved form with an SLP section, verified back.
    let out = osd(&["solve", "--alg", "slp", "p.osd"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("SLP:"), "{text}");
    assert!(text.contains("[slp:N"), "{text}");
    let subst = text.strip_prefix("unifiable\n").unwrap();
    std::fs::write(dir.path().join("slp.subst"), subst).unwrap();
    let out = osd(&["verify", "p.osd", "slp.subst"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn exit_codes_cover_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("no.osd"), "Z = V2 + V3\nZ = V1 * V3\n").unwrap();
    let out = osd(&["solve", "--alg", "ta", "no.osd"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("propagation-cycle"));

    let out = osd(&["solve", "--alg", "slp", "no.osd"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    // Budget exhaustion on a family instance with a tiny budget.
    osd(&["gen", "--family", "sigma", "--n", "4", "-o", "s4.osd"], dir.path());
    let out = osd(&["solve", "--alg", "ta", "--budget", "5", "s4.osd"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("budget exceeded"));

    // Input errors.
    std::fs::write(dir.path().join("bad.osd"), "X = f(Y)\n").unwrap();
    let out = osd(&["solve", "--alg", "ta", "bad.osd"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let out = osd(&["solve", "--alg", "ta", "missing.osd"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    std::fs::write(dir.path().join("mixed.osd"), "X = Y + Z\nA =d B * C\n").unwrap();
    let out = osd(&["solve", "--alg", "slp", "mixed.osd"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn asym_solving_and_failure() {
    let dir = tempfile::tempdir().unwrap();
    osd(&["gen", "--family", "sigma-prime", "--n", "1", "-o", "sp.osd"], dir.path());
    let text = std::fs::read_to_string(dir.path().join("sp.osd")).unwrap();
    assert!(text.contains("=d"), "{text}");

    let out = osd(&["solve", "--alg", "asym", "--stats", "sp.osd"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("rule_h="));

    std::fs::write(dir.path().join("e.osd"), "U =d V * W\nU =d X + Y\n").unwrap();
    let out = osd(&["solve", "--alg", "asym", "e.osd"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("rule-e"));

    // Wrong solver for the problem kind is an input error.
    let out = osd(&["solve", "--alg", "ta", "sp.osd"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    osd(&["gen", "--family", "sigma", "--n", "0", "-o", "s0.osd"], dir.path());
    let out = osd(&["solve", "--alg", "asym", "s0.osd"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn hom_fallback_and_require_flag() {
    let dir = tempfile::tempdir().unwrap();
    // Two distinct left factors: outside the fragment.
    std::fs::write(dir.path().join("gen.osd"), "X = A * B\nY = C * B\n").unwrap();
    let out = osd(&["solve", "--alg", "hom", "gen.osd"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("falling back"));

    let out = osd(&["solve", "--alg", "hom", "--require-hom", "gen.osd"], dir.path());
    assert_eq!(out.status.code(), Some(3));

    // In fragment: reported in the stats.
    osd(&["gen", "--family", "sigma", "--n", "1", "-o", "s1.osd"], dir.path());
    let out = osd(&["solve", "--alg", "hom", "--stats", "s1.osd"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("fragment=single-homomorphism"));
}

#[test]
fn trace_lists_rule_applications() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.osd"), "U = V * W\nU = X + Y\n").unwrap();
    let out = osd(&["solve", "--alg", "ta", "--trace", "p.osd"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("rule=d eqs="), "{text}");
}

#[test]
fn bench_emits_fixed_csv_and_growth_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = osd(
        &[
            "bench", "--family", "sigma", "--alg", "ta", "--alg", "slp", "--max-n", "3",
            "--csv", "rows.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("splitting ratios"), "{text}");
    assert!(text.contains("log-log slope"), "{text}");
    assert!(!text.contains("MISMATCH"), "{text}");
    let csv = std::fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "family,n,algorithm,decision,system_size,total_rules,splitting_count,fresh_vars,max_slp_size,max_label_len_binary,wall_ms"
    );
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
}

#[test]
fn verify_rejects_wrong_and_partial_substitutions() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.osd"), "U = V * W\nU = X + Y\n").unwrap();
    std::fs::write(dir.path().join("empty.subst"), "U -> V\n").unwrap();
    let out = osd(&["verify", "p.osd", "empty.subst"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("FAILED"));

    // An asymmetric unifier that breaks irreducibility.
    std::fs::write(dir.path().join("a.osd"), "X =d a * B\n").unwrap();
    std::fs::write(dir.path().join("red.subst"), "X -> ((a * c) + (a * d))\nB -> (c + d)\n")
        .unwrap();
    let out = osd(&["verify", "a.osd", "red.subst"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("reducible"), "{}", stdout(&out));
}
