use std::process::Command;

fn gev(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gev"))
        .args(args)
        .env_remove("GEV_SEED")
        .output()
        .expect("gev runs")
}

fn json(out: &std::process::Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json report")
}

#[test]
fn verify_abelian_and_commutator_claims() {
    let out = gev(&["verify", "AB1,NA5", "--group", "su2", "--trials", "50", "--seed", "7", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    let claims = r["claims"].as_array().unwrap();
    assert_eq!(claims.len(), 2);
    assert_eq!(claims[0]["id"], "AB1");
    assert_eq!(claims[1]["id"], "NA5");
    for c in claims {
        assert_eq!(c["status"], "verified");
    }
    assert!(claims[1]["numeric"][0]["max_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn conditional_claim_needs_flag() {
    let base = ["verify", "NA9", "--mode", "symbolic"];
    assert_eq!(gev(&base).status.code(), Some(1));
    let mut with = base.to_vec();
    with.push("--allow-conditional");
    assert_eq!(gev(&with).status.code(), Some(0));
}

#[test]
fn unknown_claim_is_an_error() {
    let out = gev(&["verify", "ZZ9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ZZ9"));
}

#[test]
fn bad_configuration_is_rejected() {
    assert_eq!(gev(&["verify", "AB1", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(gev(&["qm", "schrodinger", "--grid", "1000"]).status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = gev(&[
            "verify", "NA1,NA5", "--group", "su3", "--trials", "20", "--seed", "11", "--format", "json", "-o",
            p.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
}

#[test]
fn seed_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_gev"))
        .args(["verify", "AB1", "--group", "su2", "--trials", "5", "--format", "json"])
        .env("GEV_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(json(&out)["config"]["seed"], 99);
}

#[test]
fn schrodinger_harmonic_with_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = gev(&[
        "qm", "schrodinger", "--potential", "harmonic:1.0", "--grid", "512", "--steps", "1000", "--no-convergence",
        "--format", "json", "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    let res = &r["qm"][0]["max_residuals"];
    assert!(res["r_x"].as_f64().unwrap() < 1e-6);
    assert!(res["r_p"].as_f64().unwrap() < 1e-5);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,x,p,force,norm,r_x,r_p"));
    assert_eq!(text.lines().count(), 1002);
}

#[test]
fn dirac_experiments() {
    let out = gev(&["qm", "dirac-packet", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(r["qm"][0]["max_residuals"]["normalization"].as_f64().unwrap() < 1e-12);

    let out = gev(&["qm", "dirac-force", "--grid", "512", "--steps", "200", "--no-convergence", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json(&out)["qm"][0]["max_residuals"]["force"].as_f64().unwrap() < 1e-6);
}

#[test]
fn list_claims_prints_catalog() {
    let out = gev(&["list-claims"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["claims"].as_array().unwrap().len(), 21);
}

#[test]
fn text_table() {
    let out = gev(&["verify", "AB2", "--mode", "symbolic"]);
    let s = String::from_utf8(out.stdout).unwrap();
    assert!(s.starts_with("claim"));
    assert!(s.contains("AB2"));
}
