//! Browser bindings for three operations of the checker. Each takes plain
//! strings and numbers and returns a JSON string, so the page needs no glue
//! beyond what wasm-bindgen generates.

use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use gauge_ehrenfest::canon::canonicalize;
use gauge_ehrenfest::jet::GroupName;
use gauge_ehrenfest::qm;
use gauge_ehrenfest::suite;

fn wrap(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => json!({ "ok": true, "result": v }).to_string(),
        Err(e) => json!({ "ok": false, "error": e }).to_string(),
    }
}

fn canonical(src: &str) -> Result<Value, String> {
    let cx = suite::context();
    let e = cx.parse(src).map_err(|e| e.to_string())?;
    let c = canonicalize(&cx.defs.substitute(&e));
    Ok(json!({ "canonical": c.to_string(), "terms": c.terms.len(), "zero": c.is_empty() }))
}

/// Expand macros and bring an expression to canonical form.
#[wasm_bindgen]
pub fn canonicalize_expression(src: &str) -> String {
    wrap(canonical(src))
}

fn verify(id: &str, group: &str, trials: usize, seed: u64) -> Result<Value, String> {
    let g = GroupName::parse(group).ok_or_else(|| format!("unknown group `{group}`"))?;
    let mut r = suite::verify_claim(id).map_err(|e| e.to_string())?;
    suite::cross_check(&mut r, &[g.data()], trials.max(1), seed, 1e-10).map_err(|e| e.to_string())?;
    serde_json::to_value(&r).map_err(|e| e.to_string())
}

/// Verify one catalog claim and cross-check it on random jet points.
#[wasm_bindgen]
pub fn verify_claim(id: &str, group: &str, trials: usize, seed: u64) -> String {
    wrap(verify(id, group, trials, seed))
}

/// Catalog ids and descriptions for the claim picker.
#[wasm_bindgen]
pub fn list_claims() -> String {
    serde_json::to_string(&suite::list_claims()).expect("catalog serializes")
}

fn schrodinger(potential: &str, x0: f64, p0: f64, dt: f64, steps: usize) -> Result<Value, String> {
    let v = qm::PotentialSpec::parse(potential).map_err(|e| e.to_string())?;
    let grid = qm::Grid::new(512, 40.0).map_err(|e| e.to_string())?;
    let sigma = match v {
        qm::PotentialSpec::Harmonic { omega } => (0.5 / omega).sqrt(),
        _ => 1.0,
    };
    let psi = qm::GridWaveFunction::gaussian(grid, 1.0, x0, p0, sigma);
    let (traj, res, rep) = qm::schrodinger_experiment(&psi, &v, dt, steps.min(20_000), qm::SplitOrder::default(), false)
        .map_err(|e| e.to_string())?;
    // Thin the trajectory to at most ~500 samples for plotting.
    let stride = (traj.len() / 500).max(1);
    let pick = |xs: &[f64]| xs.iter().step_by(stride).copied().collect::<Vec<_>>();
    Ok(json!({
        "t": pick(&traj.t),
        "x": pick(&traj.x),
        "p": pick(&traj.p),
        "force": pick(&traj.force),
        "max_r_x": res.max_r_x,
        "max_r_p": res.max_r_p,
        "max_norm_drift": rep.max_norm_drift,
    }))
}

/// Evolve a Gaussian packet (m = 1, 512 points on [-20, 20)) and report
/// the Ehrenfest residuals along with a thinned trajectory.
#[wasm_bindgen]
pub fn run_schrodinger(potential: &str, x0: f64, p0: f64, dt: f64, steps: usize) -> String {
    wrap(schrodinger(potential, x0, p0, dt, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn canonicalize_cancels() {
        let r = parse(&canonicalize_expression("A[mu;a]*A[^mu;a] - A[nu;b]*A[^nu;b]"));
        assert_eq!(r["ok"], true);
        assert_eq!(r["result"]["zero"], true);
        let r = parse(&canonicalize_expression("A[mu;"));
        assert_eq!(r["ok"], false);
    }

    #[test]
    fn claim_round_trip() {
        let r = parse(&verify_claim("NA5", "su2", 5, 3));
        assert_eq!(r["result"]["status"], "verified");
        assert_eq!(parse(&verify_claim("NA5", "so3", 5, 3))["ok"], false);
        assert_eq!(parse(&list_claims()).as_array().unwrap().len(), suite::CLAIM_IDS.len());
    }

    #[test]
    fn schrodinger_run() {
        let r = parse(&run_schrodinger("harmonic:1", 1.0, 0.0, 1e-3, 1000));
        assert_eq!(r["ok"], true);
        assert!(r["result"]["max_r_p"].as_f64().unwrap() < 1e-5);
        assert!(r["result"]["t"].as_array().unwrap().len() <= 501);
        assert_eq!(parse(&run_schrodinger("cubic:1", 0.0, 0.0, 1e-3, 10))["ok"], false);
    }
}
