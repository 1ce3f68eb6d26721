//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use gauge_ehrenfest::canon::{canonicalize, CertificateKind, ConstraintSet};
use gauge_ehrenfest::jet::{
    assignments, evaluate_at, numeric_identity_check, random_expression_source, sample_jet_point, GroupData,
};
use gauge_ehrenfest::qm::{
    dirac_force_check, dirac_wavepacket_check, schrodinger_experiment, Complex64, DiracGridState, Grid,
    GridWaveFunction, MomentumAmplitudes, PotentialSpec, ScalarPotential, SplitOrder,
};
use gauge_ehrenfest::suite::{self, build_model, cross_check, ex, verify_claim, ClaimStatus, ModelId, CLAIM_IDS};
use gauge_ehrenfest::variational::euler_lagrange;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn symbolic_suite() -> Outcome {
    let start = Instant::now();
    let results: Vec<_> = CLAIM_IDS.par_iter().map(|id| verify_claim(id).unwrap()).collect();
    let secs = start.elapsed().as_secs_f64();
    let mut bad = Vec::new();
    for r in &results {
        let conditional = r.id == "NA9" || r.id == "NA10";
        let ok = if conditional {
            r.status == ClaimStatus::Conditional && r.assumptions.iter().any(|a| a.contains("j[mu;a]"))
        } else {
            // Exact-zero, el-vanishing and constraint-reduced certificates,
            // plus the Noether and ghost-number strategies that reduce to them.
            r.status == ClaimStatus::Verified
                && matches!(
                    r.certificate.kind,
                    CertificateKind::ExactZero | CertificateKind::ElVanishing | CertificateKind::ConstraintReduced
                )
        };
        if !ok {
            bad.push(format!("{}={:?}/{:?}", r.id, r.status, r.certificate.kind));
        }
    }
    outcome(
        bad.is_empty() && secs < 300.0,
        format!("{} claims in {secs:.1}s; problems: {}", results.len(), if bad.is_empty() { "none".into() } else { bad.join(", ") }),
    )
}

fn numeric_cross_check() -> Outcome {
    let groups = [GroupData::su2(), GroupData::su3()];
    let checked: Vec<_> = CLAIM_IDS
        .par_iter()
        .map(|id| {
            let mut r = verify_claim(id).unwrap();
            cross_check(&mut r, &groups, 100, 20240, 1e-10).unwrap();
            r
        })
        .collect();
    let worst = checked.iter().flat_map(|r| &r.numeric).fold(0.0f64, |a, n| a.max(n.max_residual));
    let failed: Vec<_> = checked.iter().filter(|r| r.numeric.iter().any(|n| !n.passed)).map(|r| r.id.clone()).collect();
    let targets: usize = checked.iter().map(|r| r.targets.len()).sum();

    // Sign error inside one field strength of the gauge-variation expansion.
    let flipped_fs = ex("2*g*f[a,c,b]*F[^mu,^nu;a]*(d[mu]A[nu;c] - d[nu]A[mu;c] - g*f[c,d,e]*A[mu;d]*A[nu;e])*omega[b]");
    let m1 = numeric_identity_check(&flipped_fs, &groups[1], 50, 5, 1e-10, &ConstraintSet::none()).unwrap();
    // Sign of the ghost term flipped in the quantum density.
    let src = ModelId::YmQuantum.source().replace("- i*d[^mu]cbar", "+ i*d[^mu]cbar");
    let mutated = canonicalize(&ex(&src));
    let cfield = suite::context().parse("c[a]").unwrap().terms[0].atoms[0].clone();
    let el = euler_lagrange(&mutated, &cfield).expr;
    let diff = el.add(&ex("-i*D[mu;a,b](d[^mu]cbar[b])").neg());
    let m2 = numeric_identity_check(&diff, &groups[0], 50, 5, 1e-10, &ConstraintSet::none()).unwrap();

    outcome(
        failed.is_empty() && m1.max_residual > 1e-3 && m2.max_residual > 1e-3,
        format!(
            "{targets} identities x 2 groups x 100 trials, worst residual {worst:.1e}{}; mutations detected at {:.2e} and {:.2e}",
            if failed.is_empty() { String::new() } else { format!(", failing {}", failed.join(",")) },
            m1.max_residual,
            m2.max_residual
        ),
    )
}

fn canonicalizer_consistency() -> Outcome {
    let cx = suite::context();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut evaluations = 0usize;
    let n = 120;
    for k in 0..n {
        let src = random_expression_source(&mut rng);
        let e = cx.defs.substitute(&cx.parse(&src).unwrap());
        let c = canonicalize(&e);
        let g = if k % 2 == 0 { GroupData::su2() } else { GroupData::su3() };
        for pt in 0..10u64 {
            let p = sample_jet_point(1000 * k + pt, &g, &ConstraintSet::none()).unwrap();
            for asg in assignments(&e, g.dim) {
                let a = evaluate_at(&e, &p, &g, &asg).unwrap();
                let b = evaluate_at(&c, &p, &g, &asg).unwrap();
                worst = worst.max((&a - &b).max_abs());
                evaluations += 1;
            }
        }
    }
    outcome(worst < 1e-12, format!("{n} expressions, 10 points each, {evaluations} evaluations, max |diff| {worst:.1e}"))
}

fn quantum_equations() -> Outcome {
    let ab1 = verify_claim("AB1").unwrap();
    let na6 = verify_claim("NA6").unwrap();
    let l = build_model(ModelId::YmQuantum);
    let cx = suite::context();
    let expected = [
        ("A[nu;a]", "D[mu;a,b]F[^mu,^nu;b] - d[^nu]B[a] + g*j[^nu;a] + i*g*f[a,b,c]*d[^nu]cbar[b]*c[c]"),
        ("B[a]", "d[mu]A[^mu;a] + alpha*B[a]"),
        ("c[a]", "-i*D[mu;a,b](d[^mu]cbar[b])"),
        ("cbar[a]", "i*d[mu](D[^mu;a,b]c[b])"),
    ];
    let mut matched = 0;
    for (f, want) in expected {
        let atom = cx.parse(f).unwrap().terms[0].atoms[0].clone();
        let el = euler_lagrange(&l, &atom).expr;
        if canonicalize(&el.add(&ex(want).neg())).is_empty() {
            matched += 1;
        }
    }
    let pass = matched == 4 && ab1.status == ClaimStatus::Verified && na6.status == ClaimStatus::Verified;
    outcome(pass, format!("{matched}/4 field equations match exactly; AB1 {:?}, NA6 {:?}", ab1.status, na6.status))
}

fn schrodinger_ehrenfest() -> Outcome {
    let grid = Grid::new(1024, 40.0).unwrap();
    let psi = GridWaveFunction::coherent(grid, 1.0, 1.0, 1.0);
    let v = PotentialSpec::Harmonic { omega: 1.0 };
    let start = Instant::now();
    let (traj, _, rep) = schrodinger_experiment(&psi, &v, 1e-3, 6283, SplitOrder::KickDriftKick, true).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let cos_dev = traj.t.iter().zip(&traj.x).fold(0.0f64, |a, (t, x)| a.max((x - t.cos()).abs()));
    let (rx, rp) = (rep.ratio_r_x.unwrap(), rep.ratio_r_p.unwrap());
    let bounds = rep.max_r_x < 1e-6 && rep.max_r_p < 1e-5;
    let ratios = rx >= 3.5 && rp >= 3.5;
    outcome(
        bounds && ratios,
        format!(
            "r_x {:.1e}, r_p {:.1e}, |<x>-cos t| {cos_dev:.1e}; dt-halving ratios r_x {rx:.2}, r_p {rp:.2} (need both >= 3.5); {secs:.1}s",
            rep.max_r_x, rep.max_r_p
        ),
    )
}

fn dirac_packet() -> Outcome {
    let one = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let mut quad = 0.0f64;
    let mut norm = 0.0f64;
    for w in [[one, z, z, z], [one, Complex64::new(0.3, -0.7), Complex64::new(0.5, 0.5), Complex64::new(0.0, -1.0)]] {
        let r = dirac_wavepacket_check(&MomentumAmplitudes::gaussian(801, 0.5, 0.3, 0.3, -0.2, 1.0, w));
        norm = norm.max(r.max_normalization_error);
        for s in [&r.positive, &r.negative] {
            quad = quad
                .max((s.norm_spinor - s.norm_closed).abs())
                .max((s.alpha_spinor - s.alpha_closed).abs())
                .max(s.alpha_cross.abs());
        }
    }
    let nr = dirac_wavepacket_check(&MomentumAmplitudes::gaussian(801, 2.0, 0.5, 0.0, 0.0, 100.0, [one, z, z, z]));
    let rel = (nr.velocity / nr.momentum_over_mass - 1.0).abs();
    outcome(
        quad < 1e-12 && norm < 1e-13 && rel < 0.01,
        format!(
            "quadrature {quad:.1e}, normalization {norm:.1e}, m=100: <alpha_x>/<1> {:.6} vs <p_x>/m {:.6}",
            nr.velocity, nr.momentum_over_mass
        ),
    )
}

fn dirac_force() -> Outcome {
    let grid = Grid::new(1024, 40.0).unwrap();
    let lin = DiracGridState::gaussian(grid, 1.0, 1.0, ScalarPotential::Linear { kappa: 0.1 }, 0.0, 0.5, 1.5);
    let (_, r1) = dirac_force_check(&lin, 2.5e-4, 400, false).unwrap();
    let gau = DiracGridState::gaussian(grid, 1.0, 1.0, ScalarPotential::Gaussian { phi0: 1.0, sigma: 2.0 }, 0.0, 0.5, 1.5);
    let (_, r2) = dirac_force_check(&gau, 0.02, 100, true).unwrap();
    let ratio = r2.ratio_force_residual.unwrap();
    outcome(
        r1.max_force_residual < 1e-8 && ratio >= 3.5,
        format!("linear residual {:.1e}; gaussian residual {:.1e}, dt-halving ratio {ratio:.2}", r1.max_force_residual, r2.max_force_residual),
    )
}

fn determinism() -> Outcome {
    let report = || {
        let groups = [GroupData::su2(), GroupData::su3()];
        let claims: Vec<_> = ["AB1", "NA5", "NA9", "NA12"]
            .iter()
            .map(|id| {
                let mut r = verify_claim(id).unwrap();
                cross_check(&mut r, &groups, 20, 99, 1e-10).unwrap();
                r
            })
            .collect();
        let grid = Grid::new(256, 40.0).unwrap();
        let psi = GridWaveFunction::gaussian(grid, 1.0, 0.5, 0.2, 1.0);
        let (_, _, q) = schrodinger_experiment(&psi, &PotentialSpec::Quartic { lambda: 0.1 }, 1e-2, 200, SplitOrder::default(), true).unwrap();
        serde_json::to_string_pretty(&(claims, q)).unwrap()
    };
    let (a, b) = (report(), report());
    outcome(a == b, format!("two runs, {} bytes each, identical: {}", a.len(), a == b))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("symbolic suite", symbolic_suite),
        ("numeric cross-check", numeric_cross_check),
        ("canonicalizer/oracle consistency", canonicalizer_consistency),
        ("quantum Yang-Mills field equations", quantum_equations),
        ("Schrodinger Ehrenfest relations", schrodinger_ehrenfest),
        ("Dirac packet", dirac_packet),
        ("Dirac force law", dirac_force),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        println!("{} criterion {} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
        if !o.pass {
            failed.push(k + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
