//! One PASS/FAIL line per acceptance criterion; exits non-zero on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semigabor::checks::{self, Check, RoundTrip};
use semigabor::presets::{GaussianEnvelope, Grids};
use semigabor::*;

struct Outcome {
    checks: Vec<Check>,
    elapsed: Duration,
    budget: Duration,
}

fn timed(budget_secs: f64, f: impl FnOnce() -> Result<Vec<Check>>) -> Outcome {
    let start = Instant::now();
    let checks = f().unwrap_or_else(|e| vec![Check::flag(format!("error: {e}"), false)]);
    Outcome { checks, elapsed: start.elapsed(), budget: Duration::from_secs_f64(budget_secs) }
}

fn report(index: usize, title: &str, outcome: &Outcome) -> bool {
    let in_time = outcome.elapsed <= outcome.budget;
    let pass = in_time && checks::all_pass(&outcome.checks);
    println!(
        "criterion {index}: {} {title} ({:.2} s, budget {:.0} s)",
        if pass { "PASS" } else { "FAIL" },
        outcome.elapsed.as_secs_f64(),
        outcome.budget.as_secs_f64()
    );
    for c in &outcome.checks {
        println!(
            "    [{}] {} = {:.6e} (expected {:.6e}, tol {:.1e})",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            c.value,
            c.expected,
            c.tolerance
        );
    }
    pass
}

fn default_round_trips(group: &GroupDescriptor) -> Result<Vec<(TransformKind, RoundTrip)>> {
    let grids = Grids::default_for(group)?;
    let f = GaussianEnvelope::standard(group).to_field(group, &grids)?;
    TransformKind::ALL
        .iter()
        .map(|&kind| {
            let window = checks::standard_window(group, &grids, kind)?;
            Ok((kind, checks::round_trip(kind, &f, &window, &grids.freq, EvalMode::Oracle, DEFAULT_FULL_CAP)?))
        })
        .collect()
}

fn main() -> ExitCode {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut results = Vec::new();

    let c1 = timed(1.0, || {
        let mut out = Vec::new();
        for g in [make_affine(), make_e2(), make_weyl_heisenberg(8)?] {
            out.extend(checks::group_axioms(&g, 1000, &mut rng, 1e-12)?);
        }
        Ok(out)
    });
    results.push(report(1, "group axioms, delta multiplicativity, dual contravariance", &c1));

    let c2 = timed(1.0, || checks::measure_identities(1e-4));
    results.push(report(2, "change of variables and dual measure scaling", &c2));

    let c3 = timed(30.0, || {
        let mut out = vec![checks::stft_oracle_equivalence(&mut rng, 1e-10)?];
        for g in [make_affine(), make_e2()] {
            out.extend(checks::transform_oracle_equivalence(&g, &TransformKind::ALL, &mut rng, 1e-8)?);
        }
        Ok(out)
    });
    results.push(report(3, "fast paths equal direct quadrature", &c3));

    // Criteria 4 and 6 share the analysis runs at default grids.
    let start = Instant::now();
    let runs: Result<Vec<(String, TransformKind, RoundTrip)>> = [make_affine(), make_e2()]
        .iter()
        .map(|g| Ok(default_round_trips(g)?.into_iter().map(|(k, r)| (g.name(), k, r)).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()
        .map(|v| v.concat());
    let shared = start.elapsed();
    let c4 = timed(300.0, || {
        Ok(runs
            .as_ref()
            .map_err(Clone::clone)?
            .iter()
            .map(|(g, k, r)| Check::close(format!("{g}.{k}.plancherel_ratio"), r.ratio, 1.0, 1e-2))
            .collect())
    });
    let c4 = Outcome { elapsed: c4.elapsed + shared, ..c4 };
    results.push(report(4, "Plancherel ratios at default grids, affine and E(2)", &c4));

    let c5 = timed(120.0, || {
        let g = make_affine();
        let grids = Grids::affine(32, 256, 256)?;
        Ok(vec![
            checks::orthogonality_quartets(&g, &grids, TransformKind::V, 3, &mut rng, 1e-2)?,
            checks::orthogonality_quartets(&g, &grids, TransformKind::G, 3, &mut rng, 1e-2)?,
        ])
    });
    results.push(report(5, "orthogonality relations on random quartets", &c5));

    let c6 = timed(600.0, || {
        let mut out: Vec<Check> = runs
            .as_ref()
            .map_err(Clone::clone)?
            .iter()
            .map(|(g, k, r)| Check::bounded(format!("{g}.{k}.reconstruction_rel_err"), r.rel_err, 2e-2))
            .collect();
        let g = make_affine();
        for kind in TransformKind::ALL {
            let errs = checks::convergence_errors(&g, kind, &[64, 128, 256])?;
            for (n, e) in [64, 128, 256].iter().zip(&errs) {
                out.push(Check::bounded(format!("affine.{kind}.rel_err[K={n}]"), *e, f64::INFINITY));
            }
            out.push(Check::flag(format!("affine.{kind}.strictly_decreasing"), errs.windows(2).all(|w| w[1] < w[0])));
        }
        Ok(out)
    });
    let c6 = Outcome { elapsed: c6.elapsed + shared, ..c6 };
    results.push(report(6, "reconstruction error and 3-point convergence", &c6));

    let c7 = timed(10.0, || checks::example_norms(1e-3));
    results.push(report(7, "closed-form window norms (box window: sqrt(2N), not 2N)", &c7));

    let c8 = timed(1.0, || Ok(vec![checks::phi_homomorphism(1000, &mut rng, 1e-12)?]));
    results.push(report(8, "Phi is a homomorphism on random affine pairs", &c8));

    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
