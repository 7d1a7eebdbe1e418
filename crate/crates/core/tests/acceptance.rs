//! Acceptance run: one PASS/FAIL line per criterion, wall-clock limits included.
//! Built without the libtest harness so the lines are always printed.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use gauss_lucas::geometry::{hull_distance_nd, sep_hull_grid, Rect};
use gauss_lucas::poly::{find_roots, ComplexPoly, RootFinderConfig};
use gauss_lucas::product::{corrected_partial_product, CanonicalProductSpec, PowerSumLedger, RootOrdering};
use gauss_lucas::rearrange::{rearrange_to_zero, PlanStatus, RearrangeConfig};
use gauss_lucas::roots::{Indexing, RootSequenceFamily};
use gauss_lucas::verify::{
    is_theta_stable, verify_corollary_stability, verify_gl_entire, verify_gl_polynomial, verify_gl_sections,
    EntireOptions, MultivariateSpec, SectionOptions, SparsePoly, StabilityCone, StabilityOptions, StabilitySubject,
    Verdict, EPS_POLY,
};
use gauss_lucas::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, fn() -> Outcome, Option<u64>);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn unit_disk(rng: &mut ChaCha8Rng) -> Complex64 {
    let r = rng.random::<f64>().sqrt();
    Complex64::from_polar(r, rng.random_range(0.0..2.0 * PI))
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sine_product() -> Outcome {
    let spec = CanonicalProductSpec::with_genus(0, 1, RootSequenceFamily::sine(10_000), RootOrdering::Identity)
        .map_err(|e| e.to_string())?;
    let oracle = 2.0 / PI;
    let err = |n| -> Result<f64, String> {
        let v = corrected_partial_product(&spec, n, c(0.5, 0.0)).map_err(|e| e.to_string())?;
        Ok((v.to_complex() - oracle).norm())
    };
    let (e1, e2) = (err(1000)?, err(10_000)?);
    ensure(e1 <= 1e-3 && e2 <= 1e-4, format!("err(+-500)={e1:.2e} err(+-5000)={e2:.2e}"))
}

fn polynomial_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rf = RootFinderConfig::default();
    let mut worst = 0.0f64;
    let mut bad = 0;
    for _ in 0..500 {
        let deg = rng.random_range(2..=12);
        let roots: Vec<Complex64> = (0..deg).map(|_| unit_disk(&mut rng)).collect();
        let p = ComplexPoly::from_roots(&roots, c(1.0, 0.0));
        let r = verify_gl_polynomial(&p, EPS_POLY, &rf).map_err(|e| e.to_string())?;
        worst = worst.max(r.checks[0].stat("max_hull_distance").unwrap_or(f64::INFINITY));
        if r.verdict() != Verdict::Pass {
            bad += 1;
        }
    }
    ensure(bad == 0, format!("non-pass={bad}/500 max_hull_distance={worst:.2e}"))
}

fn hurwitz_sine() -> Outcome {
    let spec = CanonicalProductSpec::with_genus(0, 1, RootSequenceFamily::sine(1000), RootOrdering::Identity)
        .map_err(|e| e.to_string())?;
    let schedule = [20, 40, 80, 160];
    let r = verify_gl_entire(&spec, &schedule, &EntireOptions::default()).map_err(|e| e.to_string())?;
    let check = &r.checks[0];
    let mut max_im = 0.0f64;
    let mut max_re = 0.0f64;
    let mut dists = Vec::new();
    for n in schedule {
        let set = check.point_set(&format!("critical_points_N{n}")).ok_or("missing critical points")?;
        for z in set.planar_points() {
            max_im = max_im.max(z.im.abs());
            max_re = max_re.max(z.re.abs());
        }
        dists.push(check.stat(&format!("max_distance_N{n}")).ok_or("missing distance")?);
    }
    // distances at rounding level (the exact value is 0) count as equal
    let monotone = dists.windows(2).all(|w| w[1] <= w[0].max(1e-12));
    ensure(
        max_im <= 1e-6 && max_re <= 160.0 && monotone && r.verdict() == Verdict::Pass,
        format!("max|Im|={max_im:.2e} max|Re|={max_re:.1} distances={dists:?} verdict={}", r.verdict()),
    )
}

fn genus_one_blocks() -> Outcome {
    let fam = RootSequenceFamily::parametric(1.0, 1.0, vec![c(1.0, 0.0), c(-1.0, 0.0)], 100_000, Indexing::Blocks(50))
        .map_err(|e| e.to_string())?;
    let plan = rearrange_to_zero(&fam, 1, 2000, &RearrangeConfig { window: 200, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let (n, v) = plan.final_checkpoint().ok_or("empty plan")?;
    ensure(
        v <= 0.1 && plan.status() == PlanStatus::Converging,
        format!("final N={n} max|V_N|={v:.3e} status={}", plan.status()),
    )
}

fn genus_two_quarter_turns() -> Outcome {
    let fam = RootSequenceFamily::quarter_turns(1.0, 0.5, 100_000, Indexing::Sequential).map_err(|e| e.to_string())?;
    let plan = rearrange_to_zero(&fam, 2, 5000, &RearrangeConfig::default()).map_err(|e| e.to_string())?;
    let sup = plan.sup_after(500).ok_or("no checkpoint at N >= 500")?;
    ensure(sup <= 0.05, format!("sup_(N>=500) max_r|V_N(r)|={sup:.3e} status={}", plan.status()))
}

fn to_real(p: &[Complex64]) -> Vec<f64> {
    p.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn sep_hull_inclusion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0;
    let mut cells = 0usize;
    for trial in 0..50 {
        let n = rng.random_range(1..=12);
        // generic points share no slice, so every other set draws coordinates
        // from a small value set to make the closure actually grow
        let coord = |rng: &mut ChaCha8Rng| {
            if trial % 2 == 0 {
                rng.random_range(-1.0..1.0)
            } else {
                [-0.8, -0.2, 0.5][rng.random_range(0..3)]
            }
        };
        let pts: Vec<Vec<Complex64>> = (0..n)
            .map(|_| (0..2).map(|_| c(coord(&mut rng), coord(&mut rng))).collect())
            .collect();
        let bbox = Rect::square(-1.05, 1.05).map_err(|e| e.to_string())?;
        let g = sep_hull_grid(&pts, &[bbox; 2], 32).map_err(|e| e.to_string())?;
        let real: Vec<Vec<f64>> = pts.iter().map(|p| to_real(p)).collect();
        let diag = g.cell_diagonal();
        for f in g.occupied() {
            cells += 1;
            let d = hull_distance_nd(&real, &to_real(&g.cell_center(f)), 1e-9 * diag, diag, 10_000)
                .map_err(|e| e.to_string())?;
            if d.upper > diag {
                violations += 1;
            }
        }
    }
    let unit = Rect::square(-1.0 / 62.0, 1.0 + 1.0 / 62.0).map_err(|e| e.to_string())?;
    let two = vec![vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(1.0, 0.0), c(1.0, 0.0)]];
    let two_cells = sep_hull_grid(&two, &[unit; 2], 32).map_err(|e| e.to_string())?.occupied_count();
    let corners: Vec<Vec<Complex64>> =
        [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)].iter().map(|&(a, b)| vec![c(a, 0.0), c(b, 0.0)]).collect();
    let g4 = sep_hull_grid(&corners, &[unit; 2], 32).map_err(|e| e.to_string())?;
    let square_full = (0..32).all(|i| (0..32).all(|j| g4.mask()[g4.flat_index(&[i, 0, j, 0])]));
    ensure(
        violations == 0 && two_cells == 2 && g4.occupied_count() == 1024 && square_full,
        format!(
            "cells={cells} violations={violations} two-point={two_cells} corners={}",
            g4.occupied_count()
        ),
    )
}

fn corollary_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cone = StabilityCone::upper_half_planes(2);
    let opts = StabilityOptions::default();
    let mut failures = 0;
    let mut checked = 0;
    for _ in 0..100 {
        let nf = rng.random_range(2..=4);
        let forms: Vec<(Vec<Complex64>, Complex64)> = (0..nf)
            .map(|_| {
                let mut a = [rng.random::<f64>(), rng.random::<f64>()];
                if a[0] == 0.0 && a[1] == 0.0 {
                    a[0] = 1.0;
                }
                let b = c(rng.random_range(-1.0..1.0), rng.random::<f64>());
                (vec![c(a[0], 0.0), c(a[1], 0.0)], b)
            })
            .collect();
        let f = SparsePoly::affine_product(2, &forms).map_err(|e| e.to_string())?;
        for m in 1..=2 {
            let df = f.partial(m).map_err(|e| e.to_string())?;
            if df.is_zero() {
                continue;
            }
            let sub = StabilitySubject::Multivariate(MultivariateSpec::Polynomial(df));
            let ev = is_theta_stable(&sub, &cone, &opts).map_err(|e| e.to_string())?;
            let subject = StabilitySubject::Multivariate(MultivariateSpec::Polynomial(f.clone()));
            let r = verify_corollary_stability(&subject, &cone, m, &opts).map_err(|e| e.to_string())?;
            checked += 1;
            if !ev.is_stable() || r.verdict() == Verdict::Fail {
                failures += 1;
            }
        }
    }
    let rf = RootFinderConfig::default();
    let mut worst_im = f64::NEG_INFINITY;
    for _ in 0..200 {
        let deg = rng.random_range(2..=12);
        let roots: Vec<Complex64> = (0..deg)
            .map(|_| {
                let z = unit_disk(&mut rng) * 2.0;
                // a quarter of the roots sit exactly on the boundary line
                if rng.random_range(0..4) == 0 {
                    c(z.re, 0.0)
                } else {
                    c(z.re, -z.im.abs())
                }
            })
            .collect();
        let d = ComplexPoly::from_roots(&roots, c(1.0, 0.0)).derivative();
        let solve = find_roots(&d, &rf).map_err(|e| e.to_string())?;
        for z in solve.roots {
            worst_im = worst_im.max(z.im);
        }
    }
    ensure(
        failures == 0 && worst_im <= 1e-8,
        format!("partials checked={checked} witnesses={failures} univariate max Im(critical)={worst_im:.2e}"),
    )
}

fn cross_module() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rf = RootFinderConfig::default();
    let opts = SectionOptions::default();
    let mut mismatches = 0;
    for _ in 0..50 {
        let deg = rng.random_range(2..=10);
        let roots: Vec<Complex64> = (0..deg).map(|_| unit_disk(&mut rng)).collect();
        let p = ComplexPoly::from_roots(&roots, c(1.0, 0.0));
        let terms = p.coeffs().iter().enumerate().map(|(e, &a)| (a, vec![e as u32])).collect();
        let mv = MultivariateSpec::Polynomial(SparsePoly::new(1, terms).map_err(|e| e.to_string())?);
        let a = verify_gl_sections(&mv, 1, &[vec![]], &opts).map_err(|e| e.to_string())?.verdict();
        let b = verify_gl_polynomial(&p, opts.eps, &rf).map_err(|e| e.to_string())?.verdict();
        if a != b {
            mismatches += 1;
        }
    }
    let sine = || CanonicalProductSpec::with_genus(0, 1, RootSequenceFamily::sine(1000), RootOrdering::Identity);
    let spec = sine().map_err(|e| e.to_string())?;
    let entire = verify_gl_entire(&spec, &opts.schedule, &opts.entire).map_err(|e| e.to_string())?.verdict();
    let mv = MultivariateSpec::CoordinateProducts(vec![sine().map_err(|e| e.to_string())?]);
    let sections = verify_gl_sections(&mv, 1, &[vec![]], &opts).map_err(|e| e.to_string())?.verdict();
    if entire != sections {
        mismatches += 1;
    }

    let mut worst = 0.0f64;
    for p in 1..=4 {
        let deltas: Vec<Complex64> = (0..10_000)
            .map(|_| Complex64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..2.0 * PI)))
            .collect();
        let mut ledger = PowerSumLedger::new(p);
        for &d in &deltas {
            ledger = ledger.advanced(d).map_err(|e| e.to_string())?;
        }
        let fresh = PowerSumLedger::from_roots(p, &deltas).map_err(|e| e.to_string())?;
        for (x, y) in ledger.sums().iter().zip(fresh.sums()) {
            worst = worst.max((x - y).norm());
        }
    }
    ensure(
        mismatches == 0 && worst <= 1e-10,
        format!("verdict mismatches={mismatches} max|incremental - recomputed|={worst:.2e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, sine_product, Some(1)),
        (2, polynomial_suite, Some(10)),
        (3, hurwitz_sine, Some(30)),
        (4, genus_one_blocks, Some(5)),
        (5, genus_two_quarter_turns, Some(10)),
        (6, sep_hull_inclusion, Some(60)),
        (7, corollary_suite, Some(20)),
        (8, cross_module, None),
    ];
    let mut all = true;
    for (id, run, limit) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let in_time = limit.is_none_or(|s| took < Duration::from_secs(s));
        let limit_text = limit.map_or("none".to_string(), |s| format!("{s}s"));
        let (ok, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        all &= ok;
        println!(
            "criterion {id}: {} | {detail} | time {:.3}s (limit {limit_text})",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
