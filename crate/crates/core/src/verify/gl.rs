use num_complex::Complex64;

use crate::geometry::{hull2d, Hull2D, Rect};
use crate::poly::{critical_points_from_roots, find_roots, ComplexPoly, RootFinderConfig};
use crate::product::{CanonicalProductSpec, RootOrdering};
use crate::rearrange::{PlanStatus, RearrangementPlan};
use crate::verify::report::{CheckResult, PointSet, VerificationReport, Witness};
use crate::{Error, Result};

/// Tolerance for exact polynomial inclusions.
pub const EPS_POLY: f64 = 1e-7;
/// Tolerance for truncation schedules of entire functions.
pub const EPS_ENTIRE: f64 = 1e-3;
/// Largest truncation degree handed to the critical-point solver.
pub const DEFAULT_DEGREE_CAP: usize = 4000;
/// Distances may grow by this much between schedule entries and still count
/// as non-increasing.
const MONOTONE_FLOOR: f64 = 1e-12;

pub(crate) struct PlanarGl {
    pub roots: Vec<Complex64>,
    pub critical: Vec<Complex64>,
    pub hull: Hull2D,
    pub max_distance: f64,
    pub worst: Option<Complex64>,
    pub root_residual: f64,
    pub critical_residual: f64,
    pub converged: bool,
}

/// Roots, critical points and hull distance for a polynomial of degree >= 1.
pub(crate) fn planar_gl(p: &ComplexPoly, rf: &RootFinderConfig) -> Result<PlanarGl> {
    let roots = find_roots(p, rf)?;
    let dp = p.derivative();
    let critical = if dp.degree().unwrap_or(0) >= 1 {
        Some(find_roots(&dp, rf)?)
    } else {
        None
    };
    let hull = hull2d(&roots.roots)?;
    let mut max_distance = 0.0;
    let mut worst = None;
    let crit_pts = critical.as_ref().map(|c| c.roots.clone()).unwrap_or_default();
    for &z in &crit_pts {
        let d = hull.distance(z);
        if worst.is_none() || d > max_distance {
            max_distance = d;
            worst = Some(z);
        }
    }
    Ok(PlanarGl {
        converged: roots.converged && critical.as_ref().is_none_or(|c| c.converged),
        root_residual: roots.max_residual(),
        critical_residual: critical.as_ref().map_or(0.0, |c| c.max_residual()),
        roots: roots.roots,
        critical: crit_pts,
        hull,
        max_distance,
        worst,
    })
}

pub(crate) fn planar_gl_check(name: &str, g: &PlanarGl, eps: f64) -> CheckResult {
    let mut check = if g.max_distance > eps {
        CheckResult::fail(
            name,
            Witness {
                point: vec![g.worst.expect("a distance implies a point")],
                distance: g.max_distance,
                note: "critical point outside the root hull".into(),
            },
        )
    } else {
        CheckResult::pass(name)
    };
    if !g.converged {
        check = CheckResult::uncertain(name, "root finder did not meet its residual tolerance");
    }
    check
        .with_stat("max_hull_distance", g.max_distance)
        .with_stat("max_root_residual", g.root_residual)
        .with_stat("max_critical_residual", g.critical_residual)
        .with_stat("eps", eps)
        .with_points(PointSet::planar("roots", &g.roots))
        .with_points(PointSet::planar("critical_points", &g.critical))
        .with_points(PointSet::planar("hull_vertices", g.hull.vertices()))
}

/// Every critical point of `p` must lie within `eps` of the convex hull of its roots.
pub fn verify_gl_polynomial(p: &ComplexPoly, eps: f64, rf: &RootFinderConfig) -> Result<VerificationReport> {
    match p.degree() {
        Some(d) if d >= 2 => {}
        d => {
            return Err(Error::Precondition(format!(
                "gl-poly needs degree >= 2, got {}",
                d.map_or("zero polynomial".to_string(), |d| d.to_string())
            )))
        }
    }
    let g = planar_gl(p, rf)?;
    Ok(VerificationReport::single("gl-poly", planar_gl_check("gl-poly", &g, eps)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntireOptions {
    pub eps: f64,
    /// Only critical points inside this window are checked.
    pub bbox: Option<Rect>,
    pub degree_cap: usize,
    pub root_finder: RootFinderConfig,
}

impl Default for EntireOptions {
    fn default() -> Self {
        EntireOptions {
            eps: EPS_ENTIRE,
            bbox: None,
            degree_cap: DEFAULT_DEGREE_CAP,
            root_finder: RootFinderConfig::default(),
        }
    }
}

/// Refuse orderings whose power sums are not known to settle.
fn check_ordering(spec: &CanonicalProductSpec, n_max: usize) -> Result<()> {
    if spec.p() == 0 {
        return Ok(());
    }
    let status = match spec.ordering() {
        RootOrdering::Plan(plan) => plan.status(),
        RootOrdering::Identity => {
            RearrangementPlan::from_permutation(spec.family(), spec.p(), (1..=n_max).collect())?.status()
        }
    };
    if status != PlanStatus::Converging {
        return Err(Error::Precondition(format!(
            "root ordering is {status}; a converging rearrangement is required for genus {}",
            spec.p()
        )));
    }
    Ok(())
}

/// Truncation-schedule check for a canonical product.
///
/// For each `N` in `schedule` the critical points of `z^q prod_{n<=N} (1 - z/delta_n)`
/// are compared against the hull of all roots consumed at the largest `N`.
/// Passes iff the final maximum distance is at most `eps` and the distances do
/// not increase along the schedule.
pub fn verify_gl_entire(
    spec: &CanonicalProductSpec,
    schedule: &[usize],
    opts: &EntireOptions,
) -> Result<VerificationReport> {
    if schedule.is_empty() {
        return Err(Error::InvalidArgument("empty truncation schedule".into()));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("truncation schedule must be strictly increasing".into()));
    }
    let mut notes = Vec::new();
    let limit = spec.len().min(opts.degree_cap.saturating_sub(spec.q()));
    let mut effective: Vec<usize> = Vec::new();
    for &n in schedule {
        let capped = n.min(limit);
        if capped != n {
            notes.push(format!("truncation {n} capped to {capped}"));
        }
        if effective.last() != Some(&capped) {
            effective.push(capped);
        }
    }
    let n_max = *effective.last().expect("non-empty schedule");
    check_ordering(spec, n_max)?;

    let deltas = spec.roots(n_max)?;
    let mut hull_points = deltas.clone();
    if spec.q() > 0 || hull_points.is_empty() {
        hull_points.push(Complex64::new(0.0, 0.0));
    }
    let hull = hull2d(&hull_points)?;

    let mut check_stats = Vec::new();
    let mut point_sets = vec![
        PointSet::planar("roots", &hull_points),
        PointSet::planar("hull_vertices", hull.vertices()),
    ];
    let mut distances = Vec::new();
    let mut converged = true;
    let mut outside_box = 0usize;
    let mut worst_final = None;
    for &n in &effective {
        let mut roots = vec![Complex64::new(0.0, 0.0); spec.q()];
        roots.extend_from_slice(&deltas[..n]);
        let crit = critical_points_from_roots(&roots, &opts.root_finder);
        converged &= crit.converged;
        let mut max_d = 0.0f64;
        let mut worst = None;
        for &z in &crit.roots {
            if opts.bbox.is_some_and(|b| !b.contains(z)) {
                outside_box += 1;
                continue;
            }
            let d = hull.distance(z);
            if worst.is_none() || d > max_d {
                max_d = d;
                worst = Some(z);
            }
        }
        check_stats.push((format!("max_distance_N{n}"), max_d));
        check_stats.push((format!("max_residual_N{n}"), crit.max_residual()));
        point_sets.push(PointSet::planar(format!("critical_points_N{n}"), &crit.roots));
        distances.push(max_d);
        worst_final = worst;
    }

    let final_d = *distances.last().expect("non-empty");
    let rise = distances.windows(2).position(|w| w[1] > w[0] + MONOTONE_FLOOR);
    let name = "gl-entire";
    let mut check = if final_d > opts.eps {
        CheckResult::fail(
            name,
            Witness {
                point: vec![worst_final.expect("distance implies point")],
                distance: final_d,
                note: format!("critical point of f_{n_max} outside the hull of consumed roots"),
            },
        )
    } else if let Some(k) = rise {
        // report the worst critical point of the later truncation
        let set = &point_sets[2 + k + 1];
        let w = set
            .planar_points()
            .into_iter()
            .max_by(|a, b| hull.distance(*a).total_cmp(&hull.distance(*b)))
            .expect("distance implies point");
        CheckResult::fail(
            name,
            Witness {
                point: vec![w],
                distance: distances[k + 1],
                note: format!(
                    "hull distance grew from {:e} at N = {} to {:e} at N = {}",
                    distances[k],
                    effective[k],
                    distances[k + 1],
                    effective[k + 1]
                ),
            },
        )
    } else {
        CheckResult::pass(name)
    };
    if !converged {
        check.weaken("critical-point solver did not meet its residual tolerance");
    }
    check.stats.push(("max_hull_distance".into(), final_d));
    check.stats.push(("n_max".into(), n_max as f64));
    check.stats.push(("eps".into(), opts.eps));
    check.stats.push(("outside_bbox".into(), outside_box as f64));
    check.stats.extend(check_stats);
    check.notes.extend(notes);
    check.point_sets = point_sets;
    Ok(VerificationReport::single(name, check))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rearrange::{rearrange_to_zero, RearrangeConfig};
    use crate::roots::{Indexing, RootSequenceFamily};
    use crate::verify::Verdict;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn z_squared_minus_one() {
        let r = verify_gl_polynomial(&ComplexPoly::from_real(&[-1.0, 0.0, 1.0]), EPS_POLY, &Default::default()).unwrap();
        assert_eq!(r.verdict(), Verdict::Pass);
        assert_eq!(r.checks[0].stat("max_hull_distance"), Some(0.0));
    }

    #[test]
    fn cubic_critical_points_inside() {
        let p = ComplexPoly::from_real(&[-6.0, 11.0, -6.0, 1.0]);
        let r = verify_gl_polynomial(&p, EPS_POLY, &Default::default()).unwrap();
        assert_eq!(r.verdict(), Verdict::Pass);
        let mut crit: Vec<f64> = r.checks[0].point_set("critical_points").unwrap().planar_points().iter().map(|z| z.re).collect();
        crit.sort_by(f64::total_cmp);
        assert!((crit[0] - (2.0 - 1.0 / 3f64.sqrt())).abs() < 1e-10);
        assert!((crit[1] - (2.0 + 1.0 / 3f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn low_degree_rejected() {
        let p = ComplexPoly::from_real(&[1.0, 1.0]);
        assert!(matches!(verify_gl_polynomial(&p, EPS_POLY, &Default::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn random_polynomials_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let d = rng.random_range(2..=12);
            let roots: Vec<Complex64> = (0..d)
                .map(|_| Complex64::from_polar(rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU)))
                .collect();
            let r = verify_gl_polynomial(&ComplexPoly::from_roots(&roots, c(1.0, 0.0)), EPS_POLY, &Default::default())
                .unwrap();
            assert_eq!(r.verdict(), Verdict::Pass, "{roots:?} {:?}", r.checks[0].stats);
        }
    }

    #[test]
    fn sine_schedule_is_real_and_monotone() {
        let spec = CanonicalProductSpec::new(0, RootSequenceFamily::sine(1000), RootOrdering::Identity).unwrap();
        let r = verify_gl_entire(&spec, &[20, 40, 80], &EntireOptions { eps: 1e-6, ..Default::default() }).unwrap();
        let check = &r.checks[0];
        assert_eq!(check.verdict(), Verdict::Pass, "{:?}", check.notes);
        for n in [20, 40, 80] {
            let pts = check.point_set(&format!("critical_points_N{n}")).unwrap().planar_points();
            assert_eq!(pts.len(), n - 1);
            assert!(pts.iter().all(|z| z.im.abs() <= 1e-6 && z.re.abs() <= 40.0));
        }
    }

    #[test]
    fn monomial_with_no_roots() {
        let spec = CanonicalProductSpec::new(3, RootSequenceFamily::empty(), RootOrdering::Identity).unwrap();
        let r = verify_gl_entire(&spec, &[1], &Default::default()).unwrap();
        assert_eq!(r.verdict(), Verdict::Pass);
        let crit = r.checks[0].point_set("critical_points_N0").unwrap().planar_points();
        assert_eq!(crit, vec![c(0.0, 0.0); 2]);
        assert!(r.checks[0].notes[0].contains("capped"));
    }

    #[test]
    fn genus_two_plan_schedule() {
        let fam = RootSequenceFamily::quarter_turns(1.0, 0.5, 4000, Indexing::Sequential).unwrap();
        let plan = rearrange_to_zero(&fam, 2, 400, &RearrangeConfig::default()).unwrap();
        let spec = CanonicalProductSpec::new(0, fam, RootOrdering::Plan(Arc::new(plan))).unwrap();
        let r = verify_gl_entire(&spec, &[100, 200, 400], &Default::default()).unwrap();
        assert_eq!(r.verdict(), Verdict::Pass, "{:?}", r.checks[0].stats);
    }

    #[test]
    fn unsettled_ordering_is_refused() {
        // all roots positive: the first power sum diverges in every order
        let fam = RootSequenceFamily::explicit((1..=100).map(|n| c(n as f64, 0.0)).collect()).unwrap();
        let spec = CanonicalProductSpec::with_genus(0, 1, fam, RootOrdering::Identity).unwrap();
        assert!(matches!(verify_gl_entire(&spec, &[10, 20], &Default::default()), Err(Error::Precondition(_))));
        let ok = CanonicalProductSpec::new(0, RootSequenceFamily::sine(10), RootOrdering::Identity).unwrap();
        assert!(verify_gl_entire(&ok, &[4, 4], &Default::default()).is_err());
    }
}
