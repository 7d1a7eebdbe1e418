//! Running a parsed scenario and writing its artifacts.
//!
//! Every run writes into one output directory:
//!
//! - `report.txt`: the verification report (timestamp on its first line only);
//! - `<check>_<set>.csv`: point sets, one point per row;
//! - `plan.txt` / `plan_<k>.txt`: rearrangement plans, when one was built;
//! - `mask.txt`: the separately convex grid, when one was built;
//! - `MANIFEST`: completeness flag, exit code and the list of files.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{FamilyDecl, FamilyKind, Mode, MultiKind, Ordering, PolyDecl, ScenarioConfig};
use crate::geometry::{hull_distance_nd, sep_hull_contains, sep_hull_grid_capped, Membership, Rect};
use crate::poly::{ComplexPoly, RootFinderConfig};
use crate::product::{corrected_partial_product, CanonicalProductSpec, RootOrdering};
use crate::rearrange::{rearrange_to_zero, PlanStatus, RearrangeConfig, RearrangementPlan};
use crate::roots::{estimate_genus, rearrangeability_diagnostic, RootSequenceFamily};
use crate::verify::{
    stability_report, verify_corollary_stability, verify_gl_entire, verify_gl_polynomial, verify_gl_sections,
    verify_sections_direct, CheckResult, EntireOptions, MultivariateSpec, PointSet, SectionOptions, SparsePoly,
    StabilityCone, StabilityOptions, StabilitySubject, VerificationReport, Witness, BOUNDARY_TOL, EPS_ENTIRE,
    EPS_POLY,
};
use crate::{Error, Result};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_UNCERTAIN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `numeric.seed`.
    pub seed: Option<u64>,
    /// Text for the report's `generated:` line; the current Unix time if `None`.
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report: Option<VerificationReport>,
    pub error: Option<String>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<PathBuf>,
}

struct Artifacts<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Artifacts<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(PathBuf::from(name));
        Ok(())
    }
}

pub fn build_family(decl: &FamilyDecl) -> Result<RootSequenceFamily> {
    match &decl.kind {
        FamilyKind::Explicit(roots) => RootSequenceFamily::explicit(roots.clone()),
        FamilyKind::Sine { count } => Ok(RootSequenceFamily::sine(*count)),
        FamilyKind::Parametric { scale, exponent, phases, count, indexing } => {
            RootSequenceFamily::parametric(*scale, *exponent, phases.clone(), *count, *indexing)
        }
    }
}

fn genus_of(decl: &FamilyDecl, family: &RootSequenceFamily) -> Result<usize> {
    match decl.genus {
        Some(p) => Ok(p),
        None => Ok(estimate_genus(family, 64)?.p),
    }
}

/// Canonical product for a family, rearranged over `n_needed` roots when asked.
pub fn build_spec(
    decl: &FamilyDecl,
    ordering: Ordering,
    cfg: &ScenarioConfig,
    n_needed: usize,
) -> Result<(CanonicalProductSpec, Option<RearrangementPlan>)> {
    let family = build_family(decl)?;
    let p = genus_of(decl, &family)?;
    let (ord, plan) = if ordering == Ordering::Rearranged && p > 0 {
        let rc = RearrangeConfig { window: cfg.numeric.window, target: cfg.numeric.target };
        let plan = rearrange_to_zero(&family, p, n_needed, &rc)?;
        (RootOrdering::Plan(Arc::new(plan.clone())), Some(plan))
    } else {
        (RootOrdering::Identity, None)
    };
    Ok((CanonicalProductSpec::with_genus(decl.q, p, family, ord)?, plan))
}

pub fn build_polynomial(decl: &PolyDecl) -> ComplexPoly {
    match decl {
        PolyDecl::Coefficients(c) => ComplexPoly::new(c.clone()),
        PolyDecl::Roots { roots, leading } => ComplexPoly::from_roots(roots, *leading),
    }
}

fn build_multivariate(cfg: &ScenarioConfig, files: &mut Artifacts) -> Result<MultivariateSpec> {
    let mv = cfg.multivariate.as_ref().ok_or_else(|| Error::Precondition("no [multivariate] section".into()))?;
    match &mv.kind {
        MultiKind::Polynomial { terms, forms } if forms.is_empty() => {
            Ok(MultivariateSpec::Polynomial(SparsePoly::new(mv.m, terms.clone())?))
        }
        MultiKind::Polynomial { forms, .. } => Ok(MultivariateSpec::Polynomial(SparsePoly::affine_product(mv.m, forms)?)),
        MultiKind::Products => {
            let n_needed = *cfg.numeric.schedule.last().expect("schedule validated non-empty");
            let mut specs = Vec::new();
            for (k, decl) in cfg.coordinate_families.iter().enumerate() {
                let (spec, plan) = build_spec(decl, cfg.product.ordering, cfg, n_needed)?;
                if let Some(plan) = plan {
                    files.write(&format!("plan_{}.txt", k + 1), &plan.to_text())?;
                }
                specs.push(spec);
            }
            Ok(MultivariateSpec::CoordinateProducts(specs))
        }
    }
}

fn root_finder(cfg: &ScenarioConfig) -> RootFinderConfig {
    RootFinderConfig { tol: cfg.numeric.tol, max_iter: cfg.numeric.max_iter, ..Default::default() }
}

fn stability_options(cfg: &ScenarioConfig, seed: u64) -> StabilityOptions {
    StabilityOptions {
        budget: cfg.numeric.budget,
        tol: BOUNDARY_TOL,
        box_radius: cfg.numeric.box_radius,
        seed,
        root_limit: cfg.numeric.degree_cap,
        root_finder: root_finder(cfg),
    }
}

fn cone(cfg: &ScenarioConfig, m: usize) -> Result<StabilityCone> {
    match &cfg.numeric.theta {
        Some(t) => StabilityCone::new(t.clone()),
        None => Ok(StabilityCone::upper_half_planes(m)),
    }
}

fn bbox_rect(b: [f64; 4]) -> Result<Rect> {
    Rect::new(b[0], b[1], b[2], b[3])
}

/// Evaluate the corrected truncated product at the configured points.
fn add_evaluations(check: &mut CheckResult, spec: &CanonicalProductSpec, n: usize, points: &[Complex64]) -> Result<()> {
    for (k, &z) in points.iter().enumerate() {
        let v = corrected_partial_product(spec, n.min(spec.len()), z)?;
        check.stats.push((format!("eval{}_log_abs", k + 1), v.log_abs()));
        check.stats.push((format!("eval{}_re", k + 1), v.to_complex().re));
        check.stats.push((format!("eval{}_im", k + 1), v.to_complex().im));
    }
    Ok(())
}

fn random_sections(m: usize, count: usize, radius: f64, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (1..m)
                .map(|_| Complex64::new(rng.random_range(-radius..=radius), rng.random_range(-radius..=radius)))
                .collect()
        })
        .collect()
}

/// Per-coordinate box around `points`, padded by 5% of the span (or 0.5 when flat).
fn auto_bbox(points: &[Vec<Complex64>], m: usize) -> Result<Vec<Rect>> {
    (0..m)
        .map(|k| {
            let (mut a, mut b, mut c, mut d) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for p in points {
                a = a.min(p[k].re);
                b = b.max(p[k].re);
                c = c.min(p[k].im);
                d = d.max(p[k].im);
            }
            let pad = |lo: f64, hi: f64| if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
            let (pr, pi) = (pad(a, b), pad(c, d));
            Rect::new(a - pr, b + pr, c - pi, d + pi)
        })
        .collect()
}

fn run_sep_hull(cfg: &ScenarioConfig, files: &mut Artifacts) -> Result<VerificationReport> {
    let m = cfg.points[0].len();
    let bbox = match cfg.numeric.bbox {
        Some(b) => vec![bbox_rect(b)?; m],
        None => auto_bbox(&cfg.points, m)?,
    };
    let grid = sep_hull_grid_capped(&cfg.points, &bbox, cfg.numeric.resolution, cfg.numeric.iteration_cap)?;
    files.write("mask.txt", &grid.to_text())?;

    let mut closure = if grid.converged() {
        CheckResult::pass("sep-hull")
    } else {
        CheckResult::uncertain("sep-hull", "iteration cap reached before a fixed point")
    };
    closure.stats.push(("occupied_cells".into(), grid.occupied_count() as f64));
    closure.stats.push(("iterations".into(), grid.iterations() as f64));
    closure.stats.push(("cell_diagonal".into(), grid.cell_diagonal()));
    let (mut inside, mut outside, mut unsure) = (0, 0, 0);
    for (k, q) in cfg.queries.iter().enumerate() {
        let res = sep_hull_contains(&grid, q);
        match res {
            Membership::Inside => inside += 1,
            Membership::Outside => outside += 1,
            Membership::Uncertain => unsure += 1,
        }
        closure.notes.push(format!("query {}: {res:?}", k + 1).to_lowercase());
    }
    closure.stats.push(("queries_inside".into(), inside as f64));
    closure.stats.push(("queries_outside".into(), outside as f64));
    closure.stats.push(("queries_uncertain".into(), unsure as f64));
    closure.point_sets.push(PointSet { name: "points".into(), dims: m, points: cfg.points.clone() });
    if !cfg.queries.is_empty() {
        closure.point_sets.push(PointSet { name: "queries".into(), dims: m, points: cfg.queries.clone() });
    }

    // grid hull against the ordinary hull of the same points
    let real = |p: &[Complex64]| p.iter().flat_map(|z| [z.re, z.im]).collect::<Vec<f64>>();
    let pts: Vec<Vec<f64>> = cfg.points.iter().map(|p| real(p)).collect();
    let diag = grid.cell_diagonal();
    let mut worst = 0.0f64;
    let mut violation: Option<(Vec<Complex64>, f64)> = None;
    let mut undecided = 0usize;
    for f in grid.occupied() {
        let c = grid.cell_center(f);
        let d = hull_distance_nd(&pts, &real(&c), 1e-9 * diag, diag, 10_000)?;
        if d.upper <= diag {
            worst = worst.max(d.upper);
        } else if d.lower > diag {
            if violation.as_ref().is_none_or(|(_, v)| d.lower > *v) {
                violation = Some((c, d.lower));
            }
        } else {
            undecided += 1;
        }
    }
    let mut inclusion = match violation {
        Some((point, distance)) => CheckResult::fail(
            "hull-inclusion",
            Witness { point, distance, note: "occupied cell centre farther than one cell diagonal from the convex hull".into() },
        ),
        None if undecided > 0 => CheckResult::uncertain("hull-inclusion", "distance bounds straddle the cell diagonal"),
        None => CheckResult::pass("hull-inclusion"),
    };
    inclusion.stats.push(("max_upper_distance".into(), worst));
    inclusion.stats.push(("cell_diagonal".into(), diag));
    inclusion.stats.push(("undecided_cells".into(), undecided as f64));

    let mut report = VerificationReport::new(cfg.id.clone());
    report.checks.push(closure);
    report.checks.push(inclusion);
    Ok(report)
}

fn execute(cfg: &ScenarioConfig, seed: u64, files: &mut Artifacts) -> Result<VerificationReport> {
    let rf = root_finder(cfg);
    let n = &cfg.numeric;
    let mut report = match cfg.mode {
        Mode::GlPoly => {
            let p = build_polynomial(cfg.polynomial.as_ref().expect("validated"));
            verify_gl_polynomial(&p, n.eps.unwrap_or(EPS_POLY), &rf)?
        }
        Mode::GlEntire => {
            let decl = cfg.family.as_ref().expect("validated");
            let n_max = *n.schedule.last().expect("validated");
            let (spec, plan) = build_spec(decl, cfg.product.ordering, cfg, n_max)?;
            if let Some(plan) = &plan {
                files.write("plan.txt", &plan.to_text())?;
            }
            let opts = EntireOptions {
                eps: n.eps.unwrap_or(EPS_ENTIRE),
                bbox: n.bbox.map(bbox_rect).transpose()?,
                degree_cap: n.degree_cap,
                root_finder: rf,
            };
            let mut r = verify_gl_entire(&spec, &n.schedule, &opts)?;
            add_evaluations(&mut r.checks[0], &spec, n_max, &cfg.product.eval)?;
            r
        }
        Mode::GlSections => {
            let mv = build_multivariate(cfg, files)?;
            let m = mv.m();
            let samples = if cfg.sections.is_empty() {
                random_sections(m, n.samples, n.box_radius, seed)
            } else {
                cfg.sections.clone()
            };
            let opts = SectionOptions {
                eps: n.eps.unwrap_or(EPS_POLY),
                root_finder: rf,
                schedule: n.schedule.clone(),
                entire: EntireOptions {
                    eps: n.eps.unwrap_or(EPS_ENTIRE),
                    bbox: n.bbox.map(bbox_rect).transpose()?,
                    degree_cap: n.degree_cap,
                    root_finder: rf,
                },
            };
            let mut r = verify_gl_sections(&mv, n.coordinate, &samples, &opts)?;
            if cfg.sections.is_empty() {
                r.checks[0].stats.push(("sample_box_radius".into(), n.box_radius));
                r.checks[0].stats.push(("sample_seed".into(), seed as f64));
            }
            if let (true, MultivariateSpec::Polynomial(poly), Some(b)) = (n.direct, &mv, n.bbox) {
                if m == 2 {
                    let (direct, grid) =
                        verify_sections_direct(poly, n.coordinate, &samples, &[bbox_rect(b)?; 2], n.resolution, &rf)?;
                    files.write("mask.txt", &grid.to_text())?;
                    r.checks.extend(direct.checks);
                } else {
                    r.checks[0].notes.push("direct grid check skipped: needs m = 2".into());
                }
            }
            r
        }
        Mode::Rearrange => {
            let decl = cfg.family.as_ref().expect("validated");
            let family = build_family(decl)?;
            let p = genus_of(decl, &family)?;
            let plan = rearrange_to_zero(&family, p, n.n_target, &RearrangeConfig { window: n.window, target: n.target })?;
            files.write("plan.txt", &plan.to_text())?;
            let mut check = match plan.status() {
                PlanStatus::Converging => CheckResult::pass("rearrange"),
                PlanStatus::Stalled => CheckResult::uncertain(
                    "rearrange",
                    "plan stalled: power sums did not settle below the target; try a larger window or N",
                ),
            };
            check.stats.push(("genus".into(), p as f64));
            check.stats.push(("length".into(), plan.len() as f64));
            check.stats.push(("window".into(), plan.window() as f64));
            check.stats.push(("target".into(), plan.target()));
            if let Some((last_n, v)) = plan.final_checkpoint() {
                check.stats.push(("final_n".into(), last_n as f64));
                check.stats.push(("final_max_abs_power_sum".into(), v));
            }
            for (cn, v) in plan.checkpoints() {
                check.stats.push((format!("checkpoint_N{cn}"), *v));
            }
            let diag = rearrangeability_diagnostic(&family, p, n.n_target.max(64));
            check.notes.push(format!("rearrangeability: {} ({})", diag.verdict, diag.note));
            if plan.len() < n.n_target {
                check.notes.push(format!("family exhausted after {} roots", plan.len()));
            }
            let ordered: Vec<Complex64> =
                (1..=plan.len()).map(|k| plan.apply(&family, k)).collect::<Result<_>>()?;
            check.point_sets.push(PointSet::planar("ordered_roots", &ordered));
            if !cfg.product.eval.is_empty() {
                let spec =
                    CanonicalProductSpec::with_genus(decl.q, p, family, RootOrdering::Plan(Arc::new(plan.clone())))?;
                add_evaluations(&mut check, &spec, plan.len(), &cfg.product.eval)?;
            }
            VerificationReport::single("rearrange", check)
        }
        Mode::Stability | Mode::Corollary => {
            let subject = match (&cfg.multivariate, &cfg.polynomial) {
                (Some(_), _) => StabilitySubject::Multivariate(build_multivariate(cfg, files)?),
                (None, Some(PolyDecl::Roots { roots, .. })) => StabilitySubject::Roots(roots.clone()),
                (None, Some(p)) => StabilitySubject::Polynomial(build_polynomial(p)),
                (None, None) => unreachable!("validated"),
            };
            let m = match &subject {
                StabilitySubject::Multivariate(mv) => mv.m(),
                _ => 1,
            };
            let cone = cone(cfg, m)?;
            let opts = stability_options(cfg, seed);
            if cfg.mode == Mode::Stability {
                stability_report(&subject, &cone, &opts)?
            } else {
                verify_corollary_stability(&subject, &cone, n.coordinate, &opts)?
            }
        }
        Mode::SepHull => run_sep_hull(cfg, files)?,
    };
    report.scenario_id = cfg.id.clone();
    Ok(report)
}

fn manifest(complete: bool, exit_code: i32, error: Option<&str>, files: &[PathBuf]) -> String {
    let mut s = String::from("# artifact manifest\n");
    s.push_str(&format!("status = {}\n", if complete { "complete" } else { "incomplete" }));
    s.push_str(&format!("exit_code = {exit_code}\n"));
    if let Some(e) = error {
        s.push_str(&format!("error = {}\n", e.replace('\n', " | ")));
    }
    for f in files {
        s.push_str(&format!("{}\n", f.display()));
    }
    s
}

fn now_stamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("unix:{secs}")
}

/// Run `cfg`, writing artifacts into `out_dir`. Never panics on bad input:
/// failures become exit code 3 with an incomplete MANIFEST.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path, opts: &RunOptions) -> RunOutcome {
    if let Err(e) = fs::create_dir_all(out_dir) {
        return RunOutcome {
            exit_code: EXIT_ERROR,
            report: None,
            error: Some(format!("cannot create {}: {e}", out_dir.display())),
            artifacts: Vec::new(),
        };
    }
    let mut files = Artifacts { dir: out_dir, files: Vec::new() };
    let seed = opts.seed.unwrap_or(cfg.numeric.seed);
    let result = execute(cfg, seed, &mut files).and_then(|mut report| {
        for check in &report.checks {
            for set in &check.point_sets {
                files.write(&format!("{}_{}.csv", check.name(), set.name), &set.to_csv(check.name()))?;
            }
        }
        report.artifacts = files.files.clone();
        report.artifacts.push(PathBuf::from("report.txt"));
        let stamp = opts.timestamp.clone().unwrap_or_else(now_stamp);
        files.write("report.txt", &report.to_text(Some(&stamp)))?;
        Ok(report)
    });
    match result {
        Ok(report) => {
            let code = report.exit_code();
            let text = manifest(true, code, None, &files.files);
            if let Err(e) = fs::write(out_dir.join("MANIFEST"), text) {
                return RunOutcome {
                    exit_code: EXIT_ERROR,
                    report: Some(report),
                    error: Some(format!("cannot write MANIFEST: {e}")),
                    artifacts: files.files,
                };
            }
            RunOutcome { exit_code: code, report: Some(report), error: None, artifacts: files.files }
        }
        Err(e) => {
            let msg = e.to_string();
            let _ = fs::write(out_dir.join("MANIFEST"), manifest(false, EXIT_ERROR, Some(&msg), &files.files));
            RunOutcome { exit_code: EXIT_ERROR, report: None, error: Some(msg), artifacts: files.files }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn run(text: &str) -> (RunOutcome, tempfile::TempDir) {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(text).unwrap();
        let out = run_scenario(&cfg, dir.path(), &RunOptions { timestamp: Some("fixed".into()), ..Default::default() });
        (out, dir)
    }

    #[test]
    fn gl_poly_quadratic() {
        let (out, dir) = run("[scenario]\nid = q\nmode = gl-poly\n[polynomial]\ncoefficients = -1 0 1\n");
        assert_eq!(out.exit_code, EXIT_PASS);
        let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
        assert!(report.contains("max_hull_distance: 0e0"));
        let manifest = fs::read_to_string(dir.path().join("MANIFEST")).unwrap();
        assert!(manifest.contains("status = complete"));
        assert!(manifest.contains("gl-poly_roots.csv"));
    }

    #[test]
    fn unstable_root_exits_one_with_witness() {
        let (out, dir) = run("[scenario]\nmode = stability\n[polynomial]\nroots = (0,1)\n");
        assert_eq!(out.exit_code, EXIT_FAIL);
        let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
        assert!(report.contains("witness: (0.0,1.0)"));
    }

    #[test]
    fn rearrange_blocks_writes_plan() {
        let (out, dir) = run(
            "[scenario]\nmode = rearrange\n[family]\nkind = parametric\nphases = 1 -1\nindexing = blocks:50\ncount = 4000\n[numeric]\nn_target = 2000\ntarget = 0.1\n",
        );
        assert_eq!(out.exit_code, EXIT_PASS);
        let plan = RearrangementPlan::from_text(&fs::read_to_string(dir.path().join("plan.txt")).unwrap()).unwrap();
        assert!(plan.final_checkpoint().unwrap().1 <= 0.1);
    }

    #[test]
    fn precondition_failure_is_exit_three() {
        let (out, dir) = run("[scenario]\nmode = corollary\n[polynomial]\nroots = (0,1) (1,0)\n");
        assert_eq!(out.exit_code, EXIT_ERROR);
        assert!(out.error.unwrap().contains("not theta-stable"));
        let manifest = fs::read_to_string(dir.path().join("MANIFEST")).unwrap();
        assert!(manifest.contains("status = incomplete"));
    }

    #[test]
    fn sep_hull_with_queries() {
        let text = "[scenario]\nmode = sep-hull\n[points]\npoint = 0 0\npoint = 0 1\npoint = 1 0\npoint = 1 1\nquery = 0.5 0.5\n\
                    [numeric]\nresolution = 16\nbbox = -0.0333333333333333 1.0333333333333334 -0.0333333333333333 1.0333333333333334\n";
        let (out, dir) = run(text);
        assert_eq!(out.exit_code, EXIT_PASS, "{:?}", out.report);
        let r = out.report.unwrap();
        assert_eq!(r.check("sep-hull").unwrap().stat("queries_inside"), Some(1.0));
        assert!(dir.path().join("mask.txt").exists());
    }

    #[test]
    fn csv_artifacts_are_deterministic() {
        let text = "[scenario]\nmode = gl-sections\n[multivariate]\nm = 2\nform = 1 1 ; 0\nform = 1 -1 ; 2\n[numeric]\nsamples = 5\nseed = 4\n";
        let (a, da) = run(text);
        let (b, db) = run(text);
        assert_eq!(a.exit_code, EXIT_PASS);
        assert_eq!(a.artifacts, b.artifacts);
        for f in a.artifacts.iter().filter(|f| f.extension().is_some_and(|e| e == "csv")) {
            assert_eq!(fs::read(da.path().join(f)).unwrap(), fs::read(db.path().join(f)).unwrap());
        }
    }
}
