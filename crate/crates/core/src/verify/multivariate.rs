use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::geometry::{sep_hull_contains, sep_hull_grid, Membership, Rect, SepHullGrid};
use crate::poly::{ComplexPoly, RootFinderConfig};
use crate::product::{partial_product, CanonicalProductSpec};
use crate::verify::gl::{planar_gl, verify_gl_entire, EntireOptions, EPS_POLY};
use crate::verify::report::{CheckResult, PointSet, Verdict, VerificationReport, Witness};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Polynomial in `M` complex variables, stored as exponent vector -> coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePoly {
    m: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

impl SparsePoly {
    pub fn new(m: usize, terms: Vec<(Complex64, Vec<u32>)>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("polynomial needs at least one variable".into()));
        }
        let mut map = BTreeMap::new();
        for (c, e) in terms {
            if e.len() != m {
                return Err(Error::InvalidArgument(format!("exponent vector {e:?} should have {m} entries")));
            }
            *map.entry(e).or_insert(ZERO) += c;
        }
        map.retain(|_, c| *c != ZERO);
        Ok(SparsePoly { m, terms: map })
    }

    /// `prod_k (sum_j a_kj z_j + b_k)`.
    pub fn affine_product(m: usize, forms: &[(Vec<Complex64>, Complex64)]) -> Result<Self> {
        let mut acc = SparsePoly::new(m, vec![(Complex64::new(1.0, 0.0), vec![0; m])])?;
        for (a, b) in forms {
            if a.len() != m {
                return Err(Error::InvalidArgument(format!("affine form has {} coefficients, expected {m}", a.len())));
            }
            let mut terms = vec![(*b, vec![0; m])];
            for (j, &aj) in a.iter().enumerate() {
                let mut e = vec![0; m];
                e[j] = 1;
                terms.push((aj, e));
            }
            acc = acc.mul(&SparsePoly::new(m, terms)?);
        }
        Ok(acc)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Complex64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn mul(&self, other: &SparsePoly) -> SparsePoly {
        let mut map: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                *map.entry(e).or_insert(ZERO) += ca * cb;
            }
        }
        map.retain(|_, c| *c != ZERO);
        SparsePoly { m: self.m, terms: map }
    }

    /// Partial derivative in variable `k` (1-based).
    pub fn partial(&self, k: usize) -> Result<SparsePoly> {
        check_index(k, self.m)?;
        let mut map = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[k - 1] > 0 {
                let mut e2 = e.clone();
                e2[k - 1] -= 1;
                map.insert(e2, c * e[k - 1] as f64);
            }
        }
        Ok(SparsePoly { m: self.m, terms: map })
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| e.iter().zip(z).fold(*c, |acc, (k, zi)| acc * zi.powu(*k)))
            .sum()
    }

    /// Univariate section in variable `k` with the other coordinates frozen.
    pub fn section(&self, k: usize, others: &[Complex64]) -> Result<ComplexPoly> {
        check_index(k, self.m)?;
        check_others(others, self.m)?;
        let deg = self.terms.keys().map(|e| e[k - 1] as usize).max().unwrap_or(0);
        let mut coeffs = vec![ZERO; deg + 1];
        for (e, c) in &self.terms {
            let mut v = *c;
            let mut o = others.iter();
            for (j, &ej) in e.iter().enumerate() {
                if j != k - 1 {
                    v *= o.next().expect("length checked").powu(ej);
                }
            }
            coeffs[e[k - 1] as usize] += v;
        }
        Ok(ComplexPoly::new(coeffs))
    }
}

fn check_index(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > m {
        return Err(Error::IndexOutOfRange { index: k, len: m });
    }
    Ok(())
}

fn check_others(others: &[Complex64], m: usize) -> Result<()> {
    if others.len() + 1 != m {
        return Err(Error::InvalidArgument(format!(
            "section assignment has {} coordinates, expected {}",
            others.len(),
            m - 1
        )));
    }
    Ok(())
}

/// Insert `w` as coordinate `k` (1-based) among `others`.
pub(crate) fn assemble(k: usize, w: Complex64, others: &[Complex64]) -> Vec<Complex64> {
    let mut v = others.to_vec();
    v.insert(k - 1, w);
    v
}

/// A function of `M` complex variables whose one-variable sections can be
/// generated for any assignment of the other coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum MultivariateSpec {
    Polynomial(SparsePoly),
    /// `f(z) = prod_m F_m(z_m)` with each `F_m` a canonical product.
    CoordinateProducts(Vec<CanonicalProductSpec>),
}

impl MultivariateSpec {
    pub fn m(&self) -> usize {
        match self {
            MultivariateSpec::Polynomial(p) => p.m(),
            MultivariateSpec::CoordinateProducts(f) => f.len(),
        }
    }

    /// Fails unless the partial derivative in `k` is a non-zero function.
    pub fn require_nonzero_partial(&self, k: usize) -> Result<()> {
        check_index(k, self.m())?;
        let zero = match self {
            MultivariateSpec::Polynomial(p) => p.partial(k)?.is_zero(),
            MultivariateSpec::CoordinateProducts(f) => f[k - 1].q() == 0 && f[k - 1].is_empty(),
        };
        if zero {
            return Err(Error::Precondition(format!("partial derivative in z{k} vanishes identically")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionOptions {
    pub eps: f64,
    pub root_finder: RootFinderConfig,
    /// Truncation schedule for coordinate products.
    pub schedule: Vec<usize>,
    pub entire: EntireOptions,
}

impl Default for SectionOptions {
    fn default() -> Self {
        SectionOptions {
            eps: EPS_POLY,
            root_finder: RootFinderConfig::default(),
            schedule: vec![20, 40, 80],
            entire: EntireOptions::default(),
        }
    }
}

/// Section-wise Gauss-Lucas check in coordinate `k` (1-based).
///
/// Each entry of `samples` fixes the other `M - 1` coordinates. Sections that
/// are constant (or vanish identically) are skipped and counted; linear
/// sections pass vacuously.
pub fn verify_gl_sections(
    mv: &MultivariateSpec,
    k: usize,
    samples: &[Vec<Complex64>],
    opts: &SectionOptions,
) -> Result<VerificationReport> {
    mv.require_nonzero_partial(k)?;
    let name = "gl-sections";
    let mut skipped = 0usize;
    let mut vacuous = 0usize;
    let mut uncertain = 0usize;
    let mut check = match mv {
        MultivariateSpec::Polynomial(poly) => {
            let mut worst: Option<(f64, Vec<Complex64>)> = None;
            let mut max_d = 0.0f64;
            let mut root_pts = Vec::new();
            let mut crit_pts = Vec::new();
            let mut max_res = 0.0f64;
            for others in samples {
                let g = poly.section(k, others)?;
                match g.degree() {
                    None | Some(0) => {
                        skipped += 1;
                        continue;
                    }
                    Some(1) => {
                        vacuous += 1;
                        continue;
                    }
                    _ => {}
                }
                let r = planar_gl(&g, &opts.root_finder)?;
                if !r.converged {
                    uncertain += 1;
                }
                max_res = max_res.max(r.root_residual).max(r.critical_residual);
                root_pts.extend(r.roots.iter().map(|&w| assemble(k, w, others)));
                crit_pts.extend(r.critical.iter().map(|&w| assemble(k, w, others)));
                if let Some(w) = r.worst {
                    if worst.is_none() || r.max_distance > max_d {
                        max_d = r.max_distance;
                        worst = Some((r.max_distance, assemble(k, w, others)));
                    }
                }
            }
            let mut check = match worst {
                Some((d, point)) if d > opts.eps => CheckResult::fail(
                    name,
                    Witness {
                        point,
                        distance: d,
                        note: "critical point of a section outside the hull of its roots".into(),
                    },
                ),
                _ => CheckResult::pass(name),
            };
            if uncertain > 0 {
                check.weaken(format!("{uncertain} section(s) missed the root-finder tolerance"));
            }
            let m = mv.m();
            check
                .with_stat("max_hull_distance", max_d)
                .with_stat("max_residual", max_res)
                .with_points(PointSet { name: "section_roots".into(), dims: m, points: root_pts })
                .with_points(PointSet { name: "section_critical_points".into(), dims: m, points: crit_pts })
        }
        MultivariateSpec::CoordinateProducts(factors) => {
            let mut live = 0usize;
            for others in samples {
                check_others(others, factors.len())?;
                let mut o = others.iter();
                let mut vanishes = false;
                for (j, f) in factors.iter().enumerate() {
                    if j == k - 1 {
                        continue;
                    }
                    let z = *o.next().expect("length checked");
                    vanishes |= partial_product(f, f.len(), z)?.is_zero();
                }
                if vanishes {
                    skipped += 1;
                } else {
                    live += 1;
                }
            }
            if live == 0 {
                CheckResult::pass(name).with_note("every sampled section vanished identically")
            } else {
                // every live section is a non-zero multiple of F_k, so one run covers all
                let inner = verify_gl_entire(&factors[k - 1], &opts.schedule, &opts.entire)?;
                let mut c = inner.checks.into_iter().next().expect("single check");
                let mut out = match (c.verdict(), c.witness()) {
                    (Verdict::Fail, Some(w)) => CheckResult::fail(name, w.clone()),
                    (Verdict::Uncertain, _) => CheckResult::uncertain(name, "truncation solver residuals"),
                    _ => CheckResult::pass(name),
                };
                out.stats.append(&mut c.stats);
                out.notes.append(&mut c.notes);
                out.point_sets.append(&mut c.point_sets);
                out
            }
        }
    };
    check.stats.push(("samples".into(), samples.len() as f64));
    check.stats.push(("skipped_sections".into(), skipped as f64));
    check.stats.push(("vacuous_sections".into(), vacuous as f64));
    check.stats.push(("uncertain_sections".into(), uncertain as f64));
    Ok(VerificationReport::single(name, check))
}

/// Direct membership check of critical points against the separately convex
/// hull of a sampled zero set, for polynomials in two variables.
///
/// The zero-set sample is the union of the section roots; each section
/// critical point is then classified on the grid. A finite sample and cell
/// rasterization can both push a genuine point off the grid hull, so
/// anything but `Inside` yields an uncertain verdict, never a failure.
pub fn verify_sections_direct(
    poly: &SparsePoly,
    k: usize,
    samples: &[Vec<Complex64>],
    bbox: &[Rect],
    resolution: usize,
    rf: &RootFinderConfig,
) -> Result<(VerificationReport, SepHullGrid)> {
    if poly.m() != 2 {
        return Err(Error::InvalidArgument("direct separately convex check needs M = 2".into()));
    }
    if poly.partial(k)?.is_zero() {
        return Err(Error::Precondition(format!("partial derivative in z{k} vanishes identically")));
    }
    let mut roots = Vec::new();
    let mut crit = Vec::new();
    for others in samples {
        let g = poly.section(k, others)?;
        if g.degree().unwrap_or(0) < 2 {
            continue;
        }
        let r = planar_gl(&g, rf)?;
        roots.extend(r.roots.iter().map(|&w| assemble(k, w, others)));
        crit.extend(r.critical.iter().map(|&w| assemble(k, w, others)));
    }
    let inside_box = |p: &Vec<Complex64>| p.iter().zip(bbox).all(|(z, b)| b.contains(*z));
    let kept: Vec<Vec<Complex64>> = roots.iter().filter(|p| inside_box(p)).cloned().collect();
    let grid = sep_hull_grid(&kept, bbox, resolution)?;
    let (mut inside, mut outside, mut unsure, mut off_box) = (0usize, 0usize, 0usize, 0usize);
    for p in &crit {
        if !inside_box(p) {
            off_box += 1;
            continue;
        }
        match sep_hull_contains(&grid, p) {
            Membership::Inside => inside += 1,
            Membership::Outside => outside += 1,
            Membership::Uncertain => unsure += 1,
        }
    }
    let name = "sep-hull-direct";
    let mut check = if outside + unsure == 0 {
        CheckResult::pass(name)
    } else {
        CheckResult::uncertain(name, "some critical points are not resolved inside the grid hull")
    };
    if !grid.converged() {
        check.weaken("grid closure hit the iteration cap");
    }
    let check = check
        .with_stat("critical_inside", inside as f64)
        .with_stat("critical_outside", outside as f64)
        .with_stat("critical_uncertain", unsure as f64)
        .with_stat("critical_outside_bbox", off_box as f64)
        .with_stat("roots_outside_bbox", (roots.len() - kept.len()) as f64)
        .with_stat("occupied_cells", grid.occupied_count() as f64)
        .with_points(PointSet { name: "zero_set_sample".into(), dims: 2, points: kept })
        .with_points(PointSet { name: "critical_points".into(), dims: 2, points: crit });
    Ok((VerificationReport::single(name, check), grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::RootOrdering;
    use crate::roots::RootSequenceFamily;
    use crate::verify::verify_gl_polynomial;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one() -> Complex64 {
        c(1.0, 0.0)
    }

    #[test]
    fn sparse_basics() {
        // (z1 + z2)(z1 - z2 + 2) = z1^2 - z2^2 + 2 z1 + 2 z2
        let p = SparsePoly::affine_product(2, &[(vec![one(), one()], ZERO), (vec![one(), -one()], c(2.0, 0.0))]).unwrap();
        let expect = SparsePoly::new(
            2,
            vec![(one(), vec![2, 0]), (-one(), vec![0, 2]), (c(2.0, 0.0), vec![1, 0]), (c(2.0, 0.0), vec![0, 1])],
        )
        .unwrap();
        assert_eq!(p, expect);
        assert_eq!(p.eval(&[c(1.0, 0.0), c(2.0, 0.0)]), c(1.0 - 4.0 + 2.0 + 4.0, 0.0));
        assert_eq!(p.partial(2).unwrap(), SparsePoly::new(2, vec![(c(-2.0, 0.0), vec![0, 1]), (c(2.0, 0.0), vec![0, 0])]).unwrap());
        let g = p.section(1, &[c(3.0, 0.0)]).unwrap();
        assert_eq!(g, ComplexPoly::from_real(&[-9.0 + 6.0, 2.0, 1.0]));
        assert!(p.partial(3).is_err());
        assert!(p.section(1, &[]).is_err());
    }

    #[test]
    fn sum_of_squares_sections() {
        let p = SparsePoly::new(2, vec![(one(), vec![2, 0]), (one(), vec![0, 2])]).unwrap();
        let samples: Vec<Vec<Complex64>> = [c(1.0, 0.0), c(0.5, 2.0), c(-3.0, 1.0)].iter().map(|&z| vec![z]).collect();
        let r = verify_gl_sections(&MultivariateSpec::Polynomial(p), 1, &samples, &Default::default()).unwrap();
        assert_eq!(r.verdict(), Verdict::Pass);
        let crit = &r.checks[0].point_set("section_critical_points").unwrap().points;
        assert!(crit.iter().all(|pt| pt[0].norm() < 1e-12));
    }

    #[test]
    fn bilinear_sections_are_vacuous() {
        let p = SparsePoly::new(2, vec![(one(), vec![1, 1]), (-one(), vec![0, 0])]).unwrap();
        let samples = vec![vec![c(2.0, 0.0)], vec![c(0.0, 1.0)], vec![ZERO]];
        let r = verify_gl_sections(&MultivariateSpec::Polynomial(p), 1, &samples, &Default::default()).unwrap();
        assert_eq!(r.verdict(), Verdict::Pass);
        assert_eq!(r.checks[0].stat("vacuous_sections"), Some(2.0));
        assert_eq!(r.checks[0].stat("skipped_sections"), Some(1.0));
    }

    #[test]
    fn quadratic_sections_midpoint() {
        let p = SparsePoly::affine_product(2, &[(vec![one(), one()], ZERO), (vec![one(), -one()], c(2.0, 0.0))]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples: Vec<Vec<Complex64>> = (0..50).map(|_| vec![c(rng.random_range(-5.0..5.0), 0.0)]).collect();
        let r = verify_gl_sections(&MultivariateSpec::Polynomial(p), 1, &samples, &Default::default()).unwrap();
        assert_eq!(r.verdict(), Verdict::Pass);
        for (pt, s) in r.checks[0].point_set("section_critical_points").unwrap().points.iter().zip(&samples) {
            // roots -c and c - 2, midpoint -1
            assert!((pt[0] - c(-1.0, 0.0)).norm() < 1e-9);
            assert_eq!(pt[1], s[0]);
        }
    }

    #[test]
    fn single_variable_matches_univariate_paths() {
        let p = SparsePoly::new(1, vec![(c(-6.0, 0.0), vec![0]), (c(11.0, 0.0), vec![1]), (c(-6.0, 0.0), vec![2]), (one(), vec![3])]).unwrap();
        let sec = verify_gl_sections(&MultivariateSpec::Polynomial(p), 1, &[vec![]], &Default::default()).unwrap();
        let uni = verify_gl_polynomial(&ComplexPoly::from_real(&[-6.0, 11.0, -6.0, 1.0]), EPS_POLY, &Default::default()).unwrap();
        assert_eq!(sec.verdict(), uni.verdict());
        assert_eq!(sec.checks[0].stat("max_hull_distance"), uni.checks[0].stat("max_hull_distance"));

        let spec = CanonicalProductSpec::new(0, RootSequenceFamily::sine(200), RootOrdering::Identity).unwrap();
        let opts = SectionOptions::default();
        let sec = verify_gl_sections(&MultivariateSpec::CoordinateProducts(vec![spec.clone()]), 1, &[vec![]], &opts).unwrap();
        let uni = verify_gl_entire(&spec, &opts.schedule, &opts.entire).unwrap();
        assert_eq!(sec.verdict(), uni.verdict());
    }

    #[test]
    fn product_sections_skip_zeros_of_other_factors() {
        let sine = CanonicalProductSpec::new(0, RootSequenceFamily::sine(100), RootOrdering::Identity).unwrap();
        let mv = MultivariateSpec::CoordinateProducts(vec![sine.clone(), sine]);
        let r = verify_gl_sections(&mv, 2, &[vec![c(1.0, 0.0)], vec![c(0.5, 0.0)]], &Default::default()).unwrap();
        assert_eq!(r.verdict(), Verdict::Pass);
        assert_eq!(r.checks[0].stat("skipped_sections"), Some(1.0));
    }

    #[test]
    fn vanishing_partial_is_refused() {
        let p = SparsePoly::new(2, vec![(one(), vec![0, 2])]).unwrap();
        assert!(matches!(
            verify_gl_sections(&MultivariateSpec::Polynomial(p), 1, &[vec![one()]], &Default::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn direct_check_on_a_product() {
        let p = SparsePoly::affine_product(2, &[(vec![one(), one()], ZERO), (vec![one(), -one()], c(2.0, 0.0))]).unwrap();
        // half-unit cells centred on the sample values
        let samples: Vec<Vec<Complex64>> = (0..=4).map(|i| vec![c(i as f64 * 0.5, 0.0)]).collect();
        let bbox = [Rect::square(-3.25, 2.75).unwrap(); 2];
        let (r, grid) = verify_sections_direct(&p, 1, &samples, &bbox, 12, &Default::default()).unwrap();
        assert!(grid.converged());
        let ch = &r.checks[0];
        assert_ne!(ch.verdict(), Verdict::Fail, "{:?}", ch.stats);
        assert_eq!(ch.stat("critical_outside_bbox"), Some(0.0));
        assert_eq!(ch.stat("critical_inside"), Some(5.0));
        assert_eq!(ch.verdict(), Verdict::Pass);
    }
}
