use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::poly::{critical_points_from_roots, find_roots, ComplexPoly, RootFinderConfig};
use crate::product::CanonicalProductSpec;
use crate::verify::gl::DEFAULT_DEGREE_CAP;
use crate::verify::multivariate::{assemble, MultivariateSpec};
use crate::verify::report::{CheckResult, VerificationReport, Witness};
use crate::{Error, Result};

/// Points with `|Im(e^{i theta} z)| <= BOUNDARY_TOL` count as on the boundary,
/// hence outside the open cone.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// The open cone `{ z : Im(e^{i theta_m} z_m) > 0 for all m }`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCone {
    theta: Vec<f64>,
}

fn normalize_angle(t: f64) -> f64 {
    let r = t.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

impl StabilityCone {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() || theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("cone angles must be finite and non-empty".into()));
        }
        Ok(StabilityCone {
            theta: theta.into_iter().map(normalize_angle).collect(),
        })
    }

    pub fn upper_half_planes(m: usize) -> Self {
        StabilityCone { theta: vec![0.0; m] }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn m(&self) -> usize {
        self.theta.len()
    }

    /// `Im(e^{i theta_k} w)`, `k` 1-based.
    pub fn margin(&self, k: usize, w: Complex64) -> f64 {
        (Complex64::from_polar(1.0, self.theta[k - 1]) * w).im
    }

    /// A point well inside the open half-plane of coordinate `k`.
    fn interior_point(&self, k: usize) -> Complex64 {
        Complex64::from_polar(1.0, -self.theta[k - 1]) * Complex64::new(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StabilitySubject {
    Roots(Vec<Complex64>),
    Polynomial(ComplexPoly),
    Multivariate(MultivariateSpec),
}

impl StabilitySubject {
    fn m(&self) -> usize {
        match self {
            StabilitySubject::Multivariate(mv) => mv.m(),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StabilityEvidence {
    /// No zero found in the open cone. `low_confidence` is set whenever the
    /// answer rests on sampling or on a truncated root list.
    Stable { low_confidence: bool, samples: usize },
    /// A zero inside the open cone; `margin` is the smallest rotated imaginary part.
    Unstable { witness: Vec<Complex64>, margin: f64 },
}

impl StabilityEvidence {
    pub fn is_stable(&self) -> bool {
        matches!(self, StabilityEvidence::Stable { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityOptions {
    /// Number of sampled sections for multivariate polynomials.
    pub budget: usize,
    pub tol: f64,
    /// Sampled coordinates lie within this distance of the origin per axis.
    pub box_radius: f64,
    pub seed: u64,
    /// Roots per canonical product factor examined.
    pub root_limit: usize,
    pub root_finder: RootFinderConfig,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            budget: 200,
            tol: BOUNDARY_TOL,
            box_radius: 2.0,
            seed: 0,
            root_limit: DEFAULT_DEGREE_CAP,
            root_finder: RootFinderConfig::default(),
        }
    }
}

fn check_roots(roots: &[Complex64], cone: &StabilityCone, k: usize, tol: f64) -> Option<(Complex64, f64)> {
    roots
        .iter()
        .map(|&z| (z, cone.margin(k, z)))
        .filter(|(_, m)| *m > tol)
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

fn univariate(roots: &[Complex64], cone: &StabilityCone, tol: f64, low_confidence: bool) -> StabilityEvidence {
    match check_roots(roots, cone, 1, tol) {
        Some((z, margin)) => StabilityEvidence::Unstable { witness: vec![z], margin },
        None => StabilityEvidence::Stable { low_confidence, samples: 0 },
    }
}

/// Zero sets of the factors of a coordinate product, `0` included when `q > 0`.
fn factor_zeros(f: &CanonicalProductSpec, limit: usize) -> Result<(Vec<Complex64>, bool)> {
    let n = f.len().min(limit);
    let mut z = vec![Complex64::new(0.0, 0.0); f.q().min(1)];
    z.extend(f.roots(n)?);
    Ok((z, n < f.len()))
}

/// Stability of `prod_m F_m(z_m)` given the zero set of each factor: a zero in
/// the cone exists iff some factor has one in its own half-plane.
fn product_stability(zero_sets: &[(Vec<Complex64>, bool)], cone: &StabilityCone, tol: f64) -> StabilityEvidence {
    let mut truncated = false;
    for (k, (zs, trunc)) in zero_sets.iter().enumerate() {
        truncated |= trunc;
        if let Some((z, margin)) = check_roots(zs, cone, k + 1, tol) {
            let others: Vec<Complex64> = (1..=zero_sets.len()).filter(|&j| j != k + 1).map(|j| cone.interior_point(j)).collect();
            return StabilityEvidence::Unstable { witness: assemble(k + 1, z, &others), margin };
        }
    }
    StabilityEvidence::Stable { low_confidence: truncated, samples: 0 }
}

/// Searches for zeros inside the open cone `A(theta)`.
///
/// Univariate subjects are decided from their roots. Multivariate polynomials
/// are probed by sampling: each sample freezes all but one coordinate at a
/// random point of the cone and solves the section. Sampling can only refute
/// stability, so a clean run is reported as low-confidence evidence.
pub fn is_theta_stable(
    subject: &StabilitySubject,
    cone: &StabilityCone,
    opts: &StabilityOptions,
) -> Result<StabilityEvidence> {
    if cone.m() != subject.m() {
        return Err(Error::InvalidArgument(format!(
            "cone has {} angles but the function has {} variables",
            cone.m(),
            subject.m()
        )));
    }
    match subject {
        StabilitySubject::Roots(r) => Ok(univariate(r, cone, opts.tol, false)),
        StabilitySubject::Polynomial(p) => match p.degree() {
            None => Ok(StabilityEvidence::Unstable { witness: vec![cone.interior_point(1)], margin: 1.0 }),
            Some(0) => Ok(StabilityEvidence::Stable { low_confidence: false, samples: 0 }),
            Some(_) => {
                let s = find_roots(p, &opts.root_finder)?;
                Ok(univariate(&s.roots, cone, opts.tol, !s.converged))
            }
        },
        StabilitySubject::Multivariate(MultivariateSpec::CoordinateProducts(fs)) => {
            let zs = fs.iter().map(|f| factor_zeros(f, opts.root_limit)).collect::<Result<Vec<_>>>()?;
            Ok(product_stability(&zs, cone, opts.tol))
        }
        StabilitySubject::Multivariate(MultivariateSpec::Polynomial(poly)) => {
            let m = poly.m();
            if poly.is_zero() {
                let w: Vec<Complex64> = (1..=m).map(|k| cone.interior_point(k)).collect();
                return Ok(StabilityEvidence::Unstable { witness: w, margin: 1.0 });
            }
            if m == 1 {
                let p = poly.section(1, &[])?;
                return is_theta_stable(&StabilitySubject::Polynomial(p), cone, opts);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let r = opts.box_radius;
            for s in 0..opts.budget {
                let k = s % m + 1;
                let others: Vec<Complex64> = (1..=m)
                    .filter(|&j| j != k)
                    .map(|j| {
                        let x = rng.random_range(-r..=r);
                        // half the samples hug the boundary of the half-plane
                        let u: f64 = 1.0 - rng.random::<f64>();
                        let y = if s % 4 < 2 { r * u } else { r * u.powi(4) };
                        Complex64::from_polar(1.0, -cone.theta[j - 1]) * Complex64::new(x, y)
                    })
                    .collect();
                let g = poly.section(k, &others)?;
                match g.degree() {
                    None => {
                        return Ok(StabilityEvidence::Unstable {
                            witness: assemble(k, cone.interior_point(k), &others),
                            margin: 1.0,
                        })
                    }
                    Some(0) => continue,
                    Some(_) => {
                        let sol = find_roots(&g, &opts.root_finder)?;
                        if let Some((w, margin)) = check_roots(&sol.roots, cone, k, opts.tol) {
                            return Ok(StabilityEvidence::Unstable { witness: assemble(k, w, &others), margin });
                        }
                    }
                }
            }
            Ok(StabilityEvidence::Stable { low_confidence: true, samples: opts.budget })
        }
    }
}

/// Checks that the `k`-th partial derivative of a `theta`-stable function is
/// again `theta`-stable. Fails with [`Error::Precondition`] if the function
/// itself is not stable or the derivative vanishes identically.
pub fn verify_corollary_stability(
    subject: &StabilitySubject,
    cone: &StabilityCone,
    k: usize,
    opts: &StabilityOptions,
) -> Result<VerificationReport> {
    if k == 0 || k > subject.m() {
        return Err(Error::IndexOutOfRange { index: k, len: subject.m() });
    }
    let base = is_theta_stable(subject, cone, opts)?;
    if let StabilityEvidence::Unstable { witness, margin } = &base {
        return Err(Error::Precondition(format!(
            "function is not theta-stable: zero {witness:?} has rotated imaginary part {margin:e}"
        )));
    }
    let derived = match subject {
        StabilitySubject::Roots(r) => {
            let crit = critical_points_from_roots(r, &opts.root_finder);
            is_theta_stable(&StabilitySubject::Roots(crit.roots), cone, opts)?
        }
        StabilitySubject::Polynomial(p) => {
            let d = p.derivative();
            if d.is_zero() {
                return Err(Error::Precondition("derivative vanishes identically".into()));
            }
            is_theta_stable(&StabilitySubject::Polynomial(d), cone, opts)?
        }
        StabilitySubject::Multivariate(mv @ MultivariateSpec::Polynomial(poly)) => {
            mv.require_nonzero_partial(k)?;
            let d = MultivariateSpec::Polynomial(poly.partial(k)?);
            is_theta_stable(&StabilitySubject::Multivariate(d), cone, opts)?
        }
        StabilitySubject::Multivariate(mv @ MultivariateSpec::CoordinateProducts(fs)) => {
            mv.require_nonzero_partial(k)?;
            let mut zs = fs.iter().map(|f| factor_zeros(f, opts.root_limit)).collect::<Result<Vec<_>>>()?;
            let f = &fs[k - 1];
            let n = f.len().min(opts.root_limit);
            let mut roots = vec![Complex64::new(0.0, 0.0); f.q()];
            roots.extend(f.roots(n)?);
            zs[k - 1] = (critical_points_from_roots(&roots, &opts.root_finder).roots, n < f.len());
            product_stability(&zs, cone, opts.tol)
        }
    };
    let name = "corollary";
    let base_note = match base {
        StabilityEvidence::Stable { low_confidence: true, samples } => {
            format!("function stable on low-confidence evidence ({samples} samples)")
        }
        _ => "function stable".to_string(),
    };
    let check = match derived {
        StabilityEvidence::Stable { low_confidence, samples } => {
            let mut c = CheckResult::pass(name)
                .with_stat("samples", samples as f64)
                .with_stat("low_confidence", if low_confidence { 1.0 } else { 0.0 });
            if low_confidence {
                c.notes.push("no derivative zero found in the open cone; sampling cannot certify".into());
            }
            c
        }
        StabilityEvidence::Unstable { witness, margin } => CheckResult::fail(
            name,
            Witness {
                point: witness,
                distance: margin,
                note: "numerical anomaly: a zero of the derivative lies inside the open cone".into(),
            },
        )
        .with_stat("margin", margin)
        .with_stat("tol", opts.tol),
    };
    Ok(VerificationReport::single(
        name,
        check.with_note(base_note).with_stat("coordinate", k as f64),
    ))
}

/// Stability check packaged as a report: fails with the witness if a zero is
/// found inside the open cone.
pub fn stability_report(
    subject: &StabilitySubject,
    cone: &StabilityCone,
    opts: &StabilityOptions,
) -> Result<VerificationReport> {
    let name = "stability";
    let check = match is_theta_stable(subject, cone, opts)? {
        StabilityEvidence::Stable { low_confidence, samples } => CheckResult::pass(name)
            .with_stat("samples", samples as f64)
            .with_stat("low_confidence", if low_confidence { 1.0 } else { 0.0 }),
        StabilityEvidence::Unstable { witness, margin } => CheckResult::fail(
            name,
            Witness {
                point: witness,
                distance: margin,
                note: "zero inside the open cone".into(),
            },
        ),
    };
    Ok(VerificationReport::single(name, check))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product::RootOrdering;
    use crate::roots::RootSequenceFamily;
    use crate::verify::{SparsePoly, Verdict};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one() -> Complex64 {
        c(1.0, 0.0)
    }

    fn upper(m: usize) -> StabilityCone {
        StabilityCone::upper_half_planes(m)
    }

    #[test]
    fn angles_are_normalized() {
        let cone = StabilityCone::new(vec![3.0 * PI, -PI, 0.5]).unwrap();
        assert!((cone.theta()[0] - PI).abs() < 1e-12);
        assert!((cone.theta()[1] - PI).abs() < 1e-12);
        assert_eq!(cone.theta()[2], 0.5);
        assert!(StabilityCone::new(vec![]).is_err());
    }

    #[test]
    fn univariate_examples() {
        let o = StabilityOptions::default();
        let s = is_theta_stable(&StabilitySubject::Roots(vec![c(0.0, -1.0), c(0.0, -2.0)]), &upper(1), &o).unwrap();
        assert_eq!(s, StabilityEvidence::Stable { low_confidence: false, samples: 0 });
        let u = is_theta_stable(&StabilitySubject::Roots(vec![c(0.0, 1.0)]), &upper(1), &o).unwrap();
        assert_eq!(u, StabilityEvidence::Unstable { witness: vec![c(0.0, 1.0)], margin: 1.0 });
        // boundary root stays outside the open half-plane
        let b = is_theta_stable(&StabilitySubject::Roots(vec![c(3.0, 1e-12)]), &upper(1), &o).unwrap();
        assert!(b.is_stable());
        // rotating by pi swaps the half-planes
        let cone = StabilityCone::new(vec![PI]).unwrap();
        assert!(is_theta_stable(&StabilitySubject::Roots(vec![c(0.0, 1.0)]), &cone, &o).unwrap().is_stable());
        let p = ComplexPoly::from_roots(&[c(0.0, -1.0), c(2.0, -0.5)], one());
        assert!(is_theta_stable(&StabilitySubject::Polynomial(p), &upper(1), &o).unwrap().is_stable());
    }

    #[test]
    fn bilinear_is_stable_evidence() {
        let p = SparsePoly::new(2, vec![(one(), vec![1, 1]), (-one(), vec![0, 0])]).unwrap();
        let s = StabilitySubject::Multivariate(MultivariateSpec::Polynomial(p));
        let ev = is_theta_stable(&s, &upper(2), &StabilityOptions::default()).unwrap();
        assert_eq!(ev, StabilityEvidence::Stable { low_confidence: true, samples: 200 });
        let r = verify_corollary_stability(&s, &upper(2), 1, &StabilityOptions::default()).unwrap();
        assert_eq!(r.verdict(), Verdict::Pass);
    }

    #[test]
    fn sampling_finds_unstable_sum() {
        // z1 - z2 vanishes on the diagonal, which meets the cone; z1 + z2 never does
        let p = SparsePoly::new(2, vec![(one(), vec![1, 0]), (-one(), vec![0, 1])]).unwrap();
        let s = StabilitySubject::Multivariate(MultivariateSpec::Polynomial(p));
        match is_theta_stable(&s, &upper(2), &StabilityOptions::default()).unwrap() {
            StabilityEvidence::Unstable { witness, margin } => {
                assert!(witness.iter().all(|z| z.im > 0.0) && margin > 0.0);
            }
            other => panic!("{other:?}"),
        }
        let q = SparsePoly::new(2, vec![(one(), vec![1, 0]), (one(), vec![0, 1])]).unwrap();
        let s = StabilitySubject::Multivariate(MultivariateSpec::Polynomial(q));
        assert!(is_theta_stable(&s, &upper(2), &StabilityOptions::default()).unwrap().is_stable());
    }

    #[test]
    fn corollary_univariate_example() {
        let s = StabilitySubject::Roots(vec![c(0.0, -1.0), c(-1.0, -1.0), c(1.0, -1.0)]);
        let r = verify_corollary_stability(&s, &upper(1), 1, &StabilityOptions::default()).unwrap();
        assert_eq!(r.verdict(), Verdict::Pass);
        let bad = StabilitySubject::Roots(vec![c(0.0, 1.0)]);
        assert!(matches!(
            verify_corollary_stability(&bad, &upper(1), 1, &StabilityOptions::default()),
            Err(Error::Precondition(_))
        ));
        let p = StabilitySubject::Polynomial(ComplexPoly::constant(one()));
        assert!(verify_corollary_stability(&p, &upper(1), 1, &StabilityOptions::default()).is_err());
    }

    #[test]
    fn coordinate_products() {
        let sine = CanonicalProductSpec::new(0, RootSequenceFamily::sine(100), RootOrdering::Identity).unwrap();
        let s = StabilitySubject::Multivariate(MultivariateSpec::CoordinateProducts(vec![sine.clone(), sine.clone()]));
        let o = StabilityOptions::default();
        assert!(is_theta_stable(&s, &upper(2), &o).unwrap().is_stable());
        let r = verify_corollary_stability(&s, &upper(2), 2, &o).unwrap();
        assert_eq!(r.verdict(), Verdict::Pass);
        let lifted = RootSequenceFamily::explicit(vec![c(1.0, 1.0)]).unwrap();
        let f = CanonicalProductSpec::new(0, lifted, RootOrdering::Identity).unwrap();
        let s = StabilitySubject::Multivariate(MultivariateSpec::CoordinateProducts(vec![sine, f]));
        match is_theta_stable(&s, &upper(2), &o).unwrap() {
            StabilityEvidence::Unstable { witness, .. } => assert_eq!(witness, vec![c(0.0, 1.0), c(1.0, 1.0)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        let s = StabilitySubject::Roots(vec![one()]);
        assert!(is_theta_stable(&s, &upper(2), &StabilityOptions::default()).is_err());
    }
}
