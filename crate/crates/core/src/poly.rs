//! Dense complex polynomials and simultaneous-iteration root finding.

use std::f64::consts::TAU;
use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Polynomial with coefficients in ascending degree. The trailing
/// coefficient is non-zero; the zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

impl ComplexPoly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        ComplexPoly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        ComplexPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// `leading * prod (z - r)`.
    pub fn from_roots(roots: &[Complex64], leading: Complex64) -> Self {
        let mut coeffs = vec![leading];
        for &r in roots {
            let mut next = vec![ZERO; coeffs.len() + 1];
            for (k, &ck) in coeffs.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= r * ck;
            }
            coeffs = next;
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<Complex64> {
        self.coeffs.last().copied()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value together with `sum |c_k| |z|^k`, the scale used by residual checks.
    pub fn eval_with_scale(&self, z: Complex64) -> (Complex64, f64) {
        let az = z.norm();
        let mut v = ZERO;
        let mut s = 0.0;
        for &c in self.coeffs.iter().rev() {
            v = v * z + c;
            s = s * az + c.norm();
        }
        (v, s)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }
}

impl Add for &ComplexPoly {
    type Output = ComplexPoly;

    fn add(self, rhs: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let get = |v: &[Complex64], k: usize| v.get(k).copied().unwrap_or(ZERO);
        ComplexPoly::new((0..n).map(|k| get(&self.coeffs, k) + get(&rhs.coeffs, k)).collect())
    }
}

impl Mul for &ComplexPoly {
    type Output = ComplexPoly;

    fn mul(self, rhs: &ComplexPoly) -> ComplexPoly {
        if self.is_zero() || rhs.is_zero() {
            return ComplexPoly::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ComplexPoly::new(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootFinderConfig {
    /// Residual tolerance relative to the evaluation scale.
    pub tol: f64,
    pub max_iter: usize,
    /// Rotation of the initial circle, radians.
    pub seed_angle: f64,
}

impl Default for RootFinderConfig {
    fn default() -> Self {
        RootFinderConfig {
            tol: 1e-10,
            max_iter: 1000,
            seed_angle: 0.4,
        }
    }
}

impl RootFinderConfig {
    pub fn with_seed(seed: u64) -> Self {
        // spread seeds over the first sector without touching 0 exactly
        let frac = (seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11) as f64 / (1u64 << 53) as f64;
        RootFinderConfig {
            seed_angle: 0.1 + 0.8 * frac,
            ..Default::default()
        }
    }
}

/// Output of a root solve. Roots failing the residual contract are flagged,
/// never dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct RootSolve {
    pub roots: Vec<Complex64>,
    /// Relative residual of each root.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl RootSolve {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    fn exact(roots: Vec<Complex64>) -> Self {
        let n = roots.len();
        RootSolve {
            roots,
            residuals: vec![0.0; n],
            iterations: 0,
            converged: true,
        }
    }
}

/// All roots of `p` with multiplicity, by Aberth-Ehrlich iteration.
pub fn find_roots(p: &ComplexPoly, cfg: &RootFinderConfig) -> Result<RootSolve> {
    let deg = match p.degree() {
        None => return Err(Error::InvalidArgument("zero polynomial has no finite root set".into())),
        Some(0) => return Err(Error::InvalidArgument("constant polynomial has no roots".into())),
        Some(d) => d,
    };
    // roots at the origin come out exactly
    let zeros = p.coeffs.iter().take_while(|c| **c == ZERO).count();
    let reduced = ComplexPoly::new(p.coeffs[zeros..].to_vec());
    let mut solve = match deg - zeros {
        0 => RootSolve::exact(Vec::new()),
        1 => {
            let c = reduced.coeffs();
            RootSolve::exact(vec![-c[0] / c[1]])
        }
        _ => aberth_coefficients(&reduced, cfg),
    };
    solve.roots.extend(std::iter::repeat_n(ZERO, zeros));
    solve.residuals.extend(std::iter::repeat_n(0.0, zeros));
    // residuals against the original polynomial
    for (res, &z) in solve.residuals.iter_mut().zip(&solve.roots) {
        let (v, s) = p.eval_with_scale(z);
        *res = if s > 0.0 { v.norm() / s } else { 0.0 };
    }
    // the residual contract is what counts; the iteration flag only says whether steps settled
    solve.converged = solve.residuals.iter().all(|r| *r <= cfg.tol);
    Ok(solve)
}

fn initial_circle(center: Complex64, radius: f64, n: usize, angle: f64) -> Vec<Complex64> {
    (0..n)
        .map(|k| center + Complex64::from_polar(radius, angle + TAU * k as f64 / n as f64))
        .collect()
}

/// Aberth iteration driven by a Newton-ratio closure `z -> p(z)/p'(z)`.
fn aberth<F>(mut z: Vec<Complex64>, max_iter: usize, newton_ratio: F) -> (Vec<Complex64>, usize, bool)
where
    F: Fn(Complex64) -> Complex64,
{
    let n = z.len();
    let mut done = vec![false; n];
    for iter in 1..=max_iter {
        let mut all_small = true;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let zk = z[k];
            let ratio = newton_ratio(zk);
            let mut s = ZERO;
            for (j, &zj) in z.iter().enumerate() {
                if j != k {
                    let d = zk - zj;
                    if d != ZERO {
                        s += d.inv();
                    }
                }
            }
            let denom = ONE - ratio * s;
            let step = if denom.norm() > 0.0 && denom.is_finite() {
                ratio / denom
            } else {
                ratio
            };
            let step = if step.is_finite() {
                step
            } else {
                // landed on a pole or a zero of the derivative: nudge
                Complex64::new(1e-8, 1e-8) * (1.0 + zk.norm())
            };
            z[k] = zk - step;
            if step.norm() <= 64.0 * f64::EPSILON * (1.0 + z[k].norm()) {
                done[k] = true;
            } else {
                all_small = false;
            }
        }
        if all_small {
            return (z, iter, true);
        }
    }
    (z, max_iter, false)
}

fn aberth_coefficients(p: &ComplexPoly, cfg: &RootFinderConfig) -> RootSolve {
    let deg = p.degree().expect("non-zero");
    let lead = p.leading().expect("non-zero");
    let monic: Vec<Complex64> = p.coeffs.iter().map(|c| c / lead).collect();
    let monic = ComplexPoly { coeffs: monic };
    let cauchy = 1.0
        + monic.coeffs[..deg]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
    // geometric-mean radius is tighter for well-scaled inputs; Cauchy bounds it above
    let geo = monic.coeffs[0].norm().powf(1.0 / deg as f64);
    let center = -monic.coeffs[deg - 1] / deg as f64;
    let radius = if geo > 0.0 { geo.min(cauchy) } else { cauchy };
    let dp = monic.derivative();
    let start = initial_circle(center, radius.max(1e-3), deg, cfg.seed_angle);
    let (roots, iterations, converged) = aberth(start, cfg.max_iter, |z| {
        let v = monic.eval(z);
        let d = dp.eval(z);
        v / d
    });
    RootSolve {
        residuals: vec![0.0; roots.len()],
        roots,
        iterations,
        converged,
    }
}

/// Critical points of `prod (z - a_i)` computed from the roots alone.
///
/// A root of multiplicity `m` contributes itself `m - 1` times; the remaining
/// `d - 1` points (for `d` distinct roots) are zeros of the logarithmic
/// derivative `sum m_i / (z - a_i)`. Working with the root set avoids the
/// ill-conditioned coefficient expansion of long truncated products.
pub fn critical_points_from_roots(roots: &[Complex64], cfg: &RootFinderConfig) -> RootSolve {
    let distinct = group_roots(roots);
    let mut out = Vec::new();
    for &(a, m) in &distinct {
        out.extend(std::iter::repeat_n(a, m - 1));
    }
    let repeated = out.len();
    let d = distinct.len();
    if d <= 1 {
        return RootSolve::exact(out);
    }
    let log_deriv = |z: Complex64| -> (Complex64, Complex64, Complex64, f64) {
        let mut f = ZERO;
        let mut f2 = ZERO;
        let mut s1 = ZERO;
        let mut scale = 0.0;
        for &(a, m) in &distinct {
            let inv = (z - a).inv();
            let mf = m as f64;
            f += inv * mf;
            f2 += inv * inv * mf;
            s1 += inv;
            scale += mf * inv.norm();
        }
        (f, f2, s1, scale)
    };
    let total: usize = distinct.iter().map(|(_, m)| m).sum();
    let center = distinct
        .iter()
        .fold(ZERO, |acc, &(a, m)| acc + a * m as f64)
        / total as f64;
    let radius = distinct
        .iter()
        .map(|(a, _)| (a - center).norm())
        .fold(0.0, f64::max)
        .max(1e-6);
    let start = initial_circle(center, 0.5 * radius, d - 1, cfg.seed_angle);
    let (crit, iterations, _) = aberth(start, cfg.max_iter, |z| {
        let (f, f2, s1, _) = log_deriv(z);
        // P = F * prod(z - a_i):  P'/P = S1 - F2/F
        f / (f * s1 - f2)
    });
    let mut residuals = vec![0.0; repeated];
    for &z in &crit {
        let (f, _, _, scale) = log_deriv(z);
        residuals.push(if scale.is_finite() && scale > 0.0 {
            f.norm() / scale
        } else {
            0.0
        });
    }
    out.extend(crit);
    let converged = residuals.iter().all(|r| *r <= cfg.tol);
    RootSolve {
        roots: out,
        residuals,
        iterations,
        converged,
    }
}

/// Distinct values with multiplicities (exact equality).
fn group_roots(roots: &[Complex64]) -> Vec<(Complex64, usize)> {
    let mut sorted = roots.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out: Vec<(Complex64, usize)> = Vec::new();
    for z in sorted {
        match out.last_mut() {
            Some((a, m)) if *a == z => *m += 1,
            _ => out.push((z, 1)),
        }
    }
    out
}
