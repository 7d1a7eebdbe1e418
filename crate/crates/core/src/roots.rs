//! Root sequences of canonical products.
//!
//! A family is either an explicit finite list or a parametric rule
//! `|gamma_n| = c * m(n)^alpha` with a repeating cycle of unit phases. The
//! modulus index `m(n)` depends on [`Indexing`]; the default shell indexing
//! gives each modulus one full phase cycle, so `alpha = 1` with phases
//! `(1, -1)` enumerates `1, -1, 2, -2, ...`.

use std::fmt;

use num_complex::Complex64;

use crate::{Error, Result};

const PHASE_TOL: f64 = 1e-12;

/// How the modulus index `m` is derived from the root index `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Indexing {
    /// `m = ceil(n / k)` with `k` the phase-cycle length.
    Shell,
    /// `m = n`; the phase still cycles with `n`.
    Sequential,
    /// `b` consecutive moduli per phase before moving to the next phase:
    /// with phases `(1, -1)` and `b = 50` the order is `1..50, -1..-50, 51..100, ...`.
    /// Moduli are non-decreasing from one group of `b * k` roots to the next.
    Blocks(usize),
}

impl fmt::Display for Indexing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Indexing::Shell => write!(f, "shell"),
            Indexing::Sequential => write!(f, "sequential"),
            Indexing::Blocks(b) => write!(f, "blocks:{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParametricFamily {
    scale: f64,
    exponent: f64,
    phases: Vec<Complex64>,
    count_limit: usize,
    indexing: Indexing,
}

impl ParametricFamily {
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn count_limit(&self) -> usize {
        self.count_limit
    }

    pub fn indexing(&self) -> Indexing {
        self.indexing
    }

    /// Modulus index and phase slot of the `n`-th root (1-based).
    fn layout(&self, n: usize) -> (usize, usize) {
        let k = self.phases.len();
        match self.indexing {
            Indexing::Shell => ((n - 1) / k + 1, (n - 1) % k),
            Indexing::Sequential => (n, (n - 1) % k),
            Indexing::Blocks(b) => {
                let group = b * k;
                let j = (n - 1) / group;
                let t = (n - 1) % group;
                (j * b + t % b + 1, t / b)
            }
        }
    }

    fn root(&self, n: usize) -> Complex64 {
        let (m, slot) = self.layout(n);
        self.phases[slot] * (self.scale * (m as f64).powf(self.exponent))
    }
}

/// Generator of the non-zero roots `gamma_1, gamma_2, ...` of a canonical product.
#[derive(Debug, Clone, PartialEq)]
pub enum RootSequenceFamily {
    Explicit(Vec<Complex64>),
    Parametric(ParametricFamily),
}

impl RootSequenceFamily {
    /// Finite list; repeated entries are kept as multiplicities.
    pub fn explicit(terms: Vec<Complex64>) -> Result<Self> {
        if let Some(pos) = terms.iter().position(|z| *z == Complex64::new(0.0, 0.0)) {
            return Err(Error::InvalidFamily(format!(
                "explicit root {} is zero (zeros at the origin belong to q)",
                pos + 1
            )));
        }
        if terms.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidFamily("non-finite root".into()));
        }
        Ok(RootSequenceFamily::Explicit(terms))
    }

    pub fn parametric(
        scale: f64,
        exponent: f64,
        phases: Vec<Complex64>,
        count_limit: usize,
        indexing: Indexing,
    ) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidFamily(format!("scale must be > 0, got {scale}")));
        }
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidFamily(format!(
                "exponent must be > 0 so that |gamma_n| -> infinity, got {exponent}"
            )));
        }
        if phases.is_empty() {
            return Err(Error::InvalidFamily("phase cycle is empty".into()));
        }
        for (i, ph) in phases.iter().enumerate() {
            if (ph.norm() - 1.0).abs() > PHASE_TOL {
                return Err(Error::InvalidFamily(format!(
                    "phase {} has modulus {} (must be 1 within {PHASE_TOL})",
                    i + 1,
                    ph.norm()
                )));
            }
        }
        if let Indexing::Blocks(0) = indexing {
            return Err(Error::InvalidFamily("block size must be >= 1".into()));
        }
        Ok(RootSequenceFamily::Parametric(ParametricFamily {
            scale,
            exponent,
            phases,
            count_limit,
            indexing,
        }))
    }

    /// Roots `±1, ±2, ...` in paired order: the zeros of `sin(pi z) / (pi z)`.
    pub fn sine(count_limit: usize) -> Self {
        let phases = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        Self::parametric(1.0, 1.0, phases, count_limit, Indexing::Shell)
            .expect("static family is valid")
    }

    /// Roots `c * m^alpha * i^j`, cycling through the four quarter-turn phases.
    pub fn quarter_turns(
        scale: f64,
        exponent: f64,
        count_limit: usize,
        indexing: Indexing,
    ) -> Result<Self> {
        let phases = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        Self::parametric(scale, exponent, phases, count_limit, indexing)
    }

    pub fn empty() -> Self {
        RootSequenceFamily::Explicit(Vec::new())
    }

    /// Number of enumerable roots.
    pub fn len(&self) -> usize {
        match self {
            RootSequenceFamily::Explicit(v) => v.len(),
            RootSequenceFamily::Parametric(p) => p.count_limit,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `gamma_n`, 1-based.
    pub fn nth_root(&self, n: usize) -> Result<Complex64> {
        let len = self.len();
        if n == 0 || n > len {
            return Err(Error::IndexOutOfRange { index: n, len });
        }
        Ok(match self {
            RootSequenceFamily::Explicit(v) => v[n - 1],
            RootSequenceFamily::Parametric(p) => p.root(n),
        })
    }

    /// First `min(limit, len)` roots in presentation order.
    pub fn roots(&self, limit: usize) -> Vec<Complex64> {
        let n = limit.min(self.len());
        match self {
            RootSequenceFamily::Explicit(v) => v[..n].to_vec(),
            RootSequenceFamily::Parametric(p) => (1..=n).map(|i| p.root(i)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenusMethod {
    /// Closed form from the declared modulus exponent.
    DeclaredExponent,
    /// A finite list always has genus zero.
    FiniteSequence,
    /// Doubling test on partial sums; an estimate, not a certificate.
    NumericHeuristic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenusEstimate {
    pub p: usize,
    pub method: GenusMethod,
    /// `(N, sum_{n <= N} |gamma_n|^-(1+p))` at doubling `N`.
    pub tail_evidence: Vec<(usize, f64)>,
}

impl GenusEstimate {
    pub fn is_certified(&self) -> bool {
        self.method != GenusMethod::NumericHeuristic
    }
}

const DOUBLING_START: usize = 16;
const EVIDENCE_CAP: usize = 1 << 16;
/// Relative increment below which a doubling counts as converged.
pub const GENUS_DOUBLING_TOL: f64 = 1e-6;

fn doubling_sums(family: &RootSequenceFamily, p: usize, upto: usize) -> Vec<(usize, f64)> {
    let upto = upto.min(family.len());
    let mut out = Vec::new();
    let mut sum = 0.0;
    let mut next = DOUBLING_START;
    let power = -((1 + p) as f64);
    for n in 1..=upto {
        let g = family.nth_root(n).expect("index within len");
        sum += g.norm().powf(power);
        if n == next {
            out.push((n, sum));
            next *= 2;
        }
    }
    if out.last().is_none_or(|(n, _)| *n != upto) && upto > 0 {
        out.push((upto, sum));
    }
    out
}

/// Smallest `p` whose series `sum |gamma_n|^-(1+p)` converges.
///
/// Parametric families use the closed form `(1+p) * alpha > 1`; explicit
/// lists are finite and get `p = 0`. Use [`estimate_genus_numeric`] for the
/// partial-sum heuristic.
pub fn estimate_genus(family: &RootSequenceFamily, p_max: usize) -> Result<GenusEstimate> {
    match family {
        RootSequenceFamily::Explicit(_) => Ok(GenusEstimate {
            p: 0,
            method: GenusMethod::FiniteSequence,
            tail_evidence: doubling_sums(family, 0, EVIDENCE_CAP),
        }),
        RootSequenceFamily::Parametric(pf) => {
            let alpha = pf.exponent;
            // (1+p) alpha == 1 is the divergent harmonic borderline.
            let p = (0..=p_max).find(|&p| (1 + p) as f64 * alpha > 1.0 + 1e-12);
            match p {
                Some(p) => Ok(GenusEstimate {
                    p,
                    method: GenusMethod::DeclaredExponent,
                    tail_evidence: doubling_sums(family, p, EVIDENCE_CAP),
                }),
                None => Err(Error::NoGenusFound { p_max }),
            }
        }
    }
}

/// Doubling heuristic: accept the first `p` whose partial sums grow by less
/// than `1e-6 * (1 + S)` over two consecutive doublings of `N`, up to the
/// family's enumeration limit.
pub fn estimate_genus_numeric(family: &RootSequenceFamily, p_max: usize) -> Result<GenusEstimate> {
    for p in 0..=p_max {
        let sums = doubling_sums(family, p, family.len());
        if doubling_accepts(&sums) {
            return Ok(GenusEstimate {
                p,
                method: GenusMethod::NumericHeuristic,
                tail_evidence: sums,
            });
        }
    }
    Err(Error::NoGenusFound { p_max })
}

fn doubling_accepts(sums: &[(usize, f64)]) -> bool {
    // only exact doublings count; the trailing partial entry is evidence only
    let doublings: Vec<f64> = sums
        .windows(2)
        .filter(|w| w[1].0 == 2 * w[0].0)
        .map(|w| w[1].1 - w[0].1 - GENUS_DOUBLING_TOL * (1.0 + w[1].1))
        .collect();
    doublings.windows(2).any(|w| w[0] < 0.0 && w[1] < 0.0)
}

/// One of the four real projections of `gamma_n^-r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Re,
    NegRe,
    Im,
    NegIm,
}

impl Projection {
    pub const ALL: [Projection; 4] = [Projection::Re, Projection::NegRe, Projection::Im, Projection::NegIm];

    fn apply(self, w: Complex64) -> f64 {
        match self {
            Projection::Re => w.re,
            Projection::NegRe => -w.re,
            Projection::Im => w.im,
            Projection::NegIm => -w.im,
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Projection::Re => "Re",
            Projection::NegRe => "-Re",
            Projection::Im => "Im",
            Projection::NegIm => "-Im",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionStat {
    pub r: usize,
    pub projection: Projection,
    /// Sum of the non-negative projected terms over `n <= N_probe`.
    pub nonneg_sum: f64,
    /// Same sum over `n <= N_probe / 2`.
    pub nonneg_sum_half: f64,
    /// Growth between the half and full probe looks divergent.
    pub diverging: bool,
    /// Projected terms shrink over successive dyadic blocks.
    pub terms_vanish: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RearrangeVerdict {
    LikelyRearrangeable,
    LikelyNot,
    Inconclusive,
}

impl fmt::Display for RearrangeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RearrangeVerdict::LikelyRearrangeable => "likely-rearrangeable",
            RearrangeVerdict::LikelyNot => "likely-not",
            RearrangeVerdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RearrangeabilityReport {
    pub p: usize,
    pub n_probe: usize,
    pub projections: Vec<ProjectionStat>,
    pub verdict: RearrangeVerdict,
    /// Which quantifier reading of the projection condition was applied.
    pub note: &'static str,
}

/// Relative growth over the last doubling that is read as divergence.
const DIVERGENCE_RATIO: f64 = 0.05;
const ZERO_SUM_TOL: f64 = 1e-9;

/// Heuristic check that every power series `sum gamma_n^-r`, `r = 1..p`,
/// can be rearranged to sum to zero.
///
/// Each real component must either have divergent positive and negative
/// parts with vanishing terms, or be absolutely summable to zero. A
/// component with exactly one divergent side cannot reach zero.
pub fn rearrangeability_diagnostic(
    family: &RootSequenceFamily,
    p: usize,
    n_probe: usize,
) -> RearrangeabilityReport {
    let note = "every real component of gamma^-r (r = 1..p) must be rearrangeable to 0";
    if p == 0 {
        return RearrangeabilityReport {
            p,
            n_probe,
            projections: Vec::new(),
            verdict: RearrangeVerdict::LikelyRearrangeable,
            note,
        };
    }
    let roots = family.roots(n_probe);
    let n = roots.len();
    let half = n / 2;
    let mut projections = Vec::with_capacity(4 * p);
    let mut verdict = RearrangeVerdict::LikelyRearrangeable;

    for r in 1..=p {
        let powers: Vec<Complex64> = roots.iter().map(|g| g.powi(-(r as i32))).collect();
        let mut stats = Vec::with_capacity(4);
        for proj in Projection::ALL {
            let vals: Vec<f64> = powers.iter().map(|&w| proj.apply(w)).collect();
            let full: f64 = vals.iter().filter(|v| **v > 0.0).sum();
            let head: f64 = vals[..half].iter().filter(|v| **v > 0.0).sum();
            let diverging = full > 0.0 && (full - head) >= DIVERGENCE_RATIO * full;
            stats.push(ProjectionStat {
                r,
                projection: proj,
                nonneg_sum: full,
                nonneg_sum_half: head,
                diverging,
                terms_vanish: terms_vanish(&vals),
            });
        }
        // components: (Re, -Re) and (Im, -Im)
        for pair in stats.chunks(2) {
            let component = classify_component(&pair[0], &pair[1]);
            verdict = combine(verdict, component);
        }
        projections.extend(stats);
    }
    RearrangeabilityReport {
        p,
        n_probe,
        projections,
        verdict,
        note,
    }
}

fn terms_vanish(vals: &[f64]) -> bool {
    let n = vals.len();
    if n < 8 {
        return vals.iter().all(|v| *v == 0.0);
    }
    let block_max = |lo: usize, hi: usize| vals[lo..hi].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let a = block_max(n / 8, n / 4);
    let b = block_max(n / 4, n / 2);
    let c = block_max(n / 2, n);
    (a == 0.0 && b == 0.0 && c == 0.0) || (c < b && b < a) || (c == 0.0 && b <= a)
}

fn classify_component(pos: &ProjectionStat, neg: &ProjectionStat) -> RearrangeVerdict {
    match (pos.diverging, neg.diverging) {
        (true, true) if pos.terms_vanish && neg.terms_vanish => RearrangeVerdict::LikelyRearrangeable,
        (true, true) => RearrangeVerdict::Inconclusive,
        (true, false) | (false, true) => RearrangeVerdict::LikelyNot,
        (false, false) => {
            let total = pos.nonneg_sum - neg.nonneg_sum;
            if total.abs() <= ZERO_SUM_TOL * (1.0 + pos.nonneg_sum + neg.nonneg_sum) {
                RearrangeVerdict::LikelyRearrangeable
            } else {
                RearrangeVerdict::LikelyNot
            }
        }
    }
}

fn combine(a: RearrangeVerdict, b: RearrangeVerdict) -> RearrangeVerdict {
    use RearrangeVerdict::*;
    match (a, b) {
        (LikelyNot, _) | (_, LikelyNot) => LikelyNot,
        (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
        _ => LikelyRearrangeable,
    }
}
