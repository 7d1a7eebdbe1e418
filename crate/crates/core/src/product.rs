//! Truncated canonical products and their power sums.
//!
//! For an ordering `delta` of the roots, `f_N(z) = z^q prod_{n<=N} (1 - z/delta_n)`,
//! `h_N(z) = sum_{r=1}^p V_N(r) z^r / r` with `V_N(r) = sum_{n<=N} delta_n^-r`, and the
//! corrected product is `g_N(z) = prod_{n<=N} (1 - z/delta_n) * exp(h_N(z))`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::rearrange::RearrangementPlan;
use crate::roots::{estimate_genus, RootSequenceFamily};
use crate::{Error, Result};

/// Magnitude beyond which products are returned in log form.
pub const OVERFLOW_CAP: f64 = 1e150;
const RESCALE_LOW: f64 = 1e-150;

#[derive(Debug, Clone, PartialEq)]
pub enum RootOrdering {
    Identity,
    Plan(Arc<RearrangementPlan>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalProductSpec {
    q: usize,
    p: usize,
    family: RootSequenceFamily,
    ordering: RootOrdering,
}

impl CanonicalProductSpec {
    /// Genus taken from [`estimate_genus`].
    pub fn new(q: usize, family: RootSequenceFamily, ordering: RootOrdering) -> Result<Self> {
        let p = estimate_genus(&family, 64)?.p;
        Self::with_genus(q, p, family, ordering)
    }

    /// Explicit genus. Parametric families must match their declared genus;
    /// finite lists accept any `p` since they often stand in for a longer sequence.
    pub fn with_genus(
        q: usize,
        p: usize,
        family: RootSequenceFamily,
        ordering: RootOrdering,
    ) -> Result<Self> {
        if let RootSequenceFamily::Parametric(_) = family {
            let est = estimate_genus(&family, p.max(64))?;
            if est.p != p {
                return Err(Error::InvalidArgument(format!(
                    "declared genus {p} disagrees with the family's genus {}",
                    est.p
                )));
            }
        }
        if let RootOrdering::Plan(plan) = &ordering {
            if let Some(&bad) = plan.permutation().iter().find(|&&i| i == 0 || i > family.len()) {
                return Err(Error::IndexOutOfRange {
                    index: bad,
                    len: family.len(),
                });
            }
        }
        Ok(CanonicalProductSpec { q, p, family, ordering })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn family(&self) -> &RootSequenceFamily {
        &self.family
    }

    pub fn ordering(&self) -> &RootOrdering {
        &self.ordering
    }

    /// Number of roots the ordering can resolve.
    pub fn len(&self) -> usize {
        match &self.ordering {
            RootOrdering::Identity => self.family.len(),
            RootOrdering::Plan(plan) => plan.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `delta_n`, 1-based.
    pub fn root(&self, n: usize) -> Result<Complex64> {
        match &self.ordering {
            RootOrdering::Identity => self.family.nth_root(n),
            RootOrdering::Plan(plan) => plan.apply(&self.family, n),
        }
    }

    /// `delta_1, ..., delta_N`.
    pub fn roots(&self, n: usize) -> Result<Vec<Complex64>> {
        if n > self.len() {
            return Err(Error::IndexOutOfRange { index: n, len: self.len() });
        }
        match &self.ordering {
            RootOrdering::Identity => Ok(self.family.roots(n)),
            RootOrdering::Plan(_) => (1..=n).map(|k| self.root(k)).collect(),
        }
    }
}

/// A complex value, or `(ln|w|, arg w)` once `|w|` exceeds [`OVERFLOW_CAP`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProductValue {
    Finite(Complex64),
    Scaled { log_abs: f64, arg: f64 },
}

impl ProductValue {
    fn from_parts(mant: Complex64, log_scale: f64) -> Self {
        if mant == Complex64::new(0.0, 0.0) {
            return ProductValue::Finite(mant);
        }
        let log_abs = log_scale + mant.norm().ln();
        if log_abs <= OVERFLOW_CAP.ln() {
            ProductValue::Finite(mant * log_scale.exp())
        } else {
            ProductValue::Scaled { log_abs, arg: mant.arg() }
        }
    }

    /// `ln|w|`; `-inf` for an exact zero.
    pub fn log_abs(&self) -> f64 {
        match *self {
            ProductValue::Finite(w) => w.norm().ln(),
            ProductValue::Scaled { log_abs, .. } => log_abs,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ProductValue::Finite(w) if *w == Complex64::new(0.0, 0.0))
    }

    /// May overflow to infinity for scaled values.
    pub fn to_complex(&self) -> Complex64 {
        match *self {
            ProductValue::Finite(w) => w,
            ProductValue::Scaled { log_abs, arg } => Complex64::from_polar(log_abs.exp(), arg),
        }
    }

    /// `self * exp(h)`.
    pub fn mul_exp(&self, h: Complex64) -> Self {
        match *self {
            _ if h == Complex64::new(0.0, 0.0) => *self,
            ProductValue::Finite(w) if w == Complex64::new(0.0, 0.0) => *self,
            ProductValue::Finite(w) => ProductValue::from_parts(
                Complex64::from_polar(1.0, w.arg() + h.im),
                w.norm().ln() + h.re,
            ),
            ProductValue::Scaled { log_abs, arg } => {
                ProductValue::from_parts(Complex64::from_polar(1.0, arg + h.im), log_abs + h.re)
            }
        }
    }

    /// `|self - other|`, computed relative to the larger operand.
    pub fn abs_diff(&self, other: &ProductValue) -> f64 {
        if let (ProductValue::Finite(a), ProductValue::Finite(b)) = (self, other) {
            return (a - b).norm();
        }
        let (big, small) = if self.log_abs() >= other.log_abs() {
            (self, other)
        } else {
            (other, self)
        };
        let (la, aa) = big.polar();
        let (lb, ab) = small.polar();
        let ratio = Complex64::from_polar((lb - la).exp(), ab - aa);
        la.exp() * (Complex64::new(1.0, 0.0) - ratio).norm()
    }

    fn polar(&self) -> (f64, f64) {
        match *self {
            ProductValue::Finite(w) => (w.norm().ln(), w.arg()),
            ProductValue::Scaled { log_abs, arg } => (log_abs, arg),
        }
    }
}

/// Running product with magnitudes factored out before they overflow.
struct ScaledAccumulator {
    mant: Complex64,
    log_scale: f64,
}

impl ScaledAccumulator {
    fn new() -> Self {
        ScaledAccumulator {
            mant: Complex64::new(1.0, 0.0),
            log_scale: 0.0,
        }
    }

    fn mul(&mut self, w: Complex64) {
        self.mant *= w;
        let m = self.mant.norm();
        if m > OVERFLOW_CAP || (m < RESCALE_LOW && m > 0.0) {
            self.log_scale += m.ln();
            self.mant /= m;
        }
    }

    fn finish(self) -> ProductValue {
        ProductValue::from_parts(self.mant, self.log_scale)
    }
}

fn product_of_factors(q: usize, roots: &[Complex64], z: Complex64) -> ProductValue {
    let mut acc = ScaledAccumulator::new();
    for _ in 0..q {
        acc.mul(z);
    }
    for &d in roots {
        acc.mul(Complex64::new(1.0, 0.0) - z / d);
    }
    acc.finish()
}

/// `f_N(z) = z^q prod_{n<=N} (1 - z/delta_n)`, multiplied left to right in the declared order.
pub fn partial_product(spec: &CanonicalProductSpec, n: usize, z: Complex64) -> Result<ProductValue> {
    let roots = spec.roots(n)?;
    Ok(product_of_factors(spec.q, &roots, z))
}

/// Prefix power sums `V_N(r) = sum_{n<=N} delta_n^-r`, `r = 1..p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSumLedger {
    n: usize,
    sums: Vec<Complex64>,
    checkpoints: Vec<(usize, f64)>,
}

impl PowerSumLedger {
    pub fn new(p: usize) -> Self {
        PowerSumLedger {
            n: 0,
            sums: vec![Complex64::new(0.0, 0.0); p],
            checkpoints: Vec::new(),
        }
    }

    /// Recomputed from scratch with independent powers `delta^-r`.
    pub fn from_roots(p: usize, roots: &[Complex64]) -> Result<Self> {
        let mut sums = vec![Complex64::new(0.0, 0.0); p];
        for &d in roots {
            if d == Complex64::new(0.0, 0.0) {
                return Err(Error::ZeroRoot);
            }
            for (r, s) in sums.iter_mut().enumerate() {
                *s += d.powi(-(r as i32 + 1));
            }
        }
        Ok(PowerSumLedger {
            n: roots.len(),
            sums,
            checkpoints: Vec::new(),
        })
    }

    /// Ledger after appending `delta_{N+1}`.
    pub fn advanced(mut self, delta: Complex64) -> Result<Self> {
        self.push(delta)?;
        Ok(self)
    }

    pub(crate) fn push(&mut self, delta: Complex64) -> Result<()> {
        if delta == Complex64::new(0.0, 0.0) {
            return Err(Error::ZeroRoot);
        }
        let w = delta.inv();
        let mut pow = w;
        for s in self.sums.iter_mut() {
            *s += pow;
            pow *= w;
        }
        self.n += 1;
        Ok(())
    }

    /// Record `(N, max_r |V_N(r)|)`.
    pub fn checkpointed(mut self) -> Self {
        self.checkpoint();
        self
    }

    pub(crate) fn checkpoint(&mut self) {
        let m = self.max_abs();
        self.checkpoints.push((self.n, m));
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.sums.len()
    }

    /// `V_N(1..=p)`.
    pub fn sums(&self) -> &[Complex64] {
        &self.sums
    }

    pub fn checkpoints(&self) -> &[(usize, f64)] {
        &self.checkpoints
    }

    pub fn max_abs(&self) -> f64 {
        self.sums.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }
}

/// `h_N(z) = sum_{r=1}^p V_N(r) z^r / r`; zero for `p = 0`.
pub fn h_n(ledger: &PowerSumLedger, z: Complex64) -> Complex64 {
    let mut zr = Complex64::new(1.0, 0.0);
    let mut h = Complex64::new(0.0, 0.0);
    for (r, v) in ledger.sums.iter().enumerate() {
        zr *= z;
        h += v * zr / (r + 1) as f64;
    }
    h
}

/// `g_N(z) = prod_{n<=N} (1 - z/delta_n) exp(h_N(z))`, times `z^q`.
pub fn corrected_partial_product(
    spec: &CanonicalProductSpec,
    n: usize,
    z: Complex64,
) -> Result<ProductValue> {
    let roots = spec.roots(n)?;
    let ledger = PowerSumLedger::from_roots(spec.p, &roots)?;
    Ok(product_of_factors(spec.q, &roots, z).mul_exp(h_n(&ledger, z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    /// `f_N`
    Plain,
    /// `g_N`
    Corrected,
}

/// `|F_N(z) - F_{2N}(z)|` for each `N` in the schedule, `2N` capped at the
/// number of available roots.
pub fn convergence_probe(
    spec: &CanonicalProductSpec,
    z: Complex64,
    schedule: &[usize],
    kind: ProbeKind,
) -> Result<Vec<f64>> {
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("probe schedule must be strictly increasing".into()));
    }
    let len = spec.len();
    let eval = |n: usize| match kind {
        ProbeKind::Plain => partial_product(spec, n, z),
        ProbeKind::Corrected => corrected_partial_product(spec, n, z),
    };
    schedule
        .iter()
        .map(|&n| {
            let a = eval(n.min(len))?;
            let b = eval((2 * n).min(len))?;
            Ok(a.abs_diff(&b))
        })
        .collect()
}
