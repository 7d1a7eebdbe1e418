//! Reordering roots so that the prefix power sums `V_N(r)`, `r = 1..p`, tend to zero.
//!
//! Each root contributes the real `2p`-vector
//! `(Re gamma^-1, ..., Re gamma^-p, Im gamma^-1, ..., Im gamma^-p)`. Roots are
//! split into direction classes (the sign orthant of that vector) and each
//! class is consumed oldest-first, as in Riemann's rearrangement of a real
//! series: at every step the engine looks at the first `W` unused roots of
//! every class and takes the one whose direction is most opposed to the
//! running sum. A class head that has been overtaken more than `10 W` times
//! is taken unconditionally.
//!
//! Classes may be consumed at different rates, so a root can wait arbitrarily
//! long behind roots of other classes; that unbounded displacement is what
//! lets the sum be steered to a different limit than the presented order.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::product::PowerSumLedger;
use crate::roots::RootSequenceFamily;
use crate::{Error, Result};

pub const DEFAULT_WINDOW: usize = 200;
pub const DEFAULT_TARGET: f64 = 0.05;
pub const FAIRNESS_FACTOR: usize = 10;
pub const CHECKPOINT_COUNT: usize = 20;
/// Slack used when comparing checkpoint magnitudes for monotonicity.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// `(Re gamma^-1, ..., Re gamma^-p, Im gamma^-1, ..., Im gamma^-p)`.
pub fn term_vector(gamma: Complex64, p: usize) -> Result<Vec<f64>> {
    if gamma == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroRoot);
    }
    let mut out = vec![0.0; 2 * p];
    for r in 0..p {
        let w = gamma.powi(-(r as i32 + 1));
        out[r] = w.re;
        out[r + p] = w.im;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanStatus {
    Converging,
    Stalled,
}

impl fmt::Display for PlanStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanStatus::Converging => "converging",
            PlanStatus::Stalled => "stalled",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RearrangeConfig {
    pub window: usize,
    pub target: f64,
}

impl Default for RearrangeConfig {
    fn default() -> Self {
        RearrangeConfig {
            window: DEFAULT_WINDOW,
            target: DEFAULT_TARGET,
        }
    }
}

/// Prefix of a permutation of the family's indices plus power-sum checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangementPlan {
    p: usize,
    window: usize,
    n_target: usize,
    target: f64,
    /// Original 1-based indices `pi(1), ..., pi(N)`.
    permutation: Vec<usize>,
    /// `(N, max_r |V_N(r)|)`.
    checkpoints: Vec<(usize, f64)>,
    status: PlanStatus,
}

impl RearrangementPlan {
    /// Identity ordering of the first `n` roots.
    pub fn identity(n: usize) -> Self {
        RearrangementPlan {
            p: 0,
            window: DEFAULT_WINDOW,
            n_target: n,
            target: DEFAULT_TARGET,
            permutation: (1..=n).collect(),
            checkpoints: Vec::new(),
            status: PlanStatus::Converging,
        }
    }

    /// Plan from an explicit index list; checkpoints are computed from the family.
    pub fn from_permutation(family: &RootSequenceFamily, p: usize, permutation: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; family.len() + 1];
        for &i in &permutation {
            if i == 0 || i > family.len() {
                return Err(Error::IndexOutOfRange { index: i, len: family.len() });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!("index {i} repeated in permutation")));
            }
        }
        let n = permutation.len();
        let interval = checkpoint_interval(n);
        let mut ledger = PowerSumLedger::new(p);
        for (step, &i) in permutation.iter().enumerate() {
            ledger.push(family.nth_root(i)?)?;
            if p > 0 && ((step + 1) % interval == 0 || step + 1 == n) {
                ledger.checkpoint();
            }
        }
        let checkpoints = ledger.checkpoints().to_vec();
        let status = classify_status(&checkpoints, DEFAULT_TARGET, p);
        Ok(RearrangementPlan {
            p,
            window: DEFAULT_WINDOW,
            n_target: n,
            target: DEFAULT_TARGET,
            permutation,
            checkpoints,
            status,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn checkpoints(&self) -> &[(usize, f64)] {
        &self.checkpoints
    }

    pub fn status(&self) -> PlanStatus {
        self.status
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    /// `gamma_{pi(n)}`, 1-based.
    pub fn apply(&self, family: &RootSequenceFamily, n: usize) -> Result<Complex64> {
        if n == 0 || n > self.permutation.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: self.permutation.len(),
            });
        }
        family.nth_root(self.permutation[n - 1])
    }

    /// Largest checkpoint magnitude at or after `n0`.
    pub fn sup_after(&self, n0: usize) -> Option<f64> {
        self.checkpoints
            .iter()
            .filter(|(n, _)| *n >= n0)
            .map(|(_, v)| *v)
            .reduce(f64::max)
    }

    pub fn final_checkpoint(&self) -> Option<(usize, f64)> {
        self.checkpoints.last().copied()
    }

    /// Header, one original index per line, checkpoints as trailing comments.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# rearrangement plan");
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "window = {}", self.window);
        let _ = writeln!(s, "n_target = {}", self.n_target);
        let _ = writeln!(s, "target = {:e}", self.target);
        let _ = writeln!(s, "status = {}", self.status);
        for i in &self.permutation {
            let _ = writeln!(s, "{i}");
        }
        for (n, v) in &self.checkpoints {
            let _ = writeln!(s, "# checkpoint {n} {v:e}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut header: BTreeMap<&str, &str> = BTreeMap::new();
        let mut permutation = Vec::new();
        let mut checkpoints = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let perr = |what: &str| Error::Parse(format!("plan line {}: {what}: {raw:?}", lineno + 1));
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# checkpoint") {
                let mut it = rest.split_whitespace();
                let n = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| perr("bad checkpoint"))?;
                let v = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| perr("bad checkpoint"))?;
                checkpoints.push((n, v));
            } else if line.starts_with('#') {
                continue;
            } else if let Some((k, v)) = line.split_once('=') {
                header.insert(k.trim(), v.trim());
            } else {
                permutation.push(line.parse::<usize>().map_err(|_| perr("bad index"))?);
            }
        }
        let field = |k: &str| header.get(k).copied().ok_or_else(|| Error::Parse(format!("plan missing `{k}`")));
        let num = |k: &str| -> Result<usize> {
            field(k)?.parse().map_err(|_| Error::Parse(format!("plan field `{k}` is not an integer")))
        };
        let status = match field("status")? {
            "converging" => PlanStatus::Converging,
            "stalled" => PlanStatus::Stalled,
            other => return Err(Error::Parse(format!("unknown plan status `{other}`"))),
        };
        Ok(RearrangementPlan {
            p: num("p")?,
            window: num("window")?,
            n_target: num("n_target")?,
            target: field("target")?
                .parse()
                .map_err(|_| Error::Parse("plan field `target` is not a number".into()))?,
            permutation,
            checkpoints,
            status,
        })
    }
}

fn checkpoint_interval(n_target: usize) -> usize {
    (n_target / CHECKPOINT_COUNT).max(1)
}

/// Converging iff the final checkpoint is at most `target` and the last (up to)
/// three checkpoints are either non-increasing or all within `target`.
fn classify_status(checkpoints: &[(usize, f64)], target: f64, p: usize) -> PlanStatus {
    if p == 0 {
        return PlanStatus::Converging;
    }
    let Some(&(_, last)) = checkpoints.last() else {
        return PlanStatus::Stalled;
    };
    let tail = &checkpoints[checkpoints.len().saturating_sub(3)..];
    let monotone = tail.windows(2).all(|w| w[1].1 <= w[0].1 + MONOTONE_SLACK);
    let settled = tail.iter().all(|(_, v)| *v <= target);
    if (monotone || settled) && last <= target {
        PlanStatus::Converging
    } else {
        PlanStatus::Stalled
    }
}

struct DirectionClass {
    pending: VecDeque<usize>,
    overtaken: usize,
}

fn orthant_key(x: &[f64]) -> u64 {
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let zero = 1e-14 * scale;
    x.iter()
        .enumerate()
        .filter(|(_, v)| **v < -zero)
        .fold(0u64, |k, (i, _)| k | (1 << i))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Build an ordering of the first `n_target` roots (or all, if fewer exist)
/// whose power sums are steered towards zero.
///
/// For `p = 0` the identity ordering is returned.
pub fn rearrange_to_zero(
    family: &RootSequenceFamily,
    p: usize,
    n_target: usize,
    cfg: &RearrangeConfig,
) -> Result<RearrangementPlan> {
    if cfg.window == 0 {
        return Err(Error::InvalidArgument("window must be >= 1".into()));
    }
    if p > 32 {
        return Err(Error::InvalidArgument(format!("genus {p} too large (max 32)")));
    }
    let available = family.len();
    if p == 0 {
        let mut plan = RearrangementPlan::identity(n_target.min(available));
        plan.window = cfg.window;
        plan.target = cfg.target;
        plan.n_target = n_target;
        return Ok(plan);
    }

    let roots = family.roots(available);
    let terms: Vec<Vec<f64>> = roots
        .iter()
        .map(|&g| term_vector(g, p))
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = terms.iter().map(|x| dot(x, x).sqrt()).collect();

    let mut classes: BTreeMap<u64, DirectionClass> = BTreeMap::new();
    for (i, x) in terms.iter().enumerate() {
        classes
            .entry(orthant_key(x))
            .or_insert_with(|| DirectionClass {
                pending: VecDeque::new(),
                overtaken: 0,
            })
            .pending
            .push_back(i);
    }

    let steps = n_target.min(available);
    let interval = checkpoint_interval(n_target);
    let forced_after = FAIRNESS_FACTOR * cfg.window;
    let mut sum = vec![0.0; 2 * p];
    let mut ledger = PowerSumLedger::new(p);
    let mut permutation = Vec::with_capacity(steps);

    for step in 1..=steps {
        let forced = classes
            .iter()
            .filter(|(_, c)| c.overtaken > forced_after)
            .filter_map(|(k, c)| c.pending.front().map(|&i| (i, *k, 0usize)))
            .min();
        let sum_is_zero = sum.iter().all(|v| *v == 0.0);
        let (pick, key, pos) = if let Some(f) = forced {
            f
        } else if sum_is_zero {
            classes
                .iter()
                .filter_map(|(k, c)| c.pending.front().map(|&i| (i, *k, 0usize)))
                .min()
                .expect("steps <= available keeps some class non-empty")
        } else {
            // Scores are equal up to rounding for parallel candidates; those
            // ties go to the oldest root.
            let tie = 1e-12 * dot(&sum, &sum).sqrt();
            let mut best: Option<(f64, usize, u64, usize)> = None;
            for (k, c) in &classes {
                for (pos, &i) in c.pending.iter().take(cfg.window).enumerate() {
                    let score = dot(&sum, &terms[i]) / norms[i];
                    let better = match best {
                        None => true,
                        Some((s, j, _, _)) => score < s - tie || (score <= s + tie && i < j),
                    };
                    if better {
                        best = Some((score, i, *k, pos));
                    }
                }
            }
            let (_, i, k, pos) = best.expect("steps <= available keeps some class non-empty");
            (i, k, pos)
        };

        let class = classes.get_mut(&key).expect("key from map");
        class.pending.remove(pos);
        if pos == 0 {
            class.overtaken = 0;
        } else {
            class.overtaken += 1;
        }
        for (s, x) in sum.iter_mut().zip(&terms[pick]) {
            *s += x;
        }
        ledger.push(roots[pick])?;
        permutation.push(pick + 1);
        if step % interval == 0 || step == steps {
            ledger.checkpoint();
        }
    }

    let checkpoints = ledger.checkpoints().to_vec();
    let status = classify_status(&checkpoints, cfg.target, p);
    Ok(RearrangementPlan {
        p,
        window: cfg.window,
        n_target,
        target: cfg.target,
        permutation,
        checkpoints,
        status,
    })
}
