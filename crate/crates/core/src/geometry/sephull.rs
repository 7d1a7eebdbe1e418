//! Grid outer approximation of the separately convex hull `H_2(A)` of a finite
//! set `A` in `C^M`.
//!
//! The `2M` real axes are each split into `resolution` cells. Starting from
//! the cells hit by `A`, every pass visits each coordinate `m` and every
//! setting of the remaining axes and replaces the resulting planar slice by
//! its lattice convex closure: all cells whose centres lie in the convex hull
//! of the occupied centres. The pass is repeated until nothing changes.
//!
//! Hull tests are done in integer cell coordinates, so they are exact, and
//! the closure never leaves the ordinary convex hull of the occupied centres.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::{Error, Result};

pub const DEFAULT_ITERATION_CAP: usize = 50;
const MAX_CELLS: usize = 1 << 26;
/// Fraction of a cell within which a face is considered "near" for membership.
const FACE_BAND: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) && re_min < re_max && im_min < im_max;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "degenerate box [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Rect { re_min, re_max, im_min, im_max })
    }

    /// `[lo, hi]` on both axes.
    pub fn square(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, lo, hi)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (self.re_min..=self.re_max).contains(&z.re) && (self.im_min..=self.im_max).contains(&z.im)
    }

    fn axis(&self, imag: bool) -> (f64, f64) {
        if imag {
            (self.im_min, self.im_max)
        } else {
            (self.re_min, self.re_max)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Outside,
    Uncertain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SepHullGrid {
    bbox: Vec<Rect>,
    resolution: usize,
    mask: Vec<bool>,
    converged: bool,
    iterations: usize,
}

impl SepHullGrid {
    pub fn m(&self) -> usize {
        self.bbox.len()
    }

    pub fn bbox(&self) -> &[Rect] {
        &self.bbox
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Number of full passes performed, including the final unchanged one.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn occupied_count(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }

    /// Flat indices of occupied cells, ascending.
    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        let (lo, hi) = self.bbox[axis / 2].axis(axis % 2 == 1);
        (hi - lo) / self.resolution as f64
    }

    /// Length of the diagonal of one cell in `R^{2M}`.
    pub fn cell_diagonal(&self) -> f64 {
        (0..2 * self.m()).map(|a| self.cell_width(a).powi(2)).sum::<f64>().sqrt()
    }

    /// Per-axis cell indices of a flat index.
    pub fn cell_digits(&self, flat: usize) -> Vec<usize> {
        let r = self.resolution;
        let mut f = flat;
        (0..2 * self.m())
            .map(|_| {
                let d = f % r;
                f /= r;
                d
            })
            .collect()
    }

    pub fn flat_index(&self, digits: &[usize]) -> usize {
        digits.iter().rev().fold(0, |acc, d| acc * self.resolution + d)
    }

    pub fn cell_center(&self, flat: usize) -> Vec<Complex64> {
        let digits = self.cell_digits(flat);
        (0..self.m())
            .map(|m| {
                let c = |a: usize| {
                    let (lo, _) = self.bbox[m].axis(a % 2 == 1);
                    lo + (digits[a] as f64 + 0.5) * self.cell_width(a)
                };
                Complex64::new(c(2 * m), c(2 * m + 1))
            })
            .collect()
    }

    /// Continuous cell coordinate of `x` on `axis`, or `None` outside the box.
    fn axis_coord(&self, axis: usize, x: f64) -> Option<f64> {
        let (lo, hi) = self.bbox[axis / 2].axis(axis % 2 == 1);
        if !(lo..=hi).contains(&x) {
            return None;
        }
        Some((x - lo) / (hi - lo) * self.resolution as f64)
    }

    fn cell_of(&self, point: &[Complex64]) -> Option<usize> {
        let digits: Option<Vec<usize>> = (0..2 * self.m())
            .map(|a| {
                let z = point[a / 2];
                let x = if a % 2 == 1 { z.im } else { z.re };
                self.axis_coord(a, x).map(|u| (u.floor() as usize).min(self.resolution - 1))
            })
            .collect();
        digits.map(|d| self.flat_index(&d))
    }

    /// Header lines then run lengths of alternating empty/occupied cells,
    /// starting with an empty run (which may be 0).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# separately convex hull mask");
        let _ = writeln!(s, "M = {}", self.m());
        let _ = writeln!(s, "resolution = {}", self.resolution);
        for (m, b) in self.bbox.iter().enumerate() {
            let _ = writeln!(s, "bbox.{} = {:?} {:?} {:?} {:?}", m + 1, b.re_min, b.re_max, b.im_min, b.im_max);
        }
        let _ = writeln!(s, "converged = {}", self.converged);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "# axis order: re z1, im z1, re z2, ...; first axis varies fastest");
        let mut runs = Vec::new();
        let mut cur = false;
        let mut len = 0usize;
        for &b in &self.mask {
            if b == cur {
                len += 1;
            } else {
                runs.push(len);
                cur = b;
                len = 1;
            }
        }
        runs.push(len);
        for chunk in runs.chunks(16) {
            let line: Vec<String> = chunk.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |msg: String| Error::Parse(format!("mask: {msg}"));
        let mut m = None;
        let mut resolution = None;
        let mut bbox: Vec<(usize, Rect)> = Vec::new();
        let mut converged = None;
        let mut iterations = None;
        let mut runs = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            if let Some((k, v)) = line.split_once('=') {
                let (k, v) = (k.trim(), v.trim());
                let int = |v: &str| v.parse::<usize>().map_err(|_| perr(format!("bad integer {v:?}")));
                match k {
                    "M" => m = Some(int(v)?),
                    "resolution" => resolution = Some(int(v)?),
                    "iterations" => iterations = Some(int(v)?),
                    "converged" => converged = Some(v.parse::<bool>().map_err(|_| perr(format!("bad bool {v:?}")))?),
                    _ if k.starts_with("bbox.") => {
                        let idx = int(&k[5..])?;
                        let nums: Vec<f64> = v
                            .split_whitespace()
                            .map(|t| t.parse().map_err(|_| perr(format!("bad number {t:?}"))))
                            .collect::<Result<_>>()?;
                        if nums.len() != 4 {
                            return Err(perr(format!("bbox line needs 4 numbers: {line:?}")));
                        }
                        bbox.push((idx, Rect::new(nums[0], nums[1], nums[2], nums[3])?));
                    }
                    _ => return Err(perr(format!("unknown key {k:?}"))),
                }
            } else {
                for t in line.split_whitespace() {
                    runs.push(t.parse::<usize>().map_err(|_| perr(format!("bad run {t:?}")))?);
                }
            }
        }
        let m = m.ok_or_else(|| perr("missing M".into()))?;
        let resolution = resolution.ok_or_else(|| perr("missing resolution".into()))?;
        bbox.sort_by_key(|(i, _)| *i);
        if bbox.len() != m || bbox.iter().enumerate().any(|(k, (i, _))| *i != k + 1) {
            return Err(perr("bbox lines do not match M".into()));
        }
        let total = total_cells(m, resolution)?;
        let mut mask = Vec::with_capacity(total);
        let mut cur = false;
        for r in runs {
            mask.extend(std::iter::repeat_n(cur, r));
            cur = !cur;
        }
        if mask.len() != total {
            return Err(perr(format!("runs cover {} cells, expected {total}", mask.len())));
        }
        Ok(SepHullGrid {
            bbox: bbox.into_iter().map(|(_, b)| b).collect(),
            resolution,
            mask,
            converged: converged.ok_or_else(|| perr("missing converged".into()))?,
            iterations: iterations.ok_or_else(|| perr("missing iterations".into()))?,
        })
    }
}

fn total_cells(m: usize, resolution: usize) -> Result<usize> {
    let total = (0..2 * m).try_fold(1usize, |acc, _| acc.checked_mul(resolution));
    match total {
        Some(t) if t <= MAX_CELLS => Ok(t),
        _ => Err(Error::InvalidArgument(format!(
            "grid with M = {m} and resolution {resolution} exceeds {MAX_CELLS} cells"
        ))),
    }
}

fn icross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Counterclockwise hull of lattice points, collinear points removed.
fn lattice_hull(mut pts: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(i64, i64)>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && icross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn lattice_hull_contains(hull: &[(i64, i64)], p: (i64, i64)) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0] == p,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            icross(a, b, p) == 0
                && (a.0.min(b.0)..=a.0.max(b.0)).contains(&p.0)
                && (a.1.min(b.1)..=a.1.max(b.1)).contains(&p.1)
        }
        n => (0..n).all(|i| icross(hull[i], hull[(i + 1) % n], p) >= 0),
    }
}

/// One convexification sweep over all slices of coordinate `m`. Returns
/// whether any cell was added.
fn convexify_coordinate(mask: &mut [bool], m: usize, r: usize) -> bool {
    let sa = r.pow(2 * m as u32);
    let sb = sa * r;
    let total = mask.len();
    let mut changed = false;
    let mut pts = Vec::new();
    for base in 0..total {
        if !(base / sa).is_multiple_of(r) || !(base / sb).is_multiple_of(r) {
            continue;
        }
        pts.clear();
        for j in 0..r {
            for i in 0..r {
                if mask[base + i * sa + j * sb] {
                    pts.push((i as i64, j as i64));
                }
            }
        }
        if pts.len() < 2 {
            continue;
        }
        let hull = lattice_hull(std::mem::take(&mut pts));
        let (i0, i1) = hull.iter().fold((i64::MAX, i64::MIN), |(a, b), p| (a.min(p.0), b.max(p.0)));
        let (j0, j1) = hull.iter().fold((i64::MAX, i64::MIN), |(a, b), p| (a.min(p.1), b.max(p.1)));
        for j in j0..=j1 {
            for i in i0..=i1 {
                let f = base + i as usize * sa + j as usize * sb;
                if !mask[f] && lattice_hull_contains(&hull, (i, j)) {
                    mask[f] = true;
                    changed = true;
                }
            }
        }
    }
    changed
}

/// Grid approximation of the separately convex hull of `points`, each a
/// vector of `M` complex coordinates. `bbox[m]` is the window for coordinate `m`.
pub fn sep_hull_grid(points: &[Vec<Complex64>], bbox: &[Rect], resolution: usize) -> Result<SepHullGrid> {
    sep_hull_grid_capped(points, bbox, resolution, DEFAULT_ITERATION_CAP)
}

pub fn sep_hull_grid_capped(
    points: &[Vec<Complex64>],
    bbox: &[Rect],
    resolution: usize,
    iteration_cap: usize,
) -> Result<SepHullGrid> {
    let m = bbox.len();
    if m == 0 {
        return Err(Error::InvalidArgument("M >= 1 required".into()));
    }
    if resolution < 4 {
        return Err(Error::InvalidArgument("resolution >= 4 required".into()));
    }
    let total = total_cells(m, resolution)?;
    let mut grid = SepHullGrid {
        bbox: bbox.to_vec(),
        resolution,
        mask: vec![false; total],
        converged: false,
        iterations: 0,
    };
    for p in points {
        if p.len() != m {
            return Err(Error::InvalidArgument(format!("point has {} coordinates, expected {m}", p.len())));
        }
        let cell = grid
            .cell_of(p)
            .ok_or_else(|| Error::Precondition(format!("point {p:?} lies outside the bounding box")))?;
        grid.mask[cell] = true;
    }
    while grid.iterations < iteration_cap {
        grid.iterations += 1;
        let mut changed = false;
        for coord in 0..m {
            changed |= convexify_coordinate(&mut grid.mask, coord, resolution);
        }
        if !changed {
            grid.converged = true;
            break;
        }
    }
    Ok(grid)
}

/// Tri-state membership of `z` in the approximated hull.
///
/// The cell containing `z` is inspected together with each face neighbour
/// whose shared face lies within a quarter cell of `z`. All occupied gives
/// `Inside`, all empty gives `Outside`, anything else (including points
/// outside the box or next to its edge) is `Uncertain`.
pub fn sep_hull_contains(grid: &SepHullGrid, z: &[Complex64]) -> Membership {
    if z.len() != grid.m() {
        return Membership::Uncertain;
    }
    let r = grid.resolution;
    let mut digits = Vec::with_capacity(2 * grid.m());
    let mut near: Vec<(usize, isize)> = Vec::new();
    for a in 0..2 * grid.m() {
        let x = if a % 2 == 1 { z[a / 2].im } else { z[a / 2].re };
        let Some(u) = grid.axis_coord(a, x) else {
            return Membership::Uncertain;
        };
        let d = (u.floor() as usize).min(r - 1);
        let frac = u - d as f64;
        if frac < FACE_BAND {
            near.push((a, -1));
        }
        if frac > 1.0 - FACE_BAND {
            near.push((a, 1));
        }
        digits.push(d);
    }
    let mut states = vec![grid.mask[grid.flat_index(&digits)]];
    for (a, step) in near {
        let nd = digits[a] as isize + step;
        if nd < 0 || nd >= r as isize {
            return Membership::Uncertain;
        }
        let mut nb = digits.clone();
        nb[a] = nd as usize;
        states.push(grid.mask[grid.flat_index(&nb)]);
    }
    if states.iter().all(|s| *s) {
        Membership::Inside
    } else if states.iter().all(|s| !*s) {
        Membership::Outside
    } else {
        Membership::Uncertain
    }
}
