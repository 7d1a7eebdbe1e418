use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HullKind {
    Point,
    Segment,
    Polygon,
}

/// Convex hull of a finite planar point set, vertices counterclockwise.
///
/// Collinear boundary points are dropped, so a polygon hull is strictly convex
/// and a collinear input collapses to its two extreme points.
#[derive(Debug, Clone, PartialEq)]
pub struct Hull2D {
    vertices: Vec<Complex64>,
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

fn segment_distance(a: Complex64, b: Complex64, z: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

impl Hull2D {
    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn kind(&self) -> HullKind {
        match self.vertices.len() {
            1 => HullKind::Point,
            2 => HullKind::Segment,
            _ => HullKind::Polygon,
        }
    }

    /// Signed distance: negative inside a polygon, zero on the boundary.
    /// Points and segments have no interior, so the value is never negative there.
    pub fn signed_distance(&self, z: Complex64) -> f64 {
        let v = &self.vertices;
        match self.kind() {
            HullKind::Point => (z - v[0]).norm(),
            HullKind::Segment => segment_distance(v[0], v[1], z),
            HullKind::Polygon => {
                let n = v.len();
                let mut inside = true;
                let mut best = f64::INFINITY;
                for i in 0..n {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    if cross(a, b, z) < 0.0 {
                        inside = false;
                    }
                    best = best.min(segment_distance(a, b, z));
                }
                if inside {
                    -best
                } else {
                    best
                }
            }
        }
    }

    /// Euclidean distance from `z` to the hull (zero inside).
    pub fn distance(&self, z: Complex64) -> f64 {
        self.signed_distance(z).max(0.0)
    }

    /// Axis-aligned bounding box `(re_min, re_max, im_min, im_max)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), v| (a.min(v.re), b.max(v.re), c.min(v.im), d.max(v.im)),
        )
    }
}

/// Andrew's monotone chain.
pub fn hull2d(points: &[Complex64]) -> Result<Hull2D> {
    if points.is_empty() {
        return Err(Error::EmptyInput("hull2d needs at least one point"));
    }
    if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
        return Err(Error::InvalidArgument("hull2d input contains a non-finite point".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup();
    if pts.len() == 1 {
        return Ok(Hull2D { vertices: pts });
    }
    let mut lower: Vec<Complex64> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Complex64> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 || (lower.len() > 2 && lower.windows(3).all(|w| cross(w[0], w[1], w[2]) == 0.0)) {
        // all collinear: keep the two extremes
        let (a, b) = (pts[0], pts[pts.len() - 1]);
        return Ok(Hull2D { vertices: vec![a, b] });
    }
    Ok(Hull2D { vertices: lower })
}

pub fn hull_contains(hull: &Hull2D, z: Complex64, eps: f64) -> bool {
    hull.distance(z) <= eps
}

/// Two-sided bound on the Euclidean distance from a point to the convex hull
/// of finitely many points in `R^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceBound {
    pub upper: f64,
    pub lower: f64,
    pub iterations: usize,
}

/// Frank-Wolfe on `1/2 |y - x|^2` over the hull, with exact line search.
///
/// The duality gap `g` bounds `|y - x|^2 - d^2 <= 2 g`, which yields the lower
/// bound. Iteration stops once `upper - lower <= tol`, once `upper <= stop_below`,
/// or after `max_iter` steps.
pub fn hull_distance_nd(
    points: &[Vec<f64>],
    x: &[f64],
    tol: f64,
    stop_below: f64,
    max_iter: usize,
) -> Result<DistanceBound> {
    let Some(first) = points.first() else {
        return Err(Error::EmptyInput("hull_distance_nd needs at least one point"));
    };
    let d = x.len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidArgument("point dimensions differ".into()));
    }
    let dist2 = |a: &[f64]| a.iter().zip(x).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
    // start at the nearest input point
    let mut y = first.clone();
    let mut best = dist2(&y);
    for p in &points[1..] {
        let e = dist2(p);
        if e < best {
            best = e;
            y = p.clone();
        }
    }
    let mut lower = 0.0f64;
    let mut it = 0;
    loop {
        let grad: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
        let gy: f64 = grad.iter().zip(&y).map(|(g, v)| g * v).sum();
        let (s, gs) = points
            .iter()
            .map(|p| (p, grad.iter().zip(p).map(|(g, v)| g * v).sum::<f64>()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        let gap = (gy - gs).max(0.0);
        let f = dist2(&y);
        lower = lower.max((f - 2.0 * gap).max(0.0).sqrt());
        let upper = f.sqrt();
        if upper - lower <= tol || upper <= stop_below || it >= max_iter {
            return Ok(DistanceBound {
                upper,
                lower: lower.min(upper),
                iterations: it,
            });
        }
        let dir: Vec<f64> = s.iter().zip(&y).map(|(a, b)| a - b).collect();
        let dd: f64 = dir.iter().map(|v| v * v).sum();
        if dd == 0.0 {
            return Ok(DistanceBound { upper, lower: upper, iterations: it });
        }
        let t = (gap / dd).clamp(0.0, 1.0);
        for (yi, di) in y.iter_mut().zip(&dir) {
            *yi += t * di;
        }
        it += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn triangle_drops_interior_point() {
        let h = hull2d(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(0.25, 0.25)]).unwrap();
        assert_eq!(h.vertices(), &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(h.kind(), HullKind::Polygon);
    }

    #[test]
    fn degenerate_hulls() {
        let seg = hull2d(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(seg.kind(), HullKind::Segment);
        assert!(hull_contains(&seg, c(0.0, 0.0), 0.0));
        assert!(!hull_contains(&seg, c(2.0, 0.0), 0.5));
        assert!((seg.distance(c(2.0, 0.0)) - 1.0).abs() < 1e-15);

        let line = hull2d(&[c(1.0, 0.0), c(3.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert_eq!(line.vertices(), &[c(1.0, 0.0), c(3.0, 0.0)]);
        assert!(hull_contains(&line, c(1.4226497, 0.0), 1e-9));

        let diag = hull2d(&[c(0.0, 0.0), c(2.0, 2.0), c(1.0, 1.0), c(2.0, 2.0)]).unwrap();
        assert_eq!(diag.kind(), HullKind::Segment);

        let pt = hull2d(&[c(0.5, 0.5), c(0.5, 0.5)]).unwrap();
        assert_eq!(pt.kind(), HullKind::Point);
        assert!(hull_contains(&pt, c(0.5, 0.5), 0.0));

        assert!(matches!(hull2d(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn collinear_boundary_points_are_pruned() {
        let sq = hull2d(&[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(2.0, 2.0), c(0.0, 2.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(sq.vertices().len(), 4);
        assert!(sq.signed_distance(c(1.0, 1.0)) < 0.0);
        assert!((sq.signed_distance(c(1.0, 1.0)) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_disk_points_are_all_contained() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Complex64> = (0..100)
            .map(|_| {
                let r = rng.random::<f64>().sqrt();
                Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        let h = hull2d(&pts).unwrap();
        assert!(pts.iter().all(|&p| hull_contains(&h, p, 1e-12)));
    }

    #[test]
    fn matches_brute_force_half_plane_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(3..15);
            let pts: Vec<Complex64> = (0..n).map(|_| c(rng.random(), rng.random())).collect();
            let h = hull2d(&pts).unwrap();
            let v = h.vertices();
            for _ in 0..20 {
                let z = c(rng.random_range(-0.2..1.2), rng.random_range(-0.2..1.2));
                let brute = (0..v.len()).all(|i| cross(v[i], v[(i + 1) % v.len()], z) >= 0.0);
                assert_eq!(h.signed_distance(z) <= 0.0, brute, "{z}");
            }
        }
    }

    #[test]
    fn nd_distance_bounds() {
        let square = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]];
        let b = hull_distance_nd(&square, &[0.5, 0.5, 2.0], 1e-9, 0.0, 10_000).unwrap();
        assert!(b.lower <= 2.0 + 1e-12 && b.upper >= 2.0 - 1e-12);
        assert!(b.upper - 2.0 < 1e-6);
        let b = hull_distance_nd(&square, &[2.0, 0.5, 0.0], 1e-9, 0.0, 10_000).unwrap();
        assert!((b.upper - 1.0).abs() < 1e-6 && b.lower <= 1.0 + 1e-12);
        let b = hull_distance_nd(&square, &[0.3, 0.3, 0.0], 1e-6, 1e-3, 10_000).unwrap();
        assert!(b.upper <= 1e-3 && b.lower == 0.0);
    }
}
