//! Planar convex hulls, distances to hulls in `R^d`, and the grid
//! approximation of separately convex hulls in `C^M`.

mod hull;
mod sephull;

pub use hull::{hull2d, hull_contains, hull_distance_nd, DistanceBound, Hull2D, HullKind};
pub use sephull::{sep_hull_contains, sep_hull_grid, sep_hull_grid_capped, Membership, Rect, SepHullGrid, DEFAULT_ITERATION_CAP};
