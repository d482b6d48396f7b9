//! Hulls, hull volumes and halfspace intersections in low dimension.

pub mod halfspace;
pub mod hull;

pub use halfspace::{enumerate_vertices, polytope_volume};
pub use hull::{hull_volume, polygon_area, polygon_hull, polygon_perimeter, Halfspace, Hull};
