//! Points, shapes, the compact domain as a geometric simplicial complex,
//! and the metric primitives built on them.

mod complex;
mod hull;
mod point;
mod shape;

pub use complex::{BaryPoint, DomainComplex, LocateIndex};
pub use hull::{dist_convex_convex, dist_point_convex};
pub use point::Point;
pub use shape::{dist_point_shape, directed_hausdorff, hausdorff, in_neighborhood, InflatedShape, Shape};
