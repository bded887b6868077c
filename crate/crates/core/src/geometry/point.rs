use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of Euclidean space, ambient dimension `d` or domain dimension `m`
/// depending on context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Point { coords }
    }

    pub fn zeros(dim: usize) -> Self {
        Point {
            coords: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }

    pub fn dist(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn add(&self, other: &Point) -> Point {
        Point::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Point {
        Point::new(self.coords.iter().map(|c| c * s).collect())
    }

    /// `(1 - t)·self + t·other`.
    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point::new(
            self.coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        )
    }
}

/// Distance from a point to the segment `[a, b]`.
pub fn dist_point_segment(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b.sub(a);
    let denom = ab.dot(&ab);
    if denom == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(&ab) / denom).clamp(0.0, 1.0);
    p.dist(&a.lerp(b, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_ops() {
        let a = Point::new(vec![1.0, 2.0]);
        let b = Point::new(vec![4.0, 6.0]);
        assert_eq!(a.dist(&b), 5.0);
        assert_eq!(a.lerp(&b, 0.5).coords, vec![2.5, 4.0]);
    }

    #[test]
    fn segment_distance() {
        let a = Point::new(vec![0.0, 0.0]);
        let b = Point::new(vec![2.0, 0.0]);
        assert_eq!(dist_point_segment(&Point::new(vec![1.0, 1.0]), &a, &b), 1.0);
        assert_eq!(dist_point_segment(&Point::new(vec![3.0, 0.0]), &a, &b), 1.0);
    }
}
