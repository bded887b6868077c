//! Scalar fields on the domain with explicit Lipschitz bounds.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// Affine function `c + a·x` of the domain coordinates.
///
/// Constant functions are the special case of empty (or zero) coefficients.
/// The Lipschitz bound is the Euclidean norm of the coefficient vector.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineFn {
    pub constant: f64,
    pub coeffs: Vec<f64>,
}

impl AffineFn {
    pub fn constant(c: f64) -> Self {
        AffineFn {
            constant: c,
            coeffs: Vec::new(),
        }
    }

    pub fn new(constant: f64, coeffs: Vec<f64>) -> Self {
        AffineFn { constant, coeffs }
    }

    pub fn eval(&self, x: &Point) -> f64 {
        let mut v = self.constant;
        for (a, xi) in self.coeffs.iter().zip(x.coords.iter()) {
            v += a * xi;
        }
        v
    }

    pub fn lipschitz(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|a| *a == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_lipschitz() {
        let f = AffineFn::new(1.0, vec![3.0, 4.0]);
        let x = Point::new(vec![1.0, 1.0]);
        assert_eq!(f.eval(&x), 8.0);
        assert_eq!(f.lipschitz(), 5.0);
        assert!(AffineFn::constant(2.0).is_constant());
    }
}
