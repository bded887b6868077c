//! Set-valued mapping providers with explicit continuity moduli, and the
//! straight-line contraction witness used throughout the pipeline.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{hausdorff, InflatedShape, Point, Shape};
use crate::scalar::AffineFn;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    Translating,
    Scaling,
    RotatingStar,
    Custom,
}

/// A Hausdorff-continuous mapping `φ: X ⇒ R^d` given by an evaluator and a
/// modulus `ω` with `H(φ(p), φ(q)) ≤ ω(|p − q|)`, `ω(0) = 0`, nondecreasing.
#[derive(Clone)]
pub struct SetValuedMap {
    kind: MapKind,
    eval: Arc<dyn Fn(&Point) -> Shape + Send + Sync>,
    modulus: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for SetValuedMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SetValuedMap").field("kind", &self.kind).finish()
    }
}

/// Largest center-to-farthest-point distance of `s` seen from `about`; the
/// maximum sits on the vertices (the distance is convex) or closes in radius.
fn circumradius_about(s: &Shape, about: &Point) -> f64 {
    match s {
        Shape::Ball { center, radius } => about.dist(center) + radius,
        _ => s
            .vertices()
            .unwrap()
            .iter()
            .map(|v| about.dist(v))
            .fold(0.0, f64::max),
    }
}

impl SetValuedMap {
    /// `φ(x) = base + Σ_k x_k · columns[k]`; modulus `ω(t) = L·t` with the
    /// Frobenius bound `L = sqrt(Σ |columns[k]|²)`.
    pub fn translating(base: Shape, columns: Vec<Point>) -> SetValuedMap {
        let l: f64 = columns.iter().map(|c| c.dot(c)).sum::<f64>().sqrt();
        let eval = move |x: &Point| {
            let mut off = Point::zeros(base.dim());
            for (xk, col) in x.coords.iter().zip(&columns) {
                off = off.add(&col.scale(*xk));
            }
            base.translate(&off)
        };
        SetValuedMap {
            kind: MapKind::Translating,
            eval: Arc::new(eval),
            modulus: Arc::new(move |t| l * t),
        }
    }

    /// `φ(x) = scale(x) · base` about `about`; modulus uses the circumradius
    /// of the base shape about the scaling center.
    pub fn scaling(base: Shape, scale: AffineFn, about: Point) -> SetValuedMap {
        let r = circumradius_about(&base, &about);
        let l = scale.lipschitz() * r;
        let eval = move |x: &Point| {
            let s = scale.eval(x);
            assert!(s > 0.0, "scale factor must stay positive on the domain");
            base.scale_about(s, &about)
        };
        SetValuedMap {
            kind: MapKind::Scaling,
            eval: Arc::new(eval),
            modulus: Arc::new(move |t| l * t),
        }
    }

    /// `φ(x) =` rotation of `base` by `angle(x)` about `about` (ambient R²).
    pub fn rotating_star(base: Shape, angle: AffineFn, about: Point) -> SetValuedMap {
        let r = circumradius_about(&base, &about);
        // |Rot_θ y − Rot_η y| = 2 sin(|θ−η|/2)·|y − about| ≤ |θ−η|·R.
        let l = angle.lipschitz() * r;
        let eval = move |x: &Point| base.rotate_about(angle.eval(x), &about);
        SetValuedMap {
            kind: MapKind::RotatingStar,
            eval: Arc::new(eval),
            modulus: Arc::new(move |t| l * t),
        }
    }

    pub fn constant(base: Shape) -> SetValuedMap {
        SetValuedMap {
            kind: MapKind::Custom,
            eval: Arc::new(move |_| base.clone()),
            modulus: Arc::new(|_| 0.0),
        }
    }

    pub fn custom(
        eval: Arc<dyn Fn(&Point) -> Shape + Send + Sync>,
        modulus: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    ) -> SetValuedMap {
        SetValuedMap {
            kind: MapKind::Custom,
            eval,
            modulus,
        }
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn eval(&self, x: &Point) -> Shape {
        (self.eval)(x)
    }

    pub fn modulus(&self, t: f64) -> f64 {
        (self.modulus)(t)
    }

    /// Largest `r ≤ cap` with `ω(r) < bound`, by bisection on the
    /// nondecreasing modulus; a small safety factor keeps the inequality
    /// strict.
    pub fn radius_for(&self, bound: f64, cap: f64) -> Result<f64> {
        assert!(bound > 0.0 && cap > 0.0);
        if self.modulus(cap) < bound {
            return Ok(cap);
        }
        let (mut lo, mut hi) = (0.0f64, cap);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.modulus(mid) < bound {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = lo * 0.999;
        if r < 1e-15 || self.modulus(r) >= bound {
            return Err(Error::RadiusUnderflow(r));
        }
        Ok(r)
    }
}

/// Slack report of a sampled Hausdorff-continuity check.
#[derive(Clone, Debug)]
pub struct ContinuityReport {
    /// max over pairs of `H(φ(p), φ(q)) − ω(|p − q|)`.
    pub max_slack: f64,
    pub flagged: bool,
}

/// Checks `H(φ(p), φ(q)) ≤ ω(|p − q|)` on the given pairs.
pub fn check_continuity(phi: &SetValuedMap, pairs: &[(Point, Point)]) -> ContinuityReport {
    let mut max_slack = f64::NEG_INFINITY;
    for (p, q) in pairs {
        let h = hausdorff(&phi.eval(p), &phi.eval(q));
        max_slack = max_slack.max(h - phi.modulus(p.dist(q)));
    }
    ContinuityReport {
        max_slack,
        flagged: max_slack > 1e-9,
    }
}

/// Straight-line contraction of `O_δ(base)` into the star center.
#[derive(Clone, Debug)]
pub struct Contraction {
    pub source: InflatedShape,
    pub target_point: Point,
}

impl Contraction {
    /// `(1 − t)·y + t·target`; the endpoints are returned exactly so that
    /// face-consistency identities hold bitwise.
    pub fn apply(&self, y: &Point, t: f64) -> Point {
        debug_assert!((0.0..=1.0).contains(&t));
        if t == 0.0 {
            y.clone()
        } else if t == 1.0 {
            self.target_point.clone()
        } else {
            y.lerp(&self.target_point, t)
        }
    }
}

/// Uniform witness that inflated values contract inside slightly larger
/// inflations: `δ(ε) = ε/2`, contraction along straight lines to the star
/// center.  Valid because the inflation of a star-shaped set is star-shaped
/// about the same center.
#[derive(Clone, Copy, Debug)]
pub struct UvWitness;

impl UvWitness {
    pub fn delta_of(&self, eps: f64) -> f64 {
        assert!(eps > 0.0);
        eps / 2.0
    }

    pub fn contraction_for(&self, base: Shape, delta: f64, eps: f64) -> Result<Contraction> {
        if !(0.0 < delta && delta <= eps) {
            return Err(Error::InvalidArgument(format!(
                "contraction needs 0 < delta ≤ eps, got {delta} and {eps}"
            )));
        }
        let target_point = base.star_center().clone();
        Ok(Contraction {
            source: InflatedShape::new(base, delta),
            target_point,
        })
    }
}

/// The witness for a mapping whose values are all star-shaped about their
/// stored centers, which the `Shape` constructors already guarantee.
pub fn straight_line_witness(_phi: &SetValuedMap) -> UvWitness {
    UvWitness
}
