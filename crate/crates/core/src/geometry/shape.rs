//! Compact value shapes of the set-valued mapping and the metric operations
//! on them: point distance, directed and symmetric Hausdorff distance, and
//! open-neighborhood membership.

use serde::{Deserialize, Serialize};

use super::hull::dist_point_convex;
use super::point::{dist_point_segment, Point};
use crate::error::{Error, Result};

/// A nonempty compact subset of R^d, star-shaped about `star_center()`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Shape {
    Ball {
        center: Point,
        radius: f64,
    },
    /// Convex hull of the listed vertices; `star_center` defaults to the
    /// vertex centroid.
    ConvexPolytope {
        vertices: Vec<Point>,
        star_center: Point,
    },
    /// Simple polygon in R², every vertex visible from `star_center`.
    StarPolygon {
        vertices: Vec<Point>,
        star_center: Point,
    },
}

fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.coords[0] - a.coords[0]) * (c.coords[1] - a.coords[1])
        - (b.coords[1] - a.coords[1]) * (c.coords[0] - a.coords[0])
}

/// Proper crossing of open segments (a,b) and (c,d).
fn segments_cross(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Crossing-number point-in-polygon test; boundary points may resolve either
/// way, which the callers tolerate (they combine it with edge distances).
fn inside_polygon(p: &Point, verts: &[Point]) -> bool {
    let (px, py) = (p.coords[0], p.coords[1]);
    let mut inside = false;
    let n = verts.len();
    for i in 0..n {
        let (x1, y1) = (verts[i].coords[0], verts[i].coords[1]);
        let (x2, y2) = (verts[(i + 1) % n].coords[0], verts[(i + 1) % n].coords[1]);
        if (y1 > py) != (y2 > py) {
            let xc = x1 + (py - y1) / (y2 - y1) * (x2 - x1);
            if px < xc {
                inside = !inside;
            }
        }
    }
    inside
}

impl Shape {
    pub fn ball(center: Point, radius: f64) -> Result<Shape> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidShape(format!("ball radius {radius}")));
        }
        Ok(Shape::Ball { center, radius })
    }

    pub fn convex_polytope(vertices: Vec<Point>) -> Result<Shape> {
        if vertices.is_empty() {
            return Err(Error::InvalidShape("polytope with no vertices".into()));
        }
        let d = vertices[0].dim();
        if vertices.iter().any(|v| v.dim() != d) {
            return Err(Error::InvalidShape("mixed vertex dimensions".into()));
        }
        let mut c = Point::zeros(d);
        for v in &vertices {
            c = c.add(v);
        }
        let star_center = c.scale(1.0 / vertices.len() as f64);
        Ok(Shape::ConvexPolytope {
            vertices,
            star_center,
        })
    }

    pub fn star_polygon(vertices: Vec<Point>, star_center: Point) -> Result<Shape> {
        if vertices.len() < 3 {
            return Err(Error::InvalidShape("polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().any(|v| v.dim() != 2) || star_center.dim() != 2 {
            return Err(Error::InvalidShape("star polygon must live in R^2".into()));
        }
        let n = vertices.len();
        // Simplicity: no two non-adjacent edges cross.
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_cross(
                    &vertices[i],
                    &vertices[(i + 1) % n],
                    &vertices[j],
                    &vertices[(j + 1) % n],
                ) {
                    return Err(Error::InvalidShape(format!(
                        "edges {i} and {j} cross"
                    )));
                }
            }
        }
        if !inside_polygon(&star_center, &vertices) {
            return Err(Error::InvalidShape("star center outside polygon".into()));
        }
        // Visibility: the segment from the center to each vertex crosses no
        // edge properly.
        for (vi, v) in vertices.iter().enumerate() {
            for j in 0..n {
                if j == vi || (j + 1) % n == vi {
                    continue;
                }
                if segments_cross(&star_center, v, &vertices[j], &vertices[(j + 1) % n]) {
                    return Err(Error::NotStarShaped { vertex: vi });
                }
            }
        }
        Ok(Shape::StarPolygon {
            vertices,
            star_center,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Shape::Ball { center, .. } => center.dim(),
            Shape::ConvexPolytope { vertices, .. } => vertices[0].dim(),
            Shape::StarPolygon { .. } => 2,
        }
    }

    pub fn star_center(&self) -> &Point {
        match self {
            Shape::Ball { center, .. } => center,
            Shape::ConvexPolytope { star_center, .. } => star_center,
            Shape::StarPolygon { star_center, .. } => star_center,
        }
    }

    pub fn vertices(&self) -> Option<&[Point]> {
        match self {
            Shape::Ball { .. } => None,
            Shape::ConvexPolytope { vertices, .. } => Some(vertices),
            Shape::StarPolygon { vertices, .. } => Some(vertices),
        }
    }

    /// An axis-aligned box `(low, high)` containing the shape.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Shape::Ball { center, radius } => (
                Point::new(center.coords.iter().map(|c| c - radius).collect()),
                Point::new(center.coords.iter().map(|c| c + radius).collect()),
            ),
            _ => {
                let verts = self.vertices().unwrap();
                let d = self.dim();
                let mut lo = verts[0].clone();
                let mut hi = verts[0].clone();
                for v in verts {
                    for k in 0..d {
                        lo.coords[k] = lo.coords[k].min(v.coords[k]);
                        hi.coords[k] = hi.coords[k].max(v.coords[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn translate(&self, offset: &Point) -> Shape {
        let mv = |p: &Point| p.add(offset);
        self.transformed(&mv)
    }

    pub fn scale_about(&self, factor: f64, about: &Point) -> Shape {
        let mv = |p: &Point| about.add(&p.sub(about).scale(factor));
        match self {
            Shape::Ball { center, radius } => Shape::Ball {
                center: mv(center),
                radius: radius * factor,
            },
            _ => self.transformed(&mv),
        }
    }

    /// Rotation in R² by `angle` radians about `about`.
    pub fn rotate_about(&self, angle: f64, about: &Point) -> Shape {
        let (s, c) = angle.sin_cos();
        let mv = |p: &Point| {
            let x = p.coords[0] - about.coords[0];
            let y = p.coords[1] - about.coords[1];
            Point::new(vec![
                about.coords[0] + c * x - s * y,
                about.coords[1] + s * x + c * y,
            ])
        };
        self.transformed(&mv)
    }

    fn transformed(&self, mv: &dyn Fn(&Point) -> Point) -> Shape {
        match self {
            Shape::Ball { center, radius } => Shape::Ball {
                center: mv(center),
                radius: *radius,
            },
            Shape::ConvexPolytope {
                vertices,
                star_center,
            } => Shape::ConvexPolytope {
                vertices: vertices.iter().map(|v| mv(v)).collect(),
                star_center: mv(star_center),
            },
            Shape::StarPolygon {
                vertices,
                star_center,
            } => Shape::StarPolygon {
                vertices: vertices.iter().map(|v| mv(v)).collect(),
                star_center: mv(star_center),
            },
        }
    }

    pub fn dist_point(&self, p: &Point) -> f64 {
        debug_assert_eq!(p.dim(), self.dim());
        match self {
            Shape::Ball { center, radius } => (p.dist(center) - radius).max(0.0),
            Shape::ConvexPolytope { vertices, .. } => dist_point_convex(p, vertices),
            Shape::StarPolygon { vertices, .. } => {
                if inside_polygon(p, vertices) {
                    return 0.0;
                }
                let n = vertices.len();
                (0..n)
                    .map(|i| dist_point_segment(p, &vertices[i], &vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        self.dist_point(p) == 0.0
    }
}

/// Distance from `p` to the compact set `s`.
pub fn dist_point_shape(p: &Point, s: &Shape) -> f64 {
    s.dist_point(p)
}

/// `true` iff `p` lies in the open `eps`-neighborhood of `s`.
pub fn in_neighborhood(p: &Point, s: &Shape, eps: f64) -> bool {
    assert!(eps > 0.0);
    s.dist_point(p) < eps
}

fn is_convex_target(t: &Shape) -> bool {
    matches!(t, Shape::Ball { .. } | Shape::ConvexPolytope { .. })
}

/// `sup_{y in s} dist(y, t)`.
///
/// Every target variant is star-shaped about its center, which confines the
/// supremum to the boundary of `s`: if an interior `y` had a ball `B(y, d)`
/// missing `t`, the cone shadow of that ball seen from the star center would
/// also miss `t` (any point of `t` in the shadow would pull its segment to
/// the center through the ball), and the last point of `s` on the ray
/// through `y` sits on the cone axis where the inscribed radius has only
/// grown.  So:
///
/// * convex `t`: `dist(·, t)` is convex, so the sup over a polytope or
///   polygon source sits on its vertices, and the ball cases close in
///   radius — exact;
/// * star-polygon `t` (or a ball source inside a polytope): certified
///   Lipschitz branch-and-bound along the source boundary, within `1e-9` of
///   the supremum.
pub fn directed_hausdorff(s: &Shape, t: &Shape) -> f64 {
    assert_eq!(s.dim(), t.dim(), "ambient dimension mismatch");
    if is_convex_target(t) {
        match s {
            Shape::Ball { center, radius } => match t {
                Shape::Ball {
                    center: c2,
                    radius: r2,
                } => (center.dist(c2) + radius - r2).max(0.0),
                _ => {
                    let d = t.dist_point(center);
                    if d > 0.0 {
                        // Supporting hyperplane at the nearest point makes
                        // the outward radial push exact.
                        d + radius
                    } else {
                        boundary_sup(s, t, 1e-9)
                    }
                }
            },
            _ => s
                .vertices()
                .unwrap()
                .iter()
                .map(|v| t.dist_point(v))
                .fold(0.0, f64::max),
        }
    } else {
        boundary_sup(s, t, 1e-9)
    }
}

pub fn hausdorff(s: &Shape, t: &Shape) -> f64 {
    directed_hausdorff(s, t).max(directed_hausdorff(t, s))
}

/// Feature segments of `t` with `dist(y, t) ≤ min_j dist(y, feature_j)`
/// everywhere, with equality outside `t`: boundary edges for a star polygon,
/// all vertex-pair chords for a convex polytope (chords lie inside, so they
/// only lower the min, and the hull edges among them give equality).
fn feature_segments(t: &Shape) -> Vec<(Point, Point)> {
    let verts = t.vertices().expect("polygonal target");
    let n = verts.len();
    match t {
        Shape::StarPolygon { .. } => (0..n)
            .map(|i| (verts[i].clone(), verts[(i + 1) % n].clone()))
            .collect(),
        _ => {
            if n == 1 {
                return vec![(verts[0].clone(), verts[0].clone())];
            }
            (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (verts[i].clone(), verts[j].clone())))
                .collect()
        }
    }
}

/// Max of `dist(·, t)` along the segment `[a, b]`, refining `best` in place.
///
/// Each feature distance `f_j` is convex along the segment, so
/// `min_j max(f_j(a), f_j(b))` bounds the sup over the whole piece; this
/// prunes coincident and near-coincident edges at the top level, where a
/// plain Lipschitz bound would subdivide to the tolerance.  An interval
/// whose midpoint sits inside `t` deeper than the interval half-length is
/// entirely inside and contributes nothing.
fn segment_sup(
    a: &Point,
    b: &Point,
    fa: &[f64],
    fb: &[f64],
    t: &Shape,
    feats: &[(Point, Point)],
    tol: f64,
    best: &mut f64,
) {
    let ub = fa
        .iter()
        .zip(fb)
        .map(|(x, y)| x.max(*y))
        .fold(f64::INFINITY, f64::min);
    if ub <= *best + tol {
        return;
    }
    if a.dist(b) < 1e-14 {
        *best = best.max(t.dist_point(a)).max(t.dist_point(b));
        return;
    }
    let m = a.lerp(b, 0.5);
    let fm: Vec<f64> = feats
        .iter()
        .map(|(p, q)| dist_point_segment(&m, p, q))
        .collect();
    let depth = fm.iter().fold(f64::INFINITY, |x, &y| x.min(y));
    let dm = t.dist_point(&m);
    *best = best.max(dm);
    if dm == 0.0 && depth >= a.dist(b) / 2.0 {
        return;
    }
    segment_sup(a, &m, fa, &fm, t, feats, tol, best);
    segment_sup(&m, b, &fm, fb, t, feats, tol, best);
}

/// Sup of `dist(·, t)` over the boundary of `s` (sound for star-shaped `t`,
/// see [`directed_hausdorff`]); returns a value within `tol` of the sup.
fn boundary_sup(s: &Shape, t: &Shape, tol: f64) -> f64 {
    let feats = feature_segments(t);
    let mut best: f64 = 0.0;
    match s {
        Shape::Ball { center, radius } => {
            assert_eq!(s.dim(), 2, "ball boundary search implemented in R^2");
            // Chord approximation of the circle from outside-tangent
            // polygons: circumscribe with n sides, whose boundary is within
            // r·(sec(π/n) − 1) of the circle; dist is 1-Lipschitz, so the
            // polygon sup bounds the circle sup to that error.
            let mut n = 64usize;
            loop {
                let slack = radius * (1.0 / (std::f64::consts::PI / n as f64).cos() - 1.0);
                if slack <= tol / 2.0 || n > 1 << 20 {
                    let rc = radius / (std::f64::consts::PI / n as f64).cos();
                    let ring: Vec<Point> = (0..n)
                        .map(|i| {
                            let th = std::f64::consts::TAU * i as f64 / n as f64;
                            Point::new(vec![
                                center.coords[0] + rc * th.cos(),
                                center.coords[1] + rc * th.sin(),
                            ])
                        })
                        .collect();
                    for i in 0..n {
                        let (p, q) = (&ring[i], &ring[(i + 1) % n]);
                        let fp: Vec<f64> =
                            feats.iter().map(|(x, y)| dist_point_segment(p, x, y)).collect();
                        let fq: Vec<f64> =
                            feats.iter().map(|(x, y)| dist_point_segment(q, x, y)).collect();
                        best = best.max(t.dist_point(p)).max(t.dist_point(q));
                        segment_sup(p, q, &fp, &fq, t, &feats, tol / 2.0, &mut best);
                    }
                    // The circumscribed polygon contains the disk, so its
                    // sup is an overestimate by at most `slack`.
                    return (best - slack).max(t.dist_point(center));
                }
                n *= 2;
            }
        }
        _ => {
            let verts = s.vertices().unwrap();
            let n = verts.len();
            for v in verts {
                best = best.max(t.dist_point(v));
            }
            // Star polygons store their boundary in order; polytope vertices
            // carry no order, so scan every vertex-pair segment (a superset
            // of the hull edges, and still inside s).
            let pairs: Vec<(usize, usize)> = match s {
                Shape::StarPolygon { .. } => (0..n).map(|i| (i, (i + 1) % n)).collect(),
                _ => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
            };
            for (i, j) in pairs {
                let (a, b) = (&verts[i], &verts[j]);
                let fa: Vec<f64> = feats
                    .iter()
                    .map(|(p, q)| dist_point_segment(a, p, q))
                    .collect();
                let fb: Vec<f64> = feats
                    .iter()
                    .map(|(p, q)| dist_point_segment(b, p, q))
                    .collect();
                segment_sup(a, b, &fa, &fb, t, &feats, tol, &mut best);
            }
            best
        }
    }
}

/// The closed `radius`-inflation of a base shape; the cover-tower sets
/// `O_δ(φ(π U))` are carried in this form so inclusion between them reduces
/// to one directed Hausdorff distance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InflatedShape {
    pub base: Shape,
    pub radius: f64,
}

impl InflatedShape {
    pub fn new(base: Shape, radius: f64) -> Self {
        assert!(radius >= 0.0);
        InflatedShape { base, radius }
    }

    pub fn dist_point(&self, p: &Point) -> f64 {
        (self.base.dist_point(p) - self.radius).max(0.0)
    }

    /// Membership in the open inflation.
    pub fn contains_open(&self, p: &Point) -> bool {
        self.base.dist_point(p) < self.radius
    }

    /// `other ⊆ self`, certified through
    /// `dh(base(other), base(self)) + radius(other) ≤ radius(self) + slack`.
    pub fn includes(&self, other: &InflatedShape, slack: f64) -> bool {
        directed_hausdorff(&other.base, &self.base) + other.radius <= self.radius + slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec())
    }

    fn unit_disk() -> Shape {
        Shape::ball(pt(&[0.0, 0.0]), 1.0).unwrap()
    }

    /// 5-pointed star, center origin, given outer radius.
    fn five_star(outer: f64) -> Shape {
        let inner = outer * 0.4;
        let verts = (0..10)
            .map(|i| {
                let r = if i % 2 == 0 { outer } else { inner };
                let a = std::f64::consts::PI / 2.0 + i as f64 * std::f64::consts::PI / 5.0;
                pt(&[r * a.cos(), r * a.sin()])
            })
            .collect();
        Shape::star_polygon(verts, pt(&[0.0, 0.0])).unwrap()
    }

    #[test]
    fn point_distance_disk() {
        assert_eq!(unit_disk().dist_point(&pt(&[0.3, 0.2])), 0.0);
        assert_eq!(unit_disk().dist_point(&pt(&[2.0, 0.0])), 1.0);
    }

    #[test]
    fn star_polygon_distance_matches_dense_boundary_oracle() {
        let s = five_star(1.0);
        let verts = s.vertices().unwrap().to_vec();
        let oracle = |p: &Point| {
            // 10^5 boundary samples; quadratic error in the sample spacing
            // near a nondegenerate minimum keeps this below 1e-9.
            let n = verts.len();
            let mut best = f64::INFINITY;
            for i in 0..n {
                let (a, b) = (&verts[i], &verts[(i + 1) % n]);
                for k in 0..=10_000 {
                    best = best.min(p.dist(&a.lerp(b, k as f64 / 10_000.0)));
                }
            }
            best
        };
        let p = pt(&[3.0, 4.0]);
        assert!((s.dist_point(&p) - oracle(&p)).abs() < 1e-9);
        for q in [pt(&[1.5, 0.0]), pt(&[0.0, -2.0]), pt(&[-1.2, 1.7])] {
            assert!((s.dist_point(&q) - oracle(&q)).abs() < 1e-9);
        }
    }

    #[test]
    fn star_polygon_rejects_bad_centers() {
        let s = five_star(1.0);
        let verts = s.vertices().unwrap().to_vec();
        // A center inside an outer spike cannot see the opposite spikes.
        let err = Shape::star_polygon(verts, pt(&[0.0, 0.9])).unwrap_err();
        assert!(matches!(err, Error::NotStarShaped { .. }));
    }

    #[test]
    fn directed_hausdorff_balls() {
        let a = unit_disk();
        let b = Shape::ball(pt(&[0.0, 0.0]), 2.0).unwrap();
        assert_eq!(directed_hausdorff(&a, &b), 0.0);
        assert_eq!(directed_hausdorff(&b, &a), 1.0);
        assert_eq!(hausdorff(&a, &b), 1.0);
        assert_eq!(hausdorff(&a, &a), 0.0);
    }

    #[test]
    fn directed_hausdorff_ball_inside_polytope() {
        // Ball centered inside the target: exercises the branch-and-bound.
        let t = Shape::convex_polytope(vec![
            pt(&[-3.0, -1.0]),
            pt(&[3.0, -1.0]),
            pt(&[3.0, 1.0]),
            pt(&[-3.0, 1.0]),
        ])
        .unwrap();
        let s = Shape::ball(pt(&[0.0, 0.0]), 2.0).unwrap();
        // Farthest excursion is straight up or down: 2 - 1 = 1.
        let d = directed_hausdorff(&s, &t);
        assert!((d - 1.0).abs() < 1e-8, "{d}");
    }

    #[test]
    fn directed_hausdorff_star_targets() {
        let s = five_star(1.1);
        let t = five_star(1.0);
        // Scaling about the shared center: every boundary point moves by at
        // most 0.1·|y|, attained at the outer spikes.
        let d = directed_hausdorff(&s, &t);
        assert!(d <= 0.1 + 1e-9 && d > 0.05, "{d}");
        assert_eq!(directed_hausdorff(&t, &t), 0.0);
    }

    #[test]
    fn hausdorff_triangle_inequality_on_random_triples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..60 {
            let poly = |rng: &mut rand_chacha::ChaCha8Rng| {
                let n = rng.random_range(3..8);
                Shape::convex_polytope(
                    (0..n)
                        .map(|_| pt(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]))
                        .collect(),
                )
                .unwrap()
            };
            let (a, b, c) = (poly(&mut rng), poly(&mut rng), poly(&mut rng));
            let (ab, bc, ac) = (hausdorff(&a, &b), hausdorff(&b, &c), hausdorff(&a, &c));
            assert!(ac <= ab + bc + 1e-9);
            assert!((hausdorff(&a, &b) - hausdorff(&b, &a)).abs() == 0.0);
        }
    }

    #[test]
    fn neighborhood_strictness() {
        let s = unit_disk();
        assert!(in_neighborhood(&pt(&[0.5, 0.0]), &s, 0.1));
        assert!(!in_neighborhood(&pt(&[1.5, 0.0]), &s, 0.5));
        assert!(in_neighborhood(&pt(&[1.5, 0.0]), &s, 0.6));
    }

    #[test]
    fn inflated_inclusion() {
        let s = InflatedShape::new(unit_disk(), 0.1);
        let t = InflatedShape::new(Shape::ball(pt(&[0.2, 0.0]), 1.0).unwrap(), 0.4);
        // dh(disk, shifted disk) = 0.2 and 0.1 + 0.2 ≤ 0.4.
        assert!(t.includes(&s, 1e-12));
        assert!(!s.includes(&t, 1e-12));
    }

    #[test]
    fn directed_hausdorff_convex_matches_boundary_sampling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let poly = |rng: &mut rand_chacha::ChaCha8Rng| {
                let n = rng.random_range(3..7);
                Shape::convex_polytope(
                    (0..n)
                        .map(|_| pt(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]))
                        .collect(),
                )
                .unwrap()
            };
            let (s, t) = (poly(&mut rng), poly(&mut rng));
            // Sup over segments between consecutive stored vertices is an
            // upper bound on the sup over the hull (convexity of dist), so
            // sampling all vertex-pair segments covers the boundary.
            let verts = s.vertices().unwrap();
            let mut want: f64 = 0.0;
            for a in verts {
                for b in verts {
                    for k in 0..=200 {
                        want = want.max(t.dist_point(&a.lerp(b, k as f64 / 200.0)));
                    }
                }
            }
            let got = directed_hausdorff(&s, &t);
            assert!((got - want).abs() < 1e-6, "got {got}, oracle {want}");
        }
    }
}
