//! Exact (to floating point) distances to convex hulls of finite point sets.
//!
//! The workhorse is a GJK-style iteration whose inner step projects onto the
//! current support simplex by enumerating its faces.  Ambient dimension is
//! small (at most 3 in practice), so the face enumeration is cheap.

use super::point::Point;

const TOL: f64 = 1e-13;
const MAX_ITER: usize = 200;

/// Solves the k×k system `m · x = b` in place by Gaussian elimination with
/// partial pivoting.  Returns `None` for a (numerically) singular matrix.
pub(crate) fn solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..k {
            let f = m[row][col] / m[col][col];
            for c in col..k {
                m[row][c] -= f * m[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let mut v = b[row];
        for c in row + 1..k {
            v -= m[row][c] * x[c];
        }
        x[row] = v / m[row][row];
    }
    Some(x)
}

/// Projects `p` onto the affine hull of `pts`, returning barycentric
/// coordinates if the corresponding Gram system is solvable.
pub(crate) fn affine_project(p: &Point, pts: &[&Point]) -> Option<Vec<f64>> {
    let k = pts.len();
    if k == 1 {
        return Some(vec![1.0]);
    }
    // Coordinates relative to pts[0]: minimize |p0 + E·t − p|² over t ∈ R^{k−1}.
    let base = pts[0];
    let edges: Vec<Point> = pts[1..].iter().map(|q| q.sub(base)).collect();
    let rhs_vec = p.sub(base);
    let mut gram = vec![vec![0.0; k - 1]; k - 1];
    let mut rhs = vec![0.0; k - 1];
    for i in 0..k - 1 {
        for j in 0..k - 1 {
            gram[i][j] = edges[i].dot(&edges[j]);
        }
        rhs[i] = edges[i].dot(&rhs_vec);
    }
    let t = solve(gram, rhs)?;
    let mut bary = vec![1.0 - t.iter().sum::<f64>()];
    bary.extend(t);
    Some(bary)
}

/// Closest point of the simplex spanned by `pts` to `p`, together with the
/// indices of the minimal face containing it.
fn project_to_simplex(p: &Point, pts: &[Point]) -> (Point, Vec<usize>) {
    let n = pts.len();
    let mut best: Option<(f64, Point, Vec<usize>)> = None;
    // Every candidate minimizer lies on some face; enumerate them all.
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let face: Vec<&Point> = idx.iter().map(|&i| &pts[i]).collect();
        let Some(bary) = affine_project(p, &face) else {
            continue;
        };
        if bary.iter().any(|&b| b < -TOL) {
            continue;
        }
        let mut q = Point::zeros(p.dim());
        for (b, v) in bary.iter().zip(&face) {
            for (qc, vc) in q.coords.iter_mut().zip(&v.coords) {
                *qc += b * vc;
            }
        }
        let d = p.dist(&q);
        let better = match &best {
            None => true,
            Some((bd, _, bi)) => d < bd - TOL || (d < bd + TOL && idx.len() < bi.len()),
        };
        if better {
            best = Some((d, q, idx));
        }
    }
    let (_, q, idx) = best.expect("nonempty simplex");
    (q, idx)
}

/// Distance from `p` to the convex hull of `verts`.
pub fn dist_point_convex(p: &Point, verts: &[Point]) -> f64 {
    assert!(!verts.is_empty());
    let support = |d: &Point| -> usize {
        (0..verts.len())
            .max_by(|&i, &j| verts[i].dot(d).total_cmp(&verts[j].dot(d)))
            .unwrap()
    };
    let mut simplex = vec![verts[support(&p.sub(&verts[0]))].clone()];
    let mut last = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let (w, face) = project_to_simplex(p, &simplex);
        simplex = face.into_iter().map(|i| simplex[i].clone()).collect();
        let d = p.dist(&w);
        if d < TOL {
            return 0.0;
        }
        let dir = p.sub(&w);
        let v = &verts[support(&dir)];
        // No further progress toward p in the support direction: done.
        if v.dot(&dir) - w.dot(&dir) <= TOL * (1.0 + d) || d >= last - TOL {
            return d;
        }
        last = d;
        if !simplex.iter().any(|s| s == v) {
            simplex.push(v.clone());
        } else {
            return d;
        }
    }
    last
}

/// Distance between the convex hulls of `a` and `b`.
///
/// The hull of the pairwise differences is the Minkowski difference of the
/// hulls, so this reduces to a point query at the origin.
pub fn dist_convex_convex(a: &[Point], b: &[Point]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let diffs: Vec<Point> = a
        .iter()
        .flat_map(|p| b.iter().map(move |q| p.sub(q)))
        .collect();
    dist_point_convex(&Point::zeros(a[0].dim()), &diffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point::dist_point_segment;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec())
    }

    /// Independent 2D oracle: monotone-chain hull, then inside test plus
    /// minimum distance over hull edges.
    fn oracle_2d(p: &Point, verts: &[Point]) -> f64 {
        let mut pts: Vec<(f64, f64)> = verts.iter().map(|v| (v.coords[0], v.coords[1])).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
            (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
        };
        let mut lower: Vec<(f64, f64)> = Vec::new();
        for &q in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0
            {
                lower.pop();
            }
            lower.push(q);
        }
        let mut upper: Vec<(f64, f64)> = Vec::new();
        for &q in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0
            {
                upper.pop();
            }
            upper.push(q);
        }
        lower.pop();
        upper.pop();
        let mut hull = lower;
        hull.extend(upper);
        if hull.len() == 1 {
            return p.dist(&pt(&[hull[0].0, hull[0].1]));
        }
        let n = hull.len();
        let inside = n >= 3
            && (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], (p.coords[0], p.coords[1])) >= 0.0);
        if inside {
            return 0.0;
        }
        (0..n)
            .map(|i| {
                dist_point_segment(
                    p,
                    &pt(&[hull[i].0, hull[i].1]),
                    &pt(&[hull[(i + 1) % n].0, hull[(i + 1) % n].1]),
                )
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn point_to_square() {
        let sq = [
            pt(&[0.0, 0.0]),
            pt(&[1.0, 0.0]),
            pt(&[1.0, 1.0]),
            pt(&[0.0, 1.0]),
        ];
        assert_eq!(dist_point_convex(&pt(&[0.5, 0.5]), &sq), 0.0);
        assert!((dist_point_convex(&pt(&[2.0, 0.5]), &sq) - 1.0).abs() < 1e-12);
        assert!((dist_point_convex(&pt(&[2.0, 2.0]), &sq) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn matches_2d_oracle_on_random_clouds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(3..20);
            let verts: Vec<Point> = (0..n)
                .map(|_| pt(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]))
                .collect();
            let p = pt(&[rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]);
            let got = dist_point_convex(&p, &verts);
            let want = oracle_2d(&p, &verts);
            assert!(
                (got - want).abs() < 1e-9,
                "got {got}, oracle {want}, p {:?}, verts {:?}",
                p,
                verts
            );
        }
    }

    #[test]
    fn matches_3d_subset_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(2..9);
            let verts: Vec<Point> = (0..n)
                .map(|_| {
                    pt(&[
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    ])
                })
                .collect();
            let p = pt(&[
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ]);
            // Exhaustive oracle: closest point of every vertex subset's simplex.
            let mut want = f64::INFINITY;
            for mask in 1u32..(1 << n) {
                let face: Vec<Point> = (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| verts[i].clone())
                    .collect();
                if face.len() > 4 {
                    continue;
                }
                let (q, _) = project_to_simplex(&p, &face);
                want = want.min(p.dist(&q));
            }
            let got = dist_point_convex(&p, &verts);
            assert!((got - want).abs() < 1e-9, "got {got}, oracle {want}");
        }
    }

    #[test]
    fn hull_to_hull() {
        let a = [pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[0.0, 1.0])];
        let b = [pt(&[3.0, 0.0]), pt(&[4.0, 0.0]), pt(&[3.0, 1.0])];
        assert!((dist_convex_convex(&a, &b) - 2.0).abs() < 1e-12);
        let c = [pt(&[0.5, 0.5]), pt(&[2.0, 2.0])];
        assert_eq!(dist_convex_convex(&a, &c), 0.0);
    }
}
