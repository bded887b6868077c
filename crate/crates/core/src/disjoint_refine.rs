//! Pairwise-disjoint open refinement families, one per dimension, obtained
//! by barycentric-star coloring of a fine subdivision of the domain.
//!
//! The domain is subdivided to a complex `K_s`, then barycentrically
//! subdivided once to `K_b`.  Family `n` consists of the open stars in
//! `K_b` of the barycenters of the `n`-dimensional faces of `K_s`.  Stars
//! of two distinct `n`-faces are disjoint: a `K_b` simplex is a chain of
//! faces of `K_s`, which contains at most one face per dimension.
//! Subdivision continues until every closed star fits strictly inside some
//! element of the matching tower level.

use rand::Rng;

use crate::cover_tower::{AnchorGrid, Tower};
use crate::error::{Error, Result};
use crate::geometry::{BaryPoint, DomainComplex, Point};

/// One open star: the `K_s` face it colors, its barycenter vertex in `K_b`,
/// and the tower element certified to contain the closed star.
#[derive(Clone, Debug)]
pub struct FamilyElement {
    /// Face of the base subdivision (sorted `K_s` vertex ids).
    pub face: Vec<usize>,
    /// Vertex id of the face's barycenter in the star-carrying complex.
    pub vertex: usize,
    pub center: Point,
    /// Max distance from the center to any vertex of an incident maximal
    /// simplex: a radius bound for the closed star.
    pub star_radius: f64,
    /// Index of the containing element in the tower level of this family.
    pub link: usize,
}

#[derive(Clone, Debug)]
pub struct DisjointFamily {
    pub level: usize,
    pub elements: Vec<FamilyElement>,
}

/// The complete witness: families `V_0 … V_m` over a common subdivision.
#[derive(Clone, Debug)]
pub struct RefinementSystem {
    pub families: Vec<DisjointFamily>,
    /// `K_b`: carries the stars; its vertices are the face barycenters.
    pub subdivision: DomainComplex,
    /// `K_s`: the subdivision whose faces are colored.
    pub base: DomainComplex,
    /// Per `K_b` vertex id: (family level, element index).
    pub vertex_family: Vec<(usize, usize)>,
}

impl RefinementSystem {
    pub fn element(&self, level: usize, index: usize) -> &FamilyElement {
        &self.families[level].elements[index]
    }

    /// Weight of `x` on the barycenter vertex of the given element; `x`
    /// lies in the open star iff this is positive.  The weight is the
    /// barycentric coordinate in any carrying simplex, so the answer does
    /// not depend on the tie-break of `locate`.
    pub fn star_weight(&self, bp: &BaryPoint, vertex: usize) -> f64 {
        let simplex = &self.subdivision.maximal_simplices()[bp.simplex];
        simplex
            .iter()
            .position(|&v| v == vertex)
            .map_or(0.0, |i| bp.weights[i])
    }

    pub fn star_contains(&self, x: &Point, level: usize, index: usize) -> Result<bool> {
        let bp = self.subdivision.locate(x)?;
        Ok(self.star_weight(&bp, self.families[level].elements[index].vertex) > 0.0)
    }
}

const SUBDIVISION_BUDGET: usize = 40;

/// Builds the refinement system for a tower over domain complex `k`,
/// certifying per element that the closed star lies strictly inside its
/// linked cover element.
pub fn disjoint_refinements(tower: &Tower, k: &DomainComplex) -> Result<RefinementSystem> {
    let m = k.dim();
    if tower.levels.len() < m + 1 {
        return Err(Error::InvalidArgument(format!(
            "tower depth {} below domain dimension + 1",
            tower.levels.len()
        )));
    }
    let grids: Vec<AnchorGrid> = tower.levels[..=m]
        .iter()
        .map(|lv| {
            let max_r = lv.elements.iter().map(|e| e.radius).fold(0.0, f64::max);
            AnchorGrid::new(
                lv.elements.iter().map(|e| e.anchor.clone()).collect(),
                max_r.max(1e-12),
            )
        })
        .collect();
    let max_radius: Vec<f64> = tower.levels[..=m]
        .iter()
        .map(|lv| lv.elements.iter().map(|e| e.radius).fold(0.0, f64::max))
        .collect();

    // Hard cap on subdivision size so an unreachable containment target
    // fails instead of exhausting memory.
    const SIMPLEX_BUDGET: usize = 500_000;
    let mut ks = k.clone();
    for _ in 0..SUBDIVISION_BUDGET {
        let (kb, faces) = ks.barycentric_subdivide_with_map();
        if let Some(sys) = try_certify(tower, &grids, &max_radius, ks.clone(), kb, faces) {
            return Ok(sys);
        }
        if ks.maximal_simplices().len() > SIMPLEX_BUDGET {
            break;
        }
        ks = ks.edge_refine();
    }
    let min_r = tower.levels[..=m]
        .iter()
        .flat_map(|lv| lv.elements.iter().map(|e| e.radius))
        .fold(f64::INFINITY, f64::min);
    Err(Error::SubdivisionBudget {
        required: (1.0 - crate::cover_tower::COVER_MARGIN) * min_r,
        reached: ks.mesh(),
    })
}

fn try_certify(
    tower: &Tower,
    grids: &[AnchorGrid],
    max_radius: &[f64],
    ks: DomainComplex,
    kb: DomainComplex,
    faces: Vec<Vec<usize>>,
) -> Option<RefinementSystem> {
    // Star radius bound per kb vertex: farthest vertex of any incident
    // maximal simplex (the closed star is the union of those simplices).
    let mut star_radius = vec![0.0f64; kb.vertices().len()];
    for s in kb.maximal_simplices() {
        let mut diam: f64 = 0.0;
        for &i in s {
            for &j in s {
                diam = diam.max(kb.vertices()[i].dist(&kb.vertices()[j]));
            }
        }
        for &i in s {
            star_radius[i] = star_radius[i].max(diam);
        }
    }

    let m = ks.dim();
    let mut families: Vec<DisjointFamily> = (0..=m)
        .map(|level| DisjointFamily {
            level,
            elements: Vec::new(),
        })
        .collect();
    let mut vertex_family = vec![(usize::MAX, usize::MAX); kb.vertices().len()];
    for (vertex, face) in faces.iter().enumerate() {
        let level = face.len() - 1;
        let center = kb.vertices()[vertex].clone();
        let r = star_radius[vertex];
        // Strict containment in the best-clearing element of level `level`.
        let lv = &tower.levels[level];
        let link = grids[level]
            .within(&center, max_radius[level])
            .into_iter()
            .filter(|&i| center.dist(&lv.elements[i].anchor) + r < lv.elements[i].radius)
            .max_by(|&a, &b| {
                let ca = lv.elements[a].radius - center.dist(&lv.elements[a].anchor);
                let cb = lv.elements[b].radius - center.dist(&lv.elements[b].anchor);
                ca.total_cmp(&cb)
            })?;
        vertex_family[vertex] = (level, families[level].elements.len());
        families[level].elements.push(FamilyElement {
            face: face.clone(),
            vertex,
            center,
            star_radius: r,
            link,
        });
    }
    Some(RefinementSystem {
        families,
        subdivision: kb,
        base: ks,
        vertex_family,
    })
}

/// Minimum distance between closed stars of distinct elements of a family
/// (`+∞` for a single element, `0` when closures touch).  Closed stars are
/// unions of simplices, so the pair distance is a min of convex-hull
/// distances; bounding-sphere pruning keeps the scan near-linear.
pub fn discreteness_margin(
    fam: &DisjointFamily,
    sub: &DomainComplex,
) -> f64 {
    if fam.elements.len() < 2 {
        return f64::INFINITY;
    }
    // Incident maximal simplices per barycenter vertex.
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); sub.vertices().len()];
    for (si, s) in sub.maximal_simplices().iter().enumerate() {
        for &v in s {
            incident[v].push(si);
        }
    }
    let mut min_d = f64::INFINITY;
    let n = fam.elements.len();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&fam.elements[i], &fam.elements[j]);
            let lower = a.center.dist(&b.center) - a.star_radius - b.star_radius;
            if lower >= min_d {
                continue;
            }
            // Shared vertex: the closures intersect.
            let shared = incident[a.vertex].iter().any(|sa| {
                incident[b.vertex].iter().any(|sb| {
                    sub.maximal_simplices()[*sa]
                        .iter()
                        .any(|v| sub.maximal_simplices()[*sb].contains(v))
                })
            });
            if shared {
                return 0.0;
            }
            for &sa in &incident[a.vertex] {
                for &sb in &incident[b.vertex] {
                    let pa: Vec<Point> = sub.maximal_simplices()[sa]
                        .iter()
                        .map(|&v| sub.vertices()[v].clone())
                        .collect();
                    let pb: Vec<Point> = sub.maximal_simplices()[sb]
                        .iter()
                        .map(|&v| sub.vertices()[v].clone())
                        .collect();
                    min_d = min_d.min(crate::geometry::dist_convex_convex(&pa, &pb));
                }
            }
        }
    }
    min_d
}

/// Audit helper: random point of the open star of an element, drawn by
/// mixing the barycenter vertex with a random incident simplex.
pub fn sample_star<R: Rng>(
    sys: &RefinementSystem,
    level: usize,
    index: usize,
    rng: &mut R,
) -> Point {
    let e = &sys.families[level].elements[index];
    let incident: Vec<&Vec<usize>> = sys
        .subdivision
        .maximal_simplices()
        .iter()
        .filter(|s| s.contains(&e.vertex))
        .collect();
    let s = incident[rng.random_range(0..incident.len())];
    let mut w: Vec<f64> = s.iter().map(|_| rng.random_range(0.0..1.0)).collect();
    // Force a strictly positive weight on the barycenter vertex.
    let vi = s.iter().position(|&v| v == e.vertex).unwrap();
    w[vi] += 0.1;
    let sum: f64 = w.iter().sum();
    let mut p = Point::zeros(sys.subdivision.ambient_dim());
    for (&wi, &v) in w.iter().zip(s) {
        for (pc, vc) in p.coords.iter_mut().zip(&sys.subdivision.vertices()[v].coords) {
            *pc += (wi / sum) * vc;
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover_tower::{CoverElement, TowerAudit, TowerLevel};
    use crate::geometry::{InflatedShape, Shape};
    use rand::{Rng, SeedableRng};

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec())
    }

    /// Synthetic tower: the same ball cover at every level, enough for the
    /// purely geometric star constructions.
    fn ball_tower(anchors: &[Point], radius: f64, depth: usize, k: &DomainComplex) -> Tower {
        let value = Shape::ball(Point::zeros(2), 1.0).unwrap();
        let levels = (0..depth)
            .map(|lvl| TowerLevel {
                elements: anchors
                    .iter()
                    .map(|a| CoverElement {
                        anchor: a.clone(),
                        radius,
                        delta: 0.5,
                        eps: 1.0,
                        phi_shape: InflatedShape::new(value.clone(), 0.5),
                        psi_shape: InflatedShape::new(value.clone(), 1.0),
                        parent: if lvl == 0 { None } else { Some(0) },
                    })
                    .collect(),
                anchors: k.clone(),
            })
            .collect();
        Tower {
            levels,
            audit: TowerAudit::default(),
        }
    }

    #[test]
    fn segment_families() {
        let k = DomainComplex::interval(0.0, 1.0);
        let tower = ball_tower(&[pt(&[0.0]), pt(&[1.0])], 0.6, 2, &k);
        let sys = disjoint_refinements(&tower, &k).unwrap();
        assert_eq!(sys.families.len(), 2);
        // Level 0 stars sit at base vertices, level 1 at edge midpoints.
        for e in &sys.families[0].elements {
            assert_eq!(e.face.len(), 1);
        }
        for e in &sys.families[1].elements {
            assert_eq!(e.face.len(), 2);
        }
        let v0: Vec<f64> = sys.families[0]
            .elements
            .iter()
            .map(|e| e.center.coords[0])
            .collect();
        assert!(v0.contains(&0.0) && v0.contains(&0.5) && v0.contains(&1.0));
        // Certified containment.
        for fam in &sys.families {
            for e in &fam.elements {
                let u = &tower.levels[fam.level].elements[e.link];
                assert!(e.center.dist(&u.anchor) + e.star_radius < u.radius);
            }
        }
        // Coverage: every sample has positive star weight somewhere.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = pt(&[rng.random_range(0.0..1.0)]);
            let bp = sys.subdivision.locate(&x).unwrap();
            let covered = sys
                .families
                .iter()
                .flat_map(|f| &f.elements)
                .any(|e| sys.star_weight(&bp, e.vertex) > 0.0);
            assert!(covered);
        }
    }

    #[test]
    fn triangle_families_cover_and_refine() {
        let k = DomainComplex::new(
            vec![pt(&[0.0, 0.0]), pt(&[1.0, 0.0]), pt(&[0.0, 1.0])],
            vec![vec![0, 1, 2]],
        )
        .unwrap();
        let anchors = vec![
            pt(&[0.0, 0.0]),
            pt(&[1.0, 0.0]),
            pt(&[0.0, 1.0]),
            pt(&[0.3, 0.3]),
        ];
        let tower = ball_tower(&anchors, 0.9, 3, &k);
        let sys = disjoint_refinements(&tower, &k).unwrap();
        assert_eq!(sys.families.len(), 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let vols = sys.subdivision.simplex_volumes();
        for _ in 0..10_000 {
            let bp = sys.subdivision.sample_point(&mut rng, &vols);
            let covered = sys
                .families
                .iter()
                .flat_map(|f| &f.elements)
                .any(|e| sys.star_weight(&bp, e.vertex) > 0.0);
            assert!(covered);
        }
        // Refinement: star samples land in the linked tower element.
        for (lvl, fam) in sys.families.iter().enumerate() {
            for (idx, e) in fam.elements.iter().enumerate() {
                let u = &tower.levels[lvl].elements[e.link];
                for _ in 0..20 {
                    let p = sample_star(&sys, lvl, idx, &mut rng);
                    assert!(u.contains(&p));
                    assert!(sys.star_contains(&p, lvl, idx).unwrap());
                }
            }
        }
    }

    #[test]
    fn distinct_edge_stars_share_no_sample() {
        let k = DomainComplex::interval(0.0, 1.0);
        let tower = ball_tower(&[pt(&[0.0]), pt(&[1.0])], 0.6, 2, &k);
        let sys = disjoint_refinements(&tower, &k).unwrap();
        let edges = &sys.families[1].elements;
        assert!(edges.len() >= 2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let x = pt(&[rng.random_range(0.0..1.0)]);
            let bp = sys.subdivision.locate(&x).unwrap();
            let hits = edges
                .iter()
                .filter(|e| sys.star_weight(&bp, e.vertex) > 0.0)
                .count();
            assert!(hits <= 1);
        }
    }

    #[test]
    fn structural_disjointness_within_each_family() {
        // A kb simplex is a chain of ks faces: one face per dimension, so
        // no maximal simplex carries two same-level barycenters.
        let k = DomainComplex::square(0.0, 1.0);
        let anchors = vec![pt(&[0.25, 0.25]), pt(&[0.75, 0.25]), pt(&[0.25, 0.75]), pt(&[0.75, 0.75])];
        let tower = ball_tower(&anchors, 0.8, 3, &k);
        let sys = disjoint_refinements(&tower, &k).unwrap();
        for fam in &sys.families {
            let verts: std::collections::BTreeSet<usize> =
                fam.elements.iter().map(|e| e.vertex).collect();
            for s in sys.subdivision.maximal_simplices() {
                assert!(s.iter().filter(|v| verts.contains(v)).count() <= 1);
            }
        }
    }

    #[test]
    fn margin_examples() {
        let k = DomainComplex::interval(0.0, 1.0);
        let tower = ball_tower(&[pt(&[0.0]), pt(&[1.0])], 0.6, 2, &k);
        let sys = disjoint_refinements(&tower, &k).unwrap();
        // Adjacent edge stars touch at shared base vertices.
        assert_eq!(discreteness_margin(&sys.families[1], &sys.subdivision), 0.0);
        // Single element: infinite sentinel.
        let single = DisjointFamily {
            level: 0,
            elements: vec![sys.families[0].elements[0].clone()],
        };
        assert_eq!(discreteness_margin(&single, &sys.subdivision), f64::INFINITY);
        // Two well-separated vertex stars: strictly positive margin.
        let pick = |c: f64| {
            sys.families[0]
                .elements
                .iter()
                .find(|e| e.center.coords[0] == c)
                .unwrap()
                .clone()
        };
        let far = DisjointFamily {
            level: 0,
            elements: vec![pick(0.0), pick(1.0)],
        };
        let sep = discreteness_margin(&far, &sys.subdivision);
        assert!(sep > 0.0 && sep.is_finite());
    }
}
