//! Builds the continuous map h on the realization of an oriented nerve
//! from a table of vertex contractions.
//!
//! Evaluation is lazy and pointwise: a nerve point is peeled one vertex at
//! a time, least vertex first, and each peel applies that vertex's
//! contraction to the value of the rest.  Two construction variants are
//! offered.  `glue` peels in level order; `skeleton_extend` peels in layer
//! order of the minimal-element filtration, building the map level set by
//! level set through cone extensions.  On every simplex the two orders
//! coincide, which the tests confirm numerically.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{InflatedShape, Point};
use crate::mapping::Contraction;
use crate::nerve::{NervePoint, OrientedComplex, SkeletonFiltration};

/// Per-vertex data: the inner and outer neighborhoods and the contraction
/// H_v of the inner one to a point of the outer one.
#[derive(Clone, Debug)]
pub struct TableEntry {
    pub phi: InflatedShape,
    pub psi: InflatedShape,
    pub contraction: Contraction,
}

/// Contractions for all nerve vertices.
#[derive(Clone, Debug, Default)]
pub struct ContractionTable {
    pub entries: BTreeMap<u32, TableEntry>,
}

impl ContractionTable {
    pub fn insert(&mut self, v: u32, phi: InflatedShape, psi: InflatedShape, h: Contraction) {
        self.entries.insert(
            v,
            TableEntry {
                phi,
                psi,
                contraction: h,
            },
        );
    }

    pub fn target(&self, v: u32) -> &Point {
        &self.entries[&v].contraction.target_point
    }
}

/// A boxed pointwise evaluator over nerve points.
pub type Evaluator = Box<dyn Fn(&NervePoint) -> Result<Point> + Send + Sync>;

/// Extends an evaluator on |Z| to the cone |Z * apex| by
/// h(t·apex + (1-t)·z) = H(g(z), t).  The endpoint branches of
/// `Contraction::apply` make t = 0 restrict to g exactly and t = 1 hit the
/// contraction target exactly.
pub fn cone_extend(g: Evaluator, apex: u32, h: Contraction) -> Evaluator {
    Box::new(move |q: &NervePoint| {
        let t = q
            .simplex
            .iter()
            .position(|&v| v == apex)
            .map_or(0.0, |i| q.weights[i]);
        if t >= 1.0 {
            return Ok(h.target_point.clone());
        }
        let mut rest = NervePoint {
            simplex: Vec::new(),
            weights: Vec::new(),
        };
        for (&v, &w) in q.simplex.iter().zip(&q.weights) {
            if v != apex {
                rest.simplex.push(v);
                rest.weights.push(w / (1.0 - t));
            }
        }
        Ok(h.apply(&g(&rest)?, t))
    })
}

/// Peel-order evaluation of a weighted vertex chain.  `chain` must be in
/// peel order with weights summing to 1; zero weights are exact no-ops.
fn eval_chain(table: &ContractionTable, chain: &[(u32, f64)]) -> Point {
    let live: Vec<(u32, f64)> = chain.iter().copied().filter(|&(_, w)| w > 0.0).collect();
    let last = live.last().expect("nonempty support");
    let mut y = table.target(last.0).clone();
    let mut suffix = last.1;
    for &(v, w) in live[..live.len() - 1].iter().rev() {
        suffix += w;
        y = table.entries[&v].contraction.apply(&y, w / suffix);
    }
    y
}

/// Evaluates h at `q` on the simplex `sigma`, given in peel order
/// (increasing level).  Vertices of `sigma` missing from the support of
/// `q` enter with weight zero, so restrictions to faces are exact.
pub fn oriented_simplex_map(
    sigma: &[u32],
    table: &ContractionTable,
    q: &NervePoint,
) -> Result<Point> {
    if q.simplex.iter().any(|v| !sigma.contains(v)) {
        return Err(Error::SupportOutsideSimplex);
    }
    let chain: Vec<(u32, f64)> = sigma
        .iter()
        .map(|&v| {
            let w = q
                .simplex
                .iter()
                .position(|&u| u == v)
                .map_or(0.0, |i| q.weights[i]);
            (v, w)
        })
        .collect();
    Ok(eval_chain(table, &chain))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuildVariant {
    Glued,
    Skeleton,
}

/// The assembled map h on the oriented nerve.  Pure and reentrant, so
/// batches of query points may be evaluated from any number of threads.
#[derive(Debug)]
pub struct NerveMap {
    pub variant: BuildVariant,
    table: ContractionTable,
    rank: BTreeMap<u32, i64>,
}

impl NerveMap {
    pub fn eval(&self, q: &NervePoint) -> Result<Point> {
        if q.simplex.is_empty() {
            return Err(Error::InvalidArgument("empty nerve point".into()));
        }
        let mut chain: Vec<(u32, f64)> = q
            .simplex
            .iter()
            .zip(&q.weights)
            .map(|(&v, &w)| (v, w))
            .collect();
        for (v, _) in &chain {
            if !self.rank.contains_key(v) {
                return Err(Error::InvalidArgument(format!(
                    "vertex {v} is not in the contraction table"
                )));
            }
        }
        chain.sort_by_key(|(v, _)| self.rank[v]);
        Ok(eval_chain(&self.table, &chain))
    }

    pub fn psi(&self, v: u32) -> &InflatedShape {
        &self.entries(v).psi
    }

    pub fn entries(&self, v: u32) -> &TableEntry {
        &self.table.entries[&v]
    }

    pub fn table(&self) -> &ContractionTable {
        &self.table
    }
}

/// Ψ(v) ⊆ Φ(u) on every adjacent comparable pair u < v, so each peel hands
/// the partial value to a contraction defined on it.
fn check_transport(o: &OrientedComplex, table: &ContractionTable) -> Result<()> {
    const SLACK: f64 = 1e-12;
    for v in o.complex.vertices() {
        if !table.entries.contains_key(&v) {
            return Err(Error::InvalidArgument(format!(
                "contraction table misses vertex {v}"
            )));
        }
    }
    for s in o.complex.simplices() {
        if s.len() != 2 {
            continue;
        }
        let ord = o.ordered(s);
        let (u, v) = (ord[0], ord[1]);
        if !table.entries[&u].phi.includes(&table.entries[&v].psi, SLACK) {
            return Err(Error::audit(
                "transport",
                format!("outer neighborhood of {v} not inside inner neighborhood of {u}"),
            ));
        }
    }
    Ok(())
}

/// Glues the per-simplex maps along shared faces; restrictions agree
/// because each face evaluates by the same peel sequence.
pub fn glue(o: &OrientedComplex, table: ContractionTable) -> Result<NerveMap> {
    check_transport(o, &table)?;
    Ok(NerveMap {
        variant: BuildVariant::Glued,
        rank: o.level.clone(),
        table,
    })
}

/// Builds h from the top filtration layer down: vertices of the last layer
/// map to their contraction targets, and each earlier layer extends over
/// the cones Ω_v * v by `cone_extend`.  The peel order this induces is the
/// layer order, consistent with the level order on every simplex.
pub fn skeleton_extend(
    o: &OrientedComplex,
    filt: &SkeletonFiltration,
    table: ContractionTable,
) -> Result<NerveMap> {
    check_transport(o, &table)?;
    let mut rank: BTreeMap<u32, i64> = BTreeMap::new();
    for (k, layer) in filt.layers.iter().enumerate() {
        for &v in layer {
            rank.insert(v, k as i64);
        }
    }
    for v in o.complex.vertices() {
        if !rank.contains_key(&v) {
            return Err(Error::InvalidArgument(format!(
                "filtration misses vertex {v}"
            )));
        }
    }
    Ok(NerveMap {
        variant: BuildVariant::Skeleton,
        rank,
        table,
    })
}

/// Samples every simplex of the nerve and returns the worst containment
/// slack of dist(h(q), Ψ(min σ)): the inflation radius minus the distance
/// of the image to the base shape.  Positive means contained.
pub fn min_sigma_containment<R: rand::Rng>(
    map: &NerveMap,
    o: &OrientedComplex,
    samples_per_simplex: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for s in o.complex.simplices() {
        let psi = map.psi(o.min_vertex(s));
        for _ in 0..samples_per_simplex {
            let q = random_point_on(s, rng);
            let y = map.eval(&q)?;
            worst = worst.min(psi.radius - psi.base.dist_point(&y));
        }
    }
    Ok(worst)
}

/// Uniform random barycentric weights over a simplex.
pub fn random_point_on<R: rand::Rng>(simplex: &[u32], rng: &mut R) -> NervePoint {
    let raw: Vec<f64> = simplex
        .iter()
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let sum: f64 = raw.iter().sum();
    NervePoint {
        simplex: simplex.to_vec(),
        weights: raw.iter().map(|w| w / sum).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;
    use crate::nerve::{filtration, orient_by_level, AbstractComplex};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn straight(center: Vec<f64>, delta: f64, eps: f64) -> TableEntry {
        let c = Point::new(center);
        let base = Shape::ball(c.clone(), 0.1).unwrap();
        let phi = InflatedShape::new(base.clone(), delta);
        TableEntry {
            contraction: Contraction {
                source: phi.clone(),
                target_point: c,
            },
            phi,
            psi: InflatedShape::new(base, eps),
        }
    }

    /// Table over one ambient ball so transport holds trivially; targets
    /// are distinct points inside it.
    fn shared_ball_table(targets: &[Vec<f64>]) -> ContractionTable {
        let base = Shape::ball(Point::zeros(2), 1.0).unwrap();
        let mut table = ContractionTable::default();
        for (v, t) in targets.iter().enumerate() {
            let phi = InflatedShape::new(base.clone(), 1.0);
            table.insert(
                v as u32,
                phi.clone(),
                phi.clone(),
                Contraction {
                    source: phi,
                    target_point: Point::new(t.clone()),
                },
            );
        }
        table
    }

    #[test]
    fn cone_extension_endpoints() {
        let origin = Point::zeros(2);
        let g_val = origin.clone();
        let g: Evaluator = Box::new(move |_| Ok(g_val.clone()));
        let phi = InflatedShape::new(Shape::ball(origin, 3.0).unwrap(), 0.5);
        let h = Contraction {
            source: phi,
            target_point: Point::new(vec![2.0, 0.0]),
        };
        let ext = cone_extend(g, 9, h);
        let q = |t: f64| NervePoint {
            simplex: vec![9, 1],
            weights: vec![t, 1.0 - t],
        };
        assert_eq!(ext(&q(0.0)).unwrap().coords, vec![0.0, 0.0]);
        assert_eq!(ext(&q(1.0)).unwrap().coords, vec![2.0, 0.0]);
        assert_eq!(ext(&q(0.5)).unwrap().coords, vec![1.0, 0.0]);
    }

    #[test]
    fn simplex_map_examples() {
        let mut table = ContractionTable::default();
        table.entries.insert(0, straight(vec![0.0, 0.0], 0.5, 1.0));
        table.entries.insert(1, straight(vec![4.0, 0.0], 0.5, 1.0));
        // A vertex maps to its contraction target.
        let v = NervePoint {
            simplex: vec![1],
            weights: vec![1.0],
        };
        assert_eq!(
            oriented_simplex_map(&[0, 1], &table, &v).unwrap().coords,
            vec![4.0, 0.0]
        );
        // Hand recursion on an edge: H_0((4,0), 0.25) = (3,0).
        let q = NervePoint {
            simplex: vec![0, 1],
            weights: vec![0.25, 0.75],
        };
        assert_eq!(
            oriented_simplex_map(&[0, 1], &table, &q).unwrap().coords,
            vec![3.0, 0.0]
        );
        // Support outside the simplex is rejected.
        assert!(matches!(
            oriented_simplex_map(&[0, 2], &table, &q),
            Err(Error::SupportOutsideSimplex)
        ));
    }

    #[test]
    fn straight_line_recursion_matches_affine_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(1..6usize);
            let mut table = ContractionTable::default();
            let mut centers = Vec::new();
            for v in 0..n {
                let c = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                centers.push(c.clone());
                table.entries.insert(v as u32, straight(c, 0.5, 1.0));
            }
            let sigma: Vec<u32> = (0..n as u32).collect();
            let q = random_point_on(&sigma, &mut rng);
            let got = oriented_simplex_map(&sigma, &table, &q).unwrap();
            let mut expect = Point::zeros(2);
            for (i, w) in q.weights.iter().enumerate() {
                expect = expect.add(&Point::new(centers[i].clone()).scale(*w));
            }
            assert!(got.dist(&expect) < 1e-12);
        }
    }

    #[test]
    fn glued_map_agrees_across_shared_faces() {
        // Two triangles {0,1,2} and {1,2,3} sharing the edge {1,2}.
        let c = AbstractComplex::from_maximal(vec![vec![0, 1, 2], vec![1, 2, 3]]);
        let o = orient_by_level(c, [(0, 0), (1, 1), (2, 2), (3, 0)].into()).unwrap();
        let table = shared_ball_table(&[
            vec![0.1, 0.0],
            vec![0.0, 0.3],
            vec![-0.2, 0.1],
            vec![0.2, -0.2],
        ]);
        let map = glue(&o, table.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let q = random_point_on(&[1, 2], &mut rng);
            // Dual-path evaluation: through either triangle, with the off
            // face vertex carried at weight zero.
            let left = oriented_simplex_map(&[0, 1, 2], &table, &q).unwrap();
            let right = oriented_simplex_map(&[3, 1, 2], &table, &q).unwrap();
            assert!(left.dist(&right) < 1e-12);
            assert!(map.eval(&q).unwrap().dist(&left) < 1e-12);
        }
        // Vertex identities are exact.
        for v in 0..4u32 {
            let p = map
                .eval(&NervePoint {
                    simplex: vec![v],
                    weights: vec![1.0],
                })
                .unwrap();
            assert_eq!(p.coords, table.target(v).coords);
        }
    }

    #[test]
    fn transport_violation_is_reported() {
        let c = AbstractComplex::from_maximal(vec![vec![0, 1]]);
        let o = orient_by_level(c, [(0, 0), (1, 1)].into()).unwrap();
        let mut table = ContractionTable::default();
        // Ψ(1) pokes out of Φ(0): disjoint balls.
        table.entries.insert(0, straight(vec![0.0, 0.0], 0.2, 0.4));
        table.entries.insert(1, straight(vec![5.0, 0.0], 0.2, 0.4));
        match glue(&o, table) {
            Err(Error::AuditFailure { stage, detail }) => {
                assert_eq!(stage, "transport");
                assert!(detail.contains('1') && detail.contains('0'));
            }
            other => panic!("expected transport failure, got {other:?}"),
        }
    }

    #[test]
    fn containment_in_outer_neighborhood_of_min_vertex() {
        // Alternating path 0-1-2-3-4 with levels 0,1,0,1,0.
        let c = AbstractComplex::from_maximal(vec![
            vec![0, 1],
            vec![1, 2],
            vec![2, 3],
            vec![3, 4],
        ]);
        let o = orient_by_level(c, [(0, 0), (1, 1), (2, 0), (3, 1), (4, 0)].into()).unwrap();
        let table = shared_ball_table(&[
            vec![0.3, 0.0],
            vec![0.0, 0.2],
            vec![-0.3, 0.0],
            vec![0.0, -0.2],
            vec![0.1, 0.1],
        ]);
        let map = glue(&o, table).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let worst = min_sigma_containment(&map, &o, 100, &mut rng).unwrap();
        assert!(worst > 1e-9, "worst containment slack {worst}");
    }

    #[test]
    fn skeleton_variant_matches_glued_variant() {
        // 0-dimensional nerve: vertexwise targets, and an isolated vertex
        // has the singleton cone Ω_v * v = {v}.
        let c = AbstractComplex::from_maximal(vec![vec![0], vec![1]]);
        let o = orient_by_level(c, [(0, 0), (1, 3)].into()).unwrap();
        let table = shared_ball_table(&[vec![0.5, 0.0], vec![0.0, 0.5]]);
        let map = skeleton_extend(&o, &filtration(&o), table.clone()).unwrap();
        for v in 0..2u32 {
            let q = NervePoint {
                simplex: vec![v],
                weights: vec![1.0],
            };
            assert_eq!(map.eval(&q).unwrap().coords, table.target(v).coords);
        }

        // Chain a < b: skeleton output equals glue output along the edge.
        let c = AbstractComplex::from_maximal(vec![vec![0, 1]]);
        let o = orient_by_level(c, [(0, 0), (1, 1)].into()).unwrap();
        let table = shared_ball_table(&[vec![0.4, 0.0], vec![-0.4, 0.0]]);
        let glued = glue(&o, table.clone()).unwrap();
        let skel = skeleton_extend(&o, &filtration(&o), table).unwrap();
        assert_eq!(skel.variant, BuildVariant::Skeleton);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let q = random_point_on(&[0, 1], &mut rng);
            assert!(glued.eval(&q).unwrap().dist(&skel.eval(&q).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn variants_and_closed_form_agree_on_random_nerves() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..20 {
            // Random 2-complex over 6 vertices with distinct levels.
            let levels: BTreeMap<u32, i64> = (0..6).map(|v| (v, v as i64)).collect();
            let mut maximal = Vec::new();
            for _ in 0..5 {
                let mut s: Vec<u32> = (0..6).collect();
                for i in (1..s.len()).rev() {
                    s.swap(i, rng.random_range(0..=i));
                }
                s.truncate(rng.random_range(1..4));
                maximal.push(s);
            }
            let c = AbstractComplex::from_maximal(maximal);
            let lv: BTreeMap<u32, i64> = levels
                .iter()
                .filter(|(v, _)| c.contains(&[**v]))
                .map(|(v, l)| (*v, *l))
                .collect();
            let o = orient_by_level(c, lv).unwrap();
            let targets: Vec<Vec<f64>> = (0..6)
                .map(|_| vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)])
                .collect();
            let table = shared_ball_table(&targets);
            let glued = glue(&o, table.clone()).unwrap();
            let skel = skeleton_extend(&o, &filtration(&o), table).unwrap();
            for s in o.complex.simplices() {
                for _ in 0..20 {
                    let q = random_point_on(s, &mut rng);
                    let a = glued.eval(&q).unwrap();
                    let b = skel.eval(&q).unwrap();
                    let mut affine = Point::zeros(2);
                    for (v, w) in q.simplex.iter().zip(&q.weights) {
                        affine =
                            affine.add(&Point::new(targets[*v as usize].clone()).scale(*w));
                    }
                    assert!(a.dist(&b) < 1e-12);
                    assert!(a.dist(&affine) < 1e-12);
                }
            }
        }
    }
}
