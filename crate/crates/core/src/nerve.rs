//! Abstract simplicial complexes, nerves of refinement systems, level
//! orientation, the minimal-element skeleton filtration, and cones.

use std::collections::{BTreeMap, BTreeSet};

use crate::disjoint_refine::RefinementSystem;
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Finite abstract simplicial complex over `u32` vertex ids, stored closed
/// under nonempty subsets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AbstractComplex {
    simplices: BTreeSet<Vec<u32>>,
}

fn subsets(s: &[u32]) -> impl Iterator<Item = Vec<u32>> + '_ {
    (1u32..(1 << s.len())).map(move |mask| {
        (0..s.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| s[i])
            .collect()
    })
}

impl AbstractComplex {
    pub fn from_maximal<I: IntoIterator<Item = Vec<u32>>>(maximal: I) -> AbstractComplex {
        let mut c = AbstractComplex::default();
        for s in maximal {
            c.insert_closed(s);
        }
        c
    }

    /// Inserts a simplex together with all its faces.
    pub fn insert_closed(&mut self, mut s: Vec<u32>) {
        s.sort_unstable();
        s.dedup();
        for f in subsets(&s) {
            self.simplices.insert(f);
        }
    }

    pub fn simplices(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.simplices.iter()
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn contains(&self, s: &[u32]) -> bool {
        let mut k: Vec<u32> = s.to_vec();
        k.sort_unstable();
        self.simplices.contains(&k)
    }

    pub fn vertices(&self) -> BTreeSet<u32> {
        self.simplices
            .iter()
            .filter(|s| s.len() == 1)
            .map(|s| s[0])
            .collect()
    }

    /// Largest simplex dimension, or `None` when empty.
    pub fn dim(&self) -> Option<usize> {
        self.simplices.iter().map(|s| s.len() - 1).max()
    }

    /// Simplices not properly contained in another simplex.  Closure
    /// makes this a facet check: σ is maximal iff it is no facet of a
    /// stored simplex.
    pub fn maximal(&self) -> Vec<Vec<u32>> {
        let mut covered: BTreeSet<&Vec<u32>> = BTreeSet::new();
        let mut facet = Vec::new();
        for s in &self.simplices {
            for skip in 0..s.len() {
                facet.clear();
                facet.extend(s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v));
                if let Some(f) = self.simplices.get(&facet) {
                    covered.insert(f);
                }
            }
        }
        self.simplices
            .iter()
            .filter(|s| !covered.contains(s))
            .cloned()
            .collect()
    }

    /// `{σ : card σ ≤ k+1}`.
    pub fn k_skeleton(&self, k: usize) -> AbstractComplex {
        AbstractComplex {
            simplices: self
                .simplices
                .iter()
                .filter(|s| s.len() <= k + 1)
                .cloned()
                .collect(),
        }
    }

    /// `Σ * v`: every simplex extended by the new vertex `v`.
    pub fn cone(&self, v: u32) -> Result<AbstractComplex> {
        if self.contains(&[v]) {
            return Err(Error::ConeVertexPresent(v));
        }
        let mut out = self.clone();
        out.simplices.insert(vec![v]);
        for s in &self.simplices {
            let mut e = s.clone();
            e.push(v);
            e.sort_unstable();
            out.simplices.insert(e);
        }
        Ok(out)
    }
}

/// A complex whose vertices carry integer levels, with every simplex
/// linearly ordered by level.
#[derive(Clone, Debug)]
pub struct OrientedComplex {
    pub complex: AbstractComplex,
    pub level: BTreeMap<u32, i64>,
}

/// Validates that adjacent vertices never share a level (which family
/// disjointness guarantees for nerves) and wraps the order.
pub fn orient_by_level(
    complex: AbstractComplex,
    level: BTreeMap<u32, i64>,
) -> Result<OrientedComplex> {
    for s in complex.simplices() {
        for (i, &u) in s.iter().enumerate() {
            for &v in &s[i + 1..] {
                if level[&u] == level[&v] {
                    return Err(Error::EqualLevelAdjacent(u, v, level[&u]));
                }
            }
        }
    }
    Ok(OrientedComplex { complex, level })
}

impl OrientedComplex {
    /// Vertices of `s` sorted by increasing level.
    pub fn ordered(&self, s: &[u32]) -> Vec<u32> {
        let mut out = s.to_vec();
        out.sort_by_key(|v| self.level[v]);
        out
    }

    pub fn min_vertex(&self, s: &[u32]) -> u32 {
        *s.iter().min_by_key(|v| self.level[*v]).unwrap()
    }

    /// Export: `nerve v1` header, `n <id> level=<l>` vertex lines, then
    /// `s <ids…>` lines for the maximal simplices.
    pub fn to_text(&self) -> String {
        let mut out = String::from("nerve v1\n");
        for v in self.complex.vertices() {
            out.push_str(&format!("n {} level={}\n", v, self.level[&v]));
        }
        for s in self.complex.maximal() {
            out.push('s');
            for v in &s {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// The layers `V_0, V_1, …` of iterated minimal vertices together with the
/// tail subcomplexes `Σ_k = {σ ∈ Σ : σ ⊆ V_k ∪ …}`.
#[derive(Clone, Debug)]
pub struct SkeletonFiltration {
    pub layers: Vec<BTreeSet<u32>>,
    pub subcomplexes: Vec<AbstractComplex>,
}

/// Peels iterated minimal elements: a vertex is minimal when no adjacent
/// vertex of lower level remains.  Every simplex meets consecutive layers
/// in strictly increasing level order, which bounds `dim Σ_k` by
/// `layers − 1 − k`.
pub fn filtration(o: &OrientedComplex) -> SkeletonFiltration {
    let verts = o.complex.vertices();
    let mut lower_neighbors: BTreeMap<u32, BTreeSet<u32>> =
        verts.iter().map(|&v| (v, BTreeSet::new())).collect();
    for s in o.complex.simplices() {
        if s.len() == 2 {
            let (a, b) = (s[0], s[1]);
            if o.level[&a] < o.level[&b] {
                lower_neighbors.get_mut(&b).unwrap().insert(a);
            } else {
                lower_neighbors.get_mut(&a).unwrap().insert(b);
            }
        }
    }
    let mut remaining: BTreeSet<u32> = verts;
    let mut layers = Vec::new();
    while !remaining.is_empty() {
        let minimal: BTreeSet<u32> = remaining
            .iter()
            .copied()
            .filter(|v| lower_neighbors[v].iter().all(|u| !remaining.contains(u)))
            .collect();
        assert!(!minimal.is_empty(), "levels admit no cycle");
        for v in &minimal {
            remaining.remove(v);
        }
        layers.push(minimal);
    }
    let mut subcomplexes = Vec::with_capacity(layers.len());
    for k in 0..layers.len() {
        let tail: BTreeSet<u32> = layers[k..].iter().flatten().copied().collect();
        subcomplexes.push(AbstractComplex {
            simplices: o
                .complex
                .simplices()
                .filter(|s| s.iter().all(|v| tail.contains(v)))
                .cloned()
                .collect(),
        });
    }
    SkeletonFiltration {
        layers,
        subcomplexes,
    }
}

/// Checks the defining properties of a filtration against its complex,
/// independently of how the layers were produced: the layers partition
/// the vertices, each simplex climbs through strictly later layers in
/// level order, every tail subcomplex `Σ_k` equals its own
/// `(L-1-k)`-skeleton, and a simplex leaving `Σ_k` loses its minimal
/// vertex from `(Σ_{k+1})⁰`.
pub fn verify_filtration(o: &OrientedComplex, f: &SkeletonFiltration) -> Result<()> {
    let fail = |d: String| Err(Error::Verification(d));
    let l = f.layers.len();
    let mut layer_of: BTreeMap<u32, usize> = BTreeMap::new();
    for (k, layer) in f.layers.iter().enumerate() {
        for &v in layer {
            if layer_of.insert(v, k).is_some() {
                return fail(format!("vertex {v} in two layers"));
            }
        }
    }
    if layer_of.keys().copied().collect::<BTreeSet<u32>>() != o.complex.vertices() {
        return fail("layers do not partition the vertex set".into());
    }
    for s in o.complex.simplices() {
        let ord = o.ordered(s);
        for w in ord.windows(2) {
            if layer_of[&w[0]] >= layer_of[&w[1]] {
                return fail(format!("vertices {} and {} break layer order", w[0], w[1]));
            }
        }
    }
    if f.subcomplexes.len() != l {
        return fail("subcomplex count differs from layer count".into());
    }
    for k in 0..l {
        let sub = &f.subcomplexes[k];
        let tail: BTreeSet<u32> = f.layers[k..].iter().flatten().copied().collect();
        for s in o.complex.simplices() {
            if sub.contains(s) != s.iter().all(|v| tail.contains(v)) {
                return fail(format!("tail membership wrong at layer {k}"));
            }
        }
        if &sub.k_skeleton(l - 1 - k) != sub {
            return fail(format!("subcomplex {k} exceeds dimension {}", l - 1 - k));
        }
        if k + 1 < l {
            let next = &f.subcomplexes[k + 1];
            for s in sub.simplices() {
                if !next.contains(s) && next.contains(&[o.min_vertex(s)]) {
                    return fail(format!("minimal vertex of {s:?} survives into layer {}", k + 1));
                }
            }
        }
    }
    Ok(())
}

/// A point of the nerve realization: positive weights over one simplex.
#[derive(Clone, Debug)]
pub struct NervePoint {
    pub simplex: Vec<u32>,
    pub weights: Vec<f64>,
}

/// Nerve of a refinement system.  The star-carrying complex decides
/// intersections structurally: stars of barycenter vertices meet iff the
/// vertices share a simplex, so the nerve is generated by the maximal
/// simplices of the subdivision (chains of faces of the base complex).
pub fn nerve(sys: &RefinementSystem) -> AbstractComplex {
    AbstractComplex::from_maximal(
        sys.subdivision
            .maximal_simplices()
            .iter()
            .map(|s| s.iter().map(|&v| v as u32).collect()),
    )
}

/// Family levels of the nerve vertices.
pub fn nerve_levels(sys: &RefinementSystem) -> BTreeMap<u32, i64> {
    sys.vertex_family
        .iter()
        .enumerate()
        .map(|(v, (lvl, _))| (v as u32, *lvl as i64))
        .collect()
}

/// The canonical map into the nerve: barycentric weights of `x` in its
/// carrier simplex of the subdivision, restricted to the strictly positive
/// entries.  The support stars all contain `x` by construction.
pub fn canonical_map(sys: &RefinementSystem, x: &Point) -> Result<NervePoint> {
    nerve_point_from(sys, &sys.subdivision.locate(x)?)
}

/// As `canonical_map`, from an already located barycentric point (lets
/// batch callers reuse a spatial index).
pub fn nerve_point_from(sys: &RefinementSystem, bp: &crate::geometry::BaryPoint) -> Result<NervePoint> {
    let simplex_verts = &sys.subdivision.maximal_simplices()[bp.simplex];
    let mut pairs: Vec<(u32, f64)> = simplex_verts
        .iter()
        .zip(&bp.weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&v, &w)| (v as u32, w))
        .collect();
    pairs.sort_by_key(|(v, _)| *v);
    let sum: f64 = pairs.iter().map(|(_, w)| w).sum();
    Ok(NervePoint {
        simplex: pairs.iter().map(|(v, _)| *v).collect(),
        weights: pairs.iter().map(|(_, w)| w / sum).collect(),
    })
}
