//! The compact domain as a finite geometric simplicial complex, with the
//! refinement, location and sampling operations the pipeline is built on.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read as _, Write as _};
use std::path::Path;

use rand::Rng;

use super::hull::affine_project;
use super::point::Point;
use crate::error::{Error, Result};

/// A point of the realization given by a maximal simplex id and barycentric
/// weights over that simplex's vertices (in stored order).
#[derive(Clone, Debug)]
pub struct BaryPoint {
    pub simplex: usize,
    pub weights: Vec<f64>,
}

/// Finite simplicial complex in R^m.  Only the maximal simplices are stored;
/// the face closure is materialized on demand.
#[derive(Clone, Debug)]
pub struct DomainComplex {
    vertices: Vec<Point>,
    /// Sorted vertex-index lists, lexicographically ordered and deduplicated.
    /// The position in this list is the simplex id used by [`BaryPoint`].
    maximal: Vec<Vec<usize>>,
}

impl DomainComplex {
    /// Builds a complex from vertices and its maximal simplices, checking
    /// affine independence of each geometric simplex.
    pub fn new(vertices: Vec<Point>, maximal: Vec<Vec<usize>>) -> Result<DomainComplex> {
        if vertices.is_empty() || maximal.is_empty() {
            return Err(Error::EmptyComplex);
        }
        let m = vertices[0].dim();
        for v in &vertices {
            v.check_dim(m)?;
        }
        let mut maximal: Vec<Vec<usize>> = maximal
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        maximal.sort();
        maximal.dedup();
        for s in &maximal {
            if s.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidArgument(format!(
                    "simplex {s:?} references missing vertex"
                )));
            }
            if s.len() > m + 1 {
                return Err(Error::DegenerateSimplex(s.clone()));
            }
            if !affinely_independent(&vertices, s) {
                return Err(Error::DegenerateSimplex(s.clone()));
            }
        }
        Ok(DomainComplex { vertices, maximal })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn maximal_simplices(&self) -> &[Vec<usize>] {
        &self.maximal
    }

    /// Domain dimension (ambient coordinate dimension).
    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].dim()
    }

    /// Largest simplex dimension present.
    pub fn dim(&self) -> usize {
        self.maximal.iter().map(|s| s.len() - 1).max().unwrap()
    }

    /// A segment `[a, b]` as a one-simplex complex.
    pub fn interval(a: f64, b: f64) -> DomainComplex {
        DomainComplex::new(
            vec![Point::new(vec![a]), Point::new(vec![b])],
            vec![vec![0, 1]],
        )
        .unwrap()
    }

    /// The square `[a, b]²` as two triangles along the diagonal.
    pub fn square(a: f64, b: f64) -> DomainComplex {
        DomainComplex::new(
            vec![
                Point::new(vec![a, a]),
                Point::new(vec![b, a]),
                Point::new(vec![b, b]),
                Point::new(vec![a, b]),
            ],
            vec![vec![0, 1, 2], vec![0, 2, 3]],
        )
        .unwrap()
    }

    /// All simplices: the closure of the maximal ones under nonempty faces.
    pub fn all_faces(&self) -> BTreeSet<Vec<usize>> {
        let mut faces = BTreeSet::new();
        for s in &self.maximal {
            for mask in 1u32..(1 << s.len()) {
                let f: Vec<usize> = (0..s.len())
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| s[i])
                    .collect();
                faces.insert(f);
            }
        }
        faces
    }

    /// Maximum diameter of a (maximal) geometric simplex.
    pub fn mesh(&self) -> f64 {
        self.maximal
            .iter()
            .map(|s| {
                let mut d: f64 = 0.0;
                for (k, &i) in s.iter().enumerate() {
                    for &j in &s[k + 1..] {
                        d = d.max(self.vertices[i].dist(&self.vertices[j]));
                    }
                }
                d
            })
            .fold(0.0, f64::max)
    }

    pub fn point_of(&self, bp: &BaryPoint) -> Point {
        let s = &self.maximal[bp.simplex];
        debug_assert_eq!(s.len(), bp.weights.len());
        let mut p = Point::zeros(self.ambient_dim());
        for (&w, &vi) in bp.weights.iter().zip(s) {
            for (pc, vc) in p.coords.iter_mut().zip(&self.vertices[vi].coords) {
                *pc += w * vc;
            }
        }
        p
    }

    /// Standard barycentric subdivision.
    pub fn barycentric_subdivide(&self) -> DomainComplex {
        self.barycentric_subdivide_with_map().0
    }

    /// Barycentric subdivision together with, per new vertex, the face of
    /// `self` (as a sorted vertex-index list) it is the barycenter of.
    pub fn barycentric_subdivide_with_map(&self) -> (DomainComplex, Vec<Vec<usize>>) {
        let faces: Vec<Vec<usize>> = self.all_faces().into_iter().collect();
        let index: BTreeMap<&Vec<usize>, usize> =
            faces.iter().enumerate().map(|(i, f)| (f, i)).collect();
        let verts: Vec<Point> = faces
            .iter()
            .map(|f| {
                let mut c = Point::zeros(self.ambient_dim());
                for &vi in f {
                    c = c.add(&self.vertices[vi]);
                }
                c.scale(1.0 / f.len() as f64)
            })
            .collect();
        let mut maximal = Vec::new();
        for s in &self.maximal {
            // Maximal chains of faces of s correspond to orderings of its
            // vertices: {p1} ⊂ {p1,p2} ⊂ … ⊂ s.
            for perm in permutations(s) {
                let mut chain = Vec::with_capacity(s.len());
                let mut acc: Vec<usize> = Vec::new();
                for v in perm {
                    acc.push(v);
                    acc.sort_unstable();
                    chain.push(index[&acc]);
                }
                maximal.push(chain);
            }
        }
        let k = DomainComplex::new(verts, maximal).expect("subdivision is non-degenerate");
        (k, faces)
    }

    /// Edgewise (midpoint) refinement: halves every edge.  Segments split in
    /// two, triangles into four congruent copies; higher dimensions fall
    /// back to barycentric subdivision.
    pub fn edge_refine(&self) -> DomainComplex {
        if self.dim() > 2 {
            return self.barycentric_subdivide();
        }
        let mut verts = self.vertices.clone();
        let mut midpoint = BTreeMap::new();
        let mut mid = |i: usize, j: usize, verts: &mut Vec<Point>| -> usize {
            let key = (i.min(j), i.max(j));
            *midpoint.entry(key).or_insert_with(|| {
                verts.push(verts[i].lerp(&verts[j], 0.5));
                verts.len() - 1
            })
        };
        let mut maximal = Vec::new();
        for s in &self.maximal {
            match s.len() {
                1 => maximal.push(s.clone()),
                2 => {
                    let m = mid(s[0], s[1], &mut verts);
                    maximal.push(vec![s[0], m]);
                    maximal.push(vec![m, s[1]]);
                }
                3 => {
                    let (a, b, c) = (s[0], s[1], s[2]);
                    let ab = mid(a, b, &mut verts);
                    let bc = mid(b, c, &mut verts);
                    let ca = mid(c, a, &mut verts);
                    maximal.push(vec![a, ab, ca]);
                    maximal.push(vec![b, ab, bc]);
                    maximal.push(vec![c, bc, ca]);
                    maximal.push(vec![ab, bc, ca]);
                }
                _ => unreachable!(),
            }
        }
        DomainComplex::new(verts, maximal).expect("midpoint refinement is non-degenerate")
    }

    /// Barycentric weights of `x` in the lowest-id maximal simplex that
    /// contains it (within a small relative slack).
    pub fn locate(&self, x: &Point) -> Result<BaryPoint> {
        self.locate_among(x, 0..self.maximal.len())
    }

    fn locate_among(&self, x: &Point, ids: impl IntoIterator<Item = usize>) -> Result<BaryPoint> {
        x.check_dim(self.ambient_dim())?;
        for id in ids {
            let s = &self.maximal[id];
            let pts: Vec<&Point> = s.iter().map(|&i| &self.vertices[i]).collect();
            let Some(bary) = affine_project(x, &pts) else {
                continue;
            };
            // Weight slack is scale-free; 1e-6 admits points within ~1e-9 of
            // the realization even at fine mesh sizes.
            if bary.iter().all(|&b| b >= -1e-6) {
                let mut w: Vec<f64> = bary.iter().map(|&b| b.max(0.0)).collect();
                let sum: f64 = w.iter().sum();
                for wi in &mut w {
                    *wi /= sum;
                }
                return Ok(BaryPoint {
                    simplex: id,
                    weights: w,
                });
            }
        }
        Err(Error::OutsideDomain(x.coords.clone()))
    }

    /// Draws a uniform point of the realization: simplex by volume, weights
    /// by normalized exponentials.
    pub fn sample_point<R: Rng>(&self, rng: &mut R, volumes: &[f64]) -> BaryPoint {
        let total: f64 = volumes.iter().sum();
        let mut pick = rng.random_range(0.0..total);
        let mut id = 0;
        for (i, v) in volumes.iter().enumerate() {
            if pick < *v {
                id = i;
                break;
            }
            pick -= v;
            id = i;
        }
        let k = self.maximal[id].len();
        let mut w: Vec<f64> = (0..k)
            .map(|_| -(1.0 - rng.random_range(0.0..1.0f64)).ln())
            .collect();
        let sum: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= sum;
        }
        BaryPoint {
            simplex: id,
            weights: w,
        }
    }

    /// Per-maximal-simplex volumes (k-dimensional measure), for sampling.
    pub fn simplex_volumes(&self) -> Vec<f64> {
        self.maximal
            .iter()
            .map(|s| {
                let k = s.len() - 1;
                if k == 0 {
                    return 1.0;
                }
                let base = &self.vertices[s[0]];
                let edges: Vec<Point> = s[1..].iter().map(|&i| self.vertices[i].sub(base)).collect();
                let mut gram = vec![vec![0.0; k]; k];
                for i in 0..k {
                    for j in 0..k {
                        gram[i][j] = edges[i].dot(&edges[j]);
                    }
                }
                let det = det_small(&gram);
                let fact: f64 = (1..=k).map(|i| i as f64).product();
                det.max(0.0).sqrt() / fact
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("domain v1 m={}\n", self.ambient_dim());
        for v in &self.vertices {
            out.push('v');
            for c in &v.coords {
                out.push(' ');
                out.push_str(&format!("{c:?}"));
            }
            out.push('\n');
        }
        for s in &self.maximal {
            out.push('s');
            for i in s {
                out.push_str(&format!(" {i}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<DomainComplex> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(Error::EmptyComplex)?;
        let m: usize = header
            .strip_prefix("domain v1 m=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Config(format!("bad domain header {header:?}")))?;
        let mut vertices = Vec::new();
        let mut maximal = Vec::new();
        for line in lines {
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    let coords: Vec<f64> = parts
                        .map(|t| {
                            t.parse()
                                .map_err(|_| Error::Config(format!("bad coordinate {t:?}")))
                        })
                        .collect::<Result<_>>()?;
                    if coords.len() != m {
                        return Err(Error::DimensionMismatch {
                            expected: m,
                            got: coords.len(),
                        });
                    }
                    vertices.push(Point::new(coords));
                }
                Some("s") => {
                    let idx: Vec<usize> = parts
                        .map(|t| {
                            t.parse()
                                .map_err(|_| Error::Config(format!("bad vertex index {t:?}")))
                        })
                        .collect::<Result<_>>()?;
                    maximal.push(idx);
                }
                other => {
                    return Err(Error::Config(format!("unexpected record {other:?}")));
                }
            }
        }
        DomainComplex::new(vertices, maximal)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<DomainComplex> {
        let mut text = String::new();
        std::io::BufReader::new(std::fs::File::open(path)?).read_to_string(&mut text)?;
        DomainComplex::from_text(&text)
    }
}

fn det_small(m: &[Vec<f64>]) -> f64 {
    let k = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut det = 1.0;
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..k {
                a[row][c] -= f * a[col][c];
            }
        }
    }
    det
}

fn affinely_independent(vertices: &[Point], s: &[usize]) -> bool {
    let k = s.len() - 1;
    if k == 0 {
        return true;
    }
    let base = &vertices[s[0]];
    let edges: Vec<Point> = s[1..].iter().map(|&i| vertices[i].sub(base)).collect();
    let mut gram = vec![vec![0.0; k]; k];
    let mut scale: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            gram[i][j] = edges[i].dot(&edges[j]);
        }
        scale = scale.max(gram[i][i]);
    }
    if scale == 0.0 {
        return false;
    }
    det_small(&gram) > 1e-24 * scale.powi(k as i32)
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() == 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Uniform-grid spatial index over the maximal simplices, so [`locate`]
/// queries touch only nearby candidates.
///
/// [`locate`]: LocateIndex::locate
pub struct LocateIndex<'a> {
    complex: &'a DomainComplex,
    lo: Point,
    cell: f64,
    cells: BTreeMap<Vec<i64>, Vec<usize>>,
}

impl<'a> LocateIndex<'a> {
    pub fn new(complex: &'a DomainComplex) -> LocateIndex<'a> {
        let m = complex.ambient_dim();
        let mut lo = complex.vertices[0].clone();
        let mut hi = complex.vertices[0].clone();
        for v in &complex.vertices {
            for k in 0..m {
                lo.coords[k] = lo.coords[k].min(v.coords[k]);
                hi.coords[k] = hi.coords[k].max(v.coords[k]);
            }
        }
        let cell = complex.mesh().max(1e-12);
        let mut cells: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for (id, s) in complex.maximal.iter().enumerate() {
            let mut slo = complex.vertices[s[0]].clone();
            let mut shi = complex.vertices[s[0]].clone();
            for &vi in s {
                for k in 0..m {
                    slo.coords[k] = slo.coords[k].min(complex.vertices[vi].coords[k]);
                    shi.coords[k] = shi.coords[k].max(complex.vertices[vi].coords[k]);
                }
            }
            let clo: Vec<i64> = (0..m)
                .map(|k| ((slo.coords[k] - lo.coords[k]) / cell).floor() as i64)
                .collect();
            let chi: Vec<i64> = (0..m)
                .map(|k| ((shi.coords[k] - lo.coords[k]) / cell).floor() as i64)
                .collect();
            let mut cursor = clo.clone();
            loop {
                cells.entry(cursor.clone()).or_default().push(id);
                let mut k = 0;
                loop {
                    if k == m {
                        break;
                    }
                    cursor[k] += 1;
                    if cursor[k] <= chi[k] {
                        break;
                    }
                    cursor[k] = clo[k];
                    k += 1;
                }
                if k == m {
                    break;
                }
            }
        }
        LocateIndex {
            complex,
            lo,
            cell,
            cells,
        }
    }

    pub fn locate(&self, x: &Point) -> Result<BaryPoint> {
        let m = self.complex.ambient_dim();
        let key: Vec<i64> = (0..m)
            .map(|k| ((x.coords[k] - self.lo.coords[k]) / self.cell).floor() as i64)
            .collect();
        // The cell of x plus its neighbors covers every simplex within one
        // mesh length, which absorbs boundary rounding.
        let mut candidates: Vec<usize> = Vec::new();
        let mut offsets = vec![vec![0i64; m]];
        for k in 0..m {
            let mut next = Vec::new();
            for o in offsets {
                for d in [-1i64, 0, 1] {
                    let mut o2 = o.clone();
                    o2[k] = d;
                    next.push(o2);
                }
            }
            offsets = next;
        }
        for o in &offsets {
            let k: Vec<i64> = key.iter().zip(o).map(|(a, b)| a + b).collect();
            if let Some(ids) = self.cells.get(&k) {
                candidates.extend_from_slice(ids);
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        self.complex.locate_among(x, candidates)
    }
}
