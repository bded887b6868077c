//! End-to-end construction and certification of ε-selections.
//!
//! A run takes a scenario (domain, set-valued map, tolerance function) and
//! chains the stages: cover tower, disjoint star refinement, oriented
//! nerve, contraction table, glued or skeleton-built nerve map, and the
//! final sampled certificate dist(f(x), φ(x)) < ε(x).  Every stage audits
//! its own inequalities; a result is returned only with a clean
//! certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cover_tower::{build_tower, Tower};
use crate::disjoint_refine::{disjoint_refinements, RefinementSystem};
use crate::error::{Error, Result};
use crate::geometry::{DomainComplex, LocateIndex, Point};
use crate::homotopy::{glue, min_sigma_containment, skeleton_extend, ContractionTable, NerveMap};
use crate::mapping::{Contraction, SetValuedMap};
use crate::nerve::{
    filtration, nerve, nerve_levels, nerve_point_from, orient_by_level, verify_filtration,
    OrientedComplex,
};
use crate::scalar::AffineFn;

/// Which extension theorem drives the nerve-map construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Contractions of full neighborhoods; the nerve map is glued from
    /// per-simplex recursions.
    UvInfty,
    /// Finite-dimensional extension down the skeleton filtration.
    UvOmega,
}

/// A full problem instance plus run parameters.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub domain: DomainComplex,
    pub map: SetValuedMap,
    pub eps: AffineFn,
    pub variant: Variant,
    pub depth: usize,
    /// Verification sample count.
    pub samples: usize,
    /// Sample count per nerve simplex for the containment audit.
    pub containment_samples: usize,
    pub seed: u64,
}

impl Scenario {
    fn with_map(name: &str, domain: DomainComplex, map: SetValuedMap) -> Scenario {
        Scenario {
            name: name.to_string(),
            domain,
            map,
            eps: AffineFn::constant(0.3),
            variant: Variant::UvInfty,
            depth: 3,
            samples: 10_000,
            containment_samples: 4,
            seed: 17,
        }
    }

    /// Unit disk translating along the first coordinate over [0,1].
    pub fn translating_disk() -> Scenario {
        let base = crate::geometry::Shape::ball(Point::zeros(2), 1.0).unwrap();
        Scenario::with_map(
            "translating_disk",
            DomainComplex::interval(0.0, 1.0),
            SetValuedMap::translating(base, vec![Point::new(vec![1.0, 0.0])]),
        )
    }

    /// Convex hexagon scaling slowly with the first coordinate over [0,1]².
    pub fn scaling_polygon() -> Scenario {
        let verts = (0..6)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 6.0;
                Point::new(vec![a.cos(), a.sin()])
            })
            .collect();
        let base = crate::geometry::Shape::convex_polytope(verts).unwrap();
        Scenario::with_map(
            "scaling_polygon",
            DomainComplex::square(0.0, 1.0),
            SetValuedMap::scaling(base, AffineFn::new(1.0, vec![0.001, 0.0]), Point::zeros(2)),
        )
    }

    /// Five-pointed star rotating slowly with the first coordinate over [0,1]².
    pub fn rotating_star() -> Scenario {
        let mut verts = Vec::new();
        for k in 0..10 {
            let a = std::f64::consts::TAU * k as f64 / 10.0;
            let r = if k % 2 == 0 { 1.0 } else { 0.45 };
            verts.push(Point::new(vec![r * a.cos(), r * a.sin()]));
        }
        let base = crate::geometry::Shape::star_polygon(verts, Point::zeros(2)).unwrap();
        Scenario::with_map(
            "rotating_star",
            DomainComplex::square(0.0, 1.0),
            SetValuedMap::rotating_star(base, AffineFn::new(0.0, vec![0.001, 0.0]), Point::zeros(2)),
        )
    }

    pub fn builtin(name: &str) -> Option<Scenario> {
        match name {
            "translating_disk" => Some(Scenario::translating_disk()),
            "scaling_polygon" => Some(Scenario::scaling_polygon()),
            "rotating_star" => Some(Scenario::rotating_star()),
            _ => None,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["translating_disk", "scaling_polygon", "rotating_star"]
    }

    fn validate(&self) -> Result<()> {
        let m = self.domain.ambient_dim();
        let value_dim = self.map.eval(&self.domain.vertices()[0]).dim();
        for v in self.domain.vertices() {
            if v.dim() != m || self.map.eval(v).dim() != value_dim {
                return Err(Error::Config("inconsistent dimensions".into()));
            }
            if self.eps.eval(v) <= 0.0 {
                return Err(Error::Config(format!(
                    "tolerance not positive at {:?}",
                    v.coords
                )));
            }
        }
        if self.samples == 0 || self.containment_samples == 0 {
            return Err(Error::Config("sample counts must be positive".into()));
        }
        Ok(())
    }
}

/// The selection f = h ∘ g: canonical map into the nerve, then the built
/// nerve map.
pub struct SelectionMap {
    pub sys: RefinementSystem,
    pub h: NerveMap,
}

impl SelectionMap {
    pub fn eval(&self, x: &Point) -> Result<Point> {
        self.h.eval(&crate::nerve::canonical_map(&self.sys, x)?)
    }

    /// Batch evaluation through a shared spatial index.
    pub fn eval_batch(&self, xs: &[Point]) -> Result<Vec<Point>> {
        let index = LocateIndex::new(&self.sys.subdivision);
        xs.iter()
            .map(|x| self.h.eval(&nerve_point_from(&self.sys, &index.locate(x)?)?))
            .collect()
    }
}

/// One verification sample.
#[derive(Clone, Debug)]
pub struct SampleRecord {
    pub x: Point,
    pub fx: Point,
    /// dist(f(x), φ(x)).
    pub dist: f64,
    /// ε(x); the margin is `eps - dist`.
    pub eps: f64,
}

impl SampleRecord {
    pub fn margin(&self) -> f64 {
        self.eps - self.dist
    }
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub records: Vec<SampleRecord>,
    pub min_margin: f64,
    /// Indices of records with non-positive margin.
    pub violations: Vec<usize>,
    /// Largest image step between consecutive samples in coordinate
    /// order; reported for continuity inspection, never asserted.
    pub max_step: f64,
}

/// Certifies `f` against the map and tolerance on the given samples.
pub fn verify_selection(
    f: &dyn Fn(&Point) -> Result<Point>,
    phi: &SetValuedMap,
    eps_fn: &AffineFn,
    samples: &[Point],
) -> Result<VerificationReport> {
    let mut records = Vec::with_capacity(samples.len());
    for x in samples {
        let fx = f(x)?;
        let dist = phi.eval(x).dist_point(&fx);
        records.push(SampleRecord {
            x: x.clone(),
            fx,
            dist,
            eps: eps_fn.eval(x),
        });
    }
    let min_margin = records
        .iter()
        .map(SampleRecord::margin)
        .fold(f64::INFINITY, f64::min);
    let violations = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.margin() <= 0.0)
        .map(|(i, _)| i)
        .collect();
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&i, &j| {
        records[i]
            .x
            .coords
            .partial_cmp(&records[j].x.coords)
            .unwrap()
    });
    let max_step = order
        .windows(2)
        .map(|w| records[w[0]].fx.dist(&records[w[1]].fx))
        .fold(0.0, f64::max);
    Ok(VerificationReport {
        records,
        min_margin,
        violations,
        max_step,
    })
}

pub struct SelectionResult {
    pub scenario_name: String,
    pub variant: Variant,
    pub selection: SelectionMap,
    pub tower: Tower,
    pub oriented: OrientedComplex,
    pub report: VerificationReport,
    /// Worst slack of the nerve-map containment audit (positive = clean).
    pub containment_slack: f64,
    pub filtration_layers: usize,
}

/// Per-vertex contractions: each family element inherits the inflated
/// value neighborhoods of its linked tower element, contracted straight
/// to the star center of the value shape there.
fn contraction_table(sys: &RefinementSystem, tower: &Tower) -> ContractionTable {
    let mut table = ContractionTable::default();
    for (v, &(level, index)) in sys.vertex_family.iter().enumerate() {
        let elem = sys.element(level, index);
        let u = &tower.levels[level].elements[elem.link];
        let target = u.phi_shape.base.star_center().clone();
        table.insert(
            v as u32,
            u.phi_shape.clone(),
            u.psi_shape.clone(),
            Contraction {
                source: u.phi_shape.clone(),
                target_point: target,
            },
        );
    }
    table
}

/// Builds and certifies a selection for `sc` with the glued construction.
pub fn select_c_space(sc: &Scenario) -> Result<SelectionResult> {
    if sc.variant != Variant::UvInfty {
        return Err(Error::InvalidArgument(
            "select_c_space expects the uv_infty variant".into(),
        ));
    }
    run_pipeline(sc)
}

/// Builds and certifies a selection for `sc` via the skeleton filtration.
pub fn select_finite_c(sc: &Scenario) -> Result<SelectionResult> {
    if sc.variant != Variant::UvOmega {
        return Err(Error::InvalidArgument(
            "select_finite_c expects the uv_omega variant".into(),
        ));
    }
    run_pipeline(sc)
}

pub fn run_pipeline(sc: &Scenario) -> Result<SelectionResult> {
    sc.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let witness = crate::mapping::straight_line_witness(&sc.map);
    let tower = build_tower(&sc.map, &witness, &sc.eps, &sc.domain, sc.depth, &mut rng)?;
    let sys = disjoint_refinements(&tower, &sc.domain)?;
    let oriented = orient_by_level(nerve(&sys), nerve_levels(&sys))?;
    let filt = filtration(&oriented);
    verify_filtration(&oriented, &filt)?;
    let table = contraction_table(&sys, &tower);
    let h = match sc.variant {
        Variant::UvInfty => glue(&oriented, table)?,
        Variant::UvOmega => skeleton_extend(&oriented, &filt, table)?,
    };
    let containment_slack =
        min_sigma_containment(&h, &oriented, sc.containment_samples, &mut rng)?;
    if containment_slack <= 0.0 {
        return Err(Error::audit(
            "containment",
            format!("nerve image containment slack {containment_slack:e}"),
        ));
    }
    let selection = SelectionMap { sys, h };

    let samples = sample_grid(&sc.domain, sc.samples, &mut rng);
    support_audit(&selection, &tower, &samples)?;
    let index = LocateIndex::new(&selection.sys.subdivision);
    let eval = |x: &Point| -> Result<Point> {
        selection
            .h
            .eval(&nerve_point_from(&selection.sys, &index.locate(x)?)?)
    };
    let report = verify_selection(&eval, &sc.map, &sc.eps, &samples)?;
    drop(index);
    if !report.violations.is_empty() {
        return Err(Error::audit(
            "certificate",
            format!(
                "{} of {} samples violate the tolerance, min margin {:e}",
                report.violations.len(),
                report.records.len(),
                report.min_margin
            ),
        ));
    }
    Ok(SelectionResult {
        scenario_name: sc.name.clone(),
        variant: sc.variant,
        selection,
        tower,
        oriented,
        report,
        containment_slack,
        filtration_layers: filt.layers.len(),
    })
}

/// Domain vertices plus volume-weighted random interior points.
pub fn sample_grid<R: Rng>(domain: &DomainComplex, n: usize, rng: &mut R) -> Vec<Point> {
    let volumes = domain.simplex_volumes();
    let mut out: Vec<Point> = domain.vertices().to_vec();
    while out.len() < n {
        out.push(domain.point_of(&domain.sample_point(rng, &volumes)));
    }
    out.truncate(n.max(domain.vertices().len()));
    out
}

/// Every support star of the canonical map must contain its sample, and
/// so must the tower element linked to the minimal support vertex.
fn support_audit(sel: &SelectionMap, tower: &Tower, samples: &[Point]) -> Result<()> {
    let index = LocateIndex::new(&sel.sys.subdivision);
    for x in samples.iter().take(1000) {
        let bp = index.locate(x)?;
        let np = nerve_point_from(&sel.sys, &bp)?;
        for &v in &np.simplex {
            if sel.sys.star_weight(&bp, v as usize) <= 0.0 {
                return Err(Error::audit(
                    "support",
                    format!("support star {v} misses sample {:?}", x.coords),
                ));
            }
            let (level, index) = sel.sys.vertex_family[v as usize];
            let elem = sel.sys.element(level, index);
            if !tower.levels[level].elements[elem.link].contains(x) {
                return Err(Error::audit(
                    "support",
                    format!("linked element of star {v} misses sample {:?}", x.coords),
                ));
            }
        }
    }
    Ok(())
}
