//! Towers of open ball covers of the domain whose elements carry inflated
//! approximations of the mapping's values, with the delta/epsilon
//! bookkeeping that makes the later gluing steps certifiable.
//!
//! Level data per element `U` with anchor `a = π(U)`:
//! `Φ(U) = O_{δ(U)}(φ(a))` and `Ψ(U) = O_{ε(U)}(φ(a))`, with `δ = ε/2`,
//! the element radius small enough that `H(φ(p), φ(q)) < δ/2` inside `U`,
//! and `ε` at level `n+1` at most a third of every reachable `δ` at level
//! `n`.  Those inequalities give the two audited inclusions:
//! `Ψ_n(U) ⊂ O_{ε(p)}(φ(p))` for `p ∈ U`, and `Ψ_k(V) ⊂ Φ_n(U)` for
//! `k > n` with `V ∩ U ≠ ∅`.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{directed_hausdorff, hausdorff, DomainComplex, InflatedShape, Point};
use crate::mapping::{SetValuedMap, UvWitness};
use crate::scalar::AffineFn;

/// One open metric ball `U` of a cover level, with its certified data.
#[derive(Clone, Debug)]
pub struct CoverElement {
    /// `π(U)`: the anchor vertex, also the evaluation point of `φ`.
    pub anchor: Point,
    pub radius: f64,
    pub delta: f64,
    pub eps: f64,
    /// `O_delta(φ(anchor))`.
    pub phi_shape: InflatedShape,
    /// `O_eps(φ(anchor))`.
    pub psi_shape: InflatedShape,
    /// Index of a containing element one level up (refinement link).
    pub parent: Option<usize>,
}

impl CoverElement {
    pub fn contains(&self, x: &Point) -> bool {
        x.dist(&self.anchor) < self.radius
    }

    pub fn intersects(&self, other: &CoverElement) -> bool {
        self.anchor.dist(&other.anchor) < self.radius + other.radius
    }
}

#[derive(Clone, Debug)]
pub struct TowerLevel {
    pub elements: Vec<CoverElement>,
    /// The refined complex whose vertices anchor this level's elements.
    pub anchors: DomainComplex,
}

/// One audited inequality family, with the worst observed slack
/// (`checked value − bound`; negative means satisfied).
#[derive(Clone, Debug)]
pub struct AuditRow {
    pub level: usize,
    pub check: &'static str,
    pub count: usize,
    pub worst_slack: f64,
}

#[derive(Clone, Debug, Default)]
pub struct TowerAudit {
    pub rows: Vec<AuditRow>,
}

impl TowerAudit {
    pub fn clean(&self) -> bool {
        self.rows.iter().all(|r| r.worst_slack <= 1e-12)
    }
}

#[derive(Clone, Debug)]
pub struct Tower {
    pub levels: Vec<TowerLevel>,
    pub audit: TowerAudit,
}

/// Uniform hash grid over element anchors for radius queries.
pub struct AnchorGrid {
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
    anchors: Vec<Point>,
}

impl AnchorGrid {
    pub fn new(anchors: Vec<Point>, cell: f64) -> AnchorGrid {
        assert!(cell > 0.0);
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, a) in anchors.iter().enumerate() {
            let key: Vec<i64> = a.coords.iter().map(|c| (c / cell).floor() as i64).collect();
            cells.entry(key).or_default().push(i);
        }
        AnchorGrid {
            cell,
            cells,
            anchors,
        }
    }

    /// Indices of anchors within distance `r` of `x` (no false negatives).
    pub fn within(&self, x: &Point, r: f64) -> Vec<usize> {
        let m = x.dim();
        let lo: Vec<i64> = x
            .coords
            .iter()
            .map(|c| ((c - r) / self.cell).floor() as i64)
            .collect();
        let hi: Vec<i64> = x
            .coords
            .iter()
            .map(|c| ((c + r) / self.cell).floor() as i64)
            .collect();
        let mut out = Vec::new();
        let mut cursor = lo.clone();
        loop {
            if let Some(ids) = self.cells.get(&cursor) {
                for &i in ids {
                    if self.anchors[i].dist(x) <= r {
                        out.push(i);
                    }
                }
            }
            let mut k = 0;
            loop {
                if k == m {
                    break;
                }
                cursor[k] += 1;
                if cursor[k] <= hi[k] {
                    break;
                }
                cursor[k] = lo[k];
                k += 1;
            }
            if k == m {
                break;
            }
        }
        out
    }
}

/// Open cover of the domain by balls at the vertices of `k`, each paired
/// with a bound `δ(V)` that stays below `eps_fn` everywhere on the element:
/// `δ(V) = (eps_fn(anchor) − L·r)/2` with `L` the Lipschitz bound of
/// `eps_fn`.  The radius auto-shrinks until the bound is positive.
pub fn bound_function_cover(
    eps_fn: &AffineFn,
    k: &DomainComplex,
    radius: f64,
) -> Result<Vec<(Point, f64, f64)>> {
    assert!(radius > 0.0);
    let l = eps_fn.lipschitz();
    let mut out = Vec::with_capacity(k.vertices().len());
    for a in k.vertices() {
        let mut r = radius;
        while eps_fn.eval(a) - l * r <= 0.0 {
            r /= 2.0;
            if r < 1e-12 {
                return Err(Error::RadiusUnderflow(r));
            }
        }
        let delta = (eps_fn.eval(a) - l * r) / 2.0;
        out.push((a.clone(), r, delta));
    }
    Ok(out)
}

/// The local step at one point: a shrink target `δ_x = ε/8` and a ball
/// radius `r` with `ω(2r) < δ_x/4`, so any two points of the ball see
/// values at Hausdorff distance under `δ_x/2`.
pub fn local_uv_level(
    phi: &SetValuedMap,
    w: &UvWitness,
    eps: f64,
    x: Point,
    max_radius: f64,
) -> Result<(f64, (Point, f64))> {
    assert!(eps > 0.0 && max_radius > 0.0);
    let delta_x = w.delta_of(w.delta_of(eps / 2.0));
    debug_assert_eq!(delta_x, eps / 8.0);
    let r = phi.radius_for(delta_x / 4.0, 2.0 * max_radius)? / 2.0;
    Ok((delta_x, (x, r)))
}

/// Maximum admissible element radius at anchor `a` for level data
/// `(eps, delta)`, independent of the anchor complex mesh.
fn element_radius(
    phi: &SetValuedMap,
    delta: f64,
    caps: &[f64],
) -> Result<f64> {
    let cap = caps.iter().fold(f64::INFINITY, |x, &y| x.min(y));
    assert!(cap.is_finite() && cap > 0.0);
    // ω(2R) < δ/2 keeps values across the element within δ/2 of each other.
    Ok(phi.radius_for(delta / 2.0, 2.0 * cap)? / 2.0)
}

struct LevelPlan {
    eps: Vec<f64>,
    delta: Vec<f64>,
    radius: Vec<f64>,
    parent: Vec<Option<usize>>,
}

/// Per-anchor level data for a refinement of `prev` anchored at the
/// vertices of `anchors`.
fn plan_level(
    phi: &SetValuedMap,
    w: &UvWitness,
    prev: &TowerLevel,
    anchors: &DomainComplex,
) -> Result<LevelPlan> {
    let min_prev_r = prev
        .elements
        .iter()
        .map(|e| e.radius)
        .fold(f64::INFINITY, f64::min);
    let r_cap = 0.5 * min_prev_r;
    let max_prev_r = prev
        .elements
        .iter()
        .map(|e| e.radius)
        .fold(0.0, f64::max);
    let grid = AnchorGrid::new(
        prev.elements.iter().map(|e| e.anchor.clone()).collect(),
        max_prev_r.max(1e-12),
    );
    let mut plan = LevelPlan {
        eps: Vec::new(),
        delta: Vec::new(),
        radius: Vec::new(),
        parent: Vec::new(),
    };
    for a in anchors.vertices() {
        let nearby = grid.within(a, max_prev_r + r_cap);
        // Any previous element the new one could intersect must cap eps.
        let mut eps_new = f64::INFINITY;
        let mut parent = None;
        let mut clearance: f64 = 0.0;
        for &i in &nearby {
            let u = &prev.elements[i];
            let d = a.dist(&u.anchor);
            if d < u.radius + r_cap {
                eps_new = eps_new.min(u.delta / 3.0);
            }
            if d < u.radius && u.radius - d > clearance {
                clearance = u.radius - d;
                parent = Some(i);
            }
        }
        let parent = parent.ok_or_else(|| {
            Error::audit("tower", format!("anchor {:?} not covered by previous level", a.coords))
        })?;
        assert!(eps_new.is_finite());
        let delta_new = w.delta_of(eps_new);
        let r = element_radius(phi, delta_new, &[r_cap, 0.999 * clearance])?;
        plan.eps.push(eps_new);
        plan.delta.push(delta_new);
        plan.radius.push(r);
        plan.parent.push(Some(parent));
    }
    Ok(plan)
}

fn finish_level(
    phi: &SetValuedMap,
    anchors: DomainComplex,
    plan: LevelPlan,
) -> TowerLevel {
    let elements = anchors
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let value = phi.eval(a);
            CoverElement {
                anchor: a.clone(),
                radius: plan.radius[i],
                delta: plan.delta[i],
                eps: plan.eps[i],
                phi_shape: InflatedShape::new(value.clone(), plan.delta[i]),
                psi_shape: InflatedShape::new(value, plan.eps[i]),
                parent: plan.parent[i],
            }
        })
        .collect();
    TowerLevel { elements, anchors }
}

const REFINE_BUDGET: usize = 40;
/// Hard cap on anchors per level; an unreachable tolerance fails here
/// instead of exhausting memory.
const ANCHOR_BUDGET: usize = 500_000;

fn check_anchor_budget(anchors: &DomainComplex, target_mesh: f64) -> Result<()> {
    if anchors.vertices().len() > ANCHOR_BUDGET {
        return Err(Error::SubdivisionBudget {
            required: target_mesh,
            reached: anchors.mesh(),
        });
    }
    Ok(())
}
/// Anchor meshes are driven below this fraction of the smallest element
/// radius, so every domain point lies well inside some element.
pub(crate) const COVER_MARGIN: f64 = 0.7;

/// Builds the next level: refine the anchor complex until its mesh fits
/// under the planned radii, then realize the elements.
pub fn refine_level(
    prev: &TowerLevel,
    phi: &SetValuedMap,
    w: &UvWitness,
) -> Result<TowerLevel> {
    let mut anchors = prev.anchors.clone();
    for _ in 0..REFINE_BUDGET {
        let plan = plan_level(phi, w, prev, &anchors)?;
        let min_r = plan.radius.iter().fold(f64::INFINITY, |x, &y| x.min(y));
        if anchors.mesh() <= COVER_MARGIN * min_r {
            return Ok(finish_level(phi, anchors, plan));
        }
        check_anchor_budget(&anchors, COVER_MARGIN * min_r)?;
        anchors = anchors.edge_refine();
    }
    Err(Error::SubdivisionBudget {
        required: 0.0,
        reached: anchors.mesh(),
    })
}

fn base_level(
    phi: &SetValuedMap,
    w: &UvWitness,
    eps_fn: &AffineFn,
    domain: &DomainComplex,
) -> Result<TowerLevel> {
    let l_eps = eps_fn.lipschitz();
    let diameter = {
        let vs = domain.vertices();
        let mut d: f64 = 0.0;
        for (i, a) in vs.iter().enumerate() {
            for b in &vs[i + 1..] {
                d = d.max(a.dist(b));
            }
        }
        d.max(domain.mesh())
    };
    let mut anchors = domain.clone();
    for _ in 0..REFINE_BUDGET {
        let mut eps = Vec::new();
        let mut delta = Vec::new();
        let mut radius = Vec::new();
        for a in anchors.vertices() {
            let e = eps_fn.eval(a);
            if e <= 0.0 {
                return Err(Error::Config(format!(
                    "eps bound nonpositive at {:?}",
                    a.coords
                )));
            }
            // eps/4 leaves half of the pointwise budget for the variation
            // of eps_fn and of φ across the element.
            let e0 = e / 4.0;
            let d0 = w.delta_of(e0);
            let mut caps = vec![diameter];
            if l_eps > 0.0 {
                caps.push(e / (2.0 * l_eps));
            }
            let r = element_radius(phi, d0, &caps)?;
            eps.push(e0);
            delta.push(d0);
            radius.push(r);
        }
        let min_r = radius.iter().fold(f64::INFINITY, |x, &y| x.min(y));
        if anchors.mesh() <= COVER_MARGIN * min_r {
            let plan = LevelPlan {
                eps,
                delta,
                radius,
                parent: vec![None; anchors.vertices().len()],
            };
            return Ok(finish_level(phi, anchors, plan));
        }
        check_anchor_budget(&anchors, COVER_MARGIN * min_r)?;
        anchors = anchors.edge_refine();
    }
    Err(Error::SubdivisionBudget {
        required: 0.0,
        reached: anchors.mesh(),
    })
}

/// Builds a `depth`-level tower and runs the full inequality audit;
/// any violation aborts construction.
pub fn build_tower<R: Rng>(
    phi: &SetValuedMap,
    w: &UvWitness,
    eps_fn: &AffineFn,
    domain: &DomainComplex,
    depth: usize,
    rng: &mut R,
) -> Result<Tower> {
    if depth < domain.dim() + 1 {
        return Err(Error::InvalidArgument(format!(
            "tower depth {depth} below domain dimension + 1"
        )));
    }
    let mut levels = vec![base_level(phi, w, eps_fn, domain)?];
    for _ in 1..depth {
        let next = refine_level(levels.last().unwrap(), phi, w)?;
        levels.push(next);
    }
    let audit = audit_tower(&levels, phi, w, eps_fn, domain, rng)?;
    Ok(Tower { levels, audit })
}

const SLACK: f64 = 1e-12;

fn push_row(audit: &mut TowerAudit, row: AuditRow) -> Result<()> {
    let bad = row.worst_slack > SLACK;
    let detail = format!(
        "level {} {}: worst slack {:e} over {} checks",
        row.level, row.check, row.worst_slack, row.count
    );
    audit.rows.push(row);
    if bad {
        return Err(Error::audit("tower", detail));
    }
    Ok(())
}

fn audit_tower<R: Rng>(
    levels: &[TowerLevel],
    phi: &SetValuedMap,
    w: &UvWitness,
    eps_fn: &AffineFn,
    domain: &DomainComplex,
    rng: &mut R,
) -> Result<TowerAudit> {
    let mut audit = TowerAudit::default();
    let volumes = domain.simplex_volumes();
    let grids: Vec<AnchorGrid> = levels
        .iter()
        .map(|lv| {
            let max_r = lv.elements.iter().map(|e| e.radius).fold(0.0, f64::max);
            AnchorGrid::new(
                lv.elements.iter().map(|e| e.anchor.clone()).collect(),
                max_r.max(1e-12),
            )
        })
        .collect();
    let max_radius: Vec<f64> = levels
        .iter()
        .map(|lv| lv.elements.iter().map(|e| e.radius).fold(0.0, f64::max))
        .collect();

    for (n, lv) in levels.iter().enumerate() {
        // Coverage: every sampled domain point lies inside some element.
        let mut worst = f64::NEG_INFINITY;
        let count = 10_000;
        for _ in 0..count {
            let x = domain.point_of(&domain.sample_point(rng, &volumes));
            let best = grids[n]
                .within(&x, max_radius[n])
                .into_iter()
                .map(|i| x.dist(&lv.elements[i].anchor) - lv.elements[i].radius)
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
        push_row(
            &mut audit,
            AuditRow {
                level: n,
                check: "coverage",
                count,
                worst_slack: worst,
            },
        )?;

        // delta ≤ eps and anchor membership are structural; assert cheaply.
        let mut worst = f64::NEG_INFINITY;
        for e in &lv.elements {
            worst = worst.max(e.delta - e.eps);
        }
        push_row(
            &mut audit,
            AuditRow {
                level: n,
                check: "delta_le_eps",
                count: lv.elements.len(),
                worst_slack: worst,
            },
        )?;

        // (i) Ψ_n(U) ⊂ O_{eps_fn(p)}(φ(p)) at sampled p ∈ U, via
        // dh(φ(anchor), φ(p)) + eps(U) < eps_fn(p).
        let mut worst = f64::NEG_INFINITY;
        let count = 1_000;
        for _ in 0..count {
            let i = rng.random_range(0..lv.elements.len());
            let e = &lv.elements[i];
            let p = sample_in_element(domain, e, rng)?;
            let dh = directed_hausdorff(&e.psi_shape.base, &phi.eval(&p));
            worst = worst.max(dh + e.eps - eps_fn.eval(&p));
        }
        push_row(
            &mut audit,
            AuditRow {
                level: n,
                check: "psi_inside_pointwise_eps",
                count,
                worst_slack: worst,
            },
        )?;

        // Φ_n(U) ⊂* Ψ_n(U): the witness contraction stays inside Ψ.
        let mut worst = f64::NEG_INFINITY;
        let count = 1_000;
        for _ in 0..count {
            let i = rng.random_range(0..lv.elements.len());
            let e = &lv.elements[i];
            let c = w.contraction_for(e.phi_shape.base.clone(), e.delta, e.eps)?;
            let y = sample_near_shape(&e.phi_shape, rng);
            let t = rng.random_range(0.0..=1.0);
            let z = c.apply(&y, t);
            worst = worst.max(e.phi_shape.base.dist_point(&z) - e.eps);
        }
        push_row(
            &mut audit,
            AuditRow {
                level: n,
                check: "phi_contracts_in_psi",
                count,
                worst_slack: worst,
            },
        )?;
    }

    // Cross-level checks over every intersecting pair with k > n.
    for n in 0..levels.len() {
        for k in n + 1..levels.len() {
            let mut worst_incl = f64::NEG_INFINITY;
            let mut worst_chain = f64::NEG_INFINITY;
            let mut worst_tri = f64::NEG_INFINITY;
            let mut count = 0;
            for v in &levels[k].elements {
                for i in grids[n].within(&v.anchor, max_radius[n] + v.radius) {
                    let u = &levels[n].elements[i];
                    if !v.intersects(u) {
                        continue;
                    }
                    count += 1;
                    // (ii) Ψ_k(V) ⊂ Φ_n(U).
                    let dh = directed_hausdorff(&v.psi_shape.base, &u.phi_shape.base);
                    worst_incl = worst_incl.max(dh + v.eps - u.delta);
                    // Chain: eps_k(V) ≤ eps_{n+1}(V_{n+1}) ≤ delta_n(U)/3.
                    let vn1 = ancestor_at(levels, k, v, n + 1);
                    worst_chain = worst_chain
                        .max(v.eps - vn1.eps)
                        .max(vn1.eps - u.delta / 3.0);
                    // Triangle bookkeeping of the construction.
                    let h = hausdorff(&v.psi_shape.base, &u.phi_shape.base);
                    worst_tri = worst_tri.max(h - 2.0 * u.delta / 3.0);
                }
            }
            push_row(
                &mut audit,
                AuditRow {
                    level: k,
                    check: "psi_inside_coarser_phi",
                    count,
                    worst_slack: worst_incl,
                },
            )?;
            push_row(
                &mut audit,
                AuditRow {
                    level: k,
                    check: "eps_chain_thirds",
                    count,
                    worst_slack: worst_chain,
                },
            )?;
            push_row(
                &mut audit,
                AuditRow {
                    level: k,
                    check: "anchor_value_proximity",
                    count,
                    worst_slack: worst_tri,
                },
            )?;
        }
    }
    Ok(audit)
}

/// Walks refinement links from a level-`k` element up to level `target`.
fn ancestor_at<'a>(
    levels: &'a [TowerLevel],
    k: usize,
    e: &'a CoverElement,
    target: usize,
) -> &'a CoverElement {
    let mut lvl = k;
    let mut cur = e;
    while lvl > target {
        let p = cur.parent.expect("refinement link present above level 0");
        lvl -= 1;
        cur = &levels[lvl].elements[p];
    }
    cur
}

/// Uniform sample of `U ∩ X` by rejection from the ball around the anchor.
fn sample_in_element<R: Rng>(
    domain: &DomainComplex,
    e: &CoverElement,
    rng: &mut R,
) -> Result<Point> {
    let m = e.anchor.dim();
    for _ in 0..200 {
        let p = Point::new(
            (0..m)
                .map(|i| e.anchor.coords[i] + rng.random_range(-e.radius..e.radius))
                .collect(),
        );
        if p.dist(&e.anchor) < e.radius && domain.locate(&p).is_ok() {
            return Ok(p);
        }
    }
    // The anchor itself is always a valid fallback.
    Ok(e.anchor.clone())
}

/// Random point of the open inflation of a shape, by rejection from the
/// inflated bounding box.
pub fn sample_near_shape<R: Rng>(s: &InflatedShape, rng: &mut R) -> Point {
    let (lo, hi) = s.base.bounding_box();
    let d = lo.dim();
    loop {
        let p = Point::new(
            (0..d)
                .map(|i| {
                    rng.random_range(lo.coords[i] - s.radius..hi.coords[i] + s.radius)
                })
                .collect(),
        );
        if s.base.dist_point(&p) < s.radius {
            return p;
        }
    }
}
