//! Run artifacts: the structured report, sample and audit CSV files, the
//! nerve export, and an SVG overlay of the selection in value space.
//!
//! The JSON report is byte-deterministic for a fixed scenario and seed;
//! wall-clock timings therefore go to a separate file.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::Shape;
use crate::pipeline::{SampleRecord, Scenario, SelectionResult, Variant};

pub fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::UvInfty => "uv_infty",
        Variant::UvOmega => "uv_omega",
    }
}

/// The deterministic JSON report: stage audits plus the certificate.
pub fn render_report(res: &SelectionResult, sc: &Scenario) -> String {
    let tower_rows: Vec<_> = res
        .tower
        .audit
        .rows
        .iter()
        .map(|r| {
            json!({
                "level": r.level,
                "check": r.check,
                "count": r.count,
                "worst_slack": r.worst_slack,
            })
        })
        .collect();
    let report = json!({
        "scenario": res.scenario_name,
        "variant": variant_name(res.variant),
        "depth": sc.depth,
        "seed": sc.seed,
        "eps_constant": sc.eps.constant,
        "stages": {
            "tower": {
                "levels": res.tower.levels.len(),
                "elements": res.tower.levels.iter().map(|l| l.elements.len()).collect::<Vec<_>>(),
                "clean": res.tower.audit.clean(),
                "audit": tower_rows,
            },
            "refinement": {
                "families": res.selection.sys.families.len(),
                "elements": res.selection.sys.families.iter().map(|f| f.elements.len()).collect::<Vec<_>>(),
                "subdivision_simplices": res.selection.sys.subdivision.maximal_simplices().len(),
                "subdivision_mesh": res.selection.sys.subdivision.mesh(),
            },
            "nerve": {
                "vertices": res.oriented.complex.vertices().len(),
                "simplices": res.oriented.complex.len(),
                "filtration_layers": res.filtration_layers,
            },
            "containment_slack": res.containment_slack,
        },
        "certificate": {
            "sample_count": res.report.records.len(),
            "min_margin": res.report.min_margin,
            "violations": res.report.violations.len(),
            "max_step": res.report.max_step,
        },
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serialization");
    text.push('\n');
    text
}

pub fn render_samples_csv(records: &[SampleRecord]) -> String {
    let m = records[0].x.dim();
    let d = records[0].fx.dim();
    let mut out = String::new();
    for k in 0..m {
        let _ = write!(out, "x{k},");
    }
    for k in 0..d {
        let _ = write!(out, "f{k},");
    }
    out.push_str("dist,eps\n");
    for r in records {
        for c in &r.x.coords {
            let _ = write!(out, "{c},");
        }
        for c in &r.fx.coords {
            let _ = write!(out, "{c},");
        }
        let _ = writeln!(out, "{},{}", r.dist, r.eps);
    }
    out
}

/// Parses a samples CSV back into records (for re-verification).
pub fn parse_samples_csv(text: &str) -> Result<Vec<SampleRecord>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Verification("empty samples file".into()))?;
    let m = header.split(',').filter(|c| c.starts_with('x')).count();
    let d = header.split(',').filter(|c| c.starts_with('f')).count();
    let mut out = Vec::new();
    for (no, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Verification(format!("samples row {}: bad number", no + 2)))
            })
            .collect::<Result<_>>()?;
        if vals.len() != m + d + 2 {
            return Err(Error::Verification(format!(
                "samples row {}: wrong column count",
                no + 2
            )));
        }
        out.push(SampleRecord {
            x: crate::geometry::Point::new(vals[..m].to_vec()),
            fx: crate::geometry::Point::new(vals[m..m + d].to_vec()),
            dist: vals[m + d],
            eps: vals[m + d + 1],
        });
    }
    Ok(out)
}

pub fn render_tower_csv(res: &SelectionResult) -> String {
    let mut out = String::from("level,check,count,worst_slack\n");
    for r in &res.tower.audit.rows {
        let _ = writeln!(out, "{},{},{},{}", r.level, r.check, r.count, r.worst_slack);
    }
    out
}

pub fn render_families_csv(res: &SelectionResult) -> String {
    let mut out = String::from("level,index,vertex,link,star_radius,center\n");
    for fam in &res.selection.sys.families {
        for (i, e) in fam.elements.iter().enumerate() {
            let center = e
                .center
                .coords
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(";");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fam.level, i, e.vertex, e.link, e.star_radius, center
            );
        }
    }
    out
}

fn svg_path(points: &[(f64, f64)], close: bool) -> String {
    let mut d = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        let _ = write!(d, "{}{x:.4} {y:.4} ", if i == 0 { "M" } else { "L" });
    }
    if close {
        d.push('Z');
    }
    d
}

/// Value-space picture: a few traced value shapes along the run plus every
/// selected point f(x).
pub fn render_svg(res: &SelectionResult, sc: &Scenario) -> String {
    let records = &res.report.records;
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |x: f64, y: f64| {
        lo.0 = lo.0.min(x);
        lo.1 = lo.1.min(y);
        hi.0 = hi.0.max(x);
        hi.1 = hi.1.max(y);
    };
    let trace_count = 6.min(records.len());
    let traces: Vec<&SampleRecord> = (0..trace_count)
        .map(|k| &records[k * (records.len() - 1) / trace_count.max(1)])
        .collect();
    for r in traces.iter() {
        let (a, b) = sc.map.eval(&r.x).bounding_box();
        grow(a.coords[0], a.coords[1]);
        grow(b.coords[0], b.coords[1]);
    }
    for r in records.iter() {
        grow(r.fx.coords[0], r.fx.coords[1]);
    }
    let w = (hi.0 - lo.0).max(1e-9);
    let h = (hi.1 - lo.1).max(1e-9);
    let scale = 640.0 / w.max(h);
    let to = |p: &crate::geometry::Point| {
        (
            (p.coords[0] - lo.0) * scale + 20.0,
            (hi.1 - p.coords[1]) * scale + 20.0,
        )
    };

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\">\n",
        w * scale + 40.0,
        h * scale + 40.0
    );
    for r in traces {
        let shape = sc.map.eval(&r.x);
        match &shape {
            Shape::Ball { center, radius } => {
                let (cx, cy) = to(center);
                let _ = writeln!(
                    svg,
                    "  <circle cx=\"{cx:.4}\" cy=\"{cy:.4}\" r=\"{:.4}\" fill=\"none\" stroke=\"#9ecae1\"/>",
                    radius * scale
                );
            }
            _ => {
                let pts: Vec<(f64, f64)> =
                    shape.vertices().unwrap().iter().map(&to).collect();
                let _ = writeln!(
                    svg,
                    "  <path d=\"{}\" fill=\"none\" stroke=\"#9ecae1\"/>",
                    svg_path(&pts, true)
                );
            }
        }
    }
    let pts: Vec<(f64, f64)> = records.iter().map(|r| to(&r.fx)).collect();
    for (x, y) in &pts {
        let _ = writeln!(svg, "  <circle cx=\"{x:.4}\" cy=\"{y:.4}\" r=\"1.2\" fill=\"#d62728\"/>");
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes all artifacts of a run into `out_dir`.
pub fn write_artifacts(res: &SelectionResult, sc: &Scenario, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("report.json"), render_report(res, sc))?;
    std::fs::write(
        out_dir.join("samples.csv"),
        render_samples_csv(&res.report.records),
    )?;
    std::fs::write(out_dir.join("tower_audit.csv"), render_tower_csv(res))?;
    std::fs::write(out_dir.join("families.csv"), render_families_csv(res))?;
    std::fs::write(out_dir.join("nerve.txt"), res.oriented.to_text())?;
    if sc.domain.ambient_dim() <= 2 {
        std::fs::write(out_dir.join("selection.svg"), render_svg(res, sc))?;
    }
    Ok(())
}
