//! Flat `key=value` run configuration with `domain.`, `map.`, `eps.` and
//! `run.` prefixes, mapped onto a pipeline scenario.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{DomainComplex, Point, Shape};
use crate::mapping::SetValuedMap;
use crate::pipeline::{Scenario, Variant};
use crate::scalar::AffineFn;

/// Parsed configuration: the scenario plus artifact settings.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub out_dir: PathBuf,
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", no + 1)))?;
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {k}", no + 1)));
        }
    }
    Ok(map)
}

struct Keys {
    map: BTreeMap<String, String>,
    used: std::cell::RefCell<Vec<String>>,
}

impl Keys {
    fn get(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().push(key.to_string());
        self.map.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing key {key}")))
    }

    fn float(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key}: not a number: {v}"))),
        }
    }

    fn int(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("{key}: not an integer: {v}"))),
        }
    }

    fn unknown(&self) -> Option<String> {
        let used = self.used.borrow();
        self.map.keys().find(|k| !used.contains(k)).cloned()
    }
}

fn base_shape(keys: &Keys) -> Result<Shape> {
    match keys.get("map.shape").unwrap_or("disk") {
        "disk" => Shape::ball(Point::zeros(2), keys.float("map.radius", 1.0)?),
        "hexagon" => {
            let r = keys.float("map.radius", 1.0)?;
            Shape::convex_polytope(
                (0..6)
                    .map(|k| {
                        let a = std::f64::consts::TAU * k as f64 / 6.0;
                        Point::new(vec![r * a.cos(), r * a.sin()])
                    })
                    .collect(),
            )
        }
        "star" => {
            let r = keys.float("map.radius", 1.0)?;
            Shape::star_polygon(
                (0..10)
                    .map(|k| {
                        let a = std::f64::consts::TAU * k as f64 / 10.0;
                        let s = if k % 2 == 0 { r } else { 0.45 * r };
                        Point::new(vec![s * a.cos(), s * a.sin()])
                    })
                    .collect(),
                Point::zeros(2),
            )
        }
        other => Err(Error::Config(format!("map.shape: unknown shape {other}"))),
    }
}

fn coeffs_for(rate: f64, input_dim: usize) -> Vec<f64> {
    let mut c = vec![0.0; input_dim];
    c[0] = rate;
    c
}

/// Builds the configuration from config text, relative to `dir` for file
/// references.
pub fn parse_config(text: &str, dir: &Path) -> Result<RunConfig> {
    let keys = Keys {
        map: parse_pairs(text)?,
        used: std::cell::RefCell::new(Vec::new()),
    };

    let domain = match keys.require("domain.kind")? {
        "interval" => {
            DomainComplex::interval(keys.float("domain.min", 0.0)?, keys.float("domain.max", 1.0)?)
        }
        "square" => {
            DomainComplex::square(keys.float("domain.min", 0.0)?, keys.float("domain.max", 1.0)?)
        }
        "file" => DomainComplex::read_file(&dir.join(keys.require("domain.path")?))?,
        other => return Err(Error::Config(format!("domain.kind: unknown kind {other}"))),
    };
    let m = domain.ambient_dim();

    let rate = keys.float("map.rate", 0.001)?;
    let map = match keys.require("map.kind")? {
        "translating" => {
            let base = base_shape(&keys)?;
            let d = base.dim();
            let columns = (0..m)
                .map(|j| {
                    let mut col = vec![0.0; d];
                    if j == 0 {
                        col[0] = rate;
                    }
                    Point::new(col)
                })
                .collect();
            SetValuedMap::translating(base, columns)
        }
        "scaling" => SetValuedMap::scaling(
            base_shape(&keys)?,
            AffineFn::new(1.0, coeffs_for(rate, m)),
            Point::zeros(2),
        ),
        "rotating" => SetValuedMap::rotating_star(
            base_shape(&keys)?,
            AffineFn::new(0.0, coeffs_for(rate, m)),
            Point::zeros(2),
        ),
        "constant" => SetValuedMap::constant(base_shape(&keys)?),
        other => return Err(Error::Config(format!("map.kind: unknown kind {other}"))),
    };

    let eps_const = keys.float("eps.constant", 0.3)?;
    let eps = match keys.get("eps.coeffs") {
        None => AffineFn::constant(eps_const),
        Some(list) => {
            let coeffs: Vec<f64> = list
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("eps.coeffs: not a number: {t}")))
                })
                .collect::<Result<_>>()?;
            if coeffs.len() != m {
                return Err(Error::Config(format!(
                    "eps.coeffs: expected {m} coefficients"
                )));
            }
            AffineFn::new(eps_const, coeffs)
        }
    };

    let variant = match keys.get("run.variant").unwrap_or("uv_infty") {
        "uv_infty" => Variant::UvInfty,
        "uv_omega" => Variant::UvOmega,
        other => return Err(Error::Config(format!("run.variant: unknown variant {other}"))),
    };

    let name = keys.get("run.name").unwrap_or("run").to_string();
    let scenario = Scenario {
        name,
        domain,
        map,
        eps,
        variant,
        depth: keys.int("run.depth", 3)? as usize,
        samples: keys.int("run.samples", 10_000)? as usize,
        containment_samples: keys.int("run.containment_samples", 4)? as usize,
        seed: keys.int("run.seed", 17)?,
    };
    let out_dir = dir.join(keys.get("run.out").unwrap_or("out"));

    if let Some(k) = keys.unknown() {
        return Err(Error::Config(format!("unknown key {k}")));
    }
    Ok(RunConfig { scenario, out_dir })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = "
# moving disk
domain.kind=interval
domain.min=0.0
domain.max=1.0
map.kind=translating
map.shape=disk
map.rate=1.0
eps.constant=0.4
run.variant=uv_omega
run.depth=3
run.samples=500
run.seed=7
run.out=artifacts
";
        let cfg = parse_config(text, Path::new("/tmp")).unwrap();
        assert_eq!(cfg.scenario.variant, Variant::UvOmega);
        assert_eq!(cfg.scenario.samples, 500);
        assert_eq!(cfg.scenario.seed, 7);
        assert_eq!(cfg.scenario.depth, 3);
        assert_eq!(cfg.out_dir, Path::new("/tmp/artifacts"));
        assert!((cfg.scenario.eps.eval(&Point::new(vec![0.3])) - 0.4).abs() < 1e-15);
        // The translating disk moves with unit speed.
        let s = cfg.scenario.map.eval(&Point::new(vec![0.5]));
        assert_eq!(s.star_center().coords, vec![0.5, 0.0]);
    }

    #[test]
    fn rejects_malformed_configs() {
        let at = |t: &str| parse_config(t, Path::new("."));
        assert!(matches!(at("domain.kind"), Err(Error::Config(_))));
        assert!(matches!(
            at("domain.kind=interval\nmap.kind=warp"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            at("domain.kind=interval\nmap.kind=constant\nrun.bogus=1"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            at("domain.kind=interval\ndomain.kind=square\nmap.kind=constant"),
            Err(Error::Config(_))
        ));
        assert!(matches!(at("map.kind=constant"), Err(Error::Config(_))));
    }

    #[test]
    fn affine_tolerance_and_defaults() {
        let cfg = parse_config(
            "domain.kind=square\nmap.kind=scaling\nmap.shape=hexagon\neps.constant=0.3\neps.coeffs=0.1,0.0",
            Path::new("."),
        )
        .unwrap();
        let e = &cfg.scenario.eps;
        assert!((e.eval(&Point::new(vec![1.0, 0.5])) - 0.4).abs() < 1e-15);
        assert_eq!(cfg.scenario.samples, 10_000);
        assert_eq!(cfg.scenario.seed, 17);
    }
}
