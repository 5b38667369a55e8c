//! Scenario configuration: one JSON document per scenario, dotted-path
//! overrides, validation with field paths, and the resolved echo.

use std::f64::consts::TAU;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::flow::{Builtin, BuiltinKind, SelectionSchedule, DEFAULT_SLOPE_SAMPLES};
use crate::harness::gen::gen_map;
use crate::ks::{laplacian_schedule, KsEnergy, SolverParams, KAPPA_NORM};
use crate::maps::{Domain, L2Map};
use crate::spaces::{MetricSpace, Space, SpacePoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowParams {
    pub t_end: f64,
    pub steps: usize,
    /// Step size; when given it wins over `steps`.
    pub tau: Option<f64>,
    /// Seeded EVI test points per run.
    pub tests: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            steps: 10_000,
            tau: None,
            tests: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// Nodes 0..n in a line with unit weights; boundary defaults to both ends.
    Path {
        nodes: usize,
        #[serde(default = "one")]
        r: f64,
        /// Uniform node measure; lumped (r inside, r/2 at the ends) when absent.
        #[serde(default)]
        m: Option<f64>,
        #[serde(default)]
        boundary: Option<Vec<usize>>,
    },
    /// Closed cycle with m = r = 1/n.
    Cycle {
        nodes: usize,
    },
    Graph(Domain),
    /// Domain document on disk.
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Values {
        values: Vec<SpacePoint>,
    },
    Constant {
        point: SpacePoint,
    },
    /// Node i of n sits at fraction i/(n−1) of the geodesic from `from` to `to`.
    Linear {
        from: SpacePoint,
        to: SpacePoint,
    },
    /// Node i of n sits at radius·(cos 2πi/n, sin 2πi/n); euclidean(2) only.
    Circle {
        #[serde(default = "one")]
        radius: f64,
    },
    /// Seeded random values.
    Random,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteParams {
    /// Overrides each suite's sample count.
    pub samples: Option<usize>,
    /// Spaces to sweep; empty means the scenario space.
    pub spaces: Vec<Space>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub space: Space,
    pub functional: Option<BuiltinKind>,
    /// Flow start; defaults to the space's base point.
    pub start: Option<SpacePoint>,
    /// Points for `slope`; defaults to the start.
    pub points: Vec<SpacePoint>,
    pub flow: FlowParams,
    pub selection: SelectionSchedule,
    pub slope_samples: usize,
    pub domain: Option<DomainSpec>,
    /// Initial map for `harmonic`, the map for `laplacian`.
    pub map: Option<MapSpec>,
    /// Values on boundary nodes (other entries are ignored).
    pub boundary_values: Option<MapSpec>,
    pub solver: SolverParams,
    pub laplacian: SelectionSchedule,
    pub kappa_norm: f64,
    pub suite: SuiteParams,
    pub out: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            seed: 0,
            space: Space::euclidean(2),
            functional: None,
            start: None,
            points: vec![],
            flow: FlowParams::default(),
            selection: SelectionSchedule::default(),
            slope_samples: DEFAULT_SLOPE_SAMPLES,
            domain: None,
            map: None,
            boundary_values: None,
            solver: SolverParams::default(),
            laplacian: laplacian_schedule(),
            kappa_norm: KAPPA_NORM,
            suite: SuiteParams::default(),
            out: PathBuf::from("out"),
        }
    }
}

fn invalid(path: &str, message: impl ToString) -> Error {
    Error::InvalidConfig {
        path: path.into(),
        message: message.to_string(),
    }
}

/// Re-labels any error as a config error at `path`.
fn at<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidConfig { .. } => e,
        other => invalid(path, other),
    })
}

/// `key.path=value` from the command line. The value is read as JSON when
/// it parses, otherwise as a bare string.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: Value,
}

impl Override {
    pub fn parse(arg: &str) -> Result<Self> {
        let (key, raw) = arg
            .split_once('=')
            .ok_or_else(|| invalid(arg, "expected key=value"))?;
        let path: Vec<String> = key.split('.').map(str::to_owned).collect();
        if path.iter().any(String::is_empty) {
            return Err(invalid(key, "empty path segment"));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
        Ok(Self { path, value })
    }

    pub fn new(path: &str, value: Value) -> Self {
        Self {
            path: path.split('.').map(str::to_owned).collect(),
            value,
        }
    }

    fn apply(&self, root: &mut Value) -> Result<()> {
        let key = self.path.join(".");
        let mut node = root;
        for (i, seg) in self.path.iter().enumerate() {
            let last = i + 1 == self.path.len();
            if node.is_null() {
                *node = Value::Object(Default::default());
            }
            node = match node {
                Value::Object(map) => {
                    if last {
                        map.insert(seg.clone(), self.value.clone());
                        return Ok(());
                    }
                    map.entry(seg.clone()).or_insert(Value::Null)
                }
                Value::Array(items) => {
                    let idx: usize = seg
                        .parse()
                        .map_err(|_| invalid(&key, format!("`{seg}` indexes an array")))?;
                    let len = items.len();
                    let slot = items.get_mut(idx).ok_or_else(|| {
                        invalid(&key, format!("index {idx} out of range ({len} items)"))
                    })?;
                    if last {
                        *slot = self.value.clone();
                        return Ok(());
                    }
                    slot
                }
                _ => return Err(invalid(&key, format!("`{seg}` descends into a scalar"))),
            };
        }
        Ok(())
    }
}

impl ScenarioConfig {
    /// Parses a config document, applies overrides in order and validates.
    pub fn parse(text: &str, overrides: &[Override]) -> Result<Self> {
        let mut root: Value = serde_json::from_str(text).map_err(|e| invalid("<document>", e))?;
        Self::from_value(&mut root, overrides)
    }

    /// Defaults plus overrides.
    pub fn from_overrides(overrides: &[Override]) -> Result<Self> {
        Self::from_value(&mut Value::Object(Default::default()), overrides)
    }

    fn from_value(root: &mut Value, overrides: &[Override]) -> Result<Self> {
        if !root.is_object() {
            return Err(invalid("<document>", "expected a JSON object"));
        }
        for o in overrides {
            o.apply(root)?;
        }
        let cfg: Self = serde_path_to_error::deserialize(&*root).map_err(|e| {
            let path = e.path().to_string();
            invalid(
                if path == "." { "<document>" } else { &path },
                e.into_inner(),
            )
        })?;
        cfg.resolve()
    }

    /// Fills derived fields and checks everything that can be checked
    /// without running a solver.
    pub fn resolve(mut self) -> Result<Self> {
        let f = &mut self.flow;
        if !(f.t_end > 0.0 && f.t_end.is_finite()) {
            return Err(invalid("flow.t_end", "must be positive and finite"));
        }
        if let Some(tau) = f.tau {
            if !(tau > 0.0 && tau <= f.t_end) {
                return Err(invalid("flow.tau", "must lie in (0, t_end]"));
            }
            f.steps = (f.t_end / tau).round() as usize;
        }
        if f.steps == 0 || f.steps > 100_000_000 {
            return Err(invalid("flow.steps", "must lie in 1..=1e8"));
        }
        f.tau = Some(f.t_end / f.steps as f64);
        for (path, s) in [
            ("selection", &self.selection),
            ("laplacian", &self.laplacian),
        ] {
            if s.hs.is_empty() || s.hs.iter().any(|h| !(*h > 0.0 && h.is_finite())) || s.steps == 0
            {
                return Err(invalid(
                    path,
                    "need positive horizons and at least one step",
                ));
            }
        }
        let p = &self.solver;
        if !(p.tau > 0.0 && p.sweep_tol >= 0.0 && p.step_tol >= 0.0)
            || p.max_outer == 0
            || p.max_sweeps == 0
        {
            return Err(invalid(
                "solver",
                "tau must be positive, tolerances nonnegative, budgets nonzero",
            ));
        }
        if !(self.kappa_norm > 0.0 && self.kappa_norm.is_finite()) {
            return Err(invalid("kappa_norm", "must be positive"));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(invalid("name", "must be a plain file name"));
        }
        at("space", self.space.validate())?;
        if let Some(p) = &self.start {
            self.start = Some(at("start", self.space.validate_point(p))?);
        }
        for (i, p) in self.points.iter_mut().enumerate() {
            *p = at(&format!("points[{i}]"), self.space.validate_point(p))?;
        }
        if self.functional.is_some() {
            self.builtin()?;
        }
        for (i, s) in self.suite.spaces.iter().enumerate() {
            at(&format!("suite.spaces[{i}]"), s.validate())?;
        }
        if self.domain.is_some() {
            let domain = self.domain()?;
            if let Some(spec) = &self.map {
                self.map_from("map", spec, &domain)?;
            }
            if let Some(spec) = &self.boundary_values {
                self.map_from("boundary_values", spec, &domain)?;
            }
        }
        Ok(self)
    }

    /// Pretty JSON with every default spelled out.
    pub fn echo(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn builtin(&self) -> Result<Builtin> {
        let kind = self
            .functional
            .clone()
            .ok_or_else(|| invalid("functional", "missing"))?;
        at("functional", Builtin::new(self.space.clone(), kind))
    }

    pub fn start_point(&self) -> SpacePoint {
        self.start
            .clone()
            .unwrap_or_else(|| self.space.base_point())
    }

    pub fn slope_points(&self) -> Vec<SpacePoint> {
        if self.points.is_empty() {
            vec![self.start_point()]
        } else {
            self.points.clone()
        }
    }

    pub fn tau(&self) -> f64 {
        self.flow.t_end / self.flow.steps as f64
    }

    pub fn domain(&self) -> Result<Domain> {
        let spec = self
            .domain
            .as_ref()
            .ok_or_else(|| invalid("domain", "missing"))?;
        let d = match spec {
            DomainSpec::Path {
                nodes,
                r,
                m,
                boundary,
            } => {
                let b = boundary.clone().unwrap_or_else(|| {
                    if *nodes > 1 {
                        vec![0, nodes - 1]
                    } else {
                        vec![0]
                    }
                });
                if *nodes == 0 || *nodes > crate::maps::MAX_NODES {
                    return Err(invalid("domain.nodes", "out of range"));
                }
                match m {
                    Some(m) => {
                        let edges = (1..*nodes).map(|i| (i - 1, i, 1.0)).collect();
                        Domain::new(vec![*m; *nodes], edges, *r, b)
                    }
                    None => Domain::path(*nodes, *r, b),
                }
            }
            DomainSpec::Cycle { nodes } => Domain::cycle(*nodes),
            DomainSpec::Graph(d) => Ok(d.clone()),
            DomainSpec::File { path } => std::fs::read_to_string(path)
                .map_err(|e| invalid("domain.path", format!("{}: {e}", path.display())))
                .and_then(|text| Domain::from_json(&text)),
        };
        at("domain", d)
    }

    /// Builds the map described by `spec` on `domain`; `path` labels errors.
    pub fn map_from(&self, path: &str, spec: &MapSpec, domain: &Domain) -> Result<L2Map> {
        let n = domain.len();
        let target = &self.space;
        let points: Result<Vec<SpacePoint>> = match spec {
            MapSpec::Values { values } => {
                if values.len() != n {
                    return Err(invalid(
                        path,
                        format!("{} values for {n} nodes", values.len()),
                    ));
                }
                values
                    .iter()
                    .enumerate()
                    .map(|(i, p)| at(&format!("{path}.values[{i}]"), target.validate_point(p)))
                    .collect()
            }
            MapSpec::Constant { point } => {
                let p = at(&format!("{path}.point"), target.validate_point(point))?;
                Ok(vec![p; n])
            }
            MapSpec::Linear { from, to } => {
                let a = at(&format!("{path}.from"), target.validate_point(from))?;
                let b = at(&format!("{path}.to"), target.validate_point(to))?;
                let last = (n.max(2) - 1) as f64;
                (0..n)
                    .map(|i| target.geodesic_point(&a, &b, i as f64 / last))
                    .collect()
            }
            MapSpec::Circle { radius } => {
                if *target != Space::euclidean(2) {
                    return Err(invalid(path, "circle maps need the euclidean(2) target"));
                }
                Ok((0..n)
                    .map(|i| {
                        let th = TAU * i as f64 / n as f64;
                        SpacePoint::euclid(&[radius * th.cos(), radius * th.sin()])
                    })
                    .collect())
            }
            MapSpec::Random => Ok(gen_map(domain, target, self.seed).0),
        };
        at(path, points).map(L2Map)
    }

    /// E^KS_ū on the configured domain, with boundary data when the domain
    /// has boundary nodes.
    pub fn ks_energy(&self) -> Result<KsEnergy> {
        let domain = self.domain()?;
        let boundary = if domain.boundary().is_empty() {
            None
        } else {
            let spec = self
                .boundary_values
                .as_ref()
                .or(self.map.as_ref())
                .ok_or_else(|| {
                    invalid("boundary_values", "needed for a domain with boundary nodes")
                })?;
            Some(self.map_from("boundary_values", spec, &domain)?)
        };
        let k = at(
            "domain",
            KsEnergy::new(domain, self.space.clone(), boundary),
        )?;
        Ok(k.with_kappa_norm(self.kappa_norm))
    }

    /// The configured map with boundary nodes overwritten by the boundary
    /// data. Without a `map`, free nodes start at the space's base point.
    pub fn map_on(&self, k: &KsEnergy) -> Result<L2Map> {
        let domain = k.domain();
        let mut u = match &self.map {
            Some(spec) => self.map_from("map", spec, domain)?,
            None => L2Map::constant(domain, &self.space.base_point()),
        };
        if let Some(b) = k.boundary_data() {
            for &x in domain.boundary() {
                u.0[x] = b.0[x].clone();
            }
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_echo_and_reparse() {
        let c = ScenarioConfig::parse("{}", &[]).unwrap();
        assert_eq!(c.flow.tau, Some(1e-4));
        let back = ScenarioConfig::parse(&c.echo(), &[]).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_follow_dotted_paths() {
        let text = r#"{"space":{"kind":"spider","rays":3},"flow":{"t_end":2}}"#;
        let sets = [
            Override::parse("flow.steps=200").unwrap(),
            Override::parse("name=run7").unwrap(),
            Override::parse(r#"start={"ray":2,"t":1.5}"#).unwrap(),
            Override::parse("suite.samples=5").unwrap(),
        ];
        let c = ScenarioConfig::parse(text, &sets).unwrap();
        assert_eq!((c.flow.t_end, c.flow.steps, c.tau()), (2.0, 200, 0.01));
        assert_eq!(c.name, "run7");
        assert_eq!(c.start, Some(SpacePoint::spider(2, 1.5)));
        assert_eq!(c.suite.samples, Some(5));
    }

    #[test]
    fn errors_carry_field_paths() {
        let path_of = |text: &str, sets: &[&str]| {
            let sets: Vec<_> = sets.iter().map(|s| Override::parse(s).unwrap()).collect();
            match ScenarioConfig::parse(text, &sets) {
                Err(Error::InvalidConfig { path, .. }) => path,
                other => panic!("{other:?}"),
            }
        };
        assert_eq!(path_of(r#"{"flow":{"steps":-1}}"#, &[]), "flow.steps");
        assert_eq!(path_of(r#"{"flow":{"stpes":1}}"#, &[]), "flow.stpes");
        assert_eq!(path_of("{}", &["flow.t_end=0"]), "flow.t_end");
        assert_eq!(
            path_of(r#"{"space":{"kind":"spider","rays":0}}"#, &[]),
            "space"
        );
        assert_eq!(path_of(r#"{"start":{"x":[1,2,3]}}"#, &[]), "start");
        assert_eq!(path_of(r#"{"name":"a"}"#, &["name.x=1"]), "name.x");
        assert_eq!(path_of("{}", &["name.x=1"]), "name");
        assert_eq!(path_of("[]", &[]), "<document>");
        assert!(Override::parse("novalue").is_err());
    }

    #[test]
    fn domains_and_maps_resolve() {
        let text = json!({
            "space": {"kind": "euclidean", "dim": 2},
            "domain": {"kind": "path", "nodes": 5},
            "boundary_values": {"kind": "linear", "from": {"x": [0.0, 0.0]}, "to": {"x": [4.0, 2.0]}},
        })
        .to_string();
        let c = ScenarioConfig::parse(&text, &[]).unwrap();
        let k = c.ks_energy().unwrap();
        assert_eq!(k.domain().boundary(), &[0, 4]);
        let u = c.map_on(&k).unwrap();
        assert_eq!(u.0[4], SpacePoint::euclid(&[4.0, 2.0]));
        assert_eq!(u.0[2], SpacePoint::euclid(&[0.0, 0.0]));

        let graph = json!({"domain": {"kind": "graph", "nodes": 2, "m": [1, 1], "edges": [[0, 1, 1]], "r": 1}});
        assert_eq!(
            ScenarioConfig::parse(&graph.to_string(), &[])
                .unwrap()
                .domain()
                .unwrap()
                .len(),
            2
        );
        let circle = json!({"domain": {"kind": "cycle", "nodes": 8}, "map": {"kind": "circle"}});
        let c = ScenarioConfig::parse(&circle.to_string(), &[]).unwrap();
        let k = c.ks_energy().unwrap();
        assert!(k.boundary_data().is_none());
        assert!((c.map_on(&k).unwrap().0[2] == SpacePoint::euclid(&[(TAU / 4.0).cos(), 1.0])));
        let bad = json!({"space": {"kind": "spider", "rays": 3}, "domain": {"kind": "cycle", "nodes": 8}, "map": {"kind": "circle"}});
        assert!(matches!(
            ScenarioConfig::parse(&bad.to_string(), &[]),
            Err(Error::InvalidConfig { path, .. }) if path == "map"
        ));
    }
}
