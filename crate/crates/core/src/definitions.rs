//! Container, experiment and cluster definition files.
//!
//! All three are JSON documents. Parsing is total: every input either yields a
//! validated value or a [`DefinitionError`] carrying a line/column diagnostic.
//! Serialization produces the canonical form (two-space indented, trailing
//! newline, empty lists elided, EDF services inlined) so that
//! `parse(serialize(x)) == x`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{AgentId, HardwareProfile};

pub const DEFAULT_BASE_OS: &str = "ubuntu:22.04";
pub const DEFAULT_IMAGE_SIZE_MB: f64 = 100.0;
pub const DEFAULT_POOL_DISCOUNT: f64 = 0.9;
pub const DEFAULT_SUBNET: &str = "10.10.0.0/24";
const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Where in a document a problem was found. Lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.column)?;
        if let Some(field) = &self.field {
            write!(f, "field `{field}`: ")?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DefinitionError {
    #[error("syntax error at {0}")]
    Syntax(Diagnostic),
    #[error("schema error at {0}")]
    Schema(Diagnostic),
    #[error("unresolved service `{name}` at {diagnostic}")]
    UnresolvedService {
        name: String,
        diagnostic: Diagnostic,
    },
    #[error("weight error at {0}")]
    Weight(Diagnostic),
}

impl DefinitionError {
    pub fn diagnostic(&self) -> &Diagnostic {
        match self {
            DefinitionError::Syntax(d)
            | DefinitionError::Schema(d)
            | DefinitionError::Weight(d)
            | DefinitionError::UnresolvedService { diagnostic: d, .. } => d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Volume {
    pub host_path: String,
    pub container_path: String,
}

/// A container definition (CDF): one service's environment, its predefined
/// cost α and the capability tags a worker must offer to host it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSpec {
    pub name: String,
    #[serde(default = "default_base_os")]
    pub base_os: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub packages: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub repositories: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub volumes: Vec<Volume>,
    pub entrypoint: String,
    pub predefined_cost: f64,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub required_capabilities: BTreeSet<String>,
    #[serde(default = "default_image_size")]
    pub image_size_mb: f64,
}

fn default_base_os() -> String {
    DEFAULT_BASE_OS.to_string()
}

fn default_image_size() -> f64 {
    DEFAULT_IMAGE_SIZE_MB
}

impl ServiceSpec {
    /// A service with every optional field at its default.
    pub fn minimal(name: impl Into<String>, entrypoint: impl Into<String>, cost: f64) -> Self {
        Self {
            name: name.into(),
            base_os: default_base_os(),
            packages: Vec::new(),
            repositories: Vec::new(),
            volumes: Vec::new(),
            entrypoint: entrypoint.into(),
            predefined_cost: cost,
            required_capabilities: BTreeSet::new(),
            image_size_mb: DEFAULT_IMAGE_SIZE_MB,
        }
    }

    /// Field-level checks; returns `(field, message)` on the first violation.
    fn check(&self) -> Result<(), (&'static str, String)> {
        if self.name.is_empty() {
            return Err(("name", "must not be empty".into()));
        }
        if self.entrypoint.is_empty() {
            return Err(("entrypoint", "must not be empty".into()));
        }
        if !(0.0..=100.0).contains(&self.predefined_cost) {
            return Err((
                "predefined_cost",
                format!("{} is outside [0, 100]", self.predefined_cost),
            ));
        }
        if !(self.image_size_mb.is_finite() && self.image_size_mb > 0.0) {
            return Err(("image_size_mb", "must be a positive number".into()));
        }
        if self.required_capabilities.iter().any(String::is_empty) {
            return Err(("required_capabilities", "empty capability tag".into()));
        }
        if self.repositories.iter().any(|r| !r.contains("://")) {
            return Err(("repositories", "entries must be URLs".into()));
        }
        Ok(())
    }
}

/// Weights δ of the four resource costs. They must lie in `[0, 1]` and sum
/// to 1 within 1e-9.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    pub cpu: f64,
    pub vram: f64,
    pub swap: f64,
    pub bandwidth: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            cpu: 0.25,
            vram: 0.25,
            swap: 0.25,
            bandwidth: 0.25,
        }
    }
}

impl CostWeights {
    pub fn new(cpu: f64, vram: f64, swap: f64, bandwidth: f64) -> Result<Self, String> {
        let w = Self {
            cpu,
            vram,
            swap,
            bandwidth,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn sum(&self) -> f64 {
        self.cpu + self.vram + self.swap + self.bandwidth
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("cpu", self.cpu),
            ("vram", self.vram),
            ("swap", self.swap),
            ("bandwidth", self.bandwidth),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("weight `{name}` = {v} is outside [0, 1]"));
            }
        }
        let sum = self.sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(format!("weights sum to {sum}, expected 1"));
        }
        Ok(())
    }
}

/// Overlay network configuration shared through the swarm registry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub subnet: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ports: Vec<u16>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            subnet: DEFAULT_SUBNET.to_string(),
            ports: Vec::new(),
        }
    }
}

impl NetworkConfig {
    /// Parses `subnet` as IPv4 CIDR, returning the network address and prefix.
    pub fn cidr(&self) -> Result<(Ipv4Addr, u8), String> {
        let (addr, prefix) = self
            .subnet
            .split_once('/')
            .ok_or_else(|| format!("`{}` is not in CIDR notation", self.subnet))?;
        let addr: Ipv4Addr = addr
            .parse()
            .map_err(|_| format!("`{addr}` is not an IPv4 address"))?;
        let prefix: u8 = prefix
            .parse()
            .ok()
            .filter(|p| *p <= 30)
            .ok_or_else(|| format!("prefix `{prefix}` must be an integer in 0..=30"))?;
        let mask = if prefix == 0 {
            0
        } else {
            u32::MAX << (32 - prefix)
        };
        if u32::from(addr) & !mask != 0 {
            return Err(format!("`{}` has host bits set", self.subnet));
        }
        Ok((addr, prefix))
    }
}

/// A fully resolved experiment definition (EDF).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub services: Vec<ServiceSpec>,
    /// Directed pairs `(k, j)`: service `k` depends on service `j`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub dependencies: Vec<(String, String)>,
    pub network: NetworkConfig,
    pub weights: CostWeights,
    pub pool_discount: f64,
}

impl ExperimentSpec {
    pub fn service_index(&self, name: &str) -> Option<usize> {
        self.services.iter().position(|s| s.name == name)
    }

    /// Dependency pairs as service indices.
    pub fn dependency_indices(&self) -> Vec<(usize, usize)> {
        self.dependencies
            .iter()
            .filter_map(|(a, b)| Some((self.service_index(a)?, self.service_index(b)?)))
            .collect()
    }

    fn check(&self) -> Result<(), (&'static str, String)> {
        if self.name.is_empty() {
            return Err(("name", "must not be empty".into()));
        }
        if self.services.is_empty() {
            return Err(("services", "at least one service is required".into()));
        }
        let mut names = BTreeSet::new();
        for s in &self.services {
            s.check()
                .map_err(|(f, m)| (f, format!("service `{}`: {m}", s.name)))?;
            if !names.insert(s.name.as_str()) {
                return Err(("services", format!("duplicate service `{}`", s.name)));
            }
        }
        for (a, b) in &self.dependencies {
            for n in [a, b] {
                if !names.contains(n.as_str()) {
                    return Err(("dependencies", format!("unknown service `{n}`")));
                }
            }
            if a == b {
                return Err(("dependencies", format!("service `{a}` depends on itself")));
            }
        }
        if !(self.pool_discount > 0.0 && self.pool_discount <= 1.0) {
            return Err((
                "pool_discount",
                format!("{} is outside (0, 1]", self.pool_discount),
            ));
        }
        self.network.cidr().map_err(|m| ("subnet", m))?;
        Ok(())
    }
}

/// Per-worker workload generator descriptor.
///
/// `UniformNoise` draws a persistent per-worker baseline uniformly from
/// `center ± half_width` once per experiment, then adds `± jitter` of fresh
/// uniform noise for every iteration. Values are clipped to `[0, 1]`.
/// `Trace` replays samples cyclically by iteration index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorkloadGenerator {
    Fixed {
        beta: [f64; 4],
    },
    UniformNoise {
        center: [f64; 4],
        half_width: f64,
        #[serde(default)]
        jitter: f64,
    },
    Trace {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        samples: Vec<[f64; 4]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<String>,
    },
}

impl WorkloadGenerator {
    /// The balanced-workload default: baseline `(0.3, 0.3, 0.1, 0.3) ± 0.1`
    /// with ±0.02 per-iteration jitter.
    pub fn balanced() -> Self {
        WorkloadGenerator::UniformNoise {
            center: [0.3, 0.3, 0.1, 0.3],
            half_width: 0.1,
            jitter: 0.02,
        }
    }

    fn check(&self) -> Result<(), String> {
        let in_unit = |v: &[f64; 4]| v.iter().all(|x| (0.0..=1.0).contains(x));
        match self {
            WorkloadGenerator::Fixed { beta } if !in_unit(beta) => {
                Err("fixed beta values must lie in [0, 1]".into())
            }
            WorkloadGenerator::UniformNoise {
                center,
                half_width,
                jitter,
            } => {
                if !in_unit(center) {
                    Err("center values must lie in [0, 1]".into())
                } else if !(0.0..=1.0).contains(half_width) || !(0.0..=1.0).contains(jitter) {
                    Err("half_width and jitter must lie in [0, 1]".into())
                } else {
                    Ok(())
                }
            }
            WorkloadGenerator::Trace { samples, file } => {
                if samples.is_empty() && file.is_none() {
                    Err("trace needs samples or a file".into())
                } else if !samples.iter().all(in_unit) {
                    Err("trace samples must lie in [0, 1]".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

impl Default for WorkloadGenerator {
    fn default() -> Self {
        Self::balanced()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerSpec {
    pub id: AgentId,
    pub profile: HardwareProfile,
    #[serde(default)]
    pub workload: WorkloadGenerator,
}

/// Simulation input: the worker roster and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub seed: u64,
    pub workers: Vec<WorkerSpec>,
}

impl ClusterSpec {
    fn check(&self) -> Result<(), (&'static str, String)> {
        let mut ids = BTreeSet::new();
        for w in &self.workers {
            if !ids.insert(&w.id) {
                return Err(("workers", format!("duplicate worker id `{}`", w.id)));
            }
            w.profile
                .validate()
                .map_err(|e| ("profile", format!("worker `{}`: {e}", w.id)))?;
            w.workload
                .check()
                .map_err(|e| ("workload", format!("worker `{}`: {e}", w.id)))?;
        }
        Ok(())
    }
}

/// Looks up container definitions referenced by name from an EDF.
pub trait ServiceResolver {
    fn resolve(&self, name: &str) -> Option<ServiceSpec>;
}

impl<F> ServiceResolver for F
where
    F: Fn(&str) -> Option<ServiceSpec>,
{
    fn resolve(&self, name: &str) -> Option<ServiceSpec> {
        self(name)
    }
}

impl ServiceResolver for BTreeMap<String, ServiceSpec> {
    fn resolve(&self, name: &str) -> Option<ServiceSpec> {
        self.get(name).cloned()
    }
}

impl ServiceResolver for HashMap<String, ServiceSpec> {
    fn resolve(&self, name: &str) -> Option<ServiceSpec> {
        self.get(name).cloned()
    }
}

/// Resolver that never finds anything; for self-contained EDFs.
pub struct NoResolver;

impl ServiceResolver for NoResolver {
    fn resolve(&self, _name: &str) -> Option<ServiceSpec> {
        None
    }
}

pub fn parse_cdf(document: &str) -> Result<ServiceSpec, DefinitionError> {
    let spec: ServiceSpec = from_json(document)?;
    spec.check()
        .map_err(|(field, msg)| schema_at(document, field, msg))?;
    Ok(spec)
}

pub fn serialize_cdf(spec: &ServiceSpec) -> String {
    to_canonical(spec)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    name: String,
    services: Vec<Value>,
    #[serde(default)]
    dependencies: Vec<(String, String)>,
    #[serde(default)]
    network: NetworkConfig,
    #[serde(default)]
    weights: CostWeights,
    #[serde(default = "default_pool_discount")]
    pool_discount: f64,
}

fn default_pool_discount() -> f64 {
    DEFAULT_POOL_DISCOUNT
}

/// A reference to a CDF with optional per-experiment overrides.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ServiceRef {
    #[serde(rename = "ref")]
    reference: String,
    #[serde(default)]
    predefined_cost: Option<f64>,
    #[serde(default)]
    required_capabilities: Option<BTreeSet<String>>,
}

/// Parses an EDF. Service entries are either a CDF name, an object
/// `{"ref": name, ...overrides}` or an inline CDF object.
pub fn parse_edf(
    document: &str,
    resolver: &dyn ServiceResolver,
) -> Result<ExperimentSpec, DefinitionError> {
    let raw: RawExperiment = from_json(document)?;
    let mut services = Vec::with_capacity(raw.services.len());
    for entry in raw.services {
        let spec = match entry {
            Value::String(name) => resolve(document, resolver, &name)?,
            Value::Object(ref obj) if obj.contains_key("ref") => {
                let r: ServiceRef = serde_json::from_value(entry.clone())
                    .map_err(|e| schema_at(document, "services", e.to_string()))?;
                let mut spec = resolve(document, resolver, &r.reference)?;
                if let Some(cost) = r.predefined_cost {
                    spec.predefined_cost = cost;
                }
                if let Some(caps) = r.required_capabilities {
                    spec.required_capabilities = caps;
                }
                spec
            }
            Value::Object(_) => serde_json::from_value(entry)
                .map_err(|e| schema_at(document, "services", e.to_string()))?,
            _ => {
                return Err(schema_at(
                    document,
                    "services",
                    "entries must be a name, a reference object or an inline service".into(),
                ))
            }
        };
        services.push(spec);
    }
    raw.weights
        .validate()
        .map_err(|m| DefinitionError::Weight(diagnostic_at(document, "weights", m)))?;
    let spec = ExperimentSpec {
        name: raw.name,
        services,
        dependencies: raw.dependencies,
        network: raw.network,
        weights: raw.weights,
        pool_discount: raw.pool_discount,
    };
    spec.check()
        .map_err(|(field, msg)| schema_at(document, field, msg))?;
    Ok(spec)
}

pub fn serialize_edf(spec: &ExperimentSpec) -> String {
    to_canonical(spec)
}

pub fn parse_cluster(document: &str) -> Result<ClusterSpec, DefinitionError> {
    let spec: ClusterSpec = from_json(document)?;
    spec.check()
        .map_err(|(field, msg)| schema_at(document, field, msg))?;
    Ok(spec)
}

pub fn serialize_cluster(spec: &ClusterSpec) -> String {
    to_canonical(spec)
}

/// Parses a workload trace in CSV form with header `cpu,vram,swap,bandwidth`.
pub fn parse_trace_csv(document: &str) -> Result<Vec<[f64; 4]>, DefinitionError> {
    let mut lines = document
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == "cpu,vram,swap,bandwidth" => {}
        _ => {
            return Err(DefinitionError::Schema(Diagnostic {
                line: 1,
                column: 1,
                field: None,
                message: "expected header `cpu,vram,swap,bandwidth`".into(),
            }))
        }
    }
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let diag = |message: String| Diagnostic {
            line: idx + 1,
            column: 1,
            field: None,
            message,
        };
        let values: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| DefinitionError::Syntax(diag(e.to_string())))?;
        let row: [f64; 4] = values
            .try_into()
            .map_err(|_| DefinitionError::Schema(diag("expected 4 columns".into())))?;
        if !row.iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(DefinitionError::Schema(diag(
                "values must lie in [0, 1]".into(),
            )));
        }
        samples.push(row);
    }
    Ok(samples)
}

fn resolve(
    document: &str,
    resolver: &dyn ServiceResolver,
    name: &str,
) -> Result<ServiceSpec, DefinitionError> {
    resolver
        .resolve(name)
        .ok_or_else(|| DefinitionError::UnresolvedService {
            name: name.to_string(),
            diagnostic: diagnostic_at(document, name, "no CDF with this name".into()),
        })
}

fn from_json<T: serde::de::DeserializeOwned>(document: &str) -> Result<T, DefinitionError> {
    serde_json::from_str(document).map_err(|e| {
        use serde_json::error::Category;
        let diag = Diagnostic {
            line: e.line().max(1),
            column: e.column().max(1),
            field: backticked(&e.to_string()),
            message: strip_position(&e.to_string()),
        };
        match e.classify() {
            Category::Data => DefinitionError::Schema(diag),
            _ => DefinitionError::Syntax(diag),
        }
    })
}

fn to_canonical<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("definition types serialize");
    out.push('\n');
    out
}

fn schema_at(document: &str, field: &str, message: String) -> DefinitionError {
    DefinitionError::Schema(diagnostic_at(document, field, message))
}

/// Points the diagnostic at the first quoted occurrence of `key`.
fn diagnostic_at(document: &str, key: &str, message: String) -> Diagnostic {
    let needle = format!("\"{key}\"");
    let (line, column) = match document.find(&needle) {
        Some(offset) => {
            let before = &document[..offset];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
            (line, column)
        }
        None => (1, 1),
    };
    Diagnostic {
        line,
        column,
        field: Some(key.to_string()),
        message,
    }
}

fn backticked(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(idx) => message[..idx].to_string(),
        None => message.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        r#"{"name": "slam", "entrypoint": "roslaunch slam.launch", "predefined_cost": 50}"#;

    fn resolver() -> BTreeMap<String, ServiceSpec> {
        (1..=6)
            .map(|i| {
                let s = ServiceSpec::minimal(format!("svc{i}"), "run", 10.0 * i as f64);
                (s.name.clone(), s)
            })
            .collect()
    }

    #[test]
    fn minimal_cdf_gets_defaults() {
        let s = parse_cdf(MINIMAL).unwrap();
        assert!(s.packages.is_empty() && s.repositories.is_empty() && s.volumes.is_empty());
        assert_eq!(s.predefined_cost, 50.0);
        assert_eq!(s.base_os, DEFAULT_BASE_OS);
        assert_eq!(s.image_size_mb, DEFAULT_IMAGE_SIZE_MB);
    }

    #[test]
    fn alpha_out_of_range_is_schema_error() {
        let doc = "{\n  \"name\": \"x\",\n  \"entrypoint\": \"e\",\n  \"predefined_cost\": 150\n}";
        let err = parse_cdf(doc).unwrap_err();
        let DefinitionError::Schema(d) = &err else {
            panic!("{err:?}")
        };
        assert_eq!(d.field.as_deref(), Some("predefined_cost"));
        assert_eq!((d.line, d.column), (4, 3));
    }

    #[test]
    fn missing_field_and_bad_syntax() {
        let err = parse_cdf(r#"{"name": "x", "predefined_cost": 1}"#).unwrap_err();
        assert!(
            matches!(&err, DefinitionError::Schema(d) if d.field.as_deref() == Some("entrypoint"))
        );
        let err = parse_cdf("{\"name\": \n  ").unwrap_err();
        assert!(matches!(&err, DefinitionError::Syntax(d) if d.line == 2));
        let err = parse_cdf(r#"{"name":"x","entrypoint":"e","predefined_cost":1,"bogus":2}"#)
            .unwrap_err();
        assert!(matches!(err, DefinitionError::Schema(_)));
    }

    #[test]
    fn empty_lists_are_elided() {
        let text = serialize_cdf(&parse_cdf(MINIMAL).unwrap());
        assert!(!text.contains("packages"));
        assert!(!text.contains("required_capabilities"));
        assert!(text.ends_with("}\n"));
    }

    #[test]
    fn edf_six_references() {
        let doc = r#"{"name": "exp", "services": ["svc1","svc2","svc3","svc4","svc5","svc6"]}"#;
        let e = parse_edf(doc, &resolver()).unwrap();
        assert_eq!(e.services.len(), 6);
        assert!(e.dependencies.is_empty());
        assert_eq!(e.weights, CostWeights::default());
        assert_eq!(e.pool_discount, DEFAULT_POOL_DISCOUNT);
    }

    #[test]
    fn edf_weights() {
        let ok = r#"{"name":"e","services":["svc1"],"weights":{"cpu":0.25,"vram":0.25,"swap":0.25,"bandwidth":0.25}}"#;
        assert!(parse_edf(ok, &resolver()).is_ok());
        let bad = r#"{"name":"e","services":["svc1"],"weights":{"cpu":0.5,"vram":0.5,"swap":0.5,"bandwidth":0.5}}"#;
        assert!(matches!(
            parse_edf(bad, &resolver()),
            Err(DefinitionError::Weight(_))
        ));
    }

    #[test]
    fn edf_unresolved_and_overrides() {
        let doc = r#"{"name":"e","services":["nope"]}"#;
        let err = parse_edf(doc, &resolver()).unwrap_err();
        assert!(
            matches!(err, DefinitionError::UnresolvedService { ref name, .. } if name == "nope")
        );

        let doc = r#"{"name":"e","services":[{"ref":"svc1","predefined_cost":77,"required_capabilities":["gpu"]},
            {"name":"inline","entrypoint":"x","predefined_cost":3}]}"#;
        let e = parse_edf(doc, &resolver()).unwrap();
        assert_eq!(e.services[0].predefined_cost, 77.0);
        assert!(e.services[0].required_capabilities.contains("gpu"));
        assert_eq!(e.services[1].name, "inline");
    }

    #[test]
    fn edf_dependency_validation() {
        let r = resolver();
        let unknown = r#"{"name":"e","services":["svc1"],"dependencies":[["svc1","svc9"]]}"#;
        assert!(matches!(
            parse_edf(unknown, &r),
            Err(DefinitionError::Schema(_))
        ));
        let selfdep = r#"{"name":"e","services":["svc1"],"dependencies":[["svc1","svc1"]]}"#;
        assert!(matches!(
            parse_edf(selfdep, &r),
            Err(DefinitionError::Schema(_))
        ));
        let dup = r#"{"name":"e","services":["svc1","svc1"]}"#;
        assert!(matches!(
            parse_edf(dup, &r),
            Err(DefinitionError::Schema(_))
        ));
        let empty = r#"{"name":"e","services":[]}"#;
        assert!(matches!(
            parse_edf(empty, &r),
            Err(DefinitionError::Schema(_))
        ));
    }

    #[test]
    fn dependency_pairs_survive_round_trip_as_a_set() {
        let doc = r#"{"name":"e","services":["svc1","svc2","svc3"],"dependencies":[["svc2","svc1"],["svc3","svc1"]]}"#;
        let e = parse_edf(doc, &resolver()).unwrap();
        let back = parse_edf(&serialize_edf(&e), &NoResolver).unwrap();
        let a: BTreeSet<_> = e.dependencies.iter().collect();
        let b: BTreeSet<_> = back.dependencies.iter().collect();
        assert_eq!(a, b);
        assert_eq!(back, e);
    }

    #[test]
    fn subnet_validation() {
        let net = |s: &str| NetworkConfig {
            subnet: s.into(),
            ports: vec![],
        };
        assert_eq!(net("10.0.0.0/24").cidr().unwrap().1, 24);
        assert!(net("10.0.0.1/24").cidr().is_err());
        assert!(net("10.0.0.0").cidr().is_err());
        assert!(net("10.0.0.0/33").cidr().is_err());
    }

    #[test]
    fn cluster_parse_and_duplicates() {
        let doc = r#"{"seed": 7, "workers": [
            {"id": "w1", "profile": {"cpu_cores": 4, "bandwidth_mbps": 100}},
            {"id": "w2", "profile": {"cpu_cores": 4, "bandwidth_mbps": 100, "capabilities": ["gpu"]},
             "workload": {"kind": "fixed", "beta": [0.1, 0.2, 0.3, 0.4]}}]}"#;
        let c = parse_cluster(doc).unwrap();
        assert_eq!(c.workers[0].workload, WorkloadGenerator::balanced());
        assert_eq!(parse_cluster(&serialize_cluster(&c)).unwrap(), c);

        let dup = r#"{"seed": 7, "workers": [
            {"id": "w1", "profile": {"cpu_cores": 4, "bandwidth_mbps": 100}},
            {"id": "w1", "profile": {"cpu_cores": 4, "bandwidth_mbps": 100}}]}"#;
        assert!(matches!(
            parse_cluster(dup),
            Err(DefinitionError::Schema(_))
        ));
        let bad = r#"{"seed": 7, "workers": [{"id": "w1", "profile": {"cpu_cores": 4, "bandwidth_mbps": 100},
            "workload": {"kind": "fixed", "beta": [0.1, 0.2, 1.3, 0.4]}}]}"#;
        assert!(parse_cluster(bad).is_err());
    }

    #[test]
    fn trace_csv() {
        let s = parse_trace_csv("cpu,vram,swap,bandwidth\n0.1,0.2,0.3,0.4\n\n0.5,0.5,0.5,0.5\n")
            .unwrap();
        assert_eq!(s, vec![[0.1, 0.2, 0.3, 0.4], [0.5; 4]]);
        assert!(parse_trace_csv("a,b\n").is_err());
        assert!(parse_trace_csv("cpu,vram,swap,bandwidth\n0.1,0.2\n").is_err());
        assert!(parse_trace_csv("cpu,vram,swap,bandwidth\n0.1,0.2,x,1\n").is_err());
    }
}
