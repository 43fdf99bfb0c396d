//! Instance files: a TOML schema in human units (GB, Gbps, seconds,
//! meters) with explicit unit-suffixed field names. Conversion to internal
//! units happens exactly once at parse; unknown fields are rejected.

use serde::{Deserialize, Serialize};

use crate::linkgraph::LinkModelConfig;
use crate::model::{BaseStation, Instance, RateOverride, Task};
use crate::units::{
    bytes_per_sec_to_gbps, bytes_to_gb, gb_to_bytes, gbps_to_bytes_per_sec,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub cloud_latency_s: f64,
    /// Defaults to 0.95 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<MetaSection>,
    pub link_model: LinkModelSection,
    pub base_stations: Vec<BaseStationSection>,
    pub tasks: Vec<TaskSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rate_overrides: Vec<RateOverrideSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MetaSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkModelSection {
    pub max_range_m: f64,
    pub rate_at_reference_gbps: f64,
    pub reference_distance_m: f64,
    pub path_loss_exponent: f64,
    pub rate_floor_gbps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseStationSection {
    pub id: usize,
    pub x_m: f64,
    pub y_m: f64,
    pub interfaces: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub server: Option<ServerSection>,
    #[serde(default)]
    pub cloud_attached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerSection {
    pub capacity_gb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub id: usize,
    pub size_gb: f64,
    pub origin: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateOverrideSection {
    pub n: usize,
    pub m: usize,
    pub rate_gbps: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceFileError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("serialize error: {0}")]
    Serialize(String),
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    SchemaVersion(u32),
    #[error("tasks mix explicit and omitted weights; use one or the other")]
    MixedWeights,
}

pub fn parse_instance_file(text: &str) -> Result<InstanceFile, InstanceFileError> {
    let file: InstanceFile =
        toml::from_str(text).map_err(|e| InstanceFileError::Parse(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(InstanceFileError::SchemaVersion(file.schema_version));
    }
    Ok(file)
}

pub fn serialize_instance_file(file: &InstanceFile) -> Result<String, InstanceFileError> {
    toml::to_string_pretty(file).map_err(|e| InstanceFileError::Serialize(e.to_string()))
}

/// Converts a parsed file into internal units. Task weights default to
/// uniform when omitted everywhere; explicit weights are normalized to
/// sum 1.
pub fn to_instance(file: &InstanceFile) -> Result<Instance, InstanceFileError> {
    let weights_given = file.tasks.iter().filter(|t| t.weight.is_some()).count();
    if weights_given != 0 && weights_given != file.tasks.len() {
        return Err(InstanceFileError::MixedWeights);
    }
    let uniform = if file.tasks.is_empty() {
        0.0
    } else {
        1.0 / file.tasks.len() as f64
    };
    let mut inst = Instance {
        base_stations: file
            .base_stations
            .iter()
            .map(|b| BaseStation {
                id: b.id,
                x_m: b.x_m,
                y_m: b.y_m,
                interfaces: b.interfaces,
                has_server: b.server.is_some(),
                storage_capacity: b
                    .server
                    .as_ref()
                    .map_or(0.0, |s| gb_to_bytes(s.capacity_gb)),
                cloud_attached: b.cloud_attached,
            })
            .collect(),
        tasks: file
            .tasks
            .iter()
            .map(|t| Task {
                id: t.id,
                size: gb_to_bytes(t.size_gb),
                origin: t.origin,
                weight: t.weight.unwrap_or(uniform),
            })
            .collect(),
        cloud_latency: file.cloud_latency_s,
        saturation: file.saturation.unwrap_or(0.95),
        link_model: LinkModelConfig {
            max_range_m: file.link_model.max_range_m,
            rate_at_reference: gbps_to_bytes_per_sec(file.link_model.rate_at_reference_gbps),
            reference_distance_m: file.link_model.reference_distance_m,
            path_loss_exponent: file.link_model.path_loss_exponent,
            rate_floor: gbps_to_bytes_per_sec(file.link_model.rate_floor_gbps),
        },
        rate_overrides: file
            .rate_overrides
            .iter()
            .map(|o| RateOverride {
                n: o.n,
                m: o.m,
                rate: gbps_to_bytes_per_sec(o.rate_gbps),
            })
            .collect(),
    };
    if weights_given > 0 {
        inst.normalize_weights();
    }
    Ok(inst)
}

/// Converts an instance back into file units.
pub fn from_instance(inst: &Instance, seed: Option<u64>) -> InstanceFile {
    InstanceFile {
        schema_version: SCHEMA_VERSION,
        cloud_latency_s: inst.cloud_latency,
        saturation: Some(inst.saturation),
        meta: seed.map(|s| MetaSection {
            seed: Some(s),
            units: Some("gb-gbps-s-m".into()),
            notes: Vec::new(),
        }),
        link_model: LinkModelSection {
            max_range_m: inst.link_model.max_range_m,
            rate_at_reference_gbps: bytes_per_sec_to_gbps(inst.link_model.rate_at_reference),
            reference_distance_m: inst.link_model.reference_distance_m,
            path_loss_exponent: inst.link_model.path_loss_exponent,
            rate_floor_gbps: bytes_per_sec_to_gbps(inst.link_model.rate_floor),
        },
        base_stations: inst
            .base_stations
            .iter()
            .map(|b| BaseStationSection {
                id: b.id,
                x_m: b.x_m,
                y_m: b.y_m,
                interfaces: b.interfaces,
                server: b.has_server.then(|| ServerSection {
                    capacity_gb: bytes_to_gb(b.storage_capacity),
                }),
                cloud_attached: b.cloud_attached,
            })
            .collect(),
        tasks: inst
            .tasks
            .iter()
            .map(|t| TaskSection {
                id: t.id,
                size_gb: bytes_to_gb(t.size),
                origin: t.origin,
                weight: Some(t.weight),
            })
            .collect(),
        rate_overrides: inst
            .rate_overrides
            .iter()
            .map(|o| RateOverrideSection {
                n: o.n,
                m: o.m,
                rate_gbps: bytes_per_sec_to_gbps(o.rate),
            })
            .collect(),
    }
}

/// Parses instance text straight to internal units.
pub fn load_instance_str(text: &str) -> Result<Instance, InstanceFileError> {
    to_instance(&parse_instance_file(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
schema_version = 1
cloud_latency_s = 0.2
saturation = 1.0

[link_model]
max_range_m = 400.0
rate_at_reference_gbps = 10.0
reference_distance_m = 100.0
path_loss_exponent = 2.5
rate_floor_gbps = 0.05

[[base_stations]]
id = 1
x_m = 0.0
y_m = 0.0
interfaces = 2

[[base_stations]]
id = 2
x_m = 100.0
y_m = 0.0
interfaces = 2
cloud_attached = true
[base_stations.server]
capacity_gb = 4.0

[[tasks]]
id = 1
size_gb = 1.28
origin = 1
"#;

    #[test]
    fn parse_and_convert() {
        let inst = load_instance_str(SAMPLE).unwrap();
        assert_eq!(inst.n_bs(), 2);
        assert_eq!(inst.tasks[0].size, 1.28e9);
        assert_eq!(inst.tasks[0].weight, 1.0);
        assert_eq!(inst.saturation, 1.0);
        assert!(inst.bs(2).has_server);
        assert_eq!(inst.bs(2).storage_capacity, 4e9);
        assert_eq!(inst.link_model.rate_at_reference, 1.25e9);
    }

    #[test]
    fn round_trip_is_identity_on_canonical_form() {
        let parsed = parse_instance_file(SAMPLE).unwrap();
        let canonical = serialize_instance_file(&parsed).unwrap();
        let reparsed = parse_instance_file(&canonical).unwrap();
        assert_eq!(parsed, reparsed);
        assert_eq!(canonical, serialize_instance_file(&reparsed).unwrap());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = SAMPLE.replace("saturation = 1.0", "saturation = 1.0\nbogus = 3");
        assert!(matches!(
            parse_instance_file(&text),
            Err(InstanceFileError::Parse(_))
        ));
    }

    #[test]
    fn schema_version_checked() {
        let text = SAMPLE.replace("schema_version = 1", "schema_version = 99");
        assert!(matches!(
            parse_instance_file(&text),
            Err(InstanceFileError::SchemaVersion(99))
        ));
    }

    #[test]
    fn explicit_weights_normalize() {
        let text = SAMPLE.replace(
            "[[tasks]]\nid = 1\nsize_gb = 1.28\norigin = 1",
            "[[tasks]]\nid = 1\nsize_gb = 1.28\norigin = 1\nweight = 3.0\n\n[[tasks]]\nid = 2\nsize_gb = 0.5\norigin = 2\nweight = 1.0",
        );
        let inst = load_instance_str(&text).unwrap();
        assert!((inst.tasks[0].weight - 0.75).abs() < 1e-12);
        assert!((inst.tasks[1].weight - 0.25).abs() < 1e-12);
    }
}
