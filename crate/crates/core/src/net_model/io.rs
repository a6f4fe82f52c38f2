//! JSON feeder file (format version 1).
//!
//! ```json
//! {
//!   "format": 1,
//!   "slack_voltage": {"phases": "abc", "values": [[1, 0], [-0.5, -0.866], [-0.5, 0.866]]},
//!   "buses": [{"id": "650", "phases": "abc", "slack": true},
//!             {"id": "634", "phases": "abc", "load": {"phases": "abc", "values": [[0.032, 0.022], ...]}}],
//!   "lines": [{"from": "650", "to": "634", "z": {"phases": "abc", "rows": [[[r, x], ...], ...]}}],
//!   "svrs":  [{"from": "650", "to": "rg60", "kind": "B", "phases": "abc"}],
//!   "defaults": {"vmin": 0.93}
//! }
//! ```
//! Complex numbers are `[re, im]` pairs, matrices are row-major over the declared phases.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::model::{BusSpec, FeederDefaults, FeederModel, LineSpec, SvrSpec};
use super::phase::PhaseSet;
use super::taps::{SvrKind, DEFAULT_STEP, DEFAULT_TAP_MAX, DEFAULT_TAP_MIN};
use super::validate::{validate, Violation};
use super::vectors::{MaskError, PhaseMatrix, PhaseVector};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum FeederFileError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation at line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{element}: {source}")]
    Shape {
        element: String,
        #[source]
        source: MaskError,
    },
    #[error("unsupported feeder format version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("bus {bus}: unsupported load model {model:?}; only constant_power wye loads are accepted")]
    LoadModel { bus: String, model: String },
    #[error("invalid feeder: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

impl From<serde_json::Error> for FeederFileError {
    fn from(e: serde_json::Error) -> Self {
        use serde_json::error::Category;
        let (line, column, message) = (e.line(), e.column(), e.to_string());
        match e.classify() {
            Category::Data => FeederFileError::Schema {
                line,
                column,
                message,
            },
            _ => FeederFileError::Syntax {
                line,
                column,
                message,
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorFile {
    phases: PhaseSet,
    values: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    phases: PhaseSet,
    rows: Vec<Vec<Complex64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusFile {
    id: String,
    phases: PhaseSet,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    slack: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    load: Option<VectorFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    load_model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shunt: Option<MatrixFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineFile {
    from: String,
    to: String,
    z: MatrixFile,
}

fn default_tap_min() -> i32 {
    DEFAULT_TAP_MIN
}
fn default_tap_max() -> i32 {
    DEFAULT_TAP_MAX
}
fn default_step() -> f64 {
    DEFAULT_STEP
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SvrFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    from: String,
    to: String,
    kind: SvrKind,
    phases: PhaseSet,
    #[serde(default = "default_tap_min")]
    tap_min: i32,
    #[serde(default = "default_tap_max")]
    tap_max: i32,
    #[serde(default = "default_step")]
    step: f64,
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct DefaultsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vmin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vmax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verify_vmin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verify_vmax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_iter: Option<usize>,
}

impl DefaultsFile {
    fn is_empty(&self) -> bool {
        self.vmin.is_none()
            && self.vmax.is_none()
            && self.verify_vmin.is_none()
            && self.verify_vmax.is_none()
            && self.tol.is_none()
            && self.max_iter.is_none()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeederFile {
    format: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    buses: Vec<BusFile>,
    #[serde(default)]
    lines: Vec<LineFile>,
    #[serde(default)]
    svrs: Vec<SvrFile>,
    slack_voltage: VectorFile,
    #[serde(default, skip_serializing_if = "DefaultsFile::is_empty")]
    defaults: DefaultsFile,
}

fn shape<T>(element: impl Into<String>, r: Result<T, MaskError>) -> Result<T, FeederFileError> {
    r.map_err(|source| FeederFileError::Shape {
        element: element.into(),
        source,
    })
}

/// Parses and validates a feeder file.
pub fn parse_feeder(text: &str) -> Result<FeederModel, FeederFileError> {
    let model = parse_unvalidated(text)?;
    let violations = validate(&model);
    if !violations.is_empty() {
        return Err(FeederFileError::Invalid(violations));
    }
    Ok(model)
}

/// Parses a feeder file without checking model invariants.
pub fn parse_unvalidated(text: &str) -> Result<FeederModel, FeederFileError> {
    let file: FeederFile = serde_json::from_str(text)?;
    if file.format != FORMAT_VERSION {
        return Err(FeederFileError::Version(file.format));
    }

    let mut buses = Vec::with_capacity(file.buses.len());
    for b in file.buses {
        if let Some(m) = &b.load_model {
            if m != "constant_power" {
                return Err(FeederFileError::LoadModel {
                    bus: b.id,
                    model: m.clone(),
                });
            }
        }
        let el = format!("bus {}", b.id);
        let load = match b.load {
            None => PhaseVector::filled(b.phases, Complex64::new(0.0, 0.0)),
            Some(v) => {
                let given = shape(el.clone(), PhaseVector::new(v.phases, v.values))?;
                // canonical form: load spans the bus mask
                if given.mask().is_subset(b.phases) {
                    PhaseVector::from_fn(b.phases, |p| {
                        given.get(p).copied().unwrap_or(Complex64::new(0.0, 0.0))
                    })
                } else {
                    given
                }
            }
        };
        let shunt = match b.shunt {
            None => None,
            Some(m) => Some(shape(el, PhaseMatrix::new(m.phases, m.rows))?),
        };
        buses.push(BusSpec {
            id: b.id,
            phases: b.phases,
            load,
            shunt,
            is_slack: b.slack,
        });
    }

    let mut lines = Vec::with_capacity(file.lines.len());
    for (i, l) in file.lines.into_iter().enumerate() {
        let z = shape(format!("line {} {}->{}", i, l.from, l.to), PhaseMatrix::new(l.z.phases, l.z.rows))?;
        lines.push(LineSpec {
            from: l.from,
            to: l.to,
            z,
        });
    }

    let svrs = file
        .svrs
        .into_iter()
        .map(|s| SvrSpec {
            id: s.id,
            from: s.from,
            to: s.to,
            kind: s.kind,
            phases: s.phases,
            tap_min: s.tap_min,
            tap_max: s.tap_max,
            step: s.step,
        })
        .collect();

    let slack_voltage = shape(
        "slack_voltage",
        PhaseVector::new(file.slack_voltage.phases, file.slack_voltage.values),
    )?;
    let d = file.defaults;
    Ok(FeederModel {
        name: file.name,
        buses,
        lines,
        svrs,
        slack_voltage,
        defaults: FeederDefaults {
            vmin: d.vmin,
            vmax: d.vmax,
            verify_vmin: d.verify_vmin,
            verify_vmax: d.verify_vmax,
            tol: d.tol,
            max_iter: d.max_iter,
        },
    })
}

fn vector_file(v: &PhaseVector<Complex64>) -> VectorFile {
    VectorFile {
        phases: v.mask(),
        values: v.values().to_vec(),
    }
}

fn matrix_file(m: &PhaseMatrix) -> MatrixFile {
    MatrixFile {
        phases: m.mask(),
        rows: m.rows(),
    }
}

/// Serializes a model to the feeder file format (pretty-printed JSON).
pub fn serialize_feeder(model: &FeederModel) -> String {
    let file = FeederFile {
        format: FORMAT_VERSION,
        name: model.name.clone(),
        buses: model
            .buses
            .iter()
            .map(|b| BusFile {
                id: b.id.clone(),
                phases: b.phases,
                slack: b.is_slack,
                load: b.has_load().then(|| vector_file(&b.load)),
                load_model: None,
                shunt: b.shunt.as_ref().map(matrix_file),
            })
            .collect(),
        lines: model
            .lines
            .iter()
            .map(|l| LineFile {
                from: l.from.clone(),
                to: l.to.clone(),
                z: matrix_file(&l.z),
            })
            .collect(),
        svrs: model
            .svrs
            .iter()
            .map(|s| SvrFile {
                id: s.id.clone(),
                from: s.from.clone(),
                to: s.to.clone(),
                kind: s.kind,
                phases: s.phases,
                tap_min: s.tap_min,
                tap_max: s.tap_max,
                step: s.step,
            })
            .collect(),
        slack_voltage: vector_file(&model.slack_voltage),
        defaults: DefaultsFile {
            vmin: model.defaults.vmin,
            vmax: model.defaults.vmax,
            verify_vmin: model.defaults.verify_vmin,
            verify_vmax: model.defaults.verify_vmax,
            tol: model.defaults.tol,
            max_iter: model.defaults.max_iter,
        },
    };
    serde_json::to_string_pretty(&file).expect("feeder serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "format": 1,
        "slack_voltage": {"phases": "a", "values": [[1.0, 0.0]]},
        "buses": [
            {"id": "s", "phases": "a", "slack": true},
            {"id": "1", "phases": "a", "load": {"phases": "a", "values": [[0.1, 0.05]]}}
        ],
        "lines": [{"from": "s", "to": "1", "z": {"phases": "a", "rows": [[[0.01, 0.02]]]}}]
    }"#;

    #[test]
    fn minimal_two_bus() {
        let m = parse_feeder(MINIMAL).unwrap();
        assert_eq!((m.buses.len(), m.lines.len(), m.svrs.len()), (2, 1, 0));
    }

    #[test]
    fn round_trip_is_a_fixed_point() {
        let m = parse_feeder(MINIMAL).unwrap();
        let text = serialize_feeder(&m);
        let m2 = parse_feeder(&text).unwrap();
        assert_eq!(m, m2);
        assert_eq!(text, serialize_feeder(&m2));
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_feeder("{\n  \"format\": 1,\n  oops }").unwrap_err();
        match err {
            FeederFileError::Syntax { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_schema_error() {
        let err = parse_feeder(r#"{"format": 1, "buses": []}"#).unwrap_err();
        assert!(matches!(err, FeederFileError::Schema { .. }), "{err:?}");
    }

    #[test]
    fn wrong_arity_is_shape_error() {
        let bad = MINIMAL.replace("[[0.1, 0.05]]", "[[0.1, 0.05], [0.2, 0.0]]");
        assert!(matches!(parse_feeder(&bad), Err(FeederFileError::Shape { .. })));
    }

    #[test]
    fn other_load_models_rejected() {
        let bad = MINIMAL.replace("\"id\": \"1\",", "\"id\": \"1\", \"load_model\": \"constant_impedance\",");
        assert!(matches!(parse_feeder(&bad), Err(FeederFileError::LoadModel { .. })));
    }

    #[test]
    fn invariant_violations_are_reported() {
        let bad = MINIMAL.replace("\"slack\": true", "\"slack\": false");
        match parse_feeder(&bad) {
            Err(FeederFileError::Invalid(v)) => assert!(!v.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn version_is_checked() {
        let bad = MINIMAL.replace("\"format\": 1", "\"format\": 2");
        assert!(matches!(parse_feeder(&bad), Err(FeederFileError::Version(2))));
    }
}
