//! JSON system description files.
//!
//! ```json
//! { "name": "example2", "representation": "complex", "n": 2, "m": 1,
//!   "Omega_minus": [[[0,0],[1,0]],[[1,0],[0,0]]], "Omega_plus": ...,
//!   "Cminus": [[[1,0],[0,0]]], "Cplus": [[[0,0],[0,0]]],
//!   "tolerances": { "zero_tol": 1e-9 } }
//! ```
//!
//! Complex entries are `[re, im]` pairs (a bare number means zero imaginary
//! part). Passive specs carry `Omega_minus` and `Cminus`; real specs carry
//! `H` (2n x 2n) and `C` (2m x 2n) as plain numbers.

use crate::matrix_core::{CMat, RMat, C64};
use crate::system_model::{Representation, HERMITIAN_GATE};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecErrorKind {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("missing required field")]
    Missing,
    #[error("unknown field")]
    Unknown,
    #[error("expected {expected}, found {found}")]
    Type { expected: &'static str, found: String },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("unknown representation tag {0:?}")]
    UnknownRepresentation(String),
    #[error("not {kind}: asymmetry {asymmetry:.3e} exceeds {gate:.1e} at entries {entries:?}")]
    NotHermitian {
        kind: &'static str,
        asymmetry: f64,
        gate: f64,
        entries: Vec<(usize, usize)>,
    },
    #[error("{0}")]
    Invalid(String),
}

/// Parse or validation failure at a field path such as `Cminus[0][2]`.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("{path}: {kind}")]
pub struct SpecError {
    pub path: String,
    pub kind: SpecErrorKind,
}

fn err(path: impl Into<String>, kind: SpecErrorKind) -> SpecError {
    SpecError {
        path: path.into(),
        kind,
    }
}

fn found(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(_) => "boolean".into(),
        Value::Number(n) => format!("number {n}"),
        Value::String(s) => format!("string {s:?}"),
        Value::Array(a) => format!("array of length {}", a.len()),
        Value::Object(_) => "object".into(),
    }
}

/// Optional per-spec tolerance overrides; unset fields fall through to the
/// environment or defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eig_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify_tol: Option<f64>,
}

impl ToleranceOverrides {
    pub fn is_empty(&self) -> bool {
        *self == ToleranceOverrides::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpecMatrices {
    Complex {
        omega_minus: CMat,
        omega_plus: CMat,
        c_minus: CMat,
        c_plus: CMat,
    },
    Passive {
        omega_minus: CMat,
        c_minus: CMat,
    },
    Real {
        h: RMat,
        c: RMat,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpecFile {
    pub name: Option<String>,
    pub description: Option<String>,
    pub n: usize,
    pub m: usize,
    pub matrices: SpecMatrices,
    pub tolerances: ToleranceOverrides,
}

impl SystemSpecFile {
    pub fn representation(&self) -> Representation {
        match self.matrices {
            SpecMatrices::Complex { .. } => Representation::Complex,
            SpecMatrices::Passive { .. } => Representation::Passive,
            SpecMatrices::Real { .. } => Representation::Real,
        }
    }
}

fn number(v: &Value, path: &str) -> Result<f64, SpecError> {
    v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| {
        err(
            path,
            SpecErrorKind::Type {
                expected: "finite number",
                found: found(v),
            },
        )
    })
}

fn complex_entry(v: &Value, path: &str) -> Result<C64, SpecError> {
    match v {
        Value::Array(pair) if pair.len() == 2 => Ok(C64::new(
            number(&pair[0], &format!("{path}[0]"))?,
            number(&pair[1], &format!("{path}[1]"))?,
        )),
        Value::Number(_) => Ok(C64::new(number(v, path)?, 0.0)),
        _ => Err(err(
            path,
            SpecErrorKind::Type {
                expected: "[re, im] pair",
                found: found(v),
            },
        )),
    }
}

fn matrix<T: nalgebra::Scalar + Copy>(
    obj: &Map<String, Value>,
    key: &str,
    shape: (usize, usize),
    entry: impl Fn(&Value, &str) -> Result<T, SpecError>,
    zero: T,
) -> Result<nalgebra::DMatrix<T>, SpecError> {
    let v = obj.get(key).ok_or_else(|| err(key, SpecErrorKind::Missing))?;
    let rows = v.as_array().ok_or_else(|| {
        err(
            key,
            SpecErrorKind::Type {
                expected: "array of rows",
                found: found(v),
            },
        )
    })?;
    let mut cols = None;
    for (i, row) in rows.iter().enumerate() {
        let r = row.as_array().ok_or_else(|| {
            err(
                format!("{key}[{i}]"),
                SpecErrorKind::Type {
                    expected: "array row",
                    found: found(row),
                },
            )
        })?;
        match cols {
            None => cols = Some(r.len()),
            Some(c) if c != r.len() => {
                return Err(err(
                    format!("{key}[{i}]"),
                    SpecErrorKind::Invalid(format!("ragged row of length {} (earlier rows have {c})", r.len())),
                ))
            }
            _ => {}
        }
    }
    let found_shape = (rows.len(), cols.unwrap_or(shape.1));
    if found_shape != shape {
        return Err(err(
            key,
            SpecErrorKind::Shape {
                expected: shape,
                found: found_shape,
            },
        ));
    }
    let mut out = nalgebra::DMatrix::from_element(shape.0, shape.1, zero);
    for (i, row) in rows.iter().enumerate() {
        for (j, x) in row.as_array().expect("checked above").iter().enumerate() {
            out[(i, j)] = entry(x, &format!("{key}[{i}][{j}]"))?;
        }
    }
    Ok(out)
}

fn asymmetry_gate(x: &CMat, path: &str, transpose_only: bool) -> Result<(), SpecError> {
    let partner = if transpose_only { x.transpose() } else { x.adjoint() };
    let d = x - &partner;
    let asymmetry = d.iter().fold(0.0, |a: f64, z| a.max(z.norm()));
    if asymmetry > HERMITIAN_GATE {
        let n = x.nrows();
        let entries = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .filter(|&(i, j)| d[(i, j)].norm() > HERMITIAN_GATE)
            .collect();
        return Err(err(
            path,
            SpecErrorKind::NotHermitian {
                kind: if transpose_only { "symmetric" } else { "Hermitian" },
                asymmetry,
                gate: HERMITIAN_GATE,
                entries,
            },
        ));
    }
    Ok(())
}

fn dimension(obj: &Map<String, Value>, key: &str) -> Result<usize, SpecError> {
    let v = obj.get(key).ok_or_else(|| err(key, SpecErrorKind::Missing))?;
    v.as_u64().map(|x| x as usize).ok_or_else(|| {
        err(
            key,
            SpecErrorKind::Type {
                expected: "non-negative integer",
                found: found(v),
            },
        )
    })
}

fn opt_string(obj: &Map<String, Value>, key: &str) -> Result<Option<String>, SpecError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(v) => Err(err(
            key,
            SpecErrorKind::Type {
                expected: "string",
                found: found(v),
            },
        )),
    }
}

pub fn parse_spec(bytes: &[u8]) -> Result<SystemSpecFile, SpecError> {
    let text = std::str::from_utf8(bytes).map_err(|e| err("$", SpecErrorKind::Json(e.to_string())))?;
    let root: Value = serde_json::from_str(text).map_err(|e| err("$", SpecErrorKind::Json(e.to_string())))?;
    let obj = root.as_object().ok_or_else(|| {
        err(
            "$",
            SpecErrorKind::Type {
                expected: "object",
                found: found(&root),
            },
        )
    })?;
    let tag = match obj.get("representation") {
        Some(Value::String(s)) => s.as_str(),
        Some(v) => {
            return Err(err(
                "representation",
                SpecErrorKind::Type {
                    expected: "string",
                    found: found(v),
                },
            ))
        }
        None => return Err(err("representation", SpecErrorKind::Missing)),
    };
    let matrix_keys: &[&str] = match tag {
        "complex" => &["Omega_minus", "Omega_plus", "Cminus", "Cplus"],
        "passive" => &["Omega_minus", "Cminus"],
        "real" => &["H", "C"],
        other => {
            return Err(err(
                "representation",
                SpecErrorKind::UnknownRepresentation(other.to_string()),
            ))
        }
    };
    for key in obj.keys() {
        let known = ["name", "description", "representation", "n", "m", "tolerances"].contains(&key.as_str())
            || matrix_keys.contains(&key.as_str());
        if !known {
            return Err(err(key.clone(), SpecErrorKind::Unknown));
        }
    }
    let n = dimension(obj, "n")?;
    let m = dimension(obj, "m")?;
    if n == 0 {
        return Err(err("n", SpecErrorKind::Invalid("system needs at least one mode".into())));
    }
    let cplx = |key: &str, shape| matrix(obj, key, shape, complex_entry, C64::new(0.0, 0.0));
    let matrices = match tag {
        "complex" => {
            let omega_minus = cplx("Omega_minus", (n, n))?;
            let omega_plus = cplx("Omega_plus", (n, n))?;
            asymmetry_gate(&omega_minus, "Omega_minus", false)?;
            asymmetry_gate(&omega_plus, "Omega_plus", true)?;
            SpecMatrices::Complex {
                omega_minus,
                omega_plus,
                c_minus: cplx("Cminus", (m, n))?,
                c_plus: cplx("Cplus", (m, n))?,
            }
        }
        "passive" => {
            let omega_minus = cplx("Omega_minus", (n, n))?;
            asymmetry_gate(&omega_minus, "Omega_minus", false)?;
            SpecMatrices::Passive {
                omega_minus,
                c_minus: cplx("Cminus", (m, n))?,
            }
        }
        _ => {
            let h = matrix(obj, "H", (2 * n, 2 * n), number, 0.0)?;
            asymmetry_gate(&h.map(|x| C64::new(x, 0.0)), "H", true)?;
            SpecMatrices::Real {
                h,
                c: matrix(obj, "C", (2 * m, 2 * n), number, 0.0)?,
            }
        }
    };
    let tolerances = match obj.get("tolerances") {
        None | Some(Value::Null) => ToleranceOverrides::default(),
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| err("tolerances", SpecErrorKind::Invalid(e.to_string())))?,
    };
    Ok(SystemSpecFile {
        name: opt_string(obj, "name")?,
        description: opt_string(obj, "description")?,
        n,
        m,
        matrices,
        tolerances,
    })
}

fn complex_json(x: &CMat) -> Value {
    Value::Array(
        (0..x.nrows())
            .map(|i| Value::Array((0..x.ncols()).map(|j| json!([x[(i, j)].re, x[(i, j)].im])).collect()))
            .collect(),
    )
}

fn real_json(x: &RMat) -> Value {
    Value::Array(
        (0..x.nrows())
            .map(|i| Value::Array((0..x.ncols()).map(|j| json!(x[(i, j)])).collect()))
            .collect(),
    )
}

/// Canonical JSON form of a spec; `parse_spec` of its serialization gives
/// back an equal spec.
pub fn spec_to_json(spec: &SystemSpecFile) -> Value {
    let mut obj = Map::new();
    if let Some(name) = &spec.name {
        obj.insert("name".into(), json!(name));
    }
    if let Some(d) = &spec.description {
        obj.insert("description".into(), json!(d));
    }
    obj.insert("representation".into(), serde_json::to_value(spec.representation()).expect("enum"));
    obj.insert("n".into(), json!(spec.n));
    obj.insert("m".into(), json!(spec.m));
    match &spec.matrices {
        SpecMatrices::Complex {
            omega_minus,
            omega_plus,
            c_minus,
            c_plus,
        } => {
            obj.insert("Omega_minus".into(), complex_json(omega_minus));
            obj.insert("Omega_plus".into(), complex_json(omega_plus));
            obj.insert("Cminus".into(), complex_json(c_minus));
            obj.insert("Cplus".into(), complex_json(c_plus));
        }
        SpecMatrices::Passive { omega_minus, c_minus } => {
            obj.insert("Omega_minus".into(), complex_json(omega_minus));
            obj.insert("Cminus".into(), complex_json(c_minus));
        }
        SpecMatrices::Real { h, c } => {
            obj.insert("H".into(), real_json(h));
            obj.insert("C".into(), real_json(c));
        }
    }
    if !spec.tolerances.is_empty() {
        obj.insert("tolerances".into(), serde_json::to_value(spec.tolerances).expect("plain struct"));
    }
    Value::Object(obj)
}

pub fn emit_spec(spec: &SystemSpecFile) -> String {
    serde_json::to_string_pretty(&spec_to_json(spec)).expect("JSON values always serialize")
}
