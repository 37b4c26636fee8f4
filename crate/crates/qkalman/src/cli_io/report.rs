//! Serializable decomposition report.

use crate::analysis::{BAEReport, ModeClassification, SpecialCaseFlags, Variable};
use crate::decomposition::{Dims, KalmanResult};
use crate::matrix_core::{CMat, CheckLog, RMat, StructureTolerance, C64};
use crate::system_model::{RealizabilityReport, Representation};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Real matrix with explicit shape so empty blocks keep their dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealMatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<f64>>,
}

impl From<&RMat> for RealMatrixJson {
    fn from(x: &RMat) -> Self {
        RealMatrixJson {
            rows: x.nrows(),
            cols: x.ncols(),
            data: (0..x.nrows()).map(|i| x.row(i).iter().cloned().collect()).collect(),
        }
    }
}

impl RealMatrixJson {
    pub fn to_matrix(&self) -> RMat {
        RMat::from_fn(self.rows, self.cols, |i, j| self.data[i][j])
    }
}

/// Complex matrix; entries are `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<[f64; 2]>>,
}

impl From<&CMat> for ComplexMatrixJson {
    fn from(x: &CMat) -> Self {
        ComplexMatrixJson {
            rows: x.nrows(),
            cols: x.ncols(),
            data: (0..x.nrows())
                .map(|i| x.row(i).iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

impl ComplexMatrixJson {
    pub fn to_matrix(&self) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| C64::new(self.data[i][j][0], self.data[i][j][1]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RearrangedJson {
    pub labels: Vec<String>,
    pub a: RealMatrixJson,
    pub b: RealMatrixJson,
    pub c: RealMatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassiveJson {
    pub unitary: ComplexMatrixJson,
    pub a_co: ComplexMatrixJson,
    pub a_df: ComplexMatrixJson,
    pub b_co: ComplexMatrixJson,
    pub c_co: ComplexMatrixJson,
    pub dfs_eigenvalues: Vec<C64>,
    /// Dimensions found by the general pipeline on the embedded system.
    pub embedded_dims: Dims,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub name: Option<String>,
    pub description: Option<String>,
    pub representation: Representation,
    /// Hex SHA-256 of the input bytes.
    pub input_sha256: String,
    /// Canonical echo of the parsed spec.
    pub input: serde_json::Value,
    pub notices: Vec<String>,
    pub tolerances: StructureTolerance,
    pub realizability: RealizabilityReport,
    pub dims: Dims,
    pub t: ComplexMatrixJson,
    pub t_tilde: ComplexMatrixJson,
    pub s: RealMatrixJson,
    pub s_tilde: RealMatrixJson,
    pub pi: RealMatrixJson,
    pub complex_labels: Vec<String>,
    /// Non-empty canonical blocks of the complex form.
    pub complex_blocks: BTreeMap<String, ComplexMatrixJson>,
    /// Non-empty canonical blocks of the real form.
    pub real_blocks: BTreeMap<String, RealMatrixJson>,
    pub rearranged: RearrangedJson,
    /// Real canonical variables in the original quadratures.
    pub real_variables: Vec<Variable>,
    pub passive: Option<PassiveJson>,
    pub modes: ModeClassification,
    pub bae: Vec<BAEReport>,
    pub flags: SpecialCaseFlags,
    pub checks: CheckLog,
    pub passed: bool,
}

pub(crate) fn complex_blocks(r: &KalmanResult) -> BTreeMap<String, ComplexMatrixJson> {
    let c = &r.complex;
    let named: [(&str, &CMat); 14] = [
        ("A_bar", &c.a_bar),
        ("B_bar", &c.b_bar),
        ("C_bar", &c.c_bar),
        ("A_h", &c.a_h),
        ("A12", &c.a12),
        ("A13", &c.a13),
        ("A21", &c.a21),
        ("A31", &c.a31),
        ("A_co", &c.a_co),
        ("A_cbar_obar", &c.a_cbar_obar),
        ("B_h", &c.b_h),
        ("B_co", &c.b_co),
        ("C_h", &c.c_h),
        ("C_co", &c.c_co),
    ];
    named
        .iter()
        .filter(|(_, m)| !m.is_empty())
        .map(|(k, m)| (k.to_string(), ComplexMatrixJson::from(*m)))
        .collect()
}

pub(crate) fn real_blocks(r: &KalmanResult) -> BTreeMap<String, RealMatrixJson> {
    let c = &r.real;
    let named: [(&str, &RMat); 16] = [
        ("A_bar", &c.a_bar),
        ("B_bar", &c.b_bar),
        ("C_bar", &c.c_bar),
        ("A_h11", &c.a_h11),
        ("A_h12", &c.a_h12),
        ("A_h22", &c.a_h22),
        ("A12", &c.a12),
        ("A13", &c.a13),
        ("A21", &c.a21),
        ("A31", &c.a31),
        ("A_co", &c.a_co),
        ("A_cbar_obar", &c.a_cbar_obar),
        ("B_h", &c.b_h),
        ("B_co", &c.b_co),
        ("C_h", &c.c_h),
        ("C_co", &c.c_co),
    ];
    named
        .iter()
        .filter(|(_, m)| !m.is_empty())
        .map(|(k, m)| (k.to_string(), RealMatrixJson::from(*m)))
        .collect()
}

pub fn report_to_json(report: &DecompositionReport) -> String {
    serde_json::to_string_pretty(report).expect("report fields are all serializable")
}

pub fn report_from_json(text: &str) -> Result<DecompositionReport, serde_json::Error> {
    serde_json::from_str(text)
}
