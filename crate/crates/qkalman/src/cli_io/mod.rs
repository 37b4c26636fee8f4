//! Spec files in, decomposition reports out, plus the bundled corpus.

pub mod corpus;
pub mod report;
pub mod spec;
pub mod text;

use crate::analysis::{bae_check, classify_modes, special_case_flags, BaeDirection, FlagStatus};
use crate::decomposition::{decompose_general, decompose_passive, KalmanResult};
use crate::matrix_core::StructureTolerance;
use crate::system_model::{build_general, build_passive, QLSystem, RealQLSystem, RealizabilityReport};
use report::{ComplexMatrixJson, PassiveJson, RealMatrixJson, RearrangedJson};
use sha2::{Digest, Sha256};
use spec::{SpecError, SpecMatrices, SystemSpecFile, ToleranceOverrides};
use std::fmt;
use thiserror::Error;

pub use report::{report_from_json, report_to_json, DecompositionReport};
pub use spec::{emit_spec, parse_spec};
pub use text::render_text;

/// Environment variable overriding the default zero tolerance.
pub const ENV_TOL_ZERO: &str = "QKALMAN_TOL_ZERO";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Build,
    Subspaces,
    Decomposition,
    Analysis,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Parse => "parse",
            Stage::Build => "build",
            Stage::Subspaces => "subspaces",
            Stage::Decomposition => "decomposition",
            Stage::Analysis => "analysis",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("{stage} stage: {message}")]
    Validation { stage: Stage, message: String },
    #[error("{stage} stage: {message}")]
    Structural { stage: Stage, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl From<SpecError> for PipelineError {
    fn from(e: SpecError) -> Self {
        PipelineError::Validation {
            stage: Stage::Parse,
            message: e.to_string(),
        }
    }
}

impl PipelineError {
    /// 1 validation, 2 structural or tolerance failure, 3 IO.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation { .. } => 1,
            PipelineError::Structural { .. } => 2,
            PipelineError::Io { .. } => 3,
        }
    }

    fn structural(stage: Stage, e: impl fmt::Display) -> Self {
        PipelineError::Structural {
            stage,
            message: e.to_string(),
        }
    }

    fn validation(stage: Stage, e: impl fmt::Display) -> Self {
        PipelineError::Validation {
            stage,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Text,
}

fn apply(base: &mut StructureTolerance, o: &ToleranceOverrides) {
    if let Some(v) = o.rank_tol {
        base.rank_tol = v;
    }
    if let Some(v) = o.zero_tol {
        base.zero_tol = v;
    }
    if let Some(v) = o.eig_tol {
        base.eig_tol = v;
    }
    if let Some(v) = o.classify_tol {
        base.classify_tol = v;
    }
}

/// Tolerances with precedence default < environment < spec file < CLI.
pub fn resolve_tolerances(
    env_zero: Option<&str>,
    spec: &ToleranceOverrides,
    cli: &ToleranceOverrides,
) -> Result<StructureTolerance, PipelineError> {
    let mut tol = StructureTolerance::default();
    if let Some(raw) = env_zero {
        tol.zero_tol = raw
            .trim()
            .parse()
            .map_err(|_| PipelineError::validation(Stage::Parse, format!("{ENV_TOL_ZERO}={raw:?} is not a number")))?;
    }
    apply(&mut tol, spec);
    apply(&mut tol, cli);
    tol.validated().map_err(|e| PipelineError::validation(Stage::Parse, e))
}

/// The system described by a spec in all of its forms.
#[derive(Debug, Clone)]
pub struct BuiltSystem {
    pub general: QLSystem,
    pub passive: Option<crate::system_model::PassiveQLSystem>,
    pub realizability: RealizabilityReport,
    pub notices: Vec<String>,
}

pub fn build_system(spec: &SystemSpecFile, tol: &StructureTolerance) -> Result<BuiltSystem, PipelineError> {
    let b = |e| PipelineError::validation(Stage::Build, e);
    match &spec.matrices {
        SpecMatrices::Complex {
            omega_minus,
            omega_plus,
            c_minus,
            c_plus,
        } => {
            let (general, notices) = build_general(omega_minus, omega_plus, c_minus, c_plus, tol).map_err(b)?;
            let realizability = general.realizability(tol).map_err(b)?;
            Ok(BuiltSystem {
                general,
                passive: None,
                realizability,
                notices,
            })
        }
        SpecMatrices::Passive { omega_minus, c_minus } => {
            let (p, notices) = build_passive(omega_minus, c_minus, tol).map_err(b)?;
            let realizability = p.realizability(tol).map_err(b)?;
            Ok(BuiltSystem {
                general: p.embed(tol).map_err(b)?,
                passive: Some(p),
                realizability,
                notices,
            })
        }
        SpecMatrices::Real { h, c } => {
            let (real, notices) = RealQLSystem::from_hamiltonian(h, c, tol).map_err(b)?;
            let realizability = real.realizability(tol).map_err(b)?;
            let general = crate::system_model::to_complex_system(&real, tol).map_err(b)?;
            Ok(BuiltSystem {
                general,
                passive: None,
                realizability,
                notices,
            })
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Build, decompose, analyse and assemble the report. Passive specs run both
/// the passive and the embedded general decomposition and compare them.
pub fn run_pipeline(
    spec: &SystemSpecFile,
    input_bytes: &[u8],
    tol: &StructureTolerance,
) -> Result<DecompositionReport, PipelineError> {
    let built = build_system(spec, tol)?;
    let decomp = |e| PipelineError::structural(Stage::Decomposition, e);
    let general = decompose_general(&built.general, tol).map_err(decomp)?;
    let mut checks = general.checks.clone();
    let (result, passive_json): (KalmanResult, Option<PassiveJson>) = match &built.passive {
        Some(p) => {
            let r = decompose_passive(p, tol).map_err(decomp)?;
            let same = general.dims.n3 == 0 && general.dims.n2 == r.dims.n2;
            checks.record(
                "passive and embedded general decompositions agree",
                if same { 0.0 } else { 1.0 },
                0.0,
            );
            let pc = r.passive.as_ref().expect("passive decomposition carries its canonical form");
            let pj = PassiveJson {
                unitary: (&pc.unitary).into(),
                a_co: (&pc.a_co).into(),
                a_df: (&pc.a_df).into(),
                b_co: (&pc.b_co).into(),
                c_co: (&pc.c_co).into(),
                dfs_eigenvalues: pc.dfs_eigenvalues.clone(),
                embedded_dims: general.dims,
            };
            checks = {
                let mut c = r.checks.clone();
                c.extend(&checks);
                c
            };
            (r, Some(pj))
        }
        None => (general, None),
    };
    let analysis = |e| PipelineError::structural(Stage::Analysis, e);
    let modes = classify_modes(&result, tol).map_err(analysis)?;
    checks.extend(&modes.checks);
    let bae: Vec<_> = BaeDirection::ALL.iter().map(|&d| bae_check(&result, d, tol)).collect();
    let flags = special_case_flags(&built.general, &result, tol).map_err(analysis)?;
    checks.record(
        "special-case conclusions hold",
        if flags.status == FlagStatus::Consistent { 0.0 } else { 1.0 },
        0.0,
    );
    let passed = checks.all_passed() && built.realizability.passed();
    let labels = result.real_labels();
    let vars = result.real_variables();
    let real_variables = labels
        .iter()
        .enumerate()
        .map(|(i, l)| crate::analysis::Variable {
            label: l.clone(),
            coefficients: vars.row(i).iter().cloned().collect(),
        })
        .collect();
    let re = &result.real.rearranged;
    Ok(DecompositionReport {
        name: spec.name.clone(),
        description: spec.description.clone(),
        representation: spec.representation(),
        input_sha256: sha256_hex(input_bytes),
        input: spec::spec_to_json(spec),
        notices: built.notices.clone(),
        tolerances: *tol,
        realizability: built.realizability,
        dims: result.dims,
        t: ComplexMatrixJson::from(&result.t),
        t_tilde: ComplexMatrixJson::from(&result.t_tilde),
        s: RealMatrixJson::from(&result.s),
        s_tilde: RealMatrixJson::from(&result.s_tilde),
        pi: RealMatrixJson::from(&result.pi),
        complex_labels: result.complex_labels(),
        complex_blocks: report::complex_blocks(&result),
        real_blocks: report::real_blocks(&result),
        rearranged: RearrangedJson {
            labels: re.labels.clone(),
            a: (&re.a).into(),
            b: (&re.b).into(),
            c: (&re.c).into(),
        },
        real_variables,
        passive: passive_json,
        modes,
        bae,
        flags,
        checks,
        passed,
    })
}

/// Parses `bytes`, resolves tolerances and runs the pipeline.
pub fn run_bytes(
    bytes: &[u8],
    env_zero: Option<&str>,
    cli: &ToleranceOverrides,
) -> Result<DecompositionReport, PipelineError> {
    let spec = parse_spec(bytes)?;
    let tol = resolve_tolerances(env_zero, &spec.tolerances, cli)?;
    run_pipeline(&spec, bytes, &tol)
}

pub fn emit_report(report: &DecompositionReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => report_to_json(report),
        OutputFormat::Text => render_text(report),
    }
}
