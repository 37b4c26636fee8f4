//! Physical reading of a decomposition: decoherence-free modes, QND
//! variables and their QMFS, back-action evasion, and the structural special
//! cases where the `h` sector decouples further.

use crate::decomposition::KalmanResult;
use crate::matrix_core::{max_norm, max_norm_real, CMat, CheckFailure, CheckLog, RMat, StructureTolerance, C64};
use crate::subspaces::{containment_gap, image, kalman_subspaces, overlap, SubspaceError, ANGLE_TOL};
use crate::system_model::{transfer_function, QLSystem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("decomposition is inconsistent with its own canonical form: {0}")]
    Inconsistent(#[from] CheckFailure),
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
}

/// A canonical variable written in the original quadratures `[q; p]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub label: String,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModePair {
    pub q: Variable,
    pub p: Variable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// `q_h`: conjugate partner of a QND variable.
    QndConjugate,
    /// `p_h`: QND variable.
    Qnd,
    ControllableObservable,
    DecoherenceFree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeClassification {
    pub df_modes: Vec<ModePair>,
    pub qnd_variables: Vec<Variable>,
    /// Labels of the variables spanning the QMFS.
    pub qmfs: Vec<String>,
    pub co_modes: Vec<ModePair>,
    /// `(q_h,i, p_h,i)` label pairs.
    pub conjugate_pairing: Vec<(String, String)>,
    /// Role of every real canonical variable, in `[q_h, p_h, x_co, x_c̄ō]` order.
    pub roles: Vec<(String, Role)>,
    pub checks: CheckLog,
}

fn variable(vars: &RMat, labels: &[String], i: usize) -> Variable {
    Variable {
        label: labels[i].clone(),
        coefficients: vars.row(i).iter().cloned().collect(),
    }
}

/// Labels every canonical variable and verifies the input-free, closed `p_h`
/// dynamics and the input/output decoupling of the DF block.
pub fn classify_modes(result: &KalmanResult, tol: &StructureTolerance) -> Result<ModeClassification, AnalysisError> {
    let d = &result.dims;
    let n = d.n;
    let vars = result.real_variables();
    let labels = result.real_labels();
    let mut checks = CheckLog::default();
    let z = tol.zero_tol;

    let re = &result.real.rearranged;
    let ph0 = 2 * n - d.n3;
    let ph_rows = re.a.view((ph0, 0), (d.n3, ph0)).into_owned();
    checks.require("p_h rows of rearranged Ā outside A_h22", max_norm_real(&ph_rows), z)?;
    checks.require(
        "p_h rows of B̄",
        max_norm_real(&re.b.view((ph0, 0), (d.n3, re.b.ncols())).into_owned()),
        z,
    )?;
    let cc0 = 2 * d.n3 + 2 * d.n1;
    checks.require(
        "x_c̄ō rows of B̄",
        max_norm_real(&result.real.b_bar.view((cc0, 0), (2 * d.n2, 2 * d.m)).into_owned()),
        z,
    )?;
    checks.require(
        "x_c̄ō columns of C̄",
        max_norm_real(&result.real.c_bar.view((0, cc0), (2 * d.m, 2 * d.n2)).into_owned()),
        z,
    )?;

    let pairs = |start: usize, k: usize| -> Vec<ModePair> {
        (0..k)
            .map(|i| ModePair {
                q: variable(&vars, &labels, start + i),
                p: variable(&vars, &labels, start + k + i),
            })
            .collect()
    };
    let qnd: Vec<Variable> = (0..d.n3).map(|i| variable(&vars, &labels, d.n3 + i)).collect();
    let mut roles = Vec::with_capacity(2 * n);
    for (i, l) in labels.iter().enumerate() {
        let role = if i < d.n3 {
            Role::QndConjugate
        } else if i < 2 * d.n3 {
            Role::Qnd
        } else if i < cc0 {
            Role::ControllableObservable
        } else {
            Role::DecoherenceFree
        };
        roles.push((l.clone(), role));
    }
    Ok(ModeClassification {
        df_modes: pairs(cc0, d.n2),
        qmfs: qnd.iter().map(|v| v.label.clone()).collect(),
        qnd_variables: qnd,
        co_modes: pairs(2 * d.n3, d.n1),
        conjugate_pairing: (0..d.n3).map(|i| (labels[i].clone(), labels[d.n3 + i].clone())).collect(),
        roles,
        checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaeDirection {
    /// Zero transfer from `p_in` to `q_out`.
    PInToQOut,
    /// Zero transfer from `q_in` to `p_out`.
    QInToPOut,
}

impl BaeDirection {
    pub const ALL: [BaeDirection; 2] = [BaeDirection::PInToQOut, BaeDirection::QInToPOut];

    fn quadratures(self) -> (&'static str, &'static str) {
        match self {
            BaeDirection::PInToQOut => ("p_in", "q_out"),
            BaeDirection::QInToPOut => ("q_in", "p_out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BAEReport {
    pub direction: BaeDirection,
    pub input_quadrature: String,
    pub output_quadrature: String,
    /// `max |C_. A_co^k B_.|` for `k = 0..2n1-1`.
    pub markov_residuals: Vec<f64>,
    pub verdict: bool,
    pub sample_points: Vec<C64>,
    /// Max entry of the relevant transfer-function block at each sample point.
    pub sample_residuals: Vec<f64>,
}

/// Sample points for the transfer-function cross-check. A point too close
/// to a pole is skipped.
pub const BAE_SAMPLES: [C64; 10] = [
    C64::new(1.3, 0.4),
    C64::new(2.1, -1.7),
    C64::new(0.6, 3.2),
    C64::new(0.17, -0.83),
    C64::new(3.7, 0.05),
    C64::new(-0.45, 1.9),
    C64::new(0.9, -2.6),
    C64::new(-1.2, -0.35),
    C64::new(0.33, 0.61),
    C64::new(5.4, 4.1),
];

pub fn bae_check(result: &KalmanResult, direction: BaeDirection, tol: &StructureTolerance) -> BAEReport {
    let m = result.dims.m;
    let n1 = result.dims.n1;
    let (rows, cols) = match direction {
        BaeDirection::PInToQOut => (0, m),
        BaeDirection::QInToPOut => (m, 0),
    };
    let b = result.real.b_co.view((0, cols), (2 * n1, m)).into_owned();
    let c = result.real.c_co.view((rows, 0), (m, 2 * n1)).into_owned();
    let mut markov = Vec::with_capacity(2 * n1);
    let mut acc = b.clone();
    for _ in 0..2 * n1 {
        markov.push(max_norm_real(&(&c * &acc)));
        acc = &result.real.a_co * acc;
    }
    let verdict = markov.iter().all(|&r| r <= tol.zero_tol);

    let cm = |x: &RMat| x.map(|v| C64::new(v, 0.0));
    let (a, bb, cc) = (cm(&result.real.a_bar), cm(&result.real.b_bar), cm(&result.real.c_bar));
    let mut points = Vec::new();
    let mut samples = Vec::new();
    for s in BAE_SAMPLES {
        if let Ok(xi) = transfer_function(&a, &bb, &cc, s, tol) {
            let blk: CMat = xi.view((rows, cols), (m, m)).into_owned();
            points.push(s);
            samples.push(max_norm(&blk));
        }
    }
    let (input, output) = direction.quadratures();
    BAEReport {
        direction,
        input_quadrature: input.into(),
        output_quadrature: output.into(),
        markov_residuals: markov,
        verdict,
        sample_points: points,
        sample_residuals: samples,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagStatus {
    /// Every hypothesis that held was followed by its conclusion.
    Consistent,
    /// A hypothesis held but its conclusion failed; the residuals say by how much.
    CounterexampleCandidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialCaseFlags {
    /// `Ω Ker(O_s) ⊆ Ker(O_s)`.
    pub flag1: bool,
    pub flag1_gap: f64,
    /// `max |𝒜13|, |𝒜31|`, checked when `flag1` holds.
    pub flag1_residual: Option<f64>,
    /// `Im(𝒞†) ⊥ Ker(O_s J)`.
    pub flag2: bool,
    pub flag2_overlap: f64,
    /// `max |ℬ_h|, |𝒞_h|`, checked when `flag2` holds.
    pub flag2_residual: Option<f64>,
    pub status: FlagStatus,
}

pub fn special_case_flags(
    sys: &QLSystem,
    result: &KalmanResult,
    tol: &StructureTolerance,
) -> Result<SpecialCaseFlags, AnalysisError> {
    let sub = kalman_subspaces(sys, tol)?;
    let omega = sys.omega().to_full();
    let flag1_gap = if sub.ker_os.dim() == 0 {
        0.0
    } else {
        containment_gap(&image(&(&omega * sub.ker_os.basis()), tol), &sub.ker_os)
    };
    let flag1 = flag1_gap <= ANGLE_TOL;
    let cx = &result.complex;
    let flag1_residual = flag1.then(|| max_norm(&cx.a13).max(max_norm(&cx.a31)));

    let flag2_overlap = overlap(&image(&sys.c().adjoint(), tol), &sub.ker_os_j);
    let flag2 = flag2_overlap <= ANGLE_TOL;
    let flag2_residual = flag2.then(|| max_norm(&cx.b_h).max(max_norm(&cx.c_h)));

    let ok = |r: Option<f64>| r.is_none_or(|v| v <= tol.zero_tol);
    let status = if ok(flag1_residual) && ok(flag2_residual) {
        FlagStatus::Consistent
    } else {
        log::warn!("special-case conclusion failed: {flag1_residual:?} {flag2_residual:?}");
        FlagStatus::CounterexampleCandidate
    };
    Ok(SpecialCaseFlags {
        flag1,
        flag1_gap,
        flag1_residual,
        flag2,
        flag2_overlap,
        flag2_residual,
        status,
    })
}
