//! Linear quantum systems in the annihilation-creation, passive and real
//! quadrature representations.
//!
//! Variable ordering is `[a_1..a_n, a_1*..a_n*]` for the complex picture and
//! `[q_1..q_n, p_1..p_n]` for the real one; field vectors follow suit.

use crate::matrix_core::{
    eigenvalues, ensure_finite, ensure_shape, flat_adjoint, max_norm, sharp_adjoint, to_complex,
    to_real_checked, v_matrix, CMat, DoubledUpMatrix, MatrixError, RMat, StructureTolerance, C64,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Inputs with asymmetry above this are rejected rather than symmetrized.
pub const HERMITIAN_GATE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("{name} is not {kind} (asymmetry {asymmetry:.3e} > {gate:.1e}); violating entries {entries:?}")]
    NotHermitian {
        name: String,
        kind: &'static str,
        asymmetry: f64,
        gate: f64,
        entries: Vec<(usize, usize)>,
    },
    #[error("physical realizability fails: {condition} residual {residual:.3e} > {tol:.1e}")]
    Realizability {
        condition: &'static str,
        residual: f64,
        tol: f64,
    },
    #[error("s = {s} is within {distance:.3e} of the pole {eigenvalue}")]
    PoleProximity { s: C64, eigenvalue: C64, distance: f64 },
    #[error("transfer function solve failed at s = {s}")]
    Singular { s: C64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Complex,
    Passive,
    Real,
}

/// Symmetrizes `x` (Hermitian, or complex-symmetric when `transpose_only`)
/// and reports whether anything changed.
fn symmetrize(
    name: &str,
    x: &CMat,
    transpose_only: bool,
    notices: &mut Vec<String>,
) -> Result<CMat, SystemError> {
    ensure_finite(x)?;
    if !x.is_square() {
        return Err(MatrixError::Shape {
            context: name.to_string(),
            expected: (x.nrows(), x.nrows()),
            found: x.shape(),
        }
        .into());
    }
    let partner = if transpose_only { x.transpose() } else { x.adjoint() };
    let asymmetry = max_norm(&(x - &partner));
    let kind = if transpose_only { "symmetric" } else { "Hermitian" };
    if asymmetry > HERMITIAN_GATE {
        let n = x.nrows();
        let entries = (0..n)
            .flat_map(|i| (i..n).map(move |j| (i, j)))
            .filter(|&(i, j)| (x[(i, j)] - partner[(i, j)]).norm() > HERMITIAN_GATE)
            .collect();
        return Err(SystemError::NotHermitian {
            name: name.to_string(),
            kind,
            asymmetry,
            gate: HERMITIAN_GATE,
            entries,
        });
    }
    if asymmetry > 0.0 {
        notices.push(format!("{name} symmetrized to {kind} (asymmetry {asymmetry:.3e})"));
        log::warn!("{name} symmetrized (asymmetry {asymmetry:.3e})");
    }
    Ok((x + partner) * C64::new(0.5, 0.0))
}

/// Residuals of the physical realizability conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealizabilityReport {
    pub representation: Representation,
    /// `A + A^* + B B^*` with the representation's adjoint.
    pub dynamics_residual: f64,
    /// `B + C^*`.
    pub io_residual: f64,
    pub tol: f64,
    pub dynamics_ok: bool,
    pub io_ok: bool,
}

impl RealizabilityReport {
    pub fn passed(&self) -> bool {
        self.dynamics_ok && self.io_ok
    }

    fn require(self) -> Result<Self, SystemError> {
        if !self.dynamics_ok {
            return Err(SystemError::Realizability {
                condition: "A + A* + BB*",
                residual: self.dynamics_residual,
                tol: self.tol,
            });
        }
        if !self.io_ok {
            return Err(SystemError::Realizability {
                condition: "B + C*",
                residual: self.io_residual,
                tol: self.tol,
            });
        }
        Ok(self)
    }
}

/// Checks `A + A* + BB* = 0` and `B = -C*`, where `*` is `♭` (complex),
/// `†` (passive) or `♯` (real).
pub fn check_realizability(
    a: &CMat,
    b: &CMat,
    c: &CMat,
    representation: Representation,
    tol: &StructureTolerance,
) -> Result<RealizabilityReport, SystemError> {
    let adj = |x: &CMat| -> Result<CMat, MatrixError> {
        match representation {
            Representation::Complex => flat_adjoint(x),
            Representation::Passive => Ok(x.adjoint()),
            Representation::Real => sharp_adjoint(x),
        }
    };
    ensure_shape(a, a.nrows(), a.nrows(), "A")?;
    ensure_shape(b, a.nrows(), b.ncols(), "B")?;
    ensure_shape(c, b.ncols(), a.nrows(), "C")?;
    let dynamics_residual = max_norm(&(a + adj(a)? + b * adj(b)?));
    let io_residual = max_norm(&(b + adj(c)?));
    Ok(RealizabilityReport {
        representation,
        dynamics_residual,
        io_residual,
        tol: tol.zero_tol,
        dynamics_ok: dynamics_residual <= tol.zero_tol,
        io_ok: io_residual <= tol.zero_tol,
    })
}

/// General linear quantum system `(n, m, Ω, C₋, C₊)` with derived `(𝒜, ℬ, 𝒞)`;
/// `𝒟 = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct QLSystem {
    n: usize,
    m: usize,
    omega: DoubledUpMatrix,
    coupling: DoubledUpMatrix,
    a: DoubledUpMatrix,
    b: DoubledUpMatrix,
}

impl QLSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn omega(&self) -> &DoubledUpMatrix {
        &self.omega
    }

    pub fn omega_minus(&self) -> &CMat {
        self.omega.u()
    }

    pub fn omega_plus(&self) -> &CMat {
        self.omega.v()
    }

    pub fn c_minus(&self) -> &CMat {
        self.coupling.u()
    }

    pub fn c_plus(&self) -> &CMat {
        self.coupling.v()
    }

    /// `𝒜` as a dense `2n x 2n` matrix.
    pub fn a(&self) -> CMat {
        self.a.to_full()
    }

    pub fn b(&self) -> CMat {
        self.b.to_full()
    }

    pub fn c(&self) -> CMat {
        self.coupling.to_full()
    }

    pub fn d(&self) -> CMat {
        CMat::identity(2 * self.m, 2 * self.m)
    }

    pub fn a_doubled(&self) -> &DoubledUpMatrix {
        &self.a
    }

    pub fn realizability(&self, tol: &StructureTolerance) -> Result<RealizabilityReport, SystemError> {
        check_realizability(&self.a(), &self.b(), &self.c(), Representation::Complex, tol)
    }

    pub fn is_passive(&self, tol: &StructureTolerance) -> bool {
        max_norm(self.omega_plus()) <= tol.zero_tol && max_norm(self.c_plus()) <= tol.zero_tol
    }
}

/// Builds `𝒞 = Δ(C₋, C₊)`, `ℬ = -𝒞♭`, `𝒜 = -iJΩ - ½𝒞♭𝒞`.
///
/// Returns the system together with any symmetrization notices.
pub fn build_general(
    omega_minus: &CMat,
    omega_plus: &CMat,
    c_minus: &CMat,
    c_plus: &CMat,
    tol: &StructureTolerance,
) -> Result<(QLSystem, Vec<String>), SystemError> {
    let n = omega_minus.nrows();
    let m = c_minus.nrows();
    ensure_shape(omega_minus, n, n, "Omega_minus")?;
    ensure_shape(omega_plus, n, n, "Omega_plus")?;
    ensure_shape(c_minus, m, n, "Cminus")?;
    ensure_shape(c_plus, m, n, "Cplus")?;
    let mut notices = Vec::new();
    let om = symmetrize("Omega_minus", omega_minus, false, &mut notices)?;
    let op = symmetrize("Omega_plus", omega_plus, true, &mut notices)?;
    let omega = DoubledUpMatrix::new(om, op)?;
    let coupling = DoubledUpMatrix::new(c_minus.clone(), c_plus.clone())?;
    let i = C64::new(0.0, 1.0);
    let cfc = coupling.flat().mul(&coupling)?;
    let half = C64::new(0.5, 0.0);
    let a = DoubledUpMatrix::new(
        -(omega.u() * i) - cfc.u() * half,
        -(omega.v() * i) - cfc.v() * half,
    )?;
    let b = coupling.flat().scale(-1.0);
    let sys = QLSystem {
        n,
        m,
        omega,
        coupling,
        a,
        b,
    };
    sys.realizability(tol)?.require()?;
    Ok((sys, notices))
}

/// Passive system: `A = -iΩ₋ - ½C₋†C₋`, `B = -C₋†`, `C = C₋`.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveQLSystem {
    n: usize,
    m: usize,
    omega_minus: CMat,
    c_minus: CMat,
    a: CMat,
}

impl PassiveQLSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn omega_minus(&self) -> &CMat {
        &self.omega_minus
    }

    pub fn c_minus(&self) -> &CMat {
        &self.c_minus
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn b(&self) -> CMat {
        -self.c_minus.adjoint()
    }

    pub fn c(&self) -> &CMat {
        &self.c_minus
    }

    pub fn realizability(&self, tol: &StructureTolerance) -> Result<RealizabilityReport, SystemError> {
        check_realizability(&self.a, &self.b(), &self.c_minus, Representation::Passive, tol)
    }

    /// The same system as a general one with `Ω₊ = 0`, `C₊ = 0`.
    pub fn embed(&self, tol: &StructureTolerance) -> Result<QLSystem, SystemError> {
        let (sys, _) = build_general(
            &self.omega_minus,
            &CMat::zeros(self.n, self.n),
            &self.c_minus,
            &CMat::zeros(self.m, self.n),
            tol,
        )?;
        Ok(sys)
    }
}

pub fn build_passive(
    omega_minus: &CMat,
    c_minus: &CMat,
    tol: &StructureTolerance,
) -> Result<(PassiveQLSystem, Vec<String>), SystemError> {
    let n = omega_minus.nrows();
    let m = c_minus.nrows();
    ensure_shape(omega_minus, n, n, "Omega_minus")?;
    ensure_shape(c_minus, m, n, "Cminus")?;
    ensure_finite(c_minus)?;
    let mut notices = Vec::new();
    let om = symmetrize("Omega_minus", omega_minus, false, &mut notices)?;
    let a = -(&om * C64::new(0.0, 1.0)) - c_minus.adjoint() * c_minus * C64::new(0.5, 0.0);
    let sys = PassiveQLSystem {
        n,
        m,
        omega_minus: om,
        c_minus: c_minus.clone(),
        a,
    };
    sys.realizability(tol)?.require()?;
    Ok((sys, notices))
}

/// Real quadrature form `(A, B, C, D = I, H)` with `𝑯 = ½ xᵀ H x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealQLSystem {
    n: usize,
    m: usize,
    h: RMat,
    a: RMat,
    b: RMat,
    c: RMat,
}

impl RealQLSystem {
    /// System with Hamiltonian matrix `h` (2n x 2n) and real coupling `c` (2m x 2n).
    pub fn from_hamiltonian(
        h: &RMat,
        c: &RMat,
        tol: &StructureTolerance,
    ) -> Result<(RealQLSystem, Vec<String>), SystemError> {
        if !h.nrows().is_multiple_of(2) || !c.nrows().is_multiple_of(2) {
            return Err(MatrixError::OddDimension {
                rows: h.nrows(),
                cols: c.nrows(),
            }
            .into());
        }
        let n = h.nrows() / 2;
        let m = c.nrows() / 2;
        ensure_shape(&to_complex(h), 2 * n, 2 * n, "H")?;
        ensure_shape(&to_complex(c), 2 * m, 2 * n, "C")?;
        let mut notices = Vec::new();
        let hs = symmetrize("H", &to_complex(h), true, &mut notices)?;
        let vn = v_matrix(n);
        let vm = v_matrix(m);
        let omega = vn.adjoint() * hs * &vn;
        let cc = vm.adjoint() * to_complex(c) * &vn;
        let omega = DoubledUpMatrix::from_full(&omega, tol)?;
        let cc = DoubledUpMatrix::from_full(&cc, tol)?;
        let (sys, more) = build_general(omega.u(), omega.v(), cc.u(), cc.v(), tol)?;
        notices.extend(more);
        Ok((to_real(&sys, tol)?, notices))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> &RMat {
        &self.h
    }

    pub fn a(&self) -> &RMat {
        &self.a
    }

    pub fn b(&self) -> &RMat {
        &self.b
    }

    pub fn c(&self) -> &RMat {
        &self.c
    }

    pub fn d(&self) -> RMat {
        RMat::identity(2 * self.m, 2 * self.m)
    }

    pub fn realizability(&self, tol: &StructureTolerance) -> Result<RealizabilityReport, SystemError> {
        check_realizability(
            &to_complex(&self.a),
            &to_complex(&self.b),
            &to_complex(&self.c),
            Representation::Real,
            tol,
        )
    }
}

/// `A = V𝒜V†`, `B = VℬV†`, `C = V𝒞V†`, `H = VΩV†`.
pub fn to_real(sys: &QLSystem, tol: &StructureTolerance) -> Result<RealQLSystem, SystemError> {
    let vn = v_matrix(sys.n);
    let vm = v_matrix(sys.m);
    let real = |x: CMat| to_real_checked(&x, tol.zero_tol);
    let h = real(&vn * sys.omega.to_full() * vn.adjoint())?;
    let h = (&h + h.transpose()) * 0.5;
    Ok(RealQLSystem {
        n: sys.n,
        m: sys.m,
        h,
        a: real(&vn * sys.a() * vn.adjoint())?,
        b: real(&vn * sys.b() * vm.adjoint())?,
        c: real(&vm * sys.c() * vn.adjoint())?,
    })
}

/// Inverse of [`to_real`]: recovers `Ω` from `H` and `(C₋, C₊)` from `C`.
pub fn to_complex_system(sys: &RealQLSystem, tol: &StructureTolerance) -> Result<QLSystem, SystemError> {
    let vn = v_matrix(sys.n);
    let vm = v_matrix(sys.m);
    let omega = DoubledUpMatrix::from_full(&(vn.adjoint() * to_complex(&sys.h) * &vn), tol)?;
    let cc = DoubledUpMatrix::from_full(&(vm.adjoint() * to_complex(&sys.c) * &vn), tol)?;
    let (out, _) = build_general(omega.u(), omega.v(), cc.u(), cc.v(), tol)?;
    Ok(out)
}

/// `Ξ(s) = D - C (sI - A)^{-1} B` with `D = I`, evaluated by an LU solve.
pub fn transfer_function(
    a: &CMat,
    b: &CMat,
    c: &CMat,
    s: C64,
    tol: &StructureTolerance,
) -> Result<CMat, SystemError> {
    ensure_shape(a, a.nrows(), a.nrows(), "A")?;
    ensure_shape(b, a.nrows(), b.ncols(), "B")?;
    ensure_shape(c, b.ncols(), a.nrows(), "C")?;
    let nearest = eigenvalues(a)
        .into_iter()
        .min_by(|x, y| (x - s).norm().total_cmp(&(y - s).norm()));
    if let Some(eig) = nearest {
        let distance = (eig - s).norm();
        if distance <= tol.eig_tol {
            return Err(SystemError::PoleProximity {
                s,
                eigenvalue: eig,
                distance,
            });
        }
    }
    let k = a.nrows();
    let shifted = CMat::identity(k, k) * s - a;
    let x = shifted.lu().solve(b).ok_or(SystemError::Singular { s })?;
    Ok(CMat::identity(c.nrows(), c.nrows()) - c * x)
}

pub fn transfer_function_real(sys: &RealQLSystem, s: C64, tol: &StructureTolerance) -> Result<CMat, SystemError> {
    transfer_function(&to_complex(&sys.a), &to_complex(&sys.b), &to_complex(&sys.c), s, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::{jj_real, max_diff, max_norm_real, spectra_match};
    use proptest::prelude::*;

    fn tol() -> StructureTolerance {
        StructureTolerance::default()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn rmat(r: usize, cols: usize, v: &[f64]) -> CMat {
        CMat::from_row_slice(r, cols, &v.iter().map(|&x| c(x)).collect::<Vec<_>>())
    }

    fn example2() -> QLSystem {
        let sx = rmat(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        build_general(&sx, &sx, &rmat(1, 2, &[1.0, 0.0]), &CMat::zeros(1, 2), &tol())
            .unwrap()
            .0
    }

    fn hermitian(n: usize, vals: &[(f64, f64)]) -> CMat {
        let x = CMat::from_iterator(n, n, vals.iter().map(|&(a, b)| C64::new(a, b)));
        (&x + x.adjoint()) * c(0.5)
    }

    fn cvec(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
    }

    #[test]
    fn example2_drift_entries() {
        let a = example2().a();
        assert!((a[(0, 0)] - c(-0.5)).norm() < 1e-15);
        assert!((a[(0, 1)] - C64::new(0.0, -1.0)).norm() < 1e-15);
        // Ω₊ contributes to the a ← a* block.
        assert!((a[(0, 3)] - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_system_is_zero() {
        let z = CMat::zeros(2, 2);
        let (sys, _) = build_general(&z, &z, &CMat::zeros(1, 2), &CMat::zeros(1, 2), &tol()).unwrap();
        assert_eq!(max_norm(&sys.a()), 0.0);
        assert_eq!(max_norm(&sys.b()), 0.0);
        assert_eq!(max_norm(&sys.c()), 0.0);
        assert_eq!(sys.d(), CMat::identity(2, 2));
    }

    #[test]
    fn example1_passive_matrices() {
        let (sys, _) = build_passive(&CMat::identity(2, 2), &rmat(1, 2, &[1.0, 1.0]), &tol()).unwrap();
        let expected = CMat::from_row_slice(
            2,
            2,
            &[C64::new(-0.5, -1.0), c(-0.5), c(-0.5), C64::new(-0.5, -1.0)],
        );
        assert!(max_diff(sys.a(), &expected) < 1e-15);
        assert!(max_diff(&sys.b(), &rmat(2, 1, &[-1.0, -1.0])) < 1e-15);
        assert!(max_diff(sys.c(), &rmat(1, 2, &[1.0, 1.0])) < 1e-15);
        let emb = sys.embed(&tol()).unwrap();
        let a = emb.a();
        assert!(max_diff(&a.view((0, 0), (2, 2)).into_owned(), sys.a()) < 1e-15);
        assert!(max_diff(&a.view((2, 2), (2, 2)).into_owned(), &sys.a().conjugate()) < 1e-15);
        assert_eq!(max_norm(&a.view((0, 2), (2, 2)).into_owned()), 0.0);
    }

    #[test]
    fn passive_without_coupling() {
        let om = rmat(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let (sys, _) = build_passive(&om, &CMat::zeros(1, 2), &tol()).unwrap();
        assert!(max_diff(sys.a(), &(&om * C64::new(0.0, -1.0))) < 1e-15);
        assert_eq!(max_norm(&sys.b()), 0.0);
    }

    #[test]
    fn example3_hamiltonian() {
        let real = to_real(&example2(), &tol()).unwrap();
        let mut h = RMat::zeros(4, 4);
        h[(0, 1)] = 2.0;
        h[(1, 0)] = 2.0;
        assert!(max_norm_real(&(real.h() - h)) < 1e-14);
        assert_eq!(real.d(), RMat::identity(2, 2));
        let back = to_complex_system(&real, &tol()).unwrap();
        assert!(max_diff(&back.a(), &example2().a()) < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected_and_small_asymmetry_symmetrized() {
        let mut om = rmat(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        om[(0, 1)] += c(1e-8);
        let (_, notices) = build_passive(&om, &CMat::zeros(1, 2), &tol()).unwrap();
        assert_eq!(notices.len(), 1);
        om[(0, 1)] += c(1e-3);
        match build_passive(&om, &CMat::zeros(1, 2), &tol()) {
            Err(SystemError::NotHermitian { entries, .. }) => assert_eq!(entries, vec![(0, 1)]),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn realizability_detects_perturbation() {
        let sys = example2();
        let mut a = sys.a();
        // Off-diagonal, so the ♭ term does not double the perturbation.
        a[(0, 1)] += c(0.01);
        let rep = check_realizability(&a, &sys.b(), &sys.c(), Representation::Complex, &tol()).unwrap();
        assert!(!rep.dynamics_ok);
        assert!((rep.dynamics_residual - 0.01).abs() < 1e-12);
        assert!(rep.io_ok);
        let mut b = sys.b();
        b[(0, 0)] += c(0.5);
        let a = sys.a();
        let rep = check_realizability(&a, &b, &sys.c(), Representation::Complex, &tol()).unwrap();
        assert!(!rep.io_ok);
    }

    #[test]
    fn transfer_function_without_coupling_is_identity() {
        let z = CMat::zeros(2, 2);
        let (sys, _) = build_general(&rmat(2, 2, &[1.0, 0.0, 0.0, 2.0]), &z, &CMat::zeros(1, 2), &CMat::zeros(1, 2), &tol()).unwrap();
        for s in [c(1.0), C64::new(0.3, 2.0)] {
            let xi = transfer_function(&sys.a(), &sys.b(), &sys.c(), s, &tol()).unwrap();
            assert!(max_diff(&xi, &CMat::identity(2, 2)) < 1e-15);
        }
    }

    #[test]
    fn transfer_function_two_methods_agree() {
        let (sys, _) = build_passive(&CMat::identity(2, 2), &rmat(1, 2, &[1.0, 1.0]), &tol()).unwrap();
        let s = c(1.0);
        let xi = transfer_function(sys.a(), &sys.b(), sys.c(), s, &tol()).unwrap();
        // A is normal here: unitary eigenvectors (1,1)/√2 and (1,-1)/√2.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q = rmat(2, 2, &[h, h, h, -h]);
        let lam = [C64::new(-1.0, -1.0), C64::new(0.0, -1.0)];
        let cq = sys.c() * &q;
        let qb = q.adjoint() * sys.b();
        let mut acc = C64::new(1.0, 0.0);
        for i in 0..2 {
            acc -= cq[(0, i)] * qb[(i, 0)] / (s - lam[i]);
        }
        assert!((xi[(0, 0)] - acc).norm() < 1e-10);
    }

    #[test]
    fn pole_proximity_rejected() {
        let (sys, _) = build_passive(&CMat::identity(2, 2), &rmat(1, 2, &[1.0, 1.0]), &tol()).unwrap();
        let err = transfer_function(sys.a(), &sys.b(), sys.c(), C64::new(0.0, -1.0), &tol()).unwrap_err();
        assert!(matches!(err, SystemError::PoleProximity { .. }));
    }

    #[test]
    fn example3_zero_transfer_q_in_to_p_out() {
        let real = to_real(&example2(), &tol()).unwrap();
        for s in [c(1.0), C64::new(2.0, 1.0), c(10.0)] {
            let xi = transfer_function_real(&real, s, &tol()).unwrap();
            assert!(xi[(1, 0)].norm() < 1e-12, "s = {s}: {}", xi[(1, 0)]);
        }
    }

    proptest! {
        #[test]
        fn random_general_systems_are_realizable(om in cvec(9), op in cvec(9), cm in cvec(6), cp in cvec(6)) {
            let om = hermitian(3, &om);
            let op = CMat::from_iterator(3, 3, op.iter().map(|&(a, b)| C64::new(a, b)));
            let op = (&op + op.transpose()) * c(0.5);
            let cm = CMat::from_iterator(2, 3, cm.iter().map(|&(a, b)| C64::new(a, b)));
            let cp = CMat::from_iterator(2, 3, cp.iter().map(|&(a, b)| C64::new(a, b)));
            let (sys, _) = build_general(&om, &op, &cm, &cp, &tol()).unwrap();
            let rep = sys.realizability(&tol()).unwrap();
            prop_assert!(rep.dynamics_residual < 1e-12 && rep.io_residual < 1e-12);
            let real = to_real(&sys, &tol()).unwrap();
            let rr = real.realizability(&tol()).unwrap();
            prop_assert!(rr.dynamics_residual < 1e-12 && rr.io_residual < 1e-12);
            // A = 𝕁H - ½C♯C
            let jh = jj_real(3) * real.h();
            let cs = sharp_adjoint(&to_complex(real.c())).unwrap().map(|z| z.re);
            prop_assert!(max_norm_real(&(real.a() - (jh - cs * real.c() * 0.5))) < 1e-12);
            let back = to_complex_system(&real, &tol()).unwrap();
            prop_assert!(max_diff(&back.a(), &sys.a()) < 1e-12);
            prop_assert!(max_diff(&back.c(), &sys.c()) < 1e-12);
            prop_assert!(max_norm_real(&(to_real(&back, &tol()).unwrap().h() - real.h())) < 1e-12);
            let e1 = eigenvalues(&sys.a());
            let e2 = eigenvalues(&to_complex(real.a()));
            prop_assert!(spectra_match(&e1, &e2, 1e-8));
        }

        #[test]
        fn random_passive_systems(om in cvec(9), cm in cvec(6)) {
            let om = hermitian(3, &om);
            let cm = CMat::from_iterator(2, 3, cm.iter().map(|&(a, b)| C64::new(a, b)));
            let (sys, _) = build_passive(&om, &cm, &tol()).unwrap();
            let rep = sys.realizability(&tol()).unwrap();
            prop_assert!(rep.dynamics_residual < 1e-12 && rep.io_residual < 1e-12);
            for l in eigenvalues(sys.a()) {
                prop_assert!(l.re <= tol().zero_tol);
            }
            let emb = sys.embed(&tol()).unwrap();
            prop_assert!(max_diff(&emb.a().view((0, 0), (3, 3)).into_owned(), sys.a()) < 1e-15);
        }
    }
}
