//! Bogoliubov and symplectic coordinate changes that bring a linear quantum
//! system into Kalman canonical form, for general and passive systems.
//!
//! Sector ordering in every canonical form is `h` (the `cō ⊕ c̄o` pair), then
//! `co`, then `c̄ō`. In real coordinates the `h` sector is split into
//! `(q_h, p_h)`; the rearranged real form orders `(q_h, x_co, x_c̄ō, p_h)`.

use crate::matrix_core::{
    block_diag, bogoliubov_residual, eigenvalues, flat_adjoint, hstack, j_mat, jj_real, max_norm,
    max_norm_real, real_svd, clustered_spectral_distance_admitting, svd, to_complex, v_matrix, CMat, CheckFailure,
    CheckLog, DoubledUpMatrix, MatrixError, RMat, StructureTolerance, C64, I,
};
use crate::subspaces::{
    image, kalman_subspaces, passive_subspaces, subspace_gap, SubspaceBasis,
    SubspaceError, ANGLE_TOL,
};
use crate::system_model::{to_real, PassiveQLSystem, QLSystem, SystemError};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

type CVec = DVector<C64>;

/// Relative width of the band in which two magnitudes count as tied when
/// choosing the entry that fixes a basis vector's phase.
const PHASE_TIE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompositionError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
    #[error("structural assertion failed: {0}")]
    Structure(#[from] CheckFailure),
    #[error("basis sweep failed: {0}")]
    Sweep(String),
}

/// Half-bases of the sectors: `Z1` (co), `Z2` (c̄ō), and the `h`-sector
/// columns `X` (case I) and `Y` (case II) with `Z3 = [X Y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockBases {
    pub z1: CMat,
    pub z2: CMat,
    pub x: CMat,
    pub y: CMat,
}

impl BlockBases {
    pub fn z3(&self) -> CMat {
        hstack(&[&self.x, &self.y])
    }

    pub fn n(&self) -> usize {
        self.z1.nrows()
    }

    pub fn dims(&self, m: usize) -> Dims {
        Dims {
            n: self.n(),
            m,
            n1: self.z1.ncols(),
            n2: self.z2.ncols(),
            n3: self.x.ncols() + self.y.ncols(),
            na: self.x.ncols(),
            nb: self.y.ncols(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub na: usize,
    pub nb: usize,
}

/// Index ranges of the sectors in a `2n`-dimensional canonical coordinate
/// vector. Complex: `[h (2n3), co (2n1), c̄ō (2n2)]`. Real: `[q_h, p_h, x_co, x_c̄ō]`.
#[derive(Debug, Clone, Copy)]
struct Sectors {
    n1: usize,
    n2: usize,
    n3: usize,
}

impl Sectors {
    fn from_dims(d: &Dims) -> Self {
        Sectors {
            n1: d.n1,
            n2: d.n2,
            n3: d.n3,
        }
    }

    fn h(&self) -> (usize, usize) {
        (0, 2 * self.n3)
    }

    fn qh(&self) -> (usize, usize) {
        (0, self.n3)
    }

    fn ph(&self) -> (usize, usize) {
        (self.n3, self.n3)
    }

    fn co(&self) -> (usize, usize) {
        (2 * self.n3, 2 * self.n1)
    }

    fn cc(&self) -> (usize, usize) {
        (2 * self.n3 + 2 * self.n1, 2 * self.n2)
    }
}

fn cblock(x: &CMat, r: (usize, usize), c: (usize, usize)) -> CMat {
    x.view((r.0, c.0), (r.1, c.1)).into_owned()
}

fn rblock(x: &RMat, r: (usize, usize), c: (usize, usize)) -> RMat {
    x.view((r.0, c.0), (r.1, c.1)).into_owned()
}

fn all(len: usize) -> (usize, usize) {
    (0, len)
}

/// Canonical blocks in the annihilation-creation representation.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexCanonical {
    pub a_bar: CMat,
    pub b_bar: CMat,
    pub c_bar: CMat,
    pub a_h: CMat,
    pub a12: CMat,
    pub a13: CMat,
    pub a21: CMat,
    pub a31: CMat,
    pub a_co: CMat,
    pub a_cbar_obar: CMat,
    pub b_h: CMat,
    pub b_co: CMat,
    pub c_h: CMat,
    pub c_co: CMat,
}

/// Rearranged real form over `(q_h, x_co, x_c̄ō, p_h)`; `a` is upper block
/// triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangedForm {
    pub a: RMat,
    pub b: RMat,
    pub c: RMat,
    pub labels: Vec<String>,
}

/// Canonical blocks in the real quadrature representation.
#[derive(Debug, Clone, PartialEq)]
pub struct RealCanonical {
    pub a_bar: RMat,
    pub b_bar: RMat,
    pub c_bar: RMat,
    pub a_h11: RMat,
    pub a_h12: RMat,
    pub a_h22: RMat,
    pub a12: RMat,
    pub a13: RMat,
    pub a21: RMat,
    pub a31: RMat,
    pub a_co: RMat,
    pub a_cbar_obar: RMat,
    pub b_h: RMat,
    pub b_co: RMat,
    pub c_h: RMat,
    pub c_co: RMat,
    pub rearranged: RearrangedForm,
}

/// Unitary splitting of a passive system on the annihilation operators only.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveCanonical {
    /// Columns: controllable basis, then the decoherence-free basis.
    pub unitary: CMat,
    pub a_bar: CMat,
    pub b_bar: CMat,
    pub c_bar: CMat,
    pub a_co: CMat,
    pub a_df: CMat,
    pub b_co: CMat,
    pub c_co: CMat,
    /// Imaginary-axis eigenvalues of `A`, which all belong to the DFS.
    pub dfs_eigenvalues: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanResult {
    pub dims: Dims,
    pub blocks: BlockBases,
    pub t_tilde: CMat,
    pub t: CMat,
    pub s_tilde: RMat,
    pub s: RMat,
    pub pi: RMat,
    pub complex: ComplexCanonical,
    pub real: RealCanonical,
    pub passive: Option<PassiveCanonical>,
    pub checks: CheckLog,
}

impl KalmanResult {
    /// Names of the real canonical variables in `[q_h, p_h, x_co, x_c̄ō]` order.
    pub fn real_labels(&self) -> Vec<String> {
        real_labels(&self.dims)
    }

    /// Names of the complex canonical variables in `[h, co, c̄ō]` order.
    pub fn complex_labels(&self) -> Vec<String> {
        let d = &self.dims;
        let mut out = Vec::new();
        for (tag, k) in [("h", d.n3), ("co", d.n1), ("df", d.n2)] {
            out.extend((1..=k).map(|i| format!("a_{tag}{i}")));
            out.extend((1..=k).map(|i| format!("a_{tag}{i}*")));
        }
        out
    }

    /// Row `i` gives real canonical variable `i` in the original quadratures.
    pub fn real_variables(&self) -> RMat {
        self.s.transpose()
    }
}

fn real_labels(d: &Dims) -> Vec<String> {
    let mut out = Vec::new();
    out.extend((1..=d.n3).map(|i| format!("q_h{i}")));
    out.extend((1..=d.n3).map(|i| format!("p_h{i}")));
    for (tag, k) in [("co", d.n1), ("df", d.n2)] {
        out.extend((1..=k).map(|i| format!("q_{tag}{i}")));
        out.extend((1..=k).map(|i| format!("p_{tag}{i}")));
    }
    out
}

#[derive(Debug, Clone, Copy)]
enum PhaseRule {
    /// Largest entry made real positive; ties go to the first index.
    Full,
    /// Sign flip only so the largest entry has positive real part (imaginary
    /// part when the real part vanishes); ties go to the last index.
    Sign,
}

fn fix_phase(v: &mut CVec, rule: PhaseRule) {
    let mag = v.iter().fold(0.0, |a: f64, z| a.max(z.norm()));
    if mag == 0.0 {
        return;
    }
    let tied = |z: &C64| z.norm() >= mag * (1.0 - PHASE_TIE);
    match rule {
        PhaseRule::Full => {
            let z = *v.iter().find(|z| tied(z)).expect("max entry exists");
            let ph = z.conj() / z.norm();
            *v *= ph;
        }
        PhaseRule::Sign => {
            let z = *v.iter().rev().find(|z| tied(z)).expect("max entry exists");
            let key = if z.re.abs() > PHASE_TIE * mag { z.re } else { z.im };
            if key < 0.0 {
                *v *= C64::new(-1.0, 0.0);
            }
        }
    }
}

fn cdot(a: &CVec, b: &CVec) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Gram-Schmidt against `basis` (twice), then normalize.
fn orthonormalize_against(mut v: CVec, basis: &[CVec]) -> (CVec, f64) {
    for _ in 0..2 {
        for b in basis {
            let c = cdot(b, &v);
            v -= b * c;
        }
    }
    let nv = v.norm();
    if nv > 0.0 {
        v /= C64::new(nv, 0.0);
    }
    (v, nv)
}

fn columns_to_mat(rows: usize, cols: &[CVec]) -> CMat {
    let mut out = CMat::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Half-basis `Z` of a `J`-self-mapped subspace `S ⊂ C^2n`, so that the
/// columns of `[Z 0; 0 Z#]` span `S`.
pub fn build_paired_basis(s: &SubspaceBasis, tol: &StructureTolerance) -> Result<CMat, DecompositionError> {
    let dim = s.dim();
    let n2 = s.ambient_dim();
    if !n2.is_multiple_of(2) || !dim.is_multiple_of(2) {
        return Err(DecompositionError::Sweep(format!(
            "paired basis needs even dimensions, got subspace {dim} in ambient {n2}"
        )));
    }
    let n = n2 / 2;
    let mut zs: Vec<CVec> = Vec::new();
    let mut emitted: Vec<CVec> = Vec::new();
    // Pivot on the projector rather than the stored basis, so the result does
    // not depend on which orthonormal basis the factorization happened to return.
    let projector = s.basis() * s.basis().adjoint();
    for step in 0..dim / 2 {
        let mut rem = projector.clone();
        for e in &emitted {
            let coef = e.adjoint() * &rem;
            rem -= e * coef;
        }
        let norms: Vec<f64> = (0..rem.ncols()).map(|j| rem.column(j).norm()).collect();
        let best = norms.iter().cloned().fold(0.0, f64::max);
        let j = norms.iter().position(|&x| x >= best * (1.0 - PHASE_TIE)).unwrap_or(0);
        if best <= tol.zero_tol.sqrt() {
            return Err(DecompositionError::Sweep(format!(
                "subspace exhausted after {step} of {} pairs",
                dim / 2
            )));
        }
        let col: CVec = rem.column(j).into_owned();
        let e: CVec = col.rows(0, n).into_owned();
        let f: CVec = col.rows(n, n).into_owned();
        let cand = if e.norm() >= f.norm() {
            e
        } else {
            f.map(|z| z.conj())
        };
        let (mut z, nz) = orthonormalize_against(cand, &zs);
        if nz <= tol.zero_tol.sqrt() {
            return Err(DecompositionError::Sweep(format!(
                "paired candidate at step {step} collapsed under re-orthogonalization"
            )));
        }
        fix_phase(&mut z, PhaseRule::Full);
        let mut top = CVec::zeros(2 * n);
        top.rows_mut(0, n).copy_from(&z);
        let mut bottom = CVec::zeros(2 * n);
        bottom.rows_mut(n, n).copy_from(&z.map(|w| w.conj()));
        emitted.push(top);
        emitted.push(bottom);
        zs.push(z);
    }
    let zmat = columns_to_mat(n, &zs);
    let paired = block_diag(&[&zmat, &zmat.map(|w| w.conj())]);
    let spanned = SubspaceBasis::from_orthonormal(paired, tol)?;
    let mut log = CheckLog::default();
    log.require("paired basis spans subspace", subspace_gap(&spanned, s), ANGLE_TOL)?;
    Ok(zmat)
}

/// Right singular vectors of `x` with singular value at most `thresh`.
fn real_null_abs(x: &RMat, thresh: f64) -> RMat {
    let (p, q) = x.shape();
    if q == 0 {
        return RMat::zeros(0, 0);
    }
    if p == 0 {
        return RMat::identity(q, q);
    }
    let f = real_svd(x);
    let keep: Vec<usize> = (0..q).filter(|&i| f.s.get(i).is_none_or(|&s| s <= thresh)).collect();
    RMat::from_fn(q, keep.len(), |i, j| f.v[(i, keep[j])])
}

/// `X` and `Y` for the `h` sector from the `cō` subspace.
///
/// The real span of `V R_cō` is swept first over its directions with no
/// `p` component, then those with no `q` component, then the rest; a vector
/// `r` enters as `V†r`, or `-iV†r` when it is a pure momentum direction.
pub fn build_h_basis(r_cobar: &SubspaceBasis, tol: &StructureTolerance) -> Result<(CMat, CMat), DecompositionError> {
    let n3 = r_cobar.dim();
    let n = r_cobar.ambient_dim() / 2;
    if n3 == 0 {
        return Ok((CMat::zeros(n, 0), CMat::zeros(n, 0)));
    }
    let vn = v_matrix(n);
    let w = &vn * r_cobar.basis();
    let stacked = RMat::from_fn(2 * n, 2 * n3, |i, j| {
        if j < n3 {
            w[(i, j)].re
        } else {
            w[(i, j - n3)].im
        }
    });
    // V R_cō is a real subspace of dimension n3. Near a rank boundary the
    // computed basis carries noise at the subspace-accuracy level, so the
    // spill beyond n3 real directions is judged as a principal angle.
    let sv = real_svd(&stacked);
    let spill = sv.s.get(n3).copied().unwrap_or(0.0);
    if sv.s.len() < n3 || sv.s[n3 - 1] <= ANGLE_TOL || spill > ANGLE_TOL {
        return Err(DecompositionError::Sweep(format!(
            "real span of V R_cobar is not {n3}-dimensional (singular values {:?})",
            sv.s
        )));
    }
    let f = sv.u.columns(0, n3).into_owned();
    let kq = real_null_abs(&f.rows(n, n).into_owned(), tol.classify_tol);
    let fq = &f * &kq;
    let g = &f * real_null_abs(&kq.transpose(), 0.5);
    let kp = real_null_abs(&g.rows(0, n).into_owned(), tol.classify_tol);
    let fp = &g * &kp;
    let fm = &g * real_null_abs(&kp.transpose(), 0.5);

    let mut order: Vec<(CVec, bool)> = Vec::new();
    for (mat, pure_p) in [(&fq, false), (&fp, true), (&fm, false)] {
        for j in 0..mat.ncols() {
            order.push((mat.column(j).map(|x| C64::new(x, 0.0)), pure_p));
        }
    }

    let inv_sqrt2 = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut emitted: Vec<CVec> = Vec::new();
    let mut xs: Vec<CVec> = Vec::new();
    let mut ys: Vec<CVec> = Vec::new();
    for (step, (r, pure_p)) in order.into_iter().enumerate() {
        let mut wv: CVec = vn.adjoint() * r;
        if pure_p {
            wv *= -I;
        }
        let (wv, nw) = orthonormalize_against(wv, &emitted);
        if nw < 0.5 {
            return Err(DecompositionError::Sweep(format!(
                "h-sector remainder exhausted at step {step} of {n3}"
            )));
        }
        let u: CVec = wv.rows(0, n).into_owned();
        let v: CVec = wv.rows(n, n).into_owned();
        let g = &u + v.map(|z| z.conj());
        let mut pair = CVec::zeros(2 * n);
        if g.norm() > tol.classify_tol {
            let mut all_prev = xs.clone();
            all_prev.extend(ys.iter().cloned());
            let (mut x, _) = orthonormalize_against(g, &all_prev);
            fix_phase(&mut x, PhaseRule::Sign);
            pair.rows_mut(0, n).copy_from(&(&x * inv_sqrt2));
            pair.rows_mut(n, n).copy_from(&(x.map(|z| z.conj()) * inv_sqrt2));
            xs.push(x);
        } else {
            let mut all_prev = xs.clone();
            all_prev.extend(ys.iter().cloned());
            let (mut y, _) = orthonormalize_against(u, &all_prev);
            fix_phase(&mut y, PhaseRule::Sign);
            pair.rows_mut(0, n).copy_from(&(&y * inv_sqrt2));
            pair.rows_mut(n, n).copy_from(&(y.map(|z| -z.conj()) * inv_sqrt2));
            ys.push(y);
        }
        emitted.push(pair);
    }
    let x = columns_to_mat(n, &xs);
    let y = columns_to_mat(n, &ys);
    let mut log = CheckLog::default();
    let gram = |a: &CMat, b: &CMat, eye: bool| {
        let mut g = a.adjoint() * b;
        if eye {
            g -= CMat::identity(g.nrows(), g.ncols());
        }
        max_norm(&g)
    };
    log.require("X†X = I", gram(&x, &x, true), tol.zero_tol)?;
    log.require("Y†Y = I", gram(&y, &y, true), tol.zero_tol)?;
    log.require("X†Y = 0", gram(&x, &y, false), tol.zero_tol)?;
    let t_cobar = vstack_pair(&x, &y);
    log.require(
        "[X Y; X# -Y#] spans R_cobar",
        subspace_gap(&image(&t_cobar, tol), r_cobar),
        ANGLE_TOL,
    )?;
    Ok((x, y))
}

/// `[X Y; X# -Y#]`.
fn vstack_pair(x: &CMat, y: &CMat) -> CMat {
    let top = hstack(&[x, y]);
    let bottom = hstack(&[&x.map(|z| z.conj()), &y.map(|z| -z.conj())]);
    crate::matrix_core::vstack(&[&top, &bottom])
}

/// `T̃ = Δ([Z3 Z1 Z2], 0)` and `T = [T_h T_co T_c̄ō]` with the group and
/// orthogonality assertions.
pub fn assemble_t(blocks: &BlockBases, tol: &StructureTolerance) -> Result<(CMat, CMat, CheckLog), DecompositionError> {
    let n = blocks.n();
    let z3 = blocks.z3();
    let mut log = CheckLog::default();
    let zs = [("Z3", &z3), ("Z1", &blocks.z1), ("Z2", &blocks.z2)];
    for (i, (ni, zi)) in zs.iter().enumerate() {
        for (nj, zj) in zs.iter().skip(i + 1) {
            log.require(format!("{ni}†{nj} = 0"), max_norm(&(zi.adjoint() * *zj)), tol.zero_tol)?;
        }
    }
    let zall = hstack(&[&z3, &blocks.z1, &blocks.z2]);
    if zall.ncols() != n {
        return Err(DecompositionError::Sweep(format!(
            "sector bases have {} columns for n = {n}",
            zall.ncols()
        )));
    }
    let t_tilde = DoubledUpMatrix::new(zall, CMat::zeros(n, n))?.to_full();
    let eye = CMat::identity(2 * n, 2 * n);
    log.require("T̃ unitary", max_norm(&(t_tilde.adjoint() * &t_tilde - &eye)), tol.zero_tol)?;
    log.require(
        "T̃ Bogoliubov",
        bogoliubov_residual(&t_tilde).unwrap_or(f64::INFINITY),
        tol.zero_tol,
    )?;
    let conj = |z: &CMat| z.map(|w| w.conj());
    let t = hstack(&[
        &block_diag(&[&z3, &conj(&z3)]),
        &block_diag(&[&blocks.z1, &conj(&blocks.z1)]),
        &block_diag(&[&blocks.z2, &conj(&blocks.z2)]),
    ]);
    log.require("T unitary", max_norm(&(t.adjoint() * &t - &eye)), tol.zero_tol)?;
    let d = blocks.dims(0);
    let jblk = block_diag(&[&j_mat(d.n3), &j_mat(d.n1), &j_mat(d.n2)]);
    log.require(
        "T†JT = diag(J_n3, J_n1, J_n2)",
        max_norm(&(t.adjoint() * j_mat(n) * &t - jblk)),
        tol.zero_tol,
    )?;
    Ok((t_tilde, t, log))
}

/// Canonical complex form `(T†𝒜T, T†ℬ, 𝒞T)` and its structural assertions.
pub fn canonical_complex(
    sys: &QLSystem,
    t: &CMat,
    dims: &Dims,
    tol: &StructureTolerance,
) -> Result<(ComplexCanonical, CheckLog), DecompositionError> {
    let sec = Sectors::from_dims(dims);
    let a_sys = sys.a();
    let a_bar = t.adjoint() * &a_sys * t;
    let b_bar = t.adjoint() * sys.b();
    let c_bar = sys.c() * t;
    let m2 = 2 * sys.m();
    let cc = ComplexCanonical {
        a_h: cblock(&a_bar, sec.h(), sec.h()),
        a12: cblock(&a_bar, sec.h(), sec.co()),
        a13: cblock(&a_bar, sec.h(), sec.cc()),
        a21: cblock(&a_bar, sec.co(), sec.h()),
        a31: cblock(&a_bar, sec.cc(), sec.h()),
        a_co: cblock(&a_bar, sec.co(), sec.co()),
        a_cbar_obar: cblock(&a_bar, sec.cc(), sec.cc()),
        b_h: cblock(&b_bar, sec.h(), all(m2)),
        b_co: cblock(&b_bar, sec.co(), all(m2)),
        c_h: cblock(&c_bar, all(m2), sec.h()),
        c_co: cblock(&c_bar, all(m2), sec.co()),
        a_bar,
        b_bar,
        c_bar,
    };
    let mut log = CheckLog::default();
    let z = tol.zero_tol;
    log.require("𝒜̄(co,c̄ō) = 0", max_norm(&cblock(&cc.a_bar, sec.co(), sec.cc())), z)?;
    log.require("𝒜̄(c̄ō,co) = 0", max_norm(&cblock(&cc.a_bar, sec.cc(), sec.co())), z)?;
    log.require("ℬ̄(c̄ō) = 0", max_norm(&cblock(&cc.b_bar, sec.cc(), all(m2))), z)?;
    log.require("𝒞̄(c̄ō) = 0", max_norm(&cblock(&cc.c_bar, all(m2), sec.cc())), z)?;

    if dims.n1 > 0 {
        log.require("ℬ_co = -𝒞_co♭", max_norm(&(&cc.b_co + flat_adjoint(&cc.c_co)?)), z)?;
        let bb = &cc.b_co * flat_adjoint(&cc.b_co)?;
        log.require(
            "𝒜_co + 𝒜_co♭ + ℬ_coℬ_co♭ = 0",
            max_norm(&(&cc.a_co + flat_adjoint(&cc.a_co)? + bb)),
            z,
        )?;
    }
    if dims.n2 > 0 {
        log.require(
            "𝒜_c̄ō + 𝒜_c̄ō♭ = 0",
            max_norm(&(&cc.a_cbar_obar + flat_adjoint(&cc.a_cbar_obar)?)),
            z,
        )?;
    }

    // [𝒜21; 𝒜31] 𝒜_h^k [𝒜12 𝒜13] = 0 for k < 2 n3.
    let left = crate::matrix_core::vstack(&[&cc.a21, &cc.a31]);
    let right = hstack(&[&cc.a12, &cc.a13]);
    let mut markov = 0.0f64;
    let mut power = CMat::identity(2 * dims.n3, 2 * dims.n3);
    for _ in 0..2 * dims.n3 {
        markov = markov.max(max_norm(&(&left * &power * &right)));
        power = &power * &cc.a_h;
    }
    log.require("[𝒜21;𝒜31] 𝒜_h^k [𝒜12 𝒜13] = 0", markov, z)?;

    Ok((cc, log))
}

/// `Π` on `[q_x, q_y, p_x, p_y]` sends `(q_y, p_y)` to `(-p_y, q_y)`.
fn pi_matrix(na: usize, nb: usize) -> RMat {
    let k = na + nb;
    let mut pi = RMat::zeros(2 * k, 2 * k);
    for i in 0..na {
        pi[(i, i)] = 1.0;
        pi[(k + i, k + i)] = 1.0;
    }
    for i in 0..nb {
        pi[(na + i, k + na + i)] = -1.0;
        pi[(k + na + i, na + i)] = 1.0;
    }
    pi
}

type ZeroRange = (&'static str, (usize, usize), (usize, usize));

/// Blocks of the real `Ā` that vanish for a Kalman form, as row and column
/// ranges. With them removed, `Ā` on `(q_h, x_co, x_c̄ō, p_h)` is block upper
/// triangular.
fn a_zero_ranges(sec: &Sectors) -> [ZeroRange; 7] {
    let (qh, ph, co, cc) = (sec.qh(), sec.ph(), sec.co(), sec.cc());
    [
        ("Ā(p_h,q_h) = 0", ph, qh),
        ("Ā(p_h,co) = 0", ph, co),
        ("Ā(p_h,c̄ō) = 0", ph, cc),
        ("Ā(co,q_h) = 0", co, qh),
        ("Ā(co,c̄ō) = 0", co, cc),
        ("Ā(c̄ō,q_h) = 0", cc, qh),
        ("Ā(c̄ō,co) = 0", cc, co),
    ]
}

/// Backward error of the eigensolver, relative to `|Ā|`.
const PSEUDO_FLOOR: f64 = 1e-14;

/// `σ(𝒜)` against the spectra of the three complex diagonal blocks.
///
/// Clearing the zero blocks of `Ā` leaves a block triangular `Z` whose
/// spectrum is the union of the block spectra. A wide eigenvalue group may be
/// compared by its mean when every member is within the `|Ā - Z|`
/// pseudospectrum of the other side.
fn spectrum_check(
    sys: &QLSystem,
    complex: &ComplexCanonical,
    real: &RealCanonical,
    dims: &Dims,
    tol: &StructureTolerance,
) -> Result<CheckLog, DecompositionError> {
    let a_sys = sys.a();
    let sec = Sectors::from_dims(dims);
    let mut z = real.a_bar.clone();
    for (_, r, c) in a_zero_ranges(&sec) {
        z.view_mut((r.0, c.0), (r.1, c.1)).fill(0.0);
    }
    // Frobenius bounds the spectral norm; the floor covers eigensolver error.
    let radius = (&real.a_bar - &z).norm() + PSEUDO_FLOOR * max_norm_real(&real.a_bar).max(1.0);
    let (zc, ac) = (to_complex(&z), to_complex(&real.a_bar));
    let eye = CMat::identity(zc.nrows(), zc.nrows());
    let smin = |m: &CMat, p: C64| svd(&(m - &eye * p)).s.iter().cloned().fold(f64::INFINITY, f64::min);
    let member_ok = |p: C64, from_sys: bool| smin(if from_sys { &zc } else { &ac }, p) <= radius;
    let mut parts = eigenvalues(&complex.a_co);
    parts.extend(eigenvalues(&complex.a_cbar_obar));
    parts.extend(eigenvalues(&complex.a_h));
    let dist = clustered_spectral_distance_admitting(&eigenvalues(&a_sys), &parts, member_ok);
    let mut log = CheckLog::default();
    log.require("σ(𝒜) = σ(𝒜_co) ∪ σ(𝒜_c̄ō) ∪ σ(𝒜_h)", dist, tol.eig_tol)?;
    Ok(log)
}

/// `S̃`, `S`, `Π` and the real canonical blocks.
pub fn canonical_real(
    sys: &QLSystem,
    t_tilde: &CMat,
    t: &CMat,
    dims: &Dims,
    tol: &StructureTolerance,
) -> Result<(RMat, RMat, RMat, RealCanonical, CheckLog), DecompositionError> {
    let n = dims.n;
    let z = tol.zero_tol;
    let mut log = CheckLog::default();
    let vn = v_matrix(n);
    let s_tilde_c = &vn * t_tilde * vn.adjoint();
    log.require("S̃ real", crate::matrix_core::imag_residual(&s_tilde_c), z)?;
    let s_tilde = s_tilde_c.map(|w| w.re);
    let eye = RMat::identity(2 * n, 2 * n);
    let jj = jj_real(n);
    log.require("S̃ orthogonal", max_norm_real(&(s_tilde.transpose() * &s_tilde - &eye)), z)?;
    log.require(
        "S̃ symplectic",
        max_norm_real(&(s_tilde.transpose() * &jj * &s_tilde - &jj)),
        z,
    )?;

    let pi = pi_matrix(dims.na, dims.nb);
    let v_tilde = block_diag(&[
        &(to_complex(&pi) * v_matrix(dims.n3)),
        &v_matrix(dims.n1),
        &v_matrix(dims.n2),
    ]);
    let s_c = &vn * t * v_tilde.adjoint();
    log.require("S real", crate::matrix_core::imag_residual(&s_c), z)?;
    let s = s_c.map(|w| w.re);
    log.require("S orthogonal", max_norm_real(&(s.transpose() * &s - &eye)), z)?;
    let jblk = block_diag(&[
        &to_complex(&jj_real(dims.n3)),
        &to_complex(&jj_real(dims.n1)),
        &to_complex(&jj_real(dims.n2)),
    ])
    .map(|w| w.re);
    log.require(
        "SᵀJS = diag(J_n3, J_n1, J_n2)",
        max_norm_real(&(s.transpose() * &jj * &s - jblk)),
        z,
    )?;

    let real = to_real(sys, tol)?;
    let a_bar = s.transpose() * real.a() * &s;
    let b_bar = s.transpose() * real.b();
    let c_bar = real.c() * &s;
    let sec = Sectors::from_dims(dims);
    let m2 = 2 * dims.m;
    let (qh, ph, co, cc) = (sec.qh(), sec.ph(), sec.co(), sec.cc());
    let mut zero_blocks: Vec<(&str, RMat)> =
        a_zero_ranges(&sec).iter().map(|&(name, r, c)| (name, rblock(&a_bar, r, c))).collect();
    zero_blocks.extend([
        ("B̄(p_h) = 0", rblock(&b_bar, ph, all(m2))),
        ("B̄(c̄ō) = 0", rblock(&b_bar, cc, all(m2))),
        ("C̄(q_h) = 0", rblock(&c_bar, all(m2), qh)),
        ("C̄(c̄ō) = 0", rblock(&c_bar, all(m2), cc)),
    ]);
    for (name, blk) in zero_blocks.iter() {
        log.require(*name, max_norm_real(blk), z)?;
    }

    let idx: Vec<usize> = (qh.0..qh.0 + qh.1)
        .chain(co.0..co.0 + co.1)
        .chain(cc.0..cc.0 + cc.1)
        .chain(ph.0..ph.0 + ph.1)
        .collect();
    let labels_all = real_labels(dims);
    let rearranged = RearrangedForm {
        a: RMat::from_fn(2 * n, 2 * n, |i, j| a_bar[(idx[i], idx[j])]),
        b: RMat::from_fn(2 * n, m2, |i, j| b_bar[(idx[i], j)]),
        c: RMat::from_fn(m2, 2 * n, |i, j| c_bar[(i, idx[j])]),
        labels: idx.iter().map(|&i| labels_all[i].clone()).collect(),
    };

    let rc = RealCanonical {
        a_h11: rblock(&a_bar, qh, qh),
        a_h12: rblock(&a_bar, qh, ph),
        a_h22: rblock(&a_bar, ph, ph),
        a12: rblock(&a_bar, qh, co),
        a13: rblock(&a_bar, qh, cc),
        a21: rblock(&a_bar, co, ph),
        a31: rblock(&a_bar, cc, ph),
        a_co: rblock(&a_bar, co, co),
        a_cbar_obar: rblock(&a_bar, cc, cc),
        b_h: rblock(&b_bar, qh, all(m2)),
        b_co: rblock(&b_bar, co, all(m2)),
        c_h: rblock(&c_bar, all(m2), ph),
        c_co: rblock(&c_bar, all(m2), co),
        a_bar,
        b_bar,
        c_bar,
        rearranged,
    };
    Ok((s_tilde, s, pi, rc, log))
}

fn finish(
    sys: &QLSystem,
    blocks: BlockBases,
    mut checks: CheckLog,
    passive: Option<PassiveCanonical>,
    tol: &StructureTolerance,
) -> Result<KalmanResult, DecompositionError> {
    let dims = blocks.dims(sys.m());
    let (t_tilde, t, log) = assemble_t(&blocks, tol)?;
    checks.extend(&log);
    let (complex, log) = canonical_complex(sys, &t, &dims, tol)?;
    checks.extend(&log);
    let (s_tilde, s, pi, real, log) = canonical_real(sys, &t_tilde, &t, &dims, tol)?;
    checks.extend(&log);
    checks.extend(&spectrum_check(sys, &complex, &real, &dims, tol)?);
    Ok(KalmanResult {
        dims,
        blocks,
        t_tilde,
        t,
        s_tilde,
        s,
        pi,
        complex,
        real,
        passive,
        checks,
    })
}

/// Full Kalman decomposition of a general system.
pub fn decompose_general(sys: &QLSystem, tol: &StructureTolerance) -> Result<KalmanResult, DecompositionError> {
    let tol = tol.validated()?;
    let sub = kalman_subspaces(sys, &tol)?;
    let z1 = build_paired_basis(&sub.r_co, &tol)?;
    let z2 = build_paired_basis(&sub.r_cbar_obar, &tol)?;
    let (x, y) = build_h_basis(&sub.r_cobar, &tol)?;
    let blocks = BlockBases { z1, z2, x, y };
    finish(sys, blocks, sub.checks.clone(), None, &tol)
}

fn orthonormal_columns_with_phase(s: &SubspaceBasis) -> CMat {
    let mut out = s.basis().clone();
    for j in 0..out.ncols() {
        let mut c: CVec = out.column(j).into_owned();
        fix_phase(&mut c, PhaseRule::Full);
        out.set_column(j, &c);
    }
    out
}

/// Span of the eigenvectors of `a` whose eigenvalues lie within `eig_tol` of
/// the imaginary axis, with a semisimplicity check per eigenvalue cluster.
pub fn imaginary_eigenspace(
    a: &CMat,
    tol: &StructureTolerance,
    log: &mut CheckLog,
) -> (SubspaceBasis, Vec<C64>) {
    let n = a.nrows();
    let mut imag: Vec<C64> = eigenvalues(a).into_iter().filter(|l| l.re.abs() <= tol.eig_tol).collect();
    imag.sort_by(|x, y| x.im.total_cmp(&y.im));
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for l in imag.iter() {
        match clusters.last_mut() {
            Some(c) if (c[c.len() - 1] - l).norm() <= tol.eig_tol => c.push(*l),
            _ => clusters.push(vec![*l]),
        }
    }
    let scale = max_norm(a).max(1.0);
    let thresh = 100.0 * tol.eig_tol * scale;
    let mut vecs = CMat::zeros(n, 0);
    for c in &clusters {
        let center = c.iter().sum::<C64>() / C64::new(c.len() as f64, 0.0);
        let shifted = a - CMat::identity(n, n) * center;
        let f = svd(&shifted);
        let keep: Vec<usize> = (0..n).filter(|&i| f.s[i] <= thresh).collect();
        let geo = keep.len();
        log.record(
            format!("eigenvalue {center:.6} semisimple (geometric {geo} vs algebraic {})", c.len()),
            (geo as f64 - c.len() as f64).abs(),
            0.0,
        );
        let basis = CMat::from_fn(n, geo, |i, j| f.v[(i, keep[j])]);
        vecs = hstack(&[&vecs, &basis]);
    }
    (image(&vecs, tol), imag)
}

/// Passive decomposition: a unitary `[controllable | DFS]` on the annihilation
/// operators, cross-checked against the imaginary-axis eigenvectors of `A`.
pub fn decompose_passive(sys: &PassiveQLSystem, tol: &StructureTolerance) -> Result<KalmanResult, DecompositionError> {
    let tol = tol.validated()?;
    let ps = passive_subspaces(sys, &tol)?;
    let mut checks = ps.checks.clone();
    let ctrl = orthonormal_columns_with_phase(&ps.controllable);
    let dfs = orthonormal_columns_with_phase(&ps.uncontrollable);
    let unitary = hstack(&[&ctrl, &dfs]);
    let (n1, n2) = (ctrl.ncols(), dfs.ncols());
    let n = sys.n();
    let a_bar = unitary.adjoint() * sys.a() * &unitary;
    let b_bar = unitary.adjoint() * sys.b();
    let c_bar = sys.c() * &unitary;
    let m = sys.m();
    let z = tol.zero_tol;
    checks.require(
        "U unitary",
        max_norm(&(unitary.adjoint() * &unitary - CMat::identity(n, n))),
        z,
    )?;
    checks.require("Ā(co,df) = 0", max_norm(&cblock(&a_bar, (0, n1), (n1, n2))), z)?;
    checks.require("Ā(df,co) = 0", max_norm(&cblock(&a_bar, (n1, n2), (0, n1))), z)?;
    checks.require("B̄(df) = 0", max_norm(&cblock(&b_bar, (n1, n2), all(m))), z)?;
    checks.require("C̄(df) = 0", max_norm(&cblock(&c_bar, all(m), (n1, n2))), z)?;

    let (eig_space, dfs_eigenvalues) = imaginary_eigenspace(sys.a(), &tol, &mut checks);
    if let Some(bad) = checks.iter().find(|c| !c.passed) {
        return Err(CheckFailure {
            name: bad.name.clone(),
            residual: bad.residual,
            tol: bad.tol,
        }
        .into());
    }
    checks.require(
        "DFS = span of imaginary-axis eigenvectors",
        subspace_gap(&eig_space, &ps.uncontrollable),
        ANGLE_TOL,
    )?;
    let a_co = cblock(&a_bar, (0, n1), (0, n1));
    let a_df = cblock(&a_bar, (n1, n2), (n1, n2));
    let max_re = eigenvalues(&a_co).iter().fold(f64::NEG_INFINITY, |acc, l| acc.max(l.re));
    if n1 > 0 {
        checks.require("max Re σ(A_co) + eig_tol", max_re + tol.eig_tol, 0.0)?;
    }
    let df_re = eigenvalues(&a_df).iter().fold(0.0f64, |acc, l| acc.max(l.re.abs()));
    checks.require("|Re σ(A_df)|", df_re, tol.eig_tol)?;

    let pc = PassiveCanonical {
        unitary,
        b_co: cblock(&b_bar, (0, n1), all(m)),
        c_co: cblock(&c_bar, all(m), (0, n1)),
        a_co,
        a_df,
        a_bar,
        b_bar,
        c_bar,
        dfs_eigenvalues,
    };
    let blocks = BlockBases {
        z1: ctrl,
        z2: dfs,
        x: CMat::zeros(n, 0),
        y: CMat::zeros(n, 0),
    };
    let embedded = sys.embed(&tol)?;
    finish(&embedded, blocks, checks, Some(pc), &tol)
}

/// Kernel-based DFS of a passive system, used by callers that only need the
/// subspace.
pub fn passive_dfs(sys: &PassiveQLSystem, tol: &StructureTolerance) -> Result<SubspaceBasis, DecompositionError> {
    Ok(passive_subspaces(sys, tol)?.uncontrollable)
}
