//! Dense complex matrix helpers for the doubled-up / symplectic algebra.
//!
//! Everything here is a pure function over `nalgebra` dense matrices. The
//! conventions are `J_k = diag(I_k, -I_k)` and `𝕁_k = [0 I_k; -I_k 0]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("expected even dimensions, got {rows}x{cols}")]
    OddDimension { rows: usize, cols: usize },
    #[error("{context}: expected shape {expected:?}, found {found:?}")]
    Shape {
        context: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not doubled-up (residual {residual:.3e})")]
    NotDoubledUp { residual: f64 },
    #[error("imaginary residue {residual:.3e} exceeds tolerance {tol:.1e}")]
    NotReal { residual: f64, tol: f64 },
    #[error("tolerance {name} must be finite and strictly positive, got {value}")]
    InvalidTolerance { name: &'static str, value: f64 },
}

/// Numerical thresholds shared by every stage of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureTolerance {
    /// Singular values below `rank_tol * sigma_max` count as zero.
    pub rank_tol: f64,
    /// Absolute max-norm threshold for block-zero and identity checks.
    pub zero_tol: f64,
    /// Distance from the imaginary axis / between eigenvalues.
    pub eig_tol: f64,
    /// Relative threshold routing the h-sector sweep between its two cases.
    pub classify_tol: f64,
}

impl Default for StructureTolerance {
    fn default() -> Self {
        StructureTolerance {
            rank_tol: 1e-10,
            zero_tol: 1e-9,
            eig_tol: 1e-8,
            classify_tol: 1e-7,
        }
    }
}

impl StructureTolerance {
    pub fn validated(self) -> Result<Self, MatrixError> {
        for (name, value) in [
            ("rank_tol", self.rank_tol),
            ("zero_tol", self.zero_tol),
            ("eig_tol", self.eig_tol),
            ("classify_tol", self.classify_tol),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(MatrixError::InvalidTolerance { name, value });
            }
        }
        Ok(self)
    }
}

pub fn ensure_finite(x: &CMat) -> Result<(), MatrixError> {
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            let z = x[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(MatrixError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn ensure_shape(x: &CMat, rows: usize, cols: usize, context: &str) -> Result<(), MatrixError> {
    if x.shape() != (rows, cols) {
        return Err(MatrixError::Shape {
            context: context.to_string(),
            expected: (rows, cols),
            found: x.shape(),
        });
    }
    Ok(())
}

fn halves(x: &CMat) -> Result<(usize, usize), MatrixError> {
    let (r, c) = x.shape();
    if r % 2 != 0 || c % 2 != 0 {
        return Err(MatrixError::OddDimension { rows: r, cols: c });
    }
    Ok((r / 2, c / 2))
}

/// Entrywise max-norm; zero for empty matrices.
pub fn max_norm(x: &CMat) -> f64 {
    x.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_norm_real(x: &RMat) -> f64 {
    x.iter().fold(0.0, |acc, z| acc.max(z.abs()))
}

pub fn max_diff(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    max_norm(&(a - b))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// `J_k = diag(I_k, -I_k)`.
pub fn j_mat(k: usize) -> CMat {
    let mut j = CMat::identity(2 * k, 2 * k);
    for i in k..2 * k {
        j[(i, i)] = -ONE;
    }
    j
}

/// `𝕁_k = [0 I_k; -I_k 0]`.
pub fn jj_mat(k: usize) -> CMat {
    let mut j = CMat::zeros(2 * k, 2 * k);
    for i in 0..k {
        j[(i, k + i)] = ONE;
        j[(k + i, i)] = -ONE;
    }
    j
}

pub fn jj_real(k: usize) -> RMat {
    jj_mat(k).map(|z| z.re)
}

/// `X♭ = J_r X† J_k` for a `2k x 2r` matrix.
pub fn flat_adjoint(x: &CMat) -> Result<CMat, MatrixError> {
    let (k, r) = halves(x)?;
    Ok(j_mat(r) * x.adjoint() * j_mat(k))
}

/// `X♯ = -𝕁_r X† 𝕁_k` for a `2k x 2r` matrix.
pub fn sharp_adjoint(x: &CMat) -> Result<CMat, MatrixError> {
    let (k, r) = halves(x)?;
    Ok(-(jj_mat(r) * x.adjoint() * jj_mat(k)))
}

/// Max-norm distance of a `2k x 2r` matrix from the doubled-up pattern.
pub fn doubled_up_residual(x: &CMat) -> Result<f64, MatrixError> {
    let (k, r) = halves(x)?;
    let u = x.view((0, 0), (k, r));
    let v = x.view((0, r), (k, r));
    let v2 = x.view((k, 0), (k, r));
    let u2 = x.view((k, r), (k, r));
    let d1 = max_norm(&(u2 - u.conjugate()));
    let d2 = max_norm(&(v2 - v.conjugate()));
    Ok(d1.max(d2))
}

pub fn is_doubled_up(x: &CMat, tol: &StructureTolerance) -> bool {
    matches!(doubled_up_residual(x), Ok(r) if r <= tol.zero_tol)
}

/// Residual of the Bogoliubov conditions, `None` when `t` is not square and even.
pub fn bogoliubov_residual(t: &CMat) -> Option<f64> {
    if !t.is_square() {
        return None;
    }
    let (k, _) = halves(t).ok()?;
    let j = j_mat(k);
    let d = doubled_up_residual(t).ok()?;
    let r1 = max_diff(&(t * &j * t.adjoint()), &j);
    let r2 = max_diff(&(t.adjoint() * &j * t), &j);
    Some(d.max(r1).max(r2))
}

pub fn is_bogoliubov(t: &CMat, tol: &StructureTolerance) -> bool {
    matches!(bogoliubov_residual(t), Some(r) if r <= tol.zero_tol)
}

pub fn symplectic_residual(s: &CMat) -> Option<f64> {
    if !s.is_square() {
        return None;
    }
    let (k, _) = halves(s).ok()?;
    let j = jj_mat(k);
    let r1 = max_diff(&(s * &j * s.adjoint()), &j);
    let r2 = max_diff(&(s.adjoint() * &j * s), &j);
    Some(r1.max(r2))
}

pub fn is_symplectic(s: &CMat, tol: &StructureTolerance) -> bool {
    matches!(symplectic_residual(s), Some(r) if r <= tol.zero_tol)
}

/// `V_k = (1/√2) [I I; -iI iI]`, the unitary taking `[a; a#]` to `[q; p]`.
pub fn v_matrix(k: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CMat::zeros(2 * k, 2 * k);
    for i in 0..k {
        v[(i, i)] = C64::new(s, 0.0);
        v[(i, k + i)] = C64::new(s, 0.0);
        v[(k + i, i)] = C64::new(0.0, -s);
        v[(k + i, k + i)] = C64::new(0.0, s);
    }
    v
}

pub fn to_complex(x: &RMat) -> CMat {
    x.map(|r| C64::new(r, 0.0))
}

/// Drops the imaginary part after checking it is below `tol`.
pub fn to_real_checked(x: &CMat, tol: f64) -> Result<RMat, MatrixError> {
    let residual = x.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()));
    if residual > tol {
        return Err(MatrixError::NotReal { residual, tol });
    }
    Ok(x.map(|z| z.re))
}

pub fn imag_residual(x: &CMat) -> f64 {
    x.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()))
}

pub fn hstack(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, c), (rows, b.ncols())).copy_from(b);
        c += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&CMat]) -> CMat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(b);
        r += b.nrows();
    }
    out
}

pub fn block_diag(blocks: &[&CMat]) -> CMat {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// One named numerical assertion and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{name}: residual {residual:.3e} exceeds tolerance {tol:.1e}")]
pub struct CheckFailure {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
}

/// Ordered record of assertions made while building a result.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckLog(pub Vec<Check>);

impl CheckLog {
    /// Records the check; NaN residuals count as failures.
    pub fn record(&mut self, name: impl Into<String>, residual: f64, tol: f64) -> bool {
        let passed = residual <= tol;
        self.0.push(Check {
            name: name.into(),
            residual,
            tol,
            passed,
        });
        passed
    }

    /// Records the check and fails fast when it does not hold.
    pub fn require(&mut self, name: impl Into<String>, residual: f64, tol: f64) -> Result<(), CheckFailure> {
        let name = name.into();
        if self.record(name.clone(), residual, tol) {
            Ok(())
        } else {
            Err(CheckFailure { name, residual, tol })
        }
    }

    pub fn extend(&mut self, other: &CheckLog) {
        self.0.extend(other.0.iter().cloned());
    }

    pub fn all_passed(&self) -> bool {
        self.0.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.0.iter().find(|c| c.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Check> {
        self.0.iter()
    }
}

/// Full singular value decomposition `x = U diag(s) V†`, `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

/// Real counterpart of [`Svd`] with orthogonal `U`, `V`.
#[derive(Debug, Clone)]
pub struct RealSvd {
    pub u: RMat,
    pub s: Vec<f64>,
    pub v: RMat,
}

// nalgebra's SVD loses accuracy on rank-deficient complex input, so the
// factorizations go through faer.
pub fn svd(x: &CMat) -> Svd {
    let (p, q) = x.shape();
    if p == 0 || q == 0 {
        return Svd {
            u: CMat::identity(p, p),
            s: Vec::new(),
            v: CMat::identity(q, q),
        };
    }
    let m = faer::Mat::<C64>::from_fn(p, q, |i, j| x[(i, j)]);
    let f = m.svd().expect("SVD converges");
    let (u, v, s) = (f.U(), f.V(), f.S().column_vector());
    Svd {
        u: CMat::from_fn(p, p, |i, j| u[(i, j)]),
        s: (0..p.min(q)).map(|i| s[i].re).collect(),
        v: CMat::from_fn(q, q, |i, j| v[(i, j)]),
    }
}

pub fn real_svd(x: &RMat) -> RealSvd {
    let (p, q) = x.shape();
    if p == 0 || q == 0 {
        return RealSvd {
            u: RMat::identity(p, p),
            s: Vec::new(),
            v: RMat::identity(q, q),
        };
    }
    let m = faer::Mat::<f64>::from_fn(p, q, |i, j| x[(i, j)]);
    let f = m.svd().expect("SVD converges");
    let (u, v, s) = (f.U(), f.V(), f.S().column_vector());
    RealSvd {
        u: RMat::from_fn(p, p, |i, j| u[(i, j)]),
        s: (0..p.min(q)).map(|i| s[i]).collect(),
        v: RMat::from_fn(q, q, |i, j| v[(i, j)]),
    }
}

pub fn singular_values(x: &CMat) -> Vec<f64> {
    svd(x).s
}

/// Eigenvalues from the diagonal of the complex Schur form.
pub fn eigenvalues(a: &CMat) -> Vec<C64> {
    assert!(a.is_square(), "eigenvalues of a non-square matrix");
    if a.nrows() == 0 {
        return Vec::new();
    }
    let (_, t) = nalgebra::Schur::new(a.clone()).unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Multiset equality of two spectra: a perfect matching where every matched
/// pair is within `tol`.
pub fn spectra_match(a: &[C64], b: &[C64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let adj: Vec<Vec<usize>> = a
        .iter()
        .map(|x| (0..b.len()).filter(|&j| (x - b[j]).norm() <= tol).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; b.len()];
    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, adj, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    (0..a.len()).all(|i| augment(i, &adj, &mut vec![false; b.len()], &mut owner))
}

/// Smallest tolerance for which [`spectra_match`] succeeds; infinite when the
/// lengths differ.
pub fn spectral_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut cands: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| (x - y).norm())).collect();
    cands.push(0.0);
    cands.sort_by(f64::total_cmp);
    let (mut lo, mut hi) = (0, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if spectra_match(a, b, cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cands[lo]
}

/// Eigenvalues closer than this, relative to `max(1, |λ|_max)`, are always
/// compared as one cluster by [`clustered_spectral_distance`].
pub const CLUSTER_RADIUS: f64 = 1e-6;

/// Backward-error level behind the multiplicity-dependent linkage radius.
const DEFECT_EPS: f64 = 1e-14;

/// Linkage radius for a cluster holding up to `mult` eigenvalues of one side.
fn cluster_radius(mult: usize) -> f64 {
    CLUSTER_RADIUS.max(DEFECT_EPS.powf(1.0 / mult as f64))
}

/// Spectral distance that survives defective eigenvalues. A Jordan block of
/// size `k` scatters its computed eigenvalues by about `eps^(1/k)`, while
/// their mean stays accurate to `eps`.
///
/// Both spectra are pooled into a single-linkage dendrogram, which is cut top
/// down: a node stays one group when its merge height is within the radius
/// allowed for its multiplicity (the larger of its two per-side counts),
/// otherwise its children are examined. Each group must hold as many
/// eigenvalues of `a` as of `b`, and scores the distance between the means.
pub fn clustered_spectral_distance(a: &[C64], b: &[C64]) -> f64 {
    clustered_spectral_distance_admitting(a, b, |_, _| false)
}

/// A node wider than the linkage radius can still be scored whole when its
/// parent merges at least this many times higher.
const ISOLATION_GAP: f64 = 100.0;

/// [`clustered_spectral_distance`] that also admits wide but isolated groups.
/// The mean of a group separated from the rest of the spectrum is well
/// conditioned even when its members are not. Such a group is admitted when
/// its per-side counts agree and `member_ok(z, from_a)` accepts every member,
/// typically a backward-error test of `z` against the other side's matrix.
/// The score is the smallest worst-group distance over admissible cuts.
pub fn clustered_spectral_distance_admitting(a: &[C64], b: &[C64], member_ok: impl Fn(C64, bool) -> bool) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    if a.is_empty() {
        return 0.0;
    }
    let pooled: Vec<(C64, bool)> = a.iter().map(|&x| (x, true)).chain(b.iter().map(|&y| (y, false))).collect();
    let scale = pooled.iter().map(|(z, _)| z.norm()).fold(1.0, f64::max);
    let np = pooled.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(np * np / 2);
    for i in 0..np {
        for j in i + 1..np {
            edges.push(((pooled[i].0 - pooled[j].0).norm(), i, j));
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0));

    // nodes 0..np are leaves; each merge appends (height, children, sums)
    struct Node {
        height: f64,
        children: Option<(usize, usize)>,
        sum: (C64, C64),
        count: (usize, usize),
    }
    let mut nodes: Vec<Node> = pooled
        .iter()
        .map(|&(z, from_a)| Node {
            height: 0.0,
            children: None,
            sum: if from_a { (z, ZERO) } else { (ZERO, z) },
            count: (from_a as usize, !from_a as usize),
        })
        .collect();
    let mut top: Vec<usize> = (0..np).collect();
    fn root(g: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while g[r] != r {
            r = g[r];
        }
        g[i] = r;
        r
    }
    let mut group: Vec<usize> = (0..np).collect();
    for (d, i, j) in edges {
        let (ri, rj) = (root(&mut group, i), root(&mut group, j));
        if ri == rj {
            continue;
        }
        let (x, y) = (&nodes[top[ri]], &nodes[top[rj]]);
        let node = Node {
            height: d,
            children: Some((top[ri], top[rj])),
            sum: (x.sum.0 + y.sum.0, x.sum.1 + y.sum.1),
            count: (x.count.0 + y.count.0, x.count.1 + y.count.1),
        };
        nodes.push(node);
        group[ri] = rj;
        top[rj] = nodes.len() - 1;
    }

    // leaves are pooled indices, so membership is read off directly
    let pool_ok: Vec<bool> = pooled.iter().map(|&(z, from_a)| member_ok(z, from_a)).collect();
    let score = |nd: &Node| {
        if nd.count.0 == nd.count.1 {
            (nd.sum.0 - nd.sum.1).norm() / nd.count.0 as f64
        } else {
            f64::INFINITY
        }
    };
    fn members_ok(nodes: &[Node], k: usize, pool_ok: &[bool]) -> bool {
        match nodes[k].children {
            None => pool_ok[k],
            Some((l, r)) => members_ok(nodes, l, pool_ok) && members_ok(nodes, r, pool_ok),
        }
    }
    fn best(
        nodes: &[Node],
        k: usize,
        parent: f64,
        scale: f64,
        pool_ok: &[bool],
        score: &dyn Fn(&Node) -> f64,
    ) -> f64 {
        let nd = &nodes[k];
        let Some((l, r)) = nd.children else { return score(nd) };
        if nd.height <= cluster_radius(nd.count.0.max(nd.count.1)) * scale {
            return score(nd);
        }
        let split = best(nodes, l, nd.height, scale, pool_ok, score).max(best(nodes, r, nd.height, scale, pool_ok, score));
        let admitted = nd.count.0 == nd.count.1
            && nd.height * ISOLATION_GAP <= parent
            && members_ok(nodes, k, pool_ok);
        if admitted { split.min(score(nd)) } else { split }
    }
    // the root has nothing to be isolated from
    best(&nodes, nodes.len() - 1, 0.0, scale, &pool_ok, &score)
}

/// Doubled-up matrix `Δ(U, V) = [U V; V# U#]`, stored as its two blocks so the
/// pattern holds exactly through arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubledUpMatrix {
    u: CMat,
    v: CMat,
}

impl DoubledUpMatrix {
    pub fn new(u: CMat, v: CMat) -> Result<Self, MatrixError> {
        ensure_shape(&v, u.nrows(), u.ncols(), "doubled-up V block")?;
        ensure_finite(&u)?;
        ensure_finite(&v)?;
        Ok(DoubledUpMatrix { u, v })
    }

    pub fn zeros(k: usize, r: usize) -> Self {
        DoubledUpMatrix {
            u: CMat::zeros(k, r),
            v: CMat::zeros(k, r),
        }
    }

    pub fn identity(k: usize) -> Self {
        DoubledUpMatrix {
            u: CMat::identity(k, k),
            v: CMat::zeros(k, k),
        }
    }

    /// Reads the blocks of a materialized matrix, rejecting it if the pattern
    /// is off by more than `tol.zero_tol`.
    pub fn from_full(x: &CMat, tol: &StructureTolerance) -> Result<Self, MatrixError> {
        let residual = doubled_up_residual(x)?;
        if residual > tol.zero_tol {
            return Err(MatrixError::NotDoubledUp { residual });
        }
        let (k, r) = (x.nrows() / 2, x.ncols() / 2);
        Self::new(
            x.view((0, 0), (k, r)).into_owned(),
            x.view((0, r), (k, r)).into_owned(),
        )
    }

    pub fn half_rows(&self) -> usize {
        self.u.nrows()
    }

    pub fn half_cols(&self) -> usize {
        self.u.ncols()
    }

    pub fn u(&self) -> &CMat {
        &self.u
    }

    pub fn v(&self) -> &CMat {
        &self.v
    }

    pub fn to_full(&self) -> CMat {
        let (k, r) = self.u.shape();
        let mut x = CMat::zeros(2 * k, 2 * r);
        x.view_mut((0, 0), (k, r)).copy_from(&self.u);
        x.view_mut((0, r), (k, r)).copy_from(&self.v);
        x.view_mut((k, 0), (k, r)).copy_from(&self.v.conjugate());
        x.view_mut((k, r), (k, r)).copy_from(&self.u.conjugate());
        x
    }

    pub fn add(&self, other: &Self) -> Result<Self, MatrixError> {
        ensure_shape(&other.u, self.u.nrows(), self.u.ncols(), "doubled-up sum")?;
        Ok(DoubledUpMatrix {
            u: &self.u + &other.u,
            v: &self.v + &other.v,
        })
    }

    /// `Δ(U1,V1) Δ(U2,V2) = Δ(U1 U2 + V1 V2#, U1 V2 + V1 U2#)`.
    pub fn mul(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.half_cols() != other.half_rows() {
            return Err(MatrixError::Shape {
                context: "doubled-up product".into(),
                expected: (self.half_cols(), other.half_cols()),
                found: (other.half_rows(), other.half_cols()),
            });
        }
        Ok(DoubledUpMatrix {
            u: &self.u * &other.u + &self.v * other.v.conjugate(),
            v: &self.u * &other.v + &self.v * other.u.conjugate(),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        DoubledUpMatrix {
            u: &self.u * C64::new(s, 0.0),
            v: &self.v * C64::new(s, 0.0),
        }
    }

    /// `Δ(U,V)♭ = Δ(U†, -Vᵀ)`.
    pub fn flat(&self) -> Self {
        DoubledUpMatrix {
            u: self.u.adjoint(),
            v: -self.v.transpose(),
        }
    }

    pub fn adjoint(&self) -> Self {
        DoubledUpMatrix {
            u: self.u.adjoint(),
            v: self.v.transpose(),
        }
    }
}
