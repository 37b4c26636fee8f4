//! Krylov matrices, SVD-based kernels and images, principal-angle
//! intersections and the four Kalman subspaces.

use crate::matrix_core::{
    hstack, j_mat, max_norm, singular_values, svd, CMat, CheckFailure, CheckLog, MatrixError, StructureTolerance,
};
use crate::system_model::{PassiveQLSystem, QLSystem};
use thiserror::Error;

/// Principal-angle threshold for subspace equality and containment.
pub const ANGLE_TOL: f64 = 1e-8;

/// A matrix whose largest singular value is below this has rank zero.
pub const ABS_RANK_FLOOR: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubspaceError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("ambient dimensions differ: {0} vs {1}")]
    AmbientMismatch(usize, usize),
    #[error("subspace invariant violated: {0}")]
    Invariant(#[from] CheckFailure),
}

/// Orthonormal column basis of a subspace of `C^ambient_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    basis: CMat,
    tol_used: StructureTolerance,
}

impl SubspaceBasis {
    /// Wraps a basis whose columns are already orthonormal.
    pub fn from_orthonormal(basis: CMat, tol: &StructureTolerance) -> Result<Self, SubspaceError> {
        let d = basis.ncols();
        let gram = basis.adjoint() * &basis - CMat::identity(d, d);
        let mut log = CheckLog::default();
        log.require("orthonormal basis", max_norm(&gram), tol.zero_tol)?;
        Ok(SubspaceBasis {
            ambient_dim: basis.nrows(),
            basis,
            tol_used: *tol,
        })
    }

    /// Orthonormal basis of the column span of `vectors`.
    pub fn span(vectors: &CMat, tol: &StructureTolerance) -> Self {
        image(vectors, tol)
    }

    pub fn empty(ambient_dim: usize, tol: &StructureTolerance) -> Self {
        SubspaceBasis {
            ambient_dim,
            basis: CMat::zeros(ambient_dim, 0),
            tol_used: *tol,
        }
    }

    pub fn full(ambient_dim: usize, tol: &StructureTolerance) -> Self {
        SubspaceBasis {
            ambient_dim,
            basis: CMat::identity(ambient_dim, ambient_dim),
            tol_used: *tol,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn tol_used(&self) -> &StructureTolerance {
        &self.tol_used
    }

    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }

    /// `x` with its component in this subspace removed.
    pub fn residual_of(&self, x: &CMat) -> CMat {
        x - &self.basis * (self.basis.adjoint() * x)
    }

    /// Image of the subspace under `m`, re-orthonormalized.
    pub fn mapped(&self, m: &CMat) -> Self {
        image(&(m * &self.basis), &self.tol_used)
    }
}

/// Largest singular value; zero for empty matrices.
pub fn spectral_norm(x: &CMat) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    singular_values(x).iter().cloned().fold(0.0, f64::max)
}

fn numerical_rank(sigma: &[f64], tol: &StructureTolerance) -> usize {
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    if smax <= ABS_RANK_FLOOR {
        return 0;
    }
    sigma.iter().filter(|&&s| s > tol.rank_tol * smax).count()
}

pub fn rank(x: &CMat, tol: &StructureTolerance) -> usize {
    if x.is_empty() {
        return 0;
    }
    numerical_rank(&singular_values(x), tol)
}

/// Right singular vectors for `sigma <= rank_tol * sigma_max`.
pub fn kernel(x: &CMat, tol: &StructureTolerance) -> SubspaceBasis {
    let (p, q) = x.shape();
    if q == 0 {
        return SubspaceBasis::empty(0, tol);
    }
    if p == 0 {
        return SubspaceBasis::full(q, tol);
    }
    let f = svd(x);
    let r = numerical_rank(&f.s, tol);
    SubspaceBasis {
        ambient_dim: q,
        basis: f.v.columns(r, q - r).into_owned(),
        tol_used: *tol,
    }
}

/// Left singular vectors for `sigma > rank_tol * sigma_max`.
pub fn image(x: &CMat, tol: &StructureTolerance) -> SubspaceBasis {
    let (p, q) = x.shape();
    if p == 0 || q == 0 {
        return SubspaceBasis::empty(p, tol);
    }
    let f = svd(x);
    let r = numerical_rank(&f.s, tol);
    SubspaceBasis {
        ambient_dim: p,
        basis: f.u.columns(0, r).into_owned(),
        tol_used: *tol,
    }
}

/// Orthogonal complement, i.e. `Ker(S†)`.
pub fn complement(s: &SubspaceBasis) -> SubspaceBasis {
    if s.dim() == 0 {
        return SubspaceBasis::full(s.ambient_dim, &s.tol_used);
    }
    kernel(&s.basis.adjoint(), &s.tol_used)
}

fn same_ambient(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<(), SubspaceError> {
    if a.ambient_dim != b.ambient_dim {
        return Err(SubspaceError::AmbientMismatch(a.ambient_dim, b.ambient_dim));
    }
    Ok(())
}

/// Intersection by principal angles: directions whose cosine is at least
/// `1 - zero_tol`.
pub fn intersect(s1: &SubspaceBasis, s2: &SubspaceBasis) -> Result<SubspaceBasis, SubspaceError> {
    same_ambient(s1, s2)?;
    let tol = s1.tol_used;
    if s1.dim() == 0 || s2.dim() == 0 {
        return Ok(SubspaceBasis::empty(s1.ambient_dim, &tol));
    }
    let f = svd(&(s1.basis.adjoint() * &s2.basis));
    let k = f.s.iter().filter(|&&c| c >= 1.0 - tol.zero_tol).count();
    let dirs = &s1.basis * f.u.columns(0, k);
    Ok(image(&dirs, &tol))
}

/// Sine of the largest principal angle, or 1 when dimensions differ.
pub fn subspace_gap(s1: &SubspaceBasis, s2: &SubspaceBasis) -> f64 {
    if s1.ambient_dim != s2.ambient_dim || s1.dim() != s2.dim() {
        return 1.0;
    }
    containment_gap(s1, s2)
}

/// Sine of the largest angle between `inner` and its projection onto `outer`;
/// zero means `inner ⊆ outer`.
pub fn containment_gap(inner: &SubspaceBasis, outer: &SubspaceBasis) -> f64 {
    if inner.ambient_dim != outer.ambient_dim {
        return 1.0;
    }
    spectral_norm(&outer.residual_of(&inner.basis))
}

/// Largest cosine between the two subspaces; zero means orthogonal.
pub fn overlap(s1: &SubspaceBasis, s2: &SubspaceBasis) -> f64 {
    spectral_norm(&(s1.basis.adjoint() * &s2.basis))
}

/// Stacks `[X, MX, ..., M^{order-1}X]`, each block rescaled to unit max-norm.
///
/// A block whose norm has collapsed below `rank_tol * |M|_max` carries only
/// roundoff and is set to zero, as are all later blocks. With `early_stop`
/// the expansion ends once a block adds no rank.
pub fn krylov_blocks(m: &CMat, x: &CMat, order: usize, tol: &StructureTolerance, early_stop: bool) -> CMat {
    let scale = |b: CMat| -> Option<CMat> {
        let s = max_norm(&b);
        (s > 0.0).then(|| b / crate::matrix_core::C64::new(s, 0.0))
    };
    let mnorm = max_norm(m);
    let mut blocks: Vec<CMat> = Vec::with_capacity(order);
    let mut current = scale(x.clone());
    let mut last_rank = 0;
    for k in 0..order {
        let block = match &current {
            Some(b) => b.clone(),
            None => CMat::zeros(x.nrows(), x.ncols()),
        };
        blocks.push(block);
        if early_stop {
            let refs: Vec<&CMat> = blocks.iter().collect();
            let r = rank(&hstack(&refs), tol);
            if current.is_none() || (k > 0 && r == last_rank) || r == x.nrows() {
                break;
            }
            last_rank = r;
        }
        current = current.and_then(|b| {
            let next = m * b;
            if max_norm(&next) <= tol.rank_tol * mnorm {
                None
            } else {
                scale(next)
            }
        });
    }
    let refs: Vec<&CMat> = blocks.iter().collect();
    hstack(&refs)
}

/// `[B, AB, ..., A^{order-1}B]` with per-block rescaling.
pub fn controllability_matrix(a: &CMat, b: &CMat, order: usize, tol: &StructureTolerance) -> Result<CMat, SubspaceError> {
    crate::matrix_core::ensure_shape(a, a.nrows(), a.nrows(), "A")?;
    crate::matrix_core::ensure_shape(b, a.nrows(), b.ncols(), "B")?;
    Ok(krylov_blocks(a, b, order, tol, false))
}

/// `[C; CA; ...; CA^{order-1}]` with per-block rescaling.
pub fn observability_matrix(a: &CMat, c: &CMat, order: usize, tol: &StructureTolerance) -> Result<CMat, SubspaceError> {
    crate::matrix_core::ensure_shape(a, a.nrows(), a.nrows(), "A")?;
    crate::matrix_core::ensure_shape(c, c.nrows(), a.nrows(), "C")?;
    Ok(krylov_blocks(&a.adjoint(), &c.adjoint(), order, tol, false).adjoint())
}

/// `Ker([C; CA; ...])`, stopping the expansion once the rank stalls.
pub fn unobservable_subspace(a: &CMat, c: &CMat, order: usize, tol: &StructureTolerance) -> SubspaceBasis {
    let ot = krylov_blocks(&a.adjoint(), &c.adjoint(), order, tol, true);
    complement(&image(&ot, tol))
}

/// `Im([B, AB, ...])`, stopping the expansion once the rank stalls.
pub fn controllable_subspace(a: &CMat, b: &CMat, order: usize, tol: &StructureTolerance) -> SubspaceBasis {
    image(&krylov_blocks(a, b, order, tol, true), tol)
}

/// The four Kalman subspaces of a general system and the kernels they come from.
#[derive(Debug, Clone)]
pub struct KalmanSubspaces {
    pub r_co: SubspaceBasis,
    pub r_cbar_obar: SubspaceBasis,
    pub r_cobar: SubspaceBasis,
    pub r_cbar_o: SubspaceBasis,
    /// `Ker(O_s)`.
    pub ker_os: SubspaceBasis,
    /// `Ker(O_s J_n)`.
    pub ker_os_j: SubspaceBasis,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub checks: CheckLog,
}

/// `O_s = [𝒞; 𝒞M; ...; 𝒞M^{2n-1}]` with `M = J_n Ω`.
pub fn auxiliary_observability(sys: &QLSystem, tol: &StructureTolerance) -> CMat {
    let m = j_mat(sys.n()) * sys.omega().to_full();
    let c = sys.c();
    krylov_blocks(&m.adjoint(), &c.adjoint(), 2 * sys.n(), tol, true).adjoint()
}

pub fn kalman_subspaces(sys: &QLSystem, tol: &StructureTolerance) -> Result<KalmanSubspaces, SubspaceError> {
    let n = sys.n();
    let j = j_mat(n);
    let os = auxiliary_observability(sys, tol);
    let ker_os = kernel(&os, tol);
    let ker_os_j = kernel(&(&os * &j), tol);
    let mut checks = CheckLog::default();
    checks.require(
        "Ker(O_s J) = J Ker(O_s)",
        subspace_gap(&ker_os_j, &ker_os.mapped(&j)),
        ANGLE_TOL,
    )?;
    let ko_perp = complement(&ker_os);
    let kc_perp = complement(&ker_os_j);
    let r_co = intersect(&kc_perp, &ko_perp)?;
    let r_cbar_obar = intersect(&ker_os_j, &ker_os)?;
    let r_cobar = intersect(&kc_perp, &ker_os)?;
    let r_cbar_o = intersect(&ker_os_j, &ko_perp)?;

    let parts = [
        ("R_co", &r_co),
        ("R_cbar_obar", &r_cbar_obar),
        ("R_cobar", &r_cobar),
        ("R_cbar_o", &r_cbar_o),
    ];
    for (i, (ni, si)) in parts.iter().enumerate() {
        for (nj, sj) in parts.iter().skip(i + 1) {
            checks.require(format!("{ni} ⊥ {nj}"), overlap(si, sj), tol.zero_tol)?;
        }
    }
    let dim_mismatch = |a: usize, b: usize| if a == b { 0.0 } else { f64::INFINITY };
    checks.require("dim R_cobar = dim R_cbar_o", dim_mismatch(r_cobar.dim(), r_cbar_o.dim()), 0.0)?;
    checks.require("dim R_co even", dim_mismatch(r_co.dim() % 2, 0), 0.0)?;
    checks.require("dim R_cbar_obar even", dim_mismatch(r_cbar_obar.dim() % 2, 0), 0.0)?;
    let total = r_co.dim() + r_cbar_obar.dim() + r_cobar.dim() + r_cbar_o.dim();
    checks.require("direct sum spans C^2n", dim_mismatch(total, 2 * n), 0.0)?;
    checks.require("R_cobar = J R_cbar_o", subspace_gap(&r_cobar, &r_cbar_o.mapped(&j)), ANGLE_TOL)?;
    checks.require("R_co = J R_co", subspace_gap(&r_co, &r_co.mapped(&j)), ANGLE_TOL)?;
    checks.require(
        "R_cbar_obar = J R_cbar_obar",
        subspace_gap(&r_cbar_obar, &r_cbar_obar.mapped(&j)),
        ANGLE_TOL,
    )?;
    let (n1, n2, n3) = (r_co.dim() / 2, r_cbar_obar.dim() / 2, r_cobar.dim());
    log::debug!("Kalman subspaces: n1={n1} n2={n2} n3={n3}");
    Ok(KalmanSubspaces {
        r_co,
        r_cbar_obar,
        r_cobar,
        r_cbar_o,
        ker_os,
        ker_os_j,
        n1,
        n2,
        n3,
        checks,
    })
}

/// Controllable subspace of a passive system, its complement `Ker(C_G†)`, and
/// the unobservable subspace `Ker(O_G)` which must coincide with it.
#[derive(Debug, Clone)]
pub struct PassiveSubspaces {
    pub controllable: SubspaceBasis,
    pub uncontrollable: SubspaceBasis,
    pub unobservable: SubspaceBasis,
    pub checks: CheckLog,
}

pub fn passive_subspaces(sys: &PassiveQLSystem, tol: &StructureTolerance) -> Result<PassiveSubspaces, SubspaceError> {
    let n = sys.n();
    let controllable = controllable_subspace(sys.a(), &sys.b(), n, tol);
    let uncontrollable = complement(&controllable);
    let unobservable = unobservable_subspace(sys.a(), sys.c(), n, tol);
    let mut checks = CheckLog::default();
    checks.require(
        "Ker(C_G†) = Ker(O_G)",
        subspace_gap(&uncontrollable, &unobservable),
        ANGLE_TOL,
    )?;
    Ok(PassiveSubspaces {
        controllable,
        uncontrollable,
        unobservable,
        checks,
    })
}
