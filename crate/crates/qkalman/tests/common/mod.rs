//! Shared fixtures: seeded random systems and a brute-force dimension oracle.
#![allow(dead_code)]

use qkalman::matrix_core::{jj_real, singular_values, CMat, RMat, StructureTolerance, C64};
use qkalman::system_model::{
    build_general, build_passive, to_complex_system, PassiveQLSystem, QLSystem, RealQLSystem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tol() -> StructureTolerance {
    StructureTolerance::default()
}

fn unit(r: &mut ChaCha8Rng) -> f64 {
    r.gen_range(-1.0..1.0)
}

fn cunit(r: &mut ChaCha8Rng) -> C64 {
    C64::new(unit(r), unit(r))
}

fn sym(r: &mut ChaCha8Rng, k: usize, zero_prob: f64) -> RMat {
    let mut h = RMat::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            if !r.gen_bool(zero_prob) {
                let v = unit(r);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
    }
    h
}

/// Random real symplectic matrix `exp(scale * 𝕁 G)` with `G` symmetric.
pub fn random_symplectic(r: &mut ChaCha8Rng, n: usize, scale: f64) -> RMat {
    let g = sym(r, 2 * n, 0.0);
    (jj_real(n) * g * scale).exp()
}

/// Random orthogonal symplectic matrix, the real form of a random unitary.
pub fn random_orthogonal_symplectic(r: &mut ChaCha8Rng, n: usize) -> RMat {
    let u = random_unitary(r, n);
    let mut s = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = u[(i, j)];
            s[(i, j)] = z.re;
            s[(i, j + n)] = -z.im;
            s[(i + n, j)] = z.im;
            s[(i + n, j + n)] = z.re;
        }
    }
    s
}

/// Random unitary from the QR factor of a random complex matrix.
pub fn random_unitary(r: &mut ChaCha8Rng, n: usize) -> CMat {
    let x = CMat::from_fn(n, n, |_, _| cunit(r));
    x.qr().q()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Dense complex `Ω₋, Ω₊, C₋, C₊`.
    Dense,
    /// Sparse real Hamiltonian and coupling.
    Sparse,
    /// Uncoupled modes interacting with coupled ones through `q` only.
    Qnd,
    /// Uncoupled modes fully decoupled from the coupled ones.
    Decoupled,
}

pub const FAMILIES: [Family; 4] = [Family::Dense, Family::Sparse, Family::Qnd, Family::Decoupled];

fn real_system(h: &RMat, c: &RMat) -> QLSystem {
    let (real, _) = RealQLSystem::from_hamiltonian(h, c, &tol()).expect("generated system is realizable");
    to_complex_system(&real, &tol()).expect("real form converts")
}

/// Random realizable general system with `n` modes and `m` fields. The
/// structured families are hidden behind a random orthogonal symplectic
/// change of variables half of the time. A non-orthogonal symplectic change
/// can leave the four orthogonal Kalman subspaces short of spanning the
/// state space; see [`non_orthogonal_counterexample`].
pub fn random_general(r: &mut ChaCha8Rng, n: usize, m: usize, family: Family) -> QLSystem {
    general_with(r, n, m, family, false)
}

fn general_with(r: &mut ChaCha8Rng, n: usize, m: usize, family: Family, generic_symplectic: bool) -> QLSystem {
    if family == Family::Dense {
        let x = CMat::from_fn(n, n, |_, _| cunit(r));
        let y = CMat::from_fn(n, n, |_, _| cunit(r));
        let om = (&x + x.adjoint()) * C64::new(0.5, 0.0);
        let op = (&y + y.transpose()) * C64::new(0.5, 0.0);
        let cm = CMat::from_fn(m, n, |_, _| cunit(r));
        let cp = CMat::from_fn(m, n, |_, _| cunit(r) * 0.5);
        return build_general(&om, &op, &cm, &cp, &tol()).expect("dense system builds").0;
    }
    let coupled = r.gen_range(1..=n);
    let mut h = sym(r, 2 * n, if family == Family::Sparse { 0.6 } else { 0.3 });
    let mut c = RMat::zeros(2 * m, 2 * n);
    for i in 0..2 * m {
        for j in 0..n {
            if j < coupled && !(family == Family::Sparse && r.gen_bool(0.5)) {
                c[(i, j)] = unit(r);
                c[(i, j + n)] = unit(r);
            }
        }
    }
    match family {
        Family::Qnd => {
            // free p's appear nowhere; free q's couple only to q's
            for f in coupled..n {
                for k in 0..2 * n {
                    h[(f + n, k)] = 0.0;
                    h[(k, f + n)] = 0.0;
                }
                for k in n..2 * n {
                    h[(f, k)] = 0.0;
                    h[(k, f)] = 0.0;
                }
            }
        }
        Family::Decoupled => {
            for f in coupled..n {
                for k in 0..coupled {
                    for (a, b) in [(f, k), (f, k + n), (f + n, k), (f + n, k + n)] {
                        h[(a, b)] = 0.0;
                        h[(b, a)] = 0.0;
                    }
                }
            }
        }
        _ => {}
    }
    if r.gen_bool(0.5) {
        let s = if generic_symplectic {
            random_symplectic(r, n, 0.4)
        } else {
            random_orthogonal_symplectic(r, n)
        };
        h = s.transpose() * h * &s;
        c *= s;
    }
    real_system(&h, &c)
}

/// A realizable system whose unobservable subspace is neither orthogonal
/// to nor contained in the uncontrollable one: the q-only family behind a
/// generic symplectic change of variables.
pub fn non_orthogonal_counterexample() -> QLSystem {
    let mut r = rng(8);
    let mut last = None;
    for k in 0..=10 {
        let n = r.gen_range(1..=4);
        let m = r.gen_range(1..=2);
        last = Some(general_with(&mut r, n, m, FAMILIES[k % FAMILIES.len()], true));
    }
    last.expect("loop ran")
}

/// Random system with `n <= 4`, `m <= 2` cycling through the families.
pub fn random_general_any(r: &mut ChaCha8Rng, index: usize) -> QLSystem {
    let n = r.gen_range(1..=4);
    let m = r.gen_range(1..=2);
    random_general(r, n, m, FAMILIES[index % FAMILIES.len()])
}

/// Random passive system; with `planted > 0` that many modes are decoupled
/// from the field before a random unitary rotation.
pub fn random_passive(r: &mut ChaCha8Rng, n: usize, m: usize, planted: usize) -> PassiveQLSystem {
    let x = CMat::from_fn(n, n, |_, _| cunit(r));
    let mut om = (&x + x.adjoint()) * C64::new(0.5, 0.0);
    let mut c = CMat::from_fn(m, n, |_, _| cunit(r));
    let free = planted.min(n);
    for f in n - free..n {
        for k in 0..n {
            if k != f {
                om[(f, k)] = C64::new(0.0, 0.0);
                om[(k, f)] = C64::new(0.0, 0.0);
            }
        }
        for i in 0..m {
            c[(i, f)] = C64::new(0.0, 0.0);
        }
    }
    if free > 0 {
        let u = random_unitary(r, n);
        om = &u * om * u.adjoint();
        c *= u.adjoint();
    }
    let om = (&om + om.adjoint()) * C64::new(0.5, 0.0);
    build_passive(&om, &c, &tol()).expect("passive system builds").0
}

// ---------------------------------------------------------------------------
// Double-double oracle

#[derive(Debug, Clone, Copy, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = two_sum(s, e);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Cdd {
    re: Dd,
    im: Dd,
}

impl Cdd {
    fn from(z: C64) -> Cdd {
        Cdd {
            re: Dd::from(z.re),
            im: Dd::from(z.im),
        }
    }

    fn add(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    fn round(self) -> C64 {
        C64::new(self.re.hi + self.re.lo, self.im.hi + self.im.lo)
    }
}

type DdMat = Vec<Vec<Cdd>>;

fn dd_mat(x: &CMat) -> DdMat {
    (0..x.nrows())
        .map(|i| (0..x.ncols()).map(|j| Cdd::from(x[(i, j)])).collect())
        .collect()
}

fn dd_mul(a: &DdMat, b: &DdMat) -> DdMat {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    (0..r)
        .map(|i| {
            (0..c)
                .map(|j| (0..k).fold(Cdd::default(), |acc, l| acc.add(a[i][l].mul(b[l][j]))))
                .collect()
        })
        .collect()
}

/// Rank by inspecting every singular value: entries below `1e-11 σ_max`
/// count as zero, above `1e-6 σ_max` as nonzero, and anything between is
/// reported as ambiguous.
pub fn inspected_rank(x: &CMat) -> Option<usize> {
    if x.is_empty() {
        return Some(0);
    }
    let sv = singular_values(x);
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Some(0);
    }
    let mut rank = 0;
    for &s in sv.iter() {
        let r = s / top;
        if r > 1e-6 {
            rank += 1;
        } else if r > 1e-11 {
            return None;
        }
    }
    Some(rank)
}

/// `(n1, n2, n3)` from the full `2n`-block expansion `[𝒞; 𝒞M; ...]` with
/// `M = J_n Ω`, accumulated in double-double arithmetic. `None` when a
/// rank decision is ambiguous.
pub fn oracle_dims(sys: &QLSystem) -> Option<(usize, usize, usize)> {
    let n = sys.n();
    let nn = 2 * n;
    let mut jm = CMat::zeros(nn, nn);
    for i in 0..nn {
        jm[(i, i)] = C64::new(if i < n { 1.0 } else { -1.0 }, 0.0);
    }
    let mut m = &jm * sys.omega().to_full();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale > 0.0 {
        // power of two keeps the scaling exact
        m /= C64::new(2f64.powi(scale.log2().ceil() as i32), 0.0);
    }
    let c = sys.c();
    let md = dd_mat(&m);
    let mut block = dd_mat(&c);
    let rows = c.nrows();
    let mut os = CMat::zeros(rows * nn, nn);
    for k in 0..nn {
        for i in 0..rows {
            for j in 0..nn {
                os[(k * rows + i, j)] = block[i][j].round();
            }
        }
        block = dd_mul(&block, &md);
    }
    let osj = &os * &jm;
    let mut both = CMat::zeros(2 * os.nrows(), nn);
    both.view_mut((0, 0), os.shape()).copy_from(&os);
    both.view_mut((os.nrows(), 0), os.shape()).copy_from(&osj);
    let dim_ko = nn - inspected_rank(&os)?;
    let dim_both = nn - inspected_rank(&both)?;
    if !dim_both.is_multiple_of(2) || dim_ko < dim_both {
        return None;
    }
    let n2 = dim_both / 2;
    let n3 = dim_ko - dim_both;
    Some((n - dim_ko + n2, n2, n3))
}

/// Runs `f` and turns a panic into an error message.
pub fn guarded<T>(f: impl FnOnce() -> Result<T, String> + std::panic::UnwindSafe) -> Result<T, String> {
    match std::panic::catch_unwind(f) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into())),
    }
}
