mod common;

use common::{non_orthogonal_counterexample, oracle_dims, random_general_any, random_passive, rng, tol};
use proptest::prelude::*;
use qkalman::analysis::{special_case_flags, FlagStatus};
use qkalman::cli_io::corpus::CORPUS;
use qkalman::cli_io::run_bytes;
use qkalman::cli_io::spec::ToleranceOverrides;
use qkalman::decomposition::{decompose_general, decompose_passive, DecompositionError};
use qkalman::matrix_core::{j_mat, max_norm, max_norm_real, CMat, RMat};
use qkalman::subspaces::{auxiliary_observability, kalman_subspaces, kernel, SubspaceError};
use qkalman::system_model::QLSystem;

/// `|P_Ko P_Kc - P_Kc P_Ko|` for `Ko = Ker(O_s)`, `Kc = Ker(O_s J)`. The four
/// orthogonal Kalman subspaces span the state space iff this vanishes.
fn kernel_commutator(sys: &QLSystem) -> f64 {
    let os = auxiliary_observability(sys, &tol());
    let ko = kernel(&os, &tol()).projector();
    let kc = kernel(&(&os * j_mat(sys.n())), &tol()).projector();
    max_norm(&(&ko * &kc - &kc * &ko))
}


#[test]
fn non_orthogonal_direct_sum_is_rejected() {
    let sys = non_orthogonal_counterexample();
    match kalman_subspaces(&sys, &tol()) {
        Err(SubspaceError::Invariant(f)) => assert!(f.to_string().contains("direct sum"), "{f}"),
        other => panic!("expected a direct-sum failure, got {other:?}"),
    }
    match decompose_general(&sys, &tol()) {
        Err(DecompositionError::Subspace(SubspaceError::Invariant(f))) => assert!(f.to_string().contains("direct sum")),
        other => panic!("expected a direct-sum failure, got {other:?}"),
    }
}

#[test]
fn passive_and_embedded_dimensions_agree() {
    let mut r = rng(41);
    for k in 0..40 {
        let n = 1 + k % 4;
        let sys = random_passive(&mut r, n, 1 + k % 2, k % n.max(1));
        let p = decompose_passive(&sys, &tol()).unwrap();
        let g = decompose_general(&sys.embed(&tol()).unwrap(), &tol()).unwrap();
        assert_eq!(p.dims, g.dims, "system {k}");
        assert_eq!(g.dims.n3, 0, "system {k}");
    }
}

#[test]
fn bae_verdicts_match_sampled_transfer_function() {
    for e in CORPUS {
        let rep = run_bytes(e.spec.as_bytes(), None, &ToleranceOverrides::default()).unwrap();
        for b in &rep.bae {
            assert!(b.sample_points.len() >= 8, "{}: too few non-pole samples", e.name);
            let worst = b.sample_residuals.iter().cloned().fold(0.0, f64::max);
            if b.verdict {
                assert!(worst < 1e-8, "{}: {:?} sampled {worst}", e.name, b.direction);
            } else {
                assert!(worst > 1e-6, "{}: {:?} sampled {worst}", e.name, b.direction);
            }
        }
    }
}

fn is_direct_sum_failure(e: &DecompositionError) -> bool {
    matches!(e, DecompositionError::Subspace(SubspaceError::Invariant(f)) if f.name.contains("direct sum"))
}

/// A failure is acceptable when no orthogonal decomposition exists or when
/// the rank decisions themselves are ambiguous at double precision.
fn explained_failure(sys: &QLSystem, e: &DecompositionError) -> bool {
    (is_direct_sum_failure(e) && kernel_commutator(sys) > 1e-6) || oracle_dims(sys).is_none()
}

#[test]
fn rejections_are_exactly_the_noncommuting_kernels() {
    let mut r = rng(5);
    let mut rejected = 0;
    for k in 0..120 {
        let sys = random_general_any(&mut r, k);
        let gap = kernel_commutator(&sys);
        match decompose_general(&sys, &tol()) {
            Ok(_) => assert!(gap < 1e-8, "system {k}: decomposed with commutator {gap}"),
            Err(e) => {
                assert!(is_direct_sum_failure(&e) && gap > 1e-6, "system {k}: {e} with commutator {gap}");
                rejected += 1;
            }
        }
    }
    // With this seed draw 25 is a lossless single-quadrature probe whose
    // observable plane is symplectic but not J-invariant.
    assert!(rejected >= 1);
    assert!(kernel_commutator(&non_orthogonal_counterexample()) > 1e-6);
}

#[test]
fn nilpotent_and_near_ambiguous_draws() {
    // Each carries a nilpotent or strongly non-normal eigenvalue group whose
    // computed members scatter far beyond eig_tol.
    for (seed, index) in [(7029795920036935079, 1), (2749, 1), (14825, 1), (18797, 1)] {
        let sys = random_general_any(&mut rng(seed), index);
        decompose_general(&sys, &tol()).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
    // O_s has a singular value 3e-9 below its largest: the oracle calls the
    // rank ambiguous and the decomposition may fail, but only on tolerance.
    let sys = random_general_any(&mut rng(6809), 1);
    assert!(oracle_dims(&sys).is_none());
    if let Err(e) = decompose_general(&sys, &tol()) {
        assert!(matches!(e, DecompositionError::Structure(_) | DecompositionError::Sweep(_)), "{e}");
    }
}

#[test]
fn special_case_flags_never_contradict() {
    let mut r = rng(5);
    let mut checked = 0;
    for k in 0..60 {
        let sys = random_general_any(&mut r, k);
        let res = match decompose_general(&sys, &tol()) {
            Ok(res) => res,
            Err(e) if is_direct_sum_failure(&e) => continue,
            Err(e) => panic!("system {k}: {e}"),
        };
        let f = special_case_flags(&sys, &res, &tol()).unwrap();
        assert_eq!(f.status, FlagStatus::Consistent, "system {k}: {f:?}");
        checked += 1;
    }
    assert!(checked >= 55);
}

#[test]
fn decomposition_is_deterministic() {
    let mut r = rng(77);
    for k in 0..10 {
        let sys = random_general_any(&mut r, k);
        let a = decompose_general(&sys, &tol()).unwrap();
        let b = decompose_general(&sys, &tol()).unwrap();
        assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transforms_are_unitary_and_orthogonal(seed in any::<u64>(), index in 0usize..4) {
        let sys = random_general_any(&mut rng(seed), index);
        let res = match decompose_general(&sys, &tol()) {
            Err(e) => {
                prop_assert!(explained_failure(&sys, &e), "{}", e);
                return Ok(());
            }
            Ok(r) => r,
        };
        let nn = 2 * sys.n();
        prop_assert!(max_norm(&(res.t.adjoint() * &res.t - CMat::identity(nn, nn))) < 1e-10);
        prop_assert!(max_norm_real(&(res.s.transpose() * &res.s - RMat::identity(nn, nn))) < 1e-10);
        let d = res.dims;
        prop_assert_eq!(d.n1 + d.n2 + d.n3, d.n);
        prop_assert_eq!(d.na + d.nb, d.n3);
    }

    #[test]
    fn canonical_blocks_reproduce_the_system(seed in any::<u64>(), index in 0usize..4) {
        let sys = random_general_any(&mut rng(seed), index);
        let res = match decompose_general(&sys, &tol()) {
            Err(e) => {
                prop_assert!(explained_failure(&sys, &e), "{}", e);
                return Ok(());
            }
            Ok(r) => r,
        };
        let back = &res.t * &res.complex.a_bar * res.t.adjoint();
        prop_assert!(max_norm(&(back - sys.a())) < 1e-9);
        prop_assert!(max_norm(&(&sys.c() * &res.t - &res.complex.c_bar)) < 1e-9);
    }
}
