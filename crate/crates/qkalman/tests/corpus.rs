use qkalman::cli_io::corpus::{run_embedded, text_diff, CORPUS};
use qkalman::cli_io::spec::ToleranceOverrides;
use qkalman::cli_io::{emit_spec, parse_spec, render_text, report_from_json, report_to_json, run_bytes};
use sha2::{Digest, Sha256};

#[test]
fn embedded_corpus_matches_goldens() {
    for o in run_embedded(None) {
        assert!(o.ok(), "{}: {:?}", o.name, o.problems);
    }
}

#[test]
fn spec_parse_emit_parse_is_stable() {
    for e in CORPUS {
        let first = parse_spec(e.spec.as_bytes()).unwrap();
        let emitted = emit_spec(&first);
        let second = parse_spec(emitted.as_bytes()).unwrap();
        assert_eq!(first, second, "{}", e.name);
        assert_eq!(emitted, emit_spec(&second), "{}", e.name);
    }
}

#[test]
fn reports_round_trip_through_json() {
    for e in CORPUS {
        let r = run_bytes(e.spec.as_bytes(), None, &ToleranceOverrides::default()).unwrap();
        let back = report_from_json(&report_to_json(&r)).unwrap();
        assert_eq!(back, r, "{}", e.name);
        assert_eq!(text_diff(&render_text(&r), &render_text(&back)), None);
    }
}

#[test]
fn reports_hash_the_exact_input() {
    for e in CORPUS {
        let r = run_bytes(e.spec.as_bytes(), None, &ToleranceOverrides::default()).unwrap();
        let want: String = Sha256::digest(e.spec.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(r.input_sha256, want, "{}", e.name);
    }
}

#[test]
fn env_tolerance_changes_recorded_tolerances_only() {
    let e = &CORPUS[0];
    let a = run_bytes(e.spec.as_bytes(), None, &ToleranceOverrides::default()).unwrap();
    let b = run_bytes(e.spec.as_bytes(), Some("2e-9"), &ToleranceOverrides::default()).unwrap();
    assert_eq!(b.tolerances.zero_tol, 2e-9);
    assert_eq!(a.dims, b.dims);
}
