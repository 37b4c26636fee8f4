//! Bundled example systems and their golden reports.
//!
//! JSON goldens are compared structurally with numbers allowed to differ by
//! [`GOLDEN_TOL`]; text goldens token by token under the same rule.

use super::spec::ToleranceOverrides;
use super::{report_to_json, run_bytes, text::render_text, DecompositionReport, PipelineError};
use serde_json::Value;
use std::path::{Path, PathBuf};

pub const GOLDEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub spec: &'static str,
    pub golden_json: &'static str,
    pub golden_text: &'static str,
}

macro_rules! entry {
    ($name:literal) => {
        CorpusEntry {
            name: $name,
            spec: include_str!(concat!("../../corpus/", $name, ".json")),
            golden_json: include_str!(concat!("../../corpus/golden/", $name, ".json")),
            golden_text: include_str!(concat!("../../corpus/golden/", $name, ".txt")),
        }
    };
}

pub const CORPUS: &[CorpusEntry] = &[
    entry!("example1_passive"),
    entry!("example2_complex"),
    entry!("example3_real"),
    entry!("case1_red_detuned"),
    entry!("case2_blue_detuned"),
    entry!("case3_phase_shift"),
    entry!("two_oscillator_bae"),
    entry!("zero_coupling"),
];

pub fn entry(name: &str) -> Option<&'static CorpusEntry> {
    CORPUS.iter().find(|e| e.name == name)
}

fn num_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= GOLDEN_TOL * a.abs().max(b.abs()).max(1.0)
}

/// First difference between two JSON values, as a path and description.
pub fn json_diff(expected: &Value, actual: &Value, path: &str) -> Option<String> {
    match (expected, actual) {
        (Value::Number(a), Value::Number(b)) => {
            let (x, y) = (a.as_f64()?, b.as_f64()?);
            (!num_close(x, y)).then(|| format!("{path}: expected {x}, found {y}"))
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                return Some(format!("{path}: length {} vs {}", a.len(), b.len()));
            }
            a.iter()
                .zip(b)
                .enumerate()
                .find_map(|(i, (x, y))| json_diff(x, y, &format!("{path}[{i}]")))
        }
        (Value::Object(a), Value::Object(b)) => {
            if let Some(k) = a.keys().find(|k| !b.contains_key(*k)) {
                return Some(format!("{path}.{k}: missing"));
            }
            if let Some(k) = b.keys().find(|k| !a.contains_key(*k)) {
                return Some(format!("{path}.{k}: unexpected"));
            }
            a.iter().find_map(|(k, x)| json_diff(x, &b[k], &format!("{path}.{k}")))
        }
        (x, y) => (x != y).then(|| format!("{path}: expected {x}, found {y}")),
    }
}

fn tokens_close(x: &str, y: &str) -> bool {
    const PUNCT: &[char] = &['(', ')', '[', ']', ',', ';', ':'];
    let (xs, ys) = (x.trim_start_matches(PUNCT), y.trim_start_matches(PUNCT));
    let (xb, yb) = (xs.trim_end_matches(PUNCT), ys.trim_end_matches(PUNCT));
    // Surrounding punctuation must agree exactly; only the number may drift.
    x.len() - xs.len() == y.len() - ys.len()
        && x[..x.len() - xs.len()] == y[..y.len() - ys.len()]
        && xs[xb.len()..] == ys[yb.len()..]
        && matches!((xb.parse::<f64>(), yb.parse::<f64>()), (Ok(p), Ok(q)) if num_close(p, q))
}

/// First differing token between two text renderings.
pub fn text_diff(expected: &str, actual: &str) -> Option<String> {
    for (ln, (e, a)) in expected.lines().zip(actual.lines()).enumerate() {
        let (et, at): (Vec<_>, Vec<_>) = (e.split_whitespace().collect(), a.split_whitespace().collect());
        let same = et.len() == at.len()
            && et.iter().zip(&at).all(|(x, y)| {
                x == y || tokens_close(x, y)
            });
        if !same {
            return Some(format!("line {}: expected {e:?}, found {a:?}", ln + 1));
        }
    }
    let (ne, na) = (expected.lines().count(), actual.lines().count());
    (ne != na).then(|| format!("expected {ne} lines, found {na}"))
}

#[derive(Debug, Clone)]
pub struct CorpusOutcome {
    pub name: String,
    pub report: Option<DecompositionReport>,
    /// Empty when the run passed and matched its goldens.
    pub problems: Vec<String>,
}

impl CorpusOutcome {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

pub fn check_against_golden(
    name: &str,
    spec: &[u8],
    golden_json: &str,
    golden_text: Option<&str>,
    env_zero: Option<&str>,
) -> CorpusOutcome {
    let mut problems = Vec::new();
    let report = match run_bytes(spec, env_zero, &ToleranceOverrides::default()) {
        Ok(r) => r,
        Err(e) => {
            return CorpusOutcome {
                name: name.into(),
                report: None,
                problems: vec![e.to_string()],
            }
        }
    };
    if !report.passed {
        problems.push("structural checks failed".into());
    }
    match serde_json::from_str::<Value>(golden_json) {
        Ok(expected) => {
            let actual = serde_json::to_value(&report).expect("report serializes");
            if let Some(d) = json_diff(&expected, &actual, "$") {
                problems.push(format!("json golden: {d}"));
            }
        }
        Err(e) => problems.push(format!("json golden unreadable: {e}")),
    }
    if let Some(gt) = golden_text {
        if let Some(d) = text_diff(gt, &render_text(&report)) {
            problems.push(format!("text golden: {d}"));
        }
    }
    CorpusOutcome {
        name: name.into(),
        report: Some(report),
        problems,
    }
}

/// Runs the embedded corpus against the embedded goldens.
pub fn run_embedded(env_zero: Option<&str>) -> Vec<CorpusOutcome> {
    CORPUS
        .iter()
        .map(|e| check_against_golden(e.name, e.spec.as_bytes(), e.golden_json, Some(e.golden_text), env_zero))
        .collect()
}

fn io(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Spec files `DIR/*.json`, sorted by name.
pub fn specs_in(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.is_file())
        .collect();
    out.sort();
    Ok(out)
}

fn golden_paths(spec: &Path) -> (PathBuf, PathBuf) {
    let dir = spec.parent().unwrap_or(Path::new(".")).join("golden");
    let stem = spec.file_stem().unwrap_or_default().to_string_lossy().to_string();
    (dir.join(format!("{stem}.json")), dir.join(format!("{stem}.txt")))
}

/// Runs every spec in `dir` against `dir/golden/<stem>.json` (and `.txt` when
/// present).
pub fn run_dir(dir: &Path, env_zero: Option<&str>) -> Result<Vec<CorpusOutcome>, PipelineError> {
    let mut out = Vec::new();
    for spec in specs_in(dir)? {
        let bytes = std::fs::read(&spec).map_err(|e| io(&spec, e))?;
        let (gj, gt) = golden_paths(&spec);
        let golden_json = std::fs::read_to_string(&gj).map_err(|e| io(&gj, e))?;
        let golden_text = std::fs::read_to_string(&gt).ok();
        let name = spec.file_stem().unwrap_or_default().to_string_lossy().to_string();
        out.push(check_against_golden(&name, &bytes, &golden_json, golden_text.as_deref(), env_zero));
    }
    Ok(out)
}

/// Regenerates the goldens of every spec in `dir`; returns the files written.
pub fn bless_dir(dir: &Path, env_zero: Option<&str>) -> Result<Vec<PathBuf>, PipelineError> {
    let mut written = Vec::new();
    let gdir = dir.join("golden");
    std::fs::create_dir_all(&gdir).map_err(|e| io(&gdir, e))?;
    for spec in specs_in(dir)? {
        let bytes = std::fs::read(&spec).map_err(|e| io(&spec, e))?;
        let report = run_bytes(&bytes, env_zero, &ToleranceOverrides::default())?;
        let (gj, gt) = golden_paths(&spec);
        std::fs::write(&gj, report_to_json(&report) + "\n").map_err(|e| io(&gj, e))?;
        std::fs::write(&gt, render_text(&report)).map_err(|e| io(&gt, e))?;
        written.push(gj);
        written.push(gt);
    }
    Ok(written)
}
