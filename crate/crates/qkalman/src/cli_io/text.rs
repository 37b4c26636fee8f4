//! Plain-text rendering of a report.

use super::report::{ComplexMatrixJson, DecompositionReport, RealMatrixJson};
use std::fmt::Write;

/// Magnitudes below this print as `0`.
const PRINT_ZERO: f64 = 1e-12;

fn num(x: f64) -> String {
    if x.abs() < PRINT_ZERO {
        "0".into()
    } else {
        format!("{x:.6}")
    }
}

fn cnum(z: [f64; 2]) -> String {
    match (z[0].abs() < PRINT_ZERO, z[1].abs() < PRINT_ZERO) {
        (true, true) => "0".into(),
        (false, true) => num(z[0]),
        (true, false) => format!("{}i", num(z[1])),
        (false, false) => format!("{}{}{}i", num(z[0]), if z[1] < 0.0 { "-" } else { "+" }, num(z[1].abs())),
    }
}

fn table(out: &mut String, title: &str, row_labels: Option<&[String]>, col_labels: Option<&[String]>, cells: Vec<Vec<String>>) {
    let _ = writeln!(out, "{title}");
    if cells.is_empty() || cells[0].is_empty() {
        let _ = writeln!(out, "  (empty)");
        return;
    }
    let ncols = cells[0].len();
    let mut width = vec![0usize; ncols];
    for row in &cells {
        for (j, c) in row.iter().enumerate() {
            width[j] = width[j].max(c.chars().count());
        }
    }
    if let Some(cl) = col_labels {
        for (j, l) in cl.iter().enumerate() {
            width[j] = width[j].max(l.chars().count());
        }
    }
    let lw = row_labels.map_or(0, |r| r.iter().map(|l| l.chars().count()).max().unwrap_or(0));
    let pad = |s: &str, w: usize| format!("{}{s}", " ".repeat(w.saturating_sub(s.chars().count())));
    if let Some(cl) = col_labels {
        let mut line = format!("  {}", " ".repeat(if lw > 0 { lw + 3 } else { 0 }));
        for (j, l) in cl.iter().enumerate() {
            line.push_str(&pad(l, width[j]));
            line.push_str("  ");
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    for (i, row) in cells.iter().enumerate() {
        let mut line = String::from("  ");
        if let Some(rl) = row_labels {
            line.push_str(&pad(&rl[i], lw));
            line.push_str(" | ");
        }
        for (j, c) in row.iter().enumerate() {
            line.push_str(&pad(c, width[j]));
            line.push_str("  ");
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
}

fn real_cells(m: &RealMatrixJson) -> Vec<Vec<String>> {
    m.data.iter().map(|r| r.iter().map(|&x| num(x)).collect()).collect()
}

fn complex_cells(m: &ComplexMatrixJson) -> Vec<Vec<String>> {
    m.data.iter().map(|r| r.iter().map(|&z| cnum(z)).collect()).collect()
}

fn io_labels(m: usize, prefix: &str) -> Vec<String> {
    (1..=m)
        .map(|i| format!("q_{prefix}{i}"))
        .chain((1..=m).map(|i| format!("p_{prefix}{i}")))
        .collect()
}

fn quadrature_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("q{i}")).chain((1..=n).map(|i| format!("p{i}"))).collect()
}

pub fn render_text(r: &DecompositionReport) -> String {
    let mut out = String::new();
    let d = &r.dims;
    let _ = writeln!(out, "system: {}", r.name.as_deref().unwrap_or("(unnamed)"));
    if let Some(desc) = &r.description {
        let _ = writeln!(out, "description: {desc}");
    }
    let _ = writeln!(out, "representation: {:?}", r.representation);
    let _ = writeln!(out, "input sha256: {}", r.input_sha256);
    let _ = writeln!(out, "status: {}", if r.passed { "PASS" } else { "FAIL" });
    for n in &r.notices {
        let _ = writeln!(out, "notice: {n}");
    }
    let t = &r.tolerances;
    let _ = writeln!(
        out,
        "tolerances: rank {:e}, zero {:e}, eig {:e}, classify {:e}",
        t.rank_tol, t.zero_tol, t.eig_tol, t.classify_tol
    );
    let _ = writeln!(
        out,
        "realizability: dynamics {:.3e}, io {:.3e}",
        r.realizability.dynamics_residual, r.realizability.io_residual
    );
    let _ = writeln!(
        out,
        "dims: n={} m={} n1(co)={} n2(df)={} n3(h)={} na={} nb={}",
        d.n, d.m, d.n1, d.n2, d.n3, d.na, d.nb
    );
    let _ = writeln!(out);

    let qlabels = quadrature_labels(d.n);
    let vars: Vec<Vec<String>> = r
        .real_variables
        .iter()
        .map(|v| v.coefficients.iter().map(|&x| num(x)).collect())
        .collect();
    let vlabels: Vec<String> = r.real_variables.iter().map(|v| v.label.clone()).collect();
    table(&mut out, "canonical variables (rows of S^T):", Some(&vlabels), Some(&qlabels), vars);
    let _ = writeln!(out);

    let re = &r.rearranged;
    let _ = writeln!(out, "rearranged real form, order ({}):", re.labels.join(", "));
    table(&mut out, "A", Some(&re.labels), Some(&re.labels), real_cells(&re.a));
    table(&mut out, "B", Some(&re.labels), Some(&io_labels(d.m, "in")), real_cells(&re.b));
    table(&mut out, "C", Some(&io_labels(d.m, "out")), Some(&re.labels), real_cells(&re.c));
    let _ = writeln!(out);

    for (k, m) in &r.real_blocks {
        if k.ends_with("_bar") {
            continue;
        }
        table(&mut out, &format!("real {k} ({}x{})", m.rows, m.cols), None, None, real_cells(m));
    }
    let _ = writeln!(out);
    table(&mut out, "T", None, None, complex_cells(&r.t));
    for (k, m) in &r.complex_blocks {
        if k.ends_with("_bar") {
            continue;
        }
        table(&mut out, &format!("complex {k} ({}x{})", m.rows, m.cols), None, None, complex_cells(m));
    }

    if let Some(p) = &r.passive {
        let _ = writeln!(out);
        table(&mut out, "passive unitary [controllable | DFS]", None, None, complex_cells(&p.unitary));
        table(&mut out, "passive A_co", None, None, complex_cells(&p.a_co));
        table(&mut out, "passive A_df", None, None, complex_cells(&p.a_df));
        let eigs: Vec<String> = p.dfs_eigenvalues.iter().map(|z| cnum([z.re, z.im])).collect();
        let _ = writeln!(out, "DFS eigenvalues: [{}]", eigs.join(", "));
    }

    let _ = writeln!(out);
    let m = &r.modes;
    let show = |v: &crate::analysis::Variable| -> String {
        let terms: Vec<String> = v
            .coefficients
            .iter()
            .zip(&qlabels)
            .filter(|(c, _)| c.abs() >= PRINT_ZERO)
            .map(|(c, l)| format!("{}*{l}", num(*c)))
            .collect();
        format!("{} = {}", v.label, if terms.is_empty() { "0".into() } else { terms.join(" + ") })
    };
    let _ = writeln!(out, "QND variables (QMFS span {{{}}}):", m.qmfs.join(", "));
    for v in &m.qnd_variables {
        let _ = writeln!(out, "  {}", show(v));
    }
    let _ = writeln!(out, "conjugate pairs:");
    for (q, p) in &m.conjugate_pairing {
        let _ = writeln!(out, "  {q} <-> {p}");
    }
    let _ = writeln!(out, "decoherence-free modes:");
    for pair in &m.df_modes {
        let _ = writeln!(out, "  {}; {}", show(&pair.q), show(&pair.p));
    }
    let _ = writeln!(out, "controllable-observable modes:");
    for pair in &m.co_modes {
        let _ = writeln!(out, "  {}; {}", show(&pair.q), show(&pair.p));
    }

    let _ = writeln!(out);
    for b in &r.bae {
        let worst = b.markov_residuals.iter().cloned().fold(0.0, f64::max);
        let _ = writeln!(
            out,
            "BAE {} -> {}: {} (max Markov {:.3e})",
            b.input_quadrature,
            b.output_quadrature,
            if b.verdict { "yes" } else { "no" },
            worst
        );
    }
    let f = &r.flags;
    let _ = writeln!(
        out,
        "flag1 Omega-invariant Ker(O_s): {} (gap {:.3e}); flag2 Im(C^dag) perp Ker(O_s J): {} (overlap {:.3e}); {:?}",
        f.flag1, f.flag1_gap, f.flag2, f.flag2_overlap, f.status
    );
    let _ = writeln!(out);
    let failed: Vec<_> = r.checks.iter().filter(|c| !c.passed).collect();
    let _ = writeln!(out, "checks: {} recorded, {} failed", r.checks.0.len(), failed.len());
    for c in failed {
        let _ = writeln!(out, "  FAILED {}: {:.3e} > {:.1e}", c.name, c.residual, c.tol);
    }
    out
}
