//! Result export: summary tables as CSV, a raw trace export for external
//! convergence tooling, and a diagnostics JSON.
//!
//! Numeric cells use shortest round-trip formatting; the `_display` variants
//! round to three decimals for presentation.  Conditional means of entries
//! that were never included are written as `NA`, never as zero.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use bta_core::engine::{RunDiagnostics, SampleRecord};
use bta_core::model::{ModelSpec, PosteriorSummary};

use crate::error::{runtime_err, CliError};
use crate::panel::NA_TOKEN;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    let file = File::create(path)
        .map_err(|e| runtime_err(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn write_line(w: &mut BufWriter<File>, cells: &[String]) -> Result<(), CliError> {
    let line = cells
        .iter()
        .map(|c| {
            if c.contains(',') || c.contains('"') || c.contains('\n') {
                format!("\"{}\"", c.replace('"', "\"\""))
            } else {
                c.clone()
            }
        })
        .collect::<Vec<_>>()
        .join(",");
    writeln!(w, "{line}").map_err(|e| runtime_err(format!("write failure: {e}")))
}

fn full(v: f64) -> String {
    format!("{v}")
}

fn disp(v: f64) -> String {
    format!("{v:.3}")
}

fn opt_cell(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    match v {
        Some(x) => f(x),
        None => NA_TOKEN.to_string(),
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// Theory-by-outcome table (theories as rows, outcomes as columns).
fn write_matrix_by_theory(
    path: &Path,
    spec: &ModelSpec,
    cell: impl Fn(usize, usize) -> String,
) -> Result<(), CliError> {
    let mut w = create(path)?;
    let mut header = vec!["theory".to_string()];
    header.extend(spec.outcomes.iter().map(|o| o.name.clone()));
    write_line(&mut w, &header)?;
    for (t, th) in spec.theories.iter().enumerate() {
        let mut row = vec![th.name.clone()];
        for r in 0..spec.n_outcomes() {
            row.push(cell(r, t));
        }
        write_line(&mut w, &row)?;
    }
    w.flush().map_err(|e| runtime_err(format!("flush failure: {e}")))
}

/// Write the full summary table set into `out_dir`.
pub fn export_summary(
    out_dir: &Path,
    spec: &ModelSpec,
    summary: &PosteriorSummary,
    labels: &[String],
    groups: &[String],
) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| runtime_err(format!("cannot create {}: {e}", out_dir.display())))?;

    write_matrix_by_theory(&out_dir.join("theory_inclusion.csv"), spec, |r, t| {
        full(summary.theory_inclusion[r][t])
    })?;
    write_matrix_by_theory(&out_dir.join("theory_inclusion_display.csv"), spec, |r, t| {
        disp(summary.theory_inclusion[r][t])
    })?;
    write_matrix_by_theory(&out_dir.join("gamma_conditional_means.csv"), spec, |r, t| {
        opt_cell(summary.gamma_conditional_mean[r][t], full)
    })?;
    write_matrix_by_theory(
        &out_dir.join("gamma_conditional_means_display.csv"),
        spec,
        |r, t| opt_cell(summary.gamma_conditional_mean[r][t], disp),
    )?;

    for (t, th) in spec.theories.iter().enumerate() {
        for (suffix, fmt) in [("", full as fn(f64) -> String), ("_display", disp)] {
            let path = out_dir.join(format!("proxy_{}{suffix}.csv", sanitize(&th.name)));
            let mut w = create(&path)?;
            write_line(
                &mut w,
                &[
                    "name".to_string(),
                    "probability".to_string(),
                    "conditional_mean".to_string(),
                ],
            )?;
            for (j, proxy) in th.proxy_names.iter().enumerate() {
                write_line(
                    &mut w,
                    &[
                        proxy.clone(),
                        fmt(summary.proxy_inclusion[t][j]),
                        opt_cell(summary.proxy_conditional_mean[t][j], fmt),
                    ],
                )?;
            }
            w.flush().map_err(|e| runtime_err(format!("flush failure: {e}")))?;
        }
    }

    // per-observation posterior means of the scale-free indices
    {
        let mut w = create(&out_dir.join("indices.csv"))?;
        let mut header = vec!["row".to_string()];
        if !labels.is_empty() {
            header.push("label".to_string());
        }
        if !groups.is_empty() {
            header.push("group".to_string());
        }
        header.extend(spec.theories.iter().map(|th| th.name.clone()));
        write_line(&mut w, &header)?;
        for i in 0..summary.index_mean.nrows() {
            let mut row = vec![i.to_string()];
            if !labels.is_empty() {
                row.push(labels[i].clone());
            }
            if !groups.is_empty() {
                row.push(groups[i].clone());
            }
            for t in 0..spec.n_theories() {
                row.push(full(summary.index_mean[(i, t)]));
            }
            write_line(&mut w, &row)?;
        }
        w.flush().map_err(|e| runtime_err(format!("flush failure: {e}")))?;
    }

    for (suffix, fmt) in [("", full as fn(f64) -> String), ("_display", disp)] {
        let mut w = create(&out_dir.join(format!("index_correlation{suffix}.csv")))?;
        let mut header = vec!["theory".to_string()];
        header.extend(spec.theories.iter().map(|th| th.name.clone()));
        write_line(&mut w, &header)?;
        for (t, th) in spec.theories.iter().enumerate() {
            let mut row = vec![th.name.clone()];
            for u in 0..spec.n_theories() {
                row.push(fmt(summary.index_correlation[(t, u)]));
            }
            write_line(&mut w, &row)?;
        }
        w.flush().map_err(|e| runtime_err(format!("flush failure: {e}")))?;
    }

    {
        let mut w = create(&out_dir.join("means_by_group.csv"))?;
        let mut header = vec!["group".to_string()];
        header.extend(spec.theories.iter().map(|th| th.name.clone()));
        write_line(&mut w, &header)?;
        for (key, row_vals) in &summary.means_by_group {
            let mut row = vec![key.clone()];
            row.extend(row_vals.iter().map(|v| full(*v)));
            write_line(&mut w, &row)?;
        }
        w.flush().map_err(|e| runtime_err(format!("flush failure: {e}")))?;
    }

    Ok(())
}

/// Scalar trace export: one row per stored sample with the model bitsets,
/// numeric loadings, intercepts, globals, and precision scales.  Chains are
/// appended one at a time so only one store ever sits in memory.
pub struct TraceWriter {
    w: BufWriter<File>,
    t_count: usize,
    r_count: usize,
}

impl TraceWriter {
    pub fn create(path: &Path, spec: &ModelSpec) -> Result<TraceWriter, CliError> {
        let mut w = create(path)?;
        let mut header = vec!["chain".to_string(), "iteration".to_string()];
        for th in &spec.theories {
            header.push(format!("model_{}", sanitize(&th.name)));
            header.push(format!("nu_{}", sanitize(&th.name)));
        }
        for oc in &spec.outcomes {
            header.push(format!("alpha_{}", sanitize(&oc.name)));
            header.push(format!("kappa_{}", sanitize(&oc.name)));
            header.push(format!("xi_{}", sanitize(&oc.name)));
            for th in &spec.theories {
                header.push(format!("gamma_{}_{}", sanitize(&oc.name), sanitize(&th.name)));
            }
        }
        write_line(&mut w, &header)?;
        Ok(TraceWriter {
            w,
            t_count: spec.n_theories(),
            r_count: spec.n_outcomes(),
        })
    }

    pub fn append(&mut self, chain: usize, records: &[SampleRecord]) -> Result<(), CliError> {
        for rec in records {
            let mut row = vec![chain.to_string(), rec.iteration.to_string()];
            for t in 0..self.t_count {
                row.push(rec.models[t].to_string());
                row.push(full(rec.nus[t]));
            }
            for r in 0..self.r_count {
                row.push(full(rec.alphas[r]));
                row.push(full(rec.kappas[r]));
                row.push(full(rec.xis[r]));
                for t in 0..self.t_count {
                    row.push(full(rec.gamma[r][t].value()));
                }
            }
            write_line(&mut self.w, &row)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.w
            .flush()
            .map_err(|e| runtime_err(format!("flush failure: {e}")))
    }
}

pub fn export_diagnostics(path: &Path, diagnostics: &RunDiagnostics) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(diagnostics)
        .map_err(|e| runtime_err(format!("diagnostics encode failure: {e}")))?;
    std::fs::write(path, text)
        .map_err(|e| runtime_err(format!("cannot write {}: {e}", path.display())))
}
