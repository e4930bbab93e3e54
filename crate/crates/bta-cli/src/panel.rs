//! Panel CSV ingestion and writing.
//!
//! One row per observation, header required.  Proxy columns must be fully
//! numeric; outcome columns are numeric or the literal token `NA` (the only
//! missingness marker — blank cells are errors).  Optional `country` and
//! `year` columns become observation labels and the grouping key.  Errors
//! carry row/column coordinates (rows are 1-based data rows).

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;

use bta_core::model::{Dataset, ModelSpec};

use crate::error::{data_err, CliError};
use crate::spec_file::SpecFile;

pub const NA_TOKEN: &str = "NA";

pub const LABEL_COLUMN: &str = "country";
pub const GROUP_COLUMN: &str = "year";

/// Raw rectangular view of a panel file.
pub struct PanelFile {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl PanelFile {
    pub fn read(path: &Path) -> Result<PanelFile, CliError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| data_err(format!("cannot read panel {}: {e}", path.display())))?;
        let header = reader
            .headers()
            .map_err(|e| data_err(format!("bad header in {}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (k, rec) in reader.records().enumerate() {
            let rec =
                rec.map_err(|e| data_err(format!("row {}: unreadable record: {e}", k + 1)))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(PanelFile { header, rows })
    }

    fn column_index(&self, name: &str) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data_err(format!("missing column {name}")))
    }
}

/// Load a panel/spec pair into the model spec and dataset.
pub fn load(panel_path: &Path, spec_path: &Path) -> Result<(ModelSpec, Dataset), CliError> {
    let spec_file = SpecFile::read(spec_path)?;
    let spec = spec_file.to_model_spec()?;
    let panel = PanelFile::read(panel_path)?;
    let data = dataset_from_panel(&panel, &spec_file, &spec)?;
    Ok((spec, data))
}

pub fn dataset_from_panel(
    panel: &PanelFile,
    spec_file: &SpecFile,
    spec: &ModelSpec,
) -> Result<Dataset, CliError> {
    let n = panel.rows.len();
    if n == 0 {
        return Err(data_err("no observations"));
    }
    let parse_cell = |row: usize, col: &str, raw: &str| -> Result<f64, CliError> {
        raw.parse::<f64>().map_err(|_| {
            data_err(format!(
                "non-numeric cell at row {}, column {col}: {raw:?}",
                row + 1
            ))
        })
    };

    let mut proxies = Vec::with_capacity(spec.n_theories());
    for th in &spec_file.theories {
        let cols: Vec<usize> = th
            .proxies
            .iter()
            .map(|p| panel.column_index(p))
            .collect::<Result<_, _>>()?;
        let mut x = DMatrix::zeros(n, cols.len());
        for (i, row) in panel.rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                let raw = row.get(c).map(String::as_str).unwrap_or("");
                if raw == NA_TOKEN {
                    return Err(data_err(format!(
                        "NA in proxy column {} at row {}",
                        th.proxies[j],
                        i + 1
                    )));
                }
                x[(i, j)] = parse_cell(i, &th.proxies[j], raw)?;
            }
        }
        proxies.push(x);
    }

    let r_count = spec.n_outcomes();
    let mut outcomes = DMatrix::from_element(n, r_count, f64::NAN);
    let mut present = vec![false; n * r_count];
    for (r, oc) in spec_file.outcomes.iter().enumerate() {
        let col = panel.column_index(oc.column_name())?;
        for (i, row) in panel.rows.iter().enumerate() {
            let raw = row.get(col).map(String::as_str).unwrap_or("");
            if raw == NA_TOKEN {
                continue;
            }
            outcomes[(i, r)] = parse_cell(i, oc.column_name(), raw)?;
            present[i * r_count + r] = true;
        }
    }

    let labels = match panel.header.iter().position(|h| h == LABEL_COLUMN) {
        Some(c) => panel.rows.iter().map(|row| row[c].clone()).collect(),
        None => Vec::new(),
    };
    let groups = match panel.header.iter().position(|h| h == GROUP_COLUMN) {
        Some(c) => panel.rows.iter().map(|row| row[c].clone()).collect(),
        None => Vec::new(),
    };

    let data = Dataset::new(proxies, outcomes, present, labels, groups).map_err(CliError::from)?;
    data.check_against(spec).map_err(|e| {
        // re-locate logistic violations with coordinates
        data_err(e.to_string())
    })?;
    Ok(data)
}

/// Write a panel: header plus one row per observation, `NA` for missing
/// outcome cells, shortest round-trip formatting for numbers.
pub fn write_panel(
    path: &Path,
    header: &[String],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| data_err(format!("cannot write panel {}: {e}", path.display())))?;
    writer
        .write_record(header)
        .map_err(|e| data_err(format!("write failure: {e}")))?;
    for row in rows {
        writer
            .write_record(row)
            .map_err(|e| data_err(format!("write failure: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| data_err(format!("write failure: {e}")))?;
    Ok(())
}

/// Per-outcome present counts, used by `validate` reporting.
pub fn present_counts(data: &Dataset) -> Vec<usize> {
    (0..data.n_outcomes()).map(|r| data.present_count(r)).collect()
}

/// Summary map: column name -> count of distinct values, handy for sanity
/// printing in `validate`.
pub fn header_map(panel: &PanelFile) -> HashMap<String, usize> {
    panel
        .header
        .iter()
        .enumerate()
        .map(|(k, h)| (h.clone(), k))
        .collect()
}
