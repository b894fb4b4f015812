//! Text formats.
//!
//! Tables are CSV preceded by one `# {json}` header line. Matrices are JSON objects
//! `{"rows", "cols", "data"}` with `data` the row-major list of `[re, im]` pairs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::fock::{DensityMatrix, Space};
use crate::phase_space::{
    GridLayout, PhaseSpaceGrid, QSample, QSamples, WignerGrid, Q_CONVENTION, WIGNER_CONVENTION,
};
use crate::reconstruction::{Diagnostics, ReconstructionResult, ReconstructionWarning};
use crate::{CMatrix, Error, Result, C64};

pub const QSAMPLES_FORMAT: &str = "vacuumq-qsamples";
pub const QSAMPLES_VERSION: u32 = 1;
pub const QSAMPLES_COLUMNS: [&str; 5] = ["re_alpha", "im_alpha", "value", "shots", "dark_counts"];

const POLAR_NOTE: &str = "origin listed once with multiplicity n_phases, then rings k*r_step";

/// First line of a Q-sample CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QSamplesHeader {
    pub format: String,
    pub version: u32,
    pub layout: GridLayout,
    pub truncation: usize,
    pub q_convention: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_note: Option<String>,
    /// Free-form run metadata; ignored on read.
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub provenance: Value,
}

fn header_line(value: &impl Serialize) -> Result<String> {
    Ok(format!("# {}\n", serde_json::to_string(value)?))
}

/// Writes `# {json}`, a column line and one line per row.
pub fn write_table(header: &Value, columns: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    let mut out = header_line(header)?;
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                left: columns.len(),
                right: row.len(),
            });
        }
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_q_samples_csv(samples: &QSamples, provenance: Value) -> Result<String> {
    let header = QSamplesHeader {
        format: QSAMPLES_FORMAT.into(),
        version: QSAMPLES_VERSION,
        layout: samples.layout.clone(),
        truncation: samples.truncation,
        q_convention: Q_CONVENTION.into(),
        grid_note: matches!(samples.layout, GridLayout::Polar { .. }).then(|| POLAR_NOTE.into()),
        provenance,
    };
    let mut out = header_line(&header)?;
    out.push_str(&QSAMPLES_COLUMNS.join(","));
    out.push('\n');
    for s in &samples.samples {
        let shots = s.shots.map_or_else(|| "inf".to_string(), |n| n.to_string());
        let dark = s.dark_counts.map_or_else(String::new, |n| n.to_string());
        writeln!(
            out,
            "{},{},{},{shots},{dark}",
            s.alpha.re, s.alpha.im, s.q_estimate
        )
        .expect("writing to a String");
    }
    Ok(out)
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Splits off and decodes the `# {json}` first line.
fn split_header<T: for<'de> Deserialize<'de>>(text: &str) -> Result<(T, &str)> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let json = first
        .trim_end_matches('\r')
        .strip_prefix('#')
        .ok_or_else(|| parse_error(1, "expected `# {json}` header line"))?;
    let header = serde_json::from_str(json.trim()).map_err(|e| parse_error(1, format!("header: {e}")))?;
    Ok((header, rest))
}

fn parse_f64(field: &str, line: u64, name: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_error(line, format!("{name}: `{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("{name}: `{field}` is not finite")));
    }
    Ok(v)
}

fn parse_count(field: &str, line: u64, name: &str) -> Result<u64> {
    field
        .trim()
        .parse()
        .map_err(|_| parse_error(line, format!("{name}: `{field}` is not a non-negative integer")))
}

/// Parses a Q-sample CSV, reporting the 1-based line of the first problem.
pub fn read_q_samples_csv(text: &str) -> Result<QSamples> {
    let (header, body): (QSamplesHeader, _) = split_header(text)?;
    if header.format != QSAMPLES_FORMAT {
        return Err(parse_error(
            1,
            format!("format `{}` is not `{QSAMPLES_FORMAT}`", header.format),
        ));
    }
    if header.version != QSAMPLES_VERSION {
        return Err(parse_error(
            1,
            format!(
                "version {} unsupported (expected {QSAMPLES_VERSION})",
                header.version
            ),
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(body.as_bytes());
    let columns = reader
        .headers()
        .map_err(|e| parse_error(2, e.to_string()))?
        .clone();
    if columns.iter().map(str::trim).ne(QSAMPLES_COLUMNS) {
        return Err(parse_error(
            2,
            format!("columns must be `{}`", QSAMPLES_COLUMNS.join(",")),
        ));
    }
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() + 1);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() + 1);
        if record.len() != QSAMPLES_COLUMNS.len() {
            return Err(parse_error(
                line,
                format!(
                    "expected {} fields, found {}",
                    QSAMPLES_COLUMNS.len(),
                    record.len()
                ),
            ));
        }
        let alpha = C64::new(
            parse_f64(&record[0], line, "re_alpha")?,
            parse_f64(&record[1], line, "im_alpha")?,
        );
        let value = parse_f64(&record[2], line, "value")?;
        let sample = match (record[3].trim(), record[4].trim()) {
            ("inf", "") => QSample::exact(alpha, value),
            ("inf", _) => return Err(parse_error(line, "exact rows must leave dark_counts empty")),
            (shots, dark) => {
                let shots = parse_count(shots, line, "shots")?;
                let dark = parse_count(dark, line, "dark_counts")?;
                if shots == 0 || dark > shots {
                    return Err(parse_error(line, "need 0 <= dark_counts <= shots, shots > 0"));
                }
                let s = QSample::counted(alpha, dark, shots);
                if (s.q_estimate - value).abs() > 1e-9 * value.abs().max(1.0) {
                    return Err(parse_error(line, "value disagrees with dark_counts/(pi*shots)"));
                }
                s
            }
        };
        samples.push(sample);
    }
    if let Ok(grid) = PhaseSpaceGrid::from_layout(&header.layout) {
        if grid.len() != samples.len() {
            return Err(parse_error(
                samples.len() as u64 + 2,
                format!("layout has {} points, file has {}", grid.len(), samples.len()),
            ));
        }
        for (i, (expected, s)) in grid.alphas().zip(&samples).enumerate() {
            if (expected - s.alpha).norm() > 1e-9 {
                return Err(parse_error(
                    i as u64 + 3,
                    format!(
                        "point {} is off the declared layout (expected {expected})",
                        s.alpha
                    ),
                ));
            }
        }
    }
    Ok(QSamples {
        layout: header.layout,
        truncation: header.truncation,
        samples,
    })
}

pub fn write_wigner_csv(grid: &WignerGrid, provenance: Value) -> Result<String> {
    let header = serde_json::json!({
        "format": "vacuumq-wigner",
        "version": 1,
        "layout": grid.layout,
        "wigner_convention": WIGNER_CONVENTION,
        "provenance": provenance,
    });
    let rows: Vec<Vec<f64>> = grid
        .points
        .iter()
        .zip(&grid.values)
        .map(|(a, w)| vec![a.re, a.im, *w])
        .collect();
    write_table(&header, &["re_alpha", "im_alpha", "wigner"], &rows)
}

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
            .collect();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::DimensionMismatch {
                left: self.rows * self.cols,
                right: self.data.len(),
            });
        }
        Ok(CMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.data.iter().map(|[re, im]| C64::new(*re, *im)),
        ))
    }

    /// Validates the matrix as a phonon density matrix.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.to_matrix()?, Space::Phonon)
    }
}

pub fn read_density_json(text: &str) -> Result<DensityMatrix> {
    let m: MatrixJson = serde_json::from_str(text)?;
    m.to_density()
}

/// JSON image of a reconstruction run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReconstructionDocument {
    pub format: String,
    pub version: u32,
    pub rho: MatrixJson,
    pub residual: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub purity: f64,
    pub fidelity_vs_reference: Option<f64>,
    pub used_points: usize,
    pub warnings: Vec<ReconstructionWarning>,
    pub diagnostics: Diagnostics,
    pub provenance: Value,
}

impl ReconstructionDocument {
    pub fn new(result: &ReconstructionResult, provenance: Value) -> Self {
        Self {
            format: "vacuumq-reconstruction".into(),
            version: 1,
            rho: MatrixJson::from(result.rho.matrix()),
            residual: result.residual,
            objective: result.objective,
            iterations: result.iterations,
            converged: result.converged,
            purity: result.purity,
            fidelity_vs_reference: result.fidelity_vs_reference,
            used_points: result.used_points,
            warnings: result.warnings.clone(),
            diagnostics: result.diagnostics.clone(),
            provenance,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{simulate_q_experiment, DetectorModel};
    use crate::fock::{coherent_state, FockSpace};
    use crate::phase_space::q_grid;

    fn coherent_rho() -> DensityMatrix {
        let s = FockSpace::new(40).unwrap();
        DensityMatrix::from_pure(
            &coherent_state(C64::new(0.7, -0.3), s).unwrap().amplitudes,
            Space::Phonon,
        )
        .unwrap()
    }

    #[test]
    fn exact_samples_round_trip() {
        let samples = q_grid(&coherent_rho(), &PhaseSpaceGrid::paper_scan()).unwrap();
        let text = write_q_samples_csv(&samples, serde_json::json!({"seed": 1})).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# {"));
        assert_eq!(lines[1], "re_alpha,im_alpha,value,shots,dark_counts");
        assert!(lines[2].ends_with(",inf,"));
        assert_eq!(read_q_samples_csv(&text).unwrap(), samples);
    }

    #[test]
    fn counted_samples_round_trip() {
        let rho = coherent_rho();
        let samples = simulate_q_experiment(
            &rho,
            &PhaseSpaceGrid::paper_scan(),
            &DetectorModel::ideal(40),
            100,
            5,
        )
        .unwrap();
        let text = write_q_samples_csv(&samples, Value::Null).unwrap();
        assert_eq!(read_q_samples_csv(&text).unwrap(), samples);
    }

    fn line_of(err: Error) -> u64 {
        match err {
            Error::Parse { line, .. } => line,
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn malformed_rows_report_their_line() {
        let samples = q_grid(&coherent_rho(), &PhaseSpaceGrid::paper_scan()).unwrap();
        let text = write_q_samples_csv(&samples, Value::Null).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let original = lines[6].clone();

        lines[6] = "0.2,abc,0.1,inf,".into();
        assert_eq!(line_of(read_q_samples_csv(&lines.join("\n")).unwrap_err()), 7);

        lines[6] = "0.2,0.0,0.1".into();
        assert_eq!(line_of(read_q_samples_csv(&lines.join("\n")).unwrap_err()), 7);

        lines[6] = "0.2,0.0,0.1,100,101".into();
        assert_eq!(line_of(read_q_samples_csv(&lines.join("\n")).unwrap_err()), 7);

        lines[6] = original.replace(",inf,", ",inf,3");
        assert_eq!(line_of(read_q_samples_csv(&lines.join("\n")).unwrap_err()), 7);

        lines[6] = original;
        lines.truncate(40);
        assert!(read_q_samples_csv(&lines.join("\n")).is_err());
    }

    #[test]
    fn header_problems_are_line_one() {
        assert_eq!(line_of(read_q_samples_csv("re_alpha\n").unwrap_err()), 1);
        assert_eq!(line_of(read_q_samples_csv("# {\"format\": 3}\n").unwrap_err()), 1);
        let samples = q_grid(&coherent_rho(), &PhaseSpaceGrid::custom([C64::ZERO])).unwrap();
        let text = write_q_samples_csv(&samples, Value::Null).unwrap();
        let bumped = text.replace("\"version\":1", "\"version\":9");
        assert_eq!(line_of(read_q_samples_csv(&bumped).unwrap_err()), 1);
        let renamed = text.replace("dark_counts", "dark");
        assert_eq!(line_of(read_q_samples_csv(&renamed).unwrap_err()), 2);
    }

    #[test]
    fn matrix_json_round_trip() {
        let rho = coherent_rho();
        let json = serde_json::to_string(&MatrixJson::from(rho.matrix())).unwrap();
        let back = read_density_json(&json).unwrap();
        assert_eq!(back.matrix(), rho.matrix());
        let m = MatrixJson {
            rows: 2,
            cols: 2,
            data: vec![[0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.4, 0.0]],
        };
        assert!(m.to_density().is_err());
    }

    #[test]
    fn tables_reject_ragged_rows() {
        let h = serde_json::json!({});
        assert!(write_table(&h, &["a", "b"], &[vec![1.0]]).is_err());
        let t = write_table(&h, &["a", "b"], &[vec![1.0, 0.25]]).unwrap();
        assert_eq!(t, "# {}\na,b\n1,0.25\n");
    }
}
