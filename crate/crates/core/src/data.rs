//! Datasets, the centering/unit-scaling transform, and CSV ingestion.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdrError};

/// `N×P` variables paired with an `N`-vector response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    names: Vec<String>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let names = (0..x.ncols()).map(|j| format!("x{j}")).collect();
        Self::with_names(x, y, names)
    }

    pub fn with_names(x: DMatrix<f64>, y: DVector<f64>, names: Vec<String>) -> Result<Self> {
        if x.nrows() < 2 {
            return Err(SdrError::contract(format!(
                "dataset needs at least 2 rows, got {}",
                x.nrows()
            )));
        }
        if x.ncols() < 1 {
            return Err(SdrError::contract("dataset needs at least 1 variable"));
        }
        if x.nrows() != y.len() {
            return Err(SdrError::DimensionMismatch {
                what: "response length",
                expected: x.nrows(),
                found: y.len(),
            });
        }
        if names.len() != x.ncols() {
            return Err(SdrError::DimensionMismatch {
                what: "variable names",
                expected: x.ncols(),
                found: names.len(),
            });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(SdrError::NonFinite("dataset"));
        }
        Ok(Dataset { x, y, names })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Rows at `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Dataset> {
        let x = self.x.select_rows(idx);
        let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.y[i]));
        Dataset::with_names(x, y, self.names.clone())
    }

    /// Reads a delimited file with a header row. `response` names the
    /// response column; columns listed in `exclude` are dropped and every
    /// other column becomes a variable.
    pub fn from_csv_path(
        path: impl AsRef<Path>,
        response: &str,
        delimiter: u8,
        exclude: &[String],
    ) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, response, delimiter, exclude)
    }

    pub fn from_csv_reader<R: std::io::Read>(
        reader: R,
        response: &str,
        delimiter: u8,
        exclude: &[String],
    ) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim_matches('"').to_string())
            .collect();
        let resp_idx = headers
            .iter()
            .position(|h| h == response)
            .ok_or_else(|| SdrError::MissingColumn(response.to_string()))?;
        for e in exclude {
            if !headers.iter().any(|h| h == e) {
                return Err(SdrError::MissingColumn(e.clone()));
            }
        }
        let var_idx: Vec<usize> = (0..headers.len())
            .filter(|&j| j != resp_idx && !exclude.contains(&headers[j]))
            .collect();

        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            // 1-based row numbers counting the header as row 1
            let row = r + 2;
            if rec.len() != headers.len() {
                return Err(SdrError::Ingest {
                    row,
                    column: "*".into(),
                    message: format!("expected {} fields, found {}", headers.len(), rec.len()),
                });
            }
            let parse = |j: usize| -> Result<f64> {
                let cell = rec[j].trim_matches('"');
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| SdrError::Ingest {
                        row,
                        column: headers[j].clone(),
                        message: format!("non-numeric cell `{cell}`"),
                    })
            };
            ys.push(parse(resp_idx)?);
            for &j in &var_idx {
                xs.push(parse(j)?);
            }
        }
        let n = ys.len();
        let x = DMatrix::from_row_slice(n, var_idx.len(), &xs);
        let names = var_idx.iter().map(|&j| headers[j].clone()).collect();
        Dataset::with_names(x, DVector::from_vec(ys), names)
    }
}

/// Per-column `(min, max)` captured for unit scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub min: f64,
    pub max: f64,
    /// `max == min`: scaling is skipped for this column.
    pub constant: bool,
}

/// Scale-then-center transform fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteringTransform {
    /// Means of the (scaled, when ranges are present) columns.
    pub column_means: Vec<f64>,
    pub y_mean: f64,
    pub ranges: Option<Vec<ColumnRange>>,
}

impl CenteringTransform {
    pub fn fit(d: &Dataset, unit_scale: bool) -> Self {
        let ranges = unit_scale.then(|| {
            d.x.column_iter()
                .map(|c| {
                    let min = c.min();
                    let max = c.max();
                    ColumnRange {
                        min,
                        max,
                        constant: !(max > min),
                    }
                })
                .collect::<Vec<_>>()
        });
        let mut t = CenteringTransform {
            column_means: vec![0.0; d.p()],
            y_mean: d.y.mean(),
            ranges,
        };
        let scaled = t.scale(d.x());
        t.column_means = scaled.column_iter().map(|c| c.mean()).collect();
        t
    }

    pub fn p(&self) -> usize {
        self.column_means.len()
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        self.ranges
            .as_ref()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, c)| c.constant)
                    .map(|(j, _)| j)
                    .collect()
            })
            .unwrap_or_default()
    }

    fn scale(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        if let Some(ranges) = &self.ranges {
            for (j, r) in ranges.iter().enumerate() {
                if !r.constant {
                    let width = r.max - r.min;
                    out.column_mut(j).apply(|v| *v = (*v - r.min) / width);
                }
            }
        }
        out
    }

    fn check_width(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.p() {
            return Err(SdrError::DimensionMismatch {
                what: "transform columns",
                expected: self.p(),
                found: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_width(x)?;
        let mut out = self.scale(x);
        for (j, m) in self.column_means.iter().enumerate() {
            out.column_mut(j).add_scalar_mut(-m);
        }
        Ok(out)
    }

    pub fn apply_y(&self, y: &DVector<f64>) -> DVector<f64> {
        y.add_scalar(-self.y_mean)
    }

    pub fn invert(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_width(z)?;
        let mut out = z.clone();
        for (j, m) in self.column_means.iter().enumerate() {
            out.column_mut(j).add_scalar_mut(*m);
        }
        if let Some(ranges) = &self.ranges {
            for (j, r) in ranges.iter().enumerate() {
                if !r.constant {
                    let width = r.max - r.min;
                    out.column_mut(j).apply(|v| *v = *v * width + r.min);
                }
            }
        }
        Ok(out)
    }

    /// Transformed copy of `d` (centered variables and centered response).
    pub fn apply_dataset(&self, d: &Dataset) -> Result<Dataset> {
        Dataset::with_names(self.apply(d.x())?, self.apply_y(d.y()), d.names.clone())
    }
}
