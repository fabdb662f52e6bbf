//! Tabular data: a row-major feature matrix, the `Dataset` wrapper, CSV
//! ingestion and standardization.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DfiError, Result};

/// Dense row-major matrix. Rows are contiguous so predictors can borrow them
/// as slices.
#[derive(Debug, Clone, PartialEq)]
pub struct Rows {
    data: Vec<f64>,
    width: usize,
}

impl Rows {
    pub fn new(data: Vec<f64>, width: usize) -> Result<Self> {
        if width == 0 {
            return Err(DfiError::InvalidDataset("row width must be positive".into()));
        }
        if data.len() % width != 0 {
            return Err(DfiError::DimensionMismatch {
                expected: width,
                got: data.len() % width,
            });
        }
        Ok(Rows { data, width })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * width);
        for r in rows {
            if r.len() != width {
                return Err(DfiError::DimensionMismatch {
                    expected: width,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Rows::new(data, width)
    }

    pub fn zeros(n: usize, width: usize) -> Self {
        Rows {
            data: vec![0.0; n * width],
            width,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.data.len() / self.width
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.width..(i + 1) * self.width]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + Clone {
        self.data.chunks_exact(self.width)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Rows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Rows {
        let mut data = Vec::with_capacity(indices.len() * self.width);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Rows {
            data,
            width: self.width,
        }
    }

    /// Copy with column `j` removed.
    pub fn drop_column(&self, j: usize) -> Rows {
        assert!(self.width > 1, "cannot drop the only column");
        let mut data = Vec::with_capacity(self.n_rows() * (self.width - 1));
        for r in self.iter_rows() {
            data.extend_from_slice(&r[..j]);
            data.extend_from_slice(&r[j + 1..]);
        }
        Rows {
            data,
            width: self.width - 1,
        }
    }
}

/// Feature matrix with named columns and a response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    x: Rows,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>, x: Rows, y: Vec<f64>) -> Result<Self> {
        if x.n_rows() == 0 {
            return Err(DfiError::InvalidDataset("dataset has no rows".into()));
        }
        if feature_names.len() != x.width() {
            return Err(DfiError::DimensionMismatch {
                expected: x.width(),
                got: feature_names.len(),
            });
        }
        if y.len() != x.n_rows() {
            return Err(DfiError::InvalidDataset(format!(
                "response has {} entries but feature matrix has {} rows",
                y.len(),
                x.n_rows()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(DfiError::InvalidDataset(format!(
                    "duplicate feature name \"{name}\""
                )));
            }
        }
        if let Some(pos) = x.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(DfiError::InvalidDataset(format!(
                "non-finite feature value at row {}, column \"{}\"",
                pos / x.width() + 1,
                feature_names[pos % x.width()]
            )));
        }
        if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
            return Err(DfiError::InvalidDataset(format!(
                "non-finite response at row {}",
                pos + 1
            )));
        }
        Ok(Dataset {
            feature_names,
            x,
            y,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.width()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn x(&self) -> &Rows {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Sub-dataset at `indices` (row order preserved as given).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            x: self.x.select(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

/// Centering and scaling constants; entries are the features followed by the
/// response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationInfo {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

/// Reads a CSV with a header row, moving `target` into the response.
pub fn load_csv(path: impl AsRef<Path>, target: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| DfiError::io(path, e))?;
    read_csv(file, target)
}

/// Same as [`load_csv`] from any reader.
pub fn read_csv<R: std::io::Read>(reader: R, target: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| DfiError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let target_idx = headers
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| DfiError::TargetNotFound(target.to_string()))?;
    if headers.len() < 2 {
        return Err(DfiError::InvalidDataset(
            "CSV needs at least one feature column besides the target".into(),
        ));
    }
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut data = Vec::new();
    let mut y = Vec::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| DfiError::Csv(e.to_string()))?;
        let row = row_idx + 1;
        if record.len() != headers.len() {
            return Err(DfiError::Csv(format!(
                "row {row} has {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        for (col, cell) in record.iter().enumerate() {
            let value = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DfiError::InvalidCell {
                    row,
                    column: headers[col].clone(),
                    value: cell.to_string(),
                })?;
            if col == target_idx {
                y.push(value);
            } else {
                data.push(value);
            }
        }
    }
    if y.len() < 2 {
        return Err(DfiError::InvalidDataset(format!(
            "need at least 2 data rows, found {}",
            y.len()
        )));
    }
    let x = Rows::new(data, feature_names.len())?;
    Dataset::new(feature_names, x, y)
}

/// Mean and sample standard deviation (n - 1 denominator).
pub(crate) fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    let sd = if n > 1.0 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, sd)
}

/// Centers and scales every feature column and the response to sample mean 0
/// and sample standard deviation 1.
pub fn standardize(ds: &Dataset) -> Result<(Dataset, StandardizationInfo)> {
    let d = ds.d();
    let n = ds.n();
    if n < 2 {
        return Err(DfiError::InvalidDataset(
            "standardization needs at least 2 rows".into(),
        ));
    }
    let mut means = Vec::with_capacity(d + 1);
    let mut scales = Vec::with_capacity(d + 1);
    for j in 0..d {
        let (m, s) = mean_sd(ds.x.iter_rows().map(move |r| r[j]));
        if !(s > 0.0) {
            return Err(DfiError::ZeroVariance(ds.feature_names[j].clone()));
        }
        means.push(m);
        scales.push(s);
    }
    let (my, sy) = mean_sd(ds.y.iter().copied());
    if !(sy > 0.0) {
        return Err(DfiError::ZeroVariance("response".into()));
    }
    means.push(my);
    scales.push(sy);

    let mut x = ds.x.clone();
    for i in 0..n {
        for (j, v) in x.row_mut(i).iter_mut().enumerate() {
            *v = (*v - means[j]) / scales[j];
        }
    }
    let y = ds.y.iter().map(|v| (v - my) / sy).collect();
    let out = Dataset {
        feature_names: ds.feature_names.clone(),
        x,
        y,
    };
    Ok((out, StandardizationInfo { means, scales }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, target: &str) -> Result<Dataset> {
        read_csv(text.as_bytes(), target)
    }

    #[test]
    fn parses_three_row_csv() {
        let ds = parse("a,b,y\n1,2,3\n4,5,6\n7,8,9", "y").unwrap();
        assert_eq!(ds.d(), 2);
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.y(), &[3.0, 6.0, 9.0]);
        assert_eq!(ds.feature_names(), &["a", "b"]);
        assert_eq!(ds.x().row(1), &[4.0, 5.0]);
    }

    #[test]
    fn target_in_middle_keeps_column_order() {
        let ds = parse("a,y,b\n1,2,3\n4,5,6", "y").unwrap();
        assert_eq!(ds.feature_names(), &["a", "b"]);
        assert_eq!(ds.x().row(0), &[1.0, 3.0]);
        assert_eq!(ds.y(), &[2.0, 5.0]);
    }

    #[test]
    fn missing_target_is_reported() {
        let err = parse("a,b,y\n1,2,3\n4,5,6\n7,8,9", "z").unwrap_err();
        assert!(err.to_string().contains("target column not found"));
    }

    #[test]
    fn nan_cell_names_row_and_column() {
        let err = parse("a,b,y\n1,NaN,3\n4,5,6", "y").unwrap_err();
        match err {
            DfiError::InvalidCell { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn empty_and_text_cells_rejected() {
        assert!(matches!(
            parse("a,y\n1,2\n,3", "y"),
            Err(DfiError::InvalidCell { row: 2, .. })
        ));
        assert!(matches!(
            parse("a,y\nfoo,2\n1,3", "y"),
            Err(DfiError::InvalidCell { row: 1, .. })
        ));
    }

    #[test]
    fn single_row_rejected() {
        assert!(parse("a,y\n1,2", "y").is_err());
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_csv("/nonexistent/file.csv", "y"),
            Err(DfiError::Io { .. })
        ));
    }

    #[test]
    fn duplicate_names_rejected() {
        let x = Rows::new(vec![1.0, 2.0], 2).unwrap();
        assert!(Dataset::new(vec!["a".into(), "a".into()], x, vec![0.0]).is_err());
    }

    #[test]
    fn standardize_simple_column() {
        let ds = parse("a,y\n1,10\n2,20\n3,30", "y").unwrap();
        let (s, info) = standardize(&ds).unwrap();
        assert_eq!(s.x().column(0), vec![-1.0, 0.0, 1.0]);
        assert_eq!(s.y(), &[-1.0, 0.0, 1.0]);
        assert_eq!(info.means, vec![2.0, 20.0]);
        assert_eq!(info.scales, vec![1.0, 10.0]);
    }

    #[test]
    fn standardize_is_idempotent() {
        let ds = parse("a,b,y\n1,7,3\n4,-2,6\n7,8,1\n2,2,2", "y").unwrap();
        let (once, _) = standardize(&ds).unwrap();
        let (twice, info) = standardize(&once).unwrap();
        for (a, b) in once.x().as_slice().iter().zip(twice.x().as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in once.y().iter().zip(twice.y()) {
            assert!((a - b).abs() < 1e-12);
        }
        for s in info.scales {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_column_is_an_error() {
        let ds = parse("a,c,y\n1,5,1\n2,5,2\n3,5,4", "y").unwrap();
        match standardize(&ds) {
            Err(DfiError::ZeroVariance(name)) => assert_eq!(name, "c"),
            other => panic!("expected zero-variance error, got {other:?}"),
        }
    }

    #[test]
    fn drop_and_select() {
        let r = Rows::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(r.drop_column(1).row(1), &[4.0, 6.0]);
        assert_eq!(r.select(&[1, 0]).row(0), &[4.0, 5.0, 6.0]);
    }
}
