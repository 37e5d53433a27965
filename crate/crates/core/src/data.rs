//! Regression datasets with optional left censoring, and their CSV form.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Response, design and (optionally) censoring information.
///
/// A censored row `i` is only known to satisfy `y_i <= kappa_i`; on input
/// `y_i` must equal `kappa_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    y: DVector<f64>,
    x: DMatrix<f64>,
    columns: Vec<String>,
    censored: Option<Vec<bool>>,
    kappa: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, x: DMatrix<f64>, columns: Vec<String>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::invalid(format!("design has {} rows but response has {}", x.nrows(), y.len())));
        }
        if columns.len() != x.ncols() {
            return Err(Error::invalid(format!("{} column names for {} covariates", columns.len(), x.ncols())));
        }
        if !y.is_empty() && y.len() < x.ncols() {
            return Err(Error::invalid(format!("need n >= q, got n = {} and q = {}", y.len(), x.ncols())));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("response row {} is not finite", i + 1)));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("design matrix has non-finite entries"));
        }
        Ok(Dataset { y: DVector::from_vec(y), x, columns, censored: None, kappa: None })
    }

    /// Build from row-major covariate rows.
    pub fn from_rows(y: Vec<f64>, rows: &[Vec<f64>], columns: Vec<String>) -> Result<Self> {
        let q = columns.len();
        if let Some(i) = rows.iter().position(|r| r.len() != q) {
            return Err(Error::invalid(format!("design row {} has {} entries, expected {q}", i + 1, rows[i].len())));
        }
        let x = DMatrix::from_fn(rows.len(), q, |i, j| rows[i][j]);
        Dataset::new(y, x, columns)
    }

    /// Attach left-censoring flags and limits.
    pub fn with_censoring(mut self, censored: Vec<bool>, kappa: Vec<f64>) -> Result<Self> {
        let n = self.n();
        if censored.len() != n || kappa.len() != n {
            return Err(Error::invalid(format!(
                "censoring vectors must have length {n} (got {} flags, {} limits)",
                censored.len(),
                kappa.len()
            )));
        }
        for i in 0..n {
            if censored[i] && self.y[i] != kappa[i] {
                return Err(Error::data(format!(
                    "row {}: censored response {} differs from its limit {}",
                    i + 1,
                    self.y[i],
                    kappa[i]
                )));
            }
        }
        if censored.iter().any(|&c| c) {
            self.censored = Some(censored);
            self.kappa = Some(kappa);
        }
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn q(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn censored(&self) -> Option<&[bool]> {
        self.censored.as_deref()
    }

    pub fn kappa(&self) -> Option<&[f64]> {
        self.kappa.as_deref()
    }

    pub fn is_censored(&self, i: usize) -> bool {
        self.censored.as_ref().is_some_and(|c| c[i])
    }

    pub fn n_censored(&self) -> usize {
        self.censored.as_ref().map_or(0, |c| c.iter().filter(|&&v| v).count())
    }

    /// Indices of censored rows.
    pub fn censored_rows(&self) -> Vec<usize> {
        match &self.censored {
            None => Vec::new(),
            Some(c) => (0..c.len()).filter(|&i| c[i]).collect(),
        }
    }

    /// Whether `X` has full column rank (relative singular-value threshold).
    pub fn has_full_rank(&self) -> bool {
        if self.n() == 0 || self.q() == 0 {
            return true;
        }
        let sv = self.x.clone().singular_values();
        let max = sv.max();
        max > 0.0 && sv.min() > max * 1e-10 * self.n().max(self.q()) as f64
    }

    /// Read a headered numeric CSV.
    ///
    /// `covariates = None` takes every column except the response and the
    /// censoring columns. With `add_intercept` a leading column of ones
    /// named `intercept` is prepended.
    pub fn read_csv(path: &Path, spec: &CsvSpec) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let find = |name: &str| {
            header.iter().position(|h| h == name).ok_or_else(|| {
                Error::invalid(format!("column '{name}' not found; available columns: {}", header.join(", ")))
            })
        };
        let y_col = find(&spec.response)?;
        let censor_col = spec.censor_column.as_deref().map(find).transpose()?;
        let limit_col = spec.limit_column.as_deref().map(find).transpose()?;
        if censor_col.is_some() != limit_col.is_some() {
            return Err(Error::invalid("censoring needs both a flag column and a limit column"));
        }
        let cov_cols: Vec<usize> = match &spec.covariates {
            Some(names) => names.iter().map(|n| find(n)).collect::<Result<_>>()?,
            None => (0..header.len())
                .filter(|&j| j != y_col && Some(j) != censor_col && Some(j) != limit_col)
                .collect(),
        };
        let mut names: Vec<String> = cov_cols.iter().map(|&j| header[j].clone()).collect();
        if spec.add_intercept {
            names.insert(0, "intercept".to_string());
        }

        let mut y = Vec::new();
        let mut rows = Vec::new();
        let mut flags = Vec::new();
        let mut limits = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record?;
            let cell = |j: usize| -> Result<f64> {
                let raw = record.get(j).unwrap_or("");
                raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    Error::data(format!("row {}, column '{}': cannot parse '{raw}' as a number", r + 1, header[j]))
                })
            };
            y.push(cell(y_col)?);
            let mut row = Vec::with_capacity(names.len());
            if spec.add_intercept {
                row.push(1.0);
            }
            for &j in &cov_cols {
                row.push(cell(j)?);
            }
            rows.push(row);
            if let (Some(cj), Some(lj)) = (censor_col, limit_col) {
                let flag = cell(cj)?;
                if flag != 0.0 && flag != 1.0 {
                    return Err(Error::data(format!("row {}: censoring flag must be 0 or 1, got {flag}", r + 1)));
                }
                flags.push(flag == 1.0);
                limits.push(cell(lj)?);
            }
        }
        let data = Dataset::from_rows(y, &rows, names)?;
        if censor_col.is_some() {
            data.with_censoring(flags, limits)
        } else {
            Ok(data)
        }
    }

    /// Write `y`, the covariates and, when present, `censored,kappa` columns.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["y".to_string()];
        header.extend(self.columns.iter().cloned());
        if self.censored.is_some() {
            header.push("censored".into());
            header.push("kappa".into());
        }
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec = vec![format!("{:?}", self.y[i])];
            rec.extend((0..self.q()).map(|j| format!("{:?}", self.x[(i, j)])));
            if let (Some(c), Some(k)) = (&self.censored, &self.kappa) {
                rec.push(if c[i] { "1".into() } else { "0".into() });
                rec.push(format!("{:?}", k[i]));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Column mapping for [`Dataset::read_csv`].
#[derive(Clone, Debug, Default)]
pub struct CsvSpec {
    pub response: String,
    pub covariates: Option<Vec<String>>,
    pub censor_column: Option<String>,
    pub limit_column: Option<String>,
    pub add_intercept: bool,
}

impl CsvSpec {
    pub fn response(name: impl Into<String>) -> Self {
        CsvSpec { response: name.into(), ..Default::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::from_rows(
            vec![1.0, 2.0, 0.0],
            &[vec![1.0, 0.5], vec![1.0, -1.0], vec![1.0, 2.0]],
            vec!["intercept".into(), "x".into()],
        )
        .unwrap()
    }

    #[test]
    fn shape_and_censoring() {
        let d = toy().with_censoring(vec![false, false, true], vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!((d.n(), d.q()), (3, 2));
        assert_eq!(d.censored_rows(), vec![2]);
        assert!(toy().with_censoring(vec![true, false, false], vec![0.0; 3]).is_err());
        let none = toy().with_censoring(vec![false; 3], vec![0.0; 3]).unwrap();
        assert!(none.censored().is_none());
    }

    #[test]
    fn rank_check() {
        assert!(toy().has_full_rank());
        let d = Dataset::from_rows(
            vec![1.0, 2.0, 3.0],
            &[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(!d.has_full_rank());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let d = toy().with_censoring(vec![false, false, true], vec![0.0, 0.0, 0.0]).unwrap();
        d.write_csv(&path).unwrap();
        let spec = CsvSpec {
            response: "y".into(),
            covariates: None,
            censor_column: Some("censored".into()),
            limit_column: Some("kappa".into()),
            add_intercept: false,
        };
        assert_eq!(Dataset::read_csv(&path, &spec).unwrap(), d);
    }

    #[test]
    fn csv_errors_name_the_problem() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "y,a\n1,2\n3,oops\n").unwrap();
        let err = Dataset::read_csv(&path, &CsvSpec::response("y")).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("'a'"), "{err}");
        let err = Dataset::read_csv(&path, &CsvSpec::response("wage")).unwrap_err().to_string();
        assert!(err.contains("wage") && err.contains("available"), "{err}");
    }
}
