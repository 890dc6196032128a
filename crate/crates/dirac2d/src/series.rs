//! Counting-series container and its CSV/JSON codecs.
//!
//! A [`CountingSeries`] pairs a grid of spectral parameters with integer
//! eigenvalue counts and carries the model parameters that produced it.
//! The CSV layout is one row per grid point with the metadata repeated in
//! every row, header exactly
//! `lambda,count,operator,L,m,gamma,Gamma2,Gamma3`.
//! Floats are written in shortest round-trip form, so write followed by
//! read reproduces the series bit for bit.  Lines starting with `#` are
//! treated as comments on input, which keeps the files usable as gnuplot
//! data files.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which operator a series was computed from.
///
/// `Ssf` marks a difference of counting functions rather than a single
/// operator's counting function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorTag {
    #[serde(rename = "H0")]
    H0,
    #[serde(rename = "Hplus")]
    HPlus,
    #[serde(rename = "Hminus")]
    HMinus,
    #[serde(rename = "ssf")]
    Ssf,
}

impl OperatorTag {
    pub fn as_str(self) -> &'static str {
        match self {
            OperatorTag::H0 => "H0",
            OperatorTag::HPlus => "Hplus",
            OperatorTag::HMinus => "Hminus",
            OperatorTag::Ssf => "ssf",
        }
    }
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperatorTag {
    type Err = SeriesError;

    fn from_str(s: &str) -> Result<Self, SeriesError> {
        match s {
            "H0" => Ok(OperatorTag::H0),
            "Hplus" => Ok(OperatorTag::HPlus),
            "Hminus" => Ok(OperatorTag::HMinus),
            "ssf" => Ok(OperatorTag::Ssf),
            other => Err(SeriesError::UnknownOperator(other.to_string())),
        }
    }
}

/// Model parameters attached to a counting series.
///
/// `l = 0` marks a series that did not come from a lattice box (synthetic
/// data, for instance).  The potential fields are `None` for a free
/// operator; they serialize as empty CSV cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub operator: OperatorTag,
    pub l: usize,
    pub m: f64,
    pub gamma: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma3: Option<f64>,
}

/// Eigenvalue counts over a grid of spectral parameters.
///
/// `lambda_grid` is strictly monotone and matches `counts` in length.
/// Counts are signed so the same container holds spectral-shift
/// differences, which can be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingSeries {
    pub lambda_grid: Vec<f64>,
    pub counts: Vec<i64>,
    pub meta: SeriesMeta,
}

/// Least-squares power-law fit of a counting series near a reference point.
///
/// The model is `N = constant * |lambda - reference|^(-exponent)`, fitted in
/// log-log coordinates.  `window` is the (min, max) of `|lambda - reference|`
/// over the points that entered the fit and `residual` is the root mean
/// square log-residual.  `validity_floor` is the finite-size cutoff that was
/// applied before fitting (points with `|lambda - reference|` below it are
/// discarded); it is zero for series that did not come from a lattice box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub constant: f64,
    pub residual: f64,
    pub window: (f64, f64),
    pub points_used: usize,
    pub validity_floor: f64,
}

pub const CSV_HEADER: &str = "lambda,count,operator,L,m,gamma,Gamma2,Gamma3";

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("series has {lambda} grid points but {counts} counts")]
    LengthMismatch { lambda: usize, counts: usize },
    #[error("lambda grid entry {index} is not finite")]
    NonFiniteLambda { index: usize },
    #[error("lambda grid is not strictly monotone at entry {index}")]
    NonMonotoneGrid { index: usize },
    #[error("unknown operator tag \"{0}\"")]
    UnknownOperator(String),
    #[error("csv line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("csv line {line}: metadata differs from the first data row")]
    InconsistentMeta { line: usize },
    #[error("csv contains a header but no data rows")]
    NoDataRows,
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CountingSeries {
    pub fn new(
        lambda_grid: Vec<f64>,
        counts: Vec<i64>,
        meta: SeriesMeta,
    ) -> Result<Self, SeriesError> {
        if lambda_grid.len() != counts.len() {
            return Err(SeriesError::LengthMismatch {
                lambda: lambda_grid.len(),
                counts: counts.len(),
            });
        }
        if let Some(index) = lambda_grid.iter().position(|x| !x.is_finite()) {
            return Err(SeriesError::NonFiniteLambda { index });
        }
        if lambda_grid.len() >= 2 {
            let increasing = lambda_grid[1] > lambda_grid[0];
            for (i, pair) in lambda_grid.windows(2).enumerate() {
                let ok = if increasing { pair[1] > pair[0] } else { pair[1] < pair[0] };
                if !ok {
                    return Err(SeriesError::NonMonotoneGrid { index: i + 1 });
                }
            }
        }
        Ok(CountingSeries {
            lambda_grid,
            counts,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.lambda_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_grid.is_empty()
    }

    /// Writes the series as CSV.  An empty series produces only the header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", CSV_HEADER)?;
        for (lam, n) in self.lambda_grid.iter().zip(&self.counts) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                lam,
                n,
                self.meta.operator,
                self.meta.l,
                self.meta.m,
                opt_cell(self.meta.gamma),
                opt_cell(self.meta.gamma2),
                opt_cell(self.meta.gamma3),
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Reads a series written by [`write_csv`](Self::write_csv).
    ///
    /// Comment lines (`#` prefix) and blank lines are skipped.  The header
    /// row is required.  Every data row must carry the same metadata.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, SeriesError> {
        let mut lambda_grid = Vec::new();
        let mut counts = Vec::new();
        let mut meta: Option<SeriesMeta> = None;
        let mut saw_header = false;
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if !saw_header {
                if trimmed != CSV_HEADER {
                    return Err(SeriesError::Parse {
                        line: idx + 1,
                        message: format!("expected header \"{}\"", CSV_HEADER),
                    });
                }
                saw_header = true;
                continue;
            }
            let (lam, n, row_meta) = parse_row(trimmed, idx + 1)?;
            match &meta {
                None => meta = Some(row_meta),
                Some(first) if *first != row_meta => {
                    return Err(SeriesError::InconsistentMeta { line: idx + 1 });
                }
                Some(_) => {}
            }
            lambda_grid.push(lam);
            counts.push(n);
        }
        if !saw_header {
            return Err(SeriesError::Parse {
                line: 0,
                message: "missing header row".to_string(),
            });
        }
        match meta {
            Some(meta) => CountingSeries::new(lambda_grid, counts, meta),
            None => Err(SeriesError::NoDataRows),
        }
    }

    pub fn from_csv_str(s: &str) -> Result<Self, SeriesError> {
        Self::read_csv(s.as_bytes())
    }
}

fn opt_cell(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{}", v),
        None => String::new(),
    }
}

fn parse_row(row: &str, line: usize) -> Result<(f64, i64, SeriesMeta), SeriesError> {
    let fields: Vec<&str> = row.split(',').collect();
    if fields.len() != 8 {
        return Err(SeriesError::Parse {
            line,
            message: format!("expected 8 fields, got {}", fields.len()),
        });
    }
    let bad = |what: &str| SeriesError::Parse {
        line,
        message: format!("invalid {} field \"{}\"", what, row),
    };
    let lam: f64 = fields[0].parse().map_err(|_| bad("lambda"))?;
    let n: i64 = fields[1].parse().map_err(|_| bad("count"))?;
    let operator = fields[2].parse::<OperatorTag>()?;
    let l: usize = fields[3].parse().map_err(|_| bad("L"))?;
    let m: f64 = fields[4].parse().map_err(|_| bad("m"))?;
    let opt = |s: &str, what: &str| -> Result<Option<f64>, SeriesError> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| bad(what))
        }
    };
    let gamma = opt(fields[5], "gamma")?;
    let gamma2 = opt(fields[6], "Gamma2")?;
    let gamma3 = opt(fields[7], "Gamma3")?;
    Ok((
        lam,
        n,
        SeriesMeta {
            operator,
            l,
            m,
            gamma,
            gamma2,
            gamma3,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_meta() -> SeriesMeta {
        SeriesMeta {
            operator: OperatorTag::HPlus,
            l: 64,
            m: 1.0,
            gamma: Some(4.0),
            gamma2: Some(1.0),
            gamma3: Some(1.0),
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        // Awkward floats on purpose: shortest round-trip formatting must
        // reproduce them exactly.
        let lambda = vec![-1.0 + 2f64.powi(-30), -0.929_289_321_881_345_2, -0.9, 0.1 / 3.0];
        let counts = vec![120, 7, 3, -4];
        let series = CountingSeries::new(lambda.clone(), counts.clone(), sample_meta()).unwrap();
        let text = series.to_csv_string();
        let back = CountingSeries::from_csv_str(&text).unwrap();
        assert_eq!(back, series);
        assert_eq!(back.lambda_grid[1].to_bits(), lambda[1].to_bits());
    }

    #[test]
    fn csv_header_is_exact_and_empty_series_is_header_only() {
        let series = CountingSeries::new(vec![], vec![], sample_meta()).unwrap();
        assert_eq!(series.to_csv_string(), format!("{}\n", CSV_HEADER));
    }

    #[test]
    fn comment_lines_and_blanks_are_skipped() {
        let text = format!(
            "# produced for gnuplot\n\n{}\n# mid-file note\n-0.5,2,H0,16,1,,,\n",
            CSV_HEADER
        );
        let series = CountingSeries::from_csv_str(&text).unwrap();
        assert_eq!(series.len(), 1);
        assert_eq!(series.counts[0], 2);
        assert_eq!(series.meta.operator, OperatorTag::H0);
        assert_eq!(series.meta.gamma, None);
    }

    #[test]
    fn free_operator_fields_serialize_as_empty_cells() {
        let meta = SeriesMeta {
            operator: OperatorTag::H0,
            l: 8,
            m: 0.0,
            gamma: None,
            gamma2: None,
            gamma3: None,
        };
        let series = CountingSeries::new(vec![0.25], vec![5], meta).unwrap();
        let text = series.to_csv_string();
        assert!(text.lines().nth(1).unwrap().ends_with(",H0,8,0,,,"));
        let back = CountingSeries::from_csv_str(&text).unwrap();
        assert_eq!(back, series);
    }

    #[test]
    fn mismatched_lengths_and_nonfinite_grids_are_rejected() {
        let err = CountingSeries::new(vec![0.1], vec![], sample_meta()).unwrap_err();
        assert!(matches!(
            err,
            SeriesError::LengthMismatch { lambda: 1, counts: 0 }
        ));
        let err = CountingSeries::new(vec![0.1, f64::NAN], vec![1, 2], sample_meta()).unwrap_err();
        assert!(matches!(err, SeriesError::NonFiniteLambda { index: 1 }));
        let err =
            CountingSeries::new(vec![-0.5, -0.7, -0.7], vec![1, 2, 3], sample_meta()).unwrap_err();
        assert!(matches!(err, SeriesError::NonMonotoneGrid { index: 2 }));
    }

    #[test]
    fn inconsistent_metadata_rows_are_rejected() {
        let text = format!(
            "{}\n-0.5,2,H0,16,1,,,\n-0.4,3,Hplus,16,1,,,\n",
            CSV_HEADER
        );
        let err = CountingSeries::from_csv_str(&text).unwrap_err();
        assert!(matches!(err, SeriesError::InconsistentMeta { line: 3 }));
    }

    #[test]
    fn header_only_input_reports_no_data() {
        let err = CountingSeries::from_csv_str(&format!("{}\n", CSV_HEADER)).unwrap_err();
        assert!(matches!(err, SeriesError::NoDataRows));
        let err = CountingSeries::from_csv_str("lambda,count\n").unwrap_err();
        assert!(matches!(err, SeriesError::Parse { line: 1, .. }));
    }

    #[test]
    fn json_mirrors_the_csv_fields() {
        let series = CountingSeries::new(vec![-0.5], vec![9], sample_meta()).unwrap();
        let json = serde_json::to_string(&series).unwrap();
        assert!(json.contains("\"operator\":\"Hplus\""));
        assert!(json.contains("\"gamma\":4.0"));
        let back: CountingSeries = serde_json::from_str(&json).unwrap();
        assert_eq!(back, series);
    }
}
