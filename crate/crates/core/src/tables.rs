//! The contingency-table data model: integer counts, relative frequencies,
//! CSV ingestion, and conversion between the two forms.

use crate::error::{Error, Result, TableParseError};

/// An m x n table of observed nonnegative integer frequencies.
///
/// Margins and the sample size are always recomputed from the cells rather
/// than stored. Tables are immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    rows: usize,
    cols: usize,
    cells: Vec<u64>,
}

impl CountTable {
    /// Builds a table from row-major cells. The total count must be >= 1.
    pub fn new(rows: usize, cols: usize, cells: Vec<u64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyTable);
        }
        if cells.len() != rows * cols {
            return Err(Error::CellCountMismatch {
                rows,
                cols,
                expected: rows * cols,
                got: cells.len(),
            });
        }
        if cells.iter().all(|&x| x == 0) {
            return Err(Error::ZeroSampleSize);
        }
        Ok(CountTable { rows, cols, cells })
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        let cols = rows[0].len();
        for r in rows {
            if r.len() != cols {
                return Err(Error::CellCountMismatch {
                    rows: rows.len(),
                    cols,
                    expected: rows.len() * cols,
                    got: rows.iter().map(Vec::len).sum(),
                });
            }
        }
        CountTable::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell(&self, i: usize, j: usize) -> u64 {
        self.cells[i * self.cols + j]
    }

    /// Row-major cells.
    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn row_margins(&self) -> Vec<u64> {
        (0..self.rows)
            .map(|i| self.cells[i * self.cols..(i + 1) * self.cols].iter().sum())
            .collect()
    }

    pub fn col_margins(&self) -> Vec<u64> {
        let mut m = vec![0u64; self.cols];
        for i in 0..self.rows {
            for (j, slot) in m.iter_mut().enumerate() {
                *slot += self.cells[i * self.cols + j];
            }
        }
        m
    }

    pub fn sample_size(&self) -> u64 {
        self.cells.iter().sum()
    }

    /// Drops all-zero rows and columns. The result is never empty because
    /// the table holds at least one positive count.
    pub fn without_zero_margins(&self) -> CountTable {
        let rowm = self.row_margins();
        let colm = self.col_margins();
        if rowm.iter().all(|&a| a > 0) && colm.iter().all(|&b| b > 0) {
            return self.clone();
        }
        let keep_rows: Vec<usize> = (0..self.rows).filter(|&i| rowm[i] > 0).collect();
        let keep_cols: Vec<usize> = (0..self.cols).filter(|&j| colm[j] > 0).collect();
        let cells = keep_rows
            .iter()
            .flat_map(|&i| keep_cols.iter().map(move |&j| self.cell(i, j)))
            .collect();
        CountTable::new(keep_rows.len(), keep_cols.len(), cells)
            .expect("reduced table keeps every positive count")
    }

    /// Headerless CSV, one row per line, LF endings, trailing newline.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| self.cell(i, j).to_string())
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// An m x n table of nonnegative relative frequencies summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RelTable {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

/// How far the cell sum of a [`RelTable`] may drift from 1.
pub const REL_SUM_TOLERANCE: f64 = 1e-12;

impl RelTable {
    pub fn new(rows: usize, cols: usize, cells: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyTable);
        }
        if cells.len() != rows * cols {
            return Err(Error::CellCountMismatch {
                rows,
                cols,
                expected: rows * cols,
                got: cells.len(),
            });
        }
        let mut sum = 0.0;
        for &x in &cells {
            if x.is_nan() || x < 0.0 {
                return Err(Error::InvalidRelTable { sum: f64::NAN });
            }
            sum += x;
        }
        if (sum - 1.0).abs() > REL_SUM_TOLERANCE {
            return Err(Error::InvalidRelTable { sum });
        }
        Ok(RelTable { rows, cols, cells })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        let cols = rows[0].len();
        RelTable::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.cols + j]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn row_margins(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.cells[i * self.cols..(i + 1) * self.cols].iter().sum())
            .collect()
    }

    pub fn col_margins(&self) -> Vec<f64> {
        let mut m = vec![0.0f64; self.cols];
        for i in 0..self.rows {
            for (j, slot) in m.iter_mut().enumerate() {
                *slot += self.cells[i * self.cols + j];
            }
        }
        m
    }
}

/// Divides every cell by the sample size.
pub fn normalize(t: &CountTable) -> RelTable {
    let n = t.sample_size() as f64;
    let cells = t.cells().iter().map(|&x| x as f64 / n).collect();
    RelTable {
        rows: t.rows(),
        cols: t.cols(),
        cells,
    }
}

/// Scales a relative table back to integer counts totalling exactly `n`.
///
/// Each cell starts at round(n * X); any surplus or deficit is settled by
/// the largest-remainder rule with row-major index tie-breaking.
pub fn to_counts(r: &RelTable, n: u64) -> CountTable {
    assert!(n >= 1, "to_counts needs a positive sample size");
    let raw: Vec<f64> = r.cells().iter().map(|&x| x * n as f64).collect();
    let mut cells: Vec<u64> = raw.iter().map(|&v| v.round() as u64).collect();
    let total: u64 = cells.iter().sum();

    if total != n {
        // remainder = raw - round(raw): most positive means the cell lost
        // the most to rounding and is first in line to gain a unit; most
        // negative is first to give one back.
        let mut order: Vec<usize> = (0..cells.len()).collect();
        if total < n {
            order.sort_by(|&a, &b| {
                let fa = raw[a] - raw[a].round();
                let fb = raw[b] - raw[b].round();
                fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
            });
            let mut need = n - total;
            let mut idx = 0usize;
            while need > 0 {
                cells[order[idx % order.len()]] += 1;
                need -= 1;
                idx += 1;
            }
        } else {
            order.sort_by(|&a, &b| {
                let fa = raw[a] - raw[a].round();
                let fb = raw[b] - raw[b].round();
                fa.partial_cmp(&fb).unwrap().then(a.cmp(&b))
            });
            let mut excess = total - n;
            let mut idx = 0usize;
            while excess > 0 {
                let c = order[idx % order.len()];
                if cells[c] > 0 {
                    cells[c] -= 1;
                    excess -= 1;
                }
                idx += 1;
            }
        }
    }

    CountTable::new(r.rows(), r.cols(), cells).expect("apportioned cells form a valid table")
}

/// Parses the headerless CSV table format: rows of comma-separated
/// nonnegative decimal integers, LF or CRLF endings, optional trailing
/// newline.
pub fn parse_table(text: &str) -> std::result::Result<CountTable, TableParseError> {
    let mut lines: Vec<&str> = text.split('\n').collect();
    if let Some(last) = lines.last() {
        if last.is_empty() {
            lines.pop();
        }
    }
    if lines.is_empty() {
        return Err(TableParseError::Empty);
    }

    let mut cells: Vec<u64> = Vec::new();
    let mut width: Option<usize> = None;
    for (i, raw) in lines.iter().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let tokens: Vec<&str> = line.split(',').collect();
        match width {
            None => width = Some(tokens.len()),
            Some(w) if w != tokens.len() => {
                return Err(TableParseError::RaggedRow {
                    line: i + 1,
                    expected: w,
                    found: tokens.len(),
                })
            }
            Some(_) => {}
        }
        for (j, token) in tokens.iter().enumerate() {
            match token.parse::<u64>() {
                Ok(v) => cells.push(v),
                Err(_) => {
                    let looks_negative = token.len() > 1
                        && token.starts_with('-')
                        && token[1..].chars().all(|c| c.is_ascii_digit());
                    return Err(if looks_negative {
                        TableParseError::Negative {
                            line: i + 1,
                            col: j + 1,
                        }
                    } else {
                        TableParseError::InvalidInteger {
                            line: i + 1,
                            col: j + 1,
                            token: token.to_string(),
                        }
                    });
                }
            }
        }
    }

    let rows = lines.len();
    let cols = width.unwrap_or(0);
    match CountTable::new(rows, cols, cells) {
        Ok(t) => Ok(t),
        Err(Error::ZeroSampleSize) => Err(TableParseError::AllZero),
        Err(_) => Err(TableParseError::Empty),
    }
}
