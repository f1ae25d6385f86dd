//! Meta-analysis over several contingency tables of one shape: cell-wise
//! pooling, sample-size-weighted information pooling, and combined
//! p-values.

use crate::combinat::LogReal;
use crate::equivalence::{check_certificate_log, BoundCertificate};
use crate::error::{Error, Result};
use crate::exact_tests::{fisher_exact, FisherConfig, PfMethod};
use crate::infomeasure::{mutual_information, pvalue_from_mi, Nats};
use crate::tables::{normalize, CountTable, RelTable};

/// An ordered collection of same-shape study tables.
#[derive(Debug, Clone)]
pub struct StudySet {
    studies: Vec<CountTable>,
}

impl StudySet {
    pub fn new(studies: Vec<CountTable>) -> Result<Self> {
        let first = studies.first().ok_or(Error::EmptyStudySet)?;
        let (rows, cols) = (first.rows(), first.cols());
        for (index, s) in studies.iter().enumerate() {
            if s.rows() != rows || s.cols() != cols {
                return Err(Error::StudyShapeMismatch {
                    index,
                    rows,
                    cols,
                    got_rows: s.rows(),
                    got_cols: s.cols(),
                });
            }
        }
        Ok(StudySet { studies })
    }

    pub fn studies(&self) -> &[CountTable] {
        &self.studies
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.studies[0].rows(), self.studies[0].cols())
    }

    /// Per-study sample sizes N_h.
    pub fn sample_sizes(&self) -> Vec<u64> {
        self.studies.iter().map(CountTable::sample_size).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolMethod {
    Cellwise,
    Weighted,
}

/// The pooled table, its information, and its exact p-value.
#[derive(Debug, Clone)]
pub struct PooledResult {
    pub pooled_table: CountTable,
    pub pooled_rel: RelTable,
    pub total_sample_size: u64,
    pub mi_s: Nats,
    pub p_s: f64,
    pub log_p_s: LogReal,
    pub p_method: PfMethod,
    pub p_stderr: f64,
    /// Band check relating -ln(p_s) to N_s * mi_s on the pooled table.
    pub certificate: BoundCertificate,
    pub method: PoolMethod,
}

/// Sums the studies cell by cell and tests the pooled table.
pub fn pool_cellwise(set: &StudySet, cfg: &FisherConfig) -> Result<PooledResult> {
    let (rows, cols) = set.shape();
    let mut cells = vec![0u64; rows * cols];
    for study in set.studies() {
        for (slot, &x) in cells.iter_mut().zip(study.cells()) {
            *slot += x;
        }
    }
    let pooled_table = CountTable::new(rows, cols, cells)?;
    let pooled_rel = normalize(&pooled_table);
    let mi_s = mutual_information(&pooled_rel);
    let fisher = fisher_exact(&pooled_table, cfg)?;
    let certificate = check_certificate_log(&pooled_table, fisher.log_p_f, fisher.method);
    Ok(PooledResult {
        total_sample_size: pooled_table.sample_size(),
        pooled_table,
        pooled_rel,
        mi_s,
        p_s: fisher.p_f,
        log_p_s: fisher.log_p_f,
        p_method: fisher.method,
        p_stderr: fisher.stderr,
        certificate,
        method: PoolMethod::Cellwise,
    })
}

/// Pools pre-computed (N_h, MI_h) pairs by sample-size weighting:
/// MI_s = sum N_h MI_h / N_s.
pub fn pool_weighted(pairs: &[(u64, Nats)]) -> Result<(u64, Nats)> {
    if pairs.is_empty() {
        return Err(Error::EmptyPoolInput);
    }
    let total: u64 = pairs.iter().map(|&(n, _)| n).sum();
    if total == 0 {
        return Err(Error::EmptyPoolInput);
    }
    let weighted: f64 = pairs
        .iter()
        .map(|&(n, mi)| n as f64 * mi.value())
        .sum::<f64>()
        / total as f64;
    Ok((total, Nats::new(weighted)))
}

/// Result of multiplying per-study p-values in log space.
#[derive(Debug, Clone, Copy)]
pub struct CombinedPvalues {
    pub p_s: f64,
    pub log_p_s: LogReal,
    pub mi_s: Nats,
    pub total_sample_size: u64,
}

/// p_s = prod p_h (in log space) and mi_s = -ln(p_s) / sum N_h.
pub fn combine_pvalues(p_values: &[f64], sample_sizes: &[u64]) -> Result<CombinedPvalues> {
    if p_values.is_empty() {
        return Err(Error::EmptyPoolInput);
    }
    if p_values.len() != sample_sizes.len() {
        return Err(Error::ListLengthMismatch {
            p_len: p_values.len(),
            n_len: sample_sizes.len(),
        });
    }
    let mut log_p_s = 0.0f64;
    for &p in p_values {
        if p.is_nan() || p <= 0.0 || p > 1.0 {
            return Err(Error::InvalidProbability { value: p });
        }
        log_p_s += p.ln();
    }
    log_p_s = log_p_s.min(0.0);
    let total: u64 = sample_sizes.iter().sum();
    if total == 0 {
        return Err(Error::EmptyPoolInput);
    }
    Ok(CombinedPvalues {
        p_s: log_p_s.exp(),
        log_p_s: LogReal::new(log_p_s),
        mi_s: Nats::new(-log_p_s / total as f64),
        total_sample_size: total,
    })
}

/// p_h = exp(-N_h * MI_h) for one study.
pub fn per_study_pvalue(mi_h: Nats, n_h: u64) -> f64 {
    pvalue_from_mi(mi_h, n_h)
}
