//! Shannon entropies, mutual information, and the exact conversions
//! between information and tail probability under the maximum-entropy
//! model.
//!
//! All quantities are in nats; the conversions `p = exp(-N * MI)` and
//! `MI = -ln(p) / N` only hold in base e.

use crate::combinat::xlogx;
use crate::error::{Error, Result};
use crate::tables::RelTable;

/// Information in natural-log units. Always finite and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Nats(f64);

impl Nats {
    pub fn new(value: f64) -> Self {
        assert!(
            value.is_finite() && value >= 0.0,
            "information must be finite and nonnegative, got {value}"
        );
        Nats(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A uniform distribution described only by its number of states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformModel {
    pub state_count: u64,
}

// Floating summation can dip infinitesimally below zero at independence;
// anything in (-1e-12, 0) is treated as exact zero.
const NEGATIVE_CLAMP: f64 = -1e-12;

fn clamp_information(value: f64) -> f64 {
    if value < 0.0 {
        debug_assert!(value > -1e-9, "information fell to {value}");
        0.0
    } else {
        value
    }
}

/// Shannon entropy of a probability distribution, -sum p ln p.
///
/// Entries must be nonnegative and sum to 1 within 1e-9; zero entries
/// contribute nothing.
pub fn entropy(dist: &[f64]) -> Result<Nats> {
    let mut sum = 0.0;
    for &p in dist {
        if p.is_nan() || p < 0.0 {
            return Err(Error::InvalidDistribution {
                reason: format!("negative or NaN entry {p}"),
            });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution {
            reason: format!("entries sum to {sum}, not 1"),
        });
    }
    let h = -dist.iter().map(|&p| xlogx(p)).sum::<f64>();
    Ok(Nats(clamp_information(h)))
}

/// Entropy of a uniform distribution: ln of the state count.
pub fn entropy_uniform(u: UniformModel) -> Nats {
    assert!(u.state_count >= 1, "a uniform model needs at least one state");
    Nats((u.state_count as f64).ln())
}

/// Plug-in mutual information of a joint relative-frequency table,
/// sum over cells of X ln(X / (row * col)).
///
/// Cells, rows, or columns with zero mass contribute nothing, so a table
/// with degenerate margins yields the MI of its effective subtable.
pub fn mutual_information(r: &RelTable) -> Nats {
    let rowm = r.row_margins();
    let colm = r.col_margins();
    let mut mi = 0.0;
    for (i, &rm) in rowm.iter().enumerate() {
        for (j, &cm) in colm.iter().enumerate() {
            let x = r.cell(i, j);
            if x > 0.0 {
                mi += x * (x / (rm * cm)).ln();
            }
        }
    }
    if mi < 0.0 && mi > NEGATIVE_CLAMP {
        mi = 0.0;
    }
    Nats(clamp_information(mi))
}

/// Tail probability of observing total information N * mi under the
/// maximum-entropy model: exp(-N * mi). With N = 1 this is the
/// single-observation probability of exchanging `mi` nats.
pub fn pvalue_from_mi(mi: Nats, n: u64) -> f64 {
    assert!(n >= 1, "sample size must be at least 1");
    (-(n as f64) * mi.value()).exp()
}

/// Inverse of [`pvalue_from_mi`]: -ln(p) / N.
pub fn mi_from_pvalue(p: f64, n: u64) -> Result<Nats> {
    assert!(n >= 1, "sample size must be at least 1");
    if p.is_nan() || p <= 0.0 || p > 1.0 {
        return Err(Error::InvalidProbability { value: p });
    }
    Ok(Nats(clamp_information(-p.ln() / n as f64)))
}

/// Self-information of a single event, -ln(p).
pub fn self_information(p: f64) -> Result<Nats> {
    if p.is_nan() || p <= 0.0 || p > 1.0 {
        return Err(Error::InvalidProbability { value: p });
    }
    Ok(Nats(clamp_information(-p.ln())))
}

/// Density of the information tail law, N exp(-N * mi); integrating it
/// over [m, inf) gives [`pvalue_from_mi`] at m.
pub fn mi_tail_density(mi: Nats, n: u64) -> f64 {
    assert!(n >= 1, "sample size must be at least 1");
    n as f64 * (-(n as f64) * mi.value()).exp()
}
