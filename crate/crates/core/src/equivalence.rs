//! The estimator MI ~ -ln(P_F)/N and machine-checkable certificates for
//! its explicit error bounds.
//!
//! For a 2x2 table with odds ratio above one, the gap -ln(P_F) - N*MI is
//! bracketed by a Stirling-error band (valid when every count is at least
//! one) minus an odds-ratio tail bound:
//!
//!   -3/2 ln(N+1) + 1/(12(N+1)) - 1/(2N) - 0.735 - ln(OR/(OR-1))
//!     <  -ln(P_F) - N*MI  <  1/2 ln(N+1) + 5.253
//!
//! For a general m x n table the band widens to
//!
//!   -(mn-1)/2 ln(N+1) + 1/(12(N+1)) - 1/(2N) - mn/2 + 1.265
//!     - (mn-1) ln(N+mn-1)
//!     <  -ln(P_F) - N*MI  <  1/2 ln(N+1) + 13/12 mn + 0.919
//!
//! A certificate evaluates the realized gap against the band. It only
//! claims anything (`applicable`) when the band's assumptions hold: all
//! cells positive, odds ratio strictly above one for the 2x2 band, and a
//! P_F that came from exact enumeration rather than sampling.

use crate::combinat::LogReal;
use crate::error::{Error, Result};
use crate::exact_tests::PfMethod;
use crate::infomeasure::{mutual_information, Nats};
use crate::tables::{normalize, CountTable, RelTable};

/// Odds ratios within this distance of 1 are treated as exact
/// independence; the tail bound ln(OR/(OR-1)) diverges there.
pub const OR_UNITY_EPS: f64 = 1e-9;

/// The asymptotic estimate MI = -ln(p_f) / N.
pub fn mi_from_fisher(p_f: f64, n: u64) -> Result<Nats> {
    assert!(n >= 1, "sample size must be at least 1");
    if p_f.is_nan() || p_f <= 0.0 || p_f > 1.0 {
        return Err(Error::InvalidProbability { value: p_f });
    }
    Ok(Nats::new((-p_f.ln() / n as f64).max(0.0)))
}

/// A 2x2 relative table rearranged so the smallest margin is the first
/// column margin and the odds ratio X0*X3/(X1*X2) is at least one.
///
/// Row swaps, column swaps, and a transposition all leave MI, P_F, and
/// the odds ratio (up to inversion) unchanged; the applied permutation is
/// recorded. A transposition is required whenever the smallest margin is
/// a row margin, which no combination of row/column swaps can move onto a
/// column.
#[derive(Debug, Clone, Copy)]
pub struct CanonicalTable2x2 {
    cells: [f64; 4],
    transposed: bool,
    row_swapped: bool,
    col_swapped: bool,
}

impl CanonicalTable2x2 {
    /// Cells in row-major order: X0, X1, X2, X3.
    pub fn cells(&self) -> [f64; 4] {
        self.cells
    }

    pub fn transposed(&self) -> bool {
        self.transposed
    }

    pub fn row_swapped(&self) -> bool {
        self.row_swapped
    }

    pub fn col_swapped(&self) -> bool {
        self.col_swapped
    }

    /// X0*X3 / (X1*X2); at least 1 after canonicalization, infinite when
    /// an off-diagonal cell is empty, NaN only for doubly degenerate
    /// tables.
    pub fn odds_ratio(&self) -> f64 {
        let [x0, x1, x2, x3] = self.cells;
        (x0 * x3) / (x1 * x2)
    }
}

fn odds_ratio_of(cells: &[f64; 4]) -> f64 {
    (cells[0] * cells[3]) / (cells[1] * cells[2])
}

/// Rearranges a 2x2 relative table into its canonical orientation.
/// Margin ties break toward the identity permutation.
pub fn canonicalize_2x2(r: &RelTable) -> CanonicalTable2x2 {
    assert!(
        r.rows() == 2 && r.cols() == 2,
        "canonicalize_2x2 needs a 2x2 table"
    );
    let mut cells = [r.cell(0, 0), r.cell(0, 1), r.cell(1, 0), r.cell(1, 1)];
    let mut transposed = false;
    let mut row_swapped = false;
    let mut col_swapped = false;

    // move the globally smallest margin onto the columns
    let min_row = (cells[0] + cells[1]).min(cells[2] + cells[3]);
    let min_col = (cells[0] + cells[2]).min(cells[1] + cells[3]);
    if min_row < min_col {
        cells.swap(1, 2);
        transposed = true;
    }

    // then onto the first column
    if cells[1] + cells[3] < cells[0] + cells[2] {
        cells.swap(0, 1);
        cells.swap(2, 3);
        col_swapped = true;
    }

    // orient the odds ratio at or above one; a row swap keeps the margin
    // layout, a column swap is only safe (and preferred) on tied columns
    let or = odds_ratio_of(&cells);
    if or < 1.0 {
        if cells[0] + cells[2] == cells[1] + cells[3] {
            cells.swap(0, 1);
            cells.swap(2, 3);
            col_swapped = !col_swapped;
        } else {
            cells.swap(0, 2);
            cells.swap(1, 3);
            row_swapped = true;
        }
    }

    CanonicalTable2x2 {
        cells,
        transposed,
        row_swapped,
        col_swapped,
    }
}

/// The Stirling-error band for a 2x2 table, as printed:
/// (-3/2 ln(N+1) + 1/(12(N+1)) - 1/(2N) - 0.735, 1/2 ln(N+1) + 5.253).
pub fn er1_bounds_2x2(n: u64) -> (f64, f64) {
    assert!(n >= 1, "sample size must be at least 1");
    let nf = n as f64;
    let z = nf + 1.0;
    let lower = -1.5 * z.ln() + 1.0 / (12.0 * z) - 1.0 / (2.0 * nf) - 0.735;
    let upper = 0.5 * z.ln() + 5.253;
    (lower, upper)
}

/// The tail-sum band (0, ln(OR/(OR-1))); requires OR > 1.
pub fn er2_bound_2x2(odds_ratio: f64) -> Result<(f64, f64)> {
    if odds_ratio.is_nan() || odds_ratio <= 1.0 {
        return Err(Error::OddsRatioAtMostOne { odds_ratio });
    }
    Ok((0.0, (odds_ratio / (odds_ratio - 1.0)).ln()))
}

/// The m x n band around N*MI for -ln(P_F), as offsets (lower, upper).
pub fn bounds_mxn(n: u64, m: usize, cols: usize) -> (f64, f64) {
    assert!(n >= 1, "sample size must be at least 1");
    assert!(m >= 2 && cols >= 2, "the m x n band needs m, n >= 2");
    let nf = n as f64;
    let z = nf + 1.0;
    let mn = (m * cols) as f64;
    let lower = -(mn - 1.0) / 2.0 * z.ln() + 1.0 / (12.0 * z) - 1.0 / (2.0 * nf) - mn / 2.0
        + 1.265
        - (mn - 1.0) * (nf + mn - 1.0).ln();
    let upper = 0.5 * z.ln() + 13.0 / 12.0 * mn + 0.919;
    (lower, upper)
}

/// A machine-checked verification that -ln(P_F) - N*MI lies inside the
/// applicable explicit band.
#[derive(Debug, Clone)]
pub struct BoundCertificate {
    /// -ln(P_F) - N*MI for the table at hand.
    pub realized: f64,
    pub lower: f64,
    pub upper: f64,
    pub shape: (usize, usize),
    pub sample_size: u64,
    /// Canonical odds ratio; only present for 2x2 tables with nonempty
    /// diagonal products.
    pub odds_ratio: Option<f64>,
    /// Whether the band's assumptions hold for this table and P_F.
    pub applicable: bool,
    /// `applicable` and realized within [lower, upper].
    pub pass: bool,
}

/// Checks the certificate for a table whose `p_f` came from exact
/// enumeration. Inapplicability is data, not an error: the realized gap
/// and band are always reported.
pub fn check_certificate(t: &CountTable, p_f: f64) -> BoundCertificate {
    check_certificate_log(t, LogReal::new(p_f.ln()), PfMethod::Enumerated)
}

/// Log-space variant taking the Fisher outcome's method into account;
/// a sampled P_F marks the certificate not applicable.
pub fn check_certificate_log(
    t: &CountTable,
    log_p_f: LogReal,
    method: PfMethod,
) -> BoundCertificate {
    let rel = normalize(t);
    let mi = mutual_information(&rel);
    let n = t.sample_size();
    let realized = -log_p_f.value() - n as f64 * mi.value();
    let shape = (t.rows(), t.cols());
    let cells_positive = t.cells().iter().all(|&x| x > 0);
    let enumerated = method == PfMethod::Enumerated;

    if shape == (2, 2) {
        let canon = canonicalize_2x2(&rel);
        let or = canon.odds_ratio();
        let or_above_one = or.is_finite() && or - 1.0 > OR_UNITY_EPS;
        if cells_positive && or_above_one {
            let (e1_lower, e1_upper) = er1_bounds_2x2(n);
            let (_, e2_upper) = er2_bound_2x2(or).expect("odds ratio above one");
            let lower = e1_lower - e2_upper;
            let upper = e1_upper;
            let applicable = enumerated;
            return BoundCertificate {
                realized,
                lower,
                upper,
                shape,
                sample_size: n,
                odds_ratio: Some(or),
                applicable,
                pass: applicable && lower <= realized && realized <= upper,
            };
        }
        // zero cell or independence: report the generic band as context
        let (lower, upper) = bounds_mxn(n, 2, 2);
        return BoundCertificate {
            realized,
            lower,
            upper,
            shape,
            sample_size: n,
            odds_ratio: if or.is_finite() { Some(or) } else { None },
            applicable: false,
            pass: false,
        };
    }

    // single-row or single-column tables are forced by their margins;
    // the band is reported at the smallest real shape but claims nothing
    let degenerate = shape.0 < 2 || shape.1 < 2;
    let (lower, upper) = bounds_mxn(n, shape.0.max(2), shape.1.max(2));
    let applicable = cells_positive && enumerated && !degenerate;
    BoundCertificate {
        realized,
        lower,
        upper,
        shape,
        sample_size: n,
        odds_ratio: None,
        applicable,
        pass: applicable && lower <= realized && realized <= upper,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact_tests::{fisher_exact, FisherConfig, FisherMethod};

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} (tol {tol})"
        );
    }

    #[test]
    fn mi_from_fisher_values() {
        assert_eq!(mi_from_fisher(1.0, 8).unwrap().value(), 0.0);
        // exp(-1000) underflows f64; exp(-700) exercises the same algebra
        assert_close(
            mi_from_fisher((-700.0f64).exp(), 700).unwrap().value(),
            1.0,
            1e-13,
        );
        assert_close(
            mi_from_fisher(34.0 / 70.0, 8).unwrap().value(),
            0.0902668396791497,
            1e-14,
        );
        assert!(mi_from_fisher(0.0, 8).is_err());
        assert!(mi_from_fisher(1.2, 8).is_err());
    }

    #[test]
    fn er1_bounds_at_n8() {
        let (lo, up) = er1_bounds_2x2(8);
        assert_close(lo, -4.08407760674507, 1e-12);
        assert_close(up, 6.35161228866811, 1e-12);
    }

    #[test]
    fn er1_bounds_leading_terms() {
        // leading terms are -3/2 ln(N+1) and 1/2 ln(N+1); the slope in
        // ln(N+1) between two large N cancels the additive constants
        let (lo1, up1) = er1_bounds_2x2(1 << 30);
        let (lo2, up2) = er1_bounds_2x2(1 << 40);
        let dlog = ((1u64 << 40) as f64 + 1.0).ln() - ((1u64 << 30) as f64 + 1.0).ln();
        assert_close((lo2 - lo1) / dlog, -1.5, 1e-9);
        assert_close((up2 - up1) / dlog, 0.5, 1e-9);
        for n in [1u64, 2, 10, 100, 10_000] {
            let (lo, up) = er1_bounds_2x2(n);
            assert!(lo < up);
        }
    }

    #[test]
    fn er2_bound_values() {
        let (lo, up) = er2_bound_2x2(9.0).unwrap();
        assert_eq!(lo, 0.0);
        assert_close(up, (9.0f64 / 8.0).ln(), 1e-15);
        assert_close(er2_bound_2x2(2.0).unwrap().1, std::f64::consts::LN_2, 1e-15);
        // upper bound vanishes as OR grows
        assert!(er2_bound_2x2(1e12).unwrap().1 < 1e-11);
        assert!(er2_bound_2x2(1.0).is_err());
        assert!(er2_bound_2x2(0.5).is_err());
    }

    #[test]
    fn mxn_bounds_reference_point() {
        let (lo, up) = bounds_mxn(1000, 3, 3);
        assert_close(up, 14.12337738965761, 1e-10);
        assert_close(lo, -86.19622345622815, 1e-10);
        // offsets vanish relative to N
        let (lo4, up4) = bounds_mxn(10_000_000, 3, 3);
        assert!(lo4.abs() / 1e7 < 1e-4 && up4 / 1e7 < 1e-5);
    }

    #[test]
    fn mxn_band_is_looser_than_dedicated_2x2() {
        let (glo, gup) = bounds_mxn(1000, 2, 2);
        let (elo, eup) = er1_bounds_2x2(1000);
        // the generic lower bound is far looser than the full 2x2 band at
        // any moderate odds ratio; the upper constants nearly coincide
        // (13/12 * 4 + 0.919 = 5.2523 against 5.253)
        let e2 = er2_bound_2x2(9.0).unwrap().1;
        assert!(glo < elo - e2);
        assert!((gup - eup).abs() < 1e-3);
    }

    #[test]
    fn canonicalize_leaves_canonical_tables_alone() {
        let r = RelTable::from_rows(&[vec![0.375, 0.125], vec![0.125, 0.375]]).unwrap();
        let c = canonicalize_2x2(&r);
        assert_eq!(c.cells(), [0.375, 0.125, 0.125, 0.375]);
        assert!(!c.transposed() && !c.row_swapped() && !c.col_swapped());
        assert_close(c.odds_ratio(), 9.0, 1e-14);
    }

    #[test]
    fn canonicalize_fixes_inverted_odds_ratio_with_a_column_swap() {
        let r = RelTable::from_rows(&[vec![0.125, 0.375], vec![0.375, 0.125]]).unwrap();
        let c = canonicalize_2x2(&r);
        assert_eq!(c.cells(), [0.375, 0.125, 0.125, 0.375]);
        assert!(c.col_swapped() && !c.row_swapped() && !c.transposed());
    }

    #[test]
    fn canonicalize_satisfies_both_conditions() {
        let tables = [
            [0.05, 0.05, 0.45, 0.45], // smallest margin on a row
            [0.1, 0.2, 0.3, 0.4],
            [0.4, 0.3, 0.2, 0.1],
            [0.07, 0.13, 0.61, 0.19],
            [0.25, 0.25, 0.25, 0.25],
        ];
        for cells in tables {
            let r = RelTable::new(2, 2, cells.to_vec()).unwrap();
            let c = canonicalize_2x2(&r);
            let [x0, x1, x2, x3] = c.cells();
            let c1 = x0 + x2;
            assert!(c1 <= x1 + x3 + 1e-15);
            assert!(c1 <= x0 + x1 + 1e-15);
            assert!(c1 <= x2 + x3 + 1e-15);
            assert!(x1 * x2 <= x0 * x3 + 1e-15);
            // the permutation preserves MI
            let canon_rel = RelTable::new(2, 2, c.cells().to_vec()).unwrap();
            assert_close(
                mutual_information(&canon_rel).value(),
                mutual_information(&r).value(),
                1e-13,
            );
        }
    }

    #[test]
    fn certificate_for_the_classic_table() {
        let t = CountTable::from_rows(&[vec![3, 1], vec![1, 3]]).unwrap();
        let p_f = fisher_exact(&t, &FisherConfig::default()).unwrap().p_f;
        let cert = check_certificate(&t, p_f);
        assert!(cert.applicable);
        assert!(cert.pass);
        assert_close(cert.realized, -0.32436157009589817, 1e-12);
        assert_close(cert.lower, -4.201860642401454, 1e-12);
        assert_close(cert.upper, 6.35161228866811, 1e-12);
        assert_close(cert.odds_ratio.unwrap(), 9.0, 1e-14);
        assert!(cert.lower < cert.upper);
    }

    #[test]
    fn certificate_estimate_error_is_within_band_over_n() {
        // |mi_from_fisher - MI| <= max(|lower|, |upper|) / N when applicable
        let t = CountTable::from_rows(&[vec![3, 1], vec![1, 3]]).unwrap();
        let p_f = fisher_exact(&t, &FisherConfig::default()).unwrap().p_f;
        let cert = check_certificate(&t, p_f);
        let mi = mutual_information(&normalize(&t)).value();
        let estimate = mi_from_fisher(p_f, 8).unwrap().value();
        assert!((estimate - mi).abs() <= cert.lower.abs().max(cert.upper.abs()) / 8.0);
    }

    #[test]
    fn certificate_inapplicable_with_zero_cell() {
        let t = CountTable::from_rows(&[vec![4, 0], vec![1, 3]]).unwrap();
        let p_f = fisher_exact(&t, &FisherConfig::default()).unwrap().p_f;
        let cert = check_certificate(&t, p_f);
        assert!(!cert.applicable);
        assert!(!cert.pass);
    }

    #[test]
    fn certificate_inapplicable_at_independence() {
        let t = CountTable::from_rows(&[vec![2, 2], vec![2, 2]]).unwrap();
        let cert = check_certificate(&t, 1.0);
        assert_eq!(cert.odds_ratio, Some(1.0));
        assert!(!cert.applicable);
    }

    #[test]
    fn certificate_handles_single_row_tables() {
        let t = CountTable::from_rows(&[vec![2, 5, 3]]).unwrap();
        let cert = check_certificate(&t, 1.0);
        assert!(!cert.applicable && !cert.pass);
        assert!(cert.lower < cert.upper);
        assert_eq!(cert.shape, (1, 3));
    }

    #[test]
    fn certificate_inapplicable_for_sampled_pf() {
        let t = CountTable::from_rows(&[vec![3, 1], vec![1, 3]]).unwrap();
        let mc = fisher_exact(
            &t,
            &FisherConfig {
                method: FisherMethod::MonteCarlo,
                mc_samples: 10_000,
                seed: 3,
            },
        )
        .unwrap();
        let cert = check_certificate_log(&t, mc.log_p_f, mc.method);
        assert!(!cert.applicable);
    }

    #[test]
    fn certificate_covers_mxn_tables() {
        let t = CountTable::from_rows(&[vec![8, 2, 1], vec![2, 7, 3], vec![1, 2, 9]]).unwrap();
        let out = fisher_exact(&t, &FisherConfig::default()).unwrap();
        let cert = check_certificate_log(&t, out.log_p_f, out.method);
        assert_eq!(cert.shape, (3, 3));
        assert!(cert.applicable);
        assert!(cert.pass, "realized {} in [{}, {}]", cert.realized, cert.lower, cert.upper);
        assert_eq!(cert.odds_ratio, None);
    }

    #[test]
    fn conversion_directions_agree() {
        // mi_from_fisher(pvalue_from_mi(m, N), N) = m
        use crate::infomeasure::{pvalue_from_mi, Nats};
        for (m, n) in [(0.13081203594113697, 8u64), (0.5, 100), (0.001, 1000)] {
            let p = pvalue_from_mi(Nats::new(m), n);
            let back = mi_from_fisher(p, n).unwrap().value();
            assert_close(back, m, 1e-13 * m.max(1.0));
        }
    }
}
