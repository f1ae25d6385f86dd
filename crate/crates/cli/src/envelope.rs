//! Output records: a versioned JSON envelope around command-specific
//! results, plus the fixed-column CSV forms.
//!
//! Probabilities are always accompanied by their natural logarithms so
//! values far below double-precision range survive serialization.

use serde::{Deserialize, Serialize};

use miexact::equivalence::BoundCertificate;
use miexact::exact_tests::TestReport;
use miexact::simlab::{RegressionSummary, TrialRecord};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: String,
    pub command: String,
    pub inputs: serde_json::Value,
    pub results: T,
    pub warnings: Vec<String>,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, inputs: serde_json::Value, results: T) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            inputs,
            results,
            warnings: Vec::new(),
        }
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("envelope serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CertificateDto {
    pub realized: f64,
    pub lower: f64,
    pub upper: f64,
    pub shape: [usize; 2],
    pub sample_size: u64,
    pub odds_ratio: Option<f64>,
    pub applicable: bool,
    pub pass: bool,
}

impl From<&BoundCertificate> for CertificateDto {
    fn from(c: &BoundCertificate) -> Self {
        CertificateDto {
            realized: c.realized,
            lower: c.lower,
            upper: c.upper,
            shape: [c.shape.0, c.shape.1],
            sample_size: c.sample_size,
            odds_ratio: c.odds_ratio,
            applicable: c.applicable,
            pass: c.pass,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TestResults {
    pub rows: usize,
    pub cols: usize,
    pub sample_size: u64,
    pub p_h: f64,
    pub log_p_h: f64,
    pub p_f: f64,
    pub log_p_f: f64,
    pub p_f_method: String,
    pub p_f_stderr: f64,
    pub p_chi2: f64,
    /// Absent when the chi-square p-value underflowed to zero.
    pub log_p_chi2: Option<f64>,
    pub mi: f64,
    /// The estimate -ln(P_F)/N.
    pub mi_from_p_f: f64,
    pub certificate: CertificateDto,
}

impl TestResults {
    pub fn new(rows: usize, cols: usize, report: &TestReport, cert: &BoundCertificate) -> Self {
        TestResults {
            rows,
            cols,
            sample_size: report.sample_size,
            p_h: report.p_h,
            log_p_h: report.log_p_h.value(),
            p_f: report.p_f,
            log_p_f: report.log_p_f.value(),
            p_f_method: report.p_f_method.as_str().to_string(),
            p_f_stderr: report.p_f_stderr,
            p_chi2: report.p_chi2,
            log_p_chi2: (report.p_chi2 > 0.0).then(|| report.p_chi2.ln()),
            mi: report.mi.value(),
            // + 0.0 turns a negated zero back into plain 0
            mi_from_p_f: -report.log_p_f.value() / report.sample_size as f64 + 0.0,
            certificate: cert.into(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "rows,cols,sample_size,p_h,log_p_h,p_f,log_p_f,p_f_method,p_f_stderr,\
             p_chi2,mi,mi_from_p_f,cert_realized,cert_lower,cert_upper,cert_odds_ratio,\
             cert_applicable,cert_pass\n",
        );
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            self.rows,
            self.cols,
            self.sample_size,
            self.p_h,
            self.log_p_h,
            self.p_f,
            self.log_p_f,
            self.p_f_method,
            self.p_f_stderr,
            self.p_chi2,
            self.mi,
            self.mi_from_p_f,
            self.certificate.realized,
            self.certificate.lower,
            self.certificate.upper,
            self.certificate
                .odds_ratio
                .map(|v| v.to_string())
                .unwrap_or_default(),
            self.certificate.applicable,
            self.certificate.pass,
        ));
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConvertResults {
    pub sample_size: u64,
    pub mi: f64,
    pub pvalue: f64,
    pub log_pvalue: f64,
    /// Information threshold for significance at p ~ 0.0498: 3/N nats.
    pub mi_threshold: f64,
    pub significant: bool,
}

impl ConvertResults {
    pub fn to_csv(&self) -> String {
        format!(
            "sample_size,mi,pvalue,log_pvalue,mi_threshold,significant\n{},{},{},{},{},{}\n",
            self.sample_size,
            self.mi,
            self.pvalue,
            self.log_pvalue,
            self.mi_threshold,
            self.significant
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StudySummary {
    pub path: String,
    pub sample_size: u64,
    pub mi: f64,
    /// exp(-N_h * MI_h), the study's information p-value.
    pub p_from_mi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_p_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_f_method: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetaCellwiseResults {
    pub studies: usize,
    pub rows: usize,
    pub cols: usize,
    pub pooled_cells: Vec<u64>,
    pub total_sample_size: u64,
    pub mi_s: f64,
    pub p_s: f64,
    pub log_p_s: f64,
    pub p_method: String,
    pub p_stderr: f64,
    pub certificate: CertificateDto,
    pub per_study: Vec<StudySummary>,
}

impl MetaCellwiseResults {
    pub fn to_csv(&self) -> String {
        format!(
            "studies,rows,cols,total_sample_size,mi_s,p_s,log_p_s,p_method,p_stderr\n\
             {},{},{},{},{},{},{},{},{}\n",
            self.studies,
            self.rows,
            self.cols,
            self.total_sample_size,
            self.mi_s,
            self.p_s,
            self.log_p_s,
            self.p_method,
            self.p_stderr
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetaWeightedResults {
    pub studies: usize,
    pub total_sample_size: u64,
    /// Weighted mean sum(N_h MI_h) / N_s.
    pub mi_s: f64,
    /// exp(-N_s * mi_s), the pooled information p-value.
    pub p_s: f64,
    pub log_p_s: f64,
    /// -ln(prod P_Fh)/N_s, the exact-test route to the same quantity.
    pub mi_s_from_fisher: f64,
    /// mi_s - mi_s_from_fisher; shrinks as the sample sizes grow.
    pub gap: f64,
    pub per_study: Vec<StudySummary>,
}

impl MetaWeightedResults {
    pub fn to_csv(&self) -> String {
        format!(
            "studies,total_sample_size,mi_s,p_s,log_p_s,mi_s_from_fisher,gap\n\
             {},{},{},{},{},{},{}\n",
            self.studies,
            self.total_sample_size,
            self.mi_s,
            self.p_s,
            self.log_p_s,
            self.mi_s_from_fisher,
            self.gap
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetaCombineResults {
    pub studies: usize,
    pub total_sample_size: u64,
    pub p_s: f64,
    pub log_p_s: f64,
    pub mi_s: f64,
    pub per_study_pvalues: Vec<f64>,
    pub per_study_sizes: Vec<u64>,
}

impl MetaCombineResults {
    pub fn to_csv(&self) -> String {
        format!(
            "studies,total_sample_size,p_s,log_p_s,mi_s\n{},{},{},{},{}\n",
            self.studies, self.total_sample_size, self.p_s, self.log_p_s, self.mi_s
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RegressionDto {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl From<&RegressionSummary> for RegressionDto {
    fn from(r: &RegressionSummary) -> Self {
        RegressionDto {
            slope: r.slope,
            intercept: r.intercept,
            r_squared: r.r_squared,
            n_points: r.n_points,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SimulateResults {
    pub shape: [usize; 2],
    pub sample_size: u64,
    pub trials: u32,
    pub seed: u64,
    pub generator: String,
    pub fisher_method: String,
    pub threads: usize,
    pub out_path: String,
    pub fisher_regression: RegressionDto,
    /// Absent when fewer than two trials retained a positive chi-square p.
    pub chi2_regression: Option<RegressionDto>,
    pub chi2_excluded: usize,
    pub cert_applicable: usize,
    pub cert_pass: usize,
}

/// Fixed-column CSV of the trial records:
/// trial,mi,neg_log_pf_over_N,neg_log_pchi2_over_N,pf_method,cert_applicable,cert_pass
/// An underflowed chi-square p-value leaves its column empty.
pub fn trial_records_csv(records: &[TrialRecord]) -> String {
    let mut out =
        String::from("trial,mi,neg_log_pf_over_N,neg_log_pchi2_over_N,pf_method,cert_applicable,cert_pass\n");
    for r in records {
        let chi2 = r
            .neg_log_pchi2_over_n
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.trial,
            r.mi,
            r.neg_log_pf_over_n,
            chi2,
            r.pf_method.as_str(),
            r.cert_applicable,
            r.cert_pass
        ));
    }
    out
}
