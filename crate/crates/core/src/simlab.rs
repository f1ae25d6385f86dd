//! Monte Carlo study: generate random tables, compute MI alongside the
//! exact and chi-square p-values, and regress -ln(p)/N against MI.
//!
//! Trials are fully independent; every trial derives its randomness from
//! (seed, trial index) alone, so results are identical across runs and
//! thread counts.

use rand::Rng;

use crate::equivalence::check_certificate_log;
use crate::error::{Error, Result};
use crate::exact_tests::{
    chi2_test, fisher_exact, stream_rng, FisherConfig, FisherMethod, PfMethod, STREAM_TRIAL,
};
use crate::infomeasure::mutual_information;
use crate::tables::{normalize, CountTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Cell probabilities drawn uniformly from the simplex, then N
    /// observations assigned multinomially.
    DirichletMultinomial,
    /// Independent uniform integer cells in [0, 2N/(mn)]; the realized
    /// total becomes the table's sample size.
    UniformCells,
}

impl Generator {
    pub fn as_str(self) -> &'static str {
        match self {
            Generator::DirichletMultinomial => "dirichlet_multinomial",
            Generator::UniformCells => "uniform_cells",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExperimentConfig {
    pub shape: (usize, usize),
    pub sample_size: u64,
    pub trials: u32,
    pub seed: u64,
    pub generator: Generator,
    pub fisher_method: FisherMethod,
    pub mc_samples: u64,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        let (m, n) = self.shape;
        if m == 0 || n == 0 {
            return Err(Error::InvalidExperiment {
                reason: "shape must have at least one row and column".into(),
            });
        }
        if self.trials < 2 {
            return Err(Error::InvalidExperiment {
                reason: format!("need at least 2 trials, got {}", self.trials),
            });
        }
        if self.sample_size < (m * n) as u64 {
            return Err(Error::InvalidExperiment {
                reason: format!(
                    "sample size {} is below the cell count {}",
                    self.sample_size,
                    m * n
                ),
            });
        }
        Ok(())
    }
}

/// One trial's coordinates and flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial: u32,
    pub mi: f64,
    pub neg_log_pf_over_n: f64,
    /// None when the chi-square p-value underflowed to zero; such trials
    /// are excluded from the chi-square regression only.
    pub neg_log_pchi2_over_n: Option<f64>,
    pub pf_method: PfMethod,
    pub cert_applicable: bool,
    pub cert_pass: bool,
}

const MAX_GENERATOR_REJECTS: u32 = 1000;

/// Draws one random table; tables with any zero margin are rejected and
/// redrawn (up to 1000 consecutive rejections).
pub fn generate_table<R: Rng>(
    shape: (usize, usize),
    sample_size: u64,
    generator: Generator,
    rng: &mut R,
) -> Result<CountTable> {
    let (m, n) = shape;
    let k = m * n;
    for _ in 0..MAX_GENERATOR_REJECTS {
        let cells = match generator {
            Generator::DirichletMultinomial => draw_dirichlet_multinomial(k, sample_size, rng),
            Generator::UniformCells => draw_uniform_cells(k, sample_size, rng),
        };
        if cells.iter().all(|&x| x == 0) {
            continue;
        }
        let t = CountTable::new(m, n, cells).expect("cells already validated");
        if t.row_margins().iter().all(|&a| a > 0) && t.col_margins().iter().all(|&b| b > 0) {
            return Ok(t);
        }
    }
    Err(Error::DegenerateGenerator {
        attempts: MAX_GENERATOR_REJECTS,
    })
}

fn draw_dirichlet_multinomial<R: Rng>(k: usize, n: u64, rng: &mut R) -> Vec<u64> {
    // unit-rate exponentials normalized to a uniform simplex point
    let weights: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = weights.iter().sum();
    let mut cells = vec![0u64; k];
    for _ in 0..n {
        let u = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut idx = k - 1;
        for (i, &w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                idx = i;
                break;
            }
        }
        cells[idx] += 1;
    }
    cells
}

fn draw_uniform_cells<R: Rng>(k: usize, n: u64, rng: &mut R) -> Vec<u64> {
    let bound = 2 * n / k as u64;
    (0..k).map(|_| rng.gen_range(0..=bound)).collect()
}

/// Runs every trial on the calling thread.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    run_experiment_parallel(cfg, 1)
}

/// Runs trials across `threads` worker threads. Records come back in
/// trial order and are bit-identical for any thread count.
pub fn run_experiment_parallel(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let threads = threads.clamp(1, cfg.trials as usize);
    if threads == 1 {
        return (0..cfg.trials).map(|t| run_trial(cfg, t)).collect();
    }
    let results: Vec<Result<Vec<(u32, TrialRecord)>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|worker| {
                scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut t = worker as u32;
                    while t < cfg.trials {
                        out.push((t, run_trial(cfg, t)?));
                        t += threads as u32;
                    }
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("trial worker panicked"))
            .collect()
    });
    let mut records: Vec<Option<TrialRecord>> = vec![None; cfg.trials as usize];
    for chunk in results {
        for (t, record) in chunk? {
            records[t as usize] = Some(record);
        }
    }
    Ok(records.into_iter().map(|r| r.expect("every trial ran")).collect())
}

fn run_trial(cfg: &ExperimentConfig, trial: u32) -> Result<TrialRecord> {
    let mut rng = stream_rng(cfg.seed, trial as u64, STREAM_TRIAL);
    let table = generate_table(cfg.shape, cfg.sample_size, cfg.generator, &mut rng)?;
    let n = table.sample_size() as f64;
    let mi = mutual_information(&normalize(&table)).value();

    let fisher_cfg = FisherConfig {
        method: cfg.fisher_method,
        mc_samples: cfg.mc_samples,
        // decorrelate the Monte Carlo streams of different trials
        seed: cfg.seed ^ (trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    };
    let fisher = fisher_exact(&table, &fisher_cfg)?;
    let p_chi2 = chi2_test(&table)?;
    let neg_log_pchi2_over_n = if p_chi2 > 0.0 {
        Some(-p_chi2.ln() / n + 0.0)
    } else {
        None
    };
    let cert = check_certificate_log(&table, fisher.log_p_f, fisher.method);
    Ok(TrialRecord {
        trial,
        mi,
        // + 0.0 turns a negated zero back into plain 0
        neg_log_pf_over_n: -fisher.log_p_f.value() / n + 0.0,
        neg_log_pchi2_over_n,
        pf_method: fisher.method,
        cert_applicable: cert.applicable,
        cert_pass: cert.pass,
    })
}

/// Ordinary least squares fit and coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Fits ys on xs by ordinary least squares. Errs when the xs are all
/// equal (the slope is undefined).
pub fn regress(xs: &[f64], ys: &[f64]) -> Result<RegressionSummary> {
    assert_eq!(xs.len(), ys.len(), "regress needs paired samples");
    assert!(xs.len() >= 2, "regress needs at least two points");
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateRegression);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let fitted = intercept + slope * x;
        ss_res += (y - fitted) * (y - fitted);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RegressionSummary {
        slope,
        intercept,
        r_squared,
        n_points: xs.len(),
    })
}

/// The two regression summaries of an experiment: MI against
/// -ln(P_F)/N, and MI against -ln(P_chi2)/N over the retained trials.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentSummary {
    pub fisher: RegressionSummary,
    pub chi2: Option<RegressionSummary>,
    pub trials: usize,
    pub chi2_excluded: usize,
}

pub fn summarize(records: &[TrialRecord]) -> Result<ExperimentSummary> {
    let xs: Vec<f64> = records.iter().map(|r| r.neg_log_pf_over_n).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.mi).collect();
    let fisher = regress(&xs, &ys)?;

    let retained: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| r.neg_log_pchi2_over_n.is_some())
        .collect();
    let chi2 = if retained.len() >= 2 {
        let cx: Vec<f64> = retained
            .iter()
            .map(|r| r.neg_log_pchi2_over_n.unwrap())
            .collect();
        let cy: Vec<f64> = retained.iter().map(|r| r.mi).collect();
        Some(regress(&cx, &cy)?)
    } else {
        None
    };
    Ok(ExperimentSummary {
        fisher,
        chi2,
        trials: records.len(),
        chi2_excluded: records.len() - retained.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} (tol {tol})"
        );
    }

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            shape: (2, 2),
            sample_size: 40,
            trials: 8,
            seed: 11,
            generator: Generator::DirichletMultinomial,
            fisher_method: FisherMethod::Auto,
            mc_samples: 1000,
        }
    }

    #[test]
    fn regress_exact_lines() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = xs;
        let r = regress(&xs, &ys).unwrap();
        assert_close(r.slope, 1.0, 1e-14);
        assert_close(r.intercept, 0.0, 1e-14);
        assert_close(r.r_squared, 1.0, 1e-14);

        let ys2: Vec<f64> = xs.iter().map(|x| 2.0 * x + 3.0).collect();
        let r2 = regress(&xs, &ys2).unwrap();
        assert_close(r2.slope, 2.0, 1e-14);
        assert_close(r2.intercept, 3.0, 1e-14);
        assert_close(r2.r_squared, 1.0, 1e-14);
    }

    #[test]
    fn regress_hand_worked_dataset() {
        let r = regress(&[0.0, 1.0, 2.0], &[0.0, 1.0, 1.0]).unwrap();
        assert_close(r.slope, 0.5, 1e-14);
        assert_close(r.intercept, 1.0 / 6.0, 1e-14);
        assert_close(r.r_squared, 0.75, 1e-14);
        assert_eq!(r.n_points, 3);
    }

    #[test]
    fn regress_rejects_constant_x() {
        assert_eq!(
            regress(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateRegression)
        );
    }

    #[test]
    fn generated_tables_have_positive_margins() {
        for generator in [Generator::DirichletMultinomial, Generator::UniformCells] {
            let mut rng = stream_rng(5, 0, STREAM_TRIAL);
            for _ in 0..50 {
                let t = generate_table((2, 3), 60, generator, &mut rng).unwrap();
                assert!(t.row_margins().iter().all(|&a| a > 0));
                assert!(t.col_margins().iter().all(|&b| b > 0));
                if generator == Generator::DirichletMultinomial {
                    assert_eq!(t.sample_size(), 60);
                }
            }
        }
    }

    #[test]
    fn generator_is_deterministic_in_the_seed() {
        let mut rng1 = stream_rng(9, 4, STREAM_TRIAL);
        let mut rng2 = stream_rng(9, 4, STREAM_TRIAL);
        let a = generate_table((3, 3), 90, Generator::DirichletMultinomial, &mut rng1).unwrap();
        let b = generate_table((3, 3), 90, Generator::DirichletMultinomial, &mut rng2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dirichlet_cell_means_are_symmetric() {
        // cell probabilities are exchangeable, so empirical cell means of
        // the counts should all be near N / (m n)
        let mut rng = stream_rng(31, 0, STREAM_TRIAL);
        let mut sums = [0f64; 4];
        let draws = 10_000;
        for _ in 0..draws {
            let t = generate_table((2, 2), 100, Generator::DirichletMultinomial, &mut rng).unwrap();
            for (s, &c) in sums.iter_mut().zip(t.cells()) {
                *s += c as f64;
            }
        }
        for s in sums {
            let mean = s / draws as f64 / 100.0;
            assert!((mean - 0.25).abs() < 0.01, "cell mean {mean}");
        }
    }

    #[test]
    fn generator_gives_up_when_margins_cannot_be_positive() {
        // a single observation always leaves three zero margins in a 2x2
        let mut rng = stream_rng(1, 0, STREAM_TRIAL);
        let err = generate_table((2, 2), 1, Generator::DirichletMultinomial, &mut rng).unwrap_err();
        assert_eq!(err, Error::DegenerateGenerator { attempts: 1000 });
    }

    #[test]
    fn minimal_experiment_runs() {
        let cfg = ExperimentConfig {
            trials: 2,
            ..small_config()
        };
        let records = run_experiment(&cfg).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].trial, 0);
        assert_eq!(records[1].trial, 1);
        for r in &records {
            assert!(r.mi.is_finite() && r.neg_log_pf_over_n.is_finite());
        }
    }

    #[test]
    fn experiment_is_identical_across_thread_counts() {
        let cfg = small_config();
        let solo = run_experiment_parallel(&cfg, 1).unwrap();
        let quad = run_experiment_parallel(&cfg, 4).unwrap();
        let over = run_experiment_parallel(&cfg, 64).unwrap();
        assert_eq!(solo, quad);
        assert_eq!(solo, over);
    }

    #[test]
    fn experiment_config_is_validated() {
        let mut cfg = small_config();
        cfg.trials = 1;
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = small_config();
        cfg.sample_size = 3;
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn summaries_track_exclusions() {
        let records = vec![
            TrialRecord {
                trial: 0,
                mi: 0.1,
                neg_log_pf_over_n: 0.11,
                neg_log_pchi2_over_n: Some(0.12),
                pf_method: PfMethod::Enumerated,
                cert_applicable: true,
                cert_pass: true,
            },
            TrialRecord {
                trial: 1,
                mi: 0.2,
                neg_log_pf_over_n: 0.21,
                neg_log_pchi2_over_n: None,
                pf_method: PfMethod::Enumerated,
                cert_applicable: true,
                cert_pass: true,
            },
            TrialRecord {
                trial: 2,
                mi: 0.3,
                neg_log_pf_over_n: 0.32,
                neg_log_pchi2_over_n: Some(0.33),
                pf_method: PfMethod::Enumerated,
                cert_applicable: true,
                cert_pass: true,
            },
        ];
        let s = summarize(&records).unwrap();
        assert_eq!(s.trials, 3);
        assert_eq!(s.chi2_excluded, 1);
        assert_eq!(s.chi2.unwrap().n_points, 2);
    }
}
