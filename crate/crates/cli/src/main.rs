//! miexact: exact dependence tests on contingency tables and their
//! mutual-information equivalents.
//!
//! Exit codes: 0 success, 1 usage, 2 table parse error, 3 domain error,
//! 4 I/O error.

mod envelope;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use miexact::equivalence::check_certificate_log;
use miexact::exact_tests::{FisherConfig, FisherMethod, TestReport};
use miexact::infomeasure::{mi_from_pvalue, mutual_information, pvalue_from_mi, Nats};
use miexact::meta::{combine_pvalues, per_study_pvalue, pool_cellwise, pool_weighted, StudySet};
use miexact::simlab::{run_experiment_parallel, summarize, ExperimentConfig, Generator};
use miexact::tables::{normalize, parse_table, CountTable};

use envelope::{
    trial_records_csv, ConvertResults, Envelope, MetaCellwiseResults, MetaCombineResults,
    MetaWeightedResults, SimulateResults, StudySummary, TestResults,
};

#[derive(Parser)]
#[command(
    name = "miexact",
    version,
    about = "Exact dependence tests on contingency tables and their mutual-information equivalents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the exact tests and bound certificate on one CSV table
    Test(TestArgs),
    /// Convert between mutual information and a p-value
    Convert(ConvertArgs),
    /// Pool several studies: cell-wise tables, weighted MI, or combined p-values
    Meta(MetaArgs),
    /// Generate random tables and regress MI against -ln(p)/N
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    Enumerate,
    Montecarlo,
}

impl From<MethodArg> for FisherMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => FisherMethod::Auto,
            MethodArg::Enumerate => FisherMethod::Enumerate,
            MethodArg::Montecarlo => FisherMethod::MonteCarlo,
        }
    }
}

impl MethodArg {
    fn as_str(self) -> &'static str {
        match self {
            MethodArg::Auto => "auto",
            MethodArg::Enumerate => "enumerate",
            MethodArg::Montecarlo => "montecarlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GeneratorArg {
    DirichletMultinomial,
    UniformCells,
}

impl From<GeneratorArg> for Generator {
    fn from(g: GeneratorArg) -> Self {
        match g {
            GeneratorArg::DirichletMultinomial => Generator::DirichletMultinomial,
            GeneratorArg::UniformCells => Generator::UniformCells,
        }
    }
}

#[derive(Args)]
struct TestArgs {
    /// Headerless CSV contingency table
    table: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Monte Carlo sample count when sampling is used
    #[arg(long, default_value_t = 100_000)]
    mc_samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Args)]
struct ConvertArgs {
    /// Mutual information in nats
    #[arg(long, conflicts_with = "pvalue")]
    mi: Option<f64>,
    /// Tail probability in (0, 1]
    #[arg(long)]
    pvalue: Option<f64>,
    /// Sample size N
    #[arg(long)]
    n: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetaMode {
    Cellwise,
    Weighted,
    Combine,
}

#[derive(Args)]
struct MetaArgs {
    /// Study tables (headerless CSV), one path per study
    paths: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetaMode::Cellwise)]
    mode: MetaMode,
    /// Combine mode: per-study p-values given directly
    #[arg(long, value_delimiter = ',')]
    pvalues: Vec<f64>,
    /// Combine mode: per-study sample sizes matching --pvalues
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<u64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    #[arg(long, default_value_t = 100_000)]
    mc_samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Args)]
struct SimulateArgs {
    /// Table shape as rows,cols
    #[arg(long, default_value = "2,2")]
    shape: String,
    /// Sample size per table
    #[arg(long, default_value_t = 1000)]
    n: u64,
    #[arg(long, default_value_t = 1000)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = GeneratorArg::DirichletMultinomial)]
    generator: GeneratorArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    fisher_method: MethodArg,
    #[arg(long, default_value_t = 100_000)]
    mc_samples: u64,
    /// Worker threads; results are identical for any value
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Destination for the per-trial CSV
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn parse(path: &Path, err: miexact::TableParseError) -> Self {
        Failure {
            code: 2,
            message: format!("{}: {err}", path.display()),
        }
    }

    fn io(context: &str, err: std::io::Error) -> Self {
        Failure {
            code: 4,
            message: format!("{context}: {err}"),
        }
    }
}

impl From<miexact::Error> for Failure {
    fn from(err: miexact::Error) -> Self {
        Failure {
            code: 3,
            message: err.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Convert(args) => cmd_convert(args),
        Command::Meta(args) => cmd_meta(args),
        Command::Simulate(args) => cmd_simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_table(path: &Path) -> Result<CountTable, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::io(&format!("reading {}", path.display()), e))?;
    parse_table(&text).map_err(|e| Failure::parse(path, e))
}

fn cmd_test(args: TestArgs) -> Result<(), Failure> {
    let table = load_table(&args.table)?;
    let cfg = FisherConfig {
        method: args.method.into(),
        mc_samples: args.mc_samples,
        seed: args.seed,
    };
    let report = TestReport::compute(&table, &cfg)?;
    let cert = check_certificate_log(&table, report.log_p_f, report.p_f_method);
    let results = TestResults::new(table.rows(), table.cols(), &report, &cert);

    let inputs = json!({
        "table": args.table.display().to_string(),
        "method": args.method.as_str(),
        "mc_samples": args.mc_samples,
        "seed": args.seed,
    });
    let mut env = Envelope::new("test", inputs, results);
    if report.p_f_method == miexact::exact_tests::PfMethod::MonteCarlo {
        env.warn("p_f was estimated by Monte Carlo sampling; the certificate is not applicable");
    }
    if report.p_chi2 == 0.0 {
        env.warn("chi-square p-value underflowed to zero; log_p_chi2 omitted");
    }
    match args.format {
        FormatArg::Json => println!("{}", env.to_json()),
        FormatArg::Csv => print!("{}", env.results.to_csv()),
    }
    Ok(())
}

fn cmd_convert(args: ConvertArgs) -> Result<(), Failure> {
    if args.n < 1 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let (mi, pvalue) = match (args.mi, args.pvalue) {
        (Some(mi), None) => {
            if !mi.is_finite() || mi < 0.0 {
                return Err(Failure::usage("--mi must be finite and nonnegative"));
            }
            (mi, pvalue_from_mi(Nats::new(mi), args.n))
        }
        (None, Some(p)) => {
            let mi = mi_from_pvalue(p, args.n)?;
            (mi.value(), p)
        }
        _ => {
            return Err(Failure::usage(
                "give exactly one of --mi or --pvalue (and --n)",
            ))
        }
    };
    let threshold = 3.0 / args.n as f64;
    let results = ConvertResults {
        sample_size: args.n,
        mi,
        pvalue,
        log_pvalue: -(args.n as f64) * mi + 0.0,
        mi_threshold: threshold,
        significant: mi >= threshold,
    };
    let inputs = json!({
        "mi": args.mi,
        "pvalue": args.pvalue,
        "n": args.n,
    });
    let env = Envelope::new("convert", inputs, results);
    match args.format {
        FormatArg::Json => println!("{}", env.to_json()),
        FormatArg::Csv => print!("{}", env.results.to_csv()),
    }
    Ok(())
}

fn cmd_meta(args: MetaArgs) -> Result<(), Failure> {
    let fisher_cfg = FisherConfig {
        method: args.method.into(),
        mc_samples: args.mc_samples,
        seed: args.seed,
    };
    let inputs = json!({
        "paths": args.paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "mode": format!("{:?}", args.mode).to_lowercase(),
        "pvalues": args.pvalues,
        "sizes": args.sizes,
        "method": args.method.as_str(),
        "mc_samples": args.mc_samples,
        "seed": args.seed,
    });

    match args.mode {
        MetaMode::Cellwise => {
            if args.paths.is_empty() {
                return Err(Failure::usage("cellwise mode needs at least one table path"));
            }
            let tables: Vec<CountTable> = args
                .paths
                .iter()
                .map(|p| load_table(p))
                .collect::<Result<_, _>>()?;
            let per_study = args
                .paths
                .iter()
                .zip(&tables)
                .map(|(path, t)| {
                    let mi = mutual_information(&normalize(t));
                    StudySummary {
                        path: path.display().to_string(),
                        sample_size: t.sample_size(),
                        mi: mi.value(),
                        p_from_mi: per_study_pvalue(mi, t.sample_size()),
                        p_f: None,
                        log_p_f: None,
                        p_f_method: None,
                    }
                })
                .collect();
            let set = StudySet::new(tables)?;
            let pooled = pool_cellwise(&set, &fisher_cfg)?;
            let results = MetaCellwiseResults {
                studies: set.studies().len(),
                rows: pooled.pooled_table.rows(),
                cols: pooled.pooled_table.cols(),
                pooled_cells: pooled.pooled_table.cells().to_vec(),
                total_sample_size: pooled.total_sample_size,
                mi_s: pooled.mi_s.value(),
                p_s: pooled.p_s,
                log_p_s: pooled.log_p_s.value(),
                p_method: pooled.p_method.as_str().to_string(),
                p_stderr: pooled.p_stderr,
                certificate: (&pooled.certificate).into(),
                per_study,
            };
            let env = Envelope::new("meta", inputs, results);
            match args.format {
                FormatArg::Json => println!("{}", env.to_json()),
                FormatArg::Csv => print!("{}", env.results.to_csv()),
            }
        }
        MetaMode::Weighted => {
            if args.paths.is_empty() {
                return Err(Failure::usage("weighted mode needs at least one table path"));
            }
            let tables: Vec<CountTable> = args
                .paths
                .iter()
                .map(|p| load_table(p))
                .collect::<Result<_, _>>()?;
            let mut per_study = Vec::with_capacity(tables.len());
            let mut pairs = Vec::with_capacity(tables.len());
            let mut log_pf_sum = 0.0f64;
            for (path, t) in args.paths.iter().zip(&tables) {
                let mi = mutual_information(&normalize(t));
                let fisher = miexact::exact_tests::fisher_exact(t, &fisher_cfg)?;
                log_pf_sum += fisher.log_p_f.value();
                pairs.push((t.sample_size(), mi));
                per_study.push(StudySummary {
                    path: path.display().to_string(),
                    sample_size: t.sample_size(),
                    mi: mi.value(),
                    p_from_mi: per_study_pvalue(mi, t.sample_size()),
                    p_f: Some(fisher.p_f),
                    log_p_f: Some(fisher.log_p_f.value()),
                    p_f_method: Some(fisher.method.as_str().to_string()),
                });
            }
            let (n_s, mi_s) = pool_weighted(&pairs)?;
            let mi_s_from_fisher = -log_pf_sum / n_s as f64;
            let log_p_s = -(n_s as f64) * mi_s.value();
            let results = MetaWeightedResults {
                studies: tables.len(),
                total_sample_size: n_s,
                mi_s: mi_s.value(),
                p_s: log_p_s.exp(),
                log_p_s,
                mi_s_from_fisher,
                gap: mi_s.value() - mi_s_from_fisher,
                per_study,
            };
            let env = Envelope::new("meta", inputs, results);
            match args.format {
                FormatArg::Json => println!("{}", env.to_json()),
                FormatArg::Csv => print!("{}", env.results.to_csv()),
            }
        }
        MetaMode::Combine => {
            let (pvalues, sizes) = if !args.pvalues.is_empty() || !args.sizes.is_empty() {
                if !args.paths.is_empty() {
                    return Err(Failure::usage(
                        "combine mode takes either table paths or --pvalues/--sizes, not both",
                    ));
                }
                if args.pvalues.is_empty() || args.sizes.is_empty() {
                    return Err(Failure::usage(
                        "combine mode needs both --pvalues and --sizes",
                    ));
                }
                (args.pvalues.clone(), args.sizes.clone())
            } else {
                if args.paths.is_empty() {
                    return Err(Failure::usage(
                        "combine mode needs table paths or --pvalues/--sizes",
                    ));
                }
                let mut ps = Vec::new();
                let mut ns = Vec::new();
                for path in &args.paths {
                    let t = load_table(path)?;
                    let fisher = miexact::exact_tests::fisher_exact(&t, &fisher_cfg)?;
                    ps.push(fisher.p_f);
                    ns.push(t.sample_size());
                }
                (ps, ns)
            };
            let combined = combine_pvalues(&pvalues, &sizes)?;
            let results = MetaCombineResults {
                studies: pvalues.len(),
                total_sample_size: combined.total_sample_size,
                p_s: combined.p_s,
                log_p_s: combined.log_p_s.value(),
                mi_s: combined.mi_s.value(),
                per_study_pvalues: pvalues,
                per_study_sizes: sizes,
            };
            let env = Envelope::new("meta", inputs, results);
            match args.format {
                FormatArg::Json => println!("{}", env.to_json()),
                FormatArg::Csv => print!("{}", env.results.to_csv()),
            }
        }
    }
    Ok(())
}

fn parse_shape(text: &str) -> Result<(usize, usize), Failure> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Failure::usage(format!(
            "--shape must be rows,cols (got {text:?})"
        )));
    }
    let rows = parts[0]
        .trim()
        .parse::<usize>()
        .map_err(|_| Failure::usage(format!("bad row count {:?}", parts[0])))?;
    let cols = parts[1]
        .trim()
        .parse::<usize>()
        .map_err(|_| Failure::usage(format!("bad column count {:?}", parts[1])))?;
    if rows == 0 || cols == 0 {
        return Err(Failure::usage("--shape needs positive dimensions"));
    }
    Ok((rows, cols))
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let shape = parse_shape(&args.shape)?;
    let cfg = ExperimentConfig {
        shape,
        sample_size: args.n,
        trials: args.trials,
        seed: args.seed,
        generator: args.generator.into(),
        fisher_method: args.fisher_method.into(),
        mc_samples: args.mc_samples,
    };
    let records = run_experiment_parallel(&cfg, args.threads)?;
    let csv = trial_records_csv(&records);
    std::fs::write(&args.out, csv)
        .map_err(|e| Failure::io(&format!("writing {}", args.out.display()), e))?;
    let summary = summarize(&records)?;

    let results = SimulateResults {
        shape: [shape.0, shape.1],
        sample_size: args.n,
        trials: args.trials,
        seed: args.seed,
        generator: cfg.generator.as_str().to_string(),
        fisher_method: args.fisher_method.as_str().to_string(),
        threads: args.threads,
        out_path: args.out.display().to_string(),
        fisher_regression: (&summary.fisher).into(),
        chi2_regression: summary.chi2.as_ref().map(Into::into),
        chi2_excluded: summary.chi2_excluded,
        cert_applicable: records.iter().filter(|r| r.cert_applicable).count(),
        cert_pass: records.iter().filter(|r| r.cert_pass).count(),
    };
    let inputs = json!({
        "shape": args.shape,
        "n": args.n,
        "trials": args.trials,
        "seed": args.seed,
        "generator": cfg.generator.as_str(),
        "fisher_method": args.fisher_method.as_str(),
        "mc_samples": args.mc_samples,
        "threads": args.threads,
        "out": args.out.display().to_string(),
    });
    let mut env = Envelope::new("simulate", inputs, results);
    if summary.chi2_excluded > 0 {
        env.warn(format!(
            "{} trial(s) had an underflowed chi-square p-value and were excluded from the chi-square regression",
            summary.chi2_excluded
        ));
    }
    println!("{}", env.to_json());
    Ok(())
}
