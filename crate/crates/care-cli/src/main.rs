//! `care`: two-sample Mendelian randomization from GWAS summary statistics.
//!
//! Subcommands:
//! - `analyze`: exposure/outcome summary files (plus optional LD file) to a
//!   causal-effect estimate with baselines.
//! - `simulate`: Monte Carlo experiments under the mixture data-generating
//!   process, reporting Type I error / power, bias, MSE, and coverage.
//! - `gbic-path`: diagnostic dump of the model-selection path on the
//!   unweighted screening problem.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use care::bagging::{care_estimate, CareConfig, CareEstimate};
use care::baselines::{care_no_correction, ivw, BaselineEstimate, IvwMode};
use care::error::CareError;
use care::gwas::{
    harmonize, parse_gwas, parse_ld, sigma_prune, ColumnMap, Harmonized, PalindromePolicy,
    SummaryPair,
};
use care::screening::{gbic_path, ScreeningData, ScreeningProblem};
use care::selection::{lambda_from_pvalue, select, SelectionConfig};
use care::simulation::{parse_scenario, run_experiment, Estimator, ScenarioConfig};

// Exit codes, sysexits-style: usage 64, bad data 65, unreadable input 66,
// harmonization failure 67, too few instruments 68, unavailable result 69.
const EX_USAGE: u8 = 64;
const EX_DATAERR: u8 = 65;
const EX_NOINPUT: u8 = 66;
const EX_HARMONIZE: u8 = 67;
const EX_INSTRUMENTS: u8 = 68;
const EX_UNAVAILABLE: u8 = 69;

fn exit_code_for(err: &CareError) -> u8 {
    match err {
        CareError::Io { .. } => EX_NOINPUT,
        CareError::MissingColumn { .. }
        | CareError::EmptyInput(_)
        | CareError::SelectionUnderflow(_)
        | CareError::Domain(_) => EX_DATAERR,
        CareError::InsufficientOverlap { .. } => EX_HARMONIZE,
        CareError::InsufficientInstruments { .. } => EX_INSTRUMENTS,
        CareError::WeakInstruments
        | CareError::ScreeningFailed
        | CareError::UnstableEstimate { .. } => EX_UNAVAILABLE,
        CareError::Config(_) => EX_USAGE,
    }
}

#[derive(Parser)]
#[command(name = "care", version, about = "Two-sample Mendelian randomization from GWAS summary statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the causal effect from exposure/outcome summary files.
    Analyze(AnalyzeArgs),
    /// Run Monte Carlo experiments under the mixture model.
    Simulate(SimulateArgs),
    /// Dump the model-selection path (v, loss, gbic, theta, converged).
    GbicPath(GbicPathArgs),
}

#[derive(Args, Clone)]
struct SelArgs {
    /// Selection cutoff as a two-sided p-value threshold.
    #[arg(long = "lambda-p", conflicts_with = "lambda")]
    lambda_p: Option<f64>,
    /// Selection cutoff on the z-scale (alternative to --lambda-p).
    #[arg(long)]
    lambda: Option<f64>,
    /// Pseudo-noise standard deviation for rerandomized selection.
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Seed for all random streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SelArgs {
    /// Resolves the cutoff; the default is the suggestive threshold 5e-5.
    fn resolve(&self) -> Result<(f64, Option<f64>), CareError> {
        match (self.lambda, self.lambda_p) {
            (Some(l), None) => {
                if l > 0.0 && l.is_finite() {
                    Ok((l, None))
                } else {
                    Err(CareError::Config(format!("--lambda must be > 0, got {l}")))
                }
            }
            (None, Some(p)) => Ok((lambda_from_pvalue(p)?, Some(p))),
            (None, None) => Ok((lambda_from_pvalue(5e-5)?, Some(5e-5))),
            (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
        }
    }
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Exposure GWAS summary file (delimited text with a header).
    #[arg(long)]
    exposure: PathBuf,
    /// Outcome GWAS summary file.
    #[arg(long)]
    outcome: PathBuf,
    /// Pairwise LD file with columns snp_a, snp_b, r2.
    #[arg(long)]
    ld: Option<PathBuf>,
    /// LD pruning threshold: SNPs linked above this r² are pruned.
    #[arg(long = "r2-threshold", default_value_t = 0.001)]
    r2_threshold: f64,
    /// Palindromic-SNP policy.
    #[arg(long, value_enum, default_value_t = PalindromeArg::Infer)]
    palindrome: PalindromeArg,
    /// Half-width of the allele-frequency window around 0.5 inside which
    /// palindromic SNPs are dropped under the infer policy.
    #[arg(long = "eaf-window", default_value_t = 0.08)]
    eaf_window: f64,
    /// Column overrides for the exposure file, e.g. "snp=SNP,beta=b".
    #[arg(long = "exposure-columns")]
    exposure_columns: Option<String>,
    /// Column overrides for the outcome file.
    #[arg(long = "outcome-columns")]
    outcome_columns: Option<String>,
    /// Field delimiter; auto-detected from the header when omitted.
    #[arg(long, value_enum)]
    delimiter: Option<DelimiterArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PalindromeArg {
    Drop,
    Infer,
}

#[derive(Clone, Copy, ValueEnum)]
enum DelimiterArg {
    Tab,
    Comma,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Tsv,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    sel: SelArgs,
    /// Number of bootstrap replicates.
    #[arg(long = "bootstrap", default_value_t = 2000)]
    bootstrap_b: usize,
    /// Confidence/test level alpha.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Coordinate-descent restarts per candidate valid count.
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    /// Sample size for the model-selection penalty ln(n); defaults to the
    /// median outcome precision.
    #[arg(long = "n-effective")]
    n_effective: Option<f64>,
    /// Maximum tolerated fraction of invalid bootstrap replicates.
    #[arg(long = "max-invalid-fraction", default_value_t = 0.01)]
    max_invalid_fraction: f64,
    /// Baselines to report alongside the main estimate.
    #[arg(long, value_delimiter = ',')]
    baselines: Vec<BaselineArg>,
    /// Per-replicate diagnostics TSV (b, theta_b, v_b, converged, excluded).
    #[arg(long = "replicates-out")]
    replicates_out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum BaselineArg {
    IvwFixed,
    IvwRandom,
    CareNoCorrection,
}

#[derive(Args)]
struct SimulateArgs {
    /// Builtin scenario name ("main") or path to a key=value scenario file.
    #[arg(long, default_value = "main")]
    scenario: String,
    /// True causal effect.
    #[arg(long)]
    theta: Option<f64>,
    /// Proportion of invalid instruments among relevant SNPs.
    #[arg(long, default_value_t = 0.5)]
    invalid: f64,
    /// Monte Carlo repetitions.
    #[arg(long, default_value_t = 200)]
    reps: usize,
    /// Paper-scale repetition counts: 1000 under the null, 500 otherwise.
    #[arg(long, conflicts_with = "reps")]
    full: bool,
    /// Number of SNPs per dataset.
    #[arg(long = "p-snps")]
    p_snps: Option<usize>,
    /// Estimator to evaluate.
    #[arg(long, value_enum, default_value_t = MethodArg::Care)]
    method: MethodArg,
    #[command(flatten)]
    sel: SelArgs,
    #[arg(long = "bootstrap", default_value_t = 2000)]
    bootstrap_b: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long = "n-effective")]
    n_effective: Option<f64>,
    /// Report mean wall time per repetition (makes output non-reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Care,
    CareNoCorrection,
    IvwFixed,
    IvwRandom,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Care => "care",
            MethodArg::CareNoCorrection => "care_no_correction",
            MethodArg::IvwFixed => "ivw_fixed",
            MethodArg::IvwRandom => "ivw_random",
        }
    }
}

#[derive(Args)]
struct GbicPathArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    sel: SelArgs,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long = "n-effective")]
    n_effective: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let benign = matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if benign {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EX_USAGE)
            };
        }
    };

    let result = match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Simulate(args) => run_simulate(args),
        Command::GbicPath(args) => run_gbic_path(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn configure_threads(threads: Option<usize>) -> Result<(), CareError> {
    let threads = match threads {
        Some(t) => Some(t),
        None => match std::env::var("CARE_THREADS") {
            Ok(value) => Some(value.parse().map_err(|_| {
                CareError::Config(format!("CARE_THREADS must be an integer, got '{value}'"))
            })?),
            Err(_) => None,
        },
    };
    let Some(threads) = threads else { return Ok(()) };
    if threads == 0 {
        return Err(CareError::Config("thread count must be positive".into()));
    }
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CareError::Config(format!("failed to build thread pool: {e}")))?;
    }
    Ok(())
}

fn parse_columns(spec: Option<&str>) -> Result<ColumnMap, CareError> {
    let mut map = ColumnMap::default();
    let Some(spec) = spec else { return Ok(map) };
    for item in spec.split(',') {
        let Some((role, name)) = item.split_once('=') else {
            return Err(CareError::Config(format!(
                "column override '{item}' must look like role=name"
            )));
        };
        let name = name.trim().to_string();
        match role.trim() {
            "snp" => map.snp = name,
            "effect_allele" => map.effect_allele = name,
            "other_allele" => map.other_allele = name,
            "beta" => map.beta = name,
            "se" => map.se = name,
            "eaf" => map.eaf = name,
            "n" => map.n = name,
            other => {
                return Err(CareError::Config(format!("unknown column role '{other}'")));
            }
        }
    }
    Ok(map)
}

/// Writes bytes atomically: a temp file in the destination directory is
/// persisted by rename, so interrupted runs never leave partial output.
fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), CareError> {
    match out {
        None => std::io::stdout().write_all(bytes).map_err(|source| CareError::Io {
            path: "<stdout>".into(),
            source,
        }),
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
            let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
                .map_err(|source| CareError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
            tmp.write_all(bytes).map_err(|source| CareError::Io {
                path: path.display().to_string(),
                source,
            })?;
            tmp.persist(path).map_err(|e| CareError::Io {
                path: path.display().to_string(),
                source: e.error,
            })?;
            Ok(())
        }
    }
}

struct PreparedInput {
    pairs: Vec<SummaryPair>,
    metadata: serde_json::Map<String, serde_json::Value>,
}

/// Parse, harmonize, and prune the input files, collecting bookkeeping
/// counts for the output metadata.
fn prepare_input(input: &InputArgs) -> Result<PreparedInput, CareError> {
    let delimiter = input.delimiter.map(|d| match d {
        DelimiterArg::Tab => b'\t',
        DelimiterArg::Comma => b',',
    });
    let exp_columns = parse_columns(input.exposure_columns.as_deref())?;
    let out_columns = parse_columns(input.outcome_columns.as_deref())?;
    let exposure = parse_gwas(&input.exposure, &exp_columns, delimiter)?;
    let outcome = parse_gwas(&input.outcome, &out_columns, delimiter)?;

    let policy = match input.palindrome {
        PalindromeArg::Drop => PalindromePolicy::Drop,
        PalindromeArg::Infer => PalindromePolicy::Infer {
            eaf_window: input.eaf_window,
        },
    };
    let Harmonized {
        pairs,
        dropped_palindromic,
        dropped_irreconcilable,
    } = harmonize(&exposure.records, &outcome.records, policy)?;

    let (pairs, ld_links, ld_dropped) = match &input.ld {
        Some(ld_path) => {
            let (links, dropped) = parse_ld(ld_path, delimiter)?;
            let pruned = sigma_prune(&pairs, &links, input.r2_threshold)?;
            (pruned, links.len(), dropped)
        }
        None => (pairs, 0, 0),
    };

    let mut metadata = serde_json::Map::new();
    let mut put = |key: &str, value: serde_json::Value| {
        metadata.insert(key.to_string(), value);
    };
    put("exposure_records", exposure.records.len().into());
    put("exposure_dropped", exposure.dropped.into());
    put("outcome_records", outcome.records.len().into());
    put("outcome_dropped", outcome.dropped.into());
    put("dropped_palindromic", dropped_palindromic.into());
    put("dropped_irreconcilable", dropped_irreconcilable.into());
    put("ld_links", ld_links.into());
    put("ld_dropped", ld_dropped.into());
    put("pairs_after_pruning", pairs.len().into());
    Ok(PreparedInput { pairs, metadata })
}

fn json_f64(value: f64) -> serde_json::Value {
    serde_json::Number::from_f64(value)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

fn run_analyze(args: AnalyzeArgs) -> Result<(), CareError> {
    configure_threads(args.threads)?;
    let (lambda, lambda_p) = args.sel.resolve()?;
    let prepared = prepare_input(&args.input)?;

    let sel_cfg = SelectionConfig::new(lambda, args.sel.eta, args.sel.seed)?;
    let care_cfg = CareConfig {
        bootstrap_b: args.bootstrap_b,
        alpha: args.alpha,
        seed: args.sel.seed,
        restarts: args.restarts,
        n_effective: args.n_effective,
        max_invalid_replicate_fraction: args.max_invalid_fraction,
        ..CareConfig::default()
    };
    let estimate = care_estimate(&prepared.pairs, &sel_cfg, &care_cfg)?;

    let mut baselines: Vec<BaselineEstimate> = Vec::new();
    for b in &args.baselines {
        let est = match b {
            BaselineArg::IvwFixed => ivw(&prepared.pairs, IvwMode::Fixed)?,
            BaselineArg::IvwRandom => ivw(&prepared.pairs, IvwMode::Random)?,
            BaselineArg::CareNoCorrection => {
                care_no_correction(&prepared.pairs, lambda, &care_cfg)?
            }
        };
        baselines.push(est);
    }

    if let Some(path) = &args.replicates_out {
        let mut tsv = String::from("b\ttheta_b\tv_b\tconverged\texcluded\n");
        if let Some(reps) = &estimate.replicates {
            for r in reps {
                tsv.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    r.b, r.theta, r.v, r.converged, r.excluded
                ));
            }
        }
        write_output(Some(path), tsv.as_bytes())?;
    }

    let mut metadata = prepared.metadata;
    metadata.insert("lambda".into(), json_f64(lambda));
    if let Some(p) = lambda_p {
        metadata.insert("lambda_p".into(), json_f64(p));
    }
    metadata.insert("eta".into(), json_f64(args.sel.eta));
    metadata.insert("seed".into(), args.sel.seed.into());
    metadata.insert("bootstrap_b".into(), args.bootstrap_b.into());
    metadata.insert("alpha".into(), json_f64(args.alpha));
    metadata.insert("restarts".into(), args.restarts.into());
    metadata.insert(
        "n_effective".into(),
        args.n_effective.map(json_f64).unwrap_or(serde_json::Value::Null),
    );

    let bytes = match args.format {
        FormatArg::Json => {
            let doc = serde_json::json!({
                "metadata": metadata,
                "care": estimate,
                "baselines": baselines,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable output");
            s.push('\n');
            s.into_bytes()
        }
        FormatArg::Tsv => analyze_tsv(&estimate, &baselines).into_bytes(),
    };
    write_output(args.out.as_deref(), &bytes)
}

fn analyze_tsv(estimate: &CareEstimate, baselines: &[BaselineEstimate]) -> String {
    let mut tsv = String::from("method\ttheta\tse\tci_low\tci_high\tp_value\tk_instruments\n");
    tsv.push_str(&format!(
        "care\t{}\t{}\t{}\t{}\t{}\t{}\n",
        estimate.theta_tilde,
        estimate.se,
        estimate.ci_low,
        estimate.ci_high,
        estimate.p_value,
        estimate.s_lambda
    ));
    for b in baselines {
        let z = care::stats::two_sided_z(0.05);
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            serde_json::to_value(b.method)
                .expect("method serializes")
                .as_str()
                .unwrap_or("baseline"),
            b.theta,
            b.se,
            b.theta - z * b.se,
            b.theta + z * b.se,
            b.p_value,
            b.k_instruments
        ));
    }
    tsv
}

fn run_simulate(args: SimulateArgs) -> Result<(), CareError> {
    configure_threads(args.threads)?;
    let (lambda, lambda_p) = args.sel.resolve()?;

    let (mut scenario, file_invalid) = if args.scenario == "main" {
        (ScenarioConfig::default(), None)
    } else {
        let text = std::fs::read_to_string(&args.scenario).map_err(|source| CareError::Io {
            path: args.scenario.clone(),
            source,
        })?;
        parse_scenario(&text)?
    };
    scenario.seed = args.sel.seed;
    if let Some(theta) = args.theta {
        scenario.theta = theta;
    }
    if let Some(p) = args.p_snps {
        scenario.p_snps = p;
    }
    let invalid = file_invalid.unwrap_or(args.invalid);
    let reps = if args.full {
        if scenario.theta == 0.0 {
            1000
        } else {
            500
        }
    } else {
        args.reps
    };

    let care_cfg = CareConfig {
        bootstrap_b: args.bootstrap_b,
        alpha: args.alpha,
        seed: args.sel.seed,
        restarts: args.restarts,
        n_effective: Some(args.n_effective.unwrap_or(scenario.n_y as f64)),
        ..CareConfig::default()
    };
    let estimator = match args.method {
        MethodArg::Care => Estimator::Care {
            sel: SelectionConfig::new(lambda, args.sel.eta, 0)?,
            care: care_cfg,
        },
        MethodArg::CareNoCorrection => Estimator::CareNoCorrection {
            lambda,
            care: care_cfg,
        },
        MethodArg::IvwFixed => Estimator::IvwFixed { lambda },
        MethodArg::IvwRandom => Estimator::IvwRandom { lambda },
    };

    let metrics = run_experiment(&scenario, reps, &estimator, invalid, args.timing)?;

    let bytes = match args.format {
        FormatArg::Json => {
            let doc = serde_json::json!({
                "metadata": {
                    "scenario": scenario,
                    "invalid_prop": invalid,
                    "reps": reps,
                    "method": args.method.name(),
                    "lambda": lambda,
                    "lambda_p": lambda_p,
                    "eta": args.sel.eta,
                    "bootstrap_b": args.bootstrap_b,
                    "alpha": args.alpha,
                },
                "metrics": metrics,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable output");
            s.push('\n');
            s.into_bytes()
        }
        FormatArg::Tsv => {
            let mut tsv = String::from(
                "method\ttheta\tinvalid_prop\treps\tp_snps\tseed\treject_rate\tmean_bias\tmse\tcoverage\tfailures\tmean_runtime_s\tdataset_digest\n",
            );
            tsv.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:016x}\n",
                args.method.name(),
                scenario.theta,
                invalid,
                metrics.rep_count,
                scenario.p_snps,
                scenario.seed,
                metrics.reject_rate,
                metrics.mean_bias,
                metrics.mse,
                metrics.coverage,
                metrics.failures,
                metrics.mean_runtime_s,
                metrics.dataset_digest
            ));
            tsv.into_bytes()
        }
    };
    write_output(args.out.as_deref(), &bytes)
}

fn run_gbic_path(args: GbicPathArgs) -> Result<(), CareError> {
    configure_threads(args.threads)?;
    let (lambda, _) = args.sel.resolve()?;
    let prepared = prepare_input(&args.input)?;

    let sel_cfg = SelectionConfig::new(lambda, args.sel.eta, args.sel.seed)?;
    let instruments = select(&prepared.pairs, &sel_cfg)?;
    let data = ScreeningData::from_instruments(&instruments)?;
    let n_effective = match args.n_effective {
        Some(n) => n,
        None => {
            let mut precisions: Vec<f64> = instruments
                .iter()
                .map(|i| 1.0 / (i.pair.se_y * i.pair.se_y))
                .collect();
            precisions.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mid = precisions.len() / 2;
            if precisions.len() % 2 == 1 {
                precisions[mid]
            } else {
                0.5 * (precisions[mid - 1] + precisions[mid])
            }
        }
    };
    let problem = ScreeningProblem::unweighted(&data, n_effective)?;
    let outcome = gbic_path(
        &problem,
        2..=instruments.len(),
        args.restarts.max(1),
        care::screening::DEFAULT_REL_TOL,
        care::screening::DEFAULT_MAX_ITER,
        args.sel.seed,
    )?;

    let mut tsv = String::from("v\tloss\tgbic\ttheta\tconverged\n");
    for sol in &outcome.path {
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            sol.v, sol.loss, sol.gbic, sol.theta_hat, sol.converged
        ));
    }
    write_output(args.out.as_deref(), tsv.as_bytes())
}
