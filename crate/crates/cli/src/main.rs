use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use permchar_core::class_fn::SpectralFunction;
use permchar_core::equidistribution::{
    etk_bound, finite_type_certificate, kh_error_bound_1d, kh_error_bound_product, kronecker, star_discrepancy_exact,
    DiscrepancyReport,
};
use permchar_core::harness::{derive_stream, run_experiment, ExperimentConfig, ExperimentResult, CONFIG_VERSION};
use permchar_core::limits::{covariance_matrix, limit_constants, LimitConstants};
use permchar_core::permutation::{
    cycle_counts_from_chain, esf_probability, exact_feller_distribution, partitions, sample_feller_chain,
    sample_permutation_crp, EwensParameter,
};
use serde::Serialize;

const CONFIG_SCHEMA: &str = include_str!("../schemas/experiment_config.schema.json");
const DUMP_HEADER: [&str; 4] = ["sample_index", "point_index", "re", "im"];
const FELLER_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "permchar", version, about = "Random permutation matrices: sampling, CLT experiments, discrepancy and limit constants")]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample Ewens cycle types (and optionally permutations).
    Sample(SampleArgs),
    /// Run a Monte Carlo CLT experiment from a JSON config.
    Clt(CltArgs),
    /// Star discrepancy and bounds for a Kronecker sequence.
    Discrepancy(DiscrepancyArgs),
    /// Limit constants or the limiting covariance of spectral functions.
    Constants(ConstantsArgs),
    /// Compare the exact Feller chain law with the Ewens sampling formula.
    FellerCheck(FellerArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, env = "PERMCHAR_SEED")]
    seed: u64,
    /// Also emit the permutation (uses the Chinese restaurant process).
    #[arg(long)]
    permutations: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct CltArgs {
    /// Config file, or `-` for stdin.
    config: PathBuf,
    /// Master seed used when the config has none.
    #[arg(long, env = "PERMCHAR_SEED")]
    seed: Option<u64>,
    /// Thread count; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Per-sample CSV dump.
    #[arg(long)]
    dump_samples: Option<PathBuf>,
}

#[derive(Args)]
struct DiscrepancyArgs {
    /// One or two angles (comma separated).
    #[arg(long, value_delimiter = ',', num_args = 1..=2, required = true, allow_negative_numbers = true)]
    kronecker: Vec<f64>,
    #[arg(long)]
    n: usize,
    /// Frequency cutoff for the Erdos-Turan-Koksma bound.
    #[arg(long = "etk-H")]
    etk_h: Option<usize>,
    /// Box margin for the Koksma-Hlawka bound; defaults to K / n^gamma from a finite-type certificate.
    #[arg(long)]
    delta: Option<f64>,
    /// Search range for the certificate when no preset applies.
    #[arg(long, default_value_t = 1000)]
    certificate_h: usize,
}

#[derive(Args)]
struct ConstantsArgs {
    /// Spectral function label: charpoly, sympart, antisympart or constant:<c>. Repeatable.
    #[arg(long = "function", required = true)]
    functions: Vec<String>,
    /// Emit the limiting covariance instead of the per-function constants.
    #[arg(long)]
    covariance: bool,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    theta: f64,
}

#[derive(Args)]
struct FellerArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, allow_negative_numbers = true)]
    theta: f64,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<permchar_core::Error> for CliError {
    fn from(e: permchar_core::Error) -> Self {
        use permchar_core::Error as E;
        match e {
            E::InvalidTheta(_)
            | E::InvalidArgument(_)
            | E::InvalidModel(_)
            | E::InvalidCoefficients(_)
            | E::InvalidCycleType(_)
            | E::InvalidPermutation(_)
            | E::SizeLimit { .. }
            | E::DimensionUnsupported(_)
            | E::RegimeViolation(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Sample(a) => cmd_sample(a, cli.out.as_deref()),
        Command::Clt(a) => cmd_clt(a, cli.out.as_deref()),
        Command::Discrepancy(a) => cmd_discrepancy(a, cli.out.as_deref()),
        Command::Constants(a) => cmd_constants(a, cli.out.as_deref()),
        Command::FellerCheck(a) => cmd_feller_check(a, cli.out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn open_output(out: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn theta_param(t: f64) -> CliResult<EwensParameter> {
    EwensParameter::new(t).map_err(|e| CliError::Usage(format!("schema error: theta: {e}")))
}

#[derive(Serialize)]
struct SampleRow {
    counts: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    permutation: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct SampleOutput {
    n: usize,
    theta: f64,
    seed: u64,
    samples: Vec<SampleRow>,
}

fn cmd_sample(a: &SampleArgs, out: Option<&Path>) -> CliResult<()> {
    let theta = theta_param(a.theta)?;
    if a.n == 0 {
        return Err(CliError::Usage("schema error: n must be >= 1".into()));
    }
    let samples: Vec<SampleRow> = (0..a.count as u64)
        .map(|i| {
            let mut rng = derive_stream(a.seed, i);
            if a.permutations {
                let p = sample_permutation_crp(a.n, theta, &mut rng);
                SampleRow { counts: p.cycle_type().counts().to_vec(), permutation: Some(p.images().to_vec()) }
            } else {
                let ct = cycle_counts_from_chain(&sample_feller_chain(a.n, theta, &mut rng));
                SampleRow { counts: ct.counts().to_vec(), permutation: None }
            }
        })
        .collect();
    match a.format {
        Format::Json => write_json(&SampleOutput { n: a.n, theta: a.theta, seed: a.seed, samples }, out),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(open_output(out)?);
            let mut header = vec!["sample_index", "num_cycles", "counts"];
            if a.permutations {
                header.push("permutation");
            }
            w.write_record(&header)?;
            for (i, s) in samples.iter().enumerate() {
                let join = |v: &[usize]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
                let mut rec = vec![i.to_string(), s.counts.iter().sum::<usize>().to_string(), join(&s.counts)];
                if let Some(p) = &s.permutation {
                    rec.push(join(p));
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn read_config(a: &CltArgs) -> CliResult<ExperimentConfig> {
    let mut text = String::new();
    if a.config.as_os_str() == "-" {
        io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(&a.config)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", a.config.display())))?;
    }
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
    if let Some(v) = value.get("version") {
        if v.as_u64() != Some(CONFIG_VERSION as u64) {
            return Err(CliError::Usage(format!("unsupported config version {v}; expected {CONFIG_VERSION}")));
        }
    }
    let schema: serde_json::Value = serde_json::from_str(CONFIG_SCHEMA).expect("shipped schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("shipped schema compiles");
    let errors: Vec<String> = validator.iter_errors(&value).map(|e| format!("{}: {e}", e.instance_path)).collect();
    if !errors.is_empty() {
        return Err(CliError::Usage(format!("schema error: {}", errors.join("; "))));
    }
    if let Some(obj) = value.as_object_mut() {
        if !obj.contains_key("master_seed") {
            let seed = a
                .seed
                .ok_or_else(|| CliError::Usage("config has no master_seed; pass --seed or set PERMCHAR_SEED".into()))?;
            obj.insert("master_seed".into(), seed.into());
        }
        if let Some(w) = a.workers {
            obj.insert("workers".into(), w.into());
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("schema error: {e}")))
}

fn dump_samples(result: &ExperimentResult, path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(DUMP_HEADER)?;
    for (i, s) in result.samples.iter().enumerate() {
        for (j, pair) in s.chunks(2).enumerate() {
            w.write_record([i.to_string(), j.to_string(), pair[0].to_string(), pair[1].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_clt(a: &CltArgs, out: Option<&Path>) -> CliResult<()> {
    let cfg = read_config(a)?;
    let result = run_experiment(&cfg)?;
    if result.exploratory {
        log::warn!("exploratory configuration: no limit theorem covers a shared multiplier model");
    }
    if let Some(p) = &a.dump_samples {
        dump_samples(&result, p)?;
    }
    write_json(&result, out)
}

fn log_sine(x: f64) -> f64 {
    (2.0 * (std::f64::consts::PI * x).sin()).ln()
}

fn cmd_discrepancy(a: &DiscrepancyArgs, out: Option<&Path>) -> CliResult<()> {
    if a.n == 0 {
        return Err(CliError::Usage("n must be >= 1".into()));
    }
    let phis = &a.kronecker;
    let seq = kronecker(phis, a.n);
    let exact = star_discrepancy_exact(&seq)?;
    let etk = match a.etk_h {
        Some(h) => match etk_bound(phis, a.n, h) {
            Ok(b) => Some(b),
            Err(permchar_core::Error::ResonantFrequency { q }) => {
                log::warn!("no ETK bound: resonant frequency {q:?}");
                None
            }
            Err(e) => return Err(e.into()),
        },
        None => None,
    };
    let delta = match a.delta {
        Some(d) if d > 0.0 && d < 0.5 => Some(d),
        Some(d) => return Err(CliError::Usage(format!("delta must lie in (0, 1/2), got {d}"))),
        None => {
            let cert = finite_type_certificate(phis, a.certificate_h)?;
            cert.is_valid().then(|| cert.delta(a.n))
        }
    };
    let kh_bound = match delta {
        Some(d) => {
            let kh = if phis.len() == 1 {
                kh_error_bound_1d(log_sine, &seq, d)
            } else {
                kh_error_bound_product(log_sine, log_sine, &seq, d)
            };
            match kh {
                Ok(k) => Some(k.bound),
                Err(e @ permchar_core::Error::PointOutsideBox { .. }) => {
                    log::warn!("no Koksma-Hlawka bound: {e}");
                    None
                }
                Err(e) => return Err(e.into()),
            }
        }
        None => None,
    };
    let report = DiscrepancyReport { n: a.n, d: phis.len(), exact, etk, kh_bound, delta };
    write_json(&report, out)
}

#[derive(Serialize)]
struct NamedConstants {
    function: String,
    #[serde(flatten)]
    constants: LimitConstants,
}

fn cmd_constants(a: &ConstantsArgs, out: Option<&Path>) -> CliResult<()> {
    let fs = a.functions.iter().map(|l| SpectralFunction::from_label(l)).collect::<Result<Vec<_>, _>>()?;
    if a.covariance {
        theta_param(a.theta)?;
        return write_json(&covariance_matrix(&fs, a.theta)?, out);
    }
    let mut named = Vec::with_capacity(fs.len());
    for (label, f) in a.functions.iter().zip(&fs) {
        named.push(NamedConstants { function: label.clone(), constants: limit_constants(f)? });
    }
    if named.len() == 1 {
        write_json(&named[0], out)
    } else {
        write_json(&named, out)
    }
}

#[derive(Serialize)]
struct FellerReport {
    n: usize,
    theta: f64,
    partitions: usize,
    max_abs_error: f64,
}

fn cmd_feller_check(a: &FellerArgs, out: Option<&Path>) -> CliResult<()> {
    let theta = theta_param(a.theta)?;
    let exact = exact_feller_distribution(a.n, theta)?;
    let parts = partitions(a.n);
    let max_abs_error = parts
        .iter()
        .map(|ct| (exact.get(ct).copied().unwrap_or(0.0) - esf_probability(ct, theta)).abs())
        .fold(0.0, f64::max);
    write_json(&FellerReport { n: a.n, theta: a.theta, partitions: parts.len(), max_abs_error }, out)?;
    if max_abs_error > FELLER_TOL {
        return Err(CliError::Runtime(format!("Feller law deviates from the Ewens law by {max_abs_error:e}")));
    }
    Ok(())
}
