use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use signmix::bench::{
    alternating_fixture, build_alternating_model, run_compare, Method, RunConfig,
};
use signmix::component::Family;
use signmix::error::{PairError, PairingError};
use signmix::invcdf::{InverseCdf, DEFAULT_PRECISION, DEFAULT_TABLE_SIZE};
use signmix::io::{parse_model, write_model};
use signmix::mixture::{vanilla_sample_model, SignedMixture};
use signmix::modelgen::{generate, GenMethod, GenSpec};
use signmix::pairing::optimal_pairing;
use signmix::rng::{mix_seed, RngStream};
use signmix::validate::validate_model;

const EXIT_VALIDATION: u8 = 2;
const EXIT_GENERATION: u8 = 3;
const EXIT_OVERFLOW: u8 = 4;
const EXIT_OTHER: u8 = 1;

#[derive(Parser)]
#[command(
    name = "signmix",
    version,
    about = "Exact sampling from signed Normal and Gamma mixtures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Normal,
    Gamma,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Normal => Family::Normal,
            FamilyArg::Gamma => Family::Gamma,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Vanilla,
    Stratified,
    Invcdf,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a model file describes a non-negative density.
    Validate { model: PathBuf },
    /// Draw samples, one per line.
    Sample {
        model: PathBuf,
        #[arg(long, value_enum, default_value = "stratified")]
        method: MethodArg,
        #[arg(long, default_value_t = 0.6)]
        delta: f64,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: f64,
        /// Write draws here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the pairing and partitions to stderr.
        #[arg(long)]
        dump: bool,
    },
    /// Run the method comparison and print the result table.
    Compare {
        model: PathBuf,
        /// Comma-separated subset of vanilla,stratified,invcdf.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: f64,
        /// Run cells on a thread pool.
        #[arg(long)]
        parallel: bool,
        /// Write the result table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the R_n / Q_n table here (default: stderr).
        #[arg(long)]
        efficiency: Option<PathBuf>,
    },
    /// Generate random benchmark models.
    Generate {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Component count range, e.g. 5-10.
        #[arg(long, default_value = "5-10")]
        k_range: String,
        /// Vanilla acceptance bracket, e.g. 0.2,0.3.
        #[arg(long, default_value = "0.2,0.3")]
        p_range: String,
        #[arg(long, default_value_t = 1)]
        method: u8,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for model_<i>.txt files; stdout when absent.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Write an alternating benchmark model.
    Alternating {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Number of pairs (default 51 for Normal, 41 for Gamma).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print closed-form and shortcut a* per pair to stderr.
        #[arg(long)]
        report: bool,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(EXIT_OTHER, e.to_string())
    }
}

fn pairing_failure(e: PairingError) -> Failure {
    let code = match e {
        PairingError::Pair(PairError::PartitionOverflow { .. }) => EXIT_OVERFLOW,
        _ => EXIT_OTHER,
    };
    Failure::new(code, e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { model } => {
            let m = read_model(&model)?;
            let report = validate_model(&m);
            println!("{report}");
            if report.is_valid() {
                Ok(())
            } else {
                Err(Failure::new(
                    EXIT_VALIDATION,
                    "model is not a valid density",
                ))
            }
        }
        Command::Sample {
            model,
            method,
            delta,
            eps,
            n,
            seed,
            precision,
            out,
            dump,
        } => {
            let m = load_valid(&model)?;
            let mut rng = RngStream::new(seed);
            let (draws, proposed) = match method {
                MethodArg::Vanilla => vanilla_sample_model(&m, n, &mut rng),
                MethodArg::Stratified => {
                    let p = optimal_pairing(&m, delta, eps).map_err(pairing_failure)?;
                    p.prepare().map_err(pairing_failure)?;
                    if dump {
                        eprint!("{}", p.dump());
                    }
                    p.sample_n(n, &mut rng).map_err(pairing_failure)?
                }
                MethodArg::Invcdf => {
                    let inv = InverseCdf::new(&m, DEFAULT_TABLE_SIZE, precision)
                        .map_err(|e| Failure::new(EXIT_OTHER, e.to_string()))?;
                    let draws = (0..n)
                        .map(|_| inv.sample(&mut rng))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| Failure::new(EXIT_OTHER, e.to_string()))?;
                    (draws, n as u64)
                }
            };
            let mut text = String::with_capacity(draws.len() * 20);
            for x in &draws {
                text.push_str(&format!("{x:?}\n"));
            }
            emit(out.as_deref(), &text)?;
            eprintln!(
                "accepted {} proposed {} ratio {:.6}",
                draws.len(),
                proposed,
                draws.len() as f64 / proposed.max(1) as f64
            );
            Ok(())
        }
        Command::Compare {
            model,
            methods,
            deltas,
            epsilons,
            ns,
            seed,
            precision,
            parallel,
            out,
            efficiency,
        } => {
            let m = load_valid(&model)?;
            let mut cfg = RunConfig {
                seed,
                precision,
                parallel,
                ..RunConfig::default()
            };
            if let Some(list) = methods {
                cfg.methods = list
                    .iter()
                    .map(|s| s.parse::<Method>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| Failure::new(EXIT_OTHER, e))?;
            }
            if let Some(d) = deltas {
                cfg.deltas = d;
            }
            if let Some(e) = epsilons {
                cfg.epsilons = e;
            }
            if let Some(n) = ns {
                if n.contains(&0) {
                    return Err(Failure::new(EXIT_OTHER, "sample sizes must be at least 1"));
                }
                cfg.ns = n;
            }
            let report = run_compare(&m, &cfg);
            emit(out.as_deref(), &report.table())?;
            match efficiency {
                Some(path) => fs::write(path, report.efficiency_table())?,
                None => eprint!("{}", report.efficiency_table()),
            }
            for e in report.errors() {
                eprintln!("cell failed: {e}");
            }
            Ok(())
        }
        Command::Generate {
            family,
            k_range,
            p_range,
            method,
            count,
            seed,
            out_dir,
        } => {
            let bad = |m: String| Failure::new(EXIT_GENERATION, m);
            let k_range = parse_pair::<usize>(&k_range, '-').map_err(bad)?;
            let p_range = parse_pair::<f64>(&p_range, ',').map_err(bad)?;
            let method = GenMethod::from_number(method)
                .ok_or_else(|| bad(format!("method must be 1 or 2, got {method}")))?;
            if let Some(dir) = &out_dir {
                fs::create_dir_all(dir)?;
            }
            for i in 0..count {
                let spec = GenSpec {
                    family: family.into(),
                    k_range,
                    p_range,
                    method,
                    seed: if count == 1 {
                        seed
                    } else {
                        mix_seed(seed, i as u64)
                    },
                };
                let g = generate(&spec).map_err(|e| bad(e.to_string()))?;
                match &out_dir {
                    Some(dir) => fs::write(dir.join(format!("model_{i}.txt")), g.to_file())?,
                    None => print!("{}", g.to_file()),
                }
            }
            Ok(())
        }
        Command::Alternating {
            family,
            k,
            out,
            report,
        } => {
            let fixture = match k {
                Some(k) if k > 0 => build_alternating_model(family.into(), k),
                Some(_) => return Err(Failure::new(EXIT_OTHER, "need at least one pair")),
                None => alternating_fixture(family.into()),
            };
            emit(out.as_deref(), &write_model(&fixture.model))?;
            if report {
                eprint!("{}", fixture.a_star_report());
            }
            eprintln!(
                "vanilla acceptance {:.6}",
                1.0 / fixture.model.positive_total()
            );
            Ok(())
        }
    }
}

fn parse_pair<T: std::str::FromStr>(s: &str, sep: char) -> Result<(T, T), String> {
    let (a, b) = s
        .split_once(sep)
        .ok_or_else(|| format!("expected two values separated by `{sep}` in `{s}`"))?;
    let p = |v: &str| {
        v.trim()
            .parse::<T>()
            .map_err(|_| format!("cannot parse `{v}` in `{s}`"))
    };
    Ok((p(a)?, p(b)?))
}

fn read_model(path: &Path) -> Result<SignedMixture, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_OTHER, format!("{}: {e}", path.display())))?;
    parse_model(&text)
        .map_err(|e| Failure::new(EXIT_VALIDATION, format!("{}: {e}", path.display())))
}

/// Parses and validates, returning the normalized model.
fn load_valid(path: &Path) -> Result<SignedMixture, Failure> {
    let m = read_model(path)?;
    let report = validate_model(&m);
    if !report.is_valid() {
        return Err(Failure::new(EXIT_VALIDATION, report.to_string()));
    }
    if !report.is_normalized() {
        eprintln!("note: model renormalized by {}", report.total_weight);
    }
    Ok(report.normalized.unwrap_or(m))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
