use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mprony::bench::{run_bench, BenchConfig, BenchKind};
use mprony::io::{self, InstanceFile, SolutionFile, SparseFile};
use mprony::linalg::CMat;
use mprony::recover::sparse::{default_sampling_matrix, sparse_from_grid, sparse_poly_solve, Fewnomial};
use mprony::recover::{safe_n, SolveOptions};
use mprony::sampler::{flat_extension_fixture, random_instance, sample_lattice, InstanceKind, NoiseSpec};
use mprony::{Execution, PronyError, Result, Threshold};
use num_complex::Complex64;

#[derive(Parser)]
#[command(name = "mprony", version, about = "Multivariate Prony reconstruction of exponential sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance and its lattice samples.
    Simulate(SimulateArgs),
    /// Recover frequencies and coefficients from a samples file.
    Solve(SolveArgs),
    /// Run randomized trials and report average and maximal errors.
    Bench(BenchArgs),
    /// Recover a sparse polynomial from evaluations at e^{Xγ}.
    Sparse(SparseArgs),
}

#[derive(Args)]
struct SolverFlags {
    /// Singular-value threshold: `machine`, `noise` (scaled by --epsilon) or a fixed number.
    #[arg(long, default_value = "machine")]
    threshold: String,
    /// Noise level of the samples.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Treat commutator and verification warnings as errors.
    #[arg(long)]
    strict: bool,
}

impl SolverFlags {
    fn threshold(&self) -> Result<Threshold> {
        parse_threshold(&self.threshold, self.epsilon)
    }

    fn options(&self) -> Result<SolveOptions> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(PronyError::InvalidArgument("--epsilon must be nonnegative".into()));
        }
        Ok(SolveOptions {
            threshold: self.threshold()?,
            seed: self.seed,
            strict: self.strict,
            noise_level: self.epsilon,
            ..SolveOptions::default()
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 2)]
    s: usize,
    /// Required unless --kind fixture.
    #[arg(long)]
    terms: Option<usize>,
    /// Samples cover |γ| <= 2n.
    #[arg(long)]
    n: usize,
    /// real | imaginary | line | coeff_range, or `fixture` for the six-point flat-extension set
    #[arg(long, default_value = "imaginary")]
    kind: String,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for instance.json and samples.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Samples CSV.
    samples: PathBuf,
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    solver: SolverFlags,
    /// Write the solution JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the Hankel blocks and multiplication tables as CSV.
    #[arg(long)]
    dump_matrices: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    s: usize,
    #[arg(long)]
    terms: usize,
    #[arg(long)]
    n: usize,
    /// real | imaginary | line | perturbed
    #[arg(long, default_value = "imaginary")]
    kind: String,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overrides the default threshold: `machine`, `noise` or a number.
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    strict: bool,
    /// Allow problem sizes beyond desk scale.
    #[arg(long)]
    large: bool,
    /// Run trials one after another.
    #[arg(long)]
    sequential: bool,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SparseArgs {
    #[arg(long)]
    s: usize,
    /// Built-in black box, e.g. "3*z1^2*z2 + z2^5".
    #[arg(long, conflicts_with = "samples")]
    poly: Option<String>,
    /// Samples CSV of p(e^{Xγ}) instead of a built-in polynomial.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Sampling matrix: "a,b;c,d" by rows, or s entries for a diagonal; entries like 0.1i or 1-2i.
    #[arg(long)]
    x: Option<String>,
    /// Exponent bound used for the default X.
    #[arg(long, default_value_t = 10)]
    max_exp: u32,
    /// Defaults to the number of terms of --poly.
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_threshold(text: &str, epsilon: f64) -> Result<Threshold> {
    match text {
        "machine" | "eps" => Ok(Threshold::MachineEpsilon),
        "noise" if epsilon > 0.0 => Ok(Threshold::NoiseLevel(epsilon)),
        "noise" => Err(PronyError::InvalidArgument("--threshold noise needs --epsilon > 0".into())),
        other => match other.parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(Threshold::Fixed(t)),
            _ => Err(PronyError::InvalidArgument(format!("bad threshold '{other}'"))),
        },
    }
}

fn parse_complex(text: &str) -> Result<Complex64> {
    let bad = || PronyError::InvalidArgument(format!("bad complex number '{text}'"));
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if let Some(body) = t.strip_suffix('i') {
        // split "a+bi" at the last sign that is not an exponent sign
        let split = body
            .char_indices()
            .rev()
            .find(|&(i, c)| i > 0 && (c == '+' || c == '-') && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
            .map(|(i, _)| i);
        let (re, im) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            v => v.parse().map_err(|_| bad())?,
        };
        Ok(Complex64::new(re.parse().map_err(|_| bad())?, im))
    } else {
        Ok(Complex64::new(t.parse().map_err(|_| bad())?, 0.0))
    }
}

fn parse_matrix(text: &str, s: usize) -> Result<CMat> {
    let rows: Vec<Vec<Complex64>> = text
        .split(';')
        .map(|r| r.split(',').map(parse_complex).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    if rows.len() == 1 && rows[0].len() == s {
        return Ok(CMat::from_diagonal(&rows[0].clone().into()));
    }
    if rows.len() != s || rows.iter().any(|r| r.len() != s) {
        return Err(PronyError::InvalidArgument(format!("--x must be {s}x{s} or {s} diagonal entries")));
    }
    Ok(CMat::from_fn(s, s, |i, j| rows[i][j]))
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> PronyError {
    PronyError::InvalidArgument(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| io_error(path, e))
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| PronyError::InvalidArgument(e.to_string()))?;
    match out {
        Some(p) => fs::write(p, text + "\n").map_err(|e| io_error(p, e)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let (model, kind) = if args.kind == "fixture" {
        if args.s != 2 {
            return Err(PronyError::InvalidArgument("the fixture has s = 2".into()));
        }
        (flat_extension_fixture(), None)
    } else {
        let kind: InstanceKind = args.kind.parse()?;
        let terms = args
            .terms
            .ok_or_else(|| PronyError::InvalidArgument("--terms is required".into()))?;
        (random_instance(args.s, terms, kind, args.seed)?, Some(kind))
    };
    let noise = NoiseSpec::new(args.epsilon, args.seed.wrapping_add(1))?;
    let grid = sample_lattice(&model, args.n, args.n, Some(&noise))?;
    fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
    let inst = args.out.join("instance.json");
    let samples = args.out.join("samples.csv");
    let mut w = create(&inst)?;
    io::write_instance(&mut w, &InstanceFile::new(&model, kind, Some(args.seed)))?;
    writeln!(w).map_err(|e| io_error(&inst, e))?;
    let mut w = create(&samples)?;
    io::write_samples(&mut w, &grid)?;
    w.flush().map_err(|e| io_error(&samples, e))?;
    eprintln!("wrote {} and {}", inst.display(), samples.display());
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let grid = io::read_samples(open(&args.samples)?)?;
    let mut opts = args.solver.options()?;
    opts.keep_matrices = args.dump_matrices.is_some();
    let sol = mprony::prony_solve(&grid, args.n, &opts)?;
    for w in &sol.diagnostics.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &args.dump_matrices {
        let mut named: Vec<(String, &CMat)> = sol
            .matrices
            .iter()
            .enumerate()
            .map(|(k, m)| (format!("F_{}_{k}", args.n), m))
            .collect();
        if let Some(t) = &sol.tables {
            named.extend(t.tables.iter().enumerate().map(|(j, m)| (format!("M_{}", j + 1), m)));
        }
        let mut w = create(path)?;
        io::write_matrices(&mut w, &named)?;
        w.flush().map_err(|e| io_error(path, e))?;
    }
    emit_json(&SolutionFile::new(&sol), args.out.as_deref())
}

fn bench(args: BenchArgs) -> Result<()> {
    let kind: BenchKind = args.kind.parse()?;
    let mut cfg = BenchConfig::new(args.s, args.terms, args.n, kind);
    cfg.epsilon = args.epsilon;
    cfg.trials = args.trials;
    cfg.seed = args.seed;
    cfg.strict = args.strict;
    cfg.large = args.large;
    cfg.threshold = args.threshold.as_deref().map(|t| parse_threshold(t, args.epsilon)).transpose()?;
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let report = run_bench(&cfg, exec)?;
    if let Some(p) = &args.out {
        emit_json(&report, Some(p))?;
    }
    if args.json {
        emit_json(&report, None)
    } else {
        print!("{}", report.table());
        Ok(())
    }
}

fn sparse(args: SparseArgs) -> Result<()> {
    let opts = args.solver.options()?;
    let x = match &args.x {
        Some(t) => parse_matrix(t, args.s)?,
        None => default_sampling_matrix(args.s, args.max_exp, 1),
    };
    let model = match (&args.poly, &args.samples) {
        (Some(text), None) => {
            let poly = Fewnomial::parse(args.s, text)?;
            let n = args.n.unwrap_or_else(|| safe_n(poly.terms.len()));
            sparse_poly_solve(|z| poly.eval(z), args.s, &x, n, &opts)?
        }
        (None, Some(path)) => {
            let n = args
                .n
                .ok_or_else(|| PronyError::InvalidArgument("--n is required with --samples".into()))?;
            let grid = io::read_samples(open(path)?)?;
            if grid.s() != args.s {
                return Err(PronyError::DimensionMismatch { expected: args.s, got: grid.s() });
            }
            sparse_from_grid(&grid, &x, n, &opts)?
        }
        _ => return Err(PronyError::InvalidArgument("give exactly one of --poly or --samples".into())),
    };
    emit_json(&SparseFile::new(&model), args.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Sparse(a) => sparse(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("0.1i").unwrap(), Complex64::new(0.0, 0.1));
        assert_eq!(parse_complex("1-2i").unwrap(), Complex64::new(1.0, -2.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("1e-3+2e-1i").unwrap(), Complex64::new(1e-3, 0.2));
        assert_eq!(parse_complex("3").unwrap(), Complex64::new(3.0, 0.0));
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn matrices_and_thresholds() {
        let d = parse_matrix("0.1i,0.2i", 2).unwrap();
        assert_eq!(d[(1, 1)], Complex64::new(0.0, 0.2));
        assert_eq!(d[(0, 1)], Complex64::new(0.0, 0.0));
        let full = parse_matrix("1,2;3,4", 2).unwrap();
        assert_eq!(full[(1, 0)], Complex64::new(3.0, 0.0));
        assert!(parse_matrix("1,2,3", 2).is_err());
        assert_eq!(parse_threshold("noise", 1e-7).unwrap(), Threshold::NoiseLevel(1e-7));
        assert!(parse_threshold("noise", 0.0).is_err());
        assert_eq!(parse_threshold("1e-9", 0.0).unwrap(), Threshold::Fixed(1e-9));
    }
}
