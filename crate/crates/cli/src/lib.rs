//! Command-line front end. [`execute`] parses an argument vector, runs one
//! subcommand and returns the process exit code: 0 on success, 1 when a
//! checked condition fails, 2 on a usage error.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use spherecode::codes::{census, exact_distribution, generate, read_code, write_code, Scalar, SphericalCode};
use spherecode::exactmath::{format_rational, parse_rational};
use spherecode::lpbound::{
    catalog_certificate, tightness_report, verify_certificate, weak_stability_constants, Certificate,
    CertificateFile,
};
use spherecode::perturb::{perturb_code, stability_sweep, Strategy};
use spherecode::specstab::{aligned_sqrt_pair, almost_perp, read_matrix_csv, strong_stability_constant, SpectralSummary};
use spherecode::{Error, Rational};

/// Pairwise work on codes larger than this needs `--heavy`.
pub const HEAVY_POINTS: usize = 20_000;

#[derive(Parser, Debug)]
#[command(name = "spherecode", version, about = "Spherical codes, exact LP certificates and stability diagnostics")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Require exact rational arithmetic; fails if the code has no integer model
    #[arg(long, global = true)]
    exact: bool,
    /// Allow pairwise work on codes with more than 20000 points (Leech minimal vectors)
    #[arg(long, global = true)]
    heavy: bool,
    /// Print CSV instead of JSON where the report is a table
    #[arg(long, global = true)]
    csv: bool,
    /// Size of the worker thread pool
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    /// Write the report to this path (a directory for `sweep`)
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Seed for every random draw
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
struct CodeSource {
    /// Catalog code: simplex(d) simplex(d,N) cross_polytope(d) ngon(N) icosahedron cell600 e8_roots leech_minimal kissing(d)
    #[arg(long)]
    code: Option<String>,
    /// Code file in the format written by `gen`
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a catalog spherical code: simplex, cross-polytope, regular polygon,
    /// icosahedron, 600-cell, E8 root system, Leech lattice minimal vectors, or a
    /// kissing configuration cut from E8 or Leech
    Gen {
        #[arg(long)]
        code: String,
    },
    /// Verify a Delsarte linear programming certificate in the Gegenbauer basis
    /// with exact rationals and print the bound f(1)/f_0
    Bound {
        /// Certificate JSON file, or a catalog name (e8, leech, cross_polytope(d), simplex(d))
        #[arg(long)]
        cert: String,
        /// Override the certificate threshold s
        #[arg(long)]
        s: Option<String>,
    },
    /// Check that a code attains a Delsarte LP bound: zero LP slack and
    /// vanishing Gegenbauer component sums for every positive coefficient
    VerifyTight {
        #[command(flatten)]
        source: CodeSource,
        #[arg(long)]
        cert: String,
    },
    /// Inner-product census: ordered pairs bucketed at reference values, with a catch-all
    Census {
        #[command(flatten)]
        source: CodeSource,
        /// Comma-separated increasing reference values; defaults to the exact distribution
        #[arg(long)]
        refs: Option<String>,
        /// Bucket half-width for float codes
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Weak (Gram matrix) stability constants of a certificate and, given a
    /// code, the strong (point set) Hoelder constant with its spectral inputs
    Constants {
        #[arg(long)]
        cert: String,
        /// Code size; defaults to the bound when it is an integer
        #[arg(long)]
        n: Option<u64>,
        /// Tight code whose Gram matrix supplies the spectral norm and gap
        #[arg(long)]
        code: Option<String>,
    },
    /// Aligned positive semidefinite square roots P, Q of nearby Gram matrices
    /// A, B with ||P - Q|| bounded by the spectral gap constant
    SqrtStability {
        /// Perturbed Gram matrix as CSV
        #[arg(long, requires = "b", conflicts_with = "code")]
        a: Option<PathBuf>,
        /// Reference Gram matrix as CSV
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
        /// Use the Gram matrix of this catalog code as B and a tangent perturbation as A
        #[arg(long, required_unless_present = "a")]
        code: Option<String>,
        /// Perturbation size for --code
        #[arg(long, default_value_t = 1e-14)]
        eta: f64,
    },
    /// Perturbation sweep of a tight code: Gram deviation and aligned point
    /// distance against the weak and strong stability bounds, with a log-log fit
    Sweep {
        #[command(flatten)]
        source: CodeSource,
        #[arg(long)]
        cert: String,
        /// Comma-separated epsilon grid
        #[arg(long, default_value = "1e-6,1e-5,1e-4,1e-3")]
        eps: String,
        /// Trials per epsilon
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// tangent_noise or pair_stretch
        #[arg(long, default_value = "tangent_noise")]
        strategy: String,
    },
    /// Almost-perpendicular estimate: angle between x and the unit normal of
    /// span(z_1, ..., z_{d-1}) against (pi/2) sqrt((d-1)/lambda_1) delta
    AlmostPerp {
        /// Comma-separated coordinates of x
        #[arg(long)]
        x: String,
        /// CSV file with one vector z_i per row
        #[arg(long, value_name = "FILE")]
        z: PathBuf,
        /// Bound on |<x, z_i>|; defaults to the observed maximum
        #[arg(long)]
        delta: Option<f64>,
    },
}

/// Why a subcommand stopped.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::CertificateRejected(_)
            | Error::StrayPairs { .. }
            | Error::NotSymmetric(_)
            | Error::RankMismatch(_)
            | Error::OutsideRegime(_)
            | Error::Degenerate(_) => Failure::Check(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn execute<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let run = || dispatch(&cli.global, &cli.cmd);
    let outcome = match cli.global.threads {
        Some(0) => Err(Failure::Usage("--threads must be positive".into())),
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(Failure::Usage(format!("cannot build thread pool: {e}"))),
        },
        None => run(),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Check(msg)) => {
            eprintln!("verification failed: {msg}");
            1
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn dispatch(g: &Global, cmd: &Command) -> Outcome {
    match cmd {
        Command::Gen { code } => cmd_gen(g, code),
        Command::Bound { cert, s } => cmd_bound(g, cert, s.as_deref()),
        Command::VerifyTight { source, cert } => cmd_verify_tight(g, source, cert),
        Command::Census { source, refs, tol } => cmd_census(g, source, refs.as_deref(), *tol),
        Command::Constants { cert, n, code } => cmd_constants(g, cert, *n, code.as_deref()),
        Command::SqrtStability { a, b, code, eta } => cmd_sqrt(g, a.as_deref(), b.as_deref(), code.as_deref(), *eta),
        Command::Sweep { source, cert, eps, trials, strategy } => cmd_sweep(g, source, cert, eps, *trials, strategy),
        Command::AlmostPerp { x, z, delta } => cmd_almost_perp(g, x, z, *delta),
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Sends `text` to `--out` when given, else to stdout.
fn emit(g: &Global, text: &str) -> Outcome {
    match &g.out {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| usage(e.to_string()))
        }
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn load_code(g: &Global, src: &CodeSource) -> std::result::Result<SphericalCode, Failure> {
    let c = match (&src.code, &src.input) {
        (Some(name), _) => generate(name)?,
        (None, Some(path)) => {
            let f = fs::File::open(path).map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
            let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
            read_code(BufReader::new(f), label)?
        }
        (None, None) => return Err(usage("give --code or --input")),
    };
    if g.exact && c.exact_model().is_none() {
        return Err(usage(format!("{} has no exact model; drop --exact", c.label())));
    }
    Ok(c)
}

fn require_heavy(g: &Global, c: &SphericalCode) -> Outcome {
    if c.len() > HEAVY_POINTS && !g.heavy {
        return Err(usage(format!("{} has {} points; pass --heavy for pairwise work", c.label(), c.len())));
    }
    Ok(())
}

/// A certificate from a JSON file or a catalog name, optionally re-verified at a new threshold.
fn load_cert(spec: &str, s: Option<&str>) -> std::result::Result<Certificate, Failure> {
    let path = Path::new(spec);
    let (dim, expansion, threshold) = if path.is_file() {
        let file = CertificateFile::load(path)?;
        (file.dim, file.expansion()?, file.threshold()?)
    } else {
        let c = catalog_certificate(spec)
            .map_err(|_| usage(format!("`{spec}` is neither a certificate file nor a catalog certificate")))?;
        (c.dim, c.expansion, c.s)
    };
    let threshold = match s {
        Some(s) => parse_rational(s)?,
        None => threshold,
    };
    Ok(verify_certificate(dim, &expansion, &threshold)?)
}

fn parse_list<T>(s: &str, parse: impl Fn(&str) -> std::result::Result<T, Failure>) -> std::result::Result<Vec<T>, Failure> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| parse(t.trim())).collect()
}

fn parse_f64(t: &str) -> std::result::Result<f64, Failure> {
    t.parse::<f64>().map_err(|_| usage(format!("not a number: `{t}`")))
}

fn scalar_text(v: &Scalar) -> String {
    match v {
        Scalar::Exact(r) => format_rational(r),
        Scalar::Approx(x) => format!("{x:e}"),
    }
}

fn cmd_gen(g: &Global, name: &str) -> Outcome {
    let c = load_code(g, &CodeSource { code: Some(name.to_string()), input: None })?;
    let mut buf = Vec::new();
    write_code(&c, &mut buf)?;
    emit(g, &String::from_utf8(buf).expect("code files are ascii"))
}

fn cmd_bound(g: &Global, cert: &str, s: Option<&str>) -> Outcome {
    let c = load_cert(cert, s)?;
    println!("bound = {}", format_rational(&c.bound));
    if g.out.is_some() {
        emit(g, &pretty(&c.to_json()))?;
    }
    Ok(())
}

fn cmd_verify_tight(g: &Global, src: &CodeSource, cert: &str) -> Outcome {
    let c = load_code(g, src)?;
    require_heavy(g, &c)?;
    let cert = load_cert(cert, None)?;
    let rep = tightness_report(&c, &cert)?;
    let sums: Vec<&Scalar> = rep.component_sums.iter().map(|(_, v)| v).collect();
    let sums_text = if sums.iter().all(|v| v.is_zero()) {
        format!("0×{}", sums.len())
    } else {
        sums.iter().map(|v| scalar_text(v)).collect::<Vec<_>>().join(", ")
    };
    println!("tight: {}; component sums: {}", rep.is_tight, sums_text);
    if g.out.is_some() {
        emit(g, &pretty(&rep.to_json()))?;
    }
    if !rep.applicable {
        let m = rep.max_offdiag.as_ref().map(scalar_text).unwrap_or_default();
        return Err(Failure::Check(format!(
            "largest inner product {m} exceeds s = {}",
            format_rational(&cert.s)
        )));
    }
    if !rep.is_tight {
        let slack = rep.lp_slack.as_ref().map(scalar_text).unwrap_or_default();
        return Err(Failure::Check(format!("code is not tight: N = {}, LP slack = {slack}", rep.n)));
    }
    Ok(())
}

fn cmd_census(g: &Global, src: &CodeSource, refs: Option<&str>, tol: f64) -> Outcome {
    let c = load_code(g, src)?;
    require_heavy(g, &c)?;
    let refs: Vec<Rational> = match refs {
        Some(r) => parse_list(r, |t| Ok(parse_rational(t)?))?,
        None if c.exact_model().is_some() => exact_distribution(&c)?.values().into_iter().map(|v| v.0).collect(),
        None => return Err(usage("float codes need --refs")),
    };
    let cen = census(&c, &refs, tol)?;
    let text = if g.csv { cen.to_csv() } else { pretty(&cen.to_json()) };
    emit(g, &text)?;
    if let Some(first) = cen.first_stray.filter(|_| cen.catch_all > 0) {
        return Err(Error::StrayPairs { count: cen.catch_all, first }.into());
    }
    Ok(())
}

fn cmd_constants(g: &Global, cert: &str, n: Option<u64>, code: Option<&str>) -> Outcome {
    let cert = load_cert(cert, None)?;
    let n = match n {
        Some(n) => n,
        None if cert.bound.is_integer() => cert
            .bound
            .to_integer()
            .try_into()
            .map_err(|_| usage("bound does not fit in u64; pass --n"))?,
        None => return Err(usage(format!("bound {} is not an integer; pass --n", format_rational(&cert.bound)))),
    };
    let weak = weak_stability_constants(&cert, n)?;
    let mut report = serde_json::json!({ "weak": weak.to_json() });
    if let Some(name) = code {
        let c = load_code(g, &CodeSource { code: Some(name.to_string()), input: None })?;
        if c.dim() != cert.dim {
            return Err(Error::DimensionMismatch { expected: cert.dim, got: c.dim() }.into());
        }
        let spectral = match SpectralSummary::of_tight_frame(&c) {
            Ok(s) => s,
            Err(_) if c.len() <= 2000 => {
                SpectralSummary::of_matrix(&DMatrix::from_row_slice(c.len(), c.len(), &c.gram_f64()))?
            }
            Err(e) => return Err(e.into()),
        };
        let strong = strong_stability_constant(&spectral, weak.k, weak.m, c.dim());
        report["spectral"] = serde_json::json!({ "n": spectral.n, "norm": spectral.norm, "delta": spectral.delta });
        report["strong"] = serde_json::json!({
            "C": strong.value,
            "log10_C": strong.log10,
            "exponent": strong.exponent,
            "remark_K": strong.remark_k,
        });
    }
    emit(g, &pretty(&report))
}

fn read_matrix(path: &Path) -> std::result::Result<DMatrix<f64>, Failure> {
    let f = fs::File::open(path).map_err(|e| usage(format!("cannot open {}: {e}", path.display())))?;
    Ok(read_matrix_csv(f)?)
}

fn cmd_sqrt(g: &Global, a: Option<&Path>, b: Option<&Path>, code: Option<&str>, eta: f64) -> Outcome {
    let (a, b) = match (a, b, code) {
        (Some(a), Some(b), _) => (read_matrix(a)?, read_matrix(b)?),
        (_, _, Some(name)) => {
            let c = load_code(g, &CodeSource { code: Some(name.to_string()), input: None })?;
            require_heavy(g, &c)?;
            let p = perturb_code(&c, eta, Strategy::TangentNoise, g.seed)?;
            let n = c.len();
            (DMatrix::from_row_slice(n, n, &p.gram_f64()), DMatrix::from_row_slice(n, n, &c.gram_f64()))
        }
        _ => return Err(usage("give --a and --b, or --code")),
    };
    let res = aligned_sqrt_pair(&a, &b)?;
    emit(g, &pretty(&res.to_json()))?;
    if !res.bound_satisfied {
        return Err(Failure::Check(format!("||P - Q|| = {:e} exceeds K delta = {:e}", res.p_minus_q, res.k * res.delta)));
    }
    Ok(())
}

fn cmd_sweep(g: &Global, src: &CodeSource, cert: &str, eps: &str, trials: usize, strategy: &str) -> Outcome {
    let c = load_code(g, src)?;
    require_heavy(g, &c)?;
    let cert = load_cert(cert, None)?;
    let strategy: Strategy = strategy.parse().map_err(|e: Error| usage(e.to_string()))?;
    let eps = parse_list(eps, parse_f64)?;
    let rep = stability_sweep(&c, &cert, &eps, trials, g.seed, strategy)?;
    match &g.out {
        Some(dir) => {
            let write = |name: &str, text: &str| {
                fs::write(dir.join(name), text).map_err(|e| usage(format!("cannot write {}: {e}", dir.join(name).display())))
            };
            fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
            write("sweep.csv", &rep.to_csv())?;
            write("sweep.json", &pretty(&rep.to_json()))?;
            write("sweep.dat", &rep.to_plot_data())?;
            match rep.fitted_exponent {
                Some(x) => println!("fitted exponent = {x:.4}"),
                None => println!("fitted exponent = n/a"),
            }
        }
        None if g.csv => print!("{}", rep.to_csv()),
        None => print!("{}", pretty(&rep.to_json())),
    }
    let broken = rep.trials.iter().find(|t| t.within_weak_regime && !(t.weak_bound_ok && t.strong_bound_ok));
    if let Some(t) = broken {
        return Err(Failure::Check(format!(
            "stability bound violated at epsilon = {:e}, trial {}: gram deviation {:e}, aligned angle {:e}",
            t.epsilon, t.trial, t.gram_max_dev, t.aligned_max_angle
        )));
    }
    Ok(())
}

fn cmd_almost_perp(g: &Global, x: &str, z: &Path, delta: Option<f64>) -> Outcome {
    let x = parse_list(x, parse_f64)?;
    let rows = read_matrix(z)?;
    if rows.ncols() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: rows.ncols() }.into());
    }
    let zt = rows.transpose();
    let xv = nalgebra::DVector::from_column_slice(&x);
    let observed = zt.column_iter().map(|c| c.dot(&xv).abs()).fold(0.0, f64::max);
    let delta = delta.unwrap_or(observed);
    if observed > delta {
        return Err(Failure::Check(format!("max |<x, z_i>| = {observed:e} exceeds delta = {delta:e}")));
    }
    let res = almost_perp(&x, &zt, delta)?;
    let report = serde_json::json!({
        "delta": delta,
        "lambda1": res.lambda1,
        "bound": res.bound,
        "angle": res.actual_angle,
        "normal": res.z_perp,
    });
    emit(g, &pretty(&report))?;
    if res.actual_angle > res.bound {
        return Err(Failure::Check(format!("angle {:e} exceeds bound {:e}", res.actual_angle, res.bound)));
    }
    Ok(())
}
