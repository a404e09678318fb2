//! `qdyn`: command-line front end to the `qdyn` library.
//!
//! Every subcommand writes one artifact (JSON by default, CSV with
//! `--format csv`) that embeds the tool version, the command line, the seed
//! and the tolerance settings used. Exit codes: 0 success, 2 bad arguments,
//! 3 non-convergence, 4 orbit escape, 1 anything else.

use std::fmt::Display;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Map, Value};

use qdyn::moments::{self, IdentityVerdict};
use qdyn::orbit::{self, DynSystem, FiniteMap, QuadraticMap, Rotation, SquaringMap};
use qdyn::perm::{self, L2Vector, PermutationInput};
use qdyn::sampler::{self, RealnessVerdict};
use qdyn::transfer::{self, SystemInput, TransferOp};
use qdyn::{quad, scalar};

const TOOL: &str = "qdyn";
/// Exact certificates square the denominator at each step, so they stay short.
const EXACT_CERT_CAP: usize = 16;

#[derive(Parser)]
#[command(name = "qdyn", version, about = "Orbits, balanced-measure moments and spectral potentials of 1 - a z^2 and finite systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the artifact here instead of standard output
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Seed for randomized subcommands; drawn from entropy and reported on stderr when omitted
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate a map from a starting state and look for a cycle at the end of the orbit
    #[command(allow_negative_numbers = true)]
    Orbit {
        #[command(flatten)]
        system: SystemArgs,
        /// Number of iterations
        #[arg(short, long, default_value_t = 100)]
        n: usize,
        /// Cycle detection tolerance
        #[arg(long, default_value_t = 1e-9)]
        cycle_tol: f64,
    },
    /// Estimate the omega-limit set of a start state by clustering a late orbit segment;
    /// checks that a set containing a periodic point is that single cycle, and probes
    /// minimality and connectivity of the estimate
    #[command(allow_negative_numbers = true)]
    Omega {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long, default_value_t = 1000)]
        tail: usize,
        /// Clustering tolerance
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Density radius for the minimality probe (skipped when absent; must exceed --tol)
        #[arg(long)]
        eps: Option<f64>,
        /// Orbit length per representative in the minimality probe
        #[arg(long, default_value_t = 10_000)]
        probe_steps: usize,
        /// Link radius for the connectivity probe (defaults to 10 * tol)
        #[arg(long)]
        link_radius: Option<f64>,
    },
    /// Classify 1 - a x^2 by which orbit attracts: fixed point (a <= 3/4),
    /// two-cycle (3/4 < a < 5/4) or neither claimed; optionally search for an attracting cycle
    Classify {
        /// Parameter a in (0, 2), exact decimals or p/q accepted
        #[arg(long, value_parser = rational)]
        alpha: BigRational,
        /// Also follow the critical orbit this many steps looking for an attracting cycle (>= 1000)
        #[arg(long)]
        probe_horizon: Option<usize>,
        #[arg(long, default_value_t = 1e-9)]
        probe_tol: f64,
    },
    /// Critical orbit xi_0 = 0, xi_{k+1} = 1 - a xi_k^2
    CriticalOrbit {
        #[arg(long, value_parser = rational)]
        alpha: BigRational,
        #[arg(short, long, default_value_t = 50)]
        n: usize,
    },
    /// Log-derivative growth along the orbit of 1 compared with m^(2/3)
    BcStat {
        #[arg(long, value_parser = rational)]
        alpha: BigRational,
        #[arg(short, long, default_value_t = 100)]
        n: usize,
    },
    /// Exact balanced-measure moments lambda_a(k), k = 0..kmax, as integer polynomials in 1/a
    /// and their values at a
    Moments {
        #[arg(long, default_value_t = 10)]
        kmax: usize,
        #[arg(long, value_parser = rational, default_value = "2")]
        alpha: BigRational,
    },
    /// Polynomials phi_k(a), k = 0..kmax, and the binomial identity they satisfy
    Phi {
        #[arg(long, default_value_t = 5)]
        kmax: usize,
        /// Check the identity for all n up to this bound
        #[arg(long, default_value_t = 20)]
        check_to: usize,
    },
    /// Stieltjes transform of the balanced measure by its moment series, |z| beyond the escape radius
    #[command(allow_negative_numbers = true)]
    Stieltjes {
        #[arg(long, value_parser = rational, default_value = "2")]
        alpha: BigRational,
        #[arg(long)]
        re: f64,
        #[arg(long, default_value_t = 0.0)]
        im: f64,
        #[arg(long, default_value_t = 1e-14)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        terms: usize,
    },
    /// Fourier transform of the balanced measure by two independent series
    #[command(allow_negative_numbers = true)]
    Fourier {
        #[arg(long, value_parser = rational, default_value = "2")]
        alpha: BigRational,
        #[arg(long)]
        z: f64,
        /// Last series index
        #[arg(long, default_value_t = 30)]
        terms: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Sample the balanced measure by random inverse iteration
    SampleJulia {
        #[arg(long, value_parser = rational, default_value = "2")]
        alpha: BigRational,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, default_value_t = sampler::DEFAULT_BURN_IN)]
        burn_in: usize,
        /// Empirical moments up to z^(2 kmax + 1)
        #[arg(long, default_value_t = 5)]
        kmax: usize,
        /// Kolmogorov tolerance for the z -> -z symmetry check
        #[arg(long, default_value_t = 0.02)]
        symmetry_tol: f64,
    },
    /// Certificate that the Julia set is not a real interval: iterate b_0 = a - 1,
    /// b_{n+1} = a b_n^2 - 1 until some b_n <= 0
    RealCert {
        #[arg(long, value_parser = rational)]
        alpha: BigRational,
        #[arg(long, default_value_t = 10_000)]
        cap: usize,
        /// Exact rational arithmetic (cap at most 16)
        #[arg(long)]
        exact: bool,
    },
    /// Spectral measure of the unitary group of a permutation, with group-law checks
    /// and exact autocorrelation of a subset
    #[command(allow_negative_numbers = true)]
    PermSpectral {
        /// Image table: "1,2,0", JSON {"image": [...]}, or a file containing either
        #[arg(long)]
        perm: String,
        /// Real function f (defaults to the indicator of --subset, or of {0})
        #[arg(long, allow_hyphen_values = true)]
        f: Option<String>,
        /// Real function g (defaults to f)
        #[arg(long, allow_hyphen_values = true)]
        g: Option<String>,
        /// Subset B as indices
        #[arg(long)]
        subset: Option<String>,
        /// Time at which to evaluate <T^t f, g>
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        /// Exponent n of |T^-n B cap B| / |Omega|
        #[arg(long, default_value_t = 1)]
        shift: i64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Spectral potential lambda(a) = lim (1/n) ln |A_a^n 1| of a transfer operator
    #[command(allow_negative_numbers = true)]
    TransferPotential {
        #[command(flatten)]
        system: TransferArgs,
        /// Function a (defaults to zero)
        #[arg(long, allow_hyphen_values = true)]
        a: Option<String>,
        #[arg(long, default_value_t = transfer::DEFAULT_POTENTIAL_TOL)]
        tol: f64,
        #[arg(long, default_value_t = transfer::DEFAULT_POTENTIAL_CAP)]
        n_cap: usize,
        /// Also report the finite-difference equilibrium measure with this step
        #[arg(long)]
        h: Option<f64>,
    },
    /// Randomized check of the seven standard properties of the spectral potential
    TransferProps {
        #[command(flatten)]
        system: TransferArgs,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// lambda(a) = ln r(A) + mu(a) for systems with a single cycle, mu uniform on it
    Theorem4 {
        #[command(flatten)]
        system: TransferArgs,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Birkhoff average (f(u) + .. + f(T^n u)) / (n + 1) of an observable
    #[command(allow_negative_numbers = true)]
    Birkhoff {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(short, long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Observable::Cos)]
        observable: Observable,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SystemKind {
    /// x -> 1 - a x^2 on the reals
    Quadratic,
    /// z -> z^2 on the complex plane
    Squaring,
    /// theta -> theta + 2 pi gamma on the circle
    Rotation,
    /// self-map of {0, .., n-1} from --table
    Finite,
}

#[derive(Args)]
struct SystemArgs {
    #[arg(long, value_enum, default_value_t = SystemKind::Quadratic)]
    system: SystemKind,
    /// Parameter a of the quadratic map
    #[arg(long, value_parser = rational, default_value = "1/2")]
    alpha: BigRational,
    /// Rotation number gamma (fraction of a turn) or "golden"
    #[arg(long, default_value = "golden")]
    gamma: String,
    /// Image table of the finite map, e.g. "1,2,0"
    #[arg(long)]
    table: Option<String>,
    /// Start state: a real, "re,im" for the squaring map, or a state index
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    x0: String,
}

#[derive(Args)]
struct TransferArgs {
    /// {"map": [...], "c": [...]} inline or as a file path
    #[arg(long, conflicts_with = "map")]
    input: Option<String>,
    /// Image table, e.g. "1,2,0"
    #[arg(long)]
    map: Option<String>,
    /// Base potential c (defaults to zero)
    #[arg(long, requires = "map", allow_hyphen_values = true)]
    c: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Observable {
    /// The coordinate (real part, angle, or state index)
    X,
    /// cos of the coordinate
    Cos,
    /// Square of the coordinate
    Square,
}

fn rational(s: &str) -> Result<BigRational, String> {
    scalar::parse_rational(s).map_err(|e| e.to_string())
}

fn to_f64(q: &BigRational) -> f64 {
    scalar::rational_to_real::<f64>(q)
}

enum Failure {
    Usage(String),
    Core(qdyn::Error),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Core(e) => match e {
                qdyn::Error::Argument(_) | qdyn::Error::Precondition(_) | qdyn::Error::NoRealCycle { .. } => 2,
                qdyn::Error::NonConverged { .. } => 3,
                qdyn::Error::DomainEscape { .. } => 4,
                qdyn::Error::Internal(_) => 1,
            },
            Failure::Io(_) => 1,
        }
    }
}

impl Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) => write!(f, "{m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<qdyn::Error> for Failure {
    fn from(e: qdyn::Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome<T> = Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

/// CSV body: a header row and data rows, already formatted.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

struct Artifact {
    fields: Map<String, Value>,
    tolerances: Value,
    table: Option<Table>,
    /// Reported after the artifact is written.
    deferred: Option<qdyn::Error>,
}

impl Artifact {
    fn new(fields: Value, tolerances: Value) -> Self {
        let fields = match fields {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        Self { fields, tolerances, table: None, deferred: None }
    }

    fn with_table(mut self, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        self.table = Some(Table { header, rows });
        self
    }
}

fn to_value<T: Serialize + ?Sized>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

/// 17 significant digits.
fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Outcome<Vec<T>>
where
    T::Err: Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| Failure::Usage(format!("bad {what} entry {t:?}: {e}"))))
        .collect()
}

fn read_source(s: &str) -> Outcome<String> {
    let path = std::path::Path::new(s);
    if !s.trim_start().starts_with('{') && path.is_file() {
        std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {s}: {e}")))
    } else {
        Ok(s.to_string())
    }
}

fn need_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut command_line = vec![TOOL.to_string()];
    command_line.extend(argv.into_iter().skip(1));
    match run(&cli, command_line) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: &Cli, command_line: Vec<String>) -> Outcome<()> {
    let mut seed = None;
    let artifact = dispatch(&cli.command, || {
        let s = need_seed(cli.seed);
        seed = Some(s);
        s
    })?;
    let meta = json!({
        "tool": TOOL,
        "version": env!("CARGO_PKG_VERSION"),
        "command_line": command_line,
        "seed": seed,
        "tolerances": artifact.tolerances,
    });
    let text = match cli.format {
        Format::Json => {
            let mut out = Map::new();
            out.insert("meta".into(), meta);
            out.extend(artifact.fields);
            let mut s = serde_json::to_string_pretty(&Value::Object(out)).expect("json");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = format!("# {}\n", serde_json::to_string(&meta).expect("json"));
            match &artifact.table {
                Some(t) => {
                    s.push_str(&t.header.join(","));
                    s.push('\n');
                    for r in &t.rows {
                        s.push_str(&r.join(","));
                        s.push('\n');
                    }
                }
                None => {
                    s.push_str("field,value\n");
                    for (k, v) in &artifact.fields {
                        let cell = match v {
                            Value::Number(n) => n.as_f64().map(g17).unwrap_or_else(|| n.to_string()),
                            Value::String(t) => t.clone(),
                            other => other.to_string(),
                        };
                        s.push_str(&format!("{k},{}\n", csv_escape(&cell)));
                    }
                }
            }
            s
        }
    };
    match &cli.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(format!("cannot write output: {e}")))?,
    }
    match artifact.deferred {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn require_alpha_range(alpha: &BigRational, inclusive_two: bool) -> Outcome<()> {
    let two = BigRational::from_integer(2.into());
    let zero = BigRational::from_integer(0.into());
    let ok = *alpha > zero && if inclusive_two { *alpha <= two } else { *alpha < two };
    if ok {
        Ok(())
    } else if inclusive_two {
        usage(format!("alpha must lie in (0, 2], got {alpha}"))
    } else {
        usage(format!("alpha must lie in (0, 2), got {alpha}"))
    }
}

fn dispatch(cmd: &Command, mut seed: impl FnMut() -> u64) -> Outcome<Artifact> {
    match cmd {
        Command::Orbit { system, n, cycle_tol } => with_system(system, OrbitRun { n: *n, tol: *cycle_tol }),
        Command::Omega { system, burn_in, tail, tol, eps, probe_steps, link_radius } => with_system(
            system,
            OmegaRun {
                burn_in: *burn_in,
                tail: *tail,
                tol: *tol,
                eps: *eps,
                probe_steps: *probe_steps,
                link_radius: link_radius.unwrap_or(10.0 * tol),
            },
        ),
        Command::Birkhoff { system, n, observable } => {
            with_system(system, BirkhoffRun { n: *n, observable: *observable })
        }
        Command::Classify { alpha, probe_horizon, probe_tol } => classify(alpha, *probe_horizon, *probe_tol),
        Command::CriticalOrbit { alpha, n } => {
            require_alpha_range(alpha, true)?;
            let a = to_f64(alpha);
            let orbit = quad::critical_orbit(a, *n);
            let rows = orbit.iter().enumerate().map(|(k, x)| vec![k.to_string(), g17(*x)]).collect();
            Ok(Artifact::new(json!({ "alpha": alpha.to_string(), "orbit": orbit }), json!({}))
                .with_table(vec!["k", "xi"], rows))
        }
        Command::BcStat { alpha, n } => {
            require_alpha_range(alpha, true)?;
            let stat = quad::bc_statistic(to_f64(alpha), *n)?;
            let rows = (0..stat.log_derivative.len())
                .map(|i| {
                    vec![
                        (i + 1).to_string(),
                        g17(stat.log_derivative[i]),
                        g17(stat.threshold[i]),
                        stat.flags[i].to_string(),
                    ]
                })
                .collect();
            let mut v = to_value(&stat);
            v["all_pass"] = json!(stat.all_pass());
            v["last_failure"] = json!(stat.last_failure());
            Ok(Artifact::new(v, json!({})).with_table(vec!["m", "log_derivative", "threshold", "flag"], rows))
        }
        Command::Moments { kmax, alpha } => moments_cmd(*kmax, alpha),
        Command::Phi { kmax, check_to } => phi_cmd(*kmax, *check_to),
        Command::Stieltjes { alpha, re, im, tol, terms } => {
            let table = moments::moment_table(*terms);
            let z = Complex::new(*re, *im);
            let v = moments::stieltjes(&table, to_f64(alpha), z, *tol, *terms + 1)?;
            let mut art = Artifact::new(
                json!({
                    "alpha": alpha.to_string(),
                    "z": [re, im],
                    "escape_radius": moments::escape_radius(to_f64(alpha)),
                    "value": [v.value.re, v.value.im],
                    "terms": v.terms,
                    "last_term": v.last_term,
                    "tail_bound": v.tail_bound,
                    "converged": v.converged,
                }),
                json!({ "tol": tol, "term_cap": terms }),
            );
            if !v.converged {
                art.deferred = Some(qdyn::Error::NonConverged { iterations: v.terms, residual: v.last_term });
            }
            Ok(art)
        }
        Command::Fourier { alpha, z, terms, tol } => {
            let table = moments::moment_table(*terms);
            let pair = moments::fourier(&table, to_f64(alpha), *z, *terms, *tol)?;
            let mut v = to_value(&pair);
            v["alpha"] = json!(alpha.to_string());
            v["z"] = json!(z);
            Ok(Artifact::new(v, json!({ "tol": tol, "terms": terms })))
        }
        Command::SampleJulia { alpha, count, burn_in, kmax, symmetry_tol } => {
            sample_cmd(alpha, *count, *burn_in, *kmax, *symmetry_tol, seed())
        }
        Command::RealCert { alpha, cap, exact } => real_cert(alpha, *cap, *exact),
        Command::PermSpectral { perm, f, g, subset, t, shift, trials, tol } => perm_cmd(
            PermRun { perm, f: f.as_deref(), g: g.as_deref(), subset: subset.as_deref(), t: *t, shift: *shift, trials: *trials, tol: *tol },
            seed,
        ),
        Command::TransferPotential { system, a, tol, n_cap, h } => {
            let op = transfer_op(system)?;
            let a = match a {
                Some(s) => parse_list::<f64>(s, "a")?,
                None => vec![0.0; op.len()],
            };
            let v = transfer::spectral_potential(&op, &a, *tol, *n_cap)?;
            let mut out = json!({
                "lambda": v.value,
                "iterations": v.iterations,
                "residual": v.residual,
                "converged": v.converged,
                "log_radius_from_cycles": op.weight(&a)?.log_spectral_radius_from_cycles(),
                "cycles": op.system().cycles(),
            });
            if let (Some(h), true) = (h, v.converged) {
                out["equilibrium"] = to_value(&transfer::equilibrium_subgradient(&op, &a, *h)?);
            }
            let mut art = Artifact::new(out, json!({ "tol": tol, "n_cap": n_cap, "h": h }));
            if !v.converged {
                art.deferred = Some(v.require_converged().unwrap_err());
            }
            Ok(art)
        }
        Command::TransferProps { system, trials, tol } => {
            let op = transfer_op(system)?;
            let s = seed();
            let report = transfer::property_suite(&op, *trials, *tol, s)?;
            let mut v = to_value(&report);
            v["all_passed"] = json!(report.all_passed());
            let rows = report
                .checks
                .iter()
                .map(|c| vec![csv_escape(c.name), c.passed.to_string(), g17(c.max_violation)])
                .collect();
            Ok(Artifact::new(v, json!({ "tol": tol, "potential_tol": transfer::DEFAULT_POTENTIAL_TOL }))
                .with_table(vec!["property", "passed", "max_violation"], rows))
        }
        Command::Theorem4 { system, trials, tol } => {
            let op = transfer_op(system)?;
            let report = transfer::theorem4_check(&op, *trials, *tol, seed())?;
            Ok(Artifact::new(
                to_value(&report),
                json!({ "tol": tol, "potential_tol": transfer::DEFAULT_POTENTIAL_TOL }),
            ))
        }
    }
}

fn classify(alpha: &BigRational, horizon: Option<usize>, probe_tol: f64) -> Outcome<Artifact> {
    require_alpha_range(alpha, false)?;
    let regime = quad::exact::classify(alpha)?;
    let report = quad::classify(to_f64(alpha))?;
    let mut v = to_value(&report);
    v["alpha"] = json!(alpha.to_string());
    v["regime"] = to_value(&regime);
    if let Some(fm) = quad::exact::fixed_multiplier(alpha)? {
        v["fixed_multiplier_exact"] = json!(fm.to_string());
    }
    if let Ok(cm) = quad::exact::cycle_multiplier(alpha) {
        v["cycle_multiplier_exact"] = json!(cm.to_string());
    }
    if let Some(h) = horizon {
        v["probe"] = to_value(&quad::delta_inf_probe(to_f64(alpha), h, probe_tol)?);
    }
    Ok(Artifact::new(v, json!({ "probe_tol": horizon.map(|_| probe_tol) })))
}

fn moments_cmd(kmax: usize, alpha: &BigRational) -> Outcome<Artifact> {
    let table = moments::moment_table(kmax);
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for (k, p) in table.polys().iter().enumerate() {
        let coeffs: Vec<String> = p.coeffs().iter().map(|c| c.to_string()).collect();
        let value = table.moment_exact(alpha, k)?;
        rows.push(vec![k.to_string(), coeffs.join(";"), value.to_string()]);
        entries.push(json!({
            "k": k,
            "polynomial": p.to_string(),
            "coefficients": coeffs,
            "lambda": value.to_string(),
        }));
    }
    let negative: Vec<_> = table.negative_coefficients();
    Ok(Artifact::new(
        json!({
            "alpha": alpha.to_string(),
            "variable": "b = 1/a",
            "kmax": kmax,
            "moments": entries,
            "negative_coefficients": negative,
        }),
        json!({ "arithmetic": "exact" }),
    )
    .with_table(vec!["k", "coefficients", "lambda"], rows))
}

fn phi_cmd(kmax: usize, check_to: usize) -> Outcome<Artifact> {
    let phis = moments::phi_table(kmax.max(check_to))?;
    let verdict = moments::phi_identity_check(&phis, check_to)?;
    let shown = &phis[..=kmax];
    let rows = shown
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let coeffs: Vec<String> = p.coeffs().iter().map(|c| c.to_string()).collect();
            vec![k.to_string(), coeffs.join(";"), csv_escape(&p.to_string())]
        })
        .collect();
    let identity = match verdict {
        IdentityVerdict::Pass => json!({ "verdict": "pass", "checked_to": check_to }),
        IdentityVerdict::Fail { n, residual } => {
            json!({ "verdict": "fail", "checked_to": check_to, "n": n, "residual": residual.to_string() })
        }
    };
    Ok(Artifact::new(
        json!({
            "phi": shown.iter().enumerate().map(|(k, p)| json!({
                "k": k,
                "polynomial": p.to_string(),
                "coefficients": p.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "identity": identity,
        }),
        json!({ "arithmetic": "exact" }),
    )
    .with_table(vec!["k", "coefficients", "polynomial"], rows))
}

fn sample_cmd(alpha: &BigRational, count: usize, burn_in: usize, kmax: usize, sym_tol: f64, seed: u64) -> Outcome<Artifact> {
    require_alpha_range(alpha, true)?;
    let a = to_f64(alpha);
    let cloud = sampler::sample(a, count, burn_in, seed)?;
    let emp = sampler::empirical_moments(&cloud, kmax)?;
    let table = moments::moment_table(kmax);
    let mut even = Vec::new();
    for k in 0..=kmax {
        even.push(json!({
            "k": k,
            "empirical": [emp[2 * k].re, emp[2 * k].im],
            "exact": table.moment_exact(alpha, k)?.to_string(),
        }));
    }
    let odd: Vec<Value> = (0..=kmax).map(|k| json!([emp[2 * k + 1].re, emp[2 * k + 1].im])).collect();
    let mut v = json!({
        "metadata": to_value(&cloud.metadata()),
        "even_moments": even,
        "odd_moments": odd,
        "symmetry": to_value(&sampler::symmetry_check(&cloud, sym_tol)?),
        "support_bound": sampler::support_bound(&cloud)?,
        "escape_radius": moments::escape_radius(a),
        "chain_defect": cloud.chain_defect(),
    });
    if *alpha == BigRational::from_integer(2.into()) {
        let re: Vec<f64> = cloud.points.iter().map(|z| z.re).collect();
        v["ks_arcsine"] = json!(sampler::ks_distance(&re, sampler::arcsine_cdf));
    }
    let rows = cloud.points.iter().map(|z| vec![g17(z.re), g17(z.im)]).collect();
    Ok(Artifact::new(v, json!({ "symmetry_tol": sym_tol })).with_table(vec!["re", "im"], rows))
}

fn real_cert(alpha: &BigRational, cap: usize, exact: bool) -> Outcome<Artifact> {
    require_alpha_range(alpha, true)?;
    let (chain, failure_index, verdict, notes): (Value, _, RealnessVerdict, _) = if exact {
        if cap > EXACT_CERT_CAP {
            return usage(format!("exact certificates are limited to cap <= {EXACT_CERT_CAP}, got {cap}"));
        }
        let c = sampler::realness_certificate(alpha.clone(), cap)?;
        let chain = c.chain.iter().map(|b| b.to_string()).collect::<Vec<_>>();
        (json!(chain), c.failure_index, c.verdict, c.notes)
    } else {
        let c = sampler::realness_certificate(to_f64(alpha), cap)?;
        (json!(c.chain), c.failure_index, c.verdict, c.notes)
    };
    Ok(Artifact::new(
        json!({
            "alpha": alpha.to_string(),
            "arithmetic": if exact { "exact" } else { "f64" },
            "verdict": verdict,
            "failure_index": failure_index,
            "chain": chain,
            "notes": notes,
        }),
        json!({ "cap": cap }),
    ))
}

struct PermRun<'a> {
    perm: &'a str,
    f: Option<&'a str>,
    g: Option<&'a str>,
    subset: Option<&'a str>,
    t: f64,
    shift: i64,
    trials: usize,
    tol: f64,
}

fn perm_cmd(run: PermRun<'_>, mut seed: impl FnMut() -> u64) -> Outcome<Artifact> {
    let text = read_source(run.perm)?;
    let image: Vec<usize> = if text.trim_start().starts_with('{') {
        serde_json::from_str::<PermutationInput>(&text)
            .map_err(|e| Failure::Usage(format!("bad permutation JSON: {e}")))?
            .image
    } else {
        parse_list(&text, "permutation")?
    };
    let p = perm::decompose(&image)?;
    let n = p.size();
    let subset: Option<Vec<usize>> = run.subset.map(|s| parse_list(s, "subset")).transpose()?;
    if let Some(b) = subset.iter().flatten().find(|&&b| b >= n) {
        return usage(format!("subset element {b} out of range 0..{n}"));
    }
    let vector = |s: Option<&str>, what: &str| -> Outcome<Option<L2Vector<f64>>> {
        match s {
            None => Ok(None),
            Some(s) => {
                let v: Vec<f64> = parse_list(s, what)?;
                if v.len() != n {
                    return usage(format!("{what} has {} entries, permutation has {n} points", v.len()));
                }
                Ok(Some(L2Vector::from_real(&v)))
            }
        }
    };
    let f = match vector(run.f, "f")? {
        Some(v) => v,
        None => L2Vector::indicator(n, subset.as_deref().unwrap_or(&[0])),
    };
    let g = vector(run.g, "g")?.unwrap_or_else(|| f.clone());
    let measure = perm::spectral_measure(&p, &f, &g);
    let transform = measure.transform(run.t);
    let direct = perm::power_t(&p, &f, run.t).inner(&g);
    let report = perm::group_law_check(&p, run.t, 0.25, run.trials, seed(), run.tol);
    let rows = measure
        .atoms
        .iter()
        .map(|a| {
            vec![
                format!("{}/{}", a.turns.0, a.turns.1),
                g17(a.angle),
                g17(a.frequency),
                g17(a.weight.re),
                g17(a.weight.im),
            ]
        })
        .collect();
    let mut v = json!({
        "size": n,
        "cycles": p.cycles(),
        "atoms": to_value(&measure.atoms),
        "total_weight": [measure.total_weight().re, measure.total_weight().im],
        "t": run.t,
        "transform_from_atoms": [transform.re, transform.im],
        "transform_direct": [direct.re, direct.im],
        "group_law": to_value(&report),
    });
    if let Some(b) = &subset {
        v["subset"] = json!(b);
        v["invariant"] = json!(p.is_invariant(b));
        v["autocorrelation"] = json!({
            "shift": run.shift,
            "value": perm::autocorrelation(&p, b, run.shift)?.to_string(),
        });
    }
    Ok(Artifact::new(v, json!({ "tol": run.tol, "trials": run.trials }))
        .with_table(vec!["turns", "angle", "frequency", "weight_re", "weight_im"], rows))
}

fn transfer_op(args: &TransferArgs) -> Outcome<TransferOp<f64>> {
    let input = match (&args.input, &args.map) {
        (Some(src), _) => serde_json::from_str::<SystemInput>(&read_source(src)?)
            .map_err(|e| Failure::Usage(format!("bad system JSON: {e}")))?,
        (None, Some(map)) => SystemInput {
            map: parse_list(map, "map")?,
            c: args.c.as_deref().map(|c| parse_list(c, "c")).transpose()?,
        },
        (None, None) => return usage("give the system with --input or --map"),
    };
    Ok(TransferOp::from_input(&input)?)
}

/// Something to run on any of the orbit-level systems.
trait SystemRun {
    fn run<D>(self, sys: &D, start: D::State) -> Outcome<Artifact>
    where
        D: DynSystem<Scalar = f64>,
        D::State: Serialize + Coordinate;
}

/// Real coordinate used by observables.
trait Coordinate {
    fn coordinate(&self) -> f64;
}

impl Coordinate for f64 {
    fn coordinate(&self) -> f64 {
        *self
    }
}

impl Coordinate for Complex<f64> {
    fn coordinate(&self) -> f64 {
        self.re
    }
}

impl Coordinate for usize {
    fn coordinate(&self) -> f64 {
        *self as f64
    }
}

fn with_system(args: &SystemArgs, job: impl SystemRun) -> Outcome<Artifact> {
    let real_start = || args.x0.trim().parse::<f64>().map_err(|e| Failure::Usage(format!("bad --x0 {:?}: {e}", args.x0)));
    match args.system {
        SystemKind::Quadratic => {
            let a = to_f64(&args.alpha);
            if !(a > 0.0) {
                return usage(format!("alpha must be positive, got {}", args.alpha));
            }
            job.run(&QuadraticMap::new(a), real_start()?)
        }
        SystemKind::Squaring => {
            let parts: Vec<f64> = parse_list(&args.x0, "x0")?;
            let z = match parts[..] {
                [re] => Complex::new(re, 0.0),
                [re, im] => Complex::new(re, im),
                _ => return usage("squaring map start must be \"re\" or \"re,im\""),
            };
            job.run(&SquaringMap::<f64>::default(), z)
        }
        SystemKind::Rotation => {
            let sys = if args.gamma == "golden" {
                Rotation::golden()
            } else {
                Rotation::by_fraction(to_f64(&rational(&args.gamma).map_err(Failure::Usage)?))
            };
            job.run(&sys, real_start()?)
        }
        SystemKind::Finite => {
            let Some(table) = &args.table else {
                return usage("the finite system needs --table");
            };
            let sys = FiniteMap::<f64>::new(parse_list(table, "table")?)?;
            let start: usize = args.x0.trim().parse().map_err(|e| Failure::Usage(format!("bad --x0: {e}")))?;
            if start >= sys.table().len() {
                return usage(format!("start state {start} out of range 0..{}", sys.table().len()));
            }
            job.run(&sys, start)
        }
    }
}

struct OrbitRun {
    n: usize,
    tol: f64,
}

impl SystemRun for OrbitRun {
    fn run<D>(self, sys: &D, start: D::State) -> Outcome<Artifact>
    where
        D: DynSystem<Scalar = f64>,
        D::State: Serialize + Coordinate,
    {
        let record = orbit::iterate(sys, &start, self.n)?;
        let cycle = orbit::detect_cycle(sys, &record, self.tol)?;
        let rows = record
            .states()
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let cell = match to_value(s) {
                    Value::Number(x) => x.as_f64().map(g17).unwrap_or_else(|| x.to_string()),
                    other => csv_escape(&other.to_string()),
                };
                vec![i.to_string(), cell]
            })
            .collect();
        Ok(Artifact::new(
            json!({
                "system": sys.id(),
                "space": to_value(&sys.space()),
                "states": to_value(record.states()),
                "cycle": to_value(&cycle),
            }),
            json!({ "cycle_tol": self.tol }),
        )
        .with_table(vec!["index", "state"], rows))
    }
}

struct OmegaRun {
    burn_in: usize,
    tail: usize,
    tol: f64,
    eps: Option<f64>,
    probe_steps: usize,
    link_radius: f64,
}

impl SystemRun for OmegaRun {
    fn run<D>(self, sys: &D, start: D::State) -> Outcome<Artifact>
    where
        D: DynSystem<Scalar = f64>,
        D::State: Serialize + Coordinate,
    {
        let est = orbit::omega_estimate(sys, &start, self.burn_in, self.tail, self.tol)?;
        let verdict = orbit::theorem1_check(&est, sys, self.tol)?;
        let components = orbit::connectivity_probe(&est, sys, self.link_radius)?;
        let minimality = match self.eps {
            Some(eps) => Some(orbit::minimality_probe(&est, sys, eps, self.probe_steps)?),
            None => None,
        };
        Ok(Artifact::new(
            json!({
                "system": sys.id(),
                "estimate": to_value(&est),
                "size": est.len(),
                "finite_set_check": to_value(&verdict),
                "components": components,
                "minimality": to_value(&minimality),
            }),
            json!({ "tol": self.tol, "eps": self.eps, "link_radius": self.link_radius }),
        ))
    }
}

struct BirkhoffRun {
    n: usize,
    observable: Observable,
}

impl SystemRun for BirkhoffRun {
    fn run<D>(self, sys: &D, start: D::State) -> Outcome<Artifact>
    where
        D: DynSystem<Scalar = f64>,
        D::State: Serialize + Coordinate,
    {
        let obs = self.observable;
        let f = move |s: &D::State| {
            let x = s.coordinate();
            match obs {
                Observable::X => x,
                Observable::Cos => x.cos(),
                Observable::Square => x * x,
            }
        };
        let avg = orbit::birkhoff_average(sys, f, &start, self.n)?;
        Ok(Artifact::new(
            json!({
                "system": sys.id(),
                "observable": to_value(&obs),
                "start": to_value(&start),
                "n": self.n,
                "average": avg,
            }),
            json!({}),
        ))
    }
}
