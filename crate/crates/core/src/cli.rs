//! The `maxnorm` command-line tool.
//!
//! Subcommands write CSV or JSON to stdout (or `--out PATH`). Output is a
//! pure function of the arguments: field order is fixed and numbers use the
//! shortest round-trip decimal form, so repeated runs are byte-identical.
//!
//! Exit codes: 0 success, 1 verification failure, 2 argument error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::bayes;
use crate::density::{self, DensityError, DensityValue, Point, Point2};
use crate::khintchine::{self, SampleBatch};
use crate::mixture;
use crate::quadrature::QuadratureError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest lattice `cmd grid` will emit.
const MAX_GRID_CELLS: usize = 5_000_000;

pub const DEFAULT_SUITES: &str = "mixture,laplace,marginal,posterior,sampler";

#[derive(Debug, Parser)]
#[command(
    name = "maxnorm",
    version,
    about = "Max-norm contoured densities with standard normal marginals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
        let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
        let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(format!("range requires finite lo < hi, got {lo}:{hi}"));
        }
        Ok(Range { lo, hi })
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Density values on a regular lattice in [lo, hi]^p.
    Grid {
        #[arg(short = 'p', long = "dim", value_parser = clap::value_parser!(u32).range(1..=6))]
        dim: u32,
        #[arg(long, allow_hyphen_values = true, default_value = "-3:3")]
        range: Range,
        #[arg(long, default_value_t = 61, value_parser = clap::value_parser!(u32).range(2..))]
        steps: u32,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification suites and print a JSON report.
    Verify {
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value = DEFAULT_SUITES)]
        suites: String,
        /// Seed for the sampler suite when no sample file is given.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Sample size for the sampler suite when no sample file is given.
        #[arg(short = 'n', long = "count", default_value_t = 200_000)]
        count: usize,
        /// Sample file (CSV or JSON from `maxnorm sample`), or `-` for stdin.
        #[arg(long)]
        samples: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw from the p-dimensional density.
    Sample {
        #[arg(short = 'p', long = "dim", value_parser = clap::value_parser!(u32).range(1..))]
        dim: u32,
        #[arg(short = 'n', long = "count")]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Posterior density of the correlation given one observation.
    #[command(allow_negative_numbers = true)]
    Posterior {
        x1: f64,
        x2: f64,
        #[arg(long, default_value_t = 64)]
        grid_size: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bayes factor for rho = 0.
    #[command(allow_negative_numbers = true)]
    Bf { x1: f64, x2: f64 },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<DensityError> for CliError {
    fn from(e: DensityError) -> Self {
        match e {
            DensityError::Quadrature(q) => CliError::Numerical(q.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{rendered}");
                EXIT_OK
            };
        }
    };

    let result = match cli.command {
        Command::Grid {
            dim,
            range,
            steps,
            format,
            out,
        } => cmd_grid(dim as usize, range, steps as usize, format).map(|b| (b, out, EXIT_OK)),
        Command::Verify {
            tol,
            suites,
            seed,
            count,
            samples,
            out,
        } => cmd_verify(tol, &suites, seed, count, samples.as_deref()).map(|(b, code)| (b, out, code)),
        Command::Sample {
            dim,
            count,
            seed,
            format,
            out,
        } => cmd_sample(dim as usize, count, seed, format).map(|b| (b, out, EXIT_OK)),
        Command::Posterior {
            x1,
            x2,
            grid_size,
            format,
            out,
        } => cmd_posterior(x1, x2, grid_size, format).map(|(b, code)| (b, out, code)),
        Command::Bf { x1, x2 } => cmd_bf(x1, x2).map(|b| (b, None, EXIT_OK)),
    };

    match result {
        Ok((bytes, out, code)) => {
            let written = match out {
                Some(path) => fs::write(&path, &bytes).map_err(|e| format!("cannot write {}: {e}", path.display())),
                None => stdout.write_all(&bytes).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => {
                    match code {
                        EXIT_VERIFY_FAILED => {
                            let _ = writeln!(stderr, "error: verification failed");
                        }
                        EXIT_NUMERICAL => {
                            let _ = writeln!(stderr, "error: numerical failure (see output for details)");
                        }
                        _ => {}
                    }
                    code
                }
                Err(msg) => {
                    let _ = writeln!(stderr, "error: {msg}");
                    EXIT_USAGE
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Shortest round-trip rendering; `inf` for infinities.
pub fn format_number(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:?}")
    }
}

/// Rendering with 15 significant digits, fixed-point for moderate exponents.
pub fn format_sig15(v: f64) -> String {
    if !v.is_finite() || v == 0.0 {
        return format_number(v);
    }
    let sci = format!("{v:.14e}");
    let exp: i32 = sci.rsplit_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-5..15).contains(&exp) {
        format!("{:.*}", (14 - exp) as usize, v)
    } else {
        sci
    }
}

/// JSON number, or the string `"inf"` where JSON has no literal.
#[derive(Debug, Clone, Copy)]
struct JsonNumber(f64);

impl Serialize for JsonNumber {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0.is_nan() {
            s.serialize_str("nan")
        } else {
            s.serialize_str(&format_number(self.0))
        }
    }
}

#[derive(Serialize)]
struct Document<M, D> {
    meta: M,
    data: D,
}

fn to_json<T: Serialize>(doc: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(doc).expect("serializing plain data cannot fail");
    bytes.push(b'\n');
    bytes
}

fn csv_bytes(meta: &[(&str, String)], header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut out = Vec::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(header).expect("in-memory write");
    for row in rows {
        writer.write_record(&row).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

fn lattice(range: Range, steps: usize) -> Vec<f64> {
    let denom = (steps - 1) as f64;
    (0..steps)
        .map(|i| range.lo + (range.hi - range.lo) * i as f64 / denom)
        .collect()
}

#[derive(Serialize)]
struct GridMeta {
    command: &'static str,
    version: &'static str,
    dim: usize,
    range: [f64; 2],
    steps: usize,
}

#[derive(Serialize)]
struct GridRecord {
    x: Vec<f64>,
    density: JsonNumber,
}

fn cmd_grid(p: usize, range: Range, steps: usize, format: Format) -> Result<Vec<u8>, CliError> {
    let cells = steps
        .checked_pow(p as u32)
        .filter(|&c| c <= MAX_GRID_CELLS)
        .ok_or_else(|| CliError::Usage(format!("{steps}^{p} cells exceeds the limit of {MAX_GRID_CELLS}")))?;
    let axis = lattice(range, steps);

    // The density depends only on the max norm, so one evaluation per axis
    // value covers every cell.
    let per_axis = axis
        .par_iter()
        .map(|&c| density::density_at_max_norm(p, c.abs()))
        .collect::<Vec<_>>();
    let mut values = Vec::with_capacity(steps);
    for (i, v) in per_axis.into_iter().enumerate() {
        match v {
            Ok(v) => values.push(v),
            Err(e) => {
                return Err(CliError::Numerical(format!(
                    "density failed at cells with max norm {} (dim {p}): {e}",
                    axis[i].abs()
                )))
            }
        }
    }

    let cell = |index: usize| -> (Vec<f64>, DensityValue) {
        let mut rem = index;
        let mut idx = vec![0usize; p];
        for slot in idx.iter_mut().rev() {
            *slot = rem % steps;
            rem /= steps;
        }
        let coords: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        let arg = idx
            .iter()
            .copied()
            .max_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs()))
            .expect("p >= 1");
        (coords, values[arg])
    };

    Ok(match format {
        Format::Csv => {
            let meta = [
                ("command", "grid".to_string()),
                ("version", VERSION.to_string()),
                ("dim", p.to_string()),
                (
                    "range",
                    format!("{}:{}", format_number(range.lo), format_number(range.hi)),
                ),
                ("steps", steps.to_string()),
            ];
            let mut header: Vec<String> = (1..=p).map(|i| format!("x{i}")).collect();
            header.push("density".into());
            csv_bytes(
                &meta,
                &header,
                (0..cells).map(|i| {
                    let (coords, v) = cell(i);
                    let mut row: Vec<String> = coords.into_iter().map(format_number).collect();
                    row.push(format_number(v.as_f64()));
                    row
                }),
            )
        }
        Format::Json => to_json(&Document {
            meta: GridMeta {
                command: "grid",
                version: VERSION,
                dim: p,
                range: [range.lo, range.hi],
                steps,
            },
            data: (0..cells)
                .map(|i| {
                    let (x, v) = cell(i);
                    GridRecord {
                        x,
                        density: JsonNumber(v.as_f64()),
                    }
                })
                .collect::<Vec<_>>(),
        }),
    })
}

#[derive(Serialize)]
struct SampleMeta<'a> {
    command: &'static str,
    version: &'static str,
    seed: u64,
    generator_id: &'a str,
    p: usize,
    n: usize,
}

#[derive(Serialize)]
struct SampleRecord<'a> {
    x: &'a [f64],
}

fn cmd_sample(p: usize, n: usize, seed: u64, format: Format) -> Result<Vec<u8>, CliError> {
    let batch = khintchine::sample_joint(p, n, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(match format {
        Format::Csv => {
            let meta = [
                ("command", "sample".to_string()),
                ("version", VERSION.to_string()),
                ("seed", seed.to_string()),
                ("generator_id", batch.generator_id().to_string()),
                ("p", p.to_string()),
                ("n", n.to_string()),
            ];
            let header: Vec<String> = (1..=p).map(|i| format!("x{i}")).collect();
            csv_bytes(
                &meta,
                &header,
                batch.rows().map(|r| r.iter().copied().map(format_number).collect()),
            )
        }
        Format::Json => to_json(&Document {
            meta: SampleMeta {
                command: "sample",
                version: VERSION,
                seed,
                generator_id: batch.generator_id(),
                p,
                n,
            },
            data: batch.rows().map(|x| SampleRecord { x }).collect::<Vec<_>>(),
        }),
    })
}

#[derive(Serialize)]
struct PosteriorMeta {
    command: &'static str,
    version: &'static str,
    x1: f64,
    x2: f64,
    grid_size: usize,
    normalization_residual: JsonNumber,
    normalization_converged: bool,
}

#[derive(Serialize)]
struct PosteriorRecord {
    rho: f64,
    density: f64,
}

fn cmd_posterior(x1: f64, x2: f64, grid_size: usize, format: Format) -> Result<(Vec<u8>, i32), CliError> {
    let x = Point2::new(x1, x2)?;
    let curve = bayes::posterior_curve(x, grid_size)?;
    let code = if curve.normalization_converged {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    };
    let bytes = match format {
        Format::Csv => {
            let meta = [
                ("command", "posterior".to_string()),
                ("version", VERSION.to_string()),
                ("x1", format_number(x1)),
                ("x2", format_number(x2)),
                ("grid_size", grid_size.to_string()),
                ("normalization_residual", format_number(curve.normalization_residual)),
                ("normalization_converged", curve.normalization_converged.to_string()),
            ];
            csv_bytes(
                &meta,
                &["rho".to_string(), "density".to_string()],
                curve
                    .rho_grid
                    .iter()
                    .zip(&curve.density_values)
                    .map(|(&r, &d)| vec![format_number(r), format_number(d)]),
            )
        }
        Format::Json => to_json(&Document {
            meta: PosteriorMeta {
                command: "posterior",
                version: VERSION,
                x1,
                x2,
                grid_size,
                normalization_residual: JsonNumber(curve.normalization_residual),
                normalization_converged: curve.normalization_converged,
            },
            data: curve
                .rho_grid
                .iter()
                .zip(&curve.density_values)
                .map(|(&rho, &density)| PosteriorRecord { rho, density })
                .collect::<Vec<_>>(),
        }),
    };
    Ok((bytes, code))
}

fn cmd_bf(x1: f64, x2: f64) -> Result<Vec<u8>, CliError> {
    let x = Point2::new(x1, x2)?;
    Ok(format!("{}\n", format_sig15(bayes::bayes_factor_rho0(x))).into_bytes())
}

// ---------------------------------------------------------------------------
// verify

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Suite {
    Mixture,
    Laplace,
    Marginal,
    Posterior,
    Sampler,
}

impl Suite {
    const ALL: [Suite; 5] = [
        Suite::Mixture,
        Suite::Laplace,
        Suite::Marginal,
        Suite::Posterior,
        Suite::Sampler,
    ];

    fn name(self) -> &'static str {
        match self {
            Suite::Mixture => "mixture",
            Suite::Laplace => "laplace",
            Suite::Marginal => "marginal",
            Suite::Posterior => "posterior",
            Suite::Sampler => "sampler",
        }
    }
}

fn parse_suites(list: &str) -> Result<Vec<Suite>, CliError> {
    let mut chosen = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let suite = Suite::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| CliError::Usage(format!("unknown suite {name:?}")))?;
        if !chosen.contains(&suite) {
            chosen.push(suite);
        }
    }
    if chosen.is_empty() {
        return Err(CliError::Usage("no suites selected".into()));
    }
    Ok(chosen)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub computed: JsonNumberOut,
    pub reference: JsonNumberOut,
    pub abs_error: JsonNumberOut,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Public wrapper so report types can be inspected by callers.
#[derive(Debug, Clone, Copy)]
pub struct JsonNumberOut(pub f64);

impl Serialize for JsonNumberOut {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        JsonNumber(self.0).serialize(s)
    }
}

impl Check {
    fn compare(suite: Suite, name: String, computed: f64, reference: f64, threshold: f64) -> Self {
        let abs_error = if computed == reference {
            0.0
        } else {
            (computed - reference).abs()
        };
        Check {
            suite: suite.name(),
            name,
            computed: JsonNumberOut(computed),
            reference: JsonNumberOut(reference),
            abs_error: JsonNumberOut(abs_error),
            threshold,
            pass: abs_error <= threshold,
            error: None,
        }
    }

    fn failed(suite: Suite, name: String, error: String) -> Self {
        Check {
            suite: suite.name(),
            name,
            computed: JsonNumberOut(f64::NAN),
            reference: JsonNumberOut(f64::NAN),
            abs_error: JsonNumberOut(f64::NAN),
            threshold: 0.0,
            pass: false,
            error: Some(error),
        }
    }
}

struct Outcome {
    check: Check,
    numerical_failure: bool,
}

impl From<Check> for Outcome {
    fn from(check: Check) -> Self {
        Outcome {
            check,
            numerical_failure: false,
        }
    }
}

fn from_result(suite: Suite, name: String, r: Result<Check, DensityError>) -> Outcome {
    match r {
        Ok(c) => c.into(),
        Err(e) => Outcome {
            numerical_failure: matches!(e, DensityError::Quadrature(_)),
            check: Check::failed(suite, name, e.to_string()),
        },
    }
}

fn pt(x1: f64, x2: f64) -> Point2 {
    Point2 { x1, x2 }
}

/// Grid used by the mixture suite: 21 × 21 points on [-3, 3]².
pub fn mixture_grid() -> Vec<Point2> {
    let axis: Vec<f64> = (0..21).map(|i| -3.0 + 6.0 * f64::from(i) / 20.0).collect();
    axis.iter().flat_map(|&a| axis.iter().map(move |&b| pt(a, b))).collect()
}

pub const LAPLACE_POINTS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// Ten fixed prefixes; dimension `d` uses the first `d` coordinates.
pub const MARGINAL_POINTS: [[f64; 3]; 10] = [
    [0.1, 0.0, 0.0],
    [0.5, -0.2, 0.1],
    [1.0, 0.5, 0.2],
    [-1.5, 0.3, 0.9],
    [2.0, -2.0, 1.0],
    [0.25, 0.75, -0.5],
    [3.0, 0.1, 0.2],
    [-0.8, -0.8, 0.4],
    [1.2, -0.1, 2.5],
    [0.05, 0.02, -0.01],
];

pub const POSTERIOR_POINTS: [(f64, f64); 9] = [
    (0.0, 0.0),
    (1.0, 0.5),
    (2.0, 1.0),
    (-1.0, 3.0),
    (1.0, -1.0),
    (0.5, 0.5),
    (3.0, 3.0),
    (-2.0, -0.5),
    (2.5, 0.0),
];

fn quad_tol(tol: f64, floor: f64) -> f64 {
    (tol / 10.0).max(floor)
}

fn suite_mixture(tol: f64) -> Vec<Outcome> {
    let suite = Suite::Mixture;
    let qt = quad_tol(tol, 1e-12);
    let mut out: Vec<Outcome> = mixture_grid()
        .par_iter()
        .map(|&x| {
            let name = format!("mixture({},{})", format_number(x.x1), format_number(x.x2));
            let r = mixture::compare_with_closed_form(x, qt)
                .map(|c| Check::compare(suite, name.clone(), c.mixture, c.closed_form, tol));
            from_result(suite, name, r)
        })
        .collect();
    for (x1, x2) in [(2.0, 1.0), (1.0, -1.0), (1.0, 0.5)] {
        let name = format!("split({},{})", format_number(x1), format_number(x2));
        let r = mixture::split_point_consistency(pt(x1, x2)).map(|s| {
            let mut c = Check::compare(suite, name.clone(), s.sum(), s.full.value, s.combined_error);
            c.pass &= s.monotone;
            c
        });
        out.push(from_result(suite, name, r));
    }
    out
}

fn suite_laplace(tol: f64) -> Vec<Outcome> {
    let suite = Suite::Laplace;
    let qt = quad_tol(tol, 1e-14);
    LAPLACE_POINTS
        .iter()
        .map(|&x1| {
            let name = format!("laplace({})", format_number(x1));
            let r = mixture::laplace_identity_check(x1, qt)
                .map(|(lhs, rhs)| Check::compare(suite, name.clone(), lhs, rhs, tol));
            from_result(suite, name, r)
        })
        .collect()
}

fn suite_marginal(tol: f64) -> Vec<Outcome> {
    let suite = Suite::Marginal;
    let qt = quad_tol(tol, 1e-12);
    let cases: Vec<(usize, &[f64; 3])> = (2..=4)
        .flat_map(|p| MARGINAL_POINTS.iter().map(move |x| (p, x)))
        .collect();
    cases
        .par_iter()
        .map(|&(p, coords)| {
            let prefix = &coords[..p - 1];
            let name = format!(
                "marginal(p={p},[{}])",
                prefix.iter().map(|&c| format_number(c)).collect::<Vec<_>>().join(",")
            );
            let r = Point::new(prefix.to_vec()).and_then(|x| {
                let marginal = density::marginalize_last(p, &x, qt)?;
                let direct = density::density_p(&x)?;
                Ok(Check::compare(
                    suite,
                    name.clone(),
                    marginal.as_f64(),
                    direct.as_f64(),
                    tol,
                ))
            });
            from_result(suite, name, r)
        })
        .collect()
}

fn suite_posterior(tol: f64) -> Vec<Outcome> {
    let suite = Suite::Posterior;
    let qt = quad_tol(tol, 1e-12);
    let mut out: Vec<Outcome> = POSTERIOR_POINTS
        .iter()
        .map(|&(x1, x2)| {
            let name = format!("normalization({},{})", format_number(x1), format_number(x2));
            let r = bayes::posterior_normalization(pt(x1, x2), qt)
                .map(|q| Check::compare(suite, name.clone(), q.value, 1.0, tol));
            from_result(suite, name, r)
        })
        .collect();

    let name = "arcsine_at_origin(grid=64)".to_string();
    let r = bayes::posterior_curve(pt(0.0, 0.0), 64).map(|c| {
        let worst = c
            .rho_grid
            .iter()
            .zip(&c.density_values)
            .map(|(&r, &v)| (v - 1.0 / (std::f64::consts::PI * (1.0 - r * r).sqrt())).abs())
            .fold(0.0, f64::max);
        Check::compare(suite, name.clone(), worst, 0.0, 1e-10)
    });
    out.push(from_result(suite, name, r));

    out.push(
        Check::compare(
            suite,
            "bayes_factor(0,0)".into(),
            bayes::bayes_factor_rho0(pt(0.0, 0.0)),
            std::f64::consts::FRAC_2_PI,
            1e-12,
        )
        .into(),
    );
    out
}

fn suite_sampler(batch: &SampleBatch) -> Vec<Outcome> {
    let suite = Suite::Sampler;
    let n = batch.n();
    let critical = khintchine::ks_critical_value_001(n);
    let mut out: Vec<Outcome> = (0..batch.p())
        .map(|j| {
            let name = format!("ks(column={})", j + 1);
            match khintchine::ks_statistic(&batch.column(j)) {
                Ok(d) => Check::compare(suite, name, d, 0.0, critical).into(),
                Err(e) => Check::failed(suite, name, e.to_string()).into(),
            }
        })
        .collect();

    let name = "maxnorm_cdf(a=1)".to_string();
    let r = density::maxnorm_cdf(batch.p(), 1.0, 1e-12).map(|q| {
        let empirical = khintchine::empirical_maxnorm_cdf(batch, 1.0);
        let se = (q * (1.0 - q) / n as f64).sqrt();
        Check::compare(suite, name.clone(), empirical, q, 3.0 * se)
    });
    out.push(from_result(suite, name, r));
    out
}

fn read_samples(source: &str) -> Result<SampleBatch, CliError> {
    let text = if source == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Usage(format!("cannot read stdin: {e}")))?;
        s
    } else {
        fs::read_to_string(source).map_err(|e| CliError::Usage(format!("cannot read {source}: {e}")))?
    };
    parse_samples(&text)
}

/// Parses the CSV or JSON written by `maxnorm sample`.
pub fn parse_samples(text: &str) -> Result<SampleBatch, CliError> {
    let bad = |m: String| CliError::Usage(format!("malformed sample file: {m}"));
    if text.trim_start().starts_with('{') {
        let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let meta = &doc["meta"];
        let seed = meta["seed"].as_u64().unwrap_or(0);
        let generator_id = meta["generator_id"].as_str().unwrap_or("unknown").to_string();
        let rows = doc["data"].as_array().ok_or_else(|| bad("missing data array".into()))?;
        let mut data = Vec::new();
        let mut p = 0;
        for row in rows {
            let xs = row["x"].as_array().ok_or_else(|| bad("record without x".into()))?;
            p = xs.len();
            for v in xs {
                data.push(v.as_f64().ok_or_else(|| bad("non-numeric coordinate".into()))?);
            }
        }
        return SampleBatch::from_parts(data, rows.len(), p, seed, generator_id).map_err(|e| bad(e.to_string()));
    }

    let mut seed = 0;
    let mut generator_id = "unknown".to_string();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') {
            match k {
                "seed" => seed = v.parse().unwrap_or(0),
                "generator_id" => generator_id = v.to_string(),
                _ => {}
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let p = reader.headers().map_err(|e| bad(e.to_string()))?.len();
    let mut data = Vec::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        for field in record.iter() {
            data.push(field.parse::<f64>().map_err(|e| bad(e.to_string()))?);
        }
        n += 1;
    }
    SampleBatch::from_parts(data, n, p, seed, generator_id).map_err(|e| bad(e.to_string()))
}

#[derive(Serialize)]
struct VerifyMeta {
    command: &'static str,
    version: &'static str,
    tol: f64,
    suites: Vec<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generator_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_size: Option<usize>,
}

#[derive(Serialize)]
struct Summary {
    checks: usize,
    failures: usize,
    numerical_failures: usize,
}

#[derive(Serialize)]
struct Report {
    meta: VerifyMeta,
    data: Vec<Check>,
    summary: Summary,
}

fn cmd_verify(
    tol: f64,
    suites: &str,
    seed: u64,
    count: usize,
    samples: Option<&str>,
) -> Result<(Vec<u8>, i32), CliError> {
    if !(tol.is_finite() && tol >= 1e-12) {
        return Err(CliError::Usage(format!("--tol must be >= 1e-12, got {tol}")));
    }
    let suites = parse_suites(suites)?;

    let batch = if suites.contains(&Suite::Sampler) {
        Some(match samples {
            Some(src) => read_samples(src)?,
            None => khintchine::sample_joint(2, count, seed).map_err(|e| CliError::Usage(e.to_string()))?,
        })
    } else {
        None
    };

    let mut outcomes = Vec::new();
    for &suite in &suites {
        outcomes.extend(match suite {
            Suite::Mixture => suite_mixture(tol),
            Suite::Laplace => suite_laplace(tol),
            Suite::Marginal => suite_marginal(tol),
            Suite::Posterior => suite_posterior(tol),
            Suite::Sampler => suite_sampler(batch.as_ref().expect("batch prepared for sampler suite")),
        });
    }

    let numerical_failures = outcomes.iter().filter(|o| o.numerical_failure).count();
    let failures = outcomes.iter().filter(|o| !o.check.pass).count();
    let report = Report {
        meta: VerifyMeta {
            command: "verify",
            version: VERSION,
            tol,
            suites: suites.iter().map(|s| s.name()).collect(),
            seed: batch.as_ref().map(|b| b.seed()),
            generator_id: batch.as_ref().map(|b| b.generator_id().to_string()),
            sample_size: batch.as_ref().map(|b| b.n()),
        },
        summary: Summary {
            checks: outcomes.len(),
            failures,
            numerical_failures,
        },
        data: outcomes.into_iter().map(|o| o.check).collect(),
    };
    let code = if numerical_failures > 0 {
        EXIT_NUMERICAL
    } else if failures > 0 {
        EXIT_VERIFY_FAILED
    } else {
        EXIT_OK
    };
    Ok((to_json(&report), code))
}

/// Quadrature failures surface as exit code 3.
impl From<QuadratureError> for CliError {
    fn from(e: QuadratureError) -> Self {
        CliError::Numerical(e.to_string())
    }
}
