use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sobolev_core::constants::{make_exponents_checked, QChoice};
use sobolev_core::experiments::geometric_grid;
use sobolev_core::numerics::QuadratureSpec;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Subcommand)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Exponents, closed-form constants and their quadrature oracles.
    Constants,
    /// Functionals of one field described as JSON (see --field).
    Eval,
    /// Boundary L^q mass sweep against its closed-form limit.
    Appendix,
    /// Boundary curvature expansion of the Sobolev quotient.
    Curvature,
    /// Random check of the elementary inequality behind the lower bounds.
    Calculus,
    /// Finite-difference residuals of the linearized radial equation.
    Eigen,
    /// Lower bounds for the sharp constant alpha_0.
    Alpha0,
    /// Gap between the family minimum of Psi_0 and the threshold.
    S0,
    /// The full acceptance suite.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "sobolev-lab", version, about = "Numerical experiments for the critical Neumann problem on the N-ball")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

/// Every flag is optional so that the config file can fill the gaps.
#[derive(Debug, Default, clap::Args)]
struct Flags {
    /// Dimension.
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    /// Subcritical exponent: two_sharp, two_flat, midpoint or a number.
    #[arg(long, global = true)]
    q: Option<String>,
    /// Weight of the L^2 term.
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Ball radius.
    #[arg(long = "R", global = true)]
    r: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Explicit decreasing list of eps values, comma separated.
    #[arg(long, global = true)]
    eps: Option<String>,
    /// First eps of the geometric grid eps0 * 2^-k.
    #[arg(long, global = true)]
    eps0: Option<f64>,
    #[arg(long = "eps-count", global = true)]
    eps_count: Option<usize>,
    /// Absolute quadrature tolerance.
    #[arg(long = "abs-tol", global = true)]
    abs_tol: Option<f64>,
    /// Relative quadrature tolerance.
    #[arg(long = "rel-tol", global = true)]
    rel_tol: Option<f64>,
    /// Pass tolerance of the experiment; each command has its own default.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Grid intervals for the eigen residuals.
    #[arg(long = "M", global = true)]
    m: Option<usize>,
    #[arg(long = "R-trunc", global = true)]
    r_trunc: Option<f64>,
    /// Field for `eval`: inline JSON or a path to a JSON file.
    #[arg(long, global = true)]
    field: Option<String>,
    /// Accept N = 3, 4, outside the range covered by the theory.
    #[arg(long = "allow-low-dimension", global = true)]
    allow_low_dimension: bool,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Flat `key = value` file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(rename = "N")]
    pub n: usize,
    pub q: QChoice,
    pub q_value: f64,
    pub a: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub alpha: f64,
    pub eps_grid: Vec<f64>,
    pub quadrature: QuadratureSpec,
    pub tol: Option<f64>,
    pub rng_seed: u64,
    pub samples: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub r_trunc: f64,
    pub field: Option<serde_json::Value>,
    pub allow_low_dimension: bool,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

const FILE_KEYS: &[&str] = &[
    "N", "q", "a", "R", "alpha", "eps", "eps0", "eps_count", "abs_tol", "rel_tol", "tol", "seed", "samples", "M",
    "R_trunc", "field", "allow_low_dimension", "output", "format",
];

/// `key = value` lines; blank lines and `#` comments are skipped.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key = value, got '{line}'", path.display(), k + 1)))?;
        let key = key.trim().replace('-', "_");
        if !FILE_KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("{}:{}: unknown key '{key}'", path.display(), k + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse().map_err(|_| CliError::Usage(format!("invalid value '{raw}' for {key}")))
}

/// Flag value, else file value, else default.
fn pick<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, CliError> {
    match (flag, file.get(key)) {
        (Some(v), _) => Ok(v),
        (None, Some(raw)) => parse_value(key, raw),
        (None, None) => Ok(default),
    }
}

fn pick_opt<T: FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    match (flag, file.get(key)) {
        (Some(v), _) => Ok(Some(v)),
        (None, Some(raw)) => parse_value(key, raw).map(Some),
        (None, None) => Ok(None),
    }
}

pub fn parse_q(raw: &str) -> Result<QChoice, CliError> {
    match raw {
        "two_sharp" => Ok(QChoice::TwoSharp),
        "two_flat" => Ok(QChoice::TwoFlat),
        "midpoint" => Ok(QChoice::Midpoint),
        _ => raw
            .parse()
            .map(QChoice::Value)
            .map_err(|_| CliError::Usage(format!("invalid value '{raw}' for q: expected two_sharp, two_flat, midpoint or a number"))),
    }
}

fn parse_eps_list(raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',').map(|s| parse_value("eps", s.trim())).collect()
}

fn parse_field(raw: &str) -> Result<serde_json::Value, CliError> {
    let text = if raw.trim_start().starts_with('{') {
        raw.to_string()
    } else {
        std::fs::read_to_string(raw).map_err(|e| CliError::Usage(format!("cannot read field file {raw}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("field is not valid JSON: {e}")))
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("{key} must be positive, got {v}")))
    }
}

/// Parses `argv` (program name first) and merges in the config file.
///
/// Clap errors, including `--help` and an empty command line, come back as
/// [`CliError::Clap`] so the caller can print them with the right exit code.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    let f = cli.flags;
    let file = match &f.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };

    let allow_low_dimension = f.allow_low_dimension || pick_opt(None::<bool>, &file, "allow_low_dimension")?.unwrap_or(false);
    let n = pick(f.n, &file, "N", 5)?;
    let q = match f.q.as_deref().or(file.get("q").map(String::as_str)) {
        Some(raw) => parse_q(raw)?,
        None => QChoice::TwoFlat,
    };
    let q_value = make_exponents_checked(n, q.resolve(n), allow_low_dimension)?.q;
    let r = positive("R", pick(f.r, &file, "R", 1.0)?)?;
    let a = positive("a", pick(f.a, &file, "a", 1.0)?)?;
    let alpha = pick(f.alpha, &file, "alpha", 0.0)?;
    if alpha.is_nan() || alpha < 0.0 {
        return Err(CliError::Usage(format!("alpha must be nonnegative, got {alpha}")));
    }

    let eps_grid = match f.eps.as_deref().or(file.get("eps").map(String::as_str)) {
        Some(list) => parse_eps_list(list)?,
        None => {
            let eps0 = positive("eps0", pick(f.eps0, &file, "eps0", 0.064 * r)?)?;
            let count = pick(f.eps_count, &file, "eps_count", 7)?;
            geometric_grid(eps0, count)
        }
    };

    let base = QuadratureSpec::default();
    let quadrature = QuadratureSpec::new(
        pick(f.abs_tol, &file, "abs_tol", base.abs_tol)?,
        pick(f.rel_tol, &file, "rel_tol", base.rel_tol)?,
        base.max_subdivisions,
        base.tail_cutoff,
    )?;

    let field = match f.field.or_else(|| file.get("field").cloned()) {
        Some(raw) => Some(parse_field(&raw)?),
        None => None,
    };

    Ok(RunConfig {
        command: cli.command,
        n,
        q,
        q_value,
        a,
        r,
        alpha,
        eps_grid,
        quadrature,
        tol: pick_opt(f.tol, &file, "tol")?,
        rng_seed: pick(f.seed, &file, "seed", 42)?,
        samples: pick(f.samples, &file, "samples", 1_000_000)?,
        m: pick(f.m, &file, "M", 512)?,
        r_trunc: positive("R_trunc", pick(f.r_trunc, &file, "R_trunc", 50.0)?)?,
        field,
        allow_low_dimension,
        output_path: pick_opt(f.output, &file, "output")?,
        format: match f.format {
            Some(fmt) => fmt,
            None => match file.get("format") {
                Some(raw) => Format::from_str(raw, true).map_err(|_| CliError::Usage(format!("invalid value '{raw}' for format")))?,
                None => Format::Json,
            },
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keywords_and_numbers() {
        assert_eq!(parse_q("midpoint").unwrap(), QChoice::Midpoint);
        assert_eq!(parse_q("2.6").unwrap(), QChoice::Value(2.6));
        assert!(parse_q("two-flat").is_err());
    }

    #[test]
    fn defaults() {
        let c = parse_config(["sobolev-lab", "constants"]).unwrap();
        assert_eq!((c.n, c.q, c.a, c.r, c.rng_seed), (5, QChoice::TwoFlat, 1.0, 1.0, 42));
        assert_eq!(c.q_value, 8.0 / 3.0);
        assert_eq!(c.eps_grid.len(), 7);
        assert_eq!(c.format, Format::Json);
    }
}
