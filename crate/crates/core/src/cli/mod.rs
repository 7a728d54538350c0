//! Command-line front end.
//!
//! Every setting can come from a flag or from a `key = value` config file
//! passed with `--config`; flags win. Keys in the file are the flag names
//! without the leading dashes (`theta`, `T`, `N`, `levels`, ...).

mod dispatch;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::analysis::{Payoff, Quantity};

pub use dispatch::{
    dispatch, format_float, run, EXIT_DIVERGENCE, EXIT_FAILED, EXIT_OK, EXIT_USAGE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// List the built-in models
    Models,
    /// Simulate one path and print t,S,dS,ddS
    Simulate,
    /// Strong-error moments per level and the fitted rate
    Converge,
    /// Sup-moments per level
    Moments,
    /// MLMC level-difference variances
    Mlmc,
    /// Jet-vs-explicit and finite-difference checks
    Validate,
    /// Random instances of the product-difference moment bound
    Lemma,
}

/// Reference solution for `converge`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// Consecutive levels on coupled paths.
    Coupled,
    /// GBM closed form on the same Brownian path (gbm only).
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: String,
    pub theta: f64,
    pub s0: f64,
    pub ds0: f64,
    pub dds0: f64,
    pub t_final: f64,
    pub base_steps: usize,
    pub levels: (u32, u32),
    pub ps: Vec<u32>,
    pub n_paths: usize,
    pub seed: u64,
    /// `None` selects every quantity.
    pub quantity: Option<Quantity>,
    pub output: Option<PathBuf>,
    pub eps: f64,
    pub workers: usize,
    pub k: Option<usize>,
    pub trials: usize,
    pub payoff: Payoff,
    pub reference: Reference,
}

/// A usage problem: bad flag, bad value, unknown config key. `code` is the
/// process exit status (0 for `--help`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError {
    pub message: String,
    pub code: i32,
}

impl UsageError {
    fn new(message: impl Into<String>) -> Self {
        UsageError {
            message: message.into(),
            code: EXIT_USAGE,
        }
    }
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(
    name = "pathsens",
    version,
    about = "Euler-Maruyama path sensitivities and strong-convergence studies"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Config file with `key = value` lines; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model id: gbm, trig or additive [default: trig]
    #[arg(long)]
    model: Option<String>,
    /// Parameter θ [default: 0.1]
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Initial state [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    s0: Option<String>,
    /// Initial first sensitivity [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    ds0: Option<String>,
    /// Initial second sensitivity [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    dds0: Option<String>,
    /// Final time [default: 1]
    #[arg(long = "T")]
    t_final: Option<String>,
    /// Base step count; level l uses N·2^l steps [default: 16]
    #[arg(long = "N")]
    steps: Option<String>,
    /// Inclusive level range `a..b` [default: 4..9]
    #[arg(long)]
    levels: Option<String>,
    /// Moment order(s), comma separated [default: 2]
    #[arg(long)]
    p: Option<String>,
    /// Monte Carlo paths [default: 10000]
    #[arg(long)]
    paths: Option<String>,
    /// Base seed [default: 0]
    #[arg(long)]
    seed: Option<String>,
    /// state, tangent1, tangent2 or all [default: all]
    #[arg(long)]
    quantity: Option<String>,
    /// CSV destination [default: standard output]
    #[arg(long)]
    output: Option<String>,
    /// Small finite-difference bump for validate [default: 1e-4·max(1,|θ|)]
    #[arg(long)]
    eps: Option<String>,
    /// Worker threads, 0 = all cores; never changes the output [default: 0]
    #[arg(long)]
    workers: Option<String>,
    /// Factor count for lemma (required for lemma)
    #[arg(long)]
    k: Option<String>,
    /// Random instances for lemma [default: 1000]
    #[arg(long)]
    trials: Option<String>,
    /// MLMC payoff: state, tangent or call-tangent [default: tangent]
    #[arg(long)]
    payoff: Option<String>,
    /// Strike for the call-tangent payoff [default: S0]
    #[arg(long, allow_hyphen_values = true)]
    strike: Option<String>,
    /// converge reference: coupled or exact [default: coupled]
    #[arg(long)]
    reference: Option<String>,
}

const KEYS: &[&str] = &[
    "model",
    "theta",
    "s0",
    "ds0",
    "dds0",
    "T",
    "N",
    "levels",
    "p",
    "paths",
    "seed",
    "quantity",
    "output",
    "eps",
    "workers",
    "k",
    "trials",
    "payoff",
    "strike",
    "reference",
];

/// Parses a config file body: one `key = value` per line, `#` starts a
/// comment, blank lines are ignored.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            UsageError::new(format!(
                "config line {}: expected `key = value`",
                lineno + 1
            ))
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(UsageError::new(format!(
                "config line {}: unknown key `{key}`",
                lineno + 1
            )));
        }
        out.insert(key.to_owned(), value.trim().to_owned());
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, UsageError> {
    raw.parse()
        .map_err(|_| UsageError::new(format!("malformed value for `{key}`: `{raw}`")))
}

fn real(key: &str, raw: &str) -> Result<f64, UsageError> {
    let v: f64 = number(key, raw)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(UsageError::new(format!(
            "`{key}` must be finite, got `{raw}`"
        )))
    }
}

fn parse_levels(raw: &str) -> Result<(u32, u32), UsageError> {
    let (a, b) = raw
        .split_once("..")
        .ok_or_else(|| UsageError::new(format!("levels must look like `a..b`, got `{raw}`")))?;
    let lo: u32 = number("levels", a.trim())?;
    let hi: u32 = number("levels", b.trim())?;
    if lo > hi {
        return Err(UsageError::new(format!("empty level range `{raw}`")));
    }
    if hi > 40 {
        return Err(UsageError::new(format!("level {hi} is too large")));
    }
    Ok((lo, hi))
}

fn parse_ps(raw: &str) -> Result<Vec<u32>, UsageError> {
    let ps = raw
        .split(',')
        .map(|s| number::<u32>("p", s.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    if ps.iter().any(|&p| p < 2) {
        return Err(UsageError::new("moment orders must be ≥ 2"));
    }
    Ok(ps)
}

/// Builds a [`RunConfig`] from the command line (program name first).
pub fn parse_config<I, S>(argv: I) -> Result<RunConfig, UsageError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| UsageError {
        message: e.render().to_string(),
        code: if e.use_stderr() { EXIT_USAGE } else { EXIT_OK },
    })?;

    let mut values = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                UsageError::new(format!("cannot read config file {}: {e}", path.display()))
            })?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    let flags = [
        ("model", &cli.model),
        ("theta", &cli.theta),
        ("s0", &cli.s0),
        ("ds0", &cli.ds0),
        ("dds0", &cli.dds0),
        ("T", &cli.t_final),
        ("N", &cli.steps),
        ("levels", &cli.levels),
        ("p", &cli.p),
        ("paths", &cli.paths),
        ("seed", &cli.seed),
        ("quantity", &cli.quantity),
        ("output", &cli.output),
        ("eps", &cli.eps),
        ("workers", &cli.workers),
        ("k", &cli.k),
        ("trials", &cli.trials),
        ("payoff", &cli.payoff),
        ("strike", &cli.strike),
        ("reference", &cli.reference),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            values.insert(key.to_owned(), v.clone());
        }
    }
    let get = |k: &str| values.get(k).map(String::as_str);

    let theta = get("theta")
        .map(|v| real("theta", v))
        .transpose()?
        .unwrap_or(0.1);
    let s0 = get("s0").map(|v| real("s0", v)).transpose()?.unwrap_or(1.0);
    let t_final = get("T").map(|v| real("T", v)).transpose()?.unwrap_or(1.0);
    if t_final <= 0.0 {
        return Err(UsageError::new("T must be positive"));
    }
    let base_steps: usize = get("N").map(|v| number("N", v)).transpose()?.unwrap_or(16);
    if base_steps == 0 {
        return Err(UsageError::new("N must be at least 1"));
    }
    let n_paths: usize = get("paths")
        .map(|v| number("paths", v))
        .transpose()?
        .unwrap_or(10_000);
    if n_paths < 2 {
        return Err(UsageError::new("paths must be at least 2"));
    }
    let eps = match get("eps") {
        Some(v) => {
            let e = real("eps", v)?;
            if e <= 0.0 {
                return Err(UsageError::new("eps must be positive"));
            }
            e
        }
        None => crate::oracle::default_fd_bump(theta),
    };
    let quantity = match get("quantity") {
        None | Some("all") => None,
        Some(q) => Some(
            q.parse::<Quantity>()
                .map_err(|e| UsageError::new(e.to_string()))?,
        ),
    };
    let strike = get("strike")
        .map(|v| real("strike", v))
        .transpose()?
        .unwrap_or(s0);
    let payoff = match get("payoff").unwrap_or("tangent").parse::<Payoff>() {
        Ok(Payoff::CallTangent { .. }) => Payoff::CallTangent { strike },
        Ok(p) => p,
        Err(e) => return Err(UsageError::new(e.to_string())),
    };
    let reference = match get("reference").unwrap_or("coupled") {
        "coupled" => Reference::Coupled,
        "exact" => Reference::Exact,
        other => {
            return Err(UsageError::new(format!(
                "unknown reference `{other}` (expected coupled or exact)"
            )))
        }
    };
    let k = get("k").map(|v| number::<usize>("k", v)).transpose()?;
    if cli.command == Command::Lemma {
        match k {
            None => return Err(UsageError::new("lemma requires --k")),
            Some(0) => return Err(UsageError::new("k must be at least 1")),
            _ => {}
        }
    }

    Ok(RunConfig {
        command: cli.command,
        model: get("model").unwrap_or("trig").to_owned(),
        theta,
        s0,
        ds0: get("ds0")
            .map(|v| real("ds0", v))
            .transpose()?
            .unwrap_or(0.0),
        dds0: get("dds0")
            .map(|v| real("dds0", v))
            .transpose()?
            .unwrap_or(0.0),
        t_final,
        base_steps,
        levels: get("levels")
            .map(parse_levels)
            .transpose()?
            .unwrap_or((4, 9)),
        ps: get("p")
            .map(parse_ps)
            .transpose()?
            .unwrap_or_else(|| vec![2]),
        n_paths,
        seed: get("seed")
            .map(|v| number("seed", v))
            .transpose()?
            .unwrap_or(0),
        quantity,
        output: get("output").map(PathBuf::from),
        eps,
        workers: get("workers")
            .map(|v| number("workers", v))
            .transpose()?
            .unwrap_or(0),
        k,
        trials: get("trials")
            .map(|v| number("trials", v))
            .transpose()?
            .unwrap_or(1000),
        payoff,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn parse(args: &[&str]) -> Result<RunConfig, UsageError> {
        parse_config(std::iter::once("pathsens").chain(args.iter().copied()))
    }

    #[test]
    fn converge_flags() {
        let c = parse(&[
            "converge", "--model", "trig", "--p", "2", "--levels", "4..9", "--paths", "100000",
            "--seed", "42",
        ])
        .unwrap();
        assert_eq!(c.command, Command::Converge);
        assert_eq!(c.model, "trig");
        assert_eq!(c.ps, vec![2]);
        assert_eq!(c.levels, (4, 9));
        assert_eq!(c.n_paths, 100_000);
        assert_eq!(c.seed, 42);
        assert_eq!(
            (c.theta, c.s0, c.ds0, c.dds0, c.t_final, c.base_steps),
            (0.1, 1.0, 0.0, 0.0, 1.0, 16)
        );
        assert_eq!(c.quantity, None);
    }

    #[test]
    fn defaults() {
        let c = parse(&["moments"]).unwrap();
        assert_eq!(c.model, "trig");
        assert_eq!(c.n_paths, 10_000);
        assert_eq!(c.seed, 0);
        assert_eq!(c.ps, vec![2]);
        assert_eq!(c.eps, 1e-4);
        assert_eq!(c.workers, 0);
    }

    #[test]
    fn flags_override_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            "# study settings\ntheta = 0.05\nT = 2   # horizon\n\npaths = 500"
        )
        .unwrap();
        let path = f.path().to_str().unwrap();
        let c = parse(&["converge", "--config", path, "--theta", "0.1"]).unwrap();
        assert_eq!(c.theta, 0.1);
        assert_eq!(c.t_final, 2.0);
        assert_eq!(c.n_paths, 500);
        let c = parse(&["converge", "--config", path]).unwrap();
        assert_eq!(c.theta, 0.05);
    }

    #[test]
    fn usage_errors() {
        for args in [
            &["converge", "--levels", "9..4"][..],
            &["converge", "--levels", "4-9"],
            &["converge", "--theta", "abc"],
            &["converge", "--p", "1"],
            &["converge", "--paths", "1"],
            &["converge", "--quantity", "tangent3"],
            &["converge", "--bogus", "1"],
            &["frobnicate"],
            &["lemma", "--p", "2"],
            &["mlmc", "--payoff", "digital"],
            &["converge", "--reference", "analytic"],
            &["converge", "--T", "0"],
        ] {
            let err = parse(args).unwrap_err();
            assert_eq!(err.code, EXIT_USAGE, "{args:?}");
        }
    }

    #[test]
    fn unknown_file_key_rejected() {
        assert!(parse_config_file("theta = 1\nvolatility = 0.2\n").is_err());
        assert!(parse_config_file("theta 1\n").is_err());
        let m = parse_config_file("  # only comments\nseed=3").unwrap();
        assert_eq!(m.get("seed").unwrap(), "3");
    }

    #[test]
    fn negative_values_and_lists() {
        let c = parse(&[
            "simulate",
            "--theta",
            "-0.5",
            "--p",
            "2,4,8",
            "--quantity",
            "tangent2",
        ])
        .unwrap();
        assert_eq!(c.theta, -0.5);
        assert_eq!(c.ps, vec![2, 4, 8]);
        assert_eq!(c.quantity, Some(Quantity::Tangent2));
        let c = parse(&["mlmc", "--payoff", "call-tangent", "--s0", "1.5"]).unwrap();
        assert_eq!(c.payoff, Payoff::CallTangent { strike: 1.5 });
    }

    #[test]
    fn help_exits_zero() {
        let err = parse(&["--help"]).unwrap_err();
        assert_eq!(err.code, EXIT_OK);
    }
}
