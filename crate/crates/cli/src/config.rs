//! Command-line flags, the flat `key=value` config file, and their merge into
//! a [`RunConfig`]. Flags win over config-file entries; both use the same keys.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use catch_core::pointsets::DomainSpec;
use catch_core::SolverKind;
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandKind {
    /// Compress a point set into a rule file.
    Compress,
    /// LS versus CATCHLS comparison table over several degrees.
    Table,
    /// Operator-norm curves for LS and CATCHLS on a level-set domain.
    Norms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Union of four disks sampled from 10000 Halton points of its bounding rectangle.
    FourDisks,
    /// The region x⁴ + 4y⁴ <= 1.
    Quartic,
}

impl Preset {
    pub fn domain(self) -> DomainSpec {
        match self {
            Preset::FourDisks => DomainSpec::four_disks(),
            Preset::Quartic => DomainSpec::quartic(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::FourDisks => "four-disks",
            Preset::Quartic => "quartic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "catch",
    version,
    about = "Caratheodory-Tchakaloff compression and compressed least squares"
)]
pub struct Cli {
    /// Command to run; may also come from the config file.
    #[arg(value_enum)]
    pub command: Option<CommandKind>,
    /// Flat key=value file using the long flag names as keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Point file (CSV: coordinates, optional weight).
    #[arg(long, conflicts_with = "preset")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Dimension of the points in --input.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Least-squares degree n (single value).
    #[arg(long, conflicts_with = "degrees")]
    pub degree: Option<usize>,
    /// Comma-separated degrees; `a..b` and `a..b:step` denote inclusive ranges.
    #[arg(long)]
    pub degrees: Option<String>,
    /// `nnls` or `lp`; the table runs both when omitted.
    #[arg(long, value_parser = parse_solver)]
    pub solver: Option<SolverKind>,
    /// Exactness degree as a multiple of the degree (2 for least squares, 1 for plain quadrature).
    #[arg(long)]
    pub exactness_factor: Option<usize>,
    /// Halton points skipped before sampling.
    #[arg(long)]
    pub skip: Option<u64>,
    /// Halton points drawn in the bounding rectangle before filtering.
    #[arg(long)]
    pub count: Option<usize>,
    /// Output file; tables and norms go to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Relative rank tolerance.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// NNLS dual tolerance.
    #[arg(long)]
    pub ktol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Table: report only the polynomial-space dimensions.
    #[arg(long)]
    pub dimensions_only: bool,
}

fn parse_solver(s: &str) -> std::result::Result<SolverKind, String> {
    s.parse().map_err(|e: catch_core::Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Preset(Preset),
    File { path: PathBuf, dim: usize },
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub source: Source,
    pub degrees: Vec<usize>,
    /// `None` runs both solvers where a command supports that (the table).
    pub solver: Option<SolverKind>,
    pub exactness_factor: usize,
    pub skip: u64,
    pub count: usize,
    pub out: Option<PathBuf>,
    pub rtol: Option<f64>,
    pub ktol: Option<f64>,
    pub format: Format,
    pub dimensions_only: bool,
}

pub const DEFAULT_HALTON_COUNT: usize = 10_000;
pub const DEFAULT_RULE_FILE: &str = "catch_rule.csv";

const KEYS: &[&str] = &[
    "command",
    "input",
    "preset",
    "dim",
    "degree",
    "degrees",
    "solver",
    "exactness-factor",
    "skip",
    "count",
    "out",
    "rtol",
    "ktol",
    "format",
    "dimensions-only",
];

/// Reads a flat `key = value` file. `#` starts a comment line; keys accept
/// `_` in place of `-`.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value", k + 1))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            bail!("config line {}: unknown key '{key}'", k + 1);
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn from_config<T>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|e| anyhow!("config key '{key}': {e}"))
        })
        .transpose()
}

fn enum_from_config<T: ValueEnum>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| T::from_str(v, true).map_err(|e| anyhow!("config key '{key}': {e}")))
        .transpose()
}

/// Parses `3,6,9`, `1..10` or `3..18:3` (ranges inclusive).
pub fn parse_degrees(spec: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((lo, rest)) = item.split_once("..") {
            let (hi, step) = match rest.split_once(':') {
                Some((hi, step)) => (hi, step.trim().parse::<usize>()?),
                None => (rest, 1),
            };
            let (lo, hi): (usize, usize) = (lo.trim().parse()?, hi.trim().parse()?);
            if step == 0 || lo > hi {
                bail!("bad degree range '{item}'");
            }
            out.extend((lo..=hi).step_by(step));
        } else {
            out.push(
                item.parse()
                    .with_context(|| format!("bad degree '{item}'"))?,
            );
        }
    }
    if out.is_empty() {
        bail!("empty degree list");
    }
    Ok(out)
}

impl RunConfig {
    /// Merges flags with the config file named by `--config`, if any.
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let map = match &cli.config {
            Some(path) => parse_config_text(
                &fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?,
            )?,
            None => BTreeMap::new(),
        };
        Self::resolve(cli, &map)
    }

    pub fn resolve(cli: Cli, map: &BTreeMap<String, String>) -> Result<Self> {
        let command = match cli.command {
            Some(c) => c,
            None => enum_from_config(map, "command")?
                .ok_or_else(|| anyhow!("no command given (compress, table or norms)"))?,
        };

        let input = cli.input.or(from_config::<PathBuf>(map, "input")?);
        let preset = cli.preset.or(enum_from_config(map, "preset")?);
        let dim = cli.dim.or(from_config(map, "dim")?).unwrap_or(2);
        let source = match (input, preset) {
            (Some(_), Some(_)) => bail!("give either an input file or a preset, not both"),
            (Some(path), None) => Source::File { path, dim },
            (None, Some(p)) => Source::Preset(p),
            (None, None) => Source::Preset(match command {
                CommandKind::Norms => Preset::Quartic,
                _ => Preset::FourDisks,
            }),
        };

        let degree = cli.degree.or(from_config(map, "degree")?);
        let degrees_text = cli.degrees.or(map.get("degrees").cloned());
        let degrees = match (degree, degrees_text) {
            (Some(_), Some(_)) => bail!("give either a degree or a degree list, not both"),
            (Some(d), None) => vec![d],
            (None, Some(list)) => parse_degrees(&list)?,
            (None, None) => match command {
                CommandKind::Compress => bail!("compress needs --degree"),
                CommandKind::Table => parse_degrees("3..18:3")?,
                CommandKind::Norms => parse_degrees("1..15")?,
            },
        };
        if command == CommandKind::Compress && degrees.len() != 1 {
            bail!("compress takes a single degree");
        }

        let solver = match cli.solver {
            Some(s) => Some(s),
            None => from_config::<SolverKind>(map, "solver")?,
        };
        let exactness_factor = cli
            .exactness_factor
            .or(from_config(map, "exactness-factor")?)
            .unwrap_or(2);
        if command != CommandKind::Compress && exactness_factor != 2 {
            bail!("{command:?} compares least-squares fits and needs exactness factor 2");
        }
        let format = cli
            .format
            .or(enum_from_config(map, "format")?)
            .unwrap_or(match command {
                CommandKind::Table => Format::Text,
                _ => Format::Csv,
            });
        let dimensions_only =
            cli.dimensions_only || from_config(map, "dimensions-only")?.unwrap_or(false);

        Ok(RunConfig {
            command,
            source,
            degrees,
            solver,
            exactness_factor,
            skip: cli.skip.or(from_config(map, "skip")?).unwrap_or(0),
            count: cli
                .count
                .or(from_config(map, "count")?)
                .unwrap_or(DEFAULT_HALTON_COUNT),
            out: cli.out.or(from_config(map, "out")?),
            rtol: cli.rtol.or(from_config(map, "rtol")?),
            ktol: cli.ktol.or(from_config(map, "ktol")?),
            format,
            dimensions_only,
        })
    }

    /// Convenience for tests and scripts: parse an argument list as the binary would.
    pub fn from_args<I, T>(args: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        Self::from_cli(Cli::try_parse_from(args)?)
    }

    pub fn out_path(&self) -> Option<&Path> {
        self.out.as_deref()
    }
}
