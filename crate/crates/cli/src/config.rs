//! Run configuration: command-line flags over a key=value file over defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use gibc_fem::experiments::Thresholds;
use gibc_fem::fem::{ProblemSpec, Source, WeightKind};
use gibc_fem::{Error, Result};

#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// key=value file; flags given on the command line take precedence
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// +1 or -1
    #[arg(long, allow_hyphen_values = true)]
    pub sign: Option<i8>,
    /// half-power, sign-changing or bridge
    #[arg(long)]
    pub weight: Option<String>,
    /// zero, cos-x or const:<value>
    #[arg(long)]
    pub source: Option<String>,
    /// 1 or 2
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    /// Number of meshes in a study
    #[arg(long)]
    pub levels: Option<usize>,
    /// Uniform refinements of the base mesh for single-mesh commands
    #[arg(long)]
    pub refine: Option<usize>,
    /// algebraic or spectral
    #[arg(long)]
    pub dtn: Option<String>,
    /// Cosine modes of the spectral DtN; defaults to the larger of 64 and the grid size
    #[arg(long)]
    pub modes: Option<usize>,
    /// Largest d ratio accepted as converging
    #[arg(long)]
    pub max_ratio: Option<f64>,
    /// Comma-separated Weyl indices
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<u32>>,
    #[arg(long)]
    pub infsup: Option<bool>,
    #[arg(long)]
    pub timing: Option<bool>,
    /// Also dump solutions as VTK
    #[arg(long)]
    pub vtk: Option<bool>,
    #[arg(long, short = 'o', value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DtnKind {
    Algebraic,
    Spectral,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub spec: ProblemSpec,
    pub degree: usize,
    pub nx: usize,
    pub ny: usize,
    pub levels: usize,
    pub refine: usize,
    pub dtn: DtnKind,
    pub modes: Option<usize>,
    pub thresholds: Thresholds,
    pub weyl_n: Option<Vec<u32>>,
    pub infsup: bool,
    pub timing: bool,
    pub vtk: bool,
    pub out: PathBuf,
}

const KEYS: &[&str] = &[
    "alpha",
    "sign",
    "weight",
    "source",
    "degree",
    "nx",
    "ny",
    "levels",
    "refine",
    "dtn",
    "modes",
    "max_ratio",
    "n",
    "infsup",
    "timing",
    "vtk",
    "out",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value", no + 1)))?;
        let k = k.trim().replace('-', "_");
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::Parse(format!("config line {}: unknown key '{k}'", no + 1)));
        }
        map.insert(k, v.trim().to_string());
    }
    Ok(map)
}

fn from_file<T: std::str::FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    file.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::Parse(format!("config key '{key}': cannot parse '{v}'")))
        })
        .transpose()
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
    Ok(match flag {
        Some(v) => v,
        None => from_file(file, key)?.unwrap_or(default),
    })
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> Result<RunConfig> {
        let file = match &flags.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        let alpha = pick(flags.alpha, &file, "alpha", 0.5)?;
        let sign = pick(flags.sign, &file, "sign", -1i8)?;
        let weight = WeightKind::parse(&pick(flags.weight.clone(), &file, "weight", "half-power".to_string())?)?;
        let source = Source::parse(&pick(flags.source.clone(), &file, "source", "cos-x".to_string())?)?;
        let spec = ProblemSpec::new(alpha, sign, weight)?.with_source(source);
        let dtn = match pick(flags.dtn.clone(), &file, "dtn", "algebraic".to_string())?.as_str() {
            "algebraic" => DtnKind::Algebraic,
            "spectral" => DtnKind::Spectral,
            other => return Err(Error::InvalidInput(format!("unknown DtN variant '{other}'"))),
        };
        let weyl_n = match (&flags.n, file.get("n")) {
            (Some(n), _) => Some(n.clone()),
            (None, Some(v)) => Some(
                v.split(',')
                    .map(|s| s.trim().parse::<u32>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::Parse(format!("config key 'n': cannot parse '{v}'")))?,
            ),
            (None, None) => None,
        };
        let cfg = RunConfig {
            spec,
            degree: pick(flags.degree, &file, "degree", 2)?,
            nx: pick(flags.nx, &file, "nx", 8)?,
            ny: pick(flags.ny, &file, "ny", 4)?,
            levels: pick(flags.levels, &file, "levels", 5)?,
            refine: pick(flags.refine, &file, "refine", 0)?,
            dtn,
            modes: match flags.modes {
                Some(m) => Some(m),
                None => from_file(&file, "modes")?,
            },
            thresholds: Thresholds {
                max_ratio: pick(flags.max_ratio, &file, "max_ratio", Thresholds::default().max_ratio)?,
            },
            weyl_n,
            infsup: pick(flags.infsup, &file, "infsup", false)?,
            timing: pick(flags.timing, &file, "timing", false)?,
            vtk: pick(flags.vtk, &file, "vtk", false)?,
            out: pick(flags.out.clone(), &file, "out", PathBuf::from("."))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if self.degree != 1 && self.degree != 2 {
            return invalid("degree must be 1 or 2");
        }
        if self.nx < 2 || !self.nx.is_multiple_of(2) {
            return invalid("nx must be even and at least 2");
        }
        if self.ny < 1 {
            return invalid("ny must be at least 1");
        }
        if self.levels < 1 {
            return invalid("levels must be at least 1");
        }
        if self.modes == Some(0) {
            return invalid("modes must be at least 1");
        }
        if !(self.thresholds.max_ratio > 0.0 && self.thresholds.max_ratio.is_finite()) {
            return invalid("max_ratio must be positive");
        }
        if let Some(n) = &self.weyl_n {
            if n.is_empty() || n.contains(&0) {
                return invalid("Weyl indices must be positive");
            }
        }
        Ok(())
    }
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config_file(&text)
}
