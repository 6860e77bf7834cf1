//! Job configuration assembled from defaults, an optional JSON file and flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use mordell_core::eichler::M2Path;
use mordell_core::quad::DEFAULT_MAX_EVALS;
use mordell_core::{AlphaShift, QuadraticForm, Tolerance};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MAX_EVALS_ENV: &str = "MORDELL_MAX_EVALS";
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_R_MAX: u32 = 6;
pub const DEFAULT_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LatticeContour,
    LatticeRelation,
    LatticeEichler,
    Kernel,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::LatticeContour => "lattice-contour",
            Method::LatticeRelation => "lattice-relation",
            Method::LatticeEichler => "lattice-eichler",
            Method::Kernel => "kernel",
        }
    }

    /// `M₂` route for the lattice methods, `None` for the kernel integral.
    pub fn m2_path(self) -> Option<M2Path> {
        match self {
            Method::LatticeContour => Some(M2Path::Contour),
            Method::LatticeRelation => Some(M2Path::Relation),
            Method::LatticeEichler => Some(M2Path::Eichler),
            Method::Kernel => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// A complex number given as `re,im` or a bare real `re`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexArg(pub Complex64);

impl FromStr for ComplexArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("expected 're,im', got '{s}'"));
        let z = match s.split_once(',') {
            Some((re, im)) => Complex64::new(parse(re)?, parse(im)?),
            None => Complex64::new(parse(s)?, 0.0),
        };
        if z.re.is_finite() && z.im.is_finite() {
            Ok(ComplexArg(z))
        } else {
            Err(format!("non-finite complex number '{s}'"))
        }
    }
}

/// Tolerance in a config file: a single number for both parts, or the full triple.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum TolSpec {
    Scalar(f64),
    Full {
        abs_tol: f64,
        rel_tol: f64,
        max_evals: Option<usize>,
    },
}

/// Contents of a `--config` file; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub form: Option<QuadraticForm>,
    pub alpha: Option<AlphaShift>,
    pub v: Option<f64>,
    pub tol: Option<TolSpec>,
    pub r_max: Option<u32>,
    pub method: Option<Method>,
    pub output: Option<OutputFormat>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Flags shared by the evaluation and sweep commands.
#[derive(Debug, Clone, Default, Args)]
pub struct JobArgs {
    /// Quadratic form coefficients `a1,a2,a3`.
    #[arg(long)]
    pub form: Option<QuadraticForm>,
    /// Shift vector as rationals `p/q,r/s`.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<AlphaShift>,
    /// Imaginary part of `tau = iv`.
    #[arg(long)]
    pub v: Option<f64>,
    /// Point of the upper half-plane as `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<ComplexArg>,
    /// Absolute and relative tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Largest lattice box radius.
    #[arg(long = "r-max")]
    pub r_max: Option<u32>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long, value_enum)]
    pub out: Option<OutputFormat>,
    /// JSON file with defaults for any of the above; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// A fully resolved job.
#[derive(Debug, Clone, Serialize)]
pub struct JobConfig {
    pub form: QuadraticForm,
    pub alpha: AlphaShift,
    pub v: f64,
    pub tol: Tolerance,
    pub r_max: u32,
    pub method: Method,
    pub output: OutputFormat,
    pub seed: u64,
}

/// Per-integral evaluation cap: `MORDELL_MAX_EVALS` if set, otherwise the library default.
pub fn max_evals_cap() -> CliResult<usize> {
    match std::env::var(MAX_EVALS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("{MAX_EVALS_ENV} must be a positive integer, got '{s}'"))),
        Err(_) => Ok(DEFAULT_MAX_EVALS),
    }
}

/// Tolerance from a scalar or a file entry, with `max_evals` capped by the environment.
pub fn make_tolerance(spec: Option<TolSpec>) -> CliResult<Tolerance> {
    let cap = max_evals_cap()?;
    let (abs, rel, evals) = match spec {
        None => (DEFAULT_TOL, DEFAULT_TOL, cap),
        Some(TolSpec::Scalar(t)) => (t, t, cap),
        Some(TolSpec::Full {
            abs_tol,
            rel_tol,
            max_evals,
        }) => (abs_tol, rel_tol, max_evals.unwrap_or(cap).min(cap)),
    };
    Ok(Tolerance::new(abs, rel, evals)?)
}

/// Output format from flags, then file, then CSV.
pub fn output_format(flag: Option<OutputFormat>, file: &FileConfig) -> OutputFormat {
    flag.or(file.output).unwrap_or(OutputFormat::Csv)
}

impl JobArgs {
    pub fn file(&self) -> CliResult<FileConfig> {
        match &self.config {
            Some(p) => FileConfig::load(p),
            None => Ok(FileConfig::default()),
        }
    }

    /// `tau` from `--tau`, or `iv` from `--v` / the config file.
    pub fn tau(&self, file: &FileConfig, fallback_v: Option<f64>) -> CliResult<Complex64> {
        match (self.tau, self.v.or(file.v).or(fallback_v)) {
            (Some(t), Some(v)) if self.v.is_some() && t.0 != Complex64::new(0.0, v) => {
                Err(CliError::Usage(format!("--tau {} and --v {v} disagree", t.0)))
            }
            (Some(t), _) => Ok(t.0),
            (None, Some(v)) => Ok(Complex64::new(0.0, v)),
            (None, None) => Err(CliError::Usage("missing --v or --tau".into())),
        }
    }

    pub fn resolve(&self) -> CliResult<JobConfig> {
        self.resolve_with_v(None)
    }

    /// As [`JobArgs::resolve`], with `fallback_v` used when neither flags nor file give `v`.
    pub fn resolve_with_v(&self, fallback_v: Option<f64>) -> CliResult<JobConfig> {
        let file = self.file()?;
        let form = self.form.or(file.form).ok_or_else(|| CliError::Usage("missing --form".into()))?;
        let alpha = self.alpha.or(file.alpha).ok_or_else(|| CliError::Usage("missing --alpha".into()))?;
        let tau = self.tau(&file, fallback_v)?;
        if tau.re != 0.0 {
            return Err(CliError::Usage(format!(
                "H is evaluated on the imaginary axis only; got tau = {tau}"
            )));
        }
        let v = tau.im;
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Usage(format!("v must be positive, got {v}")));
        }
        let tol = make_tolerance(self.tol.map(TolSpec::Scalar).or(file.tol))?;
        let r_max = self.r_max.or(file.r_max).unwrap_or(DEFAULT_R_MAX);
        if r_max == 0 {
            return Err(CliError::Usage("--r-max must be at least 1".into()));
        }
        Ok(JobConfig {
            form,
            alpha,
            v,
            tol,
            r_max,
            method: self.method.or(file.method).unwrap_or(Method::Kernel),
            output: output_format(self.out, &file),
            seed: self.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        })
    }
}
