//! Parameter sweeps over `v`, `alpha1` or the lattice radius.

use num_rational::Rational64;
use rayon::prelude::*;

use crate::compute::{eval_h, eval_h_partial_sums};
use crate::config::JobConfig;
use crate::error::{CliError, CliResult};
use crate::output::Record;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    V,
    Alpha1,
    R,
}

/// Grid values in sweep order.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    V(Vec<f64>),
    Alpha1(Vec<Rational64>),
    R(Vec<u32>),
}

impl Grid {
    /// First grid value of a `v` sweep, which stands in for a missing base `v`.
    pub fn first_v(&self) -> Option<f64> {
        match self {
            Grid::V(vs) => vs.first().copied(),
            _ => None,
        }
    }
}

fn parse_rational(s: &str) -> CliResult<Rational64> {
    let t = s.trim();
    let bad = || CliError::Usage(format!("expected a rational p/q, got '{s}'"));
    match t.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            Ok(Rational64::new(p, q))
        }
        None => Ok(Rational64::from_integer(t.parse().map_err(|_| bad())?)),
    }
}

fn parse_f64(s: &str) -> CliResult<f64> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("expected a number, got '{s}'")))
}

fn parse_u32(s: &str) -> CliResult<u32> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("expected a positive integer, got '{s}'")))
}

/// Builds the grid from an explicit list or from `from`, `to` and `steps ≥ 2` equally
/// spaced points (exact rationals for `alpha1`).
pub fn build_grid(param: SweepParam, values: Option<&str>, from: Option<&str>, to: Option<&str>, steps: Option<usize>) -> CliResult<Grid> {
    if let Some(list) = values {
        let items: Vec<&str> = list.split(',').collect();
        return Ok(match param {
            SweepParam::V => Grid::V(items.iter().map(|s| parse_f64(s)).collect::<CliResult<_>>()?),
            SweepParam::Alpha1 => Grid::Alpha1(items.iter().map(|s| parse_rational(s)).collect::<CliResult<_>>()?),
            SweepParam::R => Grid::R(items.iter().map(|s| parse_u32(s)).collect::<CliResult<_>>()?),
        });
    }
    let (Some(from), Some(to), Some(steps)) = (from, to, steps) else {
        return Err(CliError::Usage("sweep needs --values or all of --from, --to, --steps".into()));
    };
    if steps < 2 {
        return Err(CliError::Usage(format!("--steps must be at least 2, got {steps}")));
    }
    let n = steps - 1;
    Ok(match param {
        SweepParam::V => {
            let (a, b) = (parse_f64(from)?, parse_f64(to)?);
            Grid::V((0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect())
        }
        SweepParam::Alpha1 => {
            let (a, b) = (parse_rational(from)?, parse_rational(to)?);
            Grid::Alpha1((0..=n).map(|k| a + (b - a) * Rational64::new(k as i64, n as i64)).collect())
        }
        SweepParam::R => {
            let (a, b) = (parse_u32(from)?, parse_u32(to)?);
            if b < a || !((b - a) as usize).is_multiple_of(n) {
                return Err(CliError::Usage(format!(
                    "r grid {a}..{b} cannot be split into {steps} integer steps"
                )));
            }
            let d = (b - a) / n as u32;
            Grid::R((0..=n as u32).map(|k| a + d * k).collect())
        }
    })
}

/// One record per grid point, in grid order.
pub fn run_sweep(job: &JobConfig, grid: &Grid) -> CliResult<Vec<Record>> {
    match grid {
        Grid::V(vs) => {
            if let Some(v) = vs.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(CliError::Usage(format!("v must be positive, got {v}")));
            }
            vs.par_iter().map(|&v| eval_h(&JobConfig { v, ..job.clone() })).collect()
        }
        Grid::Alpha1(as1) => as1
            .par_iter()
            .map(|&a1| {
                let alpha = mordell_core::AlphaShift::new(a1, job.alpha.alpha2());
                eval_h(&JobConfig { alpha, ..job.clone() })
            })
            .collect(),
        Grid::R(rs) => {
            let r_top = rs.iter().copied().max().unwrap_or(1);
            if rs.contains(&0) {
                return Err(CliError::Usage("r must be at least 1".into()));
            }
            let all = eval_h_partial_sums(&JobConfig {
                r_max: r_top,
                ..job.clone()
            })?;
            Ok(rs.iter().map(|&r| all[r as usize - 1].clone()).collect())
        }
    }
}
