//! Evaluations that produce one [`Record`] each.

use mordell_core::eichler::{double_eichler_e_alpha, h_alpha_lattice, mordell_h};
use mordell_core::errfns::{err_e, err_e2, err_m, err_m2, err_m2_contour, err_m_contour};
use mordell_core::kernel::h_alpha_kernel;
use mordell_core::{AlphaShift, ModularPoint, QuadraticForm, QuadratureResult, Tolerance};
use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::config::JobConfig;
use crate::error::{is_convergence, CliResult};
use crate::output::Record;

fn rational(r: Rational64) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn blank(method: String) -> Record {
    Record {
        method,
        a1: None,
        a2: None,
        a3: None,
        alpha1: None,
        alpha2: None,
        v: None,
        value_re: f64::NAN,
        value_im: f64::NAN,
        err_est: f64::NAN,
        n_evals: 0,
        r_used: None,
        converged: false,
    }
}

fn with_job(mut r: Record, form: &QuadraticForm, alpha: &AlphaShift, v: f64) -> Record {
    let (a1, a2, a3) = form.coefficients();
    r.a1 = Some(a1);
    r.a2 = Some(a2);
    r.a3 = Some(a3);
    r.alpha1 = Some(rational(alpha.alpha1()));
    r.alpha2 = Some(rational(alpha.alpha2()));
    r.v = Some(v);
    r
}

fn fill(mut r: Record, q: &QuadratureResult) -> Record {
    r.value_re = q.value.re;
    r.value_im = q.value.im;
    r.err_est = q.err_est;
    r.n_evals = q.n_evals;
    r.converged = q.converged;
    r
}

/// Keeps the record (with `converged = false`) when the evaluation ran out of work,
/// and propagates every other error.
fn settle(base: Record, result: mordell_core::Result<Record>) -> CliResult<Record> {
    match result {
        Ok(r) => Ok(r),
        Err(e) if is_convergence(&e) => Ok(base),
        Err(e) => Err(e.into()),
    }
}

/// `H_α(iv)` by the configured method.
pub fn eval_h(job: &JobConfig) -> CliResult<Record> {
    let base = with_job(blank(job.method.name().to_string()), &job.form, &job.alpha, job.v);
    let result = match job.method.m2_path() {
        None => h_alpha_kernel(&job.form, &job.alpha, job.v, &job.tol).map(|q| fill(base.clone(), &q)),
        Some(path) => h_alpha_lattice(&job.form, &job.alpha, job.v, job.r_max, &job.tol, path).map(|rep| {
            let mut r = base.clone();
            r.value_re = rep.value();
            r.value_im = 0.0;
            r.err_est = rep.tail_estimate + rep.term_err;
            r.n_evals = rep.n_evals;
            r.r_used = Some(rep.r_max);
            r.converged = rep.converged;
            r
        }),
    };
    let mut base = base;
    if job.method.m2_path().is_some() {
        base.r_used = Some(job.r_max);
    }
    settle(base, result)
}

/// Partial sums `S_1 … S_{r_max}` of the lattice series, one record per radius; the
/// error column is the distance to the extrapolated limit.
pub fn eval_h_partial_sums(job: &JobConfig) -> CliResult<Vec<Record>> {
    let path = job
        .method
        .m2_path()
        .ok_or_else(|| crate::error::CliError::Usage("sweeping r needs a lattice method".into()))?;
    let base = with_job(blank(job.method.name().to_string()), &job.form, &job.alpha, job.v);
    match h_alpha_lattice(&job.form, &job.alpha, job.v, job.r_max, &job.tol, path) {
        Ok(rep) => Ok(rep
            .partial_sums
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut r = base.clone();
                r.value_re = *s;
                r.value_im = 0.0;
                // Distance to the extrapolated limit.
                r.err_est = (s - rep.extrapolated).abs() + rep.term_err;
                r.n_evals = rep.n_evals;
                r.r_used = Some(i as u32 + 1);
                r.converged = rep.converged;
                r
            })
            .collect()),
        Err(e) if is_convergence(&e) => Ok((1..=job.r_max)
            .map(|k| {
                let mut r = base.clone();
                r.r_used = Some(k);
                r
            })
            .collect()),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum ErrfnKind {
    #[value(name = "E")]
    E,
    #[value(name = "M")]
    M,
    #[value(name = "E2")]
    E2,
    #[value(name = "M2")]
    M2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ErrfnPath {
    Relation,
    Contour,
}

/// `E`, `M`, `E₂` or `M₂`; `u` has one component for the unary functions and two otherwise.
pub fn eval_errfn(kind: ErrfnKind, path: ErrfnPath, kappa: f64, u: &[f64], tol: &Tolerance) -> CliResult<Record> {
    let name = |k: &str| format!("errfn-{k}-{}", if path == ErrfnPath::Relation { "relation" } else { "contour" });
    let need = match kind {
        ErrfnKind::E | ErrfnKind::M => 1,
        _ => 2,
    };
    if u.len() != need {
        return Err(crate::error::CliError::Usage(format!(
            "--u needs {need} component(s), got {}",
            u.len()
        )));
    }
    let exact = |x: f64| QuadratureResult {
        value: Complex64::new(x, 0.0),
        err_est: 4.0 * f64::EPSILON * x.abs(),
        n_evals: 0,
        converged: true,
    };
    let label = match kind {
        ErrfnKind::E => "E",
        ErrfnKind::M => "M",
        ErrfnKind::E2 => "E2",
        ErrfnKind::M2 => "M2",
    };
    let base = blank(name(label));
    let result = match (kind, path) {
        (ErrfnKind::E, _) => Ok(exact(err_e(u[0]))),
        (ErrfnKind::M, ErrfnPath::Relation) => err_m(u[0]).map(exact),
        (ErrfnKind::M, ErrfnPath::Contour) => err_m_contour(u[0], tol),
        (ErrfnKind::E2, _) => err_e2(kappa, u[0], u[1], tol),
        (ErrfnKind::M2, ErrfnPath::Relation) => err_m2(kappa, u[0], u[1], tol),
        (ErrfnKind::M2, ErrfnPath::Contour) => err_m2_contour(kappa, u[0], u[1], tol),
    };
    settle(base.clone(), result.map(|q| fill(base, &q)))
}

/// `h(z; τ)`. The `v` column carries `Im τ`.
pub fn eval_mordell(z: Complex64, tau: Complex64, tol: &Tolerance) -> CliResult<Record> {
    let mut base = blank("mordell-h".into());
    base.v = Some(tau.im);
    let tau = ModularPoint::new(tau)?;
    settle(base.clone(), mordell_h(z, &tau, tol).map(|q| fill(base, &q)))
}

/// The double Eichler integral over the box of radius `r_max`. The `v` column carries `Im τ`.
pub fn eval_double_eichler(form: &QuadraticForm, alpha: &AlphaShift, tau: Complex64, tol: &Tolerance, r_max: u32) -> CliResult<Record> {
    let mut base = with_job(blank("double-eichler".into()), form, alpha, tau.im);
    base.r_used = Some(r_max);
    let point = ModularPoint::new(tau)?;
    let result = double_eichler_e_alpha(form, alpha, &point, tol, r_max).map(|rep| {
        let mut r = base.clone();
        r.value_re = rep.value.re;
        r.value_im = rep.value.im;
        r.err_est = rep.err_est;
        r.n_evals = rep.n_evals;
        r.converged = true;
        r
    });
    settle(base, result)
}
