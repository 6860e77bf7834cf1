//! Verification suites: each check compares two independently computed quantities.

use std::time::Instant;

use mordell_core::eichler::{h_alpha_lattice, m2_eichler_term, verify_identity_1d, M2Path};
use mordell_core::errfns::{err_e, err_e2, err_m2, err_m2_contour, err_m_contour, sgn, M2Args};
use mordell_core::kernel::h_alpha_kernel;
use mordell_core::{AlphaShift, LatticePoint, ModularPoint, QuadraticForm, Tolerance};
use num_complex::Complex64;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::is_convergence;
use crate::output::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    /// Error-function relations and separability.
    Errfns,
    /// The one-dimensional Mordell/Eichler identity.
    Onedim,
    /// Per-term identity, lattice/kernel triangles, shift invariance, imaginary parts.
    Theorem,
    /// Convergence of the kernel integral as alpha1 tends to 0.
    Continuity,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Errfns => "errfns",
            Suite::Onedim => "onedim",
            Suite::Theorem => "theorem",
            Suite::Continuity => "continuity",
            Suite::All => "all",
        }
    }
}

/// One comparison. `lhs` and `rhs` are `[re, im]`; the check passes when
/// `abs_diff < tolerance`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub abs_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub suite: String,
    pub tol_scale: f64,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub pass: bool,
    /// False when any evaluation stopped for lack of convergence.
    pub converged: bool,
    pub wall_time_s: f64,
}

struct Collector {
    scale: f64,
    checks: Vec<Check>,
    converged: bool,
    max_evals: usize,
}

impl Collector {
    fn tol(&self, eps: f64) -> Tolerance {
        Tolerance::new(eps, eps, self.max_evals).expect("fixed tolerances are valid")
    }

    fn compare(&mut self, name: String, tolerance: f64, f: impl FnOnce(&Self) -> mordell_core::Result<(Complex64, Complex64)>) {
        let tolerance = tolerance * self.scale;
        let check = match f(self) {
            Ok((l, r)) => {
                let d = (l - r).norm();
                Check {
                    name,
                    lhs: [l.re, l.im],
                    rhs: [r.re, r.im],
                    abs_diff: d,
                    tolerance,
                    pass: d < tolerance,
                    error: None,
                }
            }
            Err(e) => {
                if is_convergence(&e) {
                    self.converged = false;
                }
                Check {
                    name,
                    lhs: [f64::NAN; 2],
                    rhs: [f64::NAN; 2],
                    abs_diff: f64::NAN,
                    tolerance,
                    pass: false,
                    error: Some(e.to_string()),
                }
            }
        };
        self.checks.push(check);
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn form(a1: i64, a2: i64, a3: i64) -> QuadraticForm {
    QuadraticForm::new(a1, a2, a3).expect("fixed forms are positive definite")
}

fn alpha(s: &str) -> AlphaShift {
    s.parse().expect("fixed shifts parse")
}

fn errfns_suite(c: &mut Collector, seed: u64) {
    for u in [0.25, -0.25, 1.0, -1.0, 2.5, -2.5] {
        c.compare(format!("M contour vs E - sgn at u={u}"), 1e-10, |c| {
            let m = err_m_contour(u, &c.tol(1e-13))?.require_converged("M contour")?;
            Ok((re(m.value.re), re(err_e(u) - sgn(u))))
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = 0;
    while n < 25 {
        let k: f64 = rng.gen_range(-2.0..=2.0);
        let u1: f64 = rng.gen_range(-3.0..=3.0);
        let u2: f64 = rng.gen_range(-3.0..=3.0);
        if u2.abs() <= 0.05 || (u1 - k * u2).abs() <= 0.05 {
            continue;
        }
        n += 1;
        c.compare(format!("M2 contour vs relation at kappa={k:.6} u=({u1:.6},{u2:.6})"), 1e-6, |c| {
            let t = c.tol(1e-12);
            let a = err_m2_contour(k, u1, u2, &t)?.require_converged("M2 contour")?;
            let b = err_m2(k, u1, u2, &t)?.require_converged("M2 relation")?;
            Ok((re(a.value.re), re(b.value.re)))
        });
    }
    let grid = [-2.0, -0.7, 0.0, 0.4, 1.5];
    for &u1 in &grid {
        for &u2 in &grid {
            c.compare(format!("E2(0;u) vs E(u1)E(u2) at u=({u1},{u2})"), 1e-8, |c| {
                let e = err_e2(0.0, u1, u2, &c.tol(1e-12))?.require_converged("E2")?;
                Ok((re(e.value.re), re(err_e(u1) * err_e(u2))))
            });
        }
    }
}

fn onedim_suite(c: &mut Collector) {
    let cases = [
        ("1/3", 1.0 / 3.0, "1/2", 0.5, 1.0),
        ("1/4", 0.25, "1/4", 0.25, 2.0),
        ("0", 0.0, "0", 0.0, 1.0),
        ("1/2", 0.5, "0", 0.0, 0.5),
        ("2/5", 0.4, "1/3", 1.0 / 3.0, 1.0),
    ];
    for (an, a, bn, b, v) in cases {
        c.compare(format!("h(a tau - b) vs Eichler side at a={an} b={bn} tau={v}i"), 1e-6, |c| {
            let r = verify_identity_1d(a, b, &ModularPoint::pure_imaginary(v)?, &c.tol(1e-12))?;
            Ok((r.lhs, r.rhs))
        });
    }
}

fn lattice_value(c: &Collector, q: &QuadraticForm, a: &AlphaShift, v: f64, path: M2Path) -> mordell_core::Result<f64> {
    let r = h_alpha_lattice(q, a, v, 6, &c.tol(1e-12), path)?;
    if !r.converged {
        return Err(mordell_core::Error::ConvergenceFailure {
            reason: format!("lattice sum via {path:?} did not converge"),
        });
    }
    Ok(r.value())
}

fn theorem_suite(c: &mut Collector) {
    let pt = |p1, q1, p2, q2| LatticePoint::new(Rational64::new(p1, q1), Rational64::new(p2, q2));
    let per_term = [
        (form(1, 1, 1), pt(1, 3, 1, 3), 1.0),
        (form(1, 1, 1), pt(-2, 3, 1, 3), 0.5),
        (form(1, 1, 1), pt(4, 3, -5, 3), 1.0),
        (form(1, 0, 1), pt(1, 2, 1, 2), 1.0),
        (form(1, 0, 1), pt(-1, 2, 3, 2), 0.5),
        (form(1, 0, 1), pt(1, 4, -1, 3), 1.0),
        (form(2, 1, 3), pt(1, 2, -1, 2), 0.5),
        (form(2, 1, 3), pt(1, 4, 2, 3), 0.5),
        (form(2, 1, 3), pt(-3, 4, -1, 3), 1.0),
        (form(2, 1, 3), pt(5, 4, 2, 3), 1.0),
    ];
    for (q, n, v) in per_term {
        let (n1, n2) = (n.n1, n.n2);
        c.compare(format!("Eichler terms vs M2 at Q=({q}) n=({n1},{n2}) v={v}"), 1e-5, |c| {
            let t = c.tol(1e-12);
            let e = m2_eichler_term(&q, &n, &ModularPoint::pure_imaginary(v)?, &t)?.require_converged("Eichler terms")?;
            let a = M2Args::from_lattice(&q, &n, v.sqrt());
            let m = err_m2(a.kappa, a.u1, a.u2, &t)?.require_converged("M2")?;
            Ok((e.value, m.value))
        });
    }

    let generic = [
        (form(1, 1, 1), "1/3,1/3", 1.0),
        (form(1, 0, 1), "1/2,1/2", 1.0),
        (form(2, 1, 3), "1/4,2/3", 0.5),
    ];
    let integral = [(form(2, 1, 3), "0,1/2", 0.5), (form(1, 1, 1), "1/3,0", 1.0)];
    for (q, a, v) in generic.iter().chain(integral.iter()) {
        let al = alpha(a);
        let is_generic = al.case() == mordell_core::AlphaCase::Generic;
        let label = format!("Q=({q}) alpha=({a}) v={v}");
        let kernel = h_alpha_kernel(q, &al, *v, &c.tol(1e-10));
        c.compare(
            format!("kernel vs lattice-relation at {label}"),
            if is_generic { 1e-4 } else { 1e-3 },
            |c| {
                let k = kernel.clone()?.require_converged("kernel integral")?;
                Ok((re(k.value.re), re(lattice_value(c, q, &al, *v, M2Path::Relation)?)))
            },
        );
        c.compare(format!("kernel imaginary part at {label}"), 1.0, |_| {
            let k = kernel.clone()?;
            // Scaled so that the check reads |Im| < 10·err_est.
            Ok((re(k.value.im.abs() / (10.0 * k.err_est)), re(0.0)))
        });
        if is_generic {
            for (pa, pb) in [
                (M2Path::Contour, M2Path::Relation),
                (M2Path::Contour, M2Path::Eichler),
                (M2Path::Relation, M2Path::Eichler),
            ] {
                c.compare(format!("lattice {pa:?} vs {pb:?} at {label}"), 2e-5, |c| {
                    Ok((re(lattice_value(c, q, &al, *v, pa)?), re(lattice_value(c, q, &al, *v, pb)?)))
                });
            }
        }
        for (k1, k2) in [(1, 0), (0, 1)] {
            c.compare(format!("shift invariance alpha+({k1},{k2}) at {label}"), 1e-10, |c| {
                Ok((
                    re(lattice_value(c, q, &al.shifted(k1, k2), *v, M2Path::Relation)?),
                    re(lattice_value(c, q, &al, *v, M2Path::Relation)?),
                ))
            });
        }
    }
}

fn continuity_suite(c: &mut Collector) {
    let q = form(2, 1, 3);
    let v = 0.5;
    let limit = h_alpha_kernel(&q, &alpha("0,1/2"), v, &c.tol(1e-10));
    let mut gaps = Vec::new();
    for a in ["1/8,1/2", "1/16,1/2", "1/32,1/2"] {
        let k = h_alpha_kernel(&q, &alpha(a), v, &c.tol(1e-10));
        if let (Ok(k), Ok(l)) = (&k, &limit) {
            gaps.push((a, (k.value.re - l.value.re).abs()));
        }
        if a == "1/32,1/2" {
            c.compare(format!("kernel at alpha=({a}) vs alpha=(0,1/2)"), 1e-3, |_| {
                let k = k?.require_converged("kernel")?;
                let l = limit.clone()?.require_converged("kernel")?;
                Ok((re(k.value.re), re(l.value.re)))
            });
        }
    }
    for w in gaps.windows(2) {
        let ((a0, g0), (a1, g1)) = (w[0], w[1]);
        // Passes when the gap shrinks: abs_diff is measured against g0 itself.
        c.compare(format!("gap decreases from alpha=({a0}) to alpha=({a1})"), 1.0, |_| {
            Ok((re(g1 / g0), re(0.0)))
        });
    }
}

pub fn run_suite(suite: Suite, tol_scale: f64, seed: u64, max_evals: usize) -> VerifyReport {
    let start = Instant::now();
    let mut c = Collector {
        scale: tol_scale,
        checks: Vec::new(),
        converged: true,
        max_evals,
    };
    let all = suite == Suite::All;
    if all || suite == Suite::Errfns {
        errfns_suite(&mut c, seed);
    }
    if all || suite == Suite::Onedim {
        onedim_suite(&mut c);
    }
    if all || suite == Suite::Theorem {
        theorem_suite(&mut c);
    }
    if all || suite == Suite::Continuity {
        continuity_suite(&mut c);
    }
    let pass = c.checks.iter().all(|k| k.pass);
    VerifyReport {
        schema_version: SCHEMA_VERSION,
        suite: suite.name().to_string(),
        tol_scale,
        seed,
        checks: c.checks,
        pass,
        converged: c.converged,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}
