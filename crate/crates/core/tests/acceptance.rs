//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{off_locus_points, tol};
use mordell_core::eichler::{h_alpha_lattice, m2_eichler_term, verify_identity_1d, M2Path};
use mordell_core::errfns::{err_e, err_e2, err_m2, err_m2_contour, err_m_contour, sgn, M2Args};
use mordell_core::kernel::h_alpha_kernel;
use mordell_core::{AlphaShift, LatticePoint, ModularPoint, QuadraticForm, QuadratureResult, Result};
use num_rational::Rational64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn form(a1: i64, a2: i64, a3: i64) -> QuadraticForm {
    QuadraticForm::new(a1, a2, a3).unwrap()
}

fn alpha(s: &str) -> AlphaShift {
    s.parse().unwrap()
}

fn c1_error_function_relation() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for u in [0.25, -0.25, 1.0, -1.0, 2.5, -2.5] {
        let c = err_m_contour(u, &tol(1e-13))?.require_converged("M contour")?;
        worst = worst.max((c.value.re - (err_e(u) - sgn(u))).abs());
    }
    Ok(Outcome {
        pass: worst < 1e-10,
        detail: format!("max |M_contour - (E - sgn)| = {worst:.2e} (< 1e-10)"),
    })
}

fn c2_two_dimensional_relation() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (k, u1, u2) in off_locus_points(2024, 25, 0.05) {
        let c = err_m2_contour(k, u1, u2, &tol(1e-12))?.require_converged("M2 contour")?;
        let r = err_m2(k, u1, u2, &tol(1e-12))?.require_converged("M2 relation")?;
        worst = worst.max((c.value.re - r.value.re).abs());
    }
    Ok(Outcome {
        pass: worst < 1e-6,
        detail: format!("max |M2_contour - M2_relation| over 25 points = {worst:.2e} (< 1e-6)"),
    })
}

fn c3_separability() -> Result<Outcome> {
    let grid = [-2.0, -0.7, 0.0, 0.4, 1.5];
    let mut worst: f64 = 0.0;
    for &u1 in &grid {
        for &u2 in &grid {
            let r = err_e2(0.0, u1, u2, &tol(1e-12))?.require_converged("E2")?;
            worst = worst.max((r.value.re - err_e(u1) * err_e(u2)).abs());
        }
    }
    Ok(Outcome {
        pass: worst < 1e-8,
        detail: format!("max |E2(0;u) - E(u1)E(u2)| on 5x5 grid = {worst:.2e} (< 1e-8)"),
    })
}

fn c4_one_dimensional_identity() -> Result<Outcome> {
    let i = |v: f64| ModularPoint::pure_imaginary(v).unwrap();
    let cases = [
        ("(1/3,1/2,i)", 1.0 / 3.0, 0.5, i(1.0)),
        ("(1/4,1/4,2i)", 0.25, 0.25, i(2.0)),
        ("(0,0,i)", 0.0, 0.0, i(1.0)),
        ("(1/2,0,i/2)", 0.5, 0.0, i(0.5)),
        ("(2/5,1/3,i)", 0.4, 1.0 / 3.0, i(1.0)),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, a, b, t) in cases {
        let c = verify_identity_1d(a, b, &t, &tol(1e-12))?;
        pass &= c.abs_diff < 1e-6;
        parts.push(format!("{name}: {:.2e}", c.abs_diff));
    }
    Ok(Outcome {
        pass,
        detail: format!("|h - Eichler side| {} (< 1e-6)", parts.join(", ")),
    })
}

fn c5_per_term_identity() -> Result<Outcome> {
    let pt = |p1, q1, p2, q2| LatticePoint::new(Rational64::new(p1, q1), Rational64::new(p2, q2));
    let cases = [
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
    let mut worst: f64 = 0.0;
    for (q, n, v) in cases {
        let args = M2Args::from_lattice(&q, &n, f64::sqrt(v));
        assert!(!args.on_locus());
        let e = m2_eichler_term(&q, &n, &ModularPoint::pure_imaginary(v)?, &tol(1e-12))?.require_converged("Eichler term")?;
        let m = err_m2(args.kappa, args.u1, args.u2, &tol(1e-12))?.require_converged("M2")?;
        worst = worst.max((e.value - m.value).norm());
    }
    Ok(Outcome {
        pass: worst < 1e-5,
        detail: format!("max |Eichler terms - M2| over 10 lattice points = {worst:.2e} (< 1e-5)"),
    })
}

struct Triangle {
    name: String,
    kernel: QuadratureResult,
    lattice: [f64; 3],
}

fn triangle(q: QuadraticForm, a: &str, v: f64, paths: &[M2Path]) -> Result<Triangle> {
    let al = alpha(a);
    let kernel = h_alpha_kernel(&q, &al, v, &tol(1e-10))?.require_converged("kernel integral")?;
    let mut lattice = [f64::NAN; 3];
    for (slot, path) in lattice.iter_mut().zip(paths) {
        let r = h_alpha_lattice(&q, &al, v, 6, &tol(1e-12), *path)?;
        if !r.converged {
            return Err(mordell_core::Error::ConvergenceFailure {
                reason: format!("lattice sum via {path:?}"),
            });
        }
        *slot = r.value();
    }
    Ok(Triangle {
        name: format!("Q={q} alpha=({a}) v={v}"),
        kernel,
        lattice,
    })
}

fn c6_and_9_generic_triangle(imag: &mut Vec<(String, f64, f64)>) -> Result<Outcome> {
    let configs = [
        (form(1, 1, 1), "1/3,1/3", 1.0),
        (form(1, 0, 1), "1/2,1/2", 1.0),
        (form(2, 1, 3), "1/4,2/3", 0.5),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (q, a, v) in configs {
        let t = triangle(q, a, v, &[M2Path::Contour, M2Path::Relation, M2Path::Eichler])?;
        let [c, r, e] = t.lattice;
        let spread = (c - r).abs().max((c - e).abs()).max((r - e).abs());
        let gap = (r - t.kernel.value.re).abs();
        pass &= gap < 1e-4 && spread < 2e-5;
        parts.push(format!(
            "{}: kernel {:.9} lattice {:.9} gap {gap:.2e} path spread {spread:.2e}",
            t.name, t.kernel.value.re, r
        ));
        imag.push((t.name, t.kernel.value.im, t.kernel.err_est));
    }
    Ok(Outcome {
        pass,
        detail: format!("{} (gap < 1e-4, spread < 2e-5)", parts.join("; ")),
    })
}

fn c7_integral_alpha(imag: &mut Vec<(String, f64, f64)>) -> Result<Outcome> {
    let configs = [(form(2, 1, 3), "0,1/2", 0.5), (form(1, 1, 1), "1/3,0", 1.0)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (q, a, v) in configs {
        let t = triangle(q, a, v, &[M2Path::Relation])?;
        let gap = (t.lattice[0] - t.kernel.value.re).abs();
        pass &= gap < 1e-3;
        parts.push(format!(
            "{}: kernel {:.9} lattice {:.9} gap {gap:.2e}",
            t.name, t.kernel.value.re, t.lattice[0]
        ));
        imag.push((t.name, t.kernel.value.im, t.kernel.err_est));
    }
    Ok(Outcome {
        pass,
        detail: format!("{} (< 1e-3)", parts.join("; ")),
    })
}

fn c8_shift_invariance() -> Result<Outcome> {
    let configs = [
        (form(1, 1, 1), ["1/3,1/3", "4/3,1/3", "1/3,4/3"], 1.0),
        (form(2, 1, 3), ["1/4,2/3", "5/4,2/3", "1/4,5/3"], 0.5),
        (form(2, 1, 3), ["0,1/2", "1,1/2", "0,3/2"], 0.5),
    ];
    let mut worst: f64 = 0.0;
    for (q, shifts, v) in configs {
        let vals: Vec<f64> = shifts
            .iter()
            .map(|s| h_alpha_lattice(&q, &alpha(s), v, 6, &tol(1e-12), M2Path::Relation).map(|r| r.value()))
            .collect::<Result<_>>()?;
        for x in &vals[1..] {
            worst = worst.max((x - vals[0]).abs());
        }
    }
    Ok(Outcome {
        pass: worst < 1e-10,
        detail: format!("max |H(alpha + e_j) - H(alpha)| = {worst:.2e} (< 1e-10)"),
    })
}

fn c9_imaginary_parts(imag: &[(String, f64, f64)]) -> Outcome {
    let pass = imag.len() == 5 && imag.iter().all(|(_, im, err)| im.abs() < 10.0 * err);
    let parts: Vec<String> = imag
        .iter()
        .map(|(n, im, err)| format!("{n}: |Im| {:.1e} vs 10*err {:.1e}", im.abs(), 10.0 * err))
        .collect();
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn c10_case_continuity() -> Result<Outcome> {
    let q = form(2, 1, 3);
    let v = 0.5;
    let limit = h_alpha_kernel(&q, &alpha("0,1/2"), v, &tol(1e-10))?
        .require_converged("kernel")?
        .value
        .re;
    let mut gaps = Vec::new();
    for a in ["1/8,1/2", "1/16,1/2", "1/32,1/2"] {
        let k = h_alpha_kernel(&q, &alpha(a), v, &tol(1e-10))?.require_converged("kernel")?;
        gaps.push((k.value.re - limit).abs());
    }
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let last = gaps[2];
    Ok(Outcome {
        pass: monotone && last < 1e-3,
        detail: format!(
            "alpha1=0 value {limit:.9}; gaps at alpha1=1/8,1/16,1/32: {:.3e}, {:.3e}, {:.3e} (monotone {monotone}, final < 1e-3)",
            gaps[0], gaps[1], gaps[2]
        ),
    })
}

fn run(n: u32, name: &str, budget: Duration, f: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let (pass, detail) = match out {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("evaluation failed: {e}")),
    };
    let in_time = elapsed <= budget;
    let ok = pass && in_time;
    println!(
        "criterion {n:>2} [{name}]: {} | {detail} | {:.2}s (budget {}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    ok
}

fn main() -> ExitCode {
    let s = Duration::from_secs;
    let mut imag = Vec::new();
    let results = [
        run(1, "error-function relation", s(1), c1_error_function_relation),
        run(2, "two-dimensional relation", s(30), c2_two_dimensional_relation),
        run(3, "separability at kappa=0", s(5), c3_separability),
        run(4, "one-dimensional identity", s(30), c4_one_dimensional_identity),
        run(5, "per-term Eichler identity", s(120), c5_per_term_identity),
        run(6, "generic-alpha triangle", s(300), || c6_and_9_generic_triangle(&mut imag)),
        run(7, "integral-alpha triangle", s(300), || c7_integral_alpha(&mut imag)),
        run(8, "shift invariance", s(60), c8_shift_invariance),
        run(9, "imaginary-part vanishing", s(1), || Ok(c9_imaginary_parts(&imag))),
        run(10, "case continuity", s(300), c10_case_continuity),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
