//! Mordell and Eichler integrals, and the lattice-sum evaluation of `H_α(iv)`.
//!
//! - [`mordell_h`] and [`eichler_1d`] are the one-dimensional pair linked by
//!   [`verify_identity_1d`].
//! - [`eichler_term`] is the iterated integral of two exponentials against
//!   `(−i(ω+τ))^{−1/2}` over the wedge above a lower limit.
//! - [`m2_eichler_term`] writes `M₂(κ; √v·u(n))` as a combination of two such terms.
//! - [`double_eichler_e_alpha`] sums those terms over a lattice box.
//! - [`h_alpha_lattice`] evaluates `H_α(iv) = 2·lim Σ M₂(κ; √(v/2)u(n))e^{2πvQ(n)}`
//!   with any of the three `M₂` routes and extrapolates the partial sums in the box
//!   radius.

use std::f64::consts::PI;

use errorfunctions::{ComplexErrorFunctions, RealErrorFunctions};
use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::errfns::{m2_contour_scaled, m2_scaled, M2Args};
use crate::error::{Error, Result};
use crate::forms::{ratio_f64, AlphaCase, AlphaShift, LatticePoint, ModularPoint, QuadraticForm};
use crate::quad::{integrate_1d_with_breaks, integrate_halfline, QuadratureResult, Tolerance};
use crate::theta::unary_theta;

fn i_unit() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

fn finest(tol: &Tolerance) -> f64 {
    match (tol.abs_tol > 0.0, tol.rel_tol > 0.0) {
        (true, true) => tol.abs_tol.min(tol.rel_tol),
        (true, false) => tol.abs_tol,
        _ => tol.rel_tol,
    }
}

/// `h(z; τ) = ∫_ℝ cosh(2πzw)/cosh(πw)·e^{πiτw²} dw`.
///
/// The integrand is even in `w`, so twice the half-line integral is taken. On
/// `w ≥ 0` the ratio is evaluated as `(e^{(2πz−π)w} + e^{(−2πz−π)w})/(1 + e^{−2πw})`,
/// which cannot overflow. The range is cut where the modulus
/// `≲ 2e^{−πvw² + π(2|Re z| − 1)w}` has fallen below the tolerance.
pub fn mordell_h(z: Complex64, tau: &ModularPoint, tol: &Tolerance) -> Result<QuadratureResult> {
    tol.validate()?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidInput(format!("z must be finite, got {z}")));
    }
    let t = tau.tau();
    let v = t.im;
    let slope = PI * (2.0 * z.re.abs() - 1.0);
    let peak = (slope / (2.0 * PI * v)).max(0.0);
    let peak_log = slope * peak - PI * v * peak * peak;
    let level = (1.0 / finest(tol)).ln().clamp(20.0, 700.0) + 4.6 + peak_log.max(0.0);
    // Solve πv w² − slope·w = level for the cut-off.
    let cut = (slope + (slope * slope + 4.0 * PI * v * level).sqrt()) / (2.0 * PI * v);
    let a = Complex64::new(2.0 * PI, 0.0) * z - PI;
    let b = Complex64::new(-2.0 * PI, 0.0) * z - PI;
    let f = |w: f64| {
        let ratio = ((a * w).exp() + (b * w).exp()) / (1.0 + (-2.0 * PI * w).exp());
        ratio * (i_unit() * PI * t * w * w).exp()
    };
    let mut breaks = vec![0.0, cut];
    if peak > 0.0 && peak < cut {
        breaks.push(peak);
    }
    let r = integrate_1d_with_breaks(f, &breaks, &tol.scaled(0.5))?;
    let tail = 4.0 * (-level + peak_log.max(0.0)).exp();
    Ok(QuadratureResult {
        value: r.value * 2.0,
        err_est: 2.0 * r.err_est + tail,
        ..r
    })
}

/// `∫_1^∞ e^{−πλt}/√(t + c) dt` with `Re c > 0`.
fn half_line_kernel(lambda: f64, c: Complex64, tol: &Tolerance) -> Result<QuadratureResult> {
    let f = |t: f64| (-PI * lambda * (t - 1.0)).exp() / (t + c).sqrt();
    let r = integrate_halfline(f, 1.0, 1.0 / (PI * lambda), tol)?;
    Ok(r.scale(Complex64::new((-PI * lambda).exp(), 0.0)))
}

/// `∫_1^∞ e^{−πλs}/√(1 + cs) ds` with `Re c > 0`.
fn inverted_kernel(lambda: f64, c: Complex64, tol: &Tolerance) -> Result<QuadratureResult> {
    let f = |s: f64| (-PI * lambda * (s - 1.0)).exp() / (1.0 + c * s).sqrt();
    let r = integrate_halfline(f, 1.0, 1.0 / (PI * lambda), tol)?;
    Ok(r.scale(Complex64::new((-PI * lambda).exp(), 0.0)))
}

/// Points of `a + ℤ` (excluding 0) with `e^{−πn²}/(π|n|)` summed over the rest below
/// `eps`.
fn progression(a: f64, eps: f64) -> Vec<f64> {
    let a0 = a - (a + 0.5).floor();
    let mut k_max = 1i64;
    loop {
        let edge = k_max as f64 + 1.0 - a0.abs();
        // Σ_{|n| ≥ edge} e^{−πn²}/(π|n|) ≤ 2e^{−π edge²}/(π edge)·(1 + 1/(2π edge)).
        let bound = 2.0 * (-PI * edge * edge).exp() / (PI * edge) * (1.0 + 1.0 / (2.0 * PI * edge));
        if bound <= eps {
            break;
        }
        k_max += 1;
    }
    (-k_max..=k_max).map(|k| a0 + k as f64).filter(|n| *n != 0.0).collect()
}

/// `∫_0^{i∞} g_{a+½,b+½}(w)/√(−i(w+τ)) dw` along `w = it`.
///
/// The range is split at `t = 1`. On `[1, ∞)` the theta series is integrated term by
/// term; on `(0, 1]` the inversion
/// `g_{A,B}(it) = i e^{2πiAB} t^{−3/2} g_{B,−A}(i/t)` followed by `s = 1/t` turns the
/// slowly convergent small-`t` region into another rapidly convergent series.
pub fn eichler_1d(a: f64, b: f64, tau: &ModularPoint, tol: &Tolerance) -> Result<QuadratureResult> {
    tol.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput("characteristics must be finite".into()));
    }
    let big_a = a + 0.5;
    let big_b = b + 0.5;
    let c = -i_unit() * tau.tau();
    let eps = 0.1 * finest(tol);
    let term_tol = tol.scaled(0.05);

    let mut acc = QuadratureResult::zero();
    let mut push = |weight: Complex64, r: QuadratureResult| {
        acc.value += weight * r.value;
        acc.err_est += weight.norm() * r.err_est;
        acc.n_evals += r.n_evals;
        acc.converged &= r.converged;
    };
    for n in progression(big_a, eps) {
        let w = Complex64::new(0.0, 2.0 * PI * big_b * n).exp() * n;
        push(w, half_line_kernel(n * n, c, &term_tol)?);
    }
    let pre = i_unit() * Complex64::new(0.0, 2.0 * PI * big_a * big_b).exp();
    for m in progression(big_b, eps) {
        let w = pre * Complex64::new(0.0, -2.0 * PI * big_a * m).exp() * m;
        push(w, inverted_kernel(m * m, c, &term_tol)?);
    }
    acc.value *= i_unit();
    // Both omitted tails are bounded by Σ e^{−πn²}/(π|n|) ≤ eps.
    acc.err_est += 2.0 * eps;
    Ok(acc)
}

/// The same integral by direct quadrature of the truncated theta series over
/// `[δ, ∞)`. Returns the quadrature result together with a bound on the omitted
/// `∫_0^δ`, obtained from the inverted series.
pub fn eichler_1d_direct(a: f64, b: f64, tau: &ModularPoint, delta: f64, tol: &Tolerance) -> Result<(QuadratureResult, f64)> {
    tol.validate()?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1], got {delta}")));
    }
    let big_a = a + 0.5;
    let big_b = b + 0.5;
    let c = -i_unit() * tau.tau();
    let theta_tol = 0.01 * finest(tol);
    let a0 = big_a - (big_a + 0.5).floor();
    let n_min = if a0 == 0.0 { 1.0 } else { a0.abs() };
    let failure = std::cell::RefCell::new(None);
    let f = |t: f64| {
        let pt = match ModularPoint::pure_imaginary(t) {
            Ok(p) => p,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                return Complex64::new(0.0, 0.0);
            }
        };
        match unary_theta(big_a, big_b, &pt, theta_tol) {
            Ok(g) => i_unit() * g.value / (t + c).sqrt(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let r = integrate_halfline(f, delta, 1.0 / (PI * n_min * n_min), tol);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let r = r?;
    // |∫_0^δ g(it)/√(t+c) dt| ≤ Σ_m |m| √δ e^{−πm²/δ}/(πm²) / √Re(c).
    let b0 = big_b - (big_b + 0.5).floor();
    let mut remainder = 0.0;
    for k in -60i64..=60 {
        let m = b0 + k as f64;
        if m != 0.0 {
            remainder += delta.sqrt() * (-PI * m * m / delta).exp() / (PI * m.abs());
        }
    }
    remainder /= c.re.sqrt();
    Ok((r, remainder))
}

/// Both sides of the one-dimensional identity
/// `h(aτ − b; τ) = −e^{−2πia(b+½)} q^{a²/2} ∫_0^{i∞} g_{a+½,b+½}(w)/√(−i(w+τ)) dw`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_diff: f64,
    pub err_est: f64,
}

pub fn verify_identity_1d(a: f64, b: f64, tau: &ModularPoint, tol: &Tolerance) -> Result<IdentityCheck> {
    let t = tau.tau();
    let lhs = mordell_h(Complex64::new(a, 0.0) * t - b, tau, tol)?;
    let e = eichler_1d(a, b, tau, tol)?;
    let pre = -(Complex64::new(0.0, -2.0 * PI * a * (b + 0.5)) + i_unit() * PI * t * a * a).exp();
    let rhs = pre * e.value;
    Ok(IdentityCheck {
        lhs: lhs.value,
        rhs,
        abs_diff: (lhs.value - rhs).norm(),
        err_est: lhs.err_est + pre.norm() * e.err_est,
    })
}

/// Lower limit of the outer integral in [`eichler_term`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowerLimit {
    /// `−τ̄`; the path `−τ̄ + it` keeps `−i(ω + τ) = 2 Im τ + t` real and positive.
    MinusConjTau,
    /// `0`, along `ω = it`.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EichlerTermSpec {
    pub c1: f64,
    pub c2: f64,
    pub lower_limit: LowerLimit,
    pub tau: ModularPoint,
}

/// `W(c₁, c₂; V) = ∫_0^∞∫_{s₁}^∞ e^{−πc₁s₁−πc₂s₂}/(√(s₁+V)√(s₂+V)) ds₂ds₁`, `Re V > 0`.
///
/// The inner integral is
/// `e^{−πc₂s₁}·erfcx(√(πc₂(s₁+V)))/√c₂`, valid for complex `V` by continuation.
pub fn wedge_w(c1: f64, c2: f64, big_v: Complex64, tol: &Tolerance) -> Result<QuadratureResult> {
    if !(c1.is_finite() && c2.is_finite() && c1 >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "exponent coefficients must be finite and non-negative, got ({c1}, {c2})"
        )));
    }
    if !(c2 > 0.0) {
        return Err(Error::domain("inner Eichler integral diverges for c2 = 0"));
    }
    if !(big_v.re > 0.0) {
        return Err(Error::domain(format!("path leaves the half-plane Re(-i(w+tau)) > 0 (V = {big_v})")));
    }
    let sc2 = c2.sqrt();
    let real = big_v.im == 0.0;
    let f = |s: f64| {
        let y = s + big_v;
        let inner = if real {
            Complex64::new(RealErrorFunctions::erfcx((PI * c2 * y.re).sqrt()), 0.0)
        } else {
            ComplexErrorFunctions::erfcx((y * PI * c2).sqrt())
        };
        inner * ((-PI * (c1 + c2) * s).exp() / sc2) / y.sqrt()
    };
    integrate_halfline(f, 0.0, 1.0 / (PI * (c1 + c2)), tol)
}

/// `∫_L^{i∞} e^{πic₁ω₁}/√(−i(ω₁+τ)) ∫_{ω₁}^{i∞} e^{πic₂ω₂}/√(−i(ω₂+τ)) dω₂dω₁`.
///
/// For [`LowerLimit::MinusConjTau`] the value is the contour integral itself,
/// `−e^{−πi(c₁+c₂)Re τ}e^{−π(c₁+c₂)Im τ}·W(c₁,c₂; 2Im τ)`. For [`LowerLimit::Zero`]
/// the factor `i²` from `dω₁dω₂ = i²dt₁dt₂` is dropped, so the value is the positive
/// iterated integral `W(c₁,c₂; −iτ)`.
pub fn eichler_term(spec: &EichlerTermSpec, tol: &Tolerance) -> Result<QuadratureResult> {
    tol.validate()?;
    let t = spec.tau.tau();
    match spec.lower_limit {
        LowerLimit::Zero => wedge_w(spec.c1, spec.c2, -i_unit() * t, tol),
        LowerLimit::MinusConjTau => {
            let radicand = -i_unit() * (-t.conj() + t);
            if !(radicand.re > 0.0) {
                return Err(Error::domain(format!("branch invariant violated: radicand {radicand}")));
            }
            let s = spec.c1 + spec.c2;
            let pre = -(Complex64::new(-PI * s * t.im, -PI * s * t.re)).exp();
            let w = wedge_w(spec.c1, spec.c2, radicand, tol)?;
            Ok(w.scale(pre))
        }
    }
}

/// Coefficients and exponents of the two terms representing `M₂` at a lattice point:
/// `(coef, c₁, c₂)` with `coef = n₂(2a₁n₁+a₂n₂)/a₁`, `c = ((2a₁n₁+a₂n₂)²/(2a₁), Dn₂²/(2a₁))`
/// and the mirror term with `a₁ ↔ a₃`, `n₁ ↔ n₂`. A term is `None` when its coefficient
/// vanishes exactly.
fn eichler_pieces(form: &QuadraticForm, n: &LatticePoint) -> [Option<(f64, f64, f64)>; 2] {
    let (a1, a2, a3) = form.coefficients();
    let d = Rational64::from_integer(form.disc());
    let piece = |aa: i64, ab: i64, m1: Rational64, m2: Rational64| {
        // coef = m₂(2a m₁ + a₂ m₂)/a, exponents (p²/(2a), D m₂²/(2a)).
        let p = m1 * (2 * aa) + m2 * ab;
        let coef = m2 * p / aa;
        if coef.is_zero() {
            return None;
        }
        let den = Rational64::from_integer(2 * aa);
        Some((ratio_f64(coef), ratio_f64(p * p / den), ratio_f64(d * m2 * m2 / den)))
    };
    [piece(a1, a2, n.n1, n.n2), piece(a3, a2, n.n2, n.n1)]
}

/// The two-term Eichler representation of `M₂(κ; √v·u(n))` at `τ = x + iv`:
/// `−(√D/2)q^{Q(n)}[coef₁·I(c) + coef₂·I(c′)]` with `I` the [`LowerLimit::MinusConjTau`]
/// terms. Terms whose coefficient vanishes are skipped before evaluation.
pub fn m2_eichler_term(form: &QuadraticForm, n: &LatticePoint, tau: &ModularPoint, tol: &Tolerance) -> Result<QuadratureResult> {
    let t = tau.tau();
    let q_n = ratio_f64(form.eval_q_exact(n));
    let sd = (form.disc() as f64).sqrt();
    let pre = -(sd / 2.0) * (Complex64::new(0.0, 2.0 * PI * q_n) * t).exp();
    let mut out = QuadratureResult::zero();
    for (coef, c1, c2) in eichler_pieces(form, n).into_iter().flatten() {
        let spec = EichlerTermSpec {
            c1,
            c2,
            lower_limit: LowerLimit::MinusConjTau,
            tau: *tau,
        };
        let r = eichler_term(&spec, &tol.scaled(0.5))?;
        out.value += r.value * coef;
        out.err_est += coef.abs() * r.err_est;
        out.n_evals += r.n_evals;
        out.converged &= r.converged;
    }
    Ok(out.scale(pre))
}

/// `e^{4πvQ(n)}·M₂(κ; √v·u(n)) = (√D/2)[coef₁·W(c; 2v) + coef₂·W(c′; 2v)]`, free of the
/// Gaussian factors that cancel between `q^{Q(n)}` and the Eichler terms.
pub fn m2_eichler_scaled(form: &QuadraticForm, n: &LatticePoint, v: f64, tol: &Tolerance) -> Result<QuadratureResult> {
    let sd = (form.disc() as f64).sqrt();
    let tau2 = ModularPoint::pure_imaginary(2.0 * v)?;
    let mut out = QuadratureResult::zero();
    for (coef, c1, c2) in eichler_pieces(form, n).into_iter().flatten() {
        let spec = EichlerTermSpec {
            c1,
            c2,
            lower_limit: LowerLimit::Zero,
            tau: tau2,
        };
        let r = eichler_term(&spec, &tol.scaled(0.5 / coef.abs().max(1.0)))?;
        out.value += r.value * coef;
        out.err_est += coef.abs() * r.err_est;
        out.n_evals += r.n_evals;
        out.converged &= r.converged;
    }
    Ok(out.scale(Complex64::new(sd / 2.0, 0.0)))
}

/// Route used for `M₂` inside [`h_alpha_lattice`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum M2Path {
    Contour,
    Relation,
    Eichler,
}

/// Partial sums of the lattice series for `H_α(iv)` and their extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeSumReport {
    pub path: M2Path,
    pub r_max: u32,
    /// `S_r` for `r = 1..=r_max`.
    pub partial_sums: Vec<f64>,
    /// `|S_r − S_{r−1}|` for `r = 2..=r_max`.
    pub increments: Vec<f64>,
    /// `S_{r_max}`.
    pub raw: f64,
    /// Polynomial extrapolation of `S_r` to `1/(r+½) → 0`.
    pub extrapolated: f64,
    /// Difference between the extrapolations using `r ≥ 1` and `r ≥ 2`.
    pub tail_estimate: f64,
    /// Sum of the per-term quadrature error estimates (times 2).
    pub term_err: f64,
    pub n_terms: usize,
    pub n_evals: usize,
    /// Lattice points with `n₁ = 0` or `n₂ = 0`.
    pub n_locus_terms: usize,
    /// Terms evaluated by the relation instead of the requested path.
    pub n_routed: usize,
    /// Largest `|Eichler − relation|` over locus terms (Eichler path only).
    pub locus_discrepancy: Option<f64>,
    pub converged: bool,
}

impl LatticeSumReport {
    /// The reported value of `H_α(iv)`.
    pub fn value(&self) -> f64 {
        self.extrapolated
    }
}

/// Value at `0` of the interpolating polynomial through `(h_i, s_i)` (Neville).
pub fn richardson_extrapolate(h: &[f64], s: &[f64]) -> f64 {
    assert_eq!(h.len(), s.len());
    if s.is_empty() {
        return f64::NAN;
    }
    let mut p = s.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
        }
    }
    p[0]
}

struct TermValue {
    value: f64,
    err: f64,
    n_evals: usize,
    converged: bool,
    on_locus: bool,
    routed: bool,
    locus_diff: Option<f64>,
}

fn lattice_term(form: &QuadraticForm, n: &LatticePoint, v: f64, path: M2Path, tol: &Tolerance) -> Result<TermValue> {
    let args = M2Args::from_lattice(form, n, (v / 2.0).sqrt());
    let on_locus = args.on_locus();
    let done = |r: QuadratureResult, routed: bool, locus_diff: Option<f64>| TermValue {
        value: r.value.re,
        err: r.err_est,
        n_evals: r.n_evals,
        converged: r.converged,
        on_locus,
        routed,
        locus_diff,
    };
    match (path, on_locus) {
        (M2Path::Relation, _) => Ok(done(m2_scaled(&args, tol)?, false, None)),
        (M2Path::Contour, false) => Ok(done(m2_contour_scaled(&args, tol)?, false, None)),
        (M2Path::Contour, true) => Ok(done(m2_scaled(&args, tol)?, true, None)),
        (M2Path::Eichler, false) => Ok(done(m2_eichler_scaled(form, n, v / 2.0, tol)?, false, None)),
        (M2Path::Eichler, true) => {
            let rel = m2_scaled(&args, tol)?;
            let e = m2_eichler_scaled(form, n, v / 2.0, tol)?;
            let diff = (e.value.re - rel.value.re).abs();
            let mut t = done(rel, true, Some(diff));
            t.n_evals += e.n_evals;
            Ok(t)
        }
    }
}

/// `H_α(iv)` from the lattice series `2·Σ_{|n_j−α_j|≤r} e^{2πvQ(n)}M₂(κ; √(v/2)·u(n))`.
///
/// Each term is computed in the scaled form `e^{π|u|²}M₂(κ; u)`, which is how the
/// series is summed without overflow or cancellation. Terms are independent and
/// evaluated in parallel, then summed ring by ring (row-major within a ring), so the
/// result does not depend on the number of worker threads.
///
/// The terms decay only like `1/(n₁n₂)` in each direction, so `S_r` approaches its
/// limit like `1/r`; the report's value is the polynomial extrapolation of all partial
/// sums in `h = 1/(r + ½)`. Locus points (`n₁ = 0` or `n₂ = 0`) always use the
/// relation route, since the contour route is undefined there.
///
/// `tol` is the per-term quadrature tolerance.
pub fn h_alpha_lattice(
    form: &QuadraticForm,
    alpha: &AlphaShift,
    v: f64,
    r_max: u32,
    tol: &Tolerance,
    path: M2Path,
) -> Result<LatticeSumReport> {
    tol.validate()?;
    if alpha.case() == AlphaCase::BothIntegral {
        return Err(Error::InvalidInput("alpha with both components integral is not supported".into()));
    }
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidInput(format!("v must be positive, got {v}")));
    }
    if r_max == 0 {
        return Err(Error::InvalidInput("r_max must be at least 1".into()));
    }
    let alpha = alpha.reduced();
    let r = i64::from(r_max);
    let mut offsets: Vec<(i64, i64)> = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
    for k1 in -r..=r {
        for k2 in -r..=r {
            offsets.push((k1, k2));
        }
    }
    let ring = |(k1, k2): (i64, i64)| k1.abs().max(k2.abs());
    offsets.sort_by_key(|&k| ring(k));

    let terms: Vec<Result<TermValue>> = offsets
        .par_iter()
        .map(|&(k1, k2)| {
            let n = LatticePoint::from_offset(&alpha, k1, k2);
            lattice_term(form, &n, v, path, tol)
        })
        .collect();

    let mut ring_sums = vec![0.0f64; r_max as usize + 1];
    let mut term_err = 0.0;
    let mut n_evals = 0;
    let mut n_locus = 0;
    let mut n_routed = 0;
    let mut locus_disc: Option<f64> = None;
    let mut all_converged = true;
    for (&k, t) in offsets.iter().zip(terms) {
        let t = t?;
        ring_sums[ring(k) as usize] += t.value;
        term_err += 2.0 * t.err;
        n_evals += t.n_evals;
        all_converged &= t.converged;
        n_locus += usize::from(t.on_locus);
        n_routed += usize::from(t.routed);
        if let Some(d) = t.locus_diff {
            locus_disc = Some(locus_disc.map_or(d, |m| m.max(d)));
        }
    }

    let mut partial = Vec::with_capacity(r_max as usize);
    let mut running = ring_sums[0];
    for s in ring_sums.iter().skip(1) {
        running += s;
        partial.push(2.0 * running);
    }
    let increments: Vec<f64> = partial.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let hs: Vec<f64> = (1..=r_max).map(|k| 1.0 / (f64::from(k) + 0.5)).collect();
    let extrapolated = richardson_extrapolate(&hs, &partial);
    let tail_estimate = if partial.len() >= 3 {
        (extrapolated - richardson_extrapolate(&hs[1..], &partial[1..])).abs()
    } else {
        increments.last().copied().unwrap_or(f64::INFINITY)
    };

    let scale = partial.iter().fold(1.0f64, |m, s| m.max(s.abs()));
    let floor = 1e-12 * scale + term_err;
    if increments.len() >= 3 {
        let last = &increments[increments.len() - 3..];
        let significant = last.iter().any(|d| *d > floor);
        if significant && !(last[0] > last[1] && last[1] > last[2]) {
            return Err(Error::NonConvergence {
                reason: format!(
                    "lattice increments {:.3e}, {:.3e}, {:.3e} are not decreasing",
                    last[0], last[1], last[2]
                ),
            });
        }
    }

    Ok(LatticeSumReport {
        path,
        r_max,
        raw: *partial.last().unwrap_or(&0.0),
        partial_sums: partial,
        increments,
        extrapolated,
        tail_estimate,
        term_err,
        n_terms: offsets.len(),
        n_evals,
        n_locus_terms: n_locus,
        n_routed,
        locus_discrepancy: locus_disc,
        converged: all_converged,
    })
}

/// The double Eichler integral summed over a lattice box.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleEichlerReport {
    pub value: Complex64,
    /// Contribution of the outermost ring.
    pub last_ring: f64,
    pub err_est: f64,
    pub n_terms: usize,
    pub n_evals: usize,
}

/// `𝓔_α(τ) = −(√D/4)∫_{−τ̄}^{i∞}∫_{ω₁}^{i∞}(θ₁+θ₂)(ω₁,ω₂)/(√(−i(ω₁+τ))√(−i(ω₂+τ)))`,
/// evaluated term by term over the box `|n_j − α_j| ≤ r_max`:
/// `−(√D/4)Σ_n [coef₁·I(c) + coef₂·I(c′)]`. Every term carries `e^{−2πQ(n)Im τ}`, so
/// the box sum converges geometrically; `NonConvergence` is returned when the outermost
/// ring still contributes more than the tolerance.
pub fn double_eichler_e_alpha(
    form: &QuadraticForm,
    alpha: &AlphaShift,
    tau: &ModularPoint,
    tol: &Tolerance,
    r_max: u32,
) -> Result<DoubleEichlerReport> {
    tol.validate()?;
    if r_max == 0 {
        return Err(Error::InvalidInput("r_max must be at least 1".into()));
    }
    let alpha = alpha.reduced();
    let r = i64::from(r_max);
    let mut offsets = Vec::new();
    for k1 in -r..=r {
        for k2 in -r..=r {
            offsets.push((k1, k2));
        }
    }
    let ring = |(k1, k2): (i64, i64)| k1.abs().max(k2.abs());
    offsets.sort_by_key(|&k| ring(k));
    let term_tol = tol.scaled(0.1);
    let terms: Vec<Result<(Complex64, f64, usize)>> = offsets
        .par_iter()
        .map(|&(k1, k2)| {
            let n = LatticePoint::from_offset(&alpha, k1, k2);
            let mut acc = Complex64::new(0.0, 0.0);
            let mut err = 0.0;
            let mut evals = 0;
            for (coef, c1, c2) in eichler_pieces(form, &n).into_iter().flatten() {
                let spec = EichlerTermSpec {
                    c1,
                    c2,
                    lower_limit: LowerLimit::MinusConjTau,
                    tau: *tau,
                };
                let t = eichler_term(&spec, &term_tol)?;
                acc += t.value * coef;
                err += coef.abs() * t.err_est;
                evals += t.n_evals;
            }
            Ok((acc, err, evals))
        })
        .collect();
    let sd = (form.disc() as f64).sqrt();
    let pre = -sd / 4.0;
    let mut value = Complex64::new(0.0, 0.0);
    let mut last_ring = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut evals = 0;
    for (&k, t) in offsets.iter().zip(terms) {
        let (val, e, ev) = t?;
        value += val * pre;
        if ring(k) == r {
            last_ring += val * pre;
        }
        err += e * pre.abs();
        evals += ev;
    }
    let last = last_ring.norm();
    if r_max >= 2 && last > tol.target(value.norm()).max(1e-300) * 1e3 {
        return Err(Error::NonConvergence {
            reason: format!("outermost ring of the double Eichler sum still contributes {last:.3e}"),
        });
    }
    Ok(DoubleEichlerReport {
        value,
        last_ring: last,
        err_est: err + last,
        n_terms: offsets.len(),
        n_evals: evals,
    })
}
