//! The kernels `𝓕_α`, `𝓖_α`, the three-case integrand `g_α` and its Gaussian-weighted
//! plane integral.
//!
//! `𝓕_α(x) = sinh(2πx)/(cosh(2πx) − cos(2πα))` and
//! `𝓖_α(x) = sin(2πα)/(cosh(2πx) − cos(2πα))`, so that
//! `cot(πα + πix) = 𝓖_α(x) − i𝓕_α(x)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forms::{AlphaCase, AlphaShift, QuadraticForm};
use crate::quad::{integrate_plane_gaussian, QuadratureResult, Tolerance};

/// `sin(πx)`, exact at integers and half-integers.
fn sin_pi(x: f64) -> f64 {
    let mut r = x % 2.0;
    if r > 1.0 {
        r -= 2.0;
    } else if r <= -1.0 {
        r += 2.0;
    }
    // r ∈ (−1, 1]; fold into [−½, ½] using sin(π(1 − r)) = sin(πr).
    if r > 0.5 {
        r = 1.0 - r;
    } else if r < -0.5 {
        r = -1.0 - r;
    }
    if r == 0.0 {
        0.0
    } else {
        (PI * r).sin()
    }
}

/// Shared denominator `(cosh(2πx) − cos(2πα))·2e^{−2π|x|} = (1 − e)² + 4e·sin²(πα)` with
/// `e = e^{−2π|x|}`; returns `(e, 1 − e, denominator)`.
fn scaled_denominator(alpha: f64, x: f64) -> (f64, f64, f64) {
    let one_minus_e = -(-2.0 * PI * x.abs()).exp_m1();
    let e = 1.0 - one_minus_e;
    let s = sin_pi(alpha);
    (e, one_minus_e, one_minus_e * one_minus_e + 4.0 * e * s * s)
}

fn is_integral(alpha: f64) -> bool {
    alpha == alpha.round()
}

fn check_kernel_point(alpha: f64, x: f64) -> Result<()> {
    if !(alpha.is_finite() && x.is_finite()) {
        return Err(Error::InvalidInput("kernel arguments must be finite".into()));
    }
    if x == 0.0 && is_integral(alpha) {
        return Err(Error::domain("kernel has a pole at x = 0 for integral alpha"));
    }
    Ok(())
}

/// `𝓕_α(x)`: odd in `x`, even and 1-periodic in `α`.
pub fn kernel_f(alpha: f64, x: f64) -> Result<f64> {
    check_kernel_point(alpha, x)?;
    Ok(f_unchecked(alpha, x))
}

fn f_unchecked(alpha: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let (e, one_minus_e, den) = scaled_denominator(alpha, x);
    x.signum() * one_minus_e * (1.0 + e) / den
}

/// `𝓖_α(x)`: even in `x`, odd in `α`, identically zero for integral `α`.
pub fn kernel_g_fn(alpha: f64, x: f64) -> Result<f64> {
    check_kernel_point(alpha, x)?;
    Ok(g_unchecked(alpha, x))
}

fn g_unchecked(alpha: f64, x: f64) -> f64 {
    let num = sin_pi(2.0 * alpha);
    if num == 0.0 {
        return 0.0;
    }
    let (e, _, den) = scaled_denominator(alpha, x);
    num * 2.0 * e / den
}

/// The split `cot(x + iy) = −sin 2x/(cos 2x − cosh 2y) + i·sinh 2y/(cos 2x − cosh 2y)`,
/// returned as `(re, im)`.
pub fn cot_split_check(x: f64, y: f64) -> Result<(f64, f64)> {
    let den = (2.0 * x).cos() - (2.0 * y).cosh();
    let s = x.sin();
    if (y == 0.0 && s.abs() < 1e-15) || den == 0.0 {
        return Err(Error::domain(format!("cot has a pole at {x} + {y}i")));
    }
    Ok((-(2.0 * x).sin() / den, (2.0 * y).sinh() / den))
}

/// `coth(πx) − 1/(πx)`, continuous through 0.
fn coth_minus_pole(x: f64) -> f64 {
    let y = PI * x;
    if y.abs() < 0.05 {
        let y2 = y * y;
        y * (1.0 / 3.0 - y2 * (1.0 / 45.0 - y2 * (2.0 / 945.0 - y2 / 4725.0)))
    } else {
        1.0 / y.tanh() - 1.0 / y
    }
}

/// `sinh(y)/y`, continuous through 0.
fn sinhc(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        1.0 + y * y / 6.0
    } else {
        y.sinh() / y
    }
}

/// For the integral case: with `z₀ = π(α + iω₂)`, `z₁ = π(α + i(ω₂ + cω₁))`,
/// `(cot z₁ − cot z₀)/(πω₁) = −i·c·sinhc(πcω₁)/(sin z₁ sin z₀)`.
fn cot_difference_quotient(alpha: f64, c: f64, w1: f64, w2: f64) -> Complex64 {
    if c == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let z0 = Complex64::new(PI * alpha, PI * w2);
    let z1 = Complex64::new(PI * alpha, PI * (w2 + c * w1));
    Complex64::new(0.0, -c * sinhc(PI * c * w1)) / (z1.sin() * z0.sin())
}

/// `g_α` for one of the three admissible shift classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelCase {
    /// `2𝓖_{α₁}(ω₁)𝓖_{α₂}(ω₂) − 2𝓕_{α₁}(ω₁)𝓕_{α₂}(ω₂)`.
    Generic { alpha1: f64, alpha2: f64 },
    /// `−2𝓕₀(ω₁)𝓕_{α₂}(ω₂) + (2/(πω₁))𝓕_{α₂}(ω₂ + cω₁)` with `c = a₂/(2a₃)`.
    Alpha1Integral { alpha2: f64, c: f64 },
    /// The mirror of `Alpha1Integral` with `ω₁ ↔ ω₂` and `c = a₂/(2a₁)`.
    Alpha2Integral { alpha1: f64, c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub case: KernelCase,
}

impl Kernel {
    /// The integral component is reduced to 0 exactly on the rational shift before
    /// conversion to floating point.
    pub fn new(form: &QuadraticForm, alpha: &AlphaShift) -> Result<Self> {
        let (a1, a2, a3) = form.coefficients_f64();
        let red = alpha.reduced();
        let (x1, x2) = red.to_f64();
        let case = match alpha.case() {
            AlphaCase::Generic => KernelCase::Generic { alpha1: x1, alpha2: x2 },
            AlphaCase::Alpha1Integral => KernelCase::Alpha1Integral {
                alpha2: x2,
                c: a2 / (2.0 * a3),
            },
            AlphaCase::Alpha2Integral => KernelCase::Alpha2Integral {
                alpha1: x1,
                c: a2 / (2.0 * a1),
            },
            AlphaCase::BothIntegral => {
                return Err(Error::InvalidInput(
                    "no kernel is available when both alpha components are integral".into(),
                ))
            }
        };
        Ok(Kernel { case })
    }

    /// Real kernel `g_α(ω)`. In the integral cases the apparent pole at `ω₁ = 0`
    /// (resp. `ω₂ = 0`) is removed by the regrouping
    /// `−2(𝓕₀(ω₁) − 1/(πω₁))𝓕_α(ω₂) + (2/(πω₁))(𝓕_α(ω₂ + cω₁) − 𝓕_α(ω₂))`, where the
    /// difference quotient is evaluated in closed form through the cotangent
    /// difference identity, so no switch-over threshold is needed.
    pub fn eval(&self, w1: f64, w2: f64) -> f64 {
        self.eval_complex(w1, w2).re
    }

    /// Complex kernel `2(𝓖₁ − i𝓕₁)(𝓖₂ − i𝓕₂)` with the same regularisation; its real
    /// part is `g_α` and its imaginary part is odd under `ω → −ω`.
    pub fn eval_complex(&self, w1: f64, w2: f64) -> Complex64 {
        match self.case {
            KernelCase::Generic { alpha1, alpha2 } => {
                let c1 = Complex64::new(g_unchecked(alpha1, w1), -f_unchecked(alpha1, w1));
                let c2 = Complex64::new(g_unchecked(alpha2, w2), -f_unchecked(alpha2, w2));
                c1 * c2 * 2.0
            }
            KernelCase::Alpha1Integral { alpha2, c } => integral_case(alpha2, c, w1, w2),
            KernelCase::Alpha2Integral { alpha1, c } => integral_case(alpha1, c, w2, w1),
        }
    }
}

/// Regularised `2·cot(πiω_p)·cot(π(α + iω_q))` with the pole of the first factor
/// shifted along `ω_q ↦ ω_q + cω_p`.
fn integral_case(alpha: f64, c: f64, wp: f64, wq: f64) -> Complex64 {
    // cot(πiω) = −i coth(πω); cot(π(α+iω)) = 𝓖 − i𝓕.
    let reg = coth_minus_pole(wp);
    let other = Complex64::new(g_unchecked(alpha, wq), -f_unchecked(alpha, wq));
    let smooth = Complex64::new(0.0, -reg) * other;
    // The pole part −i/(πω_p) of the first factor, moved to the shifted argument:
    // (i/(πω_p))·(cot z₁ − cot z₀).
    let shifted = Complex64::new(0.0, 1.0) * cot_difference_quotient(alpha, c, wp, wq);
    (smooth + shifted) * 2.0
}

/// `g_α(ω)` for the form and shift; see [`Kernel::eval`].
pub fn kernel_g(form: &QuadraticForm, alpha: &AlphaShift, w: (f64, f64)) -> Result<f64> {
    Ok(Kernel::new(form, alpha)?.eval(w.0, w.1))
}

/// `H_α(iv) = ∫_{ℝ²} g_α(ω)e^{−2πvQ(ω)} dω`. The complex kernel is integrated, so the
/// imaginary part of the result is the integral of the odd cross terms and should
/// vanish within `err_est`.
pub fn h_alpha_kernel(form: &QuadraticForm, alpha: &AlphaShift, v: f64, tol: &Tolerance) -> Result<QuadratureResult> {
    let k = Kernel::new(form, alpha)?;
    integrate_plane_gaussian(|w1, w2| k.eval_complex(w1, w2), v, form, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_f(a: f64, x: f64) -> f64 {
        (2.0 * PI * x).sinh() / ((2.0 * PI * x).cosh() - (2.0 * PI * a).cos())
    }

    fn direct_g(a: f64, x: f64) -> f64 {
        (2.0 * PI * a).sin() / ((2.0 * PI * x).cosh() - (2.0 * PI * a).cos())
    }

    #[test]
    fn f_examples() {
        assert_eq!(kernel_f(0.5, 0.0).unwrap(), 0.0);
        assert!((kernel_f(0.25, 1.0).unwrap() - direct_f(0.25, 1.0)).abs() < 1e-14);
        let x = 1e-4;
        assert!((kernel_f(0.0, x).unwrap() - 1.0 / (PI * x)).abs() < 1e-3);
        assert!(kernel_f(0.0, 0.0).is_err());
        assert!(kernel_f(2.0, 0.0).is_err());
    }

    #[test]
    fn g_examples() {
        assert!((kernel_g_fn(0.25, 0.0).unwrap() - 1.0).abs() < 1e-15);
        for x in [0.0, 0.3, -2.0] {
            assert_eq!(kernel_g_fn(0.5, x).unwrap(), 0.0);
        }
        assert!((kernel_g_fn(1.0 / 3.0, 1.0).unwrap() - direct_g(1.0 / 3.0, 1.0)).abs() < 1e-14);
    }

    #[test]
    fn parity_and_periodicity() {
        for (a, x) in [(0.2, 0.7), (0.41, -1.3), (0.9, 0.05)] {
            let f = kernel_f(a, x).unwrap();
            assert!((kernel_f(a, -x).unwrap() + f).abs() < 1e-14);
            assert!((kernel_f(-a, x).unwrap() - f).abs() < 1e-14);
            assert!((kernel_f(a + 1.0, x).unwrap() - f).abs() < 1e-13);
            let g = kernel_g_fn(a, x).unwrap();
            assert!((kernel_g_fn(a, -x).unwrap() - g).abs() < 1e-14);
            assert!((kernel_g_fn(-a, x).unwrap() + g).abs() < 1e-14);
        }
    }

    #[test]
    fn cot_split() {
        let (x, y) = (PI / 4.0, 1.0);
        let z = Complex64::new(x, y);
        let cot = z.cos() / z.sin();
        let (re, im) = cot_split_check(x, y).unwrap();
        assert!((re - cot.re).abs() < 1e-12 && (im - cot.im).abs() < 1e-12);
        let (re, im) = cot_split_check(PI / 2.0, 0.0).unwrap();
        assert!(re.abs() < 1e-15 && im == 0.0);
        assert!(cot_split_check(0.0, 0.0).is_err());
        let (a, w) = (1.0 / 3.0, 0.7);
        let (re, im) = cot_split_check(PI * a, PI * w).unwrap();
        assert!((re - kernel_g_fn(a, w).unwrap()).abs() < 1e-12);
        assert!((im + kernel_f(a, w).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn generic_examples() {
        let q = QuadraticForm::new(1, 1, 1).unwrap();
        let a: AlphaShift = "1/4,1/4".parse().unwrap();
        assert!((kernel_g(&q, &a, (0.0, 0.0)).unwrap() - 2.0).abs() < 1e-14);
        let a: AlphaShift = "1/3,2/7".parse().unwrap();
        for w in [(0.3, -0.8), (1.1, 0.4)] {
            let p = kernel_g(&q, &a, w).unwrap();
            let m = kernel_g(&q, &a, (-w.0, -w.1)).unwrap();
            assert!((p - m).abs() < 1e-14);
        }
    }

    #[test]
    fn integral_case_regrouping_matches_literal_form() {
        let q = QuadraticForm::new(1, 1, 1).unwrap();
        let a: AlphaShift = "0,1/3".parse().unwrap();
        let c = 0.5;
        for (w1, w2) in [(0.7, 0.5), (-1.2, 0.3), (0.05, -0.4)] {
            let literal = -2.0 / (PI * w1).tanh() * direct_f(1.0 / 3.0, w2) + 2.0 / (PI * w1) * direct_f(1.0 / 3.0, w2 + c * w1);
            let k = kernel_g(&q, &a, (w1, w2)).unwrap();
            assert!((k - literal).abs() < 1e-11, "{w1} {w2}: {k} {literal}");
        }
        let a: AlphaShift = "1/3,0".parse().unwrap();
        let (w1, w2) = (0.4, 0.9);
        let literal = -2.0 / (PI * w2).tanh() * direct_f(1.0 / 3.0, w1) + 2.0 / (PI * w2) * direct_f(1.0 / 3.0, w1 + c * w2);
        assert!((kernel_g(&q, &a, (w1, w2)).unwrap() - literal).abs() < 1e-11);
    }

    #[test]
    fn both_integral_rejected() {
        let q = QuadraticForm::new(1, 1, 1).unwrap();
        let a: AlphaShift = "0,1".parse().unwrap();
        assert!(Kernel::new(&q, &a).is_err());
    }
}
