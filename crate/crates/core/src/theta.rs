//! Truncated theta series with explicit tail bounds.
//!
//! - [`unary_theta`]: `g_{a,b}(τ) = Σ_{n∈a+ℤ} n e^{2πibn} q^{n²/2}`.
//! - [`theta_1`], [`theta_2`]: the binary series attached to a form `Q` and shift `α`
//!   whose sum is the integrand of the double Eichler integral.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::forms::{ratio_f64, AlphaShift, ModularPoint, QuadraticForm};

/// Largest admissible truncation index.
pub const N_MAX_CAP: u32 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaTruncation {
    /// Terms with integer offset `|k| ≤ n_max` (in each index) are summed.
    pub n_max: u32,
    /// Upper bound for the absolute value of all omitted terms together.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub value: Complex64,
    pub truncation: ThetaTruncation,
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("theta tolerance must be positive, got {tol}")))
    }
}

/// `Σ_{n ≥ x} n e^{−πyn²}` over a unit-spaced progression is at most
/// `e^{−πyx²}(x + 1/(2πy))` once `x ≥ 1/√(2πy)`.
fn unary_tail(x: f64, y: f64) -> f64 {
    if x * x * 2.0 * PI * y < 1.0 {
        return f64::INFINITY;
    }
    (-PI * y * x * x).exp() * (x + 1.0 / (2.0 * PI * y))
}

/// Centred representative of `a` modulo 1, in `[−½, ½)`; `a + ℤ` is unchanged.
fn centred(a: f64) -> f64 {
    a - (a + 0.5).floor()
}

/// `g_{a,b}(τ) = Σ_{n∈a+ℤ} n·e^{2πibn}·e^{πiτn²}`, truncated so that
/// `Σ_{omitted}|n|e^{−π Im(τ) n²} ≤ tol`.
pub fn unary_theta(a: f64, b: f64, tau: &ModularPoint, tol: f64) -> Result<ThetaValue> {
    check_tol(tol)?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput("theta characteristics must be finite".into()));
    }
    let y = tau.v();
    let x = tau.tau().re;
    let a0 = centred(a);
    let mut n_max = 0u32;
    let tail = loop {
        // Omitted terms satisfy |n| ≥ n_max + 1 − |a0| on both sides.
        let edge = f64::from(n_max) + 1.0 - a0.abs();
        let t = 2.0 * unary_tail(edge, y);
        if t <= tol {
            break t;
        }
        if n_max >= N_MAX_CAP {
            return Err(Error::convergence(format!(
                "unary theta needs more than {N_MAX_CAP} terms at Im(tau) = {y}"
            )));
        }
        n_max = if n_max < 16 { n_max + 1 } else { n_max + n_max / 4 };
    };
    let n_max = n_max.min(N_MAX_CAP);
    let mut sum = Complex64::new(0.0, 0.0);
    let ni = i64::from(n_max);
    for k in -ni..=ni {
        let n = a0 + k as f64;
        if n == 0.0 {
            continue;
        }
        let phase = PI * (2.0 * b * n + x * n * n);
        let expo = Complex64::new(-PI * y * n * n, phase);
        sum += expo.exp() * n;
    }
    Ok(ThetaValue {
        value: sum,
        truncation: ThetaTruncation { n_max, tail_bound: tail },
    })
}

/// Smallest eigenvalue of the Gram matrix of `Q`, so that `Q(x) ≥ λ|x|²`.
fn lambda_min(form: &QuadraticForm) -> f64 {
    let (a1, a2, a3) = form.coefficients_f64();
    0.5 * ((a1 + a3) - ((a1 - a3) * (a1 - a3) + a2 * a2).sqrt())
}

/// Tail of `Σ (2/√D)·Q(n)e^{−2πyQ(n)}` over points outside the offset box of radius
/// `n_max`, given that the centred shift has max-norm at most ½.
fn binary_tail(form: &QuadraticForm, y: f64, n_max: u32) -> f64 {
    let lam = lambda_min(form);
    let sd = (form.disc() as f64).sqrt();
    let mut total = 0.0;
    let mut k = f64::from(n_max) + 1.0;
    loop {
        let rho = k - 0.5;
        let q = lam * rho * rho;
        if 2.0 * PI * y * q < 1.0 {
            return f64::INFINITY;
        }
        let term = 8.0 * k * (2.0 / sd) * q * (-2.0 * PI * y * q).exp();
        total += term;
        if term <= 1e-18 * total || term == 0.0 {
            return total;
        }
        k += 1.0;
    }
}

fn check_upper(w: Complex64, name: &str) -> Result<()> {
    if w.im > 0.0 && w.re.is_finite() && w.im.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in the upper half-plane, got {w}")))
    }
}

/// `θ₁(w₁, w₂) = (1/a₁)Σ_{n∈α+ℤ²}(2a₁n₁+a₂n₂)n₂·e^{πi(2a₁n₁+a₂n₂)²w₁/(2a₁) + πiDn₂²w₂/(2a₁)}`.
///
/// Every term is bounded by `(2/√D)Q(n)e^{−2πyQ(n)}` with `y = min(Im w₁, Im w₂)`; the
/// offset box is grown until the sum of that bound over the complement is below `tol`.
/// Terms with `n₂ = 0` vanish and are skipped exactly.
pub fn theta_1(form: &QuadraticForm, alpha: &AlphaShift, w1: Complex64, w2: Complex64, tol: f64) -> Result<ThetaValue> {
    check_tol(tol)?;
    check_upper(w1, "w1")?;
    check_upper(w2, "w2")?;
    let y = w1.im.min(w2.im);
    let mut n_max = 1u32;
    let tail = loop {
        let t = binary_tail(form, y, n_max);
        if t <= tol {
            break t;
        }
        if n_max >= 20_000 {
            return Err(Error::convergence(format!("binary theta box exceeds 20000 at min Im w = {y}")));
        }
        n_max = if n_max < 16 { n_max + 1 } else { n_max + n_max / 4 };
    };

    let centre = |r: Rational64| r - (r + Rational64::new(1, 2)).floor();
    let c1 = centre(alpha.alpha1());
    let c2 = centre(alpha.alpha2());
    let (a1, a2, _) = form.coefficients_f64();
    let d = form.disc() as f64;
    let ni = i64::from(n_max);
    let mut sum = Complex64::new(0.0, 0.0);
    for k2 in -ni..=ni {
        let n2r = c2 + k2;
        if n2r.is_zero() {
            continue;
        }
        let n2 = ratio_f64(n2r);
        let e2 = Complex64::new(0.0, PI * d * n2 * n2 / (2.0 * a1)) * w2;
        for k1 in -ni..=ni {
            let n1 = ratio_f64(c1 + k1);
            let p = 2.0 * a1 * n1 + a2 * n2;
            let e1 = Complex64::new(0.0, PI * p * p / (2.0 * a1)) * w1;
            sum += (e1 + e2).exp() * (p * n2 / a1);
        }
    }
    Ok(ThetaValue {
        value: sum,
        truncation: ThetaTruncation { n_max, tail_bound: tail },
    })
}

/// `θ₂(w₁, w₂) = (1/a₃)Σ_{n∈α+ℤ²}(a₂n₁+2a₃n₂)n₁·e^{πi(a₂n₁+2a₃n₂)²w₁/(2a₃) + πiDn₁²w₂/(2a₃)}`,
/// which is `θ₁` for the form and shift with both indices exchanged.
pub fn theta_2(form: &QuadraticForm, alpha: &AlphaShift, w1: Complex64, w2: Complex64, tol: f64) -> Result<ThetaValue> {
    theta_1(&form.swapped(), &alpha.swapped(), w1, w2, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i(v: f64) -> ModularPoint {
        ModularPoint::pure_imaginary(v).unwrap()
    }

    fn brute_unary(a: f64, b: f64, tau: Complex64, n: i64) -> Complex64 {
        (-n..=n)
            .map(|k| {
                let m = a + k as f64;
                (Complex64::new(0.0, 2.0 * PI * b * m) + Complex64::new(0.0, PI * m * m) * tau).exp() * m
            })
            .sum()
    }

    #[test]
    fn unary_zero_characteristic_vanishes() {
        let g = unary_theta(0.0, 0.0, &i(1.0), 1e-15).unwrap();
        assert!(g.value.norm() < 1e-15);
    }

    #[test]
    fn unary_matches_brute_force() {
        let g = unary_theta(0.5, 0.5, &i(1.0), 1e-15).unwrap();
        let o = brute_unary(0.5, 0.5, Complex64::new(0.0, 1.0), 50);
        assert!((g.value - o).norm() < 1e-12);
        assert!(g.value.norm() > 0.1);
        let tau = Complex64::new(0.3, 0.2);
        let g = unary_theta(1.0 / 3.0, -0.2, &ModularPoint::new(tau).unwrap(), 1e-14).unwrap();
        let o = brute_unary(1.0 / 3.0, -0.2, tau, 200);
        assert!((g.value - o).norm() < 1e-12);
    }

    #[test]
    fn unary_b_shift() {
        let a = 1.0 / 3.0;
        let g0 = unary_theta(a, 0.25, &i(1.0), 1e-15).unwrap().value;
        let g1 = unary_theta(a, 1.25, &i(1.0), 1e-15).unwrap().value;
        let ph = Complex64::new(0.0, 2.0 * PI * a).exp();
        assert!((g1 - ph * g0).norm() < 1e-10);
    }

    #[test]
    fn theta_rejects_real_axis() {
        let q = QuadraticForm::new(1, 1, 1).unwrap();
        let a: AlphaShift = "1/3,1/3".parse().unwrap();
        let one = Complex64::new(0.0, 1.0);
        assert!(theta_1(&q, &a, Complex64::new(0.5, 0.0), one, 1e-10).is_err());
        assert!(theta_2(&q, &a, one, Complex64::new(0.5, -1.0), 1e-10).is_err());
    }
}
