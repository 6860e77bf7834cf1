//! Rescaled error functions `E`, `M` and the two-dimensional `E₂`, `M₂`.
//!
//! Conventions: `E(u) = erf(√π u)`, `M(u) = E(u) − sgn(u)` and `sgn(0) = 0`.
//!
//! `M₂` is available three ways:
//!
//! - [`err_m2_contour`]: the shifted-contour double integral (off the loci only);
//! - [`err_m2`]: the literal relation `E₂ − sgn(u₂)M(u₁) − sgn(u₁−κu₂)M(·) − sgn·sgn`;
//! - [`m2_scaled`]: the same relation regrouped into four sector integrals with a
//!   piecewise-constant weight, returning `e^{π|u|²}M₂` without cancellation. This is
//!   the form used inside lattice sums where `|u|` is large.

use std::f64::consts::PI;

use errorfunctions::RealErrorFunctions;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forms::{rational_sign, LatticePoint, QuadraticForm};
use crate::quad::{integrate_1d_with_breaks, QuadratureResult, Tolerance};

/// Arguments closer than this to a locus are treated as lying on it.
pub const LOCUS_BAND: f64 = 1e-12;

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Signum with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn sgn_band(x: f64) -> i8 {
    if x.abs() < LOCUS_BAND {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

/// `E(u) = 2∫₀^u e^{−πω²}dω = erf(√π u)`.
pub fn err_e(u: f64) -> f64 {
    RealErrorFunctions::erf(SQRT_PI * u)
}

/// `M(u) = E(u) − sgn(u)`, computed as `−sgn(u)·erfc(√π|u|)` so that tiny values keep
/// full relative accuracy.
pub fn err_m(u: f64) -> Result<f64> {
    if u == 0.0 || !u.is_finite() {
        return Err(Error::domain(format!("M(u) needs finite non-zero u, got {u}")));
    }
    Ok(m_ext(u))
}

/// `M` extended by `M(0) = E(0) − sgn(0) = 0`.
pub(crate) fn m_ext(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        -sgn(u) * RealErrorFunctions::erfc(SQRT_PI * u.abs())
    }
}

fn finest(tol: &Tolerance) -> f64 {
    let mut e = f64::INFINITY;
    if tol.abs_tol > 0.0 {
        e = e.min(tol.abs_tol);
    }
    if tol.rel_tol > 0.0 {
        e = e.min(tol.rel_tol);
    }
    e
}

/// Gaussian truncation radius `T` with `e^{−πT²}` below the finest tolerance.
fn gaussian_radius(tol: &Tolerance) -> f64 {
    let level = (1.0 / finest(tol)).ln().clamp(20.0, 700.0) + 4.6;
    (level / PI).sqrt()
}

/// `M(u)` from its contour integral, parametrised by `ω = t − iu`:
/// `M(u) = (i/π)e^{−πu²}∫_ℝ e^{−πt²}/(t − iu) dt`.
pub fn err_m_contour(u: f64, tol: &Tolerance) -> Result<QuadratureResult> {
    if u == 0.0 || !u.is_finite() {
        return Err(Error::domain(format!("contour M(u) needs finite non-zero u, got {u}")));
    }
    let t_max = gaussian_radius(tol);
    let pole = Complex64::new(0.0, u);
    let f = |t: f64| (-PI * t * t).exp() / (Complex64::new(t, 0.0) - pole);
    let mut breaks = vec![-t_max, 0.0, t_max];
    if u.abs() < t_max {
        breaks.extend([-u.abs(), u.abs()]);
    }
    let r = integrate_1d_with_breaks(f, &breaks, tol)?;
    Ok(r.scale(Complex64::new(0.0, (-PI * u * u).exp() / PI)))
}

/// Exact or banded signs of the four linear forms entering the `M₂` relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignPattern {
    /// `sgn(u₁)`
    pub s1: i8,
    /// `sgn(u₂)`
    pub s2: i8,
    /// `sgn(u₁ − κu₂)`
    pub sb: i8,
    /// `sgn(u₂ + κu₁)`
    pub sl: i8,
}

/// Arguments of `M₂(κ; u₁, u₂)` together with the signs used on the loci.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct M2Args {
    pub kappa: f64,
    pub u1: f64,
    pub u2: f64,
    pub signs: SignPattern,
}

impl M2Args {
    /// Signs from the floating-point arguments, zero inside [`LOCUS_BAND`].
    pub fn new(kappa: f64, u1: f64, u2: f64) -> Self {
        M2Args {
            kappa,
            u1,
            u2,
            signs: SignPattern {
                s1: sgn_band(u1),
                s2: sgn_band(u2),
                sb: sgn_band(u1 - kappa * u2),
                sl: sgn_band(u2 + kappa * u1),
            },
        }
    }

    /// `(κ; scale·u(n))` with signs decided exactly on the rational point:
    /// `u₂ ∝ n₂`, `u₁ − κu₂ ∝ n₁`, `u₁ ∝ 2a₁n₁ + a₂n₂`, `u₂ + κu₁ ∝ a₂n₁ + 2a₃n₂`.
    pub fn from_lattice(form: &QuadraticForm, n: &LatticePoint, scale: f64) -> Self {
        let (a1, a2, a3) = form.coefficients();
        let (u1, u2) = form.u_of_n(n);
        let sg = |r| rational_sign(r) as i8;
        M2Args {
            kappa: form.kappa(),
            u1: scale * u1,
            u2: scale * u2,
            signs: SignPattern {
                s1: sg(n.n1 * (2 * a1) + n.n2 * a2),
                s2: sg(n.n2),
                sb: sg(n.n1),
                sl: sg(n.n1 * a2 + n.n2 * (2 * a3)),
            },
        }
    }

    pub fn on_locus_u2(&self) -> bool {
        self.signs.s2 == 0
    }

    pub fn on_locus_diag(&self) -> bool {
        self.signs.sb == 0
    }

    pub fn on_locus(&self) -> bool {
        self.on_locus_u2() || self.on_locus_diag()
    }

    /// `|u|²`.
    pub fn norm_sq(&self) -> f64 {
        self.u1 * self.u1 + self.u2 * self.u2
    }
}

/// `ln(½ erfc(z))` without underflow for large positive `z`.
fn ln_half_erfc(z: f64) -> f64 {
    if z > 0.0 {
        (0.5 * RealErrorFunctions::erfcx(z)).ln() - z * z
    } else {
        (0.5 * RealErrorFunctions::erfc(z)).ln()
    }
}

/// Bracket of a log-concave function on `[0, ∞)`: the maximiser and the points where
/// it has dropped by `depth` on either side.
struct ConcaveRange {
    lo: f64,
    peak: f64,
    hi: f64,
    log_max: f64,
}

fn concave_range(ell: &impl Fn(f64) -> f64, depth: f64) -> ConcaveRange {
    let mut b = 1.0;
    while ell(b) >= ell(0.5 * b) && b < 1e8 {
        b *= 2.0;
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut x0, mut x3) = (0.0, b);
    let mut x1 = x3 - INV_PHI * (x3 - x0);
    let mut x2 = x0 + INV_PHI * (x3 - x0);
    let (mut f1, mut f2) = (ell(x1), ell(x2));
    for _ in 0..90 {
        if f1 < f2 {
            x0 = x1;
            x1 = x2;
            f1 = f2;
            x2 = x0 + INV_PHI * (x3 - x0);
            f2 = ell(x2);
        } else {
            x3 = x2;
            x2 = x1;
            f2 = f1;
            x1 = x3 - INV_PHI * (x3 - x0);
            f1 = ell(x1);
        }
    }
    let mut peak = 0.5 * (x0 + x3);
    let mut log_max = ell(peak);
    let at0 = ell(0.0);
    if at0 >= log_max {
        peak = 0.0;
        log_max = at0;
    }
    let floor = log_max - depth;

    let lo = if at0 >= floor {
        0.0
    } else {
        let (mut a, mut c) = (0.0, peak);
        for _ in 0..80 {
            let mid = 0.5 * (a + c);
            if ell(mid) < floor {
                a = mid;
            } else {
                c = mid;
            }
        }
        a
    };

    let step = peak.max(1.0);
    let mut k = 0;
    let mut far = peak + step;
    while ell(far) >= floor && k < 60 {
        k += 1;
        far = peak + step * f64::from(1u32 << k.min(30));
    }
    let (mut a, mut c) = (peak, far);
    for _ in 0..80 {
        let mid = 0.5 * (a + c);
        if ell(mid) >= floor {
            a = mid;
        } else {
            c = mid;
        }
    }
    ConcaveRange { lo, peak, hi: c, log_max }
}

/// `e^{shift}·∫_{xω>0} e^{−π(ω−u₁)²}·½erfc(−y√π(u₂+κω)) dω`, the Gaussian mass of the
/// sector `{xω₁ > 0, y(ω₂ + κω₁) > 0}` centred at `u`.
fn sector_mass(kappa: f64, u1: f64, u2: f64, x: f64, y: f64, log_shift: f64, tol: &Tolerance) -> Result<QuadratureResult> {
    let ell = |s: f64| {
        let w = x * s;
        let z = -y * SQRT_PI * (u2 + kappa * w);
        log_shift - PI * (w - u1) * (w - u1) + ln_half_erfc(z)
    };
    let depth = (1.0 / finest(tol)).ln().clamp(20.0, 700.0) + 9.2;
    let range = concave_range(&ell, depth);
    if !range.log_max.is_finite() {
        return Err(Error::NonFinite { x: range.peak });
    }
    let mut breaks = vec![range.lo, range.peak, range.hi];
    for extra in [x * u1, if kappa != 0.0 { -x * u2 / kappa } else { -1.0 }] {
        if extra > range.lo && extra < range.hi {
            breaks.push(extra);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let r = integrate_1d_with_breaks(|s| Complex64::new(ell(s).exp(), 0.0), &breaks, tol)?;
    let truncation = (range.log_max - depth).exp() * (range.hi - range.lo + 1.0);
    Ok(QuadratureResult {
        err_est: r.err_est + truncation,
        ..r
    })
}

fn combine(parts: &[(f64, QuadratureResult)]) -> QuadratureResult {
    let mut out = QuadratureResult::zero();
    for (w, r) in parts {
        out.value += r.value * *w;
        out.err_est += w.abs() * r.err_est;
        out.n_evals += r.n_evals;
        out.converged &= r.converged;
    }
    out
}

/// `E₂(κ; u₁, u₂) = ∫_{ℝ²} sgn(ω₁)sgn(ω₂+κω₁)e^{−π|ω−u|²}dω`, as the signed sum of the
/// four sector masses (the `ω₂` integral of each sector is done in closed form).
pub fn err_e2(kappa: f64, u1: f64, u2: f64, tol: &Tolerance) -> Result<QuadratureResult> {
    tol.validate()?;
    if !(kappa.is_finite() && u1.is_finite() && u2.is_finite()) {
        return Err(Error::InvalidInput("E2 arguments must be finite".into()));
    }
    let part_tol = tol.scaled(0.25);
    let mut parts = Vec::with_capacity(4);
    for x in [1.0, -1.0] {
        for y in [1.0, -1.0] {
            parts.push((x * y, sector_mass(kappa, u1, u2, x, y, 0.0, &part_tol)?));
        }
    }
    Ok(combine(&parts))
}

/// `M₂` by the literal relation with sgn(0) = 0; see [`err_m2_args`].
pub fn err_m2(kappa: f64, u1: f64, u2: f64, tol: &Tolerance) -> Result<QuadratureResult> {
    err_m2_args(&M2Args::new(kappa, u1, u2), tol)
}

/// `E₂(κ;u) − sgn(u₂)M(u₁) − sgn(u₁−κu₂)M((u₂+κu₁)/√(1+κ²)) − sgn(u₁)sgn(u₂+κu₁)`.
/// Terms whose sign factor is zero are dropped before `M` is evaluated.
pub fn err_m2_args(args: &M2Args, tol: &Tolerance) -> Result<QuadratureResult> {
    let M2Args { kappa, u1, u2, signs } = *args;
    let mut r = err_e2(kappa, u1, u2, tol)?;
    let mut correction = f64::from(signs.s1) * f64::from(signs.sl);
    // An M term whose argument has sign 0 is M(0) = 0, even if the float argument is
    // a rounding residue.
    if signs.s2 != 0 && signs.s1 != 0 {
        correction += f64::from(signs.s2) * m_ext(u1);
    }
    if signs.sb != 0 && signs.sl != 0 {
        correction += f64::from(signs.sb) * m_ext((u2 + kappa * u1) / (1.0 + kappa * kappa).sqrt());
    }
    r.value -= correction;
    r.err_est += 4.0 * f64::EPSILON * (1.0 + correction.abs());
    Ok(r)
}

/// `e^{π|u|²}·M₂(κ; u)` from the relation regrouped as
/// `Σ_{x,y=±1} φ(x,y)·mass(x,y)` with
/// `φ = xy − s₂x − s_b y + s₂s₁ + s_b s_ℓ − s₁s_ℓ`.
///
/// Only sectors with `φ ≠ 0` are integrated and each mass carries the factor
/// `e^{π|u|²}` inside its integrand, so the result stays accurate for large `|u|`
/// where the literal relation loses all digits to cancellation.
pub fn m2_scaled(args: &M2Args, tol: &Tolerance) -> Result<QuadratureResult> {
    tol.validate()?;
    let SignPattern { s1, s2, sb, sl } = args.signs;
    let (s1, s2, sb, sl) = (f64::from(s1), f64::from(s2), f64::from(sb), f64::from(sl));
    let c = s2 * s1 + sb * sl - s1 * sl;
    let shift = PI * args.norm_sq();
    let part_tol = tol.scaled(0.25);
    let mut parts = Vec::with_capacity(4);
    for x in [1.0, -1.0] {
        for y in [1.0, -1.0] {
            let phi = x * y - s2 * x - sb * y + c;
            if phi != 0.0 {
                parts.push((phi, sector_mass(args.kappa, args.u1, args.u2, x, y, shift, &part_tol)?));
            }
        }
    }
    Ok(combine(&parts))
}

/// `M₂` from [`m2_scaled`], multiplied back by `e^{−π|u|²}`.
pub fn err_m2_stable(args: &M2Args, tol: &Tolerance) -> Result<QuadratureResult> {
    let r = m2_scaled(args, tol)?;
    Ok(r.scale(Complex64::new((-PI * args.norm_sq()).exp(), 0.0)))
}

/// `I = ∫∫ e^{−π(t₁²+t₂²)} / ((t₂ − iu₂)(t₁ − κt₂ − ib)) dt₁dt₂` with `b = u₁ − κu₂`.
fn contour_core(kappa: f64, u1: f64, u2: f64, tol: &Tolerance) -> Result<QuadratureResult> {
    let b = u1 - kappa * u2;
    if u2.abs() < LOCUS_BAND || b.abs() < LOCUS_BAND {
        return Err(Error::domain(format!(
            "contour M2 undefined on the loci (u2 = {u2}, u1 - kappa*u2 = {b})"
        )));
    }
    let t_max = gaussian_radius(tol);
    let inner_tol = Tolerance {
        abs_tol: tol.abs_tol * 0.1 / t_max,
        rel_tol: tol.rel_tol * 0.1,
        max_evals: tol.max_evals,
    };
    let failure = std::cell::RefCell::new(None);
    let inner_err = std::cell::Cell::new(0.0f64);
    let inner_evals = std::cell::Cell::new(0usize);
    let inner_ok = std::cell::Cell::new(true);
    let outer = |t2: f64| -> Complex64 {
        let centre = kappa * t2;
        let pole = Complex64::new(centre, b);
        let f = |t1: f64| (-PI * t1 * t1).exp() / (Complex64::new(t1, 0.0) - pole);
        let mut breaks = vec![-t_max, 0.0, t_max];
        for p in [centre, centre - b.abs(), centre + b.abs()] {
            if p.abs() < t_max {
                breaks.push(p);
            }
        }
        match integrate_1d_with_breaks(f, &breaks, &inner_tol) {
            Ok(r) => {
                inner_err.set(inner_err.get().max(r.err_est));
                inner_evals.set(inner_evals.get() + r.n_evals);
                inner_ok.set(inner_ok.get() && r.converged);
                (-PI * t2 * t2).exp() * r.value / Complex64::new(t2, -u2)
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let mut breaks = vec![-t_max, 0.0, t_max];
    for p in [u2.abs(), -u2.abs()] {
        if p.abs() < t_max {
            breaks.push(p);
        }
    }
    let outer_tol = tol.scaled(0.5);
    let r = integrate_1d_with_breaks(outer, &breaks, &outer_tol);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let r = r?;
    // ∫e^{−πt²}/|t − iu₂| dt ≤ 1/|u₂|.
    let err_est = r.err_est + inner_err.get() / u2.abs();
    Ok(QuadratureResult {
        value: r.value,
        err_est,
        n_evals: r.n_evals + inner_evals.get(),
        converged: r.converged && inner_ok.get(),
    })
}

/// `M₂(κ; u₁, u₂) = −(1/π²)∫∫ e^{−πω₁²−πω₂²−2πi(u₁ω₁+u₂ω₂)} / (ω₂(ω₁ − κω₂)) dω` over
/// the contours `ω_j = t_j − iu_j`, which turns the exponential into
/// `e^{−π|u|²}e^{−π(t₁²+t₂²)}`. Defined only off the loci `u₂ = 0`, `u₁ = κu₂`.
/// The returned value is complex; its imaginary part is a quadrature artefact.
pub fn err_m2_contour(kappa: f64, u1: f64, u2: f64, tol: &Tolerance) -> Result<QuadratureResult> {
    let core = contour_core(kappa, u1, u2, &tol.scaled(1.0))?;
    let factor = -(-PI * (u1 * u1 + u2 * u2)).exp() / (PI * PI);
    Ok(core.scale(Complex64::new(factor, 0.0)))
}

/// `e^{π|u|²}·M₂` by the contour integral, i.e. `−I/π²` without the Gaussian factor.
pub fn m2_contour_scaled(args: &M2Args, tol: &Tolerance) -> Result<QuadratureResult> {
    if args.on_locus() {
        return Err(Error::domain("contour M2 undefined on the loci"));
    }
    let core = contour_core(args.kappa, args.u1, args.u2, &tol.scaled(PI * PI))?;
    Ok(core.scale(Complex64::new(-1.0 / (PI * PI), 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_1d;

    fn tol() -> Tolerance {
        Tolerance::new(1e-13, 1e-12, 10_000_000).unwrap()
    }

    #[test]
    fn e_examples() {
        assert_eq!(err_e(0.0), 0.0);
        let oracle = integrate_1d(|w| Complex64::new(2.0 * (-PI * w * w).exp(), 0.0), 0.0, 1.0, &tol())
            .unwrap()
            .value
            .re;
        assert!((err_e(1.0) - oracle).abs() < 1e-14);
        assert!((err_e(1.0) - 0.987_76).abs() < 1e-4);
        assert_eq!(err_e(-1.0), -err_e(1.0));
    }

    #[test]
    fn m_examples() {
        assert!(err_m(0.0).is_err());
        assert!((err_m(1.0).unwrap() - (err_e(1.0) - 1.0)).abs() < 1e-15);
        assert!((err_m(1.0).unwrap() + 0.012_24).abs() < 1e-4);
        assert_eq!(err_m(-1.0).unwrap(), -err_m(1.0).unwrap());
        let m3 = err_m(3.0).unwrap();
        assert!(m3.abs() < 1e-9);
        let c3 = err_m_contour(3.0, &tol()).unwrap();
        assert!((c3.value.re - m3).abs() < 1e-20, "{} vs {}", c3.value.re, m3);
    }

    #[test]
    fn m_contour_matches_relation() {
        for u in [0.25, -0.25, 1.0, -1.0, 2.5, -2.5] {
            let c = err_m_contour(u, &tol()).unwrap();
            assert!((c.value.re - (err_e(u) - sgn(u))).abs() < 1e-12, "u={u}");
            assert!(c.value.im.abs() < 1e-14);
        }
    }

    #[test]
    fn e2_examples() {
        let v = err_e2(1.0, 0.0, 0.0, &tol()).unwrap();
        assert!((v.value.re - 0.5).abs() < 1e-12);
        for (u1, u2) in [(0.3, -1.1), (2.0, 0.5), (-0.7, 0.0)] {
            let v = err_e2(0.0, u1, u2, &tol()).unwrap();
            assert!((v.value.re - err_e(u1) * err_e(u2)).abs() < 1e-11);
        }
        let k = 0.63;
        let a = err_e2(k, 0.0, 0.0, &tol()).unwrap().value.re;
        let b = err_e2(-k, 0.0, 0.0, &tol()).unwrap().value.re;
        assert!((a + b).abs() < 1e-12);
        // Orthant probability: E₂(κ;0,0) = (2/π)arctan(κ).
        assert!((a - 2.0 / PI * k.atan()).abs() < 1e-12);
    }

    #[test]
    fn m2_relation_and_contour_agree_off_locus() {
        for (k, u1, u2) in [(1.0, 2.0, 1.0), (-1.5, 0.3, -0.8), (0.7, -1.2, 0.4)] {
            let c = err_m2_contour(k, u1, u2, &tol()).unwrap();
            let r = err_m2(k, u1, u2, &tol()).unwrap();
            assert!(
                (c.value.re - r.value.re).abs() < 1e-9,
                "{k} {u1} {u2}: {} {}",
                c.value.re,
                r.value.re
            );
            assert!(c.value.im.abs() < 1e-10);
        }
    }

    #[test]
    fn m2_contour_separates_at_kappa_zero() {
        let c = err_m2_contour(0.0, 0.5, 0.7, &tol()).unwrap();
        let prod = err_m(0.5).unwrap() * err_m(0.7).unwrap();
        assert!((c.value.re - prod).abs() < 1e-10);
    }

    #[test]
    fn m2_contour_rejects_loci() {
        assert!(err_m2_contour(1.0, 1.0, 1.0, &tol()).is_err());
        assert!(err_m2_contour(1.0, 1.0, 0.0, &tol()).is_err());
    }

    #[test]
    fn m2_relation_on_locus_examples() {
        let v = err_m2(1.0, 0.0, 0.0, &tol()).unwrap();
        assert!((v.value.re - 0.5).abs() < 1e-12);
        let v = err_m2(1.0, 1.0, 0.0, &tol()).unwrap();
        let e2 = err_e2(1.0, 1.0, 0.0, &tol()).unwrap().value.re;
        let literal = e2 - err_m(1.0 / 2f64.sqrt()).unwrap() - 1.0;
        assert!((v.value.re - literal).abs() < 1e-14);
    }

    #[test]
    fn scaled_relation_matches_literal() {
        for (k, u1, u2) in [(1.0, 2.0, 1.0), (0.5, 1.0, 0.0), (0.5, 1.0, 2.0), (1.0, 1.0, 1.0), (-0.3, 0.0, 0.9)] {
            let args = M2Args::new(k, u1, u2);
            let s = err_m2_stable(&args, &tol()).unwrap().value.re;
            let l = err_m2_args(&args, &tol()).unwrap().value.re;
            assert!((s - l).abs() < 1e-11, "{k} {u1} {u2}: {s} {l}");
        }
    }

    #[test]
    fn scaled_paths_agree_far_out() {
        // |u| ≈ 5.4: M₂ ~ e^{−90}; compare the two scaled forms directly.
        let args = M2Args::new(0.4, 4.0, -3.6);
        let a = m2_scaled(&args, &tol()).unwrap().value.re;
        let b = m2_contour_scaled(&args, &tol()).unwrap().value.re;
        assert!((a - b).abs() < 1e-10 * a.abs().max(1e-3), "{a} {b}");
    }
}
