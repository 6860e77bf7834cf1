//! Adaptive quadrature engine.
//!
//! Everything is built on a globally adaptive 21-point Gauss–Kronrod rule with
//! QUADPACK error rescaling. Semi-infinite ranges are truncated explicitly using a
//! caller-supplied exponential decay scale, and the tail bound is folded into the
//! error estimate. Integrands are complex valued throughout.

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::QuadraticForm;

pub const DEFAULT_MAX_EVALS: usize = 10_000_000;

/// Accuracy request for a single integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_evals: usize) -> Result<Self> {
        let tol = Tolerance {
            abs_tol,
            rel_tol,
            max_evals,
        };
        tol.validate()?;
        Ok(tol)
    }

    /// Absolute-only tolerance with the default evaluation cap.
    pub fn absolute(abs_tol: f64) -> Self {
        Tolerance {
            abs_tol,
            rel_tol: 0.0,
            max_evals: DEFAULT_MAX_EVALS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_num = |x: f64| x.is_finite() && x >= 0.0;
        if !ok_num(self.abs_tol) || !ok_num(self.rel_tol) {
            return Err(Error::InvalidInput(format!(
                "tolerances must be finite and non-negative (abs={}, rel={})",
                self.abs_tol, self.rel_tol
            )));
        }
        if self.abs_tol == 0.0 && self.rel_tol == 0.0 {
            return Err(Error::InvalidInput("at least one of abs_tol, rel_tol must be positive".into()));
        }
        if self.max_evals < 100 {
            return Err(Error::InvalidInput(format!(
                "max_evals must be at least 100, got {}",
                self.max_evals
            )));
        }
        Ok(())
    }

    /// Error target for an integral of the given magnitude.
    pub fn target(&self, magnitude: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * magnitude)
    }

    /// Same evaluation cap, both tolerances multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Tolerance {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            max_evals: self.max_evals,
        }
    }

    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }

    /// Smallest positive tolerance component; used to size truncations.
    fn finest(&self) -> f64 {
        match (self.abs_tol > 0.0, self.rel_tol > 0.0) {
            (true, true) => self.abs_tol.min(self.rel_tol),
            (true, false) => self.abs_tol,
            _ => self.rel_tol,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_evals: DEFAULT_MAX_EVALS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub err_est: f64,
    pub n_evals: usize,
    pub converged: bool,
}

impl QuadratureResult {
    pub fn zero() -> Self {
        QuadratureResult {
            value: Complex64::new(0.0, 0.0),
            err_est: 0.0,
            n_evals: 0,
            converged: true,
        }
    }

    /// Turns a non-converged result into [`Error::ConvergenceFailure`].
    pub fn require_converged(self, what: &str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::convergence(format!(
                "{what}: error estimate {:.3e} after {} evaluations",
                self.err_est, self.n_evals
            )))
        }
    }

    pub fn scale(self, factor: Complex64) -> Self {
        QuadratureResult {
            value: self.value * factor,
            err_est: self.err_est * factor.norm(),
            ..self
        }
    }
}

// Gauss–Kronrod 10/21 nodes and weights (QUADPACK qk21).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const EVALS_PER_PANEL: usize = 21;

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    err: f64,
    roundoff_floor: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn checked<F: Fn(f64) -> Complex64>(f: &F, x: f64) -> Result<Complex64> {
    let y = f(x);
    if y.re.is_finite() && y.im.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite { x })
    }
}

#[allow(clippy::needless_range_loop)]
fn gk21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = checked(f, center)?;
    let mut res_g = Complex64::new(0.0, 0.0);
    let mut res_k = fc * WGK[10];
    let mut res_abs = fc.norm() * WGK[10];
    let mut fv1 = [Complex64::new(0.0, 0.0); 10];
    let mut fv2 = [Complex64::new(0.0, 0.0); 10];

    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = checked(f, center - dx)?;
        let f2 = checked(f, center + dx)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += (f1 + f2) * WG[j];
        res_k += (f1 + f2) * WGK[jtw];
        res_abs += WGK[jtw] * (f1.norm() + f2.norm());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = checked(f, center - dx)?;
        let f2 = checked(f, center + dx)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += (f1 + f2) * WGK[jtwm1];
        res_abs += WGK[jtwm1] * (f1.norm() + f2.norm());
    }

    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).norm();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).norm() + (fv2[j] - mean).norm());
    }

    let width = half.abs();
    let value = res_k * half;
    res_abs *= width;
    res_asc *= width;
    let mut err = ((res_k - res_g) * half).norm();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let roundoff_floor = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(roundoff_floor);
    }
    Ok(Panel {
        a,
        b,
        value,
        err,
        roundoff_floor,
    })
}

/// Globally adaptive bisection over a growing set of panels.
struct Adaptive<'f, F> {
    f: &'f F,
    heap: BinaryHeap<Panel>,
    value: Complex64,
    err: f64,
    n_evals: usize,
    max_evals: usize,
    splits_since_resum: usize,
}

impl<'f, F: Fn(f64) -> Complex64> Adaptive<'f, F> {
    fn new(f: &'f F, max_evals: usize) -> Self {
        Adaptive {
            f,
            heap: BinaryHeap::new(),
            value: Complex64::new(0.0, 0.0),
            err: 0.0,
            n_evals: 0,
            max_evals,
            splits_since_resum: 0,
        }
    }

    fn add(&mut self, a: f64, b: f64) -> Result<()> {
        let p = gk21(self.f, a, b)?;
        self.n_evals += EVALS_PER_PANEL;
        self.value += p.value;
        self.err += p.err;
        self.heap.push(p);
        Ok(())
    }

    fn resum(&mut self) {
        self.value = self.heap.iter().map(|p| p.value).sum();
        self.err = self.heap.iter().map(|p| p.err).sum();
        self.splits_since_resum = 0;
    }

    /// Bisects the worst panel until `err <= target(|value|)`. Returns whether the
    /// target was met.
    fn refine(&mut self, target: impl Fn(f64) -> f64) -> Result<bool> {
        loop {
            if self.splits_since_resum >= 64 {
                self.resum();
            }
            if self.err <= target(self.value.norm()) {
                self.resum();
                if self.err <= target(self.value.norm()) {
                    return Ok(true);
                }
            }
            if self.n_evals + 2 * EVALS_PER_PANEL > self.max_evals {
                self.resum();
                return Ok(false);
            }
            let worst = match self.heap.pop() {
                Some(p) => p,
                None => return Ok(true),
            };
            let mid = 0.5 * (worst.a + worst.b);
            let too_narrow =
                !(worst.a < mid && mid < worst.b) || (worst.b - worst.a) <= 1e-14 * (worst.a.abs() + worst.b.abs()).max(1e-300);
            if too_narrow || worst.err <= worst.roundoff_floor {
                // Cannot improve further at working precision.
                self.heap.push(worst);
                self.resum();
                return Ok(self.err <= target(self.value.norm()));
            }
            let left = gk21(self.f, worst.a, mid)?;
            let right = gk21(self.f, mid, worst.b)?;
            self.n_evals += 2 * EVALS_PER_PANEL;
            self.value += left.value + right.value - worst.value;
            self.err += left.err + right.err - worst.err;
            self.heap.push(left);
            self.heap.push(right);
            self.splits_since_resum += 1;
        }
    }

    fn result(&self, converged: bool, extra_err: f64) -> QuadratureResult {
        QuadratureResult {
            value: self.value,
            err_est: self.err + extra_err,
            n_evals: self.n_evals,
            converged,
        }
    }
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidInput(format!(
            "integration interval must satisfy a < b with finite ends, got [{a}, {b}]"
        )));
    }
    Ok(())
}

/// `∫_a^b f(x) dx` by adaptive Gauss–Kronrod. Endpoints are never sampled, so
/// integrable algebraic endpoint singularities such as `x^{-1/2}` are handled by
/// bisection toward the endpoint.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Complex64,
{
    check_interval(a, b)?;
    integrate_1d_with_breaks(f, &[a, b], tol)
}

/// Like [`integrate_1d`] over `[min(points), max(points)]`, starting from one panel
/// per consecutive pair of the sorted, de-duplicated break points.
pub fn integrate_1d_with_breaks<F>(f: F, points: &[f64], tol: &Tolerance) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Complex64,
{
    tol.validate()?;
    if points.len() < 2 {
        return Err(Error::InvalidInput("need at least two break points".into()));
    }
    let mut pts: Vec<f64> = points.to_vec();
    pts.sort_by(f64::total_cmp);
    check_interval(pts[0], pts[pts.len() - 1])?;
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (x.abs() + y.abs()).max(1e-300));

    let mut ad = Adaptive::new(&f, tol.max_evals);
    for w in pts.windows(2) {
        if w[0] < w[1] {
            ad.add(w[0], w[1])?;
        }
    }
    let converged = ad.refine(|m| tol.target(m))?;
    Ok(ad.result(converged, 0.0))
}

/// `∫_a^∞ f(x) dx` for integrands with `|f(x)| ≲ C e^{-x/decay_scale}`.
///
/// The range is truncated at the first `T` for which the tail bound
/// `C·decay_scale·e^{-(T-a)/decay_scale}` (with `C` estimated from samples of the last
/// segment) is below a tenth of the error target; the bound is added to `err_est`.
pub fn integrate_halfline<F>(f: F, a: f64, decay_scale: f64, tol: &Tolerance) -> Result<QuadratureResult>
where
    F: Fn(f64) -> Complex64,
{
    tol.validate()?;
    if !(a.is_finite() && decay_scale.is_finite() && decay_scale > 0.0) {
        return Err(Error::InvalidInput(format!(
            "half-line integral needs finite start and positive decay scale, got a={a}, scale={decay_scale}"
        )));
    }
    const MAX_SEGMENTS: usize = 4000;
    let seg = 2.0 * decay_scale;
    let mut ad = Adaptive::new(&f, tol.max_evals);
    let mut end = a;
    let mut tail = f64::INFINITY;
    for k in 0..MAX_SEGMENTS {
        let start = end;
        end = a + seg * (k + 1) as f64;
        ad.add(start, end)?;
        let mut c_est: f64 = 0.0;
        for frac in [0.25, 0.5, 0.75, 1.0] {
            let x = start + frac * (end - start);
            let fx = checked(&f, x)?;
            ad.n_evals += 1;
            c_est = c_est.max(fx.norm() * ((x - a) / decay_scale).exp());
        }
        tail = c_est * decay_scale * (-(end - a) / decay_scale).exp();
        if k >= 1 && tail <= 0.1 * tol.target(ad.value.norm()) {
            break;
        }
        if ad.n_evals > tol.max_evals {
            break;
        }
    }
    if !(tail <= 0.1 * tol.target(ad.value.norm())) {
        return Err(Error::convergence(format!(
            "half-line tail bound {tail:.3e} not met (decay scale {decay_scale})"
        )));
    }
    let converged = ad.refine(|m| (tol.target(m) - tail).max(0.5 * tol.target(m)))?;
    let res = ad.result(converged, tail);
    Ok(QuadratureResult {
        converged: converged && res.err_est <= tol.target(res.value.norm()),
        ..res
    })
}

/// Shared bookkeeping for nested (iterated) integrals.
struct NestedState {
    inner_evals: Cell<usize>,
    inner_errs: RefCell<Vec<(f64, f64)>>,
    inner_ok: Cell<bool>,
    failure: RefCell<Option<Error>>,
    sup: Cell<f64>,
}

impl NestedState {
    fn new() -> Self {
        NestedState {
            inner_evals: Cell::new(0),
            inner_errs: RefCell::new(Vec::new()),
            inner_ok: Cell::new(true),
            failure: RefCell::new(None),
            sup: Cell::new(0.0),
        }
    }

    fn record(&self, x: f64, r: Result<QuadratureResult>) -> Complex64 {
        match r {
            Ok(q) => {
                self.inner_evals.set(self.inner_evals.get() + q.n_evals);
                self.inner_errs.borrow_mut().push((x, q.err_est));
                if !q.converged {
                    self.inner_ok.set(false);
                }
                q.value
            }
            Err(e) => {
                let mut slot = self.failure.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
                Complex64::new(0.0, 0.0)
            }
        }
    }

    /// Trapezoid estimate of `∫ err_inner(x) dx` over the outer nodes, at least the
    /// largest single inner error.
    fn integrated_inner_error(&self) -> f64 {
        let mut pts = self.inner_errs.borrow().clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let trap: f64 = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
        let max = pts.iter().fold(0.0f64, |m, p| m.max(p.1));
        trap.max(max)
    }

    fn take_failure(&self) -> Result<()> {
        match self.failure.borrow_mut().take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// `∫_{ℝ²} f(ω)·e^{-2πv Q(ω)} dω`.
///
/// The plane is truncated to the ellipse `2πv Q(ω) ≤ L` with
/// `L = ln(1/ε) + 4.6`, where `ε` is the finest requested tolerance. Writing
/// `Q = a₃(ω₂ + cω₁)² + (D/4a₃)ω₁²`, `c = a₂/2a₃`, the ellipse is swept as an outer
/// integral in `ω₁` and an inner integral in `y = ω₂ + cω₁`. The truncation
/// contributes at most `sup|f|·e^{-L}/(v√D)`, which is added to `err_est`.
pub fn integrate_plane_gaussian<F>(f: F, v: f64, form: &QuadraticForm, tol: &Tolerance) -> Result<QuadratureResult>
where
    F: Fn(f64, f64) -> Complex64,
{
    tol.validate()?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::InvalidInput(format!("v must be positive, got {v}")));
    }
    let (a1, a2, a3) = form.coefficients_f64();
    let d = form.disc() as f64;
    let c = a2 / (2.0 * a3);
    let outer_coef = 2.0 * std::f64::consts::PI * v * d / (4.0 * a3);
    let inner_coef = 2.0 * std::f64::consts::PI * v * a3;
    let level = (1.0 / tol.finest()).ln().clamp(20.0, 700.0) + 4.6;
    let r1 = (level / outer_coef).sqrt();
    let two_pi_v = 2.0 * std::f64::consts::PI * v;

    let state = NestedState::new();
    let inner_tol = Tolerance {
        abs_tol: tol.abs_tol / (8.0 * r1),
        rel_tol: tol.rel_tol / 4.0,
        max_evals: tol.max_evals,
    };
    let inner_tol = if inner_tol.abs_tol == 0.0 && inner_tol.rel_tol == 0.0 {
        Tolerance::absolute(1e-15)
    } else {
        inner_tol
    };

    let outer = |w1: f64| -> Complex64 {
        let rem = level - outer_coef * w1 * w1;
        if rem <= 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let h = (rem / inner_coef).sqrt();
        let shift = c * w1;
        let integrand = |y: f64| -> Complex64 {
            let w2 = y - shift;
            let q = a1 * w1 * w1 + a2 * w1 * w2 + a3 * w2 * w2;
            let fv = f(w1, w2);
            let n = fv.norm();
            if n > state.sup.get() {
                state.sup.set(n);
            }
            fv * (-two_pi_v * q).exp()
        };
        let mut breaks = vec![-h, 0.0, h];
        if shift.abs() < h {
            breaks.push(shift);
        }
        breaks.sort_by(f64::total_cmp);
        state.record(w1, integrate_1d_with_breaks(integrand, &breaks, &inner_tol))
    };
    let outer_tol = tol.scaled(0.5);
    let res = integrate_1d_with_breaks(outer, &[-r1, 0.0, r1], &outer_tol);
    state.take_failure()?;
    let res = res?;
    let truncation = 2.0 * state.sup.get() * (-level).exp() / (v * d.sqrt());
    let err_est = res.err_est + state.integrated_inner_error() + truncation;
    let converged = res.converged && state.inner_ok.get() && err_est <= tol.target(res.value.norm());
    Ok(QuadratureResult {
        value: res.value,
        err_est,
        n_evals: res.n_evals + state.inner_evals.get(),
        converged,
    })
}

/// `∫_0^∞ ∫_{ω₁}^∞ f(ω₁, ω₂) dω₂ dω₁` for `|f| ≲ C e^{-ω₁/d₁ - ω₂/d₂}` on the wedge,
/// via `ω₂ = ω₁ + t`, `t ≥ 0`.
pub fn integrate_wedge<F>(f: F, decay: (f64, f64), tol: &Tolerance) -> Result<QuadratureResult>
where
    F: Fn(f64, f64) -> Complex64,
{
    tol.validate()?;
    let (d1, d2) = decay;
    if !(d1.is_finite() && d2.is_finite() && d1 > 0.0 && d2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "wedge decay scales must be positive, got ({d1}, {d2})"
        )));
    }
    let d_outer = 1.0 / (1.0 / d1 + 1.0 / d2);
    let span = 40.0 * d_outer;
    let inner_tol = Tolerance {
        abs_tol: tol.abs_tol / (4.0 * span),
        rel_tol: tol.rel_tol / 4.0,
        max_evals: tol.max_evals,
    };
    let state = NestedState::new();
    let outer = |w1: f64| -> Complex64 {
        let r = integrate_halfline(|t| f(w1, w1 + t), 0.0, d2, &inner_tol);
        state.record(w1, r)
    };
    let res = integrate_halfline(outer, 0.0, d_outer, &tol.scaled(0.5));
    state.take_failure()?;
    let res = res?;
    let err_est = res.err_est + state.integrated_inner_error();
    let converged = res.converged && state.inner_ok.get() && err_est <= tol.target(res.value.norm());
    Ok(QuadratureResult {
        value: res.value,
        err_est,
        n_evals: res.n_evals + state.inner_evals.get(),
        converged,
    })
}
