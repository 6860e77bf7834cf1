//! Quadratic forms, rational shift vectors, lattice boxes and points of the upper
//! half-plane.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive definite integral binary quadratic form `a₁x₁² + a₂x₁x₂ + a₃x₂²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i64; 3]", into = "[i64; 3]")]
pub struct QuadraticForm {
    a1: i64,
    a2: i64,
    a3: i64,
}

impl QuadraticForm {
    pub fn new(a1: i64, a2: i64, a3: i64) -> Result<Self> {
        let disc = 4i128 * a1 as i128 * a3 as i128 - (a2 as i128) * (a2 as i128);
        if a1 <= 0 || a3 <= 0 || disc <= 0 {
            return Err(Error::NotPositiveDefinite {
                a1,
                a2,
                a3,
                disc: disc.clamp(i64::MIN as i128, i64::MAX as i128) as i64,
            });
        }
        if disc > (1i128 << 52) {
            return Err(Error::InvalidInput(format!(
                "coefficients ({a1},{a2},{a3}) too large for double precision"
            )));
        }
        Ok(QuadraticForm { a1, a2, a3 })
    }

    pub fn a1(&self) -> i64 {
        self.a1
    }

    pub fn a2(&self) -> i64 {
        self.a2
    }

    pub fn a3(&self) -> i64 {
        self.a3
    }

    pub fn coefficients(&self) -> (i64, i64, i64) {
        (self.a1, self.a2, self.a3)
    }

    pub fn coefficients_f64(&self) -> (f64, f64, f64) {
        (self.a1 as f64, self.a2 as f64, self.a3 as f64)
    }

    /// `D = 4a₁a₃ − a₂²`.
    pub fn disc(&self) -> i64 {
        4 * self.a1 * self.a3 - self.a2 * self.a2
    }

    /// `κ = a₂/√D`.
    pub fn kappa(&self) -> f64 {
        self.a2 as f64 / (self.disc() as f64).sqrt()
    }

    /// `m = √(4a₃ − a₂²/a₁) = √(D/a₁)`.
    pub fn m(&self) -> f64 {
        (self.disc() as f64 / self.a1 as f64).sqrt()
    }

    /// The form with `a₁` and `a₃` exchanged, i.e. `Q(x₂, x₁)`.
    pub fn swapped(&self) -> Self {
        QuadraticForm {
            a1: self.a3,
            a2: self.a2,
            a3: self.a1,
        }
    }

    pub fn eval_q(&self, x: (f64, f64)) -> f64 {
        let (a1, a2, a3) = self.coefficients_f64();
        a1 * x.0 * x.0 + a2 * x.0 * x.1 + a3 * x.1 * x.1
    }

    /// Exact value of `Q(n)` on a rational point.
    pub fn eval_q_exact(&self, n: &LatticePoint) -> Rational64 {
        let a1 = Rational64::from_integer(self.a1);
        let a2 = Rational64::from_integer(self.a2);
        let a3 = Rational64::from_integer(self.a3);
        a1 * n.n1 * n.n1 + a2 * n.n1 * n.n2 + a3 * n.n2 * n.n2
    }

    /// `u(n) = (2√a₁·n₁ + (a₂/√a₁)·n₂, m·n₂)`, so that `|u|² = 4Q(n)` and
    /// `u₁ − κu₂ = 2√a₁·n₁`.
    pub fn u_of_n(&self, n: &LatticePoint) -> (f64, f64) {
        let (n1, n2) = n.to_f64();
        let sa1 = (self.a1 as f64).sqrt();
        (2.0 * sa1 * n1 + self.a2 as f64 / sa1 * n2, self.m() * n2)
    }
}

impl TryFrom<[i64; 3]> for QuadraticForm {
    type Error = Error;

    fn try_from(a: [i64; 3]) -> Result<Self> {
        QuadraticForm::new(a[0], a[1], a[2])
    }
}

impl From<QuadraticForm> for [i64; 3] {
    fn from(q: QuadraticForm) -> Self {
        [q.a1, q.a2, q.a3]
    }
}

impl fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.a1, self.a2, self.a3)
    }
}

impl FromStr for QuadraticForm {
    type Err = Error;

    /// Parses `"a1,a2,a3"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!("form must be given as a1,a2,a3, got {s:?}")));
        }
        let mut c = [0i64; 3];
        for (slot, p) in c.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| Error::InvalidInput(format!("bad form coefficient {p:?}")))?;
        }
        QuadraticForm::new(c[0], c[1], c[2])
    }
}

/// Which components of the shift are integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlphaCase {
    Generic,
    Alpha1Integral,
    Alpha2Integral,
    BothIntegral,
}

/// Rational shift vector `α ∈ ℚ²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AlphaShift {
    alpha1: Rational64,
    alpha2: Rational64,
}

impl AlphaShift {
    pub fn new(alpha1: Rational64, alpha2: Rational64) -> Self {
        // Rational64 is always stored in lowest terms with positive denominator.
        AlphaShift { alpha1, alpha2 }
    }

    pub fn from_ratios(p1: i64, q1: i64, p2: i64, q2: i64) -> Result<Self> {
        if q1 == 0 || q2 == 0 {
            return Err(Error::InvalidInput("zero denominator in alpha".into()));
        }
        Ok(AlphaShift::new(Rational64::new(p1, q1), Rational64::new(p2, q2)))
    }

    pub fn alpha1(&self) -> Rational64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> Rational64 {
        self.alpha2
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (ratio_f64(self.alpha1), ratio_f64(self.alpha2))
    }

    pub fn case(&self) -> AlphaCase {
        match (self.alpha1.is_integer(), self.alpha2.is_integer()) {
            (false, false) => AlphaCase::Generic,
            (true, false) => AlphaCase::Alpha1Integral,
            (false, true) => AlphaCase::Alpha2Integral,
            (true, true) => AlphaCase::BothIntegral,
        }
    }

    /// Representative with both components in `[0, 1)`; same lattice `α + ℤ²`.
    pub fn reduced(&self) -> Self {
        AlphaShift {
            alpha1: self.alpha1 - self.alpha1.floor(),
            alpha2: self.alpha2 - self.alpha2.floor(),
        }
    }

    pub fn shifted(&self, k1: i64, k2: i64) -> Self {
        AlphaShift {
            alpha1: self.alpha1 + k1,
            alpha2: self.alpha2 + k2,
        }
    }

    /// The shift with components exchanged, matching [`QuadraticForm::swapped`].
    pub fn swapped(&self) -> Self {
        AlphaShift {
            alpha1: self.alpha2,
            alpha2: self.alpha1,
        }
    }
}

impl fmt::Display for AlphaShift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.alpha1, self.alpha2)
    }
}

fn parse_rational(s: &str) -> Result<Rational64> {
    let s = s.trim();
    let bad = || Error::InvalidInput(format!("expected a rational p/q, got {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(Error::InvalidInput(format!("zero denominator in {s:?}")));
            }
            Ok(Rational64::new(p, q))
        }
        None => Ok(Rational64::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

impl FromStr for AlphaShift {
    type Err = Error;

    /// Parses `"p/q,r/s"`; plain integers are accepted for either component.
    fn from_str(s: &str) -> Result<Self> {
        let (x, y) = s
            .split_once(',')
            .ok_or_else(|| Error::InvalidInput(format!("alpha must be given as p/q,r/s, got {s:?}")))?;
        Ok(AlphaShift::new(parse_rational(x)?, parse_rational(y)?))
    }
}

impl Serialize for AlphaShift {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AlphaShift {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn ratio_f64(r: Rational64) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A point of `α + ℤ²`, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticePoint {
    pub n1: Rational64,
    pub n2: Rational64,
}

impl LatticePoint {
    pub fn new(n1: Rational64, n2: Rational64) -> Self {
        LatticePoint { n1, n2 }
    }

    /// The point `α + (k₁, k₂)`.
    pub fn from_offset(alpha: &AlphaShift, k1: i64, k2: i64) -> Self {
        LatticePoint {
            n1: alpha.alpha1 + k1,
            n2: alpha.alpha2 + k2,
        }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (ratio_f64(self.n1), ratio_f64(self.n2))
    }

    pub fn is_origin(&self) -> bool {
        self.n1.is_zero() && self.n2.is_zero()
    }

    /// Exact signs `(sgn n₁, sgn n₂)`.
    pub fn signs(&self) -> (i32, i32) {
        (rational_sign(self.n1), rational_sign(self.n2))
    }

    pub fn belongs_to(&self, alpha: &AlphaShift) -> bool {
        (self.n1 - alpha.alpha1).is_integer() && (self.n2 - alpha.alpha2).is_integer()
    }
}

pub(crate) fn rational_sign(r: Rational64) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

/// All `n ∈ α + ℤ²` with `|n_j − α_j| ≤ r`, row-major in the integer offsets
/// (`k₁` outer, `k₂` inner, both ascending).
pub fn lattice_box(alpha: &AlphaShift, r: u32) -> Result<Vec<LatticePoint>> {
    if r == 0 {
        return Err(Error::InvalidInput("lattice box radius must be at least 1".into()));
    }
    let r = r as i64;
    let mut pts = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
    for k1 in -r..=r {
        for k2 in -r..=r {
            pts.push(LatticePoint::from_offset(alpha, k1, k2));
        }
    }
    Ok(pts)
}

/// A point `τ` of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularPoint {
    tau: Complex64,
}

impl ModularPoint {
    pub fn new(tau: Complex64) -> Result<Self> {
        if !(tau.re.is_finite() && tau.im.is_finite() && tau.im > 0.0) {
            return Err(Error::domain(format!("tau must lie in the upper half-plane, got {tau}")));
        }
        Ok(ModularPoint { tau })
    }

    pub fn pure_imaginary(v: f64) -> Result<Self> {
        Self::new(Complex64::new(0.0, v))
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn v(&self) -> f64 {
        self.tau.im
    }

    pub fn is_pure_imaginary(&self) -> bool {
        self.tau.re == 0.0
    }

    /// `q = e^{2πiτ}`.
    pub fn q(&self) -> Complex64 {
        (Complex64::new(0.0, 2.0 * std::f64::consts::PI) * self.tau).exp()
    }
}
