//! The linear symbol, phase functions, lower-bound certificates and the
//! counterexample family.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::scalar::{Coef, Rational, Scalar};
use crate::tuple::{alternating, FrequencyTuple};

/// Carries gamma, the coefficient of k^2 in the linear symbol.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseContext {
    pub gamma: Coef,
}

impl PhaseContext {
    pub fn new(gamma: Coef) -> Self {
        PhaseContext { gamma }
    }

    pub fn zero() -> Self {
        PhaseContext { gamma: Coef::ZERO }
    }

    pub fn rational(num: i64, den: i64) -> Self {
        PhaseContext {
            gamma: Coef::ratio(num, den),
        }
    }

    pub fn real(gamma: f64) -> Self {
        PhaseContext {
            gamma: Coef::real(gamma),
        }
    }
}

/// k^4 + gamma k^2.
pub fn phi(k: i64, ctx: &PhaseContext) -> f64 {
    let k = k as i128;
    f64::affine(k * k * k * k, k * k, &ctx.gamma)
}

/// Integer parts (quartic, quadratic) with phase = quartic + gamma * quadratic.
/// Exact while the fourth power of the alternating sum fits in i128 (entries
/// up to about 2^27 at arity 9); use [`phase_parts_big`] beyond.
pub fn phase_parts(k: &[i64]) -> (i128, i128) {
    let s = alternating(k) as i128;
    let s2 = s * s;
    let (mut q4, mut q2) = (s2 * s2, s2);
    for (i, &x) in k.iter().enumerate() {
        let x = x as i128;
        let x2 = x * x;
        if i % 2 == 0 {
            q4 -= x2 * x2;
            q2 -= x2;
        } else {
            q4 += x2 * x2;
            q2 += x2;
        }
    }
    (q4, q2)
}

pub fn phase_parts_big(k: &[i64]) -> (BigInt, BigInt) {
    let s = BigInt::from(alternating(k));
    let s2 = &s * &s;
    let (mut q4, mut q2) = (&s2 * &s2, s2);
    for (i, &x) in k.iter().enumerate() {
        let x2 = BigInt::from(x) * x;
        let x4 = &x2 * &x2;
        if i % 2 == 0 {
            q4 -= x4;
            q2 -= x2;
        } else {
            q4 += x4;
            q2 += x2;
        }
    }
    (q4, q2)
}

fn fits_small(t: &FrequencyTuple) -> bool {
    t.kmax() <= 1 << 27
}

/// Floating phase for the solver and sampling paths.
pub fn phase(t: &FrequencyTuple, ctx: &PhaseContext) -> f64 {
    if fits_small(t) {
        let (a, b) = phase_parts(t.entries());
        f64::affine(a, b, &ctx.gamma)
    } else {
        let (a, b) = phase_parts_big(t.entries());
        a.to_f64().unwrap_or(f64::NAN) + ctx.gamma.value() * b.to_f64().unwrap_or(f64::NAN)
    }
}

/// Exact phase; gamma must be rational.
pub fn phase_exact(t: &FrequencyTuple, ctx: &PhaseContext) -> Result<Rational> {
    if !ctx.gamma.is_exact() {
        return Err(Error::NotExact("gamma"));
    }
    if fits_small(t) {
        let (a, b) = phase_parts(t.entries());
        return Ok(Rational::affine(a, b, &ctx.gamma));
    }
    let (a, b) = phase_parts_big(t.entries());
    let g = Rational::from_coef(&ctx.gamma).to_big();
    Ok(Rational::from_big(
        num_rational::BigRational::from_integer(a) + num_rational::BigRational::from_integer(b) * g,
    ))
}

fn factored_parts(k1: i64, k2: i64, k3: i64) -> (i128, i128) {
    let (a, b, c) = ((k1 - k2) as i128, (k3 - k2) as i128, (k1 + k3) as i128);
    let outer = a * b;
    (outer * (a * a + b * b + 3 * c * c), 2 * outer)
}

/// (k1-k2)(k3-k2){(k1-k2)^2 + (k3-k2)^2 + 3(k1+k3)^2 + 2 gamma}.
pub fn phase3_factored(k1: i64, k2: i64, k3: i64, ctx: &PhaseContext) -> f64 {
    let (a, b) = factored_parts(k1, k2, k3);
    f64::affine(a, b, &ctx.gamma)
}

pub fn phase3_factored_exact(k1: i64, k2: i64, k3: i64, ctx: &PhaseContext) -> Result<Rational> {
    if !ctx.gamma.is_exact() {
        return Err(Error::NotExact("gamma"));
    }
    let (a, b) = factored_parts(k1, k2, k3);
    Ok(Rational::affine(a, b, &ctx.gamma))
}

fn arity5(t: &FrequencyTuple, what: &str) -> Result<[i128; 5]> {
    if t.arity() != 5 {
        return Err(Error::Arity {
            what: what.into(),
            got: t.arity(),
        });
    }
    let e = t.entries();
    Ok([e[0], e[1], e[2], e[3], e[4]].map(|x| x as i128))
}

/// 2{(k1-k2+k3-k4)(k5-k4) + (k1-k2)(k3-k2)}: the gamma-coefficient of the
/// quintic phase.
pub fn r1_5(t: &FrequencyTuple) -> Result<i128> {
    let [k1, k2, k3, k4, k5] = arity5(t, "r1_5")?;
    Ok(2 * ((k1 - k2 + k3 - k4) * (k5 - k4) + (k1 - k2) * (k3 - k2)))
}

/// 2{(k3+k1-k2-k4)(k5+k1-k2-k4) - (k2-k1)(k4-k1)}.
pub fn r2_5(t: &FrequencyTuple) -> Result<i128> {
    let [k1, k2, k3, k4, k5] = arity5(t, "r2_5")?;
    Ok(2 * ((k3 + k1 - k2 - k4) * (k5 + k1 - k2 - k4) - (k2 - k1) * (k4 - k1)))
}

/// Which hypothesis set produced a certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CertCase {
    /// one outer slot dominates: |Phi| >= |k_outer' - k2| kmax^3
    CubicOuterDominant,
    /// middle slot dominates, or middle small with comparable outer slots
    CubicQuartic,
    /// one outer slot small, the other two comparable
    CubicOuterSmall,
    /// all three comparable
    CubicComparable,
    /// |k3-k4| > 16^2 |k1-k2| and |k5| > 14 max
    QuinticSplitDifference,
    /// |k5|^(3/4) > 16^2 max
    QuinticDominant,
    /// |k5| > 16^2 max > 16^3 sec
    QuinticSeparated,
    /// k4, k5 comparable and large, k4-k5 large
    QuinticPairFar,
    /// k4, k5 comparable and large, |k1-k2| small against |k4-k5|
    QuinticPairNear,
    /// k4 dominates everything
    QuinticFourthDominant,
    /// k3, k5 comparable and large
    QuinticOddPair,
}

impl CertCase {
    pub fn label(&self) -> &'static str {
        match self {
            CertCase::CubicOuterDominant => "cubic-outer-dominant",
            CertCase::CubicQuartic => "cubic-quartic",
            CertCase::CubicOuterSmall => "cubic-outer-small",
            CertCase::CubicComparable => "cubic-comparable",
            CertCase::QuinticSplitDifference => "quintic-split-difference",
            CertCase::QuinticDominant => "quintic-dominant",
            CertCase::QuinticSeparated => "quintic-separated",
            CertCase::QuinticPairFar => "quintic-pair-far",
            CertCase::QuinticPairNear => "quintic-pair-near",
            CertCase::QuinticFourthDominant => "quintic-fourth-dominant",
            CertCase::QuinticOddPair => "quintic-odd-pair",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    pub case: CertCase,
    /// Claimed lower bound for |Phi|.
    pub bound: f64,
}

impl Certificate {
    /// Checks the claim against the phase itself.
    pub fn holds(&self, t: &FrequencyTuple, ctx: &PhaseContext) -> bool {
        phase(t, ctx).abs() >= self.bound
    }
}

fn comparable(a: i64, b: i64) -> bool {
    a <= 16 * b && b <= 16 * a
}

/// Classifies `t` against the resonance lower-bound hypotheses and returns
/// the first matching case with its explicit bound.
pub fn certify_lower_bound(t: &FrequencyTuple, ctx: &PhaseContext) -> Result<Option<Certificate>> {
    let kmax = t.kmax();
    let limit = 16.0 * ctx.gamma.value().abs().max(1.0);
    if !matches!(t.arity(), 3 | 5) {
        return Err(Error::Arity {
            what: "certify_lower_bound".into(),
            got: t.arity(),
        });
    }
    if (kmax as f64) <= limit {
        return Err(Error::OutOfCertifiedRange { kmax, limit });
    }
    let m = kmax as f64;
    let e = t.entries();
    let a: Vec<i64> = e.iter().map(|x| x.abs()).collect();
    let cert = |case, bound| Ok(Some(Certificate { case, bound }));
    if t.arity() == 3 {
        let (k1, k2, k3) = (e[0], e[1], e[2]);
        if (k1 - k2) == 0 || (k3 - k2) == 0 {
            return Ok(None);
        }
        let (d12, d32) = ((k1 - k2).abs() as f64, (k3 - k2).abs() as f64);
        if a[2] > 16 * a[0].max(a[1]) {
            return cert(CertCase::CubicOuterDominant, d12 * m.powi(3));
        }
        if a[0] > 16 * a[2].max(a[1]) {
            return cert(CertCase::CubicOuterDominant, d32 * m.powi(3));
        }
        if a[1] > 16 * a[0].max(a[2]) || (32 * a[1] < a[0].min(a[2]) && comparable(a[0], a[2])) {
            return cert(CertCase::CubicQuartic, m.powi(4) / 32.0);
        }
        if 32 * a[0] < a[1].min(a[2]) && comparable(a[1], a[2]) {
            return cert(CertCase::CubicOuterSmall, d32 * m.powi(3) / 32.0);
        }
        if 32 * a[2] < a[1].min(a[0]) && comparable(a[1], a[0]) {
            return cert(CertCase::CubicOuterSmall, d12 * m.powi(3) / 32.0);
        }
        if comparable32(a[0], a[1]) && comparable32(a[1], a[2]) && comparable32(a[0], a[2]) {
            return cert(CertCase::CubicComparable, d12 * d32 * m * m / 2.0);
        }
        return Ok(None);
    }
    let (k1, k2, k3, k4, k5) = (e[0], e[1], e[2], e[3], e[4]);
    let max4 = a[..4].iter().copied().max().unwrap_or(0);
    let sec4 = crate::tuple::second_largest(&e[..4]);
    let alt4 = (k1 - k2 + k3 - k4).abs() as f64;
    let k5f = a[4] as f64;
    if alt4 > 0.0 {
        if (k3 - k4).abs() > 256 * (k1 - k2).abs() && a[4] > 14 * max4 {
            return cert(CertCase::QuinticSplitDifference, 0.5 * alt4 * k5f.powi(3));
        }
        if cube_exceeds(a[4], max4) {
            return cert(CertCase::QuinticDominant, alt4 * k5f.powi(3));
        }
        if a[4] > 256 * max4 && max4 > 4096 * sec4 {
            return cert(CertCase::QuinticSeparated, alt4 * k5f.powi(3));
        }
    }
    let max123 = a[..3].iter().copied().max().unwrap_or(0);
    let d45 = (k4 - k5).abs();
    if comparable(a[3], a[4]) && d45 > 0 {
        if 14 * max123 < a[3].min(a[4]).min(d45) {
            return cert(CertCase::QuinticPairFar, d45 as f64 * m.powi(3) / 16.0);
        }
        if 256 * (k1 - k2).abs() < d45 && 14 * max123 < a[3].min(a[4]) {
            return cert(CertCase::QuinticPairNear, d45 as f64 * m.powi(3) / 16.0);
        }
    }
    if 196 * a[0].max(a[1]).max(a[2]).max(a[4]) < a[3] {
        return cert(CertCase::QuinticFourthDominant, m.powi(4) / 2.0);
    }
    if 14 * a[0].max(a[1]).max(a[3]) < a[2].min(a[4]) && comparable(a[2], a[4]) {
        return cert(CertCase::QuinticOddPair, m.powi(4) / 64.0);
    }
    Ok(None)
}

fn comparable32(a: i64, b: i64) -> bool {
    a <= 32 * b && b <= 32 * a
}

/// |k5|^3 > 16^8 max^4, exactly.
fn cube_exceeds(k5: i64, max4: i64) -> bool {
    let lhs = BigInt::from(k5).pow(3);
    let rhs = BigInt::from(16).pow(8) * BigInt::from(max4).pow(4);
    lhs > rhs
}

/// (n^5, n^5+n^3-1, n^8+n^3, n^8, n^9), whose first four entries have
/// alternating sum 1 while the phase stays of order n^22.
pub fn counterexample_tuple(n: u64) -> Result<FrequencyTuple> {
    if n < 2 {
        return Err(Error::Usage(format!(
            "counterexample needs n >= 2, got {n}"
        )));
    }
    let pw = |e: u32| (n as i128).checked_pow(e).ok_or(Error::Overflow(n));
    let (n3, n5, n8, n9) = (pw(3)?, pw(5)?, pw(8)?, pw(9)?);
    let entries = [n5, n5 + n3 - 1, n8 + n3, n8, n9];
    let mut out = [0i64; 5];
    for (o, v) in out.iter_mut().zip(entries) {
        *o = i64::try_from(v).map_err(|_| Error::Overflow(n))?;
    }
    FrequencyTuple::new(&out)
}

/// Exact quintic phase at gamma = 0 for arbitrarily large entries.
pub fn phase0_big(t: &FrequencyTuple) -> BigInt {
    phase_parts_big(t.entries()).0
}

/// One counterexample sample: |Phi_0|, the n^27 cubic-gain bound, and their
/// ratio.
pub fn counterexample_row(n: u64) -> Result<(f64, f64, f64)> {
    let t = counterexample_tuple(n)?;
    let phi5 = phase0_big(&t).abs().to_f64().unwrap_or(f64::INFINITY);
    let alt4 = (t.k(1) - t.k(2) + t.k(3) - t.k(4)).abs() as f64;
    let bound = alt4 * (t.k(5) as f64).powi(3);
    Ok((phi5, bound, phi5 / bound))
}

// --- extended-precision angle reduction ---

const TWO_PI_HI: f64 = 6.283_185_307_179_586;
const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[inline]
fn dd_from_i128(n: i128) -> (f64, f64) {
    let hi = n as f64;
    let lo = (n - hi as i128) as f64;
    (hi, lo)
}

#[inline]
fn dd_add(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let (s, e) = two_sum(a.0, b.0);
    let e = e + a.1 + b.1;
    two_sum(s, e)
}

#[inline]
fn dd_mul_f(a: (f64, f64), b: f64) -> (f64, f64) {
    let (p, e) = two_prod(a.0, b);
    two_sum(p, e + a.1 * b)
}

/// t * (quartic + gamma * quadratic) reduced to [-pi, pi], carried out in
/// double-double arithmetic so large phases keep full accuracy.
pub fn reduced_angle(t: f64, quartic: i128, quadratic: i128, gamma: f64) -> f64 {
    let mut phi = dd_from_i128(quartic);
    if quadratic != 0 && gamma != 0.0 {
        phi = dd_add(phi, dd_mul_f(dd_from_i128(quadratic), gamma));
    }
    let x = dd_mul_f(phi, t);
    let n = (x.0 / TWO_PI_HI).round();
    let (p, e) = two_prod(n, TWO_PI_HI);
    let r = dd_add(x, (-p, -e - n * TWO_PI_LO));
    r.0 + r.1
}
