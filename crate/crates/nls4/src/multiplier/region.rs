//! Characteristic functions of frequency regions.

use std::fmt;

use crate::error::{Error, Result};

/// Which high-frequency region the inner cubic factor of a quintic
/// resonance split sits in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Inner {
    H11,
    H12,
    H21,
    H22,
    H23,
}

impl Inner {
    pub fn index(self) -> u8 {
        match self {
            Inner::H11 => 1,
            Inner::H12 => 2,
            Inner::H21 => 3,
            Inner::H22 => 4,
            Inner::H23 => 5,
        }
    }

    pub fn from_index(j: u8) -> Result<Inner> {
        Ok(match j {
            1 => Inner::H11,
            2 => Inner::H12,
            3 => Inner::H21,
            4 => Inner::H22,
            5 => Inner::H23,
            _ => return Err(Error::Usage(format!("no non-resonant region NR({j}, .)"))),
        })
    }

    fn eval(self, a: i64, b: i64, c: i64) -> bool {
        match self {
            Inner::H11 => h11_3(a, b, c),
            Inner::H12 => h12(a, b, c),
            Inner::H21 => h21(a, b, c),
            Inner::H22 => h22(a, b, c),
            Inner::H23 => h23(a, b, c),
        }
    }
}

/// Named regions. `LeL`/`GtL` carry the cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    LeL(f64),
    GtL(f64),
    H11,
    H12,
    H21,
    H22,
    H23,
    H3,
    NR1,
    R1,
    R2,
    R3,
    A1,
    A2,
    A3,
    /// `NR(j, 1)`: inner region on (k3, k4, k5), outer H11 on (k1, k2, k345).
    NrOuter(Inner),
    /// `NR(j, 2)`: inner region on (k3, k4, k5), outer H11 on (k345, k2, k1).
    NrSwapped(Inner),
}

impl Region {
    pub fn accepts(&self, arity: usize) -> bool {
        match self {
            Region::LeL(_) | Region::GtL(_) => matches!(arity, 3 | 5 | 7 | 9),
            Region::H11 | Region::NR1 | Region::R1 => matches!(arity, 3 | 5),
            Region::H12 | Region::H21 | Region::H22 | Region::H23 | Region::H3 | Region::R2 => {
                arity == 3
            }
            _ => arity == 5,
        }
    }

    /// Rough share of random tuples that pass; products test the most
    /// selective indicator first.
    pub(crate) fn selectivity(&self) -> u8 {
        match self {
            Region::R2 => 0,
            Region::NrOuter(_) | Region::NrSwapped(_) => 1,
            Region::H11 | Region::H12 | Region::H21 | Region::H22 | Region::H23 => 2,
            Region::R1 | Region::A1 => 3,
            Region::LeL(_) | Region::GtL(_) => 4,
            Region::H3 | Region::A2 | Region::A3 | Region::R3 => 5,
            Region::NR1 => 6,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::LeL(l) => write!(f, "le_L({l})"),
            Region::GtL(l) => write!(f, "gt_L({l})"),
            Region::NrOuter(j) => write!(f, "NR({},1)", j.index()),
            Region::NrSwapped(j) => write!(f, "NR({},2)", j.index()),
            other => write!(f, "{other:?}"),
        }
    }
}

fn max_abs(k: &[i64]) -> i128 {
    k.iter().map(|x| (*x as i128).abs()).max().unwrap_or(0)
}

fn comparable16(a: i128, b: i128) -> bool {
    a <= 16 * b && b <= 16 * a
}

fn h11_3(a: i64, b: i64, c: i64) -> bool {
    16 * max_abs(&[a, b]) < (c as i128).abs()
}

fn h12(a: i64, b: i64, c: i64) -> bool {
    16 * max_abs(&[a, c]) < (b as i128).abs()
}

fn h21(a: i64, b: i64, c: i64) -> bool {
    let (a, b, c) = (a as i128, b as i128, c as i128);
    32 * a.abs() < (b - c).abs().min(b.abs()).min(c.abs()) && comparable16(b.abs(), c.abs())
}

fn h22(a: i64, b: i64, c: i64) -> bool {
    let (a, b, c) = (a as i128, b as i128, c as i128);
    (b - c).abs() <= 32 * a.abs()
        && 32 * a.abs() < b.abs().min(c.abs())
        && comparable16(b.abs(), c.abs())
}

fn h23(a: i64, b: i64, c: i64) -> bool {
    let (a, b, c) = (a as i128, b as i128, c as i128);
    32 * b.abs() < a.abs().min(c.abs()) && comparable16(a.abs(), c.abs())
}

fn nr1_3(a: i64, b: i64, c: i64) -> bool {
    a != b && c != b
}

fn ind(b: bool) -> i64 {
    b as i64
}

/// |x|^3 <= 16^8 m^4, exact.
fn cube_at_most(x: i64, m: i128) -> bool {
    let x = (x as i128).abs();
    match (
        x.checked_pow(3),
        m.checked_pow(4).and_then(|m4| m4.checked_mul(1 << 32)),
    ) {
        (Some(l), Some(r)) => l <= r,
        _ => {
            use num_bigint::BigInt;
            BigInt::from(x).pow(3) <= BigInt::from(m).pow(4) * BigInt::from(1u64 << 32)
        }
    }
}

/// Evaluates an indicator. Every region is 0/1 valued except `H3`, which is
/// the literal complement of the other five and is reported as computed.
pub fn eval_chi(region: &Region, k: &[i64]) -> Result<i64> {
    if !region.accepts(k.len()) {
        return Err(Error::Arity {
            what: format!("region {region}"),
            got: k.len(),
        });
    }
    Ok(eval_unchecked(region, k))
}

pub(crate) fn eval_unchecked(region: &Region, k: &[i64]) -> i64 {
    let n = k.len();
    match region {
        Region::LeL(l) => ind((max_abs(k) as f64) <= *l),
        Region::GtL(l) => ind((max_abs(k) as f64) > *l),
        Region::H11 => {
            let scale = if n == 3 { 16 } else { 256 };
            ind(scale * max_abs(&k[..n - 1]) < (k[n - 1] as i128).abs())
        }
        Region::H12 => ind(h12(k[0], k[1], k[2])),
        Region::H21 => ind(h21(k[0], k[1], k[2])),
        Region::H22 => ind(h22(k[0], k[1], k[2])),
        Region::H23 => ind(h23(k[0], k[1], k[2])),
        Region::H3 => {
            let (a, b, c) = (k[0], k[1], k[2]);
            1 - (ind(h11_3(a, b, c))
                + ind(h11_3(c, b, a))
                + ind(h12(a, b, c))
                + ind(h21(a, b, c))
                + ind(h21(c, b, a))
                + ind(h22(a, b, c))
                + ind(h22(c, b, a))
                + ind(h23(a, b, c)))
        }
        Region::NR1 => {
            if n == 3 {
                ind(nr1_3(k[0], k[1], k[2]))
            } else {
                let p = k[2] - k[3] + k[4];
                ind(nr1_3(k[0], k[1], p) && nr1_3(k[2], k[3], k[4]))
            }
        }
        Region::R1 => ind(crate::tuple::alternating(&k[..n - 1]) == 0),
        Region::R2 => ind(k[0] == k[1] && k[1] == k[2]),
        Region::R3 => {
            let m = max_abs(&k[..4]);
            let sec = crate::tuple::second_largest(&k[..4]) as i128;
            let (d12, d34) = ((k[0] - k[1]) as i128, (k[2] - k[3]) as i128);
            ind(cube_at_most(k[4], m) && m <= 16 * sec && d34.abs() <= 256 * d12.abs())
        }
        Region::A1 => {
            let p = (k[2] - k[3] + k[4]) as i128;
            ind(512 * max_abs(&k[..2]) < p.abs())
        }
        Region::A2 => ind(256 * ((k[0] - k[1]) as i128).abs() < ((k[2] - k[3]) as i128).abs()),
        Region::A3 => ind(256 * ((k[0] - k[1]) as i128).abs() < ((k[3] - k[4]) as i128).abs()),
        Region::NrOuter(inner) => {
            let p = k[2] - k[3] + k[4];
            ind(h11_3(k[0], k[1], p) && inner.eval(k[2], k[3], k[4]))
        }
        Region::NrSwapped(inner) => {
            let p = k[2] - k[3] + k[4];
            ind(h11_3(p, k[1], k[0]) && inner.eval(k[2], k[3], k[4]))
        }
    }
}
