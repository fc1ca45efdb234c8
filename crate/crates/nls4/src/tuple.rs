use std::fmt;

use crate::error::{Error, Result};

pub const MAX_ARITY: usize = 9;

/// An odd-arity frequency tuple (k1, ..., k_{2N+1}), stored inline.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrequencyTuple {
    len: u8,
    k: [i64; MAX_ARITY],
}

impl FrequencyTuple {
    pub fn new(entries: &[i64]) -> Result<Self> {
        if !matches!(entries.len(), 3 | 5 | 7 | 9) {
            return Err(Error::Arity {
                what: "frequency tuple".into(),
                got: entries.len(),
            });
        }
        Ok(FrequencyTuple::raw(entries))
    }

    /// No arity check; used for intermediate tuples of any length.
    pub(crate) fn raw(entries: &[i64]) -> Self {
        let mut k = [0; MAX_ARITY];
        k[..entries.len()].copy_from_slice(entries);
        FrequencyTuple {
            len: entries.len() as u8,
            k,
        }
    }

    pub fn arity(&self) -> usize {
        self.len as usize
    }

    pub fn entries(&self) -> &[i64] {
        &self.k[..self.len as usize]
    }

    /// Slot `j` counted from 1, as in k_j.
    pub fn k(&self, j: usize) -> i64 {
        self.k[j - 1]
    }

    /// k1 - k2 + k3 - ... + k_{2N+1}.
    pub fn alt_sum(&self) -> i64 {
        alternating(self.entries())
    }

    pub fn kmax(&self) -> i64 {
        self.entries().iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    /// Second largest |k_j|, duplicates counted separately.
    pub fn sec(&self) -> i64 {
        second_largest(self.entries())
    }
}

pub fn alternating(k: &[i64]) -> i64 {
    k.iter()
        .enumerate()
        .map(|(i, x)| if i % 2 == 0 { *x } else { -*x })
        .sum()
}

pub fn second_largest(k: &[i64]) -> i64 {
    let (mut a, mut b) = (i64::MIN, i64::MIN);
    for x in k.iter().map(|x| x.abs()) {
        if x > a {
            b = a;
            a = x;
        } else if x > b {
            b = x;
        }
    }
    if b == i64::MIN {
        0
    } else {
        b
    }
}

impl fmt::Debug for FrequencyTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.entries())
    }
}

impl fmt::Display for FrequencyTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries().iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Visits every tuple in the box `[-r_j, r_j]` per slot.
pub fn for_each_in_box(radii: &[i64], mut f: impl FnMut(&[i64])) {
    let n = radii.len();
    let mut cur: Vec<i64> = radii.iter().map(|r| -r).collect();
    loop {
        f(&cur);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if cur[i] < radii[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = -radii[i];
        }
    }
}
