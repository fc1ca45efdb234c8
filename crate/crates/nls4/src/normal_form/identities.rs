//! Exhaustive exact checks of multiplier identities over integer boxes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conserved::EquationParams;
use crate::error::{Error, Result};
use crate::multiplier::{Catalog, Expr, ExtKind, Inner, Region};
use crate::par;
use crate::phase::PhaseContext;
use crate::scalar::{Coef, Rational, Scalar};
use crate::tuple::for_each_in_box;

/// Outcome of one pointwise identity sweep.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub identity: String,
    /// Box radius, or the largest sampled magnitude for sampled checks.
    pub radius: i64,
    pub checked: u64,
    /// Tuples where either side is nonzero.
    pub nontrivial: u64,
    pub violations: u64,
    pub max_abs_deviation: f64,
    pub first_violation: Option<Vec<i64>>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Default)]
struct Tally {
    checked: u64,
    nontrivial: u64,
    violations: u64,
    max_dev: f64,
    first: Option<Vec<i64>>,
}

impl Tally {
    fn visit(&mut self, lhs: &Expr, rhs: &Expr, k: &[i64], ctx: &PhaseContext) {
        let a: Rational = lhs.eval(k, ctx);
        let b: Rational = rhs.eval(k, ctx);
        self.checked += 1;
        if !a.is_zero() || !b.is_zero() {
            self.nontrivial += 1;
        }
        if a != b {
            self.violations += 1;
            self.max_dev = self.max_dev.max(Scalar::sub(&a, &b).abs().to_f64());
            if self.first.is_none() {
                self.first = Some(k.to_vec());
            }
        }
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.checked += o.checked;
        self.nontrivial += o.nontrivial;
        self.violations += o.violations;
        self.max_dev = self.max_dev.max(o.max_dev);
        if self.first.is_none() {
            self.first = o.first;
        }
        self
    }

    fn report(self, name: &str, radius: i64) -> IdentityReport {
        IdentityReport {
            identity: name.to_string(),
            radius,
            checked: self.checked,
            nontrivial: self.nontrivial,
            violations: self.violations,
            max_abs_deviation: self.max_dev,
            first_violation: self.first,
        }
    }
}

fn check_exact(lhs: &Expr, rhs: &Expr, ctx: &PhaseContext) -> Result<usize> {
    if lhs.arity() != rhs.arity() {
        return Err(Error::Arity {
            what: format!("identity with an arity-{} side", lhs.arity()),
            got: rhs.arity(),
        });
    }
    if !lhs.is_exact() || !rhs.is_exact() || !ctx.gamma.is_exact() {
        return Err(Error::NotExact(
            "identity checks need rational coefficients",
        ));
    }
    Ok(lhs.arity())
}

/// Compares two multipliers at every tuple of `[-radius, radius]^n` in
/// exact arithmetic.
pub fn check_identity(
    name: &str,
    lhs: &Expr,
    rhs: &Expr,
    radius: i64,
    ctx: &PhaseContext,
) -> Result<IdentityReport> {
    let n = check_exact(lhs, rhs, ctx)?;
    let rest = vec![radius; n - 1];
    let parts = par::map_range(-radius, radius, |k0| {
        let mut tally = Tally::default();
        let mut k = vec![0i64; n];
        k[0] = k0;
        for_each_in_box(&rest, |tail| {
            k[1..].copy_from_slice(tail);
            tally.visit(lhs, rhs, &k, ctx);
        });
        tally
    });
    Ok(parts
        .into_iter()
        .fold(Tally::default(), Tally::merge)
        .report(name, radius))
}

/// Same comparison at the given tuples.
fn check_at(
    name: &str,
    lhs: &Expr,
    rhs: &Expr,
    tuples: &[Vec<i64>],
    ctx: &PhaseContext,
) -> Result<IdentityReport> {
    check_exact(lhs, rhs, ctx)?;
    let radius = tuples
        .iter()
        .flat_map(|t| t.iter().map(|x| x.abs()))
        .max()
        .unwrap_or(0);
    let parts = par::map_slice(tuples, |k| {
        let mut tally = Tally::default();
        tally.visit(lhs, rhs, k, ctx);
        tally
    });
    Ok(parts
        .into_iter()
        .fold(Tally::default(), Tally::merge)
        .report(name, radius))
}

fn chi(r: Region, n: usize) -> Expr {
    Expr::chi(r, n).expect("valid region arity")
}

fn prod(v: Vec<Expr>) -> Expr {
    Expr::product(v).expect("factors share arity")
}

fn sum(v: Vec<Expr>) -> Expr {
    Expr::sum(v).expect("terms share arity")
}

fn two(e: &Expr) -> Expr {
    e.scale(Coef::int(2))
}

/// The six cubic regions cover every triple, and the complement region is
/// 0/1 valued.
pub fn verify_partition(radius: i64) -> Result<Vec<IdentityReport>> {
    let ctx = PhaseContext::zero();
    let lhs = sum(vec![
        two(&chi(Region::H11, 3)).sym1(),
        chi(Region::H12, 3),
        two(&chi(Region::H21, 3)).sym1(),
        two(&chi(Region::H22, 3)).sym1(),
        chi(Region::H23, 3),
        chi(Region::H3, 3),
    ]);
    let one = Expr::one(3)?;
    let h3 = chi(Region::H3, 3);
    let idempotent = prod(vec![h3.clone(), sum(vec![h3, one.neg()])]);
    let zero = Expr::constant(3, Coef::ZERO)?;
    Ok(vec![
        check_identity("partition of unity", &lhs, &one, radius, &ctx)?,
        check_identity("H3 is 0/1 valued", &idempotent, &zero, radius, &ctx)?,
    ])
}

/// 1 = χ_NR1 + sym1(2χ_R1) - χ_R2 on triples.
pub fn verify_decomposition(radius: i64) -> Result<IdentityReport> {
    let ctx = PhaseContext::zero();
    let rhs = sum(vec![
        chi(Region::NR1, 3),
        two(&chi(Region::R1, 3)).sym1(),
        chi(Region::R2, 3).neg(),
    ]);
    check_identity(
        "resonance decomposition",
        &Expr::one(3)?,
        &rhs,
        radius,
        &ctx,
    )
}

fn h11_split_sides(p: &EquationParams, cutoff: f64) -> Result<Vec<(&'static str, Expr, Expr)>> {
    let q1 = Expr::q1(p);
    let m1 = prod(vec![
        q1.clone(),
        Expr::phase(3, true)?.recip(),
        chi(Region::GtL(cutoff), 3),
    ]);
    let m2 = q1;
    let h11 = two(&chi(Region::H11, 3)).sym1();
    let left = |inner: Expr| -> Result<Expr> {
        Ok(prod(vec![
            prod(vec![m1.clone(), h11.clone()]).ext(ExtKind::Ext11, 5)?,
            prod(vec![m2.clone(), inner]).ext(ExtKind::Ext21, 5)?,
        ])
        .sym())
    };
    let base = prod(vec![m1.ext(ExtKind::Ext11, 5)?, m2.ext(ExtKind::Ext21, 5)?]);
    let right = |js: &[u8], w: i64| -> Result<Expr> {
        let mut terms = Vec::new();
        for &j in js {
            let inner = Inner::from_index(j)?;
            for r in [Region::NrOuter(inner), Region::NrSwapped(inner)] {
                terms.push(
                    prod(vec![base.clone(), chi(r, 5)])
                        .scale(Coef::int(w))
                        .sym(),
                );
            }
        }
        Ok(sum(terms))
    };
    let first_inner = sum(vec![
        h11.clone(),
        two(&chi(Region::H21, 3)).sym1(),
        two(&chi(Region::H22, 3)).sym1(),
    ]);
    let second_inner = sum(vec![chi(Region::H12, 3), chi(Region::H23, 3)]);
    Ok(vec![
        (
            "H11 split, regions H11/H21/H22",
            left(first_inner)?,
            right(&[1, 3, 4], 2)?,
        ),
        (
            "H11 split, regions H12/H23",
            left(second_inner)?,
            right(&[2, 5], 1)?,
        ),
    ])
}

/// Both splittings of an H11-outer quintic product into the NR(j, .)
/// regions, with m1 = Q1 χ_{>L} / Φ and m2 = Q1.
pub fn verify_h11_split(
    p: &EquationParams,
    cutoff: f64,
    gamma: Coef,
    radius: i64,
) -> Result<Vec<IdentityReport>> {
    let ctx = PhaseContext::new(gamma);
    h11_split_sides(p, cutoff)?
        .iter()
        .map(|(name, l, r)| check_identity(name, l, r, radius, &ctx))
        .collect()
}

/// Quintic tuples with one dominant slot; half land on k1 - k2 + k3 - k4 = 0.
fn dominant_slot_tuples(samples: usize, max_k: i64, seed: u64) -> Vec<Vec<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let small = (max_k / 300).max(1);
    (0..samples)
        .map(|_| {
            let mut k: Vec<i64> = (0..5).map(|_| rng.random_range(-small..=small)).collect();
            let big = rng.random_range(0..5);
            k[big] = rng.random_range(-max_k..=max_k);
            if rng.random_bool(0.5) {
                k[3] = k[0] - k[1] + k[2];
            }
            k
        })
        .collect()
}

/// The H11 splittings at sampled tuples beyond the exhaustive box.
pub fn verify_h11_split_sampled(
    p: &EquationParams,
    cutoff: f64,
    gamma: Coef,
    samples: usize,
    max_k: i64,
    seed: u64,
) -> Result<Vec<IdentityReport>> {
    let ctx = PhaseContext::new(gamma);
    let tuples = dominant_slot_tuples(samples, max_k, seed);
    h11_split_sides(p, cutoff)?
        .iter()
        .map(|(name, l, r)| check_at(&format!("{name}, sampled"), l, r, &tuples, &ctx))
        .collect()
}

fn quintic_regrouping_sides(p: &EquationParams, cutoff: f64) -> Result<(Expr, Expr)> {
    let cat = Catalog::new(p, cutoff);
    let lhs = prod(vec![
        prod(vec![two(cat.l_tilde(1, 1)?), chi(Region::GtL(cutoff), 3)]).ext(ExtKind::Ext11, 5)?,
        Expr::q1(p).ext(ExtKind::Ext21, 5)?,
    ])
    .sym();
    let ph = Expr::phase(5, true)?;
    let mut terms = Vec::new();
    for j in 1..=6 {
        terms.push(prod(vec![cat.l(2, j)?.clone(), ph.clone()]));
    }
    for j in 8..=18 {
        terms.push(cat.m(2, j)?.clone());
    }
    Ok((lhs, sum(terms).sym()))
}

/// The quintic regrouping identity that produces the L5 and M5 entries,
/// over the whole box.
pub fn verify_quintic_regrouping(
    p: &EquationParams,
    cutoff: f64,
    gamma: Coef,
    radius: i64,
) -> Result<IdentityReport> {
    let (lhs, rhs) = quintic_regrouping_sides(p, cutoff)?;
    check_identity(
        "quintic regrouping",
        &lhs,
        &rhs,
        radius,
        &PhaseContext::new(gamma),
    )
}

/// The same identity at random tuples with one dominant slot, where the
/// high-frequency regions are populated.
pub fn verify_quintic_regrouping_sampled(
    p: &EquationParams,
    cutoff: f64,
    gamma: Coef,
    samples: usize,
    max_k: i64,
    seed: u64,
) -> Result<IdentityReport> {
    let (lhs, rhs) = quintic_regrouping_sides(p, cutoff)?;
    let tuples = dominant_slot_tuples(samples, max_k, seed);
    check_at(
        "quintic regrouping, sampled",
        &lhs,
        &rhs,
        &tuples,
        &PhaseContext::new(gamma),
    )
}
