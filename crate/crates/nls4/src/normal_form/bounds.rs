//! Sampled pointwise bounds, the resonant cancellation and continuity in
//! gamma.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conserved::EquationParams;
use crate::error::{Error, Result};
use crate::multiplier::expr::perms;
use crate::multiplier::region::eval_unchecked;
use crate::multiplier::{Catalog, Expr, Region};
use crate::par;
use crate::phase::{phase_parts, PhaseContext};
use crate::scalar::{Coef, Rational};
use crate::spectral::{sobolev_norm, SpectralField};
use crate::tuple::{alternating, second_largest};

use super::{NormalForm, NormalFormConfig};

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

fn kmax(k: &[i64]) -> f64 {
    k.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64
}

fn chi(r: Region, k: &[i64]) -> f64 {
    eval_unchecked(&r, k) as f64
}

/// Average of `f` over the odd/even slot permutations.
fn sym_avg(k: &[i64], f: impl Fn(&[i64]) -> f64) -> f64 {
    let table = perms(k.len(), true);
    let mut buf = k.to_vec();
    let mut acc = 0.0;
    for p in table {
        for (slot, &src) in p.iter().enumerate() {
            buf[slot] = k[src as usize];
        }
        acc += f(&buf);
    }
    acc / table.len() as f64
}

/// Measured constant for one pointwise bound.
#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub name: String,
    pub samples: usize,
    /// Samples where the multiplier is nonzero.
    pub nonzero: usize,
    pub max_ratio: f64,
    /// Samples where the multiplier is nonzero but the majorant vanishes or
    /// the ratio is not finite.
    pub unbounded: usize,
    pub worst: Option<Vec<i64>>,
}

impl BoundRow {
    pub fn passed(&self) -> bool {
        self.unbounded == 0
    }
}

type Majorant = Box<dyn Fn(&[i64]) -> f64 + Send + Sync>;

struct Bound {
    name: String,
    value: Box<dyn Fn(&[i64]) -> f64 + Send + Sync>,
    majorant: Majorant,
}

fn measure(b: &Bound, tuples: &[Vec<i64>]) -> BoundRow {
    let rows = par::map_slice(tuples, |k| {
        let m = (b.value)(k).abs();
        if m == 0.0 {
            return (false, 0.0, false);
        }
        let r = m / (b.majorant)(k);
        (true, r, !r.is_finite())
    });
    let mut out = BoundRow {
        name: b.name.clone(),
        samples: tuples.len(),
        nonzero: 0,
        max_ratio: 0.0,
        unbounded: 0,
        worst: None,
    };
    for (k, (nz, r, bad)) in tuples.iter().zip(rows) {
        out.nonzero += nz as usize;
        if bad {
            out.unbounded += 1;
            if out.worst.is_none() {
                out.worst = Some(k.clone());
            }
        } else if r > out.max_ratio {
            out.max_ratio = r;
            if out.unbounded == 0 {
                out.worst = Some(k.clone());
            }
        }
    }
    out
}

fn log_uniform(rng: &mut ChaCha8Rng, hi: i64) -> i64 {
    if hi <= 0 {
        return 0;
    }
    let x = rng.random_range(0.0..((hi as f64) + 1.0).ln());
    let m = (x.exp() - 1.0).round() as i64;
    let m = m.min(hi);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

fn near(rng: &mut ChaCha8Rng, x: i64, spread: i64) -> i64 {
    x + log_uniform(rng, spread.max(1))
}

/// A cubic triple at scale `s` shaped after one of the cubic regions.
fn triple(rng: &mut ChaCha8Rng, s: i64) -> [i64; 3] {
    let s = s.max(1);
    let small = |rng: &mut ChaCha8Rng| log_uniform(rng, (s / 40).max(1));
    let big = |rng: &mut ChaCha8Rng| {
        let m = rng.random_range((s / 2).max(1)..=s);
        if rng.random_bool(0.5) {
            m
        } else {
            -m
        }
    };
    match rng.random_range(0..7) {
        0 => [small(rng), small(rng), big(rng)],
        1 => [small(rng), big(rng), small(rng)],
        2 => {
            let b = big(rng);
            [small(rng), b, near(rng, b, s / 3)]
        }
        3 => {
            let b = big(rng);
            [small(rng), b, near(rng, b, s / 64)]
        }
        4 => {
            let b = big(rng);
            [b, small(rng), near(rng, b, s / 3)]
        }
        5 => {
            let b = big(rng);
            [b, near(rng, b, s / 3), near(rng, b, s / 3)]
        }
        _ => [
            log_uniform(rng, s),
            log_uniform(rng, s),
            log_uniform(rng, s),
        ],
    }
}

fn clamp(k: &mut [i64], limit: i64) {
    for x in k.iter_mut() {
        *x = (*x).clamp(-limit, limit);
    }
}

fn sample_tuples(arity: usize, count: usize, limit: i64, cutoff: f64, seed: u64) -> Vec<Vec<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = (cutoff as i64 + 1).min(limit);
    (0..count)
        .map(|_| {
            let s = rng.random_range(lo..=limit);
            let mut k = if arity == 3 {
                triple(&mut rng, s).to_vec()
            } else {
                let inner = triple(&mut rng, s);
                let k345 = inner[0] - inner[1] + inner[2];
                let outer_scale = match rng.random_range(0..3) {
                    0 => (k345.abs() / 40).max(1),
                    1 => k345.abs().max(1) * 40,
                    _ => s,
                };
                let [a, b, _] = triple(&mut rng, outer_scale);
                let mut k = vec![a, b, inner[0], inner[1], inner[2]];
                if rng.random_range(0..4) == 0 {
                    k[3] = k[0] - k[1] + k[2];
                }
                if rng.random_range(0..4) == 0 {
                    k.swap(0, 2);
                }
                k
            };
            clamp(&mut k, limit);
            k
        })
        .collect()
}

fn f64_value(e: Expr, ctx: PhaseContext) -> Box<dyn Fn(&[i64]) -> f64 + Send + Sync> {
    Box::new(move |k| e.eval_f64(k, &ctx))
}

fn min_diff(k: &[i64]) -> f64 {
    (1.0 / bracket((k[0] - k[1]) as f64)).min(1.0 / bracket((k[2] - k[3]) as f64))
}

fn quartet(k: &[i64]) -> (f64, f64) {
    (kmax(&k[..4]), second_largest(&k[..4]) as f64)
}

/// Samples every L and M pointwise bound and reports the measured
/// constants.
pub fn sample_bounds(
    p: &EquationParams,
    cfg: &NormalFormConfig,
    samples: usize,
    limit: i64,
    seed: u64,
) -> Result<Vec<BoundRow>> {
    cfg.validate_for_bounds()?;
    let cat = Catalog::new(p, cfg.cutoff);
    let ctx = cfg.context();
    let cut = cfg.cutoff;
    let s = cfg.s;
    let gt = move |k: &[i64]| chi(Region::GtL(cut), k);
    let alt_weight = move |k: &[i64]| bracket(alternating(k) as f64).powf(s);

    let mut bounds: Vec<Bound> = Vec::new();
    for (n, j) in [(1, 1), (1, 2), (1, 3), (1, 4), (1, 5), (1, 6)]
        .into_iter()
        .chain((1..=6).map(|j| (2, j)))
    {
        let l = cat.l(n, j)?.clone();
        let c = ctx;
        let value: Box<dyn Fn(&[i64]) -> f64 + Send + Sync> =
            Box::new(move |k| l.eval_f64(k, &c) * gt(k));
        let majorant: Majorant = match (n, j) {
            (1, 1) => Box::new(move |k| {
                chi(Region::H11, k) * gt(k) / bracket((k[0] - k[1]) as f64) / bracket(kmax(k))
            }),
            (1, 4) => Box::new(move |k| {
                chi(Region::H22, k) * gt(k) / bracket((k[1] - k[2]) as f64) / bracket(kmax(k))
            }),
            (1, 6) => Box::new(move |k| {
                chi(Region::H3, k) * gt(k)
                    / bracket((k[0] - k[1]) as f64)
                    / bracket((k[2] - k[1]) as f64)
            }),
            _ => Box::new(move |k| gt(k) / bracket(alternating(k) as f64) / bracket(kmax(k))),
        };
        bounds.push(Bound {
            name: format!("L({n},{j})"),
            value,
            majorant,
        });
    }

    let m = |j: usize| -> Result<Expr> { Ok(cat.m(2, j)?.clone()) };
    let weighted = |e: Expr| -> Box<dyn Fn(&[i64]) -> f64 + Send + Sync> {
        let c = ctx;
        Box::new(move |k| alt_weight(k) * e.eval_f64(k, &c))
    };
    bounds.push(Bound {
        name: "M(2,8) symmetrized".into(),
        value: weighted(m(8)?.sym()),
        majorant: Box::new(move |k| {
            sym_avg(k, |q| {
                let (n1, n2) = quartet(q);
                min_diff(q) * bracket(n1).sqrt() * bracket(n2).sqrt() * bracket(q[4] as f64).powf(s)
            })
        }),
    });
    bounds.push(Bound {
        name: "M(2,9)".into(),
        value: weighted(m(9)?),
        majorant: Box::new(move |k| {
            let (n1, n2) = quartet(k);
            min_diff(k)
                * bracket(n1).powf(2.0 / 3.0)
                * bracket(n2).powf(2.0 / 3.0)
                * bracket(k[4] as f64).powf(s)
        }),
    });
    bounds.push(Bound {
        name: "M(2,10)".into(),
        value: weighted(m(10)?),
        majorant: Box::new(move |k| min_diff(k) * quartet(k).0 * bracket(k[4] as f64).powf(s)),
    });
    for j in [11, 12] {
        bounds.push(Bound {
            name: format!("M(2,{j})"),
            value: f64_value(m(j)?, ctx),
            majorant: Box::new(move |_| cut),
        });
    }
    bounds.push(Bound {
        name: "M(2,13)".into(),
        value: weighted(m(13)?),
        majorant: Box::new(move |k| {
            bracket(kmax(&k[..2])).powf(s) * bracket(k[3] as f64) * bracket(k[4] as f64)
                / bracket((k[0] - k[1]) as f64)
                / bracket((k[2] - k[3] + k[4]) as f64)
        }),
    });
    bounds.push(Bound {
        name: "M(2,14)".into(),
        value: weighted(m(14)?),
        majorant: Box::new(move |k| {
            bracket(k[2] as f64).powf(s) * bracket(k[3] as f64) * bracket(k[4] as f64)
                / bracket((k[3] - k[4]) as f64).powi(2)
        }),
    });
    bounds.push(Bound {
        name: "M(2,15)".into(),
        value: weighted(m(15)?),
        majorant: Box::new(move |k| {
            bracket(kmax(&k[..2])).powf(s) * bracket(k[2] as f64) * bracket(k[4] as f64)
                / bracket((k[0] - k[1]) as f64)
                / bracket((k[2] - k[3] + k[4]) as f64)
        }),
    });
    bounds.push(Bound {
        name: "M(2,16)".into(),
        value: weighted(m(16)?),
        majorant: Box::new(move |k| {
            let b5 = bracket(k[4] as f64);
            bracket(k[0] as f64).powf(s - 1.0)
                * (bracket(k[2] as f64) * b5).max(bracket(k[3] as f64) * b5)
                / bracket((k[1] - k[2] + k[3] - k[4]) as f64)
        }),
    });
    bounds.push(Bound {
        name: "M(2,17)".into(),
        value: weighted(m(17)?),
        majorant: Box::new(move |k| {
            bracket(k[0] as f64).powf(s) * bracket(k[3] as f64).max(bracket(k[4] as f64))
                / bracket((k[1] - k[2] + k[3] - k[4]) as f64)
        }),
    });

    let t3 = sample_tuples(3, samples, limit, cut, seed);
    let t5 = sample_tuples(5, samples, limit, cut, seed.wrapping_add(1));
    Ok(bounds
        .iter()
        .map(|b| {
            let arity = if b.name.starts_with("L(1,") { 3 } else { 5 };
            measure(b, if arity == 3 { &t3 } else { &t5 })
        })
        .collect())
}

/// Symmetrized resonant quintic term against its cancellation majorant,
/// and the growth of the raw term along a fixed family.
#[derive(Clone, Debug, Serialize)]
pub struct CancellationReport {
    pub samples: usize,
    pub max_ratio: f64,
    pub unbounded: usize,
    pub worst: Option<Vec<i64>>,
    /// (k5, |M|, |sym M|) along (1, 0, 3, 4, k5).
    pub family: Vec<(i64, f64, f64)>,
    /// Least-squares slope of log|M| against log k5 along the family.
    pub growth_exponent: f64,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

fn cancellation_majorant(k: &[i64]) -> f64 {
    let ind = chi(Region::NR1, k) * chi(Region::H11, k) * chi(Region::R1, k);
    if ind == 0.0 {
        return 0.0;
    }
    kmax(&k[..4]) / ((k[0] - k[1]).abs() as f64)
}

/// Draws tuples on the support of χ_NR1 χ_H11 χ_R1 with |k5| up to
/// `max_k5` and compares the symmetrized term with its majorant in exact
/// arithmetic.
pub fn verify_cancellation(
    p: &EquationParams,
    cutoff: f64,
    samples: usize,
    max_k5: i64,
    seed: u64,
) -> Result<CancellationReport> {
    if max_k5 < 2000 {
        return Err(Error::Usage(format!(
            "cancellation sampling needs |k5| up to at least 2000, got {max_k5}"
        )));
    }
    let cat = Catalog::new(p, cutoff);
    let m8 = cat.m(2, 8)?.clone();
    let sym8 = m8.sym();
    let ctx = PhaseContext::zero();
    if !m8.is_exact() {
        return Err(Error::NotExact(
            "cancellation check needs rational coefficients",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tuples = Vec::with_capacity(samples);
    while tuples.len() < samples {
        let lo = (2000f64).ln();
        let k5 = rng.random_range(lo..=(max_k5 as f64).ln()).exp() as i64;
        let k5 = if rng.random_bool(0.5) { k5 } else { -k5 };
        let b = ((k5.abs() - 1) / (256 * 3)).max(1);
        let a: Vec<i64> = (0..3).map(|_| rng.random_range(-b..=b)).collect();
        let k = vec![a[0], a[1], a[2], a[0] - a[1] + a[2], k5];
        if cancellation_majorant(&k) > 0.0 && chi(Region::H11, &k) > 0.0 {
            tuples.push(k);
        }
    }
    let rows = par::map_slice(&tuples, |k| {
        let v: Rational = sym8.eval(k, &ctx);
        let v = v.abs().to_f64();
        let maj = sym_avg(k, cancellation_majorant);
        (v, maj)
    });
    let mut max_ratio = 0.0;
    let mut unbounded = 0;
    let mut worst = None;
    for (k, (v, maj)) in tuples.iter().zip(rows) {
        if v == 0.0 {
            continue;
        }
        let r = v / maj;
        if !r.is_finite() {
            unbounded += 1;
            worst = Some(k.clone());
        } else if r > max_ratio {
            max_ratio = r;
            if unbounded == 0 {
                worst = Some(k.clone());
            }
        }
    }
    let k5s: Vec<i64> = (0..=8)
        .map(|i| (2000.0 * (500.0f64).powf(i as f64 / 8.0)).round() as i64)
        .collect();
    let family: Vec<(i64, f64, f64)> = k5s
        .iter()
        .map(|&k5| {
            let k = [1, 0, 3, 4, k5];
            let raw: Rational = m8.eval(&k, &ctx);
            let sym: Rational = sym8.eval(&k, &ctx);
            (k5, raw.abs().to_f64(), sym.abs().to_f64())
        })
        .collect();
    let xs: Vec<f64> = family.iter().map(|r| (r.0 as f64).ln()).collect();
    let ys: Vec<f64> = family.iter().map(|r| r.1.ln()).collect();
    Ok(CancellationReport {
        samples,
        max_ratio,
        unbounded,
        worst,
        family,
        growth_exponent: slope(&xs, &ys),
    })
}

/// Leading k5 coefficient of the resonant numerator, recovered by exact
/// interpolation.
#[derive(Clone, Debug, Serialize)]
pub struct LeadingCoefficientReport {
    pub samples: usize,
    /// Samples where the single numerator's k5^7 coefficient differs from
    /// 2 λ5² (k3 - k4).
    pub single_mismatches: usize,
    /// Samples where the paired numerator keeps a k5^7 term.
    pub paired_nonzero: usize,
    /// Samples where the numerator has degree above 7 in k5.
    pub degree_violations: usize,
}

impl LeadingCoefficientReport {
    pub fn passed(&self) -> bool {
        self.single_mismatches == 0 && self.paired_nonzero == 0 && self.degree_violations == 0
    }
}

fn big(r: &Rational) -> BigRational {
    r.to_big()
}

/// Coefficient of x^(n-1) of the interpolant through the points.
fn top_coefficient(xs: &[i64], ys: &[BigRational]) -> BigRational {
    let mut acc = BigRational::zero();
    for (i, (xi, yi)) in xs.iter().zip(ys).enumerate() {
        let mut den = BigInt::from(1);
        for (j, xj) in xs.iter().enumerate() {
            if i != j {
                den *= BigInt::from(xi - xj);
            }
        }
        acc += yi / BigRational::from_integer(den);
    }
    acc
}

/// Checks on random (k1..k4) with k1 - k2 + k3 - k4 = 0 that the resonant
/// numerator has degree 7 in k5 with leading coefficient 2λ5²(k3 - k4),
/// and that pairing it with the (k3, k4, k1, k2) swap cancels that term.
pub fn leading_coefficient_check(
    p: &EquationParams,
    samples: usize,
    range: i64,
    seed: u64,
) -> Result<LeadingCoefficientReport> {
    if !p.is_exact() {
        return Err(Error::NotExact("interpolation needs rational coefficients"));
    }
    let q1 = Expr::small_q1(p);
    let ctx = PhaseContext::zero();
    let phi0 =
        |a: i64, b: i64, c: i64| BigRational::from_integer(BigInt::from(phase_parts(&[a, b, c]).0));
    let q = |a: i64, b: i64, c: i64| -> BigRational {
        let r: Rational = q1.eval(&[a, b, c], &ctx);
        big(&r)
    };
    let numerator = |k: [i64; 5]| -> BigRational {
        let [k1, k2, k3, k4, k5] = k;
        BigRational::from_integer(BigInt::from(2))
            * q(k1, k2, k3 - k4 + k5)
            * q(k3, k4, k5)
            * phi0(k3, k4, k1 - k2 + k5)
    };
    let l5 = p.lambda5.exact().expect("checked exact");
    let l5 = BigRational::new(BigInt::from(*l5.numer()), BigInt::from(*l5.denom()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = LeadingCoefficientReport {
        samples,
        single_mismatches: 0,
        paired_nonzero: 0,
        degree_violations: 0,
    };
    let nodes: Vec<i64> = (0..9).map(|i| 3 + 5 * i).collect();
    for _ in 0..samples {
        let a: Vec<i64> = (0..3).map(|_| rng.random_range(-range..=range)).collect();
        let (k1, k2, k3) = (a[0], a[1], a[2]);
        let k4 = k1 - k2 + k3;
        let single: Vec<BigRational> = nodes
            .iter()
            .map(|&x| numerator([k1, k2, k3, k4, x]))
            .collect();
        let paired: Vec<BigRational> = nodes
            .iter()
            .zip(&single)
            .map(|(&x, s)| s + numerator([k3, k4, k1, k2, x]))
            .collect();
        if !top_coefficient(&nodes, &single).is_zero()
            || !top_coefficient(&nodes, &paired).is_zero()
        {
            rep.degree_violations += 1;
        }
        let expect = BigRational::from_integer(BigInt::from(2))
            * &l5
            * &l5
            * BigRational::from_integer(BigInt::from(k3 - k4));
        if top_coefficient(&nodes[..8], &single[..8]) != expect {
            rep.single_mismatches += 1;
        }
        if !top_coefficient(&nodes[..8], &paired[..8]).abs().is_zero() {
            rep.paired_nonzero += 1;
        }
    }
    Ok(rep)
}

/// Distance between the boundary terms built with gamma and gamma + eps.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContinuityPoint {
    pub eps: f64,
    pub distance: f64,
}

/// |F_gamma(v) - F_{gamma+eps}(v)|_{ℓ²_s} at time `t` for each eps.
pub fn gamma_continuity(
    v: &SpectralField,
    t: f64,
    p: &EquationParams,
    cfg: &NormalFormConfig,
    eps: &[f64],
) -> Result<Vec<ContinuityPoint>> {
    let base = NormalForm::new(p, cfg)?.assemble_f(v, t)?;
    eps.iter()
        .map(|&e| {
            let mut shifted = *cfg;
            shifted.gamma = Coef::real(cfg.gamma.value() + e);
            let f = NormalForm::new(p, &shifted)?.assemble_f(v, t)?;
            Ok(ContinuityPoint {
                eps: e,
                distance: sobolev_norm(&base.sub(&f), cfg.s),
            })
        })
        .collect()
}
