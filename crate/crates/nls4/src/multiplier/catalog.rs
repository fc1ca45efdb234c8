//! The L and M multipliers of the normal-form reduction, built as trees.
//!
//! Entries are indexed by `(n, j)` where the arity is `2n + 1`. Every builder
//! takes the equation coefficients and the cutoff; gamma enters only at
//! evaluation time through the phase nodes.

use crate::conserved::EquationParams;
use crate::error::{Error, Result};
use crate::scalar::Coef;

use super::expr::{Expr, ExtKind};
use super::region::{Inner, Region};

/// Valid `(n, j)` pairs.
pub const L_INDEX: [(usize, usize); 2] = [(1, 6), (2, 6)];
pub const M_INDEX: [(usize, usize); 4] = [(1, 1), (2, 19), (3, 6), (4, 2)];

pub fn count_l(n: usize) -> Option<usize> {
    L_INDEX.iter().find(|(m, _)| *m == n).map(|(_, c)| *c)
}

pub fn count_m(n: usize) -> Option<usize> {
    M_INDEX.iter().find(|(m, _)| *m == n).map(|(_, c)| *c)
}

/// All catalog multipliers for one parameter set and cutoff, sharing
/// subtrees.
#[derive(Clone, Debug)]
pub struct Catalog {
    pub params: EquationParams,
    pub cutoff: f64,
    l3: Vec<Expr>,
    l5: Vec<Expr>,
    l3_tilde: Vec<Expr>,
    l5_tilde: Vec<Expr>,
    m3: Vec<Expr>,
    m5: Vec<Expr>,
    m7: Vec<Expr>,
    m9: Vec<Expr>,
}

struct Kit {
    p: EquationParams,
    cutoff: f64,
}

impl Kit {
    fn chi(&self, r: Region, n: usize) -> Expr {
        Expr::chi(r, n).expect("catalog regions have valid arity")
    }
    fn not(&self, r: Region, n: usize) -> Expr {
        Expr::chi_not(r, n).expect("catalog regions have valid arity")
    }
    fn gt(&self, n: usize) -> Expr {
        self.chi(Region::GtL(self.cutoff), n)
    }
    fn le(&self, n: usize) -> Expr {
        self.chi(Region::LeL(self.cutoff), n)
    }
    fn inv_phase(&self, n: usize) -> Expr {
        Expr::phase(n, true).unwrap().recip()
    }
    fn inv_phase0(&self, n: usize) -> Expr {
        Expr::phase(n, false).unwrap().recip()
    }
    fn three_eighths_l1(&self) -> Coef {
        Coef::ratio(3, 8) * self.p.lambda1
    }
}

fn prod(v: Vec<Expr>) -> Expr {
    Expr::product(v).expect("catalog factors share arity")
}

fn sum(v: Vec<Expr>) -> Expr {
    Expr::sum(v).expect("catalog terms share arity")
}

fn ext(e: &Expr, kind: ExtKind, target: usize) -> Expr {
    e.ext(kind, target).expect("catalog extensions are valid")
}

fn c(n: i64) -> Coef {
    Coef::int(n)
}

impl Catalog {
    pub fn new(params: &EquationParams, cutoff: f64) -> Catalog {
        let k = Kit { p: *params, cutoff };
        let q1 = Expr::q1(params);
        let q2 = Expr::q2(params);
        let sq1 = Expr::small_q1(params);

        // cubic resonance splitting
        let regions3 = [
            (Region::H11, 2),
            (Region::H12, 1),
            (Region::H21, 2),
            (Region::H22, 2),
            (Region::H23, 1),
            (Region::H3, 1),
        ];
        let l3: Vec<Expr> = regions3
            .iter()
            .map(|(r, w)| prod(vec![q1.clone(), k.chi(*r, 3), k.inv_phase(3)]).scale(c(*w)))
            .collect();
        let l3_tilde: Vec<Expr> = l3.iter().map(Expr::sym).collect();
        let l3_cut: Vec<Expr> = l3_tilde
            .iter()
            .map(|e| prod(vec![e.clone(), k.gt(3)]))
            .collect();
        let pick3 = |js: &[usize]| sum(js.iter().map(|j| l3_cut[j - 1].clone()).collect());
        let s3 = pick3(&[1, 2, 3, 4, 5, 6]);

        // quintic pieces
        let a0 = ext(&prod(vec![sq1.clone(), k.inv_phase0(3)]), ExtKind::Ext11, 5);
        let ag = ext(
            &prod(vec![sq1.clone(), k.inv_phase(3), k.gt(3)]),
            ExtKind::Ext11,
            5,
        );
        let b = ext(&sq1, ExtKind::Ext21, 5);
        let nr1 = k.chi(Region::NR1, 5);
        let nr = |j: Inner| k.chi(Region::NrOuter(j), 5);
        let nr_sw = |j: Inner| k.chi(Region::NrSwapped(j), 5);
        let base0 = |extra: Vec<Expr>| {
            let mut v = vec![a0.clone(), b.clone(), nr1.clone()];
            v.extend(extra);
            prod(v)
        };
        let base_g = |extra: Vec<Expr>| {
            let mut v = vec![ag.clone(), b.clone(), nr1.clone()];
            v.extend(extra);
            prod(v)
        };
        let ip5 = k.inv_phase(5);

        let l5 = vec![
            base0(vec![
                k.chi(Region::H11, 5),
                k.not(Region::R1, 5),
                k.not(Region::R3, 5),
                ip5.clone(),
            ])
            .scale(c(4)),
            base0(vec![
                nr(Inner::H11),
                k.not(Region::H11, 5),
                k.chi(Region::A2, 5),
                ip5.clone(),
            ])
            .scale(c(4)),
            base_g(vec![nr(Inner::H12), ip5.clone()]).scale(c(2)),
            base_g(vec![nr(Inner::H21), k.chi(Region::A1, 5), ip5.clone()]).scale(c(4)),
            base_g(vec![nr(Inner::H22), k.chi(Region::A3, 5), ip5.clone()]).scale(c(4)),
            base_g(vec![nr(Inner::H23), k.chi(Region::A1, 5), ip5.clone()]).scale(c(2)),
        ];
        let l5_tilde: Vec<Expr> = l5.iter().map(Expr::sym).collect();
        let s5 = sum(l5_tilde
            .iter()
            .map(|e| prod(vec![e.clone(), k.gt(5)]))
            .collect());

        let m3 = vec![q2.clone()];

        let pair = |left: &Expr, w: i64, right: &Expr, second: bool, target: usize| {
            let (e1, e2) = if second {
                (ExtKind::Ext12, ExtKind::Ext22)
            } else {
                (ExtKind::Ext11, ExtKind::Ext21)
            };
            prod(vec![
                ext(&left.scale(c(w)), e1, target),
                ext(right, e2, target),
            ])
        };
        let s235 = pick3(&[2, 3, 5]);
        let s46 = pick3(&[4, 6]);
        let diff_phase = sum(vec![
            prod(vec![sq1.clone(), k.inv_phase(3)]),
            prod(vec![sq1.clone(), k.inv_phase0(3)]).neg(),
        ]);
        let m5 = vec![
            Expr::constant(5, k.three_eighths_l1()).unwrap(),
            pair(&s3, 2, &q2, false, 5),
            pair(&s3, 1, &q2, true, 5).neg(),
            pair(&s235, 2, &q1, false, 5),
            pair(&s235, 1, &q1, true, 5).neg(),
            pair(&s46, 2, &q1, false, 5),
            pair(&s46, 1, &q1, true, 5).neg(),
            base0(vec![k.chi(Region::H11, 5), k.chi(Region::R1, 5)]).scale(c(4)),
            base0(vec![
                k.chi(Region::H11, 5),
                k.not(Region::R1, 5),
                k.chi(Region::R3, 5),
            ])
            .scale(c(4)),
            base0(vec![
                nr(Inner::H11),
                k.not(Region::H11, 5),
                k.not(Region::A2, 5),
            ])
            .scale(c(4)),
            prod(vec![
                ext(&prod(vec![diff_phase, k.gt(3)]), ExtKind::Ext11, 5),
                b.clone(),
                nr1.clone(),
                nr(Inner::H11),
            ])
            .scale(c(4)),
            prod(vec![
                ext(
                    &prod(vec![sq1.clone(), k.inv_phase0(3), k.le(3)]).neg(),
                    ExtKind::Ext11,
                    5,
                ),
                b.clone(),
                nr1.clone(),
                nr(Inner::H11),
            ])
            .scale(c(4)),
            base_g(vec![nr(Inner::H21), k.not(Region::A1, 5)]).scale(c(4)),
            base_g(vec![nr(Inner::H22), k.not(Region::A3, 5)]).scale(c(4)),
            base_g(vec![nr(Inner::H23), k.not(Region::A1, 5)]).scale(c(2)),
            base_g(vec![sum(vec![
                nr_sw(Inner::H21).scale(c(2)),
                nr_sw(Inner::H22).scale(c(2)),
                nr_sw(Inner::H23),
            ])])
            .scale(c(2)),
            base_g(vec![sum(vec![
                nr_sw(Inner::H11).scale(c(2)),
                nr_sw(Inner::H12),
            ])])
            .scale(c(2)),
            pair(
                &l3_cut[0],
                2,
                &prod(vec![q1.clone(), k.chi(Region::H3, 3)]),
                false,
                5,
            ),
            pair(&l3_cut[0], 1, &q1, true, 5).neg(),
        ];

        let tl = k.three_eighths_l1();
        let m7 = vec![
            ext(&s3.scale(c(2)), ExtKind::Ext11, 7).scale(tl),
            ext(&s3, ExtKind::Ext12, 7).scale(-tl),
            pair(&s5, 3, &q2, false, 7),
            pair(&s5, 2, &q2, true, 7).neg(),
            pair(&s5, 3, &q1, false, 7),
            pair(&s5, 2, &q1, true, 7).neg(),
        ];
        let m9 = vec![
            ext(&s5.scale(c(3)), ExtKind::Ext11, 9).scale(tl),
            ext(&s5.scale(c(2)), ExtKind::Ext12, 9).scale(-tl),
        ];

        Catalog {
            params: *params,
            cutoff,
            l3,
            l5,
            l3_tilde,
            l5_tilde,
            m3,
            m5,
            m7,
            m9,
        }
    }

    fn lookup<'a>(v: &'a [Expr], n: usize, j: usize, what: &str) -> Result<&'a Expr> {
        v.get(j.wrapping_sub(1))
            .ok_or_else(|| Error::Usage(format!("no catalog entry {what}({n},{j})")))
    }

    /// Unsymmetrized L multiplier at arity `2n + 1`.
    pub fn l(&self, n: usize, j: usize) -> Result<&Expr> {
        match n {
            1 => Catalog::lookup(&self.l3, n, j, "L"),
            2 => Catalog::lookup(&self.l5, n, j, "L"),
            _ => Err(Error::Usage(format!("no catalog entry L({n},{j})"))),
        }
    }

    /// Symmetrized L multiplier.
    pub fn l_tilde(&self, n: usize, j: usize) -> Result<&Expr> {
        match n {
            1 => Catalog::lookup(&self.l3_tilde, n, j, "L"),
            2 => Catalog::lookup(&self.l5_tilde, n, j, "L"),
            _ => Err(Error::Usage(format!("no catalog entry L({n},{j})"))),
        }
    }

    /// Unsymmetrized M multiplier.
    pub fn m(&self, n: usize, j: usize) -> Result<&Expr> {
        let v = match n {
            1 => &self.m3,
            2 => &self.m5,
            3 => &self.m7,
            4 => &self.m9,
            _ => return Err(Error::Usage(format!("no catalog entry M({n},{j})"))),
        };
        Catalog::lookup(v, n, j, "M")
    }
}

/// One L multiplier by index.
pub fn build_l(p: &EquationParams, n: usize, j: usize, cutoff: f64) -> Result<Expr> {
    Catalog::new(p, cutoff).l(n, j).cloned()
}

/// One M multiplier by index.
pub fn build_m(p: &EquationParams, n: usize, j: usize, cutoff: f64) -> Result<Expr> {
    Catalog::new(p, cutoff).m(n, j).cloned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::PhaseContext;
    use crate::scalar::Rational;

    fn params() -> EquationParams {
        EquationParams::integrable(Coef::int(1))
    }

    #[test]
    fn index_ranges() {
        let cat = Catalog::new(&params(), 4.0);
        for (n, cnt) in L_INDEX {
            assert!(cat.l(n, cnt).is_ok());
            assert!(cat.l(n, cnt + 1).is_err());
            assert_eq!(cat.l(n, 1).unwrap().arity(), 2 * n + 1);
        }
        for (n, cnt) in M_INDEX {
            assert!(cat.m(n, cnt).is_ok());
            assert!(cat.m(n, cnt + 1).is_err());
            assert!(cat.m(n, 0).is_err());
            assert_eq!(cat.m(n, cnt).unwrap().arity(), 2 * n + 1);
        }
        assert!(cat.m(5, 1).is_err());
        assert!(cat.l(3, 1).is_err());
    }

    #[test]
    fn quintic_constant() {
        let m = build_m(&params(), 2, 1, 4.0).unwrap();
        let v = m
            .eval_exact(&[1, 2, 3, 4, 5], &PhaseContext::zero())
            .unwrap();
        // lambda1 = 4 for the integrable family at lambda4 = 1
        assert_eq!(v, Rational::new(3, 2));
    }

    #[test]
    fn indicator_kills_l12() {
        let m = build_l(&params(), 1, 2, 4.0).unwrap();
        let ctx = PhaseContext::zero();
        // |k2| = 5 is not above 16 max(|k1|, |k3|)
        assert!(m.eval_exact(&[1, 5, 2], &ctx).unwrap().is_zero());
        assert!(!m.eval_exact(&[1, 50, 2], &ctx).unwrap().is_zero());
    }

    #[test]
    fn resonant_quintic_term_loses_a_derivative() {
        let m8 = build_m(&params(), 2, 8, 4.0).unwrap();
        let ctx = PhaseContext::rational(1, 3);
        let vals: Vec<(f64, f64)> = [2_000i64, 10_000, 100_000, 1_000_000]
            .iter()
            .map(|&k5| (k5 as f64, m8.eval_f64(&[1, 0, 3, 4, k5], &ctx).abs()))
            .collect();
        for w in vals.windows(2) {
            let slope = (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln();
            assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
        }
        // zero off the resonant hyperplane and inside the low box
        assert_eq!(m8.eval_f64(&[1, 0, 4, 3, 5000], &ctx), 0.0);
        assert_eq!(m8.eval_f64(&[1, 0, 3, 4, 200], &ctx), 0.0);
    }

    #[test]
    fn lambda1_zero_kills_constant_terms() {
        let mut p = params();
        p.lambda1 = Coef::ZERO;
        let cat = Catalog::new(&p, 1.0);
        let ctx = PhaseContext::zero();
        let k9 = [40, 1, 2, 3, 4, 5, 6, 7, 8];
        assert!(cat
            .m(2, 1)
            .unwrap()
            .eval_exact(&k9[..5], &ctx)
            .unwrap()
            .is_zero());
        for j in 1..=2 {
            assert!(cat
                .m(3, j)
                .unwrap()
                .eval_exact(&k9[..7], &ctx)
                .unwrap()
                .is_zero());
            assert!(cat
                .m(4, j)
                .unwrap()
                .eval_exact(&k9, &ctx)
                .unwrap()
                .is_zero());
        }
    }
}
