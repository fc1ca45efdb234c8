//! Immutable multiplier trees and their pointwise evaluation.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::conserved::EquationParams;
use crate::error::{Error, Result};
use crate::phase::{phase_parts, phase_parts_big, PhaseContext};
use crate::scalar::{Coef, Rational, Scalar};
use crate::tuple::{alternating, MAX_ARITY};

use super::region::{eval_unchecked, Region};

/// The four extension operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtKind {
    /// Keeps the leading slots and merges the tail into the last one.
    Ext11,
    /// Merges a middle block into the last conjugated slot.
    Ext12,
    /// Reads the last three slots.
    Ext21,
    /// Reads (k_{2N}, k_{2N+3}, k_{2N+2}).
    Ext22,
}

impl ExtKind {
    pub fn is_first(self) -> bool {
        matches!(self, ExtKind::Ext11 | ExtKind::Ext12)
    }

    /// Whether a (child, target) arity pair is a valid signature.
    pub fn allows(self, child: usize, target: usize) -> bool {
        if !matches!(child, 3 | 5 | 7) || !matches!(target, 5 | 7 | 9) {
            return false;
        }
        if self.is_first() {
            target == child + 2 || target == child + 4
        } else {
            child == 3
        }
    }

    /// Writes the child tuple into `out` and returns its length.
    pub(crate) fn pull_back(self, k: &[i64], child: usize, out: &mut [i64; MAX_ARITY]) -> usize {
        let n = k.len();
        match self {
            ExtKind::Ext11 => {
                out[..child - 1].copy_from_slice(&k[..child - 1]);
                out[child - 1] = alternating(&k[child - 1..]);
            }
            ExtKind::Ext12 => {
                let c = child;
                out[..c - 2].copy_from_slice(&k[..c - 2]);
                // k_{2N} - k_{2N+3} + k_{2N+2} (- k_{2N+5} + k_{2N+4})
                let mut m = k[c - 2];
                let mut j = c;
                while j + 1 < n {
                    m += k[j] - k[j + 1];
                    j += 2;
                }
                out[c - 2] = m;
                out[c - 1] = k[c - 1];
            }
            ExtKind::Ext21 => out[..3].copy_from_slice(&k[n - 3..]),
            ExtKind::Ext22 => {
                out[0] = k[n - 4];
                out[1] = k[n - 1];
                out[2] = k[n - 2];
            }
        }
        child
    }
}

impl fmt::Display for ExtKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExtKind::Ext11 => "ext1_1",
            ExtKind::Ext12 => "ext1_2",
            ExtKind::Ext21 => "ext2_1",
            ExtKind::Ext22 => "ext2_2",
        })
    }
}

/// Coefficients baked into the cubic base symbols.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QCoefs {
    pub l2: Coef,
    pub l3: Coef,
    pub l4: Coef,
    pub l5: Coef,
}

impl QCoefs {
    pub fn from_params(p: &EquationParams) -> Self {
        QCoefs {
            l2: p.lambda2,
            l3: p.lambda3,
            l4: p.lambda4,
            l5: p.lambda5,
        }
    }

    fn mean(&self) -> Coef {
        Coef::int(2) * self.l4 + self.l5 - self.l3
    }

    fn is_exact(&self) -> bool {
        [self.l2, self.l3, self.l4, self.l5]
            .iter()
            .all(Coef::is_exact)
    }

    fn q1<S: Scalar>(&self, k1: i64, k2: i64, k3: i64) -> S {
        let (a, b, c) = (k1 as i128, k2 as i128, k3 as i128);
        // 2 q1 = 2 l2 a c - l3 (a + c) b + 2 l4 b^2 + l5 (a^2 + c^2)
        let twice = S::from_coef(&self.l2)
            .mul(&S::from_int(2 * a * c))
            .sub(&S::from_coef(&self.l3).mul(&S::from_int((a + c) * b)))
            .add(&S::from_coef(&self.l4).mul(&S::from_int(2 * b * b)))
            .add(&S::from_coef(&self.l5).mul(&S::from_int(a * a + c * c)));
        twice.div_int(2)
    }

    fn q2<S: Scalar>(&self, k1: i64, k2: i64, k3: i64) -> S {
        let mut s = 0i128;
        if k1 == k2 {
            s += k1 as i128 * k1 as i128;
        }
        if k3 == k2 {
            s += k3 as i128 * k3 as i128;
        }
        if s == 0 {
            return S::zero();
        }
        S::from_coef(&self.mean()).mul(&S::from_int(s)).div_int(2)
    }
}

#[derive(Debug)]
pub enum Node {
    Const(Coef),
    /// k_j, counted from 1.
    Coord(usize),
    SmallQ1(QCoefs),
    SmallQ2(QCoefs),
    /// q1 restricted to the non-resonant set.
    Q1(QCoefs),
    /// q2 - q1 on the fully resonant diagonal.
    Q2(QCoefs),
    /// The phase, with or without the gamma k^2 part.
    Phase {
        with_gamma: bool,
    },
    /// 1 / child, or 0 where the child vanishes.
    Recip(Expr),
    /// Indicator, or its complement when `negate`.
    Chi {
        region: Region,
        negate: bool,
    },
    Product(Vec<Expr>),
    Sum(Vec<Expr>),
    Scale(Coef, Expr),
    Sym(Expr),
    Sym1(Expr),
    Ext(ExtKind, Expr),
}

#[derive(Debug)]
struct Inner {
    arity: usize,
    node: Node,
}

/// A shared, immutable multiplier tree.
#[derive(Clone, Debug)]
pub struct Expr(Arc<Inner>);

fn check_arity(arity: usize, what: &str) -> Result<()> {
    if matches!(arity, 3 | 5 | 7 | 9) {
        Ok(())
    } else {
        Err(Error::Arity {
            what: what.to_string(),
            got: arity,
        })
    }
}

impl Expr {
    fn make(arity: usize, node: Node) -> Expr {
        Expr(Arc::new(Inner { arity, node }))
    }

    pub fn arity(&self) -> usize {
        self.0.arity
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    /// Identity of the shared node, for caches.
    pub(crate) fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn constant(arity: usize, c: Coef) -> Result<Expr> {
        check_arity(arity, "constant multiplier")?;
        Ok(Expr::make(arity, Node::Const(c)))
    }

    pub fn one(arity: usize) -> Result<Expr> {
        Expr::constant(arity, Coef::int(1))
    }

    pub fn coord(arity: usize, j: usize) -> Result<Expr> {
        check_arity(arity, "coordinate")?;
        if j == 0 || j > arity {
            return Err(Error::Usage(format!("no slot k{j} at arity {arity}")));
        }
        Ok(Expr::make(arity, Node::Coord(j)))
    }

    pub fn small_q1(p: &EquationParams) -> Expr {
        Expr::make(3, Node::SmallQ1(QCoefs::from_params(p)))
    }

    pub fn small_q2(p: &EquationParams) -> Expr {
        Expr::make(3, Node::SmallQ2(QCoefs::from_params(p)))
    }

    pub fn q1(p: &EquationParams) -> Expr {
        Expr::make(3, Node::Q1(QCoefs::from_params(p)))
    }

    pub fn q2(p: &EquationParams) -> Expr {
        Expr::make(3, Node::Q2(QCoefs::from_params(p)))
    }

    pub fn phase(arity: usize, with_gamma: bool) -> Result<Expr> {
        check_arity(arity, "phase")?;
        Ok(Expr::make(arity, Node::Phase { with_gamma }))
    }

    pub fn recip(&self) -> Expr {
        Expr::make(self.arity(), Node::Recip(self.clone()))
    }

    pub fn chi(region: Region, arity: usize) -> Result<Expr> {
        if !region.accepts(arity) {
            return Err(Error::Arity {
                what: format!("region {region}"),
                got: arity,
            });
        }
        Ok(Expr::make(
            arity,
            Node::Chi {
                region,
                negate: false,
            },
        ))
    }

    /// 1 - chi.
    pub fn chi_not(region: Region, arity: usize) -> Result<Expr> {
        Expr::chi(region, arity)?;
        Ok(Expr::make(
            arity,
            Node::Chi {
                region,
                negate: true,
            },
        ))
    }

    fn same_arity(parts: &[Expr], what: &str) -> Result<usize> {
        let Some(first) = parts.first() else {
            return Err(Error::Usage(format!("empty {what}")));
        };
        let a = first.arity();
        if let Some(bad) = parts.iter().find(|e| e.arity() != a) {
            return Err(Error::Arity {
                what: format!("{what} of arity-{a} factors"),
                got: bad.arity(),
            });
        }
        Ok(a)
    }

    /// Product; nested products are flattened and indicators moved to the
    /// front so evaluation can stop at the first zero.
    pub fn product(parts: Vec<Expr>) -> Result<Expr> {
        let arity = Expr::same_arity(&parts, "product")?;
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match p.node() {
                Node::Product(inner) => flat.extend(inner.iter().cloned()),
                _ => flat.push(p),
            }
        }
        if flat.len() == 1 {
            return Ok(flat.pop().unwrap());
        }
        flat.sort_by_key(cost_rank);
        Ok(Expr::make(arity, Node::Product(flat)))
    }

    pub fn sum(parts: Vec<Expr>) -> Result<Expr> {
        let arity = Expr::same_arity(&parts, "sum")?;
        let mut parts = parts;
        if parts.len() == 1 {
            return Ok(parts.pop().unwrap());
        }
        Ok(Expr::make(arity, Node::Sum(parts)))
    }

    pub fn mul(&self, other: &Expr) -> Result<Expr> {
        Expr::product(vec![self.clone(), other.clone()])
    }

    pub fn scale(&self, c: Coef) -> Expr {
        Expr::make(self.arity(), Node::Scale(c, self.clone()))
    }

    pub fn neg(&self) -> Expr {
        self.scale(Coef::int(-1))
    }

    pub fn sym(&self) -> Expr {
        Expr::make(self.arity(), Node::Sym(self.clone()))
    }

    pub fn sym1(&self) -> Expr {
        Expr::make(self.arity(), Node::Sym1(self.clone()))
    }

    pub fn ext(&self, kind: ExtKind, target: usize) -> Result<Expr> {
        if !kind.allows(self.arity(), target) {
            return Err(Error::Usage(format!(
                "{kind} has no signature from arity {} to {target}",
                self.arity()
            )));
        }
        Ok(Expr::make(target, Node::Ext(kind, self.clone())))
    }

    /// True when every coefficient in the tree is rational.
    pub fn is_exact(&self) -> bool {
        match self.node() {
            Node::Const(c) | Node::Scale(c, _) if !c.is_exact() => false,
            Node::Const(_) | Node::Coord(_) | Node::Phase { .. } => true,
            Node::Chi { region, .. } => {
                !matches!(region, Region::LeL(l) | Region::GtL(l) if !l.is_finite())
            }
            Node::SmallQ1(q) | Node::SmallQ2(q) | Node::Q1(q) | Node::Q2(q) => q.is_exact(),
            Node::Product(v) | Node::Sum(v) => v.iter().all(Expr::is_exact),
            Node::Scale(_, e) | Node::Recip(e) | Node::Sym(e) | Node::Sym1(e) | Node::Ext(_, e) => {
                e.is_exact()
            }
        }
    }

    /// Checked evaluation.
    pub fn try_eval<S: Scalar>(&self, k: &[i64], ctx: &PhaseContext) -> Result<S> {
        if k.len() != self.arity() {
            return Err(Error::Arity {
                what: format!("tuple for an arity-{} multiplier", self.arity()),
                got: k.len(),
            });
        }
        Ok(self.eval(k, ctx))
    }

    /// Exact evaluation; needs rational coefficients and gamma.
    pub fn eval_exact(&self, k: &[i64], ctx: &PhaseContext) -> Result<Rational> {
        if !ctx.gamma.is_exact() {
            return Err(Error::NotExact("gamma"));
        }
        if !self.is_exact() {
            return Err(Error::NotExact("multiplier coefficient"));
        }
        self.try_eval(k, ctx)
    }

    pub fn eval_f64(&self, k: &[i64], ctx: &PhaseContext) -> f64 {
        self.eval(k, ctx)
    }

    /// Unchecked evaluation; `k.len()` must equal the arity.
    pub fn eval<S: Scalar>(&self, k: &[i64], ctx: &PhaseContext) -> S {
        debug_assert_eq!(k.len(), self.arity());
        match self.node() {
            Node::Const(c) => S::from_coef(c),
            Node::Coord(j) => S::from_int(k[j - 1] as i128),
            Node::SmallQ1(q) => q.q1(k[0], k[1], k[2]),
            Node::SmallQ2(q) => q.q2(k[0], k[1], k[2]),
            Node::Q1(q) => {
                if k[0] == k[1] || k[2] == k[1] {
                    S::zero()
                } else {
                    q.q1(k[0], k[1], k[2])
                }
            }
            Node::Q2(q) => {
                let v: S = q.q2(k[0], k[1], k[2]);
                if k[0] == k[1] && k[1] == k[2] {
                    v.sub(&q.q1(k[0], k[1], k[2]))
                } else {
                    v
                }
            }
            Node::Phase { with_gamma } => phase_value(k, with_gamma.then_some(&ctx.gamma)),
            Node::Recip(e) => {
                let v: S = e.eval(k, ctx);
                if v.is_zero() {
                    S::zero()
                } else {
                    v.recip()
                }
            }
            Node::Chi { region, negate } => {
                let v = eval_unchecked(region, k) as i128;
                S::from_int(if *negate { 1 - v } else { v })
            }
            Node::Product(parts) => {
                let mut acc: Option<S> = None;
                for p in parts {
                    let v: S = p.eval(k, ctx);
                    if v.is_zero() {
                        return S::zero();
                    }
                    acc = Some(match acc {
                        None => v,
                        Some(a) => a.mul(&v),
                    });
                }
                acc.unwrap_or_else(S::zero)
            }
            Node::Sum(parts) => parts
                .iter()
                .fold(S::zero(), |a, p| a.add(&p.eval::<S>(k, ctx))),
            Node::Scale(c, e) => {
                let v: S = e.eval(k, ctx);
                if v.is_zero() {
                    v
                } else {
                    S::from_coef(c).mul(&v)
                }
            }
            Node::Sym(e) => average(e, k, ctx, perms(k.len(), true)),
            Node::Sym1(e) => average(e, k, ctx, perms(k.len(), false)),
            Node::Ext(kind, e) => {
                let mut buf = [0i64; MAX_ARITY];
                let c = kind.pull_back(k, e.arity(), &mut buf);
                e.eval(&buf[..c], ctx)
            }
        }
    }
}

/// Cheap and selective factors first.
fn cost_rank(e: &Expr) -> (u8, u8) {
    match e.node() {
        Node::Chi { region, .. } => (0, region.selectivity()),
        Node::Const(_) | Node::Coord(_) => (1, 0),
        Node::Q1(_) | Node::Q2(_) | Node::SmallQ1(_) | Node::SmallQ2(_) => (2, 0),
        Node::Phase { .. } | Node::Recip(_) => (3, 0),
        Node::Ext(_, _) | Node::Scale(_, _) => (4, 0),
        Node::Sum(_) | Node::Product(_) => (5, 0),
        Node::Sym(_) | Node::Sym1(_) => (6, 0),
    }
}

fn phase_value<S: Scalar>(k: &[i64], gamma: Option<&Coef>) -> S {
    let small = k.iter().all(|x| x.unsigned_abs() <= 1 << 27);
    let zero = Coef::ZERO;
    let g = gamma.unwrap_or(&zero);
    if small {
        let (a, b) = phase_parts(k);
        return S::affine(a, b, g);
    }
    let (a, b) = phase_parts_big(k);
    match g.exact() {
        Some(r) => {
            use num_rational::BigRational;
            let g = BigRational::new((*r.numer()).into(), (*r.denom()).into());
            S::from_rational(&Rational::from_big(
                BigRational::from_integer(a) + BigRational::from_integer(b) * g,
            ))
        }
        None => {
            use num_traits::ToPrimitive;
            let v = a.to_f64().unwrap_or(f64::NAN) + g.value() * b.to_f64().unwrap_or(f64::NAN);
            S::from_rational(&Rational::from_big(
                num_rational::BigRational::from_float(v).unwrap_or_default(),
            ))
        }
    }
}

fn average<S: Scalar>(e: &Expr, k: &[i64], ctx: &PhaseContext, table: &[Vec<u8>]) -> S {
    let mut buf = [0i64; MAX_ARITY];
    let n = k.len();
    let mut acc = S::zero();
    for p in table {
        for (i, &src) in p.iter().enumerate() {
            buf[i] = k[src as usize];
        }
        acc = acc.add(&e.eval::<S>(&buf[..n], ctx));
    }
    acc.div_int(table.len() as i64)
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Slot maps for the odd-slot group, optionally times the even-slot group.
pub(crate) fn perms(arity: usize, with_even: bool) -> &'static [Vec<u8>] {
    static TABLES: OnceLock<HashMap<(usize, bool), Vec<Vec<u8>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        let mut m = HashMap::new();
        for n in [3usize, 5, 7, 9] {
            let odd: Vec<u8> = (0..n as u8).step_by(2).collect();
            let even: Vec<u8> = (1..n as u8).step_by(2).collect();
            let po = permutations(&odd);
            let pe = permutations(&even);
            let place = |o: &[u8], e: &[u8]| -> Vec<u8> {
                (0..n)
                    .map(|i| if i % 2 == 0 { o[i / 2] } else { e[i / 2] })
                    .collect()
            };
            m.insert((n, false), po.iter().map(|o| place(o, &even)).collect());
            let mut full = Vec::with_capacity(po.len() * pe.len());
            for o in &po {
                for e in &pe {
                    full.push(place(o, e));
                }
            }
            m.insert((n, true), full);
        }
        m
    });
    &tables[&(arity, with_even)]
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, v: &[Expr], sep: &str| -> fmt::Result {
            write!(f, "(")?;
            for (i, e) in v.iter().enumerate() {
                if i > 0 {
                    write!(f, "{sep}")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, ")")
        };
        match self.node() {
            Node::Const(c) => write!(f, "{c}"),
            Node::Coord(j) => write!(f, "k{j}"),
            Node::SmallQ1(_) => write!(f, "q1"),
            Node::SmallQ2(_) => write!(f, "q2"),
            Node::Q1(_) => write!(f, "Q1"),
            Node::Q2(_) => write!(f, "Q2"),
            Node::Phase { with_gamma: true } => write!(f, "Phi{}", self.arity()),
            Node::Phase { with_gamma: false } => write!(f, "Phi0_{}", self.arity()),
            Node::Recip(e) => write!(f, "1/{e}"),
            Node::Chi { region, negate } => {
                if *negate {
                    write!(f, "(1-chi[{region}])")
                } else {
                    write!(f, "chi[{region}]")
                }
            }
            Node::Product(v) => list(f, v, "*"),
            Node::Sum(v) => list(f, v, " + "),
            Node::Scale(c, e) => write!(f, "{c}*{e}"),
            Node::Sym(e) => write!(f, "[{e}]sym"),
            Node::Sym1(e) => write!(f, "[{e}]sym1"),
            Node::Ext(kind, e) => write!(f, "[{e}]{kind}^{}", self.arity()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tuple::for_each_in_box;
    use proptest::prelude::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn ex(e: &Expr, k: &[i64]) -> Rational {
        e.eval_exact(k, &PhaseContext::rational(-3, 2)).unwrap()
    }

    #[test]
    fn sym1_of_coordinate() {
        let m = Expr::coord(3, 1).unwrap().sym1();
        assert_eq!(ex(&m, &[4, 9, 7]), r(11, 2));
        assert_eq!(ex(&m, &[-1, 0, 2]), r(1, 2));
    }

    #[test]
    fn sym1_of_indicator() {
        let m = Expr::chi(Region::H11, 3).unwrap().sym1();
        assert_eq!(ex(&m, &[100, 1, 1]), r(1, 2));
    }

    #[test]
    fn group_sizes() {
        assert_eq!(perms(5, true).len(), 12);
        assert_eq!(perms(7, true).len(), 144);
        assert_eq!(perms(9, true).len(), 2880);
        assert_eq!(perms(9, false).len(), 120);
        for p in perms(7, true) {
            assert!(p.iter().enumerate().all(|(i, s)| i % 2 == *s as usize % 2));
        }
    }

    #[test]
    fn extension_examples() {
        let p = EquationParams::integrable(Coef::int(1));
        let ctx = PhaseContext::zero();
        let c = Expr::constant(3, Coef::ratio(5, 3)).unwrap();
        assert_eq!(
            ex(&c.ext(ExtKind::Ext11, 5).unwrap(), &[1, 2, 3, 4, 5]),
            r(5, 3)
        );
        let q = Expr::small_q1(&p);
        let lifted = q.ext(ExtKind::Ext21, 5).unwrap();
        assert_eq!(
            lifted.eval_exact(&[0, 0, 1, 2, 3], &ctx).unwrap(),
            q.eval_exact(&[1, 2, 3], &ctx).unwrap()
        );
        let k3 = Expr::coord(3, 3).unwrap().ext(ExtKind::Ext11, 5).unwrap();
        assert_eq!(ex(&k3, &[1, 2, 3, 4, 5]), r(3 - 4 + 5, 1));
        let k2 = Expr::coord(3, 2).unwrap().ext(ExtKind::Ext12, 5).unwrap();
        assert_eq!(ex(&k2, &[1, 2, 3, 4, 5]), r(2 - 5 + 4, 1));
        let e22 = Expr::coord(3, 2).unwrap().ext(ExtKind::Ext22, 7).unwrap();
        assert_eq!(ex(&e22, &[1, 2, 3, 4, 5, 6, 7]), r(7, 1));
        let four = Expr::coord(5, 4).unwrap().ext(ExtKind::Ext12, 9).unwrap();
        // k4 - k7 + k6 - k9 + k8
        assert_eq!(
            ex(&four, &[1, 2, 3, 4, 5, 6, 7, 8, 9]),
            r(4 - 7 + 6 - 9 + 8, 1)
        );
        assert!(q.ext(ExtKind::Ext21, 3).is_err());
        assert!(Expr::one(5).unwrap().ext(ExtKind::Ext21, 7).is_err());
    }

    #[test]
    fn base_symbols() {
        let p = EquationParams::integrable(Coef::int(1));
        let ctx = PhaseContext::zero();
        assert_eq!(Expr::q1(&p).eval_exact(&[1, 0, 1], &ctx).unwrap(), r(7, 1));
        assert_eq!(Expr::q1(&p).eval_exact(&[4, 4, 4], &ctx).unwrap(), r(0, 1));
        let guard = Expr::phase(3, true).unwrap().recip();
        assert_eq!(guard.eval_exact(&[3, 3, 8], &ctx).unwrap(), r(0, 1));
    }

    #[test]
    fn leaf_symbols_match_their_definitions() {
        let p = EquationParams::from_ints([1, 2, -3, 5, 7]);
        let q1 = Expr::small_q1(&p);
        let nr1 = Expr::chi(Region::NR1, 3).unwrap();
        let r1 = Expr::chi(Region::R1, 3).unwrap();
        let r2 = Expr::chi(Region::R2, 3).unwrap();
        let k1 = Expr::coord(3, 1).unwrap();
        let q2_def = Expr::product(vec![k1.clone(), k1, r1])
            .unwrap()
            .sym1()
            .scale(p.mean_coupling());
        let big_q1 = q1.mul(&nr1).unwrap();
        let big_q2 = Expr::sum(vec![q2_def.clone(), q1.mul(&r2).unwrap().neg()]).unwrap();
        for_each_in_box(&[6, 6, 6], |k| {
            assert_eq!(ex(&Expr::small_q2(&p), k), ex(&q2_def, k));
            assert_eq!(ex(&Expr::q1(&p), k), ex(&big_q1, k));
            assert_eq!(ex(&Expr::q2(&p), k), ex(&big_q2, k));
        });
    }

    #[test]
    fn phase_node_matches_phase_module() {
        let ctx = PhaseContext::rational(7, 3);
        let ph = Expr::phase(5, true).unwrap();
        let t = crate::tuple::FrequencyTuple::new(&[3, -1, 4, 1, -5]).unwrap();
        assert_eq!(ex(&ph, t.entries()).to_f64(), {
            crate::phase::phase_exact(&t, &PhaseContext::rational(-3, 2))
                .unwrap()
                .to_f64()
        });
        let big = [1i64 << 40, 1, 1 << 39];
        let exact = ph_exact_big(&big, &ctx);
        let got = Expr::phase(3, true)
            .unwrap()
            .eval_exact(&big, &ctx)
            .unwrap();
        assert_eq!(got, exact);
    }

    fn ph_exact_big(k: &[i64], ctx: &PhaseContext) -> Rational {
        crate::phase::phase_exact(&crate::tuple::FrequencyTuple::new(k).unwrap(), ctx).unwrap()
    }

    #[test]
    fn arity_errors() {
        let a = Expr::one(3).unwrap();
        let b = Expr::one(5).unwrap();
        assert!(a.mul(&b).is_err());
        assert!(Expr::one(4).is_err());
        assert!(Expr::chi(Region::R3, 3).is_err());
        assert!(a.try_eval::<f64>(&[1, 2], &PhaseContext::zero()).is_err());
        let p = EquationParams::from_ints([0; 5]);
        let float = Expr::q1(&EquationParams {
            lambda2: Coef::real(0.1),
            ..p
        });
        assert!(float.eval_exact(&[1, 2, 3], &PhaseContext::zero()).is_err());
    }

    fn leaf() -> impl Strategy<Value = Expr> {
        let p = EquationParams::from_ints([1, 3, 2, 1, 4]);
        prop_oneof![
            (1usize..=3).prop_map(|j| Expr::coord(3, j).unwrap()),
            (-3i64..=3).prop_map(|c| Expr::constant(3, Coef::int(c)).unwrap()),
            Just(Expr::chi(Region::H11, 3).unwrap()),
            Just(Expr::chi(Region::NR1, 3).unwrap()),
            Just(Expr::chi_not(Region::R1, 3).unwrap()),
            Just(Expr::q1(&p)),
            Just(Expr::phase(3, true).unwrap().recip()),
        ]
    }

    fn tree() -> impl Strategy<Value = Expr> {
        leaf().prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..3).prop_map(|v| Expr::product(v).unwrap()),
                prop::collection::vec(inner.clone(), 2..3).prop_map(|v| Expr::sum(v).unwrap()),
                inner.clone().prop_map(|e| e.sym1()),
            ]
        })
    }

    proptest! {
        #[test]
        fn sym_is_idempotent(m in tree(), k in prop::array::uniform3(-10i64..=10)) {
            let s = m.sym();
            prop_assert_eq!(ex(&s.sym(), &k), ex(&s, &k));
            let s1 = m.sym1();
            prop_assert_eq!(ex(&s1.sym1(), &k), ex(&s1, &k));
        }

        #[test]
        fn extensions_are_multiplicative(
            a in tree(),
            b in tree(),
            k in prop::array::uniform5(-10i64..=10),
            kind in prop_oneof![Just(ExtKind::Ext11), Just(ExtKind::Ext12),
                                Just(ExtKind::Ext21), Just(ExtKind::Ext22)],
        ) {
            let whole = a.mul(&b).unwrap().ext(kind, 5).unwrap();
            let split = a.ext(kind, 5).unwrap().mul(&b.ext(kind, 5).unwrap()).unwrap();
            prop_assert_eq!(ex(&whole, &k), ex(&split, &k));
        }
    }
}
