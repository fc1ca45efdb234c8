//! The multilinear operator Λ: sums of phase-modulated multiplier-weighted
//! products over all tuples with a given alternating sum.
//!
//! [`lambda_eval`] is the direct summation. [`LambdaPlan`] tabulates a
//! multiplier once and splits extension products into nested lower-arity
//! sums, which is what makes arity 7 and 9 tractable.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::par;
use crate::phase::{phase_parts, reduced_angle, PhaseContext};
use crate::scalar::Coef;
use crate::spectral::{SpectralField, C64};
use crate::tuple::MAX_ARITY;

use super::expr::{Expr, ExtKind, Node};

fn check_inputs(m: &Expr, inputs: &[&SpectralField]) -> Result<()> {
    if inputs.len() != m.arity() {
        return Err(Error::Arity {
            what: format!("Λ of an arity-{} multiplier", m.arity()),
            got: inputs.len(),
        });
    }
    Ok(())
}

fn common_radius(inputs: &[&SpectralField]) -> Result<usize> {
    let r = inputs.first().map(|f| f.radius()).unwrap_or(0);
    if let Some(f) = inputs.iter().find(|f| f.radius() != r) {
        return Err(Error::RadiusMismatch(r, f.radius()));
    }
    Ok(r)
}

#[inline]
fn slot_coef(f: &SpectralField, k: i64, conj: bool) -> C64 {
    let c = f.get(k);
    if conj {
        c.conj()
    } else {
        c
    }
}

#[inline]
fn rotor(t: f64, k: &[i64], gamma: f64) -> C64 {
    if t == 0.0 {
        return C64::new(1.0, 0.0);
    }
    let (q4, q2) = phase_parts(k);
    let a = reduced_angle(t, q4, q2, gamma);
    C64::new(a.cos(), -a.sin())
}

/// Direct summation with output radius equal to the shared input radius.
pub fn lambda_eval(
    m: &Expr,
    inputs: &[&SpectralField],
    t: f64,
    ctx: &PhaseContext,
) -> Result<SpectralField> {
    check_inputs(m, inputs)?;
    let r = common_radius(inputs)?;
    lambda_eval_radius(m, inputs, t, ctx, r)
}

/// Direct summation; inputs may have different radii.
pub fn lambda_eval_radius(
    m: &Expr,
    inputs: &[&SpectralField],
    t: f64,
    ctx: &PhaseContext,
    out: usize,
) -> Result<SpectralField> {
    check_inputs(m, inputs)?;
    let n = m.arity();
    let gamma = ctx.gamma.value();
    let o = out as i64;
    let coeffs = par::map_range(-o, o, |k| {
        let mut buf = [0i64; MAX_ARITY];
        let mut acc = C64::zero();
        brute_rec(
            m,
            inputs,
            n,
            0,
            k,
            0,
            C64::new(1.0, 0.0),
            &mut buf,
            t,
            gamma,
            ctx,
            &mut acc,
        );
        acc
    });
    // non-finite sums are kept as they are
    let mut f = SpectralField::zeros(out);
    f.coeffs_mut().copy_from_slice(&coeffs);
    Ok(f)
}

#[allow(clippy::too_many_arguments)]
fn brute_rec(
    m: &Expr,
    inputs: &[&SpectralField],
    n: usize,
    slot: usize,
    k_out: i64,
    alt: i64,
    prod: C64,
    buf: &mut [i64; MAX_ARITY],
    t: f64,
    gamma: f64,
    ctx: &PhaseContext,
    acc: &mut C64,
) {
    let f = inputs[slot];
    let r = f.radius() as i64;
    let conj = slot % 2 == 1;
    if slot == n - 1 {
        let last = k_out - alt;
        if last.abs() > r {
            return;
        }
        let c = slot_coef(f, last, conj);
        if c.is_zero() {
            return;
        }
        buf[slot] = last;
        let mv: f64 = m.eval(&buf[..n], ctx);
        if mv == 0.0 {
            return;
        }
        *acc += prod * c * mv * rotor(t, &buf[..n], gamma);
        return;
    }
    for x in -r..=r {
        let c = slot_coef(f, x, conj);
        if c.is_zero() {
            continue;
        }
        buf[slot] = x;
        let next = if slot % 2 == 0 { alt + x } else { alt - x };
        brute_rec(
            m,
            inputs,
            n,
            slot + 1,
            k_out,
            next,
            prod * c,
            buf,
            t,
            gamma,
            ctx,
            acc,
        );
    }
}

/// Tabulated tuples with a non-zero multiplier, grouped by output frequency.
#[derive(Debug, Default)]
struct Rows {
    ks: Vec<i32>,
    m: Vec<f64>,
    q: Vec<(i128, i128)>,
}

#[derive(Debug)]
struct Table {
    rows: Vec<Rows>,
}

#[derive(Clone, Copy, Debug)]
enum Src {
    Input(usize),
    Aux,
}

#[derive(Debug)]
enum Plan {
    Table(Table),
    Nested {
        outer: Arc<LambdaPlan>,
        inner: Arc<LambdaPlan>,
        inner_slots: Vec<usize>,
        outer_src: Vec<Src>,
    },
    Sum(Vec<Arc<LambdaPlan>>),
    Scaled(f64, Arc<LambdaPlan>),
}

/// A precomputed evaluation strategy for one multiplier, input radii and
/// output radius.
#[derive(Debug)]
pub struct LambdaPlan {
    arity: usize,
    radii: Vec<usize>,
    out: usize,
    gamma: f64,
    plan: Plan,
}

/// Results shared between plans evaluated on the same inputs.
#[derive(Default)]
pub struct Memo(HashMap<(usize, Vec<usize>), Arc<SpectralField>>);

type Key = (usize, Vec<usize>, usize, u64);

fn cache() -> &'static Mutex<HashMap<Key, (Expr, Arc<LambdaPlan>)>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, (Expr, Arc<LambdaPlan>)>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Drops every cached plan.
pub fn clear_plan_cache() {
    cache().lock().unwrap().clear();
}

fn unit(arity: usize) -> Expr {
    static ONES: OnceLock<Vec<Expr>> = OnceLock::new();
    let ones = ONES.get_or_init(|| {
        [3, 5, 7, 9]
            .iter()
            .map(|&n| Expr::one(n).unwrap())
            .collect()
    });
    ones[(arity - 3) / 2].clone()
}

/// The parts of an extension product `c [m1]_{ext1} [m2]_{ext2}`.
struct Split {
    second: bool,
    m1: Expr,
    m2: Expr,
    factor: Coef,
}

fn split(m: &Expr) -> Option<Split> {
    let n = m.arity();
    if n < 5 {
        return None;
    }
    let mut factor = Coef::int(1);
    let mut firsts: Vec<(ExtKind, Expr)> = Vec::new();
    let mut seconds: Vec<(ExtKind, Expr)> = Vec::new();
    let parts: Vec<Expr> = match m.node() {
        Node::Product(v) => v.clone(),
        _ => vec![m.clone()],
    };
    for p in parts {
        let mut e = p;
        while let Node::Scale(c, inner) = e.node() {
            factor = factor * *c;
            e = inner.clone();
        }
        match e.node() {
            Node::Const(c) => factor = factor * *c,
            Node::Ext(kind, child) if kind.is_first() => firsts.push((*kind, child.clone())),
            Node::Ext(kind, child) => seconds.push((*kind, child.clone())),
            _ => return None,
        }
    }
    let kinds_first: Vec<ExtKind> = firsts.iter().map(|(k, _)| *k).collect();
    let kinds_second: Vec<ExtKind> = seconds.iter().map(|(k, _)| *k).collect();
    let second = match (kinds_first.first(), kinds_second.first()) {
        (Some(k), _) => *k == ExtKind::Ext12,
        (None, Some(k)) => *k == ExtKind::Ext22,
        // a bare constant: peel off a cubic factor
        (None, None) => false,
    };
    let (want1, want2) = if second {
        (ExtKind::Ext12, ExtKind::Ext22)
    } else {
        (ExtKind::Ext11, ExtKind::Ext21)
    };
    if kinds_first.iter().any(|k| *k != want1) || kinds_second.iter().any(|k| *k != want2) {
        return None;
    }
    let c = match firsts.first() {
        Some((_, e)) => e.arity(),
        None if !seconds.is_empty() => n - 2,
        None => 3,
    };
    if firsts.iter().any(|(_, e)| e.arity() != c) {
        return None;
    }
    let inner_arity = n - c + 1;
    if !seconds.is_empty() && inner_arity != 3 {
        return None;
    }
    let m1 = if firsts.is_empty() {
        unit(c)
    } else {
        Expr::product(firsts.into_iter().map(|(_, e)| e).collect()).ok()?
    };
    let m2 = if seconds.is_empty() {
        unit(inner_arity)
    } else {
        Expr::product(seconds.into_iter().map(|(_, e)| e).collect()).ok()?
    };
    Some(Split {
        second,
        m1,
        m2,
        factor,
    })
}

impl LambdaPlan {
    /// Builds (or fetches from the cache) a plan for `m` applied to inputs
    /// of the given radii, producing output on `-out..=out`.
    pub fn build(
        m: &Expr,
        radii: &[usize],
        out: usize,
        ctx: &PhaseContext,
    ) -> Result<Arc<LambdaPlan>> {
        if radii.len() != m.arity() {
            return Err(Error::Arity {
                what: format!("Λ of an arity-{} multiplier", m.arity()),
                got: radii.len(),
            });
        }
        let gamma = ctx.gamma.value();
        let key = (m.id(), radii.to_vec(), out, gamma.to_bits());
        if let Some((_, p)) = cache().lock().unwrap().get(&key) {
            return Ok(p.clone());
        }
        let plan = Arc::new(LambdaPlan::make(m, radii, out, ctx)?);
        cache()
            .lock()
            .unwrap()
            .insert(key, (m.clone(), plan.clone()));
        Ok(plan)
    }

    fn make(m: &Expr, radii: &[usize], out: usize, ctx: &PhaseContext) -> Result<LambdaPlan> {
        let n = m.arity();
        let wrap = |plan| LambdaPlan {
            arity: n,
            radii: radii.to_vec(),
            out,
            gamma: ctx.gamma.value(),
            plan,
        };
        match m.node() {
            Node::Scale(c, e) => {
                return Ok(wrap(Plan::Scaled(
                    c.value(),
                    LambdaPlan::build(e, radii, out, ctx)?,
                )))
            }
            Node::Sum(v) => {
                let parts = v
                    .iter()
                    .map(|e| LambdaPlan::build(e, radii, out, ctx))
                    .collect::<Result<Vec<_>>>()?;
                return Ok(wrap(Plan::Sum(parts)));
            }
            _ => {}
        }
        let Some(s) = split(m) else {
            return Ok(wrap(Plan::Table(Table::build(m, radii, out, ctx))));
        };
        let c = s.m1.arity();
        let inner_arity = n - c + 1;
        let (inner_slots, outer_src): (Vec<usize>, Vec<Src>) = if s.second {
            // inner tuple (k_{2N}, k_{2N+3}, k_{2N+2}, ...) feeds the
            // conjugated slot 2N of the outer sum
            let mut slots = vec![c - 2];
            let mut j = c;
            while j < n {
                slots.push(j + 1);
                slots.push(j);
                j += 2;
            }
            let mut src: Vec<Src> = (0..c - 2).map(Src::Input).collect();
            src.push(Src::Aux);
            src.push(Src::Input(c - 1));
            (slots, src)
        } else {
            let mut src: Vec<Src> = (0..c - 1).map(Src::Input).collect();
            src.push(Src::Aux);
            ((c - 1..n).collect(), src)
        };
        debug_assert_eq!(inner_slots.len(), inner_arity);
        let inner_radii: Vec<usize> = inner_slots.iter().map(|&i| radii[i]).collect();
        let w_radius: usize = inner_radii.iter().sum();
        let outer_radii: Vec<usize> = outer_src
            .iter()
            .map(|s| match s {
                Src::Input(i) => radii[*i],
                Src::Aux => w_radius,
            })
            .collect();
        let inner = LambdaPlan::build(&s.m2, &inner_radii, w_radius, ctx)?;
        let outer = LambdaPlan::build(&s.m1, &outer_radii, out, ctx)?;
        let nested = wrap(Plan::Nested {
            outer,
            inner,
            inner_slots,
            outer_src,
        });
        if s.factor.value() == 1.0 {
            Ok(nested)
        } else {
            Ok(wrap(Plan::Scaled(s.factor.value(), Arc::new(nested))))
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn out_radius(&self) -> usize {
        self.out
    }

    /// Number of tabulated tuples across the plan tree.
    pub fn table_size(&self) -> usize {
        match &self.plan {
            Plan::Table(t) => t.rows.iter().map(|r| r.m.len()).sum(),
            Plan::Nested { outer, inner, .. } => outer.table_size() + inner.table_size(),
            Plan::Sum(v) => v.iter().map(|p| p.table_size()).sum(),
            Plan::Scaled(_, p) => p.table_size(),
        }
    }

    /// Whether any nested split was found.
    pub fn is_nested(&self) -> bool {
        match &self.plan {
            Plan::Table(_) => false,
            Plan::Nested { .. } => true,
            Plan::Sum(v) => v.iter().any(|p| p.is_nested()),
            Plan::Scaled(_, p) => p.is_nested(),
        }
    }

    pub fn eval(&self, inputs: &[&SpectralField], t: f64) -> Result<SpectralField> {
        let mut memo = Memo::default();
        Ok((*self.eval_with(inputs, t, &mut memo)?).clone())
    }

    /// Evaluates with a caller-held memo so repeated sub-plans on the same
    /// inputs are computed once.
    pub fn eval_with(
        &self,
        inputs: &[&SpectralField],
        t: f64,
        memo: &mut Memo,
    ) -> Result<Arc<SpectralField>> {
        if inputs.len() != self.arity {
            return Err(Error::Arity {
                what: format!("Λ plan of arity {}", self.arity),
                got: inputs.len(),
            });
        }
        for (f, r) in inputs.iter().zip(&self.radii) {
            if f.radius() != *r {
                return Err(Error::RadiusMismatch(*r, f.radius()));
            }
        }
        let key = (
            self as *const LambdaPlan as usize,
            inputs
                .iter()
                .map(|f| *f as *const SpectralField as usize)
                .collect::<Vec<_>>(),
        );
        if let Some(v) = memo.0.get(&key) {
            return Ok(v.clone());
        }
        let result = match &self.plan {
            Plan::Table(tab) => tab.eval(inputs, t, self.gamma, self.out),
            Plan::Scaled(c, p) => {
                let v = p.eval_with(inputs, t, memo)?;
                v.scale(C64::new(*c, 0.0))
            }
            Plan::Sum(parts) => {
                let mut acc = SpectralField::zeros(self.out);
                for p in parts {
                    let v = p.eval_with(inputs, t, memo)?;
                    acc.axpy(C64::new(1.0, 0.0), &v);
                }
                acc
            }
            Plan::Nested {
                outer,
                inner,
                inner_slots,
                outer_src,
            } => {
                let inner_in: Vec<&SpectralField> =
                    inner_slots.iter().map(|&i| inputs[i]).collect();
                let w = inner.eval_with(&inner_in, t, memo)?;
                let outer_in: Vec<&SpectralField> = outer_src
                    .iter()
                    .map(|s| match s {
                        Src::Input(i) => inputs[*i],
                        Src::Aux => &*w,
                    })
                    .collect();
                let v = outer.eval_with(&outer_in, t, memo)?;
                (*v).clone()
            }
        };
        let result = Arc::new(result);
        memo.0.insert(key, result.clone());
        Ok(result)
    }
}

impl Table {
    fn build(m: &Expr, radii: &[usize], out: usize, ctx: &PhaseContext) -> Table {
        let n = m.arity();
        let o = out as i64;
        let rows = par::map_range(-o, o, |k| {
            let mut rows = Rows::default();
            let mut buf = [0i64; MAX_ARITY];
            table_rec(m, radii, n, 0, k, 0, &mut buf, ctx, &mut rows);
            rows
        });
        Table { rows }
    }

    fn eval(&self, inputs: &[&SpectralField], t: f64, gamma: f64, out: usize) -> SpectralField {
        let n = inputs.len();
        let coeffs = par::map_slice(&self.rows, |rows| {
            let mut acc = C64::zero();
            let mut buf = [0i64; MAX_ARITY];
            for (i, (&mv, &(q4, q2))) in rows.m.iter().zip(&rows.q).enumerate() {
                let ks = &rows.ks[i * n..(i + 1) * n];
                let mut p = C64::new(mv, 0.0);
                for (slot, &k) in ks.iter().enumerate() {
                    buf[slot] = k as i64;
                    p *= slot_coef(inputs[slot], k as i64, slot % 2 == 1);
                }
                if p.is_zero() {
                    continue;
                }
                if t != 0.0 {
                    let a = reduced_angle(t, q4, q2, gamma);
                    p *= C64::new(a.cos(), -a.sin());
                }
                acc += p;
            }
            acc
        });
        let mut f = SpectralField::zeros(out);
        f.coeffs_mut().copy_from_slice(&coeffs);
        f
    }
}

#[allow(clippy::too_many_arguments)]
fn table_rec(
    m: &Expr,
    radii: &[usize],
    n: usize,
    slot: usize,
    k_out: i64,
    alt: i64,
    buf: &mut [i64; MAX_ARITY],
    ctx: &PhaseContext,
    rows: &mut Rows,
) {
    let r = radii[slot] as i64;
    if slot == n - 1 {
        let last = k_out - alt;
        if last.abs() > r {
            return;
        }
        buf[slot] = last;
        let k = &buf[..n];
        let mv: f64 = m.eval(k, ctx);
        if mv != 0.0 {
            rows.ks.extend(k.iter().map(|&x| x as i32));
            rows.m.push(mv);
            rows.q.push(phase_parts(k));
        }
        return;
    }
    // the remaining slots can move the sum by at most this much
    let rest: i64 = radii[slot + 1..].iter().map(|&x| x as i64).sum();
    for x in -r..=r {
        let next = if slot % 2 == 0 { alt + x } else { alt - x };
        if (k_out - next).abs() > rest {
            continue;
        }
        buf[slot] = x;
        table_rec(m, radii, n, slot + 1, k_out, next, buf, ctx, rows);
    }
}

/// Λ through a cached plan; output radius equals the shared input radius.
pub fn lambda_eval_composed(
    m: &Expr,
    inputs: &[&SpectralField],
    t: f64,
    ctx: &PhaseContext,
) -> Result<SpectralField> {
    check_inputs(m, inputs)?;
    let r = common_radius(inputs)?;
    let radii = vec![r; inputs.len()];
    LambdaPlan::build(m, &radii, r, ctx)?.eval(inputs, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conserved::EquationParams;
    use crate::multiplier::region::Region;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(r: usize, rng: &mut ChaCha8Rng) -> SpectralField {
        SpectralField::from_fn(r, |_| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn rel_err(a: &SpectralField, b: &SpectralField) -> f64 {
        let d = a.sub(b).max_abs();
        d / a.max_abs().max(b.max_abs()).max(1e-300)
    }

    #[test]
    fn single_tuple_examples() {
        let one = Expr::one(3).unwrap();
        let ctx = PhaseContext::zero();
        let d0 = SpectralField::delta(2, 0);
        assert_eq!(lambda_eval(&one, &[&d0, &d0, &d0], 0.7, &ctx).unwrap(), d0);
        let d1 = SpectralField::delta(2, 1);
        let got = lambda_eval(&one, &[&d1, &d1, &d1], 3.1, &ctx).unwrap();
        assert!(got.sub(&d1).max_abs() < 1e-15);
    }

    #[test]
    fn counts_tuples_of_two_modes() {
        let one = Expr::one(3).unwrap();
        let v = SpectralField::delta(2, 0).add(&SpectralField::delta(2, 1));
        let got = lambda_eval(&one, &[&v, &v, &v], 0.0, &PhaseContext::zero()).unwrap();
        assert_eq!(got.get(2), C64::new(1.0, 0.0));
        assert_eq!(got.get(1), C64::new(3.0, 0.0));
        let fast = lambda_eval_composed(&one, &[&v, &v, &v], 0.0, &PhaseContext::zero()).unwrap();
        assert_eq!(fast, got);
    }

    #[test]
    fn input_checks() {
        let one = Expr::one(3).unwrap();
        let a = SpectralField::zeros(2);
        let b = SpectralField::zeros(3);
        assert!(matches!(
            lambda_eval(&one, &[&a, &a], 0.0, &PhaseContext::zero()),
            Err(Error::Arity { .. })
        ));
        assert!(matches!(
            lambda_eval(&one, &[&a, &b, &a], 0.0, &PhaseContext::zero()),
            Err(Error::RadiusMismatch(..))
        ));
    }

    fn compare(m: &Expr, k: usize, seed: u64, expect_nested: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fields: Vec<SpectralField> =
            (0..m.arity()).map(|_| random_field(k, &mut rng)).collect();
        let refs: Vec<&SpectralField> = fields.iter().collect();
        let ctx = PhaseContext::rational(-3, 2);
        let t = 0.37;
        let slow = lambda_eval(m, &refs, t, &ctx).unwrap();
        let plan = LambdaPlan::build(m, &vec![k; m.arity()], k, &ctx).unwrap();
        assert_eq!(plan.is_nested(), expect_nested, "{m}");
        let fast = plan.eval(&refs, t).unwrap();
        let e = rel_err(&slow, &fast);
        assert!(e < 1e-10, "{m}: relative error {e}");
        assert!(slow.max_abs() > 0.0, "{m}: vacuous comparison");
    }

    fn cubic_pieces() -> (Expr, Expr) {
        let p = EquationParams::from_ints([3, 1, -2, 2, 5]);
        let a = Expr::product(vec![
            Expr::small_q1(&p),
            Expr::phase(3, true).unwrap().recip(),
            Expr::chi(Region::GtL(1.0), 3).unwrap(),
        ])
        .unwrap()
        .sym();
        (a, Expr::q2(&p).mul(&Expr::small_q1(&p)).unwrap())
    }

    #[test]
    fn nested_matches_direct_at_arity_five() {
        let (a, b) = cubic_pieces();
        for (e1, e2) in [
            (ExtKind::Ext11, ExtKind::Ext21),
            (ExtKind::Ext12, ExtKind::Ext22),
        ] {
            let m = Expr::product(vec![
                a.ext(e1, 5).unwrap(),
                b.ext(e2, 5).unwrap(),
                Expr::constant(5, Coef::ratio(-2, 3)).unwrap(),
            ])
            .unwrap();
            compare(&m, 4, 1, true);
            compare(&m.scale(Coef::int(3)), 4, 2, true);
        }
        compare(&Expr::constant(5, Coef::int(2)).unwrap(), 4, 3, true);
        compare(&a.ext(ExtKind::Ext12, 5).unwrap(), 4, 4, true);
        compare(&b.ext(ExtKind::Ext22, 5).unwrap(), 4, 5, true);
        // an indicator at full arity blocks the split
        let blocked = Expr::product(vec![
            a.ext(ExtKind::Ext11, 5).unwrap(),
            Expr::chi(Region::NR1, 5).unwrap(),
        ])
        .unwrap();
        compare(&blocked, 3, 6, false);
    }

    #[test]
    fn nested_matches_direct_at_arity_seven() {
        let (a, b) = cubic_pieces();
        let inner5 = a
            .ext(ExtKind::Ext11, 5)
            .unwrap()
            .mul(&b.ext(ExtKind::Ext21, 5).unwrap())
            .unwrap();
        for kind in [ExtKind::Ext11, ExtKind::Ext12] {
            compare(&a.ext(kind, 7).unwrap(), 3, 7, true);
            let second = if kind == ExtKind::Ext11 {
                ExtKind::Ext21
            } else {
                ExtKind::Ext22
            };
            let m = inner5
                .ext(kind, 7)
                .unwrap()
                .mul(&b.ext(second, 7).unwrap())
                .unwrap();
            compare(&m, 3, 8, true);
        }
        compare(&Expr::constant(7, Coef::int(1)).unwrap(), 3, 9, true);
    }

    #[test]
    fn nested_matches_direct_at_arity_nine() {
        let (a, _) = cubic_pieces();
        let inner5 = a.ext(ExtKind::Ext11, 5).unwrap();
        compare(&inner5.ext(ExtKind::Ext11, 9).unwrap(), 2, 10, true);
        compare(&inner5.ext(ExtKind::Ext12, 9).unwrap().neg(), 2, 11, true);
        compare(&Expr::constant(9, Coef::ratio(3, 2)).unwrap(), 2, 12, true);
    }

    #[test]
    fn symmetrization_is_invisible_to_identical_inputs() {
        let (a, b) = cubic_pieces();
        let m = a
            .ext(ExtKind::Ext11, 5)
            .unwrap()
            .mul(&b.ext(ExtKind::Ext21, 5).unwrap())
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let v = random_field(3, &mut rng);
        let ctx = PhaseContext::rational(1, 2);
        let plain = lambda_eval(&m, &[&v; 5], 0.9, &ctx).unwrap();
        let sym = lambda_eval(&m.sym(), &[&v; 5], 0.9, &ctx).unwrap();
        assert!(rel_err(&plain, &sym) < 1e-12);
    }

    #[test]
    fn sequential_path_agrees() {
        let (a, _) = cubic_pieces();
        let m = a.ext(ExtKind::Ext11, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fields: Vec<SpectralField> = (0..5).map(|_| random_field(3, &mut rng)).collect();
        let refs: Vec<&SpectralField> = fields.iter().collect();
        let ctx = PhaseContext::zero();
        let par_out = lambda_eval(&m, &refs, 0.2, &ctx).unwrap();
        let seq_out = par::sequential(|| lambda_eval(&m, &refs, 0.2, &ctx).unwrap());
        assert_eq!(par_out, seq_out);
    }
}
