//! Randomized invariants exercised through the public API.

use nls4::conserved::{e1, e2};
use nls4::multiplier::{lambda_eval, Catalog, Expr, ExtKind};
use nls4::phase::{phase_exact, r1_5};
use nls4::solver::{analytic_datum, integrate, Form, SolverConfig};
use nls4::spectral::{convolve, padded_grid, to_physical, to_spectral, twisted_convolve};
use nls4::{
    Coef, EquationParams, FrequencyTuple, PhaseContext, Rational, Scalar, SpectralField, C64,
};
use proptest::prelude::*;

fn field(radius: usize) -> impl Strategy<Value = SpectralField> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * radius + 1).prop_map(move |v| {
        SpectralField::from_coeffs(radius, v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
            .unwrap()
    })
}

fn int_field(radius: usize) -> impl Strategy<Value = SpectralField> {
    prop::collection::vec((-9i32..=9, -9i32..=9), 2 * radius + 1).prop_map(move |v| {
        SpectralField::from_coeffs(
            radius,
            v.into_iter()
                .map(|(a, b)| C64::new(a as f64, b as f64))
                .collect(),
        )
        .unwrap()
    })
}

fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
    a.sub(b).max_abs() / a.max_abs().max(b.max_abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_round_trip(f in (0usize..=24).prop_flat_map(field), extra in 0usize..8) {
        let m = 2 * f.radius() + 1 + extra;
        let back = to_spectral(&to_physical(&f, m).unwrap(), f.radius()).unwrap();
        prop_assert!(rel(&f, &back) < 1e-13);
    }

    #[test]
    fn twisted_is_reflected_convolution(
        (f, g) in (0usize..=16).prop_flat_map(|r| (int_field(r), int_field(r)))
    ) {
        let a = twisted_convolve(&f, &g).unwrap();
        let b = convolve(&f, &g.reflect()).unwrap();
        prop_assert_eq!(a.coeffs(), b.coeffs());
    }

    #[test]
    fn momentum_is_odd_under_reflection(f in (1usize..=16).prop_flat_map(field)) {
        let scale = e1(&f).max(1e-300) * f.radius() as f64;
        prop_assert!((e2(&f.reflect()) + e2(&f)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn quintic_phase_telescopes(k in prop::array::uniform5(-200i64..=200), g in -6i64..=6) {
        let ctx = PhaseContext::rational(g, 2);
        let t5 = FrequencyTuple::new(&k).unwrap();
        let outer = FrequencyTuple::new(&[k[0] - k[1] + k[2], k[3], k[4]]).unwrap();
        let inner = FrequencyTuple::new(&k[..3]).unwrap();
        let lhs = phase_exact(&t5, &ctx).unwrap();
        let rhs = phase_exact(&outer, &ctx).unwrap().add(&phase_exact(&inner, &ctx).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn gamma_enters_through_r1(k in prop::array::uniform5(-500i64..=500), num in -9i64..=9, den in 1i64..=5) {
        let t = FrequencyTuple::new(&k).unwrap();
        let with = phase_exact(&t, &PhaseContext::rational(num, den)).unwrap();
        let without = phase_exact(&t, &PhaseContext::zero()).unwrap();
        let shift = Rational::new(num as i128, den as i128).mul(&Rational::from_int(r1_5(&t).unwrap()));
        prop_assert_eq!(with.sub(&without), shift);
    }

    #[test]
    fn extension_is_multiplicative(
        k in prop::array::uniform5(-12i64..=12),
        l in prop::array::uniform5(-3i64..=3),
        first in any::<bool>(),
    ) {
        let p = EquationParams::from_ints([l[0], l[1], l[2], l[3], l[4]]);
        let ctx = PhaseContext::rational(3, 2);
        let a = Expr::q1(&p);
        let b = Expr::phase(3, true).unwrap().mul(&Expr::coord(3, 1).unwrap()).unwrap();
        let kind = if first { ExtKind::Ext11 } else { ExtKind::Ext21 };
        let lhs = a.mul(&b).unwrap().ext(kind, 5).unwrap();
        let rhs = a.ext(kind, 5).unwrap().mul(&b.ext(kind, 5).unwrap()).unwrap();
        prop_assert_eq!(lhs.eval_exact(&k, &ctx).unwrap(), rhs.eval_exact(&k, &ctx).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lambda_ignores_symmetrization_on_equal_inputs(
        v in field(3),
        j in 8usize..=17,
        t in 0.0f64..1.0,
    ) {
        let p = EquationParams::integrable(Coef::int(1));
        let m = Catalog::new(&p, 2.0).m(2, j).unwrap().clone();
        let ctx = PhaseContext::rational(1, 3);
        let a = lambda_eval(&m, &[&v; 5], t, &ctx).unwrap();
        let b = lambda_eval(&m.sym(), &[&v; 5], t, &ctx).unwrap();
        prop_assert!(a.sub(&b).max_abs() <= 1e-12 * a.max_abs().max(b.max_abs()).max(1e-300));
    }

    #[test]
    fn mass_is_conserved_when_l5_is_l2_plus_l4(
        l in prop::array::uniform4(-3i64..=3),
        seed in any::<u64>(),
    ) {
        let p = EquationParams::from_ints([l[0], l[1], l[2], l[3], l[1] + l[3]]);
        let phi = analytic_datum(8, 0.4, seed);
        let cfg = SolverConfig::new(Form::Nls41, 8, 1e-4, 0.02);
        let traj = integrate(&phi, &p, &cfg).unwrap();
        prop_assert!(traj.max_drift(&p)[0] < 1e-6);
    }

    #[test]
    fn time_reversal_returns_the_datum(seed in any::<u64>()) {
        let p = EquationParams::integrable(Coef::int(1));
        let phi = analytic_datum(8, 0.4, seed);
        let fwd = integrate(&phi, &p, &SolverConfig::new(Form::Nls41, 8, 1e-4, 0.01)).unwrap();
        let back = integrate(fwd.last().unwrap(), &p, &SolverConfig::new(Form::Nls41, 8, 1e-4, -0.01)).unwrap();
        prop_assert!(back.last().unwrap().sub(&phi).max_abs() < 1e-9);
    }

    #[test]
    fn padded_quintic_product_matches_direct_convolution(v in field(4)) {
        let m = padded_grid(v.radius(), 3);
        let u = to_physical(&v, m).unwrap();
        let prod: Vec<C64> = u.samples().iter().map(|z| z * z * z.conj() * z * z.conj()).collect();
        let fast = to_spectral(&nls4::PhysicalField::new(prod), v.radius()).unwrap();
        let r = v.radius() as i64;
        let direct = SpectralField::from_fn(v.radius(), |k| {
            let mut s = C64::new(0.0, 0.0);
            for a in -r..=r { for b in -r..=r { for c in -r..=r { for d in -r..=r {
                let e = k - a + b - c + d;
                if e.abs() <= r {
                    s += v.get(a) * v.get(b).conj() * v.get(c) * v.get(d).conj() * v.get(e);
                }
            }}}}
            s
        });
        prop_assert!(rel(&fast, &direct) < 1e-12);
    }
}
