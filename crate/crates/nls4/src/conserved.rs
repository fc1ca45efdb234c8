//! Equation coefficients, the structural conditions A1-A3 and the conserved
//! functionals E1-E4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Coef;
use crate::spectral::{padded_grid, to_physical, SpectralField, C64};

/// Coefficients of the equation family. `mu` and `lambda6` only enter the
/// Fukumoto-Moffatt form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationParams {
    pub lambda1: Coef,
    pub lambda2: Coef,
    pub lambda3: Coef,
    pub lambda4: Coef,
    pub lambda5: Coef,
    #[serde(default = "zero")]
    pub mu: Coef,
    #[serde(default = "zero")]
    pub lambda6: Coef,
}

fn zero() -> Coef {
    Coef::ZERO
}

impl Default for EquationParams {
    fn default() -> Self {
        EquationParams::linear()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionFlags {
    pub a1: bool,
    pub a2: bool,
    pub a3: bool,
    pub hamiltonian: bool,
    pub integrable: bool,
}

impl EquationParams {
    pub fn new(l1: Coef, l2: Coef, l3: Coef, l4: Coef, l5: Coef) -> Self {
        EquationParams {
            lambda1: l1,
            lambda2: l2,
            lambda3: l3,
            lambda4: l4,
            lambda5: l5,
            mu: Coef::ZERO,
            lambda6: Coef::ZERO,
        }
    }

    pub fn from_ints(l: [i64; 5]) -> Self {
        let [a, b, c, d, e] = l.map(Coef::int);
        EquationParams::new(a, b, c, d, e)
    }

    pub fn linear() -> Self {
        EquationParams::from_ints([0; 5])
    }

    /// lambda = (4 l4^2, 3 l4, 2 l4, l4, 4 l4).
    pub fn integrable(l4: Coef) -> Self {
        EquationParams::new(
            Coef::int(4) * l4 * l4,
            Coef::int(3) * l4,
            Coef::int(2) * l4,
            l4,
            Coef::int(4) * l4,
        )
    }

    /// lambda3 = 2 lambda4 and lambda5 = lambda2 + lambda4.
    pub fn hamiltonian(l2: Coef, l4: Coef, l1: Coef) -> Self {
        EquationParams::new(l1, l2, Coef::int(2) * l4, l4, l2 + l4)
    }

    /// Any coefficients with lambda5 = lambda2 + lambda4 or lambda5 = 0.
    pub fn generic_theorem(l: [Coef; 5]) -> Result<Self> {
        let p = EquationParams::new(l[0], l[1], l[2], l[3], l[4]);
        if !p.theorem_hypothesis() {
            return Err(Error::Usage(
                "generic-theorem needs lambda5 = lambda2 + lambda4 or lambda5 = 0".into(),
            ));
        }
        Ok(p)
    }

    pub fn lambdas(&self) -> [Coef; 5] {
        [
            self.lambda1,
            self.lambda2,
            self.lambda3,
            self.lambda4,
            self.lambda5,
        ]
    }

    pub fn is_exact(&self) -> bool {
        self.lambdas().iter().all(Coef::is_exact)
    }

    /// lambda5 = lambda2 + lambda4, or lambda5 = 0.
    pub fn theorem_hypothesis(&self) -> bool {
        check_conditions(self).a1 || same(self.lambda5, Coef::ZERO)
    }

    /// Coefficient of the first-order transport term, lambda3 - 2 lambda2.
    pub fn transport(&self) -> f64 {
        self.lambda3.value() - 2.0 * self.lambda2.value()
    }

    /// 2 lambda4 + lambda5 - lambda3.
    pub fn mean_coupling(&self) -> Coef {
        Coef::int(2) * self.lambda4 + self.lambda5 - self.lambda3
    }
}

fn same(a: Coef, b: Coef) -> bool {
    match (a.exact(), b.exact()) {
        (Some(x), Some(y)) => x == y,
        _ => {
            let (x, y) = (a.value(), b.value());
            x == y || (x - y).abs() <= 1e-12 * x.abs().max(y.abs())
        }
    }
}

pub fn check_conditions(p: &EquationParams) -> ConditionFlags {
    let [l1, l2, l3, l4, l5] = p.lambdas();
    let a1 = same(l5, l2 + l4);
    let a2 = same(l2 + l3, l4 + l5);
    let a3 = same(Coef::int(8) * l4, Coef::int(2) * l2 + l3)
        && same(
            l4 * (l2 + Coef::int(2) * l4 - Coef::int(2) * l5),
            -(Coef::int(3) * l1) * Coef::ratio(1, 4),
        );
    ConditionFlags {
        a1,
        a2,
        a3,
        hamiltonian: a1 && a2,
        integrable: a1 && a2 && a3,
    }
}

/// Mean of |u|^2.
pub fn e1(f: &SpectralField) -> f64 {
    f.coeffs().iter().map(|c| c.norm_sqr()).sum()
}

/// Im mean(conj(u) u_x).
pub fn e2(f: &SpectralField) -> f64 {
    f.iter().map(|(k, c)| k as f64 * c.norm_sqr()).sum()
}

/// Derivative of order `n` in Fourier space.
pub fn derivative(f: &SpectralField, n: u32) -> SpectralField {
    f.map_modes(|k, c| C64::new(0.0, k as f64).powu(n) * c)
}

fn moment(f: &SpectralField, power: i32) -> f64 {
    f.iter()
        .map(|(k, c)| (k as f64).powi(power) * c.norm_sqr())
        .sum()
}

/// (1/2) mean(|u_x|^2 + (lambda4/2)|u|^4).
pub fn e3(f: &SpectralField, p: &EquationParams) -> f64 {
    let m = padded_grid(f.radius(), 2);
    let u = to_physical(f, m).expect("padded grid");
    let quartic = u
        .samples()
        .iter()
        .map(|s| s.norm_sqr().powi(2))
        .sum::<f64>()
        / m as f64;
    0.5 * (moment(f, 2) + 0.5 * p.lambda4.value() * quartic)
}

/// (1/2) mean(|u_xx|^2 + (lambda1/8)|u|^6 + (lambda2+lambda4)|u|^2|u_x|^2
/// + lambda4 Re(u^2 conj(u_x)^2)).
pub fn e4(f: &SpectralField, p: &EquationParams) -> f64 {
    let m = padded_grid(f.radius(), 3);
    let u = to_physical(f, m).expect("padded grid");
    let ux = to_physical(&derivative(f, 1), m).expect("padded grid");
    let (l1, l2, l4) = (p.lambda1.value(), p.lambda2.value(), p.lambda4.value());
    let local = u
        .samples()
        .iter()
        .zip(ux.samples())
        .map(|(a, b)| {
            let a2 = a.norm_sqr();
            l1 / 8.0 * a2 * a2 * a2
                + (l2 + l4) * a2 * b.norm_sqr()
                + l4 * (a * a * b.conj() * b.conj()).re
        })
        .sum::<f64>()
        / m as f64;
    0.5 * (moment(f, 4) + local)
}
