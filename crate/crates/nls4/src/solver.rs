//! Pseudospectral time integration of the equation family.

use serde::{Deserialize, Serialize};

use crate::conserved::{derivative, e1, e2, e3, e4, EquationParams};
use crate::error::{Error, Result};
use crate::phase::reduced_angle;
use crate::spectral::{padded_grid, sobolev_norm, Grid, PhysicalField, SpectralField, C64};

/// Which right-hand side to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    /// The original equation.
    Nls41,
    /// Mean-field rewrite with the transport term.
    Nls42,
    /// Transport removed by the moving frame.
    Nls43,
    /// Adds mu u_xx on the left and lambda6 |u|^2 u on the right.
    Fm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Rk4Interaction,
    Rk4Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub form: Form,
    pub radius: usize,
    pub dt: f64,
    /// Final time; negative runs backwards.
    pub horizon: f64,
    #[serde(default = "default_integrator")]
    pub integrator: Integrator,
    /// Grid is `padding * (2K + 1)` points, rounded up to a fast size.
    #[serde(default = "default_padding")]
    pub padding: usize,
    /// Keep every `save_every`-th step.
    #[serde(default = "one")]
    pub save_every: usize,
}

fn default_integrator() -> Integrator {
    Integrator::Rk4Interaction
}

fn default_padding() -> usize {
    3
}

fn one() -> usize {
    1
}

impl SolverConfig {
    pub fn new(form: Form, radius: usize, dt: f64, horizon: f64) -> Self {
        SolverConfig {
            form,
            radius,
            dt,
            horizon,
            integrator: Integrator::Rk4Interaction,
            padding: 3,
            save_every: 1,
        }
    }

    pub fn validate(&self, p: &EquationParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Usage(format!(
                "solver.dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.horizon.abs() >= self.dt) {
            return Err(Error::Usage(format!(
                "solver.horizon {} is shorter than one step",
                self.horizon
            )));
        }
        let need = if p.lambda1.is_zero() { 2 } else { 3 };
        if self.padding < need {
            return Err(Error::Usage(format!(
                "solver.padding must be at least {need} for these coefficients"
            )));
        }
        if self.save_every == 0 {
            return Err(Error::Usage("solver.save_every must be positive".into()));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.horizon.abs() / self.dt).round() as usize
    }
}

/// Frozen data of a run: gamma = lambda5 E1(initial datum).
#[derive(Clone, Copy, Debug)]
struct Frozen {
    form: Form,
    gamma: f64,
    grid: usize,
}

impl Frozen {
    fn new(p: &EquationParams, form: Form, e1_phi: f64, radius: usize, padding: usize) -> Self {
        Frozen {
            form,
            gamma: p.lambda5.value() * e1_phi,
            grid: padded_grid(radius, padding),
        }
    }

    /// omega with linear part d/dt u_hat = i omega(k) u_hat.
    fn omega(&self, p: &EquationParams, k: i64) -> f64 {
        let k2 = (k * k) as f64;
        match self.form {
            Form::Nls41 => k2 * k2,
            Form::Nls42 | Form::Nls43 => k2 * k2 + self.gamma * k2,
            Form::Fm => k2 * k2 - p.mu.value() * k2,
        }
    }
}

fn i_times(c: C64) -> C64 {
    C64::new(-c.im, c.re)
}

/// The local polynomial terms -i N1(u) of the original equation, plus the
/// cubic term of the FM variant.
fn local_terms(
    u: &SpectralField,
    p: &EquationParams,
    form: Form,
    m: usize,
) -> Result<SpectralField> {
    let g = Grid::get(m);
    let uu = g.to_physical(u)?;
    let ux = g.to_physical(&derivative(u, 1))?;
    let uxx = g.to_physical(&derivative(u, 2))?;
    let [l1, l2, l3, l4, l5] = p.lambdas().map(|c| c.value());
    let l6 = if form == Form::Fm {
        p.lambda6.value()
    } else {
        0.0
    };
    let out: Vec<C64> = uu
        .samples()
        .iter()
        .zip(ux.samples())
        .zip(uxx.samples())
        .map(|((&a, &b), &c)| {
            let a2 = a.norm_sqr();
            let n1 = -0.375 * l1 * a2 * a2 * a
                + l2 * a.conj() * b * b
                + l3 * a * b.norm_sqr()
                + l4 * a * a * c.conj()
                + l5 * a2 * c
                + l6 * a2 * a;
            -i_times(n1)
        })
        .collect();
    g.to_spectral(&PhysicalField::new(out), u.radius())
}

fn nonlinear(u: &SpectralField, p: &EquationParams, fr: &Frozen) -> Result<SpectralField> {
    let mut n = local_terms(u, p, fr.form, fr.grid)?;
    if matches!(fr.form, Form::Nls42 | Form::Nls43) {
        let (l2, l3, l4, l5) = (
            p.lambda2.value(),
            p.lambda3.value(),
            p.lambda4.value(),
            p.lambda5.value(),
        );
        let e1u = e1(u);
        let e2u = e2(u);
        let grad2: f64 = u.iter().map(|(k, c)| (k * k) as f64 * c.norm_sqr()).sum();
        let mean = 2.0 * l4 + l5 - l3;
        let transport = if fr.form == Form::Nls43 {
            l3 - 2.0 * l2
        } else {
            0.0
        };
        // J2 + J3; in the unshifted form the transport part of J2 cancels
        // against the left-hand side
        let j2 = u.map_modes(|k, c| {
            let k = k as f64;
            i_times(c) * (-l5 * e1u * k * k) + i_times(c) * (transport * e2u * k)
                - i_times(c) * (mean * grad2)
        });
        let j3 = u.scale(C64::new(0.0, mean * grad2));
        n = n.add(&j2).add(&j3);
    }
    Ok(n)
}

/// d/dt u_hat for the chosen form. `e1_phi` is E1 of the initial datum.
pub fn rhs(
    u: &SpectralField,
    p: &EquationParams,
    form: Form,
    e1_phi: f64,
) -> Result<SpectralField> {
    let fr = Frozen::new(p, form, e1_phi, u.radius(), 3);
    let n = nonlinear(u, p, &fr)?;
    Ok(n.add(&u.map_modes(|k, c| i_times(c) * fr.omega(p, k))))
}

fn propagate(u: &SpectralField, p: &EquationParams, fr: &Frozen, h: f64) -> SpectralField {
    u.map_modes(|k, c| {
        let a = h * fr.omega(p, k);
        c * C64::new(a.cos(), a.sin())
    })
}

fn rk4_interaction(
    u: &SpectralField,
    h: f64,
    p: &EquationParams,
    fr: &Frozen,
) -> Result<SpectralField> {
    let half = |f: &SpectralField| propagate(f, p, fr, h / 2.0);
    let ui = half(u);
    let k1 = half(&nonlinear(u, p, fr)?);
    let mut tmp = ui.clone();
    tmp.axpy(C64::new(h / 2.0, 0.0), &k1);
    let k2 = nonlinear(&tmp, p, fr)?;
    let mut tmp = ui.clone();
    tmp.axpy(C64::new(h / 2.0, 0.0), &k2);
    let k3 = nonlinear(&tmp, p, fr)?;
    let mut tmp = ui.clone();
    tmp.axpy(C64::new(h, 0.0), &k3);
    let k4 = nonlinear(&half(&tmp), p, fr)?;
    let mut acc = ui;
    acc.axpy(C64::new(h / 6.0, 0.0), &k1);
    acc.axpy(C64::new(h / 3.0, 0.0), &k2);
    acc.axpy(C64::new(h / 3.0, 0.0), &k3);
    let mut out = half(&acc);
    out.axpy(C64::new(h / 6.0, 0.0), &k4);
    Ok(out)
}

fn rk4_direct(u: &SpectralField, h: f64, p: &EquationParams, fr: &Frozen) -> Result<SpectralField> {
    let f = |v: &SpectralField| -> Result<SpectralField> {
        Ok(nonlinear(v, p, fr)?.add(&v.map_modes(|k, c| i_times(c) * fr.omega(p, k))))
    };
    let k1 = f(u)?;
    let mut tmp = u.clone();
    tmp.axpy(C64::new(h / 2.0, 0.0), &k1);
    let k2 = f(&tmp)?;
    let mut tmp = u.clone();
    tmp.axpy(C64::new(h / 2.0, 0.0), &k2);
    let k3 = f(&tmp)?;
    let mut tmp = u.clone();
    tmp.axpy(C64::new(h, 0.0), &k3);
    let k4 = f(&tmp)?;
    let mut out = u.clone();
    out.axpy(C64::new(h / 6.0, 0.0), &k1);
    out.axpy(C64::new(h / 3.0, 0.0), &k2);
    out.axpy(C64::new(h / 3.0, 0.0), &k3);
    out.axpy(C64::new(h / 6.0, 0.0), &k4);
    Ok(out)
}

/// One step of size `h` (negative steps run backwards).
pub fn step(
    u: &SpectralField,
    h: f64,
    p: &EquationParams,
    cfg: &SolverConfig,
    e1_phi: f64,
) -> Result<SpectralField> {
    let fr = Frozen::new(p, cfg.form, e1_phi, u.radius(), cfg.padding);
    match cfg.integrator {
        Integrator::Rk4Interaction => rk4_interaction(u, h, p, &fr),
        Integrator::Rk4Direct => rk4_direct(u, h, p, &fr),
    }
}

/// Stored solution snapshots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    /// Accumulated shift c(t) = int_0^t (lambda3 - 2 lambda2) E2.
    pub gauge_c: Vec<f64>,
}

/// One row of the conservation report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub hs: f64,
    pub gauge_c: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&SpectralField> {
        self.states.last()
    }

    pub fn diagnostics(&self, p: &EquationParams, s: f64) -> Vec<Diagnostics> {
        self.times
            .iter()
            .zip(&self.states)
            .zip(&self.gauge_c)
            .map(|((&t, u), &c)| Diagnostics {
                t,
                e1: e1(u),
                e2: e2(u),
                e3: e3(u, p),
                e4: e4(u, p),
                hs: sobolev_norm(u, s),
                gauge_c: c,
            })
            .collect()
    }

    /// Largest relative change of each conserved quantity from its initial
    /// value; quantities starting at zero are measured absolutely.
    pub fn max_drift(&self, p: &EquationParams) -> [f64; 4] {
        let d = self.diagnostics(p, 0.0);
        let mut out = [0.0; 4];
        let Some(first) = d.first() else {
            return out;
        };
        let init = [first.e1, first.e2, first.e3, first.e4];
        for row in &d {
            for (j, v) in [row.e1, row.e2, row.e3, row.e4].into_iter().enumerate() {
                let scale = if init[j].abs() > 0.0 {
                    init[j].abs()
                } else {
                    1.0
                };
                out[j] = out[j].max((v - init[j]).abs() / scale);
            }
        }
        out
    }

    /// Supremum over common times of the H^s distance.
    pub fn sup_distance(&self, other: &Trajectory, s: f64) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| sobolev_norm(&a.sub(b), s))
            .fold(0.0, f64::max)
    }
}

/// Integrates from `phi0` to `cfg.horizon`.
pub fn integrate(
    phi0: &SpectralField,
    p: &EquationParams,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    cfg.validate(p)?;
    if phi0.radius() != cfg.radius {
        return Err(Error::RadiusMismatch(cfg.radius, phi0.radius()));
    }
    if !phi0.is_finite() {
        return Err(Error::Usage("initial datum is not finite".into()));
    }
    let e1_phi = e1(phi0);
    let fr = Frozen::new(p, cfg.form, e1_phi, cfg.radius, cfg.padding);
    let h = cfg.dt * cfg.horizon.signum();
    let n = cfg.steps();
    let transport = p.transport();
    let norm0 = e1_phi.sqrt();

    let mut u = phi0.clone();
    let mut t = 0.0;
    let mut c = 0.0;
    let mut e2_prev = e2(&u);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![u.clone()],
        gauge_c: vec![0.0],
    };
    for i in 1..=n {
        u = match cfg.integrator {
            Integrator::Rk4Interaction => rk4_interaction(&u, h, p, &fr)?,
            Integrator::Rk4Direct => rk4_direct(&u, h, p, &fr)?,
        };
        t = i as f64 * h;
        if !u.is_finite() {
            return Err(Error::BlowUp {
                t,
                reason: "non-finite coefficient".into(),
            });
        }
        let norm = e1(&u).sqrt();
        if norm0 > 0.0 && norm > 1e6 * norm0 {
            return Err(Error::BlowUp {
                t,
                reason: format!("L2 norm grew from {norm0:e} to {norm:e}"),
            });
        }
        let e2_now = e2(&u);
        c += 0.5 * h * transport * (e2_prev + e2_now);
        e2_prev = e2_now;
        if i % cfg.save_every == 0 || i == n {
            traj.times.push(t);
            traj.states.push(u.clone());
            traj.gauge_c.push(c);
        }
    }
    debug_assert!(n == 0 || (t - cfg.horizon).abs() <= 1e-9 * cfg.horizon.abs().max(1.0));
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// u_hat(t, k) -> exp(+-i k c(t)) u_hat(t, k).
pub fn gauge_translate(traj: &Trajectory, dir: Direction) -> Trajectory {
    let sign = match dir {
        Direction::Forward => 1.0,
        Direction::Inverse => -1.0,
    };
    let states = traj
        .states
        .iter()
        .zip(&traj.gauge_c)
        .map(|(u, &c)| {
            u.map_modes(|k, z| {
                let a = sign * k as f64 * c;
                z * C64::new(a.cos(), a.sin())
            })
        })
        .collect();
    Trajectory {
        times: traj.times.clone(),
        states,
        gauge_c: traj.gauge_c.clone(),
    }
}

/// v_hat(t, k) = exp(-i t (k^4 + gamma k^2)) u_hat(t, k).
pub fn interaction_picture(traj: &Trajectory, gamma: f64) -> Trajectory {
    let states = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(&t, u)| {
            u.map_modes(|k, z| {
                let k2 = (k * k) as i128;
                let a = reduced_angle(t, k2 * k2, k2, gamma);
                z * C64::new(a.cos(), -a.sin())
            })
        })
        .collect();
    Trajectory {
        times: traj.times.clone(),
        states,
        gauge_c: traj.gauge_c.clone(),
    }
}

/// One row of the continuity sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContinuityRow {
    pub eps: f64,
    pub sup_diff: f64,
    pub ratio: f64,
}

/// For each eps, sup_t |u(phi + eps psi) - u(phi)|_{H^s} / eps.
pub fn solution_map_experiment(
    phi0: &SpectralField,
    psi: &SpectralField,
    eps: &[f64],
    p: &EquationParams,
    cfg: &SolverConfig,
    s: f64,
) -> Result<Vec<ContinuityRow>> {
    let base = integrate(phi0, p, cfg)?;
    eps.iter()
        .map(|&e| {
            let pert = phi0.add(&psi.scale(C64::new(e, 0.0)));
            let run = integrate(&pert, p, cfg)?;
            let d = base.sup_distance(&run, s);
            Ok(ContinuityRow {
                eps: e,
                sup_diff: d,
                ratio: if e == 0.0 { 0.0 } else { d / e },
            })
        })
        .collect()
}

/// e^{ix} + 0.1 e^{2ix}.
pub fn smooth_datum(radius: usize) -> SpectralField {
    let mut f = SpectralField::zeros(radius);
    f.set(1, C64::new(1.0, 0.0));
    if radius >= 2 {
        f.set(2, C64::new(0.1, 0.0));
    }
    f
}

/// Analytic datum with coefficients decaying like exp(-|k|) and seeded
/// phases spread over every mode.
pub fn analytic_datum(radius: usize, amplitude: f64, seed: u64) -> SpectralField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    SpectralField::from_fn(radius, |k| {
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        amplitude * (-(k.abs() as f64)).exp() * C64::new(a.cos(), a.sin())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiplier::{lambda_eval, Expr};
    use crate::phase::PhaseContext;
    use crate::scalar::Coef;

    fn integrable() -> EquationParams {
        EquationParams::integrable(Coef::int(1))
    }

    fn close(a: &SpectralField, b: &SpectralField) -> f64 {
        a.sub(b).max_abs()
    }

    #[test]
    fn linear_symbol() {
        let p = EquationParams::linear();
        let d = SpectralField::delta(4, 1);
        let r = rhs(&d, &p, Form::Nls41, 1.0).unwrap();
        assert!(close(&r, &d.scale(C64::new(0.0, 1.0))) < 1e-14);
        let r2 = rhs(&SpectralField::delta(4, 2), &p, Form::Nls41, 1.0).unwrap();
        assert!((r2.get(2) - C64::new(0.0, 16.0)).norm() < 1e-12);
    }

    #[test]
    fn constant_datum_feels_only_the_quintic_term() {
        let p = EquationParams::from_ints([3, 1, 2, 5, 7]);
        let c = C64::new(0.6, -0.3);
        let u = SpectralField::mode(4, 0, c);
        let r = rhs(&u, &p, Form::Nls41, e1(&u)).unwrap();
        let want = C64::new(0.0, 0.375 * 3.0) * c.norm_sqr() * c.norm_sqr() * c;
        assert!((r.get(0) - want).norm() < 1e-14);
        assert!(r.max_abs() - want.norm() < 1e-14);
    }

    #[test]
    fn transport_term_isolated() {
        let p = EquationParams::from_ints([1, 2, 7, 1, 3]);
        let u = analytic_datum(6, 0.8, 3);
        let r2 = rhs(&u, &p, Form::Nls42, 0.4).unwrap();
        let r3 = rhs(&u, &p, Form::Nls43, 0.4).unwrap();
        let want = u.map_modes(|k, c| -p.transport() * e2(&u) * i_times(c) * k as f64);
        assert!(close(&r2.sub(&r3), &want) < 1e-12);
    }

    #[test]
    fn dealiased_quintic_matches_direct_convolution() {
        let p = EquationParams::from_ints([8, 0, 0, 0, 0]);
        let u = analytic_datum(5, 0.9, 11);
        let got = rhs(&u, &p, Form::Nls41, 0.0)
            .unwrap()
            .sub(&u.map_modes(|k, c| i_times(c) * (k * k * k * k) as f64));
        // i 3 lambda1/8 sum over k = k1-k2+k3-k4+k5
        let one = Expr::one(5).unwrap();
        let want = lambda_eval(&one, &[&u; 5], 0.0, &PhaseContext::zero())
            .unwrap()
            .scale(C64::new(0.0, 3.0));
        assert!(close(&got, &want) < 1e-12);
    }

    #[test]
    fn gauged_form_is_the_transformed_cubic_quintic_sum() {
        // at t = 0 the interaction-picture field is u itself
        let p = integrable();
        let u = analytic_datum(5, 0.7, 2);
        let gamma = p.lambda5.value() * e1(&u);
        let ctx = PhaseContext::real(gamma);
        let lin = u.map_modes(|k, c| {
            let k2 = (k * k) as f64;
            i_times(c) * (k2 * k2 + gamma * k2)
        });
        let got = rhs(&u, &p, Form::Nls43, e1(&u)).unwrap().sub(&lin);
        let terms = [Expr::q1(&p), Expr::q2(&p)];
        let mut want = SpectralField::zeros(5);
        for m in &terms {
            want = want.add(&lambda_eval(m, &[&u; 3], 0.0, &ctx).unwrap());
        }
        let c5 = Expr::constant(5, Coef::ratio(3, 8) * p.lambda1).unwrap();
        want = want.add(&lambda_eval(&c5, &[&u; 5], 0.0, &ctx).unwrap());
        let want = want.scale(C64::new(0.0, 1.0));
        assert!(close(&got, &want) < 1e-11, "{}", close(&got, &want));
    }

    #[test]
    fn zero_coefficients_give_pure_linear_flow() {
        let p = EquationParams::linear();
        let u = analytic_datum(6, 1.0, 1);
        let cfg = SolverConfig::new(Form::Nls41, 6, 1e-3, 0.05);
        let traj = integrate(&u, &p, &cfg).unwrap();
        let v = interaction_picture(&traj, 0.0);
        for s in &v.states {
            assert!(close(s, &u) < 1e-12);
        }
        let z = integrate(&SpectralField::zeros(6), &integrable(), &cfg).unwrap();
        assert!(z.states.iter().all(|s| s.max_abs() == 0.0));
    }

    #[test]
    fn single_mode_rotates_at_constant_amplitude() {
        let p = EquationParams::from_ints([2, 0, 0, 0, 0]);
        let a = 0.8;
        let u = SpectralField::mode(3, 1, C64::new(a, 0.0));
        let cfg = SolverConfig::new(Form::Nls41, 3, 1e-3, 0.5);
        let traj = integrate(&u, &p, &cfg).unwrap();
        let t = *traj.times.last().unwrap();
        // u = a exp(i (1 + (3/8) lambda1 a^4) t) e^{ix}
        let w = 1.0 + 0.375 * 2.0 * a.powi(4);
        let want = C64::new(0.0, w * t).exp() * a;
        assert!((traj.last().unwrap().get(1) - want).norm() < 1e-10);
    }

    #[test]
    fn fourth_order_in_time() {
        let p = integrable();
        let u = analytic_datum(8, 0.5, 4);
        let run = |dt: f64| {
            let cfg = SolverConfig::new(Form::Nls41, 8, dt, 0.01);
            integrate(&u, &p, &cfg).unwrap().last().unwrap().clone()
        };
        let r = run(1.25e-4);
        let e1_ = close(&run(1e-3), &r);
        let e2_ = close(&run(5e-4), &r);
        let e3_ = close(&run(2.5e-4), &r);
        let o1 = (e1_ / e2_).log2();
        let o2 = (e2_ / e3_).log2();
        assert!(o1 > 3.5 && o2 > 3.5, "orders {o1} {o2}");
    }

    #[test]
    fn gauge_round_trip_and_symmetric_data() {
        let p = EquationParams::from_ints([0, 1, 5, 1, 2]);
        let u = analytic_datum(6, 0.5, 7);
        let cfg = SolverConfig::new(Form::Nls42, 6, 1e-3, 0.02);
        let traj = integrate(&u, &p, &cfg).unwrap();
        assert!(traj.gauge_c.last().unwrap().abs() > 0.0);
        let back = gauge_translate(
            &gauge_translate(&traj, Direction::Forward),
            Direction::Inverse,
        );
        assert!(traj.sup_distance(&back, 1.0) < 1e-13);
        // even real data keeps E2 = 0, so c vanishes
        let even = SpectralField::from_fn(6, |k| C64::new((-(k.abs() as f64)).exp(), 0.0));
        let traj = integrate(&even, &p, &cfg).unwrap();
        assert!(traj.gauge_c.iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn backwards_run_returns() {
        let p = integrable();
        let u = analytic_datum(6, 0.5, 9);
        let cfg = SolverConfig::new(Form::Nls41, 6, 1e-4, 0.01);
        let fwd = integrate(&u, &p, &cfg).unwrap();
        let mut back_cfg = cfg.clone();
        back_cfg.horizon = -0.01;
        let back = integrate(fwd.last().unwrap(), &p, &back_cfg).unwrap();
        assert!(close(back.last().unwrap(), &u) < 1e-10);
    }

    #[test]
    fn blow_up_is_reported() {
        let p = EquationParams::from_ints([-4000, 0, 0, 0, 0]);
        let u = SpectralField::mode(2, 0, C64::new(3.0, 0.0));
        let mut cfg = SolverConfig::new(Form::Nls41, 2, 0.5, 50.0);
        cfg.integrator = Integrator::Rk4Direct;
        assert!(matches!(integrate(&u, &p, &cfg), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn config_validation() {
        let p = integrable();
        let mut cfg = SolverConfig::new(Form::Nls41, 4, 0.0, 1.0);
        assert!(cfg.validate(&p).is_err());
        cfg.dt = 0.1;
        cfg.padding = 2;
        assert!(cfg.validate(&p).is_err());
        assert!(cfg.validate(&EquationParams::linear()).is_ok());
    }

    #[test]
    fn linear_continuity_ratio_is_the_perturbation_norm() {
        let p = EquationParams::linear();
        let u = analytic_datum(6, 1.0, 1);
        let psi = analytic_datum(6, 1.0, 2);
        let cfg = SolverConfig::new(Form::Nls41, 6, 1e-3, 0.01);
        let rows = solution_map_experiment(&u, &psi, &[0.0, 1e-2, 1e-3], &p, &cfg, 1.0).unwrap();
        assert_eq!(rows[0].sup_diff, 0.0);
        for r in &rows[1..] {
            assert!((r.ratio - sobolev_norm(&psi, 1.0)).abs() < 1e-9);
        }
    }
}
