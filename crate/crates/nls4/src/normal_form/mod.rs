//! Boundary term F and remainder G of the normal-form reduction, and the
//! numerical checks of ∂t(v + F) = G together with its supporting algebra.

mod bounds;
mod identities;

pub use bounds::{
    gamma_continuity, leading_coefficient_check, sample_bounds, verify_cancellation, BoundRow,
    CancellationReport, ContinuityPoint, LeadingCoefficientReport,
};
pub use identities::{
    check_identity, verify_decomposition, verify_h11_split, verify_h11_split_sampled,
    verify_partition, verify_quintic_regrouping, verify_quintic_regrouping_sampled, IdentityReport,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conserved::{e1, EquationParams};
use crate::error::{Error, Result};
use crate::multiplier::catalog::M_INDEX;
use crate::multiplier::{lambda_eval, Catalog, Expr, LambdaPlan, Memo, Region};
use crate::phase::PhaseContext;
use crate::scalar::Coef;
use crate::solver::{integrate, interaction_picture, Form, Integrator, SolverConfig, Trajectory};
use crate::spectral::{sobolev_norm, SpectralField, C64};

fn default_s() -> f64 {
    1.0
}

/// Cutoff, Sobolev index, truncation radius and the frozen gamma.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFormConfig {
    /// Frequency cutoff L.
    pub cutoff: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    pub radius: usize,
    pub gamma: Coef,
}

impl NormalFormConfig {
    /// Uses the default cutoff for `gamma`.
    pub fn new(radius: usize, gamma: Coef) -> Self {
        NormalFormConfig {
            cutoff: Self::default_cutoff(gamma.value()),
            s: 1.0,
            radius,
            gamma,
        }
    }

    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn default_cutoff(gamma: f64) -> f64 {
        256.0 * gamma.abs().max(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            return Err(Error::Usage(format!(
                "normal_form.cutoff must be positive, got {}",
                self.cutoff
            )));
        }
        if !self.s.is_finite() {
            return Err(Error::Usage("normal_form.s must be finite".into()));
        }
        if !self.gamma.value().is_finite() {
            return Err(Error::Usage("normal_form.gamma must be finite".into()));
        }
        Ok(())
    }

    /// The stricter requirement used by the pointwise bound sampling.
    pub fn validate_for_bounds(&self) -> Result<()> {
        self.validate()?;
        let floor = 16.0 * self.gamma.value().abs().max(1.0);
        if self.cutoff <= floor {
            return Err(Error::Usage(format!(
                "normal_form.cutoff must exceed {floor} for bound checks, got {}",
                self.cutoff
            )));
        }
        Ok(())
    }

    pub fn context(&self) -> PhaseContext {
        PhaseContext::new(self.gamma)
    }
}

/// One Λ term. `fast` may drop an outer symmetrization that Λ on equal
/// inputs cannot detect; `literal` is the definition as written.
#[derive(Clone, Debug)]
pub struct Term {
    pub label: String,
    pub fast: Expr,
    pub literal: Expr,
}

impl Term {
    pub fn arity(&self) -> usize {
        self.fast.arity()
    }
}

/// Precomputed F and G for one parameter set and configuration.
pub struct NormalForm {
    params: EquationParams,
    cfg: NormalFormConfig,
    f_terms: Vec<Term>,
    g_terms: Vec<Term>,
    f_plans: Vec<Arc<LambdaPlan>>,
    g_plans: Vec<Arc<LambdaPlan>>,
}

fn prod(v: Vec<Expr>) -> Expr {
    Expr::product(v).expect("normal-form factors share arity")
}

impl NormalForm {
    pub fn new(p: &EquationParams, cfg: &NormalFormConfig) -> Result<Self> {
        NormalForm::ablated(p, cfg, &[])
    }

    /// Like [`NormalForm::new`] but with the listed M entries left out of G.
    pub fn ablated(
        p: &EquationParams,
        cfg: &NormalFormConfig,
        skip: &[(usize, usize)],
    ) -> Result<Self> {
        cfg.validate()?;
        let cat = Catalog::new(p, cfg.cutoff);
        for &(n, j) in skip {
            cat.m(n, j)?;
        }
        let mut f_terms = Vec::new();
        let mut g_terms = Vec::new();
        for n in 1..=2 {
            let a = 2 * n + 1;
            let gt = Expr::chi(Region::GtL(cfg.cutoff), a)?;
            let le = Expr::chi(Region::LeL(cfg.cutoff), a)?;
            let ph = Expr::phase(a, true)?;
            for j in 1..=6 {
                let l = cat.l(n, j)?;
                let lt = cat.l_tilde(n, j)?;
                f_terms.push(Term {
                    label: format!("L({n},{j})"),
                    fast: prod(vec![l.clone(), gt.clone()]),
                    literal: prod(vec![lt.clone(), gt.clone()]),
                });
                g_terms.push(Term {
                    label: format!("L({n},{j})Φ"),
                    fast: prod(vec![l.clone(), ph.clone(), le.clone()]),
                    literal: prod(vec![lt.clone(), ph.clone(), le.clone()]),
                });
            }
        }
        for &(n, count) in &M_INDEX {
            for j in 1..=count {
                if skip.contains(&(n, j)) {
                    continue;
                }
                let m = cat.m(n, j)?;
                g_terms.push(Term {
                    label: format!("M({n},{j})"),
                    fast: m.clone(),
                    literal: m.sym(),
                });
            }
        }
        let ctx = cfg.context();
        let plans = |terms: &[Term]| -> Result<Vec<Arc<LambdaPlan>>> {
            terms
                .iter()
                .map(|t| LambdaPlan::build(&t.fast, &vec![cfg.radius; t.arity()], cfg.radius, &ctx))
                .collect()
        };
        Ok(NormalForm {
            params: *p,
            cfg: *cfg,
            f_plans: plans(&f_terms)?,
            g_plans: plans(&g_terms)?,
            f_terms,
            g_terms,
        })
    }

    pub fn params(&self) -> &EquationParams {
        &self.params
    }

    pub fn config(&self) -> &NormalFormConfig {
        &self.cfg
    }

    pub fn f_terms(&self) -> &[Term] {
        &self.f_terms
    }

    pub fn g_terms(&self) -> &[Term] {
        &self.g_terms
    }

    fn check_field(&self, v: &SpectralField) -> Result<()> {
        if v.radius() != self.cfg.radius {
            return Err(Error::RadiusMismatch(self.cfg.radius, v.radius()));
        }
        Ok(())
    }

    fn parts(plans: &[Arc<LambdaPlan>], v: &SpectralField, t: f64) -> Result<Vec<SpectralField>> {
        let mut memo = Memo::default();
        plans
            .iter()
            .map(|plan| {
                let inputs = vec![v; plan.arity()];
                Ok((*plan.eval_with(&inputs, t, &mut memo)?).clone())
            })
            .collect()
    }

    fn total(&self, parts: Vec<SpectralField>) -> SpectralField {
        parts
            .iter()
            .fold(SpectralField::zeros(self.cfg.radius), |acc, p| acc.add(p))
    }

    /// Each F term separately, in `f_terms` order.
    pub fn f_parts(&self, v: &SpectralField, t: f64) -> Result<Vec<SpectralField>> {
        self.check_field(v)?;
        NormalForm::parts(&self.f_plans, v, t)
    }

    /// Each G term separately, including the factor i.
    pub fn g_parts(&self, v: &SpectralField, t: f64) -> Result<Vec<SpectralField>> {
        self.check_field(v)?;
        let i = C64::new(0.0, 1.0);
        Ok(NormalForm::parts(&self.g_plans, v, t)?
            .into_iter()
            .map(|f| f.scale(i))
            .collect())
    }

    pub fn assemble_f(&self, v: &SpectralField, t: f64) -> Result<SpectralField> {
        Ok(self.total(self.f_parts(v, t)?))
    }

    pub fn assemble_g(&self, v: &SpectralField, t: f64) -> Result<SpectralField> {
        Ok(self.total(self.g_parts(v, t)?))
    }

    /// One F term by direct summation of the literal multiplier.
    pub fn f_part_direct(&self, idx: usize, v: &SpectralField, t: f64) -> Result<SpectralField> {
        self.direct(&self.f_terms, idx, v, t, C64::new(1.0, 0.0))
    }

    /// One G term by direct summation of the literal multiplier.
    pub fn g_part_direct(&self, idx: usize, v: &SpectralField, t: f64) -> Result<SpectralField> {
        self.direct(&self.g_terms, idx, v, t, C64::new(0.0, 1.0))
    }

    fn direct(
        &self,
        terms: &[Term],
        idx: usize,
        v: &SpectralField,
        t: f64,
        factor: C64,
    ) -> Result<SpectralField> {
        self.check_field(v)?;
        let term = terms
            .get(idx)
            .ok_or_else(|| Error::Usage(format!("no term with index {idx}")))?;
        let inputs = vec![v; term.arity()];
        Ok(lambda_eval(&term.literal, &inputs, t, &self.cfg.context())?.scale(factor))
    }
}

/// F(v)(t) for one configuration.
pub fn assemble_f(
    v: &SpectralField,
    t: f64,
    p: &EquationParams,
    cfg: &NormalFormConfig,
) -> Result<SpectralField> {
    NormalForm::new(p, cfg)?.assemble_f(v, t)
}

/// G(v)(t) for one configuration.
pub fn assemble_g(
    v: &SpectralField,
    t: f64,
    p: &EquationParams,
    cfg: &NormalFormConfig,
) -> Result<SpectralField> {
    NormalForm::new(p, cfg)?.assemble_g(v, t)
}

/// |D_t(v + F) - G|_{ℓ²_s} at interior times of one trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub dt: f64,
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

fn uniform_step(traj: &Trajectory) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::Usage(format!(
            "residual needs at least 3 time points, got {}",
            traj.len()
        )));
    }
    let dt = traj.times[1] - traj.times[0];
    let tol = 1e-9 * dt.abs();
    if dt == 0.0
        || traj
            .times
            .windows(2)
            .any(|w| ((w[1] - w[0]) - dt).abs() > tol)
    {
        return Err(Error::Usage("residual needs a uniform time step".into()));
    }
    Ok(dt)
}

/// Residual of the normal-form identity along an interaction-picture
/// trajectory, at every interior time.
pub fn nf_residual(traj: &Trajectory, nf: &NormalForm) -> Result<ResidualReport> {
    uniform_step(traj)?;
    let idx: Vec<usize> = (1..traj.len() - 1).collect();
    residual_at(traj, nf, &idx)
}

fn residual_at(traj: &Trajectory, nf: &NormalForm, idx: &[usize]) -> Result<ResidualReport> {
    let dt = uniform_step(traj)?;
    if let Some(&bad) = idx.iter().find(|&&i| i == 0 || i + 1 >= traj.len()) {
        return Err(Error::Usage(format!("time index {bad} is not interior")));
    }
    let mut shifted = BTreeMap::new();
    for &i in idx {
        for j in [i - 1, i + 1] {
            if let std::collections::btree_map::Entry::Vacant(e) = shifted.entry(j) {
                let v = &traj.states[j];
                e.insert(v.add(&nf.assemble_f(v, traj.times[j])?));
            }
        }
    }
    let mut times = Vec::with_capacity(idx.len());
    let mut residuals = Vec::with_capacity(idx.len());
    for &i in idx {
        let h = traj.times[i + 1] - traj.times[i - 1];
        let d = shifted[&(i + 1)]
            .sub(&shifted[&(i - 1)])
            .scale(C64::new(1.0 / h, 0.0));
        let g = nf.assemble_g(&traj.states[i], traj.times[i])?;
        times.push(traj.times[i]);
        residuals.push(sobolev_norm(&d.sub(&g), nf.cfg.s));
    }
    Ok(ResidualReport {
        dt,
        times,
        residuals,
    })
}

/// A residual study: the same run at `dt`, `dt/2`, ... with residuals
/// compared at the interior times of the coarsest grid.
#[derive(Clone, Debug)]
pub struct ResidualStudy {
    pub dt: f64,
    pub horizon: f64,
    pub levels: usize,
    pub integrator: Integrator,
    /// M entries left out of G.
    pub skip: Vec<(usize, usize)>,
}

impl ResidualStudy {
    pub fn new(dt: f64, horizon: f64) -> Self {
        ResidualStudy {
            dt,
            horizon,
            levels: 3,
            integrator: Integrator::Rk4Interaction,
            skip: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub levels: Vec<ResidualReport>,
    /// log2 of successive ratios of the maximal residual.
    pub orders: Vec<f64>,
}

impl ConvergenceReport {
    /// Smallest observed order.
    pub fn order(&self) -> f64 {
        self.orders.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn finest(&self) -> f64 {
        self.levels.last().map(|r| r.max()).unwrap_or(f64::NAN)
    }
}

/// Integrates the gauged equation from `phi0` at each step size, moves to
/// the interaction picture and measures the normal-form residual.
pub fn residual_study(
    phi0: &SpectralField,
    p: &EquationParams,
    cutoff: f64,
    s: f64,
    study: &ResidualStudy,
) -> Result<ConvergenceReport> {
    if study.levels < 3 {
        return Err(Error::Usage(format!(
            "order estimate needs at least 3 step sizes, got {}",
            study.levels
        )));
    }
    let coarse = (study.horizon / study.dt).round();
    if !(coarse >= 2.0) || ((coarse * study.dt - study.horizon).abs() > 1e-9 * study.horizon.abs())
    {
        return Err(Error::Usage(
            "horizon must be at least two whole coarse steps".into(),
        ));
    }
    let coarse = coarse as usize;
    let gamma = p.lambda5.value() * e1(phi0);
    let mut cfg = NormalFormConfig::new(phi0.radius(), Coef::real(gamma)).with_cutoff(cutoff);
    cfg.s = s;
    let nf = NormalForm::ablated(p, &cfg, &study.skip)?;
    let mut levels = Vec::with_capacity(study.levels);
    for l in 0..study.levels {
        let refine = 1usize << l;
        let mut scfg = SolverConfig::new(
            Form::Nls43,
            phi0.radius(),
            study.dt / refine as f64,
            study.horizon,
        );
        scfg.integrator = study.integrator;
        let traj = integrate(phi0, p, &scfg)?;
        let v = interaction_picture(&traj, gamma);
        let idx: Vec<usize> = (1..coarse).map(|i| i * refine).collect();
        levels.push(residual_at(&v, &nf, &idx)?);
    }
    let orders = levels
        .windows(2)
        .map(|w| (w[0].max() / w[1].max()).log2())
        .collect();
    Ok(ConvergenceReport { levels, orders })
}
