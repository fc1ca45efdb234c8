//! Experiment specification read from TOML.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nls4::normal_form::NormalFormConfig;
use nls4::solver::{analytic_datum, smooth_datum, Form, SolverConfig};
use nls4::{Coef, EquationParams, SpectralField, C64};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default = "default_solver")]
    pub solver: SolverConfig,
    #[serde(default = "default_normal_form")]
    pub normal_form: NormalFormConfig,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub simulate: SimulateSpec,
    #[serde(default)]
    pub identities: IdentitiesSpec,
    #[serde(default)]
    pub bounds: BoundsSpec,
    #[serde(default)]
    pub residual: ResidualSpec,
    #[serde(default)]
    pub scan: ScanSpec,
    #[serde(default)]
    pub continuity: ContinuitySpec,
}

fn default_solver() -> SolverConfig {
    SolverConfig::new(Form::Nls41, 32, 1e-4, 0.1)
}

fn default_normal_form() -> NormalFormConfig {
    NormalFormConfig::new(6, Coef::ZERO).with_cutoff(4.0)
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        toml::from_str("").expect("empty spec uses defaults")
    }
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn equation(&self) -> Result<EquationParams> {
        self.params.resolve()
    }
}

/// Named preset or the five explicit coefficients. Presets only accept the
/// lambdas they are parameterized by.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub preset: Option<String>,
    pub lambda1: Option<Coef>,
    pub lambda2: Option<Coef>,
    pub lambda3: Option<Coef>,
    pub lambda4: Option<Coef>,
    pub lambda5: Option<Coef>,
    pub mu: Option<Coef>,
    pub lambda6: Option<Coef>,
}

impl ParamsSpec {
    fn need(&self, v: Option<Coef>, field: &str) -> Result<Coef> {
        v.with_context(|| format!("params.{field} is required (or choose params.preset)"))
    }

    pub fn resolve(&self) -> Result<EquationParams> {
        let mut p = match self.preset.as_deref() {
            None => EquationParams::new(
                self.need(self.lambda1, "lambda1")?,
                self.need(self.lambda2, "lambda2")?,
                self.need(self.lambda3, "lambda3")?,
                self.need(self.lambda4, "lambda4")?,
                self.need(self.lambda5, "lambda5")?,
            ),
            Some(name) => self.preset(name)?,
        };
        if let Some(mu) = self.mu {
            p.mu = mu;
        }
        if let Some(l6) = self.lambda6 {
            p.lambda6 = l6;
        }
        Ok(p)
    }

    fn preset(&self, name: &str) -> Result<EquationParams> {
        let p = match name {
            "linear" => {
                if self.lambda1.or(self.lambda2).or(self.lambda3).or(self.lambda4).or(self.lambda5).is_some() {
                    bail!("params: the linear preset takes no coefficients");
                }
                EquationParams::linear()
            }
            "integrable" => {
                if self.lambda1.or(self.lambda2).or(self.lambda3).or(self.lambda5).is_some() {
                    bail!("params: the integrable preset only takes lambda4");
                }
                EquationParams::integrable(self.lambda4.unwrap_or(Coef::int(1)))
            }
            "hamiltonian" => {
                if self.lambda3.or(self.lambda5).is_some() {
                    bail!("params: the hamiltonian preset takes lambda1, lambda2, lambda4");
                }
                EquationParams::hamiltonian(
                    self.need(self.lambda2, "lambda2")?,
                    self.need(self.lambda4, "lambda4")?,
                    self.need(self.lambda1, "lambda1")?,
                )
            }
            "generic-theorem" => EquationParams::generic_theorem([
                self.need(self.lambda1, "lambda1")?,
                self.need(self.lambda2, "lambda2")?,
                self.need(self.lambda3, "lambda3")?,
                self.need(self.lambda4, "lambda4")?,
                self.need(self.lambda5, "lambda5")?,
            ])
            .context("params")?,
            other => bail!(
                "params.preset: unknown preset {other:?} (linear, integrable, hamiltonian, generic-theorem)"
            ),
        };
        Ok(p)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Initial datum: a named family scaled by `amplitude`, or explicit modes.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(default = "smooth")]
    pub preset: String,
    #[serde(default = "unit")]
    pub amplitude: f64,
    #[serde(default)]
    pub modes: Vec<Mode>,
}

fn smooth() -> String {
    "smooth".into()
}

fn unit() -> f64 {
    1.0
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec {
            preset: smooth(),
            amplitude: 1.0,
            modes: Vec::new(),
        }
    }
}

impl DataSpec {
    /// Builds the datum on `radius` modes.
    pub fn field(&self, radius: usize, seed: u64) -> Result<SpectralField> {
        if !self.amplitude.is_finite() {
            bail!("data.amplitude must be finite");
        }
        let base = match self.preset.as_str() {
            "smooth" => smooth_datum(radius),
            "analytic" => analytic_datum(radius, 1.0, seed),
            "modes" => {
                if self.modes.is_empty() {
                    bail!("data.modes must list at least one mode for the modes preset");
                }
                let mut f = SpectralField::zeros(radius);
                for (i, m) in self.modes.iter().enumerate() {
                    if m.k.unsigned_abs() as usize > radius {
                        bail!("data.modes[{i}].k = {} exceeds the radius {radius}", m.k);
                    }
                    f.set(m.k, C64::new(m.re, m.im));
                }
                f
            }
            other => bail!("data.preset: unknown datum {other:?} (smooth, analytic, modes)"),
        };
        Ok(base.scale(C64::new(self.amplitude, 0.0)))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSpec {
    /// Largest relative drift allowed for the functionals the coefficients
    /// conserve.
    pub drift_tolerance: f64,
    /// Sobolev index of the reported norm.
    pub s: f64,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        SimulateSpec {
            drift_tolerance: 1e-6,
            s: 1.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitiesSpec {
    /// Box radius for the cubic identities; defaults to normal_form.radius.
    pub cubic_radius: Option<i64>,
    /// Box radius for the quintic identities; defaults to normal_form.radius.
    pub quintic_radius: Option<i64>,
    pub samples: usize,
    pub sample_max: i64,
}

impl Default for IdentitiesSpec {
    fn default() -> Self {
        IdentitiesSpec {
            cubic_radius: None,
            quintic_radius: None,
            samples: 2000,
            sample_max: 100_000,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSpec {
    pub samples: usize,
    /// Largest frequency drawn by the pointwise sampler.
    pub limit: i64,
    pub cancellation_samples: usize,
    pub max_k5: i64,
    pub growth_exponent: f64,
    pub growth_tolerance: f64,
    pub leading_samples: usize,
    pub leading_range: i64,
    /// Radius of the exhaustive cubic certificate sweep.
    pub certificate_radius: i64,
    /// Quintic tuples sampled for the certificate sweep.
    pub certificate_samples: usize,
}

impl Default for BoundsSpec {
    fn default() -> Self {
        BoundsSpec {
            samples: 100_000,
            limit: 10_000,
            cancellation_samples: 10_000,
            max_k5: 1_000_000,
            growth_exponent: 1.0,
            growth_tolerance: 0.1,
            leading_samples: 200,
            leading_range: 1000,
            certificate_radius: 40,
            certificate_samples: 100_000,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResidualSpec {
    pub dt: f64,
    pub horizon: f64,
    pub levels: usize,
    pub min_order: f64,
    /// G entries left out, as [arity index, term index] pairs.
    pub skip: Vec<(usize, usize)>,
}

impl Default for ResidualSpec {
    fn default() -> Self {
        ResidualSpec {
            dt: 1e-4,
            horizon: 8e-4,
            levels: 3,
            min_order: 2.0,
            skip: Vec::new(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSpec {
    pub n_min: u64,
    pub n_max: u64,
    /// Expected log-log slope of the ratio column.
    pub ratio_slope: f64,
    pub slope_tolerance: f64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec {
            n_min: 2,
            n_max: 20,
            ratio_slope: -5.0,
            slope_tolerance: 0.5,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuitySpec {
    pub eps: Vec<f64>,
    pub s: f64,
    /// Largest relative spread of the difference quotients.
    pub spread_tolerance: f64,
    pub perturbation_amplitude: f64,
}

impl Default for ContinuitySpec {
    fn default() -> Self {
        ContinuitySpec {
            eps: vec![1e-2, 1e-3, 1e-4],
            s: 1.0,
            spread_tolerance: 0.05,
            perturbation_amplitude: 1.0,
        }
    }
}
