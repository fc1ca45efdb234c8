//! Truncated Fourier coefficients, transforms and norms.
//!
//! Coefficients are stored contiguously for k = -K..=K, so slot `k + K` holds
//! frequency `k`. The forward transform divides by the grid size, which makes
//! the mean-value integral over the torus equal to the zeroth coefficient.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Fourier coefficients on `-K..=K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<[f64; 2]>", try_from = "Vec<[f64; 2]>")]
pub struct SpectralField {
    radius: usize,
    coeffs: Vec<C64>,
}

impl SpectralField {
    pub fn zeros(radius: usize) -> Self {
        SpectralField {
            radius,
            coeffs: vec![C64::new(0.0, 0.0); 2 * radius + 1],
        }
    }

    pub fn from_coeffs(radius: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != 2 * radius + 1 {
            return Err(Error::Usage(format!(
                "{} coefficients do not match radius {radius}",
                coeffs.len()
            )));
        }
        if coeffs
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::Usage("non-finite coefficient".into()));
        }
        Ok(SpectralField { radius, coeffs })
    }

    /// `c` at frequency `k`, zero elsewhere.
    pub fn mode(radius: usize, k: i64, c: C64) -> Self {
        let mut f = SpectralField::zeros(radius);
        f.set(k, c);
        f
    }

    /// Unit coefficient at `k`.
    pub fn delta(radius: usize, k: i64) -> Self {
        SpectralField::mode(radius, k, C64::new(1.0, 0.0))
    }

    pub fn from_fn(radius: usize, f: impl FnMut(i64) -> C64) -> Self {
        let r = radius as i64;
        SpectralField {
            radius,
            coeffs: (-r..=r).map(f).collect(),
        }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    /// Coefficient at `k`; zero outside the stored band.
    pub fn get(&self, k: i64) -> C64 {
        let r = self.radius as i64;
        if k < -r || k > r {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + r) as usize]
        }
    }

    /// Panics when `k` is outside the band.
    pub fn set(&mut self, k: i64, c: C64) {
        let r = self.radius as i64;
        assert!(k.abs() <= r, "frequency {k} outside radius {r}");
        self.coeffs[(k + r) as usize] = c;
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let r = self.radius as i64;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (i as i64 - r, *c))
    }

    /// Multiplies slot `k` by `f(k)`.
    pub fn map_modes(&self, f: impl Fn(i64, C64) -> C64) -> Self {
        let r = self.radius as i64;
        SpectralField {
            radius: self.radius,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| f(i as i64 - r, *c))
                .collect(),
        }
    }

    /// Same coefficients on a different band, zero-padded or cut.
    pub fn resized(&self, radius: usize) -> Self {
        SpectralField::from_fn(radius, |k| self.get(k))
    }

    pub fn reflect(&self) -> Self {
        SpectralField::from_fn(self.radius, |k| self.get(-k))
    }

    pub fn scale(&self, a: C64) -> Self {
        self.map_modes(|_, c| a * c)
    }

    pub fn add(&self, o: &SpectralField) -> Self {
        let r = self.radius.max(o.radius);
        SpectralField::from_fn(r, |k| self.get(k) + o.get(k))
    }

    pub fn sub(&self, o: &SpectralField) -> Self {
        let r = self.radius.max(o.radius);
        SpectralField::from_fn(r, |k| self.get(k) - o.get(k))
    }

    pub fn axpy(&mut self, a: C64, x: &SpectralField) {
        debug_assert_eq!(self.radius, x.radius);
        for (y, xv) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *y += a * xv;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl From<SpectralField> for Vec<[f64; 2]> {
    fn from(f: SpectralField) -> Self {
        f.coeffs.iter().map(|c| [c.re, c.im]).collect()
    }
}

impl TryFrom<Vec<[f64; 2]>> for SpectralField {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        if v.len() % 2 == 0 {
            return Err(Error::Usage(format!(
                "spectral field needs an odd number of entries, got {}",
                v.len()
            )));
        }
        let radius = v.len() / 2;
        SpectralField::from_coeffs(radius, v.into_iter().map(|[a, b]| C64::new(a, b)).collect())
    }
}

/// Samples at x_j = 2 pi j / M.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    samples: Vec<C64>,
}

impl PhysicalField {
    pub fn new(samples: Vec<C64>) -> Self {
        PhysicalField { samples }
    }

    pub fn from_fn(m: usize, f: impl Fn(f64) -> C64) -> Self {
        let h = 2.0 * std::f64::consts::PI / m as f64;
        PhysicalField {
            samples: (0..m).map(|j| f(h * j as f64)).collect(),
        }
    }

    pub fn grid(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [C64] {
        &mut self.samples
    }

    /// Mean over the grid, i.e. the torus integral for band-limited data.
    pub fn mean(&self) -> C64 {
        self.samples.iter().sum::<C64>() / self.samples.len() as f64
    }
}

/// Cached forward/inverse plans for one grid size.
pub struct Grid {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

thread_local! {
    static GRIDS: RefCell<HashMap<usize, Arc<Grid>>> = RefCell::new(HashMap::new());
}

impl Grid {
    /// Plans are cached per thread.
    pub fn get(m: usize) -> Arc<Grid> {
        GRIDS.with(|g| {
            g.borrow_mut()
                .entry(m)
                .or_insert_with(|| {
                    let mut planner = FftPlanner::new();
                    Arc::new(Grid {
                        m,
                        fwd: planner.plan_fft_forward(m),
                        inv: planner.plan_fft_inverse(m),
                    })
                })
                .clone()
        })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn to_physical(&self, f: &SpectralField) -> Result<PhysicalField> {
        check_grid(self.m, f.radius)?;
        let mut buf = vec![C64::new(0.0, 0.0); self.m];
        for (k, c) in f.iter() {
            buf[k.rem_euclid(self.m as i64) as usize] = c;
        }
        self.inv.process(&mut buf);
        Ok(PhysicalField { samples: buf })
    }

    pub fn to_spectral(&self, p: &PhysicalField, radius: usize) -> Result<SpectralField> {
        check_grid(p.grid(), radius)?;
        if p.grid() != self.m {
            return Err(Error::Usage(format!(
                "field on {} points passed to a grid of {}",
                p.grid(),
                self.m
            )));
        }
        let mut buf = p.samples.clone();
        self.fwd.process(&mut buf);
        let scale = 1.0 / self.m as f64;
        Ok(SpectralField::from_fn(radius, |k| {
            buf[k.rem_euclid(self.m as i64) as usize] * scale
        }))
    }
}

fn check_grid(m: usize, radius: usize) -> Result<()> {
    let needed = 2 * radius + 1;
    if m < needed {
        return Err(Error::Undersampled {
            grid: m,
            radius,
            needed,
        });
    }
    Ok(())
}

/// Smallest 2^a 3^b 5^c that is at least `n`.
pub fn fft_size(n: usize) -> usize {
    (n.max(1)..)
        .find(|&m| {
            let mut x = m;
            for p in [2, 3, 5] {
                while x % p == 0 {
                    x /= p;
                }
            }
            x == 1
        })
        .unwrap()
}

/// Grid size for products of `factors` band-limited fields of radius `radius`.
pub fn padded_grid(radius: usize, factors: usize) -> usize {
    fft_size(factors * (2 * radius + 1))
}

pub fn to_spectral(p: &PhysicalField, radius: usize) -> Result<SpectralField> {
    Grid::get(p.grid()).to_spectral(p, radius)
}

pub fn to_physical(f: &SpectralField, m: usize) -> Result<PhysicalField> {
    check_grid(m, f.radius)?;
    Grid::get(m).to_physical(f)
}

/// Weighted norm (sum (1+k^2)^s |c_k|^2)^(1/2).
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    f.iter()
        .map(|(k, c)| (1.0 + (k * k) as f64).powf(s) * c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// (f*g)(k) = sum_m f(k-m) g(m), on radius 2K.
pub fn convolve(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    if f.radius != g.radius {
        return Err(Error::RadiusMismatch(f.radius, g.radius));
    }
    let r = f.radius as i64;
    let mut out = SpectralField::zeros(2 * f.radius);
    for (a, fa) in f.iter() {
        for (b, gb) in g.iter() {
            out.coeffs[(a + b + 2 * r) as usize] += fa * gb;
        }
    }
    Ok(out)
}

/// (f twisted* g)(k) = sum_m f(k+m) g(m), on radius 2K.
pub fn twisted_convolve(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    if f.radius != g.radius {
        return Err(Error::RadiusMismatch(f.radius, g.radius));
    }
    let r = f.radius as i64;
    let mut out = SpectralField::zeros(2 * f.radius);
    for (a, fa) in f.iter() {
        for (b, gb) in g.iter() {
            out.coeffs[(a - b + 2 * r) as usize] += fa * gb;
        }
    }
    Ok(out)
}
