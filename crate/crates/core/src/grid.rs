//! Periodic grids on a box of length `L` and their Fourier transforms.
//!
//! The transform approximates the integral `f̂(ξ) = ∫ f(x) e^{−iξx} dx` by the
//! Riemann sum `(L/n) Σⱼ f(xⱼ) e^{−iξₖxⱼ}` with `xⱼ = −L/2 + jL/n`, so that
//! coefficients carry continuum units. The inverse is the Fourier series
//! `f(xⱼ) = (1/L) Σₖ f̂(ξₖ) e^{iξₖxⱼ}`.
//!
//! Coefficients are stored in FFT order: slot `i` holds wavenumber index
//! `k = i` for `i ≤ n/2` and `k = i − n` otherwise, so the represented set is
//! `{−n/2+1, …, n/2}`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// A pair of FFT plans of one length.
#[derive(Clone)]
pub(crate) struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Plans {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    /// Unnormalized `Σ a_j e^{−2πi jk/n}` in place.
    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    /// Unnormalized `Σ a_k e^{+2πi jk/n}` in place.
    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
    }
}

/// Signed wavenumber index of FFT slot `i` on an `n`-point grid.
pub fn signed_index(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// FFT slot of signed index `k`, or `None` when `k` is outside `{−n/2+1, …, n/2}`.
pub fn slot_of(k: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if k > half || k <= -half {
        None
    } else if k >= 0 {
        Some(k as usize)
    } else {
        Some((k + n as i64) as usize)
    }
}

/// `(−1)^k` for a signed index.
pub(crate) fn parity(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `n` equispaced points on `[−L/2, L/2)`.
#[derive(Clone)]
pub struct SpatialGrid {
    n: usize,
    box_length: f64,
    plans: Plans,
}

impl fmt::Debug for SpatialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpatialGrid").field("n", &self.n).field("box_length", &self.box_length).finish()
    }
}

impl PartialEq for SpatialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.box_length == other.box_length
    }
}

impl SpatialGrid {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(invalid(format!("grid size {n} must be a power of two no smaller than 8")));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(invalid(format!("box length {box_length} must be positive")));
        }
        Ok(Self { n, box_length, plans: Plans::new(n) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Wavenumber spacing `2π/L`.
    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.box_length + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Wavenumber held in FFT slot `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        signed_index(i, self.n) as f64 * self.dxi()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Samples `f` at the grid points.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField { grid: self.clone(), values: self.points().into_iter().map(f).collect() }
    }

    /// Forward transform of complex samples, in FFT order.
    pub fn forward_complex(&self, values: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.n, "sample count does not match grid");
        let mut buf = values.to_vec();
        self.plans.forward(&mut buf);
        let dx = self.dx();
        for (i, c) in buf.iter_mut().enumerate() {
            *c *= dx * parity(signed_index(i, self.n));
        }
        buf
    }

    /// Inverse transform to complex samples.
    pub fn inverse_complex(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(coeffs.len(), self.n, "coefficient count does not match grid");
        let mut buf: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * parity(signed_index(i, self.n)))
            .collect();
        self.plans.inverse(&mut buf);
        let scale = 1.0 / self.box_length;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        buf
    }
}

/// Real samples on a spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: SpatialGrid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(invalid(format!("{} samples for a {}-point grid", values.len(), grid.n())));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &SpatialGrid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.n()] }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ u dx` by the rectangle rule.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    /// `∫ u² dx` by the rectangle rule.
    pub fn l2_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.dx()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Fourier coefficients on a spatial grid, in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: SpatialGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: SpatialGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(invalid(format!("{} coefficients for a {}-point grid", coeffs.len(), grid.n())));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: &SpatialGrid) -> Self {
        Self { grid: grid.clone(), coeffs: vec![Complex64::new(0.0, 0.0); grid.n()] }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at signed index `k`, zero outside the represented band.
    pub fn at(&self, k: i64) -> Complex64 {
        slot_of(k, self.grid.n()).map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// Multiplies slot `i` by `m(i, ξᵢ)`.
    pub fn map_modes(&self, m: impl Fn(usize, f64) -> Complex64) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * m(i, self.grid.wavenumber(i)))
            .collect();
        SpectralField { grid: self.grid.clone(), coeffs }
    }

    /// Largest violation of `ĉ(−ξ) = conj ĉ(ξ)` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            let k = signed_index(i, n);
            if let Some(j) = slot_of(-k, n) {
                worst = worst.max((self.coeffs[i] - self.coeffs[j].conj()).norm());
            } else {
                // the Nyquist mode is its own mirror and must be real
                worst = worst.max(self.coeffs[i].im.abs());
            }
        }
        worst / scale
    }
}

pub fn forward(f: &RealField) -> SpectralField {
    let samples: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    SpectralField { grid: f.grid.clone(), coeffs: f.grid.forward_complex(&samples) }
}

/// Inverse transform, keeping the real part.
pub fn inverse(f: &SpectralField) -> RealField {
    let values = f.grid.inverse_complex(&f.coeffs).into_iter().map(|c| c.re).collect();
    RealField { grid: f.grid.clone(), values }
}

/// `(iξ)^order` applied mode by mode, `order ∈ {1, 2, 3}`.
pub fn spectral_derivative(f: &SpectralField, order: u32) -> Result<SpectralField> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidParameter(format!("derivative order {order} is not 1, 2 or 3")));
    }
    let grid = f.grid.clone();
    Ok(f.map_modes(|i, xi| {
        if order % 2 == 1 && grid.is_nyquist(i) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi).powu(order)
        }
    }))
}

/// The multiplier `−i sgn ξ`, with the mean and Nyquist modes annihilated.
pub fn hilbert(f: &SpectralField) -> SpectralField {
    let grid = f.grid.clone();
    f.map_modes(|i, xi| {
        if grid.is_nyquist(i) || xi == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -xi.signum())
        }
    })
}

/// Zeroes every mode with `|k| > n/3`.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let n = f.grid.n();
    let cut = (n / 3) as i64;
    let mut out = f.clone();
    for (i, c) in out.coeffs.iter_mut().enumerate() {
        if signed_index(i, n).abs() > cut {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    out
}

/// Transform of the pointwise product `uv`, computed on the grid and
/// truncated to `|k| ≤ n/3`.
pub fn dealiased_product(u: &SpectralField, v: &SpectralField) -> SpectralField {
    let uu = u.grid.inverse_complex(&dealias(u).coeffs);
    let vv = v.grid.inverse_complex(&dealias(v).coeffs);
    let prod: Vec<Complex64> = uu.iter().zip(&vv).map(|(a, b)| a * b).collect();
    dealias(&SpectralField { grid: u.grid.clone(), coeffs: u.grid.forward_complex(&prod) })
}
