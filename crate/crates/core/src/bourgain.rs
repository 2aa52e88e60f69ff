//! Sobolev and Bourgain norms on discretized fields, and the smooth time
//! cutoff `ψ`.
//!
//! Norms carry a Plancherel factor `1/2π` per transformed dimension:
//!
//! ```text
//! ‖f‖²_{H^s}     = (1/2π)   Σₖ   ⟨ξₖ⟩^{2s} |f̂(ξₖ)|² Δξ
//! ‖u‖²_{X_{s,b}} = (1/2π)² Σₖ,ₘ ⟨ξₖ⟩^{2s} ⟨τₘ − p(ξₖ)⟩^{2b} |û(ξₖ,τₘ)|² Δξ Δτ
//! ```
//!
//! so that `s = b = 0` reproduces the grid `L²` norm exactly.
//!
//! The time axis is `[−T_w, T_w)` with `nt` samples and dual frequencies
//! `τₘ = πm/T_w`. A sampled time series only determines `τ` modulo
//! `2π/Δt`; [`TauLabels::Centered`] resolves that ambiguity per spatial
//! mode by taking the representative nearest the characteristic `p(ξₖ)`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{phase, DispersionParams};
use crate::error::{invalid, Result};
use crate::grid::{parity, signed_index, Plans, RealField, SpatialGrid, SpectralField};

/// `⟨x⟩ = (1 + x²)^{1/2}`.
pub fn japanese(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Regularity indices of `X_{s,b,p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BourgainIndex {
    pub s: f64,
    pub b: f64,
}

impl BourgainIndex {
    pub fn new(s: f64, b: f64) -> Self {
        Self { s, b }
    }
}

/// `⟨ξ⟩^s ⟨λ⟩^b`.
pub fn weight(idx: BourgainIndex, xi: f64, lambda: f64) -> f64 {
    japanese(xi).powf(idx.s) * japanese(lambda).powf(idx.b)
}

/// A uniform space-time grid on `[−L/2, L/2) × [−T_w, T_w)`.
#[derive(Clone)]
pub struct SpaceTimeGrid {
    spatial: SpatialGrid,
    nt: usize,
    t_window: f64,
    tplans: Plans,
}

impl fmt::Debug for SpaceTimeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpaceTimeGrid")
            .field("spatial", &self.spatial)
            .field("nt", &self.nt)
            .field("t_window", &self.t_window)
            .finish()
    }
}

impl PartialEq for SpaceTimeGrid {
    fn eq(&self, o: &Self) -> bool {
        self.spatial == o.spatial && self.nt == o.nt && self.t_window == o.t_window
    }
}

impl SpaceTimeGrid {
    pub fn new(spatial: SpatialGrid, nt: usize, t_window: f64) -> Result<Self> {
        if nt < 2 || !nt.is_power_of_two() {
            return Err(invalid(format!("time samples {nt} must be a power of two")));
        }
        if !(t_window.is_finite() && t_window > 0.0) {
            return Err(invalid(format!("time window {t_window} must be positive")));
        }
        Ok(Self { spatial, nt, t_window, tplans: Plans::new(nt) })
    }

    pub fn spatial(&self) -> &SpatialGrid {
        &self.spatial
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn t_window(&self) -> f64 {
        self.t_window
    }

    pub fn dt(&self) -> f64 {
        2.0 * self.t_window / self.nt as f64
    }

    /// Spacing `π/T_w` of the temporal frequencies.
    pub fn dtau(&self) -> f64 {
        PI / self.t_window
    }

    pub fn t(&self, l: usize) -> f64 {
        -self.t_window + l as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.nt).map(|l| self.t(l)).collect()
    }

    /// Index of the sample at `t = 0`.
    pub fn origin(&self) -> usize {
        self.nt / 2
    }

    fn len(&self) -> usize {
        self.nt * self.spatial.n()
    }
}

/// Complex samples `u(xⱼ, t_l)`, stored row by row in time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: SpaceTimeGrid,
    values: Vec<Complex64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: &SpaceTimeGrid) -> Self {
        Self { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: &SpaceTimeGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let n = grid.spatial.n();
        let mut values = Vec::with_capacity(grid.len());
        for l in 0..grid.nt {
            let t = grid.t(l);
            for j in 0..n {
                values.push(f(grid.spatial.x(j), t));
            }
        }
        Self { grid: grid.clone(), values }
    }

    /// Time slices given as functions of the slice time.
    pub fn from_slices(grid: &SpaceTimeGrid, slice: impl Fn(f64) -> Vec<Complex64> + Sync) -> Self {
        let n = grid.spatial.n();
        let rows: Vec<Vec<Complex64>> = (0..grid.nt).into_par_iter().map(|l| slice(grid.t(l))).collect();
        let mut values = Vec::with_capacity(grid.len());
        for row in rows {
            assert_eq!(row.len(), n, "slice length does not match grid");
            values.extend(row);
        }
        Self { grid: grid.clone(), values }
    }

    /// `W(t)u₀` sampled on every slice: mode `ξ` picks up `e^{itp(ξ)}`.
    pub fn free_evolution(grid: &SpaceTimeGrid, u0: &SpectralField, params: &DispersionParams) -> Self {
        let sg = grid.spatial.clone();
        let phases: Vec<f64> = sg.wavenumbers().iter().map(|&xi| phase(params, xi)).collect();
        Self::from_slices(grid, |t| {
            let c: Vec<Complex64> =
                u0.coeffs().iter().zip(&phases).map(|(c, &p)| c * Complex64::from_polar(1.0, t * p)).collect();
            sg.inverse_complex(&c)
        })
    }

    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn slice(&self, l: usize) -> &[Complex64] {
        let n = self.grid.spatial.n();
        &self.values[l * n..(l + 1) * n]
    }

    pub fn slice_mut(&mut self, l: usize) -> &mut [Complex64] {
        let n = self.grid.spatial.n();
        &mut self.values[l * n..(l + 1) * n]
    }

    /// Real part of slice `l` as a spatial field.
    pub fn real_slice(&self, l: usize) -> RealField {
        RealField::new(self.grid.spatial.clone(), self.slice(l).iter().map(|c| c.re).collect())
            .expect("slice length matches grid")
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.norm() == 0.0)
    }

    /// Two-dimensional transform `û(ξₖ, τₘ) ≈ ∫∫ u e^{−i(xξ + tτ)} dx dt`.
    pub fn spectrum(&self) -> SpaceTimeSpectrum {
        let g = &self.grid;
        let (n, nt) = (g.spatial.n(), g.nt);
        let mut rows = self.values.clone();
        rows.par_chunks_mut(n).for_each(|row| {
            let c = g.spatial.forward_complex(row);
            row.copy_from_slice(&c);
        });
        let mut cols = transpose(&rows, nt, n);
        let dt = g.dt();
        cols.par_chunks_mut(nt).for_each(|col| {
            g.tplans.forward(col);
            for (i, c) in col.iter_mut().enumerate() {
                *c *= dt * parity(signed_index(i, nt));
            }
        });
        SpaceTimeSpectrum { grid: g.clone(), coeffs: transpose(&cols, n, nt) }
    }

    /// Multiplies every slice `l` by `m(t_l)`.
    pub fn time_modulate(&self, m: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for l in 0..self.grid.nt {
            let f = m(self.grid.t(l));
            for v in out.slice_mut(l) {
                *v *= f;
            }
        }
        out
    }
}

/// Row-major `rows × cols` to row-major `cols × rows`.
fn transpose(a: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}

/// Space-time Fourier coefficients; row `i` is temporal FFT slot `i`,
/// column `j` spatial FFT slot `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSpectrum {
    grid: SpaceTimeGrid,
    coeffs: Vec<Complex64>,
}

/// How temporal FFT slots are mapped to frequencies `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauLabels {
    /// `τ = πm/T_w` with `m ∈ {−nt/2+1, …, nt/2}`.
    Absolute,
    /// Per spatial mode, the alias of slot `m` nearest `p(ξₖ)`.
    #[default]
    Centered,
}

impl SpaceTimeSpectrum {
    pub fn grid(&self) -> &SpaceTimeGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn from_coeffs(grid: &SpaceTimeGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(invalid("coefficient count does not match grid"));
        }
        Ok(Self { grid: grid.clone(), coeffs })
    }

    /// Inverse of [`SpaceTimeField::spectrum`].
    pub fn to_field(&self) -> SpaceTimeField {
        let g = &self.grid;
        let (n, nt) = (g.spatial.n(), g.nt);
        let mut cols = transpose(&self.coeffs, nt, n);
        let scale = 1.0 / (2.0 * g.t_window);
        cols.par_chunks_mut(nt).for_each(|col| {
            for (i, c) in col.iter_mut().enumerate() {
                *c *= parity(signed_index(i, nt));
            }
            g.tplans.inverse(col);
            for c in col.iter_mut() {
                *c *= scale;
            }
        });
        let mut rows = transpose(&cols, n, nt);
        rows.par_chunks_mut(n).for_each(|row| {
            let c = g.spatial.inverse_complex(row);
            row.copy_from_slice(&c);
        });
        SpaceTimeField { grid: g.clone(), values: rows }
    }

    /// Temporal frequency of slot `i` for spatial mode `xi`.
    pub fn tau(&self, i: usize, xi: f64, params: &DispersionParams, labels: TauLabels) -> f64 {
        let nt = self.grid.nt;
        let dtau = self.grid.dtau();
        let m = match labels {
            TauLabels::Absolute => signed_index(i, nt),
            TauLabels::Centered => {
                let c = (phase(params, xi) / dtau).round() as i64;
                let d = (i as i64 - c).rem_euclid(nt as i64) as usize;
                c + signed_index(d, nt)
            }
        };
        m as f64 * dtau
    }

    /// `((1/2π)² Σ w(ξ,τ)² |û|² ΔξΔτ)^{1/2}` for an arbitrary weight.
    pub fn weighted_norm(&self, w: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
        let g = &self.grid;
        let n = g.spatial.n();
        let xis = g.spatial.wavenumbers();
        let taus: Vec<f64> = (0..g.nt).map(|i| signed_index(i, g.nt) as f64 * g.dtau()).collect();
        let sum: f64 = self
            .coeffs
            .par_chunks(n)
            .enumerate()
            .map(|(i, row)| row.iter().zip(&xis).map(|(c, &xi)| w(xi, taus[i]).powi(2) * c.norm_sqr()).sum::<f64>())
            .sum();
        (sum * g.spatial.dxi() * g.dtau()).sqrt() / (2.0 * PI)
    }

    /// The `X_{s,b,p}` norm with the chosen `τ` labelling.
    pub fn xsb_norm(&self, idx: BourgainIndex, params: &DispersionParams, labels: TauLabels) -> f64 {
        let g = &self.grid;
        let n = g.spatial.n();
        let nt = g.nt;
        let sum: f64 = (0..n)
            .into_par_iter()
            .map(|j| {
                let xi = g.spatial.wavenumber(j);
                let p = phase(params, xi);
                let ws = japanese(xi).powf(2.0 * idx.s);
                (0..nt)
                    .map(|i| {
                        let lam = self.tau(i, xi, params, labels) - p;
                        ws * japanese(lam).powf(2.0 * idx.b) * self.coeffs[i * n + j].norm_sqr()
                    })
                    .sum::<f64>()
            })
            .sum();
        (sum * g.spatial.dxi() * g.dtau()).sqrt() / (2.0 * PI)
    }
}

/// `‖f‖_{H^s}` of spectral coefficients.
pub fn hs_norm_spectral(f: &SpectralField, s: f64) -> f64 {
    let g = f.grid();
    let sum: f64 = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| japanese(g.wavenumber(i)).powf(2.0 * s) * c.norm_sqr())
        .sum();
    (sum * g.dxi() / (2.0 * PI)).sqrt()
}

/// `‖f‖_{H^s}` of physical samples.
pub fn hs_norm(f: &RealField, s: f64) -> f64 {
    hs_norm_spectral(&crate::grid::forward(f), s)
}

/// `‖u‖_{X_{s,b,p}}` with centred `τ` labels.
pub fn xsb_norm(u: &SpaceTimeField, idx: BourgainIndex, params: &DispersionParams) -> f64 {
    u.spectrum().xsb_norm(idx, params, TauLabels::Centered)
}

/// The `C^∞` plateau `ψ`, equal to 1 on `|t| ≤ 1` and 0 on `|t| ≥ 2`:
/// `ψ(t) = S(2−|t|) / (S(2−|t|) + S(|t|−1))` with `S(r) = e^{−1/r}` for
/// `r > 0` and `S(r) = 0` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BumpFunction;

impl BumpFunction {
    /// `ψ(1.5)`; the profile is symmetric about the middle of its ramp.
    pub const MIDPOINT_VALUE: f64 = 0.5;

    pub fn eval(&self, t: f64) -> f64 {
        fn s(r: f64) -> f64 {
            if r > 0.0 {
                (-1.0 / r).exp()
            } else {
                0.0
            }
        }
        let a = t.abs();
        if a <= 1.0 {
            return 1.0;
        }
        if a >= 2.0 {
            return 0.0;
        }
        let up = s(2.0 - a);
        up / (up + s(a - 1.0))
    }
}

pub fn bump(t: f64, shape: BumpFunction) -> f64 {
    shape.eval(t)
}

/// Multiplies slice `t` by `ψ(t/δ)`.
pub fn apply_time_cutoff(u: &SpaceTimeField, delta: f64) -> Result<SpaceTimeField> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("cutoff scale {delta} must be positive")));
    }
    Ok(u.time_modulate(|t| BumpFunction.eval(t / delta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::forward;
    use approx::assert_relative_eq;

    fn st(n: usize, l: f64, nt: usize, tw: f64) -> SpaceTimeGrid {
        SpaceTimeGrid::new(SpatialGrid::new(n, l).unwrap(), nt, tw).unwrap()
    }

    fn kdv() -> DispersionParams {
        DispersionParams::kdv()
    }

    #[test]
    fn bump_profile() {
        let b = BumpFunction;
        assert_eq!(b.eval(0.3), 1.0);
        assert_eq!(b.eval(-1.0), 1.0);
        assert_eq!(b.eval(2.0), 0.0);
        assert_eq!(b.eval(-7.0), 0.0);
        assert_relative_eq!(b.eval(1.5), BumpFunction::MIDPOINT_VALUE, max_relative = 1e-15);
        let mut last = 1.0;
        for i in 0..=100 {
            let v = b.eval(1.0 + i as f64 / 100.0);
            assert!((0.0..=1.0).contains(&v) && v <= last);
            last = v;
        }
    }

    #[test]
    fn hs_norm_zero_is_l2() {
        let g = SpatialGrid::new(128, 8.0).unwrap();
        let f = g.sample(|x| (x * 0.5).cos() * (-x * x / 3.0).exp());
        assert_relative_eq!(hs_norm(&f, 0.0), f.l2_squared().sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn hs_norm_single_mode() {
        let g = SpatialGrid::new(32, 4.0).unwrap();
        let mut c = SpectralField::zeros(&g);
        c.coeffs_mut()[3] = Complex64::new(1.0, 0.0);
        let xi = g.wavenumber(3);
        let expect = japanese(xi).powf(1.5) * (g.dxi() / (2.0 * PI)).sqrt();
        assert_relative_eq!(hs_norm_spectral(&c, 1.5), expect, max_relative = 1e-14);
    }

    #[test]
    fn hs_norm_gaussian_matches_continuum() {
        // ∫(1+ξ²)|√π e^{−ξ²/4}|² dξ = 2π√(2π)
        let g = SpatialGrid::new(1024, 40.0).unwrap();
        let f = g.sample(|x| (-x * x).exp());
        let exact = (2.0 * PI).sqrt().sqrt();
        assert!((hs_norm(&f, 1.0) - exact).abs() < 1e-6);
    }

    #[test]
    fn spectrum_round_trip() {
        let g = st(16, 6.0, 32, 2.0);
        let u = SpaceTimeField::from_fn(&g, |x, t| Complex64::new((x - t).sin() * (-t * t).exp(), 0.3 * x.cos()));
        let back = u.spectrum().to_field();
        for (a, b) in u.values().iter().zip(back.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_index_is_space_time_l2() {
        let g = st(32, 10.0, 32, 3.0);
        let u = SpaceTimeField::from_fn(&g, |x, t| Complex64::new((-(x * x) - t * t).exp(), 0.0));
        let l2: f64 = u.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * g.spatial().dx() * g.dt();
        let x = xsb_norm(&u, BourgainIndex::new(0.0, 0.0), &kdv());
        assert_relative_eq!(x, l2.sqrt(), max_relative = 1e-12);
        assert_eq!(xsb_norm(&SpaceTimeField::zeros(&g), BourgainIndex::new(1.0, 0.7), &kdv()), 0.0);
    }

    #[test]
    fn labels_agree_when_resolved() {
        let params = DispersionParams::new(0.5, 1.0, 0.0).unwrap();
        let g = st(16, 20.0, 256, 4.0);
        let u0 = forward(&g.spatial().sample(|x| (-x * x).exp()));
        let u = apply_time_cutoff(&SpaceTimeField::free_evolution(&g, &u0, &params), 1.0).unwrap();
        let sp = u.spectrum();
        let idx = BourgainIndex::new(0.5, 0.6);
        let a = sp.xsb_norm(idx, &params, TauLabels::Absolute);
        let c = sp.xsb_norm(idx, &params, TauLabels::Centered);
        assert_relative_eq!(a, c, max_relative = 1e-12);
    }

    #[test]
    fn windowed_plane_wave_is_nearly_b_independent() {
        // γ puts p(ξ₀) = 18 + 3γ on the τ lattice, so no fractional shift remains
        let dtau = PI / 4.0;
        let params = DispersionParams::new(1.0, 1.0, (23.0 * dtau - 18.0) / 3.0).unwrap();
        let g = st(16, 2.0 * PI, 256, 4.0);
        let xi0 = g.spatial().wavenumber(3);
        let p0 = phase(&params, xi0);
        let u = SpaceTimeField::from_fn(&g, |x, t| {
            Complex64::from_polar(BumpFunction.eval(t), xi0 * x + p0 * t)
        });
        let lo = xsb_norm(&u, BourgainIndex::new(0.0, 0.55), &params);
        let hi = xsb_norm(&u, BourgainIndex::new(0.0, 0.75), &params);
        // the same ratio for the bare window, from a one-dimensional transform
        let tg = st(8, 1.0, 256, 4.0);
        let w = SpaceTimeField::from_fn(&tg, |_, t| Complex64::new(BumpFunction.eval(t), 0.0));
        let w_lo = xsb_norm(&w, BourgainIndex::new(0.0, 0.55), &DispersionParams::new(0.0, 1.0, 0.0).unwrap());
        let w_hi = xsb_norm(&w, BourgainIndex::new(0.0, 0.75), &DispersionParams::new(0.0, 1.0, 0.0).unwrap());
        assert!(hi >= lo);
        assert_relative_eq!(hi / lo, w_hi / w_lo, max_relative = 1e-10);
        assert!(hi / lo < 1.2);
    }

    #[test]
    fn monotone_in_b_and_homogeneous() {
        let g = st(16, 8.0, 64, 2.0);
        let u = SpaceTimeField::from_fn(&g, |x, t| Complex64::new((x * t).cos() * (-x * x).exp(), t.sin()));
        let p = kdv();
        let a = xsb_norm(&u, BourgainIndex::new(0.2, 0.3), &p);
        let b = xsb_norm(&u, BourgainIndex::new(0.2, 0.6), &p);
        assert!(b >= a);
        assert_relative_eq!(xsb_norm(&u.scale(-2.5), BourgainIndex::new(0.2, 0.3), &p), 2.5 * a, max_relative = 1e-13);
    }

    #[test]
    fn cutoff_regions() {
        let g = st(8, 1.0, 64, 2.0);
        let u = SpaceTimeField::from_fn(&g, |_, _| Complex64::new(1.0, 0.0));
        let c = apply_time_cutoff(&u, 0.5).unwrap();
        for l in 0..g.nt() {
            let t = g.t(l);
            let v = c.slice(l)[0].re;
            if t.abs() <= 0.5 {
                assert_eq!(v, 1.0);
            } else if t.abs() >= 1.0 {
                assert_eq!(v, 0.0);
            }
        }
        assert!(apply_time_cutoff(&u, 0.0).is_err());
    }

    #[test]
    fn smooth_cutoff_norm_is_resolution_stable() {
        let params = DispersionParams::new(1.0, 1.0, 0.0).unwrap();
        let idx = BourgainIndex::new(0.0, 0.6);
        let norm_at = |nt: usize| {
            let g = st(64, 20.0, nt, 2.0);
            let u0 = forward(&g.spatial().sample(|x| (-x * x).exp()));
            xsb_norm(&apply_time_cutoff(&SpaceTimeField::free_evolution(&g, &u0, &params), 0.5).unwrap(), idx, &params)
        };
        let (a, b) = (norm_at(256), norm_at(512));
        assert!(((a - b) / b).abs() <= 0.02);
    }
}
