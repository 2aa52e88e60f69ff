//! Time integration of `∂ₜu − γ∂ₓu + αℋ∂ₓ²u + β∂ₓ³u + ∂ₓ(u²) = 0`.
//!
//! In Fourier variables the equation reads `∂ₜû = ip(ξ)û − iξ·(u²)^`. The
//! stepper is an integrating-factor RK4 built on the exact phase
//! `e^{itp(ξ)}`, so `dt` constrains only the nonlinear term. The module
//! also carries the cutoff Picard iteration on a space-time grid and probes
//! of the linear estimates in `X_{s,b}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bourgain::{apply_time_cutoff, hs_norm, xsb_norm, BourgainIndex, BumpFunction, SpaceTimeField, SpaceTimeGrid};
use crate::dispersion::{phase, DispersionParams};
use crate::error::{invalid, Error, Result};
use crate::fit::{fit_loglog, LineFit};
use crate::grid::{dealias, forward, inverse, RealField, SpatialGrid, SpectralField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Phase load `dt·max|p|` above which [`SolverConfig::phase_warning`] fires.
pub const PHASE_LOAD_LIMIT: f64 = 1e6;

/// Growth of `max|u|` over its initial value that counts as blow-up.
pub const BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub grid: SpatialGrid,
    pub dt: f64,
    pub t_final: f64,
    pub dealias: bool,
    /// Steps between recorded snapshots; the final time is always recorded.
    pub snapshot_stride: usize,
}

impl SolverConfig {
    pub fn new(grid: SpatialGrid, dt: f64, t_final: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || !(t_final > 0.0 && t_final.is_finite()) {
            return Err(invalid(format!("dt = {dt} and t_final = {t_final} must be positive")));
        }
        if dt > t_final {
            return Err(invalid(format!("dt = {dt} exceeds t_final = {t_final}")));
        }
        Ok(Self { grid, dt, t_final, dealias: true, snapshot_stride: usize::MAX })
    }

    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(invalid("snapshot stride must be at least 1"));
        }
        self.snapshot_stride = stride;
        Ok(self)
    }

    /// Number of steps; the step is shrunk so that they land exactly on `t_final`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        self.t_final / self.steps() as f64
    }

    /// `dt·max|p(ξₖ)|` over the grid.
    pub fn phase_load(&self, params: &DispersionParams) -> f64 {
        self.dt * self.grid.wavenumbers().iter().map(|&xi| phase(params, xi).abs()).fold(0.0, f64::max)
    }

    pub fn phase_warning(&self, params: &DispersionParams) -> Option<String> {
        let load = self.phase_load(params);
        (load > PHASE_LOAD_LIMIT).then(|| format!("dt·max|p| = {load:.3e} exceeds {PHASE_LOAD_LIMIT:e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    /// `∫u dx`, read off the zero mode.
    pub mass: f64,
    /// `∫u² dx`.
    pub l2: f64,
}

impl ConservationReport {
    pub fn of(u: &SpectralField) -> Self {
        let g = u.grid();
        let l2 = u.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>() / g.box_length();
        Self { mass: u.coeffs()[0].re, l2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<RealField>,
    pub conservation: Vec<ConservationReport>,
}

impl Trajectory {
    pub fn last(&self) -> &RealField {
        self.fields.last().expect("a trajectory holds at least the initial field")
    }

    /// Largest `|mass(t) − mass(0)|`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.conservation[0].mass;
        self.conservation.iter().map(|c| (c.mass - m0).abs()).fold(0.0, f64::max)
    }

    /// Largest `|∫u²(t) − ∫u²(0)| / ∫u²(0)`, or 0 for zero data.
    pub fn l2_drift(&self) -> f64 {
        let e0 = self.conservation[0].l2;
        if e0 == 0.0 {
            return 0.0;
        }
        self.conservation.iter().map(|c| (c.l2 - e0).abs() / e0).fold(0.0, f64::max)
    }
}

/// Per-mode factors `e^{i·dt·p(ξₖ)}` in FFT order. The Nyquist mode, where
/// odd multipliers vanish, is held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    factors: Vec<Complex64>,
}

impl Propagator {
    pub fn factors(&self) -> &[Complex64] {
        &self.factors
    }

    pub fn apply(&self, u: &SpectralField) -> SpectralField {
        u.map_modes(|i, _| self.factors[i])
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self { factors: self.factors.iter().zip(&other.factors).map(|(a, b)| a * b).collect() }
    }
}

pub fn linear_propagator(params: &DispersionParams, dt: f64, grid: &SpatialGrid) -> Propagator {
    let factors = (0..grid.n())
        .map(|i| {
            if grid.is_nyquist(i) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, dt * phase(params, grid.wavenumber(i)))
            }
        })
        .collect();
    Propagator { factors }
}

/// `−iξ·(u²)^` with the two-thirds rule.
pub fn rhs_nonlinear(u_hat: &SpectralField) -> SpectralField {
    rhs_nonlinear_with(u_hat, true)
}

pub fn rhs_nonlinear_with(u_hat: &SpectralField, dealiased: bool) -> SpectralField {
    let g = u_hat.grid().clone();
    let src = if dealiased { dealias(u_hat) } else { u_hat.clone() };
    let u = inverse(&src);
    let sq = RealField::new(g.clone(), u.values().iter().map(|v| v * v).collect()).expect("same grid");
    let mut f = forward(&sq);
    if dealiased {
        f = dealias(&f);
    }
    f.map_modes(|i, xi| if g.is_nyquist(i) { ZERO } else { Complex64::new(0.0, -xi) })
}

/// One IFRK4 integrator with its half and full step factors.
struct Ifrk4 {
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    dt: f64,
    dealias: bool,
}

impl Ifrk4 {
    fn new(params: &DispersionParams, grid: &SpatialGrid, dt: f64, dealias: bool) -> Self {
        Self {
            half: linear_propagator(params, 0.5 * dt, grid).factors,
            full: linear_propagator(params, dt, grid).factors,
            dt,
            dealias,
        }
    }

    fn n(&self, u: &SpectralField) -> Vec<Complex64> {
        rhs_nonlinear_with(u, self.dealias).into_coeffs()
    }

    fn step(&self, u: &SpectralField) -> SpectralField {
        let g = u.grid().clone();
        let h = self.dt;
        let field = |c: Vec<Complex64>| SpectralField::new(g.clone(), c).expect("same grid");
        let u0 = u.coeffs();
        let k1 = self.n(u);
        let a: Vec<Complex64> = (0..u0.len()).map(|i| self.half[i] * (u0[i] + 0.5 * h * k1[i])).collect();
        let k2 = self.n(&field(a));
        let b: Vec<Complex64> = (0..u0.len()).map(|i| self.half[i] * u0[i] + 0.5 * h * k2[i]).collect();
        let k3 = self.n(&field(b));
        let c: Vec<Complex64> = (0..u0.len()).map(|i| self.full[i] * u0[i] + h * self.half[i] * k3[i]).collect();
        let k4 = self.n(&field(c));
        let out = (0..u0.len())
            .map(|i| {
                self.full[i] * u0[i] + h / 6.0 * (self.full[i] * k1[i] + 2.0 * self.half[i] * (k2[i] + k3[i]) + k4[i])
            })
            .collect();
        field(out)
    }
}

/// Advances `u` by one step of `cfg.dt`.
pub fn step_ifrk4(u: &RealField, cfg: &SolverConfig, params: &DispersionParams) -> Result<RealField> {
    check_initial(u, cfg)?;
    let out = inverse(&Ifrk4::new(params, &cfg.grid, cfg.dt, cfg.dealias).step(&forward(u)));
    if !out.all_finite() {
        return Err(Error::Numerical("non-finite values after one step".into()));
    }
    Ok(out)
}

fn check_initial(u: &RealField, cfg: &SolverConfig) -> Result<()> {
    if u.grid() != &cfg.grid {
        return Err(invalid("initial field lives on a different grid than the configuration"));
    }
    if !u.all_finite() {
        return Err(invalid("initial field has non-finite values"));
    }
    Ok(())
}

/// Integrates from `t = 0` to `cfg.t_final`, recording every
/// `snapshot_stride` steps and aborting on blow-up.
pub fn solve(u0: &RealField, cfg: &SolverConfig, params: &DispersionParams) -> Result<Trajectory> {
    check_initial(u0, cfg)?;
    let steps = cfg.steps();
    let dt = cfg.effective_dt();
    let stepper = Ifrk4::new(params, &cfg.grid, dt, cfg.dealias);
    let limit = BLOWUP_FACTOR * u0.max_abs().max(f64::MIN_POSITIVE);
    let mut u = forward(u0);
    let mut traj = Trajectory { times: vec![0.0], fields: vec![u0.clone()], conservation: vec![ConservationReport::of(&u)] };
    for k in 1..=steps {
        u = stepper.step(&u);
        if k % cfg.snapshot_stride == 0 || k == steps {
            let real = inverse(&u);
            let peak = real.max_abs();
            if !real.all_finite() || peak > limit {
                return Err(Error::Numerical(format!("blow-up at t = {:.6}: max|u| = {peak:e}", k as f64 * dt)));
            }
            traj.times.push(k as f64 * dt);
            traj.fields.push(real);
            traj.conservation.push(ConservationReport::of(&u));
        } else if u.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Numerical(format!("non-finite coefficients at t = {:.6}", k as f64 * dt)));
        }
    }
    Ok(traj)
}

/// The travelling wave `6κ²sech²(κ(x − x₀ − 4κ²t))` of `u_t + u_xxx + (u²)_x = 0`.
pub fn kdv_soliton(kappa: f64, x0: f64, t: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        let s = 1.0 / (kappa * (x - x0 - 4.0 * kappa * kappa * t)).cosh();
        6.0 * kappa * kappa * s * s
    }
}

/// `∫₀¹ u e^{zu} du` and `∫₀¹ (1−u) e^{zu} du`.
fn filon_weights(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 1e-2 {
        // Taylor series through z⁵
        let mut a = ZERO;
        let mut e = ZERO;
        let mut zk = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for k in 0..6 {
            if k > 0 {
                fact *= k as f64;
                zk *= z;
            }
            a += zk / (fact * (k as f64 + 2.0));
            e += zk / (fact * (k as f64 + 1.0));
        }
        (a, e - a)
    } else {
        let ez = z.exp();
        let e = (ez - 1.0) / z;
        let a = (ez * (z - 1.0) + 1.0) / (z * z);
        (a, e - a)
    }
}

/// `∫₀ᵗ W(t − t′) f(t′) dt′` on every slice of the source's grid.
///
/// Per mode the source is interpolated linearly between slices and the
/// phase is integrated exactly, so the rule is second order in `Δt′`
/// whatever the size of `p(ξ)Δt′`. Negative times integrate backwards
/// from `t = 0`.
pub fn duhamel(source: &SpaceTimeField, params: &DispersionParams) -> SpaceTimeField {
    let g = source.grid().clone();
    let sg = g.spatial().clone();
    let (n, nt) = (sg.n(), g.nt());
    let spec: Vec<Vec<Complex64>> = (0..nt).map(|l| sg.forward_complex(source.slice(l))).collect();
    let mut out = vec![vec![ZERO; n]; nt];
    let o = g.origin();
    for (j, xi) in sg.wavenumbers().into_iter().enumerate() {
        let p = if sg.is_nyquist(j) { 0.0 } else { phase(params, xi) };
        for dir in [1.0f64, -1.0] {
            let h = dir * g.dt();
            let z = Complex64::new(0.0, p * h);
            let (wa, wb) = filon_weights(z);
            let rot = z.exp();
            let mut d = ZERO;
            let mut l = o;
            loop {
                let next = if dir > 0.0 { l + 1 } else { l.wrapping_sub(1) };
                if next >= nt {
                    break;
                }
                d = rot * d + h * (wa * spec[l][j] + wb * spec[next][j]);
                out[next][j] = d;
                l = next;
            }
        }
    }
    let mut field = SpaceTimeField::zeros(&g);
    for (l, row) in out.iter().enumerate() {
        field.slice_mut(l).copy_from_slice(&sg.inverse_complex(row));
    }
    field
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardConfig {
    pub delta: f64,
    pub iterations: usize,
    pub st_grid: SpaceTimeGrid,
}

impl PicardConfig {
    /// The window is `[−2δ, 2δ)`; `nt ≥ 64` puts at least 16 samples across
    /// each transition band `δ ≤ |t| ≤ 2δ` of `ψ(t/δ)`.
    pub fn new(delta: f64, iterations: usize, spatial: SpatialGrid, nt: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("δ = {delta} must lie in (0, 1)")));
        }
        if nt < 64 {
            return Err(invalid(format!("nt = {nt} leaves the cutoff under-resolved; use at least 64")));
        }
        if iterations == 0 {
            return Err(invalid("at least one iteration is needed"));
        }
        Ok(Self { delta, iterations, st_grid: SpaceTimeGrid::new(spatial, nt, 2.0 * delta)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardResult {
    /// `u⁰, u¹, …`.
    pub iterates: Vec<SpaceTimeField>,
    /// `‖u^{k+1} − u^k‖_{X_{s,b}}` for `k = 0, 1, …`.
    pub differences: Vec<f64>,
    /// Set when the differences grew twice in a row.
    pub diverged: bool,
}

impl PicardResult {
    pub fn last(&self) -> &SpaceTimeField {
        self.iterates.last().expect("the free iterate is always present")
    }
}

/// `∂ₓ(u²)` slice by slice, with the two-thirds rule.
fn flux(u: &SpaceTimeField) -> SpaceTimeField {
    let sg = u.grid().spatial().clone();
    let mut out = SpaceTimeField::zeros(u.grid());
    for l in 0..u.grid().nt() {
        let real = u.real_slice(l);
        let f = rhs_nonlinear(&forward(&real));
        // rhs_nonlinear returns −∂ₓ(u²)
        let row: Vec<Complex64> = sg.inverse_complex(f.coeffs()).into_iter().map(|c| -c).collect();
        out.slice_mut(l).copy_from_slice(&row);
    }
    out
}

/// `u⁰ = ψ(t)W(t)u₀` and `u^{k+1} = u⁰ − ψ(t/δ)∫₀ᵗ W(t−t′)∂ₓ(u^k)² dt′`.
pub fn picard_iterate(
    u0: &RealField,
    pcfg: &PicardConfig,
    s: f64,
    b: f64,
    params: &DispersionParams,
) -> Result<PicardResult> {
    let g = &pcfg.st_grid;
    if u0.grid() != g.spatial() {
        return Err(invalid("initial field lives on a different grid than the space-time grid"));
    }
    if !u0.all_finite() {
        return Err(invalid("initial field has non-finite values"));
    }
    let idx = BourgainIndex::new(s, b);
    let free = SpaceTimeField::free_evolution(g, &forward(u0), params).time_modulate(|t| BumpFunction.eval(t));
    let mut iterates = vec![free.clone()];
    let mut differences = Vec::new();
    let mut growth = 0;
    let mut diverged = false;
    for _ in 0..pcfg.iterations {
        let prev = iterates.last().expect("nonempty");
        let d = apply_time_cutoff(&duhamel(&flux(prev), params), pcfg.delta)?;
        let next = free.sub(&d);
        if next.values().iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Numerical("Picard iterate became non-finite".into()));
        }
        let diff = xsb_norm(&next.sub(prev), idx, params);
        if differences.last().is_some_and(|&last| diff > last) {
            growth += 1;
            diverged |= growth >= 2;
        } else {
            growth = 0;
        }
        differences.push(diff);
        iterates.push(next);
    }
    Ok(PicardResult { iterates, differences, diverged })
}

/// `σ` in `b′ = b − 1 + σ`.
pub const SIGMA: f64 = 0.05;

/// Both sides of the two linear estimates at one `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearEstimateSample {
    pub delta: f64,
    /// `‖ψ(t/δ)W(t)u₀‖_{X_{s,b}}`.
    pub free_lhs: f64,
    /// `δ^{(1−2b)/2}‖u₀‖_{H^s}`.
    pub free_rhs: f64,
    /// `‖ψ(t/δ)∫₀ᵗW(t−t′)f dt′‖_{X_{s,b}}` for `f = ψ(t/δ)W(t)u₀`.
    pub duhamel_lhs: f64,
    /// `δ^{1+b′−b}‖f‖_{X_{s,b′}}`.
    pub duhamel_rhs: f64,
}

impl LinearEstimateSample {
    /// Measured constants `lhs/rhs` of the two estimates.
    pub fn constants(&self) -> (f64, f64) {
        let q = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
        (q(self.free_lhs, self.free_rhs), q(self.duhamel_lhs, self.duhamel_rhs))
    }
}

/// Evaluates both estimates on `[−8δ, 8δ)` with `nt ≥ 256` time samples.
pub fn linear_estimate_probe(
    u0: &RealField,
    delta: f64,
    s: f64,
    b: f64,
    params: &DispersionParams,
    nt: usize,
) -> Result<LinearEstimateSample> {
    let bp = b - 1.0 + SIGMA;
    if !(b > 0.5 && b <= 1.0) {
        return Err(invalid(format!("b = {b} must lie in (1/2, 1]")));
    }
    if !(bp + 1.0 >= b && bp <= 0.0 && bp > -0.5) {
        return Err(invalid(format!("b′ = {bp} violates b′ + 1 ≥ b ≥ 0 ≥ b′ > −1/2")));
    }
    if !(delta > 0.0 && delta < 1.0) || nt < 256 {
        return Err(invalid(format!("δ = {delta} must lie in (0, 1) and nt = {nt} must be at least 256")));
    }
    // zero padding to |t| < 8δ keeps the τ lattice fine relative to 1/δ
    let g = &SpaceTimeGrid::new(u0.grid().clone(), nt, 8.0 * delta)?;
    let free = SpaceTimeField::free_evolution(g, &forward(u0), params);
    let cut = apply_time_cutoff(&free, delta)?;
    let duh = apply_time_cutoff(&duhamel(&cut, params), delta)?;
    let idx = BourgainIndex::new(s, b);
    Ok(LinearEstimateSample {
        delta,
        free_lhs: xsb_norm(&cut, idx, params),
        free_rhs: delta.powf(0.5 - b) * hs_norm(u0, s),
        duhamel_lhs: xsb_norm(&duh, idx, params),
        duhamel_rhs: delta.powf(1.0 + bp - b) * xsb_norm(&cut, BourgainIndex::new(s, bp), params),
    })
}

/// Log-log fit of the free estimate's left side against `δ`.
pub fn free_estimate_exponent(samples: &[LinearEstimateSample]) -> Result<LineFit> {
    let d: Vec<f64> = samples.iter().map(|x| x.delta).collect();
    let v: Vec<f64> = samples.iter().map(|x| x.free_lhs).collect();
    fit_loglog(&d, &v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn kdv() -> DispersionParams {
        DispersionParams::new(0.0, 1.0, 0.0).unwrap()
    }

    fn sup_diff(a: &RealField, b: &RealField) -> f64 {
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn propagator_group_law() {
        let g = SpatialGrid::new(64, 10.0).unwrap();
        let p = DispersionParams::new(1.0, 1.0, 0.3).unwrap();
        assert!(linear_propagator(&p, 0.0, &g).factors().iter().all(|c| *c == Complex64::new(1.0, 0.0)));
        let ab = linear_propagator(&p, 0.3, &g).compose(&linear_propagator(&p, 0.45, &g));
        let c = linear_propagator(&p, 0.75, &g);
        for (x, y) in ab.factors().iter().zip(c.factors()) {
            assert!((x - y).norm() < 1e-12);
            assert_relative_eq!(x.norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_mode_phase() {
        let g = SpatialGrid::new(64, 2.0 * PI).unwrap();
        let p = DispersionParams::new(1.0, 2.0, 0.5).unwrap();
        let (xi0, t) = (3.0, 0.7);
        let u = forward(&g.sample(|x| (xi0 * x).cos()));
        let v = inverse(&linear_propagator(&p, t, &g).apply(&u));
        let exact = g.sample(|x| (xi0 * x + t * phase(&p, xi0)).cos());
        assert!(sup_diff(&v, &exact) < 1e-12);
    }

    #[test]
    fn linear_flow_reverses() {
        let g = SpatialGrid::new(128, 20.0).unwrap();
        let p = DispersionParams::new(1.0, 1.0, 0.0).unwrap();
        let u = forward(&g.sample(|x| (-x * x).exp()));
        let back = linear_propagator(&p, -0.01, &g).apply(&linear_propagator(&p, 0.01, &g).apply(&u));
        assert!(sup_diff(&inverse(&back), &inverse(&u)) < 1e-13);
    }

    #[test]
    fn nonlinear_term_examples() {
        let g = SpatialGrid::new(32, 2.0 * PI).unwrap();
        let zero = rhs_nonlinear(&forward(&g.sample(|_| 0.0)));
        assert!(zero.coeffs().iter().all(|c| c.norm() == 0.0));
        let c = rhs_nonlinear(&forward(&g.sample(|_| 1.7)));
        assert!(c.coeffs().iter().all(|c| c.norm() < 1e-12));
        // −∂ₓ(cos²x) = sin 2x
        let f = inverse(&rhs_nonlinear(&forward(&g.sample(f64::cos))));
        assert!(sup_diff(&f, &g.sample(|x| (2.0 * x).sin())) < 1e-12);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = SpatialGrid::new(32, 10.0).unwrap();
        let cfg = SolverConfig::new(g.clone(), 0.01, 0.1).unwrap().with_stride(2).unwrap();
        let traj = solve(&RealField::zeros(&g), &cfg, &kdv()).unwrap();
        assert!(traj.fields.iter().all(|f| f.max_abs() == 0.0));
        assert_eq!(traj.times.len(), 6);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn blow_up_is_reported() {
        let g = SpatialGrid::new(64, 2.0 * PI).unwrap();
        let cfg = SolverConfig::new(g.clone(), 0.5, 50.0).unwrap().with_dealias(false);
        let u0 = g.sample(|x| 50.0 * x.cos());
        assert!(matches!(solve(&u0, &cfg, &kdv()), Err(Error::Numerical(_))));
    }

    #[test]
    fn config_validation() {
        let g = SpatialGrid::new(32, 10.0).unwrap();
        assert!(SolverConfig::new(g.clone(), 0.0, 1.0).is_err());
        assert!(SolverConfig::new(g.clone(), 2.0, 1.0).is_err());
        let cfg = SolverConfig::new(g.clone(), 0.3, 1.0).unwrap();
        assert_eq!(cfg.steps(), 4);
        assert_relative_eq!(cfg.effective_dt(), 0.25);
        assert!(cfg.phase_warning(&kdv()).is_none());
    }

    #[test]
    fn constant_source_duhamel() {
        let sg = SpatialGrid::new(16, 2.0 * PI).unwrap();
        let g = SpaceTimeGrid::new(sg.clone(), 64, 1.0).unwrap();
        let p = DispersionParams::new(1.0, 1.0, 0.0).unwrap();
        assert!(duhamel(&SpaceTimeField::zeros(&g), &p).is_zero());
        // source e^{2ix}: mode ξ₀ = 2 with f̂ constant in time
        let src = SpaceTimeField::from_fn(&g, |x, _| Complex64::from_polar(1.0, 2.0 * x));
        let d = duhamel(&src, &p);
        let o = g.origin();
        assert!(d.slice(o).iter().all(|c| c.norm() < 1e-15));
        let pe = phase(&p, 2.0);
        for l in [0, 10, o + 5, g.nt() - 1] {
            let t = g.t(l);
            let exact = (Complex64::new(0.0, t * pe).exp() - 1.0) / Complex64::new(0.0, pe);
            let got = d.slice(l)[3] * Complex64::from_polar(1.0, -2.0 * sg.x(3));
            assert!((got - exact).norm() < 1e-12, "t = {t}: {got} vs {exact}");
        }
    }

    #[test]
    fn filon_weights_match_series() {
        for z in [Complex64::new(0.0, 0.009), Complex64::new(0.0, 0.011)] {
            let (a, b) = filon_weights(z);
            let (a2, b2) = filon_weights(z * 1.0001);
            assert!((a - a2).norm() < 1e-5 && (b - b2).norm() < 1e-5);
            assert!((a - (0.5 + z / 3.0)).norm() < 1e-4);
            assert!((b - (0.5 + z / 6.0)).norm() < 1e-4);
        }
    }

    #[test]
    fn picard_of_zero_is_zero() {
        let sg = SpatialGrid::new(16, 10.0).unwrap();
        let pc = PicardConfig::new(0.25, 3, sg.clone(), 64).unwrap();
        let r = picard_iterate(&RealField::zeros(&sg), &pc, 0.0, 0.55, &kdv()).unwrap();
        assert!(r.iterates.iter().all(|u| u.is_zero()));
        assert!(r.differences.iter().all(|&d| d == 0.0));
        assert!(PicardConfig::new(1.0, 3, sg.clone(), 64).is_err());
        assert!(PicardConfig::new(0.5, 3, sg, 32).is_err());
    }

    #[test]
    fn linear_estimate_is_linear() {
        let sg = SpatialGrid::new(32, 20.0).unwrap();
        let p = DispersionParams::new(1.0, 1.0, 0.0).unwrap();
        let u = sg.sample(|x| (-x * x).exp());
        let a = linear_estimate_probe(&u, 0.25, 0.0, 0.7, &p, 256).unwrap();
        let u2 = sg.sample(|x| 2.0 * (-x * x).exp());
        let b = linear_estimate_probe(&u2, 0.25, 0.0, 0.7, &p, 256).unwrap();
        assert_relative_eq!(b.free_lhs, 2.0 * a.free_lhs, max_relative = 1e-12);
        assert_relative_eq!(b.duhamel_lhs, 2.0 * a.duhamel_lhs, max_relative = 1e-12);
        let z = linear_estimate_probe(&RealField::zeros(&sg), 0.25, 0.0, 0.7, &p, 256).unwrap();
        assert_eq!(z.free_lhs, 0.0);
        assert!(linear_estimate_probe(&u, 0.25, 0.0, 0.4, &p, 256).is_err());
        assert!(linear_estimate_probe(&u, 0.25, 0.0, 0.99, &p, 256).is_err());
    }
}
