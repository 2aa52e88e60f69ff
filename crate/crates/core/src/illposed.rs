//! Third-order Picard iterates for thin-annulus data and their growth in `N`.
//!
//! With data `εf` the solution expands as `εA₁ + ε²A₂ + ε³A₃ + …` where
//!
//! ```text
//! Â₁(ξ,t) = e^{itp(ξ)} f̂(ξ)
//! Â₂(ξ,t) = −iξ e^{itp(ξ)} (1/2π) ∫ f̂(ξ₁) f̂(ξ−ξ₁) E(t, θ₂) dξ₁
//! Â₃(ξ,t) = (i/2π²) e^{itp(ξ)} ∫∫ f̂(ξ₁) f̂(ξ₂) f̂(ξ₃) (ξη/θ₂) (E(t,θ) − E(t,φ)) dξ₁dξ₂
//! ```
//!
//! with `ξ₃ = ξ − ξ₁ − ξ₂`, `η = ξ₂ + ξ₃`, `E(t,x) = (e^{itx} − 1)/(ix)`,
//! `θ₂ = p(ξ₂) + p(ξ₃) − p(η)`, `θ = p(ξ₁)+p(ξ₂)+p(ξ₃)−p(ξ)` and
//! `φ = p(ξ₁) + p(η) − p(ξ)`. The data are `f̂ = r^{−1/2}N^{−s}` on
//! `||ξ| − N| ≤ r` with `r = (√N log N)^{−1}`.
//!
//! Norms follow the crate convention `‖g‖²_{H^s} = (1/2π)∫⟨ξ⟩^{2s}|ĝ|²dξ`.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bourgain::{japanese, SpaceTimeField, SpaceTimeGrid};
use crate::dispersion::{phase, DispersionParams};
use crate::error::{invalid, Error, Result};
use crate::fit::{fit_line, LineFit};
use crate::grid::SpectralField;
use crate::rng::SplitMix64;

use std::f64::consts::PI;

/// Gauss–Legendre nodes per interval.
pub const DEFAULT_NODES: usize = 64;

/// Factor in the brackets `|θ| ∈ [N³/K, K·N³]` or `|θ| ≤ K·r²N`.
pub const THETA_BRACKET: f64 = 32.0;

/// Largest relative change between the `q/2` and `q` rules that is accepted.
pub const REFINEMENT_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardProbeSpec {
    n_param: f64,
    s: f64,
    r: f64,
    t_eval: f64,
    params: DispersionParams,
}

impl PicardProbeSpec {
    pub fn new(n_param: f64, s: f64, t_eval: f64, params: DispersionParams) -> Result<Self> {
        if !(n_param >= 4.0 && n_param.is_finite()) {
            return Err(invalid(format!("N = {n_param} must be at least 4")));
        }
        if !(t_eval >= 0.0 && t_eval.is_finite()) || !s.is_finite() {
            return Err(invalid(format!("t = {t_eval} must be nonnegative and s = {s} finite")));
        }
        let r = 1.0 / (n_param.sqrt() * n_param.ln());
        Ok(Self { n_param, s, r, t_eval, params })
    }

    pub fn n_param(&self) -> f64 {
        self.n_param
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn t_eval(&self) -> f64 {
        self.t_eval
    }

    pub fn params(&self) -> &DispersionParams {
        &self.params
    }

    pub fn with_s(&self, s: f64) -> Self {
        Self { s, ..*self }
    }

    pub fn with_t(&self, t_eval: f64) -> Self {
        Self { t_eval, ..*self }
    }

    pub fn amplitude(&self) -> f64 {
        self.r.powf(-0.5) * self.n_param.powf(-self.s)
    }

    /// `f̂(ξ)`.
    pub fn data(&self, xi: f64) -> f64 {
        if (xi.abs() - self.n_param).abs() <= self.r {
            self.amplitude()
        } else {
            0.0
        }
    }

    /// `‖f‖_{H^s}` of the continuum data.
    pub fn data_norm(&self) -> f64 {
        let a = self.amplitude();
        let q = quadrature(DEFAULT_NODES);
        let n = self.n_param;
        let half = integrate(&q, n - self.r, n + self.r, |x| japanese(x).powf(2.0 * self.s));
        (2.0 * a * a * half / (2.0 * PI)).sqrt()
    }
}

/// The four-frequency sign patterns `(+,−,−,−)` and `(+,−,−,+)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThetaCase {
    Pmmm,
    Pmmp,
}

/// `p(ξ₁) + p(ξ₂) + p(ξ₃) − p(ξ₁ + ξ₂ + ξ₃)`; the transport terms cancel.
pub fn theta_direct(params: &DispersionParams, xi1: f64, xi2: f64, xi3: f64) -> f64 {
    phase(params, xi1) + phase(params, xi2) + phase(params, xi3) - phase(params, xi1 + xi2 + xi3)
}

/// Factored `θ` for a matching sign pattern of `(ξ₁, ξ₂, ξ₃, ξ₄ = −Σ)`.
pub fn theta_closed(params: &DispersionParams, xi1: f64, xi2: f64, xi3: f64, case: ThetaCase) -> Result<f64> {
    let xi4 = -(xi1 + xi2 + xi3);
    let (a, b) = (params.alpha(), params.beta());
    let fits = match case {
        ThetaCase::Pmmm => xi1 >= 0.0 && xi2 <= 0.0 && xi3 <= 0.0 && xi4 <= 0.0,
        ThetaCase::Pmmp => xi1 >= 0.0 && xi2 <= 0.0 && xi3 <= 0.0 && xi4 >= 0.0,
    };
    if !fits {
        return Err(Error::Domain(format!("({xi1}, {xi2}, {xi3}, {xi4}) does not have the sign pattern {case:?}")));
    }
    Ok(match case {
        ThetaCase::Pmmm => {
            3.0 * b * (xi1 + xi4) * (xi2 + xi4) * (xi3 + xi4) - a * ((xi3 + xi4) * (2.0 * xi2) + 2.0 * xi3 * xi4)
        }
        ThetaCase::Pmmp => 3.0 * b * (xi2 + xi4) * (xi3 + xi4) * (xi1 + xi4 - 2.0 * a / (3.0 * b)),
    })
}

/// Worst closed-versus-direct `θ` disagreement over `samples` points with
/// `ξ₁ ∈ [0, 2·10³]`, `ξ₂, ξ₃ ∈ [−10³, 0]`, each scaled by `1 + Σ|p|`. The
/// sign of `ξ₄` picks the case, so both occur.
pub fn theta_identity_error(params: &DispersionParams, samples: usize, seed: u64) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (x1, x2, x3) = (rng.uniform(0.0, 2e3), rng.uniform(-1e3, 0.0), rng.uniform(-1e3, 0.0));
        let case = if x1 + x2 + x3 >= 0.0 { ThetaCase::Pmmm } else { ThetaCase::Pmmp };
        let closed = theta_closed(params, x1, x2, x3, case).expect("sampled to match the case");
        let scale = 1.0 + [x1, x2, x3, x1 + x2 + x3].iter().map(|&x| phase(params, x).abs()).sum::<f64>();
        worst = worst.max((closed - theta_direct(params, x1, x2, x3)).abs() / scale);
    }
    worst
}

/// Which side of the dichotomy a value of `θ` falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaBand {
    Resonant,
    Cubic,
    Neither,
}

pub fn theta_band(spec: &PicardProbeSpec, theta: f64) -> ThetaBand {
    let (n, r, k) = (spec.n_param, spec.r, THETA_BRACKET);
    let m = theta.abs();
    if m <= k * r * r * n {
        ThetaBand::Resonant
    } else if m >= n.powi(3) / k && m <= k * n.powi(3) {
        ThetaBand::Cubic
    } else {
        ThetaBand::Neither
    }
}

/// `E(t, x) = ∫₀ᵗ e^{it′x} dt′`, by Taylor expansion when `|tx| < 1e−6`.
pub fn duhamel_kernel(t: f64, x: f64) -> Complex64 {
    let tx = t * x;
    if tx.abs() < 1e-6 {
        Complex64::new(t * (1.0 - tx * tx / 6.0), t * tx / 2.0)
    } else {
        (Complex64::new(0.0, tx).exp() - 1.0) / Complex64::new(0.0, x)
    }
}

fn grid_checks(spec: &PicardProbeSpec, grid: &SpaceTimeGrid) -> Result<()> {
    let sg = grid.spatial();
    let dxi = sg.dxi();
    if spec.r < 4.0 * dxi {
        return Err(Error::Unresolved(format!("annulus width r = {:.3e} spans fewer than 4 modes of {dxi:.3e}", spec.r)));
    }
    let top = (sg.n() / 2) as f64 * dxi;
    if 2.0 * (spec.n_param + spec.r) >= top {
        return Err(Error::Unresolved(format!("modes up to 2(N + r) exceed the grid's {top:.3e}")));
    }
    Ok(())
}

fn data_modes(spec: &PicardProbeSpec, grid: &SpaceTimeGrid) -> Vec<(usize, f64, f64)> {
    let sg = grid.spatial();
    (0..sg.n())
        .filter_map(|i| {
            let xi = sg.wavenumber(i);
            let v = spec.data(xi);
            (v != 0.0).then_some((i, xi, v))
        })
        .collect()
}

/// `A₁(f)` sampled on `grid`, whose modes must resolve the annuli.
pub fn picard_a1(spec: &PicardProbeSpec, grid: &SpaceTimeGrid) -> Result<SpaceTimeField> {
    grid_checks(spec, grid)?;
    let sg = grid.spatial().clone();
    let f = spec.data_field(&sg);
    Ok(SpaceTimeField::free_evolution(grid, &f, &spec.params))
}

impl PicardProbeSpec {
    /// `f̂` on the modes of `grid`.
    pub fn data_field(&self, grid: &crate::grid::SpatialGrid) -> SpectralField {
        let c = grid.wavenumbers().iter().map(|&xi| Complex64::new(self.data(xi), 0.0)).collect();
        SpectralField::new(grid.clone(), c).expect("one coefficient per mode")
    }
}

/// `A₂(f)` on `grid`, by direct convolution over the occupied modes.
pub fn picard_a2(spec: &PicardProbeSpec, grid: &SpaceTimeGrid) -> Result<SpaceTimeField> {
    grid_checks(spec, grid)?;
    let sg = grid.spatial().clone();
    let n = sg.n();
    let modes = data_modes(spec, grid);
    let dxi = sg.dxi();
    let p = spec.params;
    Ok(SpaceTimeField::from_slices(grid, |t| {
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        for &(i1, x1, v1) in &modes {
            for &(i2, x2, v2) in &modes {
                let k = crate::grid::signed_index(i1, n) + crate::grid::signed_index(i2, n);
                let slot = crate::grid::slot_of(k, n).expect("grid checks keep sums in range");
                let xi = x1 + x2;
                let th2 = phase(&p, x1) + phase(&p, x2) - phase(&p, xi);
                let e = Complex64::from_polar(1.0, t * phase(&p, xi));
                c[slot] += Complex64::new(0.0, -xi) * e * v1 * v2 * duhamel_kernel(t, th2) * dxi / (2.0 * PI);
            }
        }
        sg.inverse_complex(&c)
    }))
}

fn quadrature(q: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(q).expect("node count is positive")).as_node_weight_pairs().to_vec()
}

fn integrate(rule: &[(f64, f64)], a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (h, m) = (0.5 * (b - a), 0.5 * (b + a));
    rule.iter().map(|&(x, w)| w * f(m + h * x)).sum::<f64>() * h
}

fn nodes_on(rule: &[(f64, f64)], a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let (h, m) = (0.5 * (b - a), 0.5 * (b + a));
    rule.iter().map(move |&(x, w)| (m + h * x, w * h))
}

/// `η/θ₂(ξ₂, ξ₃)` with its finite limit `1/(p′(ξ₂) − p′(0))` as `η → 0`.
fn eta_over_theta2(params: &DispersionParams, x2: f64, x3: f64) -> f64 {
    let eta = x2 + x3;
    if eta.abs() <= 1e-7 * x2.abs().max(1.0) {
        let (a, b) = (params.alpha(), params.beta());
        return 1.0 / (3.0 * b * x2 * x2 - 2.0 * a * x2.abs());
    }
    eta / theta_direct(params, x2, x3, 0.0)
}

/// The three kernels contracted against `f̂³`: the full `A₃`, its resonant
/// `θ` part `G₁`, and the `φ` part `G₂`.
#[derive(Debug, Clone, Copy, Default)]
struct Kernels {
    a3: Complex64,
    g1: Complex64,
    g2: Complex64,
}

impl std::ops::AddAssign<Kernels> for Kernels {
    fn add_assign(&mut self, o: Kernels) {
        self.a3 += o.a3;
        self.g1 += o.g1;
        self.g2 += o.g2;
    }
}

fn kernels(spec: &PicardProbeSpec, xi: f64, x1: f64, x2: f64) -> Kernels {
    let p = spec.params;
    let x3 = xi - x1 - x2;
    let eta = x2 + x3;
    let ph = |x: f64| phase(&p, x);
    let theta = ph(x1) + ph(x2) + ph(x3) - ph(xi);
    let phi = ph(x1) + ph(eta) - ph(xi);
    let q1 = xi * eta_over_theta2(&p, x2, x3);
    let t = spec.t_eval;
    let (et, ep) = (duhamel_kernel(t, theta), duhamel_kernel(t, phi));
    let g1 = if theta_band(spec, theta) == ThetaBand::Resonant { et * q1 } else { Complex64::new(0.0, 0.0) };
    Kernels { a3: (et - ep) * q1, g1, g2: ep * q1 }
}

/// `∫∫` of the kernels over `ξ₁ ∈ I₁`, `ξ₂ ∈ I₂`, `ξ − ξ₁ − ξ₂ ∈ I₃`.
fn pattern_integral(spec: &PicardProbeSpec, rule: &[(f64, f64)], xi: f64, signs: [f64; 3]) -> Kernels {
    let (n, r) = (spec.n_param, spec.r);
    let iv = |s: f64| (s * n - r, s * n + r);
    let ((lo1, hi1), (lo2, hi2), (lo3, hi3)) = (iv(signs[0]), iv(signs[1]), iv(signs[2]));
    // the ξ₂ window changes formula where ξ₁ crosses these points
    let mut cuts = vec![lo1, hi1];
    for b in [xi - hi3 - lo2, xi - lo3 - hi2] {
        if b > lo1 && b < hi1 {
            cuts.push(b);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut acc = Kernels::default();
    for w in cuts.windows(2) {
        for (x1, w1) in nodes_on(rule, w[0], w[1]) {
            let a = lo2.max(xi - x1 - hi3);
            let b = hi2.min(xi - x1 - lo3);
            if b <= a {
                continue;
            }
            for (x2, w2) in nodes_on(rule, a, b) {
                let k = kernels(spec, xi, x1, x2);
                let wt = w1 * w2;
                acc += Kernels { a3: k.a3 * wt, g1: k.g1 * wt, g2: k.g2 * wt };
            }
        }
    }
    acc
}

/// Output-frequency samples `(ξ, weight, kernels)` without the amplitude.
fn profile(spec: &PicardProbeSpec, q: usize) -> Vec<(f64, f64, Kernels)> {
    let rule = quadrature(q);
    let (n, r) = (spec.n_param, spec.r);
    let patterns: Vec<[f64; 3]> =
        (0..8).map(|m| [0, 1, 2].map(|j| if m >> j & 1 == 1 { 1.0 } else { -1.0 })).collect();
    let mut outer = Vec::new();
    for c in [-3.0, -1.0, 1.0, 3.0] {
        let centre = c * n;
        for (a, b) in [(-3.0, -1.0), (-1.0, 1.0), (1.0, 3.0)] {
            outer.extend(nodes_on(&rule, centre + a * r, centre + b * r).map(|(x, w)| (c, x, w)));
        }
    }
    outer
        .par_iter()
        .map(|&(c, xi, w)| {
            let mut k = Kernels::default();
            for s in patterns.iter().filter(|s| s.iter().sum::<f64>() == c) {
                k += pattern_integral(spec, &rule, xi, *s);
            }
            (xi, w, k)
        })
        .collect()
}

/// `H^s` norms of `A₃` and of the two contributions `G₁`, `G₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A3Norms {
    pub a3: f64,
    pub g1: f64,
    pub g2: f64,
}

fn norms_from(spec: &PicardProbeSpec, prof: &[(f64, f64, Kernels)]) -> A3Norms {
    let scale = spec.amplitude().powi(3) / (2.0 * PI * PI);
    let norm = |pick: fn(&Kernels) -> Complex64| {
        let sum: f64 =
            prof.iter().map(|(xi, w, k)| w * japanese(*xi).powf(2.0 * spec.s) * pick(k).norm_sqr()).sum();
        scale * (sum / (2.0 * PI)).sqrt()
    };
    A3Norms { a3: norm(|k| k.a3), g1: norm(|k| k.g1), g2: norm(|k| k.g2) }
}

/// The norms with a `q`-node rule, without the refinement check.
pub fn picard_a3_norms_with(spec: &PicardProbeSpec, q: usize) -> Result<A3Norms> {
    if q < 32 {
        return Err(invalid(format!("{q} nodes per interval is below the minimum of 32")));
    }
    Ok(norms_from(spec, &profile(spec, q)))
}

/// `‖A₃(f)(·, t)‖_{H^s}` with the default rule, checked against a rule of
/// half the size.
pub fn picard_a3_norm(spec: &PicardProbeSpec) -> Result<f64> {
    let fine = picard_a3_norms_with(spec, DEFAULT_NODES)?.a3;
    let coarse = norms_from(spec, &profile(spec, DEFAULT_NODES / 2)).a3;
    let change = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if change > REFINEMENT_TOLERANCE {
        return Err(Error::Unresolved(format!("A₃ norm moved by {:.1}% when the rule was refined", 100.0 * change)));
    }
    Ok(fine)
}

/// One row of an `N` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: f64,
    pub a3_norm: f64,
    pub a3_norm_times_log_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub s: f64,
    pub rows: Vec<GrowthRow>,
    pub fit: LineFit,
    /// `−2s − 3/2`.
    pub expected_slope: f64,
}

/// Least-squares slope of `log(‖A₃‖ log N)` against `log N` at `t = 1`.
pub fn growth_fit(s: f64, n_list: &[f64], params: &DispersionParams) -> Result<GrowthFit> {
    growth_fits(&[s], n_list, params).map(|mut v| v.remove(0))
}

/// [`growth_fit`] for several `s` at once; the frequency integrals do not
/// depend on `s` and are shared.
pub fn growth_fits(s_list: &[f64], n_list: &[f64], params: &DispersionParams) -> Result<Vec<GrowthFit>> {
    if n_list.len() < 4 {
        return Err(invalid(format!("a growth fit needs at least 4 values of N, got {}", n_list.len())));
    }
    let ratios: Vec<f64> = n_list.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().any(|q| (q - ratios[0]).abs() > 1e-9 * ratios[0] || *q <= 1.0) {
        return Err(invalid("values of N must increase geometrically"));
    }
    let mut profiles = Vec::new();
    for &n in n_list {
        let spec = PicardProbeSpec::new(n, 0.0, 1.0, *params)?;
        profiles.push((spec, profile(&spec, DEFAULT_NODES), profile(&spec, DEFAULT_NODES / 2)));
    }
    s_list
        .iter()
        .map(|&s| {
            let mut rows = Vec::new();
            for (spec, fine, coarse) in &profiles {
                let spec = spec.with_s(s);
                let a = norms_from(&spec, fine).a3;
                let b = norms_from(&spec, coarse).a3;
                if (a - b).abs() > REFINEMENT_TOLERANCE * a {
                    return Err(Error::Unresolved(format!("A₃ norm at N = {} is not converged", spec.n_param)));
                }
                rows.push(GrowthRow { n: spec.n_param, a3_norm: a, a3_norm_times_log_n: a * spec.n_param.ln() });
            }
            let x: Vec<f64> = rows.iter().map(|r| r.n.ln()).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.a3_norm_times_log_n.ln()).collect();
            Ok(GrowthFit { s, fit: fit_line(&x, &y)?, rows, expected_slope: -2.0 * s - 1.5 })
        })
        .collect()
}
