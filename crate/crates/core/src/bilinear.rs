//! The bilinear estimate `‖∂ₓ(uv)‖_{X_{s,b−1+ε}} ≤ c ‖u‖_{X_{s,b}} ‖v‖_{X_{s,b}}`
//! measured on concrete fields, and the two families of Fourier-side test
//! functions that break it below `s = −3/4`.
//!
//! Writing `u` through `f = w_b û / 2π` with `w_b = ⟨ξ⟩^s⟨τ−p(ξ)⟩^b` makes
//! `‖u‖_X = ‖f‖_{L²}`, and the estimate becomes boundedness on `L² × L²` of
//!
//! ```text
//! K(f₁, f₂) = (1/2π) · ξ · w_{b−1+ε} · (f₁/w_b) ∗ (f₂/w_b)
//! ```
//!
//! Every ratio reported here is `‖K(f₁,f₂)‖ / (‖f₁‖‖f₂‖)` or the matching
//! adjoint quantity, so all of them are lower bounds for the same constant.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bourgain::{japanese, BourgainIndex, SpaceTimeField, SpaceTimeGrid, SpaceTimeSpectrum, TauLabels};
use crate::dispersion::{group_velocity, phase, DispersionParams};
use crate::error::{invalid, Error, Result};
use crate::fit::{fit_loglog, LineFit};
use crate::grid::{signed_index, slot_of, SpatialGrid};
use crate::lattice::{FourierLattice, LatticeField};

/// Default `ε` in the numerator index `b − 1 + ε`.
pub const DEFAULT_EPS: f64 = 0.01;

fn modulation_weight(params: &DispersionParams, s: f64, b: f64) -> impl Fn(f64, f64) -> f64 + '_ {
    move |xi, tau| japanese(xi).powf(s) * japanese(tau - phase(params, xi)).powf(b)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("eps {eps} must be positive")))
    }
}

/// Zero-pads a spectrum onto the grid with twice the samples in each
/// direction over the same box, so products of the padded fields are
/// alias-free.
fn pad(sp: &SpaceTimeSpectrum, big: &SpaceTimeGrid) -> SpaceTimeSpectrum {
    let g = sp.grid();
    let (n, nt) = (g.spatial().n(), g.nt());
    let big_n = big.spatial().n();
    let mut out = vec![Complex64::new(0.0, 0.0); big_n * big.nt()];
    for i in 0..nt {
        let bi = slot_of(signed_index(i, nt), big.nt()).expect("padded band contains the original");
        for j in 0..n {
            let bj = slot_of(signed_index(j, n), big_n).expect("padded band contains the original");
            out[bi * big_n + bj] = sp.coeffs()[i * n + j];
        }
    }
    SpaceTimeSpectrum::from_coeffs(big, out).expect("sizes agree")
}

/// `‖∂ₓ(uv)‖_{X_{s,b−1+ε}} / (‖u‖_{X_{s,b}} ‖v‖_{X_{s,b}})` on a dense grid.
///
/// The product is formed on the doubled grid, which makes it exact for the
/// represented modes. Frequencies use absolute `τ` labels, so the inputs
/// must be resolved in time: their spectra should vanish near the temporal
/// Nyquist band.
pub fn bilinear_ratio(
    u: &SpaceTimeField,
    v: &SpaceTimeField,
    s: f64,
    b: f64,
    eps: f64,
    params: &DispersionParams,
) -> Result<f64> {
    check_eps(eps)?;
    if u.grid() != v.grid() {
        return Err(invalid("fields live on different grids"));
    }
    if u.is_zero() || v.is_zero() {
        return Err(Error::Domain("bilinear ratio of a zero field is undefined".into()));
    }
    let g = u.grid();
    let big_spatial = SpatialGrid::new(2 * g.spatial().n(), g.spatial().box_length())?;
    let big = SpaceTimeGrid::new(big_spatial, 2 * g.nt(), g.t_window())?;
    let (su, sv) = (u.spectrum(), v.spectrum());
    let (pu, pv) = (pad(&su, &big).to_field(), pad(&sv, &big).to_field());
    let mut prod = pu.clone();
    prod.values_mut().par_iter_mut().zip(pv.values().par_iter()).for_each(|(a, b)| *a *= b);
    let ps = prod.spectrum();
    let w = modulation_weight(params, s, b - 1.0 + eps);
    let num = ps.weighted_norm(|xi, tau| xi.abs() * w(xi, tau));
    let idx = BourgainIndex::new(s, b);
    let den = su.xsb_norm(idx, params, TauLabels::Absolute) * sv.xsb_norm(idx, params, TauLabels::Absolute);
    Ok(num / den)
}

/// Parameters of the first counterexample family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counterexample1Spec {
    pub n_param: f64,
    pub params: DispersionParams,
}

impl Counterexample1Spec {
    pub fn new(n_param: f64, params: DispersionParams) -> Result<Self> {
        if !(n_param >= 4.0 && n_param.is_finite()) {
            return Err(invalid(format!("N = {n_param} must be at least 4")));
        }
        Ok(Self { n_param, params })
    }

    /// The lattice used by the sweeps: `Δξ = N^{−1/2}/16`, `Δτ = 1/8`.
    pub fn default_lattice(&self) -> FourierLattice {
        FourierLattice::new(self.n_param.powf(-0.5) / 16.0, 0.125).expect("positive spacings")
    }

    fn check(&self, lattice: &FourierLattice) -> Result<()> {
        let need = self.n_param.powf(-0.5) / 8.0;
        if lattice.dxi() > need || lattice.dtau() > 0.25 {
            return Err(Error::Unresolved(format!(
                "lattice ({}, {}) is coarser than (N^-1/2/8 = {need}, 1/4)",
                lattice.dxi(),
                lattice.dtau()
            )));
        }
        Ok(())
    }

    /// `{ξ ∈ [lo, hi], |τ − p(ξ)| ≤ 1}`.
    fn strip(&self, lattice: FourierLattice, lo: f64, hi: f64) -> LatticeField {
        let p = self.params;
        LatticeField::indicator(
            lattice,
            lo,
            hi,
            |xi| (phase(&p, xi) - 1.0, phase(&p, xi) + 1.0),
            |xi, tau| (tau - phase(&p, xi)).abs() <= 1.0,
        )
    }

    /// `A = {N ≤ ξ ≤ N + N^{−1/2}, |τ − p(ξ)| ≤ 1}`.
    pub fn set_a(&self, lattice: FourierLattice) -> Result<LatticeField> {
        self.check(&lattice)?;
        let n = self.n_param;
        Ok(self.strip(lattice, n, n + n.powf(-0.5)))
    }

    /// `B = {−N + N^{−1/2}/2 ≤ ξ ≤ −N + 3N^{−1/2}/4, |τ − p(ξ)| ≤ 1}`.
    pub fn set_b(&self, lattice: FourierLattice) -> Result<LatticeField> {
        self.check(&lattice)?;
        let n = self.n_param;
        let r = n.powf(-0.5);
        Ok(self.strip(lattice, -n + 0.5 * r, -n + 0.75 * r))
    }
}

/// `1_A + 1_{−A}`.
pub fn build_case1(spec: &Counterexample1Spec, lattice: FourierLattice) -> Result<LatticeField> {
    let a = spec.set_a(lattice)?;
    Ok(a.add(&a.reflect()))
}

/// The rectangle `R` at the origin along `(1, p'(N))`, of length `2N^{−1/2}`
/// and width `2·10⁻²N⁻²`: the difference set of the thin rectangle inside
/// `A` with corner `(N, p(N))`. Returns `(centre offsets, unit direction)`
/// helpers as sample points covering the middle half of `R`.
pub fn case1_rectangle_samples(spec: &Counterexample1Spec, per_side: usize) -> Vec<(f64, f64)> {
    let n = spec.n_param;
    let slope = group_velocity(&spec.params, n);
    let norm = (1.0 + slope * slope).sqrt();
    let (ux, ut) = (1.0 / norm, slope / norm);
    let (vx, vt) = (-ut, ux);
    let half_long = 0.5 * n.powf(-0.5);
    let half_short = 0.5 * 1e-2 * n.powi(-2);
    let mut out = Vec::with_capacity(per_side * per_side);
    for i in 0..per_side {
        for j in 0..per_side {
            let a = half_long * (2.0 * i as f64 / (per_side - 1).max(1) as f64 - 1.0);
            let c = half_short * (2.0 * j as f64 / (per_side - 1).max(1) as f64 - 1.0);
            out.push((a * ux + c * vx, a * ut + c * vt));
        }
    }
    out
}

/// Lower bounds from one `N` of the first family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Case1Ratios {
    /// `‖K(f, f)‖ / ‖f‖²` with `f = 1_A + 1_{−A}`.
    pub primal: f64,
    /// `‖K*(1_A, 1_B)‖ / (‖1_A‖‖1_B‖)`, the optimal pairing against `A` and `B`.
    pub dual: f64,
}

impl Case1Ratios {
    pub fn ratio(&self) -> f64 {
        self.primal.max(self.dual)
    }
}

pub fn case1_ratios(
    spec: &Counterexample1Spec,
    lattice: FourierLattice,
    s: f64,
    b: f64,
    eps: f64,
) -> Result<Case1Ratios> {
    check_eps(eps)?;
    let p = spec.params;
    let wb = modulation_weight(&p, s, b);
    let wout = modulation_weight(&p, s, b - 1.0 + eps);

    let f = build_case1(spec, lattice)?;
    let big_f = f.map(|xi, tau, v| v / wb(xi, tau));
    let k = big_f.convolve(&big_f).map(|xi, tau, v| xi.abs() * wout(xi, tau) * v / (2.0 * PI));
    let primal = k.l2_norm() / f.l2_norm().powi(2);

    let g = spec.set_a(lattice)?;
    let h = spec.set_b(lattice)?;
    let big_g = g.map(|xi, tau, v| xi.abs() * wout(xi, tau) * v);
    let big_h = h.map(|xi, tau, v| v / wb(xi, tau));
    let adj = big_g.convolve(&big_h.reflect()).map(|xi, tau, v| v / wb(xi, tau) / (2.0 * PI));
    let dual = adj.l2_norm() / (g.l2_norm() * h.l2_norm());
    Ok(Case1Ratios { primal, dual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: f64,
    pub ratio: f64,
    pub primal: f64,
    pub dual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSweepResult {
    pub s: f64,
    pub b: f64,
    pub eps: f64,
    pub points: Vec<SweepPoint>,
    /// Absent when fewer than two `N` were swept.
    pub fit: Option<LineFit>,
}

impl RatioSweepResult {
    pub fn spread(&self) -> f64 {
        let max = self.points.iter().map(|p| p.ratio).fold(f64::MIN, f64::max);
        let min = self.points.iter().map(|p| p.ratio).fold(f64::MAX, f64::min);
        max / min
    }
}

/// First-family ratios over `n_list` on the default lattices, with a
/// log-log slope.
pub fn sweep_case1(
    s: f64,
    b: f64,
    eps: f64,
    params: &DispersionParams,
    n_list: &[f64],
) -> Result<RatioSweepResult> {
    if n_list.is_empty() {
        return Err(invalid("empty N list"));
    }
    let points = n_list
        .par_iter()
        .map(|&n| {
            let spec = Counterexample1Spec::new(n, *params)?;
            let r = case1_ratios(&spec, spec.default_lattice(), s, b, eps)?;
            Ok(SweepPoint { n, ratio: r.ratio(), primal: r.primal, dual: r.dual })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = if points.len() >= 2 {
        let ns: Vec<f64> = points.iter().map(|p| p.n).collect();
        let rs: Vec<f64> = points.iter().map(|p| p.ratio).collect();
        Some(fit_loglog(&ns, &rs)?)
    } else {
        None
    };
    Ok(RatioSweepResult { s, b, eps, points, fit })
}

/// Parameters of the second family, at the endpoint `s = −3/4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample2Spec {
    pub n_param: f64,
    pub m: u32,
    pub a_seq: Vec<f64>,
    pub params: DispersionParams,
}

impl Counterexample2Spec {
    pub fn new(n_param: f64, m: u32, a_seq: Vec<f64>, params: DispersionParams) -> Result<Self> {
        if a_seq.len() != m as usize + 1 {
            return Err(invalid(format!("need m + 1 = {} coefficients, got {}", m + 1, a_seq.len())));
        }
        if a_seq.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(invalid("coefficients a_j must be positive"));
        }
        if n_param.is_nan() || 4f64.powi(m as i32 + 1) > n_param / 16.0 {
            return Err(invalid(format!("4^(m+1) = {} exceeds N/16 = {}", 4f64.powi(m as i32 + 1), n_param / 16.0)));
        }
        Ok(Self { n_param, m, a_seq, params })
    }

    /// The strip width `δ = (4^{m+1}/N)^{1/2}`.
    pub fn width(&self) -> f64 {
        (4f64.powi(self.m as i32 + 1) / self.n_param).sqrt()
    }

    /// `Δξ = δ/32`, `Δτ = 1/8`.
    pub fn default_lattice(&self) -> FourierLattice {
        FourierLattice::new(self.width() / 32.0, 0.125).expect("positive spacings")
    }

    fn check(&self, lattice: &FourierLattice) -> Result<()> {
        if lattice.dxi() > self.width() / 16.0 || lattice.dtau() > 0.25 {
            return Err(Error::Unresolved(format!(
                "lattice ({}, {}) is coarser than (δ/16 = {}, 1/4)",
                lattice.dxi(),
                lattice.dtau(),
                self.width() / 16.0
            )));
        }
        Ok(())
    }

    /// `A_j`; for `j < m` the modulation shell `4^j ≤ |τ−p(ξ)| < 4^{j+1}`
    /// over `N ≤ |ξ| ≤ N + δ`, and for `j = m` the two parallelograms hanging
    /// below (above) the tangent line at `(±N, p(±N))`.
    pub fn set(&self, j: u32, lattice: FourierLattice) -> Result<LatticeField> {
        self.check(&lattice)?;
        if j > self.m {
            return Err(invalid(format!("set index {j} exceeds m = {}", self.m)));
        }
        let p = self.params;
        let (n, d) = (self.n_param, self.width());
        let lo = 4f64.powi(j as i32);
        let hi = 4.0 * lo;
        let sides = if j < self.m {
            let side = |a: f64, b: f64| {
                LatticeField::indicator(
                    lattice,
                    a,
                    b,
                    |xi| (phase(&p, xi) - hi, phase(&p, xi) + hi),
                    |xi, tau| {
                        let l = (tau - phase(&p, xi)).abs();
                        lo <= l && l < hi
                    },
                )
            };
            side(n, n + d).add(&side(-n - d, -n))
        } else {
            let slope = group_velocity(&p, n);
            let pn = phase(&p, n);
            let plus = LatticeField::indicator(
                lattice,
                n,
                n + d,
                |xi| (pn + slope * (xi - n) - hi, pn + slope * (xi - n) - lo),
                |xi, tau| {
                    let c = tau - (pn + slope * (xi - n));
                    -hi <= c && c <= -lo
                },
            );
            plus.add(&plus.reflect())
        };
        Ok(sides)
    }

    /// Exact measure of `A_j`: `24·4^{j+m/2}N^{−1/2}` for `j < m` and
    /// `12·4^{3m/2}N^{−1/2}` for `j = m`.
    pub fn exact_area(&self, j: u32) -> f64 {
        let root = self.n_param.powf(-0.5);
        let m = self.m as f64;
        if j < self.m {
            24.0 * 4f64.powf(j as f64 + m / 2.0) * root
        } else {
            12.0 * 4f64.powf(1.5 * m) * root
        }
    }

    /// The region `R`: two parallelograms similar to those of `A_m` with half
    /// their side lengths, centred at `(±7δ/12, 0)`.
    pub fn region_r(&self, lattice: FourierLattice) -> Result<LatticeField> {
        self.check(&lattice)?;
        let slope = group_velocity(&self.params, self.n_param);
        let d = self.width();
        let half_height = 0.75 * 4f64.powi(self.m as i32);
        let c = 7.0 * d / 12.0;
        let plus = LatticeField::indicator(
            lattice,
            c - d / 4.0,
            c + d / 4.0,
            |xi| (slope * (xi - c) - half_height, slope * (xi - c) + half_height),
            |xi, tau| (tau - slope * (xi - c)).abs() <= half_height,
        );
        Ok(plus.add(&plus.reflect()))
    }
}

/// `f̂ = N Σⱼ 4^{−j−m/4} aⱼ 1_{A_j}`.
pub fn build_case2(spec: &Counterexample2Spec, lattice: FourierLattice) -> Result<LatticeField> {
    let mut out = LatticeField::empty(lattice);
    let m = spec.m as f64;
    for j in 0..=spec.m {
        let c = spec.n_param * 4f64.powf(-(j as f64) - m / 4.0) * spec.a_seq[j as usize];
        out = out.add(&spec.set(j, lattice)?.scale(c));
    }
    Ok(out)
}

/// `(a_m Σⱼ aⱼ, Σⱼ aⱼ²)`.
pub fn case2_inequality_ratio(a_seq: &[f64]) -> Result<(f64, f64)> {
    let last = *a_seq.last().ok_or_else(|| invalid("empty coefficient sequence"))?;
    if a_seq.iter().any(|a| a.is_nan() || *a <= 0.0) {
        return Err(invalid("coefficients must be positive"));
    }
    let sum: f64 = a_seq.iter().sum();
    let sq: f64 = a_seq.iter().map(|a| a * a).sum();
    Ok((last * sum, sq))
}

/// `aⱼ = 1/(1+j)` for `j < m` and `a_m = 1`.
pub fn harmonic_sequence(m: usize) -> Vec<f64> {
    let mut a: Vec<f64> = (0..m).map(|j| 1.0 / (1.0 + j as f64)).collect();
    a.push(1.0);
    a
}
