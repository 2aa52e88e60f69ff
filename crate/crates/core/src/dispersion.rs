//! The dispersion symbol `p(ξ) = βξ³ − αξ|ξ| + γξ` and the phase functions
//! built from it.
//!
//! The three-wave resonance function `h(ξ₁,ξ₂,ξ₃) = p(ξ₁)+p(ξ₂)+p(ξ₃)` on the
//! plane `ξ₁+ξ₂+ξ₃ = 0` factors on each of six angular sectors of the
//! `(ξ₁,ξ₂)` plane, and the two-frequency phase `q(ξ,ξ₂) = p(ξ₂)+p(ξ−ξ₂)`
//! completes to a square on each of four sectors. Both direct and factored
//! forms are provided so that each can check the other.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::SplitMix64;

/// Coefficients `(α, β, γ)` of the symbol. `β` is never zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl DispersionParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite()) {
            return Err(invalid("dispersion coefficients must be finite"));
        }
        if beta == 0.0 {
            return Err(invalid("beta must be nonzero"));
        }
        Ok(Self { alpha, beta, gamma })
    }

    /// The pure KdV symbol `ξ³`.
    pub fn kdv() -> Self {
        Self { alpha: 0.0, beta: 1.0, gamma: 0.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Same symbol with the transport coefficient replaced.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }

    /// `2α / 3β`, the shift appearing in every factored form.
    fn shift(&self) -> f64 {
        2.0 * self.alpha / (3.0 * self.beta)
    }

    /// `max{1, 4|α| / 3|β|}`: above this frequency the resonance function is
    /// comparable to `|ξ₁ξ₂ξ₃|`.
    pub fn resonance_threshold(&self) -> f64 {
        (4.0 * self.alpha.abs() / (3.0 * self.beta.abs())).max(1.0)
    }
}

/// `p(ξ)`.
pub fn phase(params: &DispersionParams, xi: f64) -> f64 {
    params.beta * xi * xi * xi - params.alpha * xi * xi.abs() + params.gamma * xi
}

/// `p'(ξ) = 3βξ² − 2α|ξ| + γ`.
pub fn group_velocity(params: &DispersionParams, xi: f64) -> f64 {
    3.0 * params.beta * xi * xi - 2.0 * params.alpha * xi.abs() + params.gamma
}

/// A point of the plane `ξ₁+ξ₂+ξ₃ = 0`, stored through `(ξ₁, ξ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTriple {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
}

impl FrequencyTriple {
    pub fn new(xi1: f64, xi2: f64) -> Self {
        Self { xi1, xi2, xi3: -(xi1 + xi2) }
    }

    /// Builds a triple from three explicit frequencies, checking the zero-sum
    /// constraint to `1e-12 · max|ξⱼ|`.
    pub fn from_three(xi1: f64, xi2: f64, xi3: f64) -> Result<Self> {
        let scale = xi1.abs().max(xi2.abs()).max(xi3.abs());
        if (xi1 + xi2 + xi3).abs() > 1e-12 * scale {
            return Err(Error::Domain(format!(
                "frequencies ({xi1}, {xi2}, {xi3}) do not sum to zero"
            )));
        }
        Ok(Self { xi1, xi2, xi3 })
    }

    pub fn negate(&self) -> Self {
        Self { xi1: -self.xi1, xi2: -self.xi2, xi3: -self.xi3 }
    }

    fn product(&self) -> f64 {
        self.xi1 * self.xi2 * self.xi3
    }
}

/// The six sectors of the `(ξ₁, ξ₂)` plane cut out by `ξ₁ = 0`, `ξ₂ = 0` and
/// `ξ₁ + ξ₂ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HRegionId {
    /// `ξ₁ ≥ 0, ξ₂ ≥ 0`
    R1,
    /// `ξ₁ ≤ 0, ξ₂ ≤ 0`
    R2,
    /// `ξ₁ ≥ 0, ξ₂ ≤ 0, ξ₁+ξ₂ ≥ 0`
    R3,
    /// `ξ₁ ≥ 0, ξ₂ ≤ 0, ξ₁+ξ₂ ≤ 0`
    R4,
    /// `ξ₁ ≤ 0, ξ₂ ≥ 0, ξ₁+ξ₂ ≥ 0`
    R5,
    /// `ξ₁ ≤ 0, ξ₂ ≥ 0, ξ₁+ξ₂ ≤ 0`
    R6,
}

/// Closed sectors; on a shared boundary the lowest-numbered one wins.
pub fn classify_h_region(t: &FrequencyTriple) -> HRegionId {
    let (a, b) = (t.xi1, t.xi2);
    let s = a + b;
    if a >= 0.0 && b >= 0.0 {
        HRegionId::R1
    } else if a <= 0.0 && b <= 0.0 {
        HRegionId::R2
    } else if a >= 0.0 && s >= 0.0 {
        HRegionId::R3
    } else if a >= 0.0 {
        HRegionId::R4
    } else if s >= 0.0 {
        HRegionId::R5
    } else {
        HRegionId::R6
    }
}

/// `h = p(ξ₁)+p(ξ₂)+p(ξ₃)` summed term by term.
pub fn resonance_direct(params: &DispersionParams, t: &FrequencyTriple) -> f64 {
    phase(params, t.xi1) + phase(params, t.xi2) + phase(params, t.xi3)
}

/// `h` through the factored form of the sector containing the triple.
pub fn resonance_closed(params: &DispersionParams, t: &FrequencyTriple) -> f64 {
    let c = params.shift();
    let tb = 3.0 * params.beta;
    let (x1, x2, x3) = (t.xi1, t.xi2, t.xi3);
    match classify_h_region(t) {
        HRegionId::R1 => tb * x1 * x2 * (x3 + c),
        HRegionId::R2 => tb * x1 * x2 * (x3 - c),
        HRegionId::R3 => tb * x2 * x3 * (x1 - c),
        HRegionId::R4 => tb * x1 * x3 * (x2 + c),
        HRegionId::R5 => tb * x1 * x3 * (x2 - c),
        HRegionId::R6 => tb * x2 * x3 * (x1 + c),
    }
}

/// `|h(ξ)| / |ξ₁ξ₂ξ₃|`.
pub fn resonance_ratio(params: &DispersionParams, t: &FrequencyTriple) -> Result<f64> {
    let prod = t.product();
    if prod == 0.0 {
        return Err(Error::Domain("resonance ratio needs all frequencies nonzero".into()));
    }
    Ok(resonance_closed(params, t).abs() / prod.abs())
}

/// Result of [`resonance_floor`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloorSweep {
    pub min_ratio: f64,
    pub argmin: FrequencyTriple,
    pub samples: usize,
}

/// Smallest [`resonance_ratio`] over triples whose two largest magnitudes are
/// at least `2·resonance_threshold()` and within a factor two of each other.
/// `ξ₁, ξ₂` run over `±2^{k/steps}` with magnitudes in `[2^{-2}, 2^{max_exp}]`.
pub fn resonance_floor(params: &DispersionParams, max_exp: u32, steps: u32) -> Result<FloorSweep> {
    if steps == 0 {
        return Err(invalid("need at least one sample per octave"));
    }
    let floor = 2.0 * params.resonance_threshold();
    let mags: Vec<f64> = (-2 * steps as i32..=(max_exp * steps) as i32)
        .map(|k| 2f64.powf(k as f64 / steps as f64))
        .collect();
    let axis: Vec<f64> = mags.iter().flat_map(|&m| [m, -m]).collect();
    let mut best: Option<(f64, FrequencyTriple)> = None;
    let mut samples = 0;
    for &x1 in &axis {
        for &x2 in &axis {
            let t = FrequencyTriple::new(x1, x2);
            let mut m = [x1.abs(), x2.abs(), t.xi3.abs()];
            m.sort_by(f64::total_cmp);
            if m[0] == 0.0 || m[1] < floor || m[2] > 2.0 * m[1] {
                continue;
            }
            samples += 1;
            let r = resonance_ratio(params, &t)?;
            if best.is_none_or(|(b, _)| r < b) {
                best = Some((r, t));
            }
        }
    }
    let (min_ratio, argmin) = best.ok_or_else(|| Error::Domain("no admissible triple on the grid".into()))?;
    Ok(FloorSweep { min_ratio, argmin, samples })
}

/// Sectors of the `(ξ, ξ₂)` plane keyed by the signs of `ξ₂` and `ξ − ξ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QRegionId {
    /// `ξ₂ ≥ 0, ξ−ξ₂ ≥ 0`
    Q1,
    /// `ξ₂ ≤ 0, ξ−ξ₂ ≤ 0`
    Q2,
    /// `ξ₂ ≥ 0, ξ−ξ₂ ≤ 0`
    Q3,
    /// `ξ₂ ≤ 0, ξ−ξ₂ ≥ 0`
    Q4,
}

pub fn classify_q_region(xi: f64, xi2: f64) -> QRegionId {
    let rest = xi - xi2;
    match (xi2 >= 0.0, rest >= 0.0, xi2 <= 0.0, rest <= 0.0) {
        (true, true, _, _) => QRegionId::Q1,
        (_, _, true, true) => QRegionId::Q2,
        (true, _, _, true) => QRegionId::Q3,
        _ => QRegionId::Q4,
    }
}

/// Whether the transport term `γξ` is folded into `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QVariant {
    /// `q` built from `βξ³ − αξ|ξ|` only.
    #[default]
    WithoutTransport,
    /// `q` plus `γξ`, i.e. exactly `p(ξ₂)+p(ξ−ξ₂)`.
    WithTransport,
}

/// `q(ξ, ξ₂)` summed term by term from the transport-free symbol.
pub fn q_direct(params: &DispersionParams, xi: f64, xi2: f64, variant: QVariant) -> f64 {
    let bare = params.with_gamma(0.0);
    let base = phase(&bare, xi2) + phase(&bare, xi - xi2);
    match variant {
        QVariant::WithoutTransport => base,
        QVariant::WithTransport => base + params.gamma * xi,
    }
}

/// `q(ξ, ξ₂)` through the completed square of its sector.
pub fn q_closed(params: &DispersionParams, xi: f64, xi2: f64, variant: QVariant) -> f64 {
    let (a, b) = (params.alpha, params.beta);
    let c = params.shift();
    let base = match classify_q_region(xi, xi2) {
        QRegionId::Q1 => {
            let d = xi2 - 0.5 * xi;
            (3.0 * b * xi - 2.0 * a) * d * d + 0.25 * (b * xi - 2.0 * a) * xi * xi
        }
        QRegionId::Q2 => {
            let d = xi2 - 0.5 * xi;
            (3.0 * b * xi + 2.0 * a) * d * d + 0.25 * (b * xi + 2.0 * a) * xi * xi
        }
        QRegionId::Q3 => {
            let d = xi2 - 0.5 * (xi + c);
            3.0 * b * xi * d * d + (0.25 * b * xi * xi * xi - a * a / (3.0 * b) * xi)
        }
        QRegionId::Q4 => {
            let d = xi2 - 0.5 * (xi - c);
            3.0 * b * xi * d * d + (0.25 * b * xi * xi * xi - a * a / (3.0 * b) * xi)
        }
    };
    match variant {
        QVariant::WithoutTransport => base,
        QVariant::WithTransport => base + params.gamma * xi,
    }
}

/// Random parameters with `α, γ ∈ [−10, 10]` and `|β| ∈ [0.1, 10]`.
pub fn random_params(rng: &mut SplitMix64) -> DispersionParams {
    let alpha = rng.uniform(-10.0, 10.0);
    let sign = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
    let beta = sign * 10f64.powf(rng.uniform(-1.0, 1.0));
    let gamma = rng.uniform(-10.0, 10.0);
    DispersionParams { alpha, beta, gamma }
}

/// Worst disagreement of the closed forms with direct evaluation, each
/// scaled by `1 + Σ|terms|` of the direct sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityErrors {
    pub h: f64,
    pub q: f64,
}

/// Compares closed and direct `h` and `q` at `samples` uniform points of `[−10³, 10³]²`.
pub fn identity_errors(params: &DispersionParams, samples: usize, seed: u64) -> IdentityErrors {
    let mut rng = SplitMix64::new(seed);
    let free = params.with_gamma(0.0);
    let mut out = IdentityErrors { h: 0.0, q: 0.0 };
    for _ in 0..samples {
        let (a, b) = (rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3));
        let t = FrequencyTriple::new(a, b);
        let scale = 1.0 + phase(params, t.xi1).abs() + phase(params, t.xi2).abs() + phase(params, t.xi3).abs();
        out.h = out.h.max((resonance_closed(params, &t) - resonance_direct(params, &t)).abs() / scale);
        let scale = 1.0 + phase(&free, b).abs() + phase(&free, a - b).abs();
        let err = (q_closed(params, a, b, QVariant::WithoutTransport) - q_direct(params, a, b, QVariant::WithoutTransport)).abs();
        out.q = out.q.max(err / scale);
    }
    out
}
