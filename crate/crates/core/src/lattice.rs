//! Sparse functions on a Fourier-side `(ξ, τ)` lattice.
//!
//! A [`LatticeField`] stores the values of a piecewise-constant function on
//! cells of size `Δξ × Δτ` centred at `(kΔξ, mΔτ)`. Sets are realized by
//! cell-centre membership. The representation only pays for occupied cells,
//! which keeps thin sets near `τ ≈ p(N) ~ N³` affordable where a dense
//! space-time grid would need `O(N³)` temporal samples.

use std::collections::BTreeMap;
use std::collections::HashMap;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierLattice {
    dxi: f64,
    dtau: f64,
}

impl FourierLattice {
    pub fn new(dxi: f64, dtau: f64) -> Result<Self> {
        if !(dxi > 0.0 && dtau > 0.0 && dxi.is_finite() && dtau.is_finite()) {
            return Err(invalid(format!("lattice spacings ({dxi}, {dtau}) must be positive")));
        }
        Ok(Self { dxi, dtau })
    }

    pub fn dxi(&self) -> f64 {
        self.dxi
    }

    pub fn dtau(&self) -> f64 {
        self.dtau
    }

    pub fn cell_area(&self) -> f64 {
        self.dxi * self.dtau
    }

    pub fn xi(&self, k: i64) -> f64 {
        k as f64 * self.dxi
    }

    pub fn tau(&self, m: i64) -> f64 {
        m as f64 * self.dtau
    }

    /// Indices `k` whose centres lie in `[lo, hi]`.
    pub fn xi_range(&self, lo: f64, hi: f64) -> std::ops::RangeInclusive<i64> {
        (lo / self.dxi).ceil() as i64..=(hi / self.dxi).floor() as i64
    }

    pub fn tau_range(&self, lo: f64, hi: f64) -> std::ops::RangeInclusive<i64> {
        (lo / self.dtau).ceil() as i64..=(hi / self.dtau).floor() as i64
    }
}

/// Cell values keyed by `(k, m)`; absent cells are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    lattice: FourierLattice,
    cells: BTreeMap<(i64, i64), f64>,
}

impl LatticeField {
    pub fn empty(lattice: FourierLattice) -> Self {
        Self { lattice, cells: BTreeMap::new() }
    }

    /// Indicator of a set given by a membership test on cell centres. For
    /// each `ξ` column in `[xi_lo, xi_hi]`, `tau_window(ξ)` bounds the `τ`
    /// values that need testing.
    pub fn indicator(
        lattice: FourierLattice,
        xi_lo: f64,
        xi_hi: f64,
        tau_window: impl Fn(f64) -> (f64, f64),
        member: impl Fn(f64, f64) -> bool,
    ) -> Self {
        let mut cells = BTreeMap::new();
        for k in lattice.xi_range(xi_lo, xi_hi) {
            let xi = lattice.xi(k);
            let (lo, hi) = tau_window(xi);
            for m in lattice.tau_range(lo, hi) {
                if member(xi, lattice.tau(m)) {
                    cells.insert((k, m), 1.0);
                }
            }
        }
        Self { lattice, cells }
    }

    pub fn lattice(&self) -> FourierLattice {
        self.lattice
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, k: i64, m: i64) -> f64 {
        self.cells.get(&(k, m)).copied().unwrap_or(0.0)
    }

    pub fn cells(&self) -> impl Iterator<Item = ((i64, i64), f64)> + '_ {
        self.cells.iter().map(|(&key, &v)| (key, v))
    }

    /// Measure of the support.
    pub fn area(&self) -> f64 {
        self.cells.len() as f64 * self.lattice.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.cells.values().map(|v| v * v).sum::<f64>() * self.lattice.cell_area()).sqrt()
    }

    /// Pointwise `v ↦ g(ξ, τ, v)`.
    pub fn map(&self, g: impl Fn(f64, f64, f64) -> f64) -> Self {
        let l = self.lattice;
        let cells = self.cells.iter().map(|(&(k, m), &v)| ((k, m), g(l.xi(k), l.tau(m), v))).collect();
        Self { lattice: l, cells }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|_, _, v| c * v)
    }

    /// `f(−ξ, −τ)`.
    pub fn reflect(&self) -> Self {
        Self { lattice: self.lattice, cells: self.cells.iter().map(|(&(k, m), &v)| ((-k, -m), v)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut cells = self.cells.clone();
        for (&key, &v) in &other.cells {
            *cells.entry(key).or_insert(0.0) += v;
        }
        Self { lattice: self.lattice, cells }
    }

    /// Cells present in both supports.
    pub fn overlap(&self, other: &Self) -> usize {
        self.cells.keys().filter(|key| other.cells.contains_key(key)).count()
    }

    /// Largest `|f(ξ,τ) − f(−ξ,−τ)|`; zero for the coefficients of a real field.
    pub fn symmetry_defect(&self) -> f64 {
        let r = self.reflect();
        self.cells
            .iter()
            .map(|(&(k, m), &v)| (v - r.get(k, m)).abs())
            .chain(r.cells.iter().map(|(&(k, m), &v)| (v - self.get(k, m)).abs()))
            .fold(0.0, f64::max)
    }

    /// `(f ∗ g)` sampled at cell centres: `Σ f(a) g(b) ΔξΔτ` over `a + b`.
    pub fn convolve(&self, other: &Self) -> Self {
        assert_eq!(self.lattice, other.lattice, "convolution needs a common lattice");
        let area = self.lattice.cell_area();
        let mut acc: HashMap<(i64, i64), f64> = HashMap::new();
        for (&(k1, m1), &v1) in &self.cells {
            for (&(k2, m2), &v2) in &other.cells {
                *acc.entry((k1 + k2, m1 + m2)).or_insert(0.0) += v1 * v2 * area;
            }
        }
        Self { lattice: self.lattice, cells: acc.into_iter().collect() }
    }

    /// The exact convolution of the piecewise-constant functions at an
    /// arbitrary point; two cell boxes convolve to a product of tents.
    pub fn convolution_at(&self, other: &Self, xi: f64, tau: f64) -> f64 {
        let l = self.lattice;
        let (dx, dt) = (l.dxi, l.dtau);
        let ks = ((xi / dx).floor() as i64, (xi / dx).ceil() as i64);
        let ms = ((tau / dt).floor() as i64, (tau / dt).ceil() as i64);
        let mut sum = 0.0;
        for (&(k1, m1), &v1) in &self.cells {
            for k in ks.0..=ks.1 {
                for m in ms.0..=ms.1 {
                    let v2 = other.get(k - k1, m - m1);
                    if v2 == 0.0 {
                        continue;
                    }
                    let ex = (dx - (xi - l.xi(k)).abs()).max(0.0);
                    let et = (dt - (tau - l.tau(m)).abs()).max(0.0);
                    sum += v1 * v2 * ex * et;
                }
            }
        }
        sum
    }
}
