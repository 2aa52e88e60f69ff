//! Numerical laboratory for the Benjamin equation
//! `u_t + βu_xxx + αℋu_xx + γu_x + (u²)_x = 0`.
//!
//! * [`dispersion`]: the symbol `p(ξ)` and closed forms of the resonance functions.
//! * [`grid`], [`snapshot`]: periodic grids, transforms and the `BLAB1` format.
//! * [`bourgain`]: discrete `H^s` and `X_{s,b}` norms and the time cutoff.
//! * [`dyadic`]: multiplier blocks, their bounds and numerical lower bounds.
//! * [`bilinear`], [`lattice`]: counterexamples to the bilinear estimate.
//! * [`solver`]: integrating-factor RK4, Duhamel integrals and Picard iteration.
//! * [`illposed`]: the third Picard iterate and its growth in `N`.
//! * [`cli`]: the `blab` front end.

pub mod bilinear;
pub mod bourgain;
pub mod cli;
pub mod dispersion;
pub mod dyadic;
pub mod error;
pub mod fit;
pub mod grid;
pub mod illposed;
pub mod lattice;
pub mod rng;
pub mod snapshot;
pub mod solver;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/dispersion.md")]
    mod dispersion {}
    #[doc = include_str!("../../../book/src/fourier.md")]
    mod fourier {}
    #[doc = include_str!("../../../book/src/bourgain.md")]
    mod bourgain {}
    #[doc = include_str!("../../../book/src/blocks.md")]
    mod blocks {}
    #[doc = include_str!("../../../book/src/counterexamples.md")]
    mod counterexamples {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/growth.md")]
    mod growth {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
