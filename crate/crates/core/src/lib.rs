//! Free-streaming resolvent of the linearized steady Boltzmann equation.
//!
//! The crate works in the velocity spaces `L∞_r` with norm
//! `sup_ξ (1+|ξ|)^r |h(ξ)|` and provides:
//!
//! * [`velocity`]: weights, the collision-frequency model `ν(ξ) = ν₀⟨ξ⟩`,
//!   product velocity grids and weighted sup norms.
//! * [`transport`]: the kernel of `(ξ₁∂ₓ + ν)⁻¹`, its convolutions, and the
//!   displacement-wise operator-norm profile `σ(θ)`.
//! * [`collision`]: the Grad-bound model kernel `C|ξ-ξ*|⁻¹e^{-c|ξ-ξ*|²}`,
//!   its application by spherical quadrature and weighted operator norms.
//! * [`counterexample`]: the test family `g_α`, probe values, α-sweeps,
//!   finite-codimension combinations and the manufactured-solution identity.
//!
//! Numerical building blocks (adaptive Gauss–Kronrod quadrature,
//! golden-section search, log-log regression) live in [`quadrature`],
//! [`search`] and [`regression`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collision;
pub mod counterexample;
pub mod error;
pub mod quadrature;
pub mod regression;
pub mod search;
pub mod transport;
pub mod velocity;

pub use collision::GradKernelModel;
pub use counterexample::{Functional, SweepReport, TestFamilyParams};
pub use error::{Error, Result};
pub use transport::{SpatialProfile, TransportKernel};
pub use velocity::{CollisionFrequencyModel, Velocity, VelocityGrid, WeightOrder};
