//! Monte Carlo laboratory for interacting branching random walks on Cayley
//! graphs.
//!
//! * [`group`]: base groups, symmetric step laws, return probabilities,
//!   spectral radius, Green sums, growth.
//! * [`gw`]: offspring laws, unimodular root law, gamma-thinning.
//! * [`brw`]: generation-synchronous BRW simulation on arena family trees.
//! * [`truncated`]: at most `N` particles per site and generation.
//! * [`competing`]: invasive/noninvasive pairs and the multi-seeded variant.
//! * [`percolation`]: induced percolation on marked trees, mass transport,
//!   mass redistribution, isoperimetry and the Bernoulli thinning oracle.
//!
//! Numerical routines are generic over the scalar type (see [`scalar`]);
//! the aliases below fix the common choices.

pub mod brw;
pub mod competing;
pub mod error;
pub mod group;
pub mod gw;
pub mod percolation;
pub mod scalar;
pub mod seed;
pub mod stats;
pub mod truncated;

pub use error::{BrwError, Result};
pub use scalar::{Field, Real};
pub use seed::Seed;

/// Exact rational scalar for identities that must hold without rounding.
pub type Rational = num_rational::BigRational;

pub type StepDistribution64 = group::StepDistribution<f64>;
pub type StepDistribution32 = group::StepDistribution<f32>;
pub type OffspringDistribution64 = gw::OffspringDistribution<f64>;
pub type OffspringDistribution32 = gw::OffspringDistribution<f32>;
pub type ReturnSeries64 = group::ReturnSeries<f64>;
pub type GammaTruncation64 = gw::GammaTruncation<f64>;
pub type ThinningOracle64 = percolation::ThinningOracle<f64>;
pub type PsiMassesExact = percolation::PsiMasses<Rational>;
pub type PsiMasses64 = percolation::PsiMasses<f64>;
