//! Numerical laboratory for weighted improved Hardy inequalities.
//!
//! The crate evaluates inequalities of the form
//!
//! ```text
//! c ∫ φ²/|x|² dμ + ∫ V φ² dμ ≤ ∫ |∇φ|² dμ + K₁ ∫ φ² dμ,     dμ = μ(|x|) dx,
//! ```
//!
//! for radial weights and radial test functions in `R^N`, checks the structural
//! hypotheses on the weight and the corrector `g`, estimates best constants by
//! discrete generalized eigenproblems, and integrates the associated perturbed
//! Kolmogorov evolution problem `∂ₜu = Δu + (∇μ/μ)·∇u + Ṽu`.
//!
//! All numerical code is generic over a [`Real`] scalar (`f32` or `f64`);
//! the `*64` aliases at the crate root fix the scalar to `f64`, which is what
//! the command line front end uses.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correctors;
pub mod error;
pub mod evolution;
pub mod forms;
pub mod quadrature;
pub mod spectral;
pub mod weights;

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub use error::{LabError, Result};

/// Floating point scalar used throughout the crate: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type WeightSpec64 = weights::WeightSpec<f64>;
pub type AdmissibleConstants64 = weights::AdmissibleConstants<f64>;
pub type HypothesisReport64 = weights::HypothesisReport<f64>;
pub type CorrectorSpec64 = correctors::CorrectorSpec<f64>;
pub type PotentialSpec64 = correctors::PotentialSpec<f64>;
pub type BesselSolution64 = correctors::BesselSolution<f64>;
pub type RadialGrid64 = quadrature::RadialGrid<f64>;
pub type IntegralValue64 = quadrature::IntegralValue<f64>;
pub type TestFunction64 = forms::TestFunction<f64>;
pub type EffectivePotential64 = forms::EffectivePotential<f64>;
pub type HardyReport64 = forms::HardyReport<f64>;
pub type CertificateReport64 = forms::CertificateReport<f64>;
pub type TridiagonalForm64 = spectral::TridiagonalForm<f64>;
pub type SpectralResult64 = spectral::SpectralResult<f64>;
pub type EvolutionConfig64 = evolution::EvolutionConfig<f64>;
pub type EvolutionTrace64 = evolution::EvolutionTrace<f64>;
pub type ExponentialFit64 = evolution::ExponentialFit<f64>;

pub type WeightSpec32 = weights::WeightSpec<f32>;
pub type CorrectorSpec32 = correctors::CorrectorSpec<f32>;
pub type RadialGrid32 = quadrature::RadialGrid<f32>;
