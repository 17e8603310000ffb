//! Floating-point scalar abstraction.
//!
//! Everything in this crate is generic over the real scalar type through
//! [`Scalar`], which bundles the numeric traits the simulator needs together
//! with the random draws used by the measurement samplers. Implementations
//! are provided for `f32` and `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};
use serde::{de::DeserializeOwned, Serialize};

/// Real scalar type used for matrix entries, amplitudes, and observables.
///
/// The random-draw methods live on the trait so that samplers can stay
/// generic without leaking distribution trait bounds into their signatures.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Draws from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws uniformly from the closed interval `[lo, hi]`. Requires `lo <= hi`.
    fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;

    /// Draws a Poisson count with the given mean. A mean of zero (or below)
    /// yields zero; the mean must be finite.
    fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: Self) -> u64;

    /// Draws a binomial count over `trials` trials with success probability
    /// `p`, clamped into `[0, 1]`.
    fn binomial_count<R: Rng + ?Sized>(rng: &mut R, trials: u64, p: Self) -> u64;
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
                rng.random_range(lo..=hi)
            }

            fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: Self) -> u64 {
                let mean = mean.to_f64().expect("poisson mean convertible to f64");
                assert!(mean.is_finite(), "poisson mean must be finite");
                if mean <= 0.0 {
                    return 0;
                }
                let draw: f64 = Poisson::new(mean)
                    .expect("positive finite poisson mean")
                    .sample(rng);
                draw as u64
            }

            fn binomial_count<R: Rng + ?Sized>(rng: &mut R, trials: u64, p: Self) -> u64 {
                let p = p.to_f64().expect("probability convertible to f64");
                assert!(p.is_finite(), "binomial probability must be finite");
                let p = p.clamp(0.0, 1.0);
                if trials == 0 || p == 0.0 {
                    return 0;
                }
                Binomial::new(trials, p)
                    .expect("valid binomial parameters")
                    .sample(rng)
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// Converts a count to the scalar type, rounding if the mantissa is too
/// narrow to hold it exactly.
pub(crate) fn from_count<T: Scalar>(count: u64) -> T {
    T::from_u64(count).expect("count convertible to float")
}
