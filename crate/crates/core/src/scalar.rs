//! Scalar abstraction so the numerical core works for `f32` and `f64`.

use nalgebra::RealField;
use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal, StandardUniform, Uniform};

use crate::special;

/// Floating point scalar usable throughout the crate.
///
/// Combines the `num-traits` and `nalgebra` float traits with the sampling
/// and special-function hooks the samplers need.
pub trait Scalar:
    Float + RealField + FromPrimitive + ToPrimitive + std::iter::Sum + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; panics only for non-finite inputs that the
    /// target type cannot represent, which does not occur for f32/f64.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 convertible to scalar")
    }

    /// Conversion to `f64` for reporting.
    fn to64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    fn ln_gamma(self) -> Self {
        Self::of(special::ln_gamma(self.to64()))
    }

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw on [0, 1).
    fn sample_uniform01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw on [low, high).
    fn sample_uniform<R: Rng + ?Sized>(low: Self, high: Self, rng: &mut R) -> Self;

    /// Gamma draw with the (shape, rate) parameterization.
    fn sample_gamma<R: Rng + ?Sized>(shape: Self, rate: Self, rng: &mut R) -> Self;

    /// Poisson count with the given mean.
    fn sample_poisson<R: Rng + ?Sized>(mean: Self, rng: &mut R) -> u64;
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn sample_uniform01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardUniform.sample(rng)
            }

            fn sample_uniform<R: Rng + ?Sized>(low: Self, high: Self, rng: &mut R) -> Self {
                Uniform::new(low, high).expect("valid uniform range").sample(rng)
            }

            fn sample_gamma<R: Rng + ?Sized>(shape: Self, rate: Self, rng: &mut R) -> Self {
                Gamma::new(shape, 1.0 / rate).expect("valid gamma parameters").sample(rng)
            }

            fn sample_poisson<R: Rng + ?Sized>(mean: Self, rng: &mut R) -> u64 {
                if mean <= 0.0 {
                    return 0;
                }
                let p: $t = Poisson::new(mean).expect("valid poisson mean").sample(rng);
                p as u64
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);
