//! Scalar abstractions.
//!
//! Assignment only needs ordered ring arithmetic, so it runs over [`Weight`],
//! which covers `f32`, `f64` and exact rationals. Everything that takes logs,
//! square roots or probabilities runs over [`Real`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Element type of an assignment weight matrix.
pub trait Weight: Copy + Debug + PartialOrd + Num + Signed + Send + Sync + 'static {
    /// Slack used when deciding that two assignment values tie, given the
    /// magnitude of the largest entry involved. Zero for exact types.
    fn tie_tolerance(scale: &Self) -> Self;

    /// True for the `+inf` sentinel marking an unexplored channel.
    fn is_unbounded(&self) -> bool;

    /// NaN and `-inf` are not acceptable weights.
    fn is_admissible(&self) -> bool;
}

macro_rules! float_weight {
    ($t:ty, $eps:expr) => {
        impl Weight for $t {
            fn tie_tolerance(scale: &Self) -> Self {
                $eps * scale.abs().max(1.0)
            }

            fn is_unbounded(&self) -> bool {
                *self == <$t>::INFINITY
            }

            fn is_admissible(&self) -> bool {
                !self.is_nan() && *self != <$t>::NEG_INFINITY
            }
        }
    };
}

float_weight!(f32, 1e-5);
float_weight!(f64, 1e-9);

impl Weight for Ratio<i64> {
    fn tie_tolerance(_scale: &Self) -> Self {
        Ratio::from_integer(0)
    }

    fn is_unbounded(&self) -> bool {
        false
    }

    fn is_admissible(&self) -> bool {
        true
    }
}

/// Floating-point scalar used by the learning, sensing and metrics code.
pub trait Real:
    Float + FromPrimitive + Weight + Default + Display + Sum + for<'a> Sum<&'a Self>
{
    /// Lossless-enough conversion for counters.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable as float")
    }

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable as float")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Probability check shared by every config-facing constructor.
pub(crate) fn is_probability<T: Real>(p: T) -> bool {
    p >= T::zero() && p <= T::one()
}

/// Bernoulli draw. `p = 1` always succeeds and `p = 0` never does because the
/// uniform sample lies in `[0, 1)`.
pub(crate) fn bernoulli<T: ToPrimitive, R: rand::Rng + ?Sized>(rng: &mut R, p: T) -> bool {
    rng.gen::<f64>() < p.to_f64().unwrap_or(0.0)
}
