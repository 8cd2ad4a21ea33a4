//! Scalar abstraction: the whole crate is generic over `Real`, implemented
//! for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, RemAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::distributions::uniform::SampleUniform;
use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar usable everywhere in the crate: f32 or f64.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + SampleUniform
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + RemAssign
    + Sum<Self>
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    fn of(v: f64) -> Self;
    fn of_usize(n: usize) -> Self;
    fn as_f64(self) -> f64;
    /// Standard normal draw.
    fn std_normal<G: Rng + ?Sized>(rng: &mut G) -> Self;
    /// Uniform draw on the open interval (0, 1).
    fn unit_open<G: Rng + ?Sized>(rng: &mut G) -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn of(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn of_usize(n: usize) -> Self {
                n as $t
            }
            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }
            #[inline]
            fn std_normal<G: Rng + ?Sized>(rng: &mut G) -> Self {
                StandardNormal.sample(rng)
            }
            #[inline]
            fn unit_open<G: Rng + ?Sized>(rng: &mut G) -> Self {
                Open01.sample(rng)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
