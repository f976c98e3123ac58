//! Two-user downlink multiple access over a multi-antenna transmitter, where a
//! shared H-QAM symbol and two private H-QAM symbols are jointly Gray mapped
//! and precoded so that each single-antenna receiver sees its own Gray-coded
//! composite H-QAM constellation.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the stated
//! tolerances assume.

pub mod demapper;
pub mod error;
pub mod geometry;
pub mod hqam;
pub mod inforate;
pub mod region;
pub mod scalar;

pub use error::{Branch, Error, Result};
pub use scalar::Real;

pub type Profile = hqam::DistanceProfile<f64>;
pub type Pam = hqam::HierPam<f64>;
pub type Channels = geometry::ChannelPair<f64>;
pub type Precoders = geometry::PrecoderSet<f64>;
pub type Equivalent = geometry::EquivalentChannel<f64>;
pub type Mode = region::ModeConfig<f64>;
pub type Point = region::ModePoint<f64>;
pub type Region = region::RateRegion<f64>;
pub type Rates = inforate::RatePoint<f64>;

pub type Profile32 = hqam::DistanceProfile<f32>;
pub type Pam32 = hqam::HierPam<f32>;
pub type Channels32 = geometry::ChannelPair<f32>;
pub type Mode32 = region::ModeConfig<f32>;
