//! Reproducible random generation for the null families and the
//! alternatives used in power studies.

mod alternative;
mod family;
mod sample;
mod stream;
pub mod variates;

pub use alternative::{sample_alternative, sample_skew_t, Alternative};
pub use family::{
    sample_kotz, sample_mvlaplace, sample_mvnormal, sample_mvt, sample_scale_mixture,
    sample_sphere, Family, FamilySpec,
};
pub use sample::Sample;
pub use stream::{derive_stream_id, Phase, RngStream, StreamRng};
