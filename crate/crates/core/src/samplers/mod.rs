//! Exact samplers for the model's primitive randomness: stable increments
//! (isotropic and totally/partially skewed), critical heavy-tail offspring
//! counts, Poisson initial fields, and reproducible per-replica RNG streams.

pub mod offspring;
pub mod poisson;
pub mod stable;
pub mod stream;

pub use offspring::sample_offspring;
pub use poisson::sample_poisson_field;
pub use stable::{
    sample_isotropic_increment, sample_positive_stable, sample_skewed_stable,
};
pub use stream::ReplicaStreams;
