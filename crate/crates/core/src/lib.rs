//! Measurable privacy for person-specific attribute tables.
//!
//! The crate models binary/categorical attribute tables (of the kind produced
//! by face-attribute annotation pipelines), quantifies their privacy with
//! k-anonymity, entropy l-diversity and t-closeness, and transforms them with
//! a distance-gated attribute obfuscator backed by randomized response.
//! Companion modules simulate re-identification attacks, craft minimal
//! adversarial perturbations against affine classifiers, and provide
//! classical image obfuscation plus quality measurement.

pub mod adversarial;
pub mod anonymize;
pub mod attack;
pub mod celeba;
pub mod dist;
pub mod image;
pub mod metrics;
pub mod noise;
pub mod rng;
pub mod table;

pub use dist::{emd, DiscreteDistribution, GroundDistance};
pub use metrics::{
    entropy_l_diversity, k_anonymity, privacy_report, t_closeness, PrivacyReport,
};
pub use noise::Epsilon;
pub use rng::RandomSource;
pub use table::{build_table, AttributeSchema, AttributeTable, Record};
