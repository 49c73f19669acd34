//! Normality classes of continuous maps: constructive partition builders
//! and brute-force deciders.

pub mod builder;

pub use builder::{
    build_binary_partitions, build_binary_partitions_sigma, build_families, small_urysohn_search,
    verify_partition_conditions, BuiltFamilies, PartitionProblem, SearchMode,
};
pub mod deciders;

pub use deciders::{
    are_f_separated, is_co_perfectly_normal, is_co_sigma_perfectly_normal, is_hereditarily_normal, is_normal,
    is_prenormal, is_sigma_normal, is_sigma_prenormal, Counterexample, Decision, SeparationCertificate, Witness,
};
pub mod perfect;

pub use perfect::{
    functional_characterization, is_f_functionally_closed, is_f_functionally_open, is_perfectly_normal,
    PerfectNormalityWitness,
};
