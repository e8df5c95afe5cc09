//! Weight-dependent random connection models on the real line.
//!
//! Vertices are points of a stationary point process with i.i.d. uniform
//! marks; two vertices at distance `d` with marks `s, t` are joined with
//! probability `ρ(g(s, t) d / β)`. The crate samples such graphs, measures
//! their clusters and computes the effective decay exponent that decides
//! whether the percolation threshold is finite.

pub mod clusters;
pub mod error;
pub mod kernels;
pub mod multiscale;
pub mod point_process;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod theory;

pub use clusters::{components, degree_report, theta_estimate, ClusterReport, DegreeReport, UnionFind};
pub use error::{Error, Result};
pub use kernels::{
    connection_probability, kernel_eval, profile_eval, KernelSpec, KernelVariant, ModelParams, ProfileSpec,
    ProfileVariant,
};
pub use multiscale::{
    block_goodness, block_partition, crossing_stage_indicator, crossing_sweep, mu_regular_lower, mu_regular_upper,
    scale_k, BlockReport, CrossingReport, ScaleSchedule,
};
pub use point_process::{
    check_evenly_spaced_a, check_evenly_spaced_b, sample_deterministic_lattice, sample_lattice_bernoulli,
    sample_poisson_palm, MarkedConfiguration, PointProcessSpec, Source, Vertex,
};
pub use rng::derive_seed;
pub use sampler::{
    pair_uniform, sample_crossing_edges, sample_edges, sample_edges_layered, sample_edges_naive, sample_finite_graph,
    GraphSample, SamplerKind,
};
pub use theory::{
    classify_regime, condition_a1_sequence, condition_a2_partial_sums, delta_eff_closed_form, delta_eff_estimate,
    edge_marginal, integral_i, quenched_tail_alpha, DeltaEffReport, Regime, RegimeLabel,
};
