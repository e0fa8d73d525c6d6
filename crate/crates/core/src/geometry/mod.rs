//! CHSH values, deterministic strategies and membership in the local polytope.

mod chsh;
mod membership;
mod simplex;
mod strategies;

pub use chsh::{chsh_max, correlators, ChshResult, ChshVariant};
pub use membership::{
    local_membership, local_membership_with, local_visibility, local_visibility_with,
    BellFunctional, LocalityCertificate, MembershipOptions, DEFAULT_MAX_PIVOTS, DEFAULT_TOL_BIS,
    DEFAULT_TOL_LP,
};
pub use simplex::{phase_one, PhaseOne};
pub use strategies::{
    enumerate_deterministic, enumerate_deterministic_with_cap, strategies, DeterministicStrategy,
    DEFAULT_STRATEGY_CAP,
};
