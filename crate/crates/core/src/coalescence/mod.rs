//! Coalescence of the coupled chains `X^i_t = F_t ∘ ... ∘ F_1(i)`.
//!
//! [`exact_coalescence`] explores the multichain exactly; the simulators
//! draw iid functions and run the same process forwards or backwards.

mod bounds;
mod exact;
mod simulate;

pub use bounds::{kmax_upper_bounds, KmaxBounds};
pub use exact::{
    exact_coalescence, exact_coalescence_of_support, exact_coalescence_with, pairwise_coalescence_possible,
    pairwise_coalescence_of_support, support_is_irreducible, CoalescenceReport, Limits,
    DEFAULT_STATE_BUDGET,
};
pub use simulate::{
    default_horizon, simulate_cftp, simulate_forward, AtomSampler, CftpOutcome,
    ForwardOutcome, ForwardSimulator, Stability,
};
