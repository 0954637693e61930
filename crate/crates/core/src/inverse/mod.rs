//! Which transition matrices a given set of functions can realize, and which
//! coalescence numbers a matrix admits.

mod explore;
mod membership;
pub mod simplex;

pub use explore::{
    explore_k, latin_supports, maximal_support, Coverage, ExploreBudget, ExplorerReport, Strategy,
};
pub use membership::{
    estimate_leb_measure, family_fxy, membership, membership_capped, FunctionSet, LebEstimate,
    LpCertificate, SupportMode, DEFAULT_LP_CAP,
};
