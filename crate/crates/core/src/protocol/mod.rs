//! s-round two-party protocols: shapes, execution, purification.
//!
//! Party A sends the first and the last message. Step i (1-based) of a run
//! is A's round (i+1)/2 when i is odd and B's round i/2 when i is even, so
//! a run has 2s steps and the final step is B's partial round.

mod engine;
mod json;
mod purify;
mod random;
mod rank;
mod spec;

pub use engine::{execute, Transcript, reference_input};
pub use purify::purify_party;
pub use random::random_protocol;
pub use rank::{schmidt_rank_profile, RankStep};
pub use spec::{Party, ProtocolSpec};
