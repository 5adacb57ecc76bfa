//! Delegative ("holographic") collective decision-making.
//!
//! Members hold scalar opinions and may or may not take part in a decision.
//! Non-participants hand their unit of decision power to representatives
//! through a delegation network; the power-weighted opinion of the
//! participants is then compared with the mean opinion of everyone.
//!
//! - [`network`]: populations and Model 1 / Model 2 / k0 / full networks
//! - [`power`]: depth-limited power dissemination plus a path-enumeration oracle
//! - [`aggregate`]: network decisions, the ideal decision, Borda and plurality
//! - [`workspace`]: problem/solution model pools and the problem-solving loop
//! - [`simharness`]: seeded participation sweeps and topology comparison
//! - [`io`]: CSV formats

pub mod aggregate;
pub mod error;
pub mod io;
pub mod network;
pub mod power;
pub mod simharness;
pub mod workspace;

pub use aggregate::{Ballot, DecisionMode, DecisionOutcome, Vote};
pub use error::{Error, Result};
pub use network::{
    build_network, generate_population, set_activity, DelegationEdge, DelegationNetwork, Depth,
    Member, MemberId, NetworkModel, Selection, TopologyConfig,
};
pub use power::{disseminate, disseminate_oracle, PowerAssignment};
pub use simharness::{SweepConfig, SweepRecord};
pub use workspace::{ModelEntry, ModelKind, ModelPool, Phase, VotingMethod};
