//! Distributed learning of potential function maximizers in continuous-action
//! potential games.
//!
//! Two information settings are covered. In the communication-based setting
//! every agent knows the gradient of its own utility and runs a perturbed
//! push-sum protocol over a time-varying directed graph to track the joint
//! action ([`comm`]). In the payoff-based setting agents only observe their own
//! payoffs and adapt the means of Gaussian mixed strategies with one- or
//! two-point score-function estimates ([`payoff`]).
//!
//! Supporting modules: [`game`] (games, analytic gradients and sampled
//! assumption probes), [`graph`] (S-strongly connected schedules),
//! [`push_sum`] (the consensus round and its mixing bound), [`schedules`]
//! (power-law step/variance sequences and their admissibility), and
//! [`experiment`] (configuration, orchestration and CSV persistence).

pub mod comm;
pub mod error;
pub mod experiment;
pub mod game;
pub mod graph;
pub mod payoff;
pub mod plateau;
pub mod push_sum;
pub mod rng;
pub mod schedules;

pub use error::{Error, Result};
pub use game::{FlowControlGame, JointAction, PotentialGame, QuadraticGame};
pub use graph::{Digraph, GraphSchedule};
pub use push_sum::{MixingBound, PushSumState};
pub use schedules::ScheduleSpec;
