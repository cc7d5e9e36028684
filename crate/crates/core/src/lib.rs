//! Energy-aware hyperparameter optimization for liquid state machines.
//!
//! The optimizer couples a Gaussian-process surrogate with Expected
//! Improvement batch proposals, a temporal-difference candidate selector and
//! an adaptive stopping rule. Candidate configurations are scored by a
//! reservoir + GRU pipeline that also accounts for spike-driven energy.
//!
//! Module map:
//!
//! * [`model`]: search space, configurations, rewards, trial log, Pareto front
//! * [`sobol`]: low-discrepancy initial design
//! * [`reservoir`]: fixed recurrent reservoir and LIF encoder
//! * [`readout`]: GRU readout with AdamW training, ridge alternative
//! * [`evaluator`]: datasets, energy model and configuration scoring
//! * [`gp`]: Matérn-5/2 Gaussian-process surrogate
//! * [`acquisition`]: Expected Improvement and batch proposals
//! * [`rl`]: epsilon-greedy Q-learning candidate selector
//! * [`controller`]: the optimization loop and early termination

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod acquisition;
pub mod controller;
pub mod error;
pub mod evaluator;
pub mod gp;
pub mod model;
pub mod optim;
pub mod readout;
pub mod reservoir;
pub mod rl;
pub mod seed;
pub mod sobol;
pub mod stats;

pub use error::{EarlError, Result};
pub use model::{
    compute_reward, pareto_front, update_incumbent, Configuration, Incumbent, ObjectiveValues,
    Phase, RewardParams, SearchSpace, SelectedBy, TrialLog, TrialRecord,
};
