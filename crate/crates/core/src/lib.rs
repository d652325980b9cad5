//! Timestamped synchronous flows and inter-flow synchronization policies.
//!
//! Media are carried as flows of time-stamped slices produced on a site with
//! its own local clock. The [`fusion`] module combines flows of one site into
//! a composed flow with the hard, mixed or soft policy; [`transport`] moves
//! slices over simulated or socket channels; [`sim`] drives whole scenarios in
//! virtual time and checks them against an offline oracle.

pub mod clock;
pub mod fusion;
pub mod model;
pub mod occurrence;
pub mod sim;
pub mod transport;

pub use model::{
    Constraint, FlowDescriptor, FlowId, InformationUnit, Sample, SiteId, SynchronousFlowHistory,
    SynchronousSlice, Tick,
};
