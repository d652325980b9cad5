//! Fusion of synchronous flows into composed flows, and separation back
//! into primitive ones.
//!
//! The three synchronization policies are implemented by [`FusionEngine`], an
//! event-driven state machine. [`oracle_compose`] re-derives the same composed
//! flow offline from complete histories and serves as the reference the
//! engine is checked against.

mod compose;
mod engine;
mod oracle;

use thiserror::Error;

use crate::model::{Constraint, FlowDescriptor, FlowId, ModelError, SiteId, Tick};
use crate::occurrence::OccurrenceError;

pub use compose::{compose_result_slice, separate};
pub use engine::{
    Emission, EmissionRecord, EngineEvent, FusionEngine, LateSlice, StepOutcome, TimerRequest,
    TimerToken,
};
pub use oracle::{oracle_compose, oracle_plan, OracleRound};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FusionError {
    #[error("a fusion group needs at least one flow")]
    EmptyGroup,
    #[error("flows of sites {0} and {1} cannot be fused")]
    MixedSites(SiteId, SiteId),
    #[error("theta must be positive")]
    InvalidTheta,
    #[error("flow {0} appears twice in the group")]
    DuplicateFlow(FlowId),
    #[error("flow {0} is not part of the group")]
    UnknownFlow(FlowId),
    #[error("flow {flow}: stamp {stamp} does not follow {last}")]
    NonMonotonicStamps {
        flow: FlowId,
        last: Tick,
        stamp: Tick,
    },
    #[error("flow {flow}: arrival {arrival} precedes previous arrival {last}")]
    NonMonotonicArrival {
        flow: FlowId,
        last: Tick,
        arrival: Tick,
    },
    #[error("flow {0} has already ended")]
    FlowAlreadyEnded(FlowId),
    #[error("slice announced on {flow} carries units of other flows")]
    ForeignUnits { flow: FlowId },
    #[error("timer {0} was never requested")]
    UnknownTimer(u64),
    #[error("nothing to compose")]
    EmptyConsumption,
    #[error("history is already primitive")]
    AlreadyPrimitive,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Occurrence(#[from] OccurrenceError),
}

/// Design-time parameters: `theta` separates hard from soft flows, `alpha`
/// is the assumed maximum per-flow slice delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyParams {
    theta: u64,
    alpha: u64,
}

impl PolicyParams {
    pub fn new(theta: u64, alpha: u64) -> Result<Self, FusionError> {
        if theta == 0 {
            return Err(FusionError::InvalidTheta);
        }
        Ok(PolicyParams { theta, alpha })
    }

    pub fn theta(&self) -> u64 {
        self.theta
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    /// Only hard flows.
    Hard,
    /// Hard and soft flows.
    Mixed,
    /// Only soft flows.
    Soft,
}

/// Picks the policy from the declared constraints of a same-site group.
pub fn select_policy(group: &[FlowDescriptor]) -> Result<Policy, FusionError> {
    let first = group.first().ok_or(FusionError::EmptyGroup)?;
    if let Some(other) = group.iter().find(|d| d.site != first.site) {
        return Err(FusionError::MixedSites(
            first.site.clone(),
            other.site.clone(),
        ));
    }
    let hard = group
        .iter()
        .filter(|d| d.constraint == Constraint::Hard)
        .count();
    Ok(match hard {
        0 => Policy::Soft,
        n if n == group.len() => Policy::Hard,
        _ => Policy::Mixed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc(id: &str, site: &str, c: Constraint) -> FlowDescriptor {
        FlowDescriptor::new(
            FlowId::new(id).unwrap(),
            "src",
            SiteId::new(site).unwrap(),
            c,
        )
    }

    #[test]
    fn policy_follows_constraints() {
        use Constraint::*;
        assert_eq!(
            select_policy(&[desc("A", "L", Hard), desc("B", "L", Hard)]),
            Ok(Policy::Hard)
        );
        assert_eq!(
            select_policy(&[desc("A", "L", Hard), desc("b", "L", Soft)]),
            Ok(Policy::Mixed)
        );
        assert_eq!(select_policy(&[desc("a", "L", Soft)]), Ok(Policy::Soft));
    }

    #[test]
    fn policy_errors() {
        assert_eq!(select_policy(&[]), Err(FusionError::EmptyGroup));
        assert!(matches!(
            select_policy(&[
                desc("A", "L1", Constraint::Hard),
                desc("B", "L2", Constraint::Hard)
            ]),
            Err(FusionError::MixedSites(_, _))
        ));
    }

    #[test]
    fn theta_must_be_positive() {
        assert_eq!(PolicyParams::new(0, 3), Err(FusionError::InvalidTheta));
        let p = PolicyParams::new(10, 0).unwrap();
        assert_eq!((p.theta(), p.alpha()), (10, 0));
    }
}
