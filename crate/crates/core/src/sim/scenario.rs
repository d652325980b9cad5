//! Scenario files and generation of source flows.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! theta = 10      # ticks
//! alpha = 10      # ticks
//! rounds = 100    # slices per flow
//! seed = 7
//! site = "L1"     # optional
//!
//! [[hard_flows]]
//! number = 0
//! period = 10
//! max_delay = 4
//!
//! [[soft_flows]]
//! number = 0
//! period = 25     # largest gap between two slices
//! max_delay = 4
//! ```
//!
//! Hard flow `n` is named `F{n}` and emits at every multiple of its period.
//! Soft flow `n` is named `f{n}`, starts at 0 and draws each following gap
//! uniformly from `1..=period`. Each slice is sent at its own stamp and
//! delayed by a draw from `0..=max_delay`.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fusion::PolicyParams;
use crate::model::{
    Constraint, FlowDescriptor, FlowId, SiteId, SynchronousFlowHistory, SynchronousSlice, Tick,
};
use crate::transport::ChannelConfig;

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub number: u32,
    pub period: u64,
    #[serde(default)]
    pub max_delay: u64,
}

impl FlowSpec {
    pub fn new(number: u32, period: u64, max_delay: u64) -> Self {
        FlowSpec {
            number,
            period,
            max_delay,
        }
    }
}

fn default_site() -> String {
    "L1".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub theta: u64,
    pub alpha: u64,
    pub rounds: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_site")]
    pub site: String,
    #[serde(default)]
    pub hard_flows: Vec<FlowSpec>,
    #[serde(default)]
    pub soft_flows: Vec<FlowSpec>,
}

impl ScenarioConfig {
    pub fn new(theta: u64, alpha: u64, rounds: u32, seed: u64) -> Self {
        ScenarioConfig {
            theta,
            alpha,
            rounds,
            seed,
            site: default_site(),
            hard_flows: Vec::new(),
            soft_flows: Vec::new(),
        }
    }

    pub fn with_hard(mut self, spec: FlowSpec) -> Self {
        self.hard_flows.push(spec);
        self
    }

    pub fn with_soft(mut self, spec: FlowSpec) -> Self {
        self.soft_flows.push(spec);
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn params(&self) -> Result<PolicyParams, SimError> {
        PolicyParams::new(self.theta, self.alpha)
            .map_err(|e| SimError::InvalidConfig(e.to_string()))
    }

    pub fn max_delay(&self) -> u64 {
        self.hard_flows
            .iter()
            .chain(&self.soft_flows)
            .map(|f| f.max_delay)
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.hard_flows.is_empty() && self.soft_flows.is_empty() {
            return bad("scenario has no flows".into());
        }
        if self.theta == 0 {
            return bad("theta must be positive".into());
        }
        if self.rounds == 0 {
            return bad("rounds must be positive".into());
        }
        if self.site.is_empty() {
            return bad("site must not be empty".into());
        }
        for (kind, flows) in [("hard", &self.hard_flows), ("soft", &self.soft_flows)] {
            let mut numbers = BTreeSet::new();
            for f in flows {
                if !numbers.insert(f.number) {
                    return bad(format!("{kind} flow {} declared twice", f.number));
                }
                if f.period == 0 {
                    return bad(format!("{kind} flow {} has period 0", f.number));
                }
            }
        }
        if let Some(f) = self.hard_flows.iter().find(|f| f.period > self.theta) {
            return bad(format!(
                "hard flow {} has period {} above theta {}",
                f.number, f.period, self.theta
            ));
        }
        Ok(())
    }
}

/// One generated source flow.
#[derive(Debug, Clone)]
pub struct GeneratedFlow {
    pub descriptor: FlowDescriptor,
    pub history: SynchronousFlowHistory,
    pub max_delay: u64,
    /// Seed of the channel carrying this flow.
    pub channel_seed: u64,
}

impl GeneratedFlow {
    pub fn flow_id(&self) -> &FlowId {
        &self.descriptor.flow_id
    }

    pub fn channel(&self) -> ChannelConfig {
        ChannelConfig::simulated(0, self.max_delay, self.channel_seed)
    }

    /// Arrival tick of every slice once carried by its channel.
    pub fn arrivals(&self) -> Vec<Tick> {
        let delays = self.channel().delays(self.history.len());
        let mut last = Tick::MIN;
        self.history
            .slices()
            .iter()
            .zip(delays)
            .map(|(s, d)| {
                last = last.max(s.time_stamp.saturating_add_unsigned(d));
                last
            })
            .collect()
    }
}

/// All source flows of a scenario, hard flows first.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub site: SiteId,
    pub flows: Vec<GeneratedFlow>,
}

impl Scenario {
    pub fn descriptors(&self) -> Vec<FlowDescriptor> {
        self.flows.iter().map(|f| f.descriptor.clone()).collect()
    }

    pub fn histories(&self) -> Vec<SynchronousFlowHistory> {
        self.flows.iter().map(|f| f.history.clone()).collect()
    }

    pub fn flow(&self, id: &FlowId) -> Option<&GeneratedFlow> {
        self.flows.iter().find(|f| f.flow_id() == id)
    }
}

pub fn flow_name(constraint: Constraint, number: u32) -> String {
    match constraint {
        Constraint::Hard => format!("F{number}"),
        Constraint::Soft => format!("f{number}"),
    }
}

/// Payload carried by the slice of `flow` stamped `t`.
pub fn payload_for(flow: &FlowId, t: Tick) -> Vec<u8> {
    format!("{flow}@{t}").into_bytes()
}

pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario, SimError> {
    cfg.validate()?;
    let site = SiteId::new(cfg.site.clone()).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let specs = cfg
        .hard_flows
        .iter()
        .map(|f| (Constraint::Hard, f))
        .chain(cfg.soft_flows.iter().map(|f| (Constraint::Soft, f)));
    let mut flows = Vec::new();
    for (constraint, spec) in specs {
        // two seeds per flow, drawn in declaration order
        let gap_seed: u64 = master.random();
        let channel_seed: u64 = master.random();
        let id = FlowId::new(flow_name(constraint, spec.number)).expect("non-empty name");
        let descriptor =
            FlowDescriptor::new(id.clone(), format!("source-{id}"), site.clone(), constraint)
                .with_period(spec.period);
        let stamps = stamps_for(constraint, spec.period, cfg.rounds, gap_seed);
        let history = SynchronousFlowHistory::from_slices(
            site.clone(),
            vec![descriptor.clone()],
            stamps.into_iter().map(|t| {
                SynchronousSlice::single(t, site.clone(), id.clone(), payload_for(&id, t))
            }),
        )?;
        flows.push(GeneratedFlow {
            descriptor,
            history,
            max_delay: spec.max_delay,
            channel_seed,
        });
    }
    Ok(Scenario {
        config: cfg.clone(),
        site,
        flows,
    })
}

fn stamps_for(constraint: Constraint, period: u64, rounds: u32, seed: u64) -> Vec<Tick> {
    let period = Tick::try_from(period).unwrap_or(Tick::MAX);
    match constraint {
        Constraint::Hard => (0..Tick::from(rounds)).map(|k| k * period).collect(),
        Constraint::Soft => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = 0;
            let mut out = Vec::with_capacity(rounds as usize);
            for k in 0..rounds {
                if k > 0 {
                    t += rng.random_range(1..=period);
                }
                out.push(t);
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stamps(h: &SynchronousFlowHistory) -> Vec<Tick> {
        h.slices().iter().map(|s| s.time_stamp).collect()
    }

    #[test]
    fn hard_flows_are_periodic() {
        let cfg = ScenarioConfig::new(10, 0, 3, 1)
            .with_hard(FlowSpec::new(0, 10, 0))
            .with_hard(FlowSpec::new(1, 10, 0));
        let sc = generate_scenario(&cfg).unwrap();
        assert_eq!(sc.flows.len(), 2);
        for f in &sc.flows {
            assert_eq!(stamps(&f.history), vec![0, 10, 20]);
            assert_eq!(f.arrivals(), vec![0, 10, 20]);
        }
        assert_eq!(sc.flows[1].flow_id().as_str(), "F1");
    }

    #[test]
    fn soft_gaps_within_period_and_seeded() {
        let cfg = ScenarioConfig::new(10, 0, 200, 9).with_soft(FlowSpec::new(0, 7, 3));
        let a = generate_scenario(&cfg).unwrap();
        let s = stamps(&a.flows[0].history);
        assert_eq!(s[0], 0);
        assert!(s.windows(2).all(|w| (1..=7).contains(&(w[1] - w[0]))));
        let b = generate_scenario(&cfg).unwrap();
        assert_eq!(s, stamps(&b.flows[0].history));
        assert_eq!(a.flows[0].arrivals(), b.flows[0].arrivals());
        let arr = a.flows[0].arrivals();
        assert!(arr.iter().zip(&s).all(|(a, t)| (0..=3).contains(&(a - t))));
    }

    #[test]
    fn invalid_configs() {
        let base = ScenarioConfig::new(10, 0, 3, 1);
        assert!(matches!(
            generate_scenario(&base),
            Err(SimError::InvalidConfig(_))
        ));
        let too_slow = base.clone().with_hard(FlowSpec::new(0, 11, 0));
        assert!(matches!(
            generate_scenario(&too_slow),
            Err(SimError::InvalidConfig(_))
        ));
        let dup = base
            .clone()
            .with_soft(FlowSpec::new(0, 5, 0))
            .with_soft(FlowSpec::new(0, 5, 0));
        assert!(matches!(dup.validate(), Err(SimError::InvalidConfig(_))));
        let mut zero = base.with_hard(FlowSpec::new(0, 5, 0));
        zero.rounds = 0;
        assert!(zero.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            theta = 10
            alpha = 4
            rounds = 5
            seed = 3

            [[hard_flows]]
            number = 0
            period = 10
            max_delay = 2

            [[soft_flows]]
            number = 1
            period = 30
        "#;
        let cfg = ScenarioConfig::from_toml(text).unwrap();
        assert_eq!(cfg.site, "L1");
        assert_eq!(cfg.soft_flows, vec![FlowSpec::new(1, 30, 0)]);
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert!(ScenarioConfig::from_toml("theta = 1\nalpha = 1\nrounds = 1\nbogus = 2").is_err());
    }
}
