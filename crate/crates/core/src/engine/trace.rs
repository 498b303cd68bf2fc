use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ChangeProposal;
use crate::model::{AgentId, Day, OrderId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Suppliers compare demand with usable supply and propose cuts.
    Supplier,
    /// Customers consolidate supplier proposals.
    Consolidation,
    /// Capacity packages check members' load.
    Capacity,
    /// Members consolidate capacity proposals.
    CapacityConsolidation,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Supplier => "supplier",
            Phase::Consolidation => "consolidation",
            Phase::Capacity => "capacity",
            Phase::CapacityConsolidation => "capacity_consolidation",
        })
    }
}

/// One agent's activity in one phase of one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: u32,
    pub phase: Phase,
    pub agent: AgentId,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub proposals_in: Vec<ChangeProposal>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub proposals_out: Vec<ChangeProposal>,
    /// Day -> change in planned production (new minus old).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub production_delta: BTreeMap<Day, i64>,
    /// External order -> day -> change in deliveries.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub delivery_delta: BTreeMap<OrderId, BTreeMap<Day, i64>>,
}

impl TraceRecord {
    pub(crate) fn new(round: u32, phase: Phase, agent: &str) -> Self {
        TraceRecord {
            round,
            phase,
            agent: agent.to_string(),
            proposals_in: Vec::new(),
            proposals_out: Vec::new(),
            production_delta: BTreeMap::new(),
            delivery_delta: BTreeMap::new(),
        }
    }

    /// Whether the agent changed anything or sent anything.
    pub fn is_active(&self) -> bool {
        !self.proposals_out.is_empty() || !self.production_delta.is_empty() || !self.delivery_delta.is_empty()
    }
}

pub(crate) fn delta(before: &[u64], after: &[u64]) -> BTreeMap<Day, i64> {
    before
        .iter()
        .zip(after)
        .enumerate()
        .filter(|(_, (b, a))| b != a)
        .map(|(d, (b, a))| (d as Day, *a as i64 - *b as i64))
        .collect()
}

/// Line-delimited canonical JSON, one record per line.
pub fn to_jsonl(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&crate::canonical_json(r));
        out.push('\n');
    }
    out
}
