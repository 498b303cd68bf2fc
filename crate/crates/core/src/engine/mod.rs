//! Negotiation rounds between material and capacity agents.
//!
//! A round has four synchronous phases: suppliers check their demand
//! against usable supply and propose cuts, customers consolidate those
//! proposals, capacity packages check their members' load, and members
//! consolidate capacity proposals. Rounds repeat until one passes without a
//! proposal or a schedule change.
//!
//! Schedules only ever move later or shrink: every cumulative quantity a
//! supplier owes a customer is non-increasing over a run, which bounds the
//! number of active rounds.

mod agents;
mod inventory;
mod trace;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::model::{
    apply_disruption, check_degradation, check_feasibility, AgentId, Day, DisruptionEvent, OrderId, OrderStatus,
    World,
};
use crate::solver::WeightConfig;

pub use agents::{capacity_agent_step, material_agent_step, CapacityStep, MaterialStep};
pub use inventory::inventory_reduction;
pub use trace::{to_jsonl, Phase, TraceRecord};

/// Requested change to the schedule of one order.
///
/// `deltas` are per-day reductions in the order's units (the supplier's
/// units for material orders, production units for capacity orders). A
/// negative delta hands back part of an earlier reduction, which is how a
/// quantity is moved to a later day. The running sum is never negative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeProposal {
    pub from: AgentId,
    pub to: AgentId,
    pub order: OrderId,
    pub deltas: BTreeMap<Day, i64>,
    pub round: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FulfillmentMode {
    /// Orders may be cut to any quantity or delayed.
    #[default]
    Partial,
    /// Each order-day is delivered in full or not at all; orders not fully
    /// delivered by the end of the horizon are cancelled.
    AllOrNothing,
}

impl std::str::FromStr for FulfillmentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "partial" => Ok(FulfillmentMode::Partial),
            "all-or-nothing" | "all_or_nothing" => Ok(FulfillmentMode::AllOrNothing),
            other => Err(format!("unknown fulfillment mode `{other}`")),
        }
    }
}

fn d_horizon() -> u32 {
    14
}

fn d_max_iterations() -> u32 {
    50
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    #[serde(default = "d_horizon")]
    pub horizon_days: u32,
    #[serde(default = "d_max_iterations")]
    pub max_iterations: u32,
    #[serde(default)]
    pub fulfillment_mode: FulfillmentMode,
    #[serde(default)]
    pub weights: WeightConfig,
    #[serde(default)]
    pub inventory_reduction_enabled: bool,
    /// Evaluate agents one at a time in ascending id order. When off, agents
    /// of a phase are evaluated on the thread pool; results are still merged
    /// in id order, so the outcome is the same.
    #[serde(default = "yes")]
    pub deterministic_order: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            horizon_days: d_horizon(),
            max_iterations: d_max_iterations(),
            fulfillment_mode: FulfillmentMode::Partial,
            weights: WeightConfig::default(),
            inventory_reduction_enabled: false,
            deterministic_order: true,
        }
    }
}

impl EngineConfig {
    /// Default config sized to the world's horizon.
    pub fn for_world(world: &World) -> Self {
        EngineConfig { horizon_days: world.horizon_days(), ..Default::default() }
    }

    pub fn validate(&self, world: &World) -> Result<(), EngineError> {
        if self.max_iterations == 0 {
            return Err(EngineError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if self.horizon_days != world.horizon_days() {
            return Err(EngineError::InvalidConfig(format!(
                "config horizon {} differs from the world's {} days",
                self.horizon_days,
                world.horizon_days()
            )));
        }
        self.weights.validate()?;
        self.weights.day_weights(world.horizon())?;
        Ok(())
    }
}

/// Agents whose schedule differs between the start and the end of a run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffectedSets {
    /// Agents whose supply or capacity changed directly.
    pub triggered: BTreeSet<AgentId>,
    pub material_agents: BTreeSet<AgentId>,
    pub capacity_agents: BTreeSet<AgentId>,
    pub finished_goods: BTreeSet<AgentId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: u32,
    pub proposals: usize,
    /// Agents whose production or deliveries changed this round.
    pub rescheduled: BTreeSet<AgentId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub world: World,
    pub iterations_used: u32,
    pub stabilized: bool,
    pub rounds: Vec<RoundSummary>,
    pub trace: Vec<TraceRecord>,
    pub affected: AffectedSets,
}

impl RunResult {
    pub fn trace_jsonl(&self) -> String {
        to_jsonl(&self.trace)
    }
}

/// Result of one call to [`Negotiation::step`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundReport {
    pub summary: RoundSummary,
    pub records: Vec<TraceRecord>,
    /// Set once the run is over: a quiet round or the iteration limit.
    pub finished: bool,
}

/// A run in progress, advanced one round at a time.
#[derive(Debug, Clone)]
pub struct Negotiation {
    start: World,
    world: World,
    config: EngineConfig,
    triggered: BTreeSet<AgentId>,
    dirty_materials: BTreeSet<AgentId>,
    dirty_capacities: BTreeSet<AgentId>,
    round: u32,
    rounds: Vec<RoundSummary>,
    trace: Vec<TraceRecord>,
    finished: bool,
    stabilized: bool,
}

impl Negotiation {
    /// Starts a run on `world`, where `affected` are the agents whose supply
    /// or capacity just changed.
    pub fn new(world: World, affected: BTreeSet<AgentId>, config: EngineConfig) -> Result<Self, EngineError> {
        config.validate(&world)?;
        let mut dirty_materials = BTreeSet::new();
        let mut dirty_capacities = BTreeSet::new();
        for id in &affected {
            if world.is_material(id) {
                dirty_materials.insert(id.clone());
            } else if world.is_capacity(id) {
                dirty_capacities.insert(id.clone());
            } else {
                return Err(crate::error::ModelError::UnknownId {
                    path: String::new(),
                    kind: "agent",
                    id: id.clone(),
                }
                .into());
            }
        }
        let finished = affected.is_empty();
        Ok(Negotiation {
            start: world.clone(),
            world,
            config,
            triggered: affected,
            dirty_materials,
            dirty_capacities,
            round: 0,
            rounds: Vec::new(),
            trace: Vec::new(),
            finished,
            stabilized: finished,
        })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    fn evaluate<T: Send>(
        &self,
        agents: &[AgentId],
        f: impl Fn(&AgentId) -> Result<T, EngineError> + Sync + Send,
    ) -> Result<Vec<T>, EngineError> {
        if self.config.deterministic_order {
            agents.iter().map(f).collect()
        } else {
            agents.par_iter().map(f).collect()
        }
    }

    /// Runs one round. Returns `None` once the run has finished.
    pub fn step(&mut self) -> Result<Option<RoundReport>, EngineError> {
        if self.finished {
            return Ok(None);
        }
        self.round += 1;
        let round = self.round;
        let mut records = Vec::new();
        let mut rescheduled = BTreeSet::new();
        let mut proposal_count = 0;
        let mut next_dirty = BTreeSet::new();

        // Suppliers.
        let suppliers: Vec<AgentId> = std::mem::take(&mut self.dirty_materials).into_iter().collect();
        let world = &self.world;
        let outcomes =
            self.evaluate(&suppliers, |a| agents::supplier_step(world, a, &self.config, round))?;
        let mut inbox: BTreeMap<AgentId, Vec<ChangeProposal>> = BTreeMap::new();
        for (agent, step) in suppliers.iter().zip(outcomes) {
            let mut rec = TraceRecord::new(round, Phase::Supplier, agent);
            for (order, x) in step.deliveries {
                let old = std::mem::replace(self.world.deliveries.get_mut(&order).expect("known order"), x);
                rec.delivery_delta.insert(order.clone(), trace::delta(&old, &self.world.deliveries[&order]));
                rescheduled.insert(agent.clone());
            }
            proposal_count += step.proposals.len();
            for p in &step.proposals {
                inbox.entry(p.to.clone()).or_default().push(p.clone());
            }
            if rec.is_active() || !step.proposals.is_empty() {
                // Re-check next round once customers have answered.
                next_dirty.insert(agent.clone());
            }
            rec.proposals_out = step.proposals;
            records.push(rec);
        }

        // Customers consolidate.
        let mut notices = BTreeSet::new();
        for (agent, proposals) in inbox {
            let mut rec = TraceRecord::new(round, Phase::Consolidation, &agent);
            if let Some(next) = agents::consolidate(&self.world, &agent, &proposals, &self.config)? {
                let prod = &mut self.world.supply.get_mut(&agent).unwrap().planned_production;
                rec.production_delta = trace::delta(prod, &next);
                *prod = next;
                rescheduled.insert(agent.clone());
                next_dirty.insert(agent.clone());
                if let Some(pkg) = &self.world.materials[&agent].capacity_link {
                    notices.insert(pkg.clone());
                }
            }
            rec.proposals_in = proposals;
            records.push(rec);
        }

        // Capacity packages.
        let mut packages: BTreeSet<AgentId> = std::mem::take(&mut self.dirty_capacities);
        packages.extend(notices);
        let packages: Vec<AgentId> = packages.into_iter().collect();
        let world = &self.world;
        let outcomes =
            self.evaluate(&packages, |p| agents::capacity_agent_step(world, p, &self.config, round))?;
        let mut cap_inbox: BTreeMap<AgentId, Vec<ChangeProposal>> = BTreeMap::new();
        for (pkg, step) in packages.iter().zip(outcomes) {
            let mut rec = TraceRecord::new(round, Phase::Capacity, pkg);
            proposal_count += step.proposals.len();
            if !step.proposals.is_empty() {
                self.dirty_capacities.insert(pkg.clone());
            }
            for p in &step.proposals {
                cap_inbox.entry(p.to.clone()).or_default().push(p.clone());
            }
            rec.proposals_out = step.proposals;
            records.push(rec);
        }

        // Members consolidate capacity proposals.
        for (agent, proposals) in cap_inbox {
            let mut rec = TraceRecord::new(round, Phase::CapacityConsolidation, &agent);
            if let Some(next) = agents::consolidate(&self.world, &agent, &proposals, &self.config)? {
                let prod = &mut self.world.supply.get_mut(&agent).unwrap().planned_production;
                rec.production_delta = trace::delta(prod, &next);
                *prod = next;
                rescheduled.insert(agent.clone());
                next_dirty.insert(agent.clone());
            }
            rec.proposals_in = proposals;
            records.push(rec);
        }

        self.dirty_materials = next_dirty;
        let active = proposal_count > 0 || !rescheduled.is_empty();
        if !active {
            self.finished = true;
            self.stabilized = true;
        } else if round >= self.config.max_iterations {
            self.finished = true;
            self.stabilized = false;
        }
        let summary = RoundSummary { round, proposals: proposal_count, rescheduled };
        self.rounds.push(summary.clone());
        self.trace.extend(records.iter().cloned());
        Ok(Some(RoundReport { summary, records, finished: self.finished }))
    }

    /// Runs the remaining rounds and the end-of-run bookkeeping.
    pub fn run(mut self) -> Result<RunResult, EngineError> {
        while self.step()?.is_some() {}
        self.finish()
    }

    /// End-of-run bookkeeping: cancellations, optional inventory reduction,
    /// order statuses and the final feasibility check. Call after the last
    /// round; unfinished runs are reported as not stabilized.
    pub fn finish(self) -> Result<RunResult, EngineError> {
        let Negotiation { start, mut world, config, triggered, round, rounds, trace, finished, stabilized, .. } = self;
        let stabilized = finished && stabilized;
        if config.fulfillment_mode == FulfillmentMode::AllOrNothing {
            for order in world.orders.values() {
                let delivered = world.deliveries.get_mut(&order.id).unwrap();
                if delivered.iter().sum::<u64>() < order.total_demand() {
                    delivered.iter_mut().for_each(|q| *q = 0);
                }
            }
        }
        if stabilized && config.inventory_reduction_enabled {
            world = inventory_reduction(&world);
        }
        let h = world.horizon();
        for order in world.orders.values_mut() {
            let delivered: u64 = world.deliveries[&order.id].iter().sum();
            order.status = if delivered >= order.total_demand() {
                OrderStatus::Active
            } else if delivered == 0 {
                OrderStatus::Cancelled
            } else {
                OrderStatus::PartiallyReduced
            };
        }
        if stabilized {
            check_feasibility(&world).map_err(EngineError::Infeasible)?;
            check_degradation(&world).map_err(EngineError::Infeasible)?;
        }

        let mut affected = AffectedSets { triggered, ..Default::default() };
        for (id, node) in world.materials() {
            let changed = start.supply[id].planned_production != world.supply[id].planned_production
                || start.outflow(id)? != world.outflow(id)?;
            if changed {
                affected.material_agents.insert(id.clone());
                if node.is_finished_good {
                    affected.finished_goods.insert(id.clone());
                }
            }
        }
        for id in world.capacities().keys() {
            if start.capacity_load(id)? != world.capacity_load(id)? {
                affected.capacity_agents.insert(id.clone());
            }
        }
        debug_assert!(world.supply.values().all(|s| s.planned_production.len() == h));
        Ok(RunResult { world, iterations_used: round, stabilized, rounds, trace, affected })
    }
}

/// Agents whose supply or capacity profile differs between two worlds.
pub fn trigger(before: &World, after: &World) -> BTreeSet<AgentId> {
    crate::model::trigger(before, after)
}

/// Applies `events` in order, then negotiates until stable.
pub fn run_until_stable(
    world: &World,
    events: &[DisruptionEvent],
    config: &EngineConfig,
) -> Result<RunResult, EngineError> {
    let mut current = world.clone();
    for event in events {
        current = apply_disruption(&current, event)?.0;
    }
    let affected = trigger(world, &current);
    Negotiation::new(current, affected, config.clone())?.run()
}
