//! Per-agent steps. Each is a pure function of a world snapshot and an inbox.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ChangeProposal, EngineConfig, FulfillmentMode};
use crate::error::EngineError;
use crate::model::{capacity_order_id, internal_order_id, AgentId, Day, DemandLine, DemandSource, OrderId, World};
use crate::solver::{
    solve_all_or_nothing, solve_capacity, solve_consolidation, solve_partial, AllocationOrder, AllocationProblem,
    Mode, ReductionProblem,
};

/// Outcome of one material agent step.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaterialStep {
    /// New planned production, when the inbox forced a change.
    pub production: Option<Vec<u64>>,
    /// New delivery schedules for external orders that had to be cut or delayed.
    pub deliveries: BTreeMap<OrderId, Vec<u64>>,
    /// Proposals to shorted customers.
    pub proposals: Vec<ChangeProposal>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityStep {
    pub proposals: Vec<ChangeProposal>,
}

fn sparse_diff(before: &[u64], after: &[u64]) -> BTreeMap<Day, i64> {
    before
        .iter()
        .zip(after)
        .enumerate()
        .filter(|(_, (b, a))| b != a)
        .map(|(d, (b, a))| (d as Day, *b as i64 - *a as i64))
        .collect()
}

fn to_order(line: &DemandLine) -> AllocationOrder {
    AllocationOrder::new(
        line.id.clone(),
        line.demand.iter().enumerate().filter(|(_, q)| **q > 0).map(|(d, q)| (d as Day, *q)),
        line.priority,
    )
}

/// Material agent step: supplier check on the current schedule, then
/// consolidation of any inbox proposals against the updated production.
///
/// The engine runs the two halves in separate phases; this combined form is
/// what a single agent does when it is handed both at once.
pub fn material_agent_step(
    world: &World,
    agent: &str,
    inbox: &[ChangeProposal],
    config: &EngineConfig,
    round: u32,
) -> Result<MaterialStep, EngineError> {
    let mut step = supplier_step(world, agent, config, round)?;
    if !inbox.is_empty() {
        step.production = consolidate(world, agent, inbox, config)?;
    }
    Ok(step)
}

/// Compares demand against usable supply. When short, allocates with the
/// configured fulfillment solver (never earlier than demanded) and turns the
/// gap into per-customer proposals.
pub(crate) fn supplier_step(
    world: &World,
    agent: &str,
    config: &EngineConfig,
    round: u32,
) -> Result<MaterialStep, EngineError> {
    if !world.is_material(agent) {
        return Err(EngineError::NotMaterialAgent(agent.to_string()));
    }
    let usable = world.usable_supply(agent)?;
    let committed = world.commitments(agent)?;
    if committed.iter().zip(&usable).all(|(c, u)| c <= u) {
        return Ok(MaterialStep::default());
    }
    let h = world.horizon();
    let mut cap = usable;
    for i in (0..h.saturating_sub(1)).rev() {
        cap[i] = cap[i].min(cap[i + 1]);
    }
    let supply: Vec<u64> = (0..h).map(|d| cap[d] - if d == 0 { 0 } else { cap[d - 1] }).collect();
    let lines = world.demand_lines(agent)?;
    let mode = match config.fulfillment_mode {
        FulfillmentMode::Partial => Mode::Partial,
        FulfillmentMode::AllOrNothing => Mode::AllOrNothing,
    };
    let problem = AllocationProblem::new(mode, h, supply, lines.iter().map(to_order).collect()).no_early();
    let allocation = match mode {
        Mode::AllOrNothing => solve_all_or_nothing(&problem, &config.weights)?,
        _ => solve_partial(&problem, &config.weights)?,
    };

    let mut step = MaterialStep::default();
    for line in &lines {
        let x = allocation.dense(&line.id, h);
        if x == line.demand {
            continue;
        }
        match &line.source {
            DemandSource::External { order } => {
                step.deliveries.insert(order.clone(), x);
            }
            DemandSource::Internal { customer, .. } => step.proposals.push(ChangeProposal {
                from: agent.to_string(),
                to: customer.clone(),
                order: line.id.clone(),
                deltas: sparse_diff(&line.demand, &x),
                round,
            }),
            DemandSource::Capacity { .. } => unreachable!("material suppliers have no capacity lines"),
        }
    }
    Ok(step)
}

/// Consolidates proposals addressed to `agent` into one reduction plan and
/// returns the new production, or `None` when nothing changes.
///
/// Supplier proposals are in the supplier's units; the cumulative request is
/// converted to the agent's units rounding up, so the agent never consumes
/// more than the supplier can give.
pub(crate) fn consolidate(
    world: &World,
    agent: &str,
    inbox: &[ChangeProposal],
    config: &EngineConfig,
) -> Result<Option<Vec<u64>>, EngineError> {
    let node = world.materials.get(agent).ok_or_else(|| EngineError::NotMaterialAgent(agent.to_string()))?;
    let h = world.horizon();
    let production = &world.supply[agent].planned_production;
    let mut problem = ReductionProblem::new(h);
    problem.day_weights = config.weights.day_weights(h)?;
    // Later proposals from the same sender supersede earlier ones.
    let mut latest: BTreeMap<&AgentId, &ChangeProposal> = BTreeMap::new();
    for p in inbox {
        let inconsistent = |reason: String| EngineError::InconsistentProposal {
            from: p.from.clone(),
            to: p.to.clone(),
            reason,
        };
        if p.to != agent {
            return Err(inconsistent(format!("addressed to `{}`, delivered to `{agent}`", p.to)));
        }
        let known = if node.capacity_link.as_deref() == Some(p.from.as_str()) {
            p.order == capacity_order_id(agent, &p.from)
        } else {
            node.per_unit(&p.from).is_some() && p.order == internal_order_id(agent, &p.from)
        };
        if !known {
            return Err(EngineError::UnknownOrder { from: p.from.clone(), order: p.order.clone() });
        }
        if let Some((&d, _)) = p.deltas.iter().find(|(&d, _)| d as usize >= h) {
            return Err(inconsistent(format!("delta on day {d} outside the horizon")));
        }
        latest.insert(&p.from, p);
    }
    for (from, p) in latest {
        let per_unit = node.per_unit(from).unwrap_or(1) as i64;
        let mut per_day = BTreeMap::new();
        let (mut acc, mut prev, mut planned) = (0i64, 0i64, 0i64);
        for day in 0..h {
            acc += p.deltas.get(&(day as Day)).copied().unwrap_or(0);
            planned += production[day] as i64 * per_unit;
            if acc < 0 || acc > planned {
                return Err(EngineError::InconsistentProposal {
                    from: p.from.clone(),
                    to: p.to.clone(),
                    reason: format!("cumulative request {acc} on day {day} outside [0, {planned}]"),
                });
            }
            let own = (acc + per_unit - 1) / per_unit;
            if own != prev {
                per_day.insert(day as Day, own - prev);
            }
            prev = own;
        }
        problem.requests.insert(from.clone(), per_day);
    }
    let plan = solve_consolidation(&problem)?;
    let mut next = Vec::with_capacity(h);
    let (mut cum_old, mut cum_new) = (0i64, 0i64);
    for (day, (p, r)) in production.iter().zip(plan.cumulative()).enumerate() {
        cum_old += *p as i64;
        let target = cum_old - r;
        if target < cum_new {
            return Err(EngineError::InconsistentProposal {
                from: agent.to_string(),
                to: agent.to_string(),
                reason: format!("consolidated plan needs negative production on day {day}"),
            });
        }
        next.push((target - cum_new) as u64);
        cum_new = target;
    }
    Ok((next != *production).then_some(next))
}

/// Capacity agent step: if members' production overloads any day, reallocate
/// with the capacity solver (production may only move later or be cut) and
/// propose the differences to the members.
pub fn capacity_agent_step(
    world: &World,
    package: &str,
    _config: &EngineConfig,
    round: u32,
) -> Result<CapacityStep, EngineError> {
    let pkg = world.capacities.get(package).ok_or_else(|| EngineError::NotCapacityAgent(package.to_string()))?;
    let load = world.capacity_load(package)?;
    if load.iter().zip(&pkg.profile.per_day).all(|(l, c)| l <= c) {
        return Ok(CapacityStep::default());
    }
    let h = world.horizon();
    let lines = world.capacity_lines(package)?;
    let problem =
        AllocationProblem::new(Mode::Capacity, h, pkg.profile.per_day.clone(), lines.iter().map(to_order).collect())
            .no_early();
    let allocation = solve_capacity(&problem)?;
    let mut step = CapacityStep::default();
    for line in &lines {
        let x = allocation.dense(&line.id, h);
        if x == line.demand {
            continue;
        }
        let DemandSource::Capacity { material } = &line.source else { unreachable!() };
        step.proposals.push(ChangeProposal {
            from: package.to_string(),
            to: material.clone(),
            order: line.id.clone(),
            deltas: sparse_diff(&line.demand, &x),
            round,
        });
    }
    Ok(step)
}
