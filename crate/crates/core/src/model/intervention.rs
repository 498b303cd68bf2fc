use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{trigger, AgentId, Day, OrderId, World};
use crate::error::ModelError;

/// A planner's what-if change to the world. Interventions can only relax the
/// situation (more capacity, earlier arrivals) or re-rank orders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Intervention {
    PriorityChange { order: OrderId, priority: u32 },
    CapacityIncrease { package: AgentId, start_day: Day, duration_days: u32, amount: u64 },
    /// Moves up to `quantity` units arriving on `from_day` forward to `to_day`.
    ExpediteArrival {
        material: AgentId,
        from_day: Day,
        to_day: Day,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quantity: Option<u64>,
    },
}

pub fn apply_intervention(world: &World, intervention: &Intervention) -> Result<(World, BTreeSet<AgentId>), ModelError> {
    let mut next = world.clone();
    match intervention {
        Intervention::PriorityChange { order, priority } => {
            if *priority == 0 {
                return Err(ModelError::InvalidEvent("priority must be positive".into()));
            }
            let Some(o) = next.orders.get_mut(order) else {
                return Err(ModelError::UnknownId { path: "/order".into(), kind: "order", id: order.clone() });
            };
            o.priority = *priority;
            let material = o.material.clone();
            // Re-ranking matters to the order's supplier even though no profile moved.
            let mut affected = trigger(world, &next);
            affected.insert(material);
            return Ok((next, affected));
        }
        Intervention::CapacityIncrease { package, start_day, duration_days, amount } => {
            if *start_day >= world.horizon_days {
                return Err(ModelError::InvalidEvent(format!("day {start_day} is outside the horizon")));
            }
            let Some(pkg) = next.capacities.get_mut(package) else {
                return Err(ModelError::UnknownId { path: "/package".into(), kind: "capacity package", id: package.clone() });
            };
            let end = ((start_day + duration_days) as usize).min(world.horizon());
            for d in *start_day as usize..end {
                pkg.profile.per_day[d] += amount;
            }
        }
        Intervention::ExpediteArrival { material, from_day, to_day, quantity } => {
            if to_day >= from_day {
                return Err(ModelError::InvalidEvent("expedited arrival must move to an earlier day".into()));
            }
            let Some(profile) = next.supply.get_mut(material) else {
                return Err(ModelError::UnknownId { path: "/material".into(), kind: "material", id: material.clone() });
            };
            let available = profile.in_transit.get(from_day).copied().unwrap_or(0);
            let moved = quantity.map_or(available, |q| q.min(available));
            if moved > 0 {
                if moved == available {
                    profile.in_transit.remove(from_day);
                } else {
                    profile.in_transit.insert(*from_day, available - moved);
                }
                *profile.in_transit.entry(*to_day).or_insert(0) += moved;
            }
        }
    }
    let affected = trigger(world, &next);
    Ok((next, affected))
}
