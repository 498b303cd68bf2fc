//! Global schedule checks, written directly against the raw world fields so
//! they stay independent of the engine's bookkeeping.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::World;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Violation {
    /// Cumulative commitments exceed usable supply.
    Supply { material: String, day: u32, shortfall: u64 },
    /// Members' production exceeds the package's capacity on one day.
    Capacity { package: String, day: u32, excess: u64 },
    /// An external order received more than it asked for.
    OverDelivery { order: String, delivered: u64, demanded: u64 },
    /// Cumulative supply to a customer grew beyond the baseline.
    Degradation { supplier: String, customer: String, day: u32, baseline: u64, current: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Supply { material, day, shortfall } => {
                write!(f, "material `{material}` is short {shortfall} on day {day}")
            }
            Violation::Capacity { package, day, excess } => {
                write!(f, "capacity package `{package}` is over by {excess} on day {day}")
            }
            Violation::OverDelivery { order, delivered, demanded } => {
                write!(f, "order `{order}` delivered {delivered} of {demanded} demanded")
            }
            Violation::Degradation { supplier, customer, day, baseline, current } => write!(
                f,
                "`{supplier}` supplies `{customer}` {current} by day {day}, above baseline {baseline}"
            ),
        }
    }
}

/// Checks every cumulative supply constraint, every per-day capacity
/// constraint and every external order's total. Returns the first violation
/// in (material, day), then (package, day), then order order.
pub fn check_feasibility(world: &World) -> Result<(), Violation> {
    let h = world.horizon_days as usize;
    for (id, profile) in &world.supply {
        let node = &world.materials[id];
        let mut inflow = vec![0i64; h];
        let mut outflow = vec![0i64; h];
        inflow[0] += profile.in_stock as i64;
        for (&day, &q) in &profile.in_transit {
            if (day as usize) < h {
                inflow[day as usize] += q as i64;
            }
        }
        for d in 0..h {
            inflow[d] += profile.planned_production[d] as i64;
        }
        for customer in &node.customer_links {
            let c = world.materials[customer]
                .supplier_links
                .iter()
                .find(|l| &l.material == id)
                .map(|l| l.per_unit)
                .unwrap_or(1) as i64;
            for d in 0..h {
                outflow[d] += c * world.supply[customer].planned_production[d] as i64;
            }
        }
        for order in world.orders.values().filter(|o| &o.material == id) {
            for d in 0..h {
                outflow[d] += world.deliveries[&order.id][d] as i64;
            }
        }
        let mut gross = 0i64;
        let mut committed = 0i64;
        let mut committed_by = Vec::with_capacity(h);
        for d in 0..h {
            gross += inflow[d];
            committed += outflow[d];
            committed_by.push(committed);
            let mut held = 0i64;
            for hold in &profile.holds {
                if (hold.start as usize) <= d && d < hold.end as usize {
                    let before = if hold.start == 0 { 0 } else { committed_by[hold.start as usize - 1] };
                    let on_hand = (gross - before).max(0);
                    let q = hold.quantity.map_or(on_hand, |cap| on_hand.min(cap as i64));
                    held = held.max(q);
                }
            }
            if committed > gross - held {
                return Err(Violation::Supply {
                    material: id.clone(),
                    day: d as u32,
                    shortfall: (committed - (gross - held)) as u64,
                });
            }
        }
    }
    for (id, pkg) in &world.capacities {
        for d in 0..h {
            let load: u64 = pkg.member_materials.iter().map(|m| world.supply[m].planned_production[d]).sum();
            if load > pkg.profile.per_day[d] {
                return Err(Violation::Capacity { package: id.clone(), day: d as u32, excess: load - pkg.profile.per_day[d] });
            }
        }
    }
    for order in world.orders.values() {
        let delivered: u64 = world.deliveries[&order.id].iter().sum();
        let demanded = order.total_demand();
        if delivered > demanded {
            return Err(Violation::OverDelivery { order: order.id.clone(), delivered, demanded });
        }
    }
    Ok(())
}

/// Checks that no supplier's cumulative supply to any customer exceeds the
/// baseline on any day. Internal supply is measured by the customer's
/// cumulative production, external supply by cumulative deliveries.
pub fn check_degradation(world: &World) -> Result<(), Violation> {
    let h = world.horizon_days as usize;
    for node in world.materials.values() {
        let base = &world.baseline.supply[&node.id].planned_production;
        let now = &world.supply[&node.id].planned_production;
        let (mut b, mut c) = (0u64, 0u64);
        for d in 0..h {
            b += base[d];
            c += now[d];
            if c > b {
                let supplier = node.supplier_links.first().map_or_else(|| node.id.clone(), |l| l.material.clone());
                return Err(Violation::Degradation {
                    supplier,
                    customer: node.id.clone(),
                    day: d as u32,
                    baseline: b,
                    current: c,
                });
            }
        }
    }
    for order in world.orders.values() {
        let base = &world.baseline.deliveries[&order.id];
        let now = &world.deliveries[&order.id];
        let (mut b, mut c) = (0u64, 0u64);
        for d in 0..h {
            b += base[d];
            c += now[d];
            if c > b {
                return Err(Violation::Degradation {
                    supplier: order.material.clone(),
                    customer: order.customer.clone(),
                    day: d as u32,
                    baseline: b,
                    current: c,
                });
            }
        }
    }
    Ok(())
}
