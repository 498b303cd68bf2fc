//! Supply-network world state: bill-of-materials graph, capacity packages,
//! the customer order book, supply profiles and the current schedule.
//!
//! Time is discretized into integer days `0..horizon_days`; all quantities
//! are whole pieces. Internal demand between materials is never stored: a
//! customer's planned production on day `n` consumes `per_unit` pieces of
//! each supplier on the same day, and each production unit occupies one unit
//! of the customer's capacity package on that day.

mod build;
mod disruption;
mod feasibility;
mod intervention;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

pub use build::{build_world, CapacityDef, MaterialDef, OrderDef, SupplierLink, SupplyDef};
pub use disruption::{apply_disruption, trigger, DisruptionEvent, DisruptionKind};
pub use feasibility::{check_degradation, check_feasibility, Violation};
pub use intervention::{apply_intervention, Intervention};

pub type AgentId = String;
pub type OrderId = String;
pub type Day = u32;

/// Customer marker for demand that leaves the network.
pub const EXTERNAL_CUSTOMER: &str = "external";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaterialNode {
    pub id: AgentId,
    pub location: String,
    /// BOM depth: 0 for finished goods, otherwise one more than the deepest customer.
    pub level: u32,
    pub supplier_links: Vec<SupplierLink>,
    pub customer_links: Vec<AgentId>,
    pub capacity_link: Option<AgentId>,
    pub is_finished_good: bool,
    /// Carried through from the scenario; the engine never switches to a substitute.
    pub substitutes: Vec<AgentId>,
}

impl MaterialNode {
    pub fn is_raw_material(&self) -> bool {
        self.supplier_links.is_empty()
    }

    pub fn per_unit(&self, supplier: &str) -> Option<u64> {
        self.supplier_links.iter().find(|l| l.material == supplier).map(|l| l.per_unit)
    }
}

/// Per-day capacity. Unused units expire at the end of the day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityProfile {
    pub per_day: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityPackage {
    pub id: AgentId,
    pub member_materials: BTreeSet<AgentId>,
    pub profile: CapacityProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderStatus {
    Active,
    PartiallyReduced,
    Cancelled,
}

/// A dated, prioritized demand of a customer on one supplier.
///
/// The world stores external (finished-good) orders; internal orders between
/// materials and capacity orders are derived views, see [`World::order_book`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub supplier: AgentId,
    pub customer: String,
    pub material: AgentId,
    pub demand: BTreeMap<Day, u64>,
    pub priority: u32,
    pub status: OrderStatus,
}

impl Order {
    pub fn total_demand(&self) -> u64 {
        self.demand.values().sum()
    }
}

/// Temporary availability block on a material (quarantine).
///
/// While active, the agent cannot hand out more than it had already delivered
/// before `start`, plus whatever exceeds `quantity` when a quantity is given.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hold {
    pub start: Day,
    pub end: Day,
    pub quantity: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplyProfile {
    pub in_stock: u64,
    /// Arrival day -> quantity. Delayed arrivals may land past the horizon.
    pub in_transit: BTreeMap<Day, u64>,
    pub planned_production: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holds: Vec<Hold>,
}

/// Frozen copy of the mutable world state taken at initialization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Baseline {
    pub supply: BTreeMap<AgentId, SupplyProfile>,
    pub capacity: BTreeMap<AgentId, CapacityProfile>,
    pub deliveries: BTreeMap<OrderId, Vec<u64>>,
    pub orders: BTreeMap<OrderId, Order>,
}

/// Which kind of demand a [`DemandLine`] represents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DemandSource {
    /// A customer material consuming `per_unit` pieces per unit it produces.
    Internal { customer: AgentId, per_unit: u64 },
    External { order: OrderId },
    /// A member material occupying one capacity unit per produced piece.
    Capacity { material: AgentId },
}

/// One demand stream on a supplier, materialized from the current schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandLine {
    pub id: OrderId,
    pub source: DemandSource,
    pub priority: u32,
    pub demand: Vec<u64>,
}

/// The whole network at one point in time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct World {
    pub(crate) horizon_days: u32,
    pub(crate) materials: BTreeMap<AgentId, MaterialNode>,
    pub(crate) capacities: BTreeMap<AgentId, CapacityPackage>,
    pub(crate) orders: BTreeMap<OrderId, Order>,
    pub(crate) supply: BTreeMap<AgentId, SupplyProfile>,
    pub(crate) deliveries: BTreeMap<OrderId, Vec<u64>>,
    pub(crate) baseline: Baseline,
}

/// Id of the derived order a customer material holds on one of its suppliers.
pub fn internal_order_id(customer: &str, supplier: &str) -> OrderId {
    format!("{customer}/{supplier}")
}

/// Id of the derived order a member material holds on its capacity package.
pub fn capacity_order_id(material: &str, package: &str) -> OrderId {
    format!("{material}@{package}")
}

pub(crate) fn cumulative(series: &[u64]) -> Vec<u64> {
    series
        .iter()
        .scan(0u64, |acc, q| {
            *acc += q;
            Some(*acc)
        })
        .collect()
}

impl World {
    pub fn horizon_days(&self) -> u32 {
        self.horizon_days
    }

    pub(crate) fn horizon(&self) -> usize {
        self.horizon_days as usize
    }

    pub fn materials(&self) -> &BTreeMap<AgentId, MaterialNode> {
        &self.materials
    }

    pub fn capacities(&self) -> &BTreeMap<AgentId, CapacityPackage> {
        &self.capacities
    }

    /// External customer orders.
    pub fn orders(&self) -> &BTreeMap<OrderId, Order> {
        &self.orders
    }

    pub fn supply(&self) -> &BTreeMap<AgentId, SupplyProfile> {
        &self.supply
    }

    pub fn deliveries(&self) -> &BTreeMap<OrderId, Vec<u64>> {
        &self.deliveries
    }

    pub fn baseline(&self) -> &Baseline {
        &self.baseline
    }

    pub fn material(&self, id: &str) -> Result<&MaterialNode, ModelError> {
        self.materials.get(id).ok_or_else(|| unknown("material", id))
    }

    pub fn capacity(&self, id: &str) -> Result<&CapacityPackage, ModelError> {
        self.capacities.get(id).ok_or_else(|| unknown("capacity package", id))
    }

    pub fn is_material(&self, id: &str) -> bool {
        self.materials.contains_key(id)
    }

    pub fn is_capacity(&self, id: &str) -> bool {
        self.capacities.contains_key(id)
    }

    pub fn production(&self, id: &str) -> Result<&[u64], ModelError> {
        self.supply
            .get(id)
            .map(|s| s.planned_production.as_slice())
            .ok_or_else(|| unknown("material", id))
    }

    /// External orders placed on `material`, ascending by id.
    pub fn external_orders_of<'a>(&'a self, material: &'a str) -> impl Iterator<Item = &'a Order> + 'a {
        self.orders.values().filter(move |o| o.material == material)
    }

    /// Gross cumulative supply: stock plus arrivals and own production up to
    /// each day. Non-decreasing in the day.
    pub fn gross_supply(&self, id: &str) -> Result<Vec<u64>, ModelError> {
        let profile = self.supply.get(id).ok_or_else(|| unknown("material", id))?;
        let h = self.horizon();
        let mut per_day = profile.planned_production.clone();
        for (&day, &q) in &profile.in_transit {
            if (day as usize) < h {
                per_day[day as usize] += q;
            }
        }
        per_day[0] += profile.in_stock;
        Ok(cumulative(&per_day))
    }

    /// Per-day demand on `id` from customer production and external deliveries.
    pub fn outflow(&self, id: &str) -> Result<Vec<u64>, ModelError> {
        let node = self.material(id)?;
        let mut per_day = vec![0u64; self.horizon()];
        for customer in &node.customer_links {
            let c = self.materials[customer].per_unit(id).unwrap_or(1);
            for (d, q) in self.supply[customer].planned_production.iter().enumerate() {
                per_day[d] += c * q;
            }
        }
        for order in self.external_orders_of(id) {
            for (d, q) in self.deliveries[&order.id].iter().enumerate() {
                per_day[d] += q;
            }
        }
        Ok(per_day)
    }

    /// Cumulative quantity committed to customers by each day.
    pub fn commitments(&self, id: &str) -> Result<Vec<u64>, ModelError> {
        Ok(cumulative(&self.outflow(id)?))
    }

    /// Per-day quantity withheld by active holds.
    ///
    /// A hold blocks everything on hand beyond what had already been committed
    /// before it started, capped at its quantity. Overlapping holds do not stack.
    pub fn blocked(&self, id: &str) -> Result<Vec<u64>, ModelError> {
        let profile = self.supply.get(id).ok_or_else(|| unknown("material", id))?;
        let h = self.horizon();
        let mut blocked = vec![0u64; h];
        if profile.holds.is_empty() {
            return Ok(blocked);
        }
        let gross = self.gross_supply(id)?;
        let committed = self.commitments(id)?;
        for hold in &profile.holds {
            let before = if hold.start == 0 { 0 } else { committed[hold.start as usize - 1] };
            for day in hold.start as usize..(hold.end as usize).min(h) {
                let on_hand = gross[day].saturating_sub(before);
                let q = hold.quantity.map_or(on_hand, |cap| cap.min(on_hand));
                blocked[day] = blocked[day].max(q);
            }
        }
        Ok(blocked)
    }

    /// Cumulative supply usable for allocation on each day: gross supply minus holds.
    pub fn usable_supply(&self, id: &str) -> Result<Vec<u64>, ModelError> {
        let gross = self.gross_supply(id)?;
        let blocked = self.blocked(id)?;
        Ok(gross.iter().zip(&blocked).map(|(g, b)| g - b).collect())
    }

    /// Gross cumulative supply of a material agent on `day` (stock, arrivals
    /// and own production; holds and commitments not deducted).
    pub fn cumulative_supply(&self, id: &str, day: Day) -> Result<u64, ModelError> {
        self.check_day(day)?;
        Ok(self.gross_supply(id)?[day as usize])
    }

    /// Net cumulative availability on `day`: gross supply minus holds minus
    /// everything committed to customers up to that day. Never negative in a
    /// feasible world.
    pub fn cumulative_available(&self, id: &str, day: Day) -> Result<i64, ModelError> {
        self.check_day(day)?;
        let d = day as usize;
        let usable = self.usable_supply(id)?[d] as i64;
        let committed = self.commitments(id)?[d] as i64;
        Ok(usable - committed)
    }

    /// Per-day load placed on a capacity package by its members' production.
    pub fn capacity_load(&self, id: &str) -> Result<Vec<u64>, ModelError> {
        let pkg = self.capacity(id)?;
        let mut load = vec![0u64; self.horizon()];
        for m in &pkg.member_materials {
            for (d, q) in self.supply[m].planned_production.iter().enumerate() {
                load[d] += q;
            }
        }
        Ok(load)
    }

    /// Unused capacity on `day`. Not cumulative: yesterday's slack is gone.
    pub fn available_capacity(&self, id: &str, day: Day) -> Result<i64, ModelError> {
        self.check_day(day)?;
        let pkg = self.capacity(id)?;
        let load = self.capacity_load(id)?;
        Ok(pkg.profile.per_day[day as usize] as i64 - load[day as usize] as i64)
    }

    /// Priority of the most important external order a material ultimately serves.
    pub fn material_priority(&self, id: &str) -> u32 {
        let mut best = 0;
        let mut seen = BTreeSet::new();
        let mut stack = vec![id];
        while let Some(m) = stack.pop() {
            if !seen.insert(m) {
                continue;
            }
            for o in self.external_orders_of(m) {
                best = best.max(o.priority);
            }
            if let Some(node) = self.materials.get(m) {
                stack.extend(node.customer_links.iter().map(String::as_str));
            }
        }
        best.max(1)
    }

    /// Demand streams placed on a material supplier, ascending by id.
    pub fn demand_lines(&self, supplier: &str) -> Result<Vec<DemandLine>, ModelError> {
        let node = self.material(supplier)?;
        let mut lines = Vec::new();
        for customer in &node.customer_links {
            let per_unit = self.materials[customer].per_unit(supplier).unwrap_or(1);
            let demand = self.supply[customer].planned_production.iter().map(|q| q * per_unit).collect();
            lines.push(DemandLine {
                id: internal_order_id(customer, supplier),
                source: DemandSource::Internal { customer: customer.clone(), per_unit },
                priority: self.material_priority(customer),
                demand,
            });
        }
        for order in self.external_orders_of(supplier) {
            lines.push(DemandLine {
                id: order.id.clone(),
                source: DemandSource::External { order: order.id.clone() },
                priority: order.priority,
                demand: self.deliveries[&order.id].clone(),
            });
        }
        lines.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(lines)
    }

    /// Demand streams placed on a capacity package by its members.
    pub fn capacity_lines(&self, package: &str) -> Result<Vec<DemandLine>, ModelError> {
        let pkg = self.capacity(package)?;
        Ok(pkg
            .member_materials
            .iter()
            .map(|m| DemandLine {
                id: capacity_order_id(m, package),
                source: DemandSource::Capacity { material: m.clone() },
                priority: self.material_priority(m),
                demand: self.supply[m].planned_production.clone(),
            })
            .collect())
    }

    /// Full order book: external orders plus the derived internal and capacity
    /// orders implied by the current production plans.
    pub fn order_book(&self) -> Vec<Order> {
        let to_map = |v: &[u64]| -> BTreeMap<Day, u64> {
            v.iter().enumerate().filter(|(_, q)| **q > 0).map(|(d, q)| (d as Day, *q)).collect()
        };
        let mut book: Vec<Order> = self
            .orders
            .values()
            .map(|o| Order { demand: to_map(&self.deliveries[&o.id]), ..o.clone() })
            .collect();
        for node in self.materials.values() {
            for link in &node.supplier_links {
                let demand: Vec<u64> =
                    self.supply[&node.id].planned_production.iter().map(|q| q * link.per_unit).collect();
                book.push(Order {
                    id: internal_order_id(&node.id, &link.material),
                    supplier: link.material.clone(),
                    customer: node.id.clone(),
                    material: link.material.clone(),
                    demand: to_map(&demand),
                    priority: self.material_priority(&node.id),
                    status: OrderStatus::Active,
                });
            }
            if let Some(pkg) = &node.capacity_link {
                book.push(Order {
                    id: capacity_order_id(&node.id, pkg),
                    supplier: pkg.clone(),
                    customer: node.id.clone(),
                    material: node.id.clone(),
                    demand: to_map(&self.supply[&node.id].planned_production),
                    priority: self.material_priority(&node.id),
                    status: OrderStatus::Active,
                });
            }
        }
        book.sort_by(|a, b| a.id.cmp(&b.id));
        book
    }

    /// Materials ordered so every customer precedes its suppliers.
    pub fn topological_order(&self) -> Vec<AgentId> {
        let mut order: Vec<&MaterialNode> = self.materials.values().collect();
        order.sort_by(|a, b| a.level.cmp(&b.level).then_with(|| a.id.cmp(&b.id)));
        order.into_iter().map(|n| n.id.clone()).collect()
    }

    /// Weakly connected components of the BOM graph, each sorted; components
    /// ordered by their smallest id.
    pub fn bom_components(&self) -> Vec<Vec<AgentId>> {
        let mut seen = BTreeSet::new();
        let mut components = Vec::new();
        for start in self.materials.keys() {
            if seen.contains(start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![start.clone()];
            while let Some(m) = stack.pop() {
                if !comp.insert(m.clone()) {
                    continue;
                }
                let node = &self.materials[&m];
                stack.extend(node.customer_links.iter().cloned());
                stack.extend(node.supplier_links.iter().map(|l| l.material.clone()));
            }
            seen.extend(comp.iter().cloned());
            components.push(comp.into_iter().collect());
        }
        components
    }

    /// Drops every change made since initialization.
    pub fn restore_baseline(&mut self) {
        self.supply = self.baseline.supply.clone();
        for (id, profile) in &self.baseline.capacity {
            if let Some(pkg) = self.capacities.get_mut(id) {
                pkg.profile = profile.clone();
            }
        }
        self.deliveries = self.baseline.deliveries.clone();
        self.orders = self.baseline.orders.clone();
    }

    /// Re-freezes the current state as the new baseline.
    pub(crate) fn freeze_baseline(&mut self) {
        self.baseline = Baseline {
            supply: self.supply.clone(),
            capacity: self.capacities.iter().map(|(id, p)| (id.clone(), p.profile.clone())).collect(),
            deliveries: self.deliveries.clone(),
            orders: self.orders.clone(),
        };
    }

    /// Canonical bytes: sorted keys, no insignificant whitespace.
    pub fn canonical_json(&self) -> String {
        crate::canonical_json(self)
    }

    pub(crate) fn check_day(&self, day: Day) -> Result<(), ModelError> {
        if day >= self.horizon_days {
            return Err(ModelError::DayOutOfHorizon { path: String::new(), day, horizon: self.horizon_days });
        }
        Ok(())
    }
}

fn unknown(kind: &'static str, id: &str) -> ModelError {
    ModelError::UnknownId { path: String::new(), kind, id: id.to_string() }
}

impl fmt::Display for OrderStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderStatus::Active => "active",
            OrderStatus::PartiallyReduced => "partially_reduced",
            OrderStatus::Cancelled => "cancelled",
        })
    }
}
