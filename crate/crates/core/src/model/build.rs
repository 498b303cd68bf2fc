use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    check_feasibility, Baseline, CapacityPackage, CapacityProfile, Day, MaterialNode, Order, OrderStatus,
    SupplyProfile, World, EXTERNAL_CUSTOMER,
};
use crate::error::ModelError;

fn one() -> u64 {
    1
}

fn one_u32() -> u32 {
    1
}

fn external() -> String {
    EXTERNAL_CUSTOMER.to_string()
}

fn is_one(v: &u64) -> bool {
    *v == 1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplierLink {
    pub material: String,
    /// Pieces of the supplier consumed per produced piece.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub per_unit: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialDef {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub location: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suppliers: Vec<SupplierLink>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub substitutes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityDef {
    pub id: String,
    /// Capacity on every day not listed in `overrides`.
    pub daily: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<Day, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderDef {
    pub id: String,
    pub material: String,
    #[serde(default = "external")]
    pub customer: String,
    pub demand: BTreeMap<Day, u64>,
    #[serde(default = "one_u32")]
    pub priority: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplyDef {
    #[serde(default)]
    pub in_stock: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub in_transit: BTreeMap<Day, u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub planned_production: BTreeMap<Day, u64>,
}

/// Validates the inputs and assembles a [`World`] whose baseline is the
/// given schedule.
///
/// Internal demand is derived from `planned_production`, so `orders` only
/// carries external demand on finished goods. Fails on dangling ids, a cyclic
/// BOM, or an initial schedule that violates a supply or capacity constraint.
pub fn build_world(
    materials: &[MaterialDef],
    capacities: &[CapacityDef],
    orders: &[OrderDef],
    supply: &BTreeMap<String, SupplyDef>,
    horizon_days: u32,
) -> Result<World, ModelError> {
    if horizon_days == 0 {
        return Err(ModelError::invalid("/horizon_days", "horizon must be at least one day"));
    }
    let h = horizon_days as usize;

    let mut nodes: BTreeMap<String, MaterialNode> = BTreeMap::new();
    for (i, def) in materials.iter().enumerate() {
        let path = format!("/materials/{i}/id");
        if def.id.is_empty() || def.id == EXTERNAL_CUSTOMER {
            return Err(ModelError::invalid(path, format!("`{}` is not a usable material id", def.id)));
        }
        if nodes.contains_key(&def.id) {
            return Err(ModelError::DuplicateId { path, id: def.id.clone() });
        }
        nodes.insert(
            def.id.clone(),
            MaterialNode {
                id: def.id.clone(),
                location: def.location.clone(),
                level: 0,
                supplier_links: def.suppliers.clone(),
                customer_links: Vec::new(),
                capacity_link: def.capacity.clone(),
                is_finished_good: false,
                substitutes: def.substitutes.clone(),
            },
        );
    }

    let mut packages: BTreeMap<String, CapacityPackage> = BTreeMap::new();
    for (i, def) in capacities.iter().enumerate() {
        let path = format!("/capacities/{i}");
        if def.id.is_empty() || nodes.contains_key(&def.id) || packages.contains_key(&def.id) {
            return Err(ModelError::DuplicateId { path: format!("{path}/id"), id: def.id.clone() });
        }
        let mut per_day = vec![def.daily; h];
        for (&day, &q) in &def.overrides {
            if day >= horizon_days {
                return Err(ModelError::DayOutOfHorizon {
                    path: format!("{path}/overrides/{day}"),
                    day,
                    horizon: horizon_days,
                });
            }
            per_day[day as usize] = q;
        }
        packages.insert(
            def.id.clone(),
            CapacityPackage { id: def.id.clone(), member_materials: BTreeSet::new(), profile: CapacityProfile { per_day } },
        );
    }

    // Links.
    for (i, def) in materials.iter().enumerate() {
        let mut seen = BTreeSet::new();
        for (j, link) in def.suppliers.iter().enumerate() {
            let path = format!("/materials/{i}/suppliers/{j}");
            if !nodes.contains_key(&link.material) {
                return Err(ModelError::UnknownId {
                    path: format!("{path}/material"),
                    kind: "material",
                    id: link.material.clone(),
                });
            }
            if !seen.insert(link.material.as_str()) {
                return Err(ModelError::DuplicateId { path: format!("{path}/material"), id: link.material.clone() });
            }
            if link.per_unit == 0 {
                return Err(ModelError::invalid(format!("{path}/per_unit"), "consumption per unit must be positive"));
            }
        }
        if let Some(pkg) = &def.capacity {
            let Some(package) = packages.get_mut(pkg) else {
                return Err(ModelError::UnknownId {
                    path: format!("/materials/{i}/capacity"),
                    kind: "capacity package",
                    id: pkg.clone(),
                });
            };
            package.member_materials.insert(def.id.clone());
        }
    }
    for def in materials {
        for link in &def.suppliers {
            nodes.get_mut(&link.material).unwrap().customer_links.push(def.id.clone());
        }
    }
    for node in nodes.values_mut() {
        node.customer_links.sort();
        node.is_finished_good = node.customer_links.is_empty();
    }
    assign_levels(&mut nodes)?;

    // External orders.
    let mut order_book = BTreeMap::new();
    let mut deliveries = BTreeMap::new();
    for (i, def) in orders.iter().enumerate() {
        let path = format!("/orders/{i}");
        if def.id.is_empty() || order_book.contains_key(&def.id) {
            return Err(ModelError::DuplicateId { path: format!("{path}/id"), id: def.id.clone() });
        }
        let Some(node) = nodes.get(&def.material) else {
            return Err(ModelError::UnknownId {
                path: format!("{path}/material"),
                kind: "material",
                id: def.material.clone(),
            });
        };
        if !node.is_finished_good {
            return Err(ModelError::invalid(
                format!("{path}/material"),
                format!("`{}` has material customers; external orders must target finished goods", def.material),
            ));
        }
        if def.customer != EXTERNAL_CUSTOMER {
            return Err(ModelError::invalid(
                format!("{path}/customer"),
                "only external orders are listed; internal demand follows from planned production",
            ));
        }
        if def.priority == 0 {
            return Err(ModelError::invalid(format!("{path}/priority"), "priority must be a positive integer"));
        }
        if def.demand.is_empty() {
            return Err(ModelError::invalid(format!("{path}/demand"), "order has no demand"));
        }
        let mut schedule = vec![0u64; h];
        for (&day, &q) in &def.demand {
            let dpath = format!("{path}/demand/{day}");
            if day >= horizon_days {
                return Err(ModelError::DayOutOfHorizon { path: dpath, day, horizon: horizon_days });
            }
            if q == 0 {
                return Err(ModelError::invalid(dpath, "demand quantities must be positive"));
            }
            schedule[day as usize] = q;
        }
        order_book.insert(
            def.id.clone(),
            Order {
                id: def.id.clone(),
                supplier: def.material.clone(),
                customer: def.customer.clone(),
                material: def.material.clone(),
                demand: def.demand.clone(),
                priority: def.priority,
                status: OrderStatus::Active,
            },
        );
        deliveries.insert(def.id.clone(), schedule);
    }

    // Supply profiles; materials without an entry start empty.
    for key in supply.keys() {
        if !nodes.contains_key(key) {
            return Err(ModelError::UnknownId { path: format!("/supply/{key}"), kind: "material", id: key.clone() });
        }
    }
    let mut profiles = BTreeMap::new();
    for id in nodes.keys() {
        let def = supply.get(id).cloned().unwrap_or_default();
        let mut production = vec![0u64; h];
        for (&day, &q) in &def.planned_production {
            if day >= horizon_days {
                return Err(ModelError::DayOutOfHorizon {
                    path: format!("/supply/{id}/planned_production/{day}"),
                    day,
                    horizon: horizon_days,
                });
            }
            production[day as usize] = q;
        }
        for &day in def.in_transit.keys() {
            if day >= horizon_days {
                return Err(ModelError::DayOutOfHorizon {
                    path: format!("/supply/{id}/in_transit/{day}"),
                    day,
                    horizon: horizon_days,
                });
            }
        }
        let in_transit = def.in_transit.into_iter().filter(|(_, q)| *q > 0).collect();
        profiles.insert(
            id.clone(),
            SupplyProfile { in_stock: def.in_stock, in_transit, planned_production: production, holds: Vec::new() },
        );
    }

    let mut world = World {
        horizon_days,
        materials: nodes,
        capacities: packages,
        orders: order_book,
        supply: profiles,
        deliveries,
        baseline: Baseline {
            supply: BTreeMap::new(),
            capacity: BTreeMap::new(),
            deliveries: BTreeMap::new(),
            orders: BTreeMap::new(),
        },
    };
    check_feasibility(&world).map_err(ModelError::InfeasibleBaseline)?;
    world.freeze_baseline();
    Ok(world)
}

/// Longest-path depth from the finished goods; also rejects cycles.
fn assign_levels(nodes: &mut BTreeMap<String, MaterialNode>) -> Result<(), ModelError> {
    if let Some(cycle) = find_cycle(nodes) {
        return Err(ModelError::Cycle { cycle });
    }
    // Kahn's algorithm over customer -> supplier edges, roots first.
    let mut pending: BTreeMap<&str, usize> =
        nodes.values().map(|n| (n.id.as_str(), n.customer_links.len())).collect();
    let mut ready: Vec<String> = pending.iter().filter(|(_, c)| **c == 0).map(|(id, _)| id.to_string()).collect();
    let mut levels: BTreeMap<String, u32> = BTreeMap::new();
    while let Some(id) = ready.pop() {
        let level = *levels.entry(id.clone()).or_insert(0);
        for link in &nodes[&id].supplier_links {
            let entry = levels.entry(link.material.clone()).or_insert(0);
            *entry = (*entry).max(level + 1);
            let count = pending.get_mut(link.material.as_str()).unwrap();
            *count -= 1;
            if *count == 0 {
                ready.push(link.material.clone());
            }
        }
    }
    for (id, level) in levels {
        nodes.get_mut(&id).unwrap().level = level;
    }
    Ok(())
}

fn find_cycle(nodes: &BTreeMap<String, MaterialNode>) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut marks: BTreeMap<&str, Mark> = nodes.keys().map(|k| (k.as_str(), Mark::New)).collect();

    fn visit<'a>(
        id: &'a str,
        nodes: &'a BTreeMap<String, MaterialNode>,
        marks: &mut BTreeMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        marks.insert(id, Mark::Active);
        path.push(id);
        for link in &nodes[id].supplier_links {
            let next = link.material.as_str();
            match marks[next] {
                Mark::Active => {
                    let start = path.iter().position(|p| *p == next).unwrap();
                    let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(next.to_string());
                    return Some(cycle);
                }
                Mark::New => {
                    if let Some(c) = visit(next, nodes, marks, path) {
                        return Some(c);
                    }
                }
                Mark::Done => {}
            }
        }
        path.pop();
        marks.insert(id, Mark::Done);
        None
    }

    let ids: Vec<&str> = nodes.keys().map(String::as_str).collect();
    for id in ids {
        if marks[id] == Mark::New {
            if let Some(c) = visit(id, nodes, &mut marks, &mut Vec::new()) {
                return Some(c);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(id: &str, suppliers: &[&str]) -> MaterialDef {
        MaterialDef {
            id: id.into(),
            location: String::new(),
            suppliers: suppliers.iter().map(|s| SupplierLink { material: s.to_string(), per_unit: 1 }).collect(),
            capacity: None,
            substitutes: vec![],
        }
    }

    #[test]
    fn two_node_cycle_is_rejected() {
        let err = build_world(&[mat("A", &["B"]), mat("B", &["A"])], &[], &[], &BTreeMap::new(), 14).unwrap_err();
        match err {
            ModelError::Cycle { cycle } => {
                assert_eq!(cycle.first(), cycle.last());
                assert_eq!(cycle.len(), 3);
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn empty_order_book_is_trivially_feasible() {
        let w = build_world(&[mat("FG", &["RM"]), mat("RM", &[])], &[], &[], &BTreeMap::new(), 14).unwrap();
        assert_eq!(w.materials()["RM"].level, 1);
        assert!(w.materials()["FG"].is_finished_good);
        assert_eq!(w.materials()["RM"].customer_links, vec!["FG".to_string()]);
    }

    #[test]
    fn dangling_supplier_reports_pointer() {
        let err = build_world(&[mat("FG", &["NOPE"])], &[], &[], &BTreeMap::new(), 14).unwrap_err();
        assert_eq!(err.path(), Some("/materials/0/suppliers/0/material"));
    }

    #[test]
    fn levels_follow_longest_path() {
        // FG -> A -> B and FG -> B: B sits two levels down.
        let w = build_world(&[mat("FG", &["A", "B"]), mat("A", &["B"]), mat("B", &[])], &[], &[], &BTreeMap::new(), 5)
            .unwrap();
        assert_eq!(w.materials()["B"].level, 2);
        assert_eq!(w.topological_order(), vec!["FG", "A", "B"]);
    }

    #[test]
    fn infeasible_baseline_names_first_violation() {
        let orders = vec![OrderDef {
            id: "O1".into(),
            material: "FG".into(),
            customer: EXTERNAL_CUSTOMER.into(),
            demand: BTreeMap::from([(2, 5)]),
            priority: 1,
        }];
        let mut supply = BTreeMap::new();
        supply.insert("FG".to_string(), SupplyDef { in_stock: 3, ..Default::default() });
        let err = build_world(&[mat("FG", &[])], &[], &orders, &supply, 5).unwrap_err();
        match err {
            ModelError::InfeasibleBaseline(v) => assert!(v.to_string().contains("FG"), "{v}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn order_day_outside_horizon() {
        let orders = vec![OrderDef {
            id: "O1".into(),
            material: "FG".into(),
            customer: EXTERNAL_CUSTOMER.into(),
            demand: BTreeMap::from([(9, 5)]),
            priority: 1,
        }];
        let err = build_world(&[mat("FG", &[])], &[], &orders, &BTreeMap::new(), 5).unwrap_err();
        assert_eq!(err.path(), Some("/orders/0/demand/9"));
    }
}
