//! Seeded synthetic networks shaped like a mid-sized electronics plant:
//! several independent product groups of varying depth, each with its own
//! capacity packages.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ConfigOverrides, ScenarioFile, VERSION};
use crate::error::ScenarioError;
use crate::model::{AgentId, CapacityDef, Day, MaterialDef, OrderDef, SupplierLink, SupplyDef, World};

fn d_boms() -> usize {
    5
}
fn d_depth_min() -> u32 {
    2
}
fn d_depth_max() -> u32 {
    7
}
fn d_materials() -> usize {
    39
}
fn d_capacities() -> usize {
    18
}
fn d_doh() -> f64 {
    6.7
}
fn d_density() -> f64 {
    0.5
}
fn d_horizon() -> u32 {
    14
}
fn d_headroom() -> f64 {
    0.1
}
fn d_interval() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    /// Number of independent product groups.
    #[serde(default = "d_boms")]
    pub boms: usize,
    /// BOM depths are spread evenly between these, inclusive.
    #[serde(default = "d_depth_min")]
    pub depth_min: u32,
    #[serde(default = "d_depth_max")]
    pub depth_max: u32,
    /// Total material nodes across all groups.
    #[serde(default = "d_materials")]
    pub materials: usize,
    /// Total capacity packages; never shared between groups.
    #[serde(default = "d_capacities")]
    pub capacities: usize,
    #[serde(default = "d_doh")]
    pub days_on_hand: f64,
    /// Probability that a finished good has an order on a given day.
    #[serde(default = "d_density")]
    pub order_density: f64,
    /// Exact number of orders; overrides the density draw.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<usize>,
    #[serde(default = "d_horizon")]
    pub horizon_days: u32,
    #[serde(default)]
    pub seed: u64,
    /// Capacity above the baseline peak load, as a fraction.
    #[serde(default = "d_headroom")]
    pub capacity_headroom: f64,
    /// Days between raw-material deliveries.
    #[serde(default = "d_interval")]
    pub rm_delivery_interval: u32,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            boms: d_boms(),
            depth_min: d_depth_min(),
            depth_max: d_depth_max(),
            materials: d_materials(),
            capacities: d_capacities(),
            days_on_hand: d_doh(),
            order_density: d_density(),
            orders: None,
            horizon_days: d_horizon(),
            seed: 0,
            capacity_headroom: d_headroom(),
            rm_delivery_interval: d_interval(),
        }
    }
}

impl GeneratorParams {
    /// Depth of each product group, spread linearly over the range.
    pub fn depths(&self) -> Vec<u32> {
        if self.boms == 1 {
            return vec![self.depth_min];
        }
        let span = (self.depth_max - self.depth_min) as f64;
        (0..self.boms)
            .map(|b| self.depth_min + (b as f64 * span / (self.boms - 1) as f64).round() as u32)
            .collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Params(m));
        if self.boms == 0 {
            return bad("at least one BOM is required".into());
        }
        if self.depth_min < 2 {
            return bad(format!("depth_min {} is below 2", self.depth_min));
        }
        if self.depth_min > self.depth_max {
            return bad(format!("depth_min {} exceeds depth_max {}", self.depth_min, self.depth_max));
        }
        let needed: usize = self.depths().iter().map(|d| *d as usize).sum();
        if self.materials < needed {
            return bad(format!("{} materials cannot fill {} BOMs of depths {:?}", self.materials, self.boms, self.depths()));
        }
        if self.horizon_days == 0 {
            return bad("horizon must be at least one day".into());
        }
        if !(self.days_on_hand.is_finite() && self.days_on_hand >= 0.0) {
            return bad(format!("days on hand {} is not a non-negative number", self.days_on_hand));
        }
        if !(0.0..=1.0).contains(&self.order_density) {
            return bad(format!("order density {} is outside [0, 1]", self.order_density));
        }
        if self.orders == Some(0) && self.order_density > 0.0 {
            return bad("zero orders requested with a non-zero order density".into());
        }
        if self.rm_delivery_interval == 0 {
            return bad("raw-material delivery interval must be at least one day".into());
        }
        if !(self.capacity_headroom.is_finite() && self.capacity_headroom >= 0.0) {
            return bad("capacity headroom must be non-negative".into());
        }
        Ok(())
    }
}

struct Node {
    id: String,
    bom: usize,
    level: u32,
    suppliers: Vec<SupplierLink>,
}

/// Builds a scenario whose baseline is feasible by construction: production
/// is lot-for-lot on the day it is consumed, raw materials arrive ahead of
/// each delivery interval, and capacity covers the peak load with headroom.
pub fn generate_scenario(params: &GeneratorParams) -> Result<ScenarioFile, ScenarioError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let depths = params.depths();
    let h = params.horizon_days as usize;

    // Node levels per group: one chain node per level plus extras.
    let mut level_counts: Vec<Vec<usize>> = depths.iter().map(|d| vec![1; *d as usize]).collect();
    let extras = params.materials - depths.iter().map(|d| *d as usize).sum::<usize>();
    for _ in 0..extras {
        let b = rng.gen_range(0..params.boms);
        let l = rng.gen_range(0..depths[b] as usize);
        level_counts[b][l] += 1;
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut by_level: Vec<Vec<Vec<usize>>> = Vec::new();
    for (b, counts) in level_counts.iter().enumerate() {
        let deepest = counts.len() - 1;
        let mut levels = Vec::new();
        let mut k = 0;
        for (l, &count) in counts.iter().enumerate() {
            let prefix = match l {
                0 => "FG",
                _ if l == deepest => "RM",
                _ => "SFG",
            };
            let mut ids = Vec::new();
            for _ in 0..count {
                k += 1;
                ids.push(nodes.len());
                nodes.push(Node { id: format!("{prefix}{}-{k:02}", b + 1), bom: b, level: l as u32, suppliers: Vec::new() });
            }
            levels.push(ids);
        }
        by_level.push(levels);
    }

    let coefficient = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.7) { 1 } else { 2 };
    for levels in &by_level {
        // Each non-root node gets one or two customers on the level above.
        for l in 1..levels.len() {
            for (i, &child) in levels[l].iter().enumerate() {
                let mut parents = vec![if i == 0 { levels[l - 1][0] } else { *levels[l - 1].choose(&mut rng).unwrap() }];
                if levels[l - 1].len() > 1 && rng.gen_bool(0.25) {
                    let other = *levels[l - 1].choose(&mut rng).unwrap();
                    if other != parents[0] {
                        parents.push(other);
                    }
                }
                for p in parents {
                    let per_unit = coefficient(&mut rng);
                    let material = nodes[child].id.clone();
                    nodes[p].suppliers.push(SupplierLink { material, per_unit });
                }
            }
        }
        // Every node above the deepest level consumes something.
        for l in 0..levels.len() - 1 {
            for &parent in &levels[l] {
                if nodes[parent].suppliers.is_empty() {
                    let child = *levels[l + 1].choose(&mut rng).unwrap();
                    let per_unit = coefficient(&mut rng);
                    let material = nodes[child].id.clone();
                    nodes[parent].suppliers.push(SupplierLink { material, per_unit });
                }
            }
        }
        // Finished goods can end up on disjoint subtrees; those share the
        // spine's first-level component so the group stays one BOM.
        if levels.len() > 1 {
            let group: Vec<usize> = levels.iter().flatten().copied().collect();
            let spine = levels[1][0];
            let mut linked = BTreeSet::new();
            absorb(&nodes, &group, spine, &mut linked);
            for &fg in &levels[0] {
                if !linked.contains(&fg) {
                    let material = nodes[spine].id.clone();
                    nodes[fg].suppliers.push(SupplierLink { material, per_unit: 1 });
                    absorb(&nodes, &group, fg, &mut linked);
                }
            }
        }
    }
    for n in &mut nodes {
        n.suppliers.sort_by(|a, b| a.material.cmp(&b.material));
    }

    // Orders on finished goods.
    let fgs: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].level == 0).collect();
    let mut cells: Vec<(usize, usize)> = fgs.iter().flat_map(|&f| (0..h).map(move |d| (f, d))).collect();
    let chosen: Vec<(usize, usize)> = match params.orders {
        Some(k) => {
            if k > cells.len() {
                return Err(ScenarioError::Params(format!("{k} orders requested, only {} order slots", cells.len())));
            }
            cells.shuffle(&mut rng);
            let mut c = cells[..k].to_vec();
            c.sort();
            c
        }
        None => cells.into_iter().filter(|_| rng.gen_bool(params.order_density)).collect(),
    };
    let mut orders = Vec::new();
    let mut production: BTreeMap<usize, Vec<u64>> = (0..nodes.len()).map(|i| (i, vec![0u64; h])).collect();
    for (f, d) in chosen {
        let q = rng.gen_range(5..=20u64);
        orders.push(OrderDef {
            id: format!("ORD-{}-{d:02}", nodes[f].id),
            material: nodes[f].id.clone(),
            customer: crate::model::EXTERNAL_CUSTOMER.to_string(),
            demand: BTreeMap::from([(d as Day, q)]),
            priority: rng.gen_range(1..=3),
        });
        production.get_mut(&f).unwrap()[d] += q;
    }

    // Lot-for-lot explosion, level by level; raw materials get deliveries instead.
    let index: BTreeMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
    let max_level = nodes.iter().map(|n| n.level).max().unwrap_or(0);
    let mut consumption: BTreeMap<usize, Vec<u64>> = (0..nodes.len()).map(|i| (i, vec![0u64; h])).collect();
    for level in 0..=max_level {
        for i in (0..nodes.len()).filter(|&i| nodes[i].level == level) {
            if level > 0 && !nodes[i].suppliers.is_empty() {
                production.insert(i, consumption[&i].clone());
            }
            let made = production[&i].clone();
            for link in &nodes[i].suppliers {
                let c = consumption.get_mut(&index[&link.material]).unwrap();
                for d in 0..h {
                    c[d] += link.per_unit * made[d];
                }
            }
        }
    }

    let mut supply = BTreeMap::new();
    for (i, n) in nodes.iter().enumerate() {
        let mut def = SupplyDef::default();
        if n.suppliers.is_empty() && n.level > 0 {
            let step = params.rm_delivery_interval as usize;
            for start in (0..h).step_by(step) {
                let q: u64 = consumption[&i][start..(start + step).min(h)].iter().sum();
                if q > 0 {
                    def.in_transit.insert(start as Day, q);
                }
            }
        } else {
            def.planned_production =
                production[&i].iter().enumerate().filter(|(_, q)| **q > 0).map(|(d, q)| (d as Day, *q)).collect();
        }
        if def != SupplyDef::default() {
            supply.insert(n.id.clone(), def);
        }
    }

    // Capacity packages: contiguous runs of each group's producing nodes.
    let producing: Vec<Vec<usize>> = (0..params.boms)
        .map(|b| {
            let mut v: Vec<usize> =
                (0..nodes.len()).filter(|&i| nodes[i].bom == b && !nodes[i].suppliers.is_empty()).collect();
            v.sort_by(|&a, &c| nodes[a].level.cmp(&nodes[c].level).then_with(|| nodes[a].id.cmp(&nodes[c].id)));
            v
        })
        .collect();
    let total_producing: usize = producing.iter().map(Vec::len).sum();
    if params.capacities > total_producing {
        return Err(ScenarioError::Params(format!(
            "{} capacity packages requested but only {total_producing} producing materials",
            params.capacities
        )));
    }
    let shares = package_shares(&producing.iter().map(Vec::len).collect::<Vec<_>>(), params.capacities);
    let mut package_of: BTreeMap<usize, String> = BTreeMap::new();
    let mut capacities = Vec::new();
    for (b, members) in producing.iter().enumerate() {
        let k = shares[b];
        if k == 0 {
            continue;
        }
        let mut start = 0;
        for j in 0..k {
            let size = members.len() / k + usize::from(j < members.len() % k);
            let id = format!("CAP{}-{:02}", b + 1, j + 1);
            let mut load = vec![0u64; h];
            for &m in &members[start..start + size] {
                package_of.insert(m, id.clone());
                for d in 0..h {
                    load[d] += production[&m][d];
                }
            }
            let peak = load.iter().copied().max().unwrap_or(0) as f64;
            let daily = ((peak * (1.0 + params.capacity_headroom)).ceil() as u64).max(1);
            capacities.push(CapacityDef { id, daily, overrides: BTreeMap::new() });
            start += size;
        }
    }

    let mut materials: Vec<MaterialDef> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| MaterialDef {
            id: n.id.clone(),
            location: format!("site-{}", n.bom + 1),
            suppliers: n.suppliers.clone(),
            capacity: package_of.get(&i).cloned(),
            substitutes: Vec::new(),
        })
        .collect();
    materials.sort_by(|a, b| a.id.cmp(&b.id));
    orders.sort_by(|a, b| a.id.cmp(&b.id));

    let file = ScenarioFile {
        version: VERSION.to_string(),
        description: Some(format!(
            "synthetic: {} BOMs, depths {}-{}, {} materials, {} capacities, seed {}",
            params.boms, params.depth_min, params.depth_max, params.materials, params.capacities, params.seed
        )),
        horizon_days: params.horizon_days,
        materials,
        capacities,
        orders,
        supply,
        events: Vec::new(),
        config: ConfigOverrides::default(),
    };
    Ok(file.with_days_on_hand(params.days_on_hand))
}

/// Splits `total` packages across groups: one each first, the rest by
/// largest remainder in proportion to size, never more than a group's size.
fn package_shares(sizes: &[usize], total: usize) -> Vec<usize> {
    let mut shares = vec![0usize; sizes.len()];
    let mut left = total;
    for (i, &s) in sizes.iter().enumerate() {
        if left > 0 && s > 0 {
            shares[i] = 1;
            left -= 1;
        }
    }
    while left > 0 {
        let all: usize = sizes.iter().sum();
        let best = (0..sizes.len())
            .filter(|&i| shares[i] < sizes[i])
            .max_by(|&a, &b| {
                let ga = sizes[a] as f64 * total as f64 / all as f64 - shares[a] as f64;
                let gb = sizes[b] as f64 * total as f64 / all as f64 - shares[b] as f64;
                ga.partial_cmp(&gb).unwrap().then(b.cmp(&a))
            })
            .expect("capacity count checked against producing materials");
        shares[best] += 1;
        left -= 1;
    }
    shares
}

/// Disruption targets inside one product group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepTarget {
    pub component: Vec<AgentId>,
    /// Raw material with the largest consumption.
    pub raw_material: Option<AgentId>,
    /// Semi-finished good with the largest output; a finished good when the
    /// group has no intermediate level.
    pub quarantine: Option<AgentId>,
    /// Capacity package with the largest load.
    pub package: Option<AgentId>,
}

/// Adds everything connected to `from` within `group` to `linked`.
fn absorb(nodes: &[Node], group: &[usize], from: usize, linked: &mut BTreeSet<usize>) {
    let mut stack = vec![from];
    while let Some(n) = stack.pop() {
        if !linked.insert(n) {
            continue;
        }
        let id = &nodes[n].id;
        stack.extend(group.iter().filter(|&&m| {
            nodes[n].suppliers.iter().any(|s| s.material == nodes[m].id) || nodes[m].suppliers.iter().any(|s| &s.material == id)
        }));
    }
}

fn output<'w>(world: &World, n: &'w crate::model::MaterialNode) -> (&'w AgentId, u64) {
    (&n.id, world.production(&n.id).unwrap().iter().sum())
}

pub fn sweep_targets(world: &World) -> Vec<SweepTarget> {
    let total = |v: Vec<u64>| v.iter().sum::<u64>();
    let pick = |cands: Vec<(&AgentId, u64)>| {
        cands.into_iter().max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0))).map(|(id, _)| id.clone())
    };
    world
        .bom_components()
        .into_iter()
        .map(|component| {
            let members: BTreeSet<&AgentId> = component.iter().collect();
            let nodes: Vec<_> = component.iter().map(|id| &world.materials()[id]).collect();
            let raw_material = pick(
                nodes
                    .iter()
                    .filter(|n| n.is_raw_material())
                    .map(|n| (&n.id, total(world.outflow(&n.id).unwrap())))
                    .collect(),
            );
            let interior: Vec<_> =
                nodes.iter().filter(|n| !n.is_raw_material() && !n.is_finished_good).map(|n| output(world, n)).collect();
            let quarantine = if interior.is_empty() {
                pick(nodes.iter().filter(|n| n.is_finished_good).map(|n| output(world, n)).collect())
            } else {
                pick(interior)
            };
            let package = pick(
                world
                    .capacities()
                    .values()
                    .filter(|p| p.member_materials.iter().any(|m| members.contains(m)))
                    .map(|p| (&p.id, total(world.capacity_load(&p.id).unwrap())))
                    .collect(),
            );
            SweepTarget { component, raw_material, quarantine, package }
        })
        .collect()
}
