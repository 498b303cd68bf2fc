//! Optional clean-up after stabilization: production that only existed to
//! feed demand which has since been cut is removed again.

use crate::model::World;

/// Total quantity the baseline schedule consumed from `id`.
fn baseline_outflow(world: &World, id: &str) -> u64 {
    let base = &world.baseline;
    let node = &world.materials[id];
    let mut total = 0;
    for customer in &node.customer_links {
        let c = world.materials[customer].per_unit(id).unwrap_or(1);
        total += c * base.supply[customer].planned_production.iter().sum::<u64>();
    }
    for order in world.orders.values().filter(|o| o.material == id) {
        total += base.deliveries[&order.id].iter().sum::<u64>();
    }
    total
}

/// Working from finished goods down, each producing material drops as much
/// planned production as its downstream demand fell below the baseline,
/// less what it already lost during negotiation. Units come off the latest
/// days first and only while every day stays covered.
pub fn inventory_reduction(world: &World) -> World {
    let mut w = world.clone();
    let h = w.horizon();
    for id in w.topological_order() {
        if w.materials[&id].is_raw_material() {
            continue;
        }
        let now_out: u64 = w.outflow(&id).expect("known material").iter().sum();
        let drop = baseline_outflow(&w, &id).saturating_sub(now_out);
        let base_prod: u64 = w.baseline.supply[&id].planned_production.iter().sum();
        let now_prod: u64 = w.supply[&id].planned_production.iter().sum();
        let mut strip = drop.saturating_sub(base_prod.saturating_sub(now_prod));
        for day in (0..h).rev() {
            if strip == 0 {
                break;
            }
            let usable = w.usable_supply(&id).expect("known material");
            let committed = w.commitments(&id).expect("known material");
            let slack = (day..h).map(|d| usable[d].saturating_sub(committed[d])).min().unwrap_or(0);
            let prod = &mut w.supply.get_mut(&id).unwrap().planned_production;
            let take = strip.min(prod[day]).min(slack);
            prod[day] -= take;
            strip -= take;
        }
    }
    w
}
