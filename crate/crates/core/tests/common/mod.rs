#![allow(dead_code)]
// filter + map would need two closures borrowing the rng
#![allow(clippy::filter_map_bool_then)]

use rand::Rng;
use resched_core::solver::{AllocationOrder, AllocationProblem, Mode, ReductionProblem, WeightConfig};

/// Small random allocation problem: up to 3 orders, up to 5 days, every
/// quantity at most 5.
pub fn allocation_problem(rng: &mut impl Rng, mode: Mode) -> AllocationProblem {
    let horizon = rng.gen_range(1..=5usize);
    let count = rng.gen_range(0..=3usize);
    let orders = (0..count)
        .map(|i| {
            let demand: Vec<(u32, u64)> = (0..horizon as u32)
                .filter_map(|d| rng.gen_bool(0.5).then(|| (d, rng.gen_range(1..=5))))
                .collect();
            AllocationOrder::new(format!("o{i}"), demand, rng.gen_range(1..=3))
        })
        .collect();
    let supply = (0..horizon).map(|_| rng.gen_range(0..=5)).collect();
    let mut p = AllocationProblem::new(mode, horizon, supply, orders);
    p.allow_early = rng.gen_bool(0.5);
    p
}

/// Either the default weights or small random positive F and L per order.
pub fn weights(rng: &mut impl Rng, problem: &AllocationProblem) -> WeightConfig {
    if rng.gen_bool(0.5) {
        return WeightConfig::default();
    }
    WeightConfig {
        fulfillment_weight: problem.orders.iter().map(|o| (o.id.clone(), rng.gen_range(1..=3))).collect(),
        adherence_weight: problem.orders.iter().map(|o| (o.id.clone(), rng.gen_range(1..=3))).collect(),
        ..Default::default()
    }
}

pub fn reduction_problem(rng: &mut impl Rng) -> ReductionProblem {
    let horizon = rng.gen_range(1..=5usize);
    let mut p = ReductionProblem::new(horizon);
    for s in 0..rng.gen_range(0..=3) {
        let q: Vec<(u32, i64)> =
            (0..horizon as u32).filter_map(|d| rng.gen_bool(0.5).then(|| (d, rng.gen_range(0..=5)))).collect();
        p = p.request(format!("s{s}"), q);
    }
    if rng.gen_bool(0.5) {
        let mut w = rng.gen_range(horizon as i64..=horizon as i64 + 5);
        p.day_weights = (0..horizon)
            .map(|_| {
                let cur = w;
                w -= rng.gen_range(1..=2).min(w - 1).max(1);
                cur
            })
            .collect();
        if p.day_weights.iter().any(|w| *w <= 0) {
            p.day_weights.clear();
        }
    }
    p
}
