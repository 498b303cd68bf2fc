use super::{effective_cumulative, Allocation, AllocationProblem, Mode, WeightConfig};
use crate::error::SolveError;

/// Maximizes `sum W_m x_mn` under cumulative supply.
///
/// The objective only depends on each order's total, so totals are filled
/// greedily by weight (higher first, then lower id) against the final
/// cumulative supply. The totals are then laid out day by day against the
/// suffix-minimum of cumulative supply, which is the tightest cap any later
/// day imposes on the running sum.
pub fn solve_partial(problem: &AllocationProblem, weights: &WeightConfig) -> Result<Allocation, SolveError> {
    problem.expect(Mode::Partial, "partial")?;
    weights.validate()?;
    let n = problem.horizon;
    let m = problem.orders.len();
    let mut w = Vec::with_capacity(m);
    for o in &problem.orders {
        w.push(weights.priority_weight(o.priority)?);
    }
    let mut rank: Vec<usize> = (0..m).collect();
    rank.sort_by(|&a, &b| w[b].cmp(&w[a]).then_with(|| problem.orders[a].id.cmp(&problem.orders[b].id)));

    let cap = effective_cumulative(&problem.supply);
    let demand: Vec<Vec<u64>> = problem.orders.iter().map(|o| o.dense(n)).collect();
    let mut budget = cap.last().copied().unwrap_or(0);
    let mut target = vec![0u64; m];
    for &i in &rank {
        let t = problem.orders[i].total().min(budget);
        target[i] = t;
        budget -= t;
    }

    let mut x = vec![vec![0u64; n]; m];
    let mut given = vec![0u64; m];
    let mut cum_demand = vec![0u64; m];
    let mut used = 0u64;
    for day in 0..n {
        let mut room = cap[day] - used;
        for &i in &rank {
            cum_demand[i] += demand[i][day];
            let limit = if problem.allow_early { target[i] } else { target[i].min(cum_demand[i]) };
            let a = limit.saturating_sub(given[i]).min(room);
            x[i][day] = a;
            given[i] += a;
            room -= a;
        }
        used = cap[day] - room;
    }
    debug_assert_eq!(given, target);

    let objective = (0..m).map(|i| w[i] * target[i] as i64).sum();
    Ok(Allocation::from_dense(&problem.orders, &x, objective))
}
