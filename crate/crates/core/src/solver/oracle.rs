//! Exhaustive search over every integer solution of small instances.
//!
//! Shares nothing with the solvers beyond the problem types. The search walks
//! every variable through its full range and only cuts branches that already
//! violate a constraint; identical sub-searches are memoized on the state that
//! determines every later constraint and objective term.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Allocation, AllocationProblem, Mode, ReductionPlan, ReductionProblem, WeightConfig};
use crate::error::SolveError;

pub const DEFAULT_BOUND: u128 = 10_000_000;

#[derive(Debug, Clone, Copy)]
pub enum OracleProblem<'a> {
    Allocation(&'a AllocationProblem, &'a WeightConfig),
    Reduction(&'a ReductionProblem),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OracleSolution {
    Allocation(Allocation),
    Reduction(ReductionPlan),
}

impl OracleSolution {
    pub fn objective(&self) -> i64 {
        match self {
            OracleSolution::Allocation(a) => a.objective,
            OracleSolution::Reduction(r) => r.objective,
        }
    }
}

/// Optimal objective and one optimal solution, or `TooLarge` when the
/// search space exceeds `bound` states.
pub fn brute_force_oracle(problem: OracleProblem<'_>, bound: u128) -> Result<OracleSolution, SolveError> {
    match problem {
        OracleProblem::Allocation(p, w) => allocation(p, w, bound).map(OracleSolution::Allocation),
        OracleProblem::Reduction(p) => reduction(p, bound).map(OracleSolution::Reduction),
    }
}

fn too_large(sizes: impl Iterator<Item = u64>, bound: u128) -> Result<(), SolveError> {
    let mut size: u128 = 1;
    for s in sizes {
        size = size.saturating_mul(s as u128);
        if size > bound {
            return Err(SolveError::TooLarge { size, bound });
        }
    }
    Ok(())
}

struct AllocSearch<'a> {
    p: &'a AllocationProblem,
    n: usize,
    m: usize,
    demand: Vec<Vec<u64>>,
    total: Vec<u64>,
    coef: Vec<(i64, i64, i64)>,
    /// State -> (best future value, chosen quantity).
    memo: HashMap<(usize, Vec<u64>, u64), (i64, u64)>,
}

impl AllocSearch<'_> {
    fn gain(&self, order: usize, day: usize, q: u64) -> i64 {
        let (w, f, l) = self.coef[order];
        let q = q as i64;
        match self.p.mode {
            Mode::Partial => w * q,
            Mode::Capacity => q,
            Mode::AllOrNothing => f * q + l * q * (q - self.demand[order][day] as i64),
        }
    }

    /// Variable `k` is (day k / m, order k % m). `used` is cumulative supply
    /// used (material modes) or capacity used today (capacity mode).
    fn best(&mut self, k: usize, given: &mut Vec<u64>, used: u64) -> i64 {
        if k == self.n * self.m {
            return 0;
        }
        let key = (k, given.clone(), used);
        if let Some(&(v, _)) = self.memo.get(&key) {
            return v;
        }
        let (day, order) = (k / self.m, k % self.m);
        let ends_day = order + 1 == self.m;
        let mut choice: Option<(i64, u64)> = None;
        let mut q = 0u64;
        loop {
            let now = used + q;
            let supply_ok = match self.p.mode {
                Mode::Capacity => now <= self.p.supply[day],
                _ => now <= self.p.supply[..=day].iter().sum::<u64>(),
            };
            let got = given[order] + q;
            let demand_ok = got <= self.total[order]
                && (self.p.allow_early && self.p.mode != Mode::AllOrNothing
                    || got <= self.demand[order][..=day].iter().sum::<u64>())
                && (self.p.mode != Mode::AllOrNothing || q <= self.demand[order][day]);
            if !supply_ok || !demand_ok {
                break;
            }
            given[order] = got;
            let next_used = if ends_day && self.p.mode == Mode::Capacity { 0 } else { now };
            let v = self.gain(order, day, q) + self.best(k + 1, given, next_used);
            given[order] -= q;
            if choice.is_none_or(|(b, _)| v > b) {
                choice = Some((v, q));
            }
            q += 1;
        }
        let (v, q) = choice.expect("zero is always feasible");
        self.memo.insert(key, (v, q));
        v
    }
}

pub fn allocation(problem: &AllocationProblem, weights: &WeightConfig, bound: u128) -> Result<Allocation, SolveError> {
    problem.validate()?;
    weights.validate()?;
    let n = problem.horizon;
    let m = problem.orders.len();
    let mut demand = vec![vec![0u64; n]; m];
    for (i, o) in problem.orders.iter().enumerate() {
        for (&d, &q) in &o.demand {
            demand[i][d as usize] = q;
        }
    }
    let total: Vec<u64> = demand.iter().map(|r| r.iter().sum()).collect();
    let supply_span = match problem.mode {
        Mode::Capacity => problem.supply.iter().copied().max().unwrap_or(0),
        _ => problem.supply.iter().sum(),
    };
    // States: variables x per-order running totals x supply used.
    too_large(
        [(n * m) as u64 + 1, supply_span + 1].into_iter().chain(total.iter().map(|t| t + 1)),
        bound,
    )?;

    let dmax = demand.iter().flatten().copied().max().unwrap_or(0);
    let mut coef = Vec::with_capacity(m);
    for o in &problem.orders {
        coef.push((weights.priority_weight(o.priority)?, weights.fulfillment(&o.id), weights.adherence(&o.id, dmax)));
    }
    let mut search = AllocSearch { p: problem, n, m, demand, total, coef, memo: HashMap::new() };
    let mut given = vec![0u64; m];
    let objective = search.best(0, &mut given, 0);

    // Walk the memo to recover one optimal assignment.
    let mut x = vec![vec![0u64; n]; m];
    let mut used = 0u64;
    for k in 0..n * m {
        let (day, order) = (k / m, k % m);
        let (_, q) = search.memo[&(k, given.clone(), used)];
        x[order][day] = q;
        given[order] += q;
        used += q;
        if order + 1 == m && problem.mode == Mode::Capacity {
            used = 0;
        }
    }
    Ok(Allocation::from_dense(&problem.orders, &x, objective))
}

pub fn reduction(problem: &ReductionProblem, bound: u128) -> Result<ReductionPlan, SolveError> {
    let weights = problem.weights()?;
    let requests = problem.cumulative_requests()?;
    let n = problem.horizon;
    // A cumulative level above every request on every day is never cheaper
    // than the same plan capped at that value.
    let top = requests.values().flat_map(|q| q.iter().copied()).max().unwrap_or(0).max(0) as u64;
    too_large([n as u64 + 1, top + 1, top + 1].into_iter(), bound)?;

    // best[(day, previous level)] = (cheapest cost of days day.., level chosen)
    let mut memo: HashMap<(usize, i64), (i64, i64)> = HashMap::new();
    fn walk(
        day: usize,
        prev: i64,
        top: i64,
        weights: &[i64],
        requests: &[&Vec<i64>],
        memo: &mut HashMap<(usize, i64), (i64, i64)>,
    ) -> Option<i64> {
        if day == weights.len() {
            return Some(0);
        }
        if let Some(&(v, _)) = memo.get(&(day, prev)) {
            return Some(v);
        }
        let mut choice: Option<(i64, i64)> = None;
        for level in 0..=top {
            if requests.iter().any(|q| q[day] > level) {
                continue;
            }
            let Some(rest) = walk(day + 1, level, top, weights, requests, memo) else { continue };
            let v = weights[day] * (level - prev) + rest;
            if choice.is_none_or(|(b, _)| v < b) {
                choice = Some((v, level));
            }
        }
        let c = choice?;
        memo.insert((day, prev), c);
        Some(c.0)
    }
    let reqs: Vec<&Vec<i64>> = requests.values().collect();
    let objective = walk(0, 0, top as i64, &weights, &reqs, &mut memo).unwrap_or(0);
    let mut r = Vec::with_capacity(n);
    let mut prev = 0;
    for day in 0..n {
        let (_, level) = memo[&(day, prev)];
        r.push(level - prev);
        prev = level;
    }
    Ok(ReductionPlan { r, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::AllocationOrder;

    #[test]
    fn empty_problem_is_zero() {
        let p = AllocationProblem::new(Mode::Partial, 0, vec![], vec![]);
        assert_eq!(allocation(&p, &WeightConfig::default(), DEFAULT_BOUND).unwrap().objective, 0);
        assert_eq!(reduction(&ReductionProblem::new(0), DEFAULT_BOUND).unwrap().objective, 0);
    }

    #[test]
    fn zero_supply_is_not_an_error() {
        let p = AllocationProblem::new(Mode::Partial, 2, vec![0, 0], vec![AllocationOrder::new("A", [(1, 3)], 1)]);
        assert_eq!(allocation(&p, &WeightConfig::default(), DEFAULT_BOUND).unwrap().objective, 0);
    }

    #[test]
    fn refuses_large_instances() {
        let orders = (0..3).map(|i| AllocationOrder::new(format!("o{i}"), [(0, 1000)], 1)).collect();
        let p = AllocationProblem::new(Mode::Partial, 5, vec![1000; 5], orders);
        assert!(matches!(allocation(&p, &WeightConfig::default(), DEFAULT_BOUND), Err(SolveError::TooLarge { .. })));
    }

    #[test]
    fn hand_checked_examples() {
        let w = WeightConfig::default();
        let p = AllocationProblem::new(
            Mode::Partial,
            1,
            vec![6],
            vec![AllocationOrder::new("A", [(0, 5)], 2), AllocationOrder::new("B", [(0, 5)], 1)],
        );
        assert_eq!(allocation(&p, &w, DEFAULT_BOUND).unwrap().objective, 11);
        let p = ReductionProblem { day_weights: vec![2, 1], ..ReductionProblem::new(2) }
            .request("s1", [(0, 2)])
            .request("s2", [(1, 3)]);
        let plan = reduction(&p, DEFAULT_BOUND).unwrap();
        assert_eq!((plan.r, plan.objective), (vec![2, 1], 5));
    }
}
