use std::collections::HashMap;

use super::{effective_cumulative, Allocation, AllocationProblem, Mode, WeightConfig};
use crate::error::SolveError;

/// One (order, demand day) decision.
#[derive(Debug, Clone)]
struct Cell {
    order: usize,
    day: usize,
    demand: u64,
    f: i64,
    l: i64,
}

impl Cell {
    fn value(&self, x: u64) -> i64 {
        let x = x as i64;
        self.f * x + self.l * x * (x - self.demand as i64)
    }
}

struct Search<'a> {
    cells: &'a [Cell],
    cap: &'a [u64],
    /// For each suffix of `cells`: (F, demand) sorted by F descending.
    suffix_units: Vec<Vec<(i64, u64)>>,
    memo: HashMap<(usize, u64), i64>,
    current: Vec<u64>,
    best: Option<(i64, Vec<u64>)>,
}

impl Search<'_> {
    /// Fractional knapsack over the remaining cells: no cell earns more than
    /// `F` per unit, and no more than the final cumulative supply is left.
    fn bound(&self, idx: usize, used: u64) -> i64 {
        let mut left = self.cap.last().copied().unwrap_or(0) - used;
        let mut total = 0;
        for &(f, d) in &self.suffix_units[idx] {
            if left == 0 || f <= 0 {
                break;
            }
            let take = d.min(left);
            total += f * take as i64;
            left -= take;
        }
        total
    }

    fn run(&mut self, idx: usize, used: u64, value: i64) {
        if idx == self.cells.len() {
            if self.best.as_ref().is_none_or(|(b, _)| value > *b) {
                self.best = Some((value, self.current.clone()));
            }
            return;
        }
        if let Some((b, _)) = &self.best {
            if value + self.bound(idx, used) <= *b {
                return;
            }
        }
        match self.memo.get(&(idx, used)) {
            Some(&seen) if seen >= value => return,
            _ => {
                self.memo.insert((idx, used), value);
            }
        }
        let cell = &self.cells[idx];
        let upper = cell.demand.min(self.cap[cell.day] - used);
        // Try the largest useful quantity first; quantities whose value is
        // not positive are dominated by zero (same or better, less supply).
        // g(x) > 0 exactly when x > d - F/L.
        let lowest = if cell.l > 0 {
            ((cell.l * cell.demand as i64 - cell.f).div_euclid(cell.l) + 1).max(1) as u64
        } else {
            1
        };
        let mut x = upper;
        while x >= lowest {
            let v = cell.value(x);
            if v > 0 {
                self.current[idx] = x;
                self.run(idx + 1, used + x, value + v);
            }
            x -= 1;
        }
        self.current[idx] = 0;
        self.run(idx + 1, used, value);
    }
}

/// Maximizes `sum F_m x_mn + L_m x_mn (x_mn - d_mn)` under cumulative supply.
///
/// Decisions exist only on demand days and never exceed that day's demand.
/// Exact depth-first branch and bound over the cells in (day, order) order,
/// memoizing the best value seen for each (cell, supply used) state.
pub fn solve_all_or_nothing(problem: &AllocationProblem, weights: &WeightConfig) -> Result<Allocation, SolveError> {
    problem.expect(Mode::AllOrNothing, "all_or_nothing")?;
    weights.validate()?;
    let n = problem.horizon;
    let dmax = problem.max_demand();
    let mut cells = Vec::new();
    for (i, o) in problem.orders.iter().enumerate() {
        weights.priority_weight(o.priority)?;
        let f = weights.fulfillment(&o.id);
        let l = weights.adherence(&o.id, dmax);
        for (&day, &demand) in &o.demand {
            if demand > 0 {
                cells.push(Cell { order: i, day: day as usize, demand, f, l });
            }
        }
    }
    let orders = &problem.orders;
    cells.sort_by(|a, b| {
        a.day.cmp(&b.day).then_with(|| b.f.cmp(&a.f)).then_with(|| orders[a.order].id.cmp(&orders[b.order].id))
    });

    let cap = effective_cumulative(&problem.supply);
    let mut suffix_units = vec![Vec::new(); cells.len() + 1];
    for idx in (0..cells.len()).rev() {
        let mut units = suffix_units[idx + 1].clone();
        units.push((cells[idx].f, cells[idx].demand));
        units.sort_by_key(|u| std::cmp::Reverse(u.0));
        suffix_units[idx] = units;
    }
    let mut search = Search {
        cells: &cells,
        cap: &cap,
        suffix_units,
        memo: HashMap::new(),
        current: vec![0; cells.len()],
        best: None,
    };
    search.run(0, 0, 0);
    let (objective, chosen) = search.best.unwrap_or((0, Vec::new()));

    let mut x = vec![vec![0u64; n]; orders.len()];
    for (cell, q) in cells.iter().zip(&chosen) {
        x[cell.order][cell.day] = *q;
    }
    Ok(Allocation::from_dense(orders, &x, objective))
}
