use super::{Allocation, AllocationProblem, Mode};
use crate::error::SolveError;

/// Maximizes total production under per-day capacity.
///
/// Each day's capacity goes to the outstanding demand in (priority desc, id)
/// order; outstanding means not yet produced and, without early production,
/// already due. Capacity that finds no outstanding demand expires.
pub fn solve_capacity(problem: &AllocationProblem) -> Result<Allocation, SolveError> {
    problem.expect(Mode::Capacity, "capacity")?;
    let n = problem.horizon;
    let m = problem.orders.len();
    let mut rank: Vec<usize> = (0..m).collect();
    let orders = &problem.orders;
    rank.sort_by(|&a, &b| orders[b].priority.cmp(&orders[a].priority).then_with(|| orders[a].id.cmp(&orders[b].id)));

    let demand: Vec<Vec<u64>> = orders.iter().map(|o| o.dense(n)).collect();
    let totals: Vec<u64> = orders.iter().map(|o| o.total()).collect();
    let mut x = vec![vec![0u64; n]; m];
    let mut done = vec![0u64; m];
    let mut due = vec![0u64; m];
    let mut objective = 0i64;
    for day in 0..n {
        let mut room = problem.supply[day];
        for &i in &rank {
            due[i] += demand[i][day];
            let limit = if problem.allow_early { totals[i] } else { due[i] };
            let a = (limit - done[i]).min(room);
            x[i][day] = a;
            done[i] += a;
            room -= a;
            objective += a as i64;
        }
    }
    Ok(Allocation::from_dense(orders, &x, objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::AllocationOrder;

    #[test]
    fn backlog_spills_into_next_day() {
        let p = AllocationProblem::new(
            Mode::Capacity,
            2,
            vec![3, 3],
            vec![AllocationOrder::new("A", [(0, 4)], 1), AllocationOrder::new("B", [(1, 2)], 1)],
        );
        let a = solve_capacity(&p).unwrap();
        assert_eq!((a.get("A", 0), a.get("A", 1), a.get("B", 1)), (3, 1, 2));
        assert_eq!(a.objective, 6);
        a.check(&p).unwrap();
    }

    #[test]
    fn zero_capacity() {
        let p = AllocationProblem::new(Mode::Capacity, 2, vec![0, 0], vec![AllocationOrder::new("A", [(0, 4)], 1)]);
        assert_eq!(solve_capacity(&p).unwrap().objective, 0);
    }

    #[test]
    fn ample_capacity_produces_on_demand_days() {
        let p = AllocationProblem::new(
            Mode::Capacity,
            3,
            vec![9, 9, 9],
            vec![AllocationOrder::new("A", [(1, 4)], 1), AllocationOrder::new("B", [(2, 2)], 1)],
        )
        .no_early();
        let a = solve_capacity(&p).unwrap();
        assert_eq!(a.dense("A", 3), vec![0, 4, 0]);
        assert_eq!(a.dense("B", 3), vec![0, 0, 2]);
    }

    #[test]
    fn priority_wins_contended_day() {
        let p = AllocationProblem::new(
            Mode::Capacity,
            1,
            vec![2],
            vec![AllocationOrder::new("A", [(0, 2)], 1), AllocationOrder::new("B", [(0, 2)], 5)],
        );
        let a = solve_capacity(&p).unwrap();
        assert_eq!((a.total("A"), a.total("B")), (0, 2));
    }
}
