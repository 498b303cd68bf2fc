use super::{ReductionPlan, ReductionProblem};
use crate::error::SolveError;

/// Minimizes `sum W_n r_n` subject to the cumulative reduction dominating
/// every supplier's cumulative request.
///
/// With strictly decreasing day weights the cheapest plan keeps the
/// cumulative reduction at the pointwise maximum of the requests: any slack
/// on day `n` can be moved to day `n + 1` at a lower weight.
pub fn solve_consolidation(problem: &ReductionProblem) -> Result<ReductionPlan, SolveError> {
    let weights = problem.weights()?;
    let requests = problem.cumulative_requests()?;
    let n = problem.horizon;
    let mut level = vec![0i64; n];
    for q in requests.values() {
        for (l, v) in level.iter_mut().zip(q) {
            *l = (*l).max(*v);
        }
    }
    let mut r = Vec::with_capacity(n);
    let mut prev = 0;
    for l in &level {
        r.push(l - prev);
        prev = *l;
    }
    let objective = r.iter().zip(&weights).map(|(r, w)| r * w).sum();
    Ok(ReductionPlan { r, objective })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covers_both_suppliers() {
        let p = ReductionProblem { day_weights: vec![2, 1], ..ReductionProblem::new(2) }
            .request("s1", [(0, 2)])
            .request("s2", [(1, 3)]);
        let plan = solve_consolidation(&p).unwrap();
        assert_eq!(plan.r, vec![2, 1]);
        assert_eq!(plan.objective, 5);
        plan.check(&p).unwrap();
    }

    #[test]
    fn no_request_no_reduction() {
        let p = ReductionProblem::new(3).request("s1", [(0, 0)]);
        let plan = solve_consolidation(&p).unwrap();
        assert_eq!(plan.r, vec![0, 0, 0]);
        assert_eq!(plan.objective, 0);
        let empty = solve_consolidation(&ReductionProblem::new(2)).unwrap();
        assert_eq!(empty.r, vec![0, 0]);
    }

    #[test]
    fn duplicate_supplier_changes_nothing() {
        let one = ReductionProblem::new(3).request("a", [(0, 1), (2, 2)]);
        let two = one.clone().request("b", [(0, 1), (2, 2)]);
        assert_eq!(solve_consolidation(&one).unwrap(), solve_consolidation(&two).unwrap());
    }

    #[test]
    fn reschedule_gives_back_later() {
        // A supplier cuts 4 on day 0 and returns 4 on day 2.
        let p = ReductionProblem::new(3).request("a", [(0, 4), (2, -4)]);
        let plan = solve_consolidation(&p).unwrap();
        assert_eq!(plan.r, vec![4, 0, -4]);
        assert_eq!(plan.objective, 3 * 4 - 4);
    }

    #[test]
    fn rejects_bad_weights() {
        let p = ReductionProblem { day_weights: vec![1, 2], ..ReductionProblem::new(2) };
        assert!(solve_consolidation(&p).is_err());
    }
}
