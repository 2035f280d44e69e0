use alloc::vec::Vec;

/// Flags points not dominated by any other, for `(speedup, error)` pairs
/// where higher speedup and lower error are better. A point is dominated
/// if another is at least as good on both axes and strictly better on one.
pub fn pareto_frontier(points: &[(f64, f64)]) -> Vec<bool> {
    points
        .iter()
        .map(|&(s, e)| !points.iter().any(|&(s2, e2)| s2 >= s && e2 <= e && (s2 > s || e2 < e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frontier_cases() {
        assert_eq!(pareto_frontier(&[(1.0, 1.0)]), [true]);
        assert_eq!(pareto_frontier(&[(2.0, 0.5), (1.0, 1.0)]), [true, false]);
        // (1.5,3) and (2.5,4) dominated by (2,2) and (3,3) respectively
        let pts = [(1.0, 1.0), (2.0, 2.0), (1.5, 3.0), (3.0, 3.0)];
        assert_eq!(pareto_frontier(&pts), [true, true, false, true]);
        // identical points do not dominate each other
        assert_eq!(pareto_frontier(&[(1.0, 1.0), (1.0, 1.0)]), [true, true]);
    }
}
