//! Kuhn-Munkres on a square cost matrix.
//!
//! The rectangular `K x N` maximisation is turned into an `N x N`
//! minimisation: real rows cost `max - w`, the `N - K` padding rows cost
//! zero. After solving, the dual potentials identify the "tight" cells
//! (zero reduced cost). Every optimal assignment uses only tight cells, so
//! the lexicographically smallest optimum and the per-user sets of optimal
//! channels can both be read off the tight subgraph with alternating-path
//! searches instead of re-solving.

use std::collections::VecDeque;

use super::{Assignment, WeightMatrix};
use crate::error::Result;
use crate::scalar::Weight;

struct Solved<T> {
    n: usize,
    cost: Vec<T>,
    row_pot: Vec<T>,
    col_pot: Vec<T>,
    match_row: Vec<usize>,
    match_col: Vec<usize>,
    tol: T,
}

impl<T: Weight> Solved<T> {
    fn tight(&self, i: usize, j: usize) -> bool {
        self.cost[i * self.n + j] - self.row_pot[i] - self.col_pot[j] <= self.tol
    }

    /// Alternating path from row `start` to column `target` over tight cells,
    /// never entering `banned_col` or a row flagged in `blocked`. On success
    /// returns the last row and the predecessor table.
    #[allow(clippy::needless_range_loop)]
    fn alternating_path(
        &self,
        start: usize,
        target: usize,
        banned_col: usize,
        blocked: &[bool],
    ) -> Option<(usize, Vec<usize>)> {
        let n = self.n;
        let mut parent = vec![usize::MAX; n];
        let mut seen_col = vec![false; n];
        seen_col[banned_col] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if seen_col[y] || !self.tight(x, y) {
                    continue;
                }
                if y == target {
                    return Some((x, parent));
                }
                let owner = self.match_col[y];
                if blocked[owner] {
                    continue;
                }
                seen_col[y] = true;
                parent[owner] = x;
                queue.push_back(owner);
            }
        }
        None
    }

    /// Shifts the matching along a path found by `alternating_path`: `end`
    /// takes `target`, and each row on the way takes its successor's column.
    fn augment(&mut self, start: usize, end: usize, target: usize, parent: &[usize]) {
        let mut x = end;
        let mut take = target;
        loop {
            let old = self.match_row[x];
            self.match_row[x] = take;
            self.match_col[take] = x;
            if x == start {
                break;
            }
            take = old;
            x = parent[x];
        }
    }

    /// Rewrites the matching into the lexicographically smallest optimum over
    /// the first `k` rows.
    fn lexicographic_min(&mut self, k: usize) {
        let mut fixed = vec![false; self.n];
        for i in 0..k {
            let cur = self.match_row[i];
            fixed[i] = true;
            for c in 0..cur {
                if !self.tight(i, c) {
                    continue;
                }
                let holder = self.match_col[c];
                if fixed[holder] {
                    continue;
                }
                if let Some((end, parent)) = self.alternating_path(holder, cur, c, &fixed) {
                    self.augment(holder, end, cur, &parent);
                    self.match_row[i] = c;
                    self.match_col[c] = i;
                    break;
                }
            }
        }
    }

    fn can_take(&self, i: usize, c: usize) -> bool {
        let cur = self.match_row[i];
        if c == cur {
            return true;
        }
        if !self.tight(i, c) {
            return false;
        }
        let mut blocked = vec![false; self.n];
        blocked[i] = true;
        self.alternating_path(self.match_col[c], cur, c, &blocked)
            .is_some()
    }
}

/// Shortest-augmenting-path Hungarian method (O(n^3)). Returns the matching
/// together with dual potentials satisfying `cost - u - v >= 0`.
fn solve_min<T: Weight>(cost: &[T], n: usize) -> (Vec<usize>, Vec<T>, Vec<T>) {
    // 1-based with a virtual column 0, as in the classical formulation.
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv: Vec<Option<T>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta: Option<T> = None;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + j - 1] - u[i0] - v[j];
                if minv[j].is_none_or(|m| cur < m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mj = minv[j].expect("set above");
                if delta.is_none_or(|d| mj < d) {
                    delta = Some(mj);
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains while a row is unmatched");
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else if let Some(m) = minv[j] {
                    minv[j] = Some(m - delta);
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut match_row = vec![0; n];
    for j in 1..=n {
        match_row[p[j] - 1] = j - 1;
    }
    (match_row, u[1..].to_vec(), v[1..].to_vec())
}

fn solve<T: Weight>(w: &WeightMatrix<T>) -> Result<Option<Solved<T>>> {
    w.check_shape()?;
    let (k, n) = (w.rows(), w.cols());
    if k == 0 {
        return Ok(None);
    }
    let w = w.with_sentinels_resolved();
    let top = w
        .values()
        .iter()
        .copied()
        .fold(w.get(0, 0), |m, v| if v > m { v } else { m });
    let mut cost = vec![T::zero(); n * n];
    for r in 0..k {
        for c in 0..n {
            cost[r * n + c] = top - w.get(r, c);
        }
    }
    let (match_row, row_pot, col_pot) = solve_min(&cost, n);
    let mut match_col = vec![0; n];
    for (r, &c) in match_row.iter().enumerate() {
        match_col[c] = r;
    }
    let tol = T::tie_tolerance(&w.max_abs());
    Ok(Some(Solved {
        n,
        cost,
        row_pot,
        col_pot,
        match_row,
        match_col,
        tol,
    }))
}

/// Maximum-weight injective assignment of the `K` rows to the `N` columns.
/// Unexplored (`+inf`) cells are preferred over every finite cell; ties go to
/// the lexicographically smallest `channel_of`.
pub fn hungarian_solve<T: Weight>(w: &WeightMatrix<T>) -> Result<Assignment<T>> {
    let Some(mut solved) = solve(w)? else {
        return Ok(Assignment {
            channel_of: Vec::new(),
            value: T::zero(),
        });
    };
    solved.lexicographic_min(w.rows());
    let channel_of = solved.match_row[..w.rows()].to_vec();
    let value = w.value_of(&channel_of);
    Ok(Assignment { channel_of, value })
}

/// For each user, the ascending list of channels it holds in at least one
/// value-optimal assignment.
pub fn optimal_channel_sets<T: Weight>(w: &WeightMatrix<T>) -> Result<Vec<Vec<usize>>> {
    let Some(solved) = solve(w)? else {
        return Ok(Vec::new());
    };
    Ok((0..w.rows())
        .map(|i| (0..w.cols()).filter(|&c| solved.can_take(i, c)).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{brute_force_assign, brute_force_optimal_channels};
    use crate::error::Error;
    use num_rational::Ratio;
    use proptest::prelude::*;

    type Q = Ratio<i64>;

    fn m(rows: Vec<Vec<f64>>) -> WeightMatrix<f64> {
        WeightMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn diagonal() {
        let a = hungarian_solve(&m(vec![vec![1.0, 0.0], vec![0.0, 1.0]])).unwrap();
        assert_eq!(a.channel_of, vec![0, 1]);
        assert_eq!(a.value, 2.0);
    }

    #[test]
    fn crossing_beats_greedy() {
        let a = hungarian_solve(&m(vec![vec![0.9, 0.8], vec![0.9, 0.1]])).unwrap();
        assert_eq!(a.channel_of, vec![1, 0]);
        assert!((a.value - 1.7).abs() < 1e-12);
    }

    #[test]
    fn scenario_two() {
        let s1 = vec![0.1, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
        let s3 = vec![0.1, 0.1, 0.2, 0.3, 0.4, 0.7, 0.9, 0.7, 0.7, 0.6];
        let w = m(vec![s1.clone(), s1, s3]);
        let a = hungarian_solve(&w).unwrap();
        assert_eq!(a.channel_of[2], 6);
        let mut top = a.channel_of[..2].to_vec();
        top.sort_unstable();
        assert_eq!(top, vec![8, 9]);
        assert!((a.value - 2.6).abs() < 1e-12);
        // lexicographic tie-break between the two optima (8,9,6) and (9,8,6)
        assert_eq!(a.channel_of, vec![8, 9, 6]);
        assert_eq!(
            optimal_channel_sets(&w).unwrap(),
            vec![vec![8, 9], vec![8, 9], vec![6]]
        );
    }

    #[test]
    fn more_users_than_channels() {
        let err = hungarian_solve(&m(vec![vec![1.0], vec![2.0]])).unwrap_err();
        assert!(matches!(err, Error::MoreUsersThanChannels { .. }));
        assert!(err.to_string().contains("more users than channels"));
    }

    #[test]
    fn sentinels_are_explored_first_lowest_index() {
        let inf = f64::INFINITY;
        let w = m(vec![vec![0.9, inf, 0.2, inf, inf]]);
        assert_eq!(hungarian_solve(&w).unwrap().channel_of, vec![1]);
        let all = m(vec![vec![inf; 4]; 3]);
        assert_eq!(hungarian_solve(&all).unwrap().channel_of, vec![0, 1, 2]);
        let mixed = m(vec![vec![0.5, 0.7, inf], vec![0.5, 0.7, 0.1]]);
        let a = hungarian_solve(&mixed).unwrap();
        assert_eq!(a.channel_of, vec![2, 1]);
        assert!(a.value.is_infinite());
    }

    #[test]
    fn empty_matrix() {
        let w: WeightMatrix<f64> = WeightMatrix::new(0, 3, vec![]).unwrap();
        let a = hungarian_solve(&w).unwrap();
        assert!(a.channel_of.is_empty());
    }

    #[test]
    fn negative_weights() {
        let a = hungarian_solve(&m(vec![vec![-1.0, -3.0, -2.0], vec![-2.0, -1.0, -5.0]])).unwrap();
        assert_eq!(a.channel_of, vec![0, 1]);
        assert_eq!(a.value, -2.0);
    }

    fn rational(k: usize, n: usize, cells: &[i64]) -> WeightMatrix<Q> {
        WeightMatrix::new(
            k,
            n,
            cells[..k * n].iter().map(|&v| Ratio::new(v, 7)).collect(),
        )
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn matches_brute_force_exactly(
            k in 1usize..=5,
            extra in 0usize..=3,
            cells in prop::collection::vec(-3i64..6, 40),
        ) {
            // small integer range forces many ties
            let n = k + extra;
            let w = rational(k, n, &cells);
            let h = hungarian_solve(&w).unwrap();
            let b = brute_force_assign(&w).unwrap();
            prop_assert_eq!(&h, &b);
            let mut sorted = h.channel_of.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), k);
            prop_assert_eq!(
                optimal_channel_sets(&w).unwrap(),
                brute_force_optimal_channels(&w).unwrap()
            );
        }

        #[test]
        fn uniform_shift_invariance(
            k in 1usize..=4,
            extra in 0usize..=3,
            cells in prop::collection::vec(0i64..20, 28),
            shift in -10i64..10,
        ) {
            let n = k + extra;
            let w = rational(k, n, &cells);
            let c = Ratio::new(shift, 3);
            let shifted = WeightMatrix::new(k, n, w.values().iter().map(|&v| v + c).collect()).unwrap();
            let a = hungarian_solve(&w).unwrap();
            let b = hungarian_solve(&shifted).unwrap();
            prop_assert_eq!(&a.channel_of, &b.channel_of);
            prop_assert_eq!(b.value, a.value + c * Ratio::from_integer(k as i64));
        }

        #[test]
        fn float_matches_brute_force(
            k in 1usize..=4,
            extra in 0usize..=2,
            cells in prop::collection::vec(0.0f64..1.0, 24),
        ) {
            let n = k + extra;
            let w = WeightMatrix::new(k, n, cells[..k * n].to_vec()).unwrap();
            prop_assert_eq!(hungarian_solve(&w).unwrap(), brute_force_assign(&w).unwrap());
        }

        #[test]
        fn larger_matrices_stay_injective(
            k in 1usize..=12,
            extra in 0usize..=6,
            cells in prop::collection::vec(0.0f64..1.0, 216),
        ) {
            let n = k + extra;
            let w = WeightMatrix::new(k, n, cells[..k * n].to_vec()).unwrap();
            let a = hungarian_solve(&w).unwrap();
            let mut s = a.channel_of.clone();
            s.sort_unstable();
            s.dedup();
            prop_assert_eq!(s.len(), k);
            prop_assert!(s.iter().all(|&c| c < n));
        }
    }
}
