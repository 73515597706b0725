//! Shortest-augmenting-path Hungarian solver for rectangular problems
//! (rows <= cols, every row assigned). Forbidden entries carry an infinite cost.

use std::ops::{Add, Sub};

/// Cost type the solver works over. Comparison must be a total order on the
/// values that occur (no NaN).
pub trait AssignCost: Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> {
    const ZERO: Self;
    const INFINITY: Self;
    fn is_finite(self) -> bool;
}

impl AssignCost for f64 {
    const ZERO: Self = 0.0;
    const INFINITY: Self = f64::INFINITY;
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

/// Lexicographic cost: `secondary` only decides exact ties of `primary`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TieCost {
    pub primary: f64,
    pub secondary: f64,
}

impl TieCost {
    pub const fn new(primary: f64, secondary: f64) -> Self {
        Self { primary, secondary }
    }
}

impl Add for TieCost {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.primary + rhs.primary, self.secondary + rhs.secondary)
    }
}

impl Sub for TieCost {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.primary - rhs.primary, self.secondary - rhs.secondary)
    }
}

impl AssignCost for TieCost {
    const ZERO: Self = TieCost::new(0.0, 0.0);
    const INFINITY: Self = TieCost::new(f64::INFINITY, 0.0);
    fn is_finite(self) -> bool {
        self.primary.is_finite()
    }
}

/// Dense row-major cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<C> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C>,
}

impl<C: AssignCost> Matrix<C> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C) {
        self.data[r * self.cols + c] = v;
    }

    /// Sum of the entries picked by `row_to_col`.
    pub fn assignment_cost(&self, row_to_col: &[usize]) -> C {
        row_to_col
            .iter()
            .enumerate()
            .fold(C::ZERO, |acc, (r, &c)| acc + self.get(r, c))
    }
}

/// Minimum-cost assignment of every row to a distinct column.
///
/// Returns `None` when no assignment with finite cost exists.
pub fn solve<C: AssignCost>(m: &Matrix<C>) -> Option<(Vec<usize>, C)> {
    let (n, cols) = (m.rows, m.cols);
    if n == 0 {
        return Some((Vec::new(), C::ZERO));
    }
    if n > cols {
        return None;
    }
    // 1-based potentials; index 0 is the virtual column used to start each augmentation.
    let mut u = vec![C::ZERO; n + 1];
    let mut v = vec![C::ZERO; cols + 1];
    let mut col_owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut min_slack = vec![C::INFINITY; cols + 1];
    let mut used = vec![false; cols + 1];

    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0usize;
        min_slack.iter_mut().for_each(|s| *s = C::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = C::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let entry = m.get(i0 - 1, j - 1);
                if entry.is_finite() {
                    let cur = entry - u[i0] - v[j];
                    if cur < min_slack[j] {
                        min_slack[j] = cur;
                        way[j] = j0;
                    }
                }
                if min_slack[j].is_finite() && (!delta.is_finite() || min_slack[j] < delta) {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return None;
            }
            for j in 0..=cols {
                if used[j] {
                    u[col_owner[j]] = u[col_owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else if min_slack[j].is_finite() {
                    min_slack[j] = min_slack[j] - delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=cols {
        if col_owner[j] != 0 {
            row_to_col[col_owner[j] - 1] = j - 1;
        }
    }
    let cost = m.assignment_cost(&row_to_col);
    Some((row_to_col, cost))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(m: &Matrix<f64>) -> Option<f64> {
        fn rec(m: &Matrix<f64>, r: usize, used: &mut Vec<bool>, acc: f64, best: &mut Option<f64>) {
            if r == m.rows {
                if acc.is_finite() && best.is_none_or(|b| acc < b) {
                    *best = Some(acc);
                }
                return;
            }
            for c in 0..m.cols {
                if !used[c] {
                    used[c] = true;
                    rec(m, r + 1, used, acc + m.get(r, c), best);
                    used[c] = false;
                }
            }
        }
        let mut best = None;
        rec(m, 0, &mut vec![false; m.cols], 0.0, &mut best);
        best
    }

    #[test]
    fn square_example() {
        let m = Matrix {
            rows: 2,
            cols: 2,
            data: vec![1.0, 2.0, 3.0, 1.0],
        };
        let (a, c) = solve(&m).unwrap();
        assert_eq!(a, vec![0, 1]);
        assert_eq!(c, 2.0);
    }

    #[test]
    fn rectangular_with_forbidden() {
        let inf = f64::INFINITY;
        let m = Matrix {
            rows: 2,
            cols: 3,
            data: vec![inf, 5.0, 1.0, inf, 2.0, inf],
        };
        let (a, c) = solve(&m).unwrap();
        assert_eq!(a, vec![2, 1]);
        assert_eq!(c, 3.0);
    }

    #[test]
    fn infeasible() {
        let inf = f64::INFINITY;
        let m = Matrix {
            rows: 2,
            cols: 2,
            data: vec![1.0, inf, 2.0, inf],
        };
        assert!(solve(&m).is_none());
        let tall = Matrix {
            rows: 2,
            cols: 1,
            data: vec![1.0, 1.0],
        };
        assert!(solve(&tall).is_none());
    }

    #[test]
    fn tie_cost_prefers_smaller_secondary() {
        let m = Matrix {
            rows: 1,
            cols: 2,
            data: vec![TieCost::new(5.0, 1.0), TieCost::new(5.0, 0.0)],
        };
        assert_eq!(solve(&m).unwrap().0, vec![1]);
    }

    #[test]
    fn matches_brute_force_on_pseudo_random_matrices() {
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for trial in 0..300 {
            let rows = 1 + trial % 5;
            let cols = rows + trial % 3;
            let data = (0..rows * cols)
                .map(|_| {
                    if next() < 0.15 {
                        f64::INFINITY
                    } else {
                        (next() * 20.0).floor()
                    }
                })
                .collect();
            let m = Matrix { rows, cols, data };
            match (solve(&m), brute(&m)) {
                (Some((_, c)), Some(b)) => assert_eq!(c, b),
                (None, None) => {}
                other => panic!("mismatch {other:?}"),
            }
        }
    }
}
