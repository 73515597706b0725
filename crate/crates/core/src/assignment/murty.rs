//! Murty's ranked assignment: the k lowest-cost complete row assignments of a
//! rectangular problem, enumerated by partitioning the solution space.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::hungarian::{self, AssignCost, Matrix};

struct Node<C> {
    cost: C,
    seq: usize,
    assignment: Vec<usize>,
    matrix: Matrix<C>,
    /// Rows `< fixed` are pinned to their current column.
    fixed: usize,
}

impl<C: AssignCost> PartialEq for Node<C> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<C: AssignCost> Eq for Node<C> {}

impl<C: AssignCost> PartialOrd for Node<C> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<C: AssignCost> Ord for Node<C> {
    // Reversed: BinaryHeap is a max-heap and we pop the cheapest node first,
    // earliest-created among equals.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Up to `k` distinct assignments in nondecreasing cost. Costs are summed from
/// the input matrix. An infeasible problem yields an empty list.
pub fn kbest<C: AssignCost>(matrix: &Matrix<C>, k: usize) -> Vec<(Vec<usize>, C)> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let Some((assignment, cost)) = hungarian::solve(matrix) else {
        return out;
    };
    let mut seq = 0usize;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        cost,
        seq,
        assignment,
        matrix: matrix.clone(),
        fixed: 0,
    });

    while let Some(node) = heap.pop() {
        out.push((
            node.assignment.clone(),
            matrix.assignment_cost(&node.assignment),
        ));
        if out.len() == k {
            break;
        }
        let rows = node.matrix.rows;
        let mut sub = node.matrix;
        for row in node.fixed..rows {
            // Child `row`: rows before it keep the parent's columns, `row` avoids its column.
            let mut child = sub.clone();
            child.set(row, node.assignment[row], C::INFINITY);
            if let Some((assignment, cost)) = hungarian::solve(&child) {
                seq += 1;
                heap.push(Node {
                    cost,
                    seq,
                    assignment,
                    matrix: child,
                    fixed: row,
                });
            }
            pin(&mut sub, row, node.assignment[row]);
        }
    }
    out
}

fn pin<C: AssignCost>(m: &mut Matrix<C>, row: usize, col: usize) {
    for c in 0..m.cols {
        if c != col {
            m.set(row, c, C::INFINITY);
        }
    }
    for r in 0..m.rows {
        if r != row {
            m.set(r, col, C::INFINITY);
        }
    }
}
