//! Ranked assignment between two label spaces with a non-assignment cost.
//!
//! A fusion map pairs rows with columns injectively; every row or column left
//! unpaired costs `non_assignment_cost`. Between assignments of equal cost the
//! one with fewer pairs ranks first.

pub mod hungarian;
pub mod murty;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::label::Label;
use hungarian::{Matrix, TieCost};

/// Divergence costs between the labels of two spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub rows: Vec<Label>,
    pub cols: Vec<Label>,
    /// `entries[(i, j)]` is finite or `+inf` (pair forbidden).
    pub entries: DMatrix<f64>,
    pub non_assignment_cost: f64,
}

impl CostMatrix {
    pub fn new(
        rows: Vec<Label>,
        cols: Vec<Label>,
        entries: DMatrix<f64>,
        non_assignment_cost: f64,
    ) -> Result<Self> {
        let m = Self {
            rows,
            cols,
            entries,
            non_assignment_cost,
        };
        m.validate()?;
        Ok(m)
    }

    /// Matrix with placeholder labels `(0, 1..)` on both sides.
    pub fn from_entries(entries: DMatrix<f64>, non_assignment_cost: f64) -> Result<Self> {
        let rows = (1..=entries.nrows() as u32)
            .map(|i| Label::new(0, i))
            .collect();
        let cols = (1..=entries.ncols() as u32)
            .map(|i| Label::new(0, i))
            .collect();
        Self::new(rows, cols, entries, non_assignment_cost)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.nrows() != self.rows.len() || self.entries.ncols() != self.cols.len() {
            return Err(Error::Dimension(
                "cost entries do not match the label lists".into(),
            ));
        }
        if self
            .entries
            .iter()
            .any(|c| c.is_nan() || *c == f64::NEG_INFINITY)
        {
            return Err(Error::domain("cost entries must be finite or +inf"));
        }
        if !(self.non_assignment_cost >= 0.0) {
            return Err(Error::domain("non-assignment cost must be >= 0"));
        }
        Ok(())
    }

    /// Total cost of a fusion map: paired entries plus one non-assignment cost
    /// per unpaired row and per unpaired column. With an infinite
    /// non-assignment cost the surplus of the larger side is free and any other
    /// unpaired label makes the map infeasible.
    pub fn cost_of(&self, row_to_col: &[Option<usize>]) -> f64 {
        let matched = row_to_col.iter().flatten().count();
        let paired: f64 = row_to_col
            .iter()
            .enumerate()
            .filter_map(|(r, c)| c.map(|c| self.entries[(r, c)]))
            .sum();
        if self.non_assignment_cost.is_infinite() {
            return if matched == self.n_rows().min(self.n_cols()) {
                paired
            } else {
                f64::INFINITY
            };
        }
        let unpaired = (self.n_rows() - matched) + (self.n_cols() - matched);
        paired + self.non_assignment_cost * unpaired as f64
    }
}

/// One ranked solution: `row_to_col[i]` is the column paired with row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionMap {
    pub row_to_col: Vec<Option<usize>>,
    pub cost: f64,
}

impl FusionMap {
    pub fn n_pairs(&self) -> usize {
        self.row_to_col.iter().flatten().count()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_to_col
            .iter()
            .enumerate()
            .filter_map(|(r, c)| c.map(|c| (r, c)))
    }
}

/// The `k` cheapest fusion maps, in nondecreasing cost (ties: fewer pairs first).
///
/// With a finite non-assignment cost the problem is posed as a rectangular
/// assignment `rows × (cols + rows)` where row `i` may take its private dummy
/// column; with an infinite one the smaller side must be fully paired.
pub fn murty_kbest(costs: &CostMatrix, k: usize) -> Result<Vec<FusionMap>> {
    if k == 0 {
        return Err(Error::domain("k must be >= 1"));
    }
    costs.validate()?;
    let (n1, n2) = (costs.n_rows(), costs.n_cols());
    let gamma = costs.non_assignment_cost;

    let maps: Vec<Vec<Option<usize>>> = if gamma.is_finite() {
        let matrix = Matrix::from_fn(n1, n2 + n1, |r, c| {
            if c < n2 {
                let e = costs.entries[(r, c)];
                // Pairing frees one column dummy, hence the `- gamma`.
                if e.is_finite() {
                    TieCost::new(e - gamma, 1.0)
                } else {
                    TieCost::new(f64::INFINITY, 0.0)
                }
            } else if c - n2 == r {
                TieCost::new(gamma, 0.0)
            } else {
                TieCost::new(f64::INFINITY, 0.0)
            }
        });
        murty::kbest(&matrix, k)
            .into_iter()
            .map(|(a, _)| a.into_iter().map(|c| (c < n2).then_some(c)).collect())
            .collect()
    } else if n1 <= n2 {
        let matrix = Matrix::from_fn(n1, n2, |r, c| TieCost::new(costs.entries[(r, c)], 0.0));
        murty::kbest(&matrix, k)
            .into_iter()
            .map(|(a, _)| a.into_iter().map(Some).collect())
            .collect()
    } else {
        let matrix = Matrix::from_fn(n2, n1, |c, r| TieCost::new(costs.entries[(r, c)], 0.0));
        murty::kbest(&matrix, k)
            .into_iter()
            .map(|(a, _)| {
                let mut row_to_col = vec![None; n1];
                for (c, r) in a.into_iter().enumerate() {
                    row_to_col[r] = Some(c);
                }
                row_to_col
            })
            .collect()
    };

    Ok(maps
        .into_iter()
        .map(|row_to_col| {
            let cost = costs.cost_of(&row_to_col);
            FusionMap { row_to_col, cost }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn infinite_gamma_two_by_two() {
        let c = CostMatrix::from_entries(dmatrix![1.0, 2.0; 3.0, 1.0], f64::INFINITY).unwrap();
        let ranked = murty_kbest(&c, 2).unwrap();
        assert_eq!(ranked.len(), 2);
        assert_eq!(ranked[0].row_to_col, vec![Some(0), Some(1)]);
        assert_eq!(ranked[0].cost, 2.0);
        assert_eq!(ranked[1].row_to_col, vec![Some(1), Some(0)]);
        assert_eq!(ranked[1].cost, 5.0);
    }

    #[test]
    fn single_entry_below_gamma() {
        let c = CostMatrix::from_entries(dmatrix![0.7], 5.0).unwrap();
        let ranked = murty_kbest(&c, 1).unwrap();
        assert_eq!(
            ranked,
            vec![FusionMap {
                row_to_col: vec![Some(0)],
                cost: 0.7
            }]
        );
    }

    #[test]
    fn tie_breaks_toward_non_assignment() {
        let c = CostMatrix::from_entries(dmatrix![10.0], 5.0).unwrap();
        let ranked = murty_kbest(&c, 2).unwrap();
        assert_eq!(
            ranked[0],
            FusionMap {
                row_to_col: vec![None],
                cost: 10.0
            }
        );
        assert_eq!(
            ranked[1],
            FusionMap {
                row_to_col: vec![Some(0)],
                cost: 10.0
            }
        );
    }

    #[test]
    fn empty_side() {
        let c = CostMatrix::from_entries(DMatrix::zeros(0, 3), 1.5).unwrap();
        let ranked = murty_kbest(&c, 4).unwrap();
        assert_eq!(
            ranked,
            vec![FusionMap {
                row_to_col: vec![],
                cost: 4.5
            }]
        );
    }

    #[test]
    fn rejects_zero_k_and_nan() {
        let c = CostMatrix::from_entries(dmatrix![1.0], 1.0).unwrap();
        assert!(matches!(murty_kbest(&c, 0), Err(Error::Domain(_))));
        assert!(CostMatrix::from_entries(dmatrix![f64::NAN], 1.0).is_err());
    }

    #[test]
    fn tall_matrix_with_infinite_gamma() {
        let c = CostMatrix::from_entries(dmatrix![5.0; 1.0; 3.0], f64::INFINITY).unwrap();
        let ranked = murty_kbest(&c, 3).unwrap();
        assert_eq!(ranked[0].row_to_col, vec![None, Some(0), None]);
        assert_eq!(ranked.len(), 3);
        let costs: Vec<f64> = ranked.iter().map(|m| m.cost).collect();
        assert_eq!(costs, vec![1.0, 3.0, 5.0]);
    }
}
