//! Optimal sub-pattern assignment (OSPA) distance between finite point sets.

use crate::assignment::hungarian::{self, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OspaParams {
    pub order: f64,
    pub cutoff: f64,
}

impl Default for OspaParams {
    fn default() -> Self {
        Self {
            order: 1.0,
            cutoff: 100.0,
        }
    }
}

impl OspaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.order >= 1.0 && self.order.is_finite()) {
            return Err(Error::domain("OSPA order must be finite and >= 1"));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::domain("OSPA cutoff must be finite and > 0"));
        }
        Ok(())
    }
}

fn euclid(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// OSPA distance of order `p` and cutoff `c` on planar positions.
///
/// Both sets empty gives 0; exactly one empty gives `c`.
pub fn ospa(x: &[[f64; 2]], y: &[[f64; 2]], params: &OspaParams) -> f64 {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let (m, n) = (small.len(), large.len());
    if n == 0 {
        return 0.0;
    }
    let (p, c) = (params.order, params.cutoff);
    let cp = c.powf(p);
    let localization = if m == 0 {
        0.0
    } else {
        let matrix = Matrix::from_fn(m, n, |i, j| euclid(&small[i], &large[j]).min(c).powf(p));
        hungarian::solve(&matrix)
            .expect("cut-off costs are finite")
            .1
    };
    ((localization + cp * (n - m) as f64) / n as f64).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sets() {
        let x = [[1.0, 2.0], [30.0, -4.0]];
        assert_eq!(ospa(&x, &x, &OspaParams::default()), 0.0);
        assert_eq!(ospa(&[], &[], &OspaParams::default()), 0.0);
    }

    #[test]
    fn pure_cardinality_error() {
        assert_eq!(ospa(&[], &[[3.0, 3.0]], &OspaParams::default()), 100.0);
    }

    #[test]
    fn single_pair_distance() {
        assert!((ospa(&[[0.0, 0.0]], &[[3.0, 4.0]], &OspaParams::default()) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_and_order() {
        let p = OspaParams {
            order: 2.0,
            cutoff: 10.0,
        };
        let d = ospa(&[[0.0, 0.0]], &[[300.0, 0.0], [0.0, 6.0]], &p);
        assert!((d - ((36.0 + 100.0) / 2.0f64).sqrt()).abs() < 1e-12);
        assert!(OspaParams {
            order: 0.5,
            cutoff: 1.0
        }
        .validate()
        .is_err());
    }
}
