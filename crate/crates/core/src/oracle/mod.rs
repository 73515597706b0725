//! Brute-force reference implementations.
//!
//! Everything here deliberately avoids the production code paths it checks:
//! marginals by literal subset enumeration, assignments by exhaustive search,
//! GCI normalizers by numerical quadrature of pointwise density powers.

mod quadrature;

pub use quadrature::{integrate_1d, integrate_2d};

use nalgebra::DVector;

use crate::assignment::CostMatrix;
use crate::density::{BernoulliTrack, MdGlmbDensity};
use crate::error::{Error, Result};
use crate::gaussian::{GaussianComponent, GaussianMixture};
use crate::label::Label;

const MAX_ENUMERATED_LABELS: usize = 12;
const MAX_ASSIGNMENT_DIM: usize = 7;

/// Set marginal of `label` by summing `w(I)` over every subset `I` of the label
/// space that contains it. No mixture reduction is applied.
pub fn brute_marginal(d: &MdGlmbDensity, label: Label) -> Result<BernoulliTrack> {
    let space = &d.label_space;
    if space.len() > MAX_ENUMERATED_LABELS {
        return Err(Error::EnumerationBound(format!(
            "{} labels (max {MAX_ENUMERATED_LABELS})",
            space.len()
        )));
    }
    let Some(pos) = space.iter().position(|&l| l == label) else {
        return Err(Error::UnknownLabel(label));
    };
    let mut existence = 0.0;
    let mut parts: Vec<(f64, GaussianMixture)> = Vec::new();
    for mask in 0u32..(1u32 << space.len()) {
        if mask & (1 << pos) == 0 {
            continue;
        }
        let subset: Vec<Label> = (0..space.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| space[i])
            .collect();
        let Some(h) = d.hypotheses.iter().find(|h| h.labels == subset) else {
            continue;
        };
        existence += h.weight;
        let density = h
            .density_of(label)
            .expect("hypothesis carries every one of its labels");
        parts.push((h.weight, density.clone()));
    }
    if existence == 0.0 {
        return Ok(BernoulliTrack::nonexistent(label));
    }
    let components = parts
        .into_iter()
        .flat_map(|(w, p)| {
            p.components.into_iter().map(move |c| GaussianComponent {
                weight: c.weight * w / existence,
                ..c
            })
        })
        .collect();
    Ok(BernoulliTrack {
        label,
        existence,
        density: GaussianMixture::new(components),
    })
}

/// Cardinality distribution of independent Bernoullis by subset enumeration.
pub fn brute_cardinality_pmf(existences: &[f64]) -> Vec<f64> {
    let n = existences.len();
    let mut pmf = vec![0.0; n + 1];
    for mask in 0u32..(1u32 << n) {
        let mut p = 1.0;
        for (i, r) in existences.iter().enumerate() {
            p *= if mask & (1 << i) != 0 { *r } else { 1.0 - r };
        }
        pmf[mask.count_ones() as usize] += p;
    }
    pmf
}

fn pointwise_power_product(
    p1: &GaussianMixture,
    p2: &GaussianMixture,
    w1: f64,
    w2: f64,
    x: &DVector<f64>,
) -> f64 {
    let a = p1.pdf(x).expect("valid density");
    let b = p2.pdf(x).expect("valid density");
    a.powf(w1) * b.powf(w2)
}

fn support_box(p1: &GaussianMixture, p2: &GaussianMixture, axis: usize) -> (f64, f64, Vec<f64>) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut breaks = Vec::new();
    for c in p1.components.iter().chain(&p2.components) {
        let m = c.mean[axis];
        let sd = c.covariance[(axis, axis)].sqrt();
        lo = lo.min(m - 10.0 * sd);
        hi = hi.max(m + 10.0 * sd);
        breaks.extend((-10..=10).map(|k| m + k as f64 * sd));
    }
    (lo, hi, breaks)
}

/// `∫ p₁(x)^ω₁ p₂(x)^ω₂ dx` by adaptive quadrature over every mean ± 10σ.
/// Supports 1-D and 2-D densities only.
pub fn quad_eta(
    p1: &GaussianMixture,
    p2: &GaussianMixture,
    omega1: f64,
    omega2: f64,
) -> Result<f64> {
    let dim = p1.dim().ok_or(Error::EmptyDensity)?;
    if p2.dim() != Some(dim) {
        return Err(Error::Dimension("densities differ in dimension".into()));
    }
    match dim {
        1 => {
            let (lo, hi, breaks) = support_box(p1, p2, 0);
            Ok(integrate_1d(
                |x| pointwise_power_product(p1, p2, omega1, omega2, &DVector::from_element(1, x)),
                lo,
                hi,
                &breaks,
                1e-11,
            ))
        }
        2 => {
            let (xlo, xhi, xbreaks) = support_box(p1, p2, 0);
            let (ylo, yhi, ybreaks) = support_box(p1, p2, 1);
            Ok(integrate_2d(
                |x, y| {
                    pointwise_power_product(p1, p2, omega1, omega2, &DVector::from_vec(vec![x, y]))
                },
                (xlo, xhi, &xbreaks),
                (ylo, yhi, &ybreaks),
                1e-10,
            ))
        }
        _ => Err(Error::OracleDimension),
    }
}

/// Exhaustive minimum over every injective partial map rows → cols, each
/// unpaired label costing the non-assignment cost. Ties keep the map with
/// fewer pairs.
pub fn brute_assignment(c: &CostMatrix) -> Result<(Vec<Option<usize>>, f64)> {
    let ranked = brute_ranked_assignments(c)?;
    Ok(ranked
        .into_iter()
        .next()
        .expect("the empty map always exists"))
}

/// Every fusion map with its cost, sorted by (cost, number of pairs).
pub fn brute_ranked_assignments(c: &CostMatrix) -> Result<Vec<(Vec<Option<usize>>, f64)>> {
    let (n1, n2) = (c.n_rows(), c.n_cols());
    if n1 > MAX_ASSIGNMENT_DIM || n2 > MAX_ASSIGNMENT_DIM {
        return Err(Error::EnumerationBound(format!(
            "{n1}x{n2} exceeds {MAX_ASSIGNMENT_DIM}x{MAX_ASSIGNMENT_DIM}"
        )));
    }
    fn rec(
        c: &CostMatrix,
        row: usize,
        used: &mut [bool],
        cur: &mut Vec<Option<usize>>,
        out: &mut Vec<(Vec<Option<usize>>, f64)>,
    ) {
        if row == c.n_rows() {
            let cost = c.cost_of(cur);
            let forbidden = cur
                .iter()
                .enumerate()
                .any(|(r, col)| col.is_some_and(|col| c.entries[(r, col)].is_infinite()));
            if !forbidden {
                out.push((cur.clone(), cost));
            }
            return;
        }
        cur.push(None);
        rec(c, row + 1, used, cur, out);
        cur.pop();
        for col in 0..c.n_cols() {
            if !used[col] {
                used[col] = true;
                cur.push(Some(col));
                rec(c, row + 1, used, cur, out);
                cur.pop();
                used[col] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(
        c,
        0,
        &mut vec![false; n2],
        &mut Vec::with_capacity(n1),
        &mut out,
    );
    let pairs = |m: &Vec<Option<usize>>| m.iter().flatten().count();
    out.sort_by(|a, b| a.1.total_cmp(&b.1).then(pairs(&a.0).cmp(&pairs(&b.0))));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{Hypothesis, LmbDensity};
    use nalgebra::{dmatrix, dvector};

    fn unit(mean: f64) -> GaussianMixture {
        GaussianMixture::single(dvector![mean], dmatrix![1.0])
    }

    #[test]
    fn marginal_of_lmb_as_hypotheses() {
        let (a, b) = (Label::new(0, 1), Label::new(0, 2));
        let lmb = LmbDensity::new(vec![
            BernoulliTrack::new(a, 0.9, unit(0.0)).unwrap(),
            BernoulliTrack::new(b, 0.5, unit(5.0)).unwrap(),
        ])
        .unwrap();
        let md = MdGlmbDensity::from_lmb(&lmb).unwrap();
        assert!((brute_marginal(&md, a).unwrap().existence - 0.9).abs() < 1e-15);
    }

    #[test]
    fn marginal_edge_cases() {
        let l = Label::new(0, 1);
        let certain =
            MdGlmbDensity::new(vec![l], vec![Hypothesis::new(vec![(l, unit(2.0))], 1.0)]).unwrap();
        let m = brute_marginal(&certain, l).unwrap();
        assert_eq!(m.existence, 1.0);
        assert_eq!(m.density, unit(2.0));
        let none = MdGlmbDensity::new(vec![l], vec![Hypothesis::new(vec![], 1.0)]).unwrap();
        assert!(brute_marginal(&none, l).unwrap().is_nonexistent());
        let big = MdGlmbDensity::new(
            (1..=13).map(|i| Label::new(0, i)).collect(),
            vec![Hypothesis::new(vec![], 1.0)],
        )
        .unwrap();
        assert!(matches!(
            brute_marginal(&big, l),
            Err(Error::EnumerationBound(_))
        ));
    }

    #[test]
    fn eta_of_identical_densities_is_one() {
        let p = GaussianMixture::new(vec![
            GaussianComponent::new(0.3, dvector![-2.0], dmatrix![0.5]).unwrap(),
            GaussianComponent::new(0.7, dvector![4.0], dmatrix![2.0]).unwrap(),
        ]);
        assert!((quad_eta(&p, &p, 0.3, 0.7).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn eta_bhattacharyya() {
        let eta = quad_eta(&unit(0.0), &unit(2.0), 0.5, 0.5).unwrap();
        assert!((eta - (-0.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn eta_of_far_apart_narrow_gaussians_vanishes() {
        let a = GaussianMixture::single(dvector![0.0], dmatrix![1e-4]);
        let b = GaussianMixture::single(dvector![1.0], dmatrix![1e-4]);
        assert!(quad_eta(&a, &b, 0.5, 0.5).unwrap() < 1e-12);
    }

    #[test]
    fn eta_rejects_high_dimension() {
        let p = GaussianMixture::single(DVector::zeros(3), nalgebra::DMatrix::identity(3, 3));
        assert_eq!(
            quad_eta(&p, &p, 0.5, 0.5).unwrap_err(),
            Error::OracleDimension
        );
    }

    #[test]
    fn assignment_examples() {
        let c = CostMatrix::from_entries(dmatrix![1.0, 2.0; 3.0, 1.0], f64::INFINITY).unwrap();
        assert_eq!(brute_assignment(&c).unwrap(), (vec![Some(0), Some(1)], 2.0));
        let c = CostMatrix::from_entries(dmatrix![3.0], 4.0).unwrap();
        assert_eq!(brute_assignment(&c).unwrap(), (vec![Some(0)], 3.0));
        let c = CostMatrix::from_entries(dmatrix![9.0], 4.0).unwrap();
        assert_eq!(brute_assignment(&c).unwrap(), (vec![None], 8.0));
        let c = CostMatrix::from_entries(nalgebra::DMatrix::zeros(8, 1), 1.0).unwrap();
        assert!(brute_assignment(&c).is_err());
    }

    #[test]
    fn cardinality_pmf_enumeration() {
        let pmf = brute_cardinality_pmf(&[0.9, 0.9]);
        assert!((pmf[2] - 0.81).abs() < 1e-15);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
