//! Label-space matching between two labeled multi-object densities.
//!
//! Each label's set marginal is a labeled Bernoulli; pairs of marginals are
//! scored with the Rényi divergence and the cheapest fusion map (with a
//! non-assignment cost per unpaired label) defines the consensual label space.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::assignment::{murty_kbest, CostMatrix};
use crate::density::{BernoulliTrack, LmbDensity, MdGlmbDensity};
use crate::error::{Error, Result};
use crate::gaussian::{gm_power, gm_reduce, GaussianMixture, ReductionParams};
use crate::label::Label;
use crate::log_sum_exp;

/// Densities whose single-label set marginals can be computed.
pub trait SetMarginal {
    fn label_space(&self) -> Vec<Label>;

    /// Labeled Bernoulli marginal of `label`.
    fn set_marginal(&self, label: Label, reduction: &ReductionParams) -> Result<BernoulliTrack>;
}

impl SetMarginal for LmbDensity {
    fn label_space(&self) -> Vec<Label> {
        self.labels()
    }

    /// The subset sum telescopes to the track itself.
    fn set_marginal(&self, label: Label, _reduction: &ReductionParams) -> Result<BernoulliTrack> {
        self.get(label).cloned().ok_or(Error::UnknownLabel(label))
    }
}

impl SetMarginal for MdGlmbDensity {
    fn label_space(&self) -> Vec<Label> {
        self.label_space.clone()
    }

    /// `r = Σ_{I∋ℓ} w(I)` and `p = Σ_{I∋ℓ} w(I) p^(I)(·,ℓ) / r`, reduced.
    fn set_marginal(&self, label: Label, reduction: &ReductionParams) -> Result<BernoulliTrack> {
        if self.label_space.binary_search(&label).is_err() {
            return Err(Error::UnknownLabel(label));
        }
        let mut existence = 0.0;
        let mut components = Vec::new();
        for h in &self.hypotheses {
            if let Some(p) = h.density_of(label) {
                if h.weight > 0.0 {
                    existence += h.weight;
                    components.extend(p.clone().scaled(h.weight).components);
                }
            }
        }
        if existence == 0.0 {
            return Ok(BernoulliTrack::nonexistent(label));
        }
        let density = gm_reduce(&GaussianMixture::new(components).normalized()?, reduction)?;
        Ok(BernoulliTrack {
            label,
            existence: existence.min(1.0),
            density,
        })
    }
}

/// Rényi divergence of order `alpha` between two labeled Bernoulli densities:
///
/// `C = −(1/β) log(q₁^α q₂^β + r₁^α r₂^β K)`, `β = 1 − α`, `q = 1 − r`,
///
/// where `K = ∫ p₁^α p₂^β` is evaluated with the per-component GM power.
/// Returns `+inf` when both terms vanish.
pub fn renyi_cost(t1: &BernoulliTrack, t2: &BernoulliTrack, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("Rényi order {alpha} outside (0, 1)")));
    }
    for t in [t1, t2] {
        if !(0.0..=1.0).contains(&t.existence) {
            return Err(Error::domain(format!(
                "existence {} outside [0, 1]",
                t.existence
            )));
        }
    }
    let beta = 1.0 - alpha;
    let (r1, r2) = (t1.existence, t2.existence);
    let absent = alpha * (1.0 - r1).ln() + beta * (1.0 - r2).ln();
    let present = if r1 > 0.0 && r2 > 0.0 {
        let k = gm_power(&t1.density, alpha)?.product(&gm_power(&t2.density, beta)?)?;
        if k.mass() == 0.0 {
            f64::NEG_INFINITY
        } else {
            alpha * r1.ln() + beta * r2.ln() + k.log_mass
        }
    } else {
        f64::NEG_INFINITY
    };
    let log_affinity = log_sum_exp(&[absent, present]);
    if log_affinity == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    let cost = -log_affinity / beta;
    Ok(if cost < 0.0 && cost > -1e-9 {
        0.0
    } else {
        cost
    })
}

/// Solved correspondence between two label spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `(label in space 1, label in space 2)`, one-to-one.
    pub pairs: Vec<(Label, Label)>,
    pub leftovers1: Vec<Label>,
    pub leftovers2: Vec<Label>,
    /// Matched label of space 2 → its partner's name in space 1.
    pub relabel: BTreeMap<Label, Label>,
    pub pair_costs: Vec<f64>,
    pub total_cost: f64,
    pub non_assignment_cost: f64,
}

impl Matching {
    fn from_pairs(
        pairs: Vec<(Label, Label)>,
        pair_costs: Vec<f64>,
        labels1: &[Label],
        labels2: &[Label],
        total_cost: f64,
        non_assignment_cost: f64,
    ) -> Self {
        let leftovers1 = labels1
            .iter()
            .filter(|l| !pairs.iter().any(|p| p.0 == **l))
            .copied()
            .collect();
        let leftovers2 = labels2
            .iter()
            .filter(|l| !pairs.iter().any(|p| p.1 == **l))
            .copied()
            .collect();
        let relabel = pairs.iter().map(|&(a, b)| (b, a)).collect();
        Self {
            pairs,
            leftovers1,
            leftovers2,
            relabel,
            pair_costs,
            total_cost,
            non_assignment_cost,
        }
    }

    /// Label spaces match when nothing is left over and every pair is within
    /// the non-assignment cost.
    pub fn spaces_match(&self) -> bool {
        self.leftovers1.is_empty()
            && self.leftovers2.is_empty()
            && self
                .pair_costs
                .iter()
                .all(|&c| c <= self.non_assignment_cost)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchParams {
    pub alpha: f64,
    /// Non-assignment cost Γ_m; pairs costing at least this are never matched.
    pub non_assignment_cost: f64,
    pub reduction: ReductionParams,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            non_assignment_cost: 2.0,
            reduction: ReductionParams::default(),
        }
    }
}

/// Rényi cost between every label of `d1` and every label of `d2`.
pub fn cost_matrix<D1: SetMarginal, D2: SetMarginal>(
    d1: &D1,
    d2: &D2,
    params: &MatchParams,
) -> Result<CostMatrix> {
    let rows = d1.label_space();
    let cols = d2.label_space();
    let m1 = rows
        .iter()
        .map(|&l| d1.set_marginal(l, &params.reduction))
        .collect::<Result<Vec<_>>>()?;
    let m2 = cols
        .iter()
        .map(|&l| d2.set_marginal(l, &params.reduction))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = DMatrix::zeros(rows.len(), cols.len());
    for (i, a) in m1.iter().enumerate() {
        for (j, b) in m2.iter().enumerate() {
            entries[(i, j)] = renyi_cost(a, b, params.alpha)?;
        }
    }
    CostMatrix::new(rows, cols, entries, params.non_assignment_cost)
}

/// Optimal fusion map between the label spaces of `d1` and `d2`.
///
/// Pairs costing `Γ_m` or more are excluded, so a pairing at exactly the
/// threshold loses to leaving both labels out.
pub fn match_label_spaces<D1: SetMarginal, D2: SetMarginal>(
    d1: &D1,
    d2: &D2,
    params: &MatchParams,
) -> Result<Matching> {
    if !(params.non_assignment_cost > 0.0) {
        return Err(Error::domain("non-assignment cost must be > 0"));
    }
    let raw = cost_matrix(d1, d2, params)?;
    let gamma = params.non_assignment_cost;
    let mut gated = raw.clone();
    gated.entries.iter_mut().for_each(|c| {
        if *c >= gamma {
            *c = f64::INFINITY;
        }
    });
    let best = murty_kbest(&gated, 1)?
        .into_iter()
        .next()
        .expect("dummy assignment is always feasible");
    let (pairs, costs): (Vec<_>, Vec<_>) = best
        .pairs()
        .map(|(r, c)| ((raw.rows[r], raw.cols[c]), raw.entries[(r, c)]))
        .unzip();
    Ok(Matching::from_pairs(
        pairs, costs, &raw.rows, &raw.cols, best.cost, gamma,
    ))
}

/// Strategy that pairs the labels of two LMB posteriors before fusion.
pub trait LabelMatcher {
    fn match_spaces(&self, d1: &LmbDensity, d2: &LmbDensity) -> Result<Matching>;
}

/// Divergence-based matching.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RenyiMatcher(pub MatchParams);

impl LabelMatcher for RenyiMatcher {
    fn match_spaces(&self, d1: &LmbDensity, d2: &LmbDensity) -> Result<Matching> {
        match_label_spaces(d1, d2, &self.0)
    }
}

/// Pairs equal label names and leaves everything else out: the fusion one gets
/// when the sensors are assumed to share a label space.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LabelIdentityMatcher;

impl LabelMatcher for LabelIdentityMatcher {
    fn match_spaces(&self, d1: &LmbDensity, d2: &LmbDensity) -> Result<Matching> {
        let labels1 = d1.labels();
        let labels2 = d2.labels();
        let pairs: Vec<(Label, Label)> = labels1
            .iter()
            .filter(|l| labels2.contains(l))
            .map(|&l| (l, l))
            .collect();
        let costs = vec![0.0; pairs.len()];
        Ok(Matching::from_pairs(
            pairs,
            costs,
            &labels1,
            &labels2,
            0.0,
            f64::INFINITY,
        ))
    }
}
