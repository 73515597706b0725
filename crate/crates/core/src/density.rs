//! Labeled multi-object densities: independent Bernoulli tracks (LMB) and the
//! explicit hypothesis table of a marginalized δ-GLMB (Mδ-GLMB) density.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::gaussian::GaussianMixture;
use crate::label::Label;

const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Labeled Bernoulli component: existence probability and spatial density.
///
/// A track with `existence == 0` may carry an empty density.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliTrack {
    pub label: Label,
    pub existence: f64,
    pub density: GaussianMixture,
}

impl BernoulliTrack {
    pub fn new(label: Label, existence: f64, density: GaussianMixture) -> Result<Self> {
        let t = Self {
            label,
            existence,
            density,
        };
        t.validate()?;
        Ok(t)
    }

    /// Nonexistent track with an empty density.
    pub fn nonexistent(label: Label) -> Self {
        Self {
            label,
            existence: 0.0,
            density: GaussianMixture::empty(),
        }
    }

    pub fn is_nonexistent(&self) -> bool {
        self.existence == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.existence) {
            return Err(Error::domain(format!(
                "existence {} of {} outside [0, 1]",
                self.existence, self.label
            )));
        }
        if self.density.is_empty() {
            if self.existence > 0.0 {
                return Err(Error::EmptyDensity);
            }
            return Ok(());
        }
        self.density.validate()?;
        if !self.density.is_normalized() {
            return Err(Error::domain(format!(
                "density of {} is not normalized",
                self.label
            )));
        }
        Ok(())
    }
}

/// Labeled multi-Bernoulli density.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LmbDensity {
    pub tracks: Vec<BernoulliTrack>,
}

impl LmbDensity {
    /// Checks label distinctness; per-track validity is the caller's concern
    /// (see [`LmbDensity::validate`]).
    pub fn new(tracks: Vec<BernoulliTrack>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for t in &tracks {
            if !seen.insert(t.label) {
                return Err(Error::DuplicateLabel(t.label));
            }
        }
        Ok(Self { tracks })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.tracks.iter().map(|t| t.label).collect()
    }

    pub fn get(&self, label: Label) -> Option<&BernoulliTrack> {
        self.tracks.iter().find(|t| t.label == label)
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.tracks.clone())?;
        self.tracks.iter().try_for_each(BernoulliTrack::validate)
    }

    /// Cardinality distribution of the product of independent Bernoullis.
    pub fn cardinality_pmf(&self) -> Vec<f64> {
        let mut pmf = vec![1.0];
        for t in &self.tracks {
            let r = t.existence;
            let mut next = vec![0.0; pmf.len() + 1];
            for (n, p) in pmf.iter().enumerate() {
                next[n] += p * (1.0 - r);
                next[n + 1] += p * r;
            }
            pmf = next;
        }
        pmf
    }

    /// Drops tracks whose existence is below `threshold`.
    pub fn pruned(mut self, threshold: f64) -> Self {
        self.tracks.retain(|t| t.existence >= threshold);
        self
    }
}

/// One row of an Mδ-GLMB hypothesis table: a label set, its weight, and one
/// normalized density per label (aligned with `labels`, which is sorted).
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub labels: Vec<Label>,
    pub weight: f64,
    pub densities: Vec<GaussianMixture>,
}

impl Hypothesis {
    pub fn new(pairs: Vec<(Label, GaussianMixture)>, weight: f64) -> Self {
        let mut pairs = pairs;
        pairs.sort_by_key(|(l, _)| *l);
        let (labels, densities) = pairs.into_iter().unzip();
        Self {
            labels,
            weight,
            densities,
        }
    }

    pub fn density_of(&self, label: Label) -> Option<&GaussianMixture> {
        self.labels
            .binary_search(&label)
            .ok()
            .map(|i| &self.densities[i])
    }

    pub fn contains(&self, label: Label) -> bool {
        self.labels.binary_search(&label).is_ok()
    }
}

/// Marginalized δ-GLMB density: hypothesis weights `w(I)` over label sets of
/// `label_space` and per-hypothesis conditional densities.
#[derive(Debug, Clone, PartialEq)]
pub struct MdGlmbDensity {
    pub label_space: Vec<Label>,
    pub hypotheses: Vec<Hypothesis>,
}

impl MdGlmbDensity {
    pub fn new(label_space: Vec<Label>, hypotheses: Vec<Hypothesis>) -> Result<Self> {
        let mut label_space = label_space;
        label_space.sort();
        if let Some(w) = label_space.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateLabel(w[0]));
        }
        let d = Self {
            label_space,
            hypotheses,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        let mut total = 0.0;
        for h in &self.hypotheses {
            if !(h.weight >= 0.0) {
                return Err(Error::domain("negative hypothesis weight"));
            }
            total += h.weight;
            if !seen.insert(h.labels.clone()) {
                return Err(Error::domain("repeated label set in hypothesis table"));
            }
            if h.labels.len() != h.densities.len() {
                return Err(Error::domain(
                    "hypothesis needs exactly one density per label",
                ));
            }
            if let Some(w) = h.labels.windows(2).find(|w| w[0] >= w[1]) {
                return Err(Error::DuplicateLabel(w[1]));
            }
            for (l, p) in h.labels.iter().zip(&h.densities) {
                if self.label_space.binary_search(l).is_err() {
                    return Err(Error::UnknownLabel(*l));
                }
                p.validate()?;
                if !p.is_normalized() {
                    return Err(Error::domain(format!("density of {l} is not normalized")));
                }
            }
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::domain(format!("hypothesis weights sum to {total}")));
        }
        Ok(())
    }

    /// Expands an LMB density into its `2^n` hypotheses. Limited to 20 tracks.
    pub fn from_lmb(lmb: &LmbDensity) -> Result<Self> {
        let n = lmb.len();
        if n > 20 {
            return Err(Error::EnumerationBound(format!("{n} tracks")));
        }
        let mut tracks = lmb.tracks.clone();
        tracks.sort_by_key(|t| t.label);
        let mut hypotheses = Vec::with_capacity(1 << n);
        for mask in 0u32..(1u32 << n) {
            let mut weight = 1.0;
            let mut pairs = Vec::new();
            for (i, t) in tracks.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    weight *= t.existence;
                    pairs.push((t.label, t.density.clone()));
                } else {
                    weight *= 1.0 - t.existence;
                }
            }
            if weight > 0.0 {
                hypotheses.push(Hypothesis::new(pairs, weight));
            }
        }
        Self::new(tracks.iter().map(|t| t.label).collect(), hypotheses)
    }

    pub fn weight_of(&self, labels: &[Label]) -> f64 {
        self.hypotheses
            .iter()
            .find(|h| h.labels == labels)
            .map_or(0.0, |h| h.weight)
    }

    pub fn cardinality_pmf(&self) -> Vec<f64> {
        let mut pmf = vec![0.0; self.label_space.len() + 1];
        for h in &self.hypotheses {
            pmf[h.labels.len()] += h.weight;
        }
        pmf
    }
}
