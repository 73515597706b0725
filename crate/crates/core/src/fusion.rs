//! Generalized covariance intersection on matched label spaces and its
//! pairwise iteration over a sensor network.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use log::{debug, warn};

use crate::density::{BernoulliTrack, Hypothesis, LmbDensity, MdGlmbDensity};
use crate::error::{Error, Result};
use crate::gaussian::{gm_power, gm_reduce, ReductionParams};
use crate::label::Label;
use crate::log_sum_exp;
use crate::matching::{LabelMatcher, Matching};

/// Positive per-density exponents summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights(Vec<f64>);

impl FusionWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
            return Err(Error::domain("fusion weights must lie in (0, 1]"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("fusion weights sum to {sum}")));
        }
        Ok(Self(weights))
    }

    /// `(ω, 1 − ω)`.
    pub fn pair(first: f64) -> Result<Self> {
        if !(first > 0.0 && first < 1.0) {
            return Err(Error::domain(format!("pair weight {first} outside (0, 1)")));
        }
        Self::new(vec![first, 1.0 - first])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    fn as_pair(&self) -> Result<(f64, f64)> {
        match self.0.as_slice() {
            &[a, b] => Ok((a, b)),
            _ => Err(Error::domain("pairwise fusion needs exactly two weights")),
        }
    }
}

/// GCI of two labeled Bernoulli tracks with exponents `(omega1, omega2)`:
///
/// `p ∝ p₁^ω₁ p₂^ω₂` with normalizer `η`, and
/// `r = r₁^ω₁ r₂^ω₂ η / ((1−r₁)^ω₁ (1−r₂)^ω₂ + r₁^ω₁ r₂^ω₂ η)`.
///
/// The output keeps `t1`'s label; labels must already agree.
pub fn fuse_bernoulli_pair(
    t1: &BernoulliTrack,
    t2: &BernoulliTrack,
    omega1: f64,
    omega2: f64,
    reduction: &ReductionParams,
) -> Result<BernoulliTrack> {
    if t1.label != t2.label {
        return Err(Error::LabelMismatch(t1.label, t2.label));
    }
    if !(omega1 > 0.0 && omega2 > 0.0) || ((omega1 + omega2) - 1.0).abs() > 1e-12 {
        return Err(Error::domain("pair weights must be positive and sum to 1"));
    }
    let (r1, r2) = (t1.existence, t2.existence);
    let absent = omega1 * (1.0 - r1).ln() + omega2 * (1.0 - r2).ln();

    if r1 == 0.0 || r2 == 0.0 {
        let density = if t1.density.is_empty() {
            t2.density.clone()
        } else {
            t1.density.clone()
        };
        return Ok(BernoulliTrack {
            label: t1.label,
            existence: 0.0,
            density,
        });
    }
    let product = gm_power(&t1.density, omega1)?.product(&gm_power(&t2.density, omega2)?)?;
    let present = omega1 * r1.ln() + omega2 * r2.ln() + product.log_mass;
    // η that underflows in linear scale counts as zero
    if product.mass() == 0.0 && absent == f64::NEG_INFINITY {
        return Err(Error::DisjointSupports(t1.label));
    }
    let norm = log_sum_exp(&[absent, present]);
    let existence = (present - norm).exp().clamp(0.0, 1.0);
    let density = if product.log_mass.is_finite() {
        gm_reduce(&product.into_normalized()?, reduction)?
    } else {
        t1.density.clone()
    };
    Ok(BernoulliTrack {
        label: t1.label,
        existence,
        density,
    })
}

/// GCI of two LMB densities over a matching: every matched pair is fused under
/// its space-1 name and leftovers on either side are dropped. A pair of certain
/// tracks with disjoint supports has no fused density and is dropped as well.
pub fn fuse_lmb(
    d1: &LmbDensity,
    d2: &LmbDensity,
    matching: &Matching,
    weights: &FusionWeights,
    reduction: &ReductionParams,
) -> Result<LmbDensity> {
    let (w1, w2) = weights.as_pair()?;
    let mut tracks = Vec::with_capacity(matching.pairs.len());
    for &(l1, l2) in &matching.pairs {
        let t1 = d1.get(l1).ok_or(Error::UnknownLabel(l1))?;
        let mut t2 = d2.get(l2).ok_or(Error::UnknownLabel(l2))?.clone();
        t2.label = l1;
        match fuse_bernoulli_pair(t1, &t2, w1, w2, reduction) {
            Ok(t) => tracks.push(t),
            Err(Error::DisjointSupports(l)) => debug!("dropped pair {l} with disjoint supports"),
            Err(e) => return Err(e),
        }
    }
    LmbDensity::new(tracks)
}

/// GCI of two Mδ-GLMB densities sharing one label space:
///
/// `w(I) ∝ w₁(I)^ω₁ w₂(I)^ω₂ η(I)` with `η(I) = Π_{ℓ∈I} ∫ p₁^ω₁ p₂^ω₂`, and per-label
/// fused densities `p₁^ω₁ p₂^ω₂ / η`. Hypotheses absent from either side vanish.
pub fn fuse_mdglmb(
    d1: &MdGlmbDensity,
    d2: &MdGlmbDensity,
    weights: &FusionWeights,
    reduction: &ReductionParams,
) -> Result<MdGlmbDensity> {
    let (w1, w2) = weights.as_pair()?;
    if d1.label_space != d2.label_space {
        let l1 = d1.label_space.iter().find(|l| !d2.label_space.contains(l));
        let l2 = d2.label_space.iter().find(|l| !d1.label_space.contains(l));
        return Err(match (l1, l2) {
            (Some(&a), Some(&b)) => Error::LabelMismatch(a, b),
            (Some(&a), None) | (None, Some(&a)) => Error::UnknownLabel(a),
            (None, None) => Error::domain("label spaces differ"),
        });
    }

    let mut fused: Vec<(f64, Hypothesis)> = Vec::new();
    for h1 in &d1.hypotheses {
        let Some(h2) = d2.hypotheses.iter().find(|h| h.labels == h1.labels) else {
            continue;
        };
        if h1.weight == 0.0 || h2.weight == 0.0 {
            continue;
        }
        let mut log_eta = 0.0;
        let mut densities = Vec::with_capacity(h1.labels.len());
        for (p1, p2) in h1.densities.iter().zip(&h2.densities) {
            let product = gm_power(p1, w1)?.product(&gm_power(p2, w2)?)?;
            log_eta += product.log_mass;
            if product.log_mass.is_finite() {
                densities.push(gm_reduce(&product.into_normalized()?, reduction)?);
            } else {
                densities.push(p1.clone());
            }
        }
        let log_w = w1 * h1.weight.ln() + w2 * h2.weight.ln() + log_eta;
        fused.push((
            log_w,
            Hypothesis {
                labels: h1.labels.clone(),
                weight: 0.0,
                densities,
            },
        ));
    }
    let log_ws: Vec<f64> = fused.iter().map(|(lw, _)| *lw).collect();
    let norm = log_sum_exp(&log_ws);
    if !norm.is_finite() {
        return Err(Error::DegenerateFusion);
    }
    let hypotheses = fused
        .into_iter()
        .filter_map(|(lw, mut h)| {
            h.weight = (lw - norm).exp();
            (h.weight > 0.0).then_some(h)
        })
        .collect();
    MdGlmbDensity::new(d1.label_space.clone(), hypotheses)
}

/// Undirected sensor network over node ids.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    adjacency: BTreeMap<usize, BTreeSet<usize>>,
}

impl NetworkTopology {
    pub fn new(nodes: impl IntoIterator<Item = usize>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency: BTreeMap<usize, BTreeSet<usize>> =
            nodes.into_iter().map(|n| (n, BTreeSet::new())).collect();
        for &(a, b) in edges {
            if a == b {
                return Err(Error::domain(format!("self-loop on node {a}")));
            }
            if !adjacency.contains_key(&a) || !adjacency.contains_key(&b) {
                return Err(Error::domain(format!(
                    "edge ({a}, {b}) references an unknown node"
                )));
            }
            adjacency.get_mut(&a).expect("checked").insert(b);
            adjacency.get_mut(&b).expect("checked").insert(a);
        }
        let topo = Self { adjacency };
        if !topo.is_connected() {
            warn!("sensor network is not connected");
        }
        Ok(topo)
    }

    /// `n` nodes in a line.
    pub fn line(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::new(0..n, &edges).expect("valid line")
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::new(0..n, &edges).expect("valid complete graph")
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Neighbours in ascending id order.
    pub fn neighbors(&self, node: usize) -> Option<impl Iterator<Item = usize> + '_> {
        self.adjacency.get(&node).map(|s| s.iter().copied())
    }

    pub fn degree(&self, node: usize) -> Option<usize> {
        self.adjacency.get(&node).map(BTreeSet::len)
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.adjacency.keys().next() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for &m in &self.adjacency[&n] {
                if seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        seen.len() == self.adjacency.len()
    }
}

/// Metropolis weights of one node over itself and its neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeWeights {
    pub node: usize,
    pub self_weight: f64,
    /// Ascending neighbour id order.
    pub neighbors: Vec<(usize, f64)>,
}

impl NodeWeights {
    pub fn weight_of(&self, node: usize) -> Option<f64> {
        if node == self.node {
            return Some(self.self_weight);
        }
        self.neighbors
            .iter()
            .find(|(n, _)| *n == node)
            .map(|(_, w)| *w)
    }

    /// Self first, then neighbours.
    pub fn to_fusion_weights(&self) -> Result<FusionWeights> {
        let mut w = vec![self.self_weight];
        w.extend(self.neighbors.iter().map(|(_, w)| *w));
        FusionWeights::new(w)
    }
}

/// `ω_j = 1 / (1 + max(deg(node), deg(j)))` per neighbour, remainder on self.
pub fn metropolis_weights(topology: &NetworkTopology, node: usize) -> Result<NodeWeights> {
    let degree = topology
        .degree(node)
        .ok_or_else(|| Error::domain(format!("unknown node {node}")))?;
    if degree == 0 {
        warn!("node {node} has no neighbours; its fusion is the identity");
    }
    let neighbors: Vec<(usize, f64)> = topology
        .neighbors(node)
        .expect("node exists")
        .map(|j| {
            let dj = topology.degree(j).expect("neighbour exists");
            (j, 1.0 / (1.0 + degree.max(dj) as f64))
        })
        .collect();
    let self_weight = 1.0 - neighbors.iter().map(|(_, w)| w).sum::<f64>();
    Ok(NodeWeights {
        node,
        self_weight,
        neighbors,
    })
}

/// Sequential pairwise GCI at every node.
///
/// Node `i` starts from its own posterior and, for each neighbour in ascending
/// id order, matches label spaces with `matcher` and fuses with the pair
/// weights `(w_self, w_s) / (w_self + w_s)`. `posteriors[i]` belongs to node `i`.
pub fn fuse_network<M: LabelMatcher>(
    posteriors: &[LmbDensity],
    topology: &NetworkTopology,
    matcher: &M,
    reduction: &ReductionParams,
) -> Result<Vec<LmbDensity>> {
    if posteriors.is_empty() {
        return Err(Error::domain("fusion needs at least one node"));
    }
    if topology.nodes().ne(0..posteriors.len()) {
        return Err(Error::Dimension(
            "topology nodes must be 0..number of posteriors".into(),
        ));
    }
    (0..posteriors.len())
        .map(|node| {
            let weights = metropolis_weights(topology, node)?;
            let mut fused = posteriors[node].clone();
            for &(s, w_s) in &weights.neighbors {
                let matching = matcher.match_spaces(&fused, &posteriors[s])?;
                let pair = FusionWeights::pair(weights.self_weight / (weights.self_weight + w_s))?;
                fused = fuse_lmb(&fused, &posteriors[s], &matching, &pair, reduction)?;
            }
            Ok(fused)
        })
        .collect()
}

/// Re-attaches a node's own unmatched tracks to its fused posterior, for use as
/// the next local prior.
pub fn with_local_leftovers(fused: &LmbDensity, local: &LmbDensity) -> LmbDensity {
    let mut tracks = fused.tracks.clone();
    let present: BTreeSet<Label> = tracks.iter().map(|t| t.label).collect();
    tracks.extend(
        local
            .tracks
            .iter()
            .filter(|t| !present.contains(&t.label))
            .cloned(),
    );
    LmbDensity { tracks }
}
