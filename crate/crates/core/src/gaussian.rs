//! Gaussian components and mixtures over a kinematic state of any dimension.
//!
//! Mixture masses and product weights are accumulated in the log domain so that
//! the overlap of well-separated components stays representable.

use std::f64::consts::PI;

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::log_sum_exp;

const SYMMETRY_TOL: f64 = 1e-9;
const NORMALIZED_TOL: f64 = 1e-9;

/// Cholesky factor of a symmetric positive-definite matrix with cached log-determinant.
#[derive(Debug, Clone)]
pub(crate) struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl SpdFactor {
    pub(crate) fn new(matrix: &DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::numeric("covariance is not positive definite"))?;
        let log_det = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|d| d.ln())
                .sum::<f64>();
        if !log_det.is_finite() {
            return Err(Error::numeric("covariance determinant is not finite"));
        }
        Ok(Self { chol, log_det })
    }

    pub(crate) fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Squared Mahalanobis norm `vᵀ M⁻¹ v`.
    pub(crate) fn mahalanobis_sq(&self, v: &DVector<f64>) -> f64 {
        let y = self
            .chol
            .l_dirty()
            .solve_lower_triangular(v)
            .expect("cholesky factor has a non-zero diagonal");
        y.norm_squared()
    }

    pub(crate) fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// `log N(v; 0, M)`.
    pub(crate) fn log_normal(&self, v: &DVector<f64>) -> f64 {
        let d = v.len() as f64;
        -0.5 * (d * (2.0 * PI).ln() + self.log_det + self.mahalanobis_sq(v))
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// `log N(x; mean, cov)`.
pub fn log_gaussian_pdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    Ok(SpdFactor::new(cov)?.log_normal(&(x - mean)))
}

/// Log of `ρ(P, ω) = ∫ N(x; m, P)^ω dx = sqrt(det(2πP/ω) · det(2πP)^(-ω))`.
pub fn log_rho(log_det_cov: f64, dim: usize, omega: f64) -> f64 {
    let d = dim as f64;
    let log_det_2pi = d * (2.0 * PI).ln() + log_det_cov;
    0.5 * ((1.0 - omega) * log_det_2pi - d * omega.ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianComponent {
    /// Builds a component after checking weight, shape, symmetry and positive definiteness.
    pub fn new(weight: f64, mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let c = Self {
            weight,
            mean,
            covariance,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight >= 0.0) || !self.weight.is_finite() {
            return Err(Error::domain(format!(
                "component weight {} is not a finite non-negative number",
                self.weight
            )));
        }
        let d = self.mean.len();
        if self.covariance.nrows() != d || self.covariance.ncols() != d {
            return Err(Error::Dimension(format!(
                "mean has dimension {d} but covariance is {}x{}",
                self.covariance.nrows(),
                self.covariance.ncols()
            )));
        }
        if self.mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("mean has non-finite entries"));
        }
        let scale = self.covariance.amax().max(f64::MIN_POSITIVE);
        let asym = (&self.covariance - self.covariance.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::numeric("covariance is not symmetric"));
        }
        SpdFactor::new(&self.covariance)?;
        Ok(())
    }

    pub fn log_pdf(&self, x: &DVector<f64>) -> Result<f64> {
        log_gaussian_pdf(x, &self.mean, &self.covariance)
    }
}

/// Weighted sum of Gaussian components.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaussianMixture {
    pub components: Vec<GaussianComponent>,
}

impl GaussianMixture {
    pub fn new(components: Vec<GaussianComponent>) -> Self {
        Self { components }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Unit-weight single Gaussian.
    pub fn single(mean: DVector<f64>, covariance: DMatrix<f64>) -> Self {
        Self::new(vec![GaussianComponent {
            weight: 1.0,
            mean,
            covariance,
        }])
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.components.first().map(GaussianComponent::dim)
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn is_normalized(&self) -> bool {
        !self.is_empty() && (self.total_weight() - 1.0).abs() <= NORMALIZED_TOL
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        for c in &self.components {
            c.validate()?;
            if Some(c.dim()) != dim {
                return Err(Error::Dimension(
                    "mixture components differ in dimension".into(),
                ));
            }
        }
        Ok(())
    }

    /// Rescales the weights to sum to one.
    pub fn normalized(mut self) -> Result<Self> {
        let total = self.total_weight();
        if self.is_empty() {
            return Err(Error::EmptyDensity);
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::numeric(format!(
                "cannot normalize mixture with total weight {total}"
            )));
        }
        for c in &mut self.components {
            c.weight /= total;
        }
        Ok(self)
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for c in &mut self.components {
            c.weight *= factor;
        }
        self
    }

    /// Pointwise density value.
    pub fn pdf(&self, x: &DVector<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for c in &self.components {
            if c.weight > 0.0 {
                acc += c.weight * c.log_pdf(x)?.exp();
            }
        }
        Ok(acc)
    }

    /// Mixture mean, treating the weights as normalized.
    pub fn mean(&self) -> Result<DVector<f64>> {
        let dim = self.dim().ok_or(Error::EmptyDensity)?;
        let total = self.total_weight();
        let mut m = DVector::zeros(dim);
        for c in &self.components {
            m += &c.mean * (c.weight / total);
        }
        Ok(m)
    }

    /// Mixture covariance (spread of means included), treating the weights as normalized.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let mean = self.mean()?;
        let dim = mean.len();
        let total = self.total_weight();
        let mut p = DMatrix::zeros(dim, dim);
        for c in &self.components {
            let d = &c.mean - &mean;
            p += (&c.covariance + &d * d.transpose()) * (c.weight / total);
        }
        Ok(p)
    }

    /// Component with the largest weight; ties resolve to the earliest.
    pub fn dominant(&self) -> Option<&GaussianComponent> {
        self.components
            .iter()
            .reduce(|best, c| if c.weight > best.weight { c } else { best })
    }
}

/// A mixture together with its log-domain component weights and total mass.
///
/// `mixture.components[i].weight == exp(log_weights[i])`, which may underflow to
/// zero; `log_weights` and `log_mass` stay exact.
#[derive(Debug, Clone)]
pub struct ScaledMixture {
    pub mixture: GaussianMixture,
    pub log_weights: Vec<f64>,
    pub log_mass: f64,
}

impl ScaledMixture {
    pub fn from_mixture(mixture: GaussianMixture) -> Self {
        let log_weights: Vec<f64> = mixture.components.iter().map(|c| c.weight.ln()).collect();
        let log_mass = log_sum_exp(&log_weights);
        Self {
            mixture,
            log_weights,
            log_mass,
        }
    }

    fn from_parts(components: Vec<(f64, DVector<f64>, DMatrix<f64>)>) -> Self {
        let log_weights: Vec<f64> = components.iter().map(|(lw, _, _)| *lw).collect();
        let log_mass = log_sum_exp(&log_weights);
        let mixture = GaussianMixture::new(
            components
                .into_iter()
                .map(|(lw, mean, covariance)| GaussianComponent {
                    weight: lw.exp(),
                    mean,
                    covariance,
                })
                .collect(),
        );
        Self {
            mixture,
            log_weights,
            log_mass,
        }
    }

    pub fn mass(&self) -> f64 {
        self.log_mass.exp()
    }

    /// Normalizes using the log weights, so tiny masses do not lose precision.
    pub fn into_normalized(self) -> Result<GaussianMixture> {
        if self.mixture.is_empty() {
            return Err(Error::EmptyDensity);
        }
        if !self.log_mass.is_finite() {
            return Err(Error::numeric("cannot normalize a mixture of zero mass"));
        }
        let log_mass = self.log_mass;
        let components = self
            .mixture
            .components
            .into_iter()
            .zip(self.log_weights)
            .map(|(mut c, lw)| {
                c.weight = (lw - log_mass).exp();
                c
            })
            .collect();
        Ok(GaussianMixture::new(components))
    }

    /// Exact product of two mixtures: every component pair contributes
    /// `w₁w₂·N(m₁−m₂; 0, P₁+P₂)` with the Gaussian-product mean and covariance.
    pub fn product(&self, other: &ScaledMixture) -> Result<ScaledMixture> {
        if self.mixture.is_empty() || other.mixture.is_empty() {
            return Err(Error::EmptyDensity);
        }
        if self.mixture.dim() != other.mixture.dim() {
            return Err(Error::Dimension(
                "mixture product of different dimensions".into(),
            ));
        }
        let mut parts = Vec::with_capacity(self.mixture.len() * other.mixture.len());
        for (a, &lwa) in self.mixture.components.iter().zip(&self.log_weights) {
            for (b, &lwb) in other.mixture.components.iter().zip(&other.log_weights) {
                let sum_cov = &a.covariance + &b.covariance;
                let factor = SpdFactor::new(&sum_cov)?;
                let diff = &b.mean - &a.mean;
                let log_w = lwa + lwb + factor.log_normal(&diff);
                // gain = P₁ (P₁+P₂)⁻¹
                let gain = factor.solve(&a.covariance).transpose();
                let mean = &a.mean + &gain * &diff;
                let mut cov = &a.covariance - &gain * &a.covariance;
                symmetrize(&mut cov);
                parts.push((log_w, mean, cov));
            }
        }
        Ok(ScaledMixture::from_parts(parts))
    }
}

/// Per-component power of a mixture: `(w, m, P) ↦ (w^ω ρ(P,ω), m, P/ω)`.
///
/// Exact for a single component; for several components the power of the sum is
/// approximated by the sum of the powers.
pub fn gm_power(gm: &GaussianMixture, omega: f64) -> Result<ScaledMixture> {
    if gm.is_empty() {
        return Err(Error::EmptyDensity);
    }
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::domain(format!("exponent {omega} outside (0, 1]")));
    }
    let mut parts = Vec::with_capacity(gm.len());
    for c in &gm.components {
        let factor = SpdFactor::new(&c.covariance)?;
        let log_w = omega * c.weight.ln() + log_rho(factor.log_det(), c.dim(), omega);
        parts.push((log_w, c.mean.clone(), &c.covariance / omega));
    }
    Ok(ScaledMixture::from_parts(parts))
}

/// Exact product mixture of `a` and `b` and its mass `∫ a·b`.
pub fn gm_pairwise_product_mass(a: &GaussianMixture, b: &GaussianMixture) -> Result<ScaledMixture> {
    ScaledMixture::from_mixture(a.clone()).product(&ScaledMixture::from_mixture(b.clone()))
}

/// Pruning, merging and capping thresholds for mixture reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionParams {
    /// Components with weight below this are removed.
    pub prune_threshold: f64,
    /// Squared Mahalanobis distance under which components merge.
    pub merge_threshold: f64,
    pub max_components: usize,
}

impl Default for ReductionParams {
    fn default() -> Self {
        Self {
            prune_threshold: 1e-5,
            merge_threshold: 4.0,
            max_components: 10,
        }
    }
}

impl ReductionParams {
    /// Merge-only reduction: keeps every component's mass, so mixture moments are preserved.
    pub fn moment_preserving() -> Self {
        Self {
            prune_threshold: 0.0,
            merge_threshold: 4.0,
            max_components: usize::MAX,
        }
    }
}

/// Outcome of [`gm_reduce_with_status`].
#[derive(Debug, Clone)]
pub struct Reduced {
    pub mixture: GaussianMixture,
    /// Set when every component fell below the prune threshold and the largest
    /// original component was kept instead.
    pub all_pruned: bool,
}

/// Prune, merge and cap a mixture. Output weights are in descending order.
pub fn gm_reduce(gm: &GaussianMixture, params: &ReductionParams) -> Result<GaussianMixture> {
    let reduced = gm_reduce_with_status(gm, params)?;
    if reduced.all_pruned {
        warn!("every mixture component fell below the prune threshold; kept the largest one");
    }
    Ok(reduced.mixture)
}

pub fn gm_reduce_with_status(gm: &GaussianMixture, params: &ReductionParams) -> Result<Reduced> {
    if gm.is_empty() {
        return Err(Error::EmptyDensity);
    }
    if !(params.prune_threshold >= 0.0)
        || !(params.merge_threshold >= 0.0)
        || params.max_components == 0
    {
        return Err(Error::domain(
            "reduction thresholds must be non-negative and max_components >= 1",
        ));
    }
    let total_in = gm.total_weight();
    let was_normalized = gm.is_normalized();

    let mut remaining: Vec<&GaussianComponent> = gm
        .components
        .iter()
        .filter(|c| c.weight >= params.prune_threshold && c.weight > 0.0)
        .collect();
    if remaining.is_empty() {
        let mut best = gm.dominant().expect("non-empty mixture").clone();
        if was_normalized {
            best.weight = 1.0;
        }
        return Ok(Reduced {
            mixture: GaussianMixture::new(vec![best]),
            all_pruned: true,
        });
    }

    let mut merged: Vec<GaussianComponent> = Vec::new();
    while !remaining.is_empty() {
        let lead_idx = remaining
            .iter()
            .enumerate()
            .reduce(|best, cur| {
                if cur.1.weight > best.1.weight {
                    cur
                } else {
                    best
                }
            })
            .map(|(i, _)| i)
            .expect("non-empty");
        let lead = remaining[lead_idx];
        let factor = SpdFactor::new(&lead.covariance)?;
        let (cluster, rest): (Vec<&GaussianComponent>, Vec<&GaussianComponent>) =
            remaining.into_iter().partition(|c| {
                factor.mahalanobis_sq(&(&c.mean - &lead.mean)) <= params.merge_threshold
            });
        remaining = rest;

        if cluster.len() == 1 {
            merged.push(cluster[0].clone());
            continue;
        }
        let weight: f64 = cluster.iter().map(|c| c.weight).sum();
        let dim = lead.dim();
        let mut mean = DVector::zeros(dim);
        for c in &cluster {
            mean += &c.mean * (c.weight / weight);
        }
        let mut cov = DMatrix::zeros(dim, dim);
        for c in &cluster {
            let d = &c.mean - &mean;
            cov += (&c.covariance + &d * d.transpose()) * (c.weight / weight);
        }
        symmetrize(&mut cov);
        merged.push(GaussianComponent {
            weight,
            mean,
            covariance: cov,
        });
    }

    // Stable sort keeps merge order among equal weights.
    merged.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    merged.truncate(params.max_components);

    let total_out: f64 = merged.iter().map(|c| c.weight).sum();
    if was_normalized && total_out > 0.0 && total_out != total_in {
        for c in &mut merged {
            c.weight /= total_out;
        }
    }
    Ok(Reduced {
        mixture: GaussianMixture::new(merged),
        all_pruned: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn g1(w: f64, m: f64, v: f64) -> GaussianComponent {
        GaussianComponent::new(w, dvector![m], dmatrix![v]).unwrap()
    }

    #[test]
    fn power_identity_exponent() {
        let gm = GaussianMixture::new(vec![g1(1.0, 0.0, 1.0)]);
        let p = gm_power(&gm, 1.0).unwrap();
        assert!((p.mass() - 1.0).abs() < 1e-12);
        assert_eq!(p.mixture.components[0].mean, gm.components[0].mean);
        assert_eq!(
            p.mixture.components[0].covariance,
            gm.components[0].covariance
        );
    }

    #[test]
    fn power_half_unit_gaussian() {
        // ρ(1, 0.5) = sqrt(4π · (2π)^(-1/2))
        let expected = (4.0 * PI * (2.0 * PI).powf(-0.5)).sqrt();
        let gm = GaussianMixture::new(vec![g1(1.0, 0.0, 1.0)]);
        let p = gm_power(&gm, 0.5).unwrap();
        assert!((p.mass() - expected).abs() < 1e-12);
        assert!((expected - 2.2390).abs() < 1e-4);
        assert!((p.mixture.components[0].covariance[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn power_rejects_bad_inputs() {
        let gm = GaussianMixture::new(vec![g1(1.0, 0.0, 1.0)]);
        assert!(matches!(gm_power(&gm, 0.0), Err(Error::Domain(_))));
        assert!(matches!(gm_power(&gm, 1.5), Err(Error::Domain(_))));
        assert_eq!(
            gm_power(&GaussianMixture::empty(), 0.5).unwrap_err(),
            Error::EmptyDensity
        );
        let bad = GaussianMixture::new(vec![GaussianComponent {
            weight: 1.0,
            mean: dvector![0.0],
            covariance: dmatrix![-1.0],
        }]);
        assert!(matches!(gm_power(&bad, 0.5), Err(Error::Numeric(_))));
    }

    #[test]
    fn product_of_unit_gaussians() {
        let a = GaussianMixture::new(vec![g1(1.0, 0.0, 1.0)]);
        let p = gm_pairwise_product_mass(&a, &a).unwrap();
        // N(0; 0, 2)
        assert!((p.mass() - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-12);
        assert!((p.mass() - 0.28209).abs() < 1e-5);
        assert!((p.mixture.components[0].covariance[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn product_far_apart_stays_in_log_domain() {
        let a = GaussianMixture::new(vec![g1(1.0, 0.0, 1.0)]);
        let b = GaussianMixture::new(vec![g1(1.0, 1e6, 1.0)]);
        let p = gm_pairwise_product_mass(&a, &b).unwrap();
        assert!(p.mass() < 1e-300);
        assert!(p.log_mass.is_finite());
        let normalized = p.into_normalized().unwrap();
        assert!((normalized.total_weight() - 1.0).abs() < 1e-12);
        assert!((normalized.components[0].mean[0] - 5e5).abs() < 1e-6);
    }

    #[test]
    fn product_rejects_empty() {
        let a = GaussianMixture::new(vec![g1(1.0, 0.0, 1.0)]);
        assert_eq!(
            gm_pairwise_product_mass(&a, &GaussianMixture::empty()).unwrap_err(),
            Error::EmptyDensity
        );
    }

    #[test]
    fn reduce_single_component_unchanged() {
        let gm = GaussianMixture::new(vec![g1(1.0, 0.0, 1.0)]);
        let r = gm_reduce(&gm, &ReductionParams::default()).unwrap();
        assert_eq!(r, gm);
    }

    #[test]
    fn reduce_merges_duplicates() {
        let gm = GaussianMixture::new(vec![g1(0.5, 1.0, 2.0), g1(0.5, 1.0, 2.0)]);
        let r = gm_reduce(&gm, &ReductionParams::default()).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r.components[0].weight - 1.0).abs() < 1e-15);
        assert!((r.components[0].mean[0] - 1.0).abs() < 1e-15);
        assert!((r.components[0].covariance[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn reduce_caps_and_renormalizes() {
        let comps: Vec<_> = (0..11)
            .map(|i| g1(1.0 / 11.0 + i as f64 * 1e-4, 100.0 * i as f64, 1.0))
            .collect();
        let total: f64 = comps.iter().map(|c| c.weight).sum();
        let gm = GaussianMixture::new(comps).scaled(1.0 / total);
        let r = gm_reduce(&gm, &ReductionParams::default()).unwrap();
        assert_eq!(r.len(), 10);
        assert!((r.total_weight() - 1.0).abs() < 1e-12);
        assert!(r.components.windows(2).all(|w| w[0].weight >= w[1].weight));
        // the lightest (first) component is the one dropped
        assert!(r.components.iter().all(|c| c.mean[0] != 0.0));
    }

    #[test]
    fn reduce_all_pruned_keeps_largest() {
        let gm = GaussianMixture::new(vec![g1(1e-7, 0.0, 1.0), g1(2e-7, 50.0, 1.0)]);
        let r = gm_reduce_with_status(&gm, &ReductionParams::default()).unwrap();
        assert!(r.all_pruned);
        assert_eq!(r.mixture.len(), 1);
        assert_eq!(r.mixture.components[0].mean[0], 50.0);
    }

    #[test]
    fn reduce_merge_preserves_weight_and_moments() {
        let gm = GaussianMixture::new(vec![
            g1(0.3, 0.0, 1.0),
            g1(0.2, 0.5, 1.5),
            g1(0.1, 40.0, 1.0),
        ]);
        let r = gm_reduce(&gm, &ReductionParams::moment_preserving()).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r.total_weight() - gm.total_weight()).abs() < 1e-12);
        assert!((r.mean().unwrap()[0] - gm.mean().unwrap()[0]).abs() < 1e-12);
        assert!((r.covariance().unwrap()[(0, 0)] - gm.covariance().unwrap()[(0, 0)]).abs() < 1e-10);
    }

    #[test]
    fn component_validation() {
        assert!(GaussianComponent::new(-1.0, dvector![0.0], dmatrix![1.0]).is_err());
        assert!(
            GaussianComponent::new(1.0, dvector![0.0, 0.0], dmatrix![1.0, 0.5; 0.4, 1.0]).is_err()
        );
        assert!(
            GaussianComponent::new(1.0, dvector![0.0, 0.0], dmatrix![1.0, 2.0; 2.0, 1.0]).is_err()
        );
        assert!(GaussianComponent::new(1.0, dvector![0.0], dmatrix![1.0, 0.0; 0.0, 1.0]).is_err());
    }
}
