//! Local labeled multi-Bernoulli filter run independently by every sensor.

mod birth;
mod update;

pub use birth::{adaptive_birth, prior_birth, AdaptiveBirthParams, PriorBirthParams};
pub use update::{lmb_update, UpdateOutcome, UpdateParams};

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::density::{BernoulliTrack, LmbDensity};
use crate::error::{Error, Result};
use crate::gaussian::{symmetrize, GaussianComponent, GaussianMixture};
use crate::label::Label;

/// Linear-Gaussian motion with survival.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    pub transition: DMatrix<f64>,
    pub process_noise: DMatrix<f64>,
    pub survival_prob: f64,
    /// Sampling period in seconds.
    pub period: f64,
}

impl MotionModel {
    /// Nearly-constant-velocity model on `[p_x, v_x, p_y, v_y]` with white-noise
    /// acceleration of standard deviation `sigma_v` (m/s²).
    pub fn constant_velocity(period: f64, sigma_v: f64, survival_prob: f64) -> Self {
        let dt = period;
        let mut transition = DMatrix::identity(4, 4);
        transition[(0, 1)] = dt;
        transition[(2, 3)] = dt;
        let block = [
            [dt.powi(4) / 4.0, dt.powi(3) / 2.0],
            [dt.powi(3) / 2.0, dt * dt],
        ];
        let mut process_noise = DMatrix::zeros(4, 4);
        for axis in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    process_noise[(2 * axis + i, 2 * axis + j)] = sigma_v * sigma_v * block[i][j];
                }
            }
        }
        Self {
            transition,
            process_noise,
            survival_prob,
            period,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.survival_prob > 0.0 && self.survival_prob <= 1.0) {
            return Err(Error::domain("survival probability must lie in (0, 1]"));
        }
        let n = self.transition.nrows();
        if self.transition.ncols() != n || self.process_noise.shape() != (n, n) {
            return Err(Error::Dimension(
                "transition and process noise must be square and equal-sized".into(),
            ));
        }
        if (&self.process_noise - self.process_noise.transpose()).amax()
            > 1e-9 * self.process_noise.amax().max(1.0)
        {
            return Err(Error::numeric("process noise is not symmetric"));
        }
        Ok(())
    }
}

/// Axis-aligned rectangle in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn square(half_width: f64) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            y_min: -half_width,
            y_max: half_width,
        }
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }
}

/// Linear-Gaussian sensor with detection probability and Poisson clutter.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub observation: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub detect_prob: f64,
    pub clutter_rate: f64,
    pub region: Region,
}

impl SensorModel {
    /// Position-only sensor on `[p_x, v_x, p_y, v_y]` with isotropic noise `sigma` (m).
    pub fn position(sigma: f64, detect_prob: f64, clutter_rate: f64, region: Region) -> Self {
        let mut observation = DMatrix::zeros(2, 4);
        observation[(0, 0)] = 1.0;
        observation[(1, 2)] = 1.0;
        Self {
            observation,
            noise: DMatrix::identity(2, 2) * (sigma * sigma),
            detect_prob,
            clutter_rate,
            region,
        }
    }

    /// Clutter intensity per unit area, `λ / area(region)`.
    pub fn clutter_density(&self) -> f64 {
        self.clutter_rate / self.region.area()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.detect_prob > 0.0 && self.detect_prob <= 1.0) {
            return Err(Error::domain("detection probability must lie in (0, 1]"));
        }
        if !(self.clutter_rate >= 0.0) {
            return Err(Error::domain("clutter rate must be >= 0"));
        }
        if !(self.region.area() > 0.0) {
            return Err(Error::domain("sensor region has no area"));
        }
        let m = self.observation.nrows();
        if self.noise.shape() != (m, m) {
            return Err(Error::Dimension(
                "noise covariance does not match observation rows".into(),
            ));
        }
        GaussianComponent::new(1.0, DVector::zeros(m), self.noise.clone()).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub z: DVector<f64>,
    pub scan: u32,
    pub sensor_id: usize,
}

/// Survival prediction of every track plus appended births.
pub fn lmb_predict(
    prior: &LmbDensity,
    motion: &MotionModel,
    births: &LmbDensity,
) -> Result<LmbDensity> {
    let surviving: BTreeSet<Label> = prior.tracks.iter().map(|t| t.label).collect();
    if let Some(dup) = births.tracks.iter().find(|b| surviving.contains(&b.label)) {
        return Err(Error::DuplicateLabel(dup.label));
    }
    let f = &motion.transition;
    let ft = f.transpose();
    let mut tracks = Vec::with_capacity(prior.len() + births.len());
    for t in &prior.tracks {
        let components = t
            .density
            .components
            .iter()
            .map(|c| {
                let mut covariance = f * &c.covariance * &ft + &motion.process_noise;
                symmetrize(&mut covariance);
                GaussianComponent {
                    weight: c.weight,
                    mean: f * &c.mean,
                    covariance,
                }
            })
            .collect();
        tracks.push(BernoulliTrack {
            label: t.label,
            existence: t.existence * motion.survival_prob,
            density: GaussianMixture::new(components),
        });
    }
    tracks.extend(births.tracks.iter().cloned());
    LmbDensity::new(tracks)
}

/// A labeled point estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub label: Label,
    pub state: DVector<f64>,
}

/// MAP-cardinality estimate: the `n*` most likely tracks with their dominant
/// component means. Ties in the cardinality favour the smaller `n`.
pub fn extract_estimates(posterior: &LmbDensity) -> Vec<Estimate> {
    let pmf = posterior.cardinality_pmf();
    let n_star = pmf
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (n, &p)| {
            if p > best.1 {
                (n, p)
            } else {
                best
            }
        })
        .0;
    let mut order: Vec<&BernoulliTrack> = posterior
        .tracks
        .iter()
        .filter(|t| !t.density.is_empty())
        .collect();
    order.sort_by(|a, b| {
        b.existence
            .total_cmp(&a.existence)
            .then(a.label.cmp(&b.label))
    });
    order
        .into_iter()
        .take(n_star)
        .filter_map(|t| {
            t.density.dominant().map(|c| Estimate {
                label: t.label,
                state: c.mean.clone(),
            })
        })
        .collect()
}
