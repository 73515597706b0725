use nalgebra::{DMatrix, DVector};

use super::{Measurement, SensorModel};
use crate::density::{BernoulliTrack, LmbDensity};
use crate::error::{Error, Result};
use crate::gaussian::GaussianMixture;
use crate::label::Label;

/// Measurement-driven birth parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveBirthParams {
    /// Expected number of births per scan.
    pub expected_births: f64,
    pub max_existence: f64,
    pub covariance: DMatrix<f64>,
}

impl AdaptiveBirthParams {
    pub fn new(expected_births: f64, max_existence: f64, covariance: DMatrix<f64>) -> Self {
        Self {
            expected_births,
            max_existence,
            covariance,
        }
    }
}

/// Births proportional to the probability that each measurement of the last
/// scan was not associated with any track:
/// `r_B(z) = min(r_max, (1 − r_U(z)) / Σ_ξ (1 − r_U(ξ)) · λ_B)`.
///
/// Each birth sits at the measured position with zero velocity and is labeled
/// `(birth_time, i)` with `i` counting births in measurement order from 1.
pub fn adaptive_birth(
    scan: &[Measurement],
    assoc_prob: &[f64],
    params: &AdaptiveBirthParams,
    sensor: &SensorModel,
    birth_time: u32,
) -> Result<LmbDensity> {
    if scan.len() != assoc_prob.len() {
        return Err(Error::Dimension(
            "one association probability per measurement is required".into(),
        ));
    }
    if !(params.expected_births > 0.0) {
        return Err(Error::domain("expected births must be > 0"));
    }
    if !(params.max_existence > 0.0 && params.max_existence <= 1.0) {
        return Err(Error::domain("maximum birth existence must lie in (0, 1]"));
    }
    if assoc_prob.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::domain(
            "association probabilities must lie in [0, 1]",
        ));
    }
    let unassigned_total: f64 = assoc_prob.iter().map(|p| 1.0 - p).sum();
    if unassigned_total <= 0.0 {
        return Ok(LmbDensity::empty());
    }
    let to_state = sensor
        .observation
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::numeric(e.to_string()))?;

    let mut tracks = Vec::new();
    for (meas, p) in scan.iter().zip(assoc_prob) {
        let ratio = (1.0 - p) / unassigned_total * params.expected_births;
        let existence = ratio.min(params.max_existence).clamp(0.0, 1.0);
        if existence <= 0.0 {
            continue;
        }
        let label = Label::new(birth_time, tracks.len() as u32 + 1);
        let mean: DVector<f64> = &to_state * &meas.z;
        tracks.push(BernoulliTrack {
            label,
            existence,
            density: GaussianMixture::single(mean, params.covariance.clone()),
        });
    }
    LmbDensity::new(tracks)
}

/// Births at fixed a-priori locations, re-injected every scan.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorBirthParams {
    /// Full birth states (position and velocity).
    pub states: Vec<DVector<f64>>,
    pub existence: f64,
    pub covariance: DMatrix<f64>,
}

/// One Bernoulli per prior location, labeled `(birth_time, location index + 1)`.
pub fn prior_birth(params: &PriorBirthParams, birth_time: u32) -> Result<LmbDensity> {
    if !(params.existence > 0.0 && params.existence <= 1.0) {
        return Err(Error::domain("prior birth existence must lie in (0, 1]"));
    }
    LmbDensity::new(
        params
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| BernoulliTrack {
                label: Label::new(birth_time, i as u32 + 1),
                existence: params.existence,
                density: GaussianMixture::single(s.clone(), params.covariance.clone()),
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::Region;
    use nalgebra::dvector;

    fn setup() -> (SensorModel, AdaptiveBirthParams) {
        let sensor = SensorModel::position(1.4, 0.99, 10.0, Region::square(1000.0));
        (
            sensor,
            AdaptiveBirthParams::new(1.0, 0.3, DMatrix::identity(4, 4) * 100.0),
        )
    }

    fn meas(x: f64, y: f64) -> Measurement {
        Measurement {
            z: dvector![x, y],
            scan: 4,
            sensor_id: 0,
        }
    }

    #[test]
    fn existence_follows_unassigned_share() {
        let (sensor, params) = setup();
        let scan = [meas(1.0, 2.0), meas(-5.0, 7.0)];
        let births = adaptive_birth(&scan, &[0.9, 0.1], &params, &sensor, 5).unwrap();
        assert_eq!(births.len(), 2);
        assert!((births.tracks[0].existence - 0.1).abs() < 1e-15);
        assert!((births.tracks[1].existence - 0.3).abs() < 1e-15);
        assert_eq!(births.tracks[0].label, Label::new(5, 1));
        assert_eq!(births.tracks[1].label, Label::new(5, 2));
        let m = &births.tracks[1].density.components[0].mean;
        assert!((m - dvector![-5.0, 0.0, 7.0, 0.0]).amax() < 1e-12);
    }

    #[test]
    fn single_unassigned_measurement_is_capped() {
        let (sensor, params) = setup();
        let births = adaptive_birth(&[meas(0.0, 0.0)], &[0.0], &params, &sensor, 1).unwrap();
        assert!((births.tracks[0].existence - 0.3).abs() < 1e-15);
    }

    #[test]
    fn fully_assigned_scan_has_no_births() {
        let (sensor, params) = setup();
        let births = adaptive_birth(
            &[meas(0.0, 0.0), meas(1.0, 1.0)],
            &[1.0, 1.0],
            &params,
            &sensor,
            1,
        )
        .unwrap();
        assert!(births.is_empty());
    }

    #[test]
    fn prior_births_use_scan_as_birth_time() {
        let params = PriorBirthParams {
            states: vec![dvector![0.0, 0.0, 0.0, 0.0], dvector![10.0, 0.0, 10.0, 0.0]],
            existence: 0.05,
            covariance: DMatrix::identity(4, 4),
        };
        let b = prior_birth(&params, 7).unwrap();
        assert_eq!(b.labels(), vec![Label::new(7, 1), Label::new(7, 2)]);
    }
}
