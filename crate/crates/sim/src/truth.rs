//! Noiseless constant-velocity ground truth.

use log::warn;
use nalgebra::{DVector, Vector4};

use crate::config::ScenarioConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct TruthTrajectory {
    pub id: usize,
    pub birth: u32,
    /// One state per scan from `birth` up to (excluding) the death scan.
    pub states: Vec<Vector4<f64>>,
}

impl TruthTrajectory {
    pub fn death(&self) -> u32 {
        self.birth + self.states.len() as u32
    }

    pub fn is_alive(&self, scan: u32) -> bool {
        (self.birth..self.death()).contains(&scan)
    }

    pub fn state_at(&self, scan: u32) -> Option<&Vector4<f64>> {
        scan.checked_sub(self.birth)
            .and_then(|i| self.states.get(i as usize))
    }
}

pub fn generate_truth(config: &ScenarioConfig) -> Vec<TruthTrajectory> {
    let f = config.motion_model().transition;
    let f = nalgebra::Matrix4::from_iterator(f.iter().copied());
    let surveillance = config.sensors.first().map(|s| s.region.to_region());
    config
        .targets
        .iter()
        .enumerate()
        .map(|(id, t)| {
            let x0 = Vector4::from(t.initial_state);
            if let Some(region) = surveillance {
                if !region.contains(x0[0], x0[2]) {
                    warn!("target {id} starts outside the surveillance region");
                }
            }
            let states = std::iter::successors(Some(x0), |x| Some(f * x))
                .take((t.death - t.birth) as usize)
                .collect();
            TruthTrajectory {
                id,
                birth: t.birth,
                states,
            }
        })
        .collect()
}

/// States of every target alive at `scan`.
pub fn alive_states(truth: &[TruthTrajectory], scan: u32) -> Vec<DVector<f64>> {
    truth
        .iter()
        .filter_map(|t| t.state_at(scan))
        .map(|x| DVector::from_column_slice(x.as_slice()))
        .collect()
}

pub fn cardinality(truth: &[TruthTrajectory], scan: u32) -> usize {
    truth.iter().filter(|t| t.is_alive(scan)).count()
}
