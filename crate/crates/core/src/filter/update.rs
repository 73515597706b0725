use nalgebra::{DMatrix, DVector};

use super::{Measurement, SensorModel};
use crate::assignment::hungarian::Matrix;
use crate::assignment::murty;
use crate::density::{BernoulliTrack, LmbDensity};
use crate::error::{Error, Result};
use crate::gaussian::{
    gm_reduce, symmetrize, GaussianComponent, GaussianMixture, ReductionParams, SpdFactor,
};
use crate::log_sum_exp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateParams {
    /// Hypotheses kept per association cluster.
    pub k_best: usize,
    /// Squared Mahalanobis innovation gate.
    pub gate: f64,
    /// Normalized hypothesis weights below this are discarded.
    pub hypothesis_truncation: f64,
    pub reduction: ReductionParams,
}

impl Default for UpdateParams {
    fn default() -> Self {
        Self {
            k_best: 100,
            gate: 25.0,
            hypothesis_truncation: 1e-4,
            reduction: ReductionParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub posterior: LmbDensity,
    /// Probability that each measurement (by position in the scan) originated
    /// from some track.
    pub assoc_prob: Vec<f64>,
}

/// Kalman quantities of one predicted component that do not depend on the measurement.
struct ComponentGain {
    log_weight: f64,
    predicted_z: DVector<f64>,
    innovation: SpdFactor,
    gain: DMatrix<f64>,
    mean: DVector<f64>,
    updated_cov: DMatrix<f64>,
}

/// Detection of one measurement by one track.
struct Detection {
    meas: usize,
    log_likelihood: f64,
    density: GaussianMixture,
}

fn component_gains(track: &BernoulliTrack, sensor: &SensorModel) -> Result<Vec<ComponentGain>> {
    let h = &sensor.observation;
    let ht = h.transpose();
    track
        .density
        .components
        .iter()
        .map(|c| {
            let pht = &c.covariance * &ht;
            let mut s = h * &pht + &sensor.noise;
            symmetrize(&mut s);
            let innovation = SpdFactor::new(&s)?;
            let gain = innovation.solve(&pht.transpose()).transpose();
            let mut updated_cov = &c.covariance - &gain * &s * gain.transpose();
            symmetrize(&mut updated_cov);
            Ok(ComponentGain {
                log_weight: c.weight.ln(),
                predicted_z: h * &c.mean,
                innovation,
                gain,
                mean: c.mean.clone(),
                updated_cov,
            })
        })
        .collect()
}

fn detect(gains: &[ComponentGain], z: &DVector<f64>, meas: usize, gate: f64) -> Option<Detection> {
    let mut gated = false;
    let mut log_terms = Vec::with_capacity(gains.len());
    let mut innovations = Vec::with_capacity(gains.len());
    for g in gains {
        let nu = z - &g.predicted_z;
        let d2 = g.innovation.mahalanobis_sq(&nu);
        gated |= d2 <= gate;
        log_terms.push(g.log_weight + g.innovation.log_normal(&nu));
        innovations.push(nu);
    }
    if !gated {
        return None;
    }
    let log_likelihood = log_sum_exp(&log_terms);
    if !log_likelihood.is_finite() {
        return None;
    }
    let components = gains
        .iter()
        .zip(&log_terms)
        .zip(&innovations)
        .map(|((g, &lt), nu)| GaussianComponent {
            weight: (lt - log_likelihood).exp(),
            mean: &g.mean + &g.gain * nu,
            covariance: g.updated_cov.clone(),
        })
        .collect();
    Some(Detection {
        meas,
        log_likelihood,
        density: GaussianMixture::new(components),
    })
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Measurement update of a predicted LMB density under the standard
/// observation model.
///
/// Tracks are grouped into clusters that share gated measurements; within each
/// cluster the best `k_best` association hypotheses (every track either missed
/// or assigned a distinct measurement, leftover measurements being clutter) are
/// ranked with Murty's algorithm on the negative log-likelihood ratio, and the
/// normalized hypothesis weights are marginalized back to independent tracks.
pub fn lmb_update(
    predicted: &LmbDensity,
    scan: &[Measurement],
    sensor: &SensorModel,
    params: &UpdateParams,
) -> Result<UpdateOutcome> {
    if params.k_best == 0 {
        return Err(Error::domain("k_best must be >= 1"));
    }
    if !(0.0..=1.0).contains(&sensor.detect_prob) {
        return Err(Error::domain("detection probability outside [0, 1]"));
    }
    let n = predicted.len();
    let m = scan.len();
    let pd = sensor.detect_prob;
    let log_kappa = sensor.clutter_density().max(f64::MIN_POSITIVE).ln();

    // Gated detections per track.
    let mut detections: Vec<Vec<Detection>> = Vec::with_capacity(n);
    for t in &predicted.tracks {
        if pd == 0.0 || t.existence == 0.0 || t.density.is_empty() || m == 0 {
            detections.push(Vec::new());
            continue;
        }
        let gains = component_gains(t, sensor)?;
        detections.push(
            scan.iter()
                .enumerate()
                .filter_map(|(j, meas)| detect(&gains, &meas.z, j, params.gate))
                .collect(),
        );
    }

    // Clusters: tracks linked through shared measurements.
    let mut parent: Vec<usize> = (0..n).collect();
    let mut owner: Vec<Option<usize>> = vec![None; m];
    for (i, dets) in detections.iter().enumerate() {
        for d in dets {
            match owner[d.meas] {
                None => owner[d.meas] = Some(i),
                Some(o) => {
                    let (a, b) = (find(&mut parent, o), find(&mut parent, i));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut cluster_of_root = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if cluster_of_root[root] == usize::MAX {
            cluster_of_root[root] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[cluster_of_root[root]].push(i);
    }

    // β[i][d]: association weight of track i with its d-th detection; missed[i].
    let mut beta: Vec<Vec<f64>> = detections.iter().map(|d| vec![0.0; d.len()]).collect();
    let mut missed = vec![0.0; n];

    for cluster in &clusters {
        let mut cols: Vec<usize> = cluster
            .iter()
            .flat_map(|&i| detections[i].iter().map(|d| d.meas))
            .collect();
        cols.sort_unstable();
        cols.dedup();
        if cols.is_empty() {
            for &i in cluster {
                missed[i] = 1.0;
            }
            continue;
        }
        let rows = cluster.len();
        let g = cols.len();
        let mut matrix = Matrix::from_fn(rows, g + rows, |_, _| f64::INFINITY);
        for (row, &i) in cluster.iter().enumerate() {
            let r = predicted.tracks[i].existence;
            for d in &detections[i] {
                let col = cols.binary_search(&d.meas).expect("measurement in cluster");
                matrix.set(row, col, -(r.ln() + pd.ln() + d.log_likelihood - log_kappa));
            }
            matrix.set(row, g + row, -(1.0 - r * pd).max(f64::MIN_POSITIVE).ln());
        }
        let ranked = murty::kbest(&matrix, params.k_best);
        if ranked.is_empty() {
            return Err(Error::numeric(
                "association problem has no feasible hypothesis",
            ));
        }
        let log_w: Vec<f64> = ranked.iter().map(|(_, c)| -c).collect();
        let norm = log_sum_exp(&log_w);
        let mut weights: Vec<f64> = log_w.iter().map(|lw| (lw - norm).exp()).collect();
        if weights.iter().any(|&w| w >= params.hypothesis_truncation) {
            for w in &mut weights {
                if *w < params.hypothesis_truncation {
                    *w = 0.0;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
        for ((assignment, _), w) in ranked.iter().zip(&weights) {
            if *w == 0.0 {
                continue;
            }
            for (row, &col) in assignment.iter().enumerate() {
                let i = cluster[row];
                if col >= g {
                    missed[i] += w;
                } else {
                    let meas = cols[col];
                    let d = detections[i]
                        .iter()
                        .position(|d| d.meas == meas)
                        .expect("gated detection");
                    beta[i][d] += w;
                }
            }
        }
    }

    let mut assoc_prob = vec![0.0; m];
    let mut tracks = Vec::with_capacity(n);
    for (i, t) in predicted.tracks.iter().enumerate() {
        let r = t.existence;
        let denom = 1.0 - r * pd;
        let missed_existence = if denom > 0.0 {
            r * (1.0 - pd) / denom
        } else {
            0.0
        };
        let detected: f64 = beta[i].iter().sum();
        let existence = (detected + missed[i] * missed_existence).clamp(0.0, 1.0);
        for (d, b) in detections[i].iter().zip(&beta[i]) {
            assoc_prob[d.meas] += b;
        }

        if detected == 0.0 || existence == 0.0 {
            tracks.push(BernoulliTrack {
                label: t.label,
                existence,
                density: t.density.clone(),
            });
            continue;
        }
        let mut components = Vec::new();
        for (d, &b) in detections[i].iter().zip(&beta[i]) {
            if b > 0.0 {
                components.extend(d.density.clone().scaled(b / existence).components);
            }
        }
        let miss_mass = missed[i] * missed_existence;
        if miss_mass > 0.0 {
            components.extend(t.density.clone().scaled(miss_mass / existence).components);
        }
        let density = gm_reduce(
            &GaussianMixture::new(components).normalized()?,
            &params.reduction,
        )?;
        tracks.push(BernoulliTrack {
            label: t.label,
            existence,
            density,
        });
    }
    for p in &mut assoc_prob {
        *p = p.clamp(0.0, 1.0);
    }
    Ok(UpdateOutcome {
        posterior: LmbDensity::new(tracks)?,
        assoc_prob,
    })
}
