//! Measurement simulation and per-sensor random streams.

use gcilsm_core::filter::{Measurement, Region, SensorModel};
use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

/// Independent stream for one sensor in one Monte-Carlo run.
pub fn sensor_rng(seed: u64, run: u32, sensor: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(u64::from(run))));
    rng.set_stream(sensor as u64);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One scan: thinned, noisy target detections plus Poisson clutter uniform on
/// the sensor region, in random order. Targets outside `field_of_view` are
/// never detected.
pub fn simulate_scan<R: Rng>(
    truth: &[DVector<f64>],
    sensor: &SensorModel,
    field_of_view: Option<&Region>,
    scan: u32,
    sensor_id: usize,
    rng: &mut R,
) -> Vec<Measurement> {
    let noise_factor = sensor
        .noise
        .clone()
        .cholesky()
        .expect("sensor noise is positive definite")
        .l();
    let mut out = Vec::new();
    for x in truth {
        if let Some(fov) = field_of_view {
            if !fov.contains(x[0], x[2]) {
                continue;
            }
        }
        if !rng.random_bool(sensor.detect_prob) {
            continue;
        }
        let e = DVector::from_fn(noise_factor.nrows(), |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        });
        out.push(Measurement {
            z: &sensor.observation * x + &noise_factor * e,
            scan,
            sensor_id,
        });
    }
    if sensor.clutter_rate > 0.0 {
        let n = Poisson::new(sensor.clutter_rate)
            .expect("positive rate")
            .sample(rng) as usize;
        let r = &sensor.region;
        for _ in 0..n {
            let z = DVector::from_vec(vec![
                rng.random_range(r.x_min..r.x_max),
                rng.random_range(r.y_min..r.y_max),
            ]);
            out.push(Measurement { z, scan, sensor_id });
        }
    }
    out.shuffle(rng);
    out
}
