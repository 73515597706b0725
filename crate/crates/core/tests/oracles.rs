use gcilsm_core::fusion::{fuse_bernoulli_pair, fuse_mdglmb, FusionWeights};
use gcilsm_core::gaussian::{gm_pairwise_product_mass, gm_power, log_rho};
use gcilsm_core::matching::{renyi_cost, SetMarginal};
use gcilsm_core::oracle::{brute_marginal, integrate_1d, quad_eta};
use gcilsm_core::{
    BernoulliTrack, GaussianComponent, GaussianMixture, Hypothesis, Label, MdGlmbDensity,
    ReductionParams,
};
use nalgebra::{dvector, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn g1(w: f64, m: f64, var: f64) -> GaussianComponent {
    GaussianComponent::new(w, dvector![m], DMatrix::from_element(1, 1, var)).unwrap()
}

fn random_spd(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(dim, dim) * rng.random_range(0.2..2.0)
}

fn random_mixture(rng: &mut ChaCha8Rng, dim: usize, max_components: usize) -> GaussianMixture {
    let n = rng.random_range(1..=max_components);
    let comps: Vec<_> = (0..n)
        .map(|_| GaussianComponent {
            weight: rng.random_range(0.1..1.0),
            mean: DVector::from_fn(dim, |_, _| rng.random_range(-5.0..5.0)),
            covariance: random_spd(rng, dim),
        })
        .collect();
    GaussianMixture::new(comps).normalized().unwrap()
}

fn random_mdglmb(
    rng: &mut ChaCha8Rng,
    n_labels: usize,
    dim: usize,
    components: usize,
) -> MdGlmbDensity {
    let space: Vec<Label> = (0..n_labels as u32)
        .map(|i| Label::new(rng.random_range(0..3), i))
        .collect();
    let mut space = space;
    space.sort();
    let mut hyps = Vec::new();
    for mask in 0u32..(1 << n_labels) {
        if mask != 0 && rng.random_bool(0.5) {
            continue;
        }
        let pairs = (0..n_labels)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| (space[i], random_mixture(rng, dim, components)))
            .collect();
        hyps.push(Hypothesis::new(pairs, rng.random_range(0.01..1.0)));
    }
    let total: f64 = hyps.iter().map(|h| h.weight).sum();
    for h in &mut hyps {
        h.weight /= total;
    }
    MdGlmbDensity::new(space, hyps).unwrap()
}

#[test]
fn set_marginal_matches_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..60 {
        let d = random_mdglmb(&mut rng, 1 + case % 8, 2, 2);
        for &l in &d.label_space {
            let fast = d
                .set_marginal(l, &ReductionParams::moment_preserving())
                .unwrap();
            let brute = brute_marginal(&d, l).unwrap();
            assert!((fast.existence - brute.existence).abs() < 1e-10);
            if brute.existence > 0.0 {
                assert!(
                    (fast.density.mean().unwrap() - brute.density.mean().unwrap()).amax() < 1e-9
                );
                assert!(
                    (fast.density.covariance().unwrap() - brute.density.covariance().unwrap())
                        .amax()
                        < 1e-9
                );
            } else {
                assert!(fast.is_nonexistent());
            }
        }
    }
}

#[test]
fn single_component_power_mass_is_rho() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for dim in 1..=4 {
        for _ in 0..10 {
            let cov = random_spd(&mut rng, dim);
            let omega = rng.random_range(0.05..1.0);
            let gm = GaussianMixture::single(DVector::zeros(dim), cov.clone());
            let expected = log_rho(cov.determinant().ln(), dim, omega).exp();
            assert!(
                (gm_power(&gm, omega).unwrap().mass() - expected).abs() < 1e-9 * expected.max(1.0)
            );
        }
    }
    let gm = GaussianMixture::new(vec![g1(1.0, 0.0, 1.0)]);
    let p = gm_power(&gm, 0.5).unwrap();
    // ∫ N(x;0,1)^½ dx = (8π)^¼
    assert!((p.mass() - (8.0 * std::f64::consts::PI).powf(0.25)).abs() < 1e-12);
    assert!((p.mass() - 2.2390).abs() < 1e-4);
}

#[test]
fn separated_mixture_power_within_two_percent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let sep = rng.random_range(6.0..12.0);
        let w = rng.random_range(0.2..0.8);
        let gm = GaussianMixture::new(vec![g1(w, 0.0, 1.0), g1(1.0 - w, sep, 1.0)]);
        let omega = rng.random_range(0.5..1.0);
        let approx = gm_power(&gm, omega).unwrap().mass();
        let breaks: Vec<f64> = (-30..=30)
            .map(|k| k as f64 * 0.5)
            .chain((-30..=30).map(|k| sep + k as f64 * 0.5))
            .collect();
        let exact = integrate_1d(
            |x| gm.pdf(&dvector![x]).unwrap().powf(omega),
            -40.0,
            sep + 40.0,
            &breaks,
            1e-11,
        );
        assert!(
            (approx - exact).abs() / exact < 0.02,
            "sep {sep} ω {omega}: {approx} vs {exact}"
        );
    }
}

#[test]
fn product_mass_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..30 {
        let a = random_mixture(&mut rng, 1, 3);
        let b = random_mixture(&mut rng, 1, 3);
        let exact = gm_pairwise_product_mass(&a, &b).unwrap().mass();
        let quad = quad_eta(&a, &b, 1.0, 1.0).unwrap();
        assert!((exact - quad).abs() < 1e-9);
    }
}

fn bern(label: Label, r: f64, mean: DVector<f64>, cov: DMatrix<f64>) -> BernoulliTrack {
    BernoulliTrack::new(label, r, GaussianMixture::single(mean, cov)).unwrap()
}

#[test]
fn renyi_cost_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..40 {
        let dim = 1 + case % 2;
        let a = bern(
            Label::new(0, 1),
            rng.random_range(0.0..=1.0),
            DVector::from_fn(dim, |_, _| rng.random_range(-3.0..3.0)),
            random_spd(&mut rng, dim),
        );
        let b = bern(
            Label::new(0, 2),
            rng.random_range(0.0..=1.0),
            DVector::from_fn(dim, |_, _| rng.random_range(-3.0..3.0)),
            random_spd(&mut rng, dim),
        );
        let alpha = rng.random_range(0.1..0.9);
        let beta = 1.0 - alpha;
        let k = quad_eta(&a.density, &b.density, alpha, beta).unwrap();
        let (r1, r2) = (a.existence, b.existence);
        let reference = -((1.0 - r1).powf(alpha) * (1.0 - r2).powf(beta)
            + r1.powf(alpha) * r2.powf(beta) * k)
            .ln()
            / beta;
        let c = renyi_cost(&a, &b, alpha).unwrap();
        assert!((c - reference).abs() < 1e-6, "{c} vs {reference}");
    }
}

#[test]
fn renyi_worked_value() {
    let a = bern(
        Label::new(0, 1),
        1.0,
        dvector![0.0],
        DMatrix::identity(1, 1),
    );
    let b = bern(
        Label::new(0, 2),
        1.0,
        dvector![2.0],
        DMatrix::identity(1, 1),
    );
    assert!((renyi_cost(&a, &b, 0.5).unwrap() - 1.0).abs() < 1e-6);
}

fn single_label_density(l: Label, w_empty: f64, p: GaussianMixture) -> MdGlmbDensity {
    let mut hyps = vec![Hypothesis::new(vec![(l, p)], 1.0 - w_empty)];
    if w_empty > 0.0 {
        hyps.push(Hypothesis::new(vec![], w_empty));
    }
    MdGlmbDensity::new(vec![l], hyps).unwrap()
}

#[test]
fn bernoulli_pair_fusion_agrees_with_hypothesis_fusion() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let l = Label::new(2, 4);
    let reduction = ReductionParams::moment_preserving();
    for case in 0..40 {
        let dim = 1 + case % 4;
        let (r1, r2) = (rng.random_range(0.05..0.95), rng.random_range(0.05..0.95));
        let p1 = GaussianMixture::single(
            DVector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0)),
            random_spd(&mut rng, dim),
        );
        let p2 = GaussianMixture::single(
            DVector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0)),
            random_spd(&mut rng, dim),
        );
        let omega = rng.random_range(0.1..0.9);
        let pair = fuse_bernoulli_pair(
            &BernoulliTrack::new(l, r1, p1.clone()).unwrap(),
            &BernoulliTrack::new(l, r2, p2.clone()).unwrap(),
            omega,
            1.0 - omega,
            &reduction,
        )
        .unwrap();
        let hyp = fuse_mdglmb(
            &single_label_density(l, 1.0 - r1, p1),
            &single_label_density(l, 1.0 - r2, p2),
            &FusionWeights::pair(omega).unwrap(),
            &reduction,
        )
        .unwrap();
        let marginal = hyp.set_marginal(l, &reduction).unwrap();
        assert!((pair.existence - marginal.existence).abs() < 1e-9);
        assert!((pair.density.mean().unwrap() - marginal.density.mean().unwrap()).amax() < 1e-9);
        assert!(
            (pair.density.covariance().unwrap() - marginal.density.covariance().unwrap()).amax()
                < 1e-9
        );
    }
}

#[test]
fn hypothesis_weights_match_quadrature_normalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for case in 0..12 {
        let n = 1 + case % 4;
        // exact GM powers need single-component densities
        let d1 = random_mdglmb(&mut rng, n, 1, 1);
        // same label space and hypothesis sets, different weights and densities
        let mut d2 = d1.clone();
        for h in &mut d2.hypotheses {
            h.weight = rng.random_range(0.01..1.0);
            for p in &mut h.densities {
                *p = random_mixture(&mut rng, 1, 1);
            }
        }
        let total: f64 = d2.hypotheses.iter().map(|h| h.weight).sum();
        d2.hypotheses.iter_mut().for_each(|h| h.weight /= total);
        let omega = rng.random_range(0.2..0.8);
        let fused = fuse_mdglmb(
            &d1,
            &d2,
            &FusionWeights::pair(omega).unwrap(),
            &ReductionParams::default(),
        )
        .unwrap();

        let raw: Vec<f64> = d1
            .hypotheses
            .iter()
            .zip(&d2.hypotheses)
            .map(|(h1, h2)| {
                let eta: f64 = h1
                    .densities
                    .iter()
                    .zip(&h2.densities)
                    .map(|(p1, p2)| quad_eta(p1, p2, omega, 1.0 - omega).unwrap())
                    .product();
                h1.weight.powf(omega) * h2.weight.powf(1.0 - omega) * eta
            })
            .collect();
        let norm: f64 = raw.iter().sum();
        for (h, w) in d1.hypotheses.iter().zip(&raw) {
            let got = fused.weight_of(&h.labels);
            assert!((got - w / norm).abs() < 1e-6, "{got} vs {}", w / norm);
        }
    }
}

#[test]
fn fusing_a_density_with_itself_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..30 {
        let dim = 4;
        let t = bern(
            Label::new(1, 1),
            rng.random_range(0.0..=1.0),
            DVector::from_fn(dim, |_, _| rng.random_range(-50.0..50.0)),
            random_spd(&mut rng, dim),
        );
        let omega = rng.random_range(0.1..0.9);
        let f =
            fuse_bernoulli_pair(&t, &t, omega, 1.0 - omega, &ReductionParams::default()).unwrap();
        assert!((f.existence - t.existence).abs() < 1e-9);
        let (a, b) = (&f.density.components[0], &t.density.components[0]);
        assert!((&a.mean - &b.mean).amax() < 1e-9);
        assert!((&a.covariance - &b.covariance).amax() < 1e-9);
    }
}
