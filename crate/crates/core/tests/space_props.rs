//! Cross-backend geometry invariants: geodesic consistency, the CAT(0)
//! inequality, projection firmness, and Fréchet mean optimality.

use hadamard::space::{check_cat0, sample_point, ConvexSet, Point, WeightedPointSet};
use hadamard_testkit::gen;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spaces() -> Vec<hadamard::SpaceDescriptor> {
    gen::standard_spaces()
}

#[test]
fn geodesic_speed_is_constant_on_all_backends() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for space in spaces() {
        for _ in 0..500 {
            let a: Point<f64> = sample_point(&space, &mut rng, 2.0);
            let b: Point<f64> = sample_point(&space, &mut rng, 2.0);
            let t: f64 = rng.gen_range(0.0..=1.0);
            let g = a.geodesic(&b, t).unwrap();
            let d = a.distance(&b).unwrap();
            assert!(
                (a.distance(&g).unwrap() - t * d).abs() <= 1e-9,
                "speed defect in {space} at t={t}"
            );
            assert!((g.distance(&b).unwrap() - (1.0 - t) * d).abs() <= 1e-9);
        }
    }
}

#[test]
fn cat0_inequality_holds_on_ten_thousand_quadruples_per_backend() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for space in spaces() {
        let mut min_slack = f64::INFINITY;
        for _ in 0..10_000 {
            let x: Point<f64> = sample_point(&space, &mut rng, 2.0);
            let g0: Point<f64> = sample_point(&space, &mut rng, 2.0);
            let g1: Point<f64> = sample_point(&space, &mut rng, 2.0);
            let t: f64 = rng.gen_range(0.0..=1.0);
            let chk = check_cat0(&x, &g0, &g1, t).unwrap();
            assert!(chk.pass, "CAT(0) violated in {space}: slack {}", chk.slack);
            min_slack = min_slack.min(chk.slack);
        }
        assert!(min_slack >= -1e-9);
    }
}

#[test]
fn euclidean_cat0_is_an_equality() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let space = hadamard::SpaceDescriptor::Euclidean(4);
    for _ in 0..2_000 {
        let x: Point<f64> = sample_point(&space, &mut rng, 3.0);
        let g0: Point<f64> = sample_point(&space, &mut rng, 3.0);
        let g1: Point<f64> = sample_point(&space, &mut rng, 3.0);
        let t: f64 = rng.gen_range(0.0..=1.0);
        let chk = check_cat0(&x, &g0, &g1, t).unwrap();
        assert!(chk.slack.abs() <= 1e-9);
    }
}

fn random_projectable_set(
    space: &hadamard::SpaceDescriptor,
    rng: &mut ChaCha8Rng,
) -> ConvexSet<f64> {
    match space {
        hadamard::SpaceDescriptor::Euclidean(n) => {
            let base: Point<f64> = sample_point(space, rng, 1.0);
            let k = rng.gen_range(0..=*n);
            let spanning = (0..k)
                .map(|_| (0..*n).map(|_| rng.gen_range(-1.0f64..1.0)).collect())
                .collect();
            ConvexSet::affine_subspace(base, spanning).unwrap()
        }
        hadamard::SpaceDescriptor::Spider(k) => {
            let legs = rng.gen_range(1..=*k);
            ConvexSet::spider_subtree(
                *k,
                (1..=legs)
                    .map(|l| (l, if rng.gen_bool(0.5) { f64::INFINITY } else { rng.gen_range(0.0..2.0) }))
                    .collect(),
            )
            .unwrap()
        }
        other => {
            if rng.gen_bool(0.5) {
                ConvexSet::singleton(sample_point(other, rng, 1.0))
            } else {
                ConvexSet::whole_space(other.clone()).unwrap()
            }
        }
    }
}

#[test]
fn metric_projections_are_nonexpansive() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for space in spaces() {
        for _ in 0..300 {
            let set = random_projectable_set(&space, &mut rng);
            let x: Point<f64> = sample_point(&space, &mut rng, 2.5);
            let y: Point<f64> = sample_point(&space, &mut rng, 2.5);
            let px = set.project(&x).unwrap();
            let py = set.project(&y).unwrap();
            assert!(
                px.distance(&py).unwrap() <= x.distance(&y).unwrap() * (1.0 + 1e-9) + 1e-12,
                "projection expanded a pair in {space}"
            );
        }
    }
}

#[test]
fn projection_lands_in_the_set_and_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for space in spaces() {
        for _ in 0..200 {
            let set = random_projectable_set(&space, &mut rng);
            let x: Point<f64> = sample_point(&space, &mut rng, 2.5);
            let px = set.project(&x).unwrap();
            let ppx = set.project(&px).unwrap();
            assert!(px.distance(&ppx).unwrap() <= 1e-10);
        }
    }
}

fn random_weighted_set(
    space: &hadamard::SpaceDescriptor,
    rng: &mut ChaCha8Rng,
) -> WeightedPointSet<f64> {
    let count = rng.gen_range(1..=6);
    let points = (0..count).map(|_| sample_point(space, rng, 2.0)).collect();
    let weights = (0..count).map(|_| rng.gen_range(0.05f64..2.0)).collect();
    WeightedPointSet::new(points, weights).unwrap()
}

#[test]
fn frechet_mean_beats_random_candidates() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for space in spaces() {
        for _ in 0..40 {
            let set = random_weighted_set(&space, &mut rng);
            let mean = set.mean().unwrap();
            let best = set.objective(&mean).unwrap();
            for _ in 0..25 {
                // mix of global candidates and local perturbations
                let candidate: Point<f64> = if rng.gen_bool(0.5) {
                    sample_point(&space, &mut rng, 2.5)
                } else {
                    let target: Point<f64> = sample_point(&space, &mut rng, 2.5);
                    mean.geodesic(&target, rng.gen_range(0.0..0.1)).unwrap()
                };
                let obj = set.objective(&candidate).unwrap();
                assert!(
                    best <= obj + 1e-7,
                    "candidate beat the mean in {space}: {best} vs {obj}"
                );
            }
        }
    }
}

#[test]
fn variance_inequality_certifies_the_barycenter() {
    // sum w_i d(z, p_i)^2 >= objective(mean) + W d(z, mean)^2
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for space in spaces() {
        for _ in 0..60 {
            let set = random_weighted_set(&space, &mut rng);
            let mean = set.mean().unwrap();
            let at_mean = set.objective(&mean).unwrap();
            let total = set.total_weight();
            for _ in 0..20 {
                let z: Point<f64> = sample_point(&space, &mut rng, 2.5);
                let lhs = set.objective(&z).unwrap();
                let dzm = z.distance(&mean).unwrap();
                assert!(
                    lhs + 1e-7 >= at_mean + total * dzm * dzm,
                    "variance inequality failed in {space}"
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn encode_decode_round_trips_exactly(seed in 0u64..1 << 48, which in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = &spaces()[which];
        let p: Point<f64> = sample_point(space, &mut rng, 3.0);
        let text = p.encode();
        let back = Point::<f64>::decode(&text, Some(p.space())).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(back.encode(), text);
    }

    #[test]
    fn triangle_inequality_on_random_triples(seed in 0u64..1 << 48, which in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = &spaces()[which];
        let a: Point<f64> = sample_point(space, &mut rng, 2.0);
        let b: Point<f64> = sample_point(space, &mut rng, 2.0);
        let c: Point<f64> = sample_point(space, &mut rng, 2.0);
        let ab = a.distance(&b).unwrap();
        let bc = b.distance(&c).unwrap();
        let ac = a.distance(&c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert!((a.distance(&b).unwrap() - b.distance(&a).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn distance_zero_iff_equal_point(seed in 0u64..1 << 48, which in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = &spaces()[which];
        let a: Point<f64> = sample_point(space, &mut rng, 2.0);
        prop_assert_eq!(a.distance(&a).unwrap(), 0.0);
        let b: Point<f64> = sample_point(space, &mut rng, 2.0);
        if a.distance(&b).unwrap() <= 1e-12 {
            // sampled coincidence: then geodesics collapse too
            prop_assert!(a.geodesic(&b, 0.5).unwrap().distance(&a).unwrap() <= 1e-12);
        }
    }
}
