//! Flow invariants: PPA residual monotonicity and energy telescoping, the
//! semigroup displacement bound, nonexpansiveness, the semigroup law,
//! residual monotonicity in time, and the linear matrix-exponential oracle.

use hadamard::flows::{
    fejer_check, ppa, semigroup_apply, semigroup_trajectory, SemigroupQuery, StepSchedule,
};
use hadamard::operators::Nonexpansive;
use hadamard::space::{sample_point, Point};
use hadamard_testkit::{fixtures, gen, oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_schedule(rng: &mut ChaCha8Rng) -> StepSchedule<f64> {
    match rng.gen_range(0..3) {
        0 => StepSchedule::constant(rng.gen_range(0.2..2.0)).unwrap(),
        1 => StepSchedule::power(rng.gen_range(0.5..2.0), rng.gen_range(0.0..0.5)).unwrap(),
        _ => {
            let steps = (0..50).map(|_| rng.gen_range(0.1f64..1.5)).collect();
            StepSchedule::explicit(steps).unwrap()
        }
    }
}

#[test]
fn ppa_residuals_never_increase_for_any_schedule() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for space in gen::standard_spaces() {
        for _ in 0..12 {
            let f = gen::random_map(&space, &mut rng);
            let x0: Point<f64> = sample_point(&space, &mut rng, 2.0);
            let schedule = random_schedule(&mut rng);
            let traj = ppa(&f, &x0, &schedule, 40, 1e-11).unwrap();
            for w in traj.samples.windows(2) {
                assert!(
                    w[1].residual <= w[0].residual + 1e-9,
                    "residual increased in {space}: {} -> {}",
                    w[0].residual,
                    w[1].residual
                );
            }
        }
    }
}

#[test]
fn ppa_energy_telescoping_against_a_certified_fixed_point() {
    // d(x_{n-1}, x_n)^2 <= d(p, x_{n-1})^2 - d(p, x_n)^2 + 1e-9
    for (name, f, fixed, start) in fixtures::fixture_maps_with_fixed_points() {
        let schedule = StepSchedule::constant(1.0).unwrap();
        let traj = ppa(&f, &start, &schedule, 60, 1e-12).unwrap();
        for w in traj.samples.windows(2) {
            let step_sq = w[0].point.distance(&w[1].point).unwrap().powi(2);
            let before = fixed.distance(&w[0].point).unwrap().powi(2);
            let after = fixed.distance(&w[1].point).unwrap().powi(2);
            assert!(
                step_sq <= before - after + 1e-9,
                "telescoping failed for {name}"
            );
        }
    }
}

#[test]
fn ppa_passes_fejer_check_against_fixture_fixed_points() {
    for (name, f, fixed, start) in fixtures::fixture_maps_with_fixed_points() {
        let schedule = StepSchedule::power(1.0, 0.5).unwrap();
        let traj = ppa(&f, &start, &schedule, 200, 1e-9).unwrap();
        let report = fejer_check(&f, &traj, &fixed, 1e-9).unwrap();
        assert!(report.pass, "Fejér violated for {name}: {}", report.max_violation);
    }
}

#[test]
fn semigroup_displacement_bound() {
    // d(x, T_t x) <= t d(x, Fx) (1 + 1e-6)
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for space in gen::standard_spaces() {
        for _ in 0..5 {
            let f = gen::random_map(&space, &mut rng);
            let x: Point<f64> = sample_point(&space, &mut rng, 2.0);
            let t: f64 = rng.gen_range(0.1..2.0);
            let q = SemigroupQuery::new(t, 1e-6).unwrap();
            let tx = semigroup_apply(&f, &x, &q).unwrap();
            let lhs = x.distance(&tx).unwrap();
            let bound = t * x.distance(&f.apply(&x).unwrap()).unwrap();
            assert!(
                lhs <= bound * (1.0 + 1e-6) + 3e-6,
                "displacement bound failed in {space}: {lhs} > {bound}"
            );
        }
    }
}

#[test]
fn semigroup_is_nonexpansive() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for space in gen::standard_spaces() {
        for _ in 0..4 {
            let f = gen::random_map(&space, &mut rng);
            let x: Point<f64> = sample_point(&space, &mut rng, 2.0);
            let y: Point<f64> = sample_point(&space, &mut rng, 2.0);
            let t: f64 = rng.gen_range(0.1..1.5);
            let q = SemigroupQuery::new(t, 1e-6).unwrap();
            let tx = semigroup_apply(&f, &x, &q).unwrap();
            let ty = semigroup_apply(&f, &y, &q).unwrap();
            assert!(
                tx.distance(&ty).unwrap()
                    <= x.distance(&y).unwrap() * (1.0 + 1e-6) + 5e-6,
                "semigroup expanded a pair in {space}"
            );
        }
    }
}

#[test]
fn semigroup_law_within_five_tolerances() {
    // d(T_{s+t} x, T_s T_t x) <= 5 tol
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let tol = 1e-6;
    for space in gen::standard_spaces() {
        for _ in 0..3 {
            let f = gen::random_map(&space, &mut rng);
            let x: Point<f64> = sample_point(&space, &mut rng, 1.5);
            let s: f64 = rng.gen_range(0.1..1.0);
            let t: f64 = rng.gen_range(0.1..1.0);
            let both = semigroup_apply(&f, &x, &SemigroupQuery::new(s + t, tol).unwrap()).unwrap();
            let first = semigroup_apply(&f, &x, &SemigroupQuery::new(t, tol).unwrap()).unwrap();
            let then = semigroup_apply(&f, &first, &SemigroupQuery::new(s, tol).unwrap()).unwrap();
            let gap = both.distance(&then).unwrap();
            assert!(gap <= 5.0 * tol, "semigroup law gap {gap} in {space}");
        }
    }
}

#[test]
fn semigroup_residual_is_nonincreasing_in_time() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let grid: Vec<f64> = vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0];
    for space in gen::standard_spaces() {
        for _ in 0..3 {
            let f = gen::random_map(&space, &mut rng);
            let x0: Point<f64> = sample_point(&space, &mut rng, 1.5);
            let traj = semigroup_trajectory(&f, &x0, &grid, 1e-6).unwrap();
            // points are resolved to ~1e-6, so the monotonicity slack is a
            // few times that
            for w in traj.samples.windows(2) {
                assert!(
                    w[1].residual <= w[0].residual + 5e-6,
                    "semigroup residual increased in {space}"
                );
            }
        }
    }
}

#[test]
fn linear_semigroup_matches_the_expm_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for _ in 0..10 {
        let n = rng.gen_range(2..=4);
        let a = gen::random_nonexpansive_matrix(n, &mut rng);
        let f = hadamard::operators::NonexpansiveMap::linear(gen::to_core_matrix(&a)).unwrap();
        let coords: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = Point::euclidean(coords.clone()).unwrap();
        let t: f64 = rng.gen_range(0.2..2.0);
        let q = SemigroupQuery::new(t, 2e-7).unwrap().with_cap(1 << 24);
        let ours = semigroup_apply(&f, &x, &q).unwrap();
        let expect = Point::euclidean(oracle::linear_semigroup(&a, t, &coords)).unwrap();
        assert!(
            ours.distance(&expect).unwrap() <= 1e-6,
            "semigroup disagrees with expm at t={t}"
        );
    }
}

#[test]
fn semigroup_fejer_against_certified_reference() {
    let (_, f, fixed, start) = fixtures::fixture_maps_with_fixed_points().remove(3);
    let traj = semigroup_trajectory(&f, &start, &[0.0, 0.5, 1.0, 2.0, 4.0], 1e-6).unwrap();
    let report = fejer_check(&f, &traj, &fixed, 1e-9).unwrap();
    assert!(report.pass);
}
