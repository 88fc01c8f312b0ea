//! Convex functionals, their resolvents (proximal maps), and gradient-flow
//! semigroups.
//!
//! Two functional families are provided: Euclidean quadratics (closed-form
//! prox) and the Dirichlet energy of a map field with pinned boundary, whose
//! prox is solved by cyclic block-coordinate minimization where every block
//! update is an exact weighted Fréchet mean.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ConvergenceFailure, Error};
use crate::flows::{exponential_formula, Sample, StepSchedule, Trajectory, DEFAULT_SEMIGROUP_CAP};
use crate::linalg::Matrix;
use crate::markov::{DirichletSpec, MapField};
use crate::scalar::Scalar;
use crate::space::{
    frechet_mean, sample_point, ConvexSet, HadamardPoint, Point, SpaceDescriptor,
    WeightedPointSet,
};
use crate::Result;

/// A convex lower-semicontinuous functional with a computable proximal map
/// `J_lambda x = argmin_y [ f(y) + d(x,y)^2 / (2 lambda) ]`.
pub trait ConvexFunctional<S: Scalar> {
    type Point: HadamardPoint<S>;

    fn value(&self, x: &Self::Point) -> Result<S, S>;

    /// `J_lambda x` to accuracy `tol`; `lambda = 0` must return `x`.
    fn prox(&self, lambda: S, x: &Self::Point, tol: S) -> Result<Self::Point, S>;
}

/// `phi(y) = (y - c)^T Q (y - c) / 2` with `Q` symmetric positive
/// semidefinite.
#[derive(Debug, Clone)]
pub struct Quadratic<S: Scalar> {
    q: Matrix<S>,
    center: Vec<S>,
    space: SpaceDescriptor,
    min_set: Option<ConvexSet<S>>,
}

impl<S: Scalar> Quadratic<S> {
    pub fn new(q: Matrix<S>, center: Vec<S>) -> Result<Self, S> {
        let n = q.rows();
        if q.cols() != n || n == 0 {
            return Err(Error::invalid("quadratic matrix must be square and non-empty"));
        }
        if center.len() != n {
            return Err(Error::invalid("quadratic center length does not match the matrix"));
        }
        if !q.is_symmetric(S::of(1e-9)) {
            return Err(Error::invalid("quadratic matrix must be symmetric"));
        }
        // lambda_min(Q) = |Q| - |c I - Q| for symmetric Q
        let norm = q.operator_norm();
        let mut shifted = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let base = if i == j { norm } else { S::zero() };
                shifted.set(i, j, base - q.get(i, j));
            }
        }
        let lambda_min = norm - shifted.operator_norm();
        if lambda_min < -S::of(1e-9) * norm.max(S::one()) {
            return Err(Error::invalid(format!(
                "quadratic matrix is not positive semidefinite (lambda_min ~ {lambda_min})"
            )));
        }
        Ok(Quadratic {
            space: SpaceDescriptor::Euclidean(n),
            q,
            center,
            min_set: None,
        })
    }

    /// Declares the (known) minimizer set, enabling projection diagnostics.
    pub fn with_min_set(mut self, set: ConvexSet<S>) -> Result<Self, S> {
        if set.space() != &self.space {
            return Err(Error::mismatch(&self.space, set.space()));
        }
        self.min_set = Some(set);
        Ok(self)
    }

    pub fn min_set(&self) -> Option<&ConvexSet<S>> {
        self.min_set.as_ref()
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }
}

impl<S: Scalar> ConvexFunctional<S> for Quadratic<S> {
    type Point = Point<S>;

    fn value(&self, x: &Point<S>) -> Result<S, S> {
        if x.space() != &self.space {
            return Err(Error::mismatch(&self.space, x.space()));
        }
        let coords = x.euclidean_coords().expect("euclidean point");
        let rel: Vec<S> = coords
            .iter()
            .zip(self.center.iter())
            .map(|(a, b)| *a - *b)
            .collect();
        let qrel = self.q.matvec(&rel);
        Ok(crate::linalg::dot(&rel, &qrel) * S::of(0.5))
    }

    fn prox(&self, lambda: S, x: &Point<S>, _tol: S) -> Result<Point<S>, S> {
        if x.space() != &self.space {
            return Err(Error::mismatch(&self.space, x.space()));
        }
        if lambda < S::zero() {
            return Err(Error::domain(format!("positive step required (got {lambda})")));
        }
        if lambda == S::zero() {
            return Ok(x.clone());
        }
        // (I + lambda Q) y = x + lambda Q c
        let n = self.q.rows();
        let mut system = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let base = if i == j { S::one() } else { S::zero() };
                system.set(i, j, base + lambda * self.q.get(i, j));
            }
        }
        let qc = self.q.matvec(&self.center);
        let coords = x.euclidean_coords().expect("euclidean point");
        let rhs: Vec<S> = coords
            .iter()
            .zip(qc.iter())
            .map(|(xi, qi)| *xi + lambda * *qi)
            .collect();
        let sol = system
            .solve(&rhs)
            .ok_or_else(|| Error::invalid("prox system is singular"))?;
        Point::euclidean(sol)
    }
}

/// Dirichlet energy `E(f) = (1/2) sum_i mu_i sum_j p_ij d(f_i, f_j)^2` with
/// the boundary (states outside `D`) pinned to the anchor field.
#[derive(Debug, Clone)]
pub struct DirichletEnergy<S: Scalar> {
    spec: DirichletSpec<S>,
    max_sweeps: u64,
}

impl<S: Scalar> DirichletEnergy<S> {
    /// Wraps a Dirichlet instance and validates geodesic convexity of the
    /// energy by midpoint sampling over random boundary-respecting fields.
    pub fn new(spec: DirichletSpec<S>) -> Result<Self, S> {
        let energy = DirichletEnergy {
            spec,
            max_sweeps: 100_000,
        };
        energy.validate_convexity()?;
        Ok(energy)
    }

    pub fn spec(&self) -> &DirichletSpec<S> {
        &self.spec
    }

    /// Energy of a field over this kernel.
    pub fn energy(&self, f: &MapField<S>) -> Result<S, S> {
        self.spec.check_field(f)?;
        let kernel = self.spec.kernel();
        let m = kernel.states();
        let mut acc = S::zero();
        for i in 0..m {
            let mu_i = kernel.mu()[i];
            for j in 0..m {
                let p_ij = kernel.transition(i, j);
                if p_ij == S::zero() || i == j {
                    continue;
                }
                let d = f.value(i).distance(f.value(j))?;
                acc += mu_i * p_ij * d * d;
            }
        }
        Ok(acc * S::of(0.5))
    }

    fn validate_convexity(&self) -> Result<(), S> {
        let mut rng = ChaCha8Rng::seed_from_u64(0xd1c1);
        let half = S::of(0.5);
        for _ in 0..16 {
            let a = self.random_interior_field(&mut rng)?;
            let b = self.random_interior_field(&mut rng)?;
            let mid = a.geodesic(&b, half)?;
            let ea = self.energy(&a)?;
            let eb = self.energy(&b)?;
            let em = self.energy(&mid)?;
            if em > half * ea + half * eb + S::of(1e-9) {
                return Err(Error::invalid(format!(
                    "energy is not midpoint convex: E(mid) = {em} > {}",
                    half * ea + half * eb
                )));
            }
        }
        Ok(())
    }

    fn random_interior_field(&self, rng: &mut ChaCha8Rng) -> Result<MapField<S>, S> {
        let anchor = self.spec.anchor();
        let mut values = Vec::with_capacity(anchor.values().len());
        for (i, v) in anchor.values().iter().enumerate() {
            if self.spec.is_interior(i) {
                values.push(sample_point(v.space(), rng, 2.0));
            } else {
                values.push(v.clone());
            }
        }
        MapField::new(self.spec.kernel_arc().clone(), values)
    }

    /// One exact block update: the minimizer over the value at `state` of
    /// the prox objective, all other values held fixed.
    fn block_update(
        &self,
        field: &MapField<S>,
        anchor_point: &Point<S>,
        state: usize,
        lambda: S,
    ) -> Result<Point<S>, S> {
        let kernel = self.spec.kernel();
        let m = kernel.states();
        let mu = kernel.mu();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for j in 0..m {
            if j == state {
                continue;
            }
            let w = mu[state] * kernel.transition(state, j) + mu[j] * kernel.transition(j, state);
            if w > S::zero() {
                points.push(field.value(j).clone());
                weights.push(lambda * w);
            }
        }
        points.push(anchor_point.clone());
        weights.push(mu[state]);
        let set = WeightedPointSet::new(points, weights)?;
        frechet_mean(&set)
    }
}

impl<S: Scalar> ConvexFunctional<S> for DirichletEnergy<S> {
    type Point = MapField<S>;

    fn value(&self, x: &MapField<S>) -> Result<S, S> {
        self.energy(x)
    }

    fn prox(&self, lambda: S, x: &MapField<S>, tol: S) -> Result<MapField<S>, S> {
        if lambda < S::zero() {
            return Err(Error::domain(format!("positive step required (got {lambda})")));
        }
        if lambda == S::zero() {
            return Ok(x.clone());
        }
        self.spec.check_boundary_agreement(x)?;
        let interior: Vec<usize> = self.spec.interior().iter().copied().collect();
        if interior.is_empty() {
            return Ok(x.clone());
        }
        let inv_two_lambda = S::of(0.5) / lambda;
        let objective = |f: &MapField<S>| -> Result<S, S> {
            let d = x.distance(f)?;
            Ok(self.energy(f)? + d * d * inv_two_lambda)
        };
        let mut field = x.clone();
        let mut obj = objective(&field)?;
        let mut history = vec![obj];
        let threshold = tol * tol;
        for _sweep in 0..self.max_sweeps {
            for &i in &interior {
                let updated = self.block_update(&field, x.value(i), i, lambda)?;
                field = field.with_value(i, updated)?;
            }
            let new_obj = objective(&field)?;
            let decrease = obj - new_obj;
            obj = new_obj;
            history.push(obj);
            if decrease <= threshold {
                return Ok(field);
            }
        }
        Err(Error::NoConvergence(
            ConvergenceFailure::new(self.max_sweeps, obj)
                .with_last(field.encode())
                .with_history(history),
        ))
    }
}

/// Gradient-flow semigroup `S_t x0 = lim (J_{t/n})^n x0` along a time grid
/// starting at 0, with the energy recorded per sample (nonincreasing in t).
pub fn gradient_flow<S, Phi>(
    phi: &Phi,
    x0: &Phi::Point,
    time_grid: &[S],
    tol: S,
) -> Result<Trajectory<S, Phi::Point>, S>
where
    S: Scalar,
    Phi: ConvexFunctional<S>,
{
    gradient_flow_with(phi, x0, time_grid, tol, 8, DEFAULT_SEMIGROUP_CAP)
}

/// [`gradient_flow`] with explicit doubling parameters.
pub fn gradient_flow_with<S, Phi>(
    phi: &Phi,
    x0: &Phi::Point,
    time_grid: &[S],
    tol: S,
    n_initial: u64,
    max_n: u64,
) -> Result<Trajectory<S, Phi::Point>, S>
where
    S: Scalar,
    Phi: ConvexFunctional<S>,
{
    if time_grid.is_empty() {
        return Err(Error::domain("time grid must be non-empty"));
    }
    if time_grid[0] != S::zero() {
        return Err(Error::domain("time grid must start at 0"));
    }
    for w in time_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::domain("time grid must be strictly increasing"));
        }
    }
    let step = |lambda: S, p: &Phi::Point, inner_tol: S| phi.prox(lambda, p, inner_tol);
    let mut samples = Vec::with_capacity(time_grid.len());
    let mut current = x0.clone();
    samples.push(Sample {
        step: 0,
        time: S::zero(),
        point: current.clone(),
        residual: S::zero(),
        fejer_distance: None,
        energy: Some(phi.value(&current)?),
    });
    for (k, w) in time_grid.windows(2).enumerate() {
        let dt = w[1] - w[0];
        let next = exponential_formula(&step, &current, dt, tol, n_initial, max_n)?;
        let moved = current.distance(&next)?;
        current = next;
        samples.push(Sample {
            step: (k + 1) as u64,
            time: w[1],
            point: current.clone(),
            residual: moved / dt,
            fejer_distance: None,
            energy: Some(phi.value(&current)?),
        });
    }
    Ok(Trajectory {
        samples,
        converged: true,
        warnings: Vec::new(),
    })
}

/// One sample of the resolvent limit probe `lambda -> J_lambda x0`.
#[derive(Debug, Clone)]
pub struct ProbeSample<S: Scalar, P> {
    pub lambda: S,
    pub point: P,
    /// Functional value at the prox point.
    pub value: S,
    /// Distance to a known target (typically the projection of `x0` onto
    /// the minimizer set), when one is supplied.
    pub distance_to_target: Option<S>,
}

/// Evaluates `J_lambda x0` along an increasing grid and reports convergence
/// diagnostics toward `target` when the minimizer set is known.
pub fn resolvent_limit_probe<S, Phi>(
    phi: &Phi,
    x0: &Phi::Point,
    lambda_grid: &[S],
    tol: S,
    target: Option<&Phi::Point>,
) -> Result<Vec<ProbeSample<S, Phi::Point>>, S>
where
    S: Scalar,
    Phi: ConvexFunctional<S>,
{
    if lambda_grid.is_empty() {
        return Err(Error::domain("lambda grid must be non-empty"));
    }
    for w in lambda_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::domain("lambda grid must be strictly increasing"));
        }
    }
    let mut out = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        if lambda < S::zero() {
            return Err(Error::domain(format!("positive step required (got {lambda})")));
        }
        let point = phi.prox(lambda, x0, tol)?;
        let value = phi.value(&point)?;
        let distance_to_target = match target {
            Some(t) => Some(point.distance(t)?),
            None => None,
        };
        out.push(ProbeSample {
            lambda,
            point,
            value,
            distance_to_target,
        });
    }
    Ok(out)
}

/// Proximal point algorithm for functional minimization:
/// `x_n = J_{lambda_n} x_{n-1}`. The relevant divergence condition here is
/// the weaker `sum lambda_n = infinity`; schedules that do not certify it
/// run with a warning. The recorded residual is the prox-step slope
/// `d(x_{n-1}, x_n) / lambda_n`, and the energy column is filled.
pub fn ppa_minimize<S, Phi>(
    phi: &Phi,
    x0: &Phi::Point,
    schedule: &StepSchedule<S>,
    max_iter: u64,
    tol: S,
) -> Result<Trajectory<S, Phi::Point>, S>
where
    S: Scalar,
    Phi: ConvexFunctional<S>,
{
    if !(tol > S::zero()) {
        return Err(Error::domain(format!("tolerance must be positive (got {tol})")));
    }
    let mut warnings = Vec::new();
    if !schedule.certifies_sum_divergent() {
        warnings.push(
            "step schedule does not certify that the sum of steps diverges; convergence is not guaranteed"
                .to_string(),
        );
    }
    let inner_tol = tol * S::of(1e-2);
    let mut samples = Vec::new();
    let mut current = x0.clone();
    // slope probe at the first step size, so the initial record is meaningful
    let probe_lambda = schedule.step(1).unwrap_or(S::one()).min(S::one());
    let probe = phi.prox(probe_lambda, &current, inner_tol)?;
    let residual0 = current.distance(&probe)? / probe_lambda;
    samples.push(Sample {
        step: 0,
        time: S::zero(),
        point: current.clone(),
        residual: residual0,
        fejer_distance: None,
        energy: Some(phi.value(&current)?),
    });
    if residual0 <= tol {
        return Ok(Trajectory {
            samples,
            converged: true,
            warnings,
        });
    }
    let mut time = S::zero();
    let mut converged = false;
    for n in 1..=max_iter {
        let lambda = match schedule.step(n) {
            Some(l) => l,
            None => {
                warnings.push(format!("explicit schedule exhausted after {} steps", n - 1));
                break;
            }
        };
        let next = phi.prox(lambda, &current, inner_tol)?;
        let moved = current.distance(&next)?;
        current = next;
        time += lambda;
        let residual = moved / lambda;
        samples.push(Sample {
            step: n,
            time,
            point: current.clone(),
            residual,
            fejer_distance: None,
            energy: Some(phi.value(&current)?),
        });
        if residual <= tol {
            converged = true;
            break;
        }
    }
    Ok(Trajectory {
        samples,
        converged,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_norm_sq(n: usize) -> Quadratic<f64> {
        Quadratic::new(Matrix::identity(n), vec![0.0; n]).unwrap()
    }

    #[test]
    fn prox_of_half_norm_squared_shrinks() {
        let phi = half_norm_sq(2);
        let x = Point::euclidean(vec![2.0, 0.0]).unwrap();
        let p = phi.prox(1.0, &x, 1e-12).unwrap();
        assert!(p.distance(&Point::euclidean(vec![1.0, 0.0]).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn prox_at_lambda_zero_is_identity() {
        let phi = half_norm_sq(2);
        let x = Point::euclidean(vec![0.3, -0.9]).unwrap();
        assert_eq!(phi.prox(0.0, &x, 1e-12).unwrap(), x);
    }

    #[test]
    fn non_psd_matrix_is_rejected() {
        let q = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, -0.5]]).unwrap();
        assert!(Quadratic::new(q, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn gradient_flow_of_quadratic_is_exponential_decay() {
        let phi = half_norm_sq(2);
        let x0 = Point::euclidean(vec![1.0, 0.0]).unwrap();
        let traj = gradient_flow(&phi, &x0, &[0.0, 1.0], 1e-6).unwrap();
        let last = traj.final_point();
        let expect = Point::euclidean(vec![(-1.0f64).exp(), 0.0]).unwrap();
        assert!(last.distance(&expect).unwrap() < 4e-6);
        let energies: Vec<f64> = traj.samples.iter().map(|s| s.energy.unwrap()).collect();
        assert!(energies.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn probe_approaches_projection_onto_min_set() {
        let phi = half_norm_sq(2);
        let x0 = Point::euclidean(vec![2.0, 0.0]).unwrap();
        let origin = Point::euclidean(vec![0.0, 0.0]).unwrap();
        let probe =
            resolvent_limit_probe(&phi, &x0, &[1.0, 10.0, 100.0, 1e6], 1e-10, Some(&origin))
                .unwrap();
        // J_lambda x0 = x0 / (1 + lambda)
        for s in &probe {
            let expect = 2.0 / (1.0 + s.lambda);
            let got = s.point.euclidean_coords().unwrap()[0];
            assert!((got - expect).abs() < 1e-9);
        }
        assert!(probe.last().unwrap().distance_to_target.unwrap() < 1e-4);
    }

    #[test]
    fn ppa_minimize_reaches_the_minimum_value() {
        let phi = half_norm_sq(2);
        let x0 = Point::euclidean(vec![3.0, 4.0]).unwrap();
        let schedule = StepSchedule::constant(1.0).unwrap();
        let traj = ppa_minimize(&phi, &x0, &schedule, 200, 1e-8).unwrap();
        assert!(traj.converged);
        assert!(*traj.samples.last().unwrap().energy.as_ref().unwrap() < 1e-6);
    }

    #[test]
    fn ppa_minimize_warns_on_fast_decaying_schedule() {
        let phi = half_norm_sq(1);
        let x0 = Point::euclidean(vec![1.0]).unwrap();
        let schedule = StepSchedule::power(1.0, 1.5).unwrap();
        let traj = ppa_minimize(&phi, &x0, &schedule, 10, 1e-12).unwrap();
        assert!(!traj.warnings.is_empty());
    }
}
