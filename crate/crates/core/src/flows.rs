//! Discrete and continuous flows generated by a nonexpansive map: the
//! proximal point algorithm `x_n = R_{lambda_n} x_{n-1}` and the
//! exponential-formula semigroup `T_t x = lim (R_{t/n})^n x`.

use std::io::{self, Write};

use crate::error::{ConvergenceFailure, Error};
use crate::operators::{resolvent_with, Nonexpansive, DEFAULT_RESOLVENT_CAP};
use crate::scalar::Scalar;
use crate::space::HadamardPoint;
use crate::Result;

/// Generator of positive step sizes, with certificates for the divergence
/// conditions the convergence theory needs.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSchedule<S: Scalar> {
    /// `lambda_n = lambda`.
    Constant(S),
    /// `lambda_n = scale * n^(-exponent)`.
    Power { scale: S, exponent: S },
    /// A finite explicit list; divergence is unknown, so uncertified.
    Explicit(Vec<S>),
}

impl<S: Scalar> StepSchedule<S> {
    pub fn constant(step: S) -> Result<Self, S> {
        if !(step > S::zero()) || !step.is_finite() {
            return Err(Error::domain(format!("positive step required (got {step})")));
        }
        Ok(StepSchedule::Constant(step))
    }

    pub fn power(scale: S, exponent: S) -> Result<Self, S> {
        if !(scale > S::zero()) || !scale.is_finite() || !exponent.is_finite() {
            return Err(Error::domain(format!(
                "positive step required (power schedule scale {scale})"
            )));
        }
        Ok(StepSchedule::Power { scale, exponent })
    }

    pub fn explicit(steps: Vec<S>) -> Result<Self, S> {
        if steps.is_empty() {
            return Err(Error::domain("explicit schedule must be non-empty"));
        }
        if steps.iter().any(|s| !(*s > S::zero()) || !s.is_finite()) {
            return Err(Error::domain("positive step required in explicit schedule"));
        }
        Ok(StepSchedule::Explicit(steps))
    }

    /// `lambda_n` for `n >= 1`; `None` once an explicit list is exhausted.
    pub fn step(&self, n: u64) -> Option<S> {
        match self {
            StepSchedule::Constant(s) => Some(*s),
            StepSchedule::Power { scale, exponent } => {
                Some(*scale * S::of(n as f64).powf(-*exponent))
            }
            StepSchedule::Explicit(list) => list.get((n - 1) as usize).copied(),
        }
    }

    /// True when `sum lambda_n^2 = infinity` is guaranteed (the fixed-point
    /// iteration hypothesis).
    pub fn certifies_sum_sq_divergent(&self) -> bool {
        match self {
            StepSchedule::Constant(_) => true,
            StepSchedule::Power { exponent, .. } => *exponent <= S::of(0.5),
            StepSchedule::Explicit(_) => false,
        }
    }

    /// True when `sum lambda_n = infinity` is guaranteed (the weaker
    /// condition used by functional minimization).
    pub fn certifies_sum_divergent(&self) -> bool {
        match self {
            StepSchedule::Constant(_) => true,
            StepSchedule::Power { exponent, .. } => *exponent <= S::one(),
            StepSchedule::Explicit(_) => false,
        }
    }
}

/// One recorded state of a flow.
#[derive(Debug, Clone)]
pub struct Sample<S: Scalar, P> {
    pub step: u64,
    /// Flow time: cumulative step sum for discrete flows, grid time for
    /// semigroups.
    pub time: S,
    pub point: P,
    /// `d(x, F x)` (or the functional analog) at this sample.
    pub residual: S,
    pub fejer_distance: Option<S>,
    pub energy: Option<S>,
}

/// A recorded flow: samples in time order plus convergence metadata.
#[derive(Debug, Clone)]
pub struct Trajectory<S: Scalar, P: HadamardPoint<S>> {
    pub samples: Vec<Sample<S, P>>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl<S: Scalar, P: HadamardPoint<S>> Trajectory<S, P> {
    pub fn final_point(&self) -> &P {
        &self.samples.last().expect("trajectory is never empty").point
    }

    pub fn final_residual(&self) -> S {
        self.samples.last().expect("trajectory is never empty").residual
    }

    /// Fills the Fejér column with distances to `reference`.
    pub fn record_fejer_distances(&mut self, reference: &P) -> Result<(), S> {
        for s in &mut self.samples {
            s.fejer_distance = Some(reference.distance(&s.point)?);
        }
        Ok(())
    }

    /// Writes the line records: a header row, then one comma-separated
    /// `step,time,point,residual,fejer_distance` record per sample, with an
    /// `energy` column appended when any sample carries one.
    pub fn write_records<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let has_energy = self.samples.iter().any(|s| s.energy.is_some());
        if has_energy {
            writeln!(out, "step,time,point,residual,fejer_distance,energy")?;
        } else {
            writeln!(out, "step,time,point,residual,fejer_distance")?;
        }
        for s in &self.samples {
            let fejer = s
                .fejer_distance
                .map(|d| d.to_string())
                .unwrap_or_default();
            if has_energy {
                let energy = s.energy.map(|e| e.to_string()).unwrap_or_default();
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    s.step,
                    s.time,
                    s.point.encode(),
                    s.residual,
                    fejer,
                    energy
                )?;
            } else {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    s.step,
                    s.time,
                    s.point.encode(),
                    s.residual,
                    fejer
                )?;
            }
        }
        Ok(())
    }
}

/// Proximal point algorithm: iterates `x_n = R_{lambda_n} x_{n-1}` until the
/// residual `d(x_n, F x_n)` drops to `tol` or the budget runs out. Hitting
/// the budget yields a partial trajectory flagged non-converged, not an
/// error. Schedules without a certified `sum lambda_n^2 = infinity` run with
/// a warning.
pub fn ppa<S, F>(
    f: &F,
    x0: &F::Point,
    schedule: &StepSchedule<S>,
    max_iter: u64,
    tol: S,
) -> Result<Trajectory<S, F::Point>, S>
where
    S: Scalar,
    F: Nonexpansive<S> + ?Sized,
{
    if !(tol > S::zero()) {
        return Err(Error::domain(format!("tolerance must be positive (got {tol})")));
    }
    let mut warnings = Vec::new();
    if !schedule.certifies_sum_sq_divergent() {
        warnings.push(
            "step schedule does not certify that the sum of squared steps diverges; convergence is not guaranteed"
                .to_string(),
        );
    }
    let inner_tol = tol * S::of(1e-2);
    let mut samples = Vec::new();
    let mut current = x0.clone();
    let residual0 = current.distance(&f.apply(&current)?)?;
    samples.push(Sample {
        step: 0,
        time: S::zero(),
        point: current.clone(),
        residual: residual0,
        fejer_distance: None,
        energy: None,
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
        let budget = resolvent_budget(lambda);
        let res = resolvent_with(f, lambda, &current, inner_tol, None, budget)?;
        current = res.point;
        time += lambda;
        let residual = current.distance(&f.apply(&current)?)?;
        samples.push(Sample {
            step: n,
            time,
            point: current.clone(),
            residual,
            fejer_distance: None,
            energy: None,
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

pub(crate) fn resolvent_budget<S: Scalar>(lambda: S) -> u64 {
    let lam = lambda.to_f64_lossy();
    if lam.is_finite() && lam * 80.0 > DEFAULT_RESOLVENT_CAP as f64 {
        (lam * 80.0).ceil() as u64
    } else {
        DEFAULT_RESOLVENT_CAP
    }
}

/// Parameters for one semigroup evaluation `T_t x`.
#[derive(Debug, Clone, Copy)]
pub struct SemigroupQuery<S: Scalar> {
    pub t: S,
    pub tol: S,
    /// First `n` tried by the doubling scheme.
    pub n_initial: u64,
    /// Doubling stops (with a convergence error) once `n` would exceed this.
    pub max_n: u64,
}

pub const DEFAULT_SEMIGROUP_CAP: u64 = 1 << 20;

impl<S: Scalar> SemigroupQuery<S> {
    pub fn new(t: S, tol: S) -> Result<Self, S> {
        if !(t >= S::zero()) || !t.is_finite() {
            return Err(Error::domain(format!("semigroup time must be non-negative (got {t})")));
        }
        if !(tol > S::zero()) {
            return Err(Error::domain(format!("tolerance must be positive (got {tol})")));
        }
        Ok(SemigroupQuery {
            t,
            tol,
            n_initial: 8,
            max_n: DEFAULT_SEMIGROUP_CAP,
        })
    }

    pub fn with_initial(mut self, n: u64) -> Self {
        self.n_initial = n.max(1);
        self
    }

    pub fn with_cap(mut self, max_n: u64) -> Self {
        self.max_n = max_n;
        self
    }
}

/// Shared n-doubling core of the exponential formula: `step` is one backward
/// step (a resolvent or a prox) at the given step size and inner tolerance.
/// Inner tolerances are `tol/(4n)` so the accumulated inner error along a
/// chain of nonexpansive steps stays below `tol/4`.
pub(crate) fn exponential_formula<S, P, Step>(
    step: &Step,
    x: &P,
    t: S,
    tol: S,
    n_initial: u64,
    max_n: u64,
) -> Result<P, S>
where
    S: Scalar,
    P: HadamardPoint<S>,
    Step: Fn(S, &P, S) -> Result<P, S>,
{
    if t == S::zero() {
        return Ok(x.clone());
    }
    let chain = |n: u64| -> Result<P, S> {
        let lambda = t / S::of(n as f64);
        let inner_tol = tol / (S::of(4.0) * S::of(n as f64));
        let mut y = x.clone();
        for _ in 0..n {
            y = step(lambda, &y, inner_tol)?;
        }
        Ok(y)
    };
    let mut n = n_initial.max(1);
    let mut prev = chain(n)?;
    loop {
        let doubled = n.saturating_mul(2);
        if doubled > max_n {
            let gap = S::nan();
            return Err(Error::NoConvergence(
                ConvergenceFailure::new(n, gap).with_last(prev.encode()),
            ));
        }
        let cur = chain(doubled)?;
        let gap = prev.distance(&cur)?;
        if gap <= tol {
            return Ok(cur);
        }
        if doubled == max_n || doubled.saturating_mul(2) > max_n {
            return Err(Error::NoConvergence(
                ConvergenceFailure::new(doubled, gap).with_last(cur.encode()),
            ));
        }
        prev = cur;
        n = doubled;
    }
}

/// `T_t x`: evaluates `(R_{t/n})^n x` for `n = n_initial, 2 n_initial, ...`
/// until successive evaluations agree to `q.tol`, returning the last one.
pub fn semigroup_apply<S, F>(f: &F, x: &F::Point, q: &SemigroupQuery<S>) -> Result<F::Point, S>
where
    S: Scalar,
    F: Nonexpansive<S> + ?Sized,
{
    let step = |lambda: S, p: &F::Point, inner_tol: S| {
        resolvent_with(f, lambda, p, inner_tol, None, resolvent_budget(lambda)).map(|r| r.point)
    };
    exponential_formula(&step, x, q.t, q.tol, q.n_initial, q.max_n)
}

/// Evaluates `T_t x0` along a time grid starting at 0, stepping incrementally
/// from the previous grid point via the semigroup property
/// `T_{s+t} = T_s T_t`. Residuals `d(T_t x0, F T_t x0)` are recorded.
pub fn semigroup_trajectory<S, F>(
    f: &F,
    x0: &F::Point,
    time_grid: &[S],
    tol: S,
) -> Result<Trajectory<S, F::Point>, S>
where
    S: Scalar,
    F: Nonexpansive<S> + ?Sized,
{
    semigroup_trajectory_with(f, x0, time_grid, tol, 8, DEFAULT_SEMIGROUP_CAP)
}

/// [`semigroup_trajectory`] with explicit doubling parameters.
pub fn semigroup_trajectory_with<S, F>(
    f: &F,
    x0: &F::Point,
    time_grid: &[S],
    tol: S,
    n_initial: u64,
    max_n: u64,
) -> Result<Trajectory<S, F::Point>, S>
where
    S: Scalar,
    F: Nonexpansive<S> + ?Sized,
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
    let mut samples = Vec::with_capacity(time_grid.len());
    let mut current = x0.clone();
    let residual0 = current.distance(&f.apply(&current)?)?;
    samples.push(Sample {
        step: 0,
        time: S::zero(),
        point: current.clone(),
        residual: residual0,
        fejer_distance: None,
        energy: None,
    });
    for (k, w) in time_grid.windows(2).enumerate() {
        let dt = w[1] - w[0];
        let q = SemigroupQuery::new(dt, tol)?
            .with_initial(n_initial)
            .with_cap(max_n);
        current = semigroup_apply(f, &current, &q)?;
        let residual = current.distance(&f.apply(&current)?)?;
        samples.push(Sample {
            step: (k + 1) as u64,
            time: w[1],
            point: current.clone(),
            residual,
            fejer_distance: None,
            energy: None,
        });
    }
    Ok(Trajectory {
        samples,
        converged: true,
        warnings: Vec::new(),
    })
}

/// Outcome of a Fejér monotonicity check along a trajectory.
#[derive(Debug, Clone)]
pub struct FejerReport<S: Scalar> {
    pub pass: bool,
    /// Largest observed excess `d(ref, x_{n+1}) - d(ref, x_n) (1 + 1e-9)`,
    /// clamped at zero.
    pub max_violation: S,
    pub distances: Vec<S>,
}

/// Verifies `d(ref, x_{n+1}) <= d(ref, x_n) (1 + 1e-9)` along the trajectory.
/// The reference must be a certified fixed point: `d(ref, F ref) <= tol`.
pub fn fejer_check<S, F>(
    f: &F,
    trajectory: &Trajectory<S, F::Point>,
    reference: &F::Point,
    tol: S,
) -> Result<FejerReport<S>, S>
where
    S: Scalar,
    F: Nonexpansive<S> + ?Sized,
{
    let ref_residual = reference.distance(&f.apply(reference)?)?;
    if ref_residual > tol {
        return Err(Error::domain(format!(
            "reference point is not fixed within tolerance (residual {ref_residual})"
        )));
    }
    let mut distances = Vec::with_capacity(trajectory.samples.len());
    for s in &trajectory.samples {
        distances.push(reference.distance(&s.point)?);
    }
    let slack = S::one() + S::of(1e-9);
    let mut max_violation = S::zero();
    for w in distances.windows(2) {
        let excess = w[1] - w[0] * slack;
        if excess > max_violation {
            max_violation = excess;
        }
    }
    Ok(FejerReport {
        pass: max_violation <= S::zero(),
        max_violation,
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::operators::NonexpansiveMap;
    use crate::space::Point;

    fn rot90() -> NonexpansiveMap<f64> {
        NonexpansiveMap::linear(
            Matrix::from_rows(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn schedule_certificates() {
        let c = StepSchedule::constant(1.0f64).unwrap();
        assert!(c.certifies_sum_sq_divergent());
        let p = StepSchedule::power(1.0f64, 0.5).unwrap();
        assert!(p.certifies_sum_sq_divergent());
        let p2 = StepSchedule::power(1.0f64, 0.75).unwrap();
        assert!(!p2.certifies_sum_sq_divergent());
        assert!(p2.certifies_sum_divergent());
        let e = StepSchedule::explicit(vec![1.0f64, 0.5]).unwrap();
        assert!(!e.certifies_sum_sq_divergent());
    }

    #[test]
    fn schedule_rejects_nonpositive_steps() {
        assert!(StepSchedule::constant(0.0f64).is_err());
        assert!(StepSchedule::explicit(vec![1.0f64, -2.0]).is_err());
    }

    #[test]
    fn ppa_rot90_first_steps_match_linear_oracle() {
        let f = rot90();
        let x0 = Point::euclidean(vec![1.0, 0.0]).unwrap();
        let schedule = StepSchedule::constant(1.0).unwrap();
        let traj = ppa(&f, &x0, &schedule, 100, 1e-10).unwrap();
        assert!(traj.converged);
        // x1 = (1/5)(2,1); x2 = (1/5)^2 (2*2-1, 2+1*2) = (3/25, 4/25)
        let x1 = &traj.samples[1].point;
        assert!(x1.distance(&Point::euclidean(vec![0.4, 0.2]).unwrap()).unwrap() < 1e-8);
        let x2 = &traj.samples[2].point;
        assert!(x2.distance(&Point::euclidean(vec![0.12, 0.16]).unwrap()).unwrap() < 1e-8);
        // limit is the only fixed point, the origin
        let origin = Point::euclidean(vec![0.0, 0.0]).unwrap();
        assert!(traj.final_point().distance(&origin).unwrap() < 1e-9);
    }

    #[test]
    fn ppa_at_a_fixed_point_stops_immediately() {
        let f = NonexpansiveMap::constant(Point::euclidean(vec![2.0, 2.0]).unwrap()).unwrap();
        let x0 = Point::euclidean(vec![2.0, 2.0]).unwrap();
        let schedule = StepSchedule::constant(1.0).unwrap();
        let traj = ppa(&f, &x0, &schedule, 100, 1e-10).unwrap();
        assert!(traj.converged);
        assert_eq!(traj.samples.len(), 1);
    }

    #[test]
    fn uncertified_schedule_warns() {
        let f = rot90();
        let x0 = Point::euclidean(vec![1.0, 0.0]).unwrap();
        let schedule = StepSchedule::explicit(vec![1.0; 50]).unwrap();
        let traj = ppa(&f, &x0, &schedule, 100, 1e-8).unwrap();
        assert!(!traj.warnings.is_empty());
    }

    #[test]
    fn ppa_residuals_are_nonincreasing() {
        let f = rot90();
        let x0 = Point::euclidean(vec![1.0, 0.0]).unwrap();
        let schedule = StepSchedule::power(1.0, 0.5).unwrap();
        let traj = ppa(&f, &x0, &schedule, 200, 1e-9).unwrap();
        for w in traj.samples.windows(2) {
            assert!(w[1].residual <= w[0].residual + 1e-9);
        }
    }

    #[test]
    fn semigroup_of_constant_map_contracts_exponentially() {
        let f = NonexpansiveMap::constant(Point::euclidean(vec![0.0, 0.0]).unwrap()).unwrap();
        let x = Point::euclidean(vec![1.0, 0.0]).unwrap();
        let q = SemigroupQuery::new(1.0, 1e-6).unwrap();
        let y = semigroup_apply(&f, &x, &q).unwrap();
        let expect = Point::euclidean(vec![(-1.0f64).exp(), 0.0]).unwrap();
        assert!(y.distance(&expect).unwrap() < 3e-6);
    }

    #[test]
    fn semigroup_at_time_zero_is_identity() {
        let f = rot90();
        let x = Point::euclidean(vec![0.3, -0.7]).unwrap();
        let q = SemigroupQuery::new(0.0, 1e-8).unwrap();
        assert_eq!(semigroup_apply(&f, &x, &q).unwrap(), x);
    }

    #[test]
    fn semigroup_rot90_matches_matrix_exponential_value() {
        let f = rot90();
        let x = Point::euclidean(vec![1.0, 0.0]).unwrap();
        let q = SemigroupQuery::new(1.0, 1e-7).unwrap().with_cap(1 << 24);
        let y = semigroup_apply(&f, &x, &q).unwrap();
        // e^{-t(I-A)} x = e^{-1} (cos 1, sin 1)
        let e = (-1.0f64).exp();
        let expect = Point::euclidean(vec![e * 1.0f64.cos(), e * 1.0f64.sin()]).unwrap();
        assert!(y.distance(&expect).unwrap() < 5e-7);
    }

    #[test]
    fn trajectory_grid_must_start_at_zero() {
        let f = rot90();
        let x = Point::euclidean(vec![1.0, 0.0]).unwrap();
        let err = semigroup_trajectory(&f, &x, &[1.0, 2.0], 1e-6).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn projection_semigroup_decays_and_passes_fejer() {
        let line = crate::space::ConvexSet::affine_subspace(
            Point::euclidean(vec![0.0, 0.0]).unwrap(),
            vec![vec![1.0, 0.0]],
        )
        .unwrap();
        let f = NonexpansiveMap::projection(line).unwrap();
        let x0 = Point::euclidean(vec![0.0, 1.0]).unwrap();
        let traj = semigroup_trajectory(&f, &x0, &[0.0, 1.0, 2.0, 4.0], 1e-6).unwrap();
        // y-coordinate follows e^{-t}
        for s in &traj.samples {
            let y: f64 = s.point.euclidean_coords().unwrap()[1];
            assert!((y - (-s.time).exp()).abs() < 1e-5);
        }
        for w in traj.samples.windows(2) {
            assert!(w[1].residual <= w[0].residual + 1e-9);
        }
        let reference = Point::euclidean(vec![0.0, 0.0]).unwrap();
        let report = fejer_check(&f, &traj, &reference, 1e-10).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn fejer_rejects_uncertified_reference() {
        let f = rot90();
        let x0 = Point::euclidean(vec![1.0, 0.0]).unwrap();
        let schedule = StepSchedule::constant(1.0).unwrap();
        let traj = ppa(&f, &x0, &schedule, 10, 1e-6).unwrap();
        let bad_ref = Point::euclidean(vec![1.0, 1.0]).unwrap();
        assert!(fejer_check(&f, &traj, &bad_ref, 1e-8).is_err());
    }

    #[test]
    fn trajectory_records_round_trip_through_writer() {
        let f = rot90();
        let x0 = Point::euclidean(vec![1.0, 0.0]).unwrap();
        let schedule = StepSchedule::constant(1.0).unwrap();
        let mut traj = ppa(&f, &x0, &schedule, 5, 1e-12).unwrap();
        traj.record_fejer_distances(&Point::euclidean(vec![0.0, 0.0]).unwrap())
            .unwrap();
        let mut buf = Vec::new();
        traj.write_records(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "step,time,point,residual,fejer_distance");
        assert!(lines.next().unwrap().starts_with("0,0,euclidean:1,0,"));
    }
}
