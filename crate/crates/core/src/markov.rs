//! Finite symmetric Markov kernels and the nonlinear heat-flow layer.
//!
//! A kernel is a row-stochastic matrix symmetric with respect to a positive
//! weight measure. A [`MapField`] assigns a target-space point to every
//! state; fields over one kernel form an L2 Hadamard space under the
//! mu-weighted metric `d_2`, with pointwise geodesics. The nonlinear Markov
//! operator takes statewise Fréchet means under the kernel weights; its
//! fixed points are harmonic maps, and freezing the states outside a set `D`
//! yields the Dirichlet operator whose fixed points solve the Dirichlet
//! problem. The discrete heat flow is the proximal point algorithm for that
//! operator and the continuous one is its exponential-formula semigroup.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::energy::DirichletEnergy;
use crate::error::{ConvergenceFailure, Error};
use crate::flows::{
    ppa, semigroup_trajectory_with, StepSchedule, Trajectory, DEFAULT_SEMIGROUP_CAP,
};
use crate::linalg::Matrix;
use crate::operators::Nonexpansive;
use crate::scalar::Scalar;
use crate::space::{frechet_mean, HadamardPoint, Point, SpaceDescriptor, WeightedPointSet};
use crate::Result;

const KERNEL_TOL: f64 = 1e-12;

/// Finite-state Markov kernel: row-stochastic transition matrix `p` plus a
/// positive weight `mu` per state, with `p_ij mu_i = p_ji mu_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel<S: Scalar> {
    p: Matrix<S>,
    mu: Vec<S>,
}

impl<S: Scalar> MarkovKernel<S> {
    pub fn new(rows: Vec<Vec<S>>, mu: Vec<S>) -> Result<Self, S> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::invalid("kernel needs at least one state"));
        }
        let p = Matrix::from_rows(rows)
            .filter(|p| p.cols() == m)
            .ok_or_else(|| Error::invalid("transition matrix must be square"))?;
        if mu.len() != m {
            return Err(Error::invalid("weight vector length does not match the state count"));
        }
        if mu.iter().any(|w| !(*w > S::zero()) || !w.is_finite()) {
            return Err(Error::invalid("state weights must be positive"));
        }
        let tol = S::of(KERNEL_TOL);
        for i in 0..m {
            let mut sum = S::zero();
            for j in 0..m {
                let v = p.get(i, j);
                if v < S::zero() || !v.is_finite() {
                    return Err(Error::invalid(format!(
                        "transition p[{}][{}] = {v} is negative",
                        i + 1,
                        j + 1
                    )));
                }
                sum += v;
            }
            if (sum - S::one()).abs() > tol {
                return Err(Error::invalid(format!(
                    "row {} sums to {sum}, not 1",
                    i + 1
                )));
            }
        }
        for i in 0..m {
            for j in (i + 1)..m {
                let lhs = p.get(i, j) * mu[i];
                let rhs = p.get(j, i) * mu[j];
                if (lhs - rhs).abs() > tol {
                    return Err(Error::invalid(format!(
                        "kernel is not symmetric w.r.t. mu at ({}, {}): {lhs} vs {rhs}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(MarkovKernel { p, mu })
    }

    /// Symmetrizes a near-symmetric kernel: the edge weights become
    /// `w_ij = (p_ij mu_i + p_ji mu_j) / 2` and the measure is adjusted to
    /// the row sums of `w`, which restores exact row-stochasticity and
    /// mu-symmetry. Returns the kernel plus whether anything changed beyond
    /// rounding noise.
    pub fn new_symmetrized(rows: Vec<Vec<S>>, mu: Vec<S>) -> Result<(Self, bool), S> {
        let m = rows.len();
        if m == 0 || rows.iter().any(|r| r.len() != m) || mu.len() != m {
            return Err(Error::invalid("transition matrix must be square"));
        }
        let half = S::of(0.5);
        let mut w = vec![vec![S::zero(); m]; m];
        for i in 0..m {
            for j in 0..m {
                w[i][j] = half * (rows[i][j] * mu[i] + rows[j][i] * mu[j]);
            }
        }
        let mut new_mu = Vec::with_capacity(m);
        let mut new_rows = vec![vec![S::zero(); m]; m];
        for i in 0..m {
            let total: S = w[i].iter().fold(S::zero(), |acc, v| acc + *v);
            if !(total > S::zero()) {
                return Err(Error::invalid(format!(
                    "state {} has no transition mass to symmetrize",
                    i + 1
                )));
            }
            for j in 0..m {
                new_rows[i][j] = w[i][j] / total;
            }
            new_mu.push(total);
        }
        let mut adjusted = false;
        'outer: for i in 0..m {
            for j in 0..m {
                if (new_rows[i][j] - rows[i][j]).abs() > S::of(1e-15) {
                    adjusted = true;
                    break 'outer;
                }
            }
        }
        Ok((MarkovKernel::new(new_rows, new_mu)?, adjusted))
    }

    pub fn states(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[S] {
        &self.mu
    }

    pub fn transition(&self, i: usize, j: usize) -> S {
        self.p.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[S] {
        self.p.row(i)
    }
}

/// An element of `L^2(D, H, h)`: one target-space point per kernel state.
#[derive(Debug, Clone, PartialEq)]
pub struct MapField<S: Scalar> {
    kernel: Arc<MarkovKernel<S>>,
    values: Vec<Point<S>>,
}

impl<S: Scalar> MapField<S> {
    pub fn new(kernel: Arc<MarkovKernel<S>>, values: Vec<Point<S>>) -> Result<Self, S> {
        if values.len() != kernel.states() {
            return Err(Error::invalid(format!(
                "{} values for a kernel with {} states",
                values.len(),
                kernel.states()
            )));
        }
        let space = values[0].space().clone();
        for v in &values[1..] {
            if v.space() != &space {
                return Err(Error::mismatch(&space, v.space()));
            }
        }
        Ok(MapField { kernel, values })
    }

    pub fn kernel(&self) -> &MarkovKernel<S> {
        &self.kernel
    }

    pub fn kernel_arc(&self) -> &Arc<MarkovKernel<S>> {
        &self.kernel
    }

    pub fn values(&self) -> &[Point<S>] {
        &self.values
    }

    pub fn value(&self, state: usize) -> &Point<S> {
        &self.values[state]
    }

    pub fn target_space(&self) -> &SpaceDescriptor {
        self.values[0].space()
    }

    pub fn with_value(&self, state: usize, value: Point<S>) -> Result<Self, S> {
        if value.space() != self.target_space() {
            return Err(Error::mismatch(self.target_space(), value.space()));
        }
        let mut values = self.values.clone();
        values[state] = value;
        Ok(MapField {
            kernel: self.kernel.clone(),
            values,
        })
    }

    fn check_compatible(&self, other: &Self) -> Result<(), S> {
        if !Arc::ptr_eq(&self.kernel, &other.kernel) && *self.kernel != *other.kernel {
            return Err(Error::domain("fields live over different kernels"));
        }
        if self.target_space() != other.target_space() {
            return Err(Error::mismatch(self.target_space(), other.target_space()));
        }
        Ok(())
    }
}

impl<S: Scalar> HadamardPoint<S> for MapField<S> {
    /// The mu-weighted L2 metric `d_2`.
    fn distance(&self, other: &Self) -> Result<S, S> {
        self.check_compatible(other)?;
        let mut acc = S::zero();
        for ((a, b), w) in self
            .values
            .iter()
            .zip(other.values.iter())
            .zip(self.kernel.mu().iter())
        {
            let d = a.distance(b)?;
            acc += *w * d * d;
        }
        Ok(acc.sqrt())
    }

    /// Pointwise geodesic; this is the geodesic of the L2 structure.
    fn geodesic(&self, other: &Self, t: S) -> Result<Self, S> {
        self.check_compatible(other)?;
        let mut values = Vec::with_capacity(self.values.len());
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            values.push(a.geodesic(b, t)?);
        }
        Ok(MapField {
            kernel: self.kernel.clone(),
            values,
        })
    }

    /// Product-point form, one component per state.
    fn encode(&self) -> String {
        let body: Vec<String> = self
            .values
            .iter()
            .map(|v| format!("({})", v.encode()))
            .collect();
        format!("product:{}", body.join(";"))
    }
}

/// `d_2(f, g) = (sum_i mu_i d(f_i, g_i)^2)^(1/2)`.
pub fn d2<S: Scalar>(f: &MapField<S>, g: &MapField<S>) -> Result<S, S> {
    HadamardPoint::distance(f, g)
}

/// The nonlinear Markov operator: statewise Fréchet mean of the field under
/// the kernel's transition weights (zero-weight states excluded).
pub fn markov_apply<S: Scalar>(kernel: &MarkovKernel<S>, f: &MapField<S>) -> Result<MapField<S>, S> {
    if kernel != f.kernel() {
        return Err(Error::domain("field does not belong to this kernel"));
    }
    let m = kernel.states();
    let mut values = Vec::with_capacity(m);
    for i in 0..m {
        values.push(markov_state_mean(kernel, f, i)?);
    }
    MapField::new(f.kernel.clone(), values)
}

fn markov_state_mean<S: Scalar>(
    kernel: &MarkovKernel<S>,
    f: &MapField<S>,
    state: usize,
) -> Result<Point<S>, S> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (j, &w) in kernel.row(state).iter().enumerate() {
        if w > S::zero() {
            points.push(f.value(j).clone());
            weights.push(w);
        }
    }
    if points.is_empty() {
        return Err(Error::invalid(format!(
            "state {} has an all-zero transition row",
            state + 1
        )));
    }
    let set = WeightedPointSet::new(points, weights)?;
    frechet_mean(&set)
}

/// A Dirichlet problem instance: the kernel, the interior state set `D`, and
/// the anchor field `h` carrying the boundary data.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSpec<S: Scalar> {
    kernel: Arc<MarkovKernel<S>>,
    interior: BTreeSet<usize>,
    anchor: MapField<S>,
}

impl<S: Scalar> DirichletSpec<S> {
    pub fn new(
        kernel: Arc<MarkovKernel<S>>,
        interior: BTreeSet<usize>,
        anchor: MapField<S>,
    ) -> Result<Self, S> {
        if !Arc::ptr_eq(&kernel, &anchor.kernel) && *kernel != *anchor.kernel {
            return Err(Error::domain("anchor field does not belong to this kernel"));
        }
        if let Some(&max) = interior.iter().next_back() {
            if max >= kernel.states() {
                return Err(Error::invalid(format!(
                    "interior state {} out of range (kernel has {} states)",
                    max + 1,
                    kernel.states()
                )));
            }
        }
        Ok(DirichletSpec {
            kernel,
            interior,
            anchor,
        })
    }

    pub fn kernel(&self) -> &MarkovKernel<S> {
        &self.kernel
    }

    pub fn kernel_arc(&self) -> &Arc<MarkovKernel<S>> {
        &self.kernel
    }

    pub fn interior(&self) -> &BTreeSet<usize> {
        &self.interior
    }

    pub fn is_interior(&self, state: usize) -> bool {
        self.interior.contains(&state)
    }

    pub fn anchor(&self) -> &MapField<S> {
        &self.anchor
    }

    pub(crate) fn check_field(&self, f: &MapField<S>) -> Result<(), S> {
        self.anchor.check_compatible(f)
    }

    /// Fields entering the Dirichlet machinery must agree with the anchor on
    /// the boundary exactly; disagreement is an error, not a silent fix.
    pub fn check_boundary_agreement(&self, f: &MapField<S>) -> Result<(), S> {
        self.check_field(f)?;
        for i in 0..self.kernel.states() {
            if !self.is_interior(i) && f.value(i) != self.anchor.value(i) {
                return Err(Error::domain(format!(
                    "boundary mismatch: field disagrees with the boundary data at state {}",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// `P_D`: the Markov operator on interior states, the identity elsewhere.
/// Nonexpansive on `(L^2(D,H,h), d_2)`, so the whole resolvent/flow
/// machinery applies to it unchanged.
#[derive(Debug, Clone)]
pub struct DirichletOperator<S: Scalar> {
    spec: DirichletSpec<S>,
}

impl<S: Scalar> DirichletOperator<S> {
    pub fn new(spec: DirichletSpec<S>) -> Self {
        DirichletOperator { spec }
    }

    pub fn spec(&self) -> &DirichletSpec<S> {
        &self.spec
    }
}

impl<S: Scalar> Nonexpansive<S> for DirichletOperator<S> {
    type Point = MapField<S>;

    fn apply(&self, f: &MapField<S>) -> Result<MapField<S>, S> {
        self.spec.check_boundary_agreement(f)?;
        let kernel = self.spec.kernel();
        let m = kernel.states();
        let mut values = Vec::with_capacity(m);
        for i in 0..m {
            if self.spec.is_interior(i) {
                values.push(markov_state_mean(kernel, f, i)?);
            } else {
                values.push(f.value(i).clone());
            }
        }
        MapField::new(f.kernel.clone(), values)
    }
}

/// The full nonlinear Markov operator `P` as a nonexpansive map (every state
/// free; equivalently `P_D` with `D` = all states).
#[derive(Debug, Clone)]
pub struct MarkovOperator<S: Scalar> {
    kernel: Arc<MarkovKernel<S>>,
}

impl<S: Scalar> MarkovOperator<S> {
    pub fn new(kernel: Arc<MarkovKernel<S>>) -> Self {
        MarkovOperator { kernel }
    }
}

impl<S: Scalar> Nonexpansive<S> for MarkovOperator<S> {
    type Point = MapField<S>;

    fn apply(&self, f: &MapField<S>) -> Result<MapField<S>, S> {
        markov_apply(&self.kernel, f)
    }
}

/// Applies `P_D` once.
pub fn dirichlet_apply<S: Scalar>(
    spec: &DirichletSpec<S>,
    f: &MapField<S>,
) -> Result<MapField<S>, S> {
    DirichletOperator::new(spec.clone()).apply(f)
}

/// Discrete-time heat flow: the proximal point algorithm with `F = P_D`,
/// run in the L2 field metric. Terminates once `d_2(f, P_D f) <= tol`.
pub fn solve_dirichlet_ppa<S: Scalar>(
    spec: &DirichletSpec<S>,
    f0: &MapField<S>,
    schedule: &StepSchedule<S>,
    max_iter: u64,
    tol: S,
) -> Result<Trajectory<S, MapField<S>>, S> {
    let op = DirichletOperator::new(spec.clone());
    ppa(&op, f0, schedule, max_iter, tol)
}

/// Continuous-time heat flow: the exponential-formula semigroup with
/// `F = P_D`, sampled along a time grid starting at 0.
pub fn solve_dirichlet_flow<S: Scalar>(
    spec: &DirichletSpec<S>,
    f0: &MapField<S>,
    time_grid: &[S],
    tol: S,
) -> Result<Trajectory<S, MapField<S>>, S> {
    solve_dirichlet_flow_with(spec, f0, time_grid, tol, 8, DEFAULT_SEMIGROUP_CAP)
}

/// [`solve_dirichlet_flow`] with explicit doubling parameters.
pub fn solve_dirichlet_flow_with<S: Scalar>(
    spec: &DirichletSpec<S>,
    f0: &MapField<S>,
    time_grid: &[S],
    tol: S,
    n_initial: u64,
    max_n: u64,
) -> Result<Trajectory<S, MapField<S>>, S> {
    let op = DirichletOperator::new(spec.clone());
    semigroup_trajectory_with(&op, f0, time_grid, tol, n_initial, max_n)
}

/// Spectral bound `lambda_k = 1 - |p_D^k|_{L^2(D)}`: the operator norm is
/// taken over real functions supported on `D` with the mu-weighted inner
/// product, computed by power iteration (absolute tolerance 1e-10 on the
/// norm estimate). An empty interior gives `lambda_k = 1` by convention.
pub fn spectral_bound<S: Scalar>(spec: &DirichletSpec<S>, k: u64) -> Result<S, S> {
    if k == 0 {
        return Err(Error::domain("power k must be at least 1"));
    }
    let interior: Vec<usize> = spec.interior().iter().copied().collect();
    if interior.is_empty() {
        return Ok(S::one());
    }
    let kernel = spec.kernel();
    let d = interior.len();
    let mu: Vec<S> = interior.iter().map(|&i| kernel.mu()[i]).collect();
    let apply_q = |v: &[S]| -> Vec<S> {
        let mut out = vec![S::zero(); d];
        for (a, &i) in interior.iter().enumerate() {
            let mut acc = S::zero();
            for (b, &j) in interior.iter().enumerate() {
                acc += kernel.transition(i, j) * v[b];
            }
            out[a] = acc;
        }
        out
    };
    // adjoint w.r.t. the mu-inner product: (Q* v)_a = sum_b Q_ba mu_b v_b / mu_a
    let apply_q_adjoint = |v: &[S]| -> Vec<S> {
        let mut out = vec![S::zero(); d];
        for (a, &i) in interior.iter().enumerate() {
            let mut acc = S::zero();
            for (b, &j) in interior.iter().enumerate() {
                acc += kernel.transition(j, i) * mu[b] * v[b];
            }
            out[a] = acc / mu[a];
        }
        out
    };
    let mu_dot = |a: &[S], b: &[S]| -> S {
        let mut acc = S::zero();
        for i in 0..d {
            acc += mu[i] * a[i] * b[i];
        }
        acc
    };
    let power = |f: &dyn Fn(&[S]) -> Vec<S>, v: &[S]| -> Vec<S> {
        let mut out = v.to_vec();
        for _ in 0..k {
            out = f(&out);
        }
        out
    };
    let mut v: Vec<S> = (0..d)
        .map(|i| S::one() + S::of(0.37) * S::of(((i + 1) as f64).sin()))
        .collect();
    let tol = S::of(1e-10);
    let mut prev = S::infinity();
    for it in 0..200_000u64 {
        let vv = mu_dot(&v, &v);
        if vv == S::zero() {
            return Ok(S::one());
        }
        let u = power(&apply_q, &v);
        let uu = mu_dot(&u, &u);
        let sigma = (uu / vv).sqrt();
        if uu == S::zero() {
            return Ok(S::one());
        }
        if (sigma - prev).abs() <= tol {
            return Ok(S::one() - sigma);
        }
        prev = sigma;
        let mut w = power(&apply_q_adjoint, &u);
        let wn = mu_dot(&w, &w).sqrt();
        for x in w.iter_mut() {
            *x = *x / wn;
        }
        v = w;
        if it + 1 == 200_000 {
            return Err(Error::NoConvergence(ConvergenceFailure::new(it + 1, sigma)));
        }
    }
    unreachable!()
}

/// One row of the conjecture probe: distances between the semigroup heat
/// flow `T_t f0` and the energy gradient flow `S_{g(t)} f0` for the three
/// time rescalings, plus both energies at time `t`. Report-only; nothing
/// here asserts the flows coincide.
#[derive(Debug, Clone)]
pub struct ProbeRow<S: Scalar> {
    pub t: S,
    /// `d_2(T_t f0, S_t f0)`.
    pub gap_same: S,
    /// `d_2(T_t f0, S_{t/2} f0)`.
    pub gap_half: S,
    /// `d_2(T_t f0, S_{2t} f0)`.
    pub gap_double: S,
    /// Dirichlet energy of `T_t f0`.
    pub semigroup_energy: S,
    /// Dirichlet energy of `S_t f0`.
    pub gradient_energy: S,
}

/// Runs both heat flows from `f0` and reports the time-rescaled gaps.
pub fn conjecture_probe<S: Scalar>(
    spec: &DirichletSpec<S>,
    f0: &MapField<S>,
    time_grid: &[S],
    tol: S,
) -> Result<Vec<ProbeRow<S>>, S> {
    if time_grid.is_empty() {
        return Err(Error::domain("time grid must be non-empty"));
    }
    for w in time_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::domain("time grid must be strictly increasing"));
        }
    }
    if time_grid[0] < S::zero() {
        return Err(Error::domain("probe times must be non-negative"));
    }
    // generous doubling cap: the probe is a diagnostic and the two flows
    // must each be resolved below the gap scale of interest
    let max_n: u64 = 1 << 26;
    let half = S::of(0.5);
    let two = S::of(2.0);
    let semigroup_grid = with_zero(time_grid.to_vec());
    let mut gradient_times: Vec<S> = Vec::new();
    for &t in time_grid {
        gradient_times.push(half * t);
        gradient_times.push(t);
        gradient_times.push(two * t);
    }
    let gradient_grid = with_zero(gradient_times);

    let semigroup_traj =
        solve_dirichlet_flow_with(spec, f0, &semigroup_grid, tol, 8, max_n)?;
    let energy = DirichletEnergy::new(spec.clone())?;
    let gradient_traj =
        crate::energy::gradient_flow_with(&energy, f0, &gradient_grid, tol, 8, max_n)?;

    let lookup_semigroup = |t: S| -> &MapField<S> {
        &semigroup_traj
            .samples
            .iter()
            .find(|s| s.time == t)
            .expect("semigroup grid contains every probe time")
            .point
    };
    let lookup_gradient = |t: S| -> &MapField<S> {
        &gradient_traj
            .samples
            .iter()
            .find(|s| s.time == t)
            .expect("gradient grid contains every rescaled time")
            .point
    };

    let mut rows = Vec::with_capacity(time_grid.len());
    for &t in time_grid {
        let t_flow = lookup_semigroup(t);
        let s_same = lookup_gradient(t);
        let s_half = lookup_gradient(half * t);
        let s_double = lookup_gradient(two * t);
        rows.push(ProbeRow {
            t,
            gap_same: d2(t_flow, s_same)?,
            gap_half: d2(t_flow, s_half)?,
            gap_double: d2(t_flow, s_double)?,
            semigroup_energy: energy.energy(t_flow)?,
            gradient_energy: energy.energy(s_same)?,
        });
    }
    Ok(rows)
}

fn with_zero<S: Scalar>(mut times: Vec<S>) -> Vec<S> {
    times.push(S::zero());
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times.dedup();
    times
}

/// A parsed kernel/Dirichlet instance: the problem plus the initial field
/// (the anchor itself; interior anchor entries double as starting values).
#[derive(Debug, Clone)]
pub struct DirichletInstance<S: Scalar> {
    pub spec: DirichletSpec<S>,
    pub initial: MapField<S>,
}

/// Parses the instance text format:
///
/// ```text
/// states 4
/// mu: 1 1 1 1
/// p 1: 0.5 0.5 0 0
/// p 2: 0.5 0 0.5 0
/// p 3: 0 0.5 0 0.5
/// p 4: 0 0 0.5 0.5
/// D: 2 3
/// euclidean:0
/// euclidean:0
/// euclidean:0
/// euclidean:3
/// ```
///
/// State indices are 1-based in the file. Blank lines and `#` comments are
/// ignored. The final `m` lines are the per-state anchor points; spider leg
/// counts are inferred as the maximum leg index used (at least 2).
pub fn parse_instance<S: Scalar>(text: &str) -> Result<DirichletInstance<S>, S> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        });
    let mut next_line = |what: &str| -> Result<(usize, &str), S> {
        lines
            .next()
            .map(|(n, l)| (n, l.trim()))
            .ok_or_else(|| Error::parse(0, 1, format!("unexpected end of input, expected {what}")))
    };

    let (ln, header) = next_line("`states m` header")?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("states") {
        return Err(Error::parse(ln, 1, "expected `states m` header"));
    }
    let m: usize = toks
        .next()
        .and_then(|t| t.parse().ok())
        .filter(|&m| m >= 1)
        .ok_or_else(|| Error::parse(ln, 8, "state count must be a positive integer"))?;
    if toks.next().is_some() {
        return Err(Error::parse(ln, 1, "unexpected trailing tokens after state count"));
    }

    let (ln, mu_line) = next_line("`mu:` line")?;
    let mu_body = mu_line
        .strip_prefix("mu:")
        .ok_or_else(|| Error::parse(ln, 1, "expected `mu: v1 ... vm`"))?;
    let mu = parse_scalars::<S>(mu_body, ln)?;
    if mu.len() != m {
        return Err(Error::parse(ln, 1, format!("expected {m} weights, found {}", mu.len())));
    }

    let mut rows = Vec::with_capacity(m);
    for i in 1..=m {
        let (ln, row_line) = next_line("transition row")?;
        let (head, body) = row_line
            .split_once(':')
            .ok_or_else(|| Error::parse(ln, 1, format!("expected `p {i}: ...`")))?;
        let mut head_toks = head.split_whitespace();
        if head_toks.next() != Some("p") || head_toks.next() != Some(i.to_string().as_str()) {
            return Err(Error::parse(ln, 1, format!("expected row header `p {i}`")));
        }
        let row = parse_scalars::<S>(body, ln)?;
        if row.len() != m {
            return Err(Error::parse(
                ln,
                1,
                format!("row {i} has {} entries, expected {m}", row.len()),
            ));
        }
        rows.push(row);
    }

    let (ln, d_line) = next_line("`D:` line")?;
    let d_body = d_line
        .strip_prefix("D:")
        .ok_or_else(|| Error::parse(ln, 1, "expected `D: i1 i2 ...`"))?;
    let mut interior = BTreeSet::new();
    for tok in d_body.split_whitespace() {
        let idx: usize = tok
            .parse()
            .ok()
            .filter(|&i| i >= 1 && i <= m)
            .ok_or_else(||

                Error::parse(ln, 1, format!("bad interior state `{tok}` (1..={m})")))?;
        interior.insert(idx - 1);
    }

    let mut raw_points = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, point_line) = next_line("anchor point")?;
        raw_points.push((ln, point_line.to_string()));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::parse(ln, 1, "unexpected trailing content after anchor points"));
    }

    let mut points = Vec::with_capacity(m);
    for (ln, raw) in &raw_points {
        let p = Point::<S>::decode(raw, None)
            .map_err(|e| Error::parse(*ln, 1, format!("bad anchor point: {e}")))?;
        points.push(p);
    }
    // unify spider leg counts across states, since a lone `spider:leg,r`
    // cannot declare k itself
    let unified = unify_target_spaces(points, &raw_points)?;

    let kernel = Arc::new(MarkovKernel::new(rows, mu)?);
    let anchor = MapField::new(kernel.clone(), unified)?;
    let spec = DirichletSpec::new(kernel, interior, anchor.clone())?;
    Ok(DirichletInstance {
        spec,
        initial: anchor,
    })
}

fn unify_target_spaces<S: Scalar>(
    points: Vec<Point<S>>,
    raw: &[(usize, String)],
) -> Result<Vec<Point<S>>, S> {
    let first = points[0].space().clone();
    if points.iter().all(|p| p.space() == &first) {
        return Ok(points);
    }
    let all_spider = points
        .iter()
        .all(|p| matches!(p.space(), SpaceDescriptor::Spider(_)));
    if !all_spider {
        return Err(Error::invalid(
            "anchor points use inconsistent target spaces across states",
        ));
    }
    let k = points
        .iter()
        .map(|p| match p.space() {
            SpaceDescriptor::Spider(k) => *k,
            _ => unreachable!(),
        })
        .max()
        .expect("non-empty");
    let target = SpaceDescriptor::Spider(k);
    raw.iter()
        .map(|(ln, text)| {
            Point::<S>::decode(text, Some(&target))
                .map_err(|e| Error::parse(*ln, 1, format!("bad anchor point: {e}")))
        })
        .collect()
}

fn parse_scalars<S: Scalar>(body: &str, line: usize) -> Result<Vec<S>, S> {
    body.split_whitespace()
        .map(|tok| {
            S::from_str(tok).map_err(|_| Error::parse(line, 1, format!("bad numeric value `{tok}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn path_kernel() -> Arc<MarkovKernel<f64>> {
        Arc::new(
            MarkovKernel::new(
                vec![
                    vec![0.5, 0.5, 0.0, 0.0],
                    vec![0.5, 0.0, 0.5, 0.0],
                    vec![0.0, 0.5, 0.0, 0.5],
                    vec![0.0, 0.0, 0.5, 0.5],
                ],
                vec![1.0, 1.0, 1.0, 1.0],
            )
            .unwrap(),
        )
    }

    fn e1(x: f64) -> Point<f64> {
        Point::euclidean(vec![x]).unwrap()
    }

    fn path_spec(interior_values: (f64, f64)) -> (DirichletSpec<f64>, MapField<f64>) {
        let kernel = path_kernel();
        let anchor = MapField::new(
            kernel.clone(),
            vec![e1(0.0), e1(interior_values.0), e1(interior_values.1), e1(3.0)],
        )
        .unwrap();
        let spec = DirichletSpec::new(
            kernel,
            BTreeSet::from([1usize, 2usize]),
            anchor.clone(),
        )
        .unwrap();
        (spec, anchor)
    }

    #[test]
    fn kernel_validation_rejects_asymmetry() {
        let err = MarkovKernel::new(
            vec![vec![0.0, 1.0], vec![0.5, 0.5]],
            vec![1.0, 1.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    #[test]
    fn symmetrization_fixes_a_near_symmetric_kernel() {
        let (kernel, adjusted) = MarkovKernel::new_symmetrized(
            vec![vec![0.0, 1.0], vec![0.5, 0.5]],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert!(adjusted);
        assert_eq!(kernel.states(), 2);
    }

    #[test]
    fn d2_is_the_weighted_l2_combination() {
        let kernel = Arc::new(
            MarkovKernel::new(
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
                vec![1.0, 1.0],
            )
            .unwrap(),
        );
        let f = MapField::new(kernel.clone(), vec![e1(0.0), e1(0.0)]).unwrap();
        let g = MapField::new(kernel, vec![e1(3.0), e1(4.0)]).unwrap();
        assert!((d2(&f, &g).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn d2_with_spider_target_and_nonuniform_mu() {
        let kernel = Arc::new(
            MarkovKernel::new(
                vec![vec![0.8, 0.2], vec![0.05, 0.95]],
                vec![1.0, 4.0],
            )
            .unwrap(),
        );
        let hub = Point::spider_hub(2).unwrap();
        let f = MapField::new(kernel.clone(), vec![hub.clone(), hub]).unwrap();
        let g = MapField::new(
            kernel,
            vec![
                Point::spider(2, 1, 1.0).unwrap(),
                Point::spider(2, 2, 2.0).unwrap(),
            ],
        )
        .unwrap();
        assert!((d2(&f, &g).unwrap() - 17.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn markov_apply_is_the_weighted_average_in_euclidean_targets() {
        let kernel = path_kernel();
        let f = MapField::new(
            kernel.clone(),
            vec![e1(0.0), e1(1.0), e1(2.0), e1(3.0)],
        )
        .unwrap();
        let pf = markov_apply(&kernel, &f).unwrap();
        let expect = [0.5, 1.0, 2.0, 2.5];
        for (i, e) in expect.iter().enumerate() {
            assert!((pf.value(i).euclidean_coords().unwrap()[0] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_fields_are_fixed_by_the_markov_operator() {
        let kernel = path_kernel();
        let q = e1(1.5);
        let f = MapField::new(kernel.clone(), vec![q.clone(), q.clone(), q.clone(), q]).unwrap();
        let pf = markov_apply(&kernel, &f).unwrap();
        assert_eq!(pf, f);
    }

    #[test]
    fn dirichlet_operator_freezes_the_boundary() {
        let (spec, f) = path_spec((0.0, 0.0));
        let out = dirichlet_apply(&spec, &f).unwrap();
        assert_eq!(out.value(0), f.value(0));
        assert_eq!(out.value(3), f.value(3));
        assert!((out.value(1).euclidean_coords().unwrap()[0] - 0.0).abs() < 1e-12);
        assert!((out.value(2).euclidean_coords().unwrap()[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn empty_interior_makes_the_operator_the_identity() {
        let kernel = path_kernel();
        let anchor = MapField::new(
            kernel.clone(),
            vec![e1(0.4), e1(7.0), e1(-2.0), e1(3.0)],
        )
        .unwrap();
        let spec = DirichletSpec::new(kernel, BTreeSet::new(), anchor.clone()).unwrap();
        assert_eq!(dirichlet_apply(&spec, &anchor).unwrap(), anchor);
    }

    #[test]
    fn harmonic_field_is_fixed() {
        let (spec, f) = path_spec((1.0, 2.0));
        let out = dirichlet_apply(&spec, &f).unwrap();
        assert!(d2(&out, &f).unwrap() < 1e-12);
    }

    #[test]
    fn boundary_mismatch_is_a_domain_error() {
        let (spec, f) = path_spec((0.0, 0.0));
        let bad = f.with_value(0, e1(9.0)).unwrap();
        let err = dirichlet_apply(&spec, &bad).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn ppa_heat_flow_solves_the_path_dirichlet_problem() {
        let (spec, f0) = path_spec((0.0, 0.0));
        let schedule = StepSchedule::constant(1.0).unwrap();
        let traj = solve_dirichlet_ppa(&spec, &f0, &schedule, 10_000, 1e-9).unwrap();
        assert!(traj.converged);
        let f = traj.final_point();
        assert!((f.value(1).euclidean_coords().unwrap()[0] - 1.0).abs() < 1e-8);
        assert!((f.value(2).euclidean_coords().unwrap()[0] - 2.0).abs() < 1e-8);
        // boundary preserved bitwise
        assert_eq!(f.value(0), f0.value(0));
        assert_eq!(f.value(3), f0.value(3));
    }

    #[test]
    fn already_harmonic_start_terminates_immediately() {
        let (spec, f0) = path_spec((1.0, 2.0));
        let schedule = StepSchedule::constant(1.0).unwrap();
        let traj = solve_dirichlet_ppa(&spec, &f0, &schedule, 100, 1e-10).unwrap();
        assert!(traj.converged);
        assert_eq!(traj.samples.len(), 1);
    }

    #[test]
    fn spectral_bounds_on_the_path_graph() {
        let (spec, _) = path_spec((0.0, 0.0));
        let l1 = spectral_bound(&spec, 1).unwrap();
        let l2 = spectral_bound(&spec, 2).unwrap();
        assert!((l1 - 0.5).abs() < 1e-9);
        assert!((l2 - 0.75).abs() < 1e-9);
    }

    #[test]
    fn spectral_bound_of_empty_interior_is_one() {
        let kernel = path_kernel();
        let anchor = MapField::new(
            kernel.clone(),
            vec![e1(0.0), e1(0.0), e1(0.0), e1(0.0)],
        )
        .unwrap();
        let spec = DirichletSpec::new(kernel, BTreeSet::new(), anchor).unwrap();
        assert_eq!(spectral_bound(&spec, 1).unwrap(), 1.0);
    }

    #[test]
    fn instance_round_trip_through_the_text_format() {
        let text = "\
# 4-state path, euclidean line target
states 4
mu: 1 1 1 1
p 1: 0.5 0.5 0 0
p 2: 0.5 0 0.5 0
p 3: 0 0.5 0 0.5
p 4: 0 0 0.5 0.5
D: 2 3

euclidean:0
euclidean:0
euclidean:0
euclidean:3
";
        let inst: DirichletInstance<f64> = parse_instance(text).unwrap();
        assert_eq!(inst.spec.kernel().states(), 4);
        assert_eq!(
            inst.spec.interior().iter().copied().collect::<Vec<_>>(),
            vec![1, 2]
        );
        assert_eq!(inst.initial.value(3), &e1(3.0));
    }

    #[test]
    fn instance_unifies_spider_leg_counts() {
        let text = "\
states 2
mu: 1 1
p 1: 0.5 0.5
p 2: 0.5 0.5
D: 1
spider:2,1.0
spider:3,0.5
";
        let inst: DirichletInstance<f64> = parse_instance(text).unwrap();
        assert_eq!(inst.initial.target_space(), &SpaceDescriptor::Spider(3));
    }

    #[test]
    fn instance_parse_errors_carry_line_numbers() {
        let text = "states 2\nmu: 1 1\np 1: 0.5 0.5\np 2: 0.5 bad\nD:\neuclidean:0\neuclidean:0\n";
        let err = parse_instance::<f64>(text).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
