//! Nonexpansive maps and their resolvents.
//!
//! The resolvent `R_lambda x` is computed as the unique fixed point of the
//! strict contraction `y -> (1/(1+lambda)) x (+) (lambda/(1+lambda)) F y`,
//! iterated with a Banach-principle stopping certificate: for contraction
//! factor `q = lambda/(1+lambda)` the true fixed-point error is at most
//! `q/(1-q) * gap = lambda * gap`, so iteration stops once
//! `max(lambda, 1) * gap <= tol` (the `max` keeps the reported residual
//! itself below `tol` for small `lambda`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{ConvergenceFailure, Error};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::space::{
    frechet_mean, sample_point, ConvexSet, HadamardPoint, Point, SpaceDescriptor,
    WeightedPointSet,
};
use crate::Result;

/// Anything that maps points of an Hadamard space to points of the same
/// space without increasing distances. Implementors are expected to be
/// 1-Lipschitz; the concrete [`NonexpansiveMap`] validates this by sampling
/// at construction.
pub trait Nonexpansive<S: Scalar> {
    type Point: HadamardPoint<S>;

    fn apply(&self, x: &Self::Point) -> Result<Self::Point, S>;
}

/// Backend-specific isometries.
#[derive(Debug, Clone)]
pub enum Isometry<S: Scalar> {
    /// `x -> A x + b` with `A` orthogonal.
    EuclideanRigid { linear: Matrix<S>, translation: Vec<S> },
    /// Orthochronous Lorentz transform of the hyperboloid sheet.
    Lorentz(Matrix<S>),
    /// Permutation of spider legs; `images[i]` is the image of leg `i+1`.
    SpiderPermutation(Vec<usize>),
    /// Componentwise isometry of a product space.
    Product(Vec<Isometry<S>>),
}

/// The concrete families of nonexpansive self-maps.
#[derive(Debug, Clone)]
pub enum MapKind<S: Scalar> {
    /// Metric projection onto a closed convex set.
    Projection(ConvexSet<S>),
    /// Euclidean linear map with operator norm at most one.
    Linear(Matrix<S>),
    Isometry(Isometry<S>),
    /// Pointwise Fréchet average of component maps.
    GeodesicAverage(Vec<(NonexpansiveMap<S>, S)>),
    /// Maps applied in sequence, first entry first.
    Composition(Vec<NonexpansiveMap<S>>),
}

/// A validated nonexpansive self-map of one space backend, with an optional
/// known fixed-point set.
#[derive(Debug, Clone)]
pub struct NonexpansiveMap<S: Scalar> {
    space: SpaceDescriptor,
    kind: MapKind<S>,
    fixed_set: Option<ConvexSet<S>>,
}

const VALIDATION_PAIRS: usize = 32;
const VALIDATION_RADIUS: f64 = 2.0;

impl<S: Scalar> NonexpansiveMap<S> {
    /// Validates the kind against the space and checks nonexpansiveness on
    /// sampled pairs (never assumed, even for "obviously" safe kinds).
    pub fn new(space: SpaceDescriptor, kind: MapKind<S>) -> Result<Self, S> {
        Self::new_seeded(space, kind, 0x5eed)
    }

    /// Like [`NonexpansiveMap::new`] with an explicit seed for the
    /// validation sampling.
    pub fn new_seeded(space: SpaceDescriptor, kind: MapKind<S>, seed: u64) -> Result<Self, S> {
        space.validate().map_err(Error::Invalid)?;
        validate_kind(&space, &kind)?;
        let fixed_set = match &kind {
            MapKind::Projection(c) => Some(c.clone()),
            _ => None,
        };
        let map = NonexpansiveMap { space, kind, fixed_set };
        map.validate_by_sampling(seed)?;
        Ok(map)
    }

    pub fn projection(set: ConvexSet<S>) -> Result<Self, S> {
        let space = set.space().clone();
        Self::new(space, MapKind::Projection(set))
    }

    pub fn linear(matrix: Matrix<S>) -> Result<Self, S> {
        let space = SpaceDescriptor::Euclidean(matrix.rows());
        Self::new(space, MapKind::Linear(matrix))
    }

    /// Constant map, realized as the projection onto a singleton.
    pub fn constant(target: Point<S>) -> Result<Self, S> {
        Self::projection(ConvexSet::singleton(target))
    }

    pub fn identity(space: SpaceDescriptor) -> Result<Self, S> {
        let whole = ConvexSet::whole_space(space)?;
        Self::projection(whole)
    }

    pub fn isometry(space: SpaceDescriptor, iso: Isometry<S>) -> Result<Self, S> {
        Self::new(space, MapKind::Isometry(iso))
    }

    pub fn geodesic_average(parts: Vec<(NonexpansiveMap<S>, S)>) -> Result<Self, S> {
        let space = parts
            .first()
            .ok_or_else(|| Error::invalid("geodesic average needs at least one map"))?
            .0
            .space
            .clone();
        Self::new(space, MapKind::GeodesicAverage(parts))
    }

    pub fn composition(maps: Vec<NonexpansiveMap<S>>) -> Result<Self, S> {
        let space = maps
            .first()
            .ok_or_else(|| Error::invalid("composition needs at least one map"))?
            .space
            .clone();
        Self::new(space, MapKind::Composition(maps))
    }

    /// Attaches a known fixed-point set (metadata; used by limit diagnostics).
    pub fn with_fixed_set(mut self, set: ConvexSet<S>) -> Result<Self, S> {
        if set.space() != &self.space {
            return Err(Error::mismatch(&self.space, set.space()));
        }
        self.fixed_set = Some(set);
        Ok(self)
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn kind(&self) -> &MapKind<S> {
        &self.kind
    }

    /// Known fixed-point set, if any (projections know theirs).
    pub fn fixed_set(&self) -> Option<&ConvexSet<S>> {
        self.fixed_set.as_ref()
    }

    fn validate_by_sampling(&self, seed: u64) -> Result<(), S> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let slack = S::one() + S::of(1e-9);
        let abs_slack = S::of(1e-12);
        for _ in 0..VALIDATION_PAIRS {
            let x: Point<S> = sample_point(&self.space, &mut rng, VALIDATION_RADIUS);
            let y: Point<S> = sample_point(&self.space, &mut rng, VALIDATION_RADIUS);
            let fx = self.apply(&x)?;
            let fy = self.apply(&y)?;
            let before = x.distance(&y)?;
            let after = fx.distance(&fy)?;
            if after > before * slack + abs_slack {
                return Err(Error::invalid(format!(
                    "map expanded a sampled pair: d(Fx,Fy) = {after} > d(x,y) = {before}"
                )));
            }
        }
        Ok(())
    }

    /// Evaluates the map. `F x`.
    pub fn apply(&self, x: &Point<S>) -> Result<Point<S>, S> {
        if x.space() != &self.space {
            return Err(Error::mismatch(&self.space, x.space()));
        }
        apply_kind(&self.kind, x)
    }
}

impl<S: Scalar> Nonexpansive<S> for NonexpansiveMap<S> {
    type Point = Point<S>;

    fn apply(&self, x: &Point<S>) -> Result<Point<S>, S> {
        NonexpansiveMap::apply(self, x)
    }
}

fn validate_kind<S: Scalar>(space: &SpaceDescriptor, kind: &MapKind<S>) -> Result<(), S> {
    match kind {
        MapKind::Projection(set) => {
            if set.space() != space {
                return Err(Error::mismatch(space, set.space()));
            }
        }
        MapKind::Linear(m) => {
            let n = match space {
                SpaceDescriptor::Euclidean(n) => *n,
                other => {
                    return Err(Error::invalid(format!(
                        "linear map requires a euclidean space, got {other}"
                    )))
                }
            };
            if m.rows() != n || m.cols() != n {
                return Err(Error::invalid(format!(
                    "matrix is {}x{} but the space is euclidean({n})",
                    m.rows(),
                    m.cols()
                )));
            }
            let norm = m.operator_norm();
            if norm > S::one() + S::of(1e-12) {
                return Err(Error::invalid(format!(
                    "linear map has operator norm {norm} > 1"
                )));
            }
        }
        MapKind::Isometry(iso) => validate_isometry(space, iso)?,
        MapKind::GeodesicAverage(parts) => {
            if parts.is_empty() {
                return Err(Error::invalid("geodesic average needs at least one map"));
            }
            let mut total = S::zero();
            for (map, w) in parts {
                if &map.space != space {
                    return Err(Error::mismatch(space, &map.space));
                }
                if *w < S::zero() || !w.is_finite() {
                    return Err(Error::invalid("average weights must be non-negative"));
                }
                total += *w;
            }
            if total <= S::zero() {
                return Err(Error::invalid("average weights must sum to a positive value"));
            }
        }
        MapKind::Composition(maps) => {
            if maps.is_empty() {
                return Err(Error::invalid("composition needs at least one map"));
            }
            for map in maps {
                if &map.space != space {
                    return Err(Error::mismatch(space, &map.space));
                }
            }
        }
    }
    Ok(())
}

fn validate_isometry<S: Scalar>(space: &SpaceDescriptor, iso: &Isometry<S>) -> Result<(), S> {
    let tol = S::of(1e-9);
    match (space, iso) {
        (SpaceDescriptor::Euclidean(n), Isometry::EuclideanRigid { linear, translation }) => {
            if linear.rows() != *n || linear.cols() != *n || translation.len() != *n {
                return Err(Error::invalid("rigid motion dimensions do not match the space"));
            }
            // A^T A = I
            for i in 0..*n {
                for j in 0..*n {
                    let mut acc = S::zero();
                    for k in 0..*n {
                        acc += linear.get(k, i) * linear.get(k, j);
                    }
                    let want = if i == j { S::one() } else { S::zero() };
                    if (acc - want).abs() > tol {
                        return Err(Error::invalid("rigid motion matrix is not orthogonal"));
                    }
                }
            }
        }
        (SpaceDescriptor::Hyperbolic(n), Isometry::Lorentz(m)) => {
            let dim = *n + 1;
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::invalid("Lorentz matrix dimensions do not match the space"));
            }
            // L^T J L = J with J = diag(-1, 1, .., 1)
            for i in 0..dim {
                for j in 0..dim {
                    let mut acc = S::zero();
                    for k in 0..dim {
                        let jk = if k == 0 { -S::one() } else { S::one() };
                        acc += m.get(k, i) * jk * m.get(k, j);
                    }
                    let want = if i != j {
                        S::zero()
                    } else if i == 0 {
                        -S::one()
                    } else {
                        S::one()
                    };
                    if (acc - want).abs() > tol {
                        return Err(Error::invalid("matrix does not preserve the Minkowski form"));
                    }
                }
            }
            if m.get(0, 0) <= S::zero() {
                return Err(Error::invalid("Lorentz transform must preserve the upper sheet"));
            }
        }
        (SpaceDescriptor::Spider(k), Isometry::SpiderPermutation(images)) => {
            if images.len() != *k {
                return Err(Error::invalid("permutation length does not match the leg count"));
            }
            let mut seen = vec![false; *k];
            for &img in images {
                if img < 1 || img > *k || seen[img - 1] {
                    return Err(Error::invalid("not a permutation of the legs"));
                }
                seen[img - 1] = true;
            }
        }
        (SpaceDescriptor::Product(parts), Isometry::Product(isos)) => {
            if parts.len() != isos.len() {
                return Err(Error::invalid("product isometry arity mismatch"));
            }
            for (p, i) in parts.iter().zip(isos.iter()) {
                validate_isometry(p, i)?;
            }
        }
        (space, _) => {
            return Err(Error::invalid(format!(
                "isometry kind does not apply to {space}"
            )))
        }
    }
    Ok(())
}

fn apply_kind<S: Scalar>(kind: &MapKind<S>, x: &Point<S>) -> Result<Point<S>, S> {
    match kind {
        MapKind::Projection(set) => set.project(x),
        MapKind::Linear(m) => {
            let coords = x.euclidean_coords().expect("euclidean point");
            Point::euclidean(m.matvec(coords))
        }
        MapKind::Isometry(iso) => apply_isometry(iso, x),
        MapKind::GeodesicAverage(parts) => {
            let mut values = Vec::with_capacity(parts.len());
            let mut weights = Vec::with_capacity(parts.len());
            for (map, w) in parts {
                values.push(map.apply(x)?);
                weights.push(*w);
            }
            let set = WeightedPointSet::new(values, weights)?;
            frechet_mean(&set)
        }
        MapKind::Composition(maps) => {
            let mut y = x.clone();
            for map in maps {
                y = map.apply(&y)?;
            }
            Ok(y)
        }
    }
}

fn apply_isometry<S: Scalar>(iso: &Isometry<S>, x: &Point<S>) -> Result<Point<S>, S> {
    match iso {
        Isometry::EuclideanRigid { linear, translation } => {
            let mut out = linear.matvec(x.euclidean_coords().expect("euclidean point"));
            for (o, t) in out.iter_mut().zip(translation.iter()) {
                *o = *o + *t;
            }
            Point::euclidean(out)
        }
        Isometry::Lorentz(m) => {
            let coords = match x.data() {
                crate::space::PointData::Hyperbolic(c) => c,
                _ => unreachable!("hyperbolic point"),
            };
            Point::hyperbolic(m.matvec(coords))
        }
        Isometry::SpiderPermutation(images) => {
            let (leg, r) = x.spider_coords().expect("spider point");
            let k = images.len();
            Point::spider(k, images[leg - 1], r)
        }
        Isometry::Product(isos) => {
            let comps = x.components().expect("product point");
            let mapped = comps
                .iter()
                .zip(isos.iter())
                .map(|(c, i)| apply_isometry(i, c))
                .collect::<Result<Vec<_>, S>>()?;
            Point::product(mapped)
        }
    }
}

/// Outcome of a resolvent computation.
#[derive(Debug, Clone)]
pub struct ResolventResult<S: Scalar, P> {
    /// `R_lambda x`.
    pub point: P,
    pub iterations: u64,
    /// Distance between the last two iterates.
    pub residual: S,
}

/// Default iteration budget for one resolvent solve. The contraction factor
/// is `lambda/(1+lambda)`, so large `lambda` needs budgets proportional to
/// `lambda`; see [`resolvent_with`].
pub const DEFAULT_RESOLVENT_CAP: u64 = 1_000_000;

/// `R_lambda x` for a nonexpansive `f`, to fixed-point accuracy `tol`.
/// `lambda = 0` returns `x` (the `R_0 = id` convention).
pub fn resolvent<S, F>(
    f: &F,
    lambda: S,
    x: &F::Point,
    tol: S,
) -> Result<ResolventResult<S, F::Point>, S>
where
    S: Scalar,
    F: Nonexpansive<S> + ?Sized,
{
    resolvent_with(f, lambda, x, tol, None, DEFAULT_RESOLVENT_CAP)
}

/// [`resolvent`] with a warm-start iterate and an explicit iteration budget.
pub fn resolvent_with<S, F>(
    f: &F,
    lambda: S,
    x: &F::Point,
    tol: S,
    warm_start: Option<&F::Point>,
    max_iter: u64,
) -> Result<ResolventResult<S, F::Point>, S>
where
    S: Scalar,
    F: Nonexpansive<S> + ?Sized,
{
    if lambda < S::zero() || !lambda.is_finite() {
        return Err(Error::domain(format!("positive step required (got {lambda})")));
    }
    if !(tol > S::zero()) {
        return Err(Error::domain(format!("tolerance must be positive (got {tol})")));
    }
    if lambda == S::zero() {
        return Ok(ResolventResult {
            point: x.clone(),
            iterations: 0,
            residual: S::zero(),
        });
    }
    let q = lambda / (S::one() + lambda);
    let certificate = lambda.max(S::one());
    let mut y = warm_start.cloned().unwrap_or_else(|| x.clone());
    let mut gap = S::infinity();
    for it in 1..=max_iter {
        let fy = f.apply(&y)?;
        let next = x.geodesic(&fy, q)?;
        gap = next.distance(&y)?;
        y = next;
        if certificate * gap <= tol {
            return Ok(ResolventResult {
                point: y,
                iterations: it,
                residual: gap,
            });
        }
    }
    Err(Error::NoConvergence(
        ConvergenceFailure::new(max_iter, gap).with_last(y.encode()),
    ))
}

/// One sample of the resolvent curve `lambda -> R_lambda x`.
#[derive(Debug, Clone)]
pub struct CurveSample<S: Scalar, P> {
    pub lambda: S,
    pub point: P,
    /// `d(x, R_lambda x)`; nondecreasing along an increasing lambda grid.
    pub displacement: S,
    pub iterations: u64,
    pub residual: S,
}

/// Evaluates `R_lambda x` along a strictly increasing grid, warm-starting
/// each solve from the previous curve point. The per-solve budget scales
/// with `lambda` so the O(lambda) contraction constant cannot starve large
/// steps.
pub fn resolvent_curve<S, F>(
    f: &F,
    x: &F::Point,
    lambdas: &[S],
    tol: S,
) -> Result<Vec<CurveSample<S, F::Point>>, S>
where
    S: Scalar,
    F: Nonexpansive<S> + ?Sized,
{
    if lambdas.is_empty() {
        return Err(Error::domain("lambda grid must be non-empty"));
    }
    for w in lambdas.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::domain("lambda grid must be strictly increasing"));
        }
    }
    let mut out = Vec::with_capacity(lambdas.len());
    let mut warm: Option<F::Point> = None;
    for &lambda in lambdas {
        if lambda <= S::zero() {
            return Err(Error::domain(format!("positive step required (got {lambda})")));
        }
        let budget = curve_budget(lambda);
        let res = resolvent_with(f, lambda, x, tol, warm.as_ref(), budget)?;
        let displacement = x.distance(&res.point)?;
        warm = Some(res.point.clone());
        out.push(CurveSample {
            lambda,
            point: res.point,
            displacement,
            iterations: res.iterations,
            residual: res.residual,
        });
    }
    Ok(out)
}

fn curve_budget<S: Scalar>(lambda: S) -> u64 {
    let lam = lambda.to_f64_lossy();
    if !lam.is_finite() || lam <= 0.0 {
        return DEFAULT_RESOLVENT_CAP;
    }
    let scaled = (lam * 80.0).ceil();
    if scaled > DEFAULT_RESOLVENT_CAP as f64 {
        scaled as u64
    } else {
        DEFAULT_RESOLVENT_CAP
    }
}
