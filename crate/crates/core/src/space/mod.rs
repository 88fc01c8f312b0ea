//! Hadamard-space abstraction and four concrete backends.
//!
//! A point carries its [`SpaceDescriptor`]; all operations check descriptors
//! and fail with a structural error on mismatch. The backends cover flat
//! (Euclidean), negatively curved (hyperboloid model), branching non-manifold
//! (spider tree) and product geometry, each with exactly computable geodesics.

pub mod convex;
pub mod frechet;
pub(crate) mod hyperbolic;
pub mod sample;
pub(crate) mod serial;

pub use convex::ConvexSet;
pub use frechet::{frechet_mean, WeightedPointSet};
pub use sample::sample_point;

use std::fmt;

use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;

/// Identifies a concrete Hadamard space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SpaceDescriptor {
    /// `R^n` with the Euclidean metric, `n >= 1`.
    Euclidean(usize),
    /// Hyperbolic `H^n` in the hyperboloid (Minkowski) model, `n >= 1`.
    Hyperbolic(usize),
    /// Spider tree: one hub with `k >= 2` rays.
    Spider(usize),
    /// l2-product of component spaces.
    Product(Vec<SpaceDescriptor>),
}

impl SpaceDescriptor {
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self {
            SpaceDescriptor::Euclidean(n) | SpaceDescriptor::Hyperbolic(n) => {
                if *n >= 1 {
                    Ok(())
                } else {
                    Err("dimension must be at least 1".into())
                }
            }
            SpaceDescriptor::Spider(k) => {
                if *k >= 2 {
                    Ok(())
                } else {
                    Err("spider must have at least 2 legs".into())
                }
            }
            SpaceDescriptor::Product(parts) => {
                if parts.is_empty() {
                    return Err("product space must have at least one component".into());
                }
                for p in parts {
                    p.validate()?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceDescriptor::Euclidean(n) => write!(f, "euclidean({n})"),
            SpaceDescriptor::Hyperbolic(n) => write!(f, "hyperbolic({n})"),
            SpaceDescriptor::Spider(k) => write!(f, "spider({k})"),
            SpaceDescriptor::Product(parts) => {
                write!(f, "product(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Backend-specific coordinates of a [`Point`].
#[derive(Debug, Clone, PartialEq)]
pub enum PointData<S: Scalar> {
    /// Real vector of length `n`.
    Euclidean(Vec<S>),
    /// Vector of length `n+1` on the upper hyperboloid sheet
    /// (`<x,x>_M = -1`, `x0 > 0`).
    Hyperbolic(Vec<S>),
    /// Leg index in `1..=k` plus radius `r >= 0`; the hub is stored
    /// canonically as `leg = 1, radius = 0`.
    Spider { leg: usize, radius: S },
    /// One point per product component.
    Product(Vec<Point<S>>),
}

/// An element of a concrete Hadamard space.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<S: Scalar> {
    space: SpaceDescriptor,
    data: PointData<S>,
}

impl<S: Scalar> Point<S> {
    pub fn euclidean(coords: Vec<S>) -> Result<Self, S> {
        if coords.is_empty() {
            return Err(Error::invalid("euclidean point needs at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("euclidean coordinates must be finite"));
        }
        Ok(Point {
            space: SpaceDescriptor::Euclidean(coords.len()),
            data: PointData::Euclidean(coords),
        })
    }

    /// Accepts raw hyperboloid coordinates. Points within `1e-9` of the sheet
    /// are kept bit-for-bit (so decode/encode round-trips exactly); points
    /// within `1e-6` are renormalized; anything farther off is rejected.
    pub fn hyperbolic(coords: Vec<S>) -> Result<Self, S> {
        if coords.len() < 2 {
            return Err(Error::invalid(
                "hyperbolic point needs at least two coordinates (x0, x1)",
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("hyperbolic coordinates must be finite"));
        }
        let q = hyperbolic::mdot(&coords, &coords);
        let dev = (q + S::one()).abs();
        let mut coords = coords;
        if dev > S::of(1e-9) {
            if dev > S::of(1e-6) {
                return Err(Error::invalid(format!(
                    "point is off the hyperboloid sheet: <x,x>_M = {q}"
                )));
            }
            hyperbolic::renormalize(&mut coords).map_err(Error::Invalid)?;
        }
        if coords[0] <= S::zero() {
            return Err(Error::invalid("hyperboloid point must lie on the upper sheet (x0 > 0)"));
        }
        Ok(Point {
            space: SpaceDescriptor::Hyperbolic(coords.len() - 1),
            data: PointData::Hyperbolic(coords),
        })
    }

    /// Lifts spatial coordinates `(x1..xn)` onto the hyperboloid sheet.
    pub fn hyperbolic_lift(spatial: Vec<S>) -> Result<Self, S> {
        if spatial.is_empty() {
            return Err(Error::invalid("hyperbolic point needs dimension at least 1"));
        }
        let mut sq = S::zero();
        for v in &spatial {
            sq += *v * *v;
        }
        let mut coords = Vec::with_capacity(spatial.len() + 1);
        coords.push((S::one() + sq).sqrt());
        coords.extend(spatial);
        Point::hyperbolic(coords)
    }

    pub fn spider(legs: usize, leg: usize, radius: S) -> Result<Self, S> {
        let space = SpaceDescriptor::Spider(legs);
        space.validate().map_err(Error::Invalid)?;
        if leg < 1 || leg > legs {
            return Err(Error::invalid(format!(
                "leg index {leg} outside 1..={legs}"
            )));
        }
        if !(radius >= S::zero()) || !radius.is_finite() {
            return Err(Error::invalid("spider radius must be a finite non-negative real"));
        }
        let leg = if radius == S::zero() { 1 } else { leg };
        Ok(Point {
            space,
            data: PointData::Spider { leg, radius },
        })
    }

    pub fn spider_hub(legs: usize) -> Result<Self, S> {
        Point::spider(legs, 1, S::zero())
    }

    pub fn product(components: Vec<Point<S>>) -> Result<Self, S> {
        if components.is_empty() {
            return Err(Error::invalid("product point needs at least one component"));
        }
        let space = SpaceDescriptor::Product(components.iter().map(|p| p.space.clone()).collect());
        Ok(Point {
            space,
            data: PointData::Product(components),
        })
    }

    /// Canonical basepoint of a space: the origin, the sheet apex, or the hub.
    pub fn origin(space: &SpaceDescriptor) -> Result<Self, S> {
        space.validate().map_err(Error::Invalid)?;
        Ok(match space {
            SpaceDescriptor::Euclidean(n) => Point::euclidean(vec![S::zero(); *n])?,
            SpaceDescriptor::Hyperbolic(n) => {
                let mut coords = vec![S::zero(); *n + 1];
                coords[0] = S::one();
                Point::hyperbolic(coords)?
            }
            SpaceDescriptor::Spider(k) => Point::spider_hub(*k)?,
            SpaceDescriptor::Product(parts) => {
                let comps = parts
                    .iter()
                    .map(Point::origin)
                    .collect::<Result<Vec<_>, S>>()?;
                Point::product(comps)?
            }
        })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn data(&self) -> &PointData<S> {
        &self.data
    }

    pub fn euclidean_coords(&self) -> Option<&[S]> {
        match &self.data {
            PointData::Euclidean(c) => Some(c),
            _ => None,
        }
    }

    pub fn components(&self) -> Option<&[Point<S>]> {
        match &self.data {
            PointData::Product(c) => Some(c),
            _ => None,
        }
    }

    pub fn spider_coords(&self) -> Option<(usize, S)> {
        match &self.data {
            PointData::Spider { leg, radius } => Some((*leg, *radius)),
            _ => None,
        }
    }

    fn check_same_space(&self, other: &Self) -> Result<(), S> {
        if self.space != other.space {
            Err(Error::mismatch(&self.space, &other.space))
        } else {
            Ok(())
        }
    }

    /// Metric distance between two points of the same space.
    pub fn distance(&self, other: &Self) -> Result<S, S> {
        self.check_same_space(other)?;
        Ok(dist_data(&self.data, &other.data))
    }

    /// Point `t` of the way along the unique geodesic from `self` to `other`.
    pub fn geodesic(&self, other: &Self, t: S) -> Result<Self, S> {
        self.check_same_space(other)?;
        if !(t >= S::zero() && t <= S::one()) {
            return Err(Error::domain(format!("geodesic parameter {t} outside [0,1]")));
        }
        if t == S::zero() || self == other {
            return Ok(self.clone());
        }
        if t == S::one() {
            return Ok(other.clone());
        }
        Ok(Point {
            space: self.space.clone(),
            data: geodesic_data(&self.data, &other.data, t),
        })
    }
}

fn dist_data<S: Scalar>(a: &PointData<S>, b: &PointData<S>) -> S {
    match (a, b) {
        (PointData::Euclidean(x), PointData::Euclidean(y)) => {
            let mut acc = S::zero();
            for (u, v) in x.iter().zip(y.iter()) {
                let d = *u - *v;
                acc += d * d;
            }
            acc.sqrt()
        }
        (PointData::Hyperbolic(x), PointData::Hyperbolic(y)) => hyperbolic::distance(x, y),
        (
            PointData::Spider { leg: la, radius: ra },
            PointData::Spider { leg: lb, radius: rb },
        ) => {
            if la == lb {
                (*ra - *rb).abs()
            } else {
                *ra + *rb
            }
        }
        (PointData::Product(xs), PointData::Product(ys)) => {
            let mut acc = S::zero();
            for (u, v) in xs.iter().zip(ys.iter()) {
                let d = dist_data(&u.data, &v.data);
                acc += d * d;
            }
            acc.sqrt()
        }
        _ => unreachable!("point data inconsistent with shared descriptor"),
    }
}

fn geodesic_data<S: Scalar>(a: &PointData<S>, b: &PointData<S>, t: S) -> PointData<S> {
    match (a, b) {
        (PointData::Euclidean(x), PointData::Euclidean(y)) => {
            let s = S::one() - t;
            PointData::Euclidean(
                x.iter()
                    .zip(y.iter())
                    .map(|(u, v)| s * *u + t * *v)
                    .collect(),
            )
        }
        (PointData::Hyperbolic(x), PointData::Hyperbolic(y)) => {
            PointData::Hyperbolic(hyperbolic::geodesic(x, y, t))
        }
        (
            PointData::Spider { leg: la, radius: ra },
            PointData::Spider { leg: lb, radius: rb },
        ) => {
            if la == lb {
                let r = (S::one() - t) * *ra + t * *rb;
                canonical_spider(*la, r)
            } else {
                // walk t * d(a,b) from a, through the hub when needed
                let walked = t * (*ra + *rb);
                if walked <= *ra {
                    canonical_spider(*la, *ra - walked)
                } else {
                    canonical_spider(*lb, walked - *ra)
                }
            }
        }
        (PointData::Product(xs), PointData::Product(ys)) => PointData::Product(
            xs.iter()
                .zip(ys.iter())
                .map(|(u, v)| Point {
                    space: u.space.clone(),
                    data: if u == v {
                        u.data.clone()
                    } else {
                        geodesic_data(&u.data, &v.data, t)
                    },
                })
                .collect(),
        ),
        _ => unreachable!("point data inconsistent with shared descriptor"),
    }
}

fn canonical_spider<S: Scalar>(leg: usize, radius: S) -> PointData<S> {
    let radius = radius.max(S::zero());
    if radius == S::zero() {
        PointData::Spider { leg: 1, radius }
    } else {
        PointData::Spider { leg, radius }
    }
}

/// Result of evaluating the CAT(0) comparison inequality on one quadruple.
#[derive(Debug, Clone, Copy)]
pub struct Cat0Check<S: Scalar> {
    /// `d(x, gamma_t)^2`.
    pub lhs: S,
    /// `(1-t) d(x,g0)^2 + t d(x,g1)^2 - t(1-t) d(g0,g1)^2`.
    pub rhs: S,
    /// `rhs - lhs`; non-negative (up to tolerance) in a CAT(0) space.
    pub slack: S,
    pub pass: bool,
}

/// Evaluates both sides of the CAT(0) inequality with `gamma_t` computed by
/// [`Point::geodesic`]. Passes iff `lhs <= rhs + 1e-9`.
pub fn check_cat0<S: Scalar>(
    x: &Point<S>,
    g0: &Point<S>,
    g1: &Point<S>,
    t: S,
) -> Result<Cat0Check<S>, S> {
    let gamma_t = g0.geodesic(g1, t)?;
    let d_xt = x.distance(&gamma_t)?;
    let d_x0 = x.distance(g0)?;
    let d_x1 = x.distance(g1)?;
    let d_01 = g0.distance(g1)?;
    let lhs = d_xt * d_xt;
    let rhs = (S::one() - t) * d_x0 * d_x0 + t * d_x1 * d_x1 - t * (S::one() - t) * d_01 * d_01;
    Ok(Cat0Check {
        lhs,
        rhs,
        slack: rhs - lhs,
        pass: lhs <= rhs + S::of(1e-9),
    })
}

/// Minimal structure a point type needs for resolvents, flows and heat
/// semigroups: a metric, geodesics, and a line-form text encoding.
///
/// Implemented by [`Point`] and by map fields over a finite Markov kernel
/// (the L2 structure of the heat-flow layer).
pub trait HadamardPoint<S: Scalar>: Clone + PartialEq + std::fmt::Debug {
    fn distance(&self, other: &Self) -> Result<S, S>;
    fn geodesic(&self, other: &Self, t: S) -> Result<Self, S>;
    fn encode(&self) -> String;
}

impl<S: Scalar> HadamardPoint<S> for Point<S> {
    fn distance(&self, other: &Self) -> Result<S, S> {
        Point::distance(self, other)
    }

    fn geodesic(&self, other: &Self, t: S) -> Result<Self, S> {
        Point::geodesic(self, other, t)
    }

    fn encode(&self) -> String {
        serial::encode(self)
    }
}

impl<S: Scalar> Point<S> {
    /// Serializes to the line-structured text form
    /// (`euclidean:...`, `hyperbolic:...`, `spider:leg,r`, `product:(...);(...)`).
    pub fn encode(&self) -> String {
        serial::encode(self)
    }

    /// Parses the line-structured text form. When `expected` is given the
    /// decoded point must live in that space; without it the space is
    /// inferred (a lone spider point infers `k = max(2, leg)`).
    pub fn decode(text: &str, expected: Option<&SpaceDescriptor>) -> Result<Self, S> {
        serial::decode(text, expected)
    }
}
