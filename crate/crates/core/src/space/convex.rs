//! Closed convex sets with exactly computable metric projections.

use std::collections::BTreeMap;

use crate::error::Error;
use crate::linalg;
use crate::scalar::Scalar;
use crate::Result;

use super::{Point, SpaceDescriptor};

/// A closed, geodesically convex subset of one of the space backends.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet<S: Scalar> {
    /// `{p}` in any backend.
    Singleton(Point<S>),
    /// Affine subspace `base + span(basis)` of a Euclidean backend; the
    /// stored basis is orthonormal.
    EuclideanAffine { base: Point<S>, basis: Vec<Vec<S>> },
    /// Union of initial leg segments `{(leg, r) : r <= cap(leg)}` over a set
    /// of allowed legs; always contains the hub.
    SpiderSubtree {
        space: SpaceDescriptor,
        caps: BTreeMap<usize, S>,
    },
    /// The whole space (projection is the identity).
    WholeSpace(SpaceDescriptor),
}

impl<S: Scalar> ConvexSet<S> {
    pub fn singleton(p: Point<S>) -> Self {
        ConvexSet::Singleton(p)
    }

    pub fn whole_space(space: SpaceDescriptor) -> Result<Self, S> {
        space.validate().map_err(Error::Invalid)?;
        Ok(ConvexSet::WholeSpace(space))
    }

    /// Builds an affine subspace from a base point and spanning directions.
    /// The directions are orthonormalized; linearly dependent ones are
    /// dropped. An empty span yields the singleton `{base}` behavior.
    pub fn affine_subspace(base: Point<S>, spanning: Vec<Vec<S>>) -> Result<Self, S> {
        let n = match base.space() {
            SpaceDescriptor::Euclidean(n) => *n,
            other => {
                return Err(Error::invalid(format!(
                    "affine subspace requires a euclidean space, got {other}"
                )))
            }
        };
        let mut basis: Vec<Vec<S>> = Vec::new();
        for mut v in spanning {
            if v.len() != n {
                return Err(Error::invalid(format!(
                    "spanning vector of length {} in euclidean({n})",
                    v.len()
                )));
            }
            for e in &basis {
                let c = linalg::dot(&v, e);
                for (vi, ei) in v.iter_mut().zip(e.iter()) {
                    *vi = *vi - c * *ei;
                }
            }
            let norm = linalg::norm2(&v);
            if norm > S::of(1e-12) {
                for vi in v.iter_mut() {
                    *vi = *vi / norm;
                }
                basis.push(v);
            }
        }
        Ok(ConvexSet::EuclideanAffine { base, basis })
    }

    /// Spider subtree from `(leg, radius cap)` pairs; `cap` may be infinite.
    pub fn spider_subtree(legs: usize, caps: Vec<(usize, S)>) -> Result<Self, S> {
        let space = SpaceDescriptor::Spider(legs);
        space.validate().map_err(Error::Invalid)?;
        if caps.is_empty() {
            return Err(Error::invalid("spider subtree needs at least one leg"));
        }
        let mut map = BTreeMap::new();
        for (leg, cap) in caps {
            if leg < 1 || leg > legs {
                return Err(Error::invalid(format!("leg index {leg} outside 1..={legs}")));
            }
            if cap < S::zero() || cap.is_nan() {
                return Err(Error::invalid("radius cap must be non-negative"));
            }
            map.insert(leg, cap);
        }
        Ok(ConvexSet::SpiderSubtree { space, caps: map })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        match self {
            ConvexSet::Singleton(p) => p.space(),
            ConvexSet::EuclideanAffine { base, .. } => base.space(),
            ConvexSet::SpiderSubtree { space, .. } => space,
            ConvexSet::WholeSpace(space) => space,
        }
    }

    /// Nearest point of the set; unique because the set is convex and the
    /// space is Hadamard.
    pub fn project(&self, x: &Point<S>) -> Result<Point<S>, S> {
        if self.space() != x.space() {
            return Err(Error::mismatch(self.space(), x.space()));
        }
        match self {
            ConvexSet::Singleton(p) => Ok(p.clone()),
            ConvexSet::WholeSpace(_) => Ok(x.clone()),
            ConvexSet::EuclideanAffine { base, basis } => {
                let xb = x.euclidean_coords().expect("euclidean point");
                let bb = base.euclidean_coords().expect("euclidean point");
                let rel: Vec<S> = xb.iter().zip(bb.iter()).map(|(a, b)| *a - *b).collect();
                let mut out: Vec<S> = bb.to_vec();
                for e in basis {
                    let c = linalg::dot(&rel, e);
                    for (o, ei) in out.iter_mut().zip(e.iter()) {
                        *o = *o + c * *ei;
                    }
                }
                Point::euclidean(out)
            }
            ConvexSet::SpiderSubtree { space, caps } => {
                let (leg, radius) = x.spider_coords().expect("spider point");
                let legs = match space {
                    SpaceDescriptor::Spider(k) => *k,
                    _ => unreachable!(),
                };
                match caps.get(&leg) {
                    Some(cap) if radius > S::zero() => {
                        Point::spider(legs, leg, radius.min(*cap))
                    }
                    // hub, or a leg outside the subtree: nearest point is the hub
                    _ => Point::spider_hub(legs),
                }
            }
        }
    }

    /// Whether `x` lies in the set, up to `tol` in metric distance.
    pub fn contains(&self, x: &Point<S>, tol: S) -> Result<bool, S> {
        let p = self.project(x)?;
        Ok(p.distance(x)? <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_projection_onto_line() {
        let line = ConvexSet::affine_subspace(
            Point::euclidean(vec![0.0, 0.0]).unwrap(),
            vec![vec![1.0, 0.0]],
        )
        .unwrap();
        let p = line.project(&Point::euclidean(vec![3.0, 4.0]).unwrap()).unwrap();
        assert_eq!(p, Point::euclidean(vec![3.0, 0.0]).unwrap());
    }

    #[test]
    fn excluded_leg_projects_to_hub() {
        let subtree = ConvexSet::spider_subtree(3, vec![(1, f64::INFINITY)]).unwrap();
        let p = subtree
            .project(&Point::spider(3, 2, 2.5).unwrap())
            .unwrap();
        assert_eq!(p, Point::spider_hub(3).unwrap());
    }

    #[test]
    fn radius_cap_clamps() {
        let subtree = ConvexSet::spider_subtree(3, vec![(2, 1.5)]).unwrap();
        let p = subtree.project(&Point::spider(3, 2, 4.0).unwrap()).unwrap();
        assert_eq!(p, Point::spider(3, 2, 1.5).unwrap());
    }

    #[test]
    fn singleton_projects_everything_to_its_point() {
        let q = Point::spider(3, 2, 1.0).unwrap();
        let set = ConvexSet::singleton(q.clone());
        let p = set.project(&Point::spider(3, 1, 7.0).unwrap()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn dependent_spanning_vectors_are_dropped() {
        let set = ConvexSet::affine_subspace(
            Point::euclidean(vec![0.0, 0.0]).unwrap(),
            vec![vec![1.0, 0.0], vec![2.0, 0.0]],
        )
        .unwrap();
        match &set {
            ConvexSet::EuclideanAffine { basis, .. } => assert_eq!(basis.len(), 1),
            _ => panic!("expected affine set"),
        }
    }
}
