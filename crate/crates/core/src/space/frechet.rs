//! Weighted Fréchet means (barycenters).
//!
//! Euclidean and spider backends have exact closed forms; the spider form in
//! particular is what makes the nonlinear Markov operator exactly testable.
//! Product means split componentwise because the objective separates.
//! Hyperbolic means run the tangent-space fixed-point iteration.

use std::collections::BTreeSet;

use crate::error::{ConvergenceFailure, Error};
use crate::scalar::Scalar;
use crate::Result;

use super::{hyperbolic, Point, PointData, SpaceDescriptor};

/// A non-empty weighted collection of points of one space.
#[derive(Debug, Clone)]
pub struct WeightedPointSet<S: Scalar> {
    points: Vec<Point<S>>,
    weights: Vec<S>,
    space: SpaceDescriptor,
    total_weight: S,
}

impl<S: Scalar> WeightedPointSet<S> {
    pub fn new(points: Vec<Point<S>>, weights: Vec<S>) -> Result<Self, S> {
        if points.is_empty() {
            return Err(Error::invalid("weighted point set must be non-empty"));
        }
        if points.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let space = points[0].space().clone();
        for p in &points[1..] {
            if p.space() != &space {
                return Err(Error::mismatch(&space, p.space()));
            }
        }
        let mut total = S::zero();
        for w in &weights {
            if *w < S::zero() || !w.is_finite() {
                return Err(Error::invalid("weights must be finite and non-negative"));
            }
            total += *w;
        }
        if total <= S::zero() {
            return Err(Error::invalid("weights must sum to a positive value"));
        }
        Ok(WeightedPointSet {
            points,
            weights,
            space,
            total_weight: total,
        })
    }

    pub fn points(&self) -> &[Point<S>] {
        &self.points
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn total_weight(&self) -> S {
        self.total_weight
    }

    /// `sum_i w_i d(z, p_i)^2`, the quantity the Fréchet mean minimizes.
    pub fn objective(&self, z: &Point<S>) -> Result<S, S> {
        let mut acc = S::zero();
        for (p, w) in self.points.iter().zip(self.weights.iter()) {
            let d = z.distance(p)?;
            acc += *w * d * d;
        }
        Ok(acc)
    }

    pub fn mean(&self) -> Result<Point<S>, S> {
        frechet_mean(self)
    }
}

/// The unique minimizer of `z -> sum_i w_i d(z, p_i)^2`.
pub fn frechet_mean<S: Scalar>(set: &WeightedPointSet<S>) -> Result<Point<S>, S> {
    match set.space() {
        SpaceDescriptor::Euclidean(_) => euclidean_mean(set),
        SpaceDescriptor::Spider(k) => spider_mean(set, *k),
        SpaceDescriptor::Hyperbolic(_) => hyperbolic_mean(set),
        SpaceDescriptor::Product(parts) => product_mean(set, parts.len()),
    }
}

fn euclidean_mean<S: Scalar>(set: &WeightedPointSet<S>) -> Result<Point<S>, S> {
    let n = set.points[0].euclidean_coords().expect("euclidean").len();
    let mut acc = vec![S::zero(); n];
    for (p, w) in set.points.iter().zip(set.weights.iter()) {
        for (a, c) in acc.iter_mut().zip(p.euclidean_coords().expect("euclidean")) {
            *a += *w * *c;
        }
    }
    for a in acc.iter_mut() {
        *a = *a / set.total_weight;
    }
    Point::euclidean(acc)
}

/// Exact spider mean: per candidate leg, the clamped weighted signed radius,
/// then the best objective value; ties resolve to the lowest leg index.
fn spider_mean<S: Scalar>(set: &WeightedPointSet<S>, legs: usize) -> Result<Point<S>, S> {
    let mut candidate_legs: BTreeSet<usize> = BTreeSet::new();
    let mut total_wr = S::zero();
    for (p, w) in set.points.iter().zip(set.weights.iter()) {
        let (leg, r) = p.spider_coords().expect("spider");
        candidate_legs.insert(leg);
        total_wr += *w * r;
    }
    let mut best: Option<(S, Point<S>)> = None;
    for leg in candidate_legs {
        let mut own = S::zero();
        for (p, w) in set.points.iter().zip(set.weights.iter()) {
            let (l, r) = p.spider_coords().expect("spider");
            if l == leg {
                own += *w * r;
            }
        }
        // objective derivative on this leg vanishes at (own - other)/W
        let r_star = ((own + own - total_wr) / set.total_weight).max(S::zero());
        let cand = Point::spider(legs, leg, r_star)?;
        let obj = set.objective(&cand)?;
        match &best {
            Some((b, _)) if obj >= *b => {}
            _ => best = Some((obj, cand)),
        }
    }
    Ok(best.expect("non-empty candidate set").1)
}

fn hyperbolic_mean<S: Scalar>(set: &WeightedPointSet<S>) -> Result<Point<S>, S> {
    // heaviest point is a reasonable starting iterate
    let start = set
        .points
        .iter()
        .zip(set.weights.iter())
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite weights"))
        .expect("non-empty")
        .0;
    let mut z: Vec<S> = match start.data() {
        PointData::Hyperbolic(c) => c.clone(),
        _ => unreachable!(),
    };
    let tol = S::of(1e-10).max(S::epsilon() * S::of(8.0));
    let max_iter = 10_000u64;
    for it in 0..max_iter {
        let dim = z.len();
        let mut v = vec![S::zero(); dim];
        for (p, w) in set.points.iter().zip(set.weights.iter()) {
            if *w == S::zero() {
                continue;
            }
            let pc = match p.data() {
                PointData::Hyperbolic(c) => c,
                _ => unreachable!(),
            };
            let lg = hyperbolic::log_map(&z, pc);
            for (vi, li) in v.iter_mut().zip(lg.iter()) {
                *vi += *w * *li;
            }
        }
        for vi in v.iter_mut() {
            *vi = *vi / set.total_weight;
        }
        // the step moves z by exactly the tangent norm of v, so this is the
        // successive-iterate test, measured where it is numerically stable
        let moved = hyperbolic::norm_tangent(&v);
        if moved <= tol {
            return Point::hyperbolic(z);
        }
        z = hyperbolic::exp_map(&z, &v);
        if it + 1 == max_iter {
            let last = Point::hyperbolic(z.clone())?;
            return Err(Error::NoConvergence(
                ConvergenceFailure::new(max_iter, moved).with_last(last.encode()),
            ));
        }
    }
    unreachable!()
}

fn product_mean<S: Scalar>(set: &WeightedPointSet<S>, arity: usize) -> Result<Point<S>, S> {
    let mut comps = Vec::with_capacity(arity);
    for c in 0..arity {
        let pts: Vec<Point<S>> = set
            .points
            .iter()
            .map(|p| p.components().expect("product")[c].clone())
            .collect();
        let sub = WeightedPointSet::new(pts, set.weights.clone())?;
        comps.push(frechet_mean(&sub)?);
    }
    Point::product(comps)
}
