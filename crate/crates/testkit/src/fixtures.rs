//! Named fixture maps and Dirichlet instances shared across the suites.

use std::collections::BTreeSet;
use std::sync::Arc;

use hadamard::linalg::Matrix;
use hadamard::markov::{DirichletInstance, DirichletSpec, MapField, MarkovKernel};
use hadamard::operators::NonexpansiveMap;
use hadamard::space::{ConvexSet, Point, SpaceDescriptor};
use hadamard::{Map64, Point64};

/// Quarter-turn rotation of the plane; Fix F = {0}.
pub fn rot90() -> Map64 {
    NonexpansiveMap::linear(Matrix::from_rows(vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap())
        .unwrap()
        .with_fixed_set(ConvexSet::singleton(Point::euclidean(vec![0.0, 0.0]).unwrap()))
        .unwrap()
}

/// Projection of the plane onto the x-axis.
pub fn line_projection() -> Map64 {
    NonexpansiveMap::projection(
        ConvexSet::affine_subspace(
            Point::euclidean(vec![0.0, 0.0]).unwrap(),
            vec![vec![1.0, 0.0]],
        )
        .unwrap(),
    )
    .unwrap()
}

/// Constant map at the origin of the plane.
pub fn origin_constant() -> Map64 {
    NonexpansiveMap::constant(Point::euclidean(vec![0.0, 0.0]).unwrap()).unwrap()
}

/// Average of the projections onto spider legs 1 and 2; Fix F = {hub}.
pub fn spider_leg_average() -> Map64 {
    let p1 = NonexpansiveMap::projection(
        ConvexSet::spider_subtree(3, vec![(1, f64::INFINITY)]).unwrap(),
    )
    .unwrap();
    let p2 = NonexpansiveMap::projection(
        ConvexSet::spider_subtree(3, vec![(2, f64::INFINITY)]).unwrap(),
    )
    .unwrap();
    NonexpansiveMap::geodesic_average(vec![(p1, 0.5), (p2, 0.5)])
        .unwrap()
        .with_fixed_set(ConvexSet::singleton(Point::spider_hub(3).unwrap()))
        .unwrap()
}

fn e1(x: f64) -> Point64 {
    Point::euclidean(vec![x]).unwrap()
}

/// Nearest-neighbor walk on the 4-node path with uniform weights and
/// reflecting self-loops at the ends; interior states are the middle two,
/// boundary values 0 and 3. The harmonic solution is `(1, 2)`.
pub fn path_instance() -> DirichletInstance<f64> {
    let kernel = Arc::new(
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
    );
    let anchor = MapField::new(
        kernel.clone(),
        vec![e1(0.0), e1(0.0), e1(0.0), e1(3.0)],
    )
    .unwrap();
    let spec = DirichletSpec::new(kernel, BTreeSet::from([1usize, 2]), anchor.clone()).unwrap();
    DirichletInstance {
        spec,
        initial: anchor,
    }
}

/// 5-node star (hub state 1, leaves 2..5) mapped into spider(3). Leaves
/// 2..4 carry boundary values `(leg_i, 1)`; the hub state and leaf 5 are
/// interior. The solution pins both interior states at the spider hub.
pub fn star_spider_instance() -> DirichletInstance<f64> {
    let kernel = Arc::new(
        MarkovKernel::new(
            vec![
                vec![0.0, 0.25, 0.25, 0.25, 0.25],
                vec![1.0, 0.0, 0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0, 0.0, 0.0],
            ],
            vec![4.0, 1.0, 1.0, 1.0, 1.0],
        )
        .unwrap(),
    );
    let hub = Point::spider_hub(3).unwrap();
    let anchor = MapField::new(
        kernel.clone(),
        vec![
            Point::spider(3, 1, 0.75).unwrap(),
            Point::spider(3, 1, 1.0).unwrap(),
            Point::spider(3, 2, 1.0).unwrap(),
            Point::spider(3, 3, 1.0).unwrap(),
            hub,
        ],
    )
    .unwrap();
    let spec = DirichletSpec::new(kernel, BTreeSet::from([0usize, 4]), anchor.clone()).unwrap();
    DirichletInstance {
        spec,
        initial: anchor,
    }
}

/// The fixture maps with a nonempty, known fixed-point set, together with a
/// certified fixed point and a sensible start.
pub fn fixture_maps_with_fixed_points() -> Vec<(&'static str, Map64, Point64, Point64)> {
    vec![
        (
            "rot90",
            rot90(),
            Point::euclidean(vec![0.0, 0.0]).unwrap(),
            Point::euclidean(vec![1.0, 0.0]).unwrap(),
        ),
        (
            "line-projection",
            line_projection(),
            Point::euclidean(vec![0.25, 0.0]).unwrap(),
            Point::euclidean(vec![0.25, 1.0]).unwrap(),
        ),
        (
            "origin-constant",
            origin_constant(),
            Point::euclidean(vec![0.0, 0.0]).unwrap(),
            Point::euclidean(vec![0.8, -0.6]).unwrap(),
        ),
        (
            "spider-leg-average",
            spider_leg_average(),
            Point::spider_hub(3).unwrap(),
            Point::spider(3, 3, 1.5).unwrap(),
        ),
    ]
}

pub fn euclidean2() -> SpaceDescriptor {
    SpaceDescriptor::Euclidean(2)
}
