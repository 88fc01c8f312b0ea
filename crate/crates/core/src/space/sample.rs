//! Random point sampling, used by construction-time map validation and by
//! the property-sampling commands.

use rand::Rng;

use crate::scalar::Scalar;

use super::{Point, SpaceDescriptor};

/// Draws a point of `space` with coordinates of magnitude about `radius`.
pub fn sample_point<S: Scalar, R: Rng + ?Sized>(
    space: &SpaceDescriptor,
    rng: &mut R,
    radius: f64,
) -> Point<S> {
    match space {
        SpaceDescriptor::Euclidean(n) => {
            let coords = (0..*n)
                .map(|_| S::of(rng.gen_range(-radius..=radius)))
                .collect();
            Point::euclidean(coords).expect("sampled euclidean point")
        }
        SpaceDescriptor::Hyperbolic(n) => {
            let spatial = (0..*n)
                .map(|_| S::of(rng.gen_range(-radius..=radius)))
                .collect();
            Point::hyperbolic_lift(spatial).expect("sampled hyperbolic point")
        }
        SpaceDescriptor::Spider(k) => {
            let leg = rng.gen_range(1..=*k);
            let r = S::of(rng.gen_range(0.0..=radius));
            Point::spider(*k, leg, r).expect("sampled spider point")
        }
        SpaceDescriptor::Product(parts) => {
            let comps = parts
                .iter()
                .map(|p| sample_point(p, rng, radius))
                .collect();
            Point::product(comps).expect("sampled product point")
        }
    }
}
