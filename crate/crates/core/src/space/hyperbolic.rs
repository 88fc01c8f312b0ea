//! Hyperboloid-model primitives: Minkowski form, log/exp maps, geodesics.
//!
//! Points are vectors `x = (x0, .., xn)` with `<x,x>_M = -1` and `x0 > 0`,
//! where `<x,y>_M = -x0 y0 + sum_i xi yi`. Every arithmetic result is
//! renormalized back onto the sheet.
//!
//! Distances use the chordal identity `cosh d - 1 = |a-b|_M^2 / 2`, so
//! `d = 2 asinh(|a-b|_M / 2)`: unlike the direct `acosh` form this stays
//! accurate down to machine precision for nearly coincident points, which
//! the Fréchet-mean iteration relies on.

use crate::scalar::Scalar;

pub(crate) fn mdot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = -(a[0] * b[0]);
    for (x, y) in a[1..].iter().zip(b[1..].iter()) {
        acc += *x * *y;
    }
    acc
}

/// `cosh d(a,b) - 1`, computed stably from coordinate differences.
fn chordal_half_sq<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = -(a[0] - b[0]) * (a[0] - b[0]);
    for (x, y) in a[1..].iter().zip(b[1..].iter()) {
        let d = *x - *y;
        acc += d * d;
    }
    (acc * S::of(0.5)).max(S::zero())
}

pub(crate) fn renormalize<S: Scalar>(coords: &mut [S]) -> std::result::Result<(), String> {
    let q = mdot(coords, coords);
    if q >= S::zero() {
        return Err(format!("vector is not timelike (<x,x>_M = {q})"));
    }
    let scale = (-q).sqrt();
    for c in coords.iter_mut() {
        *c = *c / scale;
    }
    if coords[0] <= S::zero() {
        return Err("renormalized point fell off the upper sheet".into());
    }
    Ok(())
}

pub(crate) fn distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    // cosh d = 1 + q with q = |a-b|_M^2 / 2, so d = 2 asinh(sqrt(q/2))
    let q = chordal_half_sq(a, b);
    let two = S::of(2.0);
    two * (q / two).sqrt().asinh()
}

pub(crate) fn norm_tangent<S: Scalar>(v: &[S]) -> S {
    mdot(v, v).max(S::zero()).sqrt()
}

/// Tangent vector at `base` pointing to `p` with length `d(base, p)`.
pub(crate) fn log_map<S: Scalar>(base: &[S], p: &[S]) -> Vec<S> {
    let q = chordal_half_sq(base, p);
    let c = S::one() + q;
    let theta = distance(base, p);
    // u = p - c * base is spacelike with |u|_M = sinh(theta)
    let u: Vec<S> = p
        .iter()
        .zip(base.iter())
        .map(|(pi, bi)| *pi - c * *bi)
        .collect();
    let sh = (q * (q + S::of(2.0))).sqrt();
    let factor = if sh > S::zero() { theta / sh } else { S::one() };
    u.into_iter().map(|v| v * factor).collect()
}

/// Follows the geodesic from `base` with initial velocity `v` for unit time.
pub(crate) fn exp_map<S: Scalar>(base: &[S], v: &[S]) -> Vec<S> {
    let r = norm_tangent(v);
    let mut out: Vec<S> = if r < S::of(1e-12) {
        base.iter().zip(v.iter()).map(|(b, w)| *b + *w).collect()
    } else {
        let ch = r.cosh();
        let factor = r.sinh() / r;
        base.iter()
            .zip(v.iter())
            .map(|(b, w)| ch * *b + factor * *w)
            .collect()
    };
    renormalize(&mut out).expect("exp map stays on the sheet");
    out
}

pub(crate) fn geodesic<S: Scalar>(a: &[S], b: &[S], t: S) -> Vec<S> {
    let mut v = log_map(a, b);
    for w in v.iter_mut() {
        *w = *w * t;
    }
    exp_map(a, &v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_exp_round_trip() {
        let a = vec![1.0f64, 0.0, 0.0];
        let b = vec![2.0f64.cosh(), 2.0f64.sinh() * 0.6, 2.0f64.sinh() * 0.8];
        let v = log_map(&a, &b);
        let back = exp_map(&a, &v);
        for (x, y) in back.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn geodesic_has_constant_speed() {
        let a = vec![1.0f64, 0.0, 0.0];
        let b = vec![1.5f64.cosh(), 1.5f64.sinh(), 0.0];
        let d = distance(&a, &b);
        let mid = geodesic(&a, &b, 0.25);
        assert!((distance(&a, &mid) - 0.25 * d).abs() < 1e-12);
        assert!((distance(&mid, &b) - 0.75 * d).abs() < 1e-12);
    }

    #[test]
    fn chordal_distance_resolves_tiny_separations() {
        let a = vec![1.0f64, 0.0, 0.0];
        let b = geodesic(&a, &vec![2.0f64.cosh(), 2.0f64.sinh(), 0.0], 1e-12 / 2.0);
        let d = distance(&a, &b);
        assert!(d > 0.0 && d < 1e-11);
    }

    #[test]
    fn chordal_and_acosh_agree_at_moderate_range() {
        let a = vec![1.3f64.cosh(), 1.3f64.sinh(), 0.0];
        let b = vec![2.0f64.cosh(), 0.0, 2.0f64.sinh()];
        let c = (-mdot(&a, &b)).max(1.0);
        assert!((distance(&a, &b) - c.acosh()).abs() < 1e-12);
    }
}
