//! Independent numerical oracles.

use nalgebra::{DMatrix, DVector};

use hadamard::markov::{DirichletSpec, MapField};
use hadamard::space::Point;
use hadamard::Field64;

/// Matrix exponential by scaling and squaring with a [6/6] Padé approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    // scale so the 1-norm of the scaled matrix is at most 1/2
    let norm = a
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(s as i32);

    // [6/6] Pade: p(x) = sum c_k x^k, q(x) = p(-x), e^x ~ p(x)/q(x)
    let m = 6u64;
    let mut coeff = vec![0.0f64; (m + 1) as usize];
    for k in 0..=m {
        coeff[k as usize] = (factorial(2 * m - k) * factorial(m)) as f64
            / ((factorial(2 * m) * factorial(k) * factorial(m - k)) as f64);
    }
    let id = DMatrix::<f64>::identity(n, n);
    let mut term = id.clone();
    let mut num = &id * coeff[0];
    let mut den = &id * coeff[0];
    for k in 1..=m as usize {
        term = &term * &scaled;
        num += &term * coeff[k];
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        den += &term * (coeff[k] * sign);
    }
    let mut result = den
        .lu()
        .solve(&num)
        .expect("Pade denominator is invertible at this scaling");
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

fn factorial(k: u64) -> u128 {
    (1..=k as u128).product::<u128>().max(1)
}

/// Exact resolvent of a Euclidean linear map: `(I + lambda (I - A))^{-1} x`.
pub fn linear_resolvent(a: &DMatrix<f64>, lambda: f64, x: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let system = DMatrix::<f64>::identity(n, n) * (1.0 + lambda) - a * lambda;
    let rhs = DVector::from_column_slice(x);
    system
        .lu()
        .solve(&rhs)
        .expect("resolvent system is invertible for nonexpansive A")
        .iter()
        .copied()
        .collect()
}

/// Exact semigroup of a Euclidean linear map: `e^{-t (I - A)} x`.
pub fn linear_semigroup(a: &DMatrix<f64>, t: f64, x: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let generator = (a - DMatrix::<f64>::identity(n, n)) * t;
    let flow = expm(&generator);
    let y = flow * DVector::from_column_slice(x);
    y.iter().copied().collect()
}

/// Interior transition block of a Dirichlet instance, as a nalgebra matrix.
pub fn interior_block(spec: &DirichletSpec<f64>) -> (Vec<usize>, DMatrix<f64>) {
    let interior: Vec<usize> = spec.interior().iter().copied().collect();
    let d = interior.len();
    let mut q = DMatrix::<f64>::zeros(d, d);
    for (a, &i) in interior.iter().enumerate() {
        for (b, &j) in interior.iter().enumerate() {
            q[(a, b)] = spec.kernel().transition(i, j);
        }
    }
    (interior, q)
}

/// Exact harmonic solution for a Euclidean target: solves
/// `(I - Q) f_int = boundary inflow` coordinate by coordinate.
pub fn harmonic_euclidean(spec: &DirichletSpec<f64>) -> Field64 {
    let (interior, q) = interior_block(spec);
    let d = interior.len();
    let anchor = spec.anchor();
    let dim = anchor
        .value(0)
        .euclidean_coords()
        .expect("euclidean target")
        .len();
    let system = DMatrix::<f64>::identity(d, d) - &q;
    let mut values: Vec<Point<f64>> = anchor.values().to_vec();
    let mut solved = vec![vec![0.0; dim]; d];
    for c in 0..dim {
        let mut rhs = DVector::<f64>::zeros(d);
        for (a, &i) in interior.iter().enumerate() {
            let mut inflow = 0.0;
            for j in 0..spec.kernel().states() {
                if !spec.is_interior(j) {
                    inflow += spec.kernel().transition(i, j)
                        * anchor.value(j).euclidean_coords().unwrap()[c];
                }
            }
            rhs[a] = inflow;
        }
        let sol = system.clone().lu().solve(&rhs).expect("interior system solvable");
        for a in 0..d {
            solved[a][c] = sol[a];
        }
    }
    for (a, &i) in interior.iter().enumerate() {
        values[i] = Point::euclidean(solved[a].clone()).unwrap();
    }
    MapField::new(spec.kernel_arc().clone(), values).unwrap()
}

/// Interior trajectory of the *linear* continuous heat flow
/// `f(t) = harmonic + e^{-rate * t (I - Q)} (f0 - harmonic)` for Euclidean
/// targets; `rate` is 1 for the semigroup flow and 2 for the gradient flow
/// of the symmetrized energy.
pub fn linear_heat_flow(
    spec: &DirichletSpec<f64>,
    f0: &Field64,
    t: f64,
    rate: f64,
) -> Field64 {
    let (interior, q) = interior_block(spec);
    let d = interior.len();
    let harmonic = harmonic_euclidean(spec);
    let dim = f0.value(0).euclidean_coords().unwrap().len();
    let generator = (&q - DMatrix::<f64>::identity(d, d)) * (rate * t);
    let flow = expm(&generator);
    let mut values: Vec<Point<f64>> = f0.values().to_vec();
    for c in 0..dim {
        let dev = DVector::from_iterator(
            d,
            interior.iter().map(|&i| {
                f0.value(i).euclidean_coords().unwrap()[c]
                    - harmonic.value(i).euclidean_coords().unwrap()[c]
            }),
        );
        let evolved = &flow * dev;
        for (a, &i) in interior.iter().enumerate() {
            let mut coords = values[i].euclidean_coords().unwrap().to_vec();
            coords[c] = harmonic.value(i).euclidean_coords().unwrap()[c] + evolved[a];
            values[i] = Point::euclidean(coords).unwrap();
        }
    }
    MapField::new(f0.kernel_arc().clone(), values).unwrap()
}

fn spider_distance(a: (usize, f64), b: (usize, f64)) -> f64 {
    if a.0 == b.0 || a.1 == 0.0 || b.1 == 0.0 {
        (a.1 - b.1).abs()
    } else {
        a.1 + b.1
    }
}

/// Brute-force Dirichlet solve for spider targets with at most two interior
/// states: minimizes the energy over a `(leg, radius)` grid with the given
/// step. Used as the singular-target oracle.
pub fn spider_dirichlet_grid_search(
    spec: &DirichletSpec<f64>,
    legs: usize,
    r_max: f64,
    step: f64,
) -> Vec<(usize, f64)> {
    let interior: Vec<usize> = spec.interior().iter().copied().collect();
    assert!(
        (1..=2).contains(&interior.len()),
        "grid search supports 1 or 2 interior states"
    );
    let anchor = spec.anchor();
    let m = spec.kernel().states();
    let mut boundary: Vec<Option<(usize, f64)>> = vec![None; m];
    for i in 0..m {
        if !spec.is_interior(i) {
            let (leg, r) = anchor.value(i).spider_coords().expect("spider target");
            boundary[i] = Some((leg, r));
        }
    }
    let energy = |assign: &[(usize, f64)]| -> f64 {
        let value = |i: usize| -> (usize, f64) {
            if let Some(b) = boundary[i] {
                b
            } else {
                let pos = interior.iter().position(|&s| s == i).unwrap();
                assign[pos]
            }
        };
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let p = spec.kernel().transition(i, j);
                if p == 0.0 || i == j {
                    continue;
                }
                let d = spider_distance(value(i), value(j));
                acc += spec.kernel().mu()[i] * p * d * d;
            }
        }
        0.5 * acc
    };
    let mut candidates: Vec<(usize, f64)> = Vec::new();
    let steps = (r_max / step).ceil() as usize;
    for leg in 1..=legs {
        for s in 0..=steps {
            let r = s as f64 * step;
            if r == 0.0 && leg > 1 {
                continue;
            }
            candidates.push((leg, r));
        }
    }
    let mut best: Option<(f64, Vec<(usize, f64)>)> = None;
    if interior.len() == 1 {
        for &c in &candidates {
            let e = energy(&[c]);
            if best.as_ref().map_or(true, |(b, _)| e < *b) {
                best = Some((e, vec![c]));
            }
        }
    } else {
        for &c1 in &candidates {
            for &c2 in &candidates {
                let e = energy(&[c1, c2]);
                if best.as_ref().map_or(true, |(b, _)| e < *b) {
                    best = Some((e, vec![c1, c2]));
                }
            }
        }
    }
    best.expect("non-empty grid").1
}
