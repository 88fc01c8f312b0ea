//! Random instance generators: nonexpansive maps per backend, symmetric
//! kernels, and fields.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use hadamard::linalg::Matrix;
use hadamard::markov::{MapField, MarkovKernel};
use hadamard::operators::{Isometry, MapKind, NonexpansiveMap};
use hadamard::space::{sample_point, ConvexSet, SpaceDescriptor};
use hadamard::{Field64, Kernel64, Map64, Point64};

/// Random orthogonal matrix via QR of a Gaussian sample.
pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0f64..1.0));
        let qr = a.qr();
        let q = qr.q();
        let r = qr.r();
        if (0..n).all(|i| r[(i, i)].abs() > 1e-8) {
            // fix the sign convention so Q is uniquely determined by A
            let mut q = q;
            for i in 0..n {
                if r[(i, i)] < 0.0 {
                    for row in 0..n {
                        q[(row, i)] = -q[(row, i)];
                    }
                }
            }
            return q;
        }
    }
}

/// Random orthogonal projection matrix onto a subspace of dimension `k`.
pub fn random_projection_matrix<R: Rng>(n: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    let q = random_orthogonal(n, rng);
    let u = q.columns(0, k);
    &u * u.transpose()
}

/// Random nonexpansive linear matrix from the orthogonal / projection /
/// convex-combination family.
pub fn random_nonexpansive_matrix<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    match rng.gen_range(0..3) {
        0 => random_orthogonal(n, rng),
        1 => {
            let k = rng.gen_range(0..=n);
            random_projection_matrix(n, k, rng)
        }
        _ => {
            let alpha: f64 = rng.gen_range(0.0..=1.0);
            let o = random_orthogonal(n, rng);
            let k = rng.gen_range(0..=n);
            let p = random_projection_matrix(n, k, rng);
            o * (1.0 - alpha) + p * alpha
        }
    }
}

pub fn to_core_matrix(a: &DMatrix<f64>) -> Matrix<f64> {
    let rows: Vec<Vec<f64>> = (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
        .collect();
    Matrix::from_rows(rows).expect("non-empty matrix")
}

/// Lorentz boost along spatial axis `axis` (1-based among the spatial
/// coordinates) with the given rapidity, for hyperbolic dimension `n`.
pub fn lorentz_boost(n: usize, axis: usize, rapidity: f64) -> Matrix<f64> {
    let dim = n + 1;
    let mut rows = vec![vec![0.0; dim]; dim];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let c = rapidity.cosh();
    let s = rapidity.sinh();
    rows[0][0] = c;
    rows[0][axis] = s;
    rows[axis][0] = s;
    rows[axis][axis] = c;
    Matrix::from_rows(rows).expect("boost matrix")
}

/// Lorentz transform that rotates two spatial axes, fixing the apex.
pub fn lorentz_rotation(n: usize, i: usize, j: usize, angle: f64) -> Matrix<f64> {
    let dim = n + 1;
    let mut rows = vec![vec![0.0; dim]; dim];
    for (k, row) in rows.iter_mut().enumerate() {
        row[k] = 1.0;
    }
    rows[i][i] = angle.cos();
    rows[i][j] = -angle.sin();
    rows[j][i] = angle.sin();
    rows[j][j] = angle.cos();
    Matrix::from_rows(rows).expect("rotation matrix")
}

fn random_isometry<R: Rng>(space: &SpaceDescriptor, rng: &mut R) -> Isometry<f64> {
    match space {
        SpaceDescriptor::Euclidean(n) => {
            let rot = random_orthogonal(*n, rng);
            let translation = (0..*n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Isometry::EuclideanRigid {
                linear: to_core_matrix(&rot),
                translation,
            }
        }
        SpaceDescriptor::Hyperbolic(n) => {
            if *n >= 2 && rng.gen_bool(0.5) {
                let angle = rng.gen_range(0.0..std::f64::consts::PI);
                Isometry::Lorentz(lorentz_rotation(*n, 1, 2, angle))
            } else {
                let axis = rng.gen_range(1..=*n);
                let rapidity = rng.gen_range(-0.8..0.8);
                Isometry::Lorentz(lorentz_boost(*n, axis, rapidity))
            }
        }
        SpaceDescriptor::Spider(k) => {
            let mut images: Vec<usize> = (1..=*k).collect();
            for i in (1..images.len()).rev() {
                let j = rng.gen_range(0..=i);
                images.swap(i, j);
            }
            Isometry::SpiderPermutation(images)
        }
        SpaceDescriptor::Product(parts) => {
            Isometry::Product(parts.iter().map(|p| random_isometry(p, rng)).collect())
        }
    }
}

fn random_convex_set<R: Rng>(space: &SpaceDescriptor, rng: &mut R) -> ConvexSet<f64> {
    match space {
        SpaceDescriptor::Euclidean(n) => {
            let base: Point64 = sample_point(space, rng, 1.5);
            let k = rng.gen_range(0..=*n);
            let spanning = (0..k)
                .map(|_| (0..*n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            ConvexSet::affine_subspace(base, spanning).expect("affine set")
        }
        SpaceDescriptor::Spider(k) => {
            let count = rng.gen_range(1..=*k);
            let caps = (1..=count)
                .map(|leg| {
                    let cap = if rng.gen_bool(0.5) {
                        f64::INFINITY
                    } else {
                        rng.gen_range(0.0..2.0)
                    };
                    (leg, cap)
                })
                .collect();
            ConvexSet::spider_subtree(*k, caps).expect("subtree")
        }
        _ => ConvexSet::singleton(sample_point(space, rng, 1.5)),
    }
}

/// Random nonexpansive map on any backend: projections, isometries,
/// geodesic averages and short compositions of those.
pub fn random_map<R: Rng>(space: &SpaceDescriptor, rng: &mut R) -> Map64 {
    random_map_depth(space, rng, 2)
}

/// Random map with a closed-form apply (no nested Fréchet averaging), for
/// suites that evaluate the map hundreds of thousands of times per instance.
pub fn random_cheap_map<R: Rng>(space: &SpaceDescriptor, rng: &mut R) -> Map64 {
    random_map_depth(space, rng, 0)
}

fn random_map_depth<R: Rng>(space: &SpaceDescriptor, rng: &mut R, depth: usize) -> Map64 {
    let leaf = |rng: &mut R| -> Map64 {
        match rng.gen_range(0..3) {
            0 => NonexpansiveMap::projection(random_convex_set(space, rng)).expect("projection"),
            1 => NonexpansiveMap::isometry(space.clone(), random_isometry(space, rng))
                .expect("isometry"),
            _ => match space {
                SpaceDescriptor::Euclidean(n) => NonexpansiveMap::linear(to_core_matrix(
                    &random_nonexpansive_matrix(*n, rng),
                ))
                .expect("linear map"),
                _ => NonexpansiveMap::constant(sample_point(space, rng, 1.5)).expect("constant"),
            },
        }
    };
    if depth == 0 || rng.gen_bool(0.5) {
        return leaf(rng);
    }
    if rng.gen_bool(0.5) {
        let k = rng.gen_range(2..=3);
        let parts = (0..k)
            .map(|_| {
                (
                    random_map_depth(space, rng, depth - 1),
                    rng.gen_range(0.1..1.0),
                )
            })
            .collect();
        NonexpansiveMap::geodesic_average(parts).expect("average")
    } else {
        let k = rng.gen_range(2..=3);
        let maps = (0..k).map(|_| random_map_depth(space, rng, depth - 1)).collect();
        NonexpansiveMap::composition(maps).expect("composition")
    }
}

/// Random mu-symmetric kernel: symmetric edge weights with the measure set
/// to the row sums, which makes row-stochasticity and symmetry exact.
pub fn random_symmetric_kernel<R: Rng>(m: usize, rng: &mut R) -> Arc<Kernel64> {
    let mut w = vec![vec![0.0f64; m]; m];
    for i in 0..m {
        w[i][i] = rng.gen_range(0.2..1.0);
        for j in (i + 1)..m {
            let weight = if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.1..1.0)
            };
            w[i][j] = weight;
            w[j][i] = weight;
        }
    }
    let mu: Vec<f64> = w.iter().map(|row| row.iter().sum()).collect();
    let rows: Vec<Vec<f64>> = w
        .iter()
        .zip(mu.iter())
        .map(|(row, &total)| row.iter().map(|v| v / total).collect())
        .collect();
    Arc::new(MarkovKernel::new(rows, mu).expect("constructed kernel is valid"))
}

/// Random field over a kernel with values in `space`.
pub fn random_field<R: Rng>(
    kernel: &Arc<Kernel64>,
    space: &SpaceDescriptor,
    rng: &mut R,
    radius: f64,
) -> Field64 {
    let values = (0..kernel.states())
        .map(|_| sample_point(space, rng, radius))
        .collect();
    MapField::new(kernel.clone(), values).expect("field over its kernel")
}

/// The four standard backends used by cross-backend property suites.
pub fn standard_spaces() -> Vec<SpaceDescriptor> {
    vec![
        SpaceDescriptor::Euclidean(3),
        SpaceDescriptor::Hyperbolic(2),
        SpaceDescriptor::Spider(3),
        SpaceDescriptor::Product(vec![
            SpaceDescriptor::Euclidean(2),
            SpaceDescriptor::Spider(3),
        ]),
    ]
}

/// Sanity helper: largest singular value of a core matrix, via nalgebra.
pub fn nalgebra_operator_norm(a: &Matrix<f64>) -> f64 {
    let m = DMatrix::from_fn(a.rows(), a.cols(), |i, j| a.get(i, j));
    m.singular_values()[0]
}

/// Re-exported so suites can build ad-hoc kinds directly.
pub fn map_from_kind(space: SpaceDescriptor, kind: MapKind<f64>) -> Map64 {
    NonexpansiveMap::new(space, kind).expect("valid map kind")
}
