#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sdr_core::{DMatrix, DVector, Dataset};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(r))
}

pub fn gaussian_vec(n: usize, r: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(r))
}

pub fn center_columns(x: &mut DMatrix<f64>) {
    for mut c in x.column_iter_mut() {
        let m = c.mean();
        c.add_scalar_mut(-m);
    }
}

pub fn centered(mut x: DMatrix<f64>, y: DVector<f64>) -> Dataset {
    center_columns(&mut x);
    let m = y.mean();
    Dataset::new(x, y.add_scalar(-m)).unwrap()
}

/// Columns with unequal scales, response linear in X plus noise.
pub fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut x = gaussian(n, p, &mut r);
    for (j, mut c) in x.column_iter_mut().enumerate() {
        c.scale_mut(1.0 + 3.0 / (j as f64 + 1.0));
    }
    let w = gaussian_vec(p, &mut r);
    let y = &x * w + gaussian_vec(n, &mut r) * 0.5;
    centered(x, y)
}

/// Centered data with `XᵀX = I`.
pub fn whitened_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut x = gaussian(n, p, &mut r);
    center_columns(&mut x);
    let q = x.qr().q();
    let w = gaussian_vec(p, &mut r);
    let y = &q * w + gaussian_vec(n, &mut r) * 0.3;
    centered(q, y)
}

pub fn projector(u: &DMatrix<f64>) -> DMatrix<f64> {
    u * u.transpose()
}

pub fn proj_dist(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (projector(a) - projector(b)).norm()
}

pub fn orthonormality_error(u: &DMatrix<f64>) -> f64 {
    (u.tr_mul(u) - DMatrix::identity(u.ncols(), u.ncols())).norm()
}

pub fn random_symmetric(p: usize, seed: u64) -> DMatrix<f64> {
    let a = gaussian(p, p, &mut rng(seed));
    (&a + a.transpose()) * 0.5
}
