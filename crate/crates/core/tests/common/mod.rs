//! Synthetic data and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// A random orthogonal matrix: the Q factor of a Gaussian matrix, with column
/// signs fixed so the diagonal of R is positive.
pub fn random_orthogonal(p: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let qr = gaussian(p, p, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    q
}

/// The DCT-II coefficient by direct summation, one term at a time.
pub fn naive_dct(signal: &[f64], k: usize) -> f64 {
    let n = signal.len() as f64;
    let mut sum = 0.0;
    for (i, v) in signal.iter().enumerate() {
        sum += v * (PI / n * (i as f64 + 0.5) * k as f64).cos();
    }
    (2.0 / n).sqrt() * sum
}

/// Naive double loop over blocks and columns.
pub fn naive_encode_dct(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    let d = rows[0].len();
    let mut out = Vec::with_capacity((k + 1) * d);
    for kk in 0..=k {
        for j in 0..d {
            if kk >= rows.len() {
                out.push(0.0);
            } else {
                let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                out.push(naive_dct(&col, kk));
            }
        }
    }
    out
}

/// Corner coordinate of the XOR fixture. At +-1 the default probe config
/// stalls on the 0.75 plateau long enough for early stopping to fire.
pub const XOR_CORNER: f64 = 2.0;

/// XOR with corners at (+-XOR_CORNER, +-XOR_CORNER): `copies` noisy copies of
/// each corner.
pub fn xor_dataset(copies: usize, noise: f64, rng: &mut impl Rng) -> (DMatrix<f64>, Vec<String>) {
    let c = XOR_CORNER;
    let corners = [(-c, -c, "a"), (-c, c, "b"), (c, -c, "b"), (c, c, "a")];
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..copies {
        for &(x, y, l) in &corners {
            let nx: f64 = StandardNormal.sample(rng);
            let ny: f64 = StandardNormal.sample(rng);
            data.push(x + noise * nx);
            data.push(y + noise * ny);
            labels.push(l.to_string());
        }
    }
    (DMatrix::from_row_slice(labels.len(), 2, &data), labels)
}

/// Two Gaussian blobs with unit variance whose centers are `separation` apart.
pub fn blobs(per_class: usize, separation: f64, rng: &mut impl Rng) -> (DMatrix<f64>, Vec<String>) {
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for i in 0..2 * per_class {
        let (cx, label) = if i % 2 == 0 {
            (-separation / 2.0, "neg")
        } else {
            (separation / 2.0, "pos")
        };
        let nx: f64 = StandardNormal.sample(rng);
        let ny: f64 = StandardNormal.sample(rng);
        data.push(cx + nx);
        data.push(ny);
        labels.push(label.to_string());
    }
    (DMatrix::from_row_slice(labels.len(), 2, &data), labels)
}
