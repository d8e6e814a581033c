#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random sparse non-negative digraph without self-loops and with at least
/// one edge.
pub fn random_digraph(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_density: f64,
) -> (usize, Vec<(usize, usize, f64)>) {
    loop {
        let n = rng.random_range(2..=max_n);
        let density = rng.random_range(0.02..=max_density);
        let mut edges = Vec::new();
        for r in 0..n {
            for c in 0..n {
                if r != c && rng.random_bool(density) {
                    edges.push((r, c, rng.random_range(0.1..10.0)));
                }
            }
        }
        if !edges.is_empty() {
            return (n, edges);
        }
    }
}

pub fn dense(n: usize, edges: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for &(r, c, w) in edges {
        a[(r, c)] += w;
    }
    a
}

/// Projection of `start` onto the dominant eigenspace of the symmetric
/// matrix `m`, unit length.
pub fn dominant_direction(m: DMatrix<f64>, start: &DVector<f64>) -> DVector<f64> {
    let eig = SymmetricEigen::new(m);
    let top = eig.eigenvalues.iter().copied().fold(f64::MIN, f64::max);
    let mut v = DVector::zeros(start.len());
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda >= top * (1.0 - 1e-9) {
            let u = eig.eigenvectors.column(i);
            v += u * u.dot(start);
        }
    }
    v.normalize()
}

/// Dense eigensolver answer for HITS started from the uniform vector:
/// `(authority, hub)`.
pub fn hits_oracle(a: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = a.nrows();
    let ones = DVector::from_element(n, 1.0);
    let at = a.transpose();
    let authority = dominant_direction(&at * a, &(&at * &ones));
    let hub = dominant_direction(a * &at, &ones);
    (
        authority.iter().copied().collect(),
        hub.iter().copied().collect(),
    )
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 && nb == 0.0 {
        return 1.0;
    }
    dot / (na * nb)
}

/// `Σᵢ Σⱼ |xᵢ − xⱼ| / (2 n² μ)`
pub fn gini_pairwise(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let mut total = 0.0;
    for x in xs {
        for y in xs {
            total += (x - y).abs();
        }
    }
    total / (2.0 * n * n * mean)
}

/// Tau-b by counting every pair.
pub fn tau_b_pairs(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    let (mut conc, mut disc, mut tie_x, mut tie_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = xs[i].partial_cmp(&xs[j]).unwrap();
            let dy = ys[i].partial_cmp(&ys[j]).unwrap();
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {
                    tie_x += 1;
                    tie_y += 1;
                }
                (Equal, _) => tie_x += 1,
                (_, Equal) => tie_y += 1,
                (a, b) if a == b => conc += 1,
                _ => disc += 1,
            }
        }
    }
    let pairs = (n * (n.saturating_sub(1)) / 2) as i64;
    let denom = (((pairs - tie_x) as f64) * ((pairs - tie_y) as f64)).sqrt();
    (denom > 0.0).then(|| (conc - disc) as f64 / denom)
}

/// Values with many ties: integers from a small range.
pub fn tied_vector(rng: &mut ChaCha8Rng, n: usize, levels: u32) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0..levels) as f64).collect()
}

pub fn permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
