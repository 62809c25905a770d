//! Seeded generators for random automata, UMDPs and perturbations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{spectral_norm, Matrix, Vector};
use crate::umdp::Umdp;
use crate::wfa::Wfa;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent per-trial seed from a root seed (splitmix64 step).
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform_vector(rng: &mut impl Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn symbols(k: usize) -> Vec<String> {
    (0..k)
        .map(|i| {
            if i < 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("s{i}")
            }
        })
        .collect()
}

/// Random automaton whose transition matrices all have spectral norm
/// `op_norm`, with alpha and beta drawn uniformly from `[-1, 1]`.
pub fn random_wfa(rng: &mut impl Rng, alphabet_size: usize, dim: usize, op_norm: f64) -> Wfa {
    let trans = (0..alphabet_size)
        .map(|_| {
            let m = uniform_matrix(rng, dim, dim);
            let s = spectral_norm(&m);
            if s > 0.0 {
                m * (op_norm / s)
            } else {
                m
            }
        })
        .collect();
    Wfa::new(
        symbols(alphabet_size),
        uniform_vector(rng, dim),
        uniform_vector(rng, dim),
        trans,
    )
    .expect("shapes are consistent")
}

/// Random sign noise `±scale/sqrt(rows*cols)` rescaled to spectral norm
/// exactly `scale`.
pub fn sign_noise(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    if rows == 0 || cols == 0 || scale == 0.0 {
        return Matrix::zeros(rows, cols);
    }
    let entry = scale / ((rows * cols) as f64).sqrt();
    let m = Matrix::from_fn(rows, cols, |_, _| {
        if rng.random_bool(0.5) {
            entry
        } else {
            -entry
        }
    });
    let s = spectral_norm(&m);
    m * (scale / s)
}

pub fn sign_noise_vector(rng: &mut impl Rng, n: usize, scale: f64) -> Vector {
    let m = sign_noise(rng, n, 1, scale);
    m.column(0).into_owned()
}

/// Perturbs every parameter of `a` by noise of norm `scale`.
pub fn perturb_wfa(rng: &mut impl Rng, a: &Wfa, scale: f64) -> Wfa {
    let n = a.dim();
    Wfa::new(
        a.alphabet().to_vec(),
        a.alpha() + sign_noise_vector(rng, n, scale),
        a.beta() + sign_noise_vector(rng, n, scale),
        a.trans()
            .iter()
            .map(|m| m + sign_noise(rng, n, n, scale))
            .collect(),
    )
    .expect("shapes are preserved")
}

fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random UMDP with dense row-stochastic transitions and rewards in `[0, 1)`.
pub fn random_umdp(rng: &mut impl Rng, actions: usize, states: usize, gamma: f64) -> Umdp {
    let trans = (0..actions)
        .map(|_| {
            let rows: Vec<Vec<f64>> = (0..states)
                .map(|_| random_distribution(rng, states))
                .collect();
            Matrix::from_fn(states, states, |i, j| rows[i][j])
        })
        .collect();
    let alpha = Vector::from_vec(random_distribution(rng, states));
    let beta = Vector::from_fn(states, |_, _| rng.random_range(0.0..1.0));
    Umdp::new(symbols(actions), alpha, beta, trans, gamma).expect("generated UMDP is valid")
}
