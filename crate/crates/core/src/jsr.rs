//! Joint spectral radius bounds, irreducibility and Hausdorff distance.
//!
//! For every product length `t`,
//! `max_{|p| = t} rho(p)^{1/t} <= JSR <= (max_{|p| = t} ||p||_2)^{1/t}`.
//! Products are enumerated breadth-first with a per-level beam; the lower
//! bound is the best over every product seen, the upper bound the best over
//! levels that were enumerated in full.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{range, spectral_norm, spectral_radius, Matrix};
use crate::wfa::Wfa;

/// Default number of products kept per level.
pub const DEFAULT_NODE_BUDGET: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub struct JsrBounds {
    pub lower: f64,
    pub upper: f64,
    /// Maximal product length explored.
    pub depth: usize,
    /// Indices (into the matrix list) of the product attaining `lower`,
    /// applied left to right.
    pub witness: Vec<usize>,
    /// Longest product length enumerated without pruning.
    pub full_depth: usize,
    /// Set when the beam pruned some level.
    pub partial: bool,
}

impl JsrBounds {
    pub fn contains(&self, value: f64, slack: f64) -> bool {
        self.lower - slack <= value && value <= self.upper + slack
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn check_family(mats: &[Matrix]) -> Result<usize> {
    let first = mats
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty matrix family".into()))?;
    let n = first.nrows();
    for m in mats {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::dim("matrix in family", n, m.nrows().max(m.ncols())));
        }
    }
    Ok(n)
}

pub fn jsr_bounds(mats: &[Matrix], depth: usize) -> Result<JsrBounds> {
    jsr_bounds_with_budget(mats, depth, DEFAULT_NODE_BUDGET)
}

struct Product {
    word: Vec<usize>,
    matrix: Matrix,
    norm: f64,
}

pub fn jsr_bounds_with_budget(mats: &[Matrix], depth: usize, budget: usize) -> Result<JsrBounds> {
    let n = check_family(mats)?;
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be at least 1".into()));
    }
    if budget == 0 {
        return Err(Error::InvalidArgument(
            "node budget must be positive".into(),
        ));
    }
    if n == 0 {
        return Ok(JsrBounds {
            lower: 0.0,
            upper: 0.0,
            depth,
            witness: Vec::new(),
            full_depth: depth,
            partial: false,
        });
    }

    let mut lower = 0.0f64;
    let mut witness: Vec<usize> = Vec::new();
    let mut upper = f64::INFINITY;
    let mut full_depth = 0;
    let mut partial = false;
    let mut level: Vec<Product> = Vec::new();

    for t in 1..=depth {
        let candidates: Vec<(Vec<usize>, Matrix)> = if t == 1 {
            mats.iter()
                .cloned()
                .enumerate()
                .map(|(i, m)| (vec![i], m))
                .collect()
        } else {
            level
                .par_iter()
                .flat_map_iter(|p| {
                    mats.iter().enumerate().map(move |(s, m)| {
                        let mut w = p.word.clone();
                        w.push(s);
                        (w, m * &p.matrix)
                    })
                })
                .collect()
        };
        let exponent = 1.0 / t as f64;
        let scored: Vec<(Product, f64)> = candidates
            .into_par_iter()
            .map(|(word, matrix)| {
                let norm = spectral_norm(&matrix);
                let rho = spectral_radius(&matrix).unwrap_or(0.0);
                (Product { word, matrix, norm }, rho.powf(exponent))
            })
            .collect();

        for (p, value) in &scored {
            if *value > lower || (*value == lower && !witness.is_empty() && p.word < witness) {
                lower = *value;
                witness = p.word.clone();
            }
        }
        if witness.is_empty() {
            witness = scored[0].0.word.clone();
        }
        if !partial {
            let max_norm = scored.iter().map(|(p, _)| p.norm).fold(0.0, f64::max);
            upper = upper.min(max_norm.powf(exponent));
            full_depth = t;
        }

        level = scored.into_iter().map(|(p, _)| p).collect();
        if t < depth && level.len() > budget {
            level.sort_by(|a, b| b.norm.total_cmp(&a.norm).then_with(|| a.word.cmp(&b.word)));
            level.truncate(budget);
            partial = true;
        }
    }

    Ok(JsrBounds {
        lower,
        upper,
        depth,
        witness,
        full_depth,
        partial,
    })
}

/// Bounds on the spectral radius of an automaton (the JSR of its transitions).
pub fn wfa_spectral_radius(a: &Wfa, depth: usize) -> Result<JsrBounds> {
    jsr_bounds(a.trans(), depth)
}

pub fn wfa_spectral_radius_with_budget(a: &Wfa, depth: usize, budget: usize) -> Result<JsrBounds> {
    jsr_bounds_with_budget(a.trans(), depth, budget)
}

fn vectorize(m: &Matrix) -> Matrix {
    Matrix::from_column_slice(m.len(), 1, m.as_slice())
}

/// Dimension of the unital algebra generated by `mats`.
pub fn algebra_dimension(mats: &[Matrix], tol: f64) -> Result<usize> {
    let n = check_family(mats)?;
    if n == 0 {
        return Ok(0);
    }
    let nn = n * n;
    let mut basis = range(&vectorize(&Matrix::identity(n, n)), tol);
    for _ in 0..nn {
        let k = basis.ncols();
        if k == nn {
            break;
        }
        let mut cols: Vec<Matrix> = vec![basis.clone()];
        for j in 0..k {
            let b = Matrix::from_column_slice(n, n, basis.column(j).as_slice());
            for g in mats {
                cols.push(vectorize(&(g * &b)));
            }
        }
        let stacked = crate::linalg::hstack(&cols, nn);
        let next = range(&stacked, tol);
        let stable = next.ncols() == k;
        basis = next;
        if stable {
            break;
        }
    }
    Ok(basis.ncols())
}

/// Burnside test: the family is irreducible (over the complex numbers, hence
/// over the reals) when the generated algebra is all of `n x n` matrices.
/// `true` is reliable; `false` may be returned for families that are
/// irreducible over the reals but not over the complex numbers.
pub fn is_irreducible(mats: &[Matrix], tol: f64) -> Result<bool> {
    let n = check_family(mats)?;
    Ok(algebra_dimension(mats, tol)? == n * n)
}

pub fn wfa_irreducible(a: &Wfa, tol: f64) -> Result<bool> {
    is_irreducible(a.trans(), tol)
}

/// Hausdorff distance between two finite matrix sets under the spectral norm.
pub fn hausdorff_distance(first: &[Matrix], second: &[Matrix]) -> Result<f64> {
    let n = check_family(first)?;
    let m = check_family(second)?;
    if n != m {
        return Err(Error::dim("second family", n, m));
    }
    let directed = |xs: &[Matrix], ys: &[Matrix]| {
        xs.iter()
            .map(|x| {
                ys.iter()
                    .map(|y| spectral_norm(&(x - y)))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Ok(directed(first, second).max(directed(second, first)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{direct_sum, DEFAULT_TOL};
    use crate::random::{rng, uniform_matrix};
    use approx::assert_abs_diff_eq;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> Matrix {
        Matrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    #[test]
    fn identity_brackets_one() {
        let b = jsr_bounds(&[Matrix::identity(3, 3)], 1).unwrap();
        assert_abs_diff_eq!(b.lower, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b.upper, 1.0, epsilon = 1e-9);
        assert_eq!(b.witness, vec![0]);
    }

    #[test]
    fn zero_family_brackets_zero() {
        let b = jsr_bounds(&[Matrix::zeros(2, 2), Matrix::zeros(2, 2)], 3).unwrap();
        assert_eq!(b.lower, 0.0);
        assert_eq!(b.upper, 0.0);
    }

    #[test]
    fn stochastic_matrix_contains_one() {
        let t = Matrix::from_row_slice(3, 3, &[0.2, 0.5, 0.3, 0.0, 0.1, 0.9, 0.6, 0.4, 0.0]);
        let b = jsr_bounds(&[t], 10).unwrap();
        assert!(b.contains(1.0, 1e-9), "{b:?}");
    }

    #[test]
    fn errors() {
        assert!(jsr_bounds(&[], 3).is_err());
        assert!(jsr_bounds(&[Matrix::identity(2, 2)], 0).is_err());
        assert!(jsr_bounds(&[Matrix::identity(2, 2), Matrix::identity(3, 3)], 2).is_err());
        assert!(hausdorff_distance(&[Matrix::identity(2, 2)], &[Matrix::identity(3, 3)]).is_err());
    }

    #[test]
    fn budget_pruning_keeps_bounds_valid() {
        let fam = [m2(1.0, 1.0, 0.0, 1.0), m2(1.0, 0.0, 1.0, 1.0)];
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let pruned = jsr_bounds_with_budget(&fam, 10, 8).unwrap();
        assert!(pruned.partial);
        assert_eq!(pruned.full_depth, 4);
        assert!(pruned.contains(golden, 1e-12));
        let full = jsr_bounds(&fam, 10).unwrap();
        assert!(!full.partial);
        assert!(full.lower >= pruned.lower - 1e-12);
    }

    #[test]
    fn deeper_never_loosens() {
        let mut r = rng(9);
        let fam: Vec<Matrix> = (0..2).map(|_| uniform_matrix(&mut r, 3, 3)).collect();
        let mut prev = jsr_bounds(&fam, 1).unwrap();
        for d in 2..=7 {
            let b = jsr_bounds(&fam, d).unwrap();
            assert!(b.lower >= prev.lower);
            assert!(b.upper <= prev.upper);
            assert!(b.lower <= b.upper + 1e-12);
            assert!(b.witness.len() <= d);
            prev = b;
        }
    }

    #[test]
    fn conjugation_keeps_brackets_overlapping() {
        let mut r = rng(21);
        for _ in 0..5 {
            let fam: Vec<Matrix> = (0..2).map(|_| uniform_matrix(&mut r, 3, 3)).collect();
            let s = Matrix::identity(3, 3) + uniform_matrix(&mut r, 3, 3) * 0.3;
            let inv = s.clone().try_inverse().unwrap();
            let conj: Vec<Matrix> = fam.iter().map(|m| &s * m * &inv).collect();
            let a = jsr_bounds(&fam, 6).unwrap();
            let b = jsr_bounds(&conj, 6).unwrap();
            assert!(a.lower <= b.upper + 1e-9 && b.lower <= a.upper + 1e-9);
        }
    }

    #[test]
    fn direct_sum_law() {
        let mut r = rng(4);
        let f1: Vec<Matrix> = (0..2).map(|_| uniform_matrix(&mut r, 2, 2)).collect();
        let f2: Vec<Matrix> = (0..2).map(|_| uniform_matrix(&mut r, 2, 2) * 0.5).collect();
        let sum: Vec<Matrix> = f1.iter().zip(&f2).map(|(a, b)| direct_sum(a, b)).collect();
        let (b1, b2, bs) = (
            jsr_bounds(&f1, 6).unwrap(),
            jsr_bounds(&f2, 6).unwrap(),
            jsr_bounds(&sum, 6).unwrap(),
        );
        assert!(bs.upper >= b1.lower.max(b2.lower) - 1e-12);
        assert!(bs.lower <= b1.upper.max(b2.upper) + 1e-12);
    }

    #[test]
    fn irreducibility() {
        assert!(!is_irreducible(&[Matrix::identity(2, 2)], DEFAULT_TOL).unwrap());
        // diagonal matrix: coordinate axes are invariant
        assert!(!is_irreducible(&[m2(1.0, 0.0, 0.0, 2.0)], DEFAULT_TOL).unwrap());
        assert!(is_irreducible(
            &[m2(1.0, 1.0, 0.0, 1.0), m2(1.0, 0.0, 1.0, 1.0)],
            DEFAULT_TOL
        )
        .unwrap());
        // common invariant line span(e1)
        assert!(!is_irreducible(
            &[m2(1.0, 2.0, 0.0, 3.0), m2(-1.0, 5.0, 0.0, 0.5)],
            DEFAULT_TOL
        )
        .unwrap());
        assert!(is_irreducible(&[Matrix::from_element(1, 1, 0.0)], DEFAULT_TOL).unwrap());
    }

    /// Real eigendirections of a 2x2 matrix (empty for complex spectra).
    fn eigendirections(m: &Matrix) -> Vec<(f64, f64)> {
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let tr = a + d;
        let disc = tr * tr / 4.0 - (a * d - b * c);
        if disc < 0.0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for lam in [tr / 2.0 + disc.sqrt(), tr / 2.0 - disc.sqrt()] {
            if b.abs() > 1e-12 {
                out.push((b, lam - a));
            } else if c.abs() > 1e-12 {
                out.push((lam - d, c));
            } else {
                out.push((1.0, 0.0));
                out.push((0.0, 1.0));
            }
        }
        out
    }

    fn is_invariant_line(m: &Matrix, dir: (f64, f64)) -> bool {
        let (x, y) = dir;
        let ix = m[(0, 0)] * x + m[(0, 1)] * y;
        let iy = m[(1, 0)] * x + m[(1, 1)] * y;
        (ix * y - iy * x).abs() <= 1e-9 * (1.0 + ix.hypot(iy) * x.hypot(y))
    }

    #[test]
    fn random_pairs_agree_with_eigendirection_oracle() {
        let mut r = rng(17);
        for _ in 0..20 {
            let fam: Vec<Matrix> = (0..2).map(|_| uniform_matrix(&mut r, 2, 2)).collect();
            // over C a 2x2 pair is reducible iff it shares an eigenvector;
            // for real matrices with a shared real line the oracle finds it
            let shared_real = fam
                .iter()
                .flat_map(eigendirections)
                .any(|d| fam.iter().all(|m| is_invariant_line(m, d)));
            let irr = is_irreducible(&fam, DEFAULT_TOL).unwrap();
            assert_eq!(irr, !shared_real);
            assert!(irr);
        }
    }

    #[test]
    fn hausdorff() {
        let a = m2(1.0, 0.0, 0.0, 1.0);
        let b = m2(0.0, 1.0, 1.0, 3.0);
        assert_eq!(
            hausdorff_distance(&[a.clone(), b.clone()], &[a.clone(), b.clone()]).unwrap(),
            0.0
        );
        let d = spectral_norm(&(&a - &b));
        assert_abs_diff_eq!(
            hausdorff_distance(std::slice::from_ref(&a), std::slice::from_ref(&b)).unwrap(),
            d,
            epsilon = 1e-12
        );
        // {A,B} vs {A}: the only nonzero directed term is B -> A
        assert_abs_diff_eq!(
            hausdorff_distance(&[a.clone(), b], &[a]).unwrap(),
            d,
            epsilon = 1e-12
        );
    }
}
