//! Linear bisimulations, observability/reachability and minimization.
//!
//! The largest linear bisimulation is the greatest subspace contained in
//! `ker(beta)` and invariant under every transition. It is computed as the
//! decreasing fixed point `W_0 = ker(beta)`,
//! `W_{k+1} = W_k ∩ ⋂_σ tau_σ^{-1}(W_k)`, where each step is the kernel of
//! the stacked matrix `[(I - P_W); (I - P_W) tau_σ ...]`.

use crate::error::{Error, Result};
use crate::linalg::{hstack, kernel, orthogonal_complement, range, vstack, Matrix, Vector};
use crate::wfa::Wfa;

/// A linear subspace given by an orthonormal basis (as columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Matrix,
    tol: f64,
}

impl Subspace {
    pub fn new(basis: Matrix, tol: f64) -> Self {
        Subspace { basis, tol }
    }

    pub fn zero(ambient: usize, tol: f64) -> Self {
        Subspace::new(Matrix::zeros(ambient, 0), tol)
    }

    pub fn whole(ambient: usize, tol: f64) -> Self {
        Subspace::new(Matrix::identity(ambient, ambient), tol)
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.transpose()
    }

    /// Component of `v` orthogonal to the subspace.
    pub fn residual(&self, v: &Vector) -> Vector {
        v - &self.basis * (self.basis.transpose() * v)
    }

    pub fn complement(&self) -> Subspace {
        Subspace::new(orthogonal_complement(&self.basis), self.tol)
    }

    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        self.residual(v).norm() <= tol * (1.0 + v.norm())
    }
}

/// Largest linear bisimulation `W_A` of `a`.
pub fn largest_bisimulation(a: &Wfa, tol: f64) -> Subspace {
    bisimulation_with_scale(a, tol, a.beta().norm())
}

/// `beta_scale` is the magnitude below which `beta` counts as zero after
/// scaling by `tol`. A restricted automaton inherits it from its parent, since
/// its final weights can cancel down to rounding noise.
fn bisimulation_with_scale(a: &Wfa, tol: f64, beta_scale: f64) -> Subspace {
    assert!(tol > 0.0, "tolerance must be positive");
    let n = a.dim();
    if n == 0 {
        return Subspace::zero(0, tol);
    }
    if a.beta().norm() <= tol * beta_scale.max(a.beta().norm()) {
        return Subspace::whole(n, tol);
    }
    let mut basis = kernel(&Matrix::from_row_slice(1, n, a.beta().as_slice()), tol);
    // each round either shrinks the subspace or stops
    for _ in 0..=n {
        if basis.ncols() == 0 {
            break;
        }
        let outside = Matrix::identity(n, n) - &basis * basis.transpose();
        let mut blocks = Vec::with_capacity(a.trans().len() + 1);
        blocks.push(outside.clone());
        for m in a.trans() {
            blocks.push(&outside * m);
        }
        let next = kernel(&vstack(&blocks, n), tol);
        let stable = next.ncols() == basis.ncols();
        basis = next;
        if stable {
            break;
        }
    }
    Subspace::new(basis, tol)
}

/// Smallest transition-invariant subspace containing `alpha`.
pub fn reachable_subspace(a: &Wfa, tol: f64) -> Subspace {
    assert!(tol > 0.0, "tolerance must be positive");
    let n = a.dim();
    let start = Matrix::from_column_slice(n, 1, a.alpha().as_slice());
    let mut basis = range(&start, tol);
    for _ in 0..=n {
        if basis.ncols() == 0 || basis.ncols() == n {
            break;
        }
        let mut blocks = vec![basis.clone()];
        for m in a.trans() {
            blocks.push(m * &basis);
        }
        let next = range(&hstack(&blocks, n), tol);
        let stable = next.ncols() == basis.ncols();
        basis = next;
        if stable {
            break;
        }
    }
    if basis.ncols() == n {
        basis = Matrix::identity(n, n);
    }
    Subspace::new(basis, tol)
}

pub fn is_observable(a: &Wfa, tol: f64) -> bool {
    largest_bisimulation(a, tol).dim() == 0
}

pub fn is_reachable(a: &Wfa, tol: f64) -> bool {
    is_observable(&a.reverse(), tol)
}

/// Minimal automaton computing the same function: restrict to the reachable
/// subspace, then quotient by the largest bisimulation using its orthogonal
/// complement as representatives.
pub fn minimize(a: &Wfa, tol: f64) -> Wfa {
    let reach = reachable_subspace(a, tol);
    let r = reach.basis();
    let restricted = a.compress(&r.transpose(), r);
    let bisim = bisimulation_with_scale(&restricted, tol, a.beta().norm());
    if bisim.dim() == 0 {
        return restricted;
    }
    let c = bisim.complement();
    let c = c.basis();
    restricted.compress(&c.transpose(), c)
}

/// Whether `u` and `v` differ by an element of the largest bisimulation.
pub fn states_bisimilar(a: &Wfa, u: &Vector, v: &Vector, tol: f64) -> Result<bool> {
    let n = a.dim();
    if u.len() != n {
        return Err(Error::dim("first state", n, u.len()));
    }
    if v.len() != n {
        return Err(Error::dim("second state", n, v.len()));
    }
    let w = largest_bisimulation(a, tol);
    Ok(w.contains(&(u - v), tol))
}
