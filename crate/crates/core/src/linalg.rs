//! Dense linear algebra helpers shared by every module.
//!
//! Rank and kernel decisions go through a single SVD convention: singular
//! values sorted in descending order, values `<= tol * sigma_max` treated as
//! zero, and each singular vector normalized so that its largest-magnitude
//! entry is positive.

use nalgebra::{DMatrix, DVector, Schur, SVD};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Thin SVD `m = u * diag(s) * v^T` with deterministic signs.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular: Vector,
    pub v: Matrix,
}

impl Svd {
    pub fn new(m: &Matrix) -> Self {
        let (rows, cols) = m.shape();
        let k = rows.min(cols);
        if k == 0 {
            return Svd {
                u: Matrix::zeros(rows, 0),
                singular: Vector::zeros(0),
                v: Matrix::zeros(cols, 0),
            };
        }
        let svd = SVD::new(m.clone(), true, true);
        let mut u = svd.u.expect("u requested");
        let mut v = svd.v_t.expect("v requested").transpose();
        let singular = svd.singular_values;
        for j in 0..k {
            if pivot_sign(u.column(j).iter().copied()) < 0.0 {
                u.column_mut(j).neg_mut();
                v.column_mut(j).neg_mut();
            }
        }
        Svd { u, singular, v }
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular.iter().copied().fold(0.0, f64::max)
    }

    /// Number of singular values strictly above `tol * sigma_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let smax = self.sigma_max();
        if smax == 0.0 {
            return 0;
        }
        self.singular.iter().filter(|&&s| s > tol * smax).count()
    }
}

/// Sign of the largest-magnitude entry (first one on ties); `1.0` for zero vectors.
fn pivot_sign(it: impl Iterator<Item = f64>) -> f64 {
    let mut best = 0.0f64;
    for x in it {
        if x.abs() > best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn normalize_signs(mut basis: Matrix) -> Matrix {
    for j in 0..basis.ncols() {
        if pivot_sign(basis.column(j).iter().copied()) < 0.0 {
            basis.column_mut(j).neg_mut();
        }
    }
    basis
}

/// Orthonormal basis (as columns) of the numerical kernel of `m`.
pub fn kernel(m: &Matrix, tol: f64) -> Matrix {
    let (rows, n) = m.shape();
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    // pad to at least n rows so that the SVD yields a full set of right vectors
    let padded = if rows < n {
        let mut p = Matrix::zeros(n, n);
        p.view_mut((0, 0), (rows, n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = Svd::new(&padded);
    let r = svd.rank(tol);
    let k = n - r;
    normalize_signs(svd.v.columns(r, k).into_owned())
}

/// Orthonormal basis (as columns) of the numerical column space of `m`.
pub fn range(m: &Matrix, tol: f64) -> Matrix {
    let svd = Svd::new(m);
    let r = svd.rank(tol);
    svd.u.columns(0, r).into_owned()
}

pub fn numerical_rank(m: &Matrix, tol: f64) -> usize {
    Svd::new(m).rank(tol)
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns of `basis` (an `n x k` matrix).
pub fn orthogonal_complement(basis: &Matrix) -> Matrix {
    let n = basis.nrows();
    if basis.ncols() == 0 {
        return Matrix::identity(n, n);
    }
    kernel(&basis.transpose(), DEFAULT_TOL)
}

/// Largest singular value; zero for empty matrices.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let (rows, cols) = m.shape();
    if rows == 1 || cols == 1 {
        return m.norm();
    }
    m.clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .map(|s| s.singular_values.max())
        .unwrap_or_else(|| m.norm())
}

/// Largest eigenvalue modulus. Returns `None` if the eigensolver does not
/// converge, in which case callers must fall back to a conservative value.
pub fn spectral_radius(m: &Matrix) -> Option<f64> {
    let n = m.nrows();
    match n {
        0 => Some(0.0),
        1 => Some(m[(0, 0)].abs()),
        2 => {
            let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let tr = a + d;
            let det = a * d - b * c;
            let disc = tr * tr / 4.0 - det;
            if disc >= 0.0 {
                let s = disc.sqrt();
                Some((tr / 2.0 + s).abs().max((tr / 2.0 - s).abs()))
            } else {
                // complex pair: |lambda|^2 = det
                Some(det.abs().sqrt())
            }
        }
        _ => {
            let schur = Schur::try_new(m.clone(), f64::EPSILON, 100_000)?;
            Some(
                schur
                    .complex_eigenvalues()
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max),
            )
        }
    }
}

/// Block-diagonal sum `a ⊕ b`.
pub fn direct_sum(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = Matrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

pub fn concat(a: &Vector, b: &Vector) -> Vector {
    Vector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

/// Stack matrices with equal column counts vertically.
pub fn vstack(blocks: &[Matrix], ncols: usize) -> Matrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(rows, ncols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, 0), (b.nrows(), ncols)).copy_from(b);
        at += b.nrows();
    }
    out
}

/// Stack matrices with equal row counts horizontally.
pub fn hstack(blocks: &[Matrix], nrows: usize) -> Matrix {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(nrows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (nrows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    out
}
