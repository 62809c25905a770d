//! Certified intervals for the discounted bisimulation seminorm and the
//! bisimulation distance between automata.
//!
//! The seminorm of a state `v` is the fixed point of
//! `F(s)(v) = |beta(v)| + gamma * max_σ s(tau_σ v)`, whose closed form is
//! `sup_x sum_t gamma^t |beta(tau_{x<=t} v)|` over infinite words. Truncating
//! that supremum at depth `T` gives exactly `F^{T+1}(0)`. The search below
//! explores the prefix tree best-first and closes the gap with a geometric
//! tail bound valid in a working norm `||v||_S = ||S v||_p`, `p` one of
//! 1, 2 or infinity:
//!
//! * per symbol, `||tau_σ||_S <= K`;
//! * per block of `m` symbols, `||tau_x||_S <= theta^m`;
//! * so a continuation of length `j = q m + r` satisfies
//!   `||tau_z u||_S <= theta^{q m} K^r ||u||_S`, and
//!   `|beta(tau_z u)| <= ||beta||_{S,*} theta^{q m} K^r ||u||_S`.
//!
//! Summing `gamma^j` times that bound over `j >= 1` gives the tail factor
//! `(sum_{r<m} (gamma K)^r) / (1 - (gamma theta)^m) - 1`. A node's upper bound
//! is its accumulated sum plus `gamma^|y| ||beta||_* ||u||_S` times that factor.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::bisim::minimize;
use crate::error::{Error, Result};
use crate::jsr::wfa_spectral_radius;
use crate::linalg::{spectral_norm, Matrix, Vector, DEFAULT_TOL};
use crate::random::{perturb_wfa, rng};
use crate::report::CsvTable;
use crate::wfa::Wfa;

/// Largest number of products enumerated to certify one block length.
const BLOCK_PRODUCT_LIMIT: usize = 1 << 12;

/// Range allowed for diagonal balancing factors.
const MIN_BALANCE: f64 = 1.0 / (1u64 << 40) as f64;
const MAX_BALANCE: f64 = (1u64 << 40) as f64;

/// Search settings for the branch-and-bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Target absolute gap `upper - lower`.
    pub eps: f64,
    /// Maximal number of node expansions.
    pub budget: usize,
    /// Product depth used to certify the admissibility of gamma.
    pub jsr_depth: usize,
    /// Longest block used when searching for tail parameters.
    pub max_block: usize,
    /// Rank tolerance for the minimization performed before the search.
    pub tol: f64,
    /// Replace the automaton by a minimal one realizing the same function
    /// before searching. The seminorm of a state depends only on the
    /// function it realizes, and quotienting removes state components the
    /// tail bound could never see shrink.
    pub reduce: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            eps: 1e-6,
            budget: 1_000_000,
            jsr_depth: 8,
            max_block: 8,
            tol: DEFAULT_TOL,
            reduce: true,
        }
    }
}

/// `[lower, upper]` bracket for a seminorm or distance value.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedInterval {
    pub lower: f64,
    pub upper: f64,
    pub gamma: f64,
    pub depth_explored: usize,
    pub nodes_expanded: usize,
    /// Best prefix found; not claimed optimal.
    pub witness_prefix: Vec<String>,
    /// The budget ran out before the gap closed to `eps`.
    pub exhausted: bool,
}

impl CertifiedInterval {
    fn zero(gamma: f64) -> Self {
        CertifiedInterval {
            lower: 0.0,
            upper: 0.0,
            gamma,
            depth_explored: 0,
            nodes_expanded: 0,
            witness_prefix: Vec::new(),
            exhausted: false,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64, slack: f64) -> bool {
        self.lower - slack <= value && value <= self.upper + slack
    }
}

/// Vector norm underlying a working norm `||v||_S = ||S v||_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    LInf,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::L2, NormKind::L1, NormKind::LInf];

    pub fn vector(self, v: &Vector) -> f64 {
        match self {
            NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
            NormKind::L2 => v.norm(),
            NormKind::LInf => v.amax(),
        }
    }

    pub fn dual(self) -> NormKind {
        match self {
            NormKind::L1 => NormKind::LInf,
            NormKind::L2 => NormKind::L2,
            NormKind::LInf => NormKind::L1,
        }
    }

    /// Induced operator norm.
    pub fn operator(self, m: &Matrix) -> f64 {
        match self {
            NormKind::L1 => m
                .column_iter()
                .map(|c| c.iter().map(|x| x.abs()).sum())
                .fold(0.0, f64::max),
            NormKind::L2 => spectral_norm(m),
            NormKind::LInf => m
                .row_iter()
                .map(|r| r.iter().map(|x| x.abs()).sum())
                .fold(0.0, f64::max),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NormKind::L1 => "l1",
            NormKind::L2 => "l2",
            NormKind::LInf => "linf",
        }
    }
}

/// Working norm and growth bounds used for tail estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct TailBoundParams {
    pub kind: NormKind,
    /// Block growth rate: `(max_{|x| = m} ||tau_x||_S)^{1/m}`.
    pub theta: f64,
    /// Matrix `S` defining `||v||_S = ||S v||_p`.
    pub scaling: Matrix,
    scaling_inv: Matrix,
    /// Block length `m`.
    pub block_len: usize,
    /// Per-symbol bound `K = max_σ ||tau_σ||_S`.
    pub step_bound: f64,
}

impl TailBoundParams {
    pub fn new(
        kind: NormKind,
        scaling: Matrix,
        theta: f64,
        block_len: usize,
        step_bound: f64,
    ) -> Result<Self> {
        let scaling_inv = scaling
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("scaling is singular".into()))?;
        if block_len == 0 {
            return Err(Error::InvalidArgument(
                "block length must be positive".into(),
            ));
        }
        Ok(TailBoundParams {
            kind,
            theta,
            scaling,
            scaling_inv,
            block_len,
            step_bound,
        })
    }

    pub fn norm(&self, v: &Vector) -> f64 {
        self.kind.vector(&(&self.scaling * v))
    }

    /// Dual norm of the covector `w` (acting by dot product).
    pub fn dual_norm(&self, w: &Vector) -> f64 {
        self.kind.dual().vector(&(self.scaling_inv.transpose() * w))
    }

    pub fn op_norm(&self, m: &Matrix) -> f64 {
        self.kind.operator(&(&self.scaling * m * &self.scaling_inv))
    }

    /// `sum_{j >= 1} gamma^j K^{j mod m} theta^{m floor(j/m)}`.
    pub fn tail_factor(&self, gamma: f64) -> f64 {
        let m = self.block_len as i32;
        let rate = (gamma * self.theta).powi(m);
        debug_assert!(rate < 1.0);
        // written without `head / (1 - rate) - 1` to avoid cancellation
        let head: f64 = (1..m).map(|r| (gamma * self.step_bound).powi(r)).sum();
        (head + rate) / (1.0 - rate)
    }
}

/// Any gamma strictly below the returned value is certified admissible.
pub fn admissible_gamma_bound(a: &Wfa, depth: usize) -> Result<f64> {
    if a.dim() == 0 {
        return Ok(f64::INFINITY);
    }
    let bounds = wfa_spectral_radius(a, depth)?;
    Ok(if bounds.upper > 0.0 {
        1.0 / bounds.upper
    } else {
        f64::INFINITY
    })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(())
}

fn diag_conj(m: &Matrix, d: &[f64]) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)] / d[j])
}

fn max_op_norm(mats: &[Matrix], d: &[f64], kind: NormKind) -> f64 {
    mats.iter()
        .map(|m| kind.operator(&diag_conj(m, d)))
        .fold(0.0, f64::max)
}

/// Diagonal scaling `D` approximately minimizing `max_σ ||D tau_σ D^{-1}||`
/// in the given operator norm, found by coordinate descent on `log2 d_i`
/// with a shrinking step.
pub fn balance_scaling(mats: &[Matrix], kind: NormKind) -> Vector {
    let n = mats.first().map_or(0, |m| m.nrows());
    let mut d = vec![1.0; n];
    if n < 2 {
        return Vector::from_vec(d);
    }
    let mut best = max_op_norm(mats, &d, kind);
    for step in [1.0f64, 0.5, 0.25, 0.125, 0.0625] {
        let factor = step.exp2();
        for _sweep in 0..50 {
            let mut improved = false;
            for i in 1..n {
                for f in [factor, 1.0 / factor] {
                    let old = d[i];
                    if !(MIN_BALANCE..=MAX_BALANCE).contains(&(old * f)) {
                        continue;
                    }
                    d[i] = old * f;
                    let val = max_op_norm(mats, &d, kind);
                    if val < best * (1.0 - 1e-12) {
                        best = val;
                        improved = true;
                    } else {
                        d[i] = old;
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
    Vector::from_vec(d)
}

/// Identity scaling plus, in dimension two or more, a balanced diagonal one.
fn scalings(mats: &[Matrix], kind: NormKind) -> Vec<Vec<f64>> {
    let n = mats.first().map_or(0, |m| m.nrows());
    let mut out = vec![vec![1.0; n]];
    if n >= 2 {
        let d: Vec<f64> = balance_scaling(mats, kind).iter().copied().collect();
        if d.iter().any(|&x| x != 1.0) {
            out.push(d);
        }
    }
    out
}

/// Finds a working norm and block length with `gamma * theta < 1`.
///
/// Every combination of norm kind (l2, l1, linf), scaling (identity,
/// balanced diagonal) and block length `1..=max_block` is considered, as
/// long as a level has at most a few thousand products. Among the certified
/// candidates the one minimizing the initial gap
/// `||beta||_* ||alpha|| T(gamma)` wins; earlier candidates win ties.
pub fn compute_tail_params(a: &Wfa, gamma: f64, max_block: usize) -> Result<TailBoundParams> {
    check_gamma(gamma)?;
    let n = a.dim();
    let k = a.trans().len();
    // raw products by length, shared by all candidates
    let mut levels: Vec<Vec<Matrix>> = Vec::new();
    let mut level = vec![Matrix::identity(n, n)];
    for m in 1..=max_block.max(1) {
        if m > 1
            && k.checked_pow(m as u32)
                .is_none_or(|c| c > BLOCK_PRODUCT_LIMIT)
        {
            break;
        }
        level = level
            .iter()
            .flat_map(|p| a.trans().iter().map(move |t| t * p))
            .collect();
        levels.push(level.clone());
    }
    let mut best: Option<(f64, TailBoundParams)> = None;
    let mut best_rate = f64::INFINITY;
    for kind in NormKind::ALL {
        for d in scalings(a.trans(), kind) {
            let step = max_op_norm(a.trans(), &d, kind);
            let scaling = Matrix::from_diagonal(&Vector::from_vec(d.clone()));
            for (i, products) in levels.iter().enumerate() {
                let m = i + 1;
                let max_norm = products
                    .iter()
                    .map(|p| kind.operator(&diag_conj(p, &d)))
                    .fold(0.0, f64::max);
                let theta = max_norm.powf(1.0 / m as f64);
                best_rate = best_rate.min(gamma * theta);
                if gamma * theta >= 1.0 {
                    continue;
                }
                let params = TailBoundParams::new(kind, scaling.clone(), theta, m, step)?;
                let score =
                    params.dual_norm(a.beta()) * params.norm(a.alpha()) * params.tail_factor(gamma);
                if best.as_ref().is_none_or(|(s, _)| score < *s) {
                    best = Some((score, params));
                }
            }
        }
    }
    best.map(|(_, p)| p)
        .ok_or(Error::CannotCertify { gamma, best_rate })
}

/// Common per-symbol working norm for two automata of equal dimension, as
/// required by [`distance_upper_bound`]: the candidate with smallest theta.
pub fn joint_tail_params(a1: &Wfa, a2: &Wfa, gamma: f64) -> Result<TailBoundParams> {
    check_gamma(gamma)?;
    a1.check_same_alphabet(a2)?;
    if a1.dim() != a2.dim() {
        return Err(Error::dim("second automaton", a1.dim(), a2.dim()));
    }
    let family: Vec<Matrix> = a1.trans().iter().chain(a2.trans()).cloned().collect();
    let mut best: Option<TailBoundParams> = None;
    for kind in NormKind::ALL {
        for d in scalings(&family, kind) {
            let theta = max_op_norm(&family, &d, kind);
            if best.as_ref().is_none_or(|b| theta < b.theta) {
                let scaling = Matrix::from_diagonal(&Vector::from_vec(d));
                best = Some(TailBoundParams::new(kind, scaling, theta, 1, theta)?);
            }
        }
    }
    match best {
        Some(p) if gamma * p.theta < 1.0 => Ok(p),
        Some(p) => Err(Error::CannotCertify {
            gamma,
            best_rate: gamma * p.theta,
        }),
        None => Err(Error::CannotCertify {
            gamma,
            best_rate: f64::INFINITY,
        }),
    }
}

/// Exhaustive depth-`T` value `max_{|x| = T} sum_{t <= T} gamma^t |beta(tau_{x<=t} v)|`.
/// This is the lower-bound function of the search at full depth `T`.
pub fn truncated_seminorm(a: &Wfa, v: &Vector, gamma: f64, depth: usize) -> Result<f64> {
    if v.len() != a.dim() {
        return Err(Error::dim("state", a.dim(), v.len()));
    }
    fn walk(a: &Wfa, u: &Vector, discount: f64, gamma: f64, remaining: usize) -> f64 {
        if remaining == 0 {
            return 0.0;
        }
        a.trans()
            .iter()
            .map(|m| {
                let next = m * u;
                let d = discount * gamma;
                d * a.beta().dot(&next).abs() + walk(a, &next, d, gamma, remaining - 1)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
    if a.dim() == 0 {
        return Ok(0.0);
    }
    Ok(a.beta().dot(v).abs() + walk(a, v, 1.0, gamma, depth))
}

struct Node {
    upper: f64,
    acc: f64,
    discount: f64,
    state: Vector,
    word: Vec<u16>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: larger upper first, then shorter, then lexicographically smaller
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper
            .total_cmp(&other.upper)
            .then_with(|| other.word.len().cmp(&self.word.len()))
            .then_with(|| other.word.cmp(&self.word))
    }
}

fn branch_and_bound(
    a: &Wfa,
    v: &Vector,
    gamma: f64,
    params: &TailBoundParams,
    opts: &SearchOptions,
) -> CertifiedInterval {
    let tail = params.tail_factor(gamma);
    let beta_norm = params.dual_norm(a.beta());
    let bound = |acc: f64, discount: f64, state: &Vector| {
        acc + discount * beta_norm * params.norm(state) * tail
    };

    let root_acc = a.beta().dot(v).abs();
    let mut lower = root_acc;
    let mut witness: Vec<u16> = Vec::new();
    let mut depth_explored = 0;
    let mut expanded = 0;
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        upper: bound(root_acc, 1.0, v),
        acc: root_acc,
        discount: 1.0,
        state: v.clone(),
        word: Vec::new(),
    });

    let mut exhausted = false;
    while let Some(top) = heap.peek() {
        if top.upper.max(lower) - lower <= opts.eps {
            break;
        }
        if expanded >= opts.budget {
            exhausted = true;
            break;
        }
        let node = heap.pop().expect("peeked");
        expanded += 1;
        for (s, m) in a.trans().iter().enumerate() {
            let state = m * &node.state;
            let discount = node.discount * gamma;
            let acc = node.acc + discount * a.beta().dot(&state).abs();
            let upper = bound(acc, discount, &state).min(node.upper);
            let mut word = node.word.clone();
            word.push(s as u16);
            depth_explored = depth_explored.max(word.len());
            if acc > lower {
                lower = acc;
                witness = word.clone();
            }
            if upper > lower {
                heap.push(Node {
                    upper,
                    acc,
                    discount,
                    state,
                    word,
                });
            }
        }
    }
    let upper = heap.peek().map_or(lower, |n| n.upper.max(lower));
    CertifiedInterval {
        lower,
        upper,
        gamma,
        depth_explored,
        nodes_expanded: expanded,
        witness_prefix: witness
            .iter()
            .map(|&s| a.alphabet()[s as usize].clone())
            .collect(),
        exhausted: exhausted && upper - lower > opts.eps,
    }
}

/// Certified interval containing the discounted bisimulation seminorm of `v`.
pub fn seminorm_interval(
    a: &Wfa,
    v: &Vector,
    gamma: f64,
    opts: &SearchOptions,
) -> Result<CertifiedInterval> {
    check_gamma(gamma)?;
    if v.len() != a.dim() {
        return Err(Error::dim("state", a.dim(), v.len()));
    }
    if !(opts.eps > 0.0) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let admissible = admissible_gamma_bound(a, opts.jsr_depth)?;
    if !(gamma < admissible) {
        return Err(Error::InadmissibleGamma {
            gamma,
            bound: admissible,
        });
    }
    let work = a.with_initial(v)?;
    // keep the given coordinates when quotienting removes nothing, since
    // norms like l1 are often tight there (stochastic matrices)
    let work = if opts.reduce {
        let reduced = minimize(&work, opts.tol);
        if reduced.dim() < work.dim() {
            reduced
        } else {
            work
        }
    } else {
        work
    };
    if work.dim() == 0 {
        return Ok(CertifiedInterval::zero(gamma));
    }
    let params = compute_tail_params(&work, gamma, opts.max_block)?;
    Ok(branch_and_bound(&work, work.alpha(), gamma, &params, opts))
}

/// Total order on automata used to make the distance exactly symmetric.
fn canonical_cmp(a: &Wfa, b: &Wfa) -> Ordering {
    let key = |w: &Wfa| -> Vec<f64> {
        let mut k = vec![w.dim() as f64];
        k.extend(w.alpha().iter());
        k.extend(w.beta().iter());
        for m in w.trans() {
            k.extend(m.iter());
        }
        k
    };
    let (ka, kb) = (key(a), key(b));
    for (x, y) in ka.iter().zip(&kb) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    ka.len().cmp(&kb.len())
}

/// Certified interval for the discounted bisimulation distance: the
/// seminorm of the initial state of the difference automaton.
pub fn distance(a1: &Wfa, a2: &Wfa, gamma: f64, opts: &SearchOptions) -> Result<CertifiedInterval> {
    a1.check_same_alphabet(a2)?;
    // d(a1, a2) and d(a2, a1) run the very same computation
    let (first, second) = if canonical_cmp(a1, a2) == Ordering::Greater {
        (a2, a1)
    } else {
        (a1, a2)
    };
    let diff = first.difference(second)?;
    seminorm_interval(&diff, diff.alpha(), gamma, opts)
}

/// Closed-form parameter-continuity bound
/// `(|alpha| |beta - beta'|_* + |beta'|_* |alpha - alpha'|) / (1 - nu)
///  + gamma |alpha| |beta'|_* max_σ |tau_σ - tau'_σ| / (1 - nu)^2`
/// with `nu = gamma * theta`, evaluated in the working norm of `params`.
/// `params.theta` must bound every transition of both automata.
pub fn distance_upper_bound(
    a1: &Wfa,
    a2: &Wfa,
    gamma: f64,
    params: &TailBoundParams,
) -> Result<f64> {
    check_gamma(gamma)?;
    a1.check_same_alphabet(a2)?;
    if a1.dim() != a2.dim() {
        return Err(Error::dim("second automaton", a1.dim(), a2.dim()));
    }
    if params.scaling.nrows() != a1.dim() {
        return Err(Error::dim("scaling", a1.dim(), params.scaling.nrows()));
    }
    let nu = gamma * params.theta;
    if nu >= 1.0 {
        return Err(Error::CannotCertify {
            gamma,
            best_rate: nu,
        });
    }
    let slack = 1e-12 * (1.0 + params.theta);
    for t in a1.trans().iter().chain(a2.trans()) {
        let norm = params.op_norm(t);
        if norm > params.theta + slack {
            return Err(Error::InvalidArgument(format!(
                "theta {} does not bound a transition of norm {norm}",
                params.theta
            )));
        }
    }
    let alpha_norm = params.norm(a1.alpha());
    let beta2_dual = params.dual_norm(a2.beta());
    let eps_beta = params.dual_norm(&(a1.beta() - a2.beta()));
    let eps_alpha = params.norm(&(a1.alpha() - a2.alpha()));
    let eps_tau = a1
        .trans()
        .iter()
        .zip(a2.trans())
        .map(|(t1, t2)| params.op_norm(&(t1 - t2)))
        .fold(0.0, f64::max);
    Ok(
        (alpha_norm * eps_beta + beta2_dual * eps_alpha) / (1.0 - nu)
            + gamma * alpha_norm * beta2_dual * eps_tau / ((1.0 - nu) * (1.0 - nu)),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityRow {
    pub scale: f64,
    pub lower: f64,
    pub upper: f64,
    /// NaN when no common working norm certifies `gamma`.
    pub lemma_bound: f64,
}

/// Perturbs `a` along one random direction (drawn from `seed`) scaled to
/// each requested norm, and reports the distance interval together with the
/// closed-form bound.
pub fn parameter_continuity_experiment(
    a: &Wfa,
    scales: &[f64],
    gamma: f64,
    opts: &SearchOptions,
    seed: u64,
) -> Result<Vec<ContinuityRow>> {
    let mut rows = Vec::with_capacity(scales.len());
    for &scale in scales {
        if !(scale >= 0.0) {
            return Err(Error::InvalidArgument(format!("negative scale {scale}")));
        }
        let perturbed = perturb_wfa(&mut rng(seed), a, scale);
        let interval = distance(a, &perturbed, gamma, opts)?;
        let lemma_bound = joint_tail_params(a, &perturbed, gamma)
            .and_then(|p| distance_upper_bound(a, &perturbed, gamma, &p))
            .unwrap_or(f64::NAN);
        rows.push(ContinuityRow {
            scale,
            lower: interval.lower,
            upper: interval.upper,
            lemma_bound,
        });
    }
    Ok(rows)
}

pub fn continuity_table(rows: &[ContinuityRow], seed: u64) -> CsvTable {
    CsvTable {
        seed,
        header: vec!["scale", "lower", "upper", "lemma_bound"],
        rows: rows
            .iter()
            .map(|r| vec![r.scale, r.lower, r.upper, r.lemma_bound])
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_wfa, uniform_matrix, uniform_vector};
    use approx::assert_abs_diff_eq;

    fn fig1(tau: f64) -> Wfa {
        Wfa::from_rows(&["a"], &[1.0], &[1.0], &[&[&[tau]]]).unwrap()
    }

    fn closed_form(gamma: f64, i: i32) -> f64 {
        1.0 / (1.0 - gamma * (1.0 + 2f64.powi(-i))) - 1.0 / (1.0 - gamma)
    }

    /// `F^{k}(0)(v)` by direct recursion on the operator.
    fn value_iteration(a: &Wfa, v: &Vector, gamma: f64, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let best = a
            .trans()
            .iter()
            .map(|m| value_iteration(a, &(m * v), gamma, k - 1))
            .fold(f64::NEG_INFINITY, f64::max);
        a.beta().dot(v).abs() + gamma * best
    }

    #[test]
    fn admissible_bounds() {
        assert_abs_diff_eq!(
            admissible_gamma_bound(&fig1(1.5), 8).unwrap(),
            1.0 / 1.5,
            epsilon = 1e-6
        );
        let zero = Wfa::from_rows(
            &["a"],
            &[1.0, 0.0],
            &[1.0, 1.0],
            &[&[&[0.0, 0.0], &[0.0, 0.0]]],
        )
        .unwrap();
        assert_eq!(admissible_gamma_bound(&zero, 3).unwrap(), f64::INFINITY);
    }

    #[test]
    fn tail_params_examples() {
        let p = compute_tail_params(&fig1(1.25), 0.5, 8).unwrap();
        assert_eq!(p.block_len, 1);
        assert_abs_diff_eq!(p.theta, 1.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.scaling, Matrix::identity(1, 1));

        let rot = Wfa::from_rows(
            &["a"],
            &[1.0, 0.0],
            &[1.0, 0.0],
            &[&[&[0.0, -0.9], &[0.9, 0.0]]],
        )
        .unwrap();
        let p = compute_tail_params(&rot, 1.0, 8).unwrap();
        assert_abs_diff_eq!(p.theta, 0.9, epsilon = 1e-12);
        assert_eq!(p.block_len, 1);

        assert!(matches!(
            compute_tail_params(&fig1(1.5), 0.7, 4),
            Err(Error::CannotCertify { .. })
        ));
    }

    #[test]
    fn selection_minimizes_the_initial_gap() {
        // column-stochastic: l1 operator norm 1, spectral norm above 1
        let a = Wfa::from_rows(
            &["a", "b"],
            &[0.5, 0.5],
            &[0.0, 1.0],
            &[&[&[0.9, 0.0], &[0.1, 1.0]], &[&[1.0, 0.6], &[0.0, 0.4]]],
        )
        .unwrap();
        assert!(spectral_norm(&a.trans()[0]) > 1.0);
        let gamma = 0.95;
        let chosen = compute_tail_params(&a, gamma, 8).unwrap();
        let gap =
            |p: &TailBoundParams| p.dual_norm(a.beta()) * p.norm(a.alpha()) * p.tail_factor(gamma);
        let l1 = TailBoundParams::new(NormKind::L1, Matrix::identity(2, 2), 1.0, 1, 1.0).unwrap();
        assert!(gap(&chosen) <= gap(&l1) + 1e-12);
        assert!(gamma * chosen.theta < 1.0);
        for t in a.trans() {
            assert!(chosen.op_norm(t) <= chosen.step_bound + 1e-12);
        }
    }

    #[test]
    fn norm_kinds_are_dual() {
        let v = Vector::from_vec(vec![3.0, -4.0]);
        assert_eq!(NormKind::L1.vector(&v), 7.0);
        assert_eq!(NormKind::L2.vector(&v), 5.0);
        assert_eq!(NormKind::LInf.vector(&v), 4.0);
        let m = Matrix::from_row_slice(2, 2, &[1.0, -2.0, 3.0, 0.5]);
        assert_eq!(NormKind::L1.operator(&m), 4.0);
        assert_eq!(NormKind::LInf.operator(&m), 3.5);
        // |w . v| <= ||w||_* ||v|| in every scaled norm
        let s = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 3.0]));
        let w = Vector::from_vec(vec![0.7, 0.2]);
        for kind in NormKind::ALL {
            let p = TailBoundParams::new(kind, s.clone(), 1.0, 1, 1.0).unwrap();
            assert!(w.dot(&v).abs() <= p.dual_norm(&w) * p.norm(&v) + 1e-12);
        }
    }

    #[test]
    fn block_norms_certify_nonnormal_growth() {
        // ||tau||_2 is large, but tau^2 = 0
        let nil = Wfa::from_rows(
            &["a"],
            &[0.0, 1.0],
            &[1.0, 0.0],
            &[&[&[0.0, 10.0], &[0.0, 0.0]]],
        )
        .unwrap();
        let p = compute_tail_params(&nil, 0.5, 4).unwrap();
        assert!(0.5 * p.theta < 1.0);
        let iv = seminorm_interval(
            &nil,
            nil.alpha(),
            0.5,
            &SearchOptions {
                reduce: false,
                ..Default::default()
            },
        )
        .unwrap();
        // f(eps) = 0, f(a) = 10, f(aa...) = 0
        assert!(iv.contains(5.0, 1e-9), "{iv:?}");
    }

    #[test]
    fn tail_factor_matches_series() {
        let p = TailBoundParams::new(NormKind::L2, Matrix::identity(2, 2), 0.8, 3, 1.4).unwrap();
        let gamma: f64 = 0.9;
        let series: f64 = (1..4000)
            .map(|j: i32| gamma.powi(j) * 1.4f64.powi(j % 3) * 0.8f64.powi(3 * (j / 3)))
            .sum();
        assert_abs_diff_eq!(p.tail_factor(gamma), series, epsilon = 1e-10);
    }

    #[test]
    fn zero_vector_has_zero_seminorm() {
        let a = fig1(1.25);
        let iv = seminorm_interval(&a, &Vector::zeros(1), 0.5, &SearchOptions::default()).unwrap();
        assert_eq!((iv.lower, iv.upper), (0.0, 0.0));
    }

    #[test]
    fn fig1_closed_forms() {
        for i in 1..=3 {
            let iv = distance(
                &fig1(1.0),
                &fig1(1.0 + 2f64.powi(-i)),
                0.5,
                &SearchOptions::default(),
            )
            .unwrap();
            let exact = closed_form(0.5, i);
            assert!(iv.contains(exact, 1e-12), "i={i}: {iv:?} vs {exact}");
            assert!(iv.width() <= 1e-6);
        }
    }

    #[test]
    fn unreduced_search_agrees_on_fig1() {
        let opts = SearchOptions {
            reduce: false,
            ..Default::default()
        };
        let iv = distance(&fig1(1.0), &fig1(1.25), 0.5, &opts).unwrap();
        assert!(iv.contains(2.0 / 3.0, 1e-12), "{iv:?}");
    }

    #[test]
    fn inadmissible_gamma_is_an_error() {
        let err = distance(&fig1(1.0), &fig1(1.5), 0.9, &SearchOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InadmissibleGamma { .. }));
    }

    #[test]
    fn self_distance_is_zero_and_symmetric() {
        let mut r = rng(2);
        let a = random_wfa(&mut r, 2, 3, 0.5);
        let b = random_wfa(&mut r, 2, 3, 0.5);
        let opts = SearchOptions::default();
        let d = distance(&a, &a, 0.5, &opts).unwrap();
        assert_eq!(d.lower, 0.0);
        assert!(d.upper <= 1e-6);
        assert_eq!(
            distance(&a, &b, 0.5, &opts).unwrap(),
            distance(&b, &a, 0.5, &opts).unwrap()
        );
    }

    #[test]
    fn truncation_equals_value_iteration() {
        let mut r = rng(8);
        let a = random_wfa(&mut r, 2, 2, 0.9);
        for _ in 0..5 {
            let v = uniform_vector(&mut r, 2);
            for t in 0..=6 {
                let lhs = truncated_seminorm(&a, &v, 0.7, t).unwrap();
                let rhs = value_iteration(&a, &v, 0.7, t + 1);
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn search_is_monotone_in_budget() {
        let mut r = rng(31);
        let a = random_wfa(&mut r, 2, 3, 0.9);
        let mut prev: Option<CertifiedInterval> = None;
        for budget in [1, 4, 16, 64, 256, 1024] {
            let opts = SearchOptions {
                budget,
                eps: 1e-9,
                ..Default::default()
            };
            let iv = seminorm_interval(&a, a.alpha(), 0.6, &opts).unwrap();
            if let Some(p) = &prev {
                assert!(iv.lower >= p.lower);
                assert!(iv.upper <= p.upper);
            }
            assert!(iv.witness_prefix.len() <= iv.depth_explored);
            prev = Some(iv);
        }
    }

    #[test]
    fn lemma_bound_fig1() {
        let a = fig1(1.0);
        let b = fig1(1.25);
        let p = joint_tail_params(&a, &b, 0.5).unwrap();
        assert_abs_diff_eq!(p.theta, 1.25, epsilon = 1e-12);
        let bound = distance_upper_bound(&a, &b, 0.5, &p).unwrap();
        assert_abs_diff_eq!(bound, 0.5 * 0.25 / (0.375 * 0.375), epsilon = 1e-12);
        assert!(bound >= 2.0 / 3.0);
        assert_eq!(
            distance_upper_bound(&a, &a, 0.5, &joint_tail_params(&a, &a, 0.5).unwrap()).unwrap(),
            0.0
        );
        let too_small =
            TailBoundParams::new(NormKind::L2, Matrix::identity(1, 1), 1.1, 1, 1.1).unwrap();
        assert!(distance_upper_bound(&a, &b, 0.5, &too_small).is_err());
        let too_big =
            TailBoundParams::new(NormKind::L2, Matrix::identity(1, 1), 2.5, 1, 2.5).unwrap();
        assert!(distance_upper_bound(&a, &b, 0.5, &too_big).is_err());
    }

    #[test]
    fn change_of_basis_keeps_distance() {
        let mut r = rng(12);
        let a = random_wfa(&mut r, 2, 2, 0.5);
        let b = random_wfa(&mut r, 2, 2, 0.5);
        let s = Matrix::identity(2, 2) + uniform_matrix(&mut r, 2, 2) * 0.3;
        let opts = SearchOptions::default();
        let d = distance(&a, &b, 0.5, &opts).unwrap();
        let dc = distance(
            &a.conjugate(&s).unwrap(),
            &b.conjugate(&s).unwrap(),
            0.5,
            &opts,
        )
        .unwrap();
        assert!(d.lower <= dc.upper + 1e-9 && dc.lower <= d.upper + 1e-9);
    }

    #[test]
    fn continuity_rows_shrink() {
        let mut r = rng(40);
        let a = random_wfa(&mut r, 2, 3, 0.5);
        let scales = [0.0, 1e-1, 1e-2, 1e-3, 1e-4];
        let rows = parameter_continuity_experiment(&a, &scales, 0.5, &SearchOptions::default(), 7)
            .unwrap();
        assert!(rows[0].upper <= 1e-6);
        for w in rows[1..].windows(2) {
            assert!(w[1].upper <= w[0].upper + 1e-6);
            assert!(w[0].lemma_bound >= w[0].lower);
        }
        // linear regime: ratios of successive upper bounds track the scale ratio
        for w in rows[2..].windows(2) {
            let ratio = w[0].upper / w[1].upper;
            assert!((3.0..30.0).contains(&ratio), "{ratio}");
        }
        let csv = continuity_table(&rows, 7).render();
        assert!(csv.starts_with("# seed=7\nscale,lower,upper,lemma_bound\n"));
    }
}
