//! Hankel blocks and spectral learning.
//!
//! A block indexed by prefixes `P` and suffixes `S` stores `H(p, s) = f(ps)`,
//! the shifted blocks `H_σ(p, s) = f(pσs)` and the boundary vectors
//! `hP(p) = f(p)`, `hS(s) = f(s)`. From a rank-`n` SVD `H ≈ U D V^T` the
//! learned automaton is
//!
//! ```text
//! tau_σ = (D^{-1} U^T H_σ V)^T,   alpha = V^T hS,   beta = D^{-1} U^T hP.
//! ```
//!
//! The transposes come from reading states as rows of `H V`: that row-vector
//! automaton runs prefixes left to right, and transposing it yields the
//! column convention of [`Wfa`].

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bisim::minimize;
use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, Matrix, Svd, Vector};
use crate::metric::{distance, SearchOptions};
use crate::random::{derive_seed, rng, sign_noise, sign_noise_vector};
use crate::report::CsvTable;
use crate::wfa::{matrix_from_rows, Wfa};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HankelDoc", into = "HankelDoc")]
pub struct HankelBlock {
    alphabet: Vec<String>,
    prefixes: Vec<Vec<usize>>,
    suffixes: Vec<Vec<usize>>,
    h: Matrix,
    hsig: Vec<Matrix>,
    hp: Vector,
    hs: Vector,
}

/// JSON interchange form; words are lists of symbols, `[]` is the empty word.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HankelDoc {
    pub alphabet: Vec<String>,
    pub prefixes: Vec<Vec<String>>,
    pub suffixes: Vec<Vec<String>>,
    pub h: Vec<Vec<f64>>,
    pub hsig: BTreeMap<String, Vec<Vec<f64>>>,
    pub hp: Vec<f64>,
    pub hs: Vec<f64>,
}

fn check_index_set(words: &[Vec<usize>], what: &str) -> Result<()> {
    if !words.iter().any(|w| w.is_empty()) {
        return Err(Error::InvalidHankel(format!(
            "{what} must contain the empty word"
        )));
    }
    let distinct: BTreeSet<&Vec<usize>> = words.iter().collect();
    if distinct.len() != words.len() {
        return Err(Error::InvalidHankel(format!("{what} contain duplicates")));
    }
    Ok(())
}

impl HankelBlock {
    /// Assembles a block from its parts; `hsig[i]` belongs to `alphabet[i]`,
    /// which must already be sorted.
    pub fn new(
        alphabet: Vec<String>,
        prefixes: Vec<Vec<usize>>,
        suffixes: Vec<Vec<usize>>,
        h: Matrix,
        hsig: Vec<Matrix>,
        hp: Vector,
        hs: Vector,
    ) -> Result<Self> {
        if alphabet.is_empty() || alphabet.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidHankel(
                "alphabet must be non-empty, sorted and distinct".into(),
            ));
        }
        check_index_set(&prefixes, "prefixes")?;
        check_index_set(&suffixes, "suffixes")?;
        let k = alphabet.len();
        if prefixes.iter().chain(&suffixes).flatten().any(|&s| s >= k) {
            return Err(Error::InvalidHankel(
                "word uses a symbol outside the alphabet".into(),
            ));
        }
        let shape = (prefixes.len(), suffixes.len());
        if h.shape() != shape {
            return Err(Error::InvalidHankel(format!(
                "H is {:?}, expected {shape:?}",
                h.shape()
            )));
        }
        if hsig.len() != k || hsig.iter().any(|m| m.shape() != shape) {
            return Err(Error::InvalidHankel(
                "shifted blocks have the wrong count or shape".into(),
            ));
        }
        if hp.len() != shape.0 || hs.len() != shape.1 {
            return Err(Error::InvalidHankel(
                "boundary vectors have the wrong length".into(),
            ));
        }
        Ok(HankelBlock {
            alphabet,
            prefixes,
            suffixes,
            h,
            hsig,
            hp,
            hs,
        })
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn prefixes(&self) -> &[Vec<usize>] {
        &self.prefixes
    }

    pub fn suffixes(&self) -> &[Vec<usize>] {
        &self.suffixes
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn hsig(&self) -> &[Matrix] {
        &self.hsig
    }

    pub fn hp(&self) -> &Vector {
        &self.hp
    }

    pub fn hs(&self) -> &Vector {
        &self.hs
    }

    /// Adds independent sign noise of spectral norm `scale` to `H`, every
    /// shifted block and both boundary vectors.
    pub fn perturbed(&self, rng: &mut impl rand::Rng, scale: f64) -> HankelBlock {
        let (p, s) = self.h.shape();
        HankelBlock {
            h: &self.h + sign_noise(rng, p, s, scale),
            hsig: self
                .hsig
                .iter()
                .map(|m| m + sign_noise(rng, p, s, scale))
                .collect(),
            hp: &self.hp + sign_noise_vector(rng, p, scale),
            hs: &self.hs + sign_noise_vector(rng, s, scale),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("block serializes")
    }

    pub fn from_json(text: &str) -> Result<HankelBlock> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Exact block of `f_a` on prefixes `p` and suffixes `s` (symbol indices).
pub fn hankel_from_wfa(a: &Wfa, p: &[Vec<usize>], s: &[Vec<usize>]) -> Result<HankelBlock> {
    let k = a.alphabet().len();
    if let Some(&bad) = p.iter().chain(s).flatten().find(|&&x| x >= k) {
        return Err(Error::UnknownSymbol(format!("#{bad}")));
    }
    check_index_set(p, "prefixes")?;
    check_index_set(s, "suffixes")?;
    // forward states of prefixes and backward covectors of suffixes
    let fwd: Vec<Vector> = p.iter().map(|w| a.run_from(a.alpha(), w)).collect();
    let rev = a.reverse();
    let bwd: Vec<Vector> = s
        .iter()
        .map(|w| {
            let mut r = w.clone();
            r.reverse();
            rev.run_from(rev.alpha(), &r)
        })
        .collect();
    let block = |mid: Option<&Matrix>| {
        Matrix::from_fn(p.len(), s.len(), |i, j| match mid {
            Some(m) => bwd[j].dot(&(m * &fwd[i])),
            None => bwd[j].dot(&fwd[i]),
        })
    };
    HankelBlock::new(
        a.alphabet().to_vec(),
        p.to_vec(),
        s.to_vec(),
        block(None),
        a.trans().iter().map(|m| block(Some(m))).collect(),
        Vector::from_iterator(p.len(), fwd.iter().map(|v| a.beta().dot(v))),
        Vector::from_iterator(s.len(), bwd.iter().map(|w| w.dot(a.alpha()))),
    )
}

/// Whether the block attains the rank of the full Hankel matrix of `a`.
pub fn basis_is_complete(a: &Wfa, block: &HankelBlock, tol: f64) -> bool {
    numerical_rank(block.h(), tol) == minimize(a, tol).dim()
}

/// Learns an automaton with `rank` states from a (possibly noisy) block.
pub fn spectral_learn(block: &HankelBlock, rank: usize, tol: f64) -> Result<Wfa> {
    let (np, ns) = block.h.shape();
    if rank == 0 || rank > np.min(ns) {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} must lie in 1..={}",
            np.min(ns)
        )));
    }
    let svd = Svd::new(&block.h);
    let numerical = svd.rank(tol);
    if rank > numerical {
        log::warn!("requested rank {rank} exceeds numerical rank {numerical} of the Hankel block");
    }
    let smax = svd.sigma_max();
    let floor = smax * f64::EPSILON * np.max(ns) as f64;
    for i in 0..rank {
        let value = svd.singular[i];
        if smax == 0.0 || value <= floor {
            return Err(Error::RankOverestimated { index: i, value });
        }
    }
    let u = svd.u.columns(0, rank);
    let v = svd.v.columns(0, rank);
    let d_inv = Matrix::from_diagonal(&svd.singular.rows(0, rank).map(|x| 1.0 / x));
    let ut = d_inv * u.transpose();
    let trans = block
        .hsig
        .iter()
        .map(|m| (&ut * m * v).transpose())
        .collect();
    Wfa::new(
        block.alphabet.clone(),
        v.transpose() * &block.hs,
        &ut * &block.hp,
        trans,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnRow {
    pub scale: f64,
    /// Mean `||H - Ĥ||_2` over the accepted trials.
    pub hankel_err: f64,
    pub d_lower: f64,
    pub d_upper: f64,
    /// `d_upper / scale`, NaN at scale zero.
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct LearnExperiment<'a> {
    pub prefixes: &'a [Vec<usize>],
    pub suffixes: &'a [Vec<usize>],
    pub scales: &'a [f64],
    pub gamma: f64,
    pub opts: SearchOptions,
    pub trials: usize,
    pub seed: u64,
}

/// Perturbs the exact block of `a` at each scale, relearns at the minimal
/// rank and reports the distance to `a`, averaged over the trials. Trials
/// whose distance cannot be certified are skipped with a warning.
pub fn perturbation_experiment(a: &Wfa, cfg: &LearnExperiment<'_>) -> Result<Vec<LearnRow>> {
    let tol = cfg.opts.tol;
    let exact = hankel_from_wfa(a, cfg.prefixes, cfg.suffixes)?;
    let rank = minimize(a, tol).dim();
    if rank == 0 {
        return Err(Error::InvalidArgument(
            "the automaton computes the zero function".into(),
        ));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument(
            "at least one trial is required".into(),
        ));
    }
    let mut rows = Vec::new();
    for (si, &scale) in cfg.scales.iter().enumerate() {
        let results: Vec<Option<(f64, f64, f64)>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = derive_seed(cfg.seed, (si * cfg.trials + trial) as u64);
                let noisy = exact.perturbed(&mut rng(seed), scale);
                let err = crate::linalg::spectral_norm(&(noisy.h() - exact.h()));
                let outcome = spectral_learn(&noisy, rank, tol)
                    .and_then(|learned| distance(a, &learned, cfg.gamma, &cfg.opts));
                match outcome {
                    Ok(iv) => Some((err, iv.lower, iv.upper)),
                    Err(e) => {
                        log::warn!("scale {scale} trial {trial} skipped: {e}");
                        None
                    }
                }
            })
            .collect();
        let ok: Vec<(f64, f64, f64)> = results.into_iter().flatten().collect();
        if ok.is_empty() {
            log::warn!("scale {scale}: every trial was skipped");
            continue;
        }
        let m = ok.len() as f64;
        let err = ok.iter().map(|r| r.0).sum::<f64>() / m;
        let d_lower = ok.iter().map(|r| r.1).sum::<f64>() / m;
        let d_upper = ok.iter().map(|r| r.2).sum::<f64>() / m;
        rows.push(LearnRow {
            scale,
            hankel_err: err,
            d_lower,
            d_upper,
            ratio: if scale > 0.0 {
                d_upper / scale
            } else {
                f64::NAN
            },
        });
    }
    Ok(rows)
}

pub fn learn_table(rows: &[LearnRow], seed: u64) -> CsvTable {
    CsvTable {
        seed,
        header: vec!["scale", "hankel_err", "d_lower", "d_upper", "ratio"],
        rows: rows
            .iter()
            .map(|r| vec![r.scale, r.hankel_err, r.d_lower, r.d_upper, r.ratio])
            .collect(),
    }
}

impl From<HankelBlock> for HankelDoc {
    fn from(b: HankelBlock) -> Self {
        let rows = |m: &Matrix| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| m.row(i).iter().copied().collect())
                .collect()
        };
        let words = |ws: &[Vec<usize>]| -> Vec<Vec<String>> {
            ws.iter()
                .map(|w| w.iter().map(|&s| b.alphabet[s].clone()).collect())
                .collect()
        };
        HankelDoc {
            prefixes: words(&b.prefixes),
            suffixes: words(&b.suffixes),
            h: rows(&b.h),
            hsig: b
                .alphabet
                .iter()
                .zip(&b.hsig)
                .map(|(s, m)| (s.clone(), rows(m)))
                .collect(),
            hp: b.hp.iter().copied().collect(),
            hs: b.hs.iter().copied().collect(),
            alphabet: b.alphabet,
        }
    }
}

impl TryFrom<HankelDoc> for HankelBlock {
    type Error = Error;

    fn try_from(doc: HankelDoc) -> Result<Self> {
        let mut order: Vec<usize> = (0..doc.alphabet.len()).collect();
        order.sort_by(|&i, &j| doc.alphabet[i].cmp(&doc.alphabet[j]));
        let alphabet: Vec<String> = order.iter().map(|&i| doc.alphabet[i].clone()).collect();
        let index = |sym: &String| {
            alphabet
                .binary_search(sym)
                .map_err(|_| Error::UnknownSymbol(sym.clone()))
        };
        let words = |ws: &[Vec<String>]| -> Result<Vec<Vec<usize>>> {
            ws.iter().map(|w| w.iter().map(index).collect()).collect()
        };
        let prefixes = words(&doc.prefixes)?;
        let suffixes = words(&doc.suffixes)?;
        let (np, ns) = (prefixes.len(), suffixes.len());
        let h = matrix_from_rows(&doc.h, np, ns, "h").map_err(Error::InvalidHankel)?;
        let mut hsig = Vec::with_capacity(alphabet.len());
        for sym in &alphabet {
            let rows = doc.hsig.get(sym).ok_or_else(|| {
                Error::InvalidHankel(format!("missing shifted block for `{sym}`"))
            })?;
            hsig.push(
                matrix_from_rows(rows, np, ns, &format!("hsig[{sym}]"))
                    .map_err(Error::InvalidHankel)?,
            );
        }
        if doc.hsig.len() != alphabet.len() {
            return Err(Error::InvalidHankel(
                "shifted block for a symbol outside the alphabet".into(),
            ));
        }
        HankelBlock::new(
            alphabet,
            prefixes,
            suffixes,
            h,
            hsig,
            Vector::from_vec(doc.hp),
            Vector::from_vec(doc.hs),
        )
    }
}
