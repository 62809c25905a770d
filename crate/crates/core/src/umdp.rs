//! Unobservable MDPs with action-independent non-negative rewards and their
//! reduction to weighted automata.
//!
//! The value of an infinite action string `x` is
//! `V(x) = sum_{t >= 1} gamma^{t-1} alpha^T T_{x_1} ... T_{x_{t-1}} beta`.
//! Transposing every `T_σ` turns the row-vector dynamics into the column
//! convention of [`Wfa`], and `sup_x V(x)` becomes the seminorm of `alpha`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::metric::{seminorm_interval, CertifiedInterval, SearchOptions};
use crate::wfa::{matrix_from_rows, parse_word, Wfa};

const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UmdpDoc", into = "UmdpDoc")]
pub struct Umdp {
    actions: Vec<String>,
    alpha: Vector,
    beta: Vector,
    trans: Vec<Matrix>,
    gamma: f64,
}

/// JSON interchange form; `trans` holds the row-stochastic `T_σ` as is.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UmdpDoc {
    pub alphabet: Vec<String>,
    pub dim: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub trans: BTreeMap<String, Vec<Vec<f64>>>,
    pub gamma: f64,
}

fn renormalize_rows(m: &mut Matrix, action: &str) -> Result<()> {
    for i in 0..m.nrows() {
        let mut row = m.row_mut(i);
        if let Some(x) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidUmdp(format!(
                "T[{action}] row {i} has entry {x} outside [0, 1]"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidUmdp(format!(
                "T[{action}] row {i} sums to {sum}"
            )));
        }
        row /= sum;
    }
    Ok(())
}

impl Umdp {
    /// Validates stochasticity within `1e-12`, then renormalizes exactly.
    pub fn new(
        actions: Vec<String>,
        alpha: Vector,
        beta: Vector,
        trans: Vec<Matrix>,
        gamma: f64,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidUmdp(format!(
                "gamma must lie in (0, 1), got {gamma}"
            )));
        }
        let n = alpha.len();
        if n == 0 {
            return Err(Error::InvalidUmdp("no states".into()));
        }
        // reuse the automaton validation for shapes and alphabet, then re-read
        // the matrices in sorted order
        let shape_check = Wfa::new(actions, alpha.clone(), beta.clone(), trans)?;
        let actions = shape_check.alphabet().to_vec();
        let mut trans = shape_check.trans().to_vec();
        for (sym, m) in actions.iter().zip(trans.iter_mut()) {
            renormalize_rows(m, sym)?;
        }
        if alpha.iter().any(|&p| !(p >= 0.0)) || (alpha.sum() - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidUmdp(
                "alpha must be a probability vector".into(),
            ));
        }
        if beta.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidUmdp("rewards must be non-negative".into()));
        }
        let total = alpha.sum();
        Ok(Umdp {
            actions,
            alpha: alpha / total,
            beta,
            trans,
            gamma,
        })
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn states(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &Vector {
        &self.alpha
    }

    pub fn beta(&self) -> &Vector {
        &self.beta
    }

    pub fn trans(&self) -> &[Matrix] {
        &self.trans
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn parse_actions(&self, text: &str) -> Result<Vec<usize>> {
        parse_word(&self.actions, text)
    }

    /// Partial sum of the value over `t = 1..=horizon`; needs `|x| >= horizon`.
    pub fn value_truncated(&self, x: &[usize], horizon: usize) -> Result<f64> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if x.len() < horizon {
            return Err(Error::InvalidArgument(format!(
                "action string has length {} < horizon {horizon}",
                x.len()
            )));
        }
        if let Some(&bad) = x.iter().find(|&&s| s >= self.actions.len()) {
            return Err(Error::UnknownSymbol(format!("#{bad}")));
        }
        // distribution as a row vector, propagated by right multiplication
        let mut dist = self.alpha.transpose();
        let mut total = 0.0;
        let mut discount = 1.0;
        for &s in &x[..horizon] {
            total += discount * (&dist * &self.beta)[(0, 0)];
            dist = &dist * &self.trans[s];
            discount *= self.gamma;
        }
        Ok(total)
    }

    pub fn to_wfa(&self) -> Wfa {
        Wfa::new(
            self.actions.clone(),
            self.alpha.clone(),
            self.beta.clone(),
            self.trans.iter().map(|m| m.transpose()).collect(),
        )
        .expect("a valid UMDP has consistent shapes")
    }

    /// Certified interval around `sup_x V(x)` over infinite action strings.
    pub fn sup_value_interval(&self, opts: &SearchOptions) -> Result<CertifiedInterval> {
        let a = self.to_wfa();
        seminorm_interval(&a, a.alpha(), self.gamma, opts)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("UMDP serializes")
    }

    pub fn from_json(text: &str) -> Result<Umdp> {
        Ok(serde_json::from_str(text)?)
    }
}

impl From<Umdp> for UmdpDoc {
    fn from(u: Umdp) -> Self {
        UmdpDoc {
            dim: u.states(),
            alpha: u.alpha.iter().copied().collect(),
            beta: u.beta.iter().copied().collect(),
            trans: u
                .actions
                .iter()
                .zip(&u.trans)
                .map(|(s, m)| {
                    (
                        s.clone(),
                        (0..m.nrows())
                            .map(|i| m.row(i).iter().copied().collect())
                            .collect(),
                    )
                })
                .collect(),
            alphabet: u.actions,
            gamma: u.gamma,
        }
    }
}

impl TryFrom<UmdpDoc> for Umdp {
    type Error = Error;

    fn try_from(doc: UmdpDoc) -> Result<Self> {
        let n = doc.dim;
        if doc.alpha.len() != n {
            return Err(Error::dim("alpha", n, doc.alpha.len()));
        }
        if doc.beta.len() != n {
            return Err(Error::dim("beta", n, doc.beta.len()));
        }
        let mut trans = Vec::with_capacity(doc.alphabet.len());
        for sym in &doc.alphabet {
            let rows = doc.trans.get(sym).ok_or_else(|| {
                Error::InvalidUmdp(format!("missing transition matrix for `{sym}`"))
            })?;
            trans.push(
                matrix_from_rows(rows, n, n, &format!("trans[{sym}]"))
                    .map_err(Error::InvalidUmdp)?,
            );
        }
        if let Some(extra) = doc.trans.keys().find(|k| !doc.alphabet.contains(k)) {
            return Err(Error::InvalidUmdp(format!(
                "transition matrix for unknown action `{extra}`"
            )));
        }
        Umdp::new(
            doc.alphabet,
            Vector::from_vec(doc.alpha),
            Vector::from_vec(doc.beta),
            trans,
            doc.gamma,
        )
    }
}
