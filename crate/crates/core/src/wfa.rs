//! Weighted finite automata over the reals.
//!
//! States are column vectors, each transition matrix acts by matrix-vector
//! product and the final weights act by dot product, so that
//! `f(x_1 ... x_k) = beta · (tau_{x_k} ... tau_{x_1} alpha)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{concat, direct_sum, Matrix, Vector};

/// A weighted automaton `(alpha, beta, {tau_sigma})` over a finite alphabet.
///
/// The alphabet is kept sorted; `trans()[i]` is the matrix of `alphabet()[i]`.
/// Values are immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WfaDoc", into = "WfaDoc")]
pub struct Wfa {
    alphabet: Vec<String>,
    alpha: Vector,
    beta: Vector,
    trans: Vec<Matrix>,
}

/// JSON interchange form.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WfaDoc {
    pub alphabet: Vec<String>,
    pub dim: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub trans: BTreeMap<String, Vec<Vec<f64>>>,
}

impl Wfa {
    /// Builds an automaton; `trans[i]` belongs to `alphabet[i]`. The alphabet
    /// is re-sorted canonically.
    pub fn new(
        alphabet: Vec<String>,
        alpha: Vector,
        beta: Vector,
        trans: Vec<Matrix>,
    ) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::InvalidAutomaton("alphabet is empty".into()));
        }
        if alphabet.len() != trans.len() {
            return Err(Error::dim("transition count", alphabet.len(), trans.len()));
        }
        let n = alpha.len();
        if beta.len() != n {
            return Err(Error::dim("beta", n, beta.len()));
        }
        for (sym, m) in alphabet.iter().zip(&trans) {
            if m.shape() != (n, n) {
                return Err(Error::InvalidAutomaton(format!(
                    "matrix for `{sym}` is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let mut pairs: Vec<(String, Matrix)> = alphabet.into_iter().zip(trans).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidAutomaton(format!(
                    "duplicate symbol `{}`",
                    w[0].0
                )));
            }
        }
        let (alphabet, trans) = pairs.into_iter().unzip();
        Ok(Wfa {
            alphabet,
            alpha,
            beta,
            trans,
        })
    }

    /// Convenience constructor from row-major nested slices.
    pub fn from_rows(
        symbols: &[&str],
        alpha: &[f64],
        beta: &[f64],
        trans: &[&[&[f64]]],
    ) -> Result<Self> {
        let n = alpha.len();
        let mats = trans
            .iter()
            .map(|rows| {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidAutomaton("ragged transition matrix".into()));
                }
                Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        Wfa::new(
            symbols.iter().map(|s| s.to_string()).collect(),
            Vector::from_column_slice(alpha),
            Vector::from_column_slice(beta),
            mats,
        )
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn dim(&self) -> usize {
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

    pub fn symbol_index(&self, sym: &str) -> Result<usize> {
        self.alphabet
            .binary_search_by(|s| s.as_str().cmp(sym))
            .map_err(|_| Error::UnknownSymbol(sym.to_string()))
    }

    pub fn transition(&self, sym: &str) -> Result<&Matrix> {
        Ok(&self.trans[self.symbol_index(sym)?])
    }

    pub fn to_indices<S: AsRef<str>>(&self, word: &[S]) -> Result<Vec<usize>> {
        word.iter().map(|s| self.symbol_index(s.as_ref())).collect()
    }

    pub fn to_symbols(&self, word: &[usize]) -> Vec<String> {
        word.iter().map(|&i| self.alphabet[i].clone()).collect()
    }

    /// Parses a textual word. Whitespace-separated tokens are symbols; a
    /// token-free string is split into characters. `""` and `"ε"` denote
    /// the empty word.
    pub fn parse_word(&self, text: &str) -> Result<Vec<usize>> {
        parse_word(&self.alphabet, text)
    }

    /// State reached from `v` after reading `word`.
    pub fn run_from(&self, v: &Vector, word: &[usize]) -> Vector {
        word.iter().fold(v.clone(), |u, &s| &self.trans[s] * u)
    }

    pub fn evaluate_indices(&self, word: &[usize]) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        self.beta.dot(&self.run_from(&self.alpha, word))
    }

    pub fn evaluate<S: AsRef<str>>(&self, word: &[S]) -> Result<f64> {
        Ok(self.evaluate_indices(&self.to_indices(word)?))
    }

    /// The reverse automaton: initial and final weights swapped, every
    /// transition transposed. Evaluates `x` as the original evaluates `x`
    /// read backwards.
    pub fn reverse(&self) -> Wfa {
        Wfa {
            alphabet: self.alphabet.clone(),
            alpha: self.beta.clone(),
            beta: self.alpha.clone(),
            trans: self.trans.iter().map(|m| m.transpose()).collect(),
        }
    }

    pub fn with_initial(&self, v: &Vector) -> Result<Wfa> {
        if v.len() != self.dim() {
            return Err(Error::dim("initial vector", self.dim(), v.len()));
        }
        Ok(Wfa {
            alpha: v.clone(),
            ..self.clone()
        })
    }

    pub fn with_final(&self, w: &Vector) -> Result<Wfa> {
        if w.len() != self.dim() {
            return Err(Error::dim("final vector", self.dim(), w.len()));
        }
        Ok(Wfa {
            beta: w.clone(),
            ..self.clone()
        })
    }

    pub fn check_same_alphabet(&self, other: &Wfa) -> Result<()> {
        if self.alphabet == other.alphabet {
            return Ok(());
        }
        let a: BTreeSet<&String> = self.alphabet.iter().collect();
        let b: BTreeSet<&String> = other.alphabet.iter().collect();
        Err(Error::AlphabetMismatch {
            only_first: a.difference(&b).map(|s| s.to_string()).collect(),
            only_second: b.difference(&a).map(|s| s.to_string()).collect(),
        })
    }

    /// Direct sum: computes `f_self + f_other`.
    pub fn direct_sum(&self, other: &Wfa) -> Result<Wfa> {
        self.check_same_alphabet(other)?;
        Ok(Wfa {
            alphabet: self.alphabet.clone(),
            alpha: concat(&self.alpha, &other.alpha),
            beta: concat(&self.beta, &other.beta),
            trans: self
                .trans
                .iter()
                .zip(&other.trans)
                .map(|(a, b)| direct_sum(a, b))
                .collect(),
        })
    }

    /// Difference automaton computing `f_self - f_other`: the direct sum
    /// with the second initial vector negated.
    pub fn difference(&self, other: &Wfa) -> Result<Wfa> {
        let mut sum = self.direct_sum(other)?;
        sum.alpha = concat(&self.alpha, &(-&other.alpha));
        Ok(sum)
    }

    /// Change of basis `v -> s v`: the result computes the same function.
    pub fn conjugate(&self, s: &Matrix) -> Result<Wfa> {
        let n = self.dim();
        if s.shape() != (n, n) {
            return Err(Error::dim("basis change", n, s.nrows()));
        }
        let inv = s
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("basis change is singular".into()))?;
        Ok(Wfa {
            alphabet: self.alphabet.clone(),
            alpha: s * &self.alpha,
            beta: inv.transpose() * &self.beta,
            trans: self.trans.iter().map(|m| s * m * &inv).collect(),
        })
    }

    /// Restriction/compression `alpha' = L alpha`, `beta' = R^T beta`,
    /// `tau' = L tau R` for `L: k x n`, `R: n x k`.
    pub(crate) fn compress(&self, left: &Matrix, right: &Matrix) -> Wfa {
        Wfa {
            alphabet: self.alphabet.clone(),
            alpha: left * &self.alpha,
            beta: right.transpose() * &self.beta,
            trans: self.trans.iter().map(|m| left * m * right).collect(),
        }
    }

    pub fn to_doc(&self) -> WfaDoc {
        WfaDoc::from(self.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("automaton serializes")
    }

    pub fn from_json(text: &str) -> Result<Wfa> {
        Ok(serde_json::from_str(text)?)
    }
}

pub(crate) fn parse_word(alphabet: &[String], text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    let lookup = |s: &str| {
        alphabet
            .binary_search_by(|a| a.as_str().cmp(s))
            .map_err(|_| Error::UnknownSymbol(s.to_string()))
    };
    if text.is_empty() || text == "ε" {
        return Ok(Vec::new());
    }
    if text.contains(char::is_whitespace) {
        return text.split_whitespace().map(lookup).collect();
    }
    if let Ok(i) = lookup(text) {
        if text.chars().count() > 1 && text.chars().all(|c| lookup(&c.to_string()).is_ok()) {
            return Err(Error::InvalidArgument(format!(
                "word `{text}` is ambiguous; separate symbols with spaces"
            )));
        }
        return Ok(vec![i]);
    }
    text.chars().map(|c| lookup(&c.to_string())).collect()
}

/// All words over `k` symbols of length at most `max_len`, shortest first,
/// lexicographic within a length.
pub fn words_up_to(k: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut level: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(level.len() * k);
        for w in &level {
            for s in 0..k {
                let mut x = w.clone();
                x.push(s);
                next.push(x);
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

pub(crate) fn matrix_from_rows(
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
    what: &str,
) -> std::result::Result<Matrix, String> {
    if rows.len() != nrows {
        return Err(format!(
            "{what}: expected {nrows} rows, found {}",
            rows.len()
        ));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(format!(
                "{what}: row {i} has {} entries, expected {ncols}",
                r.len()
            ));
        }
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl From<Wfa> for WfaDoc {
    fn from(a: Wfa) -> Self {
        WfaDoc {
            dim: a.dim(),
            alpha: a.alpha.iter().copied().collect(),
            beta: a.beta.iter().copied().collect(),
            trans: a
                .alphabet
                .iter()
                .zip(&a.trans)
                .map(|(s, m)| (s.clone(), rows_of(m)))
                .collect(),
            alphabet: a.alphabet,
        }
    }
}

impl TryFrom<WfaDoc> for Wfa {
    type Error = String;

    fn try_from(doc: WfaDoc) -> std::result::Result<Self, String> {
        let n = doc.dim;
        if doc.alpha.len() != n {
            return Err(format!(
                "field `alpha`: expected {n} entries, found {}",
                doc.alpha.len()
            ));
        }
        if doc.beta.len() != n {
            return Err(format!(
                "field `beta`: expected {n} entries, found {}",
                doc.beta.len()
            ));
        }
        let listed: BTreeSet<&String> = doc.alphabet.iter().collect();
        if listed.len() != doc.alphabet.len() {
            return Err("field `alphabet`: duplicate symbol".into());
        }
        let keyed: BTreeSet<&String> = doc.trans.keys().collect();
        if listed != keyed {
            return Err(format!(
                "field `trans`: keys {:?} do not match alphabet {:?}",
                keyed, doc.alphabet
            ));
        }
        let mut mats = Vec::with_capacity(doc.alphabet.len());
        for sym in &doc.alphabet {
            mats.push(matrix_from_rows(
                &doc.trans[sym],
                n,
                n,
                &format!("field `trans.{sym}`"),
            )?);
        }
        Wfa::new(
            doc.alphabet,
            Vector::from_vec(doc.alpha),
            Vector::from_vec(doc.beta),
            mats,
        )
        .map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fig1(tau: f64) -> Wfa {
        Wfa::from_rows(&["a"], &[1.0], &[1.0], &[&[&[tau]]]).unwrap()
    }

    fn asym() -> Wfa {
        Wfa::from_rows(
            &["a", "b"],
            &[1.0, 0.5],
            &[0.3, -1.0],
            &[&[&[0.2, 1.0], &[0.0, 0.7]], &[&[0.5, 0.0], &[-0.4, 0.1]]],
        )
        .unwrap()
    }

    /// Left-to-right propagation with explicit loops, independent of nalgebra products.
    fn naive_eval(a: &Wfa, word: &[usize]) -> f64 {
        let n = a.dim();
        let mut v: Vec<f64> = a.alpha().iter().copied().collect();
        for &s in word {
            let m = &a.trans()[s];
            let mut next = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    next[i] += m[(i, j)] * v[j];
                }
            }
            v = next;
        }
        (0..n).map(|i| a.beta()[i] * v[i]).sum()
    }

    #[test]
    fn fig1_evaluation() {
        assert_abs_diff_eq!(
            fig1(1.5).evaluate(&["a", "a"]).unwrap(),
            2.25,
            epsilon = 1e-15
        );
    }

    #[test]
    fn empty_word_is_dot_product() {
        let a = asym();
        assert_abs_diff_eq!(a.evaluate::<&str>(&[]).unwrap(), 0.3 - 0.5, epsilon = 1e-15);
    }

    #[test]
    fn unknown_symbol_is_named() {
        let err = asym().evaluate(&["a", "z"]).unwrap_err();
        assert!(err.to_string().contains("`z`"));
    }

    #[test]
    fn alphabet_is_sorted_with_matrices() {
        let a = Wfa::from_rows(&["b", "a"], &[1.0], &[1.0], &[&[&[2.0]], &[&[3.0]]]).unwrap();
        assert_eq!(a.alphabet(), &["a".to_string(), "b".to_string()]);
        assert_eq!(a.transition("a").unwrap()[(0, 0)], 3.0);
    }

    #[test]
    fn rejects_duplicates_and_bad_shapes() {
        assert!(Wfa::from_rows(&["a", "a"], &[1.0], &[1.0], &[&[&[2.0]], &[&[3.0]]]).is_err());
        assert!(Wfa::from_rows(&["a"], &[1.0, 0.0], &[1.0, 0.0], &[&[&[2.0]]]).is_err());
        assert!(Wfa::from_rows(&[], &[1.0], &[1.0], &[]).is_err());
    }

    #[test]
    fn evaluation_matches_naive_propagation() {
        let a = asym();
        for w in words_up_to(2, 4) {
            assert_abs_diff_eq!(a.evaluate_indices(&w), naive_eval(&a, &w), epsilon = 1e-12);
        }
    }

    #[test]
    fn reverse_reads_backwards() {
        let a = asym();
        let r = a.reverse();
        assert_abs_diff_eq!(
            r.evaluate(&["a", "b"]).unwrap(),
            naive_eval(&a, &[1, 0]),
            epsilon = 1e-14
        );
        assert_eq!(r.reverse(), a);
        let f = fig1(1.5);
        assert_eq!(
            f.reverse().evaluate(&["a", "a", "a"]).unwrap(),
            f.evaluate(&["a", "a", "a"]).unwrap()
        );
    }

    #[test]
    fn difference_of_fig1_pair() {
        let d = fig1(1.0).difference(&fig1(1.5)).unwrap();
        assert_abs_diff_eq!(d.evaluate(&["a", "a"]).unwrap(), -1.25, epsilon = 1e-15);
        assert_eq!(d.dim(), 2);
    }

    #[test]
    fn difference_alphabet_mismatch_lists_symbols() {
        let b = Wfa::from_rows(&["a", "c"], &[1.0], &[1.0], &[&[&[2.0]], &[&[3.0]]]).unwrap();
        match asym().difference(&b) {
            Err(Error::AlphabetMismatch {
                only_first,
                only_second,
            }) => {
                assert_eq!(only_first, vec!["b".to_string()]);
                assert_eq!(only_second, vec!["c".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn initial_and_final_replacement() {
        let a = asym();
        assert_eq!(a.with_initial(a.alpha()).unwrap(), a);
        let z = a.with_initial(&Vector::zeros(2)).unwrap();
        for w in words_up_to(2, 3) {
            assert_eq!(z.evaluate_indices(&w), 0.0);
        }
        let w = Vector::from_column_slice(&[2.0, -3.0]);
        let af = a.with_final(&w).unwrap();
        for x in words_up_to(2, 3) {
            let state = a.run_from(a.alpha(), &x);
            assert_abs_diff_eq!(af.evaluate_indices(&x), w.dot(&state), epsilon = 1e-14);
        }
        assert!(a.with_final(&Vector::zeros(3)).is_err());
    }

    #[test]
    fn parse_words() {
        let a = asym();
        assert_eq!(a.parse_word("abba").unwrap(), vec![0, 1, 1, 0]);
        assert_eq!(a.parse_word("a b").unwrap(), vec![0, 1]);
        assert_eq!(a.parse_word("ε").unwrap(), Vec::<usize>::new());
        assert!(a.parse_word("abc").is_err());
    }

    #[test]
    fn json_round_trip_and_diagnostics() {
        let a = asym();
        let back = Wfa::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
        let bad =
            r#"{"alphabet":["a"],"dim":2,"alpha":[1,0],"beta":[1],"trans":{"a":[[1,0],[0,1]]}}"#;
        let err = Wfa::from_json(bad).unwrap_err().to_string();
        assert!(err.contains("beta"), "{err}");
    }

    #[test]
    fn words_enumeration_counts() {
        assert_eq!(words_up_to(2, 3).len(), 1 + 2 + 4 + 8);
        assert_eq!(words_up_to(3, 0), vec![Vec::<usize>::new()]);
    }
}
