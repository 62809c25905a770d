//! Number formatting and CSV output shared by the experiment runners.

use std::fmt::Write as _;

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { "-" } else { "+" };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

/// Like [`fmt_num`], but rounded outward: the printed value is `<= x` when
/// `round_up` is false and `>= x` when it is true. Used for interval ends.
pub fn fmt_bound(x: f64, round_up: bool) -> String {
    let text = fmt_num(x);
    if !x.is_finite() || x == 0.0 {
        return text;
    }
    let shown: f64 = text.parse().expect("formatted number parses");
    let wrong_side = if round_up { shown < x } else { shown > x };
    if !wrong_side {
        return text;
    }
    // move by one unit in the twelfth significant digit
    let unit = 10f64.powi(x.abs().log10().floor() as i32 - 11);
    fmt_num(if round_up { shown + unit } else { shown - unit })
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A CSV table: a `# seed=K` comment line, a header row, then data rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub seed: u64,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# seed={}", self.seed).unwrap();
        writeln!(out, "{}", self.header.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_num(x)).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }
}
