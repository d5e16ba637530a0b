//! One computed bound, as printed in tables and JSON lines.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rdlp::instances::format_value;
use rdlp::lp::{parse_rational, Number, SolveStats};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RecordValue {
    /// Reduced, denominator positive.
    Rational { numerator: String, denominator: String },
    Float { value: f64 },
}

impl RecordValue {
    pub fn from_number(n: &Number) -> Self {
        match n {
            Number::Rational(r) => {
                RecordValue::Rational { numerator: r.numer().to_string(), denominator: r.denom().to_string() }
            }
            Number::Float(v) => RecordValue::Float { value: *v },
        }
    }

    pub fn to_number(&self) -> Option<Number> {
        match self {
            RecordValue::Rational { numerator, denominator } => {
                parse_rational(&format!("{numerator}/{denominator}")).map(Number::Rational)
            }
            RecordValue::Float { value } => Some(Number::Float(*value)),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            RecordValue::Rational { .. } => true,
            RecordValue::Float { value } => value.is_finite(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordStats {
    /// Linear programs solved for this value.
    pub solves: usize,
    /// Largest program, in standard-form rows and columns.
    pub rows: usize,
    pub columns: usize,
    pub pivots: usize,
    pub rational_fallback: bool,
    /// Message orderings or decoder permutations examined.
    pub orderings: usize,
}

impl RecordStats {
    pub fn absorb(&mut self, s: &SolveStats) {
        self.solves += 1;
        self.rows = self.rows.max(s.rows);
        self.columns = self.columns.max(s.columns);
        self.pivots += s.pivots;
        self.rational_fallback |= s.rational_fallback;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub bound: String,
    pub value: RecordValue,
    pub mode: String,
    pub eps: f64,
    /// SHA-256 of the program dump (or auxiliary description) behind the value.
    pub fingerprint: String,
    /// Some rate came from the grid search, which can overshoot.
    pub heuristic: bool,
    pub stats: RecordStats,
}

pub fn fingerprint(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        write!(out, "{b:02x}").expect("writing to a string");
    }
    out
}

impl ResultRecord {
    pub fn display_value(&self) -> String {
        self.value.to_number().map_or_else(|| "?".into(), |n| format_value(&n))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

/// Aligned table of records.
pub fn table(records: &[ResultRecord]) -> String {
    let rows: Vec<[String; 6]> = records
        .iter()
        .map(|r| {
            let bound = if r.heuristic { format!("{}*", r.bound) } else { r.bound.clone() };
            [
                bound,
                r.display_value(),
                r.mode.clone(),
                format!("{}", r.eps),
                r.stats.pivots.to_string(),
                r.fingerprint.chars().take(12).collect(),
            ]
        })
        .collect();
    let head = ["bound", "value", "mode", "eps", "pivots", "fingerprint"].map(String::from);
    let mut width = [0usize; 6];
    for row in std::iter::once(&head).chain(&rows) {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for row in std::iter::once(&head).chain(&rows) {
        let cells: Vec<String> = row.iter().zip(width).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    if records.iter().any(|r| r.heuristic) {
        out.push_str("* grid-search rates; not a certified bound\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(value: RecordValue) -> ResultRecord {
        ResultRecord {
            bound: "achievable".into(),
            value,
            mode: "rational".into(),
            eps: 1e-5,
            fingerprint: fingerprint("x"),
            heuristic: false,
            stats: RecordStats { solves: 1, rows: 3, columns: 4, pivots: 2, rational_fallback: false, orderings: 1 },
        }
    }

    #[test]
    fn rational_round_trip() {
        let n = Number::Rational(parse_rational("-10/4").unwrap());
        let r = sample(RecordValue::from_number(&n));
        assert_eq!(r.value, RecordValue::Rational { numerator: "-5".into(), denominator: "2".into() });
        let back: ResultRecord = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.value.to_number().unwrap(), n);
    }

    #[test]
    fn float_round_trip_is_exact() {
        for v in [0.1 + 0.2, 1.0 / 3.0, 2.5, 1e-300, 5.0 / 4.0 * 10f64.log2()] {
            let r = sample(RecordValue::Float { value: v });
            let back: ResultRecord = serde_json::from_str(&r.to_json()).unwrap();
            assert_eq!(back, r);
        }
    }

    #[test]
    fn fingerprint_is_sha256() {
        assert_eq!(fingerprint("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn table_aligns() {
        let t = table(&[sample(RecordValue::Float { value: 2.5 })]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("bound"));
        assert!(lines[1].starts_with("achievable  2.5"));
    }
}
