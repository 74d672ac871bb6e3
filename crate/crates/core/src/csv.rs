//! Minimal CSV helpers shared by the exporters.
//!
//! Floats are written with 17 significant digits so that a written file
//! determines the bit pattern of every value it contains.

use crate::error::{Error, Result};

/// Format a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Join formatted floats with commas.
pub fn join_f64<I: IntoIterator<Item = f64>>(xs: I) -> String {
    xs.into_iter().map(fmt_f64).collect::<Vec<_>>().join(",")
}

/// Parse one comma-separated row of floats.
pub fn parse_row(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|field| {
            field.trim().parse::<f64>().map_err(|e| {
                Error::Parse(format!("line {line_no}: cannot parse {field:?}: {e}"))
            })
        })
        .collect()
}

/// Column names `prefix1..prefixd`.
pub fn indexed_columns(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|k| format!("{prefix}{k}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        let x = 0.1 + 0.2;
        let s = fmt_f64(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert_eq!(s, "3.0000000000000004e-1");
        assert_eq!(parse_row("1.5, -2e-3", 1).unwrap(), vec![1.5, -2e-3]);
        assert!(parse_row("1.5,x", 3).is_err());
        assert_eq!(indexed_columns("r", 3), vec!["r1", "r2", "r3"]);
    }
}
