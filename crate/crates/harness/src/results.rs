//! Result rows and byte-stable CSV output.
//!
//! Every experiment emits rows with a fixed header
//! `experiment,<params...>,metric,value,trials,seed`. Numbers are written
//! with 9 significant digits in scientific form, which round-trips the same
//! bytes on every platform, so identical config + seed means identical
//! output files.

use std::fmt::Write as _;

use anyhow::{bail, Result};

/// Format a float with 9 significant digits, `.` decimal separator.
pub fn format_value(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.8e}")
}

/// One metric at one parameter point.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub experiment: String,
    /// Ordered parameter tuple; every row of a table carries the same names.
    pub params: Vec<(&'static str, String)>,
    pub metric: &'static str,
    pub value: f64,
    /// Trials (or bits, for BER rows) behind this value.
    pub trials: u64,
    pub seed: u64,
}

impl ResultRow {
    pub fn new(
        experiment: &str,
        params: &[(&'static str, f64)],
        metric: &'static str,
        value: f64,
        trials: u64,
        seed: u64,
    ) -> Self {
        Self {
            experiment: experiment.to_string(),
            params: params
                .iter()
                .map(|(name, v)| (*name, format_value(*v)))
                .collect(),
            metric,
            value,
            trials,
            seed,
        }
    }
}

/// An ordered set of rows sharing one parameter schema.
#[derive(Debug, Clone, Default)]
pub struct ResultTable {
    rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: ResultRow) -> Result<()> {
        if let Some(first) = self.rows.first() {
            let names = |r: &ResultRow| r.params.iter().map(|(n, _)| *n).collect::<Vec<_>>();
            if names(first) != names(&row) {
                bail!(
                    "result row schema mismatch: {:?} vs {:?}",
                    names(first),
                    names(&row)
                );
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[ResultRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Render the table as CSV with `\n` line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("experiment");
        if let Some(first) = self.rows.first() {
            for (name, _) in &first.params {
                let _ = write!(out, ",{name}");
            }
        }
        out.push_str(",metric,value,trials,seed\n");
        for row in &self.rows {
            out.push_str(&row.experiment);
            for (_, v) in &row.params {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(
                out,
                ",{},{},{},{}",
                row.metric,
                format_value(row.value),
                row.trials,
                row.seed
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_is_nine_significant_digits() {
        assert_eq!(format_value(0.0), "0");
        assert_eq!(format_value(1.0), "1.00000000e0");
        assert_eq!(format_value(299_792_458.0), "2.99792458e8");
        assert_eq!(format_value(1e-7), "1.00000000e-7");
    }

    #[test]
    fn csv_has_fixed_header_and_rows() {
        let mut t = ResultTable::new();
        t.push(ResultRow::new(
            "ber-sweep",
            &[("snr_db", 8.0), ("t_b", 1e-7)],
            "ber",
            0.0,
            10032,
            1,
        ))
        .unwrap();
        let csv = t.to_csv();
        assert_eq!(
            csv,
            "experiment,snr_db,t_b,metric,value,trials,seed\n\
             ber-sweep,8.00000000e0,1.00000000e-7,ber,0,10032,1\n"
        );
    }

    #[test]
    fn schema_mismatch_rejected() {
        let mut t = ResultTable::new();
        t.push(ResultRow::new("x", &[("a", 1.0)], "m", 0.0, 1, 1))
            .unwrap();
        assert!(t
            .push(ResultRow::new("x", &[("b", 1.0)], "m", 0.0, 1, 1))
            .is_err());
    }
}
