//! Versioned CSV output. Columns are never reordered within a schema version;
//! new columns only ever go before `seconds`, which stays last.

use std::fmt::Write as _;

use crate::config::{ExperimentConfig, CONFIG_BEGIN, CONFIG_END};

pub const SCHEMA: &str = "brickwork-sweep-v1";

pub const COLUMNS: [&str; 34] = [
    "mode",
    "setup",
    "channel",
    "placement",
    "direction",
    "N",
    "k",
    "t",
    "r",
    "alpha",
    "gamma",
    "h2",
    "h_alpha",
    "tau",
    "log_purity_b",
    "log_purity_rb",
    "ic",
    "ic_es",
    "chi",
    "fidelity",
    "f2",
    "regime",
    "purity_b_mean",
    "purity_b_err",
    "purity_rb_mean",
    "purity_rb_err",
    "fidelity_err",
    "n_samples",
    "frame_log",
    "delta_f",
    "delta_f_printed",
    "delta_ic",
    "delta_chi",
    "seconds",
];

/// One sweep point. Unset fields are written as empty cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Row {
    pub mode: String,
    pub setup: String,
    pub channel: String,
    pub placement: String,
    pub direction: String,
    pub n: usize,
    pub k: Option<usize>,
    pub t: Option<usize>,
    pub r: Option<f64>,
    pub alpha: Option<usize>,
    pub gamma: Option<f64>,
    pub h2: Option<f64>,
    pub h_alpha: Option<f64>,
    pub tau: Option<f64>,
    pub log_purity_b: Option<f64>,
    pub log_purity_rb: Option<f64>,
    pub ic: Option<f64>,
    pub ic_es: Option<f64>,
    pub chi: Option<f64>,
    pub fidelity: Option<f64>,
    pub f2: Option<f64>,
    pub regime: Option<String>,
    pub purity_b_mean: Option<f64>,
    pub purity_b_err: Option<f64>,
    pub purity_rb_mean: Option<f64>,
    pub purity_rb_err: Option<f64>,
    pub fidelity_err: Option<f64>,
    pub n_samples: Option<usize>,
    pub frame_log: Option<f64>,
    pub delta_f: Option<f64>,
    pub delta_f_printed: Option<f64>,
    pub delta_ic: Option<f64>,
    pub delta_chi: Option<f64>,
    pub seconds: f64,
}

/// Plain decimal, switching to scientific notation below `1e-3` in magnitude.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        // Also folds -0 into 0.
        "0".to_string()
    } else if x.abs() < 1e-3 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn int(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl Row {
    pub fn cells(&self) -> Vec<String> {
        vec![
            quote(&self.mode),
            quote(&self.setup),
            quote(&self.channel),
            quote(&self.placement),
            quote(&self.direction),
            self.n.to_string(),
            int(self.k),
            int(self.t),
            num(self.r),
            int(self.alpha),
            num(self.gamma),
            num(self.h2),
            num(self.h_alpha),
            num(self.tau),
            num(self.log_purity_b),
            num(self.log_purity_rb),
            num(self.ic),
            num(self.ic_es),
            num(self.chi),
            num(self.fidelity),
            num(self.f2),
            self.regime.clone().unwrap_or_default(),
            num(self.purity_b_mean),
            num(self.purity_b_err),
            num(self.purity_rb_mean),
            num(self.purity_rb_err),
            num(self.fidelity_err),
            int(self.n_samples),
            num(self.frame_log),
            num(self.delta_f),
            num(self.delta_f_printed),
            num(self.delta_ic),
            num(self.delta_chi),
            format!("{:.3}", self.seconds),
        ]
    }

    /// Every numeric cell that is set must be finite.
    pub fn all_finite(&self) -> bool {
        [
            self.r,
            self.gamma,
            self.h2,
            self.h_alpha,
            self.tau,
            self.log_purity_b,
            self.log_purity_rb,
            self.ic,
            self.ic_es,
            self.chi,
            self.fidelity,
            self.f2,
            self.purity_b_mean,
            self.purity_b_err,
            self.purity_rb_mean,
            self.purity_rb_err,
            self.fidelity_err,
            self.frame_log,
            self.delta_f,
            self.delta_f_printed,
            self.delta_ic,
            self.delta_chi,
        ]
        .iter()
        .flatten()
        .all(|x| x.is_finite())
    }
}

/// Full CSV text: header comments with the embedded config, the column line,
/// the rows, then any trailing comment lines (fits, failures).
pub fn render(config: &ExperimentConfig, rows: &[Row], trailer: &[String]) -> String {
    let mut out = String::new();
    writeln!(out, "# {SCHEMA}").unwrap();
    writeln!(out, "# brickwork {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(out, "{CONFIG_BEGIN}").unwrap();
    for line in config.to_toml().lines() {
        if line.is_empty() {
            writeln!(out, "#").unwrap();
        } else {
            writeln!(out, "# {line}").unwrap();
        }
    }
    writeln!(out, "{CONFIG_END}").unwrap();
    writeln!(out, "{}", COLUMNS.join(",")).unwrap();
    for row in rows {
        writeln!(out, "{}", row.cells().join(",")).unwrap();
    }
    for line in trailer {
        writeln!(out, "# {line}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(0.001), "0.001");
        assert_eq!(fmt_num(0.00025), "2.5e-4");
        assert_eq!(fmt_num(-3.5e-7), "-3.5e-7");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(12.0), "12");
    }

    #[test]
    fn cells_match_columns() {
        let row = Row { channel: "pauli(p=[0.7,0.1,0.1,0.1])".into(), ..Default::default() };
        let cells = row.cells();
        assert_eq!(cells.len(), COLUMNS.len());
        assert_eq!(cells[2], "\"pauli(p=[0.7,0.1,0.1,0.1])\"");
        assert_eq!(COLUMNS.last(), Some(&"seconds"));
    }
}
