//! Long-format plot data from a result CSV.
//!
//! Every estimate becomes one row `(series, parameter, value, estimate,
//! ci_low, ci_high)`. The layout of the input is recognised from its
//! header, so the CSV alone is enough.

use crate::table::Table;

pub const PLOT_HEADER: [&str; 6] = ["series", "parameter", "value", "estimate", "ci_low", "ci_high"];

#[derive(Debug, PartialEq, Eq)]
pub struct UnknownLayout(pub Vec<String>);

impl std::fmt::Display for UnknownLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "unrecognised result columns: {}", self.0.join(","))
    }
}

impl std::error::Error for UnknownLayout {}

struct Rows<'a> {
    t: &'a Table,
    out: Table,
}

impl Rows<'_> {
    fn get<'r>(&self, row: &'r [String], col: &str) -> &'r str {
        self.t.column(col).map_or("", |i| row[i].as_str())
    }

    /// Adds a row for `est` unless the cell is empty.
    fn emit(&mut self, row: &[String], series: String, param: &str, est: &str, ci: Option<(&str, &str)>) {
        let e = self.get(row, est);
        if e.is_empty() {
            return;
        }
        let (lo, hi) = ci.map_or((String::new(), String::new()), |(l, h)| (self.get(row, l).into(), self.get(row, h).into()));
        let r = vec![series, param.into(), self.get(row, param).into(), e.into(), lo, hi];
        self.out.push(r);
    }
}

pub fn plot_data(t: &Table) -> Result<Table, UnknownLayout> {
    let mut rows = Rows { t, out: Table::new(&PLOT_HEADER) };
    if t.header.is_empty() {
        return Ok(rows.out);
    }
    let has = |c: &str| t.column(c).is_some();
    let ci = Some(("ci_low", "ci_high"));
    for row in &t.rows {
        if has("alive_fraction") {
            let series = format!("alive_fraction[{}]", rows.get(row, "mode"));
            rows.emit(row, series, "N", "alive_fraction", ci);
        } else if has("joint_frac") {
            if rows.get(row, "mode") == "adapted" {
                let g = rows.get(row, "gamma").to_string();
                rows.emit(row, format!("dagger_marginal[gamma={g}]"), "N", "dagger_marginal", ci);
                rows.emit(row, format!("noninv_alive_frac[gamma={g}]"), "N", "noninv_alive_frac", None);
            } else {
                rows.emit(row, "joint_frac".into(), "horizon", "joint_frac", ci);
                rows.emit(row, "inv_alive_frac".into(), "horizon", "inv_alive_frac", None);
                rows.emit(row, "noninv_alive_frac".into(), "horizon", "noninv_alive_frac", None);
            }
        } else if has("oracle_value") {
            let d = rows.get(row, "depth").to_string();
            rows.emit(row, format!("alive_frac[depth={d}]"), "p", "alive_frac", ci);
            rows.emit(row, format!("oracle_value[depth={d}]"), "p", "oracle_value", None);
        } else if has("m_gamma") {
            rows.emit(row, "alive_frac".into(), "gamma", "alive_frac", ci);
        } else if has("kesten_bound") {
            for s in ["return_prob", "root", "kesten_bound"] {
                rows.emit(row, s.into(), "n", s, None);
            }
        } else if has("z_pooled") {
            let b = rows.get(row, "bias").to_string();
            rows.emit(row, format!("outgoing[{b}]"), "function", "outgoing", None);
            rows.emit(row, format!("incoming[{b}]"), "function", "incoming", None);
        } else {
            return Err(UnknownLayout(t.header.clone()));
        }
    }
    if t.rows.is_empty() && !["alive_fraction", "joint_frac", "oracle_value", "m_gamma", "kesten_bound", "z_pooled"].iter().any(|c| has(c)) {
        return Err(UnknownLayout(t.header.clone()));
    }
    Ok(rows.out)
}
