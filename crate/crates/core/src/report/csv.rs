//! Fixed-header CSV tables with locale-free float formatting.

use crate::error::Error;
use crate::growth::{ThresholdSample, TrajectoryState};
use crate::leaves::{ContourPoint, PhaseDiagram};
use crate::spectral::ScanRecord;

/// 17 significant digits, `.` radix, exponent form.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Empty for `None` and for non-finite values.
pub fn opt_finite(x: f64) -> String {
    if x.is_finite() {
        num(x)
    } else {
        String::new()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>, I: IntoIterator<Item = S>>(header: I) -> Table {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

pub const SPECTRA_HEADER: [&str; 11] =
    ["delta", "epsilon", "L", "q", "k", "mu", "mu_over_L", "gamma", "c_norm", "c_hs", "status"];

/// One row per retained eigenvalue; a failed point gives a single row
/// carrying its error code.
pub fn spectra_table(records: &[ScanRecord]) -> Table {
    let mut t = Table::new(SPECTRA_HEADER);
    for r in records {
        match &r.outcome {
            Ok(b) => {
                for (k, &mu) in b.mu.iter().enumerate() {
                    t.push(vec![
                        opt_finite(r.delta),
                        num(b.epsilon),
                        num(b.l),
                        r.q.to_string(),
                        (k + 1).to_string(),
                        num(mu),
                        num(mu / b.l),
                        num(b.gamma),
                        num(b.c_norm),
                        num(b.c_hs),
                        "ok".into(),
                    ]);
                }
            }
            Err(e) => {
                let mut row = vec![String::new(); SPECTRA_HEADER.len()];
                row[0] = opt_finite(r.delta);
                row[3] = r.q.to_string();
                row[10] = e.code().into();
                t.push(row);
            }
        }
    }
    t
}

/// `T, r, a_n…, t_0, t_k…, rho_star, univalence_margin`.
pub fn trajectory_table(exponents: &[u32], states: &[TrajectoryState], samples: &[ThresholdSample]) -> Table {
    let mut header: Vec<String> = vec!["T".into(), "r".into()];
    header.extend(exponents.iter().map(|s| format!("a_{s}")));
    header.push("t_0".into());
    header.extend(exponents.iter().map(|s| format!("t_{s}")));
    header.push("rho_star".into());
    header.push("univalence_margin".into());
    let mut t = Table::new(header);
    for (i, st) in states.iter().enumerate() {
        let mut row = vec![num(st.t), num(st.r)];
        row.extend(st.a.iter().map(|z| num(z.re)));
        row.push(num(st.moments.t0));
        row.extend(exponents.iter().map(|&k| opt(st.moments.get(k).map(|v| v.re))));
        row.push(opt(samples.get(i).and_then(|s| s.rho_star)));
        row.push(num(st.univalence_margin));
        t.push(row);
    }
    t
}

pub const PHASE_HEADER: [&str; 7] = ["b", "c_or_gamma", "rho_char", "x_plus_abs", "x_minus_abs", "conjugate_pair", "error_code"];

pub fn phase_table(d: &PhaseDiagram) -> Table {
    let mut t = Table::new(PHASE_HEADER);
    for c in &d.cells {
        t.push(vec![
            num(c.b),
            num(c.y),
            opt(c.rho_char),
            opt(c.x_plus_abs),
            opt(c.x_minus_abs),
            c.conjugate_pair.map(|b| b.to_string()).unwrap_or_default(),
            c.error_code.unwrap_or("").into(),
        ]);
    }
    t
}

pub fn contour_table(points: &[ContourPoint]) -> Table {
    let mut t = Table::new(["b", "c_or_gamma"]);
    for p in points {
        t.push(vec![num(p.b), opt(p.y)]);
    }
    t
}

/// Status string for a per-point result.
pub fn status<T>(r: &Result<T, Error>) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => e.code().into(),
    }
}
