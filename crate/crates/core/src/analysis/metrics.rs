//! Error and efficiency metrics of a single run.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column order of [`RunReport::csv_row`].
pub const CSV_COLUMNS: [&str; 15] = [
    "instance",
    "method",
    "heuristic",
    "lambda",
    "psi",
    "m",
    "dim",
    "U_star_s",
    "U_s",
    "E_d",
    "E_star",
    "E_star_N",
    "P",
    "wall_time",
    "config_hash",
];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: String,
    pub method: String,
    pub heuristic: String,
    pub lambda: f64,
    pub psi: Option<f64>,
    pub m: usize,
    pub dim: usize,
    pub u_star_s: f64,
    pub u_s: f64,
    /// `|U(s) - u(s)| / u(s)`, when the exact value is known.
    pub e_d: Option<f64>,
    /// `|U*(s) - u(s)| / u(s)`, when the exact value is known.
    pub e_star: Option<f64>,
    /// `(U*(s) - U(s)) / U(s)`.
    pub e_star_n: f64,
    /// `(accepted + considered) / m^n`.
    pub p: f64,
    pub accepted: usize,
    pub considered: usize,
    /// Seconds.
    pub wall_time: f64,
    pub config_hash: String,
}

/// Fills the relative errors and the computed fraction.
pub fn compute_metrics(
    u_star_s: f64,
    u_s: f64,
    u_exact_s: Option<f64>,
    accepted: usize,
    considered: usize,
    m: usize,
    dim: usize,
) -> Result<RunReport> {
    if !(u_s > 0.0) {
        return Err(Error::NonPositiveReference(u_s));
    }
    let exact = match u_exact_s {
        Some(u) if !(u > 0.0) => return Err(Error::NonPositiveReference(u)),
        other => other,
    };
    Ok(RunReport {
        m,
        dim,
        u_star_s,
        u_s,
        e_d: exact.map(|u| (u_s - u).abs() / u),
        e_star: exact.map(|u| (u_star_s - u).abs() / u),
        e_star_n: (u_star_s - u_s) / u_s,
        p: (accepted + considered) as f64 / (m as f64).powi(dim as i32),
        accepted,
        considered,
        ..Default::default()
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl RunReport {
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.instance.clone(),
            self.method.clone(),
            self.heuristic.clone(),
            self.lambda.to_string(),
            self.psi.map(|p| p.to_string()).unwrap_or_else(|| "inf".into()),
            self.m.to_string(),
            self.dim.to_string(),
            format!("{:.17e}", self.u_star_s),
            format!("{:.17e}", self.u_s),
            opt(self.e_d),
            opt(self.e_star),
            format!("{:e}", self.e_star_n),
            format!("{:.6}", self.p),
            format!("{:.6e}", self.wall_time),
            self.config_hash.clone(),
        ]
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Writes a header plus one row per report.
pub fn write_reports<W: Write>(out: W, reports: &[RunReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in reports {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_values() {
        let r = compute_metrics(1.0, 1.0, None, 10, 5, 10, 2).unwrap();
        assert_eq!(r.e_star_n, 0.0);
        assert_eq!(r.e_d, None);
        let r = compute_metrics(1.127, 1.0, None, 1, 1, 10, 2).unwrap();
        assert!((r.e_star_n - 0.127).abs() < 1e-12);
        let r = compute_metrics(1.0, 1.0, Some(0.5), 60, 40, 10, 2).unwrap();
        assert_eq!(r.p, 1.0);
        assert_eq!(r.e_d, Some(1.0));
        assert!(compute_metrics(1.0, 0.0, None, 1, 1, 10, 2).is_err());
    }

    #[test]
    fn serialisation() {
        let r = compute_metrics(1.5, 1.25, Some(1.2), 3, 4, 5, 3).unwrap();
        assert_eq!(r.csv_row().len(), CSV_COLUMNS.len());
        let json = r.to_json().unwrap();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        let mut buf = Vec::new();
        write_reports(&mut buf, &[r.clone(), r]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
