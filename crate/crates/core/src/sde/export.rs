//! CSV export of recorded paths and batch summaries.

use std::io::Write;

use crate::error::Result;

/// One recorded trajectory. `states`, `xi_plus` and `xi_minus` are stored
/// row-major with one row per time index.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub path_id: usize,
    pub dim: usize,
    pub states: Vec<f64>,
    pub xi_plus: Vec<f64>,
    pub xi_minus: Vec<f64>,
}

impl PathRecord {
    pub fn new(path_id: usize, dim: usize, steps: usize) -> Self {
        let cap = (steps + 1) * dim;
        Self {
            path_id,
            dim,
            states: Vec::with_capacity(cap),
            xi_plus: Vec::with_capacity(cap),
            xi_minus: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, states: &[f64], xi_plus: &[f64], xi_minus: &[f64]) {
        self.states.extend_from_slice(states);
        self.xi_plus.extend_from_slice(xi_plus);
        self.xi_minus.extend_from_slice(xi_minus);
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub stat: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

impl SummaryRow {
    pub fn new(stat: impl Into<String>, value: f64, stderr: Option<f64>) -> Self {
        Self {
            stat: stat.into(),
            value,
            stderr,
        }
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// `path_id,t,state_1..,xi_plus_1..,xi_minus_1..` with one row per time index.
pub fn write_paths_csv<W: Write>(paths: &[PathRecord], times: &[f64], out: W) -> Result<()> {
    let mut w = writer(out);
    let dim = paths.first().map_or(1, |p| p.dim);
    let mut header = vec!["path_id".to_string(), "t".to_string()];
    for prefix in ["state", "xi_plus", "xi_minus"] {
        header.extend((1..=dim).map(|i| format!("{prefix}_{i}")));
    }
    w.write_record(&header)?;
    for p in paths {
        for (k, t) in times.iter().enumerate().take(p.len()) {
            let mut row = vec![p.path_id.to_string(), t.to_string()];
            for data in [&p.states, &p.xi_plus, &p.xi_minus] {
                row.extend(data[k * p.dim..(k + 1) * p.dim].iter().map(f64::to_string));
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `stat,value,stderr`; a missing standard error is written as `NA`.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["stat", "value", "stderr"])?;
    for r in rows {
        let se = r.stderr.map_or_else(|| "NA".to_string(), |s| s.to_string());
        w.write_record([r.stat.clone(), r.value.to_string(), se])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_uses_na() {
        let mut buf = Vec::new();
        write_summary_csv(&[SummaryRow::new("mean", 0.5, None)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "stat,value,stderr\nmean,0.5,NA\n"
        );
    }

    #[test]
    fn path_layout() {
        let mut p = PathRecord::new(3, 2, 1);
        p.push(&[1.0, 2.0], &[0.0, 0.0], &[0.0, 0.5]);
        p.push(&[1.5, 2.0], &[0.0, 0.0], &[0.0, 0.5]);
        let mut buf = Vec::new();
        write_paths_csv(&[p], &[0.0, 0.1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "path_id,t,state_1,state_2,xi_plus_1,xi_plus_2,xi_minus_1,xi_minus_2"
        );
        assert_eq!(lines[2], "3,0.1,1.5,2,0,0,0,0.5");
    }
}
