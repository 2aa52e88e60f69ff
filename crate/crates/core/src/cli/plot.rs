//! SVG rendering of sweep and conservation CSVs.

use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::write_atomic;
use crate::error::{Error, Result};
use crate::fit::fit_loglog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlotKind {
    /// First column against last, log-log, with the fitted slope.
    LogLog,
    /// A single row drawn as one point.
    Point,
    /// `mass_drift` and `l2_drift` against `t`.
    Drift,
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing column {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    fn first_last(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.headers.len() < 2 {
            return Err(Error::Format("need at least two columns".into()));
        }
        let last = self.headers.len() - 1;
        Ok((self.rows.iter().map(|r| r[0]).collect(), self.rows.iter().map(|r| r[last]).collect()))
    }
}

fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers: Vec<String> =
        rdr.headers().map_err(|e| Error::Format(e.to_string()))?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let row = rec
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| Error::Format(format!("non-numeric cell {v:?}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format(format!("{} has no data rows", path.display())));
    }
    Ok(Table { headers, rows })
}

fn span(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn draw_err<E: std::fmt::Debug>(e: E) -> Error {
    Error::Format(format!("plot rendering failed: {e:?}"))
}

/// Renders `csv_path` as an SVG next to it (same stem, `.svg`).
pub fn emit_plot(csv_path: &Path, kind: PlotKind) -> Result<PathBuf> {
    let table = read_table(csv_path)?;
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (640, 480)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        match kind {
            PlotKind::LogLog => {
                let (x, y) = table.first_last()?;
                let fit = fit_loglog(&x, &y)?;
                let (x0, x1) = span(&x);
                let (y0, y1) = span(&y);
                let title = format!("{} vs {}: slope {:.4}", table.headers.last().unwrap(), table.headers[0], fit.slope);
                let mut chart = ChartBuilder::on(&root)
                    .caption(title, ("sans-serif", 20))
                    .margin(15)
                    .x_label_area_size(40)
                    .y_label_area_size(60)
                    .build_cartesian_2d((x0 * 0.9..x1 * 1.1).log_scale(), (y0 * 0.8..y1 * 1.25).log_scale())
                    .map_err(draw_err)?;
                chart.configure_mesh().x_desc(table.headers[0].as_str()).draw().map_err(draw_err)?;
                chart
                    .draw_series(x.iter().zip(&y).map(|(&a, &b)| Circle::new((a, b), 4, BLUE.filled())))
                    .map_err(draw_err)?;
                let line = [x0, x1].map(|a| (a, (fit.intercept + fit.slope * a.ln()).exp()));
                chart.draw_series(LineSeries::new(line, &RED)).map_err(draw_err)?;
            }
            PlotKind::Point => {
                if table.rows.len() != 1 {
                    return Err(Error::Format(format!("point plot needs one row, got {}", table.rows.len())));
                }
                let (x, y) = table.first_last()?;
                let (x0, x1) = span(&x);
                let (y0, y1) = span(&y);
                let title = format!("{} = {:.6} at {} = {}", table.headers.last().unwrap(), y[0], table.headers[0], x[0]);
                let mut chart = ChartBuilder::on(&root)
                    .caption(title, ("sans-serif", 20))
                    .margin(15)
                    .x_label_area_size(40)
                    .y_label_area_size(60)
                    .build_cartesian_2d(x0..x1, y0..y1)
                    .map_err(draw_err)?;
                chart.configure_mesh().draw().map_err(draw_err)?;
                chart.draw_series([Circle::new((x[0], y[0]), 5, BLUE.filled())]).map_err(draw_err)?;
            }
            PlotKind::Drift => {
                let t = table.column("t")?;
                let mass = table.column("mass_drift")?;
                let l2 = table.column("l2_drift")?;
                let (t0, t1) = span(&t);
                let all: Vec<f64> = mass.iter().chain(&l2).copied().collect();
                let (y0, y1) = span(&all);
                let mut chart = ChartBuilder::on(&root)
                    .caption("conservation drift", ("sans-serif", 20))
                    .margin(15)
                    .x_label_area_size(40)
                    .y_label_area_size(80)
                    .build_cartesian_2d(t0..t1, y0..y1)
                    .map_err(draw_err)?;
                chart.configure_mesh().x_desc("t").draw().map_err(draw_err)?;
                chart
                    .draw_series(LineSeries::new(t.iter().copied().zip(mass.iter().copied()), &BLUE))
                    .map_err(draw_err)?
                    .label("mass drift")
                    .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], BLUE));
                chart
                    .draw_series(LineSeries::new(t.iter().copied().zip(l2.iter().copied()), &RED))
                    .map_err(draw_err)?
                    .label("relative L2 drift")
                    .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], RED));
                chart.configure_series_labels().border_style(BLACK).draw().map_err(draw_err)?;
            }
        }
        root.present().map_err(draw_err)?;
    }
    let out = csv_path.with_extension("svg");
    write_atomic(&out, svg.as_bytes())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn loglog_annotates_slope() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "sweep.csv", "N,ratio\n64,8\n128,16\n256,32\n");
        let svg = fs::read_to_string(emit_plot(&p, PlotKind::LogLog).unwrap()).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("slope 1.0000"));
    }

    #[test]
    fn point_and_drift() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "one.csv", "N,ratio\n64,0.5\n");
        assert!(emit_plot(&p, PlotKind::Point).unwrap().exists());
        assert!(emit_plot(&p, PlotKind::Drift).is_err());
        let c = write(d.path(), "cons.csv", "t,mass,l2,mass_drift,l2_drift\n0,1,1,0,0\n0.5,1,1,1e-15,2e-12\n1,1,1,0,3e-12\n");
        let svg = fs::read_to_string(emit_plot(&c, PlotKind::Drift).unwrap()).unwrap();
        assert!(svg.contains("mass drift"));
    }

    #[test]
    fn malformed_csv() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "bad.csv", "N,ratio\n64,abc\n");
        assert!(matches!(emit_plot(&p, PlotKind::LogLog), Err(Error::Format(_))));
        let e = write(d.path(), "empty.csv", "N,ratio\n");
        assert!(emit_plot(&e, PlotKind::LogLog).is_err());
        assert!(emit_plot(&d.path().join("missing.csv"), PlotKind::LogLog).is_err());
    }
}
