use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::beating::BeatingReport;
use super::{ExperimentError, Result};

fn io_err(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Writes `<stem>.json`, `<stem>.csv`, `<stem>_actions.svg` and
/// `<stem>_leakage.svg` into `dir` and returns their paths.
pub fn emit_report(report: &BeatingReport, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let json = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(report).map_err(|e| io_err(&json, e))?;
    fs::write(&json, text).map_err(|e| io_err(&json, e))?;

    let csv_path = dir.join(format!("{stem}.csv"));
    write_csv(report, &csv_path)?;

    let actions = dir.join(format!("{stem}_actions.svg"));
    fs::write(&actions, actions_chart(report)).map_err(|e| io_err(&actions, e))?;
    let leak = dir.join(format!("{stem}_leakage.svg"));
    fs::write(&leak, leakage_chart(report)).map_err(|e| io_err(&leak, e))?;
    Ok(vec![json, csv_path, actions, leak])
}

pub fn read_report(path: &Path) -> Result<BeatingReport> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

fn write_csv(report: &BeatingReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header = vec!["t".to_string()];
    for c in &report.clusters {
        for col in ["k_hat", "k_model", "sum1", "sum2"] {
            header.push(format!("{col}_{}", c.center));
        }
    }
    header.extend(["leakage", "mass", "hamiltonian"].map(String::from));
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for (i, t) in report.times.iter().enumerate() {
        let mut row = vec![format!("{t:e}")];
        for c in &report.clusters {
            for series in [&c.k_hat, &c.k_model, &c.sum_1, &c.sum_2] {
                row.push(format!("{:e}", series[i]));
            }
        }
        for series in [&report.leakage, &report.mass, &report.hamiltonian] {
            row.push(series.get(i).map(|x| format!("{x:e}")).unwrap_or_default());
        }
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Line<'a> {
    pub label: String,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub dashed: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Minimal line chart. Nonpositive values are dropped on a log axis.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, lines: &[Line], log_y: bool) -> String {
    let (w, h, ml, mr, mt, mb) = (720.0, 420.0, 70.0, 160.0, 36.0, 48.0);
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let usable = |y: f64| y.is_finite() && (!log_y || y > 0.0);
    let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
    let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
    for l in lines {
        for (&x, &y) in l.xs.iter().zip(l.ys) {
            if usable(y) && x.is_finite() {
                xr = (xr.0.min(x), xr.1.max(x));
                yr = (yr.0.min(ty(y)), yr.1.max(ty(y)));
            }
        }
    }
    if !(xr.0 < xr.1) {
        xr = (0.0, 1.0);
    }
    if !(yr.0 < yr.1) {
        yr = if yr.0.is_finite() { (yr.0 - 0.5, yr.0 + 0.5) } else { (0.0, 1.0) };
    }
    let px = |x: f64| ml + (x - xr.0) / (xr.1 - xr.0) * (w - ml - mr);
    let py = |y: f64| h - mb - (ty(y) - yr.0) / (yr.1 - yr.0) * (h - mt - mb);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{ml}" y="{mt}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - ml - mr,
        h - mt - mb
    );
    for i in 0..=4 {
        let fx = xr.0 + (xr.1 - xr.0) * i as f64 / 4.0;
        let fy = yr.0 + (yr.1 - yr.0) * i as f64 / 4.0;
        let label_y = if log_y { format!("1e{fy:.1}") } else { format!("{fy:.3}") };
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{fx:.3e}</text>"#, px(fx), h - mb + 16.0);
        let yy = h - mb - (fy - yr.0) / (yr.1 - yr.0) * (h - mt - mb);
        let _ = writeln!(s, r#"<text x="{}" y="{yy:.1}" text-anchor="end">{label_y}</text>"#, ml - 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, ml + (w - ml - mr) / 2.0, h - 8.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (i, l) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts = String::new();
        for (&x, &y) in l.xs.iter().zip(l.ys) {
            if usable(y) && x.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", px(x), py(y));
            }
        }
        let dash = if l.dashed { r#" stroke-dasharray="6 3""# } else { "" };
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.2"{dash} points="{}"/>"#,
                pts.trim_end()
            );
        }
        let ly = mt + 16.0 * (i as f64 + 1.0);
        let lx = w - mr + 10.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}"{dash}/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&l.label));
    }
    s.push_str("</svg>\n");
    s
}

fn actions_chart(r: &BeatingReport) -> String {
    let mut lines = Vec::new();
    for c in &r.clusters {
        lines.push(Line { label: format!("K n={}", c.center), xs: &r.times, ys: &c.k_hat, dashed: false });
        lines.push(Line { label: format!("model n={}", c.center), xs: &r.times, ys: &c.k_model, dashed: true });
    }
    line_chart("Normalised action I_a1/(I_a1+I_b1)", "t", "K", &lines, false)
}

fn leakage_chart(r: &BeatingReport) -> String {
    let lines = [Line { label: "out-of-cluster".into(), xs: &r.times, ys: &r.leakage, dashed: false }];
    line_chart("Out-of-cluster action", "t", "sum I_p", &lines, true)
}
