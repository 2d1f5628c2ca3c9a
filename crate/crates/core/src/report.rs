//! Rendering and persistence of fact reports. Every number is printed with
//! four decimals.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::stats::battery::{CurveStat, Fact, FactEntry, FactReport, Summary};
use crate::stats::hill::PANEL_FRACTIONS;

fn num(v: f64) -> String {
    format!("{v:.4}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_else(|| "-".into())
}

/// Columns shown for one summary; dispersion columns are blank for a
/// single observation.
fn summary_cells(s: &Summary) -> [String; 7] {
    let spread = |v: f64| if s.n > 1 { num(v) } else { String::new() };
    [
        s.n.to_string(),
        num(s.mean),
        num(s.median),
        spread(s.q1),
        spread(s.q3),
        spread(s.min),
        spread(s.max),
    ]
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut w: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            w[i] = w[i].max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::from("  ");
        for (i, c) in cells.iter().enumerate() {
            if i == 0 {
                let _ = write!(s, "{c:<width$}", width = w[0]);
            } else {
                let _ = write!(s, "  {c:>width$}", width = w[i]);
            }
        }
        s.trim_end().to_string()
    };
    out.push_str(&line(header.to_vec()));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
}

fn scalar_table(out: &mut String, e: &FactEntry, skip: impl Fn(&str) -> bool) {
    let rows: Vec<Vec<String>> = e
        .scalars
        .iter()
        .filter(|(k, _)| !skip(k))
        .filter_map(|(k, s)| {
            let s = s.summary.as_ref()?;
            let mut row = vec![k.clone()];
            row.extend(summary_cells(s));
            Some(row)
        })
        .collect();
    if !rows.is_empty() {
        table(out, &["statistic", "N", "Mean", "Median", "Q1", "Q3", "Min", "Max"], &rows);
    }
}

fn hill_panel(out: &mut String, e: &FactEntry) {
    let mut prefixes: Vec<&str> = e
        .scalars
        .keys()
        .filter_map(|k| k.rsplit_once(".left.").map(|(p, _)| p))
        .collect();
    prefixes.dedup();
    for p in prefixes {
        let _ = writeln!(out, "  {p} returns (mean, median over runs)");
        let rows: Vec<Vec<String>> = PANEL_FRACTIONS
            .iter()
            .map(|f| {
                let pct = f * 100.0;
                let get = |side: &str| e.summary(&format!("{p}.{side}.{pct}"));
                vec![
                    format!("{pct}%"),
                    opt(get("left").map(|s| s.mean)),
                    opt(get("left").map(|s| s.median)),
                    opt(get("right").map(|s| s.mean)),
                    opt(get("right").map(|s| s.median)),
                ]
            })
            .collect();
        table(out, &["tail", "left mean", "left median", "right mean", "right median"], &rows);
    }
}

fn powerlaw_panel(out: &mut String, e: &FactEntry) {
    let rows: Vec<Vec<String>> = ["returns", "volatility", "volume", "trades"]
        .iter()
        .filter(|n| e.scalars.contains_key(&format!("{n}.zeta")))
        .map(|n| {
            let m = |k: &str| opt(e.summary(&format!("{n}.{k}")).map(|s| s.mean));
            let accepted = e
                .scalars
                .get(&format!("{n}.p_value"))
                .map(|s| {
                    let p: Vec<f64> = s.values.iter().flatten().copied().collect();
                    format!("{}/{}", p.iter().filter(|&&v| v >= 0.05).count(), p.len())
                })
                .unwrap_or_else(|| "-".into());
            vec![
                n.to_string(),
                m("zeta"),
                m("zeta_se"),
                m("x_min"),
                m("x_min_se"),
                m("n_tail"),
                m("p_value"),
                accepted,
            ]
        })
        .collect();
    table(
        out,
        &["series", "zeta", "zeta se", "x_min", "x_min se", "n_tail", "p", "p>=0.05"],
        &rows,
    );
}

fn unit_root_panel(out: &mut String, e: &FactEntry) {
    let rows: Vec<Vec<String>> = ["adf", "pp", "kpss"]
        .iter()
        .filter(|t| e.scalars.contains_key(&format!("{t}.statistic")))
        .map(|t| {
            let m = |k: &str| opt(e.summary(&format!("{t}.{k}")).map(|s| s.mean));
            let rejects = e
                .scalars
                .get(&format!("{t}.reject"))
                .map(|s| {
                    let v: Vec<f64> = s.values.iter().flatten().copied().collect();
                    format!("{}/{}", v.iter().filter(|&&x| x > 0.5).count(), v.len())
                })
                .unwrap_or_default();
            vec![t.to_uppercase(), m("statistic"), m("p_value"), m("critical_5"), rejects]
        })
        .collect();
    table(out, &["test", "mean stat", "mean p", "5% critical", "rejected"], &rows);
}

fn curve_table(out: &mut String, name: &str, c: &CurveStat) {
    let _ = writeln!(out, "  curve {name} ({} runs)", c.n);
    let rows: Vec<Vec<String>> = (0..c.lags.len())
        .map(|i| vec![c.lags[i].to_string(), num(c.mean[i]), num(c.median[i]), num(c.upper[i])])
        .collect();
    table(out, &["lag", "mean", "median", "band"], &rows);
}

fn render_fact(out: &mut String, id: &str, e: &FactEntry) {
    let _ = writeln!(out, "[{id}] {}", e.title);
    if !e.available {
        let reason = e.errors.first().map(|i| i.message.as_str()).unwrap_or("no input");
        let _ = writeln!(out, "  unavailable: {reason}\n");
        return;
    }
    let _ = writeln!(out, "  runs ok: {}/{}", e.n_ok, e.n_runs);
    if let Some(v) = &e.verdict {
        let _ = writeln!(out, "  verdict: {v}");
    }
    match id.parse::<Fact>() {
        Ok(Fact::Hill) => hill_panel(out, e),
        Ok(Fact::Powerlaw) => powerlaw_panel(out, e),
        Ok(Fact::UnitRoot) => unit_root_panel(out, e),
        Ok(Fact::Garch) => {
            scalar_table(out, e, |k| k.contains(".z.left.") || k.contains(".z.right."));
            hill_panel(out, e);
        }
        _ => scalar_table(out, e, |_| false),
    }
    for (name, c) in &e.curves {
        curve_table(out, name, c);
    }
    for issue in e.errors.iter().take(5) {
        let _ = writeln!(out, "  run {} ({}): {}", issue.run, issue.label, issue.message);
    }
    if e.errors.len() > 5 {
        let _ = writeln!(out, "  ... {} more failed runs", e.errors.len() - 5);
    }
    out.push('\n');
}

/// Entries in battery order.
fn ordered(report: &FactReport) -> impl Iterator<Item = (&str, &FactEntry)> {
    Fact::ALL
        .iter()
        .filter_map(|f| report.facts.get(f.id()).map(|e| (f.id(), e)))
}

pub fn render_text(report: &FactReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Stylised-fact report");
    let _ = writeln!(out, "tool version {}, {} runs\n", report.tool_version, report.n_runs);
    for e in &report.input_errors {
        let _ = writeln!(out, "unreadable input: {e}");
    }
    if !report.input_errors.is_empty() {
        out.push('\n');
    }
    for (id, e) in ordered(report) {
        render_fact(&mut out, id, e);
    }
    out
}

/// One line per scalar: `fact,name,n,mean,median,q1,q3,min,max,std`.
pub fn render_csv(report: &FactReport) -> String {
    let mut out = String::from("fact,name,n,mean,median,q1,q3,min,max,std\n");
    for (id, e) in ordered(report) {
        for (name, s) in &e.scalars {
            match &s.summary {
                Some(s) => {
                    let _ = writeln!(
                        out,
                        "{id},{name},{},{},{},{},{},{},{},{}",
                        s.n,
                        num(s.mean),
                        num(s.median),
                        num(s.q1),
                        num(s.q3),
                        num(s.min),
                        num(s.max),
                        num(s.std)
                    );
                }
                None => {
                    let _ = writeln!(out, "{id},{name},0,,,,,,,");
                }
            }
        }
    }
    out
}

pub fn read_report(path: &Path) -> Result<FactReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Write the report as JSON at `path` and each aggregated curve as
/// `{stem}.{fact}.{curve}.csv` beside it. Returns the curve files.
pub fn write_report(path: &Path, report: &FactReport) -> Result<Vec<PathBuf>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(report)?)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut written = Vec::new();
    for (id, e) in &report.facts {
        for (name, c) in &e.curves {
            let file = dir.join(format!("{stem}.{id}.{name}.csv"));
            let mut w = csv::Writer::from_path(&file)?;
            w.write_record(["lag", "mean", "median", "upper", "lower"])?;
            for i in 0..c.lags.len() {
                w.write_record([
                    c.lags[i].to_string(),
                    num(c.mean[i]),
                    num(c.median[i]),
                    num(c.upper[i]),
                    num(c.lower[i]),
                ])?;
            }
            w.flush()?;
            written.push(file);
        }
    }
    Ok(written)
}
