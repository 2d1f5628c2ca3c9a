//! On-disk run artefacts: `daily.csv`, `ticks.csv`, `manifest.json`.
//!
//! Floats are written in Rust's shortest round-trip form, so output is
//! byte-stable for a given record. Missing quotes are empty fields.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::engine::record::{DailySeries, Manifest, SimulationRecord, TickSeries};
use crate::error::{Error, Result};

pub const DAILY_HEADER: &str = "day,close,fundamental,volume,n_trades";
pub const TICKS_HEADER: &str =
    "tick,price,fundamental,best_bid,best_ask,spread,volume,n_trades,bid_depth,ask_depth";

fn opt(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

pub fn write_daily(path: &Path, d: &DailySeries) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{DAILY_HEADER}")?;
    for i in 0..d.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            i,
            d.close[i],
            opt(d.fundamental[i]),
            d.volume[i],
            d.n_trades[i]
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ticks(path: &Path, t: &TickSeries) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{TICKS_HEADER}")?;
    for i in 0..t.len() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            i,
            t.price[i],
            t.fundamental[i],
            opt(t.best_bid[i]),
            opt(t.best_ask[i]),
            opt(t.spread[i]),
            t.volume[i],
            t.n_trades[i],
            t.bid_depth[i],
            t.ask_depth[i]
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_manifest(path: &Path, m: &Manifest) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, m)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Write the three artefacts of one run into `dir`, creating it.
pub fn write_run(dir: &Path, rec: &SimulationRecord) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_daily(&dir.join("daily.csv"), &rec.daily)?;
    write_ticks(&dir.join("ticks.csv"), &rec.ticks)?;
    write_manifest(&dir.join("manifest.json"), &rec.manifest)
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name))
}

fn parse_f64(s: &str, line: usize, col: &str) -> Result<f64> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse()
        .map_err(|_| Error::Parse(format!("line {line}: column `{col}`: bad number `{s}`")))
}

fn parse_u64(s: &str, line: usize, col: &str) -> Result<u64> {
    let v = parse_f64(s, line, col)?;
    if v.is_nan() || v < 0.0 || v.fract() != 0.0 {
        return Err(Error::Parse(format!(
            "line {line}: column `{col}`: expected a count, got `{}`",
            s.trim()
        )));
    }
    Ok(v as u64)
}

/// Read a daily series. Only a `close` column (or `price`) is required;
/// missing fundamental, volume and trade columns yield empty vectors.
pub fn read_daily(path: &Path) -> Result<DailySeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let h = rdr.headers()?.clone();
    let close = header_index(&h, "close")
        .or_else(|| header_index(&h, "price"))
        .ok_or_else(|| Error::Parse(format!("{}: no `close` column", path.display())))?;
    let fund = header_index(&h, "fundamental");
    let vol = header_index(&h, "volume");
    let ntr = header_index(&h, "n_trades");
    let mut d = DailySeries::default();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let get = |j: usize| row.get(j).unwrap_or("");
        d.close.push(parse_f64(get(close), line, "close")?);
        if let Some(j) = fund {
            d.fundamental.push(parse_f64(get(j), line, "fundamental")?);
        }
        if let Some(j) = vol {
            d.volume.push(parse_u64(get(j), line, "volume")?);
        }
        if let Some(j) = ntr {
            d.n_trades.push(parse_u64(get(j), line, "n_trades")?);
        }
    }
    if d.close.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::Parse(format!(
            "{}: close prices must be positive",
            path.display()
        )));
    }
    Ok(d)
}

pub fn read_ticks(path: &Path) -> Result<TickSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let h = rdr.headers()?.clone();
    let col = |name: &str| {
        header_index(&h, name)
            .ok_or_else(|| Error::Parse(format!("{}: no `{name}` column", path.display())))
    };
    let (price, fund, bid, ask, spread, vol, ntr) = (
        col("price")?,
        col("fundamental")?,
        col("best_bid")?,
        col("best_ask")?,
        col("spread")?,
        col("volume")?,
        col("n_trades")?,
    );
    let bd = header_index(&h, "bid_depth");
    let ad = header_index(&h, "ask_depth");
    let mut t = TickSeries::default();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let get = |j: usize| row.get(j).unwrap_or("");
        t.price.push(parse_f64(get(price), line, "price")?);
        t.fundamental.push(parse_f64(get(fund), line, "fundamental")?);
        t.best_bid.push(parse_f64(get(bid), line, "best_bid")?);
        t.best_ask.push(parse_f64(get(ask), line, "best_ask")?);
        t.spread.push(parse_f64(get(spread), line, "spread")?);
        t.volume.push(parse_u64(get(vol), line, "volume")?);
        t.n_trades.push(parse_u64(get(ntr), line, "n_trades")? as u32);
        t.bid_depth.push(bd.map_or(Ok(0), |j| parse_u64(get(j), line, "bid_depth"))?);
        t.ask_depth.push(ad.map_or(Ok(0), |j| parse_u64(get(j), line, "ask_depth"))?);
    }
    if t.price.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::Parse(format!("{}: prices must be positive", path.display())));
    }
    Ok(t)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
