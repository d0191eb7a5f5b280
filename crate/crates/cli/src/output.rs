//! Metrics CSV and per-slot trace files.
//!
//! A metrics file starts with one `#` line naming the schema version and the
//! swept parameter, followed by an ordinary CSV header. Per-node usage
//! columns `U0..U{h-1}` follow the chain length; every other column is fixed.
//! Missing values (no decoded packet, degenerate goodput) are empty cells.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bsnc::metrics::{channel_usage, delays, delivery_rate, goodput};
use bsnc::{Protocol, RunLedger};

pub const SCHEMA: &str = "bsnc-metrics v1";

/// One metrics row, as written and as read back.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub protocol: Protocol,
    pub param: Option<f64>,
    pub seed: u64,
    pub usage: f64,
    pub node_usage: Vec<f64>,
    pub goodput: Option<f64>,
    pub delivery_rate: Option<f64>,
    pub delay_mean: Option<f64>,
    pub delay_max: Option<f64>,
    pub undelivered: u64,
}

impl Row {
    pub fn from_ledger(ledger: &RunLedger, param: Option<f64>) -> Row {
        let usage = channel_usage(ledger);
        let (mean, max) = delays(ledger).ok().unzip();
        Row {
            protocol: ledger.protocol,
            param,
            seed: ledger.config.seed,
            usage: usage.total,
            node_usage: usage.per_node,
            goodput: goodput(ledger).ok(),
            delivery_rate: delivery_rate(ledger).ok(),
            delay_mean: mean,
            delay_max: max,
            undelivered: ledger.undelivered(),
        }
    }
}

pub fn header(hops: usize) -> Vec<String> {
    let mut h: Vec<String> = ["protocol", "param", "seed", "U"]
        .map(String::from)
        .to_vec();
    h.extend((0..hops).map(|n| format!("U{n}")));
    h.extend(["eta", "R_del", "D_mean", "D_max", "undelivered"].map(String::from));
    h
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Write `rows` to `path`. `param_name` is recorded in the schema line.
pub fn write_csv(path: &Path, param_name: &str, hops: usize, rows: &[Row]) -> Result<()> {
    let mut file =
        fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    writeln!(file, "# {SCHEMA} param={param_name}")?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header(hops))?;
    for r in rows {
        if r.node_usage.len() != hops {
            bail!(
                "row for {} has {} node columns, expected {hops}",
                r.protocol,
                r.node_usage.len()
            );
        }
        let mut rec = vec![
            r.protocol.to_string(),
            cell(r.param),
            r.seed.to_string(),
            r.usage.to_string(),
        ];
        rec.extend(r.node_usage.iter().map(f64::to_string));
        rec.extend([
            cell(r.goodput),
            cell(r.delivery_rate),
            cell(r.delay_mean),
            cell(r.delay_max),
            r.undelivered.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Metrics file contents: swept parameter name and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub param_name: String,
    pub hops: usize,
    pub rows: Vec<Row>,
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let first = text.lines().next().unwrap_or_default();
    let param_name = first
        .strip_prefix(&format!("# {SCHEMA} param="))
        .with_context(|| format!("{}: not a `{SCHEMA}` file", path.display()))?
        .to_string();
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let head: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    let hops = head
        .iter()
        .filter(|c| c.len() > 1 && c.starts_with('U'))
        .count();
    if head != header(hops) {
        bail!("{}: unexpected columns {head:?}", path.display());
    }
    let opt =
        |s: &str| -> Result<Option<f64>> { Ok(if s.is_empty() { None } else { Some(s.parse()?) }) };
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f: Vec<&str> = rec.iter().collect();
        let k = 4 + hops;
        rows.push(Row {
            protocol: f[0].parse().map_err(anyhow::Error::msg)?,
            param: opt(f[1])?,
            seed: f[2].parse()?,
            usage: f[3].parse()?,
            node_usage: f[4..k]
                .iter()
                .map(|s| s.parse())
                .collect::<Result<_, _>>()?,
            goodput: opt(f[k])?,
            delivery_rate: opt(f[k + 1])?,
            delay_mean: opt(f[k + 2])?,
            delay_max: opt(f[k + 3])?,
            undelivered: f[k + 4].parse()?,
        });
    }
    Ok(Table {
        param_name,
        hops,
        rows,
    })
}

/// Write the `slot,node,action` trace of one run under `dir/traces`.
pub fn write_trace(dir: &Path, ledger: &RunLedger, param: Option<f64>) -> Result<PathBuf> {
    let traces = dir.join("traces");
    fs::create_dir_all(&traces).with_context(|| format!("cannot create {}", traces.display()))?;
    let name = match param {
        Some(v) => format!("{}_p{v}_seed{}.csv", ledger.protocol, ledger.config.seed),
        None => format!("{}_seed{}.csv", ledger.protocol, ledger.config.seed),
    };
    let path = traces.join(name);
    fs::write(&path, ledger.trace()).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let rows = vec![
            Row {
                protocol: Protocol::BlankSpace,
                param: Some(0.3),
                seed: 4,
                usage: 0.81,
                node_usage: vec![0.7, 1.0],
                goodput: Some(0.55),
                delivery_rate: None,
                delay_mean: Some(120.5),
                delay_max: Some(301.0),
                undelivered: 12,
            },
            Row {
                protocol: Protocol::SrArq,
                param: None,
                seed: 5,
                usage: 1.0,
                node_usage: vec![1.0, 1.0],
                goodput: None,
                delivery_rate: Some(0.5),
                delay_mean: None,
                delay_max: None,
                undelivered: 0,
            },
        ];
        write_csv(&path, "eps2", 2, &rows).unwrap();
        let t = read_csv(&path).unwrap();
        assert_eq!(t.param_name, "eps2");
        assert_eq!(t.hops, 2);
        assert_eq!(t.rows, rows);
    }
}
