//! The four result panels, drawn from a metrics CSV only.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};
use bsnc::Protocol;
use plotters::prelude::*;

use crate::output::{Row, Table};

pub const PANELS: [&str; 4] = ["usage.svg", "rate.svg", "delay_mean.svg", "delay_max.svg"];

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
    color: RGBColor,
    dashed: bool,
    width: u32,
}

fn color(p: Protocol) -> RGBColor {
    match p {
        Protocol::BlankSpace => RGBColor(200, 30, 30),
        Protocol::NetFec => RGBColor(30, 90, 200),
        Protocol::MpMh => RGBColor(20, 150, 60),
        Protocol::SrArq => RGBColor(120, 120, 120),
    }
}

/// Seed-averaged value of `f` per sweep point, skipping missing cells.
fn means<'a>(
    rows: impl Iterator<Item = &'a Row>,
    f: impl Fn(&Row) -> Option<f64>,
) -> Vec<(f64, f64)> {
    let mut acc: BTreeMap<u64, (f64, f64, u32)> = BTreeMap::new();
    for r in rows {
        if let Some(y) = f(r) {
            let x = r.param.unwrap_or(0.0);
            let e = acc.entry(x.to_bits()).or_insert((x, 0.0, 0));
            e.1 += y;
            e.2 += 1;
        }
    }
    let mut pts: Vec<(f64, f64)> = acc
        .into_values()
        .map(|(x, s, n)| (x, s / n as f64))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

fn protocols(t: &Table) -> Vec<Protocol> {
    let mut ps: Vec<Protocol> = t.rows.iter().map(|r| r.protocol).collect();
    ps.sort();
    ps.dedup();
    ps
}

fn of(t: &Table, p: Protocol) -> impl Iterator<Item = &Row> {
    t.rows.iter().filter(move |r| r.protocol == p)
}

fn usage_series(t: &Table) -> Vec<Series> {
    let mut out = Vec::new();
    for p in protocols(t) {
        if p == Protocol::BlankSpace {
            for n in 0..t.hops {
                let shade = Palette99::pick(n + 2).to_rgba();
                out.push(Series {
                    name: format!("{p} node {n}"),
                    points: means(of(t, p), |r| r.node_usage.get(n).copied()),
                    color: RGBColor(shade.0, shade.1, shade.2),
                    dashed: true,
                    width: 1,
                });
            }
        }
        out.push(Series {
            name: format!("{p} end-to-end"),
            points: means(of(t, p), |r| Some(r.usage)),
            color: color(p),
            dashed: false,
            width: 2,
        });
    }
    out
}

fn rate_series(t: &Table) -> Vec<Series> {
    let ps = protocols(t);
    let mut out = Vec::new();
    let coded: Vec<Protocol> = ps.iter().copied().filter(|p| p.is_coded()).collect();
    if !coded.is_empty() {
        let names: Vec<String> = coded.iter().map(|p| p.to_string()).collect();
        out.push(Series {
            name: format!("delivery rate ({})", names.join(", ")),
            points: means(t.rows.iter().filter(|r| r.protocol.is_coded()), |r| {
                r.delivery_rate
            }),
            color: RGBColor(30, 30, 30),
            dashed: false,
            width: 2,
        });
    }
    if ps.contains(&Protocol::SrArq) {
        out.push(Series {
            name: "srarq delivery rate".into(),
            points: means(of(t, Protocol::SrArq), |r| r.delivery_rate),
            color: color(Protocol::SrArq),
            dashed: false,
            width: 2,
        });
    }
    if ps.contains(&Protocol::BlankSpace) {
        out.push(Series {
            name: "bs goodput".into(),
            points: means(of(t, Protocol::BlankSpace), |r| r.goodput),
            color: color(Protocol::BlankSpace),
            dashed: true,
            width: 2,
        });
    }
    out
}

fn per_protocol(t: &Table, f: impl Fn(&Row) -> Option<f64> + Copy) -> Vec<Series> {
    protocols(t)
        .into_iter()
        .map(|p| Series {
            name: p.to_string(),
            points: means(of(t, p), f),
            color: color(p),
            dashed: false,
            width: 2,
        })
        .collect()
}

fn draw(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    y_floor_one: bool,
) -> Result<()> {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 - x0 < 1e-9 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    let y1 = if y_floor_one {
        y1.max(1.0) * 1.05
    } else {
        (y1 * 1.1).max(1.0)
    };

    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    let err = |e: &dyn std::fmt::Display| anyhow!("{}: {e}", path.display());
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, 0.0..y1)
        .map_err(|e| err(&e))?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc(y_label)
        .draw()
        .map_err(|e| err(&e))?;
    for s in series {
        let style = s.color.stroke_width(s.width);
        let legend = move |(x, y): (i32, i32)| PathElement::new(vec![(x, y), (x + 20, y)], style);
        if s.dashed {
            chart
                .draw_series(DashedLineSeries::new(s.points.iter().copied(), 8, 5, style))
                .map_err(|e| err(&e))?
                .label(&s.name)
                .legend(legend);
        } else {
            chart
                .draw_series(LineSeries::new(s.points.iter().copied(), style))
                .map_err(|e| err(&e))?
                .label(&s.name)
                .legend(legend);
            chart
                .draw_series(
                    s.points
                        .iter()
                        .map(|&p| Circle::new(p, 3, s.color.filled())),
                )
                .map_err(|e| err(&e))?;
        }
    }
    if !series.is_empty() {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .position(SeriesLabelPosition::LowerLeft)
            .draw()
            .map_err(|e| err(&e))?;
    }
    root.present().map_err(|e| err(&e))?;
    Ok(())
}

/// Render every panel of `table` into `dir`; returns the written paths.
pub fn plot(table: &Table, dir: &Path) -> Result<Vec<PathBuf>> {
    let x = table.param_name.as_str();
    let paths: Vec<PathBuf> = PANELS.iter().map(|p| dir.join(p)).collect();
    draw(
        &paths[0],
        "Channel usage",
        x,
        "U",
        &usage_series(table),
        true,
    )?;
    draw(
        &paths[1],
        "Delivery rate and goodput",
        x,
        "packets / slot",
        &rate_series(table),
        true,
    )?;
    draw(
        &paths[2],
        "Mean in-order delay",
        x,
        "slots",
        &per_protocol(table, |r| r.delay_mean),
        false,
    )?;
    draw(
        &paths[3],
        "Maximum in-order delay",
        x,
        "slots",
        &per_protocol(table, |r| r.delay_max),
        false,
    )?;
    Ok(paths)
}
