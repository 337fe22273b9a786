//! SVG line charts of the long-format CSV outputs.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context};
use plotters::prelude::*;

const SIZE: (u32, u32) = (720, 480);
const COLORS: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

fn reader(path: &Path) -> anyhow::Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).with_context(|| format!("opening {}", path.display()))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> anyhow::Result<usize> {
    match headers.iter().position(|h| h == name) {
        Some(i) => Ok(i),
        None => bail!("{}: missing column `{name}`", path.display()),
    }
}

fn num(rec: &csv::StringRecord, i: usize, path: &Path) -> anyhow::Result<f64> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().with_context(|| format!("{}: bad number `{raw}`", path.display()))
}

type Series = BTreeMap<String, Vec<(f64, f64)>>;

fn draw(out: &Path, title: &str, x_label: &str, y_label: &str, series: &Series, log_x: bool) -> anyhow::Result<()> {
    let pts = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        bail!("nothing to plot for {title}");
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let pad = ((y1 - y0) * 0.05).max(1e-3);
    let (y0, y1) = (y0 - pad, y1 + pad);

    let root = SVGBackend::new(out, SIZE).into_drawing_area();
    root.fill(&WHITE)?;
    let mut builder = ChartBuilder::on(&root);
    builder.caption(title, ("sans-serif", 20)).margin(12).x_label_area_size(40).y_label_area_size(56);
    if log_x {
        let mut chart = builder.build_cartesian_2d((x0.max(1e-3)..x1).log_scale(), y0..y1)?;
        chart.configure_mesh().x_desc(x_label).y_desc(y_label).draw()?;
        lines(&mut chart, series)?;
    } else {
        let mut chart = builder.build_cartesian_2d(x0..x1, y0..y1)?;
        chart.configure_mesh().x_desc(x_label).y_desc(y_label).draw()?;
        lines(&mut chart, series)?;
    }
    root.present()?;
    Ok(())
}

fn lines<'a, 'b: 'a, X, Y>(
    chart: &mut ChartContext<'a, SVGBackend<'b>, Cartesian2d<X, Y>>,
    series: &Series,
) -> anyhow::Result<()>
where
    X: Ranged<ValueType = f64>,
    Y: Ranged<ValueType = f64>,
{
    for (k, (name, pts)) in series.iter().enumerate() {
        let c = COLORS[k % COLORS.len()];
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), c.stroke_width(2)).point_size(3))?
            .label(name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], c.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| anyhow::anyhow!("drawing legend: {e}"))
}

/// One line per associator: `metric` against mean inter-event gap.
pub fn stress(path: &Path, metric: &str, out: &Path) -> anyhow::Result<()> {
    let mut r = reader(path)?;
    let h = r.headers()?.clone();
    let (ca, cg, cm, cv) = (
        column(&h, "associator", path)?,
        column(&h, "mean_gap_s", path)?,
        column(&h, "metric", path)?,
        column(&h, "value", path)?,
    );
    let mut series = Series::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.get(cm) == Some(metric) {
            let name = rec.get(ca).unwrap_or("").to_string();
            series.entry(name).or_default().push((num(&rec, cg, path)?, num(&rec, cv, path)?));
        }
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    draw(out, &metric.replace('_', " "), "mean inter-event gap (s)", metric, &series, true)
}

/// Event and phase precision/recall against the minimum cluster size.
pub fn sweep(path: &Path, out: &Path) -> anyhow::Result<()> {
    let mut r = reader(path)?;
    let h = r.headers()?.clone();
    let (cn, cm, cv) = (column(&h, "n_min", path)?, column(&h, "metric", path)?, column(&h, "value", path)?);
    let mut series = Series::new();
    for rec in r.records() {
        let rec = rec?;
        let m = rec.get(cm).unwrap_or("");
        if m.ends_with("precision") || m.ends_with("recall") {
            series.entry(m.to_string()).or_default().push((num(&rec, cn, path)?, num(&rec, cv, path)?));
        }
    }
    draw(out, "precision and recall by n_min", "n_min", "score", &series, false)
}

/// Training and validation loss per epoch.
pub fn training_log(path: &Path, out: &Path) -> anyhow::Result<()> {
    let mut r = reader(path)?;
    let h = r.headers()?.clone();
    let ce = column(&h, "epoch", path)?;
    let cols = [("train_loss", column(&h, "train_loss", path)?), ("val_loss", column(&h, "val_loss", path)?)];
    let mut series = Series::new();
    for rec in r.records() {
        let rec = rec?;
        let e = num(&rec, ce, path)?;
        for (name, c) in cols {
            series.entry(name.to_string()).or_default().push((e, num(&rec, c, path)?));
        }
    }
    draw(out, "training loss", "epoch", "binary cross-entropy", &series, false)
}
