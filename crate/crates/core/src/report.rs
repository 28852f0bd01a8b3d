//! CSV output, run metadata and SVG plots.
//!
//! Plots are drawn from the CSV rows alone so they can be regenerated offline.

use std::io::{Read, Write};
use std::path::Path;

use plotters::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::{point_seed, ExperimentConfig, PointRecord};
use crate::homodyne::GENERATOR_ID;

pub const CSV_HEADER: [&str; 16] = [
    "sweep_param",
    "sweep_value",
    "lambda",
    "eta_a",
    "eta_h",
    "s",
    "dark_model",
    "N",
    "samples",
    "seed",
    "p1_theory",
    "p1_mc",
    "ws0_theory",
    "ws0_estimate",
    "ws0_stderr",
    "status",
];

pub fn write_csv<W: Write>(rows: &[PointRecord], out: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    writer.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<PointRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Config(format!("unexpected CSV header: {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Reproducibility metadata written next to each CSV file.
#[derive(Debug, Serialize)]
pub struct RunMetadata<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub generator: &'static str,
    pub verb: &'a str,
    pub config: &'a ExperimentConfig,
    pub point_seeds: Vec<u64>,
}

impl<'a> RunMetadata<'a> {
    pub fn new(verb: &'a str, config: &'a ExperimentConfig) -> Self {
        let point_seeds = match &config.sweep {
            Some(sweep) => (0..sweep.points).map(|i| point_seed(config.seed, i)).collect(),
            None => vec![config.seed],
        };
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            generator: GENERATOR_ID,
            verb,
            config,
            point_seeds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metadata serializes")
    }
}

const PLOT_SIZE: (u32, u32) = (720, 480);

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Io(format!("plot: {e}"))
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.08).max(1e-3);
    (lo - pad, hi + pad)
}

fn x_of(row: &PointRecord) -> f64 {
    row.sweep_value.unwrap_or(row.lambda)
}

/// Main panel: estimates with ±1 standard-error bars over the theory curve.
pub fn plot_ws0(rows: &[PointRecord], path: &Path) -> Result<()> {
    let ok: Vec<&PointRecord> = rows.iter().filter(|r| r.is_ok()).collect();
    let x_label = rows.first().map_or("sweep", |r| r.sweep_param.as_str()).to_string();
    let s = rows.first().map_or(0.0, |r| r.s);
    let (x0, x1) = padded_range(ok.iter().map(|r| x_of(r)));
    let (y0, y1) = padded_range(ok.iter().flat_map(|r| {
        let e = r.ws0_estimate.unwrap_or(0.0);
        let d = r.ws0_stderr.unwrap_or(0.0);
        [r.ws0_theory.unwrap_or(0.0), e - d, e + d]
    }));

    let root = SVGBackend::new(path, PLOT_SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("W_s(0), s = {s}"), ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc("W_s(0)")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(
            ok.iter().filter_map(|r| Some((x_of(r), r.ws0_theory?))),
            BLUE.stroke_width(2),
        ))
        .map_err(plot_err)?
        .label("theory")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLUE.stroke_width(2)));
    chart
        .draw_series(ok.iter().filter_map(|r| {
            let (e, d) = (r.ws0_estimate?, r.ws0_stderr?);
            Some(ErrorBar::new_vertical(x_of(r), e - d, e, e + d, RED.filled(), 6))
        }))
        .map_err(plot_err)?
        .label("tomography")
        .legend(|(x, y)| Circle::new((x + 10, y), 3, RED.filled()));
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Click probability: closed form (line) and Monte Carlo frequency (points).
pub fn plot_p1(rows: &[PointRecord], path: &Path) -> Result<()> {
    let ok: Vec<&PointRecord> = rows.iter().filter(|r| r.is_ok()).collect();
    let x_label = rows.first().map_or("sweep", |r| r.sweep_param.as_str()).to_string();
    let (x0, x1) = padded_range(ok.iter().map(|r| x_of(r)));
    let (y0, y1) = padded_range(ok.iter().flat_map(|r| [r.p1_theory.unwrap_or(0.0), r.p1_mc.unwrap_or(0.0)]));

    let root = SVGBackend::new(path, PLOT_SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("click probability P1", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(x0..x1, y0.max(0.0)..y1.min(1.0))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc(x_label)
        .y_desc("P1")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(
            ok.iter().filter_map(|r| Some((x_of(r), r.p1_theory?))),
            BLUE.stroke_width(2),
        ))
        .map_err(plot_err)?;
    chart
        .draw_series(
            ok.iter()
                .filter_map(|r| Some(Circle::new((x_of(r), r.p1_mc?), 3, RED.filled()))),
        )
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Writes `<stem>.csv`, `<stem>.meta.json` and, for sweeps,
/// `<stem>_ws0.svg` and `<stem>_p1.svg` into `dir`.
pub fn write_outputs(
    dir: &Path,
    stem: &str,
    verb: &str,
    config: &ExperimentConfig,
    rows: &[PointRecord],
) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    write_csv(rows, std::fs::File::create(&csv_path)?)?;
    let meta_path = dir.join(format!("{stem}.meta.json"));
    std::fs::write(&meta_path, RunMetadata::new(verb, config).to_json())?;
    let mut written = vec![csv_path, meta_path];
    if config.sweep.is_some() {
        let ws0 = dir.join(format!("{stem}_ws0.svg"));
        plot_ws0(rows, &ws0)?;
        let p1 = dir.join(format!("{stem}_p1.svg"));
        plot_p1(rows, &p1)?;
        written.extend([ws0, p1]);
    }
    Ok(written)
}
