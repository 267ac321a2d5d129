//! Deterministic serialization: CSV tables, JSON, minimal SVG line plots and
//! the run manifest.
//!
//! Floats are written with the shortest representation that parses back to
//! the same bits, so re-reading any CSV reproduces the values exactly. Nothing
//! time- or host-dependent is written, so identical runs give identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiments::ScenarioOutput;
use crate::series::{HomodyneRecord, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Csv, Format::Json, Format::Svg];

    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// Round-trip float formatting (`{:?}` is shortest-exact and keeps exponents
/// for very large or small magnitudes).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Writes a CSV table. All columns must have the same length.
pub fn csv_table(columns: &[(String, &[f64])]) -> Result<String> {
    let n = columns.first().map_or(0, |c| c.1.len());
    if let Some((name, c)) = columns.iter().find(|c| c.1.len() != n) {
        return Err(Error::Alignment(format!(
            "column `{name}` has {} rows, expected {n}",
            c.len()
        )));
    }
    let mut out = String::new();
    let header: Vec<&str> = columns.iter().map(|c| c.0.as_str()).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..n {
        for (i, (_, c)) in columns.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&fmt_f64(c[r]));
        }
        out.push('\n');
    }
    Ok(out)
}

/// CSV of a series in the fixed column order
/// `t,jx,jy,jz[,jx_se,jy_se,jz_se][,phase][,current][,purity]`.
pub fn series_csv(series: &TimeSeries) -> Result<String> {
    series.check()?;
    let mut owned = vec![("jx", series.jx()), ("jy", series.jy()), ("jz", series.jz())];
    if let Some(se) = &series.stderr {
        owned.push(("jx_se", se.iter().map(|s| s.jx).collect()));
        owned.push(("jy_se", se.iter().map(|s| s.jy).collect()));
        owned.push(("jz_se", se.iter().map(|s| s.jz).collect()));
    }
    let mut cols: Vec<(String, &[f64])> = vec![("t".to_string(), &series.times)];
    cols.extend(owned.iter().map(|(n, v)| (n.to_string(), v.as_slice())));
    for (name, ch) in [
        ("phase", &series.phase),
        ("current", &series.current),
        ("purity", &series.purity),
    ] {
        if let Some(v) = ch {
            cols.push((name.to_string(), v.as_slice()));
        }
    }
    csv_table(&cols)
}

/// CSV of a photocurrent record: `t,current,dW`.
pub fn record_csv(record: &HomodyneRecord) -> Result<String> {
    csv_table(&[
        ("t".to_string(), &record.times),
        ("current".to_string(), &record.current),
        ("dW".to_string(), &record.noise_increments),
    ])
}

/// Parses a CSV written by [`csv_table`] into its header and columns.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Alignment("empty CSV".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut cols = vec![Vec::new(); header.len()];
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(Error::Alignment(format!(
                "row {} has {} cells, header has {}",
                i + 1,
                cells.len(),
                header.len()
            )));
        }
        for (c, cell) in cols.iter_mut().zip(cells) {
            c.push(cell.parse::<f64>().map_err(|e| {
                Error::Alignment(format!("row {}: `{cell}` is not a number ({e})", i + 1))
            })?);
        }
    }
    Ok((header, cols))
}

const SVG_W: f64 = 720.0;
const SVG_H: f64 = 360.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Static line plot: one polyline per channel on shared linear axes.
pub fn svg_plot(title: &str, x: &[f64], channels: &[(String, &[f64])]) -> String {
    let finite = |v: &[f64]| -> (f64, f64) {
        v.iter()
            .filter(|a| a.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)))
    };
    let (x0, mut x1) = finite(x);
    let (mut y0, mut y1) = channels
        .iter()
        .map(|c| finite(c.1))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    let x0 = if x0.is_finite() { x0 } else { 0.0 };
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !y0.is_finite() || !y1.is_finite() {
        (y0, y1) = (-1.0, 1.0);
    } else if y1 <= y0 {
        (y0, y1) = (y0 - 1.0, y1 + 1.0);
    }
    let px = |v: f64| MARGIN + (v - x0) / (x1 - x0) * (SVG_W - 2.0 * MARGIN);
    let py = |v: f64| SVG_H - MARGIN - (v - y0) / (y1 - y0) * (SVG_H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        SVG_W / 2.0,
        escape(title)
    );
    let (l, r, b, t) = (MARGIN, SVG_W - MARGIN, SVG_H - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{l} {t}V{b}H{r}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    let _ = writeln!(s, r#"<text x="{l}" y="{}" text-anchor="start">{}</text>"#, b + 16.0, fmt_tick(x0));
    let _ = writeln!(s, r#"<text x="{r}" y="{}" text-anchor="end">{}</text>"#, b + 16.0, fmt_tick(x1));
    let _ = writeln!(s, r#"<text x="{}" y="{b}" text-anchor="end">{}</text>"#, l - 4.0, fmt_tick(y0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, l - 4.0, t + 4.0, fmt_tick(y1));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#, SVG_W / 2.0, SVG_H - 12.0);

    for (i, (name, ys)) in channels.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts = String::new();
        for (xv, yv) in x.iter().zip(ys.iter()) {
            if xv.is_finite() && yv.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", px(*xv), py(*yv));
            }
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            pts.trim_end()
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            r - 120.0,
            t + 16.0 * (i as f64 + 1.0),
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub version: String,
    pub route: String,
    /// Full configuration echo, parseable as a config file.
    pub config: String,
    pub seeds: Vec<u64>,
    pub dt: Option<f64>,
    /// Run-level settings and notes (parameter scaling, tolerances, …).
    pub parameters: BTreeMap<String, String>,
    /// Per-series metadata keyed by file stem.
    pub series: BTreeMap<String, BTreeMap<String, String>>,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(scenario: &str, route: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            version: crate::VERSION.to_string(),
            route: route.to_string(),
            ..Self::default()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes artifacts into one directory and records them in a manifest.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    formats: Vec<Format>,
    pub manifest: Manifest,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl ArtifactWriter {
    pub fn new(dir: impl Into<PathBuf>, formats: &[Format], manifest: Manifest) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut formats = formats.to_vec();
        formats.sort();
        formats.dedup();
        Ok(Self {
            dir,
            formats,
            manifest,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn write_text(&mut self, file: &str, content: &str) -> Result<PathBuf> {
        let path = self.dir.join(file);
        fs::write(&path, content).map_err(io_err(&path))?;
        self.manifest.files.push(file.to_string());
        Ok(path)
    }

    /// Writes a series in every requested format and records its metadata.
    pub fn write_series(&mut self, stem: &str, series: &TimeSeries) -> Result<()> {
        series.check()?;
        self.manifest
            .series
            .insert(stem.to_string(), series.meta.clone());
        if self.wants(Format::Csv) {
            self.write_text(&format!("{stem}.csv"), &series_csv(series)?)?;
        }
        if self.wants(Format::Json) {
            let mut s = serde_json::to_string(series)?;
            s.push('\n');
            self.write_text(&format!("{stem}.json"), &s)?;
        }
        if self.wants(Format::Svg) {
            let title = format!("{} — {stem}", self.manifest.scenario);
            let svg = match (&series.current, &series.purity) {
                (Some(c), _) => svg_plot(&title, &series.times, &[("current".to_string(), c.as_slice())]),
                _ => {
                    let (jx, jy, jz) = (series.jx(), series.jy(), series.jz());
                    svg_plot(
                        &title,
                        &series.times,
                        &[
                            ("jx".to_string(), jx.as_slice()),
                            ("jy".to_string(), jy.as_slice()),
                            ("jz".to_string(), jz.as_slice()),
                        ],
                    )
                }
            };
            self.write_text(&format!("{stem}.svg"), &svg)?;
        }
        Ok(())
    }

    /// Writes a photocurrent record and adds its seed to the manifest.
    pub fn write_record(&mut self, stem: &str, record: &HomodyneRecord) -> Result<()> {
        if !self.manifest.seeds.contains(&record.seed) {
            self.manifest.seeds.push(record.seed);
        }
        if self.wants(Format::Csv) {
            self.write_text(&format!("{stem}.csv"), &record_csv(record)?)?;
        }
        if self.wants(Format::Json) {
            let mut s = serde_json::to_string(record)?;
            s.push('\n');
            self.write_text(&format!("{stem}.json"), &s)?;
        }
        if self.wants(Format::Svg) {
            let title = format!("{} — {stem}", self.manifest.scenario);
            let svg = svg_plot(&title, &record.times, &[("current".to_string(), &record.current)]);
            self.write_text(&format!("{stem}.svg"), &svg)?;
        }
        Ok(())
    }

    /// Plot-ready two-column file `t,<name>`; always CSV.
    pub fn write_curve(&mut self, stem: &str, name: &str, t: &[f64], y: &[f64]) -> Result<()> {
        let csv = csv_table(&[("t".to_string(), t), (name.to_string(), y)])?;
        self.write_text(&format!("{stem}.csv"), &csv)?;
        Ok(())
    }

    /// Writes `manifest.json` and returns its path.
    pub fn finish(mut self) -> Result<PathBuf> {
        let path = self.dir.join("manifest.json");
        self.manifest.files.sort();
        fs::write(&path, self.manifest.to_json()?).map_err(io_err(&path))?;
        Ok(path)
    }
}

/// Writes every series and record of a config-driven run, then the manifest
/// with the full config echo.
pub fn write_scenario(cfg: &RunConfig, out: &ScenarioOutput, dir: impl Into<PathBuf>) -> Result<PathBuf> {
    let mut manifest = Manifest::new(&cfg.name, cfg.route.name());
    manifest.config = cfg.to_ini();
    manifest.dt = Some(cfg.integrator.dt);
    manifest.parameters = out.notes.clone();
    let mut w = ArtifactWriter::new(dir, &cfg.formats, manifest)?;
    for (stem, s) in &out.series {
        w.write_series(stem, s)?;
    }
    for (stem, r) in &out.records {
        w.write_record(stem, r)?;
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BlochState;
    use proptest::prelude::*;

    #[test]
    fn empty_series_is_header_only() {
        assert_eq!(series_csv(&TimeSeries::default()).unwrap(), "t,jx,jy,jz\n");
    }

    #[test]
    fn column_order_is_fixed() {
        let mut s = TimeSeries::default();
        s.push(0.0, BlochState::new(1.0, 2.0, 3.0));
        s.current = Some(vec![0.5]);
        s.phase = Some(vec![-0.25]);
        let csv = series_csv(&s).unwrap();
        assert_eq!(csv, "t,jx,jy,jz,phase,current\n0.0,1.0,2.0,3.0,-0.25,0.5\n");
    }

    #[test]
    fn record_has_dw_column() {
        let r = HomodyneRecord {
            times: vec![0.0, 0.1],
            current: vec![1.0, 2.0],
            noise_increments: vec![0.01, -0.02],
            seed: 3,
            stream: 0,
            dt: 0.1,
            gamma_meas: 0.5,
        };
        let csv = record_csv(&r).unwrap();
        assert!(csv.starts_with("t,current,dW\n"));
    }

    #[test]
    fn mismatched_columns_rejected() {
        let a = [1.0, 2.0];
        let b = [1.0];
        assert!(csv_table(&[("a".into(), &a[..]), ("b".into(), &b[..])]).is_err());
    }

    #[test]
    fn svg_has_polyline_per_channel_and_title() {
        let t = [0.0, 1.0, 2.0];
        let y = [0.0, 1.0, f64::NAN];
        let svg = svg_plot("fig <3>", &t, &[("a".into(), &y[..]), ("b".into(), &t[..])]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("fig &lt;3&gt;"));
    }

    #[test]
    fn writer_produces_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = TimeSeries::default();
        s.push(0.0, BlochState::ZERO);
        s.set_meta("dt", 0.1);
        let mut w = ArtifactWriter::new(dir.path(), &Format::ALL, Manifest::new("demo", "meanfield")).unwrap();
        w.write_series("series", &s).unwrap();
        w.write_curve("curve", "y", &[0.0], &[1.0]).unwrap();
        let path = w.finish().unwrap();
        let m: Manifest = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(m.files, ["curve.csv", "series.csv", "series.json", "series.svg"]);
        assert_eq!(m.series["series"]["dt"], "0.1");
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("occupied");
        fs::write(&file, "x").unwrap();
        let err = ArtifactWriter::new(file.join("sub"), &[Format::Csv], Manifest::default()).unwrap_err();
        assert!(err.to_string().contains("occupied"));
    }

    proptest! {
        #[test]
        fn csv_round_trips_exactly(v in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 0..50)) {
            let t: Vec<f64> = (0..v.len()).map(|i| i as f64).collect();
            let csv = csv_table(&[("t".into(), &t[..]), ("x".into(), &v[..])]).unwrap();
            let (h, cols) = read_csv(&csv).unwrap();
            prop_assert_eq!(h, vec!["t".to_string(), "x".to_string()]);
            prop_assert_eq!(&cols[1], &v);
        }
    }
}
