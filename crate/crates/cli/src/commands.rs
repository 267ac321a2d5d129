use std::path::{Path, PathBuf};

use homodyne_core::artifacts::{fmt_f64, svg_plot, write_scenario, ArtifactWriter, Format, Manifest};
use homodyne_core::config::{parse_config, Route, RunConfig};
use homodyne_core::experiments::{
    cross_validate, modulation_period, regime_sweep, run_fig3, run_fig4, run_fig5_with, run_scenario, Fig3Variant,
    Fig4Params, Fig5Params, SweepGrid,
};
use homodyne_core::meanfield::VariantTag;
use homodyne_core::TimeSeries;

use crate::{presets, CliError, Options, OUT_ENV};

type Result<T> = std::result::Result<T, CliError>;

const FIGURE_FORMATS: [Format; 2] = [Format::Csv, Format::Svg];

fn preset(name: &str) -> Result<RunConfig> {
    match presets::load(name) {
        Some(cfg) => Ok(cfg?),
        None => Err(CliError::Usage(format!(
            "unknown preset {name:?}; available: {}",
            presets::names().join(", ")
        ))),
    }
}

fn load_config(o: &Options) -> Result<Option<RunConfig>> {
    if let Some(path) = &o.config {
        return Ok(Some(parse_config(path)?));
    }
    o.preset.as_deref().map(preset).transpose()
}

/// `--out`, else the config's own directory, else `$HOMODYNE_OUT/<name>`,
/// else `out/<name>`.
fn out_dir(o: &Options, configured: Option<&Path>, name: &str) -> PathBuf {
    if let Some(d) = &o.out {
        return d.clone();
    }
    if let Some(d) = configured {
        return d.to_path_buf();
    }
    let base = std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"));
    base.join(name)
}

fn reject(o: &Options, what: &str, allowed: &str) -> Result<()> {
    let given = [
        ("--variant", o.variant.is_some()),
        ("--n-atoms", o.n_atoms.is_some()),
        ("--trajectories", o.trajectories.is_some()),
        ("--seed", o.seed.is_some()),
        ("--config", o.config.is_some() || o.preset.is_some()),
    ];
    for (flag, set) in given {
        if set && !allowed.split(' ').any(|a| a == flag) {
            return Err(CliError::Usage(format!("{flag} does not apply to `{what}`")));
        }
    }
    Ok(())
}

fn json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| CliError::Core(e.into()))
}

fn done(path: &Path) -> Result<()> {
    println!("wrote {}", path.display());
    Ok(())
}

/// Config-driven run of one route.
pub fn scenario(route: Route, o: &Options) -> Result<()> {
    let mut cfg = load_config(o)?.ok_or_else(|| {
        CliError::Usage(format!("`{}` needs --config PATH or --preset NAME", route.name()))
    })?;
    cfg.route = route;
    if let Some(v) = &o.variant {
        if route != Route::Meanfield {
            return Err(CliError::Usage(format!("--variant does not apply to `{}`", route.name())));
        }
        cfg.variant = VariantTag::from_name(v).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown variant {v:?}; expected closed, rabi_limit, light_coupled or damped_moments"
            ))
        })?;
    }
    if let Some(seed) = o.seed {
        cfg.stochastic.seed = seed;
    }
    if let Some(n) = o.n_atoms {
        cfg.trap.n_atoms = n;
    }
    if let Some(n) = o.trajectories {
        cfg.stochastic.trajectories = n;
    }
    if let Some(f) = o.formats() {
        cfg.formats = f;
    }
    cfg.validate()?;
    let dir = out_dir(o, cfg.out_dir.as_deref(), &cfg.name);
    let out = run_scenario(&cfg)?;
    for (stem, s) in &out.series {
        println!("{stem}: {} samples", s.len());
    }
    done(&write_scenario(&cfg, &out, dir)?)
}

fn write_curves(w: &mut ArtifactWriter, stem: &str, s: &TimeSeries) -> Result<()> {
    if let Some(c) = &s.current {
        w.write_curve(&format!("{stem}_current"), "current", &s.times, c)?;
    }
    if let Some(p) = &s.phase {
        w.write_curve(&format!("{stem}_phase"), "phase", &s.times, p)?;
    }
    Ok(())
}

pub fn fig3(o: &Options) -> Result<()> {
    reject(o, "fig3", "--variant")?;
    let variants = match o.variant.as_deref() {
        None => vec![Fig3Variant::A, Fig3Variant::B],
        Some(v) => vec![Fig3Variant::from_name(v)
            .ok_or_else(|| CliError::Usage(format!("fig3 --variant must be a or b, got {v:?}")))?],
    };
    let mut manifest = Manifest::new("fig3", Route::Perturbative.name());
    let mut runs = Vec::new();
    for v in variants {
        let stem = format!("fig3{}", v.name());
        let cfg = preset(&stem)?;
        let s = run_fig3(v)?;
        let current = s.current.as_deref().unwrap_or_default();
        let period = s
            .phase
            .as_deref()
            .and_then(|p| modulation_period(&s.times, p));
        print!("{stem}: I(0) = {:.6}", current.first().copied().unwrap_or(f64::NAN));
        match period {
            Some(p) => {
                println!(", modulation period {p:.5} s");
                manifest.parameters.insert(format!("{stem}.modulation_period"), fmt_f64(p));
            }
            None => println!(),
        }
        manifest.parameters.insert(format!("{stem}.config"), cfg.to_ini());
        runs.push((stem, s, cfg));
    }
    if let [(_, _, cfg)] = runs.as_slice() {
        manifest.config = cfg.to_ini();
    }
    let dir = out_dir(o, None, "fig3");
    let mut w = ArtifactWriter::new(dir, &o.formats().unwrap_or(FIGURE_FORMATS.to_vec()), manifest)?;
    for (stem, s, _) in &runs {
        w.write_series(stem, s)?;
        write_curves(&mut w, stem, s)?;
    }
    done(&w.finish()?)
}

pub fn fig4(o: &Options) -> Result<()> {
    reject(o, "fig4", "")?;
    let mut manifest = Manifest::new("fig4", Route::Meanfield.name());
    manifest.config = preset("fig4")?.to_ini();
    manifest
        .parameters
        .insert("config_reproduces".to_string(), "caption".to_string());
    for p in [Fig4Params::caption(), Fig4Params::text()] {
        manifest.parameters.insert(format!("{}.params", p.label), json(&p)?);
    }
    manifest.dt = Some(Fig4Params::caption().dt);
    let runs = run_fig4()?;
    let dir = out_dir(o, None, "fig4");
    let mut w = ArtifactWriter::new(dir, &o.formats().unwrap_or(FIGURE_FORMATS.to_vec()), manifest)?;
    for (label, s) in &runs {
        let stem = format!("fig4_{label}");
        if let Some(rate) = s.meta.get("envelope_decay_rate") {
            println!("{stem}: envelope decay rate {rate}");
        }
        w.write_series(&stem, s)?;
        write_curves(&mut w, &stem, s)?;
    }
    done(&w.finish()?)
}

pub fn fig5(o: &Options) -> Result<()> {
    reject(o, "fig5", "--n-atoms --trajectories --seed")?;
    let p = Fig5Params::new(o.n_atoms.unwrap_or(10));
    let n = o.trajectories.unwrap_or(5);
    if n == 0 {
        return Err(CliError::Usage("--trajectories must be at least 1".to_string()));
    }
    let base = o.seed.unwrap_or(0);
    let seeds: Vec<u64> = (0..n as u64).map(|i| base.wrapping_add(i)).collect();
    let out = run_fig5_with(&p, &seeds)?;

    let mut manifest = Manifest::new("fig5", Route::Trajectory.name());
    manifest.dt = Some(p.dt);
    manifest.parameters.insert("params".to_string(), json(&p)?);
    manifest
        .parameters
        .insert("seeding".to_string(), "one seed per trajectory, stream 0".to_string());
    let dir = out_dir(o, None, "fig5");
    let mut w = ArtifactWriter::new(dir, &o.formats().unwrap_or(FIGURE_FORMATS.to_vec()), manifest)?;
    for (i, (s, r)) in out.trajectories.iter().zip(&out.records).enumerate() {
        let stem = format!("fig5_trajectory_{i:03}");
        w.write_series(&stem, s)?;
        write_curves(&mut w, &stem, s)?;
        w.write_record(&format!("fig5_record_{i:03}"), r)?;
    }
    for (stem, s) in [("fig5_average", &out.average), ("fig5_master", &out.master)] {
        w.write_series(stem, s)?;
        write_curves(&mut w, stem, s)?;
    }
    println!("fig5: N = {}, {} trajectories, seeds {}..={}", p.n_atoms, n, seeds[0], seeds[n - 1]);
    done(&w.finish()?)
}

pub fn sweep(o: &Options) -> Result<()> {
    reject(o, "sweep", "--n-atoms")?;
    let mut grid = SweepGrid::default();
    if let Some(n) = o.n_atoms {
        grid.n_atoms = n;
    }
    let table = regime_sweep(&grid);

    print!("{:>10}", "kN/W \\ e/k");
    for e in &grid.eta_over_kappa {
        print!("{e:>9}");
    }
    println!();
    for &k in &grid.kappa_n_over_omega {
        print!("{k:>10}");
        for c in table.row(k) {
            match &c.order {
                Ok(v) => print!("{v:>9.4}"),
                Err(_) => print!("{:>9}", "error"),
            }
        }
        println!();
    }
    let monotone = table.is_monotone(grid.resolution());
    println!("non-increasing toward eta = kappa (within {:.4}): {monotone}", grid.resolution());

    let mut manifest = Manifest::new("sweep", Route::Meanfield.name());
    manifest.parameters.insert("grid".to_string(), json(&grid)?);
    manifest.parameters.insert("monotone".to_string(), monotone.to_string());
    manifest
        .parameters
        .insert("resolution".to_string(), fmt_f64(grid.resolution()));
    let dir = out_dir(o, None, "sweep");
    let mut w = ArtifactWriter::new(dir, &o.formats().unwrap_or(FIGURE_FORMATS.to_vec()), manifest)?;
    if w.wants(Format::Csv) {
        w.write_text("sweep.csv", &table.to_csv())?;
    }
    if w.wants(Format::Json) {
        w.write_text("sweep.json", &(json(&table)? + "\n"))?;
    }
    if w.wants(Format::Svg) {
        let rows: Vec<(String, Vec<f64>)> = grid
            .kappa_n_over_omega
            .iter()
            .filter_map(|&k| {
                let row: Option<Vec<f64>> = table.row(k).iter().map(|c| c.order.clone().ok()).collect();
                row.map(|r| (format!("kN/W = {k}"), r))
            })
            .collect();
        let channels: Vec<(String, &[f64])> = rows.iter().map(|(n, r)| (n.clone(), r.as_slice())).collect();
        w.write_text("sweep.svg", &svg_plot("sweep — order parameter vs eta/kappa", &grid.eta_over_kappa, &channels))?;
    }
    done(&w.finish()?)?;

    let failed: Vec<String> = table
        .cells
        .iter()
        .filter_map(|c| {
            c.order
                .as_ref()
                .err()
                .map(|e| format!("({}, {}): {e}", c.kappa_n_over_omega, c.eta_over_kappa))
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{} sweep cells failed:\n  {}", failed.len(), failed.join("\n  "))))
    }
}

pub fn validate(o: &Options) -> Result<()> {
    reject(o, "validate", "--config --n-atoms")?;
    let configs: Vec<RunConfig> = match load_config(o)? {
        Some(cfg) => vec![cfg],
        None => presets::names().into_iter().map(preset).collect::<Result<_>>()?,
    };
    let mut failed = Vec::new();
    for mut cfg in configs {
        if let Some(n) = o.n_atoms {
            cfg.trap.n_atoms = n;
        }
        cfg.validate()?;
        let report = cross_validate(&cfg);
        print!("{}", report.to_text());
        if !report.all_passed() {
            failed.push(cfg.name.clone());
        }
    }
    if failed.is_empty() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(CliError::Validation(format!("cross-validation failed for {}", failed.join(", "))))
    }
}

pub fn presets(name: Option<&str>) -> Result<()> {
    match name {
        Some(n) => {
            let text = presets::text(n).ok_or_else(|| {
                CliError::Usage(format!("unknown preset {n:?}; available: {}", presets::names().join(", ")))
            })?;
            print!("{text}");
        }
        None => {
            for (n, text) in presets::PRESETS {
                let about = text.lines().next().unwrap_or("").trim_start_matches('#').trim();
                println!("{n:<8} {about}");
            }
        }
    }
    Ok(())
}
