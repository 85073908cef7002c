use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sunladder::algebra::{same_rep_coupling, superexchange_coupling, CouplingParams};
use sunladder::analysis::{
    estimate_xi, fit_with_exclusion, quench_summary, SaturationRule, ScalingPoint, XiEstimate, XiOptions,
};
use sunladder::ed::dimer::{quench_false_vacuum, QuenchOptions};
use sunladder::ed::{adiabatic_gap_scan, enumerate_sector, lanczos_spectrum, ChemicalPotentials, GapRow, GapScan, LanczosOptions, RampSpec};
use sunladder::io::{self, fmt_f64};
use sunladder::lattice::{build_lattice, Boundary};
use sunladder::qmc::{disorder_ensemble, realization_seeds, run_chain, ObservableSeries, RunSpec};

use crate::config::{CouplingConfig, DefectSweepConfig, QuenchConfig, SpectrumConfig, XiConfig};
use crate::CliError;

/// An output directory plus the provenance line stamped on every CSV.
pub struct Output {
    dir: PathBuf,
    command: &'static str,
    comment: String,
    threads: usize,
}

impl Output {
    pub fn create(dir: &Path, command: &'static str, threads: usize) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let comment = format!("sunladder {} {command} --config config.toml", env!("CARGO_PKG_VERSION"));
        Ok(Output { dir: dir.to_path_buf(), command, comment, threads })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn config<T: Serialize>(&self, cfg: &T) -> Result<(), CliError> {
        let body = toml::to_string(cfg).map_err(|e| CliError::Io(format!("serializing config: {e}")))?;
        let text = format!("# resolved configuration for `sunladder {}`\n{body}", self.command);
        std::fs::write(self.path("config.toml"), text)?;
        Ok(())
    }

    fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        Ok(io::write_csv(self.path(name), &self.comment, header, rows)?)
    }

    fn metadata<T: Serialize>(&self, cfg: &T, results: Value) -> Result<(), CliError> {
        let meta = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "threads": self.threads,
            "config": cfg,
            "results": results,
        });
        Ok(io::write_json(self.path("metadata.json"), &meta)?)
    }
}

pub fn spectrum(cfg: &SpectrumConfig, out: &Output) -> Result<(), CliError> {
    out.config(cfg)?;
    let g = build_lattice(cfg.length, cfg.legs, cfg.boundary)?;
    let ramp = match &cfg.tau_grid {
        Some(grid) => RampSpec::new(grid.clone(), cfg.j, g.dimer_bonds())?,
        None => RampSpec::uniform_grid(&g, cfg.j, cfg.tau_points)?,
    };
    let opts = LanczosOptions { seed: cfg.seed, ..Default::default() };
    let charge = cfg.charge.clone().unwrap_or_else(|| vec![0; cfg.n_colors]);
    let mu = ChemicalPotentials { mu3: cfg.mu3, mu8: cfg.mu8 };
    let scan = if charge.iter().all(|&q| q == 0) && mu == ChemicalPotentials::default() {
        adiabatic_gap_scan(&g, cfg.n_colors, &ramp, &opts)?
    } else {
        let sector = enumerate_sector(&g, cfg.n_colors, &charge)?;
        let k = sector.dim().min(2);
        let mut rows = Vec::new();
        for &tau in &ramp.tau_grid {
            let sp = lanczos_spectrum(&sector, &g, &ramp, tau, k, mu, &opts)?;
            let e0 = sp.levels[0].energy;
            let e1 = sp.levels.get(1).map_or(f64::NAN, |l| l.energy);
            rows.push(GapRow { tau, e0, e1, gap: e1 - e0 });
        }
        let (tau_at_min, min_gap) =
            rows.iter().map(|r| (r.tau, r.gap)).fold((f64::NAN, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        GapScan { rows, min_gap, tau_at_min, charge: charge.clone(), dim: sector.dim() }
    };
    io::write_gap_scan(out.path("spectrum.csv"), &out.comment, &scan)?;
    out.metadata(
        cfg,
        json!({
            "sector_charge": scan.charge,
            "sector_dim": scan.dim,
            "min_gap": scan.min_gap,
            "tau_at_min": scan.tau_at_min,
            "points": scan.rows.len(),
        }),
    )?;
    println!("{} tau points, sector dim {}, min gap {:.6} at tau = {}", scan.rows.len(), scan.dim, scan.min_gap, scan.tau_at_min);
    Ok(())
}

pub fn quench(cfg: &QuenchConfig, out: &Output) -> Result<(), CliError> {
    out.config(cfg)?;
    let g = build_lattice(cfg.length, 1, Boundary::Open)?;
    let opts = QuenchOptions { dt: cfg.dt, t_max: cfg.t_max, ..Default::default() };
    let q = quench_false_vacuum(&g, cfg.n_colors, cfg.j, &opts)?;
    io::write_quench_total(out.path("quench_total.csv"), &out.comment, &q)?;
    io::write_quench_bonds(out.path("quench_bonds.csv"), &out.comment, &q)?;
    let summary = quench_summary(&q.times, &q.total, Some(&q.per_bond))?;
    out.metadata(
        cfg,
        json!({
            "sector_dim": q.dim,
            "norm_drift": q.norm_drift,
            "energy_drift": q.energy_drift,
            "summary": summary,
        }),
    )?;
    println!(
        "{} steps, D(0) = {}, norm drift {:.2e}{}",
        q.times.len(),
        fmt_f64(q.total[0]),
        q.norm_drift,
        summary.first_min_time.map_or(String::new(), |t| format!(", first minimum at t = {t:.3}"))
    );
    Ok(())
}

/// Metadata of one chain without the raw bins.
fn chain_record(s: &ObservableSeries) -> Value {
    json!({
        "run": s.run,
        "bin_width": s.bin_width,
        "discarded_measurements": s.discarded_measurements,
        "update_stats": s.stats,
        "final_capacity": s.final_capacity,
        "final_n_ops": s.final_n_ops,
        "warnings": s.warnings,
    })
}

#[allow(clippy::too_many_arguments)]
fn chain_spec(
    length: usize,
    legs: usize,
    n_colors: usize,
    j: f64,
    beta: f64,
    measurements: usize,
    thermalization: Option<usize>,
    slices: usize,
    seed: u64,
) -> Result<RunSpec, CliError> {
    let g = build_lattice(length, legs, Boundary::Periodic)?;
    let mut spec = RunSpec::new(g, n_colors, j, beta, measurements, seed);
    if let Some(t) = thermalization {
        spec.thermalization = t;
    }
    spec.slices = slices;
    Ok(spec)
}

pub fn xi(cfg: &XiConfig, out: &Output) -> Result<(), CliError> {
    out.config(cfg)?;
    let opts = XiOptions { window: cfg.window };
    // one chain per leg count, on stream = leg count
    let results: Vec<(usize, ObservableSeries, Result<XiEstimate, String>)> = cfg
        .legs
        .par_iter()
        .map(|&n| -> Result<_, CliError> {
            let mut spec =
                chain_spec(cfg.length, n, cfg.n_colors, cfg.j, cfg.beta, cfg.measurements, cfg.thermalization, cfg.slices, cfg.seed)?;
            spec.stream = n as u64;
            let series = run_chain(&spec)?;
            let est = estimate_xi(&series.static_correlation(), &opts).map_err(|e| e.to_string());
            Ok((n, series, est))
        })
        .collect::<Result<_, _>>()?;

    let mut table = Vec::new();
    let mut report = Vec::new();
    let mut points = Vec::new();
    let mut chains = Vec::new();
    for (n, series, est) in &results {
        io::write_observables(out.path(&format!("observables_n{n}.csv")), &out.comment, series)?;
        if let Ok(c) = series.static_correlation().normalized() {
            io::write_correlation(out.path(&format!("correlation_n{n}.csv")), &out.comment, &c)?;
        }
        if let Ok(c) = series.equal_time().normalized() {
            io::write_correlation(out.path(&format!("equal_time_n{n}.csv")), &out.comment, &c)?;
        }
        match est {
            Ok(e) => {
                table.push(vec![
                    n.to_string(),
                    fmt_f64(e.xi_tail),
                    fmt_f64(e.xi_tail_err),
                    fmt_f64(e.xi_second_moment),
                    fmt_f64(e.xi_second_moment_err),
                ]);
                report.extend(io::xi_report_rows(&format!("n={n}"), e));
                if n % 2 == 0 && e.xi_tail.is_finite() && e.xi_tail_err.is_finite() {
                    points.push(ScalingPoint { n: *n, xi: e.xi_tail, err: e.xi_tail_err });
                }
            }
            Err(msg) => {
                table.push(vec![n.to_string(), "NaN".into(), "NaN".into(), "NaN".into(), "NaN".into()]);
                report.push(vec![format!("n={n}:xi"), "NaN".into(), "NaN".into(), format!("failed: {msg}")]);
            }
        }
        chains.push(json!({ "legs": n, "seed": cfg.seed, "stream": n, "chain": chain_record(series), "xi": est.as_ref().ok() }));
    }
    out.csv("xi.csv", &["n", "xi", "xi_err", "xi2", "xi2_err"], &table)?;

    let rule = match (cfg.saturation.max_xi, cfg.saturation.max_chi2_dof) {
        (Some(m), _) => SaturationRule::MaxXi(m),
        (None, Some(q)) => SaturationRule::DropUntilQuality { max_chi2_dof: q },
        (None, None) => SaturationRule::None,
    };
    let fit = if points.len() < 3 {
        let note = format!("insufficient points: the scaling fit needs at least 3 even-n estimates, got {}", points.len());
        report.push(vec!["scaling_fit".into(), String::new(), String::new(), note.clone()]);
        println!("{note}");
        None
    } else {
        match fit_with_exclusion(&points, cfg.n_colors, rule) {
            Ok(f) => {
                report.extend(io::scaling_report_rows(&f));
                println!("slope {:.4} ± {:.4} over n = {:?}", f.slope, f.slope_err, f.points.iter().map(|p| p.n).collect::<Vec<_>>());
                Some(f)
            }
            Err(e) => {
                report.push(vec!["scaling_fit".into(), String::new(), String::new(), format!("skipped: {e}")]);
                None
            }
        }
    };
    io::write_fit_report(out.path("fit_report.csv"), &out.comment, &report)?;
    out.metadata(cfg, json!({ "chains": chains, "scaling_fit": fit }))?;
    for row in &table {
        println!("n = {}: xi = {} ± {}, xi2 = {} ± {}", row[0], row[1], row[2], row[3], row[4]);
    }
    Ok(())
}

pub fn defect_sweep(cfg: &DefectSweepConfig, out: &Output) -> Result<(), CliError> {
    out.config(cfg)?;
    let opts = XiOptions { window: cfg.window };
    let seeds = realization_seeds(cfg.seed, cfg.realizations);
    let mut table = Vec::new();
    let mut detail = Vec::new();
    let mut ensembles = Vec::new();
    for &p in &cfg.concentrations {
        for &n in &cfg.legs {
            let spec =
                chain_spec(cfg.length, n, cfg.n_colors, cfg.j, cfg.beta, cfg.measurements, cfg.thermalization, cfg.slices, 0)?;
            match disorder_ensemble(&spec, p, &seeds, &opts) {
                Ok(e) => {
                    table.push(vec![fmt_f64(p), n.to_string(), fmt_f64(e.xi_mean), fmt_f64(e.xi_err), e.succeeded.to_string()]);
                    for r in &e.realizations {
                        let opt = |x: Option<f64>| x.map_or_else(|| "NaN".into(), fmt_f64);
                        detail.push(vec![
                            fmt_f64(p),
                            n.to_string(),
                            r.index.to_string(),
                            r.seed.to_string(),
                            r.removed.len().to_string(),
                            opt(r.xi),
                            opt(r.xi_err),
                            opt(r.xi2),
                            r.reliable.to_string(),
                            r.error.clone().unwrap_or_default(),
                        ]);
                    }
                    println!("p = {p}, n = {n}: xi = {:.4} ± {:.4} over {} realizations", e.xi_mean, e.xi_err, e.succeeded);
                    ensembles.push(json!({ "concentration": p, "legs": n, "ensemble": e }));
                }
                Err(err) => {
                    table.push(vec![fmt_f64(p), n.to_string(), "NaN".into(), "NaN".into(), "0".into()]);
                    ensembles.push(json!({ "concentration": p, "legs": n, "error": err.to_string() }));
                }
            }
        }
    }
    out.csv("defect_sweep.csv", &["p", "n", "xi_mean", "xi_err", "n_realizations"], &table)?;
    out.csv(
        "realizations.csv",
        &["p", "n", "index", "seed", "removed", "xi", "xi_err", "xi2", "reliable", "error"],
        &detail,
    )?;
    out.metadata(cfg, json!({ "realization_seeds": seeds, "chain_stream": "realization index + 1", "ensembles": ensembles }))
}

pub fn coupling(cfg: &CouplingConfig, out: &Output) -> Result<(), CliError> {
    out.config(cfg)?;
    let mut rows = Vec::new();
    let mut poles = 0;
    for &n in &cfg.n_colors {
        for &t in &cfg.t {
            for &u in &cfg.u {
                for &v in &cfg.v {
                    let p = CouplingParams { t, u, v, n_colors: n };
                    let mut pole = Vec::new();
                    let (j, af, imp) = match superexchange_coupling(&p) {
                        Ok(s) => (fmt_f64(s.j), s.antiferromagnetic.to_string(), s.static_impurity.to_string()),
                        Err(sunladder::Error::Pole(m)) => {
                            pole.push(format!("J: {m}"));
                            (String::new(), String::new(), (2.0 * u > v && v > u).to_string())
                        }
                        Err(e) => return Err(e.into()),
                    };
                    let same = match same_rep_coupling(&p) {
                        Ok(x) => fmt_f64(x),
                        Err(sunladder::Error::Pole(m)) => {
                            pole.push(format!("same_rep: {m}"));
                            String::new()
                        }
                        Err(e) => return Err(e.into()),
                    };
                    let mut notes = Vec::new();
                    if v == u {
                        notes.push("V = U: lower boundary of the static-impurity region 2U > V > U");
                    }
                    if v == 2.0 * u {
                        notes.push("V = 2U: upper boundary of the static-impurity region 2U > V > U");
                    }
                    if !pole.is_empty() {
                        poles += 1;
                    }
                    rows.push(vec![
                        fmt_f64(t),
                        fmt_f64(u),
                        fmt_f64(v),
                        n.to_string(),
                        j,
                        af,
                        imp,
                        same,
                        pole.join("; "),
                        notes.join("; "),
                    ]);
                }
            }
        }
    }
    let header = ["t", "U", "V", "N", "J", "antiferromagnetic", "static_impurity", "J_same_rep", "pole", "note"];
    out.csv("coupling.csv", &header, &rows)?;
    out.metadata(cfg, json!({ "rows": rows.len(), "pole_rows": poles }))?;
    println!("{}", header.join(","));
    for r in &rows {
        println!("{}", r.join(","));
    }
    Ok(())
}
