//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion.
//!
//! `SUNLADDER_ACCEPTANCE=3,6` restricts the run to the listed criteria.
//! Criteria listed in `KNOWN_RED` are reported as FAIL but do not fail the
//! target; any other failure does.

mod common;

use std::time::Instant;

use common::*;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sunladder::algebra::{bond_matrix, gell_mann};
use sunladder::analysis::{asymptotic_freedom_fit, estimate_xi, ScalingPoint, XiEstimate, XiOptions};
use sunladder::ed::dimer::{quench_false_vacuum, QuenchOptions};
use sunladder::ed::hamiltonian::Hamiltonian;
use sunladder::ed::krylov::{krylov_propagate, KrylovOptions};
use sunladder::ed::sector::{all_charge_vectors, enumerate_sector, SectorBasis};
use sunladder::ed::{adiabatic_gap_scan, RampSpec, Wavefunction};
use sunladder::io::write_observables;
use sunladder::lattice::{build_lattice, Boundary, LadderGeometry};
use sunladder::qmc::{disorder_ensemble, realization_seeds, run_chain, RunSpec};

/// Criteria that cannot be met at desk scale; see the project notes.
const KNOWN_RED: &[usize] = &[3, 6];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2, 3, 4] {
        let basis = gell_mann(n).unwrap();
        let g = basis.generators();
        for (a, ga) in g.iter().enumerate() {
            worst = worst.max((ga - ga.adjoint()).norm());
            for (b, gb) in g.iter().enumerate() {
                let t: C = (ga * gb).diagonal().iter().sum();
                worst = worst.max((t - C::new(if a == b { 2.0 } else { 0.0 }, 0.0)).norm());
            }
        }
        let cas = basis.casimir();
        let want = 2.0 * (n * n - 1) as f64 / n as f64;
        worst = worst.max((cas - nalgebra::DMatrix::<C>::identity(n, n) * C::new(want, 0.0)).norm());
        let eig = sorted_eigenvalues(&bond_matrix(n).unwrap().matrix);
        let nf = n as f64;
        worst = worst.max((eig[0] - (-2.0 * nf + 2.0 / nf)).abs());
        for e in &eig[1..] {
            worst = worst.max((e - 2.0 / nf).abs());
        }
        let oracle = sorted_eigenvalues(&bond_ref(n));
        for (a, b) in eig.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst < 1e-12, format!("max deviation {worst:.2e} (tol 1e-12)"))
}

fn criterion_2() -> Outcome {
    let g = build_lattice(2, 2, Boundary::Open).unwrap();
    let mut ours = Vec::new();
    for q in all_charge_vectors(&g, 2) {
        let s = enumerate_sector(&g, 2, &q).unwrap();
        ours.extend(sorted_eigenvalues(&Hamiltonian::uniform(&s, &g, 1.0).unwrap().to_dense()));
    }
    ours.sort_by(|a, b| a.total_cmp(b));
    let heis: Vec<f64> = sorted_eigenvalues(&heisenberg(&g)).into_iter().map(|e| 4.0 * e).collect();
    let worst = ours.iter().zip(&heis).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(ours.len() == 16 && worst < 1e-10, format!("16 levels, max deviation {worst:.2e} (tol 1e-10)"))
}

fn criterion_3() -> Outcome {
    let g = build_lattice(14, 1, Boundary::Open).unwrap();
    let ramp = RampSpec::uniform_grid(&g, 1.0, 21).unwrap();
    let scan = adiabatic_gap_scan(&g, 3, &ramp, &Default::default()).unwrap();
    let positive = scan.rows.iter().all(|r| r.gap > 0.0);
    let in_band = (0.3..=1.2).contains(&scan.min_gap);
    outcome(
        scan.rows.len() == 21 && positive && in_band,
        format!(
            "dim {}, all gaps positive: {positive}, min gap {:.4} J at tau = {:.2} (band [0.3, 1.2] J)",
            scan.dim, scan.min_gap, scan.tau_at_min
        ),
    )
}

fn criterion_4() -> Outcome {
    let g = build_lattice(14, 1, Boundary::Open).unwrap();
    let q = quench_false_vacuum(&g, 3, 1.0, &QuenchOptions::default()).unwrap();
    let d0 = q.total[0];
    let exact = (d0 - 112.0 / 3.0).abs() < 1e-10;
    let half = 0.5 * d0;
    let dip = q.total.iter().position(|&d| d < half);
    let revival = dip.and_then(|k| q.total[k..].iter().position(|&d| d > half).map(|r| r + k));
    let t_end = *q.times.last().unwrap();
    let ok = exact && revival.is_some() && t_end <= 20.0 + 1e-9 && q.norm_drift < 1e-6;
    outcome(
        ok,
        format!(
            "D(0) = {d0:.12}, below D(0)/2 at t = {}, back above at t = {}, norm drift {:.1e}",
            dip.map_or("-".into(), |k| format!("{:.2}", q.times[k])),
            revival.map_or("-".into(), |k| format!("{:.2}", q.times[k])),
            q.norm_drift
        ),
    )
}

fn criterion_5() -> Outcome {
    let cases = [(build_lattice(2, 1, Boundary::Open).unwrap(), false), (build_lattice(4, 1, Boundary::Periodic).unwrap(), true)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (g, periodic) in &cases {
        let h = dense_hamiltonian(g, 3, 1.0);
        for beta in [4.0, 8.0] {
            let t = Thermal::new(&h, beta);
            let mut spec = RunSpec::new(g.clone(), 3, 1.0, beta, 100_000, 2024);
            spec.thermalization = 10_000;
            let s = run_chain(&spec).unwrap();
            let e = s.estimate("energy").unwrap();
            let c = s.estimate("C(1)").unwrap();
            let (ee, ce) = (t.energy(), equal_time_corr(&t, g, 3, 1, *periodic));
            let pass = within_3sigma(e.value, e.error, ee) && within_3sigma(c.value, c.error, ce);
            ok &= pass;
            let dev = |v: f64, err: f64, want: f64| {
                if err > 0.0 {
                    format!("{:.3}σ", (v - want).abs() / err)
                } else {
                    format!("|Δ| {:.1e} with zero error", (v - want).abs())
                }
            };
            parts.push(format!(
                "{}-site β={beta}: E {}, C(1) {}",
                g.n_sites(),
                dev(e.value, e.error, ee),
                dev(c.value, c.error, ce),
            ));
        }
    }
    outcome(ok, parts.join("; "))
}

struct XiRun {
    n: usize,
    est: XiEstimate,
}

fn xi_runs() -> Vec<XiRun> {
    [2usize, 4, 6]
        .par_iter()
        .map(|&n| {
            let g = build_lattice(192, n, Boundary::Periodic).unwrap();
            let mut spec = RunSpec::new(g, 3, 1.0, 10.0, 20_000, 1000 + n as u64);
            spec.thermalization = 5_000;
            let s = run_chain(&spec).unwrap();
            XiRun { n, est: estimate_xi(&s.static_correlation(), &XiOptions::default()).unwrap() }
        })
        .collect()
}

fn criterion_6(runs: &[XiRun]) -> Outcome {
    let xi: Vec<(f64, f64)> = runs.iter().map(|r| (r.est.xi_tail, r.est.xi_tail_err)).collect();
    let separated = |a: (f64, f64), b: (f64, f64)| b.0 - a.0 > 2.0 * (a.1 * a.1 + b.1 * b.1).sqrt();
    let ordered = separated(xi[0], xi[1]) && separated(xi[1], xi[2]);
    let window = (7.0..=13.0).contains(&xi[2].0);
    let pts: Vec<ScalingPoint> = runs.iter().map(|r| ScalingPoint { n: r.n, xi: r.est.xi_tail, err: r.est.xi_tail_err }).collect();
    let fit = asymptotic_freedom_fit(&pts, 3).unwrap();
    let slope_ok = fit.slope > 3.0 * fit.slope_err;
    let listing: Vec<String> = runs.iter().map(|r| format!("xi({}) = {:.3} ± {:.3}", r.n, r.est.xi_tail, r.est.xi_tail_err)).collect();
    outcome(
        ordered && window && slope_ok,
        format!(
            "{}; ordered at 2σ: {ordered}; xi(6) in [7, 13]: {window}; slope {:.4} ± {:.4} ({:.1}σ)",
            listing.join(", "),
            fit.slope,
            fit.slope_err,
            fit.slope / fit.slope_err
        ),
    )
}

fn criterion_7(runs: &[XiRun]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in runs.iter().filter(|r| r.n <= 4) {
        let d = r.est.discrepancy;
        ok &= d < 0.15;
        parts.push(format!("n={}: xi {:.3}, xi2 {:.3}, |xi-xi2|/xi = {d:.3}", r.n, r.est.xi_tail, r.est.xi_second_moment));
    }
    outcome(ok, format!("{} (tol 0.15)", parts.join("; ")))
}

fn criterion_8() -> Outcome {
    let g = build_lattice(192, 4, Boundary::Periodic).unwrap();
    let mut spec = RunSpec::new(g, 3, 1.0, 10.0, 6_000, 0);
    spec.thermalization = 2_000;
    let seeds = realization_seeds(500, 10);
    let clean = disorder_ensemble(&spec, 0.0, &seeds, &XiOptions::default()).unwrap();
    let dirty = disorder_ensemble(&spec, 0.01, &seeds, &XiOptions::default()).unwrap();
    let sigma = (clean.xi_err.powi(2) + dirty.xi_err.powi(2)).sqrt();
    let ok = dirty.succeeded >= 10 && dirty.xi_mean >= clean.xi_mean - sigma;
    outcome(
        ok,
        format!(
            "xi(p=0) = {:.3} ± {:.3} ({} ok), xi(p=0.01) = {:.3} ± {:.3} ({} ok), combined σ {:.3}",
            clean.xi_mean, clean.xi_err, clean.succeeded, dirty.xi_mean, dirty.xi_err, dirty.succeeded, sigma
        ),
    )
}

fn positions(s: &SectorBasis, n: usize, g: &LadderGeometry) -> Vec<usize> {
    (0..s.dim())
        .map(|i| {
            let mut colors = vec![0u8; g.n_sites()];
            for (&site, &c) in s.active_sites().iter().zip(&s.state(i).colors) {
                colors[site] = c;
            }
            full_index(&colors, n)
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(9);

    // sector closure and hermiticity against the dense oracle
    let g = build_lattice(4, 1, Boundary::Periodic).unwrap();
    let oracle = dense_hamiltonian(&g, 3, 1.0);
    let mut closure = 0.0f64;
    let mut herm = 0.0f64;
    for q in all_charge_vectors(&g, 3) {
        let s = enumerate_sector(&g, 3, &q).unwrap();
        let pos = positions(&s, 3, &g);
        let h = Hamiltonian::uniform(&s, &g, 1.0).unwrap().with_chemical_potentials(0.3, -0.2).unwrap().to_dense();
        herm = herm.max((&h - h.transpose()).amax());
        for (c, &pc) in pos.iter().enumerate() {
            let leaked: f64 = (0..oracle.nrows()).filter(|r| !pos.contains(r)).map(|r| oracle[(r, pc)].abs()).sum();
            closure = closure.max(leaked);
            for (r, &pr) in pos.iter().enumerate() {
                if r != c {
                    closure = closure.max((h[(r, c)] - oracle[(pr, pc)]).abs());
                }
            }
        }
    }
    let pass = closure < 1e-12 && herm < 1e-12;
    ok &= pass;
    parts.push(format!("closure {closure:.1e}, hermiticity {herm:.1e}"));

    // SSE validity
    let mut spec = RunSpec::new(build_lattice(8, 2, Boundary::Periodic).unwrap(), 3, 1.0, 4.0, 10_000, 3);
    spec.thermalization = 100;
    spec.debug_checks = true;
    let valid = run_chain(&spec).is_ok();
    ok &= valid;
    parts.push(format!("1e4 checked sweeps valid: {valid}"));

    // Krylov against dense exponentiation
    let g6 = build_lattice(6, 1, Boundary::Open).unwrap();
    let s6 = enumerate_sector(&g6, 3, &[0, 0, 0]).unwrap();
    let pos = positions(&s6, 3, &g6);
    let full = dense_hamiltonian(&g6, 3, 1.0);
    let mut amps: Vec<C> = (0..s6.dim()).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|z| *z /= norm);
    let h6 = Hamiltonian::uniform(&s6, &g6, 1.0).unwrap();
    let traj = krylov_propagate(&Wavefunction::new(&s6, amps.clone()).unwrap(), &h6, 0.1, 20, &KrylovOptions::default()).unwrap();
    let mut psi0 = vec![C::new(0.0, 0.0); full.nrows()];
    for (a, &p) in amps.iter().zip(&pos) {
        psi0[p] = *a;
    }
    let exact = DVector::from_vec(expm_apply(&full, &psi0, 2.0));
    let kry = traj.last().unwrap();
    let dev = kry.amplitudes.iter().zip(&pos).map(|(a, &p)| (a - exact[p]).norm()).fold(0.0, f64::max);
    ok &= dev < 1e-8;
    parts.push(format!("Krylov vs dense {dev:.1e}"));

    // determinism at one thread
    let dir = tempfile::tempdir().unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut spec = RunSpec::new(build_lattice(16, 2, Boundary::Periodic).unwrap(), 3, 1.0, 3.0, 2000, 11);
    spec.thermalization = 500;
    let bytes: Vec<Vec<u8>> = (0..2)
        .map(|k| {
            let p = dir.path().join(format!("{k}.csv"));
            let s = pool.install(|| run_chain(&spec)).unwrap();
            write_observables(&p, "acceptance", &s).unwrap();
            std::fs::read(p).unwrap()
        })
        .collect();
    let same = bytes[0] == bytes[1];
    ok &= same;
    parts.push(format!("byte-identical reruns: {same}"));
    outcome(ok, parts.join("; "))
}

fn main() {
    let only: Option<Vec<usize>> =
        std::env::var("SUNLADDER_ACCEPTANCE").ok().map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let want = |k: usize| only.as_ref().is_none_or(|o| o.contains(&k));
    let mut unexpected = Vec::new();
    let mut report = |k: usize, run: &dyn Fn() -> Outcome| {
        if !want(k) {
            return;
        }
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let known = if !o.pass && KNOWN_RED.contains(&k) { " [known deviation]" } else { "" };
        println!("criterion {k}: {tag}{known} ({secs:.0} s) {}", o.detail);
        if !o.pass && !KNOWN_RED.contains(&k) {
            unexpected.push(k);
        }
    };
    report(1, &criterion_1);
    report(2, &criterion_2);
    report(3, &criterion_3);
    report(4, &criterion_4);
    report(5, &criterion_5);
    if want(6) || want(7) {
        let runs = xi_runs();
        report(6, &|| criterion_6(&runs));
        report(7, &|| criterion_7(&runs));
    }
    report(8, &criterion_8);
    report(9, &criterion_9);
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
