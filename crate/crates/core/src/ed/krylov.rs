//! Real-time propagation `ψ(t+dt) = exp(−iH dt) ψ(t)` in a small Lanczos
//! subspace, with step halving when the a-posteriori error estimate is too
//! large.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::Hamiltonian;
use super::Wavefunction;
use crate::error::{Error, Result};

const REDUCE_CHUNK: usize = 8192;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KrylovOptions {
    pub krylov_dim: usize,
    /// Local error bound per step (absolute, on a unit-norm state).
    pub tolerance: f64,
    /// Largest number of step halvings before a step is rejected.
    pub max_halvings: u32,
    /// Upper bound on `dt · max|bond weight|`.
    pub max_dt_j: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions { krylov_dim: 12, tolerance: 1e-11, max_halvings: 10, max_dt_j: 0.1 }
    }
}

pub(crate) fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let partial: Vec<Complex64> = a
        .par_chunks(REDUCE_CHUNK)
        .zip(b.par_chunks(REDUCE_CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.conj() * q).sum::<Complex64>())
        .collect();
    partial.iter().sum()
}

pub(crate) fn cnorm(a: &[Complex64]) -> f64 {
    cdot(a, a).re.max(0.0).sqrt()
}

fn caxpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    y.par_iter_mut().zip(x).with_min_len(REDUCE_CHUNK).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn cscale(a: &mut [Complex64], s: f64) {
    a.par_iter_mut().with_min_len(REDUCE_CHUNK).for_each(|x| *x *= s);
}

/// Outcome of one propagation step.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepInfo {
    pub substeps: usize,
    pub max_error: f64,
}

struct Subspace {
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Norm of the residual past the last basis vector (0 on breakdown).
    beta_next: f64,
    norm: f64,
}

fn build_subspace(h: &Hamiltonian, psi: &[Complex64], m: usize) -> Result<Subspace> {
    let norm = cnorm(psi);
    let mut v0 = psi.to_vec();
    cscale(&mut v0, 1.0 / norm);
    let mut basis = vec![v0];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut w = vec![Complex64::new(0.0, 0.0); psi.len()];
    let scale = h.max_weight().max(1e-300) * 1e-13;
    let mut beta_next = 0.0;
    for k in 0..m {
        h.apply_into(&basis[k], &mut w)?;
        let a = cdot(&basis[k], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = cdot(v, &w);
                caxpy(&mut w, -c, v);
            }
        }
        let b = cnorm(&w);
        if b < scale {
            beta_next = 0.0;
            break;
        }
        if k + 1 == m {
            beta_next = b;
            break;
        }
        beta.push(b);
        let mut next = w.clone();
        cscale(&mut next, 1.0 / b);
        basis.push(next);
    }
    Ok(Subspace { basis, alpha, beta, beta_next, norm })
}

/// `exp(−i T dt) e₁` for the tridiagonal `T`.
fn exp_tridiagonal(alpha: &[f64], beta: &[f64], dt: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for k in 0..m {
        t[(k, k)] = alpha[k];
        if k + 1 < m {
            t[(k, k + 1)] = beta[k];
            t[(k + 1, k)] = beta[k];
        }
    }
    let eig = SymmetricEigen::new(t);
    let q = &eig.eigenvectors;
    (0..m)
        .map(|r| {
            (0..m)
                .map(|s| Complex64::from_polar(1.0, -eig.eigenvalues[s] * dt) * (q[(r, s)] * q[(0, s)]))
                .sum()
        })
        .collect()
}

fn step_recursive(
    h: &Hamiltonian,
    psi: &mut Vec<Complex64>,
    dt: f64,
    depth: u32,
    opts: &KrylovOptions,
    info: &mut StepInfo,
) -> Result<()> {
    let sub = build_subspace(h, psi, opts.krylov_dim.max(2))?;
    let c = exp_tridiagonal(&sub.alpha, &sub.beta, dt);
    let error = sub.beta_next * c.last().map(|x| x.norm()).unwrap_or(0.0);
    if error > opts.tolerance {
        if depth >= opts.max_halvings {
            return Err(Error::StepRejected { error, tolerance: opts.tolerance });
        }
        step_recursive(h, psi, 0.5 * dt, depth + 1, opts, info)?;
        return step_recursive(h, psi, 0.5 * dt, depth + 1, opts, info);
    }
    info.substeps += 1;
    info.max_error = info.max_error.max(error);
    psi.par_iter_mut().with_min_len(REDUCE_CHUNK).for_each(|x| *x = Complex64::new(0.0, 0.0));
    for (v, ck) in sub.basis.iter().zip(&c) {
        caxpy(psi, ck * sub.norm, v);
    }
    Ok(())
}

/// One step of length `dt`, refined by halving where needed.
pub fn krylov_step(h: &Hamiltonian, psi: &mut Vec<Complex64>, dt: f64, opts: &KrylovOptions) -> Result<StepInfo> {
    if psi.len() != h.dim() {
        return Err(Error::SectorMismatch);
    }
    let mut info = StepInfo::default();
    step_recursive(h, psi, dt, 0, opts, &mut info)?;
    Ok(info)
}

/// Propagates `steps` steps of length `dt`, calling `observe(step, ψ)` on
/// the initial state and after every step.
pub fn propagate_with<F>(
    h: &Hamiltonian,
    initial: &Wavefunction,
    dt: f64,
    steps: usize,
    opts: &KrylovOptions,
    mut observe: F,
) -> Result<Wavefunction>
where
    F: FnMut(usize, &[Complex64], StepInfo) -> Result<()>,
{
    if initial.amplitudes.len() != h.dim() || initial.charge != h.sector().charge() {
        return Err(Error::SectorMismatch);
    }
    if !(dt > 0.0) || dt * h.max_weight() > opts.max_dt_j + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "time step dt={dt} outside (0, {}/J]",
            opts.max_dt_j
        )));
    }
    let n0 = cnorm(&initial.amplitudes);
    if (n0 - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!("initial state not normalized (norm {n0})")));
    }
    let mut psi = initial.amplitudes.clone();
    observe(0, &psi, StepInfo::default())?;
    for step in 1..=steps {
        let info = krylov_step(h, &mut psi, dt, opts)?;
        observe(step, &psi, info)?;
    }
    Ok(Wavefunction { charge: initial.charge.clone(), amplitudes: psi })
}

/// Full trajectory (initial state included), for small systems.
pub fn krylov_propagate(
    initial: &Wavefunction,
    h: &Hamiltonian,
    dt: f64,
    steps: usize,
    opts: &KrylovOptions,
) -> Result<Vec<Wavefunction>> {
    let mut out = Vec::with_capacity(steps + 1);
    propagate_with(h, initial, dt, steps, opts, |_, psi, _| {
        out.push(Wavefunction { charge: initial.charge.clone(), amplitudes: psi.to_vec() });
        Ok(())
    })?;
    Ok(out)
}

/// `⟨ψ|H|ψ⟩` (real for Hermitian `H`).
pub fn energy_expectation(h: &Hamiltonian, psi: &[Complex64]) -> Result<f64> {
    let hpsi = h.apply(psi)?;
    Ok(cdot(psi, &hpsi).re)
}
