//! Lanczos with full reorthogonalization, explicit restarts and deflation.
//!
//! Eigenpairs are found one at a time; the search for pair `j` is kept
//! orthogonal to the converged pairs `0..j`, so degenerate levels are
//! returned with their full multiplicity.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Krylov dimension before an explicit restart.
    pub max_krylov: usize,
    /// Restarts allowed per eigenpair before giving up.
    pub max_restarts: usize,
    /// Required `‖Hψ − Eψ‖`, absolute energy units.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { max_krylov: 80, max_restarts: 60, tolerance: 1e-8, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub energy: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

const REDUCE_CHUNK: usize = 8192;

/// Dot product with a fixed chunked reduction order, independent of the
/// number of threads.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(REDUCE_CHUNK)
        .zip(b.par_chunks(REDUCE_CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    y.par_iter_mut().zip(x).with_min_len(REDUCE_CHUNK).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &mut [f64], s: f64) {
    a.par_iter_mut().with_min_len(REDUCE_CHUNK).for_each(|x| *x *= s);
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            axpy(w, -c, v);
        }
    }
}

/// Lowest eigenpair of the tridiagonal matrix `(alpha, beta)`.
fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
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
    let (imin, emin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &e)| if e < acc.1 { (i, e) } else { acc });
    (emin, eig.eigenvectors.column(imin).iter().copied().collect())
}

/// The `k` lowest eigenpairs of the real symmetric operator `matvec`.
///
/// `guesses[j]`, when given, seeds the search for pair `j`.
pub fn lowest_eigenpairs<F>(
    matvec: F,
    dim: usize,
    k: usize,
    guesses: &[Vec<f64>],
    opts: &LanczosOptions,
) -> Result<Vec<EigenPair>>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    if k == 0 || dim < k {
        return Err(Error::InvalidParameter(format!("cannot extract {k} eigenpairs from dimension {dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut found: Vec<EigenPair> = Vec::with_capacity(k);
    let mut found_vecs: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut hw = vec![0.0; dim];
    let mut total_iters = 0;

    for target in 0..k {
        let mut start: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Some(g) = guesses.get(target).filter(|g| g.len() == dim) {
            let gn = norm(g).max(f64::MIN_POSITIVE);
            let sn = norm(&start);
            for (s, gi) in start.iter_mut().zip(g) {
                *s = gi / gn + 1e-3 * *s / sn;
            }
        }
        let mut last_residual = f64::INFINITY;
        let mut converged = None;

        for _restart in 0..=opts.max_restarts {
            orthogonalize(&mut start, &found_vecs);
            let sn = norm(&start);
            if sn == 0.0 {
                return Err(Error::Internal("Lanczos start vector vanished after deflation".into()));
            }
            scale(&mut start, 1.0 / sn);

            let mut basis: Vec<Vec<f64>> = vec![start.clone()];
            let mut alpha = Vec::new();
            let mut beta: Vec<f64> = Vec::new();
            let mut ritz = (0.0, vec![1.0]);
            let max_m = opts.max_krylov.min(dim - found.len()).max(1);

            for m in 0..max_m {
                total_iters += 1;
                matvec(&basis[m], &mut hw)?;
                let a = dot(&basis[m], &hw);
                alpha.push(a);
                let mut w = hw.clone();
                orthogonalize(&mut w, &basis);
                orthogonalize(&mut w, &found_vecs);
                let b = norm(&w);

                let check = m + 1 == max_m || m % 4 == 3 || b < 1e-12 * a.abs().max(1.0);
                if check {
                    ritz = tridiagonal_lowest(&alpha, &beta);
                    let estimate = b * ritz.1.last().unwrap().abs();
                    if estimate < 0.05 * opts.tolerance || b < 1e-12 * a.abs().max(1.0) {
                        break;
                    }
                }
                if m + 1 == max_m {
                    break;
                }
                beta.push(b);
                scale(&mut w, 1.0 / b);
                basis.push(w);
            }

            // Ritz vector and its true residual
            let (_, s) = ritz;
            let mut y = vec![0.0; dim];
            for (v, &c) in basis.iter().zip(&s) {
                axpy(&mut y, c, v);
            }
            orthogonalize(&mut y, &found_vecs);
            let yn = norm(&y);
            scale(&mut y, 1.0 / yn);
            matvec(&y, &mut hw)?;
            let energy = dot(&y, &hw);
            axpy(&mut hw, -energy, &y);
            last_residual = norm(&hw);
            if last_residual <= opts.tolerance {
                converged = Some(EigenPair { energy, vector: y, residual: last_residual });
                break;
            }
            start = y;
        }

        match converged {
            Some(pair) => {
                found_vecs.push(pair.vector.clone());
                found.push(pair);
            }
            None => {
                return Err(Error::NonConvergence { iterations: total_iters, residual: last_residual });
            }
        }
    }

    found.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(found)
}

/// Groups sorted energies into `(energy, multiplicity)` within `tol`.
pub fn multiplicities(energies: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &e in energies {
        match out.last_mut() {
            Some((e0, m)) if (e - *e0).abs() <= tol => *m += 1,
            _ => out.push((e, 1)),
        }
    }
    out
}
