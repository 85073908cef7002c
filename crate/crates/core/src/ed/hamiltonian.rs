//! Matrix-free Hamiltonian on a charge sector.
//!
//! Each bond contributes `w·Σₐ Tᵃ_x T̄ᵃ_y`, which in the particle-hole basis
//! has diagonal `w(2/N − 2δ_{c_x c_y})` and connects `|c,c⟩ → |c′,c′⟩`
//! (`c′ ≠ c`) with amplitude `−2w`. Output rows are computed by gathering,
//! so the parallel matvec is bit-reproducible for any thread count.

use std::ops::{AddAssign, Mul};

use nalgebra::DMatrix;
use num_traits::Zero;
use rayon::prelude::*;

use super::sector::SectorBasis;
use super::RampSpec;
use crate::algebra::diagonal_generator_entries;
use crate::error::{Error, Result};
use crate::lattice::{LadderGeometry, Sublattice};

const ROW_CHUNK: usize = 4096;

/// Scalars a matvec can act on (real Lanczos vectors, complex wavefunctions).
pub trait Amplitude: Copy + Send + Sync + Zero + AddAssign + Mul<f64, Output = Self> {}
impl<T> Amplitude for T where T: Copy + Send + Sync + Zero + AddAssign + Mul<f64, Output = T> {}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BondTerm {
    pub a_pos: usize,
    pub b_pos: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct Hamiltonian<'s> {
    sector: &'s SectorBasis,
    terms: Vec<BondTerm>,
    /// Geometry bond index of each term.
    bond_ids: Vec<usize>,
    /// Chemical-potential energy; constant on a charge sector.
    mu_shift: f64,
}

impl<'s> Hamiltonian<'s> {
    /// `Σ_b w_b Σₐ Tᵃ T̄ᵃ` with one weight per geometry bond.
    pub fn with_weights(sector: &'s SectorBasis, geometry: &LadderGeometry, weights: &[f64]) -> Result<Self> {
        if weights.len() != geometry.bonds().len() {
            return Err(Error::InvalidParameter(format!(
                "{} bond weights for {} bonds",
                weights.len(),
                geometry.bonds().len()
            )));
        }
        let mut terms = Vec::new();
        let mut bond_ids = Vec::new();
        for (k, (bond, &w)) in geometry.bonds().iter().zip(weights).enumerate() {
            let (a, b) = geometry.bond_ab(bond);
            let (Some((Sublattice::A, a_pos)), Some((Sublattice::B, b_pos))) = (sector.slot(a), sector.slot(b)) else {
                return Err(Error::SectorMismatch);
            };
            if w != 0.0 {
                terms.push(BondTerm { a_pos, b_pos, weight: w });
                bond_ids.push(k);
            }
        }
        Ok(Hamiltonian { sector, terms, bond_ids, mu_shift: 0.0 })
    }

    /// `H(τ) = (1−τ) J Σ_{dimer} Tᵃ T̄ᵃ + τ J Σ_{all} Tᵃ T̄ᵃ`.
    pub fn ramp(sector: &'s SectorBasis, geometry: &LadderGeometry, ramp: &RampSpec, tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParameter(format!("tau must lie in [0, 1], got {tau}")));
        }
        let mut w = vec![tau * ramp.j; geometry.bonds().len()];
        for &b in &ramp.dimer_bonds {
            let slot = w
                .get_mut(b)
                .ok_or_else(|| Error::InvalidParameter(format!("dimer bond {b} out of range")))?;
            *slot += (1.0 - tau) * ramp.j;
        }
        Self::with_weights(sector, geometry, &w)
    }

    /// Uniform `J Σ Tᵃ T̄ᵃ`.
    pub fn uniform(sector: &'s SectorBasis, geometry: &LadderGeometry, j: f64) -> Result<Self> {
        Self::with_weights(sector, geometry, &vec![j; geometry.bonds().len()])
    }

    /// Adds `−μ₃ d†λ³d − μ₈ d†λ⁸d` on every site (N = 3 only). On a B site
    /// the `N−1` fermions give `−λ_{hh}` for hole color `h`, so the total is
    /// `−Σ_m Q_m (μ₃ λ³_mm + μ₈ λ⁸_mm)`, a constant of the sector.
    pub fn with_chemical_potentials(mut self, mu3: f64, mu8: f64) -> Result<Self> {
        if mu3 == 0.0 && mu8 == 0.0 {
            return Ok(self);
        }
        if self.sector.n_colors() != 3 {
            return Err(Error::Unsupported("chemical potentials μ₃, μ₈ are defined for N = 3".into()));
        }
        let l3 = diagonal_generator_entries(3, 1);
        let l8 = diagonal_generator_entries(3, 2);
        self.mu_shift = -self
            .sector
            .charge()
            .iter()
            .enumerate()
            .map(|(m, &q)| q as f64 * (mu3 * l3[m] + mu8 * l8[m]))
            .sum::<f64>();
        Ok(self)
    }

    pub fn sector(&self) -> &SectorBasis {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.sector.dim()
    }

    pub fn mu_shift(&self) -> f64 {
        self.mu_shift
    }

    /// Largest bond weight; sets the energy scale for step-size bounds.
    pub fn max_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight.abs()).fold(0.0, f64::max)
    }

    /// Geometry indices of the bonds with nonzero weight.
    pub fn bond_ids(&self) -> &[usize] {
        &self.bond_ids
    }

    /// `output = H·input`.
    pub fn apply_into<T: Amplitude>(&self, input: &[T], output: &mut [T]) -> Result<()> {
        let dim = self.dim();
        if input.len() != dim || output.len() != dim {
            return Err(Error::SectorMismatch);
        }
        let n = self.sector.n_colors();
        let inv_n = 2.0 / n as f64;
        output.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(chunk, out)| {
            let mut ad = Vec::with_capacity(self.sector.n_a());
            let mut bd = Vec::with_capacity(self.sector.n_b());
            let pa = self.sector.pow_a();
            let pb = self.sector.pow_b();
            for (k, o) in out.iter_mut().enumerate() {
                let i = chunk * ROW_CHUNK + k;
                self.sector.decode_into(i, &mut ad, &mut bd);
                let (a, b) = self.sector.codes(i);
                let (a, b) = (a as i64, b as i64);
                let mut diag = self.mu_shift;
                let mut acc = T::zero();
                for t in &self.terms {
                    let ca = ad[t.a_pos];
                    diag += t.weight * inv_n;
                    if ca != bd[t.b_pos] {
                        continue;
                    }
                    diag -= 2.0 * t.weight;
                    let (sa, sb) = (pa[t.a_pos] as i64, pb[t.b_pos] as i64);
                    for c in 0..n as i64 {
                        let dc = c - ca as i64;
                        if dc == 0 {
                            continue;
                        }
                        let j = self.sector.rank_unchecked((a + dc * sa) as u64, (b + dc * sb) as u64);
                        acc += input[j] * (-2.0 * t.weight);
                    }
                }
                acc += input[i] * diag;
                *o = acc;
            }
        });
        Ok(())
    }

    pub fn apply<T: Amplitude>(&self, input: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); input.len()];
        self.apply_into(input, &mut out)?;
        Ok(out)
    }

    /// Nonzero entries of row `i` (diagonal included).
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        let mut e = vec![0.0; self.dim()];
        e[i] = 1.0;
        // H is real symmetric, so column i equals row i
        let col = self.apply(&e).expect("dimension matches");
        col.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect()
    }

    /// Dense matrix, for small sectors.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        for c in 0..d {
            e[c] = 1.0;
            let col = self.apply(&e).expect("dimension matches");
            e[c] = 0.0;
            for (r, v) in col.into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        m
    }
}
