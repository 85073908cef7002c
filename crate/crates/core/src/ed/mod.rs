//! Exact diagonalization in color-charge sectors: Lanczos spectra along the
//! adiabatic ramp and Krylov real-time propagation.

pub mod dimer;
pub mod hamiltonian;
pub mod krylov;
pub mod lanczos;
pub mod sector;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use dimer::{
    dimer_product_state, measure_dimerization, quench_false_vacuum, Dimerization, QuenchOptions, QuenchTrajectory,
};
pub use hamiltonian::Hamiltonian;
pub use krylov::{krylov_propagate, propagate_with, KrylovOptions};
pub use lanczos::{lowest_eigenpairs, multiplicities, EigenPair, LanczosOptions};
pub use sector::{all_charge_vectors, charge_of, enumerate_sector, sector_dimension, ColorState, SectorBasis};

use crate::error::{Error, Result};
use crate::lattice::LadderGeometry;

/// Complex amplitudes over the basis of one charge sector.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    pub charge: Vec<i32>,
    pub amplitudes: Vec<Complex64>,
}

impl Wavefunction {
    pub fn new(sector: &SectorBasis, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != sector.dim() {
            return Err(Error::SectorMismatch);
        }
        Ok(Wavefunction { charge: sector.charge().to_vec(), amplitudes })
    }

    pub fn from_real(sector: &SectorBasis, amplitudes: &[f64]) -> Result<Self> {
        Self::new(sector, amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn norm(&self) -> f64 {
        krylov::cnorm(&self.amplitudes)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidParameter("cannot normalize a zero or non-finite state".into()));
        }
        self.amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &Wavefunction) -> Result<Complex64> {
        if self.charge != other.charge || self.amplitudes.len() != other.amplitudes.len() {
            return Err(Error::SectorMismatch);
        }
        Ok(krylov::cdot(&self.amplitudes, &other.amplitudes))
    }

    pub fn belongs_to(&self, sector: &SectorBasis) -> bool {
        self.charge == sector.charge() && self.amplitudes.len() == sector.dim()
    }
}

/// Parameters of `H(τ) = (1−τ) J Σ_{dimer} + τ J Σ_{all}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampSpec {
    pub tau_grid: Vec<f64>,
    pub j: f64,
    pub dimer_bonds: Vec<usize>,
}

impl RampSpec {
    pub fn new(tau_grid: Vec<f64>, j: f64, dimer_bonds: Vec<usize>) -> Result<Self> {
        if tau_grid.is_empty() {
            return Err(Error::InvalidParameter("tau grid is empty".into()));
        }
        if let Some(t) = tau_grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::InvalidParameter(format!("tau = {t} outside [0, 1]")));
        }
        if tau_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("tau grid must be sorted".into()));
        }
        if !(j.is_finite() && j > 0.0) {
            return Err(Error::InvalidParameter(format!("J must be positive, got {j}")));
        }
        Ok(RampSpec { tau_grid, j, dimer_bonds })
    }

    /// `points` equally spaced τ values from 0 to 1 on the geometry's dimer bonds.
    pub fn uniform_grid(geometry: &LadderGeometry, j: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidParameter("a tau grid needs at least 2 points".into()));
        }
        let grid = (0..points).map(|k| k as f64 / (points - 1) as f64).collect();
        Self::new(grid, j, geometry.dimer_bonds())
    }
}

/// Chemical potentials coupling to λ³ and λ⁸ (N = 3).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChemicalPotentials {
    pub mu3: f64,
    pub mu8: f64,
}

/// `H(τ)ψ + H_μψ`.
pub fn apply_hamiltonian(
    psi: &Wavefunction,
    sector: &SectorBasis,
    geometry: &LadderGeometry,
    tau: f64,
    ramp: &RampSpec,
    mu: ChemicalPotentials,
) -> Result<Wavefunction> {
    if !psi.belongs_to(sector) {
        return Err(Error::SectorMismatch);
    }
    let h = Hamiltonian::ramp(sector, geometry, ramp, tau)?.with_chemical_potentials(mu.mu3, mu.mu8)?;
    Ok(Wavefunction { charge: psi.charge.clone(), amplitudes: h.apply(&psi.amplitudes)? })
}

#[derive(Debug, Clone)]
pub struct Level {
    pub energy: f64,
    pub residual: f64,
    pub wavefunction: Wavefunction,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub levels: Vec<Level>,
    /// `(energy, multiplicity)` groups among the returned levels.
    pub multiplicities: Vec<(f64, usize)>,
}

/// Residual tolerance of `opts` is read in units of `J`.
fn scaled(opts: &LanczosOptions, j: f64) -> LanczosOptions {
    LanczosOptions { tolerance: opts.tolerance * j.abs(), ..opts.clone() }
}

/// Lowest `k` eigenpairs of `H(τ) + H_μ` in `sector`.
pub fn lanczos_spectrum(
    sector: &SectorBasis,
    geometry: &LadderGeometry,
    ramp: &RampSpec,
    tau: f64,
    k: usize,
    mu: ChemicalPotentials,
    opts: &LanczosOptions,
) -> Result<Spectrum> {
    let h = Hamiltonian::ramp(sector, geometry, ramp, tau)?.with_chemical_potentials(mu.mu3, mu.mu8)?;
    let opts = scaled(opts, ramp.j);
    let pairs = lowest_eigenpairs(|x, y| h.apply_into(x, y), sector.dim(), k, &[], &opts)?;
    let energies: Vec<f64> = pairs.iter().map(|p| p.energy).collect();
    let multiplicities = multiplicities(&energies, 1e3 * opts.tolerance);
    let levels = pairs
        .into_iter()
        .map(|p| {
            Ok(Level { energy: p.energy, residual: p.residual, wavefunction: Wavefunction::from_real(sector, &p.vector)? })
        })
        .collect::<Result<_>>()?;
    Ok(Spectrum { levels, multiplicities })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub tau: f64,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapScan {
    pub rows: Vec<GapRow>,
    pub min_gap: f64,
    pub tau_at_min: f64,
    pub charge: Vec<i32>,
    pub dim: usize,
}

/// Lowest two levels of `H(τ)` over the ramp grid in the balanced (Q = 0)
/// sector, warm-starting each τ from the previous eigenvectors.
pub fn adiabatic_gap_scan(
    geometry: &LadderGeometry,
    n_colors: usize,
    ramp: &RampSpec,
    opts: &LanczosOptions,
) -> Result<GapScan> {
    let sector = enumerate_sector(geometry, n_colors, &vec![0; n_colors])?;
    let opts = scaled(opts, ramp.j);
    let mut guesses: Vec<Vec<f64>> = Vec::new();
    let mut rows = Vec::with_capacity(ramp.tau_grid.len());
    for &tau in &ramp.tau_grid {
        let h = Hamiltonian::ramp(&sector, geometry, ramp, tau)?;
        let pairs = lowest_eigenpairs(|x, y| h.apply_into(x, y), sector.dim(), 2, &guesses, &opts)?;
        let (e0, e1) = (pairs[0].energy, pairs[1].energy);
        rows.push(GapRow { tau, e0, e1, gap: e1 - e0 });
        guesses = pairs.into_iter().map(|p| p.vector).collect();
    }
    let best = rows.iter().min_by(|a, b| a.gap.total_cmp(&b.gap)).expect("non-empty grid");
    Ok(GapScan {
        min_gap: best.gap,
        tau_at_min: best.tau,
        rows: rows.clone(),
        charge: sector.charge().to_vec(),
        dim: sector.dim(),
    })
}
