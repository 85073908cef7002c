//! Dimerization order parameter and the false-vacuum quench on a single chain.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hamiltonian::Hamiltonian;
use super::krylov::{energy_expectation, propagate_with, KrylovOptions};
use super::sector::{enumerate_sector, SectorBasis};
use super::Wavefunction;
use crate::error::{Error, Result};
use crate::lattice::{Direction, LadderGeometry, Sublattice};

const ROW_CHUNK: usize = 4096;

/// Bond values `E_b = ⟨Σₐ Tᵃₓ Tᵃ*_{x+1}⟩` (singlet: `2N − 2/N`) and the
/// staggered sum `D = Σ_{x∈A} (E_{x,x+1} − E_{x,x−1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimerization {
    /// Geometry index of each longitudinal bond.
    pub bonds: Vec<usize>,
    /// Left site `x` of each bond.
    pub left: Vec<usize>,
    pub values: Vec<f64>,
    pub total: f64,
    /// `total` divided by the number of longitudinal bonds.
    pub per_bond: f64,
}

fn require_chain(geometry: &LadderGeometry) -> Result<()> {
    if geometry.legs() != 1 {
        return Err(Error::Unsupported(format!(
            "dimerization is defined on a single chain, got {} legs",
            geometry.legs()
        )));
    }
    Ok(())
}

/// `+1` for bonds whose left site is on A, `−1` otherwise.
fn stagger(geometry: &LadderGeometry, bond: usize) -> f64 {
    match geometry.sublattice(geometry.bonds()[bond].i) {
        Sublattice::A => 1.0,
        Sublattice::B => -1.0,
    }
}

pub fn measure_dimerization(psi: &Wavefunction, sector: &SectorBasis, geometry: &LadderGeometry) -> Result<Dimerization> {
    require_chain(geometry)?;
    measure_amplitudes(&psi.amplitudes, sector, geometry).and_then(|d| {
        if psi.belongs_to(sector) {
            Ok(d)
        } else {
            Err(Error::SectorMismatch)
        }
    })
}

pub(crate) fn measure_amplitudes(psi: &[Complex64], sector: &SectorBasis, geometry: &LadderGeometry) -> Result<Dimerization> {
    require_chain(geometry)?;
    if psi.len() != sector.dim() {
        return Err(Error::SectorMismatch);
    }
    let n = sector.n_colors();
    let mut bonds = Vec::new();
    let mut pos = Vec::new();
    for (k, b) in geometry.bonds().iter().enumerate() {
        if b.direction != Direction::Longitudinal {
            continue;
        }
        let (a, bb) = geometry.bond_ab(b);
        let (Some((_, pa)), Some((_, pb))) = (sector.slot(a), sector.slot(bb)) else {
            return Err(Error::SectorMismatch);
        };
        bonds.push(k);
        pos.push((pa, pb));
    }
    let pow_a = sector.pow_a();
    let pow_b = sector.pow_b();
    let inv_n = 2.0 / n as f64;

    // ⟨O_b⟩ for O = Σₐ λᵃ ⊗ (−λᵃ*), accumulated per chunk in fixed order
    let partial: Vec<Vec<f64>> = psi
        .par_chunks(ROW_CHUNK)
        .enumerate()
        .map(|(chunk, amps)| {
            let mut acc = vec![0.0; bonds.len()];
            let (mut ad, mut bd) = (Vec::new(), Vec::new());
            for (k, amp) in amps.iter().enumerate() {
                let i = chunk * ROW_CHUNK + k;
                let p = amp.norm_sqr();
                if p == 0.0 {
                    continue;
                }
                sector.decode_into(i, &mut ad, &mut bd);
                let (ca, cb) = sector.codes(i);
                for (slot, &(pa, pb)) in acc.iter_mut().zip(&pos) {
                    let c = ad[pa];
                    *slot += p * inv_n;
                    if c != bd[pb] {
                        continue;
                    }
                    *slot -= 2.0 * p;
                    for c2 in 0..n as i64 {
                        let dc = c2 - c as i64;
                        if dc == 0 {
                            continue;
                        }
                        let j = sector.rank_unchecked(
                            (ca as i64 + dc * pow_a[pa] as i64) as u64,
                            (cb as i64 + dc * pow_b[pb] as i64) as u64,
                        );
                        *slot -= 2.0 * (psi[j].conj() * amp).re;
                    }
                }
            }
            acc
        })
        .collect();
    let mut values = vec![0.0; bonds.len()];
    for part in &partial {
        for (v, p) in values.iter_mut().zip(part) {
            *v += p;
        }
    }
    // D uses Tᵃ* rather than the Hamiltonian's −Tᵃ*
    values.iter_mut().for_each(|v| *v = -*v);
    let total: f64 = bonds.iter().zip(&values).map(|(&b, v)| stagger(geometry, b) * v).sum();
    let left = bonds.iter().map(|&b| geometry.bonds()[b].i).collect();
    let per_bond = if bonds.is_empty() { 0.0 } else { total / bonds.len() as f64 };
    Ok(Dimerization { bonds, left, values, total, per_bond })
}

/// Product of singlets `(1/√N) Σ_c |c,c⟩` on `dimer_bonds`, which must
/// cover every active site exactly once. Lives in the Q = 0 sector.
pub fn dimer_product_state(sector: &SectorBasis, geometry: &LadderGeometry, dimer_bonds: &[usize]) -> Result<Wavefunction> {
    if sector.charge().iter().any(|&q| q != 0) {
        return Err(Error::SectorMismatch);
    }
    let mut covered = vec![false; geometry.n_sites()];
    let mut pairs = Vec::with_capacity(dimer_bonds.len());
    for &k in dimer_bonds {
        let bond = geometry
            .bonds()
            .get(k)
            .ok_or_else(|| Error::InvalidParameter(format!("dimer bond {k} out of range")))?;
        for s in [bond.i, bond.j] {
            if std::mem::replace(&mut covered[s], true) {
                return Err(Error::InvalidParameter(format!("site {s} is covered by two dimers")));
            }
        }
        let (a, b) = geometry.bond_ab(bond);
        let (Some((_, pa)), Some((_, pb))) = (sector.slot(a), sector.slot(b)) else {
            return Err(Error::SectorMismatch);
        };
        pairs.push((pa, pb));
    }
    if let Some(s) = geometry.active_sites().into_iter().find(|&s| !covered[s]) {
        return Err(Error::InvalidParameter(format!("site {s} is not covered by a dimer")));
    }
    let amp = (sector.n_colors() as f64).powf(-(pairs.len() as f64) / 2.0);
    let amplitudes = (0..sector.dim())
        .into_par_iter()
        .with_min_len(ROW_CHUNK)
        .map_init(
            || (Vec::new(), Vec::new()),
            |(ad, bd), i| {
                sector.decode_into(i, ad, bd);
                let aligned = pairs.iter().all(|&(pa, pb)| ad[pa] == bd[pb]);
                Complex64::new(if aligned { amp } else { 0.0 }, 0.0)
            },
        )
        .collect();
    Wavefunction::new(sector, amplitudes)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuenchOptions {
    pub dt: f64,
    pub t_max: f64,
    pub krylov: KrylovOptions,
}

impl Default for QuenchOptions {
    fn default() -> Self {
        QuenchOptions { dt: 0.05, t_max: 20.0, krylov: KrylovOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuenchTrajectory {
    pub times: Vec<f64>,
    pub bonds: Vec<usize>,
    pub left: Vec<usize>,
    /// `per_bond[step][k]` is the value on bond `bonds[k]`.
    pub per_bond: Vec<Vec<f64>>,
    pub total: Vec<f64>,
    pub total_per_bond: Vec<f64>,
    pub dim: usize,
    /// Largest `|‖ψ(t)‖ − 1|` along the trajectory.
    pub norm_drift: f64,
    /// Largest `|⟨H⟩(t) − ⟨H⟩(0)|`.
    pub energy_drift: f64,
    pub substeps: usize,
}

/// Evolves the even-bond dimer product state under the uniform chain
/// Hamiltonian and records the dimerization at every step.
pub fn quench_false_vacuum(geometry: &LadderGeometry, n_colors: usize, j: f64, opts: &QuenchOptions) -> Result<QuenchTrajectory> {
    require_chain(geometry)?;
    if !geometry.length().is_multiple_of(2) || geometry.has_defects() {
        return Err(Error::InvalidParameter("the false vacuum needs an even, defect-free chain".into()));
    }
    if !(j.is_finite() && j > 0.0) {
        return Err(Error::InvalidParameter(format!("J must be positive, got {j}")));
    }
    if !(opts.t_max >= 0.0) {
        return Err(Error::InvalidParameter("t_max must be non-negative".into()));
    }
    let steps_f = opts.t_max / opts.dt;
    let steps = steps_f.round() as usize;
    if (steps_f - steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::InvalidParameter(format!("t_max = {} is not a multiple of dt = {}", opts.t_max, opts.dt)));
    }
    let sector = enumerate_sector(geometry, n_colors, &vec![0; n_colors])?;
    let h = Hamiltonian::uniform(&sector, geometry, j)?;
    let psi0 = dimer_product_state(&sector, geometry, &geometry.dimer_bonds())?;
    let e0 = energy_expectation(&h, &psi0.amplitudes)?;

    let mut traj = QuenchTrajectory {
        times: Vec::with_capacity(steps + 1),
        bonds: Vec::new(),
        left: Vec::new(),
        per_bond: Vec::with_capacity(steps + 1),
        total: Vec::with_capacity(steps + 1),
        total_per_bond: Vec::with_capacity(steps + 1),
        dim: sector.dim(),
        norm_drift: 0.0,
        energy_drift: 0.0,
        substeps: 0,
    };
    propagate_with(&h, &psi0, opts.dt, steps, &opts.krylov, |step, psi, info| {
        let d = measure_amplitudes(psi, &sector, geometry)?;
        let norm = super::krylov::cnorm(psi);
        traj.norm_drift = traj.norm_drift.max((norm - 1.0).abs());
        if step > 0 {
            let e = energy_expectation(&h, psi)?;
            traj.energy_drift = traj.energy_drift.max((e - e0).abs());
        }
        traj.substeps += info.substeps;
        traj.times.push(step as f64 * opts.dt);
        traj.total.push(d.total);
        traj.total_per_bond.push(d.per_bond);
        traj.per_bond.push(d.values);
        if step == 0 {
            traj.bonds = d.bonds;
            traj.left = d.left;
        }
        Ok(())
    })?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, Boundary};

    #[test]
    fn even_dimer_state_values() {
        let g = build_lattice(6, 1, Boundary::Open).unwrap();
        let s = enumerate_sector(&g, 3, &[0, 0, 0]).unwrap();
        let psi = dimer_product_state(&s, &g, &g.dimer_bonds()).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-14);
        let d = measure_dimerization(&psi, &s, &g).unwrap();
        for (k, v) in d.values.iter().enumerate() {
            let expect = if k % 2 == 0 { 16.0 / 3.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-12, "bond {k}: {v}");
        }
        assert!((d.total - 3.0 * 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn odd_dimers_on_ring_flip_sign() {
        let g = build_lattice(6, 1, Boundary::Periodic).unwrap();
        let s = enumerate_sector(&g, 3, &[0, 0, 0]).unwrap();
        let odd: Vec<usize> = (0..g.bonds().len()).filter(|k| !g.dimer_bonds().contains(k)).collect();
        let psi = dimer_product_state(&s, &g, &odd).unwrap();
        let d = measure_dimerization(&psi, &s, &g).unwrap();
        assert!((d.total + 16.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_ladders_and_partial_covers() {
        let g = build_lattice(4, 2, Boundary::Open).unwrap();
        let s = enumerate_sector(&g, 3, &[0, 0, 0]).unwrap();
        let psi = Wavefunction::new(&s, vec![Complex64::new(0.0, 0.0); s.dim()]).unwrap();
        assert!(matches!(measure_dimerization(&psi, &s, &g), Err(Error::Unsupported(_))));
        let chain = build_lattice(4, 1, Boundary::Open).unwrap();
        let s = enumerate_sector(&chain, 3, &[0, 0, 0]).unwrap();
        assert!(dimer_product_state(&s, &chain, &[1]).is_err());
    }

    #[test]
    fn short_quench_initial_slope_vanishes() {
        let g = build_lattice(6, 1, Boundary::Open).unwrap();
        let opts = QuenchOptions { dt: 0.01, t_max: 0.03, ..Default::default() };
        let q = quench_false_vacuum(&g, 3, 1.0, &opts).unwrap();
        assert_eq!(q.total.len(), 4);
        assert!((q.total[0] - 16.0).abs() < 1e-12);
        // D(t) = D(0) + O(t²)
        let slope = (q.total[1] - q.total[0]) / 0.01;
        let curv = (q.total[2] - 2.0 * q.total[1] + q.total[0]) / 1e-4;
        assert!((slope - 0.5 * curv * 0.01).abs() < 1e-3 * curv.abs().max(1.0));
        assert!(q.norm_drift < 1e-12);
    }
}
