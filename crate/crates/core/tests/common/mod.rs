//! Independent dense oracles shared by the integration tests. Nothing here
//! calls into the crate's algebra or Hamiltonian code: generators, bond
//! operators and Hamiltonians are rebuilt from scratch on the full
//! tensor-product space.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use sunladder::lattice::{LadderGeometry, Sublattice};

pub type C = Complex64;

/// Gell-Mann matrices with `Tr λᵃλᵇ = 2δ`.
pub fn gell_mann_ref(n: usize) -> Vec<DMatrix<C>> {
    let mut out = Vec::new();
    let one = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    for a in 0..n {
        for b in a + 1..n {
            let mut s = DMatrix::zeros(n, n);
            s[(a, b)] = one;
            s[(b, a)] = one;
            out.push(s);
            let mut t = DMatrix::zeros(n, n);
            t[(a, b)] = -i;
            t[(b, a)] = i;
            out.push(t);
        }
    }
    for l in 1..n {
        let f = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut d = DMatrix::zeros(n, n);
        for m in 0..l {
            d[(m, m)] = C::new(f, 0.0);
        }
        d[(l, l)] = C::new(-f * l as f64, 0.0);
        out.push(d);
    }
    out
}

pub fn kron(a: &DMatrix<C>, b: &DMatrix<C>) -> DMatrix<C> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    DMatrix::from_fn(ra * rb, ca * cb, |r, c| a[(r / rb, c / cb)] * b[(r % rb, c % cb)])
}

/// `Σₐ λᵃ ⊗ (−λᵃ*)` on (fundamental, antifundamental), index `m·N + n`.
pub fn bond_ref(n: usize) -> DMatrix<f64> {
    let mut acc = DMatrix::<C>::zeros(n * n, n * n);
    for g in gell_mann_ref(n) {
        acc += kron(&g, &(-g.conjugate()));
    }
    assert!(acc.iter().all(|z| z.im.abs() < 1e-12));
    acc.map(|z| z.re)
}

pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

/// Full-space index of per-site colors: `Σ_s c_s N^s`.
pub fn full_index(colors: &[u8], n: usize) -> usize {
    colors.iter().rev().fold(0, |acc, &c| acc * n + c as usize)
}

pub fn full_colors(mut idx: usize, n: usize, sites: usize) -> Vec<u8> {
    (0..sites)
        .map(|_| {
            let c = (idx % n) as u8;
            idx /= n;
            c
        })
        .collect()
}

/// `J Σ_b O_b` on `N^sites` states for the geometry's bonds. Removed sites
/// stay in the tensor product as free spectators.
pub fn dense_hamiltonian(g: &LadderGeometry, n: usize, j: f64) -> DMatrix<f64> {
    dense_weighted(g, n, &vec![j; g.bonds().len()])
}

/// `Σ_b w_b O_b` on `N^sites` states.
pub fn dense_weighted(g: &LadderGeometry, n: usize, weights: &[f64]) -> DMatrix<f64> {
    let sites = g.n_sites();
    let dim = n.pow(sites as u32);
    let o = bond_ref(n);
    let mut h = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let c = full_colors(col, n, sites);
        for (b, &j) in g.bonds().iter().zip(weights) {
            let (a, bb) = if g.sublattice(b.i) == Sublattice::A { (b.i, b.j) } else { (b.j, b.i) };
            let src = c[a] as usize * n + c[bb] as usize;
            for p in 0..n {
                for q in 0..n {
                    let v = o[(p * n + q, src)];
                    if v == 0.0 {
                        continue;
                    }
                    let mut d = c.clone();
                    d[a] = p as u8;
                    d[bb] = q as u8;
                    h[(full_index(&d, n), col)] += j * v;
                }
            }
        }
    }
    h
}

/// Charge vector of a full-space state: `+1` per A color, `−1` per B color.
pub fn full_charge(g: &LadderGeometry, n: usize, idx: usize) -> Vec<i32> {
    let mut q = vec![0; n];
    for (s, c) in full_colors(idx, n, g.n_sites()).into_iter().enumerate() {
        q[c as usize] += if g.sublattice(s) == Sublattice::A { 1 } else { -1 };
    }
    q
}

/// Indices of full-space states with charge `q`, and the block of `h` on them.
pub fn charge_block(h: &DMatrix<f64>, g: &LadderGeometry, n: usize, q: &[i32]) -> (Vec<usize>, DMatrix<f64>) {
    let idx: Vec<usize> = (0..h.nrows()).filter(|&i| full_charge(g, n, i) == q).collect();
    let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| h[(idx[r], idx[c])]);
    (idx, block)
}

/// Bond energy `Σₐ Tᵃ Tᵃ* = −O_b` on the full space.
pub fn bond_energy_op(g: &LadderGeometry, n: usize, bond: usize) -> DMatrix<f64> {
    let mut w = vec![0.0; g.bonds().len()];
    w[bond] = -1.0;
    dense_weighted(g, n, &w)
}

/// `Σ_b S_i·S_j` for spin-1/2 on the geometry's bonds.
pub fn heisenberg(g: &LadderGeometry) -> DMatrix<f64> {
    let sites = g.n_sites();
    let i = C::new(0.0, 1.0);
    let half = |m: [[C; 2]; 2]| DMatrix::from_fn(2, 2, |r, c| m[r][c] * 0.5);
    let z = C::new(0.0, 0.0);
    let o = C::new(1.0, 0.0);
    let s = [half([[z, o], [o, z]]), half([[z, -i], [i, z]]), half([[o, z], [z, -o]])];
    let eye = DMatrix::<C>::identity(2, 2);
    let dim = 1usize << sites;
    let mut h = DMatrix::<C>::zeros(dim, dim);
    for b in g.bonds() {
        for op in &s {
            // site 0 is the least significant factor
            let mut m = DMatrix::<C>::identity(1, 1);
            for site in (0..sites).rev() {
                let f = if site == b.i || site == b.j { op } else { &eye };
                m = kron(&m, f);
            }
            h += m;
        }
    }
    assert!(h.iter().all(|z| z.im.abs() < 1e-12));
    h.map(|z| z.re)
}

/// Thermal averages from full diagonalization.
pub struct Thermal {
    pub beta: f64,
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
    weights: Vec<f64>,
    z: f64,
}

impl Thermal {
    pub fn new(h: &DMatrix<f64>, beta: f64) -> Self {
        let eig = SymmetricEigen::new(h.clone());
        let energies: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
        let z = weights.iter().sum();
        Thermal { beta, energies, vectors: eig.eigenvectors, weights, z }
    }

    pub fn energy(&self) -> f64 {
        self.energies.iter().zip(&self.weights).map(|(e, w)| e * w).sum::<f64>() / self.z
    }

    pub fn energy_squared(&self) -> f64 {
        self.energies.iter().zip(&self.weights).map(|(e, w)| e * e * w).sum::<f64>() / self.z
    }

    /// Diagonal of the density matrix in the product basis.
    pub fn populations(&self) -> Vec<f64> {
        let dim = self.energies.len();
        (0..dim)
            .map(|a| (0..dim).map(|m| self.weights[m] * self.vectors[(a, m)].powi(2)).sum::<f64>() / self.z)
            .collect()
    }

    /// `⟨f⟩` for an operator diagonal in the product basis.
    pub fn diagonal(&self, f: &[f64]) -> f64 {
        self.populations().iter().zip(f).map(|(p, v)| p * v).sum()
    }

    /// `(1/β)∫₀^β dτ ⟨A(τ)B⟩` for diagonal `A`, `B`.
    pub fn kubo(&self, a: &[f64], b: &[f64]) -> f64 {
        let u = &self.vectors;
        let am = u.transpose() * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(a)) * u;
        let bm = u.transpose() * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(b)) * u;
        let dim = self.energies.len();
        let mut acc = 0.0;
        for m in 0..dim {
            for k in 0..dim {
                let (em, ek) = (self.energies[m], self.energies[k]);
                let kernel = if (em - ek).abs() < 1e-10 {
                    self.weights[m]
                } else {
                    (self.weights[k] - self.weights[m]) / (self.beta * (em - ek))
                };
                acc += am[(m, k)] * bm[(k, m)] * kernel;
            }
        }
        acc / self.z
    }
}

/// Same-leg site pairs `(i, j)` at separation `x`, as the QMC averages them.
pub fn leg_pairs(g: &LadderGeometry, x: usize, periodic: bool) -> Vec<(usize, usize)> {
    let l = g.length();
    let span = if periodic { l } else { l - x };
    (0..g.legs())
        .flat_map(|y| (0..span).map(move |i| (g.index(i, y), g.index((i + x) % l, y))))
        .filter(|&(i, j)| g.is_active(i) && g.is_active(j))
        .collect()
}

/// `N/(N−1)·(⟨δ(c_i, c_j)⟩ − 1/N)` averaged over same-leg pairs.
pub fn equal_time_corr(t: &Thermal, g: &LadderGeometry, n: usize, x: usize, periodic: bool) -> f64 {
    let sites = g.n_sites();
    let pairs = leg_pairs(g, x, periodic);
    let dim = t.energies.len();
    let f: Vec<f64> = (0..dim)
        .map(|idx| {
            let c = full_colors(idx, n, sites);
            pairs.iter().filter(|(i, j)| c[*i] == c[*j]).count() as f64 / pairs.len() as f64
        })
        .collect();
    let nf = n as f64;
    nf / (nf - 1.0) * (t.diagonal(&f) - 1.0 / nf)
}

fn occupation(n: usize, sites: usize, site: usize, color: u8) -> Vec<f64> {
    (0..n.pow(sites as u32)).map(|idx| if full_colors(idx, n, sites)[site] == color { 1.0 } else { 0.0 }).collect()
}

/// Static pair correlation `N/(N−1)·[(1/β)∫dτ ⟨δ(c_i(τ), c_j)⟩ − 1/N]`.
pub fn static_pair(t: &Thermal, n: usize, sites: usize, i: usize, j: usize) -> f64 {
    let sum: f64 = (0..n as u8).map(|m| t.kubo(&occupation(n, sites, i, m), &occupation(n, sites, j, m))).sum();
    let nf = n as f64;
    nf / (nf - 1.0) * (sum - 1.0 / nf)
}

/// Static correlation averaged over same-leg pairs at separation `x`.
pub fn static_corr(t: &Thermal, g: &LadderGeometry, n: usize, x: usize, periodic: bool) -> f64 {
    let pairs = leg_pairs(g, x, periodic);
    pairs.iter().map(|&(i, j)| static_pair(t, n, g.n_sites(), i, j)).sum::<f64>() / pairs.len() as f64
}

/// `(1/N_active) Σ_{same-leg active i,j} cos(2πk(x_i − x_j)/L) G_ij`.
pub fn static_structure(t: &Thermal, g: &LadderGeometry, n: usize, k: usize) -> f64 {
    let l = g.length();
    let q = 2.0 * std::f64::consts::PI * k as f64 / l as f64;
    let mut acc = 0.0;
    for y in 0..g.legs() {
        for a in 0..l {
            for b in 0..l {
                if !g.is_active(g.index(a, y)) || !g.is_active(g.index(b, y)) {
                    continue;
                }
                let gij = static_pair(t, n, g.n_sites(), g.index(a, y), g.index(b, y));
                acc += (q * (a as f64 - b as f64)).cos() * gij;
            }
        }
    }
    acc / g.n_active() as f64
}

/// `e^{−iHt}ψ` by full diagonalization.
pub fn expm_apply(h: &DMatrix<f64>, psi: &[C], t: f64) -> Vec<C> {
    let eig = SymmetricEigen::new(h.clone());
    let u = eig.eigenvectors.map(|v| C::new(v, 0.0));
    let v = nalgebra::DVector::from_column_slice(psi);
    let mut coef = u.adjoint() * v;
    for (c, e) in coef.iter_mut().zip(eig.eigenvalues.iter()) {
        *c *= C::new(0.0, -e * t).exp();
    }
    (u * coef).iter().copied().collect()
}

/// `|a − b| ≤ 3σ`, with an absolute floor for estimates that carry no
/// statistical fluctuation at all (a frozen ground state), where only the
/// oracle's own roundoff remains.
pub fn within_3sigma(value: f64, error: f64, exact: f64) -> bool {
    (value - exact).abs() <= 3.0 * error + 1e-8
}
