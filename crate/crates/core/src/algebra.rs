//! SU(N) generators, the fundamental⊗antifundamental bond operator and the
//! superexchange couplings obtained from the underlying Hubbard parameters.
//!
//! Generators are normalized as `Tr[λᵃ λᵇ] = 2 δᵃᵇ`. The bond operator
//! `Σₐ λᵃ ⊗ (−λᵃ*)` acts on the product basis `|m⟩⊗|n⟩` (index `m·N + n`),
//! where the second factor is the antifundamental site written in its
//! hole-color basis. In that basis the operator is `−2N·P_s + (2/N)·1`, with
//! `P_s` the projector on `(1/√N) Σ_m |m,m⟩`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest N for which dense bond matrices are materialized.
pub const MAX_DENSE_COLORS: usize = 6;

#[derive(Debug, Clone)]
pub struct GellMannBasis {
    n_colors: usize,
    generators: Vec<DMatrix<Complex64>>,
}

impl GellMannBasis {
    pub fn n_colors(&self) -> usize {
        self.n_colors
    }

    pub fn generators(&self) -> &[DMatrix<Complex64>] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Index of the first diagonal generator; the N−1 diagonal ones follow it.
    pub fn first_diagonal(&self) -> usize {
        self.n_colors * (self.n_colors - 1)
    }

    /// Diagonal generator `l` (1-based, `l ∈ 1..N`), i.e. λ³ for `l = 1` and
    /// λ⁸ for `l = 2` when N = 3.
    pub fn diagonal(&self, l: usize) -> &DMatrix<Complex64> {
        assert!(l >= 1 && l < self.n_colors, "diagonal generator index out of range");
        &self.generators[self.first_diagonal() + l - 1]
    }

    /// Antifundamental generators `T̄ᵃ = −λᵃ*`.
    pub fn antifundamental(&self) -> Vec<DMatrix<Complex64>> {
        self.generators.iter().map(|g| -g.conjugate()).collect()
    }

    /// `f_abc = −(i/4) Tr([λᵃ, λᵇ] λᶜ)`; the imaginary remainder is dropped
    /// (it vanishes for a valid basis).
    pub fn structure_constant(&self, a: usize, b: usize, c: usize) -> f64 {
        structure_constant_of(&self.generators, a, b, c)
    }

    /// `Σₐ (λᵃ)²`, which equals `2(N²−1)/N · 1`.
    pub fn casimir(&self) -> DMatrix<Complex64> {
        let n = self.n_colors;
        self.generators
            .iter()
            .fold(DMatrix::zeros(n, n), |acc, g| acc + g * g)
    }

    /// Explicit generator sum `Σₐ λᵃ ⊗ (−λᵃ*)` in the product basis.
    pub fn bond_sum(&self) -> DMatrix<Complex64> {
        let n = self.n_colors;
        let mut out = DMatrix::zeros(n * n, n * n);
        for g in &self.generators {
            out += g.kronecker(&(-g.conjugate()));
        }
        out
    }
}

/// `f_abc` for an arbitrary generator list with the same normalization.
pub fn structure_constant_of(gens: &[DMatrix<Complex64>], a: usize, b: usize, c: usize) -> f64 {
    let comm = &gens[a] * &gens[b] - &gens[b] * &gens[a];
    let tr = (comm * &gens[c]).trace();
    (Complex64::new(0.0, -0.25) * tr).re
}

/// Generalized Gell-Mann matrices: symmetric off-diagonal pairs first, then
/// antisymmetric pairs, then the N−1 diagonal generators.
pub fn gell_mann(n_colors: usize) -> Result<GellMannBasis> {
    if n_colors < 2 {
        return Err(Error::InvalidParameter(format!(
            "n_colors must be at least 2, got {n_colors}"
        )));
    }
    let n = n_colors;
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut generators = Vec::with_capacity(n * n - 1);

    for j in 0..n {
        for k in (j + 1)..n {
            let mut m = DMatrix::zeros(n, n);
            m[(j, k)] = one;
            m[(k, j)] = one;
            generators.push(m);
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let mut m = DMatrix::zeros(n, n);
            m[(j, k)] = -i;
            m[(k, j)] = i;
            generators.push(m);
        }
    }
    for l in 1..n {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = DMatrix::zeros(n, n);
        for d in 0..l {
            m[(d, d)] = Complex64::new(norm, 0.0);
        }
        m[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
        generators.push(m);
    }

    Ok(GellMannBasis { n_colors, generators })
}

/// Real diagonal entries of the diagonal generator `l` (1-based).
pub fn diagonal_generator_entries(n_colors: usize, l: usize) -> Vec<f64> {
    assert!(l >= 1 && l < n_colors);
    let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
    (0..n_colors)
        .map(|d| match d.cmp(&l) {
            std::cmp::Ordering::Less => norm,
            std::cmp::Ordering::Equal => -(l as f64) * norm,
            std::cmp::Ordering::Greater => 0.0,
        })
        .collect()
}

/// Closed-form element `⟨m n| Σₐ λᵃ⊗(−λᵃ*) |m′ n′⟩
/// = −2(δ_{mn} δ_{m′n′} − δ_{mm′} δ_{nn′}/N)`.
#[inline]
pub fn bond_element(n_colors: usize, m: usize, n: usize, mp: usize, np: usize) -> f64 {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    -2.0 * (d(m, n) * d(mp, np) - d(m, mp) * d(n, np) / n_colors as f64)
}

#[derive(Debug, Clone)]
pub struct BondOperator {
    pub n_colors: usize,
    pub matrix: DMatrix<f64>,
    pub singlet_projector: DMatrix<f64>,
}

impl BondOperator {
    pub fn singlet_energy(&self) -> f64 {
        singlet_eigenvalue(self.n_colors)
    }

    pub fn triplet_energy(&self) -> f64 {
        2.0 / self.n_colors as f64
    }
}

/// `−2N + 2/N`, the bond eigenvalue on the singlet.
pub fn singlet_eigenvalue(n_colors: usize) -> f64 {
    let n = n_colors as f64;
    -2.0 * n + 2.0 / n
}

/// Dense N²×N² bond operator and its singlet projector (N ≤ 6).
pub fn bond_matrix(n_colors: usize) -> Result<BondOperator> {
    if n_colors < 2 {
        return Err(Error::InvalidParameter(format!(
            "n_colors must be at least 2, got {n_colors}"
        )));
    }
    if n_colors > MAX_DENSE_COLORS {
        return Err(Error::InvalidParameter(format!(
            "dense bond matrices are only built for N ≤ {MAX_DENSE_COLORS}, got {n_colors}"
        )));
    }
    let n = n_colors;
    let dim = n * n;
    let matrix = DMatrix::from_fn(dim, dim, |r, c| bond_element(n, r / n, r % n, c / n, c % n));
    let singlet_projector = DMatrix::from_fn(dim, dim, |r, c| {
        if r / n == r % n && c / n == c % n {
            1.0 / n as f64
        } else {
            0.0
        }
    });
    Ok(BondOperator { n_colors, matrix, singlet_projector })
}

/// Hubbard parameters: tunneling `t`, on-site interaction `u`, sublattice
/// offset `v`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CouplingParams {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub n_colors: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Superexchange {
    pub j: f64,
    /// `J > 0`.
    pub antiferromagnetic: bool,
    /// `2U > V > U`: missing atoms become static vacancies.
    pub static_impurity: bool,
}

impl CouplingParams {
    fn validate(&self) -> Result<()> {
        if !(self.u > 0.0) {
            return Err(Error::InvalidParameter(format!("U must be positive, got {}", self.u)));
        }
        if !(self.t >= 0.0) || !self.v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t must be nonnegative and V finite, got t={} V={}",
                self.t, self.v
            )));
        }
        if self.n_colors < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_colors must be at least 2, got {}",
                self.n_colors
            )));
        }
        Ok(())
    }

    /// `2U > V > U`.
    pub fn in_static_impurity_regime(&self) -> bool {
        2.0 * self.u > self.v && self.v > self.u
    }
}

fn is_pole(den: f64, scale: f64) -> bool {
    den.abs() <= 1e-12 * scale.max(1.0)
}

/// `J = t²U / ((−V + U(N−3)) (V − U(N−1)))`.
pub fn superexchange_coupling(params: &CouplingParams) -> Result<Superexchange> {
    params.validate()?;
    let CouplingParams { t, u, v, n_colors } = *params;
    let nf = n_colors as f64;
    let first = -v + u * (nf - 3.0);
    let second = v - u * (nf - 1.0);
    let scale = v.abs().max(u * nf);
    if is_pole(first, scale) {
        return Err(Error::Pole(format!("V = U(N−3) = {}", u * (nf - 3.0))));
    }
    if is_pole(second, scale) {
        return Err(Error::Pole(format!("V = U(N−1) = {}", u * (nf - 1.0))));
    }
    let j = t * t * u / (first * second);
    Ok(Superexchange {
        j,
        antiferromagnetic: j > 0.0,
        static_impurity: params.in_static_impurity_regime(),
    })
}

/// Coupling between two spins of the same representation, `t²U/(V² − U²)`.
pub fn same_rep_coupling(params: &CouplingParams) -> Result<f64> {
    params.validate()?;
    let CouplingParams { t, u, v, .. } = *params;
    let den = v * v - u * u;
    if is_pole(den, v * v + u * u) {
        return Err(Error::Pole(format!("|V| = U = {u}")));
    }
    Ok(t * t * u / den)
}
