//! Rectangular L×n ladders with A/B sublattices, bond lists and quenched
//! vacancy realizations.
//!
//! Sites are indexed row-major in (y, x): `index = y·L + x`. Sublattice A is
//! `x + y` even. Longitudinal bonds are listed first (by leg, then by x),
//! followed by transverse bonds; each bond is stored once with `i` the site
//! at smaller x (or smaller y).

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::Parse(format!("unknown boundary condition {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Longitudinal,
    Transverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Site {
    pub x: usize,
    pub y: usize,
    pub sublattice: Sublattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderGeometry {
    length: usize,
    legs: usize,
    boundary_x: Boundary,
    sites: Vec<Site>,
    bonds: Vec<Bond>,
    active: Vec<bool>,
}

/// Builds an `length × legs` ladder. Transverse boundaries are always open.
pub fn build_lattice(length: usize, legs: usize, boundary_x: Boundary) -> Result<LadderGeometry> {
    if length < 2 {
        return Err(Error::InvalidParameter(format!("length L must be at least 2, got {length}")));
    }
    if legs < 1 {
        return Err(Error::InvalidParameter("ladder needs at least one leg".into()));
    }
    if boundary_x == Boundary::Periodic && length % 2 == 1 {
        return Err(Error::InvalidParameter(format!(
            "periodic boundaries need an even length to stay bipartite, got L={length}"
        )));
    }

    let sites = (0..legs)
        .flat_map(|y| (0..length).map(move |x| (x, y)))
        .map(|(x, y)| Site {
            x,
            y,
            sublattice: if (x + y) % 2 == 0 { Sublattice::A } else { Sublattice::B },
        })
        .collect::<Vec<_>>();

    let idx = |x: usize, y: usize| y * length + x;
    let mut bonds = Vec::new();
    let x_bonds = match boundary_x {
        Boundary::Open => length - 1,
        Boundary::Periodic => length,
    };
    for y in 0..legs {
        for x in 0..x_bonds {
            bonds.push(Bond { i: idx(x, y), j: idx((x + 1) % length, y), direction: Direction::Longitudinal });
        }
    }
    for y in 0..legs.saturating_sub(1) {
        for x in 0..length {
            bonds.push(Bond { i: idx(x, y), j: idx(x, y + 1), direction: Direction::Transverse });
        }
    }

    let n_sites = sites.len();
    Ok(LadderGeometry { length, legs, boundary_x, sites, bonds, active: vec![true; n_sites] })
}

impl LadderGeometry {
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn legs(&self) -> usize {
        self.legs
    }

    pub fn boundary_x(&self) -> Boundary {
        self.boundary_x
    }

    pub fn boundary_y(&self) -> Boundary {
        Boundary::Open
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, index: usize) -> Site {
        self.sites[index]
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.length + x
    }

    /// Bonds between active sites.
    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn is_active(&self, site: usize) -> bool {
        self.active[site]
    }

    pub fn active_sites(&self) -> Vec<usize> {
        (0..self.n_sites()).filter(|&s| self.active[s]).collect()
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn removed_sites(&self) -> Vec<usize> {
        (0..self.n_sites()).filter(|&s| !self.active[s]).collect()
    }

    pub fn has_defects(&self) -> bool {
        self.active.iter().any(|a| !a)
    }

    pub fn sublattice(&self, site: usize) -> Sublattice {
        self.sites[site].sublattice
    }

    /// θ/π for the reduced field theory: `n mod 2`.
    pub fn theta_over_pi(&self) -> usize {
        self.legs % 2
    }

    /// The endpoint of `bond` on sublattice A and the one on B.
    pub fn bond_ab(&self, bond: &Bond) -> (usize, usize) {
        match self.sublattice(bond.i) {
            Sublattice::A => (bond.i, bond.j),
            Sublattice::B => (bond.j, bond.i),
        }
    }

    /// Longitudinal bonds whose left site is on sublattice A (the "even"
    /// bonds carrying the dimerized term of the adiabatic ramp).
    pub fn dimer_bonds(&self) -> Vec<usize> {
        self.bonds
            .iter()
            .enumerate()
            .filter(|(_, b)| b.direction == Direction::Longitudinal && self.sublattice(b.i) == Sublattice::A)
            .map(|(k, _)| k)
            .collect()
    }

    /// Expected number of bonds of a clean lattice.
    pub fn clean_bond_count(&self) -> usize {
        let lon = match self.boundary_x {
            Boundary::Open => (self.length - 1) * self.legs,
            Boundary::Periodic => self.length * self.legs,
        };
        lon + self.length * (self.legs - 1)
    }

    /// Copy of this geometry with the realization's sites emptied and
    /// their bonds pruned.
    pub fn with_defects(&self, realization: &DisorderRealization) -> Result<LadderGeometry> {
        let mut out = self.clone();
        for &s in &realization.removed {
            if s >= self.n_sites() {
                return Err(Error::InvalidParameter(format!("defect site {s} out of range")));
            }
            out.active[s] = false;
        }
        out.bonds.retain(|b| out.active[b.i] && out.active[b.j]);
        Ok(out)
    }

    /// A two-coloring of the active sites along the active bonds, if one
    /// exists (inactive sites get `None`).
    pub fn two_coloring(&self) -> Option<Vec<Option<u8>>> {
        let n = self.n_sites();
        let mut adj = vec![Vec::new(); n];
        for b in &self.bonds {
            adj[b.i].push(b.j);
            adj[b.j].push(b.i);
        }
        let mut color: Vec<Option<u8>> = vec![None; n];
        for start in 0..n {
            if !self.active[start] || color[start].is_some() {
                continue;
            }
            color[start] = Some(0);
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                let cu = color[u].unwrap();
                for &v in &adj[u] {
                    match color[v] {
                        None => {
                            color[v] = Some(1 - cu);
                            queue.push_back(v);
                        }
                        Some(cv) if cv == cu => return None,
                        Some(_) => {}
                    }
                }
            }
        }
        Some(color)
    }
}

/// A set of emptied sites, reproducible from (geometry, concentration, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub seed: u64,
    pub concentration: f64,
    /// Sorted, distinct site indices.
    pub removed: Vec<usize>,
}

/// Removes `round(p·L·n)` distinct sites drawn uniformly from both
/// sublattices.
pub fn sample_defects(geometry: &LadderGeometry, concentration: f64, seed: u64) -> Result<DisorderRealization> {
    if !(0.0..0.5).contains(&concentration) {
        return Err(Error::InvalidParameter(format!(
            "defect concentration must lie in [0, 0.5), got {concentration}"
        )));
    }
    let n = geometry.n_sites();
    let count = (concentration * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut removed = index::sample(&mut rng, n, count).into_vec();
    removed.sort_unstable();
    Ok(DisorderRealization { seed, concentration, removed })
}

/// Plain-text serialization of a geometry together with a realization.
pub fn write_realization<W: Write>(
    mut w: W,
    geometry: &LadderGeometry,
    realization: &DisorderRealization,
) -> Result<()> {
    writeln!(w, "# sunladder disorder realization")?;
    writeln!(w, "L {}", geometry.length())?;
    writeln!(w, "n {}", geometry.legs())?;
    writeln!(w, "boundary_x {}", geometry.boundary_x())?;
    writeln!(w, "boundary_y {}", geometry.boundary_y())?;
    writeln!(w, "concentration {:?}", realization.concentration)?;
    writeln!(w, "seed {}", realization.seed)?;
    writeln!(w, "removed {}", realization.removed.len())?;
    for s in &realization.removed {
        writeln!(w, "{s}")?;
    }
    Ok(())
}

/// Inverse of [`write_realization`]; returns the clean geometry and the
/// realization.
pub fn read_realization<R: BufRead>(r: R) -> Result<(LadderGeometry, DisorderRealization)> {
    let mut header = std::collections::HashMap::new();
    let mut removed = Vec::new();
    let mut expected: Option<usize> = None;
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if expected.is_some() {
            removed.push(line.parse::<usize>().map_err(|e| Error::Parse(format!("site index {line:?}: {e}")))?);
            continue;
        }
        let (key, value) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::Parse(format!("header line {line:?}")))?;
        let value = value.trim();
        if key == "removed" {
            expected = Some(value.parse().map_err(|e| Error::Parse(format!("removed count: {e}")))?);
        } else {
            header.insert(key.to_string(), value.to_string());
        }
    }
    let get = |k: &str| header.get(k).ok_or_else(|| Error::Parse(format!("missing header field {k}")));
    let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|e| Error::Parse(format!("{k}: {e}"))) };
    let length = num("L")?;
    let legs = num("n")?;
    let boundary_x: Boundary = get("boundary_x")?.parse()?;
    if get("boundary_y")? != "open" {
        return Err(Error::Parse("only open transverse boundaries are supported".into()));
    }
    let concentration: f64 = get("concentration")?
        .parse()
        .map_err(|e| Error::Parse(format!("concentration: {e}")))?;
    let seed: u64 = get("seed")?.parse().map_err(|e| Error::Parse(format!("seed: {e}")))?;
    let expected = expected.ok_or_else(|| Error::Parse("missing removed section".into()))?;
    if removed.len() != expected {
        return Err(Error::Parse(format!("expected {expected} removed sites, found {}", removed.len())));
    }
    let geometry = build_lattice(length, legs, boundary_x)?;
    Ok((geometry, DisorderRealization { seed, concentration, removed }))
}
