//! Charge-sector bases in the particle-hole encoding.
//!
//! A-site colors are fermion colors, B-site colors are hole colors, both
//! stored 0-based. The conserved Cartan charges are
//! `Q_m = #{A sites with color m} − #{B sites with color m}`.
//!
//! A state is a pair of base-N codes `(a, b)` over the A and B sites. States
//! are ordered by `a`, then by `b`; the rank of a state is
//! `base_a[a] + rank_b[b]`, where `rank_b` ranks `b` among B codes with the
//! same color counts. Both tables are dense over all codes.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lattice::{LadderGeometry, Sublattice};

/// Upper bound on the dense code tables (entries per sublattice).
pub const MAX_TABLE_ENTRIES: usize = 1 << 27;

const NO_CLASS: u32 = u32::MAX;

/// Per-active-site color labels (0-based), in active-site order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColorState {
    pub colors: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct SectorBasis {
    n_colors: usize,
    charge: Vec<i32>,
    active_sites: Vec<usize>,
    /// geometry site → (sublattice, digit position); `None` for removed sites
    slots: Vec<Option<(Sublattice, usize)>>,
    a_sites: Vec<usize>,
    b_sites: Vec<usize>,
    pow_a: Vec<u64>,
    pow_b: Vec<u64>,
    states: Vec<(u32, u32)>,
    base_a: Vec<u32>,
    rank_b: Vec<u32>,
}

fn digits(mut code: u64, n: usize, len: usize, out: &mut Vec<u8>) {
    out.clear();
    for _ in 0..len {
        out.push((code % n as u64) as u8);
        code /= n as u64;
    }
}

fn counts_key(code: u64, n: usize, len: usize) -> Vec<u8> {
    let mut c = vec![0u8; n];
    let mut code = code;
    for _ in 0..len {
        c[(code % n as u64) as usize] += 1;
        code /= n as u64;
    }
    c
}

fn table_size(n: usize, len: usize) -> Result<usize> {
    let mut size: usize = 1;
    for _ in 0..len {
        size = size
            .checked_mul(n)
            .filter(|&s| s <= MAX_TABLE_ENTRIES)
            .ok_or_else(|| Error::SectorTooLarge(format!("{n}^{len} color codes on one sublattice")))?;
    }
    Ok(size)
}

/// Charge vector of a color assignment over `geometry`'s active sites.
pub fn charge_of(geometry: &LadderGeometry, n_colors: usize, state: &ColorState) -> Vec<i32> {
    let mut q = vec![0i32; n_colors];
    for (&site, &c) in geometry.active_sites().iter().zip(&state.colors) {
        match geometry.sublattice(site) {
            Sublattice::A => q[c as usize] += 1,
            Sublattice::B => q[c as usize] -= 1,
        }
    }
    q
}

/// Enumerates every state with the given charge vector.
pub fn enumerate_sector(geometry: &LadderGeometry, n_colors: usize, charge: &[i32]) -> Result<SectorBasis> {
    if !(2..=255).contains(&n_colors) {
        return Err(Error::InvalidParameter(format!("n_colors must be in 2..=255, got {n_colors}")));
    }
    if charge.len() != n_colors {
        return Err(Error::InvalidParameter(format!(
            "charge vector has {} entries, expected {n_colors}",
            charge.len()
        )));
    }
    let n = n_colors;
    let active_sites = geometry.active_sites();
    let mut slots = vec![None; geometry.n_sites()];
    let (mut a_sites, mut b_sites) = (Vec::new(), Vec::new());
    for &s in &active_sites {
        match geometry.sublattice(s) {
            Sublattice::A => {
                slots[s] = Some((Sublattice::A, a_sites.len()));
                a_sites.push(s);
            }
            Sublattice::B => {
                slots[s] = Some((Sublattice::B, b_sites.len()));
                b_sites.push(s);
            }
        }
    }
    let net: i32 = charge.iter().sum();
    if net != a_sites.len() as i32 - b_sites.len() as i32 {
        return Err(Error::EmptySector(charge.to_vec()));
    }

    let size_a = table_size(n, a_sites.len())?;
    let size_b = table_size(n, b_sites.len())?;
    let pow = |len: usize| (0..len).scan(1u64, |p, _| { let v = *p; *p *= n as u64; Some(v) }).collect::<Vec<_>>();

    // classes of B codes by color counts; rank within class in code order
    let mut class_ids: HashMap<Vec<u8>, u32> = HashMap::new();
    let mut class_sizes: Vec<u32> = Vec::new();
    let mut rank_b = vec![0u32; size_b];
    let mut class_of_b = vec![0u32; size_b];
    let mut members: Vec<Vec<u32>> = Vec::new();
    for b in 0..size_b {
        let key = counts_key(b as u64, n, b_sites.len());
        let id = *class_ids.entry(key).or_insert_with(|| {
            class_sizes.push(0);
            members.push(Vec::new());
            (class_sizes.len() - 1) as u32
        });
        rank_b[b] = class_sizes[id as usize];
        class_sizes[id as usize] += 1;
        class_of_b[b] = id;
        members[id as usize].push(b as u32);
    }

    let mut base_a = vec![NO_CLASS; size_a];
    let mut states = Vec::new();
    let mut offset: u64 = 0;
    for a in 0..size_a {
        let counts_a = counts_key(a as u64, n, a_sites.len());
        let needed: Option<Vec<u8>> = counts_a
            .iter()
            .zip(charge)
            .map(|(&ca, &q)| u8::try_from(ca as i32 - q).ok())
            .collect();
        let Some(id) = needed.and_then(|k| class_ids.get(&k).copied()) else {
            continue;
        };
        if offset > u32::MAX as u64 {
            return Err(Error::SectorTooLarge("sector dimension exceeds u32 ranks".into()));
        }
        base_a[a] = offset as u32;
        for &b in &members[id as usize] {
            states.push((a as u32, b));
        }
        offset += class_sizes[id as usize] as u64;
    }
    if states.is_empty() {
        return Err(Error::EmptySector(charge.to_vec()));
    }

    Ok(SectorBasis {
        n_colors,
        charge: charge.to_vec(),
        active_sites,
        slots,
        pow_a: pow(a_sites.len()),
        pow_b: pow(b_sites.len()),
        a_sites,
        b_sites,
        states,
        base_a,
        rank_b,
    })
}

/// Every charge vector realized on `geometry`, in lexicographic order.
pub fn all_charge_vectors(geometry: &LadderGeometry, n_colors: usize) -> Vec<Vec<i32>> {
    fn compositions(total: usize, parts: usize) -> Vec<Vec<i32>> {
        if parts == 1 {
            return vec![vec![total as i32]];
        }
        (0..=total)
            .flat_map(|k| {
                compositions(total - k, parts - 1).into_iter().map(move |mut rest| {
                    rest.insert(0, k as i32);
                    rest
                })
            })
            .collect()
    }
    let (mut na, mut nb) = (0, 0);
    for s in geometry.active_sites() {
        match geometry.sublattice(s) {
            Sublattice::A => na += 1,
            Sublattice::B => nb += 1,
        }
    }
    let mut out: Vec<Vec<i32>> = compositions(na, n_colors)
        .iter()
        .flat_map(|ca| {
            compositions(nb, n_colors)
                .into_iter()
                .map(move |cb| ca.iter().zip(&cb).map(|(x, y)| x - y).collect::<Vec<i32>>())
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

impl SectorBasis {
    pub fn n_colors(&self) -> usize {
        self.n_colors
    }

    pub fn charge(&self) -> &[i32] {
        &self.charge
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn active_sites(&self) -> &[usize] {
        &self.active_sites
    }

    pub fn n_a(&self) -> usize {
        self.a_sites.len()
    }

    pub fn n_b(&self) -> usize {
        self.b_sites.len()
    }

    /// Sublattice and digit position of a geometry site.
    pub fn slot(&self, site: usize) -> Option<(Sublattice, usize)> {
        self.slots.get(site).copied().flatten()
    }

    pub(crate) fn codes(&self, i: usize) -> (u32, u32) {
        self.states[i]
    }

    pub(crate) fn pow_a(&self) -> &[u64] {
        &self.pow_a
    }

    pub(crate) fn pow_b(&self) -> &[u64] {
        &self.pow_b
    }

    /// Rank of the state with codes `(a, b)`; the caller guarantees the codes
    /// lie in this sector.
    #[inline]
    pub(crate) fn rank_unchecked(&self, a: u64, b: u64) -> usize {
        self.base_a[a as usize] as usize + self.rank_b[b as usize] as usize
    }

    pub(crate) fn decode_into(&self, i: usize, a_digits: &mut Vec<u8>, b_digits: &mut Vec<u8>) {
        let (a, b) = self.states[i];
        digits(a as u64, self.n_colors, self.a_sites.len(), a_digits);
        digits(b as u64, self.n_colors, self.b_sites.len(), b_digits);
    }

    /// Color of a geometry site in basis state `i`.
    pub fn color(&self, i: usize, site: usize) -> u8 {
        let (a, b) = self.states[i];
        let n = self.n_colors as u64;
        match self.slot(site) {
            Some((Sublattice::A, k)) => ((a as u64 / self.pow_a[k]) % n) as u8,
            Some((Sublattice::B, k)) => ((b as u64 / self.pow_b[k]) % n) as u8,
            None => panic!("site {site} is not active"),
        }
    }

    pub fn state(&self, i: usize) -> ColorState {
        ColorState { colors: self.active_sites.iter().map(|&s| self.color(i, s)).collect() }
    }

    /// Rank of a color state, or `None` when it is outside the sector.
    pub fn index_of(&self, state: &ColorState) -> Option<usize> {
        if state.colors.len() != self.active_sites.len() {
            return None;
        }
        let (mut a, mut b) = (0u64, 0u64);
        for (&s, &c) in self.active_sites.iter().zip(&state.colors) {
            if c as usize >= self.n_colors {
                return None;
            }
            match self.slots[s] {
                Some((Sublattice::A, k)) => a += c as u64 * self.pow_a[k],
                Some((Sublattice::B, k)) => b += c as u64 * self.pow_b[k],
                None => return None,
            }
        }
        let base = *self.base_a.get(a as usize)?;
        if base == NO_CLASS {
            return None;
        }
        let i = base as usize + self.rank_b[b as usize] as usize;
        (self.states.get(i) == Some(&(a as u32, b as u32))).then_some(i)
    }
}

/// Exact sector dimension: `Σ_a multinom(|A|; a) · multinom(|B|; a − Q)`.
pub fn sector_dimension(n_a: usize, n_b: usize, charge: &[i32]) -> u128 {
    fn multinom(total: usize, parts: &[usize]) -> u128 {
        let mut r: u128 = 1;
        let mut acc = 0;
        for &p in parts {
            for k in 1..=p {
                acc += 1;
                r = r * acc as u128 / k as u128;
            }
        }
        debug_assert_eq!(acc, total);
        r
    }
    fn rec(idx: usize, left: usize, parts: &mut Vec<usize>, n_b: usize, n_a: usize, charge: &[i32], sum: &mut u128) {
        let n = charge.len();
        if idx == n - 1 {
            parts.push(left);
            let b: Option<Vec<usize>> = parts
                .iter()
                .zip(charge)
                .map(|(&a, &q)| usize::try_from(a as i64 - q as i64).ok())
                .collect();
            if let Some(b) = b {
                if b.iter().sum::<usize>() == n_b {
                    *sum += multinom(n_a, parts) * multinom(n_b, &b);
                }
            }
            parts.pop();
            return;
        }
        for k in 0..=left {
            parts.push(k);
            rec(idx + 1, left - k, parts, n_b, n_a, charge, sum);
            parts.pop();
        }
    }
    let mut sum = 0;
    rec(0, n_a, &mut Vec::new(), n_b, n_a, charge, &mut sum);
    sum
}
