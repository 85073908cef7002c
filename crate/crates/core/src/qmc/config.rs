//! SSE configuration for `H = −2NJ Σ_b P_s(b) + const` in the particle-hole
//! color basis. Every vertex (diagonal or not) has weight `2J`, so an
//! operator is fully described by its bond and the common color it leaves
//! on both sites; it is diagonal when that color equals the incoming one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::LadderGeometry;

const NULL: u32 = u32::MAX;
const UNSET: u8 = u8::MAX;
pub(crate) const INACTIVE: u8 = u8::MAX;

#[derive(Debug, Clone)]
pub struct SseConfiguration {
    n_colors: u8,
    bonds: Vec<[u32; 2]>,
    active: Vec<bool>,
    state: Vec<u8>,
    op_bond: Vec<u32>,
    op_color: Vec<u8>,
    n_ops: usize,
    rng: ChaCha8Rng,
    // loop-update scratch
    prop: Vec<u8>,
    first: Vec<u32>,
    last: Vec<u32>,
    links: Vec<u32>,
    leg_color: Vec<u8>,
    slot_of: Vec<u32>,
    op_sites: Vec<[u32; 2]>,
    moments: Option<Moments>,
}

/// Per-loop Fourier sums of worldline lengths along each leg, giving the
/// color-averaged static structure factor at `k = 0` and `k = 2π/L`.
#[derive(Debug, Clone)]
struct Moments {
    length: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    acc: Vec<[f64; 3]>,
    sums: [f64; 2],
}

/// Counters reported in run metadata.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UpdateStats {
    pub insert_attempts: u64,
    pub insert_accepted: u64,
    pub remove_attempts: u64,
    pub remove_accepted: u64,
    pub loops: u64,
    pub growths: u64,
}

impl SseConfiguration {
    /// Empty operator string, random colors on active sites.
    pub fn new(geometry: &LadderGeometry, n_colors: usize, seed: u64, stream: u64) -> Result<Self> {
        if !(2..=u8::MAX as usize - 1).contains(&n_colors) {
            return Err(Error::InvalidParameter(format!("unsupported number of colors {n_colors}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let n_sites = geometry.n_sites();
        let active: Vec<bool> = (0..n_sites).map(|s| geometry.is_active(s)).collect();
        let state = active.iter().map(|&a| if a { rng.gen_range(0..n_colors as u8) } else { INACTIVE }).collect();
        let bonds = geometry.bonds().iter().map(|b| [b.i as u32, b.j as u32]).collect();
        let m = 16;
        Ok(SseConfiguration {
            n_colors: n_colors as u8,
            bonds,
            active,
            state,
            op_bond: vec![NULL; m],
            op_color: vec![0; m],
            n_ops: 0,
            rng,
            prop: vec![0; n_sites],
            first: vec![NULL; n_sites],
            last: vec![NULL; n_sites],
            links: Vec::new(),
            leg_color: Vec::new(),
            slot_of: Vec::new(),
            op_sites: Vec::new(),
            moments: None,
        })
    }

    /// Enables loop moments for a lattice of the given shape; sites are
    /// indexed `y·length + x`.
    pub fn track_moments(&mut self, length: usize, legs: usize) -> Result<()> {
        if length * legs != self.n_sites() {
            return Err(Error::InvalidParameter(format!("{length}×{legs} does not match {} sites", self.n_sites())));
        }
        let q = 2.0 * std::f64::consts::PI / length as f64;
        self.moments = Some(Moments {
            length,
            cos: (0..length).map(|x| (q * x as f64).cos()).collect(),
            sin: (0..length).map(|x| (q * x as f64).sin()).collect(),
            acc: vec![[0.0; 3]; legs],
            sums: [0.0; 2],
        });
        Ok(())
    }

    /// `Σ_loops Σ_legs |W_k|²` for `k = 0, 2π/L` from the last loop update,
    /// where `W_k` sums `e^{ikx}` over the propagated states a loop visits.
    pub fn loop_moments(&self) -> Option<[f64; 2]> {
        self.moments.as_ref().map(|m| m.sums)
    }

    pub fn n_colors(&self) -> usize {
        self.n_colors as usize
    }

    pub fn n_sites(&self) -> usize {
        self.state.len()
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    pub fn bond_sites(&self, b: usize) -> [usize; 2] {
        let [i, j] = self.bonds[b];
        [i as usize, j as usize]
    }

    pub fn capacity(&self) -> usize {
        self.op_bond.len()
    }

    pub fn n_ops(&self) -> usize {
        self.n_ops
    }

    /// Colors at imaginary time 0 (`u8::MAX` on removed sites).
    pub fn state(&self) -> &[u8] {
        &self.state
    }

    pub fn is_active(&self, site: usize) -> bool {
        self.active[site]
    }

    /// Occupied slots in order as `(bond, color after the operator)`.
    pub fn operators(&self) -> impl Iterator<Item = (usize, u8)> + '_ {
        self.op_bond
            .iter()
            .zip(&self.op_color)
            .filter(|(b, _)| **b != NULL)
            .map(|(&b, &c)| (b as usize, c))
    }

    /// One pass over all slots inserting and removing diagonal operators.
    /// `weight` is `β·2J`.
    pub fn diagonal_update(&mut self, weight: f64, stats: &mut UpdateStats) {
        let nb = self.bonds.len();
        if nb == 0 {
            return;
        }
        let ratio = nb as f64 * weight;
        let m = self.op_bond.len();
        self.prop.copy_from_slice(&self.state);
        for p in 0..m {
            let b = self.op_bond[p];
            if b == NULL {
                let k = self.rng.gen_range(0..nb);
                let [i, j] = self.bonds[k];
                stats.insert_attempts += 1;
                let c = self.prop[i as usize];
                if c != self.prop[j as usize] {
                    continue;
                }
                let acc = ratio / (m - self.n_ops) as f64;
                assert!(acc >= 0.0, "negative insertion weight");
                if acc >= 1.0 || self.rng.gen::<f64>() < acc {
                    self.op_bond[p] = k as u32;
                    self.op_color[p] = c;
                    self.n_ops += 1;
                    stats.insert_accepted += 1;
                }
            } else {
                let [i, j] = self.bonds[b as usize];
                let c = self.op_color[p];
                if c == self.prop[i as usize] {
                    stats.remove_attempts += 1;
                    let acc = (m - self.n_ops + 1) as f64 / ratio;
                    if acc >= 1.0 || self.rng.gen::<f64>() < acc {
                        self.op_bond[p] = NULL;
                        self.n_ops -= 1;
                        stats.remove_accepted += 1;
                    }
                } else {
                    self.prop[i as usize] = c;
                    self.prop[j as usize] = c;
                }
            }
        }
    }

    /// Grows the string by a third when more than 3/4 of it is occupied,
    /// scattering the new empty slots uniformly.
    pub fn adjust_capacity(&mut self, stats: &mut UpdateStats) -> bool {
        let m = self.op_bond.len();
        if 4 * self.n_ops < 3 * m {
            return false;
        }
        let extra = (m / 3).max(4);
        let total = m + extra;
        let mut bond = Vec::with_capacity(total);
        let mut color = Vec::with_capacity(total);
        let (mut old_left, mut new_left) = (m, extra);
        let mut p = 0;
        while old_left + new_left > 0 {
            // uniform random interleaving of the old slots and the new nulls
            if self.rng.gen_range(0..old_left + new_left) < new_left {
                bond.push(NULL);
                color.push(0);
                new_left -= 1;
            } else {
                bond.push(self.op_bond[p]);
                color.push(self.op_color[p]);
                p += 1;
                old_left -= 1;
            }
        }
        self.op_bond = bond;
        self.op_color = color;
        stats.growths += 1;
        true
    }

    /// Builds the linked-leg list and recolors every loop uniformly. Leg
    /// `4q + l` of the `q`-th operator: 0/1 below on the bond's two sites,
    /// 2/3 above; the projector pairs 0↔1 and 2↔3.
    pub fn loop_update(&mut self, stats: &mut UpdateStats) -> Result<()> {
        let n = self.n_ops;
        self.links.clear();
        self.links.resize(4 * n, NULL);
        self.slot_of.clear();
        self.op_sites.clear();
        self.first.fill(NULL);
        self.last.fill(NULL);
        for (p, &b) in self.op_bond.iter().enumerate() {
            if b == NULL {
                continue;
            }
            let q = self.slot_of.len() as u32;
            self.slot_of.push(p as u32);
            let [i, j] = self.bonds[b as usize];
            self.op_sites.push([i, j]);
            for (l, s) in [(0u32, i as usize), (1, j as usize)] {
                let v = 4 * q + l;
                let prev = self.last[s];
                if prev == NULL {
                    self.first[s] = v;
                } else {
                    self.links[prev as usize] = v;
                    self.links[v as usize] = prev;
                }
                self.last[s] = v + 2;
            }
        }
        for s in 0..self.first.len() {
            let f = self.first[s];
            if f != NULL {
                let l = self.last[s];
                self.links[f as usize] = l;
                self.links[l as usize] = f;
            }
        }

        self.leg_color.clear();
        self.leg_color.resize(4 * n, UNSET);
        let nc = self.n_colors;
        let mut moments = self.moments.take();
        if let Some(m) = moments.as_mut() {
            m.sums = [0.0; 2];
        }
        for v0 in 0..4 * n {
            if self.leg_color[v0] != UNSET {
                continue;
            }
            let c = self.rng.gen_range(0..nc);
            stats.loops += 1;
            if let Some(m) = moments.as_mut() {
                m.acc.iter_mut().for_each(|a| *a = [0.0; 3]);
            }
            let mut v = v0;
            let mut steps = 0;
            loop {
                self.leg_color[v] = c;
                let w = v ^ 1;
                self.leg_color[w] = c;
                v = self.links[w] as usize;
                if let Some(m) = moments.as_mut() {
                    // worldline segment from leg w to leg v
                    let (qw, qv) = (w / 4, v / 4);
                    let d = if w & 2 != 0 { (qv + n - qw) % n } else { (qw + n - qv) % n };
                    let d = if d == 0 { n } else { d } as f64;
                    let s = self.op_sites[qw][w & 1] as usize;
                    let (y, x) = (s / m.length, s % m.length);
                    let a = &mut m.acc[y];
                    a[0] += d;
                    a[1] += d * m.cos[x];
                    a[2] += d * m.sin[x];
                }
                if v == v0 {
                    break;
                }
                steps += 1;
                if steps > 4 * n {
                    return Err(Error::Internal("operator loop failed to close".into()));
                }
            }
            if let Some(m) = moments.as_mut() {
                for a in &m.acc {
                    m.sums[0] += a[0] * a[0];
                    m.sums[1] += a[1] * a[1] + a[2] * a[2];
                }
            }
        }
        if let Some(m) = moments.as_mut() {
            // sites without operators are single loops of length n
            let free = self.first.iter().zip(&self.active).filter(|(&f, &a)| a && f == NULL).count() as f64;
            let nf = n as f64;
            m.sums[0] += free * nf * nf;
            m.sums[1] += free * nf * nf;
        }
        self.moments = moments;

        for (q, &p) in self.slot_of.iter().enumerate() {
            self.op_color[p as usize] = self.leg_color[4 * q + 2];
        }
        for s in 0..self.state.len() {
            if !self.active[s] {
                continue;
            }
            let f = self.first[s];
            self.state[s] = if f == NULL {
                stats.loops += 1;
                self.rng.gen_range(0..nc)
            } else {
                self.leg_color[f as usize]
            };
        }
        Ok(())
    }

    /// Checks periodicity in imaginary time and color matching at every
    /// vertex.
    pub fn validate(&self) -> Result<()> {
        let mut prop = self.state.clone();
        let mut count = 0;
        for (p, (&b, &c)) in self.op_bond.iter().zip(&self.op_color).enumerate() {
            if b == NULL {
                continue;
            }
            count += 1;
            let [i, j] = self.bonds[b as usize];
            let (ci, cj) = (prop[i as usize], prop[j as usize]);
            if ci != cj {
                return Err(Error::Internal(format!("slot {p}: operator on bond {b} sees colors {ci} and {cj}")));
            }
            if c >= self.n_colors {
                return Err(Error::Internal(format!("slot {p}: invalid color {c}")));
            }
            prop[i as usize] = c;
            prop[j as usize] = c;
        }
        if count != self.n_ops || self.n_ops >= self.op_bond.len() {
            return Err(Error::Internal(format!(
                "operator count {} / {count} with capacity {}",
                self.n_ops,
                self.op_bond.len()
            )));
        }
        if prop != self.state {
            return Err(Error::Internal("state is not periodic in imaginary time".into()));
        }
        if self.state.iter().zip(&self.active).any(|(&c, &a)| a != (c != INACTIVE) || (a && c >= self.n_colors)) {
            return Err(Error::Internal("invalid site color".into()));
        }
        Ok(())
    }

    /// Calls `on_op(q, i, j, old, new)` for every operator in order, with
    /// `prop` holding the colors just before operator `q`.
    pub(crate) fn propagate<F: FnMut(usize, &[u8], usize, usize, u8)>(&self, prop: &mut Vec<u8>, mut on_op: F) {
        prop.clear();
        prop.extend_from_slice(&self.state);
        let mut q = 0;
        for (&b, &c) in self.op_bond.iter().zip(&self.op_color) {
            if b == NULL {
                continue;
            }
            let [i, j] = self.bonds[b as usize];
            on_op(q, prop, i as usize, j as usize, c);
            prop[i as usize] = c;
            prop[j as usize] = c;
            q += 1;
        }
    }
}
