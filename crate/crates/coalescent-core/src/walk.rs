//! Conditioned-random-walk construction of the coalescent state chain.
//!
//! A configuration occupies at most `n` of the `(k-1)n + 1` sites of a
//! discrete cycle. Reading the sites in order yields a lattice path (up-step
//! `k - 2` on an occupied site, down-step `1` otherwise); the excursion
//! intervals of that path above two consecutive new minima partition the
//! cycle into arcs, and the ranked arc lengths form a mass partition. Adding
//! sites one at a time (`X`) realizes the coalescent state chain; removing
//! them from a full configuration (`Y`) realizes the dual fragmentation
//! chain.

use crate::error::{Error, Result};
use crate::exact::{dislocation_support, dislocation_weight};
use crate::partition::MassPartition;
use crate::rng::{root_rng, SimRng};
use num_bigint::{BigUint, RandBigInt};
use rand::Rng;

/// Subset of the `(k-1)n + 1` cycle sites, at most `n` of them occupied.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteConfiguration {
    n: usize,
    arity: u32,
    occupied: Vec<bool>,
    count: usize,
}

impl SiteConfiguration {
    pub fn empty(n: usize, arity: u32) -> Result<Self> {
        if arity < 3 {
            return Err(Error::InvalidParameter(format!("arity must be >= 3, got {arity}")));
        }
        let sites = (arity as usize - 1) * n + 1;
        Ok(Self { n, arity, occupied: vec![false; sites], count: 0 })
    }

    pub fn from_sites(n: usize, arity: u32, sites: &[usize]) -> Result<Self> {
        let mut cfg = Self::empty(n, arity)?;
        for &s in sites {
            if s >= cfg.occupied.len() {
                return Err(Error::InvalidParameter(format!("site {s} out of range")));
            }
            if cfg.occupied[s] {
                return Err(Error::InvalidParameter(format!("site {s} repeated")));
            }
            cfg.occupied[s] = true;
            cfg.count += 1;
        }
        if cfg.count > n {
            return Err(Error::InvalidParameter(format!(
                "{} occupied sites exceed capacity {n}",
                cfg.count
            )));
        }
        Ok(cfg)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn n_sites(&self) -> usize {
        self.occupied.len()
    }

    pub fn occupied_count(&self) -> usize {
        self.count
    }

    /// Sorted list of occupied sites.
    pub fn sites(&self) -> Vec<usize> {
        (0..self.occupied.len()).filter(|&i| self.occupied[i]).collect()
    }

    /// Cyclic shift: site `i` of the result is site `i + by` of `self`.
    pub fn rotate(&self, by: usize) -> Self {
        let sites = self.occupied.len();
        let mut occupied = vec![false; sites];
        for (i, slot) in occupied.iter_mut().enumerate() {
            *slot = self.occupied[(i + by) % sites];
        }
        Self { n: self.n, arity: self.arity, occupied, count: self.count }
    }
}

/// Lattice path with increments in `{+(k-2), -1}`, starting at zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticePath {
    values: Vec<i64>,
}

impl LatticePath {
    /// Wrap raw values; the path must start at zero and be nonempty.
    /// Increment validation is left to the consumers, which differ by arity.
    pub fn from_values(values: Vec<i64>) -> Result<Self> {
        if values.is_empty() || values[0] != 0 {
            return Err(Error::InvalidParameter("path must start at zero".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn terminal(&self) -> i64 {
        *self.values.last().expect("path has at least the origin")
    }
}

/// The walk encoding of a configuration: one increment per site.
pub fn path_of(x: &SiteConfiguration) -> LatticePath {
    let up = x.arity as i64 - 2;
    let mut values = Vec::with_capacity(x.occupied.len() + 1);
    let mut v = 0i64;
    values.push(v);
    for &occ in &x.occupied {
        v += if occ { up } else { -1 };
        values.push(v);
    }
    LatticePath { values }
}

/// Inverse of [`path_of`]; rejects malformed increments or overfull
/// configurations.
pub fn decode_path(path: &LatticePath, arity: u32) -> Result<SiteConfiguration> {
    if arity < 3 {
        return Err(Error::InvalidParameter(format!("arity must be >= 3, got {arity}")));
    }
    let steps = path.values.len().saturating_sub(1);
    if steps == 0 || (steps - 1) % (arity as usize - 1) != 0 {
        return Err(Error::InvalidParameter(format!(
            "path of {steps} steps does not fit arity {arity}"
        )));
    }
    if path.values[0] != 0 {
        return Err(Error::InvalidParameter("path must start at zero".into()));
    }
    let n = (steps - 1) / (arity as usize - 1);
    let up = arity as i64 - 2;
    let mut sites = Vec::new();
    for (i, w) in path.values.windows(2).enumerate() {
        let inc = w[1] - w[0];
        if inc == up {
            sites.push(i);
        } else if inc != -1 {
            return Err(Error::InvalidParameter(format!("increment {inc} invalid")));
        }
    }
    SiteConfiguration::from_sites(n, arity, &sites)
}

/// Cyclically ordered partition of the cycle into discrete arcs, stored by
/// increasing start point; the last arc wraps around.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcPartition {
    starts: Vec<usize>,
    cycle: usize,
}

impl ArcPartition {
    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    pub fn cycle_len(&self) -> usize {
        self.cycle
    }

    /// Arc lengths in arc order; the final entry is the wrap-around arc.
    pub fn lengths(&self) -> Vec<usize> {
        let m = self.starts.len();
        let mut out = Vec::with_capacity(m);
        for i in 0..m - 1 {
            out.push(self.starts[i + 1] - self.starts[i]);
        }
        out.push(self.cycle - self.starts[m - 1] + self.starts[0]);
        out
    }
}

/// Excursion intervals of the walk above two consecutive new minima.
///
/// With `M = -terminal`, the arc start points are the first hitting times
/// `a_i = m_{M-i}` of the levels `min + M - i`; down-steps of size one make
/// those times strictly increasing.
pub fn phi1(x: &SiteConfiguration) -> ArcPartition {
    let path = path_of(x);
    let values = path.values();
    let min = *values.iter().min().expect("nonempty");
    let m_arcs = (-path.terminal()) as usize;
    debug_assert!(m_arcs >= 1);
    let mut first_hit = vec![usize::MAX; m_arcs];
    for (j, &v) in values.iter().enumerate() {
        let idx = v - min;
        if idx >= 0 && (idx as usize) < m_arcs && first_hit[idx as usize] == usize::MAX {
            first_hit[idx as usize] = j;
        }
    }
    // a_i = m_{M-i}: deepest level hit last.
    let starts: Vec<usize> = (0..m_arcs).map(|i| first_hit[m_arcs - 1 - i]).collect();
    debug_assert!(starts.windows(2).all(|w| w[0] < w[1]));
    ArcPartition { starts, cycle: x.n_sites() }
}

/// Ranked arc lengths: the mass partition carried by a configuration.
pub fn phi(x: &SiteConfiguration) -> MassPartition {
    let lengths: Vec<u64> = phi1(x).lengths().iter().map(|&l| l as u64).collect();
    MassPartition::rank(&lengths).expect("arcs are nonempty")
}

/// Occupy one uniformly chosen vacant site (the chain `X`).
pub fn step_x(x: &SiteConfiguration, rng: &mut SimRng) -> Result<SiteConfiguration> {
    if x.count >= x.n {
        return Err(Error::InvalidParameter(format!(
            "configuration already holds {} sites",
            x.count
        )));
    }
    let vacant = x.n_sites() - x.count;
    let mut pick = rng.gen_range(0..vacant);
    let mut next = x.clone();
    for i in 0..next.occupied.len() {
        if !next.occupied[i] {
            if pick == 0 {
                next.occupied[i] = true;
                next.count += 1;
                return Ok(next);
            }
            pick -= 1;
        }
    }
    unreachable!("vacant site must exist");
}

/// Remove one uniformly chosen occupied site (the chain `Y`).
pub fn step_y(x: &SiteConfiguration, rng: &mut SimRng) -> Result<SiteConfiguration> {
    if x.count == 0 {
        return Err(Error::InvalidParameter("no occupied site to remove".into()));
    }
    let mut pick = rng.gen_range(0..x.count);
    let mut next = x.clone();
    for i in 0..next.occupied.len() {
        if next.occupied[i] {
            if pick == 0 {
                next.occupied[i] = false;
                next.count -= 1;
                return Ok(next);
            }
            pick -= 1;
        }
    }
    unreachable!("occupied site must exist");
}

/// Uniform `size`-subset of the sites, by partial Fisher-Yates.
pub fn uniform_configuration(
    n: usize,
    arity: u32,
    size: usize,
    rng: &mut SimRng,
) -> Result<SiteConfiguration> {
    let mut cfg = SiteConfiguration::empty(n, arity)?;
    if size > n {
        return Err(Error::InvalidParameter(format!("subset size {size} exceeds {n}")));
    }
    let total = cfg.n_sites();
    let mut idx: Vec<usize> = (0..total).collect();
    for i in 0..size {
        let j = rng.gen_range(i..total);
        idx.swap(i, j);
        cfg.occupied[idx[i]] = true;
    }
    cfg.count = size;
    Ok(cfg)
}

/// One fragmentation move of the ternary chain `phi(Y)` at step `l`:
/// pick the part to split with probability `(s_i - 1)/(2(n - l))`, then
/// split it into three odd parts by the dislocation law of its size.
pub fn frag_transition(
    p: &MassPartition,
    l: usize,
    n: usize,
    rng: &mut SimRng,
) -> Result<MassPartition> {
    if l >= n {
        return Err(Error::InconsistentState(format!("no fragmentation left at l={l}, n={n}")));
    }
    if p.len() != 2 * l + 1 || p.total_mass() != 2 * n as u64 + 1 {
        return Err(Error::InconsistentState(format!(
            "state {p} is not a fragmentation state at l={l}, n={n}"
        )));
    }
    let weight_total: u64 = p.masses().iter().map(|&s| s - 1).sum();
    if weight_total != 2 * (n as u64 - l as u64) {
        return Err(Error::InconsistentState(format!(
            "index weights sum to {weight_total}, expected {}",
            2 * (n - l)
        )));
    }
    let mut draw = rng.gen_range(0..weight_total);
    let mut chosen = 0usize;
    for (i, &s) in p.masses().iter().enumerate() {
        let w = s - 1;
        if draw < w {
            chosen = i;
            break;
        }
        draw -= w;
    }
    let split = sample_dislocation(p.masses()[chosen], rng);
    let mut masses: Vec<u64> = Vec::with_capacity(p.len() + 2);
    for (i, &s) in p.masses().iter().enumerate() {
        if i != chosen {
            masses.push(s);
        }
    }
    masses.extend_from_slice(&split);
    MassPartition::rank(&masses)
}

/// Exact draw from the dislocation law `mu_s` via its integer weights.
pub fn sample_dislocation(s: u64, rng: &mut SimRng) -> [u64; 3] {
    debug_assert!(s >= 3 && s % 2 == 1);
    let support = dislocation_support(s);
    let weights: Vec<BigUint> = support.iter().map(dislocation_weight).collect();
    let total: BigUint = weights.iter().sum();
    let mut draw = rng.gen_biguint_below(&total);
    for (r, w) in support.iter().zip(&weights) {
        if draw < *w {
            return *r;
        }
        draw -= w;
    }
    unreachable!("weights cover the draw");
}

/// One coagulation move of the ternary chain `phi(X)` at step `l`: a triple
/// is merged with probability `(s_i + s_j + s_k + 3)` over
/// `(2n + 1 - l) 2(n - l)(2(n - l) - 1)`, realized by the size-biased
/// first-index decomposition.
pub fn coal_transition(
    p: &MassPartition,
    l: usize,
    n: usize,
    rng: &mut SimRng,
) -> Result<MassPartition> {
    if p.len() != 2 * (n - l) + 1 || p.total_mass() != 2 * n as u64 + 1 {
        return Err(Error::InconsistentState(format!(
            "state {p} is not a coalescent state at l={l}, n={n}"
        )));
    }
    if p.len() < 3 {
        return Err(Error::InconsistentState("fewer than three parts".into()));
    }
    // Triple weight s_i + s_j + s_k + 3 = sum of per-part weights s + 1.
    let total: u64 = p.masses().iter().map(|&s| s + 1).sum();
    let mut draw = rng.gen_range(0..total);
    let mut first = p.len() - 1;
    for (i, &s) in p.masses().iter().enumerate() {
        let w = s + 1;
        if draw < w {
            first = i;
            break;
        }
        draw -= w;
    }
    let len = p.len();
    let mut chosen = vec![first];
    while chosen.len() < 3 {
        let mut c = rng.gen_range(0..len - 1);
        if c >= first {
            c += 1;
        }
        if !chosen[1..].contains(&c) {
            chosen.push(c);
        }
    }
    chosen.sort_unstable();
    p.merge_indices(&chosen)
}

/// Which chain [`run_chain`] generates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Coalescent order: occupy sites, `phi(X_0), ..., phi(X_n)`.
    Build,
    /// Fragmentation order: start full, remove sites, `phi(Y_0), ..., phi(Y_n)`.
    Destroy,
}

/// Full state-chain sample of length `n + 1`.
pub fn run_chain(direction: Direction, n: usize, arity: u32, seed: u64) -> Result<Vec<MassPartition>> {
    let mut rng = root_rng(seed);
    run_chain_with(direction, n, arity, &mut rng)
}

/// Same as [`run_chain`] with a caller-provided generator.
pub fn run_chain_with(
    direction: Direction,
    n: usize,
    arity: u32,
    rng: &mut SimRng,
) -> Result<Vec<MassPartition>> {
    let mut states = Vec::with_capacity(n + 1);
    match direction {
        Direction::Build => {
            let mut x = SiteConfiguration::empty(n, arity)?;
            states.push(phi(&x));
            for _ in 0..n {
                x = step_x(&x, rng)?;
                states.push(phi(&x));
            }
        }
        Direction::Destroy => {
            let mut y = uniform_configuration(n, arity, n, rng)?;
            states.push(phi(&y));
            for _ in 0..n {
                y = step_y(&y, rng)?;
                states.push(phi(&y));
            }
        }
    }
    Ok(states)
}
