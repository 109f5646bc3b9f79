//! Independent brute-force oracles.
//!
//! Everything here is computed by exhaustive enumeration or dynamic
//! programming over raw path counts, never through the closed forms of
//! [`crate::exact`]; the test suites compare the two sides as exact
//! rationals. Enumeration bounds are hard-coded and produce clear errors.

use crate::error::{Error, Result};
use crate::exact::BlockPartition;
use crate::forest::LabeledBinaryForest;
use crate::numeric::{ratio, rational_int, Rational};
use crate::partition::MassPartition;
use crate::walk::{phi, SiteConfiguration};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

const MAX_PARTITION_N: u64 = 11;
const MAX_CHAIN_N: usize = 3;
const MAX_FOREST_N: usize = 7;
const MAX_PATH_LEN: u64 = 40;

/// Exact finite distribution over mass partitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactDistribution {
    probs: BTreeMap<MassPartition, Rational>,
}

impl ExactDistribution {
    /// Validates positivity and exact normalization.
    pub fn new(probs: BTreeMap<MassPartition, Rational>) -> Result<Self> {
        let mut sum = Rational::zero();
        for p in probs.values() {
            if *p <= Rational::zero() {
                return Err(Error::InvalidParameter("nonpositive probability".into()));
            }
            sum += p;
        }
        if sum != rational_int(1) {
            return Err(Error::InvalidParameter(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn get(&self, state: &MassPartition) -> Rational {
        self.probs.get(state).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MassPartition, &Rational)> {
        self.probs.iter()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Support with float masses, for the statistical tests.
    pub fn to_float_pairs(&self) -> Vec<(MassPartition, f64)> {
        self.probs
            .iter()
            .map(|(k, v)| (k.clone(), crate::numeric::rational_to_f64(v)))
            .collect()
    }
}

/// All partitions of `total` into exactly `parts` odd parts, descending.
pub fn odd_partitions(total: u64, parts: u64) -> Vec<MassPartition> {
    fn go(total: u64, parts: u64, max: u64, prefix: &mut Vec<u64>, out: &mut Vec<MassPartition>) {
        if parts == 0 {
            if total == 0 {
                out.push(MassPartition::rank(prefix).expect("nonempty"));
            }
            return;
        }
        let mut first = max.min(total.saturating_sub(parts - 1));
        if first == 0 {
            return;
        }
        if first % 2 == 0 {
            first -= 1;
        }
        let mut v = first;
        while v >= 1 {
            prefix.push(v);
            go(total - v, parts - 1, v, prefix, out);
            prefix.pop();
            if v < 2 {
                break;
            }
            v -= 2;
        }
    }
    let mut out = Vec::new();
    if parts == 0 || total < parts || (total - parts) % 2 != 0 {
        return out;
    }
    let mut prefix = Vec::new();
    go(total, parts, total, &mut prefix, &mut out);
    out
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        if n - start < k - cur.len() {
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

/// Exact law of the `k`-ary jump chain after `l` merges from unit atoms, by
/// dynamic programming over ranked states.
pub fn enumerate_skeleton_kary(
    n_particles: u64,
    l: u64,
    arity: u32,
) -> Result<ExactDistribution> {
    if arity < 3 {
        return Err(Error::InvalidParameter(format!("arity must be >= 3, got {arity}")));
    }
    if n_particles > MAX_PARTITION_N + 2 {
        return Err(Error::EnumerationBound(format!(
            "skeleton enumeration capped at N = {}, got {n_particles}",
            MAX_PARTITION_N + 2
        )));
    }
    let k = arity as usize;
    if n_particles == 0 || (n_particles - 1) % (arity as u64 - 1) != 0 {
        return Err(Error::InvalidParameter(format!(
            "{n_particles} particles cannot absorb under arity {arity}"
        )));
    }
    if l > (n_particles - 1) / (arity as u64 - 1) {
        return Err(Error::InvalidParameter(format!("no {l}-th jump state")));
    }
    let mut dist: BTreeMap<MassPartition, Rational> = BTreeMap::new();
    dist.insert(MassPartition::units(n_particles as usize)?, rational_int(1));
    for _ in 0..l {
        let mut next: BTreeMap<MassPartition, Rational> = BTreeMap::new();
        for (state, prob) in dist {
            let masses = state.masses();
            let scaled: Vec<u64> =
                masses.iter().map(|&m| (arity as u64 - 2) * m + 1).collect();
            let per_index: u64 = scaled.iter().sum();
            // Total set weight = C(L-1, k-1) * sum_i scaled_i.
            let choose = crate::numeric::binomial(masses.len() as u64 - 1, arity as u64 - 1);
            let total = BigUint::from(per_index) * choose;
            for set in subsets_of_size(masses.len(), k) {
                let w: u64 = set.iter().map(|&i| scaled[i]).sum();
                let p = prob.clone() * ratio(BigUint::from(w), total.clone());
                let merged = state.merge_indices(&set)?;
                *next.entry(merged).or_insert_with(Rational::zero) += p;
            }
        }
        dist = next;
    }
    ExactDistribution::new(dist)
}

/// Ternary case of [`enumerate_skeleton_kary`]: exact law of `X'_l`.
pub fn enumerate_skeleton(n_particles: u64, l: u64) -> Result<ExactDistribution> {
    if n_particles > MAX_PARTITION_N {
        return Err(Error::EnumerationBound(format!(
            "skeleton enumeration capped at N = {MAX_PARTITION_N}, got {n_particles}"
        )));
    }
    if n_particles % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "particle count must be odd, got {n_particles}"
        )));
    }
    enumerate_skeleton_kary(n_particles, l, 3)
}

/// Number of `+-1` paths of length `m` first hitting `-1` at `m`; raw DP.
fn count_h1(m: u64) -> BigUint {
    brute_first_passage(3, 1, m).expect("within bound")
}

/// Dislocation law by conditioned path counting: the probability of the
/// multiset `R` is proportional to `gamma(R)` times the product of the
/// first-passage counts of its members.
pub fn mu_oracle(s: u64) -> Result<BTreeMap<[u64; 3], Rational>> {
    if s > MAX_PATH_LEN {
        return Err(Error::EnumerationBound(format!(
            "dislocation oracle capped at s = {MAX_PATH_LEN}, got {s}"
        )));
    }
    if s < 3 || s % 2 == 0 {
        return Err(Error::InvalidParameter(format!("invalid dislocating mass {s}")));
    }
    let mut weights: BTreeMap<[u64; 3], BigUint> = BTreeMap::new();
    let mut total = BigUint::zero();
    let mut r1 = 1u64;
    while r1 <= s - 2 {
        let mut r2 = 1u64;
        while r1 + r2 <= s - 1 {
            let r3 = s - r1 - r2;
            if r3 % 2 == 1 {
                // Ordered triples accumulate multiplicity automatically.
                let w = count_h1(r1) * count_h1(r2) * count_h1(r3);
                let mut key = [r1, r2, r3];
                key.sort_unstable_by(|a, b| b.cmp(a));
                total += &w;
                *weights.entry(key).or_insert_with(BigUint::zero) += w;
            }
            r2 += 2;
        }
        r1 += 2;
    }
    Ok(weights.into_iter().map(|(k, w)| (k, ratio(w, total.clone()))).collect())
}

/// Exact law of the fragmentation chain `phi(Y_l)` from a single mass `N`,
/// by dynamic programming with the path-count dislocation oracle.
pub fn enumerate_frag(n_particles: u64, l: u64) -> Result<ExactDistribution> {
    if n_particles > MAX_PARTITION_N {
        return Err(Error::EnumerationBound(format!(
            "fragmentation enumeration capped at N = {MAX_PARTITION_N}, got {n_particles}"
        )));
    }
    if n_particles % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "particle count must be odd, got {n_particles}"
        )));
    }
    let n = (n_particles - 1) / 2;
    if l > n {
        return Err(Error::InvalidParameter(format!("no {l}-th fragmentation state")));
    }
    let mut mu_cache: BTreeMap<u64, BTreeMap<[u64; 3], Rational>> = BTreeMap::new();
    let mut dist: BTreeMap<MassPartition, Rational> = BTreeMap::new();
    dist.insert(MassPartition::rank(&[n_particles])?, rational_int(1));
    for step in 0..l {
        let mut next: BTreeMap<MassPartition, Rational> = BTreeMap::new();
        let denom = 2 * (n - step);
        for (state, prob) in dist {
            for (i, &s) in state.masses().iter().enumerate() {
                if s == 1 {
                    continue;
                }
                let p_index = prob.clone() * ratio(BigUint::from(s - 1), BigUint::from(denom));
                let mu = mu_cache.entry(s).or_insert_with(|| mu_oracle(s).expect("bounded"));
                for (split, p_split) in mu.iter() {
                    let mut masses: Vec<u64> = state
                        .masses()
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, &m)| m)
                        .collect();
                    masses.extend_from_slice(split);
                    let new_state = MassPartition::rank(&masses)?;
                    *next.entry(new_state).or_insert_with(Rational::zero) +=
                        p_index.clone() * p_split.clone();
                }
            }
        }
        dist = next;
    }
    ExactDistribution::new(dist)
}

/// Joint laws of the site chains `X` (occupying) and `Y` (vacating) over all
/// configuration sequences, for duality checks. Ternary.
#[derive(Debug, Clone)]
pub struct ConfigurationChainLaw {
    pub n: usize,
    pub x_chains: BTreeMap<Vec<SiteConfiguration>, Rational>,
    pub y_chains: BTreeMap<Vec<SiteConfiguration>, Rational>,
}

impl ConfigurationChainLaw {
    /// Exact duality: the law of `(Y_n, ..., Y_0)` equals the law of
    /// `(X_0, ..., X_n)`.
    pub fn reversed_y_equals_x(&self) -> bool {
        let reversed: BTreeMap<Vec<SiteConfiguration>, Rational> = self
            .y_chains
            .iter()
            .map(|(seq, p)| {
                let mut rev = seq.clone();
                rev.reverse();
                (rev, p.clone())
            })
            .collect();
        reversed == self.x_chains
    }

    /// Pushforward of the X-chain law through `phi`, as partition sequences.
    pub fn pushforward_x(&self) -> BTreeMap<Vec<MassPartition>, Rational> {
        push(&self.x_chains, false)
    }

    /// Pushforward of the time-reversed Y-chain law through `phi`.
    pub fn pushforward_y_reversed(&self) -> BTreeMap<Vec<MassPartition>, Rational> {
        push(&self.y_chains, true)
    }

    /// Marginal law of `phi(X_l)`.
    pub fn phi_marginal_x(&self, l: usize) -> Result<ExactDistribution> {
        let mut probs: BTreeMap<MassPartition, Rational> = BTreeMap::new();
        for (seq, p) in &self.x_chains {
            *probs.entry(phi(&seq[l])).or_insert_with(Rational::zero) += p;
        }
        ExactDistribution::new(probs)
    }
}

fn push(
    chains: &BTreeMap<Vec<SiteConfiguration>, Rational>,
    reverse: bool,
) -> BTreeMap<Vec<MassPartition>, Rational> {
    let mut out: BTreeMap<Vec<MassPartition>, Rational> = BTreeMap::new();
    for (seq, p) in chains {
        let mut states: Vec<MassPartition> = seq.iter().map(phi).collect();
        if reverse {
            states.reverse();
        }
        *out.entry(states).or_insert_with(Rational::zero) += p;
    }
    out
}

/// Enumerate both site chains exhaustively; `n <= 3` keeps the joint state
/// space within bounds.
pub fn enumerate_configuration_chain(n: usize) -> Result<ConfigurationChainLaw> {
    if n > MAX_CHAIN_N {
        return Err(Error::EnumerationBound(format!(
            "configuration chains capped at n = {MAX_CHAIN_N}, got {n}"
        )));
    }
    let sites = 2 * n + 1;
    // X: occupy one uniformly chosen vacant site per step, n steps.
    let mut x_chains: BTreeMap<Vec<SiteConfiguration>, Rational> = BTreeMap::new();
    let empty = SiteConfiguration::empty(n, 3)?;
    let mut stack: Vec<(Vec<usize>, Rational)> = vec![(Vec::new(), rational_int(1))];
    for step in 0..n {
        let mut grown = Vec::new();
        let step_prob = ratio(BigUint::one(), BigUint::from(sites - step));
        for (sites_so_far, p) in stack {
            for site in 0..sites {
                if !sites_so_far.contains(&site) {
                    let mut nxt = sites_so_far.clone();
                    nxt.push(site);
                    grown.push((nxt, p.clone() * step_prob.clone()));
                }
            }
        }
        stack = grown;
    }
    for (order, p) in &stack {
        let mut seq = vec![empty.clone()];
        for i in 1..=order.len() {
            seq.push(SiteConfiguration::from_sites(n, 3, &order[..i])?);
        }
        *x_chains.entry(seq).or_insert_with(Rational::zero) += p;
    }
    if n == 0 {
        x_chains.insert(vec![empty.clone()], rational_int(1));
    }

    // Y: start from a uniform n-subset, vacate one occupied site per step.
    let mut y_chains: BTreeMap<Vec<SiteConfiguration>, Rational> = BTreeMap::new();
    let n_subsets = subsets_of_size(sites, n);
    let start_prob = ratio(BigUint::one(), BigUint::from(n_subsets.len() as u64));
    for start in &n_subsets {
        let mut orders: Vec<(Vec<usize>, Rational)> = vec![(start.clone(), start_prob.clone())];
        let mut seqs: Vec<(Vec<Vec<usize>>, Rational)> =
            orders.drain(..).map(|(s, p)| (vec![s], p)).collect();
        for step in 0..n {
            let remove_prob = ratio(BigUint::one(), BigUint::from((n - step) as u64));
            let mut grown = Vec::new();
            for (seq, p) in seqs {
                let last = seq.last().unwrap().clone();
                for &gone in &last {
                    let nxt: Vec<usize> =
                        last.iter().copied().filter(|&s| s != gone).collect();
                    let mut seq2 = seq.clone();
                    seq2.push(nxt);
                    grown.push((seq2, p.clone() * remove_prob.clone()));
                }
            }
            seqs = grown;
        }
        for (seq, p) in seqs {
            let cfg_seq: Vec<SiteConfiguration> = seq
                .iter()
                .map(|s| SiteConfiguration::from_sites(n, 3, s))
                .collect::<Result<_>>()?;
            *y_chains.entry(cfg_seq).or_insert_with(Rational::zero) += p;
        }
    }
    Ok(ConfigurationChainLaw { n, x_chains, y_chains })
}

/// Exact law of `phi` of a uniform `l`-subset of the `(k-1)n + 1` sites.
pub fn enumerate_phi_marginal(n: usize, arity: u32, l: usize) -> Result<ExactDistribution> {
    let sites = (arity as usize - 1) * n + 1;
    if sites > 13 {
        return Err(Error::EnumerationBound(format!(
            "phi marginal enumeration capped at 13 sites, got {sites}"
        )));
    }
    if l > n {
        return Err(Error::InvalidParameter(format!("subset size {l} exceeds {n}")));
    }
    let subsets = subsets_of_size(sites, l);
    let p_each = ratio(BigUint::one(), BigUint::from(subsets.len() as u64));
    let mut probs: BTreeMap<MassPartition, Rational> = BTreeMap::new();
    for subset in subsets {
        let cfg = SiteConfiguration::from_sites(n, arity, &subset)?;
        *probs.entry(phi(&cfg)).or_insert_with(Rational::zero) += p_each.clone();
    }
    ExactDistribution::new(probs)
}

/// Complete duplicate-free list of `F(m, N)`, generated level by level from
/// the edgeless forest through every possible inverse destruction step.
pub fn enumerate_forests(n_vertices: usize, m: usize) -> Result<Vec<LabeledBinaryForest>> {
    if n_vertices > MAX_FOREST_N {
        return Err(Error::EnumerationBound(format!(
            "forest enumeration capped at N = {MAX_FOREST_N}, got {n_vertices}"
        )));
    }
    if m % 2 == 0 {
        return Err(Error::EvenForestComponents);
    }
    if m == 0 || m > n_vertices {
        return Err(Error::InvalidParameter(format!(
            "component count {m} out of range for {n_vertices} vertices"
        )));
    }
    let mut level = vec![LabeledBinaryForest::edgeless(n_vertices)?];
    let mut components = n_vertices;
    while components > m {
        let mut next = Vec::new();
        for f in &level {
            for leaf in f.leaves() {
                let own_root = f.root_of(leaf);
                let others: Vec<usize> =
                    f.roots().iter().copied().filter(|&r| r != own_root).collect();
                for a in 0..others.len() {
                    for b in a + 1..others.len() {
                        next.push(f.merge_at(leaf, others[a], others[b])?);
                    }
                }
            }
        }
        // Every forest determines its own (leaf, root pair) choice, so the
        // generation is already duplicate-free; assert in debug builds.
        debug_assert_eq!(
            next.len(),
            {
                use std::collections::BTreeSet;
                next.iter().cloned().collect::<BTreeSet<_>>().len()
            },
            "inverse generation produced duplicates"
        );
        level = next;
        components -= 2;
    }
    Ok(level)
}

/// Complete list of full binary plane forests on `n_vertices` vertices with
/// `m` ordered components.
pub fn enumerate_plane_forests(
    n_vertices: usize,
    m: usize,
) -> Result<Vec<crate::forest::PlaneForest>> {
    use crate::forest::{PlaneForest, PlaneTree};
    if n_vertices > MAX_FOREST_N {
        return Err(Error::EnumerationBound(format!(
            "plane forest enumeration capped at N = {MAX_FOREST_N}, got {n_vertices}"
        )));
    }
    if m % 2 == 0 {
        return Err(Error::EvenForestComponents);
    }
    if m == 0 || m > n_vertices {
        return Err(Error::InvalidParameter(format!(
            "component count {m} out of range for {n_vertices} vertices"
        )));
    }
    fn trees_of_size(s: usize, memo: &mut BTreeMap<usize, Vec<crate::forest::PlaneTree>>) -> Vec<crate::forest::PlaneTree> {
        use crate::forest::PlaneTree;
        if let Some(t) = memo.get(&s) {
            return t.clone();
        }
        let mut out = Vec::new();
        if s == 1 {
            out.push(PlaneTree::Leaf);
        } else {
            let mut left = 1usize;
            while left <= s - 2 {
                for l in trees_of_size(left, memo) {
                    for r in trees_of_size(s - 1 - left, memo) {
                        out.push(PlaneTree::Node(Box::new(l.clone()), Box::new(r)));
                    }
                }
                left += 2;
            }
        }
        memo.insert(s, out.clone());
        out
    }
    fn go(
        remaining: usize,
        parts: usize,
        prefix: &mut Vec<PlaneTree>,
        memo: &mut BTreeMap<usize, Vec<PlaneTree>>,
        out: &mut Vec<PlaneForest>,
    ) {
        if parts == 0 {
            if remaining == 0 {
                out.push(PlaneForest { trees: prefix.clone() });
            }
            return;
        }
        let mut size = 1usize;
        while size + (parts - 1) <= remaining {
            for t in trees_of_size(size, memo) {
                prefix.push(t);
                go(remaining - size, parts - 1, prefix, memo, out);
                prefix.pop();
            }
            size += 2;
        }
    }
    let mut memo = BTreeMap::new();
    let mut out = Vec::new();
    go(n_vertices, m, &mut Vec::new(), &mut memo, &mut out);
    Ok(out)
}

/// Exact distribution over the canonical block partitions of the initial
/// labels after `l` coagulations; brute-force over labeled merge histories.
pub fn enumerate_block_distribution(
    initial: &MassPartition,
    l: usize,
) -> Result<BTreeMap<Vec<Vec<usize>>, Rational>> {
    let n = initial.len();
    if n > 7 {
        return Err(Error::EnumerationBound(format!(
            "block enumeration capped at 7 initial particles, got {n}"
        )));
    }
    if n % 2 == 0 {
        return Err(Error::InvalidParameter("initial particle count must be odd".into()));
    }
    if 2 * l >= n {
        return Err(Error::InvalidParameter(format!("no {l}-th block state")));
    }
    let total_mass = initial.total_mass();
    // State: blocks of initial labels, each sorted, ordered by first label.
    let start: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut dist: BTreeMap<Vec<Vec<usize>>, Rational> = BTreeMap::new();
    dist.insert(start, rational_int(1));
    for step in 0..l {
        let alpha = crate::exact::total_rate(total_mass, n as u64, step as u64 + 1)?;
        let mut next: BTreeMap<Vec<Vec<usize>>, Rational> = BTreeMap::new();
        for (blocks, prob) in dist {
            let masses: Vec<u64> = blocks
                .iter()
                .map(|b| b.iter().map(|&i| initial.masses()[i]).sum())
                .collect();
            for set in subsets_of_size(blocks.len(), 3) {
                let weight: u64 = set.iter().map(|&i| masses[i]).sum::<u64>() + 3;
                let p = prob.clone() * rational_int(weight) / alpha.clone();
                let mut merged: Vec<usize> = Vec::new();
                let mut rest: Vec<Vec<usize>> = Vec::new();
                for (i, b) in blocks.iter().enumerate() {
                    if set.contains(&i) {
                        merged.extend_from_slice(b);
                    } else {
                        rest.push(b.clone());
                    }
                }
                merged.sort_unstable();
                rest.push(merged);
                rest.sort();
                *next.entry(rest).or_insert_with(Rational::zero) += p;
            }
        }
        dist = next;
    }
    Ok(dist)
}

/// Oracle counterpart of [`crate::exact::block_coagulation_prob`].
pub fn oracle_block_prob(initial: &MassPartition, pi: &BlockPartition) -> Result<Rational> {
    let l = (initial.len() - pi.blocks().len()) / 2;
    let dist = enumerate_block_distribution(initial, l)?;
    let mut key: Vec<Vec<usize>> = pi
        .blocks()
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.sort_unstable();
            b
        })
        .collect();
    key.sort();
    Ok(dist.get(&key).cloned().unwrap_or_else(Rational::zero))
}

/// Exact count of lattice paths with steps `+(arity-2)` and `-1` that first
/// hit `-j` at time `m`, by dynamic programming over (time, position).
pub fn brute_first_passage(arity: u32, j: u64, m: u64) -> Result<BigUint> {
    if m > MAX_PATH_LEN {
        return Err(Error::EnumerationBound(format!(
            "path counting capped at m = {MAX_PATH_LEN}, got {m}"
        )));
    }
    if arity < 3 || j == 0 || m == 0 {
        return Err(Error::InvalidParameter("need arity >= 3, j >= 1, m >= 1".into()));
    }
    let up = (arity - 2) as i64;
    let j = j as i64;
    let m = m as usize;
    // counts[p + j] = paths of the current length ending at p, never <= -j.
    let width = (up as usize) * m + j as usize + 1;
    let mut counts = vec![BigUint::zero(); width];
    counts[j as usize] = BigUint::one();
    for _ in 0..m - 1 {
        let mut next = vec![BigUint::zero(); width];
        for (idx, c) in counts.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let pos = idx as i64 - j;
            if pos - 1 > -j {
                next[(pos - 1 + j) as usize] += c;
            }
            let upper = pos + up;
            if (upper + j) < width as i64 {
                next[(upper + j) as usize] += c;
            }
        }
        counts = next;
    }
    // Final step must be the down-step from -j + 1.
    Ok(counts[1].clone())
}
