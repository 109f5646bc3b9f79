//! Continuous-time simulation of the k-ary coalescent (Gillespie direct method).
//!
//! A set of `k` particles with masses `s_{i_1}, ..., s_{i_k}` merges at rate
//! `s_{i_1} + ... + s_{i_k} + k/(k-2)`. Event selection never enumerates the
//! `C(L, k)` subsets: scaling the set weight by `k - 2` gives
//! `sum_{i in set} ((k-2) s_i + 1)`, so drawing one index with probability
//! proportional to `(k-2) s_i + 1` and then `k - 1` distinct others uniformly
//! induces exactly the normalized set weights, in `O(L)` integer arithmetic.

use crate::error::{Error, Result};
use crate::numeric::Rational;
use crate::partition::MassPartition;
use crate::rng::{exp_variate, root_rng, SimRng};
use num_bigint::BigInt;
use rand::Rng;

/// Coagulation kernel of a `k`-ary coalescent, `k >= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelSpec {
    arity: u32,
}

impl KernelSpec {
    pub fn new(arity: u32) -> Result<Self> {
        if arity < 3 {
            return Err(Error::InvalidParameter(format!(
                "kernel arity must be at least 3, got {arity}"
            )));
        }
        Ok(Self { arity })
    }

    pub fn ternary() -> Self {
        Self { arity: 3 }
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    /// Additive constant of the kernel, `k/(k-2)`.
    pub fn additive_constant(&self) -> Rational {
        Rational::new(BigInt::from(self.arity), BigInt::from(self.arity - 2))
    }

    /// Per-particle weight scaled by `k - 2`: `(k-2) s + 1`.
    fn scaled_weight(&self, mass: u64) -> u128 {
        (self.arity as u128 - 2) * mass as u128 + 1
    }

    /// Total jump rate out of a state with masses `masses`.
    pub fn jump_rate(&self, masses: &[u64]) -> f64 {
        let k = self.arity as usize;
        let l = masses.len();
        if l < k {
            return 0.0;
        }
        let scaled: u128 = masses.iter().map(|&m| self.scaled_weight(m)).sum();
        // C(L-1, k-1) * scaled / (k-2); set counts stay far below 2^53 at
        // desk scale, so the f64 product is adequate for exponential rates.
        let mut sets = 1.0f64;
        for i in 0..k - 1 {
            sets = sets * (l - 1 - i) as f64 / (i + 1) as f64;
        }
        sets * scaled as f64 / (self.arity as f64 - 2.0)
    }
}

/// One k-set is chosen: first index size-biased by `(k-2) s + 1`, the other
/// `k - 1` uniform without replacement.
pub fn skeleton_step(
    p: &MassPartition,
    kernel: KernelSpec,
    rng: &mut SimRng,
) -> Result<(Vec<usize>, MassPartition)> {
    let k = kernel.arity as usize;
    let masses = p.masses();
    let l = masses.len();
    if l < k {
        return Err(Error::Absorbed);
    }
    let total: u128 = masses.iter().map(|&m| kernel.scaled_weight(m)).sum();
    let mut draw = rng.gen_range(0..total);
    let mut first = l - 1;
    for (i, &m) in masses.iter().enumerate() {
        let w = kernel.scaled_weight(m);
        if draw < w {
            first = i;
            break;
        }
        draw -= w;
    }
    let mut chosen = vec![first];
    while chosen.len() < k {
        let mut c = rng.gen_range(0..l - 1);
        if c >= first {
            c += 1;
        }
        if !chosen[1..].contains(&c) {
            chosen.push(c);
        }
    }
    chosen.sort_unstable();
    let merged = p.merge_indices(&chosen)?;
    Ok((chosen, merged))
}

/// Jump chain state after exactly `steps` coagulations.
pub fn skeleton_state_after(
    initial: &MassPartition,
    kernel: KernelSpec,
    steps: usize,
    rng: &mut SimRng,
) -> Result<MassPartition> {
    let mut state = initial.clone();
    for _ in 0..steps {
        state = skeleton_step(&state, kernel, rng)?.1;
    }
    Ok(state)
}

/// One coagulation event of a [`Trajectory`].
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// Absolute event time.
    pub time: f64,
    /// Indices merged, relative to the ranked pre-event state.
    pub merged: Vec<usize>,
    /// Ranked state after the merge.
    pub state_after: MassPartition,
}

/// Full record of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: MassPartition,
    pub arity: u32,
    pub seed: u64,
    pub events: Vec<Event>,
}

impl Trajectory {
    pub fn final_state(&self) -> &MassPartition {
        self.events.last().map_or(&self.initial, |e| &e.state_after)
    }

    /// State at absolute time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> &MassPartition {
        self.events
            .iter()
            .rev()
            .find(|e| e.time <= t)
            .map_or(&self.initial, |e| &e.state_after)
    }

    /// One JSON record `{t, merged, state}` per event, 17-significant-digit
    /// floats so the encoding round-trips bit-exactly.
    pub fn event_lines(&self) -> impl Iterator<Item = String> + '_ {
        self.events.iter().map(|e| {
            let merged: Vec<String> = e.merged.iter().map(|i| i.to_string()).collect();
            format!(
                "{{\"t\":{},\"merged\":[{}],\"state\":{}}}",
                fmt_f64(e.time),
                merged.join(","),
                json_masses(&e.state_after)
            )
        })
    }

    /// JSON-lines encoding: one header record `{initial, seed, arity}`, then
    /// the [`Trajectory::event_lines`] records.
    pub fn to_jsonl(&self) -> String {
        let mut out = format!(
            "{{\"initial\":{},\"seed\":{},\"arity\":{}}}\n",
            json_masses(&self.initial),
            self.seed,
            self.arity
        );
        for line in self.event_lines() {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

/// Compact JSON integer array of the masses, descending.
pub fn json_masses(p: &MassPartition) -> String {
    let items: Vec<String> = p.masses().iter().map(|m| m.to_string()).collect();
    format!("[{}]", items.join(","))
}

/// 17 significant digits; enough to reconstruct the exact f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Simulate from `initial` until absorption (fewer than `k` particles) or
/// until `t_max`. Reproducible given the seed; truncation records no
/// terminal pseudo-event.
pub fn simulate(
    initial: &MassPartition,
    kernel: KernelSpec,
    seed: u64,
    t_max: Option<f64>,
) -> Result<Trajectory> {
    if let Some(tm) = t_max {
        if !(tm > 0.0) {
            return Err(Error::InvalidParameter(format!("t_max must be positive, got {tm}")));
        }
    }
    let mut rng = root_rng(seed);
    let mut state = initial.clone();
    let mut t = 0.0f64;
    let mut events = Vec::new();
    while state.len() >= kernel.arity as usize {
        t += exp_variate(&mut rng, kernel.jump_rate(state.masses()));
        if let Some(tm) = t_max {
            if t > tm {
                break;
            }
        }
        let (merged, next) = skeleton_step(&state, kernel, &mut rng)?;
        events.push(Event { time: t, merged, state_after: next.clone() });
        state = next;
    }
    Ok(Trajectory { initial: initial.clone(), arity: kernel.arity, seed, events })
}

/// State of the process at absolute time `t_max`, without recording events.
pub fn evolve_until(
    initial: &MassPartition,
    kernel: KernelSpec,
    t_max: f64,
    rng: &mut SimRng,
) -> Result<MassPartition> {
    if !(t_max >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t_max}")));
    }
    let mut state = initial.clone();
    let mut t = 0.0f64;
    while state.len() >= kernel.arity as usize {
        t += exp_variate(rng, kernel.jump_rate(state.masses()));
        if t > t_max {
            break;
        }
        state = skeleton_step(&state, kernel, rng)?.1;
    }
    Ok(state)
}

/// Coagulation-time vectors for a chain started from `N` particles of total
/// mass `M`: each vector is the strictly increasing sequence `T_1 < ... < T_n`
/// of partial sums of independent exponentials with the state-free rates
/// `alpha(1), ..., alpha(n)`. Jump times are independent of the jump chain.
pub fn sample_coag_times(
    total_mass: u64,
    n_particles: u64,
    count: usize,
    rng: &mut SimRng,
) -> Result<Vec<Vec<f64>>> {
    let half = match n_particles {
        n if n == 0 || n % 2 == 0 => {
            return Err(Error::InvalidParameter(format!(
                "particle count must be odd, got {n_particles}"
            )))
        }
        n => (n - 1) / 2,
    };
    let rates: Vec<f64> = (1..=half)
        .map(|k| crate::exact::total_rate(total_mass, n_particles, k).map(|r| crate::numeric::rational_to_f64(&r)))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut t = 0.0;
        let mut times = Vec::with_capacity(rates.len());
        for &rate in &rates {
            t += exp_variate(rng, rate);
            times.push(t);
        }
        out.push(times);
    }
    Ok(out)
}
