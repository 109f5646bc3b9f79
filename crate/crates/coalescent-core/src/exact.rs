//! Exact evaluation of every closed-form law of the ternary coalescent.
//!
//! Everything with a purely combinatorial closed form is returned as an
//! exact [`Rational`]; only time-dependent (exponential) quantities return
//! floats. Binomial coefficients overflow 64-bit integers already at small
//! parameters, and exactness turns the oracle comparisons into equality
//! tests.

use crate::error::{Error, Result};
use crate::numeric::{binomial, expect_uint, factorial, ratio, rational_to_f64, Rational};
use crate::partition::MassPartition;
use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

/// Rate of the `k`-th coagulation from `N` particles of total mass `M`:
/// `(M + N + 2 - 2k)(N + 1 - 2k)(N - 2k) / 2`.
pub fn total_rate(total_mass: u64, n_particles: u64, k: u64) -> Result<Rational> {
    if n_particles % 2 == 0 || n_particles == 0 {
        return Err(Error::InvalidParameter(format!(
            "particle count must be odd, got {n_particles}"
        )));
    }
    if total_mass < n_particles {
        return Err(Error::InvalidParameter(format!(
            "total mass {total_mass} below particle count {n_particles}"
        )));
    }
    if k == 0 || k > (n_particles - 1) / 2 {
        return Err(Error::NoKthCoagulation { k, n: n_particles });
    }
    Ok(Rational::from_integer(rate_int(total_mass, n_particles, k)))
}

/// Unchecked integer rate; zero at `k = (N+1)/2`, used by the hypoexponential law.
fn rate_int(total_mass: u64, n_particles: u64, k: u64) -> BigInt {
    let m = BigInt::from(total_mass);
    let n = BigInt::from(n_particles);
    let k = BigInt::from(k);
    (&m + &n + 2 - 2 * &k) * (&n + 1 - 2 * &k) * (&n - 2 * &k) / 2
}

/// Monodisperse-start rate `(N + 1 - i)(N + 1 - 2i)(N - 2i)`.
pub fn mono_rate(n_particles: u64, i: u64) -> Result<Rational> {
    total_rate(n_particles, n_particles, i)
}

/// First-passage law of simple random walk: `P(H_k = m)`.
///
/// Zero when `m` and `k` have different parity or `m < |k|`.
pub fn hitting_time_pmf(k: i64, m: u64) -> Result<Rational> {
    if k == 0 {
        return Err(Error::InvalidParameter("hitting level must be nonzero".into()));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("path length must be positive".into()));
    }
    let abs_k = k.unsigned_abs();
    if abs_k > m || (m + abs_k) % 2 != 0 {
        return Ok(Rational::zero());
    }
    let num = BigUint::from(abs_k) * binomial(m, (m + abs_k) / 2);
    let den = BigUint::from(m) * (BigUint::one() << m);
    Ok(ratio(num, den))
}

/// Stirling tail of `P(H_{-1} = 2n + 1)`: returns `(1/2) (pi n^3)^{-1/2}`.
pub fn hitting_time_asymptotic(n: u64) -> f64 {
    0.5 / (std::f64::consts::PI * (n as f64).powi(3)).sqrt()
}

/// Distribution of the number of particles at time `t`: `P(#(t) = N - 2l)`.
///
/// `T_l` is a sum of independent exponentials with pairwise distinct rates,
/// so the count follows a hypoexponential law. The alternating terms suffer
/// catastrophic cancellation for close rates; coefficients are computed as
/// exact rationals for `l <= 30` and in signed log space with compensated
/// (Neumaier) summation beyond that.
pub fn particle_count_pmf(total_mass: u64, n_particles: u64, l: u64, t: f64) -> Result<f64> {
    if n_particles % 2 == 0 || n_particles == 0 {
        return Err(Error::InvalidParameter(format!(
            "particle count must be odd, got {n_particles}"
        )));
    }
    if total_mass < n_particles {
        return Err(Error::InvalidParameter(format!(
            "total mass {total_mass} below particle count {n_particles}"
        )));
    }
    let half = (n_particles - 1) / 2;
    if l > half {
        return Err(Error::InvalidParameter(format!(
            "no state with {} particles",
            n_particles as i64 - 2 * l as i64
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    // Rates alpha(1)..alpha(l+1); the last one is zero exactly when l = (N-1)/2,
    // which encodes T_{n+1} = infinity.
    let rates: Vec<BigInt> = (1..=l + 1)
        .map(|k| rate_int(total_mass, n_particles, k))
        .collect();
    for i in 0..rates.len() {
        for j in i + 1..rates.len() {
            if rates[i] == rates[j] {
                return Err(Error::DistinctRates);
            }
        }
    }
    debug_assert!(rates.windows(2).all(|w| w[0] > w[1]), "rates must decrease");

    // P(#(t) = N - 2l) = sum_j exp(-alpha_j t) * prod_{k<=l} alpha_k
    //                    / prod_{k != j} (alpha_k - alpha_j).
    // This regrouping of the statement stays finite at alpha_{l+1} = 0.
    if l <= 30 {
        let lead: BigInt = rates.iter().take(l as usize).product();
        let mut acc = 0.0;
        let mut comp = 0.0;
        for (j, aj) in rates.iter().enumerate() {
            let mut den = BigInt::one();
            for (k, ak) in rates.iter().enumerate() {
                if k != j {
                    den *= ak - aj;
                }
            }
            let coef = rational_to_f64(&Rational::new(lead.clone(), den));
            let term = coef * (-aj.to_f64().unwrap() * t).exp();
            neumaier_add(&mut acc, &mut comp, term);
        }
        Ok((acc + comp).clamp(0.0, 1.0))
    } else {
        let rates_f: Vec<f64> = rates.iter().map(|r| r.to_f64().unwrap()).collect();
        let log_lead: f64 = rates_f.iter().take(l as usize).map(|a| a.ln()).sum();
        let mut acc = 0.0;
        let mut comp = 0.0;
        for (j, &aj) in rates_f.iter().enumerate() {
            let mut log_den = 0.0;
            for (k, &ak) in rates_f.iter().enumerate() {
                if k != j {
                    log_den += (ak - aj).abs().ln();
                }
            }
            // Rates decrease, so alpha_k - alpha_j < 0 exactly for k > j.
            let sign = if (rates_f.len() - 1 - j) % 2 == 0 { 1.0 } else { -1.0 };
            let term = sign * (log_lead - log_den - aj * t).exp();
            neumaier_add(&mut acc, &mut comp, term);
        }
        Ok((acc + comp).clamp(0.0, 1.0))
    }
}

fn neumaier_add(acc: &mut f64, comp: &mut f64, term: f64) {
    let s = *acc + term;
    if acc.abs() >= term.abs() {
        *comp += (*acc - s) + term;
    } else {
        *comp += (term - s) + *acc;
    }
    *acc = s;
}

/// One-dimensional law of the monodisperse jump chain:
/// `P(X'_l = p)` for `N` unit atoms.
pub fn skeleton_marginal(n_particles: u64, l: u64, p: &MassPartition) -> Result<Rational> {
    if n_particles % 2 == 0 || n_particles == 0 {
        return Err(Error::InvalidParameter(format!(
            "particle count must be odd, got {n_particles}"
        )));
    }
    if l > (n_particles - 1) / 2 {
        return Err(Error::InvalidParameter(format!("no {l}-th jump state")));
    }
    if p.total_mass() != n_particles {
        return Err(Error::InconsistentState(format!(
            "partition mass {} != {n_particles}",
            p.total_mass()
        )));
    }
    if p.len() as u64 != n_particles - 2 * l {
        return Err(Error::InconsistentState(format!(
            "partition has {} parts, state {l} needs {}",
            p.len(),
            n_particles - 2 * l
        )));
    }
    if let Some(&s) = p.masses().iter().find(|&&s| s % 2 == 0) {
        return Err(Error::InconsistentState(format!("even part {s}")));
    }
    // gamma(s) * N/(N-2l) * C(N,l)^{-1} * prod (1/s_i) C(s_i, (s_i+1)/2)
    let mut value = ratio(p.multiplicity_gamma() * n_particles, BigUint::from(n_particles - 2 * l));
    value /= Rational::from_integer(BigInt::from(binomial(n_particles, l)));
    for &s in p.masses() {
        value *= ratio(binomial(s, (s + 1) / 2), BigUint::from(s));
    }
    Ok(value)
}

/// Canonical (descending) triples of odd positive integers summing to `s`.
pub fn dislocation_support(s: u64) -> Vec<[u64; 3]> {
    let mut out = Vec::new();
    let mut r1 = s.saturating_sub(2);
    while 3 * r1 >= s {
        let rest = s - r1;
        let mut r2 = r1.min(rest - 1);
        if r2 % 2 == 0 {
            r2 -= 1;
        }
        while 2 * r2 >= rest {
            let r3 = rest - r2;
            if r3 >= 1 && r3 <= r2 {
                out.push([r1, r2, r3]);
            }
            if r2 < 2 {
                break;
            }
            r2 -= 2;
        }
        if r1 < 2 {
            break;
        }
        r1 -= 2;
    }
    out
}

/// Number of ordered triples realizing the multiset `R`.
pub fn triple_gamma(r: &[u64; 3]) -> u64 {
    let distinct = if r[0] == r[1] && r[1] == r[2] {
        1
    } else if r[0] == r[1] || r[1] == r[2] || r[0] == r[2] {
        2
    } else {
        3
    };
    match distinct {
        1 => 1,
        2 => 3,
        _ => 6,
    }
}

/// Integer dislocation weight `gamma(R) * prod Catalan((r_i - 1)/2)`.
///
/// `mu_s(R)` is proportional to this weight; the normalizer over the whole
/// support is `(3/s) C(s, (s+3)/2)`.
pub fn dislocation_weight(r: &[u64; 3]) -> BigUint {
    let mut w = BigUint::from(triple_gamma(r));
    for &ri in r {
        w *= crate::numeric::catalan((ri - 1) / 2);
    }
    w
}

/// Dislocation law `mu_s(R)`: distribution of the three odd parts into which
/// a mass `s` splits.
///
/// Triples outside the support (wrong sum or even parts) get probability
/// zero; a zero entry is malformed and an error.
pub fn dislocation_pmf(s: u64, r: &[u64; 3]) -> Result<Rational> {
    if s % 2 == 0 || s < 3 {
        return Err(Error::InvalidParameter(format!(
            "dislocating mass must be odd and at least 3, got {s}"
        )));
    }
    if r.contains(&0) {
        return Err(Error::InvalidParameter("zero part in dislocation triple".into()));
    }
    if r.iter().sum::<u64>() != s || r.iter().any(|&ri| ri % 2 == 0) {
        return Ok(Rational::zero());
    }
    let mut canon = *r;
    canon.sort_unstable_by(|a, b| b.cmp(a));
    // gamma * s/(3 r1 r2 r3) * prod C(r_i,(r_i+1)/2) / C(s,(s+3)/2)
    let mut num = BigUint::from(triple_gamma(&canon)) * s;
    let mut den = BigUint::from(3u32) * binomial(s, (s + 3) / 2);
    for &ri in &canon {
        num *= binomial(ri, (ri + 1) / 2);
        den *= ri;
    }
    Ok(ratio(num, den))
}

/// Partition of the initial particle labels `{0, ..., N-1}` into blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    /// Validates disjointness and coverage of `{0, ..., n_items - 1}`.
    pub fn new(blocks: Vec<Vec<usize>>, n_items: usize) -> Result<Self> {
        let mut seen = vec![false; n_items];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidParameter("empty block".into()));
            }
            for &i in block {
                if i >= n_items {
                    return Err(Error::InvalidParameter(format!("label {i} out of range")));
                }
                if seen[i] {
                    return Err(Error::InvalidParameter(format!("label {i} in two blocks")));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidParameter("blocks do not cover all labels".into()));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
}

/// Probability that the jump chain's state after `l` coagulations groups the
/// initial particles exactly along `pi` (the semigroup law).
///
/// The Gamma ratios have an integer argument gap `(|B| - 1)/2`, so they are
/// evaluated as products of half-integer-spaced rising factorials, never via
/// a Gamma approximation.
pub fn block_coagulation_prob(initial: &MassPartition, pi: &BlockPartition) -> Result<Rational> {
    let n = initial.len();
    if n % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "initial particle count must be odd, got {n}"
        )));
    }
    let covered: usize = pi.blocks().iter().map(|b| b.len()).sum();
    if covered != n {
        return Err(Error::InvalidParameter(format!(
            "block partition covers {covered} labels, initial state has {n}"
        )));
    }
    if let Some(b) = pi.blocks().iter().find(|b| b.len() % 2 == 0) {
        return Err(Error::InvalidParameter(format!("even block of size {}", b.len())));
    }
    let l = (n - pi.blocks().len()) / 2;
    let total_mass = initial.total_mass();

    // l! / (alpha(1) ... alpha(l))
    let mut value = Rational::from_integer(BigInt::from(factorial(l as u64)));
    for k in 1..=l as u64 {
        value /= total_rate(total_mass, n as u64, k)?;
    }
    for block in pi.blocks() {
        let r_b: u64 = block.iter().map(|&i| initial.masses()[i]).sum();
        let half = (block.len() as u64 - 1) / 2;
        // Gamma((r_B + |B| + 2)/2) / Gamma((r_B + 3)/2) = prod (r_B + 3 + 2i)/2
        let mut rising = BigUint::one();
        for i in 0..half {
            rising *= r_b + 3 + 2 * i;
        }
        let num = rising * factorial(block.len() as u64 - 1);
        let den = (BigUint::one() << half) * factorial(half);
        value *= ratio(num, den);
    }
    Ok(value)
}

/// `P(Lambda_pi(t))`: the block event holds at real time `t`.
pub fn partition_event_prob(initial: &MassPartition, pi: &BlockPartition, t: f64) -> Result<f64> {
    let grouped = block_coagulation_prob(initial, pi)?;
    let l = (initial.len() - pi.blocks().len()) as u64 / 2;
    let count = particle_count_pmf(initial.total_mass(), initial.len() as u64, l, t)?;
    Ok(count * rational_to_f64(&grouped))
}

/// Number of labeled binary forests on `N` vertices with `m` tree components.
pub fn forest_count(m: u64, n_vertices: u64) -> Result<BigUint> {
    if m % 2 == 0 {
        return Err(Error::EvenForestComponents);
    }
    if n_vertices % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "vertex count must be odd, got {n_vertices}"
        )));
    }
    if m == 0 || m > n_vertices {
        return Err(Error::InvalidParameter(format!(
            "component count {m} out of range for {n_vertices} vertices"
        )));
    }
    let n = (n_vertices - 1) / 2;
    let k = (m + 1) / 2;
    let value = if k == 1 {
        // |F(1,N)| = 2^{-n} (2n)! (2n+1)! / (n+1)!
        ratio(
            factorial(2 * n) * factorial(2 * n + 1),
            (BigUint::one() << n) * factorial(n + 1),
        )
    } else {
        // |F(2k-1,N)| = 2^{k-(n+1)} n (2n+1)! (2n-1)! (k-2)! / ((n+k)! (k-1)! (2k-3)!)
        let mut num = BigUint::from(n) * factorial(2 * n + 1) * factorial(2 * n - 1) * factorial(k - 2);
        let mut den = factorial(n + k) * factorial(k - 1) * factorial(2 * k - 3);
        if k >= n + 1 {
            num <<= k - n - 1;
        } else {
            den <<= n + 1 - k;
        }
        ratio(num, den)
    };
    Ok(expect_uint(&value))
}

/// Number of full binary plane forests on `N` vertices with `m` components:
/// `2^{(N-m)/2} m! / (N! ((N-m)/2)!)` times the labeled count.
pub fn plane_forest_count(m: u64, n_vertices: u64) -> Result<BigUint> {
    let labeled = forest_count(m, n_vertices)?;
    let internal = (n_vertices - m) / 2;
    let value = ratio(
        (BigUint::one() << internal) * factorial(m) * labeled,
        factorial(n_vertices) * factorial(internal),
    );
    Ok(expect_uint(&value))
}

/// Kemperman cycle-lemma weight for the `k`-ary walk (up-steps `k - 2`,
/// down-steps `1`): number of length-`m` paths first hitting `-j` at `m`,
/// `(j/m) C(m, (m-j)/(k-1))`. Zero off the support.
pub fn kary_first_passage_count(arity: u32, j: u64, m: u64) -> Result<Rational> {
    if arity < 3 {
        return Err(Error::InvalidParameter(format!("arity must be >= 3, got {arity}")));
    }
    if j == 0 || m == 0 {
        return Err(Error::InvalidParameter("level and length must be positive".into()));
    }
    if m < j || (m - j) % (arity as u64 - 1) != 0 {
        return Ok(Rational::zero());
    }
    let up_steps = (m - j) / (arity as u64 - 1);
    Ok(ratio(BigUint::from(j) * binomial(m, up_steps), BigUint::from(m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational_int;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn total_rate_examples() {
        assert_eq!(total_rate(3, 3, 1).unwrap(), rational_int(6));
        assert_eq!(total_rate(4, 3, 1).unwrap(), rational_int(7));
        assert_eq!(total_rate(5, 5, 1).unwrap(), rational_int(60));
        assert!(matches!(
            total_rate(5, 5, 3),
            Err(Error::NoKthCoagulation { k: 3, n: 5 })
        ));
        assert!(total_rate(5, 5, 0).is_err());
    }

    #[test]
    fn mono_rate_matches_total_rate() {
        assert_eq!(mono_rate(5, 1).unwrap(), rational_int(60));
        assert_eq!(mono_rate(5, 2).unwrap(), rational_int(8));
        assert_eq!(mono_rate(3, 1).unwrap(), rational_int(6));
        for n in [3u64, 5, 7, 9, 11, 21] {
            for i in 1..=(n - 1) / 2 {
                let expect = (n + 1 - i) * (n + 1 - 2 * i) * (n - 2 * i);
                assert_eq!(mono_rate(n, i).unwrap(), rational_int(expect));
                assert_eq!(mono_rate(n, i).unwrap(), total_rate(n, n, i).unwrap());
            }
        }
    }

    #[test]
    fn rates_strictly_decreasing_up_to_2001() {
        for n in (3..=2001u64).step_by(2) {
            for &m in &[n, n + 17] {
                let mut prev: Option<BigInt> = None;
                for k in 1..=(n - 1) / 2 {
                    let a = rate_int(m, n, k);
                    assert!(a > BigInt::zero());
                    if let Some(p) = prev {
                        assert!(p > a, "rates not decreasing at N={n}, M={m}, k={k}");
                    }
                    prev = Some(a);
                }
            }
        }
    }

    #[test]
    fn hitting_time_examples() {
        assert_eq!(hitting_time_pmf(-1, 1).unwrap(), rat(1, 2));
        assert_eq!(hitting_time_pmf(-1, 3).unwrap(), rat(1, 8));
        assert_eq!(hitting_time_pmf(-3, 5).unwrap(), rat(3, 32));
        // Off-support and degenerate inputs.
        assert!(hitting_time_pmf(-1, 2).unwrap().is_zero());
        assert!(hitting_time_pmf(-5, 3).unwrap().is_zero());
        assert!(hitting_time_pmf(0, 3).is_err());
    }

    #[test]
    fn hitting_time_partial_sum_reaches_one() {
        // Float recurrence p_{m+2} = p_m * m/(m+3); tail below 1e-3 by the
        // asymptotic bound at m <= 1e6.
        let mut p = 0.5f64;
        let mut sum = 0.5f64;
        let mut m = 1u64;
        while m + 2 <= 1_000_000 {
            p *= m as f64 / (m as f64 + 3.0);
            m += 2;
            sum += p;
        }
        assert!(1.0 - sum < 1e-3, "partial sum {sum}");
        assert!(sum < 1.0);
    }

    #[test]
    fn hitting_time_asymptotic_examples() {
        assert!((hitting_time_asymptotic(50) - 7.9788e-4).abs() < 1e-7);
        assert!((hitting_time_asymptotic(1) - 0.2820947917738781).abs() < 1e-15);
        // Ratio against the exact pmf approaches one.
        let exact = rational_to_f64(&hitting_time_pmf(-1, 401).unwrap());
        let ratio = exact / hitting_time_asymptotic(200);
        assert!(ratio > 0.99 && ratio < 1.01, "ratio {ratio}");
    }

    #[test]
    fn particle_count_examples() {
        // Single exponential: P(#(t) = 3) = exp(-6t) from three unit atoms.
        for &t in &[0.0, 0.01, 0.3, 2.0] {
            let got = particle_count_pmf(3, 3, 0, t).unwrap();
            assert!((got - (-6.0 * t).exp()).abs() < 1e-12);
        }
        assert_eq!(particle_count_pmf(9, 7, 0, 0.0).unwrap(), 1.0);
        // Two-exponential convolution at N = 5.
        let got = particle_count_pmf(5, 5, 1, 0.05).unwrap();
        let want = 15.0 / 13.0 * ((-0.4f64).exp() - (-3.0f64).exp());
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        assert!((want - 0.7160).abs() < 5e-5);
    }

    #[test]
    fn particle_count_normalizes() {
        for &(m, n) in &[(3u64, 3u64), (5, 5), (9, 7), (11, 11), (23, 21)] {
            for &t in &[0.0, 1e-4, 1e-3, 0.05, 1.0] {
                let sum: f64 = (0..=(n - 1) / 2)
                    .map(|l| particle_count_pmf(m, n, l, t).unwrap())
                    .sum();
                assert!((sum - 1.0).abs() < 1e-9, "M={m} N={n} t={t}: {sum}");
            }
        }
    }

    #[test]
    fn particle_count_log_space_path_agrees() {
        // N = 65 forces the l > 30 branch; compare adjacent-l values against
        // the complementary sum rule at a time where mass is spread out.
        let n = 65u64;
        let t = 2e-4;
        let sum: f64 = (0..=(n - 1) / 2)
            .map(|l| particle_count_pmf(n, n, l, t).unwrap())
            .sum();
        assert!((sum - 1.0).abs() < 1e-6, "sum {sum}");
    }

    #[test]
    fn skeleton_marginal_examples() {
        let p511 = MassPartition::rank(&[5, 1, 1]).unwrap();
        let p331 = MassPartition::rank(&[3, 3, 1]).unwrap();
        assert_eq!(skeleton_marginal(7, 2, &p511).unwrap(), rat(2, 3));
        assert_eq!(skeleton_marginal(7, 2, &p331).unwrap(), rat(1, 3));
        for n in [3u64, 5, 7, 9] {
            let units = MassPartition::units(n as usize).unwrap();
            assert_eq!(skeleton_marginal(n, 0, &units).unwrap(), rational_int(1));
        }
        // Shape mismatches are errors.
        assert!(skeleton_marginal(7, 1, &p511).is_err());
        assert!(skeleton_marginal(9, 2, &p511).is_err());
        let even = MassPartition::rank(&[4, 2, 1]).unwrap();
        assert!(skeleton_marginal(7, 2, &even).is_err());
    }

    #[test]
    fn skeleton_marginal_normalizes_exactly() {
        for n in (3..=11u64).step_by(2) {
            for l in 0..=(n - 1) / 2 {
                let parts = n - 2 * l;
                let mut sum = Rational::zero();
                for p in crate::oracle::odd_partitions(n, parts) {
                    sum += skeleton_marginal(n, l, &p).unwrap();
                }
                assert_eq!(sum, rational_int(1), "N={n} l={l}");
            }
        }
    }

    #[test]
    fn skeleton_marginal_equals_conditioned_hitting_times() {
        // gamma(s) prod P(H_{-1} = s_i) / P(H_{-m} = N) with the denominator
        // from exact convolution of hitting_time_pmf.
        for n in (3..=9u64).step_by(2) {
            for l in 0..=(n - 1) / 2 {
                let m = (n - 2 * l) as usize;
                // Exact convolution of m copies of the H_{-1} law up to total N.
                let mut conv = vec![Rational::zero(); n as usize + 1];
                conv[0] = rational_int(1);
                for _ in 0..m {
                    let mut next = vec![Rational::zero(); n as usize + 1];
                    for total in 0..=n as usize {
                        if conv[total].is_zero() {
                            continue;
                        }
                        let mut step = 1usize;
                        while total + step <= n as usize {
                            let p = hitting_time_pmf(-1, step as u64).unwrap();
                            if !p.is_zero() {
                                let add = conv[total].clone() * p;
                                next[total + step] += add;
                            }
                            step += 2;
                        }
                    }
                    conv = next;
                }
                let denom = conv[n as usize].clone();
                for p in crate::oracle::odd_partitions(n, n - 2 * l) {
                    let mut joint = Rational::from_integer(BigInt::from(p.multiplicity_gamma()));
                    for &s in p.masses() {
                        joint *= hitting_time_pmf(-1, s).unwrap();
                    }
                    assert_eq!(
                        joint / denom.clone(),
                        skeleton_marginal(n, l, &p).unwrap(),
                        "N={n} l={l} p={p}"
                    );
                }
            }
        }
    }

    #[test]
    fn dislocation_examples() {
        assert_eq!(dislocation_pmf(3, &[1, 1, 1]).unwrap(), rational_int(1));
        assert_eq!(dislocation_pmf(5, &[3, 1, 1]).unwrap(), rational_int(1));
        assert_eq!(dislocation_pmf(7, &[5, 1, 1]).unwrap(), rat(2, 3));
        assert_eq!(dislocation_pmf(7, &[3, 3, 1]).unwrap(), rat(1, 3));
        // Order of the multiset does not matter.
        assert_eq!(dislocation_pmf(7, &[1, 5, 1]).unwrap(), rat(2, 3));
        // Off-support triples get zero; malformed ones error.
        assert!(dislocation_pmf(7, &[3, 3, 3]).unwrap().is_zero());
        assert!(dislocation_pmf(9, &[4, 4, 1]).unwrap().is_zero());
        assert!(dislocation_pmf(7, &[0, 3, 4]).is_err());
        assert!(dislocation_pmf(4, &[1, 1, 1]).is_err());
    }

    #[test]
    fn dislocation_normalizes_exactly() {
        for s in (3..=41u64).step_by(2) {
            let mut sum = Rational::zero();
            for r in dislocation_support(s) {
                sum += dislocation_pmf(s, &r).unwrap();
            }
            assert_eq!(sum, rational_int(1), "s={s}");
        }
    }

    #[test]
    fn dislocation_weight_normalizer_identity() {
        // sum_R gamma(R) prod Catalan((r_i-1)/2) = (3/s) C(s,(s+3)/2)
        for s in (3..=41u64).step_by(2) {
            let total: BigUint = dislocation_support(s)
                .iter()
                .map(dislocation_weight)
                .sum();
            assert_eq!(
                ratio(total * s, BigUint::from(3u32)),
                Rational::from_integer(BigInt::from(binomial(s, (s + 3) / 2))),
                "s={s}"
            );
        }
    }

    #[test]
    fn block_coagulation_examples() {
        let units3 = MassPartition::units(3).unwrap();
        let pi = BlockPartition::new(vec![vec![0, 1, 2]], 3).unwrap();
        assert_eq!(block_coagulation_prob(&units3, &pi).unwrap(), rational_int(1));

        let units5 = MassPartition::units(5).unwrap();
        let pi = BlockPartition::new(vec![vec![0, 1, 2], vec![3], vec![4]], 5).unwrap();
        assert_eq!(block_coagulation_prob(&units5, &pi).unwrap(), rat(1, 10));

        let singles = BlockPartition::new((0..5).map(|i| vec![i]).collect(), 5).unwrap();
        assert_eq!(block_coagulation_prob(&units5, &singles).unwrap(), rational_int(1));

        let even = BlockPartition::new(vec![vec![0, 1], vec![2, 3, 4]], 5).unwrap();
        assert!(block_coagulation_prob(&units5, &even).is_err());
    }

    #[test]
    fn partition_event_examples() {
        let units3 = MassPartition::units(3).unwrap();
        let singles = BlockPartition::new((0..3).map(|i| vec![i]).collect(), 3).unwrap();
        assert_eq!(partition_event_prob(&units3, &singles, 0.0).unwrap(), 1.0);

        let merged = BlockPartition::new(vec![vec![0, 1, 2]], 3).unwrap();
        for &t in &[0.0, 0.1, 1.0] {
            let got = partition_event_prob(&units3, &merged, t).unwrap();
            assert!((got - (1.0 - (-6.0 * t).exp())).abs() < 1e-12);
        }

        let units5 = MassPartition::units(5).unwrap();
        let pi = BlockPartition::new(vec![vec![0, 1, 2], vec![3], vec![4]], 5).unwrap();
        let got = partition_event_prob(&units5, &pi, 0.05).unwrap();
        assert!((got - 0.0716) < 5e-5 && (0.0716 - got) < 5e-5);
    }

    #[test]
    fn forest_count_examples() {
        assert_eq!(forest_count(3, 3).unwrap(), BigUint::one());
        assert_eq!(forest_count(7, 7).unwrap(), BigUint::one());
        assert_eq!(forest_count(1, 3).unwrap(), BigUint::from(3u32));
        assert_eq!(forest_count(1, 5).unwrap(), BigUint::from(120u32));
        assert_eq!(forest_count(3, 5).unwrap(), BigUint::from(30u32));
        assert_eq!(forest_count(1, 1).unwrap(), BigUint::one());
        assert!(matches!(forest_count(2, 5), Err(Error::EvenForestComponents)));
        assert!(forest_count(7, 5).is_err());
    }

    #[test]
    fn forest_count_fiber_recursion() {
        // |F(2k-1,N)| = (n+k+1) k (2k-1) |F(2k+1,N)|
        for n_vertices in (3..=101u64).step_by(2) {
            let n = (n_vertices - 1) / 2;
            for k in 1..=n {
                let lhs = forest_count(2 * k - 1, n_vertices).unwrap();
                let rhs = forest_count(2 * k + 1, n_vertices).unwrap()
                    * ((n + k + 1) * k * (2 * k - 1));
                assert_eq!(lhs, rhs, "N={n_vertices} k={k}");
            }
        }
    }

    #[test]
    fn plane_forest_count_examples() {
        assert_eq!(plane_forest_count(1, 3).unwrap(), BigUint::one());
        assert_eq!(plane_forest_count(1, 5).unwrap(), BigUint::from(2u32));
        assert_eq!(plane_forest_count(1, 7).unwrap(), BigUint::from(5u32));
        // Confirmed by exhaustive enumeration (see the forest module tests):
        // three ordered compositions of 5 into (3,1,1) shapes.
        assert_eq!(plane_forest_count(3, 5).unwrap(), BigUint::from(3u32));
        assert_eq!(plane_forest_count(5, 5).unwrap(), BigUint::one());
    }

    #[test]
    fn plane_forest_count_matches_first_passage_paths() {
        // Plane forests with m components on N vertices are in bijection with
        // +-1 paths first hitting -m at N.
        for n_vertices in (1..=13u64).step_by(2) {
            for m in (1..=n_vertices).step_by(2) {
                let paths = kary_first_passage_count(3, m, n_vertices).unwrap();
                let forests = plane_forest_count(m, n_vertices).unwrap();
                assert_eq!(paths, Rational::from_integer(BigInt::from(forests)));
            }
        }
    }

    #[test]
    fn kary_first_passage_examples() {
        assert_eq!(kary_first_passage_count(3, 1, 3).unwrap(), rational_int(1));
        assert_eq!(kary_first_passage_count(4, 1, 4).unwrap(), rational_int(1));
        for k in 3..=6u32 {
            assert_eq!(kary_first_passage_count(k, 1, 1).unwrap(), rational_int(1));
        }
        // Off support.
        assert!(kary_first_passage_count(3, 1, 2).unwrap().is_zero());
        assert!(kary_first_passage_count(4, 1, 3).unwrap().is_zero());
        assert!(kary_first_passage_count(3, 5, 3).unwrap().is_zero());
        assert!(kary_first_passage_count(2, 1, 1).is_err());
    }

    #[test]
    fn kary_matches_ternary_hitting_pmf() {
        // (|k|/m) C(m,(m+|k|)/2) = first-passage count; pmf adds 2^{-m}.
        for j in 1..=5u64 {
            for m in 1..=25u64 {
                let count = kary_first_passage_count(3, j, m).unwrap();
                let pmf = hitting_time_pmf(-(j as i64), m).unwrap();
                let two_m = Rational::from_integer(BigInt::from(BigUint::one() << m));
                assert_eq!(count, pmf * two_m, "j={j} m={m}");
            }
        }
    }
}
