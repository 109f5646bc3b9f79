// Temporary diagnostic: cross-validate the two ternary samplers and the
// binary oracle's own finite-size drift.
use coalescent_core::exact::total_rate;
use coalescent_core::numeric::rational_to_f64;
use coalescent_core::partition::MassPartition;
use coalescent_core::rng::{exp_variate, replica_rng};
use coalescent_core::stats::{binary_additive_samples, ks_two_sample, ternary_marginal_samples};
use coalescent_core::walk::{phi, uniform_configuration};

/// Largest rescaled mass at horizon e^0/N^{3/2} via the walk representation:
/// jump count from the state-free clock, then phi of a uniform subset.
fn walk_largest(n_particles: u64, samples: usize, seed: u64) -> Vec<f64> {
    let n = ((n_particles - 1) / 2) as usize;
    let horizon = 1.0 / (n_particles as f64).powf(1.5);
    let rates: Vec<f64> = (1..=n as u64)
        .map(|k| rational_to_f64(&total_rate(n_particles, n_particles, k).unwrap()))
        .collect();
    (0..samples)
        .map(|r| {
            let mut rng = replica_rng(seed, r as u64);
            let mut t = 0.0;
            let mut jumps = 0usize;
            for &rate in &rates {
                t += exp_variate(&mut rng, rate);
                if t > horizon {
                    break;
                }
                jumps += 1;
            }
            let cfg = uniform_configuration(n, 3, jumps, &mut rng).unwrap();
            let state: MassPartition = phi(&cfg);
            state.rescale(n_particles).unwrap().largest()
        })
        .collect()
}

fn main() {
    let samples = 20_000;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    let ctmc = ternary_marginal_samples(2001, 0.0, samples, 51).unwrap();
    let walk = walk_largest(2001, samples, 52);
    let (d, p) = ks_two_sample(&ctmc.largest, &walk).unwrap();
    println!("ternary N=2001: ctmc mean {:.4}, walk mean {:.4}, D={d:.4} p={p:.2e}",
        mean(&ctmc.largest), mean(&walk));

    for n in [250usize, 1000, 4000, 16000] {
        let o = binary_additive_samples(n, 0.0, samples, 60 + n as u64).unwrap();
        println!("binary n={n:5}: largest mean {:.4}", mean(&o.largest));
    }
    for big_n in [501u64, 2001, 8001] {
        let t = ternary_marginal_samples(big_n, 0.0, samples / 2, 70 + big_n).unwrap();
        println!("ternary N={big_n:5}: largest mean {:.4}", mean(&t.largest));
    }
}
