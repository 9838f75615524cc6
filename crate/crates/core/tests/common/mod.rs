#![allow(dead_code)]

use num_complex::Complex64;
use periodic_dirac::PeriodicPotential;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_piecewise(rng: &mut impl Rng, period: f64) -> PeriodicPotential {
    let k = rng.gen_range(1..=4);
    let mut bps: Vec<f64> = (1..k).map(|_| rng.gen_range(0.05..0.95) * period).collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    bps.insert(0, 0.0);
    let values = bps.iter().map(|_| rng.gen_range(-3.0..3.0)).collect();
    PeriodicPotential::piecewise_constant(period, bps, values).unwrap()
}

pub fn random_fourier(rng: &mut impl Rng, period: f64) -> PeriodicPotential {
    let n = rng.gen_range(1..=3);
    let cos = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let sin = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
    PeriodicPotential::fourier(period, rng.gen_range(-1.0..1.0), cos, sin).unwrap()
}

pub fn random_sampled(rng: &mut impl Rng, period: f64) -> PeriodicPotential {
    let n = rng.gen_range(3..=12);
    PeriodicPotential::sampled(period, (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

/// Cycles through the three non-trivial shapes.
pub fn random_potential(rng: &mut impl Rng, which: usize) -> PeriodicPotential {
    let period = rng.gen_range(0.5..2.0);
    match which % 3 {
        0 => random_piecewise(rng, period),
        1 => random_fourier(rng, period),
        _ => random_sampled(rng, period),
    }
}
