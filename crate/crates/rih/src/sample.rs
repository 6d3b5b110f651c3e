//! Seeded generation of random valid systems and small perturbations of
//! them, for tests, benchmarks, and examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::map::MonotoneMap;
use crate::system::RandomSystem;

fn random_map(rng: &mut impl Rng, below: bool) -> MonotoneMap {
    let k = rng.gen_range(2..=4usize);
    let mut x = rng.gen_range(-3.0..-1.0f64);
    let mut pts = Vec::with_capacity(k);
    let mut gap = rng.gen_range(0.3..1.7f64);
    for _ in 0..k {
        let y = if below { x - gap } else { x + gap };
        pts.push((x, y));
        let dx = rng.gen_range(0.8..1.6f64);
        x += dx;
        // keep the next diagonal distance close enough that the chain stays
        // increasing: |dgap| < dx
        let dgap = rng.gen_range(-0.5..0.5f64) * dx.min(1.0);
        gap = (gap + dgap).clamp(0.3, 1.7);
    }
    MonotoneMap::from_breakpoints(&pts).expect("generated chain is increasing")
}

/// A random valid system: piecewise-linear maps with diagonal distance in
/// [0.3, 1.7] and both Lyapunov exponents at least 0.05.
pub fn random_system(rng: &mut impl Rng) -> RandomSystem {
    loop {
        let f0 = random_map(rng, true);
        let f1 = random_map(rng, false);
        let p = rng.gen_range(0.25..0.75f64);
        let sys = RandomSystem::new_unchecked(f0, f1, p);
        let report = sys.validate();
        if report.is_valid()
            && report.lyap.lambda_minus > 0.05
            && report.lyap.lambda_plus > 0.05
        {
            return sys;
        }
    }
}

pub fn random_system_seeded(seed: u64) -> RandomSystem {
    random_system(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn jiggle_map(m: &MonotoneMap, eps: f64, rng: &mut impl Rng) -> Option<MonotoneMap> {
    let moved: Vec<(f64, f64)> = m
        .breakpoints()?
        .iter()
        .map(|&(x, y)| (x, y + rng.gen_range(-0.4..0.4f64) * eps))
        .collect();
    MonotoneMap::from_breakpoints(&moved).ok()
}

/// A perturbation of `sys` with max-metric distance strictly below `eps`:
/// every breakpoint value moves by less than 0.4 eps (both maps keep their
/// breakpoint abscissas, so the sup distance is attained there), and the
/// probability moves by less than 0.4 eps when room permits.
pub fn perturb_within(sys: &RandomSystem, eps: f64, rng: &mut impl Rng) -> RandomSystem {
    loop {
        let f0 = match jiggle_map(&sys.f0, eps, rng) {
            Some(m) => m,
            None => continue,
        };
        let f1 = match jiggle_map(&sys.f1, eps, rng) {
            Some(m) => m,
            None => continue,
        };
        let dp = rng.gen_range(-0.4..0.4f64) * eps.min(0.5);
        let p = (sys.p + dp).clamp(0.05, 0.95);
        let cand = RandomSystem::new_unchecked(f0, f1, p);
        if cand.validate().is_valid() {
            return cand;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::system_distance;

    #[test]
    fn generated_systems_are_valid() {
        for seed in 0..20 {
            let sys = random_system_seeded(seed);
            let r = sys.validate();
            assert!(r.is_valid(), "seed {seed}: {:?}", r.first_failure());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = random_system_seeded(5);
        let b = random_system_seeded(5);
        assert_eq!(a.f0.breakpoints(), b.f0.breakpoints());
        assert_eq!(a.p, b.p);
    }

    #[test]
    fn perturbations_stay_within_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..10 {
            let sys = random_system_seeded(seed);
            let eps = 0.1;
            let near = perturb_within(&sys, eps, &mut rng);
            let d = system_distance(&sys, &near);
            assert!(d.d_m < eps, "seed {seed}: d_m = {}", d.d_m);
        }
    }
}
