//! Solving for the stationary CDF with a certified bracket, and checking
//! the result against a seeded Monte Carlo oracle.
//!
//! ```bash
//! cargo run --release --example stationary_envelope
//! ```

use rih::markov::{monte_carlo_cdf, stationary_solve, tail_certificate};
use rih::measure::kolmogorov_distance;
use rih::system::symmetric_drift_system;

fn main() -> rih::Result<()> {
    let sys = symmetric_drift_system();

    let cert = tail_certificate(&sys)?;
    println!(
        "tail certificate: M = {:.3}, alpha = {:.3}, edge x0 = {:.4}, ball radius {:.4}",
        cert.m, cert.alpha, cert.x0, cert.ball_radius
    );

    let env = stationary_solve(&sys, 0.005)?;
    println!(
        "envelope: gap {:.5} after {} iterations (converged: {}), tau = {:.2e}",
        env.gap, env.iterations, env.converged, env.tau
    );
    let (lo, hi) = env.cdf_bounds(0.0);
    println!("CDF at 0 is bracketed by [{lo:.4}, {hi:.4}] (symmetry forces 1/2)");
    println!("largest atom weight in the bracketing chains: {:.2e}", env.max_atom_weight);

    let mc = monte_carlo_cdf(&sys, 200_000, 1_000, 7)?;
    let d = kolmogorov_distance(&env.midpoint(), &mc.to_staircase());
    println!("Kolmogorov distance to a 2e5-sample Monte Carlo run: {d:.4}");
    Ok(())
}
