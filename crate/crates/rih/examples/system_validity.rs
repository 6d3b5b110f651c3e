//! Building a system, checking the membership conditions, and reading off
//! Lyapunov exponents and endpoint derivatives.
//!
//! ```bash
//! cargo run --release --example system_validity
//! ```

use rih::map::MonotoneMap;
use rih::system::{symmetric_drift_system, RandomSystem};

fn main() {
    let sys = symmetric_drift_system();
    let report = sys.validate();
    println!("symmetric drift system:");
    for (name, c) in [
        ("(i)   homeomorphisms", &report.homeomorphisms),
        ("(ii)  below diagonal", &report.below),
        ("(iii) above diagonal", &report.above),
        ("(iv)  probability   ", &report.probability),
        ("(v)   lyapunov      ", &report.lyapunov),
    ] {
        println!("  {name}: {}", if c.pass { "pass" } else { "FAIL" });
    }
    println!(
        "  exponents: {:.4} at -inf, {:.4} at +inf",
        report.lyap.lambda_minus, report.lyap.lambda_plus
    );
    let (d0, d1) = sys.f0.endpoint_derivatives();
    println!("  derivatives of the unit original of F0: ({d0:.4}, {d1:.4})");

    // two translations with zero average drift are rejected
    let flat = RandomSystem::new_unchecked(
        MonotoneMap::translation(-1.0),
        MonotoneMap::translation(1.0),
        0.5,
    );
    println!(
        "zero-drift pair of translations: {}",
        flat.validate().first_failure().unwrap()
    );
}
