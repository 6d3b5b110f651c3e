//! The translation-tail perturbation toward a minimal system, and the
//! orbit-density search that witnesses full support.
//!
//! ```bash
//! cargo run --release --example minimal_perturbation
//! ```

use rih::exact::rat_from_f64;
use rih::minimal::{density_diagnostic, perturb_minimal};
use rih::system::symmetric_drift_system;

fn main() -> rih::Result<()> {
    let sys = symmetric_drift_system();
    let bundle = perturb_minimal(&sys, 0.1)?;
    println!("offsets: eta0 = {}, eta1 = {}", bundle.eta0, bundle.eta1);
    println!(
        "ratio irrational: {}; drift = {:.6}",
        bundle.eta1.is_irrational(),
        0.5 * bundle.eta0.to_f64() + 0.5 * bundle.eta1.to_f64()
    );
    println!(
        "translation regime left of {:.3}; original maps kept on [{:.1}, inf)",
        bundle.barrier, -bundle.radius
    );

    let x0 = rat_from_f64(bundle.barrier.floor() - 1.0);
    let report = density_diagnostic(&bundle, &x0, 4.0, 16, 100_000)?;
    println!(
        "density search over 16 cells of [-4, 4]: visited {}/16",
        report.visited
    );
    for c in report.cells.iter().take(4) {
        match &c.word {
            Some(w) => println!(
                "  cell [{:+.2}, {:+.2}): word {}x(below) {}x(above)+{} climbs, landed {:+.4}",
                c.lo,
                c.hi,
                w.descents,
                w.lifts,
                w.climbs,
                c.landed.unwrap()
            ),
            None => println!("  cell [{:+.2}, {:+.2}): unvisited", c.lo, c.hi),
        }
    }
    Ok(())
}
