//! The order-preserving homeomorphism between two Cantor blocks, built by
//! deterministic back-and-forth gap matching, evaluated exactly at gap
//! endpoints and with certified error elsewhere.
//!
//! ```bash
//! cargo run --release --example order_transport
//! ```

use num_traits::Zero;
use rih::cantor::{CantorBlock, TransportPlan, DEFAULT_ROUND_CAP};
use rih::exact::{rat_int, rat_to_string, Rat};
use rih::map::order_homeo;

fn main() -> rih::Result<()> {
    // two adjacent unit cells onto a single cell: genuinely non-affine
    let a = CantorBlock::new(Rat::zero(), rat_int(1), 2)?;
    let b = CantorBlock::new(Rat::zero(), rat_int(1), 1)?;

    let plan = TransportPlan::new(a.clone(), b.clone());
    println!("images of the generation-1 and 2 gap endpoints:");
    for g in 1..=2u32 {
        for (lo, hi) in a.gaps(g) {
            let img_lo = plan.eval_exact(&lo, DEFAULT_ROUND_CAP)?;
            let img_hi = plan.eval_exact(&hi, DEFAULT_ROUND_CAP)?;
            println!(
                "  ({}, {}) -> ({}, {})",
                rat_to_string(&lo),
                rat_to_string(&hi),
                rat_to_string(&img_lo),
                rat_to_string(&img_hi)
            );
        }
    }

    // as a full map of the line it carries slope-1 tails through the hulls
    let map = order_homeo(&a, &b)?;
    println!(
        "tails: {:+.3} on the left, {:+.3} on the right",
        map.left_offset(),
        map.right_offset()
    );
    let v = map.eval(0.9, 1e-8)?;
    println!("certified eval at 0.9 (tol 1e-8): {v:.9}");
    let back = map.invert(v, 1e-8)?;
    println!("inverse at that value: {back:.9}");
    Ok(())
}
