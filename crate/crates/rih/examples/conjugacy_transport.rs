//! Transporting unit-interval maps to the real line and back, and the
//! isometry between the two sup metrics.
//!
//! ```bash
//! cargo run --release --example conjugacy_transport
//! ```

use rih::conjugacy::{dh, eval_in_unit, transport_map, unit_to_line, UnitPiecewiseLinear, UnitPoint};

fn main() -> rih::Result<()> {
    // h maps the open unit interval onto the line, center to zero
    for x in [0.25, 0.5, 0.75] {
        let u = UnitPoint::new(x)?;
        println!("h({x}) = {:+.6}", unit_to_line(u));
    }

    // a piecewise-linear map with endpoint slopes 1/2 and 3/2 becomes a
    // two-piece translation chain with offsets log(1/2) and -log(3/2)
    let f = UnitPiecewiseLinear::new(vec![(0.5, 0.25)])?;
    let fr = transport_map(&f)?;
    println!(
        "tails of the transported map: {:+.6} (= log f'(0)) and {:+.6} (= -log f'(1))",
        fr.left_offset(),
        fr.right_offset()
    );

    // the sup distance on the line equals the induced distance on the
    // interval: compare against dense unit-coordinate sampling
    let g = UnitPiecewiseLinear::new(vec![(0.5, 0.3)])?;
    let gr = transport_map(&g)?;
    let exact = fr.sup_distance(&gr);
    let mut sampled = (fr.left_offset() - gr.left_offset())
        .abs()
        .max((fr.right_offset() - gr.right_offset()).abs());
    for i in 0..200_000 {
        let t = -20.0 + 40.0 * i as f64 / 199_999.0;
        let x = rih::conjugacy::line_to_unit(t);
        let fu = eval_in_unit(&fr, x, 1e-12)?;
        let gu = eval_in_unit(&gr, x, 1e-12)?;
        sampled = sampled.max(dh(fu, gu));
    }
    println!("sup distance on the line : {exact:.9}");
    println!("sampled unit-coordinate  : {sampled:.9}");
    println!("difference               : {:.2e}", (exact - sampled).abs());
    Ok(())
}
