//! Builds asymmetric gSmeLU and multi-knot RESCU activations and checks
//! that they are C1 at their knots.
//!
//!     cargo run --example custom_shapes

use smelu_repro::activations::{build_rescu, ActivationSpec, GSmeluParams};

fn main() -> smelu_repro::Result<()> {
    // leaky on the left, wider bridge on the negative side
    let g = GSmeluParams::new(2.0, 1.0, 0.05, 1.0, -0.1)?;
    let c = g.coeffs();
    println!("gsmelu middle segment: {:.4} x^2 + {:.4} x + {:.4}", c.a, c.b, c.c);

    let rescu = build_rescu(&[(-2.0, 0.0), (-0.5, 0.4), (1.0, 1.0)], (-2.0, 0.0))?;
    let specs = [ActivationSpec::GSmelu(g), ActivationSpec::Rescu(rescu)];

    for spec in &specs {
        println!("{spec}");
        for k in spec.knots() {
            let (left, right) = (spec.eval(k - 1e-9)?, spec.eval(k + 1e-9)?);
            println!(
                "  knot {k:>5}: value {:.6} slope {:.6} (jumps {:.1e}, {:.1e})",
                right.0,
                right.1,
                (right.0 - left.0).abs(),
                (right.1 - left.1).abs()
            );
        }
    }

    // text form round-trips, so shapes can live in config files
    let back: ActivationSpec = specs[1].to_string().parse()?;
    assert_eq!(back, specs[1]);
    Ok(())
}
