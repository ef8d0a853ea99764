//! Prints value and slope of every activation kind on a small grid.
//!
//!     cargo run --example activation_curves

use smelu_repro::activations::ActivationSpec;

fn main() {
    let specs: Vec<ActivationSpec> = [
        "relu",
        "smelu:beta=1",
        "softplus:beta=1",
        "swish:beta=1",
        "gelu:beta=1",
        "gelu:beta=1,exact=true",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect();

    print!("{:>6}", "x");
    for s in &specs {
        print!("  {:>22}", s.to_string());
    }
    println!();
    for i in 0..=16 {
        let x = -2.0 + 0.25 * i as f64;
        print!("{x:>6.2}");
        for s in &specs {
            let (y, dy) = s.eval(x).unwrap();
            print!("  {:>10.5} {:>11.5}", y, dy);
        }
        println!();
    }
}
