mod common;

use proptest::prelude::*;
use smelu_repro::activations::{smelu_convolution_oracle, ActivationSpec, GSmeluParams};

const H: f64 = 1e-6;

fn central(spec: &ActivationSpec, x: f64) -> f64 {
    (spec.apply(x + H).0 - spec.apply(x - H).0) / (2.0 * H)
}

/// Grid of `n` points covering every knot with margin on both sides.
fn grid_for(spec: &ActivationSpec, n: usize) -> Vec<f64> {
    let reach = spec.knots().iter().fold(1.0f64, |m, k| m.max(k.abs()));
    let (lo, hi) = (-4.0 * reach, 4.0 * reach);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn near_knot(spec: &ActivationSpec, x: f64) -> bool {
    spec.knots().iter().any(|k| (x - k).abs() <= 2.0 * H)
}

#[test]
fn analytic_slopes_match_central_differences() {
    for spec in common::every_activation() {
        let mut worst: f64 = 0.0;
        for x in grid_for(&spec, 1000) {
            if near_knot(&spec, x) {
                continue;
            }
            let err = common::rel_err(spec.apply(x).1, central(&spec, x), 1e-3);
            worst = worst.max(err);
        }
        assert!(worst <= 1e-5, "{spec}: relative error {worst}");
    }
}

#[test]
fn piecewise_kinds_are_c1_at_knots() {
    for spec in common::every_activation() {
        if matches!(spec, ActivationSpec::Relu) {
            continue;
        }
        for k in spec.knots() {
            let d = 1e-9;
            let (yl, sl) = spec.apply(k - d);
            let (yr, sr) = spec.apply(k + d);
            assert!((yr - yl).abs() <= 1e-8, "{spec} value jump at {k}");
            assert!((sr - sl).abs() <= 1e-7, "{spec} slope jump at {k}");
        }
    }
}

#[test]
fn smelu_flat_and_identity_regions_are_exact() {
    for beta in [0.1, 0.5, 1.0, 3.0] {
        let s = ActivationSpec::smelu(beta).unwrap();
        for i in 0..1000 {
            let off = 10.0 * beta * i as f64 / 999.0;
            let left = -beta - off;
            assert_eq!(s.apply(left).0.to_bits(), 0.0f64.to_bits());
            assert_eq!(s.apply(left).1, 0.0);
            let right = beta + off;
            assert_eq!(s.apply(right).0.to_bits(), right.to_bits());
            assert_eq!(s.apply(right).1, 1.0);
        }
    }
}

#[test]
fn smelu_is_relu_convolved_with_a_box() {
    for beta in [0.5, 1.0, 2.0] {
        let s = ActivationSpec::smelu(beta).unwrap();
        for i in 0..=600 {
            let x = -3.0 * beta + 6.0 * beta * i as f64 / 600.0;
            let oracle = smelu_convolution_oracle(x, beta, 20_000);
            assert!((s.apply(x).0 - oracle).abs() <= 1e-5, "beta={beta} x={x}");
        }
    }
}

#[test]
fn gsmelu_with_smelu_parameters_is_smelu() {
    for beta in [0.25, 1.0, 2.5] {
        let g = ActivationSpec::GSmelu(GSmeluParams::new(beta, beta, 0.0, 1.0, 0.0).unwrap());
        let s = ActivationSpec::smelu(beta).unwrap();
        for x in grid_for(&s, 1000) {
            let (a, b) = (g.apply(x), s.apply(x));
            assert!((a.0 - b.0).abs() <= 1e-12 && (a.1 - b.1).abs() <= 1e-12, "x={x}");
        }
    }
}

/// Solves the three knot constraints `f(-alpha) = t`, `f'(-alpha) = g-`,
/// `f'(beta) = g+` for the quadratic `a x^2 + b x + c`.
pub fn solve_knot_constraints(p: &GSmeluParams) -> [f64; 3] {
    let (al, be) = (p.alpha(), p.beta());
    let mut m = [
        [al * al, -al, 1.0, p.t()],
        [-2.0 * al, 1.0, 0.0, p.g_minus()],
        [2.0 * be, 1.0, 0.0, p.g_plus()],
    ];
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    [m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]]
}

#[test]
fn gsmelu_coefficients_match_hand_values() {
    let cases = [
        ((1.0, 1.0, 0.0, 1.0, 0.0), [0.25, 0.5, 0.25]),
        ((2.0, 1.0, 0.0, 1.0, 0.0), [1.0 / 6.0, 2.0 / 3.0, 2.0 / 3.0]),
        ((1.0, 1.0, 0.1, 1.0, -0.1), [0.225, 0.55, 0.225]),
    ];
    for ((a, b, gm, gp, t), want) in cases {
        let p = GSmeluParams::new(a, b, gm, gp, t).unwrap();
        let c = p.coeffs();
        let solved = solve_knot_constraints(&p);
        for (got, (w, s)) in [c.a, c.b, c.c].iter().zip(want.iter().zip(solved)) {
            assert!((got - w).abs() <= 1e-15, "{p:?}: {got} vs {w}");
            assert!((got - s).abs() <= 1e-14, "{p:?}: {got} vs solver {s}");
        }
    }
}

proptest! {
    #[test]
    fn smelu_is_sandwiched_between_relu_and_relu_plus_quarter_beta(
        beta in 0.01f64..5.0, x in -20.0f64..20.0,
    ) {
        let y = ActivationSpec::smelu(beta).unwrap().apply(x).0;
        prop_assert!(y >= x.max(0.0));
        prop_assert!(y <= x.max(0.0) + beta / 4.0 + 1e-15);
    }

    #[test]
    fn gsmelu_is_c1_for_random_parameters(
        alpha in 0.05f64..4.0, beta in 0.05f64..4.0,
        gm in -0.5f64..0.9, dg in 0.05f64..2.0, t in -2.0f64..0.0,
    ) {
        let p = GSmeluParams::new(alpha, beta, gm, gm + dg, t).unwrap();
        prop_assert!((p.eval(-alpha).0 - t).abs() <= 1e-12 * (1.0 + alpha));
        for k in [-alpha, beta] {
            let (yl, sl) = p.eval(k - 1e-9);
            let (yr, sr) = p.eval(k + 1e-9);
            prop_assert!((yr - yl).abs() <= 1e-8 * (1.0 + k.abs()));
            prop_assert!((sr - sl).abs() <= 1e-7 * (1.0 + dg / (alpha + beta)));
        }
        let solved = solve_knot_constraints(&p);
        let c = p.coeffs();
        for (got, s) in [c.a, c.b, c.c].iter().zip(solved) {
            prop_assert!((got - s).abs() <= 1e-9 * (1.0 + s.abs()));
        }
    }

    #[test]
    fn smooth_kinds_are_monotone_past_their_minimum(beta in 0.1f64..4.0, x in 0.0f64..10.0) {
        for spec in [
            ActivationSpec::smelu(beta).unwrap(),
            ActivationSpec::softplus(beta).unwrap(),
            ActivationSpec::swish(beta).unwrap(),
            ActivationSpec::gelu(beta).unwrap(),
        ] {
            prop_assert!(spec.apply(x).1 >= 0.0, "{}", spec);
            prop_assert!(spec.apply(x + 0.01).0 >= spec.apply(x).0, "{}", spec);
        }
    }

    #[test]
    fn slopes_match_differences_at_random_points(beta in 0.2f64..3.0, x in -8.0f64..8.0) {
        for spec in [
            ActivationSpec::smelu(beta).unwrap(),
            ActivationSpec::softplus(beta).unwrap(),
            ActivationSpec::swish(beta).unwrap(),
            ActivationSpec::gelu_exact(beta).unwrap(),
        ] {
            prop_assume!(!near_knot(&spec, x));
            let err = common::rel_err(spec.apply(x).1, central(&spec, x), 1e-3);
            prop_assert!(err <= 1e-5, "{}: {}", spec, err);
        }
    }

    #[test]
    fn text_form_round_trips(beta in 0.01f64..10.0) {
        for spec in [
            ActivationSpec::smelu(beta).unwrap(),
            ActivationSpec::gelu_exact(beta).unwrap(),
            ActivationSpec::GSmelu(GSmeluParams::new(beta, 1.0, 0.0, 1.0, -0.1).unwrap()),
        ] {
            let back: ActivationSpec = spec.to_string().parse().unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
