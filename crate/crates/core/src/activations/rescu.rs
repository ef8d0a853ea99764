//! RESCU: multi-segment C1 activations built from slopes at knots.
//!
//! Outside the knot range the curve is linear with the first/last slope.
//! Between consecutive knots it is the quadratic whose derivative ramps
//! linearly from one knot's slope to the next, so value and slope are
//! continuous everywhere. Two knots with equal slopes give a linear piece.

use crate::error::{Error, Result};

/// One quadratic bridge on `[left, right]`, stored in local form
/// `y = y0 + s0 (x - left) + curvature (x - left)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescuSegment {
    pub left: f64,
    pub right: f64,
    pub y0: f64,
    pub s0: f64,
    pub curvature: f64,
}

impl RescuSegment {
    fn eval(&self, x: f64) -> (f64, f64) {
        let u = x - self.left;
        (
            self.y0 + (self.s0 + self.curvature * u) * u,
            self.s0 + 2.0 * self.curvature * u,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescuSpec {
    knots: Vec<(f64, f64)>,
    anchor: (f64, f64),
    segments: Vec<RescuSegment>,
    // value at each knot
    levels: Vec<f64>,
}

/// Builds a RESCU activation from `(x_i, slope_i)` knots and a point
/// `(x0, y0)` the curve must pass through.
pub fn build_rescu(knots: &[(f64, f64)], anchor: (f64, f64)) -> Result<RescuSpec> {
    if knots.len() < 2 {
        return Err(Error::InvalidSpec("rescu needs at least two knots".into()));
    }
    if knots
        .iter()
        .chain(std::iter::once(&anchor))
        .any(|(x, s)| !x.is_finite() || !s.is_finite())
    {
        return Err(Error::InvalidSpec("rescu knots and anchor must be finite".into()));
    }
    for w in knots.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidSpec(format!(
                "rescu knots must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            )));
        }
    }

    let mut levels = Vec::with_capacity(knots.len());
    let mut segments = Vec::with_capacity(knots.len() - 1);
    let mut level = 0.0;
    levels.push(level);
    for w in knots.windows(2) {
        let ((x0, s0), (x1, s1)) = (w[0], w[1]);
        let width = x1 - x0;
        let seg = RescuSegment {
            left: x0,
            right: x1,
            y0: level,
            s0,
            curvature: (s1 - s0) / (2.0 * width),
        };
        level = seg.eval(x1).0;
        levels.push(level);
        segments.push(seg);
    }

    let mut spec = RescuSpec {
        knots: knots.to_vec(),
        anchor,
        segments,
        levels,
    };
    let shift = anchor.1 - spec.eval(anchor.0).0;
    for seg in &mut spec.segments {
        seg.y0 += shift;
    }
    for l in &mut spec.levels {
        *l += shift;
    }
    Ok(spec)
}

impl RescuSpec {
    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn anchor(&self) -> (f64, f64) {
        self.anchor
    }

    pub fn segments(&self) -> &[RescuSegment] {
        &self.segments
    }

    /// Value and slope at `x`; knots belong to the quadratic bridges.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let first = self.knots[0];
        let last = self.knots[self.knots.len() - 1];
        if x < first.0 {
            return (self.levels[0] + first.1 * (x - first.0), first.1);
        }
        if x > last.0 {
            let top = self.levels[self.levels.len() - 1];
            return (top + last.1 * (x - last.0), last.1);
        }
        // last segment whose left knot is <= x
        let idx = self
            .segments
            .partition_point(|s| s.left <= x)
            .saturating_sub(1);
        self.segments[idx].eval(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::GSmeluParams;

    #[test]
    fn two_knots_reduce_to_smelu() {
        for beta in [0.25, 1.0, 3.0] {
            let r = build_rescu(&[(-beta, 0.0), (beta, 1.0)], (-beta, 0.0)).unwrap();
            for i in 0..=400 {
                let x = -4.0 * beta + 8.0 * beta * i as f64 / 400.0;
                let expect = if x <= -beta {
                    0.0
                } else if x >= beta {
                    x
                } else {
                    (x + beta).powi(2) / (4.0 * beta)
                };
                assert!((r.eval(x).0 - expect).abs() < 1e-12, "beta={beta} x={x}");
            }
        }
    }

    #[test]
    fn two_knots_equal_gsmelu() {
        let r = build_rescu(&[(-1.0, 0.1), (1.0, 1.0)], (-1.0, -0.1)).unwrap();
        let g = GSmeluParams::new(1.0, 1.0, 0.1, 1.0, -0.1).unwrap();
        for i in 0..=200 {
            let x = -3.0 + 6.0 * i as f64 / 200.0;
            let (a, da) = r.eval(x);
            let (b, db) = g.eval(x);
            assert!((a - b).abs() < 1e-12 && (da - db).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn three_knots_are_c1() {
        let r = build_rescu(&[(-2.0, 0.0), (-1.0, 0.5), (1.0, 1.0)], (-2.0, 0.0)).unwrap();
        let eps = 1e-6;
        for &(k, s) in r.knots() {
            let (yl, dl) = r.eval(k - eps);
            let (yr, dr) = r.eval(k + eps);
            assert!((yr - yl).abs() <= 2.0 * eps * (1.0 + s.abs()));
            assert!((dr - dl).abs() <= 10.0 * eps);
        }
        assert_eq!(r.eval(-2.0).0, 0.0);
        assert_eq!(r.eval(-5.0), (0.0, 0.0));
        assert_eq!(r.eval(5.0).1, 1.0);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(build_rescu(&[(0.0, 0.0)], (0.0, 0.0)).is_err());
        assert!(build_rescu(&[(1.0, 0.0), (1.0, 1.0)], (0.0, 0.0)).is_err());
        assert!(build_rescu(&[(1.0, 0.0), (0.0, 1.0)], (0.0, 0.0)).is_err());
    }

    #[test]
    fn anchor_pins_level() {
        let r = build_rescu(&[(-1.0, 0.0), (0.0, 0.5), (2.0, 2.0)], (0.5, 3.0)).unwrap();
        assert!((r.eval(0.5).0 - 3.0).abs() < 1e-15);
    }
}
