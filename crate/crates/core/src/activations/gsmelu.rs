//! Generalized SmeLU: a linear piece of slope `g_minus` left of `-alpha`, a
//! quadratic bridge on `[-alpha, beta]`, and a linear piece of slope `g_plus`
//! right of `beta`. The five hyper-parameters can be trained alongside the
//! network through [`LearnableGSmelu`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five gSmeLU hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GSmeluParams {
    alpha: f64,
    beta: f64,
    g_minus: f64,
    g_plus: f64,
    t: f64,
}

/// Coefficients of the middle segment `a x^2 + b x + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Partial derivatives of the activation value with respect to each parameter.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GSmeluParamGrads {
    pub alpha: f64,
    pub beta: f64,
    pub g_minus: f64,
    pub g_plus: f64,
    pub t: f64,
}

impl GSmeluParams {
    /// Validates `alpha, beta > 0`, `t <= 0` and `g_plus > g_minus`.
    ///
    /// Negative `g_minus` is accepted; use [`GSmeluParams::require_monotone`]
    /// to additionally reject it.
    pub fn new(alpha: f64, beta: f64, g_minus: f64, g_plus: f64, t: f64) -> Result<Self> {
        let all = [alpha, beta, g_minus, g_plus, t];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("gsmelu parameters must be finite".into()));
        }
        if alpha <= 0.0 || beta <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "gsmelu half-widths must be positive (alpha={alpha}, beta={beta})"
            )));
        }
        if t > 0.0 {
            return Err(Error::InvalidSpec(format!("gsmelu offset t must be <= 0, got {t}")));
        }
        if g_plus <= g_minus {
            return Err(Error::InvalidSpec(format!(
                "gsmelu requires g_plus > g_minus (g_minus={g_minus}, g_plus={g_plus})"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            g_minus,
            g_plus,
            t,
        })
    }

    /// The parameter set that reproduces SmeLU with half-width `beta`.
    pub fn smelu(beta: f64) -> Result<Self> {
        Self::new(beta, beta, 0.0, 1.0, 0.0)
    }

    /// Rejects leaky-negative left slopes.
    pub fn require_monotone(self) -> Result<Self> {
        if self.g_minus < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "monotone gsmelu requires g_minus >= 0, got {}",
                self.g_minus
            )));
        }
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn g_minus(&self) -> f64 {
        self.g_minus
    }
    pub fn g_plus(&self) -> f64 {
        self.g_plus
    }
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Middle-segment coefficients from value continuity at `-alpha` and
    /// slope matching at both knots.
    pub fn coeffs(&self) -> QuadCoeffs {
        let Self {
            alpha,
            beta,
            g_minus,
            g_plus,
            t,
        } = *self;
        let width = alpha + beta;
        QuadCoeffs {
            a: (g_plus - g_minus) / (2.0 * width),
            b: (alpha * g_plus + beta * g_minus) / width,
            c: t + (alpha * alpha * (g_plus + g_minus) + 2.0 * alpha * beta * g_minus)
                / (2.0 * width),
        }
    }

    /// Value and slope at `x`. Knots belong to the quadratic segment.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let Self {
            alpha,
            beta,
            g_minus,
            g_plus,
            t,
        } = *self;
        if x < -alpha {
            (g_minus * x + t + g_minus * alpha, g_minus)
        } else if x > beta {
            let offset = t + 0.5 * (alpha + beta) * g_minus + 0.5 * (alpha - beta) * g_plus;
            (g_plus * x + offset, g_plus)
        } else {
            let QuadCoeffs { a, b, c } = self.coeffs();
            ((a * x + b) * x + c, 2.0 * a * x + b)
        }
    }

    /// Partial derivatives of the activation value at `x` with respect to
    /// each of the five parameters. At a knot the quadratic side is used.
    pub fn param_grads(&self, x: f64) -> GSmeluParamGrads {
        let Self {
            alpha,
            beta,
            g_minus,
            g_plus,
            ..
        } = *self;
        if x < -alpha {
            GSmeluParamGrads {
                alpha: g_minus,
                beta: 0.0,
                g_minus: x + alpha,
                g_plus: 0.0,
                t: 1.0,
            }
        } else if x > beta {
            GSmeluParamGrads {
                alpha: 0.5 * (g_minus + g_plus),
                beta: 0.5 * (g_minus - g_plus),
                g_minus: 0.5 * (alpha + beta),
                g_plus: x + 0.5 * (alpha - beta),
                t: 1.0,
            }
        } else {
            let s = alpha + beta;
            let s2 = s * s;
            let dg = g_plus - g_minus;
            let numer = alpha * alpha * (g_plus + g_minus) + 2.0 * alpha * beta * g_minus;

            let da_dalpha = -dg / (2.0 * s2);
            let da_dbeta = da_dalpha;
            let da_dgp = 1.0 / (2.0 * s);
            let da_dgm = -da_dgp;

            let db_dalpha = beta * dg / s2;
            let db_dbeta = -alpha * dg / s2;
            let db_dgp = alpha / s;
            let db_dgm = beta / s;

            let dc_dalpha =
                ((2.0 * alpha * (g_plus + g_minus) + 2.0 * beta * g_minus) * s - numer) / (2.0 * s2);
            let dc_dbeta = (2.0 * alpha * g_minus * s - numer) / (2.0 * s2);
            let dc_dgp = alpha * alpha / (2.0 * s);
            let dc_dgm = (alpha * alpha + 2.0 * alpha * beta) / (2.0 * s);

            let x2 = x * x;
            GSmeluParamGrads {
                alpha: da_dalpha * x2 + db_dalpha * x + dc_dalpha,
                beta: da_dbeta * x2 + db_dbeta * x + dc_dbeta,
                g_minus: da_dgm * x2 + db_dgm * x + dc_dgm,
                g_plus: da_dgp * x2 + db_dgp * x + dc_dgp,
                t: 1.0,
            }
        }
    }
}

/// Lowest representable `ln(-t)`; `t = 0` maps here (`-e^-30 ~ -9.4e-14`).
const MIN_LOG_NEG_T: f64 = -30.0;

/// Unconstrained parameterization of [`GSmeluParams`] used for training:
/// `alpha = e^log_alpha`, `beta = e^log_beta`, `t = -e^log_neg_t`.
///
/// `g_plus > g_minus` is not enforced by the reparameterization; a step that
/// would violate it is rejected by [`LearnableGSmelu::apply_update`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnableGSmelu {
    pub log_alpha: f64,
    pub log_beta: f64,
    pub g_minus: f64,
    pub g_plus: f64,
    pub log_neg_t: f64,
}

impl LearnableGSmelu {
    pub const NUM_PARAMS: usize = 5;

    pub fn from_params(p: &GSmeluParams) -> Self {
        Self {
            log_alpha: p.alpha.ln(),
            log_beta: p.beta.ln(),
            g_minus: p.g_minus,
            g_plus: p.g_plus,
            log_neg_t: if p.t < 0.0 {
                (-p.t).ln().max(MIN_LOG_NEG_T)
            } else {
                MIN_LOG_NEG_T
            },
        }
    }

    pub fn params(&self) -> GSmeluParams {
        GSmeluParams {
            alpha: self.log_alpha.exp(),
            beta: self.log_beta.exp(),
            g_minus: self.g_minus,
            g_plus: self.g_plus,
            t: -self.log_neg_t.exp(),
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.log_alpha,
            self.log_beta,
            self.g_minus,
            self.g_plus,
            self.log_neg_t,
        ]
    }

    pub fn from_array(raw: [f64; 5]) -> Self {
        Self {
            log_alpha: raw[0],
            log_beta: raw[1],
            g_minus: raw[2],
            g_plus: raw[3],
            log_neg_t: raw[4],
        }
    }

    /// Chain rule from natural-parameter partials to raw-parameter partials.
    pub fn raw_grads(&self, natural: &GSmeluParamGrads) -> [f64; 5] {
        let p = self.params();
        [
            natural.alpha * p.alpha,
            natural.beta * p.beta,
            natural.g_minus,
            natural.g_plus,
            natural.t * p.t,
        ]
    }

    /// Replaces the raw parameters if the result still satisfies
    /// `g_plus > g_minus`; otherwise keeps the slopes and updates the rest.
    pub fn apply_update(&mut self, raw: [f64; 5]) {
        let mut next = Self::from_array(raw);
        if next.g_plus <= next.g_minus || !next.g_plus.is_finite() || !next.g_minus.is_finite() {
            next.g_minus = self.g_minus;
            next.g_plus = self.g_plus;
        }
        next.log_neg_t = next.log_neg_t.max(MIN_LOG_NEG_T);
        *self = next;
    }
}
