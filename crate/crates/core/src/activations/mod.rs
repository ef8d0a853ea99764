//! Closed-form activations and their derivatives.
//!
//! Every activation returns its value together with `dy/dx`, so forward and
//! backward passes share one evaluation. SmeLU and its generalizations are
//! piecewise polynomials with exact stop (`y = 0`) and identity (`y = x`)
//! regions; Softplus, Swish and GELU are the exponential-family baselines.

mod gsmelu;
mod rescu;
mod text;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use gsmelu::{GSmeluParamGrads, GSmeluParams, LearnableGSmelu, QuadCoeffs};
pub use rescu::{build_rescu, RescuSegment, RescuSpec};

/// Past this `|beta * x|` Softplus and Swish return their asymptotes.
const EXP_CUTOFF: f64 = 30.0;

/// The discriminant of an [`ActivationSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActivationKind {
    Relu,
    Smelu,
    GSmelu,
    Rescu,
    Softplus,
    Swish,
    Gelu,
    Identity,
}

impl ActivationKind {
    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Smelu => "smelu",
            ActivationKind::GSmelu => "gsmelu",
            ActivationKind::Rescu => "rescu",
            ActivationKind::Softplus => "softplus",
            ActivationKind::Swish => "swish",
            ActivationKind::Gelu => "gelu",
            ActivationKind::Identity => "identity",
        }
    }

    /// Whether the kind is parameterized by a single `beta`.
    pub fn uses_beta(self) -> bool {
        matches!(
            self,
            ActivationKind::Smelu
                | ActivationKind::Softplus
                | ActivationKind::Swish
                | ActivationKind::Gelu
        )
    }
}

/// How GELU is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GeluPath {
    /// `x * sigmoid(sqrt(8/pi) * beta * x)`.
    #[default]
    SwishApprox,
    /// `x * Phi(beta * x)` through the error function.
    Exact,
}

/// A fully parameterized activation.
///
/// Build through the checked constructors or [`str::parse`]; `eval` assumes
/// the parameters are valid.
#[derive(Debug, Clone, PartialEq)]
pub enum ActivationSpec {
    Identity,
    Relu,
    /// Half-width `beta` of the quadratic transition around zero.
    Smelu { beta: f64 },
    Softplus { beta: f64 },
    Swish { beta: f64 },
    Gelu { beta: f64, path: GeluPath },
    GSmelu(GSmeluParams),
    Rescu(RescuSpec),
}

fn check_beta(beta: f64) -> Result<f64> {
    if beta.is_finite() && beta > 0.0 {
        Ok(beta)
    } else {
        Err(Error::InvalidSpec(format!("beta must be positive and finite, got {beta}")))
    }
}

impl ActivationSpec {
    pub fn smelu(beta: f64) -> Result<Self> {
        check_beta(beta).map(|beta| ActivationSpec::Smelu { beta })
    }

    pub fn softplus(beta: f64) -> Result<Self> {
        check_beta(beta).map(|beta| ActivationSpec::Softplus { beta })
    }

    pub fn swish(beta: f64) -> Result<Self> {
        check_beta(beta).map(|beta| ActivationSpec::Swish { beta })
    }

    pub fn gelu(beta: f64) -> Result<Self> {
        check_beta(beta).map(|beta| ActivationSpec::Gelu {
            beta,
            path: GeluPath::SwishApprox,
        })
    }

    pub fn gelu_exact(beta: f64) -> Result<Self> {
        check_beta(beta).map(|beta| ActivationSpec::Gelu {
            beta,
            path: GeluPath::Exact,
        })
    }

    /// Builds a beta-parameterized activation of the given kind.
    pub fn with_beta(kind: ActivationKind, beta: f64) -> Result<Self> {
        match kind {
            ActivationKind::Smelu => Self::smelu(beta),
            ActivationKind::Softplus => Self::softplus(beta),
            ActivationKind::Swish => Self::swish(beta),
            ActivationKind::Gelu => Self::gelu(beta),
            other => Err(Error::InvalidSpec(format!(
                "{} is not parameterized by beta",
                other.name()
            ))),
        }
    }

    pub fn kind(&self) -> ActivationKind {
        match self {
            ActivationSpec::Identity => ActivationKind::Identity,
            ActivationSpec::Relu => ActivationKind::Relu,
            ActivationSpec::Smelu { .. } => ActivationKind::Smelu,
            ActivationSpec::Softplus { .. } => ActivationKind::Softplus,
            ActivationSpec::Swish { .. } => ActivationKind::Swish,
            ActivationSpec::Gelu { .. } => ActivationKind::Gelu,
            ActivationSpec::GSmelu(_) => ActivationKind::GSmelu,
            ActivationSpec::Rescu(_) => ActivationKind::Rescu,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match *self {
            ActivationSpec::Smelu { beta }
            | ActivationSpec::Softplus { beta }
            | ActivationSpec::Swish { beta }
            | ActivationSpec::Gelu { beta, .. } => Some(beta),
            ActivationSpec::GSmelu(p) => Some(p.beta()),
            _ => None,
        }
    }

    /// Same activation with `beta` multiplied by `factor`; kinds without a
    /// single beta are returned unchanged.
    pub fn scale_beta(&self, factor: f64) -> Result<Self> {
        match *self {
            ActivationSpec::Smelu { beta } => Self::smelu(beta * factor),
            ActivationSpec::Softplus { beta } => Self::softplus(beta * factor),
            ActivationSpec::Swish { beta } => Self::swish(beta * factor),
            ActivationSpec::Gelu { beta, path } => {
                check_beta(beta * factor).map(|beta| ActivationSpec::Gelu { beta, path })
            }
            _ => Ok(self.clone()),
        }
    }

    /// Re-checks the parameter invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            ActivationSpec::Identity | ActivationSpec::Relu => Ok(()),
            ActivationSpec::Smelu { beta }
            | ActivationSpec::Softplus { beta }
            | ActivationSpec::Swish { beta }
            | ActivationSpec::Gelu { beta, .. } => check_beta(*beta).map(|_| ()),
            ActivationSpec::GSmelu(p) => {
                GSmeluParams::new(p.alpha(), p.beta(), p.g_minus(), p.g_plus(), p.t()).map(|_| ())
            }
            ActivationSpec::Rescu(r) => build_rescu(r.knots(), r.anchor()).map(|_| ()),
        }
    }

    /// Knot locations where the piecewise kinds switch segments.
    pub fn knots(&self) -> Vec<f64> {
        match self {
            ActivationSpec::Relu => vec![0.0],
            ActivationSpec::Smelu { beta } => vec![-beta, *beta],
            ActivationSpec::GSmelu(p) => vec![-p.alpha(), p.beta()],
            ActivationSpec::Rescu(r) => r.knots().iter().map(|k| k.0).collect(),
            _ => Vec::new(),
        }
    }

    /// Value and derivative at `x`, rejecting non-finite input.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!("activation input {x} is not finite")));
        }
        Ok(self.apply(x))
    }

    /// Value and derivative at `x` without input checks.
    #[inline]
    pub fn apply(&self, x: f64) -> (f64, f64) {
        match *self {
            ActivationSpec::Identity => (x, 1.0),
            ActivationSpec::Relu => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            ActivationSpec::Smelu { beta } => smelu(x, beta),
            ActivationSpec::Softplus { beta } => softplus(x, beta),
            ActivationSpec::Swish { beta } => swish(x, beta),
            ActivationSpec::Gelu { beta, path } => match path {
                GeluPath::SwishApprox => swish(x, (8.0 / PI).sqrt() * beta),
                GeluPath::Exact => gelu_exact(x, beta),
            },
            ActivationSpec::GSmelu(ref p) => p.eval(x),
            ActivationSpec::Rescu(ref r) => r.eval(x),
        }
    }
}

#[inline]
fn smelu(x: f64, beta: f64) -> (f64, f64) {
    if x <= -beta {
        (0.0, 0.0)
    } else if x >= beta {
        (x, 1.0)
    } else {
        let shifted = x + beta;
        (shifted * shifted / (4.0 * beta), shifted / (2.0 * beta))
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64, beta: f64) -> (f64, f64) {
    let z = beta * x;
    if z > EXP_CUTOFF {
        (x, 1.0)
    } else if z < -EXP_CUTOFF {
        (0.0, 0.0)
    } else {
        (z.exp().ln_1p() / beta, sigmoid(z))
    }
}

fn swish(x: f64, beta: f64) -> (f64, f64) {
    let z = beta * x;
    if z > EXP_CUTOFF {
        (x, 1.0)
    } else if z < -EXP_CUTOFF {
        (0.0, 0.0)
    } else {
        let s = sigmoid(z);
        (x * s, s + z * s * (1.0 - s))
    }
}

fn gelu_exact(x: f64, beta: f64) -> (f64, f64) {
    let z = beta * x;
    let cdf = 0.5 * (1.0 + libm::erf(z * FRAC_1_SQRT_2));
    let pdf = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    (x * cdf, cdf + z * pdf)
}

/// Trapezoid-rule evaluation of ReLU convolved with the unit-mass box on
/// `[-beta, beta]`; a numerical reference for SmeLU.
pub fn smelu_convolution_oracle(x: f64, beta: f64, n_steps: usize) -> f64 {
    let n = n_steps.max(100);
    let h = 2.0 * beta / n as f64;
    let density = 1.0 / (2.0 * beta);
    let integrand = |u: f64| (x - u).max(0.0) * density;
    let interior: f64 = (1..n).map(|i| integrand(-beta + h * i as f64)).sum();
    h * (0.5 * (integrand(-beta) + integrand(beta)) + interior)
}

impl Serialize for ActivationSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ActivationSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
