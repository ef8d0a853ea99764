//! Flat text form of activation specs, e.g. `smelu:beta=1`,
//! `gsmelu:alpha=1,beta=1,gm=0,gp=1,t=0` or
//! `rescu:knots=(-1,0);(1,1);anchor=(-1,0)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{build_rescu, ActivationSpec, GSmeluParams, GeluPath};
use crate::error::{Error, Result};

impl fmt::Display for ActivationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationSpec::Identity => write!(f, "identity"),
            ActivationSpec::Relu => write!(f, "relu"),
            ActivationSpec::Smelu { beta } => write!(f, "smelu:beta={beta}"),
            ActivationSpec::Softplus { beta } => write!(f, "softplus:beta={beta}"),
            ActivationSpec::Swish { beta } => write!(f, "swish:beta={beta}"),
            ActivationSpec::Gelu { beta, path } => match path {
                GeluPath::SwishApprox => write!(f, "gelu:beta={beta}"),
                GeluPath::Exact => write!(f, "gelu:beta={beta},exact=true"),
            },
            ActivationSpec::GSmelu(p) => write!(
                f,
                "gsmelu:alpha={},beta={},gm={},gp={},t={}",
                p.alpha(),
                p.beta(),
                p.g_minus(),
                p.g_plus(),
                p.t()
            ),
            ActivationSpec::Rescu(r) => {
                write!(f, "rescu:knots=")?;
                for (i, (x, s)) in r.knots().iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "({x},{s})")?;
                }
                let (ax, ay) = r.anchor();
                write!(f, ";anchor=({ax},{ay})")
            }
        }
    }
}

fn bad(text: &str, why: impl fmt::Display) -> Error {
    Error::InvalidSpec(format!("cannot parse activation '{text}': {why}"))
}

fn parse_num(text: &str, field: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|e| bad(text, format!("{field}: {e}")))
}

fn key_values<'a>(text: &str, body: &'a str) -> Result<BTreeMap<&'a str, &'a str>> {
    let mut out = BTreeMap::new();
    for part in body.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| bad(text, format!("expected key=value, got '{part}'")))?;
        if out.insert(k.trim(), v.trim()).is_some() {
            return Err(bad(text, format!("duplicate key '{}'", k.trim())));
        }
    }
    Ok(out)
}

fn parse_pair(text: &str, raw: &str) -> Result<(f64, f64)> {
    let inner = raw
        .trim()
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| bad(text, format!("expected (x,y), got '{raw}'")))?;
    let (a, b) = inner
        .split_once(',')
        .ok_or_else(|| bad(text, format!("expected (x,y), got '{raw}'")))?;
    Ok((parse_num(text, "x", a)?, parse_num(text, "y", b)?))
}

fn parse_rescu(text: &str, body: &str) -> Result<ActivationSpec> {
    let mut knots = Vec::new();
    let mut anchor = None;
    for (i, part) in body.split(';').enumerate() {
        let part = part.trim();
        if let Some(rest) = part.strip_prefix("anchor=") {
            anchor = Some(parse_pair(text, rest)?);
        } else if i == 0 {
            let rest = part
                .strip_prefix("knots=")
                .ok_or_else(|| bad(text, "rescu must start with knots="))?;
            knots.push(parse_pair(text, rest)?);
        } else {
            knots.push(parse_pair(text, part)?);
        }
    }
    let anchor = anchor.ok_or_else(|| bad(text, "rescu needs anchor=(x,y)"))?;
    Ok(ActivationSpec::Rescu(build_rescu(&knots, anchor)?))
}

impl FromStr for ActivationSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        let (name, body) = trimmed.split_once(':').unwrap_or((trimmed, ""));
        let name = name.trim().to_ascii_lowercase();
        if name == "rescu" {
            return parse_rescu(text, body);
        }
        let kv = key_values(text, body)?;
        let get = |key: &str| -> Result<f64> {
            let raw = kv
                .get(key)
                .ok_or_else(|| bad(text, format!("missing '{key}'")))?;
            parse_num(text, key, raw)
        };
        let allow = |keys: &[&str]| -> Result<()> {
            match kv.keys().find(|k| !keys.contains(k)) {
                Some(k) => Err(bad(text, format!("unknown key '{k}'"))),
                None => Ok(()),
            }
        };
        match name.as_str() {
            "relu" => allow(&[]).map(|_| ActivationSpec::Relu),
            "identity" | "linear" => allow(&[]).map(|_| ActivationSpec::Identity),
            "smelu" => {
                allow(&["beta"])?;
                ActivationSpec::smelu(get("beta")?)
            }
            "softplus" => {
                allow(&["beta"])?;
                ActivationSpec::softplus(get("beta")?)
            }
            "swish" => {
                allow(&["beta"])?;
                ActivationSpec::swish(get("beta")?)
            }
            "gelu" => {
                allow(&["beta", "exact"])?;
                let exact = match kv.get("exact").copied() {
                    None | Some("false") => false,
                    Some("true") => true,
                    Some(other) => return Err(bad(text, format!("exact={other}"))),
                };
                if exact {
                    ActivationSpec::gelu_exact(get("beta")?)
                } else {
                    ActivationSpec::gelu(get("beta")?)
                }
            }
            "gsmelu" => {
                allow(&["alpha", "beta", "gm", "gp", "t"])?;
                GSmeluParams::new(get("alpha")?, get("beta")?, get("gm")?, get("gp")?, get("t")?)
                    .map(ActivationSpec::GSmelu)
            }
            other => Err(bad(text, format!("unknown activation '{other}'"))),
        }
    }
}
