use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bandwidth as a function of the sample length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BandwidthRule {
    /// `b = c · T^{−e}`.
    Power { c: f64, exponent: f64 },
    /// `b` independent of `T`.
    Fixed(f64),
}

impl BandwidthRule {
    /// `T^{−1/3}`, the rate balancing squared bias and variance.
    pub const CUBE_ROOT: BandwidthRule = BandwidthRule::Power { c: 1.0, exponent: 1.0 / 3.0 };

    pub fn power(c: f64, exponent: f64) -> Self {
        BandwidthRule::Power { c, exponent }
    }

    /// `1/T`: every lag gets the same weight under the truncated window.
    pub fn inverse_t() -> Self {
        BandwidthRule::Power { c: 1.0, exponent: 1.0 }
    }

    /// Bandwidth at length `t_len`, clamped to `(0, 1]`.
    pub fn at(&self, t_len: usize) -> f64 {
        let b = match *self {
            BandwidthRule::Power { c, exponent } => c * (t_len as f64).powf(-exponent),
            BandwidthRule::Fixed(b) => b,
        };
        b.min(1.0)
    }
}

fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        return Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?);
    }
    s.parse().ok()
}

impl FromStr for BandwidthRule {
    type Err = Error;

    /// Accepts `0.2`, `1/T`, `T^-1/3`, `0.5*T^-0.4`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse bandwidth rule '{s}'"));
        let t = s.trim().replace(' ', "");
        let rule = if t.eq_ignore_ascii_case("1/T") {
            BandwidthRule::inverse_t()
        } else if let Some(pos) = t.find("T^") {
            let c = match t[..pos].trim_end_matches('*') {
                "" => 1.0,
                pre => parse_number(pre).ok_or_else(bad)?,
            };
            let e = t[pos + 2..].strip_prefix('-').ok_or_else(bad)?;
            let e = e.trim_start_matches('(').trim_end_matches(')');
            BandwidthRule::Power { c, exponent: parse_number(e).ok_or_else(bad)? }
        } else {
            BandwidthRule::Fixed(parse_number(&t).ok_or_else(bad)?)
        };
        let ok = match rule {
            BandwidthRule::Power { c, exponent } => c > 0.0 && c.is_finite() && exponent >= 0.0 && exponent.is_finite(),
            BandwidthRule::Fixed(b) => b > 0.0 && b <= 1.0,
        };
        if ok {
            Ok(rule)
        } else {
            Err(bad())
        }
    }
}

impl fmt::Display for BandwidthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BandwidthRule::Power { c, exponent } if c == 1.0 => write!(f, "T^-{exponent}"),
            BandwidthRule::Power { c, exponent } => write!(f, "{c}*T^-{exponent}"),
            BandwidthRule::Fixed(b) => write!(f, "{b}"),
        }
    }
}

impl Serialize for BandwidthRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BandwidthRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!("T^-1/3".parse::<BandwidthRule>().unwrap(), BandwidthRule::CUBE_ROOT);
        assert_eq!("0.5*T^-0.4".parse::<BandwidthRule>().unwrap(), BandwidthRule::power(0.5, 0.4));
        assert_eq!("1/T".parse::<BandwidthRule>().unwrap(), BandwidthRule::inverse_t());
        assert_eq!("0.25".parse::<BandwidthRule>().unwrap(), BandwidthRule::Fixed(0.25));
        assert!("2".parse::<BandwidthRule>().is_err());
        assert!("T^3".parse::<BandwidthRule>().is_err());
    }

    #[test]
    fn values_and_round_trip() {
        assert!((BandwidthRule::CUBE_ROOT.at(512) - 0.125).abs() < 1e-15);
        assert_eq!(BandwidthRule::inverse_t().at(64), 1.0 / 64.0);
        for r in [BandwidthRule::power(0.5, 0.4), BandwidthRule::Fixed(0.3), BandwidthRule::inverse_t()] {
            assert_eq!(r.to_string().parse::<BandwidthRule>().unwrap(), r);
        }
    }
}
