//! Unit-bearing flag values. Every quantity needs an explicit unit; the only
//! bare number accepted is zero, which means the same thing in every unit.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

fn number(text: &str, what: &str) -> Result<f64, String> {
    let value: f64 = text
        .parse()
        .map_err(|_| format!("cannot read '{text}' as a number in {what}"))?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("{what} must be finite"))
    }
}

fn is_zero(text: &str) -> bool {
    text.parse::<f64>().is_ok_and(|v| v == 0.0)
}

fn normalize(text: &str) -> String {
    text.trim()
        .to_ascii_lowercase()
        .replace('π', "pi")
        .replace('µ', "u")
        .replace("⁻¹", "^-1")
        .replace([' ', '*'], "")
}

/// Splits `"<number><suffix>"` for the first suffix in `units` that matches.
fn split_unit<'a>(text: &'a str, units: &[(&str, f64)]) -> Option<(&'a str, f64)> {
    units
        .iter()
        .find_map(|(suffix, scale)| text.strip_suffix(suffix).map(|head| (head, *scale)))
}

/// A duration, stored in ns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Time(pub f64);

const TIME_UNITS: [(&str, f64); 5] = [
    ("ps", 1e-3),
    ("ns", 1.0),
    ("us", 1e3),
    ("ms", 1e6),
    ("s", 1e9),
];

impl Time {
    pub fn ns(self) -> f64 {
        self.0
    }

    pub fn ps(self) -> f64 {
        self.0 * 1e3
    }

    /// Whole picoseconds; fails on fractional values.
    pub fn whole_ps(self) -> Result<u64, String> {
        let ps = self.ps();
        let rounded = ps.round();
        if rounded < 0.0
            || (ps - rounded).abs() > 1e-6 * rounded.max(1.0)
            || rounded > u64::MAX as f64
        {
            return Err(format!(
                "{self} is not a whole, non-negative number of picoseconds"
            ));
        }
        Ok(rounded as u64)
    }
}

impl FromStr for Time {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let text = normalize(s);
        if is_zero(&text) {
            return Ok(Time(0.0));
        }
        match split_unit(&text, &TIME_UNITS) {
            Some((head, scale)) if !head.is_empty() => Ok(Time(number(head, "a time")? * scale)),
            _ => Err(format!("time '{s}' needs a unit (ps, ns, us, ms, s)")),
        }
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ns", self.0)
    }
}

/// An angular frequency or rate, stored in ns⁻¹.
///
/// `0.56pi` is shorthand for `0.56π ns⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate(pub f64);

const RATE_UNITS: [(&str, f64); 8] = [
    ("/ns", 1.0),
    ("ns^-1", 1.0),
    ("/ps", 1e3),
    ("ps^-1", 1e3),
    ("/us", 1e-3),
    ("us^-1", 1e-3),
    ("/s", 1e-9),
    ("s^-1", 1e-9),
];

impl FromStr for Rate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let text = normalize(s);
        if is_zero(&text) {
            return Ok(Rate(0.0));
        }
        let (head, scale, explicit) = match split_unit(&text, &RATE_UNITS) {
            Some((head, scale)) => (head, scale, true),
            None => (text.as_str(), 1.0, false),
        };
        let (head, pi) = match head.strip_suffix("pi") {
            Some(rest) => (rest, true),
            None => (head, false),
        };
        if !explicit && !pi {
            return Err(format!(
                "rate '{s}' needs a unit (e.g. 0.56pi, 1.2/ns, 3ns^-1)"
            ));
        }
        let head = head.trim_end_matches('*');
        let value = if head.is_empty() && pi {
            1.0
        } else {
            number(head, "a rate")?
        };
        Ok(Rate(value * if pi { PI } else { 1.0 } * scale))
    }
}

/// A phase, stored in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

impl FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let text = normalize(s);
        if is_zero(&text) {
            return Ok(Angle(0.0));
        }
        if let Some(head) = text.strip_suffix("pi") {
            let value = if head.is_empty() {
                1.0
            } else {
                number(head, "a phase")?
            };
            return Ok(Angle(value * PI));
        }
        if let Some(head) = text.strip_suffix("deg") {
            return Ok(Angle(number(head, "a phase")?.to_radians()));
        }
        if let Some(head) = text.strip_suffix("rad") {
            return Ok(Angle(number(head, "a phase")?));
        }
        Err(format!("phase '{s}' needs a unit (pi, rad, deg)"))
    }
}
