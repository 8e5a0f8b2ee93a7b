use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outermost fraction of the delay span averaged by tail normalization.
pub const TAIL_FRACTION: f64 = 0.2;

/// Tail windows whose largest value falls below this are treated as quenched.
pub const QUENCHED_TAIL_LIMIT: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    /// Product of the single-detector steady-state intensities.
    #[default]
    IntensityProduct,
    /// Mean of the raw values over the outer delay window.
    Tail,
    None,
}

impl std::str::FromStr for NormalizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "intensity" | "intensity-product" | "product" => Ok(Self::IntensityProduct),
            "tail" => Ok(Self::Tail),
            "none" | "raw" => Ok(Self::None),
            other => Err(Error::InvalidParameter(format!(
                "unknown normalization mode '{other}' (expected intensity-product, tail or none)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mode: NormalizationMode,
    /// `None` when the data is left unnormalized.
    pub constant: Option<f64>,
}

impl Normalization {
    pub fn unnormalized() -> Self {
        Normalization {
            mode: NormalizationMode::None,
            constant: None,
        }
    }

    pub(crate) fn resolve(
        mode: NormalizationMode,
        product: f64,
        tail: impl FnOnce() -> Result<f64>,
    ) -> Result<Self> {
        let constant = match mode {
            NormalizationMode::None => return Ok(Self::unnormalized()),
            NormalizationMode::IntensityProduct => product,
            NormalizationMode::Tail => tail()?,
        };
        if !constant.is_finite() || constant <= 0.0 {
            return Err(Error::ZeroNormalization(format!(
                "{mode:?} normalization constant is {constant:e}"
            )));
        }
        Ok(Normalization {
            mode,
            constant: Some(constant),
        })
    }

    pub fn apply(&self, raw: f64) -> f64 {
        match self.constant {
            Some(c) => raw / c,
            None => raw,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermChannel {
    pub name: String,
    pub raw: Vec<f64>,
}

/// Sampled correlation function with its normalization and optional
/// additive decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    /// Delays in ns.
    pub delays: Vec<f64>,
    pub raw: Vec<f64>,
    pub normalization: Normalization,
    #[serde(default)]
    pub terms: Vec<TermChannel>,
}

impl CorrelationCurve {
    pub fn normalized(&self) -> Vec<f64> {
        self.raw
            .iter()
            .map(|&v| self.normalization.apply(v))
            .collect()
    }

    pub fn term(&self, name: &str) -> Option<&TermChannel> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn term_normalized(&self, name: &str) -> Option<Vec<f64>> {
        self.term(name)
            .map(|t| t.raw.iter().map(|&v| self.normalization.apply(v)).collect())
    }

    /// Normalized value at the grid point closest to `tau`.
    pub fn value_near(&self, tau: f64) -> Option<f64> {
        let idx = self
            .delays
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - tau).abs().total_cmp(&(b.1 - tau).abs()))?
            .0;
        Some(self.normalization.apply(self.raw[idx]))
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }
}

/// Mean of `values` over points whose delay lies in the outer
/// [`TAIL_FRACTION`] of the span.
pub(crate) fn tail_mean(delays: &[f64], values: &[f64]) -> Result<f64> {
    let reach = delays.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let cutoff = (1.0 - TAIL_FRACTION) * reach;
    let window: Vec<f64> = delays
        .iter()
        .zip(values)
        .filter(|(t, _)| t.abs() >= cutoff)
        .map(|(_, v)| *v)
        .collect();
    tail_window_mean(&window)
}

pub(crate) fn tail_window_mean(window: &[f64]) -> Result<f64> {
    let tail_max = window.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if window.is_empty() || tail_max < QUENCHED_TAIL_LIMIT {
        return Err(Error::QuenchedTail { tail_max });
    }
    Ok(window.iter().sum::<f64>() / window.len() as f64)
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
///
/// Each value is `start + (i·span)/(points−1)`, so a grid with `2·points − 1`
/// points reproduces every value of the coarse grid bit for bit.
pub fn uniform_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let span = stop - start;
            let last = (points - 1) as f64;
            (0..points)
                .map(|i| {
                    if i == points - 1 {
                        stop
                    } else {
                        start + (i as f64 * span) / last
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refined_grid_contains_coarse_grid() {
        let coarse = uniform_grid(-5.0, 5.0, 201);
        let fine = uniform_grid(-5.0, 5.0, 401);
        for (i, v) in coarse.iter().enumerate() {
            assert_eq!(fine[2 * i].to_bits(), v.to_bits());
        }
    }

    #[test]
    fn quenched_tail_is_reported() {
        let delays = uniform_grid(-1.0, 1.0, 11);
        let values = vec![1e-16; 11];
        assert!(matches!(
            tail_mean(&delays, &values),
            Err(Error::QuenchedTail { .. })
        ));
        let values = vec![2.0; 11];
        assert_eq!(tail_mean(&delays, &values).unwrap(), 2.0);
    }

    #[test]
    fn zero_product_normalization_is_an_error() {
        let r = Normalization::resolve(NormalizationMode::IntensityProduct, 0.0, || Ok(1.0));
        assert!(matches!(r, Err(Error::ZeroNormalization(_))));
        let r = Normalization::resolve(NormalizationMode::None, 0.0, || unreachable!());
        assert_eq!(r.unwrap().constant, None);
    }

    #[test]
    fn parses_modes() {
        assert_eq!(
            "tail".parse::<NormalizationMode>().unwrap(),
            NormalizationMode::Tail
        );
        assert_eq!(
            "intensity-product".parse::<NormalizationMode>().unwrap(),
            NormalizationMode::IntensityProduct
        );
        assert!("bogus".parse::<NormalizationMode>().is_err());
    }
}
