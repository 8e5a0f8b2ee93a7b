//! Parameter-sweep maps of zero-delay correlation observables.
//!
//! Cells are evaluated from the zero-delay closed forms; every
//! [`CROSSCHECK_STRIDE`]-th cell (row-major index) is recomputed through the
//! regression engine and the largest relative disagreement is recorded.

mod contour;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlators::{
    g2, gn_zero_delay, gn_zero_delay_direct, uniform_grid, DetectorRole, Emitter, MixConfig,
    NormalizationMode, QUENCHED_TAIL_LIMIT,
};
use crate::dynamics::SystemParams;
use crate::error::{Error, Result};

pub use contour::{iso_contour, Polyline};

/// One cell in this many is cross-checked against the regression engine.
pub const CROSSCHECK_STRIDE: usize = 100;
/// Largest tolerated relative closed-form vs regression disagreement.
pub const CROSSCHECK_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    FMix,
    /// Rabi frequency Ω₀ in ns⁻¹.
    Rabi,
    /// Mixing phase φ in radians.
    Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepAxis {
    pub fn new(parameter: SweepParameter, start: f64, stop: f64, points: usize) -> Self {
        SweepAxis {
            parameter,
            start,
            stop,
            points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        uniform_grid(self.start, self.stop, self.points)
    }

    fn validate(&self) -> Result<()> {
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{:?} axis range must be finite",
                self.parameter
            )));
        }
        if self.points < 2 {
            return Err(Error::InvalidParameter(format!(
                "{:?} axis needs at least 2 points, got {}",
                self.parameter, self.points
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "order")]
pub enum Observable {
    /// `g²_cross,co(0)`.
    G2CrossCoZero,
    /// `g²_co,co(0)`.
    G2CoCoZero,
    /// `g⁽ⁿ⁾(0)` with every detector mixed.
    GnZero(u32),
}

impl std::str::FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "crossco" | "cross-co" | "g2-crossco" => Ok(Observable::G2CrossCoZero),
            "coco" | "co-co" | "g2-coco" => Ok(Observable::G2CoCoZero),
            _ => {
                let order = lower
                    .strip_prefix("gn:")
                    .or_else(|| lower.strip_prefix('g'))
                    .and_then(|n| n.parse::<u32>().ok())
                    .filter(|n| *n >= 1);
                order.map(Observable::GnZero).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "unknown observable '{s}' (expected crossco, coco or gn:<n>)"
                    ))
                })
            }
        }
    }
}

/// Sweep over two parameters with every other parameter held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Matrix rows.
    pub rows: SweepAxis,
    /// Matrix columns.
    pub columns: SweepAxis,
    pub params: SystemParams,
    pub mix: MixConfig,
    pub observable: Observable,
}

impl SweepSpec {
    /// Mixing factor `f ∈ [0, 3]` down the rows, `Ω₀ ∈ [0.1π, 4π] ns⁻¹` across the
    /// columns, 61 points each.
    pub fn bunching_control(params: SystemParams, phase: f64) -> Self {
        use std::f64::consts::PI;
        SweepSpec {
            rows: SweepAxis::new(SweepParameter::FMix, 0.0, 3.0, 61),
            columns: SweepAxis::new(SweepParameter::Rabi, 0.1 * PI, 4.0 * PI, 61),
            params,
            mix: MixConfig { f_mix: 0.0, phase },
            observable: Observable::G2CrossCoZero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rows.validate()?;
        self.columns.validate()?;
        if self.rows.parameter == self.columns.parameter {
            return Err(Error::InvalidParameter(
                "sweep axes must vary different parameters".into(),
            ));
        }
        if let Observable::GnZero(0) = self.observable {
            return Err(Error::InvalidParameter(
                "correlation order must be at least 1".into(),
            ));
        }
        self.params.validate()?;
        MixConfig::new(self.mix.f_mix, self.mix.phase)?;
        Ok(())
    }

    fn cell_inputs(&self, row: f64, column: f64) -> Result<(SystemParams, MixConfig)> {
        let mut params = self.params;
        let mut mix = self.mix;
        for (axis, value) in [(self.rows.parameter, row), (self.columns.parameter, column)] {
            match axis {
                SweepParameter::FMix => mix.f_mix = value,
                SweepParameter::Rabi => params.rabi_frequency = value,
                SweepParameter::Phase => mix.phase = value,
            }
        }
        params.validate()?;
        let mix = MixConfig::new(mix.f_mix, mix.phase)?;
        Ok((params, mix))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellValue {
    Value(f64),
    /// Normalization constant below [`QUENCHED_TAIL_LIMIT`].
    Quenched,
}

impl CellValue {
    pub fn as_f64(self) -> f64 {
        match self {
            CellValue::Value(v) => v,
            CellValue::Quenched => f64::NAN,
        }
    }
}

/// Unnormalized value and normalization constant of the observable.
fn closed_form(observable: Observable, emitter: &Emitter, mix: &MixConfig) -> Result<(f64, f64)> {
    let co = emitter.intensity(DetectorRole::Co, mix);
    Ok(match observable {
        // Only the constant |β|²<σ†σ> term survives at zero delay.
        Observable::G2CrossCoZero => (
            emitter.beta(mix).norm_sqr() * emitter.population(),
            emitter.population() * co,
        ),
        Observable::G2CoCoZero => (gn_zero_delay(2, emitter, mix)?, co * co),
        Observable::GnZero(n) => (gn_zero_delay(n, emitter, mix)?, co.powi(n as i32)),
    })
}

fn regression_value(observable: Observable, emitter: &Emitter, mix: &MixConfig) -> Result<f64> {
    use DetectorRole::{Co, Cross};
    let pair = |roles| -> Result<f64> {
        Ok(g2(emitter, mix, roles, &[0.0], NormalizationMode::None)?.raw[0])
    };
    match observable {
        Observable::G2CrossCoZero => pair((Cross, Co)),
        Observable::G2CoCoZero | Observable::GnZero(2) => pair((Co, Co)),
        Observable::GnZero(n) => gn_zero_delay_direct(n, emitter, mix),
    }
}

/// Observable at one `(row, column)` parameter pair.
pub fn evaluate_cell(spec: &SweepSpec, row: f64, column: f64) -> Result<CellValue> {
    let (params, mix) = spec.cell_inputs(row, column)?;
    let emitter = Emitter::new(params)?;
    let (raw, norm) = closed_form(spec.observable, &emitter, &mix)?;
    if norm.is_nan() || norm < QUENCHED_TAIL_LIMIT {
        return Ok(CellValue::Quenched);
    }
    Ok(CellValue::Value(raw / norm))
}

fn cross_check(spec: &SweepSpec, row: f64, column: f64) -> Result<f64> {
    let (params, mix) = spec.cell_inputs(row, column)?;
    let emitter = Emitter::new(params)?;
    let (closed, _) = closed_form(spec.observable, &emitter, &mix)?;
    let direct = regression_value(spec.observable, &emitter, &mix)?;
    let scale = closed.abs().max(direct.abs());
    Ok(if scale == 0.0 {
        0.0
    } else {
        (closed - direct).abs() / scale
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub observable: Observable,
    pub normalization: NormalizationMode,
    pub phase: f64,
    pub quenched_cells: usize,
    pub crosschecked_cells: usize,
    pub max_crosscheck_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub row_parameter: SweepParameter,
    pub column_parameter: SweepParameter,
    pub rows: Vec<f64>,
    pub columns: Vec<f64>,
    /// Row-major; quenched cells hold NaN.
    pub values: Vec<f64>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn value(&self, row: usize, column: usize) -> f64 {
        self.values[row * self.columns.len() + column]
    }

    pub fn column(&self, column: usize) -> Vec<f64> {
        (0..self.rows.len())
            .map(|r| self.value(r, column))
            .collect()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rows = spec.rows.values();
    let columns = spec.columns.values();
    let ncols = columns.len();

    let cells: Vec<CellValue> = (0..rows.len() * ncols)
        .into_par_iter()
        .map(|k| evaluate_cell(spec, rows[k / ncols], columns[k % ncols]))
        .collect::<Result<_>>()?;

    let checked: Vec<(usize, f64)> = (0..cells.len())
        .step_by(CROSSCHECK_STRIDE)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| Ok((k, cross_check(spec, rows[k / ncols], columns[k % ncols])?)))
        .collect::<Result<_>>()?;
    let (worst_cell, worst) =
        checked.iter().copied().fold(
            (0, 0.0_f64),
            |acc, (k, d)| if d > acc.1 { (k, d) } else { acc },
        );
    if worst > CROSSCHECK_TOLERANCE {
        return Err(Error::CrossCheck {
            deviation: worst,
            cell: (worst_cell / ncols, worst_cell % ncols),
        });
    }

    let quenched = cells
        .iter()
        .filter(|c| matches!(c, CellValue::Quenched))
        .count();
    Ok(SweepResult {
        row_parameter: spec.rows.parameter,
        column_parameter: spec.columns.parameter,
        rows,
        columns,
        values: cells.into_iter().map(CellValue::as_f64).collect(),
        metadata: SweepMetadata {
            observable: spec.observable,
            normalization: NormalizationMode::IntensityProduct,
            phase: spec.mix.phase,
            quenched_cells: quenched,
            crosschecked_cells: checked.len(),
            max_crosscheck_deviation: worst,
        },
    })
}
