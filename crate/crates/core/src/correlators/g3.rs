use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curve::{self, Normalization, NormalizationMode, TAIL_FRACTION};
use super::{qrt_sandwich, DetectorRole, Emitter, MixConfig};
use crate::dynamics::ops::Op2;
use crate::dynamics::DensityMatrix;
use crate::error::{Error, Result};

/// Third-order correlation over `(τ₁₂, τ₁₃)`: detector 1 clicks at `t`,
/// detector 2 at `t + τ₁₂`, detector 3 at `t + τ₁₃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMap3 {
    pub roles: [DetectorRole; 3],
    pub tau12: Vec<f64>,
    pub tau13: Vec<f64>,
    /// Row-major over `tau12` (rows) and `tau13` (columns).
    pub raw: Vec<f64>,
    pub normalization: Normalization,
}

impl CorrelationMap3 {
    pub fn raw_at(&self, i12: usize, i13: usize) -> f64 {
        self.raw[i12 * self.tau13.len() + i13]
    }

    pub fn value(&self, i12: usize, i13: usize) -> f64 {
        self.normalization.apply(self.raw_at(i12, i13))
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.raw
            .iter()
            .map(|&v| self.normalization.apply(v))
            .collect()
    }
}

/// Ordered regression chain for three clicks; ties commute because every
/// role operator is `σ` plus a multiple of the identity.
fn ordered_g3(emitter: &Emitter, ops: &[Op2; 3], times: [f64; 3]) -> Result<f64> {
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let [i0, i1, i2] = order;
    let prop = emitter.propagator();

    let first = qrt_sandwich(emitter.steady_state(), &ops[i0].adjoint(), &ops[i0]);
    let moved = prop.evolve(times[i1] - times[i0], &first)?;
    let second = qrt_sandwich(&moved, &ops[i1].adjoint(), &ops[i1]);
    let observable = ops[i2].adjoint() * ops[i2];
    let value = prop.trace_at(
        &observable,
        &DensityMatrix::unnormalized(second.elements),
        times[i2] - times[i1],
    )?;
    Ok(value.re)
}

pub fn g3_map(
    emitter: &Emitter,
    mix: &MixConfig,
    roles: [DetectorRole; 3],
    tau12: &[f64],
    tau13: &[f64],
    mode: NormalizationMode,
) -> Result<CorrelationMap3> {
    if tau12.iter().chain(tau13).any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("delay grid must be finite".into()));
    }
    let ops = roles.map(|r| emitter.role_operator(r, mix));
    let rows: Vec<Vec<f64>> = tau12
        .par_iter()
        .map(|&a| {
            tau13
                .iter()
                .map(|&b| ordered_g3(emitter, &ops, [0.0, a, b]))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let raw: Vec<f64> = rows.into_iter().flatten().collect();

    let product: f64 = roles.iter().map(|&r| emitter.intensity(r, mix)).product();
    let normalization = Normalization::resolve(mode, product, || {
        let reach = tau12
            .iter()
            .chain(tau13)
            .fold(0.0_f64, |m, t| m.max(t.abs()));
        let cutoff = (1.0 - TAIL_FRACTION) * reach;
        let mut window = Vec::new();
        for (i, a) in tau12.iter().enumerate() {
            for (j, b) in tau13.iter().enumerate() {
                if a.abs() >= cutoff && b.abs() >= cutoff && (b - a).abs() >= cutoff {
                    window.push(raw[i * tau13.len() + j]);
                }
            }
        }
        curve::tail_window_mean(&window)
    })?;

    Ok(CorrelationMap3 {
        roles,
        tau12: tau12.to_vec(),
        tau13: tau13.to_vec(),
        raw,
        normalization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlators::{g2, uniform_grid};
    use crate::dynamics::SystemParams;
    use std::f64::consts::PI;

    use DetectorRole::{Co, Cross};

    fn emitter(rabi: f64) -> Emitter {
        Emitter::new(SystemParams::new(rabi, 0.45).unwrap()).unwrap()
    }

    #[test]
    fn pure_fluorescence_vanishes_on_axes_and_diagonal() {
        let em = emitter(0.56 * PI);
        let grid = uniform_grid(-3.0, 3.0, 31);
        let map = g3_map(
            &em,
            &MixConfig::none(),
            [Cross; 3],
            &grid,
            &grid,
            NormalizationMode::IntensityProduct,
        )
        .unwrap();
        let zero = 15;
        for i in 0..grid.len() {
            assert!(map.value(i, zero).abs() < 1e-10);
            assert!(map.value(zero, i).abs() < 1e-10);
            assert!(map.value(i, i).abs() < 1e-10);
        }
    }

    #[test]
    fn single_far_click_reduces_to_g2() {
        // With the third click far away the map factorizes into g² × 1.
        let em = emitter(0.9);
        let mix = MixConfig::new(0.7, 1.1).unwrap();
        let taus = uniform_grid(0.0, 2.0, 11);
        let far = [40.0];
        let map = g3_map(
            &em,
            &mix,
            [Cross, Co, Co],
            &taus,
            &far,
            NormalizationMode::IntensityProduct,
        )
        .unwrap();
        let pair = g2(
            &em,
            &mix,
            (Cross, Co),
            &taus,
            NormalizationMode::IntensityProduct,
        )
        .unwrap();
        for (i, v) in pair.normalized().iter().enumerate() {
            assert!((map.value(i, 0) - v).abs() < 1e-9);
        }
    }

    #[test]
    fn symmetric_under_exchange_of_equal_roles() {
        let em = emitter(1.7);
        let mix = MixConfig::new(1.0, PI).unwrap();
        let grid = uniform_grid(-2.0, 2.0, 21);
        let map = g3_map(
            &em,
            &mix,
            [Cross, Co, Co],
            &grid,
            &grid,
            NormalizationMode::None,
        )
        .unwrap();
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                assert!((map.raw_at(i, j) - map.raw_at(j, i)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn far_corner_is_unity() {
        let em = emitter(0.56 * PI);
        let mix = MixConfig::new(1.0, PI).unwrap();
        let map = g3_map(
            &em,
            &mix,
            [Cross, Co, Co],
            &[30.0],
            &[-30.0],
            NormalizationMode::IntensityProduct,
        )
        .unwrap();
        assert!((map.value(0, 0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn low_drive_mixed_diagonal_exceeds_plateau_everywhere() {
        let em = emitter(0.1 * PI);
        let mix = MixConfig::new(1.0, PI).unwrap();
        let grid = uniform_grid(-5.0, 5.0, 41);
        let map = g3_map(
            &em,
            &mix,
            [Cross, Co, Co],
            &grid,
            &grid,
            NormalizationMode::IntensityProduct,
        )
        .unwrap();
        let plateau = map.value(0, 40);
        for i in 0..grid.len() {
            assert!(map.value(i, i) > plateau);
        }
    }

    #[test]
    fn tail_normalization_on_wide_grid() {
        let em = emitter(0.56 * PI);
        let grid = uniform_grid(-15.0, 15.0, 31);
        let map = g3_map(
            &em,
            &MixConfig::none(),
            [Cross; 3],
            &grid,
            &grid,
            NormalizationMode::Tail,
        )
        .unwrap();
        let product = em.intensity(Cross, &MixConfig::none()).powi(3);
        assert!((map.normalization.constant.unwrap() / product - 1.0).abs() < 1e-6);
    }
}
