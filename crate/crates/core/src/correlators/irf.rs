use super::curve::{CorrelationCurve, TermChannel};
use crate::error::{Error, Result};

/// Relative tolerance on grid spacing for the uniformity check.
const UNIFORM_TOLERANCE: f64 = 1e-9;

/// Kernel half-width in standard deviations.
const KERNEL_SIGMAS: f64 = 8.0;

/// Sampled Gaussian of full width at half maximum `fwhm` on a grid of step
/// `step` (same units), normalized to unit sum and centered on the middle
/// element.
pub fn gaussian_kernel(fwhm: f64, step: f64) -> Vec<f64> {
    let sigma = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let half = (KERNEL_SIGMAS * sigma / step).ceil() as usize;
    let mut kernel: Vec<f64> = (0..=2 * half)
        .map(|k| {
            let x = (k as f64 - half as f64) * step;
            (-0.5 * (x / sigma).powi(2)).exp()
        })
        .collect();
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|v| *v /= sum);
    kernel
}

fn grid_step(delays: &[f64]) -> Result<f64> {
    if delays.len() < 2 {
        return Err(Error::InvalidParameter(
            "convolution needs at least two delays".into(),
        ));
    }
    let first = delays[1] - delays[0];
    if first.is_nan() || first <= 0.0 {
        return Err(Error::NonUniformGrid {
            first,
            offending: first,
            index: 0,
        });
    }
    for (index, w) in delays.windows(2).enumerate() {
        let step = w[1] - w[0];
        if (step - first).abs() > UNIFORM_TOLERANCE * first {
            return Err(Error::NonUniformGrid {
                first,
                offending: step,
                index,
            });
        }
    }
    Ok(first)
}

/// Kernel-weighted average; near the grid edges the kernel is truncated and
/// renormalized over the available samples so constants are preserved.
fn convolve(values: &[f64], kernel: &[f64]) -> Vec<f64> {
    let half = (kernel.len() / 2) as isize;
    let n = values.len() as isize;
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            let mut weight = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let j = i + k as isize - half;
                if (0..n).contains(&j) {
                    acc += w * values[j as usize];
                    weight += w;
                }
            }
            acc / weight
        })
        .collect()
}

/// Convolves raw values and every term channel with a Gaussian instrument
/// response of the given FWHM in ps. Delays stay in ns.
pub fn irf_convolve(curve: &CorrelationCurve, fwhm_ps: f64) -> Result<CorrelationCurve> {
    if !fwhm_ps.is_finite() || fwhm_ps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "IRF width must be positive, got {fwhm_ps} ps"
        )));
    }
    let step = grid_step(&curve.delays)?;
    let kernel = gaussian_kernel(fwhm_ps * 1e-3, step);
    Ok(CorrelationCurve {
        delays: curve.delays.clone(),
        raw: convolve(&curve.raw, &kernel),
        normalization: curve.normalization,
        terms: curve
            .terms
            .iter()
            .map(|t| TermChannel {
                name: t.name.clone(),
                raw: convolve(&t.raw, &kernel),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlators::{uniform_grid, Normalization};

    fn curve(delays: Vec<f64>, raw: Vec<f64>) -> CorrelationCurve {
        CorrelationCurve {
            delays,
            raw,
            normalization: Normalization::unnormalized(),
            terms: Vec::new(),
        }
    }

    #[test]
    fn constant_is_a_fixed_point() {
        let d = uniform_grid(-5.0, 5.0, 2001);
        let c = curve(d.clone(), vec![1.7; d.len()]);
        let out = irf_convolve(&c, 250.0).unwrap();
        assert!(out.raw.iter().all(|v| (v - 1.7).abs() < 1e-12));
    }

    #[test]
    fn impulse_becomes_gaussian_with_stated_width() {
        let d = uniform_grid(-2.0, 2.0, 4001);
        let mut raw = vec![0.0; d.len()];
        raw[2000] = 1.0;
        let out = irf_convolve(&curve(d.clone(), raw), 250.0).unwrap();
        let peak = out.raw[2000];
        let above: Vec<f64> = d
            .iter()
            .zip(&out.raw)
            .filter(|(_, v)| **v >= 0.5 * peak)
            .map(|(t, _)| *t)
            .collect();
        let width = above.last().unwrap() - above.first().unwrap();
        assert!((width - 0.25).abs() <= 0.002, "width {width}");
        assert!((out.raw.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let c = curve(vec![0.0, 0.1, 0.3], vec![1.0; 3]);
        assert!(matches!(
            irf_convolve(&c, 250.0),
            Err(Error::NonUniformGrid { .. })
        ));
        let c = curve(vec![0.0, 0.1, 0.2], vec![1.0; 3]);
        assert!(irf_convolve(&c, 0.0).is_err());
    }
}
