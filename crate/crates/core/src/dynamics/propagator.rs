use nalgebra::{Matrix4, Vector4};

use super::ops::{trace_row, Mat4, Op2, Vec4, C64};
use super::{DensityMatrix, Superoperator};
use crate::error::{Error, Result};

/// Eigenbases with a condition number above this fall back to Padé
/// scaling-and-squaring.
pub const SPECTRAL_CONDITION_LIMIT: f64 = 1e8;

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
enum Method {
    /// `L = V diag(λ) V⁻¹`.
    Spectral {
        rates: Vector4<C64>,
        modes: Mat4,
        inverse: Mat4,
    },
    Dense,
}

/// `e^{Lτ}` for a fixed generator, with the eigenbasis cached so that a
/// delay grid costs one decomposition plus diagonal exponentials.
#[derive(Debug, Clone)]
pub struct Propagator {
    generator: Superoperator,
    method: Method,
}

impl Propagator {
    pub fn new(generator: &Superoperator) -> Self {
        let method = match spectral_decomposition(&generator.matrix) {
            Some((rates, modes, inverse)) => Method::Spectral {
                rates,
                modes,
                inverse,
            },
            None => Method::Dense,
        };
        Propagator {
            generator: *generator,
            method,
        }
    }

    /// Forces the scaling-and-squaring path regardless of conditioning.
    pub fn dense(generator: &Superoperator) -> Self {
        Propagator {
            generator: *generator,
            method: Method::Dense,
        }
    }

    pub fn generator(&self) -> &Superoperator {
        &self.generator
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self.method, Method::Spectral { .. })
    }

    pub fn at(&self, tau: f64) -> Result<Superoperator> {
        check_delay(tau)?;
        if tau == 0.0 {
            return Ok(Superoperator::identity());
        }
        let matrix = match &self.method {
            Method::Spectral {
                rates,
                modes,
                inverse,
            } => {
                let diag = Matrix4::from_diagonal(&rates.map(|l| (l * tau).exp()));
                modes * diag * inverse
            }
            Method::Dense => (self.generator.matrix * C64::from(tau)).exp(),
        };
        Ok(Superoperator { matrix })
    }

    pub fn apply(&self, tau: f64, v: &Vec4) -> Result<Vec4> {
        check_delay(tau)?;
        if tau == 0.0 {
            return Ok(*v);
        }
        match &self.method {
            Method::Spectral {
                rates,
                modes,
                inverse,
            } => {
                let coeffs = inverse * v;
                let scaled = coeffs.zip_map(rates, |c, l| c * (l * tau).exp());
                Ok(modes * scaled)
            }
            Method::Dense => Ok(self.at(tau)?.matrix * v),
        }
    }

    pub fn evolve(&self, tau: f64, rho: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix::from_vector(
            &self.apply(tau, &rho.to_vector())?,
            rho.normalized,
        ))
    }

    /// `Tr[X e^{Lτ} ρ]` over a list of non-negative delays.
    pub fn trace_curve(
        &self,
        observable: &Op2,
        rho: &DensityMatrix,
        taus: &[f64],
    ) -> Result<Vec<C64>> {
        let row = trace_row(observable);
        let v = rho.to_vector();
        match &self.method {
            Method::Spectral {
                rates,
                modes,
                inverse,
            } => {
                let weights = row * modes;
                let coeffs = inverse * v;
                let amplitudes: Vec<C64> = (0..4).map(|k| weights[k] * coeffs[k]).collect();
                let direct = (row * v)[0];
                taus.iter()
                    .map(|&tau| {
                        check_delay(tau)?;
                        if tau == 0.0 {
                            return Ok(direct);
                        }
                        Ok((0..4).map(|k| amplitudes[k] * (rates[k] * tau).exp()).sum())
                    })
                    .collect()
            }
            Method::Dense => taus
                .iter()
                .map(|&tau| Ok((row * self.apply(tau, &v)?)[0]))
                .collect(),
        }
    }

    pub fn trace_at(&self, observable: &Op2, rho: &DensityMatrix, tau: f64) -> Result<C64> {
        Ok(self.trace_curve(observable, rho, &[tau])?[0])
    }
}

/// One-shot `e^{Lτ}`.
pub fn propagator(l: &Superoperator, tau: f64) -> Result<Superoperator> {
    check_delay(tau)?;
    Propagator::new(l).at(tau)
}

fn check_delay(tau: f64) -> Result<()> {
    if tau < 0.0 || tau.is_nan() {
        Err(Error::NegativeDelay { tau })
    } else {
        Ok(())
    }
}

/// Eigen-decomposition through the complex Schur form `L = Q T Q*`:
/// eigenvectors of the triangular factor come from back substitution.
fn spectral_decomposition(m: &Mat4) -> Option<(Vector4<C64>, Mat4, Mat4)> {
    let (q, t) = nalgebra::Schur::try_new(*m, f64::EPSILON, 10_000)?.unpack();
    let scale = t
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let tiny = scale * f64::EPSILON;

    let mut y = Mat4::zeros();
    for k in 0..4 {
        y[(k, k)] = C64::from(1.0);
        for i in (0..k).rev() {
            let mut acc = C64::from(0.0);
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut denom = t[(i, i)] - t[(k, k)];
            if denom.norm() < tiny {
                denom = C64::from(tiny);
            }
            y[(i, k)] = -acc / denom;
        }
    }

    let mut modes = q * y;
    for mut col in modes.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= C64::from(n);
        }
    }
    let inverse = modes.try_inverse()?;
    let condition = modes.norm() * inverse.norm();
    if !condition.is_finite() || condition > SPECTRAL_CONDITION_LIMIT {
        return None;
    }
    let rates = Vector4::from_fn(|i, _| t[(i, i)]);
    Some((rates, modes, inverse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_liouvillian, ops, steady_state, SystemParams};
    use std::f64::consts::PI;

    fn generator(rabi: f64, dephasing: f64) -> (SystemParams, Superoperator) {
        let p = SystemParams::new(rabi, 0.45)
            .unwrap()
            .with_dephasing(dephasing)
            .unwrap();
        (p, build_liouvillian(&p))
    }

    fn mixed_state() -> DensityMatrix {
        DensityMatrix::new(Op2::new(
            C64::new(0.7, 0.0),
            C64::new(0.2, 0.3),
            C64::new(0.2, -0.3),
            C64::new(0.3, 0.0),
        ))
    }

    #[test]
    fn zero_delay_is_identity() {
        let (_, l) = generator(0.56 * PI, 0.0);
        assert_eq!(propagator(&l, 0.0).unwrap(), Superoperator::identity());
    }

    #[test]
    fn negative_delay_is_an_error() {
        let (_, l) = generator(0.56 * PI, 0.0);
        assert!(matches!(
            propagator(&l, -0.1),
            Err(Error::NegativeDelay { .. })
        ));
    }

    #[test]
    fn spectral_and_dense_paths_agree() {
        for (rabi, deph) in [(0.56 * PI, 0.0), (3.3 * PI, 0.5), (0.0, 0.2)] {
            let (_, l) = generator(rabi, deph);
            let spectral = Propagator::new(&l);
            let dense = Propagator::dense(&l);
            for tau in [0.01, 0.3, 2.0, 7.5] {
                let a = spectral.at(tau).unwrap();
                let b = dense.at(tau).unwrap();
                assert!(a.max_abs_diff(&b) < 1e-12, "rabi {rabi} tau {tau}");
            }
        }
    }

    #[test]
    fn semigroup_property() {
        let (_, l) = generator(1.9, 0.1);
        let p = Propagator::new(&l);
        for (t1, t2) in [(0.1, 0.2), (1.0, 3.5), (0.0, 2.2)] {
            let lhs = p.at(t1).unwrap().compose(&p.at(t2).unwrap());
            let rhs = p.at(t1 + t2).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-10);
        }
    }

    #[test]
    fn trace_is_preserved() {
        let (_, l) = generator(0.56 * PI, 0.3);
        let p = Propagator::new(&l);
        let rho = mixed_state();
        for tau in [0.05, 0.5, 5.0] {
            let out = p.evolve(tau, &rho).unwrap();
            assert!((out.trace() - rho.trace()).norm() < 1e-13);
            assert!(out.hermiticity_error() < 1e-12);
            assert!(out.eigenvalues()[0] > -1e-10);
        }
    }

    #[test]
    fn undriven_decay_matches_analytic() {
        let (params, l) = generator(0.0, 0.4);
        let p = Propagator::new(&l);
        let rho = mixed_state();
        let g = params.decay_rate();
        for tau in [0.1, 0.45, 2.0] {
            let out = p.evolve(tau, &rho).unwrap();
            let pop = rho.population() * (-g * tau).exp();
            let coh = rho.coherence() * (-(g / 2.0 + 0.4) * tau).exp();
            assert!((out.population() - pop).abs() < 1e-13);
            assert!((out.coherence() - coh).norm() < 1e-13);
        }
    }

    #[test]
    fn long_time_limit_is_steady_state() {
        let (params, l) = generator(0.56 * PI, 0.0);
        let ss = steady_state(&l).unwrap();
        let p = Propagator::new(&l);
        for rho in [
            DensityMatrix::ground(),
            DensityMatrix::excited(),
            mixed_state(),
        ] {
            let out = p.evolve(50.0 * params.lifetime, &rho).unwrap();
            assert!(ops::max_abs_diff(&out.elements, &ss.elements) < 1e-8);
        }
    }

    #[test]
    fn trace_curve_matches_explicit_evolution() {
        let (_, l) = generator(3.3 * PI, 0.0);
        let p = Propagator::new(&l);
        let rho = mixed_state().sandwich(&ops::sigma(), &ops::sigma_dag());
        let obs = ops::excited_projector();
        let taus = [0.0, 0.2, 1.7];
        let curve = p.trace_curve(&obs, &rho, &taus).unwrap();
        for (tau, value) in taus.iter().zip(curve) {
            let direct = p.evolve(*tau, &rho).unwrap().expect(&obs);
            assert!((value - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn exceptional_point_falls_back_or_stays_accurate() {
        // Ω = Γ/4 makes the coherence block of the resonant generator defective.
        let g = 1.0 / 0.45;
        let (_, l) = generator(g / 4.0, 0.0);
        let p = Propagator::new(&l);
        let dense = Propagator::dense(&l);
        for tau in [0.1, 1.0, 4.0] {
            assert!(p.at(tau).unwrap().max_abs_diff(&dense.at(tau).unwrap()) < 1e-9);
        }
    }
}
