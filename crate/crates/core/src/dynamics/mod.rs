//! Driven two-level emitter: parameters, Liouvillian, steady state and
//! time propagation of vectorized density matrices.

pub mod ops;
mod propagator;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use ops::{dagger, excited_projector, left, right, sigma, trace_row, unvectorize, vectorize};
pub use ops::{Mat4, Op2, Vec4, C64};
pub use propagator::{propagator, Propagator, SPECTRAL_CONDITION_LIMIT};

/// Physical parameters of the resonantly driven emitter.
///
/// Rates and angular frequencies are in ns⁻¹, times in ns. The Rabi
/// frequency multiplies `(σ + σ†)/2` in the rotating-frame Hamiltonian, so a
/// Rabi period is `2π/Ω₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub rabi_frequency: f64,
    pub lifetime: f64,
    #[serde(default)]
    pub pure_dephasing_rate: f64,
    #[serde(default)]
    pub detuning: f64,
}

impl SystemParams {
    pub fn new(rabi_frequency: f64, lifetime: f64) -> Result<Self> {
        let params = SystemParams {
            rabi_frequency,
            lifetime,
            pure_dephasing_rate: 0.0,
            detuning: 0.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_dephasing(mut self, rate: f64) -> Result<Self> {
        self.pure_dephasing_rate = rate;
        self.validate()?;
        Ok(self)
    }

    pub fn with_detuning(mut self, detuning: f64) -> Result<Self> {
        self.detuning = detuning;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.rabi_frequency,
            self.lifetime,
            self.pure_dephasing_rate,
            self.detuning,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if self.lifetime <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lifetime must be positive, got {} ns",
                self.lifetime
            )));
        }
        if self.rabi_frequency < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Rabi frequency must be non-negative, got {} ns^-1",
                self.rabi_frequency
            )));
        }
        if self.pure_dephasing_rate < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pure dephasing rate must be non-negative, got {} ns^-1",
                self.pure_dephasing_rate
            )));
        }
        Ok(())
    }

    /// Radiative decay rate Γ = 1/T₁.
    pub fn decay_rate(&self) -> f64 {
        1.0 / self.lifetime
    }

    /// Rotating-frame Hamiltonian `Δ|x><x| + (Ω₀/2)(σ + σ†)`.
    pub fn hamiltonian(&self) -> Op2 {
        excited_projector() * C64::from(self.detuning)
            + (sigma() + sigma().adjoint()) * C64::from(0.5 * self.rabi_frequency)
    }

    /// Collapse channels as `(rate, operator)` pairs.
    ///
    /// `2γ_pd D[|x><x|]` damps the coherence at exactly `γ_pd`.
    pub fn dissipators(&self) -> Vec<(f64, Op2)> {
        let mut out = vec![(self.decay_rate(), sigma())];
        if self.pure_dephasing_rate > 0.0 {
            out.push((2.0 * self.pure_dephasing_rate, excited_projector()));
        }
        out
    }
}

/// 2×2 density matrix over `{|g>, |x>}`.
///
/// Conditional operators produced in the middle of a regression chain are
/// not trace-one; they carry `normalized = false`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    pub elements: Op2,
    pub normalized: bool,
}

impl DensityMatrix {
    pub fn new(elements: Op2) -> Self {
        DensityMatrix {
            elements,
            normalized: true,
        }
    }

    pub fn unnormalized(elements: Op2) -> Self {
        DensityMatrix {
            elements,
            normalized: false,
        }
    }

    pub fn ground() -> Self {
        Self::new(ops::ground_projector())
    }

    pub fn excited() -> Self {
        Self::new(excited_projector())
    }

    pub fn from_vector(v: &Vec4, normalized: bool) -> Self {
        DensityMatrix {
            elements: unvectorize(v),
            normalized,
        }
    }

    pub fn to_vector(&self) -> Vec4 {
        vectorize(&self.elements)
    }

    pub fn trace(&self) -> C64 {
        self.elements.trace()
    }

    /// `Tr[X ρ]`.
    pub fn expect(&self, observable: &Op2) -> C64 {
        (observable * self.elements).trace()
    }

    /// Excited-state population `ρ_xx`.
    pub fn population(&self) -> f64 {
        self.elements[(1, 1)].re
    }

    /// Coherence `<σ> = ρ_xg`.
    pub fn coherence(&self) -> C64 {
        self.elements[(1, 0)]
    }

    pub fn hermiticity_error(&self) -> f64 {
        ops::max_abs_diff(&self.elements, &dagger(&self.elements))
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let h = (self.elements + dagger(&self.elements)) * C64::from(0.5);
        let a = h[(0, 0)].re;
        let d = h[(1, 1)].re;
        let b = h[(0, 1)].norm();
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - radius, mean + radius]
    }

    pub fn sandwich(&self, right_op: &Op2, left_op: &Op2) -> DensityMatrix {
        DensityMatrix::unnormalized(right_op * self.elements * left_op)
    }
}

/// Linear map on column-stacked 2×2 matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superoperator {
    pub matrix: Mat4,
}

impl Superoperator {
    pub fn identity() -> Self {
        Superoperator {
            matrix: Mat4::identity(),
        }
    }

    /// Lindblad generator `-i[H, ·] + Σ rate·D[A]`.
    pub fn lindblad(hamiltonian: &Op2, collapse: &[(f64, Op2)]) -> Self {
        let mut m = (left(hamiltonian) - right(hamiltonian)) * -ops::I;
        for (rate, a) in collapse {
            let ad = dagger(a);
            let ada = ad * a;
            let d =
                left(a) * right(&ad) - left(&ada) * C64::from(0.5) - right(&ada) * C64::from(0.5);
            m += d * C64::from(*rate);
        }
        Superoperator { matrix: m }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::from_vector(&(self.matrix * rho.to_vector()), rho.normalized)
    }

    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        Superoperator {
            matrix: self.matrix * other.matrix,
        }
    }

    /// Eigenvalues from a complex Schur factorization.
    pub fn eigenvalues(&self) -> Vec<C64> {
        let schur = nalgebra::Schur::new(self.matrix);
        let (_, t) = schur.unpack();
        (0..4).map(|i| t[(i, i)]).collect()
    }

    /// Largest entrywise modulus difference.
    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        (self.matrix - other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Optical Bloch generator of the driven emitter.
pub fn build_liouvillian(params: &SystemParams) -> Superoperator {
    Superoperator::lindblad(&params.hamiltonian(), &params.dissipators())
}

/// Relative singular-value threshold below which a direction counts as null.
const NULL_SPACE_TOLERANCE: f64 = 1e-10;

/// Unique trace-one fixed point of `L`.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    let svd = l.matrix.svd(false, false);
    let largest = svd.singular_values.max();
    let dimension = svd
        .singular_values
        .iter()
        .filter(|&&s| s <= NULL_SPACE_TOLERANCE * largest.max(f64::MIN_POSITIVE))
        .count();
    if dimension != 1 {
        return Err(Error::NoUniqueSteadyState { dimension });
    }

    // The trace row lies in the left null space of L, so the ρ_gg equation is
    // redundant and can be swapped for the normalization condition.
    let mut bordered: Matrix4<C64> = l.matrix;
    bordered.set_row(0, &trace_row(&ops::identity()));
    let mut rhs = Vec4::zeros();
    rhs[0] = ops::ONE;
    let solution = bordered
        .lu()
        .solve(&rhs)
        .ok_or(Error::NoUniqueSteadyState { dimension: 2 })?;

    let raw = unvectorize(&solution);
    let hermitian = (raw + dagger(&raw)) * C64::from(0.5);
    let trace = hermitian.trace();
    Ok(DensityMatrix::new(hermitian / trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(rabi: f64) -> SystemParams {
        SystemParams::new(rabi, 0.45).unwrap()
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(SystemParams::new(1.0, 0.0).is_err());
        assert!(SystemParams::new(-1.0, 0.45).is_err());
        assert!(params(1.0).with_dephasing(-0.1).is_err());
        assert!(SystemParams::new(f64::NAN, 0.45).is_err());
    }

    #[test]
    fn undriven_decay_rate() {
        let p = params(0.0);
        let l = build_liouvillian(&p);
        let d = l.apply(&DensityMatrix::excited());
        assert!((d.elements[(1, 1)].re + p.decay_rate()).abs() < 1e-14);
        assert!((d.elements[(0, 0)].re - p.decay_rate()).abs() < 1e-14);
    }

    #[test]
    fn trace_row_is_left_null_vector() {
        let p = params(0.56 * PI)
            .with_dephasing(0.3)
            .unwrap()
            .with_detuning(0.7)
            .unwrap();
        let l = build_liouvillian(&p);
        let row = trace_row(&ops::identity()) * l.matrix;
        assert!(row.iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn spectrum_has_single_zero_and_nonpositive_real_parts() {
        let l = build_liouvillian(&params(0.56 * PI));
        let ev = l.eigenvalues();
        let zeros = ev.iter().filter(|z| z.norm() < 1e-10).count();
        assert_eq!(zeros, 1);
        assert!(ev.iter().all(|z| z.re <= 1e-12));
    }

    #[test]
    fn undriven_steady_state_is_ground() {
        let rho = steady_state(&build_liouvillian(&params(0.0))).unwrap();
        assert!(ops::max_abs_diff(&rho.elements, &ops::ground_projector()) < 1e-14);
    }

    #[test]
    fn saturation_limit_is_half_population() {
        let p = params(0.0);
        let strong = params(100.0 * p.decay_rate());
        let rho = steady_state(&build_liouvillian(&strong)).unwrap();
        assert!((rho.population() - 0.5).abs() < 1e-4);
    }

    #[test]
    fn resonant_steady_state_matches_closed_form() {
        for rabi in [0.1 * PI, 0.3 * PI, 0.56 * PI, 3.3 * PI] {
            let p = params(rabi);
            let g = p.decay_rate();
            let rho = steady_state(&build_liouvillian(&p)).unwrap();
            let denom = rabi * rabi / 2.0 + g * g / 4.0;
            let pop = (rabi * rabi / 4.0) / denom;
            // Resonant Bloch solution: <σ> = ρ_xg = -i Ω Γ / (4 (Ω²/2 + Γ²/4)).
            let coherence = C64::new(0.0, -rabi * g / 4.0 / denom);
            assert!((rho.population() - pop).abs() < 1e-13, "pop at {rabi}");
            assert!(
                (rho.coherence() - coherence).norm() < 1e-13,
                "coh at {rabi}"
            );
            let residual = (build_liouvillian(&p).matrix * rho.to_vector()).norm();
            assert!(residual < 1e-12);
        }
    }

    #[test]
    fn degenerate_generator_is_rejected() {
        let l = Superoperator::lindblad(&(sigma() + sigma().adjoint()), &[]);
        match steady_state(&l) {
            Err(Error::NoUniqueSteadyState { dimension }) => assert!(dimension >= 2),
            other => panic!("expected degenerate null space, got {other:?}"),
        }
    }

    #[test]
    fn steady_state_is_physical_with_dephasing_and_detuning() {
        let p = params(1.3)
            .with_dephasing(0.8)
            .unwrap()
            .with_detuning(-2.0)
            .unwrap();
        let rho = steady_state(&build_liouvillian(&p)).unwrap();
        assert!(rho.hermiticity_error() < 1e-15);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        assert!(rho.eigenvalues()[0] >= -1e-14);
    }
}
