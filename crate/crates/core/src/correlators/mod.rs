//! Correlation functions of the emitter field, optionally mixed with a
//! coherent laser amplitude, evaluated with the quantum regression theorem.
//!
//! All multi-time expectation values follow one bookkeeping rule. For
//! `τ ≥ 0` and a stationary state `ρ`:
//!
//! ```text
//! <O₁(t) X(t+τ) O₃(t)> = Tr[X e^{Lτ}(O₃ ρ O₁)]
//! <X(t+τ) B(t)>        = Tr[X e^{Lτ}(B ρ)]
//! <B(t) X(t+τ)>        = Tr[X e^{Lτ}(ρ B)]
//! ```
//!
//! Negative delays are never propagated backwards; they are obtained by
//! exchanging the detector roles.

mod curve;
mod g3;
mod irf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::ops::{self, Op2, C64};
use crate::dynamics::{
    build_liouvillian, steady_state, DensityMatrix, Propagator, Superoperator, SystemParams,
};
use crate::error::{Error, Result};

pub(crate) use curve::tail_window_mean;
pub use curve::{
    uniform_grid, CorrelationCurve, Normalization, NormalizationMode, TermChannel,
    QUENCHED_TAIL_LIMIT, TAIL_FRACTION,
};
pub use g3::{g3_map, CorrelationMap3};
pub use irf::{gaussian_kernel, irf_convolve};

/// Names of the cross-co decomposition channels.
pub const CROSSCO_TERMS: [&str; 3] = ["A", "B", "C"];
/// Names of the co-co decomposition channels (Ã … Ẽ).
pub const COCO_TERMS: [&str; 5] = ["A~", "B~", "C~", "D~", "E~"];

/// Laser admixture `β = f_mix <σ>_ss e^{iφ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixConfig {
    pub f_mix: f64,
    /// Relative phase in radians.
    pub phase: f64,
}

impl Default for MixConfig {
    fn default() -> Self {
        MixConfig::none()
    }
}

impl MixConfig {
    pub fn new(f_mix: f64, phase: f64) -> Result<Self> {
        if !f_mix.is_finite() || f_mix < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mixing factor must be finite and non-negative, got {f_mix}"
            )));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidParameter(
                "mixing phase must be finite".into(),
            ));
        }
        Ok(MixConfig { f_mix, phase })
    }

    pub fn none() -> Self {
        MixConfig {
            f_mix: 0.0,
            phase: 0.0,
        }
    }
}

/// Which signal a detector sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorRole {
    /// Emitter fluorescence only: operator `σ`.
    Cross,
    /// Fluorescence plus laser: operator `s = σ + β`.
    Co,
}

impl std::str::FromStr for DetectorRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cross" => Ok(DetectorRole::Cross),
            "co" => Ok(DetectorRole::Co),
            other => Err(Error::InvalidParameter(format!(
                "unknown detector role '{other}' (expected cross or co)"
            ))),
        }
    }
}

impl std::fmt::Display for DetectorRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetectorRole::Cross => "cross",
            DetectorRole::Co => "co",
        })
    }
}

/// Emitter prepared at one parameter set: generator, steady state and a
/// cached propagator.
///
/// `β` is never stored here; it is derived from the steady state on demand so
/// that it always tracks the current parameters.
#[derive(Debug, Clone)]
pub struct Emitter {
    params: SystemParams,
    liouvillian: Superoperator,
    steady: DensityMatrix,
    propagator: Propagator,
}

impl Emitter {
    pub fn new(params: SystemParams) -> Result<Self> {
        params.validate()?;
        let liouvillian = build_liouvillian(&params);
        let steady = steady_state(&liouvillian)?;
        let propagator = Propagator::new(&liouvillian);
        Ok(Emitter {
            params,
            liouvillian,
            steady,
            propagator,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn liouvillian(&self) -> &Superoperator {
        &self.liouvillian
    }

    pub fn steady_state(&self) -> &DensityMatrix {
        &self.steady
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    /// `<σ†σ>_ss`.
    pub fn population(&self) -> f64 {
        self.steady.population()
    }

    /// `<σ>_ss`.
    pub fn coherence(&self) -> C64 {
        self.steady.coherence()
    }

    pub fn beta(&self, mix: &MixConfig) -> C64 {
        self.coherence() * Complex64::from_polar(mix.f_mix, mix.phase)
    }

    pub fn role_operator(&self, role: DetectorRole, mix: &MixConfig) -> Op2 {
        match role {
            DetectorRole::Cross => ops::sigma(),
            DetectorRole::Co => ops::sigma() + ops::identity() * self.beta(mix),
        }
    }

    /// Steady-state detected intensity `<O†O>` for a role.
    pub fn intensity(&self, role: DetectorRole, mix: &MixConfig) -> f64 {
        let o = self.role_operator(role, mix);
        self.steady.expect(&(o.adjoint() * o)).re
    }
}

/// Conditional operator `right · ρ · left` fed to the next propagation step.
pub fn qrt_sandwich(rho: &DensityMatrix, left: &Op2, right: &Op2) -> DensityMatrix {
    rho.sandwich(right, left)
}

/// Complex first-order coherence `<σ†(t+τ) σ(t)>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderCurve {
    pub delays: Vec<f64>,
    pub values: Vec<C64>,
}

/// `Tr[σ† e^{Lτ}(σ ρ)]` for an arbitrary state and propagator. Negative delays
/// use stationarity, `G¹(−τ) = G¹(τ)*`.
pub fn first_order_coherence(
    propagator: &Propagator,
    rho: &DensityMatrix,
    delays: &[f64],
) -> Result<Vec<C64>> {
    let conditioned = DensityMatrix::unnormalized(ops::sigma() * rho.elements);
    let abs: Vec<f64> = delays.iter().map(|t| t.abs()).collect();
    let values = propagator.trace_curve(&ops::sigma_dag(), &conditioned, &abs)?;
    Ok(delays
        .iter()
        .zip(values)
        .map(|(t, v)| if *t < 0.0 { v.conj() } else { v })
        .collect())
}

pub fn g1(emitter: &Emitter, delays: &[f64]) -> Result<FirstOrderCurve> {
    let values = first_order_coherence(emitter.propagator(), emitter.steady_state(), delays)?;
    Ok(FirstOrderCurve {
        delays: delays.to_vec(),
        values,
    })
}

/// Unnormalized `Tr[O₂†O₂ e^{Lτ}(O₁ ρ O₁†)]` for `τ ≥ 0`.
fn ordered_g2(emitter: &Emitter, first: &Op2, second: &Op2, delays: &[f64]) -> Result<Vec<f64>> {
    let conditioned = qrt_sandwich(emitter.steady_state(), &first.adjoint(), first);
    let observable = second.adjoint() * second;
    Ok(emitter
        .propagator()
        .trace_curve(&observable, &conditioned, delays)?
        .into_iter()
        .map(|z| z.re)
        .collect())
}

/// Second-order correlation between two detectors; `role₁` clicks at `t`,
/// `role₂` at `t + τ`.
pub fn g2(
    emitter: &Emitter,
    mix: &MixConfig,
    roles: (DetectorRole, DetectorRole),
    delays: &[f64],
    mode: NormalizationMode,
) -> Result<CorrelationCurve> {
    let o1 = emitter.role_operator(roles.0, mix);
    let o2 = emitter.role_operator(roles.1, mix);

    let (pos_idx, pos_tau): (Vec<usize>, Vec<f64>) = delays
        .iter()
        .enumerate()
        .filter(|(_, t)| **t >= 0.0)
        .map(|(i, t)| (i, *t))
        .unzip();
    let (neg_idx, neg_tau): (Vec<usize>, Vec<f64>) = delays
        .iter()
        .enumerate()
        .filter(|(_, t)| **t < 0.0)
        .map(|(i, t)| (i, -*t))
        .unzip();
    if delays.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("delay grid must be finite".into()));
    }

    let mut raw = vec![0.0; delays.len()];
    for (i, v) in pos_idx
        .into_iter()
        .zip(ordered_g2(emitter, &o1, &o2, &pos_tau)?)
    {
        raw[i] = v;
    }
    for (i, v) in neg_idx
        .into_iter()
        .zip(ordered_g2(emitter, &o2, &o1, &neg_tau)?)
    {
        raw[i] = v;
    }

    let product = emitter.intensity(roles.0, mix) * emitter.intensity(roles.1, mix);
    let normalization = Normalization::resolve(mode, product, || curve::tail_mean(delays, &raw))?;
    Ok(CorrelationCurve {
        delays: delays.to_vec(),
        raw,
        normalization,
        terms: Vec::new(),
    })
}

fn require_nonnegative(delays: &[f64]) -> Result<()> {
    match delays.iter().find(|t| t.is_nan() || **t < 0.0) {
        Some(&tau) => Err(Error::NegativeDelay { tau }),
        None => Ok(()),
    }
}

fn finish_terms(
    delays: &[f64],
    names: &[&str],
    channels: Vec<Vec<f64>>,
    mode: NormalizationMode,
    product: f64,
) -> Result<CorrelationCurve> {
    let raw: Vec<f64> = (0..delays.len())
        .map(|i| channels.iter().map(|c| c[i]).sum())
        .collect();
    let normalization = Normalization::resolve(mode, product, || curve::tail_mean(delays, &raw))?;
    let terms = names
        .iter()
        .zip(channels)
        .map(|(name, raw)| TermChannel {
            name: name.to_string(),
            raw,
        })
        .collect();
    Ok(CorrelationCurve {
        delays: delays.to_vec(),
        raw,
        normalization,
        terms,
    })
}

/// Cross-co correlation split into `A` (emitter-only G²), `B` (laser click
/// times emitter click, constant) and `C` (interference).
pub fn g2_terms_crossco(
    emitter: &Emitter,
    mix: &MixConfig,
    delays: &[f64],
    mode: NormalizationMode,
) -> Result<CorrelationCurve> {
    require_nonnegative(delays)?;
    let beta = emitter.beta(mix);
    let rho = emitter.steady_state();
    let prop = emitter.propagator();
    let s = ops::sigma();
    let after_click = qrt_sandwich(rho, &ops::sigma_dag(), &s);

    let a: Vec<f64> = prop
        .trace_curve(&ops::excited_projector(), &after_click, delays)?
        .into_iter()
        .map(|z| z.re)
        .collect();
    let b = vec![beta.norm_sqr() * emitter.population(); delays.len()];
    // <σ†(t) σ(t+τ) σ(t)> = Tr[σ e^{Lτ}(σ ρ σ†)]
    let c: Vec<f64> = prop
        .trace_curve(&s, &after_click, delays)?
        .into_iter()
        .map(|z| 2.0 * (beta.conj() * z).re)
        .collect();

    let product =
        emitter.intensity(DetectorRole::Cross, mix) * emitter.intensity(DetectorRole::Co, mix);
    finish_terms(delays, &CROSSCO_TERMS, vec![a, b, c], mode, product)
}

/// Co-co correlation split into the constant lines `Ã`, the first-order
/// coherence term `B̃`, the two-σ term `C̃`, the three-σ terms `D̃` and the
/// emitter-only G² `Ẽ`.
pub fn g2_terms_coco(
    emitter: &Emitter,
    mix: &MixConfig,
    delays: &[f64],
    mode: NormalizationMode,
) -> Result<CorrelationCurve> {
    require_nonnegative(delays)?;
    let beta = emitter.beta(mix);
    let b2 = beta.norm_sqr();
    let n = emitter.population();
    let coh = emitter.coherence();
    let rho = emitter.steady_state();
    let prop = emitter.propagator();
    let s = ops::sigma();
    let sd = ops::sigma_dag();
    let pe = ops::excited_projector();

    let one_sided = DensityMatrix::unnormalized(s * rho.elements);
    let after_click = qrt_sandwich(rho, &sd, &s);

    let constant = b2 * b2 + 2.0 * b2 * n + 4.0 * b2 * (beta.conj() * coh).re;
    let a = vec![constant; delays.len()];
    // <σ†(t+τ) σ(t)>
    let b: Vec<f64> = prop
        .trace_curve(&sd, &one_sided, delays)?
        .into_iter()
        .map(|z| 2.0 * b2 * z.re)
        .collect();
    // <σ(t+τ) σ(t)>
    let c: Vec<f64> = prop
        .trace_curve(&s, &one_sided, delays)?
        .into_iter()
        .map(|z| 2.0 * (beta.conj() * beta.conj() * z).re)
        .collect();
    // <σ†(t) σ(t+τ) σ(t)> and <σ†σ(t+τ) σ(t)>
    let d_first = prop.trace_curve(&s, &after_click, delays)?;
    let d_second = prop.trace_curve(&pe, &one_sided, delays)?;
    let d: Vec<f64> = d_first
        .into_iter()
        .zip(d_second)
        .map(|(x, y)| 2.0 * (beta.conj() * x).re + 2.0 * (beta.conj() * y).re)
        .collect();
    let e: Vec<f64> = prop
        .trace_curve(&pe, &after_click, delays)?
        .into_iter()
        .map(|z| z.re)
        .collect();

    let i_co = emitter.intensity(DetectorRole::Co, mix);
    finish_terms(delays, &COCO_TERMS, vec![a, b, c, d, e], mode, i_co * i_co)
}

/// Zero-delay n-th order correlation with every detector mixed:
/// `|β|^{2n} + n²|β|^{2(n−1)}<σ†σ> + 2n|β|^{2n−1}|<σ>| cos φ`.
pub fn gn_zero_delay(n: u32, emitter: &Emitter, mix: &MixConfig) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "correlation order must be at least 1".into(),
        ));
    }
    let b = emitter.beta(mix).norm();
    let nf = n as f64;
    let coh = emitter.coherence().norm();
    Ok(b.powi(2 * n as i32)
        + nf * nf * b.powi(2 * (n as i32 - 1)) * emitter.population()
        + 2.0 * nf * b.powi(2 * n as i32 - 1) * coh * mix.phase.cos())
}

/// `Tr[(s†)ⁿ sⁿ ρ]` evaluated directly from operator powers.
pub fn gn_zero_delay_direct(n: u32, emitter: &Emitter, mix: &MixConfig) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "correlation order must be at least 1".into(),
        ));
    }
    let s = emitter.role_operator(DetectorRole::Co, mix);
    let sn = (1..n).fold(s, |acc, _| acc * s);
    Ok(emitter.steady_state().expect(&(sn.adjoint() * sn)).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const T1: f64 = 0.45;

    fn emitter(rabi: f64) -> Emitter {
        Emitter::new(SystemParams::new(rabi, T1).unwrap()).unwrap()
    }

    fn grid() -> Vec<f64> {
        uniform_grid(0.0, 5.0, 251)
    }

    fn headline() -> (Emitter, MixConfig) {
        (emitter(0.3 * PI), MixConfig::new(1.0, PI).unwrap())
    }

    #[test]
    fn sandwich_examples() {
        let em = emitter(0.56 * PI);
        let rho = em.steady_state();
        let out = qrt_sandwich(rho, &ops::sigma_dag(), &ops::sigma());
        assert!((out.trace().re - em.population()).abs() < 1e-15);
        assert!(!out.normalized);
        let same = qrt_sandwich(rho, &ops::identity(), &ops::identity());
        assert_eq!(same.elements, rho.elements);
        let s = em.role_operator(DetectorRole::Co, &MixConfig::none());
        let mixed = qrt_sandwich(rho, &s.adjoint(), &s);
        assert_eq!(mixed.elements, out.elements);
    }

    #[test]
    fn g1_reduces_to_population_and_factorizes() {
        let em = emitter(0.56 * PI);
        let curve = g1(&em, &[0.0, 50.0 * T1]).unwrap();
        assert!((curve.values[0].re - em.population()).abs() < 1e-15);
        let limit = em.coherence().conj() * em.coherence();
        assert!((curve.values[1] - limit).norm() < 1e-10);
    }

    #[test]
    fn g1_negative_delay_is_conjugate() {
        let em = emitter(1.3);
        let c = g1(&em, &[-0.7, 0.7]).unwrap();
        assert!((c.values[0] - c.values[1].conj()).norm() < 1e-15);
    }

    #[test]
    fn undriven_first_order_coherence_decays_exponentially() {
        let weak = Emitter::new(
            SystemParams::new(0.02, T1)
                .unwrap()
                .with_dephasing(0.3)
                .unwrap(),
        )
        .unwrap();
        let dark = Emitter::new(
            SystemParams::new(0.0, T1)
                .unwrap()
                .with_dephasing(0.3)
                .unwrap(),
        )
        .unwrap();
        let taus = uniform_grid(0.0, 3.0, 31);
        let values = first_order_coherence(dark.propagator(), weak.steady_state(), &taus).unwrap();
        let rate = 0.5 / T1 + 0.3;
        let start = weak.population();
        for (i, (tau, v)) in taus.iter().zip(&values).enumerate() {
            assert!((v.re - start * (-rate * tau).exp()).abs() < 1e-15);
            if i > 0 {
                assert!(v.norm() < values[i - 1].norm());
            }
        }
    }

    #[test]
    fn cross_cross_antibunching() {
        for rabi in [0.1 * PI, 0.56 * PI, 3.3 * PI] {
            let em = emitter(rabi);
            let c = g2(
                &em,
                &MixConfig::none(),
                (DetectorRole::Cross, DetectorRole::Cross),
                &[0.0],
                NormalizationMode::IntensityProduct,
            )
            .unwrap();
            assert!(c.normalized()[0].abs() < 1e-12);
        }
    }

    #[test]
    fn headline_bunching_values() {
        let (em, mix) = headline();
        let roles = [
            (DetectorRole::Cross, DetectorRole::Co),
            (DetectorRole::Co, DetectorRole::Co),
        ];
        let values: Vec<f64> = roles
            .iter()
            .map(|&r| {
                g2(&em, &mix, r, &[0.0], NormalizationMode::IntensityProduct)
                    .unwrap()
                    .normalized()[0]
            })
            .collect();
        assert!((values[0] - 3.0).abs() < 0.5, "cross-co {}", values[0]);
        assert!(values[1] > 10.0, "co-co {}", values[1]);
    }

    #[test]
    fn long_delay_factorizes_for_all_roles() {
        let em = emitter(0.56 * PI);
        let mix = MixConfig::new(1.7, 2.1).unwrap();
        for r1 in [DetectorRole::Cross, DetectorRole::Co] {
            for r2 in [DetectorRole::Cross, DetectorRole::Co] {
                let c = g2(
                    &em,
                    &mix,
                    (r1, r2),
                    &[50.0 * T1],
                    NormalizationMode::IntensityProduct,
                )
                .unwrap();
                assert!((c.normalized()[0] - 1.0).abs() < 1e-6);
                let product = em.intensity(r1, &mix) * em.intensity(r2, &mix);
                assert!((c.raw[0] - product).abs() < 1e-6 * product);
            }
        }
    }

    #[test]
    fn negative_delays_swap_roles() {
        let em = emitter(0.9);
        let mix = MixConfig::new(0.8, 0.4).unwrap();
        let taus = uniform_grid(0.0, 3.0, 31);
        let neg: Vec<f64> = taus.iter().map(|t| -t).collect();
        let forward = g2(
            &em,
            &mix,
            (DetectorRole::Co, DetectorRole::Cross),
            &taus,
            NormalizationMode::None,
        )
        .unwrap();
        let backward = g2(
            &em,
            &mix,
            (DetectorRole::Cross, DetectorRole::Co),
            &neg,
            NormalizationMode::None,
        )
        .unwrap();
        assert_eq!(forward.raw, backward.raw);
    }

    #[test]
    fn tail_normalization_agrees_with_intensity_product() {
        let em = emitter(0.56 * PI);
        let mix = MixConfig::new(1.0, 0.5).unwrap();
        let taus = uniform_grid(-20.0, 20.0, 401);
        let roles = (DetectorRole::Cross, DetectorRole::Co);
        let a = g2(&em, &mix, roles, &taus, NormalizationMode::IntensityProduct).unwrap();
        let b = g2(&em, &mix, roles, &taus, NormalizationMode::Tail).unwrap();
        let ratio = a.normalization.constant.unwrap() / b.normalization.constant.unwrap();
        assert!((ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn undriven_emitter_cannot_be_normalized() {
        let em = emitter(0.0);
        let r = g2(
            &em,
            &MixConfig::none(),
            (DetectorRole::Cross, DetectorRole::Cross),
            &grid(),
            NormalizationMode::Tail,
        );
        assert!(matches!(r, Err(Error::QuenchedTail { .. })));
        let r = g2(
            &em,
            &MixConfig::none(),
            (DetectorRole::Cross, DetectorRole::Cross),
            &grid(),
            NormalizationMode::IntensityProduct,
        );
        assert!(matches!(r, Err(Error::ZeroNormalization(_))));
    }

    #[test]
    fn crossco_terms_have_expected_limits() {
        let (em, mix) = headline();
        let c = g2_terms_crossco(&em, &mix, &grid(), NormalizationMode::IntensityProduct).unwrap();
        let a = c.term_normalized("A").unwrap();
        let b = c.term_normalized("B").unwrap();
        let cc = c.term_normalized("C").unwrap();
        assert!(a[0].abs() < 1e-12 && cc[0].abs() < 1e-12);
        assert!(b.iter().all(|v| *v == b[0]));
        assert!(cc.iter().all(|v| *v <= 1e-15), "C must be non-positive");
        let direct = g2(
            &em,
            &mix,
            (DetectorRole::Cross, DetectorRole::Co),
            &grid(),
            NormalizationMode::IntensityProduct,
        )
        .unwrap();
        for (x, y) in c.raw.iter().zip(&direct.raw) {
            assert!((x - y).abs() <= 1e-10 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn coco_terms_have_expected_limits() {
        let (em, mix) = headline();
        let c = g2_terms_coco(&em, &mix, &grid(), NormalizationMode::IntensityProduct).unwrap();
        let at0 = |name: &str| c.term_normalized(name).unwrap()[0];
        assert!(at0("C~").abs() < 1e-12);
        assert!(at0("D~").abs() < 1e-12);
        assert!(at0("E~").abs() < 1e-12);
        assert!(at0("B~") > 1e-3);
        let direct = g2(
            &em,
            &mix,
            (DetectorRole::Co, DetectorRole::Co),
            &grid(),
            NormalizationMode::IntensityProduct,
        )
        .unwrap();
        for (x, y) in c.raw.iter().zip(&direct.raw) {
            assert!((x - y).abs() <= 1e-10 * y.abs());
        }
    }

    #[test]
    fn coco_terms_without_laser_reduce_to_emitter_g2() {
        let em = emitter(0.56 * PI);
        let c = g2_terms_coco(
            &em,
            &MixConfig::none(),
            &grid(),
            NormalizationMode::IntensityProduct,
        )
        .unwrap();
        for name in ["A~", "B~", "C~", "D~"] {
            assert!(
                c.term(name).unwrap().raw.iter().all(|v| *v == 0.0),
                "{name}"
            );
        }
        let plain = g2(
            &em,
            &MixConfig::none(),
            (DetectorRole::Cross, DetectorRole::Cross),
            &grid(),
            NormalizationMode::IntensityProduct,
        )
        .unwrap();
        for (x, y) in c.term("E~").unwrap().raw.iter().zip(&plain.raw) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn terms_reject_negative_delays() {
        let (em, mix) = headline();
        assert!(matches!(
            g2_terms_crossco(&em, &mix, &[-0.1, 0.0], NormalizationMode::None),
            Err(Error::NegativeDelay { .. })
        ));
    }

    #[test]
    fn closed_form_zero_delay_matches_operator_powers() {
        let em = emitter(0.3 * PI);
        for (f, phi) in [(1.0, PI), (0.4, 0.3), (2.5, 4.0)] {
            let mix = MixConfig::new(f, phi).unwrap();
            for n in 1..=5 {
                let a = gn_zero_delay(n, &em, &mix).unwrap();
                let b = gn_zero_delay_direct(n, &em, &mix).unwrap();
                assert!((a - b).abs() <= 1e-10 * b.abs(), "n={n} f={f}");
            }
        }
    }

    #[test]
    fn zero_delay_special_cases() {
        let em = emitter(0.56 * PI);
        for n in 2..=4 {
            assert_eq!(gn_zero_delay(n, &em, &MixConfig::none()).unwrap(), 0.0);
        }
        let mix = MixConfig::new(1.3, PI / 2.0).unwrap();
        let b = em.beta(&mix).norm();
        let expected = b.powi(6) + 9.0 * b.powi(4) * em.population();
        assert!((gn_zero_delay(3, &em, &mix).unwrap() - expected).abs() < 1e-15);
        assert!(gn_zero_delay(0, &em, &mix).is_err());
    }

    #[test]
    fn beta_tracks_parameters() {
        let mix = MixConfig::new(1.0, 0.0).unwrap();
        let a = emitter(0.3 * PI);
        let b = emitter(2.0 * PI);
        assert!((a.beta(&mix) - a.coherence()).norm() < 1e-15);
        assert!((b.beta(&mix) - a.beta(&mix)).norm() > 1e-3);
    }

    #[test]
    fn parses_roles() {
        assert_eq!(
            "Cross".parse::<DetectorRole>().unwrap(),
            DetectorRole::Cross
        );
        assert_eq!(" co".parse::<DetectorRole>().unwrap(), DetectorRole::Co);
        assert!("both".parse::<DetectorRole>().is_err());
        assert!(MixConfig::new(-1.0, 0.0).is_err());
    }
}
