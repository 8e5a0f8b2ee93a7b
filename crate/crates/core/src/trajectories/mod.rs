//! Quantum-jump unraveling of the emitter master equation into synthetic
//! multi-detector click streams.
//!
//! Each detector `k` collects a fraction `w_k` of the emission and, on
//! co-polarized detectors, a local-oscillator amplitude `α_k`, giving the jump
//! operator `J_k = √(w_kΓ)·σ + α_k`. The displacement is compensated by a
//! Hamiltonian term so the unconditional dynamics are unchanged. Emission not
//! collected by any detector is an unrecorded jump.

mod waiting;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlators::DetectorRole;
use crate::dynamics::ops::{self, Op2, C64, ONE, ZERO};
use crate::dynamics::{DensityMatrix, Superoperator, SystemParams};
use crate::error::{Error, Result};
use crate::tagcorr::{TagRecord, TagStream};
use waiting::{norm_sqr, waiting_time, Exp2, State};

/// Slack allowed on the collection-weight sum.
const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorChannelSpec {
    pub id: u8,
    pub role: DetectorRole,
    /// Fraction of the emission reaching this detector, in `[0, 1]`.
    pub collection_weight: f64,
    /// Local-oscillator amplitude in ns^-1/2; `|α|²` is the laser-only click
    /// rate. Zero on cross-polarized detectors.
    #[serde(default)]
    pub lo_amplitude: C64,
}

impl DetectorChannelSpec {
    pub fn cross(id: u8, collection_weight: f64) -> Self {
        DetectorChannelSpec {
            id,
            role: DetectorRole::Cross,
            collection_weight,
            lo_amplitude: ZERO,
        }
    }

    pub fn co(id: u8, collection_weight: f64, lo_amplitude: C64) -> Self {
        DetectorChannelSpec {
            id,
            role: DetectorRole::Co,
            collection_weight,
            lo_amplitude,
        }
    }

    /// Co-polarized detector whose signal is `√(wΓ)(σ + β)`, matching the
    /// mixing model of the correlators.
    pub fn mixed(id: u8, collection_weight: f64, beta: C64, params: &SystemParams) -> Self {
        let alpha = beta * (collection_weight * params.decay_rate()).sqrt();
        Self::co(id, collection_weight, alpha)
    }

    /// Detector that sees only the laser, at `rate` clicks per ns.
    pub fn laser_only(id: u8, rate: f64) -> Self {
        Self::co(id, 0.0, C64::from(rate.max(0.0).sqrt()))
    }
}

pub fn validate_channels(channels: &[DetectorChannelSpec]) -> Result<()> {
    let mut total = 0.0;
    for (i, ch) in channels.iter().enumerate() {
        let w = ch.collection_weight;
        if !w.is_finite() || !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!(
                "channel {} collection weight must lie in [0, 1], got {w}",
                ch.id
            )));
        }
        if !(ch.lo_amplitude.re.is_finite() && ch.lo_amplitude.im.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "channel {} LO amplitude must be finite",
                ch.id
            )));
        }
        if ch.role == DetectorRole::Cross && ch.lo_amplitude != ZERO {
            return Err(Error::InvalidParameter(format!(
                "channel {} is cross-polarized and cannot carry a local oscillator",
                ch.id
            )));
        }
        if channels[..i].iter().any(|other| other.id == ch.id) {
            return Err(Error::InvalidParameter(format!(
                "duplicate channel id {}",
                ch.id
            )));
        }
        total += w;
    }
    if total > 1.0 + WEIGHT_TOLERANCE {
        return Err(Error::WeightsExceedUnity(total));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    /// Detector that records the jump; `None` for unobserved channels.
    pub channel: Option<u8>,
    pub operator: Op2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpModel {
    /// Hermitian part, including the displacement compensation.
    pub hamiltonian: Op2,
    pub jumps: Vec<JumpOperator>,
}

impl JumpModel {
    /// `Σ J†J` over every channel.
    pub fn decay_operator(&self) -> Op2 {
        self.jumps
            .iter()
            .map(|j| j.operator.adjoint() * j.operator)
            .sum()
    }

    /// `H − (i/2) Σ J†J`.
    pub fn effective_hamiltonian(&self) -> Op2 {
        self.hamiltonian - self.decay_operator() * C64::new(0.0, 0.5)
    }

    pub fn liouvillian(&self) -> Superoperator {
        let collapse: Vec<(f64, Op2)> = self.jumps.iter().map(|j| (1.0, j.operator)).collect();
        Superoperator::lindblad(&self.hamiltonian, &collapse)
    }
}

pub fn build_jump_model(
    params: &SystemParams,
    channels: &[DetectorChannelSpec],
) -> Result<JumpModel> {
    params.validate()?;
    validate_channels(channels)?;
    let gamma = params.decay_rate();
    let sigma = ops::sigma();
    let mut hamiltonian = params.hamiltonian();
    let mut jumps = Vec::with_capacity(channels.len() + 2);

    for ch in channels {
        let c = sigma * C64::from((ch.collection_weight * gamma).sqrt());
        let alpha = ch.lo_amplitude;
        // D[c + α] = D[c] + ½[α*c − αc†, ·], cancelled by H_comp = −(i/2)(α*c − αc†).
        let generator = c * alpha.conj() - c.adjoint() * alpha;
        hamiltonian += generator * C64::new(0.0, -0.5);
        jumps.push(JumpOperator {
            channel: Some(ch.id),
            operator: c + Op2::identity() * alpha,
        });
    }

    let collected: f64 = channels.iter().map(|c| c.collection_weight).sum();
    let remainder = (1.0 - collected).max(0.0) * gamma;
    if remainder > 0.0 {
        jumps.push(JumpOperator {
            channel: None,
            operator: sigma * C64::from(remainder.sqrt()),
        });
    }
    if params.pure_dephasing_rate > 0.0 {
        jumps.push(JumpOperator {
            channel: None,
            operator: ops::excited_projector()
                * C64::from((2.0 * params.pure_dephasing_rate).sqrt()),
        });
    }
    Ok(JumpModel { hamiltonian, jumps })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    /// Length of each independent trajectory segment; default `10⁴·T₁`.
    #[serde(default)]
    pub batch_duration_ps: Option<u64>,
    /// Unrecorded settling time before each segment, in lifetimes.
    pub burn_in_lifetimes: f64,
    /// Gaussian click-time jitter (standard deviation).
    #[serde(default)]
    pub jitter_sigma_ps: Option<f64>,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            batch_duration_ps: None,
            burn_in_lifetimes: 50.0,
            jitter_sigma_ps: None,
        }
    }
}

impl SimulationOptions {
    pub fn batch_ps(&self, params: &SystemParams) -> u64 {
        self.batch_duration_ps
            .unwrap_or_else(|| (1e4 * params.lifetime * 1e3).round() as u64)
            .max(1)
    }
}

/// Seed, parameters and detector layout that produced a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationProvenance {
    pub seed: u64,
    pub params: SystemParams,
    pub channels: Vec<DetectorChannelSpec>,
    pub options: SimulationOptions,
    pub duration_ps: u64,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedStream {
    pub stream: TagStream,
    pub provenance: SimulationProvenance,
}

/// One conditional state evolving under the jump model.
struct Walker<'m> {
    model: &'m JumpModel,
    exp: Exp2,
    decay: Op2,
    scale: f64,
    psi: State,
}

impl<'m> Walker<'m> {
    fn new(model: &'m JumpModel, psi: State) -> Self {
        let decay = model.decay_operator();
        let exp = Exp2::new(&(model.effective_hamiltonian() * C64::new(0.0, -1.0)));
        let rate = decay.trace().re.max(1e-12);
        Walker {
            model,
            exp,
            decay,
            scale: 1.0 / rate,
            psi,
        }
    }

    /// No-jump state after `t`, renormalized.
    fn drifted(&self, t: f64) -> State {
        let s = self.exp.apply(t, &self.psi);
        s / C64::from(norm_sqr(&s).sqrt())
    }

    fn next_jump(&self, rng: &mut ChaCha8Rng, horizon: f64) -> Option<f64> {
        let u = 1.0 - rng.random::<f64>();
        waiting_time(&self.exp, &self.decay, &self.psi, u, horizon, self.scale)
    }

    /// Applies a jump after drifting for `t`; returns the recording channel.
    fn jump(&mut self, t: f64, rng: &mut ChaCha8Rng) -> Option<u8> {
        let state = self.exp.apply(t, &self.psi);
        let candidates: Vec<State> = self
            .model
            .jumps
            .iter()
            .map(|j| j.operator * state)
            .collect();
        let weights: Vec<f64> = candidates.iter().map(norm_sqr).collect();
        let total: f64 = weights.iter().sum();
        let mut r = rng.random::<f64>() * total;
        let mut pick = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        for (k, w) in weights.iter().enumerate() {
            if r < *w {
                pick = k;
                break;
            }
            r -= w;
        }
        let next = candidates[pick];
        self.psi = next / C64::from(weights[pick].sqrt());
        self.model.jumps[pick].channel
    }
}

fn ground() -> State {
    State::new(ONE, ZERO)
}

fn batch_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn simulate_batch(
    model: &JumpModel,
    start_ps: u64,
    length_ps: u64,
    burn_in: f64,
    jitter: Option<&Normal<f64>>,
    rng: &mut ChaCha8Rng,
) -> Vec<TagRecord> {
    let mut walker = Walker::new(model, ground());
    let end = length_ps as f64 * 1e-3;
    let mut t = -burn_in;
    let mut out = Vec::new();
    while let Some(dt) = walker.next_jump(rng, end - t) {
        t += dt;
        let channel = walker.jump(dt, rng);
        if let (Some(channel), true) = (channel, t >= 0.0) {
            let ps = (t * 1e3).floor() as u64;
            if ps < length_ps {
                out.push(TagRecord {
                    channel,
                    timestamp: start_ps + ps,
                });
            }
        }
    }
    if let Some(normal) = jitter {
        for r in &mut out {
            let shifted = r.timestamp as f64 + normal.sample(rng);
            r.timestamp = shifted.round().max(0.0) as u64;
        }
    }
    out
}

/// Click stream of `duration_ps` built from independent segments of
/// [`SimulationOptions::batch_ps`], each started in `|g>` and settled for the
/// burn-in time. Segment `i` draws from ChaCha8 stream `i` of `seed`.
pub fn simulate_stream(
    params: &SystemParams,
    channels: &[DetectorChannelSpec],
    duration_ps: u64,
    seed: u64,
    options: &SimulationOptions,
) -> Result<SimulatedStream> {
    if duration_ps == 0 {
        return Err(Error::InvalidParameter(
            "simulation duration must be positive".into(),
        ));
    }
    if !options.burn_in_lifetimes.is_finite() || options.burn_in_lifetimes < 0.0 {
        return Err(Error::InvalidParameter(
            "burn-in must be finite and non-negative".into(),
        ));
    }
    let jitter = match options.jitter_sigma_ps {
        Some(s) if s > 0.0 && s.is_finite() => Some(Normal::new(0.0, s).expect("positive width")),
        Some(s) if s != 0.0 => {
            return Err(Error::InvalidParameter(format!(
                "jitter must be finite and non-negative, got {s} ps"
            )));
        }
        _ => None,
    };
    let model = build_jump_model(params, channels)?;
    let batch = options.batch_ps(params);
    let batches = duration_ps.div_ceil(batch);
    let burn_in = options.burn_in_lifetimes * params.lifetime;

    let pieces: Vec<Vec<TagRecord>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let start = b * batch;
            let length = batch.min(duration_ps - start);
            simulate_batch(
                &model,
                start,
                length,
                burn_in,
                jitter.as_ref(),
                &mut batch_rng(seed, b),
            )
        })
        .collect();
    let mut records: Vec<TagRecord> = pieces.into_iter().flatten().collect();
    if jitter.is_some() {
        for r in &mut records {
            r.timestamp = r.timestamp.min(duration_ps - 1);
        }
        records.sort_by_key(|r| r.timestamp);
    }

    let channel_count = channels
        .iter()
        .map(|c| c.id as usize + 1)
        .max()
        .unwrap_or(0);
    let channel_count = u8::try_from(channel_count)
        .map_err(|_| Error::InvalidParameter("channel ids must be below 255".into()))?;
    let stream = TagStream::new(channel_count, 1, duration_ps, records)?;
    Ok(SimulatedStream {
        provenance: SimulationProvenance {
            seed,
            params: *params,
            channels: channels.to_vec(),
            options: *options,
            duration_ps,
            records: stream.len(),
        },
        stream,
    })
}

/// Trajectory average of `|ψ><ψ|` at one time with its componentwise
/// standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSample {
    pub time: f64,
    pub mean: DensityMatrix,
    pub std_error_re: Matrix2<f64>,
    pub std_error_im: Matrix2<f64>,
}

/// Averages `trajectories` unravelings started in `|g>` at the given times
/// (ns, ascending). Trajectory `i` uses ChaCha8 stream `i` of `seed`.
pub fn sample_ensemble(
    params: &SystemParams,
    channels: &[DetectorChannelSpec],
    times: &[f64],
    trajectories: usize,
    seed: u64,
) -> Result<Vec<EnsembleSample>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| t.is_nan() || *t < 0.0) {
        return Err(Error::InvalidParameter(
            "sample times must be non-negative and ascending".into(),
        ));
    }
    if trajectories < 2 {
        return Err(Error::InvalidParameter(
            "need at least two trajectories".into(),
        ));
    }
    let model = build_jump_model(params, channels)?;
    let last = times.last().copied().unwrap_or(0.0);

    let runs: Vec<Vec<State>> = (0..trajectories as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = batch_rng(seed, i);
            let mut walker = Walker::new(&model, ground());
            let mut t = 0.0;
            let mut next = 0;
            let mut states = Vec::with_capacity(times.len());
            loop {
                let dt = walker.next_jump(&mut rng, last - t);
                let until = dt.map_or(f64::INFINITY, |d| t + d);
                while next < times.len() && times[next] < until {
                    states.push(walker.drifted(times[next] - t));
                    next += 1;
                }
                match dt {
                    Some(d) if next < times.len() => {
                        walker.jump(d, &mut rng);
                        t += d;
                    }
                    _ => break,
                }
            }
            states
        })
        .collect();

    let n = trajectories as f64;
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &time)| {
            let mut sum = Op2::zeros();
            let mut sq_re = Matrix2::<f64>::zeros();
            let mut sq_im = Matrix2::<f64>::zeros();
            for run in &runs {
                let rho = run[k] * run[k].adjoint();
                sum += rho;
                sq_re += rho.map(|z| z.re * z.re);
                sq_im += rho.map(|z| z.im * z.im);
            }
            let mean = sum / C64::from(n);
            let se = |sq: &Matrix2<f64>, part: fn(&C64) -> f64| {
                Matrix2::from_fn(|r, c| {
                    let m = part(&mean[(r, c)]);
                    ((sq[(r, c)] / n - m * m).max(0.0) / (n - 1.0)).sqrt()
                })
            };
            EnsembleSample {
                time,
                mean: DensityMatrix::new(mean),
                std_error_re: se(&sq_re, |z| z.re),
                std_error_im: se(&sq_im, |z| z.im),
            }
        })
        .collect())
}
