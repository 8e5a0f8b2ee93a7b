use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use mixcorr::correlators::{g2, DetectorRole, Emitter, MixConfig, NormalizationMode};
use mixcorr::dynamics::SystemParams;
use mixcorr::tagcorr::{correlate2, CorrelationSettings};
use mixcorr::trajectories::{simulate_stream, DetectorChannelSpec, SimulationOptions};

fn params(rabi: f64) -> SystemParams {
    SystemParams::new(rabi, 0.45).unwrap()
}

#[test]
fn laser_only_channel_is_poissonian() {
    let channels = [
        DetectorChannelSpec::cross(0, 0.5),
        DetectorChannelSpec::laser_only(1, 0.5),
        DetectorChannelSpec::laser_only(2, 0.5),
    ];
    let sim = simulate_stream(
        &params(0.56 * PI),
        &channels,
        400_000_000,
        17,
        &SimulationOptions::default(),
    )
    .unwrap();
    let settings = CorrelationSettings::new(100, 5000);
    for (a, b) in [(1, 2), (1, 1), (0, 1)] {
        let h = correlate2(&sim.stream, a, b, &settings).unwrap();
        let sigma = h.accidentals_per_bin.sqrt();
        for &c in &h.counts {
            assert!(
                (c as f64 - h.accidentals_per_bin).abs() <= 3.5 * sigma,
                "({a},{b}): {c} vs {}",
                h.accidentals_per_bin
            );
        }
    }
}

#[test]
fn mixed_stream_bunches_at_zero_delay() {
    let p = params(0.3 * PI);
    let em = Emitter::new(p).unwrap();
    let mix = MixConfig::new(1.0, PI).unwrap();
    let beta = em.beta(&mix);
    let channels = [
        DetectorChannelSpec::cross(0, 0.5),
        DetectorChannelSpec::mixed(1, 0.5, beta, &p),
    ];
    let sim =
        simulate_stream(&p, &channels, 200_000_000, 5, &SimulationOptions::default()).unwrap();
    let h = correlate2(&sim.stream, 0, 1, &CorrelationSettings::new(50, 3000)).unwrap();
    let values = h.normalized();
    let sigma = h.normalized_sigma();
    let mid = values.len() / 2;
    // The two bins flanking zero delay average the QRT curve over ±50 ps.
    let taus: Vec<f64> = (-50..=50).map(|k| k as f64 * 1e-3).collect();
    let theory = g2(
        &em,
        &mix,
        (DetectorRole::Cross, DetectorRole::Co),
        &taus,
        NormalizationMode::IntensityProduct,
    )
    .unwrap()
    .normalized();
    let expected = theory.iter().sum::<f64>() / theory.len() as f64;
    let measured = 0.5 * (values[mid - 1] + values[mid]);
    let error = 0.5 * (sigma[mid - 1].powi(2) + sigma[mid].powi(2)).sqrt();
    assert!(expected > 2.0);
    assert!(
        (measured - expected).abs() < 4.0 * error,
        "{measured} vs {expected} ± {error}"
    );
}

#[test]
fn channel_counts_follow_collection_weights() {
    let channels = [
        DetectorChannelSpec::cross(0, 0.1),
        DetectorChannelSpec::cross(1, 0.3),
        DetectorChannelSpec::co(2, 0.2, C64::new(0.0, 0.0)),
    ];
    let sim = simulate_stream(
        &params(PI),
        &channels,
        500_000_000,
        3,
        &SimulationOptions::default(),
    )
    .unwrap();
    let counts = sim.stream.channel_counts();
    let total: u64 = counts.iter().sum();
    for (c, w) in counts.iter().zip([0.1, 0.3, 0.2]) {
        let p = w / 0.6;
        let expected = p * total as f64;
        let sd = (total as f64 * p * (1.0 - p)).sqrt();
        assert!((*c as f64 - expected).abs() < 4.0 * sd);
    }
    assert_eq!(sim.provenance.records, sim.stream.len());
    assert_eq!(sim.provenance.seed, 3);
}
