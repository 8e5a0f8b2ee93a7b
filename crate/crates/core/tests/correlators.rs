use std::f64::consts::PI;

use proptest::prelude::*;

use mixcorr::correlators::{
    g2, gn_zero_delay, gn_zero_delay_direct, uniform_grid, DetectorRole, Emitter, MixConfig,
    NormalizationMode,
};
use mixcorr::dynamics::SystemParams;

use DetectorRole::{Co, Cross};

fn emitter(rabi: f64, dephasing: f64) -> Emitter {
    Emitter::new(
        SystemParams::new(rabi, 0.45)
            .unwrap()
            .with_dephasing(dephasing)
            .unwrap(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn phase_is_two_pi_periodic(rabi in 0.1..4.0 * PI, f in 0.0..3.0f64, phi in 0.0..2.0 * PI) {
        let em = emitter(rabi, 0.0);
        let delays = uniform_grid(-3.0, 3.0, 61);
        let a = g2(&em, &MixConfig::new(f, phi).unwrap(), (Cross, Co), &delays, NormalizationMode::None).unwrap();
        let b = g2(&em, &MixConfig::new(f, phi + 2.0 * PI).unwrap(), (Cross, Co), &delays, NormalizationMode::None).unwrap();
        for (x, y) in a.raw.iter().zip(&b.raw) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-3));
        }
    }

    #[test]
    fn unnormalized_correlations_are_non_negative(
        rabi in 0.05..4.0 * PI, dephasing in 0.0..1.0f64, f in 0.0..3.0f64, phi in 0.0..2.0 * PI,
        roles in prop::sample::select(vec![(Cross, Cross), (Cross, Co), (Co, Cross), (Co, Co)]),
    ) {
        let em = emitter(rabi, dephasing);
        let delays = uniform_grid(-4.0, 4.0, 81);
        let c = g2(&em, &MixConfig::new(f, phi).unwrap(), roles, &delays, NormalizationMode::None).unwrap();
        let scale = em.intensity(roles.0, &MixConfig::new(f, phi).unwrap()) * em.intensity(roles.1, &MixConfig::new(f, phi).unwrap());
        prop_assert!(c.raw.iter().all(|v| *v >= -1e-12 * scale.max(1e-12)));
    }

    #[test]
    fn without_mixing_co_detectors_see_the_emitter(rabi in 0.05..4.0 * PI, phi in 0.0..2.0 * PI) {
        let em = emitter(rabi, 0.0);
        let mix = MixConfig::new(0.0, phi).unwrap();
        let delays = uniform_grid(-2.0, 2.0, 41);
        let cross = g2(&em, &mix, (Cross, Cross), &delays, NormalizationMode::IntensityProduct).unwrap();
        for roles in [(Co, Co), (Cross, Co), (Co, Cross)] {
            let co = g2(&em, &mix, roles, &delays, NormalizationMode::IntensityProduct).unwrap();
            prop_assert_eq!(&co.raw, &cross.raw);
        }
    }

    #[test]
    fn zero_delay_closed_form_matches_operator_powers(rabi in 0.05..4.0 * PI, f in 0.0..3.0f64, phi in 0.0..2.0 * PI, n in 1u32..6) {
        let em = emitter(rabi, 0.0);
        let mix = MixConfig::new(f, phi).unwrap();
        let closed = gn_zero_delay(n, &em, &mix).unwrap();
        let direct = gn_zero_delay_direct(n, &em, &mix).unwrap();
        prop_assert!((closed - direct).abs() <= 1e-12 * direct.abs().max(1e-6));
    }

    #[test]
    fn swapping_roles_reverses_delay(rabi in 0.05..4.0 * PI, f in 0.0..3.0f64, phi in 0.0..2.0 * PI) {
        let em = emitter(rabi, 0.0);
        let mix = MixConfig::new(f, phi).unwrap();
        let delays = uniform_grid(-3.0, 3.0, 61);
        let a = g2(&em, &mix, (Cross, Co), &delays, NormalizationMode::None).unwrap();
        let mut b = g2(&em, &mix, (Co, Cross), &delays, NormalizationMode::None).unwrap().raw;
        b.reverse();
        let scale = a.raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.raw.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn long_delays_factorize() {
    let em = emitter(0.56 * PI, 0.2);
    let mix = MixConfig::new(1.3, 2.0).unwrap();
    let c = g2(
        &em,
        &mix,
        (Co, Co),
        &[40.0, -40.0],
        NormalizationMode::IntensityProduct,
    )
    .unwrap();
    assert!(c.normalized().iter().all(|v| (v - 1.0).abs() < 1e-9));
}
