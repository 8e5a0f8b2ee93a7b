//! Canned configurations for every figure, one output subdirectory each.

use std::f64::consts::PI;
use std::path::Path;

use mixcorr::correlators::{DetectorRole, MixConfig, NormalizationMode};
use mixcorr::dynamics::SystemParams;
use mixcorr::sweeps::{SweepAxis, SweepParameter, SweepSpec};

use crate::config::{
    Format, G2Job, G3Job, Gn0Job, Grid, Job, RunConfig, SweepJob, TermPair, TermsJob,
};
use crate::error::CliError;

use DetectorRole::{Co, Cross};

const T1_NS: f64 = 0.45;
const IRF_FWHM_PS: f64 = 250.0;

pub fn plan(
    out: &Path,
    format: Format,
    workers: Option<usize>,
    quick: bool,
) -> Result<Vec<RunConfig>, CliError> {
    let (curve_points, map_points, sweep_points) = if quick {
        (201, 41, 21)
    } else {
        (1001, 201, 61)
    };
    let params = |rabi_pi: f64| SystemParams::new(rabi_pi * PI, T1_NS);
    let mixed = MixConfig::new(1.0, PI)?;
    let symmetric = Grid {
        start: -5.0,
        stop: 5.0,
        points: curve_points,
    };
    let positive = Grid {
        start: 0.0,
        stop: 5.0,
        points: curve_points / 2 + 1,
    };
    let intensity = NormalizationMode::IntensityProduct;

    let mut jobs: Vec<(&str, Job)> = Vec::new();
    for (name, rabi) in [("fig2-low-drive", 0.56), ("fig2-high-drive", 3.3)] {
        jobs.push((
            name,
            Job::G2(G2Job {
                params: params(rabi)?,
                mix: MixConfig::none(),
                roles: [Cross, Cross],
                delays: symmetric,
                normalization: intensity,
                irf_fwhm_ps: Some(IRF_FWHM_PS),
            }),
        ));
    }
    for (name, roles) in [("fig3-cross-co", [Cross, Co]), ("fig3-co-co", [Co, Co])] {
        jobs.push((
            name,
            Job::G2(G2Job {
                params: params(0.3)?,
                mix: mixed,
                roles,
                delays: symmetric,
                normalization: intensity,
                irf_fwhm_ps: Some(IRF_FWHM_PS),
            }),
        ));
    }
    for (name, pair) in [
        ("fig4-cross-co-terms", TermPair::Crossco),
        ("fig4-co-co-terms", TermPair::Coco),
    ] {
        jobs.push((
            name,
            Job::G2Terms(TermsJob {
                params: params(0.3)?,
                mix: mixed,
                pair,
                delays: positive,
                normalization: intensity,
            }),
        ));
    }
    for (name, phase) in [("fig5-phase-0", 0.0), ("fig5-phase-pi", PI)] {
        let mut spec = SweepSpec::bunching_control(params(0.3)?, phase);
        spec.rows = SweepAxis::new(SweepParameter::FMix, 0.0, 3.0, sweep_points);
        spec.columns = SweepAxis::new(SweepParameter::Rabi, 0.1 * PI, 4.0 * PI, sweep_points);
        jobs.push((
            name,
            Job::Sweep(SweepJob {
                spec,
                contour_levels: vec![1.0],
            }),
        ));
    }
    let map = Grid {
        start: -5.0,
        stop: 5.0,
        points: map_points,
    };
    jobs.push((
        "fig6-cross-cross-cross",
        Job::G3(G3Job {
            params: params(0.56)?,
            mix: MixConfig::none(),
            roles: [Cross, Cross, Cross],
            delays: map,
            normalization: intensity,
        }),
    ));
    jobs.push((
        "fig6-cross-co-co",
        Job::G3(G3Job {
            params: params(0.56)?,
            mix: mixed,
            roles: [Cross, Co, Co],
            delays: map,
            normalization: NormalizationMode::None,
        }),
    ));
    jobs.push((
        "gn0-orders",
        Job::Gn0(Gn0Job {
            params: params(0.3)?,
            mix: mixed,
            orders: vec![2, 3, 4, 5],
        }),
    ));

    Ok(jobs
        .into_iter()
        .map(|(name, job)| RunConfig::new(out.join(name), format, workers, job))
        .collect())
}
