use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use mixcorr::correlators::{DetectorRole, Emitter, MixConfig, NormalizationMode};
use mixcorr::dynamics::SystemParams;
use mixcorr::sweeps::{Observable, SweepAxis, SweepParameter, SweepSpec};
use mixcorr::tagcorr::CorrelationSettings;
use mixcorr::trajectories::{DetectorChannelSpec, SimulationOptions};

use crate::config::{
    CorrelateJob, Format, G2Job, G3Job, Gn0Job, Grid, Job, SimulateJob, SweepJob, TermPair,
    TermsJob,
};
use crate::error::CliError;
use crate::units::{Angle, Rate, Time};

#[derive(Debug, Parser)]
#[command(
    name = "mixcorr",
    version,
    about = "Photon correlations of a driven two-level emitter mixed with laser light"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Format of the result files.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Random seed for stream simulation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Second-order correlation curve between two detectors.
    G2(G2Args),
    /// Additive term decomposition of the cross-co or co-co correlation.
    G2Terms(TermsArgs),
    /// Third-order correlation map over (tau12, tau13).
    G3(G3Args),
    /// Zero-delay n-th order correlation of the mixed field.
    Gn0(Gn0Args),
    /// Zero-delay observable over a two-parameter grid.
    Sweep(SweepArgs),
    /// Monte Carlo click streams written as a tag file.
    Simulate(SimulateArgs),
    /// Coincidence histogram of a tag file.
    Correlate(CorrelateArgs),
    /// Regenerate every canned figure configuration.
    Repro(ReproArgs),
    /// Replay a config.json written by an earlier run.
    Rerun(RerunArgs),
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// Rabi frequency, e.g. 0.56pi (π ns⁻¹) or 1.76/ns.
    #[arg(long, default_value = "0.56pi")]
    pub rabi: Rate,
    /// Radiative lifetime T1.
    #[arg(long, default_value = "450ps")]
    pub t1: Time,
    /// Pure dephasing rate.
    #[arg(long, default_value = "0")]
    pub dephasing: Rate,
    /// Laser detuning.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub detuning: Rate,
}

impl SystemArgs {
    pub fn params(&self) -> Result<SystemParams, CliError> {
        Ok(SystemParams::new(self.rabi.0, self.t1.ns())?
            .with_dephasing(self.dephasing.0)?
            .with_detuning(self.detuning.0)?)
    }
}

#[derive(Debug, Args)]
pub struct MixArgs {
    /// Laser mixing factor f (dimensionless).
    #[arg(long, default_value_t = 0.0)]
    pub fmix: f64,
    /// Laser phase, e.g. pi, 0.5pi, 90deg, 1.2rad.
    #[arg(long, default_value = "0")]
    pub phase: Angle,
}

impl MixArgs {
    pub fn mix(&self) -> Result<MixConfig, CliError> {
        Ok(MixConfig::new(self.fmix, self.phase.0)?)
    }
}

#[derive(Debug, Args)]
pub struct DelayArgs {
    /// First delay of the grid.
    #[arg(long, allow_hyphen_values = true)]
    pub tau_min: Option<Time>,
    /// Last delay of the grid.
    #[arg(long, allow_hyphen_values = true)]
    pub tau_max: Option<Time>,
    /// Grid points.
    #[arg(long)]
    pub points: Option<usize>,
}

impl DelayArgs {
    fn grid(&self, start: f64, stop: f64, points: usize) -> Result<Grid, CliError> {
        let grid = Grid {
            start: self.tau_min.map_or(start, Time::ns),
            stop: self.tau_max.map_or(stop, Time::ns),
            points: self.points.unwrap_or(points),
        };
        if grid.points < 2 || grid.stop <= grid.start {
            return Err(CliError::Usage(format!(
                "delay grid needs tau-max > tau-min and at least 2 points, got [{}, {}] ns with {} points",
                grid.start, grid.stop, grid.points
            )));
        }
        Ok(grid)
    }
}

#[derive(Debug, Args)]
pub struct G2Args {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub mix: MixArgs,
    #[command(flatten)]
    pub delays: DelayArgs,
    /// Detector roles, e.g. cross,co.
    #[arg(long, value_delimiter = ',', default_value = "cross,cross")]
    pub roles: Vec<DetectorRole>,
    /// intensity-product, tail or none.
    #[arg(long, default_value = "intensity-product")]
    pub norm: NormalizationMode,
    /// Gaussian instrument response FWHM, e.g. 250ps.
    #[arg(long)]
    pub irf: Option<Time>,
}

#[derive(Debug, Args)]
pub struct TermsArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub mix: MixArgs,
    #[command(flatten)]
    pub delays: DelayArgs,
    #[arg(long, value_enum, default_value = "crossco")]
    pub pair: TermPair,
    #[arg(long, default_value = "intensity-product")]
    pub norm: NormalizationMode,
}

#[derive(Debug, Args)]
pub struct G3Args {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub mix: MixArgs,
    #[command(flatten)]
    pub delays: DelayArgs,
    /// Three detector roles, e.g. cross,co,co.
    #[arg(long, value_delimiter = ',', default_value = "cross,cross,cross")]
    pub roles: Vec<DetectorRole>,
    #[arg(long, default_value = "intensity-product")]
    pub norm: NormalizationMode,
}

#[derive(Debug, Args)]
pub struct Gn0Args {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub mix: MixArgs,
    /// Correlation orders, e.g. 2,3,4.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub order: Vec<u32>,
}

/// `<parameter>:<start>:<stop>:<points>`, e.g. `rabi:0.1pi:4pi:61`.
#[derive(Debug, Clone, Copy)]
pub struct AxisArg(pub SweepAxis);

impl FromStr for AxisArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let &[name, start, stop, points] = parts.as_slice() else {
            return Err(format!("axis '{s}' must look like rabi:0.1pi:4pi:61"));
        };
        let points: usize = points
            .parse()
            .map_err(|_| format!("bad point count '{points}'"))?;
        let (parameter, start, stop) = match name.to_ascii_lowercase().as_str() {
            "fmix" | "f" => {
                let read = |v: &str| {
                    v.parse::<f64>()
                        .map_err(|_| format!("bad mixing factor '{v}'"))
                };
                (SweepParameter::FMix, read(start)?, read(stop)?)
            }
            "rabi" => (
                SweepParameter::Rabi,
                start.parse::<Rate>()?.0,
                stop.parse::<Rate>()?.0,
            ),
            "phase" => (
                SweepParameter::Phase,
                start.parse::<Angle>()?.0,
                stop.parse::<Angle>()?.0,
            ),
            other => {
                return Err(format!(
                    "unknown sweep parameter '{other}' (expected fmix, rabi or phase)"
                ))
            }
        };
        Ok(AxisArg(SweepAxis::new(parameter, start, stop, points)))
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub mix: MixArgs,
    /// Row axis.
    #[arg(long, default_value = "fmix:0:3:61")]
    pub rows: AxisArg,
    /// Column axis.
    #[arg(long, default_value = "rabi:0.1pi:4pi:61")]
    pub columns: AxisArg,
    /// crossco, coco or gn:<n>.
    #[arg(long, default_value = "crossco")]
    pub observable: Observable,
    /// Iso-contour levels.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub contour: Vec<f64>,
}

/// `cross:<w>`, `co:<w>` (LO matched to the mixing flags) or
/// `laser:<rate>` (LO only).
#[derive(Debug, Clone)]
pub enum ChannelArg {
    Cross(f64),
    Co(f64),
    Laser(Rate),
}

impl FromStr for ChannelArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, value) = s.split_once(':').ok_or_else(|| {
            format!("channel '{s}' must look like cross:0.25, co:0.25 or laser:0.5/ns")
        })?;
        let weight = || {
            value
                .parse::<f64>()
                .map_err(|_| format!("bad collection weight '{value}'"))
        };
        match kind.to_ascii_lowercase().as_str() {
            "cross" => Ok(ChannelArg::Cross(weight()?)),
            "co" => Ok(ChannelArg::Co(weight()?)),
            "laser" => Ok(ChannelArg::Laser(value.parse()?)),
            other => Err(format!(
                "unknown channel kind '{other}' (expected cross, co or laser)"
            )),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub mix: MixArgs,
    /// Detector channels in id order.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "cross:0.25,cross:0.25,co:0.25,co:0.25"
    )]
    pub channels: Vec<ChannelArg>,
    /// Total simulated time, e.g. 1ms.
    #[arg(long)]
    pub duration: Time,
    /// Length of each independent batch; default 10⁴ lifetimes.
    #[arg(long)]
    pub batch: Option<Time>,
    /// Settling time before each batch, in lifetimes.
    #[arg(long, default_value_t = 50.0)]
    pub burn_in: f64,
    /// Gaussian click jitter (standard deviation).
    #[arg(long)]
    pub jitter: Option<Time>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Tag file.
    pub input: PathBuf,
    /// Two or three channel ids, e.g. 0,1.
    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    pub channels: Vec<u8>,
    /// Histogram bin width.
    #[arg(long, default_value = "10ps")]
    pub bin: Time,
    /// Largest |delay|.
    #[arg(long, default_value = "5ns")]
    pub max_delay: Time,
    #[arg(long, default_value = "intensity-product")]
    pub norm: NormalizationMode,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    /// Coarse grids for a fast smoke run.
    #[arg(long)]
    pub quick: bool,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// A config.json from an earlier run.
    pub config: PathBuf,
}

fn fixed<const N: usize, T: Copy + std::fmt::Debug>(
    items: &[T],
    what: &str,
) -> Result<[T; N], CliError> {
    items
        .try_into()
        .map_err(|_| CliError::Usage(format!("{what} needs exactly {N} entries, got {items:?}")))
}

fn usage(message: String) -> CliError {
    CliError::Usage(message)
}

impl G2Args {
    pub fn job(&self) -> Result<Job, CliError> {
        Ok(Job::G2(G2Job {
            params: self.system.params()?,
            mix: self.mix.mix()?,
            roles: fixed(&self.roles, "--roles")?,
            delays: self.delays.grid(-5.0, 5.0, 1001)?,
            normalization: self.norm,
            irf_fwhm_ps: self.irf.map(Time::ps),
        }))
    }
}

impl TermsArgs {
    pub fn job(&self) -> Result<Job, CliError> {
        Ok(Job::G2Terms(TermsJob {
            params: self.system.params()?,
            mix: self.mix.mix()?,
            pair: self.pair,
            delays: self.delays.grid(0.0, 5.0, 501)?,
            normalization: self.norm,
        }))
    }
}

impl G3Args {
    pub fn job(&self) -> Result<Job, CliError> {
        Ok(Job::G3(G3Job {
            params: self.system.params()?,
            mix: self.mix.mix()?,
            roles: fixed(&self.roles, "--roles")?,
            delays: self.delays.grid(-5.0, 5.0, 201)?,
            normalization: self.norm,
        }))
    }
}

impl Gn0Args {
    pub fn job(&self) -> Result<Job, CliError> {
        if self.order.contains(&0) {
            return Err(usage("--order values must be at least 1".into()));
        }
        Ok(Job::Gn0(Gn0Job {
            params: self.system.params()?,
            mix: self.mix.mix()?,
            orders: self.order.clone(),
        }))
    }
}

impl SweepArgs {
    pub fn job(&self) -> Result<Job, CliError> {
        let spec = SweepSpec {
            rows: self.rows.0,
            columns: self.columns.0,
            params: self.system.params()?,
            mix: self.mix.mix()?,
            observable: self.observable,
        };
        spec.validate()?;
        Ok(Job::Sweep(SweepJob {
            spec,
            contour_levels: self.contour.clone(),
        }))
    }
}

impl SimulateArgs {
    pub fn job(&self, seed: u64) -> Result<Job, CliError> {
        let params = self.system.params()?;
        let mix = self.mix.mix()?;
        let beta = Emitter::new(params)?.beta(&mix);
        if self.channels.len() > usize::from(u8::MAX) {
            return Err(usage("too many channels".into()));
        }
        let channels = self
            .channels
            .iter()
            .enumerate()
            .map(|(id, c)| match *c {
                ChannelArg::Cross(w) => DetectorChannelSpec::cross(id as u8, w),
                ChannelArg::Co(w) => DetectorChannelSpec::mixed(id as u8, w, beta, &params),
                ChannelArg::Laser(rate) => DetectorChannelSpec::laser_only(id as u8, rate.0),
            })
            .collect();
        let whole = |t: Time| t.whole_ps().map_err(usage);
        let options = SimulationOptions {
            batch_duration_ps: self.batch.map(whole).transpose()?,
            burn_in_lifetimes: self.burn_in,
            jitter_sigma_ps: self.jitter.map(Time::ps),
        };
        Ok(Job::Simulate(SimulateJob {
            params,
            mix,
            channels,
            duration_ps: whole(self.duration)?,
            seed,
            options,
        }))
    }
}

impl CorrelateArgs {
    pub fn job(&self) -> Result<Job, CliError> {
        let whole = |t: Time| t.whole_ps().map_err(usage);
        let input = std::path::absolute(&self.input).map_err(|e| CliError::io(&self.input, e))?;
        Ok(Job::Correlate(CorrelateJob {
            input,
            channels: self.channels.clone(),
            settings: CorrelationSettings {
                normalization: self.norm,
                ..CorrelationSettings::new(whole(self.bin)?, whole(self.max_delay)?)
            },
        }))
    }
}
