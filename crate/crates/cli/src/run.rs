//! Executes a [`RunConfig`] and writes its outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use mixcorr::correlators::{
    g2, g2_terms_coco, g2_terms_crossco, g3_map, gn_zero_delay, irf_convolve, CorrelationCurve,
    DetectorRole, Emitter,
};
use mixcorr::sweeps::{iso_contour, run_sweep, SweepParameter, SweepResult};
use mixcorr::tagcorr::{correlate2, correlate3, read_tags, write_tags};
use mixcorr::trajectories::simulate_stream;

use crate::config::{
    CorrelateJob, Format, G2Job, G3Job, Gn0Job, Job, RunConfig, SimulateJob, SweepJob, TermPair,
    TermsJob, CONFIG_FILE,
};
use crate::error::CliError;

/// One line of human-readable result per run.
pub struct Report {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn put_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(mixcorr::Error::from)?;
        text.push('\n');
        self.put(name, text)
    }
}

fn e14(v: f64) -> String {
    format!("{v:.14e}")
}

pub fn execute(config: &RunConfig) -> Result<Report, CliError> {
    let dir = &config.out;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut w = Writer {
        dir,
        files: Vec::new(),
    };
    w.put_json(CONFIG_FILE, config)?;
    let summary = match &config.job {
        Job::G2(job) => run_g2(job, config.format, &mut w)?,
        Job::G2Terms(job) => run_terms(job, config.format, &mut w)?,
        Job::G3(job) => run_g3(job, config.format, &mut w)?,
        Job::Gn0(job) => run_gn0(job, config.format, &mut w)?,
        Job::Sweep(job) => run_sweep_job(job, config.format, &mut w)?,
        Job::Simulate(job) => run_simulate(job, &mut w)?,
        Job::Correlate(job) => run_correlate(job, config.format, &mut w)?,
    };
    Ok(Report {
        summary,
        files: w.files,
    })
}

fn run_g2(job: &G2Job, format: Format, w: &mut Writer) -> Result<String, CliError> {
    let emitter = Emitter::new(job.params)?;
    let curve = g2(
        &emitter,
        &job.mix,
        (job.roles[0], job.roles[1]),
        &job.delays.values(),
        job.normalization,
    )?;
    let convolved = job
        .irf_fwhm_ps
        .map(|fwhm| irf_convolve(&curve, fwhm))
        .transpose()?;
    let at_zero = |c: &CorrelationCurve| c.value_near(0.0).unwrap_or(f64::NAN);
    let mut summary = format!(
        "g2({},{})(0) = {:.6e}",
        job.roles[0],
        job.roles[1],
        at_zero(&curve)
    );
    if let Some(c) = &convolved {
        let _ = write!(summary, ", with IRF {:.6e}", at_zero(c));
    }

    match format {
        Format::Json => w.put_json(
            "g2.json",
            &json!({ "curve": curve, "irf_convolved": convolved }),
        )?,
        Format::Csv => {
            let mut out = String::from("tau_ns,raw,normalized");
            if convolved.is_some() {
                out.push_str(",normalized_irf");
            }
            out.push('\n');
            let normalized = curve.normalized();
            let smoothed = convolved.as_ref().map(|c| c.normalized());
            for (i, tau) in curve.delays.iter().enumerate() {
                let _ = write!(
                    out,
                    "{},{},{}",
                    e14(*tau),
                    e14(curve.raw[i]),
                    e14(normalized[i])
                );
                if let Some(s) = &smoothed {
                    let _ = write!(out, ",{}", e14(s[i]));
                }
                out.push('\n');
            }
            w.put("g2.csv", out)?;
        }
    }
    Ok(summary)
}

fn run_terms(job: &TermsJob, format: Format, w: &mut Writer) -> Result<String, CliError> {
    let emitter = Emitter::new(job.params)?;
    let delays = job.delays.values();
    let curve = match job.pair {
        TermPair::Crossco => g2_terms_crossco(&emitter, &job.mix, &delays, job.normalization)?,
        TermPair::Coco => g2_terms_coco(&emitter, &job.mix, &delays, job.normalization)?,
    };
    let summary = format!(
        "{:?} terms {} at tau=0: total {:.6e}",
        job.pair,
        curve
            .terms
            .iter()
            .map(|t| t.name.as_str())
            .collect::<Vec<_>>()
            .join(", "),
        curve.value_near(0.0).unwrap_or(f64::NAN)
    );

    match format {
        Format::Json => w.put_json("g2_terms.json", &curve)?,
        Format::Csv => {
            let mut out = String::from("tau_ns,total");
            for t in &curve.terms {
                let _ = write!(out, ",{}", t.name);
            }
            out.push('\n');
            let total = curve.normalized();
            let terms: Vec<Vec<f64>> = curve
                .terms
                .iter()
                .filter_map(|t| curve.term_normalized(&t.name))
                .collect();
            for (i, tau) in curve.delays.iter().enumerate() {
                let _ = write!(out, "{},{}", e14(*tau), e14(total[i]));
                for t in &terms {
                    let _ = write!(out, ",{}", e14(t[i]));
                }
                out.push('\n');
            }
            w.put("g2_terms.csv", out)?;
        }
    }
    Ok(summary)
}

/// Matrix CSV: axis values in the first row and column.
fn matrix_csv(
    corner: &str,
    rows: &[f64],
    columns: &[f64],
    value: impl Fn(usize, usize) -> f64,
) -> String {
    let mut out = String::from(corner);
    for c in columns {
        let _ = write!(out, ",{}", e14(*c));
    }
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&e14(*r));
        for j in 0..columns.len() {
            let _ = write!(out, ",{}", e14(value(i, j)));
        }
        out.push('\n');
    }
    out
}

fn run_g3(job: &G3Job, format: Format, w: &mut Writer) -> Result<String, CliError> {
    let emitter = Emitter::new(job.params)?;
    let delays = job.delays.values();
    let map = g3_map(
        &emitter,
        &job.mix,
        job.roles,
        &delays,
        &delays,
        job.normalization,
    )?;
    let n = delays.len();
    let diagonal = (0..n).map(|i| map.value(i, i));
    let corner = map.value(0, n - 1);
    let summary = format!(
        "g3({},{},{}) over {n}x{n}: diagonal max {:.6e}, corner {:.6e}",
        job.roles[0],
        job.roles[1],
        job.roles[2],
        diagonal.fold(f64::NEG_INFINITY, f64::max),
        corner
    );
    match format {
        Format::Json => w.put_json("g3.json", &map)?,
        Format::Csv => w.put(
            "g3.csv",
            matrix_csv("tau12_ns\\tau13_ns", &map.tau12, &map.tau13, |i, j| {
                map.value(i, j)
            }),
        )?,
    }
    Ok(summary)
}

/// Raw `Gⁿ(0)` and its value normalized by `<s†s>ⁿ`.
fn run_gn0(job: &Gn0Job, format: Format, w: &mut Writer) -> Result<String, CliError> {
    let emitter = Emitter::new(job.params)?;
    let intensity = emitter.intensity(DetectorRole::Co, &job.mix);
    let values = job
        .orders
        .iter()
        .map(|&n| {
            gn_zero_delay(n, &emitter, &job.mix).map(|raw| (n, raw, raw / intensity.powi(n as i32)))
        })
        .collect::<mixcorr::Result<Vec<_>>>()?;
    let summary = values
        .iter()
        .map(|(n, _, g)| format!("g{n}(0) = {g:.6e}"))
        .collect::<Vec<_>>()
        .join(", ");
    match format {
        Format::Json => {
            let rows: Vec<_> = values
                .iter()
                .map(|(n, raw, g)| json!({ "order": n, "raw": raw, "normalized": g }))
                .collect();
            w.put_json("gn0.json", &rows)?
        }
        Format::Csv => {
            let mut out = String::from("order,raw,normalized\n");
            for (n, raw, g) in &values {
                let _ = writeln!(out, "{n},{},{}", e14(*raw), e14(*g));
            }
            w.put("gn0.csv", out)?;
        }
    }
    Ok(summary)
}

fn parameter_name(p: SweepParameter) -> &'static str {
    match p {
        SweepParameter::FMix => "fmix",
        SweepParameter::Rabi => "rabi_per_ns",
        SweepParameter::Phase => "phase_rad",
    }
}

fn run_sweep_job(job: &SweepJob, format: Format, w: &mut Writer) -> Result<String, CliError> {
    let result: SweepResult = run_sweep(&job.spec)?;
    let contours: Vec<_> = job
        .contour_levels
        .iter()
        .map(|&level| (level, iso_contour(&result, level)))
        .collect();
    let summary = format!(
        "sweep {}x{}: max {:.6e}, {} quenched, {} cross-checked (worst {:.1e}), contours {}",
        result.rows.len(),
        result.columns.len(),
        result.max(),
        result.metadata.quenched_cells,
        result.metadata.crosschecked_cells,
        result.metadata.max_crosscheck_deviation,
        contours
            .iter()
            .map(|(level, lines)| format!("{level}: {} lines", lines.len()))
            .collect::<Vec<_>>()
            .join(", ")
    );

    match format {
        Format::Json => {
            let contours: Vec<_> = contours
                .iter()
                .map(|(level, lines)| json!({ "level": level, "polylines": lines }))
                .collect();
            w.put_json(
                "sweep.json",
                &json!({ "result": result, "contours": contours }),
            )?;
        }
        Format::Csv => {
            let corner = format!(
                "{}\\{}",
                parameter_name(result.row_parameter),
                parameter_name(result.column_parameter)
            );
            w.put(
                "sweep.csv",
                matrix_csv(&corner, &result.rows, &result.columns, |i, j| {
                    result.value(i, j)
                }),
            )?;
            if !contours.is_empty() {
                let mut out = format!(
                    "level,polyline,{},{}\n",
                    parameter_name(result.row_parameter),
                    parameter_name(result.column_parameter)
                );
                for (level, lines) in &contours {
                    for (k, line) in lines.iter().enumerate() {
                        for (r, c) in line {
                            let _ = writeln!(out, "{},{k},{},{}", e14(*level), e14(*r), e14(*c));
                        }
                    }
                }
                w.put("contour.csv", out)?;
            }
        }
    }
    Ok(summary)
}

fn run_simulate(job: &SimulateJob, w: &mut Writer) -> Result<String, CliError> {
    let sim = simulate_stream(
        &job.params,
        &job.channels,
        job.duration_ps,
        job.seed,
        &job.options,
    )?;
    let path = w.dir.join("clicks.qtg");
    write_tags(&sim.stream, &path)?;
    w.files.push(path);
    w.put_json("clicks.json", &sim.provenance)?;
    let counts = sim.stream.channel_counts();
    Ok(format!(
        "{} clicks over {} ps (per channel: {})",
        sim.stream.len(),
        job.duration_ps,
        counts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    ))
}

fn run_correlate(job: &CorrelateJob, format: Format, w: &mut Writer) -> Result<String, CliError> {
    let stream = read_tags(&job.input)?;
    match job.channels.as_slice() {
        &[a, b] => {
            let h = correlate2(&stream, a, b, &job.settings)?;
            let summary = format!(
                "{} coincidences in {} bins, accidentals {:.3} per bin",
                h.total_counts(),
                h.counts.len(),
                h.accidentals_per_bin
            );
            match format {
                Format::Json => w.put_json("histogram.json", &h)?,
                Format::Csv => w.put("histogram.csv", h.to_csv())?,
            }
            Ok(summary)
        }
        &[a, b, c] => {
            let h = correlate3(&stream, a, b, c, &job.settings)?;
            let summary = format!(
                "{} triple coincidences in {}x{} cells, accidentals {:.3} per cell",
                h.total_counts(),
                h.bins(),
                h.bins(),
                h.accidentals_per_cell
            );
            match format {
                Format::Json => w.put_json("histogram2d.json", &h)?,
                Format::Csv => {
                    let centers = h.bin_centers_ps();
                    let mut out = String::from("tau_ab_ps,tau_ac_ps,counts,normalized\n");
                    for (i, x) in centers.iter().enumerate() {
                        for (j, y) in centers.iter().enumerate() {
                            let _ =
                                writeln!(out, "{x},{y},{},{}", h.count(i, j), e14(h.value(i, j)));
                        }
                    }
                    w.put("histogram2d.csv", out)?;
                }
            }
            Ok(summary)
        }
        other => Err(CliError::Usage(format!(
            "correlate needs two or three channels, got {}",
            other.len()
        ))),
    }
}
