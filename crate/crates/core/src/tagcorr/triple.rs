use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::format::TagStream;
use super::histogram::{
    check_channels, events, ChannelTotal, CorrelationSettings, Event, Geometry,
};
use crate::correlators::{Normalization, TAIL_FRACTION};
use crate::error::Result;

const CHUNK_EVENTS: usize = 1 << 12;

/// Triple-coincidence histogram over `(τ_ab, τ_ac)`, rows along `τ_ab`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2dResult {
    pub channels: Vec<u8>,
    pub bin_width_ps: u64,
    pub max_delay_ps: u64,
    /// Shared by both axes.
    pub bin_edges_ps: Vec<i64>,
    /// Row-major.
    pub counts: Vec<u64>,
    pub normalization: Normalization,
    pub totals: Vec<ChannelTotal>,
    pub effective_duration_ps: u64,
    pub accidentals_per_cell: f64,
}

impl Histogram2dResult {
    pub fn bins(&self) -> usize {
        self.bin_edges_ps.len() - 1
    }

    pub fn count(&self, row: usize, column: usize) -> u64 {
        self.counts[row * self.bins() + column]
    }

    pub fn value(&self, row: usize, column: usize) -> f64 {
        self.normalization.apply(self.count(row, column) as f64)
    }

    pub fn bin_centers_ps(&self) -> Vec<f64> {
        self.bin_edges_ps
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]) as f64)
            .collect()
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn accumulate(refs: &[Event], eb: &[Event], ec: &[Event], g: &Geometry, hist: &mut [u64]) {
    let Some(first) = refs.first() else { return };
    let start = |list: &[Event]| list.partition_point(|e| e.t + g.max < first.t);
    let (mut lb, mut lc) = (start(eb), start(ec));
    for &a in refs {
        if a.t < g.max || a.t >= g.duration - g.max {
            continue;
        }
        while lb < eb.len() && eb[lb].t + g.max < a.t {
            lb += 1;
        }
        while lc < ec.len() && ec[lc].t + g.max < a.t {
            lc += 1;
        }
        let end = a.t + g.max;
        for &b in eb[lb..].iter().take_while(|e| e.t <= end) {
            if b.seq == a.seq {
                continue;
            }
            let row = g.bin(a, b) * g.bins;
            for &c in ec[lc..].iter().take_while(|e| e.t <= end) {
                if c.seq == a.seq || c.seq == b.seq {
                    continue;
                }
                hist[row + g.bin(a, c)] += 1;
            }
        }
    }
}

/// Three-channel coincidence histogram. Reference events are restricted to
/// `[max, duration − max)` so every window is complete.
pub fn correlate3(
    stream: &TagStream,
    ch_a: u8,
    ch_b: u8,
    ch_c: u8,
    settings: &CorrelationSettings,
) -> Result<Histogram2dResult> {
    let g = Geometry::new(stream.duration, stream.resolution_ps, settings)?;
    let counts_per_channel = stream.channel_counts();
    check_channels(stream.channels, &counts_per_channel, &[ch_a, ch_b, ch_c])?;
    let (ea, eb, ec) = (
        events(stream, ch_a),
        events(stream, ch_b),
        events(stream, ch_c),
    );
    let cells = g.bins * g.bins;

    let counts = ea
        .par_chunks(CHUNK_EVENTS)
        .fold(
            || vec![0u64; cells],
            |mut hist, chunk| {
                accumulate(chunk, &eb, &ec, &g, &mut hist);
                hist
            },
        )
        .reduce(
            || vec![0u64; cells],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            },
        );

    let rates = [&ea, &eb, &ec].map(|e| e.len() as f64 / g.duration as f64);
    let accidentals =
        rates.iter().product::<f64>() * (g.width * g.width) as f64 * g.effective_duration() as f64;
    let normalization = Normalization::resolve(settings.normalization, accidentals, || {
        let cutoff = (1.0 - TAIL_FRACTION) * g.max as f64;
        let center = |k: usize| (k as f64 + 0.5) * g.width as f64 - g.max as f64;
        let mut window = Vec::new();
        for i in 0..g.bins {
            for j in 0..g.bins {
                let (x, y) = (center(i), center(j));
                if x.abs() >= cutoff && y.abs() >= cutoff && (y - x).abs() >= cutoff {
                    window.push(counts[i * g.bins + j] as f64);
                }
            }
        }
        crate::correlators::tail_window_mean(&window)
    })?;

    let totals = [(ch_a, &ea), (ch_b, &eb), (ch_c, &ec)]
        .iter()
        .map(|(channel, e)| ChannelTotal {
            channel: *channel,
            events: e.len() as u64,
            rate_per_s: g.rate_per_s(e.len() as u64),
        })
        .collect();

    Ok(Histogram2dResult {
        channels: vec![ch_a, ch_b, ch_c],
        bin_width_ps: g.width * g.resolution_ps,
        max_delay_ps: g.max * g.resolution_ps,
        bin_edges_ps: g.edges_ps(),
        counts,
        normalization,
        totals,
        effective_duration_ps: g.effective_duration() * g.resolution_ps,
        accidentals_per_cell: accidentals,
    })
}
