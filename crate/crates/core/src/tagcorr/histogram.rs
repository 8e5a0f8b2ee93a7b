use std::collections::VecDeque;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::format::{TagRecord, TagStream};
use crate::correlators::{Normalization, NormalizationMode, TAIL_FRACTION};
use crate::error::{Error, Result};

/// Reference events per parallel work unit.
const CHUNK_EVENTS: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSettings {
    pub bin_width_ps: u64,
    pub max_delay_ps: u64,
    pub normalization: NormalizationMode,
}

impl CorrelationSettings {
    pub fn new(bin_width_ps: u64, max_delay_ps: u64) -> Self {
        CorrelationSettings {
            bin_width_ps,
            max_delay_ps,
            normalization: NormalizationMode::IntensityProduct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelTotal {
    pub channel: u8,
    pub events: u64,
    pub rate_per_s: f64,
}

/// Coincidence histogram over `τ = t_b − t_a ∈ [−max, +max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramResult {
    pub channels: Vec<u8>,
    pub bin_width_ps: u64,
    pub max_delay_ps: u64,
    pub bin_edges_ps: Vec<i64>,
    pub counts: Vec<u64>,
    pub normalization: Normalization,
    pub totals: Vec<ChannelTotal>,
    /// Duration less twice the maximum delay.
    pub effective_duration_ps: u64,
    /// Expected counts per bin for uncorrelated streams.
    pub accidentals_per_bin: f64,
}

impl HistogramResult {
    pub fn bin_centers_ps(&self) -> Vec<f64> {
        self.bin_edges_ps
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]) as f64)
            .collect()
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| self.normalization.apply(c as f64))
            .collect()
    }

    /// Poisson standard error of each normalized bin.
    pub fn normalized_sigma(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| self.normalization.apply((c as f64).sqrt()))
            .collect()
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center_ps,counts,normalized\n");
        for ((center, count), value) in self
            .bin_centers_ps()
            .iter()
            .zip(&self.counts)
            .zip(self.normalized())
        {
            let _ = writeln!(out, "{center},{count},{value:.14e}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Event {
    pub t: u64,
    /// Position in the record order; breaks ties at equal timestamps.
    pub seq: u64,
}

/// Bin layout in ticks.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Geometry {
    pub max: u64,
    pub width: u64,
    pub bins: usize,
    pub duration: u64,
    pub resolution_ps: u64,
}

impl Geometry {
    pub fn new(
        stream_duration: u64,
        resolution_ps: u32,
        settings: &CorrelationSettings,
    ) -> Result<Self> {
        let res = u64::from(resolution_ps);
        let (w, m) = (settings.bin_width_ps, settings.max_delay_ps);
        if w == 0 || m == 0 {
            return Err(Error::InvalidParameter(
                "bin width and maximum delay must be positive".into(),
            ));
        }
        if w % res != 0 || m % res != 0 {
            return Err(Error::InvalidParameter(format!(
                "bin width {w} ps and maximum delay {m} ps must be multiples of the {res} ps resolution"
            )));
        }
        let (width, max) = (w / res, m / res);
        if (2 * max) % width != 0 {
            return Err(Error::InvalidParameter(format!(
                "bin width {w} ps does not divide twice the maximum delay ({} ps)",
                2 * m
            )));
        }
        if stream_duration <= 2 * max {
            return Err(Error::InvalidParameter(format!(
                "stream duration ({} ps) must exceed twice the maximum delay",
                stream_duration * res
            )));
        }
        Ok(Geometry {
            max,
            width,
            bins: (2 * max / width) as usize,
            duration: stream_duration,
            resolution_ps: res,
        })
    }

    /// Bin of `t_b − t_a`. Zero lag counts as positive when `b` follows `a`
    /// in record order, which makes channel exchange an exact reversal.
    #[inline]
    pub fn bin(&self, a: Event, b: Event) -> usize {
        // Positive bins are right-closed, negative bins left-closed.
        let x = b.t + self.max - a.t;
        let bin = match b.t.cmp(&a.t) {
            std::cmp::Ordering::Greater => x.div_ceil(self.width) - 1,
            std::cmp::Ordering::Less => x / self.width,
            std::cmp::Ordering::Equal if b.seq > a.seq => x / self.width,
            std::cmp::Ordering::Equal => x.div_ceil(self.width) - 1,
        };
        bin as usize
    }

    /// Pair midpoint lies at least `max` from both stream edges.
    #[inline]
    pub fn admits(&self, a: Event, b: Event) -> bool {
        let s = a.t + b.t;
        s >= 2 * self.max && s < 2 * (self.duration - self.max)
    }

    pub fn edges_ps(&self) -> Vec<i64> {
        let (m, w, r) = (
            self.max as i64,
            self.width as i64,
            self.resolution_ps as i64,
        );
        (0..=self.bins as i64).map(|k| (k * w - m) * r).collect()
    }

    pub fn effective_duration(&self) -> u64 {
        self.duration - 2 * self.max
    }

    /// Bin indices whose centers lie in the outer tail fraction of the span.
    pub fn tail_bins(&self) -> Vec<bool> {
        let cutoff = (1.0 - TAIL_FRACTION) * self.max as f64;
        (0..self.bins)
            .map(|k| ((k as f64 + 0.5) * self.width as f64 - self.max as f64).abs() >= cutoff)
            .collect()
    }

    pub fn rate_per_s(&self, events: u64) -> f64 {
        events as f64 / (self.duration as f64 * self.resolution_ps as f64 * 1e-12)
    }
}

pub(crate) fn events(stream: &TagStream, channel: u8) -> Vec<Event> {
    stream
        .records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.channel == channel)
        .map(|(i, r)| Event {
            t: r.timestamp,
            seq: i as u64,
        })
        .collect()
}

pub(crate) fn check_channels(stream_channels: u8, counts: &[u64], used: &[u8]) -> Result<()> {
    for &ch in used {
        if ch >= stream_channels {
            return Err(Error::InvalidParameter(format!(
                "channel {ch} not present (stream has {stream_channels} channels)"
            )));
        }
    }
    if used.iter().any(|&ch| counts[usize::from(ch)] == 0) {
        let counts = used
            .iter()
            .map(|&ch| (ch, counts[usize::from(ch)]))
            .collect::<Vec<_>>();
        return Err(Error::EmptyChannel { counts });
    }
    Ok(())
}

/// Multi-stop counting of every partner within `±max` of each reference.
fn accumulate(refs: &[Event], partners: &[Event], same: bool, g: &Geometry, hist: &mut [u64]) {
    let Some(first) = refs.first() else { return };
    let mut lo = partners.partition_point(|b| b.t + g.max < first.t);
    for &a in refs {
        while lo < partners.len() && partners[lo].t + g.max < a.t {
            lo += 1;
        }
        let end = a.t + g.max;
        for &b in partners[lo..].iter().take_while(|b| b.t <= end) {
            if same && b.seq == a.seq {
                continue;
            }
            if g.admits(a, b) {
                hist[g.bin(a, b)] += 1;
            }
        }
    }
}

fn finish(
    g: &Geometry,
    channels: (u8, u8),
    totals: (u64, u64),
    counts: Vec<u64>,
    mode: NormalizationMode,
) -> Result<HistogramResult> {
    let (ra, rb) = (
        totals.0 as f64 / g.duration as f64,
        totals.1 as f64 / g.duration as f64,
    );
    let accidentals = ra * rb * g.width as f64 * g.effective_duration() as f64;
    let tail = g.tail_bins();
    let normalization = Normalization::resolve(mode, accidentals, || {
        let window: Vec<f64> = counts
            .iter()
            .zip(&tail)
            .filter(|(_, t)| **t)
            .map(|(c, _)| *c as f64)
            .collect();
        crate::correlators::tail_window_mean(&window)
    })?;
    Ok(HistogramResult {
        channels: vec![channels.0, channels.1],
        bin_width_ps: g.width * g.resolution_ps,
        max_delay_ps: g.max * g.resolution_ps,
        bin_edges_ps: g.edges_ps(),
        counts,
        normalization,
        totals: vec![
            ChannelTotal {
                channel: channels.0,
                events: totals.0,
                rate_per_s: g.rate_per_s(totals.0),
            },
            ChannelTotal {
                channel: channels.1,
                events: totals.1,
                rate_per_s: g.rate_per_s(totals.1),
            },
        ],
        effective_duration_ps: g.effective_duration() * g.resolution_ps,
        accidentals_per_bin: accidentals,
    })
}

fn prepare(
    stream: &TagStream,
    a: u8,
    b: u8,
    settings: &CorrelationSettings,
) -> Result<(Geometry, Vec<Event>, Vec<Event>)> {
    let g = Geometry::new(stream.duration, stream.resolution_ps, settings)?;
    check_channels(stream.channels, &stream.channel_counts(), &[a, b])?;
    let ea = events(stream, a);
    let eb = if a == b {
        ea.clone()
    } else {
        events(stream, b)
    };
    Ok((g, ea, eb))
}

/// Two-channel coincidence histogram, reference events split across the
/// rayon pool in contiguous chunks.
pub fn correlate2(
    stream: &TagStream,
    ch_a: u8,
    ch_b: u8,
    settings: &CorrelationSettings,
) -> Result<HistogramResult> {
    let (g, ea, eb) = prepare(stream, ch_a, ch_b, settings)?;
    let same = ch_a == ch_b;
    let counts = ea
        .par_chunks(CHUNK_EVENTS)
        .fold(
            || vec![0u64; g.bins],
            |mut hist, chunk| {
                accumulate(chunk, &eb, same, &g, &mut hist);
                hist
            },
        )
        .reduce(
            || vec![0u64; g.bins],
            |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            },
        );
    finish(
        &g,
        (ch_a, ch_b),
        (ea.len() as u64, eb.len() as u64),
        counts,
        settings.normalization,
    )
}

/// Same histogram from one sequential pass on the calling thread.
pub fn correlate2_single_pass(
    stream: &TagStream,
    ch_a: u8,
    ch_b: u8,
    settings: &CorrelationSettings,
) -> Result<HistogramResult> {
    let (g, ea, eb) = prepare(stream, ch_a, ch_b, settings)?;
    let mut counts = vec![0u64; g.bins];
    accumulate(&ea, &eb, ch_a == ch_b, &g, &mut counts);
    finish(
        &g,
        (ch_a, ch_b),
        (ea.len() as u64, eb.len() as u64),
        counts,
        settings.normalization,
    )
}

/// Incremental `correlate2` over a stream delivered in arbitrary pieces.
///
/// Partner events are retained only as long as a pending reference event can
/// still reach them, so memory stays bounded by the coincidence window.
#[derive(Debug, Clone)]
pub struct StreamingCorrelator2 {
    geometry: Geometry,
    channels: u8,
    ch_a: u8,
    ch_b: u8,
    mode: NormalizationMode,
    pending: VecDeque<Event>,
    partners: VecDeque<Event>,
    counts: Vec<u64>,
    totals: (u64, u64),
    next_seq: u64,
    last_t: u64,
}

impl StreamingCorrelator2 {
    /// `channels`, `resolution_ps` and `duration` are the stream header values.
    pub fn new(
        channels: u8,
        resolution_ps: u32,
        duration: u64,
        ch_a: u8,
        ch_b: u8,
        settings: &CorrelationSettings,
    ) -> Result<Self> {
        let geometry = Geometry::new(duration, resolution_ps, settings)?;
        for ch in [ch_a, ch_b] {
            if ch >= channels {
                return Err(Error::InvalidParameter(format!(
                    "channel {ch} not present (stream has {channels} channels)"
                )));
            }
        }
        Ok(StreamingCorrelator2 {
            geometry,
            channels,
            ch_a,
            ch_b,
            mode: settings.normalization,
            pending: VecDeque::new(),
            partners: VecDeque::new(),
            counts: vec![0; geometry.bins],
            totals: (0, 0),
            next_seq: 0,
            last_t: 0,
        })
    }

    pub fn push(&mut self, records: &[TagRecord]) -> Result<()> {
        for r in records {
            let index = self.next_seq;
            if r.channel >= self.channels {
                return Err(super::FormatError::ChannelOutOfRange {
                    index,
                    channel: r.channel,
                    channels: self.channels,
                }
                .into());
            }
            if r.timestamp < self.last_t {
                return Err(super::FormatError::Unsorted {
                    index,
                    previous: self.last_t,
                    current: r.timestamp,
                }
                .into());
            }
            if r.timestamp >= self.geometry.duration {
                return Err(super::FormatError::TimestampOutOfRange {
                    index,
                    timestamp: r.timestamp,
                    duration: self.geometry.duration,
                }
                .into());
            }
            self.last_t = r.timestamp;
            self.next_seq += 1;
            let e = Event {
                t: r.timestamp,
                seq: index,
            };
            if r.channel == self.ch_a {
                self.pending.push_back(e);
                self.totals.0 += 1;
            }
            if r.channel == self.ch_b {
                self.partners.push_back(e);
                self.totals.1 += 1;
            }
        }
        // A reference is complete once a strictly later timestamp has arrived
        // beyond its window.
        while let Some(&a) = self.pending.front() {
            if a.t + self.geometry.max >= self.last_t {
                break;
            }
            self.process(a);
            self.pending.pop_front();
        }
        Ok(())
    }

    fn process(&mut self, a: Event) {
        while self
            .partners
            .front()
            .is_some_and(|b| b.t + self.geometry.max < a.t)
        {
            self.partners.pop_front();
        }
        let partners = self.partners.make_contiguous();
        accumulate(
            &[a],
            partners,
            self.ch_a == self.ch_b,
            &self.geometry,
            &mut self.counts,
        );
    }

    pub fn finish(mut self) -> Result<HistogramResult> {
        while let Some(a) = self.pending.pop_front() {
            self.process(a);
        }
        if self.totals.0 == 0 || self.totals.1 == 0 {
            let mut counts = vec![(self.ch_a, self.totals.0)];
            if self.ch_b != self.ch_a {
                counts.push((self.ch_b, self.totals.1));
            }
            return Err(Error::EmptyChannel { counts });
        }
        finish(
            &self.geometry,
            (self.ch_a, self.ch_b),
            self.totals,
            self.counts,
            self.mode,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(records: &[(u8, u64)], duration: u64) -> TagStream {
        let records = records
            .iter()
            .map(|&(channel, timestamp)| TagRecord { channel, timestamp })
            .collect();
        TagStream::new(2, 1, duration, records).unwrap()
    }

    #[test]
    fn zero_lag_tie_breaks_by_record_order() {
        let s = stream(&[(0, 500), (1, 500)], 1000);
        let settings = CorrelationSettings::new(10, 100);
        let ab = correlate2(&s, 0, 1, &settings).unwrap();
        let ba = correlate2(&s, 1, 0, &settings).unwrap();
        assert_eq!(ab.counts[10], 1);
        assert_eq!(ba.counts[9], 1);
    }

    #[test]
    fn single_pair_lands_in_its_bin() {
        let s = stream(&[(0, 400), (1, 437)], 1000);
        let h = correlate2(&s, 0, 1, &CorrelationSettings::new(10, 100)).unwrap();
        assert_eq!(h.total_counts(), 1);
        assert_eq!(h.counts[13], 1);
        assert_eq!(h.bin_edges_ps[13], 30);
        assert_eq!(h.bin_edges_ps.len(), 21);
    }

    #[test]
    fn pairs_near_edges_follow_midpoint_rule() {
        // Midpoint 75 < max=100: excluded.
        let s = stream(&[(0, 50), (1, 100)], 1000);
        let h = correlate2(&s, 0, 1, &CorrelationSettings::new(10, 100)).unwrap();
        assert_eq!(h.total_counts(), 0);
        let s = stream(&[(0, 50), (1, 150)], 1000);
        let h = correlate2(&s, 0, 1, &CorrelationSettings::new(10, 100)).unwrap();
        assert_eq!(h.total_counts(), 1);
        assert_eq!(h.counts[19], 1);
    }

    #[test]
    fn autocorrelation_skips_only_self_pairs() {
        let s = stream(&[(0, 500), (0, 500), (0, 530)], 1000);
        let h = correlate2(&s, 0, 0, &CorrelationSettings::new(10, 100)).unwrap();
        assert_eq!(h.total_counts(), 6);
        assert_eq!(h.counts[9] + h.counts[10], 2);
    }

    #[test]
    fn rejects_bad_geometry_and_empty_channels() {
        let s = stream(&[(0, 1)], 1000);
        assert!(correlate2(&s, 0, 0, &CorrelationSettings::new(30, 100)).is_err());
        assert!(correlate2(&s, 0, 0, &CorrelationSettings::new(10, 600)).is_err());
        assert!(correlate2(&s, 0, 5, &CorrelationSettings::new(10, 100)).is_err());
        match correlate2(&s, 0, 1, &CorrelationSettings::new(10, 100)) {
            Err(Error::EmptyChannel { counts }) => assert_eq!(counts, vec![(0, 1), (1, 0)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn odd_half_width_puts_zero_in_the_middle_bin() {
        let s = stream(&[(0, 500), (1, 500)], 1000);
        let ab = correlate2(&s, 0, 1, &CorrelationSettings::new(10, 95)).unwrap();
        let ba = correlate2(&s, 1, 0, &CorrelationSettings::new(10, 95)).unwrap();
        assert_eq!(ab.counts.len(), 19);
        assert_eq!(ab.counts[9], 1);
        assert_eq!(ba.counts[9], 1);
    }

    #[test]
    fn csv_has_one_row_per_bin() {
        let s = stream(&[(0, 400), (1, 437)], 1000);
        let h = correlate2(&s, 0, 1, &CorrelationSettings::new(10, 100)).unwrap();
        let csv = h.to_csv();
        assert_eq!(csv.lines().count(), 21);
        assert!(csv.lines().nth(14).unwrap().starts_with("35,1,"));
    }
}
