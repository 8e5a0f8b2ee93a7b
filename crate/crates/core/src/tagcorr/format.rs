//! `QTG1` time-tag files.
//!
//! Layout, little-endian throughout:
//!
//! | offset | size | field                 |
//! |--------|------|-----------------------|
//! | 0      | 4    | magic `QTG1`          |
//! | 4      | 2    | version (1)           |
//! | 6      | 1    | channel count         |
//! | 7      | 4    | resolution, ps / tick |
//! | 11     | 8    | duration, ticks       |
//! | 19     | 8    | record count          |
//! | 27     | 9·n  | `(u8 channel, u64 ticks)` records, sorted |

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"QTG1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 27;
pub const RECORD_LEN: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("bad magic {0:?} (expected \"QTG1\")")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated file: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("{extra} unexpected bytes after the last record")]
    TrailingData { extra: u64 },
    #[error("records out of order at index {index}: {current} follows {previous}")]
    Unsorted {
        index: u64,
        previous: u64,
        current: u64,
    },
    #[error("record {index} uses channel {channel} but the file declares {channels} channels")]
    ChannelOutOfRange {
        index: u64,
        channel: u8,
        channels: u8,
    },
    #[error("record {index} at tick {timestamp} is not before the duration {duration}")]
    TimestampOutOfRange {
        index: u64,
        timestamp: u64,
        duration: u64,
    },
    #[error("resolution must be at least 1 ps per tick")]
    ZeroResolution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TagRecord {
    pub channel: u8,
    /// Ticks of `resolution_ps`.
    pub timestamp: u64,
}

/// Time-ordered detection events, mirroring the file contents exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagStream {
    pub channels: u8,
    pub resolution_ps: u32,
    /// Observation window `[0, duration)` in ticks.
    pub duration: u64,
    pub records: Vec<TagRecord>,
}

impl TagStream {
    pub fn new(
        channels: u8,
        resolution_ps: u32,
        duration: u64,
        records: Vec<TagRecord>,
    ) -> Result<Self, FormatError> {
        let stream = TagStream {
            channels,
            resolution_ps,
            duration,
            records,
        };
        stream.validate()?;
        Ok(stream)
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        if self.resolution_ps == 0 {
            return Err(FormatError::ZeroResolution);
        }
        let mut previous = 0;
        for (index, r) in self.records.iter().enumerate() {
            let index = index as u64;
            if r.channel >= self.channels {
                return Err(FormatError::ChannelOutOfRange {
                    index,
                    channel: r.channel,
                    channels: self.channels,
                });
            }
            if r.timestamp < previous {
                return Err(FormatError::Unsorted {
                    index,
                    previous,
                    current: r.timestamp,
                });
            }
            if r.timestamp >= self.duration {
                return Err(FormatError::TimestampOutOfRange {
                    index,
                    timestamp: r.timestamp,
                    duration: self.duration,
                });
            }
            previous = r.timestamp;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn duration_ps(&self) -> u64 {
        self.duration * u64::from(self.resolution_ps)
    }

    /// Events per channel, indexed by channel id.
    pub fn channel_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; usize::from(self.channels)];
        for r in &self.records {
            counts[usize::from(r.channel)] += 1;
        }
        counts
    }

    pub fn timestamps(&self, channel: u8) -> Vec<u64> {
        self.records
            .iter()
            .filter(|r| r.channel == channel)
            .map(|r| r.timestamp)
            .collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * self.records.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.channels);
        out.extend_from_slice(&self.resolution_ps.to_le_bytes());
        out.extend_from_slice(&self.duration.to_le_bytes());
        out.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        for r in &self.records {
            out.push(r.channel);
            out.extend_from_slice(&r.timestamp.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, FormatError> {
        let actual = bytes.len() as u64;
        if bytes.len() < HEADER_LEN {
            if bytes.len() >= 4 && bytes[..4] != MAGIC {
                return Err(FormatError::BadMagic(bytes[..4].try_into().unwrap()));
            }
            return Err(FormatError::Truncated {
                expected: HEADER_LEN as u64,
                actual,
            });
        }
        let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(FormatError::BadMagic(magic));
        }
        let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
        if version != VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let channels = bytes[6];
        let resolution_ps = u32::from_le_bytes(bytes[7..11].try_into().unwrap());
        let duration = u64::from_le_bytes(bytes[11..19].try_into().unwrap());
        let count = u64::from_le_bytes(bytes[19..27].try_into().unwrap());

        let expected = count
            .checked_mul(RECORD_LEN as u64)
            .and_then(|n| n.checked_add(HEADER_LEN as u64))
            .unwrap_or(u64::MAX);
        if actual < expected {
            return Err(FormatError::Truncated { expected, actual });
        }
        if actual > expected {
            return Err(FormatError::TrailingData {
                extra: actual - expected,
            });
        }
        let records = bytes[HEADER_LEN..]
            .chunks_exact(RECORD_LEN)
            .map(|c| TagRecord {
                channel: c[0],
                timestamp: u64::from_le_bytes(c[1..9].try_into().unwrap()),
            })
            .collect();
        TagStream::new(channels, resolution_ps, duration, records)
    }
}

pub fn write_tags(stream: &TagStream, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    stream.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&stream.encode())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_tags(path: impl AsRef<Path>) -> Result<TagStream> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    Ok(TagStream::decode(&bytes)?)
}
