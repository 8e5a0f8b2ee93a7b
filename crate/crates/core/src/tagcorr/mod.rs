//! Time-tag files and multi-stop coincidence histograms.

mod format;
mod histogram;
mod triple;

pub use format::{
    read_tags, write_tags, FormatError, TagRecord, TagStream, HEADER_LEN, MAGIC, RECORD_LEN,
    VERSION,
};
pub use histogram::{
    correlate2, correlate2_single_pass, ChannelTotal, CorrelationSettings, HistogramResult,
    StreamingCorrelator2,
};
pub use triple::{correlate3, Histogram2dResult};
