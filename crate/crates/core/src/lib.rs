//! Chip-domain GPS L1 testbed for the reduced-complexity group-weighting
//! MMSE correlator.
//!
//! - [`prn`]: gold codes, circular correlation, worst-case delay tables
//! - [`signal`]: synthetic epochs with delayed-replica interferers
//! - [`window`]: sliding-window autocorrelation of partial correlations
//! - [`mmse`]: matched filter, group-weighting MMSE, full MMSE oracle
//! - [`harness`]: Monte-Carlo BER sweeps, gains, throughput
//! - [`io`]: config files, CSV/JSON artifacts

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod mmse;
pub mod prn;
pub mod rng;
pub mod signal;
pub mod window;

pub use error::{Error, Result};
pub use harness::{
    bench_throughput, gain_at_ber, run_point, run_sweep, wilson_interval, BerPoint, CurvePoint,
    DelaySelection, GainReport, SimConfig, ThroughputReport,
};
pub use mmse::{Detector, GroupMmseCorrelator};
pub use prn::{ChipSequence, CorrelationProfile, DelayTable, GoldCodeSpec};
pub use signal::{ChannelModel, ChannelParams, EpochSignal, InterfererSpec, NoiseSpec};
pub use window::SlidingAutocorrelation;
