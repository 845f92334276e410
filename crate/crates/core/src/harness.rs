//! Monte-Carlo BER-vs-ISR harness.
//!
//! A point simulates `n_bits` navigation bits (20 epochs each) of one channel
//! against up to three delayed-replica interferers and counts bit errors
//! after warm-up. Every random draw is keyed by `(seed, isr, detector)` and
//! an epoch or bit counter, so results do not depend on scheduling.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::mmse::{sign, Detector, GroupMmseCorrelator};
use crate::prn::{build_delay_table, generate_gold_code, GoldCodeSpec};
use crate::rng;
use crate::signal::{
    ChannelModel, ChannelParams, InterfererSpec, NoiseSpec, EPOCHS_PER_BIT, MAX_INTERFERERS,
};

/// Padded epoch length for GPS C/A.
pub const EPOCH_LEN: usize = 1024;

/// Group size / window length pairs recommended for the real-time receiver.
pub const RECOMMENDED_PAIRS: [(usize, usize); 7] = [
    (1, 1500),
    (2, 1000),
    (4, 1000),
    (8, 1000),
    (16, 500),
    (32, 600),
    (64, 300),
];

/// Interferer delays: explicit, or the strongest entries of the delay table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DelaySelection {
    Auto,
    Explicit(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub sv: u32,
    pub g: usize,
    pub window_l: usize,
    pub detectors: Vec<Detector>,
    pub isr_db: Vec<f64>,
    pub n_bits: u64,
    pub n_interferers: usize,
    pub interferer_delays: DelaySelection,
    /// Per-interferer bit boundary offsets in epochs; empty means all zero.
    pub bit_epoch_offsets: Vec<u64>,
    pub noise_var: f64,
    pub solve_stride: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            sv: 1,
            g: 64,
            window_l: 300,
            detectors: vec![Detector::Mf, Detector::Mmse],
            isr_db: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0],
            n_bits: 100_000,
            n_interferers: 1,
            interferer_delays: DelaySelection::Auto,
            bit_epoch_offsets: Vec::new(),
            noise_var: 0.0,
            solve_stride: 1,
        }
    }
}

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl SimConfig {
    /// Checks every invariant, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        if !(1..=crate::prn::GPS_CODE_COUNT).contains(&self.sv) {
            return Err(config_err(
                "sv",
                format!("{} is not a GPS code id (1..=32)", self.sv),
            ));
        }
        if self.g == 0 || !self.g.is_power_of_two() || EPOCH_LEN % self.g != 0 {
            return Err(config_err(
                "g",
                format!("{} must divide {EPOCH_LEN}", self.g),
            ));
        }
        if self.window_l == 0 {
            return Err(config_err("window_l", "must be at least 1"));
        }
        if self.detectors.is_empty() {
            return Err(config_err("detectors", "at least one detector is required"));
        }
        if self.isr_db.is_empty() {
            return Err(config_err("isr_db", "grid must not be empty"));
        }
        if self.isr_db.iter().any(|x| !x.is_finite()) {
            return Err(config_err("isr_db", "values must be finite"));
        }
        if self.n_bits == 0 {
            return Err(config_err("n_bits", "must be at least 1"));
        }
        if self.detectors.contains(&Detector::Mmse) && self.n_bits <= self.warmup_bits() {
            return Err(config_err(
                "n_bits",
                format!(
                    "{} bits leave nothing after the {}-bit MMSE warm-up",
                    self.n_bits,
                    self.warmup_bits()
                ),
            ));
        }
        if self.n_interferers > MAX_INTERFERERS {
            return Err(config_err(
                "n_interferers",
                format!(
                    "{} exceeds the limit of {MAX_INTERFERERS}",
                    self.n_interferers
                ),
            ));
        }
        if let DelaySelection::Explicit(delays) = &self.interferer_delays {
            if delays.len() != self.n_interferers {
                return Err(config_err(
                    "interferer_delays",
                    format!(
                        "{} delays for {} interferers",
                        delays.len(),
                        self.n_interferers
                    ),
                ));
            }
            if let Some(d) = delays.iter().find(|&&d| d == 0 || d >= EPOCH_LEN - 1) {
                return Err(config_err(
                    "interferer_delays",
                    format!("delay {d} must be in [1, {}]", EPOCH_LEN - 2),
                ));
            }
        }
        if !self.bit_epoch_offsets.is_empty() {
            if self.bit_epoch_offsets.len() != self.n_interferers {
                return Err(config_err(
                    "bit_epoch_offsets",
                    format!(
                        "{} offsets for {} interferers",
                        self.bit_epoch_offsets.len(),
                        self.n_interferers
                    ),
                ));
            }
            if let Some(o) = self
                .bit_epoch_offsets
                .iter()
                .find(|&&o| o >= EPOCHS_PER_BIT)
            {
                return Err(config_err(
                    "bit_epoch_offsets",
                    format!("offset {o} must be below {EPOCHS_PER_BIT}"),
                ));
            }
        }
        if !(self.noise_var >= 0.0) || !self.noise_var.is_finite() {
            return Err(config_err("noise_var", "must be finite and nonnegative"));
        }
        if self.solve_stride == 0 {
            return Err(config_err("solve_stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Bits discarded while the MMSE window fills: `ceil(L / 20)`.
    pub fn warmup_bits(&self) -> u64 {
        (self.window_l as u64).div_ceil(EPOCHS_PER_BIT)
    }

    /// Interferer delays after resolving `Auto` against the SV's delay table.
    pub fn resolved_delays(&self) -> Result<Vec<usize>> {
        match &self.interferer_delays {
            DelaySelection::Explicit(d) => Ok(d.clone()),
            DelaySelection::Auto if self.n_interferers == 0 => Ok(Vec::new()),
            DelaySelection::Auto => {
                Ok(
                    build_delay_table(&GoldCodeSpec::gps_l1_ca(), self.sv, self.n_interferers)?
                        .delays()
                        .collect(),
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub isr_db: f64,
    pub detector: Detector,
    pub g: usize,
    pub window_l: usize,
    pub n_interferers: usize,
    pub bits_counted: u64,
    pub errors: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    /// Weight solves that needed a ridge. Diagnostic only.
    pub regularized_solves: u64,
}

impl BerPoint {
    pub fn new(
        isr_db: f64,
        detector: Detector,
        config: &SimConfig,
        bits_counted: u64,
        errors: u64,
    ) -> Self {
        let (ci_low, ci_high) = wilson_interval(errors, bits_counted, 0.95);
        Self {
            isr_db,
            detector,
            g: config.g,
            window_l: config.window_l,
            n_interferers: config.n_interferers,
            bits_counted,
            errors,
            ber: errors as f64 / bits_counted as f64,
            ci_low,
            ci_high,
            seed: config.seed,
            regularized_solves: 0,
        }
    }
}

/// Key for all random streams of one point.
fn point_key(seed: u64, isr_db: f64, detector: Detector) -> u64 {
    rng::derive(rng::derive(seed, isr_db.to_bits()), detector.stream_label())
}

/// One channel wired to one correlator.
pub struct ChannelPipeline {
    model: ChannelModel,
    mmse: Option<GroupMmseCorrelator>,
    buf: Vec<f64>,
}

impl ChannelPipeline {
    pub fn new(config: &SimConfig, isr_db: f64, detector: Detector) -> Result<Self> {
        config.validate()?;
        let key = point_key(config.seed, isr_db, detector);
        let code = generate_gold_code(&GoldCodeSpec::gps_l1_ca(), config.sv)?;
        let channel = ChannelParams {
            code,
            power: 1.0,
            bit_seed: rng::derive(key, 1),
        };
        let interferers: Vec<InterfererSpec> = config
            .resolved_delays()?
            .into_iter()
            .enumerate()
            .map(|(j, delay)| InterfererSpec {
                delay,
                isr_db,
                bit_epoch_offset: config.bit_epoch_offsets.get(j).copied().unwrap_or(0),
                polarity_seed: rng::derive(key, 16 + j as u64),
            })
            .collect();
        let noise = NoiseSpec {
            variance: config.noise_var,
            seed: rng::derive(key, 2),
        };
        let model = ChannelModel::new(channel, &interferers, noise)?;
        let mmse = match detector {
            Detector::Mf => None,
            Detector::Mmse => Some(GroupMmseCorrelator::new(
                model.len(),
                config.g,
                config.window_l,
                model.power(),
                config.solve_stride,
            )?),
        };
        Ok(Self {
            buf: vec![0.0; model.len()],
            model,
            mmse,
        })
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn correlator(&self) -> Option<&GroupMmseCorrelator> {
        self.mmse.as_ref()
    }

    /// Synthesizes and correlates one epoch; returns `(d, true_bit)`.
    pub fn step(&mut self, epoch: u64) -> Result<(f64, i8)> {
        let bit = self.model.synthesize_into(epoch, &mut self.buf);
        let s0 = self.model.replica();
        let d = match &mut self.mmse {
            None => self.buf.iter().zip(s0).map(|(r, s)| r * s).sum(),
            Some(corr) => corr.process(&self.buf, s0)?.d,
        };
        Ok((d, bit))
    }
}

/// Simulates one `(isr, detector)` point.
pub fn run_point(config: &SimConfig, isr_db: f64, detector: Detector) -> Result<BerPoint> {
    let mut pipeline = ChannelPipeline::new(config, isr_db, detector)?;
    let warmup = match detector {
        Detector::Mf => 0,
        Detector::Mmse => config.warmup_bits(),
    };
    let mut errors = 0u64;
    for bit_index in 0..config.n_bits {
        let mut sum = 0.0;
        let mut truth = 0;
        for k in 0..EPOCHS_PER_BIT {
            let epoch = bit_index * EPOCHS_PER_BIT + k;
            let (d, bit) = pipeline.step(epoch).map_err(|e| Error::PointAborted {
                epoch,
                regularized: pipeline.correlator().map_or(0, |c| c.regularized_solves()),
                source: Box::new(e),
            })?;
            sum += d;
            truth = bit;
        }
        if bit_index >= warmup && sign(sum) != truth {
            errors += 1;
        }
    }
    let mut point = BerPoint::new(isr_db, detector, config, config.n_bits - warmup, errors);
    point.regularized_solves = pipeline.correlator().map_or(0, |c| c.regularized_solves());
    Ok(point)
}

/// Runs every `(detector, isr)` point, ordered by detector then ascending ISR.
///
/// `threads = 0` uses rayon's default pool size.
pub fn run_sweep(config: &SimConfig, threads: usize) -> Result<Vec<BerPoint>> {
    config.validate()?;
    let mut detectors = config.detectors.clone();
    detectors.sort();
    detectors.dedup();
    let mut grid = config.isr_db.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let tasks: Vec<(Detector, f64)> = detectors
        .iter()
        .flat_map(|&d| grid.iter().map(move |&isr| (d, isr)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| {
        tasks
            .par_iter()
            .map(|&(detector, isr)| run_point(config, isr, detector))
            .collect()
    })
}

fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Wilson score interval for `errors` successes out of `n` trials.
pub fn wilson_interval(errors: u64, n: u64, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = normal_quantile(0.5 + confidence / 2.0);
    let n_f = n as f64;
    let p = errors as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    let lo = if errors == 0 {
        0.0
    } else {
        (center - half).clamp(0.0, p)
    };
    let hi = if errors == n {
        1.0
    } else {
        (center + half).clamp(p, 1.0)
    };
    (lo, hi)
}

/// One BER curve point as seen by the gain computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub isr_db: f64,
    pub ber: f64,
    pub bits: u64,
}

impl From<&BerPoint> for CurvePoint {
    fn from(p: &BerPoint) -> Self {
        Self {
            isr_db: p.isr_db,
            ber: p.ber,
            bits: p.bits_counted,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainReport {
    pub target_ber: f64,
    pub curve_a: String,
    pub curve_b: String,
    /// ISR at which each curve first rises through the target.
    pub isr_a: Option<f64>,
    pub isr_b: Option<f64>,
    /// `isr_b - isr_a`, or `None` when either curve never crosses.
    pub gain_db: Option<f64>,
}

/// ISR at which `log10(ber)` first rises through `log10(target)`, by linear
/// interpolation between grid points.
///
/// A zero-BER point stands in as `0.5 / bits`; if that is not below the
/// target the crossing is placed at the next grid point. A curve already at
/// or above the target at its first point has no observed crossing.
pub fn crossing_isr(curve: &[CurvePoint], target_ber: f64) -> Option<f64> {
    let mut pts = curve.to_vec();
    pts.sort_by(|a, b| a.isr_db.total_cmp(&b.isr_db));
    let i = pts.iter().position(|p| p.ber >= target_ber)?;
    if i == 0 {
        return None;
    }
    let (lo, hi) = (pts[i - 1], pts[i]);
    let lo_ber = if lo.ber > 0.0 {
        lo.ber
    } else {
        0.5 / lo.bits.max(1) as f64
    };
    if lo_ber >= target_ber || hi.ber == target_ber {
        return Some(hi.isr_db);
    }
    let (y0, y1, yt) = (lo_ber.log10(), hi.ber.log10(), target_ber.log10());
    Some(lo.isr_db + (yt - y0) / (y1 - y0) * (hi.isr_db - lo.isr_db))
}

/// ISR advantage of curve `b` over curve `a` at `target_ber`.
pub fn gain_at_ber(
    curve_a: (&str, &[CurvePoint]),
    curve_b: (&str, &[CurvePoint]),
    target_ber: f64,
) -> GainReport {
    let isr_a = crossing_isr(curve_a.1, target_ber);
    let isr_b = crossing_isr(curve_b.1, target_ber);
    let gain_db = match (isr_a, isr_b) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };
    GainReport {
        target_ber,
        curve_a: curve_a.0.to_string(),
        curve_b: curve_b.0.to_string(),
        isr_a,
        isr_b,
        gain_db,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputReport {
    pub detector: Detector,
    pub epochs: u64,
    pub seconds: f64,
    pub epochs_per_second: f64,
}

impl ThroughputReport {
    /// Channels that fit in real time at 1000 epochs per second each.
    pub fn channels_realtime(&self) -> u64 {
        (self.epochs_per_second / 1000.0).floor() as u64
    }
}

/// Steady-state full-pipeline throughput: synthesis, correlation, window
/// update, weight solve and decision, measured after the window has filled.
pub fn bench_throughput(
    config: &SimConfig,
    detector: Detector,
    duration: Duration,
) -> Result<ThroughputReport> {
    let isr = config.isr_db.first().copied().unwrap_or(20.0);
    let mut pipeline = ChannelPipeline::new(config, isr, detector)?;
    let warmup = config.window_l as u64;
    let mut sink = 0.0;
    for epoch in 0..warmup {
        sink += pipeline.step(epoch)?.0;
    }
    let start = Instant::now();
    let mut epoch = warmup;
    const CHUNK: u64 = 256;
    loop {
        for _ in 0..CHUNK {
            sink += pipeline.step(epoch)?.0;
            epoch += 1;
        }
        if start.elapsed() >= duration {
            break;
        }
    }
    std::hint::black_box(sink);
    let seconds = start.elapsed().as_secs_f64();
    let epochs = epoch - warmup;
    Ok(ThroughputReport {
        detector,
        epochs,
        seconds,
        epochs_per_second: epochs as f64 / seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(detectors: Vec<Detector>) -> SimConfig {
        SimConfig {
            detectors,
            isr_db: vec![20.0],
            n_bits: 200,
            ..SimConfig::default()
        }
    }

    #[test]
    fn wilson_boundaries() {
        assert_eq!(wilson_interval(0, 1000, 0.95).0, 0.0);
        assert_eq!(wilson_interval(1000, 1000, 0.95).1, 1.0);
        let (lo, hi) = wilson_interval(50, 10_000, 0.95);
        assert!(lo < 0.005 && 0.005 < hi);
    }

    #[test]
    fn quantile_matches_known_values() {
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-8);
        assert!((normal_quantile(0.5)).abs() < 1e-12);
        assert!((normal_quantile(0.995) - 2.575_829_303_548_901).abs() < 1e-8);
    }

    #[test]
    fn config_rejections() {
        let mut c = SimConfig::default();
        c.validate().unwrap();
        c.g = 48;
        assert!(matches!(c.validate(), Err(Error::Config { key, .. }) if key == "g"));
        let c = SimConfig {
            n_interferers: 4,
            ..SimConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config { key, .. }) if key == "n_interferers"));
        let c = SimConfig {
            n_bits: 10,
            ..SimConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config { key, .. }) if key == "n_bits"));
    }

    #[test]
    fn auto_delays_follow_delay_table() {
        let c = SimConfig {
            n_interferers: 3,
            ..SimConfig::default()
        };
        let table = build_delay_table(&GoldCodeSpec::gps_l1_ca(), 1, 3).unwrap();
        assert_eq!(
            c.resolved_delays().unwrap(),
            table.delays().collect::<Vec<_>>()
        );
    }

    #[test]
    fn clean_channel_has_no_errors() {
        let c = SimConfig {
            n_interferers: 0,
            ..small(vec![Detector::Mf, Detector::Mmse])
        };
        for p in run_sweep(&c, 1).unwrap() {
            assert_eq!(p.errors, 0, "{:?}", p.detector);
        }
    }

    #[test]
    fn warmup_exclusion() {
        let c = small(vec![Detector::Mf, Detector::Mmse]);
        let pts = run_sweep(&c, 1).unwrap();
        assert_eq!(pts[0].detector, Detector::Mf);
        assert_eq!(pts[0].bits_counted, 200);
        assert_eq!(pts[1].bits_counted, 200 - 15);
    }

    #[test]
    fn sweep_is_ordered_and_thread_independent() {
        let c = SimConfig {
            isr_db: vec![30.0, 10.0],
            n_bits: 100,
            noise_var: 50.0,
            ..SimConfig::default()
        };
        let one = run_sweep(&c, 1).unwrap();
        let four = run_sweep(&c, 4).unwrap();
        assert_eq!(one, four);
        let order: Vec<_> = one.iter().map(|p| (p.detector, p.isr_db)).collect();
        assert_eq!(
            order,
            vec![
                (Detector::Mf, 10.0),
                (Detector::Mf, 30.0),
                (Detector::Mmse, 10.0),
                (Detector::Mmse, 30.0)
            ]
        );
    }

    fn curve(points: &[(f64, f64)]) -> Vec<CurvePoint> {
        points
            .iter()
            .map(|&(isr_db, ber)| CurvePoint {
                isr_db,
                ber,
                bits: 100_000,
            })
            .collect()
    }

    #[test]
    fn gain_examples() {
        let a = curve(&[(10.0, 1e-5), (15.0, 1e-4), (20.0, 1e-2), (25.0, 0.3)]);
        let same = gain_at_ber(("a", &a), ("a", &a), 1e-3);
        assert_eq!(same.gain_db, Some(0.0));
        let shifted: Vec<_> = a
            .iter()
            .map(|p| CurvePoint {
                isr_db: p.isr_db + 5.0,
                ..*p
            })
            .collect();
        let g = gain_at_ber(("a", &a), ("b", &shifted), 1e-3)
            .gain_db
            .unwrap();
        assert!((g - 5.0).abs() < 1e-12);
        assert!((crossing_isr(&a, 1e-3).unwrap() - 17.5).abs() < 1e-12);
        let flat = curve(&[(10.0, 0.0), (20.0, 1e-5)]);
        assert_eq!(gain_at_ber(("a", &a), ("f", &flat), 1e-3).gain_db, None);
    }

    #[test]
    fn zero_ber_points_use_half_error_floor() {
        let c = curve(&[(10.0, 0.0), (20.0, 5e-2)]);
        // floor 5e-6 -> 5e-2 over 10 dB, 1e-3 sits 2.3 decades above the floor
        let x = crossing_isr(&c, 1e-3).unwrap();
        let expected = 10.0 + ((1e-3f64).log10() - (5e-6f64).log10()) / 4.0 * 10.0;
        assert!((x - expected).abs() < 1e-12);
    }

    #[test]
    fn throughput_reports_epochs() {
        let c = SimConfig {
            window_l: 40,
            ..SimConfig::default()
        };
        let r = bench_throughput(&c, Detector::Mmse, Duration::from_millis(50)).unwrap();
        assert!(r.epochs > 0 && r.epochs_per_second > 0.0);
        assert_eq!(r.channels_realtime(), (r.epochs_per_second / 1000.0) as u64);
    }
}
