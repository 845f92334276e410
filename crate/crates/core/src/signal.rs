//! Synthetic chip-domain received signal.
//!
//! One epoch is one code period. The received vector is
//! `r = b * sqrt(p) * s + sum_j i_j + n`, where each interferer `i_j` is a
//! delayed replica of the channel's own code with its own random bit stream,
//! and `n` is white Gaussian noise. Codes of length `2^n - 1` are padded to
//! `2^n` by repeating the last chip before any arithmetic.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::prn::{cyclic_shift, ChipSequence};
use crate::rng;

pub const EPOCHS_PER_BIT: u64 = 20;
pub const MAX_INTERFERERS: usize = 3;

/// Navigation bit active at `bit_index` for stream `seed`.
pub fn nav_bit(seed: u64, bit_index: u64) -> i8 {
    rng::sign_at(seed, bit_index)
}

/// First `count` navigation bits of stream `seed`. Bit `j` covers epochs
/// `20 j .. 20 j + 19`.
pub fn nav_bit_stream(seed: u64, count: usize) -> Vec<i8> {
    (0..count as u64).map(|j| nav_bit(seed, j)).collect()
}

/// Pads a `2^n - 1` chip vector to `2^n` by repeating the final chip.
pub fn oversample_to_pow2(chips: &[f64]) -> Result<Vec<f64>> {
    let len = chips.len();
    if len == 0 || !(len + 1).is_power_of_two() {
        return Err(Error::ExpectedChipCount(len));
    }
    let mut out = Vec::with_capacity(len + 1);
    out.extend_from_slice(chips);
    out.push(chips[len - 1]);
    Ok(out)
}

pub fn oversampled_code(code: &ChipSequence) -> Vec<f64> {
    oversample_to_pow2(&code.to_f64()).expect("ChipSequence length is 2^n - 1")
}

#[derive(Debug, Clone)]
pub struct ChannelParams {
    pub code: ChipSequence,
    pub power: f64,
    pub bit_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfererSpec {
    pub delay: usize,
    pub isr_db: f64,
    pub bit_epoch_offset: u64,
    pub polarity_seed: u64,
}

impl InterfererSpec {
    pub fn validate(&self, period: usize) -> Result<()> {
        if self.delay == 0 || self.delay >= period {
            return Err(Error::InvalidInterferer(format!(
                "delay {} must be in [1, {}]",
                self.delay,
                period - 1
            )));
        }
        if self.bit_epoch_offset >= EPOCHS_PER_BIT {
            return Err(Error::InvalidInterferer(format!(
                "bit epoch offset {} must be below {EPOCHS_PER_BIT}",
                self.bit_epoch_offset
            )));
        }
        if !self.isr_db.is_finite() {
            return Err(Error::InvalidInterferer("ISR must be finite".into()));
        }
        Ok(())
    }

    /// Linear amplitude relative to `sqrt(p)`.
    pub fn amplitude(&self, power: f64) -> f64 {
        (power * 10f64.powf(self.isr_db / 10.0)).sqrt()
    }

    /// Interferer bit during `epoch`.
    pub fn bit_at(&self, epoch: u64) -> i8 {
        nav_bit(
            self.polarity_seed,
            (epoch + self.bit_epoch_offset) / EPOCHS_PER_BIT,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseSpec {
    pub variance: f64,
    pub seed: u64,
}

/// One received code period.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSignal {
    pub r: Vec<f64>,
    pub epoch_index: u64,
    pub true_bit: i8,
    pub power: f64,
}

/// `sqrt(p * 10^(isr/10)) * b_i(epoch) * oversample(shift(code, delay))`.
pub fn interference_component(
    spec: &InterfererSpec,
    code: &ChipSequence,
    power: f64,
    epoch_index: u64,
) -> Result<Vec<f64>> {
    spec.validate(code.len())?;
    if !(power > 0.0) {
        return Err(Error::InvalidPower(power));
    }
    let shifted = oversampled_code(&cyclic_shift(code, spec.delay)?);
    let scale = spec.amplitude(power) * spec.bit_at(epoch_index) as f64;
    Ok(shifted.into_iter().map(|x| x * scale).collect())
}

struct PreparedInterferer {
    spec: InterfererSpec,
    amplitude: f64,
    replica: Vec<f64>,
}

/// A channel with its interferers and noise, ready to synthesize epochs.
///
/// Replicas are padded once at construction; [`ChannelModel::synthesize_into`]
/// does no allocation.
pub struct ChannelModel {
    channel: ChannelParams,
    amplitude: f64,
    replica: Vec<f64>,
    interferers: Vec<PreparedInterferer>,
    noise: NoiseSpec,
    noise_std: f64,
}

impl ChannelModel {
    pub fn new(
        channel: ChannelParams,
        interferers: &[InterfererSpec],
        noise: NoiseSpec,
    ) -> Result<Self> {
        if interferers.len() > MAX_INTERFERERS {
            return Err(Error::InterfererLimitExceeded(interferers.len()));
        }
        if !(channel.power > 0.0) || !channel.power.is_finite() {
            return Err(Error::InvalidChannel(format!(
                "power must be positive, got {}",
                channel.power
            )));
        }
        if !(noise.variance >= 0.0) || !noise.variance.is_finite() {
            return Err(Error::InvalidChannel(format!(
                "noise variance must be nonnegative, got {}",
                noise.variance
            )));
        }
        let replica = oversampled_code(&channel.code);
        let interferers = interferers
            .iter()
            .map(|spec| {
                spec.validate(channel.code.len())?;
                Ok(PreparedInterferer {
                    spec: *spec,
                    amplitude: spec.amplitude(channel.power),
                    replica: oversampled_code(&cyclic_shift(&channel.code, spec.delay)?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            amplitude: channel.power.sqrt(),
            channel,
            replica,
            interferers,
            noise_std: noise.variance.sqrt(),
            noise,
        })
    }

    /// Padded length `N` of every epoch vector.
    pub fn len(&self) -> usize {
        self.replica.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replica.is_empty()
    }

    /// The padded despreading replica `s`.
    pub fn replica(&self) -> &[f64] {
        &self.replica
    }

    pub fn power(&self) -> f64 {
        self.channel.power
    }

    pub fn code(&self) -> &ChipSequence {
        &self.channel.code
    }

    pub fn bit_at(&self, epoch: u64) -> i8 {
        nav_bit(self.channel.bit_seed, epoch / EPOCHS_PER_BIT)
    }

    /// Writes epoch `epoch_index` into `out` and returns the true bit.
    pub fn synthesize_into(&self, epoch_index: u64, out: &mut [f64]) -> i8 {
        assert_eq!(out.len(), self.replica.len(), "epoch buffer length");
        let bit = self.bit_at(epoch_index);
        let a = bit as f64 * self.amplitude;
        for (o, &s) in out.iter_mut().zip(&self.replica) {
            *o = a * s;
        }
        for intf in &self.interferers {
            let a = intf.amplitude * intf.spec.bit_at(epoch_index) as f64;
            for (o, &s) in out.iter_mut().zip(&intf.replica) {
                *o += a * s;
            }
        }
        if self.noise_std > 0.0 {
            let mut rng = rng::stream(self.noise.seed, epoch_index);
            for o in out.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *o += self.noise_std * z;
            }
        }
        bit
    }

    pub fn synthesize_epoch(&self, epoch_index: u64) -> EpochSignal {
        let mut r = vec![0.0; self.replica.len()];
        let true_bit = self.synthesize_into(epoch_index, &mut r);
        EpochSignal {
            r,
            epoch_index,
            true_bit,
            power: self.channel.power,
        }
    }
}
