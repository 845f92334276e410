//! Gold-code generation and correlation tooling.
//!
//! Codes come from a pair of Fibonacci LFSRs clocked in lockstep: the first
//! register's last stage is XORed with the modulo-2 sum of two phase-select
//! taps of the second register. All registers start at all ones. Binary chips
//! are mapped to bipolar values as `0 -> +1`, `1 -> -1`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of GPS C/A codes in the phase-select table.
pub const GPS_CODE_COUNT: u32 = 32;

/// GPS C/A register length.
pub const GPS_DEGREE: u32 = 10;

/// G2 phase-select tap pairs for PRN 1..=32 (stage numbers are 1-based).
const GPS_PHASE_SELECT: [(u8, u8); 32] = [
    (2, 6),
    (3, 7),
    (4, 8),
    (5, 9),
    (1, 9),
    (2, 10),
    (1, 8),
    (2, 9),
    (3, 10),
    (2, 3),
    (3, 4),
    (5, 6),
    (6, 7),
    (7, 8),
    (8, 9),
    (9, 10),
    (1, 4),
    (2, 5),
    (3, 6),
    (4, 7),
    (5, 8),
    (6, 9),
    (1, 3),
    (4, 6),
    (5, 7),
    (6, 8),
    (7, 9),
    (8, 10),
    (1, 6),
    (2, 7),
    (3, 8),
    (4, 9),
];

/// Parameters of a dual-LFSR gold code family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldCodeSpec {
    degree: u32,
    g1_taps: Vec<u32>,
    g2_taps: Vec<u32>,
    phase_select: BTreeMap<u32, (u32, u32)>,
}

impl GoldCodeSpec {
    /// Builds a spec, checking tap ranges and phase-select uniqueness.
    ///
    /// Whether the taps are maximal-length is only known once a sequence is
    /// clocked out, so that check happens in [`generate_gold_code`].
    pub fn new(
        degree: u32,
        g1_taps: Vec<u32>,
        g2_taps: Vec<u32>,
        phase_select: BTreeMap<u32, (u32, u32)>,
    ) -> Result<Self> {
        if !(3..=30).contains(&degree) {
            return Err(Error::InvalidTaps(format!("degree {degree} out of range")));
        }
        for taps in [&g1_taps, &g2_taps] {
            if !taps.contains(&degree) {
                return Err(Error::InvalidTaps(format!(
                    "feedback taps {taps:?} must include the last stage {degree}"
                )));
            }
            if taps.iter().any(|&t| t == 0 || t > degree) {
                return Err(Error::InvalidTaps(format!("tap out of range in {taps:?}")));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for (&id, &(a, b)) in &phase_select {
            if a == b || a == 0 || b == 0 || a > degree || b > degree {
                return Err(Error::InvalidTaps(format!(
                    "phase select ({a}, {b}) for code {id} is invalid"
                )));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidTaps(format!(
                    "phase select ({a}, {b}) for code {id} is not unique"
                )));
            }
        }
        Ok(Self {
            degree,
            g1_taps,
            g2_taps,
            phase_select,
        })
    }

    /// GPS L1 C/A: G1 = 1 + x^3 + x^10, G2 = 1 + x^2 + x^3 + x^6 + x^8 + x^9 + x^10.
    pub fn gps_l1_ca() -> Self {
        let phase_select = GPS_PHASE_SELECT
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| (i as u32 + 1, (a as u32, b as u32)))
            .collect();
        Self::new(
            GPS_DEGREE,
            vec![3, 10],
            vec![2, 3, 6, 8, 9, 10],
            phase_select,
        )
        .expect("GPS tables are well formed")
    }

    /// Degree-5 preferred pair (octal 45 / 75), every 2-tap phase select.
    pub fn toy_degree5() -> Self {
        Self::toy(5, vec![2, 5], vec![2, 3, 4, 5])
    }

    /// Degree-6 preferred pair (octal 103 / 147), every 2-tap phase select.
    pub fn toy_degree6() -> Self {
        Self::toy(6, vec![1, 6], vec![1, 2, 5, 6])
    }

    fn toy(degree: u32, g1_taps: Vec<u32>, g2_taps: Vec<u32>) -> Self {
        let mut phase_select = BTreeMap::new();
        let mut id = 1;
        for a in 1..=degree {
            for b in a + 1..=degree {
                phase_select.insert(id, (a, b));
                id += 1;
            }
        }
        Self::new(degree, g1_taps, g2_taps, phase_select).expect("toy tables are well formed")
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Code period `2^n - 1`.
    pub fn period(&self) -> usize {
        (1usize << self.degree) - 1
    }

    pub fn code_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.phase_select.keys().copied()
    }

    pub fn phase_select(&self, code_id: u32) -> Option<(u32, u32)> {
        self.phase_select.get(&code_id).copied()
    }

    pub fn g1_taps(&self) -> &[u32] {
        &self.g1_taps
    }

    pub fn g2_taps(&self) -> &[u32] {
        &self.g2_taps
    }
}

/// A bipolar (`+1`/`-1`) spreading sequence of length `2^n - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChipSequence {
    code_id: Option<u32>,
    chips: Vec<i8>,
}

impl ChipSequence {
    pub fn new(code_id: Option<u32>, chips: Vec<i8>) -> Result<Self> {
        let len = chips.len();
        if len < 7 || !(len + 1).is_power_of_two() {
            return Err(Error::ExpectedChipCount(len));
        }
        if chips.iter().any(|&c| c != 1 && c != -1) {
            return Err(Error::InvalidTaps("chip values must be +1 or -1".into()));
        }
        Ok(Self { code_id, chips })
    }

    pub fn code_id(&self) -> Option<u32> {
        self.code_id
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.chips.iter().map(|&c| c as f64).collect()
    }

    /// Binary form under the fixed mapping (`+1 -> 0`, `-1 -> 1`).
    pub fn to_binary(&self) -> Vec<u8> {
        self.chips.iter().map(|&c| u8::from(c < 0)).collect()
    }

    /// First ten binary chips as a four-digit octal string (leading chip is
    /// the most significant bit), the digest used by the GPS interface tables.
    pub fn octal_digest(&self) -> String {
        let word = self
            .to_binary()
            .iter()
            .take(10)
            .fold(0u32, |acc, &b| (acc << 1) | b as u32);
        format!("{word:04o}")
    }

    pub fn sum(&self) -> i64 {
        self.chips.iter().map(|&c| c as i64).sum()
    }
}

/// Circular correlation of two codes, `values[tau] = sum_i a[i] * b[(i + tau) mod P]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationProfile {
    values: Vec<i32>,
}

impl CorrelationProfile {
    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn max_abs_off_peak(&self) -> i32 {
        self.values[1..].iter().map(|v| v.abs()).max().unwrap_or(0)
    }
}

/// One row of a [`DelayTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayEntry {
    pub delay: usize,
    pub corr: i32,
}

/// Worst-case interference delays for one code, ranked by `|corr|` then delay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayTable {
    pub code_id: u32,
    pub entries: Vec<DelayEntry>,
}

impl DelayTable {
    pub fn delays(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.delay)
    }
}

struct Lfsr {
    state: Vec<u8>,
    taps: Vec<usize>,
}

impl Lfsr {
    fn new(degree: u32, taps: &[u32]) -> Self {
        Self {
            state: vec![1; degree as usize],
            taps: taps.iter().map(|&t| t as usize - 1).collect(),
        }
    }

    fn stage(&self, one_based: u32) -> u8 {
        self.state[one_based as usize - 1]
    }

    fn clock(&mut self) {
        let feedback = self.taps.iter().fold(0, |acc, &t| acc ^ self.state[t]);
        self.state.rotate_right(1);
        self.state[0] = feedback;
    }

    fn is_all_ones(&self) -> bool {
        self.state.iter().all(|&s| s == 1)
    }
}

/// Clocks out one period of a gold code.
pub fn generate_gold_code(spec: &GoldCodeSpec, code_id: u32) -> Result<ChipSequence> {
    let (a, b) = spec
        .phase_select(code_id)
        .ok_or(Error::UnknownCodeId(code_id))?;
    let period = spec.period();
    let mut g1 = Lfsr::new(spec.degree, &spec.g1_taps);
    let mut g2 = Lfsr::new(spec.degree, &spec.g2_taps);
    let mut chips = Vec::with_capacity(period);
    for i in 0..period {
        let bit = g1.stage(spec.degree) ^ g2.stage(a) ^ g2.stage(b);
        chips.push(if bit == 0 { 1 } else { -1 });
        g1.clock();
        g2.clock();
        // Both registers must come back to the seed after exactly one period.
        let wrapped = i + 1 == period;
        if g1.is_all_ones() != wrapped || g2.is_all_ones() != wrapped {
            return Err(Error::InvalidTaps(format!(
                "register returned to its seed after {} of {period} chips",
                i + 1
            )));
        }
    }
    ChipSequence::new(Some(code_id), chips)
}

/// All codes of a family in code-id order.
pub fn generate_all(spec: &GoldCodeSpec) -> Result<Vec<ChipSequence>> {
    spec.code_ids()
        .map(|id| generate_gold_code(spec, id))
        .collect()
}

/// Delays a code by `delay` chips: `out[i] = in[(i - delay) mod P]`.
pub fn cyclic_shift(code: &ChipSequence, delay: usize) -> Result<ChipSequence> {
    let period = code.len();
    if delay >= period {
        return Err(Error::InvalidDelay { delay, period });
    }
    let mut chips = code.chips.clone();
    chips.rotate_right(delay);
    Ok(ChipSequence {
        code_id: code.code_id,
        chips,
    })
}

pub fn circular_correlation(a: &ChipSequence, b: &ChipSequence) -> Result<CorrelationProfile> {
    let period = a.len();
    if b.len() != period {
        return Err(Error::IncompatibleLengths(period, b.len()));
    }
    let doubled: Vec<i32> = b.chips.iter().chain(&b.chips).map(|&c| c as i32).collect();
    let a: Vec<i32> = a.chips.iter().map(|&c| c as i32).collect();
    let values = (0..period)
        .map(|tau| {
            a.iter()
                .zip(&doubled[tau..tau + period])
                .map(|(x, y)| x * y)
                .sum()
        })
        .collect();
    Ok(CorrelationProfile { values })
}

/// Peak off-peak correlation magnitude of a degree-`n` gold family,
/// `t(n) = 2^floor((n + 2) / 2) + 1`.
pub fn max_crosscorr_magnitude(degree: u32) -> i64 {
    (1i64 << ((degree + 2) / 2)) + 1
}

/// Ranks the nonzero delays of a code's autocorrelation by `|corr|`
/// descending, ties broken by ascending delay, and keeps the first `count`.
pub fn build_delay_table(spec: &GoldCodeSpec, code_id: u32, count: usize) -> Result<DelayTable> {
    let max = spec.period() - 1;
    if count == 0 || count > max {
        return Err(Error::InvalidTableSize { count, max });
    }
    let code = generate_gold_code(spec, code_id)?;
    let profile = circular_correlation(&code, &code)?;
    let mut entries: Vec<DelayEntry> = profile.values[1..]
        .iter()
        .enumerate()
        .map(|(i, &corr)| DelayEntry { delay: i + 1, corr })
        .collect();
    entries.sort_by(|x, y| y.corr.abs().cmp(&x.corr.abs()).then(x.delay.cmp(&y.delay)));
    entries.truncate(count);
    Ok(DelayTable { code_id, entries })
}
