//! Correlators: the conventional matched filter, the group-weighting MMSE
//! correlator, and the full-dimension MMSE despreading code used as an
//! oracle.
//!
//! The group-weighting correlator splits the `N`-chip epoch into `M = N / g`
//! groups of `g` chips. Code wipe-off and per-group integration produce the
//! partial correlations `c`, whose windowed autocorrelation `R_c` yields the
//! weights `w = g p R_c^{-1} 1`. The epoch decision is `d = w^T c`, which
//! equals `h^T r` for the despreading code `h = w (.) s` with each weight
//! repeated over its group.

use crate::error::{Error, Result};
use crate::linalg::{SolveInfo, SpdSolver, SquareMatrix};
use crate::signal::EPOCHS_PER_BIT;
use crate::window::SlidingAutocorrelation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionVariable {
    pub d: f64,
    pub epoch_index: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialCorrelations {
    pub c: Vec<f64>,
    pub g: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub w: Vec<f64>,
    /// Ridge used by the solve, zero when `R_c` factored without help.
    pub ridge: f64,
}

impl WeightVector {
    pub fn uniform(m: usize) -> Self {
        Self {
            w: vec![1.0; m],
            ridge: 0.0,
        }
    }

    pub fn regularized(&self) -> bool {
        self.ridge > 0.0
    }
}

/// Unit-norm despreading code.
#[derive(Debug, Clone, PartialEq)]
pub struct DespreadingCode {
    pub h: Vec<f64>,
}

impl DespreadingCode {
    pub fn apply(&self, r: &[f64]) -> f64 {
        dot(&self.h, r)
    }
}

/// Sample second-moment matrix of whole epochs (oracle use).
#[derive(Debug, Clone, PartialEq)]
pub struct FullAutocorrelation(pub SquareMatrix);

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::LengthMismatch(a, b))
    }
}

/// `d = s^T r`.
pub fn matched_filter(r: &[f64], s0: &[f64], epoch_index: u64) -> Result<DecisionVariable> {
    check_len(r.len(), s0.len())?;
    Ok(DecisionVariable {
        d: dot(r, s0),
        epoch_index,
    })
}

fn check_group(n: usize, g: usize) -> Result<usize> {
    if g == 0 || n % g != 0 {
        return Err(Error::InvalidGroupSize { g, n });
    }
    Ok(n / g)
}

/// Code wipe-off and per-group integration into `out` (length `N / g`).
pub fn partial_correlate_into(r: &[f64], s0: &[f64], g: usize, out: &mut [f64]) -> Result<()> {
    check_len(r.len(), s0.len())?;
    let m = check_group(r.len(), g)?;
    check_len(out.len(), m)?;
    for ((o, rg), sg) in out
        .iter_mut()
        .zip(r.chunks_exact(g))
        .zip(s0.chunks_exact(g))
    {
        *o = dot(rg, sg);
    }
    Ok(())
}

pub fn partial_correlate(r: &[f64], s0: &[f64], g: usize) -> Result<PartialCorrelations> {
    let m = check_group(r.len(), g)?;
    let mut c = vec![0.0; m];
    partial_correlate_into(r, s0, g, &mut c)?;
    Ok(PartialCorrelations { c, g })
}

/// `w = g p R^{-1} 1`, with ridge fallback when `R` is not positive definite.
pub fn solve_group_weights(r: &SquareMatrix, g: usize, power: f64) -> Result<WeightVector> {
    if g == 0 {
        return Err(Error::InvalidGroupSize { g, n: r.dim() });
    }
    if !(power > 0.0) {
        return Err(Error::InvalidPower(power));
    }
    let mut w = vec![g as f64 * power; r.dim()];
    let SolveInfo { ridge } = SpdSolver::new(r.dim()).solve(r.as_slice(), &mut w)?;
    Ok(WeightVector { w, ridge })
}

/// `d = w^T c`.
pub fn group_decision(
    w: &WeightVector,
    c: &PartialCorrelations,
    epoch_index: u64,
) -> Result<DecisionVariable> {
    check_len(w.w.len(), c.c.len())?;
    Ok(DecisionVariable {
        d: dot(&w.w, &c.c),
        epoch_index,
    })
}

/// Repeats each weight over its group, multiplies by the replica and scales
/// to unit norm.
pub fn expand_weights(w: &WeightVector, s0: &[f64], g: usize) -> Result<DespreadingCode> {
    check_len(w.w.len() * g, s0.len())?;
    let mut h: Vec<f64> = s0
        .chunks_exact(g)
        .zip(&w.w)
        .flat_map(|(sg, &wj)| sg.iter().map(move |&s| wj * s))
        .collect();
    normalize(&mut h)?;
    Ok(DespreadingCode { h })
}

fn normalize(h: &mut [f64]) -> Result<()> {
    let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateWeights);
    }
    h.iter_mut().for_each(|x| *x /= norm);
    Ok(())
}

/// `h = p R^{-1} s` scaled to unit norm. Costs `O(N^3)`.
pub fn optimal_despreading_code(
    r_full: &FullAutocorrelation,
    s0: &[f64],
    power: f64,
) -> Result<DespreadingCode> {
    let r = &r_full.0;
    check_len(r.dim(), s0.len())?;
    if !(power > 0.0) {
        return Err(Error::InvalidPower(power));
    }
    let mut h: Vec<f64> = s0.iter().map(|s| power * s).collect();
    SpdSolver::new(r.dim()).solve(r.as_slice(), &mut h)?;
    normalize(&mut h)?;
    Ok(DespreadingCode { h })
}

pub fn estimate_full_autocorr<'a, I>(epochs: I) -> Result<FullAutocorrelation>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    crate::window::batch_autocorr(epochs)
        .map(FullAutocorrelation)
        .map_err(|e| match e {
            Error::EmptyWindow => Error::EmptyDecisions,
            other => other,
        })
}

/// Sign of the sum of one bit's epoch decisions; a zero sum decides `+1`.
pub fn bit_decision(epoch_decisions: &[f64]) -> Result<i8> {
    if epoch_decisions.len() != EPOCHS_PER_BIT as usize {
        return Err(Error::BitWindow(epoch_decisions.len()));
    }
    Ok(sign(epoch_decisions.iter().sum()))
}

pub(crate) fn sign(x: f64) -> i8 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

/// Mean of `(b - d / sqrt(p))^2`.
pub fn empirical_mse(decisions: &[(f64, i8)], power: f64) -> Result<f64> {
    if decisions.is_empty() {
        return Err(Error::EmptyDecisions);
    }
    if !(power > 0.0) {
        return Err(Error::InvalidPower(power));
    }
    let amp = power.sqrt();
    let total: f64 = decisions
        .iter()
        .map(|&(d, b)| (b as f64 - d / amp).powi(2))
        .sum();
    Ok(total / decisions.len() as f64)
}

/// Which correlator produces the epoch decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Detector {
    Mf,
    Mmse,
}

impl Detector {
    pub fn as_str(self) -> &'static str {
        match self {
            Detector::Mf => "mf",
            Detector::Mmse => "mmse",
        }
    }

    pub(crate) fn stream_label(self) -> u64 {
        match self {
            Detector::Mf => 0,
            Detector::Mmse => 1,
        }
    }
}

impl std::fmt::Display for Detector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Detector {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mf" => Ok(Detector::Mf),
            "mmse" => Ok(Detector::Mmse),
            other => Err(format!("unknown detector `{other}` (expected mf or mmse)")),
        }
    }
}

/// Decision for one epoch from [`GroupMmseCorrelator::process`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochOutput {
    pub d: f64,
    /// False while the window is filling and uniform weights are in use.
    pub adaptive: bool,
}

/// Per-channel group-weighting MMSE correlator.
///
/// Every buffer is sized at construction from `(N, g, L)`; processing an
/// epoch allocates nothing and factors only `M x M` systems.
#[derive(Debug, Clone)]
pub struct GroupMmseCorrelator {
    g: usize,
    power: f64,
    stride: u64,
    window: SlidingAutocorrelation,
    solver: SpdSolver,
    c: Vec<f64>,
    weights: Vec<f64>,
    since_solve: u64,
    has_weights: bool,
    regularized_solves: u64,
    solves: u64,
}

impl GroupMmseCorrelator {
    pub fn new(n: usize, g: usize, window_len: usize, power: f64, stride: u64) -> Result<Self> {
        let m = check_group(n, g)?;
        if !(power > 0.0) {
            return Err(Error::InvalidPower(power));
        }
        Ok(Self {
            g,
            power,
            stride: stride.max(1),
            window: SlidingAutocorrelation::new(m, window_len)?,
            solver: SpdSolver::new(m),
            c: vec![0.0; m],
            weights: vec![1.0; m],
            since_solve: 0,
            has_weights: false,
            regularized_solves: 0,
            solves: 0,
        })
    }

    pub fn group_size(&self) -> usize {
        self.g
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn window(&self) -> &SlidingAutocorrelation {
        &self.window
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn partial_correlations(&self) -> &[f64] {
        &self.c
    }

    /// Size of the solver's factor workspace (`M * M`).
    pub fn solver_workspace_len(&self) -> usize {
        self.solver.workspace_len()
    }

    pub fn regularized_solves(&self) -> u64 {
        self.regularized_solves
    }

    pub fn solves(&self) -> u64 {
        self.solves
    }

    /// Correlates one epoch: partial integrate-and-dump, window update,
    /// weight solve on the configured stride, then `d = w^T c`.
    pub fn process(&mut self, r: &[f64], s0: &[f64]) -> Result<EpochOutput> {
        partial_correlate_into(r, s0, self.g, &mut self.c)?;
        self.window.push(&self.c)?;
        if !self.window.is_ready() {
            return Ok(EpochOutput {
                d: self.c.iter().sum(),
                adaptive: false,
            });
        }
        if !self.has_weights || self.since_solve >= self.stride {
            self.solve()?;
        }
        self.since_solve += 1;
        Ok(EpochOutput {
            d: dot(&self.weights, &self.c),
            adaptive: true,
        })
    }

    fn solve(&mut self) -> Result<()> {
        let target = self.g as f64 * self.power;
        self.weights.iter_mut().for_each(|w| *w = target);
        let info = self
            .solver
            .solve(self.window.matrix().as_slice(), &mut self.weights)?;
        self.solves += 1;
        if info.regularized() {
            self.regularized_solves += 1;
        }
        self.has_weights = true;
        self.since_solve = 0;
        Ok(())
    }
}
