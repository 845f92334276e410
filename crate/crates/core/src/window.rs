//! Sliding-window autocorrelation of partial-correlation vectors.
//!
//! Once `L` vectors are buffered, each push evicts the oldest vector and
//! applies `R <- R - c_old c_old^T / L + c_new c_new^T / L`. While the window
//! is filling, `R` is the running mean over the vectors seen so far.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;

/// FIFO window of `L` vectors of length `M` and their mean outer product.
#[derive(Debug, Clone)]
pub struct SlidingAutocorrelation {
    dim: usize,
    len: usize,
    fifo: VecDeque<Vec<f64>>,
    spare: Vec<f64>,
    r: SquareMatrix,
    pushes: u64,
    refresh_every: Option<u64>,
}

impl SlidingAutocorrelation {
    /// Allocates an `M x L` buffer and an `M x M` matrix.
    pub fn new(dim: usize, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidWindow(len));
        }
        if dim == 0 {
            return Err(Error::PartialCorrelationLength {
                expected: 1,
                got: 0,
            });
        }
        Ok(Self {
            dim,
            len,
            fifo: VecDeque::with_capacity(len),
            spare: vec![0.0; dim],
            r: SquareMatrix::zeros(dim),
            pushes: 0,
            refresh_every: None,
        })
    }

    /// Recomputes `R` from the buffered vectors every `pushes` pushes.
    pub fn with_refresh(mut self, pushes: u64) -> Self {
        self.refresh_every = (pushes > 0).then_some(pushes);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window_len(&self) -> usize {
        self.len
    }

    pub fn fill_count(&self) -> usize {
        self.fifo.len()
    }

    pub fn is_ready(&self) -> bool {
        self.fifo.len() == self.len
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.r
    }

    /// Buffered vectors, oldest first.
    pub fn window(&self) -> impl Iterator<Item = &[f64]> {
        self.fifo.iter().map(|v| v.as_slice())
    }

    pub fn push(&mut self, c: &[f64]) -> Result<()> {
        if c.len() != self.dim {
            return Err(Error::PartialCorrelationLength {
                expected: self.dim,
                got: c.len(),
            });
        }
        let m = self.dim;
        if self.fifo.len() < self.len {
            let n = self.fifo.len() as f64 + 1.0;
            self.r.scale((n - 1.0) / n);
            self.r.add_outer(c, 1.0 / n);
            let mut slot = std::mem::take(&mut self.spare);
            if slot.len() != m {
                slot = vec![0.0; m];
            }
            slot.copy_from_slice(c);
            self.fifo.push_back(slot);
        } else {
            let mut old = self.fifo.pop_front().expect("window is full");
            let inv = 1.0 / self.len as f64;
            let r = self.r.as_mut_slice();
            for i in 0..m {
                let (ni, oi) = (c[i] * inv, old[i] * inv);
                let row = &mut r[i * m..(i + 1) * m];
                for ((x, &nj), &oj) in row.iter_mut().zip(c).zip(old.iter()) {
                    *x += ni * nj - oi * oj;
                }
            }
            old.copy_from_slice(c);
            self.fifo.push_back(old);
        }
        self.pushes += 1;
        if let Some(every) = self.refresh_every {
            if self.pushes % every == 0 {
                self.refresh();
            }
        }
        Ok(())
    }

    /// Replaces `R` with the batch average over the buffered vectors.
    pub fn refresh(&mut self) {
        if self.fifo.is_empty() {
            self.r = SquareMatrix::zeros(self.dim);
            return;
        }
        let r = self.r.as_mut_slice();
        r.iter_mut().for_each(|x| *x = 0.0);
        for v in &self.fifo {
            self.r.add_outer(v, 1.0);
        }
        self.r.scale(1.0 / self.fifo.len() as f64);
    }
}

/// `(1/L) sum_l c_l c_l^T` over a window.
pub fn batch_autocorr<'a, I>(window: I) -> Result<SquareMatrix>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut iter = window.into_iter();
    let first = iter.next().ok_or(Error::EmptyWindow)?;
    let dim = first.len();
    let mut r = SquareMatrix::outer(first);
    let mut count = 1usize;
    for c in iter {
        if c.len() != dim {
            return Err(Error::PartialCorrelationLength {
                expected: dim,
                got: c.len(),
            });
        }
        r.add_outer(c, 1.0);
        count += 1;
    }
    r.scale(1.0 / count as f64);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vectors(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(-100.0..100.0)).collect())
            .collect()
    }

    #[test]
    fn single_entry_window() {
        let mut w = SlidingAutocorrelation::new(3, 1).unwrap();
        assert!(!w.is_ready());
        w.push(&[1.0, 2.0, -1.0]).unwrap();
        assert!(w.is_ready());
        assert_eq!(w.matrix(), &SquareMatrix::outer(&[1.0, 2.0, -1.0]));
        w.push(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(w.matrix(), &SquareMatrix::outer(&[0.0, 1.0, 0.0]));
    }

    #[test]
    fn matches_batch_after_eviction() {
        let vs = random_vectors(11, 4, 1);
        let mut w = SlidingAutocorrelation::new(4, 10).unwrap();
        for v in &vs {
            w.push(v).unwrap();
        }
        let batch = batch_autocorr(vs[1..].iter().map(|v| v.as_slice())).unwrap();
        assert!(w.matrix().relative_distance(&batch) < 1e-9);
    }

    #[test]
    fn fill_uses_running_mean() {
        let vs = random_vectors(3, 5, 2);
        let mut w = SlidingAutocorrelation::new(5, 10).unwrap();
        for v in &vs {
            w.push(v).unwrap();
        }
        assert_eq!(w.fill_count(), 3);
        let batch = batch_autocorr(vs.iter().map(|v| v.as_slice())).unwrap();
        assert!(w.matrix().relative_distance(&batch) < 1e-12);
    }

    #[test]
    fn zero_vectors_give_zero_matrix() {
        let mut w = SlidingAutocorrelation::new(4, 3).unwrap();
        for _ in 0..7 {
            w.push(&[0.0; 4]).unwrap();
        }
        assert!(w.matrix().as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn readiness() {
        let mut w = SlidingAutocorrelation::new(2, 5).unwrap();
        for i in 0..5 {
            assert!(!w.is_ready(), "after {i} pushes");
            w.push(&[1.0, 0.0]).unwrap();
        }
        for _ in 0..3 {
            assert!(w.is_ready());
            w.push(&[1.0, 0.0]).unwrap();
        }
    }

    #[test]
    fn dimension_mismatch() {
        let mut w = SlidingAutocorrelation::new(3, 2).unwrap();
        assert_eq!(
            w.push(&[1.0]).unwrap_err(),
            Error::PartialCorrelationLength {
                expected: 3,
                got: 1
            }
        );
    }

    #[test]
    fn batch_edge_cases() {
        assert_eq!(
            batch_autocorr(std::iter::empty::<&[f64]>()).unwrap_err(),
            Error::EmptyWindow
        );
        let c = [1.0, -3.0];
        assert_eq!(batch_autocorr([&c[..]]).unwrap(), SquareMatrix::outer(&c));
        let neg = [-1.0, 3.0];
        assert_eq!(
            batch_autocorr([&c[..], &neg[..]]).unwrap(),
            SquareMatrix::outer(&c)
        );
    }

    #[test]
    fn fifo_order() {
        let mut w = SlidingAutocorrelation::new(1, 3).unwrap();
        for i in 0..6 {
            w.push(&[i as f64]).unwrap();
        }
        let held: Vec<f64> = w.window().map(|v| v[0]).collect();
        assert_eq!(held, vec![3.0, 4.0, 5.0]);
    }
}
