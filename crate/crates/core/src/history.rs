use std::collections::VecDeque;

/// The most recent `depth` normalized state vectors, newest first.
///
/// Lags that have not been observed yet read as zero vectors, which is what
/// an empty network looks like before the first step.
#[derive(Debug, Clone, PartialEq)]
pub struct StateHistory {
    depth: usize,
    width: usize,
    entries: VecDeque<Vec<f64>>,
}

impl StateHistory {
    pub fn new(depth: usize, width: usize) -> Self {
        Self { depth, width, entries: VecDeque::with_capacity(depth + 1) }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Records the state of the step just finished; it becomes lag 1.
    pub fn push(&mut self, state: Vec<f64>) {
        debug_assert_eq!(state.len(), self.width);
        self.entries.push_front(state);
        self.entries.truncate(self.depth);
    }

    /// State `lag` steps back (1 = newest), `None` if not yet observed.
    pub fn lag(&self, lag: usize) -> Option<&[f64]> {
        lag.checked_sub(1).and_then(|i| self.entries.get(i)).map(Vec::as_slice)
    }

    /// The stacked vector `[q(t-1); q(t-2); ...; q(t-depth)]` with zero padding.
    pub fn stacked(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.width * self.depth];
        for (k, entry) in self.entries.iter().enumerate() {
            out[k * self.width..(k + 1) * self.width].copy_from_slice(entry);
        }
        out
    }

    /// Dot product of `coefficients` with the first `coefficients.len() /
    /// width` lags of [`stacked`](Self::stacked), without materializing the
    /// padded vector. Lags beyond the coefficients are ignored.
    pub fn dot(&self, coefficients: &[f64]) -> f64 {
        debug_assert_eq!(coefficients.len() % self.width, 0);
        self.entries
            .iter()
            .zip(coefficients.chunks_exact(self.width))
            .map(|(state, row)| state.iter().zip(row).map(|(q, a)| q * a).sum::<f64>())
            .sum()
    }
}
