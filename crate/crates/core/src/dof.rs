//! Degree-of-freedom bookkeeping for sliding-window codes.
//!
//! Every coded row sent on a hop covers a window `[lo, hi]` of the
//! transmitter's symbols, with `lo` never above the first symbol the receiver
//! is still missing. Over a large field such rows behave generically: a set
//! of rows starting at the first unknown symbol `u` is independent exactly
//! when, for every `k`, at most `k − u + 1` rows end at or before `k`, and
//! the prefix `[u, k]` becomes solvable once equality holds. [`DofTracker`]
//! keeps just the row upper bounds and applies that counting rule.

use std::collections::BTreeMap;

use crate::error::{violation, SimError};
use crate::types::Span;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DofTracker {
    /// Number of symbols solved in order (`0..solved` known).
    solved: u64,
    /// Upper bounds of stored rows not yet consumed by the solved prefix.
    pending: BTreeMap<u64, u32>,
    pending_rows: u64,
}

impl DofTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// First symbol not yet solved.
    pub fn next_unknown(&self) -> u64 {
        self.solved
    }

    /// Highest symbol solved in order, if any.
    pub fn decoded(&self) -> Option<u64> {
        self.solved.checked_sub(1)
    }

    pub fn pending(&self) -> u64 {
        self.pending_rows
    }

    /// Dimension of the received space.
    pub fn rank(&self) -> u64 {
        self.solved + self.pending_rows
    }

    /// Whether a row over `span` would add a degree of freedom.
    pub fn is_innovative(&self, span: Span) -> Result<bool, SimError> {
        if span.lo > self.solved {
            return Err(violation(format!(
                "row {span} starts beyond the first unknown symbol {}",
                self.solved
            )));
        }
        Ok(span.hi >= self.solved)
    }

    /// Store a row if innovative. Returns whether it was.
    pub fn insert(&mut self, span: Span) -> Result<bool, SimError> {
        if !self.is_innovative(span)? {
            return Ok(false);
        }
        *self.pending.entry(span.hi).or_insert(0) += 1;
        self.pending_rows += 1;
        self.advance();
        Ok(true)
    }

    fn advance(&mut self) {
        let mut seen = 0u64;
        let mut tight = None;
        for (&hi, &count) in &self.pending {
            seen += u64::from(count);
            if seen == hi - self.solved + 1 {
                tight = Some((hi, seen));
            }
        }
        if let Some((hi, used)) = tight {
            self.solved = hi + 1;
            self.pending_rows -= used;
            self.pending = self.pending.split_off(&self.solved);
        }
    }
}
