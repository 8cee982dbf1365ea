//! Per-round channel assignment.
//!
//! Users are rows and channels are columns of a [`WeightMatrix`]. Every
//! solver returns an injective [`Assignment`]; when several assignments reach
//! the optimum the lexicographically smallest `channel_of` wins, so results
//! are reproducible across solvers and runs.

mod brute;
mod hungarian;
mod round_robin;

pub use brute::{brute_force_assign, brute_force_optimal_channels};
pub use hungarian::{hungarian_solve, optimal_channel_sets};
pub use round_robin::{rank_top_k, round_robin_assign};

use crate::error::{Error, Result};
use crate::scalar::Weight;

/// Dense row-major `K x N` weights with `K <= N` enforced by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<T> {
    /// `channel_of[k]` is the channel given to user `k`.
    pub channel_of: Vec<usize>,
    /// Sum of the original matrix entries at the assigned cells.
    pub value: T,
}

impl<T: Weight> WeightMatrix<T> {
    pub fn new(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_admissible()) {
            return Err(Error::InadmissibleWeight {
                row: i / cols,
                col: i % cols,
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {r} has {} entries, expected {cols}",
                rows[r].len()
            )));
        }
        let n = rows.len();
        Self::new(n, cols, rows.into_iter().flatten().collect())
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), rows * cols);
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[T] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// True when every row equals the first (a homogeneous network).
    pub fn is_symmetric(&self) -> bool {
        (1..self.rows).all(|k| self.row(k) == self.row(0))
    }

    /// Row `k` of the result is row `(k + t) mod K` of `self`.
    pub fn rotated(&self, t: u64) -> Self {
        let values = (0..self.rows)
            .flat_map(|k| self.row(rotated_row(k, t, self.rows)).iter().copied())
            .collect();
        Self::from_raw(self.rows, self.cols, values)
    }

    /// Sum of entries at `(k, channel_of[k])`, accumulated in user order.
    pub fn value_of(&self, channel_of: &[usize]) -> T {
        channel_of
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (k, &c)| acc + self.get(k, c))
    }

    pub(crate) fn check_shape(&self) -> Result<()> {
        if self.rows > self.cols {
            return Err(Error::MoreUsersThanChannels {
                users: self.rows,
                channels: self.cols,
            });
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_admissible()) {
            return Err(Error::InadmissibleWeight {
                row: i / self.cols,
                col: i % self.cols,
            });
        }
        Ok(())
    }

    /// Replaces `+inf` by `(largest finite entry) + 1`, or `1` if nothing is
    /// finite, so unexplored channels win the matching without overflowing
    /// the arithmetic.
    pub(crate) fn with_sentinels_resolved(&self) -> Self {
        if !self.values.iter().any(Weight::is_unbounded) {
            return self.clone();
        }
        let top = self
            .values
            .iter()
            .filter(|v| !v.is_unbounded())
            .copied()
            .fold(None, |m: Option<T>, v| match m {
                Some(m) if m >= v => Some(m),
                _ => Some(v),
            });
        let fill = top.map_or_else(T::one, |m| m + T::one());
        let values = self
            .values
            .iter()
            .map(|v| if v.is_unbounded() { fill } else { *v })
            .collect();
        Self::from_raw(self.rows, self.cols, values)
    }

    pub(crate) fn max_abs(&self) -> T {
        self.values
            .iter()
            .map(|v| v.abs())
            .fold(T::zero(), |m, v| if v > m { v } else { m })
    }
}

/// Index of the user whose row sits at position `k` of the rotated matrix
/// at slot `t`: `(k + t) mod K`.
pub fn rotated_row(k: usize, t: u64, users: usize) -> usize {
    ((k as u64 + t) % users as u64) as usize
}

/// Rotates the rows by `t`, solves, and reports `channel_of` in the original
/// user numbering.
pub fn rotate_then_solve<T: Weight>(w: &WeightMatrix<T>, t: u64) -> Result<Assignment<T>> {
    w.check_shape()?;
    if w.rows() == 0 {
        return hungarian_solve(w);
    }
    let solved = hungarian_solve(&w.rotated(t))?;
    let mut channel_of = vec![0; w.rows()];
    for (k, &c) in solved.channel_of.iter().enumerate() {
        channel_of[rotated_row(k, t, w.rows())] = c;
    }
    let value = w.value_of(&channel_of);
    Ok(Assignment { channel_of, value })
}
