//! Container for matrix-valued time series.
//!
//! An observation at time t is a dense p1×p2 real matrix X_t; a series is T
//! such observations with fixed dimensions. Storage is time-major (t, i, j)
//! with row-major matrices, which is the iteration order of every windowed
//! computation downstream.

use std::ops::Range;

use ndarray::{s, Array3, ArrayView2, Axis};

use crate::error::{Error, Result};

/// An ordered sequence of p1×p2 matrices.
///
/// Invariants enforced at construction: at least one observation, positive
/// dimensions, every entry finite, and (when present) one time label per
/// observation.
#[derive(Debug, Clone)]
pub struct MatrixSeries {
    data: Array3<f64>,
    time_labels: Option<Vec<String>>,
}

impl MatrixSeries {
    /// Wrap a (T, p1, p2) array, validating the invariants.
    pub fn new(data: Array3<f64>) -> Result<Self> {
        let (t, p1, p2) = data.dim();
        if t == 0 || p1 == 0 || p2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "series dimensions must be positive, got T={t}, p1={p1}, p2={p2}"
            )));
        }
        if let Some(((ti, i, j), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "X_{ti}[{i},{j}] = {v}"
            )));
        }
        Ok(Self {
            data,
            time_labels: None,
        })
    }

    /// Build from a flat time-major, row-major buffer of length T·p1·p2.
    pub fn from_flat(t: usize, p1: usize, p2: usize, flat: Vec<f64>) -> Result<Self> {
        if flat.len() != t * p1 * p2 {
            return Err(Error::InvalidArgument(format!(
                "flat buffer has {} entries, expected {}·{}·{} = {}",
                flat.len(),
                t,
                p1,
                p2,
                t * p1 * p2
            )));
        }
        let arr = Array3::from_shape_vec((t, p1, p2), flat)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Self::new(arr)
    }

    /// Attach one label per observation (e.g. dates).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} observations",
                labels.len(),
                self.len()
            )));
        }
        self.time_labels = Some(labels);
        Ok(self)
    }

    /// Number of observations T.
    pub fn len(&self) -> usize {
        self.data.dim().0
    }

    pub fn is_empty(&self) -> bool {
        false // T >= 1 by construction
    }

    /// (p1, p2).
    pub fn dims(&self) -> (usize, usize) {
        let (_, p1, p2) = self.data.dim();
        (p1, p2)
    }

    /// The observation X_t (0-based t).
    pub fn obs(&self, t: usize) -> ArrayView2<'_, f64> {
        self.data.index_axis(Axis(0), t)
    }

    /// The full (T, p1, p2) array.
    pub fn as_array(&self) -> &Array3<f64> {
        &self.data
    }

    /// The sub-series over a 0-based observation range, labels included.
    pub fn window(&self, range: Range<usize>) -> Result<MatrixSeries> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidArgument(format!(
                "window {}..{} outside the series 0..{}",
                range.start,
                range.end,
                self.len()
            )));
        }
        let data = self.data.slice(s![range.clone(), .., ..]).to_owned();
        let time_labels = self.time_labels.as_ref().map(|l| l[range].to_vec());
        Ok(Self { data, time_labels })
    }

    pub fn time_labels(&self) -> Option<&[String]> {
        self.time_labels.as_deref()
    }

    /// The same series with every observation transposed (p1 and p2 swap
    /// roles), so row-side quantities can reuse column-side operations.
    pub fn transposed(&self) -> MatrixSeries {
        let mut data = Array3::zeros((self.data.dim().0, self.data.dim().2, self.data.dim().1));
        for (t, obs) in self.data.outer_iter().enumerate() {
            data.slice_mut(s![t, .., ..]).assign(&obs.t());
        }
        Self {
            data,
            time_labels: self.time_labels.clone(),
        }
    }
}
