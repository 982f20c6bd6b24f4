//! Bounded memory of transition records and their priority weights.
//!
//! Each record gets three scores, computed on the window's binary
//! success-indicator series `x`:
//!
//! - autocorrelation `A = rho(now - t_i)`, with `rho` the sample ACF of `x`,
//! - recency `R = 1 / (now - t_i + eps)`, max-normalized within the window,
//! - deviation `D = |x_i - mean(x)|`,
//!
//! combined as `max(0, w_a A + w_r R + w_d D)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MemoryError {
    #[error("record at t={got} is older than the newest record at t={newest}")]
    OutOfOrder { got: u64, newest: u64 },
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("series of length {0} is too short (need at least 2)")]
    SeriesTooShort(usize),
    #[error("lag {lag} out of range for series of length {len}")]
    LagOutOfRange { lag: usize, len: usize },
    #[error("memory window is empty")]
    EmptyWindow,
    #[error("invalid priority config: {0}")]
    InvalidConfig(String),
}

/// One remembered transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    /// Time step at which the action was taken.
    pub t: u64,
    pub state: usize,
    pub action: usize,
    pub successor: usize,
    /// Whether the intended successor was reached.
    pub success: bool,
    /// Outcome class: 0 = intended, `k >= 1` = k-th deviation.
    pub outcome: usize,
    pub observation: usize,
}

impl MemoryRecord {
    pub fn indicator(&self) -> f64 {
        if self.success {
            1.0
        } else {
            0.0
        }
    }
}

/// FIFO window of at most `capacity` records with non-decreasing time.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryWindow {
    capacity: usize,
    records: VecDeque<MemoryRecord>,
}

impl MemoryWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "memory window capacity must be positive");
        Self {
            capacity,
            records: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl ExactSizeIterator<Item = &MemoryRecord> + '_ {
        self.records.iter()
    }

    pub fn newest(&self) -> Option<&MemoryRecord> {
        self.records.back()
    }

    /// Appends `record`, evicting the oldest one when full.
    pub fn push(&mut self, record: MemoryRecord) -> Result<(), MemoryError> {
        if let Some(newest) = self.records.back() {
            if record.t < newest.t {
                return Err(MemoryError::OutOfOrder {
                    got: record.t,
                    newest: newest.t,
                });
            }
        }
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
        Ok(())
    }

    /// Success indicators in time order.
    pub fn indicator_series(&self) -> Vec<f64> {
        self.records.iter().map(MemoryRecord::indicator).collect()
    }

    pub fn mean_indicator(&self) -> Option<f64> {
        if self.records.is_empty() {
            None
        } else {
            Some(self.records.iter().map(MemoryRecord::indicator).sum::<f64>() / self.records.len() as f64)
        }
    }
}

/// Relative importance of the three priority scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorityConfig {
    pub w_a: f64,
    pub w_r: f64,
    pub w_d: f64,
    pub epsilon: f64,
}

impl Default for PriorityConfig {
    fn default() -> Self {
        Self {
            w_a: 0.4,
            w_r: 0.4,
            w_d: 0.2,
            epsilon: 1e-6,
        }
    }
}

impl PriorityConfig {
    pub fn validate(&self) -> Result<(), MemoryError> {
        for (name, w) in [("w_a", self.w_a), ("w_r", self.w_r), ("w_d", self.w_d)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(MemoryError::InvalidConfig(format!("{name} must be a finite value >= 0")));
            }
        }
        if self.w_a + self.w_r + self.w_d <= 0.0 {
            return Err(MemoryError::InvalidConfig("w_a + w_r + w_d must be positive".into()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(MemoryError::InvalidConfig("epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Sample autocorrelation at `lag`:
/// `sum_{t>lag} (x_t - m)(x_{t-lag} - m) / sum_t (x_t - m)^2`.
pub fn autocorrelation(series: &[f64], lag: usize) -> Result<f64, MemoryError> {
    let n = series.len();
    if n < 2 {
        return Err(MemoryError::SeriesTooShort(n));
    }
    if lag >= n {
        return Err(MemoryError::LagOutOfRange { lag, len: n });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let denom: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum();
    let scale: f64 = series.iter().map(|x| x * x).sum();
    if denom <= 1e-20 * scale {
        return Err(MemoryError::DegenerateSeries);
    }
    let num: f64 = (lag..n).map(|t| (series[t] - mean) * (series[t - lag] - mean)).sum();
    Ok((num / denom).clamp(-1.0, 1.0))
}

fn lag_of(record: &MemoryRecord, now: u64) -> u64 {
    now.saturating_sub(record.t)
}

/// `A_s`: ACF of the window's indicator series at the record's age.
/// Degenerate series and ages past the series length score 0.
pub fn autocorrelation_score(window: &MemoryWindow, record: &MemoryRecord, now: u64) -> f64 {
    let series = window.indicator_series();
    let lag = lag_of(record, now);
    if lag >= series.len() as u64 {
        return 0.0;
    }
    autocorrelation(&series, lag as usize).unwrap_or(0.0)
}

/// `R_s = 1 / (now - t_i + eps)`.
pub fn recency_score(record: &MemoryRecord, now: u64, epsilon: f64) -> f64 {
    1.0 / (lag_of(record, now) as f64 + epsilon)
}

/// `D_s = |x_i - mean|` over the whole window.
pub fn deviation_score(record: &MemoryRecord, window: &MemoryWindow) -> f64 {
    let mean = window.mean_indicator().unwrap_or_else(|| record.indicator());
    (record.indicator() - mean).abs()
}

/// Weighted sum of the three scores, clamped at zero.
pub fn combined_weight(a_s: f64, r_s: f64, d_s: f64, cfg: &PriorityConfig) -> f64 {
    (cfg.w_a * a_s + cfg.w_r * r_s + cfg.w_d * d_s).max(0.0)
}

/// Priority weight of every record in the window, in window order.
pub fn weigh_all(window: &MemoryWindow, now: u64, cfg: &PriorityConfig) -> Result<Vec<(MemoryRecord, f64)>, MemoryError> {
    if window.is_empty() {
        return Err(MemoryError::EmptyWindow);
    }
    let series = window.indicator_series();
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    // ACF at every in-range lag; None marks a degenerate series.
    let acf: Option<Vec<f64>> = (0..n).map(|k| autocorrelation(&series, k).ok()).collect();

    let recency: Vec<f64> = window.records().map(|r| recency_score(r, now, cfg.epsilon)).collect();
    let max_recency = recency.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);

    Ok(window
        .records()
        .zip(recency)
        .map(|(r, rec)| {
            let lag = lag_of(r, now) as usize;
            let a_s = match &acf {
                Some(values) if lag < n => values[lag],
                _ => 0.0,
            };
            let d_s = (r.indicator() - mean).abs();
            (*r, combined_weight(a_s, rec / max_recency, d_s, cfg))
        })
        .collect())
}
