//! Time mesh and discrete fractional-calculus kernels.
//!
//! The mesh has step `h = nu/n` with nodes `t_j = j*h` for
//! `j = -n..m`, where `m = floor(T/nu) * n` covers the working interval
//! `[0, T0]`, `T0 = floor(T/nu) * nu`. The Caputo derivative of order
//! `alpha` at `t_j` is approximated by the L1 sum
//!
//! ```text
//! (h^(1-alpha) / Gamma(2-alpha)) * sum_{i=1..j} b_{j-i} * d_i,
//! ```
//!
//! with `d_i` the backward differences and weights
//! `b_i = (i+1)^(1-alpha) - i^(1-alpha)`.

use crate::error::Error;
use crate::Result;
use statrs::function::gamma::gamma;

/// One `(a_q, alpha_q)` pair of the multi-term fractional operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalTerm {
    weight: f64,
    order: f64,
}

impl FractionalTerm {
    pub fn new(weight: f64, order: f64) -> Result<Self> {
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::NonPositiveInput {
                name: "term weight",
                value: weight,
            });
        }
        if !(order > 0.0 && order < 1.0) {
            return Err(Error::OrderOutOfRange(order));
        }
        Ok(Self { weight, order })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn order(&self) -> f64 {
        self.order
    }
}

/// Uniform time mesh covering `[-nu, T0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    delay: f64,
    horizon: f64,
    subdivisions: usize,
    step: f64,
    effective_horizon: f64,
    step_count: usize,
}

impl TimeGrid {
    /// Builds the mesh with `h = delay/subdivisions`. Requires
    /// `0 < delay <= horizon` and `h < min(1, delay)`.
    pub fn new(delay: f64, horizon: f64, subdivisions: usize) -> Result<Self> {
        if !(delay > 0.0) || !delay.is_finite() {
            return Err(Error::NonPositiveInput {
                name: "delay",
                value: delay,
            });
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::NonPositiveInput {
                name: "horizon",
                value: horizon,
            });
        }
        if subdivisions == 0 {
            return Err(Error::NonPositiveInput {
                name: "subdivisions",
                value: 0.0,
            });
        }
        if delay > horizon {
            return Err(Error::DelayExceedsHorizon { delay, horizon });
        }
        let step = delay / subdivisions as f64;
        let limit = delay.min(1.0);
        if step >= limit {
            return Err(Error::StepTooLarge { step, limit });
        }
        // Tiny nudge so horizons that are exact delay multiples up to
        // rounding are not truncated by one whole period.
        let periods = (horizon / delay + 1e-12).floor();
        let effective_horizon = periods * delay;
        let step_count = periods as usize * subdivisions;
        Ok(Self {
            delay,
            horizon,
            subdivisions,
            step,
            effective_horizon,
            step_count,
        })
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps per delay interval (`n`).
    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// `T0`, the largest delay multiple not exceeding the horizon.
    pub fn effective_horizon(&self) -> f64 {
        self.effective_horizon
    }

    /// Number of forward steps (`m`).
    pub fn step_count(&self) -> usize {
        self.step_count
    }

    /// Node `t_j = j*h`, valid for `j = -n..m`.
    pub fn node(&self, j: i64) -> f64 {
        j as f64 * self.step
    }

    /// Checks `j` against the full index range `[-n, m]`.
    pub fn check_index(&self, j: i64) -> Result<()> {
        let min = -(self.subdivisions as i64);
        let max = self.step_count as i64;
        if j < min || j > max {
            return Err(Error::IndexOutOfRange { index: j, min, max });
        }
        Ok(())
    }

    /// Same mesh with `factor` times more subdivisions.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        Self::new(self.delay, self.horizon, self.subdivisions * factor)
    }
}

/// L1 weights `b_i = (i+1)^(1-alpha) - i^(1-alpha)` for one order.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Weights {
    order: f64,
    values: Vec<f64>,
}

impl L1Weights {
    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Computes `b_0..b_{count-1}` for the given order.
pub fn l1_weights(order: f64, count: usize) -> Result<L1Weights> {
    if !(order > 0.0 && order < 1.0) {
        return Err(Error::OrderOutOfRange(order));
    }
    if count == 0 {
        return Err(Error::NonPositiveInput {
            name: "count",
            value: 0.0,
        });
    }
    let p = 1.0 - order;
    let mut values = Vec::with_capacity(count);
    let mut prev = 0.0f64; // i^p at i = 0
    for i in 0..count {
        let next = ((i + 1) as f64).powf(p);
        values.push(next - prev);
        prev = next;
    }
    Ok(L1Weights { order, values })
}

pub(crate) fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}

/// Single-term coefficient `c_q = a_q * h^(1-alpha_q) / Gamma(2-alpha_q)`
/// of the implicit scheme's shift.
pub fn multi_term_coefficient(term: &FractionalTerm, step: f64) -> Result<f64> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::NonPositiveInput {
            name: "step",
            value: step,
        });
    }
    Ok(term.weight() * step.powf(1.0 - term.order()) / gamma_fn(2.0 - term.order()))
}

/// Compensated (Kahan) vector accumulator.
#[derive(Debug, Clone)]
pub(crate) struct KahanVec {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl KahanVec {
    pub fn zeros(dim: usize) -> Self {
        Self {
            sum: vec![0.0; dim],
            comp: vec![0.0; dim],
        }
    }

    pub fn from_vec(v: Vec<f64>) -> Self {
        let dim = v.len();
        Self {
            sum: v,
            comp: vec![0.0; dim],
        }
    }

    pub fn add_scaled(&mut self, v: &[f64], scale: f64) {
        debug_assert_eq!(v.len(), self.sum.len());
        for ((s, c), x) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(v) {
            let y = scale * x - *c;
            let t = *s + y;
            *c = (t - *s) - y;
            *s = t;
        }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.sum
    }
}

fn check_dims(differences: &[Vec<f64>]) -> Result<usize> {
    let first = differences.first().ok_or(Error::EmptyHistory)?;
    let dim = first.len();
    for d in differences {
        if d.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: d.len(),
            });
        }
    }
    Ok(dim)
}

/// Discrete Caputo derivative at node `j = differences.len()` from the
/// backward differences `d_1..d_j`, with weights supplied by the caller.
pub fn caputo_l1_with(weights: &L1Weights, differences: &[Vec<f64>], step: f64) -> Result<Vec<f64>> {
    let dim = check_dims(differences)?;
    let j = differences.len();
    if weights.len() < j {
        return Err(Error::IndexOutOfRange {
            index: j as i64,
            min: 1,
            max: weights.len() as i64,
        });
    }
    if !(step > 0.0) {
        return Err(Error::NonPositiveInput {
            name: "step",
            value: step,
        });
    }
    let scale = step.powf(1.0 - weights.order()) / gamma_fn(2.0 - weights.order());
    let b = weights.values();
    let mut acc = KahanVec::zeros(dim);
    for (i, d) in differences.iter().enumerate() {
        // i is zero-based, so d = delta_{i+1} and the weight is b_{j-(i+1)}
        acc.add_scaled(d, b[j - i - 1]);
    }
    let mut out = acc.into_vec();
    for x in &mut out {
        *x *= scale;
    }
    Ok(out)
}

/// Discrete Caputo derivative at node `j = differences.len()`.
pub fn caputo_l1(differences: &[Vec<f64>], order: f64, step: f64) -> Result<Vec<f64>> {
    let weights = l1_weights(order, differences.len().max(1))?;
    caputo_l1_with(&weights, differences, step)
}
