//! Grünwald–Letnikov fractional-time stepper.
//!
//! The time derivative of `u` equals `K · D^{1-γ}` applied to the discrete
//! Laplacian `L u`, where `D^α` is the GL backward sum with weights
//! [`gl_weights`]. One step solves
//!
//! ```text
//! u' - K Δt^γ [w_0 L u' + Σ_{k≥1} w_k L u^{m+1-k}] = u^m
//! ```
//!
//! so the `w_0` term stays implicit and γ = 1 collapses to backward Euler.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{apply_boundary, SimulationConfig, StateVector, C64};
use crate::scheme::{boundary_rhs, record_trajectory, simulate, step_bands, Trajectory};
use crate::tridiag::{solve_tridiagonal, ThomasFactorization, TridiagonalSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryLength {
    Bounded(usize),
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GLConfig {
    /// Order γ ∈ (0, 1]; the derivative on the Laplacian has order 1 − γ.
    pub gamma: f64,
    pub k_gamma: C64,
    pub memory_length: MemoryLength,
}

impl GLConfig {
    pub fn new(gamma: f64, k_gamma: C64) -> Self {
        Self {
            gamma,
            k_gamma,
            memory_length: MemoryLength::Unbounded,
        }
    }

    pub fn alpha(&self) -> f64 {
        1.0 - self.gamma
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if !(self.k_gamma.re.is_finite() && self.k_gamma.im.is_finite()) {
            return Err(Error::InvalidConfig("K_gamma must be finite".into()));
        }
        if self.memory_length == MemoryLength::Bounded(0) {
            return Err(Error::InvalidConfig("memory_length must be >= 1".into()));
        }
        Ok(())
    }

    /// Coupling `K Δt^γ / h²` of the implicit level.
    pub fn rho(&self, cfg: &SimulationConfig) -> C64 {
        let h = cfg.grid.h();
        self.k_gamma * (cfg.dt.powf(self.gamma) / (h * h))
    }
}

/// `w_0..w_{count-1}` of `(1 - z)^α`, i.e. `(-1)^k binom(α, k)`.
pub fn gl_weights(alpha: f64, count: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(count);
    let mut cur = 1.0;
    for k in 0..count {
        if k > 0 {
            cur *= 1.0 - (alpha + 1.0) / k as f64;
        }
        w.push(cur);
    }
    w
}

/// Three-point Laplacian over h², zero on the boundary nodes.
pub fn laplacian(values: &[C64], h: f64) -> Vec<C64> {
    let n = values.len();
    let inv = 1.0 / (h * h);
    let mut out = vec![C64::new(0.0, 0.0); n];
    for j in 1..n.saturating_sub(1) {
        out[j] = (values[j + 1] - values[j] * 2.0 + values[j - 1]) * inv;
    }
    out
}

/// Past values of `L u`, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct GLHistory {
    entries: VecDeque<Vec<C64>>,
    capacity: Option<usize>,
    /// Time index of the newest entry.
    newest: Option<usize>,
}

impl GLHistory {
    pub fn new(memory: MemoryLength) -> Self {
        Self {
            entries: VecDeque::new(),
            capacity: match memory {
                MemoryLength::Bounded(m) => Some(m),
                MemoryLength::Unbounded => None,
            },
            newest: None,
        }
    }

    /// History holding only `L u` of the given state.
    pub fn seeded(memory: MemoryLength, state: &StateVector, h: f64) -> Self {
        let mut hist = Self::new(memory);
        hist.push(laplacian(&state.values, h), state.time_index);
        hist
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn newest_time(&self) -> Option<usize> {
        self.newest
    }

    /// `entries()[k]` is `L u` at `newest_time() - k`.
    pub fn entries(&self) -> impl Iterator<Item = &Vec<C64>> {
        self.entries.iter()
    }

    fn push(&mut self, lu: Vec<C64>, time_index: usize) {
        self.entries.push_front(lu);
        if let Some(cap) = self.capacity {
            self.entries.truncate(cap);
        }
        self.newest = Some(time_index);
    }
}

fn check_history(history: &GLHistory, prev: &StateVector) -> Result<()> {
    match history.newest {
        Some(t) if t != prev.time_index => Err(Error::InvalidConfig(format!(
            "history ends at step {t}, previous state is step {}",
            prev.time_index
        ))),
        _ => Ok(()),
    }
}

/// Right-hand side `u^m + K Δt^γ Σ_{k≥1} w_k L u^{m+1-k}` with zero boundary rows.
fn memory_rhs(history: &GLHistory, prev: &StateVector, scale: C64, weights: &[f64]) -> Vec<C64> {
    let mut rhs = boundary_rhs(prev);
    let n = rhs.len();
    for (k, lu) in history.entries().enumerate() {
        let w = weights[k + 1];
        if w == 0.0 {
            continue;
        }
        let f = scale * w;
        for j in 1..n - 1 {
            rhs[j] += f * lu[j];
        }
    }
    rhs
}

fn weights_for(history: &GLHistory, gl: &GLConfig) -> Vec<f64> {
    gl_weights(gl.alpha(), history.len() + 1)
}

fn finish(values: Vec<C64>, time_index: usize, history: &mut GLHistory, h: f64) -> StateVector {
    let state = apply_boundary(StateVector::new(values, time_index));
    history.push(laplacian(&state.values, h), time_index);
    state
}

/// Advance one level, factorising from scratch, and append `L u^{m+1}` to the
/// history.
pub fn gl_step(
    history: &mut GLHistory,
    prev: &StateVector,
    cfg: &SimulationConfig,
    gl: &GLConfig,
) -> Result<StateVector> {
    gl.validate()?;
    check_history(history, prev)?;
    let weights = weights_for(history, gl);
    let scale = gl.k_gamma * cfg.dt.powf(gl.gamma);
    let (sub, diag, sup) = step_bands(prev.len(), 2.0, gl.rho(cfg));
    let rhs = memory_rhs(history, prev, scale, &weights);
    let sys = TridiagonalSystem { sub, diag, sup, rhs };
    let next = prev.time_index + 1;
    let values = solve_tridiagonal(&sys).map_err(|e| e.at_step(next))?;
    Ok(finish(values, next, history, cfg.grid.h()))
}

/// Run the GL stepper with the same snapshot contract as [`simulate`].
pub fn gl_simulate(cfg: &SimulationConfig, gl: &GLConfig) -> Result<Trajectory> {
    cfg.validate()?;
    gl.validate()?;
    let h = cfg.grid.h();
    let (sub, diag, sup) = step_bands(cfg.grid.n_points(), 2.0, gl.rho(cfg));
    let factor = ThomasFactorization::new(&sub, &diag, &sup).map_err(|e| e.at_step(1))?;
    let scale = gl.k_gamma * cfg.dt.powf(gl.gamma);
    let all_weights = gl_weights(
        gl.alpha(),
        match gl.memory_length {
            MemoryLength::Bounded(m) => m.min(cfg.n_steps) + 1,
            MemoryLength::Unbounded => cfg.n_steps + 1,
        },
    );
    let mut history: Option<GLHistory> = None;
    record_trajectory(cfg, |prev| {
        let hist = history.get_or_insert_with(|| GLHistory::seeded(gl.memory_length, prev, h));
        let rhs = memory_rhs(hist, prev, scale, &all_weights[..hist.len() + 1]);
        let next = prev.time_index + 1;
        let values = factor.solve(&rhs).map_err(|e| e.at_step(next))?;
        Ok(finish(values, next, hist, h))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub time_index: usize,
    pub l2: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceTable {
    pub rows: Vec<DivergenceRow>,
    pub max_l2: f64,
    pub max_max: f64,
    pub mean_l2: f64,
    pub mean_max: f64,
}

/// Per-snapshot distances between two trajectories on the same grid and
/// snapshot schedule.
pub fn compare_trajectories(a: &Trajectory, b: &Trajectory) -> Result<DivergenceTable> {
    if a.config.grid != b.config.grid {
        return Err(Error::GridMismatch(format!(
            "grids differ: {:?} vs {:?}",
            a.config.grid, b.config.grid
        )));
    }
    if !a.time_indices().eq(b.time_indices()) {
        return Err(Error::GridMismatch("snapshot time indices differ".into()));
    }
    if a.config.dt != b.config.dt {
        return Err(Error::GridMismatch(format!("dt differs: {} vs {}", a.config.dt, b.config.dt)));
    }
    let rows: Vec<DivergenceRow> = a
        .snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(sa, sb)| {
            let (mut sq, mut mx) = (0.0f64, 0.0f64);
            for (x, y) in sa.values.iter().zip(&sb.values) {
                let d = (x - y).norm();
                sq += d * d;
                mx = mx.max(d);
            }
            DivergenceRow {
                time_index: sa.time_index,
                l2: sq.sqrt(),
                max: mx,
            }
        })
        .collect();
    let n = rows.len() as f64;
    Ok(DivergenceTable {
        max_l2: rows.iter().map(|r| r.l2).fold(0.0, f64::max),
        max_max: rows.iter().map(|r| r.max).fold(0.0, f64::max),
        mean_l2: rows.iter().map(|r| r.l2).sum::<f64>() / n,
        mean_max: rows.iter().map(|r| r.max).sum::<f64>() / n,
        rows,
    })
}

/// Distance between the λ-scheme run of `cfg` and the GL run sharing its grid,
/// time step, and initial field.
pub fn compare_lambda_gl(cfg: &SimulationConfig, gl: &GLConfig) -> Result<DivergenceTable> {
    compare_trajectories(&simulate(cfg)?, &gl_simulate(cfg, gl)?)
}
