//! The λ-family of implicit difference schemes.
//!
//! One step solves, for every interior node `j`,
//!
//! ```text
//! u[j]' - ρ (u[j+1]' - λ u[j]' + u[j-1]') = u[j],      ρ = C Δt / h²
//! ```
//!
//! with primes marking the new time level. At `λ = 2` this is backward Euler
//! for `∂u/∂t = C ∂²u/∂x²`; other values of `λ` change only the centre
//! coefficient of the spatial operator.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{apply_boundary, build_initial_field, SimulationConfig, StateVector, C64};
use crate::tridiag::{solve_tridiagonal, ThomasFactorization, TridiagonalSystem};

/// Snapshots of one run together with the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config: SimulationConfig,
    pub snapshots: Vec<StateVector>,
}

impl Trajectory {
    pub fn time_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.snapshots.iter().map(|s| s.time_index)
    }

    pub fn final_state(&self) -> &StateVector {
        self.snapshots.last().expect("trajectory holds at least t = 0")
    }
}

/// Matrix bands of one λ-step; boundary rows are identity rows.
pub(crate) fn step_bands(n: usize, lambda: f64, rho: C64) -> (Vec<C64>, Vec<C64>, Vec<C64>) {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let mut sub = vec![-rho; n - 1];
    let mut diag = vec![one + rho * lambda; n];
    let mut sup = vec![-rho; n - 1];
    diag[0] = one;
    diag[n - 1] = one;
    sup[0] = zero;
    sub[n - 2] = zero;
    (sub, diag, sup)
}

pub(crate) fn boundary_rhs(prev: &StateVector) -> Vec<C64> {
    let mut rhs = prev.values.clone();
    let n = rhs.len();
    rhs[0] = C64::new(0.0, 0.0);
    rhs[n - 1] = C64::new(0.0, 0.0);
    rhs
}

/// Linear system whose solution is the next time level after `prev`.
pub fn assemble_step_system(prev: &StateVector, cfg: &SimulationConfig) -> TridiagonalSystem {
    let n = prev.len();
    let (sub, diag, sup) = step_bands(n, cfg.lambda, cfg.rho());
    TridiagonalSystem {
        sub,
        diag,
        sup,
        rhs: boundary_rhs(prev),
    }
}

/// Advance one time level, assembling and factorising from scratch.
pub fn step(prev: &StateVector, cfg: &SimulationConfig) -> Result<StateVector> {
    let sys = assemble_step_system(prev, cfg);
    let values = solve_tridiagonal(&sys).map_err(|e| e.at_step(prev.time_index + 1))?;
    Ok(apply_boundary(StateVector::new(values, prev.time_index + 1)))
}

/// Repeated λ-steps sharing one factorisation of the (time-invariant) matrix.
#[derive(Debug, Clone)]
pub struct LambdaStepper {
    factor: ThomasFactorization,
}

impl LambdaStepper {
    pub fn new(cfg: &SimulationConfig) -> Result<Self> {
        let (sub, diag, sup) = step_bands(cfg.grid.n_points(), cfg.lambda, cfg.rho());
        Ok(Self {
            factor: ThomasFactorization::new(&sub, &diag, &sup)?,
        })
    }

    pub fn advance(&self, prev: &StateVector) -> Result<StateVector> {
        let values = self
            .factor
            .solve(&boundary_rhs(prev))
            .map_err(|e| e.at_step(prev.time_index + 1))?;
        Ok(apply_boundary(StateVector::new(values, prev.time_index + 1)))
    }
}

/// Per-step multiplier of the discrete sine mode `sin(kπx/L)`:
/// `1 / (1 - ρ (2 cos(kπ/(n-1)) - λ))`.
pub fn amplification_factor(k: usize, cfg: &SimulationConfig) -> Result<C64> {
    let n = cfg.grid.n_points();
    if k < 1 || k > n - 2 {
        return Err(Error::InvalidConfig(format!(
            "mode index {k} outside 1..={}",
            n - 2
        )));
    }
    let theta = k as f64 * PI / (n - 1) as f64;
    let denom = C64::new(1.0, 0.0) - cfg.rho() * (2.0 * theta.cos() - cfg.lambda);
    if denom.norm() < 1e-14 {
        return Err(Error::DivisionNearZero(denom.norm()));
    }
    Ok(denom.inv())
}

/// Drive `advance` from the initial field, keeping the configured snapshots.
pub(crate) fn record_trajectory<F>(cfg: &SimulationConfig, mut advance: F) -> Result<Trajectory>
where
    F: FnMut(&StateVector) -> Result<StateVector>,
{
    cfg.validate()?;
    let mut state = build_initial_field(&cfg.ic, &cfg.grid)?;
    let mut snapshots = Vec::with_capacity(cfg.n_steps / cfg.snapshot_stride + 2);
    snapshots.push(state.clone());
    for m in 1..=cfg.n_steps {
        state = advance(&state)?;
        if cfg.is_snapshot_step(m) {
            snapshots.push(state.clone());
        }
    }
    Ok(Trajectory {
        config: cfg.clone(),
        snapshots,
    })
}

/// Run the λ-scheme for `cfg.n_steps` steps.
pub fn simulate(cfg: &SimulationConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let stepper = LambdaStepper::new(cfg).map_err(|e| e.at_step(1))?;
    record_trajectory(cfg, |s| stepper.advance(s))
}
