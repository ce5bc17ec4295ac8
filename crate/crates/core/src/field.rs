//! Grid geometry, complex field state, and initial/boundary conditions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default node count (h = 0.005 on the unit interval).
pub const DEFAULT_N_POINTS: usize = 201;
/// Default time step. With `C = i` this gives `C·Δt/h² = 0.5i`.
pub const DEFAULT_DT: f64 = 1.25e-5;
pub const DEFAULT_N_STEPS: usize = 2000;
pub const DEFAULT_SNAPSHOT_STRIDE: usize = 2;

/// Uniform 1-D grid on `[0, domain_length]`, both boundary nodes included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    domain_length: f64,
    n_points: usize,
    h: f64,
}

impl GridSpec {
    pub fn new(domain_length: f64, n_points: usize) -> Result<Self> {
        if n_points < 5 {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least 5 nodes, got {n_points}"
            )));
        }
        if !(domain_length.is_finite() && domain_length > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "domain length must be positive, got {domain_length}"
            )));
        }
        Ok(Self {
            domain_length,
            n_points,
            h: domain_length / (n_points - 1) as f64,
        })
    }

    /// Unit interval with `n_points` nodes.
    pub fn unit(n_points: usize) -> Result<Self> {
        Self::new(1.0, n_points)
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Coordinate of node `j`.
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn coordinates(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |j| self.x(j))
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::unit(DEFAULT_N_POINTS).expect("default grid is valid")
    }
}

/// Complex field sampled on every grid node at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub values: Vec<C64>,
    pub time_index: usize,
}

impl StateVector {
    pub fn new(values: Vec<C64>, time_index: usize) -> Self {
        Self { values, time_index }
    }

    pub fn zeros(n: usize, time_index: usize) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); n], time_index)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `|u_j|` for every node.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Plain Euclidean norm of the node values.
    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn boundary_is_zero(&self) -> bool {
        match (self.values.first(), self.values.last()) {
            (Some(a), Some(b)) => *a == C64::new(0.0, 0.0) && *b == C64::new(0.0, 0.0),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    Uniform {
        level: f64,
    },
    /// Plateau at `level`, falling off linearly with slope `gradient` (per
    /// unit x) over the outer `ramp_width` fraction of the domain at each end.
    UniformWithEdgeRamp {
        level: f64,
        gradient: f64,
        ramp_width: f64,
    },
    Samples {
        values: Vec<C64>,
    },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Uniform { level: 1.0 }
    }
}

impl InitialCondition {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        match self {
            InitialCondition::Uniform { .. } => Ok(()),
            InitialCondition::UniformWithEdgeRamp { ramp_width, .. } => {
                if *ramp_width > 0.0 && *ramp_width <= 0.5 {
                    Ok(())
                } else {
                    Err(Error::InvalidRamp(*ramp_width))
                }
            }
            InitialCondition::Samples { values } => {
                if values.len() == grid.n_points() {
                    Ok(())
                } else {
                    Err(Error::SamplesLengthMismatch {
                        expected: grid.n_points(),
                        got: values.len(),
                    })
                }
            }
        }
    }
}

/// Evaluate `ic` on `grid` at time level 0 and zero both boundary nodes.
pub fn build_initial_field(ic: &InitialCondition, grid: &GridSpec) -> Result<StateVector> {
    ic.validate(grid)?;
    let n = grid.n_points();
    let values = match ic {
        InitialCondition::Uniform { level } => vec![C64::new(*level, 0.0); n],
        InitialCondition::UniformWithEdgeRamp {
            level,
            gradient,
            ramp_width,
        } => {
            let width = ramp_width * grid.domain_length();
            (0..n)
                .map(|j| {
                    // distance to the nearer boundary, computed from the index so
                    // both ends are mirror images bit for bit
                    let dist = j.min(n - 1 - j) as f64 * grid.h();
                    let v = if dist < width {
                        level - gradient * (width - dist)
                    } else {
                        *level
                    };
                    C64::new(v, 0.0)
                })
                .collect()
        }
        InitialCondition::Samples { values } => values.clone(),
    };
    Ok(apply_boundary(StateVector::new(values, 0)))
}

/// Force zero Dirichlet values on the two end nodes.
pub fn apply_boundary(mut state: StateVector) -> StateVector {
    if let Some(first) = state.values.first_mut() {
        *first = C64::new(0.0, 0.0);
    }
    if let Some(last) = state.values.last_mut() {
        *last = C64::new(0.0, 0.0);
    }
    state
}

/// Everything needed to reproduce one run of either stepper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub grid: GridSpec,
    pub lambda: f64,
    pub c_coef: C64,
    pub dt: f64,
    pub n_steps: usize,
    pub snapshot_stride: usize,
    pub ic: InitialCondition,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            lambda: 1.0,
            c_coef: C64::new(0.0, 1.0),
            dt: DEFAULT_DT,
            n_steps: DEFAULT_N_STEPS,
            snapshot_stride: DEFAULT_SNAPSHOT_STRIDE,
            ic: InitialCondition::default(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.n_steps < 1 {
            return Err(Error::InvalidConfig("n_steps must be >= 1".into()));
        }
        if self.snapshot_stride < 1 {
            return Err(Error::InvalidConfig("snapshot_stride must be >= 1".into()));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidConfig("lambda must be finite".into()));
        }
        if !(self.c_coef.re.is_finite() && self.c_coef.im.is_finite()) {
            return Err(Error::InvalidConfig("C must be finite".into()));
        }
        self.ic.validate(&self.grid)
    }

    /// `C·Δt/h²`, the coupling of a node to its neighbours in one implicit step.
    pub fn rho(&self) -> C64 {
        self.c_coef * (self.dt / (self.grid.h() * self.grid.h()))
    }

    /// Whether time level `m` is recorded in a trajectory.
    pub fn is_snapshot_step(&self, m: usize) -> bool {
        m.is_multiple_of(self.snapshot_stride) || m == self.n_steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn grid_spacing() {
        let g = GridSpec::unit(5).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(GridSpec::default().h(), 1.0 / 200.0);
        assert!(GridSpec::unit(4).is_err());
        assert!(GridSpec::new(0.0, 10).is_err());
    }

    #[test]
    fn uniform_one_with_zero_edges() {
        let g = GridSpec::unit(5).unwrap();
        let s = build_initial_field(&InitialCondition::Uniform { level: 1.0 }, &g).unwrap();
        assert_eq!(
            s.values,
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]
        );
        assert_eq!(s.time_index, 0);
    }

    #[test]
    fn uniform_zero() {
        let g = GridSpec::unit(17).unwrap();
        let s = build_initial_field(&InitialCondition::Uniform { level: 0.0 }, &g).unwrap();
        assert!(s.values.iter().all(|v| *v == c(0.0, 0.0)));
    }

    #[test]
    fn edge_ramp_values() {
        // hand-evaluated: x = 0.1 is the plateau edge, ramp nodes follow
        // 1 - 0.001 * (0.1 - x); only x = 0 and x = 1 sit strictly inside it
        let g = GridSpec::unit(11).unwrap();
        let ic = InitialCondition::UniformWithEdgeRamp {
            level: 1.0,
            gradient: 0.001,
            ramp_width: 0.1,
        };
        let s = build_initial_field(&ic, &g).unwrap();
        assert_eq!(s.values[0], c(0.0, 0.0));
        assert_eq!(s.values[10], c(0.0, 0.0));
        for j in 1..10 {
            assert_eq!(s.values[j], c(1.0, 0.0), "node {j}");
        }

        // finer grid: ramp nodes at x = 0.025, 0.05, 0.075
        let g = GridSpec::unit(41).unwrap();
        let s = build_initial_field(&ic, &g).unwrap();
        let expected = [0.0, 0.999925, 0.99995, 0.999975, 1.0, 1.0];
        for (j, e) in expected.iter().enumerate() {
            assert!((s.values[j].re - e).abs() < 1e-15, "node {j}: {}", s.values[j]);
            assert_eq!(s.values[j], s.values[40 - j]);
        }
    }

    #[test]
    fn initial_condition_errors() {
        let g = GridSpec::unit(7).unwrap();
        let short = InitialCondition::Samples {
            values: vec![c(1.0, 0.0); 6],
        };
        assert_eq!(
            build_initial_field(&short, &g),
            Err(Error::SamplesLengthMismatch { expected: 7, got: 6 })
        );
        for w in [0.0, -0.1, 0.51] {
            let ic = InitialCondition::UniformWithEdgeRamp {
                level: 1.0,
                gradient: 0.1,
                ramp_width: w,
            };
            assert_eq!(build_initial_field(&ic, &g), Err(Error::InvalidRamp(w)));
        }
        let half = InitialCondition::UniformWithEdgeRamp {
            level: 1.0,
            gradient: 0.1,
            ramp_width: 0.5,
        };
        assert!(build_initial_field(&half, &g).is_ok());
    }

    #[test]
    fn boundary_examples() {
        let s = StateVector::new(
            [3.0, 1.0, 1.0, 1.0, 7.0].iter().map(|&v| c(v, 0.0)).collect(),
            0,
        );
        let b = apply_boundary(s);
        assert_eq!(b.values.iter().map(|v| v.re).collect::<Vec<_>>(), vec![0.0, 1.0, 1.0, 1.0, 0.0]);

        let z = StateVector::zeros(6, 3);
        assert_eq!(apply_boundary(z.clone()), z);

        let s = StateVector::new(vec![c(0.0, 0.0), c(2.0, 1.0), c(0.0, 0.0)], 0);
        assert_eq!(apply_boundary(s.clone()), s);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimulationConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.dt = 0.0;
        assert!(cfg.validate().is_err());
        cfg = SimulationConfig { n_steps: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg = SimulationConfig { snapshot_stride: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn snapshot_positions() {
        let cfg = SimulationConfig {
            n_steps: 7,
            snapshot_stride: 3,
            ..Default::default()
        };
        let steps: Vec<_> = (0..=7).filter(|&m| cfg.is_snapshot_step(m)).collect();
        assert_eq!(steps, vec![0, 3, 6, 7]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn field() -> impl Strategy<Value = StateVector> {
            prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..40)
                .prop_map(|v| StateVector::new(v.into_iter().map(|(a, b)| C64::new(a, b)).collect(), 0))
        }

        proptest! {
            #[test]
            fn boundary_idempotent(s in field()) {
                let once = apply_boundary(s.clone());
                prop_assert_eq!(apply_boundary(once.clone()), once.clone());
                prop_assert!(once.boundary_is_zero());
                let n = s.len();
                if n > 2 {
                    prop_assert_eq!(&once.values[1..n - 1], &s.values[1..n - 1]);
                }
            }

            #[test]
            fn built_fields_satisfy_invariants(
                n in 5usize..120,
                level in -3.0f64..3.0,
                gradient in 0.0f64..1.0,
                width in 0.01f64..0.5,
            ) {
                let g = GridSpec::unit(n).unwrap();
                let ic = InitialCondition::UniformWithEdgeRamp { level, gradient, ramp_width: width };
                let s = build_initial_field(&ic, &g).unwrap();
                prop_assert_eq!(s.len(), n);
                prop_assert!(s.boundary_is_zero());

                let s = build_initial_field(&InitialCondition::Uniform { level }, &g).unwrap();
                prop_assert!(s.boundary_is_zero());
                prop_assert!(s.values[1..n - 1].iter().all(|v| *v == C64::new(level, 0.0)));
            }
        }
    }
}
