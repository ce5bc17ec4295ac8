//! Complex tridiagonal systems and the Thomas algorithm.
//!
//! The elimination runs without pivoting. Every pivot is checked against
//! [`PIVOT_FLOOR`] and every solution against a relative residual bound, so a
//! breakdown surfaces as [`Error::SingularOrIllConditioned`] instead of a
//! silently wrong vector.

use crate::error::{Error, Result};
use crate::field::C64;

/// Smallest admissible pivot magnitude during forward elimination.
pub const PIVOT_FLOOR: f64 = 1e-14;
/// Largest admissible `‖Ax − b‖₂ / ‖b‖₂` after a solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// `sub[i]` couples row `i + 1` to column `i`; `sup[i]` couples row `i` to
/// column `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<C64>,
    pub diag: Vec<C64>,
    pub sup: Vec<C64>,
    pub rhs: Vec<C64>,
}

impl TridiagonalSystem {
    pub fn new(sub: Vec<C64>, diag: Vec<C64>, sup: Vec<C64>, rhs: Vec<C64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n || rhs.len() != n {
            return Err(Error::InvalidConfig(format!(
                "inconsistent tridiagonal lengths: sub {}, diag {}, sup {}, rhs {}",
                sub.len(),
                n,
                sup.len(),
                rhs.len()
            )));
        }
        Ok(Self { sub, diag, sup, rhs })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `A·x` for the matrix part of the system.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        apply_bands(&self.sub, &self.diag, &self.sup, x)
    }
}

fn apply_bands(sub: &[C64], diag: &[C64], sup: &[C64], x: &[C64]) -> Vec<C64> {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut acc = diag[i] * x[i];
            if i > 0 {
                acc += sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += sup[i] * x[i + 1];
            }
            acc
        })
        .collect()
}

/// Forward-eliminated form of a tridiagonal matrix. Reusable for any number
/// of right-hand sides; a solve through a stored factorization performs the
/// same floating-point operations as [`solve_tridiagonal`].
#[derive(Debug, Clone)]
pub struct ThomasFactorization {
    sub: Vec<C64>,
    diag: Vec<C64>,
    sup: Vec<C64>,
    /// Eliminated pivots `d'_i`.
    pivots: Vec<C64>,
    /// Normalised super-diagonal `c'_i = sup_i / d'_i`.
    upper: Vec<C64>,
}

impl ThomasFactorization {
    pub fn new(sub: &[C64], diag: &[C64], sup: &[C64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::InvalidConfig("inconsistent tridiagonal band lengths".into()));
        }
        let mut pivots = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let p = if i == 0 {
                diag[0]
            } else {
                diag[i] - sub[i - 1] * upper[i - 1]
            };
            if !(p.norm() >= PIVOT_FLOOR) {
                return Err(Error::SingularOrIllConditioned {
                    step: None,
                    detail: format!("pivot {i} has magnitude {:e}", p.norm()),
                });
            }
            pivots.push(p);
            if i + 1 < n {
                upper.push(sup[i] / p);
            }
        }
        Ok(Self {
            sub: sub.to_vec(),
            diag: diag.to_vec(),
            sup: sup.to_vec(),
            pivots,
            upper,
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Solve `A·x = rhs` and verify the residual.
    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::InvalidConfig(format!(
                "rhs has length {}, matrix has {n} rows",
                rhs.len()
            )));
        }
        let mut x = Vec::with_capacity(n);
        for i in 0..n {
            let num = if i == 0 {
                rhs[0]
            } else {
                rhs[i] - self.sub[i - 1] * x[i - 1]
            };
            x.push(num / self.pivots[i]);
        }
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= self.upper[i] * next;
        }
        self.check_residual(&x, rhs)?;
        Ok(x)
    }

    fn check_residual(&self, x: &[C64], rhs: &[C64]) -> Result<()> {
        let ax = apply_bands(&self.sub, &self.diag, &self.sup, x);
        let res = ax
            .iter()
            .zip(rhs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let bnorm = rhs.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
        let rel = res / bnorm.max(f64::MIN_POSITIVE);
        if rel <= RESIDUAL_TOLERANCE {
            Ok(())
        } else {
            Err(Error::SingularOrIllConditioned {
                step: None,
                detail: format!("relative residual {rel:e} exceeds {RESIDUAL_TOLERANCE:e}"),
            })
        }
    }
}

/// Solve a single tridiagonal system.
pub fn solve_tridiagonal(sys: &TridiagonalSystem) -> Result<Vec<C64>> {
    ThomasFactorization::new(&sys.sub, &sys.diag, &sys.sup)?.solve(&sys.rhs)
}
