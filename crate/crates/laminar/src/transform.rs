//! Analytic transformations of the uniform disk, with exact Jacobians and
//! inverses.
//!
//! These drive two things: generating the transformed-disk data sets, and
//! supplying the ground-truth metric a learned tensor field is scored
//! against. Every variant is a global diffeomorphism of the plane (or of
//! `R^d` for `Linear`), so the pre-image needed by the ground-truth metric
//! always exists.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// A transformation with analytic Jacobian and inverse.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GroundTruthTransform {
    /// `y = x`.
    Identity,
    /// `y = A·x` for an invertible matrix `A` (row-major rows).
    Linear { matrix: Vec<Vec<f64>> },
    /// Rotation by an angle proportional to the radius (2-D):
    /// `y = R(strength·‖x‖)·x`. Volume preserving, radius preserving.
    Swirl { strength: f64 },
    /// `y = (x₁, x₂ + amplitude·sin(frequency·x₁))` (2-D). Unit Jacobian
    /// determinant everywhere.
    SinusoidalBend { amplitude: f64, frequency: f64 },
}

impl GroundTruthTransform {
    /// Convenience constructor for the linear case.
    pub fn linear(a: &Array2<f64>) -> GroundTruthTransform {
        GroundTruthTransform::Linear {
            matrix: a.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }

    /// The shear `[[1, 1], [0, 1]]`.
    pub fn shear() -> GroundTruthTransform {
        GroundTruthTransform::Linear {
            matrix: vec![vec![1.0, 1.0], vec![0.0, 1.0]],
        }
    }

    /// The axis-aligned stretch `diag(sx, sy)`.
    pub fn stretch(sx: f64, sy: f64) -> GroundTruthTransform {
        GroundTruthTransform::Linear {
            matrix: vec![vec![sx, 0.0], vec![0.0, sy]],
        }
    }

    fn linear_matrix(rows: &[Vec<f64>]) -> Array2<f64> {
        let d = rows.len();
        let mut a = Array2::<f64>::zeros((d, d));
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                a[(i, j)] = v;
            }
        }
        a
    }

    /// Number of dimensions the transform acts on (`None` = any, identity).
    pub fn dim(&self) -> Option<usize> {
        match self {
            GroundTruthTransform::Identity => None,
            GroundTruthTransform::Linear { matrix } => Some(matrix.len()),
            GroundTruthTransform::Swirl { .. } | GroundTruthTransform::SinusoidalBend { .. } => {
                Some(2)
            }
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        match self.dim() {
            Some(d) if d != got => Err(Error::Dimension {
                expected: d,
                got,
                context: "transform input".into(),
            }),
            _ => Ok(()),
        }
    }

    /// Apply the transform.
    pub fn apply(&self, x: &ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_dim(x.len())?;
        Ok(match self {
            GroundTruthTransform::Identity => x.to_owned(),
            GroundTruthTransform::Linear { matrix } => {
                Self::linear_matrix(matrix).dot(&x.to_owned())
            }
            GroundTruthTransform::Swirl { strength } => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let (s, c) = (strength * r).sin_cos();
                ndarray::array![c * x[0] - s * x[1], s * x[0] + c * x[1]]
            }
            GroundTruthTransform::SinusoidalBend {
                amplitude,
                frequency,
            } => {
                ndarray::array![x[0], x[1] + amplitude * (frequency * x[0]).sin()]
            }
        })
    }

    /// Pre-image of `y`.
    pub fn inverse(&self, y: &ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_dim(y.len())?;
        match self {
            GroundTruthTransform::Identity => Ok(y.to_owned()),
            GroundTruthTransform::Linear { matrix } => {
                linalg::solve(&Self::linear_matrix(matrix), &y.to_owned())
                    .map_err(|_| Error::Domain("linear transform is singular; no pre-image".into()))
            }
            GroundTruthTransform::Swirl { strength } => {
                // the swirl preserves radius, so the rotation angle is known
                let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
                let (s, c) = (-strength * r).sin_cos();
                Ok(ndarray::array![c * y[0] - s * y[1], s * y[0] + c * y[1]])
            }
            GroundTruthTransform::SinusoidalBend {
                amplitude,
                frequency,
            } => Ok(ndarray::array![
                y[0],
                y[1] - amplitude * (frequency * y[0]).sin()
            ]),
        }
    }

    /// Jacobian `∂T/∂x` at `x`.
    pub fn jacobian(&self, x: &ArrayView1<f64>) -> Result<Array2<f64>> {
        self.check_dim(x.len())?;
        Ok(match self {
            GroundTruthTransform::Identity => Array2::eye(x.len()),
            GroundTruthTransform::Linear { matrix } => Self::linear_matrix(matrix),
            GroundTruthTransform::Swirl { strength } => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let (s, c) = (strength * r).sin_cos();
                let rot = ndarray::array![[c, -s], [s, c]];
                if r < 1e-12 {
                    return Ok(rot);
                }
                // d/dx [R(θ(r)) x] = R + θ'(r) R' x (x/r)ᵀ
                let rde = ndarray::array![[-s, -c], [c, -s]];
                let rx = rde.dot(&x.to_owned());
                let mut jac = rot;
                for i in 0..2 {
                    for j in 0..2 {
                        jac[(i, j)] += strength * rx[i] * x[j] / r;
                    }
                }
                jac
            }
            GroundTruthTransform::SinusoidalBend {
                amplitude,
                frequency,
            } => {
                ndarray::array![
                    [1.0, 0.0],
                    [amplitude * frequency * (frequency * x[0]).cos(), 1.0]
                ]
            }
        })
    }
}
