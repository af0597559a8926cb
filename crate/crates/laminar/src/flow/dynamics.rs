//! Velocity field of the continuous planar flow and its spatial derivative.

use ndarray::{Array1, Array2, ArrayView1};

use super::{FlowModel, PlanarUnit};
use crate::error::Result;

/// Velocity and divergence contribution of a unit mixture at a point.
///
/// Writes `Σ_m u_m tanh(w_m·z + b_m)` into `dz` and returns
/// `dlogp/dt = −Σ_m tanh'(w_m·z + b_m) (u_m·w_m)`, the negative divergence.
/// When `tanh_cache` is given, the per-unit activation values are stored for
/// reuse in backpropagation. Both inference and training call this one
/// routine so replayed losses are bit-identical.
pub(crate) fn eval_stage(
    z: &Array1<f64>,
    units: &[PlanarUnit],
    dots: &[f64],
    dz: &mut Array1<f64>,
    mut tanh_cache: Option<&mut [f64]>,
) -> f64 {
    dz.fill(0.0);
    let mut dlogp = 0.0;
    for (m, unit) in units.iter().enumerate() {
        let mut a = unit.offset;
        for (zi, wi) in z.iter().zip(unit.projection.iter()) {
            a += wi * zi;
        }
        let h = a.tanh();
        let hp = 1.0 - h * h;
        for (dzi, ui) in dz.iter_mut().zip(unit.direction.iter()) {
            *dzi += ui * h;
        }
        dlogp -= hp * dots[m];
        if let Some(cache) = tanh_cache.as_deref_mut() {
            cache[m] = h;
        }
    }
    dlogp
}

impl FlowModel {
    /// Velocity `dz/dt` and log-density rate `dlogp/dt` at `(z, t)`.
    pub fn dynamics(&self, z: &ArrayView1<f64>, t: f64) -> Result<(Array1<f64>, f64)> {
        let units = self.hypernet.units_at(t)?;
        let dots: Vec<f64> = units
            .iter()
            .map(|u| u.direction.dot(&u.projection))
            .collect();
        let mut dz = Array1::zeros(self.dim);
        let dlogp = eval_stage(&z.to_owned(), &units, &dots, &mut dz, None);
        Ok((dz, dlogp))
    }

    /// Spatial derivative of the velocity field,
    /// `∂(dz/dt)/∂z = Σ_m tanh'(w_m·z + b_m) · u_m w_mᵀ`.
    ///
    /// Its trace equals the negative of the `dlogp/dt` returned by
    /// [`Self::dynamics`].
    pub fn dynamics_jacobian(&self, z: &ArrayView1<f64>, t: f64) -> Result<Array2<f64>> {
        let units = self.hypernet.units_at(t)?;
        Ok(velocity_jacobian(&z.to_owned(), &units, self.dim))
    }
}

/// `Σ_m tanh'(w_m·z + b_m) · u_m w_mᵀ` as a dense matrix.
pub(crate) fn velocity_jacobian(z: &Array1<f64>, units: &[PlanarUnit], dim: usize) -> Array2<f64> {
    let mut jac = Array2::<f64>::zeros((dim, dim));
    for unit in units {
        let mut a = unit.offset;
        for (zi, wi) in z.iter().zip(unit.projection.iter()) {
            a += wi * zi;
        }
        let h = a.tanh();
        let hp = 1.0 - h * h;
        for i in 0..dim {
            let ui = hp * unit.direction[i];
            for j in 0..dim {
                jac[(i, j)] += ui * unit.projection[j];
            }
        }
    }
    jac
}
