//! Continuous planar flow: a time-dependent mixture of planar units whose
//! parameters come from a small hypernetwork, integrated by fixed-step RK4.
//!
//! The velocity field is
//!
//! ```text
//! dz/dt = Σ_m  u_m · tanh(w_m·z + b_m)
//! ```
//!
//! with `(u_m, w_m, b_m)` produced by a one-hidden-layer MLP of the scalar
//! time `t`. The divergence is analytic, so the log-density change and the
//! full Jacobian can be advanced jointly with the position. Training
//! maximises the data log-likelihood by reverse-mode differentiation through
//! the unrolled integrator.

mod checkpoint;
mod dynamics;
mod integrate;
mod train;

pub(crate) use checkpoint::write_atomic;
pub use integrate::mean_negative_log_likelihood;
pub use train::{loss_and_grad, train, TrainConfig, TrainReport};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};

/// Parameters of one planar unit at a fixed time.
#[derive(Debug, Clone)]
pub struct PlanarUnit {
    /// Direction the unit pushes along (`u` in the velocity field).
    pub direction: Array1<f64>,
    /// Projection vector forming the scalar feature `w·z + b`.
    pub projection: Array1<f64>,
    /// Scalar offset of the feature.
    pub offset: f64,
}

/// One-hidden-layer MLP mapping time to the stacked planar-unit parameters.
///
/// Input is the scalar `t`; the output vector of length
/// `flow_width · (2·dim + 1)` decodes per unit into
/// `[direction (dim) | projection (dim) | offset (1)]`.
#[derive(Debug, Clone)]
pub struct HyperNetwork {
    pub dim: usize,
    pub flow_width: usize,
    pub hidden_width: usize,
    pub weights_in: Array1<f64>,
    pub bias_in: Array1<f64>,
    pub weights_out: Array2<f64>,
    pub bias_out: Array1<f64>,
}

impl HyperNetwork {
    /// Output width `flow_width · (2·dim + 1)`.
    pub fn output_dim(&self) -> usize {
        self.flow_width * (2 * self.dim + 1)
    }

    /// Total number of free parameters.
    pub fn n_params(&self) -> usize {
        let h = self.hidden_width;
        let o = self.output_dim();
        h + h + o * h + o
    }

    /// Random initialization: unit-scale input layer, small (±0.1) output
    /// layer so the initial velocity field is near zero and the flow starts
    /// near the identity.
    pub fn init(dim: usize, flow_width: usize, hidden_width: usize, rng: &mut impl Rng) -> Self {
        let o = flow_width * (2 * dim + 1);
        let weights_in = Array1::from_iter((0..hidden_width).map(|_| rng.random_range(-1.0..1.0)));
        let bias_in = Array1::from_iter((0..hidden_width).map(|_| rng.random_range(-1.0..1.0)));
        let mut weights_out = Array2::zeros((o, hidden_width));
        for r in 0..o {
            for c in 0..hidden_width {
                weights_out[(r, c)] = rng.random_range(-0.1..0.1);
            }
        }
        let bias_out = Array1::from_iter((0..o).map(|_| rng.random_range(-0.1..0.1)));
        HyperNetwork {
            dim,
            flow_width,
            hidden_width,
            weights_in,
            bias_in,
            weights_out,
            bias_out,
        }
    }

    /// Forward pass at time `t`, keeping the hidden activations for backprop.
    pub(crate) fn forward(&self, t: f64) -> (Array1<f64>, Array1<f64>) {
        let hidden = Array1::from_iter(
            self.weights_in
                .iter()
                .zip(self.bias_in.iter())
                .map(|(&w, &b)| (w * t + b).tanh()),
        );
        let mut out = self.bias_out.clone();
        for r in 0..out.len() {
            let mut acc = out[r];
            for c in 0..self.hidden_width {
                acc += self.weights_out[(r, c)] * hidden[c];
            }
            out[r] = acc;
        }
        (hidden, out)
    }

    /// Planar-unit parameters at time `t`.
    ///
    /// Fails with [`Error::InvalidModel`] if any output is non-finite.
    pub fn units_at(&self, t: f64) -> Result<Vec<PlanarUnit>> {
        let (_, out) = self.forward(t);
        self.decode(&out, t)
    }

    fn decode(&self, out: &Array1<f64>, t: f64) -> Result<Vec<PlanarUnit>> {
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "non-finite hypernetwork output at t = {t}"
            )));
        }
        let d = self.dim;
        let stride = 2 * d + 1;
        Ok((0..self.flow_width)
            .map(|m| {
                let base = m * stride;
                PlanarUnit {
                    direction: Array1::from_iter((0..d).map(|i| out[base + i])),
                    projection: Array1::from_iter((0..d).map(|i| out[base + d + i])),
                    offset: out[base + 2 * d],
                }
            })
            .collect())
    }

    /// Flat parameter vector: `[weights_in | bias_in | weights_out (row-major) | bias_out]`.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        v.extend(self.weights_in.iter());
        v.extend(self.bias_in.iter());
        v.extend(self.weights_out.iter());
        v.extend(self.bias_out.iter());
        v
    }

    /// Inverse of [`Self::params_flat`].
    pub fn set_params_flat(&mut self, params: &[f64]) {
        assert_eq!(
            params.len(),
            self.n_params(),
            "parameter vector length mismatch"
        );
        let h = self.hidden_width;
        let o = self.output_dim();
        let (a, rest) = params.split_at(h);
        let (b, rest) = rest.split_at(h);
        let (w, c) = rest.split_at(o * h);
        self.weights_in = Array1::from_iter(a.iter().copied());
        self.bias_in = Array1::from_iter(b.iter().copied());
        self.weights_out = Array2::from_shape_vec((o, h), w.to_vec()).expect("shape checked");
        self.bias_out = Array1::from_iter(c.iter().copied());
    }
}

/// A trained (or initialized) flow: hypernetwork plus integration settings
/// and the standardization affine recorded from the training data.
///
/// The activation is fixed to `tanh` (smooth and 1-Lipschitz). Inference
/// methods are pure; a shared model may be used concurrently.
#[derive(Debug, Clone)]
pub struct FlowModel {
    pub hypernet: HyperNetwork,
    pub dim: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// Fixed RK4 step count used by inference.
    pub n_steps: usize,
    pub data_shift: Array1<f64>,
    pub data_scale: Array1<f64>,
}

impl FlowModel {
    /// Identity-standardization model around the given hypernetwork.
    pub fn with_identity_standardization(hypernet: HyperNetwork, n_steps: usize) -> Self {
        let dim = hypernet.dim;
        FlowModel {
            hypernet,
            dim,
            t_start: 0.0,
            t_end: 1.0,
            n_steps,
            data_shift: Array1::zeros(dim),
            data_scale: Array1::ones(dim),
        }
    }

    /// `(x − shift) / scale`, the coordinates the ODE runs in.
    pub fn standardize(&self, x: &ArrayView1<f64>) -> Array1<f64> {
        Array1::from_iter(
            x.iter()
                .zip(self.data_shift.iter())
                .zip(self.data_scale.iter())
                .map(|((&x, &mu), &s)| (x - mu) / s),
        )
    }

    /// Log-density offset of the standardization affine,
    /// `log |det diag(1/scale)| = −Σ log scale_i`.
    pub fn standardization_log_det(&self) -> f64 {
        -self.data_scale.iter().map(|s| s.ln()).sum::<f64>()
    }
}

/// State carried along a flow trajectory.
#[derive(Debug, Clone)]
pub struct FlowState {
    /// Position `z(t)`.
    pub z: Array1<f64>,
    /// Accumulated log-density change along the trajectory
    /// (`d(delta_logp)/dt = −div f`, so `log|det J| = −delta_logp`).
    pub delta_logp: f64,
    /// Accumulated Jacobian `∂z(t)/∂z(0)` when requested.
    pub jacobian: Option<Array2<f64>>,
}

/// Planar-unit parameters tabulated at the `2·n_steps + 1` half-step times an
/// RK4 sweep touches, so batched integration evaluates the hypernetwork once
/// per time instead of once per point.
pub struct UnitTable {
    pub(crate) step: f64,
    pub(crate) times: Vec<f64>,
    pub(crate) units: Vec<Vec<PlanarUnit>>,
    /// `direction·projection` per unit, reused by the divergence term.
    pub(crate) dots: Vec<Vec<f64>>,
}

impl UnitTable {
    pub fn build(model: &FlowModel, n_steps: usize) -> Result<UnitTable> {
        build_table(&model.hypernet, model.t_start, model.t_end, n_steps)
    }
}

pub(crate) fn build_table(
    hypernet: &HyperNetwork,
    t_start: f64,
    t_end: f64,
    n_steps: usize,
) -> Result<UnitTable> {
    build_table_with_hidden(hypernet, t_start, t_end, n_steps).map(|(t, _)| t)
}

/// Table plus the hypernetwork hidden activations per time, kept by the
/// trainer for backpropagation.
pub(crate) fn build_table_with_hidden(
    hypernet: &HyperNetwork,
    t_start: f64,
    t_end: f64,
    n_steps: usize,
) -> Result<(UnitTable, Vec<Array1<f64>>)> {
    assert!(n_steps >= 1, "integrator needs at least one step");
    assert!(t_end > t_start, "integration horizon must be positive");
    let h = (t_end - t_start) / n_steps as f64;
    let mut times = Vec::with_capacity(2 * n_steps + 1);
    for i in 0..n_steps {
        let t = t_start + i as f64 * h;
        times.push(t);
        times.push(t + 0.5 * h);
    }
    times.push(t_end);
    let mut units = Vec::with_capacity(times.len());
    let mut dots = Vec::with_capacity(times.len());
    let mut hiddens = Vec::with_capacity(times.len());
    for &t in &times {
        let (hidden, out) = hypernet.forward(t);
        let u = hypernet.decode(&out, t)?;
        dots.push(u.iter().map(|p| p.direction.dot(&p.projection)).collect());
        units.push(u);
        hiddens.push(hidden);
    }
    Ok((
        UnitTable {
            step: h,
            times,
            units,
            dots,
        },
        hiddens,
    ))
}

/// Column means and population standard deviations of a point set; zero
/// spread maps to unit scale so the affine stays invertible.
pub(crate) fn standardization_of(points: &ArrayView2<f64>) -> (Array1<f64>, Array1<f64>) {
    let n = points.nrows() as f64;
    let d = points.ncols();
    let mut shift = Array1::<f64>::zeros(d);
    let mut scale = Array1::<f64>::zeros(d);
    for c in 0..d {
        let col = points.column(c);
        let mu = col.sum() / n;
        let var = col.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
        shift[c] = mu;
        let sd = var.sqrt();
        scale[c] = if sd > 1e-12 { sd } else { 1.0 };
    }
    (shift, scale)
}
