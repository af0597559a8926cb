//! Maximum-likelihood training of the flow.
//!
//! The objective is the mean negative log-likelihood under the standard
//! normal base. Gradients are exact reverse-mode derivatives through the
//! unrolled RK4 steps (discretize-then-optimize): each step's four stage
//! evaluations are replayed backwards, adjoints on the per-unit parameters
//! are bucketed by evaluation time, and one hypernetwork backward pass per
//! time folds them into the weight gradient. Training is single-threaded
//! and fully deterministic for a given seed.

use ndarray::{Array1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::integrate::{nll_constant, rk4_forward, StepRecord};
use super::{build_table_with_hidden, standardization_of, FlowModel, HyperNetwork, UnitTable};
use crate::error::{Error, Result};

/// Training hyperparameters. Defaults target the 2-D toy sets the pipeline
/// is built around; everything is adjustable.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    /// Number of planar units in the velocity field.
    pub flow_width: usize,
    /// Hypernetwork hidden layer width.
    pub hidden_width: usize,
    /// RK4 steps during training.
    pub n_steps_train: usize,
    /// RK4 steps recorded on the returned model for inference.
    pub n_steps_inference: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Minimum admissible number of training points.
    pub min_points: usize,
    /// Data sets up to this size train full-batch; larger ones are shuffled
    /// into minibatches of `batch_size`.
    pub full_batch_limit: usize,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            flow_width: 32,
            hidden_width: 32,
            n_steps_train: 32,
            n_steps_inference: 64,
            epochs: 200,
            learning_rate: 1e-2,
            seed: 0,
            min_points: 32,
            full_batch_limit: 4096,
            batch_size: 1024,
        }
    }
}

/// What happened during a training run.
#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Mean negative log-likelihood per epoch, evaluated at the parameters
    /// *before* that epoch's update.
    pub losses: Vec<f64>,
    /// Flat parameter vector the run started from (see
    /// [`HyperNetwork::params_flat`]); replaying it reproduces `losses[0]`
    /// exactly.
    pub initial_params: Vec<f64>,
    /// Set when a non-finite loss aborted the run; the returned model holds
    /// the last parameters with a finite loss.
    pub aborted_at_epoch: Option<usize>,
    pub n_steps_train: usize,
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let b1c = 1.0 - self.beta1.powi(self.t);
        let b2c = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / b1c;
            let vh = self.v[i] / b2c;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Fit a flow that transports `points` to a standard normal.
///
/// Returns the model (with the recorded standardization and the inference
/// step count) and a [`TrainReport`]. A non-finite loss aborts the run and
/// the model keeps the last finite parameters.
pub fn train(points: &ArrayView2<f64>, config: &TrainConfig) -> Result<(FlowModel, TrainReport)> {
    let (n, d) = points.dim();
    if n < config.min_points {
        return Err(Error::InvalidInput(format!(
            "training needs at least {} points, got {n}",
            config.min_points
        )));
    }
    if d == 0 {
        return Err(Error::InvalidInput(
            "training data must have dimension >= 1".into(),
        ));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("training data must be finite".into()));
    }

    let (shift, scale) = standardization_of(points);
    let mut standardized = points.to_owned();
    for mut row in standardized.outer_iter_mut() {
        for c in 0..d {
            row[c] = (row[c] - shift[c]) / scale[c];
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = HyperNetwork::init(d, config.flow_width, config.hidden_width, &mut rng);
    let mut params = net.params_flat();
    let initial_params = params.clone();
    let mut adam = Adam::new(params.len(), config.learning_rate);
    let constant = nll_constant(d, &scale);

    let full_batch = n <= config.full_batch_limit;
    let all_rows: Vec<usize> = (0..n).collect();

    let mut losses = Vec::with_capacity(config.epochs);
    let mut last_good = params.clone();
    let mut aborted_at_epoch = None;

    'epochs: for epoch in 0..config.epochs {
        let batches: Vec<Vec<usize>> = if full_batch {
            vec![all_rows.clone()]
        } else {
            let mut order = all_rows.clone();
            // deterministic per-epoch shuffle (Fisher–Yates)
            for i in (1..order.len()).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            order
                .chunks(config.batch_size)
                .map(|c| c.to_vec())
                .collect()
        };

        let mut epoch_loss = 0.0;
        let mut epoch_count = 0usize;
        for batch in &batches {
            let outcome = loss_and_grad(&net, &standardized.view(), batch, config.n_steps_train);
            let (loss_core, grad) = match outcome {
                Ok(pair) if pair.0.is_finite() => pair,
                _ => {
                    params = last_good.clone();
                    net.set_params_flat(&params);
                    aborted_at_epoch = Some(epoch);
                    break 'epochs;
                }
            };
            epoch_loss += loss_core * batch.len() as f64;
            epoch_count += batch.len();
            last_good = params.clone();
            adam.step(&mut params, &grad);
            net.set_params_flat(&params);
        }
        losses.push(epoch_loss / epoch_count as f64 + constant);
    }

    let model = FlowModel {
        hypernet: net,
        dim: d,
        t_start: 0.0,
        t_end: 1.0,
        n_steps: config.n_steps_inference,
        data_shift: shift,
        data_scale: scale,
    };
    let report = TrainReport {
        losses,
        initial_params,
        aborted_at_epoch,
        n_steps_train: config.n_steps_train,
    };
    Ok((model, report))
}

/// Mean NLL core (without the dimension/scale constant) over the given rows
/// of an already-standardized point set, and its gradient with respect to
/// the flat hypernetwork parameters.
///
/// This is the exact quantity the trainer descends; it is public so the
/// gradient can be checked against finite differences from the outside.
pub fn loss_and_grad(
    net: &HyperNetwork,
    standardized: &ArrayView2<f64>,
    rows: &[usize],
    n_steps: usize,
) -> Result<(f64, Vec<f64>)> {
    let d = net.dim;
    let o = net.output_dim();
    let (table, hiddens) = build_table_with_hidden(net, 0.0, 1.0, n_steps)?;
    let mut out_bars: Vec<Array1<f64>> = (0..table.times.len()).map(|_| Array1::zeros(o)).collect();
    let b = rows.len() as f64;
    let lambda = 1.0 / b; // adjoint of delta_logp, constant along the trajectory
    let h = table.step;

    let mut loss_acc = 0.0;
    let mut record: Vec<StepRecord> = Vec::with_capacity(n_steps);
    for &row in rows {
        record.clear();
        let z0 = standardized.row(row).to_owned();
        let (z_end, delta_logp) = rk4_forward(&z0, &table, Some(&mut record))?;
        loss_acc += 0.5 * z_end.iter().map(|v| v * v).sum::<f64>() + delta_logp;

        // dL/dz_T for the ½‖z‖² head, scaled by the batch mean
        let mut zbar = z_end.mapv(|v| v / b);
        for (i, rec) in record.iter().enumerate().rev() {
            let (i1, i23, i4) = (2 * i, 2 * i + 1, 2 * i + 2);
            let zbar_out = zbar.clone();

            // stage 4: z4 = z + h·k3
            let kbar4 = zbar_out.mapv(|v| v * (h / 6.0));
            let zbar4 = vjp_stage(
                &rec.stage_z[3],
                &table,
                i4,
                &rec.stage_tanh[3],
                &kbar4,
                h / 6.0 * lambda,
                &mut out_bars[i4],
            );
            // stage 3: z3 = z + (h/2)·k2
            let mut kbar3 = zbar_out.mapv(|v| v * (h / 3.0));
            kbar3.zip_mut_with(&zbar4, |k, &z4b| *k += h * z4b);
            let zbar3 = vjp_stage(
                &rec.stage_z[2],
                &table,
                i23,
                &rec.stage_tanh[2],
                &kbar3,
                h / 3.0 * lambda,
                &mut out_bars[i23],
            );
            // stage 2: z2 = z + (h/2)·k1
            let mut kbar2 = zbar_out.mapv(|v| v * (h / 3.0));
            kbar2.zip_mut_with(&zbar3, |k, &z3b| *k += 0.5 * h * z3b);
            let zbar2 = vjp_stage(
                &rec.stage_z[1],
                &table,
                i23,
                &rec.stage_tanh[1],
                &kbar2,
                h / 3.0 * lambda,
                &mut out_bars[i23],
            );
            // stage 1: z1 = z
            let mut kbar1 = zbar_out.mapv(|v| v * (h / 6.0));
            kbar1.zip_mut_with(&zbar2, |k, &z2b| *k += 0.5 * h * z2b);
            let zbar1 = vjp_stage(
                &rec.stage_z[0],
                &table,
                i1,
                &rec.stage_tanh[0],
                &kbar1,
                h / 6.0 * lambda,
                &mut out_bars[i1],
            );

            for j in 0..d {
                zbar[j] = zbar_out[j] + zbar4[j] + zbar3[j] + zbar2[j] + zbar1[j];
            }
        }
    }

    let mut grad = vec![0.0; net.n_params()];
    for (idx, out_bar) in out_bars.iter().enumerate() {
        hypernet_backward(net, table.times[idx], &hiddens[idx], out_bar, &mut grad);
    }
    Ok((loss_acc / b, grad))
}

/// Vector-Jacobian product of one stage evaluation.
///
/// Given adjoints `kbar` on the stage velocity and `gbar` on the stage
/// divergence term, accumulates the adjoints of the per-unit parameters into
/// the time bucket `out_bar` and returns the adjoint of the stage input `z`.
fn vjp_stage(
    z: &Array1<f64>,
    table: &UnitTable,
    time_idx: usize,
    tanhs: &[f64],
    kbar: &Array1<f64>,
    gbar: f64,
    out_bar: &mut Array1<f64>,
) -> Array1<f64> {
    let d = z.len();
    let stride = 2 * d + 1;
    let mut zbar = Array1::<f64>::zeros(d);
    let units = &table.units[time_idx];
    let dots = &table.dots[time_idx];
    for (m, unit) in units.iter().enumerate() {
        let h = tanhs[m];
        let hp = 1.0 - h * h;
        let hpp = -2.0 * h * hp;
        let ku = kbar.dot(&unit.direction);
        let q = ku * hp - gbar * hpp * dots[m];
        let ghp = gbar * hp;
        let base = m * stride;
        for i in 0..d {
            zbar[i] += q * unit.projection[i];
            out_bar[base + i] += h * kbar[i] - ghp * unit.projection[i];
            out_bar[base + d + i] += q * z[i] - ghp * unit.direction[i];
        }
        out_bar[base + 2 * d] += q;
    }
    zbar
}

/// Backward pass of the hypernetwork at one evaluation time, folding the
/// accumulated output adjoint into the flat parameter gradient.
fn hypernet_backward(
    net: &HyperNetwork,
    t: f64,
    hidden: &Array1<f64>,
    out_bar: &Array1<f64>,
    grad: &mut [f64],
) {
    let hw = net.hidden_width;
    let o = net.output_dim();
    let (wi_off, bi_off, wo_off, bo_off) = (0, hw, 2 * hw, 2 * hw + o * hw);
    for r in 0..o {
        let ob = out_bar[r];
        if ob == 0.0 {
            continue;
        }
        for c in 0..hw {
            grad[wo_off + r * hw + c] += ob * hidden[c];
        }
        grad[bo_off + r] += ob;
    }
    for c in 0..hw {
        let mut hid_bar = 0.0;
        for r in 0..o {
            hid_bar += net.weights_out[(r, c)] * out_bar[r];
        }
        let pre_bar = hid_bar * (1.0 - hidden[c] * hidden[c]);
        grad[wi_off + c] += pre_bar * t;
        grad[bi_off + c] += pre_bar;
    }
}
