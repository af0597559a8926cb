//! Per-point metric tensors and the distances they induce.
//!
//! The learned metric at a data point is
//! `Σ(x) = (J_totalᵀ J_total)^{-1}` where `J_total` is the Jacobian of the
//! full data → unit-ball transformation (standardization affine, flow,
//! radial ball map) evaluated at `x`. Edge weights between neighbouring
//! points use the scale-normalized Mahalanobis form
//!
//! ```text
//! s²(x_i, x_j) = |Σ̄|^{1/d} · (x_i − x_j)ᵀ Σ̄⁻¹ (x_i − x_j),   Σ̄ = (Σ_i + Σ_j)/2
//! ```
//!
//! whose `|Σ̄|^{1/d}` prefactor makes `s` invariant under a uniform rescaling
//! of the tensors — the reason the resulting distances carry a meaningful
//! global scale.
//!
//! Tensor fields are compared point-wise with the closed-form 2-Wasserstein
//! distance between zero-mean Gaussians with those covariances.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::{FlowModel, UnitTable};
use crate::linalg;
use crate::sphere;
use crate::transform::GroundTruthTransform;

/// Condition number of `JᵀJ` beyond which the Tikhonov fallback kicks in.
const CONDITION_LIMIT: f64 = 1e12;
/// Relative eigenvalue floor applied to every returned tensor.
const EIGEN_FLOOR: f64 = 1e-12;

/// A tensor per point, aligned with the rows of `points`.
#[derive(Debug, Clone)]
pub struct MetricTensorField {
    /// Original data coordinates, N×d.
    pub points: Array2<f64>,
    /// Symmetric positive definite `Σ(x_i)`, one per row of `points`.
    pub tensors: Vec<Array2<f64>>,
    /// Marks points whose `JᵀJ` was near singular and required the
    /// Tikhonov fallback.
    pub regularized: Vec<bool>,
}

impl MetricTensorField {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// Compute the tensor field for every row of `points` under `model`.
    /// Rows are independent; the batch runs in parallel with
    /// order-independent results.
    pub fn compute(points: &ArrayView2<f64>, model: &FlowModel) -> Result<MetricTensorField> {
        let table = UnitTable::build(model, model.n_steps)?;
        let rows: Vec<_> = points.outer_iter().collect();
        let results: Vec<(Array2<f64>, bool)> = rows
            .into_par_iter()
            .map(|row| metric_tensor_with_table(&row, model, &table))
            .collect::<Result<_>>()?;
        let (tensors, regularized) = results.into_iter().unzip();
        Ok(MetricTensorField {
            points: points.to_owned(),
            tensors,
            regularized,
        })
    }
}

/// Metric tensor at one point: `(JᵀJ)^{-1}` of the total Jacobian, explicitly
/// symmetrized, eigenvalues floored. The flag reports whether the
/// near-singular fallback was used.
pub fn metric_tensor(x: &ArrayView1<f64>, model: &FlowModel) -> Result<(Array2<f64>, bool)> {
    let table = UnitTable::build(model, model.n_steps)?;
    metric_tensor_with_table(x, model, &table)
}

pub(crate) fn metric_tensor_with_table(
    x: &ArrayView1<f64>,
    model: &FlowModel,
    table: &UnitTable,
) -> Result<(Array2<f64>, bool)> {
    let state = model.integrate_with_table(x, table, true)?;
    let j_flow = state.jacobian.expect("requested jacobian");
    let j_sphere = sphere::to_ball_jacobian(&state.z.view())?;
    let mut j_total = j_sphere.dot(&j_flow);
    // fold in the standardization affine so Σ lives in data units
    for c in 0..model.dim {
        let inv = 1.0 / model.data_scale[c];
        for r in 0..model.dim {
            j_total[(r, c)] *= inv;
        }
    }
    Ok(tensor_from_total_jacobian(&j_total))
}

/// `(JᵀJ)^{-1}` with symmetrization, conditioning fallback and eigenvalue
/// floor. Exposed shape of the computation so the degenerate paths are
/// testable without a flow model.
pub(crate) fn tensor_from_total_jacobian(j_total: &Array2<f64>) -> (Array2<f64>, bool) {
    let d = j_total.nrows();
    let gram = linalg::symmetrize(&j_total.t().dot(j_total));
    let (vals, vecs) = linalg::sym_eigen(&gram).expect("gram matrix is square");
    let lam_max = vals[d - 1].max(f64::MIN_POSITIVE);
    let lam_min = vals[0];
    let needs_fallback = !(lam_min > 0.0) || lam_max / lam_min > CONDITION_LIMIT;
    let tikhonov = if needs_fallback {
        1e-10 * gram.diag().sum().max(f64::MIN_POSITIVE) / d as f64
    } else {
        0.0
    };
    // invert the spectrum, then floor the resulting tensor's eigenvalues
    let mut sigma_vals: Vec<f64> = vals.iter().map(|&l| 1.0 / (l + tikhonov)).collect();
    let sigma_max = sigma_vals.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    for s in &mut sigma_vals {
        *s = s.max(EIGEN_FLOOR * sigma_max);
    }
    let mut sigma = Array2::<f64>::zeros((d, d));
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                sigma[(i, j)] += sigma_vals[k] * vecs[(i, k)] * vecs[(j, k)];
            }
        }
    }
    (linalg::symmetrize(&sigma), needs_fallback)
}

/// Scale-normalized Mahalanobis distance between two points under the mean
/// of their tensors (solved by Cholesky, no explicit inverse).
pub fn mahalanobis(
    x_i: &ArrayView1<f64>,
    x_j: &ArrayView1<f64>,
    sigma_i: &Array2<f64>,
    sigma_j: &Array2<f64>,
) -> Result<f64> {
    let d = x_i.len();
    if x_j.len() != d || sigma_i.nrows() != d || sigma_j.nrows() != d {
        return Err(Error::Dimension {
            expected: d,
            got: x_j.len().min(sigma_i.nrows()).min(sigma_j.nrows()),
            context: "mahalanobis inputs".into(),
        });
    }
    let mut mean = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            mean[(i, j)] = 0.5 * (sigma_i[(i, j)] + sigma_j[(i, j)]);
        }
    }
    let chol = linalg::cholesky(&mean)
        .map_err(|_| Error::NotSpd("mean metric tensor in mahalanobis".into()))?;
    let det = linalg::det_from_cholesky(&chol);
    let delta = Array1::from_iter(x_i.iter().zip(x_j.iter()).map(|(a, b)| a - b));
    let solved = linalg::cholesky_solve(&chol, &delta);
    let quad = delta.dot(&solved);
    Ok((det.powf(1.0 / d as f64) * quad).max(0.0).sqrt())
}

/// Ground-truth tensor at `y`: `J_T J_Tᵀ` evaluated at the pre-image of `y`,
/// the covariance whose Mahalanobis distance reproduces Euclidean distance
/// in the untransformed disk.
pub fn ground_truth_metric(
    y: &ArrayView1<f64>,
    transform: &GroundTruthTransform,
) -> Result<Array2<f64>> {
    let x = transform.inverse(y)?;
    let jac = transform.jacobian(&x.view())?;
    Ok(jac.dot(&jac.t()))
}

/// 2-Wasserstein distance between `N(0, Σ_a)` and `N(0, Σ_b)`:
/// `W₂² = tr Σ_a + tr Σ_b − 2·tr((Σ_b^{1/2} Σ_a Σ_b^{1/2})^{1/2})`.
pub fn wasserstein_gaussian(sigma_a: &Array2<f64>, sigma_b: &Array2<f64>) -> Result<f64> {
    let d = sigma_a.nrows();
    if sigma_b.nrows() != d || sigma_a.ncols() != d || sigma_b.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            got: sigma_b.nrows(),
            context: "wasserstein_gaussian inputs".into(),
        });
    }
    linalg::cholesky(sigma_a).map_err(|_| Error::NotSpd("wasserstein_gaussian Σ_a".into()))?;
    linalg::cholesky(sigma_b).map_err(|_| Error::NotSpd("wasserstein_gaussian Σ_b".into()))?;
    let b_half = linalg::spd_sqrt(sigma_b)?;
    let inner = linalg::symmetrize(&b_half.dot(sigma_a).dot(&b_half));
    let (vals, _) = linalg::sym_eigen(&inner)?;
    let tr_sqrt: f64 = vals.iter().map(|&v| v.max(0.0).sqrt()).sum();
    let w2 = sigma_a.diag().sum() + sigma_b.diag().sum() - 2.0 * tr_sqrt;
    Ok(w2.max(0.0).sqrt())
}

/// A tensor field scored against per-point target tensors after the best
/// uniform rescaling.
#[derive(Debug, Clone)]
pub struct WassersteinAlignment {
    /// The scalar `c` minimizing the median of `W₂(c·Σ_i, G_i)`.
    pub scale: f64,
    /// Median per-point Wasserstein distance at that scale.
    pub median: f64,
    /// Per-point distances at that scale, aligned with the inputs.
    pub scores: Vec<f64>,
}

/// Score `tensors` against `targets` up to a global scalar: find the `c`
/// minimizing the median of `W₂(N(0, cΣ_i), N(0, G_i))`.
///
/// For fixed `i`, `W₂²(cΣ_i, G_i) = c·tr Σ_i − 2√c·tr((G_i^{1/2} Σ_i G_i^{1/2})^{1/2}) + tr G_i`,
/// so each point contributes a parabola in `√c`; the median is minimized by
/// a log-scale grid search with local refinement.
pub fn scale_aligned_wasserstein(
    tensors: &[Array2<f64>],
    targets: &[Array2<f64>],
) -> Result<WassersteinAlignment> {
    if tensors.len() != targets.len() || tensors.is_empty() {
        return Err(Error::InvalidInput(format!(
            "need equal, nonzero tensor counts: {} vs {}",
            tensors.len(),
            targets.len()
        )));
    }
    // per-point coefficients of W₂² as a function of u = √c
    let mut coeff = Vec::with_capacity(tensors.len());
    for (sig, tgt) in tensors.iter().zip(targets.iter()) {
        let a = sig.diag().sum();
        let g = tgt.diag().sum();
        let t_half = linalg::spd_sqrt(tgt)?;
        let inner = linalg::symmetrize(&t_half.dot(sig).dot(&t_half));
        let (vals, _) = linalg::sym_eigen(&inner)?;
        let b: f64 = vals.iter().map(|&v| v.max(0.0).sqrt()).sum();
        coeff.push((a, b, g));
    }
    let median_at = |log10_c: f64| -> f64 {
        let u = 10f64.powf(log10_c).sqrt();
        let scores: Vec<f64> = coeff
            .iter()
            .map(|&(a, b, g)| (u * u * a - 2.0 * u * b + g).max(0.0).sqrt())
            .collect();
        crate::stats::median(&scores)
    };
    // coarse grid, then golden-section refinement around the best cell
    let mut best_x = 0.0;
    let mut best_v = f64::INFINITY;
    let grid_n = 481;
    for i in 0..grid_n {
        let x = -6.0 + 12.0 * i as f64 / (grid_n - 1) as f64;
        let v = median_at(x);
        if v < best_v {
            best_v = v;
            best_x = x;
        }
    }
    let (mut lo, mut hi) = (best_x - 0.05, best_x + 0.05);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if median_at(m1) <= median_at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let x = 0.5 * (lo + hi);
    let scale = 10f64.powf(x);
    let u = scale.sqrt();
    let scores: Vec<f64> = coeff
        .iter()
        .map(|&(a, b, g)| (u * u * a - 2.0 * u * b + g).max(0.0).sqrt())
        .collect();
    let median = crate::stats::median(&scores);
    Ok(WassersteinAlignment {
        scale,
        median,
        scores,
    })
}

/// Tensor-field file layout (little-endian):
///
/// ```text
/// magic b"LAMTENS1" | version u32 | n u64 | d u32
/// points   n×d f64, row-major
/// tensors  n×d×d f64, row-major per point
/// ```
impl MetricTensorField {
    pub fn save(&self, path: &Path) -> Result<()> {
        let n = self.len();
        let d = self.dim();
        let mut buf = Vec::with_capacity(24 + 8 * n * d * (d + 1));
        buf.extend_from_slice(b"LAMTENS1");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&(n as u64).to_le_bytes());
        buf.extend_from_slice(&(d as u32).to_le_bytes());
        for v in self.points.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for t in &self.tensors {
            for v in t.iter() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        crate::flow::write_atomic(path, &buf)
    }

    pub fn load(path: &Path) -> Result<MetricTensorField> {
        let bytes = std::fs::read(path)?;
        if bytes.len() < 24 || &bytes[..8] != b"LAMTENS1" {
            return Err(Error::BadFormat(format!(
                "{}: not a tensor field file",
                path.display()
            )));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("length 4"));
        if version != 1 {
            return Err(Error::BadFormat(format!(
                "unsupported tensor field version {version}"
            )));
        }
        let n = u64::from_le_bytes(bytes[12..20].try_into().expect("length 8")) as usize;
        let d = u32::from_le_bytes(bytes[20..24].try_into().expect("length 4")) as usize;
        let expect = 24 + 8 * (n * d + n * d * d);
        if bytes.len() != expect {
            return Err(Error::BadFormat(format!(
                "tensor field size mismatch: {} bytes, expected {expect}",
                bytes.len()
            )));
        }
        let mut floats = bytes[24..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("length 8")));
        let points = Array2::from_shape_vec((n, d), floats.by_ref().take(n * d).collect())
            .expect("shape follows from header");
        let mut tensors = Vec::with_capacity(n);
        for _ in 0..n {
            tensors.push(
                Array2::from_shape_vec((d, d), floats.by_ref().take(d * d).collect())
                    .expect("shape follows from header"),
            );
        }
        Ok(MetricTensorField {
            points,
            tensors,
            regularized: vec![false; n],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> Array2<f64> {
        let mut a = Array2::<f64>::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                a[(i, j)] = rng.random_range(-1.0..1.0);
            }
        }
        let mut spd = a.t().dot(&a);
        for i in 0..d {
            spd[(i, i)] += 0.3;
        }
        spd
    }

    #[test]
    fn identity_jacobian_gives_identity_tensor() {
        let (sigma, flagged) = tensor_from_total_jacobian(&Array2::eye(2));
        assert!(!flagged);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((sigma[(i, j)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_jacobian_inverts_squares() {
        let (sigma, flagged) = tensor_from_total_jacobian(&array![[2.0, 0.0], [0.0, 1.0]]);
        assert!(!flagged);
        assert!((sigma[(0, 0)] - 0.25).abs() < 1e-12);
        assert!((sigma[(1, 1)] - 1.0).abs() < 1e-12);
        assert!(sigma[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn near_singular_jacobian_flags_fallback() {
        let (sigma, flagged) = tensor_from_total_jacobian(&array![[1.0, 0.0], [0.0, 1e-9]]);
        assert!(flagged);
        assert!(sigma.iter().all(|v| v.is_finite()));
        let (vals, _) = linalg::sym_eigen(&sigma).unwrap();
        assert!(vals[0] > 0.0);
    }

    #[test]
    fn mahalanobis_identity_reduces_to_euclidean() {
        let eye = Array2::<f64>::eye(3);
        let a = array![1.0, 2.0, 3.0];
        let b = array![0.0, 0.0, 4.0];
        let s = mahalanobis(&a.view(), &b.view(), &eye, &eye).unwrap();
        let euclid = (1.0f64 + 4.0 + 1.0).sqrt();
        assert!((s - euclid).abs() < 1e-12);
    }

    #[test]
    fn mahalanobis_hand_example() {
        // Σ̄ = diag(4,1), Δ = (1,0): s² = √4 · 1/4 = 1/2
        let s4 = array![[4.0, 0.0], [0.0, 1.0]];
        let a = array![1.0, 0.0];
        let b = array![0.0, 0.0];
        let s = mahalanobis(&a.view(), &b.view(), &s4, &s4).unwrap();
        assert!((s - 0.5f64.sqrt()).abs() < 1e-12, "s = {s}");
    }

    #[test]
    fn mahalanobis_symmetry_and_scale_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let si = random_spd(&mut rng, 2);
            let sj = random_spd(&mut rng, 2);
            let a = array![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let b = array![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let s_ab = mahalanobis(&a.view(), &b.view(), &si, &sj).unwrap();
            let s_ba = mahalanobis(&b.view(), &a.view(), &sj, &si).unwrap();
            assert!((s_ab - s_ba).abs() < 1e-12);
            // uniform tensor scaling cancels: |cΣ|^{1/d} · (1/c) = |Σ|^{1/d}
            let c = rng.random_range(0.1..10.0);
            let s_scaled = mahalanobis(&a.view(), &b.view(), &(&si * c), &(&sj * c)).unwrap();
            assert!(
                (s_scaled - s_ab).abs() < 1e-10 * (1.0 + s_ab),
                "{s_scaled} vs {s_ab} at c = {c}"
            );
        }
    }

    #[test]
    fn mahalanobis_zero_iff_same_point() {
        let eye = Array2::<f64>::eye(2);
        let a = array![0.7, -0.3];
        assert_eq!(mahalanobis(&a.view(), &a.view(), &eye, &eye).unwrap(), 0.0);
        let b = array![0.7, -0.3 + 1e-9];
        assert!(mahalanobis(&a.view(), &b.view(), &eye, &eye).unwrap() > 0.0);
    }

    #[test]
    fn mahalanobis_rejects_non_spd() {
        let bad = array![[1.0, 2.0], [2.0, 1.0]];
        let a = array![0.0, 0.0];
        let b = array![1.0, 0.0];
        assert!(matches!(
            mahalanobis(&a.view(), &b.view(), &bad, &bad),
            Err(Error::NotSpd(_))
        ));
    }

    #[test]
    fn ground_truth_metrics_for_linear_transforms() {
        let y = array![0.3, 0.7];
        let ident = ground_truth_metric(&y.view(), &GroundTruthTransform::Identity).unwrap();
        assert_eq!(ident, Array2::<f64>::eye(2));

        let stretch =
            ground_truth_metric(&y.view(), &GroundTruthTransform::stretch(3.0, 1.0)).unwrap();
        assert!((stretch[(0, 0)] - 9.0).abs() < 1e-12);
        assert!((stretch[(1, 1)] - 1.0).abs() < 1e-12);

        let shear = ground_truth_metric(&y.view(), &GroundTruthTransform::shear()).unwrap();
        assert!((shear[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((shear[(0, 1)] - 1.0).abs() < 1e-12);
        assert!((shear[(1, 0)] - 1.0).abs() < 1e-12);
        assert!((shear[(1, 1)] - 1.0).abs() < 1e-12);

        // spatially constant for linear transforms
        let other =
            ground_truth_metric(&array![-5.0, 2.0].view(), &GroundTruthTransform::shear()).unwrap();
        assert_eq!(shear, other);
    }

    #[test]
    fn wasserstein_zero_and_isotropic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_spd(&mut rng, 3);
        assert!(wasserstein_gaussian(&s, &s).unwrap() < 1e-10);
        let w = wasserstein_gaussian(&(Array2::eye(2) * 4.0), &Array2::eye(2)).unwrap();
        assert!((w - 2.0f64.sqrt()).abs() < 1e-12, "w = {w}");
    }

    #[test]
    fn wasserstein_symmetric_and_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let a = random_spd(&mut rng, 2);
            let b = random_spd(&mut rng, 2);
            let w_ab = wasserstein_gaussian(&a, &b).unwrap();
            let w_ba = wasserstein_gaussian(&b, &a).unwrap();
            assert!((w_ab - w_ba).abs() < 1e-10);
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let (s, c) = theta.sin_cos();
            let rot = array![[c, -s], [s, c]];
            let ra = rot.dot(&a).dot(&rot.t());
            let rb = rot.dot(&b).dot(&rot.t());
            let w_rot = wasserstein_gaussian(&ra, &rb).unwrap();
            assert!((w_rot - w_ab).abs() < 1e-10, "{w_rot} vs {w_ab}");
        }
    }

    #[test]
    fn wasserstein_between_projection_bound_and_coupling_bound() {
        // Independent sandwich: any 1-D projection gives a lower bound, the
        // comonotone coupling gives an upper bound.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..25 {
            let a = random_spd(&mut rng, 2);
            let b = random_spd(&mut rng, 2);
            let w = wasserstein_gaussian(&a, &b).unwrap();
            let mut lower: f64 = 0.0;
            for _ in 0..500 {
                let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let v = array![theta.cos(), theta.sin()];
                let sa = v.dot(&a.dot(&v)).sqrt();
                let sb = v.dot(&b.dot(&v)).sqrt();
                lower = lower.max((sa - sb).abs());
            }
            let a_half = linalg::spd_sqrt(&a).unwrap();
            let b_half = linalg::spd_sqrt(&b).unwrap();
            let cross = a_half.dot(&b_half);
            let upper2 = a.diag().sum() + b.diag().sum() - 2.0 * cross.diag().sum();
            let upper = upper2.max(0.0).sqrt();
            assert!(
                lower <= w + 1e-9 && w <= upper + 1e-9,
                "sandwich violated: {lower} <= {w} <= {upper}"
            );
        }
    }

    #[test]
    fn wasserstein_triangle_inequality_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..30 {
            let a = random_spd(&mut rng, 2);
            let b = random_spd(&mut rng, 2);
            let c = random_spd(&mut rng, 2);
            let ab = wasserstein_gaussian(&a, &b).unwrap();
            let bc = wasserstein_gaussian(&b, &c).unwrap();
            let ac = wasserstein_gaussian(&a, &c).unwrap();
            assert!(ac <= ab + bc + 1e-9, "{ac} > {ab} + {bc}");
        }
    }

    #[test]
    fn scale_alignment_recovers_known_factor() {
        // targets = 5·Σ exactly: optimal c is 5 and the residual is ~0
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let tensors: Vec<Array2<f64>> = (0..40).map(|_| random_spd(&mut rng, 2)).collect();
        let targets: Vec<Array2<f64>> = tensors.iter().map(|s| s * 5.0).collect();
        let aligned = scale_aligned_wasserstein(&tensors, &targets).unwrap();
        assert!(
            (aligned.scale - 5.0).abs() < 0.01,
            "scale {}",
            aligned.scale
        );
        assert!(aligned.median < 1e-3, "median {}", aligned.median);
        // and the aligned score against mismatched targets stays positive
        let wrong: Vec<Array2<f64>> = (0..40).map(|_| random_spd(&mut rng, 2)).collect();
        let misaligned = scale_aligned_wasserstein(&tensors, &wrong).unwrap();
        assert!(misaligned.median > 0.05);
    }

    #[test]
    fn field_round_trips_through_file() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let points = array![[0.1, 0.2], [0.3, -0.4], [1.5, 2.5]];
        let tensors: Vec<Array2<f64>> = (0..3).map(|_| random_spd(&mut rng, 2)).collect();
        let field = MetricTensorField {
            points: points.clone(),
            tensors: tensors.clone(),
            regularized: vec![false; 3],
        };
        let dir = std::env::temp_dir().join("laminar_tensors_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.bin");
        field.save(&path).unwrap();
        let loaded = MetricTensorField::load(&path).unwrap();
        assert_eq!(loaded.points, points);
        for (a, b) in loaded.tensors.iter().zip(tensors.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_field_model_tensor_shape() {
        // Any flow model with zero velocity maps standardized data through
        // the ball map only; the tensor must be SPD and symmetric.
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let mut net = crate::flow::HyperNetwork::init(2, 2, 4, &mut rng);
        net.weights_out.fill(0.0);
        net.bias_out.fill(0.0);
        let model = FlowModel::with_identity_standardization(net, 16);
        let (sigma, flagged) = metric_tensor(&array![0.4, -0.2].view(), &model).unwrap();
        assert!(!flagged);
        assert!((sigma[(0, 1)] - sigma[(1, 0)]).abs() < 1e-12);
        let (vals, _) = linalg::sym_eigen(&sigma).unwrap();
        assert!(vals[0] > 0.0);
    }
}
