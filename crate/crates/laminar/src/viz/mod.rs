//! Figure renderers: colour-wheel tensor fields, distance maps with
//! out-of-distribution contours, and standardized log-ratio comparisons.
//!
//! Every figure is an SVG written atomically, accompanied by a
//! `<name>.manifest.json` recording the inputs and parameters that produced
//! it.

pub mod color;
pub mod svg;

use ndarray::{Array2, ArrayView2};
use serde_json::json;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::KdTree;
use crate::linalg;
use crate::stats;
use color::{diverging, greyscale, hsv_to_rgb, viridis, Rgb};
use svg::{Frame, Svg};

/// Ellipse summary of a 2×2 SPD tensor: orientation of the major axis in
/// `[0, π)` and minor/major axis ratio in `(0, 1]` (axes are the square
/// roots of the eigenvalues, i.e. the unit Mahalanobis ball).
#[derive(Debug, Clone, Copy)]
pub struct TensorGlyph {
    pub center: [f64; 2],
    pub angle: f64,
    pub axis_ratio: f64,
    /// √λ_max, the major semi-axis in data units.
    pub major: f64,
}

impl TensorGlyph {
    pub fn from_tensor(sigma: &Array2<f64>, center: [f64; 2]) -> Result<TensorGlyph> {
        if sigma.dim() != (2, 2) {
            return Err(Error::InvalidInput(format!(
                "tensor glyphs are 2-D, got {:?}",
                sigma.dim()
            )));
        }
        let (vals, vecs) = linalg::sym_eigen(sigma)?;
        if !(vals[0] > 0.0) {
            return Err(Error::NotSpd(format!(
                "glyph tensor has eigenvalue {}",
                vals[0]
            )));
        }
        // dominant eigenvector (largest eigenvalue is last)
        let vx = vecs[(0, 1)];
        let vy = vecs[(1, 1)];
        let mut angle = vy.atan2(vx);
        if angle < 0.0 {
            angle += std::f64::consts::PI;
        }
        if angle >= std::f64::consts::PI {
            angle -= std::f64::consts::PI;
        }
        Ok(TensorGlyph {
            center,
            angle,
            axis_ratio: (vals[0] / vals[1]).sqrt().min(1.0),
            major: vals[1].sqrt(),
        })
    }
}

/// Colour-wheel encoding of a tensor: hue doubles the major-axis orientation
/// (so θ and θ+π agree; horizontal → red at 0°, vertical → the blue sector
/// at 180°), saturation is `1 − axis_ratio` (isotropic tensors are white).
pub fn tensor_to_color(sigma: &Array2<f64>) -> Result<(f64, f64)> {
    let glyph = TensorGlyph::from_tensor(sigma, [0.0, 0.0])?;
    let hue = (2.0 * glyph.angle).to_degrees().rem_euclid(360.0);
    Ok((hue, 1.0 - glyph.axis_ratio))
}

fn tensor_rgb(sigma: &Array2<f64>) -> Result<Rgb> {
    let (hue, sat) = tensor_to_color(sigma)?;
    Ok(hsv_to_rgb(hue, sat, 0.95))
}

fn write_manifest(svg_path: &Path, figure: &str, params: serde_json::Value) -> Result<()> {
    let manifest = json!({ "figure": figure, "params": params });
    let path = svg_path.with_extension("manifest.json");
    crate::flow::write_atomic(&path, serde_json::to_vec_pretty(&manifest)?.as_slice())
}

/// Scatter of `points` coloured by the colour-wheel encoding of their
/// tensors, with ellipse glyphs on a subsample.
pub fn render_tensor_field(
    points: &ArrayView2<f64>,
    tensors: &[Array2<f64>],
    path: &Path,
) -> Result<()> {
    let n = points.nrows();
    if tensors.len() != n {
        return Err(Error::InvalidInput(format!(
            "{n} points but {} tensors",
            tensors.len()
        )));
    }
    let frame = Frame::around(points, 0.08, 640.0);
    let mut svg = Svg::with_frame(&frame);
    for (row, sigma) in points.outer_iter().zip(tensors.iter()) {
        let (x, y) = frame.px(row[0], row[1]);
        svg.circle(x, y, 2.2, &tensor_rgb(sigma)?.hex());
    }
    // ellipse glyphs on an even subsample, scaled to a readable pixel size
    let stride = (n / 90).max(1);
    let mut majors: Vec<f64> = Vec::new();
    for i in (0..n).step_by(stride) {
        majors.push(TensorGlyph::from_tensor(&tensors[i], [0.0, 0.0])?.major);
    }
    if !majors.is_empty() {
        let scale = 14.0 / stats::median(&majors).max(1e-12);
        for i in (0..n).step_by(stride) {
            let row = points.row(i);
            let glyph = TensorGlyph::from_tensor(&tensors[i], [row[0], row[1]])?;
            let (cx, cy) = frame.px(row[0], row[1]);
            // screen y grows downward, so the rotation flips sign
            svg.ellipse(
                cx,
                cy,
                (glyph.major * scale).min(40.0),
                (glyph.major * glyph.axis_ratio * scale).min(40.0),
                -glyph.angle.to_degrees(),
                "#444444",
                "none",
            );
        }
    }
    svg.save(path)?;
    write_manifest(
        path,
        "tensor_field",
        json!({ "n_points": n, "glyph_stride": stride }),
    )
}

/// Scatter coloured by a scalar per point on the viridis ramp (used for
/// point-wise Wasserstein comparison maps).
pub fn render_scalar_map(
    points: &ArrayView2<f64>,
    values: &[f64],
    label: &str,
    path: &Path,
) -> Result<()> {
    let n = points.nrows();
    if values.len() != n {
        return Err(Error::InvalidInput(format!(
            "{n} points but {} values",
            values.len()
        )));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-300);
    let frame = Frame::around(points, 0.08, 640.0);
    let mut svg = Svg::with_frame(&frame);
    for (row, &v) in points.outer_iter().zip(values.iter()) {
        let (x, y) = frame.px(row[0], row[1]);
        svg.circle(x, y, 2.2, &viridis((v - lo) / span).hex());
    }
    svg.text(
        12.0,
        16.0,
        11.0,
        &format!("{label}: min {lo:.4}, max {hi:.4}"),
    );
    svg.save(path)?;
    write_manifest(
        path,
        "scalar_map",
        json!({ "label": label, "min": lo, "max": hi }),
    )
}

/// Out-of-distribution contour estimate at an arbitrary location: the mean
/// of the distance values of the `k` nearest data points (Euclidean lookup
/// in data space). Unreachable points are excluded from the average; NaN
/// when none of the neighbours is reachable.
pub(crate) fn ood_contour_value(tree: &KdTree, distances: &[f64], k: usize, xy: [f64; 2]) -> f64 {
    let neighbours = tree.knn(&xy, k, None);
    let finite: Vec<f64> = neighbours
        .iter()
        .map(|&i| distances[i])
        .filter(|d| d.is_finite())
        .collect();
    if finite.is_empty() {
        f64::NAN
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    }
}

/// Distance map from a query point: data coloured by geodesic distance
/// (brighter = closer), grey-scale contours estimating the distance field
/// away from the data, unreachable points in a reserved magenta.
pub fn distance_map(
    points: &ArrayView2<f64>,
    distances: &[f64],
    query: usize,
    k_contour: usize,
    path: &Path,
) -> Result<()> {
    let n = points.nrows();
    if distances.len() != n {
        return Err(Error::InvalidInput(format!(
            "{n} points but {} distances",
            distances.len()
        )));
    }
    if query >= n {
        return Err(Error::InvalidInput(format!("query {query} out of range")));
    }
    let d_max = distances
        .iter()
        .cloned()
        .filter(|d| d.is_finite())
        .fold(0.0f64, f64::max);
    let frame = Frame::around(points, 0.10, 640.0);
    let mut svg = Svg::with_frame(&frame);

    // contour grid over the padded bounding box
    let res = 200usize;
    let k_eff = k_contour.min(n);
    let tree = KdTree::build(points);
    let mut grid = vec![f64::NAN; res * res];
    let gx = |i: usize| frame.x_min + (frame.x_max - frame.x_min) * i as f64 / (res - 1) as f64;
    let gy = |j: usize| frame.y_min + (frame.y_max - frame.y_min) * j as f64 / (res - 1) as f64;
    for j in 0..res {
        for i in 0..res {
            grid[j * res + i] = ood_contour_value(&tree, distances, k_eff, [gx(i), gy(j)]);
        }
    }
    let g_lo = grid
        .iter()
        .cloned()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let g_hi = grid
        .iter()
        .cloned()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let n_levels = 9;
    if g_hi > g_lo {
        for level_idx in 0..n_levels {
            let level = g_lo + (g_hi - g_lo) * (level_idx as f64 + 1.0) / (n_levels as f64 + 1.0);
            let stroke = greyscale(level_idx as f64 / (n_levels - 1) as f64).hex();
            for seg in marching_squares(&grid, res, level) {
                let (x1, y1) = frame.px(
                    frame.x_min + seg[0] * (frame.x_max - frame.x_min) / (res - 1) as f64,
                    frame.y_min + seg[1] * (frame.y_max - frame.y_min) / (res - 1) as f64,
                );
                let (x2, y2) = frame.px(
                    frame.x_min + seg[2] * (frame.x_max - frame.x_min) / (res - 1) as f64,
                    frame.y_min + seg[3] * (frame.y_max - frame.y_min) / (res - 1) as f64,
                );
                svg.line(x1, y1, x2, y2, &stroke, 0.8);
            }
        }
    }

    for (i, row) in points.outer_iter().enumerate() {
        let (x, y) = frame.px(row[0], row[1]);
        let fill = if distances[i].is_finite() {
            // brighter (yellow) = smaller distance
            viridis(1.0 - distances[i] / d_max.max(1e-300)).hex()
        } else {
            "#ff00ff".to_string()
        };
        svg.circle(x, y, 2.2, &fill);
    }
    let (qx, qy) = frame.px(points[(query, 0)], points[(query, 1)]);
    svg.cross(qx, qy, 6.0, "#dd0000");
    svg.save(path)?;
    write_manifest(
        path,
        "distance_map",
        json!({
            "query": query,
            "k_contour": k_eff,
            "grid": res,
            "levels": n_levels,
            "max_distance": d_max,
            "unreachable": distances.iter().filter(|d| !d.is_finite()).count(),
        }),
    )
}

/// Standardized log-ratio values: `standardize(log d_a) − standardize(log d_b)`
/// with the query excluded (its zero distance has no logarithm). Negative
/// values mean `a`-distances are relatively smaller.
pub fn ratio_map_values(dist_a: &[f64], dist_b: &[f64], query: usize) -> Result<Vec<f64>> {
    if dist_a.len() != dist_b.len() {
        return Err(Error::InvalidInput(
            "distance arrays differ in length".into(),
        ));
    }
    let keep: Vec<usize> = (0..dist_a.len()).filter(|&i| i != query).collect();
    let mut log_a = Vec::with_capacity(keep.len());
    let mut log_b = Vec::with_capacity(keep.len());
    for &i in &keep {
        if !(dist_a[i] > 0.0)
            || !(dist_b[i] > 0.0)
            || !dist_a[i].is_finite()
            || !dist_b[i].is_finite()
        {
            return Err(Error::InvalidInput(format!(
                "distances must be finite and positive after excluding the query (index {i}: {} / {})",
                dist_a[i], dist_b[i]
            )));
        }
        log_a.push(dist_a[i].ln());
        log_b.push(dist_b[i].ln());
    }
    let za = stats::standardize(&log_a);
    let zb = stats::standardize(&log_b);
    Ok(za.iter().zip(zb.iter()).map(|(a, b)| a - b).collect())
}

/// Render the standardized log-ratio comparison on a diverging ramp
/// (blue = first distance set relatively smaller). Returns the per-point
/// values (query excluded), aligned with the retained indices.
pub fn ratio_map(
    points: &ArrayView2<f64>,
    dist_a: &[f64],
    dist_b: &[f64],
    query: usize,
    path: &Path,
) -> Result<Vec<f64>> {
    let values = ratio_map_values(dist_a, dist_b, query)?;
    let amax = values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    let frame = Frame::around(points, 0.08, 640.0);
    let mut svg = Svg::with_frame(&frame);
    let mut vi = 0usize;
    for (i, row) in points.outer_iter().enumerate() {
        if i == query {
            continue;
        }
        let (x, y) = frame.px(row[0], row[1]);
        svg.circle(x, y, 2.2, &diverging(values[vi] / amax).hex());
        vi += 1;
    }
    let (qx, qy) = frame.px(points[(query, 0)], points[(query, 1)]);
    svg.cross(qx, qy, 6.0, "#00aa44");
    svg.save(path)?;
    write_manifest(
        path,
        "ratio_map",
        json!({ "query": query, "abs_max": amax, "n_points": points.nrows() }),
    )?;
    Ok(values)
}

/// Reference colour wheel for the tensor encoding: orientation doubled into
/// hue, radius as saturation.
pub fn render_color_wheel(path: &Path) -> Result<()> {
    let size = 240.0;
    let mut svg = Svg::new(size, size);
    svg.rect(0.0, 0.0, size, size, "#ffffff");
    let c = size / 2.0;
    let r_max = size / 2.0 - 10.0;
    let steps_r = 24;
    let steps_t = 96;
    for ri in 0..steps_r {
        let r0 = r_max * ri as f64 / steps_r as f64;
        let r1 = r_max * (ri + 1) as f64 / steps_r as f64;
        for ti in 0..steps_t {
            let theta = std::f64::consts::TAU * ti as f64 / steps_t as f64;
            let hue = theta.to_degrees();
            let sat = (r0 + r1) / (2.0 * r_max);
            let fill = hsv_to_rgb(hue, sat, 0.95).hex();
            let rm = (r0 + r1) / 2.0;
            // screen angle mirrors data angle (y down)
            let (x, y) = (c + rm * theta.cos(), c - rm * theta.sin());
            svg.circle(x, y, (r1 - r0) * 0.9, &fill);
        }
    }
    svg.text(c + r_max * 0.55, c - 4.0, 10.0, "horizontal");
    svg.text(c - 24.0, c - r_max * 0.55, 10.0, "vertical");
    svg.save(path)?;
    write_manifest(path, "color_wheel", json!({}))
}

/// Marching-squares segments for one iso-level over a `res × res` grid
/// (row-major, index `j·res + i`). Segments come back in grid coordinates
/// `[x1, y1, x2, y2]`; cells touching NaN are skipped.
fn marching_squares(grid: &[f64], res: usize, level: f64) -> Vec<[f64; 4]> {
    let mut segments = Vec::new();
    let at = |i: usize, j: usize| grid[j * res + i];
    for j in 0..res - 1 {
        for i in 0..res - 1 {
            let v = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let mut case = 0usize;
            for (bit, &val) in v.iter().enumerate() {
                if val >= level {
                    case |= 1 << bit;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            // interpolated crossing points on the four edges
            let frac = |a: f64, b: f64| (level - a) / (b - a);
            let bottom = || [i as f64 + frac(v[0], v[1]), j as f64];
            let right = || [i as f64 + 1.0, j as f64 + frac(v[1], v[2])];
            let top = || [i as f64 + frac(v[3], v[2]), j as f64 + 1.0];
            let left = || [i as f64, j as f64 + frac(v[0], v[3])];
            let mut push = |a: [f64; 2], b: [f64; 2]| segments.push([a[0], a[1], b[0], b[1]]);
            match case {
                1 | 14 => push(left(), bottom()),
                2 | 13 => push(bottom(), right()),
                3 | 12 => push(left(), right()),
                4 | 11 => push(right(), top()),
                6 | 9 => push(bottom(), top()),
                7 | 8 => push(left(), top()),
                5 => {
                    push(left(), bottom());
                    push(right(), top());
                }
                10 => {
                    push(bottom(), right());
                    push(left(), top());
                }
                _ => unreachable!("cases 0 and 15 handled above"),
            }
        }
    }
    segments
}
