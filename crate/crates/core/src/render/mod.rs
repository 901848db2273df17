//! CPU reference splatting renderer.
//!
//! Primitives are projected with the EWA approximation, sorted globally by
//! camera depth (ties by primitive index) and alpha-composited front to back
//! per pixel. Pixel `(x, y)` is sampled at `(x + 0.5, y + 0.5)`. Tiles are
//! used only to cull splats whose footprint cannot reach a pixel; every
//! pixel sees its splats in the global depth order.

mod camera;
pub mod sh;

use rayon::prelude::*;

pub use camera::Camera;
pub use sh::{eval_color, sh_basis, SH_C0, SH_C1};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::scene::{sigmoid, GaussianScene};

/// Low-pass dilation added to the projected covariance diagonal.
pub const LOW_PASS: f64 = 0.3;
/// Contributions below this alpha are skipped.
pub const MIN_ALPHA: f64 = 1.0 / 255.0;
/// Alpha never exceeds this value.
pub const MAX_ALPHA: f64 = 0.99;
/// Compositing stops once transmittance would fall below this.
pub const MIN_TRANSMITTANCE: f64 = 1e-4;

const TILE: usize = 16;

pub type Mat3 = [[f64; 3]; 3];

/// Rotation matrix of a quaternion stored as `(w, x, y, z)`, normalized first.
pub fn quat_to_mat(q: [f64; 4]) -> Result<Mat3> {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::DegenerateQuaternion);
    }
    let [w, x, y, z] = q.map(|v| v / n);
    Ok([
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])
}

/// `Σ = R S Sᵀ Rᵀ` for activated (positive) scales.
pub fn covariance3d(rotation: [f64; 4], scale: [f64; 3]) -> Result<Mat3> {
    let r = quat_to_mat(rotation)?;
    let m: Mat3 = std::array::from_fn(|i| std::array::from_fn(|j| r[i][j] * scale[j]));
    Ok(std::array::from_fn(|i| {
        std::array::from_fn(|j| (0..3).map(|k| m[i][k] * m[j][k]).sum())
    }))
}

/// Screen-space covariance `J W Σ Wᵀ Jᵀ` plus the low-pass floor on the
/// diagonal, as `[a, b, c]` for the matrix `[[a, b], [b, c]]`.
pub fn project_covariance(cov: &Mat3, cam: &Camera, mean_cam: [f64; 3]) -> Result<[f64; 3]> {
    let [x, y, z] = mean_cam;
    if !(z > 0.0) {
        return Err(Error::NonPositiveDepth(z));
    }
    let j = [
        [cam.fx / z, 0.0, -cam.fx * x / (z * z)],
        [0.0, cam.fy / z, -cam.fy * y / (z * z)],
    ];
    let w = &cam.rotation;
    let t: [[f64; 3]; 2] =
        std::array::from_fn(|r| std::array::from_fn(|c| (0..3).map(|k| j[r][k] * w[k][c]).sum()));
    let tc: [[f64; 3]; 2] =
        std::array::from_fn(|r| std::array::from_fn(|c| (0..3).map(|k| t[r][k] * cov[k][c]).sum()));
    let entry = |r: usize, c: usize| (0..3).map(|k| tc[r][k] * t[c][k]).sum::<f64>();
    Ok([entry(0, 0) + LOW_PASS, entry(0, 1), entry(1, 1) + LOW_PASS])
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderStats {
    pub projected: usize,
    pub behind_camera: usize,
    /// Projected covariance with non-positive determinant.
    pub singular: usize,
    /// Opacity too low to ever reach the alpha cutoff.
    pub transparent: usize,
    /// Degenerate rotation or non-finite attributes.
    pub invalid: usize,
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub image: ImageBuffer,
    /// Accumulated weight `Σ α_i T_i` per pixel (`1 - final transmittance`).
    pub alpha: Vec<f64>,
    pub stats: RenderStats,
}

struct Splat {
    depth: f64,
    index: usize,
    mean: [f64; 2],
    /// Inverse covariance `[a, b, c]`.
    conic: [f64; 3],
    opacity: f64,
    color: [f64; 3],
    bbox: [usize; 4],
}

fn project(scene: &GaussianScene, cam: &Camera, stats: &mut RenderStats) -> Vec<Splat> {
    let center = cam.center();
    let mut splats = Vec::with_capacity(scene.len());
    for i in 0..scene.len() {
        let p = scene.positions[i].map(|v| v as f64);
        let pc = cam.to_camera(p);
        if !(pc[2] > 0.0) {
            stats.behind_camera += 1;
            continue;
        }
        let opacity = sigmoid(scene.raw_opacities[i]) as f64;
        if !(opacity >= MIN_ALPHA) {
            stats.transparent += 1;
            continue;
        }
        let scale = scene.log_scales[i].map(|v| (v as f64).exp());
        let Ok(cov) = covariance3d(scene.rotations[i].map(|v| v as f64), scale) else {
            stats.invalid += 1;
            continue;
        };
        let Ok([a, b, c]) = project_covariance(&cov, cam, pc) else {
            stats.behind_camera += 1;
            continue;
        };
        let det = a * c - b * b;
        if !(det > 0.0) || !det.is_finite() {
            stats.singular += 1;
            continue;
        }
        let conic = [c / det, -b / det, a / det];
        let mean = [cam.fx * pc[0] / pc[2] + cam.cx, cam.fy * pc[1] / pc[2] + cam.cy];
        let dir = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
        let Ok(color) = eval_color(&scene.sh[i], dir) else {
            stats.invalid += 1;
            continue;
        };
        if !(mean.iter().all(|v| v.is_finite()) && color.iter().all(|v| v.is_finite())) {
            stats.invalid += 1;
            continue;
        }
        // pixels reach alpha >= 1/255 only inside dᵀΣ'⁻¹d <= 2 ln(255·o)
        let r2 = 2.0 * (opacity / MIN_ALPHA).ln();
        let ext = [(r2 * a).sqrt(), (r2 * c).sqrt()];
        let lo = |m: f64, e: f64| (m - e - 1.0).floor().max(0.0);
        let hi = |m: f64, e: f64, limit: usize| (m + e + 1.0).ceil().min(limit as f64);
        let x0 = lo(mean[0], ext[0]);
        let y0 = lo(mean[1], ext[1]);
        let x1 = hi(mean[0], ext[0], cam.width);
        let y1 = hi(mean[1], ext[1], cam.height);
        if x0 >= x1 || y0 >= y1 {
            stats.projected += 1;
            continue;
        }
        stats.projected += 1;
        splats.push(Splat {
            depth: pc[2],
            index: i,
            mean,
            conic,
            opacity,
            color,
            bbox: [x0 as usize, y0 as usize, x1 as usize, y1 as usize],
        });
    }
    splats.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.index.cmp(&b.index)));
    splats
}

/// Renders `scene` from `cam` over a constant `background`.
pub fn render(scene: &GaussianScene, cam: &Camera, background: [f32; 3]) -> Result<RenderOutput> {
    cam.validate()?;
    scene.validate()?;
    let mut stats = RenderStats::default();
    let splats = project(scene, cam, &mut stats);

    let tiles_x = cam.width.div_ceil(TILE);
    let tiles_y = cam.height.div_ceil(TILE);
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); tiles_x * tiles_y];
    for (k, s) in splats.iter().enumerate() {
        let [x0, y0, x1, y1] = s.bbox;
        for ty in y0 / TILE..=(y1 - 1) / TILE {
            for tx in x0 / TILE..=(x1 - 1) / TILE {
                bins[ty * tiles_x + tx].push(k as u32);
            }
        }
    }

    let bg = background.map(|v| v as f64);
    let rows: Vec<(Vec<f32>, Vec<f64>)> = (0..cam.height)
        .into_par_iter()
        .map(|py| {
            let mut rgb = Vec::with_capacity(cam.width * 3);
            let mut acc = Vec::with_capacity(cam.width);
            let ty = py / TILE;
            for px in 0..cam.width {
                let bin = &bins[ty * tiles_x + px / TILE];
                let (c, t) = shade_pixel(px, py, bin.iter().map(|&k| &splats[k as usize]));
                for ch in 0..3 {
                    rgb.push((c[ch] + t * bg[ch]) as f32);
                }
                acc.push(1.0 - t);
            }
            (rgb, acc)
        })
        .collect();

    let mut data = Vec::with_capacity(cam.width * cam.height * 3);
    let mut alpha = Vec::with_capacity(cam.width * cam.height);
    for (rgb, acc) in rows {
        data.extend(rgb);
        alpha.extend(acc);
    }
    Ok(RenderOutput {
        image: ImageBuffer::from_rgb(cam.width, cam.height, data)?,
        alpha,
        stats,
    })
}

/// Front-to-back compositing of one pixel. Returns the accumulated color and
/// the remaining transmittance.
fn shade_pixel<'a>(px: usize, py: usize, splats: impl Iterator<Item = &'a Splat>) -> ([f64; 3], f64) {
    let pix = [px as f64 + 0.5, py as f64 + 0.5];
    let mut color = [0.0; 3];
    let mut t = 1.0;
    for s in splats {
        let [x0, y0, x1, y1] = s.bbox;
        if px < x0 || px >= x1 || py < y0 || py >= y1 {
            continue;
        }
        let d = [s.mean[0] - pix[0], s.mean[1] - pix[1]];
        let power = -0.5 * (s.conic[0] * d[0] * d[0] + s.conic[2] * d[1] * d[1]) - s.conic[1] * d[0] * d[1];
        if power > 0.0 {
            continue;
        }
        let alpha = (s.opacity * power.exp()).min(MAX_ALPHA);
        if alpha < MIN_ALPHA {
            continue;
        }
        let next = t * (1.0 - alpha);
        if next < MIN_TRANSMITTANCE {
            break;
        }
        for ch in 0..3 {
            color[ch] += s.color[ch] * alpha * t;
        }
        t = next;
    }
    (color, t)
}
