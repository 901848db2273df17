//! Real spherical harmonics up to degree 3 in the slot order used by 3DGS
//! assets (`j = l² + l + m`, Condon-Shortley phase included).

use crate::error::{Error, Result};
use crate::scene::{ShBlock, SH_COEFFS};

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
pub const SH_C1: f64 = 0.488_602_511_902_919_9;
pub const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
pub const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// The 16 basis values for `direction`, normalized internally.
pub fn sh_basis(direction: [f64; 3]) -> Result<[f64; SH_COEFFS]> {
    let n = (direction[0].powi(2) + direction[1].powi(2) + direction[2].powi(2)).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroDirection);
    }
    let [x, y, z] = direction.map(|v| v / n);
    Ok(basis_unit(x, y, z))
}

#[inline]
fn basis_unit(x: f64, y: f64, z: f64) -> [f64; SH_COEFFS] {
    let (xx, yy, zz) = (x * x, y * y, z * z);
    let (xy, yz, xz) = (x * y, y * z, x * z);
    [
        SH_C0,
        -SH_C1 * y,
        SH_C1 * z,
        -SH_C1 * x,
        SH_C2[0] * xy,
        SH_C2[1] * yz,
        SH_C2[2] * (2.0 * zz - xx - yy),
        SH_C2[3] * xz,
        SH_C2[4] * (xx - yy),
        SH_C3[0] * y * (3.0 * xx - yy),
        SH_C3[1] * xy * z,
        SH_C3[2] * y * (4.0 * zz - xx - yy),
        SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
        SH_C3[4] * x * (4.0 * zz - xx - yy),
        SH_C3[5] * z * (xx - yy),
        SH_C3[6] * x * (xx - 3.0 * yy),
    ]
}

/// View-dependent color: `max(Σ_j c_j·Y_j(d) + 0.5, 0)` per channel.
pub fn eval_color(sh: &ShBlock, direction: [f64; 3]) -> Result<[f64; 3]> {
    Ok(eval_with_basis(sh, &sh_basis(direction)?))
}

#[inline]
pub(crate) fn eval_with_basis(sh: &ShBlock, basis: &[f64; SH_COEFFS]) -> [f64; 3] {
    let mut rgb = [0.5; 3];
    for (row, &y) in sh.coeffs.iter().zip(basis) {
        for ch in 0..3 {
            rgb[ch] += row[ch] as f64 * y;
        }
    }
    rgb.map(|v| v.max(0.0))
}
