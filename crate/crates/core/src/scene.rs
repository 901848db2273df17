//! Gaussian scene containers and the binary little-endian point-cloud asset
//! used by vanilla 3DGS tooling.
//!
//! The property list is fixed: `x y z nx ny nz f_dc_0..2 f_rest_0..44 opacity
//! scale_0..2 rot_0..3`, all `float`. Values are stored exactly as the asset
//! holds them: logit opacities, log scales, unnormalized quaternions.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Coefficients per color channel for degree-3 spherical harmonics.
pub const SH_COEFFS: usize = 16;
/// Highest SH order stored per primitive.
pub const SH_MAX_ORDER: usize = 3;
/// Number of `float` properties per vertex in the canonical layout.
pub const FLOATS_PER_VERTEX: usize = 62;
const BYTES_PER_VERTEX: usize = FLOATS_PER_VERTEX * 4;

/// Spherical harmonic order of flat coefficient index `j` (`⌊√j⌋`).
#[inline]
pub fn sh_order(j: usize) -> usize {
    // exact for j < 2^26
    (j as f64).sqrt().floor() as usize
}

/// Per-primitive SH coefficients, `coeffs[j][channel]` with `j` in `0..16`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShBlock {
    pub coeffs: [[f32; 3]; SH_COEFFS],
}

impl ShBlock {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn dc(&self) -> [f32; 3] {
        self.coeffs[0]
    }

    /// Bitwise equality, so NaN payloads and signed zeros compare as stored.
    pub fn bits_eq(&self, other: &Self) -> bool {
        self.coeffs
            .iter()
            .flatten()
            .zip(other.coeffs.iter().flatten())
            .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Structure-of-arrays scene of `N` Gaussian primitives.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaussianScene {
    pub positions: Vec<[f32; 3]>,
    /// Carried through for round-trip fidelity; never interpreted.
    pub normals: Vec<[f32; 3]>,
    pub rotations: Vec<[f32; 4]>,
    pub log_scales: Vec<[f32; 3]>,
    pub raw_opacities: Vec<f32>,
    pub sh: Vec<ShBlock>,
}

/// Hidden attribute set sharing primitive locations with a cover scene.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HiddenAttributes {
    pub sh_hidden: Vec<ShBlock>,
    /// Activated opacity in `[0, 1]`.
    pub opacity_hidden: Vec<f32>,
}

impl HiddenAttributes {
    pub fn len(&self) -> usize {
        self.sh_hidden.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sh_hidden.is_empty()
    }

    /// Builds a full scene from a cover's geometry and these attributes.
    /// Primitives whose hidden opacity does not pass `keep` are dropped.
    pub fn to_scene(&self, cover: &GaussianScene, keep: impl Fn(f32) -> bool) -> GaussianScene {
        let mut out = GaussianScene::default();
        for i in 0..cover.len() {
            let alpha = self.opacity_hidden[i];
            if keep(alpha) {
                out.push(
                    cover.positions[i],
                    cover.normals[i],
                    cover.rotations[i],
                    cover.log_scales[i],
                    logit(alpha),
                    self.sh_hidden[i],
                );
            }
        }
        out
    }
}

/// Opacity clamp used before converting an activated value back to a logit.
pub const OPACITY_EPS: f32 = 1e-6;

pub fn sigmoid(x: f32) -> f32 {
    (1.0 / (1.0 + (-(x as f64)).exp())) as f32
}

/// Inverse sigmoid with the input clamped to `[1e-6, 1 - 1e-6]`.
pub fn logit(p: f32) -> f32 {
    let p = (p as f64).clamp(OPACITY_EPS as f64, 1.0 - OPACITY_EPS as f64);
    (p / (1.0 - p)).ln() as f32
}

impl GaussianScene {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            positions: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            rotations: Vec::with_capacity(n),
            log_scales: Vec::with_capacity(n),
            raw_opacities: Vec::with_capacity(n),
            sh: Vec::with_capacity(n),
        }
    }

    pub fn push(
        &mut self,
        position: [f32; 3],
        normal: [f32; 3],
        rotation: [f32; 4],
        log_scale: [f32; 3],
        raw_opacity: f32,
        sh: ShBlock,
    ) {
        self.positions.push(position);
        self.normals.push(normal);
        self.rotations.push(rotation);
        self.log_scales.push(log_scale);
        self.raw_opacities.push(raw_opacity);
        self.sh.push(sh);
    }

    /// Checks that every attribute array has the same length.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for len in [
            self.normals.len(),
            self.rotations.len(),
            self.log_scales.len(),
            self.raw_opacities.len(),
            self.sh.len(),
        ] {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        Ok(())
    }

    /// Keeps the primitives at `indices` (ascending), preserving relative order.
    pub fn select(&self, indices: &[usize]) -> GaussianScene {
        let mut out = GaussianScene::with_capacity(indices.len());
        for &i in indices {
            out.push(
                self.positions[i],
                self.normals[i],
                self.rotations[i],
                self.log_scales[i],
                self.raw_opacities[i],
                self.sh[i],
            );
        }
        out
    }

    /// Activated opacities (`sigmoid`) and scales (`exp`).
    pub fn activate(&self) -> (Vec<f32>, Vec<[f32; 3]>) {
        let opacities = self.raw_opacities.iter().map(|&o| sigmoid(o)).collect();
        let scales = self
            .log_scales
            .iter()
            .map(|s| s.map(|v| (v as f64).exp() as f32))
            .collect();
        (opacities, scales)
    }

    pub fn opacities(&self) -> Vec<f32> {
        self.raw_opacities.iter().map(|&o| sigmoid(o)).collect()
    }

    /// Bitwise comparison of every non-SH attribute.
    pub fn non_sh_bits_eq(&self, other: &Self) -> bool {
        fn eq<const K: usize>(a: &[[f32; K]], b: &[[f32; K]]) -> bool {
            a.len() == b.len()
                && a.iter()
                    .flatten()
                    .zip(b.iter().flatten())
                    .all(|(x, y)| x.to_bits() == y.to_bits())
        }
        eq(&self.positions, &other.positions)
            && eq(&self.normals, &other.normals)
            && eq(&self.rotations, &other.rotations)
            && eq(&self.log_scales, &other.log_scales)
            && self.raw_opacities.len() == other.raw_opacities.len()
            && self
                .raw_opacities
                .iter()
                .zip(&other.raw_opacities)
                .all(|(x, y)| x.to_bits() == y.to_bits())
    }

    /// Field-by-field bitwise equality.
    pub fn bits_eq(&self, other: &Self) -> bool {
        self.non_sh_bits_eq(other)
            && self.sh.len() == other.sh.len()
            && self.sh.iter().zip(&other.sh).all(|(a, b)| a.bits_eq(b))
    }
}

/// Property names in canonical file order.
pub fn property_names() -> Vec<String> {
    let mut names: Vec<String> = ["x", "y", "z", "nx", "ny", "nz"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..3).map(|i| format!("f_dc_{i}")));
    names.extend((0..45).map(|i| format!("f_rest_{i}")));
    names.push("opacity".into());
    names.extend((0..3).map(|i| format!("scale_{i}")));
    names.extend((0..4).map(|i| format!("rot_{i}")));
    names
}

/// The canonical header for a scene of `count` primitives.
pub fn header(count: usize) -> String {
    let mut h = format!("ply\nformat binary_little_endian 1.0\nelement vertex {count}\n");
    for name in property_names() {
        h.push_str("property float ");
        h.push_str(&name);
        h.push('\n');
    }
    h.push_str("end_header\n");
    h
}

fn flatten_vertex(scene: &GaussianScene, i: usize, out: &mut [f32; FLOATS_PER_VERTEX]) {
    out[0..3].copy_from_slice(&scene.positions[i]);
    out[3..6].copy_from_slice(&scene.normals[i]);
    let sh = &scene.sh[i].coeffs;
    out[6..9].copy_from_slice(&sh[0]);
    // f_rest is channel-major: all of R's j=1..15, then G, then B
    for ch in 0..3 {
        for j in 1..SH_COEFFS {
            out[9 + ch * 15 + (j - 1)] = sh[j][ch];
        }
    }
    out[54] = scene.raw_opacities[i];
    out[55..58].copy_from_slice(&scene.log_scales[i]);
    out[58..62].copy_from_slice(&scene.rotations[i]);
}

fn unflatten_vertex(v: &[f32; FLOATS_PER_VERTEX], scene: &mut GaussianScene) {
    let mut sh = ShBlock::zeros();
    sh.coeffs[0] = [v[6], v[7], v[8]];
    for ch in 0..3 {
        for j in 1..SH_COEFFS {
            sh.coeffs[j][ch] = v[9 + ch * 15 + (j - 1)];
        }
    }
    scene.push(
        [v[0], v[1], v[2]],
        [v[3], v[4], v[5]],
        [v[58], v[59], v[60], v[61]],
        [v[55], v[56], v[57]],
        v[54],
        sh,
    );
}

/// Serializes a scene to the canonical binary asset.
pub fn save_scene(scene: &GaussianScene) -> Result<Vec<u8>> {
    scene.validate()?;
    let head = header(scene.len());
    let mut out = Vec::with_capacity(head.len() + scene.len() * BYTES_PER_VERTEX);
    out.extend_from_slice(head.as_bytes());
    let mut v = [0f32; FLOATS_PER_VERTEX];
    for i in 0..scene.len() {
        flatten_vertex(scene, i, &mut v);
        for f in v {
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_scene(path: impl AsRef<Path>, scene: &GaussianScene) -> Result<()> {
    let bytes = save_scene(scene)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_scene(path: impl AsRef<Path>) -> Result<GaussianScene> {
    load_scene(&std::fs::read(path)?)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    /// Next `\n`-terminated line, skipping `comment` lines.
    fn line(&mut self) -> Result<(usize, &'a str)> {
        loop {
            let start = self.pos;
            let rest = &self.bytes[start..];
            let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
                return Err(Error::MalformedHeader {
                    offset: start,
                    message: "unterminated header line".into(),
                });
            };
            let line = std::str::from_utf8(&rest[..nl]).map_err(|_| Error::MalformedHeader {
                offset: start,
                message: "header is not ASCII".into(),
            })?;
            self.pos = start + nl + 1;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.starts_with("comment") || line.starts_with("obj_info") {
                continue;
            }
            return Ok((start, line));
        }
    }
}

/// Parses a canonical binary asset. Values are copied bit-for-bit.
pub fn load_scene(bytes: &[u8]) -> Result<GaussianScene> {
    let mut cur = HeaderCursor { bytes, pos: 0 };
    let malformed = |offset: usize, message: &str| Error::MalformedHeader {
        offset,
        message: message.to_string(),
    };

    let (off, magic) = cur.line()?;
    if magic != "ply" {
        return Err(malformed(off, "missing `ply` magic"));
    }
    let (off, format) = cur.line()?;
    if format != "format binary_little_endian 1.0" {
        return Err(malformed(off, "only `format binary_little_endian 1.0` is supported"));
    }
    let (off, element) = cur.line()?;
    let count: usize = element
        .strip_prefix("element vertex ")
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| malformed(off, "expected `element vertex <count>`"))?;

    for expected in property_names() {
        let (off, line) = cur.line()?;
        let expected = format!("property float {expected}");
        if line != expected {
            return Err(Error::PropertyMismatch {
                offset: off,
                expected,
                found: line.to_string(),
            });
        }
    }
    let (off, end) = cur.line()?;
    if end != "end_header" {
        if end.starts_with("property") {
            return Err(Error::PropertyMismatch {
                offset: off,
                expected: "end_header".into(),
                found: end.to_string(),
            });
        }
        return Err(malformed(off, "expected `end_header`"));
    }

    let body_start = cur.pos;
    let needed = count
        .checked_mul(BYTES_PER_VERTEX)
        .ok_or_else(|| malformed(body_start, "vertex count overflows"))?;
    let available = bytes.len() - body_start;
    if available < needed {
        let whole = available / BYTES_PER_VERTEX * BYTES_PER_VERTEX;
        return Err(Error::TruncatedBody {
            offset: body_start + whole,
            needed,
            available,
        });
    }

    let body = &bytes[body_start..body_start + needed];
    let mut scene = GaussianScene::with_capacity(count);
    let mut v = [0f32; FLOATS_PER_VERTEX];
    for chunk in body.chunks_exact(BYTES_PER_VERTEX) {
        for (dst, src) in v.iter_mut().zip(chunk.chunks_exact(4)) {
            *dst = f32::from_le_bytes([src[0], src[1], src[2], src[3]]);
        }
        unflatten_vertex(&v, &mut scene);
    }
    Ok(scene)
}
