//! Seeded generator of cover/hidden attribute pairs that share positions.
//!
//! SH coefficients follow `amp·decay^l·(coh·√2·sin(ω·p + φ) + √(1−coh²)·ε)`,
//! a spatially smooth field plus white noise whose RMS is `amp·decay^l` at
//! order `l`. One `(ω, φ)` pair is drawn per slot and channel.
//!
//! Opacities come in two populations. "Content" primitives are clearly
//! visible in the cover and carry a hidden opacity that decreases linearly
//! with it, staying above the noise floor. "Floor" primitives are faint in
//! both scenes, with hidden opacity at or below the noise floor.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::render::Camera;
use crate::scene::{logit, sh_order, GaussianScene, HiddenAttributes, ShBlock, SH_COEFFS};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub count: usize,
    pub bounds: ([f32; 3], [f32; 3]),
    pub log_scale_range: (f32, f32),
    /// RMS of order-0 coefficients.
    pub amplitude: f64,
    /// Per-order RMS ratio.
    pub decay: f64,
    /// Share of each coefficient's variance that comes from the smooth field.
    pub coherence: f64,
    /// Range of the per-axis wave-number magnitudes of the smooth field.
    pub wave_band: (f64, f64),
    /// Fraction of content primitives; the rest sit at the noise floor.
    pub content_fraction: f64,
    /// Upper bound of floor hidden opacities.
    pub noise_floor: f64,
    /// Half-width of the uniform jitter on content hidden opacities.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            count: 20_000,
            bounds: ([-0.5; 3], [0.5; 3]),
            log_scale_range: (-6.0, -2.0),
            amplitude: 1.0,
            decay: 0.5,
            coherence: 0.9,
            wave_band: (2.0 * PI, 4.0 * PI),
            content_fraction: 0.6,
            noise_floor: 0.2,
            jitter: 0.01,
            seed: 0,
        }
    }
}

const CONTENT_ALPHA: (f64, f64) = (0.4, 0.99);
const FLOOR_ALPHA: (f64, f64) = (0.02, 0.3);
const HIDDEN_TOP: f64 = 0.95;
const HIDDEN_SPAN: f64 = 0.6;

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if self.count == 0 {
            return bad("count must be at least 1");
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad("decay must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.coherence) || !(0.0..=1.0).contains(&self.content_fraction) {
            return bad("coherence and content fraction must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.noise_floor) || !(self.jitter >= 0.0) {
            return bad("noise floor must lie in [0, 1) and jitter be non-negative");
        }
        let (wlo, whi) = self.wave_band;
        if !(wlo >= 0.0 && wlo <= whi && whi.is_finite()) {
            return bad("wave band must be finite with 0 <= lo <= hi");
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return bad("amplitude must be finite and non-negative");
        }
        let (lo, hi) = self.bounds;
        if (0..3).any(|a| !(lo[a] <= hi[a]) || !lo[a].is_finite() || !hi[a].is_finite()) {
            return bad("position bounds must be finite with lo <= hi");
        }
        let (slo, shi) = self.log_scale_range;
        if !(slo <= shi && slo.is_finite() && shi.is_finite()) {
            return bad("log-scale range must be finite with lo <= hi");
        }
        Ok(())
    }

    /// Reads `key = value` lines (`#` comments) over the defaults.
    /// `bounds` takes six numbers: lo xyz then hi xyz.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::Parse(format!("synth config line {}: {m}", lineno + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|e| err(format!("`{key}`: {e}")));
            match key {
                "count" => cfg.count = value.parse().map_err(|e| err(format!("`count`: {e}")))?,
                "seed" => cfg.seed = value.parse().map_err(|e| err(format!("`seed`: {e}")))?,
                "amplitude" => cfg.amplitude = num(value)?,
                "decay" => cfg.decay = num(value)?,
                "coherence" => cfg.coherence = num(value)?,
                "content_fraction" => cfg.content_fraction = num(value)?,
                "noise_floor" => cfg.noise_floor = num(value)?,
                "jitter" => cfg.jitter = num(value)?,
                "log_scale_range" | "bounds" | "wave_band" => {
                    let v: Vec<f64> = value.split_whitespace().map(num).collect::<Result<_>>()?;
                    let f = |i: usize| v[i] as f32;
                    match (key, v.len()) {
                        ("bounds", 6) => cfg.bounds = ([f(0), f(1), f(2)], [f(3), f(4), f(5)]),
                        ("log_scale_range", 2) => cfg.log_scale_range = (f(0), f(1)),
                        ("wave_band", 2) => cfg.wave_band = (v[0], v[1]),
                        _ => return Err(err(format!("`{key}` has the wrong number of values"))),
                    }
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Smooth SH field: one wave vector and phase per slot and channel.
struct ShField {
    omega: [[[f64; 3]; 3]; SH_COEFFS],
    phase: [[f64; 3]; SH_COEFFS],
}

impl ShField {
    fn draw(band: (f64, f64), rng: &mut ChaCha8Rng) -> Self {
        let mut omega = [[[0.0; 3]; 3]; SH_COEFFS];
        let mut phase = [[0.0; 3]; SH_COEFFS];
        for j in 0..SH_COEFFS {
            for c in 0..3 {
                for w in &mut omega[j][c] {
                    let mag = if band.0 < band.1 { rng.random_range(band.0..band.1) } else { band.0 };
                    *w = if rng.random_bool(0.5) { mag } else { -mag };
                }
                phase[j][c] = rng.random_range(0.0..2.0 * PI);
            }
        }
        Self { omega, phase }
    }

    fn sample(&self, cfg: &SynthConfig, p: [f32; 3], rng: &mut ChaCha8Rng) -> ShBlock {
        let white = (1.0 - cfg.coherence * cfg.coherence).sqrt();
        let mut block = ShBlock::zeros();
        for j in 0..SH_COEFFS {
            let scale = cfg.amplitude * cfg.decay.powi(sh_order(j) as i32);
            for c in 0..3 {
                let w = &self.omega[j][c];
                let arg = w[0] * p[0] as f64 + w[1] * p[1] as f64 + w[2] * p[2] as f64 + self.phase[j][c];
                let eps: f64 = StandardNormal.sample(rng);
                block.coeffs[j][c] = (scale * (cfg.coherence * SQRT_2 * arg.sin() + white * eps)) as f32;
            }
        }
        block
    }
}

fn unit_quaternion(rng: &mut ChaCha8Rng) -> [f32; 4] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-6 {
            return q.map(|v| (v / n) as f32);
        }
    }
}

/// Hidden opacity of a content primitive, decreasing in its cover opacity.
fn content_hidden(alpha: f64, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> f64 {
    let t = ((alpha - CONTENT_ALPHA.0) / (CONTENT_ALPHA.1 - CONTENT_ALPHA.0)).clamp(0.0, 1.0);
    let j = if cfg.jitter > 0.0 { rng.random_range(-cfg.jitter..cfg.jitter) } else { 0.0 };
    (HIDDEN_TOP - HIDDEN_SPAN * t + j).clamp(0.0, 1.0)
}

fn floor_hidden(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> f64 {
    if cfg.noise_floor > 0.0 {
        rng.random_range(0.0..=cfg.noise_floor)
    } else {
        0.0
    }
}

/// Generates a cover scene and hidden attributes at the same positions.
pub fn gen_scene_pair(cfg: &SynthConfig) -> Result<(GaussianScene, HiddenAttributes)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cover_field = ShField::draw(cfg.wave_band, &mut rng);
    let hidden_field = ShField::draw(cfg.wave_band, &mut rng);
    let (lo, hi) = cfg.bounds;
    let (slo, shi) = cfg.log_scale_range;
    let uniform = |rng: &mut ChaCha8Rng, a: f32, b: f32| if a < b { rng.random_range(a..b) } else { a };

    let mut cover = GaussianScene::with_capacity(cfg.count);
    let mut hidden = HiddenAttributes {
        sh_hidden: Vec::with_capacity(cfg.count),
        opacity_hidden: Vec::with_capacity(cfg.count),
    };
    for _ in 0..cfg.count {
        let pos: [f32; 3] = std::array::from_fn(|a| uniform(&mut rng, lo[a], hi[a]));
        let rot = unit_quaternion(&mut rng);
        let scale: [f32; 3] = std::array::from_fn(|_| uniform(&mut rng, slo, shi));
        let (alpha, alpha_hidden) = if rng.random_bool(cfg.content_fraction) {
            let a = rng.random_range(CONTENT_ALPHA.0..CONTENT_ALPHA.1);
            (a, content_hidden(a, cfg, &mut rng))
        } else {
            let a = rng.random_range(FLOOR_ALPHA.0..FLOOR_ALPHA.1);
            (a, floor_hidden(cfg, &mut rng))
        };
        let cover_sh = cover_field.sample(cfg, pos, &mut rng);
        let hidden_sh = hidden_field.sample(cfg, pos, &mut rng);
        cover.push(pos, [0.0; 3], rot, scale, logit(alpha as f32), cover_sh);
        hidden.sh_hidden.push(hidden_sh);
        hidden.opacity_hidden.push(alpha_hidden as f32);
    }
    Ok((cover, hidden))
}

/// Hidden attributes for an existing cover. Primitives at least as opaque as
/// the content range get content opacities, the rest sit at the floor.
/// Only the SH, opacity and seed fields of `cfg` are used.
pub fn gen_hidden(cover: &GaussianScene, cfg: &SynthConfig) -> Result<HiddenAttributes> {
    cfg.validate()?;
    cover.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let field = ShField::draw(cfg.wave_band, &mut rng);
    let mut hidden = HiddenAttributes::default();
    for (&pos, alpha) in cover.positions.iter().zip(cover.opacities()) {
        let alpha = alpha as f64;
        let a = if alpha >= CONTENT_ALPHA.0 {
            content_hidden(alpha, cfg, &mut rng)
        } else {
            floor_hidden(cfg, &mut rng)
        };
        hidden.sh_hidden.push(field.sample(cfg, pos, &mut rng));
        hidden.opacity_hidden.push(a as f32);
    }
    Ok(hidden)
}

/// The hidden scene as it is meant to be seen: primitives above the noise floor.
pub fn hidden_reference(cover: &GaussianScene, hidden: &HiddenAttributes, noise_floor: f64) -> GaussianScene {
    hidden.to_scene(cover, |a| a as f64 > noise_floor)
}

/// Camera on the `-z` axis looking at the origin, framing the unit cube.
pub fn default_camera(width: usize, height: usize) -> Camera {
    Camera::look_at([0.0, 0.0, -2.5], [0.0; 3], [0.0, -1.0, 0.0], 0.7, width, height)
}
