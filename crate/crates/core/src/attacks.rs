//! Degradations applied to a published asset: opacity-ordered pruning,
//! uniform random pruning and Gaussian noise on the stored SH floats.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scene::GaussianScene;

/// Noise levels of the robustness protocol.
pub const NOISE_LEVELS: [f64; 4] = [0.0005, 0.001, 0.005, 0.01];
/// Pruning ratios of the robustness protocol.
pub const PRUNE_RATIOS: [f64; 4] = [0.05, 0.10, 0.15, 0.25];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackConfig {
    SequentialPrune { ratio: f64 },
    RandomPrune { ratio: f64, seed: u64 },
    ShNoise { sigma: f64, seed: u64 },
}

impl AttackConfig {
    pub fn apply(&self, scene: &GaussianScene) -> Result<GaussianScene> {
        match *self {
            AttackConfig::SequentialPrune { ratio } => prune_sequential(scene, ratio),
            AttackConfig::RandomPrune { ratio, seed } => prune_random(scene, ratio, seed),
            AttackConfig::ShNoise { sigma, seed } => add_sh_noise(scene, sigma, seed),
        }
    }
}

fn removal_count(n: usize, ratio: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::InvalidRatio(ratio));
    }
    Ok((ratio * n as f64).floor() as usize)
}

/// Indices that survive removing the `⌊ratio·N⌋` least opaque primitives.
pub fn sequential_survivors(scene: &GaussianScene, ratio: f64) -> Result<Vec<usize>> {
    let remove = removal_count(scene.len(), ratio)?;
    let opacity: Vec<f64> = scene
        .raw_opacities
        .iter()
        .map(|&o| 1.0 / (1.0 + (-(o as f64)).exp()))
        .collect();
    let mut order: Vec<usize> = (0..scene.len()).collect();
    order.sort_by(|&a, &b| opacity[a].total_cmp(&opacity[b]).then(a.cmp(&b)));
    let mut keep = vec![true; scene.len()];
    for &i in &order[..remove] {
        keep[i] = false;
    }
    Ok((0..scene.len()).filter(|&i| keep[i]).collect())
}

pub fn prune_sequential(scene: &GaussianScene, ratio: f64) -> Result<GaussianScene> {
    scene.validate()?;
    Ok(scene.select(&sequential_survivors(scene, ratio)?))
}

/// Indices that survive removing a uniform random `⌊ratio·N⌋` subset.
pub fn random_survivors(n: usize, ratio: f64, seed: u64) -> Result<Vec<usize>> {
    let remove = removal_count(n, ratio)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![true; n];
    for i in rand::seq::index::sample(&mut rng, n, remove) {
        keep[i] = false;
    }
    Ok((0..n).filter(|&i| keep[i]).collect())
}

pub fn prune_random(scene: &GaussianScene, ratio: f64, seed: u64) -> Result<GaussianScene> {
    scene.validate()?;
    Ok(scene.select(&random_survivors(scene.len(), ratio, seed)?))
}

/// Adds i.i.d. `N(0, σ²)` to every stored SH float (DC and rest).
pub fn add_sh_noise(scene: &GaussianScene, sigma: f64, seed: u64) -> Result<GaussianScene> {
    scene.validate()?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParams(format!("noise sigma {sigma} must be positive")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = scene.clone();
    for block in &mut out.sh {
        for v in block.coeffs.iter_mut().flatten() {
            *v = (*v as f64 + normal.sample(&mut rng)) as f32;
        }
    }
    Ok(out)
}
