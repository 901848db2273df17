//! Hidden-opacity selection, the cover→hidden opacity mapping and
//! coordinate matching at extraction time.

mod autoencoder;

use std::collections::HashMap;

pub use autoencoder::{
    padded_len, Autoencoder, Layer, LayerKind, TrainConfig, TrainReport, CHANNELS, KERNEL, OUTPUT_PADDING, PADDING,
    STRIDE,
};

use crate::error::{Error, Result};
use crate::scene::GaussianScene;

/// Default opacity threshold.
pub const DEFAULT_TAU: f64 = 0.25;

/// Primitives whose hidden opacity exceeds the threshold, with their positions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndexSet {
    pub indices: Vec<usize>,
    pub coords: Vec<[f32; 3]>,
}

impl IndexSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `{i : α′_i > τ}`, strict.
pub fn significant_indices(hidden_opacity: &[f32], positions: &[[f32; 3]], tau: f64) -> Result<IndexSet> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidParams(format!("threshold {tau} outside [0, 1)")));
    }
    if hidden_opacity.len() != positions.len() {
        return Err(Error::LengthMismatch {
            expected: positions.len(),
            actual: hidden_opacity.len(),
        });
    }
    if let Some(&bad) = hidden_opacity.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::InvalidParams(format!("hidden opacity {bad} outside [0, 1]")));
    }
    let indices: Vec<usize> = (0..hidden_opacity.len())
        .filter(|&i| hidden_opacity[i] as f64 > tau)
        .collect();
    if indices.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let coords = indices.iter().map(|&i| positions[i]).collect();
    Ok(IndexSet { indices, coords })
}

/// Trains the mapping `1 − α ↦ α′` on the selected primitives.
pub fn ae_train(cover_opacity: &[f32], hidden_opacity: &[f32], cfg: &TrainConfig) -> Result<(Autoencoder, TrainReport)> {
    let input: Vec<f64> = cover_opacity.iter().map(|&a| 1.0 - a as f64).collect();
    let target: Vec<f64> = hidden_opacity.iter().map(|&a| a as f64).collect();
    autoencoder::train(&input, &target, cfg)
}

/// Estimated hidden opacity for each cover opacity.
pub fn map_opacity(model: &Autoencoder, cover_opacity: &[f32]) -> Vec<f32> {
    let input: Vec<f64> = cover_opacity.iter().map(|&a| 1.0 - a as f64).collect();
    model.forward(&input).into_iter().map(|v| v as f32).collect()
}

/// Like [`map_opacity`] for a key-ordered sequence with gaps. Absent entries
/// are fed as `1.0` in the `1 − α` domain and come back as `None`.
pub fn map_opacity_partial(model: &Autoencoder, cover_opacity: &[Option<f32>]) -> Vec<Option<f32>> {
    let input: Vec<f64> = cover_opacity
        .iter()
        .map(|a| a.map_or(1.0, |a| 1.0 - a as f64))
        .collect();
    model
        .forward(&input)
        .into_iter()
        .zip(cover_opacity)
        .map(|(v, a)| a.map(|_| v as f32))
        .collect()
}

fn coord_key(p: [f32; 3]) -> [u32; 3] {
    p.map(f32::to_bits)
}

/// For each key coordinate, the index of the scene primitive at exactly that
/// position, or `None` if it is gone.
pub fn match_coordinates(key_coords: &[[f32; 3]], scene: &GaussianScene) -> Result<Vec<Option<usize>>> {
    // usize::MAX marks a coordinate held by more than one primitive
    let mut lookup: HashMap<[u32; 3], usize> = HashMap::with_capacity(scene.len());
    for (i, &p) in scene.positions.iter().enumerate() {
        lookup
            .entry(coord_key(p))
            .and_modify(|slot| *slot = usize::MAX)
            .or_insert(i);
    }
    key_coords
        .iter()
        .map(|&c| match lookup.get(&coord_key(c)) {
            None => Ok(None),
            Some(&usize::MAX) => Err(Error::AmbiguousMatch(c)),
            Some(&i) => Ok(Some(i)),
        })
        .collect()
}
