//! End-to-end embedding and extraction.

use crate::error::{Error, Result};
use crate::key::StegoKey;
use crate::opacity::{self, Autoencoder, IndexSet, TrainConfig, TrainReport};
use crate::scene::{logit, sigmoid, GaussianScene, HiddenAttributes};
use crate::sh_stego::{self, filter_orders, OrderMask, StegoParams};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig {
    pub params: StegoParams,
    pub tau: f64,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedDiagnostics {
    /// Selected primitives.
    pub selected: usize,
    /// Largest |extracted − hidden| over all SH coefficients.
    pub max_coeff_error: f64,
    pub train: TrainReport,
}

impl std::fmt::Display for EmbedDiagnostics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "selected {} primitives, max coefficient error {:.3e}, opacity mse {:.3e} after {} epochs{}",
            self.selected,
            self.max_coeff_error,
            self.train.final_mse,
            self.train.epochs,
            if self.train.converged { "" } else { " (target not reached)" }
        )
    }
}

#[derive(Debug, Clone)]
pub struct Embedded {
    pub stego: GaussianScene,
    pub key: StegoKey,
    pub diagnostics: EmbedDiagnostics,
}

/// Hidden attributes of a full hidden asset whose positions must equal the
/// cover's bit for bit.
pub fn hidden_from_scene(cover: &GaussianScene, hidden: &GaussianScene) -> Result<HiddenAttributes> {
    cover.validate()?;
    hidden.validate()?;
    if hidden.len() != cover.len() {
        return Err(Error::LengthMismatch {
            expected: cover.len(),
            actual: hidden.len(),
        });
    }
    if let Some(i) = (0..cover.len()).find(|&i| {
        cover.positions[i].map(f32::to_bits) != hidden.positions[i].map(f32::to_bits)
    }) {
        return Err(Error::PositionMismatch(i));
    }
    Ok(HiddenAttributes {
        sh_hidden: hidden.sh.clone(),
        opacity_hidden: hidden.opacities(),
    })
}

fn check_hidden(cover: &GaussianScene, hidden: &HiddenAttributes) -> Result<()> {
    cover.validate()?;
    for len in [hidden.sh_hidden.len(), hidden.opacity_hidden.len()] {
        if len != cover.len() {
            return Err(Error::LengthMismatch {
                expected: cover.len(),
                actual: len,
            });
        }
    }
    Ok(())
}

/// Selects `𝓘` and fits the opacity mapping on it.
pub fn train_opacity(
    cover: &GaussianScene,
    hidden: &HiddenAttributes,
    tau: f64,
    train: &TrainConfig,
) -> Result<(IndexSet, Autoencoder, TrainReport)> {
    check_hidden(cover, hidden)?;
    let set = opacity::significant_indices(&hidden.opacity_hidden, &cover.positions, tau)?;
    let alpha = cover.opacities();
    let cover_op: Vec<f32> = set.indices.iter().map(|&i| alpha[i]).collect();
    let hidden_op: Vec<f32> = set.indices.iter().map(|&i| hidden.opacity_hidden[i]).collect();
    let (model, report) = opacity::ae_train(&cover_op, &hidden_op, train)?;
    Ok((set, model, report))
}

fn max_coeff_error(stego: &GaussianScene, hidden: &HiddenAttributes, params: &StegoParams) -> Result<f64> {
    let recovered = sh_stego::extract_scene(stego, params)?;
    Ok(recovered
        .iter()
        .zip(&hidden.sh_hidden)
        .flat_map(|(r, h)| {
            r.coeffs
                .iter()
                .flatten()
                .zip(h.coeffs.iter().flatten())
                .map(|(&a, &b)| (a as f64 - b as f64).abs())
        })
        .fold(0.0, f64::max))
}

/// Embeds with an already trained opacity mapping.
pub fn embed_with_model(
    cover: &GaussianScene,
    hidden: &HiddenAttributes,
    params: &StegoParams,
    tau: f64,
    set: &IndexSet,
    model: Autoencoder,
    train: TrainReport,
) -> Result<Embedded> {
    check_hidden(cover, hidden)?;
    let stego = sh_stego::embed_scene(cover, &hidden.sh_hidden, params)?;
    let diagnostics = EmbedDiagnostics {
        selected: set.len(),
        max_coeff_error: max_coeff_error(&stego, hidden, params)?,
        train,
    };
    let key = StegoKey::new(params, tau, set.coords.clone(), model);
    Ok(Embedded { stego, key, diagnostics })
}

pub fn embed(cover: &GaussianScene, hidden: &HiddenAttributes, cfg: &EmbedConfig) -> Result<Embedded> {
    let (set, model, report) = train_opacity(cover, hidden, cfg.tau, &cfg.train)?;
    embed_with_model(cover, hidden, &cfg.params, cfg.tau, &set, model, report)
}

#[derive(Debug, Clone)]
pub struct Extracted {
    pub scene: GaussianScene,
    /// For each key entry, the stego index it matched.
    pub matches: Vec<Option<usize>>,
}

impl Extracted {
    pub fn matched(&self) -> usize {
        self.matches.iter().filter(|m| m.is_some()).count()
    }
}

/// Rebuilds the hidden scene from the key entries that still exist in `stego`.
pub fn extract_with(
    stego: &GaussianScene,
    coords: &[[f32; 3]],
    model: &Autoencoder,
    params: &StegoParams,
    keep: OrderMask,
) -> Result<Extracted> {
    stego.validate()?;
    let matches = opacity::match_coordinates(coords, stego)?;
    if matches.iter().all(Option::is_none) {
        return Err(Error::NoCoordinatesMatched);
    }
    let cover_op: Vec<Option<f32>> = matches
        .iter()
        .map(|m| m.map(|i| sigmoid(stego.raw_opacities[i])))
        .collect();
    let alpha = opacity::map_opacity_partial(model, &cover_op);
    let mut scene = GaussianScene::with_capacity(matches.len());
    for (m, a) in matches.iter().zip(&alpha) {
        if let (Some(i), Some(a)) = (*m, *a) {
            let sh = filter_orders(&sh_stego::extract_block(&stego.sh[i], params)?, keep);
            scene.push(
                stego.positions[i],
                stego.normals[i],
                stego.rotations[i],
                stego.log_scales[i],
                logit(a),
                sh,
            );
        }
    }
    Ok(Extracted { scene, matches })
}

/// Extraction driven by a key; `max_order` keeps SH orders `0..=max_order`.
pub fn extract(stego: &GaussianScene, key: &StegoKey, max_order: Option<usize>) -> Result<Extracted> {
    let keep = max_order.map_or(OrderMask::ALL, OrderMask::up_to);
    extract_with(stego, &key.coords, &key.model, &key.stego_params()?, keep)
}
