//! Hide the view-dependent color and opacity of one Gaussian splatting scene
//! inside the SH coefficients of another, keeping the asset schema intact.

pub mod attacks;
pub mod error;
pub mod experiments;
pub mod fixedpoint;
pub mod image;
pub mod key;
pub mod metrics;
pub mod opacity;
pub mod pipeline;
pub mod render;
pub mod scene;
pub mod sh_stego;
pub mod synth;

pub use error::{Error, Result};
pub use fixedpoint::QuantParams;
pub use image::ImageBuffer;
pub use key::StegoKey;
pub use render::{render, Camera};
pub use scene::{GaussianScene, HiddenAttributes, ShBlock};
pub use sh_stego::StegoParams;
pub use synth::SynthConfig;
