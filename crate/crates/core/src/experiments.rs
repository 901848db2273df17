//! Ablation sweeps over synthetic scenes: shift length and threshold,
//! graded versus uniform budgets under noise, and pruning robustness.

use std::fmt::Write as _;

use crate::attacks::{self, AttackConfig};
use crate::error::Result;
use crate::fixedpoint::QuantParams;
use crate::image::ImageBuffer;
use crate::metrics;
use crate::opacity::{Autoencoder, IndexSet, TrainConfig, TrainReport};
use crate::pipeline::{self, Embedded};
use crate::render::{render, Camera};
use crate::scene::{GaussianScene, HiddenAttributes};
use crate::sh_stego::{OrderMask, StegoParams};
use crate::synth::{default_camera, gen_scene_pair, hidden_reference, SynthConfig};

pub const SWEEP_KS: [u32; 5] = [10, 13, 17, 20, 22];
pub const SWEEP_TAUS: [f64; 4] = [0.0, 0.1, 0.25, 0.3];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub synth: SynthConfig,
    pub width: usize,
    pub height: usize,
    pub background: [f32; 3],
    pub gamma: u32,
    pub c_max: f64,
    pub k: u32,
    pub tau: f64,
    pub train: TrainConfig,
    /// Highest SH order kept at extraction.
    pub max_order: Option<usize>,
    /// Scene seeds; each replaces `synth.seed` in turn.
    pub seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            synth: SynthConfig::default(),
            width: 256,
            height: 256,
            background: [0.0; 3],
            gamma: 32,
            c_max: 8.0,
            k: 17,
            tau: 0.25,
            train: TrainConfig::default(),
            max_order: None,
            seeds: vec![0],
        }
    }
}

impl ExperimentConfig {
    fn quant(&self) -> Result<QuantParams> {
        QuantParams::new(self.gamma, self.c_max)
    }

    fn keep(&self) -> OrderMask {
        self.max_order.map_or(OrderMask::ALL, OrderMask::up_to)
    }
}

/// A generated scene pair with its reference renders.
pub struct Bench {
    pub cover: GaussianScene,
    pub hidden: HiddenAttributes,
    pub reference: GaussianScene,
    pub camera: Camera,
    pub background: [f32; 3],
    pub cover_image: ImageBuffer,
    pub reference_image: ImageBuffer,
}

impl Bench {
    pub fn new(synth: &SynthConfig, width: usize, height: usize, background: [f32; 3]) -> Result<Self> {
        let (cover, hidden) = gen_scene_pair(synth)?;
        let reference = hidden_reference(&cover, &hidden, synth.noise_floor);
        let camera = default_camera(width, height);
        let cover_image = render(&cover, &camera, background)?.image;
        let reference_image = render(&reference, &camera, background)?.image;
        Ok(Self {
            cover,
            hidden,
            reference,
            camera,
            background,
            cover_image,
            reference_image,
        })
    }

    pub fn render(&self, scene: &GaussianScene) -> Result<ImageBuffer> {
        Ok(render(scene, &self.camera, self.background)?.image)
    }

    /// PSNR of a render of `scene` against the cover render.
    pub fn cover_psnr(&self, scene: &GaussianScene) -> Result<f64> {
        metrics::psnr(&self.render(scene)?, &self.cover_image)
    }

    /// PSNR of a render of `scene` against the hidden reference render.
    pub fn hidden_psnr(&self, scene: &GaussianScene) -> Result<f64> {
        metrics::psnr(&self.render(scene)?, &self.reference_image)
    }
}

/// Opacity mapping trained once per scene and threshold.
pub struct Trained {
    pub set: IndexSet,
    pub model: Autoencoder,
    pub report: TrainReport,
}

impl Trained {
    pub fn new(bench: &Bench, tau: f64, train: &TrainConfig) -> Result<Self> {
        let (set, model, report) = pipeline::train_opacity(&bench.cover, &bench.hidden, tau, train)?;
        Ok(Self { set, model, report })
    }

    pub fn embed(&self, bench: &Bench, params: &StegoParams, tau: f64) -> Result<Embedded> {
        pipeline::embed_with_model(&bench.cover, &bench.hidden, params, tau, &self.set, self.model.clone(), self.report)
    }

    pub fn extract(&self, stego: &GaussianScene, params: &StegoParams, keep: OrderMask) -> Result<GaussianScene> {
        Ok(pipeline::extract_with(stego, &self.set.coords, &self.model, params, keep)?.scene)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub k: u32,
    pub tau: f64,
    pub selected: usize,
    pub opacity_mse: f64,
    pub stego_psnr: f64,
    pub hidden_psnr: f64,
}

/// Every `(k, τ)` combination on one scene; the opacity mapping is trained once per `τ`.
pub fn sweep_k_tau(cfg: &ExperimentConfig, ks: &[u32], taus: &[f64]) -> Result<Vec<SweepRow>> {
    let bench = Bench::new(&cfg.synth, cfg.width, cfg.height, cfg.background)?;
    let quant = cfg.quant()?;
    let mut rows = Vec::with_capacity(ks.len() * taus.len());
    for &tau in taus {
        let trained = Trained::new(&bench, tau, &cfg.train)?;
        for &k in ks {
            let params = StegoParams::new(k, quant)?;
            let out = trained.embed(&bench, &params, tau)?;
            let hidden = trained.extract(&out.stego, &params, cfg.keep())?;
            rows.push(SweepRow {
                k,
                tau,
                selected: trained.set.len(),
                opacity_mse: trained.report.final_mse,
                stego_psnr: bench.cover_psnr(&out.stego)?,
                hidden_psnr: bench.hidden_psnr(&hidden)?,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = String::from("k\ttau\tselected\topacity_mse\tstego_psnr\thidden_psnr\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{:.2}\t{}\t{:.3e}\t{:.3}\t{:.3}",
            r.k, r.tau, r.selected, r.opacity_mse, r.stego_psnr, r.hidden_psnr
        );
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRow {
    pub seed: u64,
    pub sigma: f64,
    pub graded_psnr: f64,
    pub uniform_psnr: f64,
}

/// Graded budgets against a uniform `k + 1` budget under equal SH noise.
pub fn noise_ablation(cfg: &ExperimentConfig, sigmas: &[f64]) -> Result<Vec<NoiseRow>> {
    let quant = cfg.quant()?;
    let graded = StegoParams::new(cfg.k, quant)?;
    let uniform = StegoParams::uniform(cfg.k + 1, quant)?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let bench = Bench::new(&SynthConfig { seed, ..cfg.synth.clone() }, cfg.width, cfg.height, cfg.background)?;
        let trained = Trained::new(&bench, cfg.tau, &cfg.train)?;
        let graded_stego = trained.embed(&bench, &graded, cfg.tau)?.stego;
        let uniform_stego = trained.embed(&bench, &uniform, cfg.tau)?.stego;
        for &sigma in sigmas {
            let attack = AttackConfig::ShNoise { sigma, seed };
            let g = trained.extract(&attack.apply(&graded_stego)?, &graded, cfg.keep())?;
            let u = trained.extract(&attack.apply(&uniform_stego)?, &uniform, cfg.keep())?;
            rows.push(NoiseRow {
                seed,
                sigma,
                graded_psnr: bench.hidden_psnr(&g)?,
                uniform_psnr: bench.hidden_psnr(&u)?,
            });
        }
    }
    Ok(rows)
}

pub fn noise_table(rows: &[NoiseRow]) -> String {
    let mut s = String::from("seed\tsigma\tgraded_psnr\tuniform_psnr\n");
    for r in rows {
        let _ = writeln!(s, "{}\t{}\t{:.3}\t{:.3}", r.seed, r.sigma, r.graded_psnr, r.uniform_psnr);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneMode {
    Sequential,
    Random,
}

impl std::fmt::Display for PruneMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PruneMode::Sequential => "sequential",
            PruneMode::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneRow {
    pub seed: u64,
    pub mode: PruneMode,
    pub ratio: f64,
    /// Key entries still present after the attack.
    pub matched: usize,
    pub baseline_psnr: f64,
    pub psnr: f64,
}

impl PruneRow {
    pub fn drop_db(&self) -> f64 {
        self.baseline_psnr - self.psnr
    }
}

/// Extracted-hidden PSNR after each pruning attack, next to the unattacked value.
pub fn prune_experiment(cfg: &ExperimentConfig, modes: &[PruneMode], ratios: &[f64]) -> Result<Vec<PruneRow>> {
    let params = StegoParams::new(cfg.k, cfg.quant()?)?;
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let bench = Bench::new(&SynthConfig { seed, ..cfg.synth.clone() }, cfg.width, cfg.height, cfg.background)?;
        let trained = Trained::new(&bench, cfg.tau, &cfg.train)?;
        let stego = trained.embed(&bench, &params, cfg.tau)?.stego;
        let baseline_psnr = bench.hidden_psnr(&trained.extract(&stego, &params, cfg.keep())?)?;
        for &mode in modes {
            for &ratio in ratios {
                let attacked = match mode {
                    PruneMode::Sequential => attacks::prune_sequential(&stego, ratio)?,
                    PruneMode::Random => attacks::prune_random(&stego, ratio, seed)?,
                };
                let ex = pipeline::extract_with(&attacked, &trained.set.coords, &trained.model, &params, cfg.keep())?;
                rows.push(PruneRow {
                    seed,
                    mode,
                    ratio,
                    matched: ex.matched(),
                    baseline_psnr,
                    psnr: bench.hidden_psnr(&ex.scene)?,
                });
            }
        }
    }
    Ok(rows)
}

pub fn prune_table(rows: &[PruneRow]) -> String {
    let mut s = String::from("seed\tmode\tratio\tmatched\tbaseline_psnr\tpsnr\tdrop_db\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{:.2}\t{}\t{:.3}\t{:.3}\t{:.3}",
            r.seed,
            r.mode,
            r.ratio,
            r.matched,
            r.baseline_psnr,
            r.psnr,
            r.drop_db()
        );
    }
    s
}
