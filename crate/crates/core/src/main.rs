use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use splatstego::attacks::AttackConfig;
use splatstego::experiments::{self, ExperimentConfig, PruneMode};
use splatstego::opacity::{TrainConfig, DEFAULT_TAU};
use splatstego::pipeline::{self, EmbedConfig};
use splatstego::scene::{read_scene, write_scene};
use splatstego::sh_stego::DEFAULT_K;
use splatstego::synth::{self, SynthConfig};
use splatstego::{metrics, render, Camera, ImageBuffer, QuantParams, StegoKey, StegoParams};

#[derive(Parser)]
#[command(name = "splatstego", version, about = "Hide one Gaussian splatting scene inside another")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cover asset and a matching hidden asset.
    Gen(GenArgs),
    /// Embed a hidden scene into a cover asset, writing a stego asset and a key.
    Embed(EmbedArgs),
    /// Recover the hidden scene from a stego asset and its key.
    Extract(ExtractArgs),
    /// Render an asset to a binary PPM image.
    Render(RenderArgs),
    /// Apply a pruning or noise attack to an asset.
    Attack(AttackArgs),
    /// Compare two PPM images.
    Verify(VerifyArgs),
    /// Run an ablation sweep on synthetic scenes and print a table.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Text config with `key = value` lines; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SynthArgs {
    fn load(&self) -> Result<SynthConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                SynthConfig::parse(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => SynthConfig::default(),
        };
        if let Some(n) = self.count {
            cfg.count = n;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    synth: SynthArgs,
    /// Cover asset to write.
    #[arg(long)]
    out: PathBuf,
    /// Hidden asset to write (same positions as the cover).
    #[arg(long)]
    hidden_out: Option<PathBuf>,
}

#[derive(Args)]
struct StegoFlags {
    #[arg(long, default_value_t = DEFAULT_K)]
    k: u32,
    #[arg(long, default_value_t = 32)]
    gamma: u32,
    #[arg(long, default_value_t = 8.0)]
    cmax: f64,
}

impl StegoFlags {
    fn params(&self) -> Result<StegoParams> {
        Ok(StegoParams::new(self.k, QuantParams::new(self.gamma, self.cmax)?)?)
    }
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    cover: PathBuf,
    /// Hidden asset sharing the cover's positions.
    #[arg(long, conflicts_with = "synth_config")]
    hidden: Option<PathBuf>,
    /// Synthesize the hidden scene against the cover from this config instead.
    #[arg(long)]
    synth_config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    key: PathBuf,
    #[command(flatten)]
    stego: StegoFlags,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Seed for the opacity network (and the synthesized hidden scene).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    epochs: usize,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    stego: PathBuf,
    #[arg(long)]
    key: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Keep SH orders 0..=max-order only.
    #[arg(long)]
    max_order: Option<usize>,
}

#[derive(Args)]
struct ViewArgs {
    /// Camera text file; defaults to the synthetic framing camera.
    #[arg(long)]
    camera: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    /// Background color as `r,g,b` in [0, 1].
    #[arg(long, default_value = "0,0,0", value_parser = parse_rgb)]
    background: [f32; 3],
}

impl ViewArgs {
    fn camera(&self) -> Result<Camera> {
        match &self.camera {
            Some(p) => Camera::read(p).with_context(|| format!("reading camera {}", p.display())),
            None => Ok(synth::default_camera(self.width, self.height)),
        }
    }
}

fn parse_rgb(s: &str) -> std::result::Result<[f32; 3], String> {
    let v: Vec<f32> = s
        .split(',')
        .map(|p| p.trim().parse::<f32>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [r, g, b] if v.iter().all(|x| (0.0..=1.0).contains(x)) => Ok([*r, *g, *b]),
        _ => Err(format!("expected three values in [0, 1], got `{s}`")),
    }
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    view: ViewArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackMode {
    SeqPrune,
    RandPrune,
    Noise,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    mode: AttackMode,
    #[arg(long, default_value_t = 0.25)]
    ratio: f64,
    #[arg(long, default_value_t = 0.005)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    a: PathBuf,
    b: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    KTau,
    Noise,
    Prune,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    kind: SweepKind,
    #[command(flatten)]
    synth: SynthArgs,
    #[command(flatten)]
    stego: StegoFlags,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Scene seeds for the noise and pruning sweeps.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    /// Noise level for the noise sweep; all protocol levels when omitted.
    #[arg(long)]
    sigma: Option<f64>,
    /// Pruning ratio for the pruning sweep; all protocol ratios when omitted.
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    max_order: Option<usize>,
    #[command(flatten)]
    view: ViewArgs,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_asset(p: &Path) -> Result<splatstego::GaussianScene> {
    read_scene(p).with_context(|| format!("reading {}", p.display()))
}

fn write_asset(p: &Path, scene: &splatstego::GaussianScene) -> Result<()> {
    write_scene(p, scene).with_context(|| format!("writing {}", p.display()))
}

fn gen(args: &GenArgs) -> Result<()> {
    let cfg = args.synth.load()?;
    let (cover, hidden) = synth::gen_scene_pair(&cfg)?;
    write_asset(&args.out, &cover)?;
    if let Some(p) = &args.hidden_out {
        write_asset(p, &hidden.to_scene(&cover, |_| true))?;
    }
    println!("wrote {} primitives", cover.len());
    Ok(())
}

fn embed(args: &EmbedArgs) -> Result<()> {
    let cover = read_asset(&args.cover)?;
    let hidden = match (&args.hidden, &args.synth_config) {
        (Some(p), None) => pipeline::hidden_from_scene(&cover, &read_asset(p)?)
            .with_context(|| format!("hidden asset {} does not fit the cover", p.display()))?,
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let cfg = SynthConfig::parse(&text).with_context(|| format!("parsing {}", p.display()))?;
            synth::gen_hidden(&cover, &cfg)?
        }
        _ => bail!("give exactly one of --hidden or --synth-config"),
    };
    let cfg = EmbedConfig {
        params: args.stego.params()?,
        tau: args.tau,
        train: TrainConfig {
            max_epochs: args.epochs,
            seed: args.seed,
            ..Default::default()
        },
    };
    let out = pipeline::embed(&cover, &hidden, &cfg)?;
    write_asset(&args.out, &out.stego)?;
    out.key.write(&args.key).with_context(|| format!("writing key {}", args.key.display()))?;
    println!("{}", out.diagnostics);
    Ok(())
}

fn extract(args: &ExtractArgs) -> Result<()> {
    let stego = read_asset(&args.stego)?;
    let key = StegoKey::read(&args.key).with_context(|| format!("reading key {}", args.key.display()))?;
    let ex = pipeline::extract(&stego, &key, args.max_order)?;
    write_asset(&args.out, &ex.scene)?;
    println!("recovered {} of {} key primitives", ex.matched(), ex.matches.len());
    Ok(())
}

fn render_cmd(args: &RenderArgs) -> Result<()> {
    let scene = read_asset(&args.scene)?;
    let out = render(&scene, &args.view.camera()?, args.view.background)?;
    out.image
        .write_ppm(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn attack(args: &AttackArgs) -> Result<()> {
    let scene = read_asset(&args.input)?;
    let cfg = match args.mode {
        AttackMode::SeqPrune => AttackConfig::SequentialPrune { ratio: args.ratio },
        AttackMode::RandPrune => AttackConfig::RandomPrune {
            ratio: args.ratio,
            seed: args.seed,
        },
        AttackMode::Noise => AttackConfig::ShNoise {
            sigma: args.sigma,
            seed: args.seed,
        },
    };
    let out = cfg.apply(&scene)?;
    write_asset(&args.out, &out)?;
    println!("{} of {} primitives remain", out.len(), scene.len());
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<()> {
    let a = ImageBuffer::read_ppm(&args.a).with_context(|| format!("reading {}", args.a.display()))?;
    let b = ImageBuffer::read_ppm(&args.b).with_context(|| format!("reading {}", args.b.display()))?;
    println!("{}", metrics::compare(&a, &b)?);
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        synth: args.synth.load()?,
        width: args.view.width,
        height: args.view.height,
        background: args.view.background,
        gamma: args.stego.gamma,
        c_max: args.stego.cmax,
        k: args.stego.k,
        tau: args.tau,
        max_order: args.max_order,
        seeds: args.seeds.clone(),
        ..Default::default()
    };
    let table = match args.kind {
        SweepKind::KTau => experiments::sweep_table(&experiments::sweep_k_tau(
            &cfg,
            &experiments::SWEEP_KS,
            &experiments::SWEEP_TAUS,
        )?),
        SweepKind::Noise => {
            let sigmas = args.sigma.map_or(splatstego::attacks::NOISE_LEVELS.to_vec(), |s| vec![s]);
            experiments::noise_table(&experiments::noise_ablation(&cfg, &sigmas)?)
        }
        SweepKind::Prune => {
            let ratios = args.ratio.map_or(splatstego::attacks::PRUNE_RATIOS.to_vec(), |r| vec![r]);
            experiments::prune_table(&experiments::prune_experiment(
                &cfg,
                &[PruneMode::Sequential, PruneMode::Random],
                &ratios,
            )?)
        }
    };
    print!("{table}");
    if let Some(p) = &args.out {
        std::fs::write(p, &table).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Embed(a) => embed(a),
        Command::Extract(a) => extract(a),
        Command::Render(a) => render_cmd(a),
        Command::Attack(a) => attack(a),
        Command::Verify(a) => verify(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
