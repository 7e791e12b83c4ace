use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use g4dc::codec::{decode_scene, size_report, Encoder};
use g4dc::eval::{synthetic_scene, GeneratorConfig, ProbeConfig};
use g4dc::harness::{
    ablate_opacity, ablate_wavelet, opacity_csv, report_csv, sweep, sweep_csv, wavelet_csv,
};
use g4dc::model::{load_scene, save_scene, scene_digest, GaussianScene};
use g4dc::preset::{resolve, LevelPreset, Overrides};
use g4dc::{Error, Result};

#[derive(Parser)]
#[command(name = "g4c", version, about = "Dynamic Gaussian scene codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene file.
    Gen(GenArgs),
    /// Compress a scene into a .g4c container.
    Encode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        preset: PresetArgs,
        /// Write the size table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Reconstruct a scene file from a container.
    Decode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the per-section size table of a container.
    Inspect {
        input: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Encode, decode and evaluate a list of levels.
    Sweep {
        input: PathBuf,
        /// Comma-separated levels.
        #[arg(long, value_delimiter = ',', default_values_t = [1u8, 2, 3, 4, 5, 6])]
        levels: Vec<u8>,
        #[command(flatten)]
        preset: PresetArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also write each level's container here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Compare opacity quantization policies at one level.
    AblateOpacity {
        input: PathBuf,
        #[command(flatten)]
        preset: PresetArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare trajectory decomposition depths at one level.
    AblateWavelet {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0u8, 1, 2, 3])]
        depths: Vec<u8>,
        #[command(flatten)]
        preset: PresetArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SceneKind {
    Standard,
    SmoothOrbits,
    Events,
}

#[derive(Args)]
struct GenArgs {
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "standard")]
    kind: SceneKind,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long = "static")]
    n_static: Option<usize>,
    #[arg(long = "dynamic")]
    n_dynamic: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct PresetArgs {
    #[arg(long, default_value_t = 1)]
    level: u8,
    /// Seeds codebook initialization and probe placement.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    wavelet_levels: Option<u8>,
    #[arg(long, conflicts_with = "wavelet_levels")]
    no_wavelet: bool,
    #[arg(long)]
    lambda_r: Option<f64>,
    #[arg(long)]
    codebook_size: Option<usize>,
    /// TOML file overriding preset fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl PresetArgs {
    fn overrides(&self) -> Result<Overrides> {
        let file = match &self.config {
            Some(p) => Overrides::load(p)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            seed: self.seed,
            wavelet_levels: if self.no_wavelet { Some(0) } else { self.wavelet_levels },
            keep_levels: self.no_wavelet.then_some(0),
            lambda_r: self.lambda_r,
            codebook_size: self.codebook_size,
            ..Overrides::default()
        };
        Ok(file.merged(&flags))
    }

    fn preset(&self, level: u8) -> Result<LevelPreset> {
        resolve(level, &self.overrides()?)
    }

    fn encoder(&self, scene: GaussianScene, seed: u64) -> Result<Encoder> {
        let probes = ProbeConfig {
            seed,
            ..ProbeConfig::default()
        };
        Encoder::new(scene, probes)
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, text)?;
            info!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("G4C_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Validation(format!("G4C_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Validation(format!("thread pool: {e}")))
}

fn gen(a: &GenArgs) -> Result<()> {
    let mut cfg = match a.kind {
        SceneKind::Standard => GeneratorConfig::standard(),
        SceneKind::SmoothOrbits => GeneratorConfig::smooth_orbits(),
        SceneKind::Events => GeneratorConfig::events(),
    };
    cfg.n_static = a.n_static.unwrap_or(cfg.n_static);
    cfg.n_dynamic = a.n_dynamic.unwrap_or(cfg.n_dynamic);
    cfg.n_frames = a.frames.unwrap_or(cfg.n_frames);
    let scene = synthetic_scene(&cfg, a.seed)?;
    save_scene(&a.output, &scene)?;
    println!(
        "{} static + {} dynamic, {} frames, {} keyframes",
        scene.statics.len(),
        scene.dynamics.len(),
        scene.timestamps.len(),
        scene.keyframe_count()
    );
    println!("digest {}", scene_digest(&scene));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Gen(a) => gen(&a),
        Command::Encode {
            input,
            output,
            preset,
            csv,
        } => {
            let p = preset.preset(preset.level)?;
            let enc = preset.encoder(load_scene(&input)?, p.codec.seed)?;
            let e = enc.encode(&p.codec)?;
            std::fs::write(&output, &e.bytes)?;
            println!("level {} -> {}", p.level, output.display());
            println!("{}", e.report);
            if let Some(path) = csv {
                write_or_print(Some(&path), &report_csv(&e.report))?;
            }
            Ok(())
        }
        Command::Decode { input, output } => {
            let scene = decode_scene(&std::fs::read(&input)?)?;
            save_scene(&output, &scene)?;
            println!(
                "{} static + {} dynamic -> {}",
                scene.statics.len(),
                scene.dynamics.len(),
                output.display()
            );
            println!("digest {}", scene_digest(&scene));
            Ok(())
        }
        Command::Inspect { input, csv } => {
            let r = size_report(&std::fs::read(&input)?)?;
            println!("{r}");
            if let Some(path) = csv {
                write_or_print(Some(&path), &report_csv(&r))?;
            }
            Ok(())
        }
        Command::Sweep {
            input,
            levels,
            preset,
            csv,
            out_dir,
        } => {
            let presets = levels
                .iter()
                .map(|&l| preset.preset(l))
                .collect::<Result<Vec<_>>>()?;
            let seed = presets.first().map(|p| p.codec.seed).unwrap_or(42);
            let enc = preset.encoder(load_scene(&input)?, seed)?;
            let entries = sweep(&enc, &presets)?;
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(&dir)?;
                for e in &entries {
                    std::fs::write(dir.join(format!("level{}.g4c", e.row.level)), &e.container)?;
                }
            }
            let rows: Vec<_> = entries.into_iter().map(|e| e.row).collect();
            write_or_print(csv.as_deref(), &sweep_csv(&rows))
        }
        Command::AblateOpacity { input, preset, csv } => {
            let p = preset.preset(preset.level)?;
            let enc = preset.encoder(load_scene(&input)?, p.codec.seed)?;
            write_or_print(csv.as_deref(), &opacity_csv(&ablate_opacity(&enc, &p)?))
        }
        Command::AblateWavelet {
            input,
            depths,
            preset,
            csv,
        } => {
            let p = preset.preset(preset.level)?;
            let enc = preset.encoder(load_scene(&input)?, p.codec.seed)?;
            write_or_print(csv.as_deref(), &wavelet_csv(&ablate_wavelet(&enc, &p, &depths)?))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
